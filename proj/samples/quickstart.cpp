// Minimal end-to-end run on a small synthetic table: ingest, train the GBT
// baseline and a short SAE-LSTM, print both reports and a family ranking.

#include <iostream>

#include "ransae/analytics.hpp"
#include "ransae/pipeline.hpp"
#include "ransae/synthetic.hpp"

using namespace ransae;

int main()
{
    const auto raw = synthetic::generate(synthetic::SynthConfig{}.scaled(0.01));

    pipeline::PipelineConfig cfg;
    cfg.sae.epochs = 50;
    cfg.lstm.epochs = 60;
    cfg.apply_seed();
    const auto art = pipeline::ingest(raw, cfg);
    std::cout << pipeline::ingest_report_text(art) << "\n";

    const auto k = art.prep.maps.category_count(art.prep.schema.target_column);
    const auto train = normalize(art.train, art.prep.stats).features;

    pipeline::ModelBundle gbt_bundle;
    gbt_bundle.kind = pipeline::ModelKind::gbt;
    gbt_bundle.prep = art.prep;
    auto params = cfg.gbt;
    params.k_classes = k;
    gbt_bundle.gbt = gbt::train_gbt(train, params);
    const auto gbt_eval = pipeline::evaluate(gbt_bundle, art.test);
    std::cout << "GBT\n" << metrics::report_text(gbt_eval.report) << "\n";

    pipeline::ModelBundle lstm_bundle;
    lstm_bundle.kind = pipeline::ModelKind::sae_lstm;
    lstm_bundle.prep = art.prep;
    lstm_bundle.sae = sae::build_stack(train.x, cfg.sae);
    lstm_bundle.lstm = lstm::train_classifier(sae::encode(*lstm_bundle.sae, train.x), train.y, k, cfg.lstm).model;
    const auto lstm_eval = pipeline::evaluate(lstm_bundle, art.test);
    std::cout << "SAE-LSTM\n" << metrics::report_text(lstm_eval.report) << "\n";

    std::cout << metrics::comparison_text(metrics::compare(lstm_eval.report, gbt_eval.report, "sae-lstm", "gbt"))
              << "\n";

    const auto fin = analytics::financial_report(art.cleaned);
    std::cout << "top families by mean USD\n";
    for (const auto& f : analytics::rank_families(fin, analytics::RankKey::mean_usd, 3)) {
        std::cout << "  " << f.family << " " << format_fixed(f.mean_usd, 2) << "\n";
    }
    return 0;
}
