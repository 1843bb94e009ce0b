//! Shared fixtures for the criterion benchmarks.

use tsformer_core::data::{
    make_windows, synth_generate, NormalizationStats, SynthSpec, WindowOptions, WindowSample,
};
use tsformer_core::model::{ModelConfig, TsformerModel};

/// Reference-configuration model plus windows from a 400-day synthetic set.
pub fn reference_fixture() -> (TsformerModel, Vec<WindowSample>, NormalizationStats) {
    let spec = SynthSpec {
        days: 400,
        seed: 1,
        ..SynthSpec::default()
    };
    let dataset = synth_generate(&spec).expect("synthetic dataset");
    let stats = NormalizationStats::fit(&dataset);
    let config = ModelConfig::reference(dataset.schema.feature_dim());
    let windows =
        make_windows(&dataset, &config, &stats, &WindowOptions::default()).expect("windows");
    let model = TsformerModel::new(config, 7).expect("model");
    (model, windows, stats)
}
