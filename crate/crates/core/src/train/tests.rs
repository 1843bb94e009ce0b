//! Training-loop, checkpoint, and grid-search tests.

use crate::data::{make_windows, synth_generate, NormalizationStats, SynthSpec, WindowOptions};
use crate::error::Error;
use crate::model::{ModelConfig, TsformerModel};
use crate::train::checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
use crate::train::grid::{grid_search, GridSpec};
use crate::train::trainer::{
    clip_global_norm, forecast_window, train, validation_mae, TrainConfig,
};

fn tiny_config(feature_dim: usize) -> ModelConfig {
    ModelConfig {
        encoder_input_length: 7,
        decoder_input_length: 5,
        forecast_horizon: 1,
        d_model: 8,
        heads: 2,
        encoder_layers: 1,
        decoder_layers: 1,
        ffn_dim: 16,
        dropout: 0.0,
        feature_dim,
    }
}

struct Fixture {
    config: ModelConfig,
    stats: NormalizationStats,
    train: Vec<crate::data::WindowSample>,
    val: Vec<crate::data::WindowSample>,
}

fn fixture(days: usize, seed: u64) -> Fixture {
    let spec = SynthSpec {
        days: days.max(400),
        seed,
        ..SynthSpec::default()
    };
    let dataset = synth_generate(&spec).unwrap();
    let dataset = dataset.slice(0, days).unwrap();
    let stats = NormalizationStats::fit(&dataset);
    let config = tiny_config(dataset.schema.feature_dim());
    let windows = make_windows(&dataset, &config, &stats, &WindowOptions::default()).unwrap();
    let split = windows.len() * 3 / 4;
    let (train, val) = windows.split_at(split.max(1).min(windows.len() - 1));
    Fixture {
        config,
        stats,
        train: train.to_vec(),
        val: val.to_vec(),
    }
}

#[test]
fn single_window_overfits_to_tiny_loss() {
    let fx = fixture(20, 7);
    let one = &fx.train[..1];
    let mut model = TsformerModel::new(fx.config.clone(), 1).unwrap();
    let cfg = TrainConfig {
        learning_rate: 1e-2,
        batch_size: 1,
        max_epochs: 1500,
        patience: 0,
        grad_clip_norm: None,
        seed: 1,
        loss_on_overlap: true,
    };
    let history = train(&mut model, one, &[], &fx.stats, &cfg).unwrap();
    let last = history.epochs.last().unwrap();
    assert!(
        last.train_loss < 1e-3,
        "expected near-zero loss on a memorized window, got {}",
        last.train_loss
    );
}

#[test]
fn zero_patience_runs_exactly_max_epochs() {
    let fx = fixture(20, 3);
    let mut model = TsformerModel::new(fx.config.clone(), 2).unwrap();
    let cfg = TrainConfig {
        max_epochs: 4,
        patience: 0,
        seed: 5,
        ..TrainConfig::default()
    };
    let history = train(&mut model, &fx.train, &fx.val, &fx.stats, &cfg).unwrap();
    assert_eq!(history.epochs.len(), 4);
    assert_eq!(
        history.epochs.iter().map(|e| e.epoch).collect::<Vec<_>>(),
        vec![1, 2, 3, 4]
    );
    assert!(history.best_epoch.is_some());
    assert!(history.best_val_mae.is_some());
}

#[test]
fn patience_stops_before_max_epochs_when_validation_stalls() {
    let fx = fixture(24, 11);
    let mut model = TsformerModel::new(fx.config.clone(), 2).unwrap();
    let cfg = TrainConfig {
        // updates below one ulp of the parameters: validation MAE never improves
        learning_rate: 1e-18,
        max_epochs: 50,
        patience: 3,
        seed: 5,
        ..TrainConfig::default()
    };
    let history = train(&mut model, &fx.train, &fx.val, &fx.stats, &cfg).unwrap();
    // stops exactly `patience` epochs after the last improvement
    let last = history.epochs.last().unwrap().epoch;
    assert!(last < 50, "early stopping never triggered");
    assert_eq!(last, history.best_epoch.unwrap() + 3);
}

#[test]
fn training_is_deterministic_for_a_fixed_seed() {
    let fx = fixture(22, 9);
    let cfg = TrainConfig {
        max_epochs: 3,
        patience: 0,
        seed: 13,
        ..TrainConfig::default()
    };
    let mut run = || {
        let mut model = TsformerModel::new(fx.config.clone(), 4).unwrap();
        let history = train(&mut model, &fx.train, &fx.val, &fx.stats, &cfg).unwrap();
        let forecast = forecast_window(&model, &fx.val[0], &fx.stats).unwrap();
        (history, forecast)
    };
    let (h1, f1) = run();
    let (h2, f2) = run();
    assert_eq!(h1, h2);
    assert_eq!(f1, f2);
}

#[test]
fn low_learning_rate_descends_on_average() {
    let fx = fixture(30, 21);
    let mut model = TsformerModel::new(fx.config.clone(), 6).unwrap();
    let cfg = TrainConfig {
        learning_rate: 1e-4,
        max_epochs: 15,
        patience: 0,
        seed: 6,
        ..TrainConfig::default()
    };
    let history = train(&mut model, &fx.train, &fx.val, &fx.stats, &cfg).unwrap();
    let first = history.epochs.first().unwrap().train_loss;
    let last = history.epochs.last().unwrap().train_loss;
    assert!(
        last < first,
        "loss should fall from {first} over 15 small steps, got {last}"
    );
}

#[test]
fn best_parameters_are_restored_after_training() {
    let fx = fixture(24, 2);
    let mut model = TsformerModel::new(fx.config.clone(), 3).unwrap();
    let cfg = TrainConfig {
        max_epochs: 6,
        patience: 0,
        seed: 8,
        ..TrainConfig::default()
    };
    let history = train(&mut model, &fx.train, &fx.val, &fx.stats, &cfg).unwrap();
    let restored_mae = validation_mae(&model, &fx.val, &fx.stats).unwrap();
    assert!((restored_mae - history.best_val_mae.unwrap()).abs() < 1e-9);
}

#[test]
fn early_stopping_without_validation_windows_is_rejected() {
    let fx = fixture(20, 2);
    let mut model = TsformerModel::new(fx.config.clone(), 3).unwrap();
    let cfg = TrainConfig {
        patience: 5,
        ..TrainConfig::default()
    };
    let err = train(&mut model, &fx.train, &[], &fx.stats, &cfg).unwrap_err();
    assert!(matches!(err, Error::DataValidation(_)));
}

#[test]
fn clip_rescales_to_the_target_norm() {
    let mut grads = vec![vec![3.0, 0.0], vec![0.0, 4.0]];
    clip_global_norm(&mut grads, 1.0);
    let norm: f64 = grads
        .iter()
        .flat_map(|g| g.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    assert!((norm - 1.0).abs() < 1e-12);
    // direction is preserved
    assert!((grads[0][0] - 0.6).abs() < 1e-12);
    assert!((grads[1][1] - 0.8).abs() < 1e-12);
}

#[test]
fn clip_leaves_small_gradients_alone() {
    let mut grads = vec![vec![0.1, -0.2]];
    clip_global_norm(&mut grads, 1.0);
    assert_eq!(grads, vec![vec![0.1, -0.2]]);
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let fx = fixture(20, 17);
    let mut model = TsformerModel::new(fx.config.clone(), 5).unwrap();
    let cfg = TrainConfig {
        max_epochs: 2,
        patience: 0,
        seed: 1,
        ..TrainConfig::default()
    };
    let history = train(&mut model, &fx.train, &fx.val, &fx.stats, &cfg).unwrap();
    let meta = CheckpointMeta {
        epoch: history.best_epoch.unwrap(),
        best_val_mae: history.best_val_mae,
        seed: 1,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    save_checkpoint(&model, &fx.stats, &meta, &path).unwrap();
    let (loaded, stats, loaded_meta) = load_checkpoint(&path).unwrap();

    assert_eq!(loaded.config, model.config);
    assert_eq!(loaded_meta, meta);
    assert_eq!(stats.mins, fx.stats.mins);
    assert_eq!(stats.maxs, fx.stats.maxs);
    for (a, b) in loaded
        .params()
        .tensors()
        .iter()
        .zip(model.params().tensors())
    {
        assert_eq!(a.data(), b.data());
    }
    let f1 = forecast_window(&model, &fx.val[0], &fx.stats).unwrap();
    let f2 = forecast_window(&loaded, &fx.val[0], &stats).unwrap();
    assert_eq!(f1, f2);
}

#[test]
fn truncated_checkpoint_is_detected() {
    let fx = fixture(20, 17);
    let model = TsformerModel::new(fx.config.clone(), 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    save_checkpoint(&model, &fx.stats, &CheckpointMeta::default(), &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let cut = text.len() * 2 / 3;
    std::fs::write(&path, &text[..cut]).unwrap();
    let err = load_checkpoint(&path).unwrap_err();
    assert!(err.to_string().contains("truncated"), "{err}");
}

#[test]
fn checkpoint_with_wrong_version_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    std::fs::write(&path, "tsformer-checkpoint 99\n[end]\n").unwrap();
    let err = load_checkpoint(&path).unwrap_err();
    assert!(err.to_string().contains("version"), "{err}");
}

#[test]
fn checkpoint_with_tampered_shape_fails_the_audit() {
    let fx = fixture(20, 17);
    let model = TsformerModel::new(fx.config.clone(), 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    save_checkpoint(&model, &fx.stats, &CheckpointMeta::default(), &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    // Claim a transposed shape for the output head weight.
    let tampered = text.replace("[param output.w 8x1]", "[param output.w 1x8]");
    assert_ne!(text, tampered);
    std::fs::write(&path, tampered).unwrap();
    let err = load_checkpoint(&path).unwrap_err();
    assert!(matches!(err, Error::Checkpoint(_)), "{err}");
}

#[test]
fn grid_size_counts_the_cartesian_product() {
    let grid = GridSpec {
        d_model: vec![8, 16],
        learning_rate: vec![1e-3, 3e-3, 1e-2],
        ..GridSpec::default()
    };
    assert_eq!(grid.size(), 6);
    assert_eq!(GridSpec::default().size(), 1);
}

#[test]
fn grid_spec_parses_from_toml() {
    let grid = GridSpec::from_toml("d_model = [8, 16]\nlearning_rate = [0.001]\n").unwrap();
    assert_eq!(grid.d_model, vec![8, 16]);
    assert_eq!(grid.learning_rate, vec![1e-3]);
    assert!(grid.heads.is_empty());
}

#[test]
fn grid_search_ranks_by_validation_mae_with_failures_last() {
    let fx = fixture(22, 31);
    let base_train = TrainConfig {
        max_epochs: 2,
        patience: 0,
        seed: 40,
        ..TrainConfig::default()
    };
    // heads=3 does not divide d_model=8, so that point must fail.
    let grid = GridSpec {
        heads: vec![2, 3],
        learning_rate: vec![1e-3, 1e-2],
        ..GridSpec::default()
    };
    let results = grid_search(
        &grid,
        &fx.config,
        &base_train,
        &fx.train,
        &fx.val,
        &fx.stats,
    )
    .unwrap();
    assert_eq!(results.len(), 4);
    let ok: Vec<_> = results.iter().filter(|r| r.val_mae.is_some()).collect();
    let failed: Vec<_> = results.iter().filter(|r| r.val_mae.is_none()).collect();
    assert_eq!(ok.len(), 2);
    assert_eq!(failed.len(), 2);
    assert!(ok[0].val_mae.unwrap() <= ok[1].val_mae.unwrap());
    // failures carry a diagnostic and sort after every success
    for r in &failed {
        assert!(r.error.as_ref().unwrap().contains("divisible"));
        assert_eq!(r.point.config.heads, 3);
    }
    assert!(results[..2].iter().all(|r| r.val_mae.is_some()));
}
