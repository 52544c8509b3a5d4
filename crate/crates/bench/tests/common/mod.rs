#![allow(dead_code)]

use tsgb_bench::{DatasetSpec, RunConfig, Task};
use tsgb_metrics::{EvaluatorConfig, MetricKind};
use tsgb_models::{ModelConfig, TrainerConfig, VaeConfig};

pub fn small_vae() -> ModelConfig {
    ModelConfig::Vae(VaeConfig { latent: 4, hidden: vec![32], ..Default::default() })
}

pub fn quick_trainer(epochs: usize) -> TrainerConfig {
    TrainerConfig { max_epochs: epochs, patience: epochs, batch_size: 32, ..Default::default() }
}

pub fn sine(task: Task, n: usize) -> RunConfig {
    let mut cfg = RunConfig::new(DatasetSpec::SineNd { n_samples: n, dims: 2, seed: 1 }, task, small_vae());
    cfg.trainer = quick_trainer(2);
    cfg.evaluator = EvaluatorConfig { epochs: 2, n_seeds: 1, hidden: 8, ..Default::default() };
    cfg.n_draws = 4;
    cfg
}

pub fn quick_synthesis() -> RunConfig {
    let mut cfg = sine(Task::Synthesis, 200);
    cfg.metrics = Some(vec![
        MetricKind::Wasserstein,
        MetricKind::SlicedWasserstein,
        MetricKind::DiscriminativeScore,
        MetricKind::PredictiveScore,
    ]);
    cfg
}
