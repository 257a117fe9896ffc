//! Teacher, scoring, selection, labeling, student, payload: the whole loop
//! on synthetic data.

use std::fmt;

use super::config::{Loss, SimConfig};
use super::generate::{generate, SimData, STREAM_BASELINE, STREAM_STUDENT, STREAM_TEACHER};
use super::train::{train_softmax, LinearModel, Targets, TrainParams};
use crate::codec::{analyze, SizeReport};
use crate::labeling::{
    average_soft_labels, dirichlet_mom, hard_labels, importance_weights_from, EmptyClassPolicy,
};
use crate::scoring::{energy, entropy};
use crate::selection::{
    KeepRatio, SelectionInput, SelectionResult, SelectionStrategy, StrategyRegistry,
};
use crate::{LogitMatrix, Result, ScoreVector};

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub seed: u64,
    pub strategy: String,
    pub keep_ratio: f64,
    pub teacher_acc: f64,
    pub student_acc: f64,
    /// Student trained on every reference row (`p = 1`).
    pub baseline_acc: f64,
    pub payload_bytes: u64,
    pub kept: usize,
    /// Share of kept rows drawn from distractor clusters.
    pub kept_distractor_share: f64,
}

impl SimReport {
    pub const CSV_HEADER: &'static str =
        "seed,strategy,p,teacher_acc,student_acc,baseline_acc,payload_bytes,kept,kept_distractor_share";

    pub fn csv_row(&self) -> String {
        let f = crate::table::format_f64;
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.seed,
            self.strategy,
            f(self.keep_ratio),
            f(self.teacher_acc),
            f(self.student_acc),
            f(self.baseline_acc),
            self.payload_bytes,
            self.kept,
            f(self.kept_distractor_share)
        )
    }
}

impl fmt::Display for SimReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "seed {}  {} p={}  teacher {:.2}%  student {:.2}%  baseline {:.2}%  payload {} B  ({} kept, {:.1}% distractors)",
            self.seed,
            self.strategy,
            self.keep_ratio,
            100.0 * self.teacher_acc,
            100.0 * self.student_acc,
            100.0 * self.baseline_acc,
            self.payload_bytes,
            self.kept,
            100.0 * self.kept_distractor_share
        )
    }
}

/// Generated data plus the fitted teacher and its view of the reference
/// pool. Selections and students are cheap to derive from it repeatedly.
#[derive(Debug, Clone)]
pub struct Bench {
    pub config: SimConfig,
    pub data: SimData,
    pub teacher: LinearModel,
    pub teacher_acc: f64,
    pub reference_logits: LogitMatrix,
    /// Energy first, then entropy, both at the configured temperature.
    pub scores: [ScoreVector; 2],
    pub pseudo_labels: Vec<u32>,
}

impl Bench {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let data = generate(config);
        let k = config.classes;
        let teacher = train_softmax(
            &data.target_train,
            k,
            &super::train::Targets::Hard(data.target_train.labels.clone()),
            None,
            &TrainParams {
                weight_decay: config.teacher_weight_decay,
                ..params(config, STREAM_TEACHER)
            },
        )?
        .model;
        let teacher_acc = teacher.accuracy(&data.target_test);
        let reference_logits = teacher.logits(&data.reference)?;
        let scores = [
            energy(&reference_logits, config.temperature)?,
            entropy(&reference_logits, config.temperature)?,
        ];
        let pseudo_labels = hard_labels(&reference_logits);
        Ok(Self {
            config: config.clone(),
            data,
            teacher,
            teacher_acc,
            reference_logits,
            scores,
            pseudo_labels,
        })
    }

    pub fn select(
        &self,
        keep: KeepRatio,
        strategy: &dyn SelectionStrategy,
    ) -> Result<SelectionResult> {
        let input = SelectionInput::scores(&self.scores)
            .with_labels(&self.pseudo_labels, self.config.classes);
        strategy.select(&input, keep)
    }

    /// Pseudo-labels shipped for `sel`.
    pub fn payload_labels(&self, sel: &SelectionResult) -> Vec<u32> {
        sel.kept().iter().map(|&i| self.pseudo_labels[i]).collect()
    }

    pub fn size_report(&self, sel: &SelectionResult) -> Result<SizeReport> {
        analyze(sel, &self.payload_labels(sel), self.config.classes)
    }

    /// Trains a student on the kept rows with the configured loss.
    pub fn train_student(&self, sel: &SelectionResult, stream: u64) -> Result<LinearModel> {
        let cfg = &self.config;
        let k = cfg.classes;
        let kept = sel.kept();
        let hard = self.payload_labels(sel);
        let rows = self.data.reference.subset(kept);
        let kept_logits = || -> Result<LogitMatrix> {
            let mut v = Vec::with_capacity(kept.len() * k);
            for &i in kept {
                v.extend_from_slice(self.reference_logits.row(i));
            }
            LogitMatrix::new(kept.len(), k, v)
        };
        let mut weights = None;
        let targets = match cfg.loss {
            Loss::HardCe => Targets::Hard(hard),
            Loss::WeightedCe => {
                let s: Vec<f64> = kept.iter().map(|&i| self.scores[0].scores()[i]).collect();
                weights = Some(importance_weights_from(&s, cfg.weight_temperature)?);
                Targets::Hard(hard)
            }
            Loss::PrototypeKl => {
                let protos = average_soft_labels(
                    &kept_logits()?,
                    &hard,
                    cfg.temperature,
                    EmptyClassPolicy::Uniform,
                )?;
                Targets::Soft(
                    hard.iter()
                        .flat_map(|&c| protos.row(c as usize).to_vec())
                        .collect(),
                )
            }
            Loss::DirichletKl => {
                let alphas = dirichlet_mom(
                    &kept_logits()?,
                    &hard,
                    cfg.temperature,
                    EmptyClassPolicy::Uniform,
                )?;
                Targets::Dirichlet {
                    hard,
                    alphas,
                    resample: cfg.dirichlet_resample,
                }
            }
        };
        Ok(train_softmax(&rows, k, &targets, weights.as_deref(), &params(cfg, stream))?.model)
    }

    /// Baseline accuracy: a student trained on the whole reference pool.
    pub fn baseline_accuracy(&self) -> Result<f64> {
        let all = SelectionResult::from_indices(
            (0..self.data.reference.len()).collect(),
            self.data.reference.len(),
        )?;
        Ok(self
            .train_student(&all, STREAM_BASELINE)?
            .accuracy(&self.data.target_test))
    }

    /// Everything except the baseline, which does not depend on `keep`.
    pub fn run_with_baseline(
        &self,
        keep: KeepRatio,
        strategy: &dyn SelectionStrategy,
        baseline_acc: f64,
    ) -> Result<SimReport> {
        let sel = self.select(keep, strategy)?;
        let student = self.train_student(&sel, STREAM_STUDENT)?;
        let report = self.size_report(&sel)?;
        let distractors = sel
            .kept()
            .iter()
            .filter(|&&i| self.data.is_distractor[i])
            .count();
        Ok(SimReport {
            seed: self.config.seed,
            strategy: strategy.name().to_string(),
            keep_ratio: keep.get(),
            teacher_acc: self.teacher_acc,
            student_acc: student.accuracy(&self.data.target_test),
            baseline_acc,
            payload_bytes: report.payload_bytes(self.config.encode_options()),
            kept: sel.len(),
            kept_distractor_share: distractors as f64 / sel.len() as f64,
        })
    }

    pub fn run(&self, keep: KeepRatio, strategy: &dyn SelectionStrategy) -> Result<SimReport> {
        self.run_with_baseline(keep, strategy, self.baseline_accuracy()?)
    }
}

fn params(cfg: &SimConfig, stream: u64) -> TrainParams {
    TrainParams {
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        weight_decay: cfg.weight_decay,
        seed: cfg.seed,
        stream,
    }
}

/// One full run: generate, fit the teacher, select `keep` of the reference
/// pool with `strategy`, fit students on the selection and on everything,
/// and measure the payload.
pub fn run_sim(
    config: &SimConfig,
    keep: KeepRatio,
    strategy: &dyn SelectionStrategy,
) -> Result<SimReport> {
    Bench::new(config)?.run(keep, strategy)
}

/// [`run_sim`] with the strategy and keep ratio named in the config.
pub fn run_configured(config: &SimConfig) -> Result<SimReport> {
    let strategy =
        StrategyRegistry::with_builtins().build(&config.strategy, &config.strategy_params())?;
    run_sim(config, KeepRatio::new(config.keep)?, strategy.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{encode, MaskLayout};
    use crate::selection::TopFraction;
    use crate::Direction;

    fn small() -> SimConfig {
        SimConfig {
            reference_size: 600,
            samples_per_class: 30,
            test_per_class: 40,
            epochs: 10,
            ..SimConfig::default()
        }
    }

    #[test]
    fn payload_matches_encoder() {
        let bench = Bench::new(&small()).unwrap();
        let strat = TopFraction {
            direction: Direction::LowestFirst,
        };
        let sel = bench.select(KeepRatio::new(0.1).unwrap(), &strat).unwrap();
        let labels = bench.payload_labels(&sel);
        let bytes = encode(&sel, &labels, 5, bench.config.encode_options()).unwrap();
        let report = bench.size_report(&sel).unwrap();
        assert_eq!(
            report.payload_bytes(bench.config.encode_options()),
            bytes.len() as u64
        );
        assert!(report.row(MaskLayout::Idx).is_some());
    }

    #[test]
    fn every_loss_runs() {
        for loss in Loss::ALL {
            let cfg = SimConfig { loss, ..small() };
            let r = run_configured(&cfg).unwrap();
            assert!(r.student_acc > 0.5, "{loss:?}: {r}");
            assert_eq!(r.kept, 60);
        }
    }

    #[test]
    fn low_energy_rows_are_mostly_targets() {
        let bench = Bench::new(&small()).unwrap();
        let strat = TopFraction {
            direction: Direction::LowestFirst,
        };
        let r = bench
            .run_with_baseline(KeepRatio::new(0.1).unwrap(), &strat, 0.0)
            .unwrap();
        // The pool is 80% distractors.
        assert!(r.kept_distractor_share < 0.3, "{r}");
        let inv = TopFraction {
            direction: Direction::HighestFirst,
        };
        let r = bench
            .run_with_baseline(KeepRatio::new(0.1).unwrap(), &inv, 0.0)
            .unwrap();
        assert!(r.kept_distractor_share > 0.95, "{r}");
    }
}
