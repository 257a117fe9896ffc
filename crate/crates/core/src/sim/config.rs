//! Flat `key = value` configuration for the simulation bench.

use std::fmt::Write as _;

use crate::codec::{EncodeOptions, LabelEncoding, MaskEncoding};
use crate::selection::{Direction, StrategyParams};
use crate::{Error, Result};

/// Student objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// Cross-entropy on hard pseudo-labels.
    HardCe,
    /// KL towards the per-class average soft label of the row's hard class.
    PrototypeKl,
    /// KL towards a sample from the row's class Dirichlet.
    DirichletKl,
    /// Hard-label cross-entropy weighted by energy-derived importance.
    WeightedCe,
}

impl Loss {
    pub const ALL: [Loss; 4] = [
        Loss::HardCe,
        Loss::PrototypeKl,
        Loss::DirichletKl,
        Loss::WeightedCe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Loss::HardCe => "hard_ce",
            Loss::PrototypeKl => "prototype_kl",
            Loss::DirichletKl => "dirichlet_kl",
            Loss::WeightedCe => "weighted_ce",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.name() == name)
            .ok_or_else(|| Error::UnknownName {
                kind: "loss",
                name: name.into(),
            })
    }
}

/// When Dirichlet targets are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Resample {
    #[default]
    PerEpoch,
    Once,
}

impl Resample {
    pub fn name(self) -> &'static str {
        match self {
            Resample::PerEpoch => "per_epoch",
            Resample::Once => "once",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "per_epoch" => Ok(Resample::PerEpoch),
            "once" => Ok(Resample::Once),
            _ => Err(Error::UnknownName {
                kind: "resample cadence",
                name: name.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub feature_dim: usize,
    pub classes: usize,
    pub samples_per_class: usize,
    pub test_per_class: usize,
    pub reference_size: usize,
    pub distractor_fraction: f64,
    pub distractor_clusters: usize,
    /// Distance between any two target-class means.
    pub cluster_separation: f64,
    pub noise_sigma: f64,
    pub seed: u64,

    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// L2 penalty on the student's weights. Without it a linear student
    /// reproduces a linear teacher's labels exactly and distractors cost
    /// nothing.
    pub weight_decay: f64,
    pub teacher_weight_decay: f64,
    pub loss: Loss,
    pub dirichlet_resample: Resample,

    /// Softmax temperature for energy and soft labels.
    pub temperature: f64,
    /// Temperature of the importance weights.
    pub weight_temperature: f64,

    pub strategy: String,
    pub keep: f64,
    pub direction: Direction,
    pub alpha: f64,
    pub reserve: f64,

    pub mask: MaskEncoding,
    pub labels_enc: LabelEncoding,
    pub zstd: bool,
}

impl Default for SimConfig {
    /// The calibrated bench: 16 dimensions, 5 classes, 80% distractors.
    fn default() -> Self {
        let params = StrategyParams::default();
        Self {
            feature_dim: 16,
            classes: 5,
            samples_per_class: 100,
            test_per_class: 200,
            reference_size: 5000,
            distractor_fraction: 0.8,
            distractor_clusters: 5,
            cluster_separation: 6.0,
            noise_sigma: 1.0,
            seed: 0,
            learning_rate: 0.1,
            epochs: 50,
            batch_size: 64,
            weight_decay: 0.5,
            teacher_weight_decay: 0.0,
            loss: Loss::HardCe,
            dirichlet_resample: Resample::PerEpoch,
            temperature: 1.0,
            weight_temperature: 1.0,
            strategy: "top".into(),
            keep: 0.1,
            direction: params.direction,
            alpha: params.alpha,
            reserve: params.reserve_fraction,
            mask: MaskEncoding::DeltaIndex,
            labels_enc: LabelEncoding::Huffman,
            zstd: true,
        }
    }
}

impl SimConfig {
    /// Parses `key = value` lines over the defaults. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            // Everything after `#` is a comment.
            let line = raw.split_once('#').map_or(raw, |(before, _)| before).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected key = value, got `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim()).map_err(|e| match e {
                Error::Parse { msg, .. } => Error::Parse { line: i + 1, msg },
                other => Error::Parse {
                    line: i + 1,
                    msg: other.to_string(),
                },
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Parse {
                line: 0,
                msg: format!("bad value `{v}` for `{key}`"),
            })
        }
        match key {
            "feature_dim" => self.feature_dim = num(key, value)?,
            "classes" => self.classes = num(key, value)?,
            "samples_per_class" => self.samples_per_class = num(key, value)?,
            "test_per_class" => self.test_per_class = num(key, value)?,
            "reference_size" => self.reference_size = num(key, value)?,
            "distractor_fraction" => self.distractor_fraction = num(key, value)?,
            "distractor_clusters" => self.distractor_clusters = num(key, value)?,
            "cluster_separation" => self.cluster_separation = num(key, value)?,
            "noise_sigma" => self.noise_sigma = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "weight_decay" => self.weight_decay = num(key, value)?,
            "teacher_weight_decay" => self.teacher_weight_decay = num(key, value)?,
            "loss" => self.loss = Loss::from_name(value)?,
            "dirichlet_resample" => self.dirichlet_resample = Resample::from_name(value)?,
            "temperature" => self.temperature = num(key, value)?,
            "weight_temperature" => self.weight_temperature = num(key, value)?,
            "strategy" => self.strategy = value.to_string(),
            "keep" => self.keep = num(key, value)?,
            "direction" => self.direction = Direction::from_name(value)?,
            "alpha" => self.alpha = num(key, value)?,
            "reserve" => self.reserve = num(key, value)?,
            "mask" => self.mask = MaskEncoding::from_name(value)?,
            "labels_enc" => self.labels_enc = LabelEncoding::from_name(value)?,
            "zstd" => {
                self.zstd = match value {
                    "on" => true,
                    "off" => false,
                    _ => {
                        return Err(Error::Parse {
                            line: 0,
                            msg: format!("zstd must be on or off, got `{value}`"),
                        })
                    }
                }
            }
            _ => {
                return Err(Error::UnknownName {
                    kind: "config key",
                    name: key.into(),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.into()));
        if self.feature_dim == 0
            || self.samples_per_class == 0
            || self.test_per_class == 0
            || self.reference_size == 0
            || self.distractor_clusters == 0
            || self.epochs == 0
            || self.batch_size == 0
        {
            return bad("counts must be at least 1");
        }
        if self.classes < 2 {
            return bad("classes must be at least 2");
        }
        if self.classes > self.feature_dim {
            return bad("classes must not exceed feature_dim (target means are orthogonal)");
        }
        if !(0.0..1.0).contains(&self.distractor_fraction) {
            return bad("distractor_fraction must lie in [0, 1)");
        }
        let positive = [
            ("cluster_separation", self.cluster_separation),
            ("noise_sigma", self.noise_sigma),
            ("learning_rate", self.learning_rate),
            ("temperature", self.temperature),
            ("weight_temperature", self.weight_temperature),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if !(self.weight_decay >= 0.0 && self.teacher_weight_decay >= 0.0) {
            return bad("weight decay must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.reserve) {
            return bad("reserve must lie in [0, 1]");
        }
        crate::selection::KeepRatio::new(self.keep)?;
        Ok(())
    }

    pub fn strategy_params(&self) -> StrategyParams {
        StrategyParams {
            direction: self.direction,
            alpha: self.alpha,
            reserve_fraction: self.reserve,
        }
    }

    pub fn encode_options(&self) -> EncodeOptions {
        EncodeOptions::new(self.mask, self.labels_enc, self.zstd)
    }

    /// Renders the config in the format [`SimConfig::parse`] reads.
    pub fn to_text(&self) -> String {
        let f = crate::table::format_f64;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("feature_dim", self.feature_dim.to_string());
        kv("classes", self.classes.to_string());
        kv("samples_per_class", self.samples_per_class.to_string());
        kv("test_per_class", self.test_per_class.to_string());
        kv("reference_size", self.reference_size.to_string());
        kv("distractor_fraction", f(self.distractor_fraction));
        kv("distractor_clusters", self.distractor_clusters.to_string());
        kv("cluster_separation", f(self.cluster_separation));
        kv("noise_sigma", f(self.noise_sigma));
        kv("seed", self.seed.to_string());
        kv("learning_rate", f(self.learning_rate));
        kv("epochs", self.epochs.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("weight_decay", f(self.weight_decay));
        kv("teacher_weight_decay", f(self.teacher_weight_decay));
        kv("loss", self.loss.name().into());
        kv("dirichlet_resample", self.dirichlet_resample.name().into());
        kv("temperature", f(self.temperature));
        kv("weight_temperature", f(self.weight_temperature));
        kv("strategy", self.strategy.clone());
        kv("keep", f(self.keep));
        kv("direction", self.direction.name().into());
        kv("alpha", f(self.alpha));
        kv("reserve", f(self.reserve));
        kv("mask", self.mask.name().into());
        kv("labels_enc", self.labels_enc.name().into());
        kv("zstd", if self.zstd { "on" } else { "off" }.into());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let cfg = SimConfig {
            loss: Loss::DirichletKl,
            keep: 0.25,
            zstd: false,
            ..SimConfig::default()
        };
        assert_eq!(SimConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn comments_and_overrides() {
        let cfg = SimConfig::parse("# bench\n\nreference_size = 1000\nloss=weighted_ce\n").unwrap();
        assert_eq!(cfg.reference_size, 1000);
        assert_eq!(cfg.loss, Loss::WeightedCe);
        assert_eq!(cfg.classes, 5);
    }

    #[test]
    fn errors_name_the_line() {
        assert!(matches!(
            SimConfig::parse("seed = 1\nbogus = 2\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            SimConfig::parse("epochs = -3\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(SimConfig::parse("distractor_fraction = 1.0\n").is_err());
        assert!(SimConfig::parse("classes = 20\n").is_err());
    }
}
