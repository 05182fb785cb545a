//! Flat `key = value` pipeline configuration.

use std::fmt::Write as _;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use super::CliError;
use crate::features::{CdoThresholds, FeatureConfig};
use crate::fexai::membership::DEFAULT_SHOULDER;
use crate::fexai::FuzzySystem;
use crate::forest::{BoostingParams, ForestParams, MaxFeatures, Scenario};
use crate::ingest::TmaConfig;
use crate::synth::SynthSpec;

/// Documented configuration keys, in canonical order.
pub const KEYS: [&str; 30] = [
    "tma.center_lat",
    "tma.center_lon",
    "tma.radius_nm",
    "tma.floor_ft",
    "level_threshold",
    "mdrate_scale",
    "cdo.low_upper",
    "cdo.high_lower",
    "scenario",
    "models",
    "positive_class",
    "k_folds",
    "seed",
    "rf.n_trees",
    "rf.max_depth",
    "rf.min_samples_leaf",
    "rf.max_features",
    "rf.bootstrap",
    "gb.n_rounds",
    "gb.learning_rate",
    "gb.max_depth",
    "gb.min_samples_leaf",
    "gb.l2",
    "fuzzy.mdrate",
    "fuzzy.fltsegments",
    "fuzzy.mdirection",
    "fuzzy.shoulder",
    "synth.n_flights",
    "synth.mode",
    "out_dir",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Rf,
    Gb,
}

impl ModelKind {
    pub fn id(self) -> &'static str {
        match self {
            ModelKind::Rf => "rf",
            ModelKind::Gb => "gb",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            ModelKind::Rf => "RF",
            ModelKind::Gb => "GB",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthMode {
    Geometric,
    Rule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub tma: TmaConfig,
    pub features: FeatureConfig,
    pub scenarios: Vec<Scenario>,
    pub models: Vec<ModelKind>,
    /// Positive class index for the High vs Not High scenario.
    pub high_positive: usize,
    pub k_folds: usize,
    pub seed: u64,
    pub forest: ForestParams,
    pub boosting: BoostingParams,
    pub fuzzy: [(f64, f64); 3],
    pub shoulder: f64,
    pub synth_n_flights: usize,
    pub synth_mode: SynthMode,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let synth = SynthSpec::default();
        let fs = FuzzySystem::default();
        PipelineConfig {
            tma: synth.tma,
            features: FeatureConfig::default(),
            scenarios: Scenario::ALL.to_vec(),
            models: vec![ModelKind::Rf, ModelKind::Gb],
            high_positive: 1,
            k_folds: 5,
            seed: 42,
            forest: ForestParams::default(),
            boosting: BoostingParams::default(),
            fuzzy: fs.functions.map(|m| (m.lower, m.upper)),
            shoulder: DEFAULT_SHOULDER,
            synth_n_flights: 1000,
            synth_mode: SynthMode::Geometric,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn usage(key: &str, value: &str, what: &str) -> CliError {
    CliError::Usage(format!("config key `{key}`: `{value}` is not {what}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| usage(key, value, what))
}

fn pair(key: &str, value: &str) -> Result<(f64, f64), CliError> {
    let (a, b) = value
        .split_once(',')
        .ok_or_else(|| usage(key, value, "a `lower,upper` pair"))?;
    Ok((num(key, a.trim(), "a number")?, num(key, b.trim(), "a number")?))
}

impl PipelineConfig {
    /// Applies `key = value` lines. `#` starts a comment; blank lines are
    /// ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "tma.center_lat" => self.tma.center_lat = num(key, value, "a latitude")?,
            "tma.center_lon" => self.tma.center_lon = num(key, value, "a longitude")?,
            "tma.radius_nm" => self.tma.radius_nm = num(key, value, "a radius")?,
            "tma.floor_ft" => self.tma.altitude_floor_ft = num(key, value, "an altitude")?,
            "level_threshold" => self.features.level_threshold = num(key, value, "a gradient")?,
            "mdrate_scale" => self.features.mdrate_scale = num(key, value, "a number")?,
            "cdo.low_upper" => self.features.thresholds.low_upper = num(key, value, "a fraction")?,
            "cdo.high_lower" => self.features.thresholds.high_lower = num(key, value, "a fraction")?,
            "scenario" => {
                self.scenarios = if value == "all" {
                    Scenario::ALL.to_vec()
                } else {
                    value
                        .split(',')
                        .map(|s| {
                            s.trim()
                                .parse::<Scenario>()
                                .map_err(|_| usage(key, value, "a scenario list"))
                        })
                        .collect::<Result<_, _>>()?
                }
            }
            "models" => {
                self.models = value
                    .split(',')
                    .map(|m| match m.trim() {
                        "rf" => Ok(ModelKind::Rf),
                        "gb" => Ok(ModelKind::Gb),
                        _ => Err(usage(key, value, "a list of rf, gb")),
                    })
                    .collect::<Result<_, _>>()?
            }
            "positive_class" => self.high_positive = parse_positive(value)?,
            "k_folds" => self.k_folds = num(key, value, "an integer")?,
            "seed" => self.seed = num(key, value, "an unsigned integer")?,
            "rf.n_trees" => self.forest.n_trees = num(key, value, "an integer")?,
            "rf.max_depth" => self.forest.max_depth = num(key, value, "an integer")?,
            "rf.min_samples_leaf" => self.forest.min_samples_leaf = num(key, value, "an integer")?,
            "rf.max_features" => {
                self.forest.max_features = match value {
                    "sqrt" => MaxFeatures::Sqrt,
                    "all" => MaxFeatures::All,
                    n => MaxFeatures::Count(num(key, n, "sqrt, all or an integer")?),
                }
            }
            "rf.bootstrap" => self.forest.bootstrap = num(key, value, "true or false")?,
            "gb.n_rounds" => self.boosting.n_rounds = num(key, value, "an integer")?,
            "gb.learning_rate" => self.boosting.learning_rate = num(key, value, "a number")?,
            "gb.max_depth" => self.boosting.max_depth = num(key, value, "an integer")?,
            "gb.min_samples_leaf" => self.boosting.min_samples_leaf = num(key, value, "an integer")?,
            "gb.l2" => self.boosting.l2 = num(key, value, "a number")?,
            "fuzzy.mdrate" => self.fuzzy[0] = pair(key, value)?,
            "fuzzy.fltsegments" => self.fuzzy[1] = pair(key, value)?,
            "fuzzy.mdirection" => self.fuzzy[2] = pair(key, value)?,
            "fuzzy.shoulder" => self.shoulder = num(key, value, "a number")?,
            "synth.n_flights" => self.synth_n_flights = num(key, value, "an integer")?,
            "synth.mode" => {
                self.synth_mode = match value {
                    "geometric" => SynthMode::Geometric,
                    "rule" => SynthMode::Rule,
                    _ => return Err(usage(key, value, "geometric or rule")),
                }
            }
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => return Err(CliError::Usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        self.tma.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        CdoThresholds::new(self.features.thresholds.low_upper, self.features.thresholds.high_lower)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if !(self.features.level_threshold.is_finite() && self.features.level_threshold >= 0.0) {
            return bad("level_threshold must be >= 0".into());
        }
        if self.k_folds < 2 {
            return bad("k_folds must be >= 2".into());
        }
        if self.scenarios.is_empty() || self.models.is_empty() {
            return bad("scenario and models must not be empty".into());
        }
        self.fuzzy_system()?;
        Ok(())
    }

    pub fn fuzzy_system(&self) -> Result<FuzzySystem, CliError> {
        FuzzySystem::with_thresholds(self.fuzzy, self.shoulder).map_err(|e| CliError::Usage(e.to_string()))
    }

    /// Resolved configuration as sorted `key=value` lines.
    pub fn canonical(&self) -> String {
        let scen: Vec<&str> = self.scenarios.iter().map(|s| s.id()).collect();
        let models: Vec<&str> = self.models.iter().map(|m| m.id()).collect();
        let max_features = match self.forest.max_features {
            MaxFeatures::All => "all".to_string(),
            MaxFeatures::Sqrt => "sqrt".to_string(),
            MaxFeatures::Count(n) => n.to_string(),
        };
        let values: [String; 30] = [
            self.tma.center_lat.to_string(),
            self.tma.center_lon.to_string(),
            self.tma.radius_nm.to_string(),
            self.tma.altitude_floor_ft.to_string(),
            self.features.level_threshold.to_string(),
            self.features.mdrate_scale.to_string(),
            self.features.thresholds.low_upper.to_string(),
            self.features.thresholds.high_lower.to_string(),
            scen.join(","),
            models.join(","),
            positive_name(self.high_positive).to_string(),
            self.k_folds.to_string(),
            self.seed.to_string(),
            self.forest.n_trees.to_string(),
            self.forest.max_depth.to_string(),
            self.forest.min_samples_leaf.to_string(),
            max_features,
            self.forest.bootstrap.to_string(),
            self.boosting.n_rounds.to_string(),
            self.boosting.learning_rate.to_string(),
            self.boosting.max_depth.to_string(),
            self.boosting.min_samples_leaf.to_string(),
            self.boosting.l2.to_string(),
            format!("{},{}", self.fuzzy[0].0, self.fuzzy[0].1),
            format!("{},{}", self.fuzzy[1].0, self.fuzzy[1].1),
            format!("{},{}", self.fuzzy[2].0, self.fuzzy[2].1),
            self.shoulder.to_string(),
            self.synth_n_flights.to_string(),
            match self.synth_mode {
                SynthMode::Geometric => "geometric".into(),
                SynthMode::Rule => "rule".into(),
            },
            self.out_dir.display().to_string(),
        ];
        let mut lines: Vec<(&str, &String)> = KEYS.iter().copied().zip(values.iter()).collect();
        lines.sort();
        let mut out = String::new();
        for (k, v) in lines {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical`], excluding
    /// `out_dir` so relocating outputs keeps the hash.
    pub fn hash(&self) -> String {
        let text: String = self
            .canonical()
            .lines()
            .filter(|l| !l.starts_with("out_dir="))
            .map(|l| format!("{l}\n"))
            .collect();
        let digest = Sha256::digest(text.as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    /// Comment lines embedded at the top of every output.
    pub fn preamble(&self, stage: &str) -> Vec<String> {
        vec![format!(
            "cdo-xai {stage} config_hash={} seed={}",
            self.hash(),
            self.seed
        )]
    }

    pub fn positive_class(&self, scenario: Scenario) -> usize {
        match scenario {
            Scenario::HighVsNotHigh => self.high_positive,
            _ => 1,
        }
    }
}

pub fn parse_positive(value: &str) -> Result<usize, CliError> {
    match value {
        "high" => Ok(1),
        "not-high" | "not_high" | "nothigh" => Ok(0),
        _ => Err(CliError::Usage(format!(
            "positive class must be `high` or `not-high`, got `{value}`"
        ))),
    }
}

fn positive_name(class: usize) -> &'static str {
    if class == 0 {
        "not-high"
    } else {
        "high"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip() {
        let mut c = PipelineConfig::default();
        c.apply_text("seed = 7\nrf.n_trees=10 # fewer\n\nfuzzy.mdrate = 0.02, 0.05\nscenario=low_vs_notlow\n")
            .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.forest.n_trees, 10);
        assert_eq!(c.fuzzy[0], (0.02, 0.05));
        let mut d = PipelineConfig::default();
        d.apply_text(&c.canonical()).unwrap();
        assert_eq!(c, d);
        assert_eq!(c.hash(), d.hash());
        assert_ne!(c.hash(), PipelineConfig::default().hash());
    }

    #[test]
    fn out_dir_does_not_change_hash() {
        let mut c = PipelineConfig::default();
        let h = c.hash();
        c.set("out_dir", "/tmp/elsewhere").unwrap();
        assert_eq!(c.hash(), h);
    }

    #[test]
    fn bad_keys_and_values() {
        let mut c = PipelineConfig::default();
        assert!(matches!(c.set("nope", "1"), Err(CliError::Usage(_))));
        assert!(c.set("k_folds", "x").is_err());
        assert!(c.apply_text("just words").is_err());
        c.set("k_folds", "1").unwrap();
        assert!(c.validate().is_err());
    }
}
