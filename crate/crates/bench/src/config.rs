//! Experiment configuration: TOML file, family defaults and validation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use drss::estimators::Method;
use serde::{Deserialize, Serialize};

use crate::BenchError;

/// Experiment family, one per figure-style study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Good versus clustered anchor layouts.
    Placement,
    NoiseSweep,
    PleSweep,
    /// Localization with a perturbed exponent `γ + Δγ`.
    PleUncertainty,
    /// Localization with perturbed anchor coordinates.
    AnchorUncertainty,
    /// Per-iteration accuracy of the joint location/exponent estimator.
    Bcd,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Placement,
        Family::NoiseSweep,
        Family::PleSweep,
        Family::PleUncertainty,
        Family::AnchorUncertainty,
        Family::Bcd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Placement => "placement",
            Family::NoiseSweep => "noise_sweep",
            Family::PleSweep => "ple_sweep",
            Family::PleUncertainty => "ple_uncertainty",
            Family::AnchorUncertainty => "anchor_uncertainty",
            Family::Bcd => "bcd",
        }
    }

    fn defaults(self) -> Defaults {
        let known_ple = vec![Method::UBlue, Method::ABlue, Method::Le, Method::Rsdpe];
        let noise = vec![0.25, 1.0, 4.0, 10.0, 25.0];
        match self {
            Family::Placement | Family::NoiseSweep => Defaults {
                gamma: vec![4.0],
                sigma_n2: noise,
                sigma_gamma2: vec![0.0],
                sigma_s2: vec![0.0],
                sweep: SweepKey::SigmaN2,
                estimators: known_ple,
            },
            Family::PleSweep => Defaults {
                gamma: vec![2.0, 3.0, 4.0, 5.0, 6.0],
                sigma_n2: vec![10.0],
                sigma_gamma2: vec![0.0],
                sigma_s2: vec![0.0],
                sweep: SweepKey::Gamma,
                estimators: known_ple,
            },
            Family::PleUncertainty => Defaults {
                gamma: vec![4.0],
                sigma_n2: vec![1.0],
                sigma_gamma2: vec![0.1, 0.25, 0.5, 1.0, 2.0],
                sigma_s2: vec![0.0],
                sweep: SweepKey::SigmaGamma2,
                estimators: known_ple,
            },
            Family::AnchorUncertainty => Defaults {
                gamma: vec![4.0],
                sigma_n2: vec![1.0],
                sigma_gamma2: vec![0.0],
                sigma_s2: vec![1.0, 2.5, 5.0, 10.0, 20.0],
                sweep: SweepKey::SigmaS2,
                estimators: known_ple,
            },
            Family::Bcd => Defaults {
                gamma: vec![2.0],
                sigma_n2: noise,
                sigma_gamma2: vec![0.0],
                sigma_s2: vec![0.0],
                sweep: SweepKey::SigmaN2,
                estimators: vec![Method::Rsdpe, Method::RsdpBcde],
            },
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown family `{s}`")))
    }
}

/// The parameter varied along the x-axis of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKey {
    Gamma,
    SigmaN2,
    SigmaGamma2,
    SigmaS2,
}

impl SweepKey {
    pub fn name(self) -> &'static str {
        match self {
            SweepKey::Gamma => "gamma",
            SweepKey::SigmaN2 => "sigma_n2",
            SweepKey::SigmaGamma2 => "sigma_gamma2",
            SweepKey::SigmaS2 => "sigma_s2",
        }
    }
}

struct Defaults {
    gamma: Vec<f64>,
    sigma_n2: Vec<f64>,
    sigma_gamma2: Vec<f64>,
    sigma_s2: Vec<f64>,
    sweep: SweepKey,
    estimators: Vec<Method>,
}

/// A scalar or a list of values.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Configuration file as written; every key optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    family: Option<Family>,
    trials: Option<usize>,
    field_side: Option<f64>,
    n_anchors: Option<usize>,
    gamma: Option<OneOrMany>,
    sigma_n2: Option<OneOrMany>,
    sigma_gamma2: Option<OneOrMany>,
    sigma_s2: Option<OneOrMany>,
    estimators: Option<Vec<String>>,
    seed: Option<u64>,
    sweep: Option<SweepKey>,
    gamma_init: Option<f64>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub family: Option<Family>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_SEED: u64 = 1;

/// A validated experiment. Exactly one of the parameter lists (the one named
/// by `sweep`) may hold more than one value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub family: Family,
    pub trials: usize,
    pub field_side: f64,
    pub n_anchors: usize,
    pub gamma: Vec<f64>,
    pub sigma_n2: Vec<f64>,
    pub sigma_gamma2: Vec<f64>,
    pub sigma_s2: Vec<f64>,
    pub estimators: Vec<Method>,
    pub seed: u64,
    pub sweep: SweepKey,
    /// Starting exponent of the joint estimator.
    pub gamma_init: f64,
}

impl ExperimentConfig {
    /// Family defaults, with the desk-scale trial count.
    pub fn for_family(family: Family) -> Self {
        Self::resolve(RawConfig::default(), &Overrides { family: Some(family), ..Default::default() })
            .expect("family defaults are valid")
    }

    pub fn from_toml_str(text: &str, overrides: &Overrides) -> Result<Self, BenchError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        Self::resolve(raw, overrides)
    }

    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    fn resolve(raw: RawConfig, ov: &Overrides) -> Result<Self, BenchError> {
        let family = ov
            .family
            .or(raw.family)
            .ok_or_else(|| BenchError::Config("no family given (use --family or `family = ...`)".into()))?;
        if let (Some(a), Some(b)) = (ov.family, raw.family) {
            if a != b {
                return Err(BenchError::Config(format!("--family {a} conflicts with config family {b}")));
            }
        }
        let d = family.defaults();
        let estimators = match raw.estimators {
            Some(names) => names
                .iter()
                .map(|n| n.parse::<Method>().map_err(|_| BenchError::Config(format!("unknown estimator `{n}`"))))
                .collect::<Result<Vec<_>, _>>()?,
            None => d.estimators,
        };
        let cfg = Self {
            family,
            trials: ov.trials.or(raw.trials).unwrap_or(DEFAULT_TRIALS),
            field_side: raw.field_side.unwrap_or(50.0),
            n_anchors: raw.n_anchors.unwrap_or(10),
            gamma: raw.gamma.map(OneOrMany::into_vec).unwrap_or(d.gamma),
            sigma_n2: raw.sigma_n2.map(OneOrMany::into_vec).unwrap_or(d.sigma_n2),
            sigma_gamma2: raw.sigma_gamma2.map(OneOrMany::into_vec).unwrap_or(d.sigma_gamma2),
            sigma_s2: raw.sigma_s2.map(OneOrMany::into_vec).unwrap_or(d.sigma_s2),
            estimators,
            seed: ov.seed.or(raw.seed).unwrap_or(DEFAULT_SEED),
            sweep: raw.sweep.unwrap_or(d.sweep),
            gamma_init: raw.gamma_init.unwrap_or(4.0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.field_side > 0.0 && self.field_side.is_finite()) {
            return bad(format!("field_side must be positive, got {}", self.field_side));
        }
        if self.n_anchors < 5 {
            return bad(format!("n_anchors must be at least 5 for planar layouts, got {}", self.n_anchors));
        }
        if self.family == Family::Placement && self.n_anchors != 10 {
            return bad("the placement family uses the fixed ten-anchor layouts".into());
        }
        if self.estimators.is_empty() {
            return bad("estimators must not be empty".into());
        }
        if !(self.gamma_init > 0.0 && self.gamma_init.is_finite()) {
            return bad(format!("gamma_init must be positive, got {}", self.gamma_init));
        }
        for key in [SweepKey::Gamma, SweepKey::SigmaN2, SweepKey::SigmaGamma2, SweepKey::SigmaS2] {
            let values = self.values(key);
            if values.is_empty() {
                return bad(format!("{} must not be empty", key.name()));
            }
            if values.len() > 1 && key != self.sweep {
                return bad(format!("{} has several values but the sweep is over {}", key.name(), self.sweep.name()));
            }
            for &v in values {
                let ok = match key {
                    SweepKey::Gamma => v > 0.0 && v.is_finite(),
                    _ => v >= 0.0 && v.is_finite(),
                };
                if !ok {
                    return bad(format!("invalid {} value {v}", key.name()));
                }
            }
        }
        Ok(())
    }

    pub fn values(&self, key: SweepKey) -> &[f64] {
        match key {
            SweepKey::Gamma => &self.gamma,
            SweepKey::SigmaN2 => &self.sigma_n2,
            SweepKey::SigmaGamma2 => &self.sigma_gamma2,
            SweepKey::SigmaS2 => &self.sigma_s2,
        }
    }

    /// Parameters at one sweep point.
    pub fn point(&self, sweep_value: f64) -> Point {
        let pick = |key: SweepKey| if key == self.sweep { sweep_value } else { self.values(key)[0] };
        Point {
            gamma: pick(SweepKey::Gamma),
            sigma_n2: pick(SweepKey::SigmaN2),
            sigma_gamma2: pick(SweepKey::SigmaGamma2),
            sigma_s2: pick(SweepKey::SigmaS2),
        }
    }
}

/// Channel and uncertainty parameters of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub gamma: f64,
    pub sigma_n2: f64,
    pub sigma_gamma2: f64,
    pub sigma_s2: f64,
}
