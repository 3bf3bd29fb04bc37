//! Anchor layouts, targets and field geometry.

use std::fs;
use std::path::Path;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Minimum distance between the target and any anchor for a valid scenario.
pub const MIN_VALID_SEPARATION: f64 = 1e-9;

/// Minimum target-anchor distance enforced when a target is drawn at random.
pub const MIN_DRAW_SEPARATION: f64 = 0.1;

const FIG1_ANCHORS: [[f64; 2]; 10] = [
    [22.5, 10.2],
    [44.9, 38.1],
    [44.1, 14.2],
    [33.6, 33.2],
    [6.1, 20.3],
    [13.7, 35.8],
    [14.1, 44.8],
    [41.3, 19.5],
    [24.9, 34.7],
    [41.7, 30.5],
];
const FIG1_TARGET: [f64; 2] = [28.7, 16.3];

const GOOD_ANCHORS: [[f64; 2]; 10] = [
    [5.0, 5.0],
    [25.0, 3.0],
    [45.0, 5.0],
    [47.0, 25.0],
    [45.0, 45.0],
    [25.0, 47.0],
    [5.0, 45.0],
    [3.0, 25.0],
    [17.0, 33.0],
    [33.0, 17.0],
];

// All ten anchors inside the 10 m x 10 m corner square [2, 12]^2.
const BAD_ANCHORS: [[f64; 2]; 10] = [
    [3.0, 4.0],
    [6.0, 11.0],
    [9.0, 6.0],
    [12.0, 12.0],
    [4.0, 9.0],
    [11.0, 3.0],
    [8.0, 9.0],
    [12.0, 7.0],
    [5.0, 12.0],
    [10.0, 10.0],
];

/// Preset anchor layouts contrasting good and clustered placements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Good,
    Bad,
}

/// Anchors, target and the side of the square field they live in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioFile", into = "ScenarioFile")]
pub struct Scenario {
    anchors: Vec<DVector<f64>>,
    target: DVector<f64>,
    field_side: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    dimension: usize,
    field_side: f64,
    anchors: Vec<Vec<f64>>,
    target: Vec<f64>,
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = Error;

    fn try_from(file: ScenarioFile) -> Result<Self> {
        let check = |v: &Vec<f64>| {
            if v.len() != file.dimension {
                Err(Error::InvalidScenario(format!(
                    "coordinate {v:?} does not have dimension {}",
                    file.dimension
                )))
            } else {
                Ok(DVector::from_column_slice(v))
            }
        };
        let anchors = file.anchors.iter().map(check).collect::<Result<Vec<_>>>()?;
        let target = check(&file.target)?;
        Scenario::new(anchors, target, file.field_side)
    }
}

impl From<Scenario> for ScenarioFile {
    fn from(s: Scenario) -> Self {
        ScenarioFile {
            dimension: s.dimension(),
            field_side: s.field_side,
            anchors: s.anchors.iter().map(|a| a.iter().copied().collect()).collect(),
            target: s.target.iter().copied().collect(),
        }
    }
}

impl Scenario {
    pub fn new(anchors: Vec<DVector<f64>>, target: DVector<f64>, field_side: f64) -> Result<Self> {
        let d = target.len();
        if d == 0 {
            return Err(Error::InvalidScenario("dimension must be positive".into()));
        }
        if anchors.len() < d + 3 {
            return Err(Error::InvalidScenario(format!(
                "{} anchors in dimension {d}; at least {} are required",
                anchors.len(),
                d + 3
            )));
        }
        if !(field_side.is_finite() && field_side > 0.0) {
            return Err(Error::InvalidScenario(format!("field side {field_side} must be positive")));
        }
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScenario("target has non-finite coordinates".into()));
        }
        for (i, a) in anchors.iter().enumerate() {
            if a.len() != d {
                return Err(Error::InvalidScenario(format!("anchor {i} has dimension {}", a.len())));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidScenario(format!("anchor {i} has non-finite coordinates")));
            }
            let dist = (a - &target).norm();
            if dist <= MIN_VALID_SEPARATION {
                return Err(Error::CoincidentPoints { distance: dist });
            }
        }
        Ok(Scenario { anchors, target, field_side })
    }

    pub fn anchors(&self) -> &[DVector<f64>] {
        &self.anchors
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }

    pub fn field_side(&self) -> f64 {
        self.field_side
    }

    pub fn dimension(&self) -> usize {
        self.target.len()
    }

    pub fn n_anchors(&self) -> usize {
        self.anchors.len()
    }

    /// Same anchors, different target.
    pub fn with_target(&self, target: DVector<f64>) -> Result<Self> {
        Scenario::new(self.anchors.clone(), target, self.field_side)
    }

    /// Shifts every anchor and the target by `offset`.
    pub fn translated(&self, offset: &DVector<f64>) -> Result<Self> {
        Scenario::new(
            self.anchors.iter().map(|a| a + offset).collect(),
            &self.target + offset,
            self.field_side,
        )
    }

    /// Distance from the target to the closest anchor.
    pub fn min_separation(&self) -> f64 {
        self.anchors
            .iter()
            .map(|a| (a - &self.target).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_toml_string())?;
        Ok(())
    }
}

fn points(raw: &[[f64; 2]]) -> Vec<DVector<f64>> {
    raw.iter().map(|p| DVector::from_column_slice(p)).collect()
}

/// The ten-anchor planar layout with the RN at (22.5, 10.2) listed first and
/// the target at (28.7, 16.3).
pub fn fig1_scenario() -> Scenario {
    Scenario::new(points(&FIG1_ANCHORS), DVector::from_column_slice(&FIG1_TARGET), 50.0)
        .expect("preset layout is valid")
}

/// A well-spread (`Good`) or corner-clustered (`Bad`) ten-anchor layout on the
/// 50 m field, with the target at the field centre.
pub fn clustered_scenario(kind: Placement) -> Scenario {
    let anchors = match kind {
        Placement::Good => points(&GOOD_ANCHORS),
        Placement::Bad => points(&BAD_ANCHORS),
    };
    Scenario::new(anchors, DVector::from_element(2, 25.0), 50.0).expect("preset layout is valid")
}

/// Anchors and target drawn uniformly over `[0, field_side]^dimension`.
pub fn random_scenario(n_anchors: usize, field_side: f64, dimension: usize, seed: u64) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_scenario_with(&mut rng, n_anchors, field_side, dimension)
}

/// [`random_scenario`] drawing from a caller-supplied generator.
pub fn random_scenario_with<R: Rng + ?Sized>(
    rng: &mut R,
    n_anchors: usize,
    field_side: f64,
    dimension: usize,
) -> Result<Scenario> {
    if dimension == 0 || n_anchors < dimension + 3 {
        return Err(Error::InvalidScenario(format!(
            "{n_anchors} anchors in dimension {dimension}; at least {} are required",
            dimension + 3
        )));
    }
    if !(field_side.is_finite() && field_side > 0.0) {
        return Err(Error::InvalidScenario(format!("field side {field_side} must be positive")));
    }
    let anchors: Vec<_> = (0..n_anchors)
        .map(|_| DVector::from_fn(dimension, |_, _| rng.random::<f64>() * field_side))
        .collect();
    let target = draw_target(rng, &anchors, field_side, dimension);
    Scenario::new(anchors, target, field_side)
}

/// Uniform target over the field, redrawn until it keeps
/// [`MIN_DRAW_SEPARATION`] from every anchor.
pub fn draw_target<R: Rng + ?Sized>(
    rng: &mut R,
    anchors: &[DVector<f64>],
    field_side: f64,
    dimension: usize,
) -> DVector<f64> {
    loop {
        let t = DVector::from_fn(dimension, |_, _| rng.random::<f64>() * field_side);
        if anchors.iter().all(|a| (a - &t).norm() >= MIN_DRAW_SEPARATION) {
            return t;
        }
    }
}
