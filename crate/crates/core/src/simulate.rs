//! Labeled Gaussian-mixture data with a prescribed generalized overlap.
//!
//! Class means are drawn uniformly from the unit cube and covariance shapes
//! are fixed up front; a single scale `c` multiplying every covariance is
//! then bisected until the Monte-Carlo generalized overlap of the mixture
//! matches the target. The Monte-Carlo draws are held fixed while `c`
//! varies, so the objective is a deterministic function of `c`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::DataSet;
use crate::error::{Error, Result};
use crate::overlap::{overlap_matrix, GaussianComponent, ScaledOverlap};

/// Relative tolerance on the achieved generalized overlap.
pub const CALIBRATION_TOLERANCE: f64 = 0.02;

/// Bisection stops early once this close (relative) to the target.
const BISECTION_TOLERANCE: f64 = 0.002;
const MAX_BISECTIONS: usize = 60;
const SCALE_CEILING: f64 = 1e6;
const SCALE_FLOOR: f64 = 1e-12;
const MIN_MEAN_SEPARATION: f64 = 1e-6;
const MAX_TARGET: f64 = 0.6;

pub const DEFAULT_CALIBRATION_DRAWS: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub classes: usize,
    pub dims: usize,
    pub rows: usize,
    pub target_omega: f64,
    pub spherical: bool,
    pub homogeneous: bool,
    pub seed: u64,
    /// Monte-Carlo draws per class pair and direction during calibration.
    #[serde(default = "default_draws")]
    pub calibration_draws: usize,
}

fn default_draws() -> usize {
    DEFAULT_CALIBRATION_DRAWS
}

impl SimSpec {
    pub fn new(classes: usize, dims: usize, rows: usize, target_omega: f64, seed: u64) -> Self {
        SimSpec {
            classes,
            dims,
            rows,
            target_omega,
            spherical: false,
            homogeneous: false,
            seed,
            calibration_draws: DEFAULT_CALIBRATION_DRAWS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::SingleClass(self.classes));
        }
        if self.dims < 3 {
            return Err(Error::InvalidSpec(format!("need at least 3 dimensions, got {}", self.dims)));
        }
        let min_rows = self.classes * (self.dims + 1);
        if self.rows < min_rows {
            return Err(Error::InvalidSpec(format!("need at least {min_rows} rows, got {}", self.rows)));
        }
        if !(self.target_omega > 0.0 && self.target_omega <= MAX_TARGET) {
            return Err(Error::InvalidSpec(format!("target overlap {} outside (0, {MAX_TARGET}]", self.target_omega)));
        }
        if self.calibration_draws == 0 {
            return Err(Error::InvalidSpec("calibration_draws must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub data: DataSet,
    pub components: Vec<GaussianComponent>,
    /// Generalized overlap of `components`, estimated with the calibration
    /// draws and seed.
    pub achieved_omega: f64,
    /// Covariance scale chosen by the calibration.
    pub scale: f64,
}

/// Multiplies every covariance by `c`.
pub fn rescale_components(components: &[GaussianComponent], c: f64) -> Result<Vec<GaussianComponent>> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidScale(c));
    }
    components.iter().map(|g| g.with_scaled_covariance(c)).collect()
}

/// Independent sub-seeds for the separate random stages of a simulation.
#[derive(Clone, Copy)]
enum Stage {
    Means = 1,
    Covariances = 2,
    MonteCarlo = 3,
    Rows = 4,
}

fn stage_rng(seed: u64, stage: Stage) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stage as u64);
    rng
}

fn draw_means(rng: &mut ChaCha8Rng, k: usize, p: usize) -> Vec<DVector<f64>> {
    loop {
        let means: Vec<DVector<f64>> = (0..k).map(|_| DVector::from_fn(p, |_, _| rng.random::<f64>())).collect();
        let separated = (0..k).all(|i| (i + 1..k).all(|j| (&means[i] - &means[j]).norm() > MIN_MEAN_SEPARATION));
        if separated {
            return means;
        }
    }
}

/// `Q diag(lambda) Q^T` with Haar-ish `Q` from a Gaussian QR and
/// eigenvalues uniform on [0.5, 2], rescaled to unit average variance.
fn random_spd(rng: &mut ChaCha8Rng, p: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let lambda: Vec<f64> = (0..p).map(|_| rng.random_range(0.5..2.0)).collect();
    let mean = lambda.iter().sum::<f64>() / p as f64;
    let d = DMatrix::from_diagonal(&DVector::from_iterator(p, lambda.iter().map(|l| l / mean)));
    let s = &q * d * q.transpose();
    (&s + s.transpose()) * 0.5
}

fn base_covariances(spec: &SimSpec) -> Vec<DMatrix<f64>> {
    let mut rng = stage_rng(spec.seed, Stage::Covariances);
    let p = spec.dims;
    let mut one = || -> DMatrix<f64> {
        if spec.spherical {
            DMatrix::identity(p, p) * rng.random_range(0.5..2.0)
        } else {
            random_spd(&mut rng, p)
        }
    };
    if spec.homogeneous {
        let shared = if spec.spherical { DMatrix::identity(p, p) } else { one() };
        vec![shared; spec.classes]
    } else {
        (0..spec.classes).map(|_| one()).collect()
    }
}

/// Rows per class: `n / K` each, remainder spread over the first classes.
pub fn class_sizes(rows: usize, classes: usize) -> Vec<usize> {
    (0..classes).map(|k| rows / classes + usize::from(k < rows % classes)).collect()
}

/// Finds `c` with `objective(c)` close to `target`, bisecting in log scale.
/// Returns the best scale seen and its objective value.
fn calibrate_scale(objective: impl Fn(f64) -> f64, target: f64) -> Result<(f64, f64)> {
    let unreachable = |reason: &str| Error::TargetUnreachable { target, reason: reason.to_string() };
    let mut best = (1.0, objective(1.0));
    let consider = |c: f64, v: f64, best: &mut (f64, f64)| {
        if (v - target).abs() < (best.1 - target).abs() {
            *best = (c, v);
        }
    };

    let (mut lo, mut hi) = if best.1 < target {
        let mut hi = 1.0;
        loop {
            if hi >= SCALE_CEILING {
                return Err(unreachable("overlap stays below target up to the maximum covariance scale"));
            }
            hi = (hi * 10.0).min(SCALE_CEILING);
            let v = objective(hi);
            consider(hi, v, &mut best);
            if v >= target {
                break (hi / 10.0, hi);
            }
        }
    } else {
        let mut lo = 1.0;
        loop {
            if lo <= SCALE_FLOOR {
                return Err(unreachable("overlap stays above target at the minimum covariance scale"));
            }
            lo /= 10.0;
            let v = objective(lo);
            consider(lo, v, &mut best);
            if v < target {
                break (lo, lo * 10.0);
            }
        }
    };

    for _ in 0..MAX_BISECTIONS {
        if (best.1 - target).abs() <= BISECTION_TOLERANCE * target {
            break;
        }
        let mid = (lo * hi).sqrt();
        let v = objective(mid);
        consider(mid, v, &mut best);
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// Simulates a labeled data set whose classes have generalized overlap
/// within [`CALIBRATION_TOLERANCE`] (relative) of `spec.target_omega`.
///
/// Labels are `1..=K`; rows are grouped by class.
pub fn simulate_mixture(spec: &SimSpec) -> Result<Simulation> {
    spec.validate()?;
    let (k, p) = (spec.classes, spec.dims);
    let weight = 1.0 / k as f64;

    let means = draw_means(&mut stage_rng(spec.seed, Stage::Means), k, p);
    let base = means
        .into_iter()
        .zip(base_covariances(spec))
        .map(|(m, s)| GaussianComponent::new(m, s, weight))
        .collect::<Result<Vec<_>>>()?;

    let mc_seed = stage_rng(spec.seed, Stage::MonteCarlo).random::<u64>();
    let evaluator = ScaledOverlap::new(&base, spec.calibration_draws, mc_seed)?;
    let (scale, _) = calibrate_scale(|c| evaluator.generalized_at(c), spec.target_omega)?;

    let components = rescale_components(&base, scale)?;
    let achieved_omega = overlap_matrix(&components, spec.calibration_draws, mc_seed)?.generalized()?;
    if (achieved_omega - spec.target_omega).abs() > CALIBRATION_TOLERANCE * spec.target_omega {
        return Err(Error::TargetUnreachable {
            target: spec.target_omega,
            reason: format!("calibration settled at {achieved_omega}"),
        });
    }

    let mut rng = stage_rng(spec.seed, Stage::Rows);
    let sizes = class_sizes(spec.rows, k);
    let mut values = DMatrix::zeros(spec.rows, p);
    let mut labels = Vec::with_capacity(spec.rows);
    let mut row = 0;
    for (class, (component, &size)) in components.iter().zip(&sizes).enumerate() {
        for _ in 0..size {
            values.set_row(row, &component.sample(&mut rng).transpose());
            labels.push((class + 1).to_string());
            row += 1;
        }
    }
    let names = (1..=p).map(|j| format!("x{j}")).collect();
    let data = DataSet::new(values, names, Some(labels), None)?;
    Ok(Simulation { data, components, achieved_omega, scale })
}
