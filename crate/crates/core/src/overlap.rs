//! Pairwise misclassification overlap between Gaussian classes.
//!
//! For classes `i` and `j`, `omega(j|i)` is the probability that an
//! observation drawn from class `i` is assigned to class `j` by the Bayes
//! rule comparing only those two weighted densities. The pairwise overlap is
//! `omega_ij = omega(j|i) + omega(i|j)`. Both terms are estimated by Monte
//! Carlo with deterministic, schedule-independent seeding: draws are split
//! into fixed-size chunks, each with its own ChaCha stream keyed on the
//! chunk index and sampling direction.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataSet;
use crate::error::{Error, Result};

const SYMMETRY_TOLERANCE: f64 = 1e-10;
const WEIGHT_TOLERANCE: f64 = 1e-9;
const RIDGE_EPSILON: f64 = 1e-8;
const MAX_RIDGE_DOUBLINGS: usize = 200;

/// Draws per independently seeded chunk. Part of the seeding contract:
/// changing it changes every estimate.
const CHUNK: usize = 1 << 14;

/// One weighted multivariate normal class.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    weight: f64,
    chol: Cholesky,
}

/// Lower Cholesky factor stored densely, row-major, plus its log-determinant.
#[derive(Debug, Clone, PartialEq)]
struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
    log_det: f64,
}

impl Cholesky {
    fn new(cov: &DMatrix<f64>) -> Option<Self> {
        let dim = cov.nrows();
        let l = cov.clone().cholesky()?.unpack();
        let lower = (0..dim * dim).map(|k| l[(k / dim, k % dim)]).collect();
        let log_det = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        log_det.is_finite().then_some(Cholesky { dim, lower, log_det })
    }

    /// `out = L z`
    fn mul(&self, z: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate().take(self.dim) {
            let row = &self.lower[r * self.dim..r * self.dim + r + 1];
            *o = row.iter().zip(z).map(|(a, b)| a * b).sum();
        }
    }

    /// Squared norm of `L^-1 v`, by forward substitution into `scratch`.
    fn mahalanobis_sq(&self, v: &[f64], scratch: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for r in 0..self.dim {
            let row = &self.lower[r * self.dim..(r + 1) * self.dim];
            let partial: f64 = row[..r].iter().zip(&scratch[..r]).map(|(a, b)| a * b).sum();
            let y = (v[r] - partial) / row[r];
            scratch[r] = y;
            total += y * y;
        }
        total
    }

    /// `L^-1 v` into `out`.
    fn solve(&self, v: &[f64], out: &mut [f64]) {
        self.mahalanobis_sq(v, out);
    }
}

impl GaussianComponent {
    /// Checks dimensions, symmetry (to 1e-10), positive definiteness and
    /// that `weight` lies in (0, 1].
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>, weight: f64) -> Result<Self> {
        let p = mean.len();
        if covariance.shape() != (p, p) {
            return Err(Error::DimensionMismatch { expected: p, actual: covariance.nrows() });
        }
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(Error::InvalidData(format!("component weight {weight} outside (0, 1]")));
        }
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite component parameter".into()));
        }
        let asym = (&covariance - covariance.transpose()).amax();
        if asym > SYMMETRY_TOLERANCE * covariance.amax().max(1.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let chol = Cholesky::new(&covariance).ok_or(Error::NotPositiveDefinite)?;
        Ok(GaussianComponent { mean, covariance, weight, chol })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Same component with covariance multiplied by `c`.
    pub fn with_scaled_covariance(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidScale(c));
        }
        GaussianComponent::new(self.mean.clone(), &self.covariance * c, self.weight)
    }

    pub fn with_weight(&self, weight: f64) -> Result<Self> {
        GaussianComponent::new(self.mean.clone(), self.covariance.clone(), weight)
    }

    /// Log of `weight * density(x)`, dropping the `-p/2 log(2 pi)` term
    /// shared by every component of the same dimension.
    fn weighted_log_density(&self, x: &[f64], diff: &mut [f64], scratch: &mut [f64]) -> f64 {
        for ((d, xv), m) in diff.iter_mut().zip(x).zip(self.mean.iter()) {
            *d = xv - m;
        }
        let q = self.chol.mahalanobis_sq(diff, scratch);
        self.weight.ln() - 0.5 * self.chol.log_det - 0.5 * q
    }

    /// One draw from the (unweighted) distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z: Vec<f64> = (0..self.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let mut x = vec![0.0; self.dim()];
        self.chol.mul(&z, &mut x);
        DVector::from_vec(x) + &self.mean
    }

    /// Full log density, including normalizing constant.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let p = self.dim();
        let mut diff = vec![0.0; p];
        let mut scratch = vec![0.0; p];
        self.weighted_log_density(x, &mut diff, &mut scratch)
            - self.weight.ln()
            - 0.5 * p as f64 * (2.0 * std::f64::consts::PI).ln()
    }
}

/// Checks that a component list shares one dimension and has weights
/// summing to one.
pub fn validate_mixture(components: &[GaussianComponent]) -> Result<()> {
    if components.len() < 2 {
        return Err(Error::SingleClass(components.len()));
    }
    let p = components[0].dim();
    if let Some(c) = components.iter().find(|c| c.dim() != p) {
        return Err(Error::DimensionMismatch { expected: p, actual: c.dim() });
    }
    let total: f64 = components.iter().map(GaussianComponent::weight).sum();
    if (total - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(Error::InvalidData(format!("component weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Fits one Gaussian per class: sample mean, maximum-likelihood covariance
/// (divisor `n_k`) and weight `n_k / n`. Components come back in the order
/// of [`DataSet::classes`]. Covariances that fail Cholesky get a ridge of
/// `eps * trace / p` added, with `eps` starting at 1e-8 and doubling.
pub fn fit_components(data: &DataSet) -> Result<Vec<GaussianComponent>> {
    let classes = data.classes();
    if classes.len() < 2 {
        return Err(Error::SingleClass(classes.len()));
    }
    let n = data.n() as f64;
    let p = data.p();
    classes
        .iter()
        .map(|class| {
            let rows: Vec<usize> = (0..data.n()).filter(|&i| &data.labels()[i] == class).collect();
            let nk = rows.len() as f64;
            let mut mean = DVector::zeros(p);
            for &i in &rows {
                mean += data.values().row(i).transpose();
            }
            mean /= nk;
            let mut cov = DMatrix::zeros(p, p);
            for &i in &rows {
                let d = data.values().row(i).transpose() - &mean;
                cov += &d * d.transpose();
            }
            cov /= nk;
            let cov = regularize(cov)?;
            GaussianComponent::new(mean, cov, nk / n)
        })
        .collect()
}

fn regularize(cov: DMatrix<f64>) -> Result<DMatrix<f64>> {
    if Cholesky::new(&cov).is_some() {
        return Ok(cov);
    }
    let p = cov.nrows();
    let scale = match cov.trace() / p as f64 {
        t if t > 0.0 => t,
        _ => 1.0,
    };
    let mut eps = RIDGE_EPSILON;
    for _ in 0..MAX_RIDGE_DOUBLINGS {
        let ridged = &cov + DMatrix::identity(p, p) * (eps * scale);
        if Cholesky::new(&ridged).is_some() {
            return Ok(ridged);
        }
        eps *= 2.0;
    }
    Err(Error::NotPositiveDefinite)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for the class pair `(i, j)`, `i < j`, derived from the matrix seed.
pub fn pair_seed(seed: u64, i: usize, j: usize) -> u64 {
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    splitmix64(seed ^ splitmix64(((lo as u64) << 32) | hi as u64))
}

/// Fair coin for an exact tie on draw `index` of `stream`.
fn tie_coin(seed: u64, stream: u64, index: usize) -> bool {
    splitmix64(seed ^ splitmix64(stream.rotate_left(32) ^ index as u64)) & 1 == 1
}

fn fill_standard_normal(rng: &mut ChaCha8Rng, z: &mut [f64]) {
    for v in z.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

/// Splits `n_draws` into fixed chunks and runs `visit(stream, range, rng)`
/// on each with its own generator. Results come back in chunk order.
fn chunked_draws<T, F>(seed: u64, direction: u64, n_draws: usize, visit: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, std::ops::Range<usize>, &mut ChaCha8Rng) -> T + Sync,
{
    let chunks = n_draws.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let stream = 2 * c as u64 + direction;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            visit(stream, c * CHUNK..((c + 1) * CHUNK).min(n_draws), &mut rng)
        })
        .collect()
}

/// Fraction of draws from `from` that the two-class Bayes rule assigns to
/// `to`. Exact ties count as half a misclassification in expectation.
fn misclassification_rate(
    from: &GaussianComponent,
    to: &GaussianComponent,
    n_draws: usize,
    seed: u64,
    direction: u64,
) -> f64 {
    let p = from.dim();
    let counts = chunked_draws(seed, direction, n_draws, |stream, range, rng| {
        let mut z = vec![0.0; p];
        let mut x = vec![0.0; p];
        let mut diff = vec![0.0; p];
        let mut scratch = vec![0.0; p];
        let mut wrong = 0usize;
        for index in range {
            fill_standard_normal(rng, &mut z);
            from.chol.mul(&z, &mut x);
            for (xv, m) in x.iter_mut().zip(from.mean.iter()) {
                *xv += m;
            }
            let own = from.weighted_log_density(&x, &mut diff, &mut scratch);
            let other = to.weighted_log_density(&x, &mut diff, &mut scratch);
            if other > own || (other == own && tie_coin(seed, stream, index)) {
                wrong += 1;
            }
        }
        wrong
    });
    counts.into_iter().sum::<usize>() as f64 / n_draws as f64
}

/// Monte-Carlo estimates of `(omega(j|i), omega(i|j))`. Deterministic in
/// `seed`.
pub fn pairwise_overlap(
    comp_i: &GaussianComponent,
    comp_j: &GaussianComponent,
    n_draws: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if comp_i.dim() != comp_j.dim() {
        return Err(Error::DimensionMismatch { expected: comp_i.dim(), actual: comp_j.dim() });
    }
    if n_draws == 0 {
        return Err(Error::InvalidData("n_draws must be at least 1".into()));
    }
    let (j_given_i, i_given_j) = rayon::join(
        || misclassification_rate(comp_i, comp_j, n_draws, seed, 0),
        || misclassification_rate(comp_j, comp_i, n_draws, seed, 1),
    );
    Ok((j_given_i, i_given_j))
}

/// Symmetric `K x K` matrix of pairwise overlaps with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    pub omega: DMatrix<f64>,
    pub n_draws: usize,
    pub seed: u64,
}

impl OverlapMatrix {
    /// Validates symmetry, zero diagonal and entries in `[0, 2]`.
    pub fn new(omega: DMatrix<f64>, n_draws: usize, seed: u64) -> Result<Self> {
        let k = omega.nrows();
        if omega.ncols() != k {
            return Err(Error::DimensionMismatch { expected: k, actual: omega.ncols() });
        }
        for i in 0..k {
            if omega[(i, i)] != 0.0 {
                return Err(Error::InvalidData(format!("overlap diagonal entry {i} is not zero")));
            }
            for j in 0..i {
                let v = omega[(i, j)];
                if v != omega[(j, i)] || !(0.0..=2.0).contains(&v) {
                    return Err(Error::InvalidData(format!("overlap entry ({i}, {j}) = {v} invalid")));
                }
            }
        }
        Ok(OverlapMatrix { omega, n_draws, seed })
    }

    pub fn k(&self) -> usize {
        self.omega.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.omega[(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.omega.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn generalized(&self) -> Result<f64> {
        generalized_overlap(self)
    }
}

impl Serialize for OverlapMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            omega: Vec<Vec<f64>>,
            n_draws: usize,
            seed: u64,
        }
        Repr { omega: self.rows(), n_draws: self.n_draws, seed: self.seed }.serialize(serializer)
    }
}

/// Overlap matrix over all class pairs. Pair `(i, j)` uses
/// [`pair_seed`]`(seed, i, j)`, so the result does not depend on the order
/// in which pairs are evaluated.
pub fn overlap_matrix(components: &[GaussianComponent], n_draws: usize, seed: u64) -> Result<OverlapMatrix> {
    validate_mixture(components)?;
    let k = components.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| pairwise_overlap(&components[i], &components[j], n_draws, pair_seed(seed, i, j)))
        .collect::<Result<Vec<_>>>()?;
    let mut omega = DMatrix::zeros(k, k);
    for (&(i, j), (a, b)) in pairs.iter().zip(values) {
        omega[(i, j)] = a + b;
        omega[(j, i)] = a + b;
    }
    OverlapMatrix::new(omega, n_draws, seed)
}

/// `(lambda_max - 1) / (K - 1)` where `lambda_max` is the largest eigenvalue
/// of the overlap matrix with its diagonal set to one.
pub fn generalized_overlap(omega: &OverlapMatrix) -> Result<f64> {
    let k = omega.k();
    if k < 2 {
        return Err(Error::SingleClass(k));
    }
    let mut bar = omega.omega.clone();
    bar.fill_diagonal(1.0);
    let lambda_max = SymmetricEigen::new(bar).eigenvalues.max();
    Ok((lambda_max - 1.0) / (k - 1) as f64)
}

/// Overlap of one sampling direction `from -> to` as a function of a common
/// covariance scale `c`, evaluated on a fixed set of draws.
///
/// A draw `x = mu_i + sqrt(c) L_i z` is assigned to `j` when
/// `kappa > (|d|^2 / c + 2 a / sqrt(c) + b) / 2`, with
/// `d = L_j^-1 (mu_i - mu_j)`, `v = L_j^-1 L_i z`, `a = d.v`,
/// `b = |v|^2 - |z|^2` and `kappa` the log weight ratio minus half the log
/// determinant ratio. Storing `(a, b)` per draw makes each evaluation a
/// single pass with no sampling.
#[derive(Debug, Clone)]
struct ScaledDirection {
    kappa: f64,
    d_sq: f64,
    a: Vec<f64>,
    b: Vec<f64>,
    ties: Vec<bool>,
}

impl ScaledDirection {
    fn new(from: &GaussianComponent, to: &GaussianComponent, n_draws: usize, seed: u64, direction: u64) -> Self {
        let p = from.dim();
        let delta: Vec<f64> = from.mean.iter().zip(to.mean.iter()).map(|(a, b)| a - b).collect();
        let mut d = vec![0.0; p];
        to.chol.solve(&delta, &mut d);
        let d_sq = d.iter().map(|v| v * v).sum();
        let kappa = (to.weight.ln() - from.weight.ln()) - 0.5 * (to.chol.log_det - from.chol.log_det);
        let chunks = chunked_draws(seed, direction, n_draws, |stream, range, rng| {
            let mut z = vec![0.0; p];
            let mut lz = vec![0.0; p];
            let mut v = vec![0.0; p];
            let mut out = Vec::with_capacity(range.len());
            for index in range {
                fill_standard_normal(rng, &mut z);
                from.chol.mul(&z, &mut lz);
                to.chol.solve(&lz, &mut v);
                let a: f64 = d.iter().zip(&v).map(|(x, y)| x * y).sum();
                let b = v.iter().map(|x| x * x).sum::<f64>() - z.iter().map(|x| x * x).sum::<f64>();
                out.push((a, b, tie_coin(seed, stream, index)));
            }
            out
        });
        let flat: Vec<(f64, f64, bool)> = chunks.into_iter().flatten().collect();
        ScaledDirection {
            kappa,
            d_sq,
            a: flat.iter().map(|t| t.0).collect(),
            b: flat.iter().map(|t| t.1).collect(),
            ties: flat.iter().map(|t| t.2).collect(),
        }
    }

    fn rate(&self, c: f64) -> f64 {
        let s = 1.0 / c.sqrt();
        let base = self.d_sq * s * s;
        let threshold = 2.0 * self.kappa;
        let wrong = self
            .a
            .iter()
            .zip(&self.b)
            .zip(&self.ties)
            .filter(|((&a, &b), &tie)| {
                let q = base + 2.0 * a * s + b;
                q < threshold || (q == threshold && tie)
            })
            .count();
        wrong as f64 / self.a.len() as f64
    }
}

/// Generalized overlap of a mixture as a function of a covariance scale
/// applied to every component, using common random numbers so that the
/// objective is a deterministic function of the scale.
#[derive(Debug, Clone)]
pub struct ScaledOverlap {
    k: usize,
    pairs: Vec<(usize, usize, ScaledDirection, ScaledDirection)>,
}

impl ScaledOverlap {
    /// Draws are seeded exactly as [`overlap_matrix`] seeds them, so
    /// `omega_at(c)` tracks `overlap_matrix` on the rescaled components.
    pub fn new(components: &[GaussianComponent], n_draws: usize, seed: u64) -> Result<Self> {
        validate_mixture(components)?;
        if n_draws == 0 {
            return Err(Error::InvalidData("n_draws must be at least 1".into()));
        }
        let k = components.len();
        let pairs = (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .map(|(i, j)| {
                let s = pair_seed(seed, i, j);
                let fwd = ScaledDirection::new(&components[i], &components[j], n_draws, s, 0);
                let back = ScaledDirection::new(&components[j], &components[i], n_draws, s, 1);
                (i, j, fwd, back)
            })
            .collect();
        Ok(ScaledOverlap { k, pairs })
    }

    pub fn omega_at(&self, c: f64) -> DMatrix<f64> {
        let mut omega = DMatrix::zeros(self.k, self.k);
        for (i, j, fwd, back) in &self.pairs {
            let v = fwd.rate(c) + back.rate(c);
            omega[(*i, *j)] = v;
            omega[(*j, *i)] = v;
        }
        omega
    }

    pub fn generalized_at(&self, c: f64) -> f64 {
        let mut bar = self.omega_at(c);
        bar.fill_diagonal(1.0);
        (SymmetricEigen::new(bar).eigenvalues.max() - 1.0) / (self.k - 1) as f64
    }
}

/// One strict-lower-triangle cell of the overlap heatmap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub class_i: String,
    pub class_j: String,
    pub omega: f64,
    /// `omega / max`, or 0 when every overlap is zero.
    pub color: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub cells: Vec<HeatmapCell>,
    pub max: f64,
}

/// Cells `(i, j)` with `i > j`, row by row, colored on `[0, max]`.
pub fn heatmap_export(omega: &OverlapMatrix, labels: &[String]) -> Result<Heatmap> {
    let k = omega.k();
    if labels.len() != k {
        return Err(Error::DimensionMismatch { expected: k, actual: labels.len() });
    }
    let max = (1..k).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| omega.get(i, j)).fold(0.0, f64::max);
    let cells = (1..k)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| {
            let value = omega.get(i, j);
            HeatmapCell {
                class_i: labels[i].clone(),
                class_j: labels[j].clone(),
                omega: value,
                color: if max > 0.0 { value / max } else { 0.0 },
            }
        })
        .collect();
    Ok(Heatmap { cells, max })
}
