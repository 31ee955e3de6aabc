//! Anchor points on the unit sphere and the unit circle.
//!
//! Each anchor is the direction assigned to one feature; the ordered set of
//! anchors forms the columns of the projection matrix used by
//! [`crate::projection`]. Three constructions are provided:
//!
//! - Platonic solid vertex sets, exactly equi-spaced, for `p` in {4, 6, 8, 12, 20}.
//! - A golden-angle (Fibonacci) spiral for any `p >= 4`.
//! - Equally spaced points on the unit circle, the classic 2D layout.
//!
//! Anchor order is part of the contract: the projection is order-sensitive,
//! so every constructor emits a fixed, documented order.

use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Golden ratio.
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// Cardinalities with an exactly equi-spaced (Platonic) anchor set.
pub const PLATONIC_CARDINALITIES: [usize; 5] = [4, 6, 8, 12, 20];

const UNIT_TOLERANCE: f64 = 1e-12;

/// A direction in 2D or 3D with unit Euclidean norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Scales `coords` to unit length. Fails for zero vectors and for
    /// dimensions other than 2 or 3.
    pub fn normalized(coords: Vec<f64>) -> Result<Self> {
        if coords.len() != 2 && coords.len() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, actual: coords.len() });
        }
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidData("anchor direction has zero or non-finite length".into()));
        }
        Ok(UnitVector(coords.into_iter().map(|c| c / norm).collect()))
    }

    /// Accepts `coords` only if they already have unit norm within 1e-12.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::InvalidData(format!("anchor norm {norm} is not 1")));
        }
        if coords.len() != 2 && coords.len() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, actual: coords.len() });
        }
        Ok(UnitVector(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Angle to `other` in radians, computed from the chord length so that
    /// nearly coincident directions are resolved accurately.
    pub fn angle_to(&self, other: &UnitVector) -> f64 {
        let chord = self.chord(other);
        2.0 * (chord / 2.0).min(1.0).asin()
    }

    fn chord(&self, other: &UnitVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

impl<'de> Deserialize<'de> for UnitVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(deserializer)?;
        UnitVector::new(coords).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorMethod {
    Platonic,
    Fibonacci,
    Circle,
}

impl fmt::Display for AnchorMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnchorMethod::Platonic => "platonic",
            AnchorMethod::Fibonacci => "fibonacci",
            AnchorMethod::Circle => "circle",
        })
    }
}

/// The solid whose vertices form a Platonic anchor set. Named after the
/// geometry: 12 anchors are icosahedron vertices, 20 are dodecahedron
/// vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlatonicSolid {
    Tetrahedron,
    Octahedron,
    Cube,
    Icosahedron,
    Dodecahedron,
}

impl PlatonicSolid {
    pub fn from_vertex_count(p: usize) -> Option<Self> {
        match p {
            4 => Some(PlatonicSolid::Tetrahedron),
            6 => Some(PlatonicSolid::Octahedron),
            8 => Some(PlatonicSolid::Cube),
            12 => Some(PlatonicSolid::Icosahedron),
            20 => Some(PlatonicSolid::Dodecahedron),
            _ => None,
        }
    }

    pub fn vertex_count(self) -> usize {
        match self {
            PlatonicSolid::Tetrahedron => 4,
            PlatonicSolid::Octahedron => 6,
            PlatonicSolid::Cube => 8,
            PlatonicSolid::Icosahedron => 12,
            PlatonicSolid::Dodecahedron => 20,
        }
    }
}

/// How [`default_anchors`] picks a construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnchorMode {
    /// Platonic vertices when available, otherwise the Fibonacci spiral.
    #[default]
    Auto,
    ForceFibonacci,
}

/// Ordered anchors, one per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSet {
    anchors: Vec<UnitVector>,
    method: AnchorMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    solid: Option<PlatonicSolid>,
}

impl AnchorSet {
    /// Builds a set from arbitrary anchors, checking dimension agreement
    /// and distinctness.
    pub fn from_anchors(anchors: Vec<UnitVector>, method: AnchorMethod) -> Result<Self> {
        let dim = anchors.first().map(UnitVector::dim).unwrap_or(3);
        if let Some(bad) = anchors.iter().find(|a| a.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: bad.dim() });
        }
        let set = AnchorSet { anchors, method, solid: None };
        set.min_pairwise_angle()?;
        Ok(set)
    }

    /// Number of anchors, i.e. the number of features the set can project.
    pub fn p(&self) -> usize {
        self.anchors.len()
    }

    /// Ambient dimension: 2 for circle anchors, 3 otherwise.
    pub fn dim(&self) -> usize {
        self.anchors.first().map(UnitVector::dim).unwrap_or(3)
    }

    pub fn method(&self) -> AnchorMethod {
        self.method
    }

    pub fn solid(&self) -> Option<PlatonicSolid> {
        self.solid
    }

    pub fn anchors(&self) -> &[UnitVector] {
        &self.anchors
    }

    pub fn get(&self, j: usize) -> Option<&UnitVector> {
        self.anchors.get(j)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, UnitVector> {
        self.anchors.iter()
    }

    /// The `dim x p` projection matrix whose columns are the anchors.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim(), self.p(), |r, c| self.anchors[c].coords()[r])
    }

    /// Reorders anchors so that new position `k` holds old anchor `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.p()];
        if order.len() != self.p() {
            return Err(Error::DimensionMismatch { expected: self.p(), actual: order.len() });
        }
        for &k in order {
            if k >= self.p() || std::mem::replace(&mut seen[k], true) {
                return Err(Error::InvalidData(format!("{order:?} is not a permutation")));
            }
        }
        Ok(AnchorSet {
            anchors: order.iter().map(|&k| self.anchors[k].clone()).collect(),
            method: self.method,
            solid: self.solid,
        })
    }

    /// Smallest angle between any two anchors, in radians.
    pub fn min_pairwise_angle(&self) -> Result<f64> {
        min_pairwise_angle(self)
    }
}

impl<'a> IntoIterator for &'a AnchorSet {
    type Item = &'a UnitVector;
    type IntoIter = std::slice::Iter<'a, UnitVector>;

    fn into_iter(self) -> Self::IntoIter {
        self.anchors.iter()
    }
}

fn unsupported(p: usize, method: &'static str) -> Error {
    Error::UnsupportedCardinality { p, method }
}

/// Appends every sign combination of `base` (signs applied to nonzero
/// entries, `+` before `-`, first coordinate varying slowest).
fn push_signed(out: &mut Vec<[f64; 3]>, base: [f64; 3]) {
    let free: Vec<usize> = (0..3).filter(|&k| base[k] != 0.0).collect();
    for mask in 0..(1u32 << free.len()) {
        let mut v = base;
        for (bit, &k) in free.iter().enumerate() {
            if mask & (1 << (free.len() - 1 - bit)) != 0 {
                v[k] = -v[k];
            }
        }
        out.push(v);
    }
}

/// Vertices of the Platonic solid with `p` vertices, scaled to the unit
/// sphere.
///
/// Order for each `p`:
///
/// - 4: `(1,1,1)`, `(1,-1,-1)`, `(-1,1,-1)`, `(-1,-1,1)`, all over `sqrt(3)`.
/// - 6: `(±1,0,0)`, `(0,±1,0)`, `(0,0,±1)`.
/// - 8: `(±1,±1,±1)/sqrt(3)`.
/// - 12 (icosahedron): `(0,±1,±φ)`, `(±1,±φ,0)`, `(±φ,0,±1)`, over `sqrt(1+φ²)`.
/// - 20 (dodecahedron): `(±1,±1,±1)`, `(0,±1/φ,±φ)`, `(±1/φ,±φ,0)`,
///   `(±φ,0,±1/φ)`, over `sqrt(3)`.
///
/// Within each group signs run `+` before `-`, leftmost signed coordinate
/// varying slowest.
pub fn platonic_anchors(p: usize) -> Result<AnchorSet> {
    let solid = PlatonicSolid::from_vertex_count(p).ok_or_else(|| unsupported(p, "platonic"))?;
    let phi = GOLDEN_RATIO;
    let mut raw = Vec::with_capacity(p);
    match solid {
        PlatonicSolid::Tetrahedron => {
            raw.extend([[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]);
        }
        PlatonicSolid::Octahedron => {
            push_signed(&mut raw, [1.0, 0.0, 0.0]);
            push_signed(&mut raw, [0.0, 1.0, 0.0]);
            push_signed(&mut raw, [0.0, 0.0, 1.0]);
        }
        PlatonicSolid::Cube => push_signed(&mut raw, [1.0, 1.0, 1.0]),
        PlatonicSolid::Icosahedron => {
            push_signed(&mut raw, [0.0, 1.0, phi]);
            push_signed(&mut raw, [1.0, phi, 0.0]);
            push_signed(&mut raw, [phi, 0.0, 1.0]);
        }
        PlatonicSolid::Dodecahedron => {
            let inv = 1.0 / phi;
            push_signed(&mut raw, [1.0, 1.0, 1.0]);
            push_signed(&mut raw, [0.0, inv, phi]);
            push_signed(&mut raw, [inv, phi, 0.0]);
            push_signed(&mut raw, [phi, 0.0, inv]);
        }
    }
    debug_assert_eq!(raw.len(), p);
    let anchors = raw.into_iter().map(|v| UnitVector::normalized(v.to_vec())).collect::<Result<Vec<_>>>()?;
    Ok(AnchorSet { anchors, method: AnchorMethod::Platonic, solid: Some(solid) })
}

/// Golden-angle spiral on the sphere, anchors ordered by `j = 1..=p`:
///
/// ```text
/// z_j     = (2j - 1)/p - 1
/// theta_j = 2 pi j / golden_ratio
/// u_j     = (cos(theta_j) sqrt(1 - z_j²), sin(theta_j) sqrt(1 - z_j²), z_j)
/// ```
///
/// Accepts Platonic cardinalities too, for side-by-side comparisons.
pub fn fibonacci_anchors(p: usize) -> Result<AnchorSet> {
    if p < 4 {
        return Err(unsupported(p, "fibonacci"));
    }
    let n = p as f64;
    let anchors = (1..=p)
        .map(|j| {
            let j = j as f64;
            let z = (2.0 * j - 1.0) / n - 1.0;
            let theta = TAU * j / GOLDEN_RATIO;
            let r = (1.0 - z * z).sqrt();
            // r and z already satisfy r² + z² = 1; rounding is below 1e-15.
            UnitVector(vec![theta.cos() * r, theta.sin() * r, z])
        })
        .collect();
    Ok(AnchorSet { anchors, method: AnchorMethod::Fibonacci, solid: None })
}

/// `p` equally spaced points on the unit circle starting at `(1, 0)` and
/// running counter-clockwise.
pub fn circle_anchors(p: usize) -> Result<AnchorSet> {
    if p < 3 {
        return Err(unsupported(p, "circle"));
    }
    let anchors = (0..p)
        .map(|j| {
            let t = TAU * j as f64 / p as f64;
            UnitVector(vec![t.cos(), t.sin()])
        })
        .collect();
    Ok(AnchorSet { anchors, method: AnchorMethod::Circle, solid: None })
}

/// The 3D anchor set used unless the caller asks otherwise.
pub fn default_anchors(p: usize, mode: AnchorMode) -> Result<AnchorSet> {
    match mode {
        AnchorMode::Auto if PLATONIC_CARDINALITIES.contains(&p) => platonic_anchors(p),
        AnchorMode::Auto | AnchorMode::ForceFibonacci => fibonacci_anchors(p),
    }
}

/// Minimum over all anchor pairs of the angle between them, in radians.
///
/// Fails with [`Error::DegenerateSet`] when two anchors lie within 1e-12 of
/// each other.
pub fn min_pairwise_angle(set: &AnchorSet) -> Result<f64> {
    if set.p() < 2 {
        return Err(Error::InvalidData("need at least two anchors".into()));
    }
    let mut best = PI;
    for (i, a) in set.anchors.iter().enumerate() {
        for (j, b) in set.anchors.iter().enumerate().skip(i + 1) {
            if a.chord(b) <= UNIT_TOLERANCE {
                return Err(Error::DegenerateSet(i, j));
            }
            best = best.min(a.angle_to(b));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    const INV_SQRT3: f64 = 0.577_350_269_189_625_8;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn pair_dots(set: &AnchorSet) -> Vec<f64> {
        let a = set.anchors();
        let mut out = Vec::new();
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                out.push(a[i].dot(&a[j]));
            }
        }
        out
    }

    /// Counts of pairwise dot products falling on each expected value.
    fn spectrum_counts(set: &AnchorSet, values: &[f64]) -> Vec<usize> {
        let mut counts = vec![0; values.len()];
        for d in pair_dots(set) {
            let k = values
                .iter()
                .position(|v| (v - d).abs() <= 1e-10)
                .unwrap_or_else(|| panic!("dot product {d} outside expected spectrum {values:?}"));
            counts[k] += 1;
        }
        counts
    }

    #[test]
    fn tetrahedron_matches_table_order() {
        let set = platonic_anchors(4).unwrap();
        let s = INV_SQRT3;
        let expected = [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
        for (a, e) in set.iter().zip(expected) {
            assert!(close(a.coords(), &e, 1e-15), "{:?} vs {e:?}", a.coords());
        }
        assert_eq!(set.solid(), Some(PlatonicSolid::Tetrahedron));
    }

    #[test]
    fn octahedron_is_signed_axes() {
        let set = platonic_anchors(6).unwrap();
        let expected =
            [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
        for (a, e) in set.iter().zip(expected) {
            assert_eq!(a.coords(), &e);
        }
    }

    #[test]
    fn cube_is_normalized() {
        let set = platonic_anchors(8).unwrap();
        assert_eq!(set.p(), 8);
        let s = INV_SQRT3;
        assert!(close(set.get(0).unwrap().coords(), &[s, s, s], 1e-15));
        assert!(close(set.get(1).unwrap().coords(), &[s, s, -s], 1e-15));
        assert!(close(set.get(7).unwrap().coords(), &[-s, -s, -s], 1e-15));
        for a in &set {
            assert!((a.norm() - 1.0).abs() <= 1e-12);
            assert!(a.coords().iter().all(|c| (c.abs() - s).abs() < 1e-15));
        }
    }

    #[test]
    fn solids_are_named_by_geometry() {
        assert_eq!(platonic_anchors(12).unwrap().solid(), Some(PlatonicSolid::Icosahedron));
        assert_eq!(platonic_anchors(20).unwrap().solid(), Some(PlatonicSolid::Dodecahedron));
    }

    #[test]
    fn platonic_dot_spectra() {
        let r5 = 5f64.sqrt();
        let cases: [(usize, Vec<f64>, Vec<usize>); 5] = [
            (4, vec![-1.0 / 3.0], vec![6]),
            (6, vec![0.0, -1.0], vec![12, 3]),
            (8, vec![1.0 / 3.0, -1.0 / 3.0, -1.0], vec![12, 12, 4]),
            (12, vec![1.0 / r5, -1.0 / r5, -1.0], vec![30, 30, 6]),
            (20, vec![r5 / 3.0, 1.0 / 3.0, -1.0 / 3.0, -r5 / 3.0, -1.0], vec![30, 60, 60, 30, 10]),
        ];
        for (p, values, counts) in cases {
            let set = platonic_anchors(p).unwrap();
            assert_eq!(spectrum_counts(&set, &values), counts, "p = {p}");
        }
    }

    #[test]
    fn platonic_sets_are_balanced_and_unit() {
        for p in PLATONIC_CARDINALITIES {
            let set = platonic_anchors(p).unwrap();
            let mut centroid = [0.0; 3];
            for a in &set {
                assert!((a.norm() - 1.0).abs() <= 1e-12);
                for (c, v) in centroid.iter_mut().zip(a.coords()) {
                    *c += v;
                }
            }
            assert!(centroid.iter().all(|c| c.abs() <= 1e-10), "p = {p}: {centroid:?}");
        }
    }

    #[test]
    fn platonic_rejects_other_cardinalities() {
        for p in [0, 3, 5, 7, 10, 21] {
            assert!(matches!(platonic_anchors(p), Err(Error::UnsupportedCardinality { .. })));
        }
    }

    #[test]
    fn fibonacci_evaluates_closed_form() {
        let set = fibonacci_anchors(5).unwrap();
        // j = 1: z = 1/5 - 1
        assert_eq!(set.get(0).unwrap().coords()[2], 1.0 / 5.0 - 1.0);
        assert!((set.get(0).unwrap().coords()[2] + 0.8).abs() < 1e-15);
        // j = 3: z = 0, so the anchor sits on the equator at longitude 6 pi / phi.
        let theta = 6.0 * PI / GOLDEN_RATIO;
        assert!(close(set.get(2).unwrap().coords(), &[theta.cos(), theta.sin(), 0.0], 1e-15));
    }

    #[test]
    fn fibonacci_latitudes_are_arithmetic() {
        for p in [4, 5, 7, 9, 33, 100] {
            let set = fibonacci_anchors(p).unwrap();
            for (j, a) in set.iter().enumerate() {
                let j = (j + 1) as f64;
                assert_eq!(a.coords()[2], (2.0 * j - 1.0) / p as f64 - 1.0);
                assert!((a.norm() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn fibonacci_rejects_small_p() {
        assert!(fibonacci_anchors(3).is_err());
        assert!(fibonacci_anchors(4).is_ok());
    }

    #[test]
    fn circle_layouts() {
        let set = circle_anchors(4).unwrap();
        let expected = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (a, e) in set.iter().zip(expected) {
            assert!(close(a.coords(), &e, 1e-15));
        }
        let tri = circle_anchors(3).unwrap();
        assert!((tri.anchors()[0].angle_to(&tri.anchors()[1]) - TAU / 3.0).abs() < 1e-12);
        assert!((circle_anchors(6).unwrap().min_pairwise_angle().unwrap() - PI / 3.0).abs() < 1e-12);
        assert!((circle_anchors(7).unwrap().min_pairwise_angle().unwrap() - TAU / 7.0).abs() < 1e-12);
        assert!(circle_anchors(2).is_err());
    }

    #[test]
    fn default_dispatch() {
        let auto6 = default_anchors(6, AnchorMode::Auto).unwrap();
        assert_eq!(auto6.method(), AnchorMethod::Platonic);
        let fib6 = default_anchors(6, AnchorMode::ForceFibonacci).unwrap();
        assert_eq!(fib6.method(), AnchorMethod::Fibonacci);
        assert!((fib6.get(0).unwrap().coords()[2] + 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(default_anchors(5, AnchorMode::Auto).unwrap().method(), AnchorMethod::Fibonacci);
        assert!(default_anchors(3, AnchorMode::Auto).is_err());
    }

    #[test]
    fn min_angle_known_values() {
        let octa = platonic_anchors(6).unwrap().min_pairwise_angle().unwrap();
        assert!((octa - PI / 2.0).abs() < 1e-12);
        let tetra = platonic_anchors(4).unwrap().min_pairwise_angle().unwrap();
        assert!((tetra - (-1.0f64 / 3.0).acos()).abs() < 1e-12);
    }

    #[test]
    fn coincident_anchors_are_degenerate() {
        let u = UnitVector::normalized(vec![1.0, 0.0, 0.0]).unwrap();
        let v = UnitVector::normalized(vec![0.0, 1.0, 0.0]).unwrap();
        let err = AnchorSet::from_anchors(vec![u.clone(), v, u], AnchorMethod::Platonic).unwrap_err();
        assert!(matches!(err, Error::DegenerateSet(0, 2)));
    }

    #[test]
    fn fibonacci_stays_well_separated() {
        // Regression floor: min angle * sqrt(p) bottoms out near 3.09 over
        // p in 5..=500.
        for p in 5..=500 {
            let angle = fibonacci_anchors(p).unwrap().min_pairwise_angle().unwrap();
            assert!(angle >= 3.0 / (p as f64).sqrt(), "p = {p}: {angle}");
        }
    }

    #[test]
    fn permutation_checks_input() {
        let set = platonic_anchors(4).unwrap();
        assert!(set.permuted(&[0, 0, 1, 2]).is_err());
        assert!(set.permuted(&[0, 1, 2]).is_err());
        let rev = set.permuted(&[3, 2, 1, 0]).unwrap();
        assert_eq!(rev.get(0), set.get(3));
    }

    #[test]
    fn unit_vector_roundtrips_through_json() {
        let set = fibonacci_anchors(9).unwrap();
        let json = serde_json::to_string(&set).unwrap();
        let back: AnchorSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, set);
        assert!(serde_json::from_str::<UnitVector>("[1.0, 1.0, 0.0]").is_err());
    }
}
