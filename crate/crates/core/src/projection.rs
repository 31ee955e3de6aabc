//! Normalization and the generalized radial visualization map.
//!
//! An observation `x >= 0` is sent to `U x / sum(x)`, where the columns of
//! `U` are the anchors. Equivalently the image is the point where springs
//! from every anchor, with stiffness `x_j`, balance. With unit anchors the
//! image is a convex combination of them and so lies in the closed unit
//! ball. Circle anchors give the classic 2D layout, sphere anchors the 3D
//! one.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anchors::{circle_anchors, AnchorSet};
use crate::data::DataSet;
use crate::error::{Error, Result};

/// Per-column extremes recorded by [`minmax_normalize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRecord {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Columns with `min == max`; these are mapped to 0.5.
    pub constant_columns: Vec<usize>,
}

/// Preprocessing applied before projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Column-wise rescaling into `[0, 1]`.
    #[default]
    MinMax,
    /// Rows are treated as compositions: they must be nonnegative and are
    /// closed to sum to one.
    Compositional,
    /// Raw values; must be nonnegative.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMethod {
    RadViz2D,
    RadViz3D,
    Viz3D,
}

/// A projected data set.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// `n x d` ball coordinates, `d` in {2, 3}.
    pub points: DMatrix<f64>,
    pub anchor_set: AnchorSet,
    pub normalization: Option<NormalizationRecord>,
    pub method: ProjectionMethod,
    /// Rows whose weights summed to zero; these sit at the origin.
    pub degenerate_rows: Vec<usize>,
}

/// Image of a single observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedPoint {
    pub coords: Vec<f64>,
    /// Set when the observation summed to zero and was placed at the origin.
    pub degenerate: bool,
}

/// Rescales every column to `[0, 1]` via `(x - min) / (max - min)`.
/// Constant columns become 0.5 and are listed in the record.
pub fn minmax_normalize(data: &DataSet) -> (DataSet, NormalizationRecord) {
    let values = data.values();
    let p = data.p();
    let mut record =
        NormalizationRecord { min: Vec::with_capacity(p), max: Vec::with_capacity(p), constant_columns: Vec::new() };
    let mut out = values.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let lo = col.min();
        let hi = col.max();
        record.min.push(lo);
        record.max.push(hi);
        if lo == hi {
            record.constant_columns.push(j);
            col.fill(0.5);
        } else {
            let range = hi - lo;
            col.apply(|v| *v = (*v - lo) / range);
        }
    }
    let normalized = data.with_values(out).expect("normalization preserves validity");
    (normalized, record)
}

fn check_nonnegative(values: &DMatrix<f64>) -> Result<()> {
    for (j, col) in values.column_iter().enumerate() {
        if let Some(i) = col.iter().position(|&v| v < 0.0) {
            return Err(Error::NegativeInput { row: i, column: j, value: col[i] });
        }
    }
    Ok(())
}

/// Applies `mode` and returns the data the projection will consume.
pub fn normalize(data: &DataSet, mode: Normalization) -> Result<(DataSet, Option<NormalizationRecord>)> {
    match mode {
        Normalization::MinMax => {
            let (out, record) = minmax_normalize(data);
            Ok((out, Some(record)))
        }
        Normalization::Compositional => {
            check_nonnegative(data.values())?;
            let mut values = data.values().clone();
            for mut row in values.row_iter_mut() {
                let total = row.sum();
                if total > 0.0 {
                    row /= total;
                }
            }
            Ok((data.with_values(values)?, None))
        }
        Normalization::None => {
            check_nonnegative(data.values())?;
            Ok((data.clone(), None))
        }
    }
}

/// Projects one nonnegative observation onto the ball spanned by `anchors`.
pub fn project(x: &[f64], anchors: &AnchorSet) -> Result<ProjectedPoint> {
    if x.len() != anchors.p() {
        return Err(Error::DimensionMismatch { expected: anchors.p(), actual: x.len() });
    }
    if let Some(j) = x.iter().position(|&v| v < 0.0 || v.is_nan()) {
        return Err(Error::NegativeInput { row: 0, column: j, value: x[j] });
    }
    Ok(project_unchecked(x.iter().copied(), anchors))
}

fn project_unchecked(x: impl Iterator<Item = f64> + Clone, anchors: &AnchorSet) -> ProjectedPoint {
    let dim = anchors.dim();
    let total: f64 = x.clone().sum();
    let mut coords = vec![0.0; dim];
    if total <= 0.0 {
        return ProjectedPoint { coords, degenerate: true };
    }
    // Weights first so that a single active feature lands exactly on its anchor.
    for (w, u) in x.zip(anchors) {
        if w == 0.0 {
            continue;
        }
        let w = w / total;
        for (c, uc) in coords.iter_mut().zip(u.coords()) {
            *c += w * uc;
        }
    }
    ProjectedPoint { coords, degenerate: false }
}

/// Projects every row of `data`, normalizing first according to `mode`.
pub fn project_dataset(data: &DataSet, anchors: &AnchorSet, mode: Normalization) -> Result<Projection> {
    if anchors.p() != data.p() {
        return Err(Error::DimensionMismatch { expected: anchors.p(), actual: data.p() });
    }
    let (prepared, record) = normalize(data, mode)?;
    let method = match anchors.dim() {
        2 => ProjectionMethod::RadViz2D,
        _ => ProjectionMethod::RadViz3D,
    };
    let (points, degenerate_rows) = project_rows(prepared.values(), anchors);
    Ok(Projection { points, anchor_set: anchors.clone(), normalization: record, method, degenerate_rows })
}

/// Projects the rows of an already-prepared nonnegative matrix.
pub(crate) fn project_rows(values: &DMatrix<f64>, anchors: &AnchorSet) -> (DMatrix<f64>, Vec<usize>) {
    let n = values.nrows();
    let projected: Vec<ProjectedPoint> =
        (0..n).into_par_iter().map(|i| project_unchecked(values.row(i).iter().copied(), anchors)).collect();
    let points = DMatrix::from_fn(n, anchors.dim(), |i, k| projected[i].coords[k]);
    let degenerate = projected.iter().enumerate().filter(|(_, p)| p.degenerate).map(|(i, _)| i).collect();
    (points, degenerate)
}

/// Circle-anchor 2D coordinates lifted by the row mean of the normalized
/// attributes. Always minmax-normalizes.
pub fn viz3d_project(data: &DataSet) -> Result<Projection> {
    viz3d_project_with(data, Normalization::MinMax)
}

/// [`viz3d_project`] with a caller-chosen normalization.
pub fn viz3d_project_with(data: &DataSet, mode: Normalization) -> Result<Projection> {
    let anchors = circle_anchors(data.p())?;
    let (prepared, record) = normalize(data, mode)?;
    let values = prepared.values();
    let (planar, degenerate_rows) = project_rows(values, &anchors);
    let p = values.ncols() as f64;
    let points = DMatrix::from_fn(values.nrows(), 3, |i, k| match k {
        2 => values.row(i).sum() / p,
        _ => planar[(i, k)],
    });
    Ok(Projection {
        points,
        anchor_set: anchors,
        normalization: record,
        method: ProjectionMethod::Viz3D,
        degenerate_rows,
    })
}

/// Net spring force `sum_j x_j (y - u_j)` at `y`. Vanishes when `y` is the
/// projection of `x`.
pub fn spring_residual(x: &[f64], y: &[f64], anchors: &AnchorSet) -> Result<Vec<f64>> {
    if x.len() != anchors.p() {
        return Err(Error::DimensionMismatch { expected: anchors.p(), actual: x.len() });
    }
    if y.len() != anchors.dim() {
        return Err(Error::DimensionMismatch { expected: anchors.dim(), actual: y.len() });
    }
    let mut force = vec![0.0; y.len()];
    for (&w, u) in x.iter().zip(anchors) {
        for ((f, yc), uc) in force.iter_mut().zip(y).zip(u.coords()) {
            *f += w * (yc - uc);
        }
    }
    Ok(force)
}
