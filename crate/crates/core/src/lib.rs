//! Fully three-dimensional radial visualization of multivariate data.
//!
//! The crate covers the whole pipeline behind a RadViz-style display:
//!
//! - [`anchors`]: equi-spaced anchor directions on the sphere (Platonic
//!   vertices or a Fibonacci spiral) and on the circle.
//! - [`projection`]: minmax normalization and the radial map into the unit
//!   ball, plus the 2D and Viz3D baselines.
//! - [`overlap`]: Monte-Carlo pairwise misclassification overlaps between
//!   fitted Gaussian classes and the generalized overlap summary.
//! - [`simulate`]: Gaussian-mixture data calibrated to a target generalized
//!   overlap.
//! - [`io`]: CSV ingestion, scene JSON and standalone HTML export.

pub mod anchors;
pub mod data;
pub mod error;
pub mod io;
pub mod overlap;
pub mod projection;
pub mod simulate;

pub use anchors::{
    circle_anchors, default_anchors, fibonacci_anchors, min_pairwise_angle, platonic_anchors, AnchorMethod, AnchorMode,
    AnchorSet, PlatonicSolid, UnitVector,
};
pub use data::DataSet;
pub use error::{Error, Result};
pub use overlap::{
    fit_components, generalized_overlap, heatmap_export, overlap_matrix, pairwise_overlap, GaussianComponent, Heatmap,
    HeatmapCell, OverlapMatrix,
};
pub use projection::{
    minmax_normalize, normalize, project, project_dataset, spring_residual, viz3d_project, Normalization,
    NormalizationRecord, Projection, ProjectionMethod,
};
pub use simulate::{rescale_components, simulate_mixture, SimSpec, Simulation};
