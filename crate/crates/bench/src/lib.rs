//! Shared fixtures for the criterion benchmarks.

use radviz3d::{simulate_mixture, DataSet, GaussianComponent, SimSpec};

/// A labeled mixture with `classes` groups in `dims` dimensions. The
/// calibration uses few draws since only the shape of the data matters here.
pub fn mixture(classes: usize, dims: usize, rows: usize, seed: u64) -> (DataSet, Vec<GaussianComponent>) {
    let spec = SimSpec { calibration_draws: 20_000, ..SimSpec::new(classes, dims, rows, 0.01, seed) };
    let sim = simulate_mixture(&spec).expect("benchmark fixture calibrates");
    (sim.data, sim.components)
}
