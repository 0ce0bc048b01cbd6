//! Cost measurements over the star family: the pair phase of the
//! compositional check against the component-pair baseline. Cost is
//! the summed size (states plus transitions) of every composite each
//! strategy builds; wall time comes along for context.

use std::time::Instant;

use crate::generate::{generate_star, StarSizeError};
use crate::verify::{self, Options, VerifyError};

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    /// Summed composite size over all protocol-pair checks.
    pub theorem_cost: u64,
    /// Summed composite size over all component-pair checks.
    pub baseline_cost: u64,
    pub theorem_ms: f64,
    pub baseline_ms: f64,
}

#[derive(Debug)]
pub enum ScalingError {
    Size(StarSizeError),
    Verify(VerifyError),
}

impl std::fmt::Display for ScalingError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScalingError::Size(e) => write!(f, "{e}"),
            ScalingError::Verify(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ScalingError {}

impl From<StarSizeError> for ScalingError {
    fn from(e: StarSizeError) -> Self {
        ScalingError::Size(e)
    }
}

impl From<VerifyError> for ScalingError {
    fn from(e: VerifyError) -> Self {
        ScalingError::Verify(e)
    }
}

pub fn bench_scaling(sizes: &[usize]) -> Result<Vec<ScalingRow>, ScalingError> {
    bench_scaling_with(sizes, &Options::default())
}

pub fn bench_scaling_with(
    sizes: &[usize],
    opts: &Options,
) -> Result<Vec<ScalingRow>, ScalingError> {
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let system = generate_star(n)?;

        let started = Instant::now();
        let pairs = verify::pair_checks_with(&system, opts)?;
        let theorem_ms = started.elapsed().as_secs_f64() * 1e3;
        let theorem_cost = pairs.iter().map(|c| c.cost()).sum();

        let started = Instant::now();
        let baseline = verify::component_pair_checks_with(&system, opts)?;
        let baseline_ms = started.elapsed().as_secs_f64() * 1e3;
        let baseline_cost = baseline.iter().map(|c| c.cost()).sum();

        rows.push(ScalingRow {
            n,
            theorem_cost,
            baseline_cost,
            theorem_ms,
            baseline_ms,
        });
    }
    Ok(rows)
}

pub fn to_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from("n,theorem_cost,baseline_cost,theorem_ms,baseline_ms\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{:.3},{:.3}\n",
            row.n, row.theorem_cost, row.baseline_cost, row.theorem_ms, row.baseline_ms
        ));
    }
    out
}
