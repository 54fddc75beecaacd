//! Solves of the corner-truncated system for a decreasing list of exclusion radii.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::nystrom::{assemble_system, solve_densities, solve_min_norm};
use super::{BoundaryData, QuadratureGrid};
use crate::error::{Error, Result};
use crate::geometry::CornerDomainMap;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub n: usize,
    pub q: f64,
    pub condition: f64,
    pub singular: bool,
    pub residual_offgrid: f64,
    /// `(φ₁, φ₃)` at each probe angle; `None` where the angle falls in an excluded arc.
    pub probes: Vec<Option<(f64, f64)>>,
}

/// Largest probe-value change between two consecutive radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepDifference {
    pub delta_from: f64,
    pub delta_to: f64,
    pub max_abs_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub map: String,
    pub probe_angles: Vec<f64>,
    pub rows: Vec<SweepRow>,
    pub differences: Vec<SweepDifference>,
}

/// Solves the truncated system for each `δ` in `deltas` (strictly decreasing,
/// positive) and tabulates the densities at `probe_angles`. Nothing is
/// asserted about the behaviour as `δ` shrinks.
pub fn delta_sweep(
    map: &CornerDomainMap,
    data: &BoundaryData,
    deltas: &[f64],
    n: usize,
    q: f64,
    probe_angles: &[f64],
) -> Result<SweepReport> {
    if deltas.is_empty() {
        return Err(Error::Config("delta sweep needs at least one delta".into()));
    }
    if deltas.iter().any(|d| !(*d > 0.0)) || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("deltas must be positive and strictly decreasing".into()));
    }
    let angles: Vec<f64> = map.corners.iter().map(|c| c.angle).collect();
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let grid = Arc::new(QuadratureGrid::graded(n, q, delta, &angles)?);
        let system = assemble_system(map, data, grid.clone())?;
        let (density, diag) = match solve_densities(map, &system) {
            Ok(v) => v,
            Err(Error::SingularSystem { .. }) => solve_min_norm(map, &system)?,
            Err(e) => return Err(e),
        };
        let probes = probe_angles
            .iter()
            .map(|t| grid.locate(*t).map(|_| density.eval(*t)))
            .collect();
        rows.push(SweepRow {
            delta,
            n: diag.n,
            q,
            condition: diag.condition,
            singular: diag.singular,
            residual_offgrid: diag.residual_offgrid,
            probes,
        });
    }
    let differences = rows
        .windows(2)
        .map(|w| {
            let max_abs_diff = w[0]
                .probes
                .iter()
                .zip(&w[1].probes)
                .filter_map(|(a, b)| Some((a.as_ref()?, b.as_ref()?)))
                .map(|(a, b)| (a.0 - b.0).abs().max((a.1 - b.1).abs()))
                .fold(0.0, f64::max);
            SweepDifference { delta_from: w[0].delta, delta_to: w[1].delta, max_abs_diff }
        })
        .collect();
    Ok(SweepReport { map: map.name.clone(), probe_angles: probe_angles.to_vec(), rows, differences })
}
