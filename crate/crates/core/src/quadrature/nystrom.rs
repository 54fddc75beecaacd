//! Nyström discretization of the boundary system for `(φ₁, φ₃)` and its solution.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{node_points, BoundaryData, QuadratureGrid};
use crate::error::{Error, Result};
use crate::geometry::{CornerDomainMap, PointData};
use crate::kernels::{kernel_quotients, BoundaryDensity};

/// Condition estimate above which the system is reported as singular.
pub const SINGULAR_CONDITION: f64 = 1e14;
/// Relative singular-value cutoff of the minimum-norm fallback solve.
pub const SVD_CUTOFF: f64 = 1e-12;

/// The real `2N × 2N` collocation system. Rows `0..N` carry the equation for
/// `ũ₁` at the nodes, rows `N..2N` the one for `ũ₃`; columns are the node
/// values of `φ₁` followed by those of `φ₃`.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub grid: Arc<QuadratureGrid>,
    pub points: Arc<Vec<PointData>>,
    pub data: BoundaryData,
}

/// Diagnostics of one solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub n: usize,
    pub delta: f64,
    pub q: f64,
    pub condition: f64,
    /// True when the condition estimate exceeded the threshold and the
    /// minimum-norm least-squares solution was used instead.
    pub singular: bool,
    pub method: String,
    /// Max abs residual of the discrete equations at the nodes.
    pub residual_nodes: f64,
    /// Max abs residual of the continuous equations at midpoints between nodes.
    pub residual_offgrid: f64,
    pub offgrid_points: usize,
}

/// Row of kernel weights for collocation at `z`: entries `(q₁, q₂)·S_j w_j/2π`.
fn kernel_row(
    map: &CornerDomainMap,
    grid: &QuadratureGrid,
    points: &[PointData],
    z: &PointData,
) -> Result<Vec<(Complex64, Complex64)>> {
    points
        .iter()
        .zip(&grid.weights)
        .map(|(s, w)| {
            let (q1, q2) = kernel_quotients(map, s, z)?;
            let c = s.z * (*w / TAU);
            Ok((q1 * c, q2 * c))
        })
        .collect()
}

/// The data-independent system matrix for `grid`.
pub fn assemble_matrix(map: &CornerDomainMap, grid: &QuadratureGrid, points: &[PointData]) -> Result<DMatrix<f64>> {
    let n = grid.len();
    if n == 0 {
        return Err(Error::Config("empty quadrature grid".into()));
    }
    let row_for = |i: usize| kernel_row(map, grid, points, &points[i]);
    #[cfg(feature = "parallel")]
    let rows: Vec<Result<Vec<(Complex64, Complex64)>>> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(row_for).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Result<Vec<(Complex64, Complex64)>>> = (0..n).map(row_for).collect();
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for (i, row) in rows.into_iter().enumerate() {
        let row = row?;
        for (j, (m1, m2)) in row.into_iter().enumerate() {
            let c = grid.weights[j] / (4.0 * PI);
            let half = if i == j { 0.5 } else { 0.0 };
            m[(i, j)] = half + m1.re - 2.0 * m2.im + c;
            m[(i, n + j)] = -2.0 * m2.re;
            m[(n + i, j)] = -2.0 * m2.re;
            m[(n + i, n + j)] = half + m1.re + 2.0 * m2.im + c;
        }
    }
    Ok(m)
}

/// Nyström system for data `(ũ₁, ũ₃)` on `grid`.
pub fn assemble_system(map: &CornerDomainMap, data: &BoundaryData, grid: Arc<QuadratureGrid>) -> Result<LinearSystem> {
    if grid.is_empty() {
        return Err(Error::Config("empty quadrature grid".into()));
    }
    let points = Arc::new(node_points(map, &grid));
    let matrix = assemble_matrix(map, &grid, &points)?;
    let rhs = rhs_for(data, &grid)?;
    Ok(LinearSystem { matrix, rhs, grid, points, data: data.clone() })
}

/// Right-hand side `(ũ₁(S_i), ũ₃(S_i))` stacked.
pub fn rhs_for(data: &BoundaryData, grid: &QuadratureGrid) -> Result<DVector<f64>> {
    let n = grid.len();
    let mut rhs = DVector::<f64>::zeros(2 * n);
    for (i, t) in grid.theta.iter().enumerate() {
        let (a, b) = ((data.u1)(*t), (data.u3)(*t));
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Config(format!("boundary data is not finite at angle {t}")));
        }
        rhs[i] = a;
        rhs[n + i] = b;
    }
    Ok(rhs)
}

/// 1-norm condition estimate `‖A‖₁·est(‖A⁻¹‖₁)` from an LU factorization
/// (Hager's method with Higham's alternative test vector).
fn condition_estimate(a: &DMatrix<f64>, lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let n = a.nrows();
    let norm_a = (0..n).map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let l = lu.l();
    let u = lu.u();
    let p = lu.p();
    let solve = |b: &DVector<f64>| lu.solve(b);
    let solve_t = |b: &DVector<f64>| -> Option<DVector<f64>> {
        let w = u.tr_solve_upper_triangular(b)?;
        let mut v = l.tr_solve_lower_triangular(&w)?;
        p.inv_permute_rows(&mut v);
        Some(v)
    };
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut est = 0.0f64;
    for _ in 0..5 {
        let Some(y) = solve(&x) else { return f64::INFINITY };
        est = est.max(y.iter().map(|v| v.abs()).sum());
        let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let Some(z) = solve_t(&xi) else { return f64::INFINITY };
        let (jmax, zmax) = z.iter().enumerate().fold((0, 0.0f64), |acc, (j, v)| {
            if v.abs() > acc.1 {
                (j, v.abs())
            } else {
                acc
            }
        });
        if zmax <= z.dot(&x) {
            break;
        }
        x = DVector::zeros(n);
        x[jmax] = 1.0;
    }
    let alt = DVector::from_fn(n, |i, _| {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        sign * (1.0 + i as f64 / (n.max(2) - 1) as f64)
    });
    if let Some(y) = solve(&alt) {
        est = est.max(2.0 * y.iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64));
    }
    let cond = norm_a * est;
    if cond.is_finite() {
        cond
    } else {
        f64::INFINITY
    }
}

fn density_from(system: &LinearSystem, x: &DVector<f64>) -> BoundaryDensity {
    let n = system.grid.len();
    BoundaryDensity::from_samples(
        system.grid.clone(),
        x.rows(0, n).iter().cloned().collect(),
        x.rows(n, n).iter().cloned().collect(),
    )
}

fn nodes_residual(system: &LinearSystem, x: &DVector<f64>) -> f64 {
    (&system.matrix * x - &system.rhs).amax()
}

/// Dense LU solve with a condition estimate. Fails with `SingularSystem` when
/// the estimate exceeds [`SINGULAR_CONDITION`].
pub fn solve_densities(map: &CornerDomainMap, system: &LinearSystem) -> Result<(BoundaryDensity, SolveDiagnostics)> {
    let lu = system.matrix.clone().lu();
    let condition = condition_estimate(&system.matrix, &lu);
    if !(condition <= SINGULAR_CONDITION) {
        return Err(Error::SingularSystem { condition });
    }
    let x = lu.solve(&system.rhs).ok_or(Error::SingularSystem { condition: f64::INFINITY })?;
    finish(map, system, x, condition, false, "lu")
}

/// Minimum-norm least-squares solve through the SVD, discarding singular values
/// below [`SVD_CUTOFF`] times the largest. Used when the system is singular.
pub fn solve_min_norm(map: &CornerDomainMap, system: &LinearSystem) -> Result<(BoundaryDensity, SolveDiagnostics)> {
    let svd = system.matrix.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let x = svd.solve(&system.rhs, SVD_CUTOFF * smax).map_err(|_| Error::SingularSystem { condition })?;
    finish(map, system, x, condition, true, "svd-min-norm")
}

fn finish(
    map: &CornerDomainMap,
    system: &LinearSystem,
    x: DVector<f64>,
    condition: f64,
    singular: bool,
    method: &str,
) -> Result<(BoundaryDensity, SolveDiagnostics)> {
    let residual_nodes = nodes_residual(system, &x);
    let density = density_from(system, &x);
    let (residual_offgrid, offgrid_points) = offgrid_residual(map, system, &density)?;
    let grid = &system.grid;
    Ok((
        density,
        SolveDiagnostics {
            n: grid.len(),
            delta: grid.delta,
            q: grid.grading_exponent,
            condition,
            singular,
            method: method.to_string(),
            residual_nodes,
            residual_offgrid,
            offgrid_points,
        },
    ))
}

/// Midpoints between consecutive nodes of each arc.
pub fn checkpoints(grid: &QuadratureGrid) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    for arc in &grid.arcs {
        let last = if arc.periodic { arc.count } else { arc.count - 1 };
        for k in 0..last {
            let i = arc.first + k;
            let j = arc.first + (k + 1) % arc.count;
            let mut b = grid.theta[j];
            if b < grid.theta[i] {
                b += TAU;
            }
            out.push(0.5 * (grid.theta[i] + b));
        }
    }
    out
}

/// Max abs residual of both continuous equations at the off-grid checkpoints,
/// with the density interpolated from its node values.
pub fn offgrid_residual(map: &CornerDomainMap, system: &LinearSystem, density: &BoundaryDensity) -> Result<(f64, usize)> {
    let values = offgrid_residuals(map, system, density)?;
    let mut worst = 0.0f64;
    for (_, v) in &values {
        worst = if v.is_nan() { f64::NAN } else { worst.max(*v) };
    }
    Ok((worst, values.len()))
}

/// Residual of the continuous equations at each checkpoint, as `(θ, |r|)`.
pub fn offgrid_residuals(
    map: &CornerDomainMap,
    system: &LinearSystem,
    density: &BoundaryDensity,
) -> Result<Vec<(f64, f64)>> {
    let grid = &system.grid;
    let p1 = density.phi1.at_nodes(grid);
    let p3 = density.phi3.at_nodes(grid);
    let c1 = super::mean_constant(&p1, grid);
    let c3 = super::mean_constant(&p3, grid);
    let pts = checkpoints(grid);
    let eval = |t: &f64| -> Result<f64> {
        let z = map.point(Complex64::from_polar(1.0, *t));
        let row = kernel_row(map, grid, &system.points, &z)?;
        let (mut r1, mut r3) = (0.0, 0.0);
        for (j, (m1, m2)) in row.into_iter().enumerate() {
            r1 += (m1.re - 2.0 * m2.im) * p1[j] - 2.0 * m2.re * p3[j];
            r3 += -2.0 * m2.re * p1[j] + (m1.re + 2.0 * m2.im) * p3[j];
        }
        let (f1, f3) = density.eval(*t);
        let e1 = 0.5 * f1 + r1 + c1 - (system.data.u1)(*t);
        let e3 = 0.5 * f3 + r3 + c3 - (system.data.u3)(*t);
        Ok(e1.abs().max(e3.abs()))
    };
    #[cfg(feature = "parallel")]
    let values: Vec<Result<f64>> = {
        use rayon::prelude::*;
        pts.par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let values: Vec<Result<f64>> = pts.iter().map(eval).collect();
    pts.iter().zip(values).map(|(t, v)| Ok((*t, v?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_matrix_structure() {
        let map = CornerDomainMap::identity();
        let grid = Arc::new(QuadratureGrid::uniform(32, 0.0).unwrap());
        let sys = assemble_system(&map, &BoundaryData::zero(), grid.clone()).unwrap();
        assert_eq!(sys.matrix.nrows(), 64);
        assert!(sys.rhs.iter().all(|v| *v == 0.0));
        // Ω₁ vanishes for the identity map, so the q₁ part of each entry is zero.
        let pts = node_points(&map, &grid);
        for s in &pts {
            let (q1, _) = kernel_quotients(&map, s, &pts[3]).unwrap();
            assert_eq!(q1, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn rhs_is_linear_in_data() {
        let map = CornerDomainMap::cusp(0.0).unwrap();
        let grid = Arc::new(QuadratureGrid::graded(48, 3.0, 0.0, &[PI]).unwrap());
        let d1 = BoundaryData::new(|t| t.cos(), |t| (2.0 * t).sin());
        let d2 = BoundaryData::new(|t| 1.0 + t.sin(), |_| 0.5);
        let comb = BoundaryData::new(|t| 2.5 * t.cos() + 1.0 + t.sin(), |t| 2.5 * (2.0 * t).sin() + 0.5);
        let a = assemble_system(&map, &d1, grid.clone()).unwrap();
        let b = assemble_system(&map, &d2, grid.clone()).unwrap();
        let c = assemble_system(&map, &comb, grid).unwrap();
        assert!((&c.rhs - (&a.rhs * 2.5 + &b.rhs)).amax() < 1e-14);
        assert_eq!(a.matrix, c.matrix);
    }

    #[test]
    fn checkpoints_between_nodes() {
        let g = QuadratureGrid::graded(40, 3.0, 0.0, &[0.0, PI]).unwrap();
        let pts = checkpoints(&g);
        assert_eq!(pts.len(), 38);
        let u = QuadratureGrid::uniform(16, 0.0).unwrap();
        assert_eq!(checkpoints(&u).len(), 16);
    }
}
