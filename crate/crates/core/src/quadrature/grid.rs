use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CornerDomainMap;

/// Width of the Lagrange stencil used to interpolate node samples.
const STENCIL: usize = 8;
/// Minimum node count on any arc between corners.
const MIN_ARC_NODES: usize = 4;

/// A maximal arc of the circle carrying nodes: either the whole circle
/// (uniform, periodic) or the stretch between two consecutive corners minus
/// the excluded `δ`-neighbourhoods (graded toward both ends).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridArc {
    pub start: f64,
    pub len: f64,
    pub first: usize,
    pub count: usize,
    pub periodic: bool,
}

/// Grid parameters as they appear in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub n: usize,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub phase: f64,
}

fn default_q() -> f64 {
    3.0
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams { n: 256, q: 3.0, delta: 0.0, phase: 0.0 }
    }
}

/// Nodes, weights and cells of a quadrature rule on the unit circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub theta: Vec<f64>,
    pub weights: Vec<f64>,
    pub nodes: Vec<Complex64>,
    /// Angular cell `[a, b]` attributed to each node; cells tile the arcs.
    pub cells: Vec<(f64, f64)>,
    pub arcs: Vec<GridArc>,
    pub delta: f64,
    pub grading_exponent: f64,
    pub corner_angles: Vec<f64>,
}

fn grade(s: f64, q: f64) -> f64 {
    let a = s.powf(q);
    let b = (1.0 - s).powf(q);
    a / (a + b)
}

fn grade_prime(s: f64, q: f64) -> f64 {
    let a = s.powf(q);
    let b = (1.0 - s).powf(q);
    q * s.powf(q - 1.0) * (1.0 - s).powf(q - 1.0) / ((a + b) * (a + b))
}

fn grade_inverse(u: f64, q: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let r = (u / (1.0 - u)).powf(1.0 / q);
    r / (1.0 + r)
}

/// Angle reduced to `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

impl QuadratureGrid {
    /// `n` equispaced nodes `θ_k = phase + 2πk/n` with weights `2π/n`.
    pub fn uniform(n: usize, phase: f64) -> Result<Self> {
        if n < STENCIL {
            return Err(Error::Config(format!("grid needs at least {STENCIL} nodes, got {n}")));
        }
        let h = TAU / n as f64;
        let theta: Vec<f64> = (0..n).map(|k| phase + h * k as f64).collect();
        Ok(QuadratureGrid {
            nodes: theta.iter().map(|t| Complex64::from_polar(1.0, *t)).collect(),
            cells: theta.iter().map(|t| (t - 0.5 * h, t + 0.5 * h)).collect(),
            weights: vec![h; n],
            theta,
            arcs: vec![GridArc { start: phase - 0.5 * h, len: TAU, first: 0, count: n, periodic: true }],
            delta: 0.0,
            grading_exponent: 1.0,
            corner_angles: Vec::new(),
        })
    }

    /// Nodes graded toward the corners at `corner_angles`, excluding the arcs
    /// within chord distance `delta` of each corner.
    pub fn graded(n: usize, q: f64, delta: f64, corner_angles: &[f64]) -> Result<Self> {
        if corner_angles.is_empty() {
            return Self::uniform(n, 0.0);
        }
        if !(q >= 1.0) {
            return Err(Error::Config(format!("grading exponent q = {q} must be at least 1")));
        }
        if !(0.0..2.0).contains(&delta) {
            return Err(Error::Config(format!("exclusion radius delta = {delta} must lie in [0, 2)")));
        }
        let mut corners: Vec<f64> = corner_angles.iter().map(|a| wrap_angle(*a)).collect();
        corners.sort_by(f64::total_cmp);
        let gap = 2.0 * (0.5 * delta).asin();
        let m = corners.len();
        let mut spans = Vec::with_capacity(m);
        for j in 0..m {
            let a = corners[j];
            let b = if j + 1 < m { corners[j + 1] } else { corners[0] + TAU };
            let len = b - a - 2.0 * gap;
            if len <= 0.0 {
                return Err(Error::Config(format!(
                    "delta = {delta} removes the whole arc between corners at {a} and {b}"
                )));
            }
            spans.push((a + gap, len));
        }
        if n < MIN_ARC_NODES * m {
            return Err(Error::Config(format!("grid needs at least {} nodes for {m} corners", MIN_ARC_NODES * m)));
        }
        let counts = apportion(n, &spans.iter().map(|s| s.1).collect::<Vec<_>>());
        let mut grid = QuadratureGrid {
            theta: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
            nodes: Vec::with_capacity(n),
            cells: Vec::with_capacity(n),
            arcs: Vec::with_capacity(m),
            delta,
            grading_exponent: q,
            corner_angles: corners.clone(),
        };
        for ((start, len), k_arc) in spans.into_iter().zip(counts) {
            let first = grid.theta.len();
            let kf = k_arc as f64;
            let raw: Vec<f64> = (1..=k_arc).map(|k| len * grade_prime((k as f64 - 0.5) / kf, q) / kf).collect();
            let scale = len / raw.iter().sum::<f64>();
            for (k, w) in raw.into_iter().enumerate() {
                let s = (k as f64 + 0.5) / kf;
                let t = start + len * grade(s, q);
                grid.theta.push(t);
                grid.nodes.push(Complex64::from_polar(1.0, t));
                grid.weights.push(w * scale);
                grid.cells.push((
                    start + len * grade(k as f64 / kf, q),
                    start + len * grade((k + 1) as f64 / kf, q),
                ));
            }
            grid.arcs.push(GridArc { start, len, first, count: k_arc, periodic: false });
        }
        Ok(grid)
    }

    /// Graded grid for the corners of `map` (uniform when it has none).
    pub fn for_map(map: &CornerDomainMap, params: &GridParams) -> Result<Self> {
        if map.corners.is_empty() {
            Self::uniform(params.n, params.phase)
        } else {
            let angles: Vec<f64> = map.corners.iter().map(|c| c.angle).collect();
            Self::graded(params.n, params.q, params.delta, &angles)
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Sum of weights, equal to the length of the covered part of the circle.
    pub fn covered_length(&self) -> f64 {
        self.arcs.iter().map(|a| a.len).sum()
    }

    /// Arc index and fractional node position `p` of angle `theta`; node `k`
    /// of the arc sits at `p = k` (0-based). `None` if `theta` lies in an
    /// excluded gap.
    pub fn locate(&self, theta: f64) -> Option<(usize, f64)> {
        for (idx, arc) in self.arcs.iter().enumerate() {
            let rel = wrap_angle(theta - arc.start);
            if arc.periodic {
                return Some((idx, rel / arc.len * arc.count as f64 - 0.5));
            }
            if rel <= arc.len {
                let s = grade_inverse(rel / arc.len, self.grading_exponent);
                return Some((idx, s * arc.count as f64 - 0.5));
            }
        }
        None
    }

    /// Arc angle parameters `(start, end)` for each arc, in increasing angle.
    pub fn arc_ranges(&self) -> Vec<(f64, f64)> {
        self.arcs.iter().map(|a| (a.start, a.start + a.len)).collect()
    }

    /// Local node spacing near `theta` (cell width of the nearest node).
    pub fn local_spacing(&self, theta: f64) -> f64 {
        match self.locate(theta) {
            Some((idx, p)) => {
                let arc = &self.arcs[idx];
                if arc.periodic {
                    arc.len / arc.count as f64
                } else {
                    let k = (p.round().max(0.0) as usize).min(arc.count - 1);
                    let (a, b) = self.cells[arc.first + k];
                    b - a
                }
            }
            None => 0.0,
        }
    }

    /// Variable-change exponents for adaptive integration over `[a, b]`: ends
    /// that sit on a corner are graded, where kernels and densities may blow up.
    pub fn end_grading(&self, a: f64, b: f64) -> (u32, u32) {
        let at_corner = |t: f64| if self.corner_distance(t) < 1e-12 { 4 } else { 1 };
        (at_corner(a), at_corner(b))
    }

    /// Smallest angular distance from `theta` to a corner; infinite without corners.
    pub fn corner_distance(&self, theta: f64) -> f64 {
        self.corner_angles
            .iter()
            .map(|c| {
                let d = wrap_angle(theta - c);
                d.min(TAU - d)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Node indices (global) of the stencil used to interpolate at `theta`,
    /// with the stencil positions and the evaluation position.
    fn stencil(&self, theta: f64) -> Option<(Vec<usize>, Vec<f64>, f64)> {
        let (idx, p) = self.locate(theta)?;
        let arc = &self.arcs[idx];
        let half = (STENCIL / 2) as isize;
        let base = p.floor() as isize - half + 1;
        let mut ids = Vec::with_capacity(STENCIL);
        let mut pos = Vec::with_capacity(STENCIL);
        if arc.periodic {
            for j in 0..STENCIL as isize {
                let k = base + j;
                ids.push(arc.first + k.rem_euclid(arc.count as isize) as usize);
                pos.push(k as f64);
            }
        } else {
            let width = STENCIL.min(arc.count) as isize;
            let lo = base.clamp(0, arc.count as isize - width);
            for k in lo..lo + width {
                ids.push(arc.first + k as usize);
                pos.push(k as f64);
            }
        }
        Some((ids, pos, p))
    }

    /// Lagrange interpolation of node samples at angle `theta`. Interpolation
    /// runs in the grading variable so it follows node clustering.
    pub fn interpolate(&self, values: &[f64], theta: f64) -> Option<f64> {
        let (ids, pos, p) = self.stencil(theta)?;
        for (k, x) in pos.iter().enumerate() {
            if p == *x {
                return Some(values[ids[k]]);
            }
        }
        let mut total = 0.0;
        for (k, xk) in pos.iter().enumerate() {
            let mut l = 1.0;
            for (j, xj) in pos.iter().enumerate() {
                if j != k {
                    l *= (p - xj) / (xk - xj);
                }
            }
            total += l * values[ids[k]];
        }
        Some(total)
    }

    /// The two consecutive nodes whose cells contain `theta`'s neighbourhood,
    /// and the union of their cells as an angle interval containing `theta`.
    pub fn bracketing_cells(&self, theta: f64) -> Option<([usize; 2], (f64, f64), f64)> {
        let (idx, p) = self.locate(theta)?;
        let arc = &self.arcs[idx];
        if arc.count < 2 {
            return None;
        }
        let (k0, k1) = if arc.periodic {
            let k = p.floor() as isize;
            (k.rem_euclid(arc.count as isize) as usize, (k + 1).rem_euclid(arc.count as isize) as usize)
        } else {
            let k = (p.floor().max(0.0) as usize).min(arc.count - 2);
            (k, k + 1)
        };
        let (i0, i1) = (arc.first + k0, arc.first + k1);
        let a = self.cells[i0].0;
        let mut b = self.cells[i1].1;
        if b < a {
            b += TAU;
        }
        // Place theta inside [a, b] modulo 2π.
        let mut t = a + wrap_angle(theta - a);
        if t > b + 1e-12 {
            t -= TAU;
        }
        Some(([i0, i1], (a, b), t))
    }
}

/// Splits `n` into integer counts proportional to `lengths`, each at least
/// [`MIN_ARC_NODES`], by largest remainders.
fn apportion(n: usize, lengths: &[f64]) -> Vec<usize> {
    let total: f64 = lengths.iter().sum();
    let spare = n - MIN_ARC_NODES * lengths.len();
    let exact: Vec<f64> = lengths.iter().map(|l| spare as f64 * l / total).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = spare - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by(|a, b| (exact[*b] - exact[*b].floor()).total_cmp(&(exact[*a] - exact[*a].floor())));
    for i in order {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts.into_iter().map(|c| c + MIN_ARC_NODES).collect()
}

/// Chord distance between two angles on the unit circle.
pub fn chord(a: f64, b: f64) -> f64 {
    2.0 * (0.5 * (a - b)).sin().abs()
}
