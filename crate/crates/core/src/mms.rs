//! Manufactured-solution convergence studies.
//!
//! Poisson: `ψ* = cos πx cos πy` on the unit square with the smooth
//! tangential director `d = ½(sin πx, sin πy)`, whose tensor has nonzero
//! off-diagonal entries in the interior. Forcing and Robin data are the
//! closed-form derivatives of `ψ*`; the unit tests pin them against values
//! produced independently by a computer-algebra system.
//!
//! Nernst-Planck: with `ψ = 0`, `v = 0` and `d = (0, 1)` (masked), the mode
//! `c = 1 + ½cos πx` is orthogonal to the director and decays at rate `π²/Pe`.
//! Inverting the backward-Euler amplification of one step gives the discrete
//! eigenvalue, whose distance to `π²` is purely spatial.

use std::f64::consts::PI;

use crate::anisotropy::DirectorField;
use crate::error::{Error, Result};
use crate::grid::{BoundaryTrace, Grid, ScalarField};
use crate::linalg::SolverKind;
use crate::navier_stokes::FlowState;
use crate::nernst_planck::{NpOperator, NpParams, Species};
use crate::poisson::PoissonRobin;

/// One refinement level of a convergence study.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MmsLevel {
    pub n: usize,
    pub h: f64,
    pub error: f64,
    /// Observed order against the previous (coarser) level.
    pub order: Option<f64>,
}

fn with_orders(mut levels: Vec<MmsLevel>) -> Vec<MmsLevel> {
    for k in 1..levels.len() {
        let (a, b) = (&levels[k - 1], &levels[k]);
        levels[k].order = Some((a.error / b.error).ln() / (a.h / b.h).ln());
    }
    levels
}

pub fn mms_director(x: f64, y: f64) -> (f64, f64) {
    (0.5 * (PI * x).sin(), 0.5 * (PI * y).sin())
}

pub fn psi_exact(x: f64, y: f64) -> f64 {
    (PI * x).cos() * (PI * y).cos()
}

/// Flux `E∇ψ*` for permittivity strength `eps`.
fn exact_flux(eps: f64, x: f64, y: f64) -> (f64, f64) {
    let (d1, d2) = mms_director(x, y);
    let (a11, a12, a22) = (1.0 + eps * d1 * d1, eps * d1 * d2, 1.0 + eps * d2 * d2);
    let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
    let (px, py) = (-PI * sx * cy, -PI * cx * sy);
    (a11 * px + a12 * py, a12 * px + a22 * py)
}

/// `f = -∇·(E∇ψ*)`.
pub fn poisson_forcing(eps: f64, x: f64, y: f64) -> f64 {
    let (d1, d2) = mms_director(x, y);
    let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
    let (dd1, dd2) = (0.5 * PI * cx, 0.5 * PI * cy);
    let (a11, a12, a22) = (1.0 + eps * d1 * d1, eps * d1 * d2, 1.0 + eps * d2 * d2);
    let (px, py) = (-PI * sx * cy, -PI * cx * sy);
    let pxx = -PI * PI * cx * cy;
    let pyy = pxx;
    let pxy = PI * PI * sx * sy;
    let a11_x = 2.0 * eps * d1 * dd1;
    let a12_x = eps * dd1 * d2;
    let a12_y = eps * d1 * dd2;
    let a22_y = 2.0 * eps * d2 * dd2;
    let div = a11_x * px + a11 * pxx + a12_x * py + a12 * pxy + a12_y * px + a12 * pxy + a22_y * py + a22 * pyy;
    -div
}

/// `ξ = E∇ψ*·n + τψ*` at a boundary point with outward normal `n`.
pub fn poisson_robin_data(eps: f64, tau: f64, x: f64, y: f64, n: (f64, f64)) -> f64 {
    let (f1, f2) = exact_flux(eps, x, y);
    f1 * n.0 + f2 * n.1 + tau * psi_exact(x, y)
}

/// L² error of the discrete Poisson-Robin solution on an `n×n` unit grid.
pub fn poisson_mms_error(n: usize, eps: f64, tau: f64, kind: SolverKind) -> Result<f64> {
    let g = Grid::unit(n)?;
    let df = DirectorField::from_fn(g, 1.0, eps, mms_director)?;
    let pr = PoissonRobin::new(df.permittivity_tensor(), tau, kind)?;
    let f = ScalarField::from_fn(g, |x, y| poisson_forcing(eps, x, y));
    let xi = BoundaryTrace::from_fn(g, |face, x, y| poisson_robin_data(eps, tau, x, y, face.side.normal()));
    let psi = pr.solve(&f, &xi)?;
    let exact = ScalarField::from_fn(g, psi_exact);
    let diff = psi.zip_map(&exact, |a, b| a - b)?;
    Ok(diff.l2_norm())
}

/// Poisson convergence study over the given resolutions (coarse to fine).
pub fn poisson_mms(ns: &[usize], eps: f64, tau: f64, kind: SolverKind) -> Result<Vec<MmsLevel>> {
    if ns.len() < 2 {
        return Err(Error::Parameter("a convergence study needs at least two grids".into()));
    }
    let levels = ns
        .iter()
        .map(|&n| Ok(MmsLevel { n, h: 1.0 / n as f64, error: poisson_mms_error(n, eps, tau, kind)?, order: None }))
        .collect::<Result<Vec<_>>>()?;
    Ok(with_orders(levels))
}

/// Amplitude of the `cos πx` mode of a cell field.
fn cos_mode(c: &ScalarField) -> f64 {
    let g = c.grid;
    let mean = c.values.iter().sum::<f64>() / g.n_cells() as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (x, _) = g.center(i, j);
            let w = (PI * x / g.lx).cos();
            num += (c.at(i, j) - mean) * w;
            den += w * w;
        }
    }
    num / den
}

/// `|μ_h - π²|` for the decaying mode on an `n×n` grid, `Pe = 1`.
pub fn np_decay_error(n: usize, lambda: f64, dt: f64) -> Result<f64> {
    let g = Grid::unit(n)?;
    let df = DirectorField::from_fn_masked(g, lambda, 1.0, |_, _| (0.0, 1.0))?;
    let params = NpParams::default();
    let psi = ScalarField::zeros(g);
    let op = NpOperator::new(&df.mobility_tensor(), &psi, Species::Plus, dt, params, SolverKind::Cholesky)?;
    let c0 = ScalarField::from_fn(g, |x, _| 1.0 + 0.5 * (PI * x).cos());
    let c1 = op.step(&c0, &FlowState::at_rest(g).v)?;
    let mu = (cos_mode(&c0) / cos_mode(&c1) - 1.0) / dt;
    Ok((mu - PI * PI).abs())
}

/// Nernst-Planck eigenvalue study over the given resolutions.
pub fn np_mms(ns: &[usize], lambda: f64, dt: f64) -> Result<Vec<MmsLevel>> {
    if ns.len() < 2 {
        return Err(Error::Parameter("a convergence study needs at least two grids".into()));
    }
    let levels = ns
        .iter()
        .map(|&n| Ok(MmsLevel { n, h: 1.0 / n as f64, error: np_decay_error(n, lambda, dt)?, order: None }))
        .collect::<Result<Vec<_>>>()?;
    Ok(with_orders(levels))
}
