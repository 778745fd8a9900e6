//! Incompressible flow on the MAC grid: implicit viscosity, explicit upwind
//! advection, Coulomb body force, and a non-incremental pressure projection.
//!
//! Per step, with `f = -α(c⁺ - c⁻)∇ψ`:
//!
//! ```text
//! (Re/dt - Δ_h) v* = (Re/dt) v - Re (v·∇)v + f      (no-slip walls)
//! -Δ_N p = -(Re/dt) ∇·v*                             (Neumann, zero mean)
//! v = v* - (dt/Re) ∇p
//! ```

use crate::error::{Error, Result};
use crate::grid::{divergence_mac, Grid, ScalarField, VectorFieldMAC};
use crate::linalg::{BandedCholesky, SparseOperator, TripletBuilder};
use crate::nernst_planck::ChargePair;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsParams {
    pub re: f64,
    pub alpha: f64,
    pub cfl: f64,
}

impl NsParams {
    pub fn new(re: f64, alpha: f64, cfl: f64) -> Result<Self> {
        for (name, v) in [("Re", re), ("alpha", alpha), ("cfl", cfl)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { re, alpha, cfl })
    }
}

impl Default for NsParams {
    fn default() -> Self {
        Self { re: 1.0, alpha: 1.0, cfl: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub v: VectorFieldMAC,
    pub p: ScalarField,
}

impl FlowState {
    pub fn at_rest(grid: Grid) -> Self {
        Self { v: VectorFieldMAC::zeros(grid), p: ScalarField::zeros(grid) }
    }
}

/// Interior velocity unknowns: x-faces `i = 1..nx-1` then y-faces
/// `j = 1..ny-1`, each row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityLayout {
    pub grid: Grid,
}

impl VelocityLayout {
    pub fn n_u(&self) -> usize {
        (self.grid.nx - 1) * self.grid.ny
    }

    pub fn n_v(&self) -> usize {
        self.grid.nx * (self.grid.ny - 1)
    }

    pub fn len(&self) -> usize {
        self.n_u() + self.n_v()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn u(&self, i: usize, j: usize) -> usize {
        j * (self.grid.nx - 1) + (i - 1)
    }

    #[inline]
    pub fn v(&self, i: usize, j: usize) -> usize {
        self.n_u() + (j - 1) * self.grid.nx + i
    }

    pub fn pack(&self, w: &VectorFieldMAC) -> Vec<f64> {
        let g = self.grid;
        let mut x = vec![0.0; self.len()];
        for j in 0..g.ny {
            for i in 1..g.nx {
                x[self.u(i, j)] = w.u[g.u_idx(i, j)];
            }
        }
        for j in 1..g.ny {
            for i in 0..g.nx {
                x[self.v(i, j)] = w.v[g.v_idx(i, j)];
            }
        }
        x
    }

    /// Inverse of [`VelocityLayout::pack`]; boundary normals are zero.
    pub fn unpack(&self, x: &[f64]) -> VectorFieldMAC {
        let g = self.grid;
        let mut w = VectorFieldMAC::zeros(g);
        for j in 0..g.ny {
            for i in 1..g.nx {
                w.u[g.u_idx(i, j)] = x[self.u(i, j)];
            }
        }
        for j in 1..g.ny {
            for i in 0..g.nx {
                w.v[g.v_idx(i, j)] = x[self.v(i, j)];
            }
        }
        w
    }

    /// `-Δ_h` on the packed unknowns, no-slip walls via antisymmetric ghosts.
    /// Scaled by the dual-cell area so that it is the matrix of `∫∇v:∇w`.
    pub fn neg_laplacian(&self) -> SparseOperator {
        let g = self.grid;
        let (cx, cy) = (g.hy / g.hx, g.hx / g.hy);
        let mut tb = TripletBuilder::new(self.len());
        for j in 0..g.ny {
            for i in 1..g.nx {
                let r = self.u(i, j);
                let mut diag = 2.0 * cx;
                for ii in [i - 1, i + 1] {
                    if (1..g.nx).contains(&ii) {
                        tb.add(r, self.u(ii, j), -cx);
                    }
                }
                for jj in [j as isize - 1, j as isize + 1] {
                    if jj < 0 || jj >= g.ny as isize {
                        diag += 2.0 * cy; // ghost = -u: (2u)/h² contribution
                    } else {
                        diag += cy;
                        tb.add(r, self.u(i, jj as usize), -cy);
                    }
                }
                tb.add(r, r, diag);
            }
        }
        for j in 1..g.ny {
            for i in 0..g.nx {
                let r = self.v(i, j);
                let mut diag = 2.0 * cy;
                for jj in [j - 1, j + 1] {
                    if (1..g.ny).contains(&jj) {
                        tb.add(r, self.v(i, jj), -cy);
                    }
                }
                for ii in [i as isize - 1, i as isize + 1] {
                    if ii < 0 || ii >= g.nx as isize {
                        diag += 2.0 * cx;
                    } else {
                        diag += cx;
                        tb.add(r, self.v(ii as usize, j), -cx);
                    }
                }
                tb.add(r, r, diag);
            }
        }
        tb.build()
    }

    /// Discrete divergence as a `cells × unknowns` dense-free triplet list:
    /// returns `(cell, unknown, coefficient)`.
    pub fn divergence_entries(&self) -> Vec<(usize, usize, f64)> {
        let g = self.grid;
        let mut out = Vec::new();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let c = g.idx(i, j);
                if i > 0 {
                    out.push((c, self.u(i, j), -1.0 / g.hx));
                }
                if i + 1 < g.nx {
                    out.push((c, self.u(i + 1, j), 1.0 / g.hx));
                }
                if j > 0 {
                    out.push((c, self.v(i, j), -1.0 / g.hy));
                }
                if j + 1 < g.ny {
                    out.push((c, self.v(i, j + 1), 1.0 / g.hy));
                }
            }
        }
        out
    }
}

/// `∫ |∇v|²` with no-slip walls.
pub fn viscous_dissipation(v: &VectorFieldMAC) -> f64 {
    let lay = VelocityLayout { grid: v.grid };
    let x = lay.pack(v);
    crate::linalg::dot(&x, &lay.neg_laplacian().matvec(&x))
}

/// Face values `-α (c⁺ - c⁻)_face (∇ψ)_face` on interior faces.
pub fn coulomb_force(c_plus: &ScalarField, c_minus: &ScalarField, psi: &ScalarField, alpha: f64) -> Result<VectorFieldMAC> {
    let g = psi.grid;
    g.check_same(&c_plus.grid)?;
    g.check_same(&c_minus.grid)?;
    let q = |k: usize| c_plus.values[k] - c_minus.values[k];
    let mut f = VectorFieldMAC::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            let (l, r) = (g.idx(i - 1, j), g.idx(i, j));
            let grad = (psi.values[r] - psi.values[l]) / g.hx;
            f.u[g.u_idx(i, j)] = -alpha * 0.5 * (q(l) + q(r)) * grad;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let (b, a) = (g.idx(i, j - 1), g.idx(i, j));
            let grad = (psi.values[a] - psi.values[b]) / g.hy;
            f.v[g.v_idx(i, j)] = -alpha * 0.5 * (q(b) + q(a)) * grad;
        }
    }
    Ok(f)
}

/// First-order upwind `(v·∇)v` on interior faces.
pub fn advection(w: &VectorFieldMAC) -> VectorFieldMAC {
    let g = w.grid;
    let u = |i: usize, j: usize| w.u[g.u_idx(i, j)];
    let v = |i: usize, j: usize| w.v[g.v_idx(i, j)];
    let mut out = VectorFieldMAC::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            let a = u(i, j);
            let b = 0.25 * (v(i - 1, j) + v(i, j) + v(i - 1, j + 1) + v(i, j + 1));
            let dx = if a > 0.0 { a - u(i - 1, j) } else { u(i + 1, j) - a } / g.hx;
            let dy = if b > 0.0 {
                let below = if j > 0 { u(i, j - 1) } else { -a };
                a - below
            } else {
                let above = if j + 1 < g.ny { u(i, j + 1) } else { -a };
                above - a
            } / g.hy;
            out.u[g.u_idx(i, j)] = a * dx + b * dy;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let b = v(i, j);
            let a = 0.25 * (u(i, j - 1) + u(i + 1, j - 1) + u(i, j) + u(i + 1, j));
            let dy = if b > 0.0 { b - v(i, j - 1) } else { v(i, j + 1) - b } / g.hy;
            let dx = if a > 0.0 {
                let left = if i > 0 { v(i - 1, j) } else { -b };
                b - left
            } else {
                let right = if i + 1 < g.nx { v(i + 1, j) } else { -b };
                right - b
            } / g.hx;
            out.v[g.v_idx(i, j)] = a * dx + b * dy;
        }
    }
    out
}

/// Largest `dt` with `dt (max|u|/hx + max|v|/hy) ≤ cfl`.
pub fn max_advective_dt(w: &VectorFieldMAC, cfl: f64) -> f64 {
    let g = w.grid;
    let mu = w.u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mv = w.v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let rate = mu / g.hx + mv / g.hy;
    if rate > 0.0 {
        cfl / rate
    } else {
        f64::INFINITY
    }
}

/// Factored viscous and pressure operators for one `(grid, dt, Re)`.
#[derive(Debug, Clone)]
pub struct NsSolver {
    pub grid: Grid,
    pub dt: f64,
    pub params: NsParams,
    layout: VelocityLayout,
    helmholtz: BandedCholesky,
    pressure: BandedCholesky,
}

impl NsSolver {
    pub fn new(grid: Grid, dt: f64, params: NsParams) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
        }
        let layout = VelocityLayout { grid };
        let lap = layout.neg_laplacian();
        let m = params.re / dt * grid.cell_area();
        let mut tb = TripletBuilder::new(lap.n);
        for r in 0..lap.n {
            tb.add(r, r, m);
            for k in lap.row_ptr[r]..lap.row_ptr[r + 1] {
                tb.add(r, lap.cols[k], lap.vals[k]);
            }
        }
        let helmholtz = BandedCholesky::factor(&tb.build())?;
        let pressure = BandedCholesky::factor(&pinned_neumann_laplacian(&grid))?;
        Ok(Self { grid, dt, params, layout, helmholtz, pressure })
    }

    /// Velocity after the implicit viscous step, before projection.
    pub fn predict(&self, v: &VectorFieldMAC, force: &VectorFieldMAC) -> Result<VectorFieldMAC> {
        let g = self.grid;
        g.check_same(&v.grid)?;
        let max_dt = max_advective_dt(v, self.params.cfl);
        if self.dt > max_dt {
            return Err(Error::StepRejected { dt: self.dt, max_dt });
        }
        let (re, dt, area) = (self.params.re, self.dt, g.cell_area());
        let adv = advection(v);
        let (xv, xa, xf) = (self.layout.pack(v), self.layout.pack(&adv), self.layout.pack(force));
        let rhs: Vec<f64> = (0..xv.len()).map(|k| area * (re / dt * xv[k] - re * xa[k] + xf[k])).collect();
        Ok(self.layout.unpack(&self.helmholtz.solve(&rhs)?))
    }

    /// Removes the gradient part of `v_star`.
    pub fn project(&self, v_star: &VectorFieldMAC) -> Result<(VectorFieldMAC, ScalarField)> {
        let g = self.grid;
        let (re, dt) = (self.params.re, self.dt);
        let div = divergence_mac(v_star)?;
        let mut rhs: Vec<f64> = div.values.iter().map(|d| -re / dt * d * g.cell_area()).collect();
        rhs[0] = 0.0;
        let mut p = self.pressure.solve(&rhs)?;
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        p.iter_mut().for_each(|x| *x -= mean);
        let p = ScalarField { grid: g, values: p };
        let mut v = v_star.clone();
        for j in 0..g.ny {
            for i in 1..g.nx {
                v.u[g.u_idx(i, j)] -= dt / re * (p.at(i, j) - p.at(i - 1, j)) / g.hx;
            }
        }
        for j in 1..g.ny {
            for i in 0..g.nx {
                v.v[g.v_idx(i, j)] -= dt / re * (p.at(i, j) - p.at(i, j - 1)) / g.hy;
            }
        }
        v.apply_no_slip();
        Ok((v, p))
    }

    pub fn step(&self, state: &FlowState, charges: &ChargePair, psi: &ScalarField) -> Result<FlowState> {
        let force = coulomb_force(&charges.c_plus, &charges.c_minus, psi, self.params.alpha)?;
        let v_star = self.predict(&state.v, &force)?;
        let (v, p) = self.project(&v_star)?;
        if !v.is_finite() {
            return Err(Error::Convergence { iterations: 0, residual: f64::NAN });
        }
        Ok(FlowState { v, p })
    }
}

/// `-Δ_N` (area-scaled) with cell 0 pinned to remove the constant null space.
fn pinned_neumann_laplacian(g: &Grid) -> SparseOperator {
    let mut tb = TripletBuilder::new(g.n_cells());
    let mut pair = |p: usize, q: usize, c: f64| {
        for (a, b, s) in [(p, p, c), (q, q, c), (p, q, -c), (q, p, -c)] {
            if a != 0 && b != 0 {
                tb.add(a, b, s);
            }
        }
    };
    for j in 0..g.ny {
        for i in 1..g.nx {
            pair(g.idx(i - 1, j), g.idx(i, j), g.hy / g.hx);
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            pair(g.idx(i, j - 1), g.idx(i, j), g.hx / g.hy);
        }
    }
    tb.add(0, 0, 1.0);
    tb.build()
}

pub fn ns_predict(state: &FlowState, force: &VectorFieldMAC, dt: f64, params: NsParams) -> Result<VectorFieldMAC> {
    NsSolver::new(state.v.grid, dt, params)?.predict(&state.v, force)
}

pub fn pressure_project(v_star: &VectorFieldMAC, dt: f64, params: NsParams) -> Result<(VectorFieldMAC, ScalarField)> {
    NsSolver::new(v_star.grid, dt, params)?.project(v_star)
}

pub fn ns_step(state: &FlowState, charges: &ChargePair, psi: &ScalarField, dt: f64, params: NsParams) -> Result<FlowState> {
    NsSolver::new(state.v.grid, dt, params)?.step(state, charges, psi)
}
