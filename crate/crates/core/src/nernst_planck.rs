//! Nernst–Planck transport of the two ion species with zero normal flux.
//!
//! Diffusion and drift are implicit and written in the Slotboom variable
//! `u = c·exp(sβψ)` (`s = ±1` the species sign), where the flux
//! `-Λ(∇c + sβc∇ψ) = -Λ exp(-sβψ)∇u` becomes a weighted diffusion. Normal
//! face weights are the Scharfetter–Gummel (Bernoulli) means of
//! `exp(-sβψ)`, so Boltzmann profiles are exact discrete equilibria and the
//! isotropic matrix is an M-matrix. Tensor cross terms use the same
//! vertex-gradient form as the Poisson operator. Advection is explicit
//! first-order upwind.

use crate::anisotropy::TensorField;
use crate::error::{Error, Result};
use crate::grid::{divergence_mac, domain_integral, Grid, ScalarField, VectorFieldMAC};
use crate::linalg::{SolverKind, SparseOperator, SpdSolver, TripletBuilder};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpParams {
    pub pe: f64,
    pub beta: f64,
    /// Fraction of the advective stability limit a step may use.
    pub dt_safety: f64,
}

impl NpParams {
    pub fn new(pe: f64, beta: f64, dt_safety: f64) -> Result<Self> {
        for (name, v) in [("Pe", pe), ("beta", beta), ("dt_safety", dt_safety)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if dt_safety > 1.0 {
            return Err(Error::Parameter(format!("dt_safety must not exceed 1, got {dt_safety}")));
        }
        Ok(Self { pe, beta, dt_safety })
    }
}

impl Default for NpParams {
    fn default() -> Self {
        Self { pe: 1.0, beta: 1.0, dt_safety: 0.9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    Plus,
    Minus,
}

impl Species {
    pub const BOTH: [Species; 2] = [Species::Plus, Species::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Species::Plus => 1.0,
            Species::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargePair {
    pub c_plus: ScalarField,
    pub c_minus: ScalarField,
}

impl ChargePair {
    pub fn new(c_plus: ScalarField, c_minus: ScalarField) -> Result<Self> {
        c_plus.check()?;
        c_minus.check()?;
        c_plus.grid.check_same(&c_minus.grid)?;
        Ok(Self { c_plus, c_minus })
    }

    pub fn grid(&self) -> Grid {
        self.c_plus.grid
    }

    pub fn get(&self, s: Species) -> &ScalarField {
        match s {
            Species::Plus => &self.c_plus,
            Species::Minus => &self.c_minus,
        }
    }

    /// `c⁺ - c⁻`.
    pub fn charge(&self) -> ScalarField {
        ScalarField {
            grid: self.grid(),
            values: self.c_plus.values.iter().zip(&self.c_minus.values).map(|(p, m)| p - m).collect(),
        }
    }

    pub fn swapped(&self) -> Self {
        Self { c_plus: self.c_minus.clone(), c_minus: self.c_plus.clone() }
    }
}

pub fn total_mass(pair: &ChargePair) -> (f64, f64) {
    (domain_integral(&pair.c_plus), domain_integral(&pair.c_minus))
}

pub fn min_value_audit(pair: &ChargePair) -> (f64, f64) {
    (pair.c_plus.min(), pair.c_minus.min())
}

/// `B(z) = z / (e^z - 1)`, with `B(0) = 1`.
pub fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 - z / 2.0 + z * z / 12.0
    } else {
        z / z.exp_m1()
    }
}

/// Largest cell outflow rate `Σ (v·n)⁺ |face| / |cell|` of a MAC velocity;
/// upwind advection is positivity-preserving for `dt ≤ 1/rate`.
pub fn advective_rate(v: &VectorFieldMAC) -> f64 {
    let g = v.grid;
    let mut m: f64 = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let out = (-v.u[g.u_idx(i, j)]).max(0.0) / g.hx
                + v.u[g.u_idx(i + 1, j)].max(0.0) / g.hx
                + (-v.v[g.v_idx(i, j)]).max(0.0) / g.hy
                + v.v[g.v_idx(i, j + 1)].max(0.0) / g.hy;
            m = m.max(out);
        }
    }
    m
}

/// Largest time step admitted by the advective stability bound.
pub fn max_stable_dt(v: &VectorFieldMAC, safety: f64) -> f64 {
    let r = advective_rate(v);
    if r > 0.0 {
        safety / r
    } else {
        f64::INFINITY
    }
}

/// Upwind advective flux `Pe · c_up · v`; boundary faces carry none.
pub fn advective_flux(c: &ScalarField, v: &VectorFieldMAC, pe: f64) -> VectorFieldMAC {
    let g = c.grid;
    let mut f = VectorFieldMAC::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            let w = v.u[g.u_idx(i, j)];
            let up = if w > 0.0 { c.at(i - 1, j) } else { c.at(i, j) };
            f.u[g.u_idx(i, j)] = pe * up * w;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let w = v.v[g.v_idx(i, j)];
            let up = if w > 0.0 { c.at(i, j - 1) } else { c.at(i, j) };
            f.v[g.v_idx(i, j)] = pe * up * w;
        }
    }
    f
}

/// Slotboom weights of one species for a fixed potential.
#[derive(Debug, Clone)]
struct Weights {
    /// `exp(-sβ(ψ - ψ̄))` per cell.
    cell: Vec<f64>,
    /// Normal coefficient `Λ_nn · w_f` per x-face and y-face (boundary 0).
    xface: Vec<f64>,
    yface: Vec<f64>,
    /// `Λ12 · w` per vertex, `(nx + 1) (ny + 1)` entries, boundary 0.
    corner: Vec<f64>,
}

impl Weights {
    fn new(lambda: &TensorField, psi: &ScalarField, sign: f64, beta: f64) -> Self {
        let g = psi.grid;
        let mean = psi.values.iter().sum::<f64>() / g.n_cells() as f64;
        let sb = sign * beta;
        let shifted: Vec<f64> = psi.values.iter().map(|p| p - mean).collect();
        let cell: Vec<f64> = shifted.iter().map(|p| (-sb * p).exp()).collect();
        let sg = |l: usize, r: usize| bernoulli(sb * (shifted[r] - shifted[l])) * cell[l];
        let mut xface = vec![0.0; g.n_u()];
        for j in 0..g.ny {
            for i in 1..g.nx {
                let (l, r) = (g.idx(i - 1, j), g.idx(i, j));
                xface[g.u_idx(i, j)] = 0.5 * (lambda.a11[l] + lambda.a11[r]) * sg(l, r);
            }
        }
        let mut yface = vec![0.0; g.n_v()];
        for j in 1..g.ny {
            for i in 0..g.nx {
                let (b, a) = (g.idx(i, j - 1), g.idx(i, j));
                yface[g.v_idx(i, j)] = 0.5 * (lambda.a22[b] + lambda.a22[a]) * sg(b, a);
            }
        }
        let mut corner = vec![0.0; (g.nx + 1) * (g.ny + 1)];
        for j in 1..g.ny {
            for i in 1..g.nx {
                let c = corner_cells(&g, i, j);
                let a12 = 0.25 * c.iter().map(|&k| lambda.a12[k]).sum::<f64>();
                let w = 0.25 * c.iter().map(|&k| cell[k]).sum::<f64>();
                corner[j * (g.nx + 1) + i] = a12 * w;
            }
        }
        Self { cell, xface, yface, corner }
    }
}

/// The four cells around vertex `(i, j)`: SW, SE, NW, NE.
#[inline]
fn corner_cells(g: &Grid, i: usize, j: usize) -> [usize; 4] {
    [g.idx(i - 1, j - 1), g.idx(i, j - 1), g.idx(i - 1, j), g.idx(i, j)]
}

/// Vertex gradient `(gx, gy)` of a cell field from its four cells.
#[inline]
fn corner_gradient(g: &Grid, u: &[f64], i: usize, j: usize) -> (f64, f64) {
    let [sw, se, nw, ne] = corner_cells(g, i, j);
    (0.5 * ((u[se] - u[sw]) + (u[ne] - u[nw])) / g.hx, 0.5 * ((u[nw] - u[sw]) + (u[ne] - u[se])) / g.hy)
}

/// Implicit diffusion-drift operator of one species at a fixed potential,
/// factored for repeated steps with the same `dt`.
#[derive(Debug, Clone)]
pub struct NpOperator {
    pub grid: Grid,
    pub species: Species,
    pub dt: f64,
    pub params: NpParams,
    weights: Weights,
    stiffness: SparseOperator,
    solver: SpdSolver,
}

impl NpOperator {
    pub fn new(
        lambda: &TensorField,
        psi: &ScalarField,
        species: Species,
        dt: f64,
        params: NpParams,
        kind: SolverKind,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
        }
        let g = psi.grid;
        g.check_same(&lambda.grid)?;
        psi.check()?;
        lambda.check_elliptic()?;
        if !psi.is_finite() {
            return Err(Error::Parameter("potential contains non-finite values".into()));
        }
        let weights = Weights::new(lambda, psi, species.sign(), params.beta);
        let stiffness = assemble_stiffness(&g, &weights);
        let mut tb = TripletBuilder::new(g.n_cells());
        let m = params.pe / dt * g.cell_area();
        for r in 0..stiffness.n {
            tb.add(r, r, m * weights.cell[r]);
            for k in stiffness.row_ptr[r]..stiffness.row_ptr[r + 1] {
                tb.add(r, stiffness.cols[k], stiffness.vals[k]);
            }
        }
        let solver = SpdSolver::new(tb.build(), kind)?;
        Ok(Self { grid: g, species, dt, params, weights, stiffness, solver })
    }

    /// Matrix `K` with `K u = |cell| · div F_dd`.
    pub fn stiffness(&self) -> &SparseOperator {
        &self.stiffness
    }

    pub fn slotboom(&self, c: &ScalarField) -> Vec<f64> {
        c.values.iter().zip(&self.weights.cell).map(|(c, w)| c / w).collect()
    }

    /// Diffusion-drift flux `-Λ e^{-sβψ}∇u` on faces; boundary faces are 0.
    pub fn diffusive_flux(&self, u: &[f64]) -> VectorFieldMAC {
        weighted_flux(&self.grid, &self.weights, u)
    }

    /// Total flux `Pe·c·v - Λ(∇c + sβc∇ψ)` of a concentration field.
    pub fn total_flux(&self, c: &ScalarField, v: &VectorFieldMAC) -> VectorFieldMAC {
        let mut f = advective_flux(c, v, self.params.pe);
        f.axpy(1.0, &self.diffusive_flux(&self.slotboom(c)));
        f
    }

    /// Advances `c_old` by one step with frozen velocity `v`.
    pub fn step(&self, c_old: &ScalarField, v: &VectorFieldMAC) -> Result<ScalarField> {
        let g = self.grid;
        g.check_same(&c_old.grid)?;
        g.check_same(&v.grid)?;
        c_old.check()?;
        v.check()?;
        let max_dt = max_stable_dt(v, self.params.dt_safety);
        if self.dt > max_dt {
            return Err(Error::StepRejected { dt: self.dt, max_dt });
        }
        let (pe, dt, area) = (self.params.pe, self.dt, g.cell_area());
        let div_adv = divergence_mac(&advective_flux(c_old, v, pe))?;
        let rhs: Vec<f64> = c_old.values.iter().zip(&div_adv.values).map(|(c, d)| area * (pe / dt * c - d)).collect();
        let u = self.solver.solve(&rhs)?;
        // Conservative update from fluxes, so mass does not depend on the
        // linear-solver tolerance.
        let div_dd = divergence_mac(&self.diffusive_flux(&u))?;
        let values =
            c_old.values.iter().zip(div_adv.values.iter().zip(&div_dd.values)).map(|(c, (a, d))| c - dt / pe * (a + d)).collect();
        let c = ScalarField { grid: g, values };
        if !c.is_finite() {
            return Err(Error::Convergence { iterations: 0, residual: f64::NAN });
        }
        Ok(c)
    }
}

/// Flux `-Λ w ∇u` for the given weights; boundary faces are 0.
fn weighted_flux(g: &Grid, w: &Weights, u: &[f64]) -> VectorFieldMAC {
    let g = *g;
    let mut f = VectorFieldMAC::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            let k = g.u_idx(i, j);
            f.u[k] = -w.xface[k] * (u[g.idx(i, j)] - u[g.idx(i - 1, j)]) / g.hx;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let k = g.v_idx(i, j);
            f.v[k] = -w.yface[k] * (u[g.idx(i, j)] - u[g.idx(i, j - 1)]) / g.hy;
        }
    }
    // Cross terms: each interior vertex feeds half its value to the two
    // x-faces and two y-faces meeting there.
    for j in 1..g.ny {
        for i in 1..g.nx {
            let a = w.corner[j * (g.nx + 1) + i];
            if a == 0.0 {
                continue;
            }
            let (gx, gy) = corner_gradient(&g, u, i, j);
            f.u[g.u_idx(i, j - 1)] -= 0.5 * a * gy;
            f.u[g.u_idx(i, j)] -= 0.5 * a * gy;
            f.v[g.v_idx(i - 1, j)] -= 0.5 * a * gx;
            f.v[g.v_idx(i, j)] -= 0.5 * a * gx;
        }
    }
    f
}

fn assemble_stiffness(g: &Grid, w: &Weights) -> SparseOperator {
    let mut tb = TripletBuilder::new(g.n_cells());
    let mut pair = |p: usize, q: usize, c: f64| {
        tb.add(p, p, c);
        tb.add(q, q, c);
        tb.add(p, q, -c);
        tb.add(q, p, -c);
    };
    for j in 0..g.ny {
        for i in 1..g.nx {
            pair(g.idx(i - 1, j), g.idx(i, j), w.xface[g.u_idx(i, j)] * g.hy / g.hx);
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            pair(g.idx(i, j - 1), g.idx(i, j), w.yface[g.v_idx(i, j)] * g.hx / g.hy);
        }
    }
    let sx = [-0.5 / g.hx, 0.5 / g.hx, -0.5 / g.hx, 0.5 / g.hx];
    let sy = [-0.5 / g.hy, -0.5 / g.hy, 0.5 / g.hy, 0.5 / g.hy];
    for j in 1..g.ny {
        for i in 1..g.nx {
            let a = w.corner[j * (g.nx + 1) + i];
            if a == 0.0 {
                continue;
            }
            let c = corner_cells(g, i, j);
            let s = a * g.hx * g.hy;
            for p in 0..4 {
                for q in 0..4 {
                    tb.add(c[p], c[q], s * (sx[p] * sy[q] + sy[p] * sx[q]));
                }
            }
        }
    }
    tb.build()
}

/// Cell weights `exp(-sβ(ψ - ψ̄))` and the diffusion-drift matrix `K` of one
/// species, without the mass term.
pub fn slotboom_stiffness(
    lambda: &TensorField,
    psi: &ScalarField,
    species: Species,
    beta: f64,
) -> Result<(Vec<f64>, SparseOperator)> {
    psi.grid.check_same(&lambda.grid)?;
    let w = Weights::new(lambda, psi, species.sign(), beta);
    let k = assemble_stiffness(&psi.grid, &w);
    Ok((w.cell, k))
}

/// Both species' operators at one potential.
#[derive(Debug, Clone)]
pub struct NpStepper {
    pub plus: NpOperator,
    pub minus: NpOperator,
}

impl NpStepper {
    pub fn new(lambda: &TensorField, psi: &ScalarField, dt: f64, params: NpParams, kind: SolverKind) -> Result<Self> {
        Ok(Self {
            plus: NpOperator::new(lambda, psi, Species::Plus, dt, params, kind)?,
            minus: NpOperator::new(lambda, psi, Species::Minus, dt, params, kind)?,
        })
    }

    pub fn step(&self, pair: &ChargePair, v: &VectorFieldMAC) -> Result<ChargePair> {
        Ok(ChargePair { c_plus: self.plus.step(&pair.c_plus, v)?, c_minus: self.minus.step(&pair.c_minus, v)? })
    }
}

/// Face flux of one species; `sign` is `+1` for `c⁺`, `-1` for `c⁻`.
pub fn np_face_flux(
    c: &ScalarField,
    sign: f64,
    v: &VectorFieldMAC,
    psi: &ScalarField,
    lambda: &TensorField,
    pe: f64,
    beta: f64,
) -> Result<VectorFieldMAC> {
    c.grid.check_same(&psi.grid)?;
    c.grid.check_same(&v.grid)?;
    c.grid.check_same(&lambda.grid)?;
    let w = Weights::new(lambda, psi, sign, beta);
    let u: Vec<f64> = c.values.iter().zip(&w.cell).map(|(c, w)| c / w).collect();
    let mut f = advective_flux(c, v, pe);
    f.axpy(1.0, &weighted_flux(&c.grid, &w, &u));
    Ok(f)
}

/// One step of both species at frozen `v` and `ψ`.
pub fn np_step(
    pair: &ChargePair,
    v: &VectorFieldMAC,
    psi: &ScalarField,
    lambda: &TensorField,
    dt: f64,
    params: NpParams,
) -> Result<ChargePair> {
    NpStepper::new(lambda, psi, dt, params, SolverKind::Cholesky)?.step(pair, v)
}
