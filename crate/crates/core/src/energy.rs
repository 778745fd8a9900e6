//! Discrete energy, dissipation and the energy-inequality ledger.
//!
//! With general constants the quantities that balance are
//!
//! ```text
//! E   = (βRe/α) ½∫|v|² + Σ± ∫c±(ln c± + 1) + (β/γ) [½∫|∇ψ|²_E + τ/2 ∫_Γ ψ²]
//! W   = (β/α) ∫|∇v|² + (1/Pe) Σ± ∫|2∇√c± ± β√c±∇ψ|²_Λ
//! BW  = (β/γ) ∫_Γ ψ ∂tξ
//! ```
//!
//! and the κ-term `(βγκ/2) ∫φ²`; every weight is 1 at unit constants. Ledger
//! columns store the weighted contributions, so the audit can be replayed from
//! the CSV alone.

use std::path::Path;

use crate::anisotropy::TensorField;
use crate::error::{Error, Result};
use crate::grid::{BoundaryTrace, ScalarField, VectorFieldMAC};
use crate::navier_stokes::viscous_dissipation;
use crate::nernst_planck::{slotboom_stiffness, total_mass, ChargePair, Species};
use crate::poisson::PoissonRobin;

/// Physical constants entering the energy weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub re: f64,
    pub pe: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self { re: 1.0, pe: 1.0, alpha: 1.0, beta: 1.0, gamma: 1.0, kappa: 0.0 }
    }
}

impl Constants {
    pub fn kinetic_weight(&self) -> f64 {
        self.beta * self.re / self.alpha
    }

    pub fn field_weight(&self) -> f64 {
        self.beta / self.gamma
    }

    pub fn viscous_weight(&self) -> f64 {
        self.beta / self.alpha
    }

    pub fn charge_weight(&self) -> f64 {
        1.0 / self.pe
    }

    pub fn kappa_weight(&self) -> f64 {
        0.5 * self.beta * self.gamma * self.kappa
    }
}

pub const LEDGER_COLUMNS: [&str; 15] = [
    "t",
    "kinetic",
    "entropy",
    "field_energy",
    "boundary_energy",
    "kappa_term",
    "dissipation",
    "boundary_work",
    "mass_plus",
    "mass_minus",
    "min_plus",
    "min_minus",
    "residual",
    "hess_psi_sq",
    "grad_sqrt_c_sq",
];

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct LedgerRow {
    pub t: f64,
    pub kinetic: f64,
    pub entropy: f64,
    pub field_energy: f64,
    pub boundary_energy: f64,
    pub kappa_term: f64,
    pub dissipation: f64,
    /// Boundary work rate over `[t, t + dt]`.
    pub boundary_work: f64,
    pub mass_plus: f64,
    pub mass_minus: f64,
    pub min_plus: f64,
    pub min_minus: f64,
    pub residual: f64,
    /// Diagnostic `∫|∇²ψ|²` over interior cells.
    pub hess_psi_sq: f64,
    /// Diagnostic `Σ± ∫|∇√c±|²`.
    pub grad_sqrt_c_sq: f64,
}

impl LedgerRow {
    /// `E` (unregularized).
    pub fn energy(&self) -> f64 {
        self.kinetic + self.entropy + self.field_energy + self.boundary_energy
    }

    /// `E_reg = E + κ-term`.
    pub fn energy_reg(&self) -> f64 {
        self.energy() + self.kappa_term
    }

    fn values(&self) -> [f64; 15] {
        [
            self.t,
            self.kinetic,
            self.entropy,
            self.field_energy,
            self.boundary_energy,
            self.kappa_term,
            self.dissipation,
            self.boundary_work,
            self.mass_plus,
            self.mass_minus,
            self.min_plus,
            self.min_minus,
            self.residual,
            self.hess_psi_sq,
            self.grad_sqrt_c_sq,
        ]
    }

    fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

/// Per-step energy records with the running inequality residual.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLedger {
    pub rows: Vec<LedgerRow>,
    /// `Σ_{k<n} (t_{k+1} - t_k)(W_k - BW_k)` up to the last row.
    integrated: f64,
}

impl EnergyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row, filling in its residual
    /// `ρ_n = E_n - E_0 + Σ_{k<n} Δt_k (W_k - BW_k)`, using `E_reg`.
    pub fn push(&mut self, mut row: LedgerRow) -> Result<f64> {
        if let Some(last) = self.rows.last() {
            if !(row.t > last.t) {
                return Err(Error::Invariant(format!("ledger time must increase strictly: {} after {}", row.t, last.t)));
            }
            self.integrated += (row.t - last.t) * (last.dissipation - last.boundary_work);
        }
        let e0 = self.rows.first().map_or(row.energy_reg(), |r| r.energy_reg());
        row.residual = row.energy_reg() - e0 + self.integrated;
        if !row.is_finite() {
            return Err(Error::Invariant(format!("non-finite ledger row at t = {}", row.t)));
        }
        self.rows.push(row);
        Ok(row.residual)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(LEDGER_COLUMNS)?;
        for r in &self.rows {
            out.write_record(r.values().iter().map(|v| format!("{v:e}")))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    /// Reads a ledger CSV; residuals are taken from the file as written.
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        if header != LEDGER_COLUMNS {
            return Err(Error::Structural(format!("unexpected ledger header {header:?}")));
        }
        let mut rows = Vec::new();
        for rec in rd.deserialize() {
            rows.push(rec?);
        }
        Ok(Self { rows, integrated: 0.0 })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Recomputes `ρ` at row `n` from the energy, dissipation and boundary-work
/// columns alone.
pub fn audit_energy_inequality(ledger: &EnergyLedger, n: usize) -> Result<f64> {
    let rows = &ledger.rows;
    if n >= rows.len() {
        return Err(Error::Structural(format!("ledger has {} rows, asked for {n}", rows.len())));
    }
    let mut acc = 0.0;
    for k in 0..n {
        acc += (rows[k + 1].t - rows[k].t) * (rows[k].dissipation - rows[k].boundary_work);
    }
    Ok(rows[n].energy_reg() - rows[0].energy_reg() + acc)
}

/// Outcome of replaying a ledger.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AuditReport {
    pub rows: usize,
    pub max_rho: f64,
    pub t_at_max: f64,
    /// Largest `|ρ_recomputed - ρ_column|`.
    pub column_mismatch: f64,
    pub entropy_floor_ok: bool,
    pub mass_drift: f64,
    pub min_c: f64,
}

pub fn audit_ledger(ledger: &EnergyLedger, area: f64) -> Result<AuditReport> {
    let mut rep = AuditReport {
        rows: ledger.len(),
        max_rho: f64::NEG_INFINITY,
        t_at_max: 0.0,
        column_mismatch: 0.0,
        entropy_floor_ok: true,
        mass_drift: 0.0,
        min_c: f64::INFINITY,
    };
    let Some(first) = ledger.rows.first() else {
        return Err(Error::Structural("empty ledger".into()));
    };
    let floor = -2.0 * area / std::f64::consts::E.powi(2);
    for n in 0..ledger.len() {
        let r = &ledger.rows[n];
        let rho = audit_energy_inequality(ledger, n)?;
        if rho > rep.max_rho {
            rep.max_rho = rho;
            rep.t_at_max = r.t;
        }
        rep.column_mismatch = rep.column_mismatch.max((rho - r.residual).abs());
        rep.entropy_floor_ok &= r.entropy >= floor - 1e-12;
        for (m, m0) in [(r.mass_plus, first.mass_plus), (r.mass_minus, first.mass_minus)] {
            if m0 != 0.0 {
                rep.mass_drift = rep.mass_drift.max(((m - m0) / m0).abs());
            }
        }
        rep.min_c = rep.min_c.min(r.min_plus.min(r.min_minus));
    }
    Ok(rep)
}

/// `Σ ∫ c (ln c + 1)` with `0·ln 0 = 0`.
pub fn entropy(c: &ScalarField) -> Result<f64> {
    let mut s = 0.0;
    for (k, &x) in c.values.iter().enumerate() {
        if x < -1e-12 {
            return Err(Error::Invariant(format!("negative concentration {x:.3e} at cell {k}")));
        }
        if x > 1e-300 {
            s += x * (x.ln() + 1.0);
        }
    }
    Ok(s * c.grid.cell_area())
}

/// Logarithmic mean `(a - b)/(ln a - ln b)`, `0` if either is `0`.
pub fn log_mean(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    let r = b / a - 1.0;
    if r.abs() < 1e-4 {
        a * (1.0 + r / 2.0 - r * r / 12.0)
    } else {
        (b - a) / (b / a).ln()
    }
}

/// `∫ |2∇√c + sβ√c∇ψ|²_Λ` in perfect-square form. Face normals use the
/// logarithmic mean of `√c`, which makes Boltzmann profiles exact zeros;
/// the anisotropic part `λ(d·a)²` uses cell averages of the face values.
pub fn charge_dissipation_square(
    c: &ScalarField,
    sign: f64,
    psi: &ScalarField,
    lambda_part: Option<(&[f64], &[f64], f64)>,
    beta: f64,
) -> f64 {
    let g = c.grid;
    let sq: Vec<f64> = c.values.iter().map(|x| x.max(0.0).sqrt()).collect();
    let mut fx = vec![0.0; g.n_u()];
    let mut fy = vec![0.0; g.n_v()];
    for j in 0..g.ny {
        for i in 1..g.nx {
            let (l, r) = (g.idx(i - 1, j), g.idx(i, j));
            fx[g.u_idx(i, j)] =
                (2.0 * (sq[r] - sq[l]) + sign * beta * log_mean(sq[l], sq[r]) * (psi.values[r] - psi.values[l])) / g.hx;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let (b, a) = (g.idx(i, j - 1), g.idx(i, j));
            fy[g.v_idx(i, j)] =
                (2.0 * (sq[a] - sq[b]) + sign * beta * log_mean(sq[b], sq[a]) * (psi.values[a] - psi.values[b])) / g.hy;
        }
    }
    let area = g.cell_area();
    let mut w = area * (fx.iter().map(|x| x * x).sum::<f64>() + fy.iter().map(|x| x * x).sum::<f64>());
    if let Some((dx, dy, lambda)) = lambda_part {
        for j in 0..g.ny {
            for i in 0..g.nx {
                let ax = 0.5 * (fx[g.u_idx(i, j)] + fx[g.u_idx(i + 1, j)]);
                let ay = 0.5 * (fy[g.v_idx(i, j)] + fy[g.v_idx(i, j + 1)]);
                let k = g.idx(i, j);
                let p = dx[k] * ax + dy[k] * ay;
                w += lambda * p * p * area;
            }
        }
    }
    w
}

/// Scheme-consistent charge dissipation `(ln u)ᵀ K u` in the Slotboom
/// variable `u = c e^{sβψ}`, i.e. `∫ c |∇(ln c + sβψ)|²_Λ` as the implicit
/// step sees it.
pub fn charge_dissipation_scheme(
    c: &ScalarField,
    species: Species,
    psi: &ScalarField,
    lambda: &TensorField,
    beta: f64,
) -> Result<f64> {
    let (w, k) = slotboom_stiffness(lambda, psi, species, beta)?;
    let u: Vec<f64> = c.values.iter().zip(&w).map(|(c, w)| c.max(0.0) / w).collect();
    let ln_u: Vec<f64> = u.iter().map(|x| x.max(1e-300).ln()).collect();
    Ok(crate::linalg::dot(&ln_u, &k.matvec(&u)))
}

/// `∫ |∇²ψ|²` over cells whose full stencil is interior.
pub fn hessian_norm_sq(psi: &ScalarField) -> f64 {
    let g = psi.grid;
    let mut s = 0.0;
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let p = |a: usize, b: usize| psi.at(a, b);
            let xx = (p(i + 1, j) - 2.0 * p(i, j) + p(i - 1, j)) / (g.hx * g.hx);
            let yy = (p(i, j + 1) - 2.0 * p(i, j) + p(i, j - 1)) / (g.hy * g.hy);
            let xy = (p(i + 1, j + 1) - p(i - 1, j + 1) - p(i + 1, j - 1) + p(i - 1, j - 1)) / (4.0 * g.hx * g.hy);
            s += xx * xx + 2.0 * xy * xy + yy * yy;
        }
    }
    s * g.cell_area()
}

/// `∫ |∇√c|²` on interior faces.
pub fn grad_sqrt_sq(c: &ScalarField) -> f64 {
    let sq = c.map(|x| x.max(0.0).sqrt());
    let grad = crate::grid::gradient_to_faces_neumann(&sq).expect("field checked by caller");
    grad.u.iter().chain(&grad.v).map(|x| x * x).sum::<f64>() * c.grid.cell_area()
}

/// Everything the ledger needs at one time level.
pub struct EnergyInputs<'a> {
    pub t: f64,
    pub v: &'a VectorFieldMAC,
    pub charges: &'a ChargePair,
    pub psi: &'a ScalarField,
    pub phi: &'a ScalarField,
    pub xi: &'a BoundaryTrace,
    /// `ξ` at the next time level, for the boundary work rate.
    pub xi_next: &'a BoundaryTrace,
    pub dt: f64,
    pub poisson: &'a PoissonRobin,
    pub lambda: &'a TensorField,
    pub constants: Constants,
}

/// Evaluates one ledger row (residual left at 0 for [`EnergyLedger::push`]).
pub fn ledger_row(inp: &EnergyInputs<'_>) -> Result<LedgerRow> {
    let k = inp.constants;
    let g = inp.psi.grid;
    let pr = inp.poisson;
    let trace = pr.boundary_trace(inp.psi, inp.xi)?;
    let bw: f64 = g.boundary_faces().map(|f| trace.get(f) * (inp.xi_next.get(f) - inp.xi.get(f)) / inp.dt * f.length(&g)).sum();
    let mut charge = 0.0;
    for s in Species::BOTH {
        charge += charge_dissipation_scheme(inp.charges.get(s), s, inp.psi, inp.lambda, k.beta)?;
    }
    let (mass_plus, mass_minus) = total_mass(inp.charges);
    Ok(LedgerRow {
        t: inp.t,
        kinetic: k.kinetic_weight() * inp.v.kinetic_energy(),
        entropy: entropy(&inp.charges.c_plus)? + entropy(&inp.charges.c_minus)?,
        field_energy: k.field_weight() * pr.field_energy(inp.psi, inp.xi)?,
        boundary_energy: k.field_weight() * pr.boundary_energy(inp.psi, inp.xi)?,
        kappa_term: k.kappa_weight() * inp.phi.values.iter().map(|x| x * x).sum::<f64>() * g.cell_area(),
        dissipation: k.viscous_weight() * viscous_dissipation(inp.v) + k.charge_weight() * charge,
        boundary_work: k.field_weight() * bw,
        mass_plus,
        mass_minus,
        min_plus: inp.charges.c_plus.min(),
        min_minus: inp.charges.c_minus.min(),
        residual: 0.0,
        hess_psi_sq: hessian_norm_sq(inp.psi),
        grad_sqrt_c_sq: grad_sqrt_sq(&inp.charges.c_plus) + grad_sqrt_sq(&inp.charges.c_minus),
    })
}

/// Grönwall-envelope check of the regularized energy: `C` is fitted on the
/// first half of the ledger so that
/// `Ê(t) + ∫W ≤ eᵗ (Ê(0) + C (X + t))`, `Ê = E_reg + 2|Ω|/e²`, `X` a norm of
/// the boundary data; the second half is then checked against it.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GronwallReport {
    pub constant: f64,
    pub violations: Vec<f64>,
}

pub fn audit_regularized_energy(ledger: &EnergyLedger, area: f64, xi_norm: f64) -> Result<GronwallReport> {
    let rows = &ledger.rows;
    if rows.len() < 2 {
        return Err(Error::Structural("need at least two ledger rows".into()));
    }
    let shift = 2.0 * area / std::f64::consts::E.powi(2);
    let e0 = rows[0].energy_reg() + shift;
    let mut lhs = Vec::with_capacity(rows.len());
    let mut acc = 0.0;
    for (n, r) in rows.iter().enumerate() {
        if n > 0 {
            acc += (r.t - rows[n - 1].t) * rows[n - 1].dissipation;
        }
        lhs.push(r.energy_reg() + shift + acc);
    }
    let t0 = rows[0].t;
    let need = |n: usize| {
        let t = rows[n].t - t0;
        ((lhs[n] * (-t).exp() - e0) / (xi_norm + t).max(1e-300)).max(0.0)
    };
    let half = rows.len() / 2;
    let constant = (0..half.max(1)).map(need).fold(0.0, f64::max);
    let violations = (half..rows.len())
        .filter(|&n| {
            let t = rows[n].t - t0;
            lhs[n] > t.exp() * (e0 + constant * (xi_norm + t)) * (1.0 + 1e-12)
        })
        .map(|n| rows[n].t)
        .collect();
    Ok(GronwallReport { constant, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anisotropy::{DirectorField, DirectorPreset};
    use crate::grid::Grid;
    use crate::linalg::SolverKind;

    #[test]
    fn entropy_examples() {
        let g = Grid::unit(8).unwrap();
        let c = ScalarField::constant(g, 1.0);
        assert!((entropy(&c).unwrap() - 1.0).abs() < 1e-14);
        let c = ScalarField::constant(g, 2.5);
        assert!((entropy(&c).unwrap() - 2.5 * (2.5f64.ln() + 1.0)).abs() < 1e-13);
        assert_eq!(entropy(&ScalarField::zeros(g)).unwrap(), 0.0);
        let mut bad = ScalarField::zeros(g);
        bad.values[3] = -1e-9;
        assert!(matches!(entropy(&bad), Err(Error::Invariant(_))));
        // x(ln x + 1) ≥ -1/e²
        let c = ScalarField::constant(g, (-2.0f64).exp());
        assert!(entropy(&c).unwrap() >= -1.0 / std::f64::consts::E.powi(2) - 1e-15);
    }

    #[test]
    fn log_mean_values() {
        assert_eq!(log_mean(0.0, 1.0), 0.0);
        assert!((log_mean(2.0, 2.0) - 2.0).abs() < 1e-15);
        assert!((log_mean(1.0, std::f64::consts::E) - (std::f64::consts::E - 1.0)).abs() < 1e-14);
        let (a, b) = (1.0, 1.0 + 1e-6);
        assert!((log_mean(a, b) - (b - a) / (b as f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn boltzmann_pair_has_no_charge_dissipation() {
        let g = Grid::unit(32).unwrap();
        let psi = ScalarField::from_fn(g, |x, y| (3.0 * x).sin() * y);
        let lam = TensorField::identity(g);
        for (s, sign) in [(Species::Plus, 1.0), (Species::Minus, -1.0)] {
            let c = psi.map(|p| 0.6 * (-sign * p).exp());
            assert!(charge_dissipation_square(&c, sign, &psi, None, 1.0) < 1e-20);
            assert!(charge_dissipation_scheme(&c, s, &psi, &lam, 1.0).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn dissipation_forms_agree_to_second_order() {
        let lam_of =
            |n: usize| DirectorField::preset(DirectorPreset::Zero, Grid::unit(n).unwrap(), 0.5, 0.5).unwrap().mobility_tensor();
        let diff = |n: usize| {
            let g = Grid::unit(n).unwrap();
            let psi = ScalarField::from_fn(g, |x, y| (std::f64::consts::PI * x).cos() * y);
            let c =
                ScalarField::from_fn(g, |x, y| 1.0 + 0.5 * (std::f64::consts::PI * x).cos() * (std::f64::consts::PI * y).cos());
            let a = charge_dissipation_square(&c, 1.0, &psi, None, 1.0);
            let b = charge_dissipation_scheme(&c, Species::Plus, &psi, &lam_of(n), 1.0).unwrap();
            (a - b).abs()
        };
        let (d1, d2) = (diff(16), diff(32));
        assert!(d1 / d2 > 3.0, "{d1} {d2}");
    }

    #[test]
    fn constant_state_energy() {
        // v = 0, ψ = 0, c± = c̄ ⇒ E = 2c̄(ln c̄ + 1)
        let g = Grid::unit(8).unwrap();
        let c = ScalarField::constant(g, 1.0);
        let pair = ChargePair::new(c.clone(), c).unwrap();
        let pr = PoissonRobin::new(TensorField::identity(g), 1.0, SolverKind::Cholesky).unwrap();
        let psi = ScalarField::zeros(g);
        let xi = BoundaryTrace::zeros(g);
        let v = VectorFieldMAC::zeros(g);
        let lam = TensorField::identity(g);
        let row = ledger_row(&EnergyInputs {
            t: 0.0,
            v: &v,
            charges: &pair,
            psi: &psi,
            phi: &psi,
            xi: &xi,
            xi_next: &xi,
            dt: 1e-3,
            poisson: &pr,
            lambda: &lam,
            constants: Constants::default(),
        })
        .unwrap();
        assert!((row.energy() - 2.0).abs() < 1e-13);
        assert_eq!(row.dissipation, 0.0);
        assert_eq!(row.boundary_work, 0.0);
    }

    #[test]
    fn field_energy_of_linear_potential() {
        // ψ = x, d = (0, 1) masked, ε = 1: ½∫|∇ψ|²_E = ½ (d ⟂ ∇ψ)
        let g = Grid::unit(32).unwrap();
        let df = DirectorField::from_fn_masked(g, 1.0, 1.0, |_, _| (0.0, 1.0)).unwrap();
        let pr = PoissonRobin::new(df.permittivity_tensor(), 1.0, SolverKind::Cholesky).unwrap();
        let psi = ScalarField::from_fn(g, |x, _| x);
        // ξ matching the Robin closure of ψ = x
        let xi = BoundaryTrace::from_fn(g, |f, x, _| f.side.normal().0 + x);
        let e = pr.field_energy(&psi, &xi).unwrap();
        assert!((e - 0.5).abs() < 1e-12, "{e}");
    }

    #[test]
    fn ledger_residual_and_replay() {
        let mut l = EnergyLedger::new();
        let mk = |t: f64, e: f64, w: f64, bw: f64| LedgerRow {
            t,
            entropy: e,
            dissipation: w,
            boundary_work: bw,
            ..Default::default()
        };
        assert_eq!(l.push(mk(0.0, 2.0, 1.0, 0.5)).unwrap(), 0.0);
        let r1 = l.push(mk(0.1, 1.96, 1.0, 0.5)).unwrap();
        assert!((r1 - (-0.04 + 0.05)).abs() < 1e-15);
        assert!(l.push(mk(0.1, 1.9, 0.0, 0.0)).is_err());
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        let back = EnergyLedger::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.rows, l.rows);
        let rep = audit_ledger(&back, 1.0).unwrap();
        assert!(rep.column_mismatch < 1e-15);
        assert!((rep.max_rho - r1).abs() < 1e-15);
    }

    #[test]
    fn null_ledger_has_zero_residual() {
        let mut l = EnergyLedger::new();
        for n in 0..5 {
            l.push(LedgerRow { t: n as f64 * 0.1, ..Default::default() }).unwrap();
        }
        assert!(l.rows.iter().all(|r| r.residual == 0.0));
    }
}
