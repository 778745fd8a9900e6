//! Anisotropic Poisson problem `-∇·(E∇ψ) = f` with the Robin condition
//! `E∇ψ·n + τψ = ξ`, and the elliptic smoother built from the same operator.
//!
//! The discrete operator is assembled from a symmetric bilinear form: face
//! differences carry the diagonal tensor entries, vertex-averaged gradients
//! carry the off-diagonal ones, and each boundary face is closed by a
//! two-point Robin flux whose boundary value is eliminated.

use crate::anisotropy::TensorField;
use crate::error::{Error, Result};
use crate::grid::{BoundaryFace, BoundaryTrace, Grid, ScalarField, Side};
use crate::linalg::{SolverKind, SparseOperator, SpdSolver, TripletBuilder};

/// Assembled and factored Robin-Poisson operator.
#[derive(Debug, Clone)]
pub struct PoissonRobin {
    pub grid: Grid,
    pub tensor: TensorField,
    pub tau: f64,
    op: SparseOperator,
    solver: SpdSolver,
}

/// Normal tensor entry `n·E n` seen by a boundary face.
fn normal_coefficient(t: &TensorField, face: BoundaryFace) -> f64 {
    let k = {
        let (i, j) = face.cell(&t.grid);
        t.grid.idx(i, j)
    };
    match face.side {
        Side::Left | Side::Right => t.a11[k],
        Side::Bottom | Side::Top => t.a22[k],
    }
}

/// Adds the interior part of `∫ A∇u·∇w` (no boundary terms) to `tb`, each
/// cell scaled by `scale`.
pub(crate) fn assemble_bulk(t: &TensorField, tb: &mut TripletBuilder, scale: f64) {
    let g = t.grid;
    let (hx, hy) = (g.hx, g.hy);
    let mut pair = |p: usize, q: usize, c: f64| {
        tb.add(p, p, c);
        tb.add(q, q, c);
        tb.add(p, q, -c);
        tb.add(q, p, -c);
    };
    for j in 0..g.ny {
        for i in 1..g.nx {
            let (l, r) = (g.idx(i - 1, j), g.idx(i, j));
            pair(l, r, scale * 0.5 * (t.a11[l] + t.a11[r]) * hy / hx);
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let (b, a) = (g.idx(i, j - 1), g.idx(i, j));
            pair(b, a, scale * 0.5 * (t.a22[b] + t.a22[a]) * hx / hy);
        }
    }
    // Cross terms at interior vertices: gx·gy with 4-cell gradients.
    for j in 1..g.ny {
        for i in 1..g.nx {
            let c = [g.idx(i - 1, j - 1), g.idx(i, j - 1), g.idx(i - 1, j), g.idx(i, j)];
            let a12 = 0.25 * c.iter().map(|&k| t.a12[k]).sum::<f64>();
            if a12 == 0.0 {
                continue;
            }
            // gx = Σ sx_k u_k, gy = Σ sy_k u_k
            let sx = [-0.5 / hx, 0.5 / hx, -0.5 / hx, 0.5 / hx];
            let sy = [-0.5 / hy, -0.5 / hy, 0.5 / hy, 0.5 / hy];
            let w = scale * a12 * hx * hy;
            for p in 0..4 {
                for q in 0..4 {
                    tb.add(c[p], c[q], w * (sx[p] * sy[q] + sy[p] * sx[q]));
                }
            }
        }
    }
}

impl PoissonRobin {
    pub fn new(tensor: TensorField, tau: f64, kind: SolverKind) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Parameter(format!("Robin coefficient tau must be positive, got {tau}")));
        }
        tensor.check_elliptic()?;
        let op = Self::assemble(&tensor, tau);
        let solver = SpdSolver::new(op.clone(), kind)?;
        Ok(Self { grid: tensor.grid, tensor, tau, op, solver })
    }

    fn assemble(t: &TensorField, tau: f64) -> SparseOperator {
        let g = t.grid;
        let mut tb = TripletBuilder::new(g.n_cells());
        assemble_bulk(t, &mut tb, 1.0);
        for face in g.boundary_faces() {
            let q = normal_coefficient(t, face) / face.half_width(&g);
            let (i, j) = face.cell(&g);
            let k = g.idx(i, j);
            tb.add(k, k, q * tau / (q + tau) * face.length(&g));
        }
        tb.build()
    }

    /// The matrix of the homogeneous problem (`ξ = 0`), i.e. `M(-Δ_E)` with
    /// `M` the diagonal of cell areas.
    pub fn operator(&self) -> &SparseOperator {
        &self.op
    }

    fn q(&self, face: BoundaryFace) -> f64 {
        normal_coefficient(&self.tensor, face) / face.half_width(&self.grid)
    }

    /// Right-hand side vector `∫ f w + boundary data`.
    pub fn rhs(&self, f: &ScalarField, xi: &BoundaryTrace) -> Result<Vec<f64>> {
        self.grid.check_same(&f.grid)?;
        self.grid.check_same(&xi.grid)?;
        f.check()?;
        xi.check()?;
        let g = self.grid;
        let area = g.cell_area();
        let mut b: Vec<f64> = f.values.iter().map(|v| v * area).collect();
        for face in g.boundary_faces() {
            let q = self.q(face);
            let (i, j) = face.cell(&g);
            b[g.idx(i, j)] += xi.get(face) * q / (q + self.tau) * face.length(&g);
        }
        Ok(b)
    }

    pub fn solve(&self, f: &ScalarField, xi: &BoundaryTrace) -> Result<ScalarField> {
        let b = self.rhs(f, xi)?;
        let psi = ScalarField { grid: self.grid, values: self.solver.solve(&b)? };
        if !psi.is_finite() {
            return Err(Error::Convergence { iterations: 0, residual: f64::NAN });
        }
        Ok(psi)
    }

    /// Relative residual `‖Aψ - b‖ / ‖b‖` of a candidate solution.
    pub fn residual(&self, psi: &ScalarField, f: &ScalarField, xi: &BoundaryTrace) -> Result<f64> {
        let b = self.rhs(f, xi)?;
        let r = self.op.matvec(&psi.values);
        let num: f64 = r.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let den = crate::linalg::norm(&b);
        Ok(if den > 0.0 { num / den } else { num })
    }

    /// Boundary values `ψ_Γ` implied by the eliminated Robin closure.
    pub fn boundary_trace(&self, psi: &ScalarField, xi: &BoundaryTrace) -> Result<BoundaryTrace> {
        self.grid.check_same(&psi.grid)?;
        xi.check()?;
        let g = self.grid;
        let values = g
            .boundary_faces()
            .map(|face| {
                let q = self.q(face);
                let (i, j) = face.cell(&g);
                (xi.get(face) + q * psi.at(i, j)) / (q + self.tau)
            })
            .collect();
        BoundaryTrace::from_values(g, values)
    }

    /// `½ ∫ E∇ψ·∇ψ`, including the half cells next to the boundary.
    pub fn field_energy(&self, psi: &ScalarField, xi: &BoundaryTrace) -> Result<f64> {
        let g = self.grid;
        let bulk = {
            let mut tb = TripletBuilder::new(g.n_cells());
            assemble_bulk(&self.tensor, &mut tb, 1.0);
            let a = tb.build();
            crate::linalg::dot(&psi.values, &a.matvec(&psi.values))
        };
        let trace = self.boundary_trace(psi, xi)?;
        let mut edge = 0.0;
        for face in g.boundary_faces() {
            let (i, j) = face.cell(&g);
            let d = trace.get(face) - psi.at(i, j);
            edge += self.q(face) * d * d * face.length(&g);
        }
        Ok(0.5 * (bulk + edge))
    }

    /// `τ/2 ∫_Γ ψ²`.
    pub fn boundary_energy(&self, psi: &ScalarField, xi: &BoundaryTrace) -> Result<f64> {
        let trace = self.boundary_trace(psi, xi)?;
        let g = self.grid;
        Ok(0.5 * self.tau * g.boundary_faces().zip(&trace.values).map(|(face, t)| t * t * face.length(&g)).sum::<f64>())
    }
}

/// Convenience wrapper: assemble, solve once.
pub fn solve_poisson_robin(
    tensor: &TensorField,
    tau: f64,
    f: &ScalarField,
    xi: &BoundaryTrace,
    kind: SolverKind,
) -> Result<ScalarField> {
    PoissonRobin::new(tensor.clone(), tau, kind)?.solve(f, xi)
}

/// The smoothing operator `S_κ = (1 - κΔ_E)^{-1}` with the homogeneous Robin
/// closure. `κ = 0` is the identity.
#[derive(Debug, Clone)]
pub struct Smoother {
    pub grid: Grid,
    pub kappa: f64,
    solver: Option<SpdSolver>,
}

impl Smoother {
    pub fn new(poisson: &PoissonRobin, kappa: f64, kind: SolverKind) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::Parameter(format!("kappa must be non-negative, got {kappa}")));
        }
        let grid = poisson.grid;
        if kappa == 0.0 {
            return Ok(Self { grid, kappa, solver: None });
        }
        let a = poisson.operator();
        let area = grid.cell_area();
        let mut tb = TripletBuilder::new(a.n);
        for r in 0..a.n {
            tb.add(r, r, area);
            for k in a.row_ptr[r]..a.row_ptr[r + 1] {
                tb.add(r, a.cols[k], kappa * a.vals[k]);
            }
        }
        let solver = Some(SpdSolver::new(tb.build(), kind)?);
        Ok(Self { grid, kappa, solver })
    }

    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        self.grid.check_same(&f.grid)?;
        f.check()?;
        match &self.solver {
            None => Ok(f.clone()),
            Some(s) => {
                let area = self.grid.cell_area();
                let b: Vec<f64> = f.values.iter().map(|v| v * area).collect();
                Ok(ScalarField { grid: self.grid, values: s.solve(&b)? })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anisotropy::{DirectorField, DirectorPreset};
    use crate::grid::domain_integral;

    const CHOL: SolverKind = SolverKind::Cholesky;

    #[test]
    fn isotropic_operator_matches_hand_coded_five_point() {
        let (nx, ny, tau) = (5usize, 4usize, 1.7);
        let g = Grid::new(nx, ny, 1.0, 0.8).unwrap();
        let (hx, hy) = (1.0 / nx as f64, 0.8 / ny as f64);
        let pr = PoissonRobin::new(TensorField::identity(g), tau, CHOL).unwrap();
        let robin = |h: f64, len: f64| {
            let q = 2.0 / h;
            q * tau / (q + tau) * len
        };
        let mut want = vec![vec![0.0; nx * ny]; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let mut link = |other: Option<usize>, coef: f64, boundary: f64| match other {
                    Some(o) => {
                        want[k][k] += coef;
                        want[k][o] -= coef;
                    }
                    None => want[k][k] += boundary,
                };
                link((i > 0).then(|| k - 1), hy / hx, robin(hx, hy));
                link((i + 1 < nx).then(|| k + 1), hy / hx, robin(hx, hy));
                link((j > 0).then(|| k - nx), hx / hy, robin(hy, hx));
                link((j + 1 < ny).then(|| k + nx), hx / hy, robin(hy, hx));
            }
        }
        let got = pr.operator().to_dense();
        for r in 0..nx * ny {
            for c in 0..nx * ny {
                assert!((got[(r, c)] - want[r][c]).abs() < 1e-13, "({r},{c}) {} vs {}", got[(r, c)], want[r][c]);
            }
        }
    }

    #[test]
    fn operator_is_symmetric_positive_definite() {
        let g = Grid::unit(12).unwrap();
        for p in DirectorPreset::ALL {
            let df = DirectorField::preset(p, g, 0.5, 0.9).unwrap();
            let pr = PoissonRobin::new(df.permittivity_tensor(), 1.0, CHOL).unwrap();
            let a = pr.operator().to_dense();
            assert!((&a - a.transpose()).amax() < 1e-12);
            let ev = a.symmetric_eigen().eigenvalues;
            assert!(ev.min() > 0.0, "{p}: {}", ev.min());
        }
    }

    #[test]
    fn constant_data_gives_constant_solution() {
        // f = 0, ξ = τ·2 ⇒ ψ ≡ 2, trace ≡ 2, zero field energy
        let g = Grid::new(10, 6, 2.0, 1.0).unwrap();
        let df = DirectorField::preset(DirectorPreset::Vortex, g, 0.5, 0.5).unwrap();
        let pr = PoissonRobin::new(df.permittivity_tensor(), 0.7, CHOL).unwrap();
        let xi = BoundaryTrace::from_fn(g, |_, _, _| 1.4);
        let psi = pr.solve(&ScalarField::zeros(g), &xi).unwrap();
        assert!(psi.values.iter().all(|v| (v - 2.0).abs() < 1e-12));
        assert!(pr.field_energy(&psi, &xi).unwrap() < 1e-20);
        let be = pr.boundary_energy(&psi, &xi).unwrap();
        assert!((be - 0.5 * 0.7 * 4.0 * 6.0).abs() < 1e-10);
    }

    #[test]
    fn discrete_gauss_law() {
        // Σ fluxes: ∫ f + ∫_Γ (ξ - τψ_Γ) = 0
        let g = Grid::unit(16).unwrap();
        let df = DirectorField::preset(DirectorPreset::Quadrant, g, 0.5, 0.5).unwrap();
        let pr = PoissonRobin::new(df.permittivity_tensor(), 1.3, CHOL).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (3.0 * x).sin() + y * y);
        let xi = BoundaryTrace::from_fn(g, |_, x, y| x - 2.0 * y);
        let psi = pr.solve(&f, &xi).unwrap();
        let tr = pr.boundary_trace(&psi, &xi).unwrap();
        let bflux: f64 = g.boundary_faces().map(|face| (xi.get(face) - 1.3 * tr.get(face)) * face.length(&g)).sum();
        assert!((domain_integral(&f) + bflux).abs() < 1e-11);
    }

    #[test]
    fn energy_equals_half_weak_form() {
        // with ξ = 0: field + boundary energy = ½ ψᵀAψ
        let g = Grid::unit(10).unwrap();
        let df = DirectorField::from_fn(g, 1.0, 0.8, |x, y| (x.sin(), y.cos() * 0.5)).unwrap();
        let pr = PoissonRobin::new(df.permittivity_tensor(), 2.0, CHOL).unwrap();
        let psi = ScalarField::from_fn(g, |x, y| x * x - y + x * y);
        let xi = BoundaryTrace::zeros(g);
        let e = pr.field_energy(&psi, &xi).unwrap() + pr.boundary_energy(&psi, &xi).unwrap();
        let q = 0.5 * crate::linalg::dot(&psi.values, &pr.operator().matvec(&psi.values));
        assert!((e - q).abs() < 1e-12 * q.abs().max(1.0));
    }

    #[test]
    fn cg_and_cholesky_agree() {
        let g = Grid::unit(16).unwrap();
        let df = DirectorField::preset(DirectorPreset::Vortex, g, 0.5, 0.5).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (x - 0.5) * (y - 0.3));
        let xi = BoundaryTrace::from_fn(g, |_, x, _| x);
        let a = solve_poisson_robin(&df.permittivity_tensor(), 1.0, &f, &xi, CHOL).unwrap();
        let cg = SolverKind::Cg { pre: crate::linalg::Preconditioner::None, tol: 1e-12, maxit: None };
        let b = solve_poisson_robin(&df.permittivity_tensor(), 1.0, &f, &xi, cg).unwrap();
        for (p, q) in a.values.iter().zip(&b.values) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = Grid::unit(8).unwrap();
        let t = TensorField::identity(g);
        assert!(matches!(PoissonRobin::new(t.clone(), 0.0, CHOL), Err(Error::Parameter(_))));
        let mut bad = t.clone();
        bad.a12[3] = 5.0;
        assert!(matches!(PoissonRobin::new(bad, 1.0, CHOL), Err(Error::Parameter(_))));
        let pr = PoissonRobin::new(t, 1.0, CHOL).unwrap();
        let short = ScalarField { grid: g, values: vec![0.0; 10] };
        assert!(matches!(pr.solve(&short, &BoundaryTrace::zeros(g)), Err(Error::Structural(_))));
    }

    #[test]
    fn smoother_preserves_constants_only_without_robin_loss() {
        let g = Grid::unit(12).unwrap();
        let pr = PoissonRobin::new(TensorField::identity(g), 1.0, CHOL).unwrap();
        let s0 = Smoother::new(&pr, 0.0, CHOL).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (5.0 * x).cos() * y);
        assert_eq!(s0.apply(&f).unwrap(), f);
        let s = Smoother::new(&pr, 1e-2, CHOL).unwrap();
        let sf = s.apply(&f).unwrap();
        assert!(sf.l2_norm() <= f.l2_norm());
        assert!(Smoother::new(&pr, -1.0, CHOL).is_err());
    }
}
