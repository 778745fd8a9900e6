//! Dense laboratory for the resolvent regularizers `R_κ = (I + κA)^{-1}`,
//! `R_κ^{1/2} = (I + κA^{1/2})^{-1}` and `S_κ`, built from small discrete
//! Stokes and anisotropic Robin operators.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::anisotropy::{DirectorField, DirectorPreset};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::SolverKind;
use crate::navier_stokes::VelocityLayout;
use crate::poisson::PoissonRobin;

/// Largest number of unknowns a dense operator may have.
pub const DENSE_CAP: usize = 1024;

pub const SUITE_KAPPAS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Stokes,
    RobinLaplacian,
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OperatorKind::Stokes => "stokes",
            OperatorKind::RobinLaplacian => "robin",
        })
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stokes" => Ok(OperatorKind::Stokes),
            "robin" | "robin_laplacian" => Ok(OperatorKind::RobinLaplacian),
            _ => Err(Error::Parameter(format!("unknown operator kind '{s}'"))),
        }
    }
}

/// A symmetric positive semidefinite matrix with its eigendecomposition.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub kind: OperatorKind,
    pub matrix: DMatrix<f64>,
    /// Orthogonal projector onto the admissible subspace (identity for the
    /// Robin kind, the discrete Leray projector for Stokes).
    pub projector: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

impl DenseOperator {
    fn from_parts(kind: OperatorKind, matrix: DMatrix<f64>, projector: DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(matrix.clone());
        Self { kind, matrix, projector, eigenvalues: eig.eigenvalues, eigenvectors: eig.eigenvectors }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// Wraps an arbitrary symmetric matrix (identity projector).
    pub fn from_symmetric(kind: OperatorKind, matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() > DENSE_CAP {
            return Err(Error::Parameter(format!("dense operator must be square with at most {DENSE_CAP} rows")));
        }
        let n = matrix.nrows();
        Ok(Self::from_parts(kind, symmetrize(&matrix), DMatrix::identity(n, n)))
    }

    /// Eigenvalues with the index of their eigenvector column, restricted to
    /// the admissible subspace.
    pub fn admissible_spectrum(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = (0..self.n())
            .filter(|&k| {
                let e = self.eigenvectors.column(k);
                (&self.projector * e).norm() > 0.5
            })
            .map(|k| (self.eigenvalues[k], k))
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.projector * x
    }
}

/// `P(-Δ_h)P` on the interior velocity unknowns, `P` the orthogonal projector
/// onto the kernel of the MAC divergence.
pub fn build_dense_stokes(grid: Grid) -> Result<DenseOperator> {
    let lay = VelocityLayout { grid };
    let n = lay.len();
    if n > DENSE_CAP {
        return Err(Error::Parameter(format!("dense Stokes operator limited to {DENSE_CAP} velocity unknowns, grid needs {n}")));
    }
    let lap = lay.neg_laplacian().to_dense() / grid.cell_area();
    let mut d = DMatrix::<f64>::zeros(grid.n_cells(), n);
    for (c, k, s) in lay.divergence_entries() {
        d[(c, k)] += s;
    }
    // P = I - Dᵀ(DDᵀ)⁺D; DDᵀ is the Neumann Laplacian with a constant kernel.
    let ddt = SymmetricEigen::new(&d * d.transpose());
    let cutoff = 1e-10 * ddt.eigenvalues.amax();
    let inv = DMatrix::from_diagonal(&ddt.eigenvalues.map(|l| if l > cutoff { 1.0 / l } else { 0.0 }));
    let pinv = &ddt.eigenvectors * inv * ddt.eigenvectors.transpose();
    let p = symmetrize(&(DMatrix::identity(n, n) - d.transpose() * pinv * &d));
    let a = symmetrize(&(&p * lap * &p));
    Ok(DenseOperator::from_parts(OperatorKind::Stokes, a, p))
}

/// `-Δ_E` with the homogeneous Robin closure, from the sparse assembly.
pub fn build_dense_robin(df: &DirectorField, tau: f64) -> Result<DenseOperator> {
    let g = df.grid;
    if g.n_cells() > DENSE_CAP {
        return Err(Error::Parameter(format!("dense Robin operator limited to {DENSE_CAP} cells, grid has {}", g.n_cells())));
    }
    let pr = PoissonRobin::new(df.permittivity_tensor(), tau, SolverKind::Cholesky)?;
    let a = pr.operator().to_dense() / g.cell_area();
    let n = a.nrows();
    Ok(DenseOperator::from_parts(OperatorKind::RobinLaplacian, symmetrize(&a), DMatrix::identity(n, n)))
}

/// `A^{1/2}` by functional calculus on the cached eigenbasis.
pub fn operator_sqrt(a: &DenseOperator) -> Result<DenseOperator> {
    let min = a.eigenvalues.min();
    if min < -1e-10 {
        return Err(Error::Spectral(format!("operator has negative eigenvalue {min:.3e}")));
    }
    let roots = a.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &a.eigenvectors;
    let m = symmetrize(&(v * DMatrix::from_diagonal(&roots) * v.transpose()));
    Ok(DenseOperator { kind: a.kind, matrix: m, projector: a.projector.clone(), eigenvalues: roots, eigenvectors: v.clone() })
}

/// Solves `(I + κA) y = x`.
pub fn resolvent_apply(a: &DenseOperator, x: &DVector<f64>, kappa: f64) -> Result<DVector<f64>> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::Parameter(format!("kappa must be non-negative, got {kappa}")));
    }
    if x.len() != a.n() {
        return Err(Error::Structural(format!("vector of length {} for operator of size {}", x.len(), a.n())));
    }
    if kappa == 0.0 {
        return Ok(x.clone());
    }
    let n = a.n();
    let m = DMatrix::identity(n, n) + &a.matrix * kappa;
    let chol = m.cholesky().ok_or_else(|| Error::Structural("resolvent system is singular".into()))?;
    Ok(chol.solve(x))
}

/// `(I + κA)^{-1}` as a matrix, via the eigenbasis.
pub fn resolvent_matrix(a: &DenseOperator, kappa: f64) -> DMatrix<f64> {
    let v = &a.eigenvectors;
    let d = a.eigenvalues.map(|l| 1.0 / (1.0 + kappa * l));
    v * DMatrix::from_diagonal(&d) * v.transpose()
}

/// Per-κ measurements of the regularization suite.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct KappaRow {
    pub kappa: f64,
    pub mean_residual: f64,
    pub max_residual: f64,
    /// Largest sampled `‖R_κx‖ / ‖x‖`.
    pub operator_norm: f64,
    /// Largest sampled `‖A R_κx‖ / ((1 + 1/κ)‖x‖)`.
    pub growth_ratio: f64,
    /// Largest `|⟨φ, R_κx - x⟩|` over random `φ`, `x`.
    pub dual_pairing: f64,
    pub smooth_residual: f64,
    /// Closed form `κμ/(1 + κμ)` of the smooth residual, `μ` its eigenvalue.
    pub smooth_oracle: f64,
    /// `max ‖A R_κx - (x - R_κx)/κ‖ / ‖x‖`.
    pub identity_defect: f64,
    /// `‖R_κ^{1/2} - (R_κ^{1/2})ᵀ‖_max`.
    pub sqrt_symmetry_defect: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ResolventReport {
    pub kind: OperatorKind,
    pub n: usize,
    pub trials: usize,
    pub rows: Vec<KappaRow>,
    /// Fitted constant `C` of `‖A R_κx‖ ≤ C(1 + 1/κ)‖x‖`.
    pub growth_constant: f64,
    /// Least-squares slope of log residual against log κ for a smooth `x`.
    pub smooth_slope: f64,
    /// Whether every trial's residual decreased strictly with κ.
    pub monotone: bool,
    pub failures: Vec<String>,
}

impl serde::Serialize for OperatorKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl ResolventReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "kind",
            "kappa",
            "mean_residual",
            "max_residual",
            "operator_norm",
            "growth_ratio",
            "dual_pairing",
            "smooth_residual",
            "smooth_oracle",
            "identity_defect",
            "sqrt_symmetry_defect",
            "growth_constant",
            "smooth_slope",
            "monotone",
        ])?;
        for r in &self.rows {
            out.write_record([
                self.kind.to_string(),
                format!("{:e}", r.kappa),
                format!("{:e}", r.mean_residual),
                format!("{:e}", r.max_residual),
                format!("{:.15}", r.operator_norm),
                format!("{:e}", r.growth_ratio),
                format!("{:e}", r.dual_pairing),
                format!("{:e}", r.smooth_residual),
                format!("{:e}", r.smooth_oracle),
                format!("{:e}", r.identity_defect),
                format!("{:e}", r.sqrt_symmetry_defect),
                format!("{:e}", self.growth_constant),
                format!("{:.6}", self.smooth_slope),
                self.monotone.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Runs the resolvent property suite over `kappas` (descending) with
/// `trials` seeded random vectors projected onto the admissible subspace.
/// The smooth test vector is the lowest admissible eigenmode.
pub fn resolvent_suite(a: &DenseOperator, kappas: &[f64], trials: usize, seed: u64) -> Result<ResolventReport> {
    if trials < 10 {
        return Err(Error::Parameter(format!("the suite needs at least 10 trials, got {trials}")));
    }
    if kappas.windows(2).any(|w| w[1] >= w[0]) || kappas.iter().any(|&k| k <= 0.0) {
        return Err(Error::Parameter("kappas must be positive and strictly decreasing".into()));
    }
    let n = a.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<DVector<f64>> = (0..trials).map(|_| a.project(&random_vector(&mut rng, n))).collect();
    let phis: Vec<DVector<f64>> = (0..trials).map(|_| random_vector(&mut rng, n)).collect();
    let spectrum = a.admissible_spectrum();
    let (mu, smooth_col) = spectrum.iter().copied().find(|(l, _)| *l > 1e-8).unwrap_or((0.0, 0));
    let smooth = a.eigenvectors.column(smooth_col).into_owned();
    let sqrt = operator_sqrt(a)?;

    let mut rows = Vec::with_capacity(kappas.len());
    let mut residuals: Vec<Vec<f64>> = vec![Vec::new(); trials];
    for &kappa in kappas {
        let mut row = KappaRow {
            kappa,
            mean_residual: 0.0,
            max_residual: 0.0,
            operator_norm: 0.0,
            growth_ratio: 0.0,
            dual_pairing: 0.0,
            smooth_residual: 0.0,
            smooth_oracle: kappa * mu / (1.0 + kappa * mu),
            identity_defect: 0.0,
            sqrt_symmetry_defect: 0.0,
        };
        for (t, x) in xs.iter().enumerate() {
            let y = resolvent_apply(a, x, kappa)?;
            let xn = x.norm();
            let res = (&y - x).norm();
            residuals[t].push(res);
            row.mean_residual += res / trials as f64;
            row.max_residual = row.max_residual.max(res);
            row.operator_norm = row.operator_norm.max(y.norm() / xn);
            let ay = &a.matrix * &y;
            row.growth_ratio = row.growth_ratio.max(ay.norm() / ((1.0 + 1.0 / kappa) * xn));
            row.identity_defect = row.identity_defect.max((&ay - (x - &y) / kappa).norm() / xn);
            row.dual_pairing = row.dual_pairing.max(phis[t].dot(&(&y - x)).abs());
        }
        row.smooth_residual = (resolvent_apply(a, &smooth, kappa)? - &smooth).norm();
        let rh = resolvent_matrix(&sqrt, kappa);
        row.sqrt_symmetry_defect = (&rh - rh.transpose()).amax();
        rows.push(row);
    }

    let monotone = residuals.iter().all(|r| r.windows(2).all(|w| w[1] < w[0]));
    let growth_constant = rows.iter().map(|r| r.growth_ratio).fold(0.0, f64::max);
    let lk: Vec<f64> = kappas.iter().map(|k| k.ln()).collect();
    let lr: Vec<f64> = rows.iter().map(|r| r.smooth_residual.ln()).collect();
    let smooth_slope = fit_slope(&lk, &lr);

    let mut failures = Vec::new();
    if !monotone {
        failures.push("residual ‖R_κx - x‖ not strictly decreasing in κ".to_string());
    }
    if rows.iter().any(|r| r.operator_norm > 1.0 + 1e-10) {
        failures.push("sampled operator norm exceeds 1 + 1e-10".to_string());
    }
    if !rows.windows(2).all(|w| w[1].dual_pairing <= w[0].dual_pairing) {
        failures.push("dual pairings do not decrease with κ".to_string());
    }
    if !growth_constant.is_finite() {
        failures.push("growth constant is not finite".to_string());
    }
    Ok(ResolventReport { kind: a.kind, n, trials, rows, growth_constant, smooth_slope, monotone, failures })
}

/// Spectral norm of `S_κ = (I - κΔ_E)^{-1}` for a director preset.
pub fn smoother_norm(preset: DirectorPreset, grid: Grid, epsilon: f64, tau: f64, kappa: f64) -> Result<f64> {
    let df = DirectorField::preset(preset, grid, epsilon, epsilon)?;
    let a = build_dense_robin(&df, tau)?;
    Ok(a.eigenvalues.iter().map(|l| 1.0 / (1.0 + kappa * l)).fold(0.0, f64::max))
}

/// Runs the suite for a kind on an `n×n` unit grid with the given preset.
pub fn suite_for(kind: OperatorKind, n: usize, preset: DirectorPreset, trials: usize, seed: u64) -> Result<ResolventReport> {
    let g = Grid::unit(n)?;
    let a = match kind {
        OperatorKind::Stokes => build_dense_stokes(g)?,
        OperatorKind::RobinLaplacian => build_dense_robin(&DirectorField::preset(preset, g, 0.5, 0.5)?, 1.0)?,
    };
    resolvent_suite(&a, &SUITE_KAPPAS, trials, seed)
}
