//! Run configuration: a line-based `section.key = value` file.
//!
//! Blank lines and `#` comments are ignored, unknown or repeated keys are
//! rejected with their line number, and every key has a default, so an empty
//! file is a complete configuration. [`SimConfig::serialize`] writes every key
//! and parses back to the same value.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::anisotropy::{DirectorField, DirectorPreset};
use crate::error::{Error, Result};
use crate::grid::{BoundaryFace, BoundaryTrace, Grid, ScalarField};
use crate::linalg::{Preconditioner, SolverKind};

/// Largest admissible `κ C (1 + ‖d‖²)`.
pub const GATE_BOUND: f64 = 1.0 / 32.0;

/// Stability gate for the regularized run: `κ C (1 + proxy²) ≤ 1/32`.
/// `κ = 0` always passes.
pub fn gate_check(kappa: f64, c_gate: f64, proxy: f64) -> Result<()> {
    if kappa == 0.0 {
        return Ok(());
    }
    let value = kappa * c_gate * (1.0 + proxy * proxy);
    if value <= GATE_BOUND {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "kappa = {kappa} refused: kappa * C_gate * (1 + proxy^2) = {value} exceeds 1/32 (C_gate = {c_gate}, proxy = {proxy})"
        )))
    }
}

/// Time dependence of the boundary datum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Waveform {
    Constant,
    Sinusoid,
}

/// Spatial shape of the boundary datum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Uniform,
    /// `cos πx/L`: `+1` on the left wall, `-1` on the right.
    LeftRightAntisymmetric,
}

/// Initial charge distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChargePreset {
    /// `c± = background`.
    Uniform,
    /// Gaussian excess of `c⁺` at `(0.3, 0.5)` and of `c⁻` at `(0.7, 0.5)`
    /// (relative coordinates), amplitude `amplitude`, width `width`.
    GaussianBlobPair,
    /// Excess `amplitude` of `c⁺` in the left half and of `c⁻` in the right
    /// half, smoothed over `width` by a tanh profile.
    SeparatedSlabs,
}

macro_rules! named_enum {
    ($t:ty, $($v:path => $s:literal),+) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($v => $s),+ })
            }
        }
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($s => Ok($v),)+
                    _ => Err(format!("expected one of: {}", [$($s),+].join(", "))),
                }
            }
        }
    };
}

named_enum!(Waveform, Waveform::Constant => "constant", Waveform::Sinusoid => "sinusoid");
named_enum!(Profile, Profile::Uniform => "uniform", Profile::LeftRightAntisymmetric => "left_right_antisymmetric");
named_enum!(
    ChargePreset,
    ChargePreset::Uniform => "uniform",
    ChargePreset::GaussianBlobPair => "gaussian_blob_pair",
    ChargePreset::SeparatedSlabs => "separated_slabs"
);

/// Linear solver choice for the Poisson and smoothing systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearSolver {
    Cholesky,
    Cg,
    Pcg,
}

named_enum!(LinearSolver, LinearSolver::Cholesky => "cholesky", LinearSolver::Cg => "cg", LinearSolver::Pcg => "pcg");

/// Boundary datum `ξ(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiSpec {
    pub waveform: Waveform,
    pub amplitude: f64,
    pub frequency: f64,
    pub profile: Profile,
}

impl XiSpec {
    pub fn value(&self, x: f64, lx: f64, t: f64) -> f64 {
        let shape = match self.profile {
            Profile::Uniform => 1.0,
            Profile::LeftRightAntisymmetric => (PI * x / lx).cos(),
        };
        let time = match self.waveform {
            Waveform::Constant => 1.0,
            Waveform::Sinusoid => (2.0 * PI * self.frequency * t).sin(),
        };
        self.amplitude * shape * time
    }

    /// `ξ(t)` sampled at boundary face midpoints.
    pub fn trace(&self, grid: Grid, t: f64) -> BoundaryTrace {
        BoundaryTrace::from_fn(grid, |_: BoundaryFace, x, _| self.value(x, grid.lx, t))
    }

    pub fn negated(&self) -> Self {
        Self { amplitude: -self.amplitude, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub t_end: f64,
    pub dt: f64,
    pub re: f64,
    pub alpha: f64,
    pub cfl: f64,
    pub pe: f64,
    pub beta: f64,
    pub dt_safety: f64,
    pub gamma: f64,
    pub solver: LinearSolver,
    pub solver_tol: f64,
    /// `0` means `10 · cells`.
    pub solver_maxit: usize,
    pub tau: f64,
    pub xi: XiSpec,
    pub director: DirectorPreset,
    pub lambda: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub c_gate: f64,
    pub charges: ChargePreset,
    pub background: f64,
    pub ic_amplitude: f64,
    pub ic_width: f64,
    pub picard_tol: f64,
    pub picard_maxit: usize,
    /// How often a step may halve its `dt` after a Picard or CFL failure.
    pub max_halvings: usize,
    pub output_dir: PathBuf,
    /// Snapshot cadence in steps; `0` disables snapshots.
    pub vtk_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            nx: 32,
            ny: 32,
            lx: 1.0,
            ly: 1.0,
            t_end: 0.1,
            dt: 1e-3,
            re: 1.0,
            alpha: 1.0,
            cfl: 0.9,
            pe: 1.0,
            beta: 1.0,
            dt_safety: 0.9,
            gamma: 1.0,
            solver: LinearSolver::Cholesky,
            solver_tol: 1e-10,
            solver_maxit: 0,
            tau: 1.0,
            xi: XiSpec { waveform: Waveform::Constant, amplitude: 0.0, frequency: 1.0, profile: Profile::Uniform },
            director: DirectorPreset::Quadrant,
            lambda: 0.5,
            epsilon: 0.5,
            kappa: 0.0,
            c_gate: 1.0,
            charges: ChargePreset::Uniform,
            background: 1.0,
            ic_amplitude: 0.5,
            ic_width: 0.1,
            picard_tol: 1e-8,
            picard_maxit: 50,
            max_halvings: 6,
            output_dir: PathBuf::from("out"),
            vtk_every: 0,
        }
    }
}

/// Every key, in serialization order.
pub const KEYS: [&str; 36] = [
    "grid.nx",
    "grid.ny",
    "grid.lx",
    "grid.ly",
    "time.T",
    "time.dt",
    "ns.Re",
    "ns.alpha",
    "ns.cfl",
    "np.Pe",
    "np.beta",
    "np.dt_safety",
    "poisson.gamma",
    "poisson.solver",
    "poisson.tol",
    "poisson.maxit",
    "bc.tau",
    "bc.xi.waveform",
    "bc.xi.amplitude",
    "bc.xi.frequency",
    "bc.xi.profile",
    "director.preset",
    "director.lambda",
    "director.epsilon",
    "reg.kappa",
    "reg.C_gate",
    "ic.charges",
    "ic.background",
    "ic.amplitude",
    "ic.width",
    "picard.tol",
    "picard.maxit",
    "picard.max_halvings",
    "output.dir",
    "output.vtk_every",
    "output.format_version",
];

fn parse_value<T: FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("cannot parse '{value}': {e}"))
}

impl SimConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.nx, self.ny, self.lx, self.ly)
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    pub fn solver_kind(&self) -> SolverKind {
        let maxit = (self.solver_maxit > 0).then_some(self.solver_maxit);
        match self.solver {
            LinearSolver::Cholesky => SolverKind::Cholesky,
            LinearSolver::Cg => SolverKind::Cg { pre: Preconditioner::None, tol: self.solver_tol, maxit },
            LinearSolver::Pcg => SolverKind::Cg { pre: Preconditioner::Jacobi, tol: self.solver_tol, maxit },
        }
    }

    pub fn director_field(&self) -> Result<DirectorField> {
        DirectorField::preset(self.director, self.grid()?, self.lambda, self.epsilon)
    }

    /// Initial `(c⁺, c⁻)`.
    pub fn initial_charges(&self) -> Result<(ScalarField, ScalarField)> {
        let g = self.grid()?;
        let (bg, amp, w) = (self.background, self.ic_amplitude, self.ic_width);
        let (lx, ly) = (self.lx, self.ly);
        Ok(match self.charges {
            ChargePreset::Uniform => (ScalarField::constant(g, bg), ScalarField::constant(g, bg)),
            ChargePreset::GaussianBlobPair => {
                let blob = move |cx: f64| {
                    move |x: f64, y: f64| {
                        let r2 = (x / lx - cx).powi(2) + (y / ly - 0.5).powi(2);
                        bg + amp * (-r2 / (w * w)).exp()
                    }
                };
                (ScalarField::from_fn(g, blob(0.3)), ScalarField::from_fn(g, blob(0.7)))
            }
            ChargePreset::SeparatedSlabs => {
                let left = move |x: f64, _: f64| bg + amp * 0.5 * (1.0 - ((x / lx - 0.5) / w).tanh());
                let right = move |x: f64, _: f64| bg + amp * 0.5 * (1.0 + ((x / lx - 0.5) / w).tanh());
                (ScalarField::from_fn(g, left), ScalarField::from_fn(g, right))
            }
        })
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "grid.nx" => self.nx = parse_value(value)?,
            "grid.ny" => self.ny = parse_value(value)?,
            "grid.lx" => self.lx = parse_value(value)?,
            "grid.ly" => self.ly = parse_value(value)?,
            "time.T" => self.t_end = parse_value(value)?,
            "time.dt" => self.dt = parse_value(value)?,
            "ns.Re" => self.re = parse_value(value)?,
            "ns.alpha" => self.alpha = parse_value(value)?,
            "ns.cfl" => self.cfl = parse_value(value)?,
            "np.Pe" => self.pe = parse_value(value)?,
            "np.beta" => self.beta = parse_value(value)?,
            "np.dt_safety" => self.dt_safety = parse_value(value)?,
            "poisson.gamma" => self.gamma = parse_value(value)?,
            "poisson.solver" => self.solver = parse_value(value)?,
            "poisson.tol" => self.solver_tol = parse_value(value)?,
            "poisson.maxit" => self.solver_maxit = parse_value(value)?,
            "bc.tau" => self.tau = parse_value(value)?,
            "bc.xi.waveform" => self.xi.waveform = parse_value(value)?,
            "bc.xi.amplitude" => self.xi.amplitude = parse_value(value)?,
            "bc.xi.frequency" => self.xi.frequency = parse_value(value)?,
            "bc.xi.profile" => self.xi.profile = parse_value(value)?,
            "director.preset" => self.director = parse_value(value)?,
            "director.lambda" => self.lambda = parse_value(value)?,
            "director.epsilon" => self.epsilon = parse_value(value)?,
            "reg.kappa" => self.kappa = parse_value(value)?,
            "reg.C_gate" => self.c_gate = parse_value(value)?,
            "ic.charges" => self.charges = parse_value(value)?,
            "ic.background" => self.background = parse_value(value)?,
            "ic.amplitude" => self.ic_amplitude = parse_value(value)?,
            "ic.width" => self.ic_width = parse_value(value)?,
            "picard.tol" => self.picard_tol = parse_value(value)?,
            "picard.maxit" => self.picard_maxit = parse_value(value)?,
            "picard.max_halvings" => self.max_halvings = parse_value(value)?,
            "output.dir" => self.output_dir = PathBuf::from(value),
            "output.vtk_every" => self.vtk_every = parse_value(value)?,
            "output.format_version" => {
                if value != "1" {
                    return Err(format!("unsupported format version '{value}'"));
                }
            }
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let v: Vec<String> = vec![
            self.nx.to_string(),
            self.ny.to_string(),
            self.lx.to_string(),
            self.ly.to_string(),
            self.t_end.to_string(),
            self.dt.to_string(),
            self.re.to_string(),
            self.alpha.to_string(),
            self.cfl.to_string(),
            self.pe.to_string(),
            self.beta.to_string(),
            self.dt_safety.to_string(),
            self.gamma.to_string(),
            self.solver.to_string(),
            self.solver_tol.to_string(),
            self.solver_maxit.to_string(),
            self.tau.to_string(),
            self.xi.waveform.to_string(),
            self.xi.amplitude.to_string(),
            self.xi.frequency.to_string(),
            self.xi.profile.to_string(),
            self.director.to_string(),
            self.lambda.to_string(),
            self.epsilon.to_string(),
            self.kappa.to_string(),
            self.c_gate.to_string(),
            self.charges.to_string(),
            self.background.to_string(),
            self.ic_amplitude.to_string(),
            self.ic_width.to_string(),
            self.picard_tol.to_string(),
            self.picard_maxit.to_string(),
            self.max_halvings.to_string(),
            self.output_dir.display().to_string(),
            self.vtk_every.to_string(),
            "1".to_string(),
        ];
        KEYS.into_iter().zip(v).collect()
    }

    /// Every key as `key = value`, one per line.
    pub fn serialize(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Config { line, message: format!("expected 'key = value', got '{content}'") });
            };
            let (key, value) = (key.trim(), value.trim());
            if let Some(first) = seen.insert(key.to_string(), line) {
                return Err(Error::Config { line, message: format!("key '{key}' already set on line {first}") });
            }
            cfg.set(key, value).map_err(|message| Error::Config { line, message: format!("{key}: {message}") })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config { line: 0, message: format!("cannot read {}: {e}", path.display()) })?;
        Self::parse(&text)
    }

    /// Checks every constraint; errors name the violated invariant.
    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| Err(Error::Config { line: 0, message });
        let positive = [
            ("grid.lx", self.lx),
            ("grid.ly", self.ly),
            ("time.dt", self.dt),
            ("ns.Re", self.re),
            ("ns.alpha", self.alpha),
            ("ns.cfl", self.cfl),
            ("np.Pe", self.pe),
            ("np.beta", self.beta),
            ("np.dt_safety", self.dt_safety),
            ("poisson.gamma", self.gamma),
            ("poisson.tol", self.solver_tol),
            ("bc.tau", self.tau),
            ("director.lambda", self.lambda),
            ("director.epsilon", self.epsilon),
            ("reg.C_gate", self.c_gate),
            ("ic.width", self.ic_width),
            ("picard.tol", self.picard_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        let non_negative = [
            ("time.T", self.t_end),
            ("reg.kappa", self.kappa),
            ("ic.background", self.background),
            ("ic.amplitude", self.ic_amplitude),
            ("bc.xi.frequency", self.xi.frequency),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !self.xi.amplitude.is_finite() {
            return bad("bc.xi.amplitude must be finite".into());
        }
        for (name, v) in [("ns.cfl", self.cfl), ("np.dt_safety", self.dt_safety)] {
            if v > 1.0 {
                return bad(format!("{name} must not exceed 1, got {v}"));
            }
        }
        if self.nx < 4 || self.ny < 4 {
            return bad(format!("grid must be at least 4x4, got {}x{}", self.nx, self.ny));
        }
        if self.picard_maxit == 0 {
            return bad("picard.maxit must be at least 1".into());
        }
        if self.kappa > 0.0 {
            let proxy = self.director_field()?.w2inf_proxy();
            gate_check(self.kappa, self.c_gate, proxy).map_err(|e| Error::Config { line: 0, message: e.to_string() })?;
        }
        Ok(())
    }
}
