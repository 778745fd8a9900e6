//! The coupled time loop.
//!
//! Each step runs a Picard iteration on the charge/potential subsystem at
//! frozen velocity: smooth the charge, solve for the potential with the next
//! boundary datum, advance both species, repeat until the relative max-norm
//! increment of the charges is below tolerance. The velocity is advanced
//! afterwards with the converged charges and potential. A step that fails to
//! converge, or that violates a CFL bound, is retried as two half steps.

use std::path::Path;
use std::time::Instant;

use crate::anisotropy::{DirectorField, TensorField};
use crate::config::{gate_check, SimConfig, XiSpec};
use crate::energy::{ledger_row, Constants, EnergyInputs, EnergyLedger};
use crate::error::{Error, Result};
use crate::grid::{divergence_mac, BoundaryTrace, Grid, ScalarField};
use crate::linalg::SolverKind;
use crate::navier_stokes::{FlowState, NsParams, NsSolver};
use crate::nernst_planck::{total_mass, ChargePair, NpParams, NpStepper, Species};
use crate::output::{save_vtk, RunSummary};
use crate::poisson::{PoissonRobin, Smoother};

/// Hard abort thresholds; anything looser than the audited targets.
const MASS_ABORT: f64 = 1e-10;
const DIVERGENCE_ABORT: f64 = 1e-8;
/// At most this many negative excursions are kept individually.
const EXCURSION_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub t: f64,
    pub flow: FlowState,
    pub charges: ChargePair,
    pub psi: ScalarField,
    /// Smoothed charge `S_κ(c⁺ - c⁻)` consistent with `charges`.
    pub phi: ScalarField,
}

/// A negative concentration value seen after a step.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Excursion {
    pub step: usize,
    pub t: f64,
    pub species: &'static str,
    pub cell: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub picard_iterations: usize,
    /// Ratios of successive Picard increments.
    pub factors: Vec<f64>,
}

pub struct Simulation {
    pub config: SimConfig,
    pub grid: Grid,
    pub constants: Constants,
    pub director: DirectorField,
    pub mobility: TensorField,
    pub state: SimulationState,
    pub ledger: EnergyLedger,
    pub excursions: Vec<Excursion>,
    pub excursion_count: usize,
    pub reports: Vec<StepReport>,
    pub halvings: usize,
    pub max_divergence: f64,
    xi: XiSpec,
    kind: SolverKind,
    np_params: NpParams,
    ns_params: NsParams,
    poisson: PoissonRobin,
    smoother: Smoother,
    ns: Option<NsSolver>,
    mass0: (f64, f64),
    finished: bool,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        let (p, m) = config.initial_charges()?;
        Self::with_initial(config, p, m)
    }

    /// Starts from the given charges with the fluid at rest.
    pub fn with_initial(config: SimConfig, c_plus: ScalarField, c_minus: ScalarField) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        let director = config.director_field()?;
        gate_check(config.kappa, config.c_gate, director.w2inf_proxy())?;
        let mobility = director.mobility_tensor();
        let kind = config.solver_kind();
        let poisson = PoissonRobin::new(director.permittivity_tensor(), config.tau, kind)?;
        let smoother = Smoother::new(&poisson, config.kappa, kind)?;
        let charges = ChargePair::new(c_plus, c_minus)?;
        let xi = config.xi;
        let phi = smoother.apply(&charges.charge())?;
        let psi = poisson.solve(&phi.map(|x| config.gamma * x), &xi.trace(grid, 0.0))?;
        let constants = Constants {
            re: config.re,
            pe: config.pe,
            alpha: config.alpha,
            beta: config.beta,
            gamma: config.gamma,
            kappa: config.kappa,
        };
        let mass0 = total_mass(&charges);
        Ok(Self {
            np_params: NpParams::new(config.pe, config.beta, config.dt_safety)?,
            ns_params: NsParams::new(config.re, config.alpha, config.cfl)?,
            grid,
            constants,
            director,
            mobility,
            state: SimulationState { t: 0.0, flow: FlowState::at_rest(grid), charges, psi, phi },
            ledger: EnergyLedger::new(),
            excursions: Vec::new(),
            excursion_count: 0,
            reports: Vec::new(),
            halvings: 0,
            max_divergence: 0.0,
            xi,
            kind,
            poisson,
            smoother,
            ns: None,
            mass0,
            finished: false,
            config,
        })
    }

    pub fn xi_at(&self, t: f64) -> BoundaryTrace {
        self.xi.trace(self.grid, t)
    }

    /// Potential and smoothed charge for given charges and boundary datum.
    fn potential(&self, charges: &ChargePair, xi: &BoundaryTrace) -> Result<(ScalarField, ScalarField)> {
        let phi = self.smoother.apply(&charges.charge())?;
        let gamma = self.config.gamma;
        let psi = self.poisson.solve(&phi.map(|x| gamma * x), xi)?;
        Ok((psi, phi))
    }

    /// One coupled step of size `dt` from the current state, without
    /// committing it.
    pub fn coupled_step(&mut self, dt: f64) -> Result<(SimulationState, StepReport)> {
        let s = &self.state;
        let t1 = s.t + dt;
        let xi1 = self.xi_at(t1);
        let (tol, maxit) = (self.config.picard_tol, self.config.picard_maxit);
        let mut iterate = s.charges.clone();
        let mut factors = Vec::new();
        let mut last_inc: Option<f64> = None;
        let mut converged = None;
        for it in 1..=maxit {
            let (psi, _) = self.potential(&iterate, &xi1)?;
            let stepper = NpStepper::new(&self.mobility, &psi, dt, self.np_params, self.kind)?;
            let next = stepper.step(&s.charges, &s.flow.v)?;
            let inc = increment(&next, &iterate);
            if let Some(prev) = last_inc {
                if prev > 0.0 {
                    factors.push(inc / prev);
                }
            }
            last_inc = Some(inc);
            iterate = next;
            if inc <= tol {
                converged = Some(it);
                break;
            }
        }
        let Some(iterations) = converged else {
            return Err(Error::Picard {
                iterations: maxit,
                factor: factors.last().copied().unwrap_or(f64::NAN),
                increment: last_inc.unwrap_or(f64::NAN),
            });
        };
        let (psi, phi) = self.potential(&iterate, &xi1)?;
        if self.ns.as_ref().map_or(true, |ns| ns.dt != dt) {
            self.ns = Some(NsSolver::new(self.grid, dt, self.ns_params)?);
        }
        let flow = self.ns.as_ref().expect("solver just built").step(&s.flow, &iterate, &psi)?;
        Ok((
            SimulationState { t: t1, flow, charges: iterate, psi, phi },
            StepReport { dt, picard_iterations: iterations, factors },
        ))
    }

    /// Ledger row of the current state, with boundary work over `[t, t+dt]`.
    fn current_row(&self, dt: f64) -> Result<crate::energy::LedgerRow> {
        let s = &self.state;
        ledger_row(&EnergyInputs {
            t: s.t,
            v: &s.flow.v,
            charges: &s.charges,
            psi: &s.psi,
            phi: &s.phi,
            xi: &self.xi_at(s.t),
            xi_next: &self.xi_at(s.t + dt),
            dt,
            poisson: &self.poisson,
            lambda: &self.mobility,
            constants: self.constants,
        })
    }

    fn commit(&mut self, next: SimulationState, report: StepReport) -> Result<()> {
        let row = self.current_row(report.dt)?;
        self.ledger.push(row)?;
        let step = self.reports.len() + 1;
        for (species, name) in [(Species::Plus, "c_plus"), (Species::Minus, "c_minus")] {
            for (cell, &value) in next.charges.get(species).values.iter().enumerate() {
                if value < 0.0 {
                    self.excursion_count += 1;
                    if self.excursions.len() < EXCURSION_CAP {
                        self.excursions.push(Excursion { step, t: next.t, species: name, cell, value });
                    }
                }
            }
        }
        self.state = next;
        self.reports.push(report);
        self.check_invariants()
    }

    fn check_invariants(&mut self) -> Result<()> {
        let s = &self.state;
        if !(s.psi.is_finite() && s.flow.v.is_finite() && s.charges.c_plus.is_finite() && s.charges.c_minus.is_finite()) {
            return Err(Error::Invariant(format!("non-finite field at t = {}", s.t)));
        }
        let drift = self.mass_drift();
        if drift > MASS_ABORT {
            return Err(Error::Invariant(format!("relative mass drift {drift:.3e} at t = {}", s.t)));
        }
        let div = divergence_mac(&s.flow.v)?.max_abs();
        self.max_divergence = self.max_divergence.max(div);
        if div > DIVERGENCE_ABORT {
            return Err(Error::Invariant(format!("divergence {div:.3e} at t = {}", s.t)));
        }
        Ok(())
    }

    /// Largest relative per-species mass change from the initial state.
    pub fn mass_drift(&self) -> f64 {
        let (p, m) = total_mass(&self.state.charges);
        let rel = |a: f64, a0: f64| if a0 == 0.0 { a.abs() } else { ((a - a0) / a0).abs() };
        rel(p, self.mass0.0).max(rel(m, self.mass0.1))
    }

    /// Advances by `dt`, halving on Picard or CFL failure.
    pub fn advance(&mut self, dt: f64) -> Result<()> {
        self.advance_depth(dt, 0)
    }

    fn advance_depth(&mut self, dt: f64, depth: usize) -> Result<()> {
        match self.coupled_step(dt) {
            Ok((next, report)) => self.commit(next, report),
            Err(Error::Picard { .. } | Error::StepRejected { .. }) if depth < self.config.max_halvings => {
                self.halvings += 1;
                self.advance_depth(0.5 * dt, depth + 1)?;
                self.advance_depth(0.5 * dt, depth + 1)
            }
            Err(e) => Err(e),
        }
    }

    /// Runs the configured number of steps.
    pub fn run_steps(&mut self) -> Result<()> {
        for _ in 0..self.config.steps() {
            self.advance(self.config.dt)?;
        }
        self.finish()
    }

    /// Appends the ledger row of the final state.
    pub fn finish(&mut self) -> Result<()> {
        if !self.finished {
            let row = self.current_row(self.config.dt)?;
            self.ledger.push(row)?;
            self.finished = true;
        }
        Ok(())
    }

    pub fn summary(&self, wall_time: f64) -> RunSummary {
        let rows = &self.ledger.rows;
        let mean_kinetic = if rows.is_empty() {
            0.0
        } else {
            rows.iter().map(|r| r.kinetic).sum::<f64>() / rows.len() as f64 / self.constants.kinetic_weight()
        };
        RunSummary {
            steps: self.reports.len(),
            max_rho: if rows.is_empty() { 0.0 } else { self.ledger.max_residual() },
            mass_drift: rows
                .iter()
                .flat_map(|r| [rel_change(r.mass_plus, rows[0].mass_plus), rel_change(r.mass_minus, rows[0].mass_minus)])
                .fold(0.0, f64::max),
            min_c: rows.iter().map(|r| r.min_plus.min(r.min_minus)).fold(f64::INFINITY, f64::min),
            wall_time,
            max_divergence: self.max_divergence,
            negative_excursions: self.excursion_count,
            halvings: self.halvings,
            max_picard_iterations: self.reports.iter().map(|r| r.picard_iterations).max().unwrap_or(0),
            mean_kinetic,
        }
    }

    /// Largest measured Picard contraction factor.
    pub fn max_contraction(&self) -> f64 {
        self.reports.iter().flat_map(|r| r.factors.iter().copied()).fold(0.0, f64::max)
    }

    pub fn save_snapshot(&self, path: &Path) -> Result<()> {
        let s = &self.state;
        save_vtk(
            path,
            &format!("anisokin t = {:e}", s.t),
            &[("c_plus", &s.charges.c_plus), ("c_minus", &s.charges.c_minus), ("psi", &s.psi), ("pressure", &s.flow.p)],
            Some(&s.flow.v),
        )
    }

    pub fn save_excursions(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for e in &self.excursions {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn rel_change(a: f64, a0: f64) -> f64 {
    if a0 == 0.0 {
        a.abs()
    } else {
        ((a - a0) / a0).abs()
    }
}

/// `max|a - b| / max|a|` over both species.
fn increment(a: &ChargePair, b: &ChargePair) -> f64 {
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for s in Species::BOTH {
        for (x, y) in a.get(s).values.iter().zip(&b.get(s).values) {
            num = num.max((x - y).abs());
            den = den.max(x.abs());
        }
    }
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Everything a finished run produced.
pub struct RunOutcome {
    pub simulation: Simulation,
    pub summary: RunSummary,
}

/// Runs a configuration, writing `ledger.csv`, `summary.json`,
/// `excursions.csv` and VTK snapshots to the output directory. On failure the
/// last good state and the partial ledger are written before the error is
/// returned.
pub fn run(config: SimConfig) -> Result<RunOutcome> {
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let start = Instant::now();
    let mut sim = Simulation::new(config)?;
    let every = sim.config.vtk_every;
    if every > 0 {
        sim.save_snapshot(&dir.join("snapshot_00000.vtk"))?;
    }
    let dt = sim.config.dt;
    for n in 1..=sim.config.steps() {
        if let Err(e) = sim.advance(dt) {
            sim.save_snapshot(&dir.join("last_good.vtk"))?;
            sim.ledger.save(&dir.join("ledger.csv"))?;
            std::fs::write(dir.join("failure.txt"), format!("{e}\nt = {}\n", sim.state.t))?;
            return Err(e);
        }
        if every > 0 && n % every == 0 {
            sim.save_snapshot(&dir.join(format!("snapshot_{n:05}.vtk")))?;
        }
    }
    sim.finish()?;
    let summary = sim.summary(start.elapsed().as_secs_f64());
    sim.ledger.save(&dir.join("ledger.csv"))?;
    sim.save_excursions(&dir.join("excursions.csv"))?;
    summary.save(&dir.join("summary.json"))?;
    Ok(RunOutcome { simulation: sim, summary })
}

/// Per-step copy of the fields compared by the sweep.
struct Trajectory {
    times: Vec<f64>,
    dts: Vec<f64>,
    states: Vec<SimulationState>,
}

fn trajectory(config: SimConfig) -> Result<Trajectory> {
    let mut sim = Simulation::new(config)?;
    let mut t = Trajectory { times: Vec::new(), dts: Vec::new(), states: Vec::new() };
    for _ in 0..sim.config.steps() {
        let before = sim.reports.len();
        sim.advance(sim.config.dt)?;
        for r in &sim.reports[before..] {
            t.dts.push(r.dt);
        }
        t.times.push(sim.state.t);
        t.states.push(sim.state.clone());
    }
    if t.dts.len() != t.states.len() {
        return Err(Error::Invariant("sweep runs must not halve their time step".into()));
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SweepRow {
    pub kappa: f64,
    pub dist_v: f64,
    pub dist_c_plus: f64,
    pub dist_c_minus: f64,
    pub dist_psi: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `ln total` against `ln κ` over `κ > 0`.
    pub rate: Option<f64>,
    /// Distances strictly decrease with decreasing `κ`.
    pub monotone: bool,
}

/// Runs the configuration at each `κ` and at `κ = 0`, reporting
/// `L²(Ω × (0, T))` distances to the unregularized run.
pub fn kappa_sweep(config: &SimConfig, kappas: &[f64]) -> Result<SweepReport> {
    let proxy = config.director_field()?.w2inf_proxy();
    for &k in kappas {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::Parameter(format!("kappa must be non-negative, got {k}")));
        }
        gate_check(k, config.c_gate, proxy)?;
    }
    let reference = trajectory(SimConfig { kappa: 0.0, ..config.clone() })?;
    let area = config.grid()?.cell_area();
    let mut rows = Vec::new();
    for &kappa in kappas {
        let run = trajectory(SimConfig { kappa, ..config.clone() })?;
        if run.times != reference.times {
            return Err(Error::Invariant(format!("time levels differ between kappa = {kappa} and the reference")));
        }
        let mut acc = [0.0; 4];
        for ((a, b), dt) in run.states.iter().zip(&reference.states).zip(&run.dts) {
            let sq = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() * area * dt;
            acc[0] += sq(&a.flow.v.u, &b.flow.v.u) + sq(&a.flow.v.v, &b.flow.v.v);
            acc[1] += sq(&a.charges.c_plus.values, &b.charges.c_plus.values);
            acc[2] += sq(&a.charges.c_minus.values, &b.charges.c_minus.values);
            acc[3] += sq(&a.psi.values, &b.psi.values);
        }
        rows.push(SweepRow {
            kappa,
            dist_v: acc[0].sqrt(),
            dist_c_plus: acc[1].sqrt(),
            dist_c_minus: acc[2].sqrt(),
            dist_psi: acc[3].sqrt(),
            total: acc.iter().sum::<f64>().sqrt(),
        });
    }
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.kappa.total_cmp(&a.kappa));
    let monotone = sorted.windows(2).all(|w| w[1].total < w[0].total);
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.kappa > 0.0 && r.total > 0.0).map(|r| (r.kappa.ln(), r.total.ln())).collect();
    let rate = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    Ok(SweepReport { rows, rate, monotone })
}
