//! Tangential calculus on closed parametric curves.
//!
//! A curve is sampled at `θ_k = 2πk/m`; every operator reduces to a periodic
//! parametric derivative `∂θ` followed by contraction with the frame:
//! `∇_Γ f = g⁻¹ (∂θ f) τ`, `∇_Γ·v = g⁻¹ (∂θ v)·τ`, curvature `∇_Γ·n`.
//! This module is independent of the rectangular solver grid.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Parametric differentiation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Differencing {
    /// Fourth-order central differences.
    Central4,
    /// FFT-based differentiation, exact for trigonometric polynomials.
    Spectral,
}

impl Differencing {
    /// Nominal convergence order (`None` for spectral).
    pub fn order(self) -> Option<f64> {
        match self {
            Differencing::Central4 => Some(4.0),
            Differencing::Spectral => None,
        }
    }
}

impl fmt::Display for Differencing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Differencing::Central4 => "central4",
            Differencing::Spectral => "spectral",
        })
    }
}

impl FromStr for Differencing {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "central4" | "central" => Ok(Differencing::Central4),
            "spectral" => Ok(Differencing::Spectral),
            _ => Err(Error::Parameter(format!("unknown differencing '{s}'"))),
        }
    }
}

/// Periodic derivative `∂θ` of samples on `θ_k = 2πk/m`.
pub fn derivative(values: &[f64], method: Differencing) -> Vec<f64> {
    let m = values.len();
    let h = 2.0 * PI / m as f64;
    match method {
        Differencing::Central4 => (0..m)
            .map(|k| {
                let at = |o: isize| values[(k as isize + o).rem_euclid(m as isize) as usize];
                (8.0 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12.0 * h)
            })
            .collect(),
        Differencing::Spectral => {
            let mut planner = FftPlanner::<f64>::new();
            let mut buf: Vec<Complex<f64>> = values.iter().map(|&x| Complex::new(x, 0.0)).collect();
            planner.plan_fft_forward(m).process(&mut buf);
            for (k, z) in buf.iter_mut().enumerate() {
                let wave = if k < m / 2 {
                    k as f64
                } else if m % 2 == 0 && k == m / 2 {
                    0.0
                } else {
                    k as f64 - m as f64
                };
                *z *= Complex::new(0.0, wave);
            }
            planner.plan_fft_inverse(m).process(&mut buf);
            buf.iter().map(|z| z.re / m as f64).collect()
        }
    }
}

/// Closed curve sampled at uniform parameter values, traversed
/// counterclockwise so that `n = (τ_y, -τ_x)/|τ|` points outward.
#[derive(Debug, Clone)]
pub struct ParametricCurve {
    pub m: usize,
    pub theta: Vec<f64>,
    pub position: Vec<Vec2>,
    pub tangent: Vec<Vec2>,
    pub normal: Vec<Vec2>,
    /// First fundamental form `g = |τ|²`.
    pub metric: Vec<f64>,
}

impl ParametricCurve {
    /// Builds a curve from its parametrization and analytic derivative.
    pub fn new(m: usize, position: impl Fn(f64) -> Vec2, tangent: impl Fn(f64) -> Vec2) -> Result<Self> {
        if m < 8 {
            return Err(Error::Parameter(format!("need at least 8 samples, got {m}")));
        }
        let theta: Vec<f64> = (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect();
        let position: Vec<Vec2> = theta.iter().map(|&t| position(t)).collect();
        let tangent: Vec<Vec2> = theta.iter().map(|&t| tangent(t)).collect();
        let metric: Vec<f64> = tangent.iter().map(|&t| dot(t, t)).collect();
        if let Some(k) = metric.iter().position(|&g| !(g > 0.0) || !g.is_finite()) {
            return Err(Error::Parameter(format!("curve is not immersed at sample {k}")));
        }
        let normal = tangent
            .iter()
            .zip(&metric)
            .map(|(t, g)| {
                let s = g.sqrt();
                [t[1] / s, -t[0] / s]
            })
            .collect();
        Ok(Self { m, theta, position, tangent, normal, metric })
    }

    pub fn circle(m: usize, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::Parameter(format!("radius must be positive, got {r}")));
        }
        Self::new(m, |t| [r * t.cos(), r * t.sin()], |t| [-r * t.sin(), r * t.cos()])
    }

    pub fn ellipse(m: usize, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Parameter(format!("semi-axes must be positive, got {a}, {b}")));
        }
        Self::new(m, |t| [a * t.cos(), b * t.sin()], |t| [-a * t.sin(), b * t.cos()])
    }

    /// The same geometric curve in the chart `θ = t + s·sin t` (`|s| < 1`).
    pub fn reparametrized(m: usize, s: f64, base_pos: impl Fn(f64) -> Vec2, base_tan: impl Fn(f64) -> Vec2) -> Result<Self> {
        if s.abs() >= 1.0 {
            return Err(Error::Parameter(format!("chart map is not monotone for s = {s}")));
        }
        let map = |t: f64| t + s * t.sin();
        let dmap = |t: f64| 1.0 + s * t.cos();
        Self::new(
            m,
            |t| base_pos(map(t)),
            |t| {
                let b = base_tan(map(t));
                [b[0] * dmap(t), b[1] * dmap(t)]
            },
        )
    }

    /// Quadrature `∫_Γ f dσ` (trapezoid in θ, spectrally accurate).
    pub fn integrate(&self, f: &[f64]) -> f64 {
        let h = 2.0 * PI / self.m as f64;
        f.iter().zip(&self.metric).map(|(f, g)| f * g.sqrt()).sum::<f64>() * h
    }

    pub fn length(&self) -> f64 {
        self.integrate(&vec![1.0; self.m])
    }

    /// Samples an ambient function on the curve.
    pub fn sample<T>(&self, f: impl Fn(f64, f64) -> T) -> Vec<T> {
        self.position.iter().map(|p| f(p[0], p[1])).collect()
    }
}

/// Which named test curve to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Circle,
    Ellipse,
}

impl CurveKind {
    pub fn build(self, m: usize) -> Result<ParametricCurve> {
        match self {
            CurveKind::Circle => ParametricCurve::circle(m, 1.0),
            CurveKind::Ellipse => ParametricCurve::ellipse(m, 2.0, 1.0),
        }
    }

    fn axes(self) -> (f64, f64) {
        match self {
            CurveKind::Circle => (1.0, 1.0),
            CurveKind::Ellipse => (2.0, 1.0),
        }
    }

    /// Analytic curvature at parameter θ.
    pub fn exact_curvature(self, t: f64) -> f64 {
        let (a, b) = self.axes();
        a * b / (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).powf(1.5)
    }
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveKind::Circle => "circle",
            CurveKind::Ellipse => "ellipse",
        })
    }
}

impl FromStr for CurveKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(CurveKind::Circle),
            "ellipse" => Ok(CurveKind::Ellipse),
            _ => Err(Error::Parameter(format!("unknown curve '{s}'"))),
        }
    }
}

/// Operators on one curve with a fixed differencing scheme.
#[derive(Debug, Clone)]
pub struct SurfaceCalculus {
    pub curve: ParametricCurve,
    pub method: Differencing,
}

impl SurfaceCalculus {
    pub fn new(curve: ParametricCurve, method: Differencing) -> Self {
        Self { curve, method }
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.curve.m {
            return Err(Error::Structural(format!("field has {n} samples, curve has {}", self.curve.m)));
        }
        Ok(())
    }

    /// `∇_Γ f = g⁻¹ (∂θ f) τ`; tangential by construction.
    pub fn gradient(&self, f: &[f64]) -> Result<Vec<Vec2>> {
        self.check_len(f.len())?;
        let df = derivative(f, self.method);
        let c = &self.curve;
        Ok((0..c.m).map(|k| [df[k] / c.metric[k] * c.tangent[k][0], df[k] / c.metric[k] * c.tangent[k][1]]).collect())
    }

    /// `∇_Γ v`, row `i` being `∇_Γ v_i`.
    pub fn jacobian(&self, v: &[Vec2]) -> Result<Vec<[Vec2; 2]>> {
        let gx = self.gradient(&v.iter().map(|w| w[0]).collect::<Vec<_>>())?;
        let gy = self.gradient(&v.iter().map(|w| w[1]).collect::<Vec<_>>())?;
        Ok(gx.into_iter().zip(gy).map(|(a, b)| [a, b]).collect())
    }

    /// `∇_Γ·v = tr ∇_Γ v`.
    pub fn divergence(&self, v: &[Vec2]) -> Result<Vec<f64>> {
        Ok(self.jacobian(v)?.iter().map(|j| j[0][0] + j[1][1]).collect())
    }

    /// `∇_Γ·n`.
    pub fn curvature(&self) -> Vec<f64> {
        self.divergence(&self.curve.normal).expect("normal has m samples")
    }

    /// Row-wise divergence of a matrix field, `(∇_Γ·A)_i = Σ_j ∂_j^Γ A_ij`.
    pub fn matrix_divergence(&self, a: &[[Vec2; 2]]) -> Result<Vec<Vec2>> {
        let row = |i: usize| self.divergence(&a.iter().map(|m| m[i]).collect::<Vec<_>>());
        let (r0, r1) = (row(0)?, row(1)?);
        Ok(r0.into_iter().zip(r1).map(|(a, b)| [a, b]).collect())
    }

    /// `∫_Γ f ∇_Γ·v - f (v·n) ∇_Γ·n + v·∇_Γ f dσ`, optionally without the
    /// curvature term.
    pub fn ibp_residual(&self, f: &[f64], v: &[Vec2], with_curvature: bool) -> Result<f64> {
        let div = self.divergence(v)?;
        let grad = self.gradient(f)?;
        let kappa = self.curvature();
        let c = &self.curve;
        let integrand: Vec<f64> = (0..c.m)
            .map(|k| {
                let curv = if with_curvature { f[k] * dot(v[k], c.normal[k]) * kappa[k] } else { 0.0 };
                f[k] * div[k] - curv + dot(v[k], grad[k])
            })
            .collect();
        Ok(c.integrate(&integrand))
    }

    /// `max_k |∇_Γ f · n|`.
    pub fn tangentiality(&self, f: &[f64]) -> Result<f64> {
        let g = self.gradient(f)?;
        Ok(g.iter().zip(&self.curve.normal).map(|(g, n)| dot(*g, *n).abs()).fold(0.0, f64::max))
    }

    /// `max_k |∇_Γ F - (∇F - (∇F·n) n)|` for a bulk function and its gradient.
    pub fn projection_residual(&self, f: impl Fn(f64, f64) -> f64, grad: impl Fn(f64, f64) -> Vec2) -> Result<f64> {
        let c = &self.curve;
        let sg = self.gradient(&c.sample(&f))?;
        let bulk = c.sample(&grad);
        Ok((0..c.m)
            .map(|k| {
                let (b, n) = (bulk[k], c.normal[k]);
                let bn = dot(b, n);
                let p = [b[0] - bn * n[0], b[1] - bn * n[1]];
                (sg[k][0] - p[0]).hypot(sg[k][1] - p[1])
            })
            .fold(0.0, f64::max))
    }

    /// `max |∇_Γ(fg) - g∇_Γf - f∇_Γg|`.
    pub fn product_rule_residual(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        let fg: Vec<f64> = f.iter().zip(g).map(|(a, b)| a * b).collect();
        let (l, gf, gg) = (self.gradient(&fg)?, self.gradient(f)?, self.gradient(g)?);
        Ok((0..self.curve.m)
            .map(|k| {
                let r0 = l[k][0] - g[k] * gf[k][0] - f[k] * gg[k][0];
                let r1 = l[k][1] - g[k] * gf[k][1] - f[k] * gg[k][1];
                r0.hypot(r1)
            })
            .fold(0.0, f64::max))
    }

    /// `max |∇_Γ·(Av) - (∇_Γ·Aᵀ)·v - Aᵀ:∇_Γv|`.
    pub fn matrix_product_rule_residual(&self, a: &[[Vec2; 2]], v: &[Vec2]) -> Result<f64> {
        self.check_len(a.len())?;
        let av: Vec<Vec2> = a.iter().zip(v).map(|(m, w)| [dot(m[0], *w), dot(m[1], *w)]).collect();
        let at: Vec<[Vec2; 2]> = a.iter().map(|m| [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]).collect();
        let lhs = self.divergence(&av)?;
        let div_at = self.matrix_divergence(&at)?;
        let jv = self.jacobian(v)?;
        Ok((0..self.curve.m)
            .map(|k| {
                // Aᵀ:∇v = Σ_ij (Aᵀ)_ij (∇v)_ij = Σ_ij A_ji ∂_j v_i
                let mut contr = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        contr += at[k][i][j] * jv[k][i][j];
                    }
                }
                (lhs[k] - dot(div_at[k], v[k]) - contr).abs()
            })
            .fold(0.0, f64::max))
    }
}

/// Random smooth ambient function `Σ a_k sin(p_k x + q_k y + φ_k)`.
pub fn random_smooth(seed: u64, modes: usize) -> impl Fn(f64, f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<[f64; 4]> = (0..modes)
        .map(|_| {
            [
                rng.random_range(-1.0..1.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(0.0..2.0 * PI),
            ]
        })
        .collect();
    move |x, y| terms.iter().map(|t| t[0] * (t[1] * x + t[2] * y + t[3]).sin()).sum()
}

/// A non-tangential ambient vector field used by the identity checks.
pub fn test_vector_field(x: f64, y: f64) -> Vec2 {
    [x * x - y, x.sin() + 0.5 * y]
}

/// One line of the `surface-check` table.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SurfaceCheckRow {
    pub curve: CurveKind,
    pub samples: usize,
    pub method: Differencing,
    pub check: &'static str,
    pub residual: f64,
}

/// Runs every identity check on one curve.
pub fn surface_check(kind: CurveKind, m: usize, method: Differencing, seed: u64) -> Result<Vec<SurfaceCheckRow>> {
    let curve = kind.build(m)?;
    let sc = SurfaceCalculus::new(curve, method);
    let c = &sc.curve;
    let f = c.sample(random_smooth(seed, 4));
    let g = c.sample(|x, y| (x * y).cos() + x);
    let v = c.sample(test_vector_field);
    let kappa = sc.curvature();
    let mut rows = Vec::new();
    let mut push = |check: &'static str, residual: f64| {
        rows.push(SurfaceCheckRow { curve: kind, samples: m, method, check, residual });
    };

    let curv_err = (0..c.m).map(|k| (kappa[k] - kind.exact_curvature(c.theta[k])).abs()).fold(0.0, f64::max);
    push("curvature", curv_err);
    push("tangentiality", sc.tangentiality(&f)?);

    let h: Vec<f64> = c.theta.iter().map(|t| 1.0 + 0.5 * (2.0 * t).sin() + 0.2 * t.cos()).collect();
    let vt: Vec<Vec2> = (0..c.m)
        .map(|k| {
            let s = c.metric[k].sqrt();
            [h[k] * c.tangent[k][0] / s, h[k] * c.tangent[k][1] / s]
        })
        .collect();
    push("divergence_theorem", c.integrate(&sc.divergence(&vt)?).abs());
    push("ibp", sc.ibp_residual(&f, &v, true)?.abs());
    push("ibp_without_curvature", sc.ibp_residual(&f, &v, false)?.abs());
    push("projection", sc.projection_residual(|x, y| x * x + y, |x, _| [2.0 * x, 1.0])?);
    push("product_rule", sc.product_rule_residual(&f, &g)?);
    let a: Vec<[Vec2; 2]> = c.sample(|x, y| [[1.0 + x * y, y.sin()], [x, 2.0 + y * y]]);
    push("matrix_product_rule", sc.matrix_product_rule_residual(&a, &v)?);

    let (ax, bx) = kind.axes();
    let alt = SurfaceCalculus::new(
        ParametricCurve::reparametrized(m, 0.3, |t| [ax * t.cos(), bx * t.sin()], |t| [-ax * t.sin(), bx * t.cos()])?,
        method,
    );
    let alt_kappa = alt.curvature();
    let chart = (0..m)
        .map(|k| {
            let t = alt.curve.theta[k];
            (alt_kappa[k] - kind.exact_curvature(t + 0.3 * t.sin())).abs()
        })
        .fold(0.0, f64::max);
    push("chart_independence", chart.max(curv_err));
    Ok(rows)
}

pub fn write_check_csv<W: std::io::Write>(rows: &[SurfaceCheckRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["curve", "samples", "method", "check", "residual"])?;
    for r in rows {
        out.write_record([
            r.curve.to_string(),
            r.samples.to_string(),
            r.method.to_string(),
            r.check.to_string(),
            format!("{:e}", r.residual),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(rows: &[SurfaceCheckRow], name: &str) -> f64 {
        rows.iter().find(|r| r.check == name).unwrap().residual
    }

    #[test]
    fn spectral_derivative_is_exact_for_trig() {
        let m = 32;
        let t: Vec<f64> = (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect();
        let f: Vec<f64> = t.iter().map(|t| (3.0 * t).sin() + (5.0 * t).cos()).collect();
        let d = derivative(&f, Differencing::Spectral);
        for (k, t) in t.iter().enumerate() {
            assert!((d[k] - (3.0 * (3.0 * t).cos() - 5.0 * (5.0 * t).sin())).abs() < 1e-12);
        }
    }

    #[test]
    fn central_derivative_is_fourth_order() {
        let err = |m: usize| {
            let t: Vec<f64> = (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect();
            let f: Vec<f64> = t.iter().map(|t| t.sin().exp()).collect();
            let d = derivative(&f, Differencing::Central4);
            t.iter().enumerate().map(|(k, t)| (d[k] - t.cos() * t.sin().exp()).abs()).fold(0.0, f64::max)
        };
        let p = (err(32) / err(64)).log2();
        assert!((3.8..4.3).contains(&p), "order {p}");
    }

    #[test]
    fn constant_has_zero_gradient() {
        let sc = SurfaceCalculus::new(ParametricCurve::ellipse(16, 2.0, 1.0).unwrap(), Differencing::Central4);
        let g = sc.gradient(&vec![3.0; 16]).unwrap();
        assert!(g.iter().all(|v| v[0].abs() < 1e-13 && v[1].abs() < 1e-13));
    }

    #[test]
    fn gradient_of_y_on_circle() {
        let sc = SurfaceCalculus::new(ParametricCurve::circle(64, 1.0).unwrap(), Differencing::Spectral);
        let g = sc.gradient(&sc.curve.sample(|_, y| y)).unwrap();
        for (k, t) in sc.curve.theta.iter().enumerate() {
            let want = [-t.cos() * t.sin(), t.cos() * t.cos()];
            assert!((g[k][0] - want[0]).abs() < 1e-12 && (g[k][1] - want[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn curvature_examples() {
        for (r, want) in [(1.0, 1.0), (2.0, 0.5)] {
            let sc = SurfaceCalculus::new(ParametricCurve::circle(64, r).unwrap(), Differencing::Spectral);
            assert!(sc.curvature().iter().all(|k| (k - want).abs() < 1e-12));
        }
        let sc = SurfaceCalculus::new(ParametricCurve::ellipse(128, 2.0, 1.0).unwrap(), Differencing::Spectral);
        assert!((sc.curvature()[0] - 2.0).abs() < 1e-10);
        assert_eq!(CurveKind::Ellipse.exact_curvature(0.0), 2.0);
    }

    #[test]
    fn divergence_of_constant_field_vanishes() {
        let sc = SurfaceCalculus::new(ParametricCurve::circle(32, 1.0).unwrap(), Differencing::Spectral);
        let d = sc.divergence(&vec![[1.0, 0.0]; 32]).unwrap();
        assert!(d.iter().all(|x| x.abs() < 1e-13));
    }

    #[test]
    fn normal_field_ibp_cancels() {
        let sc = SurfaceCalculus::new(ParametricCurve::circle(32, 1.0).unwrap(), Differencing::Central4);
        let r = sc.ibp_residual(&vec![1.0; 32], &sc.curve.normal.clone(), true).unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn ellipse_spectral_checks() {
        let rows = surface_check(CurveKind::Ellipse, 256, Differencing::Spectral, 7).unwrap();
        assert!(residual(&rows, "ibp") < 1e-8);
        assert!(residual(&rows, "ibp_without_curvature") > 1e-2);
        assert!(residual(&rows, "divergence_theorem") < 1e-10);
        assert!(residual(&rows, "tangentiality") < 1e-12);
        for name in ["projection", "product_rule", "matrix_product_rule", "chart_independence"] {
            assert!(residual(&rows, name) < 1e-8, "{name}");
        }
    }

    #[test]
    fn projection_converges_at_fourth_order() {
        let at = |m| residual(&surface_check(CurveKind::Ellipse, m, Differencing::Central4, 1).unwrap(), "projection");
        let p = (at(64) / at(128)).log2();
        assert!((3.7..4.4).contains(&p), "order {p}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ParametricCurve::circle(4, 1.0).is_err());
        assert!(ParametricCurve::circle(16, 0.0).is_err());
        assert!("torus".parse::<CurveKind>().is_err());
        let sc = SurfaceCalculus::new(ParametricCurve::circle(16, 1.0).unwrap(), Differencing::Spectral);
        assert!(sc.gradient(&[1.0; 8]).is_err());
    }
}
