//! Director fields and the anisotropy tensors `I + s d⊗d`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

/// A prescribed, time-independent director `d(x)` at cell centers together
/// with the mobility (`lambda`) and permittivity (`epsilon`) strengths.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectorField {
    pub grid: Grid,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub lambda: f64,
    pub epsilon: f64,
}

/// Symmetric 2×2 tensor field; only the upper triangle is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub grid: Grid,
    pub a11: Vec<f64>,
    pub a12: Vec<f64>,
    pub a22: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectorPreset {
    Zero,
    UniformXInteriorMasked,
    Vortex,
    Quadrant,
}

impl DirectorPreset {
    pub const ALL: [DirectorPreset; 4] =
        [DirectorPreset::Zero, DirectorPreset::UniformXInteriorMasked, DirectorPreset::Vortex, DirectorPreset::Quadrant];

    pub fn name(self) -> &'static str {
        match self {
            DirectorPreset::Zero => "zero",
            DirectorPreset::UniformXInteriorMasked => "uniform_x_interior_masked",
            DirectorPreset::Vortex => "vortex",
            DirectorPreset::Quadrant => "quadrant",
        }
    }
}

impl fmt::Display for DirectorPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DirectorPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| Error::Parameter(format!("unknown director preset '{s}'")))
    }
}

fn check_strength(name: &str, s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("anisotropy strength {name} must be positive, got {s}")))
    }
}

impl DirectorField {
    pub fn new(grid: Grid, dx: Vec<f64>, dy: Vec<f64>, lambda: f64, epsilon: f64) -> Result<Self> {
        check_strength("lambda", lambda)?;
        check_strength("epsilon", epsilon)?;
        if dx.len() != grid.n_cells() || dy.len() != grid.n_cells() {
            return Err(Error::Structural("director components do not match grid".into()));
        }
        Ok(Self { grid, dx, dy, lambda, epsilon })
    }

    /// Samples an analytic director at cell centers, without masking.
    pub fn from_fn(grid: Grid, lambda: f64, epsilon: f64, d: impl Fn(f64, f64) -> (f64, f64)) -> Result<Self> {
        let mut dx = Vec::with_capacity(grid.n_cells());
        let mut dy = Vec::with_capacity(grid.n_cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.center(i, j);
                let (a, b) = d(x, y);
                dx.push(a);
                dy.push(b);
            }
        }
        Self::new(grid, dx, dy, lambda, epsilon)
    }

    /// Like [`DirectorField::from_fn`] but with the one-cell boundary ring
    /// set to zero, which makes the field exactly tangential.
    pub fn from_fn_masked(grid: Grid, lambda: f64, epsilon: f64, d: impl Fn(f64, f64) -> (f64, f64)) -> Result<Self> {
        let mut df = Self::from_fn(grid, lambda, epsilon, d)?;
        df.mask_boundary_ring();
        Ok(df)
    }

    pub fn preset(preset: DirectorPreset, grid: Grid, lambda: f64, epsilon: f64) -> Result<Self> {
        let (cx, cy) = (0.5 * grid.lx, 0.5 * grid.ly);
        match preset {
            DirectorPreset::Zero => Self::from_fn(grid, lambda, epsilon, |_, _| (0.0, 0.0)),
            DirectorPreset::UniformXInteriorMasked => Self::from_fn_masked(grid, lambda, epsilon, |_, _| (1.0, 0.0)),
            DirectorPreset::Vortex => Self::from_fn_masked(grid, lambda, epsilon, |x, y| {
                let (a, b) = (-(y - cy), x - cx);
                let r = a.hypot(b);
                if r > 0.0 {
                    (a / r, b / r)
                } else {
                    (0.0, 0.0)
                }
            }),
            // Piecewise-constant diagonal directions circulating about the
            // center, one per quadrant.
            DirectorPreset::Quadrant => Self::from_fn_masked(grid, lambda, epsilon, |x, y| {
                let s = FRAC_1_SQRT_2;
                match (x >= cx, y >= cy) {
                    (true, true) => (-s, s),
                    (false, true) => (-s, -s),
                    (false, false) => (s, -s),
                    (true, false) => (s, s),
                }
            }),
        }
    }

    pub fn mask_boundary_ring(&mut self) {
        let g = self.grid;
        for j in 0..g.ny {
            for i in 0..g.nx {
                if g.is_boundary_cell(i, j) {
                    let k = g.idx(i, j);
                    self.dx[k] = 0.0;
                    self.dy[k] = 0.0;
                }
            }
        }
    }

    #[inline]
    pub fn at(&self, k: usize) -> (f64, f64) {
        (self.dx[k], self.dy[k])
    }

    /// `Λ(d) = I + λ d⊗d`.
    pub fn mobility_tensor(&self) -> TensorField {
        tensor_unchecked(self, self.lambda)
    }

    /// `E(d) = I + ε d⊗d`.
    pub fn permittivity_tensor(&self) -> TensorField {
        tensor_unchecked(self, self.epsilon)
    }

    pub fn max_norm(&self) -> f64 {
        self.dx.iter().zip(&self.dy).fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
    }

    /// Discrete stand-in for `‖d‖_{W^{2,∞}}`: `max|d| + max|Δ_h d|`, the
    /// Laplacian taken with zero-gradient closure.
    pub fn w2inf_proxy(&self) -> f64 {
        let g = self.grid;
        let lap = |c: &[f64], i: usize, j: usize| {
            let at = |a: usize, b: usize| c[g.idx(a, b)];
            let mid = at(i, j);
            let xm = if i > 0 { at(i - 1, j) } else { mid };
            let xp = if i + 1 < g.nx { at(i + 1, j) } else { mid };
            let ym = if j > 0 { at(i, j - 1) } else { mid };
            let yp = if j + 1 < g.ny { at(i, j + 1) } else { mid };
            (xm - 2.0 * mid + xp) / (g.hx * g.hx) + (ym - 2.0 * mid + yp) / (g.hy * g.hy)
        };
        let mut lmax: f64 = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                lmax = lmax.max(lap(&self.dx, i, j).hypot(lap(&self.dy, i, j)));
            }
        }
        self.max_norm() + lmax
    }
}

fn tensor_unchecked(df: &DirectorField, strength: f64) -> TensorField {
    let n = df.grid.n_cells();
    let mut t = TensorField { grid: df.grid, a11: Vec::with_capacity(n), a12: Vec::with_capacity(n), a22: Vec::with_capacity(n) };
    for k in 0..n {
        let (a, b) = df.at(k);
        t.a11.push(1.0 + strength * a * a);
        t.a12.push(strength * a * b);
        t.a22.push(1.0 + strength * b * b);
    }
    t
}

/// `A(x) = I + strength · d(x)⊗d(x)`.
pub fn tensor_from_director(df: &DirectorField, strength: f64) -> Result<TensorField> {
    check_strength("strength", strength)?;
    Ok(tensor_unchecked(df, strength))
}

/// Largest `|d·n|` over boundary cells, `n` the outward normal of the edge
/// (both edges at corner cells).
pub fn tangentiality_residual(df: &DirectorField) -> f64 {
    let g = df.grid;
    let mut r: f64 = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (a, b) = df.at(g.idx(i, j));
            if i == 0 || i + 1 == g.nx {
                r = r.max(a.abs());
            }
            if j == 0 || j + 1 == g.ny {
                r = r.max(b.abs());
            }
        }
    }
    r
}

impl TensorField {
    pub fn identity(grid: Grid) -> Self {
        let n = grid.n_cells();
        Self { grid, a11: vec![1.0; n], a12: vec![0.0; n], a22: vec![1.0; n] }
    }

    /// Eigenvalues `(min, max)` at cell `k`.
    pub fn eigenvalues(&self, k: usize) -> (f64, f64) {
        let (a, b, c) = (self.a11[k], self.a12[k], self.a22[k]);
        let mean = 0.5 * (a + c);
        let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        (mean - rad, mean + rad)
    }

    pub fn apply(&self, k: usize, x: (f64, f64)) -> (f64, f64) {
        (self.a11[k] * x.0 + self.a12[k] * x.1, self.a12[k] * x.0 + self.a22[k] * x.1)
    }

    pub fn quadratic_form(&self, k: usize, x: (f64, f64)) -> f64 {
        let (p, q) = self.apply(k, x);
        p * x.0 + q * x.1
    }

    /// Ensures every cell is symmetric positive definite.
    pub fn check_elliptic(&self) -> Result<()> {
        for k in 0..self.grid.n_cells() {
            let (a, b, c) = (self.a11[k], self.a12[k], self.a22[k]);
            if !(a > 0.0 && c > 0.0 && a * c - b * b > 0.0) || !(a.is_finite() && b.is_finite() && c.is_finite()) {
                return Err(Error::Parameter(format!("tensor is not uniformly elliptic at cell {k}: [[{a}, {b}], [{b}, {c}]]")));
            }
        }
        Ok(())
    }

    pub fn component(&self, which: usize) -> ScalarField {
        let values = match which {
            0 => self.a11.clone(),
            1 => self.a12.clone(),
            _ => self.a22.clone(),
        };
        ScalarField { grid: self.grid, values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(d: (f64, f64)) -> DirectorField {
        let g = Grid::unit(4).unwrap();
        DirectorField::from_fn(g, 1.0, 1.0, |_, _| d).unwrap()
    }

    #[test]
    fn tensor_examples() {
        let t = tensor_from_director(&single((1.0, 0.0)), 0.5).unwrap();
        assert_eq!((t.a11[0], t.a12[0], t.a22[0]), (1.5, 0.0, 1.0));

        let t = tensor_from_director(&single((0.0, 0.0)), 0.7).unwrap();
        assert_eq!((t.a11[3], t.a12[3], t.a22[3]), (1.0, 0.0, 1.0));

        let s = FRAC_1_SQRT_2;
        let t = tensor_from_director(&single((s, s)), 1.0).unwrap();
        assert!((t.a11[0] - 1.5).abs() < 1e-15);
        assert!((t.a12[0] - 0.5).abs() < 1e-15);
        let (lo, hi) = t.eigenvalues(0);
        assert!((lo - 1.0).abs() < 1e-14 && (hi - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_strength() {
        let df = single((1.0, 0.0));
        assert!(matches!(tensor_from_director(&df, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(tensor_from_director(&df, -1.0), Err(Error::Parameter(_))));
        let g = Grid::unit(4).unwrap();
        assert!(DirectorField::from_fn(g, 0.0, 1.0, |_, _| (0.0, 0.0)).is_err());
    }

    #[test]
    fn tangentiality_examples() {
        assert_eq!(tangentiality_residual(&single((1.0, 0.0))), 1.0);
        assert_eq!(tangentiality_residual(&single((0.0, 0.0))), 0.0);
        let g = Grid::unit(16).unwrap();
        for p in DirectorPreset::ALL {
            let df = DirectorField::preset(p, g, 0.5, 0.5).unwrap();
            assert_eq!(tangentiality_residual(&df), 0.0, "{p}");
        }
    }

    #[test]
    fn vortex_is_unit_in_interior() {
        let g = Grid::unit(64).unwrap();
        let df = DirectorField::preset(DirectorPreset::Vortex, g, 0.5, 0.5).unwrap();
        // cell (40, 32): center (0.6328125, 0.5078125), offset (0.1328125, 0.0078125)
        let k = g.idx(40, 32);
        let (a, b) = df.at(k);
        let r = 0.1328125f64.hypot(0.0078125);
        assert!((a + 0.0078125 / r).abs() < 1e-15 && (b - 0.1328125 / r).abs() < 1e-15);
        assert!((a.hypot(b) - 1.0).abs() < 1e-15);
        assert_eq!(df.at(g.idx(0, 10)), (0.0, 0.0));
        assert_eq!(df.at(g.idx(10, 63)), (0.0, 0.0));
    }

    #[test]
    fn unknown_preset_is_rejected() {
        assert!("spiral".parse::<DirectorPreset>().is_err());
        assert_eq!("quadrant".parse::<DirectorPreset>().unwrap(), DirectorPreset::Quadrant);
    }

    #[test]
    fn quadrant_has_off_diagonal_terms() {
        let g = Grid::unit(16).unwrap();
        let df = DirectorField::preset(DirectorPreset::Quadrant, g, 0.5, 0.5).unwrap();
        let t = df.mobility_tensor();
        assert!(t.a12.iter().any(|&x| x.abs() > 0.2));
    }

    #[test]
    fn non_elliptic_tensor_detected() {
        let mut t = TensorField::identity(Grid::unit(4).unwrap());
        t.a12[5] = 2.0;
        assert!(t.check_elliptic().is_err());
    }
}
