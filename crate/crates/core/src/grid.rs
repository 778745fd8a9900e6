//! Staggered (MAC) grid on a rectangle, field containers, and the discrete
//! difference and quadrature operators shared by every solver.
//!
//! Scalars live at cell centers, the x-velocity on vertical faces and the
//! y-velocity on horizontal faces. Cell `(i, j)` is stored at `j * nx + i`;
//! x-face `(i, j)` (left edge of cell `(i, j)`, `i = 0..=nx`) at
//! `j * (nx + 1) + i`; y-face `(i, j)` (bottom edge, `j = 0..=ny`) at
//! `j * nx + i`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub hx: f64,
    pub hy: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::Parameter(format!("grid needs at least 4x4 cells, got {nx}x{ny}")));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::Parameter(format!("domain lengths must be positive, got {lx} x {ly}")));
        }
        Ok(Self { nx, ny, lx, ly, hx: lx / nx as f64, hy: ly / ny as f64 })
    }

    /// Unit square with `n x n` cells.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn u_idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.nx && j < self.ny);
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn v_idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j <= self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn n_u(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    #[inline]
    pub fn n_v(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    /// Cell-center coordinate, computed from indices alone.
    #[inline]
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx, (j as f64 + 0.5) * self.hy)
    }

    /// Midpoint of x-face `(i, j)`.
    #[inline]
    pub fn u_face(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.hx, (j as f64 + 0.5) * self.hy)
    }

    /// Midpoint of y-face `(i, j)`.
    #[inline]
    pub fn v_face(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx, j as f64 * self.hy)
    }

    pub fn is_boundary_cell(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    pub fn n_boundary_faces(&self) -> usize {
        2 * (self.nx + self.ny)
    }

    /// All boundary faces in trace order: bottom, top, left, right.
    pub fn boundary_faces(&self) -> impl Iterator<Item = BoundaryFace> + '_ {
        let (nx, ny) = (self.nx, self.ny);
        (0..nx)
            .map(|k| BoundaryFace { side: Side::Bottom, k })
            .chain((0..nx).map(|k| BoundaryFace { side: Side::Top, k }))
            .chain((0..ny).map(|k| BoundaryFace { side: Side::Left, k }))
            .chain((0..ny).map(|k| BoundaryFace { side: Side::Right, k }))
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Structural(format!("grid mismatch: {}x{} vs {}x{}", self.nx, self.ny, other.nx, other.ny)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Bottom,
    Top,
    Left,
    Right,
}

impl Side {
    /// Outward unit normal.
    pub fn normal(self) -> (f64, f64) {
        match self {
            Side::Bottom => (0.0, -1.0),
            Side::Top => (0.0, 1.0),
            Side::Left => (-1.0, 0.0),
            Side::Right => (1.0, 0.0),
        }
    }
}

/// A boundary face, `k` running along its side (in `i` for bottom/top, `j`
/// for left/right).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFace {
    pub side: Side,
    pub k: usize,
}

impl BoundaryFace {
    /// Position in a [`BoundaryTrace`].
    pub fn trace_index(&self, grid: &Grid) -> usize {
        match self.side {
            Side::Bottom => self.k,
            Side::Top => grid.nx + self.k,
            Side::Left => 2 * grid.nx + self.k,
            Side::Right => 2 * grid.nx + grid.ny + self.k,
        }
    }

    /// The cell touching this face.
    pub fn cell(&self, grid: &Grid) -> (usize, usize) {
        match self.side {
            Side::Bottom => (self.k, 0),
            Side::Top => (self.k, grid.ny - 1),
            Side::Left => (0, self.k),
            Side::Right => (grid.nx - 1, self.k),
        }
    }

    pub fn length(&self, grid: &Grid) -> f64 {
        match self.side {
            Side::Bottom | Side::Top => grid.hx,
            Side::Left | Side::Right => grid.hy,
        }
    }

    /// Distance from the adjacent cell center to the face.
    pub fn half_width(&self, grid: &Grid) -> f64 {
        match self.side {
            Side::Bottom | Side::Top => 0.5 * grid.hy,
            Side::Left | Side::Right => 0.5 * grid.hx,
        }
    }

    pub fn midpoint(&self, grid: &Grid) -> (f64, f64) {
        match self.side {
            Side::Bottom => grid.v_face(self.k, 0),
            Side::Top => grid.v_face(self.k, grid.ny),
            Side::Left => grid.u_face(0, self.k),
            Side::Right => grid.u_face(grid.nx, self.k),
        }
    }
}

/// Cell-centered scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.n_cells()] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::Structural(format!("scalar field expects {} values, got {}", grid.n_cells(), values.len())));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y)` at cell centers.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.n_cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.center(i, j);
                values.push(f(x, y));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn check(&self) -> Result<()> {
        if self.values.len() != self.grid.n_cells() {
            return Err(Error::Structural(format!(
                "scalar field has {} values for a {}x{} grid",
                self.values.len(),
                self.grid.nx,
                self.grid.ny
            )));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self { grid: self.grid, values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect() })
    }

    /// Discrete L² norm `sqrt(Σ s² hx hy)`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_area()).sqrt()
    }
}

/// Face-normal velocity components on the staggered grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldMAC {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl VectorFieldMAC {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, u: vec![0.0; grid.n_u()], v: vec![0.0; grid.n_v()] }
    }

    pub fn from_components(grid: Grid, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let w = Self { grid, u, v };
        w.check()?;
        Ok(w)
    }

    /// Samples `fu` on x-faces and `fv` on y-faces.
    pub fn from_fn(grid: Grid, fu: impl Fn(f64, f64) -> f64, fv: impl Fn(f64, f64) -> f64) -> Self {
        let mut w = Self::zeros(grid);
        for j in 0..grid.ny {
            for i in 0..=grid.nx {
                let (x, y) = grid.u_face(i, j);
                w.u[grid.u_idx(i, j)] = fu(x, y);
            }
        }
        for j in 0..=grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.v_face(i, j);
                w.v[grid.v_idx(i, j)] = fv(x, y);
            }
        }
        w
    }

    pub fn check(&self) -> Result<()> {
        if self.u.len() != self.grid.n_u() || self.v.len() != self.grid.n_v() {
            return Err(Error::Structural(format!(
                "MAC field component lengths ({}, {}) do not match a {}x{} grid",
                self.u.len(),
                self.v.len(),
                self.grid.nx,
                self.grid.ny
            )));
        }
        Ok(())
    }

    /// Sets every boundary-face normal component to exactly zero.
    pub fn apply_no_slip(&mut self) {
        let g = self.grid;
        for j in 0..g.ny {
            self.u[g.u_idx(0, j)] = 0.0;
            self.u[g.u_idx(g.nx, j)] = 0.0;
        }
        for i in 0..g.nx {
            self.v[g.v_idx(i, 0)] = 0.0;
            self.v[g.v_idx(i, g.ny)] = 0.0;
        }
    }

    pub fn boundary_normal_max(&self) -> f64 {
        let g = self.grid;
        let mut m: f64 = 0.0;
        for j in 0..g.ny {
            m = m.max(self.u[g.u_idx(0, j)].abs());
            m = m.max(self.u[g.u_idx(g.nx, j)].abs());
        }
        for i in 0..g.nx {
            m = m.max(self.v[g.v_idx(i, 0)].abs());
            m = m.max(self.v[g.v_idx(i, g.ny)].abs());
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().chain(&self.v).fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `½ Σ |w|²` with each face weighted by its dual-cell area.
    pub fn kinetic_energy(&self) -> f64 {
        let a = self.grid.cell_area();
        0.5 * a * self.u.iter().chain(&self.v).map(|x| x * x).sum::<f64>()
    }

    /// Velocity averaged to cell centers.
    pub fn cell_centered(&self) -> (ScalarField, ScalarField) {
        let g = self.grid;
        let mut cu = ScalarField::zeros(g);
        let mut cv = ScalarField::zeros(g);
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = g.idx(i, j);
                cu.values[k] = 0.5 * (self.u[g.u_idx(i, j)] + self.u[g.u_idx(i + 1, j)]);
                cv.values[k] = 0.5 * (self.v[g.v_idx(i, j)] + self.v[g.v_idx(i, j + 1)]);
            }
        }
        (cu, cv)
    }

    pub fn axpy(&mut self, a: f64, other: &VectorFieldMAC) {
        for (x, y) in self.u.iter_mut().zip(&other.u) {
            *x += a * y;
        }
        for (x, y) in self.v.iter_mut().zip(&other.v) {
            *x += a * y;
        }
    }
}

/// Values on the `2 (nx + ny)` boundary faces, ordered as
/// [`Grid::boundary_faces`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl BoundaryTrace {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.n_boundary_faces()] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let t = Self { grid, values };
        t.check()?;
        Ok(t)
    }

    /// Evaluates `f(face, x, y)` at every boundary-face midpoint.
    pub fn from_fn(grid: Grid, f: impl Fn(BoundaryFace, f64, f64) -> f64) -> Self {
        let values = grid
            .boundary_faces()
            .map(|face| {
                let (x, y) = face.midpoint(&grid);
                f(face, x, y)
            })
            .collect();
        Self { grid, values }
    }

    pub fn check(&self) -> Result<()> {
        if self.values.len() != self.grid.n_boundary_faces() {
            return Err(Error::Structural(format!(
                "boundary trace expects {} values, got {}",
                self.grid.n_boundary_faces(),
                self.values.len()
            )));
        }
        Ok(())
    }

    pub fn get(&self, face: BoundaryFace) -> f64 {
        self.values[face.trace_index(&self.grid)]
    }
}

/// Discrete divergence: `(u_{i+1,j} - u_{i,j})/hx + (v_{i,j+1} - v_{i,j})/hy`.
pub fn divergence_mac(w: &VectorFieldMAC) -> Result<ScalarField> {
    w.check()?;
    let g = w.grid;
    let mut out = ScalarField::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            out.values[g.idx(i, j)] =
                (w.u[g.u_idx(i + 1, j)] - w.u[g.u_idx(i, j)]) / g.hx + (w.v[g.v_idx(i, j + 1)] - w.v[g.v_idx(i, j)]) / g.hy;
        }
    }
    Ok(out)
}

/// Face gradient of a cell field. Interior faces use the two adjacent cells;
/// on a boundary face the caller's `ghost(face, interior_value)` supplies the
/// value one cell beyond the boundary.
pub fn gradient_to_faces(s: &ScalarField, ghost: impl Fn(BoundaryFace, f64) -> f64) -> Result<VectorFieldMAC> {
    s.check()?;
    let g = s.grid;
    let mut w = VectorFieldMAC::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            w.u[g.u_idx(i, j)] = (s.at(i, j) - s.at(i - 1, j)) / g.hx;
        }
        let left = s.at(0, j);
        let gl = ghost(BoundaryFace { side: Side::Left, k: j }, left);
        w.u[g.u_idx(0, j)] = (left - gl) / g.hx;
        let right = s.at(g.nx - 1, j);
        let gr = ghost(BoundaryFace { side: Side::Right, k: j }, right);
        w.u[g.u_idx(g.nx, j)] = (gr - right) / g.hx;
    }
    for i in 0..g.nx {
        for j in 1..g.ny {
            w.v[g.v_idx(i, j)] = (s.at(i, j) - s.at(i, j - 1)) / g.hy;
        }
        let bottom = s.at(i, 0);
        let gb = ghost(BoundaryFace { side: Side::Bottom, k: i }, bottom);
        w.v[g.v_idx(i, 0)] = (bottom - gb) / g.hy;
        let top = s.at(i, g.ny - 1);
        let gt = ghost(BoundaryFace { side: Side::Top, k: i }, top);
        w.v[g.v_idx(i, g.ny)] = (gt - top) / g.hy;
    }
    Ok(w)
}

/// Face gradient with homogeneous Neumann closure (zero boundary-face values).
pub fn gradient_to_faces_neumann(s: &ScalarField) -> Result<VectorFieldMAC> {
    gradient_to_faces(s, |_, interior| interior)
}

/// Arithmetic mean of the adjacent cells; boundary faces copy their cell.
pub fn interp_center_to_face(s: &ScalarField) -> Result<VectorFieldMAC> {
    s.check()?;
    let g = s.grid;
    let mut w = VectorFieldMAC::zeros(g);
    for j in 0..g.ny {
        w.u[g.u_idx(0, j)] = s.at(0, j);
        for i in 1..g.nx {
            w.u[g.u_idx(i, j)] = 0.5 * (s.at(i - 1, j) + s.at(i, j));
        }
        w.u[g.u_idx(g.nx, j)] = s.at(g.nx - 1, j);
    }
    for i in 0..g.nx {
        w.v[g.v_idx(i, 0)] = s.at(i, 0);
        for j in 1..g.ny {
            w.v[g.v_idx(i, j)] = 0.5 * (s.at(i, j - 1) + s.at(i, j));
        }
        w.v[g.v_idx(i, g.ny)] = s.at(i, g.ny - 1);
    }
    Ok(w)
}

/// Midpoint rule `Σ s_ij hx hy`.
pub fn domain_integral(s: &ScalarField) -> f64 {
    s.values.iter().sum::<f64>() * s.grid.cell_area()
}

/// Midpoint rule over the boundary: `Σ trace · face length`.
pub fn boundary_integral(trace: &BoundaryTrace) -> Result<f64> {
    trace.check()?;
    let g = trace.grid;
    Ok(g.boundary_faces().zip(&trace.values).map(|(face, &t)| t * face.length(&g)).sum())
}

/// Net outward flux `∮ w·n` of a MAC field, read off its boundary faces.
pub fn boundary_flux(w: &VectorFieldMAC) -> f64 {
    let g = w.grid;
    let mut flux = 0.0;
    for j in 0..g.ny {
        flux += (w.u[g.u_idx(g.nx, j)] - w.u[g.u_idx(0, j)]) * g.hy;
    }
    for i in 0..g.nx {
        flux += (w.v[g.v_idx(i, g.ny)] - w.v[g.v_idx(i, 0)]) * g.hx;
    }
    flux
}
