//! Uniform node-centred grids and the scalar/vector fields that live on them.

use crate::error::{Error, Result};

/// Smallest node count per direction that still supports the 5-point
/// stencils and one-sided boundary differences.
pub const MIN_NODES: usize = 5;

/// A uniform grid with nodes at `(x0 + i*dx, y0 + j*dy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid2D {
    pub fn new(x0: f64, y0: f64, dx: f64, dy: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(Error::Grid(format!("spacing must be positive, got dx={dx}, dy={dy}")));
        }
        if !(x0.is_finite() && y0.is_finite()) {
            return Err(Error::Grid("origin must be finite".into()));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::Grid(format!("grid must be non-empty, got {nx}x{ny}")));
        }
        Ok(Grid2D { x0, y0, dx, dy, nx, ny })
    }

    /// Errors unless the grid is large enough for the solver stencils.
    pub fn require_stencil(&self) -> Result<()> {
        if self.nx < MIN_NODES || self.ny < MIN_NODES {
            return Err(Error::Grid(format!(
                "need at least {MIN_NODES} nodes per direction, got {}x{}",
                self.nx, self.ny
            )));
        }
        Ok(())
    }

    /// Square-cell grid covering `[x_min, x_max] x [y_min, y_max]` with
    /// `pad` extra cells on every side.
    pub fn covering(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        spacing: f64,
        pad: usize,
    ) -> Result<Self> {
        let cells_x = cell_count(x_max - x_min, spacing)?;
        let cells_y = cell_count(y_max - y_min, spacing)?;
        let p = pad as f64 * spacing;
        let g = Grid2D::new(
            x_min - p,
            y_min - p,
            spacing,
            spacing,
            cells_x + 1 + 2 * pad,
            cells_y + 1 + 2 * pad,
        )?;
        g.require_stencil()?;
        Ok(g)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.dy
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x(i), self.y(j))
    }

    /// Index of the node nearest to `(x, y)` if it lies within `tol` cells of
    /// an actual node.
    pub fn node_at(&self, x: f64, y: f64, tol: f64) -> Option<(usize, usize)> {
        let fi = (x - self.x0) / self.dx;
        let fj = (y - self.y0) / self.dy;
        let (ri, rj) = (fi.round(), fj.round());
        if (fi - ri).abs() > tol || (fj - rj).abs() > tol || ri < 0.0 || rj < 0.0 {
            return None;
        }
        let (i, j) = (ri as usize, rj as usize);
        (i < self.nx && j < self.ny).then_some((i, j))
    }

    /// True when the node is on the outermost ring.
    #[inline]
    pub fn on_edge(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }
}

/// Number of cells of width `spacing` spanning `length`, which must be an
/// integer multiple of the spacing.
pub fn cell_count(length: f64, spacing: f64) -> Result<usize> {
    if !(length > 0.0 && spacing > 0.0) {
        return Err(Error::Grid(format!(
            "length {length} and spacing {spacing} must be positive"
        )));
    }
    let cells = length / spacing;
    let rounded = cells.round();
    if (cells - rounded).abs() > 1e-8 * rounded.max(1.0) {
        return Err(Error::Grid(format!(
            "length {length} is not a whole number of cells of width {spacing}"
        )));
    }
    Ok(rounded as usize)
}

/// One real value per grid node, row-major with `x` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid2D, value: f64) -> Self {
        ScalarField {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                values.push(f(grid.x(i), y));
            }
        }
        ScalarField { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    /// First non-finite node, if any.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.values
            .iter()
            .position(|v| !v.is_finite())
            .map(|k| self.grid.ij(k))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Centred-difference derivative in `x`, second-order one-sided on the
    /// left/right edges.
    pub fn ddx(&self, i: usize, j: usize) -> f64 {
        let g = &self.grid;
        let h = g.dx;
        if i == 0 {
            (-3.0 * self.at(0, j) + 4.0 * self.at(1, j) - self.at(2, j)) / (2.0 * h)
        } else if i + 1 == g.nx {
            (3.0 * self.at(i, j) - 4.0 * self.at(i - 1, j) + self.at(i - 2, j)) / (2.0 * h)
        } else {
            (self.at(i + 1, j) - self.at(i - 1, j)) / (2.0 * h)
        }
    }

    /// Centred-difference derivative in `y`, second-order one-sided on the
    /// bottom/top edges.
    pub fn ddy(&self, i: usize, j: usize) -> f64 {
        let g = &self.grid;
        let h = g.dy;
        if j == 0 {
            (-3.0 * self.at(i, 0) + 4.0 * self.at(i, 1) - self.at(i, 2)) / (2.0 * h)
        } else if j + 1 == g.ny {
            (3.0 * self.at(i, j) - 4.0 * self.at(i, j - 1) + self.at(i, j - 2)) / (2.0 * h)
        } else {
            (self.at(i, j + 1) - self.at(i, j - 1)) / (2.0 * h)
        }
    }
}

/// A pair of scalar fields sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField) -> Result<Self> {
        if x.grid() != y.grid() {
            return Err(Error::Grid("vector components live on different grids".into()));
        }
        Ok(VectorField { x, y })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        VectorField {
            x: ScalarField::zeros(grid),
            y: ScalarField::zeros(grid),
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        self.x.grid()
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x.at(i, j), self.y.at(i, j))
    }

    #[inline]
    pub fn at_index(&self, k: usize) -> (f64, f64) {
        (self.x.values()[k], self.y.values()[k])
    }
}
