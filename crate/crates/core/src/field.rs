//! Cell-centered field containers.

use crate::error::{Error, Result};
use crate::grid::{FieldBc, GridSpec};

/// Scalar on the 3D grid, tagged with the boundary conditions that its
/// ghost cells follow.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub data: Vec<f64>,
    pub bc: FieldBc,
}

impl ScalarField {
    pub fn new(grid: GridSpec, data: Vec<f64>, bc: FieldBc) -> Result<Self> {
        if data.len() != grid.n_cells() {
            return Err(Error::Shape(format!(
                "expected {} values for a {}x{}x{} grid, got {}",
                grid.n_cells(),
                grid.nx,
                grid.ny,
                grid.nz,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value {} at flat index {pos}",
                data[pos]
            )));
        }
        Ok(Self { grid, data, bc })
    }

    pub fn zeros(grid: GridSpec, bc: FieldBc) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.n_cells()],
            bc,
        }
    }

    pub fn constant(grid: GridSpec, bc: FieldBc, value: f64) -> Self {
        Self {
            grid,
            data: vec![value; grid.n_cells()],
            bc,
        }
    }

    /// Samples `f(x, y, z)` at cell centers.
    pub fn from_fn(grid: GridSpec, bc: FieldBc, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.n_cells());
        for k in 0..grid.nz {
            let z = grid.z(k);
            for j in 0..grid.ny {
                let y = grid.y(j);
                for i in 0..grid.nx {
                    data.push(f(grid.x(i), y, z));
                }
            }
        }
        Self { grid, data, bc }
    }

    /// Same values, different boundary tags.
    pub fn with_bc(mut self, bc: FieldBc) -> Self {
        self.bc = bc;
        self
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.grid.idx(i, j, k)]
    }

    /// Copy of `self` with the data replaced.
    pub fn like(&self, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            grid: self.grid,
            data,
            bc: self.bc,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        self.like(self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, a: f64, other: &ScalarField) -> Self {
        self.like(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| x + a * y)
                .collect(),
        )
    }

    pub fn axpy_in_place(&mut self, a: f64, other: &ScalarField) {
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    /// L2(Omega) inner product with midpoint quadrature.
    pub fn dot(&self, other: &ScalarField) -> f64 {
        self.grid.cell_volume() * dot(&self.data, &other.data)
    }

    /// Volume integral.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * self.data.iter().sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Horizontal vector field `(v1, v2)`; both components share a grid and
/// boundary tags.
#[derive(Debug, Clone, PartialEq)]
pub struct HVectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl HVectorField {
    pub fn new(x: ScalarField, y: ScalarField) -> Result<Self> {
        if x.grid != y.grid {
            return Err(Error::Shape("vector components on different grids".into()));
        }
        if x.bc != y.bc {
            return Err(Error::InvalidArgument(
                "vector components carry different boundary tags".into(),
            ));
        }
        Ok(Self { x, y })
    }

    pub fn zeros(grid: GridSpec, bc: FieldBc) -> Self {
        Self {
            x: ScalarField::zeros(grid, bc),
            y: ScalarField::zeros(grid, bc),
        }
    }

    pub fn from_fn(
        grid: GridSpec,
        bc: FieldBc,
        f: impl Fn(f64, f64, f64) -> (f64, f64),
    ) -> Self {
        Self {
            x: ScalarField::from_fn(grid, bc, |x, y, z| f(x, y, z).0),
            y: ScalarField::from_fn(grid, bc, |x, y, z| f(x, y, z).1),
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.x.grid
    }

    pub fn bc(&self) -> FieldBc {
        self.x.bc
    }

    pub fn with_bc(self, bc: FieldBc) -> Self {
        Self {
            x: self.x.with_bc(bc),
            y: self.y.with_bc(bc),
        }
    }

    /// `v_perp = (-v2, v1)`.
    pub fn perp(&self) -> Self {
        Self {
            x: self.y.scaled(-1.0),
            y: self.x.clone(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            x: self.x.scaled(s),
            y: self.y.scaled(s),
        }
    }

    pub fn add_scaled(&self, a: f64, other: &HVectorField) -> Self {
        Self {
            x: self.x.add_scaled(a, &other.x),
            y: self.y.add_scaled(a, &other.y),
        }
    }

    pub fn axpy_in_place(&mut self, a: f64, other: &HVectorField) {
        self.x.axpy_in_place(a, &other.x);
        self.y.axpy_in_place(a, &other.y);
    }

    pub fn dot(&self, other: &HVectorField) -> f64 {
        self.x.dot(&other.x) + self.y.dot(&other.y)
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.x.max_abs().max(self.y.max_abs())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Scalar on the horizontal footprint `D` of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub grid: GridSpec,
    pub data: Vec<f64>,
}

impl Field2D {
    pub fn new(grid: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.n_columns() {
            return Err(Error::Shape(format!(
                "expected {} values for a {}x{} footprint, got {}",
                grid.n_columns(),
                grid.nx,
                grid.ny,
                data.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.n_columns()],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.n_columns());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                data.push(f(grid.x(i), grid.y(j)));
            }
        }
        Self { grid, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.grid.idx2(i, j)]
    }

    pub fn like(&self, data: Vec<f64>) -> Self {
        Self {
            grid: self.grid,
            data,
        }
    }

    /// L2(D) inner product.
    pub fn dot(&self, other: &Field2D) -> f64 {
        self.grid.cell_area() * dot(&self.data, &other.data)
    }

    pub fn integral(&self) -> f64 {
        self.grid.cell_area() * self.data.iter().sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.like(self.data.iter().map(|v| s * v).collect())
    }

    pub fn add_scaled(&self, a: f64, other: &Field2D) -> Self {
        self.like(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| x + a * y)
                .collect(),
        )
    }

    /// Copies the footprint onto every vertical level.
    pub fn broadcast(&self, bc: FieldBc) -> ScalarField {
        let g = self.grid;
        let mut data = Vec::with_capacity(g.n_cells());
        for _ in 0..g.nz {
            data.extend_from_slice(&self.data);
        }
        ScalarField { grid: g, data, bc }
    }
}

/// Plain sequential dot product; the fixed order keeps reductions bitwise
/// reproducible.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
