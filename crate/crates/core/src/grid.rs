//! Uniform cell-centered grid on the cylinder `D x (-h, 0)` with
//! `D = [0, lx] x [0, ly]`, plus the boundary-condition tags used by the
//! ghost-cell stencils.
//!
//! Cell `(i, j, k)` has its center at `((i + 1/2) dx, (j + 1/2) dy, -h + (k + 1/2) dz)`,
//! so `k = 0` is the bottom layer and `k = nz - 1` touches the surface `z = 0`.
//! Storage is x-fastest: `idx = i + nx * (j + ny * k)`.

use crate::error::{Error, Result};

/// Minimum number of cells along every axis.
pub const MIN_CELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lx: f64,
    pub ly: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl GridSpec {
    pub fn new(lx: f64, ly: f64, h: f64, nx: usize, ny: usize, nz: usize) -> Result<Self> {
        for (name, value) in [("lx", lx), ("ly", ly), ("h", h)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Grid(format!("{name} must be positive, got {value}")));
            }
        }
        for (name, n) in [("nx", nx), ("ny", ny), ("nz", nz)] {
            if n < MIN_CELLS {
                return Err(Error::Grid(format!(
                    "{name} must be at least {MIN_CELLS}, got {n}"
                )));
            }
        }
        Ok(Self {
            lx,
            ly,
            h,
            nx,
            ny,
            nz,
            dx: lx / nx as f64,
            dy: ly / ny as f64,
            dz: h / nz as f64,
        })
    }

    /// Same geometry, every cell count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(
            self.lx,
            self.ly,
            self.h,
            self.nx * factor,
            self.ny * factor,
            self.nz * factor,
        )
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    #[inline]
    pub fn n_columns(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    #[inline]
    pub fn idx2(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dy
    }

    #[inline]
    pub fn z(&self, k: usize) -> f64 {
        -self.h + (k as f64 + 0.5) * self.dz
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dy * self.dz
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn volume(&self) -> f64 {
        self.lx * self.ly * self.h
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn same_shape(&self, other: &GridSpec) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.nz == other.nz
    }

    pub fn spacing(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.dx,
            Axis::Y => self.dy,
            Axis::Z => self.dz,
        }
    }

    pub fn len(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.nx,
            Axis::Y => self.ny,
            Axis::Z => self.nz,
        }
    }

    /// Distance in the flat storage between neighbours along `axis`.
    pub fn stride(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => 1,
            Axis::Y => self.nx,
            Axis::Z => self.nx * self.ny,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
    pub const HORIZONTAL: [Axis; 2] = [Axis::X, Axis::Y];
}

/// Homogeneous boundary condition on one face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bc {
    Dirichlet0,
    Neumann0,
    /// `d_n phi + alpha phi = 0` with `alpha >= 0`.
    Robin(f64),
}

impl Bc {
    /// Ghost value is `factor * interior`.
    ///
    /// Dirichlet mirrors with a sign flip, Neumann mirrors, and Robin solves
    /// `(g - p)/d + alpha (g + p)/2 = 0` collocated at the face midpoint.
    #[inline]
    pub fn ghost_factor(self, spacing: f64) -> f64 {
        match self {
            Bc::Dirichlet0 => -1.0,
            Bc::Neumann0 => 1.0,
            Bc::Robin(alpha) => {
                let s = 0.5 * alpha * spacing;
                (1.0 - s) / (1.0 + s)
            }
        }
    }
}

/// Boundary tags carried by a field: one kind for all lateral faces
/// `(x, y) in dD`, one for the bottom `z = -h`, one for the top `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldBc {
    pub lateral: Bc,
    pub bottom: Bc,
    pub top: Bc,
}

impl FieldBc {
    /// `v = 0` on the side walls and bottom, `v_z + alpha1 v = 0` on top.
    pub fn velocity(alpha1: f64) -> Self {
        Self {
            lateral: Bc::Dirichlet0,
            bottom: Bc::Dirichlet0,
            top: Bc::Robin(alpha1),
        }
    }

    /// Insulated side walls and bottom, `theta_z + alpha2 theta = 0` on top.
    pub fn temperature(alpha2: f64) -> Self {
        Self {
            lateral: Bc::Neumann0,
            bottom: Bc::Neumann0,
            top: Bc::Robin(alpha2),
        }
    }

    /// Mirror ghosts everywhere; used for potentials and diagnostics.
    pub fn neumann() -> Self {
        Self {
            lateral: Bc::Neumann0,
            bottom: Bc::Neumann0,
            top: Bc::Neumann0,
        }
    }

    pub fn dirichlet() -> Self {
        Self {
            lateral: Bc::Dirichlet0,
            bottom: Bc::Dirichlet0,
            top: Bc::Dirichlet0,
        }
    }

    /// Condition on the low (`low = true`) or high face along `axis`.
    #[inline]
    pub fn face(&self, axis: Axis, low: bool) -> Bc {
        match axis {
            Axis::X | Axis::Y => self.lateral,
            Axis::Z => {
                if low {
                    self.bottom
                } else {
                    self.top
                }
            }
        }
    }
}

/// The fixed physical boundary-condition sets, parameterised by the two
/// surface Robin coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcSet {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl BcSet {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<Self> {
        if !(alpha1 >= 0.0 && alpha1.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "alpha1 must be >= 0, got {alpha1}"
            )));
        }
        if !(alpha2 >= 0.0 && alpha2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "alpha2 must be >= 0, got {alpha2}"
            )));
        }
        Ok(Self { alpha1, alpha2 })
    }

    pub fn velocity(&self) -> FieldBc {
        FieldBc::velocity(self.alpha1)
    }

    pub fn temperature(&self) -> FieldBc {
        FieldBc::temperature(self.alpha2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacings_are_exact_quotients() {
        let g = GridSpec::new(1.0, 2.0, 0.5, 8, 10, 6).unwrap();
        assert_eq!(g.dx, 1.0 / 8.0);
        assert_eq!(g.dy, 2.0 / 10.0);
        assert_eq!(g.dz, 0.5 / 6.0);
        assert_eq!(g.n_cells(), 480);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(GridSpec::new(0.0, 1.0, 1.0, 4, 4, 4).is_err());
        assert!(GridSpec::new(1.0, 1.0, -1.0, 4, 4, 4).is_err());
        assert!(GridSpec::new(1.0, 1.0, 1.0, 3, 4, 4).is_err());
        assert!(GridSpec::new(1.0, f64::NAN, 1.0, 4, 4, 4).is_err());
    }

    #[test]
    fn cell_centers() {
        let g = GridSpec::new(1.0, 1.0, 0.5, 4, 4, 4).unwrap();
        assert!((g.x(0) - 0.125).abs() < 1e-15);
        assert!((g.z(0) + 0.5 - 0.0625).abs() < 1e-15);
        assert!((g.z(3) + 0.0625).abs() < 1e-15);
        assert_eq!(g.idx(1, 2, 3), 1 + 4 * (2 + 4 * 3));
    }

    #[test]
    fn robin_ghost_satisfies_face_relation() {
        let (alpha, d, p) = (2.5, 0.1, 0.7);
        let g = Bc::Robin(alpha).ghost_factor(d) * p;
        let residual = (g - p) / d + alpha * (g + p) / 2.0;
        assert!(residual.abs() < 1e-14);
        assert_eq!(Bc::Robin(0.0).ghost_factor(d), 1.0);
    }

    #[test]
    fn negative_robin_rejected() {
        assert!(BcSet::new(-1.0, 0.0).is_err());
        assert!(BcSet::new(0.0, -0.5).is_err());
        assert!(BcSet::new(0.0, 0.0).is_ok());
    }
}
