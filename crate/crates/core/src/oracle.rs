//! Dense reference projector for small grids.
//!
//! The constraint matrix `C` maps a horizontal field to the divergence of
//! its vertical mean. It is assembled entry by entry from the stencil, not
//! through the calculus module. `P = I - U U^T` with `U` an orthonormal
//! basis of the row space of `C`, from a column-pivoted QR of `C^T`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::HVectorField;
use crate::grid::GridSpec;
use crate::helmholtz::decompose;
use crate::poisson::PoissonConfig;

/// Largest unknown count (`2 * n_cells`) accepted.
pub const ORACLE_MAX_UNKNOWNS: usize = 2 * 8 * 8 * 8;

/// Rows: footprint cells. Columns: `u.x` cells then `u.y` cells.
pub fn constraint_matrix(grid: &GridSpec) -> DMatrix<f64> {
    let n = grid.n_cells();
    let nc = grid.n_columns();
    let mut c = DMatrix::<f64>::zeros(nc, 2 * n);
    let avg = 1.0 / grid.nz as f64;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let row = grid.idx2(i, j);
            for k in 0..grid.nz {
                let cx = avg / (2.0 * grid.dx);
                // (u[i+1] - u[i-1]) / 2dx; a missing neighbour is the
                // reflected cell with its sign flipped.
                if i + 1 < grid.nx {
                    c[(row, grid.idx(i + 1, j, k))] += cx;
                } else {
                    c[(row, grid.idx(i, j, k))] -= cx;
                }
                if i > 0 {
                    c[(row, grid.idx(i - 1, j, k))] -= cx;
                } else {
                    c[(row, grid.idx(i, j, k))] += cx;
                }
                let cy = avg / (2.0 * grid.dy);
                if j + 1 < grid.ny {
                    c[(row, n + grid.idx(i, j + 1, k))] += cy;
                } else {
                    c[(row, n + grid.idx(i, j, k))] -= cy;
                }
                if j > 0 {
                    c[(row, n + grid.idx(i, j - 1, k))] -= cy;
                } else {
                    c[(row, n + grid.idx(i, j, k))] += cy;
                }
            }
        }
    }
    c
}

/// Orthogonal projector onto `ker C`.
pub fn dense_projector(grid: &GridSpec) -> Result<DMatrix<f64>> {
    let m = 2 * grid.n_cells();
    if m > ORACLE_MAX_UNKNOWNS {
        return Err(Error::InvalidArgument(format!(
            "dense oracle limited to {ORACLE_MAX_UNKNOWNS} unknowns, got {m}"
        )));
    }
    let qr = constraint_matrix(grid).transpose().col_piv_qr();
    let r = qr.r();
    let q = qr.q();
    let rmax = r.diagonal().amax();
    let tol = rmax * 1e-10 * m as f64;
    let rank = r.diagonal().iter().take_while(|d| d.abs() > tol).count();
    let basis = q.columns(0, rank);
    let p = DMatrix::<f64>::identity(m, m) - &basis * basis.transpose();
    Ok(p)
}

pub fn flatten(u: &HVectorField) -> DVector<f64> {
    DVector::from_iterator(
        2 * u.x.data.len(),
        u.x.data.iter().chain(&u.y.data).copied(),
    )
}

pub fn unflatten(template: &HVectorField, v: &DVector<f64>) -> HVectorField {
    let n = template.x.data.len();
    HVectorField {
        x: template.x.like(v.rows(0, n).iter().copied().collect()),
        y: template.y.like(v.rows(n, n).iter().copied().collect()),
    }
}

/// Agreement of [`decompose`] with the dense projector on one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleComparison {
    /// `|P_dense u - P u| / |u|`.
    pub projector_error: f64,
    /// `|<P u, grad q>| / |u|^2`.
    pub orthogonality: f64,
    /// `|<grad q1, grad q2>| / |u|^2`.
    pub split_orthogonality: f64,
    /// `|P P u - P u| / |u|`.
    pub idempotence: f64,
    /// `| |u|^2 - |P u|^2 - |grad q|^2 | / |u|^2`.
    pub pythagoras: f64,
    /// `max |d_z (P u) - d_z u|` over interior vertical differences.
    pub z_commutation: f64,
}

impl OracleComparison {
    pub fn worst(&self) -> f64 {
        [
            self.projector_error,
            self.orthogonality,
            self.split_orthogonality,
            self.idempotence,
            self.pythagoras,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn max_vertical_difference_gap(a: &HVectorField, b: &HVectorField) -> f64 {
    let g = a.grid();
    let nc = g.n_columns();
    let mut m = 0.0_f64;
    for (fa, fb) in [(&a.x, &b.x), (&a.y, &b.y)] {
        for idx in 0..g.n_cells() - nc {
            let da = fa.data[idx + nc] - fa.data[idx];
            let db = fb.data[idx + nc] - fb.data[idx];
            m = m.max(((da - db) / g.dz).abs());
        }
    }
    m
}

pub fn compare_with_oracle(
    u: &HVectorField,
    projector: &DMatrix<f64>,
    cfg: &PoissonConfig,
) -> Result<OracleComparison> {
    let d = decompose(u, cfg)?;
    let reference = unflatten(u, &(projector * flatten(u)));
    let un = u.norm_l2();
    let un2 = un * un;
    let safe = |x: f64, s: f64| if s > 0.0 { x / s } else { x };
    let grad = d.gradient_part();
    let g1 = crate::helmholtz::broadcast_gradient(&d.q1, u.bc());
    let g2 = crate::helmholtz::broadcast_gradient(&d.q2, u.bc());
    let ppu = decompose(&d.pu, cfg)?.pu;
    Ok(OracleComparison {
        projector_error: safe(reference.add_scaled(-1.0, &d.pu).norm_l2(), un),
        orthogonality: safe(d.pu.dot(&grad).abs(), un2),
        split_orthogonality: safe(g1.dot(&g2).abs(), un2),
        idempotence: safe(ppu.add_scaled(-1.0, &d.pu).norm_l2(), un),
        pythagoras: safe((un2 - d.pu.dot(&d.pu) - grad.dot(&grad)).abs(), un2),
        z_commutation: max_vertical_difference_gap(&d.pu, u),
    })
}
