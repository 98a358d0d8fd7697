//! Second-order finite differences on the cell-centered grid.
//!
//! Stencils that reach past a boundary read a single ghost cell whose value
//! is `Bc::ghost_factor * interior`. The `free_*` variants take no boundary
//! tags and switch to one-sided second-order stencils at the boundary; they
//! are used for Sobolev norms of fields that carry no boundary conditions.

use crate::field::{Field2D, HVectorField, ScalarField};
use crate::grid::{Axis, Bc, FieldBc, GridSpec};

/// Neighbour values `phi(p + step)` along `axis`, with ghost values where
/// `p + step` leaves the grid. `step` is `+1` or `-1`.
fn shifted(
    data: &[f64],
    dims: [usize; 3],
    axis: usize,
    step: isize,
    factor_low: f64,
    factor_high: f64,
) -> Vec<f64> {
    let stride = match axis {
        0 => 1,
        1 => dims[0],
        _ => dims[0] * dims[1],
    };
    let n = dims[axis];
    let mut out = vec![0.0; data.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let p = (idx / stride) % n;
        *o = if step > 0 {
            if p + 1 == n {
                factor_high * data[idx]
            } else {
                data[idx + stride]
            }
        } else if p == 0 {
            factor_low * data[idx]
        } else {
            data[idx - stride]
        };
    }
    out
}

fn axis_index(axis: Axis) -> usize {
    match axis {
        Axis::X => 0,
        Axis::Y => 1,
        Axis::Z => 2,
    }
}

fn dims3(g: &GridSpec) -> [usize; 3] {
    [g.nx, g.ny, g.nz]
}

fn dims2(g: &GridSpec) -> [usize; 3] {
    [g.nx, g.ny, 1]
}

fn factors(bc: &FieldBc, axis: Axis, spacing: f64) -> (f64, f64) {
    (
        bc.face(axis, true).ghost_factor(spacing),
        bc.face(axis, false).ghost_factor(spacing),
    )
}

/// Neighbour of every cell along `axis`, ghost-filled per the field's tags.
pub fn neighbor(phi: &ScalarField, axis: Axis, step: isize) -> Vec<f64> {
    let g = &phi.grid;
    let (lo, hi) = factors(&phi.bc, axis, g.spacing(axis));
    shifted(&phi.data, dims3(g), axis_index(axis), step, lo, hi)
}

/// Centered first derivative along `axis`.
pub fn diff(phi: &ScalarField, axis: Axis) -> ScalarField {
    let plus = neighbor(phi, axis, 1);
    let minus = neighbor(phi, axis, -1);
    let inv = 0.5 / phi.grid.spacing(axis);
    phi.like(
        plus.iter()
            .zip(&minus)
            .map(|(p, m)| (p - m) * inv)
            .collect(),
    )
}

/// Three-point second derivative along `axis`.
pub fn diff2(phi: &ScalarField, axis: Axis) -> ScalarField {
    let plus = neighbor(phi, axis, 1);
    let minus = neighbor(phi, axis, -1);
    let d = phi.grid.spacing(axis);
    let inv = 1.0 / (d * d);
    phi.like(
        phi.data
            .iter()
            .zip(plus.iter().zip(&minus))
            .map(|(c, (p, m))| (p - 2.0 * c + m) * inv)
            .collect(),
    )
}

pub fn grad_h(phi: &ScalarField) -> HVectorField {
    HVectorField {
        x: diff(phi, Axis::X),
        y: diff(phi, Axis::Y),
    }
}

/// Horizontal divergence. With Dirichlet lateral tags this is the discrete
/// flux divergence with zero normal flux through the side walls.
pub fn div_h(u: &HVectorField) -> ScalarField {
    let dx = diff(&u.x, Axis::X);
    let dy = diff(&u.y, Axis::Y);
    dx.add_scaled(1.0, &dy).with_bc(FieldBc::neumann())
}

pub fn d_z(phi: &ScalarField) -> ScalarField {
    diff(phi, Axis::Z)
}

pub fn d_zz(phi: &ScalarField) -> ScalarField {
    diff2(phi, Axis::Z)
}

pub fn laplacian_h(phi: &ScalarField) -> ScalarField {
    diff2(phi, Axis::X).add_scaled(1.0, &diff2(phi, Axis::Y))
}

/// `(1/h) int_{-h}^0 phi dz` by the midpoint rule.
pub fn vertical_average(phi: &ScalarField) -> Field2D {
    let g = phi.grid;
    let nc = g.n_columns();
    let mut out = vec![0.0; nc];
    for k in 0..g.nz {
        let layer = &phi.data[k * nc..(k + 1) * nc];
        for (o, v) in out.iter_mut().zip(layer) {
            *o += v;
        }
    }
    let inv = 1.0 / g.nz as f64;
    for o in &mut out {
        *o *= inv;
    }
    Field2D { grid: g, data: out }
}

/// Top-anchored cumulative integral `int_z^0 phi d xi` at cell centers,
/// together with the full-depth integral (the value at the bottom face).
pub fn integral_from_top(phi: &ScalarField) -> (ScalarField, Field2D) {
    let g = phi.grid;
    let nc = g.n_columns();
    let mut out = vec![0.0; g.n_cells()];
    let mut face = vec![0.0; nc];
    for k in (0..g.nz).rev() {
        for c in 0..nc {
            let v = phi.data[k * nc + c];
            out[k * nc + c] = face[c] + 0.5 * g.dz * v;
            face[c] += g.dz * v;
        }
    }
    (
        phi.like(out).with_bc(FieldBc::neumann()),
        Field2D { grid: g, data: face },
    )
}

/// Centered 2D gradient of a potential on `D` with the given lateral ghost rule.
pub fn grad_2d(q: &Field2D, lateral: Bc) -> (Field2D, Field2D) {
    let g = &q.grid;
    let component = |a: usize, spacing: f64| {
        let f = lateral.ghost_factor(spacing);
        let plus = shifted(&q.data, dims2(g), a, 1, f, f);
        let minus = shifted(&q.data, dims2(g), a, -1, f, f);
        let inv = 0.5 / spacing;
        q.like(plus.iter().zip(&minus).map(|(p, m)| (p - m) * inv).collect())
    };
    (component(0, g.dx), component(1, g.dy))
}

/// Centered 2D divergence of `(ux, uy)` on `D` with the given lateral ghost rule.
pub fn div_2d(ux: &Field2D, uy: &Field2D, lateral: Bc) -> Field2D {
    let g = &ux.grid;
    let mut out = vec![0.0; g.n_columns()];
    for (a, comp) in [(0usize, ux), (1usize, uy)] {
        let spacing = if a == 0 { g.dx } else { g.dy };
        let f = lateral.ghost_factor(spacing);
        let plus = shifted(&comp.data, dims2(g), a, 1, f, f);
        let minus = shifted(&comp.data, dims2(g), a, -1, f, f);
        let inv = 0.5 / spacing;
        for ((o, p), m) in out.iter_mut().zip(&plus).zip(&minus) {
            *o += (p - m) * inv;
        }
    }
    ux.like(out)
}

/// Compact five-point Laplacian on `D` with homogeneous ghost rule `lateral`.
pub fn laplacian_2d(q: &Field2D, lateral: Bc) -> Field2D {
    let g = &q.grid;
    let mut out = vec![0.0; g.n_columns()];
    for a in [0usize, 1] {
        let spacing = if a == 0 { g.dx } else { g.dy };
        let f = lateral.ghost_factor(spacing);
        let plus = shifted(&q.data, dims2(g), a, 1, f, f);
        let minus = shifted(&q.data, dims2(g), a, -1, f, f);
        let inv = 1.0 / (spacing * spacing);
        for (((o, c), p), m) in out.iter_mut().zip(&q.data).zip(&plus).zip(&minus) {
            *o += (p - 2.0 * c + m) * inv;
        }
    }
    q.like(out)
}

/// One-sided-at-the-boundary first derivative along `axis` of raw grid data
/// with dimensions `dims`. Second order everywhere; needs `n >= 3`.
pub fn free_diff_raw(data: &[f64], dims: [usize; 3], axis: usize, spacing: f64) -> Vec<f64> {
    let stride = match axis {
        0 => 1,
        1 => dims[0],
        _ => dims[0] * dims[1],
    };
    let n = dims[axis];
    let inv = 0.5 / spacing;
    let mut out = vec![0.0; data.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let p = (idx / stride) % n;
        *o = if p == 0 {
            (-3.0 * data[idx] + 4.0 * data[idx + stride] - data[idx + 2 * stride]) * inv
        } else if p + 1 == n {
            (3.0 * data[idx] - 4.0 * data[idx - stride] + data[idx - 2 * stride]) * inv
        } else {
            (data[idx + stride] - data[idx - stride]) * inv
        };
    }
    out
}

/// Boundary-agnostic derivative of a 3D field.
pub fn free_diff(phi: &ScalarField, axis: Axis) -> ScalarField {
    let g = &phi.grid;
    phi.like(free_diff_raw(
        &phi.data,
        dims3(g),
        axis_index(axis),
        g.spacing(axis),
    ))
}

/// `(d_x, d_y, d_z)` without boundary tags.
pub fn free_grad3(phi: &ScalarField) -> [ScalarField; 3] {
    [
        free_diff(phi, Axis::X),
        free_diff(phi, Axis::Y),
        free_diff(phi, Axis::Z),
    ]
}
