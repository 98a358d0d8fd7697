//! Hydrostatic Helmholtz decomposition `u = P u + grad(q1 + q2)`.
//!
//! Potentials live on `D`. Their gradient is the centered difference with
//! mirror ghosts, and the divergence of the vertical mean is the centered
//! difference with sign-flipped ghosts, i.e. the flux divergence with zero
//! normal flux through `dD`. The two are exact negative adjoints, so the
//! Gram operator `K = div . grad` makes `P` the exact orthogonal projection
//! of the discrete `L2(Omega)` onto
//! `H1 = { u : div(mean_z u) = 0 }`.
//!
//! The gradient space splits into `G2 = grad(S0)`, where `S0` holds the
//! potentials that vanish on the outermost ring of cells, and its
//! complement `G1`, whose potentials are discretely harmonic away from that
//! ring. `q2` is the Galerkin solution on `S0`; `q1` carries the remaining
//! boundary-driven part.

use crate::calculus::{div_2d, free_grad3, grad_2d, vertical_average};
use crate::error::{Error, Result};
use crate::field::{Field2D, HVectorField, ScalarField};
use crate::grid::{Bc, FieldBc, GridSpec};
use crate::norms::lp_norm;
use crate::poisson::{solve_2d, PoissonConfig, SolveStats};

/// Discrete gradient of a potential on `D`.
pub fn potential_gradient(q: &Field2D) -> (Field2D, Field2D) {
    grad_2d(q, Bc::Neumann0)
}

/// Discrete divergence of a horizontal field on `D` (zero wall flux).
pub fn mean_divergence(ux: &Field2D, uy: &Field2D) -> Field2D {
    div_2d(ux, uy, Bc::Dirichlet0)
}

/// `-div(grad q)`: symmetric positive semidefinite, constants in the kernel.
/// Same operator as `mean_divergence . potential_gradient`, in one pass.
fn neg_gram(grid: GridSpec, x: &[f64], out: &mut [f64]) {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut gx = vec![0.0; x.len()];
    let mut gy = vec![0.0; x.len()];
    let (ax, ay) = (0.5 / grid.dx, 0.5 / grid.dy);
    for j in 0..ny {
        for i in 0..nx {
            let idx = i + nx * j;
            let c = x[idx];
            let xm = if i > 0 { x[idx - 1] } else { c };
            let xp = if i + 1 < nx { x[idx + 1] } else { c };
            let ym = if j > 0 { x[idx - nx] } else { c };
            let yp = if j + 1 < ny { x[idx + nx] } else { c };
            gx[idx] = (xp - xm) * ax;
            gy[idx] = (yp - ym) * ay;
        }
    }
    for j in 0..ny {
        for i in 0..nx {
            let idx = i + nx * j;
            let xm = if i > 0 { gx[idx - 1] } else { -gx[idx] };
            let xp = if i + 1 < nx { gx[idx + 1] } else { -gx[idx] };
            let ym = if j > 0 { gy[idx - nx] } else { -gy[idx] };
            let yp = if j + 1 < ny { gy[idx + nx] } else { -gy[idx] };
            out[idx] = -((xp - xm) * ax + (yp - ym) * ay);
        }
    }
}

fn ring_mask(grid: &GridSpec) -> Vec<bool> {
    let mut mask = vec![false; grid.n_columns()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            mask[grid.idx2(i, j)] = i == 0 || j == 0 || i + 1 == grid.nx || j + 1 == grid.ny;
        }
    }
    mask
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    /// `P u`, in `H1`.
    pub pu: HVectorField,
    /// Potential of the `G1` (harmonic) part, zero mean.
    pub q1: Field2D,
    /// Potential of the `G2` part, zero on the boundary ring.
    pub q2: Field2D,
    pub q1_stats: SolveStats,
    pub q2_stats: SolveStats,
}

impl DecompositionResult {
    /// `grad(q1 + q2)` broadcast over all levels.
    pub fn gradient_part(&self) -> HVectorField {
        let q = self.q1.add_scaled(1.0, &self.q2);
        broadcast_gradient(&q, self.pu.bc())
    }
}

/// `grad q` of a potential on `D`, copied to every level.
pub fn broadcast_gradient(q: &Field2D, bc: FieldBc) -> HVectorField {
    let (gx, gy) = potential_gradient(q);
    HVectorField {
        x: gx.broadcast(bc),
        y: gy.broadcast(bc),
    }
}

fn check_finite(u: &HVectorField) -> Result<()> {
    if u.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("non-finite field passed to the projector".into()))
    }
}

/// `Delta q2 = div(mean u)` with `q2` in `S0`.
pub fn solve_q2(ubar: (&Field2D, &Field2D), cfg: &PoissonConfig) -> Result<(Field2D, SolveStats)> {
    let grid = ubar.0.grid;
    let mask = ring_mask(&grid);
    let s = mean_divergence(ubar.0, ubar.1);
    let b: Vec<f64> = s
        .data
        .iter()
        .zip(&mask)
        .map(|(v, &ring)| if ring { 0.0 } else { -v })
        .collect();
    let mut tmp = vec![0.0; b.len()];
    let mut masked = vec![0.0; b.len()];
    let apply = |x: &[f64], out: &mut [f64]| {
        for ((m, v), &ring) in masked.iter_mut().zip(x).zip(&mask) {
            *m = if ring { 0.0 } else { *v };
        }
        neg_gram(grid, &masked, &mut tmp);
        for (((o, t), v), &ring) in out.iter_mut().zip(&tmp).zip(x).zip(&mask) {
            *o = if ring { *v } else { *t };
        }
    };
    let (x, stats) = solve_2d(apply, &b, None, false, cfg, "hydrostatic Dirichlet CG")?;
    Ok((s.like(x), stats))
}

/// Zero-mean `q` with `div(grad q) = rhs` (`rhs` must be a divergence).
fn solve_gram_neumann(rhs: &Field2D, cfg: &PoissonConfig) -> Result<(Field2D, SolveStats)> {
    let grid = rhs.grid;
    let b: Vec<f64> = rhs.data.iter().map(|v| -v).collect();
    let (x, stats) = solve_2d(
        |x, out| neg_gram(grid, x, out),
        &b,
        None,
        true,
        cfg,
        "hydrostatic Neumann CG",
    )?;
    Ok((rhs.like(x), stats))
}

/// Splits `u` into `P u + grad(q1 + q2)`.
pub fn decompose(u: &HVectorField, cfg: &PoissonConfig) -> Result<DecompositionResult> {
    check_finite(u)?;
    let ubar = (vertical_average(&u.x), vertical_average(&u.y));
    let (q2, q2_stats) = solve_q2((&ubar.0, &ubar.1), cfg)?;
    let (g2x, g2y) = potential_gradient(&q2);
    let remainder = mean_divergence(&ubar.0.add_scaled(-1.0, &g2x), &ubar.1.add_scaled(-1.0, &g2y));
    let (q1, q1_stats) = solve_gram_neumann(&remainder, cfg)?;
    let q = q1.add_scaled(1.0, &q2);
    let correction = broadcast_gradient(&q, u.bc());
    Ok(DecompositionResult {
        pu: u.add_scaled(-1.0, &correction),
        q1,
        q2,
        q1_stats,
        q2_stats,
    })
}

/// The hydrostatic Leray projector.
pub fn project(u: &HVectorField, cfg: &PoissonConfig) -> Result<HVectorField> {
    decompose(u, cfg).map(|d| d.pu)
}

/// Comparison of the single-potential correction with the split one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedSplitReport {
    /// `||grad q - grad(q1 + q2)||` in `L2(Omega)`.
    pub discrepancy: f64,
    pub combined_norm: f64,
    pub split_norm: f64,
    pub q1_gradient_norm: f64,
    pub q2_gradient_norm: f64,
    /// `|<grad q1, grad q2>|` in `L2(Omega)`.
    pub cross_term: f64,
}

/// Solves the single Neumann problem for the whole correction and compares
/// it with the two-step split.
pub fn combined_vs_split_check(
    u: &HVectorField,
    cfg: &PoissonConfig,
) -> Result<CombinedSplitReport> {
    let dec = decompose(u, cfg)?;
    let ubar = (vertical_average(&u.x), vertical_average(&u.y));
    let (q, _) = solve_gram_neumann(&mean_divergence(&ubar.0, &ubar.1), cfg)?;
    let bc = u.bc();
    let combined = broadcast_gradient(&q, bc);
    let split = dec.gradient_part();
    let g1 = broadcast_gradient(&dec.q1, bc);
    let g2 = broadcast_gradient(&dec.q2, bc);
    Ok(CombinedSplitReport {
        discrepancy: combined.add_scaled(-1.0, &split).norm_l2(),
        combined_norm: combined.norm_l2(),
        split_norm: split.norm_l2(),
        q1_gradient_norm: g1.norm_l2(),
        q2_gradient_norm: g2.norm_l2(),
        cross_term: g1.dot(&g2).abs(),
    })
}

/// Pointwise Frobenius norm of the full 3D gradient of a horizontal field,
/// computed without boundary tags.
pub fn gradient_magnitude(u: &HVectorField) -> ScalarField {
    let gx = free_grad3(&u.x);
    let gy = free_grad3(&u.y);
    let mut out = vec![0.0; u.x.data.len()];
    for d in gx.iter().chain(gy.iter()) {
        for (o, v) in out.iter_mut().zip(&d.data) {
            *o += v * v;
        }
    }
    u.x.like(out.into_iter().map(f64::sqrt).collect())
}

/// `||grad3(P u)||_r / (||u||_r + ||grad3 u||_r)` for `r` in `{2, 4}`.
pub fn projector_w1r_ratio(u: &HVectorField, r: f64, cfg: &PoissonConfig) -> Result<f64> {
    if r != 2.0 && r != 4.0 {
        return Err(Error::InvalidArgument(format!("r must be 2 or 4, got {r}")));
    }
    let pu = project(u, cfg)?;
    let speed = u.x.like(
        u.x.data
            .iter()
            .zip(&u.y.data)
            .map(|(a, b)| (a * a + b * b).sqrt())
            .collect(),
    );
    let num = lp_norm(&gradient_magnitude(&pu), r)?;
    let den = lp_norm(&speed, r)? + lp_norm(&gradient_magnitude(u), r)?;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}
