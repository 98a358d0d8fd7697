//! Two-dimensional Poisson solves on `D` and the conjugate-gradient engine
//! shared by every symmetric solve in the crate.

use nalgebra::{DMatrix, DVector};

use crate::calculus::laplacian_2d;
use crate::error::{Error, Result};
use crate::field::{dot, Field2D};
use crate::grid::Bc;

/// Largest footprint for which `PoissonMethod::Dense` is accepted.
pub const DENSE_MAX_UNKNOWNS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonMethod {
    Cg,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonConfig {
    pub method: PoissonMethod,
    pub rel_tol: f64,
    /// `None` means `10 * nx * ny`.
    pub max_iter: Option<usize>,
}

impl Default for PoissonConfig {
    fn default() -> Self {
        Self {
            method: PoissonMethod::Cg,
            rel_tol: 1e-10,
            max_iter: None,
        }
    }
}

impl PoissonConfig {
    pub fn with_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self, unknowns: usize) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if self.method == PoissonMethod::Dense && unknowns > DENSE_MAX_UNKNOWNS {
            return Err(Error::InvalidArgument(format!(
                "dense Poisson solve limited to {DENSE_MAX_UNKNOWNS} unknowns, got {unknowns}"
            )));
        }
        if self.max_iter == Some(0) {
            return Err(Error::InvalidArgument("max_iter must be positive".into()));
        }
        Ok(())
    }

    pub fn iteration_cap(&self, unknowns: usize) -> usize {
        self.max_iter.unwrap_or(10 * unknowns)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final `||b - A x|| / ||b||` (zero when `b = 0`).
    pub residual: f64,
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= m;
    }
}

/// Conjugate gradients for `A x = b` with `A` symmetric positive definite,
/// or positive semidefinite with the constants as null space when
/// `constant_nullspace` is set (then `b` and `x` are kept mean-free).
///
/// `x` holds the initial guess on entry.
pub fn conjugate_gradient(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
    constant_nullspace: bool,
    solver: &'static str,
) -> Result<SolveStats> {
    let n = b.len();
    let mut rhs = b.to_vec();
    if constant_nullspace {
        remove_mean(&mut rhs);
        remove_mean(x);
    }
    let b_norm = dot(&rhs, &rhs).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats::default());
    }
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    if constant_nullspace {
        remove_mean(&mut r);
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let target = rel_tol * b_norm;
    let mut it = 0;
    while rr.sqrt() > target {
        if it == max_iter {
            return Err(Error::NoConvergence {
                solver,
                iterations: it,
                residual: rr.sqrt() / b_norm,
            });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NoConvergence {
                solver,
                iterations: it,
                residual: rr.sqrt() / b_norm,
            });
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if constant_nullspace {
            remove_mean(&mut r);
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        it += 1;
    }
    if constant_nullspace {
        remove_mean(x);
    }
    Ok(SolveStats {
        iterations: it,
        residual: rr.sqrt() / b_norm,
    })
}

/// Dense fallback: assembles `A` column by column from `apply` and solves
/// by LU, or, for a constant null space, the system bordered with the
/// zero-mean constraint.
pub fn dense_solve(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    constant_nullspace: bool,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = b.len();
    let m = if constant_nullspace { n + 1 } else { n };
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        apply(&e, &mut col);
        for i in 0..n {
            a[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    let mut rhs = DVector::<f64>::zeros(m);
    let mut bb = b.to_vec();
    if constant_nullspace {
        remove_mean(&mut bb);
        for i in 0..n {
            a[(i, n)] = 1.0;
            a[(n, i)] = 1.0;
        }
    }
    for i in 0..n {
        rhs[i] = bb[i];
    }
    let sol = a.clone().lu().solve(&rhs).ok_or(Error::NoConvergence {
        solver: "dense LU",
        iterations: 0,
        residual: f64::INFINITY,
    })?;
    let x: Vec<f64> = sol.iter().take(n).copied().collect();
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let b_norm = dot(&bb, &bb).sqrt();
    let res: f64 = ax
        .iter()
        .zip(&bb)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok((
        x,
        SolveStats {
            iterations: 1,
            residual: if b_norm > 0.0 { res / b_norm } else { res },
        },
    ))
}

/// Runs the configured method on an operator over `D`.
pub(crate) fn solve_2d(
    apply: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    guess: Option<&[f64]>,
    constant_nullspace: bool,
    cfg: &PoissonConfig,
    solver: &'static str,
) -> Result<(Vec<f64>, SolveStats)> {
    cfg.validate(b.len())?;
    match cfg.method {
        PoissonMethod::Dense => dense_solve(apply, b, constant_nullspace),
        PoissonMethod::Cg => {
            let mut x = guess.map_or_else(|| vec![0.0; b.len()], <[f64]>::to_vec);
            let stats = conjugate_gradient(
                apply,
                b,
                &mut x,
                cfg.rel_tol,
                cfg.iteration_cap(b.len()),
                constant_nullspace,
                solver,
            )?;
            Ok((x, stats))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSolution {
    pub q: Field2D,
    pub stats: SolveStats,
    /// `int_D f - oint g` before the mean defect was removed (Neumann only).
    pub compatibility_defect: f64,
}

/// `Delta q = f` on `D`, `q = 0` on `dD`, compact five-point stencil.
pub fn solve_poisson_dirichlet(f: &Field2D, cfg: &PoissonConfig) -> Result<PoissonSolution> {
    check_finite(f)?;
    let g = f.grid;
    let b: Vec<f64> = f.data.iter().map(|v| -v).collect();
    let apply = |x: &[f64], out: &mut [f64]| {
        let lap = laplacian_2d(&Field2D { grid: g, data: x.to_vec() }, Bc::Dirichlet0);
        for (o, l) in out.iter_mut().zip(&lap.data) {
            *o = -l;
        }
    };
    let (x, stats) = solve_2d(apply, &b, None, false, cfg, "Dirichlet Poisson CG")?;
    Ok(PoissonSolution {
        q: f.like(x),
        stats,
        compatibility_defect: 0.0,
    })
}

/// Outward normal derivative `d_n q` at the face midpoints of each side of
/// the rectangle. `west`/`east` have `ny` entries, `south`/`north` have `nx`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannData {
    pub west: Vec<f64>,
    pub east: Vec<f64>,
    pub south: Vec<f64>,
    pub north: Vec<f64>,
}

impl NeumannData {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            west: vec![0.0; ny],
            east: vec![0.0; ny],
            south: vec![0.0; nx],
            north: vec![0.0; nx],
        }
    }

    /// `oint g ds` by the midpoint rule.
    pub fn boundary_integral(&self, dx: f64, dy: f64) -> f64 {
        let ew: f64 = self.west.iter().chain(&self.east).sum();
        let sn: f64 = self.south.iter().chain(&self.north).sum();
        ew * dy + sn * dx
    }
}

/// `Delta q = f` on `D` with `d_n q = g` on `dD`; compact five-point stencil
/// with ghost `q_ghost = q_in + g * spacing`.
///
/// An incompatible pair is made compatible by subtracting the mean defect
/// from `f`; the defect is returned. The solution has zero mean.
pub fn solve_poisson_neumann(
    f: &Field2D,
    g: &NeumannData,
    cfg: &PoissonConfig,
) -> Result<PoissonSolution> {
    check_finite(f)?;
    let grid = f.grid;
    let (nx, ny) = (grid.nx, grid.ny);
    if g.west.len() != ny || g.east.len() != ny || g.south.len() != nx || g.north.len() != nx {
        return Err(Error::Shape("Neumann data does not match the footprint".into()));
    }
    let mut rhs = f.data.clone();
    for j in 0..ny {
        rhs[grid.idx2(0, j)] -= g.west[j] / grid.dx;
        rhs[grid.idx2(nx - 1, j)] -= g.east[j] / grid.dx;
    }
    for i in 0..nx {
        rhs[grid.idx2(i, 0)] -= g.south[i] / grid.dy;
        rhs[grid.idx2(i, ny - 1)] -= g.north[i] / grid.dy;
    }
    // sum(rhs) * area = int f - oint g
    let compatibility_defect = rhs.iter().sum::<f64>() * grid.cell_area();
    let b: Vec<f64> = rhs.iter().map(|v| -v).collect();
    let apply = |x: &[f64], out: &mut [f64]| {
        let lap = laplacian_2d(&Field2D { grid, data: x.to_vec() }, Bc::Neumann0);
        for (o, l) in out.iter_mut().zip(&lap.data) {
            *o = -l;
        }
    };
    let (x, stats) = solve_2d(apply, &b, None, true, cfg, "Neumann Poisson CG")?;
    Ok(PoissonSolution {
        q: f.like(x),
        stats,
        compatibility_defect,
    })
}

fn check_finite(f: &Field2D) -> Result<()> {
    if f.data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument("non-finite Poisson right-hand side".into()))
    }
}
