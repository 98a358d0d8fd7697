//! Discrete operators of the primitive equations: the anisotropic elliptic
//! operators and their bilinear forms, the hydrostatic Stokes operator,
//! the diagnosed vertical velocity and the explicit tendencies.

use crate::calculus::{div_h, grad_h, integral_from_top, neighbor};
use crate::error::{Error, Result};
use crate::field::{Field2D, HVectorField, ScalarField};
use crate::grid::{Axis, FieldBc, GridSpec};
use crate::helmholtz::project;
use crate::poisson::PoissonConfig;

/// Physical coefficients and the time-independent heat source.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysParams {
    pub nu1: f64,
    pub mu1: f64,
    pub nu2: f64,
    pub mu2: f64,
    pub f0: f64,
    pub beta: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub q: ScalarField,
}

impl PhysParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("nu1", self.nu1),
            ("mu1", self.mu1),
            ("nu2", self.nu2),
            ("mu2", self.mu2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [("alpha1", self.alpha1), ("alpha2", self.alpha2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.f0.is_finite() && self.beta.is_finite()) {
            return Err(Error::InvalidArgument("Coriolis parameters must be finite".into()));
        }
        if !self.q.is_finite() {
            return Err(Error::InvalidArgument("heat source must be finite".into()));
        }
        Ok(())
    }

    /// Desk-scale defaults: `nu = mu = 1e-2`, `f0 = 1`, `beta = 0.5`,
    /// `alpha1 = alpha2 = 1`, no heating.
    pub fn desk_defaults(grid: GridSpec) -> Self {
        Self {
            nu1: 1e-2,
            mu1: 1e-2,
            nu2: 1e-2,
            mu2: 1e-2,
            f0: 1.0,
            beta: 0.5,
            alpha1: 1.0,
            alpha2: 1.0,
            q: ScalarField::zeros(grid, FieldBc::temperature(1.0)),
        }
    }

    pub fn velocity_bc(&self) -> FieldBc {
        FieldBc::velocity(self.alpha1)
    }

    pub fn temperature_bc(&self) -> FieldBc {
        FieldBc::temperature(self.alpha2)
    }

    /// `f(y) = f0 (beta + y)`.
    pub fn coriolis(&self, y: f64) -> f64 {
        self.f0 * (self.beta + y)
    }
}

/// `-nu Delta - mu d_z^2` on one scalar, ghost rules from its tags.
pub fn anisotropic_laplacian(phi: &ScalarField, nu: f64, mu: f64) -> ScalarField {
    let mut out = vec![0.0; phi.data.len()];
    anisotropic_laplacian_into(&phi.grid, &phi.bc, nu, mu, &phi.data, &mut out);
    phi.like(out)
}

/// Single-pass kernel behind [`anisotropic_laplacian`] for raw cell data.
pub fn anisotropic_laplacian_into(
    g: &GridSpec,
    bc: &FieldBc,
    nu: f64,
    mu: f64,
    x: &[f64],
    out: &mut [f64],
) {
    let ghost = |axis: Axis, spacing: f64| {
        (
            bc.face(axis, true).ghost_factor(spacing),
            bc.face(axis, false).ghost_factor(spacing),
        )
    };
    let (xl, xh) = ghost(Axis::X, g.dx);
    let (yl, yh) = ghost(Axis::Y, g.dy);
    let (zl, zh) = ghost(Axis::Z, g.dz);
    let cx = nu / (g.dx * g.dx);
    let cy = nu / (g.dy * g.dy);
    let cz = mu / (g.dz * g.dz);
    let (nx, ny, nz) = (g.nx, g.ny, g.nz);
    let plane = nx * ny;
    for k in 0..nz {
        for j in 0..ny {
            let row = nx * (j + ny * k);
            for i in 0..nx {
                let idx = row + i;
                let c = x[idx];
                let xm = if i > 0 { x[idx - 1] } else { xl * c };
                let xp = if i + 1 < nx { x[idx + 1] } else { xh * c };
                let ym = if j > 0 { x[idx - nx] } else { yl * c };
                let yp = if j + 1 < ny { x[idx + nx] } else { yh * c };
                let zm = if k > 0 { x[idx - plane] } else { zl * c };
                let zp = if k + 1 < nz { x[idx + plane] } else { zh * c };
                out[idx] = -cx * (xp - 2.0 * c + xm)
                    - cy * (yp - 2.0 * c + ym)
                    - cz * (zp - 2.0 * c + zm);
            }
        }
    }
}

pub fn apply_l1(v: &HVectorField, p: &PhysParams) -> HVectorField {
    HVectorField {
        x: anisotropic_laplacian(&v.x, p.nu1, p.mu1),
        y: anisotropic_laplacian(&v.y, p.nu1, p.mu1),
    }
}

pub fn apply_l2(theta: &ScalarField, p: &PhysParams) -> ScalarField {
    anisotropic_laplacian(theta, p.nu2, p.mu2)
}

/// Face-sum form of `-<(nu d_xx + nu d_yy + mu d_zz) phi, eta>`.
///
/// Interior faces contribute `(jump phi)(jump eta)/d^2`; a boundary face
/// with ghost factor `r` contributes `(1 - r) phi eta / d^2`. On the Robin
/// top face that is `alpha / (1 + alpha dz/2)` per unit area, the
/// face-collocated `alpha int_{Gamma_t} phi eta`.
pub fn scalar_form(phi: &ScalarField, eta: &ScalarField, nu: f64, mu: f64) -> f64 {
    let g = phi.grid;
    let mut total = 0.0;
    for axis in Axis::ALL {
        let coeff = if axis == Axis::Z { mu } else { nu };
        let d = g.spacing(axis);
        let n = g.len(axis);
        let stride = g.stride(axis);
        let r_lo = phi.bc.face(axis, true).ghost_factor(d);
        let r_hi = phi.bc.face(axis, false).ghost_factor(d);
        let mut s = 0.0;
        for idx in 0..g.n_cells() {
            let p = (idx / stride) % n;
            if p + 1 < n {
                let dp = phi.data[idx + stride] - phi.data[idx];
                let de = eta.data[idx + stride] - eta.data[idx];
                s += dp * de;
            } else {
                s += (1.0 - r_hi) * phi.data[idx] * eta.data[idx];
            }
            if p == 0 {
                s += (1.0 - r_lo) * phi.data[idx] * eta.data[idx];
            }
        }
        total += coeff * s / (d * d);
    }
    total * g.cell_volume()
}

/// Surface Robin part of a form: `alpha mu int_{Gamma_t} phi eta` with the
/// face-collocation factor.
pub fn robin_surface_term(phi: &ScalarField, eta: &ScalarField, mu: f64) -> f64 {
    let g = phi.grid;
    let r = phi.bc.top.ghost_factor(g.dz);
    let nc = g.n_columns();
    let top = (g.nz - 1) * nc;
    let s: f64 = (0..nc)
        .map(|c| phi.data[top + c] * eta.data[top + c])
        .sum();
    mu * (1.0 - r) / g.dz * s * g.cell_area()
}

pub fn bilinear_a1(v: &HVectorField, u: &HVectorField, p: &PhysParams) -> f64 {
    scalar_form(&v.x, &u.x, p.nu1, p.mu1) + scalar_form(&v.y, &u.y, p.nu1, p.mu1)
}

pub fn bilinear_a2(theta: &ScalarField, eta: &ScalarField, p: &PhysParams) -> f64 {
    scalar_form(theta, eta, p.nu2, p.mu2)
}

/// Hydrostatic Stokes operator `A1 = P L1`.
pub fn apply_a1(v: &HVectorField, p: &PhysParams, cfg: &PoissonConfig) -> Result<HVectorField> {
    project(&apply_l1(v, p), cfg)
}

/// `A2 = L2`; temperature carries no constraint.
pub fn apply_a2(theta: &ScalarField, p: &PhysParams) -> ScalarField {
    apply_l2(theta, p)
}

/// Vertical velocity diagnosed from continuity.
#[derive(Debug, Clone, PartialEq)]
pub struct WDiagnosis {
    /// `w = int_z^0 div v` at cell centers.
    pub w: ScalarField,
    /// `w` on the bottom face `z = -h`; vanishes iff `div(mean v) = 0`.
    pub bottom: Field2D,
    /// `L2(D)` norm of `bottom`.
    pub bottom_defect: f64,
}

pub fn diagnose_w(v: &HVectorField) -> WDiagnosis {
    let div = div_h(v);
    let (w, bottom) = integral_from_top(&div);
    let bottom_defect = bottom.dot(&bottom).sqrt();
    WDiagnosis {
        w,
        bottom,
        bottom_defect,
    }
}

/// Face-normal transport velocities: horizontal faces take the average of
/// the two adjacent cells (zero on the side walls), vertical faces the
/// top-anchored integral of the horizontal divergence. The discrete 3D
/// divergence of these face velocities vanishes identically.
#[derive(Debug, Clone)]
pub struct FaceVelocities {
    grid: GridSpec,
    /// `u[idx]` is the velocity on the high-x face of cell `idx`.
    u: Vec<f64>,
    v: Vec<f64>,
    /// `w[idx]` is on the top face of cell `idx`; `w_bottom` on the `z = -h` face.
    w: Vec<f64>,
    w_bottom: Vec<f64>,
}

impl FaceVelocities {
    pub fn new(vel: &HVectorField) -> Self {
        let g = vel.grid();
        let mut u = vec![0.0; g.n_cells()];
        let mut v = vec![0.0; g.n_cells()];
        for k in 0..g.nz {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let idx = g.idx(i, j, k);
                    if i + 1 < g.nx {
                        u[idx] = 0.5 * (vel.x.data[idx] + vel.x.data[idx + 1]);
                    }
                    if j + 1 < g.ny {
                        v[idx] = 0.5 * (vel.y.data[idx] + vel.y.data[idx + g.nx]);
                    }
                }
            }
        }
        let div = div_h(vel);
        let nc = g.n_columns();
        let mut w = vec![0.0; g.n_cells()];
        let mut face = vec![0.0; nc];
        for k in (0..g.nz).rev() {
            for c in 0..nc {
                w[k * nc + c] = face[c];
                face[c] += g.dz * div.data[k * nc + c];
            }
        }
        Self {
            grid: g,
            u,
            v,
            w,
            w_bottom: face,
        }
    }

    /// Centered advective derivative `(v . grad) phi + w phi_z` using the
    /// face velocities: `(U+ phi(i+1) - U- phi(i-1)) / (2 dx) + ...`.
    ///
    /// Annihilates constants exactly; skew-symmetric up to the bottom-face
    /// flux, which is the divergence defect of the vertical mean.
    pub fn advect(&self, phi: &ScalarField) -> ScalarField {
        let g = self.grid;
        let mut out = vec![0.0; g.n_cells()];
        let nc = g.n_columns();
        for (axis, faces, spacing) in [
            (Axis::X, &self.u, g.dx),
            (Axis::Y, &self.v, g.dy),
            (Axis::Z, &self.w, g.dz),
        ] {
            let plus = neighbor(phi, axis, 1);
            let minus = neighbor(phi, axis, -1);
            let stride = g.stride(axis);
            let n = g.len(axis);
            let inv = 0.5 / spacing;
            for idx in 0..g.n_cells() {
                let p = (idx / stride) % n;
                let hi = faces[idx];
                let lo = if p > 0 {
                    faces[idx - stride]
                } else if axis == Axis::Z {
                    self.w_bottom[idx % nc]
                } else {
                    0.0
                };
                out[idx] += (hi * plus[idx] - lo * minus[idx]) * inv;
            }
        }
        phi.like(out)
    }
}

/// `int_z^0 grad theta d xi`, the baroclinic pressure gradient.
pub fn buoyancy(theta: &ScalarField) -> HVectorField {
    let g = grad_h(theta);
    HVectorField {
        x: integral_from_top(&g.x).0,
        y: integral_from_top(&g.y).0,
    }
}

/// `f v_perp` with `f` evaluated at cell-center `y`.
pub fn coriolis(v: &HVectorField, p: &PhysParams) -> HVectorField {
    let g = v.grid();
    let mut x = v.y.data.clone();
    let mut y = v.x.data.clone();
    for k in 0..g.nz {
        for j in 0..g.ny {
            let f = p.coriolis(g.y(j));
            for i in 0..g.nx {
                let idx = g.idx(i, j, k);
                x[idx] *= -f;
                y[idx] *= f;
            }
        }
    }
    HVectorField {
        x: v.x.like(x),
        y: v.y.like(y),
    }
}

/// Unprojected `(v . grad) v + w v_z + int_z^0 grad theta + f v_perp`.
pub fn momentum_forcing(v: &HVectorField, theta: &ScalarField, p: &PhysParams) -> HVectorField {
    let faces = FaceVelocities::new(v);
    let adv = HVectorField {
        x: faces.advect(&v.x),
        y: faces.advect(&v.y),
    };
    let bc = v.bc();
    adv.add_scaled(1.0, &buoyancy(theta).with_bc(bc))
        .add_scaled(1.0, &coriolis(v, p))
}

/// `-P[(v . grad) v + w v_z + int_z^0 grad theta + f v_perp]`; diffusion is
/// treated separately.
pub fn momentum_rhs(
    v: &HVectorField,
    theta: &ScalarField,
    p: &PhysParams,
    cfg: &PoissonConfig,
) -> Result<HVectorField> {
    let forcing = momentum_forcing(v, theta, p);
    Ok(project(&forcing, cfg)?.scaled(-1.0))
}

/// `Q - v . grad theta - w theta_z`.
pub fn heat_rhs(v: &HVectorField, theta: &ScalarField, p: &PhysParams) -> ScalarField {
    let faces = FaceVelocities::new(v);
    let adv = faces.advect(theta);
    theta.like(
        p.q.data
            .iter()
            .zip(&adv.data)
            .map(|(q, a)| q - a)
            .collect(),
    )
}

/// `v . grad theta + w theta_z` alone.
pub fn heat_advection(v: &HVectorField, theta: &ScalarField) -> ScalarField {
    FaceVelocities::new(v).advect(theta)
}
