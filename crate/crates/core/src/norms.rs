//! Discrete norms: Lebesgue, Sobolev, the energy norms induced by the
//! bilinear forms, the operator norms and the anisotropic mixed norms.

use crate::calculus::free_diff;
use crate::error::{Error, Result};
use crate::field::{HVectorField, ScalarField};
use crate::grid::Axis;
use crate::operators::{apply_a1, apply_a2, bilinear_a1, bilinear_a2, PhysParams};
use crate::poisson::PoissonConfig;

/// Which norm to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    L2,
    Lp(f64),
    V1,
    V2,
    H1,
    Hm(i32),
    A1Norm,
    A2Norm,
    /// `sup_z ||phi(., z)||_{L2(D)}`.
    LzInfLD2,
    /// `|| sup_z |phi| ||_{L2(D)}`.
    LD2LzInf,
}

/// Field argument of [`norm`].
#[derive(Debug, Clone, Copy)]
pub enum FieldRef<'a> {
    Scalar(&'a ScalarField),
    Vector(&'a HVectorField),
}

impl<'a> From<&'a ScalarField> for FieldRef<'a> {
    fn from(f: &'a ScalarField) -> Self {
        FieldRef::Scalar(f)
    }
}

impl<'a> From<&'a HVectorField> for FieldRef<'a> {
    fn from(f: &'a HVectorField) -> Self {
        FieldRef::Vector(f)
    }
}

impl FieldRef<'_> {
    fn components(&self) -> Vec<&ScalarField> {
        match self {
            FieldRef::Scalar(s) => vec![s],
            FieldRef::Vector(v) => vec![&v.x, &v.y],
        }
    }

    /// Pointwise Euclidean magnitude.
    fn magnitude(&self) -> ScalarField {
        match self {
            FieldRef::Scalar(s) => s.map(f64::abs),
            FieldRef::Vector(v) => v.x.like(
                v.x.data
                    .iter()
                    .zip(&v.y.data)
                    .map(|(a, b)| a.hypot(*b))
                    .collect(),
            ),
        }
    }
}

/// What the operator-backed norms need.
#[derive(Debug, Clone, Copy)]
pub struct NormContext<'a> {
    pub phys: &'a PhysParams,
    pub poisson: &'a PoissonConfig,
}

pub fn l2(phi: &ScalarField) -> f64 {
    phi.dot(phi).sqrt()
}

/// `(int |phi|^p)^(1/p)`, `p >= 1`.
pub fn lp_norm(phi: &ScalarField, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("Lp norm needs p >= 1, got {p}")));
    }
    if p == 2.0 {
        return Ok(l2(phi));
    }
    let s: f64 = phi.data.iter().map(|v| v.abs().powf(p)).sum();
    Ok((s * phi.grid.cell_volume()).powf(1.0 / p))
}

/// `sqrt(sum_{|beta| <= m} ||D^beta phi||^2)` over ordered derivative
/// tuples, with one-sided stencils at the boundary.
pub fn hm_norm(phi: &ScalarField, m: i32) -> Result<f64> {
    Ok(hm_sq(phi, m)?.sqrt())
}

fn hm_sq(phi: &ScalarField, m: i32) -> Result<f64> {
    if m < 0 {
        return Err(Error::InvalidArgument(format!("Hm norm needs m >= 0, got {m}")));
    }
    let mut level = vec![phi.clone()];
    let mut total = phi.dot(phi);
    for _ in 0..m {
        let mut next = Vec::with_capacity(level.len() * 3);
        for f in &level {
            for axis in Axis::ALL {
                let d = free_diff(f, axis);
                total += d.dot(&d);
                next.push(d);
            }
        }
        level = next;
    }
    Ok(total)
}

/// `||grad3 phi||` with one-sided boundary stencils.
pub fn grad3_l2(phi: &ScalarField) -> f64 {
    Axis::ALL
        .iter()
        .map(|&a| {
            let d = free_diff(phi, a);
            d.dot(&d)
        })
        .sum::<f64>()
        .sqrt()
}

/// `||phi_z||` with one-sided boundary stencils.
pub fn dz_l2(phi: &ScalarField) -> f64 {
    l2(&free_diff(phi, Axis::Z))
}

pub fn lz_inf_ld2(phi: &ScalarField) -> f64 {
    let g = phi.grid;
    let nc = g.n_columns();
    let mut best = 0.0_f64;
    for k in 0..g.nz {
        let s: f64 = phi.data[k * nc..(k + 1) * nc].iter().map(|v| v * v).sum();
        best = best.max(s);
    }
    (best * g.cell_area()).sqrt()
}

pub fn ld2_lz_inf(phi: &ScalarField) -> f64 {
    let g = phi.grid;
    let nc = g.n_columns();
    let mut s = 0.0;
    for c in 0..nc {
        let m = (0..g.nz)
            .map(|k| phi.data[k * nc + c].abs())
            .fold(0.0_f64, f64::max);
        s += m * m;
    }
    (s * g.cell_area()).sqrt()
}

/// Evaluates `kind` on `field`. Vector fields use the Euclidean pointwise
/// magnitude for Lp and mixed norms and sum component squares elsewhere.
pub fn norm<'a>(
    field: impl Into<FieldRef<'a>>,
    kind: NormKind,
    ctx: Option<NormContext<'_>>,
) -> Result<f64> {
    let field = field.into();
    let need_ctx = || {
        ctx.ok_or_else(|| {
            Error::InvalidArgument(format!("{kind:?} needs physical parameters"))
        })
    };
    let sum_sq = |f: &dyn Fn(&ScalarField) -> Result<f64>| -> Result<f64> {
        let mut s = 0.0;
        for c in field.components() {
            let v = f(c)?;
            s += v * v;
        }
        Ok(s.sqrt())
    };
    match kind {
        NormKind::L2 => sum_sq(&|c| Ok(l2(c))),
        NormKind::Lp(p) => lp_norm(&field.magnitude(), p),
        NormKind::H1 => sum_sq(&|c| hm_norm(c, 1)),
        NormKind::Hm(m) => sum_sq(&|c| hm_norm(c, m)),
        NormKind::LzInfLD2 => Ok(lz_inf_ld2(&field.magnitude())),
        NormKind::LD2LzInf => Ok(ld2_lz_inf(&field.magnitude())),
        NormKind::V1 => match field {
            FieldRef::Vector(v) => Ok(bilinear_a1(v, v, need_ctx()?.phys).max(0.0).sqrt()),
            FieldRef::Scalar(_) => Err(Error::InvalidArgument("V1 norm needs a vector field".into())),
        },
        NormKind::V2 => match field {
            FieldRef::Scalar(s) => Ok(bilinear_a2(s, s, need_ctx()?.phys).max(0.0).sqrt()),
            FieldRef::Vector(_) => Err(Error::InvalidArgument("V2 norm needs a scalar field".into())),
        },
        NormKind::A1Norm => match field {
            FieldRef::Vector(v) => {
                let c = need_ctx()?;
                Ok(apply_a1(v, c.phys, c.poisson)?.norm_l2())
            }
            FieldRef::Scalar(_) => Err(Error::InvalidArgument("A1 norm needs a vector field".into())),
        },
        NormKind::A2Norm => match field {
            FieldRef::Scalar(s) => Ok(l2(&apply_a2(s, need_ctx()?.phys))),
            FieldRef::Vector(_) => Err(Error::InvalidArgument("A2 norm needs a scalar field".into())),
        },
    }
}
