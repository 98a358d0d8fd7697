//! Ensemble estimates of the constants in the trilinear inequalities and
//! the projector `W^{1,r}` bound.

use crate::analysis::ensemble::{band_limited_field, band_limited_vector, EnsembleSpec};
use crate::calculus::{free_diff, integral_from_top};
use crate::error::Result;
use crate::field::{HVectorField, ScalarField};
use crate::grid::{Axis, FieldBc, GridSpec};
use crate::helmholtz::projector_w1r_ratio;
use crate::norms::{dz_l2, hm_norm, l2};
use crate::poisson::PoissonConfig;

/// One evaluated inequality: `lhs <= C rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalitySample {
    pub lhs: f64,
    pub rhs: f64,
}

impl InequalitySample {
    /// `None` when the right-hand side vanishes.
    pub fn ratio(&self) -> Option<f64> {
        (self.rhs > 0.0).then(|| self.lhs / self.rhs)
    }
}

/// Distribution of `lhs / rhs` over an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantReport {
    pub evaluated: usize,
    /// Members with `rhs = 0`.
    pub skipped: usize,
    pub max_ratio: f64,
    /// Member index attaining `max_ratio`.
    pub argmax: Option<usize>,
    pub mean_ratio: f64,
    pub median_ratio: f64,
    pub p95_ratio: f64,
}

impl ConstantReport {
    pub fn from_samples(samples: &[InequalitySample]) -> Self {
        let mut ratios: Vec<(usize, f64)> = samples
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.ratio().map(|r| (i, r)))
            .collect();
        let skipped = samples.len() - ratios.len();
        if ratios.is_empty() {
            return Self {
                evaluated: 0,
                skipped,
                max_ratio: 0.0,
                argmax: None,
                mean_ratio: 0.0,
                median_ratio: 0.0,
                p95_ratio: 0.0,
            };
        }
        let (argmax, max_ratio) = ratios
            .iter()
            .copied()
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        let n = ratios.len();
        let mean_ratio = ratios.iter().map(|r| r.1).sum::<f64>() / n as f64;
        ratios.sort_by(|a, b| a.1.total_cmp(&b.1));
        let quantile = |q: f64| ratios[((n - 1) as f64 * q).round() as usize].1;
        Self {
            evaluated: n,
            skipped,
            max_ratio,
            argmax: Some(argmax),
            mean_ratio,
            median_ratio: quantile(0.5),
            p95_ratio: quantile(0.95),
        }
    }
}

/// Horizontal derivatives `(d_x phi, d_y phi)`, one-sided at the boundary.
fn horizontal_gradient(phi: &ScalarField) -> [ScalarField; 2] {
    [free_diff(phi, Axis::X), free_diff(phi, Axis::Y)]
}

fn sum_norms(fields: &[ScalarField], f: impl Fn(&ScalarField) -> f64) -> f64 {
    fields.iter().map(|c| f(c).powi(2)).sum::<f64>().sqrt()
}

fn h1(phi: &ScalarField) -> f64 {
    hm_norm(phi, 1).expect("m = 1 is valid")
}

/// `|<(int_z^0 div v) phi, psi>|` against
/// `|grad v|^1/2 |grad v|_{H1}^1/2 |phi|^1/2 |phi|_{H1}^1/2 |psi|`.
pub fn ju1_sample(v: &HVectorField, phi: &ScalarField, psi: &ScalarField) -> InequalitySample {
    let div = free_diff(&v.x, Axis::X).add_scaled(1.0, &free_diff(&v.y, Axis::Y));
    let (w, _) = integral_from_top(&div);
    let vol = phi.grid.cell_volume();
    let lhs = (vol
        * w.data
            .iter()
            .zip(&phi.data)
            .zip(&psi.data)
            .map(|((a, b), c)| a * b * c)
            .sum::<f64>())
    .abs();
    let grads: Vec<ScalarField> = horizontal_gradient(&v.x)
        .into_iter()
        .chain(horizontal_gradient(&v.y))
        .collect();
    let gv = sum_norms(&grads, l2);
    let gv_h1 = sum_norms(&grads, h1);
    let rhs = (gv * gv_h1 * l2(phi) * h1(phi)).sqrt() * l2(psi);
    InequalitySample { lhs, rhs }
}

/// `|phi|^1/4 (|phi| + |phi_z|)^1/4 (|phi| + |grad phi|)^1/2`.
pub fn ju2_factor(phi: &ScalarField) -> f64 {
    let n = l2(phi);
    let nz = dz_l2(phi);
    let ng = sum_norms(&horizontal_gradient(phi), l2);
    n.powf(0.25) * (n + nz).powf(0.25) * (n + ng).sqrt()
}

/// `int |phi psi tilde|` against `factor(phi) factor(psi) |tilde|`.
pub fn ju2_sample(phi: &ScalarField, psi: &ScalarField, tilde: &ScalarField) -> InequalitySample {
    let lhs = phi.grid.cell_volume()
        * phi
            .data
            .iter()
            .zip(&psi.data)
            .zip(&tilde.data)
            .map(|((a, b), c)| (a * b * c).abs())
            .sum::<f64>();
    let rhs = ju2_factor(phi) * ju2_factor(psi) * l2(tilde);
    InequalitySample { lhs, rhs }
}

pub fn verify_ju1(grid: GridSpec, spec: &EnsembleSpec) -> Result<ConstantReport> {
    spec.validate()?;
    let bc = FieldBc::neumann();
    let samples = spec.map_members(|_, rng| {
        let v = band_limited_vector(grid, bc, spec.cutoff, spec.decay, 1.0, rng);
        let phi = band_limited_field(grid, bc, spec.cutoff, spec.decay, 1.0, rng);
        let psi = band_limited_field(grid, bc, spec.cutoff, spec.decay, 1.0, rng);
        ju1_sample(&v, &phi, &psi)
    });
    Ok(ConstantReport::from_samples(&samples))
}

pub fn verify_ju2(grid: GridSpec, spec: &EnsembleSpec) -> Result<ConstantReport> {
    spec.validate()?;
    let bc = FieldBc::neumann();
    let samples = spec.map_members(|_, rng| {
        let phi = band_limited_field(grid, bc, spec.cutoff, spec.decay, 1.0, rng);
        let psi = band_limited_field(grid, bc, spec.cutoff, spec.decay, 1.0, rng);
        let tilde = band_limited_field(grid, bc, spec.cutoff, spec.decay, 1.0, rng);
        ju2_sample(&phi, &psi, &tilde)
    });
    Ok(ConstantReport::from_samples(&samples))
}

/// Ensemble of [`projector_w1r_ratio`] on random velocity fields.
pub fn projector_ratio_ensemble(
    grid: GridSpec,
    spec: &EnsembleSpec,
    r: f64,
    cfg: &PoissonConfig,
) -> Result<ConstantReport> {
    spec.validate()?;
    let bc = FieldBc::velocity(0.0);
    let ratios = spec.map_members(|_, rng| {
        let u = band_limited_vector(grid, bc, spec.cutoff, spec.decay, 1.0, rng);
        projector_w1r_ratio(&u, r, cfg)
    });
    let samples = ratios
        .into_iter()
        .map(|r| r.map(|lhs| InequalitySample { lhs, rhs: 1.0 }))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConstantReport::from_samples(&samples))
}
