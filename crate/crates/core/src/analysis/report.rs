//! Tracked norms of a state.

use crate::calculus::free_grad3;
use crate::error::Result;
use crate::field::HVectorField;
use crate::helmholtz::project;
use crate::norms::{hm_norm, l2};
use crate::operators::{apply_a2, apply_l1, bilinear_a1, bilinear_a2, diagnose_w, PhysParams};
use crate::stepper::{cfl_number, explicit_terms, Dynamics, State, StepperConfig};

/// Column names, in CSV order.
pub const COLUMNS: [&str; 15] = [
    "t",
    "v_l2",
    "theta_l2",
    "v_v1",
    "theta_v2",
    "a1v",
    "a2theta",
    "v_h2",
    "theta_h2",
    "v_h3",
    "vt",
    "thetat",
    "w_bottom_defect",
    "cfl",
    "grad_a1v",
];

/// Norms of one state. `grad_a1v` is `|grad3 A1 v|`, the computable
/// stand-in for `|A1^(3/2) v|`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormReport {
    pub t: f64,
    pub v_l2: f64,
    pub theta_l2: f64,
    pub v_v1: f64,
    pub theta_v2: f64,
    pub a1v: f64,
    pub a2theta: f64,
    pub v_h2: f64,
    pub theta_h2: f64,
    pub v_h3: f64,
    pub vt: f64,
    pub thetat: f64,
    pub w_bottom_defect: f64,
    pub cfl: f64,
    pub grad_a1v: f64,
}

impl NormReport {
    pub fn values(&self) -> [f64; 15] {
        [
            self.t,
            self.v_l2,
            self.theta_l2,
            self.v_v1,
            self.theta_v2,
            self.a1v,
            self.a2theta,
            self.v_h2,
            self.theta_h2,
            self.v_h3,
            self.vt,
            self.thetat,
            self.w_bottom_defect,
            self.cfl,
            self.grad_a1v,
        ]
    }

    pub fn from_values(v: [f64; 15]) -> Self {
        Self {
            t: v[0],
            v_l2: v[1],
            theta_l2: v[2],
            v_v1: v[3],
            theta_v2: v[4],
            a1v: v[5],
            a2theta: v[6],
            v_h2: v[7],
            theta_h2: v[8],
            v_h3: v[9],
            vt: v[10],
            thetat: v[11],
            w_bottom_defect: v[12],
            cfl: v[13],
            grad_a1v: v[14],
        }
    }

    /// Value of the column `name`.
    pub fn get(&self, name: &str) -> Option<f64> {
        COLUMNS
            .iter()
            .position(|c| *c == name)
            .map(|i| self.values()[i])
    }

    /// Largest norm entry (everything except `t`), for blow-up detection.
    pub fn largest(&self) -> (&'static str, f64) {
        let v = self.values();
        (1..15)
            .map(|i| (COLUMNS[i], v[i]))
            .fold(("t", 0.0), |best, cur| {
                if !(cur.1 <= best.1) {
                    cur
                } else {
                    best
                }
            })
    }
}

fn vector_hm(v: &HVectorField, m: i32) -> Result<f64> {
    Ok(hm_norm(&v.x, m)?.hypot(hm_norm(&v.y, m)?))
}

/// Evaluates every tracked norm. Tendencies come from the right-hand side:
/// `v_t = -A1 v + R_v`, `theta_t = -A2 theta + R_theta`; under
/// `DiffusionOnly` the velocity operator is the unprojected `L1`.
pub fn norm_report(s: &State, p: &PhysParams, c: &StepperConfig) -> Result<NormReport> {
    let l1v = apply_l1(&s.v, p);
    let a1v = match c.dynamics {
        Dynamics::Full => project(&l1v, &c.projection)?,
        Dynamics::DiffusionOnly => l1v,
    };
    let a2t = apply_a2(&s.theta, p);
    let (rv, rt) = explicit_terms(s, p, c)?;
    let vt = rv.add_scaled(-1.0, &a1v.clone().with_bc(rv.bc()));
    let tt = rt.add_scaled(-1.0, &a2t);
    let grad_a1v = free_grad3(&a1v.x)
        .iter()
        .chain(free_grad3(&a1v.y).iter())
        .map(|d| d.dot(d))
        .sum::<f64>()
        .sqrt();
    Ok(NormReport {
        t: s.t,
        v_l2: s.v.norm_l2(),
        theta_l2: l2(&s.theta),
        v_v1: bilinear_a1(&s.v, &s.v, p).max(0.0).sqrt(),
        theta_v2: bilinear_a2(&s.theta, &s.theta, p).max(0.0).sqrt(),
        a1v: a1v.norm_l2(),
        a2theta: l2(&a2t),
        v_h2: vector_hm(&s.v, 2)?,
        theta_h2: hm_norm(&s.theta, 2)?,
        v_h3: vector_hm(&s.v, 3)?,
        vt: vt.norm_l2(),
        thetat: l2(&tt),
        w_bottom_defect: diagnose_w(&s.v).bottom_defect,
        cfl: cfl_number(s, c.dt),
        grad_a1v,
    })
}
