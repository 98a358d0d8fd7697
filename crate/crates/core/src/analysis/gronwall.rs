//! Discrete check of the differential inequality for `y = |A1 v|^2`:
//!
//! `dy/dt + |A1^(3/2) v|^2 <= C [ g1 y + |v|_V1^2 + |A2 theta|^2 ]` with
//! `g1 = |v|^2 |v|_V1^6 + |v|_V1 |A1 v| + |v|_V1^4 |A1 v|^2`.
//!
//! `|A1^(3/2) v|` is replaced by the `grad_a1v` column.

use crate::analysis::report::NormReport;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetPoint {
    /// Midpoint time of the interval.
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GronwallReport {
    pub points: Vec<BudgetPoint>,
    /// `max(lhs / rhs)` over intervals with `rhs > 0`; 0 if there are none.
    pub constant: f64,
    /// Intervals with `lhs > 0` but `rhs = 0`: not majorizable.
    pub violations: usize,
    /// Intervals with `lhs <= 0` (trivially majorized).
    pub nonpositive: usize,
}

fn majorant(r: &NormReport) -> f64 {
    let (v, v1, a1) = (r.v_l2, r.v_v1, r.a1v);
    let g1 = v * v * v1.powi(6) + v1 * a1 + v1.powi(4) * a1 * a1;
    g1 * a1 * a1 + v1 * v1 + r.a2theta * r.a2theta
}

/// Forward differences of `y` between consecutive reports; every other
/// quantity is averaged over the interval ends.
pub fn gronwall_budget(series: &[NormReport]) -> GronwallReport {
    let mut points = Vec::with_capacity(series.len().saturating_sub(1));
    for w in series.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let dt = b.t - a.t;
        if !(dt > 0.0) {
            continue;
        }
        let dy = (b.a1v * b.a1v - a.a1v * a.a1v) / dt;
        let diss = 0.5 * (a.grad_a1v * a.grad_a1v + b.grad_a1v * b.grad_a1v);
        points.push(BudgetPoint {
            t: 0.5 * (a.t + b.t),
            lhs: dy + diss,
            rhs: 0.5 * (majorant(a) + majorant(b)),
        });
    }
    let mut constant = 0.0_f64;
    let mut violations = 0;
    let mut nonpositive = 0;
    for p in &points {
        if p.lhs <= 0.0 {
            nonpositive += 1;
        } else if p.rhs > 0.0 {
            constant = constant.max(p.lhs / p.rhs);
        } else {
            violations += 1;
        }
    }
    GronwallReport {
        points,
        constant,
        violations,
        nonpositive,
    }
}
