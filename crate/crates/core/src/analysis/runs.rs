//! Long runs: norm time series and the absorbing-set comparison.

use crate::analysis::report::{norm_report, NormReport};
use crate::error::{Error, Result};
use crate::operators::PhysParams;
use crate::stepper::{Integrator, State, StepperConfig};

/// Any tracked norm above this aborts a run.
pub const BLOWUP_THRESHOLD: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub t_end: f64,
    pub output_interval: f64,
}

impl RunOptions {
    pub fn new(t_end: f64, output_interval: f64) -> Result<Self> {
        if !(t_end > 0.0 && output_interval > 0.0) {
            return Err(Error::InvalidArgument(
                "t_end and output_interval must be > 0".into(),
            ));
        }
        Ok(Self {
            t_end,
            output_interval,
        })
    }

    fn steps(&self, dt: f64) -> (usize, usize) {
        let total = (self.t_end / dt).round().max(1.0) as usize;
        let every = (self.output_interval / dt).round().max(1.0) as usize;
        (total, every)
    }
}

fn check_blowup(r: &NormReport) -> Result<()> {
    let (quantity, value) = r.largest();
    if !(value <= BLOWUP_THRESHOLD) {
        return Err(Error::BlowUp {
            t: r.t,
            quantity,
            value,
        });
    }
    Ok(())
}

/// Integrates to `t_end`, reporting at `t = 0` and every output interval.
/// `on_output` sees each reported state, e.g. to write checkpoints.
pub fn boundedness_run_with(
    ic: State,
    p: &PhysParams,
    c: &StepperConfig,
    opts: &RunOptions,
    mut on_output: impl FnMut(&State, &NormReport) -> Result<()>,
) -> Result<Vec<NormReport>> {
    let mut integ = Integrator::new(p.clone(), *c)?;
    let (total, every) = opts.steps(c.dt);
    let mut s = ic;
    let mut series = Vec::with_capacity(total / every + 2);
    let first = norm_report(&s, p, c)?;
    check_blowup(&first)?;
    on_output(&s, &first)?;
    series.push(first);
    for n in 1..=total {
        s = integ.step(&s)?;
        if n % every == 0 || n == total {
            let r = norm_report(&s, p, c)?;
            check_blowup(&r)?;
            on_output(&s, &r)?;
            series.push(r);
        }
    }
    Ok(series)
}

pub fn boundedness_run(
    ic: State,
    p: &PhysParams,
    c: &StepperConfig,
    opts: &RunOptions,
) -> Result<Vec<NormReport>> {
    boundedness_run_with(ic, p, c, opts, |_, _| Ok(()))
}

/// Norms compared by the absorbing-set experiment.
pub const TRACKED: [&str; 7] = ["a1v", "a2theta", "vt", "thetat", "v_h3", "v_h2", "theta_h2"];

/// Values below this are treated as zero when forming ratios.
const NEGLIGIBLE: f64 = 1e-12;

/// Least-squares slope of `y` against `t`, and the residual standard
/// deviation.
pub fn linear_fit(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    if t.len() < 2 {
        return (0.0, 0.0);
    }
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let stt: f64 = t.iter().map(|a| (a - tm).powi(2)).sum();
    let sty: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    let sd = (t
        .iter()
        .zip(y)
        .map(|(a, b)| (b - ym - slope * (a - tm)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, sd)
}

/// Plateau test on one window: the fitted rise over the window may not
/// exceed twice the residual scatter or 1% of the mean.
pub fn trend_ok(t: &[f64], y: &[f64]) -> bool {
    if t.len() < 2 {
        return true;
    }
    let (slope, sd) = linear_fit(t, y);
    let span = t[t.len() - 1] - t[0];
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    slope * span <= (2.0 * sd).max(1e-2 * mean.abs()).max(NEGLIGIBLE)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormVerdict {
    pub name: &'static str,
    pub sup_small: f64,
    pub sup_large: f64,
    /// `max(sup) / min(sup)`, 1 when both are negligible.
    pub band_ratio: f64,
    pub slope_small: f64,
    pub slope_large: f64,
    pub plateau_small: bool,
    pub plateau_large: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingReport {
    pub scale: f64,
    pub window_start: f64,
    pub norms: Vec<NormVerdict>,
    pub pass: bool,
    pub small: Vec<NormReport>,
    pub large: Vec<NormReport>,
}

/// Compares two series over their final third.
pub fn absorbing_verdict(small: &[NormReport], large: &[NormReport], t_end: f64) -> (f64, Vec<NormVerdict>) {
    let window_start = t_end * 2.0 / 3.0;
    let window = |s: &[NormReport], name: &str| -> (Vec<f64>, Vec<f64>) {
        s.iter()
            .filter(|r| r.t >= window_start - 1e-9)
            .map(|r| (r.t, r.get(name).expect("tracked column")))
            .unzip()
    };
    let norms = TRACKED
        .iter()
        .map(|&name| {
            let (ts, ys) = window(small, name);
            let (tl, yl) = window(large, name);
            let sup_small = ys.iter().copied().fold(0.0, f64::max);
            let sup_large = yl.iter().copied().fold(0.0, f64::max);
            let (lo, hi) = (sup_small.min(sup_large), sup_small.max(sup_large));
            let band_ratio = if hi < NEGLIGIBLE {
                1.0
            } else if lo < NEGLIGIBLE {
                f64::INFINITY
            } else {
                hi / lo
            };
            let plateau_small = trend_ok(&ts, &ys);
            let plateau_large = trend_ok(&tl, &yl);
            let finite = sup_small.is_finite() && sup_large.is_finite();
            NormVerdict {
                name,
                sup_small,
                sup_large,
                band_ratio,
                slope_small: linear_fit(&ts, &ys).0,
                slope_large: linear_fit(&tl, &yl).0,
                plateau_small,
                plateau_large,
                pass: finite && band_ratio <= 2.0 && plateau_small && plateau_large,
            }
        })
        .collect();
    (window_start, norms)
}

/// Runs `ic_small` and `scale * ic_small` with the same forcing and checks
/// that the tracked norms end up in a common band without trending upward.
pub fn absorbing_set_experiment(
    ic_small: &State,
    scale: f64,
    p: &PhysParams,
    c: &StepperConfig,
    opts: &RunOptions,
) -> Result<AbsorbingReport> {
    let ic_large = State {
        v: ic_small.v.scaled(scale),
        theta: ic_small.theta.scaled(scale),
        t: ic_small.t,
    };
    let (small, large) = rayon::join(
        || boundedness_run(ic_small.clone(), p, c, opts),
        || boundedness_run(ic_large, p, c, opts),
    );
    let (small, large) = (small?, large?);
    let (window_start, norms) = absorbing_verdict(&small, &large, opts.t_end);
    let pass = norms.iter().all(|n| n.pass);
    Ok(AbsorbingReport {
        scale,
        window_start,
        norms,
        pass,
        small,
        large,
    })
}
