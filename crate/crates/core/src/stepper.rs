//! IMEX time stepping of the projected system.
//!
//! Anisotropic diffusion is implicit and solved by CG; advection, Coriolis
//! and buoyancy are explicit. The velocity is projected after the implicit
//! solve.

use crate::error::{Error, Result};
use crate::field::{HVectorField, ScalarField};
use crate::helmholtz::project;
use crate::operators::{
    anisotropic_laplacian_into, bilinear_a1, diagnose_w, heat_rhs, momentum_rhs, PhysParams,
};
use crate::poisson::{conjugate_gradient, PoissonConfig, SolveStats};

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub v: HVectorField,
    pub theta: ScalarField,
    pub t: f64,
}

impl State {
    pub fn new(v: HVectorField, theta: ScalarField, t: f64) -> Result<Self> {
        if v.grid() != theta.grid {
            return Err(Error::Shape("velocity and temperature on different grids".into()));
        }
        if !(v.is_finite() && theta.is_finite() && t.is_finite()) {
            return Err(Error::InvalidArgument("state has non-finite values".into()));
        }
        Ok(Self { v, theta, t })
    }

    /// Zero velocity and temperature with the tags of `p`.
    pub fn zeros(p: &PhysParams) -> Self {
        let g = p.q.grid;
        Self {
            v: HVectorField::zeros(g, p.velocity_bc()),
            theta: ScalarField::zeros(g, p.temperature_bc()),
            t: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.theta.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ImexEuler,
    ImexCnab2,
}

/// `DiffusionOnly` drops the explicit tendencies and the projection, so
/// each component diffuses on its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dynamics {
    Full,
    DiffusionOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub dynamics: Dynamics,
    /// Relative residual for the implicit diffusion solves.
    pub diffusion_tol: f64,
    /// `None` means `10 * n_cells`.
    pub diffusion_max_iter: Option<usize>,
    pub projection: PoissonConfig,
    pub cfl_limit: f64,
}

impl StepperConfig {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            scheme: Scheme::ImexEuler,
            dynamics: Dynamics::Full,
            diffusion_tol: 1e-10,
            diffusion_max_iter: None,
            projection: PoissonConfig::default(),
            cfl_limit: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.diffusion_tol > 0.0) {
            return Err(Error::InvalidArgument("diffusion_tol must be > 0".into()));
        }
        if !(self.cfl_limit > 0.0) {
            return Err(Error::InvalidArgument("cfl_limit must be > 0".into()));
        }
        Ok(())
    }
}

/// `max(|v1|/dx, |v2|/dy, |w|/dz) * dt` over all cells.
pub fn cfl_number(s: &State, dt: f64) -> f64 {
    let g = s.v.grid();
    let w = diagnose_w(&s.v).w;
    let mut m = 0.0_f64;
    for idx in 0..g.n_cells() {
        m = m
            .max(s.v.x.data[idx].abs() / g.dx)
            .max(s.v.y.data[idx].abs() / g.dy)
            .max(w.data[idx].abs() / g.dz);
    }
    m * dt
}

/// CFL number and whether it is within the limit.
pub fn cfl_check(s: &State, c: &StepperConfig) -> (f64, bool) {
    let cfl = cfl_number(s, c.dt);
    (cfl, cfl <= c.cfl_limit)
}

/// Solves `(I + c L) x = b` for the anisotropic operator of `nu`, `mu`,
/// warm-started from `guess`.
fn helmholtz_solve(
    b: &ScalarField,
    guess: &ScalarField,
    c: f64,
    nu: f64,
    mu: f64,
    cfg: &StepperConfig,
) -> Result<(ScalarField, SolveStats)> {
    let apply = |x: &[f64], out: &mut [f64]| {
        anisotropic_laplacian_into(&b.grid, &b.bc, c * nu, c * mu, x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o += xi;
        }
    };
    let mut x = guess.data.clone();
    let cap = cfg.diffusion_max_iter.unwrap_or(10 * b.data.len());
    let stats = conjugate_gradient(
        apply,
        &b.data,
        &mut x,
        cfg.diffusion_tol,
        cap,
        false,
        "implicit diffusion CG",
    )?;
    Ok((b.like(x), stats))
}

/// Explicit tendencies `(R_v, R_theta)` at a state.
pub fn explicit_terms(
    s: &State,
    p: &PhysParams,
    c: &StepperConfig,
) -> Result<(HVectorField, ScalarField)> {
    match c.dynamics {
        Dynamics::Full => Ok((
            momentum_rhs(&s.v, &s.theta, p, &c.projection)?.with_bc(p.velocity_bc()),
            heat_rhs(&s.v, &s.theta, p),
        )),
        Dynamics::DiffusionOnly => Ok((
            HVectorField::zeros(s.v.grid(), p.velocity_bc()),
            ScalarField::zeros(s.theta.grid, p.temperature_bc()),
        )),
    }
}

/// Time stepper holding the explicit-term history needed by CNAB2.
#[derive(Debug, Clone)]
pub struct Integrator {
    pub params: PhysParams,
    pub config: StepperConfig,
    previous: Option<(HVectorField, ScalarField)>,
    /// Iterations of the last implicit velocity and temperature solves.
    pub last_stats: [SolveStats; 3],
}

impl Integrator {
    pub fn new(params: PhysParams, config: StepperConfig) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        Ok(Self {
            params,
            config,
            previous: None,
            last_stats: [SolveStats::default(); 3],
        })
    }

    /// Forgets the explicit history; the next CNAB2 step bootstraps again.
    pub fn reset(&mut self) {
        self.previous = None;
    }

    pub fn step(&mut self, s: &State) -> Result<State> {
        let c = self.config;
        let p = &self.params;
        let (cfl, ok) = cfl_check(s, &c);
        if !ok {
            return Err(Error::Cfl {
                cfl,
                limit: c.cfl_limit,
            });
        }
        let dt = c.dt;
        let (rv, rt) = explicit_terms(s, p, &c)?;
        let cn = c.scheme == Scheme::ImexCnab2 && self.previous.is_some();

        let (bv, bt, implicit) = if cn {
            let (pv, pt) = self.previous.as_ref().expect("history present");
            let lv = crate::operators::apply_l1(&s.v, p);
            let lt = crate::operators::apply_l2(&s.theta, p);
            let bv = s
                .v
                .add_scaled(-0.5 * dt, &lv)
                .add_scaled(1.5 * dt, &rv)
                .add_scaled(-0.5 * dt, pv);
            let bt = s
                .theta
                .add_scaled(-0.5 * dt, &lt)
                .add_scaled(1.5 * dt, &rt)
                .add_scaled(-0.5 * dt, pt);
            (bv, bt, 0.5 * dt)
        } else {
            (s.v.add_scaled(dt, &rv), s.theta.add_scaled(dt, &rt), dt)
        };

        let (vx, sx) = helmholtz_solve(&bv.x, &s.v.x, implicit, p.nu1, p.mu1, &c)?;
        let (vy, sy) = helmholtz_solve(&bv.y, &s.v.y, implicit, p.nu1, p.mu1, &c)?;
        let v_star = HVectorField { x: vx, y: vy };
        let v = match c.dynamics {
            Dynamics::Full => project(&v_star, &c.projection)?,
            Dynamics::DiffusionOnly => v_star,
        };

        let (mut theta, st) = helmholtz_solve(&bt, &s.theta, implicit, p.nu2, p.mu2, &c)?;
        if p.alpha2 == 0.0 {
            // All-Neumann: the operator sums to zero, so the mean is fixed by
            // the right-hand side; remove the CG residual from it.
            let n = theta.data.len() as f64;
            let shift = (bt.data.iter().sum::<f64>() - theta.data.iter().sum::<f64>()) / n;
            theta.data.iter_mut().for_each(|x| *x += shift);
        }

        self.last_stats = [sx, sy, st];
        if c.scheme == Scheme::ImexCnab2 {
            self.previous = Some((rv, rt));
        }
        let next = State {
            v,
            theta,
            t: s.t + dt,
        };
        if !next.is_finite() {
            return Err(Error::BlowUp {
                t: next.t,
                quantity: "state",
                value: f64::NAN,
            });
        }
        Ok(next)
    }
}

/// One IMEX Euler step without history.
pub fn step(s: &State, p: &PhysParams, c: &StepperConfig) -> Result<State> {
    let mut cfg = *c;
    cfg.scheme = Scheme::ImexEuler;
    Integrator::new(p.clone(), cfg)?.step(s)
}

/// Discrete L2 energy balance of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBudget {
    /// `(|v1|^2 - |v0|^2) / (2 dt)`.
    pub rate: f64,
    /// `a1(v1, v1)`.
    pub dissipation: f64,
    /// `<R(v0, theta0), v1>`.
    pub work: f64,
    /// `rate + dissipation - work`.
    pub residual: f64,
}

pub fn energy_budget(
    s0: &State,
    s1: &State,
    p: &PhysParams,
    c: &StepperConfig,
) -> Result<EnergyBudget> {
    let rate = (s1.v.dot(&s1.v) - s0.v.dot(&s0.v)) / (2.0 * c.dt);
    let dissipation = bilinear_a1(&s1.v, &s1.v, p);
    let (rv, _) = explicit_terms(s0, p, c)?;
    let work = rv.dot(&s1.v);
    Ok(EnergyBudget {
        rate,
        dissipation,
        work,
        residual: rate + dissipation - work,
    })
}
