use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hpde_core::analysis::ensemble::{band_limited_field, band_limited_vector};
use hpde_core::analysis::runs::{absorbing_set_experiment, boundedness_run, trend_ok, RunOptions};
use hpde_core::helmholtz::project;
use hpde_core::operators::{diagnose_w, PhysParams};
use hpde_core::runner::{mode_scalar, mode_velocity};
use hpde_core::stepper::{
    cfl_number, energy_budget, Dynamics, Integrator, Scheme, State, StepperConfig,
};
use hpde_core::{Error, GridSpec, ScalarField};

fn grid(nx: usize, ny: usize, nz: usize) -> GridSpec {
    GridSpec::new(1.0, 1.0, 0.5, nx, ny, nz).unwrap()
}

fn unforced(g: GridSpec) -> PhysParams {
    let mut p = PhysParams::desk_defaults(g);
    p.q = ScalarField::zeros(g, p.temperature_bc());
    p
}

fn random_state(p: &PhysParams, amp: f64, seed: u64) -> State {
    let g = p.q.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = band_limited_vector(g, p.velocity_bc(), 3, 1.5, amp, &mut rng);
    let v = project(&v, &Default::default()).unwrap();
    let theta = band_limited_field(g, p.temperature_bc(), 3, 1.5, amp, &mut rng);
    State::new(v, theta, 0.0).unwrap()
}

fn sym(k: f64, d: f64) -> f64 {
    (2.0 * (k * d / 2.0).sin() / d).powi(2)
}

#[test]
fn diffusion_mode_decays_at_the_product_rate() {
    let g = grid(16, 16, 8);
    let mut p = unforced(g);
    p.alpha1 = 0.0;
    let mut c = StepperConfig::new(0.005);
    c.dynamics = Dynamics::DiffusionOnly;
    let v = mode_velocity(g, p.velocity_bc(), 1, 1, 1, 1.0);
    let n0 = v.norm_l2();
    let mut s = State::new(v, ScalarField::zeros(g, p.temperature_bc()), 0.0).unwrap();
    let mut it = Integrator::new(p.clone(), c).unwrap();
    let steps = 200;
    for _ in 0..steps {
        s = it.step(&s).unwrap();
    }
    let (kx, ky, kz) = (PI / g.lx, PI / g.ly, PI / (2.0 * g.h));
    // The mode is an exact eigenvector of the discrete operator.
    let discrete = p.nu1 * (sym(kx, g.dx) + sym(ky, g.dy)) + p.mu1 * sym(kz, g.dz);
    let expect = (1.0 + c.dt * discrete).powi(-steps);
    let ratio = s.v.norm_l2() / n0;
    assert!((ratio / expect - 1.0).abs() < 1e-8, "{ratio} vs {expect}");

    let lambda = p.nu1 * (kx * kx + ky * ky) + p.mu1 * kz * kz;
    let measured = -ratio.ln() / s.t;
    assert!((measured / lambda - 1.0).abs() < 0.02, "{measured} vs {lambda}");
}

#[test]
fn diffusion_only_norms_decay_monotonically() {
    let g = grid(12, 12, 6);
    let p = unforced(g);
    let mut c = StepperConfig::new(0.01);
    c.dynamics = Dynamics::DiffusionOnly;
    let series = boundedness_run(random_state(&p, 0.5, 4), &p, &c, &RunOptions::new(1.0, 0.05).unwrap()).unwrap();
    for w in series.windows(2) {
        assert!(w[1].a1v <= w[0].a1v * (1.0 + 1e-12), "t = {}", w[1].t);
        assert!(w[1].v_l2 <= w[0].v_l2 * (1.0 + 1e-12));
        assert!(w[1].theta_l2 <= w[0].theta_l2 * (1.0 + 1e-12));
    }
}

fn budget_residual(p: &PhysParams, dynamics: Dynamics, dt: f64, amp: f64) -> f64 {
    let mut c = StepperConfig::new(dt);
    c.dynamics = dynamics;
    c.diffusion_tol = 1e-13;
    c.projection.rel_tol = 1e-13;
    let s0 = random_state(p, amp, 8);
    let s1 = Integrator::new(p.clone(), c).unwrap().step(&s0).unwrap();
    energy_budget(&s0, &s1, p, &c).unwrap().residual.abs()
}

#[test]
fn energy_budget_residual_is_first_order() {
    let g = grid(10, 10, 6);
    let p = PhysParams::desk_defaults(g);
    for (dynamics, amp) in [(Dynamics::DiffusionOnly, 1.0), (Dynamics::Full, 0.05)] {
        let r: Vec<f64> = [0.02, 0.01, 0.005]
            .iter()
            .map(|&dt| budget_residual(&p, dynamics, dt, amp))
            .collect();
        for w in r.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((0.8..=1.2).contains(&order), "{dynamics:?}: {r:?}");
        }
    }
}

#[test]
fn energy_decays_for_any_step_without_forcing_or_rotation() {
    let g = grid(12, 12, 6);
    let mut p = unforced(g);
    p.f0 = 0.0;
    p.beta = 0.0;
    let mut s = random_state(&p, 1e-3, 12);
    s.theta = ScalarField::zeros(g, p.temperature_bc());
    for dt in [0.01, 0.5, 5.0] {
        let mut it = Integrator::new(p.clone(), StepperConfig::new(dt)).unwrap();
        let mut x = s.clone();
        for _ in 0..5 {
            let next = it.step(&x).unwrap();
            assert!(next.v.norm_l2() <= x.v.norm_l2(), "dt = {dt}");
            assert_eq!(next.theta.max_abs(), 0.0);
            x = next;
        }
    }
}

#[test]
fn step_stays_in_constrained_space() {
    let g = grid(12, 10, 6);
    let p = PhysParams::desk_defaults(g);
    for scheme in [Scheme::ImexEuler, Scheme::ImexCnab2] {
        let mut c = StepperConfig::new(0.01);
        c.scheme = scheme;
        let mut it = Integrator::new(p.clone(), c).unwrap();
        let mut s = random_state(&p, 0.3, 2);
        for _ in 0..3 {
            s = it.step(&s).unwrap();
            let again = project(&s.v, &c.projection).unwrap();
            assert!(again.add_scaled(-1.0, &s.v).norm_l2() <= 1e-8 * s.v.norm_l2());
            assert!(diagnose_w(&s.v).bottom_defect <= 1e-7 * s.v.norm_l2());
        }
    }
}

/// Direct evaluation: walls reflect horizontal velocity with a sign flip, `w`
/// integrates the centered horizontal divergence down from the top.
fn brute_cfl(s: &State, dt: f64) -> f64 {
    let g = s.v.grid();
    let at = |f: &ScalarField, i: isize, j: isize, k: usize| -> f64 {
        let ic = i.clamp(0, g.nx as isize - 1);
        let jc = j.clamp(0, g.ny as isize - 1);
        let v = f.data[g.idx(ic as usize, jc as usize, k)];
        if ic == i && jc == j { v } else { -v }
    };
    let mut m = 0.0_f64;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let mut above = 0.0;
            for k in (0..g.nz).rev() {
                let (ii, jj) = (i as isize, j as isize);
                let div = (at(&s.v.x, ii + 1, jj, k) - at(&s.v.x, ii - 1, jj, k)) / (2.0 * g.dx)
                    + (at(&s.v.y, ii, jj + 1, k) - at(&s.v.y, ii, jj - 1, k)) / (2.0 * g.dy);
                let w = above + 0.5 * g.dz * div;
                above += g.dz * div;
                let idx = g.idx(i, j, k);
                m = m
                    .max(s.v.x.data[idx].abs() / g.dx)
                    .max(s.v.y.data[idx].abs() / g.dy)
                    .max(w.abs() / g.dz);
            }
        }
    }
    m * dt
}

#[test]
fn cfl_matches_brute_force_and_is_enforced() {
    let g = grid(9, 7, 5);
    let p = PhysParams::desk_defaults(g);
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let v = band_limited_vector(g, p.velocity_bc(), 3, 1.0, 1.0, &mut rng);
    let s = State::new(v, ScalarField::zeros(g, p.temperature_bc()), 0.0).unwrap();
    let cfl = cfl_number(&s, 0.01);
    assert!((cfl - brute_cfl(&s, 0.01)).abs() <= 1e-12 * cfl);

    let dt = 1.5 * 0.5 * 0.01 / cfl;
    let err = Integrator::new(p, StepperConfig::new(dt)).unwrap().step(&s).unwrap_err();
    assert!(matches!(err, Error::Cfl { .. }), "{err}");
}

#[test]
fn forced_run_from_rest_reaches_a_plateau() {
    let g = grid(12, 12, 6);
    let mut p = PhysParams::desk_defaults(g);
    p.q = mode_scalar(g, p.temperature_bc(), 1, 1, 0, 0.05);
    // The horizontal-mean temperature profile is fed by the vertical heat
    // flux and relaxes on a time scale of about 60.
    let series = boundedness_run(State::zeros(&p), &p, &StepperConfig::new(0.05), &RunOptions::new(200.0, 2.0).unwrap())
        .unwrap();
    assert_eq!(series[0].v_l2, 0.0);
    let tail: Vec<_> = series.iter().filter(|r| r.t >= 140.0).collect();
    let t: Vec<f64> = tail.iter().map(|r| r.t).collect();
    for name in ["theta_l2", "a2theta", "v_l2", "a1v"] {
        let y: Vec<f64> = tail.iter().map(|r| r.get(name).unwrap()).collect();
        assert!(y.iter().all(|v| *v > 0.0 && v.is_finite()), "{name}");
        assert!(trend_ok(&t, &y), "{name} still rising");
    }
}

#[test]
fn absorbing_verdicts() {
    let g = grid(8, 8, 6);
    let mut p = PhysParams::desk_defaults(g);
    p.q = mode_scalar(g, p.temperature_bc(), 1, 1, 0, 0.02);
    let c = StepperConfig::new(0.05);
    let opts = RunOptions::new(6.0, 0.25).unwrap();
    let ic = random_state(&p, 0.01, 40);

    let same = absorbing_set_experiment(&ic, 1.0, &p, &c, &opts).unwrap();
    for n in &same.norms {
        assert_eq!(n.band_ratio, 1.0, "{}", n.name);
        assert_eq!(n.pass, n.plateau_small && n.plateau_large);
    }
    assert_eq!(same.pass, same.norms.iter().all(|n| n.pass));

    // Without forcing both runs decay in the linear regime and stay a
    // factor `scale` apart, so no common band exists.
    let mut free = unforced(g);
    free.f0 = 0.0;
    free.beta = 0.0;
    let decay = absorbing_set_experiment(&ic, 10.0, &free, &c, &opts).unwrap();
    assert!(!decay.pass);
    for n in decay.norms.iter().filter(|n| n.name != "vt" && n.name != "thetat") {
        assert!(n.slope_small <= 0.0 && n.slope_large <= 0.0, "{}", n.name);
        assert!((n.band_ratio - 10.0).abs() < 0.5, "{}: {}", n.name, n.band_ratio);
    }
}
