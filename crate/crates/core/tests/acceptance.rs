//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any fails. All tolerances are pinned below.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hpde_core::analysis::ensemble::{band_limited_field, band_limited_vector};
use hpde_core::analysis::gronwall::gronwall_budget;
use hpde_core::analysis::lemmas::{ju2_sample, verify_ju1, verify_ju2};
use hpde_core::analysis::runs::{boundedness_run, RunOptions};
use hpde_core::analysis::EnsembleSpec;
use hpde_core::config::RunConfig;
use hpde_core::helmholtz::project;
use hpde_core::operators::{apply_a1, bilinear_a1, PhysParams};
use hpde_core::oracle::{compare_with_oracle, dense_projector};
use hpde_core::poisson::{solve_poisson_dirichlet, solve_poisson_neumann, NeumannData, PoissonConfig};
use hpde_core::runner::{self, mode_velocity};
use hpde_core::stepper::{Dynamics, Integrator, State, StepperConfig};
use hpde_core::{Field2D, FieldBc, GridSpec, Result, ScalarField};

const ORACLE_REL: f64 = 1e-8;
const ORTHO_REL: f64 = 1e-8;
const IDEMPOTENCE_REL: f64 = 1e-8;
const PYTHAGORAS_REL: f64 = 1e-7;
const Z_COMMUTATION_ABS: f64 = 1e-10;
const MIN_ORDER: f64 = 1.9;
const STOKES_REL: f64 = 1e-6;
const STOKES_PAIRS: usize = 120;
const LEMMA_MEMBERS: usize = 500;
const RESOLUTION_FACTOR: f64 = 2.0;
const CONSTANT_CASE_REL: f64 = 1e-14;
const DECAY_REL: f64 = 0.02;
const MEAN_DRIFT_PER_STEP: f64 = 1e-10;
const MEAN_STEPS: usize = 1000;
const ABSORBING_SCALE: f64 = 10.0;
const GRONWALL_FACTOR: f64 = 2.0;

const LIMIT_1: Duration = Duration::from_secs(10);
const LIMIT_2: Duration = Duration::from_secs(30);
const LIMIT_3: Duration = Duration::from_secs(30);
const LIMIT_4: Duration = Duration::from_secs(300);
const LIMIT_5: Duration = Duration::from_secs(60);
const LIMIT_6: Duration = Duration::from_secs(120);
const LIMIT_7: Duration = Duration::from_secs(900);
const LIMIT_8: Duration = Duration::from_secs(300);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

fn desk_grid(nx: usize, ny: usize, nz: usize) -> GridSpec {
    GridSpec::new(1.0, 1.0, 0.5, nx, ny, nz).expect("valid grid")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn projector_oracle() -> Result<Verdict> {
    let cfg = PoissonConfig::default();
    let mut worst = [0.0_f64; 6];
    let mut grids = 0;
    for nx in 4..=8 {
        for ny in 4..=8 {
            for nz in 4..=6 {
                let g = GridSpec::new(1.0, 0.8, 0.5, nx, ny, nz)?;
                let pmat = dense_projector(&g)?;
                let spec = EnsembleSpec::new(3, 3, 1.5, (100 * nx + 10 * ny + nz) as u64)?;
                for m in 0..spec.count {
                    let mut rng = spec.member_rng(m);
                    let u = band_limited_vector(g, FieldBc::velocity(1.0), 3, 1.5, 1.0, &mut rng);
                    let r = compare_with_oracle(&u, &pmat, &cfg)?;
                    for (w, v) in worst.iter_mut().zip([
                        r.projector_error,
                        r.orthogonality.max(r.split_orthogonality),
                        r.idempotence,
                        r.pythagoras,
                        r.z_commutation,
                        0.0,
                    ]) {
                        *w = w.max(v);
                    }
                }
                grids += 1;
            }
        }
    }
    let pass = worst[0] <= ORACLE_REL
        && worst[1] <= ORTHO_REL
        && worst[2] <= IDEMPOTENCE_REL
        && worst[3] <= PYTHAGORAS_REL
        && worst[4] <= Z_COMMUTATION_ABS;
    verdict(
        pass,
        format!(
            "{grids} grids 4..8 x 4..8 x 4..6: oracle {:.2e}, orthogonality {:.2e}, idempotence {:.2e}, pythagoras {:.2e}, d_z gap {:.2e}",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}

fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn poisson_convergence() -> Result<Verdict> {
    let cfg = PoissonConfig::with_tol(1e-13);
    let sizes = [16, 32, 64];
    let mut dir_err = Vec::new();
    let mut neu_err = Vec::new();
    for &n in &sizes {
        let g = desk_grid(n, n, 4);
        let exact = Field2D::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
        let f = exact.scaled(-2.0 * PI * PI);
        let q = solve_poisson_dirichlet(&f, &cfg)?.q;
        dir_err.push(q.add_scaled(-1.0, &exact).max_abs());

        // q = e^x cos y + x^2 y^2 with its outward normal derivative.
        let exact = Field2D::from_fn(g, |x, y| x.exp() * y.cos() + x * x * y * y);
        let f = Field2D::from_fn(g, |x, y| 2.0 * (x * x + y * y));
        let ys: Vec<f64> = (0..n).map(|j| g.y(j)).collect();
        let xs: Vec<f64> = (0..n).map(|i| g.x(i)).collect();
        let data = NeumannData {
            west: ys.iter().map(|y| -y.cos()).collect(),
            east: ys.iter().map(|y| 1f64.exp() * y.cos() + 2.0 * y * y).collect(),
            south: vec![0.0; n],
            north: xs.iter().map(|x| -x.exp() * 1f64.sin() + 2.0 * x * x).collect(),
        };
        let q = solve_poisson_neumann(&f, &data, &cfg)?.q;
        let shift = exact.mean();
        let err = q
            .data
            .iter()
            .zip(&exact.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - (b - shift)).abs()));
        neu_err.push(err);
    }
    let od = observed_orders(&dir_err);
    let on = observed_orders(&neu_err);
    let pass = od.iter().chain(&on).all(|o| *o >= MIN_ORDER);
    verdict(
        pass,
        format!(
            "Dirichlet errors {:.2e} {:.2e} {:.2e} orders {:.3} {:.3}; Neumann errors {:.2e} {:.2e} {:.2e} orders {:.3} {:.3}",
            dir_err[0], dir_err[1], dir_err[2], od[0], od[1], neu_err[0], neu_err[1], neu_err[2], on[0], on[1]
        ),
    )
}

fn stokes_identity() -> Result<Verdict> {
    let g = desk_grid(8, 8, 6);
    let p = PhysParams::desk_defaults(g);
    let cfg = PoissonConfig::with_tol(1e-12);
    let spec = EnsembleSpec::new(STOKES_PAIRS, 3, 1.5, 2024)?;
    let results = spec.map_members(|_, rng| -> Result<f64> {
        let v = project(&band_limited_vector(g, p.velocity_bc(), 3, 1.5, 1.0, rng), &cfg)?;
        let phi = project(&band_limited_vector(g, p.velocity_bc(), 3, 1.5, 1.0, rng), &cfg)?;
        let lhs = apply_a1(&v, &p, &cfg)?.dot(&phi);
        let rhs = bilinear_a1(&v, &phi, &p);
        let scale = (bilinear_a1(&v, &v, &p) * bilinear_a1(&phi, &phi, &p)).sqrt();
        Ok((lhs - rhs).abs() / scale)
    });
    let mut worst = 0.0_f64;
    for r in results {
        worst = worst.max(r?);
    }
    verdict(
        worst <= STOKES_REL,
        format!("{STOKES_PAIRS} projected pairs on 8x8x6: worst |<P L1 v, phi> - a1(v, phi)| / sqrt(a1(v,v) a1(phi,phi)) = {worst:.2e}"),
    )
}

fn lemma_verifiers() -> Result<Verdict> {
    let spec = EnsembleSpec::new(LEMMA_MEMBERS, 4, 1.5, 11)?;
    let coarse = desk_grid(16, 16, 16);
    let fine = desk_grid(32, 32, 32);
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, f) in [
        ("ju1", verify_ju1 as fn(GridSpec, &EnsembleSpec) -> Result<_>),
        ("ju2", verify_ju2),
    ] {
        let a = f(coarse, &spec)?;
        let b = f(fine, &spec)?;
        let ratio = a.max_ratio.max(b.max_ratio) / a.max_ratio.min(b.max_ratio);
        pass &= a.max_ratio.is_finite() && b.max_ratio.is_finite() && ratio <= RESOLUTION_FACTOR;
        parts.push(format!(
            "{name} max {:.4e} (16^3) {:.4e} (32^3) ratio {ratio:.3}",
            a.max_ratio, b.max_ratio
        ));
    }
    let one = ScalarField::constant(coarse, FieldBc::neumann(), 1.0);
    let c = ju2_sample(&one, &one, &one).ratio().unwrap_or(f64::NAN);
    let expect = coarse.volume().powf(-0.5);
    let rel = ((c - expect) / expect).abs();
    pass &= rel <= CONSTANT_CASE_REL;
    parts.push(format!("constant fields ratio {c:.16e} vs |Omega|^-1/2 (rel {rel:.1e})"));
    verdict(pass, parts.join("; "))
}

fn diffusion_decay() -> Result<Verdict> {
    let g = desk_grid(32, 32, 16);
    let mut p = PhysParams::desk_defaults(g);
    p.alpha1 = 0.0;
    p.q = ScalarField::zeros(g, p.temperature_bc());
    let mut c = StepperConfig::new(0.005);
    c.dynamics = Dynamics::DiffusionOnly;
    let v = mode_velocity(g, p.velocity_bc(), 1, 1, 1, 1.0);
    let n0 = v.norm_l2();
    let mut s = State::new(v, ScalarField::zeros(g, p.temperature_bc()), 0.0)?;
    let mut it = Integrator::new(p.clone(), c)?;
    let steps = 400;
    for _ in 0..steps {
        s = it.step(&s)?;
    }
    let measured = -(s.v.norm_l2() / n0).ln() / s.t;
    let lambda = p.nu1 * ((PI / g.lx).powi(2) + (PI / g.ly).powi(2)) + p.mu1 * (PI / (2.0 * g.h)).powi(2);
    let rel = (measured - lambda).abs() / lambda;
    verdict(
        rel <= DECAY_REL,
        format!("32x32x16, t = {:.2}: measured rate {measured:.6}, analytic {lambda:.6}, rel {rel:.2e}", s.t),
    )
}

fn mean_conservation() -> Result<Verdict> {
    let g = desk_grid(16, 16, 8);
    let mut p = PhysParams::desk_defaults(g);
    p.alpha2 = 0.0;
    p.q = ScalarField::zeros(g, p.temperature_bc());
    let c = StepperConfig::new(0.01);
    let spec = EnsembleSpec::new(1, 3, 1.5, 5)?;
    let mut rng = spec.member_rng(0);
    let v = project(&band_limited_vector(g, p.velocity_bc(), 3, 1.5, 0.2, &mut rng), &c.projection)?;
    let theta = band_limited_field(g, p.temperature_bc(), 3, 1.5, 1.0, &mut rng);
    let mut s = State::new(v, theta, 0.0)?;
    let mut it = Integrator::new(p, c)?;
    let start = s.theta.integral();
    let mut prev = start;
    let mut worst = 0.0_f64;
    for _ in 0..MEAN_STEPS {
        s = it.step(&s)?;
        let now = s.theta.integral();
        worst = worst.max((now - prev).abs());
        prev = now;
    }
    verdict(
        worst <= MEAN_DRIFT_PER_STEP,
        format!(
            "{MEAN_STEPS} steps on 16x16x8: max per-step drift {worst:.2e}, total {:.2e} (integral {start:.6e})",
            (prev - start).abs()
        ),
    )
}

fn absorbing_set(out: &Path) -> Result<Verdict> {
    let mut cfg = RunConfig::load(&configs_dir().join("desk_absorbing.toml"))?;
    cfg.experiment.output_dir = out.to_path_buf();
    let g = cfg.grid;
    let shape_ok = (g.nx, g.ny, g.nz) == (32, 32, 16)
        && cfg.experiment.t_end == 50.0
        && cfg.experiment.scale == ABSORBING_SCALE;
    let outcome = runner::run_experiment(&cfg)?;
    let small = hpde_core::analysis::csv_io::read_series_file(&out.join("absorbing_small.csv"))?;
    let large = hpde_core::analysis::csv_io::read_series_file(&out.join("absorbing_large.csv"))?;
    let h2_ratio = (large[0].v_h2.powi(2) + large[0].theta_h2.powi(2)).sqrt()
        / (small[0].v_h2.powi(2) + small[0].theta_h2.powi(2)).sqrt();
    let finite = small
        .iter()
        .chain(&large)
        .all(|r| r.values().iter().all(|v| v.is_finite()));
    let pass = shape_ok
        && finite
        && (h2_ratio - ABSORBING_SCALE).abs() <= 1e-9 * ABSORBING_SCALE
        && outcome.verdict == Some(true);
    let bands: Vec<String> = outcome.lines[1..outcome.lines.len() - 1]
        .iter()
        .map(|l| {
            let name = l.split_whitespace().nth(1).unwrap_or("?").trim_end_matches(':');
            let band = l.split("band ").nth(1).and_then(|s| s.split(')').next()).unwrap_or("?");
            format!("{name} {band}")
        })
        .collect();
    verdict(
        pass,
        format!("32x32x16 to t = 50, H2 ratio of ICs {h2_ratio:.6}, bands: {}", bands.join(", ")),
    )
}

fn gronwall_stability() -> Result<Verdict> {
    let g = desk_grid(16, 16, 8);
    let mut p = PhysParams::desk_defaults(g);
    p.q = runner::mode_scalar(g, p.temperature_bc(), 1, 1, 0, 0.05);
    let opts = RunOptions::new(10.0, 0.1)?;
    let mut reports = Vec::new();
    for dt in [0.02, 0.01] {
        let c = StepperConfig::new(dt);
        let series = boundedness_run(State::zeros(&p), &p, &c, &opts)?;
        reports.push(gronwall_budget(&series));
    }
    let (a, b) = (&reports[0], &reports[1]);
    let ratio = a.constant.max(b.constant) / a.constant.min(b.constant);
    let pass = a.constant.is_finite()
        && a.constant > 0.0
        && b.constant > 0.0
        && a.violations == 0
        && b.violations == 0
        && ratio <= GRONWALL_FACTOR;
    verdict(
        pass,
        format!(
            "16x16x8 forced from rest, t <= 10: constant {:.4e} (dt 0.02) {:.4e} (dt 0.01) ratio {ratio:.4}, unmajorized {} / {}",
            a.constant, b.constant, a.violations, b.violations
        ),
    )
}

const DETERMINISM_CONFIG: &str = r#"
[grid]
nx = 12
ny = 12
nz = 6

[stepper]
dt = 0.01

[experiment]
kind = "run"
t_end = 1.0
output_interval = 0.25
seed = 99
ic = "random(3, 2.0, 0.05)"
q_source = "mode(1, 1, 1, 0.02)"
"#;

fn determinism(out: &Path) -> Result<Verdict> {
    let mut bytes = Vec::new();
    for run in ["a", "b"] {
        let mut cfg = RunConfig::parse_str(DETERMINISM_CONFIG, Path::new("determinism.toml"))?;
        cfg.experiment.output_dir = out.join(run);
        runner::run_experiment(&cfg)?;
        let csv = std::fs::read(cfg.experiment.output_dir.join("norms.csv"))
            .map_err(|e| hpde_core::Error::io("reading norms.csv", e))?;
        let last = std::fs::read(cfg.experiment.output_dir.join("state_00004.theta.hpde"))
            .map_err(|e| hpde_core::Error::io("reading checkpoint", e))?;
        bytes.push((csv, last));
    }
    let rows = String::from_utf8_lossy(&bytes[0].0).lines().count();
    verdict(
        bytes[0] == bytes[1],
        format!("two runs, {rows} csv lines: csv and final checkpoint bitwise identical = {}", bytes[0] == bytes[1]),
    )
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let t7 = tmp.path().join("absorbing");
    let t9 = tmp.path().join("determinism");
    let criteria: Vec<(&str, Duration, Box<dyn FnOnce() -> Result<Verdict>>)> = vec![
        ("projector oracle equivalence", LIMIT_1, Box::new(projector_oracle)),
        ("Poisson convergence", LIMIT_2, Box::new(poisson_convergence)),
        ("hydrostatic Stokes identity", LIMIT_3, Box::new(stokes_identity)),
        ("lemma verifiers", LIMIT_4, Box::new(lemma_verifiers)),
        ("diffusion-only decay", LIMIT_5, Box::new(diffusion_decay)),
        ("temperature mean conservation", LIMIT_6, Box::new(mean_conservation)),
        ("absorbing set", LIMIT_7, Box::new(move || absorbing_set(&t7))),
        ("Gronwall budget", LIMIT_8, Box::new(gronwall_stability)),
        ("determinism", Duration::MAX, Box::new(move || determinism(&t9))),
    ];
    let mut failures = 0;
    for (n, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let took = start.elapsed();
        let (pass, detail) = match result {
            Ok(v) => (v.pass && took <= limit, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        let budget = if limit == Duration::MAX {
            String::new()
        } else {
            format!(" / {}s", limit.as_secs())
        };
        println!(
            "{} {}. {name}: {detail} [{:.1}s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            n + 1,
            took.as_secs_f64()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
