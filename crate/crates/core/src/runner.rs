//! Experiment orchestration behind the command-line tool.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::csv_io::{format_f64, write_series_file, SeriesWriter};
use crate::analysis::ensemble::{band_limited_field, band_limited_vector};
use crate::analysis::lemmas::{ju2_sample, verify_ju1, verify_ju2, ConstantReport};
use crate::analysis::runs::{absorbing_set_experiment, boundedness_run_with, RunOptions};
use crate::checkpoint::{self, path_with_suffix, read_scalar, read_vector, write_vector};
use crate::config::{ExperimentKind, FieldSource, RunConfig};
use crate::error::{Error, Result};
use crate::field::{HVectorField, ScalarField};
use crate::grid::{FieldBc, GridSpec};
use crate::helmholtz::{decompose, project, DecompositionResult};
use crate::operators::PhysParams;
use crate::oracle::{compare_with_oracle, dense_projector, ORACLE_MAX_UNKNOWNS};
use crate::poisson::PoissonConfig;
use crate::stepper::{Dynamics, State};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const SOLVER: i32 = 3;
    pub const VERIFY_FAIL: i32 = 4;
    pub const BLOWUP: i32 = 5;
}

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::ConfigParse { .. } | Error::ConfigInvalid(_) | Error::Grid(_) => exit::CONFIG,
        Error::BlowUp { .. } => exit::BLOWUP,
        _ => exit::SOLVER,
    }
}

/// Result of a finished experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// `Some(false)` for a failed verifier.
    pub verdict: Option<bool>,
    /// Human-readable summary, one line per item.
    pub lines: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Some(false) => exit::VERIFY_FAIL,
            _ => exit::OK,
        }
    }
}

/// `amp sin(kx pi x/Lx) sin(ky pi y/Ly) cos((2kz - 1) pi z/2h)` in `v1`.
pub fn mode_velocity(grid: GridSpec, bc: FieldBc, kx: u32, ky: u32, kz: u32, amp: f64) -> HVectorField {
    let (ax, ay) = (PI * kx as f64 / grid.lx, PI * ky as f64 / grid.ly);
    let az = PI * (2.0 * kz as f64 - 1.0) / (2.0 * grid.h);
    HVectorField::from_fn(grid, bc, |x, y, z| {
        (amp * (ax * x).sin() * (ay * y).sin() * (az * z).cos(), 0.0)
    })
}

/// `amp cos(kx pi x/Lx) cos(ky pi y/Ly) cos(kz pi (z + h)/h)`.
pub fn mode_scalar(grid: GridSpec, bc: FieldBc, kx: u32, ky: u32, kz: u32, amp: f64) -> ScalarField {
    let (ax, ay, az) = (
        PI * kx as f64 / grid.lx,
        PI * ky as f64 / grid.ly,
        PI * kz as f64 / grid.h,
    );
    ScalarField::from_fn(grid, bc, |x, y, z| {
        amp * (ax * x).cos() * (ay * y).cos() * (az * (z + grid.h)).cos()
    })
}

/// Subtracts the horizontal mean of every level.
pub fn remove_level_means(mut theta: ScalarField) -> ScalarField {
    let nc = theta.grid.n_columns();
    for level in theta.data.chunks_mut(nc) {
        let m = level.iter().sum::<f64>() / nc as f64;
        level.iter_mut().for_each(|x| *x -= m);
    }
    theta
}

/// Physical parameters with the heat source of the config.
pub fn build_params(cfg: &RunConfig) -> Result<PhysParams> {
    let g = cfg.grid;
    let ph = cfg.physics;
    let bc = FieldBc::temperature(ph.alpha2);
    let q = match &cfg.experiment.q_source {
        FieldSource::Zero => ScalarField::zeros(g, bc),
        FieldSource::Mode { kx, ky, kz, amp } => mode_scalar(g, bc, *kx, *ky, *kz, *amp),
        FieldSource::File(p) => read_scalar(p, bc)?,
        FieldSource::Random { .. } | FieldSource::Anomaly { .. } => {
            return Err(Error::ConfigInvalid("random heat source not supported".into()))
        }
    };
    if q.grid != g {
        return Err(Error::ConfigInvalid("heat source grid differs from [grid]".into()));
    }
    let p = PhysParams {
        nu1: ph.nu1,
        mu1: ph.mu1,
        nu2: ph.nu2,
        mu2: ph.mu2,
        f0: ph.f0,
        beta: ph.beta,
        alpha1: ph.alpha1,
        alpha2: ph.alpha2,
        q,
    };
    p.validate()?;
    Ok(p)
}

/// Initial state of the config. The velocity is projected onto `H1`
/// unless the dynamics are diffusion-only.
pub fn build_initial_state(cfg: &RunConfig, p: &PhysParams) -> Result<State> {
    let g = cfg.grid;
    let (vbc, tbc) = (p.velocity_bc(), p.temperature_bc());
    let (v, theta) = match &cfg.experiment.ic {
        FieldSource::Zero => (HVectorField::zeros(g, vbc), ScalarField::zeros(g, tbc)),
        FieldSource::Mode { kx, ky, kz, amp } => (
            mode_velocity(g, vbc, *kx, *ky, *kz, *amp),
            mode_scalar(g, tbc, *kx, *ky, *kz, *amp),
        ),
        FieldSource::Random { cutoff, decay, amp } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.experiment.seed);
            let v = band_limited_vector(g, vbc, *cutoff, *decay, *amp, &mut rng);
            let t = band_limited_field(g, tbc, *cutoff, *decay, *amp, &mut rng);
            (v, t)
        }
        FieldSource::Anomaly { cutoff, decay, amp } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.experiment.seed);
            let v = band_limited_vector(g, vbc, *cutoff, *decay, *amp, &mut rng);
            let t = band_limited_field(g, tbc, *cutoff, *decay, *amp, &mut rng);
            (v, remove_level_means(t))
        }
        FieldSource::File(stem) => (
            read_vector(stem, vbc)?,
            read_scalar(&path_with_suffix(stem, "theta"), tbc)?,
        ),
    };
    if v.grid() != g || theta.grid != g {
        return Err(Error::ConfigInvalid("initial condition grid differs from [grid]".into()));
    }
    let v = match cfg.stepper.dynamics {
        Dynamics::Full => project(&v, &cfg.stepper.projection)?,
        Dynamics::DiffusionOnly => v,
    };
    State::new(v, theta, 0.0)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Config echo, code version and seed: enough to reproduce the run.
pub fn manifest(cfg: &RunConfig) -> String {
    format!(
        "# hpde {VERSION}\n# experiment = {}\n# seed = {}\n{}",
        cfg.experiment.kind.as_str(),
        cfg.experiment.seed,
        cfg.to_canonical()
    )
}

pub fn write_state(stem: &Path, s: &State) -> Result<()> {
    write_vector(stem, &s.v, "v")?;
    checkpoint::write_scalar(&path_with_suffix(stem, "theta"), &s.theta, "theta")
}

pub fn run_experiment(cfg: &RunConfig) -> Result<Outcome> {
    let dir = &cfg.experiment.output_dir;
    ensure_dir(dir)?;
    let manifest_path = dir.join("manifest.toml");
    write_text(&manifest_path, &manifest(cfg))?;
    let mut out = match cfg.experiment.kind {
        ExperimentKind::Run => run_series(cfg)?,
        ExperimentKind::Project => run_project(cfg)?,
        ExperimentKind::VerifyHelmholtz => verify_helmholtz(cfg)?,
        ExperimentKind::VerifyLemmas => verify_lemmas(cfg)?,
        ExperimentKind::Absorbing => run_absorbing(cfg)?,
    };
    out.artifacts.insert(0, manifest_path);
    Ok(out)
}

fn run_series(cfg: &RunConfig) -> Result<Outcome> {
    let p = build_params(cfg)?;
    let s0 = build_initial_state(cfg, &p)?;
    let dir = &cfg.experiment.output_dir;
    let csv_path = dir.join("norms.csv");
    let file = std::fs::File::create(&csv_path)
        .map_err(|e| Error::io(format!("creating {}", csv_path.display()), e))?;
    let mut writer = SeriesWriter::new(std::io::BufWriter::new(file))?;
    let opts = RunOptions::new(cfg.experiment.t_end, cfg.experiment.output_interval)?;
    let mut artifacts = vec![csv_path.clone()];
    let mut index = 0usize;
    let series = boundedness_run_with(s0, &p, &cfg.stepper, &opts, |s, r| {
        writer.push(r)?;
        let stem = dir.join(format!("state_{index:05}"));
        write_state(&stem, s)?;
        artifacts.push(stem);
        index += 1;
        Ok(())
    })?;
    let last = series.last().expect("run reports the initial state");
    Ok(Outcome {
        verdict: None,
        lines: vec![format!(
            "run finished: t = {}, |v| = {}, |theta| = {}, |A1 v| = {}, {} reports",
            format_f64(last.t),
            format_f64(last.v_l2),
            format_f64(last.theta_l2),
            format_f64(last.a1v),
            series.len()
        )],
        artifacts,
    })
}

fn decomposition_line(d: &DecompositionResult) -> String {
    format!(
        "residual q1 = {:.3e} ({} it), q2 = {:.3e} ({} it)",
        d.q1_stats.residual, d.q1_stats.iterations, d.q2_stats.residual, d.q2_stats.iterations
    )
}

fn write_decomposition(prefix: &Path, d: &DecompositionResult) -> Result<Vec<PathBuf>> {
    let pu = path_with_stem_suffix(prefix, "pu");
    write_vector(&pu, &d.pu, "pu")?;
    let q1 = path_with_suffix(prefix, "q1");
    let q2 = path_with_suffix(prefix, "q2");
    checkpoint::Checkpoint::from_field2d(&d.q1, "q1").write(&q1)?;
    checkpoint::Checkpoint::from_field2d(&d.q2, "q2").write(&q2)?;
    Ok(vec![
        path_with_suffix(&pu, "v1"),
        path_with_suffix(&pu, "v2"),
        q1,
        q2,
    ])
}

fn path_with_stem_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(format!(".{suffix}"));
    PathBuf::from(s)
}

fn run_project(cfg: &RunConfig) -> Result<Outcome> {
    let p = build_params(cfg)?;
    let mut raw = cfg.clone();
    raw.stepper.dynamics = Dynamics::DiffusionOnly;
    let s = build_initial_state(&raw, &p)?;
    let d = decompose(&s.v, &cfg.stepper.projection)?;
    let prefix = cfg.experiment.output_dir.join("projected");
    let artifacts = write_decomposition(&prefix, &d)?;
    Ok(Outcome {
        verdict: None,
        lines: vec![decomposition_line(&d)],
        artifacts,
    })
}

/// `hpde project`: reads a vector checkpoint (stem or either component
/// file) and writes `<prefix>.pu.v1.hpde`, `<prefix>.pu.v2.hpde`,
/// `<prefix>.q1.hpde`, `<prefix>.q2.hpde`.
pub fn project_files(input: &Path, prefix: &Path, cfg: &PoissonConfig) -> Result<Outcome> {
    let stem = checkpoint::vector_stem(input);
    let u = read_vector(&stem, FieldBc::velocity(0.0))?;
    let d = decompose(&u, cfg)?;
    if let Some(parent) = prefix.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    let artifacts = write_decomposition(prefix, &d)?;
    let div = crate::helmholtz::mean_divergence(
        &crate::calculus::vertical_average(&d.pu.x),
        &crate::calculus::vertical_average(&d.pu.y),
    );
    Ok(Outcome {
        verdict: None,
        lines: vec![format!(
            "{}, |div mean Pu| = {:.3e}",
            decomposition_line(&d),
            div.dot(&div).sqrt()
        )],
        artifacts,
    })
}

/// Tolerance of every projector oracle comparison.
pub const ORACLE_TOL: f64 = 1e-8;

fn verify_helmholtz(cfg: &RunConfig) -> Result<Outcome> {
    let g = cfg.grid;
    if 2 * g.n_cells() > ORACLE_MAX_UNKNOWNS {
        return Err(Error::ConfigInvalid(format!(
            "verify-helmholtz needs 2 * nx * ny * nz <= {ORACLE_MAX_UNKNOWNS}"
        )));
    }
    let pmat = dense_projector(&g)?;
    let count = cfg.ensemble.count.min(50);
    let spec = crate::analysis::EnsembleSpec {
        count,
        ..cfg.ensemble
    };
    let results = spec.map_members(|_, rng| {
        let u = band_limited_vector(g, FieldBc::velocity(0.0), spec.cutoff, spec.decay, 1.0, rng);
        compare_with_oracle(&u, &pmat, &cfg.stepper.projection)
    });
    let mut worst = [0.0_f64; 6];
    for r in results {
        let r = r?;
        for (w, v) in worst.iter_mut().zip([
            r.projector_error,
            r.orthogonality,
            r.split_orthogonality,
            r.idempotence,
            r.pythagoras,
            r.z_commutation,
        ]) {
            *w = w.max(v);
        }
    }
    let names = [
        ("projector_error", ORACLE_TOL),
        ("orthogonality", ORACLE_TOL),
        ("split_orthogonality", ORACLE_TOL),
        ("idempotence", ORACLE_TOL),
        ("pythagoras", 1e-7),
        ("z_commutation", 1e-10),
    ];
    let mut lines = vec![format!("verify-helmholtz on {}x{}x{}, {count} fields", g.nx, g.ny, g.nz)];
    let mut pass = true;
    for ((name, tol), w) in names.iter().zip(worst) {
        let ok = w <= *tol;
        pass &= ok;
        lines.push(format!("{} {name}: worst {:.3e} (tol {:.0e})", if ok { "PASS" } else { "FAIL" }, w, tol));
    }
    let path = cfg.experiment.output_dir.join("verify_helmholtz.txt");
    write_text(&path, &(lines.join("\n") + "\n"))?;
    Ok(Outcome {
        verdict: Some(pass),
        lines,
        artifacts: vec![path],
    })
}

fn constant_line(label: &str, r: &ConstantReport) -> String {
    format!(
        "{label}: max {:.6e} mean {:.6e} median {:.6e} p95 {:.6e} ({} evaluated, {} skipped)",
        r.max_ratio, r.mean_ratio, r.median_ratio, r.p95_ratio, r.evaluated, r.skipped
    )
}

/// Ensemble constants on the config grid and on its 2x refinement; each
/// must be finite and agree within a factor 2 across the two grids.
fn verify_lemmas(cfg: &RunConfig) -> Result<Outcome> {
    let coarse = cfg.grid;
    let fine = coarse.refined(2)?;
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, f) in [
        ("ju1", verify_ju1 as fn(GridSpec, &crate::analysis::EnsembleSpec) -> Result<ConstantReport>),
        ("ju2", verify_ju2),
    ] {
        let a = f(coarse, &cfg.ensemble)?;
        let b = f(fine, &cfg.ensemble)?;
        let ratio = a.max_ratio.max(b.max_ratio) / a.max_ratio.min(b.max_ratio);
        let ok = a.max_ratio.is_finite() && b.max_ratio.is_finite() && ratio <= 2.0;
        pass &= ok;
        lines.push(constant_line(&format!("{name} {}x{}x{}", coarse.nx, coarse.ny, coarse.nz), &a));
        lines.push(constant_line(&format!("{name} {}x{}x{}", fine.nx, fine.ny, fine.nz), &b));
        lines.push(format!("{} {name} resolution ratio {ratio:.4}", if ok { "PASS" } else { "FAIL" }));
    }
    let one = ScalarField::constant(coarse, FieldBc::neumann(), 1.0);
    let c = ju2_sample(&one, &one, &one).ratio().unwrap_or(f64::NAN);
    let expect = coarse.volume().powf(-0.5);
    let ok = ((c - expect) / expect).abs() <= 1e-12;
    pass &= ok;
    lines.push(format!(
        "{} ju2 constant fields: ratio {c:.15e}, |Omega|^-1/2 = {expect:.15e}",
        if ok { "PASS" } else { "FAIL" }
    ));
    let path = cfg.experiment.output_dir.join("verify_lemmas.txt");
    write_text(&path, &(lines.join("\n") + "\n"))?;
    Ok(Outcome {
        verdict: Some(pass),
        lines,
        artifacts: vec![path],
    })
}

fn run_absorbing(cfg: &RunConfig) -> Result<Outcome> {
    let p = build_params(cfg)?;
    let s0 = build_initial_state(cfg, &p)?;
    let opts = RunOptions::new(cfg.experiment.t_end, cfg.experiment.output_interval)?;
    let rep = absorbing_set_experiment(&s0, cfg.experiment.scale, &p, &cfg.stepper, &opts)?;
    let dir = &cfg.experiment.output_dir;
    let small = dir.join("absorbing_small.csv");
    let large = dir.join("absorbing_large.csv");
    write_series_file(&small, &rep.small)?;
    write_series_file(&large, &rep.large)?;
    let mut text = String::new();
    let mut lines = vec![format!(
        "absorbing: scale {}, window t >= {}",
        rep.scale, rep.window_start
    )];
    for n in &rep.norms {
        lines.push(format!(
            "{} {}: sup {:.6e} / {:.6e} (band {:.3}), slope {:.3e} / {:.3e}",
            if n.pass { "PASS" } else { "FAIL" },
            n.name,
            n.sup_small,
            n.sup_large,
            n.band_ratio,
            n.slope_small,
            n.slope_large
        ));
    }
    lines.push(format!("verdict: {}", if rep.pass { "PASS" } else { "FAIL" }));
    for l in &lines {
        let _ = writeln!(text, "{l}");
    }
    let verdict = dir.join("verdict.txt");
    write_text(&verdict, &text)?;
    Ok(Outcome {
        verdict: Some(rep.pass),
        lines,
        artifacts: vec![small, large, verdict],
    })
}

/// Caps the global thread pool at `HPDE_THREADS` when set.
pub fn init_thread_pool() -> Result<()> {
    if let Ok(v) = std::env::var("HPDE_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::ConfigInvalid(format!("HPDE_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::ConfigInvalid(format!("thread pool: {e}")))?;
    }
    Ok(())
}
