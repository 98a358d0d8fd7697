//! Run configuration: a flat TOML file with `[grid]`, `[physics]`,
//! `[stepper]`, `[experiment]` and `[ensemble]` sections.
//!
//! ```toml
//! [grid]
//! nx = 32
//! ny = 32
//! nz = 16
//!
//! [experiment]
//! kind = "run"
//! ic = "random(3, 2.0, 0.02)"
//! q_source = "mode(1, 1, 0, 0.01)"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::analysis::ensemble::EnsembleSpec;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::poisson::PoissonConfig;
use crate::stepper::{Dynamics, Scheme, StepperConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Run,
    Project,
    VerifyHelmholtz,
    VerifyLemmas,
    Absorbing,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Run => "run",
            ExperimentKind::Project => "project",
            ExperimentKind::VerifyHelmholtz => "verify-helmholtz",
            ExperimentKind::VerifyLemmas => "verify-lemmas",
            ExperimentKind::Absorbing => "absorbing",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "run" => ExperimentKind::Run,
            "project" => ExperimentKind::Project,
            "verify-helmholtz" => ExperimentKind::VerifyHelmholtz,
            "verify-lemmas" => ExperimentKind::VerifyLemmas,
            "absorbing" => ExperimentKind::Absorbing,
            _ => {
                return Err(format!(
                    "unknown experiment {s:?} (run, project, verify-helmholtz, verify-lemmas, absorbing)"
                ))
            }
        })
    }
}

/// Where an initial condition or heat source comes from.
///
/// `mode(kx, ky, kz, amp)` is, for velocity,
/// `v1 = amp sin(kx pi x/Lx) sin(ky pi y/Ly) cos((2kz - 1) pi z/2h)`, `v2 = 0`,
/// and for temperature and `Q`,
/// `amp cos(kx pi x/Lx) cos(ky pi y/Ly) cos(kz pi (z + h)/h)`.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSource {
    Zero,
    Mode {
        kx: u32,
        ky: u32,
        kz: u32,
        amp: f64,
    },
    File(PathBuf),
    Random {
        cutoff: usize,
        decay: f64,
        amp: f64,
    },
    /// As `Random`, with the horizontal mean of temperature removed on
    /// every level.
    Anomaly {
        cutoff: usize,
        decay: f64,
        amp: f64,
    },
}

impl fmt::Display for FieldSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSource::Zero => write!(f, "zero"),
            FieldSource::Mode { kx, ky, kz, amp } => write!(f, "mode({kx}, {ky}, {kz}, {amp:?})"),
            FieldSource::File(p) => write!(f, "file({})", p.display()),
            FieldSource::Random { cutoff, decay, amp } => {
                write!(f, "random({cutoff}, {decay:?}, {amp:?})")
            }
            FieldSource::Anomaly { cutoff, decay, amp } => {
                write!(f, "anomaly({cutoff}, {decay:?}, {amp:?})")
            }
        }
    }
}

impl FromStr for FieldSource {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s == "zero" {
            return Ok(FieldSource::Zero);
        }
        let (head, rest) = s
            .split_once('(')
            .ok_or_else(|| format!("expected zero, mode(..), file(..), random(..) or anomaly(..), got {s:?}"))?;
        let inner = rest
            .strip_suffix(')')
            .ok_or_else(|| format!("missing ')' in {s:?}"))?;
        let args: Vec<&str> = inner.split(',').map(str::trim).collect();
        let num = |a: &str| a.parse::<f64>().map_err(|_| format!("bad number {a:?} in {s:?}"));
        let int = |a: &str| a.parse::<u32>().map_err(|_| format!("bad integer {a:?} in {s:?}"));
        match (head.trim(), args.len()) {
            ("mode", 4) => Ok(FieldSource::Mode {
                kx: int(args[0])?,
                ky: int(args[1])?,
                kz: int(args[2])?,
                amp: num(args[3])?,
            }),
            ("file", 1) if !inner.trim().is_empty() => Ok(FieldSource::File(PathBuf::from(inner.trim()))),
            ("random", 3) => Ok(FieldSource::Random {
                cutoff: int(args[0])? as usize,
                decay: num(args[1])?,
                amp: num(args[2])?,
            }),
            ("anomaly", 3) => Ok(FieldSource::Anomaly {
                cutoff: int(args[0])? as usize,
                decay: num(args[1])?,
                amp: num(args[2])?,
            }),
            _ => Err(format!("cannot parse field source {s:?}")),
        }
    }
}

/// Scalar physical parameters; the heat source is built from
/// [`ExperimentConfig::q_source`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsConfig {
    pub nu1: f64,
    pub mu1: f64,
    pub nu2: f64,
    pub mu2: f64,
    pub f0: f64,
    pub beta: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            nu1: 1e-2,
            mu1: 1e-2,
            nu2: 1e-2,
            mu2: 1e-2,
            f0: 1.0,
            beta: 0.5,
            alpha1: 1.0,
            alpha2: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub t_end: f64,
    pub output_interval: f64,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub ic: FieldSource,
    pub q_source: FieldSource,
    /// Ratio of the large to the small initial condition (absorbing runs).
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub physics: PhysicsConfig,
    pub stepper: StepperConfig,
    pub experiment: ExperimentConfig,
    /// Lemma and projector ensembles; the seed is the experiment seed.
    pub ensemble: EnsembleSpec,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    lx: Option<f64>,
    ly: Option<f64>,
    h: Option<f64>,
    nx: Option<i64>,
    ny: Option<i64>,
    nz: Option<i64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPhysics {
    nu1: Option<f64>,
    mu1: Option<f64>,
    nu2: Option<f64>,
    mu2: Option<f64>,
    f0: Option<f64>,
    beta: Option<f64>,
    alpha1: Option<f64>,
    alpha2: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawStepper {
    dt: Option<f64>,
    scheme: Option<String>,
    rel_tol: Option<f64>,
    max_iter: Option<i64>,
    cfl_limit: Option<f64>,
    dynamics: Option<String>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    kind: Option<String>,
    t_end: Option<f64>,
    output_interval: Option<f64>,
    output_dir: Option<String>,
    seed: Option<i64>,
    ic: Option<String>,
    q_source: Option<String>,
    scale: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawEnsemble {
    count: Option<i64>,
    cutoff: Option<i64>,
    decay: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    grid: Option<RawGrid>,
    #[serde(default)]
    physics: RawPhysics,
    #[serde(default)]
    stepper: RawStepper,
    experiment: Option<RawExperiment>,
    #[serde(default)]
    ensemble: RawEnsemble,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid(msg.into())
}

fn require<T>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| invalid(format!("{key} is required")))
}

fn positive(v: f64, key: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("{key} must be > 0")))
    }
}

fn nonnegative(v: f64, key: &str) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("{key} must be ≥ 0")))
    }
}

fn count(v: i64, key: &str, min: i64) -> Result<usize> {
    if v >= min {
        Ok(v as usize)
    } else {
        Err(invalid(format!("{key} must be ≥ {min}")))
    }
}

fn source(v: Option<String>, key: &str) -> Result<FieldSource> {
    match v {
        None => Ok(FieldSource::Zero),
        Some(s) => {
            let src: FieldSource = s.parse().map_err(|e| invalid(format!("{key}: {e}")))?;
            match &src {
                FieldSource::Mode { amp, .. } if !amp.is_finite() => {
                    Err(invalid(format!("{key}: amplitude must be finite")))
                }
                FieldSource::Random { decay, amp, .. } | FieldSource::Anomaly { decay, amp, .. }
                    if !(decay.is_finite() && amp.is_finite()) =>
                {
                    Err(invalid(format!("{key}: parameters must be finite")))
                }
                _ => Ok(src),
            }
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl RunConfig {
    /// Parses and validates configuration text. `path` is only used in
    /// error messages.
    pub fn parse_str(text: &str, path: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::ConfigParse {
            path: path.to_path_buf(),
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        Self::parse_str(&text, path)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let g = require(raw.grid, "[grid]")?;
        let nx = count(require(g.nx, "grid.nx")?, "grid.nx", 4)?;
        let ny = count(require(g.ny, "grid.ny")?, "grid.ny", 4)?;
        let nz = count(require(g.nz, "grid.nz")?, "grid.nz", 4)?;
        let lx = positive(g.lx.unwrap_or(1.0), "grid.lx")?;
        let ly = positive(g.ly.unwrap_or(1.0), "grid.ly")?;
        let h = positive(g.h.unwrap_or(0.5), "grid.h")?;
        let grid = GridSpec::new(lx, ly, h, nx, ny, nz)?;

        let d = PhysicsConfig::default();
        let ph = raw.physics;
        let physics = PhysicsConfig {
            nu1: positive(ph.nu1.unwrap_or(d.nu1), "physics.nu1")?,
            mu1: positive(ph.mu1.unwrap_or(d.mu1), "physics.mu1")?,
            nu2: positive(ph.nu2.unwrap_or(d.nu2), "physics.nu2")?,
            mu2: positive(ph.mu2.unwrap_or(d.mu2), "physics.mu2")?,
            f0: ph.f0.unwrap_or(d.f0),
            beta: ph.beta.unwrap_or(d.beta),
            alpha1: nonnegative(ph.alpha1.unwrap_or(d.alpha1), "physics.alpha1")?,
            alpha2: nonnegative(ph.alpha2.unwrap_or(d.alpha2), "physics.alpha2")?,
        };
        if !(physics.f0.is_finite() && physics.beta.is_finite()) {
            return Err(invalid("physics.f0 and physics.beta must be finite"));
        }

        let st = raw.stepper;
        let mut stepper = StepperConfig::new(positive(st.dt.unwrap_or(0.01), "stepper.dt")?);
        stepper.scheme = match st.scheme.as_deref().unwrap_or("imex_euler") {
            "imex_euler" => Scheme::ImexEuler,
            "imex_cnab2" => Scheme::ImexCnab2,
            other => {
                return Err(invalid(format!(
                    "stepper.scheme must be imex_euler or imex_cnab2, got {other:?}"
                )))
            }
        };
        stepper.dynamics = match st.dynamics.as_deref().unwrap_or("full") {
            "full" => Dynamics::Full,
            "diffusion_only" => Dynamics::DiffusionOnly,
            other => {
                return Err(invalid(format!(
                    "stepper.dynamics must be full or diffusion_only, got {other:?}"
                )))
            }
        };
        let rel_tol = positive(st.rel_tol.unwrap_or(1e-10), "stepper.rel_tol")?;
        let max_iter = st
            .max_iter
            .map(|m| count(m, "stepper.max_iter", 1))
            .transpose()?;
        stepper.diffusion_tol = rel_tol;
        stepper.diffusion_max_iter = max_iter;
        stepper.projection = PoissonConfig {
            rel_tol,
            max_iter,
            ..PoissonConfig::default()
        };
        stepper.cfl_limit = positive(st.cfl_limit.unwrap_or(0.5), "stepper.cfl_limit")?;

        let ex = require(raw.experiment, "[experiment]")?;
        let kind: ExperimentKind = require(ex.kind, "experiment.kind")?
            .parse()
            .map_err(|e: String| invalid(format!("experiment.kind: {e}")))?;
        let seed = ex.seed.unwrap_or(0);
        if seed < 0 {
            return Err(invalid("experiment.seed must be ≥ 0"));
        }
        let experiment = ExperimentConfig {
            kind,
            t_end: positive(ex.t_end.unwrap_or(50.0), "experiment.t_end")?,
            output_interval: positive(
                ex.output_interval.unwrap_or(1.0),
                "experiment.output_interval",
            )?,
            output_dir: PathBuf::from(ex.output_dir.unwrap_or_else(|| "output".into())),
            seed: seed as u64,
            ic: source(ex.ic, "experiment.ic")?,
            q_source: source(ex.q_source, "experiment.q_source")?,
            scale: positive(ex.scale.unwrap_or(10.0), "experiment.scale")?,
        };
        if let FieldSource::Random { .. } | FieldSource::Anomaly { .. } = experiment.q_source {
            return Err(invalid("experiment.q_source must be zero, mode(..) or file(..)"));
        }

        let en = raw.ensemble;
        let ensemble = EnsembleSpec {
            count: count(en.count.unwrap_or(500), "ensemble.count", 1)?,
            cutoff: count(en.cutoff.unwrap_or(4), "ensemble.cutoff", 0)?,
            decay: en.decay.unwrap_or(1.5),
            seed: experiment.seed,
        };
        if !ensemble.decay.is_finite() {
            return Err(invalid("ensemble.decay must be finite"));
        }
        Ok(Self {
            grid,
            physics,
            stepper,
            experiment,
            ensemble,
        })
    }

    /// Canonical text with every key explicit; parses back to `self`.
    pub fn to_canonical(&self) -> String {
        let g = &self.grid;
        let p = &self.physics;
        let s = &self.stepper;
        let e = &self.experiment;
        let quote = |v: &str| toml::Value::String(v.to_string()).to_string();
        let mut out = String::new();
        out += &format!(
            "[grid]\nlx = {:?}\nly = {:?}\nh = {:?}\nnx = {}\nny = {}\nnz = {}\n\n",
            g.lx, g.ly, g.h, g.nx, g.ny, g.nz
        );
        out += &format!(
            "[physics]\nnu1 = {:?}\nmu1 = {:?}\nnu2 = {:?}\nmu2 = {:?}\nf0 = {:?}\nbeta = {:?}\nalpha1 = {:?}\nalpha2 = {:?}\n\n",
            p.nu1, p.mu1, p.nu2, p.mu2, p.f0, p.beta, p.alpha1, p.alpha2
        );
        out += &format!(
            "[stepper]\ndt = {:?}\nscheme = {}\nrel_tol = {:?}\n",
            s.dt,
            quote(match s.scheme {
                Scheme::ImexEuler => "imex_euler",
                Scheme::ImexCnab2 => "imex_cnab2",
            }),
            s.diffusion_tol
        );
        if let Some(m) = s.diffusion_max_iter {
            out += &format!("max_iter = {m}\n");
        }
        out += &format!(
            "cfl_limit = {:?}\ndynamics = {}\n\n",
            s.cfl_limit,
            quote(match s.dynamics {
                Dynamics::Full => "full",
                Dynamics::DiffusionOnly => "diffusion_only",
            })
        );
        out += &format!(
            "[experiment]\nkind = {}\nt_end = {:?}\noutput_interval = {:?}\noutput_dir = {}\nseed = {}\nic = {}\nq_source = {}\nscale = {:?}\n\n",
            quote(e.kind.as_str()),
            e.t_end,
            e.output_interval,
            quote(&e.output_dir.to_string_lossy()),
            e.seed,
            quote(&e.ic.to_string()),
            quote(&e.q_source.to_string()),
            e.scale
        );
        out += &format!(
            "[ensemble]\ncount = {}\ncutoff = {}\ndecay = {:?}\n",
            self.ensemble.count, self.ensemble.cutoff, self.ensemble.decay
        );
        out
    }
}
