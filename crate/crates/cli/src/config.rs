//! Flat `key = value` scenario files.
//!
//! One pair per line, `#` starts a comment, numbers may be written as fractions
//! such as `1/64`. Unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use semilab::diffusion::FluxStencil;
use semilab::engine::ModelSpec;
use semilab::kernel::snapshot::read_snapshot;
use semilab::{DensityKernel, DiffusionModel, Grid, GridFunction, Profile, ShiftModel};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Shift,
    Diffusion,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Shift => "shift",
            ModelKind::Diffusion => "diffusion",
        })
    }
}

/// A density on the scenario grid.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    /// `|f><f|` with `f` a named profile at decay rate `alpha`, normalized.
    Profile { profile: Profile, alpha: f64 },
    /// Diagonal density with weight `exp(-alpha x)`.
    Diagonal { alpha: f64 },
    /// Convex combination of normalized profile states: `(weight, profile, alpha)`.
    Mixture(Vec<(f64, Profile, f64)>),
    /// Kernel snapshot file.
    File(PathBuf),
}

impl StateSpec {
    pub fn build(&self, grid: Grid) -> Result<DensityKernel, CliError> {
        let kernel = match self {
            StateSpec::Profile { profile, alpha } => DensityKernel::from_profile(grid, *profile, *alpha)?,
            StateSpec::Diagonal { alpha } => DensityKernel::diagonal(grid, |x| (-alpha * x).exp())?,
            StateSpec::Mixture(parts) => {
                let parts = parts
                    .iter()
                    .map(|(w, p, a)| Ok((*w, GridFunction::from_profile(grid, *p, *a)?)))
                    .collect::<Result<Vec<_>, semilab::Error>>()?;
                DensityKernel::mixture(&parts)?
            }
            StateSpec::File(path) => {
                let file = std::fs::File::open(path)
                    .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
                let kernel = read_snapshot(std::io::BufReader::new(file))?;
                if *kernel.grid() != grid {
                    return Err(CliError::Config(format!(
                        "snapshot {} is on grid {}, scenario grid is {grid}",
                        path.display(),
                        kernel.grid()
                    )));
                }
                DensityKernel::new(kernel)?
            }
        };
        Ok(kernel)
    }

    fn canonical(&self) -> String {
        match self {
            StateSpec::Profile { profile, alpha } => format!("{profile}:{alpha:?}"),
            StateSpec::Diagonal { alpha } => format!("diagonal:{alpha:?}"),
            StateSpec::Mixture(parts) => {
                let items: Vec<String> = parts.iter().map(|(w, p, a)| format!("{w:?} {p} {a:?}")).collect();
                format!("mixture:{}", items.join(","))
            }
            StateSpec::File(p) => format!("file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotMode {
    None,
    Final,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeObservable {
    Identity,
    Diagonal,
    Scalar,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualKind {
    Free,
    Perturbed,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSettings {
    pub observable: ProbeObservable,
    pub dual: DualKind,
    /// Probe times in grid steps.
    pub scales: Vec<u32>,
    pub samples: usize,
    pub psi: Profile,
    pub psi_alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub model: ModelKind,
    pub h: f64,
    pub x_max: f64,
    pub omega: StateSpec,
    pub initial: StateSpec,
    pub horizon: f64,
    pub dt: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub fast_path: bool,
    pub seed: u64,
    pub out: PathBuf,
    pub flux_stencil: FluxStencil,
    pub snapshots: SnapshotMode,
    pub probe: ProbeSettings,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Shift,
            h: 1.0 / 32.0,
            x_max: 12.0,
            omega: StateSpec::Profile { profile: Profile::Exp, alpha: 1.0 },
            initial: StateSpec::Profile { profile: Profile::X2Exp, alpha: 1.0 },
            horizon: 1.0,
            dt: 1.0 / 32.0,
            tol: 1e-10,
            max_iter: 200,
            fast_path: true,
            seed: 42,
            out: PathBuf::from("out"),
            flux_stencil: FluxStencil::SecondOrder,
            snapshots: SnapshotMode::Final,
            probe: ProbeSettings {
                observable: ProbeObservable::Identity,
                dual: DualKind::Perturbed,
                scales: vec![32, 16, 8, 4, 2],
                samples: 100,
                psi: Profile::XExp,
                psi_alpha: 1.0,
            },
        }
    }
}

const KEYS: &[&str] = &[
    "model",
    "h",
    "x_max",
    "omega",
    "omega_alpha",
    "omega_mixture",
    "omega_file",
    "initial",
    "initial_alpha",
    "initial_mixture",
    "initial_file",
    "T",
    "dt",
    "tol",
    "max_iter",
    "fast_path",
    "seed",
    "out",
    "flux_stencil",
    "snapshots",
    "probe_observable",
    "probe_dual",
    "probe_scales",
    "probe_samples",
    "probe_psi",
    "probe_psi_alpha",
];

fn err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses `3`, `1e-3` or a fraction `1/64`.
pub fn parse_number(s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| err(format!("bad number '{s}'")))?;
            let b: f64 = b.trim().parse().map_err(|_| err(format!("bad number '{s}'")))?;
            a / b
        }
        None => s.parse().map_err(|_| err(format!("bad number '{s}'")))?,
    };
    if !value.is_finite() {
        return Err(err(format!("number '{s}' is not finite")));
    }
    Ok(value)
}

fn positive(key: &str, s: &str) -> Result<f64, CliError> {
    let v = parse_number(s)?;
    if v <= 0.0 {
        return Err(err(format!("{key} must be positive, got {s}")));
    }
    Ok(v)
}

fn parse_bool(key: &str, s: &str) -> Result<bool, CliError> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(err(format!("{key} must be true or false, got '{s}'"))),
    }
}

fn parse_profile(s: &str) -> Result<Profile, CliError> {
    Profile::from_str(s).map_err(|_| err(format!("unknown profile '{s}' (expected exp, x_exp or x2_exp)")))
}

fn parse_mixture(s: &str) -> Result<Vec<(f64, Profile, f64)>, CliError> {
    s.split(',')
        .map(|part| {
            let fields: Vec<&str> = part.split_whitespace().collect();
            match fields.as_slice() {
                [w, p, a] => {
                    let w = parse_number(w)?;
                    if w < 0.0 {
                        return Err(err(format!("mixture weight must be nonnegative in '{part}'")));
                    }
                    Ok((w, parse_profile(p)?, positive("mixture alpha", a)?))
                }
                _ => Err(err(format!("mixture part '{}' must be 'weight profile alpha'", part.trim()))),
            }
        })
        .collect()
}

fn state_spec(prefix: &str, pairs: &BTreeMap<String, String>, default: &StateSpec) -> Result<StateSpec, CliError> {
    let get = |suffix: &str| pairs.get(&format!("{prefix}{suffix}")).map(String::as_str);
    let alpha = get("_alpha").map(|a| positive(&format!("{prefix}_alpha"), a)).transpose()?;
    let kind = get("");
    let spec = match kind {
        None => match (default, alpha) {
            (StateSpec::Profile { profile, .. }, Some(alpha)) => StateSpec::Profile { profile: *profile, alpha },
            _ => default.clone(),
        },
        Some("diagonal") => StateSpec::Diagonal { alpha: alpha.unwrap_or(1.0) },
        Some("mixture") => {
            let m = get("_mixture").ok_or_else(|| err(format!("{prefix} = mixture needs {prefix}_mixture")))?;
            StateSpec::Mixture(parse_mixture(m)?)
        }
        Some("file") => {
            let f = get("_file").ok_or_else(|| err(format!("{prefix} = file needs {prefix}_file")))?;
            StateSpec::File(PathBuf::from(f))
        }
        Some(name) => StateSpec::Profile { profile: parse_profile(name)?, alpha: alpha.unwrap_or(1.0) },
    };
    if get("_mixture").is_some() && !matches!(spec, StateSpec::Mixture(_)) {
        return Err(err(format!("{prefix}_mixture given but {prefix} is not 'mixture'")));
    }
    if get("_file").is_some() && !matches!(spec, StateSpec::File(_)) {
        return Err(err(format!("{prefix}_file given but {prefix} is not 'file'")));
    }
    Ok(spec)
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::with_extent(self.h, self.x_max)?)
    }

    pub fn model_spec(&self) -> Result<ModelSpec, CliError> {
        let grid = self.grid()?;
        let omega = self.omega.build(grid)?;
        Ok(match self.model {
            ModelKind::Shift => ModelSpec::Shift(ShiftModel::new(omega)),
            ModelKind::Diffusion => {
                ModelSpec::Diffusion(DiffusionModel::new(omega).with_flux_stencil(self.flux_stencil))
            }
        })
    }

    /// `key=value` lines in key order; the output directory is not part of it.
    pub fn canonical(&self) -> String {
        let p = &self.probe;
        let mut pairs: BTreeMap<&str, String> = BTreeMap::new();
        pairs.insert("model", self.model.to_string());
        pairs.insert("h", format!("{:?}", self.h));
        pairs.insert("x_max", format!("{:?}", self.x_max));
        pairs.insert("omega", self.omega.canonical());
        pairs.insert("initial", self.initial.canonical());
        pairs.insert("T", format!("{:?}", self.horizon));
        pairs.insert("dt", format!("{:?}", self.dt));
        pairs.insert("tol", format!("{:?}", self.tol));
        pairs.insert("max_iter", self.max_iter.to_string());
        pairs.insert("fast_path", self.fast_path.to_string());
        pairs.insert("seed", self.seed.to_string());
        pairs.insert("flux_stencil", format!("{:?}", self.flux_stencil));
        pairs.insert("snapshots", format!("{:?}", self.snapshots));
        pairs.insert("probe_observable", format!("{:?}", p.observable));
        pairs.insert("probe_dual", format!("{:?}", p.dual));
        pairs.insert("probe_scales", format!("{:?}", p.scales));
        pairs.insert("probe_samples", p.samples.to_string());
        pairs.insert("probe_psi", format!("{}:{:?}", p.psi, p.psi_alpha));
        pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// First 16 hex digits of the SHA-256 of [`ScenarioConfig::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

impl FromStr for ScenarioConfig {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        let mut pairs = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| err(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(err(format!("line {}: unknown key '{key}'", lineno + 1)));
            }
            if value.is_empty() {
                return Err(err(format!("line {}: empty value for '{key}'", lineno + 1)));
            }
            if pairs.insert(key.to_owned(), value.to_owned()).is_some() {
                return Err(err(format!("line {}: repeated key '{key}'", lineno + 1)));
            }
        }
        let mut cfg = ScenarioConfig::default();
        let get = |k: &str| pairs.get(k).map(String::as_str);
        if let Some(v) = get("model") {
            cfg.model = match v {
                "shift" => ModelKind::Shift,
                "diffusion" => ModelKind::Diffusion,
                _ => return Err(err(format!("model must be shift or diffusion, got '{v}'"))),
            };
        }
        if let Some(v) = get("h") {
            cfg.h = positive("h", v)?;
        }
        if let Some(v) = get("x_max") {
            cfg.x_max = positive("x_max", v)?;
        }
        let default_omega = if cfg.model == ModelKind::Diffusion {
            StateSpec::Profile { profile: Profile::X2Exp, alpha: 1.0 }
        } else {
            cfg.omega.clone()
        };
        cfg.omega = state_spec("omega", &pairs, &default_omega)?;
        cfg.initial = state_spec("initial", &pairs, &cfg.initial)?;
        if let Some(v) = get("T") {
            cfg.horizon = parse_number(v)?;
            if cfg.horizon < 0.0 {
                return Err(err("T must be nonnegative"));
            }
        }
        cfg.dt = match get("dt") {
            Some(v) => positive("dt", v)?,
            None => cfg.h,
        };
        if let Some(v) = get("tol") {
            cfg.tol = positive("tol", v)?;
        }
        if let Some(v) = get("max_iter") {
            cfg.max_iter = v.parse().map_err(|_| err(format!("max_iter must be a nonnegative integer, got '{v}'")))?;
        }
        if let Some(v) = get("fast_path") {
            cfg.fast_path = parse_bool("fast_path", v)?;
        }
        if let Some(v) = get("seed") {
            cfg.seed = v.parse().map_err(|_| err(format!("seed must be an unsigned integer, got '{v}'")))?;
        }
        if let Some(v) = get("out") {
            cfg.out = PathBuf::from(v);
        }
        if let Some(v) = get("flux_stencil") {
            cfg.flux_stencil = match v {
                "second" => FluxStencil::SecondOrder,
                "first" => FluxStencil::FirstOrder,
                _ => return Err(err(format!("flux_stencil must be first or second, got '{v}'"))),
            };
        }
        if let Some(v) = get("snapshots") {
            cfg.snapshots = match v {
                "none" => SnapshotMode::None,
                "final" => SnapshotMode::Final,
                "all" => SnapshotMode::All,
                _ => return Err(err(format!("snapshots must be none, final or all, got '{v}'"))),
            };
        }
        if let Some(v) = get("probe_observable") {
            cfg.probe.observable = match v {
                "identity" => ProbeObservable::Identity,
                "diagonal" => ProbeObservable::Diagonal,
                "scalar" => ProbeObservable::Scalar,
                "random" => ProbeObservable::Random,
                _ => return Err(err(format!("unknown probe_observable '{v}'"))),
            };
        }
        if let Some(v) = get("probe_dual") {
            cfg.probe.dual = match v {
                "free" => DualKind::Free,
                "perturbed" => DualKind::Perturbed,
                "closed_form" => DualKind::ClosedForm,
                _ => return Err(err(format!("unknown probe_dual '{v}'"))),
            };
        }
        if let Some(v) = get("probe_scales") {
            cfg.probe.scales = v
                .split(',')
                .map(|s| match s.trim().parse::<u32>() {
                    Ok(m) if m > 0 => Ok(m),
                    _ => Err(err(format!("probe_scales entries must be positive integers, got '{s}'"))),
                })
                .collect::<Result<_, _>>()?;
        }
        if let Some(v) = get("probe_samples") {
            cfg.probe.samples = match v.parse::<usize>() {
                Ok(n) if n > 0 => n,
                _ => return Err(err(format!("probe_samples must be a positive integer, got '{v}'"))),
            };
        }
        if let Some(v) = get("probe_psi") {
            cfg.probe.psi = parse_profile(v)?;
        }
        if let Some(v) = get("probe_psi_alpha") {
            cfg.probe.psi_alpha = positive("probe_psi_alpha", v)?;
        }
        cfg.grid()?;
        Ok(cfg)
    }
}
