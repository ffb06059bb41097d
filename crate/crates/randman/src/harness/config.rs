//! Run configuration: one TOML file per run, one table per subcommand.
//!
//! ```toml
//! master_seed = 7
//! threads = 1
//! out_dir = "out"
//!
//! [bounds]
//! eps = [0.2]
//! k = [1, 2]
//! ln_v = [1.0, 2.0, 3.0]
//! ```
//!
//! Unset keys take the defaults below. Unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cone_guarantees::BoundarySampler;
use crate::experiments::{log_grid, ExperimentOptions, FigureKind, FigureParams, DEFAULT_M_GRID};
use crate::manifold_model::{Form, ManifoldSpec};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Sample,
    VerifyCones,
    Bounds,
    Figure,
    Mstar,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::VerifyCones => "verify-cones",
            Command::Bounds => "bounds",
            Command::Figure => "figure",
            Command::Mstar => "mstar",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sample" => Ok(Command::Sample),
            "verify-cones" => Ok(Command::VerifyCones),
            "bounds" => Ok(Command::Bounds),
            "figure" => Ok(Command::Figure),
            "mstar" => Ok(Command::Mstar),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidConfig(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleConfig {
    pub n: usize,
    pub ell: f64,
    pub lambda: Vec<f64>,
    pub extent: Vec<f64>,
    pub grid: Vec<usize>,
    /// Also write the binary point dump.
    pub dump: bool,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            n: 1000,
            ell: 1.0,
            lambda: vec![1.0],
            extent: vec![10.0],
            grid: vec![1024],
            dump: false,
        }
    }
}

impl SampleConfig {
    pub fn spec(&self) -> Result<ManifoldSpec> {
        ManifoldSpec::new(self.n, self.ell, self.lambda.clone(), self.extent.clone(), self.grid.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConesConfig {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub chordal_sin_theta: Vec<f64>,
    pub chordal_boundary: usize,
    pub tangential_k: usize,
    pub tangential_sin_theta: Vec<f64>,
    pub tangential_boundary: usize,
    pub sampler: BoundarySampler,
    pub form: Form,
}

impl Default for VerifyConesConfig {
    fn default() -> Self {
        VerifyConesConfig {
            n: 1000,
            m: 100,
            trials: 50,
            chordal_sin_theta: vec![0.001, 0.005, 0.01],
            chordal_boundary: 20_000,
            tangential_k: 5,
            tangential_sin_theta: vec![0.0005, 0.002],
            tangential_boundary: 5_000,
            sampler: BoundarySampler::Reduced,
            form: Form::Approx,
        }
    }
}

/// Cartesian product of the listed values; `m` empty means M̄ at each point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsConfig {
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
    pub k: Vec<usize>,
    pub n: Vec<f64>,
    pub ln_v: Vec<f64>,
    pub m: Vec<f64>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            eps: vec![0.2],
            delta: vec![0.05],
            k: vec![1, 2],
            n: vec![1000.0],
            ln_v: vec![1.0, 2.0, 3.0],
            m: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureConfig {
    pub kind: FigureKind,
    #[serde(default)]
    pub params: FigureParams,
}

impl Default for FigureConfig {
    fn default() -> Self {
        FigureConfig { kind: FigureKind::Fig6a, params: FigureParams::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MstarConfig {
    pub k: usize,
    pub n: usize,
    pub ell: f64,
    pub ln_v: f64,
    pub per_lambda: f64,
    pub eps: f64,
    pub delta: f64,
    pub m_grid: Vec<usize>,
    pub n_proj: usize,
    pub options: ExperimentOptions,
}

impl Default for MstarConfig {
    fn default() -> Self {
        let (lo, hi, count) = DEFAULT_M_GRID;
        MstarConfig {
            k: 1,
            n: 1000,
            ell: 1.0,
            ln_v: (10.0 * 2f64.sqrt() / 3.0).ln(),
            per_lambda: crate::experiments::FIG6_PER_LAMBDA,
            eps: 0.2,
            delta: 0.05,
            m_grid: log_grid(lo, hi, count),
            n_proj: 100,
            options: ExperimentOptions::default(),
        }
    }
}

impl MstarConfig {
    pub fn spec(&self) -> Result<ManifoldSpec> {
        ManifoldSpec::isotropic(self.k, self.n, self.ell, self.ln_v, self.per_lambda)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub master_seed: u64,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify_cones: Option<VerifyConesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure: Option<FigureConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mstar: Option<MstarConfig>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            master_seed: 0,
            threads: 0,
            out_dir: default_out_dir(),
            format: Format::Csv,
            sample: None,
            verify_cones: None,
            bounds: None,
            figure: None,
            mstar: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Keeps only the table `cmd` reads, filled with defaults where absent.
    pub fn resolve(mut self, cmd: Command) -> Self {
        let keep = |c: Command| c == cmd;
        self.sample = keep(Command::Sample).then(|| self.sample.take().unwrap_or_default());
        self.verify_cones =
            keep(Command::VerifyCones).then(|| self.verify_cones.take().unwrap_or_default());
        self.bounds = keep(Command::Bounds).then(|| self.bounds.take().unwrap_or_default());
        self.figure = keep(Command::Figure).then(|| self.figure.take().unwrap_or_default());
        self.mstar = keep(Command::Mstar).then(|| self.mstar.take().unwrap_or_default());
        self
    }

    /// Parameter checks that need no computation.
    pub fn validate(&self, cmd: Command) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        match cmd {
            Command::Sample => {
                self.sample.as_ref().map(SampleConfig::spec).transpose()?;
            }
            Command::VerifyCones => {
                let v = self.verify_cones.as_ref().unwrap();
                if v.m == 0 || v.m > v.n || v.trials == 0 {
                    return bad(format!("need 1 ≤ m ≤ n and trials ≥ 1 (m={}, n={})", v.m, v.n));
                }
                if v.chordal_boundary == 0 || v.tangential_boundary == 0 {
                    return bad("boundary sample counts must be positive".into());
                }
                let sines = v.chordal_sin_theta.iter().chain(&v.tangential_sin_theta);
                if let Some(s) = sines.into_iter().find(|s| !(**s >= 0.0 && **s < 1.0)) {
                    return bad(format!("sin θ must lie in [0, 1), got {s}"));
                }
                if !v.tangential_sin_theta.is_empty()
                    && (v.tangential_k == 0 || v.tangential_k > v.m || 2 * v.tangential_k > v.n)
                {
                    return bad(format!("tangential_k={} out of range", v.tangential_k));
                }
            }
            Command::Bounds => {
                let b = self.bounds.as_ref().unwrap();
                for &eps in &b.eps {
                    for &delta in &b.delta {
                        for &k in &b.k {
                            for &n in &b.n {
                                for &ln_v in &b.ln_v {
                                    crate::theory::BoundQuery::new(eps, delta, k, n, ln_v, None)?;
                                }
                            }
                        }
                    }
                }
                if let Some(m) = b.m.iter().find(|m| !(**m >= 1.0)) {
                    return bad(format!("M must be at least 1, got {m}"));
                }
            }
            Command::Figure => {}
            Command::Mstar => {
                let m = self.mstar.as_ref().unwrap();
                m.spec()?;
                if !(m.eps > 0.0 && m.eps < 1.0 && m.delta > 0.0 && m.delta < 1.0) {
                    return bad(format!("need ε, δ in (0, 1), got {}, {}", m.eps, m.delta));
                }
                if m.m_grid.len() < 2 || m.m_grid.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("m_grid must be strictly ascending with at least two points".into());
                }
                if m.m_grid[0] == 0 || *m.m_grid.last().unwrap() > m.n {
                    return bad(format!("m_grid must lie in 1..={}", m.n));
                }
            }
        }
        Ok(())
    }
}
