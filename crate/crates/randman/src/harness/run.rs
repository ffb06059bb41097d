//! Subcommand execution.
//!
//! Every command first renders its artifacts in memory, then writes them.
//! Replay re-renders from a manifest and compares bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::Value;

use super::config::{Command, Format, RunConfig};
use super::output::{sheet_csv, sheet_json, Cell, Header, Manifest, Sheet};
use super::seed::{derive_seed, Label};
use crate::cone_guarantees::{
    verify_chordal_guarantee, verify_tangential_guarantee, VerificationReport, VerifySettings,
};
use crate::experiments::{figure_data, m_star_empirical};
use crate::gp_sampler::{sample_manifold, self_averaging_audit, write_dump};
use crate::theory::{bound_report, m_star_bound, BoundQuery};
use crate::{Error, Result};

pub const MANIFEST: &str = "manifest.json";

/// Rendered files plus the seeds that produced them.
pub struct Rendered {
    pub files: Vec<(String, Vec<u8>)>,
    pub seeds: BTreeMap<String, u64>,
}

pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub artifacts: Vec<PathBuf>,
    pub manifest: PathBuf,
}

fn cmd_seed(master: u64, cmd: Command) -> u64 {
    derive_seed(master, &[Label::Name(cmd.name())])
}

fn header(cmd: Command, cfg: &RunConfig) -> Result<Header> {
    // The out_dir is left out so a relocated run replays identically.
    let mut config = serde_json::to_value(cfg).map_err(|e| Error::Io(e.to_string()))?;
    if let Value::Object(map) = &mut config {
        map.remove("out_dir");
        map.remove("threads");
    }
    Ok(Header {
        version: env!("CARGO_PKG_VERSION").into(),
        command: cmd.name().into(),
        master_seed: cfg.master_seed,
        config,
    })
}

fn cone_rows(trials: &mut Sheet, summary: &mut Sheet, cone: &str, rep: &VerificationReport) {
    for t in &rep.trials {
        trials.push(vec![
            cone.into(),
            rep.sin_theta.into(),
            t.trial.into(),
            t.dist_x.into(),
            t.worst_dist_y.into(),
            t.g_value.into(),
            t.eps_x.into(),
            t.margin.into(),
            t.violated.into(),
            t.vacuous.into(),
        ]);
    }
    summary.push(vec![
        cone.into(),
        rep.sin_theta.into(),
        rep.trials.len().into(),
        rep.violations.into(),
        rep.vacuous.into(),
        rep.violation_fraction.into(),
        rep.mean_margin.into(),
    ]);
}

pub const BOUNDS_COLUMNS: [&str; 25] = [
    "eps", "delta", "K", "N", "lnV", "M", "mu", "delta_long", "delta_long_applicable",
    "delta_short", "delta_short_applicable", "delta_total", "m_star_new", "gamma_star_c",
    "sin_theta_c_star", "chordal_applicable", "gamma_star_t", "sin_theta_t_star",
    "tangential_applicable", "asymptotic_regime", "m_star_bw", "m_star_nv", "rho_star", "c0",
    "m_explicit",
];

fn sheets(cmd: Command, cfg: &RunConfig) -> Result<(Vec<Sheet>, Vec<(String, Vec<u8>)>, BTreeMap<String, u64>)> {
    let seed = cmd_seed(cfg.master_seed, cmd);
    let mut seeds = BTreeMap::new();
    seeds.insert(cmd.name().to_string(), seed);
    let mut out = Vec::new();
    let mut raw = Vec::new();
    match cmd {
        Command::Sample => {
            let c = cfg.sample.as_ref().unwrap();
            let s = sample_manifold(&c.spec()?, seed)?;
            let a = self_averaging_audit(&s);
            let mut sh = Sheet::new(
                "sample_audit",
                &["K", "N", "n_points", "mean_norm_sq", "rel_sd", "expected_mean", "expected_rel_sd", "max_jitter"],
            );
            let jitter = s.jitter.iter().cloned().fold(0.0, f64::max);
            sh.push(vec![
                s.spec.k().into(),
                s.dim().into(),
                a.n_points.into(),
                a.mean.into(),
                a.rel_sd.into(),
                a.expected_mean.into(),
                a.expected_rel_sd.into(),
                jitter.into(),
            ]);
            out.push(sh);
            if c.dump {
                let mut bytes = Vec::new();
                write_dump(&s, &mut bytes)?;
                raw.push(("sample.rman".to_string(), bytes));
            }
        }
        Command::VerifyCones => {
            let c = cfg.verify_cones.as_ref().unwrap();
            let mut trials = Sheet::new(
                "cones_trials",
                &["cone", "sin_theta", "trial", "dist_x", "worst_dist_y", "g_value", "eps_x", "margin", "violated", "vacuous"],
            );
            let mut summary = Sheet::new(
                "cones_summary",
                &["cone", "sin_theta", "trials", "violations", "vacuous", "violation_fraction", "mean_margin"],
            );
            let chordal_seed = derive_seed(seed, &[Label::Name("chordal")]);
            let tangential_seed = derive_seed(seed, &[Label::Name("tangential")]);
            seeds.insert("chordal".into(), chordal_seed);
            seeds.insert("tangential".into(), tangential_seed);
            let settings = |n_boundary, seed| VerifySettings {
                n: c.n,
                m: c.m,
                n_boundary,
                n_trials: c.trials,
                seed,
                sampler: c.sampler,
                form: c.form,
            };
            for &s in &c.chordal_sin_theta {
                let rep = verify_chordal_guarantee(&settings(c.chordal_boundary, chordal_seed), s)?;
                cone_rows(&mut trials, &mut summary, "chordal", &rep);
            }
            for &s in &c.tangential_sin_theta {
                let rep = verify_tangential_guarantee(
                    &settings(c.tangential_boundary, tangential_seed),
                    c.tangential_k,
                    s,
                )?;
                cone_rows(&mut trials, &mut summary, "tangential", &rep);
            }
            out.push(summary);
            out.push(trials);
        }
        Command::Bounds => {
            let c = cfg.bounds.as_ref().unwrap();
            let mut sh = Sheet::new("bounds", &BOUNDS_COLUMNS);
            let ms: Vec<Option<f64>> = if c.m.is_empty() {
                vec![None]
            } else {
                c.m.iter().map(|m| Some(*m)).collect()
            };
            for &eps in &c.eps {
                for &delta in &c.delta {
                    for &k in &c.k {
                        for &n in &c.n {
                            for &ln_v in &c.ln_v {
                                for &m in &ms {
                                    let r = bound_report(&BoundQuery::new(eps, delta, k, n, ln_v, m)?);
                                    sh.push(vec![
                                        r.eps.into(),
                                        r.delta.into(),
                                        r.k.into(),
                                        r.n.into(),
                                        r.ln_v.into(),
                                        r.m.into(),
                                        r.mu.into(),
                                        r.delta_long.into(),
                                        r.delta_long_applicable.into(),
                                        r.delta_short.into(),
                                        r.delta_short_applicable.into(),
                                        r.delta_total.into(),
                                        r.m_bar.into(),
                                        r.gamma_star_c.into(),
                                        r.sin_theta_c_star.into(),
                                        r.chordal_applicable.into(),
                                        r.gamma_star_t.into(),
                                        r.sin_theta_t_star.into(),
                                        r.tangential_applicable.into(),
                                        r.asymptotic_regime.into(),
                                        r.m_bw.into(),
                                        r.m_nv.into(),
                                        r.rho_star.into(),
                                        r.c0.into(),
                                        m.is_some().into(),
                                    ]);
                                }
                            }
                        }
                    }
                }
            }
            out.push(sh);
        }
        Command::Figure => {
            let c = cfg.figure.as_ref().unwrap();
            out.push(figure_data(c.kind, &c.params, seed)?.into());
        }
        Command::Mstar => {
            let c = cfg.mstar.as_ref().unwrap();
            let spec = c.spec()?;
            let r = m_star_empirical(&spec, c.eps, c.delta, &c.m_grid, c.n_proj, seed, &c.options)?;
            let mut grid = Sheet::new("mstar_grid", &["M", "raw_quantile", "quantile"]);
            for ((m, raw_q), q) in r.m_grid.iter().zip(&r.raw_quantiles).zip(&r.quantiles) {
                grid.push(vec![(*m).into(), (*raw_q).into(), (*q).into()]);
            }
            let mut summary = Sheet::new(
                "mstar",
                &["K", "lnV", "N", "n_points", "eps_target", "delta", "n_proj", "m_star_emp", "m_star_new", "isotonic_adjusted"],
            );
            summary.push(vec![
                c.k.into(),
                spec.ln_volume().into(),
                c.n.into(),
                r.n_points.into(),
                r.eps_target.into(),
                r.delta.into(),
                r.n_proj.into(),
                r.m_star.into(),
                m_star_bound(c.eps, c.delta, c.k, c.n as f64, spec.ln_volume()).into(),
                Cell::Bool(r.isotonic_adjusted),
            ]);
            out.push(summary);
            out.push(grid);
        }
    }
    Ok((out, raw, seeds))
}

/// Validates `cfg` for `cmd` and renders every artifact without touching disk.
pub fn render(cmd: Command, cfg: &RunConfig) -> Result<Rendered> {
    cfg.validate(cmd)?;
    let head = header(cmd, cfg)?;
    let (sheets, raw, seeds) = with_threads(cfg.threads, || sheets(cmd, cfg))?;
    let mut files = Vec::new();
    for s in &sheets {
        match cfg.format {
            Format::Csv => files.push((format!("{}.csv", s.name), sheet_csv(s, &head)?)),
            Format::Json => files.push((format!("{}.json", s.name), sheet_json(s, &head)?)),
        }
    }
    files.extend(raw);
    Ok(Rendered { files, seeds })
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(f)
}

/// Runs `cmd`, writing artifacts and `manifest.json` into the configured directory.
pub fn run(cmd: Command, cfg: RunConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let cfg = cfg.resolve(cmd);
    let rendered = render(cmd, &cfg)?;
    let dir = cfg.out_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let mut artifacts = Vec::new();
    for (name, bytes) in &rendered.files {
        let path = dir.join(name);
        std::fs::write(&path, bytes)?;
        artifacts.push(path);
    }
    let manifest = Manifest {
        header: header(cmd, &cfg)?,
        artifacts: rendered.files.iter().map(|f| f.0.clone()).collect(),
        seeds: rendered.seeds,
        threads: cfg.threads,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let path = dir.join(MANIFEST);
    std::fs::write(&path, manifest.to_bytes()?)?;
    Ok(RunOutcome { out_dir: dir, artifacts, manifest: path })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReplayReport {
    pub identical: Vec<String>,
    pub differing: Vec<String>,
    pub missing: Vec<String>,
}

impl ReplayReport {
    pub fn ok(&self) -> bool {
        self.differing.is_empty() && self.missing.is_empty()
    }
}

/// Re-renders the run recorded in a manifest and diffs it byte for byte
/// against the artifacts stored next to it.
pub fn replay(manifest_path: &Path) -> Result<ReplayReport> {
    let text = std::fs::read_to_string(manifest_path)
        .map_err(|e| Error::Io(format!("{}: {e}", manifest_path.display())))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let cmd: Command = doc["header"]["command"]
        .as_str()
        .ok_or_else(|| Error::InvalidConfig("manifest lacks header.command".into()))?
        .parse()?;
    let mut cfg: RunConfig = serde_json::from_value(doc["header"]["config"].clone())
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    cfg.threads = doc["threads"].as_u64().unwrap_or(0) as usize;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let rendered = render(cmd, &cfg.resolve(cmd))?;
    let mut report = ReplayReport::default();
    for (name, bytes) in rendered.files {
        match std::fs::read(dir.join(&name)) {
            Ok(old) if old == bytes => report.identical.push(name),
            Ok(_) => report.differing.push(name),
            Err(_) => report.missing.push(name),
        }
    }
    Ok(report)
}
