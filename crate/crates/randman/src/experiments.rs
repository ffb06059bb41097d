//! The empirical pipeline: distortion distributions over random projections,
//! the ε quantile at failure probability δ, empirical M*, the scaling-law fit
//! and the data tables behind the figures.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::gp_sampler::{
    empirical_chord_sq, empirical_principal_angles, sample_manifold, signed_tangent_cosine,
    tangent_frames, FdOrder, ManifoldSample, TangentFrames,
};
use crate::harness::seed::{derive_seed, Label};
use crate::manifold_model::{
    expected_chord_sq, expected_principal_cosines, expected_tangent_cosine, intrinsic_separation,
    ManifoldSpec,
};
use crate::projector::{
    pointset_max_distortion, sample_projector, tangent_plane_distortions, ChordCache,
    DistortionSummary, PairPolicy, Provenance,
};
use crate::theory::{bw_underestimate, m_star_bound, nv_underestimate};
use crate::{Error, Result};

/// A sampled manifold plus everything reused across projectors.
pub struct PreparedManifold {
    pub sample: ManifoldSample,
    pub policy: PairPolicy,
    cache: Option<ChordCache>,
    frames: Option<TangentFrames>,
}

impl PreparedManifold {
    pub fn new(sample: ManifoldSample, policy: PairPolicy, include_tangents: bool) -> Result<Self> {
        let cache = (policy == PairPolicy::All).then(|| ChordCache::new(&sample.columns()));
        let frames = if include_tangents {
            Some(tangent_frames(&sample, FdOrder::Second)?)
        } else {
            None
        };
        Ok(PreparedManifold { sample, policy, cache, frames })
    }

    /// Worst distortion of the manifold under projector `seed`.
    pub fn max_distortion(&self, m: usize, seed: u64) -> Result<(f64, Provenance)> {
        let a = sample_projector(self.sample.dim(), m, seed)?;
        let (mut d, mut prov) =
            pointset_max_distortion(&a, &self.sample.columns(), &self.policy, self.cache.as_ref())?;
        if let Some(frames) = &self.frames {
            for (point, t) in tangent_plane_distortions(&a, frames)?.into_iter().enumerate() {
                if t > d {
                    d = t;
                    prov = Provenance::TangentPlane { point };
                }
            }
        }
        Ok((d, prov))
    }
}

/// Knobs shared by the experiment drivers.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentOptions {
    /// `None` selects all pairs up to 4096 points and a 10⁷-pair subsample beyond.
    #[serde(default)]
    pub pair_policy: Option<PairPolicy>,
    #[serde(default)]
    pub include_tangents: bool,
    /// Draw a new manifold for every M instead of one per parameter point.
    #[serde(default)]
    pub fresh_manifold_per_m: bool,
}

impl ExperimentOptions {
    fn policy(&self, n_points: usize, seed: u64) -> PairPolicy {
        self.pair_policy
            .clone()
            .unwrap_or_else(|| PairPolicy::auto(n_points, derive_seed(seed, &[Label::Name("pairs")])))
    }
}

fn projector_seed(seed: u64, m: usize, k: usize) -> u64 {
    derive_seed(
        seed,
        &[Label::Name("M"), Label::Index(m as u64), Label::Name("projector"), Label::Index(k as u64)],
    )
}

fn manifold_seed(seed: u64) -> u64 {
    derive_seed(seed, &[Label::Name("manifold")])
}

/// `n_proj` worst-case distortions of one prepared manifold at projection dimension M.
pub fn distortion_distribution_on(
    prep: &PreparedManifold,
    m: usize,
    n_proj: usize,
    seed: u64,
) -> Result<DistortionSummary> {
    use rayon::prelude::*;
    if n_proj == 0 {
        return Err(Error::TooFewSamples { need: 1, have: 0 });
    }
    let draws = (0..n_proj)
        .into_par_iter()
        .map(|k| prep.max_distortion(m, projector_seed(seed, m, k)))
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let mut summary = DistortionSummary::from_samples(samples);
    if let Provenance::Sample { index } = summary.argmax {
        summary.argmax = Provenance::Projector {
            index,
            worst: Box::new(draws[index].1.clone()),
        };
    }
    summary.policy = Some(prep.policy.clone());
    Ok(summary)
}

/// One manifold realization, `n_proj` projectors, one max-distortion sample each.
pub fn distortion_distribution(
    spec: &ManifoldSpec,
    m: usize,
    n_proj: usize,
    policy: &PairPolicy,
    seed: u64,
) -> Result<DistortionSummary> {
    if m == 0 || m > spec.n() {
        return Err(Error::Domain(format!("need 1 ≤ M ≤ N, got M={m}, N={}", spec.n())));
    }
    let sample = sample_manifold(spec, manifold_seed(seed))?;
    let prep = PreparedManifold::new(sample, policy.clone(), false)?;
    distortion_distribution_on(&prep, m, n_proj, seed)
}

/// The ⌈(1−δ)n⌉-th order statistic.
pub fn epsilon_at_delta(summary: &DistortionSummary, delta: f64) -> Result<f64> {
    quantile_at_delta(&summary.samples, delta)
}

pub fn quantile_at_delta(samples: &[f64], delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("δ must lie in (0, 1), got {delta}")));
    }
    let n = samples.len();
    let need = (1.0 / delta - 1e-9).ceil() as usize;
    if n < need {
        return Err(Error::TooFewSamples { need, have: n });
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let rank = (((1.0 - delta) * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    Ok(s[rank - 1])
}

/// Pool-adjacent-violators fit of a nonincreasing sequence (unit weights).
pub fn isotonic_nonincreasing(v: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(v.len());
    for &x in v {
        blocks.push((x, 1));
        while blocks.len() >= 2 {
            let (m2, c2) = blocks[blocks.len() - 1];
            let (m1, c1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.pop();
            let total = c1 + c2;
            *blocks.last_mut().unwrap() = ((m1 * c1 as f64 + m2 * c2 as f64) / total as f64, total);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, c)| std::iter::repeat_n(m, c))
        .collect()
}

/// Smallest M with quantile ≤ target, interpolated linearly in (ln M, ε).
pub fn m_star_from_quantiles(m_grid: &[usize], quantiles: &[f64], target: f64) -> Result<f64> {
    if m_grid.len() < 2 || m_grid.len() != quantiles.len() {
        return Err(Error::Domain("need at least two grid points with matching quantiles".into()));
    }
    if m_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("M grid must be strictly ascending".into()));
    }
    let Some(i) = quantiles.iter().position(|q| *q <= target) else {
        return Err(Error::Unachievable { target, best: *quantiles.last().unwrap() });
    };
    if i == 0 {
        return Ok(m_grid[0] as f64);
    }
    let (x0, x1) = ((m_grid[i - 1] as f64).ln(), (m_grid[i] as f64).ln());
    let (q0, q1) = (quantiles[i - 1], quantiles[i]);
    let t = (q0 - target) / (q0 - q1);
    Ok((x0 + t * (x1 - x0)).exp())
}

/// Empirical minimum projection dimension for one parameter point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MStarResult {
    pub eps_target: f64,
    pub delta: f64,
    pub m_grid: Vec<usize>,
    pub raw_quantiles: Vec<f64>,
    pub quantiles: Vec<f64>,
    pub isotonic_adjusted: bool,
    pub m_star: f64,
    pub n_points: usize,
    pub n_proj: usize,
}

/// Log-spaced integer grid from `lo` to `hi` (inclusive, deduplicated).
pub fn log_grid(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut g: Vec<usize> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count.max(2) - 1) as f64).exp().round() as usize)
        .collect();
    g.dedup();
    g
}

pub const DEFAULT_M_GRID: (usize, usize, usize) = (4, 200, 16);

/// ε quantiles over the grid, isotonic adjustment, then interpolation to the target.
/// Returns `Unachievable` when even the largest M misses the target.
pub fn m_star_empirical(
    spec: &ManifoldSpec,
    eps_target: f64,
    delta: f64,
    m_grid: &[usize],
    n_proj: usize,
    seed: u64,
    opts: &ExperimentOptions,
) -> Result<MStarResult> {
    if m_grid.len() < 2 {
        return Err(Error::Domain("M grid needs at least two points".into()));
    }
    if let Some(m) = m_grid.iter().find(|m| **m == 0 || **m > spec.n()) {
        return Err(Error::Domain(format!("grid value M={m} outside 1..=N={}", spec.n())));
    }
    let need = (1.0 / delta - 1e-9).ceil() as usize;
    if n_proj < need {
        return Err(Error::TooFewSamples { need, have: n_proj });
    }
    let policy = opts.policy(spec.n_points(), seed);
    let mut shared: Option<PreparedManifold> = None;
    let mut raw = Vec::with_capacity(m_grid.len());
    for &m in m_grid {
        let fresh;
        let prep = if opts.fresh_manifold_per_m {
            let s = derive_seed(manifold_seed(seed), &[Label::Index(m as u64)]);
            fresh = PreparedManifold::new(sample_manifold(spec, s)?, policy.clone(), opts.include_tangents)?;
            &fresh
        } else {
            if shared.is_none() {
                let sample = sample_manifold(spec, manifold_seed(seed))?;
                shared = Some(PreparedManifold::new(sample, policy.clone(), opts.include_tangents)?);
            }
            shared.as_ref().unwrap()
        };
        let summary = distortion_distribution_on(prep, m, n_proj, seed)?;
        raw.push(epsilon_at_delta(&summary, delta)?);
    }
    let quantiles = isotonic_nonincreasing(&raw);
    let m_star = m_star_from_quantiles(m_grid, &quantiles, eps_target)?;
    Ok(MStarResult {
        eps_target,
        delta,
        m_grid: m_grid.to_vec(),
        isotonic_adjusted: quantiles != raw,
        raw_quantiles: raw,
        quantiles,
        m_star,
        n_points: spec.n_points(),
        n_proj,
    })
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub k: usize,
    pub ln_v: f64,
    pub eps: f64,
    pub m_star: f64,
}

/// M*ε² ≈ a·lnV + b·K.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingFit {
    pub a: f64,
    pub b: f64,
    pub residuals: Vec<f64>,
}

/// Ordinary least squares of M*ε² on (lnV, K) without intercept.
pub fn scaling_fit(points: &[ScalingPoint]) -> Result<ScalingFit> {
    if points.len() < 2 {
        return Err(Error::RankDeficient);
    }
    let (mut sll, mut slk, mut skk, mut rl, mut rk) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let (l, k, y) = (p.ln_v, p.k as f64, p.m_star * p.eps * p.eps);
        sll += l * l;
        slk += l * k;
        skk += k * k;
        rl += l * y;
        rk += k * y;
    }
    let det = sll * skk - slk * slk;
    if !(det > 1e-12 * sll * skk) {
        return Err(Error::RankDeficient);
    }
    let a = (rl * skk - rk * slk) / det;
    let b = (sll * rk - slk * rl) / det;
    let residuals = points
        .iter()
        .map(|p| p.m_star * p.eps * p.eps - (a * p.ln_v + b * p.k as f64))
        .collect();
    Ok(ScalingFit { a, b, residuals })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureKind {
    Fig4,
    Fig5,
    Fig6a,
    Fig6b,
}

impl FromStr for FigureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig4" => Ok(FigureKind::Fig4),
            "fig5" => Ok(FigureKind::Fig5),
            "fig6a" => Ok(FigureKind::Fig6a),
            "fig6b" => Ok(FigureKind::Fig6b),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

/// Figure parameters; unset fields take the kind's defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureParams {
    pub n: Option<usize>,
    pub ell: Option<f64>,
    pub lambda: Option<Vec<f64>>,
    pub extent: Option<Vec<f64>>,
    pub grid: Option<Vec<usize>>,
    /// Reference points whose pairings with every grid point are tabulated (fig4, fig5).
    pub references: Option<usize>,
    pub k_values: Option<Vec<usize>>,
    pub ln_v_values: Option<Vec<f64>>,
    pub n_values: Option<Vec<usize>>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub m_grid: Option<Vec<usize>>,
    pub n_proj: Option<usize>,
    /// Grid intervals per correlation length (fig6); defaults to 16/K.
    pub per_lambda: Option<f64>,
    pub options: Option<ExperimentOptions>,
}

/// Columns of numbers with a header.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// ln((10√2/3)^K), the fixed volume of the N sweep.
pub fn fig6b_ln_volume(k: usize) -> f64 {
    k as f64 * (10.0 * 2f64.sqrt() / 3.0).ln()
}

pub const FIG6_PER_LAMBDA: f64 = 16.0;

fn reference_indices(frames: &TangentFrames, count: usize) -> Vec<usize> {
    let interior = frames.interior_indices();
    let count = count.clamp(1, interior.len());
    (0..count)
        .map(|r| interior[(r * interior.len() + interior.len() / 2) / count])
        .collect()
}

fn curve_table(p: &FigureParams, seed: u64) -> Result<Table> {
    let spec = ManifoldSpec::new(
        p.n.unwrap_or(1000),
        p.ell.unwrap_or(1.0),
        p.lambda.clone().unwrap_or(vec![1.0]),
        p.extent.clone().unwrap_or(vec![10.0]),
        p.grid.clone().unwrap_or(vec![1024]),
    )?;
    if spec.k() != 1 {
        return Err(Error::InvalidConfig("fig4 needs a one-dimensional manifold".into()));
    }
    let sample = sample_manifold(&spec, manifold_seed(seed))?;
    let frames = tangent_frames(&sample, FdOrder::Second)?;
    let mut t = Table::new(
        "fig4",
        &["i", "j", "rho", "chord_sq", "chord_sq_theory", "tangent_cos", "tangent_cos_theory"],
    );
    for i in reference_indices(&frames, p.references.unwrap_or(8)) {
        for j in 0..spec.n_points() {
            let rho = intrinsic_separation(&spec, &spec.coords(i), &spec.coords(j))?;
            t.rows.push(vec![
                i as f64,
                j as f64,
                rho,
                empirical_chord_sq(&sample, i, j)?,
                expected_chord_sq(rho, spec.ell())?,
                signed_tangent_cosine(&frames, i, j)?,
                expected_tangent_cosine(rho)?,
            ]);
        }
    }
    Ok(t)
}

fn surface_table(p: &FigureParams, seed: u64) -> Result<Table> {
    let spec = ManifoldSpec::new(
        p.n.unwrap_or(200),
        p.ell.unwrap_or(1.0),
        p.lambda.clone().unwrap_or(vec![1.0, 1.8]),
        p.extent.clone().unwrap_or(vec![12.0, 20.0]),
        p.grid.clone().unwrap_or(vec![64, 64]),
    )?;
    let k = spec.k();
    let sample = sample_manifold(&spec, manifold_seed(seed))?;
    let frames = tangent_frames(&sample, FdOrder::Second)?;
    let mut cols: Vec<String> = ["i", "j", "rho", "chord_sq", "chord_sq_theory"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend((1..=k).map(|a| format!("cos_{a}")));
    cols.extend((1..=k).map(|a| format!("cos_{a}_theory")));
    let mut t = Table { name: "fig5".into(), columns: cols, rows: Vec::new() };
    for i in reference_indices(&frames, p.references.unwrap_or(4)) {
        for j in 0..spec.n_points() {
            let rho = intrinsic_separation(&spec, &spec.coords(i), &spec.coords(j))?;
            let mut theory = expected_principal_cosines(rho, k)?;
            theory.sort_by(|a, b| b.total_cmp(a));
            let mut row = vec![
                i as f64,
                j as f64,
                rho,
                empirical_chord_sq(&sample, i, j)?,
                expected_chord_sq(rho, spec.ell())?,
            ];
            row.extend(empirical_principal_angles(&frames, i, j)?);
            row.extend(theory);
            t.rows.push(row);
        }
    }
    Ok(t)
}

const FIG6_COLUMNS: [&str; 14] = [
    "K", "lnV", "N", "eps_target", "delta", "m_star_emp", "m_star_new", "m_star_bw", "m_star_nv",
    "x", "y_emp", "y_new", "y_bw", "y_nv",
];

fn fig6_row(
    k: usize,
    ln_v: f64,
    n: usize,
    eps: f64,
    delta: f64,
    emp: f64,
    x: f64,
) -> Vec<f64> {
    let nf = n as f64;
    let new = m_star_bound(eps, delta, k, nf, ln_v);
    let bw = bw_underestimate(eps, delta, k, nf, ln_v);
    let nv = nv_underestimate(eps, delta, k, ln_v);
    let y = |m: f64| m * eps * eps / k as f64;
    vec![
        k as f64, ln_v, nf, eps, delta, emp, new, bw, nv, x, y(emp), y(new), y(bw), y(nv),
    ]
}

fn sweep_table(kind: FigureKind, p: &FigureParams, seed: u64) -> Result<Table> {
    let eps = p.eps.unwrap_or(0.2);
    let delta = p.delta.unwrap_or(0.05);
    let (lo, hi, count) = DEFAULT_M_GRID;
    let m_grid = p.m_grid.clone().unwrap_or_else(|| log_grid(lo, hi, count));
    let n_proj = p.n_proj.unwrap_or(100);
    let ell = p.ell.unwrap_or(1.0);
    let opts = p.options.clone().unwrap_or_default();
    let ks = p.k_values.clone().unwrap_or(vec![1, 2]);
    let mut points: Vec<(usize, f64, usize)> = Vec::new();
    match kind {
        FigureKind::Fig6a => {
            let n = p.n.unwrap_or(1000);
            let lnvs = p.ln_v_values.clone().unwrap_or(vec![1.0, 2.0, 3.0]);
            for &k in &ks {
                for &lv in &lnvs {
                    points.push((k, lv, n));
                }
            }
        }
        _ => {
            let ns = p.n_values.clone().unwrap_or(vec![200, 500, 1000, 2000]);
            for &k in &ks {
                for &n in &ns {
                    points.push((k, fig6b_ln_volume(k), n));
                }
            }
        }
    }
    let name = if kind == FigureKind::Fig6a { "fig6a" } else { "fig6b" };
    let mut t = Table::new(name, &FIG6_COLUMNS);
    for (idx, (k, ln_v, n)) in points.into_iter().enumerate() {
        let per_lambda = p.per_lambda.unwrap_or(FIG6_PER_LAMBDA / k as f64);
        let spec = ManifoldSpec::isotropic(k, n, ell, ln_v, per_lambda)?;
        let grid: Vec<usize> = m_grid.iter().copied().filter(|m| *m <= n).collect();
        let pseed = derive_seed(seed, &[Label::Name(name), Label::Index(idx as u64)]);
        let emp = match m_star_empirical(&spec, eps, delta, &grid, n_proj, pseed, &opts) {
            Ok(r) => r.m_star,
            Err(Error::Unachievable { .. }) => f64::NAN,
            Err(e) => return Err(e),
        };
        let x = if kind == FigureKind::Fig6a { ln_v / k as f64 } else { (n as f64).ln() };
        t.rows.push(fig6_row(k, ln_v, n, eps, delta, emp, x));
    }
    Ok(t)
}

/// (x, empirical, theory) data behind each figure.
pub fn figure_data(kind: FigureKind, params: &FigureParams, seed: u64) -> Result<Table> {
    match kind {
        FigureKind::Fig4 => curve_table(params, seed),
        FigureKind::Fig5 => surface_table(params, seed),
        FigureKind::Fig6a | FigureKind::Fig6b => sweep_table(kind, params, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pava_pools_violations() {
        assert_eq!(isotonic_nonincreasing(&[3.0, 1.0, 2.0, 0.0]), vec![3.0, 1.5, 1.5, 0.0]);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(4, 200, 16);
        assert_eq!(g[0], 4);
        assert_eq!(*g.last().unwrap(), 200);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
