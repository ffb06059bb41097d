//! Chordal and tangential cone guarantees and their Monte Carlo verification.
//!
//! `g_chordal` and `g_tangential` give the distortion budget at a cone's center
//! that forces every member of the cone below ε. The verifiers draw a center
//! and a projector, sample the cone boundary, and check the guarantee in both
//! directions.

use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::harness::seed::{derive_seed, rng_from, Label};
use crate::manifold_model::Form;
use crate::projector::{
    distortion_from_extremes, extreme_singular_values, sample_projector, subspace_distortion,
    vector_distortion, Projector, SubspaceBasis,
};
use crate::{Error, Result};

const VIOLATION_TOL: f64 = 1e-12;

fn check_sin(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("sin θ must lie in [0, 1], got {s}")));
    }
    Ok(())
}

fn check_eps_nm(eps: f64, n: usize, m: usize) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("ε must be positive, got {eps}")));
    }
    if m == 0 || m > n {
        return Err(Error::Domain(format!("need 1 ≤ M ≤ N, got M={m}, N={n}")));
    }
    Ok(())
}

/// Cone of chords around `center` with half-angle θ_C.
#[derive(Clone, Debug, PartialEq)]
pub struct ChordalCone {
    center: Vec<f64>,
    sin_theta: f64,
}

impl ChordalCone {
    pub fn new(center: Vec<f64>, sin_theta: f64) -> Result<Self> {
        if center.iter().all(|v| *v == 0.0) {
            return Err(Error::ZeroVector);
        }
        if !(sin_theta > 0.0 && sin_theta <= 1.0) {
            return Err(Error::Domain(format!("sin θ_C must lie in (0, 1], got {sin_theta}")));
        }
        Ok(ChordalCone { center, sin_theta })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn sin_theta(&self) -> f64 {
        self.sin_theta
    }

    pub fn sample_boundary(&self, seed: u64) -> Result<Vec<f64>> {
        sample_chordal_boundary(&self.center, self.sin_theta, seed)
    }
}

/// Subspaces within principal angle θ_T of `center`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentialCone {
    center: SubspaceBasis,
    sin_theta: f64,
}

impl TangentialCone {
    pub fn new(center: SubspaceBasis, sin_theta: f64) -> Result<Self> {
        if !(sin_theta > 0.0 && sin_theta <= 1.0) {
            return Err(Error::Domain(format!("sin θ_T must lie in (0, 1], got {sin_theta}")));
        }
        Ok(TangentialCone { center, sin_theta })
    }

    pub fn center(&self) -> &SubspaceBasis {
        &self.center
    }

    pub fn sin_theta(&self) -> f64 {
        self.sin_theta
    }

    pub fn sample_boundary(&self, seed: u64) -> Result<SubspaceBasis> {
        sample_tangential_boundary(&self.center, self.sin_theta, seed)
    }
}

/// g_C = ε − √(N/M) sin θ_C.
pub fn g_chordal(eps: f64, sin_theta_c: f64, n: usize, m: usize) -> Result<f64> {
    check_eps_nm(eps, n, m)?;
    check_sin(sin_theta_c)?;
    let g = eps - (n as f64 / m as f64).sqrt() * sin_theta_c;
    if g <= 0.0 {
        Err(Error::GuaranteeVacuous(g))
    } else {
        Ok(g)
    }
}

/// The ε_x solving g_C(ε_x, θ_C) = d.
pub fn chordal_eps_x(d: f64, sin_theta_c: f64, n: usize, m: usize) -> f64 {
    d + (n as f64 / m as f64).sqrt() * sin_theta_c
}

// min(g⁺, g⁻); NaN where a radicand is negative.
fn g_tangential_exact_raw(eps: f64, s: f64, r: f64) -> f64 {
    let up = (1.0 + eps).powi(2);
    let down = (1.0 - eps).powi(2);
    if r < up {
        return f64::NAN;
    }
    let a_plus = up - 2.0 * s * (r * (r - up)).sqrt() - r * s * s;
    let a_minus = down + 2.0 * s * (r * (r - down)).sqrt() - r * s * s;
    if a_plus < 0.0 || a_minus < 0.0 {
        return f64::NAN;
    }
    (a_plus.sqrt() - 1.0).min(1.0 - a_minus.sqrt())
}

/// The two exact branches (g⁺, g⁻).
pub fn g_tangential_branches(eps: f64, sin_theta_t: f64, n: usize, m: usize) -> Result<(f64, f64)> {
    check_eps_nm(eps, n, m)?;
    check_sin(sin_theta_t)?;
    let r = n as f64 / m as f64;
    let up = (1.0 + eps).powi(2);
    if r < up {
        return Err(Error::Domain(format!("exact form needs N/M ≥ (1+ε)², got N/M = {r}")));
    }
    let down = (1.0 - eps).powi(2);
    let s = sin_theta_t;
    let a_plus = up - 2.0 * s * (r * (r - up)).sqrt() - r * s * s;
    let a_minus = down + 2.0 * s * (r * (r - down)).sqrt() - r * s * s;
    if a_plus < 0.0 || a_minus < 0.0 {
        return Err(Error::Domain(format!(
            "negative radicand in exact tangential guarantee ({a_plus}, {a_minus})"
        )));
    }
    Ok((a_plus.sqrt() - 1.0, 1.0 - a_minus.sqrt()))
}

/// g_T: ε − (N/M) sin θ_T, or the exact min{g⁺, g⁻}.
pub fn g_tangential(eps: f64, sin_theta_t: f64, n: usize, m: usize, form: Form) -> Result<f64> {
    check_eps_nm(eps, n, m)?;
    check_sin(sin_theta_t)?;
    let g = match form {
        Form::Approx => eps - (n as f64 / m as f64) * sin_theta_t,
        Form::Exact => {
            let (p, q) = g_tangential_branches(eps, sin_theta_t, n, m)?;
            p.min(q)
        }
    };
    if g <= 0.0 {
        Err(Error::GuaranteeVacuous(g))
    } else {
        Ok(g)
    }
}

/// The ε_x solving g_T(ε_x, θ_T) = d; bisection to 1e-12 for the exact form.
/// Infinite when no admissible ε reaches d.
pub fn tangential_eps_x(d: f64, sin_theta_t: f64, n: usize, m: usize, form: Form) -> f64 {
    let r = n as f64 / m as f64;
    match form {
        Form::Approx => d + r * sin_theta_t,
        Form::Exact => {
            let g = |e: f64| {
                let v = g_tangential_exact_raw(e, sin_theta_t, r);
                if v.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    v
                }
            };
            let mut lo = d.max(0.0);
            let mut hi = (r.sqrt() - 1.0).min(1.0);
            if !(hi > lo) || g(hi) < d {
                return f64::INFINITY;
            }
            if g(lo) >= d {
                return lo;
            }
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                if g(mid) < d {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        }
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// A vector at angle θ_C from `x` with ‖y‖ = ‖x‖ and a uniform direction in x's complement.
pub fn sample_chordal_boundary(x: &[f64], sin_theta_c: f64, seed: u64) -> Result<Vec<f64>> {
    check_sin(sin_theta_c)?;
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut rng = rng_from(seed);
    let xh: Vec<f64> = x.iter().map(|v| v / norm).collect();
    let mut v = gaussian_vec(&mut rng, x.len());
    for _ in 0..2 {
        let t: f64 = v.iter().zip(&xh).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(&xh).for_each(|(a, b)| *a -= t * b);
    }
    let vn = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if vn == 0.0 {
        return Err(Error::NumericalBreakdown("degenerate complement direction".into()));
    }
    let c = (1.0 - sin_theta_c * sin_theta_c).sqrt();
    Ok(xh
        .iter()
        .zip(&v)
        .map(|(a, b)| norm * (c * a + sin_theta_c * b / vn))
        .collect())
}

/// U′ = U cos θ_T + V sin θ_T with V a random orthonormal frame orthogonal to U.
pub fn sample_tangential_boundary(
    u: &SubspaceBasis,
    sin_theta_t: f64,
    seed: u64,
) -> Result<SubspaceBasis> {
    check_sin(sin_theta_t)?;
    let (n, k) = (u.n(), u.k());
    if 2 * k > n {
        return Err(Error::Domain(format!("need 2K ≤ N, got K={k}, N={n}")));
    }
    let mut rng = rng_from(seed);
    let mut g = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    for _ in 0..2 {
        let proj = u.cols().transpose() * &g;
        g -= u.cols() * proj;
    }
    let v = SubspaceBasis::orthonormalize(g)?;
    let c = (1.0 - sin_theta_t * sin_theta_t).sqrt();
    let cols = u.cols() * c + v.cols() * sin_theta_t;
    SubspaceBasis::orthonormalize(cols)
}

/// How boundary members are generated inside the verifiers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundarySampler {
    /// Same distribution, represented through the projector row space: O(M·K²) per sample.
    #[default]
    Reduced,
    /// Full N-dimensional boundary vectors or frames.
    Explicit,
}

/// Shared settings for the cone verifiers.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySettings {
    pub n: usize,
    pub m: usize,
    pub n_boundary: usize,
    pub n_trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub sampler: BoundarySampler,
    #[serde(default)]
    pub form: Form,
}

/// One trial: center distortion against the worst boundary distortion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub dist_x: f64,
    pub worst_dist_y: f64,
    /// g(worst, θ); NaN when vacuous.
    pub g_value: f64,
    pub eps_x: f64,
    pub violated: bool,
    pub vacuous: bool,
    /// ε_x − worst; nonnegative when the guarantee holds.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub sin_theta: f64,
    pub trials: Vec<TrialRecord>,
    pub violations: usize,
    pub vacuous: usize,
    /// Violations over non-vacuous trials.
    pub violation_fraction: f64,
    pub mean_margin: f64,
}

impl VerificationReport {
    fn from_trials(sin_theta: f64, trials: Vec<TrialRecord>) -> Self {
        let violations = trials.iter().filter(|t| t.violated).count();
        let vacuous = trials.iter().filter(|t| t.vacuous).count();
        let live = trials.len() - vacuous;
        VerificationReport {
            sin_theta,
            violations,
            vacuous,
            violation_fraction: if live == 0 { 0.0 } else { violations as f64 / live as f64 },
            mean_margin: trials.iter().map(|t| t.margin).sum::<f64>() / trials.len().max(1) as f64,
            trials,
        }
    }

    /// Columns: trial, dist_x, worst_dist_y, g_value, eps_x, violated.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        wr.write_record(["trial", "dist_x", "worst_dist_y", "g_value", "eps_x", "violated"])
            .map_err(io)?;
        for t in &self.trials {
            wr.write_record([
                t.trial.to_string(),
                format!("{:.16e}", t.dist_x),
                format!("{:.16e}", t.worst_dist_y),
                format!("{:.16e}", t.g_value),
                format!("{:.16e}", t.eps_x),
                t.violated.to_string(),
            ])
            .map_err(io)?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn record(
    trial: usize,
    dist_x: f64,
    worst: f64,
    g: std::result::Result<f64, Error>,
    eps_x: f64,
) -> TrialRecord {
    let (g_value, vacuous) = match g {
        Ok(v) => (v, false),
        Err(_) => (f64::NAN, true),
    };
    let violated = !vacuous && (dist_x < g_value - VIOLATION_TOL || worst > eps_x + VIOLATION_TOL);
    TrialRecord {
        trial,
        dist_x,
        worst_dist_y: worst,
        g_value,
        eps_x,
        violated,
        vacuous,
        margin: eps_x - worst,
    }
}

fn check_settings(s: &VerifySettings) -> Result<()> {
    if s.m == 0 || s.m > s.n {
        return Err(Error::Domain(format!("need 1 ≤ M ≤ N, got M={}, N={}", s.m, s.n)));
    }
    if s.n_boundary == 0 || s.n_trials == 0 {
        return Err(Error::Domain("need at least one trial and one boundary sample".into()));
    }
    Ok(())
}

fn trial_seed(seed: u64, t: usize, what: &str) -> u64 {
    derive_seed(seed, &[Label::Name("trial"), Label::Index(t as u64), Label::Name(what)])
}

// Worst boundary distortion for one chordal trial, sampled through
// (Ag, g·x̂, ‖g‖²) for a Gaussian g instead of the full vector.
fn chordal_worst_reduced(a: &Projector, x: &[f64], s: f64, n_boundary: usize, seed: u64) -> f64 {
    let (n, m) = (a.n(), a.m());
    let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let p = a.apply(x) / xn;
    let pp = p.norm_squared();
    let r = (1.0 - pp).max(0.0).sqrt();
    let scale = a.scale();
    let c = (1.0 - s * s).sqrt();
    let dof = n.saturating_sub(m + 1);
    let chi = (dof > 0).then(|| ChiSquared::new(dof as f64).expect("positive dof"));
    let mut rng = rng_from(seed);
    let mut ga = vec![0.0; m];
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..n_boundary {
        for v in ga.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let z: f64 = rng.sample(StandardNormal);
        let q = chi.as_ref().map_or(0.0, |d| d.sample(&mut rng));
        let aa: f64 = ga.iter().map(|v| v * v).sum();
        let ap: f64 = ga.iter().zip(p.iter()).map(|(u, v)| u * v).sum();
        let t = ap + r * z;
        let vv = (aa + z * z + q - t * t).max(f64::MIN_POSITIVE);
        // ‖c p + s (a − t p)/√vv‖²
        let w = s / vv.sqrt();
        let ay2 = c * c * pp + 2.0 * c * w * (ap - t * pp) + w * w * (aa - 2.0 * t * ap + t * t * pp);
        let d = (scale * ay2.max(0.0).sqrt() - 1.0).abs();
        worst = worst.max(d);
    }
    worst
}

fn chordal_trial(s: &VerifySettings, sin_theta: f64, t: usize) -> Result<TrialRecord> {
    let mut xr = rng_from(trial_seed(s.seed, t, "x"));
    let x = gaussian_vec(&mut xr, s.n);
    let a = sample_projector(s.n, s.m, trial_seed(s.seed, t, "projector"))?;
    let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dist_x = (a.scale() * (a.apply(&x) / xn).norm_squared().sqrt() - 1.0).abs();
    let bseed = trial_seed(s.seed, t, "boundary");
    let worst = match s.sampler {
        _ if sin_theta == 0.0 => dist_x,
        BoundarySampler::Reduced => chordal_worst_reduced(&a, &x, sin_theta, s.n_boundary, bseed),
        BoundarySampler::Explicit => {
            let mut worst = f64::NEG_INFINITY;
            for j in 0..s.n_boundary {
                let jseed = derive_seed(bseed, &[Label::Index(j as u64)]);
                let y = sample_chordal_boundary(&x, sin_theta, jseed)?;
                worst = worst.max(vector_distortion(&a, &y)?);
            }
            worst
        }
    };
    let g = g_chordal(worst, sin_theta, s.n, s.m);
    Ok(record(t, dist_x, worst, g, chordal_eps_x(dist_x, sin_theta, s.n, s.m)))
}

/// Checks dist(x) ≥ g_C(max dist(y), θ_C) and max dist(y) ≤ ε_x over random (x, A).
pub fn verify_chordal_guarantee(s: &VerifySettings, sin_theta_c: f64) -> Result<VerificationReport> {
    check_settings(s)?;
    check_sin(sin_theta_c)?;
    let trials = (0..s.n_trials)
        .into_par_iter()
        .map(|t| chordal_trial(s, sin_theta_c, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(VerificationReport::from_trials(sin_theta_c, trials))
}

fn subspace_dist_fast(b: &DMatrix<f64>, scale: f64) -> f64 {
    let (hi, lo) = extreme_singular_values(b);
    distortion_from_extremes(hi, lo, scale)
}

// Bartlett factor of a K×K Wishart(I, dof) draw.
fn wishart(rng: &mut ChaCha8Rng, k: usize, dof: usize, chis: &[ChiSquared<f64>]) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(k, k);
    for i in 0..k {
        l[(i, i)] = if dof > i { chis[i].sample(rng).sqrt() } else { 0.0 };
        for j in 0..i {
            l[(i, j)] = rng.sample(StandardNormal);
        }
    }
    &l * l.transpose()
}

// Worst boundary distortion for one tangential trial. A Gaussian N×K block G
// enters only through AG, UᵀG and GᵀG, which are drawn jointly in K- and
// M-dimensional pieces.
fn tangential_worst_reduced(
    a: &Projector,
    u: &SubspaceBasis,
    s: f64,
    n_boundary: usize,
    seed: u64,
) -> Result<f64> {
    let (n, m, k) = (a.n(), a.m(), u.k());
    let p = a.rows() * u.cols();
    let rest = DMatrix::<f64>::identity(k, k) - p.transpose() * &p;
    let t = rest
        .cholesky()
        .ok_or_else(|| Error::NumericalBreakdown("U has a direction inside the row space of A".into()))?
        .l()
        .transpose();
    let dof = n.saturating_sub(m + k);
    let chis: Vec<ChiSquared<f64>> = (0..k)
        .map(|i| ChiSquared::new((dof - i) as f64).expect("positive dof"))
        .collect();
    let c = (1.0 - s * s).sqrt();
    let scale = a.scale();
    let mut rng = rng_from(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..n_boundary {
        let ga = DMatrix::from_fn(m, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let z = DMatrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let w = wishart(&mut rng, k, dof, &chis);
        let cm = p.transpose() * &ga + t.transpose() * &z;
        let gram = ga.transpose() * &ga + z.transpose() * &z + w;
        let sch = gram - cm.transpose() * &cm;
        let r = sch
            .cholesky()
            .ok_or_else(|| Error::NumericalBreakdown("degenerate complement frame".into()))?
            .l()
            .transpose();
        let av_raw = &ga - &p * &cm;
        // AV = (AG − AU·UᵀG) R⁻¹
        let av = r
            .transpose()
            .solve_lower_triangular(&av_raw.transpose())
            .ok_or_else(|| Error::NumericalBreakdown("singular triangular factor".into()))?
            .transpose();
        let b = &p * c + av * s;
        worst = worst.max(subspace_dist_fast(&b, scale));
    }
    Ok(worst)
}

fn tangential_trial(s: &VerifySettings, k: usize, sin_theta: f64, t: usize) -> Result<TrialRecord> {
    let u = SubspaceBasis::random(s.n, k, trial_seed(s.seed, t, "u"))?;
    let a = sample_projector(s.n, s.m, trial_seed(s.seed, t, "projector"))?;
    let bseed = trial_seed(s.seed, t, "boundary");
    let dist_u = subspace_dist_fast(&(a.rows() * u.cols()), a.scale());
    let reduced = s.sampler == BoundarySampler::Reduced && s.n >= s.m + 2 * k;
    let worst = if sin_theta == 0.0 {
        dist_u
    } else if reduced {
        tangential_worst_reduced(&a, &u, sin_theta, s.n_boundary, bseed)?
    } else {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..s.n_boundary {
            let jseed = derive_seed(bseed, &[Label::Index(j as u64)]);
            let u2 = sample_tangential_boundary(&u, sin_theta, jseed)?;
            worst = worst.max(subspace_distortion(&a, &u2)?);
        }
        worst
    };
    let g = g_tangential(worst, sin_theta, s.n, s.m, s.form);
    let eps_x = tangential_eps_x(dist_u, sin_theta, s.n, s.m, s.form);
    Ok(record(t, dist_u, worst, g, eps_x))
}

/// Checks dist(U) ≥ g_T(max dist(U′), θ_T) over random (U, A).
pub fn verify_tangential_guarantee(
    s: &VerifySettings,
    k: usize,
    sin_theta_t: f64,
) -> Result<VerificationReport> {
    check_settings(s)?;
    check_sin(sin_theta_t)?;
    if k == 0 || k > s.m || 2 * k > s.n {
        return Err(Error::Domain(format!(
            "need 1 ≤ K ≤ M and 2K ≤ N, got K={k}, M={}, N={}",
            s.m, s.n
        )));
    }
    let trials = (0..s.n_trials)
        .into_par_iter()
        .map(|t| tangential_trial(s, k, sin_theta_t, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(VerificationReport::from_trials(sin_theta_t, trials))
}
