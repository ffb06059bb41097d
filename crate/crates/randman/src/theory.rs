//! Closed-form failure-probability bounds and the projection counts they imply.
//!
//! Everything here is evaluated in log space and clamped at probability 1.
//! Out-of-regime inputs never raise; they come back with `applicable = false`.

use std::f64::consts::{E, LN_2, PI};

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

/// W_{−1}: the branch of W(x)e^{W(x)} = x with W ≤ −1, for −1/e ≤ x < 0.
pub fn lambert_w_minus1(x: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if !(x >= branch - 1e-15 && x < 0.0) {
        return Err(Error::Domain(format!("W_-1 needs -1/e <= x < 0, got {x}")));
    }
    let q = 1.0 + E * x;
    if q <= 0.0 {
        return Ok(-1.0);
    }
    let mut w = if x < -0.25 {
        let p = -(2.0 * q).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else {
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    };
    if q < 1e-12 {
        return Ok(w);
    }
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        if f == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        let dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= dw;
        if dw.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}

/// Saddle-point constants of the long-chord bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoryConstants {
    pub rho_star: f64,
    pub c0: f64,
    pub w_branch_value: f64,
}

pub fn theory_constants() -> TheoryConstants {
    let w = lambert_w_minus1(-0.5 / E.sqrt()).expect("argument inside the W_-1 domain");
    let rho_star = -1.0 - 2.0 * w;
    let c0 = rho_star / 2.0 + 0.5 * (PI / rho_star).ln() + 2.0 - 5.0 * LN_2;
    TheoryConstants { rho_star, c0, w_branch_value: w }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JlMode {
    #[default]
    Full,
    SmallEps,
}

fn clamp_prob(ln_value: f64) -> f64 {
    if ln_value >= 0.0 {
        1.0
    } else {
        ln_value.exp()
    }
}

/// ln of the unclamped JL failure bound for P points (P = 1: a single vector).
pub fn jl_point_ln_bound(eps: f64, m: f64, p: u64, mode: JlMode) -> f64 {
    let rate = match mode {
        JlMode::Full => (m / 2.0) * (eps * eps / 2.0 - eps.powi(3) / 3.0),
        JlMode::SmallEps => m * eps * eps / 4.0,
    };
    let pairs = if p >= 2 {
        (p as f64) * ((p - 1) as f64) / 2.0
    } else {
        1.0
    };
    pairs.ln() + LN_2 - rate
}

/// 2e^{−(M/2)(ε²/2−ε³/3)} per chord, times C(P,2) chords, clamped to 1.
pub fn jl_point_bound(eps: f64, m: f64, p: u64, mode: JlMode) -> f64 {
    clamp_prob(jl_point_ln_bound(eps, m, p, mode))
}

/// ln of 2(12/ε)^{cK}e^{−(M/16)(ε²−ε³/3)}.
pub fn jl_subspace_ln_bound(eps: f64, m: f64, k: usize, exponent_coeff: u32) -> f64 {
    LN_2 + (exponent_coeff as f64) * (k as f64) * (12.0 / eps).ln()
        - (m / 16.0) * (eps * eps - eps.powi(3) / 3.0)
}

pub fn jl_subspace_bound(eps: f64, m: f64, k: usize, exponent_coeff: u32) -> f64 {
    clamp_prob(jl_subspace_ln_bound(eps, m, k, exponent_coeff))
}

/// A clamped probability bound with its raw exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bound {
    pub value: f64,
    pub ln_value: f64,
    pub applicable: bool,
}

fn mu(eps: f64, m: f64, k: usize) -> f64 {
    m * eps * eps / k as f64
}

/// Failure probability from long intercellular chords. Applicable when μ ≥ 16 and the bound is below 1.
pub fn delta_long(eps: f64, m: f64, k: usize, n: f64, ln_v: f64) -> Bound {
    let kf = k as f64;
    let c0 = theory_constants().c0;
    let ln_value =
        -m * eps * eps / 4.0 + ln_v + kf * (n * m * eps * eps / kf).ln() + c0 - ln_gamma(kf / 2.0);
    Bound {
        value: clamp_prob(ln_value),
        ln_value,
        applicable: mu(eps, m, k) >= 16.0 && ln_value < 0.0,
    }
}

/// Which printed form of the short-chord bound to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShortVariant {
    /// Constant absorbed into 9√3e; consistent with M̄.
    #[default]
    Appendix,
    /// Carries an extra +K/2 in the exponent.
    Main,
}

fn ln_short_constant(eps: f64, k: usize, n: f64) -> f64 {
    (9.0 * 3f64.sqrt() * E * n / (eps * (k as f64).sqrt())).ln()
}

/// Failure probability from short intracellular chords. Applicable when μ ≥ 32 and the bound is below 1.
pub fn delta_short(eps: f64, m: f64, k: usize, n: f64, ln_v: f64, variant: ShortVariant) -> Bound {
    let kf = k as f64;
    let mut ln_value = -m * eps * eps / 16.0 + ln_v + kf * ln_short_constant(eps, k, n);
    if variant == ShortVariant::Main {
        ln_value += kf / 2.0;
    }
    Bound {
        value: clamp_prob(ln_value),
        ln_value,
        applicable: mu(eps, m, k) >= 32.0 && ln_value < 0.0,
    }
}

/// The dominant term: the appendix short-chord bound.
pub fn delta_total(eps: f64, m: f64, k: usize, n: f64, ln_v: f64) -> f64 {
    delta_short(eps, m, k, n, ln_v, ShortVariant::Appendix).value
}

/// 16(lnV + ln(1/δ) + K ln(9√3eN/(ε√K)))/ε² before rounding.
pub fn m_star_bound_real(eps: f64, delta: f64, k: usize, n: f64, ln_v: f64) -> f64 {
    16.0 * (ln_v + (1.0 / delta).ln() + k as f64 * ln_short_constant(eps, k, n)) / (eps * eps)
}

/// Smallest integer M with δ_total(M) ≤ δ.
pub fn m_star_bound(eps: f64, delta: f64, k: usize, n: f64, ln_v: f64) -> f64 {
    m_star_bound_real(eps, delta, k, n, ln_v).ceil().max(1.0)
}

/// Optimal cell sizes and cone angles for the long and short bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CellOptimum {
    pub mu: f64,
    pub gamma_star_c: f64,
    pub sin_theta_c_star: f64,
    pub chordal_applicable: bool,
    pub gamma_star_t: f64,
    pub sin_theta_t_star: f64,
    pub tangential_applicable: bool,
}

/// Closed-form minimizers; NaN with `applicable = false` outside μ ≥ 16 (chordal) / μ ≥ 32 (tangential).
pub fn optimal_cell_sizes(eps: f64, m: f64, k: usize, n: f64) -> CellOptimum {
    let kf = k as f64;
    let rho = theory_constants().rho_star;
    let mu = mu(eps, m, k);
    let chordal_applicable = mu >= 16.0;
    let (gamma_star_c, sin_theta_c_star) = if chordal_applicable {
        let gap = eps - (eps * eps - 16.0 * kf / m).max(0.0).sqrt();
        (
            (m * rho * (-rho / 2.0).exp() / (2.0 * kf * n)).sqrt() * gap,
            0.5 * (m / n).sqrt() * gap,
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    let tangential_applicable = mu >= 32.0;
    let (gamma_star_t, sin_theta_t_star) = if tangential_applicable {
        let gap = m * eps - (m * (m * eps * eps - 32.0 * kf)).max(0.0).sqrt();
        (gap / (n * (3.0 * kf).sqrt()), gap / (2.0 * n))
    } else {
        (f64::NAN, f64::NAN)
    };
    CellOptimum {
        mu,
        gamma_star_c,
        sin_theta_c_star,
        chordal_applicable,
        gamma_star_t,
        sin_theta_t_star,
        tangential_applicable,
    }
}

/// Geometric inputs required by the earlier manifold-JL bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PriorTheoryInputs {
    pub r_lower: f64,
    pub tau_upper: f64,
    pub secfund_norm: f64,
}

pub fn prior_theory_inputs(ell: f64) -> PriorTheoryInputs {
    PriorTheoryInputs {
        r_lower: 1.0 / (2.0 * PI * E).sqrt(),
        tau_upper: 2f64.sqrt() * ell,
        secfund_norm: 3f64.sqrt() / ell,
    }
}

/// Underestimate of the Baraniuk–Wakin projection count.
pub fn bw_underestimate(eps: f64, delta: f64, k: usize, n: f64, ln_v: f64) -> f64 {
    let kf = k as f64;
    let ln_arg = 4.0 * 3100f64.ln() + 3.0 * n.ln() + kf.ln() - (4.0 * PI * E).ln() - 6.0 * eps.ln();
    (kf / (eps * eps))
        * (1352.0 * ln_v / kf + 676.0 * (1.0 / delta).ln() / kf + 676.0 * ln_arg)
}

/// Underestimate of the Verma projection count; independent of N.
pub fn nv_underestimate(eps: f64, delta: f64, k: usize, ln_v: f64) -> f64 {
    let kf = k as f64;
    let ln_arg = 5.0 * 384f64.ln() + 169f64.ln() + kf.ln() - (PI * E).ln() - 6.0 * eps.ln();
    (kf / (eps * eps)) * (64.0 * ln_v / kf + 64.0 * (1.0 / delta).ln() / kf + 32.0 * ln_arg)
}

/// Ambient dimension where M̄ overtakes the N-independent NV count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Crossover {
    pub closed_form: f64,
    pub ln_closed_form: f64,
    pub numeric: f64,
    pub ln_numeric: f64,
    pub found: bool,
}

const LN_N_SEARCH_MAX: f64 = 2000.0;

/// N = 3.5×10²⁷·K^{3/2}ε^{−11}(V/δ)^{3/K}, and the root of M̄(N) − NV by bisection in ln N.
pub fn crossover_n(eps: f64, delta: f64, k: usize, ln_v: f64) -> Crossover {
    let kf = k as f64;
    let ln_closed_form =
        3.5e27f64.ln() + 1.5 * kf.ln() - 11.0 * eps.ln() + (3.0 / kf) * (ln_v - delta.ln());
    let nv = nv_underestimate(eps, delta, k, ln_v);
    let f = |ln_n: f64| m_star_bound_real(eps, delta, k, ln_n.exp(), ln_v) - nv;
    let (mut lo, mut hi) = (0.0, LN_N_SEARCH_MAX);
    let found = f(lo) < 0.0 && f(hi) > 0.0;
    let ln_numeric = if found {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * hi.abs().max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    } else {
        f64::NAN
    };
    Crossover {
        closed_form: ln_closed_form.exp(),
        ln_closed_form,
        numeric: ln_numeric.exp(),
        ln_numeric,
        found,
    }
}

/// One parameter point for tabulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct BoundQuery {
    pub eps: f64,
    pub delta: f64,
    pub k: usize,
    pub n: f64,
    pub ln_v: f64,
    pub m: Option<f64>,
}

impl BoundQuery {
    pub fn new(eps: f64, delta: f64, k: usize, n: f64, ln_v: f64, m: Option<f64>) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Domain(format!("ε must lie in (0, 1), got {eps}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Domain(format!("δ must lie in (0, 1), got {delta}")));
        }
        if k == 0 || !(n >= 1.0) {
            return Err(Error::Domain(format!("need K ≥ 1 and N ≥ 1, got K={k}, N={n}")));
        }
        if !(ln_v >= 0.0) {
            return Err(Error::Domain(format!("lnV must be nonnegative, got {ln_v}")));
        }
        if let Some(m) = m {
            if !(m >= 1.0) {
                return Err(Error::Domain(format!("M must be at least 1, got {m}")));
            }
        }
        Ok(BoundQuery { eps, delta, k, n, ln_v, m })
    }
}

/// Every analytic quantity at one parameter point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub eps: f64,
    pub delta: f64,
    pub k: usize,
    pub n: f64,
    pub ln_v: f64,
    /// M used for the δ and cell quantities (M̄ when the query leaves M open).
    pub m: f64,
    pub mu: f64,
    pub delta_long: f64,
    pub delta_long_applicable: bool,
    pub delta_short: f64,
    pub delta_short_applicable: bool,
    pub delta_total: f64,
    pub m_bar: f64,
    pub gamma_star_c: f64,
    pub sin_theta_c_star: f64,
    pub chordal_applicable: bool,
    pub gamma_star_t: f64,
    pub sin_theta_t_star: f64,
    pub tangential_applicable: bool,
    /// N ≥ 10·M, where the small-M/N simplifications hold.
    pub asymptotic_regime: bool,
    pub m_bw: f64,
    pub m_nv: f64,
    pub rho_star: f64,
    pub c0: f64,
}

pub fn bound_report(q: &BoundQuery) -> BoundReport {
    let m_bar = m_star_bound(q.eps, q.delta, q.k, q.n, q.ln_v);
    let m = q.m.unwrap_or(m_bar);
    let long = delta_long(q.eps, m, q.k, q.n, q.ln_v);
    let short = delta_short(q.eps, m, q.k, q.n, q.ln_v, ShortVariant::Appendix);
    let cells = optimal_cell_sizes(q.eps, m, q.k, q.n);
    let consts = theory_constants();
    BoundReport {
        eps: q.eps,
        delta: q.delta,
        k: q.k,
        n: q.n,
        ln_v: q.ln_v,
        m,
        mu: cells.mu,
        delta_long: long.value,
        delta_long_applicable: long.applicable,
        delta_short: short.value,
        delta_short_applicable: short.applicable,
        delta_total: delta_total(q.eps, m, q.k, q.n, q.ln_v),
        m_bar,
        gamma_star_c: cells.gamma_star_c,
        sin_theta_c_star: cells.sin_theta_c_star,
        chordal_applicable: cells.chordal_applicable,
        gamma_star_t: cells.gamma_star_t,
        sin_theta_t_star: cells.sin_theta_t_star,
        tangential_applicable: cells.tangential_applicable,
        asymptotic_regime: q.n >= 10.0 * m,
        m_bw: bw_underestimate(q.eps, q.delta, q.k, q.n, q.ln_v),
        m_nv: nv_underestimate(q.eps, q.delta, q.k, q.ln_v),
        rho_star: consts.rho_star,
        c0: consts.c0,
    }
}
