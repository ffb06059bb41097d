use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use randman::experiments::*;
use randman::projector::{pointset_distortion, sample_projector, DistortionSummary};
use randman::theory::{bw_underestimate, m_star_bound, nv_underestimate};
use randman::{derive_seed, sample_manifold, Error, Label, ManifoldSpec, PairPolicy};

fn small_spec() -> ManifoldSpec {
    ManifoldSpec::isotropic(1, 200, 1.0, 1.0, 8.0).unwrap()
}

#[test]
fn single_projection_matches_pointset_scan() {
    let spec = small_spec();
    let seed = 5;
    let d = distortion_distribution(&spec, 20, 1, &PairPolicy::All, seed).unwrap();
    let m = sample_manifold(&spec, derive_seed(seed, &[Label::Name("manifold")])).unwrap();
    let pseed = derive_seed(
        seed,
        &[Label::Name("M"), Label::Index(20), Label::Name("projector"), Label::Index(0)],
    );
    let a = sample_projector(200, 20, pseed).unwrap();
    let direct = pointset_distortion(&a, &m.columns(), &PairPolicy::All).unwrap();
    assert_eq!(d.samples.len(), 1);
    assert!((d.samples[0] - direct.max).abs() < 1e-12);
}

#[test]
fn doubling_projections_keeps_prefix() {
    let spec = small_spec();
    let a = distortion_distribution(&spec, 15, 10, &PairPolicy::All, 3).unwrap();
    let b = distortion_distribution(&spec, 15, 20, &PairPolicy::All, 3).unwrap();
    assert_eq!(a.samples[..], b.samples[..10]);
    assert!(distortion_distribution(&spec, 201, 1, &PairPolicy::All, 3).is_err());
}

#[test]
fn quantile_definition() {
    let v: Vec<f64> = (1..=100).rev().map(|x| x as f64).collect();
    let s = DistortionSummary::from_samples(v.clone());
    assert_eq!(epsilon_at_delta(&s, 0.05).unwrap(), 95.0);
    assert_eq!(epsilon_at_delta(&s, 0.999).unwrap(), 1.0);
    assert!(matches!(
        epsilon_at_delta(&DistortionSummary::from_samples(v[..19].to_vec()), 0.05),
        Err(Error::TooFewSamples { need: 20, have: 19 })
    ));
}

#[test]
fn quantile_matches_empirical_cdf_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let n = rng.random_range(20..200);
        let v: Vec<f64> = (0..n).map(|_| (rng.random_range(0..30) as f64) / 7.0).collect();
        let delta = rng.random_range(0.05..0.5);
        let got = quantile_at_delta(&v, delta).unwrap();
        // smallest sample value whose empirical CDF reaches 1 − δ
        let mut cands = v.clone();
        cands.sort_by(f64::total_cmp);
        let want = cands
            .iter()
            .copied()
            .find(|&e| v.iter().filter(|x| **x <= e).count() as f64 / n as f64 >= 1.0 - delta - 1e-12)
            .unwrap();
        assert_eq!(got, want);
    }
}

#[test]
fn isotonic_regression() {
    let mono = [5.0, 4.0, 4.0, 1.0];
    assert_eq!(isotonic_nonincreasing(&mono), mono.to_vec());
    let fit = isotonic_nonincreasing(&[1.0, 3.0, 2.0, 0.5, 0.7]);
    assert!(fit.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(fit, vec![2.0, 2.0, 2.0, 0.6, 0.6]);
}

#[test]
fn interpolated_m_star_inverts_synthetic_curve() {
    let grid = log_grid(4, 200, 16);
    let q: Vec<f64> = grid.iter().map(|m| 2.0 / (*m as f64).sqrt()).collect();
    let m = m_star_from_quantiles(&grid, &q, 0.2).unwrap();
    // chord of the convex ε(ln M) lies above the curve: |Δε| ≤ max|ε''|·h²/8
    let h = (119f64 / 91.0).ln();
    let curv = 0.25 * 2.0 / 91f64.sqrt();
    let slope = 0.5 * 0.2;
    let tol_ln = curv * h * h / 8.0 / slope;
    assert!(m >= 100.0 && (m / 100.0).ln() <= tol_ln, "{m}");
    assert!(matches!(m_star_from_quantiles(&grid, &q, 0.1), Err(Error::Unachievable { .. })));
    assert_eq!(m_star_from_quantiles(&grid, &q, 5.0).unwrap(), 4.0);
    assert!(m_star_from_quantiles(&[4], &[1.0], 0.5).is_err());
    assert!(m_star_from_quantiles(&[8, 4], &[1.0, 0.5], 0.7).is_err());
}

#[test]
fn empirical_m_star_pipeline() {
    let spec = small_spec();
    let grid = vec![4, 8, 16, 32, 64, 128];
    let opts = ExperimentOptions::default();
    let r = m_star_empirical(&spec, 0.3, 0.05, &grid, 20, 7, &opts).unwrap();
    assert!(r.quantiles.windows(2).all(|w| w[0] >= w[1]));
    assert!(r.m_star >= 4.0 && r.m_star <= 128.0);
    assert!(r.m_star <= m_star_bound(0.3, 0.05, 1, 200.0, spec.ln_volume()));
    assert!(spearman(&grid.iter().map(|m| *m as f64).collect::<Vec<_>>(), &r.raw_quantiles) < 0.0);
    assert_eq!(r, m_star_empirical(&spec, 0.3, 0.05, &grid, 20, 7, &opts).unwrap());
    assert!(matches!(
        m_star_empirical(&spec, 0.001, 0.05, &grid, 20, 7, &opts),
        Err(Error::Unachievable { .. })
    ));
    assert!(matches!(
        m_star_empirical(&spec, 0.3, 0.05, &grid, 10, 7, &opts),
        Err(Error::TooFewSamples { .. })
    ));
}

#[test]
fn tangents_only_raise_distortion() {
    let spec = small_spec();
    let grid = vec![8, 32, 128];
    let chords = m_star_empirical(&spec, 0.3, 0.05, &grid, 20, 2, &ExperimentOptions::default()).unwrap();
    let opts = ExperimentOptions { include_tangents: true, ..Default::default() };
    let both = m_star_empirical(&spec, 0.3, 0.05, &grid, 20, 2, &opts).unwrap();
    for (a, b) in chords.raw_quantiles.iter().zip(&both.raw_quantiles) {
        assert!(b >= a);
    }
}

#[test]
fn scaling_fit_recovers_coefficients() {
    let mut pts = Vec::new();
    for k in 1..=3 {
        for lnv in [0.5, 1.5, 3.0] {
            let eps = 0.2;
            pts.push(ScalingPoint { k, ln_v: lnv, eps, m_star: (1.2 * lnv + 2.5 * k as f64) / (eps * eps) });
        }
    }
    let f = scaling_fit(&pts).unwrap();
    assert!((f.a - 1.2).abs() < 1e-6 && (f.b - 2.5).abs() < 1e-6);
    assert!(f.residuals.iter().all(|r| r.abs() < 1e-9));
    let line: Vec<ScalingPoint> = (1..4)
        .map(|k| ScalingPoint { k, ln_v: 2.0 * k as f64, eps: 0.2, m_star: 100.0 })
        .collect();
    assert!(matches!(scaling_fit(&line), Err(Error::RankDeficient)));
    assert!(matches!(scaling_fit(&pts[..1]), Err(Error::RankDeficient)));
}

#[test]
fn figure_kinds_parse() {
    assert_eq!("fig6b".parse::<FigureKind>().unwrap(), FigureKind::Fig6b);
    assert!(matches!("fig7".parse::<FigureKind>(), Err(Error::UnknownKind(_))));
}

#[test]
fn fig4_defaults_follow_caption() {
    let t = figure_data(FigureKind::Fig4, &FigureParams::default(), 1).unwrap();
    assert_eq!(t.rows.len(), 8 * 1024);
    let rho = t.column("rho").unwrap();
    // unit spacing 10/1023 in σ with λ = 1
    let j = t.column("j").unwrap();
    let i = t.column("i").unwrap();
    let step = 10.0 / 1023.0;
    for r in 0..50 {
        let d = (j[r] - i[r]) * step;
        assert!((rho[r] - d * d).abs() < 1e-9);
    }
}

#[test]
fn fig5_columns() {
    let p = FigureParams { grid: Some(vec![16, 16]), references: Some(2), ..Default::default() };
    let t = figure_data(FigureKind::Fig5, &p, 1).unwrap();
    assert_eq!(t.rows.len(), 2 * 256);
    assert!(t.columns.contains(&"cos_2_theory".to_string()));
}

#[test]
fn fig6_theory_columns_match_theory_module() {
    let p = FigureParams {
        k_values: Some(vec![1]),
        n_values: Some(vec![200, 400]),
        m_grid: Some(vec![4, 16, 64, 128]),
        n_proj: Some(20),
        per_lambda: Some(6.0),
        ..Default::default()
    };
    let t = figure_data(FigureKind::Fig6b, &p, 3).unwrap();
    assert_eq!(t.rows.len(), 2);
    let col = |n: &str| t.column(n).unwrap();
    let lnv = fig6b_ln_volume(1);
    assert!((lnv - (10.0 * 2f64.sqrt() / 3.0).ln()).abs() < 1e-15);
    for (r, n) in [200.0, 400.0].iter().enumerate() {
        assert_eq!(col("lnV")[r], lnv);
        assert!((col("m_star_new")[r] - m_star_bound(0.2, 0.05, 1, *n, lnv)).abs() < 1e-12);
        assert!((col("m_star_bw")[r] - bw_underestimate(0.2, 0.05, 1, *n, lnv)).abs() < 1e-12 * col("m_star_bw")[r]);
        assert!((col("m_star_nv")[r] - nv_underestimate(0.2, 0.05, 1, lnv)).abs() < 1e-12 * col("m_star_nv")[r]);
        assert!((col("x")[r] - n.ln()).abs() < 1e-15);
        assert!((col("y_new")[r] - col("m_star_new")[r] * 0.04).abs() < 1e-12);
    }
}

#[test]
#[ignore = "runs the full fig6a sweep, about ten minutes"]
fn fig6a_desk_scaling_law() {
    let t = figure_data(FigureKind::Fig6a, &FigureParams::default(), 1).unwrap();
    let col = |n: &str| t.column(n).unwrap();
    let pts: Vec<ScalingPoint> = (0..t.rows.len())
        .map(|r| ScalingPoint {
            k: col("K")[r] as usize,
            ln_v: col("lnV")[r],
            eps: col("eps_target")[r],
            m_star: col("m_star_emp")[r],
        })
        .collect();
    let f = scaling_fit(&pts).unwrap();
    assert!((0.6..=2.4).contains(&f.a) && (1.25..=5.0).contains(&f.b), "{f:?}");
}
