use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use randman::cone_guarantees::*;
use randman::manifold_model::Form;
use randman::projector::{principal_angles, SubspaceBasis};
use randman::Error;

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

fn settings(n: usize, m: usize, n_boundary: usize, n_trials: usize, sampler: BoundarySampler) -> VerifySettings {
    VerifySettings { n, m, n_boundary, n_trials, seed: 17, sampler, form: Form::Approx }
}

#[test]
fn chordal_guarantee_function() {
    assert_eq!(g_chordal(0.2, 0.0, 1000, 100).unwrap(), 0.2);
    close(g_chordal(0.2, 0.01, 1000, 100).unwrap(), 0.16837722339831620668, 1e-15);
    assert!(matches!(g_chordal(0.1, 0.05, 1000, 100), Err(Error::GuaranteeVacuous(_))));
    close(chordal_eps_x(g_chordal(0.2, 0.01, 1000, 100).unwrap(), 0.01, 1000, 100), 0.2, 1e-15);
}

#[test]
fn tangential_guarantee_function() {
    for form in [Form::Approx, Form::Exact] {
        close(g_tangential(0.2, 0.0, 1000, 100, form).unwrap(), 0.2, 1e-15);
    }
    close(g_tangential(0.2, 0.001, 1000, 100, Form::Approx).unwrap(), 0.19, 1e-15);
    let (gp, gm) = g_tangential_branches(0.2, 0.001, 1000, 100).unwrap();
    close(gp, 0.19226085501036533691, 1e-14);
    close(gm, 0.18800282106652826182, 1e-14);
    let (gp, gm) = g_tangential_branches(0.2, 1e-5, 100_000, 100).unwrap();
    close(gp, 0.1916435310896190329, 1e-14);
    close(gm, 0.1876001606501437836, 1e-14);
    let exact = g_tangential(0.2, 1e-5, 100_000, 100, Form::Exact).unwrap();
    let approx = g_tangential(0.2, 1e-5, 100_000, 100, Form::Approx).unwrap();
    assert!((exact - approx).abs() <= 2.0 * 0.2 * 1000.0 * 1e-5 + 100.0 / 100_000.0);
    assert!(matches!(
        g_tangential(0.2, 0.001, 100_000, 100, Form::Approx),
        Err(Error::GuaranteeVacuous(_))
    ));
}

#[test]
fn tangential_eps_x_inverts_guarantee() {
    for form in [Form::Approx, Form::Exact] {
        let eps = 0.25;
        let g = g_tangential(eps, 0.002, 1000, 100, form).unwrap();
        close(tangential_eps_x(g, 0.002, 1000, 100, form), eps, 1e-10);
    }
}

#[test]
fn chordal_boundary_geometry() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x: Vec<f64> = (0..20).map(|_| rng.sample(StandardNormal)).collect();
    let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let y0 = sample_chordal_boundary(&x, 0.0, 3).unwrap();
    for (a, b) in x.iter().zip(&y0) {
        close(*a, *b, 1e-12);
    }
    let s = 0.3;
    let draws = 10_000;
    let mut sum = vec![0.0; 20];
    let mut sq = vec![0.0; 20];
    for seed in 0..draws {
        let y = sample_chordal_boundary(&x, s, seed).unwrap();
        let yn = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let cos = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / (xn * yn);
        close(cos, (1.0 - s * s).sqrt(), 1e-10);
        for c in 0..20 {
            sum[c] += y[c];
            sq[c] += y[c] * y[c];
        }
    }
    // mean parallel to x: the component orthogonal to x vanishes within 4 SE
    let n = draws as f64;
    let mean: Vec<f64> = sum.iter().map(|v| v / n).collect();
    let along = mean.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / xn;
    for c in 0..20 {
        let resid = mean[c] - along * x[c] / xn;
        let sd = (sq[c] / n - mean[c] * mean[c]).max(0.0).sqrt();
        assert!(resid.abs() <= 4.0 * sd / n.sqrt() + 1e-12, "coordinate {c}");
    }
    assert!(matches!(sample_chordal_boundary(&[0.0; 4], 0.1, 1), Err(Error::ZeroVector)));
}

#[test]
fn tangential_boundary_geometry() {
    let u = SubspaceBasis::random(60, 4, 5).unwrap();
    let same = sample_tangential_boundary(&u, 0.0, 1).unwrap();
    assert!(principal_angles(&u, &same).unwrap().cosines.iter().all(|c| (c - 1.0).abs() < 1e-12));
    for seed in 0..20 {
        let v = sample_tangential_boundary(&u, 0.2, seed).unwrap();
        let g = v.cols().transpose() * v.cols();
        assert!((g - nalgebra::DMatrix::<f64>::identity(4, 4)).norm() < 1e-10);
        for t in principal_angles(&u, &v).unwrap().angles() {
            close(t, 0.2f64.asin(), 1e-8);
        }
    }
    assert!(sample_tangential_boundary(&SubspaceBasis::random(5, 3, 1).unwrap(), 0.1, 1).is_err());
}

#[test]
fn cone_objects_validate() {
    assert!(ChordalCone::new(vec![1.0, 0.0], 1.5).is_err());
    let c = ChordalCone::new(vec![1.0, 2.0, 3.0], 0.1).unwrap();
    assert_eq!(c.sample_boundary(4).unwrap().len(), 3);
    let t = TangentialCone::new(SubspaceBasis::random(10, 2, 1).unwrap(), 0.1).unwrap();
    assert_eq!(t.sample_boundary(2).unwrap().k(), 2);
}

#[test]
fn zero_angle_has_no_violations() {
    let s = settings(200, 20, 50, 20, BoundarySampler::Reduced);
    let r = verify_chordal_guarantee(&s, 0.0).unwrap();
    assert_eq!(r.violations, 0);
    assert!(r.trials.iter().all(|t| t.worst_dist_y == t.dist_x));
    let r = verify_tangential_guarantee(&s, 3, 0.0).unwrap();
    assert_eq!(r.violations, 0);
    assert!(r.trials.iter().all(|t| t.worst_dist_y == t.dist_x));
}

#[test]
fn trials_are_paired_across_angles() {
    let s = settings(300, 30, 100, 10, BoundarySampler::Reduced);
    let a = verify_chordal_guarantee(&s, 0.001).unwrap();
    let b = verify_chordal_guarantee(&s, 0.01).unwrap();
    for (x, y) in a.trials.iter().zip(&b.trials) {
        assert_eq!(x.dist_x, y.dist_x);
    }
    assert_eq!(a, verify_chordal_guarantee(&s, 0.001).unwrap());
}

fn mean_excess(r: &VerificationReport) -> (f64, f64) {
    let v: Vec<f64> = r.trials.iter().map(|t| t.worst_dist_y - t.dist_x).collect();
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    (m, sd / n.sqrt())
}

#[test]
fn reduced_and_explicit_samplers_agree_in_distribution() {
    let (n, m) = (120, 12);
    let red = verify_chordal_guarantee(&settings(n, m, 60, 200, BoundarySampler::Reduced), 0.05).unwrap();
    let exp = verify_chordal_guarantee(&settings(n, m, 60, 200, BoundarySampler::Explicit), 0.05).unwrap();
    let ((a, sa), (b, sb)) = (mean_excess(&red), mean_excess(&exp));
    assert!((a - b).abs() <= 4.0 * (sa * sa + sb * sb).sqrt(), "{a} vs {b}");

    let red = verify_tangential_guarantee(&settings(n, m, 30, 150, BoundarySampler::Reduced), 2, 0.02).unwrap();
    let exp = verify_tangential_guarantee(&settings(n, m, 30, 150, BoundarySampler::Explicit), 2, 0.02).unwrap();
    let ((a, sa), (b, sb)) = (mean_excess(&red), mean_excess(&exp));
    assert!((a - b).abs() <= 4.0 * (sa * sa + sb * sb).sqrt(), "{a} vs {b}");
}

#[test]
fn small_cone_guarantees_hold() {
    let s = settings(1000, 100, 2000, 20, BoundarySampler::Reduced);
    let small = verify_chordal_guarantee(&s, 0.001).unwrap();
    let large = verify_chordal_guarantee(&s, 0.01).unwrap();
    assert_eq!(small.violations + large.violations, 0);
    assert!(small.mean_margin < large.mean_margin);
    let t = verify_tangential_guarantee(&settings(1000, 100, 500, 20, BoundarySampler::Reduced), 5, 0.002).unwrap();
    assert_eq!(t.violations, 0);
}

#[test]
fn csv_has_one_row_per_trial() {
    let r = verify_chordal_guarantee(&settings(100, 10, 10, 7, BoundarySampler::Reduced), 0.01).unwrap();
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.starts_with("trial,dist_x,worst_dist_y,g_value,eps_x,violated"));
}

#[test]
fn settings_rejected() {
    assert!(verify_chordal_guarantee(&settings(10, 20, 1, 1, BoundarySampler::Reduced), 0.1).is_err());
    assert!(verify_chordal_guarantee(&settings(100, 10, 0, 1, BoundarySampler::Reduced), 0.1).is_err());
    assert!(verify_tangential_guarantee(&settings(100, 10, 1, 1, BoundarySampler::Reduced), 11, 0.1).is_err());
    assert!(verify_chordal_guarantee(&settings(100, 10, 1, 1, BoundarySampler::Reduced), 1.1).is_err());
}
