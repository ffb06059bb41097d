use randman::gp_sampler::*;
use randman::manifold_model::{expected_chord_sq, intrinsic_separation, ManifoldSpec};

fn spec(n: usize, lambda: Vec<f64>, extent: Vec<f64>, grid: Vec<usize>) -> ManifoldSpec {
    ManifoldSpec::new(n, 1.0, lambda, extent, grid).unwrap()
}

#[test]
fn shape_determinism_and_finiteness() {
    let s = spec(40, vec![1.0, 2.0], vec![3.0, 5.0], vec![7, 9]);
    let a = sample_manifold(&s, 5).unwrap();
    let b = sample_manifold(&s, 5).unwrap();
    let c = sample_manifold(&s, 6).unwrap();
    assert_eq!(a.points.len(), 63 * 40);
    assert_eq!(a.columns().shape(), (40, 63));
    assert_eq!(a.points, b.points);
    assert_ne!(a.points, c.points);
    assert!(a.points.iter().all(|v| v.is_finite()));
    assert_eq!(a.jitter.len(), 2);
    assert!(a.jitter.iter().all(|j| (1e-10..=1e-6).contains(j)));
}

#[test]
fn kernel_covariance_matches() {
    // ⟨φ(σ₁), φ(σ₂)⟩ across independent realizations at ρ = 1
    let s = spec(50, vec![1.0], vec![8.0], vec![17]);
    let (i, j) = (6, 8);
    let rho = intrinsic_separation(&s, &s.coords(i), &s.coords(j)).unwrap();
    assert!((rho - 1.0).abs() < 1e-12);
    let vals: Vec<f64> = (0..400)
        .map(|seed| {
            let m = sample_manifold(&s, seed).unwrap();
            m.point(i).iter().zip(m.point(j)).map(|(a, b)| a * b).sum()
        })
        .collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let want = (-0.5f64).exp();
    assert!((mean - want).abs() <= 4.0 * sd / n.sqrt(), "{mean} vs {want}");
}

#[test]
fn self_averaging_bands() {
    let s = spec(1000, vec![1.0], vec![10.0], vec![1024]);
    let a = self_averaging_audit(&sample_manifold(&s, 1).unwrap());
    assert_eq!(a.n_points, 1024);
    assert!((0.97..=1.03).contains(&a.mean), "mean {}", a.mean);
    let r = a.rel_sd / (2.0f64 / 1000.0).sqrt();
    assert!((0.5..=2.0).contains(&r), "ratio {r}");
}

#[test]
fn single_coordinate_does_not_concentrate() {
    let s = spec(1, vec![1.0], vec![400.0], vec![1024]);
    let a = self_averaging_audit(&sample_manifold(&s, 2).unwrap());
    assert!((1.0..=1.8).contains(&a.rel_sd), "rel sd {}", a.rel_sd);
}

#[test]
fn chord_matches_naive_loop() {
    let s = spec(30, vec![1.0], vec![4.0], vec![9]);
    let m = sample_manifold(&s, 3).unwrap();
    assert_eq!(empirical_chord_sq(&m, 4, 4).unwrap(), 0.0);
    for (i, j) in [(0, 8), (2, 3), (7, 1)] {
        let mut naive = 0.0;
        for k in 0..30 {
            let d = m.points[i * 30 + k] - m.points[j * 30 + k];
            naive += d * d;
        }
        assert_eq!(empirical_chord_sq(&m, i, j).unwrap(), naive);
    }
    assert!(empirical_chord_sq(&m, 0, 9).is_err());
}

#[test]
fn chords_follow_expected_geometry() {
    let s = spec(1000, vec![1.0], vec![10.0], vec![1024]);
    let m = sample_manifold(&s, 4).unwrap();
    let (mut good, mut total) = (0, 0);
    for i in (0..1024).step_by(16) {
        for j in (0..1024).step_by(7) {
            let rho = intrinsic_separation(&s, &s.coords(i), &s.coords(j)).unwrap();
            if i == j || rho > 10.0 {
                continue;
            }
            let want = expected_chord_sq(rho, 1.0).unwrap();
            let got = empirical_chord_sq(&m, i, j).unwrap();
            total += 1;
            if ((got - want) / want).abs() <= 0.2 {
                good += 1;
            }
        }
    }
    assert!(good as f64 >= 0.95 * total as f64, "{good}/{total}");
}

#[test]
fn frames_are_orthonormal_with_expected_metric() {
    let s = spec(1000, vec![1.0, 2.0], vec![4.0, 6.0], vec![33, 25]);
    let m = sample_manifold(&s, 9).unwrap();
    let f = tangent_frames(&m, FdOrder::Second).unwrap();
    let mut h = [0.0, 0.0];
    let interior = f.interior_indices();
    for i in 0..f.n_points() {
        let u = f.basis(i);
        let g = u.transpose() * u;
        let e = (g - nalgebra::DMatrix::<f64>::identity(2, 2)).norm();
        assert!(e < 1e-8, "point {i}: {e}");
        let met = f.metric(i);
        assert!((met[(0, 1)] - met[(1, 0)]).abs() < 1e-14);
    }
    for &i in &interior {
        h[0] += f.metric(i)[(0, 0)];
        h[1] += f.metric(i)[(1, 1)];
    }
    let n = interior.len() as f64;
    assert!((h[0] / n - 1.0).abs() < 0.1, "{}", h[0] / n);
    assert!((h[1] / n - 0.25).abs() < 0.025, "{}", h[1] / n);
}

#[test]
fn finite_difference_error_shrinks_fourfold() {
    // one realization on h = 0.05, read back at h = 0.2, 0.1, 0.05
    let fine = sample_manifold(&spec(200, vec![1.0], vec![4.0], vec![81]), 21).unwrap();
    let coarse = fine.subsample(&[4]).unwrap();
    let mid = fine.subsample(&[2]).unwrap();
    let frames: Vec<_> = [&coarse, &mid, &fine]
        .iter()
        .map(|m| tangent_frames(m, FdOrder::Second).unwrap())
        .collect();
    let (mut d1, mut d2) = (0.0, 0.0);
    for q in 1..20 {
        let a = frames[0].derivs(q);
        let b = frames[1].derivs(2 * q);
        let c = frames[2].derivs(4 * q);
        d1 += (&a - &b).norm_squared();
        d2 += (&b - &c).norm_squared();
    }
    let ratio = (d1 / d2).sqrt();
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn fourth_order_is_more_accurate() {
    let fine = sample_manifold(&spec(200, vec![1.0], vec![4.0], vec![161]), 22).unwrap();
    let coarse = fine.subsample(&[8]).unwrap();
    let ref_frames = tangent_frames(&fine, FdOrder::Fourth).unwrap();
    let second = tangent_frames(&coarse, FdOrder::Second).unwrap();
    let fourth = tangent_frames(&coarse, FdOrder::Fourth).unwrap();
    let (mut e2, mut e4) = (0.0, 0.0);
    for q in 2..19 {
        let r = ref_frames.derivs(8 * q);
        e2 += (&second.derivs(q) - &r).norm_squared();
        e4 += (&fourth.derivs(q) - &r).norm_squared();
    }
    assert!(e4 < e2 / 10.0, "{e4} vs {e2}");
}

#[test]
fn principal_angles_at_same_point_are_zero() {
    let s = spec(100, vec![1.0, 1.0], vec![3.0, 3.0], vec![9, 9]);
    let f = tangent_frames(&sample_manifold(&s, 1).unwrap(), FdOrder::Second).unwrap();
    for c in empirical_principal_angles(&f, 40, 40).unwrap() {
        assert!((c - 1.0).abs() < 1e-12);
    }
    assert!(signed_tangent_cosine(&f, 0, 1).is_err());
}

#[test]
fn subsample_rejects_bad_strides() {
    let m = sample_manifold(&spec(10, vec![1.0], vec![4.0], vec![9]), 1).unwrap();
    assert!(m.subsample(&[3]).is_err());
    assert!(m.subsample(&[0]).is_err());
    assert!(m.subsample(&[2, 2]).is_err());
    assert_eq!(m.subsample(&[2]).unwrap().point(1), m.point(2));
}

#[test]
fn dump_round_trip() {
    let s = spec(12, vec![1.0, 0.5], vec![2.0, 1.0], vec![4, 3]);
    let m = sample_manifold(&s, 77).unwrap();
    let mut buf = Vec::new();
    write_dump(&m, &mut buf).unwrap();
    let back = read_dump(&buf[..]).unwrap();
    assert_eq!(back.points, m.points);
    assert_eq!(back.spec, m.spec);
    assert_eq!(back.seed, 77);
    assert!(read_dump(&buf[..10]).is_err());
    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(read_dump(&bad[..]).is_err());
}
