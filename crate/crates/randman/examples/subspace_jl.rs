//! Distortion of a fixed 10-dimensional subspace under 200 random projections to M = 160.
use randman::projector::subspace_distortion;
use randman::{sample_projector, SubspaceBasis};

fn main() -> randman::Result<()> {
    let (n, m, k) = (1000, 160, 10);
    let u = SubspaceBasis::random(n, k, 0)?;
    let mut d = Vec::with_capacity(200);
    for seed in 1..=200 {
        d.push(subspace_distortion(&sample_projector(n, m, seed)?, &u)?);
    }
    d.sort_by(f64::total_cmp);
    println!(
        "min {:.4}  median {:.4}  max {:.4}  sqrt(K/M) {:.4}",
        d[0],
        0.5 * (d[99] + d[100]),
        d[199],
        (k as f64 / m as f64).sqrt()
    );
    Ok(())
}
