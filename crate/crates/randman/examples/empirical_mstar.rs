//! Smallest M that keeps the worst chord distortion below 0.2 with probability 0.95.
use randman::experiments::{log_grid, m_star_empirical, ExperimentOptions};
use randman::theory::m_star_bound;
use randman::ManifoldSpec;

fn main() -> randman::Result<()> {
    let ln_v = (10.0 * 2f64.sqrt() / 3.0).ln();
    let spec = ManifoldSpec::isotropic(1, 1000, 1.0, ln_v, 16.0)?;
    let grid = log_grid(4, 200, 16);
    let r = m_star_empirical(&spec, 0.2, 0.05, &grid, 100, 1, &ExperimentOptions::default())?;
    for ((m, raw), q) in r.m_grid.iter().zip(&r.raw_quantiles).zip(&r.quantiles) {
        println!("M {m:>4}  eps_0.95 {raw:.4}  monotone {q:.4}");
    }
    println!(
        "empirical M* = {:.1} on {} points; bound {}",
        r.m_star,
        r.n_points,
        m_star_bound(0.2, 0.05, 1, 1000.0, ln_v)
    );
    Ok(())
}
