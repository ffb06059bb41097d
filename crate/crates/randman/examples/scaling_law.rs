//! Fit M* eps^2 = a lnV + b K over a small sweep.
//!
//! Small manifolds and 40 projections keep this to about a minute; the
//! `figure --kind fig6a` subcommand runs the full sweep.
use randman::experiments::{m_star_empirical, scaling_fit, ExperimentOptions, ScalingPoint};
use randman::ManifoldSpec;

fn main() -> randman::Result<()> {
    let eps = 0.25;
    let grid = [4, 8, 12, 16, 24, 32, 48, 64, 96, 128, 192];
    let mut pts = Vec::new();
    for k in [1, 2] {
        for ln_v in [0.5, 1.5, 2.5] {
            let spec = ManifoldSpec::isotropic(k, 400, 1.0, ln_v, 8.0 / k as f64)?;
            let r = m_star_empirical(&spec, eps, 0.05, &grid, 40, 10 * k as u64, &ExperimentOptions::default())?;
            println!("K {k} lnV {ln_v}  points {:>4}  M* {:.1}", r.n_points, r.m_star);
            pts.push(ScalingPoint { k, ln_v, eps, m_star: r.m_star });
        }
    }
    let f = scaling_fit(&pts)?;
    println!("a = {:.3}  b = {:.3}", f.a, f.b);
    Ok(())
}
