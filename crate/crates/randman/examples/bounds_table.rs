//! The new bound on M against the two earlier estimates, and where they cross.
use randman::experiments::fig6b_ln_volume;
use randman::theory::{bound_report, crossover_n, theory_constants, BoundQuery};

fn main() -> randman::Result<()> {
    let c = theory_constants();
    println!("rho* = {:.6}  C0 = {:.6}", c.rho_star, c.c0);
    println!("{:>2} {:>6} {:>10} {:>12} {:>12} {:>14}", "K", "lnV", "new", "NV", "BW", "crossover N");
    for k in [1, 2, 5] {
        for ln_v in [1.0, fig6b_ln_volume(k), 3.0 * k as f64] {
            let r = bound_report(&BoundQuery::new(0.2, 0.05, k, 1000.0, ln_v, None)?);
            let x = crossover_n(0.2, 0.05, k, ln_v);
            println!(
                "{k:>2} {ln_v:>6.3} {:>10.0} {:>12.0} {:>12.3e} {:>14.3e}",
                r.m_bar, r.m_nv, r.m_bw, x.numeric
            );
        }
    }
    Ok(())
}
