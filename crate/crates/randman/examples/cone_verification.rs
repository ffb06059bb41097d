//! Monte Carlo check of the chordal and tangential cone guarantees at N = 1000, M = 100.
use randman::cone_guarantees::{verify_chordal_guarantee, verify_tangential_guarantee, BoundarySampler, VerifySettings};
use randman::Form;

fn main() -> randman::Result<()> {
    let s = VerifySettings {
        n: 1000,
        m: 100,
        n_boundary: 5000,
        n_trials: 20,
        seed: 3,
        sampler: BoundarySampler::Reduced,
        form: Form::Approx,
    };
    for sin in [0.001, 0.005, 0.01] {
        let r = verify_chordal_guarantee(&s, sin)?;
        println!(
            "chordal    sin {sin:<7} violations {}/{}  vacuous {}  mean margin {:.3e}",
            r.violations, r.trials.len(), r.vacuous, r.mean_margin
        );
    }
    let s = VerifySettings { n_boundary: 1000, ..s };
    for sin in [0.0005, 0.002] {
        let r = verify_tangential_guarantee(&s, 5, sin)?;
        println!(
            "tangential sin {sin:<7} violations {}/{}  vacuous {}  mean margin {:.3e}",
            r.violations, r.trials.len(), r.vacuous, r.mean_margin
        );
    }
    Ok(())
}
