//! Draw a one-dimensional manifold in R^1000 and compare it with its expected geometry.
use randman::gp_sampler::{empirical_chord_sq, self_averaging_audit, signed_tangent_cosine, tangent_frames};
use randman::manifold_model::{expected_chord_sq, expected_tangent_cosine, intrinsic_separation};
use randman::{sample_manifold, FdOrder, ManifoldSpec};

fn main() -> randman::Result<()> {
    let spec = ManifoldSpec::new(1000, 1.0, vec![1.0], vec![10.0], vec![1024])?;
    let m = sample_manifold(&spec, 1)?;
    let audit = self_averaging_audit(&m);
    println!(
        "{} points, mean |phi|^2 = {:.4} (expect {}), rel sd {:.4} (expect {:.4})",
        audit.n_points, audit.mean, audit.expected_mean, audit.rel_sd, audit.expected_rel_sd
    );

    let frames = tangent_frames(&m, FdOrder::Second)?;
    let i = 300;
    println!("{:>4} {:>8} {:>10} {:>10} {:>8} {:>8}", "j", "rho", "chord^2", "theory", "cos", "theory");
    for j in (300..=700).step_by(40) {
        let rho = intrinsic_separation(&spec, &spec.coords(i), &spec.coords(j))?;
        println!(
            "{j:>4} {rho:>8.3} {:>10.4} {:>10.4} {:>8.4} {:>8.4}",
            empirical_chord_sq(&m, i, j)?,
            expected_chord_sq(rho, spec.ell())?,
            signed_tangent_cosine(&frames, i, j)?,
            expected_tangent_cosine(rho)?,
        );
    }
    Ok(())
}
