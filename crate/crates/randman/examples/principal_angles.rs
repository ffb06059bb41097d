//! Principal angles between tangent planes of a 2-d manifold against their expected values.
use randman::gp_sampler::{empirical_principal_angles, tangent_frames};
use randman::manifold_model::{expected_principal_cosines, intrinsic_separation};
use randman::{sample_manifold, FdOrder, ManifoldSpec};

fn main() -> randman::Result<()> {
    let spec = ManifoldSpec::new(200, 1.0, vec![1.0, 1.8], vec![12.0, 20.0], vec![64, 64])?;
    let m = sample_manifold(&spec, 4)?;
    let frames = tangent_frames(&m, FdOrder::Second)?;
    let i = spec.flat_index(&[32, 32]);
    for step in [1, 2, 4, 6, 8, 12] {
        let j = spec.flat_index(&[32 + step, 32 + step / 2]);
        let rho = intrinsic_separation(&spec, &spec.coords(i), &spec.coords(j))?;
        let emp = empirical_principal_angles(&frames, i, j)?;
        let mut th = expected_principal_cosines(rho, 2)?;
        th.sort_by(|a, b| b.total_cmp(a));
        println!(
            "rho {rho:6.3}  cosines {:.3} {:.3}  expected {:.3} {:.3}",
            emp[0], emp[1], th[0], th[1]
        );
    }
    Ok(())
}
