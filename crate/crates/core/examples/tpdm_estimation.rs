//! Estimated against analytic tail pairwise dependence matrices.

use extail::models::{reference_xscm, sample_xscm, seeded_rng};
use extail::tpdm::estimate_tpdm;

fn main() -> extail::Result<()> {
    let spec = reference_xscm();
    let truth = spec.analytic_tpdm()?;
    println!("analytic TPDM (total mass {:.3}):{:.3}", truth.total_mass, truth.sigma);

    let x = sample_xscm(&spec, 200_000, &mut seeded_rng(3))?;
    for q in [0.98, 0.995, 0.999] {
        let est = estimate_tpdm(&x, q)?;
        let err = (&est.sigma - &truth.sigma).abs().max();
        println!(
            "q = {q}: {} exceedances, mass {:.3}, max |σ̂ - σ| = {err:.3}",
            est.exceedances.unwrap_or(0),
            est.total_mass
        );
    }
    Ok(())
}
