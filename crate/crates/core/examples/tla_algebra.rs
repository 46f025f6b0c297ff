//! Transformed-linear arithmetic and marginal standardization.

use extail::models::seeded_rng;
use extail::tla::{
    hill_estimator, hill_k_for_quantile, rank_to_pareto2, sample_pareto2, softplus, softplus_inv, tl_add, tl_matvec,
    tl_scale, TailScalar,
};
use nalgebra::DMatrix;

fn main() -> extail::Result<()> {
    let x = TailScalar::new(2.0)?;
    let y = TailScalar::new(0.5)?;
    println!("t(1) = {:.6}, t⁻¹(t(1)) = {:.6}", softplus(1.0), softplus_inv(softplus(1.0))?);
    println!("x ⊕ y = {:.6}", tl_add(x, y).value());
    println!("3 ∘ x = {:.6}", tl_scale(3.0, x).value());
    // a negative scalar maps into the lower tail but stays positive
    println!("-1 ∘ x = {:.6}", tl_scale(-1.0, x).value());

    let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
    println!("M ∘ z = {:?}", tl_matvec(&m, &[2.0, 3.0])?);

    println!("ranks of [3, 1, 2] → {:?}", rank_to_pareto2(&[3.0, 1.0, 2.0])?);

    let z = sample_pareto2(100_000, &mut seeded_rng(1));
    let k = hill_k_for_quantile(&z, 0.99)?;
    println!("Hill tail index on Pareto(1, 2) draws, k = {k}: {:.3}", hill_estimator(&z, k)?);
    Ok(())
}
