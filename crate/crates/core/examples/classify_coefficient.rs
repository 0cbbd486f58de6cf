//! Classify a QSDE coefficient: q(F), q(F*), the least quasicontractivity
//! shift and the transforms F' and F''.
//!
//! cargo run --example classify_coefficient

use qsfk::coeff::{
    classify, min_quasicontractivity_beta, q_of, transform_doubleprime, transform_prime, BlockCoefficient,
};
use qsfk::numerics::{c, CMatrix, DEFAULT_TOL};

fn main() -> qsfk::Result<()> {
    // n = 1, d = 1: the damping-type coefficient K = -1/2, L = 1, M = -1, W = 1.
    let hp = BlockCoefficient::new(
        1,
        1,
        CMatrix::scalar(c(-0.5, 0.0)),
        CMatrix::scalar(c(1.0, 0.0)),
        CMatrix::scalar(c(-1.0, 0.0)),
        CMatrix::identity(1),
    )?;
    println!("HP coefficient: q(F) norm = {:.3e}", q_of(&hp).norm());
    println!("  {:?}", classify(&hp, DEFAULT_TOL));

    // Not contractive, but quasicontractive after shifting by beta.
    let k = BlockCoefficient::new(
        1,
        1,
        CMatrix::scalar(c(1.0, 0.0)),
        CMatrix::zeros(1, 1),
        CMatrix::zeros(1, 1),
        CMatrix::zeros(1, 1),
    )?;
    println!("K = 1, W = 0: {:?}", classify(&k, DEFAULT_TOL));
    match min_quasicontractivity_beta(&k, 1e-12).beta() {
        Some(b) => println!("  least beta = {b:.9}"),
        None => println!("  not quasicontractive"),
    }

    let p = transform_prime(&hp);
    let pp = transform_doubleprime(&hp);
    println!("F'  = {:?}", p.as_full());
    println!("F'' = {:?}", pp.as_full());
    Ok(())
}
