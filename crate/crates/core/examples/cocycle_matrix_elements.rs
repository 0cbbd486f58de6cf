//! Matrix elements of a perturbed cocycle between exponential vectors of
//! step functions, and the weak cocycle relation.
//!
//! cargo run --example cocycle_matrix_elements

use qsfk::coeff::weyl_scalar;
use qsfk::flow::{FlowGenerator, TrivialFlow};
use qsfk::matelem::{cocycle_matrix_element, verify_cocycle_identity, StepFunction};
use qsfk::numerics::{c, random, CMatrix};
use qsfk::perturb::{psi_map, PerturbationSpec};
use qsfk::coeff::BlockCoefficient;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> qsfk::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let theta = FlowGenerator::random(2, 1, 0.7, &mut rng);
    let f1 = BlockCoefficient::from_full(&random::gaussian(4, 4, &mut rng).scale_real(0.5), 2, 1)?;
    let f2 = BlockCoefficient::from_full(&random::gaussian(4, 4, &mut rng).scale_real(0.5), 2, 1)?;
    let spec = PerturbationSpec::new(&theta, f1, f2)?;

    let f = StepFunction::new(1, &[0.0, 0.25, 0.75], vec![vec![c(0.5, 0.0)], vec![c(0.0, -1.0)]])?;
    let g = StepFunction::new(1, &[0.0, 0.5], vec![vec![c(1.0, 0.5)]])?;
    let a = CMatrix::from_real(&[&[1.0, 0.0], &[0.0, -1.0]]);
    let m = cocycle_matrix_element(&spec, &f, &g, 1.0, &a)?;
    println!("<e(f), Y_1 (a) e(g)> = {m:?}");

    let report = verify_cocycle_identity(&spec, &f, &g, 0.375, 0.5, 10, 1)?;
    println!("weak cocycle residual {:.2e} (passed = {})", report.max_residual, report.passed);

    // Weyl cocycle over the trivial flow: vacuum value exp(-|lambda|^2 t / 2).
    let lambda = c(0.6, 0.8);
    let psi = psi_map(TrivialFlow { n: 1, d: 1 }, &weyl_scalar(lambda, 0.0))?;
    let z = StepFunction::zero(1);
    let v = cocycle_matrix_element(&psi, &z, &z, 2.0, &CMatrix::identity(1))?;
    println!("Weyl vacuum value at t = 2: {:.12} (expected {:.12})", v[(0, 0)].re, (-1.0f64).exp());
    Ok(())
}
