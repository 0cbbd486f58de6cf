//! Toy Fock space oracle: HP cocycle and Feynman-Kac estimates on a ladder
//! of slot counts, compared against the analytic semigroups.
//!
//! cargo run --release --example toy_fock_ladder

use qsfk::coeff::BlockCoefficient;
use qsfk::flow::TrivialFlow;
use qsfk::fock::{fk_expectation_estimate, ladder_verdict, run_ladder, simulate_hp_unitary, DiscreteProcess, ToyFockModel};
use qsfk::numerics::{c, expm, CMatrix};
use qsfk::perturb::{fk_coefficients, fk_generator, semigroup_at};

fn main() -> qsfk::Result<()> {
    let ladder = [4, 8, 16];

    let g = BlockCoefficient::new(
        1,
        1,
        CMatrix::scalar(c(-0.5, 0.0)),
        CMatrix::scalar(c(1.0, 0.0)),
        CMatrix::scalar(c(-1.0, 0.0)),
        CMatrix::identity(1),
    )?;
    let want = expm(g.k())?;
    let points = run_ladder(&ladder, 1.0, |slots| {
        let model = ToyFockModel::new(1, 1, slots, 1.0)?;
        Ok(simulate_hp_unitary(&model, &g)?.vacuum_compress(slots)?.dist(&want))
    })?;
    for p in &points {
        println!("HP vacuum  N = {:>2}, h = {:.4}, error = {:.3e}", p.slots, p.step, p.error);
    }
    println!("  {:?}", ladder_verdict(&points));

    let l = CMatrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
    let k = (&l.adjoint() * &l).scale_real(-0.5);
    let (f1, f2) = fk_coefficients(2, 1, &l, &l, &k, &k)?;
    let a = CMatrix::unit(2, 1, 1);
    let exact = semigroup_at(&fk_generator(&TrivialFlow { n: 2, d: 1 }, &l, &l, &k, &k)?, 0.5)?.apply(&a)?;
    let free = BlockCoefficient::zero(2, 1)?;
    let points = run_ladder(&ladder, 0.5, |slots| {
        let v = simulate_hp_unitary(&ToyFockModel::new(2, 1, slots, 0.5)?, &free)?;
        Ok(fk_expectation_estimate(&v, &f1, &f2, &a)?.dist(&exact))
    })?;
    for p in &points {
        println!("damping    N = {:>2}, h = {:.4}, error = {:.3e}", p.slots, p.step, p.error);
    }
    println!("  {:?}", ladder_verdict(&points));
    Ok(())
}
