//! Perturbed semigroup of a trivial flow by the amplitude-damping pair and
//! its structural flags.
//!
//! cargo run --example feynman_kac_semigroup

use qsfk::flow::TrivialFlow;
use qsfk::numerics::CMatrix;
use qsfk::perturb::{fk_generator, semigroup_at, semigroup_flags};

fn main() -> qsfk::Result<()> {
    let l = CMatrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
    let k = (&l.adjoint() * &l).scale_real(-0.5);
    let g = fk_generator(&TrivialFlow { n: 2, d: 1 }, &l, &l, &k, &k)?;
    let excited = CMatrix::unit(2, 1, 1);
    for t in [0.5, 1.0, 2.0] {
        let p = semigroup_at(&g, t)?.apply(&excited)?;
        let flags = semigroup_flags(&g, t, 1e-10, 1e-8)?;
        println!(
            "t = {t}: P_t(|1><1|)[1,1] = {:.12} (exp(-t) = {:.12}), unital = {}, cp = {}, contractive = {}",
            p[(1, 1)].re,
            (-t).exp(),
            flags.unital,
            flags.cp,
            flags.contractive
        );
    }
    Ok(())
}
