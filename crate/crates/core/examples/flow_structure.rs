//! Check the structure relations of a random flow generator and of a
//! deliberately broken one.
//!
//! cargo run --example flow_structure

use qsfk::flow::{from_hp_coefficient, validate_structure, FlowGenerator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> qsfk::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let g = FlowGenerator::random(2, 2, 1.0, &mut rng);
    let report = validate_structure(&g, 20, 1e-11, 7)?;
    println!("random generator: passed = {}, max residual = {:.2e}", report.passed, report.max_residual());
    println!("  {report:?}");

    // The same map rebuilt from the HP coefficient that implements it.
    let hp = from_hp_coefficient(&g.implementing_coefficient())?;
    let report = validate_structure(&hp, 20, 1e-11, 7)?;
    println!("from HP coefficient: passed = {}", report.passed);

    let broken = FlowGenerator::new_unchecked(g.h().clone(), g.l().clone(), g.w().scale_real(1.3))?;
    let report = validate_structure(&broken, 20, 1e-11, 7)?;
    println!("scaled gauge: passed = {}, max residual = {:.2e}", report.passed, report.max_residual());
    Ok(())
}
