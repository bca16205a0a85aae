//! Randomized sweep of the singular-value perturbation bounds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reldom::lemmas::selftest;

fn main() -> reldom::Result<()> {
    let r = selftest(&mut ChaCha8Rng::seed_from_u64(0), 2000)?;
    println!("{r:#?}");
    println!("violations: {}", r.violations());
    Ok(())
}
