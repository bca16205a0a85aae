//! With no peripheral subgroups the cusped metric is the word metric and
//! relative domination is plain domination.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reldom::gallery::{empty_peripheral_degeneration, schottky_fixture};

fn main() -> reldom::Result<()> {
    let fx = schottky_fixture()?;
    let r = empty_peripheral_degeneration(&fx, 6, &mut ChaCha8Rng::seed_from_u64(0))?;
    println!("{r:#?}");
    Ok(())
}
