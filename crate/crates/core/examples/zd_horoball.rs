//! Quasi-isometry constants of the horoball over Z^d into hyperbolic space,
//! with the Cannon-Cooper sample check.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reldom::gallery::{zd_cannon_cooper, zd_horoball_qi};

fn main() -> reldom::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for d in [1, 2] {
        for radius in [8, 16, 32] {
            let q = zd_horoball_qi(d, 2000, radius, &mut rng)?;
            println!("d = {d}, R = {radius:>2}: lambda {:.4}, eps {:.4} over {} pairs", q.lambda, q.epsilon, q.pairs);
        }
        let q = zd_horoball_qi(d, 2000, 16, &mut rng)?;
        let cc = zd_cannon_cooper(&q, d, 200, &mut rng)?;
        println!("d = {d}: Cannon-Cooper check passed: {}", cc.passed);
        if d == 2 {
            let flat = zd_cannon_cooper(&q, 1, 200, &mut rng)?;
            println!("d = 2 projected to one axis: {} collapsing pairs", flat.collapsing_pairs);
        }
    }
    Ok(())
}
