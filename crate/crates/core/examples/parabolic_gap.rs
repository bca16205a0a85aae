//! Singular-value gaps of parabolic powers grow like `2 log n`.

use reldom::gallery::{self, parabolic_quadratic_gap, standard_parabolic};

fn main() -> reldom::Result<()> {
    let q = parabolic_quadratic_gap(&standard_parabolic(), 1000)?;
    println!("[[1,1],[0,1]]: sup deviation {:.3e}, bounded: {}", q.sup, q.bounded);

    let fx = gallery::punctured_torus_fixture()?;
    let c = fx.rep.evaluate_names("a b A B")?;
    let q = parabolic_quadratic_gap(&c, 1000)?;
    println!("commutator: sup deviation {:.4} (first tenth {:.4}), bounded: {}", q.sup, q.sup_head, q.bounded);
    Ok(())
}
