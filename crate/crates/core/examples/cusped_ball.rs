//! Builds a cusped ball around the identity for the punctured-torus group and
//! prints how the cusped length of the peripheral element `c^n` grows.

use reldom::cusped::{CuspedSpace, Vertex};
use reldom::gallery;
use reldom::group::pow;

fn main() -> reldom::Result<()> {
    let spec = gallery::punctured_torus_fixture()?.group;
    let space = CuspedSpace::for_radius(&spec, 8, None);
    let graph = space.ball(Vertex::identity(), 8);
    let elements = graph.group_elements().count();
    println!("radius 8: {} vertices, {elements} group elements, depth {}", graph.len(), space.depth);

    let c = spec.word(&spec.parse_word("c")?);
    for n in [1u64, 2, 4, 8, 16] {
        let x = pow(&spec.model, &c, n);
        match graph.length(&x) {
            Ok(l) => println!("|c^{n}|_c = {l:>2}   (word length {})", 4 * n),
            Err(e) => println!("|c^{n}|_c: {e}"),
        }
    }
    Ok(())
}
