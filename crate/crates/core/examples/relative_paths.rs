//! Samples cusped geodesics, projects them to relative paths, reparametrizes
//! them and checks the quasigeodesic bounds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reldom::cusped::{CuspedSpace, Vertex};
use reldom::gallery;
use reldom::path::{ordered_partition, verify_metric_quasigeodesic};
use reldom::verifier::sample_paths;

fn main() -> reldom::Result<()> {
    println!("ordered partition of 22: {:?}", ordered_partition(22)?);

    let spec = gallery::punctured_torus_fixture()?.group;
    let space = CuspedSpace::for_radius(&spec, 8, None);
    let graph = space.ball(Vertex::identity(), 8);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let paths = sample_paths(&space, &graph, 50, 4, &mut rng)?;

    let (proj, rp) = &paths[0];
    println!("projected path: {} points, {} excursions", proj.points.len(), proj.excursions.len());
    for x in &proj.excursions {
        println!("  excursion {x:?}");
    }
    println!("reparametrized steps: {:?}", rp.steps);

    let mut failures = 0;
    for (_, rp) in &paths {
        let q = verify_metric_quasigeodesic(&spec, rp, 6.0, 20.0, true, |x| graph.length(x))?;
        failures += usize::from(!q.passed());
    }
    println!("{} paths checked, {failures} violate the (6, 20) bounds", paths.len());
    Ok(())
}
