//! Runs the relative domination verifier on the punctured-torus holonomy.

use reldom::gallery;
use reldom::verifier::{check_dominated, VerifierConfig};

fn main() -> reldom::Result<()> {
    let fx = gallery::punctured_torus_fixture()?;
    let cfg = VerifierConfig { radius: 6, ..Default::default() };
    let r = check_dominated(&fx.rep, &cfg)?;
    let (lo, up) = (&r.fits.lower, &r.fits.upper);
    println!("status: {:?}", r.status);
    println!("lower fit: C = {:.4}, mu = {:.4} over {} elements", lo.c, lo.mu, lo.points);
    println!("upper fit: C = {:.4}, mu = {:.4}", up.c, up.mu);
    for rec in r.peripheral.iter().flat_map(|p| &p.records) {
        println!("peripheral {}: quadratic gap constant {:.3?}", rec.index, rec.quadratic_gap_c);
    }
    for v in &r.violations {
        println!("violation {v}");
    }
    Ok(())
}
