//! Certified dominated splitting of a perturbed hyperbolic sequence in GL(2).

use reldom::linalg::{diag, rotation};
use reldom::splitting::{check_axioms, compute_splitting, duality_check, fit_constants, Analysis, MatrixSequence};

fn main() -> reldom::Result<()> {
    let seq = MatrixSequence::from_fn(-24, 24, |k| {
        let r = rotation(0.3 * (k as f64 * 0.7).sin());
        &r * diag(&[4.0, 0.25]) * r.transpose()
    })?;
    let a = Analysis::new(&seq)?;
    let c = fit_constants(&a)?;
    println!("fitted C = {:.4}, mu = {:.4}, mu' = {:.4}", c.c, c.mu, c.mu_prime);
    println!("axioms hold on the window: {}", check_axioms(&a, &c).passed());

    for k in [-4, -2, 0] {
        let cert = compute_splitting(&a, &c, k, 1e-6)?;
        println!(
            "k = {k:>2}: E_u = {:.6?}, E_s normal = {:.6?}, gap {:.4} (floor {:.4}, radius {:.1e})",
            cert.eu_basis, cert.es_normal, cert.gap, cert.s_min, cert.error_radius
        );
    }

    let dual = seq.reversed_dual();
    let ad = Analysis::new(&dual)?;
    let cd = fit_constants(&ad)?;
    let dc = duality_check(&a, &c, &ad, &cd, 0, 1e-6)?;
    println!("dual splitting agrees to {:.2e}", dc.distance);
    Ok(())
}
