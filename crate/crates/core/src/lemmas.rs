//! Quantitative singular-value lemmas: perturbation of `U_p` under products,
//! attraction of subspaces, singular values of products, and gaps of graphs of
//! linear maps. Each check returns measured values next to the bound.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{exterior_power, grassmann_distance, minimal_gap, singular_values, svd, Mat, Subspace};
use crate::report::{BoundReport, SLACK};

fn ratio(s: &[f64], i: usize, j: usize) -> f64 {
    s[i - 1] / s[j - 1]
}

/// `d(U_p(A), U_p(AB))` and `d(B·U_p(A), U_p(BA))`, both bounded by
/// `(σ₁/σ_d)(B) · (σ_{p+1}/σ_p)(A)`.
pub fn check_product_perturbation(a: &Mat, b: &Mat, p: usize) -> Result<[BoundReport; 2]> {
    let d = a.nrows();
    if p == 0 || p >= d {
        return Err(Error::Domain(format!("p = {p} outside 1..{}", d - 1)));
    }
    let (sa, sb) = (svd(a)?, svd(b)?);
    let (sab, sba) = (svd(&(a * b))?, svd(&(b * a))?);
    let bound = ratio(&sb.sigmas, 1, d) * ratio(&sa.sigmas, p + 1, p);
    let spaces = (|| Ok::<_, Error>((sa.unstable(p)?, sab.unstable(p)?, sba.unstable(p)?)))();
    let (ua, uab, uba) = match spaces {
        Ok(x) => x,
        Err(e) => {
            let why = format!("proximality precondition unmet: {e}");
            return Ok([BoundReport::skip("product-right", why.clone()), BoundReport::skip("product-left", why)]);
        }
    };
    let d4 = grassmann_distance(&ua, &uab)?;
    let d5 = grassmann_distance(&ua.image(b)?, &uba)?;
    Ok([BoundReport::upper("product-right", d4, bound), BoundReport::upper("product-left", d5, bound)])
}

/// `d(A·P, U_p(A)) ≤ (σ_{p+1}/σ_p)(A) / sin∠(P, S_{d−p}(A))`.
pub fn check_attraction(a: &Mat, plane: &Subspace, p: usize) -> Result<BoundReport> {
    let d = a.nrows();
    if p == 0 || p >= d || plane.dim() != p || plane.ambient() != d {
        return Err(Error::Domain(format!("need a {p}-plane in dimension {d}")));
    }
    let sa = svd(a)?;
    let (ua, s) = match (sa.unstable(p), sa.stable(d - p)) {
        (Ok(u), Ok(s)) => (u, s),
        (Err(e), _) | (_, Err(e)) => return Ok(BoundReport::skip("attraction", e.to_string())),
    };
    let sin = minimal_gap(plane, &s)?;
    if sin <= 1e-12 {
        return Ok(BoundReport::skip("attraction", "P meets S_{d-p}(A); bound infinite"));
    }
    let bound = ratio(&sa.sigmas, p + 1, p) / sin;
    let measured = grassmann_distance(&plane.image(a)?, &ua)?;
    Ok(BoundReport::upper("attraction", measured, bound))
}

/// `σ_p(AB) ≥ sin α · σ_p(A)σ_p(B)` and `σ_{p+1}(AB) ≤ σ_{p+1}(A)σ_{p+1}(B) / sin α`
/// with `α = ∠(U_p(B), S_{d−p}(A))`.
pub fn check_product_singular_values(a: &Mat, b: &Mat, p: usize) -> Result<[BoundReport; 2]> {
    let d = a.nrows();
    if p == 0 || p >= d {
        return Err(Error::Domain(format!("p = {p} outside 1..{}", d - 1)));
    }
    let (sa, sb, sab) = (svd(a)?, svd(b)?, svd(&(a * b))?);
    let spaces = (|| Ok::<_, Error>((sb.unstable(p)?, sa.stable(d - p)?, sab.unstable(p)?)))();
    let (ub, s_a) = match spaces {
        Ok((ub, s_a, _)) => (ub, s_a),
        Err(e) => {
            let why = e.to_string();
            return Ok([BoundReport::skip("product-sv-lower", why.clone()), BoundReport::skip("product-sv-upper", why)]);
        }
    };
    let sin = minimal_gap(&ub, &s_a)?;
    if sin <= 1e-12 {
        let why = "alpha = 0";
        return Ok([BoundReport::skip("product-sv-lower", why), BoundReport::skip("product-sv-upper", why)]);
    }
    let lower = BoundReport::lower("product-sv-lower", sab.sigmas[p - 1], sin * sa.sigmas[p - 1] * sb.sigmas[p - 1]);
    let upper = BoundReport::upper("product-sv-upper", sab.sigmas[p], sa.sigmas[p] * sb.sigmas[p] / sin);
    Ok([lower, upper])
}

/// For `U = graph(Θ)` over the splitting `U₀ ⊕ V₀`:
/// `s(U₀,V₀)/‖id ⊕ Θ‖ ≤ s(U,V₀) ≤ 1/‖id ⊕ Θ‖`.
///
/// `theta` holds the images of the basis columns of `u0` and must lie in `v0`.
pub fn check_graph_gap(u0: &Subspace, v0: &Subspace, theta: &Mat) -> Result<[BoundReport; 2]> {
    let d = u0.ambient();
    if v0.ambient() != d || u0.dim() + v0.dim() != d {
        return Err(Error::Domain("U0 and V0 are not complementary".into()));
    }
    let s0 = minimal_gap(u0, v0)?;
    if s0 <= 1e-12 {
        return Err(Error::Domain("U0 and V0 intersect".into()));
    }
    if theta.shape() != (d, u0.dim()) {
        return Err(Error::Domain("theta must be d x dim(U0)".into()));
    }
    let outside = (theta - v0.projector() * theta).norm();
    if outside > 1e-9 * (1.0 + theta.norm()) {
        return Err(Error::Domain("theta does not map into V0".into()));
    }
    let graph = u0.basis() + theta;
    let norm = singular_values(&graph)[0];
    let u = Subspace::from_columns(&graph)?;
    let s = minimal_gap(&u, v0)?;
    Ok([
        BoundReport::lower("graph-gap-lower", s, s0 / norm),
        BoundReport::upper("graph-gap-upper", s, 1.0 / norm),
    ])
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn random_orthogonal<R: Rng>(rng: &mut R, d: usize) -> Mat {
    gaussian_matrix(rng, d, d).qr().q()
}

/// `Q₁·diag(e^{t_i})·Q₂` with `t_i` uniform in `[−spread, spread]`.
pub fn random_gl<R: Rng>(rng: &mut R, d: usize, spread: f64) -> Mat {
    let q1 = random_orthogonal(rng, d);
    let q2 = random_orthogonal(rng, d);
    let t: Vec<f64> = (0..d).map(|_| rng.gen_range(-spread..=spread).exp()).collect();
    q1 * crate::linalg::diag(&t) * q2
}

pub fn random_subspace<R: Rng>(rng: &mut R, d: usize, p: usize) -> Subspace {
    loop {
        if let Ok(s) = Subspace::from_columns(&gaussian_matrix(rng, d, p)) {
            return s;
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FamilyTally {
    pub instances: usize,
    pub checks: usize,
    pub skipped: usize,
    pub violations: usize,
    pub worst_margin_ratio: f64,
}

impl FamilyTally {
    fn add(&mut self, r: &BoundReport) {
        self.checks += 1;
        if r.skipped {
            self.skipped += 1;
            return;
        }
        if r.violated(SLACK) {
            self.violations += 1;
        }
        let rel = match r.direction {
            crate::report::Direction::Upper => r.measured / r.bound,
            crate::report::Direction::Lower => r.bound / r.measured,
        };
        if rel.is_finite() && rel > self.worst_margin_ratio {
            self.worst_margin_ratio = rel;
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SelfTest {
    pub product_perturbation: FamilyTally,
    pub attraction: FamilyTally,
    pub product_singular_values: FamilyTally,
    pub graph_gap: FamilyTally,
    pub exterior: FamilyTally,
    pub svd_reconstruction_max: f64,
}

impl SelfTest {
    pub fn violations(&self) -> usize {
        self.product_perturbation.violations + self.attraction.violations + self.product_singular_values.violations + self.graph_gap.violations + self.exterior.violations
    }
}

fn pick_dim_p<R: Rng>(rng: &mut R, dims: std::ops::RangeInclusive<usize>) -> (usize, usize) {
    let d = rng.gen_range(dims);
    (d, rng.gen_range(1..d))
}

pub fn run_product_perturbation<R: Rng>(rng: &mut R, n: usize, dims: std::ops::RangeInclusive<usize>) -> Result<FamilyTally> {
    let mut t = FamilyTally::default();
    for _ in 0..n {
        let (d, p) = pick_dim_p(rng, dims.clone());
        let a = random_gl(rng, d, 2.5);
        let b = random_gl(rng, d, 1.0);
        t.instances += 1;
        for r in check_product_perturbation(&a, &b, p)?.iter() {
            t.add(r);
        }
    }
    Ok(t)
}

pub fn run_attraction<R: Rng>(rng: &mut R, n: usize, dims: std::ops::RangeInclusive<usize>) -> Result<FamilyTally> {
    let mut t = FamilyTally::default();
    for _ in 0..n {
        let (d, p) = pick_dim_p(rng, dims.clone());
        let a = random_gl(rng, d, 2.5);
        let plane = random_subspace(rng, d, p);
        t.instances += 1;
        t.add(&check_attraction(&a, &plane, p)?);
    }
    Ok(t)
}

pub fn run_product_singular_values<R: Rng>(rng: &mut R, n: usize, dims: std::ops::RangeInclusive<usize>) -> Result<FamilyTally> {
    let mut t = FamilyTally::default();
    for _ in 0..n {
        let (d, p) = pick_dim_p(rng, dims.clone());
        let a = random_gl(rng, d, 2.0);
        let b = random_gl(rng, d, 2.0);
        t.instances += 1;
        for r in check_product_singular_values(&a, &b, p)?.iter() {
            t.add(r);
        }
    }
    Ok(t)
}

pub fn run_graph_gap<R: Rng>(rng: &mut R, n: usize, dims: std::ops::RangeInclusive<usize>) -> Result<FamilyTally> {
    let mut t = FamilyTally::default();
    for _ in 0..n {
        let (d, p) = pick_dim_p(rng, dims.clone());
        let u0 = random_subspace(rng, d, p);
        let v0 = random_subspace(rng, d, d - p);
        if minimal_gap(&u0, &v0)? <= 1e-6 {
            t.instances += 1;
            t.add(&BoundReport::skip("graph-gap", "nearly intersecting sample"));
            continue;
        }
        let scale = rng.gen_range(-2.0f64..2.0).exp();
        let theta = v0.basis() * gaussian_matrix(rng, d - p, p) * scale;
        t.instances += 1;
        for r in check_graph_gap(&u0, &v0, &theta)?.iter() {
            t.add(r);
        }
    }
    Ok(t)
}

/// `σ₁(⋀²g) = σ₁σ₂(g)` and `σ₂(⋀²g) = σ₁σ₃(g)`, relative error.
pub fn exterior_identities(g: &Mat) -> Result<(f64, f64)> {
    let s = singular_values(g);
    let w = singular_values(&exterior_power(g, 2)?);
    let e1 = (w[0] - s[0] * s[1]).abs() / (s[0] * s[1]);
    let e2 = (w[1] - s[0] * s[2]).abs() / (s[0] * s[2]);
    Ok((e1, e2))
}

pub fn run_exterior<R: Rng>(rng: &mut R, n: usize, tol: f64) -> Result<FamilyTally> {
    let mut t = FamilyTally::default();
    for i in 0..n {
        let d = 3 + i % 2;
        let g = gaussian_matrix(rng, d, d);
        let (e1, e2) = exterior_identities(&g)?;
        t.instances += 1;
        t.add(&BoundReport::upper("wedge-sigma1", e1, tol));
        t.add(&BoundReport::upper("wedge-sigma2", e2, tol));
    }
    Ok(t)
}

/// Randomized sweep over all lemma families; `n` instances each.
pub fn selftest<R: Rng>(rng: &mut R, n: usize) -> Result<SelfTest> {
    let mut out = SelfTest {
        product_perturbation: run_product_perturbation(rng, n, 2..=6)?,
        attraction: run_attraction(rng, n, 2..=6)?,
        product_singular_values: run_product_singular_values(rng, n, 2..=6)?,
        graph_gap: run_graph_gap(rng, n, 2..=6)?,
        exterior: run_exterior(rng, n, 1e-9)?,
        svd_reconstruction_max: 0.0,
    };
    for _ in 0..n.min(1000) {
        let d = rng.gen_range(2..=6);
        let g = gaussian_matrix(rng, d, d);
        let s = svd(&g)?;
        let err = (s.reconstruct() - &g).norm() / g.norm();
        out.svd_reconstruction_max = out.svd_reconstruction_max.max(err);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, rotation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_b_gives_zero_distances() {
        let a = diag(&[10.0, 1.0]);
        let [r4, r5] = check_product_perturbation(&a, &Mat::identity(2, 2), 1).unwrap();
        assert!(r4.measured < 1e-15 && r5.measured < 1e-15);
        assert!(r4.holds(SLACK) && r5.holds(SLACK));
    }

    #[test]
    fn rotation_perturbation_holds() {
        let [r4, r5] = check_product_perturbation(&diag(&[10.0, 1.0]), &rotation(0.3), 1).unwrap();
        assert!(r4.holds(SLACK) && r5.holds(SLACK));
        assert!(r4.measured > 0.0);
    }

    #[test]
    fn attraction_on_own_unstable_space() {
        let a = diag(&[5.0, 1.0]);
        let u = crate::linalg::unstable_space(&a, 1).unwrap();
        assert!(check_attraction(&a, &u, 1).unwrap().measured < 1e-15);
        let p = Subspace::line(&[0.3, 0.8]).unwrap();
        assert!(check_attraction(&a, &p, 1).unwrap().holds(SLACK));
        let s = Subspace::line(&[0.0, 1.0]).unwrap();
        assert!(check_attraction(&a, &s, 1).unwrap().skipped);
    }

    #[test]
    fn product_singular_values_diagonal_equality() {
        let [lo, hi] = check_product_singular_values(&diag(&[5.0, 2.0, 1.0]), &diag(&[3.0, 1.5, 0.5]), 1).unwrap();
        assert!((lo.measured - lo.bound).abs() < 1e-12);
        assert!((hi.measured - hi.bound).abs() < 1e-12);
    }

    #[test]
    fn graph_gap_cases() {
        let u0 = Subspace::line(&[1.0, 0.0]).unwrap();
        let v0 = Subspace::line(&[0.0, 1.0]).unwrap();
        let [lo, hi] = check_graph_gap(&u0, &v0, &Mat::zeros(2, 1)).unwrap();
        assert_eq!((lo.measured, lo.bound, hi.bound), (1.0, 1.0, 1.0));
        let theta = Mat::from_column_slice(2, 1, &[0.0, 1.0]);
        let [lo, hi] = check_graph_gap(&u0, &v0, &theta).unwrap();
        let r = 0.5f64.sqrt();
        assert!((lo.measured - r).abs() < 1e-15 && (lo.bound - r).abs() < 1e-15 && (hi.bound - r).abs() < 1e-15);
        assert!(check_graph_gap(&u0, &u0, &Mat::zeros(2, 1)).is_err());
    }

    #[test]
    fn small_random_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let st = selftest(&mut rng, 300).unwrap();
        assert_eq!(st.violations(), 0, "{st:?}");
        assert!(st.svd_reconstruction_max < 1e-10);
    }
}
