//! Singular value decompositions, the subspaces `U_i`/`S_i`, Grassmannian
//! distances, duals, proximality estimates and exterior powers.
//!
//! Conventions: `g = K·A·L` with `A` diagonal and nonincreasing, `U_i(g)` is
//! spanned by the first `i` columns of `K` and `S_i(g) = U_i(g⁻¹)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative singular value gap below which `U_i` is treated as undefined.
pub const GAP_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Svd {
    pub k: Mat,
    pub sigmas: Vec<f64>,
    /// Rows of `l` are the right singular vectors.
    pub l: Mat,
}

impl Svd {
    pub fn dim(&self) -> usize {
        self.sigmas.len()
    }

    pub fn reconstruct(&self) -> Mat {
        let d = self.dim();
        let a = Mat::from_diagonal(&Vector::from_vec(self.sigmas.clone()));
        debug_assert_eq!(a.nrows(), d);
        &self.k * a * &self.l
    }

    /// `σ_i / σ_{i+1}` with 1-based `i`.
    pub fn gap(&self, i: usize) -> Result<f64> {
        let d = self.dim();
        if i == 0 || i >= d {
            return Err(Error::Domain(format!("gap index {i} outside 1..{}", d - 1)));
        }
        Ok(self.sigmas[i - 1] / self.sigmas[i])
    }

    fn require_gap(&self, i: usize) -> Result<()> {
        let r = self.gap(i)?;
        if !(r >= 1.0 + GAP_TOL) {
            return Err(Error::IllDefined { index: i, ratio: r });
        }
        Ok(())
    }

    pub fn unstable(&self, i: usize) -> Result<Subspace> {
        self.require_gap(i)?;
        Ok(Subspace::from_orthonormal(self.k.columns(0, i).into_owned()))
    }

    pub fn stable(&self, i: usize) -> Result<Subspace> {
        let d = self.dim();
        if i == 0 || i >= d {
            return Err(Error::Domain(format!("stable index {i} outside 1..{}", d - 1)));
        }
        self.require_gap(d - i)?;
        // U_i(g⁻¹) is spanned by the right singular vectors of the i smallest σ.
        let rows = self.l.rows(d - i, i).transpose();
        Ok(Subspace::from_orthonormal(rows))
    }
}

/// Full SVD with sorted singular values and no invertibility check.
pub fn svd_raw(g: &Mat) -> Svd {
    assert!(g.is_square(), "svd of non-square matrix");
    let d = g.nrows();
    let f = to_faer(g);
    let s = f.svd().expect("svd converged");
    let (u, v, sv) = (s.U(), s.V(), s.S().column_vector());
    let k = Mat::from_fn(d, d, |i, j| u[(i, j)]);
    let l = Mat::from_fn(d, d, |i, j| v[(j, i)]);
    let sigmas = (0..d).map(|i| sv[i]).collect();
    Svd { k, sigmas, l }
}

fn to_faer(g: &Mat) -> faer::Mat<f64> {
    faer::Mat::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)])
}

/// `(σ₁, u₁, v₁)`: top singular value with its left and right vectors.
pub fn top_singular_triple(m: &Mat) -> (f64, Vector, Vector) {
    let s = svd_raw(m);
    (s.sigmas[0], s.k.column(0).into_owned(), s.l.row(0).transpose())
}

/// SVD of an invertible matrix.
pub fn svd(g: &Mat) -> Result<Svd> {
    if !g.is_square() || g.nrows() == 0 {
        return Err(Error::Domain("svd needs a non-empty square matrix".into()));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    let s = svd_raw(g);
    let ratio = s.sigmas[s.dim() - 1] / s.sigmas[0];
    if !(ratio > f64::EPSILON) {
        return Err(Error::NotInvertible(ratio));
    }
    Ok(s)
}

pub fn singular_values(g: &Mat) -> Vec<f64> {
    if g.is_empty() {
        return Vec::new();
    }
    let mut v = to_faer(g).singular_values().expect("svd converged");
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Operator 2-norm.
pub fn sigma1(g: &Mat) -> f64 {
    if g.nrows() == 2 && g.ncols() == 2 {
        let (a, b, c, d) = (g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
        let s = a * a + b * b + c * c + d * d;
        let det = a * d - b * c;
        let disc = ((s - 2.0 * det) * (s + 2.0 * det)).max(0.0).sqrt();
        return ((s + disc) / 2.0).sqrt();
    }
    singular_values(g)[0]
}

pub fn singular_gap(g: &Mat, i: usize) -> Result<f64> {
    svd(g)?.gap(i)
}

pub fn unstable_space(g: &Mat, i: usize) -> Result<Subspace> {
    svd(g)?.unstable(i)
}

pub fn stable_space(g: &Mat, i: usize) -> Result<Subspace> {
    svd(g)?.stable(i)
}

pub fn cartan_vector(g: &Mat) -> Result<Vec<f64>> {
    Ok(svd(g)?.sigmas.iter().map(|s| s.ln()).collect())
}

/// Displacement `d(o, g·o)` in the symmetric space: the norm of the Cartan vector.
pub fn symmetric_distance(g: &Mat) -> Result<f64> {
    Ok(cartan_vector(g)?.iter().map(|x| x * x).sum::<f64>().sqrt())
}

/// A linear subspace of ℝᵈ stored by an orthonormal basis (columns).
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    basis: Mat,
}

impl Subspace {
    fn from_orthonormal(basis: Mat) -> Self {
        Subspace { basis }
    }

    /// Span of the columns of `m`; errors if they are numerically dependent.
    pub fn from_columns(m: &Mat) -> Result<Self> {
        let (d, p) = m.shape();
        if p == 0 || d == 0 {
            return Err(Error::Domain("zero-dimensional subspace".into()));
        }
        if p > d {
            return Err(Error::Domain(format!("{p} vectors in dimension {d}")));
        }
        let scale = m.norm().max(f64::MIN_POSITIVE);
        let qr = m.clone().qr();
        let r = qr.r();
        for i in 0..p {
            if r[(i, i)].abs() <= 1e-12 * scale {
                return Err(Error::Domain("spanning vectors are dependent".into()));
            }
        }
        Ok(Subspace { basis: qr.q() })
    }

    pub fn line(v: &[f64]) -> Result<Self> {
        Self::from_columns(&Mat::from_column_slice(v.len(), 1, v))
    }

    pub fn coordinate(d: usize, axes: &[usize]) -> Result<Self> {
        let mut m = Mat::zeros(d, axes.len());
        for (j, &a) in axes.iter().enumerate() {
            if a >= d {
                return Err(Error::Domain(format!("axis {a} outside dimension {d}")));
            }
            m[(a, j)] = 1.0;
        }
        Self::from_columns(&m)
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn projector(&self) -> Mat {
        &self.basis * self.basis.transpose()
    }

    /// Orthogonal complement; `None` when the subspace is everything.
    pub fn complement(&self) -> Option<Subspace> {
        let d = self.ambient();
        let p = self.dim();
        if p == d {
            return None;
        }
        let q = Mat::identity(d, d) - self.projector();
        let s = svd_raw(&q);
        Some(Subspace { basis: s.k.columns(0, d - p).into_owned() })
    }

    pub fn image(&self, g: &Mat) -> Result<Subspace> {
        Self::from_columns(&(g * &self.basis))
    }

    /// Component of `v` orthogonal to the subspace.
    pub fn reject(&self, v: &Vector) -> Vector {
        v - &self.basis * (self.basis.transpose() * v)
    }
}

fn same_ambient(a: &Subspace, b: &Subspace) -> Result<()> {
    if a.ambient() != b.ambient() {
        return Err(Error::Domain("subspaces live in different dimensions".into()));
    }
    Ok(())
}

/// Sine of the largest principal angle between equal-dimensional subspaces.
pub fn grassmann_distance(a: &Subspace, b: &Subspace) -> Result<f64> {
    same_ambient(a, b)?;
    if a.dim() != b.dim() {
        return Err(Error::Domain(format!("dimensions {} and {} differ", a.dim(), b.dim())));
    }
    let m = &a.basis - &b.basis * (b.basis.transpose() * &a.basis);
    Ok(singular_values(&m)[0].min(1.0))
}

/// `s(U,V) = inf { sin∠(u,V) : u ∈ U unit }`.
pub fn minimal_gap(u: &Subspace, v: &Subspace) -> Result<f64> {
    same_ambient(u, v)?;
    let m = &u.basis - &v.basis * (v.basis.transpose() * &u.basis);
    let s = singular_values(&m);
    Ok(s[s.len() - 1].clamp(0.0, 1.0))
}

/// Sine of the angle between two nonzero vectors, accurate for small angles.
pub fn line_distance(x: &Vector, y: &Vector) -> f64 {
    let yn = y / y.norm();
    let xn = x / x.norm();
    let r = &xn - &yn * yn.dot(&xn);
    r.norm().min(1.0)
}

/// `g* = (g⁻¹)ᵀ`.
pub fn dual(g: &Mat) -> Result<Mat> {
    let inv = g.clone().try_inverse().ok_or(Error::NotInvertible(0.0))?;
    Ok(inv.transpose())
}

#[derive(Clone, Debug, Serialize)]
pub struct DualReport {
    /// `d(U₁(g*), U_{d−1}(g)^⊥)`.
    pub line_error: Option<f64>,
    /// `d(U_{d−1}(g*), U₁(g)^⊥)`.
    pub hyperplane_error: Option<f64>,
    pub skipped: bool,
    pub reason: Option<String>,
}

pub fn dual_subspace_identities(g: &Mat) -> Result<DualReport> {
    let d = g.nrows();
    if d < 2 {
        return Err(Error::Domain("dimension must be at least 2".into()));
    }
    let gs = dual(g)?;
    let (sg, sd) = (svd(g)?, svd(&gs)?);
    let run = || -> Result<(f64, f64)> {
        let u1_dual = sd.unstable(1)?;
        let ud_perp = sg.unstable(d - 1)?.complement().expect("proper subspace");
        let ud_dual = sd.unstable(d - 1)?;
        let u1_perp = sg.unstable(1)?.complement().expect("proper subspace");
        Ok((grassmann_distance(&u1_dual, &ud_perp)?, grassmann_distance(&ud_dual, &u1_perp)?))
    };
    Ok(match run() {
        Ok((a, b)) => DualReport { line_error: Some(a), hyperplane_error: Some(b), skipped: false, reason: None },
        Err(e) => DualReport { line_error: None, hyperplane_error: None, skipped: true, reason: Some(e.to_string()) },
    })
}

/// A matrix kept as `exp(log_scale) · m` with `m` of unit Frobenius norm.
#[derive(Clone, Debug)]
pub struct Scaled {
    pub m: Mat,
    pub log_scale: f64,
}

impl Scaled {
    pub fn new(m: Mat) -> Self {
        let mut s = Scaled { m, log_scale: 0.0 };
        s.normalize();
        s
    }

    pub fn identity(d: usize) -> Self {
        Scaled::new(Mat::identity(d, d))
    }

    fn normalize(&mut self) {
        let n = self.m.norm();
        if n > 0.0 && n.is_finite() {
            self.m /= n;
            self.log_scale += n.ln();
        }
    }

    /// `self · other`.
    pub fn mul(&self, other: &Scaled) -> Scaled {
        let mut s = Scaled { m: &self.m * &other.m, log_scale: self.log_scale + other.log_scale };
        s.normalize();
        s
    }

    pub fn log_sigma1(&self) -> f64 {
        sigma1(&self.m).ln() + self.log_scale
    }
}

/// `gⁿ` by repeated squaring with renormalization at every stage.
pub fn scaled_power(g: &Mat, n: u64) -> Scaled {
    let d = g.nrows();
    let mut result = Scaled::identity(d);
    let mut base = Scaled::new(g.clone());
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result = base.mul(&result);
        }
        e >>= 1;
        if e > 0 {
            base = base.mul(&base);
        }
    }
    result
}

/// `log (σ₁/σ₂)(gⁿ)`, computed through `σ₁σ₂ = σ₁(⋀²)` so that tiny `σ₂` keeps
/// full relative accuracy.
pub fn log_gap_of_power(g: &Mat, n: u64) -> Result<f64> {
    let d = g.nrows();
    if d < 2 {
        return Err(Error::Domain("dimension must be at least 2".into()));
    }
    let l1 = scaled_power(g, n).log_sigma1();
    let l12 = if d == 2 {
        let det = g.determinant().abs();
        if det == 0.0 {
            return Err(Error::NotInvertible(0.0));
        }
        n as f64 * det.ln()
    } else {
        scaled_power(&exterior_power(g, 2)?, n).log_sigma1()
    };
    Ok(2.0 * l1 - l12)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProximalityReport {
    /// `log |λ₁/λ₂|` from eigenvalue moduli.
    pub eigen_gap: f64,
    /// `(1/n) log(σ₁/σ₂)(gⁿ)` at `n = n_max`.
    pub sigma_estimate: f64,
    pub n: u64,
    pub agreement: f64,
    pub proximal: bool,
}

pub fn eigenvalue_moduli(g: &Mat) -> Vec<f64> {
    let ev = g.clone().complex_eigenvalues();
    let mut m: Vec<f64> = ev.iter().map(|z| z.norm()).collect();
    m.sort_by(|a, b| b.total_cmp(a));
    m
}

pub fn proximality(g: &Mat, n_max: u64) -> Result<ProximalityReport> {
    if n_max == 0 {
        return Err(Error::Domain("n_max must be positive".into()));
    }
    svd(g)?;
    let moduli = eigenvalue_moduli(g);
    let eigen_gap = (moduli[0] / moduli[1]).ln();
    let sigma_estimate = log_gap_of_power(g, n_max)? / n_max as f64;
    Ok(ProximalityReport {
        eigen_gap,
        sigma_estimate,
        n: n_max,
        agreement: (eigen_gap - sigma_estimate).abs(),
        proximal: eigen_gap > 1e-6,
    })
}

/// Lexicographically ordered `k`-subsets of `0..d`.
pub fn subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(i + 1, d, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, d, k, &mut Vec::new(), &mut out);
    out
}

/// `⋀ᵏ g` on the basis `e_I = e_{i₁} ∧ … ∧ e_{i_k}`, `I` in lexicographic order.
pub fn exterior_power(g: &Mat, k: usize) -> Result<Mat> {
    let d = g.nrows();
    if !g.is_square() || k == 0 || k > d {
        return Err(Error::Domain(format!("exterior power {k} of a {d}x{d} matrix")));
    }
    let idx = subsets(d, k);
    let n = idx.len();
    let mut out = Mat::zeros(n, n);
    for (a, rows) in idx.iter().enumerate() {
        for (b, cols) in idx.iter().enumerate() {
            let minor = Mat::from_fn(k, k, |i, j| g[(rows[i], cols[j])]);
            out[(a, b)] = minor.determinant();
        }
    }
    Ok(out)
}

/// Symmetric square of a 2×2 matrix on the orthonormal basis
/// `(e₁e₁, (e₁e₂+e₂e₁)/√2, e₂e₂)`; singular values are `σ₁², σ₁σ₂, σ₂²`.
pub fn symmetric_square(g: &Mat) -> Result<Mat> {
    if g.shape() != (2, 2) {
        return Err(Error::Domain("symmetric square is implemented for 2x2".into()));
    }
    let (p, q, r, s) = (g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
    let t = std::f64::consts::SQRT_2;
    Ok(Mat::from_row_slice(
        3,
        3,
        &[p * p, t * p * q, q * q, t * p * r, p * s + q * r, t * q * s, r * r, t * r * s, s * s],
    ))
}

pub fn rotation(theta: f64) -> Mat {
    let (s, c) = theta.sin_cos();
    Mat::from_row_slice(2, 2, &[c, -s, s, c])
}

pub fn diag(entries: &[f64]) -> Mat {
    Mat::from_diagonal(&Vector::from_column_slice(entries))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_svd_of_diagonal() {
        let s = svd(&diag(&[0.25, 4.0, 1.0])).unwrap();
        assert_eq!(s.sigmas, vec![4.0, 1.0, 0.25]);
        assert!((s.reconstruct() - diag(&[0.25, 4.0, 1.0])).norm() < 1e-14);
    }

    #[test]
    fn singular_matrix_rejected() {
        let g = Mat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(svd(&g), Err(Error::NotInvertible(_))));
    }

    #[test]
    fn orthogonal_has_no_gap() {
        assert!(matches!(unstable_space(&rotation(0.7), 1), Err(Error::IllDefined { .. })));
    }

    #[test]
    fn unstable_line_of_diagonal() {
        let g = diag(&[4.0, 1.0, 0.25]);
        let u = unstable_space(&g, 1).unwrap();
        let e1 = Subspace::coordinate(3, &[0]).unwrap();
        assert!(grassmann_distance(&u, &e1).unwrap() < 1e-15);
        assert_eq!(singular_gap(&g, 1).unwrap(), 4.0);
        let s = stable_space(&g, 2).unwrap();
        let e23 = Subspace::coordinate(3, &[1, 2]).unwrap();
        assert!(grassmann_distance(&s, &e23).unwrap() < 1e-15);
    }

    #[test]
    fn cartan_of_diagonal() {
        let e = std::f64::consts::E;
        let v = cartan_vector(&diag(&[e, 1.0, 1.0 / e])).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1].abs() < 1e-15 && (v[2] + 1.0).abs() < 1e-15);
        let dist = symmetric_distance(&diag(&[e, 1.0, 1.0 / e])).unwrap();
        assert!((dist - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn lines_at_angle() {
        let th = 0.3f64;
        let a = Subspace::line(&[1.0, 0.0]).unwrap();
        let b = Subspace::line(&[th.cos(), th.sin()]).unwrap();
        assert!((grassmann_distance(&a, &b).unwrap() - th.sin()).abs() < 1e-15);
        assert!((minimal_gap(&a, &b).unwrap() - th.sin()).abs() < 1e-15);
        let c = Subspace::line(&[0.0, 1.0]).unwrap();
        assert_eq!(grassmann_distance(&a, &c).unwrap(), 1.0);
        assert_eq!(minimal_gap(&a, &c).unwrap(), 1.0);
    }

    #[test]
    fn dual_of_diagonal() {
        let g = diag(&[4.0, 2.0, 1.0]);
        let u1 = unstable_space(&dual(&g).unwrap(), 1).unwrap();
        let e3 = Subspace::coordinate(3, &[2]).unwrap();
        assert!(grassmann_distance(&u1, &e3).unwrap() < 1e-15);
        let r = dual_subspace_identities(&g).unwrap();
        assert!(r.line_error.unwrap() < 1e-14 && r.hyperplane_error.unwrap() < 1e-14);
        assert!(dual_subspace_identities(&rotation(0.4)).unwrap().skipped);
    }

    #[test]
    fn wedge_of_diagonal() {
        let w = exterior_power(&diag(&[3.0, 2.0, 1.0]), 2).unwrap();
        assert_eq!(singular_values(&w), vec![6.0, 3.0, 2.0]);
        let g = Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 5.0]);
        assert_eq!(exterior_power(&g, 1).unwrap(), g);
    }

    #[test]
    fn proximality_of_diagonal_and_rotation() {
        let r = proximality(&diag(&[2.0, 0.5]), 60).unwrap();
        assert!((r.eigen_gap - 4f64.ln()).abs() < 1e-12);
        assert!((r.sigma_estimate - 4f64.ln()).abs() < 1e-12);
        assert!(r.proximal);
        let r = proximality(&rotation(0.9), 60).unwrap();
        assert!(!r.proximal);
        assert!(r.sigma_estimate.abs() < 1e-9);
    }

    #[test]
    fn symmetric_square_singular_values() {
        let g = Mat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.0]);
        let s = singular_values(&g);
        let t = singular_values(&symmetric_square(&g).unwrap());
        for (x, y) in t.iter().zip([s[0] * s[0], s[0] * s[1], s[1] * s[1]]) {
            assert!((x - y).abs() < 1e-12 * y.max(1.0));
        }
    }

    #[test]
    fn sigma1_closed_form_matches_svd() {
        let g = Mat::from_row_slice(2, 2, &[0.3, -2.0, 1.7, 0.2]);
        assert!((sigma1(&g) - singular_values(&g)[0]).abs() < 1e-14);
    }
}
