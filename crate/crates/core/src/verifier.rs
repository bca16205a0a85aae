//! Relative domination checks for a concrete representation on finite
//! cusped balls. Every fitted constant is a candidate read off the scanned
//! ball, never a proof.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cusped::{CuspedGraph, CuspedSpace, Vertex};
use crate::error::{Error, Result};
use crate::group::{Element, GroupSpec, NormalForm, PeripheralKind};
use crate::linalg::{eigenvalue_moduli, exterior_power, line_distance, minimal_gap, proximality, top_singular_triple, Mat, Scaled, Vector};
use crate::path::{normalize_excursions, project, reparametrize, RelativePath};
use crate::report::SLACK;
use crate::splitting::{self, Analysis, AxiomConstants, MatrixSequence};

/// Tolerance for subspace comparisons.
pub const SUBSPACE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RepFile {
    pub dimension: usize,
    /// Generator name to row-major matrix. Inverses and derived generators
    /// may be omitted.
    pub images: BTreeMap<String, Vec<Vec<f64>>>,
}

/// `ρ: Γ → GL(d, ℝ)` given on generators.
#[derive(Clone, Debug)]
pub struct Representation {
    pub spec: GroupSpec,
    pub dim: usize,
    /// Image of every generator, indexed like `spec.names`.
    pub images: Vec<Mat>,
    duals: Vec<Mat>,
    /// `⋀ⁱρ(s)` for `i = 2..d−1`.
    wedges: Vec<Vec<Mat>>,
    dual_wedge2: Vec<Mat>,
}

fn base_positive(spec: &GroupSpec, g: usize) -> bool {
    spec.base_word(&spec.values[g]) == vec![g]
}

impl Representation {
    /// Images are required for one of each inverse pair of base generators;
    /// supplied images of other generators are checked for consistency.
    pub fn new(spec: &GroupSpec, given: &BTreeMap<String, Mat>) -> Result<Self> {
        let n = spec.num_generators();
        let Some(d) = given.values().next().map(|m| m.nrows()) else {
            return Err(Error::Input("representation has no images".into()));
        };
        for (name, m) in given {
            if spec.generator(name).is_none() {
                return Err(Error::Input(format!("image for unknown generator `{name}`")));
            }
            if m.shape() != (d, d) {
                return Err(Error::Input(format!("image of `{name}` is {:?}, expected {d}x{d}", m.shape())));
            }
        }
        let mut base: Vec<Option<Mat>> = vec![None; n];
        for g in 0..n {
            if !base_positive(spec, g) {
                continue;
            }
            let gi = spec.inverse[g];
            base[g] = match (given.get(&spec.names[g]), given.get(&spec.names[gi])) {
                (Some(m), _) => Some(m.clone()),
                (None, Some(mi)) => Some(mi.clone().try_inverse().ok_or(Error::NotInvertible(0.0))?),
                (None, None) => return Err(Error::Input(format!("no image for `{}`", spec.names[g]))),
            };
            let m = base[g].as_ref().unwrap();
            let s = crate::linalg::singular_values(m);
            if !(s[d - 1] / s[0] > f64::EPSILON) {
                return Err(Error::NotInvertible(s[d - 1] / s[0]));
            }
            base[gi] = Some(m.clone().try_inverse().ok_or(Error::NotInvertible(0.0))?);
        }
        let eval = |x: &Element| -> Mat {
            spec.base_word(x).iter().fold(Mat::identity(d, d), |acc, &g| acc * base[g].as_ref().expect("base image"))
        };
        let images: Vec<Mat> = (0..n).map(|g| base[g].clone().unwrap_or_else(|| eval(&spec.values[g]))).collect();
        for (name, m) in given {
            let g = spec.generator(name).expect("checked");
            let expected = &images[g];
            if (m - expected).norm() > 1e-9 * expected.norm().max(1.0) {
                return Err(Error::Input(format!("image of `{name}` disagrees with its word or inverse")));
            }
        }
        let duals: Vec<Mat> = images.iter().map(|m| m.clone().try_inverse().expect("invertible").transpose()).collect();
        let wedges = (2..d).map(|i| images.iter().map(|m| exterior_power(m, i)).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
        let dual_wedge2 = if d > 2 { duals.iter().map(|m| exterior_power(m, 2)).collect::<Result<_>>()? } else { Vec::new() };
        Ok(Representation { spec: spec.clone(), dim: d, images, duals, wedges, dual_wedge2 })
    }

    pub fn from_file(spec: &GroupSpec, f: &RepFile) -> Result<Self> {
        let d = f.dimension;
        if d < 2 {
            return Err(Error::Input("dimension must be at least 2".into()));
        }
        let mut given = BTreeMap::new();
        for (name, rows) in &f.images {
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(Error::Input(format!("image of `{name}` must be {d}x{d}")));
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            given.insert(name.clone(), Mat::from_row_slice(d, d, &flat));
        }
        Self::new(spec, &given)
    }

    pub fn from_toml(spec: &GroupSpec, text: &str) -> Result<Self> {
        let f: RepFile = toml::from_str(text).map_err(|e| Error::Input(e.to_string()))?;
        Self::from_file(spec, &f)
    }

    pub fn load(spec: &GroupSpec, path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        Self::from_toml(spec, &text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
    }

    pub fn to_file(&self) -> RepFile {
        let mut images = BTreeMap::new();
        for g in 0..self.spec.num_generators() {
            if base_positive(&self.spec, g) {
                let m = &self.images[g];
                images.insert(self.spec.names[g].clone(), (0..self.dim).map(|r| m.row(r).iter().copied().collect()).collect());
            }
        }
        RepFile { dimension: self.dim, images }
    }

    /// `ρ*(s) = ρ(s)^{−T}`.
    pub fn dual(&self) -> Representation {
        let mut given = BTreeMap::new();
        for g in 0..self.spec.num_generators() {
            if base_positive(&self.spec, g) {
                given.insert(self.spec.names[g].clone(), self.duals[g].clone());
            }
        }
        Representation::new(&self.spec, &given).expect("dual of a valid representation")
    }

    /// Product of generator images along a word; the empty word gives the identity.
    pub fn evaluate(&self, word: &[usize]) -> Result<Mat> {
        let mut m = Mat::identity(self.dim, self.dim);
        for &g in word {
            let img = self.images.get(g).ok_or_else(|| Error::Input(format!("unknown generator index {g}")))?;
            m *= img;
        }
        Ok(m)
    }

    pub fn evaluate_names(&self, text: &str) -> Result<Mat> {
        self.evaluate(&self.spec.parse_word(text)?)
    }

    pub fn evaluate_element(&self, x: &Element) -> Mat {
        self.evaluate(&self.spec.base_word(x)).expect("valid generator indices")
    }

    fn fold(word: &[usize], mats: &[Mat], d: usize) -> Scaled {
        let mut acc = Scaled::identity(d);
        let mut raw = Mat::identity(d, d);
        for (i, &g) in word.iter().enumerate() {
            raw *= &mats[g];
            if i % 8 == 7 {
                acc = acc.mul(&Scaled::new(std::mem::replace(&mut raw, Mat::identity(d, d))));
            }
        }
        acc.mul(&Scaled::new(raw))
    }

    pub fn scaled(&self, x: &Element) -> Scaled {
        Self::fold(&self.spec.base_word(x), &self.images, self.dim)
    }

    /// Singular data of `ρ(x)` computed without forming huge entries.
    pub fn data(&self, x: &Element) -> ElementData {
        let d = self.dim;
        let word = self.spec.base_word(x);
        let p = Self::fold(&word, &self.images, d);
        let q = Self::fold(&word, &self.duals, d);
        let (s1, xi, _) = top_singular_triple(&p.m);
        let (t1, xi_star, _) = top_singular_triple(&q.m);
        let log_det: f64 = word.iter().map(|&g| self.images[g].determinant().abs().ln()).sum();
        // Partial sums L_i = log σ₁⋯σ_i.
        let mut partial = vec![s1.ln() + p.log_scale];
        for w in &self.wedges {
            partial.push(Self::fold(&word, w, w[0].nrows()).log_sigma1());
        }
        partial.push(log_det);
        let mut log_sv = vec![partial[0]];
        for i in 1..d {
            log_sv.push(partial[i] - partial[i - 1]);
        }
        let q1 = t1.ln() + q.log_scale;
        let q12 = if d > 2 { Self::fold(&word, &self.dual_wedge2, self.dual_wedge2[0].nrows()).log_sigma1() } else { -log_det };
        ElementData {
            log_sv,
            xi: xi.iter().copied().collect(),
            xi_star_normal: xi_star.iter().copied().collect(),
            dual_log_gap: 2.0 * q1 - q12,
        }
    }
}

/// `log σᵢ(ρ(γ))`, `Ξ(γ) = U₁(ρ(γ))` and the normal of `Ξ*(γ) = U_{d−1}(ρ(γ))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElementData {
    pub log_sv: Vec<f64>,
    pub xi: Vec<f64>,
    pub xi_star_normal: Vec<f64>,
    /// `log σ₁/σ₂(ρ*(γ))` from the dual generator images.
    pub dual_log_gap: f64,
}

impl ElementData {
    pub fn log_gap(&self) -> f64 {
        self.log_sv[0] - self.log_sv[1]
    }

    /// `log σ₁/σ_d`.
    pub fn log_spread(&self) -> f64 {
        self.log_sv[0] - self.log_sv[self.log_sv.len() - 1]
    }

    /// `log σ₁/σ₂` of the inverse, from the forward data.
    pub fn inverse_log_gap(&self) -> f64 {
        let d = self.log_sv.len();
        self.log_sv[d - 2] - self.log_sv[d - 1]
    }

    /// Norm of the Cartan vector after removing the determinant.
    pub fn cartan_norm(&self) -> f64 {
        let mean = self.log_sv.iter().sum::<f64>() / self.log_sv.len() as f64;
        self.log_sv.iter().map(|x| (x - mean).powi(2)).sum::<f64>().sqrt()
    }
}

/// Group elements of a ball with their cusped lengths and singular data.
pub struct BallData {
    pub elements: Vec<Element>,
    pub lengths: Vec<u32>,
    pub data: Vec<ElementData>,
    index: HashMap<Element, usize>,
}

impl BallData {
    pub fn new(rep: &Representation, graph: &CuspedGraph) -> Self {
        let (elements, lengths): (Vec<Element>, Vec<u32>) = graph.group_elements().map(|(e, l)| (e.clone(), l)).unzip();
        Self::from_lengths(rep, elements, lengths)
    }

    pub fn from_lengths(rep: &Representation, elements: Vec<Element>, lengths: Vec<u32>) -> Self {
        let data = elements.par_iter().map(|e| rep.data(e)).collect();
        let index = elements.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        BallData { elements, lengths, data, index }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn get(&self, x: &Element) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn max_length(&self) -> u32 {
        self.lengths.iter().copied().max().unwrap_or(0)
    }
}

/// `(x, y)` points reduced to the extreme `y` per integer `x`.
fn extremes(points: &[(u32, f64)], lower: bool) -> Vec<(f64, f64)> {
    let mut best: BTreeMap<u32, f64> = BTreeMap::new();
    for &(x, y) in points {
        if x == 0 {
            continue;
        }
        let e = best.entry(x).or_insert(y);
        *e = if lower { e.min(y) } else { e.max(y) };
    }
    best.into_iter().map(|(x, y)| (x as f64, y)).collect()
}

/// Slope of the last edge of the lower (or upper) convex hull.
fn last_hull_slope(pts: &[(f64, f64)], lower: bool) -> Option<f64> {
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if (lower && cross <= 0.0) || (!lower && cross >= 0.0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    match hull.as_slice() {
        [] => None,
        [p] => Some(p.1 / p.0),
        [.., a, b] => Some((b.1 - a.1) / (b.0 - a.0)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerFit {
    pub c: f64,
    pub mu: f64,
    pub points: usize,
    /// Scatter points below the support line; zero by construction.
    pub outside: usize,
    pub passed: bool,
    pub witnesses: Vec<String>,
}

impl LowerFit {
    /// `K = 1/C̲`, so that `σ₂/σ₁ ≤ K e^{−μ̲|γ|_c}`.
    pub fn k(&self) -> f64 {
        1.0 / self.c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpperFit {
    pub c: f64,
    pub mu: f64,
    pub points: usize,
    /// Scatter points above the support line; zero by construction.
    pub outside: usize,
    /// `log max_s ‖ρ(s)‖`, the a-priori per-letter growth rate.
    pub apriori_mu2: Option<f64>,
}

/// Lower support line of `(|γ|_c, log σ₁/σ₂)` with the slope of the last
/// lower-hull edge, `C̲ ≤ 1`.
pub fn fit_lower(points: &[(u32, f64)]) -> (f64, f64) {
    let ext = extremes(points, true);
    let mu = last_hull_slope(&ext, true).unwrap_or(0.0);
    let log_c = points.iter().filter(|p| p.0 > 0).map(|&(x, y)| y - mu * x as f64).fold(0.0f64, f64::min);
    (log_c.exp(), mu)
}

/// Upper support line with `μ̄ ≥ mu_floor` and `C̄ ≥ 1`.
pub fn fit_upper(points: &[(u32, f64)], mu_floor: f64) -> (f64, f64) {
    let ext = extremes(points, false);
    let mu = last_hull_slope(&ext, false).unwrap_or(0.0).max(mu_floor);
    let log_c = points.iter().map(|&(x, y)| y - mu * x as f64).fold(0.0f64, f64::max);
    (log_c.exp(), mu)
}

pub fn check_lower_domination(spec: &GroupSpec, ball: &BallData) -> LowerFit {
    let points: Vec<(u32, f64)> = ball.lengths.iter().zip(&ball.data).map(|(&l, d)| (l, d.log_gap())).collect();
    let (c, mu) = fit_lower(&points);
    let outside = points.iter().filter(|&&(x, y)| x > 0 && y < c.ln() + mu * x as f64 - 1e-9 * (1.0 + y.abs())).count();
    let passed = mu > 0.0 && mu.is_finite();
    let witnesses = if passed {
        Vec::new()
    } else {
        let mut idx: Vec<usize> = (0..ball.len()).filter(|&i| ball.lengths[i] > 0).collect();
        idx.sort_by(|&a, &b| ball.data[a].log_gap().total_cmp(&ball.data[b].log_gap()).then(ball.lengths[b].cmp(&ball.lengths[a])));
        idx.iter().take(5).map(|&i| spec.display(&ball.elements[i])).collect()
    };
    LowerFit { c, mu, points: points.len(), outside, passed, witnesses }
}

pub fn check_upper_domination(rep: &Representation, ball: &BallData, lower: &LowerFit) -> UpperFit {
    let points: Vec<(u32, f64)> = ball.lengths.iter().zip(&ball.data).map(|(&l, d)| (l, d.log_spread())).collect();
    let (c, mu) = fit_upper(&points, lower.mu.max(0.0));
    let outside = points.iter().filter(|&&(x, y)| y > c.ln() + mu * x as f64 + 1e-9 * (1.0 + y.abs())).count();
    let apriori_mu2 = rep.images.iter().map(crate::linalg::sigma1).fold(None, |a: Option<f64>, s| Some(a.map_or(s, |a| a.max(s)))).map(f64::ln);
    UpperFit { c, mu, points: points.len(), outside, apriori_mu2 }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Tally {
    pub checked: usize,
    pub violations: usize,
    /// Smallest `bound − measured` (upper) or `measured − bound` (lower).
    pub worst_margin: Option<f64>,
    pub witnesses: Vec<String>,
}

impl Tally {
    fn record(&mut self, margin: f64, ok: bool, witness: impl FnOnce() -> String) {
        self.checked += 1;
        self.worst_margin = Some(self.worst_margin.map_or(margin, |m| m.min(margin)));
        if !ok {
            self.violations += 1;
            if self.witnesses.len() < 8 {
                self.witnesses.push(witness());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitQiReport {
    pub upper: Tally,
    pub lower: Tally,
}

/// `‖a(ρ(γ))‖ ≤ (√d/2)(log C̄ + μ̄|γ|_c)` and `≥ (1/2)log C̲ + (μ̲/2)|γ|_c`.
pub fn check_orbit_qi(spec: &GroupSpec, ball: &BallData, lower: &LowerFit, upper: &UpperFit) -> OrbitQiReport {
    let d = ball.data.first().map_or(2, |x| x.log_sv.len()) as f64;
    let mut up = Tally::default();
    let mut lo = Tally::default();
    for i in 0..ball.len() {
        let x = ball.lengths[i] as f64;
        let a = ball.data[i].cartan_norm();
        let hi = d.sqrt() / 2.0 * (upper.c.ln() + upper.mu * x);
        let low = 0.5 * lower.c.ln() + lower.mu / 2.0 * x;
        let w = || spec.display(&ball.elements[i]);
        up.record(hi - a, a <= hi * SLACK + 1e-12, w);
        lo.record(a - low, a * SLACK + 1e-12 >= low, || spec.display(&ball.elements[i]));
    }
    OrbitQiReport { upper: up, lower: lo }
}

/// Pointwise `σ₁/σ₂(ρ*(γ)) = σ₁/σ₂(ρ(γ⁻¹))`, each side from its own products.
pub fn check_duality(spec: &GroupSpec, ball: &BallData, tol: f64) -> Tally {
    let mut t = Tally::default();
    for (i, d) in ball.data.iter().enumerate() {
        let (a, b) = (d.dual_log_gap, d.inverse_log_gap());
        let err = (a - b).abs() / a.abs().max(b.abs()).max(1.0);
        t.record(tol - err, err <= tol, || spec.display(&ball.elements[i]));
    }
    t
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscretenessReport {
    /// Minimum of `log σ₁/σ₂` over each nonempty sphere, by radius.
    pub shell_minima: Vec<(u32, f64)>,
    pub slope: f64,
    pub passed: bool,
}

/// The sphere minima of `log σ₁/σ₂` must trend upward.
pub fn check_discreteness(ball: &BallData) -> DiscretenessReport {
    let mut shells: BTreeMap<u32, f64> = BTreeMap::new();
    for (&l, d) in ball.lengths.iter().zip(&ball.data) {
        if l > 0 {
            let e = shells.entry(l).or_insert(f64::INFINITY);
            *e = e.min(d.log_gap());
        }
    }
    let pts: Vec<(u32, f64)> = shells.into_iter().collect();
    let n = pts.len() as f64;
    let slope = if pts.len() < 2 {
        0.0
    } else {
        let mx = pts.iter().map(|p| p.0 as f64).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 as f64 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 as f64 - mx).powi(2)).sum();
        sxy / sxx
    };
    DiscretenessReport { passed: slope > 0.0, shell_minima: pts, slope }
}

/// Cyclically reduced letters of a free-group element.
fn cyclic_letters(spec: &GroupSpec, x: &Element) -> Vec<usize> {
    let mut w = spec.base_word(x);
    while w.len() >= 2 && spec.inverse[w[0]] == w[w.len() - 1] {
        w.pop();
        w.remove(0);
    }
    w
}

/// Whether `x` is conjugate into a peripheral subgroup (free normal forms only).
pub fn is_conjugate_peripheral(spec: &GroupSpec, x: &Element) -> Result<bool> {
    if spec.normal_form != NormalForm::Free {
        return Err(Error::Unsupported("conjugacy test needs a free normal form".into()));
    }
    let w = cyclic_letters(spec, x);
    if w.is_empty() {
        return Ok(true);
    }
    for p in &spec.peripherals {
        let gens: Vec<Element> = match &p.kind {
            PeripheralKind::Cyclic(g) => vec![g.clone()],
            PeripheralKind::Axes { .. } => p.basis.iter().map(|&g| spec.values[g].clone()).collect(),
        };
        for g in gens {
            for h in [g.clone(), spec.inv(&g)] {
                let u = cyclic_letters(spec, &h);
                if u.is_empty() || w.len() % u.len() != 0 {
                    continue;
                }
                for r in 0..u.len() {
                    let rot: Vec<usize> = u[r..].iter().chain(&u[..r]).copied().collect();
                    if w.chunks(u.len()).all(|c| c == rot.as_slice()) {
                        return Ok(true);
                    }
                }
            }
        }
    }
    Ok(false)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProximalityTally {
    pub sampled: usize,
    pub proximal: usize,
    /// Elements decided from eigenvalue moduli alone.
    pub moduli_fallbacks: usize,
    pub witnesses: Vec<String>,
    pub skipped: Option<String>,
}

/// Non-peripheral elements must map to proximal matrices.
pub fn check_proximality(rep: &Representation, ball: &BallData, budget: usize, rng: &mut ChaCha8Rng) -> ProximalityTally {
    let spec = &rep.spec;
    let mut idx: Vec<usize> = (0..ball.len()).filter(|&i| ball.lengths[i] >= 2).collect();
    idx.shuffle(rng);
    let mut t = ProximalityTally { sampled: 0, proximal: 0, moduli_fallbacks: 0, witnesses: Vec::new(), skipped: None };
    for i in idx {
        if t.sampled >= budget {
            break;
        }
        let x = &ball.elements[i];
        match is_conjugate_peripheral(spec, x) {
            Err(e) => {
                t.skipped = Some(e.to_string());
                break;
            }
            Ok(true) => continue,
            Ok(false) => {}
        }
        let s = rep.scaled(x);
        t.sampled += 1;
        // Long words are numerically singular; their eigenvalue moduli still resolve the gap.
        let proximal = match proximality(&s.m, 64) {
            Ok(r) => r.proximal,
            Err(Error::NotInvertible(_)) => {
                t.moduli_fallbacks += 1;
                let m = eigenvalue_moduli(&s.m);
                (m[0] / m[1]).ln() > 1e-6
            }
            Err(_) => false,
        };
        if proximal {
            t.proximal += 1;
        } else {
            t.witnesses.push(spec.display(x));
        }
    }
    t
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeripheralRecord {
    pub index: usize,
    /// Upper domination of `σ₁` on the peripheral: `(C₁, μ₁)`.
    pub c1: f64,
    pub mu1: f64,
    pub elements_in_ball: usize,
    /// `max d(U₁(ρ(η)), ξ(P))` over `|η|_P = n`, for dyadic `n`.
    pub limit_deviation: Vec<(u64, f64)>,
    pub limit_dual_deviation: Vec<(u64, f64)>,
    pub xi: Vec<f64>,
    pub xi_star_normal: Vec<f64>,
    pub unique_limits: bool,
    /// `min (σ₁/σ₂)(ρ(γη))/|η|²` over sampled excursions.
    pub quadratic_gap_c: Option<f64>,
    pub excursions_sampled: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeripheralReport {
    pub records: Vec<PeripheralRecord>,
    /// Sampled floor of `sin∠(ξ, ξ*)` across splits of sampled paths.
    pub transversality: Option<f64>,
    pub transversality_samples: usize,
    pub passed: bool,
}

fn l1_vectors(rank: usize, r: i64) -> Vec<Vec<i64>> {
    fn rec(rank: usize, left: i64, acc: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if acc.len() + 1 == rank {
            for v in if left == 0 { vec![0] } else { vec![-left, left] } {
                acc.push(v);
                out.push(acc.clone());
                acc.pop();
            }
            return;
        }
        for v in -left..=left {
            acc.push(v);
            rec(rank, left - v.abs(), acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    rec(rank, r, &mut Vec::new(), &mut out);
    out
}

/// Random projected and reparametrized geodesics from the identity to
/// elements of the ball, skipping wholly peripheral ones. Returns the
/// projected path and its reparametrization.
pub fn sample_paths(
    space: &CuspedSpace<'_>,
    graph: &CuspedGraph,
    budget: usize,
    min_length: u32,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(RelativePath, RelativePath)>> {
    let spec = space.spec;
    let targets: Vec<&Element> = graph.group_elements().filter(|(_, l)| *l >= min_length.max(1)).map(|(e, _)| e).collect();
    if targets.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < budget && attempts < budget * 4 {
        attempts += 1;
        let t = targets[rng.gen_range(0..targets.len())].clone();
        let geo = graph.random_geodesic(space, &Vertex::group(t), rng)?;
        let norm = normalize_excursions(spec, &geo)?;
        let proj = project(spec, &norm)?;
        match reparametrize(&proj.path) {
            Ok(r) => out.push((proj.path, r)),
            Err(Error::WhollyPeripheral) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn unit(v: &[f64]) -> Vector {
    Vector::from_column_slice(v)
}

/// `sin∠(line, hyperplane)`.
fn line_hyperplane_sine(line: &Vector, normal: &Vector) -> f64 {
    (line.dot(normal) / (line.norm() * normal.norm())).abs()
}

pub fn check_peripheral_conditions(
    rep: &Representation,
    ball: &BallData,
    paths: &[(RelativePath, RelativePath)],
    n_max: u64,
    tol: f64,
) -> Result<PeripheralReport> {
    let spec = &rep.spec;
    let mut records = Vec::new();
    let mut limits: Vec<(Vector, Vector)> = Vec::new();
    for (pi, per) in spec.peripherals.iter().enumerate() {
        let pts: Vec<(u32, f64)> = (0..ball.len())
            .filter(|&i| ball.lengths[i] > 0 && per.coords(&spec.model, &ball.elements[i]).is_some())
            .map(|i| (ball.lengths[i], ball.data[i].log_sv[0]))
            .collect();
        if pts.is_empty() {
            return Err(Error::Input(format!("peripheral {pi} too small: no elements in the ball")));
        }
        let (c1, mu1) = fit_upper(&pts, 0.0);
        let deepest = per.element(&spec.model, &l1_vectors(per.rank(), n_max as i64)[0]);
        let top = rep.data(&deepest);
        let (xi, xs) = (unit(&top.xi), unit(&top.xi_star_normal));
        let mut dev = Vec::new();
        let mut dev_star = Vec::new();
        let mut n = 1u64;
        while n < n_max {
            let (mut m, mut ms) = (0.0f64, 0.0f64);
            for c in l1_vectors(per.rank(), n as i64) {
                let dd = rep.data(&per.element(&spec.model, &c));
                m = m.max(line_distance(&unit(&dd.xi), &xi));
                ms = ms.max(line_distance(&unit(&dd.xi_star_normal), &xs));
            }
            dev.push((n, m));
            dev_star.push((n, ms));
            n *= 2;
        }
        let monotone = |v: &[(u64, f64)]| v.windows(2).all(|w| w[1].1 <= w[0].1 + tol);
        let unique_limits = monotone(&dev) && monotone(&dev_star);
        let mut log_cq = f64::INFINITY;
        let mut excursions_sampled = 0;
        for (proj, _) in paths {
            for e in proj.excursions.iter().filter(|e| e.peripheral == pi && e.open.is_none()) {
                let len = e.len() as f64;
                let g = rep.data(&proj.points[e.end]);
                log_cq = log_cq.min(g.log_gap() - 2.0 * len.ln());
                excursions_sampled += 1;
            }
        }
        records.push(PeripheralRecord {
            index: pi,
            c1,
            mu1,
            elements_in_ball: pts.len(),
            limit_deviation: dev,
            limit_dual_deviation: dev_star,
            xi: top.xi.clone(),
            xi_star_normal: top.xi_star_normal.clone(),
            unique_limits,
            quadratic_gap_c: log_cq.is_finite().then(|| log_cq.exp()),
            excursions_sampled,
        });
        limits.push((xi, xs));
    }
    let (transversality, transversality_samples) = transversality(rep, paths, &limits);
    let passed = records.iter().all(|r| r.unique_limits && r.quadratic_gap_c.is_none_or(|c| c > 0.0))
        && transversality.is_none_or(|t| t > tol);
    Ok(PeripheralReport { records, transversality, transversality_samples, passed })
}

/// For every split point `m` of a sampled path, the angle between the
/// attracting data behind and ahead of `m`, seen from `γ(m)`: peripheral
/// fixed lines of the cosets crossed before `m` against fixed hyperplanes of
/// those after, and `Ξ` of the start against `Ξ*` of the end.
fn transversality(rep: &Representation, paths: &[(RelativePath, RelativePath)], limits: &[(Vector, Vector)]) -> (Option<f64>, usize) {
    let spec = &rep.spec;
    let mut best = f64::INFINITY;
    let mut count = 0;
    for (proj, _) in paths {
        let end = proj.end();
        for m in 1..end {
            if proj.excursions.iter().any(|e| e.start < m && m < e.end) {
                continue;
            }
            let base = spec.inv(&proj.points[m]);
            let rel = |j: usize| spec.mul(&base, &proj.points[j]);
            let mut behind: Vec<Vector> = Vec::new();
            let mut ahead: Vec<Vector> = Vec::new();
            for e in &proj.excursions {
                let (xi, xs) = &limits[e.peripheral];
                if e.end <= m {
                    behind.push(rep.scaled(&rel(e.start)).m * xi);
                } else if e.start >= m {
                    let g = rep.scaled(&rel(e.start));
                    let inv_t = g.m.clone().try_inverse().expect("invertible").transpose();
                    ahead.push(inv_t * xs);
                }
            }
            let (past, future) = (rel(0), rel(end));
            behind.push(unit(&rep.data(&past).xi));
            ahead.push(unit(&rep.data(&future).xi_star_normal));
            for b in &behind {
                for a in &ahead {
                    let s = line_hyperplane_sine(b, a);
                    if s.is_finite() {
                        best = best.min(s);
                        count += 1;
                    }
                }
            }
        }
    }
    (best.is_finite().then_some(best), count)
}

/// Smallest integer `ℓ ≥ 0` with `K e^{−μℓ} < target`.
pub fn threshold_length(k: f64, mu: f64, target: f64) -> Result<u32> {
    if !(mu > 0.0) || !(target > 0.0) {
        return Err(Error::Domain("threshold needs positive rate and target".into()));
    }
    let x = ((k / target).ln() / mu).max(0.0);
    let mut l = x.floor() as u32;
    while k * (-mu * l as f64).exp() >= target {
        l += 1;
    }
    Ok(l)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitSample {
    pub radius: u32,
    pub ell0: u32,
    /// `(Ξ, normal of Ξ*, |γ|_c)` for the outermost sphere.
    pub points: Vec<(Vec<f64>, Vec<f64>, u32)>,
    pub invariance: Tally,
}

/// Limit-set sample on the outermost sphere, and the invariance bound
/// `d(ρ(s)Ξ(γ), Ξ(sγ)) ≤ (σ₁/σ_d)(ρ(s))·K e^{−μ̲|γ|_c}` for generators `s`.
pub fn sample_limit_set(rep: &Representation, ball: &BallData, lower: &LowerFit, tol: f64) -> Result<LimitSample> {
    if !lower.passed {
        return Err(Error::Invalid("lower domination constants unavailable".into()));
    }
    let spec = &rep.spec;
    let ell0 = threshold_length(lower.k(), lower.mu, 1.0)?;
    let radius = ball.max_length();
    let points = (0..ball.len())
        .filter(|&i| ball.lengths[i] == radius && radius >= ell0)
        .map(|i| (ball.data[i].xi.clone(), ball.data[i].xi_star_normal.clone(), radius))
        .collect();
    let spreads: Vec<f64> = rep
        .images
        .iter()
        .map(|m| {
            let s = crate::linalg::singular_values(m);
            s[0] / s[s.len() - 1]
        })
        .collect();
    let mut t = Tally::default();
    for i in 0..ball.len() {
        let l = ball.lengths[i];
        if l < ell0.max(1) || l + 1 > radius {
            continue;
        }
        let xi = unit(&ball.data[i].xi);
        for (g, img) in rep.images.iter().enumerate() {
            let y = spec.mul(&spec.values[g], &ball.elements[i]);
            let Some(j) = ball.get(&y) else { continue };
            let d = line_distance(&(img * &xi), &unit(&ball.data[j].xi));
            let bound = spreads[g] * lower.k() * (-lower.mu * l as f64).exp();
            t.record(bound - d, d <= bound * SLACK + tol, || format!("{} · {}", spec.names[g], spec.display(&ball.elements[i])));
        }
    }
    Ok(LimitSample { radius, ell0, points, invariance: t })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WordSumReport {
    pub nu: f64,
    pub c0: f64,
    pub c1: f64,
    pub tally: Tally,
    pub inconclusive: Option<String>,
}

/// `d_c(γ,η) ≥ ν(|γ|_c + |η|_c) − c₀ − c₁|log d(Ξ(γ), Ξ(η))|` on sampled pairs
/// with `|γ|_c, |η|_c ∈ [ℓ₀, R/2]`.
pub fn check_wordsum(rep: &Representation, graph: &CuspedGraph, ball: &BallData, lower: &LowerFit, upper: &UpperFit, budget: usize, rng: &mut ChaCha8Rng) -> Result<WordSumReport> {
    let spec = &rep.spec;
    let nu = lower.mu / (2.0 * upper.mu);
    let c0 = (upper.c.ln() + lower.k().ln()) / upper.mu;
    let c1 = 1.0 / upper.mu;
    let ell0 = threshold_length(lower.k(), lower.mu, 1.0)?;
    let half = ball.max_length() / 2;
    let pool: Vec<usize> = (0..ball.len()).filter(|&i| ball.lengths[i] >= ell0.max(1) && ball.lengths[i] <= half).collect();
    let mut tally = Tally::default();
    if pool.is_empty() {
        return Ok(WordSumReport { nu, c0, c1, tally, inconclusive: Some(format!("no elements with length in [{ell0}, {half}]")) });
    }
    for _ in 0..budget {
        let (i, j) = (pool[rng.gen_range(0..pool.len())], pool[rng.gen_range(0..pool.len())]);
        let (g, h) = (&ball.elements[i], &ball.elements[j]);
        let dc = graph.length(&spec.mul(&spec.inv(g), h))? as f64;
        let dist = line_distance(&unit(&ball.data[i].xi), &unit(&ball.data[j].xi));
        let rhs = nu * (ball.lengths[i] + ball.lengths[j]) as f64 - c0 - c1 * dist.ln().abs();
        tally.record(dc - rhs, dc * SLACK + 1e-9 >= rhs, || format!("({}, {})", spec.display(g), spec.display(h)));
    }
    Ok(WordSumReport { nu, c0, c1, tally, inconclusive: None })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NorthSouthReport {
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub delta: f64,
    pub ell: u32,
    pub eligible: usize,
    pub skipped: usize,
    pub tally: Tally,
    /// Margins `ε′ − d(ρ(η)ξ, Ξ(η))`: min, median, max.
    pub margins: Option<[f64; 3]>,
    pub inconclusive: Option<String>,
}

pub fn check_north_south(
    rep: &Representation,
    ball: &BallData,
    sample: &LimitSample,
    lower: &LowerFit,
    delta: f64,
    eps: f64,
    eps_prime: f64,
    budget: usize,
    rng: &mut ChaCha8Rng,
) -> Result<NorthSouthReport> {
    let spec = &rep.spec;
    let ell = threshold_length(lower.k(), lower.mu, eps_prime * delta.sin())?;
    let etas: Vec<usize> = (0..ball.len()).filter(|&i| ball.lengths[i] > ell).collect();
    let mut rep_out = NorthSouthReport {
        epsilon: eps,
        epsilon_prime: eps_prime,
        delta,
        ell,
        eligible: 0,
        skipped: 0,
        tally: Tally::default(),
        margins: None,
        inconclusive: None,
    };
    if etas.is_empty() || sample.points.is_empty() {
        rep_out.inconclusive = Some(format!("need elements with |η|_c > {ell}; ball radius is {}", ball.max_length()));
        return Ok(rep_out);
    }
    let mut margins = Vec::new();
    for _ in 0..budget {
        let i = etas[rng.gen_range(0..etas.len())];
        let xi = unit(&sample.points[rng.gen_range(0..sample.points.len())].0);
        let eta = &ball.elements[i];
        let inv = rep.data(&spec.inv(eta));
        if line_distance(&xi, &unit(&inv.xi)) <= eps {
            rep_out.skipped += 1;
            continue;
        }
        rep_out.eligible += 1;
        let image = rep.scaled(eta).m * &xi;
        let d = line_distance(&image, &unit(&ball.data[i].xi));
        margins.push(eps_prime - d);
        rep_out.tally.record(eps_prime - d, d <= eps_prime, || spec.display(eta));
    }
    if !margins.is_empty() {
        margins.sort_by(f64::total_cmp);
        rep_out.margins = Some([margins[0], margins[margins.len() / 2], margins[margins.len() - 1]]);
    }
    Ok(rep_out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DominationConstants {
    pub c_lower: f64,
    pub mu_lower: f64,
    pub c_upper: f64,
    pub mu_upper: f64,
}

/// `C₂ = C̄C̲⁻¹e^{6μ̄ῡ + μ̲υ̲}`, `C₃ = 2^{1+υ̲}C̄e^{μ̄}/C′`,
/// `C = max(C₂, C₃)`, `μ = (μ₀/2)·min(1, log 2/(υ̲μ₂))` with `μ₂ = μ̄ῡ`, `μ₀ = μ̲υ̲`.
pub fn derived_ec_constants(dom: &DominationConstants, lower_q: f64, upper_q: f64, c_prime: f64) -> Result<(f64, f64)> {
    if !(c_prime > 0.0) {
        return Err(Error::Domain(format!("quadratic-gap constant must be positive, got {c_prime}")));
    }
    for (name, v) in [("C_lower", dom.c_lower), ("mu_lower", dom.mu_lower), ("C_upper", dom.c_upper), ("mu_upper", dom.mu_upper), ("lower_q", lower_q), ("upper_q", upper_q)] {
        if !(v > 0.0) {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    let c2 = dom.c_upper / dom.c_lower * (6.0 * dom.mu_upper * upper_q + dom.mu_lower * lower_q).exp();
    let c3 = 2f64.powf(1.0 + lower_q) * dom.c_upper * dom.mu_upper.exp() / c_prime;
    let mu2 = dom.mu_upper * upper_q;
    let mu0 = dom.mu_lower * lower_q;
    Ok((c2.max(c3), mu0 / 2.0 * (std::f64::consts::LN_2 / (lower_q * mu2)).min(1.0)))
}

/// `A_k = ρ(α(k+1)⁻¹α(k))` for a path with `α(0) = id` at position `origin`,
/// so `A(k,n) = ρ(α(k+n)⁻¹α(k))`.
pub fn word_to_matrix_sequence(rep: &Representation, points: &[Element], origin: usize) -> Result<MatrixSequence> {
    if origin >= points.len() || !points[origin].is_identity() {
        return Err(Error::Input("path is not based at the identity".into()));
    }
    if points.len() < 2 {
        return Err(Error::Input("path needs at least one step".into()));
    }
    let spec = &rep.spec;
    let mats = points.windows(2).map(|w| rep.evaluate_element(&spec.mul(&spec.inv(&w[1]), &w[0]))).collect();
    MatrixSequence::new(-(origin as i64), mats)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineRecord {
    pub window: (i64, i64),
    pub constants: Option<AxiomConstants>,
    pub axioms_passed: bool,
    pub n_used: usize,
    pub gap: f64,
    pub s_min: f64,
    pub error_radius: f64,
    pub holds: bool,
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineReport {
    pub derived_constants: Option<(f64, f64)>,
    /// `s_min` at the derived `(C, μ)` with `μ′ = 0`.
    pub derived_s_min: Option<f64>,
    pub records: Vec<PipelineRecord>,
    pub certified: usize,
    pub violations: usize,
}

/// Geodesics through the identity (sampled paths recentred at their middle
/// point) turned into matrix sequences and certified at `k = 0`.
pub fn run_pipeline(rep: &Representation, paths: &[(RelativePath, RelativePath)], derived: Option<(f64, f64)>) -> PipelineReport {
    let spec = &rep.spec;
    let records: Vec<PipelineRecord> = paths
        .par_iter()
        .map(|(_, r)| {
            let mid = r.end() / 2;
            let base = spec.inv(&r.points[mid]);
            let pts: Vec<Element> = r.points.iter().map(|p| spec.mul(&base, p)).collect();
            let mut rec = PipelineRecord {
                window: (-(mid as i64), (r.end() - mid) as i64 - 1),
                constants: None,
                axioms_passed: false,
                n_used: 0,
                gap: f64::NAN,
                s_min: f64::NAN,
                error_radius: f64::NAN,
                holds: true,
                skipped: None,
            };
            let outcome = (|| -> Result<()> {
                let seq = word_to_matrix_sequence(rep, &pts, mid)?;
                let a = Analysis::new(&seq)?;
                let c = splitting::fit_constants(&a)?;
                rec.constants = Some(c);
                rec.axioms_passed = splitting::check_axioms(&a, &c).passed();
                let n = a.available_depth(0);
                if n == 0 {
                    return Err(Error::WindowTooShort { needed: 1, available: 0 });
                }
                let (eu, es) = splitting::approx_spaces(&a, 0, n)?;
                rec.n_used = n;
                rec.gap = minimal_gap(&eu, &es)?;
                rec.s_min = splitting::s_min(&c)?;
                rec.error_radius = splitting::error_radius(&c, n);
                rec.holds = rec.axioms_passed && rec.gap >= rec.s_min - 2.0 * rec.error_radius;
                Ok(())
            })();
            if let Err(e) = outcome {
                rec.skipped = Some(e.to_string());
            }
            rec
        })
        .collect();
    let certified = records.iter().filter(|r| r.skipped.is_none()).count();
    let violations = records.iter().filter(|r| r.skipped.is_none() && !r.holds).count();
    let derived_s_min = derived.and_then(|(c, mu)| splitting::s_min(&AxiomConstants { c, mu, mu_prime: 0.0 }).ok());
    PipelineReport { derived_constants: derived, derived_s_min, records, certified, violations }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct VerifierConfig {
    pub radius: u32,
    pub depth: Option<u32>,
    pub seed: u64,
    pub sample_budget: usize,
    pub path_budget: usize,
    pub peripheral_n_max: u64,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    /// Tolerance for subspace comparisons.
    pub tol: f64,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        VerifierConfig {
            radius: 8,
            depth: None,
            seed: 0,
            sample_budget: 2000,
            path_budget: 200,
            peripheral_n_max: 256,
            epsilon: 0.3,
            epsilon_prime: 0.5,
            tol: SUBSPACE_TOL,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Violation,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct Fits {
    pub lower: LowerFit,
    pub upper: UpperFit,
}

#[derive(Clone, Debug, Serialize)]
pub struct DominationReport {
    pub status: Status,
    pub config: VerifierConfig,
    pub depth: u32,
    pub ball_vertices: usize,
    pub group_elements: usize,
    pub fits: Fits,
    pub orbit_qi: OrbitQiReport,
    pub duality: Tally,
    pub discreteness: DiscretenessReport,
    pub proximality: ProximalityTally,
    pub peripheral: Option<PeripheralReport>,
    pub limit_sample_size: usize,
    pub limit_sample: Option<LimitSample>,
    pub wordsum: Option<WordSumReport>,
    pub north_south: Option<NorthSouthReport>,
    pub pipeline: PipelineReport,
    /// One line per failed check, tagged with the check identifier.
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

/// Runs every check on the ball of radius `cfg.radius` around the identity.
pub fn check_dominated(rep: &Representation, cfg: &VerifierConfig) -> Result<DominationReport> {
    let spec = &rep.spec;
    let space = CuspedSpace::for_radius(spec, cfg.radius, cfg.depth);
    let graph = space.ball(Vertex::identity(), cfg.radius);
    if !(cfg.tol > 0.0) {
        return Err(Error::Input(format!("tolerance must be positive, got {}", cfg.tol)));
    }
    let mut warnings = Vec::new();
    if !graph.certifies_group_distances() {
        warnings.push(format!("depth {} below radius/2; cusped lengths are upper bounds", space.depth));
    }
    let ball = BallData::new(rep, &graph);
    if ball.len() < 20 {
        warnings.push(format!("only {} group elements: statistically meaningless", ball.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lower = check_lower_domination(spec, &ball);
    let upper = check_upper_domination(rep, &ball, &lower);
    let orbit_qi = check_orbit_qi(spec, &ball, &lower, &upper);
    let duality = check_duality(spec, &ball, cfg.tol);
    let discreteness = check_discreteness(&ball);
    let proximality = check_proximality(rep, &ball, cfg.sample_budget.min(500), &mut rng);
    let paths = sample_paths(&space, &graph, cfg.path_budget, 2, &mut rng)?;
    let peripheral = if spec.peripherals.is_empty() { None } else { Some(check_peripheral_conditions(rep, &ball, &paths, cfg.peripheral_n_max, cfg.tol)?) };
    let delta = match &peripheral {
        Some(p) => p.transversality,
        None => transversality(rep, &paths, &[]).0,
    };
    let mut violations = Vec::new();
    let mut inconclusive = false;
    let (mut limit_sample, mut wordsum, mut north_south) = (None, None, None);
    if lower.passed {
        let ls = sample_limit_set(rep, &ball, &lower, cfg.tol)?;
        let ws = check_wordsum(rep, &graph, &ball, &lower, &upper, cfg.sample_budget, &mut rng)?;
        inconclusive |= ws.inconclusive.is_some();
        match delta {
            Some(d) if d > 0.0 => {
                let ns = check_north_south(rep, &ball, &ls, &lower, d.min(1.0).asin(), cfg.epsilon, cfg.epsilon_prime, cfg.sample_budget, &mut rng)?;
                inconclusive |= ns.inconclusive.is_some();
                north_south = Some(ns);
            }
            _ => {
                inconclusive = true;
                warnings.push("no transversality estimate; north-south check skipped".into());
            }
        }
        limit_sample = Some(ls);
        wordsum = Some(ws);
    }
    let dom = DominationConstants { c_lower: lower.c, mu_lower: lower.mu, c_upper: upper.c, mu_upper: upper.mu };
    let c_prime = peripheral
        .as_ref()
        .map(|p| p.records.iter().filter_map(|r| r.quadratic_gap_c).fold(f64::INFINITY, f64::min))
        .filter(|c| c.is_finite())
        .unwrap_or(1.0);
    let derived = derived_ec_constants(&dom, 6.0, 20.0, c_prime).ok();
    let pipeline = run_pipeline(rep, &paths, derived);

    let mut flag = |ok: bool, id: &str, detail: String| {
        if !ok {
            violations.push(format!("{id}: {detail}"));
        }
    };
    flag(lower.passed, "lower-domination", format!("no positive rate; witnesses {:?}", lower.witnesses));
    flag(orbit_qi.upper.passed() && orbit_qi.lower.passed(), "orbit-qi", format!("{} + {} violations", orbit_qi.upper.violations, orbit_qi.lower.violations));
    flag(duality.passed(), "dual-gap", format!("{} mismatches", duality.violations));
    flag(discreteness.passed, "discreteness", format!("shell-minimum slope {}", discreteness.slope));
    flag(proximality.witnesses.is_empty(), "proximality", format!("non-proximal {:?}", proximality.witnesses));
    if let Some(p) = &peripheral {
        flag(p.passed, "peripheral", "unique limits, quadratic gaps or transversality failed".into());
    }
    if let Some(ls) = &limit_sample {
        flag(ls.invariance.passed(), "limit-invariance", format!("{} violations", ls.invariance.violations));
    }
    if let Some(ws) = &wordsum {
        flag(ws.tally.passed(), "wordsum", format!("{} violations", ws.tally.violations));
    }
    if let Some(ns) = &north_south {
        flag(ns.tally.passed(), "north-south", format!("{} violations", ns.tally.violations));
    }
    flag(pipeline.violations == 0, "pipeline", format!("{} certificates below s_min", pipeline.violations));
    let status = if !violations.is_empty() {
        Status::Violation
    } else if inconclusive {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    Ok(DominationReport {
        status,
        config: cfg.clone(),
        depth: space.depth,
        ball_vertices: graph.len(),
        group_elements: ball.len(),
        limit_sample_size: limit_sample.as_ref().map_or(0, |l| l.points.len()),
        fits: Fits { lower, upper },
        orbit_qi,
        duality,
        discreteness,
        proximality,
        peripheral,
        limit_sample,
        wordsum,
        north_south,
        pipeline,
        violations,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus() -> (GroupSpec, Representation) {
        let spec = GroupSpec::from_toml(
            r#"
            generators = ["a", "A", "b", "B", "c", "C"]
            inverses = ["A", "a", "B", "b", "C", "c"]
            peripherals = [["c", "C"]]
            [definitions]
            c = "a b A B"
            "#,
        )
        .unwrap();
        let rep = Representation::from_toml(&spec, "dimension = 2\n[images]\na = [[1.0, 1.0], [1.0, 2.0]]\nb = [[1.0, -1.0], [-1.0, 2.0]]\n").unwrap();
        (spec, rep)
    }

    #[test]
    fn evaluation() {
        let (spec, rep) = torus();
        assert_eq!(rep.evaluate(&[]).unwrap(), Mat::identity(2, 2));
        let ab = rep.evaluate_names("a b").unwrap();
        assert!((ab - rep.evaluate_names("a").unwrap() * rep.evaluate_names("b").unwrap()).norm() < 1e-12);
        let w = rep.evaluate_names("a b A a B").unwrap() * rep.evaluate_names("b A a B A").unwrap();
        assert!((w - Mat::identity(2, 2)).norm() < 1e-9);
        let c = &rep.images[spec.generator("c").unwrap()];
        assert!((c.trace() + 2.0).abs() < 1e-12);
        assert!(Representation::from_toml(&spec, "dimension = 2\n[images]\nz = [[1.0, 0.0], [0.0, 1.0]]\n").is_err());
    }

    #[test]
    fn element_data_matches_direct_svd() {
        let (spec, rep) = torus();
        let x = spec.word(&spec.parse_word("a b b A c c").unwrap());
        let d = rep.data(&x);
        let m = rep.evaluate(&spec.parse_word("a b b A a b A B a b A B").unwrap()).unwrap();
        let s = crate::linalg::singular_values(&m);
        assert!((d.log_sv[0] - s[0].ln()).abs() < 1e-9);
        assert!((d.log_gap() - (s[0] / s[1]).ln()).abs() < 1e-9);
        assert!((d.dual_log_gap - d.inverse_log_gap()).abs() < 1e-9);
    }

    #[test]
    fn support_lines() {
        let pts = vec![(1, 1.0), (2, 1.5), (3, 2.5), (4, 3.5), (4, 9.0)];
        let (c, mu) = fit_lower(&pts);
        assert!((mu - 1.0).abs() < 1e-12);
        assert!(pts.iter().all(|&(x, y)| y >= c.ln() + mu * x as f64 - 1e-12));
        let (cu, muu) = fit_upper(&pts, 0.5);
        assert!(pts.iter().all(|&(x, y)| y <= cu.ln() + muu * x as f64 + 1e-12));
        assert_eq!(threshold_length(1.0, 1.0, 1.0).unwrap(), 1);
        assert_eq!(threshold_length(2.0, 1.0, 1.0).unwrap(), 1);
    }

    #[test]
    fn ec_constants() {
        let dom = DominationConstants { c_lower: 1.0, mu_lower: 1.0, c_upper: 1.0, mu_upper: 1.0 };
        let (c, mu) = derived_ec_constants(&dom, 1.0, 1.0, 1.0).unwrap();
        assert!((c - 7f64.exp()).abs() < 1e-9);
        assert!((mu - std::f64::consts::LN_2 / 2.0).abs() < 1e-15);
        assert!(derived_ec_constants(&dom, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn path_sequences() {
        let (spec, rep) = torus();
        let a = spec.values[0].clone();
        let ab = spec.word(&[0, 2]);
        let seq = word_to_matrix_sequence(&rep, &[Element::identity(), a.clone(), ab.clone()], 0).unwrap();
        let prod = seq.partial_product(0, 2).unwrap();
        let expected = rep.evaluate_element(&spec.inv(&ab));
        assert!((prod - expected).norm() < 1e-12);
        assert!(word_to_matrix_sequence(&rep, &[a.clone(), ab], 0).is_err());
        let flat = word_to_matrix_sequence(&rep, &[Element::identity(), Element::identity()], 0).unwrap();
        assert_eq!(flat.get(0).unwrap(), &Mat::identity(2, 2));
    }

    #[test]
    fn conjugacy_into_peripheral() {
        let (spec, _) = torus();
        let w = |s: &str| spec.word(&spec.parse_word(s).unwrap());
        assert!(is_conjugate_peripheral(&spec, &w("b a b A B B")).unwrap());
        assert!(is_conjugate_peripheral(&spec, &w("B A b a")).unwrap());
        assert!(!is_conjugate_peripheral(&spec, &w("a b")).unwrap());
    }
}
