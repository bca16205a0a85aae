//! Shipped example fixtures and the checks attached to them.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cusped::{horoball_distance, CuspedSpace, Vertex};
use crate::error::{Error, Result};
use crate::group::{pow, Element, GroupSpec};
use crate::linalg::{singular_values, Mat};
use crate::verifier::{check_dominated, check_lower_domination, BallData, DominationReport, LowerFit, Representation, Status, VerifierConfig};

pub const TORUS_GROUP: &str = include_str!("../fixtures/punctured_torus.group.toml");
pub const TORUS_REP: &str = include_str!("../fixtures/punctured_torus.rep.toml");
pub const TORUS_SYM2_REP: &str = include_str!("../fixtures/punctured_torus_sym2.rep.toml");
pub const SCHOTTKY_GROUP: &str = include_str!("../fixtures/schottky.group.toml");
pub const SCHOTTKY_REP: &str = include_str!("../fixtures/schottky.rep.toml");

/// Names accepted by [`run_example`].
pub const EXAMPLES: [&str; 5] = ["punctured_torus", "punctured_torus_sym2", "schottky", "parabolic", "zd_horoball"];

#[derive(Clone, Debug, Serialize)]
pub struct Expectation {
    pub check: &'static str,
    pub radius: u32,
}

#[derive(Clone, Debug)]
pub struct ExampleFixture {
    pub name: &'static str,
    pub group: GroupSpec,
    pub rep: Representation,
    pub expected: Vec<Expectation>,
}

fn commutator_trace(rep: &Representation) -> Result<f64> {
    let c = rep.evaluate_names("a b A B")?;
    Ok(c.trace())
}

/// `F₂ = ⟨a, b⟩` relative to `⟨[a,b]⟩` with the standard parabolic-commutator pair.
pub fn punctured_torus_fixture() -> Result<ExampleFixture> {
    let group = GroupSpec::from_toml(TORUS_GROUP)?;
    let rep = Representation::from_toml(&group, TORUS_REP)?;
    let t = commutator_trace(&rep)?;
    if (t + 2.0).abs() > 1e-12 {
        return Err(Error::Invalid(format!("commutator trace {t} is not -2")));
    }
    let expected = ["lower-domination", "peripheral", "wordsum", "north-south", "quadratic-gap"]
        .into_iter()
        .map(|check| Expectation { check, radius: 8 })
        .collect();
    Ok(ExampleFixture { name: "punctured_torus", group, rep, expected })
}

/// The symmetric-square lift of the punctured torus holonomy to `GL(3, ℝ)`.
pub fn punctured_torus_sym2_fixture() -> Result<ExampleFixture> {
    let base = punctured_torus_fixture()?;
    let rep = Representation::from_toml(&base.group, TORUS_SYM2_REP)?;
    for (name, img) in [("a", &base.rep.images[0]), ("b", &base.rep.images[2])] {
        let lifted = crate::linalg::symmetric_square(img)?;
        let g = base.group.generator(name).expect("generator");
        if (&lifted - &rep.images[g]).norm() > 1e-12 * lifted.norm() {
            return Err(Error::Invalid(format!("image of `{name}` is not the symmetric square")));
        }
    }
    let c = rep.evaluate_names("a b A B")?;
    if (c.trace() - 3.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!("lifted commutator trace {} is not 3", c.trace())));
    }
    let expected = ["lower-domination", "peripheral", "quadratic-gap"].into_iter().map(|check| Expectation { check, radius: 8 }).collect();
    Ok(ExampleFixture { name: "punctured_torus_sym2", group: base.group, rep, expected })
}

/// Schottky pair `diag(4, 1/4)` and its conjugate by a quarter-turn rotation, `𝒫 = ∅`.
pub fn schottky_fixture() -> Result<ExampleFixture> {
    let group = GroupSpec::from_toml(SCHOTTKY_GROUP)?;
    let rep = Representation::from_toml(&group, SCHOTTKY_REP)?;
    let expected = ["lower-domination", "wordsum", "metric-degeneration"].into_iter().map(|check| Expectation { check, radius: 8 }).collect();
    Ok(ExampleFixture { name: "schottky", group, rep, expected })
}

pub fn fixture(name: &str) -> Result<ExampleFixture> {
    match name {
        "punctured_torus" => punctured_torus_fixture(),
        "punctured_torus_sym2" => punctured_torus_sym2_fixture(),
        "schottky" => schottky_fixture(),
        _ => Err(Error::Input(format!("no group fixture named `{name}`"))),
    }
}

/// `[[1, 1], [0, 1]]`.
pub fn standard_parabolic() -> Mat {
    Mat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0])
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadraticGapReport {
    pub n_max: u64,
    /// `|log(σ₁/σ₂)(ηⁿ) − 2 log n|` at `n = 1, 2, 4, …` and `n_max`.
    pub samples: Vec<(u64, f64)>,
    /// Supremum over `n ≤ n_max / 10`.
    pub sup_head: f64,
    pub sup: f64,
    pub bounded: bool,
}

/// `±η` unipotent: `(η ∓ I)^d` vanishes to relative tolerance.
pub fn is_parabolic(eta: &Mat) -> bool {
    let d = eta.nrows();
    if !eta.is_square() || d == 0 {
        return false;
    }
    let scale = eta.norm().max(1.0).powi(d as i32);
    [1.0, -1.0].into_iter().any(|s| {
        let n = eta - Mat::identity(d, d) * s;
        let mut p = Mat::identity(d, d);
        for _ in 0..d {
            p *= &n;
        }
        p.norm() <= 1e-9 * scale && (d != 2 || (eta.determinant() - 1.0).abs() < 1e-9)
    })
}

/// Boundedness means the supremum over `n ≤ n_max` exceeds the supremum over
/// `n ≤ n_max/10` by at most `0.1`.
pub fn parabolic_quadratic_gap(eta: &Mat, n_max: u64) -> Result<QuadraticGapReport> {
    if !is_parabolic(eta) {
        return Err(Error::Domain("matrix is not parabolic".into()));
    }
    if n_max < 10 {
        return Err(Error::Domain("n_max must be at least 10".into()));
    }
    let d = eta.nrows();
    let head = n_max / 10;
    let mut p = Mat::identity(d, d);
    let (mut sup_head, mut sup) = (0.0f64, 0.0f64);
    let mut samples = Vec::new();
    let mut next = 1;
    for n in 1..=n_max {
        p *= eta;
        let s = singular_values(&p);
        let dev = ((s[0] / s[1]).ln() - 2.0 * (n as f64).ln()).abs();
        sup = sup.max(dev);
        if n <= head {
            sup_head = sup_head.max(dev);
        }
        if n == next || n == n_max {
            samples.push((n, dev));
            next *= 2;
        }
    }
    Ok(QuadraticGapReport { n_max, samples, sup_head, sup, bounded: sup <= sup_head + 0.1 })
}

/// Group elements of the word-metric ball, by breadth-first search in the
/// Cayley graph of the generating set.
pub fn word_ball(spec: &GroupSpec, radius: u32) -> Vec<(Element, u32)> {
    let mut seen: HashMap<Element, u32> = HashMap::from([(Element::identity(), 0)]);
    let mut order = vec![(Element::identity(), 0)];
    let mut q = VecDeque::from([Element::identity()]);
    while let Some(x) = q.pop_front() {
        let dx = seen[&x];
        if dx == radius {
            continue;
        }
        for s in &spec.values {
            let y = spec.mul(&x, s);
            if !seen.contains_key(&y) {
                seen.insert(y.clone(), dx + 1);
                order.push((y.clone(), dx + 1));
                q.push_back(y);
            }
        }
    }
    order
}

#[derive(Clone, Debug, Serialize)]
pub struct DegenerationReport {
    pub radius: u32,
    pub ball_elements: usize,
    pub metric_mismatches: usize,
    pub random_words: usize,
    pub random_word_mismatches: usize,
    pub cusped_fit: LowerFit,
    pub plain_fit: LowerFit,
    /// Both fits agree bit for bit.
    pub fits_identical: bool,
    pub passed: bool,
}

/// With `𝒫 = ∅` the cusped ball is the Cayley ball, and the lower fit run on
/// plain word lengths reproduces the cusped one exactly.
pub fn empty_peripheral_degeneration(fx: &ExampleFixture, radius: u32, rng: &mut ChaCha8Rng) -> Result<DegenerationReport> {
    let spec = &fx.group;
    if !spec.peripherals.is_empty() {
        return Err(Error::Input("fixture has peripheral subgroups".into()));
    }
    let space = CuspedSpace::for_radius(spec, radius, None);
    let graph = space.ball(Vertex::identity(), radius);
    let plain = word_ball(spec, radius);
    let mut mismatches = plain.iter().filter(|(x, l)| graph.length(x).ok() != Some(*l)).count();
    mismatches += graph.group_elements().count().abs_diff(plain.len());
    let mut random_mismatches = 0;
    let random_words = 100;
    for _ in 0..random_words {
        let len = rng.gen_range(1..=radius.max(1));
        let letters: Vec<usize> = (0..len).map(|_| rng.gen_range(0..spec.num_generators())).collect();
        let x = spec.word(&letters);
        let wl = spec.base_word(&x).len() as u32;
        if graph.length(&x).ok() != Some(wl) {
            random_mismatches += 1;
        }
    }
    let cusped = BallData::new(&fx.rep, &graph);
    let (elements, lengths): (Vec<Element>, Vec<u32>) = plain.into_iter().unzip();
    let plain_data = BallData::from_lengths(&fx.rep, elements, lengths);
    let cusped_fit = check_lower_domination(spec, &cusped);
    let plain_fit = check_lower_domination(spec, &plain_data);
    let fits_identical = cusped_fit.c.to_bits() == plain_fit.c.to_bits() && cusped_fit.mu.to_bits() == plain_fit.mu.to_bits();
    Ok(DegenerationReport {
        radius,
        ball_elements: cusped.len(),
        metric_mismatches: mismatches,
        random_words,
        random_word_mismatches: random_mismatches,
        passed: mismatches == 0 && random_mismatches == 0 && fits_identical,
        cusped_fit,
        plain_fit,
        fits_identical,
    })
}

/// Vertex `(v, n)` of the combinatorial horoball over `ℤᵈ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ZdVertex {
    pub v: Vec<i64>,
    pub n: u32,
}

pub fn zd_distance(x: &ZdVertex, y: &ZdVertex) -> u64 {
    let l1: u64 = x.v.iter().zip(&y.v).map(|(a, b)| a.abs_diff(*b)).sum();
    horoball_distance(x.n, y.n, l1)
}

/// Hyperbolic distance in the upper half-space between `(x₁, t₁)` and `(x₂, t₂)`.
pub fn upper_half_space_distance(x1: &[f64], t1: f64, x2: &[f64], t2: f64) -> f64 {
    let dx2: f64 = x1.iter().zip(x2).map(|(a, b)| (a - b).powi(2)).sum();
    (1.0 + (dx2 + (t1 - t2).powi(2)) / (2.0 * t1 * t2)).acosh()
}

/// `(v, n) ↦ (v, bⁿ)`.
pub fn zd_image(x: &ZdVertex, height_base: f64) -> (Vec<f64>, f64) {
    (x.v.iter().map(|&c| c as f64).collect(), height_base.powi(x.n as i32))
}

/// Random vertex within horoball distance `radius` of `(0, 0)`.
pub fn sample_zd_vertex(d: usize, radius: u32, rng: &mut ChaCha8Rng) -> ZdVertex {
    let origin = ZdVertex { v: vec![0; d], n: 0 };
    loop {
        let n = rng.gen_range(0..=radius);
        let u: f64 = rng.gen_range(0.0..=(radius as f64 / 2.0 + 1.0));
        let l1 = (2f64.powf(u) - 1.0).floor() as i64;
        let mut v = vec![0i64; d];
        for _ in 0..l1 {
            v[rng.gen_range(0..d)] += 1;
        }
        for c in v.iter_mut() {
            if rng.gen_bool(0.5) {
                *c = -*c;
            }
        }
        let x = ZdVertex { v, n };
        if zd_distance(&origin, &x) <= radius as u64 {
            return x;
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ZdQiReport {
    pub d: usize,
    pub radius: u32,
    pub height_base: f64,
    pub pairs: usize,
    /// Least-squares slope and intercept of `d_hyp` against `d_graph`.
    pub slope: f64,
    pub intercept: f64,
    /// `d_graph/λ − ε ≤ d_hyp ≤ λ·d_graph + ε` on every sampled pair.
    pub lambda: f64,
    pub epsilon: f64,
    #[serde(skip)]
    pub vertices: Vec<ZdVertex>,
}

/// Fits `(λ, ε)` with `λ = max(a, 1/a)` for the regression slope `a` and `ε`
/// the least additive constant making every sampled pair comply.
pub fn zd_horoball_qi(d: usize, sample_budget: usize, radius: u32, rng: &mut ChaCha8Rng) -> Result<ZdQiReport> {
    zd_horoball_qi_with_base(d, sample_budget, radius, 2.0, rng)
}

pub fn zd_horoball_qi_with_base(d: usize, sample_budget: usize, radius: u32, height_base: f64, rng: &mut ChaCha8Rng) -> Result<ZdQiReport> {
    if d == 0 {
        return Err(Error::Domain("d must be at least 1".into()));
    }
    if sample_budget == 0 {
        return Err(Error::Domain("sample budget is zero".into()));
    }
    let vertices: Vec<ZdVertex> = (0..2 * sample_budget).map(|_| sample_zd_vertex(d, radius, rng)).collect();
    let mut pts = Vec::with_capacity(sample_budget);
    for pair in vertices.chunks(2) {
        let (x, y) = (&pair[0], &pair[1]);
        let g = zd_distance(x, y) as f64;
        if g == 0.0 {
            continue;
        }
        let (px, tx) = zd_image(x, height_base);
        let (py, ty) = zd_image(y, height_base);
        pts.push((g, upper_half_space_distance(&px, tx, &py, ty)));
    }
    if pts.len() < 2 {
        return Err(Error::Domain("too few distinct pairs".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let lambda = slope.max(1.0 / slope);
    let epsilon = pts.iter().map(|&(g, h)| (g / lambda - h).max(h - lambda * g)).fold(0.0f64, f64::max);
    Ok(ZdQiReport { d, radius, height_base, pairs: pts.len(), slope, intercept: my - slope * mx, lambda, epsilon, vertices })
}

/// Pairwise samples of a candidate map `φ: X → Y`.
#[derive(Clone, Debug)]
pub struct MapSamples {
    /// `d_X(xᵢ, xⱼ)`.
    pub source: Vec<Vec<f64>>,
    /// `d_Y(φxᵢ, φxⱼ)`.
    pub image: Vec<Vec<f64>>,
    /// For sampled `y ∈ Y`, `d_Y(y, φ(X))`.
    pub cover: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CannonCooperReport {
    pub epsilon: f64,
    pub lipschitz: f64,
    pub max_cover: f64,
    pub quasi_onto: bool,
    /// `max d_Y/d_X` over distinct pairs.
    pub worst_ratio: f64,
    pub lipschitz_holds: bool,
    pub collapsing_pairs: usize,
    /// `(d_X, d_Y, R)` of the first collapsing pairs.
    pub collapse_witnesses: Vec<(f64, f64, f64)>,
    pub non_collapsing: bool,
    pub passed: bool,
}

/// The three sample-level conditions: `Y ⊂ N(φX, ε)`, `d_Y ≤ L·d_X`, and
/// `d_X > r(R) ⇒ d_Y > R` for integer `R` up to the largest image distance.
pub fn cannon_cooper_qi_check(s: &MapSamples, eps: f64, l: f64, r_of_r: &dyn Fn(f64) -> f64) -> Result<CannonCooperReport> {
    let n = s.source.len();
    if n == 0 || s.cover.is_empty() {
        return Err(Error::Input("empty samples".into()));
    }
    if s.image.len() != n || s.source.iter().chain(&s.image).any(|r| r.len() != n) {
        return Err(Error::Input("sample matrices must be square and of equal size".into()));
    }
    let max_cover = s.cover.iter().copied().fold(0.0f64, f64::max);
    let mut worst_ratio = 0.0f64;
    let top = s.image.iter().flatten().copied().fold(0.0f64, f64::max).ceil() as u32;
    let thresholds: Vec<(f64, f64)> = (1..=top.max(1)).map(|r| (r as f64, r_of_r(r as f64))).collect();
    let mut collapsing = 0;
    let mut witnesses = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (dx, dy) = (s.source[i][j], s.image[i][j]);
            if dx > 0.0 {
                worst_ratio = worst_ratio.max(dy / dx);
            }
            if let Some(&(r, _)) = thresholds.iter().rev().find(|&&(r, rr)| dx > rr && dy <= r) {
                collapsing += 1;
                if witnesses.len() < 8 {
                    witnesses.push((dx, dy, r));
                }
            }
        }
    }
    let quasi_onto = max_cover <= eps;
    let lipschitz_holds = worst_ratio <= l * crate::report::SLACK;
    let non_collapsing = collapsing == 0;
    Ok(CannonCooperReport {
        epsilon: eps,
        lipschitz: l,
        max_cover,
        quasi_onto,
        worst_ratio,
        lipschitz_holds,
        collapsing_pairs: collapsing,
        collapse_witnesses: witnesses,
        non_collapsing,
        passed: quasi_onto && lipschitz_holds && non_collapsing,
    })
}

/// Samples for the horoball map; `keep` is the number of image coordinates
/// kept (`d` for the standard map, fewer for a projection).
pub fn zd_map_samples(vertices: &[ZdVertex], keep: usize, height_base: f64, targets: usize, rng: &mut ChaCha8Rng) -> MapSamples {
    let image = |x: &ZdVertex| {
        let (p, t) = zd_image(x, height_base);
        (p[..keep].to_vec(), t)
    };
    let imgs: Vec<(Vec<f64>, f64)> = vertices.iter().map(image).collect();
    let n = vertices.len();
    let mut source = vec![vec![0.0; n]; n];
    let mut img = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            source[i][j] = zd_distance(&vertices[i], &vertices[j]) as f64;
            img[i][j] = upper_half_space_distance(&imgs[i].0, imgs[i].1, &imgs[j].0, imgs[j].1);
        }
    }
    // Targets lie in the horoball `t ≥ 1`; the nearest image of a lattice
    // vertex is found among the roundings of the point.
    let max_level = vertices.iter().map(|v| v.n).max().unwrap_or(0);
    let mut cover = Vec::with_capacity(targets);
    for _ in 0..targets {
        let base = &imgs[rng.gen_range(0..n)].0;
        let p: Vec<f64> = base.iter().map(|c| c + rng.gen_range(-0.5..0.5)).collect();
        let t = height_base.powf(rng.gen_range(0.0..=max_level as f64));
        let lvl = t.ln() / height_base.ln();
        let mut best = f64::INFINITY;
        for n in [lvl.floor(), lvl.ceil()] {
            let tv = height_base.powi(n as i32);
            let q: Vec<f64> = p.iter().map(|c| c.round()).collect();
            best = best.min(upper_half_space_distance(&p, t, &q, tv));
        }
        cover.push(best);
    }
    MapSamples { source, image: img, cover }
}

/// Runs the three conditions on the horoball map with constants taken from
/// the fit: `L = λ + ε`, `r(R) = λ(R + ε)` and cover radius `1`.
pub fn zd_cannon_cooper(qi: &ZdQiReport, keep: usize, points: usize, rng: &mut ChaCha8Rng) -> Result<CannonCooperReport> {
    let vs = &qi.vertices[..points.min(qi.vertices.len())];
    let s = zd_map_samples(vs, keep, qi.height_base, points, rng);
    let (lambda, eps) = (qi.lambda, qi.epsilon);
    cannon_cooper_qi_check(&s, 1.0, lambda + eps, &|r| lambda * (r + eps))
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub id: String,
    pub status: Status,
    pub detail: String,
}

impl CheckOutcome {
    fn new(id: &str, passed: bool, detail: String) -> Self {
        CheckOutcome { id: id.into(), status: if passed { Status::Pass } else { Status::Violation }, detail }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExampleReport {
    pub name: String,
    pub radius: u32,
    pub seed: u64,
    pub status: Status,
    pub checks: Vec<CheckOutcome>,
    pub domination: Option<DominationReport>,
    pub quadratic_gap: Option<QuadraticGapReport>,
    pub degeneration: Option<DegenerationReport>,
    pub qi: Vec<ZdQiReport>,
    pub cannon_cooper: Vec<CannonCooperReport>,
}

/// Radius used when none is given.
pub fn default_radius(name: &str) -> u32 {
    if name == "zd_horoball" {
        16
    } else {
        8
    }
}

fn domination_outcomes(r: &DominationReport, wanted: &[Expectation]) -> Vec<CheckOutcome> {
    let mut out = vec![CheckOutcome::new(
        "verifier",
        r.status != Status::Violation,
        if r.violations.is_empty() { format!("{:?}", r.status) } else { r.violations.join("; ") },
    )];
    if r.status == Status::Inconclusive {
        out[0].status = Status::Inconclusive;
    }
    for e in wanted {
        let passed = match e.check {
            "lower-domination" => r.fits.lower.passed,
            "peripheral" => r.peripheral.as_ref().is_some_and(|p| p.passed),
            "wordsum" => r.wordsum.as_ref().is_some_and(|w| w.tally.passed() && w.inconclusive.is_none()),
            "north-south" => r.north_south.as_ref().is_some_and(|n| n.tally.passed() && n.inconclusive.is_none()),
            _ => continue,
        };
        out.push(CheckOutcome::new(e.check, passed, String::new()));
    }
    out
}

pub fn run_example(name: &str, radius: Option<u32>, seed: u64) -> Result<ExampleReport> {
    let radius = radius.unwrap_or_else(|| default_radius(name));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ExampleReport {
        name: name.into(),
        radius,
        seed,
        status: Status::Pass,
        checks: Vec::new(),
        domination: None,
        quadratic_gap: None,
        degeneration: None,
        qi: Vec::new(),
        cannon_cooper: Vec::new(),
    };
    match name {
        "punctured_torus" | "punctured_torus_sym2" | "schottky" => {
            let fx = fixture(name)?;
            let cfg = VerifierConfig { radius, seed, ..Default::default() };
            let dom = check_dominated(&fx.rep, &cfg)?;
            report.checks.extend(domination_outcomes(&dom, &fx.expected));
            if name != "schottky" {
                let c = fx.rep.evaluate_names("a b A B")?;
                let q = parabolic_quadratic_gap(&c, 1000)?;
                report.checks.push(CheckOutcome::new("quadratic-gap", q.bounded, format!("sup {} vs head {}", q.sup, q.sup_head)));
                report.quadratic_gap = Some(q);
                let c = fx.group.values[fx.group.generator("c").expect("c")].clone();
                let lengths_ok = (1..=16).all(|n| fx.group.base_word(&pow(&fx.group.model, &c, n)).len() as u64 == 4 * n);
                report.checks.push(CheckOutcome::new("commutator-powers", lengths_ok, "|[a,b]^n| = 4n for n <= 16".into()));
            } else {
                let deg = empty_peripheral_degeneration(&fx, radius, &mut rng)?;
                report.checks.push(CheckOutcome::new("metric-degeneration", deg.passed, format!("{} metric mismatches", deg.metric_mismatches)));
                report.degeneration = Some(deg);
            }
            report.domination = Some(dom);
        }
        "parabolic" => {
            let q = parabolic_quadratic_gap(&standard_parabolic(), 1000)?;
            report.checks.push(CheckOutcome::new("quadratic-gap", q.bounded, format!("sup {}", q.sup)));
            report.quadratic_gap = Some(q);
        }
        "zd_horoball" => {
            for d in [1, 2] {
                let small = zd_horoball_qi(d, 4000, radius, &mut rng)?;
                let large = zd_horoball_qi(d, 4000, 2 * radius, &mut rng)?;
                let drift = (large.lambda / small.lambda - 1.0).abs();
                report.checks.push(CheckOutcome::new(&format!("qi-drift-d{d}"), drift <= 0.1, format!("lambda {} -> {}", small.lambda, large.lambda)));
                let cc = zd_cannon_cooper(&small, d, 300, &mut rng)?;
                report.checks.push(CheckOutcome::new(&format!("cannon-cooper-d{d}"), cc.passed, String::new()));
                report.cannon_cooper.push(cc);
                report.qi.push(small);
                report.qi.push(large);
            }
            let collapse = zd_cannon_cooper(&report.qi[2], 1, 300, &mut rng)?;
            report.checks.push(CheckOutcome::new("collapsing-map-rejected", !collapse.non_collapsing, format!("{} collapsing pairs", collapse.collapsing_pairs)));
            report.cannon_cooper.push(collapse);
        }
        _ => return Err(Error::Input(format!("unknown example `{name}`; known: {}", EXAMPLES.join(", ")))),
    }
    report.status = if report.checks.iter().any(|c| c.status == Status::Violation) {
        Status::Violation
    } else if report.checks.iter().any(|c| c.status == Status::Inconclusive) {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cusped::HoroballFragment;

    #[test]
    fn fixtures_load() {
        let t = punctured_torus_fixture().unwrap();
        assert!((commutator_trace(&t.rep).unwrap() + 2.0).abs() < 1e-12);
        punctured_torus_sym2_fixture().unwrap();
        let s = schottky_fixture().unwrap();
        assert!(s.group.peripherals.is_empty());
        let rot = crate::linalg::rotation(std::f64::consts::FRAC_PI_4);
        let b = &rot * crate::linalg::diag(&[4.0, 0.25]) * rot.transpose();
        assert!((b - &s.rep.images[2]).norm() < 1e-12);
    }

    #[test]
    fn parabolic_gaps() {
        let q = parabolic_quadratic_gap(&standard_parabolic(), 1000).unwrap();
        assert!(q.bounded);
        assert!(q.sup < 1.0);
        assert!(q.samples.last().unwrap().1 < 1e-5);
        let g = Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let conj = &g * standard_parabolic() * g.clone().try_inverse().unwrap();
        let qc = parabolic_quadratic_gap(&conj, 1000).unwrap();
        let s = singular_values(&g);
        assert!(qc.bounded && qc.sup <= q.sup + 2.0 * (s[0] / s[1]).ln());
        assert!(parabolic_quadratic_gap(&crate::linalg::diag(&[2.0, 0.5]), 100).is_err());
    }

    #[test]
    fn horoball_distance_matches_bfs_over_z2() {
        let w = 9usize;
        let base: Vec<Vec<usize>> = (0..w * w)
            .map(|i| {
                let (x, y) = (i % w, i / w);
                let mut a = Vec::new();
                if x > 0 {
                    a.push(i - 1);
                }
                if x + 1 < w {
                    a.push(i + 1);
                }
                if y > 0 {
                    a.push(i - w);
                }
                if y + 1 < w {
                    a.push(i + w);
                }
                a
            })
            .collect();
        let h = HoroballFragment::new(&base, 6).unwrap();
        let src = (0, 1);
        let dist = h.bfs(src);
        for i in 0..h.num_vertices() {
            let (v, k) = h.vertex(i);
            let x = ZdVertex { v: vec![(v % w) as i64, (v / w) as i64], n: k };
            assert_eq!(dist[i] as u64, zd_distance(&ZdVertex { v: vec![0, 0], n: 1 }, &x), "{x:?}");
        }
    }

    #[test]
    fn horoball_image_distances() {
        let a = ZdVertex { v: vec![0], n: 0 };
        let b = ZdVertex { v: vec![8], n: 0 };
        assert_eq!(zd_distance(&a, &b), 6);
        let (pa, ta) = zd_image(&a, 2.0);
        let (pb, tb) = zd_image(&b, 2.0);
        assert!((upper_half_space_distance(&pa, ta, &pb, tb) - 2.0 * 4f64.asinh()).abs() < 1e-12);
        assert_eq!(upper_half_space_distance(&pa, ta, &pa, ta), 0.0);
    }

    #[test]
    fn natural_height_collapses() {
        // same level, base distance ≈ eⁿ: graph distance grows, image distance does not
        let mut last = 0;
        for n in [8u32, 16, 24, 32] {
            let w = std::f64::consts::E.powi(n as i32).round() as i64;
            let (a, b) = (ZdVertex { v: vec![0], n }, ZdVertex { v: vec![w], n });
            let g = zd_distance(&a, &b);
            let (pa, ta) = zd_image(&a, std::f64::consts::E);
            let (pb, tb) = zd_image(&b, std::f64::consts::E);
            assert!(upper_half_space_distance(&pa, ta, &pb, tb) <= 2.0 * 0.5f64.asinh() + 1e-3);
            assert!(g > last);
            last = g;
        }
        assert!(last >= 20);
    }

    #[test]
    fn cannon_cooper_identity_and_collapse() {
        let d = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]];
        let s = MapSamples { source: d.clone(), image: d, cover: vec![0.0] };
        assert!(cannon_cooper_qi_check(&s, 0.0, 1.0, &|r| r).unwrap().passed);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let qi = zd_horoball_qi(2, 500, 10, &mut rng).unwrap();
        assert!(!zd_cannon_cooper(&qi, 1, 200, &mut rng).unwrap().non_collapsing);
        assert!(cannon_cooper_qi_check(&MapSamples { source: vec![], image: vec![], cover: vec![] }, 1.0, 1.0, &|r| r).is_err());
    }

    #[test]
    fn word_ball_counts() {
        let spec = GroupSpec::free(&["a", "b"]);
        let ball = word_ball(&spec, 3);
        assert_eq!(ball.len(), 1 + 4 + 12 + 36);
    }
}
