//! Dominated splittings of matrix sequences on finite windows.
//!
//! Notation: `A(k,n) = A_{k+n−1}⋯A_k`, `Ũ(k,n) = U₁(A(k−n,n))`,
//! `V(k,n) = S_{d−1}(A(k,n))` and `U(k,n) = V(k,n)^⊥`. Products are kept
//! normalized with a separate log scale; `log σ₁/σ₂` comes from the
//! determinant in dimension 2 and from `⋀²` otherwise, so tiny ratios keep
//! their relative accuracy.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{exterior_power, grassmann_distance, line_distance, minimal_gap, svd_raw, top_singular_triple, Mat, Scaled, Subspace, Vector, GAP_TOL};
use crate::report::BoundReport;

/// Absolute floor for measured subspace distances; below it double precision
/// cannot resolve the distance.
pub const DISTANCE_FLOOR: f64 = 1e-12;

/// Relative slack used when comparing measurements to fitted bounds.
pub const AXIOM_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSequence {
    k_min: i64,
    mats: Vec<Mat>,
}

impl MatrixSequence {
    pub fn new(k_min: i64, mats: Vec<Mat>) -> Result<Self> {
        let Some(first) = mats.first() else {
            return Err(Error::Input("empty matrix sequence".into()));
        };
        let d = first.nrows();
        for (i, m) in mats.iter().enumerate() {
            if m.shape() != (d, d) {
                return Err(Error::Input(format!("A_{} is {:?}, expected {d}x{d}", k_min + i as i64, m.shape())));
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::Input(format!("A_{} has non-finite entries", k_min + i as i64)));
            }
            let s = svd_raw(m);
            let ratio = s.sigmas[d - 1] / s.sigmas[0];
            if !(ratio > f64::EPSILON) {
                return Err(Error::NotInvertible(ratio));
            }
        }
        Ok(MatrixSequence { k_min, mats })
    }

    pub fn constant(m: &Mat, k_min: i64, k_max: i64) -> Result<Self> {
        Self::from_fn(k_min, k_max, |_| m.clone())
    }

    pub fn from_fn<F: FnMut(i64) -> Mat>(k_min: i64, k_max: i64, mut f: F) -> Result<Self> {
        if k_max < k_min {
            return Err(Error::Input("empty window".into()));
        }
        Self::new(k_min, (k_min..=k_max).map(&mut f).collect())
    }

    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    pub fn k_max(&self) -> i64 {
        self.k_min + self.mats.len() as i64 - 1
    }

    pub fn dim(&self) -> usize {
        self.mats[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn get(&self, k: i64) -> Result<&Mat> {
        if k < self.k_min || k > self.k_max() {
            return Err(Error::Domain(format!("index {k} outside window [{}, {}]", self.k_min, self.k_max())));
        }
        Ok(&self.mats[(k - self.k_min) as usize])
    }

    fn check_range(&self, k: i64, n: usize) -> Result<()> {
        if n > 0 {
            self.get(k)?;
            self.get(k + n as i64 - 1)?;
        }
        Ok(())
    }

    /// `A(k,n) = A_{k+n−1}⋯A_k`; `n = 0` gives the identity.
    pub fn partial_product(&self, k: i64, n: usize) -> Result<Mat> {
        self.check_range(k, n)?;
        let mut p = Mat::identity(self.dim(), self.dim());
        for j in 0..n as i64 {
            p = self.get(k + j)? * p;
        }
        Ok(p)
    }

    pub fn scaled_product(&self, k: i64, n: usize) -> Result<Scaled> {
        self.check_range(k, n)?;
        let mut p = Scaled::identity(self.dim());
        for j in 0..n as i64 {
            p = Scaled::new(self.get(k + j)?.clone()).mul(&p);
        }
        Ok(p)
    }

    /// `B_j = A_{−j−1}ᵀ` on `[−k_max−1, −k_min−1]`; its unstable spaces are
    /// the orthogonal complements of the stable spaces of the original.
    pub fn reversed_dual(&self) -> MatrixSequence {
        let mats = self.mats.iter().rev().map(|m| m.transpose()).collect();
        MatrixSequence { k_min: -self.k_max() - 1, mats }
    }

    /// Blocks `k=<int>` followed by `d` rows, after a `d=<n>` header.
    pub fn parse(text: &str) -> Result<Self> {
        let mut d: Option<usize> = None;
        let mut blocks: Vec<(i64, Vec<f64>, usize)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Input(format!("line {}: {msg}", lineno + 1));
            if let Some(v) = line.strip_prefix("d=") {
                let n: usize = v.trim().parse().map_err(|_| err(format!("bad dimension `{v}`")))?;
                if n == 0 || d.is_some_and(|x| x != n) {
                    return Err(err("inconsistent dimension".into()));
                }
                d = Some(n);
            } else if let Some(v) = line.strip_prefix("k=") {
                let k: i64 = v.trim().parse().map_err(|_| err(format!("bad index `{v}`")))?;
                if let Some(last) = blocks.last() {
                    if k != last.0 + 1 {
                        return Err(err(format!("index {k} does not follow {}", last.0)));
                    }
                }
                blocks.push((k, Vec::new(), lineno + 1));
            } else {
                let dim = d.ok_or_else(|| err("missing `d=` header".into()))?;
                let block = blocks.last_mut().ok_or_else(|| err("matrix row before `k=` header".into()))?;
                let row: Vec<f64> = line
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<f64>().map_err(|_| err(format!("bad number `{t}`"))))
                    .collect::<Result<_>>()?;
                if row.len() != dim {
                    return Err(err(format!("expected {dim} entries, found {}", row.len())));
                }
                block.1.extend(row);
            }
        }
        let d = d.ok_or_else(|| Error::Input("missing `d=` header".into()))?;
        let Some(k_min) = blocks.first().map(|b| b.0) else {
            return Err(Error::Input("no matrices".into()));
        };
        let mats = blocks
            .into_iter()
            .map(|(k, v, line)| {
                if v.len() != d * d {
                    return Err(Error::Input(format!("line {line}: block k={k} has {} rows, expected {d}", v.len() / d)));
                }
                Ok(Mat::from_row_slice(d, d, &v))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(k_min, mats)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("d={}\n", self.dim());
        for (i, m) in self.mats.iter().enumerate() {
            let _ = writeln!(s, "k={}", self.k_min + i as i64);
            for r in 0..m.nrows() {
                let row: Vec<String> = m.row(r).iter().map(|x| format!("{x:e}")).collect();
                let _ = writeln!(s, "{}", row.join(" "));
            }
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AxiomConstants {
    pub c: f64,
    pub mu: f64,
    pub mu_prime: f64,
}

impl AxiomConstants {
    pub fn r(&self) -> f64 {
        self.mu_prime / self.mu
    }

    /// `(1/μ) log 3C > 1`.
    pub fn side_condition(&self) -> bool {
        (3.0 * self.c).ln() / self.mu > 1.0
    }
}

/// `(2/3)(3e)^{−2r} exp(−(3/2)/(1−e^{−μ})) C^{−(1+2r)}`.
pub fn s_min(k: &AxiomConstants) -> Result<f64> {
    if !(k.mu > 0.0) {
        return Err(Error::Domain(format!("mu must be positive, got {}", k.mu)));
    }
    if !(k.c >= 1.0) || !(k.mu_prime >= 0.0) {
        return Err(Error::Domain("need C >= 1 and mu' >= 0".into()));
    }
    let r = k.r();
    Ok(2.0 / 3.0 * (3.0 * std::f64::consts::E).powf(-2.0 * r) * (-1.5 / (1.0 - (-k.mu).exp())).exp() * k.c.powf(-(1.0 + 2.0 * r)))
}

/// `C e^{−nμ} / (1 − e^{−μ})`.
pub fn error_radius(k: &AxiomConstants, n: usize) -> f64 {
    k.c * (-(n as f64) * k.mu).exp() / (1.0 - (-k.mu).exp())
}

/// Least `N ≥ 1` with `e^{−Nμ}/(1−e^{−μ}) ≤ 1/(3C)`.
pub fn choose_n(k: &AxiomConstants) -> Result<usize> {
    if !(k.mu > 0.0) {
        return Err(Error::Domain("mu must be positive".into()));
    }
    let mut n = 1usize;
    while (-(n as f64) * k.mu).exp() / (1.0 - (-k.mu).exp()) > 1.0 / (3.0 * k.c) {
        n += 1;
    }
    Ok(n)
}

/// `⌈(log 3C − log(1 − e^{−μ}))/μ⌉`, at least 1.
pub fn choose_n_closed_form(k: &AxiomConstants) -> usize {
    let x = ((3.0 * k.c).ln() - (1.0 - (-k.mu).exp()).ln()) / k.mu;
    (x.ceil() as usize).max(1)
}

#[derive(Clone, Debug)]
struct Entry {
    m: Scaled,
    log_s1: f64,
    /// `log σ₁/σ₂`.
    log_gap: f64,
    u1: Vector,
    v1: Vector,
}

/// All partial products of a window, with their top singular data.
#[derive(Clone, Debug)]
pub struct Analysis {
    seq: MatrixSequence,
    table: Vec<Vec<Entry>>,
}


impl Analysis {
    pub fn new(seq: &MatrixSequence) -> Result<Self> {
        let d = seq.dim();
        if d < 2 {
            return Err(Error::Domain("dimension must be at least 2".into()));
        }
        let dets: Vec<f64> = seq.mats.iter().map(|m| m.determinant().abs().ln()).collect();
        let wedges: Vec<Mat> = if d > 2 {
            seq.mats.iter().map(|m| exterior_power(m, 2)).collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        let w = seq.len();
        let mut table = Vec::with_capacity(w);
        for i in 0..w {
            let mut row = Vec::with_capacity(w - i + 1);
            let mut p = Scaled::identity(d);
            let mut q = if d > 2 { Some(Scaled::identity(wedges[0].nrows())) } else { None };
            let mut logdet = 0.0;
            for n in 0..=(w - i) {
                if n > 0 {
                    p = Scaled::new(seq.mats[i + n - 1].clone()).mul(&p);
                    logdet += dets[i + n - 1];
                    if let Some(qq) = q.as_mut() {
                        *qq = Scaled::new(wedges[i + n - 1].clone()).mul(qq);
                    }
                }
                let (s1, u1, v1) = top_singular_triple(&p.m);
                let log_s1 = s1.ln() + p.log_scale;
                let log_s12 = match &q {
                    Some(qq) => qq.log_sigma1(),
                    None => logdet,
                };
                row.push(Entry { m: p.clone(), log_s1, log_gap: 2.0 * log_s1 - log_s12, u1, v1 });
            }
            table.push(row);
        }
        Ok(Analysis { seq: seq.clone(), table })
    }

    pub fn sequence(&self) -> &MatrixSequence {
        &self.seq
    }

    fn entry(&self, k: i64, n: usize) -> Result<&Entry> {
        self.seq.check_range(k, n)?;
        if n == 0 {
            self.seq.get(k).or_else(|_| self.seq.get(k - 1))?;
            let i = (k - self.seq.k_min).clamp(0, self.table.len() as i64 - 1) as usize;
            return Ok(&self.table[i][0]);
        }
        Ok(&self.table[(k - self.seq.k_min) as usize][n])
    }

    /// `log σ₁(A(k,n))`.
    pub fn log_sigma1(&self, k: i64, n: usize) -> Result<f64> {
        Ok(self.entry(k, n)?.log_s1)
    }

    /// `log (σ₁/σ₂)(A(k,n))`.
    pub fn log_gap(&self, k: i64, n: usize) -> Result<f64> {
        Ok(self.entry(k, n)?.log_gap)
    }

    fn require_gap(&self, k: i64, n: usize) -> Result<&Entry> {
        let e = self.entry(k, n)?;
        if e.log_gap < GAP_TOL.ln_1p() {
            return Err(Error::IllDefined { index: 1, ratio: e.log_gap.exp() });
        }
        Ok(e)
    }

    /// Unit vector spanning `Ũ(k,n)`.
    pub fn u_tilde(&self, k: i64, n: usize) -> Result<Vector> {
        Ok(self.require_gap(k - n as i64, n)?.u1.clone())
    }

    /// Unit normal of the hyperplane `V(k,n)`, equivalently a basis of `U(k,n)`.
    pub fn v_normal(&self, k: i64, n: usize) -> Result<Vector> {
        Ok(self.require_gap(k, n)?.v1.clone())
    }

    /// Largest `n` with both `Ũ(k,n)` and `V(k,n)` inside the window.
    pub fn available_depth(&self, k: i64) -> usize {
        let fwd = self.seq.k_max() - k + 1;
        let back = k - self.seq.k_min;
        fwd.min(back).max(0) as usize
    }

    /// Largest `n` with `V(k,n)` inside the window.
    pub fn forward_depth(&self, k: i64) -> usize {
        (self.seq.k_max() - k + 1).max(0) as usize
    }

    /// Normalized `A(k,n)` and its log scale.
    pub fn product(&self, k: i64, n: usize) -> Result<&Scaled> {
        Ok(&self.entry(k, n)?.m)
    }
}

pub fn approx_spaces(a: &Analysis, k: i64, n: usize) -> Result<(Subspace, Subspace)> {
    let u = a.u_tilde(k, n).map_err(|e| Error::Invalid(format!("(k,n) = ({k},{n}): {e}")))?;
    let v = a.v_normal(k, n).map_err(|e| Error::Invalid(format!("(k,n) = ({k},{n}): {e}")))?;
    let line = Subspace::line(u.as_slice())?;
    let plane = Subspace::line(v.as_slice())?.complement().expect("proper line");
    Ok((line, plane))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    SvgBg,
    EcStable,
    EcUnstable,
    FiBack,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub k: i64,
    pub n: usize,
    pub m: usize,
    pub measured: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AxiomTally {
    pub checked: usize,
    pub violations: usize,
    /// Smallest `bound − measured` in log terms (SVG-BG, FI) or absolute terms (EC).
    pub worst_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomReport {
    pub constants: AxiomConstants,
    pub svg_bg: AxiomTally,
    pub ec_stable: AxiomTally,
    pub ec_unstable: AxiomTally,
    pub fi_back: AxiomTally,
    /// First violations found (at most 64).
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        [&self.svg_bg, &self.ec_stable, &self.ec_unstable, &self.fi_back].iter().all(|t| t.violations == 0)
    }
}

/// Raw measurements over the window, grouped by `n` (or `m` for FI).
struct Measurements {
    /// `(k, n, log σ₂/σ₁)` for `n ≥ 1`.
    svg: Vec<(i64, usize, f64)>,
    /// `(k, n, d(V(k,n), V(k,n+1)))`.
    ec_s: Vec<(i64, usize, f64)>,
    /// `(k, n, d(Ũ(k,n), Ũ(k,n+1)))`.
    ec_u: Vec<(i64, usize, f64)>,
    /// `(k, n, m, log ratio)` for `k ≤ 0`, `m ≥ 1`.
    fi: Vec<(i64, usize, usize, f64)>,
}

fn measure(a: &Analysis) -> Measurements {
    let (lo, hi) = (a.seq.k_min, a.seq.k_max());
    let mut svg = Vec::new();
    let mut ec_s = Vec::new();
    let mut ec_u = Vec::new();
    let mut fi = Vec::new();
    for k in lo..=hi {
        for n in 1..=((hi - k + 1) as usize) {
            svg.push((k, n, -a.log_gap(k, n).expect("in window")));
            if k + n as i64 <= hi {
                let (x, y) = (&a.entry(k, n).unwrap().v1, &a.entry(k, n + 1).unwrap().v1);
                ec_s.push((k, n, line_distance(x, y)));
            }
        }
    }
    for k in lo..=hi + 1 {
        for n in 1..=((k - lo) as usize) {
            if k - n as i64 - 1 < lo || k - 1 > hi {
                continue;
            }
            let (x, y) = (&a.entry(k - n as i64, n).unwrap().u1, &a.entry(k - n as i64 - 1, n + 1).unwrap().u1);
            ec_u.push((k, n, line_distance(x, y)));
        }
    }
    for k in lo..=hi.min(0) {
        for n in 0..=((hi - k + 1) as usize) {
            let l_kn = a.log_sigma1(k, n).unwrap();
            for m in 1..=((k - lo) as usize) {
                let km = k - m as i64;
                let v = a.log_sigma1(km, n + m).unwrap() - l_kn - a.log_sigma1(km, m).unwrap();
                fi.push((k, n, m, v));
            }
        }
    }
    Measurements { svg, ec_s, ec_u, fi }
}

/// Exhaustive check of SVG-BG, both EC inequalities and FI_back on the window.
pub fn check_axioms(a: &Analysis, c: &AxiomConstants) -> AxiomReport {
    let meas = measure(a);
    let mut violations = Vec::new();
    let mut push = |v: AxiomViolation| {
        if violations.len() < 64 {
            violations.push(v);
        }
    };
    let lnc = c.c.ln();
    let log_slack = AXIOM_SLACK.ln_1p();
    let mut svg = AxiomTally { worst_margin: f64::INFINITY, ..Default::default() };
    for &(k, n, lq) in &meas.svg {
        let bound = lnc - n as f64 * c.mu;
        svg.checked += 1;
        svg.worst_margin = svg.worst_margin.min(bound - lq);
        if lq > bound + log_slack {
            svg.violations += 1;
            push(AxiomViolation { axiom: Axiom::SvgBg, k, n, m: 0, measured: lq.exp(), bound: bound.exp() });
        }
    }
    let ec = |list: &[(i64, usize, f64)], axiom: Axiom, push: &mut dyn FnMut(AxiomViolation)| {
        let mut t = AxiomTally { worst_margin: f64::INFINITY, ..Default::default() };
        for &(k, n, q) in list {
            let bound = c.c * (-(n as f64) * c.mu).exp();
            t.checked += 1;
            t.worst_margin = t.worst_margin.min(bound - q);
            if q > bound * (1.0 + AXIOM_SLACK) + DISTANCE_FLOOR {
                t.violations += 1;
                push(AxiomViolation { axiom, k, n, m: 0, measured: q, bound });
            }
        }
        t
    };
    let ec_stable = ec(&meas.ec_s, Axiom::EcStable, &mut push);
    let ec_unstable = ec(&meas.ec_u, Axiom::EcUnstable, &mut push);
    let mut fi = AxiomTally { worst_margin: f64::INFINITY, ..Default::default() };
    for &(k, n, m, lr) in &meas.fi {
        let bound = -lnc - m as f64 * c.mu_prime;
        fi.checked += 1;
        fi.worst_margin = fi.worst_margin.min(lr - bound);
        if lr < bound - log_slack {
            fi.violations += 1;
            push(AxiomViolation { axiom: Axiom::FiBack, k, n, m, measured: lr.exp(), bound: bound.exp() });
        }
    }
    AxiomReport { constants: *c, svg_bg: svg, ec_stable, ec_unstable, fi_back: fi, violations }
}

/// Feasible constants on the window maximizing `s_min`.
///
/// For each trial `μ`, `C(μ)` is the least value making SVG-BG and both EC
/// inequalities hold (EC measurements below [`DISTANCE_FLOOR`] impose
/// nothing), and `μ′` is then the least value making FI_back hold. `μ` is
/// scanned on a grid over `(0, μ_sup]`, `μ_sup` the steepest observed decay
/// rate of `σ₂/σ₁`, and refined by golden-section search.
pub fn fit_constants(a: &Analysis) -> Result<AxiomConstants> {
    let meas = measure(a);
    let w = a.seq.len() + 1;
    let mut svg_max = vec![f64::NEG_INFINITY; w];
    for &(_, n, lq) in &meas.svg {
        svg_max[n] = svg_max[n].max(lq);
    }
    let mut ec_max = vec![0.0f64; w];
    for &(_, n, q) in meas.ec_s.iter().chain(&meas.ec_u) {
        ec_max[n] = ec_max[n].max(q);
    }
    let mut fi_min = vec![f64::INFINITY; w];
    for &(_, _, m, lr) in &meas.fi {
        fi_min[m] = fi_min[m].min(lr);
    }
    let mu_sup = (1..w).filter(|&n| svg_max[n].is_finite()).map(|n| -svg_max[n] / n as f64).fold(f64::NEG_INFINITY, f64::max);
    if !(mu_sup > 1e-12) {
        return Err(Error::NotDominated(format!("sigma2/sigma1 does not decay (best rate {mu_sup:e})")));
    }
    let constants = |mu: f64| -> AxiomConstants {
        let mut lnc = 0.0f64;
        for n in 1..w {
            if svg_max[n].is_finite() {
                lnc = lnc.max(svg_max[n] + n as f64 * mu);
            }
            let q = ec_max[n] - DISTANCE_FLOOR;
            if q > 0.0 {
                lnc = lnc.max(q.ln() + n as f64 * mu);
            }
        }
        let mut mu_prime = 0.0f64;
        for m in 1..w {
            if fi_min[m].is_finite() {
                mu_prime = mu_prime.max((-fi_min[m] - lnc) / m as f64);
            }
        }
        AxiomConstants { c: lnc.exp(), mu, mu_prime }
    };
    let score = |mu: f64| s_min(&constants(mu)).map(|s| s.ln()).unwrap_or(f64::NEG_INFINITY);
    const GRID: usize = 64;
    let grid: Vec<f64> = (1..=GRID).map(|i| mu_sup * i as f64 / GRID as f64).collect();
    let (best_i, _) = grid
        .iter()
        .enumerate()
        .map(|(i, &mu)| (i, score(mu)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let lo = if best_i == 0 { mu_sup * 1e-6 } else { grid[best_i - 1] };
    let hi = grid[(best_i + 1).min(GRID - 1)];
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x0, mut x1) = (lo, hi);
    let mut best = (grid[best_i], score(grid[best_i]));
    for _ in 0..80 {
        let p = x1 - phi * (x1 - x0);
        let q = x0 + phi * (x1 - x0);
        let (sp, sq) = (score(p), score(q));
        for (x, s) in [(p, sp), (q, sq)] {
            if s > best.1 {
                best = (x, s);
            }
        }
        if sp >= sq {
            x1 = q;
        } else {
            x0 = p;
        }
    }
    if !best.1.is_finite() {
        return Err(Error::NotDominated("no feasible constants".into()));
    }
    Ok(constants(best.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct SplittingCertificate {
    pub k: i64,
    pub eu_basis: Vec<f64>,
    /// Unit normal of `E^s`; `E^s` itself is its orthogonal complement.
    pub es_normal: Vec<f64>,
    pub c: f64,
    pub mu: f64,
    pub mu_prime: f64,
    pub n_used: usize,
    pub error_radius: f64,
    pub gap: f64,
    pub s_min: f64,
    pub side_condition: bool,
    /// `d(A_k E^u(k), E^u(k+1))` and the same for `E^s`, when `k+1` has depth `n_used`.
    pub equivariance_u: Option<f64>,
    pub equivariance_s: Option<f64>,
}

impl SplittingCertificate {
    pub fn eu(&self) -> Subspace {
        Subspace::line(&self.eu_basis).expect("unit vector")
    }

    pub fn es(&self) -> Subspace {
        Subspace::line(&self.es_normal).expect("unit vector").complement().expect("proper line")
    }

    /// `gap ≥ s_min − 2·error_radius`.
    pub fn consistent(&self) -> bool {
        self.gap >= self.s_min - 2.0 * self.error_radius - DISTANCE_FLOOR
    }
}

/// Smallest depth whose error radius is at most `target`.
pub fn depth_for(c: &AxiomConstants, target: f64) -> Result<usize> {
    if !(target > 0.0) {
        return Err(Error::Domain("target error must be positive".into()));
    }
    let base = 1.0 - (-c.mu).exp();
    let x = ((c.c / (base * target)).ln() / c.mu).ceil();
    Ok(x.max(0.0) as usize)
}

pub fn compute_splitting(a: &Analysis, c: &AxiomConstants, k: i64, target: f64) -> Result<SplittingCertificate> {
    let needed = depth_for(c, target)?.max(1);
    let available = a.available_depth(k);
    if needed > available {
        return Err(Error::WindowTooShort { needed, available });
    }
    let n = needed;
    let (eu, es) = approx_spaces(a, k, n)?;
    let gap = minimal_gap(&eu, &es)?;
    let ak = a.seq.get(k)?;
    let (mut equivariance_u, mut equivariance_s) = (None, None);
    if a.available_depth(k + 1) >= n {
        if let Ok((eu1, es1)) = approx_spaces(a, k + 1, n) {
            equivariance_u = Some(grassmann_distance(&eu.image(ak)?, &eu1)?);
            equivariance_s = Some(grassmann_distance(&es.image(ak)?, &es1)?);
        }
    }
    Ok(SplittingCertificate {
        k,
        eu_basis: a.u_tilde(k, n)?.iter().copied().collect(),
        es_normal: a.v_normal(k, n)?.iter().copied().collect(),
        c: c.c,
        mu: c.mu,
        mu_prime: c.mu_prime,
        n_used: n,
        error_radius: error_radius(c, n),
        gap,
        s_min: s_min(c)?,
        side_condition: c.side_condition(),
        equivariance_u,
        equivariance_s,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DualityCheck {
    pub k: i64,
    /// `d(E^u(ιx*, −k), E^s(x, k)^⊥)`.
    pub distance: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Compares `E^u` of the reversed dual at `−k` with `E^s(k)^⊥`, each from its
/// own certificate.
pub fn duality_check(x: &Analysis, cx: &AxiomConstants, dual: &Analysis, cd: &AxiomConstants, k: i64, target: f64) -> Result<DualityCheck> {
    let cert_x = compute_splitting(x, cx, k, target)?;
    let cert_d = compute_splitting(dual, cd, -k, target)?;
    let perp = Subspace::line(&cert_x.es_normal)?;
    let distance = grassmann_distance(&cert_d.eu(), &perp)?;
    let tolerance = cert_x.error_radius + cert_d.error_radius;
    Ok(DualityCheck { k, distance, tolerance, holds: distance <= tolerance + DISTANCE_FLOOR })
}

/// Best available approximation of `E^s(k)`: its normal and error radius.
fn stable_estimate(a: &Analysis, c: &AxiomConstants, k: i64) -> Result<(Vector, f64)> {
    let n = a.forward_depth(k);
    Ok((a.v_normal(k, n)?, error_radius(c, n)))
}

fn apply(a: &Analysis, k: i64, n: usize, v: &Vector) -> Result<f64> {
    let p = a.product(k, n)?;
    let s1 = crate::linalg::sigma1(&p.m);
    Ok((&p.m * v).norm() / s1)
}

/// Block-analysis bounds around base index `k` with block length `big_n`.
/// Measured quantities involving `E^s` use the deepest in-window `V(k,n)`;
/// its error radius is added to the tolerance.
pub fn verify_block_bounds(a: &Analysis, c: &AxiomConstants, big_n: usize, k: i64, blocks: usize) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    let nn = big_n as i64;
    let fwd = a.forward_depth(k);
    // Expansion on approximate unstable lines.
    for n in big_n..=fwd {
        for m in big_n..=fwd {
            let label = format!("expansion k={k} n={n} m={m}");
            let u = a.v_normal(k, m)?;
            out.push(BoundReport::lower(&label, apply(a, k, n, &u)?, 2.0 / 3.0));
        }
    }
    let Ok((es, rad)) = stable_estimate(a, c, k) else {
        out.push(BoundReport::skip("stable-space bounds", "E^s(k) undefined on window"));
        return Ok(out);
    };
    let es_plane = Subspace::line(es.as_slice())?.complement().expect("proper");
    let gap_floor = 2.0 / 3.0 / c.c * (-(nn as f64) * c.mu_prime).exp();
    if k <= 0 {
        // Gap between pushed-forward approximate fast spaces and E^s.
        for m in big_n..=a.available_depth(k - nn).min(a.forward_depth(k - nn)) {
            let label = format!("fast-slow gap k={k} m={m}");
            let u = a.v_normal(k - nn, m)?;
            let p = a.product(k - nn, big_n)?;
            let w = Subspace::line((&p.m * u).as_slice())?;
            let s = minimal_gap(&w, &es_plane)?;
            out.push(BoundReport::lower(&label, s + rad, gap_floor));
        }
        // Contraction on E^s.
        let basis = es_plane.basis().clone();
        for n in big_n..=fwd {
            let p = a.product(k, n)?;
            let s1 = crate::linalg::sigma1(&p.m);
            let restricted = crate::linalg::sigma1(&(&p.m * &basis)) / s1;
            let bound = 2.0 / 3.0 * (-((n - big_n) as f64) * c.mu).exp();
            out.push(BoundReport::upper(&format!("slow contraction k={k} n={n}"), (restricted - 2.0 * rad).max(0.0), bound));
        }
    }
    // Graph operators of successive blocks and the fast-space gap product.
    let gamma_bound = 9.0 / 4.0 * c.c * (nn as f64 * c.mu_prime).exp();
    for j in 1..=blocks {
        let jn = j * big_n;
        let base = k - jn as i64;
        if a.available_depth(base).min(a.forward_depth(base)) < jn || base - nn < a.seq.k_min {
            break;
        }
        let Ok((es_j, rad_j)) = stable_estimate(a, c, base) else { break };
        let u = a.v_normal(base, jn)?;
        let src = a.v_normal(base - nn, jn + big_n)?;
        let p = a.product(base - nn, big_n)?;
        let w = &p.m * &src;
        let alpha = w.dot(&es_j) / u.dot(&es_j);
        let h = &w - &u * alpha;
        let gamma = h.norm() / alpha.abs();
        let sens = rad_j * (1.0 + gamma) / u.dot(&es_j).abs().max(1e-300);
        out.push(BoundReport::upper(&format!("graph operator k={k} block={j}"), (gamma - sens).max(0.0), gamma_bound));
    }
    let mut prod = 1.0;
    for n in 1..=blocks {
        if n >= 2 {
            let j = (n - 2) as f64;
            prod *= 1.0 + 1.5 * c.c * ((nn as f64) * (c.mu_prime - j * c.mu)).exp();
        }
        let depth = n * big_n;
        if a.available_depth(k) < depth {
            break;
        }
        let eu = Subspace::line(a.u_tilde(k, depth)?.as_slice())?;
        let s = minimal_gap(&eu, &es_plane)?;
        out.push(BoundReport::lower(&format!("block product k={k} n={n}"), s + rad, gap_floor / prod));
    }
    Ok(out)
}

/// `∏_{j≥0} (1 + (3/2)C e^{Nμ′} e^{−jNμ}) ≤ exp((3/2)C e^{Nμ′}/(1 − e^{−Nμ}))`,
/// the product truncated once its factors reach 1 in double precision.
pub fn infinite_product_bound(c: &AxiomConstants, big_n: usize) -> BoundReport {
    let nn = big_n as f64;
    let a0 = 1.5 * c.c * (nn * c.mu_prime).exp();
    let mut log_prod = 0.0;
    let mut j = 0.0;
    loop {
        let term = a0 * (-j * nn * c.mu).exp();
        if term < 1e-18 || j > 1e6 {
            break;
        }
        log_prod += term.ln_1p();
        j += 1.0;
    }
    let log_bound = a0 / (1.0 - (-nn * c.mu).exp());
    BoundReport::upper(&format!("infinite product N={big_n}"), log_prod, log_bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, rotation};

    #[test]
    fn constant_diagonal() {
        let seq = MatrixSequence::constant(&diag(&[2.0, 0.5]), -20, 20).unwrap();
        assert_eq!(seq.partial_product(0, 0).unwrap(), Mat::identity(2, 2));
        assert_eq!(seq.partial_product(0, 5).unwrap(), diag(&[32.0, 1.0 / 32.0]));
        let a = Analysis::new(&seq).unwrap();
        let c = fit_constants(&a).unwrap();
        assert!((c.c - 1.0).abs() < 1e-9 && (c.mu - 4f64.ln()).abs() < 1e-9 && c.mu_prime < 1e-9, "{c:?}");
        assert!(check_axioms(&a, &c).passed());
        let cert = compute_splitting(&a, &c, 0, 1e-6).unwrap();
        assert_eq!(cert.gap, 1.0);
        assert_eq!(cert.eu_basis.iter().map(|x| x.abs()).collect::<Vec<_>>(), vec![1.0, 0.0]);
        assert_eq!(cert.es_normal.iter().map(|x| x.abs()).collect::<Vec<_>>(), vec![1.0, 0.0]);
    }

    #[test]
    fn rotations_are_not_dominated() {
        let seq = MatrixSequence::constant(&rotation(0.3), 0, 10).unwrap();
        let a = Analysis::new(&seq).unwrap();
        assert!(matches!(fit_constants(&a), Err(Error::NotDominated(_))));
    }

    #[test]
    fn closed_forms() {
        let v = s_min(&AxiomConstants { c: 1.0, mu: 1.0, mu_prime: 0.0 }).unwrap();
        assert!((v - 0.0622).abs() < 1e-4);
        let k = AxiomConstants { c: 1.0, mu: 1.0, mu_prime: 0.0 };
        assert_eq!(choose_n(&k).unwrap(), 2);
        let k = AxiomConstants { c: 10.0, mu: 0.1, mu_prime: 0.0 };
        assert_eq!(choose_n(&k).unwrap(), choose_n_closed_form(&k));
        assert_eq!(choose_n(&AxiomConstants { c: 1.0, mu: 20.0, mu_prime: 0.0 }).unwrap(), 1);
        assert!(s_min(&AxiomConstants { c: 1.0, mu: 0.0, mu_prime: 0.0 }).is_err());
    }

    #[test]
    fn text_round_trip() {
        let seq = MatrixSequence::from_fn(-2, 2, |k| rotation(0.1 * k as f64) * diag(&[3.0, 1.0 / 3.0])).unwrap();
        let back = MatrixSequence::parse(&seq.to_text()).unwrap();
        assert_eq!(back.k_min(), -2);
        for k in -2..=2 {
            assert!((back.get(k).unwrap() - seq.get(k).unwrap()).norm() < 1e-15);
        }
        assert!(MatrixSequence::parse("d=2\nk=0\n1 0\n").is_err());
        assert!(MatrixSequence::parse("d=2\nk=0\n1 0\n0 1\nk=2\n1 0\n0 1\n").is_err());
    }

    #[test]
    fn reversed_dual_of_diagonal() {
        let seq = MatrixSequence::constant(&diag(&[2.0, 0.5]), -10, 10).unwrap();
        let dual = seq.reversed_dual();
        assert_eq!((dual.k_min(), dual.k_max()), (-11, 9));
        let (a, b) = (Analysis::new(&seq).unwrap(), Analysis::new(&dual).unwrap());
        let (ca, cb) = (fit_constants(&a).unwrap(), fit_constants(&b).unwrap());
        let chk = duality_check(&a, &ca, &b, &cb, -2, 1e-4).unwrap();
        assert!(chk.holds, "{chk:?}");
    }
}
