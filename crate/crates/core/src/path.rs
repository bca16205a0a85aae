//! Relative paths: peripheral excursions of cusped geodesics, the projection
//! back to the Cayley graph, depth, and the reparametrization that groups the
//! steps of each excursion into blocks of doubling length.

use serde::Serialize;

use crate::cusped::{preferred_geodesic, Vertex};
use crate::error::{Error, Result};
use crate::group::{Element, GroupSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OpenEnd {
    /// The path begins inside the coset and never saw the entry.
    Start,
    /// The path is truncated while still inside the coset.
    End,
}

/// Maximal subpath `[start, end]` inside one peripheral coset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Excursion {
    pub start: usize,
    pub end: usize,
    pub peripheral: usize,
    pub open: Option<OpenEnd>,
}

impl Excursion {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// A path of group elements with its excursion decomposition. `steps[n]` is
/// the length of `γ(n)⁻¹γ(n+1)`: the peripheral word length inside an
/// excursion, the Cayley length elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelativePath {
    pub points: Vec<Element>,
    pub excursions: Vec<Excursion>,
    pub steps: Vec<u64>,
}

impl RelativePath {
    pub fn cayley(points: Vec<Element>) -> Self {
        let steps = vec![1; points.len().saturating_sub(1)];
        RelativePath { points, excursions: Vec::new(), steps }
    }

    /// Last parameter value.
    pub fn end(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn excursion_at_step(&self, n: usize) -> Option<&Excursion> {
        self.excursions.iter().find(|e| e.start <= n && n < e.end)
    }

    pub fn excursion_at_point(&self, n: usize) -> Option<&Excursion> {
        self.excursions.iter().find(|e| e.start <= n && n <= e.end)
    }
}

/// Peripheral excursions of a cusped path, as `(first vertex, last vertex,
/// peripheral)` index triples. An edge lies in a horoball when either end is
/// above level 0 or it is a Cayley edge labelled by a peripheral element.
pub fn cusped_excursions(spec: &GroupSpec, path: &[Vertex]) -> Vec<(usize, usize, usize)> {
    let edge_horoball = |u: &Vertex, v: &Vertex| -> Option<usize> {
        if let Some(p) = u.peripheral.or(v.peripheral) {
            return Some(p);
        }
        let step = spec.mul(&spec.inv(&u.element), &v.element);
        spec.peripherals.iter().position(|p| p.coords(&spec.model, &step).is_some())
    };
    let mut runs: Vec<(usize, usize, usize)> = Vec::new();
    for i in 0..path.len().saturating_sub(1) {
        let Some(p) = edge_horoball(&path[i], &path[i + 1]) else { continue };
        if let Some(last) = runs.last_mut() {
            if last.1 == i && last.2 == p && spec.peripherals[p].same_coset(&spec.model, &path[last.0].element, &path[i].element) {
                last.1 = i + 1;
                continue;
            }
        }
        runs.push((i, i + 1, p));
    }
    runs
}

/// Replaces every excursion of a cusped geodesic with the preferred geodesic
/// between the same endpoints.
pub fn normalize_excursions(spec: &GroupSpec, path: &[Vertex]) -> Result<Vec<Vertex>> {
    let runs = cusped_excursions(spec, path);
    let mut out = Vec::with_capacity(path.len());
    let mut next = 0;
    for (s, e, p) in runs {
        out.extend_from_slice(&path[next..s]);
        let pg = preferred_geodesic(spec, p, &path[s], &path[e])?;
        if pg.len() > e - s + 1 {
            return Err(Error::Invalid(format!("subpath {s}..{e} is not a geodesic")));
        }
        out.extend(pg.into_iter().take(e - s));
        next = e;
    }
    out.extend_from_slice(&path[next..]);
    Ok(out)
}

/// Projection of a cusped path whose excursions are preferred geodesics:
/// vertical segments are dropped and each horizontal segment is replaced by a
/// peripheral geodesic word. `origin[i]` is the projected parameter of the
/// `i`-th cusped vertex (constant along vertical segments).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Projection {
    pub path: RelativePath,
    pub origin: Vec<usize>,
}

pub fn project(spec: &GroupSpec, path: &[Vertex]) -> Result<Projection> {
    let (Some(first), Some(last)) = (path.first(), path.last()) else {
        return Err(Error::Input("empty path".into()));
    };
    if first.level != 0 || last.level != 0 {
        return Err(Error::Input("path endpoints must be group elements".into()));
    }
    let runs = cusped_excursions(spec, path);
    let mut points = vec![first.element.clone()];
    let mut excursions = Vec::new();
    let mut origin = vec![0usize; path.len()];
    let mut i = 0;
    let mut r = 0;
    while i + 1 < path.len() {
        if r < runs.len() && runs[r].0 == i {
            let (s, e, p) = runs[r];
            let expected = preferred_geodesic(spec, p, &path[s], &path[e])?;
            if expected.as_slice() != &path[s..=e] {
                return Err(Error::NotPreferred(format!("excursion {s}..{e}")));
            }
            let per = &spec.peripherals[p];
            let base = &path[s].element;
            let coords = per.coords(&spec.model, &spec.mul(&spec.inv(base), &path[e].element)).expect("same coset");
            let start = points.len() - 1;
            let mut partial = vec![0i64; coords.len()];
            for (axis, &c) in coords.iter().enumerate() {
                for _ in 0..c.unsigned_abs() {
                    partial[axis] += c.signum();
                    points.push(spec.mul(base, &per.element(&spec.model, &partial)));
                }
            }
            let end = points.len() - 1;
            // Vertical and horizontal vertices map onto the projected segment.
            for (j, v) in path[s..=e].iter().enumerate() {
                let off = per
                    .coords(&spec.model, &spec.mul(&spec.inv(base), &v.element))
                    .map(|c| c.iter().map(|x| x.unsigned_abs() as usize).sum::<usize>())
                    .unwrap_or(0);
                origin[s + j] = start + off;
            }
            excursions.push(Excursion { start, end, peripheral: p, open: None });
            i = e;
            r += 1;
        } else {
            points.push(path[i + 1].element.clone());
            origin[i + 1] = points.len() - 1;
            i += 1;
        }
    }
    let steps = vec![1; points.len() - 1];
    Ok(Projection { path: RelativePath { points, excursions, steps }, origin })
}

/// Depth at a point: distance along the path to the nearest exit from the
/// current excursion, counting the ends of a finite path as exits, and zero
/// off excursions.
pub fn point_depth(path: &RelativePath, n: usize) -> Result<u64> {
    if n > path.end() {
        return Err(Error::Domain(format!("parameter {n} outside [0, {}]", path.end())));
    }
    Ok(match path.excursion_at_point(n) {
        None => 0,
        Some(e) => match e.open {
            None => (n - e.start).min(e.end - n) as u64,
            Some(OpenEnd::Start) => (e.end - n) as u64,
            Some(OpenEnd::End) => (n - e.start) as u64,
        },
    })
}

/// Depth of the step from `n` to `n + 1`: the larger of its endpoint depths
/// for steps heading into the excursion, so the first and last steps of an
/// excursion have depth 1.
pub fn step_depth(path: &RelativePath, n: usize) -> Result<u64> {
    if n >= path.end() {
        return Err(Error::Domain(format!("step {n} outside [0, {})", path.end())));
    }
    Ok(match path.excursion_at_step(n) {
        None => 0,
        Some(e) => match e.open {
            None => (n - e.start + 1).min(e.end - n) as u64,
            Some(OpenEnd::Start) => (e.end - n) as u64,
            Some(OpenEnd::End) => (n - e.start + 1) as u64,
        },
    })
}

/// `(1, 2, …, 2^{k−1}, 2^k + (n − n_k), 2^{k−1}, …, 1)` where
/// `n_k = 3·2^k − 2 ≤ n < n_{k+1}`.
pub fn ordered_partition(n: i64) -> Result<Vec<u64>> {
    if n <= 0 {
        return Err(Error::Domain(format!("partition of {n}")));
    }
    let n = n as u64;
    let mut k = 0u32;
    while 3 * (1u64 << (k + 1)) - 2 <= n {
        k += 1;
    }
    let nk = 3 * (1u64 << k) - 2;
    let mut out: Vec<u64> = (0..k).map(|i| 1u64 << i).collect();
    out.push((1u64 << k) + (n - nk));
    out.extend((0..k).rev().map(|i| 1u64 << i));
    Ok(out)
}

/// Groups excursion steps into partition blocks (blocks `1, 2, 4, …` from the
/// exit for open excursions, dropping a trailing partial block).
pub fn reparametrize(path: &RelativePath) -> Result<RelativePath> {
    let end = path.end();
    if end > 0 {
        if let [e] = path.excursions.as_slice() {
            if e.start == 0 && e.end == end {
                return Err(Error::WhollyPeripheral);
            }
        }
    }
    // Breakpoints in the old parameter, and the excursion each block sits in.
    let mut marks: Vec<usize> = vec![0];
    let mut new_exc = Vec::new();
    let mut lo = 0;
    let mut hi = end;
    for e in &path.excursions {
        match e.open {
            Some(OpenEnd::Start) => {
                let mut b = Vec::new();
                let mut pos = e.end;
                let mut size = 1;
                while pos >= e.start + size {
                    pos -= size;
                    b.push(pos);
                    size *= 2;
                }
                lo = *b.last().unwrap_or(&e.end);
                marks = b.into_iter().rev().collect();
                marks.push(e.end);
                new_exc.push((lo, e.end, e.peripheral, e.open));
            }
            Some(OpenEnd::End) => {
                while *marks.last().expect("nonempty") < e.start {
                    let m = marks.last().unwrap() + 1;
                    marks.push(m);
                }
                let mut pos = e.start;
                let mut size = 1;
                while pos + size <= e.end {
                    pos += size;
                    marks.push(pos);
                    size *= 2;
                }
                hi = pos;
                new_exc.push((e.start, pos, e.peripheral, e.open));
                break;
            }
            None => {
                while *marks.last().expect("nonempty") < e.start {
                    let m = marks.last().unwrap() + 1;
                    marks.push(m);
                }
                let mut pos = e.start;
                for b in ordered_partition(e.len() as i64)? {
                    pos += b as usize;
                    marks.push(pos);
                }
                new_exc.push((e.start, e.end, e.peripheral, None));
            }
        }
    }
    while *marks.last().expect("nonempty") < hi {
        let m = marks.last().unwrap() + 1;
        marks.push(m);
    }
    let marks: Vec<usize> = marks.into_iter().filter(|&m| m >= lo && m <= hi).collect();
    let pos = |old: usize| marks.binary_search(&old).expect("block boundary");
    let excursions = new_exc
        .into_iter()
        .map(|(s, e, p, open)| Excursion { start: pos(s), end: pos(e), peripheral: p, open })
        .collect();
    let steps = marks
        .windows(2)
        .map(|w| (w[0]..w[1]).map(|i| path.steps[i]).sum())
        .collect();
    Ok(RelativePath { points: marks.iter().map(|&m| path.points[m].clone()).collect(), excursions, steps })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `|γ(n)⁻¹γ(m)|_c ≥ |m−n|/υ̲ − υ̲`.
    Lower,
    /// `|γ(n)⁻¹γ(m)|_c ≤ ῡ(|m−n| + min δ) + ῡ`.
    Upper,
    /// `2^{δ−1} ≤ ℓ(n) ≤ 2^{δ+1}`.
    StepWindow,
    /// `|γ(n)⁻¹γ(m)|_c ≥ |m−n|/6`.
    SharpLower,
    /// `|γ(n)⁻¹γ(m)|_c ≤ 8(|m−n| + min δ) + 20`.
    SharpUpper,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub condition: Condition,
    pub m: usize,
    pub n: usize,
    pub measured: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuasigeodesicReport {
    pub lower_constant: f64,
    pub upper_constant: f64,
    pub sharpened: bool,
    pub pairs: usize,
    pub violations: Vec<Violation>,
}

impl QuasigeodesicReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the metric quasigeodesic conditions over all parameter pairs.
/// `length` returns `|x|_c`.
pub fn verify_metric_quasigeodesic<F>(
    spec: &GroupSpec,
    path: &RelativePath,
    lower: f64,
    upper: f64,
    sharpened: bool,
    length: F,
) -> Result<QuasigeodesicReport>
where
    F: Fn(&Element) -> Result<u32>,
{
    let mut violations = Vec::new();
    let end = path.end();
    let depth: Vec<u64> = (0..=end).map(|n| point_depth(path, n)).collect::<Result<_>>()?;
    let mut pairs = 0;
    for m in 0..=end {
        let inv = spec.inv(&path.points[m]);
        for n in m + 1..=end {
            pairs += 1;
            let d = length(&spec.mul(&inv, &path.points[n]))? as f64;
            let gap = (n - m) as f64;
            let dmin = depth[m].min(depth[n]) as f64;
            let mut check = |condition, ok: bool, bound: f64| {
                if !ok {
                    violations.push(Violation { condition, m, n, measured: d, bound });
                }
            };
            let b = gap / lower - lower;
            check(Condition::Lower, d >= b, b);
            let b = upper * (gap + dmin) + upper;
            check(Condition::Upper, d <= b, b);
            if sharpened {
                let b = gap / 6.0;
                check(Condition::SharpLower, d >= b, b);
                let b = 8.0 * (gap + dmin) + 20.0;
                check(Condition::SharpUpper, d <= b, b);
            }
        }
    }
    for n in 0..end {
        let delta = step_depth(path, n)? as i32;
        let l = path.steps[n] as f64;
        let (lo, hi) = (2f64.powi(delta - 1), 2f64.powi(delta + 1));
        if l < lo || l > hi {
            violations.push(Violation { condition: Condition::StepWindow, m: n, n: n + 1, measured: l, bound: if l < lo { lo } else { hi } });
        }
    }
    Ok(QuasigeodesicReport { lower_constant: lower, upper_constant: upper, sharpened, pairs, violations })
}

pub const RELATIVE_LOWER: f64 = 1.0 / 3.0;

pub fn relative_upper() -> f64 {
    2.0 / std::f64::consts::LN_2 + 1.0
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
    pub relative_length: f64,
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub skipped: bool,
}

impl RatioReport {
    pub fn holds(&self) -> bool {
        self.skipped || (self.ratio >= self.lower && self.ratio <= self.upper)
    }
}

/// `d_c(γ(a), γ(b)) / L` where `L` counts non-peripheral steps once and each
/// (clipped) excursion of length `ℓ` as `max(ln ℓ, 1)`.
pub fn relative_length_check<F>(spec: &GroupSpec, path: &RelativePath, a: usize, b: usize, length: F) -> Result<RatioReport>
where
    F: Fn(&Element) -> Result<u32>,
{
    let (a, b) = (a.min(b), a.max(b));
    if b > path.end() {
        return Err(Error::Domain(format!("parameter {b} outside [0, {}]", path.end())));
    }
    let mut l = 0.0;
    let mut n = a;
    while n < b {
        match path.excursion_at_step(n) {
            Some(e) => {
                let stop = e.end.min(b);
                let clipped: u64 = path.steps[n..stop].iter().sum();
                l += (clipped as f64).ln().max(1.0);
                n = stop;
            }
            None => {
                l += path.steps[n] as f64;
                n += 1;
            }
        }
    }
    let distance = if a == b { 0.0 } else { length(&spec.mul(&spec.inv(&path.points[a]), &path.points[b]))? as f64 };
    let skipped = l == 0.0;
    let ratio = if skipped { f64::NAN } else { distance / l };
    Ok(RatioReport { a, b, distance, relative_length: l, ratio, lower: RELATIVE_LOWER, upper: relative_upper(), skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partitions() {
        assert_eq!(ordered_partition(22).unwrap(), vec![1, 2, 4, 8, 4, 2, 1]);
        assert_eq!(ordered_partition(17).unwrap(), vec![1, 2, 11, 2, 1]);
        assert_eq!(ordered_partition(1).unwrap(), vec![1]);
        assert_eq!(ordered_partition(2).unwrap(), vec![2]);
        assert_eq!(ordered_partition(4).unwrap(), vec![1, 2, 1]);
        assert_eq!(ordered_partition(5).unwrap(), vec![1, 3, 1]);
        assert!(ordered_partition(0).is_err());
    }

    fn ints(n: usize) -> Vec<Element> {
        (0..=n).map(|i| Element(vec![0, i as i32])).collect()
    }

    #[test]
    fn depths() {
        let mut p = RelativePath::cayley(ints(10));
        assert_eq!(point_depth(&p, 4).unwrap(), 0);
        p.excursions.push(Excursion { start: 0, end: 5, peripheral: 0, open: None });
        assert_eq!(point_depth(&p, 2).unwrap(), 2);
        assert_eq!(point_depth(&p, 5).unwrap(), 0);
        assert_eq!(step_depth(&p, 0).unwrap(), 1);
        assert_eq!(step_depth(&p, 2).unwrap(), 3);
        assert_eq!(step_depth(&p, 4).unwrap(), 1);
        assert!(point_depth(&p, 11).is_err());
        let mut q = RelativePath::cayley(ints(20));
        q.excursions.push(Excursion { start: 0, end: 20, peripheral: 0, open: Some(OpenEnd::End) });
        assert_eq!(point_depth(&q, 10).unwrap(), 10);
    }

    #[test]
    fn reparametrize_blocks() {
        let mut p = RelativePath::cayley(ints(24));
        p.excursions.push(Excursion { start: 1, end: 23, peripheral: 0, open: None });
        let r = reparametrize(&p).unwrap();
        assert_eq!(r.steps, vec![1, 1, 2, 4, 8, 4, 2, 1, 1]);
        assert_eq!(r.excursions[0].start, 1);
        assert_eq!(r.excursions[0].end, 8);
        let mut w = RelativePath::cayley(ints(22));
        w.excursions.push(Excursion { start: 0, end: 22, peripheral: 0, open: None });
        assert_eq!(reparametrize(&w).unwrap_err(), Error::WhollyPeripheral);
        let mut o = RelativePath::cayley(ints(12));
        o.excursions.push(Excursion { start: 2, end: 12, peripheral: 0, open: Some(OpenEnd::End) });
        let r = reparametrize(&o).unwrap();
        assert_eq!(r.steps, vec![1, 1, 1, 2, 4]);
        let mut s = RelativePath::cayley(ints(12));
        s.excursions.push(Excursion { start: 0, end: 10, peripheral: 0, open: Some(OpenEnd::Start) });
        let r = reparametrize(&s).unwrap();
        assert_eq!(r.steps, vec![4, 2, 1, 1, 1]);
        assert_eq!(r.points[0], Element(vec![0, 3]));
    }
}
