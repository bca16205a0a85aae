//! Combinatorial horoballs and the cusped space.
//!
//! A horoball over a graph `Λ` has vertices `Λ × ℤ≥0`; `(v,k)` and `(w,k)`
//! are joined when `0 < d_Λ(v,w) ≤ 2^k`, and `(v,k)`, `(v,k+1)` are always
//! joined. The cusped space glues one horoball over every peripheral coset
//! onto the Cayley graph along level 0.

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{Element, GroupSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Horizontal,
    Vertical,
}

/// `(2/ln 2)·ln L` and that plus one.
pub fn peripheral_cusped_length_bounds(l: i64) -> Result<(f64, f64)> {
    if l <= 0 {
        return Err(Error::Domain(format!("peripheral length must be positive, got {l}")));
    }
    let lo = 2.0 * (l as f64).log2();
    Ok((lo, lo + 1.0))
}

/// Shape of a preferred geodesic inside one horoball: climb to level `top`,
/// take `horizontal` steps there, descend.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Shape {
    pub top: u32,
    pub horizontal: u64,
    pub length: u64,
}

fn ceil_div_pow2(d: u64, m: u32) -> u64 {
    if m >= 63 {
        return u64::from(d > 0);
    }
    d.div_ceil(1u64 << m)
}

/// Horoball distance between `(v,k1)` and `(w,k2)` with `d_Λ(v,w) = d`,
/// optionally capped at level `cap`. Among optimal tops the lowest one with at
/// most three horizontal steps is chosen.
pub fn preferred_shape(k1: u32, k2: u32, d: u64, cap: Option<u32>) -> Shape {
    let lo = k1.max(k2);
    let hi = match cap {
        Some(c) => c.max(lo),
        None => lo + 64,
    };
    let mut all = Vec::new();
    for m in lo..=hi {
        let h = ceil_div_pow2(d, m);
        let length = (m - k1) as u64 + (m - k2) as u64 + h;
        all.push(Shape { top: m, horizontal: h, length });
        if h <= 1 {
            break;
        }
    }
    let best = all.iter().map(|s| s.length).min().expect("nonempty");
    all.iter()
        .find(|s| s.length == best && s.horizontal <= 3)
        .or_else(|| all.iter().find(|s| s.length == best))
        .copied()
        .expect("optimum")
}

pub fn horoball_distance(k1: u32, k2: u32, d: u64) -> u64 {
    preferred_shape(k1, k2, d, None).length
}

/// A horoball over a finite connected base graph, truncated at `depth`.
#[derive(Clone, Debug)]
pub struct HoroballFragment {
    depth: u32,
    adjacency: Vec<Vec<usize>>,
    base_dist: Vec<Vec<u32>>,
}

/// Vertex `(v, k)` of a horoball fragment.
pub type HVertex = (usize, u32);

impl HoroballFragment {
    pub fn new(base: &[Vec<usize>], depth: u32) -> Result<Self> {
        let n = base.len();
        if n == 0 {
            return Err(Error::EmptyBase);
        }
        if base.iter().flatten().any(|&w| w >= n) {
            return Err(Error::Input("base adjacency refers to a missing vertex".into()));
        }
        let mut base_dist = Vec::with_capacity(n);
        for s in 0..n {
            let mut dist = vec![u32::MAX; n];
            dist[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                for &w in &base[v] {
                    if dist[w] == u32::MAX {
                        dist[w] = dist[v] + 1;
                        q.push_back(w);
                    }
                }
            }
            if dist.contains(&u32::MAX) {
                return Err(Error::Input("horoball base is disconnected".into()));
            }
            base_dist.push(dist);
        }
        Ok(HoroballFragment { depth, adjacency: base.to_vec(), base_dist })
    }

    /// Path graph on `{0, …, n−1}`.
    pub fn segment(n: usize, depth: u32) -> Result<Self> {
        let base: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut a = Vec::new();
                if i > 0 {
                    a.push(i - 1);
                }
                if i + 1 < n {
                    a.push(i + 1);
                }
                a
            })
            .collect();
        Self::new(&base, depth)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn base_len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn base_distance(&self, v: usize, w: usize) -> u32 {
        self.base_dist[v][w]
    }

    pub fn num_vertices(&self) -> usize {
        self.base_len() * (self.depth as usize + 1)
    }

    pub fn index(&self, (v, k): HVertex) -> usize {
        v * (self.depth as usize + 1) + k as usize
    }

    pub fn vertex(&self, i: usize) -> HVertex {
        let w = self.depth as usize + 1;
        (i / w, (i % w) as u32)
    }

    pub fn neighbors(&self, (v, k): HVertex) -> Vec<(HVertex, EdgeKind)> {
        let mut out = Vec::new();
        if k > 0 {
            out.push(((v, k - 1), EdgeKind::Vertical));
        }
        if k < self.depth {
            out.push(((v, k + 1), EdgeKind::Vertical));
        }
        let span = 1u64 << k.min(62);
        for (w, &d) in self.base_dist[v].iter().enumerate() {
            if d > 0 && d as u64 <= span {
                out.push(((w, k), EdgeKind::Horizontal));
            }
        }
        out
    }

    /// Every edge once, as `(lower index, higher index, kind)`.
    pub fn edges(&self) -> Vec<(HVertex, HVertex, EdgeKind)> {
        let mut out = Vec::new();
        for i in 0..self.num_vertices() {
            let x = self.vertex(i);
            for (y, kind) in self.neighbors(x) {
                if self.index(y) > i {
                    out.push((x, y, kind));
                }
            }
        }
        out
    }

    /// Breadth-first distances from `src` to every vertex.
    pub fn bfs(&self, src: HVertex) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.num_vertices()];
        dist[self.index(src)] = 0;
        let mut q = VecDeque::from([src]);
        while let Some(x) = q.pop_front() {
            let dx = dist[self.index(x)];
            for (y, _) in self.neighbors(x) {
                let j = self.index(y);
                if dist[j] == u32::MAX {
                    dist[j] = dx + 1;
                    q.push_back(y);
                }
            }
        }
        dist
    }

    pub fn distance(&self, x: HVertex, y: HVertex) -> u32 {
        self.bfs(x)[self.index(y)]
    }

    /// A base geodesic from `v` to `w` (lowest-index predecessor at each step).
    pub fn base_geodesic(&self, v: usize, w: usize) -> Vec<usize> {
        let mut path = vec![w];
        let mut cur = w;
        while cur != v {
            let d = self.base_dist[v][cur];
            cur = *self.adjacency[cur]
                .iter()
                .filter(|&&u| self.base_dist[v][u] + 1 == d)
                .min()
                .expect("predecessor");
            path.push(cur);
        }
        path.reverse();
        path
    }

    pub fn preferred_geodesic(&self, x: HVertex, y: HVertex) -> Vec<HVertex> {
        let d = self.base_dist[x.0][y.0] as u64;
        let shape = preferred_shape(x.1, y.1, d, Some(self.depth));
        let line = self.base_geodesic(x.0, y.0);
        let mut out = Vec::new();
        for k in x.1..=shape.top {
            out.push((x.0, k));
        }
        let step = 1u64 << shape.top.min(62);
        let mut pos = 0u64;
        while pos < d {
            pos = (pos + step).min(d);
            out.push((line[pos as usize], shape.top));
        }
        for k in (y.1..shape.top).rev() {
            out.push((y.0, k));
        }
        out
    }
}

/// True when consecutive vertices are adjacent and the path climbs, crosses
/// at most three times and descends.
pub fn is_preferred_shape(path: &[HVertex]) -> bool {
    let levels: Vec<u32> = path.iter().map(|v| v.1).collect();
    let mut phase = 0;
    let mut horizontal = 0;
    for w in levels.windows(2) {
        let p = match w[1].cmp(&w[0]) {
            std::cmp::Ordering::Greater => 0,
            std::cmp::Ordering::Equal => 1,
            std::cmp::Ordering::Less => 2,
        };
        if p < phase {
            return false;
        }
        phase = p;
        if p == 1 {
            horizontal += 1;
        }
    }
    horizontal <= 3
}

/// Vertex of the cusped space. Level-0 vertices carry no peripheral tag; a
/// vertex at level `k ≥ 1` lies in the horoball over `element·P_p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Vertex {
    pub element: Element,
    pub level: u32,
    pub peripheral: Option<usize>,
}

impl Vertex {
    pub fn group(element: Element) -> Self {
        Vertex { element, level: 0, peripheral: None }
    }

    pub fn identity() -> Self {
        Self::group(Element::identity())
    }
}

/// Horoball depth used when none is given.
pub fn auto_depth(radius: u32) -> u32 {
    radius.max(1)
}

/// Neighbor oracle for the cusped space `X(Γ, 𝒫, S)` truncated at `depth`.
pub struct CuspedSpace<'a> {
    pub spec: &'a GroupSpec,
    pub depth: u32,
    /// Per peripheral: nonzero elements sorted by `|·|_P`, up to `2^{max level}`.
    fans: Vec<Vec<(u64, Element)>>,
}

fn l1_sphere(rank: usize, r: i64, out: &mut Vec<Vec<i64>>) {
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
    rec(rank, r, &mut Vec::new(), out);
}

impl<'a> CuspedSpace<'a> {
    /// `fan_level` bounds the level whose horizontal edges are ever enumerated.
    pub fn new(spec: &'a GroupSpec, depth: u32, fan_level: u32) -> Self {
        let top = depth.min(fan_level);
        let fans = spec
            .peripherals
            .iter()
            .map(|p| {
                let reach = 1i64 << top.min(40);
                let mut out = Vec::new();
                for r in 1..=reach {
                    let mut coords = Vec::new();
                    l1_sphere(p.rank(), r, &mut coords);
                    for c in coords {
                        out.push((r as u64, p.element(&spec.model, &c)));
                    }
                }
                out
            })
            .collect();
        CuspedSpace { spec, depth, fans }
    }

    /// Space for balls of cusped radius `radius`; the automatic depth is
    /// `radius`, which the centre-to-element geodesics never exceed.
    pub fn for_radius(spec: &'a GroupSpec, radius: u32, depth: Option<u32>) -> Self {
        let depth = depth.unwrap_or_else(|| auto_depth(radius));
        Self::new(spec, depth, depth)
    }

    /// Neighbors in a fixed order: Cayley edges by generator index, then
    /// up-edges by peripheral; in a horoball, down, up, then horizontal moves
    /// by increasing peripheral length.
    pub fn neighbors(&self, v: &Vertex) -> Vec<(Vertex, EdgeKind)> {
        let mut out = Vec::new();
        match v.peripheral {
            None => {
                for g in &self.spec.values {
                    out.push((Vertex::group(self.spec.mul(&v.element, g)), EdgeKind::Horizontal));
                }
                if self.depth > 0 {
                    for p in 0..self.spec.peripherals.len() {
                        out.push((Vertex { element: v.element.clone(), level: 1, peripheral: Some(p) }, EdgeKind::Vertical));
                    }
                }
            }
            Some(p) => {
                let down = if v.level == 1 {
                    Vertex::group(v.element.clone())
                } else {
                    Vertex { element: v.element.clone(), level: v.level - 1, peripheral: Some(p) }
                };
                out.push((down, EdgeKind::Vertical));
                if v.level < self.depth {
                    out.push((Vertex { element: v.element.clone(), level: v.level + 1, peripheral: Some(p) }, EdgeKind::Vertical));
                }
                let span = 1u64 << v.level.min(62);
                for (norm, c) in &self.fans[p] {
                    if *norm > span {
                        break;
                    }
                    out.push((
                        Vertex { element: self.spec.mul(&v.element, c), level: v.level, peripheral: Some(p) },
                        EdgeKind::Horizontal,
                    ));
                }
            }
        }
        out
    }

    /// All vertices within `radius` of `source`, by breadth-first search.
    pub fn ball(&self, source: Vertex, radius: u32) -> CuspedGraph {
        let mut vertices = vec![source.clone()];
        let mut dist = vec![0u32];
        let mut index = HashMap::new();
        index.insert(source, 0usize);
        let mut head = 0;
        while head < vertices.len() {
            let d = dist[head];
            if d < radius {
                let v = vertices[head].clone();
                for (w, _) in self.neighbors(&v) {
                    if !index.contains_key(&w) {
                        index.insert(w.clone(), vertices.len());
                        vertices.push(w);
                        dist.push(d + 1);
                    }
                }
            }
            head += 1;
        }
        CuspedGraph { radius, depth: self.depth, vertices, dist, index }
    }

    /// Distance by a fresh search from `u`, failing past `radius`.
    pub fn distance(&self, u: &Vertex, v: &Vertex, radius: u32) -> Result<u32> {
        if u == v {
            return Ok(0);
        }
        let g = self.ball(u.clone(), radius);
        g.dist_to(v).ok_or(Error::Disconnected { radius, depth: self.depth })
    }
}

/// A breadth-first ball in the cusped space around its first vertex.
#[derive(Clone, Debug)]
pub struct CuspedGraph {
    pub radius: u32,
    pub depth: u32,
    pub vertices: Vec<Vertex>,
    pub dist: Vec<u32>,
    index: HashMap<Vertex, usize>,
}

impl CuspedGraph {
    pub fn source(&self) -> &Vertex {
        &self.vertices[0]
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn index_of(&self, v: &Vertex) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn dist_to(&self, v: &Vertex) -> Option<u32> {
        self.index_of(v).map(|i| self.dist[i])
    }

    /// Level-0 distances are exact when no geodesic of length `≤ radius`
    /// between group elements climbs above the truncation.
    pub fn certifies_group_distances(&self) -> bool {
        self.depth >= self.radius / 2
    }

    /// `|x|_c` for a group element, when the ball is centred at the identity.
    pub fn length(&self, x: &Element) -> Result<u32> {
        if self.source() != &Vertex::identity() {
            return Err(Error::Invalid("ball is not centred at the identity".into()));
        }
        self.dist_to(&Vertex::group(x.clone()))
            .ok_or_else(|| Error::Truncation(format!("element beyond cusped radius {}", self.radius)))
    }

    /// Group elements in the ball, with their cusped lengths, in BFS order.
    pub fn group_elements(&self) -> impl Iterator<Item = (&Element, u32)> {
        self.vertices.iter().zip(&self.dist).filter(|(v, _)| v.level == 0).map(|(v, &d)| (&v.element, d))
    }

    /// Cusped distance, by left translation for the identity-centred ball.
    pub fn cusped_distance(&self, spec: &GroupSpec, u: &Vertex, v: &Vertex) -> Result<u32> {
        if u == v {
            return Ok(0);
        }
        if u == self.source() {
            return self.dist_to(v).ok_or(Error::Disconnected { radius: self.radius, depth: self.depth });
        }
        if self.source() == &Vertex::identity() && u.level == 0 {
            let t = spec.inv(&u.element);
            let w = Vertex { element: spec.mul(&t, &v.element), level: v.level, peripheral: v.peripheral };
            return self.dist_to(&w).ok_or(Error::Disconnected { radius: self.radius, depth: self.depth });
        }
        if v == self.source() {
            return self.cusped_distance(spec, v, u);
        }
        Err(Error::Truncation("pair not reachable from the ball centre; search from the vertex".into()))
    }

    /// Edges between ball vertices, each once.
    pub fn edges(&self, space: &CuspedSpace<'_>) -> Vec<(usize, usize, EdgeKind)> {
        let mut out = Vec::new();
        for (i, v) in self.vertices.iter().enumerate() {
            for (w, kind) in space.neighbors(v) {
                if let Some(j) = self.index_of(&w) {
                    if j > i {
                        out.push((i, j, kind));
                    }
                }
            }
        }
        out
    }

    /// A geodesic from the centre to `target`, choosing uniformly among
    /// predecessors at each step back.
    pub fn random_geodesic<R: Rng>(&self, space: &CuspedSpace<'_>, target: &Vertex, rng: &mut R) -> Result<Vec<Vertex>> {
        let mut cur = self.index_of(target).ok_or(Error::Disconnected { radius: self.radius, depth: self.depth })?;
        let mut path = vec![self.vertices[cur].clone()];
        while self.dist[cur] > 0 {
            let want = self.dist[cur] - 1;
            let preds: Vec<usize> = space
                .neighbors(&self.vertices[cur])
                .into_iter()
                .filter_map(|(w, _)| self.index_of(&w))
                .filter(|&j| self.dist[j] == want)
                .collect();
            cur = preds[rng.gen_range(0..preds.len())];
            path.push(self.vertices[cur].clone());
        }
        path.reverse();
        Ok(path)
    }

    /// Deterministic geodesic: first predecessor in neighbor order.
    pub fn geodesic(&self, space: &CuspedSpace<'_>, target: &Vertex) -> Result<Vec<Vertex>> {
        let mut cur = self.index_of(target).ok_or(Error::Disconnected { radius: self.radius, depth: self.depth })?;
        let mut path = vec![self.vertices[cur].clone()];
        while self.dist[cur] > 0 {
            let want = self.dist[cur] - 1;
            cur = space
                .neighbors(&self.vertices[cur])
                .into_iter()
                .filter_map(|(w, _)| self.index_of(&w))
                .find(|&j| self.dist[j] == want)
                .expect("BFS predecessor");
            path.push(self.vertices[cur].clone());
        }
        path.reverse();
        Ok(path)
    }
}

/// Horoball id of a vertex: peripheral index and canonical coset
/// representative, or `None` at level 0.
pub fn horoball_id(spec: &GroupSpec, v: &Vertex) -> Option<(usize, Element)> {
    v.peripheral.map(|p| (p, spec.coset_id(&v.element, p)))
}

/// Preferred geodesic between two vertices of the horoball over `x·P_p`.
/// Level-0 endpoints must lie in that coset.
pub fn preferred_geodesic(spec: &GroupSpec, p: usize, x: &Vertex, y: &Vertex) -> Result<Vec<Vertex>> {
    for v in [x, y] {
        if v.peripheral.is_some_and(|q| q != p) {
            return Err(Error::DifferentHoroballs);
        }
    }
    let per = &spec.peripherals[p];
    let delta = spec.mul(&spec.inv(&x.element), &y.element);
    let coords = per.coords(&spec.model, &delta).ok_or(Error::DifferentHoroballs)?;
    let d: u64 = coords.iter().map(|c| c.unsigned_abs()).sum();
    let shape = preferred_shape(x.level, y.level, d, None);
    let at = |e: &Element, k: u32| {
        if k == 0 {
            Vertex::group(e.clone())
        } else {
            Vertex { element: e.clone(), level: k, peripheral: Some(p) }
        }
    };
    let mut out = Vec::new();
    for k in x.level..=shape.top {
        out.push(at(&x.element, k));
    }
    // Walk the ℓ¹ lattice path coordinate by coordinate, 2^top at a time.
    let step = 1u64 << shape.top.min(62);
    let mut done = 0u64;
    while done < d {
        done = (done + step).min(d);
        let mut left = done as i64;
        let partial: Vec<i64> = coords
            .iter()
            .map(|&c| {
                let take = left.min(c.abs());
                left -= take;
                take * c.signum()
            })
            .collect();
        out.push(at(&spec.mul(&x.element, &per.element(&spec.model, &partial)), shape.top));
    }
    for k in (y.level..shape.top).rev() {
        out.push(at(&y.element, k));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_edges() {
        let h = HoroballFragment::segment(3, 1).unwrap();
        let level1: Vec<_> = h
            .edges()
            .into_iter()
            .filter(|(a, b, k)| *k == EdgeKind::Horizontal && a.1 == 1 && b.1 == 1)
            .map(|(a, b, _)| (a.0.min(b.0), a.0.max(b.0)))
            .collect();
        let mut l = level1.clone();
        l.sort();
        assert_eq!(l, vec![(0, 1), (0, 2), (1, 2)]);
        let single = HoroballFragment::segment(1, 3).unwrap();
        assert!(single.edges().iter().all(|e| e.2 == EdgeKind::Vertical));
        assert_eq!(single.edges().len(), 3);
        let h8 = HoroballFragment::segment(9, 3).unwrap();
        assert!(h8.neighbors((0, 3)).contains(&((8, 3), EdgeKind::Horizontal)));
        assert!(!h8.neighbors((0, 2)).contains(&((8, 2), EdgeKind::Horizontal)));
        assert_eq!(HoroballFragment::new(&[], 2).unwrap_err(), Error::EmptyBase);
    }

    #[test]
    fn distances_and_shapes() {
        let h = HoroballFragment::segment(64, 6).unwrap();
        assert_eq!(h.distance((0, 0), (8, 0)), 6);
        assert_eq!(h.distance((0, 0), (1, 0)), 1);
        let g = h.preferred_geodesic((0, 0), (8, 0));
        assert_eq!(g, vec![(0, 0), (0, 1), (0, 2), (4, 2), (8, 2), (8, 1), (8, 0)]);
        assert_eq!(h.preferred_geodesic((0, 0), (0, 5)).len(), 6);
        let g = h.preferred_geodesic((0, 1), (3, 1));
        assert!(is_preferred_shape(&g));
        assert_eq!(g.len() as u32 - 1, h.distance((0, 1), (3, 1)));
        let (lo, hi) = peripheral_cusped_length_bounds(8).unwrap();
        assert_eq!((lo, hi), (6.0, 7.0));
        assert_eq!(peripheral_cusped_length_bounds(1).unwrap(), (0.0, 1.0));
        assert!(peripheral_cusped_length_bounds(0).is_err());
    }

    #[test]
    fn l1_spheres() {
        let mut v = Vec::new();
        l1_sphere(2, 2, &mut v);
        assert_eq!(v.len(), 8);
        let mut w = Vec::new();
        l1_sphere(1, 3, &mut w);
        assert_eq!(w, vec![vec![-3], vec![3]]);
    }
}
