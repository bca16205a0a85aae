//! Groups with solvable word problem: free products of free abelian factors
//! (free groups and ℤᵈ are the two extremes), a symmetric generating set that
//! may contain derived generators such as commutators, and peripheral
//! subgroups isomorphic to ℤᵐ.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normal form of an element: a flat list of syllables `[factor, e₁, …, e_r]`
/// with consecutive syllables in distinct factors and no zero syllable.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Element(pub Vec<i32>);

impl Element {
    pub fn identity() -> Self {
        Element(Vec::new())
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }
}

/// Free product of free abelian groups `ℤ^{r_0} * ℤ^{r_1} * …`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    ranks: Vec<usize>,
}

impl Model {
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        if ranks.iter().any(|&r| r == 0) {
            return Err(Error::Input("factor of rank 0".into()));
        }
        Ok(Model { ranks })
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// Syllables as `(factor, exponents)`.
    pub fn syllables<'a>(&'a self, x: &'a Element) -> impl Iterator<Item = (usize, &'a [i32])> + 'a {
        let mut pos = 0;
        std::iter::from_fn(move || {
            if pos >= x.0.len() {
                return None;
            }
            let f = x.0[pos] as usize;
            let r = self.ranks[f];
            let e = &x.0[pos + 1..pos + 1 + r];
            pos += 1 + r;
            Some((f, e))
        })
    }

    fn last_start(&self, x: &[i32]) -> Option<usize> {
        let mut pos = 0;
        let mut last = None;
        while pos < x.len() {
            last = Some(pos);
            pos += 1 + self.ranks[x[pos] as usize];
        }
        last
    }

    fn push(&self, out: &mut Vec<i32>, f: usize, e: &[i32]) {
        if let Some(s) = self.last_start(out) {
            if out[s] as usize == f {
                for (i, v) in e.iter().enumerate() {
                    out[s + 1 + i] += v;
                }
                if out[s + 1..].iter().all(|&v| v == 0) {
                    out.truncate(s);
                }
                return;
            }
        }
        if e.iter().any(|&v| v != 0) {
            out.push(f as i32);
            out.extend_from_slice(e);
        }
    }

    pub fn mul(&self, x: &Element, y: &Element) -> Element {
        let mut out = x.0.clone();
        for (f, e) in self.syllables(y) {
            self.push(&mut out, f, e);
        }
        Element(out)
    }

    pub fn inv(&self, x: &Element) -> Element {
        let syl: Vec<(usize, &[i32])> = self.syllables(x).collect();
        let mut out = Vec::with_capacity(x.0.len());
        for (f, e) in syl.into_iter().rev() {
            out.push(f as i32);
            out.extend(e.iter().map(|v| -v));
        }
        Element(out)
    }

    /// `x⁻¹ y`.
    pub fn between(&self, x: &Element, y: &Element) -> Element {
        self.mul(&self.inv(x), y)
    }

    pub fn syllable(&self, f: usize, e: &[i32]) -> Element {
        let mut out = Vec::new();
        self.push(&mut out, f, e);
        Element(out)
    }

    /// Word length in the standard basis of the factors.
    pub fn base_length(&self, x: &Element) -> u64 {
        self.syllables(x).map(|(_, e)| e.iter().map(|v| v.unsigned_abs() as u64).sum::<u64>()).sum()
    }

    /// Shortlex key: base length first, then the flat encoding.
    pub fn shortlex_key(&self, x: &Element) -> (u64, Vec<i32>) {
        (self.base_length(x), x.0.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalForm {
    Free,
    Abelian,
    FreeProduct,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PeripheralKind {
    /// `⟨w⟩` for a single element `w` of infinite order.
    Cyclic(Element),
    /// Span of some coordinate axes of one abelian factor.
    Axes { factor: usize, axes: Vec<usize> },
}

/// A peripheral subgroup `P ≅ ℤᵐ`, with `d_Λ` the ℓ¹ metric in the
/// coordinates given by its generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Peripheral {
    /// Generator indices (closed under inversion).
    pub generators: Vec<usize>,
    /// One generator of each inverse pair; coordinate `i` counts `basis[i]`.
    pub basis: Vec<usize>,
    /// Sign of each basis generator relative to the kind's positive direction.
    signs: Vec<i32>,
    pub kind: PeripheralKind,
}

impl Peripheral {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Coordinates of `x` in `P`, or `None` when `x ∉ P`.
    pub fn coords(&self, model: &Model, x: &Element) -> Option<Vec<i64>> {
        match &self.kind {
            PeripheralKind::Cyclic(w) => {
                if x.is_identity() {
                    return Some(vec![0]);
                }
                let len = model.base_length(x) as i64;
                let wl = model.base_length(w) as i64;
                let winv = model.inv(w);
                // |wⁿ| ≥ |n| in a torsion-free free product of abelian groups.
                for n in 1..=len.max(1) {
                    if n * wl > 2 * len + 2 * wl && n > len {
                        break;
                    }
                    let p = pow(model, w, n as u64);
                    if &p == x {
                        return Some(vec![n * self.signs[0] as i64]);
                    }
                    let q = pow(model, &winv, n as u64);
                    if &q == x {
                        return Some(vec![-n * self.signs[0] as i64]);
                    }
                }
                None
            }
            PeripheralKind::Axes { factor, axes } => {
                if x.is_identity() {
                    return Some(vec![0; axes.len()]);
                }
                let mut it = model.syllables(x);
                let (f, e) = it.next()?;
                if it.next().is_some() || f != *factor {
                    return None;
                }
                for (i, &v) in e.iter().enumerate() {
                    if v != 0 && !axes.contains(&i) {
                        return None;
                    }
                }
                Some(axes.iter().zip(&self.signs).map(|(&a, &s)| e[a] as i64 * s as i64).collect())
            }
        }
    }

    pub fn element(&self, model: &Model, c: &[i64]) -> Element {
        match &self.kind {
            PeripheralKind::Cyclic(w) => {
                let n = c[0] * self.signs[0] as i64;
                if n >= 0 {
                    pow(model, w, n as u64)
                } else {
                    pow(model, &model.inv(w), (-n) as u64)
                }
            }
            PeripheralKind::Axes { factor, axes } => {
                let mut e = vec![0i32; model.ranks()[*factor]];
                for ((&a, &s), &v) in axes.iter().zip(&self.signs).zip(c) {
                    e[a] = (v * s as i64) as i32;
                }
                model.syllable(*factor, &e)
            }
        }
    }

    /// Canonical (shortlex-least) representative of the coset `xP`.
    pub fn coset_rep(&self, model: &Model, x: &Element) -> Element {
        match &self.kind {
            PeripheralKind::Cyclic(w) => {
                let len = model.base_length(x) as i64;
                let wl = model.base_length(w).max(1) as i64;
                let reach = 2 * len / wl + 2;
                let mut best = x.clone();
                let mut key = model.shortlex_key(x);
                for n in -reach..=reach {
                    let y = model.mul(x, &self.element(model, &[n * self.signs[0] as i64]));
                    let k = model.shortlex_key(&y);
                    if k < key {
                        key = k;
                        best = y;
                    }
                }
                best
            }
            PeripheralKind::Axes { factor, axes } => {
                let syl: Vec<(usize, Vec<i32>)> = model.syllables(x).map(|(f, e)| (f, e.to_vec())).collect();
                let mut out = Vec::new();
                let n = syl.len();
                for (i, (f, mut e)) in syl.into_iter().enumerate() {
                    if i + 1 == n && f == *factor {
                        for &a in axes {
                            e[a] = 0;
                        }
                    }
                    model.push(&mut out, f, &e);
                }
                Element(out)
            }
        }
    }

    pub fn same_coset(&self, model: &Model, x: &Element, y: &Element) -> bool {
        self.coords(model, &model.between(x, y)).is_some()
    }
}

pub fn pow(model: &Model, w: &Element, n: u64) -> Element {
    let mut out = Element::identity();
    for _ in 0..n {
        out = model.mul(&out, w);
    }
    out
}

/// On-disk description of a group.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GroupFile {
    pub generators: Vec<String>,
    pub inverses: Vec<String>,
    #[serde(default)]
    pub peripherals: Vec<Vec<String>>,
    #[serde(default)]
    pub normal_form: Option<NormalForm>,
    /// Derived generators as space-separated words in other generators.
    #[serde(default)]
    pub definitions: BTreeMap<String, String>,
    /// Factor blocks for `free_product`: lists of positive base generators.
    #[serde(default)]
    pub factors: Vec<Vec<String>>,
}

/// `(Γ, 𝒫, S)`: generating set `S = S⁻¹`, element values in the normal form
/// model, and peripheral subgroups generated by subsets of `S`.
#[derive(Clone, Debug)]
pub struct GroupSpec {
    pub model: Model,
    pub names: Vec<String>,
    pub inverse: Vec<usize>,
    pub values: Vec<Element>,
    pub peripherals: Vec<Peripheral>,
    pub normal_form: NormalForm,
}

impl GroupSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: GroupFile = toml::from_str(text).map_err(|e| Error::Input(e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
    }

    pub fn from_file(f: &GroupFile) -> Result<Self> {
        let n = f.generators.len();
        if f.inverses.len() != n {
            return Err(Error::Input("`inverses` must list one entry per generator".into()));
        }
        let index: BTreeMap<&str, usize> = f.generators.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        if index.len() != n {
            return Err(Error::Input("duplicate generator names".into()));
        }
        let lookup = |s: &str| index.get(s).copied().ok_or_else(|| Error::Input(format!("unknown generator `{s}`")));
        let mut inverse = vec![0; n];
        for (i, s) in f.inverses.iter().enumerate() {
            inverse[i] = lookup(s)?;
        }
        for i in 0..n {
            if inverse[inverse[i]] != i {
                return Err(Error::Input(format!("inverse pairing not an involution at `{}`", f.generators[i])));
            }
        }
        for name in f.definitions.keys() {
            lookup(name)?;
        }
        let is_derived = |i: usize| {
            f.definitions.contains_key(&f.generators[i]) || f.definitions.contains_key(&f.generators[inverse[i]])
        };
        // One positive representative per inverse pair of base generators.
        let positives: Vec<usize> = (0..n).filter(|&i| !is_derived(i) && inverse[i] >= i).collect();
        let nf = f.normal_form.unwrap_or(NormalForm::Free);
        let mut place = vec![None; n];
        let ranks = match nf {
            NormalForm::Free => {
                for (k, &i) in positives.iter().enumerate() {
                    place[i] = Some((k, 0));
                }
                vec![1; positives.len()]
            }
            NormalForm::Abelian => {
                for (k, &i) in positives.iter().enumerate() {
                    place[i] = Some((0, k));
                }
                if positives.is_empty() { vec![] } else { vec![positives.len()] }
            }
            NormalForm::FreeProduct => {
                let mut ranks = Vec::new();
                for (fi, block) in f.factors.iter().enumerate() {
                    for (k, s) in block.iter().enumerate() {
                        let i = lookup(s)?;
                        if !positives.contains(&i) {
                            return Err(Error::Input(format!("factor entry `{s}` is not a positive base generator")));
                        }
                        place[i] = Some((fi, k));
                    }
                    ranks.push(block.len());
                }
                if let Some(&i) = positives.iter().find(|&&i| place[i].is_none()) {
                    return Err(Error::Input(format!("generator `{}` missing from `factors`", f.generators[i])));
                }
                ranks
            }
        };
        let model = Model::new(ranks)?;
        let mut values = vec![None; n];
        for &i in &positives {
            let (fac, ax) = place[i].expect("placed");
            let mut e = vec![0; model.ranks()[fac]];
            e[ax] = 1;
            let v = model.syllable(fac, &e);
            values[inverse[i]] = Some(model.inv(&v));
            values[i] = Some(v);
        }
        // Derived generators may refer to earlier definitions; resolve iteratively.
        let mut pending: Vec<(&String, &String)> = f.definitions.iter().collect();
        while !pending.is_empty() {
            let before = pending.len();
            let mut rest = Vec::new();
            for (name, word) in pending {
                let i = lookup(name)?;
                let mut acc = Element::identity();
                let mut ok = true;
                for tok in word.split_whitespace() {
                    let j = lookup(tok)?;
                    match &values[j] {
                        Some(v) => acc = model.mul(&acc, v),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    if acc.is_identity() {
                        return Err(Error::Input(format!("`{name}` defines the identity")));
                    }
                    if let Some(v) = &values[i] {
                        if v != &acc {
                            return Err(Error::Input(format!("conflicting definitions for `{name}`")));
                        }
                    }
                    values[inverse[i]] = Some(model.inv(&acc));
                    values[i] = Some(acc);
                } else {
                    rest.push((name, word));
                }
            }
            if rest.len() == before {
                return Err(Error::Input("circular generator definitions".into()));
            }
            pending = rest;
        }
        let values: Vec<Element> = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| Error::Input(format!("no value for `{}`", f.generators[i]))))
            .collect::<Result<_>>()?;
        let mut spec = GroupSpec {
            model,
            names: f.generators.clone(),
            inverse,
            values,
            peripherals: Vec::new(),
            normal_form: nf,
        };
        for p in &f.peripherals {
            let gens = p.iter().map(|s| lookup(s)).collect::<Result<Vec<_>>>()?;
            spec.add_peripheral(gens)?;
        }
        Ok(spec)
    }

    /// Declares the subgroup generated by `gens` peripheral.
    pub fn add_peripheral(&mut self, mut gens: Vec<usize>) -> Result<()> {
        gens.sort_unstable();
        gens.dedup();
        if gens.is_empty() {
            return Err(Error::Input("empty peripheral".into()));
        }
        for &g in &gens {
            if !gens.contains(&self.inverse[g]) {
                return Err(Error::Input(format!("peripheral not closed under inversion at `{}`", self.names[g])));
            }
        }
        let basis: Vec<usize> = gens.iter().copied().filter(|&g| self.inverse[g] >= g).collect();
        let m = &self.model;
        let single: Vec<(usize, Vec<i32>)> = basis
            .iter()
            .filter_map(|&g| {
                let mut it = m.syllables(&self.values[g]);
                let first = it.next()?;
                if it.next().is_some() {
                    return None;
                }
                let nz: Vec<usize> = (0..first.1.len()).filter(|&i| first.1[i] != 0).collect();
                (nz.len() == 1 && first.1[nz[0]].abs() == 1).then(|| (first.0, first.1.to_vec()))
            })
            .collect();
        let unsupported = || Error::Unsupported(format!("peripheral generated by {:?}", basis.iter().map(|&g| &self.names[g]).collect::<Vec<_>>()));
        let (kind, signs) = if single.len() == basis.len() && single.iter().all(|(f, _)| *f == single[0].0) {
            let factor = single[0].0;
            let mut axes = Vec::new();
            let mut signs = Vec::new();
            for (_, e) in &single {
                let a = e.iter().position(|&v| v != 0).expect("unit");
                if axes.contains(&a) {
                    return Err(unsupported());
                }
                axes.push(a);
                signs.push(e[a]);
            }
            (PeripheralKind::Axes { factor, axes }, signs)
        } else if basis.len() == 1 {
            (PeripheralKind::Cyclic(self.values[basis[0]].clone()), vec![1])
        } else {
            return Err(unsupported());
        };
        self.peripherals.push(Peripheral { generators: gens, basis, signs, kind });
        Ok(())
    }

    pub fn num_generators(&self) -> usize {
        self.names.len()
    }

    pub fn generator(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Product of the generator values along a word.
    pub fn word(&self, letters: &[usize]) -> Element {
        letters.iter().fold(Element::identity(), |acc, &g| self.model.mul(&acc, &self.values[g]))
    }

    pub fn parse_word(&self, text: &str) -> Result<Vec<usize>> {
        text.split_whitespace()
            .map(|t| self.generator(t).ok_or_else(|| Error::Input(format!("unknown generator `{t}`"))))
            .collect()
    }

    pub fn mul(&self, x: &Element, y: &Element) -> Element {
        self.model.mul(x, y)
    }

    pub fn inv(&self, x: &Element) -> Element {
        self.model.inv(x)
    }

    /// A word in the positive base generators and their inverses spelling `x`.
    pub fn base_word(&self, x: &Element) -> Vec<usize> {
        let mut out = Vec::new();
        for (f, e) in self.model.syllables(x) {
            for (ax, &v) in e.iter().enumerate() {
                let unit = {
                    let mut u = vec![0; e.len()];
                    u[ax] = 1;
                    self.model.syllable(f, &u)
                };
                let g = (0..self.names.len()).find(|&g| self.values[g] == unit).expect("base generator");
                let g = if v < 0 { self.inverse[g] } else { g };
                out.extend(std::iter::repeat(g).take(v.unsigned_abs() as usize));
            }
        }
        out
    }

    /// Human-readable spelling in base generators, `"1"` for the identity.
    pub fn display(&self, x: &Element) -> String {
        let w = self.base_word(x);
        if w.is_empty() {
            return "1".into();
        }
        w.iter().map(|&g| self.names[g].as_str()).collect::<Vec<_>>().join(" ")
    }

    pub fn coset_id(&self, x: &Element, p: usize) -> Element {
        self.peripherals[p].coset_rep(&self.model, x)
    }

    pub fn free(names: &[&str]) -> Self {
        let mut gens = Vec::new();
        let mut invs = Vec::new();
        for n in names {
            let up = n.to_uppercase();
            gens.push(n.to_string());
            gens.push(up.clone());
            invs.push(up);
            invs.push(n.to_string());
        }
        let f = GroupFile {
            generators: gens,
            inverses: invs,
            peripherals: vec![],
            normal_form: Some(NormalForm::Free),
            definitions: BTreeMap::new(),
            factors: vec![],
        };
        Self::from_file(&f).expect("well-formed free group")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus() -> GroupSpec {
        GroupSpec::from_toml(
            r#"
            generators = ["a", "A", "b", "B", "c", "C"]
            inverses = ["A", "a", "B", "b", "C", "c"]
            peripherals = [["c", "C"]]
            [definitions]
            c = "a b A B"
            "#,
        )
        .unwrap()
    }

    #[test]
    fn free_reduction() {
        let g = GroupSpec::free(&["a", "b"]);
        let w = g.word(&g.parse_word("a b B A a").unwrap());
        assert_eq!(g.display(&w), "a");
        let x = g.word(&g.parse_word("a a b").unwrap());
        assert!(g.mul(&x, &g.inv(&x)).is_identity());
    }

    #[test]
    fn derived_commutator() {
        let g = torus();
        let c = g.values[g.generator("c").unwrap()].clone();
        assert_eq!(g.display(&c), "a b A B");
        assert_eq!(g.model.base_length(&pow(&g.model, &c, 3)), 12);
        let p = &g.peripherals[0];
        assert_eq!(p.coords(&g.model, &pow(&g.model, &c, 5)), Some(vec![5]));
        let cinv = g.inv(&c);
        assert_eq!(p.coords(&g.model, &pow(&g.model, &cinv, 2)), Some(vec![-2]));
        assert_eq!(p.coords(&g.model, &g.values[0]), None);
    }

    #[test]
    fn coset_ids() {
        let g = torus();
        let a = g.values[0].clone();
        let c = g.values[4].clone();
        let x = g.mul(&a, &pow(&g.model, &c, 3));
        assert_eq!(g.coset_id(&x, 0), a);
        let ff = GroupSpec::from_toml(
            r#"
            generators = ["a", "A", "b", "B"]
            inverses = ["A", "a", "B", "b"]
            peripherals = [["a", "A"]]
            "#,
        )
        .unwrap();
        let b = ff.values[2].clone();
        let ba3 = ff.word(&ff.parse_word("b a a a").unwrap());
        assert_eq!(ff.coset_id(&ba3, 0), b);
        assert_ne!(ff.coset_id(&b, 0), ff.coset_id(&Element::identity(), 0));
    }

    #[test]
    fn abelian_group() {
        let z2 = GroupSpec::from_toml(
            r#"
            normal_form = "abelian"
            generators = ["x", "X", "y", "Y"]
            inverses = ["X", "x", "Y", "y"]
            peripherals = [["x", "X", "y", "Y"]]
            "#,
        )
        .unwrap();
        let w = z2.word(&z2.parse_word("x y X x x Y").unwrap());
        assert_eq!(z2.model.base_length(&w), 2);
        assert_eq!(z2.peripherals[0].coords(&z2.model, &w), Some(vec![2, 0]));
    }

    #[test]
    fn bad_inverse_rejected() {
        let r = GroupSpec::from_toml(
            r#"
            generators = ["a", "A", "b"]
            inverses = ["A", "a", "a"]
            "#,
        );
        assert!(matches!(r, Err(Error::Input(_))));
    }
}
