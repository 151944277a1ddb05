//! Free graded-commutative differential graded algebras over `Q`.
//!
//! A [`Dga`] is the free graded-commutative algebra on a finite ordered list
//! of [`Generator`]s together with a degree `+1` differential given on the
//! generators and extended by the graded Leibniz rule
//!
//! ```text
//! d(ab) = (da) b + (-1)^{|a|} a (db)
//! ```
//!
//! Everything is truncated at `max_degree`: products and differentials
//! silently drop terms of higher total degree. Ranks at degree `k` are
//! exact as long as `max_degree >= k + 2`.

use std::collections::hash_map::DefaultHasher;
use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DgaError {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("duplicate generator name `{0}`")]
    DuplicateGenerator(String),
    #[error("generator `{0}` has degree 0; degrees must be >= 1")]
    ZeroDegree(String),
    #[error("operands belong to different algebras")]
    MixedOperands,
    #[error("d({name}) has a term of degree {found}, expected {expected}")]
    DifferentialDegree {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("d({name}) involves generator `{uses}` which does not precede it")]
    NotTriangular { name: String, uses: String },
    #[error("d(d({0})) != 0")]
    NotDifferential(String),
    #[error("odd generator `{0}` appears with exponent > 1")]
    OddSquare(String),
    #[error("degree {requested} exceeds truncation degree {max_degree}")]
    AboveTruncation { requested: usize, max_degree: usize },
    #[error("exponent vector has length {found}, expected {expected}")]
    ExponentLength { expected: usize, found: usize },
    #[error("malformed DGA json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, DgaError>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Generator {
    pub name: String,
    pub degree: usize,
}

impl Generator {
    pub fn new(name: impl Into<String>, degree: usize) -> Self {
        Self {
            name: name.into(),
            degree,
        }
    }

    pub fn is_odd(&self) -> bool {
        self.degree % 2 == 1
    }
}

/// Exponent vector indexed by generator position.
///
/// Ordering is lexicographic on the exponent vector; the canonical word for a
/// monomial lists generators in insertion order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one(n_generators: usize) -> Self {
        Monomial(vec![0; n_generators])
    }

    pub fn from_exponents(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn generator(n: usize, index: usize) -> Self {
        let mut e = vec![0; n];
        e[index] = 1;
        Monomial(e)
    }
}

/// Finite linear combination of monomials with exact rational coefficients.
///
/// Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    signature: u64,
    terms: BTreeMap<Monomial, BigRational>,
}

impl Element {
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        if self.signature != other.signature {
            return Err(DgaError::MixedOperands);
        }
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, c: &BigRational) -> Element {
        if c.is_zero() {
            return Element {
                signature: self.signature,
                terms: BTreeMap::new(),
            };
        }
        Element {
            signature: self.signature,
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.clone(), v * c))
                .collect(),
        }
    }

    pub fn neg(&self) -> Element {
        self.scale(&-BigRational::one())
    }
}

/// Sign and product of two monomials in canonical order.
///
/// Returns `None` when an odd generator would appear twice.
fn monomial_product(parity: &[bool], a: &Monomial, b: &Monomial) -> Option<(Monomial, bool)> {
    let mut negative = false;
    // odd generators of `a` strictly after index j, for each odd j in `b`
    let mut odd_in_a_after = 0u32;
    let n = parity.len();
    let mut exps = vec![0u32; n];
    for i in (0..n).rev() {
        if parity[i] {
            if a.0[i] > 0 && b.0[i] > 0 {
                return None;
            }
            if b.0[i] > 0 && odd_in_a_after % 2 == 1 {
                negative = !negative;
            }
            if a.0[i] > 0 {
                odd_in_a_after += 1;
            }
        }
        exps[i] = a.0[i] + b.0[i];
    }
    Some((Monomial(exps), negative))
}

/// Free graded-commutative DGA over `Q`, truncated at `max_degree`.
#[derive(Debug, Clone)]
pub struct Dga {
    generators: Vec<Generator>,
    diff: Vec<Element>,
    max_degree: usize,
    signature: u64,
    index: HashMap<String, usize>,
}

/// Raw polynomial: list of `(coefficient, exponent vector)`.
pub type RawPolynomial = Vec<(BigRational, Vec<u32>)>;

#[derive(Debug, Clone, Default)]
pub struct DgaBuilder {
    generators: Vec<Generator>,
    diffs: HashMap<String, RawPolynomial>,
    max_degree: usize,
}

impl DgaBuilder {
    pub fn new(max_degree: usize) -> Self {
        Self {
            max_degree,
            ..Default::default()
        }
    }

    pub fn generator(mut self, name: impl Into<String>, degree: usize) -> Self {
        self.generators.push(Generator::new(name, degree));
        self
    }

    /// Set `d(name)`. Exponent vectors refer to the full generator list and
    /// may be shorter than it (missing entries are zero).
    pub fn differential(mut self, name: impl Into<String>, poly: RawPolynomial) -> Self {
        self.diffs.insert(name.into(), poly);
        self
    }

    pub fn build(self) -> Result<Dga> {
        Dga::from_parts(self.generators, self.diffs, self.max_degree)
    }
}

fn signature_of(generators: &[Generator], max_degree: usize) -> u64 {
    let mut h = DefaultHasher::new();
    generators.hash(&mut h);
    max_degree.hash(&mut h);
    h.finish()
}

impl Dga {
    fn from_parts(
        generators: Vec<Generator>,
        mut diffs: HashMap<String, RawPolynomial>,
        max_degree: usize,
    ) -> Result<Dga> {
        let mut index = HashMap::new();
        for (i, g) in generators.iter().enumerate() {
            if g.degree == 0 {
                return Err(DgaError::ZeroDegree(g.name.clone()));
            }
            if index.insert(g.name.clone(), i).is_some() {
                return Err(DgaError::DuplicateGenerator(g.name.clone()));
            }
        }
        if let Some(name) = diffs.keys().find(|k| !index.contains_key(*k)) {
            return Err(DgaError::UnknownGenerator(name.clone()));
        }
        let signature = signature_of(&generators, max_degree);
        let n = generators.len();
        let mut dga = Dga {
            generators,
            diff: Vec::with_capacity(n),
            max_degree,
            signature,
            index,
        };
        for i in 0..n {
            let name = dga.generators[i].name.clone();
            let raw = diffs.remove(&name).unwrap_or_default();
            let mut e = dga.zero();
            for (c, mut exps) in raw {
                if exps.len() > n {
                    return Err(DgaError::ExponentLength {
                        expected: n,
                        found: exps.len(),
                    });
                }
                exps.resize(n, 0);
                for (j, &x) in exps.iter().enumerate() {
                    if x > 1 && dga.generators[j].is_odd() {
                        return Err(DgaError::OddSquare(dga.generators[j].name.clone()));
                    }
                    if x > 0 && j >= i {
                        return Err(DgaError::NotTriangular {
                            name,
                            uses: dga.generators[j].name.clone(),
                        });
                    }
                }
                let m = Monomial(exps);
                let deg = dga.monomial_degree(&m);
                if deg != dga.generators[i].degree + 1 {
                    return Err(DgaError::DifferentialDegree {
                        name,
                        expected: dga.generators[i].degree + 1,
                        found: deg,
                    });
                }
                if deg <= max_degree {
                    e.add_term(m, c);
                }
            }
            dga.diff.push(e);
        }
        for i in 0..n {
            let dd = dga.differentiate(&dga.diff[i].clone())?;
            if !dd.is_zero() {
                return Err(DgaError::NotDifferential(dga.generators[i].name.clone()));
            }
        }
        Ok(dga)
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn generator_index(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| DgaError::UnknownGenerator(name.to_string()))
    }

    pub fn has_zero_differential(&self) -> bool {
        self.diff.iter().all(Element::is_zero)
    }

    /// Differential of the `i`-th generator.
    pub fn generator_differential(&self, i: usize) -> &Element {
        &self.diff[i]
    }

    fn parity(&self) -> Vec<bool> {
        self.generators.iter().map(Generator::is_odd).collect()
    }

    pub fn monomial_degree(&self, m: &Monomial) -> usize {
        m.0.iter()
            .zip(&self.generators)
            .map(|(&e, g)| e as usize * g.degree)
            .sum()
    }

    pub fn zero(&self) -> Element {
        Element {
            signature: self.signature,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(&self) -> Element {
        self.constant(BigRational::one())
    }

    pub fn constant(&self, c: BigRational) -> Element {
        let mut e = self.zero();
        e.add_term(Monomial::one(self.generators.len()), c);
        e
    }

    /// Element for a single generator.
    pub fn gen(&self, name: &str) -> Result<Element> {
        let i = self.generator_index(name)?;
        Ok(self.gen_at(i))
    }

    pub(crate) fn gen_at(&self, i: usize) -> Element {
        self.monomial_element(Monomial::generator(self.generators.len(), i), BigRational::one())
    }

    /// Wraps `c * m`, dropping it if above the truncation degree.
    pub fn monomial_element(&self, m: Monomial, c: BigRational) -> Element {
        let mut e = self.zero();
        if m.0.len() == self.generators.len() && self.monomial_degree(&m) <= self.max_degree {
            e.add_term(m, c);
        }
        e
    }

    /// Build an element from raw terms (exponent vectors are validated).
    pub fn element(&self, raw: &[(BigRational, Vec<u32>)]) -> Result<Element> {
        let mut e = self.zero();
        let parity = self.parity();
        for (c, exps) in raw {
            if exps.len() != self.generators.len() {
                return Err(DgaError::ExponentLength {
                    expected: self.generators.len(),
                    found: exps.len(),
                });
            }
            if let Some(j) = (0..exps.len()).find(|&j| parity[j] && exps[j] > 1) {
                return Err(DgaError::OddSquare(self.generators[j].name.clone()));
            }
            let m = Monomial(exps.clone());
            if self.monomial_degree(&m) <= self.max_degree {
                e.add_term(m, c.clone());
            }
        }
        Ok(e)
    }

    /// Canonical form of a product of generators given by name.
    ///
    /// The sign is the Koszul sign of the sorting permutation; it is `0` when
    /// an odd generator repeats.
    pub fn normalize_monomial<S: AsRef<str>>(&self, raw: &[S]) -> Result<(Monomial, i8)> {
        let idx: Vec<usize> = raw
            .iter()
            .map(|s| self.generator_index(s.as_ref()))
            .collect::<Result<_>>()?;
        let mut exps = vec![0u32; self.generators.len()];
        for &i in &idx {
            exps[i] += 1;
        }
        let parity = self.parity();
        if (0..exps.len()).any(|i| parity[i] && exps[i] > 1) {
            return Ok((Monomial(exps), 0));
        }
        let odd: Vec<usize> = idx.into_iter().filter(|&i| parity[i]).collect();
        let mut inversions = 0usize;
        for s in 0..odd.len() {
            for t in s + 1..odd.len() {
                if odd[s] > odd[t] {
                    inversions += 1;
                }
            }
        }
        Ok((Monomial(exps), if inversions % 2 == 0 { 1 } else { -1 }))
    }

    fn check(&self, e: &Element) -> Result<()> {
        if e.signature != self.signature {
            Err(DgaError::MixedOperands)
        } else {
            Ok(())
        }
    }

    pub fn multiply(&self, a: &Element, b: &Element) -> Result<Element> {
        self.check(a)?;
        self.check(b)?;
        let parity = self.parity();
        let mut out = self.zero();
        for (ma, ca) in &a.terms {
            let da = self.monomial_degree(ma);
            for (mb, cb) in &b.terms {
                if da + self.monomial_degree(mb) > self.max_degree {
                    continue;
                }
                if let Some((m, neg)) = monomial_product(&parity, ma, mb) {
                    let c = ca * cb;
                    out.add_term(m, if neg { -c } else { c });
                }
            }
        }
        Ok(out)
    }

    /// Apply the odd-degree derivation that sends generator `i` to `images[i]`.
    ///
    /// Uses the sign rule `D(ab) = D(a) b + (-1)^{|a|} a D(b)`, which covers
    /// both the differential and the degree `-1` loop-space operator.
    pub fn apply_odd_derivation(&self, e: &Element, images: &[Element]) -> Result<Element> {
        self.check(e)?;
        if images.len() != self.generators.len() {
            return Err(DgaError::ExponentLength {
                expected: self.generators.len(),
                found: images.len(),
            });
        }
        for im in images {
            self.check(im)?;
        }
        let mut out = self.zero();
        for (m, c) in &e.terms {
            let dm = self.derive_monomial(m, images);
            out = out.add(&dm.scale(c))?;
        }
        Ok(out)
    }

    fn derive_monomial(&self, m: &Monomial, images: &[Element]) -> Element {
        let n = self.generators.len();
        let mut out = self.zero();
        let mut prefix = Monomial::one(n);
        let mut prefix_degree = 0usize;
        for i in 0..n {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let g = &self.generators[i];
            let mut suffix = m.clone();
            suffix.0[..=i].iter_mut().for_each(|x| *x = 0);
            // D(g^e) = e * g^{e-1} * Dg  (only e = 1 occurs for odd g)
            let mut lower = Monomial::one(n);
            lower.0[i] = e - 1;
            let mut coeff = BigRational::from_integer(BigInt::from(e));
            if prefix_degree % 2 == 1 {
                coeff = -coeff;
            }
            let left = self.monomial_element(prefix.clone(), coeff);
            let left = self
                .multiply(&left, &self.monomial_element(lower, BigRational::one()))
                .expect("same algebra");
            let term = self.multiply(&left, &images[i]).expect("same algebra");
            let term = self
                .multiply(&term, &self.monomial_element(suffix, BigRational::one()))
                .expect("same algebra");
            out = out.add(&term).expect("same algebra");
            prefix.0[i] = e;
            prefix_degree += e as usize * g.degree;
        }
        out
    }

    pub fn differentiate(&self, e: &Element) -> Result<Element> {
        self.apply_odd_derivation(e, &self.diff)
    }

    /// Terms of `e` as `(coefficient, exponent vector)` pairs.
    pub fn to_raw(&self, e: &Element) -> RawPolynomial {
        e.terms
            .iter()
            .map(|(m, c)| (c.clone(), m.0.clone()))
            .collect()
    }

    /// All monomials of total degree `k`, in descending lexicographic order of
    /// exponent vectors (so the first generator's powers come first).
    pub fn basis(&self, k: usize) -> Result<Vec<Monomial>> {
        if k > self.max_degree {
            return Err(DgaError::AboveTruncation {
                requested: k,
                max_degree: self.max_degree,
            });
        }
        let mut out = Vec::new();
        let mut current = vec![0u32; self.generators.len()];
        self.enumerate(0, k, &mut current, &mut out);
        Ok(out)
    }

    fn enumerate(&self, i: usize, remaining: usize, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if i == self.generators.len() {
            if remaining == 0 {
                out.push(Monomial(cur.clone()));
            }
            return;
        }
        let g = &self.generators[i];
        let max_e = if g.is_odd() {
            1.min(remaining / g.degree)
        } else {
            remaining / g.degree
        };
        for e in (0..=max_e).rev() {
            cur[i] = e as u32;
            self.enumerate(i + 1, remaining - e * g.degree, cur, out);
        }
        cur[i] = 0;
    }

    /// Homogeneous part of degree `k`.
    pub fn homogeneous_part(&self, e: &Element, k: usize) -> Element {
        Element {
            signature: e.signature,
            terms: e
                .terms
                .iter()
                .filter(|(m, _)| self.monomial_degree(m) == k)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Degree of a homogeneous element (`None` for zero or mixed degree).
    pub fn degree_of(&self, e: &Element) -> Option<usize> {
        let mut degs = e.terms.keys().map(|m| self.monomial_degree(m));
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }

    pub fn format_monomial(&self, m: &Monomial) -> String {
        let parts: Vec<String> = m
            .0
            .iter()
            .zip(&self.generators)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, g)| {
                if e == 1 {
                    g.name.clone()
                } else {
                    format!("{}^{}", g.name, e)
                }
            })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }

    pub fn format_element(&self, e: &Element) -> String {
        if e.is_zero() {
            return "0".into();
        }
        e.terms
            .iter()
            .map(|(m, c)| format!("{}*{}", c, self.format_monomial(m)))
            .collect::<Vec<_>>()
            .join(" + ")
    }

    pub fn to_json(&self) -> Value {
        let generators: Vec<Value> = self
            .generators
            .iter()
            .map(|g| json!({"name": g.name, "degree": g.degree}))
            .collect();
        let mut diff = serde_json::Map::new();
        for (g, d) in self.generators.iter().zip(&self.diff) {
            let terms: Vec<Value> = d
                .terms
                .iter()
                .map(|(m, c)| json!([int_to_json(c.numer()), int_to_json(c.denom()), m.0]))
                .collect();
            diff.insert(g.name.clone(), Value::Array(terms));
        }
        json!({"generators": generators, "diff": diff, "max_degree": self.max_degree})
    }

    pub fn from_json(v: &Value) -> Result<Dga> {
        let bad = |s: &str| DgaError::Json(s.to_string());
        let max_degree = v["max_degree"]
            .as_u64()
            .ok_or_else(|| bad("max_degree missing"))? as usize;
        let gens = v["generators"]
            .as_array()
            .ok_or_else(|| bad("generators missing"))?;
        let mut b = DgaBuilder::new(max_degree);
        for g in gens {
            let name = g["name"].as_str().ok_or_else(|| bad("generator name"))?;
            let degree = g["degree"].as_u64().ok_or_else(|| bad("generator degree"))?;
            b = b.generator(name, degree as usize);
        }
        if let Some(diff) = v.get("diff") {
            let diff = diff.as_object().ok_or_else(|| bad("diff must be an object"))?;
            for (name, terms) in diff {
                let terms = terms.as_array().ok_or_else(|| bad("diff terms"))?;
                let mut poly = Vec::new();
                for t in terms {
                    let t = t.as_array().filter(|t| t.len() == 3).ok_or_else(|| bad("term"))?;
                    let num = int_from_json(&t[0]).ok_or_else(|| bad("numerator"))?;
                    let den = int_from_json(&t[1]).ok_or_else(|| bad("denominator"))?;
                    if den.is_zero() {
                        return Err(bad("zero denominator"));
                    }
                    let exps = t[2]
                        .as_array()
                        .ok_or_else(|| bad("exponents"))?
                        .iter()
                        .map(|x| x.as_u64().map(|x| x as u32))
                        .collect::<Option<Vec<_>>>()
                        .ok_or_else(|| bad("exponents"))?;
                    poly.push((BigRational::new(num, den), exps));
                }
                b = b.differential(name.clone(), poly);
            }
        }
        b.build()
    }
}

/// Integers that fit in `i64` are written as JSON numbers, others as strings.
fn int_to_json(i: &BigInt) -> Value {
    match i.to_i64() {
        Some(x) => Value::from(x),
        None => Value::String(i.to_string()),
    }
}

fn int_from_json(v: &Value) -> Option<BigInt> {
    match v {
        Value::Number(n) => n.as_i64().map(BigInt::from),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

impl fmt::Display for Dga {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (g, d) in self.generators.iter().zip(&self.diff) {
            writeln!(f, "d({}) = {}   |{}| = {}", g.name, self.format_element(d), g.name, g.degree)?;
        }
        Ok(())
    }
}

pub(crate) fn rational(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}
