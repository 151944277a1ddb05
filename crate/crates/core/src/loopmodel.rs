//! Minimal models of spheres, their free loop spaces, and tensor products.
//!
//! The loop-space model adjoins, for every generator `x` of the base, a
//! generator `xbar` of degree `|x| - 1`. The operator `x -> xbar` is extended
//! to the base algebra as a derivation of degree `-1`,
//!
//! ```text
//! bar(ab) = bar(a) b + (-1)^{|a|} a bar(b),
//! ```
//!
//! and the new differentials are `d(xbar) = -bar(dx)`. With this sign rule the
//! even sphere gives `d(ybar) = -2 x xbar`.

use std::fmt;

use thiserror::Error;

use crate::qdga::{rational, Dga, DgaBuilder, DgaError, Element, RawPolynomial};

/// Suffix marking generators introduced by the loop-space construction.
pub const BAR_SUFFIX: &str = "bar";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("sphere dimension {0} not supported: need n >= 2 (simply connected)")]
    SphereDimension(usize),
    #[error("loop-space model needs a base without barred generators (found `{0}`)")]
    AlreadyLooped(String),
    #[error("bar() is only defined on the base subalgebra; `{0}` is barred")]
    BarOfBarred(String),
    #[error("generator name collision `{0}` in tensor product")]
    NameCollision(String),
    #[error("cannot parse space `{input}`: {reason}")]
    Parse { input: String, reason: String },
    #[error(transparent)]
    Dga(#[from] DgaError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelSpec {
    Point,
    SphereOdd(usize),
    SphereEven(usize),
    LoopOf(Box<ModelSpec>),
    ProductOf(Box<ModelSpec>, Box<ModelSpec>),
}

impl ModelSpec {
    pub fn sphere(n: usize) -> Result<ModelSpec> {
        match n {
            0 | 1 => Err(ModelError::SphereDimension(n)),
            n if n % 2 == 1 => Ok(ModelSpec::SphereOdd(n)),
            n => Ok(ModelSpec::SphereEven(n)),
        }
    }

    pub fn looped(self) -> ModelSpec {
        ModelSpec::LoopOf(Box::new(self))
    }

    pub fn times(self, other: ModelSpec) -> ModelSpec {
        ModelSpec::ProductOf(Box::new(self), Box::new(other))
    }

    /// Parse strings such as `s5`, `loop(s5)`, `loop(s5)*loop(s7)`, `loop(s3*s3)`.
    pub fn parse(input: &str) -> Result<ModelSpec> {
        let compact: String = input.chars().filter(|c| !c.is_whitespace()).collect();
        let mut p = SpecParser {
            src: compact.as_bytes(),
            pos: 0,
            input,
        };
        let spec = p.product()?;
        if p.pos != p.src.len() {
            return Err(p.error("trailing input"));
        }
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Point => Ok(()),
            ModelSpec::SphereOdd(n) if *n < 3 || n % 2 == 0 => Err(ModelError::SphereDimension(*n)),
            ModelSpec::SphereEven(n) if *n < 2 || n % 2 == 1 => Err(ModelError::SphereDimension(*n)),
            ModelSpec::SphereOdd(_) | ModelSpec::SphereEven(_) => Ok(()),
            ModelSpec::LoopOf(inner) => {
                if inner.contains_loop() {
                    return Err(ModelError::AlreadyLooped(inner.to_string()));
                }
                inner.validate()
            }
            ModelSpec::ProductOf(a, b) => {
                a.validate()?;
                b.validate()
            }
        }
    }

    fn contains_loop(&self) -> bool {
        match self {
            ModelSpec::LoopOf(_) => true,
            ModelSpec::ProductOf(a, b) => a.contains_loop() || b.contains_loop(),
            _ => false,
        }
    }

    /// Build the model truncated at `max_degree`.
    pub fn build(&self, max_degree: usize) -> Result<Dga> {
        self.validate()?;
        match self {
            ModelSpec::Point => Ok(DgaBuilder::new(max_degree).build()?),
            ModelSpec::SphereOdd(n) | ModelSpec::SphereEven(n) => sphere_model(*n, max_degree),
            ModelSpec::ProductOf(a, b) => tensor(&a.build(max_degree)?, &b.build(max_degree)?),
            ModelSpec::LoopOf(inner) => match inner.as_ref() {
                // L(M x N) = LM x LN
                ModelSpec::ProductOf(a, b) => tensor(
                    &ModelSpec::LoopOf(a.clone()).build(max_degree)?,
                    &ModelSpec::LoopOf(b.clone()).build(max_degree)?,
                ),
                other => loop_space_model(&other.build(max_degree)?),
            },
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Point => write!(f, "pt"),
            ModelSpec::SphereOdd(n) | ModelSpec::SphereEven(n) => write!(f, "s{n}"),
            ModelSpec::LoopOf(inner) => write!(f, "loop({inner})"),
            ModelSpec::ProductOf(a, b) => {
                let wrap = |s: &ModelSpec| match s {
                    ModelSpec::ProductOf(..) => format!("({s})"),
                    _ => s.to_string(),
                };
                write!(f, "{}*{}", wrap(a), wrap(b))
            }
        }
    }
}

struct SpecParser<'a> {
    src: &'a [u8],
    pos: usize,
    input: &'a str,
}

impl SpecParser<'_> {
    fn error(&self, reason: &str) -> ModelError {
        ModelError::Parse {
            input: self.input.to_string(),
            reason: format!("{reason} at offset {}", self.pos),
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.src[self.pos..].starts_with(token.as_bytes()) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn product(&mut self) -> Result<ModelSpec> {
        let mut acc = self.factor()?;
        while self.eat("*") {
            acc = acc.times(self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<ModelSpec> {
        if self.eat("loop(") {
            let inner = self.product()?;
            if !self.eat(")") {
                return Err(self.error("expected `)`"));
            }
            return Ok(inner.looped());
        }
        if self.eat("(") {
            let inner = self.product()?;
            if !self.eat(")") {
                return Err(self.error("expected `)`"));
            }
            return Ok(inner);
        }
        if self.eat("pt") {
            return Ok(ModelSpec::Point);
        }
        if self.eat("s") || self.eat("S") {
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
            let n: usize = digits.parse().map_err(|_| self.error("expected sphere dimension"))?;
            return ModelSpec::sphere(n);
        }
        Err(self.error("expected `sN`, `loop(...)`, `pt` or `(`"))
    }
}

/// Minimal model of `S^n`: `(Λx, 0)` for odd `n`, `(Λ(x, y), dy = x^2)` for even `n`.
pub fn sphere_model(n: usize, max_degree: usize) -> Result<Dga> {
    if n < 2 {
        return Err(ModelError::SphereDimension(n));
    }
    let b = DgaBuilder::new(max_degree).generator("x", n);
    let dga = if n % 2 == 1 {
        b.build()?
    } else {
        b.generator("y", 2 * n - 1)
            .differential("y", vec![(rational(1), vec![2])])
            .build()?
    };
    Ok(dga)
}

fn is_barred(name: &str) -> bool {
    name.ends_with(BAR_SUFFIX) || name.contains(&format!("{BAR_SUFFIX}_"))
}

/// The degree `-1` derivation `x -> xbar` on a loop-space model.
///
/// `loop_dga` must come from [`loop_space_model`]; its first half are the
/// base generators and the second half their barred partners.
pub fn bar(loop_dga: &Dga, e: &Element) -> Result<Element> {
    let gens = loop_dga.generators();
    let n = gens.len() / 2;
    for (m, _) in e.terms() {
        if let Some(j) = (n..gens.len()).find(|&j| m.exponents()[j] > 0) {
            return Err(ModelError::BarOfBarred(gens[j].name.clone()));
        }
    }
    let images = bar_images(loop_dga);
    Ok(loop_dga.apply_odd_derivation(e, &images)?)
}

fn bar_images(loop_dga: &Dga) -> Vec<Element> {
    let total = loop_dga.generators().len();
    let n = total / 2;
    (0..total)
        .map(|i| {
            if i < n {
                loop_dga.gen_at(n + i)
            } else {
                loop_dga.zero()
            }
        })
        .collect()
}

/// Free-loop-space model: adjoin `xbar` with `|xbar| = |x| - 1` and
/// `d(xbar) = -bar(dx)`.
pub fn loop_space_model(base: &Dga) -> Result<Dga> {
    let gens = base.generators();
    if let Some(g) = gens.iter().find(|g| is_barred(&g.name)) {
        return Err(ModelError::AlreadyLooped(g.name.clone()));
    }
    let n = gens.len();
    let max_degree = base.max_degree();
    let pad = |raw: RawPolynomial| -> RawPolynomial {
        raw.into_iter()
            .map(|(c, mut e)| {
                e.resize(2 * n, 0);
                (c, e)
            })
            .collect()
    };

    // stage 1: barred generators present, with zero differential
    let mut b = DgaBuilder::new(max_degree);
    for g in gens {
        b = b.generator(g.name.clone(), g.degree);
    }
    for g in gens {
        if g.degree < 2 {
            return Err(ModelError::SphereDimension(g.degree));
        }
        b = b.generator(format!("{}{}", g.name, BAR_SUFFIX), g.degree - 1);
    }
    for (i, g) in gens.iter().enumerate() {
        b = b.differential(g.name.clone(), pad(base.to_raw(base.generator_differential(i))));
    }
    let stage = b.clone().build()?;

    // stage 2: d(xbar) = -bar(dx)
    let images = bar_images(&stage);
    for (i, g) in gens.iter().enumerate() {
        let dx = stage.element(&pad(base.to_raw(base.generator_differential(i))))?;
        let dxbar = stage.apply_odd_derivation(&dx, &images)?.neg();
        b = b.differential(format!("{}{}", g.name, BAR_SUFFIX), stage.to_raw(&dxbar));
    }
    Ok(b.build()?)
}

/// Tensor product; generators of the two factors are renamed with suffixes
/// `_1` and `_2`.
pub fn tensor(a: &Dga, b: &Dga) -> Result<Dga> {
    let max_degree = a.max_degree().min(b.max_degree());
    let na = a.generators().len();
    let nb = b.generators().len();
    let mut builder = DgaBuilder::new(max_degree);
    let mut seen = std::collections::HashSet::new();
    let mut names = Vec::with_capacity(na + nb);
    for (g, suffix) in a
        .generators()
        .iter()
        .map(|g| (g, "_1"))
        .chain(b.generators().iter().map(|g| (g, "_2")))
    {
        let name = format!("{}{}", g.name, suffix);
        if !seen.insert(name.clone()) {
            return Err(ModelError::NameCollision(name));
        }
        builder = builder.generator(name.clone(), g.degree);
        names.push(name);
    }
    for i in 0..na {
        let raw = a
            .to_raw(a.generator_differential(i))
            .into_iter()
            .map(|(c, mut e)| {
                e.resize(na + nb, 0);
                (c, e)
            })
            .collect();
        builder = builder.differential(names[i].clone(), raw);
    }
    for i in 0..nb {
        let raw = b
            .to_raw(b.generator_differential(i))
            .into_iter()
            .map(|(c, e)| {
                let mut full = vec![0; na];
                full.extend(e);
                (c, full)
            })
            .collect();
        builder = builder.differential(names[na + i].clone(), raw);
    }
    Ok(builder.build()?)
}
