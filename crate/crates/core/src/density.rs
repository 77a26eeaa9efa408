//! Finite certificates that a subgroup of `PSL_2(K)` is dense.
//!
//! A certificate collects four witnesses, each found by scanning the reduced
//! words of length `≤ L` in the generators:
//!
//! * **unbounded**: a hyperbolic word;
//! * **non-discrete**: a word `w` and a vertex `x` with `B_x⁻¹ w B_x ≡ ±I`
//!   mod `π^m` and `w` of infinite order. Such a `w` lies in a compact open
//!   subgroup, so `⟨w⟩` is an infinite subset of a compact set. Over `Q_p`
//!   the congruence subgroup is torsion free, so `w ≠ ±1` suffices; over
//!   `F_p((t))` its torsion is unipotent, so `tr(w) ≠ ±2` is required;
//! * **Zariski**: two hyperbolic words whose four fixed points on `P¹(K)` are
//!   distinct. A proper algebraic subgroup of `PSL_2` is finite, lies in a
//!   Borel subgroup (a common fixed point) or normalises a torus (every
//!   infinite-order semisimple element then fixes the same pair), and none
//!   of these contains such a pair;
//! * **trace field**: over `Q_p` nothing is needed, since every closed
//!   subfield contains the closure of `Q`. Over `F_p((t))`, a product of
//!   adjoint traces (optionally shifted by their constant term, which lies in
//!   `F_p`) with valuation exactly 1: the closed field it generates is all of
//!   `K`.
//!
//! Absence of a witness is reported as `NotCertified`, never as "not dense".

use std::fmt;

use rayon::prelude::*;

use crate::bttree::{descend_to_min_set, displacement, LatticeVertex, VertexDisplay};
use crate::error::{Error, Result};
use crate::localfield::{FieldKind, FieldSpec, LocalFieldElement as Elem};
use crate::psl2::{Mat2, ProjectiveMatrix};

/// A word in the generators; letter `2i` is `g_{i+1}`, letter `2i + 1` its
/// inverse.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupWord(Vec<u8>);

impl GroupWord {
    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn evaluate(&self, gens: &[ProjectiveMatrix]) -> Result<ProjectiveMatrix> {
        let spec = gens.first().ok_or(Error::WrongArity { expected: 1, got: 0 })?.spec();
        let mut acc = ProjectiveMatrix::identity(spec);
        for &l in &self.0 {
            let g = gens
                .get((l / 2) as usize)
                .ok_or_else(|| Error::IndexOutOfRange(format!("generator g{}", l / 2 + 1)))?;
            acc = acc.compose(&if l % 2 == 1 { g.invert() } else { g.clone() })?;
        }
        Ok(acc)
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e");
        }
        for (n, &l) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str(" ")?;
            }
            write!(f, "g{}", l / 2 + 1)?;
            if l % 2 == 1 {
                f.write_str("^-1")?;
            }
        }
        Ok(())
    }
}

impl std::str::FromStr for GroupWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "e" {
            return Ok(GroupWord(Vec::new()));
        }
        let mut out = Vec::new();
        for tok in s.split_whitespace() {
            let (body, inv) = match tok.strip_suffix("^-1") {
                Some(b) => (b, true),
                None => (tok, false),
            };
            let i: u8 = body
                .strip_prefix('g')
                .and_then(|n| n.parse().ok())
                .filter(|&n| (1..=127).contains(&n))
                .ok_or_else(|| Error::parse(format!("bad letter `{tok}`")))?;
            out.push(2 * (i - 1) + inv as u8);
        }
        Ok(GroupWord(out))
    }
}

/// Reduced words of length `1..=max_len` with their values, ordered by
/// length and then lexicographically in `g1, g1^-1, g2, …`.
pub fn enumerate_words(gens: &[ProjectiveMatrix], max_len: usize) -> Result<Vec<(GroupWord, ProjectiveMatrix)>> {
    let letters: Vec<ProjectiveMatrix> = gens.iter().flat_map(|g| [g.clone(), g.invert()]).collect();
    let mut out: Vec<(GroupWord, ProjectiveMatrix)> = Vec::new();
    let mut level: Vec<(GroupWord, ProjectiveMatrix)> = letters
        .iter()
        .enumerate()
        .map(|(l, g)| (GroupWord(vec![l as u8]), g.clone()))
        .collect();
    for len in 1..=max_len {
        if len > 1 {
            level = level
                .par_iter()
                .map(|(w, x)| {
                    let last = *w.0.last().expect("nonempty");
                    let mut kids = Vec::with_capacity(letters.len());
                    for (l, g) in letters.iter().enumerate() {
                        if l as u8 == last ^ 1 {
                            continue;
                        }
                        let mut word = w.0.clone();
                        word.push(l as u8);
                        kids.push((GroupWord(word), x.compose(g)?));
                    }
                    Ok(kids)
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect();
        }
        out.extend(level.iter().cloned());
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CertifyConfig {
    pub word_length: usize,
    /// Congruence level `m` of the non-discreteness witness.
    pub level: u32,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            word_length: 6,
            level: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Reason {
    Bounded,
    Discrete,
    Zariski,
    TraceField,
}

impl Reason {
    fn token(self) -> &'static str {
        match self {
            Reason::Bounded => "bounded",
            Reason::Discrete => "discrete",
            Reason::Zariski => "zariski",
            Reason::TraceField => "trace-field",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Certified,
    NotCertified(Vec<Reason>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonDiscretenessWitness {
    pub word: GroupWord,
    pub vertex: LatticeVertex,
    pub level: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZariskiWitness {
    pub first: GroupWord,
    pub second: GroupWord,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceFactor {
    pub word: GroupWord,
    /// Use `s − constant_term_lift(s)` instead of `s`.
    pub shifted: bool,
    pub exponent: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceFieldWitness {
    Automatic,
    Uniformizer(Vec<TraceFactor>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityCertificate {
    pub spec: FieldSpec,
    pub generators: usize,
    pub word_length: usize,
    pub level: u32,
    pub status: Status,
    pub unbounded: Option<GroupWord>,
    pub nondiscrete: Option<NonDiscretenessWitness>,
    pub zariski: Option<ZariskiWitness>,
    pub trace_field: Option<TraceFieldWitness>,
}

impl DensityCertificate {
    pub fn is_certified(&self) -> bool {
        self.status == Status::Certified
    }
}

/// How far `B_x⁻¹ w B_x` is from `±I`: the level `m` with `≡ ±I mod π^m`,
/// and whether `w` is provably of infinite order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Congruence {
    pub level: u32,
    pub infinite_order: bool,
}

pub fn congruence_at(w: &ProjectiveMatrix, x: &LatticeVertex) -> Result<Congruence> {
    let spec = w.spec();
    let b = x.basis(spec)?;
    let m = b.inverse()?.mul(w.lift()).mul(&b);
    let one = Elem::one(spec);
    let none = Congruence {
        level: 0,
        infinite_order: false,
    };
    if m.min_valuation().is_some_and(|v| v < 0) {
        return Ok(none);
    }
    let eps = if positive(&(&m.a - &one)) {
        one.clone()
    } else if positive(&(&m.a + &one)) {
        -&one
    } else {
        return Ok(none);
    };
    let diffs = [&m.a - &eps, m.b.clone(), m.c.clone(), &m.d - &eps];
    let level = diffs
        .iter()
        .map(|e| e.val().unwrap_or(e.known_prec()))
        .min()
        .expect("four entries");
    let infinite_order = match spec.kind() {
        FieldKind::Padic => diffs.iter().any(|e| !e.is_zero()),
        FieldKind::LaurentSeries => !(&m.trace() - &(&eps + &eps)).is_zero(),
    };
    Ok(Congruence {
        level: level.clamp(0, u32::MAX as i64) as u32,
        infinite_order,
    })
}

fn positive(e: &Elem) -> bool {
    match e.val() {
        Some(v) => v > 0,
        None => e.known_prec() > 0,
    }
}

/// Walks inside `Fix(w)` towards vertices of higher congruence level.
fn best_vertex(w: &ProjectiveMatrix, target: u32) -> Result<Option<(LatticeVertex, Congruence)>> {
    let spec = w.spec();
    let (mut x, d) = descend_to_min_set(w, &LatticeVertex::base())?;
    if d != 0 {
        return Ok(None);
    }
    let mut c = congruence_at(w, &x)?;
    for _ in 0..spec.max_radius() {
        if c.level >= target {
            break;
        }
        let mut best: Option<(LatticeVertex, Congruence)> = None;
        for n in x.neighbors(spec) {
            if displacement(w, &n)? != 0 {
                continue;
            }
            let cn = congruence_at(w, &n)?;
            if cn.level > best.as_ref().map_or(c.level, |b| b.1.level) {
                best = Some((n, cn));
            }
        }
        match best {
            Some((n, cn)) => {
                x = n;
                c = cn;
            }
            None => break,
        }
    }
    Ok(Some((x, c)))
}

fn skip_refusals<T>(r: Result<Option<T>>) -> Result<Option<T>> {
    match r {
        Err(e) if e.is_refusal() => Ok(None),
        other => other,
    }
}

fn nondiscrete_in(words: &[(GroupWord, ProjectiveMatrix)], m: u32) -> Result<Option<NonDiscretenessWitness>> {
    for chunk in words.chunks(128) {
        let found = chunk
            .par_iter()
            .map(|(word, w)| {
                skip_refusals((|| {
                    if !w.classify()?.is_elliptic() {
                        return Ok(None);
                    }
                    Ok(best_vertex(w, m)?.and_then(|(x, c)| {
                        (c.level >= m && c.infinite_order).then(|| NonDiscretenessWitness {
                            word: word.clone(),
                            vertex: x,
                            level: c.level,
                        })
                    }))
                })())
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(w) = found.into_iter().flatten().next() {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

pub fn nondiscreteness_witness(
    gens: &[ProjectiveMatrix],
    max_len: usize,
    m: u32,
) -> Result<Option<NonDiscretenessWitness>> {
    check_level(gens, m)?;
    nondiscrete_in(&enumerate_words(gens, max_len)?, m)
}

fn check_level(gens: &[ProjectiveMatrix], m: u32) -> Result<()> {
    let spec = gens.first().ok_or(Error::WrongArity { expected: 1, got: 0 })?.spec();
    if m == 0 || m >= spec.precision() {
        return Err(Error::InvalidSpec(format!(
            "congruence level {m} outside 1..{}",
            spec.precision()
        )));
    }
    Ok(())
}

/// The two fixed points of a hyperbolic element on `P¹(K)`, as column vectors.
pub fn endpoints(g: &ProjectiveMatrix) -> Result<[(Elem, Elem); 2]> {
    let m = g.lift();
    let t = m.trace();
    if !t.val().is_some_and(|v| v < 0) {
        return Err(Error::Precondition("endpoints need a hyperbolic element".into()));
    }
    // λ = t − 1/λ converges: the map contracts by v(λ⁻²) = −2 v(t) ≥ 2.
    let mut lambda = t.clone();
    for _ in 0..=g.spec().precision() {
        let next = &t - &lambda.inv()?;
        if next == lambda {
            break;
        }
        lambda = next;
    }
    let mu = lambda.inv()?;
    Ok([eigenvector(m, &lambda), eigenvector(m, &mu)])
}

fn eigenvector(m: &Mat2, lambda: &Elem) -> (Elem, Elem) {
    let first = (m.b.clone(), lambda - &m.a);
    let second = (lambda - &m.d, m.c.clone());
    let size = |v: &(Elem, Elem)| [v.0.val(), v.1.val()].into_iter().flatten().min();
    match (size(&first), size(&second)) {
        (Some(a), Some(b)) if b < a => second,
        (None, Some(_)) => second,
        _ => first,
    }
}

fn distinct(u: &(Elem, Elem), v: &(Elem, Elem)) -> bool {
    !(&(&u.0 * &v.1) - &(&u.1 * &v.0)).is_zero()
}

fn zariski_in(words: &[(GroupWord, ProjectiveMatrix)]) -> Option<ZariskiWitness> {
    let hyp: Vec<(&GroupWord, [(Elem, Elem); 2])> = words
        .iter()
        .filter(|(_, w)| w.classify().is_ok_and(|c| c.is_hyperbolic()))
        .filter_map(|(word, w)| endpoints(w).ok().map(|e| (word, e)))
        .filter(|(_, e)| distinct(&e[0], &e[1]))
        .collect();
    for (i, (w1, e1)) in hyp.iter().enumerate() {
        let hit = hyp[i + 1..]
            .par_iter()
            .position_first(|(_, e2)| e1.iter().all(|a| e2.iter().all(|b| distinct(a, b))));
        if let Some(j) = hit {
            return Some(ZariskiWitness {
                first: (*w1).clone(),
                second: hyp[i + 1 + j].0.clone(),
            });
        }
    }
    None
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        return (a.abs(), a.signum(), 0);
    }
    let (g, s, t) = ext_gcd(b, a.rem_euclid(b));
    (g, t, s - (a.div_euclid(b)) * t)
}

fn trace_value(w: &ProjectiveMatrix, shifted: bool) -> Result<Elem> {
    let s = w.trace_adjoint();
    if shifted {
        Ok(&s - &s.constant_term_lift()?)
    } else {
        Ok(s)
    }
}

fn trace_field_in(spec: FieldSpec, words: &[(GroupWord, ProjectiveMatrix)]) -> Result<Option<TraceFieldWitness>> {
    if spec.kind() == FieldKind::Padic {
        return Ok(Some(TraceFieldWitness::Automatic));
    }
    let mut chosen: Vec<(GroupWord, bool)> = Vec::new();
    let mut coeffs: Vec<i64> = Vec::new();
    let mut g = 0i64;
    'scan: for (word, w) in words {
        {
            // Units are shifted by their constant term first.
            let shifted = w.trace_adjoint().val() == Some(0);
            let s = trace_value(w, shifted)?;
            let Some(v) = s.val() else { continue };
            let (ng, a, b) = ext_gcd(g, v);
            if g != 0 && ng >= g {
                continue;
            }
            for c in coeffs.iter_mut() {
                *c *= a;
            }
            coeffs.push(b);
            chosen.push((word.clone(), shifted));
            g = ng;
            if g == 1 {
                break 'scan;
            }
        }
    }
    if g != 1 {
        return Ok(None);
    }
    let factors: Vec<TraceFactor> = chosen
        .into_iter()
        .zip(coeffs)
        .filter(|(_, e)| *e != 0)
        .map(|((word, shifted), exponent)| TraceFactor {
            word,
            shifted,
            exponent,
        })
        .collect();
    Ok(Some(TraceFieldWitness::Uniformizer(factors)))
}

fn trace_product(gens: &[ProjectiveMatrix], factors: &[TraceFactor]) -> Result<Elem> {
    let spec = gens[0].spec();
    let mut x = Elem::one(spec);
    for f in factors {
        let s = trace_value(&f.word.evaluate(gens)?, f.shifted)?;
        x = &x * &s.pow(f.exponent)?;
    }
    Ok(x)
}

/// Searches for all four witnesses among the words of length `≤ L`.
pub fn certify_dense(gens: &[ProjectiveMatrix], cfg: CertifyConfig) -> Result<DensityCertificate> {
    check_level(gens, cfg.level)?;
    let spec = gens[0].spec();
    if gens.iter().any(|g| g.spec() != spec) {
        return Err(Error::InvalidSpec("generators from different fields".into()));
    }
    let words = enumerate_words(gens, cfg.word_length)?;
    let unbounded = words
        .iter()
        .find(|(_, w)| w.classify().is_ok_and(|c| c.is_hyperbolic()))
        .map(|(word, _)| word.clone());
    let nondiscrete = nondiscrete_in(&words, cfg.level)?;
    let zariski = zariski_in(&words);
    let trace_field = trace_field_in(spec, &words)?;
    let mut missing = Vec::new();
    if unbounded.is_none() {
        missing.push(Reason::Bounded);
    }
    if nondiscrete.is_none() {
        missing.push(Reason::Discrete);
    }
    if zariski.is_none() {
        missing.push(Reason::Zariski);
    }
    if trace_field.is_none() {
        missing.push(Reason::TraceField);
    }
    let status = if missing.is_empty() {
        Status::Certified
    } else {
        Status::NotCertified(missing)
    };
    Ok(DensityCertificate {
        spec,
        generators: gens.len(),
        word_length: cfg.word_length,
        level: cfg.level,
        status,
        unbounded,
        nondiscrete,
        zariski,
        trace_field,
    })
}

/// Re-checks every stored witness against the generators alone. Returns the
/// list of failed checks (empty when the certificate holds).
pub fn verify_certificate(gens: &[ProjectiveMatrix], cert: &DensityCertificate) -> Result<Vec<String>> {
    let mut failures = Vec::new();
    if gens.len() != cert.generators {
        return Err(Error::WrongArity {
            expected: cert.generators,
            got: gens.len(),
        });
    }
    if gens.iter().any(|g| g.spec() != cert.spec) {
        return Err(Error::InvalidSpec(
            "generators do not match the certificate field".into(),
        ));
    }
    let too_long = |w: &GroupWord| w.len() > cert.word_length || w.is_empty();
    if let Some(w) = &cert.unbounded {
        if too_long(w) || !w.evaluate(gens)?.classify()?.is_hyperbolic() {
            failures.push(format!("unbounded: {w} is not hyperbolic"));
        }
    }
    if let Some(nd) = &cert.nondiscrete {
        let c = congruence_at(&nd.word.evaluate(gens)?, &nd.vertex)?;
        if too_long(&nd.word) || c.level < nd.level || nd.level < cert.level || !c.infinite_order {
            failures.push(format!("nondiscrete: {} fails at level {}", nd.word, nd.level));
        }
    }
    if let Some(z) = &cert.zariski {
        let (a, b) = (z.first.evaluate(gens)?, z.second.evaluate(gens)?);
        let ok = !too_long(&z.first)
            && !too_long(&z.second)
            && a.classify()?.is_hyperbolic()
            && b.classify()?.is_hyperbolic()
            && {
                let (ea, eb) = (endpoints(&a)?, endpoints(&b)?);
                let pts = [&ea[0], &ea[1], &eb[0], &eb[1]];
                (0..4).all(|i| (i + 1..4).all(|j| distinct(pts[i], pts[j])))
            };
        if !ok {
            failures.push(format!("zariski: {} / {} endpoints not distinct", z.first, z.second));
        }
    }
    match (&cert.trace_field, cert.spec.kind()) {
        (Some(TraceFieldWitness::Automatic), FieldKind::Padic) | (None, _) => {}
        (Some(TraceFieldWitness::Automatic), FieldKind::LaurentSeries) => {
            failures.push("trace-field: automatic only over Q_p".into())
        }
        (Some(TraceFieldWitness::Uniformizer(fs)), _) => {
            let x = trace_product(gens, fs)?;
            if x.val() != Some(1) || fs.iter().any(|f| too_long(&f.word)) {
                failures.push(format!("trace-field: product has valuation {:?}", x.val()));
            }
        }
    }
    let complete =
        cert.unbounded.is_some() && cert.nondiscrete.is_some() && cert.zariski.is_some() && cert.trace_field.is_some();
    if cert.is_certified() != complete {
        failures.push("status does not match the witnesses".into());
    }
    Ok(failures)
}

impl fmt::Display for DensityCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.status {
            Status::Certified => writeln!(f, "status certified")?,
            Status::NotCertified(r) => {
                let r: Vec<&str> = r.iter().map(|x| x.token()).collect();
                writeln!(f, "status not-certified {}", r.join(","))?
            }
        }
        writeln!(f, "field {}", self.spec)?;
        writeln!(f, "generators {}", self.generators)?;
        writeln!(f, "words {}", self.word_length)?;
        writeln!(f, "level {}", self.level)?;
        match &self.unbounded {
            Some(w) => writeln!(f, "unbounded {w}")?,
            None => writeln!(f, "unbounded none")?,
        }
        match &self.nondiscrete {
            Some(nd) => writeln!(
                f,
                "nondiscrete {} @ {} @ {}",
                nd.word,
                VertexDisplay(&nd.vertex, self.spec),
                nd.level
            )?,
            None => writeln!(f, "nondiscrete none")?,
        }
        match &self.zariski {
            Some(z) => writeln!(f, "zariski {} / {}", z.first, z.second)?,
            None => writeln!(f, "zariski none")?,
        }
        match &self.trace_field {
            None => writeln!(f, "tracefield none")?,
            Some(TraceFieldWitness::Automatic) => writeln!(f, "tracefield automatic")?,
            Some(TraceFieldWitness::Uniformizer(fs)) => {
                writeln!(f, "tracefield uniformizer")?;
                for x in fs {
                    let kind = if x.shifted { "shifted" } else { "plain" };
                    writeln!(f, "factor {} {kind} {}", x.exponent, x.word)?;
                }
            }
        }
        writeln!(f, "end")
    }
}

fn field_line<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<&'a str> {
    let line = lines
        .next()
        .ok_or_else(|| Error::parse(format!("missing `{key}` line")))?;
    line.strip_prefix(key)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| Error::parse(format!("expected `{key}`, got `{line}`")))
}

fn opt<T>(s: &str, f: impl FnOnce(&str) -> Result<T>) -> Result<Option<T>> {
    if s == "none" {
        Ok(None)
    } else {
        f(s).map(Some)
    }
}

impl std::str::FromStr for DensityCertificate {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let status = field_line(&mut lines, "status")?;
        let status = if status == "certified" {
            Status::Certified
        } else if let Some(r) = status.strip_prefix("not-certified ") {
            let reasons = r
                .split(',')
                .map(|t| match t {
                    "bounded" => Ok(Reason::Bounded),
                    "discrete" => Ok(Reason::Discrete),
                    "zariski" => Ok(Reason::Zariski),
                    "trace-field" => Ok(Reason::TraceField),
                    _ => Err(Error::parse(format!("unknown reason `{t}`"))),
                })
                .collect::<Result<Vec<_>>>()?;
            Status::NotCertified(reasons)
        } else {
            return Err(Error::parse(format!("bad status `{status}`")));
        };
        let spec: FieldSpec = field_line(&mut lines, "field")?.parse()?;
        let num = |s: &str| s.parse::<u64>().map_err(|_| Error::parse(format!("bad number `{s}`")));
        let generators = num(field_line(&mut lines, "generators")?)? as usize;
        let word_length = num(field_line(&mut lines, "words")?)? as usize;
        let level = num(field_line(&mut lines, "level")?)? as u32;
        let unbounded = opt(field_line(&mut lines, "unbounded")?, |s| s.parse())?;
        let nondiscrete = opt(field_line(&mut lines, "nondiscrete")?, |s| {
            let parts: Vec<&str> = s.split(" @ ").collect();
            let [w, v, l] = parts.as_slice() else {
                return Err(Error::parse(format!("bad nondiscrete witness `{s}`")));
            };
            Ok(NonDiscretenessWitness {
                word: w.parse()?,
                vertex: LatticeVertex::decode(spec, v)?,
                level: num(l)? as u32,
            })
        })?;
        let zariski = opt(field_line(&mut lines, "zariski")?, |s| {
            let (a, b) = s
                .split_once(" / ")
                .ok_or_else(|| Error::parse(format!("bad zariski witness `{s}`")))?;
            Ok(ZariskiWitness {
                first: a.parse()?,
                second: b.parse()?,
            })
        })?;
        let tf = field_line(&mut lines, "tracefield")?;
        let mut rest: Vec<&str> = lines.collect();
        if rest.pop() != Some("end") {
            return Err(Error::parse("certificate must end with `end`"));
        }
        let trace_field = match tf {
            "none" | "automatic" if !rest.is_empty() => return Err(Error::parse("unexpected factor lines")),
            "none" => None,
            "automatic" => Some(TraceFieldWitness::Automatic),
            "uniformizer" => {
                let fs = rest
                    .iter()
                    .map(|l| {
                        let mut it = l.splitn(4, ' ');
                        let (Some("factor"), Some(e), Some(k), Some(w)) = (it.next(), it.next(), it.next(), it.next())
                        else {
                            return Err(Error::parse(format!("bad factor line `{l}`")));
                        };
                        let exponent = e.parse().map_err(|_| Error::parse(format!("bad exponent `{e}`")))?;
                        let shifted = match k {
                            "plain" => false,
                            "shifted" => true,
                            _ => return Err(Error::parse(format!("bad factor kind `{k}`"))),
                        };
                        Ok(TraceFactor {
                            word: w.parse()?,
                            shifted,
                            exponent,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(TraceFieldWitness::Uniformizer(fs))
            }
            _ => return Err(Error::parse(format!("bad tracefield `{tf}`"))),
        };
        Ok(DensityCertificate {
            spec,
            generators,
            word_length,
            level,
            status,
            unbounded,
            nondiscrete,
            zariski,
            trace_field,
        })
    }
}
