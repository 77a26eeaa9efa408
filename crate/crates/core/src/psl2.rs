//! `PSL_2(K)`: matrices up to sign, traces, and classification of the
//! action on the Bruhat–Tits tree.
//!
//! The characteristic polynomial of `g` is `x² − tr(g)x + 1`. When
//! `v(tr) < 0` its Newton polygon has slopes `±v(tr)`, so the eigenvalues lie
//! in `K` with valuations `v(tr)` and `−v(tr)` and `g` translates its axis by
//! `−2·v(tr)`. When `v(tr) ≥ 0` the eigenvalues are integral units and `g`
//! fixes a vertex. [`classify`](ProjectiveMatrix::classify) uses exactly this
//! rule; `bttree::displacement_oracle` checks it by brute force.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::localfield::{FieldKind, FieldSpec, LocalFieldElement as Elem};

/// A 2×2 matrix over `K` with arbitrary nonzero determinant.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat2 {
    pub a: Elem,
    pub b: Elem,
    pub c: Elem,
    pub d: Elem,
}

impl Mat2 {
    pub fn new(a: Elem, b: Elem, c: Elem, d: Elem) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn identity(spec: FieldSpec) -> Self {
        Mat2::diag(Elem::one(spec), Elem::one(spec))
    }

    pub fn diag(x: Elem, y: Elem) -> Self {
        let spec = x.spec();
        Mat2::new(x, Elem::zero(spec), Elem::zero(spec), y)
    }

    pub fn spec(&self) -> FieldSpec {
        self.a.spec()
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: &(&self.a * &o.a) + &(&self.b * &o.c),
            b: &(&self.a * &o.b) + &(&self.b * &o.d),
            c: &(&self.c * &o.a) + &(&self.d * &o.c),
            d: &(&self.c * &o.b) + &(&self.d * &o.d),
        }
    }

    pub fn det(&self) -> Elem {
        &(&self.a * &self.d) - &(&self.b * &self.c)
    }

    pub fn trace(&self) -> Elem {
        &self.a + &self.d
    }

    /// `[[d, −b], [−c, a]]`, the inverse times the determinant.
    pub fn adjugate(&self) -> Mat2 {
        Mat2::new(self.d.clone(), self.b.neg(), self.c.neg(), self.a.clone())
    }

    pub fn inverse(&self) -> Result<Mat2> {
        let inv_det = self.det().inv()?;
        let adj = self.adjugate();
        Ok(Mat2::new(
            &adj.a * &inv_det,
            &adj.b * &inv_det,
            &adj.c * &inv_det,
            &adj.d * &inv_det,
        ))
    }

    pub fn neg(&self) -> Mat2 {
        Mat2::new(self.a.neg(), self.b.neg(), self.c.neg(), self.d.neg())
    }

    pub fn entries(&self) -> [&Elem; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    /// Smallest valuation among the nonzero entries.
    pub fn min_valuation(&self) -> Option<i64> {
        self.entries().iter().filter_map(|e| e.val()).min()
    }

    pub fn eq_at_precision(&self, o: &Mat2) -> bool {
        self.entries()
            .iter()
            .zip(o.entries())
            .all(|(x, y)| x.eq_at_precision(y))
    }
}

/// Translation length and type of a tree isometry without inversions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IsometryClass {
    Elliptic,
    /// Translation length along the axis, always even here.
    Hyperbolic(u32),
}

impl IsometryClass {
    pub fn from_length(length: u32) -> Self {
        if length == 0 {
            IsometryClass::Elliptic
        } else {
            IsometryClass::Hyperbolic(length)
        }
    }

    pub fn translation_length(&self) -> u32 {
        match self {
            IsometryClass::Elliptic => 0,
            IsometryClass::Hyperbolic(l) => *l,
        }
    }

    pub fn is_elliptic(&self) -> bool {
        matches!(self, IsometryClass::Elliptic)
    }

    pub fn is_hyperbolic(&self) -> bool {
        !self.is_elliptic()
    }
}

impl fmt::Display for IsometryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IsometryClass::Elliptic => write!(f, "Elliptic ℓ=0"),
            IsometryClass::Hyperbolic(l) => write!(f, "Hyperbolic ℓ={l}"),
        }
    }
}

/// An element of `PSL_2(K)` stored through its canonical lift: among the
/// entries of minimal valuation, the first one (in the order a, b, c, d) has
/// leading digit in `1..=(p-1)/2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProjectiveMatrix(Mat2);

impl ProjectiveMatrix {
    /// Checks `ad − bc = 1` at the tracked precision and canonicalizes.
    pub fn new(a: Elem, b: Elem, c: Elem, d: Elem) -> Result<Self> {
        Self::from_mat(Mat2::new(a, b, c, d))
    }

    pub fn from_mat(m: Mat2) -> Result<Self> {
        let spec = m.spec();
        if m.entries().iter().any(|e| e.spec() != spec) {
            return Err(Error::InvalidSpec("entries from different fields".into()));
        }
        if !(&m.det() - &Elem::one(spec)).is_zero() {
            return Err(Error::NotUnimodular);
        }
        Ok(ProjectiveMatrix(canonical_sign(m)))
    }

    pub fn identity(spec: FieldSpec) -> Self {
        ProjectiveMatrix(Mat2::identity(spec))
    }

    /// `diag(x, x⁻¹)`.
    pub fn diag(x: &Elem) -> Result<Self> {
        Self::from_mat(Mat2::diag(x.clone(), x.inv()?))
    }

    /// `diag(π^m, π^-m)`.
    pub fn cartan(spec: FieldSpec, m: i64) -> Self {
        Self::from_mat(Mat2::diag(
            Elem::uniformizer_pow(spec, m),
            Elem::uniformizer_pow(spec, -m),
        ))
        .expect("diagonal Cartan element is unimodular")
    }

    /// `[[1, x], [0, 1]]`.
    pub fn unipotent(x: &Elem) -> Self {
        let spec = x.spec();
        ProjectiveMatrix(canonical_sign(Mat2::new(
            Elem::one(spec),
            x.clone(),
            Elem::zero(spec),
            Elem::one(spec),
        )))
    }

    pub fn spec(&self) -> FieldSpec {
        self.0.spec()
    }

    /// The canonical lift.
    pub fn lift(&self) -> &Mat2 {
        &self.0
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        Self::from_mat(self.0.mul(&other.0))
    }

    pub fn invert(&self) -> Self {
        ProjectiveMatrix(canonical_sign(self.0.adjugate()))
    }

    pub fn pow(&self, n: i64) -> Result<Self> {
        let base = if n < 0 { self.invert() } else { self.clone() };
        let mut acc = Self::identity(self.spec());
        for _ in 0..n.unsigned_abs() {
            acc = acc.compose(&base)?;
        }
        Ok(acc)
    }

    /// `g h g⁻¹`.
    pub fn conjugate(&self, by: &Self) -> Result<Self> {
        by.compose(self)?.compose(&by.invert())
    }

    /// `c g c⁻¹` for any invertible `c`; the result again has determinant 1.
    pub fn conjugate_by_gl(&self, c: &Mat2) -> Result<Self> {
        Self::from_mat(c.mul(&self.0).mul(&c.inverse()?))
    }

    pub fn trace(&self) -> Elem {
        self.0.trace()
    }

    /// Trace of the adjoint representation on `sl_2`: `tr(g)² − 1`.
    pub fn trace_adjoint(&self) -> Elem {
        let t = self.trace();
        &(&t * &t) - &Elem::one(self.spec())
    }

    pub fn classify(&self) -> Result<IsometryClass> {
        let t = self.trace();
        match t.val() {
            Some(v) if v < 0 => Ok(IsometryClass::Hyperbolic((-2 * v) as u32)),
            Some(_) => Ok(IsometryClass::Elliptic),
            None if t.known_prec() > 0 => Ok(IsometryClass::Elliptic),
            None => Err(Error::precision(format!(
                "trace is zero modulo π^{}; its valuation sign is undetermined",
                t.known_prec()
            ))),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.0.eq_at_precision(&Mat2::identity(self.spec()))
    }

    pub fn eq_at_precision(&self, other: &Self) -> bool {
        self.0.eq_at_precision(&other.0) || self.0.eq_at_precision(&other.0.neg())
    }

    /// Four element encodings joined by `|`.
    pub fn encode(&self) -> String {
        self.to_string()
    }

    pub fn decode(spec: FieldSpec, text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.trim().split('|').collect();
        if parts.len() != 4 {
            return Err(Error::parse(format!("matrix needs four entries, got `{text}`")));
        }
        let e = parts
            .iter()
            .map(|s| Elem::decode(spec, s))
            .collect::<Result<Vec<_>>>()?;
        let [a, b, c, d]: [Elem; 4] = e.try_into().expect("four entries");
        Self::new(a, b, c, d)
    }

    /// Haar-uniform element of `PSL_2(O)` modulo `π^N`: a uniform primitive
    /// first row, then a uniform completion to determinant 1.
    pub fn sample_compact<R: Rng + ?Sized>(spec: FieldSpec, rng: &mut R) -> Self {
        let one = Elem::one(spec);
        loop {
            let a = Elem::random_integral(spec, rng);
            let b = Elem::random_integral(spec, rng);
            let m = if a.val() == Some(0) {
                // d = (1 + bc) / a
                let c = Elem::random_integral(spec, rng);
                let d = (&one + &(&b * &c)).div(&a).expect("a is a unit");
                Mat2::new(a, b, c, d)
            } else if b.val() == Some(0) {
                // c = (ad − 1) / b
                let d = Elem::random_integral(spec, rng);
                let c = (&(&a * &d) - &one).div(&b).expect("b is a unit");
                Mat2::new(a, b, c, d)
            } else {
                continue;
            };
            if let Ok(g) = Self::from_mat(m) {
                return g;
            }
        }
    }

    /// `k₁ · diag(π^m, π^-m) · k₂` with `m` drawn from `law`, conditioned on
    /// translation length exactly `2m`.
    pub fn sample_hyperbolic<R: Rng + ?Sized>(spec: FieldSpec, rng: &mut R, law: LengthLaw) -> Self {
        let m = law.sample(rng);
        let cartan = Self::cartan(spec, m as i64);
        loop {
            let k1 = Self::sample_compact(spec, rng);
            let k2 = Self::sample_compact(spec, rng);
            let Ok(g) = k1.compose(&cartan).and_then(|x| x.compose(&k2)) else {
                continue;
            };
            if g.classify() == Ok(IsometryClass::Hyperbolic(2 * m)) {
                return g;
            }
        }
    }

    /// `h u h⁻¹` with `u` Haar-uniform in `PSL_2(O)` and
    /// `h = k · diag(π^j, π^-j)`, `j ∈ {1, 2}`, so the fixed tree sits
    /// around a random vertex at distance `2j` from the base vertex.
    pub fn sample_elliptic<R: Rng + ?Sized>(spec: FieldSpec, rng: &mut R) -> Self {
        loop {
            let u = Self::sample_compact(spec, rng);
            let j = rng.gen_range(1..=2);
            let h = Self::sample_compact(spec, rng).compose(&Self::cartan(spec, j));
            let Ok(g) = h.and_then(|h| u.conjugate(&h)) else {
                continue;
            };
            if g.classify() == Ok(IsometryClass::Elliptic) {
                return g;
            }
        }
    }

    /// Reduction of a matrix with integral entries modulo `π`, as residues.
    pub fn reduce_mod_pi(&self) -> Option<[u32; 4]> {
        let mut out = [0u32; 4];
        for (slot, e) in out.iter_mut().zip(self.0.entries()) {
            *slot = e.digit(0)?;
            if e.val().is_some_and(|v| v < 0) {
                return None;
            }
        }
        Some(out)
    }

    /// Applies `t ↦ t²` to every entry (the embedding of `PSL_2(F_p((t²)))`).
    pub fn substitute_square(&self) -> Result<Self> {
        if self.spec().kind() != FieldKind::LaurentSeries {
            return Err(Error::WrongField);
        }
        let m = &self.0;
        Self::new(
            m.a.substitute_square()?,
            m.b.substitute_square()?,
            m.c.substitute_square()?,
            m.d.substitute_square()?,
        )
    }
}

impl fmt::Display for ProjectiveMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.0;
        write!(f, "{}|{}|{}|{}", m.a, m.b, m.c, m.d)
    }
}

fn canonical_sign(m: Mat2) -> Mat2 {
    let Some(vmin) = m.min_valuation() else {
        return m;
    };
    let p = m.spec().p();
    let lead = m
        .entries()
        .iter()
        .find(|e| e.val() == Some(vmin))
        .map(|e| e.unit_digits()[0])
        .expect("an entry attains the minimum");
    if lead <= (p - 1) / 2 {
        m
    } else {
        m.neg()
    }
}

/// Distribution of the Cartan exponent `m ≥ 1` used by the hyperbolic
/// samplers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LengthLaw {
    Fixed(u32),
    /// `P(m) = θ(1-θ)^(m-1)`, truncated at `max`.
    Geometric {
        theta: f64,
        max: u32,
    },
}

impl Default for LengthLaw {
    fn default() -> Self {
        LengthLaw::Geometric { theta: 0.5, max: 6 }
    }
}

impl LengthLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match *self {
            LengthLaw::Fixed(m) => m.max(1),
            LengthLaw::Geometric { theta, max } => {
                let mut m = 1;
                while m < max && !rng.gen_bool(theta) {
                    m += 1;
                }
                m
            }
        }
    }
}
