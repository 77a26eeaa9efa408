//! Fixed-precision arithmetic in `Q_p` and `F_p((t))`.
//!
//! An element is stored as `π^v · (d_0 + d_1 π + … + d_{r-1} π^{r-1})` with
//! `d_0 ≠ 0` and `r = known_prec - v` digits, where `π` is `p` for `Q_p` and
//! `t` for `F_p((t))`. The element is known modulo `π^known_prec`. Zero is a
//! separate state that only carries `known_prec`; the exact zero uses the
//! [`EXACT`] sentinel.
//!
//! Relative precision never exceeds the `precision` of the [`FieldSpec`].
//! Operations track how much of it survives; nothing is ever rounded without
//! the loss being visible in `known_prec`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute precision of a value known exactly (only the exact zero).
pub const EXACT: i64 = i64::MAX;

const MAX_PRIME: u32 = 65_521;
const MAX_PRECISION: u32 = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldKind {
    Padic,
    LaurentSeries,
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldKind::Padic => f.write_str("padic"),
            FieldKind::LaurentSeries => f.write_str("laurent"),
        }
    }
}

impl std::str::FromStr for FieldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "padic" | "qp" | "Qp" => Ok(FieldKind::Padic),
            "laurent" | "fpt" | "Fp((t))" => Ok(FieldKind::LaurentSeries),
            other => Err(Error::parse(format!("unknown field kind `{other}`"))),
        }
    }
}

/// A local field together with the number of tracked digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    kind: FieldKind,
    p: u32,
    precision: u32,
}

impl FieldSpec {
    pub const DEFAULT_PRECISION: u32 = 32;

    pub fn new(kind: FieldKind, p: u32, precision: u32) -> Result<Self> {
        if p == 2 {
            return Err(Error::InvalidSpec("residue characteristic 2 is not supported".into()));
        }
        if !is_prime(p) {
            return Err(Error::InvalidSpec(format!("{p} is not prime")));
        }
        if p > MAX_PRIME {
            return Err(Error::InvalidSpec(format!("prime {p} exceeds {MAX_PRIME}")));
        }
        if !(4..=MAX_PRECISION).contains(&precision) {
            return Err(Error::InvalidSpec(format!(
                "precision {precision} outside 4..={MAX_PRECISION}"
            )));
        }
        Ok(FieldSpec { kind, p, precision })
    }

    pub fn padic(p: u32, precision: u32) -> Result<Self> {
        Self::new(FieldKind::Padic, p, precision)
    }

    pub fn laurent(p: u32, precision: u32) -> Result<Self> {
        Self::new(FieldKind::LaurentSeries, p, precision)
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    /// Residue characteristic, which is also the residue field order `q`.
    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn q(&self) -> u32 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Largest ball radius in the Bruhat–Tits tree this precision supports.
    pub fn max_radius(&self) -> u32 {
        self.precision - 2
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.kind, self.p, self.precision)
    }
}

/// Parses `kind:p:N`.
impl std::str::FromStr for FieldSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let [kind, p, n] = parts.as_slice() else {
            return Err(Error::parse(format!("field `{s}` is not kind:p:N")));
        };
        let num = |x: &str| x.parse::<u32>().map_err(|_| Error::parse(format!("bad number `{x}`")));
        FieldSpec::new(kind.parse()?, num(p)?, num(n)?)
    }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub(crate) fn inv_mod(a: u32, p: u32) -> u32 {
    // p is prime, so a^(p-2) is the inverse.
    let mut result = 1u64;
    let mut base = a as u64 % p as u64;
    let mut e = p - 2;
    let m = p as u64;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % m;
        }
        base = base * base % m;
        e >>= 1;
    }
    result as u32
}

fn prec_shift(prec: i64, by: i64) -> i64 {
    if prec == EXACT {
        EXACT
    } else {
        prec + by
    }
}

/// Valuation of an element; zero reports the bound it is known to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Valuation {
    Finite(i64),
    Infinite { known_prec: i64 },
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LocalFieldElement {
    spec: FieldSpec,
    val: i64,
    // Unit digits, exactly `prec - val` of them; empty for zero.
    digits: Vec<u32>,
    prec: i64,
}

impl LocalFieldElement {
    /// The exact zero.
    pub fn zero(spec: FieldSpec) -> Self {
        Self::zero_at(spec, EXACT)
    }

    /// Zero modulo `π^prec`.
    pub fn zero_at(spec: FieldSpec, prec: i64) -> Self {
        LocalFieldElement {
            spec,
            val: 0,
            digits: Vec::new(),
            prec,
        }
    }

    pub fn one(spec: FieldSpec) -> Self {
        Self::from_i64(spec, 1)
    }

    /// Image of an integer, known to the full relative precision.
    pub fn from_i64(spec: FieldSpec, n: i64) -> Self {
        let p = spec.p as i64;
        match spec.kind {
            FieldKind::LaurentSeries => {
                let c = n.rem_euclid(p) as u32;
                if c == 0 {
                    Self::zero(spec)
                } else {
                    Self::from_digits(spec, 0, &[c], spec.precision as i64)
                }
            }
            FieldKind::Padic => {
                if n == 0 {
                    return Self::zero(spec);
                }
                let mut m = n.unsigned_abs();
                let mut raw = Vec::new();
                while m > 0 {
                    raw.push((m % p as u64) as u32);
                    m /= p as u64;
                }
                let first = raw.iter().position(|&d| d != 0).unwrap_or(0) as i64;
                let x = Self::from_digits(spec, 0, &raw, first + spec.precision as i64);
                if n < 0 {
                    x.neg()
                } else {
                    x
                }
            }
        }
    }

    /// `π^n` at full relative precision.
    pub fn uniformizer_pow(spec: FieldSpec, n: i64) -> Self {
        Self::from_digits(spec, n, &[1], n + spec.precision as i64)
    }

    /// Builds `Σ digits[i] π^(v+i)` known modulo `π^prec`. Leading zero digits
    /// are absorbed into the valuation, digits at positions `≥ prec` are
    /// dropped, and relative precision is capped at the field's precision.
    /// Digits must be reduced residues.
    pub fn from_digits(spec: FieldSpec, v: i64, digits: &[u32], prec: i64) -> Self {
        assert!(
            digits.iter().all(|&d| d < spec.p),
            "digit out of range for p = {}",
            spec.p
        );
        let Some(first) = digits.iter().position(|&d| d != 0) else {
            return Self::zero_at(spec, prec);
        };
        let val = v + first as i64;
        if prec <= val {
            return Self::zero_at(spec, prec);
        }
        assert!(prec != EXACT, "only zero can be exact");
        let prec = prec.min(val + spec.precision as i64);
        let len = (prec - val) as usize;
        let mut raw: Vec<u32> = digits[first..].iter().copied().take(len).collect();
        raw.resize(len, 0);
        LocalFieldElement {
            spec,
            val,
            digits: raw,
            prec,
        }
    }

    // `raw[i]` is the digit at position `v + i`; positions up to `prec` must be
    // covered when the result is nonzero.
    fn from_raw(spec: FieldSpec, v: i64, mut raw: Vec<u32>, prec: i64) -> Self {
        let Some(first) = raw.iter().position(|&d| d != 0) else {
            return Self::zero_at(spec, prec);
        };
        let val = v + first as i64;
        raw.drain(..first);
        let mut prec = prec;
        let n = spec.precision as usize;
        if raw.len() > n {
            raw.truncate(n);
            prec = val + n as i64;
        }
        debug_assert_eq!(raw.len() as i64, prec - val);
        LocalFieldElement {
            spec,
            val,
            digits: raw,
            prec,
        }
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn is_zero(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn is_exact_zero(&self) -> bool {
        self.is_zero() && self.prec == EXACT
    }

    pub fn valuation(&self) -> Valuation {
        if self.is_zero() {
            Valuation::Infinite { known_prec: self.prec }
        } else {
            Valuation::Finite(self.val)
        }
    }

    /// Valuation of a nonzero element.
    pub fn val(&self) -> Option<i64> {
        self.valuation().finite()
    }

    /// Absolute precision: the element is known modulo `π^known_prec`.
    pub fn known_prec(&self) -> i64 {
        self.prec
    }

    /// Number of known unit digits (0 for zero).
    pub fn relative_prec(&self) -> usize {
        self.digits.len()
    }

    /// Unit digits, lowest position first.
    pub fn unit_digits(&self) -> &[u32] {
        &self.digits
    }

    /// Coefficient of `π^i`, or `None` when position `i` is beyond the
    /// known precision.
    pub fn digit(&self, i: i64) -> Option<u32> {
        if i >= self.prec {
            return None;
        }
        if self.is_zero() || i < self.val {
            return Some(0);
        }
        Some(self.digits[(i - self.val) as usize])
    }

    /// Lowers the absolute precision to `min(prec, known_prec)`.
    pub fn truncate(&self, prec: i64) -> Self {
        if prec >= self.prec {
            return self.clone();
        }
        if self.is_zero() || prec <= self.val {
            return Self::zero_at(self.spec, prec);
        }
        let mut digits = self.digits.clone();
        digits.truncate((prec - self.val) as usize);
        LocalFieldElement {
            spec: self.spec,
            val: self.val,
            digits,
            prec,
        }
    }

    /// Treats the known digits as an exact representative and extends it to
    /// full relative precision with zeros.
    pub fn as_exact_representative(&self) -> Result<Self> {
        if self.is_zero() {
            return Ok(Self::zero(self.spec));
        }
        let used = self.digits.iter().rposition(|&d| d != 0).map_or(0, |i| i + 1);
        if used > self.spec.precision as usize {
            return Err(Error::precision("representative longer than the relative precision"));
        }
        Ok(Self::from_digits(
            self.spec,
            self.val,
            &self.digits[..used],
            self.val + self.spec.precision as i64,
        ))
    }

    fn check_spec(&self, other: &Self) {
        assert_eq!(self.spec, other.spec, "mixed field specs in arithmetic");
    }

    // Digits at positions lo..lo+len.
    fn aligned(&self, lo: i64, len: usize) -> Vec<u32> {
        let mut out = vec![0u32; len];
        if self.is_zero() {
            return out;
        }
        for (i, slot) in out.iter_mut().enumerate() {
            let pos = lo + i as i64;
            if pos >= self.val {
                let k = (pos - self.val) as usize;
                if k < self.digits.len() {
                    *slot = self.digits[k];
                }
            }
        }
        out
    }

    fn add_impl(&self, other: &Self) -> Self {
        self.check_spec(other);
        let prec = self.prec.min(other.prec);
        let lo = match (self.is_zero(), other.is_zero()) {
            (true, true) => return Self::zero_at(self.spec, prec),
            (true, false) => return other.truncate(prec),
            (false, true) => return self.truncate(prec),
            (false, false) => self.val.min(other.val),
        };
        if prec <= lo {
            return Self::zero_at(self.spec, prec);
        }
        let len = (prec - lo) as usize;
        let a = self.aligned(lo, len);
        let b = other.aligned(lo, len);
        let p = self.spec.p;
        let mut out = vec![0u32; len];
        match self.spec.kind {
            FieldKind::Padic => {
                let mut carry = 0u32;
                for i in 0..len {
                    let s = a[i] + b[i] + carry;
                    out[i] = s % p;
                    carry = s / p;
                }
            }
            FieldKind::LaurentSeries => {
                for i in 0..len {
                    out[i] = (a[i] + b[i]) % p;
                }
            }
        }
        Self::from_raw(self.spec, lo, out, prec)
    }

    /// Sum that refuses when two nonzero operands cancel below the known
    /// precision.
    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        let s = self.add_impl(other);
        if s.is_zero() && !self.is_zero() && !other.is_zero() {
            return Err(Error::precision(format!("sum cancels to zero modulo π^{}", s.prec)));
        }
        Ok(s)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let p = self.spec.p;
        let digits = match self.spec.kind {
            FieldKind::Padic => self
                .digits
                .iter()
                .enumerate()
                .map(|(i, &d)| if i == 0 { p - d } else { p - 1 - d })
                .collect(),
            FieldKind::LaurentSeries => self.digits.iter().map(|&d| if d == 0 { 0 } else { p - d }).collect(),
        };
        LocalFieldElement {
            spec: self.spec,
            val: self.val,
            digits,
            prec: self.prec,
        }
    }

    fn mul_impl(&self, other: &Self) -> Self {
        self.check_spec(other);
        match (self.is_zero(), other.is_zero()) {
            (true, true) => {
                let prec = if self.prec == EXACT || other.prec == EXACT {
                    EXACT
                } else {
                    self.prec + other.prec
                };
                return Self::zero_at(self.spec, prec);
            }
            (true, false) => return Self::zero_at(self.spec, prec_shift(self.prec, other.val)),
            (false, true) => return Self::zero_at(self.spec, prec_shift(other.prec, self.val)),
            (false, false) => {}
        }
        let r = self.digits.len().min(other.digits.len());
        let val = self.val + other.val;
        let p = self.spec.p as u64;
        let mut conv = vec![0u64; r];
        for (i, &a) in self.digits.iter().take(r).enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.digits.iter().take(r - i).enumerate() {
                conv[i + j] += a as u64 * b as u64;
            }
        }
        let mut out = vec![0u32; r];
        match self.spec.kind {
            FieldKind::Padic => {
                let mut carry = 0u64;
                for i in 0..r {
                    let t = conv[i] + carry;
                    out[i] = (t % p) as u32;
                    carry = t / p;
                }
            }
            FieldKind::LaurentSeries => {
                for i in 0..r {
                    out[i] = (conv[i] % p) as u32;
                }
            }
        }
        LocalFieldElement {
            spec: self.spec,
            val,
            digits: out,
            prec: val + r as i64,
        }
    }

    /// Multiplicative inverse, solved digit by digit.
    pub fn inv(&self) -> Result<Self> {
        if self.is_exact_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.is_zero() {
            return Err(Error::precision(format!(
                "inverting an element known only to be 0 mod π^{}",
                self.prec
            )));
        }
        let digits = unit_inverse(self.spec, &self.digits);
        let val = -self.val;
        let prec = val + digits.len() as i64;
        Ok(LocalFieldElement {
            spec: self.spec,
            val,
            digits,
            prec,
        })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul_impl(&other.inv()?))
    }

    pub fn pow(&self, n: i64) -> Result<Self> {
        let base = if n < 0 { self.inv()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one(self.spec);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_impl(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul_impl(&sq);
            }
        }
        Ok(acc)
    }

    /// `self == other` modulo the smaller of the two known precisions.
    pub fn eq_at_precision(&self, other: &Self) -> bool {
        self.add_impl(&other.neg()).is_zero()
    }

    /// For `v(a) = 0` in `F_p((t))`, the constant `a_0 ∈ F_p ⊂ K`.
    pub fn constant_term_lift(&self) -> Result<Self> {
        if self.spec.kind != FieldKind::LaurentSeries {
            return Err(Error::WrongField);
        }
        if self.is_zero() || self.val != 0 {
            return Err(Error::NotAUnit);
        }
        Ok(Self::from_i64(self.spec, self.digits[0] as i64))
    }

    /// Image under `t ↦ t²`, i.e. the embedding `F_p((t²)) ⊂ F_p((t))`
    /// applied to an element written in the variable `t²`.
    pub fn substitute_square(&self) -> Result<Self> {
        if self.spec.kind != FieldKind::LaurentSeries {
            return Err(Error::WrongField);
        }
        if self.is_zero() {
            let prec = if self.prec == EXACT { EXACT } else { 2 * self.prec };
            return Ok(Self::zero_at(self.spec, prec));
        }
        let mut raw = vec![0u32; 2 * self.digits.len()];
        for (i, &d) in self.digits.iter().enumerate() {
            raw[2 * i] = d;
        }
        Ok(Self::from_raw(self.spec, 2 * self.val, raw, 2 * self.prec))
    }

    /// Uniform sample of `O / π^N` (N = the field's precision).
    pub fn random_integral<R: Rng + ?Sized>(spec: FieldSpec, rng: &mut R) -> Self {
        let n = spec.precision as usize;
        let raw: Vec<u32> = (0..n).map(|_| rng.gen_range(0..spec.p)).collect();
        Self::from_raw(spec, 0, raw, n as i64)
    }

    /// Uniform sample of `O^× / (1 + π^N O)`.
    pub fn random_unit<R: Rng + ?Sized>(spec: FieldSpec, rng: &mut R) -> Self {
        let n = spec.precision as usize;
        let mut raw: Vec<u32> = (0..n).map(|_| rng.gen_range(0..spec.p)).collect();
        raw[0] = rng.gen_range(1..spec.p);
        Self::from_raw(spec, 0, raw, n as i64)
    }

    /// Canonical text form `v:<int>;d:<d0,d1,...>;prec:<int>`; zero is
    /// `v:inf;d:;prec:<int|inf>`.
    pub fn encode(&self) -> String {
        self.to_string()
    }

    pub fn decode(spec: FieldSpec, text: &str) -> Result<Self> {
        let bad = || Error::parse(format!("malformed element `{text}`"));
        let mut parts = text.trim().split(';');
        let v = parts.next().and_then(|s| s.strip_prefix("v:")).ok_or_else(bad)?;
        let d = parts.next().and_then(|s| s.strip_prefix("d:")).ok_or_else(bad)?;
        let prec = parts.next().and_then(|s| s.strip_prefix("prec:")).ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        let prec: i64 = if prec == "inf" {
            EXACT
        } else {
            prec.parse().map_err(|_| bad())?
        };
        if v == "inf" {
            if !d.is_empty() {
                return Err(bad());
            }
            return Ok(Self::zero_at(spec, prec));
        }
        let v: i64 = v.parse().map_err(|_| bad())?;
        let digits = d
            .split(',')
            .map(|x| x.parse::<u32>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        if prec == EXACT
            || digits.iter().any(|&x| x >= spec.p)
            || digits.first() == Some(&0)
            || digits.last() == Some(&0)
            || v + digits.len() as i64 > prec
            || prec - v > spec.precision as i64
        {
            return Err(Error::parse(format!("non-canonical element `{text}` for {spec}")));
        }
        Ok(Self::from_digits(spec, v, &digits, prec))
    }
}

impl fmt::Display for LocalFieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prec = if self.prec == EXACT {
            "inf".to_string()
        } else {
            self.prec.to_string()
        };
        if self.is_zero() {
            return write!(f, "v:inf;d:;prec:{prec}");
        }
        let used = self.digits.iter().rposition(|&d| d != 0).map_or(0, |i| i + 1);
        let digits: Vec<String> = self.digits[..used].iter().map(u32::to_string).collect();
        write!(f, "v:{};d:{};prec:{}", self.val, digits.join(","), prec)
    }
}

fn unit_inverse(spec: FieldSpec, u: &[u32]) -> Vec<u32> {
    let r = u.len();
    let p = spec.p;
    let p64 = p as u64;
    let inv0 = inv_mod(u[0], p) as u64;
    // rem holds 1 - u * w for the digits solved so far.
    let mut rem = vec![0u32; r];
    rem[0] = 1;
    let mut w = vec![0u32; r];
    for i in 0..r {
        let wi = (rem[i] as u64 * inv0 % p64) as u32;
        w[i] = wi;
        if wi == 0 {
            continue;
        }
        match spec.kind {
            FieldKind::Padic => {
                let mut mcarry = 0u64;
                let mut borrow = 0i64;
                for j in i..r {
                    let prod = wi as u64 * u[j - i] as u64 + mcarry;
                    let pd = (prod % p64) as i64;
                    mcarry = prod / p64;
                    let mut diff = rem[j] as i64 - pd - borrow;
                    if diff < 0 {
                        diff += p as i64;
                        borrow = 1;
                    } else {
                        borrow = 0;
                    }
                    rem[j] = diff as u32;
                }
            }
            FieldKind::LaurentSeries => {
                for j in i..r {
                    let prod = (wi as u64 * u[j - i] as u64 % p64) as u32;
                    rem[j] = (rem[j] + p - prod) % p;
                }
            }
        }
        debug_assert_eq!(rem[i], 0);
    }
    w
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl std::ops::$trait<&LocalFieldElement> for &LocalFieldElement {
            type Output = LocalFieldElement;
            fn $method(self, rhs: &LocalFieldElement) -> LocalFieldElement {
                let f: fn(&LocalFieldElement, &LocalFieldElement) -> LocalFieldElement = $body;
                f(self, rhs)
            }
        }
        impl std::ops::$trait<LocalFieldElement> for LocalFieldElement {
            type Output = LocalFieldElement;
            fn $method(self, rhs: LocalFieldElement) -> LocalFieldElement {
                std::ops::$trait::$method(&self, &rhs)
            }
        }
    };
}

// Operator forms never fail: total cancellation yields zero at precision.
forward_binop!(Add, add, |a, b| a.add_impl(b));
forward_binop!(Sub, sub, |a, b| a.add_impl(&b.neg()));
forward_binop!(Mul, mul, |a, b| a.mul_impl(b));

impl std::ops::Neg for &LocalFieldElement {
    type Output = LocalFieldElement;
    fn neg(self) -> LocalFieldElement {
        LocalFieldElement::neg(self)
    }
}

impl std::ops::Neg for LocalFieldElement {
    type Output = LocalFieldElement;
    fn neg(self) -> LocalFieldElement {
        LocalFieldElement::neg(&self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q5() -> FieldSpec {
        FieldSpec::padic(5, 32).unwrap()
    }

    fn f3() -> FieldSpec {
        FieldSpec::laurent(3, 32).unwrap()
    }

    fn series(spec: FieldSpec, v: i64, coeffs: &[u32]) -> LocalFieldElement {
        LocalFieldElement::from_digits(spec, v, coeffs, v + spec.precision() as i64)
    }

    #[test]
    fn spec_validation() {
        assert!(FieldSpec::padic(2, 32).is_err());
        assert!(FieldSpec::padic(9, 32).is_err());
        assert!(FieldSpec::laurent(3, 3).is_err());
        assert!(FieldSpec::laurent(3, 4).is_ok());
        assert_eq!(FieldSpec::padic(7, 10).unwrap().max_radius(), 8);
    }

    #[test]
    fn small_integer_sum_carries() {
        let s = LocalFieldElement::from_i64(q5(), 2) + LocalFieldElement::from_i64(q5(), 3);
        assert_eq!(s.val(), Some(1));
        assert_eq!(s.encode(), "v:1;d:1;prec:32");
        assert!(s.eq_at_precision(&LocalFieldElement::from_i64(q5(), 5)));
    }

    #[test]
    fn add_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for spec in [q5(), f3()] {
            let x = LocalFieldElement::random_unit(spec, &mut rng);
            assert_eq!(&x + &LocalFieldElement::zero(spec), x);
            assert_eq!(x.checked_add(&LocalFieldElement::from_i64(spec, 0)).unwrap(), x);
        }
    }

    #[test]
    fn laurent_cancellation() {
        let spec = f3();
        let a = series(spec, 1, &[1, 1]);
        let b = series(spec, 1, &[1]).neg();
        let s = a.checked_add(&b).unwrap();
        assert_eq!(s.val(), Some(2));
        assert_eq!(s.encode(), "v:2;d:1;prec:33");
    }

    #[test]
    fn full_cancellation_is_refused() {
        let x = LocalFieldElement::from_i64(q5(), 7);
        assert!(matches!(x.checked_sub(&x), Err(Error::PrecisionExhausted(_))));
        let z = &x - &x;
        assert!(z.is_zero());
        assert_eq!(z.known_prec(), 32);
    }

    #[test]
    fn inverse_of_five() {
        let five = LocalFieldElement::from_i64(q5(), 5);
        let one = &five * &five.inv().unwrap();
        assert_eq!(one.val(), Some(0));
        assert!(one.eq_at_precision(&LocalFieldElement::one(q5())));
    }

    #[test]
    fn laurent_inverse_times_original_is_one() {
        let spec = f3();
        let x = series(spec, 1, &[1, 1]);
        let y = x.inv().unwrap();
        assert_eq!(y.val(), Some(-1));
        // 1/(1+t) = 1 - t + t^2 - ...
        assert_eq!(&y.unit_digits()[..4], &[1, 2, 1, 2]);
        let prod = &x * &y;
        assert!(prod.eq_at_precision(&LocalFieldElement::one(spec)));
        assert_eq!(prod.relative_prec(), 32);
    }

    #[test]
    fn multiply_by_zero_propagates_precision() {
        let x = LocalFieldElement::uniformizer_pow(q5(), 3);
        let z = LocalFieldElement::zero_at(q5(), 10);
        let prod = &x * &z;
        assert!(prod.is_zero());
        assert_eq!(prod.known_prec(), 13);
        assert!((&x * &LocalFieldElement::zero(q5())).is_exact_zero());
    }

    #[test]
    fn division_by_zero() {
        assert_eq!(LocalFieldElement::zero(q5()).inv(), Err(Error::DivisionByZero));
        assert!(matches!(
            LocalFieldElement::zero_at(q5(), 4).inv(),
            Err(Error::PrecisionExhausted(_))
        ));
    }

    #[test]
    fn valuations() {
        assert_eq!(LocalFieldElement::from_i64(q5(), 50).val(), Some(2));
        assert_eq!(LocalFieldElement::one(q5()).val(), Some(0));
        assert_eq!(LocalFieldElement::from_i64(q5(), -50).val(), Some(2));
        let spec = f3();
        let x = series(spec, 3, &[1, 0, 1]);
        assert_eq!(x.val(), Some(3));
        assert_eq!(
            LocalFieldElement::zero_at(spec, 7).valuation(),
            Valuation::Infinite { known_prec: 7 }
        );
    }

    #[test]
    fn negative_integers() {
        let spec = q5();
        let m1 = LocalFieldElement::from_i64(spec, -1);
        assert!(m1.unit_digits().iter().all(|&d| d == 4));
        assert!((&m1 + &LocalFieldElement::one(spec)).is_zero());
    }

    #[test]
    fn constant_term() {
        let spec = f3();
        assert_eq!(
            series(spec, 0, &[2, 1]).constant_term_lift().unwrap(),
            LocalFieldElement::from_i64(spec, 2)
        );
        assert_eq!(
            LocalFieldElement::one(spec).constant_term_lift().unwrap(),
            LocalFieldElement::one(spec)
        );
        let mut c = vec![2u32, 0, 0, 0, 0, 0, 0, 1];
        c.resize(10, 0);
        assert_eq!(
            series(spec, 0, &c).constant_term_lift().unwrap(),
            LocalFieldElement::from_i64(spec, 2)
        );
        assert_eq!(
            LocalFieldElement::one(q5()).constant_term_lift(),
            Err(Error::WrongField)
        );
        assert_eq!(series(spec, 1, &[1]).constant_term_lift(), Err(Error::NotAUnit));
    }

    #[test]
    fn substitute_square_doubles_valuation() {
        let spec = f3();
        let x = series(spec, 1, &[1, 2]);
        let y = x.substitute_square().unwrap();
        assert_eq!(y.val(), Some(2));
        assert_eq!(y.digit(4), Some(2));
        assert_eq!(y.digit(3), Some(0));
    }

    #[test]
    fn decode_rejects_non_canonical() {
        let spec = q5();
        assert!(LocalFieldElement::decode(spec, "v:0;d:0,1;prec:32").is_err());
        assert!(LocalFieldElement::decode(spec, "v:0;d:1,0;prec:32").is_err());
        assert!(LocalFieldElement::decode(spec, "v:0;d:7;prec:32").is_err());
        assert!(LocalFieldElement::decode(spec, "v:0;d:1;prec:40").is_err());
        assert_eq!(
            LocalFieldElement::decode(spec, "v:inf;d:;prec:inf").unwrap(),
            LocalFieldElement::zero(spec)
        );
    }
}
