//! Product replacement graphs over `SL_2(F_p)` and `PSL_2(F_p)`.
//!
//! The census partitions all of `G^k` into Nielsen orbits with a concurrent
//! union-find. Edges come from the swaps `T(i,j)` together with `R+(1,2)`
//! and `L+(1,2)`; conjugating by swaps gives every other generator and the
//! orbits on a finite set do not depend on whether inverses are listed, so
//! the components are exactly the orbits of the full move set. Roots are
//! linked smaller-index-wins, which makes every root the least tuple of its
//! orbit whatever the scheduling.

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU32, Ordering};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{CommutatorTrace, GroupElement};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum FiniteKind {
    SL2,
    PSL2,
}

impl fmt::Display for FiniteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FiniteKind::SL2 => "SL2",
            FiniteKind::PSL2 => "PSL2",
        })
    }
}

impl std::str::FromStr for FiniteKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sl2" => Ok(FiniteKind::SL2),
            "psl2" => Ok(FiniteKind::PSL2),
            _ => Err(Error::parse(format!("unknown finite group `{s}`"))),
        }
    }
}

/// Largest characteristic with precomputed tables.
pub const MAX_FINITE_P: u32 = 13;

fn check_prime(p: u32) -> Result<()> {
    let prime = p >= 3 && (2..p).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d));
    if !prime || p.is_multiple_of(2) {
        return Err(Error::InvalidSpec(format!("p = {p} is not an odd prime")));
    }
    Ok(())
}

/// A matrix over `F_p` with determinant 1; in the projective case the first
/// nonzero entry lies in `1..=(p-1)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteMatrix {
    kind: FiniteKind,
    p: u8,
    m: [u8; 4],
}

impl FiniteMatrix {
    pub fn new(kind: FiniteKind, p: u32, entries: [i64; 4]) -> Result<Self> {
        check_prime(p)?;
        if p > 255 {
            return Err(Error::InvalidSpec(format!("p = {p} too large for a finite matrix")));
        }
        let r = |x: i64| x.rem_euclid(p as i64) as u8;
        let m = [r(entries[0]), r(entries[1]), r(entries[2]), r(entries[3])];
        let det = (m[0] as i64 * m[3] as i64 - m[1] as i64 * m[2] as i64).rem_euclid(p as i64);
        if det != 1 {
            return Err(Error::NotUnimodular);
        }
        Ok(Self::canonical(kind, p as u8, m))
    }

    fn canonical(kind: FiniteKind, p: u8, m: [u8; 4]) -> Self {
        let flip = kind == FiniteKind::PSL2 && m.iter().find(|&&x| x != 0).is_some_and(|&x| x > (p - 1) / 2);
        let m = if flip {
            m.map(|x| if x == 0 { 0 } else { p - x })
        } else {
            m
        };
        FiniteMatrix { kind, p, m }
    }

    pub fn identity(kind: FiniteKind, p: u32) -> Result<Self> {
        Self::new(kind, p, [1, 0, 0, 1])
    }

    pub fn entries(&self) -> [u8; 4] {
        self.m
    }

    pub fn kind(&self) -> FiniteKind {
        self.kind
    }

    pub fn p(&self) -> u32 {
        self.p as u32
    }

    fn raw_mul(p: u8, x: [u8; 4], y: [u8; 4]) -> [u8; 4] {
        let p = p as u32;
        let [a, b, c, d] = x.map(u32::from);
        let [e, f, g, h] = y.map(u32::from);
        [
            ((a * e + b * g) % p) as u8,
            ((a * f + b * h) % p) as u8,
            ((c * e + d * g) % p) as u8,
            ((c * f + d * h) % p) as u8,
        ]
    }

    fn raw_inv(p: u8, x: [u8; 4]) -> [u8; 4] {
        let neg = |v: u8| if v == 0 { 0 } else { p - v };
        [x[3], neg(x[1]), neg(x[2]), x[0]]
    }

    /// Trace of the stored representative.
    pub fn trace(&self) -> u32 {
        (self.m[0] as u32 + self.m[3] as u32) % self.p as u32
    }

    pub fn random<R: Rng + ?Sized>(kind: FiniteKind, p: u32, rng: &mut R) -> Result<Self> {
        check_prime(p)?;
        loop {
            let e = [(); 4].map(|_| rng.gen_range(0..p as i64));
            if let Ok(m) = Self::new(kind, p, e) {
                return Ok(m);
            }
        }
    }
}

impl fmt::Display for FiniteMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.m;
        write!(f, "[{a},{b};{c},{d}]")
    }
}

impl GroupElement for FiniteMatrix {
    fn compose(&self, other: &Self) -> Result<Self> {
        if self.kind != other.kind || self.p != other.p {
            return Err(Error::InvalidSpec("matrices from different groups".into()));
        }
        Ok(Self::canonical(
            self.kind,
            self.p,
            Self::raw_mul(self.p, self.m, other.m),
        ))
    }

    fn inverse(&self) -> Result<Self> {
        Ok(Self::canonical(self.kind, self.p, Self::raw_inv(self.p, self.m)))
    }

    fn same_as(&self, other: &Self) -> bool {
        self == other
    }
}

impl CommutatorTrace for FiniteMatrix {
    type Trace = u32;

    fn commutator_trace(a: &Self, b: &Self) -> Result<u32> {
        Ok(commutator_trace_raw(a.p, a.m, b.m))
    }
}

fn commutator_trace_raw(p: u8, x: [u8; 4], y: [u8; 4]) -> u32 {
    let xy = FiniteMatrix::raw_mul(p, x, y);
    let c = FiniteMatrix::raw_mul(
        p,
        FiniteMatrix::raw_mul(p, xy, FiniteMatrix::raw_inv(p, x)),
        FiniteMatrix::raw_inv(p, y),
    );
    (c[0] as u32 + c[3] as u32) % p as u32
}

/// `SL_2(F_p)` or `PSL_2(F_p)` with `p ≤ 13`, with full multiplication
/// tables indexed by the lexicographic order of canonical entries.
pub struct FiniteMatrixGroup {
    kind: FiniteKind,
    p: u8,
    elements: Vec<[u8; 4]>,
    lookup: Vec<u16>,
    mul: Vec<u16>,
    inv: Vec<u16>,
    identity: u16,
}

impl fmt::Debug for FiniteMatrixGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for FiniteMatrixGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(F{})", self.kind, self.p)
    }
}

impl PartialEq for FiniteMatrixGroup {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.p == other.p
    }
}

impl Hash for FiniteMatrixGroup {
    fn hash<H: Hasher>(&self, state: &mut H) {
        (self.kind, self.p).hash(state)
    }
}

impl FiniteMatrixGroup {
    pub fn new(kind: FiniteKind, p: u32) -> Result<Self> {
        check_prime(p)?;
        if p > MAX_FINITE_P {
            return Err(Error::InvalidSpec(format!(
                "finite groups need p ≤ {MAX_FINITE_P}, got {p}"
            )));
        }
        let pu = p as u8;
        let mut elements = Vec::new();
        for a in 0..pu {
            for b in 0..pu {
                for c in 0..pu {
                    for d in 0..pu {
                        let det = (a as i64 * d as i64 - b as i64 * c as i64).rem_euclid(p as i64);
                        let m = [a, b, c, d];
                        if det == 1 && FiniteMatrix::canonical(kind, pu, m).m == m {
                            elements.push(m);
                        }
                    }
                }
            }
        }
        let code = |m: [u8; 4]| m.iter().fold(0usize, |acc, &x| acc * p as usize + x as usize);
        let mut lookup = vec![u16::MAX; (p as usize).pow(4)];
        for (i, &m) in elements.iter().enumerate() {
            lookup[code(m)] = i as u16;
        }
        let n = elements.len();
        let find = |m: [u8; 4]| lookup[code(FiniteMatrix::canonical(kind, pu, m).m)];
        let mul = (0..n * n)
            .map(|ij| find(FiniteMatrix::raw_mul(pu, elements[ij / n], elements[ij % n])))
            .collect();
        let inv = elements.iter().map(|&m| find(FiniteMatrix::raw_inv(pu, m))).collect();
        let identity = find([1, 0, 0, 1]);
        Ok(FiniteMatrixGroup {
            kind,
            p: pu,
            elements,
            lookup,
            mul,
            inv,
            identity,
        })
    }

    pub fn kind(&self) -> FiniteKind {
        self.kind
    }

    pub fn p(&self) -> u32 {
        self.p as u32
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn identity(&self) -> usize {
        self.identity as usize
    }

    pub fn element(&self, i: usize) -> FiniteMatrix {
        FiniteMatrix {
            kind: self.kind,
            p: self.p,
            m: self.elements[i],
        }
    }

    pub fn index_of(&self, x: &FiniteMatrix) -> Result<usize> {
        if x.kind != self.kind || x.p != self.p {
            return Err(Error::InvalidSpec(format!("{x} is not an element of {self}")));
        }
        let code = x.m.iter().fold(0usize, |acc, &v| acc * self.p as usize + v as usize);
        Ok(self.lookup[code] as usize)
    }

    #[inline]
    pub fn mul(&self, i: usize, j: usize) -> usize {
        self.mul[i * self.order() + j] as usize
    }

    #[inline]
    pub fn inv(&self, i: usize) -> usize {
        self.inv[i] as usize
    }

    pub fn random_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.gen_range(0..self.order())
    }

    /// Membership mask of the subgroup generated by `gens`.
    pub fn closure(&self, gens: &[usize]) -> Vec<bool> {
        let mut inside = vec![false; self.order()];
        inside[self.identity()] = true;
        let mut queue = vec![self.identity()];
        while let Some(x) = queue.pop() {
            for &g in gens {
                let y = self.mul(x, g);
                if !inside[y] {
                    inside[y] = true;
                    queue.push(y);
                }
            }
        }
        inside
    }

    pub fn generated_order(&self, gens: &[usize]) -> usize {
        self.closure(gens).iter().filter(|&&b| b).count()
    }

    pub fn is_generating(&self, gens: &[usize]) -> bool {
        self.generated_order(gens) == self.order()
    }

    pub fn is_generating_tuple(&self, t: &[FiniteMatrix]) -> Result<bool> {
        let gens = t.iter().map(|x| self.index_of(x)).collect::<Result<Vec<_>>>()?;
        Ok(self.is_generating(&gens))
    }

    fn commutator_trace_idx(&self, a: usize, b: usize) -> u32 {
        commutator_trace_raw(self.p, self.elements[a], self.elements[b])
    }
}

/// Default census limit in tuples (enough for `SL_2(F_7)` with `k = 3`).
pub const DEFAULT_TUPLE_BUDGET: u128 = 40_000_000;

/// The orbit of every tuple of `G^k`, tuples indexed as
/// `x_1 + n·x_2 + n²·x_3 + …`.
pub struct OrbitPartition<'g> {
    group: &'g FiniteMatrixGroup,
    k: usize,
    root: Vec<u32>,
}

impl<'g> OrbitPartition<'g> {
    pub fn compute(group: &'g FiniteMatrixGroup, k: usize, limit: u128) -> Result<Self> {
        if k < 2 {
            return Err(Error::WrongArity { expected: 2, got: k });
        }
        let n = group.order() as u128;
        let required = n.checked_pow(k as u32).unwrap_or(u128::MAX);
        let bytes = required.saturating_mul(4);
        if required > limit || required > u32::MAX as u128 {
            return Err(Error::BudgetExceeded { required, limit, bytes });
        }
        let total = required as usize;
        let parent: Vec<AtomicU32> = (0..total as u32).into_par_iter().map(AtomicU32::new).collect();
        let part = OrbitPartition {
            group,
            k,
            root: Vec::new(),
        };
        (0..total).into_par_iter().with_min_len(1 << 12).for_each(|x| {
            let t = part.decode(x);
            for y in part.edge_targets(&t) {
                union(&parent, x as u32, y as u32);
            }
        });
        let root = (0..total)
            .into_par_iter()
            .with_min_len(1 << 12)
            .map(|x| find(&parent, x as u32))
            .collect();
        Ok(OrbitPartition { root, ..part })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.root.len()
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_empty()
    }

    pub fn decode(&self, mut x: usize) -> Vec<usize> {
        let n = self.group.order();
        (0..self.k)
            .map(|_| {
                let e = x % n;
                x /= n;
                e
            })
            .collect()
    }

    pub fn encode(&self, t: &[usize]) -> usize {
        let n = self.group.order();
        t.iter().rev().fold(0, |acc, &e| acc * n + e)
    }

    fn edge_targets(&self, t: &[usize]) -> Vec<usize> {
        let g = self.group;
        let mut out = Vec::with_capacity(self.k * (self.k - 1) / 2 + 2);
        let mut s = t.to_vec();
        for i in 0..self.k {
            for j in i + 1..self.k {
                s.swap(i, j);
                out.push(self.encode(&s));
                s.swap(i, j);
            }
        }
        s[1] = g.mul(t[1], t[0]);
        out.push(self.encode(&s));
        s[1] = g.mul(t[0], t[1]);
        out.push(self.encode(&s));
        out
    }

    /// Least tuple index in the orbit of tuple `x`.
    pub fn orbit_of(&self, x: usize) -> usize {
        self.root[x] as usize
    }

    pub fn report(&self) -> TupleOrbitReport {
        let sizes: HashMap<u32, u64> = self
            .root
            .par_iter()
            .with_min_len(1 << 14)
            .fold(HashMap::new, |mut m, &r| {
                *m.entry(r).or_insert(0) += 1;
                m
            })
            .reduce(HashMap::new, |mut a, b| {
                for (r, c) in b {
                    *a.entry(r).or_insert(0) += c;
                }
                a
            });
        let mut roots: Vec<(u32, u64)> = sizes.into_iter().collect();
        roots.sort_unstable();
        let g = self.group;
        let orbits: Vec<OrbitRow> = roots
            .par_iter()
            .map(|&(r, size)| {
                let t = self.decode(r as usize);
                OrbitRow {
                    representative: t
                        .iter()
                        .map(|&e| g.element(e).to_string())
                        .collect::<Vec<_>>()
                        .join(" "),
                    size,
                    generating: g.is_generating(&t),
                    trace_class: (self.k == 2).then(|| g.commutator_trace_idx(t[0], t[1])),
                }
            })
            .collect();
        let generating_tuples = orbits.iter().filter(|o| o.generating).map(|o| o.size).sum();
        TupleOrbitReport {
            group: g.to_string(),
            k: self.k,
            total_tuples: self.root.len() as u64,
            generating_tuples,
            generating_orbits: orbits.iter().filter(|o| o.generating).count(),
            orbits,
        }
    }
}

fn find(parent: &[AtomicU32], mut x: u32) -> u32 {
    loop {
        let p = parent[x as usize].load(Ordering::Relaxed);
        if p == x {
            return x;
        }
        let gp = parent[p as usize].load(Ordering::Relaxed);
        if gp != p {
            // Path halving; only ever points a node at one of its ancestors.
            let _ = parent[x as usize].compare_exchange_weak(p, gp, Ordering::Relaxed, Ordering::Relaxed);
        }
        x = gp;
    }
}

fn union(parent: &[AtomicU32], a: u32, b: u32) {
    let (mut a, mut b) = (a, b);
    loop {
        a = find(parent, a);
        b = find(parent, b);
        if a == b {
            return;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if parent[hi as usize]
            .compare_exchange(hi, lo, Ordering::AcqRel, Ordering::Relaxed)
            .is_ok()
        {
            return;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitRow {
    /// Least tuple of the orbit.
    pub representative: String,
    pub size: u64,
    pub generating: bool,
    /// Commutator trace, pairs only.
    pub trace_class: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TupleOrbitReport {
    pub group: String,
    pub k: usize,
    pub total_tuples: u64,
    pub generating_tuples: u64,
    /// Orbits on generating tuples.
    pub generating_orbits: usize,
    /// All orbits, generating or not, ordered by representative index.
    pub orbits: Vec<OrbitRow>,
}

impl TupleOrbitReport {
    pub fn generating_rows(&self) -> impl Iterator<Item = &OrbitRow> {
        self.orbits.iter().filter(|o| o.generating)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "group {}\nk {}\ntuples {}\ngenerating tuples {}\nnon-generating tuples {}\norbits on generating tuples {}\norbits in total {}\n",
            self.group,
            self.k,
            self.total_tuples,
            self.generating_tuples,
            self.total_tuples - self.generating_tuples,
            self.generating_orbits,
            self.orbits.len(),
        );
        if self.k == 2 {
            let mut by_trace: std::collections::BTreeMap<u32, (usize, u64)> = Default::default();
            for o in self.generating_rows() {
                let e = by_trace.entry(o.trace_class.expect("pairs carry traces")).or_default();
                e.0 += 1;
                e.1 += o.size;
            }
            for (t, (orbits, tuples)) in by_trace {
                out.push_str(&format!("trace {t}: {orbits} orbits, {tuples} tuples\n"));
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,generating,trace_class,representative\n");
        for o in &self.orbits {
            let t = o.trace_class.map(|t| t.to_string()).unwrap_or_default();
            // matrices contain commas, so the tuple is quoted
            out.push_str(&format!("{},{},{},\"{}\"\n", o.size, o.generating, t, o.representative));
        }
        out
    }
}

/// `|G|^k` for `G = SL₂(𝔽_p)` or `PSL₂(𝔽_p)`, without building the group.
pub fn tuple_count(kind: FiniteKind, p: u32, k: usize) -> u128 {
    let p = p as u128;
    let mut n = p * (p * p - 1);
    if kind == FiniteKind::PSL2 {
        n /= 2;
    }
    n.checked_pow(k as u32).unwrap_or(u128::MAX)
}

/// Refuses a census whose tuple space exceeds `limit` before any table is
/// allocated.
pub fn check_census_budget(kind: FiniteKind, p: u32, k: usize, limit: u128) -> Result<()> {
    check_prime(p)?;
    let required = tuple_count(kind, p, k);
    if required > limit || required > u32::MAX as u128 {
        return Err(Error::BudgetExceeded {
            required,
            limit,
            bytes: required.saturating_mul(4),
        });
    }
    Ok(())
}

pub fn orbit_census(group: &FiniteMatrixGroup, k: usize, limit: u128) -> Result<TupleOrbitReport> {
    Ok(OrbitPartition::compute(group, k, limit)?.report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nielsen::{commutator_trace, MarkedTuple, NielsenMove};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn group_orders() {
        for p in [3u32, 5, 7, 11, 13] {
            let sl = FiniteMatrixGroup::new(FiniteKind::SL2, p).unwrap();
            assert_eq!(sl.order() as u32, p * (p * p - 1));
            let psl = FiniteMatrixGroup::new(FiniteKind::PSL2, p).unwrap();
            assert_eq!(psl.order() as u32, p * (p * p - 1) / 2);
            assert_eq!(tuple_count(FiniteKind::SL2, p, 2), (sl.order() as u128).pow(2));
            assert_eq!(tuple_count(FiniteKind::PSL2, p, 3), (psl.order() as u128).pow(3));
        }
        assert!(matches!(
            check_census_budget(FiniteKind::SL2, 101, 3, DEFAULT_TUPLE_BUDGET),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(FiniteMatrixGroup::new(FiniteKind::SL2, 17).is_err());
        assert!(FiniteMatrixGroup::new(FiniteKind::SL2, 9).is_err());
    }

    #[test]
    fn tables_agree_with_matrices() {
        let g = FiniteMatrixGroup::new(FiniteKind::PSL2, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let (i, j) = (g.random_index(&mut rng), g.random_index(&mut rng));
            let prod = g.element(i).compose(&g.element(j)).unwrap();
            assert_eq!(g.element(g.mul(i, j)), prod);
            assert_eq!(g.mul(i, g.inv(i)), g.identity());
        }
    }

    #[test]
    fn generation() {
        let g = FiniteMatrixGroup::new(FiniteKind::SL2, 5).unwrap();
        let e = g.identity();
        assert!(!g.is_generating(&[e, e]));
        let u = g
            .index_of(&FiniteMatrix::new(FiniteKind::SL2, 5, [1, 1, 0, 1]).unwrap())
            .unwrap();
        let l = g
            .index_of(&FiniteMatrix::new(FiniteKind::SL2, 5, [1, 0, 1, 1]).unwrap())
            .unwrap();
        assert_eq!(g.generated_order(&[u]), 5);
        assert!(g.is_generating(&[u, l]));
        assert!(g.is_generating(&[e, u, l]));
    }

    #[test]
    fn pair_census_sl2_f5() {
        let g = FiniteMatrixGroup::new(FiniteKind::SL2, 5).unwrap();
        let part = OrbitPartition::compute(&g, 2, DEFAULT_TUPLE_BUDGET).unwrap();
        let r = part.report();
        assert_eq!(r.total_tuples, 120 * 120);
        assert!(r.generating_orbits >= 2);
        assert_eq!(r.orbits.iter().map(|o| o.size).sum::<u64>(), r.total_tuples);
        // Trace is an orbit invariant.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let x = rng.gen_range(0..part.len());
            let t = part.decode(x);
            let tuple = MarkedTuple::new(t.iter().map(|&e| g.element(e)).collect()).unwrap();
            let tr = commutator_trace(&tuple).unwrap();
            let root = part.decode(part.orbit_of(x));
            assert_eq!(tr, g.commutator_trace_idx(root[0], root[1]));
            for mv in NielsenMove::all(2) {
                let y = tuple.apply(mv).unwrap();
                let yi: Vec<usize> = y.entries().iter().map(|e| g.index_of(e).unwrap()).collect();
                assert_eq!(part.orbit_of(part.encode(&yi)), part.orbit_of(x));
            }
        }
    }

    #[test]
    fn budget_guard() {
        let g = FiniteMatrixGroup::new(FiniteKind::SL2, 11).unwrap();
        match OrbitPartition::compute(&g, 3, DEFAULT_TUPLE_BUDGET) {
            Err(Error::BudgetExceeded { required, .. }) => assert_eq!(required, 1320u128.pow(3)),
            other => panic!("expected a budget refusal, got {:?}", other.map(|p| p.len())),
        }
    }
}
