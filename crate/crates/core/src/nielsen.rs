//! Marked tuples and the Nielsen generators of `Aut(F_k)`.
//!
//! Moves act on tuples by the fixed convention
//!
//! * `R±(i,j)`: `x_j ↦ x_j · x_i^{±1}`
//! * `L±(i,j)`: `x_j ↦ x_i^{±1} · x_j`
//! * `T(i,j)`: swap `x_i` and `x_j`
//!
//! with 1-based indices. A [`NielsenWord`] is applied left to right.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{CommutatorTrace, GroupElement, TreeIsometry};
use crate::psl2::IsometryClass;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MarkedTuple<G> {
    entries: Vec<G>,
}

impl<G: GroupElement> MarkedTuple<G> {
    pub fn new(entries: Vec<G>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::WrongArity {
                expected: 2,
                got: entries.len(),
            });
        }
        Ok(MarkedTuple { entries })
    }

    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[G] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<G> {
        self.entries
    }

    /// 1-based access.
    pub fn entry(&self, i: usize) -> Result<&G> {
        if i == 0 || i > self.k() {
            return Err(Error::IndexOutOfRange(format!("entry {i} of a {}-tuple", self.k())));
        }
        Ok(&self.entries[i - 1])
    }

    pub fn apply(&self, mv: NielsenMove) -> Result<Self> {
        mv.check(self.k())?;
        let (i, j) = (mv.i - 1, mv.j - 1);
        let mut entries = self.entries.clone();
        let xi = &self.entries[i];
        let xj = &self.entries[j];
        match mv.kind {
            MoveKind::Swap => entries.swap(i, j),
            MoveKind::RPlus => entries[j] = xj.compose(xi)?,
            MoveKind::RMinus => entries[j] = xj.compose(&xi.inverse()?)?,
            MoveKind::LPlus => entries[j] = xi.compose(xj)?,
            MoveKind::LMinus => entries[j] = xi.inverse()?.compose(xj)?,
        }
        Ok(MarkedTuple { entries })
    }

    pub fn apply_word(&self, word: &NielsenWord) -> Result<Self> {
        let mut t = self.clone();
        for &mv in word.moves() {
            t = t.apply(mv)?;
        }
        Ok(t)
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.k() == other.k() && self.entries.iter().zip(&other.entries).all(|(a, b)| a.same_as(b))
    }

    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MoveKind {
    Swap,
    RPlus,
    RMinus,
    LPlus,
    LMinus,
}

impl MoveKind {
    fn token(self) -> &'static str {
        match self {
            MoveKind::Swap => "T",
            MoveKind::RPlus => "R+",
            MoveKind::RMinus => "R-",
            MoveKind::LPlus => "L+",
            MoveKind::LMinus => "L-",
        }
    }
}

/// One Nielsen generator. Swaps are stored with `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NielsenMove {
    kind: MoveKind,
    i: usize,
    j: usize,
}

impl NielsenMove {
    pub fn new(kind: MoveKind, i: usize, j: usize) -> Result<Self> {
        if i == 0 || j == 0 || i == j {
            return Err(Error::IndexOutOfRange(format!("move indices ({i}, {j})")));
        }
        let (i, j) = if kind == MoveKind::Swap {
            (i.min(j), i.max(j))
        } else {
            (i, j)
        };
        Ok(NielsenMove { kind, i, j })
    }

    pub fn swap(i: usize, j: usize) -> Result<Self> {
        Self::new(MoveKind::Swap, i, j)
    }

    pub fn r_plus(i: usize, j: usize) -> Result<Self> {
        Self::new(MoveKind::RPlus, i, j)
    }

    pub fn kind(&self) -> MoveKind {
        self.kind
    }

    pub fn indices(&self) -> (usize, usize) {
        (self.i, self.j)
    }

    pub fn inverse(&self) -> Self {
        let kind = match self.kind {
            MoveKind::Swap => MoveKind::Swap,
            MoveKind::RPlus => MoveKind::RMinus,
            MoveKind::RMinus => MoveKind::RPlus,
            MoveKind::LPlus => MoveKind::LMinus,
            MoveKind::LMinus => MoveKind::LPlus,
        };
        NielsenMove { kind, ..*self }
    }

    fn check(&self, k: usize) -> Result<()> {
        if self.i > k || self.j > k {
            return Err(Error::IndexOutOfRange(format!("move {self} on a {k}-tuple")));
        }
        Ok(())
    }

    /// Every generator for `k`-tuples, in ascending order.
    pub fn all(k: usize) -> Vec<NielsenMove> {
        let mut out = Vec::new();
        for kind in [
            MoveKind::Swap,
            MoveKind::RPlus,
            MoveKind::RMinus,
            MoveKind::LPlus,
            MoveKind::LMinus,
        ] {
            for i in 1..=k {
                for j in 1..=k {
                    if i != j && (kind != MoveKind::Swap || i < j) {
                        out.push(NielsenMove { kind, i, j });
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for NielsenMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.kind.token(), self.i, self.j)
    }
}

impl FromStr for NielsenMove {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let [tok, i, j] = parts.as_slice() else {
            return Err(Error::parse(format!("bad move `{s}`")));
        };
        let kind = match *tok {
            "T" => MoveKind::Swap,
            "R+" => MoveKind::RPlus,
            "R-" => MoveKind::RMinus,
            "L+" => MoveKind::LPlus,
            "L-" => MoveKind::LMinus,
            _ => return Err(Error::parse(format!("unknown move `{tok}`"))),
        };
        let idx = |x: &str| x.parse::<usize>().map_err(|_| Error::parse(format!("bad index `{x}`")));
        NielsenMove::new(kind, idx(i)?, idx(j)?)
    }
}

/// A finite sequence of moves; text form `R+ 1 3, T 2 3`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NielsenWord(Vec<NielsenMove>);

impl NielsenWord {
    pub fn empty() -> Self {
        NielsenWord(Vec::new())
    }

    pub fn from_moves(moves: Vec<NielsenMove>) -> Self {
        NielsenWord(moves)
    }

    pub fn moves(&self) -> &[NielsenMove] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn then(&self, mv: NielsenMove) -> Self {
        let mut v = self.0.clone();
        v.push(mv);
        NielsenWord(v)
    }

    pub fn concat(&self, other: &NielsenWord) -> Self {
        NielsenWord(self.0.iter().chain(&other.0).copied().collect())
    }

    pub fn inverse(&self) -> Self {
        NielsenWord(self.0.iter().rev().map(NielsenMove::inverse).collect())
    }
}

impl fmt::Display for NielsenWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, mv) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{mv}")?;
        }
        Ok(())
    }
}

impl FromStr for NielsenWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().is_empty() {
            return Ok(NielsenWord::empty());
        }
        s.split(',')
            .map(|t| t.trim().parse())
            .collect::<Result<Vec<_>>>()
            .map(NielsenWord)
    }
}

/// `tr([x₁, x₂])` for a pair.
pub fn commutator_trace<G: CommutatorTrace>(t: &MarkedTuple<G>) -> Result<G::Trace> {
    if t.k() != 2 {
        return Err(Error::WrongArity {
            expected: 2,
            got: t.k(),
        });
    }
    G::commutator_trace(&t.entries[0], &t.entries[1])
}

/// Entry `i` elliptic and entry `j` hyperbolic.
pub fn membership_o<G: GroupElement>(t: &MarkedTuple<G>, i: usize, j: usize) -> Result<bool> {
    Ok(t.entry(i)?.classify()?.is_elliptic() && t.entry(j)?.classify()?.is_hyperbolic())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    /// Maximum number of expanded tuples.
    pub budget: usize,
    /// Tuples kept per level.
    pub beam: usize,
}

impl SearchConfig {
    pub const DEFAULT_BUDGET: usize = 10_000;
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            budget: Self::DEFAULT_BUDGET,
            beam: 256,
        }
    }
}

// (min ℓ over entries, Σ ℓ)
type Potential = (u32, u64);

fn potential<G: GroupElement>(t: &MarkedTuple<G>) -> Result<(bool, Potential)> {
    let mut first = false;
    let (mut lo, mut sum) = (u32::MAX, 0u64);
    for (n, x) in t.entries.iter().enumerate() {
        let l = x.classify()?.translation_length();
        if n == 0 {
            first = l == 0;
        }
        lo = lo.min(l);
        sum += l as u64;
    }
    Ok((first, (lo, sum)))
}

/// A word making the first entry elliptic, found by a level-by-level beam
/// search ordered by [`potential`]. Among successes at the first level that
/// has any, the least word is returned, so the result does not depend on
/// scheduling.
pub fn reduce_to_elliptic<G: GroupElement>(t: &MarkedTuple<G>, budget: usize) -> Result<NielsenWord> {
    reduce_to_elliptic_with(
        t,
        SearchConfig {
            budget,
            ..SearchConfig::default()
        },
    )
}

pub fn reduce_to_elliptic_with<G: GroupElement>(t: &MarkedTuple<G>, cfg: SearchConfig) -> Result<NielsenWord> {
    let (done, _) = potential(t)?;
    if done {
        return Ok(NielsenWord::empty());
    }
    let moves = NielsenMove::all(t.k());
    let mut visited = HashSet::new();
    visited.insert(t.fingerprint());
    let mut level = vec![(NielsenWord::empty(), t.clone())];
    let mut expanded = 0usize;
    while !level.is_empty() && expanded < cfg.budget {
        let take = level.len().min(cfg.budget - expanded);
        expanded += take;
        let children: Vec<(NielsenWord, MarkedTuple<G>, bool, Potential)> = level[..take]
            .par_iter()
            .map(|(w, x)| expand(w, x, &moves))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        if let Some(best) = children.iter().filter(|c| c.2).map(|c| &c.0).min() {
            return Ok(best.clone());
        }
        let mut next: Vec<_> = children
            .into_iter()
            .filter(|c| visited.insert(c.1.fingerprint()))
            .collect();
        next.sort_by(|a, b| a.3.cmp(&b.3).then_with(|| a.0.cmp(&b.0)));
        next.truncate(cfg.beam);
        level = next.into_iter().map(|(w, x, _, _)| (w, x)).collect();
    }
    Err(Error::ReductionFailed { budget: cfg.budget })
}

#[allow(clippy::type_complexity)]
fn expand<G: GroupElement>(
    w: &NielsenWord,
    x: &MarkedTuple<G>,
    moves: &[NielsenMove],
) -> Result<Vec<(NielsenWord, MarkedTuple<G>, bool, Potential)>> {
    let mut out = Vec::with_capacity(moves.len());
    for &mv in moves {
        let y = match x.apply(mv) {
            Ok(y) => y,
            Err(e) if e.is_refusal() => continue,
            Err(e) => return Err(e),
        };
        match potential(&y) {
            Ok((ok, pot)) => out.push((w.then(mv), y, ok, pot)),
            Err(e) if e.is_refusal() => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Scan radius used to look for a common fixed vertex.
pub const DEFAULT_SCAN_RADIUS: u32 = 6;

/// The least `i ≥ 2` with `x_i · x_1` hyperbolic.
pub fn serre_scan<G: GroupElement>(t: &MarkedTuple<G>) -> Result<Option<usize>> {
    let x1 = &t.entries[0];
    for i in 2..=t.k() {
        if t.entries[i - 1].compose(x1)?.classify()?.is_hyperbolic() {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// A word moving a tuple with elliptic first entry into `O₁,₂` (first
/// entry elliptic, second hyperbolic).
///
/// Tried in order: a hyperbolic entry swapped into place; a hyperbolic
/// product `x_i x_1` (`R+(1,i)` then `T(2,i)`); a hyperbolic product
/// `x_j x_i` with `i, j ≥ 2`. If every such product is elliptic the entries
/// pairwise share fixed vertices, hence have a common one, which is then
/// looked for within `radius`.
pub fn normalize_to_o<G: TreeIsometry>(t: &MarkedTuple<G>, radius: u32) -> Result<NielsenWord> {
    let classes = t
        .entries
        .iter()
        .map(|x| x.classify())
        .collect::<Result<Vec<IsometryClass>>>()?;
    if !classes[0].is_elliptic() {
        return Err(Error::Precondition("first entry is not elliptic".into()));
    }
    let place = |i: usize| -> Result<NielsenWord> {
        Ok(if i == 2 {
            NielsenWord::empty()
        } else {
            NielsenWord::from_moves(vec![NielsenMove::swap(2, i)?])
        })
    };
    if let Some(i) = (2..=t.k()).find(|&i| classes[i - 1].is_hyperbolic()) {
        return place(i);
    }
    if let Some(i) = serre_scan(t)? {
        return Ok(NielsenWord::from_moves(vec![NielsenMove::r_plus(1, i)?]).concat(&place(i)?));
    }
    for j in 2..=t.k() {
        for i in 2..=t.k() {
            if i != j && t.entries[j - 1].compose(&t.entries[i - 1])?.classify()?.is_hyperbolic() {
                return Ok(NielsenWord::from_moves(vec![NielsenMove::r_plus(i, j)?]).concat(&place(j)?));
            }
        }
    }
    let mut common: Option<BTreeSet<String>> = None;
    for x in &t.entries {
        let fixed = x.fixed_vertex_keys(radius)?;
        common = Some(match common {
            None => fixed,
            Some(c) => c.intersection(&fixed).cloned().collect(),
        });
    }
    match common.and_then(|c| c.into_iter().next()) {
        Some(vertex) => Err(Error::CommonFixedVertex { vertex }),
        None => Err(Error::NoWitness { radius }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localfield::{FieldSpec, LocalFieldElement as Elem};
    use crate::psl2::{LengthLaw, ProjectiveMatrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q5() -> FieldSpec {
        FieldSpec::padic(5, 32).unwrap()
    }

    fn triple(rng: &mut ChaCha8Rng) -> MarkedTuple<ProjectiveMatrix> {
        let s = q5();
        MarkedTuple::new(vec![
            ProjectiveMatrix::sample_hyperbolic(s, rng, LengthLaw::Fixed(1)),
            ProjectiveMatrix::sample_elliptic(s, rng),
            ProjectiveMatrix::sample_compact(s, rng),
        ])
        .unwrap()
    }

    #[test]
    fn move_text_round_trip() {
        let w: NielsenWord = "R+ 1 3, T 3 2, L- 2 1".parse().unwrap();
        assert_eq!(w.to_string(), "R+ 1 3, T 2 3, L- 2 1");
        assert_eq!(w.inverse().to_string(), "L+ 2 1, T 2 3, R- 1 3");
        assert!("R+ 1 1".parse::<NielsenWord>().is_err());
        assert_eq!(NielsenMove::all(3).len(), 27);
    }

    #[test]
    fn move_formulas() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = triple(&mut rng);
        let [a, b, c] = [t.entries[0].clone(), t.entries[1].clone(), t.entries[2].clone()];
        let r = t.apply(NielsenMove::r_plus(1, 2).unwrap()).unwrap();
        assert!(r.same_as(&MarkedTuple::new(vec![a.clone(), b.compose(&a).unwrap(), c.clone()]).unwrap()));
        let s = t.apply(NielsenMove::swap(1, 2).unwrap()).unwrap();
        assert!(s.same_as(&MarkedTuple::new(vec![b, a, c]).unwrap()));
        for mv in NielsenMove::all(3) {
            assert!(t.apply(mv).unwrap().apply(mv.inverse()).unwrap().same_as(&t), "{mv}");
        }
        assert!(matches!(
            t.apply("T 1 4".parse().unwrap()),
            Err(Error::IndexOutOfRange(_))
        ));
    }

    #[test]
    fn commutator_trace_examples() {
        let s = q5();
        let g = ProjectiveMatrix::diag(&Elem::from_i64(s, 5)).unwrap();
        let u = ProjectiveMatrix::unipotent(&Elem::one(s));
        let t = MarkedTuple::new(vec![g.clone(), ProjectiveMatrix::identity(s)]).unwrap();
        assert!(commutator_trace(&t).unwrap().eq_at_precision(&Elem::from_i64(s, 2)));
        let t = MarkedTuple::new(vec![g, u]).unwrap();
        let before = commutator_trace(&t).unwrap();
        for mv in NielsenMove::all(2) {
            assert!(commutator_trace(&t.apply(mv).unwrap())
                .unwrap()
                .eq_at_precision(&before));
        }
    }

    #[test]
    fn reduction_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = q5();
        let h = ProjectiveMatrix::sample_hyperbolic(s, &mut rng, LengthLaw::Fixed(1));
        let e = ProjectiveMatrix::sample_elliptic(s, &mut rng);
        let t = MarkedTuple::new(vec![e.clone(), h.clone()]).unwrap();
        assert!(reduce_to_elliptic(&t, 100).unwrap().is_empty());
        let t = MarkedTuple::new(vec![h.clone(), e.clone(), h.clone()]).unwrap();
        assert_eq!(reduce_to_elliptic(&t, 100).unwrap().to_string(), "T 1 2");
        let eh = e.compose(&h).unwrap();
        let e2 = ProjectiveMatrix::sample_elliptic(s, &mut rng);
        let t = MarkedTuple::new(vec![eh, h, e2]).unwrap();
        let w = reduce_to_elliptic(&t, 1000).unwrap();
        assert!(t.apply_word(&w).unwrap().entries[0].classify().unwrap().is_elliptic());
    }

    #[test]
    fn membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = q5();
        let h = ProjectiveMatrix::sample_hyperbolic(s, &mut rng, LengthLaw::Fixed(1));
        let e = ProjectiveMatrix::sample_elliptic(s, &mut rng);
        let t = MarkedTuple::new(vec![e.clone(), h.clone(), e.clone()]).unwrap();
        assert!(membership_o(&t, 1, 2).unwrap());
        assert!(normalize_to_o(&t, 4).unwrap().is_empty());
        let t = MarkedTuple::new(vec![h.clone(), e.clone(), e.clone()]).unwrap();
        assert!(!membership_o(&t, 1, 2).unwrap());
        assert!(membership_o(&t, 2, 1).unwrap());
        let t = MarkedTuple::new(vec![e.clone(), e.clone(), e.clone(), h]).unwrap();
        assert_eq!(normalize_to_o(&t, 4).unwrap().to_string(), "T 2 4");
        let t = MarkedTuple::new(vec![e.clone(), e.clone(), e]).unwrap();
        assert!(!(1..=3).any(|i| (1..=3).any(|j| i != j && membership_o(&t, i, j).unwrap())));
        assert!(matches!(normalize_to_o(&t, 4), Err(Error::CommonFixedVertex { .. })));
    }

    #[test]
    fn serre_step_on_separated_elliptics() {
        // Stabilisers of the base vertex and of a vertex at distance 2.
        let s = q5();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = ProjectiveMatrix::cartan(s, 1);
        let x1 = loop {
            let k = ProjectiveMatrix::sample_compact(s, &mut rng);
            if k.fixed_vertex_keys(1).unwrap().len() == 1 {
                break k;
            }
        };
        let x2 = loop {
            let k = ProjectiveMatrix::sample_compact(s, &mut rng);
            if k.fixed_vertex_keys(1).unwrap().len() == 1 {
                break k.conjugate(&a).unwrap();
            }
        };
        let x3 = x1.clone();
        let t = MarkedTuple::new(vec![x1, x3, x2]).unwrap();
        let i = serre_scan(&t).unwrap().unwrap();
        assert_eq!(i, 3);
        let w = normalize_to_o(&t, 4).unwrap();
        assert_eq!(w.to_string(), "R+ 1 3, T 2 3");
        assert!(membership_o(&t.apply_word(&w).unwrap(), 1, 2).unwrap());
    }
}
