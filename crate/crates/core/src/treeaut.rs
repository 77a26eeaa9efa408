//! Finite-depth portraits of automorphisms of the `(q+1)`-regular tree.
//!
//! Vertices are reduced words over the colours `0..=q` (no letter repeated
//! twice in a row): the tree is the Cayley graph of the free product of
//! `q + 1` copies of `Z/2`, and the empty word is the base vertex. A portrait
//! of depth `R` records the image of every word of length `≤ R`.

use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::psl2::IsometryClass;

/// Longest word a [`Word`] can hold.
pub const MAX_WORD_LEN: usize = 32;

/// A reduced colour word, packed four bits per letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word {
    len: u8,
    bits: u128,
}

impl Word {
    pub const EMPTY: Word = Word { len: 0, bits: 0 };

    pub fn from_letters(letters: &[u8]) -> Result<Word> {
        let mut w = Word::EMPTY;
        for &c in letters {
            if w.last() == Some(c) {
                return Err(Error::parse(format!("word {letters:?} is not reduced")));
            }
            w = w.push(c)?;
        }
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn letter(&self, i: usize) -> u8 {
        ((self.bits >> (4 * i)) & 0xf) as u8
    }

    pub fn last(&self) -> Option<u8> {
        if self.len == 0 {
            None
        } else {
            Some(self.letter(self.len() - 1))
        }
    }

    pub fn letters(&self) -> Vec<u8> {
        (0..self.len()).map(|i| self.letter(i)).collect()
    }

    fn push(self, c: u8) -> Result<Word> {
        if self.len() >= MAX_WORD_LEN {
            return Err(Error::DepthExhausted(format!("word longer than {MAX_WORD_LEN}")));
        }
        Ok(Word {
            len: self.len + 1,
            bits: self.bits | ((c as u128) << (4 * self.len())),
        })
    }

    fn pop(self) -> Word {
        debug_assert!(self.len > 0);
        let len = self.len - 1;
        Word {
            len,
            bits: self.bits & ((1u128 << (4 * len as u32)) - 1),
        }
    }

    /// Neighbour along the edge of colour `c`.
    pub fn step(self, c: u8) -> Result<Word> {
        if self.last() == Some(c) {
            Ok(self.pop())
        } else {
            self.push(c)
        }
    }

    /// Group product `self · other`, i.e. `other` read from the vertex `self`.
    pub fn concat(self, other: Word) -> Result<Word> {
        let mut w = self;
        for i in 0..other.len() {
            w = w.step(other.letter(i))?;
        }
        Ok(w)
    }

    pub fn reverse(self) -> Word {
        let mut w = Word::EMPTY;
        for i in (0..self.len()).rev() {
            w = w.push(self.letter(i)).expect("same length");
        }
        w
    }

    fn common_prefix(self, other: Word) -> usize {
        let x = self.bits ^ other.bits;
        let agree = (x.trailing_zeros() / 4) as usize;
        agree.min(self.len()).min(other.len())
    }

    pub fn dist(self, other: Word) -> u32 {
        let c = self.common_prefix(other);
        (self.len() + other.len() - 2 * c) as u32
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("e");
        }
        for i in 0..self.len() {
            write!(f, "{}", self.letter(i))?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Word> {
        if s == "e" {
            return Ok(Word::EMPTY);
        }
        let letters = s
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::parse(format!("bad word `{s}`")))
            })
            .collect::<Result<Vec<u8>>>()?;
        Word::from_letters(&letters)
    }
}

/// Tree `T_{q+1}` with `2 ≤ q ≤ 9`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RegularTree {
    q: u8,
}

impl RegularTree {
    pub const DEFAULT_DEPTH: u32 = 12;

    pub fn new(q: u32) -> Result<Self> {
        if !(2..=9).contains(&q) {
            return Err(Error::InvalidSpec(format!("tree degree q = {q} outside 2..=9")));
        }
        Ok(RegularTree { q: q as u8 })
    }

    pub fn q(&self) -> u32 {
        self.q as u32
    }

    pub fn colors(&self) -> u8 {
        self.q + 1
    }

    /// `1 + (q+1)(q^R − 1)/(q − 1)`.
    pub fn ball_size(&self, radius: u32) -> usize {
        let q = self.q as usize;
        1 + (q + 1) * (q.pow(radius) - 1) / (q - 1)
    }

    /// Words of length `≤ radius` in breadth-first order, children by colour.
    pub fn ball(&self, radius: u32) -> Vec<Word> {
        let mut out = vec![Word::EMPTY];
        let mut start = 0;
        for _ in 0..radius {
            let end = out.len();
            for i in start..end {
                let w = out[i];
                for c in 0..self.colors() {
                    if w.last() != Some(c) {
                        out.push(w.push(c).expect("radius fits a word"));
                    }
                }
            }
            start = end;
        }
        out
    }

    /// Position of `w` in [`ball`](Self::ball) order.
    pub fn index(&self, w: Word) -> usize {
        let n = w.len();
        if n == 0 {
            return 0;
        }
        let q = self.q as usize;
        let mut rank = w.letter(0) as usize;
        for i in 1..n {
            let c = w.letter(i) as usize;
            let prev = w.letter(i - 1) as usize;
            rank = rank * q + if c < prev { c } else { c - 1 };
        }
        self.ball_size(n as u32 - 1) + rank
    }

    /// A uniformly random reduced word of length `n`.
    pub fn random_word<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Word {
        let mut w = Word::EMPTY;
        for _ in 0..n {
            loop {
                let c = rng.gen_range(0..self.colors());
                if w.last() != Some(c) {
                    w = w.push(c).expect("length bounded by caller");
                    break;
                }
            }
        }
        w
    }
}

/// The restriction of a tree automorphism to the ball of radius `depth`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TreePortrait {
    tree: RegularTree,
    depth: u32,
    images: Vec<Word>,
}

impl TreePortrait {
    pub fn identity(tree: RegularTree, depth: u32) -> Result<Self> {
        Self::left_multiplication(tree, Word::EMPTY, depth)
    }

    /// `x ↦ w·x`: colour-preserving, moves the base vertex to `w`.
    pub fn left_multiplication(tree: RegularTree, w: Word, depth: u32) -> Result<Self> {
        check_fits(depth, w.len())?;
        let images = tree
            .ball(depth)
            .into_iter()
            .map(|x| w.concat(x))
            .collect::<Result<_>>()?;
        Ok(TreePortrait { tree, depth, images })
    }

    /// Translation by `2m` along the axis of alternating colours `0, 1`.
    pub fn canonical_shift(tree: RegularTree, m: u32, depth: u32) -> Result<Self> {
        let letters: Vec<u8> = (0..2 * m).map(|i| (i % 2) as u8).collect();
        Self::left_multiplication(tree, Word::from_letters(&letters)?, depth)
    }

    /// Builds a portrait from an explicit table in ball order, validating it.
    pub fn from_table(tree: RegularTree, depth: u32, images: Vec<Word>) -> Result<Self> {
        if images.len() != tree.ball_size(depth) {
            return Err(Error::parse(format!(
                "table has {} rows, depth {depth} needs {}",
                images.len(),
                tree.ball_size(depth)
            )));
        }
        let g = TreePortrait { tree, depth, images };
        if !g.is_consistent() {
            return Err(Error::parse("table does not preserve adjacency"));
        }
        Ok(g)
    }

    pub fn tree(&self) -> RegularTree {
        self.tree
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Image of the base vertex.
    pub fn root_image(&self) -> Word {
        self.images[0]
    }

    /// `d₀`, the displacement of the base vertex.
    pub fn root_displacement(&self) -> u32 {
        self.images[0].len() as u32
    }

    /// Membership in `Aut⁰(T)`: the bipartition is preserved iff `d₀` is even.
    pub fn preserves_bipartition(&self) -> bool {
        self.root_displacement().is_multiple_of(2)
    }

    pub fn apply(&self, w: Word) -> Result<Word> {
        if w.len() as u32 > self.depth {
            return Err(Error::DepthExhausted(format!(
                "word of length {} beyond portrait depth {}",
                w.len(),
                self.depth
            )));
        }
        Ok(self.images[self.tree.index(w)])
    }

    pub fn image_table(&self) -> &[Word] {
        &self.images
    }

    /// `self ∘ other`, defined to depth `min(depth(other), depth(self) − d₀(other))`.
    pub fn compose(&self, other: &TreePortrait) -> Result<Self> {
        if self.tree != other.tree {
            return Err(Error::InvalidSpec("portraits of different trees".into()));
        }
        let reach = self.depth as i64 - other.root_displacement() as i64;
        let depth = (other.depth as i64).min(reach);
        if depth < 1 {
            return Err(Error::DepthExhausted(format!("composition has depth {depth}")));
        }
        let depth = depth as u32;
        let n = self.tree.ball_size(depth);
        let images = other.images[..n]
            .iter()
            .map(|&y| self.images[self.tree.index(y)])
            .collect();
        Ok(TreePortrait {
            tree: self.tree,
            depth,
            images,
        })
    }

    /// Inverse, defined to depth `depth − d₀`.
    pub fn invert(&self) -> Result<Self> {
        let d0 = self.root_displacement();
        if self.depth < d0 + 1 {
            return Err(Error::DepthExhausted(format!(
                "inverse of a depth-{} portrait moving the root by {d0}",
                self.depth
            )));
        }
        let depth = self.depth - d0;
        let n = self.tree.ball_size(depth);
        let mut images = vec![Word::EMPTY; n];
        let mut filled = 0usize;
        let domain = self.tree.ball(self.depth);
        for (x, &y) in domain.iter().zip(&self.images) {
            if y.len() as u32 <= depth {
                images[self.tree.index(y)] = *x;
                filled += 1;
            }
        }
        if filled != n {
            return Err(Error::DepthExhausted("portrait is not onto the inverse domain".into()));
        }
        Ok(TreePortrait {
            tree: self.tree,
            depth,
            images,
        })
    }

    /// Truncates to a smaller depth.
    pub fn restrict(&self, depth: u32) -> Self {
        let depth = depth.min(self.depth);
        let n = self.tree.ball_size(depth);
        TreePortrait {
            tree: self.tree,
            depth,
            images: self.images[..n].to_vec(),
        }
    }

    /// Checks that the table is injective and maps neighbours to neighbours.
    pub fn is_consistent(&self) -> bool {
        let domain = self.tree.ball(self.depth);
        let mut seen = HashMap::with_capacity(domain.len());
        for (i, (&x, &y)) in domain.iter().zip(&self.images).enumerate() {
            if seen.insert(y, i).is_some() {
                return false;
            }
            if !x.is_empty() {
                let parent = self.images[self.tree.index(x.pop())];
                if parent.dist(y) != 1 {
                    return false;
                }
            }
        }
        true
    }

    /// `d(x, g x)`.
    pub fn displacement(&self, x: Word) -> Result<u32> {
        Ok(x.dist(self.apply(x)?))
    }

    /// Same radius-expansion oracle as for the Bruhat–Tits tree, over words.
    pub fn classify(&self) -> Result<IsometryClass> {
        let mut f = self.displacement(Word::EMPTY)?;
        let mut start = 1usize;
        for r in 1..=self.depth {
            let end = self.tree.ball_size(r);
            let domain_end = self.images.len().min(end);
            let shell_min = (start..domain_end)
                .map(|i| self.images[i].dist(self.word_at(i)))
                .min()
                .unwrap_or(u32::MAX);
            let next = f.min(shell_min);
            if next == f {
                if f % 2 == 1 {
                    return Err(Error::Precondition("odd displacement: not in Aut⁰".into()));
                }
                return Ok(IsometryClass::from_length(f));
            }
            f = next;
            start = end;
        }
        Err(Error::DepthExhausted(format!(
            "displacement did not stabilise within depth {}",
            self.depth
        )))
    }

    fn word_at(&self, i: usize) -> Word {
        // Inverse of RegularTree::index.
        let tree = self.tree;
        let q = tree.q as usize;
        let mut n = 0u32;
        while tree.ball_size(n) <= i {
            n += 1;
        }
        if n == 0 {
            return Word::EMPTY;
        }
        let mut rank = i - tree.ball_size(n - 1);
        let mut digits = vec![0usize; n as usize];
        for k in (1..n as usize).rev() {
            digits[k] = rank % q;
            rank /= q;
        }
        digits[0] = rank;
        let mut w = Word::EMPTY;
        let mut prev = None;
        for (k, &d) in digits.iter().enumerate() {
            let c = if k == 0 {
                d as u8
            } else {
                let p = prev.expect("previous letter");
                if d < p as usize {
                    d as u8
                } else {
                    d as u8 + 1
                }
            };
            w = w.push(c).expect("fits");
            prev = Some(c);
        }
        w
    }

    /// Vertices of length `≤ radius` fixed by the portrait.
    pub fn fixed_set_in_ball(&self, radius: u32) -> Result<Vec<Word>> {
        if radius > self.depth {
            return Err(Error::DepthExhausted(format!(
                "radius {radius} beyond depth {}",
                self.depth
            )));
        }
        let n = self.tree.ball_size(radius);
        Ok(self
            .tree
            .ball(radius)
            .into_iter()
            .zip(&self.images[..n])
            .filter(|(x, y)| x == *y)
            .map(|(x, _)| x)
            .collect())
    }

    /// Haar-uniform element of the stabiliser of the base vertex, truncated
    /// to depth `R`: an independent uniform bijection of the outgoing colours
    /// at every vertex of the ball of radius `R − 1`.
    pub fn sample_stabilizer<R: Rng + ?Sized>(tree: RegularTree, rng: &mut R, depth: u32) -> Result<Self> {
        Self::sample_stabilizer_with_root(tree, rng, depth, None)
    }

    /// As [`sample_stabilizer`](Self::sample_stabilizer) but with a prescribed
    /// permutation of the colours at the base vertex.
    pub fn sample_stabilizer_with_root<R: Rng + ?Sized>(
        tree: RegularTree,
        rng: &mut R,
        depth: u32,
        root_perm: Option<&[u8]>,
    ) -> Result<Self> {
        if depth < 1 {
            return Err(Error::DepthExhausted("stabiliser depth must be at least 1".into()));
        }
        check_fits(depth, 0)?;
        let domain = tree.ball(depth);
        let mut images = vec![Word::EMPTY; domain.len()];
        let colors = tree.colors();
        let interior = tree.ball_size(depth - 1);
        for i in 0..interior {
            let x = domain[i];
            let gx = images[i];
            let sources: Vec<u8> = (0..colors).filter(|&c| x.last() != Some(c)).collect();
            let mut targets: Vec<u8> = (0..colors).filter(|&c| gx.last() != Some(c)).collect();
            match (i, root_perm) {
                (0, Some(perm)) => targets = perm.to_vec(),
                _ => targets.shuffle(rng),
            }
            for (&s, &t) in sources.iter().zip(&targets) {
                let child = x.push(s)?;
                images[tree.index(child)] = gx.push(t)?;
            }
        }
        Ok(TreePortrait { tree, depth, images })
    }

    /// A stabiliser sample permuting the colours at the base vertex without
    /// fixed points, so that the base vertex is its only fixed vertex.
    pub fn sample_strict_stabilizer<R: Rng + ?Sized>(tree: RegularTree, rng: &mut R, depth: u32) -> Result<Self> {
        let mut perm: Vec<u8> = (0..tree.colors()).collect();
        loop {
            perm.shuffle(rng);
            if perm.iter().enumerate().all(|(i, &c)| i as u8 != c) {
                break;
            }
        }
        Self::sample_stabilizer_with_root(tree, rng, depth, Some(&perm))
    }

    /// `s₁ ∘ τ^m ∘ s₂` with stabiliser samples `s₁, s₂` and the canonical shift
    /// by `2m`, conditioned on translation length exactly `2m`.
    pub fn sample_hyperbolic<R: Rng + ?Sized>(tree: RegularTree, rng: &mut R, depth: u32, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::Precondition("hyperbolic sample needs m ≥ 1".into()));
        }
        let shift = Self::canonical_shift(tree, m, depth)?;
        let axis_end = shift.root_image();
        loop {
            let s1 = Self::sample_stabilizer(tree, rng, depth + 2 * m)?;
            let s2 = Self::sample_stabilizer(tree, rng, depth.max(2 * m))?;
            // ℓ(s₁τs₂) = ℓ(τ s₂ s₁) = 2m iff s₂s₁(τ(∅)) does not start by
            // walking back along the last edge of τ(∅).
            let moved = s2.apply(s1.apply(axis_end)?)?;
            if moved.letter(0) == axis_end.last().expect("m ≥ 1") {
                continue;
            }
            return s1.compose(&shift.compose(&s2)?);
        }
    }

    /// `h s h⁻¹` with `s` a stabiliser sample and `h` left multiplication by a
    /// uniformly random word of length `offset`.
    pub fn sample_elliptic<R: Rng + ?Sized>(tree: RegularTree, rng: &mut R, depth: u32, offset: u32) -> Result<Self> {
        let w = tree.random_word(rng, offset as usize);
        let s = Self::sample_stabilizer(tree, rng, depth + offset)?;
        Self::conjugate_stabilizer(&s, w, depth)
    }

    /// `λ_w ∘ s ∘ λ_w⁻¹` where `λ_w` is left multiplication by `w`; fixes `w·Fix(s)`.
    pub fn conjugate_stabilizer(s: &TreePortrait, w: Word, depth: u32) -> Result<Self> {
        let tree = s.tree;
        let j = w.len() as u32;
        let back = Self::left_multiplication(tree, w.reverse(), depth)?;
        let forth = Self::left_multiplication(tree, w, depth + 2 * j)?;
        forth.compose(&s.compose(&back)?)
    }

    /// Canonical text form: a `depth` header, then one `source image` pair per
    /// line in ball order.
    pub fn serialize(&self) -> String {
        let mut out = format!("depth {} q {}\n", self.depth, self.tree.q);
        for (x, y) in self.tree.ball(self.depth).iter().zip(&self.images) {
            out.push_str(&format!("{x} {y}\n"));
        }
        out
    }

    pub fn deserialize(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse("empty portrait"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (depth, q) = match fields.as_slice() {
            ["depth", d, "q", q] => (
                d.parse::<u32>().map_err(|_| Error::parse("bad depth"))?,
                q.parse::<u32>().map_err(|_| Error::parse("bad q"))?,
            ),
            _ => return Err(Error::parse(format!("bad portrait header `{header}`"))),
        };
        let tree = RegularTree::new(q)?;
        check_fits(depth, 0)?;
        let domain = tree.ball(depth);
        let mut images = Vec::with_capacity(domain.len());
        for (x, line) in domain.iter().zip(lines.by_ref()) {
            let (src, img) = line
                .split_once(' ')
                .ok_or_else(|| Error::parse(format!("bad portrait row `{line}`")))?;
            if src.parse::<Word>()? != *x {
                return Err(Error::parse(format!("row `{line}` out of canonical order")));
            }
            images.push(img.parse::<Word>()?);
        }
        if lines.next().is_some_and(|l| !l.trim().is_empty()) {
            return Err(Error::parse("trailing rows in portrait"));
        }
        Self::from_table(tree, depth, images)
    }
}

fn check_fits(depth: u32, shift: usize) -> Result<()> {
    if depth as usize + shift > MAX_WORD_LEN {
        return Err(Error::DepthExhausted(format!(
            "depth {depth} plus displacement {shift} exceeds {MAX_WORD_LEN}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t3() -> RegularTree {
        RegularTree::new(2).unwrap()
    }

    #[test]
    fn rejects_line() {
        assert!(RegularTree::new(1).is_err());
        assert!(RegularTree::new(10).is_err());
    }

    #[test]
    fn ball_order_matches_index() {
        for q in [2, 3, 5] {
            let tree = RegularTree::new(q).unwrap();
            let ball = tree.ball(4);
            assert_eq!(ball.len(), tree.ball_size(4));
            for (i, &w) in ball.iter().enumerate() {
                assert_eq!(tree.index(w), i);
            }
            let g = TreePortrait::identity(tree, 4).unwrap();
            for (i, &w) in ball.iter().enumerate() {
                assert_eq!(g.word_at(i), w);
            }
        }
    }

    #[test]
    fn word_arithmetic() {
        let w: Word = "010".parse().unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w.concat(w.reverse()).unwrap(), Word::EMPTY);
        assert_eq!(w.dist("012".parse().unwrap()), 2);
        assert!("00".parse::<Word>().is_err());
    }

    #[test]
    fn identity_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tree = t3();
        let g = TreePortrait::sample_stabilizer(tree, &mut rng, 6).unwrap();
        let id = TreePortrait::identity(tree, 6).unwrap();
        assert_eq!(id.compose(&g).unwrap(), g);
        let gg = g.compose(&g.invert().unwrap()).unwrap();
        assert_eq!(gg, TreePortrait::identity(tree, gg.depth()).unwrap());
        let h = TreePortrait::sample_stabilizer(tree, &mut rng, 6).unwrap();
        assert_eq!(g.compose(&h).unwrap().depth(), 6);
    }

    #[test]
    fn depth_law() {
        let tree = t3();
        let shift = TreePortrait::canonical_shift(tree, 2, 8).unwrap();
        assert_eq!(shift.root_displacement(), 4);
        assert_eq!(shift.compose(&shift).unwrap().depth(), 4);
        assert_eq!(shift.invert().unwrap().depth(), 4);
        let short = TreePortrait::canonical_shift(tree, 2, 4).unwrap();
        assert!(matches!(short.compose(&short), Err(Error::DepthExhausted(_))));
    }

    #[test]
    fn shift_is_hyperbolic() {
        let tree = t3();
        assert_eq!(
            TreePortrait::identity(tree, 4).unwrap().classify(),
            Ok(IsometryClass::Elliptic)
        );
        let s = TreePortrait::canonical_shift(tree, 1, 8).unwrap();
        assert_eq!(s.classify(), Ok(IsometryClass::Hyperbolic(2)));
    }

    #[test]
    fn stabilizer_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for q in [2, 3] {
            let tree = RegularTree::new(q).unwrap();
            for _ in 0..20 {
                let s = TreePortrait::sample_stabilizer(tree, &mut rng, 5).unwrap();
                assert_eq!(s.root_image(), Word::EMPTY);
                assert!(s.preserves_bipartition());
                assert!(s.is_consistent());
            }
        }
    }

    #[test]
    fn samplers_have_their_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let tree = t3();
        for _ in 0..30 {
            let h = TreePortrait::sample_hyperbolic(tree, &mut rng, 12, 1).unwrap();
            assert_eq!(h.classify(), Ok(IsometryClass::Hyperbolic(2)));
            assert_eq!(h.depth(), 12);
            let e = TreePortrait::sample_elliptic(tree, &mut rng, 12, 2).unwrap();
            assert_eq!(e.classify(), Ok(IsometryClass::Elliptic));
        }
    }

    #[test]
    fn serialization_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = TreePortrait::sample_hyperbolic(t3(), &mut rng, 4, 1).unwrap();
        let text = g.serialize();
        assert!(text.starts_with("depth 4 q 2\ne "));
        assert_eq!(TreePortrait::deserialize(&text).unwrap(), g);
        let broken = text.replacen("\n0 ", "\n1 ", 1);
        assert!(TreePortrait::deserialize(&broken).is_err());
    }
}
