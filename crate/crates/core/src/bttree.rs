//! The Bruhat–Tits tree of `PSL_2(K)`.
//!
//! A vertex is the homothety class of a lattice in `K²`. Each class has a
//! unique basis of the form `[[π^m, b], [0, 1]]` (columns) with `m ∈ Z` and
//! `b ∈ K / π^m O`, and that pair is the stored form. A vertex `(m, b)` has
//! `q` children `(m + 1, b + jπ^m)`, one per residue digit `j`, and a parent
//! `(m − 1, b mod π^(m−1))`.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::localfield::{FieldSpec, LocalFieldElement as Elem};
use crate::psl2::{IsometryClass, Mat2, ProjectiveMatrix};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeVertex {
    m: i64,
    // Representative of b modulo π^m.
    b: ElemKey,
}

// Elements are not `Ord`; this wrapper stores the canonical digits directly so
// vertices can live in ordered sets.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct ElemKey {
    // Valuation of b (meaningless when `digits` is empty).
    v: i64,
    // Digits from position v up to m-1, trailing zeros stripped.
    digits: Vec<u32>,
}

impl LatticeVertex {
    /// The class of `O²`.
    pub fn base() -> Self {
        LatticeVertex {
            m: 0,
            b: ElemKey {
                v: 0,
                digits: Vec::new(),
            },
        }
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    /// The representative `b`, known modulo `π^m`.
    pub fn b(&self, spec: FieldSpec) -> Elem {
        Elem::from_digits(spec, self.b.v, &self.b.digits, self.m)
    }

    /// Canonical vertex for the lattice spanned by `π^m e₁` and `(b, 1)`.
    /// `b` must be known at least modulo `π^m`.
    pub fn from_parts(m: i64, b: &Elem) -> Result<Self> {
        if b.known_prec() < m {
            return Err(Error::precision(format!(
                "vertex offset known mod π^{} but π^{m} is needed",
                b.known_prec()
            )));
        }
        let reduced = b.truncate(m);
        if reduced.is_zero() {
            return Ok(LatticeVertex {
                m,
                b: ElemKey {
                    v: 0,
                    digits: Vec::new(),
                },
            });
        }
        let v = reduced.val().expect("nonzero");
        let d = reduced.unit_digits();
        let used = d.iter().rposition(|&x| x != 0).map_or(0, |i| i + 1);
        Ok(LatticeVertex {
            m,
            b: ElemKey {
                v,
                digits: d[..used].to_vec(),
            },
        })
    }

    fn b_exact(&self, spec: FieldSpec) -> Result<Elem> {
        if self.b.digits.is_empty() {
            return Ok(Elem::zero(spec));
        }
        if self.b.digits.len() > spec.precision() as usize {
            return Err(Error::precision("vertex offset longer than the relative precision"));
        }
        Ok(Elem::from_digits(
            spec,
            self.b.v,
            &self.b.digits,
            self.b.v + spec.precision() as i64,
        ))
    }

    /// Basis matrix `[[π^m, b], [0, 1]]` with `b` taken as an exact representative.
    pub fn basis(&self, spec: FieldSpec) -> Result<Mat2> {
        Ok(Mat2::new(
            Elem::uniformizer_pow(spec, self.m),
            self.b_exact(spec)?,
            Elem::zero(spec),
            Elem::one(spec),
        ))
    }

    /// The `q + 1` neighbours: children by digit value, then the parent.
    pub fn neighbors(&self, spec: FieldSpec) -> Vec<LatticeVertex> {
        let mut out: Vec<LatticeVertex> = (0..spec.p()).map(|j| self.child(j)).collect();
        out.push(self.parent());
        out
    }

    fn child(&self, j: u32) -> LatticeVertex {
        let mut b = self.b.clone();
        if j != 0 {
            if b.digits.is_empty() {
                b = ElemKey {
                    v: self.m,
                    digits: vec![j],
                };
            } else {
                let pos = (self.m - b.v) as usize;
                b.digits.resize(pos, 0);
                b.digits.push(j);
            }
        }
        LatticeVertex { m: self.m + 1, b }
    }

    fn parent(&self) -> LatticeVertex {
        let m = self.m - 1;
        let mut b = self.b.clone();
        if !b.digits.is_empty() {
            let keep = (m - b.v).max(0) as usize;
            b.digits.truncate(keep);
            while b.digits.last() == Some(&0) {
                b.digits.pop();
            }
            if b.digits.is_empty() {
                b.v = 0;
            }
        }
        LatticeVertex { m, b }
    }

    // Digit of b at position m-1: which child of the parent this vertex is.
    fn child_index(&self) -> u32 {
        let pos = self.m - 1;
        if self.b.digits.is_empty() || pos < self.b.v {
            return 0;
        }
        self.b.digits.get((pos - self.b.v) as usize).copied().unwrap_or(0)
    }

    /// Text form `m:<int>;b:<element encoding>`.
    pub fn encode(&self, spec: FieldSpec) -> String {
        format!("m:{};b:{}", self.m, self.b(spec))
    }

    pub fn decode(spec: FieldSpec, text: &str) -> Result<Self> {
        let bad = || Error::parse(format!("malformed vertex `{text}`"));
        let rest = text.trim().strip_prefix("m:").ok_or_else(bad)?;
        let (m, b) = rest.split_once(";b:").ok_or_else(bad)?;
        let m: i64 = m.parse().map_err(|_| bad())?;
        let b = Elem::decode(spec, b)?;
        if b.known_prec() != m {
            return Err(Error::parse(format!("vertex offset must be known mod π^{m}: `{text}`")));
        }
        Self::from_parts(m, &b)
    }
}

/// A display helper binding a vertex to its field.
pub struct VertexDisplay<'a>(pub &'a LatticeVertex, pub FieldSpec);

impl fmt::Display for VertexDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.encode(self.1))
    }
}

/// Valuations `(e₁, e₂)` of the invariant factors of `m` over `O`:
/// `e₁` is the least entry valuation and `e₁ + e₂ = v(det m)`.
pub fn invariant_factor_valuations(m: &Mat2) -> Result<(i64, i64)> {
    let mut best: Option<i64> = None;
    let mut floor = i64::MAX;
    for e in m.entries() {
        match e.val() {
            Some(v) => best = Some(best.map_or(v, |b: i64| b.min(v))),
            None => floor = floor.min(e.known_prec()),
        }
    }
    let e1 = best.ok_or_else(|| Error::precision("all entries are zero at precision"))?;
    if e1 > floor {
        return Err(Error::precision(
            "least entry valuation is hidden below known precision",
        ));
    }
    let dv = m
        .det()
        .val()
        .ok_or_else(|| Error::precision("determinant is zero at precision"))?;
    Ok((e1, dv - e1))
}

/// Combinatorial distance between two vertices.
pub fn dist(spec: FieldSpec, u: &LatticeVertex, v: &LatticeVertex) -> Result<u32> {
    if u == v {
        return Ok(0);
    }
    // Change of basis B_u⁻¹ B_v = [[π^(m_v - m_u), (b_v - b_u) π^(-m_u)], [0, 1]].
    let shift = Elem::uniformizer_pow(spec, -u.m);
    let db = &v.b_exact(spec)? - &u.b_exact(spec)?;
    let change = Mat2::new(
        Elem::uniformizer_pow(spec, v.m - u.m),
        &db * &shift,
        Elem::zero(spec),
        Elem::one(spec),
    );
    let (e1, e2) = invariant_factor_valuations(&change)?;
    Ok((e2 - e1) as u32)
}

/// Image of a vertex under the canonical lift of `g`.
pub fn act(g: &ProjectiveMatrix, v: &LatticeVertex) -> Result<LatticeVertex> {
    let spec = g.spec();
    let img = g.lift().mul(&v.basis(spec)?);
    let (x1, y1, x2, y2) = (&img.a, &img.c, &img.b, &img.d);
    // Pivot on the column whose second coordinate has least valuation.
    let pivot_second = match (y1.val(), y2.val()) {
        (None, Some(v2)) => {
            if y1.known_prec() < v2 {
                return Err(Error::precision("cannot order column valuations"));
            }
            true
        }
        (Some(v1), None) => {
            if y2.known_prec() < v1 {
                return Err(Error::precision("cannot order column valuations"));
            }
            false
        }
        (Some(v1), Some(v2)) => v2 <= v1,
        (None, None) => return Err(Error::precision("image lattice degenerate at precision")),
    };
    let (xp, yp) = if pivot_second { (x2, y2) } else { (x1, y1) };
    let vy = yp.val().expect("pivot is nonzero");
    let m = v.m - 2 * vy;
    let b = xp.div(yp)?;
    LatticeVertex::from_parts(m, &b)
}

/// All vertices within distance `radius` of `center`, in breadth-first order
/// with neighbours visited by digit value.
pub fn ball(spec: FieldSpec, center: &LatticeVertex, radius: u32) -> Result<Vec<LatticeVertex>> {
    check_radius(spec, radius)?;
    let mut out = vec![center.clone()];
    let mut shell = vec![(center.clone(), None)];
    for _ in 0..radius {
        shell = next_shell(spec, &shell);
        out.extend(shell.iter().map(|(v, _)| v.clone()));
    }
    Ok(out)
}

/// Closed-form size of a ball of radius `r` in the `(q+1)`-regular tree.
pub fn ball_size(q: u64, r: u32) -> u64 {
    1 + (q + 1) * (q.pow(r) - 1) / (q - 1)
}

fn check_radius(spec: FieldSpec, radius: u32) -> Result<()> {
    if radius > spec.max_radius() {
        return Err(Error::RadiusTooLarge {
            requested: radius,
            max: spec.max_radius(),
        });
    }
    Ok(())
}

// Each entry remembers which neighbour index leads back toward the center.
type Shell = Vec<(LatticeVertex, Option<u32>)>;

fn next_shell(spec: FieldSpec, shell: &Shell) -> Shell {
    let q = spec.p();
    let mut next = Vec::with_capacity(shell.len() * q as usize);
    for (v, back) in shell {
        for j in 0..=q {
            if Some(j) == *back {
                continue;
            }
            if j < q {
                next.push((v.child(j), Some(q)));
            } else {
                let parent = v.parent();
                let back = v.child_index();
                next.push((parent, Some(back)));
            }
        }
    }
    next
}

/// `ℓ(g) = min_x d(x, gx)` by brute force over growing balls around the base
/// vertex. `f(R)` is the minimum over the ball of radius `R`; the scan stops
/// at the first `R` with `f(R + 1) = f(R)`.
pub fn displacement_oracle(g: &ProjectiveMatrix) -> Result<IsometryClass> {
    let spec = g.spec();
    let base = LatticeVertex::base();
    let displacement = |v: &LatticeVertex| -> Result<u32> { dist(spec, v, &act(g, v)?) };
    let mut f = displacement(&base)?;
    let mut shell: Shell = vec![(base, None)];
    for _ in 0..spec.max_radius() {
        shell = next_shell(spec, &shell);
        let shell_min = shell
            .par_iter()
            .map(|(v, _)| displacement(v))
            .try_reduce(|| u32::MAX, |a, b| Ok(a.min(b)))?;
        let next = f.min(shell_min);
        if next == f {
            return Ok(IsometryClass::from_length(f));
        }
        f = next;
    }
    Err(Error::RadiusTooLarge {
        requested: spec.max_radius() + 1,
        max: spec.max_radius(),
    })
}

/// `d(v, gv)`.
pub fn displacement(g: &ProjectiveMatrix, v: &LatticeVertex) -> Result<u32> {
    dist(g.spec(), v, &act(g, v)?)
}

/// A vertex of `Min(g)` nearest to `start`, found by walking downhill: along
/// any path toward `Min(g)` the displacement drops by 2 per step.
pub fn descend_to_min_set(g: &ProjectiveMatrix, start: &LatticeVertex) -> Result<(LatticeVertex, u32)> {
    let spec = g.spec();
    let mut v = start.clone();
    let mut d = displacement(g, &v)?;
    let mut steps = 0u32;
    'walk: loop {
        for n in v.neighbors(spec) {
            let dn = displacement(g, &n)?;
            if dn < d {
                v = n;
                d = dn;
                steps += 1;
                if steps > spec.max_radius() {
                    return Err(Error::RadiusTooLarge {
                        requested: steps,
                        max: spec.max_radius(),
                    });
                }
                continue 'walk;
            }
        }
        return Ok((v, d));
    }
}

/// `{v ∈ ball(v₀, R) : gv = v}`.
///
/// The fixed set is a subtree, so its part inside the ball is connected and
/// contains the projection of `v₀`; that projection is reached by descent and
/// the rest is explored through fixed neighbours.
pub fn fixed_set_in_ball(g: &ProjectiveMatrix, radius: u32) -> Result<BTreeSet<LatticeVertex>> {
    let spec = g.spec();
    check_radius(spec, radius)?;
    let base = LatticeVertex::base();
    let mut out = BTreeSet::new();
    let (x0, d) = descend_to_min_set(g, &base)?;
    if d != 0 {
        return Err(Error::Precondition("element is not elliptic".into()));
    }
    if dist(spec, &base, &x0)? > radius {
        return Ok(out);
    }
    let mut stack = vec![x0.clone()];
    let mut seen = HashSet::new();
    seen.insert(x0);
    while let Some(v) = stack.pop() {
        for n in v.neighbors(spec) {
            if seen.contains(&n) || dist(spec, &base, &n)? > radius {
                continue;
            }
            seen.insert(n.clone());
            if displacement(g, &n)? == 0 {
                stack.push(n);
            }
        }
        out.insert(v);
    }
    Ok(out)
}

/// An elliptic element whose fixed set is exactly `{x}`: a compact sample
/// acting without fixed points on the neighbours of the base vertex,
/// transported to `x`.
pub fn sample_strict_stabilizer<R: rand::Rng + ?Sized>(
    spec: FieldSpec,
    rng: &mut R,
    x: &LatticeVertex,
) -> Result<ProjectiveMatrix> {
    let base = LatticeVertex::base();
    let b = x.basis(spec)?;
    loop {
        let k = ProjectiveMatrix::sample_compact(spec, rng);
        if base
            .neighbors(spec)
            .iter()
            .all(|n| act(&k, n).map_or(true, |y| &y != n))
        {
            return k.conjugate_by_gl(&b);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psl2::LengthLaw;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q5() -> FieldSpec {
        FieldSpec::padic(5, 32).unwrap()
    }

    fn f3() -> FieldSpec {
        FieldSpec::laurent(3, 24).unwrap()
    }

    fn gl_diag(spec: FieldSpec, m: i64) -> Mat2 {
        Mat2::diag(Elem::uniformizer_pow(spec, m), Elem::one(spec))
    }

    // Image of v0 under a GL_2 matrix: the class of g·O².
    fn gl_image(g: &Mat2) -> LatticeVertex {
        // Column-reduce by brute force using the SL_2 action on a scaled copy.
        let spec = g.spec();
        let v = LatticeVertex::base();
        let basis = g.mul(&v.basis(spec).unwrap());
        let (x2, y2) = (&basis.b, &basis.d);
        let (x1, y1) = (&basis.a, &basis.c);
        let pivot_second = match (y1.val(), y2.val()) {
            (None, Some(_)) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => b <= a,
            _ => unreachable!(),
        };
        let (xp, yp) = if pivot_second { (x2, y2) } else { (x1, y1) };
        let m = basis.det().val().unwrap() - 2 * yp.val().unwrap();
        LatticeVertex::from_parts(m, &xp.div(yp).unwrap()).unwrap()
    }

    #[test]
    fn identity_and_inverse_actions() {
        let spec = q5();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let id = ProjectiveMatrix::identity(spec);
        let vs = ball(spec, &LatticeVertex::base(), 2).unwrap();
        let g = ProjectiveMatrix::sample_hyperbolic(spec, &mut rng, LengthLaw::Fixed(1));
        for v in &vs {
            assert_eq!(&act(&id, v).unwrap(), v);
            assert_eq!(&act(&g, &act(&g.invert(), v).unwrap()).unwrap(), v);
        }
    }

    #[test]
    fn distances_by_hand() {
        let spec = q5();
        let v0 = LatticeVertex::base();
        assert_eq!(dist(spec, &v0, &v0).unwrap(), 0);
        let one_step = gl_image(&gl_diag(spec, 1));
        assert_eq!(dist(spec, &v0, &one_step).unwrap(), 1);
        let two = act(&ProjectiveMatrix::cartan(spec, 1), &v0).unwrap();
        assert_eq!(dist(spec, &v0, &two).unwrap(), 2);
    }

    #[test]
    fn ball_sizes() {
        let v0 = LatticeVertex::base();
        assert_eq!(ball(q5(), &v0, 0).unwrap(), vec![v0.clone()]);
        assert_eq!(ball(q5(), &v0, 1).unwrap().len(), 7);
        let q3 = FieldSpec::padic(3, 16).unwrap();
        assert_eq!(ball(q3, &v0, 2).unwrap().len(), 17);
        for r in 0..5 {
            let b = ball(q3, &v0, r).unwrap();
            assert_eq!(b.len() as u64, ball_size(3, r));
            let distinct: HashSet<_> = b.iter().collect();
            assert_eq!(distinct.len(), b.len());
            for v in &b {
                assert!(dist(q3, &v0, v).unwrap() <= r);
            }
        }
        assert!(matches!(ball(q3, &v0, 15), Err(Error::RadiusTooLarge { .. })));
    }

    #[test]
    fn neighbors_are_at_distance_one() {
        let spec = f3();
        let v0 = LatticeVertex::base();
        for v in ball(spec, &v0, 2).unwrap() {
            let ns = v.neighbors(spec);
            assert_eq!(ns.len(), 4);
            for n in ns {
                assert_eq!(dist(spec, &v, &n).unwrap(), 1);
            }
        }
    }

    #[test]
    fn oracle_examples() {
        let spec = q5();
        assert_eq!(
            displacement_oracle(&ProjectiveMatrix::identity(spec)).unwrap(),
            IsometryClass::Elliptic
        );
        let d = ProjectiveMatrix::cartan(spec, 1);
        assert_eq!(displacement(&d, &LatticeVertex::base()).unwrap(), 2);
        assert_eq!(displacement_oracle(&d).unwrap(), IsometryClass::Hyperbolic(2));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let h = ProjectiveMatrix::sample_compact(spec, &mut rng);
            let g = d.conjugate(&h).unwrap();
            assert_eq!(displacement_oracle(&g).unwrap(), IsometryClass::Hyperbolic(2));
        }
    }

    #[test]
    fn fixed_sets() {
        let spec = q5();
        let v0 = LatticeVertex::base();
        let id = ProjectiveMatrix::identity(spec);
        assert_eq!(fixed_set_in_ball(&id, 1).unwrap().len(), 7);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let k = ProjectiveMatrix::sample_compact(spec, &mut rng);
        assert!(fixed_set_in_ball(&k, 0).unwrap().contains(&v0));
        // [[1, 1/π], [0, 1]] fixes the descendants of the end at 0, not v0.
        let u = ProjectiveMatrix::unipotent(&Elem::uniformizer_pow(spec, -1));
        let fixed = fixed_set_in_ball(&u, 2).unwrap();
        assert!(!fixed.is_empty());
        assert!(!fixed.contains(&v0));
        let brute: BTreeSet<_> = ball(spec, &v0, 2)
            .unwrap()
            .into_iter()
            .filter(|v| act(&u, v).unwrap() == *v)
            .collect();
        assert_eq!(fixed, brute);
    }

    #[test]
    fn vertex_encoding_round_trip() {
        let spec = f3();
        for v in ball(spec, &LatticeVertex::base(), 3).unwrap() {
            let text = v.encode(spec);
            assert_eq!(LatticeVertex::decode(spec, &text).unwrap(), v);
        }
        assert_eq!(LatticeVertex::base().encode(spec), "m:0;b:v:inf;d:;prec:0");
    }
}
