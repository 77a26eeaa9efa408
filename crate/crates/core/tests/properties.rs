use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use densegen::bttree::{act, dist, LatticeVertex};
use densegen::density::{certify_dense, CertifyConfig, DensityCertificate, GroupWord};
use densegen::experiments::trial_rng;
use densegen::localfield::{FieldSpec, LocalFieldElement as Elem};
use densegen::nielsen::{MarkedTuple, NielsenMove, NielsenWord};
use densegen::prg::{FiniteKind, FiniteMatrix, FiniteMatrixGroup};
use densegen::psl2::{IsometryClass, LengthLaw, Mat2, ProjectiveMatrix};
use densegen::treeaut::{RegularTree, TreePortrait, Word};

fn specs() -> impl Strategy<Value = FieldSpec> {
    prop_oneof![
        Just(FieldSpec::padic(5, 32).unwrap()),
        Just(FieldSpec::padic(3, 20).unwrap()),
        Just(FieldSpec::laurent(3, 32).unwrap()),
        Just(FieldSpec::laurent(7, 16).unwrap()),
    ]
}

fn element(spec: FieldSpec) -> impl Strategy<Value = Elem> {
    let n = spec.precision() as usize;
    (-6i64..6, prop::collection::vec(0..spec.p(), 1..=n))
        .prop_map(move |(v, d)| Elem::from_digits(spec, v, &d, v + d.len() as i64))
}

fn triple() -> impl Strategy<Value = (Elem, Elem, Elem)> {
    specs().prop_flat_map(|s| (element(s), element(s), element(s)))
}

fn sample(spec: FieldSpec, seed: u64) -> ProjectiveMatrix {
    let mut rng = trial_rng(seed, 0);
    match seed % 3 {
        0 => ProjectiveMatrix::sample_hyperbolic(spec, &mut rng, LengthLaw::default()),
        1 => ProjectiveMatrix::sample_elliptic(spec, &mut rng),
        _ => ProjectiveMatrix::sample_compact(spec, &mut rng),
    }
}

fn random_vertex(spec: FieldSpec, seed: u64, steps: usize) -> LatticeVertex {
    let mut rng = trial_rng(seed, 1);
    let mut x = LatticeVertex::base();
    for _ in 0..steps {
        let n = x.neighbors(spec);
        x = n[rng.gen_range(0..n.len())].clone();
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ring_axioms((x, y, z) in triple()) {
        prop_assert!((&x + &y).eq_at_precision(&(&y + &x)));
        prop_assert!((&x * &y).eq_at_precision(&(&y * &x)));
        prop_assert!((&(&x + &y) + &z).eq_at_precision(&(&x + &(&y + &z))));
        prop_assert!((&(&x * &y) * &z).eq_at_precision(&(&x * &(&y * &z))));
        prop_assert!((&x * &(&y + &z)).eq_at_precision(&(&(&x * &y) + &(&x * &z))));
        prop_assert!((&x - &x).is_zero());
    }

    #[test]
    fn inverses((x, _, _) in triple()) {
        prop_assume!(!x.is_zero());
        let one = Elem::one(x.spec());
        prop_assert!((&x * &x.inv().unwrap()).eq_at_precision(&one));
    }

    #[test]
    fn valuation_laws((x, y, _) in triple()) {
        prop_assume!(!x.is_zero() && !y.is_zero());
        let (vx, vy) = (x.val().unwrap(), y.val().unwrap());
        prop_assert_eq!((&x * &y).val(), Some(vx + vy));
        let s = &x + &y;
        if let Some(vs) = s.val() {
            prop_assert!(vs >= vx.min(vy));
            if vx != vy {
                prop_assert_eq!(vs, vx.min(vy));
            }
        }
    }

    #[test]
    fn precision_never_grows((x, y, _) in triple()) {
        let lo = x.known_prec().min(y.known_prec());
        prop_assert!((&x + &y).known_prec() <= lo);
        prop_assume!(!x.is_zero() && !y.is_zero());
        prop_assert_eq!((&x * &y).relative_prec(), x.relative_prec().min(y.relative_prec()));
        let cut = x.val().unwrap() + 1;
        let t = x.truncate(cut);
        prop_assert!(t.known_prec() <= cut);
        prop_assert!(t.eq_at_precision(&x));
    }

    #[test]
    fn element_encoding_round_trips((x, _, _) in triple()) {
        let back = Elem::decode(x.spec(), &x.encode()).unwrap();
        prop_assert_eq!(&back, &x);
        prop_assert_eq!(back.encode(), x.encode());
    }

    #[test]
    fn matrix_encoding_round_trips(spec in specs(), seed in any::<u64>()) {
        let g = sample(spec, seed);
        let back = ProjectiveMatrix::decode(spec, &g.encode()).unwrap();
        prop_assert_eq!(back.encode(), g.encode());
    }

    #[test]
    fn tree_action_is_an_isometry(spec in specs(), seed in any::<u64>(), a in 0usize..5, b in 0usize..5) {
        let g = sample(spec, seed);
        let u = random_vertex(spec, seed, a);
        let v = random_vertex(spec, seed.wrapping_add(1), b);
        let (gu, gv) = (act(&g, &u).unwrap(), act(&g, &v).unwrap());
        prop_assert_eq!(dist(spec, &gu, &gv).unwrap(), dist(spec, &u, &v).unwrap());
        // determinant one never swaps the two vertex types
        prop_assert_eq!(dist(spec, &u, &gu).unwrap() % 2, 0);
        prop_assert_eq!(LatticeVertex::decode(spec, &u.encode(spec)).unwrap(), u);
    }

    #[test]
    fn adjoint_trace_matches_conjugation(spec in specs(), seed in any::<u64>()) {
        let g = sample(spec, seed);
        let m = g.lift();
        let inv = m.adjugate();
        let (o, z) = (Elem::one(spec), Elem::zero(spec));
        let e = Mat2::new(z.clone(), o.clone(), z.clone(), z.clone());
        let h = Mat2::new(o.clone(), z.clone(), z.clone(), -&o);
        let f = Mat2::new(z.clone(), z.clone(), o.clone(), z.clone());
        // coefficient of E in gEg⁻¹, of H in gHg⁻¹ and of F in gFg⁻¹
        let ad = &(&m.mul(&e).mul(&inv).b + &m.mul(&h).mul(&inv).a) + &m.mul(&f).mul(&inv).c;
        prop_assert!(ad.eq_at_precision(&g.trace_adjoint()));
    }

    #[test]
    fn nielsen_words_invert(seed in any::<u64>(), len in 0usize..12) {
        let spec = FieldSpec::padic(5, 32).unwrap();
        let mut rng = trial_rng(seed, 2);
        let entries: Vec<_> = (0..3).map(|i| sample(spec, seed.wrapping_add(i))).collect();
        let t = MarkedTuple::new(entries).unwrap();
        let moves = NielsenMove::all(3);
        let w = NielsenWord::from_moves((0..len).map(|_| moves[rng.gen_range(0..moves.len())]).collect());
        prop_assert_eq!(w.to_string().parse::<NielsenWord>().unwrap(), w.clone());
        let back = t.apply_word(&w).unwrap().apply_word(&w.inverse()).unwrap();
        prop_assert!(back.same_as(&t));
    }

    #[test]
    fn hyperbolic_portraits_square(seed in any::<u64>(), m in 1u32..=3) {
        let tree = RegularTree::new(2).unwrap();
        let mut rng = trial_rng(seed, 3);
        let g = TreePortrait::sample_hyperbolic(tree, &mut rng, 12, m).unwrap();
        prop_assert_eq!(g.classify().unwrap(), IsometryClass::Hyperbolic(2 * m));
        prop_assert_eq!(g.compose(&g).unwrap().classify().unwrap(), IsometryClass::Hyperbolic(4 * m));
    }

    #[test]
    fn portrait_and_word_text_round_trips(seed in any::<u64>(), q in 2u32..=4) {
        let tree = RegularTree::new(q).unwrap();
        let mut rng = trial_rng(seed, 4);
        let g = TreePortrait::sample_stabilizer(tree, &mut rng, 3).unwrap();
        prop_assert_eq!(TreePortrait::deserialize(&g.serialize()).unwrap(), g);
        let w = tree.random_word(&mut rng, 7);
        prop_assert_eq!(w.to_string().parse::<Word>().unwrap(), w);
        let gw: GroupWord = "g1 g2^-1 g1".parse().unwrap();
        prop_assert_eq!(gw.to_string().parse::<GroupWord>().unwrap(), gw);
    }
}

#[test]
fn certificate_text_round_trips() {
    for field in [FieldSpec::padic(5, 32).unwrap(), FieldSpec::laurent(3, 32).unwrap()] {
        let mut rng = trial_rng(7, 0);
        let gens = vec![
            ProjectiveMatrix::sample_hyperbolic(field, &mut rng, LengthLaw::default()),
            ProjectiveMatrix::sample_elliptic(field, &mut rng),
        ];
        let cert = certify_dense(&gens, CertifyConfig::default()).unwrap();
        let text = cert.to_string();
        let back: DensityCertificate = text.parse().unwrap();
        assert_eq!(back.to_string(), text);
    }
}

/// The compact sampler reduces to the uniform distribution on PSL2(F_5).
#[test]
fn compact_sampler_reduces_uniformly() {
    let spec = FieldSpec::padic(5, 16).unwrap();
    let group = FiniteMatrixGroup::new(FiniteKind::PSL2, 5).unwrap();
    let n = 6000;
    let mut counts = vec![0u64; group.order()];
    let mut rng = trial_rng(8, 0);
    for _ in 0..n {
        let r = ProjectiveMatrix::sample_compact(spec, &mut rng)
            .reduce_mod_pi()
            .unwrap();
        let x = FiniteMatrix::new(FiniteKind::PSL2, 5, r.map(i64::from)).unwrap();
        counts[group.index_of(&x).unwrap()] += 1;
    }
    let expected = n as f64 / counts.len() as f64;
    let chi2: f64 = counts.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(counts.len() as f64 - 1.0).unwrap().cdf(chi2);
    assert!(p > 0.001, "chi2 = {chi2}, p = {p}");
}
