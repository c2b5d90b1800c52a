use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use uncml_core::deduction::random_coalgebra;
use uncml_core::functors::{DeltaKind, Element, FunctorExpr};
use uncml_core::logic::{expand_abbreviation, Bound, Cmp, Formula, FormulaGen};
use uncml_core::rational::Rat;
use uncml_core::semantics::Checker;

const FUNCTORS: [&str; 5] = [
    "Upper(Id * Const(M))",
    "Prob(Id)",
    "Plaus(Id + Const(M))",
    "Poss(Id * Id)",
    "Id * Const(M)",
];

fn grid() -> Vec<Rat> {
    (0..=6).map(|i| Rat::new(i, 6)).collect()
}

fn bounds(kind: DeltaKind) -> (Bound, Bound) {
    match kind {
        DeltaKind::Upper => (Bound::Upper, Bound::Lower),
        DeltaKind::Prob => (Bound::Prob, Bound::Prob),
        DeltaKind::Plaus => (Bound::Plaus, Bound::Belief),
        DeltaKind::Poss => (Bound::Poss, Bound::Nec),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn boolean_clauses_are_set_operations(fi in 0usize..FUNCTORS.len(), size in 1usize..=5, seed in any::<u64>()) {
        let t: FunctorExpr = FUNCTORS[fi].parse().unwrap();
        let m = random_coalgebra(&t, size, seed);
        let c = Checker::new(&m);
        let gen = FormulaGen::new(m.signature(), grid());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in m.signature().sorts().iter().filter(|s| s.is_delta_free()) {
            let f = gen.formula(&mut rng, s, 2);
            let g = gen.formula(&mut rng, s, 2);
            let pf = c.points(&f, s);
            let pg = c.points(&g, s);
            prop_assert_eq!(c.points(&Formula::not(f.clone()), s), pf.complement());
            prop_assert_eq!(c.points(&Formula::and(f.clone(), g.clone()), s), pf.intersection(&pg));
            prop_assert_eq!(c.points(&Formula::or(f.clone(), g.clone()), s), pf.union(&pg));
            prop_assert!(c.points(&Formula::Bot, s).is_empty());
            let sf = m.signature().sort_check(&f, Some(s)).unwrap();
            prop_assert!(c.interpret(&sf).measurable_set().is_some(), "{f} at {s}");
        }
    }

    #[test]
    fn satisfaction_agrees_with_interpretation(fi in 0usize..FUNCTORS.len(), size in 1usize..=5, seed in any::<u64>()) {
        let t: FunctorExpr = FUNCTORS[fi].parse().unwrap();
        let m = random_coalgebra(&t, size, seed);
        let c = Checker::new(&m);
        let u = m.universe();
        let gen = FormulaGen::new(m.signature(), grid());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for s in m.signature().sorts().iter().filter(|s| s.is_delta_free()) {
            let f = gen.formula(&mut rng, s, 3);
            let pts = c.points(&f, s);
            let n = u.space(s).unwrap().point_count();
            for p in 0..n {
                prop_assert_eq!(c.sat(&u.element_at(s, p), &f, s), pts.contains(p));
            }
        }
        // [next] is the preimage under alpha
        let f = gen.formula(&mut rng, &t, 2);
        let next = c.points(&Formula::modal(uncml_core::logic::Label::Next, f.clone()), &FunctorExpr::Id);
        for x in 0..m.state().point_count() {
            prop_assert_eq!(next.contains(x), c.sat(m.alpha(x), &f, &t));
        }
    }

    #[test]
    fn upper_and_lower_bounds_are_dual(fi in 0usize..4, size in 1usize..=5, seed in any::<u64>(), pi in 0i64..=6) {
        let t: FunctorExpr = FUNCTORS[fi].parse().unwrap();
        let m = random_coalgebra(&t, size, seed);
        let c = Checker::new(&m);
        let gen = FormulaGen::new(m.signature(), grid());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let p = Rat::new(pi, 6);
        for s in m.signature().sorts() {
            let FunctorExpr::Delta(kind, inner) = s else { continue };
            let (hi, lo) = bounds(*kind);
            let f = gen.formula(&mut rng, inner, 2);
            let a = expand_abbreviation(hi, Cmp::Le, &p, f.clone());
            let b = expand_abbreviation(lo, Cmp::Ge, &p.complement(), Formula::not(f.clone()));
            prop_assert_eq!(&a, &b);
            for e in c.reachable(s) {
                let Element::Measure(me) = &e else { unreachable!() };
                let (v, d) = c.measure_value(me, &f, inner).unwrap();
                // value and dual value against the comparator readings
                prop_assert_eq!(c.sat(&e, &a, s), v <= p);
                let ge = expand_abbreviation(hi, Cmp::Ge, &p, f.clone());
                prop_assert_eq!(c.sat(&e, &ge, s), v >= p);
                let lt = expand_abbreviation(lo, Cmp::Lt, &p, f.clone());
                prop_assert_eq!(c.sat(&e, &lt, s), d < p);
                prop_assert!(d <= v || *kind == DeltaKind::Prob && d == v);
            }
        }
    }

    #[test]
    fn derived_principles_hold_on_reachable_measures(fi in 0usize..4, size in 1usize..=5, seed in any::<u64>(), pi in 1i64..=6) {
        let t: FunctorExpr = FUNCTORS[fi].parse().unwrap();
        let m = random_coalgebra(&t, size, seed);
        let c = Checker::new(&m);
        let gen = FormulaGen::new(m.signature(), grid());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let p = Rat::new(pi, 6);
        for s in m.signature().sorts() {
            let FunctorExpr::Delta(kind, inner) = s else { continue };
            let (hi, lo) = bounds(*kind);
            let f = gen.formula(&mut rng, inner, 2);
            let g = gen.formula(&mut rng, inner, 2);
            let battery = [
                expand_abbreviation(hi, Cmp::Ge, &Rat::zero(), f.clone()),
                expand_abbreviation(lo, Cmp::Ge, &Rat::zero(), f.clone()),
                expand_abbreviation(hi, Cmp::Lt, &p, Formula::Bot),
                Formula::implies(
                    expand_abbreviation(lo, Cmp::Ge, &p, f.clone()),
                    expand_abbreviation(hi, Cmp::Ge, &p, f.clone()),
                ),
                // monotone in the operand
                Formula::implies(
                    expand_abbreviation(hi, Cmp::Ge, &p, Formula::and(f.clone(), g.clone())),
                    expand_abbreviation(hi, Cmp::Ge, &p, f.clone()),
                ),
                Formula::implies(
                    expand_abbreviation(lo, Cmp::Ge, &p, Formula::and(f.clone(), g.clone())),
                    expand_abbreviation(lo, Cmp::Ge, &p, f.clone()),
                ),
            ];
            for e in c.reachable(s) {
                for b in &battery {
                    prop_assert!(c.sat(&e, b, s), "{b} at {s}");
                }
            }
        }
    }
}
