use super::*;
use crate::functors::FunctorExpr;
use crate::models::load_model;
use crate::rational::Rat;

const PAPER: &str = include_str!("../../../../models/paper_example.model");

fn idm() -> FunctorExpr {
    FunctorExpr::prod(FunctorExpr::Id, FunctorExpr::constant("M"))
}

fn labels(c: &Checker<'_>, text: &str, s: Option<&FunctorExpr>) -> Vec<String> {
    let f = c.model().signature().parse(text, s).unwrap();
    let Interpretation::Set { space, points } = c.interpret(&f) else {
        panic!("finite sort expected")
    };
    points.iter().map(|p| space.points()[p].clone()).collect()
}

#[test]
fn paper_subformulas() {
    let m = load_model(PAPER).unwrap();
    let c = Checker::new(&m);
    assert_eq!(labels(&c, "!{b,c}", None), ["a"]);
    assert_eq!(labels(&c, "[pr2]!{b,c}", None), ["(x, a)", "(y, a)", "(z, a)", "(t, a)"]);
    let top = labels(&c, "top", Some(&idm()));
    assert_eq!(top.len(), 12);
    // P1 has lower value 3/10 on X*{a}, below 2/5
    assert!(labels(&c, "[next][(1/2,2/5)][pr2]!{b,c}", None).is_empty());
    assert_eq!(labels(&c, "[next][(1/2,3/10)][pr2]!{b,c}", None), ["x", "y"]);
}

#[test]
fn interpretations_are_measurable() {
    let m = load_model(PAPER).unwrap();
    let c = Checker::new(&m);
    for text in ["[pr2]!{b,c}", "[pr1][next]U>=1/2[pr2]{a}", "[pr2]{b,c} -> [pr2]{a}"] {
        let f = m.signature().parse(text, Some(&idm())).unwrap();
        assert!(c.interpret(&f).measurable_set().is_some(), "{text}");
    }
    let f = m.signature().parse("[pr2]{b}", None).unwrap();
    assert!(!f.measurable);
    assert!(c.interpret(&f).measurable_set().is_none());
}

#[test]
fn measure_clauses() {
    let m = load_model(PAPER).unwrap();
    let c = Checker::new(&m);
    let t = m.functor().clone();
    let p1 = m.alpha(0).clone();
    let p2 = m.alpha(2).clone();
    let sig = m.signature();
    let f = |s: &str| sig.parse(s, Some(&t)).unwrap();
    assert!(c.satisfies(&p1, &f("U>=3/5 [pr2]!{b,c}")));
    assert!(!c.satisfies(&p1, &f("U>3/5 [pr2]!{b,c}")));
    assert!(c.satisfies(&p1, &f("U>=7/10 [pr2]{b,c}")));
    assert!(c.satisfies(&p2, &f("U<=3/10 [pr2]!{b,c}")));
    for g in [&p1, &p2] {
        assert!(c.satisfies(g, &f("[(0,0)][pr2]{a}")));
        assert!(c.satisfies(g, &f("[(0,0)]bot")));
        assert!(!c.satisfies(g, &f("U>=1/10 bot")));
        assert_eq!(
            c.satisfies(g, &f("U<=1/2 [pr2]{a}")),
            c.satisfies(g, &f("L>=1/2 ![pr2]{a}"))
        );
    }
}

#[test]
fn next_follows_alpha() {
    let m = load_model(PAPER).unwrap();
    let c = Checker::new(&m);
    let t = m.functor().clone();
    let inner = m.signature().parse("U>=1/2 [pr2]{a}", Some(&t)).unwrap();
    let outer = m.signature().parse("[next]U>=1/2 [pr2]{a}", None).unwrap();
    for x in 0..4 {
        let e = crate::functors::Element::Base(x);
        assert_eq!(c.satisfies(&e, &outer), c.satisfies(m.alpha(x), &inner));
    }
}

#[test]
fn validity_regimes() {
    let m = load_model(PAPER).unwrap();
    let c = Checker::new(&m);
    let f = m.signature().parse("[next][(1/2,2/5)][pr2]!{b,c}", None).unwrap();
    let v = c.valid(&f, &[]);
    assert!(!v.valid);
    assert_eq!(v.regime, Regime::Exhaustive { points: 4 });
    let g = m.signature().parse("U>=0 [pr2]{a}", Some(m.functor())).unwrap();
    let v = c.valid(&g, &[]);
    assert!(v.valid);
    assert_eq!(v.regime, Regime::ReachablePlusProbes { reachable: 2, probes: 0 });
}

#[test]
fn coproduct_box_includes_other_summand() {
    let src = include_str!("../../../../models/termination.model");
    let m = load_model(src).unwrap();
    let c = Checker::new(&m);
    let s = FunctorExpr::coprod(FunctorExpr::constant("M"), FunctorExpr::Id);
    assert_eq!(labels(&c, "[in1]{no}", Some(&s)), ["inl(no)", "inr(w1)", "inr(w2)", "inr(h)"]);
    assert_eq!(labels(&c, "[in2]bot", Some(&s)), ["inl(yes)", "inl(no)"]);
    assert_eq!(labels(&c, "[next][in1]{yes}", None), ["w1", "w2", "h"]);
    assert_eq!(labels(&c, "[next][in2]bot", None), ["h"]);
}

#[test]
fn description_sets() {
    let m = load_model(PAPER).unwrap();
    let c = Checker::new(&m);
    let t = m.functor().clone();
    let half = vec![Rat::new(1, 2)];
    let d = c.description_set(&crate::functors::Element::Const(0), &FunctorExpr::constant("M"), 0, &half);
    let printed: Vec<String> = d.formulas.iter().map(|f| f.to_string()).collect();
    for want in ["{a}", "!{b,c}", "top"] {
        assert!(printed.iter().any(|p| p == want), "{printed:?}");
    }
    assert!(!printed.iter().any(|p| p == "{b,c}"));

    let dx = c.description_set(m.alpha(0), &t, 2, &half);
    let dz = c.description_set(m.alpha(2), &t, 2, &half);
    assert_ne!(dx.formulas, dz.formulas);
    let sep = m.signature().parse("U>=1/2 [pr2]!{b,c}", Some(&t)).unwrap().formula;
    assert!(dx.formulas.contains(&sep) && !dz.formulas.contains(&sep));

    let grid = attained_grid(&m);
    let x = crate::functors::Element::Base(0);
    let y = crate::functors::Element::Base(1);
    let a = c.description_set(&x, &FunctorExpr::Id, 3, &grid);
    let b = c.description_set(&y, &FunctorExpr::Id, 3, &grid);
    assert_eq!(a.formulas, b.formulas);
    assert!(a.candidates > a.formulas.len());
}

#[test]
fn attained_values() {
    let m = load_model(PAPER).unwrap();
    let g = attained_grid(&m);
    for v in ["0", "3/5", "7/10", "3/10", "1"] {
        assert!(g.contains(&v.parse().unwrap()), "{v}");
    }
}
