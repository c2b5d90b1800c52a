//! Axiom schemas, rule instances and the randomized soundness harness.

mod axioms;
mod harness;
mod random;
mod rules;

pub use axioms::{
    instantiate_axiom, is_tautology, AxiomError, Bindings, Derived, InstanceGen, Schema,
};
pub use harness::{soundness_harness, run_harness, HarnessConfig, SoundnessReport, Violation};
pub use random::{random_coalgebra, random_element, random_probes, RandomSizes};
pub use rules::{gen_cover_rule_instance, CoverRejection, CoverSide, Rule, RuleInstance};

use std::collections::BTreeMap;
use std::fmt;

use crate::functors::{DeltaKind, Element, FunctorExpr};
use crate::logic::{Bound, Formula};
use crate::models::Coalgebra;
use crate::semantics::Checker;

/// The primal and dual comparator families of a measure functor.
pub fn bounds(kind: DeltaKind) -> (Bound, Bound) {
    match kind {
        DeltaKind::Upper => (Bound::Upper, Bound::Lower),
        DeltaKind::Prob => (Bound::Prob, Bound::Prob),
        DeltaKind::Plaus => (Bound::Plaus, Bound::Belief),
        DeltaKind::Poss => (Bound::Poss, Bound::Nec),
    }
}

/// `assumptions |- conclusion` at one sort. In a model it holds when every
/// element satisfying all assumptions satisfies the conclusion; with no
/// assumptions that is validity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequent {
    pub sort: FunctorExpr,
    pub assumptions: Vec<Formula>,
    pub conclusion: Formula,
}

impl Sequent {
    pub fn theorem(sort: FunctorExpr, conclusion: Formula) -> Self {
        Sequent {
            sort,
            assumptions: Vec::new(),
            conclusion,
        }
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a: Vec<String> = self.assumptions.iter().map(|a| a.to_string()).collect();
        if !a.is_empty() {
            write!(f, "{} ", a.join(", "))?;
        }
        write!(f, "|-[{}] {}", self.sort, self.conclusion)
    }
}

/// The elements a model offers at each sort: every point at finite sorts;
/// at measure sorts and sorts built from them, the elements reachable from
/// the structure map and from the probes.
#[derive(Debug)]
pub struct Domain<'m> {
    checker: Checker<'m>,
    symbolic: BTreeMap<FunctorExpr, Vec<Element>>,
}

impl<'m> Domain<'m> {
    pub fn new(model: &'m Coalgebra, probes: &[(FunctorExpr, Element)]) -> Self {
        let mut symbolic = BTreeMap::new();
        let t = model.functor();
        for e in model.structure_map() {
            collect(e, t, &mut symbolic);
        }
        for (s, e) in probes {
            collect(e, s, &mut symbolic);
        }
        Domain {
            checker: Checker::new(model),
            symbolic,
        }
    }

    pub fn model(&self) -> &'m Coalgebra {
        self.checker.model()
    }

    pub fn checker(&self) -> &Checker<'m> {
        &self.checker
    }

    pub fn elements(&self, s: &FunctorExpr) -> Vec<Element> {
        let u = self.model().universe();
        match u.space(s) {
            Some(sp) => (0..sp.point_count()).map(|p| u.element_at(s, p)).collect(),
            None => self.symbolic.get(s).cloned().unwrap_or_default(),
        }
    }

    /// An element of sort `s` where `f` fails.
    pub fn counterexample(&self, f: &Formula, s: &FunctorExpr) -> Option<Element> {
        self.violates(&Sequent::theorem(s.clone(), f.clone()))
    }

    /// An element satisfying the assumptions but not the conclusion.
    pub fn violates(&self, q: &Sequent) -> Option<Element> {
        let u = self.model().universe();
        let s = &q.sort;
        if let Some(sp) = u.space(s) {
            let n = sp.point_count();
            let mut meet = crate::spaces::Bits::full(n);
            for a in &q.assumptions {
                meet = meet.intersection(&self.checker.points(a, s));
            }
            let bad = meet.difference(&self.checker.points(&q.conclusion, s));
            return bad.first().map(|p| u.element_at(s, p));
        }
        self.elements(s).into_iter().find(|e| {
            q.assumptions.iter().all(|a| self.checker.sat(e, a, s)) && !self.checker.sat(e, &q.conclusion, s)
        })
    }

    pub fn holds(&self, q: &Sequent) -> bool {
        self.violates(q).is_none()
    }
}

fn collect(e: &Element, at: &FunctorExpr, out: &mut BTreeMap<FunctorExpr, Vec<Element>>) {
    if !at.is_delta_free() {
        let v = out.entry(at.clone()).or_default();
        if !v.iter().any(|x| x.ext_eq(e)) {
            v.push(e.clone());
        }
    }
    match (at, e) {
        (FunctorExpr::Prod(a, b), Element::Pair(x, y)) => {
            collect(x, a, out);
            collect(y, b, out);
        }
        (FunctorExpr::Coprod(a, _), Element::Inl(x)) => collect(x, a, out),
        (FunctorExpr::Coprod(_, b), Element::Inr(y)) => collect(y, b, out),
        (FunctorExpr::Delta(_, inner), Element::Measure(m)) => {
            if let Some(sup) = &m.support {
                for x in sup {
                    collect(x, inner, out);
                }
            }
        }
        _ => {}
    }
}

/// A full description of an element: measures are listed by their values
/// on every measurable set (or every atom, for larger algebras).
pub fn witness(model: &Coalgebra, e: &Element, s: &FunctorExpr) -> String {
    match (s, e) {
        (FunctorExpr::Prod(a, b), Element::Pair(x, y)) => {
            format!("({}, {})", witness(model, x, a), witness(model, y, b))
        }
        (FunctorExpr::Coprod(a, _), Element::Inl(x)) => format!("inl({})", witness(model, x, a)),
        (FunctorExpr::Coprod(_, b), Element::Inr(y)) => format!("inr({})", witness(model, y, b)),
        (FunctorExpr::Delta(_, inner), Element::Measure(m)) => {
            let g = &m.measure;
            let sp = g.space();
            let n = sp.atom_count();
            let label = |atoms: &crate::spaces::Bits| -> String {
                match &m.support {
                    None => sp.describe_points(&sp.atoms_to_points(atoms)),
                    Some(sup) => {
                        let items: Vec<String> = atoms.iter().map(|i| witness(model, &sup[i], inner)).collect();
                        format!("{{{}}}", items.join(", "))
                    }
                }
            };
            let sets: Vec<crate::spaces::Bits> = if n <= 4 {
                (1..(1u64 << n)).map(|mask| crate::spaces::Bits::from_mask(n, mask)).collect()
            } else {
                (0..n).map(|a| crate::spaces::Bits::from_indices(n, [a])).collect()
            };
            let parts: Vec<String> = sets.iter().map(|a| format!("{}: {}", label(a), g.value(a))).collect();
            format!("{}[{}]", g.kind(), parts.join("; "))
        }
        _ => model.universe().describe(e, s),
    }
}
