//! Interpretation and satisfaction of formulas in a coalgebra.

mod describe;
#[cfg(test)]
mod tests;

pub use describe::{attained_grid, DescriptionSet};

use std::collections::HashMap;
use std::sync::RwLock;

use crate::functors::{DeltaKind, Element, FunctorExpr, MeasureElem};
use crate::logic::{Formula, Label, SortedFormula};
use crate::models::Coalgebra;
use crate::rational::Rat;
use crate::spaces::{Bits, MeasurableSet, SpaceRef};

/// The meaning of a formula at a sort.
#[derive(Debug, Clone, PartialEq)]
pub enum Interpretation {
    /// Points of the realized space `S(X)`.
    Set { space: SpaceRef, points: Bits },
    /// A measure sort: membership is decided element by element.
    Predicate { sort: FunctorExpr },
}

impl Interpretation {
    /// The interpretation as a measurable set, when it is one.
    pub fn measurable_set(&self) -> Option<MeasurableSet> {
        match self {
            Interpretation::Set { space, points } => {
                let atoms = space.points_to_atoms(points)?;
                Some(MeasurableSet::from_atoms(space.clone(), atoms))
            }
            Interpretation::Predicate { .. } => None,
        }
    }

    pub fn points(&self) -> Option<&Bits> {
        match self {
            Interpretation::Set { points, .. } => Some(points),
            Interpretation::Predicate { .. } => None,
        }
    }
}

/// How validity at a sort was decided.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Regime {
    /// Every point of the finite space `S(X)` was checked.
    Exhaustive { points: usize },
    /// Measure sort: the elements reachable in the model plus probes.
    ReachablePlusProbes { reachable: usize, probes: usize },
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Exhaustive { points } => write!(f, "exhaustive over {points} points"),
            Regime::ReachablePlusProbes { reachable, probes } => {
                write!(f, "{reachable} reachable elements and {probes} probes")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validity {
    pub valid: bool,
    pub regime: Regime,
    /// An element where the formula fails.
    pub counterexample: Option<Element>,
}

/// Model checker for one coalgebra. Interpretations at finite sorts are
/// cached by formula and sort; the cache is shared across threads.
#[derive(Debug)]
pub struct Checker<'m> {
    model: &'m Coalgebra,
    cache: RwLock<HashMap<(Formula, FunctorExpr), Bits>>,
}

impl<'m> Checker<'m> {
    pub fn new(model: &'m Coalgebra) -> Self {
        Checker {
            model,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn model(&self) -> &'m Coalgebra {
        self.model
    }

    pub fn interpret(&self, f: &SortedFormula) -> Interpretation {
        self.interpret_at(&f.formula, &f.sort)
    }

    pub fn interpret_at(&self, f: &Formula, s: &FunctorExpr) -> Interpretation {
        match self.model.universe().space(s) {
            Some(space) => Interpretation::Set {
                points: self.points(f, s),
                space,
            },
            None => Interpretation::Predicate { sort: s.clone() },
        }
    }

    /// `[[f]]` at a finite sort, as points of `S(X)`.
    pub fn points(&self, f: &Formula, s: &FunctorExpr) -> Bits {
        let key = (f.clone(), s.clone());
        if let Some(b) = self.cache.read().expect("cache lock").get(&key) {
            return b.clone();
        }
        let b = self.compute(f, s);
        self.cache.write().expect("cache lock").insert(key, b.clone());
        b
    }

    fn space(&self, s: &FunctorExpr) -> SpaceRef {
        self.model.universe().space(s).expect("finite sort")
    }

    fn compute(&self, f: &Formula, s: &FunctorExpr) -> Bits {
        let n = self.space(s).point_count();
        match f {
            Formula::Bot => Bits::empty(n),
            Formula::Atom(labels) => {
                let FunctorExpr::Const(m) = s else {
                    return Bits::empty(n);
                };
                let sp = self.model.universe().constant(m).expect("declared");
                Bits::from_indices(n, labels.iter().filter_map(|l| sp.point_index(l)))
            }
            Formula::Implies(a, b) => self.points(a, s).complement().union(&self.points(b, s)),
            Formula::Modal(label, a) => match (label, s) {
                (Label::Pr1, FunctorExpr::Prod(l, r)) => {
                    let inner = self.points(a, l);
                    let nr = self.space(r).point_count();
                    Bits::from_indices(n, (0..n).filter(|p| inner.contains(p / nr)))
                }
                (Label::Pr2, FunctorExpr::Prod(_, r)) => {
                    let inner = self.points(a, r);
                    let nr = inner.len();
                    Bits::from_indices(n, (0..n).filter(|p| inner.contains(p % nr)))
                }
                // the other summand is included
                (Label::In1, FunctorExpr::Coprod(l, _)) => {
                    let inner = self.points(a, l);
                    let nl = inner.len();
                    Bits::from_indices(n, (0..n).filter(|&p| p >= nl || inner.contains(p)))
                }
                (Label::In2, FunctorExpr::Coprod(l, r)) => {
                    let nl = self.space(l).point_count();
                    let inner = self.points(a, r);
                    Bits::from_indices(n, (0..n).filter(|&p| p < nl || inner.contains(p - nl)))
                }
                (Label::Next, FunctorExpr::Id) => {
                    let t = self.model.functor();
                    Bits::from_indices(n, (0..n).filter(|&x| self.sat(self.model.alpha(x), a, t)))
                }
                _ => Bits::empty(n),
            },
        }
    }

    /// Whether `e`, an element of sort `s`, satisfies `f`.
    pub fn satisfies(&self, e: &Element, f: &SortedFormula) -> bool {
        self.sat(e, &f.formula, &f.sort)
    }

    pub fn sat(&self, e: &Element, f: &Formula, s: &FunctorExpr) -> bool {
        let u = self.model.universe();
        if s.is_delta_free() {
            return match u.point_of(e, s) {
                Ok(p) => self.points(f, s).contains(p),
                Err(_) => false,
            };
        }
        match f {
            Formula::Bot | Formula::Atom(_) => false,
            Formula::Implies(a, b) => !self.sat(e, a, s) || self.sat(e, b, s),
            Formula::Modal(label, a) => match (label, s, e) {
                (Label::Pr1, FunctorExpr::Prod(l, _), Element::Pair(x, _)) => self.sat(x, a, l),
                (Label::Pr2, FunctorExpr::Prod(_, r), Element::Pair(_, y)) => self.sat(y, a, r),
                (Label::In1, FunctorExpr::Coprod(l, _), Element::Inl(x)) => self.sat(x, a, l),
                (Label::In2, FunctorExpr::Coprod(_, r), Element::Inr(y)) => self.sat(y, a, r),
                (Label::In1, FunctorExpr::Coprod(..), _) | (Label::In2, FunctorExpr::Coprod(..), _) => true,
                (Label::Idx(kind, p, q), FunctorExpr::Delta(k2, inner), Element::Measure(m)) if kind == k2 => {
                    let Some(set) = self.operand_atoms(m, a, inner) else {
                        return false;
                    };
                    let g = &m.measure;
                    g.value(&set) >= *p && (*kind == DeltaKind::Prob || g.dual_value(&set) >= *q)
                }
                _ => false,
            },
        }
    }

    /// The measure's value and dual value on the operand `a` of sort
    /// `inner`, when its interpretation is measurable for the measure.
    pub fn measure_value(&self, m: &MeasureElem, a: &Formula, inner: &FunctorExpr) -> Option<(Rat, Rat)> {
        let set = self.operand_atoms(m, a, inner)?;
        Some((m.measure.value(&set), m.measure.dual_value(&set)))
    }

    /// The operand's interpretation as atoms of the measure's own space.
    fn operand_atoms(&self, m: &MeasureElem, a: &Formula, inner: &FunctorExpr) -> Option<Bits> {
        match &m.support {
            None => {
                let sp = m.measure.space();
                sp.points_to_atoms(&self.points(a, inner))
            }
            Some(support) => Some(Bits::from_indices(
                support.len(),
                support
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| self.sat(e, a, inner))
                    .map(|(i, _)| i),
            )),
        }
    }

    /// Elements of sort `s` occurring in the model: structure map images and
    /// their components, and the support elements of their measures.
    pub fn reachable(&self, s: &FunctorExpr) -> Vec<Element> {
        let mut out: Vec<Element> = Vec::new();
        let t = self.model.functor();
        for e in self.model.structure_map() {
            collect(e, t, s, &mut out);
        }
        out
    }

    /// Validity at `f`'s sort. At measure sorts only reachable elements and
    /// the `probes` of that sort are checked.
    pub fn valid(&self, f: &SortedFormula, probes: &[Element]) -> Validity {
        let u = self.model.universe();
        if let Some(sp) = u.space(&f.sort) {
            let pts = self.points(&f.formula, &f.sort);
            let missing = pts.complement().first();
            return Validity {
                valid: missing.is_none(),
                regime: Regime::Exhaustive {
                    points: sp.point_count(),
                },
                counterexample: missing.map(|p| u.element_at(&f.sort, p)),
            };
        }
        let reach = self.reachable(&f.sort);
        let probes: Vec<&Element> = probes
            .iter()
            .filter(|e| u.check_element(e, &f.sort).is_ok())
            .collect();
        let bad = reach
            .iter()
            .chain(probes.iter().copied())
            .find(|e| !self.sat(e, &f.formula, &f.sort));
        Validity {
            valid: bad.is_none(),
            regime: Regime::ReachablePlusProbes {
                reachable: reach.len(),
                probes: probes.len(),
            },
            counterexample: bad.cloned(),
        }
    }
}

fn push_new(out: &mut Vec<Element>, e: &Element) {
    if !out.iter().any(|x| x.ext_eq(e)) {
        out.push(e.clone());
    }
}

fn collect(e: &Element, at: &FunctorExpr, want: &FunctorExpr, out: &mut Vec<Element>) {
    if at == want {
        push_new(out, e);
    }
    match (at, e) {
        (FunctorExpr::Prod(a, b), Element::Pair(x, y)) => {
            collect(x, a, want, out);
            collect(y, b, want, out);
        }
        (FunctorExpr::Coprod(a, _), Element::Inl(x)) => collect(x, a, want, out),
        (FunctorExpr::Coprod(_, b), Element::Inr(y)) => collect(y, b, want, out),
        (FunctorExpr::Delta(_, inner), Element::Measure(m)) => {
            if let Some(sup) = &m.support {
                for x in sup {
                    collect(x, inner, want, out);
                }
            }
        }
        _ => {}
    }
}
