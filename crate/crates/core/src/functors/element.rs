//! Elements of `S(X)` and the spaces they live in.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use thiserror::Error;

use super::{DeltaKind, FunctorExpr};
use crate::measures::{
    is_plausibility, is_possibility, is_probability, is_upper_probability_lp, EnvelopeKind, MassReading,
    MeasureKind, MeasureRepr, PossReading, UncertaintyMeasure,
};
use crate::spaces::{coproduct_space, product_space, Space, SpaceRef};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ElementError(pub String);

fn err<T>(msg: impl Into<String>) -> Result<T, ElementError> {
    Err(ElementError(msg.into()))
}

/// A measure used as an element of a measure sort. When the argument sort
/// contains a measure functor its elements cannot be enumerated, and the
/// measure lives on an explicit finite `support` of such elements (the
/// measure's space is then [`support_space`] of that length).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureElem {
    pub measure: UncertaintyMeasure,
    pub support: Option<Vec<Element>>,
}

impl MeasureElem {
    pub fn realized(measure: UncertaintyMeasure) -> Self {
        MeasureElem { measure, support: None }
    }

    pub fn on_support(measure: UncertaintyMeasure, support: Vec<Element>) -> Self {
        MeasureElem {
            measure,
            support: Some(support),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Base(usize),
    Const(usize),
    Pair(Box<Element>, Box<Element>),
    Inl(Box<Element>),
    Inr(Box<Element>),
    Measure(Box<MeasureElem>),
}

impl Element {
    pub fn pair(a: Element, b: Element) -> Element {
        Element::Pair(Box::new(a), Box::new(b))
    }

    pub fn inl(a: Element) -> Element {
        Element::Inl(Box::new(a))
    }

    pub fn inr(a: Element) -> Element {
        Element::Inr(Box::new(a))
    }

    pub fn measure(m: MeasureElem) -> Element {
        Element::Measure(Box::new(m))
    }

    /// Extensional equality: points compare by identity, measures by their
    /// values on every measurable set.
    pub fn ext_eq(&self, other: &Element) -> bool {
        match (self, other) {
            (Element::Base(a), Element::Base(b)) | (Element::Const(a), Element::Const(b)) => a == b,
            (Element::Pair(a1, a2), Element::Pair(b1, b2)) => a1.ext_eq(b1) && a2.ext_eq(b2),
            (Element::Inl(a), Element::Inl(b)) | (Element::Inr(a), Element::Inr(b)) => a.ext_eq(b),
            (Element::Measure(a), Element::Measure(b)) => measures_ext_eq(a, b),
            _ => false,
        }
    }
}

fn measures_ext_eq(a: &MeasureElem, b: &MeasureElem) -> bool {
    match (&a.support, &b.support) {
        (None, None) => a.measure.pointwise_eq(&b.measure).unwrap_or(false),
        (Some(sa), Some(sb)) => {
            let mut merged: Vec<Element> = Vec::new();
            let mut index_into = |s: &[Element]| -> Vec<usize> {
                s.iter()
                    .map(|e| match merged.iter().position(|m| m.ext_eq(e)) {
                        Some(i) => i,
                        None => {
                            merged.push(e.clone());
                            merged.len() - 1
                        }
                    })
                    .collect()
            };
            let ma = index_into(sa);
            let mb = index_into(sb);
            let target = support_space(merged.len());
            match (
                a.measure.pushforward(target.clone(), &ma),
                b.measure.pushforward(target, &mb),
            ) {
                (Ok(x), Ok(y)) => x.pointwise_eq(&y).unwrap_or(false),
                _ => false,
            }
        }
        _ => false,
    }
}

/// The discrete space carrying a measure over `n` listed support elements.
pub fn support_space(n: usize) -> SpaceRef {
    Arc::new(
        Space::discrete("support", (0..n).map(|i| format!("s{i}")).collect())
            .expect("distinct labels"),
    )
}

/// What `S(X)` is: a finite space, or a space of measures handled symbolically.
#[derive(Debug, Clone, PartialEq)]
pub enum Realized {
    Finite(SpaceRef),
    Symbolic,
}

/// The state space and constant spaces a functor is applied to, with a
/// cache of realized spaces.
#[derive(Debug)]
pub struct Universe {
    state: SpaceRef,
    consts: BTreeMap<String, SpaceRef>,
    cache: RwLock<HashMap<FunctorExpr, SpaceRef>>,
}

impl Clone for Universe {
    fn clone(&self) -> Self {
        Universe {
            state: self.state.clone(),
            consts: self.consts.clone(),
            cache: RwLock::new(self.cache.read().expect("cache lock").clone()),
        }
    }
}

impl Universe {
    pub fn new(state: SpaceRef, consts: BTreeMap<String, SpaceRef>) -> Universe {
        Universe {
            state,
            consts,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn state(&self) -> &SpaceRef {
        &self.state
    }

    pub fn consts(&self) -> &BTreeMap<String, SpaceRef> {
        &self.consts
    }

    pub fn constant(&self, name: &str) -> Option<&SpaceRef> {
        self.consts.get(name)
    }

    /// Checks that every constant of `s` is declared.
    pub fn check_functor(&self, s: &FunctorExpr) -> Result<(), ElementError> {
        for m in s.constants() {
            if !self.consts.contains_key(&m) {
                return err(format!("undeclared constant space `{m}`"));
            }
        }
        Ok(())
    }

    pub fn realize(&self, s: &FunctorExpr) -> Realized {
        match self.space(s) {
            Some(sp) => Realized::Finite(sp),
            None => Realized::Symbolic,
        }
    }

    /// `S(X)` for a measure-free `S` whose constants are declared.
    pub fn space(&self, s: &FunctorExpr) -> Option<SpaceRef> {
        match s {
            FunctorExpr::Id => return Some(self.state.clone()),
            FunctorExpr::Const(m) => return self.consts.get(m).cloned(),
            FunctorExpr::Delta(..) => return None,
            _ => {}
        }
        if let Some(sp) = self.cache.read().expect("cache lock").get(s) {
            return Some(sp.clone());
        }
        let sp = match s {
            FunctorExpr::Prod(a, b) => Arc::new(product_space(&*self.space(a)?, &*self.space(b)?)),
            FunctorExpr::Coprod(a, b) => Arc::new(coproduct_space(&*self.space(a)?, &*self.space(b)?)),
            _ => unreachable!(),
        };
        self.cache
            .write()
            .expect("cache lock")
            .insert(s.clone(), sp.clone());
        Some(sp)
    }

    fn finite(&self, s: &FunctorExpr) -> Result<SpaceRef, ElementError> {
        self.space(s)
            .ok_or_else(|| ElementError(format!("sort {s} has no finite realization")))
    }

    /// The point of `S(X)` an element denotes, for measure-free `S`.
    pub fn point_of(&self, e: &Element, s: &FunctorExpr) -> Result<usize, ElementError> {
        match (s, e) {
            (FunctorExpr::Id, Element::Base(i)) if *i < self.state.point_count() => Ok(*i),
            (FunctorExpr::Const(m), Element::Const(i)) => {
                let sp = self.finite(s)?;
                if *i < sp.point_count() {
                    Ok(*i)
                } else {
                    err(format!("point index {i} out of range for `{m}`"))
                }
            }
            (FunctorExpr::Prod(a, b), Element::Pair(x, y)) => {
                let nb = self.finite(b)?.point_count();
                Ok(self.point_of(x, a)? * nb + self.point_of(y, b)?)
            }
            (FunctorExpr::Coprod(a, _), Element::Inl(x)) => self.point_of(x, a),
            (FunctorExpr::Coprod(a, b), Element::Inr(y)) => {
                Ok(self.finite(a)?.point_count() + self.point_of(y, b)?)
            }
            _ => err(format!("element {} does not have sort {s}", self.describe(e, s))),
        }
    }

    /// The element at a point of `S(X)`, for measure-free `S`.
    pub fn element_at(&self, s: &FunctorExpr, p: usize) -> Element {
        match s {
            FunctorExpr::Id => Element::Base(p),
            FunctorExpr::Const(_) => Element::Const(p),
            FunctorExpr::Prod(a, b) => {
                let nb = self.space(b).expect("finite").point_count();
                Element::pair(self.element_at(a, p / nb), self.element_at(b, p % nb))
            }
            FunctorExpr::Coprod(a, b) => {
                let na = self.space(a).expect("finite").point_count();
                if p < na {
                    Element::inl(self.element_at(a, p))
                } else {
                    Element::inr(self.element_at(b, p - na))
                }
            }
            FunctorExpr::Delta(..) => panic!("measure sorts are not enumerable"),
        }
    }

    /// A readable term for an element. Measures are shown by kind only.
    pub fn describe(&self, e: &Element, s: &FunctorExpr) -> String {
        match (s, e) {
            (FunctorExpr::Id, Element::Base(i)) => self
                .state
                .points()
                .get(*i)
                .cloned()
                .unwrap_or_else(|| format!("#{i}")),
            (FunctorExpr::Const(m), Element::Const(i)) => self
                .consts
                .get(m)
                .and_then(|sp| sp.points().get(*i).cloned())
                .unwrap_or_else(|| format!("#{i}")),
            (FunctorExpr::Prod(a, b), Element::Pair(x, y)) => {
                format!("({}, {})", self.describe(x, a), self.describe(y, b))
            }
            (FunctorExpr::Coprod(a, _), Element::Inl(x)) => format!("inl({})", self.describe(x, a)),
            (FunctorExpr::Coprod(_, b), Element::Inr(y)) => format!("inr({})", self.describe(y, b)),
            (_, Element::Measure(m)) => format!("<{} measure>", m.measure.kind()),
            (_, other) => format!("{other:?}"),
        }
    }

    /// Checks that `e` is an element of `S(X)`: the shape matches the sort,
    /// and every measure is verified to be of the functor's kind.
    pub fn check_element(&self, e: &Element, s: &FunctorExpr) -> Result<(), ElementError> {
        match (s, e) {
            (FunctorExpr::Id, Element::Base(_)) | (FunctorExpr::Const(_), Element::Const(_)) => {
                self.point_of(e, s).map(|_| ())
            }
            (FunctorExpr::Prod(a, b), Element::Pair(x, y)) => {
                self.check_element(x, a)?;
                self.check_element(y, b)
            }
            (FunctorExpr::Coprod(a, _), Element::Inl(x)) => self.check_element(x, a),
            (FunctorExpr::Coprod(_, b), Element::Inr(y)) => self.check_element(y, b),
            (FunctorExpr::Delta(kind, inner), Element::Measure(m)) => self.check_measure(*kind, inner, m),
            _ => err(format!(
                "element {} does not match sort {s}",
                self.describe(e, s)
            )),
        }
    }

    fn check_measure(&self, kind: DeltaKind, inner: &FunctorExpr, m: &MeasureElem) -> Result<(), ElementError> {
        let space = m.measure.space();
        match (&m.support, self.realize(inner)) {
            (None, Realized::Finite(sp)) => {
                if **space != *sp {
                    return err(format!(
                        "measure lives on `{}`, expected `{}`",
                        space.name(),
                        sp.name()
                    ));
                }
            }
            (Some(support), Realized::Symbolic) => {
                if **space != *support_space(support.len()) {
                    return err("measure space does not match its support");
                }
                for (i, s) in support.iter().enumerate() {
                    self.check_element(s, inner)?;
                    if support[..i].iter().any(|t| t.ext_eq(s)) {
                        return err(format!("support element {} listed twice", self.describe(s, inner)));
                    }
                }
            }
            (None, Realized::Symbolic) => {
                return err(format!("a measure on {inner} needs an explicit support"));
            }
            (Some(_), Realized::Finite(_)) => {
                return err(format!("a measure on the finite sort {inner} cannot use a support list"));
            }
        }
        verify_kind(kind, &m.measure)
    }

    /// The image of `e` under `S f`, where `f` maps the state space of
    /// `self` into that of `target`. Measures are pushed forward.
    pub fn map_element(
        &self,
        e: &Element,
        s: &FunctorExpr,
        f: &[usize],
        target: &Universe,
    ) -> Result<Element, ElementError> {
        Ok(match (s, e) {
            (FunctorExpr::Id, Element::Base(i)) => Element::Base(f[*i]),
            (FunctorExpr::Const(_), Element::Const(i)) => Element::Const(*i),
            (FunctorExpr::Prod(a, b), Element::Pair(x, y)) => Element::pair(
                self.map_element(x, a, f, target)?,
                self.map_element(y, b, f, target)?,
            ),
            (FunctorExpr::Coprod(a, _), Element::Inl(x)) => Element::inl(self.map_element(x, a, f, target)?),
            (FunctorExpr::Coprod(_, b), Element::Inr(y)) => Element::inr(self.map_element(y, b, f, target)?),
            (FunctorExpr::Delta(_, inner), Element::Measure(m)) => match &m.support {
                None => {
                    let src = self.finite(inner)?;
                    let dst = target.finite(inner)?;
                    let map = (0..src.point_count())
                        .map(|p| {
                            let img = self.map_element(&self.element_at(inner, p), inner, f, target)?;
                            target.point_of(&img, inner)
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    let pushed = m
                        .measure
                        .pushforward(dst, &map)
                        .map_err(|e| ElementError(e.to_string()))?;
                    Element::measure(MeasureElem::realized(pushed))
                }
                Some(support) => {
                    let mut merged: Vec<Element> = Vec::new();
                    let mut map = Vec::with_capacity(support.len());
                    for el in support {
                        let img = self.map_element(el, inner, f, target)?;
                        let i = match merged.iter().position(|m| m.ext_eq(&img)) {
                            Some(i) => i,
                            None => {
                                merged.push(img);
                                merged.len() - 1
                            }
                        };
                        map.push(i);
                    }
                    let pushed = m
                        .measure
                        .pushforward(support_space(merged.len()), &map)
                        .map_err(|e| ElementError(e.to_string()))?;
                    Element::measure(MeasureElem::on_support(pushed, merged))
                }
            },
            _ => return err(format!("element {} does not match sort {s}", self.describe(e, s))),
        })
    }

    /// True when no measurable set of `S(X)` separates the two elements.
    pub fn indistinguishable(&self, a: &Element, b: &Element, s: &FunctorExpr) -> bool {
        match (s, a, b) {
            (FunctorExpr::Id, Element::Base(x), Element::Base(y)) => {
                self.state.atom_of(*x) == self.state.atom_of(*y)
            }
            (FunctorExpr::Const(m), Element::Const(x), Element::Const(y)) => match self.consts.get(m) {
                Some(sp) => sp.atom_of(*x) == sp.atom_of(*y),
                None => false,
            },
            (FunctorExpr::Prod(l, r), Element::Pair(a1, a2), Element::Pair(b1, b2)) => {
                self.indistinguishable(a1, b1, l) && self.indistinguishable(a2, b2, r)
            }
            (FunctorExpr::Coprod(l, _), Element::Inl(x), Element::Inl(y)) => self.indistinguishable(x, y, l),
            (FunctorExpr::Coprod(_, r), Element::Inr(x), Element::Inr(y)) => self.indistinguishable(x, y, r),
            (FunctorExpr::Delta(..), Element::Measure(x), Element::Measure(y)) => measures_ext_eq(x, y),
            _ => false,
        }
    }
}

/// Representations that are of the right kind by construction are accepted
/// directly; anything else is audited on its values.
fn verify_kind(kind: DeltaKind, m: &UncertaintyMeasure) -> Result<(), ElementError> {
    use MeasureRepr as R;
    let repr = m.repr();
    let dual_reading = matches!(
        repr,
        R::Envelope { kind: EnvelopeKind::Lower, .. }
            | R::Mass { reading: MassReading::Belief, .. }
            | R::PossDist { reading: PossReading::Necessity, .. }
    ) || matches!(
        m.kind(),
        MeasureKind::Lower | MeasureKind::Belief | MeasureKind::Necessity
    );
    if dual_reading {
        return err(format!(
            "a {} measure cannot be an element of {}; give the {} function instead",
            m.kind(),
            kind.keyword(),
            m.kind().dual()
        ));
    }
    let by_construction = match kind {
        DeltaKind::Upper => matches!(
            repr,
            R::Probability(_)
                | R::Envelope { .. }
                | R::Mass { .. }
                | R::PossDist { .. }
        ),
        DeltaKind::Prob => matches!(repr, R::Probability(_)),
        DeltaKind::Plaus => matches!(repr, R::Probability(_) | R::Mass { .. } | R::PossDist { .. }),
        DeltaKind::Poss => matches!(repr, R::PossDist { .. }),
    };
    if by_construction {
        return Ok(());
    }
    let wrap = |e: crate::measures::MeasureError| ElementError(e.to_string());
    let verdict = match kind {
        DeltaKind::Upper => {
            let v = is_upper_probability_lp(m).map_err(wrap)?;
            match v {
                crate::measures::UpperVerdict::Upper { .. } => return Ok(()),
                crate::measures::UpperVerdict::EmptyCredalSet => "no probability lies below it".to_string(),
                crate::measures::UpperVerdict::NotTight { set, value, max } => format!(
                    "value {value} on {} exceeds {max}, the largest probability below it",
                    m.space().describe_points(&m.space().atoms_to_points(&set))
                ),
            }
        }
        DeltaKind::Prob => match is_probability(m).map_err(wrap)? {
            crate::measures::Verdict::Holds => return Ok(()),
            crate::measures::Verdict::Fails { reason, .. } => reason,
        },
        DeltaKind::Plaus => match is_plausibility(m, None).map_err(wrap)? {
            crate::measures::Verdict::Holds => return Ok(()),
            crate::measures::Verdict::Fails { reason, .. } => reason,
        },
        DeltaKind::Poss => match is_possibility(m).map_err(wrap)? {
            crate::measures::Verdict::Holds => return Ok(()),
            crate::measures::Verdict::Fails { reason, .. } => reason,
        },
    };
    err(format!("not a valid element of {}: {verdict}", kind.keyword()))
}
