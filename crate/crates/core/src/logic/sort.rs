use std::collections::BTreeMap;

use super::parse::{parse_surface, SpanTree};
use super::{ErrorKind, Formula, FormulaError, Label};
use crate::functors::{DeltaKind, EdgeLabel, FunctorExpr, IngredientGraph};
use crate::rational::Rat;
use crate::spaces::{Bits, SpaceRef};

/// The sorts of a functor together with its constant spaces.
#[derive(Debug, Clone)]
pub struct Signature {
    pub graph: IngredientGraph,
    pub consts: BTreeMap<String, SpaceRef>,
}

/// A formula with its sort and whether all its set literals are measurable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SortedFormula {
    pub formula: Formula,
    pub sort: FunctorExpr,
    pub measurable: bool,
}

impl std::fmt::Display for SortedFormula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.formula)
    }
}

/// Candidate sorts of a formula: node index and measurability there.
type Cands = BTreeMap<usize, bool>;

impl Signature {
    pub fn new(t: &FunctorExpr, consts: BTreeMap<String, SpaceRef>) -> Result<Signature, FormulaError> {
        for m in t.constants() {
            if !consts.contains_key(&m) {
                return Err(FormulaError::new(
                    ErrorKind::Sort,
                    None,
                    format!("constant space `{m}` is not declared"),
                ));
            }
        }
        Ok(Signature {
            graph: IngredientGraph::new(t),
            consts,
        })
    }

    pub fn functor(&self) -> &FunctorExpr {
        &self.graph.functor
    }

    pub fn sorts(&self) -> &[FunctorExpr] {
        &self.graph.nodes
    }

    fn node(&self, s: &FunctorExpr) -> Option<usize> {
        self.graph.nodes.binary_search(s).ok()
    }

    /// Measurable set denoted by a literal at a constant sort, as atoms, if
    /// the literal names points of the space and is measurable.
    pub fn literal_atoms(&self, m: &str, labels: &[String]) -> Option<Bits> {
        let sp = self.consts.get(m)?;
        let mut pts = Bits::empty(sp.point_count());
        for l in labels {
            pts.insert(sp.point_index(l)?);
        }
        sp.points_to_atoms(&pts)
    }

    /// Parses and sorts a formula. Without `sort` the formula's sort must be
    /// unique, or `Id` among the possibilities.
    pub fn parse(&self, text: &str, sort: Option<&FunctorExpr>) -> Result<SortedFormula, FormulaError> {
        let (f, spans) = parse_surface(text)?;
        self.check_spanned(f, Some(&spans), sort)
    }

    /// Sorts an already built formula.
    pub fn sort_check(&self, f: &Formula, sort: Option<&FunctorExpr>) -> Result<SortedFormula, FormulaError> {
        self.check_spanned(f.clone(), None, sort)
    }

    fn check_spanned(
        &self,
        f: Formula,
        spans: Option<&SpanTree>,
        sort: Option<&FunctorExpr>,
    ) -> Result<SortedFormula, FormulaError> {
        let cands = self.infer(&f, spans)?;
        let whole = spans.map(|t| t.span);
        let chosen = match sort {
            Some(s) => {
                let Some(i) = self.node(s) else {
                    return Err(FormulaError::new(
                        ErrorKind::Sort,
                        None,
                        format!("{s} is not an ingredient of {}", self.functor()),
                    ));
                };
                if !cands.contains_key(&i) {
                    return Err(FormulaError::new(
                        ErrorKind::Sort,
                        whole,
                        format!("formula cannot have sort {s}; possible sorts: {}", self.list(&cands)),
                    ));
                }
                i
            }
            None => {
                if cands.len() == 1 {
                    *cands.keys().next().expect("one")
                } else {
                    let id = self.node(&FunctorExpr::Id).expect("Id is always a sort");
                    if cands.contains_key(&id) {
                        id
                    } else {
                        return Err(FormulaError::new(
                            ErrorKind::Sort,
                            whole,
                            format!("ambiguous sort, give one of: {}", self.list(&cands)),
                        ));
                    }
                }
            }
        };
        Ok(SortedFormula {
            measurable: cands[&chosen],
            sort: self.graph.nodes[chosen].clone(),
            formula: f,
        })
    }

    fn list(&self, c: &Cands) -> String {
        c.keys()
            .map(|&i| self.graph.nodes[i].to_string())
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Sort of the operand of `[label]` at sort `s`.
    pub fn operand_sort(&self, s: &FunctorExpr, label: &Label) -> Option<&FunctorExpr> {
        self.graph.target(s, label.edge())
    }

    fn infer(&self, f: &Formula, spans: Option<&SpanTree>) -> Result<Cands, FormulaError> {
        let span = spans.map(|t| t.span);
        let child = |i: usize| spans.and_then(|t| t.children.get(i));
        match f {
            Formula::Bot => Ok((0..self.graph.nodes.len()).map(|i| (i, true)).collect()),
            Formula::Atom(labels) => {
                let mut out = Cands::new();
                for (i, n) in self.graph.nodes.iter().enumerate() {
                    if let FunctorExpr::Const(m) = n {
                        let sp = &self.consts[m];
                        if labels.iter().all(|l| sp.point_index(l).is_some()) {
                            out.insert(i, self.literal_atoms(m, labels).is_some());
                        }
                    }
                }
                if out.is_empty() {
                    return Err(FormulaError::new(
                        ErrorKind::Sort,
                        span,
                        format!("no constant space of {} contains {{{}}}", self.functor(), labels.join(",")),
                    ));
                }
                Ok(out)
            }
            Formula::Implies(a, b) => {
                let ca = self.infer(a, child(0))?;
                let cb = self.infer(b, child(1))?;
                let out: Cands = ca
                    .iter()
                    .filter_map(|(i, ma)| cb.get(i).map(|mb| (*i, *ma && *mb)))
                    .collect();
                if out.is_empty() {
                    return Err(FormulaError::new(
                        ErrorKind::Sort,
                        span,
                        format!(
                            "the two sides have no common sort (left: {}; right: {})",
                            self.list(&ca),
                            self.list(&cb)
                        ),
                    ));
                }
                Ok(out)
            }
            Formula::Modal(label, a) => {
                if let Label::Idx(kind, p, q) = label {
                    self.check_index(*kind, p, q, span)?;
                }
                let ca = self.infer(a, child(0))?;
                let edge = label.edge();
                let mut out = Cands::new();
                let mut non_measurable = false;
                for e in self.graph.edges.iter().filter(|e| e.label == edge) {
                    let (Some(from), Some(to)) = (self.node(&e.from), self.node(&e.to)) else {
                        continue;
                    };
                    let Some(&m) = ca.get(&to) else { continue };
                    if matches!(edge, EdgeLabel::Index(_)) {
                        if m {
                            out.insert(from, true);
                        } else {
                            non_measurable = true;
                        }
                    } else {
                        out.insert(from, m);
                    }
                }
                if out.is_empty() {
                    if non_measurable || (matches!(edge, EdgeLabel::Index(_)) && ca.values().all(|m| !m)) {
                        return Err(FormulaError::new(
                            ErrorKind::NonMeasurable,
                            span,
                            format!("the operand of [{label}] is not measurable"),
                        ));
                    }
                    let sources: Vec<String> = self
                        .graph
                        .edges
                        .iter()
                        .filter(|e| e.label == edge)
                        .map(|e| format!("{} --{}--> {}", e.from, e.label, e.to))
                        .collect();
                    let expected = if sources.is_empty() {
                        format!("{} has no {edge} edge", self.functor())
                    } else {
                        format!("expected the operand to have the target sort of {}", sources.join(" or "))
                    };
                    return Err(FormulaError::new(
                        ErrorKind::Sort,
                        span,
                        format!("[{label}] cannot apply to an operand of sort {}: {expected}", self.list(&ca)),
                    ));
                }
                Ok(out)
            }
        }
    }

    fn check_index(&self, kind: DeltaKind, p: &Rat, q: &Rat, span: Option<(usize, usize)>) -> Result<(), FormulaError> {
        if !p.in_unit_interval() || !q.in_unit_interval() {
            return Err(FormulaError::new(
                ErrorKind::IndexRange,
                span,
                format!("indices ({p},{q}) must lie in [0,1]"),
            ));
        }
        if kind == DeltaKind::Prob && !q.is_zero() {
            return Err(FormulaError::new(
                ErrorKind::Syntax,
                span,
                "the probability modality has a single index",
            ));
        }
        Ok(())
    }
}
