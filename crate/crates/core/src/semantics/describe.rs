use std::collections::{BTreeSet, HashMap};

use super::Checker;
use crate::functors::{DeltaKind, EdgeLabel, Element, FunctorExpr};
use crate::logic::{Formula, Label, Signature};
use crate::models::Coalgebra;
use crate::rational::Rat;
use crate::spaces::Bits;

/// The formulas an element satisfies among the finitely many candidates
/// within a depth bound and a threshold grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptionSet {
    pub sort: FunctorExpr,
    pub depth: usize,
    pub grid: Vec<Rat>,
    /// How many candidate formulas were tested.
    pub candidates: usize,
    /// Satisfied formulas, sorted by their printed form.
    pub formulas: Vec<Formula>,
}

/// Every value and dual value of every measure in the model, with 0 and 1.
pub fn attained_grid(m: &Coalgebra) -> Vec<Rat> {
    let mut vals: BTreeSet<Rat> = [Rat::zero(), Rat::one()].into_iter().collect();
    let mut stack: Vec<&Element> = m.structure_map().iter().collect();
    let named: Vec<Element> = m.measures().iter().map(|n| Element::measure(n.elem.clone())).collect();
    stack.extend(named.iter());
    while let Some(e) = stack.pop() {
        match e {
            Element::Pair(a, b) => {
                stack.push(a);
                stack.push(b);
            }
            Element::Inl(a) | Element::Inr(a) => stack.push(a),
            Element::Measure(me) => {
                let g = &me.measure;
                let n = g.space().atom_count();
                if n <= 12 {
                    for mask in 0..(1u64 << n) {
                        let set = Bits::from_mask(n, mask);
                        vals.insert(g.value(&set));
                        vals.insert(g.dual_value(&set));
                    }
                }
                if let Some(sup) = &me.support {
                    stack.extend(sup.iter());
                }
            }
            Element::Base(_) | Element::Const(_) => {}
        }
    }
    vals.into_iter().collect()
}

struct Candidates<'a> {
    sig: &'a Signature,
    grid: &'a [Rat],
    memo: HashMap<(FunctorExpr, usize), Vec<Formula>>,
}

impl Candidates<'_> {
    fn get(&mut self, s: &FunctorExpr, depth: usize) -> Vec<Formula> {
        if let Some(v) = self.memo.get(&(s.clone(), depth)) {
            return v.clone();
        }
        let mut base = vec![Formula::Bot];
        if let FunctorExpr::Const(m) = s {
            let sp = &self.sig.consts[m];
            let n = sp.atom_count().min(12);
            for mask in 1..(1u64 << n) {
                let atoms = Bits::from_mask(sp.atom_count(), mask);
                let labels: Vec<&str> = sp
                    .atoms_to_points(&atoms)
                    .iter()
                    .map(|p| sp.points()[p].as_str())
                    .collect();
                base.push(Formula::atom(&labels));
            }
        }
        if depth > 0 {
            let edges: Vec<_> = self.sig.graph.edges_from(s).cloned().collect();
            for e in edges {
                let inner = self.get(&e.to, depth - 1);
                match e.label {
                    EdgeLabel::Index(kind) => {
                        for p in self.grid {
                            let qs: Vec<Rat> = if kind == DeltaKind::Prob {
                                vec![Rat::zero()]
                            } else {
                                self.grid.to_vec()
                            };
                            for q in &qs {
                                for f in &inner {
                                    base.push(Formula::idx(kind, p.clone(), q.clone(), f.clone()));
                                }
                            }
                        }
                    }
                    other => {
                        let label = match other {
                            EdgeLabel::Pr1 => Label::Pr1,
                            EdgeLabel::Pr2 => Label::Pr2,
                            EdgeLabel::In1 => Label::In1,
                            EdgeLabel::In2 => Label::In2,
                            _ => Label::Next,
                        };
                        for f in &inner {
                            base.push(Formula::modal(label.clone(), f.clone()));
                        }
                    }
                }
            }
        }
        let mut all: BTreeSet<(String, Formula)> = BTreeSet::new();
        for f in base {
            let neg = Formula::not(f.clone());
            all.insert((neg.to_string(), neg));
            all.insert((f.to_string(), f));
        }
        let out: Vec<Formula> = all.into_iter().map(|(_, f)| f).collect();
        self.memo.insert((s.clone(), depth), out.clone());
        out
    }
}

impl Checker<'_> {
    /// The description set of `e` at sort `s`. Candidates are `bot`, every
    /// measurable literal, the modal edges of the sort graph and index pairs
    /// from `grid` (always with 0, so that one-sided bounds such as
    /// `U>=p` are among them), each also negated, nested up to `depth`.
    pub fn description_set(&self, e: &Element, s: &FunctorExpr, depth: usize, grid: &[Rat]) -> DescriptionSet {
        let mut grid = grid.to_vec();
        grid.push(Rat::zero());
        grid.sort();
        grid.dedup();
        let mut c = Candidates {
            sig: self.model().signature(),
            grid: &grid,
            memo: HashMap::new(),
        };
        let cands = c.get(s, depth);
        let formulas = cands.iter().filter(|f| self.sat(e, f, s)).cloned().collect();
        DescriptionSet {
            sort: s.clone(),
            depth,
            candidates: cands.len(),
            formulas,
            grid,
        }
    }
}
