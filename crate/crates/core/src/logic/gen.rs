use rand::seq::SliceRandom;
use rand::Rng;

use super::{Formula, Label, Signature};
use crate::functors::{DeltaKind, EdgeLabel, FunctorExpr};
use crate::rational::Rat;

/// Random well-sorted formulas over a signature.
#[derive(Debug, Clone)]
pub struct FormulaGen<'a> {
    sig: &'a Signature,
    grid: Vec<Rat>,
    /// Boolean connectives allowed per modal level.
    pub bool_budget: usize,
    /// Allow non-measurable singleton literals outside measure modalities.
    pub singletons: bool,
}

impl<'a> FormulaGen<'a> {
    pub fn new(sig: &'a Signature, grid: Vec<Rat>) -> Self {
        assert!(!grid.is_empty());
        FormulaGen {
            sig,
            grid,
            bool_budget: 2,
            singletons: false,
        }
    }

    /// A formula of sort `s` with modal depth at most `depth`.
    pub fn formula<R: Rng>(&self, rng: &mut R, s: &FunctorExpr, depth: usize) -> Formula {
        self.go(rng, s, depth, self.bool_budget, self.singletons)
    }

    fn index<R: Rng>(&self, rng: &mut R) -> Rat {
        self.grid.choose(rng).expect("nonempty").clone()
    }

    fn leaf<R: Rng>(&self, rng: &mut R, s: &FunctorExpr, singletons: bool) -> Formula {
        if let FunctorExpr::Const(m) = s {
            let sp = &self.sig.consts[m];
            if rng.gen_bool(0.75) {
                if singletons && sp.point_count() > 0 && rng.gen_bool(0.3) {
                    let p = rng.gen_range(0..sp.point_count());
                    return Formula::atom(&[&sp.points()[p]]);
                }
                let mut labels = Vec::new();
                for atom in sp.atoms() {
                    if rng.gen_bool(0.5) {
                        labels.extend(atom.iter().map(|&p| sp.points()[p].clone()));
                    }
                }
                return Formula::atom(&labels);
            }
        }
        if rng.gen_bool(0.5) {
            Formula::Bot
        } else {
            Formula::top()
        }
    }

    fn go<R: Rng>(&self, rng: &mut R, s: &FunctorExpr, depth: usize, budget: usize, singletons: bool) -> Formula {
        let edges: Vec<_> = self.sig.graph.edges_from(s).collect();
        let modal_ok = depth > 0 && !edges.is_empty();
        let roll = rng.gen_range(0..10);
        if budget > 0 && roll < 3 {
            let a = self.go(rng, s, depth, budget - 1, singletons);
            let b = self.go(rng, s, depth, budget - 1, singletons);
            return match rng.gen_range(0..4) {
                0 => Formula::implies(a, b),
                1 => Formula::and(a, b),
                2 => Formula::or(a, b),
                _ => Formula::not(a),
            };
        }
        if modal_ok && roll < 8 {
            let e = *edges.choose(rng).expect("nonempty");
            let target = e.to.clone();
            return match e.label {
                EdgeLabel::Index(kind) => {
                    let inner = self.go(rng, &target, depth - 1, self.bool_budget, false);
                    let p = self.index(rng);
                    let q = if kind == DeltaKind::Prob {
                        Rat::zero()
                    } else {
                        self.index(rng)
                    };
                    Formula::idx(kind, p, q, inner)
                }
                other => {
                    let label = match other {
                        EdgeLabel::Pr1 => Label::Pr1,
                        EdgeLabel::Pr2 => Label::Pr2,
                        EdgeLabel::In1 => Label::In1,
                        EdgeLabel::In2 => Label::In2,
                        _ => Label::Next,
                    };
                    Formula::modal(label, self.go(rng, &target, depth - 1, self.bool_budget, singletons))
                }
            };
        }
        self.leaf(rng, s, singletons)
    }
}
