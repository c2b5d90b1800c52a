//! Sorted modal formulas: syntax trees, concrete grammar, printing, sort
//! inference and the comparator abbreviations.

mod gen;
mod parse;
mod print;
mod sort;

pub use gen::FormulaGen;
pub use parse::{parse_surface, SpanTree};
pub use sort::{Signature, SortedFormula};

use std::fmt;

use thiserror::Error;

use crate::functors::{DeltaKind, EdgeLabel};
use crate::rational::Rat;

/// Modal operator labels. `Idx(Prob, p, _)` is the single-index
/// probability modality and always carries `q = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Pr1,
    Pr2,
    In1,
    In2,
    Next,
    Idx(DeltaKind, Rat, Rat),
}

impl Label {
    pub fn edge(&self) -> EdgeLabel {
        match self {
            Label::Pr1 => EdgeLabel::Pr1,
            Label::Pr2 => EdgeLabel::Pr2,
            Label::In1 => EdgeLabel::In1,
            Label::In2 => EdgeLabel::In2,
            Label::Next => EdgeLabel::Next,
            Label::Idx(k, ..) => EdgeLabel::Index(*k),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Pr1 => f.write_str("pr1"),
            Label::Pr2 => f.write_str("pr2"),
            Label::In1 => f.write_str("in1"),
            Label::In2 => f.write_str("in2"),
            Label::Next => f.write_str("next"),
            Label::Idx(DeltaKind::Upper, p, q) => write!(f, "({p},{q})"),
            Label::Idx(DeltaKind::Prob, p, _) => write!(f, "Pr {p}"),
            Label::Idx(DeltaKind::Plaus, p, q) => write!(f, "Pl({p},{q})"),
            Label::Idx(DeltaKind::Poss, p, q) => write!(f, "Ps({p},{q})"),
        }
    }
}

/// Core formulas. Negation, conjunction, disjunction, equivalence and top
/// are abbreviations over `Bot` and `Implies`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Bot,
    /// A set literal of a constant space, labels sorted and distinct.
    Atom(Vec<String>),
    Implies(Box<Formula>, Box<Formula>),
    Modal(Label, Box<Formula>),
}

impl Formula {
    pub fn atom<S: AsRef<str>>(labels: &[S]) -> Formula {
        let mut v: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
        v.sort();
        v.dedup();
        Formula::Atom(v)
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn not(a: Formula) -> Formula {
        Formula::implies(a, Formula::Bot)
    }

    pub fn top() -> Formula {
        Formula::not(Formula::Bot)
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::implies(Formula::not(a), b)
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::or(Formula::not(a), Formula::not(b)))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::and(
            Formula::implies(a.clone(), b.clone()),
            Formula::implies(b, a),
        )
    }

    /// Conjunction of a list; `top` when empty.
    pub fn and_all(items: impl IntoIterator<Item = Formula>) -> Formula {
        items.into_iter().reduce(Formula::and).unwrap_or_else(Formula::top)
    }

    /// Disjunction of a list; `bot` when empty.
    pub fn or_all(items: impl IntoIterator<Item = Formula>) -> Formula {
        items.into_iter().reduce(Formula::or).unwrap_or(Formula::Bot)
    }

    pub fn modal(label: Label, a: Formula) -> Formula {
        Formula::Modal(label, Box::new(a))
    }

    pub fn idx(kind: DeltaKind, p: Rat, q: Rat, a: Formula) -> Formula {
        Formula::modal(Label::Idx(kind, p, q), a)
    }

    pub fn as_not(&self) -> Option<&Formula> {
        match self {
            Formula::Implies(a, b) if **b == Formula::Bot => Some(a),
            _ => None,
        }
    }

    /// Every subformula, the formula itself first, in preorder.
    pub fn subformulas(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            out.push(f);
            match f {
                Formula::Implies(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                Formula::Modal(_, a) => stack.push(a),
                _ => {}
            }
        }
        out
    }

    pub fn modal_depth(&self) -> usize {
        match self {
            Formula::Bot | Formula::Atom(_) => 0,
            Formula::Implies(a, b) => a.modal_depth().max(b.modal_depth()),
            Formula::Modal(_, a) => 1 + a.modal_depth(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::Bot | Formula::Atom(_) => 1,
            Formula::Implies(a, b) => 1 + a.size() + b.size(),
            Formula::Modal(_, a) => 1 + a.size(),
        }
    }
}

/// Families of comparator abbreviations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    /// Upper probability `U`.
    Upper,
    /// Lower probability `L`.
    Lower,
    Prob,
    Plaus,
    Belief,
    Poss,
    Nec,
}

impl Bound {
    pub const ALL: [Bound; 7] = [
        Bound::Upper,
        Bound::Lower,
        Bound::Prob,
        Bound::Plaus,
        Bound::Belief,
        Bound::Poss,
        Bound::Nec,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Bound::Upper => "U",
            Bound::Lower => "L",
            Bound::Prob => "Pr",
            Bound::Plaus => "Pl",
            Bound::Belief => "Bl",
            Bound::Poss => "Ps",
            Bound::Nec => "Nc",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Bound> {
        Bound::ALL.into_iter().find(|b| b.keyword() == s)
    }

    pub fn kind(self) -> DeltaKind {
        match self {
            Bound::Upper | Bound::Lower => DeltaKind::Upper,
            Bound::Prob => DeltaKind::Prob,
            Bound::Plaus | Bound::Belief => DeltaKind::Plaus,
            Bound::Poss | Bound::Nec => DeltaKind::Poss,
        }
    }

    /// The primal function (upper, plausibility, possibility) as opposed to
    /// its dual.
    fn primal(self) -> bool {
        matches!(self, Bound::Upper | Bound::Prob | Bound::Plaus | Bound::Poss)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cmp {
    Ge,
    Le,
    Lt,
    Gt,
}

impl Cmp {
    pub const ALL: [Cmp; 4] = [Cmp::Ge, Cmp::Le, Cmp::Lt, Cmp::Gt];

    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Ge => ">=",
            Cmp::Le => "<=",
            Cmp::Lt => "<",
            Cmp::Gt => ">",
        }
    }
}

/// Rewrites a comparator abbreviation into core modalities.
///
/// `U>=p f` is `[(p,0)]f`, `U<=p f` is `[(0,1-p)]!f`, `U<p f` is `![(p,0)]f`
/// and `U>p f` is `![(0,1-p)]!f`; lower bounds swap the two indices. The
/// probability modality has a single index.
pub fn expand_abbreviation(bound: Bound, cmp: Cmp, p: &Rat, f: Formula) -> Formula {
    let kind = bound.kind();
    let idx = |v: Rat, g: Formula| -> Formula {
        if bound.primal() {
            Formula::idx(kind, v, Rat::zero(), g)
        } else {
            Formula::idx(kind, Rat::zero(), v, g)
        }
    };
    // the same bound read on the dual function
    let dual_idx = |v: Rat, g: Formula| -> Formula {
        if bound.primal() && kind != DeltaKind::Prob {
            Formula::idx(kind, Rat::zero(), v, g)
        } else {
            Formula::idx(kind, v, Rat::zero(), g)
        }
    };
    match cmp {
        Cmp::Ge => idx(p.clone(), f),
        Cmp::Lt => Formula::not(idx(p.clone(), f)),
        Cmp::Le => dual_idx(p.complement(), Formula::not(f)),
        Cmp::Gt => Formula::not(dual_idx(p.complement(), Formula::not(f))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Lexical,
    Syntax,
    Sort,
    NonMeasurable,
    IndexRange,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Lexical => "lexical error",
            ErrorKind::Syntax => "syntax error",
            ErrorKind::Sort => "sort error",
            ErrorKind::NonMeasurable => "non-measurable operand",
            ErrorKind::IndexRange => "index out of range",
        })
    }
}

/// A formula error with the byte span it refers to, when known.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct FormulaError {
    pub kind: ErrorKind,
    pub span: Option<(usize, usize)>,
    pub msg: String,
}

impl fmt::Display for FormulaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some((a, b)) => write!(f, "{} at {a}..{b}: {}", self.kind, self.msg),
            None => write!(f, "{}: {}", self.kind, self.msg),
        }
    }
}

impl FormulaError {
    pub(crate) fn new(kind: ErrorKind, span: Option<(usize, usize)>, msg: impl Into<String>) -> Self {
        FormulaError {
            kind,
            span,
            msg: msg.into(),
        }
    }
}

/// Parses a formula without sort information.
pub fn parse_formula_unsorted(text: &str) -> Result<Formula, FormulaError> {
    Ok(parse_surface(text)?.0)
}

impl std::str::FromStr for Formula {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula_unsorted(s)
    }
}
