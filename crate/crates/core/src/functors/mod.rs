//! Polynomial uncertainty functors, their ingredients and multigraph.

mod element;

pub use element::{
    support_space, Element, ElementError, MeasureElem, Realized, Universe,
};

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// The four measure functors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeltaKind {
    Upper,
    Prob,
    Plaus,
    Poss,
}

impl DeltaKind {
    pub const ALL: [DeltaKind; 4] = [DeltaKind::Upper, DeltaKind::Prob, DeltaKind::Plaus, DeltaKind::Poss];

    pub fn keyword(self) -> &'static str {
        match self {
            DeltaKind::Upper => "Upper",
            DeltaKind::Prob => "Prob",
            DeltaKind::Plaus => "Plaus",
            DeltaKind::Poss => "Poss",
        }
    }

    fn from_keyword(s: &str) -> Option<DeltaKind> {
        DeltaKind::ALL.into_iter().find(|k| k.keyword() == s)
    }
}

/// A functor expression. The derived order (Id < Const < Prod < Coprod <
/// Delta, then structurally) is the display order of ingredients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FunctorExpr {
    Id,
    Const(String),
    Prod(Box<FunctorExpr>, Box<FunctorExpr>),
    Coprod(Box<FunctorExpr>, Box<FunctorExpr>),
    Delta(DeltaKind, Box<FunctorExpr>),
}

impl FunctorExpr {
    pub fn constant(name: impl Into<String>) -> Self {
        FunctorExpr::Const(name.into())
    }

    pub fn prod(a: FunctorExpr, b: FunctorExpr) -> Self {
        FunctorExpr::Prod(Box::new(a), Box::new(b))
    }

    pub fn coprod(a: FunctorExpr, b: FunctorExpr) -> Self {
        FunctorExpr::Coprod(Box::new(a), Box::new(b))
    }

    pub fn delta(kind: DeltaKind, a: FunctorExpr) -> Self {
        FunctorExpr::Delta(kind, Box::new(a))
    }

    /// No measure functor anywhere inside: `S(X)` is a finite space.
    pub fn is_delta_free(&self) -> bool {
        match self {
            FunctorExpr::Id | FunctorExpr::Const(_) => true,
            FunctorExpr::Prod(a, b) | FunctorExpr::Coprod(a, b) => a.is_delta_free() && b.is_delta_free(),
            FunctorExpr::Delta(..) => false,
        }
    }

    /// Names of the constant spaces used.
    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_constants(&mut out);
        out
    }

    fn collect_constants(&self, out: &mut BTreeSet<String>) {
        match self {
            FunctorExpr::Id => {}
            FunctorExpr::Const(m) => {
                out.insert(m.clone());
            }
            FunctorExpr::Prod(a, b) | FunctorExpr::Coprod(a, b) => {
                a.collect_constants(out);
                b.collect_constants(out);
            }
            FunctorExpr::Delta(_, a) => a.collect_constants(out),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            FunctorExpr::Coprod(..) => 0,
            FunctorExpr::Prod(..) => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for FunctorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn side(f: &mut fmt::Formatter<'_>, e: &FunctorExpr, min: u8) -> fmt::Result {
            if e.prec() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            FunctorExpr::Id => f.write_str("Id"),
            FunctorExpr::Const(m) => write!(f, "Const({m})"),
            FunctorExpr::Prod(a, b) => {
                side(f, a, 1)?;
                f.write_str(" * ")?;
                side(f, b, 2)
            }
            FunctorExpr::Coprod(a, b) => {
                side(f, a, 0)?;
                f.write_str(" + ")?;
                side(f, b, 1)
            }
            FunctorExpr::Delta(k, a) => write!(f, "{}({a})", k.keyword()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("functor syntax error at offset {pos}: {msg}")]
pub struct FunctorParseError {
    pub pos: usize,
    pub msg: String,
}

struct FunctorParser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> FunctorParser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, FunctorParseError> {
        Err(FunctorParseError {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, c: char) -> Result<(), FunctorParseError> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn ident(&mut self) -> Result<&'a str, FunctorParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest
            .find(|c: char| !(c.is_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        if len == 0 {
            return self.err("expected a name");
        }
        self.pos += len;
        Ok(&self.src[start..start + len])
    }

    fn sum(&mut self) -> Result<FunctorExpr, FunctorParseError> {
        let mut left = self.product()?;
        while self.peek() == Some('+') {
            self.pos += 1;
            let right = self.product()?;
            left = FunctorExpr::coprod(left, right);
        }
        Ok(left)
    }

    fn product(&mut self) -> Result<FunctorExpr, FunctorParseError> {
        let mut left = self.atom()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            let right = self.atom()?;
            left = FunctorExpr::prod(left, right);
        }
        Ok(left)
    }

    fn atom(&mut self) -> Result<FunctorExpr, FunctorParseError> {
        if self.peek() == Some('(') {
            self.pos += 1;
            let e = self.sum()?;
            self.expect(')')?;
            return Ok(e);
        }
        let start = self.pos;
        let name = self.ident()?;
        match name {
            "Id" => Ok(FunctorExpr::Id),
            "Const" => {
                self.expect('(')?;
                let m = self.ident()?;
                self.expect(')')?;
                Ok(FunctorExpr::constant(m))
            }
            other => match DeltaKind::from_keyword(other) {
                Some(k) => {
                    self.expect('(')?;
                    let e = self.sum()?;
                    self.expect(')')?;
                    Ok(FunctorExpr::delta(k, e))
                }
                None => {
                    self.pos = start;
                    self.err(format!("unknown functor `{other}`"))
                }
            },
        }
    }
}

impl std::str::FromStr for FunctorExpr {
    type Err = FunctorParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = FunctorParser { src: s, pos: 0 };
        let e = p.sum()?;
        if p.peek().is_some() {
            return p.err("trailing input");
        }
        Ok(e)
    }
}

/// The ingredients of `t`: every intermediate stage of its construction,
/// always including `Id`.
pub fn ingredients(t: &FunctorExpr) -> BTreeSet<FunctorExpr> {
    let mut out = BTreeSet::new();
    out.insert(FunctorExpr::Id);
    fn go(e: &FunctorExpr, out: &mut BTreeSet<FunctorExpr>) {
        out.insert(e.clone());
        match e {
            FunctorExpr::Prod(a, b) | FunctorExpr::Coprod(a, b) => {
                go(a, out);
                go(b, out);
            }
            FunctorExpr::Delta(_, a) => go(a, out),
            _ => {}
        }
    }
    go(t, &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeLabel {
    Pr1,
    Pr2,
    In1,
    In2,
    Next,
    /// The whole family of index modalities of one measure functor.
    Index(DeltaKind),
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeLabel::Pr1 => f.write_str("pr1"),
            EdgeLabel::Pr2 => f.write_str("pr2"),
            EdgeLabel::In1 => f.write_str("in1"),
            EdgeLabel::In2 => f.write_str("in2"),
            EdgeLabel::Next => f.write_str("next"),
            EdgeLabel::Index(DeltaKind::Upper) => f.write_str("(p,q)"),
            EdgeLabel::Index(DeltaKind::Prob) => f.write_str("Pr p"),
            EdgeLabel::Index(DeltaKind::Plaus) => f.write_str("Pl(p,q)"),
            EdgeLabel::Index(DeltaKind::Poss) => f.write_str("Ps(p,q)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: FunctorExpr,
    pub label: EdgeLabel,
    pub to: FunctorExpr,
}

/// The labelled multigraph over the ingredients of a functor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngredientGraph {
    pub functor: FunctorExpr,
    pub nodes: Vec<FunctorExpr>,
    pub edges: Vec<Edge>,
}

impl IngredientGraph {
    pub fn new(t: &FunctorExpr) -> IngredientGraph {
        let nodes: Vec<FunctorExpr> = ingredients(t).into_iter().collect();
        let mut edges = Vec::new();
        for n in &nodes {
            let mut add = |label, to: &FunctorExpr| {
                edges.push(Edge {
                    from: n.clone(),
                    label,
                    to: to.clone(),
                })
            };
            match n {
                FunctorExpr::Id => add(EdgeLabel::Next, t),
                FunctorExpr::Const(_) => {}
                FunctorExpr::Prod(a, b) => {
                    add(EdgeLabel::Pr1, a);
                    add(EdgeLabel::Pr2, b);
                }
                FunctorExpr::Coprod(a, b) => {
                    add(EdgeLabel::In1, a);
                    add(EdgeLabel::In2, b);
                }
                FunctorExpr::Delta(k, a) => add(EdgeLabel::Index(*k), a),
            }
        }
        IngredientGraph {
            functor: t.clone(),
            nodes,
            edges,
        }
    }

    pub fn contains(&self, s: &FunctorExpr) -> bool {
        self.nodes.binary_search(s).is_ok()
    }

    pub fn edges_from<'a>(&'a self, s: &'a FunctorExpr) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| &e.from == s)
    }

    /// Target of the edge with this label leaving `s`.
    pub fn target(&self, s: &FunctorExpr, label: EdgeLabel) -> Option<&FunctorExpr> {
        self.edges
            .iter()
            .filter(|e| &e.from == s).find(|e| e.label == label).map(|e| &e.to)
    }

    /// Sources of edges with this label entering `s`.
    pub fn sources<'a>(&'a self, label: EdgeLabel, s: &'a FunctorExpr) -> impl Iterator<Item = &'a FunctorExpr> + 'a {
        self.edges
            .iter()
            .filter(move |e| e.label == label && &e.to == s)
            .map(|e| &e.from)
    }
}

impl fmt::Display for IngredientGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.edges {
            writeln!(f, "{} --{}--> {}", e.from, e.label, e.to)?;
        }
        Ok(())
    }
}
