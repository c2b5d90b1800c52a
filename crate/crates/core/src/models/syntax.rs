//! The model file format: lexer, declaration parser and canonical printer.

use std::fmt::{self, Write as _};

use crate::functors::{DeltaKind, FunctorExpr};
use crate::measures::{EnvelopeKind, MassReading, MeasureKind, PossReading};
use crate::rational::Rat;

use super::ModelError;

/// A sort as written in a model file. Bare names stand for the state
/// space (`Id`) or a constant space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SortExpr {
    Id,
    Const(String),
    Named(String),
    Prod(Box<SortExpr>, Box<SortExpr>),
    Coprod(Box<SortExpr>, Box<SortExpr>),
    Delta(DeltaKind, Box<SortExpr>),
}

impl SortExpr {
    pub fn from_functor(f: &FunctorExpr) -> SortExpr {
        match f {
            FunctorExpr::Id => SortExpr::Id,
            FunctorExpr::Const(m) => SortExpr::Const(m.clone()),
            FunctorExpr::Prod(a, b) => SortExpr::Prod(Box::new(Self::from_functor(a)), Box::new(Self::from_functor(b))),
            FunctorExpr::Coprod(a, b) => {
                SortExpr::Coprod(Box::new(Self::from_functor(a)), Box::new(Self::from_functor(b)))
            }
            FunctorExpr::Delta(k, a) => SortExpr::Delta(*k, Box::new(Self::from_functor(a))),
        }
    }

    /// Resolves bare names against the state space and declared spaces.
    pub fn resolve(&self, state: &str, is_space: &dyn Fn(&str) -> bool) -> Result<FunctorExpr, String> {
        Ok(match self {
            SortExpr::Id => FunctorExpr::Id,
            SortExpr::Const(m) => FunctorExpr::constant(m.clone()),
            SortExpr::Named(n) if n == state => FunctorExpr::Id,
            SortExpr::Named(n) if is_space(n) => FunctorExpr::constant(n.clone()),
            SortExpr::Named(n) => return Err(format!("unknown space `{n}` in sort")),
            SortExpr::Prod(a, b) => FunctorExpr::prod(a.resolve(state, is_space)?, b.resolve(state, is_space)?),
            SortExpr::Coprod(a, b) => FunctorExpr::coprod(a.resolve(state, is_space)?, b.resolve(state, is_space)?),
            SortExpr::Delta(k, a) => FunctorExpr::delta(*k, a.resolve(state, is_space)?),
        })
    }

    fn prec(&self) -> u8 {
        match self {
            SortExpr::Coprod(..) => 0,
            SortExpr::Prod(..) => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for SortExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn side(f: &mut fmt::Formatter<'_>, e: &SortExpr, min: u8) -> fmt::Result {
            if e.prec() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            SortExpr::Id => f.write_str("Id"),
            SortExpr::Const(m) => write!(f, "Const({m})"),
            SortExpr::Named(n) => f.write_str(n),
            SortExpr::Prod(a, b) => {
                side(f, a, 1)?;
                f.write_str(" * ")?;
                side(f, b, 2)
            }
            SortExpr::Coprod(a, b) => {
                side(f, a, 0)?;
                f.write_str(" + ")?;
                side(f, b, 1)
            }
            SortExpr::Delta(k, a) => write!(f, "{}({a})", k.keyword()),
        }
    }
}

/// Keys and values in model files: sets of a finite sort, or elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    /// `{a b}`
    Points(Vec<String>),
    /// A point or a declared measure.
    Name(String),
    Empty,
    /// `A*B`, a product of sets.
    Prod(Box<Term>, Box<Term>),
    /// `(a, b)`, a pair of elements.
    Pair(Box<Term>, Box<Term>),
    Inl(Box<Term>),
    Inr(Box<Term>),
    /// `A | B`
    Union(Vec<Term>),
}

impl Term {
    fn prec(&self) -> u8 {
        match self {
            Term::Union(_) => 0,
            Term::Prod(..) => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn side(f: &mut fmt::Formatter<'_>, e: &Term, min: u8) -> fmt::Result {
            if e.prec() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Term::Points(p) => write!(f, "{{{}}}", p.join(" ")),
            Term::Name(n) => f.write_str(n),
            Term::Empty => f.write_str("empty"),
            Term::Prod(a, b) => {
                side(f, a, 1)?;
                f.write_str("*")?;
                side(f, b, 2)
            }
            Term::Pair(a, b) => write!(f, "({a}, {b})"),
            Term::Inl(a) => write!(f, "inl({a})"),
            Term::Inr(a) => write!(f, "inr({a})"),
            Term::Union(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    side(f, t, 1)?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeclKind {
    Space {
        name: String,
        points: Vec<String>,
        gens: Vec<Vec<String>>,
    },
    State(String),
    Functor {
        name: String,
        expr: SortExpr,
    },
    Prob {
        name: String,
        sort: Option<SortExpr>,
        entries: Vec<(Term, Rat)>,
    },
    Env {
        name: String,
        kind: EnvelopeKind,
        members: Vec<String>,
    },
    Mass {
        name: String,
        sort: Option<SortExpr>,
        reading: MassReading,
        entries: Vec<(Term, Rat)>,
    },
    Poss {
        name: String,
        sort: Option<SortExpr>,
        reading: PossReading,
        entries: Vec<(Term, Rat)>,
    },
    Table {
        name: String,
        sort: Option<SortExpr>,
        kind: MeasureKind,
        entries: Vec<(Term, Rat)>,
    },
    Alpha(Vec<(String, Term)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decl {
    pub line: usize,
    pub kind: DeclKind,
}

/// A parsed model file. Leading `#` lines are kept as the header.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModelFile {
    pub header: Vec<String>,
    pub decls: Vec<Decl>,
}

fn on(sort: &Option<SortExpr>) -> String {
    sort.as_ref().map(|s| format!(" on {s}")).unwrap_or_default()
}

fn entries(out: &mut String, es: &[(Term, Rat)]) {
    for (t, r) in es {
        let _ = write!(out, " {t}: {r};");
    }
}

impl fmt::Display for ModelFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for h in &self.header {
            writeln!(f, "{h}")?;
        }
        if !self.header.is_empty() {
            writeln!(f)?;
        }
        for d in &self.decls {
            let mut s = String::new();
            match &d.kind {
                DeclKind::Space { name, points, gens } => {
                    let _ = write!(s, "space {name} {{ points");
                    for p in points {
                        let _ = write!(s, " {p}");
                    }
                    s.push(';');
                    for g in gens {
                        let _ = write!(s, " gen {{{}}};", g.join(" "));
                    }
                    s.push_str(" }");
                }
                DeclKind::State(n) => {
                    let _ = write!(s, "state {n};");
                }
                DeclKind::Functor { name, expr } => {
                    let _ = write!(s, "functor {name} = {expr};");
                }
                DeclKind::Prob { name, sort, entries: es } => {
                    let _ = write!(s, "prob {name}{} {{", on(sort));
                    entries(&mut s, es);
                    s.push_str(" }");
                }
                DeclKind::Env { name, kind, members } => {
                    let kw = match kind {
                        EnvelopeKind::Upper => "upper",
                        EnvelopeKind::Lower => "lower",
                    };
                    let _ = write!(s, "{kw} {name} = env({});", members.join(", "));
                }
                DeclKind::Mass {
                    name,
                    sort,
                    reading,
                    entries: es,
                } => {
                    let _ = write!(s, "mass {name}{}", on(sort));
                    if *reading == MassReading::Belief {
                        s.push_str(" as belief");
                    }
                    s.push_str(" {");
                    entries(&mut s, es);
                    s.push_str(" }");
                }
                DeclKind::Poss {
                    name,
                    sort,
                    reading,
                    entries: es,
                } => {
                    let _ = write!(s, "poss {name}{}", on(sort));
                    if *reading == PossReading::Necessity {
                        s.push_str(" as necessity");
                    }
                    s.push_str(" {");
                    entries(&mut s, es);
                    s.push_str(" }");
                }
                DeclKind::Table {
                    name,
                    sort,
                    kind,
                    entries: es,
                } => {
                    let _ = write!(s, "table {name}{} kind {kind} {{", on(sort));
                    entries(&mut s, es);
                    s.push_str(" }");
                }
                DeclKind::Alpha(es) => {
                    s.push_str("alpha {");
                    for (x, t) in es {
                        let _ = write!(s, " {x}: {t};");
                    }
                    s.push_str(" }");
                }
            }
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Num(String),
    Punct(char),
}

struct Lexed {
    toks: Vec<(Tok, usize)>,
    header: Vec<String>,
}

fn lex(src: &str) -> Result<Lexed, ModelError> {
    let mut toks = Vec::new();
    let mut header = Vec::new();
    let mut in_header = true;
    for (ln, line) in src.lines().enumerate() {
        let line_no = ln + 1;
        let trimmed = line.trim_start();
        if trimmed.starts_with('#') {
            if in_header {
                header.push(line.trim_end().to_string());
            }
            continue;
        }
        if !trimmed.is_empty() {
            in_header = false;
        }
        let body = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        };
        let b = body.as_bytes();
        let mut i = 0;
        while i < b.len() {
            let c = b[i];
            if c.is_ascii_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == b'_' {
                let s = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'\'') {
                    i += 1;
                }
                toks.push((Tok::Word(body[s..i].to_string()), line_no));
            } else if c.is_ascii_digit() || c == b'.' {
                let s = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'.' || b[i] == b'/' || b[i] == b'_') {
                    i += 1;
                }
                toks.push((Tok::Num(body[s..i].to_string()), line_no));
            } else if b"{}();:,=*+|".contains(&c) {
                toks.push((Tok::Punct(c as char), line_no));
                i += 1;
            } else {
                let ch = body[i..].chars().next().unwrap_or('?');
                return Err(ModelError::at(line_no, format!("unexpected character `{ch}`")));
            }
        }
    }
    Ok(Lexed { toks, header })
}

struct P {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl P {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|t| t.1)
            .unwrap_or(1)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ModelError> {
        Err(ModelError::at(self.line(), msg))
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(Tok::Word(w)) | Some(Tok::Num(w)) => format!("`{w}`"),
            Some(Tok::Punct(c)) => format!("`{c}`"),
            None => "end of file".into(),
        }
    }

    fn is_punct(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Punct(c))
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(x)) if x == w)
    }

    fn punct(&mut self, c: char) -> Result<(), ModelError> {
        if self.is_punct(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{c}`, found {}", self.found()))
        }
    }

    fn keyword(&mut self, w: &str) -> Result<(), ModelError> {
        if self.is_word(w) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{w}`, found {}", self.found()))
        }
    }

    fn name(&mut self) -> Result<String, ModelError> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => self.err(format!("expected a name, found {}", self.found())),
        }
    }

    /// Point labels may also be numerals.
    fn label(&mut self) -> Result<String, ModelError> {
        match self.peek() {
            Some(Tok::Word(w)) | Some(Tok::Num(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => self.err(format!("expected a point name, found {}", self.found())),
        }
    }

    fn number(&mut self) -> Result<Rat, ModelError> {
        match self.peek() {
            Some(Tok::Num(w)) => {
                let w = w.clone();
                let r = w.parse::<Rat>().or_else(|_| self.err(format!("bad number `{w}`")))?;
                self.pos += 1;
                Ok(r)
            }
            _ => self.err(format!("expected a number, found {}", self.found())),
        }
    }

    fn labels_until(&mut self, close: char) -> Result<Vec<String>, ModelError> {
        let mut out = Vec::new();
        while !self.is_punct(close) {
            out.push(self.label()?);
            if self.is_punct(',') {
                self.pos += 1;
            }
        }
        self.pos += 1;
        Ok(out)
    }

    fn on_sort(&mut self) -> Result<Option<SortExpr>, ModelError> {
        if self.is_word("on") {
            self.pos += 1;
            Ok(Some(self.sort()?))
        } else {
            Ok(None)
        }
    }

    fn sort(&mut self) -> Result<SortExpr, ModelError> {
        let mut left = self.sort_prod()?;
        while self.is_punct('+') {
            self.pos += 1;
            let right = self.sort_prod()?;
            left = SortExpr::Coprod(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn sort_prod(&mut self) -> Result<SortExpr, ModelError> {
        let mut left = self.sort_atom()?;
        while self.is_punct('*') {
            self.pos += 1;
            let right = self.sort_atom()?;
            left = SortExpr::Prod(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn sort_atom(&mut self) -> Result<SortExpr, ModelError> {
        if self.is_punct('(') {
            self.pos += 1;
            let s = self.sort()?;
            self.punct(')')?;
            return Ok(s);
        }
        let n = self.name()?;
        Ok(match n.as_str() {
            "Id" => SortExpr::Id,
            "Const" => {
                self.punct('(')?;
                let m = self.name()?;
                self.punct(')')?;
                SortExpr::Const(m)
            }
            "Upper" | "Prob" | "Plaus" | "Poss" => {
                let k = DeltaKind::ALL.into_iter().find(|k| k.keyword() == n).expect("keyword");
                self.punct('(')?;
                let s = self.sort()?;
                self.punct(')')?;
                SortExpr::Delta(k, Box::new(s))
            }
            _ => SortExpr::Named(n),
        })
    }

    fn term(&mut self) -> Result<Term, ModelError> {
        let mut parts = vec![self.term_prod()?];
        while self.is_punct('|') {
            self.pos += 1;
            parts.push(self.term_prod()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one")
        } else {
            Term::Union(parts)
        })
    }

    fn term_prod(&mut self) -> Result<Term, ModelError> {
        let mut left = self.term_atom()?;
        while self.is_punct('*') {
            self.pos += 1;
            let right = self.term_atom()?;
            left = Term::Prod(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn term_atom(&mut self) -> Result<Term, ModelError> {
        if self.is_punct('{') {
            self.pos += 1;
            return Ok(Term::Points(self.labels_until('}')?));
        }
        if self.is_punct('(') {
            self.pos += 1;
            let a = self.term()?;
            if self.is_punct(',') {
                self.pos += 1;
                let b = self.term()?;
                self.punct(')')?;
                return Ok(Term::Pair(Box::new(a), Box::new(b)));
            }
            self.punct(')')?;
            return Ok(a);
        }
        if (self.is_word("inl") || self.is_word("inr")) && self.toks.get(self.pos + 1).map(|t| &t.0) == Some(&Tok::Punct('(')) {
            let left = self.is_word("inl");
            self.pos += 2;
            let a = self.term()?;
            self.punct(')')?;
            return Ok(if left { Term::Inl(Box::new(a)) } else { Term::Inr(Box::new(a)) });
        }
        if self.is_word("empty") {
            self.pos += 1;
            return Ok(Term::Empty);
        }
        Ok(Term::Name(self.label()?))
    }

    fn entries(&mut self) -> Result<Vec<(Term, Rat)>, ModelError> {
        self.punct('{')?;
        let mut out = Vec::new();
        while !self.is_punct('}') {
            if self.peek().is_none() {
                return self.err("unclosed `{`");
            }
            let t = self.term()?;
            self.punct(':')?;
            let r = self.number()?;
            self.punct(';')?;
            out.push((t, r));
        }
        self.pos += 1;
        Ok(out)
    }

    fn decl(&mut self) -> Result<Decl, ModelError> {
        let line = self.line();
        let kw = self.name()?;
        let kind = match kw.as_str() {
            "space" => {
                let name = self.name()?;
                self.punct('{')?;
                self.keyword("points")?;
                let mut points = Vec::new();
                while !self.is_punct(';') {
                    points.push(self.label()?);
                }
                self.pos += 1;
                let mut gens = Vec::new();
                while self.is_word("gen") {
                    self.pos += 1;
                    self.punct('{')?;
                    gens.push(self.labels_until('}')?);
                    self.punct(';')?;
                }
                self.punct('}')?;
                DeclKind::Space { name, points, gens }
            }
            "state" => {
                let n = self.name()?;
                self.punct(';')?;
                DeclKind::State(n)
            }
            "functor" => {
                let name = self.name()?;
                self.punct('=')?;
                let expr = self.sort()?;
                self.punct(';')?;
                DeclKind::Functor { name, expr }
            }
            "prob" => {
                let name = self.name()?;
                let sort = self.on_sort()?;
                DeclKind::Prob {
                    name,
                    sort,
                    entries: self.entries()?,
                }
            }
            "upper" | "lower" => {
                let name = self.name()?;
                self.punct('=')?;
                self.keyword("env")?;
                self.punct('(')?;
                let mut members = vec![self.name()?];
                while self.is_punct(',') {
                    self.pos += 1;
                    members.push(self.name()?);
                }
                self.punct(')')?;
                self.punct(';')?;
                let kind = if kw == "upper" {
                    EnvelopeKind::Upper
                } else {
                    EnvelopeKind::Lower
                };
                DeclKind::Env { name, kind, members }
            }
            "mass" => {
                let name = self.name()?;
                let sort = self.on_sort()?;
                let mut reading = MassReading::Plausibility;
                if self.is_word("as") {
                    self.pos += 1;
                    reading = match self.name()?.as_str() {
                        "plausibility" => MassReading::Plausibility,
                        "belief" => MassReading::Belief,
                        other => return self.err(format!("unknown reading `{other}`")),
                    };
                }
                DeclKind::Mass {
                    name,
                    sort,
                    reading,
                    entries: self.entries()?,
                }
            }
            "poss" => {
                let name = self.name()?;
                let sort = self.on_sort()?;
                let mut reading = PossReading::Possibility;
                if self.is_word("as") {
                    self.pos += 1;
                    reading = match self.name()?.as_str() {
                        "possibility" => PossReading::Possibility,
                        "necessity" => PossReading::Necessity,
                        other => return self.err(format!("unknown reading `{other}`")),
                    };
                }
                DeclKind::Poss {
                    name,
                    sort,
                    reading,
                    entries: self.entries()?,
                }
            }
            "table" => {
                let name = self.name()?;
                let sort = self.on_sort()?;
                self.keyword("kind")?;
                let k = self.name()?;
                let kind = MeasureKind::from_keyword(&k).map_or_else(|| self.err(format!("unknown measure kind `{k}`")), Ok)?;
                DeclKind::Table {
                    name,
                    sort,
                    kind,
                    entries: self.entries()?,
                }
            }
            "alpha" => {
                self.punct('{')?;
                let mut es = Vec::new();
                while !self.is_punct('}') {
                    if self.peek().is_none() {
                        return self.err("unclosed `{`");
                    }
                    let x = self.label()?;
                    self.punct(':')?;
                    let t = self.term()?;
                    self.punct(';')?;
                    es.push((x, t));
                }
                self.pos += 1;
                DeclKind::Alpha(es)
            }
            other => {
                self.pos -= 1;
                return self.err(format!("unknown declaration `{other}`"));
            }
        };
        Ok(Decl { line, kind })
    }
}

pub fn parse_model_file(src: &str) -> Result<ModelFile, ModelError> {
    let Lexed { toks, header } = lex(src)?;
    let mut p = P { toks, pos: 0 };
    let mut decls = Vec::new();
    while p.peek().is_some() {
        decls.push(p.decl()?);
    }
    Ok(ModelFile { header, decls })
}

/// A point map file: `map { x: u; y: u; }`.
pub fn parse_map_file(src: &str) -> Result<Vec<(String, String)>, ModelError> {
    let Lexed { toks, .. } = lex(src)?;
    let mut p = P { toks, pos: 0 };
    p.keyword("map")?;
    p.punct('{')?;
    let mut out = Vec::new();
    while !p.is_punct('}') {
        if p.peek().is_none() {
            return p.err("unclosed `{`");
        }
        let a = p.label()?;
        p.punct(':')?;
        let b = p.label()?;
        p.punct(';')?;
        out.push((a, b));
    }
    p.pos += 1;
    if p.peek().is_some() {
        return p.err(format!("unexpected {} after the map", p.found()));
    }
    Ok(out)
}

/// Parses a single element term, as given on the command line.
pub fn parse_term(src: &str) -> Result<Term, ModelError> {
    let Lexed { toks, .. } = lex(src)?;
    let mut p = P { toks, pos: 0 };
    let t = p.term()?;
    if p.peek().is_some() {
        return p.err(format!("unexpected {} after the term", p.found()));
    }
    Ok(t)
}
