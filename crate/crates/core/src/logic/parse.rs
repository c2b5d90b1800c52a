use super::{expand_abbreviation, Bound, Cmp, ErrorKind, Formula, FormulaError, Label};
use crate::functors::DeltaKind;
use crate::rational::Rat;

type Span = (usize, usize);

/// Byte spans of a core formula, node for node. Nodes introduced by
/// expanding sugar carry the span of the sugar they came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanTree {
    pub span: Span,
    pub children: Vec<SpanTree>,
}

impl SpanTree {
    fn leaf(span: Span) -> SpanTree {
        SpanTree {
            span,
            children: Vec::new(),
        }
    }

    fn node(span: Span, children: Vec<SpanTree>) -> SpanTree {
        SpanTree { span, children }
    }

    /// Spans shaped like `f`, all equal to `span`.
    fn uniform(f: &Formula, span: Span) -> SpanTree {
        match f {
            Formula::Bot | Formula::Atom(_) => SpanTree::leaf(span),
            Formula::Implies(a, b) => SpanTree::node(span, vec![SpanTree::uniform(a, span), SpanTree::uniform(b, span)]),
            Formula::Modal(_, a) => SpanTree::node(span, vec![SpanTree::uniform(a, span)]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Bang,
    Amp,
    Bar,
    Arrow,
    Iff,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBrack,
    RBrack,
    Comma,
    Cmp(Cmp),
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) | Tok::Num(s) => format!("`{s}`"),
        Tok::Bang => "`!`".into(),
        Tok::Amp => "`&`".into(),
        Tok::Bar => "`|`".into(),
        Tok::Arrow => "`->`".into(),
        Tok::Iff => "`<->`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBrace => "`{`".into(),
        Tok::RBrace => "`}`".into(),
        Tok::LBrack => "`[`".into(),
        Tok::RBrack => "`]`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Cmp(c) => format!("`{}`", c.symbol()),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, FormulaError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let rest = &src[i..];
        let (tok, len) = if rest.starts_with("<->") {
            (Tok::Iff, 3)
        } else if rest.starts_with("->") {
            (Tok::Arrow, 2)
        } else if rest.starts_with(">=") {
            (Tok::Cmp(Cmp::Ge), 2)
        } else if rest.starts_with("<=") {
            (Tok::Cmp(Cmp::Le), 2)
        } else {
            match c {
                b'<' => (Tok::Cmp(Cmp::Lt), 1),
                b'>' => (Tok::Cmp(Cmp::Gt), 1),
                b'!' => (Tok::Bang, 1),
                b'&' => (Tok::Amp, 1),
                b'|' => (Tok::Bar, 1),
                b'(' => (Tok::LParen, 1),
                b')' => (Tok::RParen, 1),
                b'{' => (Tok::LBrace, 1),
                b'}' => (Tok::RBrace, 1),
                b'[' => (Tok::LBrack, 1),
                b']' => (Tok::RBrack, 1),
                b',' => (Tok::Comma, 1),
                b'0'..=b'9' | b'.' => {
                    let mut j = i;
                    while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.' || bytes[j] == b'/') {
                        j += 1;
                    }
                    (Tok::Num(src[i..j].to_string()), j - i)
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let mut j = i;
                    while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_' || bytes[j] == b'\'') {
                        j += 1;
                    }
                    (Tok::Ident(src[i..j].to_string()), j - i)
                }
                _ => {
                    let ch = rest.chars().next().unwrap_or('?');
                    return Err(FormulaError::new(
                        ErrorKind::Lexical,
                        Some((start, start + ch.len_utf8())),
                        format!("unexpected character `{ch}`"),
                    ));
                }
            }
        };
        out.push((tok, (start, start + len)));
        i += len;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    end: usize,
}

type Parsed = (Formula, SpanTree);

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn span_here(&self) -> Span {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or((self.end, self.end))
    }

    fn last_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].1 .1
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError::new(ErrorKind::Syntax, Some(self.span_here()), msg))
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, FormulaError> {
        match self.peek() {
            Some(t) => self.err(format!("expected {wanted}, found {}", describe(t))),
            None => self.err(format!("expected {wanted}, found end of input")),
        }
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        self.pos += 1;
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<Span, FormulaError> {
        if self.peek() == Some(&t) {
            Ok(self.bump().1)
        } else {
            self.unexpected(&describe(&t))
        }
    }

    fn number(&mut self) -> Result<(Rat, Span), FormulaError> {
        match self.peek() {
            Some(Tok::Num(_)) => {
                let (Tok::Num(text), span) = self.bump() else { unreachable!() };
                let r: Rat = text
                    .parse()
                    .map_err(|_| FormulaError::new(ErrorKind::Syntax, Some(span), format!("bad number `{text}`")))?;
                if !r.in_unit_interval() {
                    return Err(FormulaError::new(
                        ErrorKind::IndexRange,
                        Some(span),
                        format!("index {r} is outside [0,1]"),
                    ));
                }
                Ok((r, span))
            }
            _ => self.unexpected("a number"),
        }
    }

    fn iff(&mut self) -> Result<Parsed, FormulaError> {
        let start = self.span_here().0;
        let (a, sa) = self.imp()?;
        if self.eat(&Tok::Iff) {
            let (b, sb) = self.imp()?;
            if self.peek() == Some(&Tok::Iff) {
                return self.err("`<->` does not associate; add parentheses");
            }
            let span = (start, self.last_end());
            let f = Formula::iff(a, b);
            // (a -> b) & (b -> a), expanded
            let mut tree = SpanTree::uniform(&f, span);
            graft(&mut tree, &sa, &sb);
            return Ok((f, tree));
        }
        Ok((a, sa))
    }

    fn imp(&mut self) -> Result<Parsed, FormulaError> {
        let start = self.span_here().0;
        let (a, sa) = self.or()?;
        if self.eat(&Tok::Arrow) {
            let (b, sb) = self.imp()?;
            let span = (start, self.last_end());
            return Ok((Formula::implies(a, b), SpanTree::node(span, vec![sa, sb])));
        }
        Ok((a, sa))
    }

    fn or(&mut self) -> Result<Parsed, FormulaError> {
        let start = self.span_here().0;
        let (mut a, mut sa) = self.and()?;
        while self.eat(&Tok::Bar) {
            let (b, sb) = self.and()?;
            let span = (start, self.last_end());
            // !a -> b
            let tree = SpanTree::node(span, vec![SpanTree::node(span, vec![sa, SpanTree::leaf(span)]), sb]);
            a = Formula::or(a, b);
            sa = tree;
        }
        Ok((a, sa))
    }

    fn and(&mut self) -> Result<Parsed, FormulaError> {
        let start = self.span_here().0;
        let (mut a, mut sa) = self.unary()?;
        while self.eat(&Tok::Amp) {
            let (b, sb) = self.unary()?;
            let span = (start, self.last_end());
            // !(!!a -> !b)
            let not = |t: SpanTree| SpanTree::node(span, vec![t, SpanTree::leaf(span)]);
            let tree = not(SpanTree::node(span, vec![not(not(sa)), not(sb)]));
            a = Formula::and(a, b);
            sa = tree;
        }
        Ok((a, sa))
    }

    fn unary(&mut self) -> Result<Parsed, FormulaError> {
        let start = self.span_here().0;
        match self.peek() {
            Some(Tok::Bang) => {
                self.pos += 1;
                let (a, sa) = self.unary()?;
                let span = (start, self.last_end());
                Ok((Formula::not(a), SpanTree::node(span, vec![sa, SpanTree::leaf(span)])))
            }
            Some(Tok::LBrack) => {
                self.pos += 1;
                let label = self.label()?;
                self.expect(Tok::RBrack)?;
                let (a, sa) = self.unary()?;
                let span = (start, self.last_end());
                Ok((Formula::modal(label, a), SpanTree::node(span, vec![sa])))
            }
            Some(Tok::Ident(name)) if Bound::from_keyword(name).is_some() => {
                let bound = Bound::from_keyword(name).expect("checked");
                let kw_span = self.span_here();
                self.pos += 1;
                let cmp = match self.peek() {
                    Some(Tok::Cmp(c)) => *c,
                    _ => {
                        return Err(FormulaError::new(
                            ErrorKind::Syntax,
                            Some(kw_span),
                            format!(
                                "`{}` must be followed by one of >=, <=, <, > and a bound",
                                bound.keyword()
                            ),
                        ))
                    }
                };
                self.pos += 1;
                let (p, _) = self.number()?;
                let (a, sa) = self.unary()?;
                let span = (start, self.last_end());
                let f = expand_abbreviation(bound, cmp, &p, a.clone());
                let mut tree = SpanTree::uniform(&f, span);
                graft_operand(&mut tree, &f, &a, sa);
                Ok((f, tree))
            }
            _ => self.primary(),
        }
    }

    fn label(&mut self) -> Result<Label, FormulaError> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                let span = self.span_here();
                self.pos += 1;
                Ok(match name.as_str() {
                    "pr1" => Label::Pr1,
                    "pr2" => Label::Pr2,
                    "in1" => Label::In1,
                    "in2" => Label::In2,
                    "next" => Label::Next,
                    "Pr" => {
                        let (p, _) = self.number()?;
                        Label::Idx(DeltaKind::Prob, p, Rat::zero())
                    }
                    "Pl" | "Ps" => {
                        let kind = if name == "Pl" { DeltaKind::Plaus } else { DeltaKind::Poss };
                        let (p, q) = self.pair()?;
                        Label::Idx(kind, p, q)
                    }
                    other => {
                        return Err(FormulaError::new(
                            ErrorKind::Syntax,
                            Some(span),
                            format!("unknown modality `{other}`"),
                        ))
                    }
                })
            }
            Some(Tok::LParen) => {
                let (p, q) = self.pair()?;
                Ok(Label::Idx(DeltaKind::Upper, p, q))
            }
            _ => self.unexpected("a modality"),
        }
    }

    fn pair(&mut self) -> Result<(Rat, Rat), FormulaError> {
        self.expect(Tok::LParen)?;
        let (p, _) = self.number()?;
        self.expect(Tok::Comma)?;
        let (q, _) = self.number()?;
        self.expect(Tok::RParen)?;
        Ok((p, q))
    }

    fn primary(&mut self) -> Result<Parsed, FormulaError> {
        let start = self.span_here().0;
        match self.peek().cloned() {
            Some(Tok::Ident(name)) if name == "bot" => {
                let span = self.bump().1;
                Ok((Formula::Bot, SpanTree::leaf(span)))
            }
            Some(Tok::Ident(name)) if name == "top" => {
                let span = self.bump().1;
                Ok((Formula::top(), SpanTree::uniform(&Formula::top(), span)))
            }
            Some(Tok::LBrace) => {
                self.pos += 1;
                let mut labels = Vec::new();
                if !self.eat(&Tok::RBrace) {
                    loop {
                        match self.peek().cloned() {
                            Some(Tok::Ident(s)) | Some(Tok::Num(s)) => {
                                self.pos += 1;
                                labels.push(s);
                            }
                            _ => return self.unexpected("a point name"),
                        }
                        if self.eat(&Tok::RBrace) {
                            break;
                        }
                        self.expect(Tok::Comma)?;
                    }
                }
                let span = (start, self.last_end());
                Ok((Formula::atom(&labels), SpanTree::leaf(span)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let (f, mut t) = self.iff()?;
                self.expect(Tok::RParen)?;
                t.span = (start, self.last_end());
                Ok((f, t))
            }
            _ => self.unexpected("a formula"),
        }
    }
}

/// Places the operand spans of `a <-> b` inside its expansion
/// `!(!!x -> !y)` with `x = a -> b` and `y = b -> a`.
fn graft(tree: &mut SpanTree, sa: &SpanTree, sb: &SpanTree) {
    tree.children[0].children[0].children[0].children[0].children = vec![sa.clone(), sb.clone()];
    tree.children[0].children[1].children[0].children = vec![sb.clone(), sa.clone()];
}

/// Replaces the span subtree of the operand `a` inside an expanded
/// comparator formula.
fn graft_operand(tree: &mut SpanTree, f: &Formula, a: &Formula, sa: SpanTree) {
    if f == a {
        *tree = sa;
        return;
    }
    match f {
        Formula::Implies(x, _) => graft_operand(&mut tree.children[0], x, a, sa),
        Formula::Modal(_, x) => graft_operand(&mut tree.children[0], x, a, sa),
        _ => {}
    }
}

/// Parses text into a core formula and its span tree.
pub fn parse_surface(text: &str) -> Result<(Formula, SpanTree), FormulaError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let out = p.iff()?;
    if p.pos < p.toks.len() {
        return p.unexpected("end of input");
    }
    Ok(out)
}
