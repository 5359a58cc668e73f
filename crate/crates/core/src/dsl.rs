//! Text form of bracket expressions.
//!
//! ```text
//! expr   := factor+
//! factor := 'Re(' expr ')' | 'tr(' expr ')' | symbol
//! symbol := 'X' digits '*'? ('[' digits ']')?  |  'Y' digits '*'?  |  'I'
//! top    := 'E[' expr ']' | expr
//! ```
//!
//! `Xk` is a random matrix; repeated labels denote the same matrix. Its color
//! (the ensemble binding) defaults to `k` and can be overridden with `[c]`.
//! `I` is the identity (color 0). `Yk` is a deterministic or residual matrix
//! attached to the random matrix immediately before it.

use std::collections::BTreeMap;
use std::fmt;

use crate::bracket::{BracketDiagram, Tag, Token};
use crate::error::{Error, Result};
use crate::perm::{PreMap, SignedDomain, SignedPermutation, Sym};

/// Color reserved for `I`.
pub const IDENTITY_COLOR: u32 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    X,
    Y,
    I,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolRef {
    pub letter: Letter,
    pub label: u32,
    pub starred: bool,
    /// Explicit `[c]` annotation.
    pub color: Option<u32>,
    /// Byte offset in the source.
    pub pos: usize,
}

impl SymbolRef {
    /// Ensemble color of an `X` or `I` symbol.
    pub fn effective_color(&self) -> u32 {
        match self.letter {
            Letter::I => IDENTITY_COLOR,
            _ => self.color.unwrap_or(self.label),
        }
    }
}

impl fmt::Display for SymbolRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.letter {
            Letter::I => return write!(f, "I"),
            Letter::X => write!(f, "X{}", self.label)?,
            Letter::Y => write!(f, "Y{}", self.label)?,
        }
        if self.starred {
            write!(f, "*")?;
        }
        if let Some(c) = self.color {
            write!(f, "[{c}]")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Product(Vec<Node>),
    Re(Box<Node>),
    Tr(Box<Node>),
    Symbol(SymbolRef),
}

impl Node {
    fn walk<'a>(&'a self, out: &mut Vec<&'a SymbolRef>) {
        match self {
            Node::Product(v) => v.iter().for_each(|c| c.walk(out)),
            Node::Re(c) | Node::Tr(c) => c.walk(out),
            Node::Symbol(s) => out.push(s),
        }
    }

    fn tokens(&self, out: &mut Vec<Token>, next: &mut Sym) {
        match self {
            Node::Product(v) => v.iter().for_each(|c| c.tokens(out, next)),
            Node::Re(c) | Node::Tr(c) => {
                out.push(Token::Open(if matches!(self, Node::Re(_)) { Tag::Re } else { Tag::Tr }));
                c.tokens(out, next);
                out.push(Token::Close);
            }
            Node::Symbol(s) => {
                *next += 1;
                out.push(Token::Sym(if s.starred { -*next } else { *next }));
            }
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Product(v) => {
                for (i, c) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
            Node::Re(c) => write!(f, "Re({c})"),
            Node::Tr(c) => write!(f, "tr({c})"),
            Node::Symbol(s) => write!(f, "{s}"),
        }
    }
}

/// Parsed expression; `root` is always a `Product`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExprAst {
    pub root: Node,
    /// Whether the text was wrapped in `E[…]`.
    pub expectation: bool,
}

impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.expectation {
            write!(f, "E[{}]", self.root)
        } else {
            write!(f, "{}", self.root)
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, pos: usize, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(s.as_bytes()) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn digits(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).ok()?.parse().ok()
    }

    /// factor+ up to `)` , `]` or end of input.
    fn expr(&mut self) -> Result<Node> {
        let mut items = Vec::new();
        loop {
            match self.peek() {
                None | Some(b')') | Some(b']') => break,
                _ => items.push(self.factor()?),
            }
        }
        if items.is_empty() {
            return self.err(self.pos, "expected a symbol or bracket");
        }
        Ok(Node::Product(items))
    }

    fn bracket(&mut self) -> Result<Node> {
        let inner = self.expr()?;
        if !self.eat(")") {
            return self.err(self.pos, "expected ')'");
        }
        Ok(inner)
    }

    fn factor(&mut self) -> Result<Node> {
        self.skip_ws();
        let start = self.pos;
        if self.eat("Re(") {
            return Ok(Node::Re(Box::new(self.bracket()?)));
        }
        if self.eat("tr(") {
            return Ok(Node::Tr(Box::new(self.bracket()?)));
        }
        let c = self.src[self.pos];
        let letter = match c {
            b'X' => Letter::X,
            b'Y' => Letter::Y,
            b'I' => Letter::I,
            _ => {
                let ch = std::str::from_utf8(&self.src[self.pos..]).ok().and_then(|s| s.chars().next()).unwrap_or('?');
                return self.err(start, format!("unexpected '{ch}'"));
            }
        };
        self.pos += 1;
        let label = if letter == Letter::I {
            0
        } else {
            match self.digits() {
                Some(0) | None => return self.err(self.pos, "expected a positive symbol index"),
                Some(k) => k,
            }
        };
        let starred = self.src.get(self.pos) == Some(&b'*');
        if starred {
            if letter == Letter::I {
                return self.err(self.pos, "I takes no adjoint marker");
            }
            self.pos += 1;
        }
        let mut color = None;
        if self.src.get(self.pos) == Some(&b'[') {
            if letter != Letter::X {
                return self.err(self.pos, "only X symbols take a color");
            }
            self.pos += 1;
            match self.digits() {
                Some(0) => return self.err(self.pos, "color 0 is reserved for I"),
                Some(k) => color = Some(k),
                None => return self.err(self.pos, "expected a color number"),
            }
            if self.src.get(self.pos) != Some(&b']') {
                return self.err(self.pos, "expected ']'");
            }
            self.pos += 1;
        }
        Ok(Node::Symbol(SymbolRef { letter, label, starred, color, pos: start }))
    }
}

/// Parse expression text.
pub fn parse(text: &str) -> Result<ExprAst> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let expectation = p.eat("E[");
    let root = p.expr()?;
    if expectation && !p.eat("]") {
        return p.err(p.pos, "expected ']'");
    }
    if let Some(c) = p.peek() {
        return p.err(p.pos, format!("unexpected '{}'", c as char));
    }
    let ast = ExprAst { root, expectation };
    check_labels(&ast)?;
    ast.diagram().map_err(|e| match e {
        Error::Malformed(m) => Error::Parse { pos: 0, msg: m },
        e => e,
    })?;
    Ok(ast)
}

/// A repeated `X` label must carry one consistent color.
fn check_labels(ast: &ExprAst) -> Result<()> {
    let mut seen: BTreeMap<u32, (Option<u32>, usize)> = BTreeMap::new();
    for s in ast.symbols() {
        if s.letter != Letter::X {
            continue;
        }
        match seen.get(&s.label) {
            Some(&(c, _)) if c.is_some() && s.color.is_some() && c != s.color => {
                return Err(Error::Parse {
                    pos: s.pos,
                    msg: format!("duplicate symbol index X{} with conflicting colors", s.label),
                })
            }
            Some(&(None, p)) if s.color.is_some() => {
                seen.insert(s.label, (s.color, p));
            }
            None => {
                seen.insert(s.label, (s.color, s.pos));
            }
            _ => {}
        }
    }
    Ok(())
}

impl ExprAst {
    /// All symbols in left-to-right order.
    pub fn symbols(&self) -> Vec<&SymbolRef> {
        let mut out = Vec::new();
        self.root.walk(&mut out);
        out
    }

    /// Color of every `X` label, with explicit annotations taking precedence.
    pub fn label_colors(&self) -> BTreeMap<u32, u32> {
        let mut out = BTreeMap::new();
        for s in self.symbols() {
            if s.letter == Letter::X {
                let e = out.entry(s.label).or_insert(s.label);
                if let Some(c) = s.color {
                    *e = c;
                }
            }
        }
        out
    }

    /// Diagram over every symbol, renumbered 1..m left to right; starred
    /// symbols are negative.
    pub fn diagram(&self) -> Result<BracketDiagram> {
        let mut tokens = Vec::new();
        let mut next = 0;
        self.root.tokens(&mut tokens, &mut next);
        BracketDiagram::new(next as u32, tokens)
    }

    /// Diagram numbered by the written labels instead of positions; the labels
    /// must be exactly 1..m, each used once.
    pub fn labeled_diagram(&self) -> Result<BracketDiagram> {
        let syms = self.symbols();
        let mut tokens = Vec::new();
        let mut next = 0;
        self.root.tokens(&mut tokens, &mut next);
        let mut it = syms.iter();
        for t in tokens.iter_mut() {
            if let Token::Sym(_) = t {
                let s = it.next().unwrap();
                let k = s.label as Sym;
                *t = Token::Sym(if s.starred { -k } else { k });
            }
        }
        BracketDiagram::new(syms.len() as u32, tokens)
    }

    /// Reduce to the Proposition's data over random slots.
    pub fn to_permutations(&self) -> Result<ExprPermutations> {
        let colors = self.label_colors();
        let syms = self.symbols();
        let mut slot_of_symbol = Vec::with_capacity(syms.len());
        let mut slots: Vec<Slot> = Vec::new();
        let mut tokens = Vec::new();
        let mut full = Vec::new();
        let mut next = 0;
        self.root.tokens(&mut full, &mut next);
        let mut si = 0usize;
        let mut prev_was_slot = false;
        for t in full {
            match t {
                Token::Sym(_) => {
                    let s = syms[si];
                    si += 1;
                    if s.letter == Letter::Y {
                        let attach = slots.last_mut().filter(|_| prev_was_slot);
                        match attach {
                            Some(slot) => {
                                slot.y = Some(YRef { label: s.label, starred: s.starred });
                                slot_of_symbol.push(slots.len());
                            }
                            None => {
                                return Err(Error::Parse {
                                    pos: s.pos,
                                    msg: "Y must directly follow an X or I symbol".into(),
                                })
                            }
                        }
                        prev_was_slot = false;
                    } else {
                        let color = if s.letter == Letter::I { IDENTITY_COLOR } else { colors[&s.label] };
                        slots.push(Slot {
                            letter: s.letter,
                            label: s.label,
                            eps: if s.starred { -1 } else { 1 },
                            color,
                            y: None,
                        });
                        slot_of_symbol.push(slots.len());
                        tokens.push(Token::Sym(slots.len() as Sym));
                        prev_was_slot = true;
                    }
                }
                t => {
                    tokens.push(t);
                    prev_was_slot = false;
                }
            }
        }
        let n = slots.len() as u32;
        let d = BracketDiagram::new(n, tokens)?;
        let phi_re = d.perm(Tag::Re);
        let phi_tr = d.perm(Tag::Tr);
        Ok(ExprPermutations {
            n,
            phi_re_premap: PreMap::double(&phi_re)?,
            phi_tr_premap: PreMap::double(&phi_tr)?,
            phi_re,
            phi_tr,
            slots,
            slot_of_symbol,
        })
    }
}

/// Y attached to a slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct YRef {
    pub label: u32,
    pub starred: bool,
}

/// One X_k^{(ε_k)} Y_k unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slot {
    pub letter: Letter,
    pub label: u32,
    pub eps: i8,
    pub color: u32,
    pub y: Option<YRef>,
}

/// (φ_Re, φ_tr, ε, w) with ∞ adjoined; φ's act on the positive slots.
#[derive(Clone, Debug)]
pub struct ExprPermutations {
    pub n: u32,
    pub phi_re: SignedPermutation,
    pub phi_tr: SignedPermutation,
    pub phi_re_premap: PreMap,
    pub phi_tr_premap: PreMap,
    pub slots: Vec<Slot>,
    /// 1-based slot index of each source symbol.
    pub slot_of_symbol: Vec<usize>,
}

impl ExprPermutations {
    pub fn domain(&self) -> SignedDomain {
        SignedDomain::new(self.n, true)
    }

    pub fn eps(&self) -> Vec<i8> {
        self.slots.iter().map(|s| s.eps).collect()
    }

    pub fn colors(&self) -> Vec<u32> {
        self.slots.iter().map(|s| s.color).collect()
    }

    pub fn has_y(&self) -> bool {
        self.slots.iter().any(|s| s.y.is_some())
    }
}

/// Parse straight to a signed diagram over all symbols.
pub fn parse_diagram(text: &str) -> Result<BracketDiagram> {
    parse(text)?.diagram()
}

/// Parse to a diagram numbered by the written labels.
pub fn parse_labeled_diagram(text: &str) -> Result<BracketDiagram> {
    parse(text)?.labeled_diagram()
}

/// Canonical text of a diagram with symbol prefix (`X`, `Y`, …).
pub fn serialize(d: &BracketDiagram, prefix: &str) -> String {
    d.render(prefix)
}
