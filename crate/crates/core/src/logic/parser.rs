use std::fmt;

use super::language::{is_constant_symbol, Language, PredicateKind};
use super::syntax::{Atom, Constant, Rule, Term, Variable};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownPredicate(String),
    UnknownConstant(String),
    UnknownDatatype(String),
    ArityMismatch { predicate: String, expected: usize, found: usize },
    DatatypeMismatch { symbol: String, expected: String },
    WrongKind { predicate: String, expected: PredicateKind },
    DuplicateBodyAtom(String),
    MalformedPlacemarker(String),
    InvalidRecall(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Syntax(m) => write!(f, "syntax error: {m}"),
            Self::UnknownPredicate(p) => write!(f, "unknown predicate {p}"),
            Self::UnknownConstant(c) => write!(f, "unknown constant {c}"),
            Self::UnknownDatatype(d) => write!(f, "unknown datatype {d}"),
            Self::ArityMismatch { predicate, expected, found } => write!(
                f,
                "arity mismatch for {predicate}: expected {expected} arguments, found {found}"
            ),
            Self::DatatypeMismatch { symbol, expected } => {
                write!(f, "datatype mismatch: {symbol} is not a constant of datatype {expected}")
            }
            Self::WrongKind { predicate, expected } => {
                let what = match expected {
                    PredicateKind::Action => "an action",
                    PredicateKind::State => "a state",
                };
                write!(f, "predicate {predicate} used where {what} predicate is required")
            }
            Self::DuplicateBodyAtom(a) => write!(f, "duplicate body atom {a}"),
            Self::MalformedPlacemarker(p) => write!(f, "malformed placemarker {p}"),
            Self::InvalidRecall(r) => write!(f, "invalid recall {r}: recall must be at least 1"),
        }
    }
}

/// A parse failure with a zero-based character position inside the
/// offending text and, for multi-line input, a one-based line number.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
    pub line: Option<usize>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}, column {}: {}", self.position + 1, self.kind),
            None => write!(f, "column {}: {}", self.position + 1, self.kind),
        }
    }
}

impl ParseError {
    pub(crate) fn new(kind: ParseErrorKind, position: usize) -> Self {
        Self { kind, position, line: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedRule {
    pub rule: Rule,
    pub weight: Option<f64>,
}

pub(crate) struct Cursor<'a> {
    chars: Vec<char>,
    pub pos: usize,
    _text: &'a str,
}

impl<'a> Cursor<'a> {
    pub fn new(text: &'a str) -> Self {
        Self { chars: text.chars().collect(), pos: 0, _text: text }
    }

    pub fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    pub fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    pub fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.chars.len()
    }

    pub fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn eat_str(&mut self, s: &str) -> bool {
        self.skip_ws();
        let n = s.chars().count();
        if self.pos + n <= self.chars.len()
            && self.chars[self.pos..self.pos + n].iter().copied().eq(s.chars())
        {
            self.pos += n;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(ParseErrorKind::Syntax(match self.peek() {
                Some(found) => format!("expected '{c}', found '{found}'"),
                None => format!("expected '{c}', found end of input"),
            })))
        }
    }

    pub fn ident(&mut self) -> Result<(String, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if start == self.pos {
            return Err(self.error(ParseErrorKind::Syntax(match self.peek() {
                Some(found) => format!("expected an identifier, found '{found}'"),
                None => "expected an identifier, found end of input".into(),
            })));
        }
        Ok((self.chars[start..self.pos].iter().collect(), start))
    }

    pub fn number(&mut self) -> Option<(String, usize)> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E') {
                self.pos += 1;
            } else {
                break;
            }
        }
        if start == self.pos {
            None
        } else {
            Some((self.chars[start..self.pos].iter().collect(), start))
        }
    }

    pub fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError::new(kind, self.pos)
    }
}

struct RawAtom {
    predicate: String,
    args: Vec<(String, usize)>,
    position: usize,
}

fn raw_atom(cur: &mut Cursor) -> Result<RawAtom, ParseError> {
    let (predicate, position) = cur.ident()?;
    let mut args = Vec::new();
    if cur.eat('(') {
        if !cur.eat(')') {
            loop {
                args.push(cur.ident()?);
                if cur.eat(')') {
                    break;
                }
                cur.expect(',')?;
            }
        }
    }
    Ok(RawAtom { predicate, args, position })
}

fn resolve_atom(raw: RawAtom, lang: &Language, kind: PredicateKind) -> Result<Atom, ParseError> {
    let pred = lang.predicate(&raw.predicate).ok_or_else(|| {
        ParseError::new(ParseErrorKind::UnknownPredicate(raw.predicate.clone()), raw.position)
    })?;
    if pred.kind != kind {
        return Err(ParseError::new(
            ParseErrorKind::WrongKind { predicate: raw.predicate.clone(), expected: kind },
            raw.position,
        ));
    }
    if pred.arity() != raw.args.len() {
        return Err(ParseError::new(
            ParseErrorKind::ArityMismatch {
                predicate: raw.predicate.clone(),
                expected: pred.arity(),
                found: raw.args.len(),
            },
            raw.position,
        ));
    }
    let mut terms = Vec::with_capacity(raw.args.len());
    for ((symbol, pos), dt) in raw.args.into_iter().zip(&pred.datatypes) {
        let first = symbol.chars().next().unwrap();
        if first.is_uppercase() {
            terms.push(Term::Var(Variable { symbol, datatype: dt.clone() }));
        } else if !is_constant_symbol(&symbol) {
            return Err(ParseError::new(
                ParseErrorKind::Syntax(format!("invalid term {symbol}")),
                pos,
            ));
        } else if lang.constants(dt).contains(&symbol) {
            terms.push(Term::Const(Constant { symbol, datatype: dt.clone() }));
        } else if lang.datatypes().iter().any(|d| d.constants.contains(&symbol)) {
            return Err(ParseError::new(
                ParseErrorKind::DatatypeMismatch { symbol, expected: dt.clone() },
                pos,
            ));
        } else {
            return Err(ParseError::new(ParseErrorKind::UnknownConstant(symbol), pos));
        }
    }
    Ok(Atom { predicate: pred.name.clone(), terms })
}

/// Parses a single atom. Its predicate may be of either kind.
pub fn parse_atom(text: &str, lang: &Language) -> Result<Atom, ParseError> {
    let mut cur = Cursor::new(text);
    let raw = raw_atom(&mut cur)?;
    if !cur.at_end() {
        return Err(cur.error(ParseErrorKind::Syntax("trailing input after atom".into())));
    }
    let kind = lang
        .predicate(&raw.predicate)
        .map(|p| p.kind)
        .ok_or_else(|| {
            ParseError::new(ParseErrorKind::UnknownPredicate(raw.predicate.clone()), raw.position)
        })?;
    resolve_atom(raw, lang, kind)
}

/// Parses `[weight:]head:-b1,...,bn.`. The body may be empty (`head:-.` or
/// `head.`).
pub fn parse_rule(text: &str, lang: &Language) -> Result<ParsedRule, ParseError> {
    let mut cur = Cursor::new(text);
    cur.skip_ws();
    let mut weight = None;
    if matches!(cur.peek(), Some(c) if c.is_ascii_digit() || c == '.' || c == '-' || c == '+') {
        let (num, pos) = cur.number().unwrap();
        let w: f64 = num.parse().map_err(|_| {
            ParseError::new(ParseErrorKind::Syntax(format!("invalid weight {num}")), pos)
        })?;
        if !w.is_finite() {
            return Err(ParseError::new(
                ParseErrorKind::Syntax(format!("invalid weight {num}")),
                pos,
            ));
        }
        cur.expect(':')?;
        weight = Some(w);
    }
    let head = resolve_atom(raw_atom(&mut cur)?, lang, PredicateKind::Action)?;
    let mut body = Vec::new();
    if cur.eat_str(":-") {
        cur.skip_ws();
        if cur.peek() != Some('.') {
            loop {
                let raw = raw_atom(&mut cur)?;
                let pos = raw.position;
                let atom = resolve_atom(raw, lang, PredicateKind::State)?;
                if body.contains(&atom) {
                    return Err(ParseError::new(
                        ParseErrorKind::DuplicateBodyAtom(atom.to_string()),
                        pos,
                    ));
                }
                body.push(atom);
                if !cur.eat(',') {
                    break;
                }
            }
        }
    }
    cur.expect('.')?;
    if !cur.at_end() {
        return Err(cur.error(ParseErrorKind::Syntax("trailing input after rule".into())));
    }
    Ok(ParsedRule { rule: Rule::new(head, body), weight })
}

/// Parses a rule file: one rule per line, blank lines and lines starting
/// with `#` are skipped, and a rule may continue over several lines until
/// its terminating period.
pub fn parse_rules(text: &str, lang: &Language) -> Result<Vec<ParsedRule>, ParseError> {
    let mut out = Vec::new();
    let mut pending = String::new();
    let mut start_line = 0;
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if pending.is_empty() {
            start_line = i + 1;
        }
        pending.push_str(trimmed);
        if trimmed.ends_with('.') {
            let parsed = parse_rule(&pending, lang).map_err(|mut e| {
                e.line = Some(start_line);
                e
            })?;
            out.push(parsed);
            pending.clear();
        }
    }
    if !pending.is_empty() {
        return Err(ParseError {
            kind: ParseErrorKind::Syntax("rule is missing its terminating '.'".into()),
            position: pending.chars().count(),
            line: Some(start_line),
        });
    }
    Ok(out)
}
