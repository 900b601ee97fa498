use std::fmt;

use super::language::{Language, PredicateKind};
use super::parser::{Cursor, ParseError, ParseErrorKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModeKind {
    Head,
    Body,
}

/// `+` must reuse an existing variable, `-` may introduce a fresh one,
/// `#` takes a constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Placemarker {
    Input,
    Output,
    Constant,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeArg {
    pub placemarker: Placemarker,
    pub datatype: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeDeclaration {
    pub kind: ModeKind,
    pub recall: usize,
    pub predicate: String,
    pub args: Vec<ModeArg>,
}

impl fmt::Display for ModeDeclaration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kw = match self.kind {
            ModeKind::Head => "modeh",
            ModeKind::Body => "modeb",
        };
        write!(f, "{kw}({}, {}(", self.recall, self.predicate)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let p = match a.placemarker {
                Placemarker::Input => '+',
                Placemarker::Output => '-',
                Placemarker::Constant => '#',
            };
            write!(f, "{p}{}", a.datatype)?;
        }
        f.write_str("))")
    }
}

fn parse_one(text: &str, lang: &Language) -> Result<ModeDeclaration, ParseError> {
    let mut cur = Cursor::new(text);
    let (kw, kw_pos) = cur.ident()?;
    let kind = match kw.as_str() {
        "modeh" => ModeKind::Head,
        "modeb" => ModeKind::Body,
        other => {
            return Err(ParseError::new(
                ParseErrorKind::Syntax(format!("expected modeh or modeb, found {other}")),
                kw_pos,
            ))
        }
    };
    cur.expect('(')?;
    let (num, num_pos) = cur
        .number()
        .ok_or_else(|| cur.error(ParseErrorKind::Syntax("expected a recall bound".into())))?;
    let recall: i64 = num
        .parse()
        .map_err(|_| ParseError::new(ParseErrorKind::InvalidRecall(num.clone()), num_pos))?;
    if recall < 1 {
        return Err(ParseError::new(ParseErrorKind::InvalidRecall(num), num_pos));
    }
    cur.expect(',')?;
    let (pname, ppos) = cur.ident()?;
    let pred = lang
        .predicate(&pname)
        .ok_or_else(|| ParseError::new(ParseErrorKind::UnknownPredicate(pname.clone()), ppos))?;
    let wanted = match kind {
        ModeKind::Head => PredicateKind::Action,
        ModeKind::Body => PredicateKind::State,
    };
    if pred.kind != wanted {
        return Err(ParseError::new(
            ParseErrorKind::WrongKind { predicate: pname, expected: wanted },
            ppos,
        ));
    }
    cur.expect('(')?;
    let mut args = Vec::new();
    loop {
        cur.skip_ws();
        let pm_pos = cur.pos;
        let placemarker = match cur.peek() {
            Some('+') => Placemarker::Input,
            Some('-') | Some('\u{2212}') => Placemarker::Output,
            Some('#') => Placemarker::Constant,
            Some(c) => {
                return Err(ParseError::new(
                    ParseErrorKind::MalformedPlacemarker(c.to_string()),
                    pm_pos,
                ))
            }
            None => {
                return Err(ParseError::new(
                    ParseErrorKind::MalformedPlacemarker("end of input".into()),
                    pm_pos,
                ))
            }
        };
        cur.pos += 1;
        if matches!(cur.peek(), Some(c) if c.is_whitespace()) {
            return Err(ParseError::new(
                ParseErrorKind::MalformedPlacemarker("placemarker separated from datatype".into()),
                pm_pos,
            ));
        }
        let (dt, dt_pos) = cur.ident()?;
        if lang.datatype(&dt).is_none() {
            return Err(ParseError::new(ParseErrorKind::UnknownDatatype(dt), dt_pos));
        }
        args.push((ModeArg { placemarker, datatype: dt }, dt_pos));
        if cur.eat(')') {
            break;
        }
        cur.expect(',')?;
    }
    cur.expect(')')?;
    if !cur.at_end() {
        return Err(cur.error(ParseErrorKind::Syntax("trailing input after declaration".into())));
    }
    if args.len() != pred.arity() {
        return Err(ParseError::new(
            ParseErrorKind::ArityMismatch {
                predicate: pname,
                expected: pred.arity(),
                found: args.len(),
            },
            ppos,
        ));
    }
    for ((arg, pos), dt) in args.iter().zip(&pred.datatypes) {
        if &arg.datatype != dt {
            return Err(ParseError::new(
                ParseErrorKind::DatatypeMismatch { symbol: arg.datatype.clone(), expected: dt.clone() },
                *pos,
            ));
        }
    }
    Ok(ModeDeclaration {
        kind,
        recall: recall as usize,
        predicate: pred.name.clone(),
        args: args.into_iter().map(|(a, _)| a).collect(),
    })
}

/// Parses one declaration per line. Blank lines and lines starting with
/// `#` or `//` are comments.
pub fn parse_mode_declarations(
    text: &str,
    lang: &Language,
) -> Result<Vec<ModeDeclaration>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("//") {
            continue;
        }
        let decl = parse_one(trimmed, lang).map_err(|mut e| {
            e.line = Some(i + 1);
            e
        })?;
        out.push(decl);
    }
    Ok(out)
}
