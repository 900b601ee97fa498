use std::collections::HashMap;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable {
    pub symbol: String,
    pub datatype: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constant {
    pub symbol: String,
    pub datatype: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Variable),
    Const(Constant),
}

impl Term {
    pub fn var(symbol: &str, datatype: &str) -> Self {
        Term::Var(Variable { symbol: symbol.into(), datatype: datatype.into() })
    }

    pub fn constant(symbol: &str, datatype: &str) -> Self {
        Term::Const(Constant { symbol: symbol.into(), datatype: datatype.into() })
    }

    pub fn symbol(&self) -> &str {
        match self {
            Term::Var(v) => &v.symbol,
            Term::Const(c) => &c.symbol,
        }
    }

    pub fn datatype(&self) -> &str {
        match self {
            Term::Var(v) => &v.datatype,
            Term::Const(c) => &c.datatype,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: String,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, terms: Vec<Term>) -> Self {
        Self { predicate: predicate.into(), terms }
    }

    /// The always-false atom stored at table index 0.
    pub fn falsum() -> Self {
        Self::new("⊥", vec![])
    }

    /// The always-true atom stored at table index 1.
    pub fn verum() -> Self {
        Self::new("⊤", vec![])
    }

    pub fn is_ground(&self) -> bool {
        self.terms.iter().all(|t| !t.is_var())
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.terms.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if self.terms.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(t.symbol())?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl Rule {
    pub fn new(head: Atom, body: Vec<Atom>) -> Self {
        Self { head, body }
    }

    /// Distinct variables in order of first occurrence, head first.
    pub fn variables(&self) -> Vec<Variable> {
        let mut out: Vec<Variable> = Vec::new();
        for atom in std::iter::once(&self.head).chain(self.body.iter()) {
            for v in atom.variables() {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    pub fn is_ground(&self) -> bool {
        self.head.is_ground() && self.body.iter().all(Atom::is_ground)
    }

    /// Alpha-canonical form: body atoms sorted by a rename-invariant key,
    /// ties resolved by the lexicographically smallest rendering, and
    /// variables renamed `O1, O2, ...` in order of first occurrence. Head
    /// variables keep their symbols.
    pub fn canonical(&self) -> Rule {
        let head_vars: Vec<Variable> = self.head.variables().cloned().collect();
        let mut keyed: Vec<(String, Atom)> = self
            .body
            .iter()
            .map(|a| (shape_key(a, &head_vars), a.clone()))
            .collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));

        let mut groups: Vec<Vec<Atom>> = Vec::new();
        let mut last_key: Option<&str> = None;
        for (k, a) in &keyed {
            if last_key == Some(k.as_str()) {
                groups.last_mut().unwrap().push(a.clone());
            } else {
                groups.push(vec![a.clone()]);
            }
            last_key = Some(k.as_str());
        }

        let mut options: usize = 1;
        for g in &groups {
            options = options.saturating_mul((1..=g.len()).product::<usize>());
        }
        let mut best: Option<(String, Rule)> = None;
        if options <= 40_320 {
            let mut current: Vec<Vec<Atom>> = groups.clone();
            permute_groups(&mut current, 0, &mut |gs| {
                let body: Vec<Atom> = gs.iter().flatten().cloned().collect();
                let r = rename_by_occurrence(&self.head, &body, &head_vars);
                let text = r.to_string();
                if best.as_ref().map(|(t, _)| text < *t).unwrap_or(true) {
                    best = Some((text, r));
                }
            });
        } else {
            let body: Vec<Atom> = groups.into_iter().flatten().collect();
            let r = rename_by_occurrence(&self.head, &body, &head_vars);
            best = Some((r.to_string(), r));
        }
        best.map(|(_, r)| r).unwrap()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:-", self.head)?;
        for (i, a) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(".")
    }
}

pub fn format_weighted_rule(weight: f64, rule: &Rule) -> String {
    format!("{weight}:{rule}")
}

fn shape_key(atom: &Atom, head_vars: &[Variable]) -> String {
    let mut key = atom.predicate.clone();
    key.push('(');
    for t in &atom.terms {
        match t {
            Term::Const(c) => {
                key.push_str("c:");
                key.push_str(&c.symbol);
            }
            Term::Var(v) => {
                if head_vars.contains(v) {
                    key.push_str("h:");
                    key.push_str(&v.symbol);
                } else {
                    key.push_str("v:");
                }
                key.push_str(&v.datatype);
            }
        }
        key.push(',');
    }
    key
}

fn permute_groups(groups: &mut [Vec<Atom>], at: usize, visit: &mut dyn FnMut(&[Vec<Atom>])) {
    if at == groups.len() {
        visit(groups);
        return;
    }
    let n = groups[at].len();
    permute_in_place(groups, at, 0, n, visit);
}

fn permute_in_place(
    groups: &mut [Vec<Atom>],
    g: usize,
    k: usize,
    n: usize,
    visit: &mut dyn FnMut(&[Vec<Atom>]),
) {
    if k == n {
        permute_groups(groups, g + 1, visit);
        return;
    }
    for i in k..n {
        groups[g].swap(k, i);
        permute_in_place(groups, g, k + 1, n, visit);
        groups[g].swap(k, i);
    }
}

fn rename_by_occurrence(head: &Atom, body: &[Atom], head_vars: &[Variable]) -> Rule {
    let mut map: HashMap<Variable, String> = HashMap::new();
    let taken: Vec<&str> = head_vars.iter().map(|v| v.symbol.as_str()).collect();
    let mut next = 1;
    let mut rename = |atom: &Atom, map: &mut HashMap<Variable, String>| -> Atom {
        let terms = atom
            .terms
            .iter()
            .map(|t| match t {
                Term::Var(v) if !head_vars.contains(v) => {
                    let name = map
                        .entry(v.clone())
                        .or_insert_with(|| loop {
                            let candidate = format!("O{next}");
                            next += 1;
                            if !taken.contains(&candidate.as_str()) {
                                break candidate;
                            }
                        })
                        .clone();
                    Term::Var(Variable { symbol: name, datatype: v.datatype.clone() })
                }
                other => other.clone(),
            })
            .collect();
        Atom { predicate: atom.predicate.clone(), terms }
    };
    let body = body.iter().map(|a| rename(a, &mut map)).collect();
    Rule { head: head.clone(), body }
}
