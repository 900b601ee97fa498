use std::collections::BTreeMap;
use std::fmt;

use super::language::Language;
use super::syntax::{Atom, Constant, Rule, Term, Variable};
use crate::error::{Error, Result};

/// Mapping from variables to constants of the same datatype.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Substitution(pub BTreeMap<Variable, Constant>);

impl Substitution {
    pub fn get(&self, v: &Variable) -> Option<&Constant> {
        self.0.get(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, c)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}/{}", v.symbol, c.symbol)?;
        }
        f.write_str("}")
    }
}

/// All substitutions grounding the rule's variables with constants of their
/// datatype, enumerated lexicographically: variables in order of first
/// occurrence (the first varies slowest), constants in declared order.
///
/// With the distinct-objects option, two variables of a distinct datatype
/// that occur together in one atom must take different constants, so no
/// grounding produces an atom such as `closeby(obj1,obj1)`.
pub fn enumerate_substitutions(rule: &Rule, lang: &Language) -> Vec<Substitution> {
    let vars = rule.variables();
    let domains: Vec<&[String]> = vars.iter().map(|v| lang.constants(&v.datatype)).collect();
    let mut conflicts: Vec<Vec<usize>> = vec![Vec::new(); vars.len()];
    for atom in std::iter::once(&rule.head).chain(rule.body.iter()) {
        let ids: Vec<usize> = atom
            .variables()
            .map(|v| vars.iter().position(|x| x == v).unwrap())
            .collect();
        for (a, &i) in ids.iter().enumerate() {
            for &j in &ids[a + 1..] {
                if i != j
                    && vars[i].datatype == vars[j].datatype
                    && lang.is_distinct(&vars[i].datatype)
                {
                    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                    if !conflicts[hi].contains(&lo) {
                        conflicts[hi].push(lo);
                    }
                }
            }
        }
    }

    let mut out = Vec::new();
    let mut choice = vec![0usize; vars.len()];
    fn recurse(
        depth: usize,
        choice: &mut Vec<usize>,
        domains: &[&[String]],
        conflicts: &[Vec<usize>],
        vars: &[Variable],
        out: &mut Vec<Substitution>,
    ) {
        if depth == domains.len() {
            let map = vars
                .iter()
                .zip(choice.iter())
                .zip(domains)
                .map(|((v, &c), d)| {
                    (v.clone(), Constant { symbol: d[c].clone(), datatype: v.datatype.clone() })
                })
                .collect();
            out.push(Substitution(map));
            return;
        }
        for c in 0..domains[depth].len() {
            if conflicts[depth].iter().any(|&j| choice[j] == c) {
                continue;
            }
            choice[depth] = c;
            recurse(depth + 1, choice, domains, conflicts, vars, out);
        }
    }
    recurse(0, &mut choice, &domains, &conflicts, &vars, &mut out);
    out
}

pub fn ground_atom(atom: &Atom, sub: &Substitution) -> Result<Atom> {
    let terms = atom
        .terms
        .iter()
        .map(|t| match t {
            Term::Var(v) => sub.get(v).cloned().map(Term::Const).ok_or_else(|| {
                Error::Grounding(format!("variable {} of {} is unbound", v.symbol, atom))
            }),
            Term::Const(c) => Ok(Term::Const(c.clone())),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Atom { predicate: atom.predicate.clone(), terms })
}

pub fn ground_rule(rule: &Rule, sub: &Substitution) -> Result<Rule> {
    let head = ground_atom(&rule.head, sub)?;
    let body = rule.body.iter().map(|a| ground_atom(a, sub)).collect::<Result<Vec<_>>>()?;
    Ok(Rule { head, body })
}
