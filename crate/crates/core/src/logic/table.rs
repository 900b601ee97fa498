use std::collections::HashMap;
use std::ops::Range;

use super::language::{Language, Predicate, PredicateKind};
use super::syntax::{Atom, Constant, Term};
use crate::error::{Error, Result};

pub const FALSE_INDEX: usize = 0;
pub const TRUE_INDEX: usize = 1;
pub const DEFAULT_TABLE_CAP: usize = 200_000;

/// Ordered list of all ground atoms: `⊥`, `⊤`, then every action atom,
/// then every state atom.
#[derive(Clone, Debug)]
pub struct GroundAtomTable {
    language: Language,
    atoms: Vec<Atom>,
    index: HashMap<Atom, usize>,
    num_action_atoms: usize,
}

impl GroundAtomTable {
    pub fn language(&self) -> &Language {
        &self.language
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn index_of(&self, atom: &Atom) -> Option<usize> {
        self.index.get(atom).copied()
    }

    pub fn num_action_atoms(&self) -> usize {
        self.num_action_atoms
    }

    pub fn action_range(&self) -> Range<usize> {
        2..2 + self.num_action_atoms
    }

    pub fn state_range(&self) -> Range<usize> {
        2 + self.num_action_atoms..self.atoms.len()
    }

    /// Index of the table atom for `predicate(args...)` given constant symbols.
    pub fn lookup(&self, predicate: &str, args: &[&str]) -> Option<usize> {
        let pred = self.language.predicate(predicate)?;
        if pred.arity() != args.len() {
            return None;
        }
        let terms = args
            .iter()
            .zip(&pred.datatypes)
            .map(|(s, dt)| Term::constant(s, dt))
            .collect();
        self.index_of(&Atom::new(&pred.name, terms))
    }
}

fn ground_count(pred: &Predicate, lang: &Language) -> usize {
    pred.datatypes
        .iter()
        .map(|d| lang.constants(d).len())
        .fold(1usize, |a, b| a.saturating_mul(b))
}

/// Ground atoms of one predicate. Arguments are compared lexicographically,
/// taking argument positions in order of their datatype's declaration
/// (earlier datatypes are more significant, ties keep argument order) and
/// constants in declared order. Atoms that repeat a constant of a distinct
/// datatype are skipped.
fn ground_predicate(pred: &Predicate, lang: &Language, out: &mut Vec<Atom>) {
    let n = pred.arity();
    let dt_rank = |d: &str| lang.datatypes().iter().position(|x| x.name == d).unwrap();
    let mut significance: Vec<usize> = (0..n).collect();
    significance.sort_by_key(|&i| (dt_rank(&pred.datatypes[i]), i));
    let domains: Vec<&[String]> = pred.datatypes.iter().map(|d| lang.constants(d)).collect();
    if domains.iter().any(|d| d.is_empty()) {
        return;
    }
    let mut choice = vec![0usize; n];
    loop {
        let clash = (0..n).any(|i| {
            (i + 1..n).any(|j| {
                pred.datatypes[i] == pred.datatypes[j]
                    && lang.is_distinct(&pred.datatypes[i])
                    && choice[i] == choice[j]
            })
        });
        if !clash {
            let terms = (0..n)
                .map(|i| {
                    Term::Const(Constant {
                        symbol: domains[i][choice[i]].clone(),
                        datatype: pred.datatypes[i].clone(),
                    })
                })
                .collect();
            out.push(Atom { predicate: pred.name.clone(), terms });
        }
        // Odometer: the least significant position advances first.
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            let pos = significance[k];
            choice[pos] += 1;
            if choice[pos] < domains[pos].len() {
                break;
            }
            choice[pos] = 0;
        }
    }
}

pub fn build_atom_table(lang: &Language, cap: usize) -> Result<GroundAtomTable> {
    let mut size: usize = 2;
    for p in lang.predicates() {
        size = size.saturating_add(ground_count(p, lang));
    }
    if size > cap {
        return Err(Error::TableTooLarge { size, cap });
    }
    let mut atoms = vec![Atom::falsum(), Atom::verum()];
    for p in lang.predicates().iter().filter(|p| p.kind == PredicateKind::Action) {
        ground_predicate(p, lang, &mut atoms);
    }
    let num_action_atoms = atoms.len() - 2;
    for p in lang.predicates().iter().filter(|p| p.kind == PredicateKind::State) {
        ground_predicate(p, lang, &mut atoms);
    }
    let index = atoms.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
    Ok(GroundAtomTable { language: lang.clone(), atoms, index, num_action_atoms })
}
