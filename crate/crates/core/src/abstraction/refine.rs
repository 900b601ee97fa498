use std::collections::BTreeSet;

use crate::logic::{Atom, Language, ModeDeclaration, ModeKind, Placemarker, Rule, Term, Variable};

/// Refinement settings: body mode declarations, the body length cap and the
/// beam dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinementConfig {
    pub modes: Vec<ModeDeclaration>,
    pub max_body_len: usize,
    pub beam_width: usize,
    pub depth: usize,
}

impl RefinementConfig {
    pub fn new(modes: Vec<ModeDeclaration>) -> Self {
        Self { modes, max_body_len: 6, beam_width: 3, depth: 3 }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.beam_width == 0 || self.depth == 0 || self.max_body_len == 0 {
            return Err(crate::Error::Invalid(
                "beam width, depth and body length must all be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Choices for one argument of a new body atom.
fn argument_options(
    pm: Placemarker,
    datatype: &str,
    vars: &[Variable],
    fresh: &str,
    lang: &Language,
) -> Vec<Term> {
    let existing = vars
        .iter()
        .filter(|v| v.datatype == datatype)
        .map(|v| Term::Var(v.clone()));
    match pm {
        Placemarker::Input => existing.collect(),
        Placemarker::Output => existing.chain(std::iter::once(Term::var(fresh, datatype))).collect(),
        Placemarker::Constant => lang.constants(datatype).iter().map(|c| Term::constant(c, datatype)).collect(),
    }
}

fn fresh_symbol(vars: &[Variable]) -> String {
    let mut n = vars.len() + 1;
    loop {
        let s = format!("O{n}");
        if !vars.iter().any(|v| v.symbol == s) {
            return s;
        }
        n += 1;
    }
}

/// Repeating a variable inside one atom at a distinct datatype can never be
/// grounded.
fn repeats_distinct_var(atom: &Atom, lang: &Language) -> bool {
    let vars: Vec<&Variable> = atom.variables().collect();
    (0..vars.len()).any(|i| (i + 1..vars.len()).any(|j| vars[i] == vars[j] && lang.is_distinct(&vars[i].datatype)))
}

/// All rules obtained by appending one mode-permitted, non-ground body atom
/// not already in the body. Results are canonical, deduplicated and sorted
/// by their text.
pub fn refine(rule: &Rule, cfg: &RefinementConfig, lang: &Language) -> Vec<Rule> {
    if rule.body.len() >= cfg.max_body_len {
        return Vec::new();
    }
    let vars = rule.variables();
    let fresh = fresh_symbol(&vars);
    let existing: BTreeSet<Rule> = std::iter::once(rule.canonical()).collect();
    let mut out: BTreeSet<(String, Rule)> = BTreeSet::new();
    for mode in cfg.modes.iter().filter(|m| m.kind == ModeKind::Body) {
        let Some(pred) = lang.predicate(&mode.predicate) else { continue };
        let used = rule.body.iter().filter(|a| a.predicate == pred.name).count();
        if used >= mode.recall {
            continue;
        }
        let options: Vec<Vec<Term>> = mode
            .args
            .iter()
            .map(|a| argument_options(a.placemarker, &a.datatype, &vars, &fresh, lang))
            .collect();
        if options.iter().any(Vec::is_empty) {
            continue;
        }
        let mut pick = vec![0usize; options.len()];
        loop {
            let terms: Vec<Term> = pick.iter().zip(&options).map(|(&k, o)| o[k].clone()).collect();
            let atom = Atom::new(&pred.name, terms);
            if !atom.is_ground() && !rule.body.contains(&atom) && !repeats_distinct_var(&atom, lang) {
                let mut body = rule.body.clone();
                body.push(atom);
                let r = Rule::new(rule.head.clone(), body).canonical();
                if !existing.contains(&r) {
                    out.insert((r.to_string(), r));
                }
            }
            // Odometer over argument choices, last argument fastest.
            let mut k = pick.len();
            let mut exhausted = true;
            while k > 0 {
                k -= 1;
                pick[k] += 1;
                if pick[k] < options[k].len() {
                    exhausted = false;
                    break;
                }
                pick[k] = 0;
            }
            if exhausted {
                break;
            }
        }
    }
    out.into_iter().map(|(_, r)| r).collect()
}
