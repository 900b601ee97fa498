use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredicateKind {
    Action,
    State,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Datatype {
    pub name: String,
    pub constants: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    pub name: String,
    pub kind: PredicateKind,
    #[serde(default)]
    pub datatypes: Vec<String>,
    /// Actual environment action for action predicates. When absent it is
    /// inferred as the longest declared action that prefixes the name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
}

impl Predicate {
    pub fn arity(&self) -> usize {
        self.datatypes.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct LanguageFile {
    #[serde(default)]
    actions: Vec<String>,
    #[serde(default = "default_distinct")]
    distinct: Vec<String>,
    datatypes: Vec<Datatype>,
    predicates: Vec<Predicate>,
    #[serde(default)]
    aliases: BTreeMap<String, String>,
}

fn default_distinct() -> Vec<String> {
    vec!["object".to_string()]
}

/// Typed predicates, constants and the mapping from action predicates to
/// the environment's actual actions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Language {
    actions: Vec<String>,
    distinct: Vec<String>,
    datatypes: Vec<Datatype>,
    predicates: Vec<Predicate>,
    aliases: BTreeMap<String, String>,
    predicate_index: HashMap<String, usize>,
    action_of: Vec<Option<usize>>,
}

impl Language {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: LanguageFile =
            toml::from_str(text).map_err(|e| Error::Language(e.to_string()))?;
        Self::new(file.actions, file.distinct, file.datatypes, file.predicates, file.aliases)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Language(format!("{}: file not found or unreadable ({e})", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let file = LanguageFile {
            actions: self.actions.clone(),
            distinct: self.distinct.clone(),
            datatypes: self.datatypes.clone(),
            predicates: self.predicates.clone(),
            aliases: self.aliases.clone(),
        };
        toml::to_string(&file).expect("language serializes")
    }

    pub fn new(
        actions: Vec<String>,
        distinct: Vec<String>,
        datatypes: Vec<Datatype>,
        predicates: Vec<Predicate>,
        aliases: BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for dt in &datatypes {
            if !seen.insert(dt.name.as_str()) {
                return Err(Error::Language(format!("duplicate datatype {}", dt.name)));
            }
            let mut consts = HashSet::new();
            for c in &dt.constants {
                if !is_constant_symbol(c) {
                    return Err(Error::Language(format!(
                        "constant {c} of datatype {} must start with a lowercase letter or digit",
                        dt.name
                    )));
                }
                if !consts.insert(c.as_str()) {
                    return Err(Error::Language(format!(
                        "duplicate constant {c} in datatype {}",
                        dt.name
                    )));
                }
            }
        }
        for d in &distinct {
            if !seen.contains(d.as_str()) {
                return Err(Error::Language(format!("distinct datatype {d} is not declared")));
            }
        }
        let mut predicate_index = HashMap::new();
        for (i, p) in predicates.iter().enumerate() {
            if !is_constant_symbol(&p.name) {
                return Err(Error::Language(format!("invalid predicate name {}", p.name)));
            }
            if predicate_index.insert(p.name.clone(), i).is_some() {
                return Err(Error::Language(format!("duplicate predicate {}", p.name)));
            }
            for dt in &p.datatypes {
                if !seen.contains(dt.as_str()) {
                    return Err(Error::Language(format!(
                        "predicate {} uses undeclared datatype {dt}",
                        p.name
                    )));
                }
            }
        }
        for (alias, target) in &aliases {
            if predicate_index.contains_key(alias) {
                return Err(Error::Language(format!("alias {alias} shadows a predicate")));
            }
            if !predicate_index.contains_key(target) {
                return Err(Error::Language(format!(
                    "alias {alias} points to unknown predicate {target}"
                )));
            }
        }
        let mut action_of = Vec::with_capacity(predicates.len());
        for p in &predicates {
            match p.kind {
                PredicateKind::State => {
                    if p.action.is_some() {
                        return Err(Error::Language(format!(
                            "state predicate {} cannot map to an action",
                            p.name
                        )));
                    }
                    action_of.push(None);
                }
                PredicateKind::Action => {
                    let idx = match &p.action {
                        Some(a) => actions.iter().position(|x| x == a).ok_or_else(|| {
                            Error::Language(format!(
                                "action predicate {} maps to undeclared action {a}",
                                p.name
                            ))
                        })?,
                        None => infer_action(&p.name, &actions).ok_or_else(|| {
                            Error::Language(format!(
                                "cannot infer the action for predicate {}",
                                p.name
                            ))
                        })?,
                    };
                    action_of.push(Some(idx));
                }
            }
        }
        Ok(Self { actions, distinct, datatypes, predicates, aliases, predicate_index, action_of })
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn datatypes(&self) -> &[Datatype] {
        &self.datatypes
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    pub fn aliases(&self) -> &BTreeMap<String, String> {
        &self.aliases
    }

    pub fn distinct_datatypes(&self) -> &[String] {
        &self.distinct
    }

    pub fn is_distinct(&self, datatype: &str) -> bool {
        self.distinct.iter().any(|d| d == datatype)
    }

    /// Returns a copy with the distinct-objects option set for the given datatypes.
    pub fn with_distinct(&self, distinct: Vec<String>) -> Result<Self> {
        Self::new(
            self.actions.clone(),
            distinct,
            self.datatypes.clone(),
            self.predicates.clone(),
            self.aliases.clone(),
        )
    }

    /// Returns a copy whose datatype `datatype` holds `constants`.
    pub fn with_constants(&self, datatype: &str, constants: Vec<String>) -> Result<Self> {
        let mut datatypes = self.datatypes.clone();
        let dt = datatypes
            .iter_mut()
            .find(|d| d.name == datatype)
            .ok_or_else(|| Error::Language(format!("unknown datatype {datatype}")))?;
        dt.constants = constants;
        Self::new(
            self.actions.clone(),
            self.distinct.clone(),
            datatypes,
            self.predicates.clone(),
            self.aliases.clone(),
        )
    }

    /// Resolves aliases to the canonical predicate name.
    pub fn resolve<'a>(&'a self, name: &'a str) -> &'a str {
        self.aliases.get(name).map(String::as_str).unwrap_or(name)
    }

    pub fn predicate_position(&self, name: &str) -> Option<usize> {
        self.predicate_index.get(self.resolve(name)).copied()
    }

    pub fn predicate(&self, name: &str) -> Option<&Predicate> {
        self.predicate_position(name).map(|i| &self.predicates[i])
    }

    pub fn datatype(&self, name: &str) -> Option<&Datatype> {
        self.datatypes.iter().find(|d| d.name == name)
    }

    pub fn constants(&self, datatype: &str) -> &[String] {
        self.datatype(datatype).map(|d| d.constants.as_slice()).unwrap_or(&[])
    }

    /// Index into [`Self::actions`] of the action an action predicate maps to.
    pub fn action_of(&self, predicate: &str) -> Option<usize> {
        self.predicate_position(predicate).and_then(|i| self.action_of[i])
    }

    pub fn action_predicates(&self) -> impl Iterator<Item = &Predicate> {
        self.predicates.iter().filter(|p| p.kind == PredicateKind::Action)
    }

    pub fn state_predicates(&self) -> impl Iterator<Item = &Predicate> {
        self.predicates.iter().filter(|p| p.kind == PredicateKind::State)
    }
}

pub(crate) fn is_constant_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() || c.is_ascii_digit() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn infer_action(name: &str, actions: &[String]) -> Option<usize> {
    actions
        .iter()
        .enumerate()
        .filter(|(_, a)| {
            name == a.as_str()
                || (name.starts_with(a.as_str())
                    && name[a.len()..].starts_with(|c: char| c == '_' || c.is_ascii_digit()))
        })
        .max_by_key(|(_, a)| a.len())
        .map(|(i, _)| i)
}
