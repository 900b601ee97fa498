//! First-order action-state language.
//!
//! Rules have the shape `head:-b1,...,bn.` where the head uses an action
//! predicate and the body uses state predicates. Identifiers starting with an
//! uppercase letter are variables, everything else is a constant. Every
//! argument position of a predicate carries a datatype, and a variable's
//! identity is its symbol together with that datatype.

mod language;
mod mode;
mod parser;
mod subst;
mod syntax;
mod table;

pub use language::{Datatype, Language, Predicate, PredicateKind};
pub use mode::{parse_mode_declarations, ModeArg, ModeDeclaration, ModeKind, Placemarker};
pub use parser::{parse_atom, parse_rule, parse_rules, ParseError, ParseErrorKind, ParsedRule};
pub use subst::{enumerate_substitutions, ground_atom, ground_rule, Substitution};
pub use syntax::{format_weighted_rule, Atom, Constant, Rule, Term, Variable};
pub use table::{build_atom_table, GroundAtomTable, DEFAULT_TABLE_CAP, FALSE_INDEX, TRUE_INDEX};
