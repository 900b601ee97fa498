//! Shipped languages, mode declarations and rule sets.

use super::{EnvConfig, EnvKind, Variant};
use crate::error::Result;
use crate::logic::Language;

const GETOUT_LANG: &str = include_str!("../../data/getout.toml");
const FISHES_LANG: &str = include_str!("../../data/threefishes.toml");
const LOOT_LANG: &str = include_str!("../../data/loot.toml");
const FIXTURE_LANG: &str = include_str!("../../data/index_fixture.toml");

/// Language of one game; object constants `obj1..objN` cover every entity
/// slot of the variant.
pub fn builtin_language(kind: EnvKind, variant: Variant) -> Result<Language> {
    let text = match kind {
        EnvKind::GetOut => GETOUT_LANG,
        EnvKind::ThreeFishes => FISHES_LANG,
        EnvKind::Loot => LOOT_LANG,
    };
    let n = EnvConfig::new(kind, variant).num_objects();
    let objects = (1..=n).map(|i| format!("obj{i}")).collect();
    Language::from_toml_str(text)?.with_constants("object", objects)
}

/// Body mode declarations used by the refinement operator.
pub fn builtin_modes(kind: EnvKind) -> &'static str {
    match kind {
        EnvKind::GetOut => include_str!("../../data/getout.modes"),
        EnvKind::ThreeFishes => include_str!("../../data/threefishes.modes"),
        EnvKind::Loot => include_str!("../../data/loot.modes"),
    }
}

/// One typing-only rule per action predicate, the starting beam.
pub fn initial_rules(kind: EnvKind) -> &'static str {
    match kind {
        EnvKind::GetOut => include_str!("../../data/getout_initial.rules"),
        EnvKind::ThreeFishes => include_str!("../../data/threefishes_initial.rules"),
        EnvKind::Loot => include_str!("../../data/loot_initial.rules"),
    }
}

pub fn expert_rules(kind: EnvKind) -> &'static str {
    match kind {
        EnvKind::GetOut => include_str!("../../data/getout_expert.rules"),
        EnvKind::ThreeFishes => include_str!("../../data/threefishes_expert.rules"),
        EnvKind::Loot => include_str!("../../data/loot_expert.rules"),
    }
}

/// Published weighted policies, kept verbatim (including wrapped lines) as
/// parser fixtures.
pub fn published_rules(kind: EnvKind) -> &'static str {
    match kind {
        EnvKind::GetOut => include_str!("../../data/getout_published.rules"),
        EnvKind::ThreeFishes => include_str!("../../data/threefishes_published.rules"),
        EnvKind::Loot => include_str!("../../data/loot_published.rules"),
    }
}

/// Two objects, `jump` as the only action predicate, `type` and `closeby`
/// as state predicates.
pub fn fixture_language() -> Result<Language> {
    Language::from_toml_str(FIXTURE_LANG)
}
