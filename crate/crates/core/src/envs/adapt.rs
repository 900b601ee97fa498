use std::sync::Arc;

use crate::error::{Error, Result};
use crate::logic::{Atom, GroundAtomTable, Rule};
use crate::reasoner::LogicPolicy;

/// Rewrites every body occurrence of predicate `from` into `to` and
/// recompiles the policy against `table`. Weights are kept as they are.
pub fn swap_predicate(
    policy: &LogicPolicy,
    from: &str,
    to: &str,
    table: Arc<GroundAtomTable>,
) -> Result<LogicPolicy> {
    let source = policy.table().language();
    let target = table.language();
    let pf = source
        .predicate(from)
        .ok_or_else(|| Error::Invalid(format!("unknown predicate {from}")))?;
    let pt = target
        .predicate(to)
        .ok_or_else(|| Error::Invalid(format!("unknown predicate {to}")))?;
    if pf.datatypes != pt.datatypes || pf.kind != pt.kind {
        return Err(Error::Invalid(format!(
            "cannot swap {}({}) for {}({}): signatures differ",
            pf.name,
            pf.datatypes.join(","),
            pt.name,
            pt.datatypes.join(",")
        )));
    }
    let (from_name, to_name) = (pf.name.clone(), pt.name.clone());
    let rules: Vec<Rule> = policy
        .rules()
        .iter()
        .map(|r| {
            let body = r
                .body
                .iter()
                .map(|a| {
                    if a.predicate == from_name {
                        Atom::new(&to_name, a.terms.clone())
                    } else {
                        a.clone()
                    }
                })
                .collect();
            Rule::new(r.head.clone(), body)
        })
        .collect();
    LogicPolicy::new(rules, table, policy.weights().clone(), *policy.params())
}
