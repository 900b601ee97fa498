use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::logic::{
    enumerate_substitutions, ground_rule, GroundAtomTable, Rule, FALSE_INDEX, TRUE_INDEX,
};

/// Optional caps on the index tensor dimensions.
#[derive(Clone, Copy, Debug, Default)]
pub struct IndexLimits {
    /// Body slots per grounding. Defaults to the longest body (at least 1).
    pub body_len: Option<usize>,
    /// Maximum substitutions per (rule, head atom).
    pub max_substitutions: Option<usize>,
}

/// Groundings of one rule that derive one head atom; `bodies` holds
/// `len × L` table indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeadGroundings {
    pub head: usize,
    pub bodies: Vec<usize>,
}

impl HeadGroundings {
    pub fn len(&self, body_len: usize) -> usize {
        self.bodies.len() / body_len
    }
}

/// Sparse C×G×S×L index tensor. Entry `[i, j, k, l]` is the table index of
/// the l-th body atom of the k-th substitution of rule i that derives atom
/// j; padding slots point to `⊤`, missing groundings to `⊥`, and every
/// entry of the `⊤` row is `⊤`.
#[derive(Clone, Debug)]
pub struct IndexTensor {
    num_atoms: usize,
    body_len: usize,
    max_subs: usize,
    rules: Vec<Vec<HeadGroundings>>,
}

impl IndexTensor {
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.rules.len(), self.num_atoms, self.max_subs, self.body_len)
    }

    pub fn num_rules(&self) -> usize {
        self.rules.len()
    }

    pub fn num_atoms(&self) -> usize {
        self.num_atoms
    }

    pub fn body_len(&self) -> usize {
        self.body_len
    }

    pub fn max_substitutions(&self) -> usize {
        self.max_subs
    }

    pub fn groundings(&self, rule: usize) -> &[HeadGroundings] {
        &self.rules[rule]
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        if j == TRUE_INDEX {
            return TRUE_INDEX;
        }
        let Some(hg) = self.rules[i].iter().find(|h| h.head == j) else {
            return FALSE_INDEX;
        };
        if k < hg.len(self.body_len) {
            hg.bodies[k * self.body_len + l]
        } else {
            FALSE_INDEX
        }
    }

    /// Dense copy in row-major `[i][j][k][l]` order.
    pub fn to_dense(&self) -> Vec<usize> {
        let (c, g, s, l) = self.dims();
        let mut out = vec![FALSE_INDEX; c * g * s * l];
        for i in 0..c {
            for k in 0..s {
                for ll in 0..l {
                    out[((i * g + TRUE_INDEX) * s + k) * l + ll] = TRUE_INDEX;
                }
            }
            for hg in &self.rules[i] {
                for (k, row) in hg.bodies.chunks(l).enumerate() {
                    let base = ((i * g + hg.head) * s + k) * l;
                    out[base..base + l].copy_from_slice(row);
                }
            }
        }
        out
    }
}

pub fn build_index_tensor(
    rules: &[Rule],
    table: &GroundAtomTable,
    limits: IndexLimits,
) -> Result<IndexTensor> {
    let lang = table.language();
    let longest = rules.iter().map(|r| r.body.len()).max().unwrap_or(0).max(1);
    let body_len = match limits.body_len {
        Some(l) if l < longest => {
            return Err(Error::Shape(format!(
                "a rule body has {longest} atoms but only {l} slots are allowed"
            )))
        }
        Some(l) => l.max(1),
        None => longest,
    };
    let mut out = Vec::with_capacity(rules.len());
    let mut max_subs = 0;
    for rule in rules {
        let mut by_head: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut order: Vec<usize> = Vec::new();
        for sub in enumerate_substitutions(rule, lang) {
            let g = ground_rule(rule, &sub)?;
            let head = table.index_of(&g.head).ok_or_else(|| {
                Error::Grounding(format!("head {} is not in the atom table", g.head))
            })?;
            let mut row = Vec::with_capacity(body_len);
            for atom in &g.body {
                row.push(table.index_of(atom).ok_or_else(|| {
                    Error::Grounding(format!("body atom {atom} is not in the atom table"))
                })?);
            }
            row.resize(body_len, TRUE_INDEX);
            let entry = by_head.entry(head).or_insert_with(|| {
                order.push(head);
                Vec::new()
            });
            entry.extend(row);
        }
        let mut heads = Vec::with_capacity(order.len());
        for head in order {
            let bodies = by_head.remove(&head).unwrap();
            let n = bodies.len() / body_len;
            if let Some(cap) = limits.max_substitutions {
                if n > cap {
                    return Err(Error::Shape(format!(
                        "rule {rule} has {n} substitutions for one head atom, above the cap of {cap}"
                    )));
                }
            }
            max_subs = max_subs.max(n);
            heads.push(HeadGroundings { head, bodies });
        }
        heads.sort_by_key(|h| h.head);
        out.push(heads);
    }
    Ok(IndexTensor { num_atoms: table.len(), body_len, max_subs: max_subs.max(1), rules: out })
}
