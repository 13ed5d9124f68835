// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{Assign, Netlist};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("combinational loop through {}", nets.join(" -> "))]
pub struct CombinationalLoopError {
    /// Nets on one cycle, starting from the smallest name.
    pub nets: Vec<String>,
}

/// Orders the continuous assigns so every net is computed after the nets it
/// reads. Ties are broken by source order.
pub fn combinational_closure(n: &Netlist) -> Result<Vec<&Assign>, CombinationalLoopError> {
    let index: BTreeMap<&str, usize> = n
        .assigns
        .iter()
        .enumerate()
        .map(|(i, a)| (a.lhs.as_str(), i))
        .collect();
    let deps: Vec<BTreeSet<usize>> = n
        .assigns
        .iter()
        .map(|a| {
            let mut d = BTreeSet::new();
            a.rhs.visit_identifiers(&mut |id| {
                if let Some(&j) = index.get(id) {
                    d.insert(j);
                }
            });
            d
        })
        .collect();
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); deps.len()];
    let mut pending: Vec<usize> = deps.iter().map(BTreeSet::len).collect();
    for (i, d) in deps.iter().enumerate() {
        for &j in d {
            users[j].push(i);
        }
    }
    let mut ready: BTreeSet<usize> = (0..deps.len()).filter(|&i| pending[i] == 0).collect();
    let mut order = Vec::with_capacity(deps.len());
    while let Some(i) = ready.pop_first() {
        order.push(&n.assigns[i]);
        for &u in &users[i] {
            pending[u] -= 1;
            if pending[u] == 0 {
                ready.insert(u);
            }
        }
    }
    if order.len() == deps.len() {
        return Ok(order);
    }
    Err(CombinationalLoopError {
        nets: find_cycle(n, &deps, &pending),
    })
}

fn find_cycle(n: &Netlist, deps: &[BTreeSet<usize>], pending: &[usize]) -> Vec<String> {
    // Every unresolved assign has an unresolved dependency; walking them must
    // revisit a node.
    let start = (0..deps.len())
        .filter(|&i| pending[i] > 0)
        .min_by_key(|&i| &n.assigns[i].lhs)
        .unwrap_or(0);
    let mut path = vec![start];
    let mut seen = BTreeMap::from([(start, 0usize)]);
    let mut cur = start;
    loop {
        let next = deps[cur]
            .iter()
            .copied()
            .filter(|&j| pending[j] > 0)
            .min_by_key(|&j| &n.assigns[j].lhs)
            .expect("unresolved assign has an unresolved dependency");
        if let Some(&pos) = seen.get(&next) {
            let cycle = &path[pos..];
            let rot = cycle
                .iter()
                .enumerate()
                .min_by_key(|(_, &i)| &n.assigns[i].lhs)
                .map_or(0, |(k, _)| k);
            return cycle[rot..]
                .iter()
                .chain(&cycle[..rot])
                .map(|&i| n.assigns[i].lhs.clone())
                .collect();
        }
        seen.insert(next, path.len());
        path.push(next);
        cur = next;
    }
}
