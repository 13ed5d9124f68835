// SPDX-License-Identifier: Apache-2.0

//! Net-level dependency graph and direct/indirect signal classification.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rtl::Netlist;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Assign,
    Register,
}

/// `reader` has `read` in its driving expression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub reader: String,
    pub read: String,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Direct,
    Indirect,
    Unrelated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relationship {
    pub kind: RelationKind,
    /// Shortest dependency distance; 0 when unrelated.
    pub depth: usize,
    /// Shortest path from reader to source; empty when unrelated.
    pub witness_path: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown signal `{0}`")]
pub struct UnknownSignalError(pub String);

#[derive(Debug, Clone)]
pub struct DependencyGraph {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    edges: Vec<Edge>,
    /// Sorted by node index, which is name order.
    fanin: Vec<Vec<usize>>,
    fanout: Vec<Vec<usize>>,
}

impl DependencyGraph {
    /// Builds the graph over every net. Parameters are not nodes.
    pub fn build(netlist: &Netlist) -> Self {
        let names: Vec<String> = netlist.nets.keys().cloned().collect();
        let index: BTreeMap<String, usize> =
            names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let mut fanin: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); names.len()];
        let mut labels: BTreeMap<(usize, usize), EdgeKind> = BTreeMap::new();
        let drivers = netlist
            .assigns
            .iter()
            .map(|a| (&a.lhs, &a.rhs, EdgeKind::Assign))
            .chain(netlist.registers.iter().map(|r| (&r.target, &r.next, EdgeKind::Register)));
        for (lhs, rhs, kind) in drivers {
            let Some(&r) = index.get(lhs.as_str()) else {
                continue;
            };
            rhs.visit_identifiers(&mut |id| {
                if let Some(&s) = index.get(id) {
                    fanin[r].insert(s);
                    labels.insert((r, s), kind);
                }
            });
        }
        let mut fanout: Vec<Vec<usize>> = vec![Vec::new(); names.len()];
        for (r, srcs) in fanin.iter().enumerate() {
            for &s in srcs {
                fanout[s].push(r);
            }
        }
        let edges = labels
            .iter()
            .map(|(&(r, s), &kind)| Edge {
                reader: names[r].clone(),
                read: names[s].clone(),
                kind,
            })
            .collect();
        DependencyGraph {
            names,
            index,
            edges,
            fanin: fanin.into_iter().map(|s| s.into_iter().collect()).collect(),
            fanout,
        }
    }

    pub fn nodes(&self) -> &[String] {
        &self.names
    }

    /// Edges ordered by (reader, read).
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    fn id(&self, name: &str) -> Result<usize, UnknownSignalError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| UnknownSignalError(name.to_string()))
    }

    /// Nets read directly by `name`'s driver.
    pub fn reads(&self, name: &str) -> Result<Vec<&str>, UnknownSignalError> {
        Ok(self.fanin[self.id(name)?].iter().map(|&i| self.names[i].as_str()).collect())
    }

    /// Nets whose drivers read `name`.
    pub fn readers(&self, name: &str) -> Result<Vec<&str>, UnknownSignalError> {
        Ok(self.fanout[self.id(name)?].iter().map(|&i| self.names[i].as_str()).collect())
    }

    /// Shortest dependency path from `reader` to `source`. Among equally short
    /// paths the lexicographically smallest node sequence wins.
    pub fn classify(&self, reader: &str, source: &str) -> Result<Relationship, UnknownSignalError> {
        let from = self.id(reader)?;
        let to = self.id(source)?;
        let mut parent: Vec<Option<usize>> = vec![None; self.names.len()];
        let mut seen = vec![false; self.names.len()];
        let mut queue = VecDeque::new();
        // The start node is not marked seen so a cycle back to it is found.
        queue.push_back(from);
        let mut found = false;
        'bfs: while let Some(n) = queue.pop_front() {
            for &m in &self.fanin[n] {
                if seen[m] {
                    continue;
                }
                seen[m] = true;
                parent[m] = Some(n);
                if m == to {
                    found = true;
                    break 'bfs;
                }
                queue.push_back(m);
            }
        }
        if !found {
            return Ok(Relationship {
                kind: RelationKind::Unrelated,
                depth: 0,
                witness_path: Vec::new(),
            });
        }
        let mut path = vec![to];
        let mut cur = parent[to].expect("reached node has a parent");
        while cur != from {
            path.push(cur);
            cur = parent[cur].expect("reached node has a parent");
        }
        path.push(from);
        path.reverse();
        let depth = path.len() - 1;
        Ok(Relationship {
            kind: if depth == 1 {
                RelationKind::Direct
            } else {
                RelationKind::Indirect
            },
            depth,
            witness_path: path.into_iter().map(|i| self.names[i].clone()).collect(),
        })
    }

    /// Transitive sources of `signal` with their BFS depth, up to
    /// `max_depth` levels (`None` for unbounded). A register on a feedback
    /// loop appears in its own fan-in.
    pub fn fanin(
        &self,
        signal: &str,
        max_depth: Option<usize>,
    ) -> Result<BTreeMap<String, usize>, UnknownSignalError> {
        let start = self.id(signal)?;
        let mut depth: BTreeMap<usize, usize> = BTreeMap::new();
        let mut queue = VecDeque::from([(start, 0usize)]);
        while let Some((n, d)) = queue.pop_front() {
            if max_depth.is_some_and(|m| d >= m) {
                continue;
            }
            for &m in &self.fanin[n] {
                if depth.contains_key(&m) {
                    continue;
                }
                depth.insert(m, d + 1);
                queue.push_back((m, d + 1));
            }
        }
        Ok(depth
            .into_iter()
            .map(|(i, d)| (self.names[i].clone(), d))
            .collect())
    }

    /// Union of unbounded fan-in cones of `signals`, plus the signals.
    pub fn cone(&self, signals: &BTreeSet<String>) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for s in signals {
            if let Ok(f) = self.fanin(s, None) {
                out.extend(f.into_keys());
                out.insert(s.clone());
            }
        }
        out
    }

    /// Graphviz text; edges point from the read net to its reader.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph deps {\n  rankdir=LR;\n");
        for n in &self.names {
            let _ = writeln!(s, "  \"{n}\";");
        }
        for e in &self.edges {
            let style = match e.kind {
                EdgeKind::Assign => "solid",
                EdgeKind::Register => "dashed",
            };
            let _ = writeln!(s, "  \"{}\" -> \"{}\" [style={style}];", e.read, e.reader);
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rtl::parse_design;

    fn irq_graph() -> DependencyGraph {
        DependencyGraph::build(&parse_design(include_str!("../corpus/reference/irq_handle.sv")).unwrap())
    }

    #[test]
    fn irq_handle_edges() {
        let g = irq_graph();
        let has = |r: &str, s: &str| g.edges().iter().any(|e| e.reader == r && e.read == s && e.kind == EdgeKind::Assign);
        assert!(has("handle_irq", "irq_enabled"));
        assert!(has("irq_enabled", "csr_mstatus_mie_i"));
        assert!(has("irq_enabled", "priv_mode_i"));
        assert!(!g.contains("PRIV_LVL_U"));
    }

    #[test]
    fn direct_and_indirect() {
        let g = irq_graph();
        let d = g.classify("handle_irq", "irq_enabled").unwrap();
        assert_eq!((d.kind, d.depth), (RelationKind::Direct, 1));
        let i = g.classify("handle_irq", "csr_mstatus_mie_i").unwrap();
        assert_eq!((i.kind, i.depth), (RelationKind::Indirect, 2));
        assert_eq!(i.witness_path, vec!["handle_irq", "irq_enabled", "csr_mstatus_mie_i"]);
        let u = g.classify("irq_enabled", "handle_irq").unwrap();
        assert_eq!(u.kind, RelationKind::Unrelated);
        assert_eq!(g.classify("handle_irq", "handle_irq").unwrap().kind, RelationKind::Unrelated);
        assert!(g.classify("nope", "handle_irq").is_err());
    }

    #[test]
    fn self_loop_through_register_is_direct() {
        let src = "module c(input logic clk, input logic en, output logic [3:0] q);\n always_ff @(posedge clk) q <= en ? q + 4'h1 : q;\nendmodule";
        let g = DependencyGraph::build(&parse_design(src).unwrap());
        let r = g.classify("q", "q").unwrap();
        assert_eq!((r.kind, r.depth), (RelationKind::Direct, 1));
        assert_eq!(g.edges()[0].kind, EdgeKind::Register);
    }

    #[test]
    fn fanin_of_handle_irq() {
        let g = irq_graph();
        let f = g.fanin("handle_irq", None).unwrap();
        let expect: BTreeMap<String, usize> = [
            ("debug_mode_q", 1),
            ("debug_single_step_i", 1),
            ("nmi_mode_q", 1),
            ("irq_nm", 1),
            ("irq_pending_i", 1),
            ("irq_enabled", 1),
            ("csr_mstatus_mie_i", 2),
            ("priv_mode_i", 2),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        assert_eq!(f, expect);
        assert!(g.fanin("irq_nm", None).unwrap().is_empty());
        let one = g.fanin("handle_irq", Some(1)).unwrap();
        let reads: BTreeSet<_> = g.reads("handle_irq").unwrap().into_iter().map(String::from).collect();
        assert_eq!(one.keys().cloned().collect::<BTreeSet<_>>(), reads);
    }

    #[test]
    fn empty_design_has_nodes_only() {
        let g = DependencyGraph::build(&parse_design("module m(input logic a, output logic b); endmodule").unwrap());
        assert_eq!(g.nodes().len(), 2);
        assert!(g.edges().is_empty());
        assert!(g.to_dot().contains("\"a\";"));
    }
}
