//! Brute-force ground truth for trajectory objectives on small MDPs.
//!
//! Each objective is a function of running extrema that eventually freeze,
//! so the optimal value from `x` is the best score over augmented states
//! that lie on a cycle and are reachable from `(x, initial(x))`. The first
//! oracle computes that with an explicit graph search and SCC condensation;
//! the second enumerates every deterministic augmented policy.

use std::collections::HashMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::FiniteMdp;
use crate::objective::Tracker;
use crate::policy::realized_objective;
use crate::solvers::ValueTable;

/// Default cap on explored augmented states or enumerated policies.
pub const DEFAULT_ORACLE_CAP: f64 = 1e6;

/// Explicitly explored augmented graph keyed by exact `(x, y, z)`.
struct Explored {
    nodes: Vec<(usize, f64, f64)>,
    edges: Vec<Vec<usize>>,
    roots: Vec<usize>,
}

fn explore(mdp: &FiniteMdp, tracker: &Tracker<'_>, starts: &[usize], cap: f64) -> Result<Explored> {
    let mut ids: HashMap<(usize, u64, u64), usize> = HashMap::new();
    let mut nodes = Vec::new();
    let mut stack = Vec::new();
    let mut intern =
        |node: (usize, f64, f64), nodes: &mut Vec<(usize, f64, f64)>, stack: &mut Vec<usize>| -> Result<usize> {
            let key = (node.0, node.1.to_bits(), node.2.to_bits());
            if let Some(&id) = ids.get(&key) {
                return Ok(id);
            }
            if (nodes.len() + 1) as f64 > cap {
                return Err(Error::CapExceeded {
                    needed: (nodes.len() + 1) as f64,
                    cap,
                });
            }
            let id = nodes.len();
            ids.insert(key, id);
            nodes.push(node);
            stack.push(id);
            Ok(id)
        };
    let mut roots = Vec::with_capacity(starts.len());
    for &x in starts {
        mdp.check_state(x)?;
        let (y, z) = tracker.initial(x);
        roots.push(intern((x, y, z), &mut nodes, &mut stack)?);
    }
    let mut edges: Vec<Vec<usize>> = Vec::new();
    while let Some(id) = stack.pop() {
        let (x, y, z) = nodes[id];
        let mut out = Vec::with_capacity(mdp.num_actions());
        for &t in mdp.successors(x) {
            let (yt, zt) = tracker.step((y, z), t);
            out.push(intern((t, yt, zt), &mut nodes, &mut stack)?);
        }
        if edges.len() <= id {
            edges.resize(id + 1, Vec::new());
        }
        edges[id] = out;
    }
    edges.resize(nodes.len(), Vec::new());
    Ok(Explored { nodes, edges, roots })
}

/// Strongly connected components, numbered so that every edge leaving a
/// component points to a smaller id.
fn tarjan(edges: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let mut graph: DiGraph<(), ()> = DiGraph::with_capacity(edges.len(), edges.len() * 2);
    for _ in 0..edges.len() {
        graph.add_node(());
    }
    for (v, out) in edges.iter().enumerate() {
        for &w in out {
            graph.add_edge(NodeIndex::new(v), NodeIndex::new(w), ());
        }
    }
    // petgraph yields components in reverse topological order.
    let sccs = tarjan_scc(&graph);
    let mut comp = vec![0usize; edges.len()];
    for (c, members) in sccs.iter().enumerate() {
        for v in members {
            comp[v.index()] = c;
        }
    }
    (comp, sccs.len())
}

fn best_cycle_scores(graph: &Explored, tracker: &Tracker<'_>) -> Vec<f64> {
    let (comp, count) = tarjan(&graph.edges);
    let mut size = vec![0usize; count];
    for &c in &comp {
        size[c] += 1;
    }
    let mut own = vec![f64::NEG_INFINITY; count];
    for (v, &(_, y, z)) in graph.nodes.iter().enumerate() {
        let c = comp[v];
        let cyclic = size[c] > 1 || graph.edges[v].contains(&v);
        if cyclic {
            own[c] = own[c].max(tracker.score(y, z));
        }
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (v, &c) in comp.iter().enumerate() {
        members[c].push(v);
    }
    let mut best = own;
    for c in 0..count {
        for &v in &members[c] {
            for &w in &graph.edges[v] {
                if comp[w] != c {
                    best[c] = best[c].max(best[comp[w]]);
                }
            }
        }
    }
    graph.roots.iter().map(|&r| best[comp[r]]).collect()
}

/// Optimal value over all history-dependent policies, per start state.
pub fn oracle_value(mdp: &FiniteMdp, tracker: &Tracker<'_>, cap: f64) -> Result<ValueTable> {
    tracker.check(mdp)?;
    let starts: Vec<usize> = (0..mdp.num_states()).collect();
    let graph = explore(mdp, tracker, &starts, cap)?;
    Ok(ValueTable::new(best_cycle_scores(&graph, tracker)))
}

/// Optimal value by enumerating every deterministic policy on the augmented
/// states reachable from each start and rolling it out.
pub fn oracle_by_policy_enumeration(mdp: &FiniteMdp, tracker: &Tracker<'_>, cap: f64) -> Result<ValueTable> {
    tracker.check(mdp)?;
    let m = mdp.num_actions();
    let mut values = Vec::with_capacity(mdp.num_states());
    for x in 0..mdp.num_states() {
        let graph = explore(mdp, tracker, &[x], cap)?;
        let k = graph.nodes.len();
        let count = (m as f64).powi(k as i32);
        if count > cap {
            return Err(Error::CapExceeded { needed: count, cap });
        }
        let lookup: HashMap<(usize, u64, u64), usize> = graph
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &(s, y, z))| ((s, y.to_bits(), z.to_bits()), i))
            .collect();
        let mut digits = vec![0usize; k];
        let mut best = f64::NEG_INFINITY;
        'policies: loop {
            let traj = crate::policy::simulate_with(mdp, tracker, x, k + 1, |s, y, z| {
                digits[lookup[&(s, y.to_bits(), z.to_bits())]]
            })?;
            best = best.max(realized_objective(&traj, tracker.objective())?);
            for d in digits.iter_mut() {
                *d += 1;
                if *d < m {
                    continue 'policies;
                }
                *d = 0;
            }
            break;
        }
        values.push(best);
    }
    Ok(ValueTable::new(values))
}

/// Per-state agreement between a solver's values and an oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub oracle: Vec<f64>,
    pub solver: Vec<f64>,
    /// States where the two differ.
    pub mismatches: Vec<usize>,
}

impl OracleReport {
    pub fn agrees(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Exact comparison of two value tables of equal length.
pub fn compare(oracle: &ValueTable, solver: &ValueTable) -> Result<OracleReport> {
    if oracle.len() != solver.len() {
        return Err(Error::ValueSize {
            expected: oracle.len(),
            actual: solver.len(),
        });
    }
    let mismatches = (0..oracle.len()).filter(|&i| oracle.get(i) != solver.get(i)).collect();
    Ok(OracleReport {
        oracle: oracle.values().to_vec(),
        solver: solver.values().to_vec(),
        mismatches,
    })
}

/// Compare solver values against the graph-search oracle.
pub fn cross_check(mdp: &FiniteMdp, tracker: &Tracker<'_>, solver: &ValueTable, cap: f64) -> Result<OracleReport> {
    compare(&oracle_value(mdp, tracker, cap)?, solver)
}
