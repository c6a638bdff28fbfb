//! Karp–Miller coverability graph for nets without broadcasts.

use std::collections::{HashMap, VecDeque};

use crate::count::Count;
use crate::net::{ExtendedNet, GenConfig};

pub const DEFAULT_NODE_BUDGET: usize = 200_000;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum KmError {
    #[error("Karp-Miller does not handle broadcast transitions")]
    Inapplicable,
    #[error("Karp-Miller node budget of {0} exceeded")]
    BudgetExceeded(usize),
}

/// Nodes carry distinct labels; `parent` is the tree edge used for acceleration.
#[derive(Clone, Debug)]
pub struct KmGraph {
    pub nodes: Vec<GenConfig>,
    pub parent: Vec<Option<usize>>,
    /// `(from, ordinary transition, to)`.
    pub edges: Vec<(usize, usize, usize)>,
    pub root: usize,
}

impl KmGraph {
    pub fn contains_node(&self, g: &GenConfig) -> bool {
        self.nodes.contains(g)
    }

    /// Nodes from `node` up to the root, `node` first.
    pub fn path_to_root(&self, node: usize) -> Vec<usize> {
        let mut path = vec![node];
        let mut cur = node;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path
    }
}

/// Replace by ω every entry that strictly grew over a smaller ancestor, until
/// no ancestor triggers further growth.
fn accelerate(nodes: &[GenConfig], ancestors: &[usize], m: &mut GenConfig) {
    loop {
        let mut changed = false;
        for &a in ancestors {
            let anc = &nodes[a];
            if anc != m && anc.leq(m) {
                for (p, c) in m.0.iter_mut().enumerate() {
                    if anc.0[p] < *c && !c.is_omega() {
                        *c = Count::Omega;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return;
        }
    }
}

pub fn km_build(net: &ExtendedNet, budget: usize) -> Result<KmGraph, KmError> {
    if !net.broadcasts.is_empty() {
        return Err(KmError::Inapplicable);
    }
    let mut g = KmGraph {
        nodes: vec![net.init.clone()],
        parent: vec![None],
        edges: Vec::new(),
        root: 0,
    };
    let mut index: HashMap<GenConfig, usize> = HashMap::from([(net.init.clone(), 0)]);
    let mut queue = VecDeque::from([0usize]);
    while let Some(node) = queue.pop_front() {
        let ancestors = g.path_to_root(node);
        for t in 0..net.ordinary.len() {
            let Ok(mut child) = net.fire_ordinary(&g.nodes[node], t) else {
                continue;
            };
            accelerate(&g.nodes, &ancestors, &mut child);
            let target = match index.get(&child) {
                Some(&existing) => existing,
                None => {
                    if g.nodes.len() >= budget {
                        return Err(KmError::BudgetExceeded(budget));
                    }
                    let id = g.nodes.len();
                    g.nodes.push(child.clone());
                    g.parent.push(Some(node));
                    index.insert(child, id);
                    queue.push_back(id);
                    id
                }
            };
            g.edges.push((node, t, target));
        }
    }
    Ok(g)
}

pub fn km_coverable(g: &KmGraph, target: &[u32]) -> bool {
    g.nodes.iter().any(|n| n.covers(target))
}
