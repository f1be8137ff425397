//! Precondition tree: a trie over the sorted precondition lists of grounded
//! happenings. A falsified node prunes every happening below it.

use std::collections::HashMap;

use crate::expr::{EvalEnv, EvalStats};
use crate::ground::{CondId, GroundedHappening, GroundedProblem};
use crate::pddl::HappeningKind;
use crate::state::State;

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreconditionNode {
    /// `None` only at the root, which always holds.
    pub cond: Option<CondId>,
    /// Happenings whose full precondition list ends at this node.
    pub happenings: Vec<u32>,
    pub children: Vec<NodeId>,
}

#[derive(Debug, Clone)]
pub struct PreconditionTree {
    nodes: Vec<PreconditionNode>,
}

impl PreconditionTree {
    pub const ROOT: NodeId = 0;

    /// Inserts each happening's (already sorted) precondition list as a path,
    /// sharing existing children whose condition key matches.
    pub fn build(happenings: &[GroundedHappening], gp: &GroundedProblem) -> Self {
        let mut nodes = vec![PreconditionNode {
            cond: None,
            happenings: Vec::new(),
            children: Vec::new(),
        }];
        let mut child_of: HashMap<(NodeId, &str), NodeId> = HashMap::new();
        for h in happenings {
            let mut at = Self::ROOT;
            for &c in &h.preconditions {
                let key = gp.conditions[c as usize].key.as_str();
                at = match child_of.get(&(at, key)) {
                    Some(&n) => n,
                    None => {
                        let n = nodes.len() as NodeId;
                        nodes.push(PreconditionNode {
                            cond: Some(c),
                            happenings: Vec::new(),
                            children: Vec::new(),
                        });
                        nodes[at as usize].children.push(n);
                        child_of.insert((at, key), n);
                        n
                    }
                };
            }
            nodes[at as usize].happenings.push(h.id);
        }
        PreconditionTree { nodes }
    }

    pub fn nodes(&self) -> &[PreconditionNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &PreconditionNode {
        &self.nodes[id as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1 && self.nodes[0].happenings.is_empty()
    }

    /// Ids of happenings applicable in `state`, ascending. Children of a node are
    /// visited only when its condition holds.
    pub fn applicable(&self, gp: &GroundedProblem, state: &State, stats: &mut EvalStats, out: &mut Vec<u32>) {
        out.clear();
        let env = EvalEnv::new(state, gp.dt, &gp.registry);
        let mut open: Vec<NodeId> = vec![Self::ROOT];
        while let Some(id) = open.pop() {
            let node = &self.nodes[id as usize];
            if let Some(c) = node.cond {
                if !gp.condition(c).holds(&env, stats) {
                    continue;
                }
            }
            out.extend_from_slice(&node.happenings);
            open.extend_from_slice(&node.children);
        }
        out.sort_unstable();
    }
}

/// Reference applicability check: every happening's conditions in order,
/// stopping at the first falsified one.
pub fn applicable_linear(
    happenings: &[GroundedHappening],
    gp: &GroundedProblem,
    state: &State,
    stats: &mut EvalStats,
    out: &mut Vec<u32>,
) {
    out.clear();
    let env = EvalEnv::new(state, gp.dt, &gp.registry);
    for h in happenings {
        if h.preconditions.iter().all(|&c| gp.condition(c).holds(&env, stats)) {
            out.push(h.id);
        }
    }
}

/// How applicability is computed during search: linear scan or one tree per kind.
#[derive(Debug, Clone)]
pub enum Applicability {
    Linear,
    Tree {
        actions: PreconditionTree,
        events: PreconditionTree,
        processes: PreconditionTree,
    },
}

impl Applicability {
    pub fn linear() -> Self {
        Applicability::Linear
    }

    pub fn trees(gp: &GroundedProblem) -> Self {
        Applicability::Tree {
            actions: PreconditionTree::build(&gp.actions, gp),
            events: PreconditionTree::build(&gp.events, gp),
            processes: PreconditionTree::build(&gp.processes, gp),
        }
    }

    pub fn is_tree(&self) -> bool {
        matches!(self, Applicability::Tree { .. })
    }

    pub fn applicable(
        &self,
        kind: HappeningKind,
        gp: &GroundedProblem,
        state: &State,
        stats: &mut EvalStats,
        out: &mut Vec<u32>,
    ) {
        match self {
            Applicability::Linear => applicable_linear(gp.happenings(kind), gp, state, stats, out),
            Applicability::Tree {
                actions,
                events,
                processes,
            } => {
                let tree = match kind {
                    HappeningKind::Action => actions,
                    HappeningKind::Event => events,
                    HappeningKind::Process => processes,
                };
                tree.applicable(gp, state, stats, out)
            }
        }
    }
}
