//! Synchronous message-passing engine for distributed node programs.
//!
//! Each step, every node consumes the broadcasts its neighbors emitted in
//! the previous step and emits (at most) one broadcast of its own. Nodes
//! never see global state: a node's behavior is a function of its own state
//! and its inbox only.

/// A node's local program: `(state, inbox) -> (state, outbox)`.
pub trait NodeProgram {
    type Msg: Clone;

    /// `inbox` holds `(sender, message)` pairs from the previous step,
    /// ordered by sender id.
    fn step(&mut self, inbox: &[(usize, Self::Msg)]) -> Option<Self::Msg>;

    /// A quiescent node will not change state again.
    fn is_quiescent(&self) -> bool;
}

/// Runs node programs over a fixed undirected topology.
#[derive(Debug)]
pub struct SyncNetwork<P: NodeProgram> {
    nodes: Vec<P>,
    neighbors: Vec<Vec<usize>>,
    pending: Vec<Option<P::Msg>>,
    steps: usize,
    messages: usize,
}

impl<P: NodeProgram> SyncNetwork<P> {
    /// `neighbors[i]` must list the neighbors of node `i`; the relation must be symmetric.
    pub fn new(nodes: Vec<P>, neighbors: Vec<Vec<usize>>) -> Self {
        assert_eq!(nodes.len(), neighbors.len(), "one neighbor list per node");
        for (i, list) in neighbors.iter().enumerate() {
            for &j in list {
                assert!(neighbors[j].contains(&i), "topology must be symmetric ({i}, {j})");
            }
        }
        let n = nodes.len();
        Self {
            nodes,
            neighbors,
            pending: vec![None; n],
            steps: 0,
            messages: 0,
        }
    }

    /// Executes one synchronous step across all nodes.
    pub fn step(&mut self) {
        let mut outbox = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter_mut().enumerate() {
            let mut senders: Vec<usize> = self.neighbors[i].clone();
            senders.sort_unstable();
            let inbox: Vec<(usize, P::Msg)> = senders
                .into_iter()
                .filter_map(|j| self.pending[j].clone().map(|m| (j, m)))
                .collect();
            outbox.push(node.step(&inbox));
        }
        self.messages += outbox
            .iter()
            .enumerate()
            .filter(|(_, m)| m.is_some())
            .map(|(i, _)| self.neighbors[i].len())
            .sum::<usize>();
        self.pending = outbox;
        self.steps += 1;
    }

    /// Steps until every node is quiescent or `max_steps` is reached.
    /// Returns true if the network went quiescent.
    pub fn run(&mut self, max_steps: usize) -> bool {
        while self.steps < max_steps {
            if self.nodes.iter().all(P::is_quiescent) {
                return true;
            }
            self.step();
        }
        self.nodes.iter().all(P::is_quiescent)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Point-to-point deliveries so far (one per neighbor per broadcast).
    pub fn messages(&self) -> usize {
        self.messages
    }

    pub fn nodes(&self) -> &[P] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<P> {
        self.nodes
    }
}
