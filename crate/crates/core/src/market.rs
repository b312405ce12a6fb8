//! Deadline-market data model shared by all matching algorithms.
//!
//! A market instance is a set of nodes, each carrying a feature vector, an
//! arrival step and an absolute deadline step. Sellers wait in the market;
//! buyers match on arrival. A seller is matchable from its arrival step up to
//! and including its deadline step (closed interval), and the single predicate
//! [`feasible`] encodes that rule for every algorithm and for the offline
//! oracle, so all totals stay comparable.
//!
//! Simultaneous arrivals are ordered sellers first, then ascending id, so a
//! seller entering at step `t` is already available to a buyer entering at
//! the same step.

use crate::error::{Error, Result};

/// The side of the market a node is on. `Undetermined` nodes resolve their
/// side at deadline time via the postponed protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Seller,
    Buyer,
    Undetermined,
}

impl Role {
    /// Tie-break rank for same-step arrivals: sellers first.
    fn stream_rank(self) -> u8 {
        match self {
            Role::Seller => 0,
            Role::Buyer => 1,
            Role::Undetermined => 2,
        }
    }
}

/// One market participant.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: usize,
    pub vector: Vec<f64>,
    pub arrival: u64,
    /// Absolute step after which the node can no longer be matched.
    pub deadline: u64,
    pub role: Role,
}

impl Node {
    pub fn new(id: usize, vector: Vec<f64>, arrival: u64, deadline: u64, role: Role) -> Result<Self> {
        if deadline < arrival {
            return Err(Error::BadParameter(format!(
                "node {id}: deadline {deadline} precedes arrival {arrival}"
            )));
        }
        if let Some(index) = vector.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
        Ok(Node {
            id,
            vector,
            arrival,
            deadline,
            role,
        })
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

/// A full market instance: every node plus the arrival-ordered event stream.
///
/// Either all nodes carry a fixed `Seller`/`Buyer` role (bipartite mode) or
/// all are `Undetermined` (postponed mode); the two cannot be mixed.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    d: usize,
    nodes: Vec<Node>,
    seller_idx: Vec<usize>,
    buyer_idx: Vec<usize>,
    stream_idx: Vec<usize>,
}

impl Instance {
    pub fn new(d: usize, mut nodes: Vec<Node>) -> Result<Self> {
        for node in &nodes {
            if node.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: node.dim(),
                });
            }
        }
        // canonical storage order = stream order, so instances with the same
        // content compare equal however they were assembled
        nodes.sort_by_key(|n| (n.arrival, n.role.stream_rank(), n.id));
        let undetermined = nodes.iter().filter(|n| n.role == Role::Undetermined).count();
        if undetermined != 0 && undetermined != nodes.len() {
            return Err(Error::BadParameter(
                "instances cannot mix undetermined and fixed-role nodes".into(),
            ));
        }

        let mut seller_idx: Vec<usize> = Vec::new();
        let mut buyer_idx: Vec<usize> = Vec::new();
        for (i, node) in nodes.iter().enumerate() {
            match node.role {
                Role::Seller => seller_idx.push(i),
                Role::Buyer => buyer_idx.push(i),
                Role::Undetermined => {}
            }
        }
        seller_idx.sort_by_key(|&i| nodes[i].id);
        buyer_idx.sort_by_key(|&i| nodes[i].id);
        check_unique_ids(&nodes, &seller_idx, "seller")?;
        check_unique_ids(&nodes, &buyer_idx, "buyer")?;
        if undetermined > 0 {
            let mut ids: Vec<usize> = nodes.iter().map(|n| n.id).collect();
            ids.sort_unstable();
            if ids.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::BadParameter("duplicate undetermined node id".into()));
            }
        }

        let stream_idx: Vec<usize> = (0..nodes.len()).collect();

        Ok(Instance {
            d,
            nodes,
            seller_idx,
            buyer_idx,
            stream_idx,
        })
    }

    /// Convenience constructor from already-separated sides.
    pub fn bipartite(d: usize, sellers: Vec<Node>, buyers: Vec<Node>) -> Result<Self> {
        for s in &sellers {
            if s.role != Role::Seller {
                return Err(Error::BadParameter(format!("node {} is not a seller", s.id)));
            }
        }
        for b in &buyers {
            if b.role != Role::Buyer {
                return Err(Error::BadParameter(format!("node {} is not a buyer", b.id)));
            }
        }
        let mut nodes = sellers;
        nodes.extend(buyers);
        Instance::new(d, nodes)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn sellers(&self) -> impl Iterator<Item = &Node> + '_ {
        self.seller_idx.iter().map(move |&i| &self.nodes[i])
    }

    pub fn buyers(&self) -> impl Iterator<Item = &Node> + '_ {
        self.buyer_idx.iter().map(move |&i| &self.nodes[i])
    }

    /// All nodes in arrival order, sellers before buyers at equal steps.
    pub fn stream(&self) -> impl Iterator<Item = &Node> + '_ {
        self.stream_idx.iter().map(move |&i| &self.nodes[i])
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_sellers(&self) -> usize {
        self.seller_idx.len()
    }

    pub fn n_buyers(&self) -> usize {
        self.buyer_idx.len()
    }

    pub fn is_postponed(&self) -> bool {
        !self.nodes.is_empty() && self.nodes.iter().all(|n| n.role == Role::Undetermined)
    }
}

fn check_unique_ids(nodes: &[Node], idx: &[usize], side: &str) -> Result<()> {
    for pair in idx.windows(2) {
        if nodes[pair[0]].id == nodes[pair[1]].id {
            return Err(Error::BadParameter(format!(
                "duplicate {side} id {}",
                nodes[pair[0]].id
            )));
        }
    }
    Ok(())
}

/// One matched edge in a final outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    pub seller: usize,
    pub buyer: usize,
    pub weight: f64,
}

/// Result of one algorithm run: the realized matching, its total value and
/// the wall time spent on each stream event.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchOutcome {
    pub total_weight: f64,
    pub pairs: Vec<MatchedPair>,
    pub per_step_nanos: Vec<u64>,
}

/// True edge weight: the Euclidean distance between two feature vectors.
pub fn edge_weight(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    for (index, x) in a.iter().chain(b.iter()).enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFiniteInput { index: index % a.len() });
        }
    }
    Ok(l2_distance(a, b))
}

/// Unchecked Euclidean distance over pre-validated coordinates. Every weight
/// computation in the crate funnels through this one loop so exact and
/// sketched paths produce bit-identical values on identical inputs.
pub(crate) fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        let dx = a[i] - b[i];
        acc += dx * dx;
    }
    acc.sqrt()
}

/// The single matchability predicate: a buyer can match a seller iff it
/// arrives within the seller's live window, deadline step included.
pub fn feasible(seller: &Node, buyer: &Node) -> bool {
    seller.arrival <= buyer.arrival && buyer.arrival <= seller.deadline
}
