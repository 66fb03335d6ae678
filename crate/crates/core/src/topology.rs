//! Network graphs and the generators used by the experiment scenarios.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

/// Graph `G(D, L)`.
///
/// For every node the topology keeps both the set of nodes that hear its
/// broadcasts (`listeners`) and the set of nodes it hears (`neighbors`, the
/// `N_i` of the synchronicity and phase-difference formulas). The two
/// coincide for undirected graphs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Topology {
    directed: bool,
    listeners: BTreeMap<NodeId, BTreeSet<NodeId>>,
    neighbors: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl Topology {
    pub fn new(directed: bool) -> Self {
        Topology {
            directed,
            ..Default::default()
        }
    }

    pub fn with_nodes(directed: bool, ids: impl IntoIterator<Item = NodeId>) -> Self {
        let mut t = Topology::new(directed);
        for id in ids {
            t.listeners.entry(id).or_default();
            t.neighbors.entry(id).or_default();
        }
        t
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn add_node(&mut self, id: NodeId) -> Result<()> {
        if self.listeners.contains_key(&id) {
            return Err(Error::DuplicateNode(id));
        }
        self.listeners.insert(id, BTreeSet::new());
        self.neighbors.insert(id, BTreeSet::new());
        Ok(())
    }

    /// Adds a link over which `v` hears `u` (and `u` hears `v` when the graph
    /// is undirected). Duplicate links are ignored.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<()> {
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        for id in [u, v] {
            if !self.listeners.contains_key(&id) {
                return Err(Error::UnknownNode(id));
            }
        }
        self.link(u, v);
        if !self.directed {
            self.link(v, u);
        }
        Ok(())
    }

    fn link(&mut self, from: NodeId, to: NodeId) {
        self.listeners.get_mut(&from).unwrap().insert(to);
        self.neighbors.get_mut(&to).unwrap().insert(from);
    }

    /// Removes a node together with every link touching it.
    pub fn remove_node(&mut self, id: NodeId) -> Result<()> {
        let out = self.listeners.remove(&id).ok_or(Error::UnknownNode(id))?;
        let inc = self.neighbors.remove(&id).unwrap_or_default();
        for l in out {
            if let Some(s) = self.neighbors.get_mut(&l) {
                s.remove(&id);
            }
        }
        for n in inc {
            if let Some(s) = self.listeners.get_mut(&n) {
                s.remove(&id);
            }
        }
        Ok(())
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.listeners.contains_key(&id)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.listeners.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.listeners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.listeners.is_empty()
    }

    /// Nodes that hear `id`'s broadcasts, in ascending id order.
    pub fn listeners(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.listeners.get(&id).into_iter().flatten().copied()
    }

    /// `N_i`: the nodes `id` can hear, in ascending id order.
    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.neighbors.get(&id).into_iter().flatten().copied()
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.neighbors.get(&id).map_or(0, BTreeSet::len)
    }

    /// Number of links; an undirected link counts once.
    pub fn edge_count(&self) -> usize {
        let arcs: usize = self.listeners.values().map(BTreeSet::len).sum();
        if self.directed {
            arcs
        } else {
            arcs / 2
        }
    }

    pub fn average_degree(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let total: usize = self.neighbors.values().map(BTreeSet::len).sum();
        total as f64 / self.len() as f64
    }

    /// Degree → number of nodes with that degree.
    pub fn degree_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for s in self.neighbors.values() {
            *h.entry(s.len()).or_insert(0) += 1;
        }
        h
    }

    /// Weak connectivity (link direction ignored).
    pub fn is_connected(&self) -> bool {
        let Some(start) = self.node_ids().next() else {
            return true;
        };
        let mut seen = BTreeSet::new();
        let mut stack = alloc::vec![start];
        seen.insert(start);
        while let Some(u) = stack.pop() {
            for v in self.listeners(u).chain(self.neighbors(u)) {
                if seen.insert(v) {
                    stack.push(v);
                }
            }
        }
        seen.len() == self.len()
    }
}

/// Four-nearest-neighbour lattice, node id `r * cols + c`. With `wraparound`
/// it is a torus (every degree is 4 once both sides are at least 3).
pub fn make_regular_grid(rows: u32, cols: u32, wraparound: bool) -> Result<Topology> {
    if rows < 2 || cols < 2 {
        return Err(Error::param("grid", "rows and cols must both be at least 2"));
    }
    let id = |r: u32, c: u32| NodeId(r * cols + c);
    let mut t = Topology::with_nodes(false, (0..rows * cols).map(NodeId));
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                t.add_edge(id(r, c), id(r, c + 1))?;
            } else if wraparound && cols > 2 {
                t.add_edge(id(r, c), id(r, 0))?;
            }
            if r + 1 < rows {
                t.add_edge(id(r, c), id(r + 1, c))?;
            } else if wraparound && rows > 2 {
                t.add_edge(id(r, c), id(0, c))?;
            }
        }
    }
    Ok(t)
}

pub fn make_complete(n: u32) -> Result<Topology> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let mut t = Topology::with_nodes(false, (0..n).map(NodeId));
    for u in 0..n {
        for v in (u + 1)..n {
            t.add_edge(NodeId(u), NodeId(v))?;
        }
    }
    Ok(t)
}

/// Points drawn uniformly in the unit square; nodes within `radius` of each
/// other are linked.
pub fn make_random_geometric(n: u32, radius: f64, seed: u64) -> Result<Topology> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if radius.is_nan() || radius < 0.0 {
        return Err(Error::param("radius", "must be non-negative"));
    }
    let points = geometric_points(n, seed);
    Ok(link_within(&points, radius))
}

fn geometric_points(n: u32, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect()
}

fn link_within(points: &[(f64, f64)], radius: f64) -> Topology {
    let r2 = radius * radius;
    let mut t = Topology::with_nodes(false, (0..points.len() as u32).map(NodeId));
    for (i, a) in points.iter().enumerate() {
        for (j, b) in points.iter().enumerate().skip(i + 1) {
            let (dx, dy) = (a.0 - b.0, a.1 - b.1);
            if dx * dx + dy * dy <= r2 {
                t.link(NodeId(i as u32), NodeId(j as u32));
                t.link(NodeId(j as u32), NodeId(i as u32));
            }
        }
    }
    t
}

/// Smallest radius (to within 1e-6) whose random geometric graph on the
/// given seed reaches `target` average degree. Bisection on the radius; the
/// point set is fixed by the seed so the degree is monotone in the radius.
pub fn radius_for_average_degree(n: u32, target: f64, seed: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::param("n", "need at least two nodes"));
    }
    if !(target >= 0.0 && target <= (n - 1) as f64) {
        return Err(Error::param("average_degree", format!("must lie in [0, {}]", n - 1)));
    }
    let points = geometric_points(n, seed);
    let (mut lo, mut hi) = (0.0_f64, core::f64::consts::SQRT_2);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if link_within(&points, mid).average_degree() >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Parses an edge list: one `u v` pair per line, `#` starts a comment line,
/// blank lines are skipped. When `declared_nodes` is given the node set is
/// `0..declared_nodes` and any other id is rejected; otherwise the node set
/// is every id mentioned.
pub fn parse_edge_list(text: &str, directed: bool, declared_nodes: Option<u32>) -> Result<Topology> {
    let mut t = match declared_nodes {
        Some(n) => Topology::with_nodes(directed, (0..n).map(NodeId)),
        None => Topology::new(directed),
    };
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let mut fields = s.split_whitespace();
        let mut next_id = |what: &str| -> Result<NodeId> {
            let f = fields.next().ok_or_else(|| Error::Parse {
                line,
                reason: format!("missing {what} node id"),
            })?;
            f.parse::<u32>().map(NodeId).map_err(|_| Error::Parse {
                line,
                reason: format!("`{f}` is not a non-negative integer"),
            })
        };
        let u = next_id("source")?;
        let v = next_id("target")?;
        if let Some(extra) = fields.next() {
            return Err(Error::Parse {
                line,
                reason: format!("unexpected trailing field `{extra}`"),
            });
        }
        if u == v {
            return Err(Error::Parse {
                line,
                reason: format!("self-loop on node {u}"),
            });
        }
        for id in [u, v] {
            if !t.contains(id) {
                if declared_nodes.is_some() {
                    return Err(Error::Parse {
                        line,
                        reason: format!("unknown node id {id}"),
                    });
                }
                t.add_node(id)?;
            }
        }
        t.add_edge(u, v)?;
    }
    if t.is_empty() {
        return Err(Error::Parse {
            line: 0,
            reason: "no nodes".into(),
        });
    }
    Ok(t)
}
