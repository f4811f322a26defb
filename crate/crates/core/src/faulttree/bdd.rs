//! Reduced ordered binary decision diagrams, just enough for fault trees:
//! variables, `ite`, and exact top-event probability by Shannon decomposition.

use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub const FALSE: NodeId = NodeId(0);
    pub const TRUE: NodeId = NodeId(1);

    pub fn is_terminal(self) -> bool {
        self.0 < 2
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    var: u32,
    lo: NodeId,
    hi: NodeId,
}

const TERMINAL_VAR: u32 = u32::MAX;

/// Node arena. Children are always created before their parents, so node
/// index order is a topological order.
#[derive(Debug, Clone)]
pub struct Bdd {
    nodes: Vec<Node>,
    unique: HashMap<(u32, NodeId, NodeId), NodeId>,
    ite_cache: HashMap<(NodeId, NodeId, NodeId), NodeId>,
}

impl Default for Bdd {
    fn default() -> Self {
        Self::new()
    }
}

impl Bdd {
    pub fn new() -> Self {
        let terminal = Node {
            var: TERMINAL_VAR,
            lo: NodeId::FALSE,
            hi: NodeId::FALSE,
        };
        Bdd {
            nodes: vec![terminal, terminal],
            unique: HashMap::new(),
            ite_cache: HashMap::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn mk(&mut self, var: u32, lo: NodeId, hi: NodeId) -> NodeId {
        if lo == hi {
            return lo;
        }
        if let Some(&id) = self.unique.get(&(var, lo, hi)) {
            return id;
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node { var, lo, hi });
        self.unique.insert((var, lo, hi), id);
        id
    }

    pub fn var(&mut self, var: u32) -> NodeId {
        self.mk(var, NodeId::FALSE, NodeId::TRUE)
    }

    fn top_var(&self, f: NodeId) -> u32 {
        self.nodes[f.0 as usize].var
    }

    fn cofactors(&self, f: NodeId, var: u32) -> (NodeId, NodeId) {
        let node = self.nodes[f.0 as usize];
        if node.var == var {
            (node.lo, node.hi)
        } else {
            (f, f)
        }
    }

    /// `if f then g else h`.
    pub fn ite(&mut self, f: NodeId, g: NodeId, h: NodeId) -> NodeId {
        if f == NodeId::TRUE {
            return g;
        }
        if f == NodeId::FALSE {
            return h;
        }
        if g == h {
            return g;
        }
        if g == NodeId::TRUE && h == NodeId::FALSE {
            return f;
        }
        if let Some(&r) = self.ite_cache.get(&(f, g, h)) {
            return r;
        }
        let var = self.top_var(f).min(self.top_var(g)).min(self.top_var(h));
        let (f0, f1) = self.cofactors(f, var);
        let (g0, g1) = self.cofactors(g, var);
        let (h0, h1) = self.cofactors(h, var);
        let lo = self.ite(f0, g0, h0);
        let hi = self.ite(f1, g1, h1);
        let r = self.mk(var, lo, hi);
        self.ite_cache.insert((f, g, h), r);
        r
    }

    pub fn and(&mut self, f: NodeId, g: NodeId) -> NodeId {
        self.ite(f, g, NodeId::FALSE)
    }

    pub fn or(&mut self, f: NodeId, g: NodeId) -> NodeId {
        self.ite(f, NodeId::TRUE, g)
    }

    pub fn not(&mut self, f: NodeId) -> NodeId {
        self.ite(f, NodeId::FALSE, NodeId::TRUE)
    }

    /// At least `k` of `children` true.
    pub fn at_least(&mut self, k: usize, children: &[NodeId]) -> NodeId {
        if k == 0 {
            return NodeId::TRUE;
        }
        // at_least[j] = "j or more of the children seen so far"
        let mut at_least = vec![NodeId::FALSE; k + 1];
        at_least[0] = NodeId::TRUE;
        for &c in children {
            for j in (1..=k).rev() {
                at_least[j] = self.ite(c, at_least[j - 1], at_least[j]);
            }
        }
        at_least[k]
    }

    /// Evaluates the function under a variable assignment.
    pub fn eval(&self, root: NodeId, assignment: &[bool]) -> bool {
        let mut f = root;
        while !f.is_terminal() {
            let node = self.nodes[f.0 as usize];
            f = if assignment[node.var as usize] {
                node.hi
            } else {
                node.lo
            };
        }
        f == NodeId::TRUE
    }

    /// Probability that `root` is true when variable `v` is independently
    /// true with probability `probs[v]`.
    pub fn probability(&self, root: NodeId, probs: &[f64]) -> f64 {
        let upto = root.0 as usize + 1;
        let mut p = vec![0.0; upto];
        if upto > 1 {
            p[1] = 1.0;
        }
        for i in 2..upto {
            let node = self.nodes[i];
            let q = probs[node.var as usize];
            p[i] = q * p[node.hi.0 as usize] + (1.0 - q) * p[node.lo.0 as usize];
        }
        p[root.0 as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_shares_nodes() {
        let mut b = Bdd::new();
        let x = b.var(0);
        let y = b.var(1);
        let xy = b.and(x, y);
        let yx = b.and(y, x);
        assert_eq!(xy, yx);
        let nx = b.not(x);
        let taut = b.or(x, nx);
        assert_eq!(taut, NodeId::TRUE);
    }

    #[test]
    fn shared_variable_probability_is_exact() {
        // (a | c) & (b | c) = c | (a & b)
        let mut bdd = Bdd::new();
        let a = bdd.var(0);
        let b = bdd.var(1);
        let c = bdd.var(2);
        let l = bdd.or(a, c);
        let r = bdd.or(b, c);
        let top = bdd.and(l, r);
        let probs = [0.1, 0.2, 0.3];
        let expected = 0.3 + 0.7 * 0.1 * 0.2;
        assert!((bdd.probability(top, &probs) - expected).abs() < 1e-15);
    }

    #[test]
    fn at_least_matches_enumeration() {
        let mut bdd = Bdd::new();
        let vars: Vec<_> = (0..5).map(|v| bdd.var(v)).collect();
        for k in 0..=6 {
            let f = bdd.at_least(k, &vars);
            for bits in 0u32..32 {
                let assignment: Vec<bool> = (0..5).map(|i| bits >> i & 1 == 1).collect();
                assert_eq!(bdd.eval(f, &assignment), bits.count_ones() as usize >= k);
            }
        }
    }
}
