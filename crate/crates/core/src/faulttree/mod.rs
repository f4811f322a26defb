//! Time-dependent fault trees evaluated exactly over a BDD.
//!
//! The top-event probability is first computed as a function of time and
//! only then averaged over the assessment period. Averaging basic-event
//! probabilities first and combining them would give a different (wrong)
//! number.

pub mod bdd;
pub mod law;

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derive_rates, Method, PfdResult, SafetyParams};

use bdd::{Bdd, NodeId};
pub use law::{event_unavailability, BasicEventLaw, PreparedLaw, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GateId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeRef {
    Event(EventId),
    Gate(GateId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasicEvent {
    pub label: String,
    pub law: BasicEventLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    Or,
    /// At least `k` children true.
    Vote { k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub label: String,
    pub kind: GateKind,
    pub children: Vec<NodeRef>,
}

/// Gates and basic events; an event referenced by several gates is one
/// physical event (a repeated event), not a copy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultTree {
    events: Vec<BasicEvent>,
    gates: Vec<Gate>,
    top: GateId,
}

impl FaultTree {
    pub fn new(events: Vec<BasicEvent>, gates: Vec<Gate>, top: GateId) -> Result<Self> {
        let tree = FaultTree { events, gates, top };
        tree.check()?;
        Ok(tree)
    }

    fn check(&self) -> Result<()> {
        let err = |msg: String| Err(Error::FaultTree(msg));
        if self.top.0 >= self.gates.len() {
            return err(format!("top gate {} does not exist", self.top.0));
        }
        let mut referenced = vec![false; self.events.len()];
        for (g, gate) in self.gates.iter().enumerate() {
            if gate.children.is_empty() {
                return err(format!("gate {} has no children", gate.label));
            }
            if let GateKind::Vote { k } = gate.kind {
                if k < 1 || k > gate.children.len() {
                    return err(format!(
                        "vote gate {} needs 1 <= k <= {}, got {k}",
                        gate.label,
                        gate.children.len()
                    ));
                }
            }
            for child in &gate.children {
                match *child {
                    NodeRef::Event(EventId(e)) if e < self.events.len() => referenced[e] = true,
                    NodeRef::Gate(GateId(c)) if c < self.gates.len() => {}
                    _ => return err(format!("gate {g} references unknown child {child:?}")),
                }
            }
        }
        if let Some(e) = referenced.iter().position(|r| !r) {
            return err(format!("basic event {} is never referenced", self.events[e].label));
        }
        for event in &self.events {
            event.law.validate()?;
        }
        // cycle detection by depth-first colouring
        let mut colour = vec![0u8; self.gates.len()];
        fn visit(tree: &FaultTree, g: usize, colour: &mut [u8]) -> bool {
            match colour[g] {
                1 => return false,
                2 => return true,
                _ => {}
            }
            colour[g] = 1;
            for child in &tree.gates[g].children {
                if let NodeRef::Gate(GateId(c)) = *child {
                    if !visit(tree, c, colour) {
                        return false;
                    }
                }
            }
            colour[g] = 2;
            true
        }
        for g in 0..self.gates.len() {
            if !visit(self, g, &mut colour) {
                return err(format!("gate {} is part of a cycle", self.gates[g].label));
            }
        }
        Ok(())
    }

    pub fn events(&self) -> &[BasicEvent] {
        &self.events
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn top(&self) -> GateId {
        self.top
    }

    /// Boolean structure function evaluated directly on the gates.
    pub fn structure(&self, event_states: &[bool]) -> bool {
        self.eval_node(NodeRef::Gate(self.top), event_states)
    }

    fn eval_node(&self, node: NodeRef, states: &[bool]) -> bool {
        match node {
            NodeRef::Event(EventId(e)) => states[e],
            NodeRef::Gate(GateId(g)) => {
                let gate = &self.gates[g];
                let true_children = gate
                    .children
                    .iter()
                    .filter(|&&c| self.eval_node(c, states))
                    .count();
                match gate.kind {
                    GateKind::Or => true_children >= 1,
                    GateKind::Vote { k } => true_children >= k,
                }
            }
        }
    }

    pub fn compile(&self) -> CompiledTree {
        let mut bdd = Bdd::new();
        let vars: Vec<NodeId> = (0..self.events.len()).map(|e| bdd.var(e as u32)).collect();
        let mut memo: HashMap<usize, NodeId> = HashMap::new();
        let root = self.compile_gate(self.top.0, &mut bdd, &vars, &mut memo);
        CompiledTree { bdd, root }
    }

    fn compile_gate(
        &self,
        g: usize,
        bdd: &mut Bdd,
        vars: &[NodeId],
        memo: &mut HashMap<usize, NodeId>,
    ) -> NodeId {
        if let Some(&id) = memo.get(&g) {
            return id;
        }
        let children: Vec<NodeId> = self.gates[g]
            .children
            .iter()
            .map(|c| match *c {
                NodeRef::Event(EventId(e)) => vars[e],
                NodeRef::Gate(GateId(c)) => self.compile_gate(c, bdd, vars, memo),
            })
            .collect();
        let id = match self.gates[g].kind {
            GateKind::Or => bdd.at_least(1, &children),
            GateKind::Vote { k } => bdd.at_least(k, &children),
        };
        memo.insert(g, id);
        id
    }

    /// Deterministic indented rendering, one node per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut seen = vec![false; self.events.len()];
        self.render_node(NodeRef::Gate(self.top), 0, &mut seen, &mut out);
        out
    }

    fn render_node(&self, node: NodeRef, depth: usize, seen: &mut [bool], out: &mut String) {
        let indent = "  ".repeat(depth);
        match node {
            NodeRef::Gate(GateId(g)) => {
                let gate = &self.gates[g];
                let kind = match gate.kind {
                    GateKind::Or => "OR".to_string(),
                    GateKind::Vote { k } => format!("VOTE {k}/{}", gate.children.len()),
                };
                let _ = writeln!(out, "{indent}{} {kind}", gate.label);
                for &c in &gate.children {
                    self.render_node(c, depth + 1, seen, out);
                }
            }
            NodeRef::Event(EventId(e)) => {
                let event = &self.events[e];
                let law = match event.law {
                    BasicEventLaw::Glm { gamma, lambda, mu } => {
                        format!("glm gamma={gamma:e} lambda={lambda:e} mu={mu:e}")
                    }
                    BasicEventLaw::PeriodicTest {
                        lambda,
                        mu,
                        tau,
                        first_test,
                    } => format!(
                        "periodic-test lambda={lambda:e} mu={mu:e} tau={tau} first={first_test}"
                    ),
                    BasicEventLaw::Exponential { lambda } => format!("exponential lambda={lambda:e}"),
                };
                let repeat = if seen[e] { " (repeated)" } else { "" };
                seen[e] = true;
                let _ = writeln!(out, "{indent}#{e} {} [{law}]{repeat}", event.label);
            }
        }
    }
}

/// A fault tree turned into a BDD over its basic events (variable `i` is
/// event `i`).
#[derive(Debug, Clone)]
pub struct CompiledTree {
    bdd: Bdd,
    root: NodeId,
}

impl CompiledTree {
    pub fn probability(&self, event_probs: &[f64]) -> f64 {
        self.bdd.probability(self.root, event_probs)
    }

    pub fn node_count(&self) -> usize {
        self.bdd.node_count()
    }
}

/// Exact top-event probability for independent basic events.
pub fn top_probability(tree: &FaultTree, event_probs: &HashMap<EventId, f64>) -> Result<f64> {
    let mut probs = Vec::with_capacity(tree.events.len());
    for e in 0..tree.events.len() {
        let p = *event_probs
            .get(&EventId(e))
            .ok_or(Error::MissingEventProbability(e))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "probability of event {e} outside [0, 1]: {p}"
            )));
        }
        probs.push(p);
    }
    Ok(tree.compile().probability(&probs))
}

/// Figure-style tree for an MooN subsystem: a vote gate over channel gates,
/// each channel failing on any of its own three modes or any of the three
/// shared common-cause events.
pub fn build_case_tree(params: &SafetyParams) -> Result<FaultTree> {
    params.validate()?;
    let r = derive_rates(params);
    let n = params.n as usize;
    let (mu_dd, mu_dut, t1) = (params.mu_dd, params.mu_dut, params.t1);
    let mut events = Vec::new();
    let mut gates = Vec::new();

    if n == 1 {
        // With one channel, common cause and independent parts hit the same
        // channel; they recombine into the full mode rates.
        events.push(BasicEvent {
            label: "DD_1".into(),
            law: BasicEventLaw::glm(r.lambda_dd, mu_dd),
        });
        events.push(BasicEvent {
            label: "DUT_1".into(),
            law: BasicEventLaw::periodic_test(r.lambda_dut, mu_dut, t1),
        });
        events.push(BasicEvent {
            label: "DUU_1".into(),
            law: BasicEventLaw::Exponential {
                lambda: r.lambda_duu,
            },
        });
        gates.push(Gate {
            label: "TOP".into(),
            kind: GateKind::Vote { k: 1 },
            children: vec![NodeRef::Gate(GateId(1))],
        });
        gates.push(Gate {
            label: "C1".into(),
            kind: GateKind::Or,
            children: (0..3).map(|e| NodeRef::Event(EventId(e))).collect(),
        });
        return FaultTree::new(events, gates, GateId(0));
    }

    for c in 1..=n {
        events.push(BasicEvent {
            label: format!("DD_{c}"),
            law: BasicEventLaw::glm(r.dd.independent, mu_dd),
        });
        events.push(BasicEvent {
            label: format!("DUT_{c}"),
            law: BasicEventLaw::periodic_test(r.dut.independent, mu_dut, t1),
        });
        events.push(BasicEvent {
            label: format!("DUU_{c}"),
            law: BasicEventLaw::Exponential {
                lambda: r.duu.independent,
            },
        });
    }
    // common cause events are repaired by all channels' crews at once
    let nf = n as f64;
    let ccf = 3 * n;
    events.push(BasicEvent {
        label: "CCF_DD".into(),
        law: BasicEventLaw::glm(r.dd.ccf, nf * mu_dd),
    });
    events.push(BasicEvent {
        label: "CCF_DUT".into(),
        law: BasicEventLaw::periodic_test(r.dut.ccf, nf * mu_dut, t1),
    });
    events.push(BasicEvent {
        label: "CCF_DUU".into(),
        law: BasicEventLaw::Exponential { lambda: r.duu.ccf },
    });

    gates.push(Gate {
        label: "TOP".into(),
        kind: GateKind::Vote {
            k: (params.n - params.m + 1) as usize,
        },
        children: (1..=n).map(|c| NodeRef::Gate(GateId(c))).collect(),
    });
    for c in 0..n {
        let mut children: Vec<NodeRef> =
            (3 * c..3 * c + 3).map(|e| NodeRef::Event(EventId(e))).collect();
        children.extend((ccf..ccf + 3).map(|e| NodeRef::Event(EventId(e))));
        gates.push(Gate {
            label: format!("C{}", c + 1),
            kind: GateKind::Or,
            children,
        });
    }
    FaultTree::new(events, gates, GateId(0))
}

/// Top-event probability as a function of time.
pub struct TopUnavailability {
    compiled: CompiledTree,
    laws: Vec<PreparedLaw>,
}

impl TopUnavailability {
    pub fn new(tree: &FaultTree, horizon: f64) -> Self {
        TopUnavailability {
            compiled: tree.compile(),
            laws: tree
                .events()
                .iter()
                .map(|e| PreparedLaw::new(e.law, horizon))
                .collect(),
        }
    }

    pub fn at(&self, t: f64, side: Side) -> f64 {
        let probs: Vec<f64> = self.laws.iter().map(|l| l.unavailability(t, side)).collect();
        self.compiled.probability(&probs)
    }

    pub fn event_probabilities(&self, t: f64, side: Side) -> Vec<f64> {
        self.laws.iter().map(|l| l.unavailability(t, side)).collect()
    }
}

const INITIAL_SUBINTERVALS: usize = 256;
const MAX_SUBINTERVALS: usize = 4096;
const TARGET_CHANGE: f64 = 1e-4;
const REJECT_CHANGE: f64 = 1e-3;

struct IntervalIntegral {
    value: f64,
    subintervals: usize,
    change: f64,
}

/// Composite Simpson on `[a, b]`, halving the step until the relative change
/// drops below the target or the step cap is hit.
fn integrate_interval(f: &TopUnavailability, a: f64, b: f64) -> IntervalIntegral {
    let eval = |i: usize, n: usize| -> f64 {
        if i == 0 {
            f.at(a, Side::Right)
        } else if i == n {
            f.at(b, Side::Left)
        } else {
            f.at(a + (b - a) * i as f64 / n as f64, Side::Right)
        }
    };
    let mut n = INITIAL_SUBINTERVALS;
    let mut values: Vec<f64> = (0..=n).map(|i| eval(i, n)).collect();
    let simpson = |values: &[f64]| -> f64 {
        let n = values.len() - 1;
        let h = (b - a) / n as f64;
        let inner: f64 = values[1..n]
            .iter()
            .enumerate()
            .map(|(i, v)| if i % 2 == 0 { 4.0 * v } else { 2.0 * v })
            .sum();
        h / 3.0 * (values[0] + inner + values[n])
    };
    let mut current = simpson(&values);
    loop {
        let finer_n = n * 2;
        let mut finer = Vec::with_capacity(finer_n + 1);
        for (i, &v) in values.iter().enumerate() {
            finer.push(v);
            if i < n {
                finer.push(eval(2 * i + 1, finer_n));
            }
        }
        let refined = simpson(&finer);
        let change = if refined == current {
            0.0
        } else {
            ((refined - current) / refined.abs().max(current.abs())).abs()
        };
        n = finer_n;
        values = finer;
        current = refined;
        if change < TARGET_CHANGE || n >= MAX_SUBINTERVALS {
            return IntervalIntegral {
                value: current,
                subintervals: n,
                change,
            };
        }
    }
}

pub fn pfd_avg_fault_tree(params: &SafetyParams) -> Result<PfdResult> {
    let tree = build_case_tree(params)?;
    let t0 = params.t0;
    let top = TopUnavailability::new(&tree, t0);

    let mut breaks: Vec<f64> = tree
        .events()
        .iter()
        .flat_map(|e| e.law.test_instants(t0))
        .filter(|&t| t > 0.0 && t < t0)
        .collect();
    breaks.push(0.0);
    breaks.push(t0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * t0);

    let mut integral = 0.0;
    let mut finest = 0;
    let mut worst_change: f64 = 0.0;
    for (k, w) in breaks.windows(2).enumerate() {
        let part = integrate_interval(&top, w[0], w[1]);
        if part.change > REJECT_CHANGE {
            return Err(Error::NonConvergent {
                interval: k,
                change: part.change,
            });
        }
        integral += part.value;
        finest = finest.max(part.subintervals);
        worst_change = worst_change.max(part.change);
    }

    let mut result = PfdResult::new(Method::FaultTree, (integral / t0).clamp(0.0, 1.0));
    result.diagnostics.push(format!(
        "basic events: {}, bdd nodes: {}",
        tree.events().len(),
        top.compiled.node_count()
    ));
    result.diagnostics.push(format!(
        "grid: {} intervals, up to {finest} Simpson subintervals each, worst relative change {worst_change:.2e}",
        breaks.len() - 1
    ));
    if worst_change >= TARGET_CHANGE {
        result.diagnostics.push(format!(
            "quadrature stopped at the step cap with relative change {worst_change:.2e}"
        ));
    }
    Ok(result)
}
