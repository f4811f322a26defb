use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::expr::{Assignment, Expr, Kind, Value, VarId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlaceId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TransitionId(pub usize);

/// Firing delay of a transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DelayLaw {
    /// Exponentially distributed delay, sampled when the transition becomes enabled.
    Exp { rate: f64 },
    /// Deterministic delay; zero means the transition fires as soon as enabled.
    Dirac { delay: f64 },
    /// Fires at calendar times `k * period` (k >= 1) when enabled at that instant.
    Ipa { period: f64 },
}

impl DelayLaw {
    fn validate(&self) -> std::result::Result<(), String> {
        match *self {
            DelayLaw::Exp { rate } if rate.is_finite() && rate >= 0.0 => Ok(()),
            DelayLaw::Dirac { delay } if delay.is_finite() && delay >= 0.0 => Ok(()),
            DelayLaw::Ipa { period } if period.is_finite() && period > 0.0 => Ok(()),
            law => Err(format!("invalid delay law {law:?}")),
        }
    }

    pub(crate) fn is_immediate(&self) -> bool {
        matches!(*self, DelayLaw::Dirac { delay } if delay == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Place {
    pub label: String,
    pub initial: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub initial: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub label: String,
    pub delay: DelayLaw,
    pub guard: Option<Expr>,
    pub assignments: Vec<Assignment>,
    pub inputs: Vec<(PlaceId, u32)>,
    pub outputs: Vec<(PlaceId, u32)>,
}

impl Transition {
    pub fn new(label: impl Into<String>, delay: DelayLaw) -> Self {
        Transition {
            label: label.into(),
            delay,
            guard: None,
            assignments: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(mut self, place: PlaceId) -> Self {
        self.inputs.push((place, 1));
        self
    }

    pub fn output(mut self, place: PlaceId) -> Self {
        self.outputs.push((place, 1));
        self
    }

    pub fn weighted_input(mut self, place: PlaceId, weight: u32) -> Self {
        self.inputs.push((place, weight));
        self
    }

    pub fn weighted_output(mut self, place: PlaceId, weight: u32) -> Self {
        self.outputs.push((place, weight));
        self
    }

    pub fn guard(mut self, guard: Expr) -> Self {
        self.guard = Some(guard);
        self
    }

    pub fn assign(mut self, assignment: Assignment) -> Self {
        self.assignments.push(assignment);
        self
    }
}

/// Stochastic Petri net with predicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PetriNet {
    places: Vec<Place>,
    variables: Vec<Variable>,
    transitions: Vec<Transition>,
    stat: Expr,
    /// Place groups whose total token count never changes.
    conserved: Vec<Vec<PlaceId>>,
}

#[derive(Debug, Clone, Default)]
pub struct PetriNetBuilder {
    places: Vec<Place>,
    variables: Vec<Variable>,
    transitions: Vec<Transition>,
    stat: Option<Expr>,
    conserved: Vec<Vec<PlaceId>>,
}

impl PetriNetBuilder {
    pub fn place(&mut self, label: impl Into<String>, initial: u32) -> PlaceId {
        self.places.push(Place {
            label: label.into(),
            initial,
        });
        PlaceId(self.places.len() - 1)
    }

    pub fn variable(&mut self, name: impl Into<String>, initial: Value) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            initial,
        });
        VarId(self.variables.len() - 1)
    }

    pub fn transition(&mut self, transition: Transition) -> TransitionId {
        self.transitions.push(transition);
        TransitionId(self.transitions.len() - 1)
    }

    /// The indicator whose time-average is estimated.
    pub fn stat(&mut self, predicate: Expr) -> &mut Self {
        self.stat = Some(predicate);
        self
    }

    /// Declares a token-conserving place group, checked in debug simulation.
    pub fn conserve(&mut self, places: Vec<PlaceId>) -> &mut Self {
        self.conserved.push(places);
        self
    }

    pub fn build(self) -> Result<PetriNet> {
        let bad = |msg: String| Err(Error::InvalidNet(msg));
        let kinds: Vec<Kind> = self.variables.iter().map(|v| v.initial.kind()).collect();
        let n_places = self.places.len();
        for t in &self.transitions {
            if let Err(e) = t.delay.validate() {
                return bad(format!("transition {}: {e}", t.label));
            }
            for &(PlaceId(p), w) in t.inputs.iter().chain(&t.outputs) {
                if p >= n_places {
                    return bad(format!("transition {} uses unknown place #{p}", t.label));
                }
                if w < 1 {
                    return bad(format!("transition {} has an arc of weight 0", t.label));
                }
            }
            if let Some(g) = &t.guard {
                match g.check(&kinds) {
                    Ok(Kind::Bool) => {}
                    Ok(Kind::Int) => return bad(format!("guard of {} is not boolean", t.label)),
                    Err(e) => return bad(format!("guard of {}: {e}", t.label)),
                }
            }
            for a in &t.assignments {
                let Some(&target) = kinds.get(a.var.0) else {
                    return bad(format!("{} assigns undeclared variable #{}", t.label, a.var.0));
                };
                match a.expr.check(&kinds) {
                    Ok(k) if k == target => {}
                    Ok(k) => {
                        return bad(format!(
                            "{} assigns {k:?} to {:?} variable {}",
                            t.label, target, self.variables[a.var.0].name
                        ))
                    }
                    Err(e) => return bad(format!("assignment in {}: {e}", t.label)),
                }
            }
        }
        let Some(stat) = self.stat else {
            return bad("no stat predicate".into());
        };
        match stat.check(&kinds) {
            Ok(Kind::Bool) => {}
            Ok(Kind::Int) => return bad("stat predicate is not boolean".into()),
            Err(e) => return bad(format!("stat predicate: {e}")),
        }
        for group in &self.conserved {
            if group.iter().any(|p| p.0 >= n_places) {
                return bad("conserved group references an unknown place".into());
            }
        }
        Ok(PetriNet {
            places: self.places,
            variables: self.variables,
            transitions: self.transitions,
            stat,
            conserved: self.conserved,
        })
    }
}

impl PetriNet {
    pub fn builder() -> PetriNetBuilder {
        PetriNetBuilder::default()
    }

    pub fn places(&self) -> &[Place] {
        &self.places
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn stat(&self) -> &Expr {
        &self.stat
    }

    pub fn conserved(&self) -> &[Vec<PlaceId>] {
        &self.conserved
    }

    pub fn place_id(&self, label: &str) -> Option<PlaceId> {
        self.places.iter().position(|p| p.label == label).map(PlaceId)
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn variable_names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    /// One line per place, variable and transition, in id order.
    pub fn render(&self) -> String {
        let names = self.variable_names();
        let mut out = String::new();
        for (i, p) in self.places.iter().enumerate() {
            let _ = writeln!(out, "place {} {} tokens={}", i + 1, p.label, p.initial);
        }
        for v in &self.variables {
            let _ = writeln!(out, "var {} = {}", v.name, v.initial);
        }
        for (i, t) in self.transitions.iter().enumerate() {
            let arcs = |arcs: &[(PlaceId, u32)]| {
                arcs.iter()
                    .map(|(p, w)| {
                        let label = &self.places[p.0].label;
                        if *w == 1 {
                            label.clone()
                        } else {
                            format!("{w}*{label}")
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(",")
            };
            let delay = match t.delay {
                DelayLaw::Exp { rate } => format!("exp({rate:e})"),
                DelayLaw::Dirac { delay } => format!("drc({delay})"),
                DelayLaw::Ipa { period } => format!("ipa({period})"),
            };
            let _ = write!(
                out,
                "transition {i} {} {delay} [{}] -> [{}]",
                t.label,
                arcs(&t.inputs),
                arcs(&t.outputs)
            );
            if let Some(g) = &t.guard {
                let _ = write!(out, " ?? {}", g.display(&names));
            }
            for a in &t.assignments {
                let _ = write!(out, " !! {} := {}", names[a.var.0], a.expr.display(&names));
            }
            out.push('\n');
        }
        let _ = writeln!(out, "stat {}", self.stat.display(&names));
        out
    }
}
