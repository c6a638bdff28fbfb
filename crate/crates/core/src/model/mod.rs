//! Template automata: the finite program every anonymous process runs.

mod parse;
mod validate;

use std::fmt;

use crate::count::Count;

pub use parse::{parse_template, ParseError};
pub use validate::{lock_status, validate, LockStatus, ValidationReport, Violation};

pub type StateId = usize;
pub type ValueId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemanticsKind {
    Broadcast,
    RendezVous,
    Store,
    LockStore,
}

impl SemanticsKind {
    pub fn keyword(self) -> &'static str {
        match self {
            SemanticsKind::Broadcast => "broadcast",
            SemanticsKind::RendezVous => "rendezvous",
            SemanticsKind::Store => "store",
            SemanticsKind::LockStore => "lockstore",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "broadcast" => SemanticsKind::Broadcast,
            "rendezvous" => SemanticsKind::RendezVous,
            "store" => SemanticsKind::Store,
            "lockstore" => SemanticsKind::LockStore,
            _ => return None,
        })
    }

    /// Store and LockStore carry a global store value.
    pub fn has_store(self) -> bool {
        matches!(self, SemanticsKind::Store | SemanticsKind::LockStore)
    }
}

impl fmt::Display for SemanticsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Tau,
    Send(ValueId),
    Recv(ValueId),
    BcastSend(ValueId),
    BcastRecv(ValueId),
    Write(ValueId),
    Read(ValueId),
    Lock,
    Unlock,
}

impl Label {
    pub fn value(self) -> Option<ValueId> {
        match self {
            Label::Send(v)
            | Label::Recv(v)
            | Label::BcastSend(v)
            | Label::BcastRecv(v)
            | Label::Write(v)
            | Label::Read(v) => Some(v),
            Label::Tau | Label::Lock | Label::Unlock => None,
        }
    }

    /// Whether this label may appear in a template of the given kind.
    pub fn allowed_in(self, kind: SemanticsKind) -> bool {
        use SemanticsKind::*;
        match self {
            Label::Tau => true,
            Label::Send(_) | Label::Recv(_) => kind == RendezVous,
            Label::BcastSend(_) | Label::BcastRecv(_) => kind == Broadcast,
            Label::Write(_) | Label::Read(_) => matches!(kind, Store | LockStore),
            Label::Lock | Label::Unlock => kind == LockStore,
        }
    }

    /// Render using the value names of `values`.
    pub fn render(self, values: &[String]) -> String {
        match self {
            Label::Tau => "tau".into(),
            Label::Send(v) => format!("{}!", values[v]),
            Label::Recv(v) => format!("{}?", values[v]),
            Label::BcastSend(v) => format!("{}!!", values[v]),
            Label::BcastRecv(v) => format!("{}??", values[v]),
            Label::Write(v) => format!("w({})", values[v]),
            Label::Read(v) => format!("r({})", values[v]),
            Label::Lock => "lock".into(),
            Label::Unlock => "unlock".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Transition {
    pub source: StateId,
    pub label: Label,
    pub target: StateId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InitialSpec {
    /// One entry per state.
    pub counts: Vec<Count>,
    /// Present iff the kind has a store.
    pub store0: Option<ValueId>,
}

impl InitialSpec {
    pub fn has_omega(&self) -> bool {
        self.counts.iter().any(|c| c.is_omega())
    }

    /// Sum of the finite entries.
    pub fn finite_total(&self) -> u32 {
        self.counts.iter().filter_map(|c| c.finite()).sum()
    }

    /// Leaderless shape: every nonzero entry is ω and at least one entry is.
    pub fn is_leaderless(&self) -> bool {
        self.has_omega() && self.counts.iter().all(|c| c.is_zero() || c.is_omega())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetSpec {
    /// One entry per state.
    pub demand: Vec<u32>,
}

impl TargetSpec {
    pub fn is_met_by(&self, counts: &[u32]) -> bool {
        self.demand.iter().zip(counts).all(|(d, c)| c >= d)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateAutomaton {
    pub kind: SemanticsKind,
    pub states: Vec<String>,
    pub values: Vec<String>,
    pub transitions: Vec<Transition>,
    pub init: InitialSpec,
    pub target: TargetSpec,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("operation requires a {expected} template, got {found}")]
    WrongKind {
        expected: SemanticsKind,
        found: SemanticsKind,
    },
}

impl TemplateAutomaton {
    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name)
    }

    pub fn value_id(&self, name: &str) -> Option<ValueId> {
        self.values.iter().position(|v| v == name)
    }

    pub fn render_transition(&self, t: &Transition) -> String {
        format!(
            "{} {} {}",
            self.states[t.source],
            t.label.render(&self.values),
            self.states[t.target]
        )
    }

    /// Index of the first transition equal to `t`.
    pub fn transition_index(&self, t: &Transition) -> Option<usize> {
        self.transitions.iter().position(|u| u == t)
    }

    /// Add a `q --v??--> q` self-loop for every state/value pair lacking a receive.
    pub fn complete_receives(&self) -> Result<TemplateAutomaton, ModelError> {
        if self.kind != SemanticsKind::Broadcast {
            return Err(ModelError::WrongKind {
                expected: SemanticsKind::Broadcast,
                found: self.kind,
            });
        }
        let mut out = self.clone();
        for q in 0..self.states.len() {
            for v in 0..self.values.len() {
                let has = self
                    .transitions
                    .iter()
                    .any(|t| t.source == q && t.label == Label::BcastRecv(v));
                if !has {
                    out.transitions.push(Transition {
                        source: q,
                        label: Label::BcastRecv(v),
                        target: q,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// Serializes back to the crowd-file format accepted by [`parse_template`].
impl fmt::Display for TemplateAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "semantics {}", self.kind)?;
        if !self.values.is_empty() {
            writeln!(f, "values {}", self.values.join(" "))?;
        }
        writeln!(f, "states {}", self.states.join(" "))?;
        let init: Vec<String> = self
            .init
            .counts
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(q, c)| format!("{}={}", self.states[q], c))
            .collect();
        writeln!(f, "init {}", init.join(" "))?;
        if let Some(v) = self.init.store0 {
            writeln!(f, "store_init {}", self.values[v])?;
        }
        let target: Vec<String> = self
            .target
            .demand
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0)
            .map(|(q, d)| format!("{}>={}", self.states[q], d))
            .collect();
        writeln!(f, "target {}", target.join(" "))?;
        for t in &self.transitions {
            writeln!(f, "trans {}", self.render_transition(t))?;
        }
        Ok(())
    }
}
