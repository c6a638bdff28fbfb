//! Decision procedures and the dispatcher that picks one for a template.

pub mod backward;
pub mod km;
pub mod leaderless;

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;
use tracing::info;

use crate::model::{validate, SemanticsKind, TemplateAutomaton, ValidationReport};
use crate::net::{compile, NetError};
use crate::oracle::{oracle_coverable, OracleError, OracleVerdict, DEFAULT_CONFIG_BUDGET};
use crate::par::Parallelism;
use crate::semantics::{replay_witness, ReplayError, Witness};

pub use backward::{backward_check, extract_witness, BackwardOptions, BackwardRun};
pub use km::{km_build, km_coverable, KmError, KmGraph};
pub use leaderless::{leaderless_rv, leaderless_store, rv_closure, store_exploration, LeaderlessError, RvClosure};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Safe,
    Coverable,
    /// No cover found by bounded search up to this crowd size.
    SafeUpTo(u32),
    Inapplicable(String),
    BudgetExceeded(String),
}

impl Outcome {
    pub fn keyword(&self) -> &'static str {
        match self {
            Outcome::Safe => "SAFE",
            Outcome::Coverable => "COVERABLE",
            Outcome::SafeUpTo(_) => "SAFE-UP-TO",
            Outcome::Inapplicable(_) => "INAPPLICABLE",
            Outcome::BudgetExceeded(_) => "BUDGET-EXCEEDED",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::SafeUpTo(n) => write!(f, "SAFE-UP-TO {n}"),
            Outcome::Inapplicable(why) | Outcome::BudgetExceeded(why) => write!(f, "{} ({why})", self.keyword()),
            _ => f.write_str(self.keyword()),
        }
    }
}

/// Engine counters; `wall` is kept apart since it is the only nondeterministic entry.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub counters: BTreeMap<String, u64>,
    #[serde(skip)]
    pub wall: Duration,
}

impl Stats {
    pub fn set(&mut self, key: &str, value: u64) {
        self.counters.insert(key.to_owned(), value);
    }

    pub fn get(&self, key: &str) -> Option<u64> {
        self.counters.get(key).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub witness: Option<Witness>,
    pub stats: Stats,
}

impl Verdict {
    fn bare(outcome: Outcome, start: Instant) -> Self {
        Verdict {
            outcome,
            witness: None,
            stats: Stats {
                wall: start.elapsed(),
                ..Stats::default()
            },
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("template is invalid ({0})")]
    InvalidTemplate(ValidationReport),
    #[error("internal engine inconsistency: {0}")]
    Internal(String),
    #[error("witness failed replay: {0}")]
    WitnessReplay(#[from] ReplayError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl From<NetError> for EngineError {
    fn from(e: NetError) -> Self {
        match e {
            NetError::InvalidTemplate(r) => EngineError::InvalidTemplate(r),
            other => EngineError::Internal(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Backward,
    KarpMiller,
    LeaderlessRendezVous,
    LeaderlessStore,
    Oracle,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Backward => "backward",
            Engine::KarpMiller => "km",
            Engine::LeaderlessRendezVous => "leaderless_rv",
            Engine::LeaderlessStore => "leaderless_store",
            Engine::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EngineChoice {
    #[default]
    Auto,
    Backward,
    KarpMiller,
    Leaderless,
    Oracle,
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    pub engine: EngineChoice,
    /// Largest crowd size tried by the oracle engine.
    pub oracle_n: u32,
    /// Rerun the backward engine when the chosen one reports a cover without a trace.
    pub witness: bool,
    pub parallelism: Parallelism,
    pub config_budget: usize,
    pub node_budget: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            engine: EngineChoice::Auto,
            oracle_n: 5,
            witness: false,
            parallelism: Parallelism::default(),
            config_budget: DEFAULT_CONFIG_BUDGET,
            node_budget: leaderless::DEFAULT_NODE_BUDGET,
        }
    }
}

pub fn auto_select(t: &TemplateAutomaton) -> Engine {
    match t.kind {
        SemanticsKind::RendezVous if t.init.is_leaderless() => Engine::LeaderlessRendezVous,
        SemanticsKind::Store if t.init.is_leaderless() => Engine::LeaderlessStore,
        _ => Engine::Backward,
    }
}

fn resolve(t: &TemplateAutomaton, choice: EngineChoice) -> Engine {
    match choice {
        EngineChoice::Auto => auto_select(t),
        EngineChoice::Backward => Engine::Backward,
        EngineChoice::KarpMiller => Engine::KarpMiller,
        EngineChoice::Oracle => Engine::Oracle,
        EngineChoice::Leaderless => match t.kind {
            SemanticsKind::Store => Engine::LeaderlessStore,
            _ => Engine::LeaderlessRendezVous,
        },
    }
}

fn run_backward(t: &TemplateAutomaton, opts: &CheckOptions) -> Result<Verdict, EngineError> {
    let net = compile(t)?;
    let run = backward_check(
        &net,
        &BackwardOptions {
            parallelism: opts.parallelism,
            ..BackwardOptions::default()
        },
    )?;
    Ok(run.verdict)
}

fn run_engine(t: &TemplateAutomaton, engine: Engine, opts: &CheckOptions) -> Result<Verdict, EngineError> {
    let start = Instant::now();
    match engine {
        Engine::Backward => run_backward(t, opts),
        Engine::KarpMiller => {
            let net = compile(t)?;
            match km_build(&net, opts.node_budget) {
                Ok(g) => {
                    let outcome = if km_coverable(&g, &net.target) {
                        Outcome::Coverable
                    } else {
                        Outcome::Safe
                    };
                    let mut v = Verdict::bare(outcome, start);
                    v.stats.set("nodes", g.nodes.len() as u64);
                    v.stats.set("edges", g.edges.len() as u64);
                    Ok(v)
                }
                Err(KmError::Inapplicable) => Ok(Verdict::bare(
                    Outcome::Inapplicable(KmError::Inapplicable.to_string()),
                    start,
                )),
                Err(e @ KmError::BudgetExceeded(_)) => Ok(Verdict::bare(Outcome::BudgetExceeded(e.to_string()), start)),
            }
        }
        Engine::LeaderlessRendezVous | Engine::LeaderlessStore => {
            let res = if engine == Engine::LeaderlessRendezVous {
                leaderless_rv(t)
            } else {
                leaderless_store(t, opts.node_budget)
            };
            match res {
                Ok(v) => Ok(v),
                Err(e @ LeaderlessError::BudgetExceeded(_)) => {
                    Ok(Verdict::bare(Outcome::BudgetExceeded(e.to_string()), start))
                }
                Err(e) => Ok(Verdict::bare(Outcome::Inapplicable(e.to_string()), start)),
            }
        }
        Engine::Oracle => {
            let (outcome, witness) = match oracle_coverable(t, opts.oracle_n, opts.config_budget)? {
                OracleVerdict::Coverable(w) => (Outcome::Coverable, Some(w)),
                OracleVerdict::SafeUpTo(n) => (Outcome::SafeUpTo(n), None),
                OracleVerdict::BudgetExceeded { n, budget } => (
                    Outcome::BudgetExceeded(format!("configuration budget of {budget} exceeded at n={n}")),
                    None,
                ),
            };
            let mut v = Verdict::bare(outcome, start);
            v.witness = witness;
            v.stats.set("oracle_n", u64::from(opts.oracle_n));
            Ok(v)
        }
    }
}

/// Validate, run the selected engine and replay whatever witness comes out.
pub fn check(t: &TemplateAutomaton, opts: &CheckOptions) -> Result<(Engine, Verdict), EngineError> {
    let report = validate(t);
    if !report.is_valid() {
        return Err(EngineError::InvalidTemplate(report));
    }
    let engine = resolve(t, opts.engine);
    let mut verdict = run_engine(t, engine, opts)?;
    if opts.witness && verdict.outcome == Outcome::Coverable && verdict.witness.is_none() {
        let rerun = run_backward(t, opts)?;
        if rerun.outcome != Outcome::Coverable {
            return Err(EngineError::Internal(format!(
                "{engine} reports COVERABLE but backward reports {}",
                rerun.outcome
            )));
        }
        verdict.witness = rerun.witness;
    }
    if let Some(w) = &verdict.witness {
        replay_witness(t, w)?;
    }
    info!(engine = engine.name(), outcome = %verdict.outcome, "check finished");
    Ok((engine, verdict))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_template;

    #[test]
    fn auto_selection() {
        let b = parse_template(
            "semantics broadcast\nvalues a\nstates q1 q2\ninit q1=omega\ntarget q2\n\
             trans q1 a!! q2\ntrans q1 a?? q1\ntrans q2 a?? q2\n",
        )
        .unwrap();
        assert_eq!(auto_select(&b), Engine::Backward);
        let rv = parse_template("semantics rendezvous\nstates q1 q2\ninit q1=omega\ntarget q2\n").unwrap();
        assert_eq!(auto_select(&rv), Engine::LeaderlessRendezVous);
        let ls = parse_template(
            "semantics lockstore\nvalues v\nstates q1 q2\ninit q1=1 q2=omega\nstore_init v\ntarget q2\n",
        )
        .unwrap();
        assert_eq!(auto_select(&ls), Engine::Backward);
    }

    #[test]
    fn km_on_broadcast_is_inapplicable() {
        let b = parse_template(
            "semantics broadcast\nvalues a\nstates q1 q2\ninit q1=omega\ntarget q2\n\
             trans q1 a!! q2\ntrans q1 a?? q1\ntrans q2 a?? q2\n",
        )
        .unwrap();
        let opts = CheckOptions {
            engine: EngineChoice::KarpMiller,
            ..CheckOptions::default()
        };
        let (_, v) = check(&b, &opts).unwrap();
        assert!(matches!(v.outcome, Outcome::Inapplicable(_)));
    }

    #[test]
    fn witness_flag_reruns_backward() {
        let t = parse_template(
            "semantics rendezvous\nvalues v\nstates q1 q3 q4\ninit q1=omega\ntarget q4\n\
             trans q1 v! q3\ntrans q1 v? q4\n",
        )
        .unwrap();
        let opts = CheckOptions {
            witness: true,
            ..CheckOptions::default()
        };
        let (engine, v) = check(&t, &opts).unwrap();
        assert_eq!(engine, Engine::LeaderlessRendezVous);
        assert_eq!(v.outcome, Outcome::Coverable);
        assert_eq!(v.witness.unwrap().n, 2);
    }

    #[test]
    fn oracle_bound_is_not_safe() {
        let t = parse_template("semantics rendezvous\nstates q1 q2\ninit q1=omega\ntarget q2\n").unwrap();
        let opts = CheckOptions {
            engine: EngineChoice::Oracle,
            oracle_n: 3,
            ..CheckOptions::default()
        };
        assert_eq!(check(&t, &opts).unwrap().1.outcome, Outcome::SafeUpTo(3));
    }
}
