//! Coverability checking for crowds of anonymous processes that communicate by
//! broadcast, rendez-vous, or a shared store with or without a lock.

#![allow(clippy::needless_range_loop)]

pub mod combin;
pub mod corpus;
pub mod count;
pub mod engines;
pub mod model;
pub mod net;
pub mod oracle;
pub mod par;
pub mod semantics;
pub mod ucs;

pub use count::Count;
pub use engines::{auto_select, check, CheckOptions, Engine, EngineChoice, EngineError, Outcome, Stats, Verdict};
pub use model::{parse_template, validate, SemanticsKind, TemplateAutomaton};
pub use net::{compile, ExtendedNet, GenConfig};
pub use par::Parallelism;
pub use semantics::{replay_witness, Config, Step, Witness};
