use std::collections::VecDeque;
use std::fmt;

use super::{Label, SemanticsKind, StateId, TemplateAutomaton, ValueId};

/// Lock status of a state as derived by propagation from the initial states.
/// Both flags set means the template is ambiguous; neither means unreachable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LockStatus {
    pub free: bool,
    pub held: bool,
}

impl LockStatus {
    pub fn is_held_only(self) -> bool {
        self.held && !self.free
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    LabelKindMismatch { transition: usize },
    MissingReceive { state: StateId, value: ValueId },
    LockInconsistent { state: StateId },
    AccessWithoutLock { transition: usize },
    LockFromHeld { transition: usize },
    UnlockFromFree { transition: usize },
    InitOnHeldState { state: StateId },
    EmptyInit,
    EmptyTarget,
}

impl Violation {
    pub fn describe(&self, t: &TemplateAutomaton) -> String {
        let tr = |i: usize| format!("transition {} (`{}`)", i, t.render_transition(&t.transitions[i]));
        match *self {
            Violation::LabelKindMismatch { transition } => {
                format!("{} uses a label not allowed under semantics {}", tr(transition), t.kind)
            }
            Violation::MissingReceive { state, value } => format!(
                "state {} has no receive for broadcast value {}",
                t.states[state], t.values[value]
            ),
            Violation::LockInconsistent { state } => {
                format!("state {} is reachable both lock-free and lock-holding", t.states[state])
            }
            Violation::AccessWithoutLock { transition } => {
                format!("{} accesses the store from a lock-free state", tr(transition))
            }
            Violation::LockFromHeld { transition } => {
                format!("{} locks from a lock-holding state", tr(transition))
            }
            Violation::UnlockFromFree { transition } => {
                format!("{} unlocks from a lock-free state", tr(transition))
            }
            Violation::InitOnHeldState { state } => {
                format!("initial processes on lock-holding state {}", t.states[state])
            }
            Violation::EmptyInit => "initial configuration has no processes".into(),
            Violation::EmptyTarget => "target demand is all zero".into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn totality_violations(&self) -> usize {
        self.violations
            .iter()
            .filter(|v| matches!(v, Violation::MissingReceive { .. }))
            .count()
    }

    pub fn render(&self, t: &TemplateAutomaton) -> String {
        let mut out = String::new();
        for v in &self.violations {
            out.push_str(&v.describe(t));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violation(s)", self.violations.len())
    }
}

/// Propagate lock status from the initially populated states: `lock` makes the
/// target held, `unlock` makes it free, every other label preserves status.
/// The fixpoint does not depend on transition order.
pub fn lock_status(t: &TemplateAutomaton) -> Vec<LockStatus> {
    let n = t.states.len();
    if t.kind != SemanticsKind::LockStore {
        return vec![
            LockStatus {
                free: true,
                held: false
            };
            n
        ];
    }
    let mut status = vec![LockStatus::default(); n];
    let mut queue = VecDeque::new();
    for (q, c) in t.init.counts.iter().enumerate() {
        if !c.is_zero() {
            status[q].free = true;
            queue.push_back((q, false));
        }
    }
    while let Some((q, held)) = queue.pop_front() {
        for tr in t.transitions.iter().filter(|tr| tr.source == q) {
            let next_held = match tr.label {
                Label::Lock => true,
                Label::Unlock => false,
                _ => held,
            };
            let s = &mut status[tr.target];
            let flag = if next_held { &mut s.held } else { &mut s.free };
            if !*flag {
                *flag = true;
                queue.push_back((tr.target, next_held));
            }
        }
    }
    status
}

pub fn validate(t: &TemplateAutomaton) -> ValidationReport {
    let mut violations = Vec::new();

    if !t.init.has_omega() && t.init.finite_total() == 0 {
        violations.push(Violation::EmptyInit);
    }
    if t.target.demand.iter().all(|&d| d == 0) {
        violations.push(Violation::EmptyTarget);
    }
    for (i, tr) in t.transitions.iter().enumerate() {
        if !tr.label.allowed_in(t.kind) {
            violations.push(Violation::LabelKindMismatch { transition: i });
        }
    }

    if t.kind == SemanticsKind::Broadcast {
        for q in 0..t.states.len() {
            for v in 0..t.values.len() {
                let has = t
                    .transitions
                    .iter()
                    .any(|tr| tr.source == q && tr.label == Label::BcastRecv(v));
                if !has {
                    violations.push(Violation::MissingReceive { state: q, value: v });
                }
            }
        }
    }

    if t.kind == SemanticsKind::LockStore {
        let status = lock_status(t);
        for (q, s) in status.iter().enumerate() {
            if s.free && s.held {
                violations.push(Violation::LockInconsistent { state: q });
            }
            if s.held && !t.init.counts[q].is_zero() {
                violations.push(Violation::InitOnHeldState { state: q });
            }
        }
        for (i, tr) in t.transitions.iter().enumerate() {
            let s = status[tr.source];
            match tr.label {
                Label::Write(_) | Label::Read(_) if s.free => {
                    violations.push(Violation::AccessWithoutLock { transition: i })
                }
                Label::Lock if s.held => violations.push(Violation::LockFromHeld { transition: i }),
                Label::Unlock if s.free => violations.push(Violation::UnlockFromFree { transition: i }),
                _ => {}
            }
        }
    }

    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_template;

    #[test]
    fn leader_template_lacks_two_receives() {
        let t = parse_template(
            "semantics broadcast\nvalues a\nstates q1 q2 q3\ninit q1=omega\ntarget q2\n\
             trans q1 a!! q2\ntrans q1 a?? q3\n",
        )
        .unwrap();
        let r = validate(&t);
        assert_eq!(
            r.violations,
            vec![
                Violation::MissingReceive { state: 1, value: 0 },
                Violation::MissingReceive { state: 2, value: 0 },
            ]
        );
    }

    #[test]
    fn well_formed_lockstore_has_empty_report() {
        let t = parse_template(
            "semantics lockstore\nvalues v\nstates q1 l1 l2 q2\ninit q1=omega\nstore_init v\n\
             target q2\ntrans q1 lock l1\ntrans l1 w(v) l2\ntrans l2 unlock q2\n",
        )
        .unwrap();
        let r = validate(&t);
        assert!(r.is_valid(), "{:?}", r);
        let s = lock_status(&t);
        assert_eq!(
            s.iter().map(|s| s.is_held_only()).collect::<Vec<_>>(),
            vec![false, true, true, false]
        );
    }

    #[test]
    fn lock_self_loop_is_lock_from_held() {
        let t = parse_template(
            "semantics lockstore\nvalues v\nstates q1\ninit q1=omega\nstore_init v\ntarget q1\n\
             trans q1 lock q1\n",
        )
        .unwrap();
        let r = validate(&t);
        assert!(r.violations.contains(&Violation::LockFromHeld { transition: 0 }));
        assert!(r.violations.contains(&Violation::LockInconsistent { state: 0 }));
    }

    #[test]
    fn store_access_and_unlock_need_the_lock() {
        let t = parse_template(
            "semantics lockstore\nvalues v\nstates a b\ninit a=1\nstore_init v\ntarget b\n\
             trans a w(v) b\ntrans a unlock b\n",
        )
        .unwrap();
        let r = validate(&t);
        assert!(r.violations.contains(&Violation::AccessWithoutLock { transition: 0 }));
        assert!(r.violations.contains(&Violation::UnlockFromFree { transition: 1 }));
    }

    #[test]
    fn label_kind_mismatch_and_empty_sections() {
        let t = parse_template("semantics rendezvous\nvalues v\nstates a b\ninit a=0\ntarget b>=0\ntrans a w(v) b\n")
            .unwrap();
        let r = validate(&t);
        assert!(r.violations.contains(&Violation::LabelKindMismatch { transition: 0 }));
        assert!(r.violations.contains(&Violation::EmptyInit));
        assert!(r.violations.contains(&Violation::EmptyTarget));
    }

    #[test]
    fn lock_status_ignores_transition_order() {
        let src = "semantics lockstore\nvalues v\nstates a b c d\ninit a=omega\nstore_init v\ntarget d\n";
        let trans = [
            "trans a lock b",
            "trans b w(v) c",
            "trans c unlock d",
            "trans d lock b",
            "trans b tau c",
        ];
        let base = parse_template(&format!("{src}{}\n", trans.join("\n"))).unwrap();
        let expected = lock_status(&base);
        let mut rev = trans.to_vec();
        rev.reverse();
        let other = parse_template(&format!("{src}{}\n", rev.join("\n"))).unwrap();
        assert_eq!(lock_status(&other), expected);
    }
}
