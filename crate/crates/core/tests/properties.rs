use proptest::prelude::*;

use crowdcov_core::corpus::{random_template, CorpusParams, ALL_KINDS};
use crowdcov_core::model::{parse_template, validate, SemanticsKind, TemplateAutomaton};
use crowdcov_core::net::compile;
use crowdcov_core::oracle::{explore, ExploreOptions};
use crowdcov_core::semantics::{Config, Semantics};
use crowdcov_core::ucs::{leq, minimize};

fn template() -> impl Strategy<Value = TemplateAutomaton> {
    (0..ALL_KINDS.len(), any::<u64>())
        .prop_map(|(k, seed)| random_template(ALL_KINDS[k], seed, &CorpusParams::default()))
}

fn small_crowd(t: &TemplateAutomaton) -> u32 {
    t.init.finite_total().max(1) + 2
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn serialization_round_trips(t in template()) {
        let text = t.to_string();
        let back = parse_template(&text).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn completion_is_total_and_idempotent(seed in any::<u64>()) {
        let mut t = random_template(SemanticsKind::Broadcast, seed, &CorpusParams::default());
        t.transitions.retain(|tr| !matches!(tr.label, crowdcov_core::model::Label::BcastRecv(_)) || tr.source != tr.target);
        let once = t.complete_receives().unwrap();
        prop_assert_eq!(validate(&once).totality_violations(), 0);
        prop_assert_eq!(once.complete_receives().unwrap(), once);
    }

    #[test]
    fn minimize_is_idempotent_antichain(vs in prop::collection::vec(prop::collection::vec(0u32..4, 4), 0..24)) {
        let b = minimize(vs.clone());
        prop_assert_eq!(minimize(b.elems().to_vec()), b.clone());
        for (i, x) in b.elems().iter().enumerate() {
            for (j, y) in b.elems().iter().enumerate() {
                prop_assert!(i == j || !leq(x, y));
            }
        }
        for v in &vs {
            prop_assert!(b.contains_marking(v));
        }
    }

    /// Adding idle processes never disables a behaviour: every successor of a
    /// configuration is covered by some successor of the larger one. Extra
    /// processes go to lock-free states so lock status is unchanged.
    #[test]
    fn steps_are_monotone(t in template(), extra_state in 0usize..5, extra in 1u32..3) {
        let sem = Semantics::new(&t);
        let held = crowdcov_core::model::lock_status(&t);
        let q = extra_state % t.states.len();
        prop_assume!(!held[q].held);
        let reach = explore(&t, small_crowd(&t), ExploreOptions::default()).unwrap();
        for c in reach.configs.iter().take(40) {
            let mut d = c.clone();
            d.counts[q] += extra;
            let d_succ: Vec<Config> = sem
                .enabled_steps(&d)
                .unwrap()
                .iter()
                .map(|s| sem.apply_step(&d, s).unwrap())
                .collect();
            for s in sem.enabled_steps(c).unwrap() {
                let c2 = sem.apply_step(c, &s).unwrap();
                let covered = d_succ.iter().any(|d2| d2.store == c2.store && leq(&c2.counts, &d2.counts));
                prop_assert!(covered, "{} -> {} not matched from {}", c.render(&t), c2.render(&t), d.render(&t));
            }
        }
    }

    #[test]
    fn steps_conserve_processes_and_tokens(t in template()) {
        let sem = Semantics::new(&t);
        let net = compile(&t).unwrap();
        let n = small_crowd(&t);
        let reach = explore(&t, n, ExploreOptions::default()).unwrap();
        for c in &reach.configs {
            prop_assert_eq!(c.total(), n);
            let m = net.marking_of_config(c);
            prop_assert!(!net.exceeds_invariants(&m));
            if t.kind.has_store() {
                let vals: u32 = net.value_places().iter().map(|&p| m[p]).sum();
                prop_assert_eq!(vals, 1);
            }
            for s in sem.enabled_steps(c).unwrap() {
                prop_assert_eq!(sem.apply_step(c, &s).unwrap().total(), n);
            }
        }
    }
}
