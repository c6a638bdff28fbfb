//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use crowdcov_core::combin::Odometer;
use crowdcov_core::corpus::{random_corpus, CorpusParams, ALL_KINDS};
use crowdcov_core::engines::{
    backward_check, km_build, km_coverable, leaderless_rv, leaderless_store, rv_closure, BackwardOptions, Outcome,
};
use crowdcov_core::model::{parse_template, SemanticsKind, TemplateAutomaton};
use crowdcov_core::net::{compile, GenConfig};
use crowdcov_core::oracle::{explore, initial_configs, oracle_coverable, ExploreOptions, OracleVerdict, PredTable};
use crowdcov_core::par::{self, Parallelism};
use crowdcov_core::semantics::replay_witness;
use crowdcov_core::ucs::pred_basis_all;
use crowdcov_core::Count;

const TEMPLATES_PER_KIND: usize = 200;
const CORPUS_SEED: u64 = 0x5eed_0001;

type Check<'a> = Box<dyn Fn() -> Criterion + 'a>;

struct Criterion {
    ok: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Criterion {
    Criterion {
        ok: true,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Criterion {
    Criterion {
        ok: false,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit: Duration, ok: bool, detail: String) -> Criterion {
    let detail = format!("{detail}; {:.3}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs());
    if ok && elapsed < limit {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus_file(name: &str) -> TemplateAutomaton {
    let text = std::fs::read_to_string(corpus_dir().join(name)).expect("corpus file");
    parse_template(&text).expect("corpus file parses")
}

fn random_templates() -> Vec<TemplateAutomaton> {
    let p = CorpusParams::default();
    ALL_KINDS
        .iter()
        .flat_map(|&k| random_corpus(k, TEMPLATES_PER_KIND, CORPUS_SEED, &p))
        .collect()
}

fn g(entries: &[Option<u32>]) -> GenConfig {
    GenConfig(entries.iter().map(|e| e.map_or(Count::Omega, Count::Fin)).collect())
}

fn leader_micro_example() -> Criterion {
    let start = Instant::now();
    let t1 = corpus_file("leader_broadcast.crowd");
    let t2 = corpus_file("leader_broadcast_unique.crowd");
    let opts = BackwardOptions::default();
    let r1 = backward_check(&compile(&t1).unwrap(), &opts).unwrap();
    let r2 = backward_check(&compile(&t2).unwrap(), &opts).unwrap();
    let w = r1.verdict.witness.as_ref();
    let witness_ok = w.is_some_and(|w| w.n == 1 && w.steps.len() == 1 && replay_witness(&t1, w).is_ok());
    // independent: the oracle finds the cover at n=1 and nothing for q2>=2 up to n=6
    let oracle_ok = matches!(oracle_coverable(&t1, 1, 1000).unwrap(), OracleVerdict::Coverable(ref o) if o.n == 1)
        && oracle_coverable(&t2, 6, 100_000).unwrap() == OracleVerdict::SafeUpTo(6);
    let ok = r1.verdict.outcome == Outcome::Coverable && witness_ok && r2.verdict.outcome == Outcome::Safe && oracle_ok;
    within(
        start.elapsed(),
        Duration::from_secs(1),
        ok,
        format!(
            "q2>=1 {} (N={:?}), q2>=2 {}",
            r1.verdict.outcome,
            w.map(|w| w.n),
            r2.verdict.outcome
        ),
    )
}

fn karp_miller_acceleration() -> Criterion {
    let start = Instant::now();
    let accel = compile(&corpus_file("rv_leader_pump.crowd")).unwrap();
    let plain = compile(&corpus_file("rv_leader_step.crowd")).unwrap();
    let ga = km_build(&accel, 10_000).unwrap();
    let gp = km_build(&plain, 10_000).unwrap();
    let has_accel = ga.contains_node(&g(&[Some(1), None, Some(0), None]));
    let has_plain = gp.contains_node(&g(&[Some(0), None, Some(1), Some(1)]));
    within(
        start.elapsed(),
        Duration::from_secs(1),
        has_accel && has_plain,
        format!("(1,w,0,w) present: {has_accel}, (0,w,1,1) present: {has_plain}"),
    )
}

fn pred_basis_exactness(corpus: &[TemplateAutomaton]) -> Criterion {
    let start = Instant::now();
    let mut discrepancies = 0usize;
    let mut demands = 0usize;
    let mut first = None;
    for (i, t) in corpus.iter().enumerate() {
        let net = compile(t).unwrap();
        let table = PredTable::new(&net, 3, 2, Parallelism::Parallel);
        let sets = table.all_pred_sets();
        let ms: Vec<Vec<u32>> = Odometer::new(vec![3; net.num_places()])
            .map(|m| m.into_iter().map(|k| k as u32).collect())
            .collect();
        let bad = par::map(Parallelism::Parallel, &ms, |m| {
            let basis = pred_basis_all(&net, m).unwrap();
            table.upward_set(basis.elems()) != sets[table.demand_index(m)]
        });
        demands += ms.len();
        let n_bad = bad.iter().filter(|b| **b).count();
        if n_bad > 0 && first.is_none() {
            first = Some(i);
        }
        discrepancies += n_bad;
    }
    within(
        start.elapsed(),
        Duration::from_secs(300),
        discrepancies == 0,
        format!(
            "{} templates, {demands} demand vectors, {discrepancies} discrepancies{}",
            corpus.len(),
            first.map_or(String::new(), |i| format!(" (first in template {i})"))
        ),
    )
}

fn engine_agreement(corpus: &[TemplateAutomaton]) -> Criterion {
    let start = Instant::now();
    let mut problems: Vec<String> = Vec::new();
    let (mut km_checked, mut ll_checked, mut covered, mut oracle_covered) = (0, 0, 0, 0);
    let results = par::map(Parallelism::Parallel, corpus, |t| {
        let mut local = Vec::new();
        let net = compile(t).unwrap();
        let run = backward_check(&net, &BackwardOptions::default()).unwrap();
        let back = &run.verdict.outcome;
        let oracle = oracle_coverable(t, 5, 2_000_000).unwrap();
        match &oracle {
            OracleVerdict::Coverable(w) if *back != Outcome::Coverable => {
                local.push(format!("oracle covers at n={} but backward says {back}", w.n))
            }
            OracleVerdict::BudgetExceeded { n, .. } => local.push(format!("oracle budget exceeded at n={n}")),
            _ => {}
        }
        let oracle_cov = matches!(oracle, OracleVerdict::Coverable(_));
        if *back == Outcome::Coverable {
            match &run.verdict.witness {
                Some(w) => {
                    if let Err(e) = replay_witness(t, w) {
                        local.push(format!("witness does not replay: {e}"));
                    }
                }
                None => local.push("backward COVERABLE without witness".into()),
            }
        }
        let mut km = false;
        if t.kind != SemanticsKind::Broadcast {
            km = true;
            let graph = km_build(&net, 1_000_000).unwrap();
            let kc = km_coverable(&graph, &net.target);
            if kc != (*back == Outcome::Coverable) {
                local.push(format!("km says {kc}, backward says {back}"));
            }
        }
        let ll = match t.kind {
            SemanticsKind::RendezVous if t.init.is_leaderless() => Some(leaderless_rv(t).unwrap()),
            SemanticsKind::Store if t.init.is_leaderless() => Some(leaderless_store(t, 1_000_000).unwrap()),
            _ => None,
        };
        if let Some(v) = &ll {
            if v.outcome != *back {
                local.push(format!("leaderless says {}, backward says {back}", v.outcome));
            }
        }
        (local, km, ll.is_some(), *back == Outcome::Coverable, oracle_cov)
    });
    for (i, (local, km, ll, cov, ocov)) in results.into_iter().enumerate() {
        km_checked += usize::from(km);
        ll_checked += usize::from(ll);
        covered += usize::from(cov);
        oracle_covered += usize::from(ocov);
        problems.extend(local.into_iter().map(|p| format!("template {i}: {p}")));
    }
    within(
        start.elapsed(),
        Duration::from_secs(600),
        problems.is_empty(),
        format!(
            "{} templates ({covered} coverable, {oracle_covered} within n<=5), km on {km_checked}, leaderless on {ll_checked}, {} discrepancies{}",
            corpus.len(),
            problems.len(),
            problems.first().map_or(String::new(), |p| format!(" [{p}]"))
        ),
    )
}

fn bisimulation(corpus: &[TemplateAutomaton]) -> Criterion {
    let start = Instant::now();
    let results = par::map(Parallelism::Parallel, corpus, |t| {
        let net = compile(t).unwrap();
        let mut bad = 0usize;
        let mut checked = 0usize;
        for n in 0..=4u32 {
            let Ok(inits) = initial_configs(t, n) else { continue };
            checked += 1;
            let reach = explore(t, n, ExploreOptions::default()).unwrap();
            let mapped: BTreeSet<Vec<u32>> = reach.configs.iter().map(|c| net.marking_of_config(c)).collect();
            let init_markings: Vec<Vec<u32>> = inits.iter().map(|c| net.marking_of_config(c)).collect();
            let net_reach = net.reachable_markings(&init_markings, 1_000_000).unwrap();
            let back: BTreeSet<_> = net_reach.iter().map(|m| net.config_of_marking(m)).collect();
            if mapped != net_reach || back != reach.configs {
                bad += 1;
            }
        }
        (checked, bad)
    });
    let checked: usize = results.iter().map(|r| r.0).sum();
    let bad: usize = results.iter().map(|r| r.1).sum();
    within(
        start.elapsed(),
        Duration::from_secs(600),
        bad == 0,
        format!("{checked} (template, n) pairs, {bad} discrepancies"),
    )
}

fn leaderless_fixed_point(corpus: &[TemplateAutomaton]) -> Criterion {
    let mut checked = 0;
    let mut over = 0;
    for t in corpus
        .iter()
        .filter(|t| t.kind == SemanticsKind::RendezVous && t.init.is_leaderless())
    {
        checked += 1;
        if rv_closure(t).unwrap().iterations > t.states.len() {
            over += 1;
        }
    }
    let worked = corpus_file("rv_pair.crowd");
    let omega: Vec<String> = rv_closure(&worked)
        .unwrap()
        .states()
        .into_iter()
        .map(|q| worked.states[q].clone())
        .collect();
    let ok = over == 0 && checked > 0 && omega == ["q1", "q3", "q4"];
    let detail = format!(
        "{checked} instances, {over} over |Q| iterations, worked example {{{}}}",
        omega.join(",")
    );
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn strip_timing(out: &[u8]) -> String {
    String::from_utf8_lossy(out)
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"timing_ms\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism() -> Criterion {
    let bin = env!("CARGO_BIN_EXE_crowdcov");
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "crowd"))
        .collect();
    files.sort();
    let mut mismatched = Vec::new();
    for f in &files {
        let run = |extra: &[&str]| {
            let out = Command::new(bin)
                .args(["check", "--json", "--witness"])
                .args(extra)
                .arg(f)
                .output()
                .expect("binary runs");
            (out.status.code(), strip_timing(&out.stdout))
        };
        let a = run(&[]);
        let b = run(&[]);
        let c = run(&["--sequential"]);
        if a != b || a != c || a.1.is_empty() {
            mismatched.push(f.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    let detail = format!(
        "{} corpus files x 3 runs, {} mismatches {:?}",
        files.len(),
        mismatched.len(),
        mismatched
    );
    if mismatched.is_empty() && !files.is_empty() {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn scale_smoke() -> Criterion {
    let t = corpus_file("lockstore_election.crowd");
    let start = Instant::now();
    let run = backward_check(&compile(&t).unwrap(), &BackwardOptions::default()).unwrap();
    let ok = t.states.len() == 10 && t.values.len() == 3 && run.verdict.outcome == Outcome::Safe;
    within(
        start.elapsed(),
        Duration::from_secs(10),
        ok,
        format!("leader>=2 {}, basis {}", run.verdict.outcome, run.basis.len()),
    )
}

fn main() {
    let corpus = random_templates();
    let criteria: Vec<(&str, Check)> = vec![
        ("leader micro-example", Box::new(leader_micro_example)),
        ("Karp-Miller acceleration", Box::new(karp_miller_acceleration)),
        ("pred-basis exactness", Box::new(|| pred_basis_exactness(&corpus))),
        ("engine cross-agreement", Box::new(|| engine_agreement(&corpus))),
        ("compilation bisimulation", Box::new(|| bisimulation(&corpus))),
        ("leaderless fixed point", Box::new(|| leaderless_fixed_point(&corpus))),
        ("determinism", Box::new(determinism)),
        ("scale smoke test", Box::new(scale_smoke)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let r = run();
        failed += usize::from(!r.ok);
        println!(
            "[{}] {} {}: {}",
            if r.ok { "PASS" } else { "FAIL" },
            i + 1,
            name,
            r.detail
        );
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
