use super::{Config, Semantics, SemanticsError, Step};
use crate::count::Count;
use crate::model::{Label, TemplateAutomaton, Transition};

/// A concrete crowd size, initial configuration and step sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub n: u32,
    pub init: Config,
    pub steps: Vec<Step>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error("initial configuration incompatible with the template: {0}")]
    IncompatibleInit(String),
    #[error("step {index} not enabled: {source}")]
    StepNotEnabled { index: usize, source: SemanticsError },
    #[error("final configuration does not meet the target demand")]
    TargetMissed,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("witness line {line}: {msg}")]
pub struct WitnessParseError {
    pub line: usize,
    pub msg: String,
}

/// Replays `w` from its initial configuration and returns the visited
/// configurations (initial one included).
pub fn replay_witness(t: &TemplateAutomaton, w: &Witness) -> Result<Vec<Config>, ReplayError> {
    let sem = Semantics::new(t);
    let bad_init = |msg: String| ReplayError::IncompatibleInit(msg);
    sem.check_config(&w.init).map_err(|e| bad_init(e.to_string()))?;
    if w.init.total() != w.n {
        return Err(bad_init(format!(
            "crowd size {} but initial configuration has {} processes",
            w.n,
            w.init.total()
        )));
    }
    for (q, (&k, spec)) in w.init.counts.iter().zip(&t.init.counts).enumerate() {
        if let Count::Fin(expected) = *spec {
            if k != expected {
                return Err(bad_init(format!(
                    "state {} must start with {} processes, got {}",
                    t.states[q], expected, k
                )));
            }
        }
    }
    if w.init.store != t.init.store0 {
        return Err(bad_init("initial store value differs from store_init".into()));
    }

    let mut trace = vec![w.init.clone()];
    for (index, step) in w.steps.iter().enumerate() {
        let next = sem
            .apply_step(trace.last().unwrap(), step)
            .map_err(|source| ReplayError::StepNotEnabled { index, source })?;
        trace.push(next);
    }
    if !t.target.is_met_by(&trace.last().unwrap().counts) {
        return Err(ReplayError::TargetMissed);
    }
    Ok(trace)
}

impl Witness {
    /// Text form: `n`, `init`, optional `store`, then one `step` line per step
    /// using the crowd-file transition syntax. Broadcast receivers follow the
    /// sender as `| <transition> x<count>`; a rendez-vous partner as `| <transition>`.
    pub fn render(&self, t: &TemplateAutomaton) -> String {
        let sem = Semantics::new(t);
        let mut out = format!("n {}\n", self.n);
        let init: Vec<String> = self
            .init
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(q, k)| format!("{}={}", t.states[q], k))
            .collect();
        out.push_str(format!("init {}", init.join(" ")).trim_end());
        out.push('\n');
        if let Some(v) = self.init.store {
            out.push_str(&format!("store {}\n", t.values[v]));
        }
        for s in &self.steps {
            out.push_str(&format!("step {}\n", sem.render_step(s)));
        }
        out
    }

    pub fn parse(t: &TemplateAutomaton, text: &str) -> Result<Witness, WitnessParseError> {
        let mut n = None;
        let mut counts = None;
        let mut store = None;
        let mut steps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |msg: String| WitnessParseError { line, msg };
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (directive, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
            let rest = rest.trim();
            match directive {
                "n" => {
                    n = Some(
                        rest.parse::<u32>()
                            .map_err(|_| err(format!("bad crowd size `{rest}`")))?,
                    )
                }
                "init" => {
                    let mut c = vec![0u32; t.states.len()];
                    for tok in rest.split_whitespace() {
                        let (name, k) = tok
                            .split_once('=')
                            .ok_or_else(|| err(format!("expected state=count, got `{tok}`")))?;
                        let q = t.state_id(name).ok_or_else(|| err(format!("unknown state `{name}`")))?;
                        c[q] = k.parse().map_err(|_| err(format!("bad count `{k}`")))?;
                    }
                    counts = Some(c);
                }
                "store" => store = Some(t.value_id(rest).ok_or_else(|| err(format!("unknown value `{rest}`")))?),
                "step" => steps.push(parse_step(t, rest).map_err(err)?),
                other => return Err(err(format!("unknown directive `{other}`"))),
            }
        }
        let missing = |what: &str| WitnessParseError {
            line: 0,
            msg: format!("missing `{what}` line"),
        };
        Ok(Witness {
            n: n.ok_or_else(|| missing("n"))?,
            init: Config::new(counts.ok_or_else(|| missing("init"))?, store),
            steps,
        })
    }
}

fn parse_transition(t: &TemplateAutomaton, text: &str) -> Result<usize, String> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    let [src, label, dst] = toks[..] else {
        return Err(format!("expected `<state> <label> <state>`, got `{text}`"));
    };
    let source = t.state_id(src).ok_or_else(|| format!("unknown state `{src}`"))?;
    let target = t.state_id(dst).ok_or_else(|| format!("unknown state `{dst}`"))?;
    (0..t.transitions.len())
        .find(|&i| {
            let tr: &Transition = &t.transitions[i];
            tr.source == source && tr.target == target && tr.label.render(&t.values) == label
        })
        .ok_or_else(|| format!("no transition `{text}` in the template"))
}

fn parse_step(t: &TemplateAutomaton, text: &str) -> Result<Step, String> {
    let mut parts = text.split('|').map(str::trim);
    let first = parse_transition(t, parts.next().unwrap_or(""))?;
    let rest: Vec<&str> = parts.collect();
    Ok(match t.transitions[first].label {
        Label::Tau => Step::Tau(first),
        Label::Write(_) | Label::Read(_) => Step::StoreOp(first),
        Label::Lock | Label::Unlock => Step::LockOp(first),
        Label::Send(_) => {
            let [partner] = rest[..] else {
                return Err("rendez-vous step needs exactly one receive partner".into());
            };
            Step::RendezVous {
                send: first,
                recv: parse_transition(t, partner)?,
            }
        }
        Label::BcastSend(_) => {
            let mut assignment = Vec::new();
            for entry in rest {
                let (tr, k) = entry
                    .rsplit_once(" x")
                    .ok_or_else(|| format!("expected `<transition> x<count>`, got `{entry}`"))?;
                let k: u32 = k.parse().map_err(|_| format!("bad count in `{entry}`"))?;
                assignment.push((parse_transition(t, tr)?, k));
            }
            assignment.sort_unstable();
            Step::Broadcast {
                send: first,
                assignment,
            }
        }
        Label::Recv(_) | Label::BcastRecv(_) => return Err("a step cannot start with a receive".into()),
    })
}
