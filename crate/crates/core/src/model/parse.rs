use super::{InitialSpec, Label, SemanticsKind, StateId, TargetSpec, TemplateAutomaton, Transition, ValueId};
use crate::count::Count;

type LabelCtor = fn(ValueId) -> Label;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: duplicate {what} `{name}`")]
    Duplicate {
        line: usize,
        what: &'static str,
        name: String,
    },
    #[error("line {line}: unknown {what} `{name}`")]
    Unknown {
        line: usize,
        what: &'static str,
        name: String,
    },
    #[error("missing `{0}` directive")]
    Missing(&'static str),
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, msg: msg.into() }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Line<'a> {
    no: usize,
    directive: &'a str,
    args: Vec<&'a str>,
}

struct Decls {
    states: Vec<String>,
    values: Vec<String>,
}

impl Decls {
    fn state(&self, line: usize, name: &str) -> Result<StateId, ParseError> {
        self.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| ParseError::Unknown {
                line,
                what: "state",
                name: name.into(),
            })
    }

    fn value(&self, line: usize, name: &str) -> Result<ValueId, ParseError> {
        self.values
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| ParseError::Unknown {
                line,
                what: "value",
                name: name.into(),
            })
    }

    fn label(&self, line: usize, text: &str) -> Result<Label, ParseError> {
        match text {
            "tau" => return Ok(Label::Tau),
            "lock" => return Ok(Label::Lock),
            "unlock" => return Ok(Label::Unlock),
            _ => {}
        }
        let wrapped = |prefix: &str| text.strip_prefix(prefix).and_then(|rest| rest.strip_suffix(')'));
        if let Some(v) = wrapped("w(") {
            return Ok(Label::Write(self.value(line, v)?));
        }
        if let Some(v) = wrapped("r(") {
            return Ok(Label::Read(self.value(line, v)?));
        }
        let suffixed: [(&str, LabelCtor); 4] = [
            ("!!", Label::BcastSend),
            ("??", Label::BcastRecv),
            ("!", Label::Send),
            ("?", Label::Recv),
        ];
        for (suffix, make) in suffixed {
            if let Some(v) = text.strip_suffix(suffix) {
                if is_ident(v) {
                    return Ok(make(self.value(line, v)?));
                }
            }
        }
        Err(syntax(line, format!("malformed label `{text}`")))
    }
}

/// Parse a crowd file. Only whitespace and `#` comments are stripped; the
/// result is not validated.
pub fn parse_template(text: &str) -> Result<TemplateAutomaton, ParseError> {
    let lines: Vec<Line> = text
        .lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let body = raw.split('#').next().unwrap_or("");
            let mut toks = body.split_whitespace();
            let directive = toks.next()?;
            Some(Line {
                no: i + 1,
                directive,
                args: toks.collect(),
            })
        })
        .collect();

    let mut kind = None;
    let mut decls = Decls {
        states: Vec::new(),
        values: Vec::new(),
    };
    let mut seen_states = false;
    let mut seen_init = false;
    let mut seen_target = false;

    // declarations first so that later directives may appear in any order
    for l in &lines {
        match l.directive {
            "semantics" => {
                if kind.is_some() {
                    return Err(syntax(l.no, "repeated `semantics` directive"));
                }
                let [word] = l.args[..] else {
                    return Err(syntax(l.no, "`semantics` takes exactly one argument"));
                };
                kind = Some(
                    SemanticsKind::from_keyword(word)
                        .ok_or_else(|| syntax(l.no, format!("unknown semantics `{word}`")))?,
                );
            }
            "states" | "values" => {
                let (list, what) = if l.directive == "states" {
                    seen_states = true;
                    (&mut decls.states, "state")
                } else {
                    (&mut decls.values, "value")
                };
                for &name in &l.args {
                    if !is_ident(name) {
                        return Err(syntax(l.no, format!("invalid identifier `{name}`")));
                    }
                    if list.iter().any(|s| s == name) {
                        return Err(ParseError::Duplicate {
                            line: l.no,
                            what,
                            name: name.into(),
                        });
                    }
                    list.push(name.to_string());
                }
            }
            "init" => seen_init = true,
            "target" => seen_target = true,
            "store_init" | "trans" => {}
            other => return Err(syntax(l.no, format!("unknown directive `{other}`"))),
        }
    }
    let kind = kind.ok_or(ParseError::Missing("semantics"))?;
    if !seen_states {
        return Err(ParseError::Missing("states"));
    }
    if !seen_init {
        return Err(ParseError::Missing("init"));
    }
    if !seen_target {
        return Err(ParseError::Missing("target"));
    }

    let n = decls.states.len();
    let mut counts: Vec<Option<Count>> = vec![None; n];
    let mut demand: Vec<Option<u32>> = vec![None; n];
    let mut store0 = None;
    let mut transitions = Vec::new();

    for l in &lines {
        match l.directive {
            "init" => {
                for &arg in &l.args {
                    let (name, amount) = arg
                        .split_once('=')
                        .ok_or_else(|| syntax(l.no, format!("expected `state=count`, got `{arg}`")))?;
                    let q = decls.state(l.no, name)?;
                    let c = match amount {
                        "omega" | "ω" => Count::Omega,
                        k => Count::Fin(k.parse().map_err(|_| syntax(l.no, format!("invalid count `{k}`")))?),
                    };
                    if counts[q].replace(c).is_some() {
                        return Err(ParseError::Duplicate {
                            line: l.no,
                            what: "init entry",
                            name: name.into(),
                        });
                    }
                }
            }
            "target" => {
                for &arg in &l.args {
                    let (name, k) = match arg.split_once(">=") {
                        Some((name, k)) => (
                            name,
                            k.parse::<u32>()
                                .map_err(|_| syntax(l.no, format!("invalid demand `{k}`")))?,
                        ),
                        None => (arg, 1),
                    };
                    let q = decls.state(l.no, name)?;
                    if demand[q].replace(k).is_some() {
                        return Err(ParseError::Duplicate {
                            line: l.no,
                            what: "target entry",
                            name: name.into(),
                        });
                    }
                }
            }
            "store_init" => {
                if !kind.has_store() {
                    return Err(syntax(
                        l.no,
                        format!("`store_init` is not allowed with semantics {kind}"),
                    ));
                }
                if store0.is_some() {
                    return Err(syntax(l.no, "repeated `store_init` directive"));
                }
                let [v] = l.args[..] else {
                    return Err(syntax(l.no, "`store_init` takes exactly one value"));
                };
                store0 = Some(decls.value(l.no, v)?);
            }
            "trans" => {
                let [src, label, dst] = l.args[..] else {
                    return Err(syntax(l.no, "`trans` takes <state> <label> <state>"));
                };
                transitions.push(Transition {
                    source: decls.state(l.no, src)?,
                    label: decls.label(l.no, label)?,
                    target: decls.state(l.no, dst)?,
                });
            }
            _ => {}
        }
    }
    if kind.has_store() && store0.is_none() {
        return Err(ParseError::Missing("store_init"));
    }

    Ok(TemplateAutomaton {
        kind,
        states: decls.states,
        values: decls.values,
        transitions,
        init: InitialSpec {
            counts: counts.into_iter().map(|c| c.unwrap_or(Count::ZERO)).collect(),
            store0,
        },
        target: TargetSpec {
            demand: demand.into_iter().map(|d| d.unwrap_or(0)).collect(),
        },
    })
}
