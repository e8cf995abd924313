//! Line-oriented text format for explicit models:
//!
//! ```text
//! states 3 initial 0
//! state 0 labels {} reward 0
//! state 1 labels {term} reward 5/2
//! state 2 labels {sink} reward 0
//! trans 0 unique { 1:1 }
//! trans 1 unique { 2:1 }
//! trans 2 unique { 2:1 }
//! ```
//!
//! Lines starting with `#` or `//` are comments. States without `trans`
//! lines are frontier states.

use std::collections::BTreeSet;
use std::fmt::Write;

use num_traits::Zero;

use super::{Action, Choice, Label, ModelState, Rmdp};
use crate::numeric::format_rational;
use crate::{parse_rational, Error, Rational, Result};

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

fn parse_index(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| format_err(line, format!("expected {what}")))
}

fn parse_label(name: &str, line: usize) -> Result<Label> {
    match name {
        "term" | "✓" => Ok(Label::Term),
        "bad" | "↯" => Ok(Label::Bad),
        "sink" => Ok(Label::Sink),
        other => Err(format_err(line, format!("unknown label `{other}`"))),
    }
}

fn braced(rest: &str, line: usize) -> Result<(&str, &str)> {
    let rest = rest.trim_start();
    let inner = rest
        .strip_prefix('{')
        .ok_or_else(|| format_err(line, "expected `{`"))?;
    let close = inner
        .find('}')
        .ok_or_else(|| format_err(line, "missing `}`"))?;
    Ok((&inner[..close], &inner[close + 1..]))
}

/// Parses and validates a model.
pub fn load_explicit(text: &str) -> Result<Rmdp> {
    let mut header: Option<(usize, usize)> = None;
    let mut states: Vec<Option<ModelState>> = Vec::new();
    let mut pending: Vec<(usize, usize, Choice)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') || l.starts_with("//") {
            continue;
        }
        let (keyword, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        match keyword {
            "states" => {
                if header.is_some() {
                    return Err(format_err(line, "duplicate header"));
                }
                let mut it = rest.split_whitespace();
                let count = parse_index(it.next(), line, "state count")?;
                if it.next() != Some("initial") {
                    return Err(format_err(line, "expected `initial`"));
                }
                let init = parse_index(it.next(), line, "initial state")?;
                if it.next().is_some() {
                    return Err(format_err(line, "trailing input"));
                }
                header = Some((count, init));
                states = vec![None; count];
            }
            "state" => {
                let Some((count, _)) = header else {
                    return Err(format_err(line, "`state` before header"));
                };
                let (idx, rest) = rest.trim_start().split_once(char::is_whitespace).unwrap_or((rest, ""));
                let idx = parse_index(Some(idx), line, "state index")?;
                if idx >= count {
                    return Err(format_err(line, format!("state {idx} out of range")));
                }
                let rest = rest
                    .trim_start()
                    .strip_prefix("labels")
                    .ok_or_else(|| format_err(line, "expected `labels`"))?;
                let (names, rest) = braced(rest, line)?;
                let mut labels = BTreeSet::new();
                for name in names.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    labels.insert(parse_label(name, line)?);
                }
                let reward = rest
                    .trim_start()
                    .strip_prefix("reward")
                    .ok_or_else(|| format_err(line, "expected `reward`"))?;
                let reward = parse_rational(reward)
                    .ok_or_else(|| format_err(line, "malformed reward"))?;
                if states[idx].is_some() {
                    return Err(format_err(line, format!("state {idx} declared twice")));
                }
                states[idx] = Some(ModelState {
                    origin: None,
                    labels,
                    reward,
                    choices: Vec::new(),
                });
            }
            "trans" => {
                if header.is_none() {
                    return Err(format_err(line, "`trans` before header"));
                }
                let mut parts = rest.trim_start().splitn(3, char::is_whitespace);
                let idx = parse_index(parts.next(), line, "state index")?;
                let action = match parts.next() {
                    Some("left") => Action::Left,
                    Some("right") => Action::Right,
                    Some("unique") => Action::Unique,
                    _ => return Err(format_err(line, "expected action left, right or unique")),
                };
                let (body, tail) = braced(parts.next().unwrap_or(""), line)?;
                if !tail.trim().is_empty() {
                    return Err(format_err(line, "trailing input"));
                }
                let mut dist: Vec<(usize, Rational)> = Vec::new();
                for entry in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let (t, p) = entry
                        .split_once(':')
                        .ok_or_else(|| format_err(line, "expected `target:probability`"))?;
                    let t = parse_index(Some(t.trim()), line, "target index")?;
                    let p = parse_rational(p)
                        .ok_or_else(|| format_err(line, "malformed probability"))?;
                    if dist.iter().any(|(u, _)| *u == t) {
                        return Err(format_err(line, format!("target {t} repeated")));
                    }
                    dist.push((t, p));
                }
                dist.sort_by_key(|(t, _)| *t);
                pending.push((line, idx, Choice { action, dist }));
            }
            other => return Err(format_err(line, format!("unknown keyword `{other}`"))),
        }
    }
    let (count, initial) = header.ok_or_else(|| format_err(1, "missing header"))?;
    let mut states: Vec<ModelState> = states
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| Error::Invariant(format!("state {i} is not declared"))))
        .collect::<Result<_>>()?;
    for (line, idx, choice) in pending {
        if idx >= count {
            return Err(format_err(line, format!("state {idx} out of range")));
        }
        let s = &mut states[idx];
        if s.choices.iter().any(|c| c.action == choice.action) {
            return Err(format_err(line, format!("action {} repeated", choice.action)));
        }
        s.choices.push(choice);
        s.choices.sort_by_key(|c| c.action);
    }
    let m = Rmdp { states, initial };
    m.validate()?;
    Ok(m)
}

fn format_prob(p: &Rational) -> String {
    if p.is_zero() {
        "0".into()
    } else {
        format_rational(p)
    }
}

/// Canonical text of a model; `load_explicit(&save_explicit(m)) == m` up to
/// state origins.
pub fn save_explicit(m: &Rmdp) -> String {
    let mut out = format!("states {} initial {}\n", m.len(), m.initial);
    for (i, s) in m.states.iter().enumerate() {
        let names: Vec<&str> = s.labels.iter().map(|l| l.name()).collect();
        writeln!(
            out,
            "state {i} labels {{{}}} reward {}",
            names.join(", "),
            format_rational(&s.reward)
        )
        .unwrap();
    }
    for (i, s) in m.states.iter().enumerate() {
        for c in &s.choices {
            let entries: Vec<String> = c
                .dist
                .iter()
                .map(|(t, p)| format!("{t}:{}", format_prob(p)))
                .collect();
            writeln!(out, "trans {i} {} {{ {} }}", c.action, entries.join(", ")).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "states 3 initial 0
# comment
state 0 labels {} reward 0
state 1 labels {term} reward 5/2
state 2 labels {sink} reward 0
trans 0 unique { 1:1 }
trans 1 unique { 2:1 }
trans 2 unique { 2:1 }
";

    #[test]
    fn round_trip() {
        let m = load_explicit(SMALL).unwrap();
        let text = save_explicit(&m);
        assert_eq!(load_explicit(&text).unwrap(), m);
        assert_eq!(save_explicit(&load_explicit(&text).unwrap()), text);
        assert!(!text.contains('#'));
    }

    #[test]
    fn rejects_bad_models() {
        let short = SMALL.replace("trans 0 unique { 1:1 }", "trans 0 unique { 1:9/10 }");
        assert!(matches!(load_explicit(&short), Err(Error::Invariant(_))));
        let dangling = SMALL.replace("trans 0 unique { 1:1 }", "trans 0 unique { 7:1 }");
        assert!(matches!(load_explicit(&dangling), Err(Error::Invariant(_))));
        let garbage = SMALL.replace("reward 5/2", "reward five");
        assert!(matches!(
            load_explicit(&garbage),
            Err(Error::Format { line: 4, .. })
        ));
    }
}
