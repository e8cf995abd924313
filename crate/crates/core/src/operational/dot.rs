use std::fmt::Write;

use num_traits::{One, Zero};

use super::{Action, Rmdp};
use crate::numeric::format_rational;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering; nodes and edges are emitted in index order.
pub fn export_dot(m: &Rmdp) -> String {
    let mut out = String::from("digraph rmdp {\n  rankdir=TB;\n  node [shape=box, fontsize=10];\n");
    for (i, s) in m.states.iter().enumerate() {
        let mut label = match &s.origin {
            Some(o) => format!("{i}: {o}"),
            None => format!("{i}"),
        };
        if !s.labels.is_empty() {
            let names: Vec<&str> = s.labels.iter().map(|l| l.name()).collect();
            write!(label, "\\n{{{}}}", names.join(", ")).unwrap();
        }
        if !s.reward.is_zero() {
            write!(label, "\\nreward {}", format_rational(&s.reward)).unwrap();
        }
        let mut attrs = format!("label=\"{}\"", escape(&label).replace("\\\\n", "\\n"));
        if i == m.initial {
            attrs.push_str(", penwidth=2");
        }
        if s.choices.is_empty() {
            attrs.push_str(", style=dashed");
        }
        writeln!(out, "  s{i} [{attrs}];").unwrap();
    }
    for (i, s) in m.states.iter().enumerate() {
        for c in &s.choices {
            for (t, p) in &c.dist {
                let label = match (c.action, p.is_one()) {
                    (Action::Unique, true) => String::new(),
                    (Action::Unique, false) => format_rational(p),
                    (a, true) => a.name().to_string(),
                    (a, false) => format!("{}: {}", a.name(), format_rational(p)),
                };
                if label.is_empty() {
                    writeln!(out, "  s{i} -> s{t};").unwrap();
                } else {
                    writeln!(out, "  s{i} -> s{t} [label=\"{label}\"];").unwrap();
                }
            }
        }
    }
    out.push_str("}\n");
    out
}
