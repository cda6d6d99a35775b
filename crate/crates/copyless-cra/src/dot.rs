//! Graphviz export for the three machine kinds. Output is deterministic:
//! nodes in declaration order, edges in map order.

use std::fmt::Write as _;

use crate::cra::Cra;
use crate::format::AutomatonDoc;
use crate::lookahead::CraRla;
use crate::weighted::WeightedAutomaton;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn edge_label(s: &str) -> String {
    quote(s)
}

pub fn cra_dot(a: &Cra) -> String {
    let mut out = String::from("digraph cra {\n  rankdir=LR;\n");
    let _ = writeln!(out, "  __start [shape=point];");
    for q in &a.states {
        let shape = if a.output.contains_key(q) { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "  {} [shape={shape}];", quote(q));
    }
    let _ = writeln!(out, "  __start -> {};", quote(&a.start));
    for ((q, sym), (q2, sigma)) in &a.delta {
        let text = sigma.to_string();
        let label = if text.is_empty() {
            format!("{sym}")
        } else {
            format!("{sym} / {text}")
        };
        let _ = writeln!(out, "  {} -> {} [label={}];", quote(q), quote(q2), edge_label(&label));
    }
    out.push_str("}\n");
    out
}

pub fn wa_dot(w: &WeightedAutomaton) -> String {
    let mut out = String::from("digraph wa {\n  rankdir=LR;\n");
    for q in &w.states {
        let label = format!("{q}\\nI={} F={}", w.initial_weight(q), w.final_weight(q));
        let _ = writeln!(out, "  {} [shape=circle,label=\"{label}\"];", quote(q));
    }
    for ((p, sym, q), weight) in &w.weights {
        let _ = writeln!(
            out,
            "  {} -> {} [label={}];",
            quote(p),
            quote(q),
            edge_label(&format!("{sym} / {weight}"))
        );
    }
    out.push_str("}\n");
    out
}

pub fn rla_dot(r: &CraRla) -> String {
    let mut out = String::from("digraph rla {\n  rankdir=LR;\n");
    let _ = writeln!(out, "  __start [shape=point];");
    for q in &r.states {
        let shape = if r.output.contains_key(q) { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "  {} [shape={shape}];", quote(q));
    }
    let _ = writeln!(out, "  __start -> {};", quote(&r.start));
    for ((q, lang), (q2, sigma)) in &r.trans {
        let text = sigma.to_string();
        let label = if text.is_empty() {
            format!("[{lang}]")
        } else {
            format!("[{lang}] / {text}")
        };
        let _ = writeln!(out, "  {} -> {} [label={}];", quote(q), quote(q2), edge_label(&label));
    }
    out.push_str("}\n");
    out
}

pub fn export_dot(doc: &AutomatonDoc) -> String {
    match doc {
        AutomatonDoc::Cra(a) => cra_dot(a),
        AutomatonDoc::Wa(w) => wa_dot(w),
        AutomatonDoc::Rla(r) => rla_dot(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_corpus;

    #[test]
    fn dot_output_is_deterministic_and_covers_edges() {
        let c = build_corpus();
        let d1 = cra_dot(&c.a1);
        assert_eq!(d1, cra_dot(&c.a1));
        assert!(d1.contains("digraph cra"));
        assert!(d1.contains("->"));
        let dw = wa_dot(&c.wa_prime);
        assert!(dw.contains("I=0"));
        let dr = rla_dot(&c.r1);
        assert!(dr.contains("[bump]"));
    }
}
