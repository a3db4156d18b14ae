use super::{AppIR, CallGraph, EventKind};
use std::collections::BTreeSet;
use std::fmt::Write;

fn tree(g: &CallGraph, method: &str, depth: usize, on_path: &mut BTreeSet<String>, out: &mut String) {
    let _ = writeln!(out, "{}{}", "  ".repeat(depth + 1), method);
    if !on_path.insert(method.to_string()) {
        return;
    }
    let mut seen = BTreeSet::new();
    for e in g.edges.iter().filter(|e| e.caller == method) {
        if seen.insert(e.callee.as_str()) {
            tree(g, &e.callee, depth + 1, on_path, out);
        }
    }
    on_path.remove(method);
}

/// Human-readable listing of permissions, subscriptions and call graphs.
pub fn render_ir(ir: &AppIR) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "app {}", ir.app);
    for p in &ir.permissions {
        let _ = writeln!(out, "input ({}, {}, {})", p.identifier, p.platform_name, p.taint_label);
    }
    for s in &ir.subscriptions {
        match s.kind {
            EventKind::WebServiceEvent => {
                let _ = writeln!(out, "mapping({}, {})", s.event_name, s.handler);
            }
            EventKind::TimerEvent if s.device.name() != "location" => {
                let _ = writeln!(out, "schedule({}, {})", s.event_name, s.handler);
            }
            _ => {
                let _ = writeln!(out, "subscribe({}, {}, {})", s.device.name(), s.event_name, s.handler);
            }
        }
    }
    for g in &ir.call_graphs {
        let _ = writeln!(out, "entry {}", g.entry);
        let mut seen = BTreeSet::new();
        for e in g.edges.iter().filter(|e| e.caller == g.entry) {
            if seen.insert(e.callee.as_str()) {
                tree(g, &e.callee, 0, &mut BTreeSet::from([g.entry.clone()]), &mut out);
            }
        }
    }
    out
}
