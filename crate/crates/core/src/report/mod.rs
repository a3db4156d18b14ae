//! Warnings with recipient/content attribution, report statistics and rendering.

use crate::catalog::{SinkKind, TaintCatalog, TaintLabel};
use crate::engine::{shortest_by_key, Analyzer, Dep, DepItem, FlowPath, Origin, SinkSeed, Var};
use crate::frontend::ast::{AstNode, NodeKind};
use crate::frontend::scope::Binding;
use crate::ir::{AppIR, EventKind, IcfgKind, NodeId};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};
use std::str::FromStr;

/// Longest content summary, in characters.
pub const SUMMARY_LIMIT: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Attribution {
    User,
    Developer,
    External,
    #[serde(rename = "unknown")]
    Unknown,
}

impl Attribution {
    pub fn as_str(self) -> &'static str {
        match self {
            Attribution::User => "User",
            Attribution::Developer => "Developer",
            Attribution::External => "External",
            Attribution::Unknown => "unknown",
        }
    }

    /// The most external of a set of origins.
    fn from_origins(o: &BTreeSet<Origin>) -> Attribution {
        if o.contains(&Origin::External) {
            Attribution::External
        } else if o.contains(&Origin::User) {
            Attribution::User
        } else if o.contains(&Origin::Developer) {
            Attribution::Developer
        } else {
            Attribution::Unknown
        }
    }
}

impl fmt::Display for Attribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Who determines the value of `expr`, evaluated at ICFG node `node`.
pub fn attribute(expr: &AstNode, node: NodeId, ir: &AppIR, cat: &TaintCatalog) -> Attribution {
    Attribution::from_origins(&Analyzer::new(ir, cat).origins(node, expr.id))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRef {
    pub line: u32,
    pub api: String,
    pub label: TaintLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopRef {
    pub line: u32,
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkRef {
    pub line: u32,
    pub api: String,
    pub kind: SinkKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recipient {
    pub text: String,
    pub attribution: Attribution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Content {
    pub summary: String,
    pub attribution: Attribution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub source: SourceRef,
    pub hops: Vec<HopRef>,
    pub sink: SinkRef,
    pub labels: BTreeSet<TaintLabel>,
    pub recipient: Recipient,
    pub content: Content,
    pub implicit: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Features {
    pub reflection: bool,
    pub state_variables: bool,
    pub closures: bool,
    pub web_service: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Stats {
    pub labels: BTreeMap<TaintLabel, usize>,
    pub sinks: BTreeMap<String, usize>,
    pub sink_kinds: BTreeMap<SinkKind, usize>,
    pub features: Features,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub app: String,
    pub warnings: Vec<Warning>,
    pub stats: Stats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected text or json)")),
        }
    }
}

/// Labels of every source an expression's value can come from.
fn labels_of(an: &Analyzer<'_>, node: NodeId, e: &AstNode) -> BTreeSet<TaintLabel> {
    let mut out = BTreeSet::new();
    let mut seen = BTreeSet::new();
    let mut stack: Vec<DepItem> = an.expr_deps(e, node);
    while let Some(d) = stack.pop() {
        if !seen.insert(d.clone()) {
            continue;
        }
        match &d.dep {
            Dep::Source(s) => {
                out.insert(s.label);
            }
            Dep::Var(Var::Input(i)) => {
                if let Some(s) = an.input_source(i) {
                    out.insert(s.label);
                }
            }
            Dep::Var(v) => {
                for r in an.reaching(d.node, v) {
                    stack.extend(r.deps);
                }
            }
        }
    }
    out
}

fn placeholder(labels: &BTreeSet<TaintLabel>) -> String {
    let names: Vec<&str> = labels.iter().map(|l| l.as_str()).collect();
    format!("<{}>", names.join("|"))
}

fn summarize(an: &Analyzer<'_>, node: NodeId, e: &AstNode, out: &mut String) {
    match e.kind {
        NodeKind::Identifier | NodeKind::PropertyAccess | NodeKind::MethodCall | NodeKind::IndexExpr => {
            let l = labels_of(an, node, e);
            if l.is_empty() {
                out.push_str(&e.render());
            } else {
                out.push_str(&placeholder(&l));
            }
        }
        NodeKind::InterpolatedString => {
            out.push('"');
            for part in &e.children {
                match part.str_value() {
                    Some(s) if part.kind == NodeKind::Literal => out.push_str(s),
                    _ => {
                        let l = labels_of(an, node, part);
                        if l.is_empty() {
                            out.push_str("${");
                            out.push_str(&part.render());
                            out.push('}');
                        } else {
                            out.push_str(&placeholder(&l));
                        }
                    }
                }
            }
            out.push('"');
        }
        NodeKind::BinaryExpr if e.children.len() == 2 => {
            summarize(an, node, &e.children[0], out);
            let _ = write!(out, " {} ", e.text);
            summarize(an, node, &e.children[1], out);
        }
        NodeKind::MapLiteral | NodeKind::ListLiteral => {
            out.push('[');
            for (i, c) in e.children.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                summarize(an, node, c, out);
            }
            out.push(']');
        }
        NodeKind::MapEntry => {
            let _ = write!(out, "{}: ", e.text);
            if let Some(v) = e.children.first() {
                summarize(an, node, v, out);
            }
        }
        _ => out.push_str(&e.render()),
    }
}

fn truncate(s: &str) -> String {
    if s.chars().count() <= SUMMARY_LIMIT {
        s.to_string()
    } else {
        let mut t: String = s.chars().take(SUMMARY_LIMIT - 3).collect();
        t.push_str("...");
        t
    }
}

fn literal_text(e: &AstNode) -> String {
    e.str_value().map(str::to_string).unwrap_or_else(|| e.render())
}

fn recipient_of(an: &Analyzer<'_>, seed: &SinkSeed) -> Recipient {
    if seed.external_recipient {
        return Recipient {
            text: "web-service requester".into(),
            attribution: Attribution::External,
        };
    }
    if seed.recipients.is_empty() {
        return Recipient {
            text: "app notification subscribers".into(),
            attribution: Attribution::User,
        };
    }
    let mut origins = BTreeSet::new();
    let mut texts = Vec::new();
    for r in &seed.recipients {
        let e = an.ir.ast_node(r.ast);
        texts.push(literal_text(e));
        origins.extend(an.origins(r.node, r.ast));
    }
    Recipient {
        text: texts.join(", "),
        attribution: Attribution::from_origins(&origins),
    }
}

fn content_of(an: &Analyzer<'_>, seed: &SinkSeed) -> Content {
    let mut origins = BTreeSet::new();
    let mut parts = Vec::new();
    for c in &seed.content {
        let mut s = String::new();
        summarize(an, c.node, an.ir.ast_node(c.ast), &mut s);
        parts.push(s);
        origins.extend(an.origins(c.node, c.ast));
    }
    Content {
        summary: truncate(&parts.join(", ")),
        attribution: Attribution::from_origins(&origins),
    }
}

fn features(ir: &AppIR) -> Features {
    Features {
        reflection: ir.call_graphs.iter().any(|g| !g.reflective_sites.is_empty()),
        state_variables: ir
            .ast
            .bindings
            .values()
            .any(|b| matches!(b, Binding::StateField { .. })),
        closures: ir
            .nodes
            .values()
            .any(|n| matches!(n.kind, IcfgKind::ClosureParam { .. })),
        web_service: ir.subscriptions.iter().any(|s| s.kind == EventKind::WebServiceEvent),
    }
}

/// Deterministic warning order: sink line, then source line, then the rest.
fn sort_key(w: &Warning) -> impl Ord + '_ {
    (
        w.sink.line,
        w.source.line,
        &w.sink.api,
        &w.source.api,
        w.source.label,
        w.implicit,
        w.hops.len(),
    )
}

/// One warning per feasible (source access, sink site, label) triple.
pub fn build_report(app: &str, ir: &AppIR, cat: &TaintCatalog, paths: &[FlowPath]) -> AnalysisReport {
    let an = Analyzer::new(ir, cat);
    let seeds = an.sink_seeds();
    let mut warnings = Vec::new();
    for p in shortest_by_key(paths).into_values() {
        let Some(seed) = seeds.iter().find(|s| s.site == p.sink) else {
            continue;
        };
        warnings.push(Warning {
            source: SourceRef {
                line: p.source.line,
                api: p.source.api.clone(),
                label: p.source.label,
            },
            hops: p
                .hops
                .iter()
                .map(|h| HopRef {
                    line: h.line,
                    id: h.id.clone(),
                })
                .collect(),
            sink: SinkRef {
                line: p.sink.line,
                api: p.sink.api.clone(),
                kind: p.sink.kind,
            },
            labels: BTreeSet::from([p.source.label]),
            recipient: recipient_of(&an, seed),
            content: content_of(&an, seed),
            implicit: p.via_implicit,
        });
    }
    warnings.sort_by(|a, b| sort_key(a).cmp(&sort_key(b)));
    let mut stats = Stats {
        features: features(ir),
        ..Stats::default()
    };
    for w in &warnings {
        for l in &w.labels {
            *stats.labels.entry(*l).or_default() += 1;
        }
        *stats.sinks.entry(w.sink.api.clone()).or_default() += 1;
        *stats.sink_kinds.entry(w.sink.kind).or_default() += 1;
    }
    AnalysisReport {
        app: app.to_string(),
        warnings,
        stats,
    }
}

fn render_text(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let n = r.warnings.len();
    let _ = writeln!(out, "app {}", r.app);
    let _ = writeln!(out, "{n} warning{}", if n == 1 { "" } else { "s" });
    for (i, w) in r.warnings.iter().enumerate() {
        let labels: Vec<&str> = w.labels.iter().map(|l| l.as_str()).collect();
        let chain: Vec<String> = w.hops.iter().map(|h| format!("{}:{}", h.line, h.id)).collect();
        let _ = writeln!(
            out,
            "[{}] {} -> {} ({}) at line {}{}",
            i + 1,
            labels.join(", "),
            w.sink.api,
            w.sink.kind,
            w.sink.line,
            if w.implicit { " [implicit]" } else { "" }
        );
        let _ = writeln!(
            out,
            "    source:    {}:{} ({})",
            w.source.line, w.source.api, w.source.label
        );
        let _ = writeln!(out, "    path:      {} → {}", chain.join(" → "), w.sink.api);
        let _ = writeln!(out, "    recipient: {} ({})", w.recipient.text, w.recipient.attribution);
        let _ = writeln!(out, "    content:   {} ({})", w.content.summary, w.content.attribution);
    }
    out
}

pub fn render(report: &AnalysisReport, format: Format) -> String {
    match format {
        Format::Text => render_text(report),
        Format::Json => serde_json::to_string(report).expect("reports serialize"),
    }
}

/// Several reports: text blocks separated by blank lines, or one JSON array.
pub fn render_all(reports: &[AnalysisReport], format: Format) -> String {
    match format {
        Format::Text => reports.iter().map(render_text).collect::<Vec<_>>().join("\n"),
        Format::Json => serde_json::to_string(reports).expect("reports serialize"),
    }
}

pub fn parse_json(text: &str) -> Result<AnalysisReport, serde_json::Error> {
    serde_json::from_str(text)
}
