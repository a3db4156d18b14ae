//! Backward dependence computation, path construction, pruning and implicit flows.

mod analyzer;
mod condition;
mod paths;

pub(crate) use analyzer::chain_base;
pub use analyzer::{Analyzer, Origin, Reach};
pub use condition::{satisfiable, Cmp, Conjunct, Constant, PathCondition};
pub use paths::{construct_paths, propagate_implicit, prune_paths};

use crate::catalog::{SinkKind, TaintCatalog, TaintLabel};
use crate::ir::{AppIR, NodeId};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A tracked identifier. Locals are per method, state fields per store.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Var {
    Local {
        method: String,
        name: String,
    },
    Input(String),
    State {
        store: String,
        field: String,
    },
    /// Return value of a user method.
    Ret(String),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Local { name, .. } | Var::Input(name) => f.write_str(name),
            Var::State { store, field } => write!(f, "{store}.{field}"),
            Var::Ret(m) => write!(f, "{m}()"),
        }
    }
}

/// A source access: the place a labeled value enters the app.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceSite {
    /// ICFG node of the access (input declarations use their AST id).
    pub node: NodeId,
    /// AST id of the access expression or input declaration.
    pub ast: NodeId,
    pub line: u32,
    pub label: TaintLabel,
    pub api: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dep {
    Var(Var),
    Source(SourceSite),
}

/// One right-hand-side dependency, used at `node`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DepItem {
    pub node: NodeId,
    pub dep: Dep,
}

impl fmt::Display for DepItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.dep {
            Dep::Var(v) => write!(f, "{v}"),
            Dep::Source(s) => f.write_str(&s.api),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaintedUse {
    pub node: NodeId,
    pub var: Var,
}

/// How a definition reaches a use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Via {
    /// Assignment in the same method.
    Local,
    /// Argument bound to a parameter at a call site (the def site).
    Param,
    /// Return value of the callee; the use node is the call site.
    Return,
    /// Handler parameter bound by the platform at the dummy main.
    Event,
    /// State field write, possibly in another entry point.
    State,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DepEntry {
    pub use_: TaintedUse,
    pub def_site: NodeId,
    pub deps: Vec<DepItem>,
    pub via: Via,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkSite {
    pub node: NodeId,
    /// AST id of the sink call, or of the returned expression for endpoints.
    pub ast: NodeId,
    pub line: u32,
    pub api: String,
    pub kind: SinkKind,
}

/// Argument expression of a sink, evaluated at `node`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkArg {
    pub node: NodeId,
    pub ast: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkSeed {
    pub site: SinkSite,
    pub content: Vec<SinkArg>,
    /// Empty with `external_recipient` set for web-service endpoints.
    pub recipients: Vec<SinkArg>,
    pub external_recipient: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DependenceRelation {
    pub entries: BTreeSet<DepEntry>,
    pub seeds: Vec<SinkSeed>,
    /// Number of worklist insertions made while computing the relation.
    pub insertions: usize,
    /// Uses already put on the worklist.
    #[serde(skip)]
    pub visited: BTreeSet<TaintedUse>,
}

impl DependenceRelation {
    /// Entries for a use.
    pub fn defs_of<'s>(&'s self, u: &TaintedUse) -> impl Iterator<Item = &'s DepEntry> + 's {
        let lo = DepEntry {
            use_: u.clone(),
            def_site: 0,
            deps: Vec::new(),
            via: Via::Local,
        };
        let u = u.clone();
        self.entries.range(lo..).take_while(move |e| e.use_ == u)
    }

    /// Entries rendered as `(line:id, line:[ids])`, in line order.
    pub fn render(&self, ir: &AppIR) -> Vec<String> {
        let line = |n: NodeId| ir.nodes.get(&n).map(|x| x.line).unwrap_or(0);
        let mut rows: Vec<(u32, u32, String)> = self
            .entries
            .iter()
            .map(|e| {
                let deps: Vec<String> = e.deps.iter().map(|d| d.to_string()).collect();
                let l = line(e.use_.node);
                let d = line(e.def_site);
                (l, d, format!("({l}:{}, {d}:[{}])", e.use_.var, deps.join(", ")))
            })
            .collect();
        rows.sort();
        rows.dedup();
        rows.into_iter().map(|r| r.2).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub node: NodeId,
    pub line: u32,
    pub id: String,
}

/// One link of a path, from a use back to its definition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub use_node: NodeId,
    pub def_site: NodeId,
    pub via: Via,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowPath {
    pub source: SourceSite,
    /// Source first, sink argument use last.
    pub hops: Vec<Hop>,
    pub sink: SinkSite,
    pub links: Vec<Link>,
    pub condition: PathCondition,
    pub feasible: bool,
    pub via_implicit: bool,
}

impl FlowPath {
    /// `line:id → line:id → …`
    pub fn chain(&self) -> String {
        self.hops
            .iter()
            .map(|h| format!("{}:{}", h.line, h.id))
            .collect::<Vec<_>>()
            .join(" → ")
    }

    /// Identity used for warnings: source access, sink site and label.
    pub fn key(&self) -> (NodeId, NodeId, TaintLabel) {
        (self.source.ast, self.sink.ast, self.source.label)
    }
}

/// Backward dependence from every sink content argument to its definitions.
pub fn compute_dependence(ir: &AppIR, cat: &TaintCatalog) -> DependenceRelation {
    Analyzer::new(ir, cat).dependence()
}

/// Dependence, candidate paths, pruning and (optionally) implicit flows.
pub fn analyze_flows(ir: &AppIR, cat: &TaintCatalog, implicit: bool) -> (DependenceRelation, Vec<FlowPath>) {
    let an = Analyzer::new(ir, cat);
    let dep = an.dependence();
    let mut paths = prune_paths(paths::construct_with(&an, &dep), ir);
    let explicit: BTreeSet<_> = paths.iter().map(FlowPath::key).collect();
    if implicit {
        let extra = prune_paths(paths::implicit_with(&an), ir);
        let mut seen = explicit;
        for p in extra {
            if seen.insert(p.key()) {
                paths.push(p);
            }
        }
    }
    (dep, paths)
}

/// Group feasible paths by warning key, keeping the shortest chain.
pub fn shortest_by_key(paths: &[FlowPath]) -> BTreeMap<(NodeId, NodeId, TaintLabel), &FlowPath> {
    let mut out: BTreeMap<_, &FlowPath> = BTreeMap::new();
    for p in paths.iter().filter(|p| p.feasible) {
        out.entry(p.key())
            .and_modify(|cur| {
                if (p.via_implicit, p.hops.len()) < (cur.via_implicit, cur.hops.len()) {
                    *cur = p;
                }
            })
            .or_insert(p);
    }
    out
}
