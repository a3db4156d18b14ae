use super::{
    Dep, DepEntry, DepItem, DependenceRelation, SinkArg, SinkSeed, SinkSite, SourceSite, TaintedUse, Var, Via,
};
use crate::catalog::{classify_sink, classify_source, split_request_map, TaintCatalog, TaintLabel};
use crate::frontend::ast::{AstNode, NodeKind};
use crate::frontend::scope::Binding;
use crate::ir::{walk_own, AppIR, EventKind, IcfgKind, IcfgNode, NodeId};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Calls whose final closure expression is the value of the call.
const VALUE_CLOSURE_CALLS: &[&str] = &[
    "collect",
    "collectEntries",
    "collectMany",
    "find",
    "findAll",
    "findResult",
    "grep",
    "inject",
    "sum",
    "max",
    "min",
    "sort",
    "groupBy",
    "countBy",
    "every",
    "any",
    "count",
    "findIndexOf",
];

/// Calls that update their receiver collection in place.
/// Call sites remembered by the state search.
const MAX_CONTEXT: usize = 3;

const MUTATING_CALLS: &[&str] = &["add", "addAll", "put", "putAll", "push", "leftShift", "plus"];

#[derive(Debug, Clone)]
struct Def {
    var: Var,
    deps: Vec<DepItem>,
    /// Value expressions `(node, ast id)` the definition reads.
    rhs: Vec<(NodeId, NodeId)>,
    strong: bool,
}

/// One definition reaching a use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reach {
    pub def_site: NodeId,
    pub deps: Vec<DepItem>,
    pub rhs: Vec<(NodeId, NodeId)>,
    pub via: Via,
}

/// Where a sink argument's value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Origin {
    Developer,
    User,
    External,
    /// Device, location or event data read from the platform.
    Platform,
    Unknown,
}

/// Per-app analysis context: definitions per node and the reaching-definition search.
pub struct Analyzer<'a> {
    pub ir: &'a AppIR,
    pub cat: &'a TaintCatalog,
    defs: BTreeMap<NodeId, Vec<Def>>,
    rets: BTreeMap<String, Vec<(NodeId, NodeId)>>,
}

/// Innermost receiver of a property, index or call chain.
pub(crate) fn chain_base(mut n: &AstNode) -> &AstNode {
    loop {
        match n.kind {
            NodeKind::PropertyAccess | NodeKind::IndexExpr | NodeKind::MethodCall => match n.receiver() {
                Some(r) => n = r,
                None => return n,
            },
            _ => return n,
        }
    }
}

impl<'a> Analyzer<'a> {
    pub fn new(ir: &'a AppIR, cat: &'a TaintCatalog) -> Self {
        let mut an = Analyzer {
            ir,
            cat,
            defs: BTreeMap::new(),
            rets: BTreeMap::new(),
        };
        let mut defs = BTreeMap::new();
        for n in ir.nodes.values() {
            let d = an.compute_defs(n);
            if !d.is_empty() {
                defs.insert(n.id, d);
            }
        }
        an.defs = defs;
        let mut rets: BTreeMap<String, Vec<(NodeId, NodeId)>> = BTreeMap::new();
        for n in ir.nodes.values() {
            if let Some(v) = an.returned_value(n) {
                rets.entry(n.method.clone()).or_default().push((n.id, v.id));
            }
        }
        an.rets = rets;
        an
    }

    fn method_of(&self, node: NodeId) -> &str {
        self.ir.nodes.get(&node).map(|n| n.method.as_str()).unwrap_or("")
    }

    /// Value produced by a node when it ends its method: `return e`, or a
    /// final expression statement that is not a plain action call.
    pub fn returned_value(&self, n: &IcfgNode) -> Option<&'a AstNode> {
        if n.kind != IcfgKind::Statement {
            return None;
        }
        let s = self.ir.ast_node(n.id);
        match s.kind {
            NodeKind::ReturnStmt => s.children.first(),
            NodeKind::ExprStmt if self.ir.intra_succs(n.id).next().is_none() => {
                let e = s.children.first()?;
                match e.kind {
                    NodeKind::MethodCall | NodeKind::Subscribe | NodeKind::Schedule | NodeKind::ReflectiveCall => {
                        let value_call = e.receiver().is_some() && VALUE_CLOSURE_CALLS.contains(&e.text.as_str());
                        let user_call = e.receiver().is_none() && self.ir.method_entry.contains_key(&e.text);
                        (value_call || user_call).then_some(e)
                    }
                    NodeKind::BinaryExpr if e.text == "<<" => None,
                    _ => Some(e),
                }
            }
            _ => None,
        }
    }

    fn source(&self, e: &AstNode, node: NodeId) -> Option<SourceSite> {
        let m = classify_source(e, self.ir, self.method_of(node), self.cat)?;
        Some(SourceSite {
            node,
            ast: e.id,
            line: e.location.line,
            label: m.label,
            api: m.api,
        })
    }

    /// Source site of an input declaration.
    pub fn input_source(&self, name: &str) -> Option<SourceSite> {
        let info = self.ir.ast.input(name)?;
        let label = self
            .ir
            .permissions
            .iter()
            .find(|p| p.identifier == info.name)
            .map(|p| p.taint_label)
            .or_else(|| self.cat.lookup_source(&["input"], &info.type_text).map(|e| e.label))?;
        Some(SourceSite {
            node: info.node_id,
            ast: info.node_id,
            line: info.location.line,
            label,
            api: info.name.clone(),
        })
    }

    /// Dependencies of an expression evaluated at `node`.
    pub fn expr_deps(&self, e: &AstNode, node: NodeId) -> Vec<DepItem> {
        let mut out = Vec::new();
        self.deps_into(e, node, &mut out);
        let mut seen = BTreeSet::new();
        out.retain(|d| seen.insert(d.clone()));
        out
    }

    fn push(out: &mut Vec<DepItem>, node: NodeId, dep: Dep) {
        out.push(DepItem { node, dep });
    }

    fn deps_into(&self, e: &AstNode, node: NodeId, out: &mut Vec<DepItem>) {
        let ast = &self.ir.ast;
        match e.kind {
            NodeKind::Literal | NodeKind::ClosureExpr | NodeKind::Subscribe | NodeKind::Schedule => {}
            NodeKind::Identifier => match ast.binding(e.id) {
                Some(Binding::Local { method, name }) => Self::push(
                    out,
                    node,
                    Dep::Var(Var::Local {
                        method: method.clone(),
                        name: name.clone(),
                    }),
                ),
                Some(Binding::Input(i)) => Self::push(out, node, Dep::Var(Var::Input(i.clone()))),
                Some(Binding::Platform(_)) => {
                    if let Some(s) = self.source(e, node) {
                        Self::push(out, node, Dep::Source(s));
                    }
                }
                _ => {}
            },
            NodeKind::PropertyAccess | NodeKind::MethodCall => {
                if let Some(Binding::StateField { store, field }) = ast.binding(e.id) {
                    if let Some(s) = self.source(e, node) {
                        Self::push(out, node, Dep::Source(s));
                    }
                    Self::push(
                        out,
                        node,
                        Dep::Var(Var::State {
                            store: store.clone(),
                            field: field.clone(),
                        }),
                    );
                    return;
                }
                if let Some(Binding::Input(i)) = ast.binding(e.id) {
                    Self::push(out, node, Dep::Var(Var::Input(i.clone())));
                    return;
                }
                if e.kind == NodeKind::MethodCall && e.receiver().is_none() && ast.has_method(&e.text) {
                    if self.ir.method_entry.contains_key(&e.text) {
                        Self::push(out, node, Dep::Var(Var::Ret(e.text.clone())));
                    }
                    return;
                }
                if let Some(s) = self.source(e, node) {
                    Self::push(out, node, Dep::Source(s));
                    return;
                }
                for c in &e.children {
                    self.deps_into(c, node, out);
                }
                if e.kind == NodeKind::MethodCall && VALUE_CLOSURE_CALLS.contains(&e.text.as_str()) {
                    for c in e.args().iter().filter(|a| a.kind == NodeKind::ClosureExpr) {
                        self.closure_value_deps(c, out);
                    }
                }
            }
            NodeKind::ReflectiveCall => {
                for (_, m) in self.ir.callees(node).iter().filter(|(site, _)| *site == e.id) {
                    Self::push(out, node, Dep::Var(Var::Ret(m.clone())));
                }
            }
            _ => {
                for c in &e.children {
                    self.deps_into(c, node, out);
                }
            }
        }
    }

    fn closure_value_deps(&self, c: &AstNode, out: &mut Vec<DepItem>) {
        let Some(last) = c.body().and_then(|b| b.children.last()) else {
            return;
        };
        if !self.ir.nodes.contains_key(&last.id) {
            return;
        }
        if let (NodeKind::ExprStmt | NodeKind::ReturnStmt, Some(v)) = (last.kind, last.children.first()) {
            self.deps_into(v, last.id, out);
        }
    }

    fn local_of(&self, n: &AstNode) -> Option<Var> {
        match self.ir.ast.binding(n.id)? {
            Binding::Local { method, name } => Some(Var::Local {
                method: method.clone(),
                name: name.clone(),
            }),
            Binding::StateField { store, field } => Some(Var::State {
                store: store.clone(),
                field: field.clone(),
            }),
            _ => None,
        }
    }

    /// Variable updated in place by a write through `target` (element or
    /// property of a local, or of a state field).
    fn weak_target(&self, target: &AstNode) -> Option<Var> {
        let mut n = target;
        loop {
            if let Some(v @ Var::State { .. }) = self.local_of(n) {
                return Some(v);
            }
            match n.kind {
                NodeKind::Identifier => return self.local_of(n),
                NodeKind::PropertyAccess | NodeKind::IndexExpr | NodeKind::MethodCall => n = n.receiver()?,
                _ => return None,
            }
        }
    }

    fn compute_defs(&self, n: &IcfgNode) -> Vec<Def> {
        let ir = self.ir;
        match &n.kind {
            IcfgKind::ClosureParam { params, call } => {
                let receiver = if *call != n.id {
                    ir.ast_node(*call).receiver()
                } else {
                    None
                };
                let external = params.iter().any(|p| ir.is_external_param(&n.method, p));
                let (deps, rhs) = match receiver {
                    Some(r) if !external => (self.expr_deps(r, n.id), vec![(n.id, r.id)]),
                    _ => (Vec::new(), Vec::new()),
                };
                params
                    .iter()
                    .map(|p| Def {
                        var: Var::Local {
                            method: n.method.clone(),
                            name: p.clone(),
                        },
                        deps: deps.clone(),
                        rhs: rhs.clone(),
                        strong: true,
                    })
                    .collect()
            }
            IcfgKind::Statement => {
                let s = ir.ast_node(n.id);
                match s.kind {
                    NodeKind::LocalDecl => {
                        let (deps, rhs) = match s.children.first() {
                            Some(v) => (self.expr_deps(v, n.id), vec![(n.id, v.id)]),
                            None => (Vec::new(), Vec::new()),
                        };
                        vec![Def {
                            var: Var::Local {
                                method: n.method.clone(),
                                name: s.text.clone(),
                            },
                            deps,
                            rhs,
                            strong: true,
                        }]
                    }
                    NodeKind::Assignment => {
                        let [target, value] = s.children.as_slice() else {
                            return Vec::new();
                        };
                        let mut deps = self.expr_deps(value, n.id);
                        let rhs = vec![(n.id, value.id)];
                        let direct = match target.kind {
                            NodeKind::Identifier => self.local_of(target),
                            NodeKind::PropertyAccess => match self.local_of(target) {
                                Some(v @ Var::State { .. }) => Some(v),
                                _ => None,
                            },
                            _ => None,
                        };
                        match direct {
                            Some(var) => {
                                if s.text != "=" {
                                    deps.push(DepItem {
                                        node: n.id,
                                        dep: Dep::Var(var.clone()),
                                    });
                                }
                                vec![Def {
                                    var,
                                    deps,
                                    rhs,
                                    strong: true,
                                }]
                            }
                            None => self
                                .weak_target(target)
                                .map(|var| Def {
                                    var,
                                    deps,
                                    rhs,
                                    strong: false,
                                })
                                .into_iter()
                                .collect(),
                        }
                    }
                    NodeKind::ExprStmt => {
                        let Some(e) = s.children.first() else {
                            return Vec::new();
                        };
                        match e.kind {
                            NodeKind::BinaryExpr if e.text == "<<" => {
                                let [l, r] = e.children.as_slice() else {
                                    return Vec::new();
                                };
                                self.weak_target(l)
                                    .map(|var| Def {
                                        var,
                                        deps: self.expr_deps(r, n.id),
                                        rhs: vec![(n.id, r.id)],
                                        strong: false,
                                    })
                                    .into_iter()
                                    .collect()
                            }
                            NodeKind::MethodCall if MUTATING_CALLS.contains(&e.text.as_str()) => {
                                let Some(r) = e.receiver() else {
                                    return Vec::new();
                                };
                                let mut deps = Vec::new();
                                let mut rhs = Vec::new();
                                for a in e.args() {
                                    deps.extend(self.expr_deps(a, n.id));
                                    rhs.push((n.id, a.id));
                                }
                                self.weak_target(r)
                                    .map(|var| Def {
                                        var,
                                        deps,
                                        rhs,
                                        strong: false,
                                    })
                                    .into_iter()
                                    .collect()
                            }
                            _ => Vec::new(),
                        }
                    }
                    _ => Vec::new(),
                }
            }
            _ => Vec::new(),
        }
    }

    fn defs_of<'s>(&'s self, node: NodeId, var: &'s Var) -> impl Iterator<Item = &'s Def> + 's {
        self.defs
            .get(&node)
            .into_iter()
            .flatten()
            .filter(move |d| &d.var == var)
    }

    /// Definitions of `var` reaching its use at `node`.
    pub fn reaching(&self, node: NodeId, var: &Var) -> Vec<Reach> {
        match var {
            Var::Local { method, name } => self.local_reach(node, method, name, var),
            Var::State { .. } => self.state_reach(node, var),
            Var::Ret(m) => self
                .rets
                .get(m)
                .into_iter()
                .flatten()
                .map(|&(r, v)| Reach {
                    def_site: r,
                    deps: self.expr_deps(self.ir.ast_node(v), r),
                    rhs: vec![(r, v)],
                    via: Via::Return,
                })
                .collect(),
            Var::Input(_) => Vec::new(),
        }
    }

    fn local_reach(&self, start: NodeId, method: &str, name: &str, var: &Var) -> Vec<Reach> {
        let entry = self.ir.method_entry.get(method).copied();
        let mut out = Vec::new();
        let mut bound = false;
        if Some(start) == entry {
            self.bind_params(method, name, &mut out);
            bound = true;
        }
        let mut seen = BTreeSet::new();
        let mut stack: Vec<NodeId> = self.ir.intra_preds(start).collect();
        while let Some(p) = stack.pop() {
            if !seen.insert(p) {
                continue;
            }
            let mut killed = false;
            for d in self.defs_of(p, var) {
                out.push(Reach {
                    def_site: p,
                    deps: d.deps.clone(),
                    rhs: d.rhs.clone(),
                    via: Via::Local,
                });
                killed |= d.strong;
            }
            if killed {
                continue;
            }
            if Some(p) == entry && !bound {
                self.bind_params(method, name, &mut out);
                bound = true;
            }
            stack.extend(self.ir.intra_preds(p));
        }
        out
    }

    /// Label carried by the platform-supplied parameters of a handler.
    fn event_label(&self, handler: &str) -> TaintLabel {
        let subs: Vec<_> = self.ir.subscriptions.iter().filter(|s| s.handler == handler).collect();
        if !subs.is_empty() && subs.iter().all(|s| s.kind == EventKind::ModeEvent) {
            TaintLabel::Location
        } else {
            TaintLabel::DeviceState
        }
    }

    fn bind_params(&self, method: &str, name: &str, out: &mut Vec<Reach>) {
        let ir = self.ir;
        let Some(decl) = ir.ast.method_decl(method) else { return };
        let Some((idx, param)) = decl.params().enumerate().find(|(_, p)| p.text == name) else {
            return;
        };
        if ir.is_event_param(method, name) {
            if let Some(d) = ir.dummy_main_of(method) {
                out.push(Reach {
                    def_site: d,
                    deps: vec![DepItem {
                        node: d,
                        dep: Dep::Source(SourceSite {
                            node: d,
                            ast: param.id,
                            line: param.location.line,
                            label: self.event_label(method),
                            api: name.to_string(),
                        }),
                    }],
                    rhs: Vec::new(),
                    via: Via::Event,
                });
            }
        }
        for n in ir.nodes.values() {
            for (site, callee) in &n.callees {
                if callee != method {
                    continue;
                }
                let call = ir.ast_node(*site);
                let arg = call.args().iter().filter(|a| a.kind != NodeKind::ClosureExpr).nth(idx);
                let (deps, rhs) = match arg {
                    Some(a) => (self.expr_deps(a, n.id), vec![(n.id, a.id)]),
                    None => (Vec::new(), Vec::new()),
                };
                out.push(Reach {
                    def_site: n.id,
                    deps,
                    rhs,
                    via: Via::Param,
                });
            }
        }
    }

    /// State definitions reaching `start`. Callees entered through a return
    /// edge are left only through the matching call site; a search that starts
    /// inside a method leaves it through every call site.
    fn state_reach(&self, start: NodeId, var: &Var) -> Vec<Reach> {
        use crate::ir::EdgeKind;
        let ir = self.ir;
        let mut out = Vec::new();
        let mut all_added = false;
        let mut seen = BTreeSet::new();
        let mut stack: Vec<(NodeId, Vec<NodeId>)> = Vec::new();
        let mut expand = |p: NodeId, ctx: &[NodeId], stack: &mut Vec<(NodeId, Vec<NodeId>)>, out: &mut Vec<Reach>| {
            for &(q, kind) in ir.preds(p) {
                match kind {
                    EdgeKind::Intra if ir.is_user_call_site(q) => {}
                    EdgeKind::Entry => {
                        if !all_added {
                            all_added = true;
                            for (&site, ds) in &self.defs {
                                for d in ds.iter().filter(|d| &d.var == var) {
                                    out.push(Reach {
                                        def_site: site,
                                        deps: d.deps.clone(),
                                        rhs: d.rhs.clone(),
                                        via: Via::State,
                                    });
                                }
                            }
                        }
                    }
                    EdgeKind::Return => {
                        let callee = &ir.node(q).method;
                        for c in ir.call_sites_of(callee) {
                            if ir.continuations.get(&c).is_some_and(|t| t.contains(&p)) {
                                let mut inner = ctx.to_vec();
                                if inner.len() == MAX_CONTEXT {
                                    inner.remove(0);
                                }
                                inner.push(c);
                                stack.push((q, inner));
                            }
                        }
                    }
                    EdgeKind::Call => match ctx.split_last() {
                        Some((&c, rest)) if c == q => stack.push((q, rest.to_vec())),
                        Some(_) => {}
                        None => stack.push((q, Vec::new())),
                    },
                    EdgeKind::Intra => stack.push((q, ctx.to_vec())),
                }
            }
        };
        expand(start, &[], &mut stack, &mut out);
        while let Some((p, ctx)) = stack.pop() {
            if !seen.insert((p, ctx.clone())) {
                continue;
            }
            let mut killed = false;
            for d in self.defs_of(p, var) {
                out.push(Reach {
                    def_site: p,
                    deps: d.deps.clone(),
                    rhs: d.rhs.clone(),
                    via: Via::State,
                });
                killed |= d.strong;
            }
            if !killed {
                expand(p, &ctx, &mut stack, &mut out);
            }
        }
        let mut uniq = BTreeSet::new();
        out.retain(|r| uniq.insert((r.def_site, r.via)));
        out
    }

    /// Expressions examined by a node: the statement, or the branch condition.
    pub fn own_roots(&self, n: &IcfgNode) -> Vec<&'a AstNode> {
        let a = self.ir.ast_node(n.id);
        match n.kind {
            IcfgKind::Statement => vec![a],
            IcfgKind::Branch => a.children.first().into_iter().collect(),
            _ => Vec::new(),
        }
    }

    fn resolve_request_map(&self, node: NodeId, arg: &AstNode) -> Option<(Vec<SinkArg>, Vec<SinkArg>)> {
        let var = self.local_of(arg)?;
        let reach = self.reaching(node, &var);
        if reach.is_empty() {
            return None;
        }
        let mut rec = Vec::new();
        let mut content = Vec::new();
        for r in &reach {
            let [(n, v)] = r.rhs.as_slice() else { return None };
            let map = self.ir.ast_node(*v);
            if map.kind != NodeKind::MapLiteral {
                return None;
            }
            let (rs, cs) = split_request_map(map);
            rec.extend(rs.into_iter().map(|a| SinkArg { node: *n, ast: a.id }));
            content.extend(cs.into_iter().map(|a| SinkArg { node: *n, ast: a.id }));
        }
        Some((rec, content))
    }

    /// Every sink call and web-service return of the ICFG.
    pub fn sink_seeds(&self) -> Vec<SinkSeed> {
        let ir = self.ir;
        let mut out = Vec::new();
        for n in ir.nodes.values() {
            for root in self.own_roots(n) {
                let mut calls = Vec::new();
                walk_own(root, &mut |c| {
                    if c.kind == NodeKind::MethodCall {
                        calls.push(c);
                    }
                });
                for c in calls {
                    let Some(m) = classify_sink(c, &ir.ast, self.cat) else {
                        continue;
                    };
                    let arg = |a: &AstNode| SinkArg { node: n.id, ast: a.id };
                    let mut recipients: Vec<SinkArg> = m.recipients.iter().map(|a| arg(a)).collect();
                    let mut content: Vec<SinkArg> = m.content.iter().map(|a| arg(a)).collect();
                    if let Some((r, c)) = m.request_arg.and_then(|a| self.resolve_request_map(n.id, a)) {
                        recipients = r;
                        content = c;
                    }
                    out.push(SinkSeed {
                        site: SinkSite {
                            node: n.id,
                            ast: c.id,
                            line: c.location.line,
                            api: m.api,
                            kind: m.kind,
                        },
                        content,
                        recipients,
                        external_recipient: false,
                    });
                }
            }
        }
        let mut handlers = BTreeSet::new();
        for s in ir.subscriptions.iter().filter(|s| s.kind == EventKind::WebServiceEvent) {
            let Some(kind) = s.verb.as_deref().and_then(|v| self.cat.endpoint(v)) else {
                continue;
            };
            if !handlers.insert((s.handler.clone(), s.event_name.clone())) {
                continue;
            }
            for n in ir.method_nodes(&s.handler) {
                if let Some(v) = self.returned_value(n) {
                    out.push(SinkSeed {
                        site: SinkSite {
                            node: n.id,
                            ast: v.id,
                            line: n.line,
                            api: s.event_name.clone(),
                            kind,
                        },
                        content: vec![SinkArg { node: n.id, ast: v.id }],
                        recipients: Vec::new(),
                        external_recipient: true,
                    });
                }
            }
        }
        out.sort_by_key(|s| (s.site.line, s.site.ast, s.site.api.clone()));
        out
    }

    /// Dependencies of a sink argument.
    pub fn arg_deps(&self, a: &SinkArg) -> Vec<DepItem> {
        self.expr_deps(self.ir.ast_node(a.ast), a.node)
    }

    /// Run the worklist from every sink content argument.
    pub fn dependence(&self) -> DependenceRelation {
        let seeds = self.sink_seeds();
        let mut rel = DependenceRelation::default();
        for s in &seeds {
            for a in &s.content {
                self.extend_dependence(&mut rel, &self.arg_deps(a));
            }
        }
        rel.seeds = seeds;
        rel
    }

    /// Add the dependence of further uses to `rel`; uses already visited are skipped.
    pub fn extend_dependence(&self, rel: &mut DependenceRelation, items: &[DepItem]) {
        let mut work = VecDeque::new();
        let enqueue = |items: &[DepItem], work: &mut VecDeque<TaintedUse>, rel: &mut DependenceRelation| {
            for d in items {
                let Dep::Var(v) = &d.dep else { continue };
                if matches!(v, Var::Input(_)) {
                    continue;
                }
                let u = TaintedUse {
                    node: d.node,
                    var: v.clone(),
                };
                if rel.visited.insert(u.clone()) {
                    rel.insertions += 1;
                    work.push_back(u);
                }
            }
        };
        enqueue(items, &mut work, rel);
        while let Some(u) = work.pop_front() {
            for r in self.reaching(u.node, &u.var) {
                enqueue(&r.deps, &mut work, rel);
                rel.entries.insert(DepEntry {
                    use_: u.clone(),
                    def_site: r.def_site,
                    deps: r.deps,
                    via: r.via,
                });
            }
        }
    }

    /// Dependencies of a branch condition.
    pub fn branch_deps(&self, branch: NodeId) -> Vec<DepItem> {
        match self.ir.ast_node(branch).children.first() {
            Some(c) => self.expr_deps(c, branch),
            None => Vec::new(),
        }
    }

    /// Origins of an expression's value, following definitions backward.
    pub fn origins(&self, node: NodeId, expr: NodeId) -> BTreeSet<Origin> {
        let mut out = BTreeSet::new();
        let mut seen_vars = BTreeSet::new();
        let mut stack = vec![(node, expr)];
        let mut seen = BTreeSet::new();
        while let Some((n, id)) = stack.pop() {
            if !seen.insert((n, id)) {
                continue;
            }
            let e = self.ir.ast_node(id);
            self.origin_step(n, e, &mut out, &mut stack, &mut seen_vars);
        }
        out
    }

    fn follow(
        &self,
        n: NodeId,
        var: Var,
        out: &mut BTreeSet<Origin>,
        stack: &mut Vec<(NodeId, NodeId)>,
        seen_vars: &mut BTreeSet<(NodeId, Var)>,
    ) {
        if !seen_vars.insert((n, var.clone())) {
            return;
        }
        let reach = self.reaching(n, &var);
        if reach.is_empty() && !matches!(var, Var::State { .. }) {
            out.insert(Origin::Unknown);
        }
        for r in reach {
            if r.via == Via::Event {
                out.insert(Origin::Platform);
            }
            stack.extend(r.rhs);
        }
    }

    fn origin_step(
        &self,
        n: NodeId,
        e: &AstNode,
        out: &mut BTreeSet<Origin>,
        stack: &mut Vec<(NodeId, NodeId)>,
        seen_vars: &mut BTreeSet<(NodeId, Var)>,
    ) {
        let ast = &self.ir.ast;
        let method = self.method_of(n).to_string();
        match e.kind {
            NodeKind::Literal => {
                out.insert(Origin::Developer);
            }
            NodeKind::Identifier => match ast.binding(e.id) {
                Some(Binding::Input(_)) => {
                    out.insert(Origin::User);
                }
                Some(Binding::Local { name, .. }) if self.ir.is_external_param(&method, name) => {
                    out.insert(Origin::External);
                }
                Some(Binding::Local { .. }) => {
                    if let Some(v) = self.local_of(e) {
                        self.follow(n, v, out, stack, seen_vars);
                    }
                }
                Some(Binding::Platform(p)) if p == "params" || p == "request" => {
                    out.insert(Origin::External);
                }
                Some(Binding::Platform(_)) => {
                    out.insert(Origin::Platform);
                }
                Some(Binding::Unresolved) | None => {
                    out.insert(Origin::Unknown);
                }
                Some(_) => {}
            },
            NodeKind::PropertyAccess | NodeKind::MethodCall | NodeKind::IndexExpr => {
                if let Some(Binding::StateField { .. }) = ast.binding(e.id) {
                    out.insert(Origin::Platform);
                    if let Some(v) = self.local_of(e) {
                        self.follow(n, v, out, stack, seen_vars);
                    }
                    return;
                }
                if let Some(Binding::Input(_)) = ast.binding(e.id) {
                    out.insert(Origin::User);
                    return;
                }
                if e.kind == NodeKind::MethodCall && e.receiver().is_none() && ast.has_method(&e.text) {
                    self.follow(n, Var::Ret(e.text.clone()), out, stack, seen_vars);
                    return;
                }
                if self.source(e, n).is_some() {
                    out.insert(Origin::Platform);
                    return;
                }
                for c in e.children.iter().filter(|c| c.kind != NodeKind::ClosureExpr) {
                    stack.push((n, c.id));
                }
            }
            NodeKind::ReflectiveCall => {
                for (_, m) in self.ir.callees(n).iter().filter(|(site, _)| *site == e.id) {
                    self.follow(n, Var::Ret(m.clone()), out, stack, seen_vars);
                }
            }
            NodeKind::ClosureExpr => {}
            _ => {
                for c in &e.children {
                    stack.push((n, c.id));
                }
            }
        }
    }
}
