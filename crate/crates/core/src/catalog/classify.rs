use super::{ContentArgs, SinkKind, TaintCatalog, TaintLabel};
use crate::frontend::ast::{AstNode, NodeKind};
use crate::frontend::scope::{Binding, ScopedAst};
use crate::ir::AppIR;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceMatch {
    pub label: TaintLabel,
    /// Source-like text of the access, without call arguments.
    pub api: String,
}

#[derive(Debug, Clone)]
pub struct SinkMatch<'a> {
    pub api: String,
    pub kind: SinkKind,
    pub recipients: Vec<&'a AstNode>,
    pub content: Vec<&'a AstNode>,
    /// Lone argument of an Internet call that may name a request map.
    pub request_arg: Option<&'a AstNode>,
}

/// `recv.name` for accesses and calls, the plain name otherwise.
pub fn access_text(n: &AstNode) -> String {
    match n.kind {
        NodeKind::PropertyAccess | NodeKind::MethodCall => match n.receiver() {
            Some(r) => format!("{}.{}", access_text(r), n.text),
            None => n.text.clone(),
        },
        NodeKind::Identifier => n.text.clone(),
        _ => n.render(),
    }
}

enum Receiver {
    Qualified(Vec<String>),
    External,
}

fn receiver_class(r: &AstNode, ir: &AppIR, method: &str) -> Receiver {
    let plain = Receiver::Qualified(Vec::new());
    match r.kind {
        NodeKind::Identifier => match ir.ast.binding(r.id) {
            Some(Binding::Input(i)) => match ir.ast.input(i) {
                Some(info) if info.is_device() => Receiver::Qualified(vec!["device".into(), info.type_text.clone()]),
                _ => plain,
            },
            Some(Binding::Platform(p)) if p == "location" => Receiver::Qualified(vec!["location".into()]),
            Some(Binding::Platform(p)) if p == "params" || p == "request" => Receiver::External,
            Some(Binding::Local { name, .. }) if ir.is_external_param(method, name) => Receiver::External,
            Some(Binding::Local { name, .. }) if ir.is_event_param(method, name) => {
                Receiver::Qualified(vec!["event".into()])
            }
            _ => plain,
        },
        NodeKind::PropertyAccess if r.text == "device" => match r.receiver().map(|rr| receiver_class(rr, ir, method)) {
            Some(Receiver::External) => Receiver::External,
            _ => Receiver::Qualified(vec!["device".into()]),
        },
        _ => match r.receiver().map(|rr| receiver_class(rr, ir, method)) {
            Some(Receiver::External) => Receiver::External,
            _ => plain,
        },
    }
}

/// Source label of one access expression evaluated in `method`, when the
/// catalog names it. External data (HTTP responses, request parameters) is
/// never a source.
pub fn classify_source(access: &AstNode, ir: &AppIR, method: &str, cat: &TaintCatalog) -> Option<SourceMatch> {
    let hit = |qs: &[String], name: &str, api: String| {
        let q: Vec<&str> = qs.iter().map(String::as_str).collect();
        cat.lookup_source(&q, name).map(|e| SourceMatch { label: e.label, api })
    };
    match access.kind {
        NodeKind::Identifier => match ir.ast.binding(access.id)? {
            Binding::Input(i) => {
                let info = ir.ast.input(i)?;
                hit(&["input".into()], &info.type_text, info.name.clone())
            }
            Binding::Platform(p) if p == "location" => Some(SourceMatch {
                label: TaintLabel::Location,
                api: p.clone(),
            }),
            Binding::Platform(p) if p == "state" || p == "atomicState" => hit(&["state".into()], p, p.clone()),
            _ => None,
        },
        NodeKind::PropertyAccess | NodeKind::MethodCall => {
            if let Some(Binding::StateField { store, field }) = ir.ast.binding(access.id) {
                return hit(&["state".into()], field, format!("{store}.{field}"));
            }
            if let Some(Binding::Input(i)) = ir.ast.binding(access.id) {
                let info = ir.ast.input(i)?;
                return hit(&["input".into()], &info.type_text, info.name.clone());
            }
            match access.receiver() {
                Some(r) => match receiver_class(r, ir, method) {
                    Receiver::External => None,
                    Receiver::Qualified(qs) => hit(&qs, &access.text, access_text(access)),
                },
                None if access.kind == NodeKind::MethodCall && !ir.ast.has_method(&access.text) => {
                    hit(&[], &access.text, access.text.clone())
                }
                None => None,
            }
        }
        _ => None,
    }
}

/// Recipient (`uri`, `path`) and content values of a request map.
pub fn split_request_map(map: &AstNode) -> (Vec<&AstNode>, Vec<&AstNode>) {
    let mut rec = Vec::new();
    let mut content = Vec::new();
    for e in map.children.iter().filter(|e| e.kind == NodeKind::MapEntry) {
        let Some(v) = e.children.first() else { continue };
        if e.text == "uri" || e.text == "path" {
            rec.push(v);
        } else {
            content.push(v);
        }
    }
    (rec, content)
}

/// Sink spec of a call, with its recipient and content arguments split out.
pub fn classify_sink<'a>(call: &'a AstNode, ast: &ScopedAst, cat: &TaintCatalog) -> Option<SinkMatch<'a>> {
    if call.kind != NodeKind::MethodCall || call.receiver().is_some() || ast.has_method(&call.text) {
        return None;
    }
    let entry = cat.sink(&call.text)?;
    let spec = entry.spec;
    let mut m = SinkMatch {
        api: call.text.clone(),
        kind: spec.kind,
        recipients: Vec::new(),
        content: Vec::new(),
        request_arg: None,
    };
    let pos: Vec<&AstNode> = call.positional_args().collect();
    let named = call.args().iter().any(|a| a.kind == NodeKind::MapEntry);
    if spec.kind == SinkKind::Internet {
        if named && pos.is_empty() {
            let (r, c) = split_request_map(call.children.last()?);
            m.recipients = r;
            m.content = c;
            return Some(m);
        }
        if pos.len() == 1 {
            match pos[0].kind {
                NodeKind::MapLiteral => {
                    let (r, c) = split_request_map(pos[0]);
                    m.recipients = r;
                    m.content = c;
                    return Some(m);
                }
                NodeKind::Identifier => m.request_arg = Some(pos[0]),
                _ => {}
            }
        }
    }
    for (i, a) in pos.iter().enumerate() {
        if Some(i) == spec.recipient {
            m.recipients.push(a);
        } else {
            match spec.content {
                Some(ContentArgs::All) => m.content.push(a),
                Some(ContentArgs::Index(c)) if c == i => m.content.push(a),
                _ => {}
            }
        }
    }
    Some(m)
}
