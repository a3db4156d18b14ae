mod common;

use iot_taint::catalog::TaintLabel;
use iot_taint::frontend::NodeKind;
use iot_taint::ir::{render_ir, EdgeKind, EventKind, IcfgKind};

#[test]
fn permissions_of_home_automation_app() {
    let ir = common::ir("sample_apps.groovy");
    let perms: Vec<(&str, TaintLabel)> = ir
        .permissions
        .iter()
        .map(|p| (p.identifier.as_str(), p.taint_label))
        .collect();
    for dev in ["presenceSensor", "theSwitches", "theDoor"] {
        assert!(perms.contains(&(dev, TaintLabel::DeviceInfo)), "{dev}: {perms:?}");
    }
    for user in ["fromTime", "toTime", "phone"] {
        assert!(perms.contains(&(user, TaintLabel::UserInput)), "{user}: {perms:?}");
    }
    assert!(perms.contains(&("location", TaintLabel::Location)));
}

#[test]
fn location_only_permission() {
    let ir = common::ir_of(
        "def installed() {\n  subscribe(location, \"mode\", h)\n}\ndef h(evt) {\n  def z = location.timeZone\n}\n",
    );
    let loc: Vec<_> = ir
        .permissions
        .iter()
        .filter(|p| p.taint_label == TaintLabel::Location)
        .collect();
    assert_eq!(loc.len(), 1);
    assert!(ir.permissions.iter().all(|p| p.identifier == "location"));
}

#[test]
fn subscriptions_and_call_graphs() {
    let ir = common::ir("sample_apps.groovy");
    let subs: Vec<(&str, &str, &str)> = ir
        .subscriptions
        .iter()
        .map(|s| (s.device.name(), s.event_name.as_str(), s.handler.as_str()))
        .collect();
    assert_eq!(
        subs,
        [
            ("presenceSensor", "present", "h1"),
            ("presenceSensor", "not present", "h2")
        ]
    );
    let h1 = ir.call_graphs.iter().find(|g| g.entry == "h1").unwrap();
    let e: Vec<(&str, bool)> = h1.edges.iter().map(|e| (e.callee.as_str(), e.conditional)).collect();
    assert_eq!(e, [("x", false)]);
    let h2 = ir.call_graphs.iter().find(|g| g.entry == "h2").unwrap();
    let mut e: Vec<(&str, bool)> = h2.edges.iter().map(|e| (e.callee.as_str(), e.conditional)).collect();
    e.sort();
    assert_eq!(e, [("y", false), ("z", true)]);
}

#[test]
fn icfg_has_dummy_mains_and_no_logging() {
    let ir = common::ir("sample_apps.groovy");
    assert_eq!(ir.dummy_mains.len(), 2);
    for n in ir.nodes.values() {
        if n.is_dummy() {
            continue;
        }
        let ast = ir.ast_node(n.id);
        assert!(!iot_taint::ir::is_log_call(ast), "log node at line {}", n.line);
    }
    let listing = render_ir(&ir);
    assert!(listing.contains("entry h1"), "{listing}");
    assert!(listing.contains("entry h2"), "{listing}");
}

#[test]
fn threshold_icfg_path() {
    let ir = common::ir("threshold.groovy");
    let at = |line: u32| ir.nodes.values().find(|n| n.line == line && !n.is_dummy()).unwrap().id;
    let (n14, n15, n16, n23) = (at(14), at(15), at(16), at(23));
    assert!(ir.intra.contains(&(n14, n15)));
    assert!(ir.intra.contains(&(n15, n16)));
    assert!(ir.calls.contains(&(n16, n23)));
    assert!(ir.reachable_from(n14).contains(&n23));
    assert!(ir.nodes.values().all(|n| n.line != 13));
}

#[test]
fn single_statement_handler() {
    let ir = common::ir_of("def installed() {\n  subscribe(app, h)\n}\ndef h() {\n  sendPush(\"hi\")\n}\n");
    assert_eq!(ir.dummy_mains.len(), 1);
    let dm = ir.dummy_mains[0];
    let stmts: Vec<_> = ir.nodes.values().filter(|n| !n.is_dummy()).collect();
    assert_eq!(stmts.len(), 1);
    assert_eq!(ir.succs(dm), [(stmts[0].id, EdgeKind::Entry)]);
    assert_eq!(ir.subscriptions[0].kind, EventKind::AppTouchEvent);
}

#[test]
fn web_service_mappings() {
    let ir = common::ir("home_blocks.groovy");
    let ws: Vec<(Option<&str>, &str, &str)> = ir
        .subscriptions
        .iter()
        .filter(|s| s.kind == EventKind::WebServiceEvent)
        .map(|s| (s.verb.as_deref(), s.event_name.as_str(), s.handler.as_str()))
        .collect();
    assert_eq!(
        ws,
        [
            (Some("GET"), "GET /switches", "listSwitches"),
            (Some("PUT"), "PUT /switches/:command", "updateSwitches")
        ]
    );
}

#[test]
fn reflective_site_reaches_every_method() {
    let ir = common::ir("home_blocks.groovy");
    let g = ir.call_graphs.iter().find(|g| g.entry == "getMethod").unwrap();
    assert_eq!(g.reflective_sites.len(), 1);
    let site = *g.reflective_sites.iter().next().unwrap();
    assert_eq!(ir.ast_node(site).kind, NodeKind::ReflectiveCall);
    let callees = g.callees_at(site);
    for m in [
        "foo",
        "bar",
        "listSwitches",
        "updateSwitches",
        "turnedOnHandler",
        "initialize",
    ] {
        assert!(callees.contains(m), "{m} missing from {callees:?}");
    }
}

#[test]
fn closures_lower_to_parameter_nodes() {
    let ir = common::ir("home_blocks.groovy");
    let cps: Vec<_> = ir
        .nodes
        .values()
        .filter_map(|n| match &n.kind {
            IcfgKind::ClosureParam { params, .. } => Some((n.method.as_str(), params.clone())),
            _ => None,
        })
        .collect();
    assert!(cps.contains(&("getMethod", vec!["resp".to_string()])), "{cps:?}");
    assert!(
        cps.contains(&("someEventHandler", vec!["switchVal".to_string()])),
        "{cps:?}"
    );
    assert!(ir
        .external_params
        .contains(&("getMethod".to_string(), "resp".to_string())));
}

#[test]
fn unknown_handler_is_an_error() {
    use iot_taint::catalog::TaintCatalog;
    use iot_taint::frontend::{parse_program, resolve_scopes, SourceProgram};
    let ast = parse_program(&SourceProgram::new(
        "x.groovy",
        "def installed() {\n  subscribe(app, nope)\n}\n",
    ))
    .unwrap();
    assert!(iot_taint::ir::AppIR::build(resolve_scopes(ast), &TaintCatalog::default_catalog()).is_err());
}
