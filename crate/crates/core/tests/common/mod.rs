#![allow(dead_code)]

pub mod oracle;
pub mod tables;

use iot_taint::catalog::TaintCatalog;
use iot_taint::frontend::{parse_program, resolve_scopes, AstNode, SourceProgram};
use iot_taint::ir::AppIR;
use iot_taint::report::AnalysisReport;
use iot_taint::{analyze, Options};

pub fn fixture_path(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn corpus_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/iotbench")
}

pub fn program(name: &str) -> SourceProgram {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    SourceProgram::new(name, text)
}

pub fn parse(name: &str) -> AstNode {
    parse_program(&program(name)).unwrap()
}

pub fn ir(name: &str) -> AppIR {
    AppIR::build(resolve_scopes(parse(name)), &TaintCatalog::default_catalog()).unwrap()
}

pub fn ir_of(text: &str) -> AppIR {
    let ast = parse_program(&SourceProgram::new("inline.groovy", text)).unwrap();
    AppIR::build(resolve_scopes(ast), &TaintCatalog::default_catalog()).unwrap()
}

pub fn report(name: &str, implicit: bool) -> AnalysisReport {
    analyze(
        &program(name),
        &TaintCatalog::default_catalog(),
        Options {
            implicit_flows: implicit,
        },
    )
    .unwrap()
}

pub fn report_of(text: &str, implicit: bool) -> AnalysisReport {
    analyze(
        &SourceProgram::new("inline.groovy", text),
        &TaintCatalog::default_catalog(),
        Options {
            implicit_flows: implicit,
        },
    )
    .unwrap()
}
