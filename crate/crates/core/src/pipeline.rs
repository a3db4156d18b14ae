//! Source text to report.

use crate::catalog::TaintCatalog;
use crate::engine::analyze_flows;
use crate::frontend::{parse_program, resolve_scopes, FrontendError, SourceProgram};
use crate::ir::{AppIR, IrError};
use crate::report::{build_report, AnalysisReport};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Options {
    pub implicit_flows: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("{file}: {source}")]
    Frontend { file: String, source: FrontendError },
    #[error("{file}: {source}")]
    Ir { file: String, source: IrError },
}

pub fn build_ir(program: &SourceProgram, cat: &TaintCatalog) -> Result<AppIR, AnalysisError> {
    let file = || program.file_name.clone();
    let ast = parse_program(program).map_err(|source| AnalysisError::Frontend { file: file(), source })?;
    AppIR::build(resolve_scopes(ast), cat).map_err(|source| AnalysisError::Ir { file: file(), source })
}

pub fn analyze(program: &SourceProgram, cat: &TaintCatalog, opts: Options) -> Result<AnalysisReport, AnalysisError> {
    let ir = build_ir(program, cat)?;
    let (_, paths) = analyze_flows(&ir, cat, opts.implicit_flows);
    Ok(build_report(&program.file_name, &ir, cat, &paths))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> Result<AnalysisReport, AnalysisError> {
        analyze(
            &SourceProgram::new("p.groovy", text),
            &TaintCatalog::default_catalog(),
            Options::default(),
        )
    }

    #[test]
    fn errors_name_the_file() {
        let e = run("def (").unwrap_err();
        assert!(matches!(e, AnalysisError::Frontend { .. }));
        assert!(e.to_string().starts_with("p.groovy: 1:"), "{e}");
        let e = run("def installed() {\n    subscribe(s, \"switch\", missing)\n}\n").unwrap_err();
        assert!(matches!(e, AnalysisError::Ir { .. }), "{e}");
    }

    #[test]
    fn app_without_sinks_is_clean() {
        let r = run("def installed() {\n    log.debug \"hi\"\n}\n").unwrap();
        assert_eq!(r.app, "p.groovy");
        assert!(r.warnings.is_empty());
    }
}
