//! Python bindings: analyze app sources and score corpora from Python.

use iot_taint::bench::{evaluate_with, load_corpus};
use iot_taint::catalog::{load_catalog, TaintCatalog};
use iot_taint::frontend::SourceProgram;
use iot_taint::report::{render, Format};
use iot_taint::{analyze, Options};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use std::path::Path;

fn catalog(path: Option<&str>) -> Result<TaintCatalog, String> {
    load_catalog(path.map(Path::new)).map_err(|e| e.to_string())
}

fn analyze_text(
    source: &str,
    file_name: &str,
    implicit_flows: bool,
    format: &str,
    catalog_path: Option<&str>,
) -> Result<String, String> {
    let format: Format = format.parse()?;
    let cat = catalog(catalog_path)?;
    let program = SourceProgram::new(file_name, source);
    let report = analyze(&program, &cat, Options { implicit_flows }).map_err(|e| e.to_string())?;
    Ok(render(&report, format))
}

fn bench_dir(dir: &str, implicit_flows: bool, jobs: usize, catalog_path: Option<&str>) -> Result<String, String> {
    let corpus = load_corpus(Path::new(dir)).map_err(|e| e.to_string())?;
    let cat = catalog(catalog_path)?;
    let result = evaluate_with(&corpus, &cat, Options { implicit_flows }, jobs);
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

/// Analyze one app's source text; returns the rendered report.
#[pyfunction]
#[pyo3(signature = (source, file_name = "app.groovy", implicit_flows = false, format = "json", catalog = None))]
fn analyze_source(
    source: &str,
    file_name: &str,
    implicit_flows: bool,
    format: &str,
    catalog: Option<&str>,
) -> PyResult<String> {
    analyze_text(source, file_name, implicit_flows, format, catalog).map_err(PyValueError::new_err)
}

/// Score a ground-truth corpus directory; returns the results as JSON.
#[pyfunction(name = "bench")]
#[pyo3(signature = (dir, implicit_flows = false, jobs = 1, catalog = None))]
fn bench_corpus(dir: &str, implicit_flows: bool, jobs: usize, catalog: Option<&str>) -> PyResult<String> {
    bench_dir(dir, implicit_flows, jobs, catalog).map_err(PyValueError::new_err)
}

/// The built-in catalog in its tab-separated text form.
#[pyfunction]
fn default_catalog() -> String {
    TaintCatalog::default_catalog().to_tsv()
}

#[pymodule]
fn iot_taint_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(analyze_source, m)?)?;
    m.add_function(wrap_pyfunction!(bench_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(default_catalog, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const APP: &str = "preferences {\n    section(\"s\") {\n        input \"t\", \"capability.temperatureMeasurement\"\n        input \"phone\", \"phone\"\n    }\n}\ndef installed() {\n    subscribe(t, \"temperature\", h)\n}\ndef h(evt) {\n    sendSms(phone, \"${t.currentTemperature}\")\n}\n";

    #[test]
    fn analyze_reports_json() {
        let out = analyze_text(APP, "a.groovy", false, "json", None).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["app"], "a.groovy");
        assert_eq!(v["warnings"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn bad_inputs_are_errors() {
        assert!(analyze_text(APP, "a.groovy", false, "xml", None).is_err());
        assert!(analyze_text("def (", "a.groovy", false, "json", None).is_err());
        assert!(analyze_text(APP, "a.groovy", false, "json", Some("/nonexistent")).is_err());
        assert!(bench_dir("/nonexistent", false, 1, None).is_err());
    }

    #[test]
    fn bench_scores_the_corpus() {
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/iotbench");
        let v: serde_json::Value = serde_json::from_str(&bench_dir(dir, false, 2, None).unwrap()).unwrap();
        assert_eq!(v["matched"], 25);
    }
}
