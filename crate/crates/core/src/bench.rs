//! Benchmark corpus loading and detection metrics.

use crate::catalog::{load_catalog, CatalogError, SinkKind, TaintCatalog, TaintLabel};
use crate::cli::{in_pool, CliConfig};
use crate::frontend::SourceProgram;
use crate::pipeline::{analyze, Options};
use crate::report::Warning;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpectedResult {
    TruePositive,
    FalsePositive,
    OutOfScope,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedLeak {
    pub label: TaintLabel,
    pub sink_kind: SinkKind,
    pub sink_line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub app_id: u32,
    pub expected_leaks: Vec<ExpectedLeak>,
    pub expected_result: ExpectedResult,
    /// Benchmark category, from an optional `//! category:` header.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{file}: {reason}")]
pub struct CorpusError {
    pub file: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppResult {
    pub file: String,
    pub expected_result: ExpectedResult,
    pub reported: Vec<Warning>,
    pub matched: usize,
    pub spurious: usize,
    pub missed: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub per_app: BTreeMap<u32, AppResult>,
    pub expected: usize,
    pub matched: usize,
    pub missed: usize,
    pub recall: f64,
    pub false_positive_count: usize,
}

fn app_id(file: &str) -> Option<u32> {
    let digits: String = file.chars().take_while(char::is_ascii_digit).collect();
    if digits.is_empty() || !file[digits.len()..].starts_with('-') {
        return None;
    }
    digits.parse().ok().filter(|&n| n > 0)
}

fn parse_leak(spec: &str) -> Result<ExpectedLeak, String> {
    let (label, rest) = spec.split_once("->").ok_or("leak header needs `->`")?;
    let (sink, line) = rest.split_once('@').ok_or("leak header needs `@ line N`")?;
    let line = line.trim();
    let n = line
        .strip_prefix("line")
        .map(str::trim)
        .ok_or_else(|| format!("expected `line N`, found `{line}`"))?;
    Ok(ExpectedLeak {
        label: label.trim().parse().map_err(|e: CatalogError| e.to_string())?,
        sink_kind: sink.trim().parse().map_err(|e: CatalogError| e.to_string())?,
        sink_line: n.parse().map_err(|_| format!("bad line number `{n}`"))?,
    })
}

/// Reads `//! leak:` and `//! expect:` headers from an app file.
pub fn parse_ground_truth(file: &str, text: &str) -> Result<GroundTruth, CorpusError> {
    let err = |reason: String| CorpusError {
        file: file.to_string(),
        reason,
    };
    let app_id = app_id(file).ok_or_else(|| err("file name must start with `NN-`".into()))?;
    let mut leaks = Vec::new();
    let mut expect = None;
    let mut category = None;
    for (i, line) in text.lines().enumerate() {
        let Some(h) = line.trim_start().strip_prefix("//!") else {
            continue;
        };
        let at = |r: String| err(format!("line {}: {r}", i + 1));
        let (key, value) = h
            .split_once(':')
            .ok_or_else(|| at("header needs `key: value`".into()))?;
        match key.trim() {
            "leak" => leaks.push(parse_leak(value).map_err(at)?),
            "expect" => {
                let r = match value.trim() {
                    "tp" => ExpectedResult::TruePositive,
                    "fp" => ExpectedResult::FalsePositive,
                    "oos" => ExpectedResult::OutOfScope,
                    v => return Err(at(format!("expect must be tp, fp or oos, found `{v}`"))),
                };
                if expect.replace(r).is_some() {
                    return Err(at("duplicate expect header".into()));
                }
            }
            "category" => category = Some(value.trim().to_string()),
            k => return Err(at(format!("unknown header `{k}`"))),
        }
    }
    Ok(GroundTruth {
        app_id,
        expected_leaks: leaks,
        expected_result: expect.ok_or_else(|| err("missing `//! expect:` header".into()))?,
        category,
    })
}

/// Every `.groovy` file of `dir` with its ground truth, in app-id order.
pub fn load_corpus(dir: &Path) -> Result<Vec<(SourceProgram, GroundTruth)>, CorpusError> {
    let dir_err = |reason: String| CorpusError {
        file: dir.display().to_string(),
        reason,
    };
    let entries = std::fs::read_dir(dir).map_err(|e| dir_err(e.to_string()))?;
    let mut files = Vec::new();
    for e in entries {
        let p = e.map_err(|e| dir_err(e.to_string()))?.path();
        if p.extension().is_some_and(|x| x == "groovy") {
            files.push(p);
        }
    }
    if files.is_empty() {
        return Err(dir_err("no .groovy apps found".into()));
    }
    let mut out: Vec<(SourceProgram, GroundTruth)> = Vec::new();
    for p in files {
        let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let text = std::fs::read_to_string(&p).map_err(|e| CorpusError {
            file: name.clone(),
            reason: e.to_string(),
        })?;
        let truth = parse_ground_truth(&name, &text)?;
        out.push((SourceProgram::new(name, text), truth));
    }
    out.sort_by_key(|(_, t)| t.app_id);
    if let Some(w) = out.windows(2).find(|w| w[0].1.app_id == w[1].1.app_id) {
        return Err(CorpusError {
            file: w[1].0.file_name.clone(),
            reason: format!("duplicate app id {}", w[1].1.app_id),
        });
    }
    Ok(out)
}

fn matches(w: &Warning, l: &ExpectedLeak) -> bool {
    w.labels.contains(&l.label) && w.sink.kind == l.sink_kind && w.sink.line == l.sink_line
}

fn score(program: &SourceProgram, truth: &GroundTruth, cat: &TaintCatalog, opts: Options) -> AppResult {
    let (reported, error) = match analyze(program, cat, opts) {
        Ok(r) => (r.warnings, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let matched = truth
        .expected_leaks
        .iter()
        .filter(|l| reported.iter().any(|w| matches(w, l)))
        .count();
    let spurious = reported
        .iter()
        .filter(|w| !truth.expected_leaks.iter().any(|l| matches(w, l)))
        .count();
    AppResult {
        file: program.file_name.clone(),
        expected_result: truth.expected_result,
        reported,
        matched,
        spurious,
        missed: truth.expected_leaks.len() - matched,
        error,
    }
}

/// Scores each app against its ground truth with an already loaded catalog.
pub fn evaluate_with(
    corpus: &[(SourceProgram, GroundTruth)],
    cat: &TaintCatalog,
    opts: Options,
    jobs: usize,
) -> BenchResult {
    let results: Vec<(u32, AppResult)> = in_pool(jobs, || {
        corpus
            .par_iter()
            .map(|(p, t)| (t.app_id, score(p, t, cat, opts)))
            .collect()
    });
    let per_app: BTreeMap<u32, AppResult> = results.into_iter().collect();
    let expected: usize = corpus.iter().map(|(_, t)| t.expected_leaks.len()).sum();
    let matched = per_app.values().map(|a| a.matched).sum();
    BenchResult {
        expected,
        matched,
        missed: per_app.values().map(|a| a.missed).sum(),
        recall: if expected == 0 {
            1.0
        } else {
            matched as f64 / expected as f64
        },
        false_positive_count: per_app.values().map(|a| a.spurious).sum(),
        per_app,
    }
}

pub fn evaluate(corpus: &[(SourceProgram, GroundTruth)], config: &CliConfig) -> Result<BenchResult, CatalogError> {
    let cat = load_catalog(config.catalog_path.as_deref())?;
    let opts = Options {
        implicit_flows: config.implicit_flows,
    };
    Ok(evaluate_with(corpus, &cat, opts, config.jobs))
}

pub fn render_text(r: &BenchResult) -> String {
    let mut out = String::new();
    for (id, a) in &r.per_app {
        let _ = writeln!(
            out,
            "{id:>2} {:<40} reported={} matched={} spurious={} missed={}{}",
            a.file,
            a.reported.len(),
            a.matched,
            a.spurious,
            a.missed,
            a.error.as_deref().map(|e| format!(" error: {e}")).unwrap_or_default()
        );
    }
    let _ = writeln!(
        out,
        "matched {}/{} (recall {:.4}), spurious {}, missed {}",
        r.matched, r.expected, r.recall, r.false_positive_count, r.missed
    );
    out
}
