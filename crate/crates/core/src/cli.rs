//! Command-line driver.

use crate::bench;
use crate::catalog::load_catalog;
use crate::frontend::SourceProgram;
use crate::pipeline::{analyze, Options};
use crate::report::{render_all, AnalysisReport, Format};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliConfig {
    pub inputs: Vec<PathBuf>,
    pub implicit_flows: bool,
    pub catalog_path: Option<PathBuf>,
    pub format: Format,
    pub fail_on_warning: bool,
    pub jobs: usize,
}

impl CliConfig {
    pub fn new(inputs: Vec<PathBuf>) -> Self {
        CliConfig {
            inputs,
            implicit_flows: false,
            catalog_path: None,
            format: Format::Text,
            fail_on_warning: false,
            jobs: 1,
        }
    }
}

/// Runs `f` on a rayon pool with `jobs` threads.
pub(crate) fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

#[derive(Parser, Debug)]
#[command(name = "iot-taint", version, about = "Taint analysis for smart home apps")]
#[command(args_conflicts_with_subcommands = true)]
struct Args {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    flags: Flags,
    /// App source files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct Flags {
    /// Also report flows through sensitive branch conditions.
    #[arg(long)]
    implicit_flows: bool,
    /// Extra catalog rows merged over the built-in catalog.
    #[arg(long, value_name = "PATH")]
    catalog: Option<PathBuf>,
    #[arg(long, value_name = "text|json", default_value = "text", value_parser = parse_format)]
    format: Format,
    /// Exit with 1 when any warning is reported.
    #[arg(long)]
    fail_on_warning: bool,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score the analyzer against a ground-truth corpus.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
}

impl Flags {
    fn config(self, inputs: Vec<PathBuf>) -> CliConfig {
        CliConfig {
            inputs,
            implicit_flows: self.implicit_flows,
            catalog_path: self.catalog,
            format: self.format,
            fail_on_warning: self.fail_on_warning,
            jobs: self.jobs as usize,
        }
    }
}

fn analyze_file(path: &PathBuf, cat: &crate::catalog::TaintCatalog, opts: Options) -> Result<AnalysisReport, String> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| format!("{name}: cannot read: {e}"))?;
    analyze(&SourceProgram::new(name, text), cat, opts).map_err(|e| e.to_string())
}

/// Analyzes every input and writes the reports; returns the exit code.
pub fn run_with(config: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cat = match load_catalog(config.catalog_path.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    let opts = Options {
        implicit_flows: config.implicit_flows,
    };
    let mut inputs = config.inputs.clone();
    inputs.sort();
    let results: Vec<Result<AnalysisReport, String>> = in_pool(config.jobs, || {
        inputs.par_iter().map(|p| analyze_file(p, &cat, opts)).collect()
    });
    let mut reports = Vec::new();
    let mut failed = false;
    for r in results {
        match r {
            Ok(r) => reports.push(r),
            Err(e) => {
                failed = true;
                let _ = writeln!(err, "error: {e}");
            }
        }
    }
    let mut text = render_all(&reports, config.format);
    if !text.is_empty() && !text.ends_with('\n') {
        text.push('\n');
    }
    let _ = out.write_all(text.as_bytes());
    if failed {
        2
    } else if config.fail_on_warning && reports.iter().any(|r| !r.warnings.is_empty()) {
        1
    } else {
        0
    }
}

pub fn run(config: &CliConfig) -> i32 {
    run_with(config, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

fn run_bench(dir: &std::path::Path, config: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let corpus = match bench::load_corpus(dir) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    let result = match bench::evaluate(&corpus, config) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    let text = match config.format {
        Format::Text => bench::render_text(&result),
        Format::Json => serde_json::to_string(&result).expect("results serialize") + "\n",
    };
    let _ = out.write_all(text.as_bytes());
    0
}

/// Parses command-line arguments (program name first) and runs.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    match args.command {
        Some(Command::Bench { dir, flags }) => run_bench(&dir, &flags.config(Vec::new()), out, err),
        None => run_with(&args.flags.config(args.inputs), out, err),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Args, clap::Error> {
        Args::try_parse_from(std::iter::once("iot-taint").chain(args.iter().copied()))
    }

    #[test]
    fn flags_map_to_config() {
        let a = parse(&[
            "--implicit-flows",
            "--format",
            "json",
            "--jobs",
            "3",
            "--fail-on-warning",
            "b.groovy",
            "a.groovy",
        ])
        .unwrap();
        let c = a.flags.config(a.inputs);
        assert!(c.implicit_flows && c.fail_on_warning);
        assert_eq!((c.format, c.jobs), (Format::Json, 3));
        assert_eq!(c.inputs.len(), 2);
    }

    #[test]
    fn defaults() {
        let a = parse(&["a.groovy"]).unwrap();
        assert_eq!(a.flags.config(a.inputs.clone()), CliConfig::new(a.inputs));
    }

    #[test]
    fn bench_takes_the_same_flags() {
        let a = parse(&["bench", "corpus", "--implicit-flows", "--jobs", "2"]).unwrap();
        let Some(Command::Bench { dir, flags }) = a.command else {
            panic!("not a bench command");
        };
        assert_eq!(dir, PathBuf::from("corpus"));
        assert!(flags.implicit_flows);
        assert_eq!(flags.jobs, 2);
    }

    #[test]
    fn invalid_arguments() {
        assert!(parse(&[]).is_err());
        assert!(parse(&["--jobs", "0", "a.groovy"]).is_err());
        assert!(parse(&["--format", "xml", "a.groovy"]).is_err());
    }

    #[test]
    fn help_goes_to_stdout() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(main_with(["iot-taint", "--help"], &mut out, &mut err), 0);
        assert!(String::from_utf8(out).unwrap().contains("--implicit-flows"));
        assert!(err.is_empty());
    }
}
