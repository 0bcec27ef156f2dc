//! Command-line front end: `validate`, `check`, `test` and `explain`.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::harness::{parse_scenario_file, run_scenarios, Scenario};
use crate::ingest::{load_dataset, load_schema, DataFiles, Schema, Universe};
use crate::lang::{parse_rule_file, typecheck_rule, Declarations, Diagnostics, Rule, TypedRule};
use crate::rules::{run_campaign, CampaignConfig, CampaignError, EXIT_DIVERGENCE, EXIT_KO, EXIT_OK, EXIT_USAGE};

mod explain;
mod output;

pub use explain::{describe_rule, explain_on};
pub use output::{harness_csv, harness_text, report_csv, report_text};

#[derive(Debug, Parser)]
#[command(name = "bdv", version, about = "Check set-theoretic rules against configuration data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load the data, run every rule and write a report.
    Validate(ValidateArgs),
    /// Parse and typecheck rules against a schema without loading data.
    Check(CheckArgs),
    /// Run rule scenarios and check that every rule has OK and KO coverage.
    Test(TestArgs),
    /// Show how a rule is typed and, given data, why it fails.
    Explain(ExplainArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub schema: PathBuf,
    /// Data files; files named in the schema but not listed here are read
    /// relative to the schema's directory.
    #[arg(long, num_args = 1..)]
    pub data: Vec<PathBuf>,
    #[arg(long, num_args = 1.., required = true)]
    pub rules: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Evaluate every term with both evaluators and stop on disagreement.
    #[arg(long)]
    pub redundant: bool,
    /// Worker threads; 0 uses every available processor.
    #[arg(long, env = "BDV_JOBS", default_value_t = 0)]
    pub jobs: usize,
    /// Stop starting new rules after the first KO.
    #[arg(long)]
    pub fail_fast: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long, num_args = 1.., required = true)]
    pub rules: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Scenario files.
    #[arg(required = true)]
    pub scenarios: Vec<PathBuf>,
    /// Rule files; files named by `IN` clauses are also loaded, relative to
    /// the scenario file.
    #[arg(long, num_args = 1..)]
    pub rules: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    /// Name of the rule to explain.
    pub rule: String,
    #[arg(long, num_args = 1.., required = true)]
    pub rules: Vec<PathBuf>,
    #[arg(long)]
    pub schema: PathBuf,
    /// Data files for the schema; giving any loads the data.
    #[arg(long, num_args = 1..)]
    pub data: Vec<PathBuf>,
    /// A self-contained schema (inline constants or data beside it) to run
    /// the rule on instead of `--schema`.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
}

/// Failure before any rule ran; reported on the error stream.
struct Fail {
    code: i32,
    message: String,
}

impl Fail {
    fn usage(message: impl Into<String>) -> Self {
        Fail {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Diagnostics> for Fail {
    fn from(d: Diagnostics) -> Self {
        Fail::usage(d.to_string())
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail::usage(format!("cannot read {}: {e}", path.display())))
}

fn schema_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn read_schema(path: &Path) -> Result<Schema, Fail> {
    Ok(load_schema(&path.display().to_string(), &read(path)?)?)
}

fn read_rules(paths: &[PathBuf]) -> Result<Vec<Rule>, Fail> {
    if paths.is_empty() {
        return Err(Fail::usage("no rule files given"));
    }
    let mut rules = Vec::new();
    let mut diags = Vec::new();
    for path in paths {
        match parse_rule_file(&path.display().to_string(), &read(path)?) {
            Ok(rs) => rules.extend(rs),
            Err(d) => diags.extend(d.0),
        }
    }
    if diags.is_empty() {
        Ok(rules)
    } else {
        Err(Diagnostics(diags).into())
    }
}

fn typecheck_all(rules: Vec<Rule>, decls: &Declarations) -> Result<Vec<TypedRule>, Fail> {
    let mut typed = Vec::with_capacity(rules.len());
    let mut diags = Vec::new();
    for r in rules {
        match typecheck_rule(r, decls) {
            Ok(t) => typed.push(t),
            Err(d) => diags.extend(d.0),
        }
    }
    if diags.is_empty() {
        Ok(typed)
    } else {
        Err(Diagnostics(diags).into())
    }
}

fn load_universe(schema_path: &Path, data: &[PathBuf]) -> Result<Universe, Fail> {
    let schema = read_schema(schema_path)?;
    let files = DataFiles::from_paths(schema_dir(schema_path), data).map_err(|e| Fail::usage(e.to_string()))?;
    load_dataset(&schema, &files).map_err(|e| Fail::usage(e.to_string()))
}

fn emit(text: &str, out_path: Option<&Path>, stdout: &mut dyn Write) -> Result<(), Fail> {
    match out_path {
        Some(p) => std::fs::write(p, text).map_err(|e| Fail::usage(format!("cannot write {}: {e}", p.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Fail::usage(format!("cannot write output: {e}"))),
    }
}

fn validate(a: &ValidateArgs, stdout: &mut dyn Write) -> Result<i32, Fail> {
    let rules = read_rules(&a.rules)?;
    let u = load_universe(&a.schema, &a.data)?;
    let typed = typecheck_all(rules, &u.declarations())?;
    let config = CampaignConfig {
        jobs: a.jobs,
        redundant: a.redundant,
        fail_fast: a.fail_fast,
    };
    let report = run_campaign(&typed, &u, &config).map_err(|e| match e {
        CampaignError::Divergence(d) => Fail {
            code: EXIT_DIVERGENCE,
            message: d.to_string(),
        },
        other => Fail::usage(other.to_string()),
    })?;
    let text = match a.format {
        Format::Text => report_text(&report),
        Format::Json => report.to_json() + "\n",
        Format::Csv => report_csv(&report),
    };
    emit(&text, a.out.as_deref(), stdout)?;
    Ok(report.exit_code())
}

fn check(a: &CheckArgs, stdout: &mut dyn Write) -> Result<i32, Fail> {
    let schema = read_schema(&a.schema)?;
    let typed = typecheck_all(read_rules(&a.rules)?, &schema.declarations())?;
    emit(&format!("{} rules typecheck\n", typed.len()), None, stdout)?;
    Ok(EXIT_OK)
}

/// Loads scenario files and every rule file they pin with `IN`, resolved
/// against the scenario file's directory unless already given.
fn read_scenarios(a: &TestArgs) -> Result<(Vec<Scenario>, Vec<Rule>), Fail> {
    let mut scenarios = Vec::new();
    let mut diags = Vec::new();
    let mut rule_paths: Vec<PathBuf> = a.rules.clone();
    let given: BTreeSet<String> = a
        .rules
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    for path in &a.scenarios {
        match parse_scenario_file(&path.display().to_string(), &read(path)?) {
            Ok(sc) => {
                for s in &sc {
                    if let Some(file) = &s.rule_file {
                        let name = Path::new(file).file_name().map(|n| n.to_string_lossy().into_owned());
                        let candidate = schema_dir(path).join(file);
                        if name.is_some_and(|n| !given.contains(&n)) && !rule_paths.contains(&candidate) {
                            rule_paths.push(candidate);
                        }
                    }
                }
                scenarios.extend(sc);
            }
            Err(d) => diags.extend(d.0),
        }
    }
    if !diags.is_empty() {
        return Err(Diagnostics(diags).into());
    }
    let rules = if rule_paths.is_empty() {
        Vec::new()
    } else {
        read_rules(&rule_paths)?
    };
    Ok((scenarios, rules))
}

fn test(a: &TestArgs, stdout: &mut dyn Write) -> Result<i32, Fail> {
    let (scenarios, rules) = read_scenarios(a)?;
    let report = run_scenarios(&scenarios, &rules);
    let text = match a.format {
        Format::Text => harness_text(&report),
        Format::Json => serde_json::to_string_pretty(&report).expect("harness report serializes") + "\n",
        Format::Csv => harness_csv(&report),
    };
    emit(&text, a.out.as_deref(), stdout)?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_KO })
}

fn explain(a: &ExplainArgs, stdout: &mut dyn Write) -> Result<i32, Fail> {
    let rules = read_rules(&a.rules)?;
    let rule = rules
        .into_iter()
        .find(|r| r.name == a.rule)
        .ok_or_else(|| Fail::usage(format!("unknown rule `{}`", a.rule)))?;
    let universe = match (&a.fixture, a.data.is_empty()) {
        (Some(fixture), _) => Some(load_universe(fixture, &a.data)?),
        (None, false) => Some(load_universe(&a.schema, &a.data)?),
        (None, true) => None,
    };
    let decls = match &universe {
        Some(u) => u.declarations(),
        None => read_schema(&a.schema)?.declarations(),
    };
    let typed = typecheck_all(vec![rule], &decls)?.remove(0);
    let mut text = describe_rule(&typed);
    if let Some(u) = &universe {
        text.push_str(&explain_on(&typed, u));
    }
    emit(&text, None, stdout)?;
    Ok(EXIT_OK)
}

/// Runs the command line given by `args` (program name first) and returns
/// the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Validate(a) => validate(a, stdout),
        Command::Check(a) => check(a, stdout),
        Command::Test(a) => test(a, stdout),
        Command::Explain(a) => explain(a, stdout),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "bdv: {}", f.message);
            f.code
        }
    }
}
