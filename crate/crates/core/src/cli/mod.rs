//! Batch driver: load a system, build the decision formulas, decide them,
//! optionally cross-check on concrete instances, and report.

mod mona;
mod oracle;
mod report;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, ValueEnum};
use thiserror::Error;

use crate::invgen::{deadlock_freedom, gen_decision_formula, property_formula, InvgenError, StateVariableMap};
use crate::logic::{IlFormula, Structure, Ws1sFormula};
use crate::petri::{instantiate, reachable, structure_to_marking, PetriError, DEFAULT_MAX_MARKINGS};
use crate::syntax::{parse_properties, parse_system, validate, PropertyDecl, SyntaxError, ValidatedSystem, ValidationError};
use crate::ws1s_solver::{decide_with, Compiler, SolverError, Verdict, DEFAULT_MAX_STATES};

pub use mona::to_mona;
pub use oracle::{oracle_check, Check, CheckStatus, OracleReport};
pub use report::{render, WitnessReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Flow {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    JsonLike,
}

/// Proves safety properties of parameterized component systems for every
/// ring size, or reports a witness the invariants cannot exclude.
#[derive(Clone, Debug, Parser)]
#[command(name = "trapinv", version)]
pub struct RunConfig {
    /// System description (.cbs)
    pub input: PathBuf,
    /// `deadlock`, `all` (deadlock and every declared property) or the name
    /// of a property declared in the input
    #[arg(long, default_value = "deadlock", conflicts_with = "property_file")]
    pub property: String,
    /// File of `property name: formula;` declarations to check instead
    #[arg(long)]
    pub property_file: Option<PathBuf>,
    /// Strengthen the trap invariant with 1-invariants
    #[arg(long, value_enum, default_value = "off")]
    pub flow: Flow,
    /// Smallest universe size considered
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub min_universe: u64,
    /// Instance sizes to cross-check explicitly, e.g. `2,3,4`
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..))]
    pub oracle: Vec<u64>,
    /// Write the decision formula(s) in Mona syntax
    #[arg(long)]
    pub export_solver: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub report: ReportFormat,
    /// Automaton state cap for the solver
    #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
    pub max_states: usize,
    /// Reachable-marking cap for the instance oracles
    #[arg(long, default_value_t = DEFAULT_MAX_MARKINGS)]
    pub max_markings: usize,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>) -> RunConfig {
        RunConfig::parse_from([std::ffi::OsString::from("trapinv"), input.into().into_os_string()])
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{source}")]
    Syntax { path: String, source: SyntaxError },
    #[error("{path}: {source}")]
    Validation { path: String, source: ValidationError },
    #[error("unknown property `{0}`")]
    UnknownProperty(String),
    #[error(transparent)]
    Invgen(#[from] InvgenError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerdictKind {
    Verified,
    Unknown,
    Resource,
    Error,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::Verified => "VERIFIED",
            VerdictKind::Unknown => "UNKNOWN",
            VerdictKind::Resource => "RESOURCE",
            VerdictKind::Error => "ERROR",
        }
    }
}

/// How the instance oracle classified an UNKNOWN witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WitnessLabel {
    /// The witness marking is not reachable at its size.
    Spurious,
    /// The witness marking is reachable: a real violation.
    Reachable,
    /// The instance could not be explored within the marking cap.
    Unresolved,
}

impl WitnessLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            WitnessLabel::Spurious => "SPURIOUS",
            WitnessLabel::Reachable => "REACHABLE",
            WitnessLabel::Unresolved => "UNRESOLVED",
        }
    }
}

#[derive(Clone, Debug)]
pub struct PropertyReport {
    pub name: String,
    pub verdict: VerdictKind,
    pub witness: Option<WitnessReport>,
    /// False when the witness was too large for the reference evaluator.
    pub rechecked: bool,
    pub label: Option<WitnessLabel>,
    /// Reachable markings violating the property at the witness's size.
    pub violations: Option<usize>,
    pub formula_size: usize,
    pub quantifiers: usize,
    pub peak_states: usize,
    pub elapsed: Duration,
    pub message: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub system: String,
    pub flow: bool,
    pub min_universe: usize,
    pub warnings: Vec<String>,
    pub properties: Vec<PropertyReport>,
    pub oracle: Vec<OracleReport>,
    pub error: Option<String>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.error.is_some()
            || self
                .properties
                .iter()
                .any(|p| matches!(p.verdict, VerdictKind::Resource | VerdictKind::Error))
            || self.oracle.iter().any(OracleReport::failed)
        {
            2
        } else if self.properties.iter().any(|p| p.verdict == VerdictKind::Unknown) {
            1
        } else {
            0
        }
    }
}

/// A property to check: the built-in deadlock freedom or a user formula.
#[derive(Clone, Debug)]
pub struct NamedProperty {
    pub name: String,
    pub il: Option<IlFormula>,
    pub formula: Ws1sFormula,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_system(path: &Path) -> Result<ValidatedSystem, CliError> {
    let src = read(path)?;
    let p = path.display().to_string();
    let spec = parse_system(&src).map_err(|source| CliError::Syntax { path: p.clone(), source })?;
    validate(spec).map_err(|source| CliError::Validation { path: p, source })
}

fn selected_properties(cfg: &RunConfig, sys: &ValidatedSystem, m: &StateVariableMap) -> Result<Vec<NamedProperty>, CliError> {
    let user = |d: &PropertyDecl| -> Result<NamedProperty, CliError> {
        Ok(NamedProperty {
            name: d.name.clone(),
            il: Some(d.formula.clone()),
            formula: property_formula(&d.formula, m)?,
        })
    };
    let deadlock = || NamedProperty {
        name: "deadlock".to_string(),
        il: None,
        formula: deadlock_freedom(sys, m),
    };
    if let Some(path) = &cfg.property_file {
        let src = read(path)?;
        let decls = parse_properties(&src).map_err(|source| CliError::Syntax {
            path: path.display().to_string(),
            source,
        })?;
        for d in &decls {
            sys.check_property(d).map_err(|source| CliError::Validation {
                path: path.display().to_string(),
                source,
            })?;
        }
        return decls.iter().map(user).collect();
    }
    match cfg.property.as_str() {
        "deadlock" => Ok(vec![deadlock()]),
        "all" => {
            let mut out = vec![deadlock()];
            for d in sys.properties() {
                out.push(user(d)?);
            }
            Ok(out)
        }
        name => match sys.properties().iter().find(|d| d.name == name) {
            Some(d) => Ok(vec![user(d)?]),
            None => Err(CliError::UnknownProperty(name.to_string())),
        },
    }
}

fn export_path(base: &Path, name: &str, many: bool) -> PathBuf {
    if !many {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let file = match base.extension() {
        Some(ext) => format!("{stem}.{name}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{name}"),
    };
    base.with_file_name(file)
}

/// Runs the configured checks. The report's [`Report::exit_code`] is the
/// process exit status.
pub fn run(cfg: &RunConfig) -> Report {
    let mut report = Report {
        system: cfg.input.display().to_string(),
        flow: cfg.flow == Flow::On,
        min_universe: cfg.min_universe as usize,
        warnings: Vec::new(),
        properties: Vec::new(),
        oracle: Vec::new(),
        error: None,
    };
    if let Err(e) = run_into(cfg, &mut report) {
        report.error = Some(e.to_string());
    }
    report
}

fn run_into(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    if cfg.min_universe == 1 {
        report
            .warnings
            .push("min-universe 1: single-node rings let a component interact with itself".to_string());
    }
    let sys = load_system(&cfg.input)?;
    let m = StateVariableMap::new(&sys);
    let props = selected_properties(cfg, &sys, &m)?;
    let use_flow = cfg.flow == Flow::On;
    let mut compiler = Compiler::new(cfg.max_states);
    for p in &props {
        let f = gen_decision_formula(&sys, &p.formula, use_flow, &m)?;
        if let Some(base) = &cfg.export_solver {
            let path = export_path(base, &p.name, props.len() > 1);
            std::fs::write(&path, to_mona(&f, report.min_universe)).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
        let start = Instant::now();
        compiler.peak_states = 0;
        let outcome = decide_with(&f, report.min_universe, &mut compiler);
        let mut pr = PropertyReport {
            name: p.name.clone(),
            verdict: VerdictKind::Verified,
            witness: None,
            rechecked: true,
            label: None,
            violations: None,
            formula_size: f.size(),
            quantifiers: f.quantifier_count(),
            peak_states: compiler.peak_states,
            elapsed: start.elapsed(),
            message: None,
        };
        match outcome {
            Ok(Verdict::Unsat) => {}
            Ok(Verdict::Sat { witness, rechecked }) => {
                pr.verdict = VerdictKind::Unknown;
                pr.rechecked = rechecked;
                pr.witness = Some(WitnessReport::new(&sys, &witness));
                if !cfg.oracle.is_empty() {
                    let (label, violations) = classify(&sys, p, &witness, cfg.max_markings);
                    pr.label = Some(label);
                    pr.violations = violations;
                }
            }
            Err(e @ SolverError::Resource { .. }) => {
                pr.verdict = VerdictKind::Resource;
                pr.message = Some(e.to_string());
            }
            Err(e) => {
                pr.verdict = VerdictKind::Error;
                pr.message = Some(e.to_string());
            }
        }
        report.properties.push(pr);
    }
    for &n in &cfg.oracle {
        report
            .oracle
            .push(oracle_check(&sys, &m, &props, n as usize, use_flow, cfg.max_markings, &report.properties));
    }
    Ok(())
}

/// Explores the instance of the witness's size: is the witness reachable,
/// and how many reachable markings violate the property?
fn classify(
    sys: &ValidatedSystem,
    p: &NamedProperty,
    witness: &Structure,
    cap: usize,
) -> (WitnessLabel, Option<usize>) {
    let net = instantiate(sys, witness.size);
    let g = match reachable(&net, cap) {
        Ok(g) => g,
        Err(PetriError::Cap(_)) | Err(PetriError::TooManyPlaces(_)) | Err(PetriError::NotOneSafe { .. }) => {
            return (WitnessLabel::Unresolved, None)
        }
    };
    let label = if g.contains(&structure_to_marking(&net, witness)) {
        WitnessLabel::Reachable
    } else {
        WitnessLabel::Spurious
    };
    let violations = g
        .markings
        .iter()
        .filter(|mk| !oracle::holds(&p.formula, &crate::petri::marking_to_structure(&net, mk)))
        .count();
    (label, Some(violations))
}
