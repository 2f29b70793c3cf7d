use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pqeap::annoyance::evaluate_deployment;
use pqeap::channel::{Band, SignalSituation};
use pqeap::handshake::{
    resumption_storage, ChainShape, EapMethod, ResumptionMode, DEFAULT_FRAGMENT_SIZE,
};
use pqeap::recommend::classify_recommended;
use pqeap::registry::Registry;
use pqeap::report::{emit_report, emit_runs, Format};
use pqeap::scenario::{parse_scenario, reference_document, ScenarioSet};
use pqeap::sim::{
    compare_matrix, default_matrix, Scenario, SimError, Simulation, AUTO_KEM, DEFAULT_REPETITIONS,
    DEFAULT_SEED, EVALUATED_SIGNATURES,
};

/// Post-quantum WPA-Enterprise authentication simulator.
#[derive(Parser)]
#[command(name = "pqeap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Output {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct RunOpts {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Overrides every scenario's seed.
    #[arg(long, value_parser = parse_seed)]
    seed: Option<u64>,
    /// Overrides every scenario's repetition count.
    #[arg(long)]
    reps: Option<u32>,
}

#[derive(Args, Clone)]
struct ScenarioFlags {
    /// Certificate scheme, plain or `classical+pq`.
    #[arg(long, conflicts_with = "file")]
    signature: Option<String>,
    #[arg(long, default_value = AUTO_KEM)]
    kem: String,
    #[arg(long, value_enum, default_value_t = MethodArg::EapTls)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = BandArg::G2_4)]
    band: BandArg,
    #[arg(long, value_enum, default_value_t = SituationArg::Excellent)]
    situation: SituationArg,
}

#[derive(Subcommand)]
enum Command {
    /// Per-run reports for one scenario.
    Simulate {
        /// Scenario file.
        file: Option<PathBuf>,
        /// Scenario id to pick when the file holds several.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        resumption: bool,
        #[command(flatten)]
        flags: ScenarioFlags,
        #[command(flatten)]
        run: RunOpts,
        #[command(flatten)]
        output: Output,
    },
    /// Batch statistics for every scenario of a file, or the default matrix.
    Compare {
        file: Option<PathBuf>,
        #[command(flatten)]
        run: RunOpts,
        #[command(flatten)]
        output: Output,
    },
    /// Full handshake next to resumption for each scenario.
    Resumption {
        file: Option<PathBuf>,
        /// Report session-state storage instead of timing.
        #[arg(long)]
        storage: bool,
        #[command(flatten)]
        run: RunOpts,
        #[command(flatten)]
        output: Output,
    },
    /// Quantum-annoyance audit of a deployment.
    Annoyance {
        #[arg(long, default_value = "RSA-2048")]
        client: String,
        #[arg(long, default_value = "RSA-2048")]
        server: String,
        #[arg(long, default_value = "X25519")]
        kem: String,
        #[arg(long, value_enum, default_value_t = AuditFormat::Table)]
        format: AuditFormat,
        #[command(flatten)]
        output: Output,
    },
    /// Message-count and cycle-total recommendation.
    Recommend {
        /// Signatures to classify; all evaluated schemes when empty.
        signatures: Vec<String>,
        #[arg(long, default_value = AUTO_KEM)]
        kem: String,
        #[arg(long, value_enum, default_value_t = MethodArg::EapTls)]
        method: MethodArg,
        #[arg(long, default_value_t = 1)]
        chain_length: u64,
        #[arg(long, default_value_t = DEFAULT_FRAGMENT_SIZE.get())]
        fragment_size: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        output: Output,
    },
    /// Registry operations.
    Registry {
        #[command(subcommand)]
        command: RegistryCommand,
    },
    /// Print a scenario file listing every key with its default.
    Defaults {
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Subcommand)]
enum RegistryCommand {
    /// Export every scheme as CSV.
    Export {
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    EapTls,
    EapTtls,
}

impl From<MethodArg> for EapMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::EapTls => EapMethod::EapTls,
            MethodArg::EapTtls => EapMethod::EapTtls,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BandArg {
    #[value(name = "2.4ghz")]
    G2_4,
    #[value(name = "5ghz")]
    G5,
}

impl From<BandArg> for Band {
    fn from(b: BandArg) -> Self {
        match b {
            BandArg::G2_4 => Band::Band2_4GHz,
            BandArg::G5 => Band::Band5GHz,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SituationArg {
    Excellent,
    Good,
    VeryWeak,
}

impl From<SituationArg> for SignalSituation {
    fn from(s: SituationArg) -> Self {
        match s {
            SituationArg::Excellent => SignalSituation::Excellent,
            SituationArg::Good => SignalSituation::Good,
            SituationArg::VeryWeak => SignalSituation::VeryWeak,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AuditFormat {
    Table,
    Json,
}

fn parse_seed(text: &str) -> Result<u64, String> {
    let parsed = match text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => text.parse(),
    };
    parsed.map_err(|e| format!("invalid seed `{text}`: {e}"))
}

enum Failure {
    /// Bad input: scenario file, identifiers, arguments.
    Input(String),
    /// At least one authentication aborted.
    Aborted(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Aborted(_) => 3,
            Failure::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Aborted(m) | Failure::Other(m) => m,
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn other<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Other(e.to_string())
}

fn write_output(output: &Output, text: &str) -> Result<(), Failure> {
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|e| other(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(other),
    }
}

fn load(file: &Path) -> Result<ScenarioSet, Failure> {
    parse_scenario(file).map_err(|e| Failure::Input(format!("{}: {e}", file.display())))
}

fn apply_run_opts(scenarios: &mut [Scenario], run: &RunOpts) {
    for s in scenarios {
        if let Some(seed) = run.seed {
            s.seed = seed;
        }
        if let Some(reps) = run.reps {
            s.repetitions = reps;
        }
    }
}

fn announce_seed(format: Format, seed: u64) {
    if format == Format::Csv {
        eprintln!("seed {seed:#x}");
    }
}

fn matrix_failures(rows: &[pqeap::sim::MatrixRow]) -> Result<(), Failure> {
    let failed: Vec<String> = rows
        .iter()
        .filter_map(|r| r.stats.as_ref().err().map(|e| format!("{}: {e}", r.scenario.id)))
        .collect();
    if failed.is_empty() {
        return Ok(());
    }
    let aborted = rows.iter().all(|r| {
        matches!(&r.stats, Ok(_) | Err(SimError::AllRunsAborted { .. }))
    });
    let message = failed.join("\n");
    Err(if aborted {
        Failure::Aborted(message)
    } else {
        Failure::Input(message)
    })
}

fn simulate(
    file: Option<PathBuf>,
    pick: Option<String>,
    resumption: bool,
    flags: ScenarioFlags,
    run: RunOpts,
    output: Output,
) -> Result<(), Failure> {
    let (registry, mut scenario) = match (&file, &flags.signature) {
        (Some(path), _) => {
            let set = load(path)?;
            let scenario = match pick {
                Some(id) => set
                    .scenarios
                    .iter()
                    .find(|s| s.id == id)
                    .cloned()
                    .ok_or_else(|| Failure::Input(format!("no scenario with id `{id}`")))?,
                None if set.scenarios.len() == 1 => set.scenarios[0].clone(),
                None => {
                    return Err(Failure::Input(format!(
                        "file holds {} scenarios; pick one with --scenario",
                        set.scenarios.len()
                    )))
                }
            };
            (set.registry, scenario)
        }
        (None, Some(sig)) => (
            Registry::builtin(),
            Scenario::new(sig)
                .with_kem(&flags.kem)
                .with_method(flags.method.into())
                .with_band(flags.band.into())
                .with_situation(flags.situation.into()),
        ),
        (None, None) => return Err(Failure::Input("give a scenario file or --signature".into())),
    };
    if resumption {
        scenario.resumption = true;
    }
    apply_run_opts(std::slice::from_mut(&mut scenario), &run);

    let sim = Simulation::new(&scenario, &registry).map_err(input)?;
    let mut reports = Vec::new();
    let mut aborts = Vec::new();
    for outcome in sim.run_all() {
        match outcome {
            Ok(report) => reports.push(report),
            Err(SimError::AuthAborted { reason, report }) => {
                aborts.push(format!("run {}: {reason}", report.run_index));
                reports.push(*report);
            }
            Err(e) => return Err(other(e)),
        }
    }
    announce_seed(run.format, scenario.seed);
    write_output(&output, &emit_runs(&reports, run.format, scenario.seed).map_err(other)?)?;
    if aborts.is_empty() {
        Ok(())
    } else {
        Err(Failure::Aborted(aborts.join("\n")))
    }
}

fn scenarios_or_default(file: Option<&Path>, run: &RunOpts) -> Result<ScenarioSet, Failure> {
    let mut set = match file {
        Some(path) => load(path)?,
        None => ScenarioSet {
            registry: Registry::builtin(),
            scenarios: default_matrix(DEFAULT_REPETITIONS, DEFAULT_SEED),
        },
    };
    apply_run_opts(&mut set.scenarios, run);
    Ok(set)
}

fn report_seed(set: &ScenarioSet, run: &RunOpts) -> u64 {
    run.seed
        .or_else(|| set.scenarios.first().map(|s| s.seed))
        .unwrap_or(DEFAULT_SEED)
}

fn compare(file: Option<PathBuf>, run: RunOpts, output: Output) -> Result<(), Failure> {
    let set = scenarios_or_default(file.as_deref(), &run)?;
    let rows = compare_matrix(&set.scenarios, &set.registry);
    let seed = report_seed(&set, &run);
    announce_seed(run.format, seed);
    write_output(&output, &emit_report(&rows, run.format, seed).map_err(other)?)?;
    matrix_failures(&rows)
}

fn resumption(file: Option<PathBuf>, storage: bool, run: RunOpts, output: Output) -> Result<(), Failure> {
    let set = match file {
        Some(_) => scenarios_or_default(file.as_deref(), &run)?,
        None => {
            let mut scenarios: Vec<Scenario> = EVALUATED_SIGNATURES.iter().map(|s| Scenario::new(s)).collect();
            apply_run_opts(&mut scenarios, &run);
            ScenarioSet {
                registry: Registry::builtin(),
                scenarios,
            }
        }
    };

    if storage {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["algorithm", "mode", "server_bytes", "client_bytes"]).map_err(other)?;
        let mut seen = Vec::new();
        for s in &set.scenarios {
            let sig = set.registry.lookup_signature(&s.signature).map_err(input)?;
            if seen.contains(&sig.name) {
                continue;
            }
            for (mode, label) in [(ResumptionMode::Stateful, "stateful"), (ResumptionMode::Stateless, "stateless")] {
                let st = resumption_storage(&sig, mode);
                w.write_record([
                    sig.name.as_str(),
                    label,
                    &st.server_bytes.to_string(),
                    &st.client_bytes.to_string(),
                ])
                .map_err(other)?;
            }
            seen.push(sig.name);
        }
        let bytes = w.into_inner().map_err(|e| other(e.into_error()))?;
        return write_output(&output, &String::from_utf8_lossy(&bytes));
    }

    let paired: Vec<Scenario> = set
        .scenarios
        .iter()
        .flat_map(|s| {
            let base = s.id.trim_end_matches("/resumption").to_string();
            [
                s.clone().with_resumption(false).with_id(format!("{base}/full")),
                s.clone().with_resumption(true).with_id(format!("{base}/resumption")),
            ]
        })
        .collect();
    let rows = compare_matrix(&paired, &set.registry);
    let seed = report_seed(&set, &run);
    announce_seed(run.format, seed);
    write_output(&output, &emit_report(&rows, run.format, seed).map_err(other)?)?;
    matrix_failures(&rows)
}

fn recommend(
    signatures: Vec<String>,
    kem: String,
    method: MethodArg,
    chain_length: u64,
    fragment_size: u64,
    format: Format,
    output: Output,
) -> Result<(), Failure> {
    let registry = Registry::builtin();
    let defaults = ChainShape::default();
    let shape = ChainShape::new(chain_length, defaults.cert_encoding_overhead(), defaults.handshake_overhead())
        .map_err(input)?;
    let fragment_size = std::num::NonZeroU64::new(fragment_size)
        .ok_or_else(|| Failure::Input("fragment size must be positive".into()))?;
    let names: Vec<String> = if signatures.is_empty() {
        EVALUATED_SIGNATURES.iter().map(|s| s.to_string()).collect()
    } else {
        signatures
    };
    let verdicts = names
        .iter()
        .map(|sig| classify_recommended(&registry, sig, &kem, method.into(), &shape, fragment_size))
        .collect::<Result<Vec<_>, _>>()
        .map_err(input)?;

    let text = match format {
        Format::Json => serde_json::to_string_pretty(&verdicts).map_err(other)? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "algorithm",
                "kem",
                "eap_messages",
                "total_handshake_cycles",
                "baseline_cycles",
                "recommended",
                "reasons",
            ])
            .map_err(other)?;
            for v in &verdicts {
                let reasons: Vec<String> = v.reasons.iter().map(|r| r.to_string()).collect();
                w.write_record([
                    v.algorithm.clone(),
                    v.kem.clone(),
                    v.eap_messages.to_string(),
                    v.total_handshake_cycles.to_string(),
                    v.baseline_cycles.to_string(),
                    v.recommended.to_string(),
                    reasons.join("; "),
                ])
                .map_err(other)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| other(e.into_error()))?).map_err(other)?
        }
    };
    write_output(&output, &text)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate {
            file,
            scenario,
            resumption,
            flags,
            run,
            output,
        } => simulate(file, scenario, resumption, flags, run, output),
        Command::Compare { file, run, output } => compare(file, run, output),
        Command::Resumption {
            file,
            storage,
            run,
            output,
        } => resumption(file, storage, run, output),
        Command::Annoyance {
            client,
            server,
            kem,
            format,
            output,
        } => {
            let report = evaluate_deployment(&Registry::builtin(), &client, &server, &kem).map_err(input)?;
            let text = match format {
                AuditFormat::Table => report.to_string(),
                AuditFormat::Json => report.to_json() + "\n",
            };
            write_output(&output, &text)
        }
        Command::Recommend {
            signatures,
            kem,
            method,
            chain_length,
            fragment_size,
            format,
            output,
        } => recommend(signatures, kem, method, chain_length, fragment_size, format, output),
        Command::Registry {
            command: RegistryCommand::Export { output },
        } => write_output(&output, &Registry::builtin().export_csv()),
        Command::Defaults { output } => write_output(&output, &reference_document()),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
