//! `qnet-xval`: run the experiments, query the oracles, validate
//! configurations and compare result tables.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | usage error (unknown flag, missing argument) |
//! | 3 | invalid configuration (syntax or violated invariant) |
//! | 4 | simulation failure |
//! | 5 | unreadable input or unwritable output |
//! | 6 | compared tables do not describe the same sweep |
//!
//! Failures print exactly one line to stderr: `error(<kind>): <message>`.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qnet_xval::config_file::{load_config, ConfigFileError};
use qnet_xval::noise::{calibrate_depolarizing, coherence_slices, depolarizing_q00, werner_decohere};
use qnet_xval::oracle::{self, OracleError};
use qnet_xval::xval::{self, ExperimentConfig, ExperimentId, XvalError};
use qnet_xval::{ProtocolModel, SimConfig};

#[derive(Parser, Debug)]
#[command(name = "qnet-xval", version, about = "Cross-validation of two link-generation protocol models")]
struct Cli {
    /// Progress on stderr (-v); also write event traces (-vv).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment and write its result tables.
    Run(RunArgs),
    /// Print a closed-form prediction.
    #[command(subcommand)]
    Oracle(OracleQuery),
    /// Check a configuration file without running anything.
    Validate {
        config: PathBuf,
        /// Defaults to use if the file has no `experiment.id`.
        #[arg(long, short = 'e', default_value_t = 1)]
        experiment: u8,
    },
    /// Cross-validate two summary tables.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Experiment number (1, 2 or 3); required unless the config sets it.
    #[arg(long, short = 'e')]
    experiment: Option<u8>,
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<u32>,
    #[arg(long)]
    trials: Option<u32>,
    /// Worker threads; 0 uses every core. Never changes the output.
    #[arg(long, short = 'j', default_value_t = 0)]
    jobs: usize,
    #[arg(long, short = 'o', env = "QNET_XVAL_OUT", default_value = "results")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    /// Model taken from table A.
    #[arg(long, default_value = "round_train")]
    model_a: ProtocolModel,
    /// Model taken from table B.
    #[arg(long, default_value = "per_pair_handshake")]
    model_b: ProtocolModel,
    #[arg(long, short = 'o', env = "QNET_XVAL_OUT", default_value = "results")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum OracleQuery {
    /// Swap fidelity with perfect links.
    FSwap {
        #[arg(long)]
        pg: f64,
        #[arg(long)]
        pm: f64,
    },
    /// Swap fidelity with memory decoherence over 2 t1 + 2 t2 + 2 T.
    FSwapDecoherence {
        #[arg(long)]
        pg: f64,
        #[arg(long)]
        pm: f64,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        t2: f64,
        /// Swap-notification delay T in seconds.
        #[arg(long = "message")]
        message: f64,
        #[arg(long, value_parser = parse_time)]
        tau: f64,
        #[arg(long, default_value_t = 1e-6)]
        slice: f64,
    },
    /// Swap fidelity of two Werner pairs.
    FSwapWerner {
        #[arg(long)]
        f1: f64,
        #[arg(long)]
        f2: f64,
        #[arg(long)]
        pg: f64,
        #[arg(long)]
        pm: f64,
    },
    /// Werner fidelity after storage for t seconds.
    WernerDecohere {
        #[arg(long)]
        f: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, value_parser = parse_time)]
        tau: f64,
    },
    /// Rounds needed for N_Bell pairs.
    ExpectedRounds {
        #[arg(long)]
        n_bell: u32,
        #[arg(long)]
        n_mem: u32,
        #[arg(long)]
        p: f64,
    },
    /// Completion time of the round-train model.
    RoundTrainTime(LinkQuery),
    /// Completion time of the per-pair-handshake model.
    PerPairTime(LinkQuery),
    /// Identity survival of a depolarizing memory after n slices.
    Q00 {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: u64,
    },
    /// Per-slice depolarizing probability for a coherence time.
    Calibrate {
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 1e-6)]
        slice: f64,
    },
}

#[derive(Args, Debug)]
struct LinkQuery {
    /// Configuration file (defaults otherwise).
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    #[arg(long)]
    n_mem: Option<u32>,
    #[arg(long)]
    d_km: Option<f64>,
    #[arg(long)]
    n_bell: Option<u32>,
}

fn parse_time(s: &str) -> Result<f64, String> {
    match s {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => s.parse().map_err(|_| format!("`{s}` is not a number")),
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Config(String),
    Simulation(String),
    Io(String),
    Mismatch(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Config(_) => 3,
            Failure::Simulation(_) => 4,
            Failure::Io(_) => 5,
            Failure::Mismatch(_) => 6,
        }
    }

    fn line(&self) -> String {
        let (kind, msg) = match self {
            Failure::Usage(m) => ("usage", m),
            Failure::Config(m) => ("config", m),
            Failure::Simulation(m) => ("simulation", m),
            Failure::Io(m) => ("io", m),
            Failure::Mismatch(m) => ("mismatch", m),
        };
        let msg: String = msg.split_whitespace().collect::<Vec<_>>().join(" ");
        format!("error({kind}): {msg}")
    }
}

impl From<ConfigFileError> for Failure {
    fn from(e: ConfigFileError) -> Self {
        match e {
            ConfigFileError::Read { .. } => Failure::Io(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<XvalError> for Failure {
    fn from(e: XvalError) -> Self {
        match e {
            XvalError::Config(_) | XvalError::WrongExperiment { .. } => Failure::Config(e.to_string()),
            XvalError::SweepMismatch(_) => Failure::Mismatch(e.to_string()),
            XvalError::Io { .. } | XvalError::Csv(_) | XvalError::Json(_) => Failure::Io(e.to_string()),
            XvalError::Link(_) | XvalError::Noise(_) | XvalError::Oracle(_) | XvalError::ThreadPool(_) => {
                Failure::Simulation(e.to_string())
            }
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn experiment_id(n: u8) -> Result<ExperimentId, Failure> {
    ExperimentId::from_number(n).ok_or_else(|| Failure::Usage(format!("experiment must be 1, 2 or 3, got {n}")))
}

/// Built-in defaults, then the file, then explicit flags.
fn resolve_run_config(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let flag_id = args.experiment.map(experiment_id).transpose()?;
    let mut cfg = match (&args.config, flag_id) {
        (Some(path), id) => {
            let cfg = load_config(path, id.unwrap_or(ExperimentId::SymmetricLink))?;
            if let Some(id) = id {
                if cfg.id != id {
                    return Err(Failure::Config(format!(
                        "--experiment {} conflicts with experiment.id = {} in {}",
                        id,
                        cfg.id,
                        path.display()
                    )));
                }
            }
            cfg
        }
        (None, Some(id)) => ExperimentConfig::table1(id),
        (None, None) => return Err(Failure::Usage("run needs --experiment or a --config with experiment.id".into())),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(r) = args.replicas {
        cfg.replicas = r;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    cfg.check().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn run(args: &RunArgs, verbose: u8) -> Result<(), Failure> {
    let cfg = resolve_run_config(args)?;
    if verbose > 0 {
        eprintln!(
            "running experiment {} ({} configurations per model, seed {})",
            cfg.id,
            cfg.config_count(),
            cfg.seed
        );
    }
    let started = std::time::Instant::now();
    let result = xval::run_experiment(&cfg, args.jobs)?;
    let files = result.write_outputs(&args.out)?;
    if verbose > 1 {
        for model in ProtocolModel::ALL {
            let path = args.out.join(format!("exp{}_trace_{}.log", cfg.id, model));
            xval::trace_first_run(&cfg, model, Box::new(create(&path)?))?;
            eprintln!("wrote {}", path.display());
        }
    }
    if verbose > 0 {
        for f in &files {
            eprintln!("wrote {}", f.display());
        }
        eprintln!("finished in {:.1} s", started.elapsed().as_secs_f64());
    }
    let report = result.cross_validate()?;
    println!(
        "experiment {}: AGREE {}, EXPLAINED_OFFSET {}, DISAGREE {}; diagnostics {}/{} ok; output in {}",
        cfg.id,
        report.count(xval::Verdict::Agree),
        report.count(xval::Verdict::ExplainedOffset),
        report.count(xval::Verdict::Disagree),
        result.diagnostics.iter().filter(|d| d.passed).count(),
        result.diagnostics.len(),
        args.out.display()
    );
    Ok(())
}

/// Twelve significant digits.
fn sig12(v: f64) -> f64 {
    if v.is_finite() {
        format!("{v:.11e}").parse().unwrap_or(v)
    } else {
        v
    }
}

fn link_config(q: &LinkQuery) -> Result<qnet_xval::ValidatedConfig, Failure> {
    let mut base: SimConfig = match &q.config {
        Some(path) => load_config(path, ExperimentId::SymmetricLink)?.base,
        None => SimConfig::default(),
    };
    if let Some(n) = q.n_mem {
        base.hardware.n_memories = n;
    }
    if let Some(d) = q.d_km {
        base.geometry.bsa_offset_km = d;
    }
    if let Some(n) = q.n_bell {
        base.request.n_bell = n;
    }
    base.validate().map_err(|e| Failure::Config(e.to_string()))
}

fn print_timing(label: &str, t: &oracle::TimingPrediction) {
    println!("{label}.T_setup_s = {:?}", sig12(t.t_setup_s));
    println!("{label}.T_round_s = {:?}", sig12(t.t_round_s));
    println!("{label}.k = {}", t.rounds);
    println!("{label}.T_exp_s = {:?}", sig12(t.t_exp_s));
}

fn probability(name: &str, v: f64) -> Result<f64, Failure> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Failure::Config(format!("{name} = {v} is outside [0, 1]")))
    }
}

fn query(q: &OracleQuery) -> Result<(), Failure> {
    let noise = |e: qnet_xval::noise::NoiseError| Failure::Config(e.to_string());
    match *q {
        OracleQuery::FSwap { pg, pm } => {
            let v = oracle::f_swap(probability("pg", pg)?, probability("pm", pm)?);
            println!("f_swap = {:?}", sig12(v));
        }
        OracleQuery::FSwapDecoherence {
            pg,
            pm,
            t1,
            t2,
            message,
            tau,
            slice,
        } => {
            let v = oracle::f_swap_decoherence(probability("pg", pg)?, probability("pm", pm)?, t1, t2, message, tau, slice)?;
            println!("f_swap_decoherence = {:?}", sig12(v));
        }
        OracleQuery::FSwapWerner { f1, f2, pg, pm } => {
            for (name, f) in [("f1", f1), ("f2", f2)] {
                if !(0.25..=1.0).contains(&f) {
                    return Err(Failure::Config(format!("{name} = {f} is outside [1/4, 1]")));
                }
            }
            let v = oracle::f_swap_werner(f1, f2, probability("pg", pg)?, probability("pm", pm)?);
            println!("f_swap_werner = {:?}", sig12(v));
        }
        OracleQuery::WernerDecohere { f, t, tau } => {
            let f = probability("f", f)?;
            println!("werner_decohere = {:?}", sig12(werner_decohere(f, t, tau).map_err(noise)?));
        }
        OracleQuery::ExpectedRounds { n_bell, n_mem, p } => {
            println!("k = {}", oracle::expected_rounds(n_bell, n_mem, p)?);
        }
        OracleQuery::RoundTrainTime(ref l) => {
            print_timing("round_train", &oracle::quisp_expected_time(&link_config(l)?)?);
        }
        OracleQuery::PerPairTime(ref l) => {
            print_timing("per_pair_handshake", &oracle::sequence_expected_time(&link_config(l)?)?);
        }
        OracleQuery::Q00 { p, n } => {
            if !(0.0..=0.75).contains(&p) {
                return Err(Failure::Config(format!("p = {p} is outside [0, 3/4]")));
            }
            println!("q00 = {:?}", sig12(depolarizing_q00(p, n)));
        }
        OracleQuery::Calibrate { tau, slice } => {
            let p = calibrate_depolarizing(tau, slice).map_err(noise)?;
            println!("p = {:?}", sig12(p));
            println!("n = {}", coherence_slices(tau, slice).map_err(noise)?);
        }
    }
    Ok(())
}

fn validate(path: &Path, experiment: u8) -> Result<(), Failure> {
    let cfg = load_config(path, experiment_id(experiment)?)?;
    cfg.check().map_err(|e| Failure::Config(e.to_string()))?;
    println!(
        "ok: experiment {}, {} configurations per model",
        cfg.id,
        cfg.config_count()
    );
    Ok(())
}

fn read_table(path: &Path) -> Result<Vec<xval::SummaryRow>, Failure> {
    let file = File::open(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    xval::read_summary_csv(file).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn compare(args: &CompareArgs, verbose: u8) -> Result<(), Failure> {
    let a = xval::select_model(&read_table(&args.a)?, args.model_a);
    let b = xval::select_model(&read_table(&args.b)?, args.model_b);
    let report = xval::compare(&a, &b)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Failure::Io(format!("{}: {e}", args.out.display())))?;
    let stem = format!("compare_exp{}_{}_vs_{}", report.experiment, args.model_a, args.model_b);
    let text = args.out.join(format!("{stem}.txt"));
    let jsonl = args.out.join(format!("{stem}.jsonl"));
    let write = |path: &Path, bytes: &[u8]| {
        std::fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
    };
    write(&text, report.summary_text().as_bytes())?;
    write(&jsonl, &report.to_jsonl()?)?;
    if verbose > 0 {
        eprintln!("wrote {}", text.display());
        eprintln!("wrote {}", jsonl.display());
    }
    println!(
        "AGREE {}, EXPLAINED_OFFSET {}, DISAGREE {}",
        report.count(xval::Verdict::Agree),
        report.count(xval::Verdict::ExplainedOffset),
        report.count(xval::Verdict::Disagree)
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            let f = Failure::Usage(first);
            eprintln!("{}", f.line());
            return ExitCode::from(f.code());
        }
    };
    let outcome = match &cli.command {
        Command::Run(args) => run(args, cli.verbose),
        Command::Oracle(q) => query(q),
        Command::Validate { config, experiment } => validate(config, *experiment),
        Command::Compare(args) => compare(args, cli.verbose),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.line());
            ExitCode::from(f.code())
        }
    }
}
