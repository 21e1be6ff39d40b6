use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Rational64;
use serde::Serialize;

use dimlab::cli::{self, CliError, ComposeDemoConfig, ExtractInput, ExperimentConfig, GridSpec, GuardDemoConfig};
use dimlab::complexity::{ComplexityOracle, ExactConfig, ProxyConfig};
use dimlab::extractor::ExtractOverrides;
use dimlab::generators::{GeneratorKind, GeneratorSpec, Schedule};
use dimlab::ratio::parse_ratio;

fn ratio(s: &str) -> Result<Rational64, String> {
    parse_ratio(s).map_err(|e| e.to_string())
}

#[derive(Parser)]
#[command(name = "dimlab", version, about = "Constructive dimension experiments on finite prefixes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a sequence and write it as .seq
    Gen(GenArgs),
    /// Sample C(S[0..n])/n on a grid and write CSV
    Profile(ProfileArgs),
    /// Encode whole blocks of a sequence with the block codec
    Encode(CodecArgs),
    /// Decode n source bits from a record stream
    Decode(CodecArgs),
    /// Run the extension search and write R', report and profiles
    Extract(ExtractArgs),
    /// Composition-law checks and the double-encoding experiment
    ComposeDemo(DemoArgs),
    /// Guard combinator run against the unguarded machine
    GuardDemo(DemoArgs),
    /// Run every experiment in a config file and write summary.csv
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Zeros,
    Prng,
    Dilute,
    Oscillate,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, value_parser = ratio)]
    alpha: Option<Rational64>,
    #[arg(long, value_parser = ratio)]
    beta: Option<Rational64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Oscillation macro-block base
    #[arg(long, default_value_t = 16)]
    base: u64,
    #[arg(long)]
    n: u64,
    /// Defaults to <kind>.seq
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Proxy,
    Exact,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, value_enum, default_value = "proxy")]
    oracle: OracleKind,
    /// Tree depth of the proxy's context model
    #[arg(long)]
    ctw_depth: Option<usize>,
    /// Exact oracle: longest program considered
    #[arg(long)]
    max_program_len: Option<u64>,
    /// Exact oracle: search budget per string
    #[arg(long)]
    budget: Option<u64>,
}

impl OracleArgs {
    fn build(&self) -> ComplexityOracle {
        match self.oracle {
            OracleKind::Proxy => {
                let d = ProxyConfig::default();
                ComplexityOracle::DictionaryProxy(ProxyConfig { ctw_depth: self.ctw_depth.unwrap_or(d.ctw_depth) })
            }
            OracleKind::Exact => {
                let d = ExactConfig::default();
                ComplexityOracle::exact(self.max_program_len.unwrap_or(d.max_program_len), self.budget.unwrap_or(d.budget))
            }
        }
    }
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    seq: PathBuf,
    #[command(flatten)]
    oracle: OracleArgs,
    #[arg(long, default_value_t = 64)]
    grid_start: u64,
    #[arg(long, value_parser = ratio, default_value = "13/10")]
    grid_ratio: Rational64,
    /// Extra sample points (repeatable)
    #[arg(long)]
    extra: Vec<u64>,
    #[arg(long)]
    tail_start: Option<u64>,
    #[arg(long, default_value = "profile.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct CodecArgs {
    #[arg(long)]
    seq: PathBuf,
    /// Encode: source bits to cover (default: all whole blocks). Decode: required.
    #[arg(long)]
    n: Option<u64>,
    #[command(flatten)]
    oracle: OracleArgs,
    #[arg(long)]
    out: PathBuf,
    /// Usage trace CSV
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    /// Source sequence
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    seq: Option<PathBuf>,
    /// Experiment config supplying generator, n, epsilon and overrides
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ratio)]
    epsilon: Option<Rational64>,
    #[arg(long)]
    target_n: Option<u64>,
    #[arg(long, value_parser = ratio)]
    delta: Option<Rational64>,
    #[arg(long, value_parser = ratio)]
    d: Option<Rational64>,
    /// Running budget D
    #[arg(long = "big-d", value_parser = ratio)]
    big_d: Option<Rational64>,
    #[arg(long)]
    n0: Option<u64>,
    #[arg(long)]
    search_budget: Option<u64>,
    #[arg(long)]
    full_lookahead: Option<u64>,
    #[arg(long)]
    max_lookahead: Option<u64>,
    #[arg(long)]
    exhaustive_cap: Option<u32>,
    #[command(flatten)]
    oracle: OracleArgs,
    #[arg(long, default_value = "extract-out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    config: PathBuf,
    /// Defaults to the config file's directory
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn print<T: Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    CliError::Usage(msg.into()).into()
}

fn gen(a: GenArgs) -> Result<()> {
    let kind = match a.kind {
        Kind::Zeros => GeneratorKind::Zeros,
        Kind::Prng => GeneratorKind::Prng,
        Kind::Dilute => GeneratorKind::Dilute,
        Kind::Oscillate => GeneratorKind::Oscillate,
    };
    let spec = GeneratorSpec { kind, alpha: a.alpha, beta: a.beta, seed: a.seed, schedule: Schedule { base: a.base } };
    let out = a.out.unwrap_or_else(|| PathBuf::from(format!("{}.seq", kind.name())));
    let path = cli::gen(&spec, a.n, &out)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn extract(a: ExtractArgs) -> Result<()> {
    let mut ov = ExtractOverrides::default();
    // with --config the config's oracle is used and the oracle flags are ignored
    let (input, epsilon, target_n, oracle) = match (&a.seq, &a.config) {
        (Some(p), _) => (ExtractInput::Seq { path: p.clone() }, None, None, a.oracle.build()),
        (None, Some(c)) => {
            let file = cli::load_config_file(c)?;
            let [cfg]: [ExperimentConfig; 1] =
                file.experiments.try_into().map_err(|_| usage("extract --config needs a single-experiment file"))?;
            ov = cfg.extractor.clone();
            let t = cfg.target_n();
            (ExtractInput::Generated { generator: cfg.generator, n: cfg.n }, Some(cfg.epsilon), Some(t), cfg.oracle)
        }
        (None, None) => return Err(usage("one of --seq or --config is required")),
    };
    let target_n = a.target_n.or(target_n);
    let epsilon = a.epsilon.or(epsilon).ok_or_else(|| usage("--epsilon is required"))?;
    ov.delta = a.delta.or(ov.delta);
    ov.d = a.d.or(ov.d);
    ov.big_d = a.big_d.or(ov.big_d);
    ov.n0 = a.n0.or(ov.n0);
    ov.search_budget = a.search_budget.or(ov.search_budget);
    ov.full_lookahead = a.full_lookahead.or(ov.full_lookahead);
    ov.max_lookahead = a.max_lookahead.or(ov.max_lookahead);
    ov.exhaustive_cap = a.exhaustive_cap.or(ov.exhaustive_cap);
    let out = cli::extract_cmd(&input, epsilon, target_n, &ov, &oracle, &a.out_dir)?;
    let rep = &out.extraction;
    print(&serde_json::json!({
        "covered": rep.covered,
        "r_prime_len": rep.r_prime_len,
        "stages": rep.stages.len(),
        "dim_hat_H_S": dimlab::ratio::to_decimal(rep.dim_h_s, 6),
        "dim_hat_P_S": dimlab::ratio::to_decimal(rep.dim_p_s, 6),
        "target_h": dimlab::ratio::to_decimal(out.design_target_h.unwrap_or(rep.target_h), 6),
        "target_p": dimlab::ratio::to_decimal(rep.target_p, 6),
        "dim_hat_H_R": dimlab::ratio::to_decimal(rep.dim_h_r, 6),
        "dim_hat_P_R": dimlab::ratio::to_decimal(rep.dim_p_r, 6),
        "verification_passed": rep.verification.passed(),
    }))
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Gen(a) => gen(a),
        Cmd::Profile(a) => {
            let grid = GridSpec { start: a.grid_start, ratio: a.grid_ratio, extra: a.extra, tail_start: a.tail_start };
            print(&cli::profile_cmd(&a.seq, &a.oracle.build(), &grid, &a.out)?)
        }
        Cmd::Encode(a) => {
            print(&cli::encode_cmd(&a.seq, a.n, &a.oracle.build(), &a.out, a.trace.as_deref())?)
        }
        Cmd::Decode(a) => {
            let n = a.n.ok_or_else(|| usage("decode needs --n"))?;
            let used = cli::decode_cmd(&a.seq, n, &a.oracle.build(), &a.out, a.trace.as_deref())?;
            print(&serde_json::json!({ "n": n, "usage": used }))
        }
        Cmd::Extract(a) => extract(a),
        Cmd::ComposeDemo(a) => {
            let cfg = ComposeDemoConfig::load(&a.config)?;
            let s = cli::compose_demo(&cfg, &a.out_dir)?;
            print(&s)?;
            if !s.all_laws_hold() {
                anyhow::bail!("composition law violated");
            }
            Ok(())
        }
        Cmd::GuardDemo(a) => {
            let cfg = GuardDemoConfig::load(&a.config)?;
            print(&cli::guard_demo(&cfg, &a.out_dir)?)
        }
        Cmd::Experiment(a) => {
            let rows = cli::experiment(&a.config, a.out_dir.as_deref())
                .with_context(|| format!("experiment {}", a.config.display()))?;
            println!("{}", dimlab::cli::SummaryRow::HEADER);
            for r in &rows {
                println!("{}", r.csv_line());
            }
            Ok(())
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    e.chain().find_map(|c| c.downcast_ref::<CliError>()).map_or(1, CliError::exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

