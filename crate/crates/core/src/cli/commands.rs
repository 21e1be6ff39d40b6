use std::path::{Path, PathBuf};

use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{ComposeDemoConfig, ExperimentConfig, GridSpec, GuardDemoConfig, SCHEMA_VERSION};
use super::{io_err, load_config_file, sha256_hex, split_out, Artifacts, CliError, CliResult, TOOL_VERSION};
use crate::codec::{compression_trace, decode, encode, Mode};
use crate::complexity::ComplexityOracle;
use crate::dimension::{default_tail_start, profile, rho_hats, DimensionProfile};
use crate::extractor::{extract, ExtractOverrides, ExtractionReport};
use crate::generators::GeneratorSpec;
use crate::ratio::{serde_ratio, serde_ratio_opt, to_decimal};
use crate::reductions::{
    check_composition_law, double_encode, run, DoubleEncodeReport, Guard, LawReport, MachineSpec, RunStatus,
};
use crate::seqcore::{block_containing, read_seq_file, triangular, BitSequence};

fn read_input(path: &Path) -> CliResult<(BitSequence, String)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let seq = read_seq_file(path)?;
    Ok((seq, sha256_hex(&bytes)))
}

fn dec6(r: Rational64) -> String {
    to_decimal(r, 6)
}

/// Writes `S[0..n]` for a generator spec.
pub fn gen(spec: &GeneratorSpec, n: u64, out: &Path) -> CliResult<PathBuf> {
    let s = spec.generate(n)?;
    let (dir, name) = split_out(out)?;
    let art = Artifacts::new(&dir, "gen", &json!({ "generator": spec, "n": n }))?;
    art.write_seq(&name, &s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub n: u64,
    pub tail_start: u64,
    #[serde(with = "serde_ratio")]
    pub dim_hat_h: Rational64,
    #[serde(with = "serde_ratio")]
    pub dim_hat_p: Rational64,
    /// False if any sample is only an upper bound.
    pub confirmed: bool,
}

fn summarize(p: &DimensionProfile, n: u64) -> CliResult<ProfileSummary> {
    let (h, pk) = p.tail_bounds()?;
    Ok(ProfileSummary {
        n,
        tail_start: p.tail_start,
        dim_hat_h: h,
        dim_hat_p: pk,
        confirmed: p.samples.iter().all(|s| s.confirmed),
    })
}

pub fn profile_cmd(seq: &Path, oracle: &ComplexityOracle, grid: &GridSpec, out: &Path) -> CliResult<ProfileSummary> {
    grid.validate()?;
    let (s, input) = read_input(seq)?;
    let n = s.len() as u64;
    if n == 0 {
        return Err(CliError::Usage(format!("{}: empty sequence", seq.display())));
    }
    let tail = grid.tail_start.unwrap_or_else(|| default_tail_start(n));
    let prof = profile(&s, &grid.points(n), oracle, Some(tail))?;
    let (dir, name) = split_out(out)?;
    let art = Artifacts::new(&dir, "profile", &json!({ "input_sha256": input, "oracle": oracle, "grid": grid }))?;
    art.write(&name, prof.to_csv().as_bytes())?;
    summarize(&prof, n)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeSummary {
    pub covered: u64,
    pub blocks: u64,
    pub encoded_len: u64,
    pub literal_blocks: u64,
    pub conditional_blocks: u64,
    #[serde(with = "serde_ratio_opt")]
    pub rho_minus: Option<Rational64>,
    #[serde(with = "serde_ratio_opt")]
    pub rho_plus: Option<Rational64>,
}

/// Encodes the whole blocks of a `.seq` file (or through position `n − 1`).
pub fn encode_cmd(
    seq: &Path,
    n: Option<u64>,
    oracle: &ComplexityOracle,
    out: &Path,
    trace_out: Option<&Path>,
) -> CliResult<EncodeSummary> {
    let (s, input) = read_input(seq)?;
    let len = s.len() as u64;
    let covered = match n {
        None => triangular(block_containing(len).complete_blocks),
        Some(n) => {
            let p = block_containing(n);
            let c = if triangular(p.complete_blocks) == n { n } else { triangular(p.block) };
            if c > len {
                return Err(CliError::Usage(format!("n = {n} needs {c} source bits; the file has {len}")));
            }
            c
        }
    };
    if covered == 0 {
        return Err(CliError::Usage("nothing to encode: fewer bits than one block".into()));
    }
    let (ratios, enc, _) = compression_trace(&s, covered, oracle, None)?;
    let bounds = rho_hats(&ratios).ok();
    let (dir, name) = split_out(out)?;
    let cfg = json!({ "input_sha256": input, "oracle": oracle, "n": covered });
    let art = Artifacts::new(&dir, "encode", &cfg)?;
    art.write_seq(&name, &enc.bits)?;
    if let Some(t) = trace_out {
        let (tdir, tname) = split_out(t)?;
        Artifacts::new(&tdir, "encode", &cfg)?.write(&tname, ratios.to_usage_csv().as_bytes())?;
    }
    let lit = enc.records.iter().filter(|r| r.0 == Mode::Literal).count() as u64;
    Ok(EncodeSummary {
        covered,
        blocks: enc.blocks(),
        encoded_len: enc.bits.len() as u64,
        literal_blocks: lit,
        conditional_blocks: enc.blocks() - lit,
        rho_minus: bounds.map(|b| b.0),
        rho_plus: bounds.map(|b| b.1),
    })
}

/// Decodes `n` source bits from a record stream; returns bits read.
pub fn decode_cmd(
    seq: &Path,
    n: u64,
    oracle: &ComplexityOracle,
    out: &Path,
    trace_out: Option<&Path>,
) -> CliResult<u64> {
    let (r, input) = read_input(seq)?;
    let (s, trace) = decode(&r, n, oracle)?;
    let (dir, name) = split_out(out)?;
    let cfg = json!({ "input_sha256": input, "oracle": oracle, "n": n });
    Artifacts::new(&dir, "decode", &cfg)?.write_seq(&name, &s)?;
    if let Some(t) = trace_out {
        let (tdir, tname) = split_out(t)?;
        let csv = trace.ratio_profile(n, None).to_usage_csv();
        Artifacts::new(&tdir, "decode", &cfg)?.write(&tname, csv.as_bytes())?;
    }
    Ok(trace.usage(n))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ExtractInput {
    Seq { path: PathBuf },
    Generated { generator: GeneratorSpec, n: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractOutcome {
    pub schema_version: u32,
    pub tool_version: &'static str,
    /// `low/high − ε` from the generator's designed rates, when known.
    #[serde(with = "serde_ratio_opt")]
    pub design_target_h: Option<Rational64>,
    pub extraction: ExtractionReport,
}

fn design_target(spec: &GeneratorSpec, epsilon: Rational64) -> Option<Rational64> {
    let (lo, hi) = spec.targets();
    (hi > Rational64::from_integer(0)).then(|| lo / hi - epsilon)
}

fn stages_csv(rep: &ExtractionReport) -> String {
    let mut s = String::from("stage,first_block,last_block,boundary,usage,b_limit,c_min_slack,candidates\n");
    for r in &rep.stages {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.stage,
            r.first_block,
            r.last_block,
            r.boundary,
            r.usage,
            r.b_limit,
            r.c_min_slack.as_deref().unwrap_or(""),
            r.candidates_tried
        ));
    }
    s
}

pub fn extract_cmd(
    input: &ExtractInput,
    epsilon: Rational64,
    target_n: Option<u64>,
    overrides: &ExtractOverrides,
    oracle: &ComplexityOracle,
    out_dir: &Path,
) -> CliResult<ExtractOutcome> {
    let (s, source_id, design) = match input {
        ExtractInput::Seq { path } => {
            let (s, h) = read_input(path)?;
            (s, json!({ "input_sha256": h }), None)
        }
        ExtractInput::Generated { generator, n } => {
            (generator.generate(*n)?, json!({ "generator": generator, "n": n }), design_target(generator, epsilon))
        }
    };
    let n = s.len() as u64;
    let target = target_n.unwrap_or(n - n / 20);
    let cfg = json!({
        "source": source_id,
        "epsilon": crate::ratio::to_fraction(epsilon),
        "target_n": target,
        "overrides": overrides,
        "oracle": oracle,
    });
    let art = Artifacts::new(out_dir, "extract", &cfg)?;
    let (rp, rep) = extract(&s, epsilon, target, oracle, overrides)?;
    art.write_seq("R_prime.seq", &rp)?;
    if let Some(p) = &rep.source_profile {
        art.write("profile_S.csv", p.to_csv().as_bytes())?;
    }
    if let Some(p) = &rep.r_prime_profile {
        art.write("profile_R.csv", p.to_csv().as_bytes())?;
    }
    art.write("stages.csv", stages_csv(&rep).as_bytes())?;
    let outcome =
        ExtractOutcome { schema_version: SCHEMA_VERSION, tool_version: TOOL_VERSION, design_target_h: design, extraction: rep };
    art.write_json("report.json", &outcome)?;
    Ok(outcome)
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    #[serde(with = "serde_ratio_opt")]
    pub dim_h_s: Option<Rational64>,
    #[serde(with = "serde_ratio_opt")]
    pub dim_p_s: Option<Rational64>,
    #[serde(with = "serde_ratio_opt")]
    pub target: Option<Rational64>,
    #[serde(with = "serde_ratio_opt")]
    pub dim_h_r: Option<Rational64>,
    #[serde(with = "serde_ratio_opt")]
    pub dim_p_r: Option<Rational64>,
    /// `pass`, `fail: …`, `precondition-failure: …`, `exhausted: …` or
    /// `error: …`.
    pub status: String,
}

impl SummaryRow {
    pub const HEADER: &'static str = "name,dim_hat_H_S,dim_hat_P_S,target,dim_hat_H_R,dim_hat_P_R,pass/fail";

    pub fn passed(&self) -> bool {
        self.status == "pass"
    }

    pub fn csv_line(&self) -> String {
        let f = |r: Option<Rational64>| r.map(dec6).unwrap_or_default();
        let status = if self.status.contains([',', '"']) {
            format!("\"{}\"", self.status.replace('"', "\"\""))
        } else {
            self.status.clone()
        };
        format!(
            "{},{},{},{},{},{},{}",
            self.name,
            f(self.dim_h_s),
            f(self.dim_p_s),
            f(self.target),
            f(self.dim_h_r),
            f(self.dim_p_r),
            status
        )
    }
}

fn judge(out: &ExtractOutcome, epsilon: Rational64) -> String {
    let rep = &out.extraction;
    let target = out.design_target_h.unwrap_or(rep.target_h);
    let mut fails = Vec::new();
    if !rep.verification.passed() {
        fails.push("post-hoc verification found violations".to_string());
    }
    if rep.dim_h_r < target {
        fails.push(format!("dim_H(R') {} below target {}", dec6(rep.dim_h_r), dec6(target)));
    }
    if rep.dim_p_r < Rational64::from_integer(1) - epsilon {
        fails.push(format!("dim_P(R') {} below 1 - epsilon", dec6(rep.dim_p_r)));
    }
    if rep.dim_h_r < rep.dim_h_s {
        fails.push("dim_H(R') below dim_H(S)".into());
    }
    if rep.dim_p_r < rep.dim_p_s - Rational64::new(1, 20) {
        fails.push("dim_P(R') below dim_P(S) - 0.05".into());
    }
    if fails.is_empty() {
        "pass".into()
    } else {
        format!("fail: {}", fails.join("; "))
    }
}

fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> SummaryRow {
    let mut row = SummaryRow {
        name: cfg.name.clone(),
        dim_h_s: None,
        dim_p_s: None,
        target: design_target(&cfg.generator, cfg.epsilon),
        dim_h_r: None,
        dim_p_r: None,
        status: String::new(),
    };
    let result = (|| -> CliResult<String> {
        let art = Artifacts::new(dir, "experiment", cfg)?;
        let s = cfg.generator.generate(cfg.n)?;
        art.write_seq("S.seq", &s)?;
        let tail = cfg.grid.tail_start.unwrap_or_else(|| default_tail_start(cfg.n));
        let mut grid = cfg.grid.clone();
        grid.extra.extend(cfg.generator.phase_boundaries(cfg.n));
        let prof = profile(&s, &grid.points(cfg.n), &ComplexityOracle::proxy(), Some(tail))?;
        art.write("profile_S.csv", prof.to_csv().as_bytes())?;
        let (h, p) = prof.tail_bounds()?;
        row.dim_h_s = Some(h);
        row.dim_p_s = Some(p);

        let covered = triangular(block_containing(cfg.n).complete_blocks);
        let (ratios, enc, _) = compression_trace(&s, covered, &cfg.oracle, Some(tail))?;
        art.write_seq("R_codec.seq", &enc.bits)?;
        art.write("codec_usage.csv", ratios.to_usage_csv().as_bytes())?;

        let input = ExtractInput::Generated { generator: cfg.generator.clone(), n: cfg.n };
        let out = match extract_cmd(&input, cfg.epsilon, Some(cfg.target_n()), &cfg.extractor, &cfg.oracle, dir) {
            Ok(o) => o,
            Err(CliError::Extract(e @ crate::extractor::ExtractError::Precondition { .. })) => {
                return Ok(format!("precondition-failure: {e}"))
            }
            Err(CliError::Extract(e @ crate::extractor::ExtractError::Exhausted { .. })) => {
                return Ok(format!("exhausted: {e}"))
            }
            Err(e) => return Err(e),
        };
        row.dim_h_r = Some(out.extraction.dim_h_r);
        row.dim_p_r = Some(out.extraction.dim_p_r);
        Ok(judge(&out, cfg.epsilon))
    })();
    row.status = match result {
        Ok(s) => s,
        Err(e) => format!("error: {e}"),
    };
    row
}

/// Runs every experiment in a config file and writes `summary.csv`.
/// Outputs go under `out_dir`, or next to the config file.
pub fn experiment(config: &Path, out_dir: Option<&Path>) -> CliResult<Vec<SummaryRow>> {
    let file = load_config_file(config)?;
    let base = match out_dir {
        Some(d) => d.to_path_buf(),
        None => config.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")).to_path_buf(),
    };
    std::fs::create_dir_all(&base).map_err(io_err(&base))?;
    let rows: Vec<SummaryRow> = file
        .experiments
        .par_iter()
        .map(|cfg| {
            let dir = base.join(cfg.output_dir.as_deref().unwrap_or(&cfg.name));
            run_experiment(cfg, &dir)
        })
        .collect();
    let mut csv = String::from(SummaryRow::HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.csv_line());
        csv.push('\n');
    }
    Artifacts::new(&base, "experiment", &file)?.write("summary.csv", csv.as_bytes())?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct PairRow {
    pub first: String,
    pub second: String,
    pub law: Option<LawReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComposeDemoSummary {
    pub double_encode: DoubleEncodeReport,
    pub pairs: Vec<PairRow>,
}

impl ComposeDemoSummary {
    pub fn all_laws_hold(&self) -> bool {
        self.double_encode.law_mismatch.is_none()
            && self.pairs.iter().all(|p| p.law.as_ref().is_some_and(LawReport::holds))
    }
}

/// Runs the composition law on each machine pair and the double-encoding
/// experiment. Pairs whose first machine is the codec decoder read the
/// encoded source; others read the source itself.
pub fn compose_demo(cfg: &ComposeDemoConfig, out_dir: &Path) -> CliResult<ComposeDemoSummary> {
    let art = Artifacts::new(out_dir, "compose-demo", cfg)?;
    let s = cfg.source.generate(triangular(block_containing(cfg.n).block))?;
    let covered = {
        let p = block_containing(cfg.n);
        if triangular(p.complete_blocks) == cfg.n { cfg.n } else { triangular(p.block) }
    };
    let tail = cfg.tail_start.unwrap_or_else(|| default_tail_start(covered));
    let double = double_encode(&s, covered, tail, &cfg.oracle, cfg.step_budget)?;
    let r1 = encode(&s, covered, &cfg.oracle)?.bits;

    let pairs: Vec<PairRow> = cfg
        .pairs
        .par_iter()
        .map(|[a, b]| {
            let src: &[bool] = if matches!(a, MachineSpec::CodecDecode { .. }) { &r1 } else { &s };
            let res = check_composition_law(a, b, &src, cfg.law_n, cfg.step_budget);
            PairRow {
                first: a.label(),
                second: b.label(),
                error: res.as_ref().err().map(|e| e.to_string()),
                law: res.ok(),
            }
        })
        .collect();

    art.write("double_encode.csv", double.to_csv().as_bytes())?;
    let mut csv = String::from("first,second,n,intermediate_len,law\n");
    for p in &pairs {
        let (n, mid, law) = match (&p.law, &p.error) {
            (Some(l), _) => (
                l.n.to_string(),
                l.intermediate_len.to_string(),
                l.mismatch.map_or("holds".to_string(), |m| format!("fails at n={m}")),
            ),
            (None, e) => (String::new(), String::new(), format!("error: {}", e.as_deref().unwrap_or(""))),
        };
        csv.push_str(&format!("{},{},{n},{mid},{law}\n", p.first, p.second));
    }
    art.write("pairs.csv", csv.as_bytes())?;
    let summary = ComposeDemoSummary { double_encode: double, pairs };
    art.write_json("compose.json", &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct GuardDemoSummary {
    pub status: RunStatus,
    pub produced: u64,
    pub unguarded_produced: u64,
    pub first_zero: Option<u64>,
    pub first_success_m: Option<u64>,
    pub cutoff: u64,
    /// Positions `n ≥ cutoff` (within both outputs) where guarded and
    /// unguarded bits differ.
    pub disagreements_past_cutoff: u64,
}

pub fn guard_demo(cfg: &GuardDemoConfig, out_dir: &Path) -> CliResult<GuardDemoSummary> {
    let art = Artifacts::new(out_dir, "guard-demo", cfg)?;
    let s = cfg.source.generate(cfg.n)?;
    let mut g = Guard::new(cfg.machine.build(), cfg.alpha_prime, cfg.oracle, cfg.schedule);
    let guarded = run(&mut g, &s, cfg.output_len, cfg.step_budget);
    let plain = run(&mut *cfg.machine.build(), &s, cfg.output_len, cfg.step_budget);
    let log = g.log();
    let cutoff = log.cutoff();
    let common = guarded.output.len().min(plain.output.len());
    let disagreements =
        (cutoff as usize..common).filter(|&k| guarded.output[k] != plain.output[k]).count() as u64;

    let mut csv = String::from("n,guarded,unguarded,forced_by_m\n");
    for (k, &x) in guarded.output.iter().enumerate() {
        let u = plain.output.get(k).map(|&b| (b as u8).to_string()).unwrap_or_default();
        let m = log.decisions[k].map(|m| m.to_string()).unwrap_or_default();
        csv.push_str(&format!("{k},{},{u},{m}\n", x as u8));
    }
    art.write("guard.csv", csv.as_bytes())?;
    art.write("checks.csv", log.to_csv().as_bytes())?;
    let summary = GuardDemoSummary {
        status: guarded.status,
        produced: guarded.output.len() as u64,
        unguarded_produced: plain.output.len() as u64,
        first_zero: log.first_zero(),
        first_success_m: log.first_success().map(|c| c.m),
        cutoff,
        disagreements_past_cutoff: disagreements,
    };
    art.write_json("guard.json", &summary)?;
    Ok(summary)
}
