//! `osse-lab`: build indexes, issue queries, report privacy budgets and run attack experiments.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use osse_core::attacks::{AttackKind, AttackParams};
use osse_core::corpus::{compute_stats, gen_synthetic_corpus, ingest_dataset, Dataset, DatasetStats, FrequencyLaw, IngestOptions, Keyword, SyntheticSpec};
use osse_core::harness::{
    emit, evaluate_checks, measure_costs, output_dir, run_experiment, write_costs_csv, AttackConfig, CorpusConfig, CostReport,
    CountermaxRule, EmitFormat, ExperimentConfig, QueryConfig, QueryDist, ResultRow, RowKind, Sampler, SchemeConfig, OUTPUT_DIR_ENV,
};
use osse_core::leakage::{observe, write_trace_csv};
use osse_core::privacy::{dp_report, expected_matching_docs, fpr_for_epsilon, overhead_report, pq_from, tpr_fpr, KeywordDistribution};
use osse_core::rng::rng_from_seed;
use osse_core::scheme::codec::{read_index, write_index};
use osse_core::scheme::{build_index, clrz_build, derive_params, gen_token, search, tightest_countermax, Defense, Hashing, ParamOptions, SchemeParams};

#[derive(Parser)]
#[command(name = "osse-lab", version, about = "Obfuscated searchable encryption laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Run(RunArgs),
    /// Privacy budgets of both obfuscation schemes and, given corpus sizes, the predicted costs.
    DpReport(DpArgs),
    /// Build an OSSE index from a corpus and write it to disk.
    BuildIndex(BuildArgs),
    /// Query a stored index.
    Query(QueryArgs),
    /// Build the fixed-obfuscation baseline index.
    ClrzBuild(ClrzArgs),
    /// Run one query-recovery attack against one defense setting.
    Attack(AttackArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Exit with status 1 if any configured check fails.
    #[arg(long)]
    check: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Law {
    Uniform,
    Zipf,
}

impl From<Law> for FrequencyLaw {
    fn from(l: Law) -> Self {
        match l {
            Law::Uniform => FrequencyLaw::Uniform,
            Law::Zipf => FrequencyLaw::Zipf,
        }
    }
}

#[derive(Args, Clone)]
struct CorpusArgs {
    /// JSON-lines corpus (`{"id": .., "tokens": [..]}` per line). Without it a synthetic corpus is generated.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    /// Keyword universe size (for file input: keep the most frequent tokens).
    #[arg(long, default_value_t = 100)]
    universe: usize,
    #[arg(long, default_value_t = 1000)]
    freqmax: usize,
    #[arg(long, value_enum, default_value_t = Law::Zipf)]
    law: Law,
    #[arg(long)]
    sizemax: Option<usize>,
    #[arg(long, default_value_t = 0)]
    corpus_seed: u64,
}

impl CorpusArgs {
    fn load(&self) -> Result<Dataset> {
        Ok(match &self.input {
            Some(path) => ingest_dataset(path, &IngestOptions::new(self.universe)).with_context(|| format!("reading {}", path.display()))?,
            None => gen_synthetic_corpus(&self.spec(self.corpus_seed))?,
        })
    }

    fn spec(&self, seed: u64) -> SyntheticSpec {
        SyntheticSpec { n: self.n, universe: self.universe, law: self.law.into(), freqmax: self.freqmax, sizemax: self.sizemax, seed }
    }

    fn config(&self) -> CorpusConfig {
        match &self.input {
            Some(path) => CorpusConfig::File { path: path.clone(), universe: self.universe },
            None => CorpusConfig::Synthetic {
                n: self.n,
                universe: self.universe,
                law: self.law.into(),
                freqmax: self.freqmax,
                sizemax: self.sizemax,
                per_seed: true,
            },
        }
    }
}

#[derive(Args, Clone, Copy)]
struct RateArgs {
    #[arg(long, requires = "fpr", conflicts_with_all = ["p", "q"])]
    tpr: Option<f64>,
    #[arg(long, requires = "tpr")]
    fpr: Option<f64>,
    #[arg(long, requires = "q")]
    p: Option<f64>,
    #[arg(long, requires = "p")]
    q: Option<f64>,
}

impl RateArgs {
    /// `(p, q)` when any rates were given.
    fn pq(&self) -> Result<Option<(f64, f64)>> {
        Ok(match (self.tpr, self.fpr, self.p, self.q) {
            (Some(t), Some(f), _, _) => Some(pq_from(t, f)?),
            (_, _, Some(p), Some(q)) => Some((p, q)),
            _ => None,
        })
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Table,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Uniform,
    Zipf,
    Worst,
}

#[derive(Args)]
struct DpArgs {
    #[command(flatten)]
    rates: RateArgs,
    /// Also solve for the FPR that gives this budget at the given TPR.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Documents; with `--freqmax` enables the cost report.
    #[arg(long, requires = "freqmax")]
    n: Option<usize>,
    #[arg(long, requires = "n")]
    freqmax: Option<usize>,
    #[arg(long, default_value_t = 100)]
    universe: usize,
    #[arg(long, value_enum, default_value_t = HashingArg::Single)]
    hashing: HashingArg,
    /// Counter budget; defaults to the closed-form bound.
    #[arg(long)]
    countermax: Option<u32>,
    /// Mean true result size; defaults to the value implied by `--dist`.
    #[arg(long)]
    ew: Option<f64>,
    #[arg(long, value_enum, default_value_t = Dist::Uniform)]
    dist: Dist,
    #[arg(long, default_value_t = 1.0)]
    token_size: f64,
    #[arg(long, default_value_t = 100.0)]
    doc_size: f64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum HashingArg {
    Single,
    Dual,
}

impl From<HashingArg> for Hashing {
    fn from(h: HashingArg) -> Self {
        match h {
            HashingArg::Single => Hashing::Single,
            HashingArg::Dual => Hashing::Dual,
        }
    }
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, value_enum, default_value_t = HashingArg::Single)]
    hashing: HashingArg,
    /// `formula`, `tight` or a number.
    #[arg(long, default_value = "formula")]
    countermax: CountermaxRule,
    /// Default query rates stored with the index (p = 1, q = 0 otherwise).
    #[command(flatten)]
    rates: RateArgs,
    #[arg(long, default_value = "index.osse")]
    out: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long, default_value = "index.osse")]
    index: PathBuf,
    /// Keyword code; repeat for a query sequence.
    #[arg(long, required = true)]
    keyword: Vec<Keyword>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the rates stored in the index.
    #[command(flatten)]
    rates: RateArgs,
    /// Write the obfuscated trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ClrzArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    tpr: f64,
    #[arg(long)]
    fpr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "clrz.json")]
    out: PathBuf,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long, value_parser = parse_attack)]
    attack: AttackKind,
    #[arg(long, value_parser = parse_defense)]
    defense: Defense,
    #[arg(long, default_value_t = 0.9999)]
    tpr: f64,
    #[arg(long, default_value_t = 0.01)]
    fpr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Consecutive seeds starting at `--seed`.
    #[arg(long, default_value_t = 1)]
    runs: u64,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Queries (per week for the frequency attack).
    #[arg(long, default_value_t = 200)]
    queries: usize,
    /// Weeks of the frequency-attack workload.
    #[arg(long, default_value_t = 20)]
    weeks: usize,
    #[arg(long, default_value = "tight")]
    countermax: CountermaxRule,
    /// Attack parameters as JSON, e.g. '{"known_fraction": 0.1}'.
    #[arg(long)]
    params: Option<String>,
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
}

fn parse_attack(s: &str) -> Result<AttackKind, String> {
    s.parse()
}

fn parse_defense(s: &str) -> Result<Defense, String> {
    s.parse()
}

/// Relative output paths land under `$OSSE_LAB_OUT` when it is set.
fn resolve_out(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() && path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::DpReport(a) => cmd_dp(a).map(|_| ExitCode::SUCCESS),
        Command::BuildIndex(a) => cmd_build(a).map(|_| ExitCode::SUCCESS),
        Command::Query(a) => cmd_query(a).map(|_| ExitCode::SUCCESS),
        Command::ClrzBuild(a) => cmd_clrz(a).map(|_| ExitCode::SUCCESS),
        Command::Attack(a) => cmd_attack(a).map(|_| ExitCode::SUCCESS),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Cost measurements as run rows so checks can refer to them.
fn cost_rows(reports: &[CostReport], digest: &str) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for r in reports {
        let metrics = [
            ("tokens_rel_error", r.tokens_rel_error),
            ("returned_rel_error", r.returned_rel_error),
            ("evaluations_within_bound", r.evaluations_within_bound as u8 as f64),
            ("empirical_overhead", r.empirical_overhead),
            ("predicted_overhead", r.predicted.overhead),
        ];
        for (metric, value) in metrics {
            rows.push(ResultRow {
                digest: digest.to_string(),
                attack: None,
                defense: r.setting.defense,
                tpr: r.setting.tpr,
                fpr: r.setting.fpr,
                seed: None,
                kind: RowKind::Run,
                metric: metric.into(),
                value,
                runtime_ms: 0.0,
            });
        }
    }
    rows
}

fn cmd_run(a: RunArgs) -> Result<ExitCode> {
    let cfg = ExperimentConfig::load(&a.config).with_context(|| format!("loading {}", a.config.display()))?;
    let mut rows = run_experiment(&cfg)?;
    let dir = output_dir(cfg.output.as_deref());
    let mut written = emit(&rows, EmitFormat::Csv, &dir, &cfg.name)?;
    written.extend(emit(&rows, EmitFormat::SvgPlot, &dir, &cfg.name)?);
    if cfg.costs.is_some() {
        let reports = measure_costs(&cfg)?;
        let path = dir.join(format!("{}_costs.csv", cfg.name));
        write_costs_csv(&reports, create(&path)?)?;
        written.push(path);
        rows.extend(cost_rows(&reports, &cfg.digest()));
    }
    for r in rows.iter().filter(|r| r.kind == RowKind::Mean) {
        let attack = r.attack.map(|k| k.to_string()).unwrap_or_else(|| "-".into());
        println!("{attack:>9} {:>5} tpr={:<7} fpr={:<7} {:<22} {:.4}", r.defense, r.tpr, r.fpr, r.metric, r.value);
    }
    for p in &written {
        println!("wrote {}", p.display());
    }
    let results = evaluate_checks(&cfg.checks, &rows);
    for c in &results {
        let obs = c.observed.map(|v| format!("{v:.6}")).unwrap_or_else(|| "no data".into());
        println!("{} {} (observed {obs})", if c.passed { "PASS" } else { "FAIL" }, c.description);
    }
    if a.check && results.iter().any(|c| !c.passed) {
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_dp(a: DpArgs) -> Result<()> {
    let Some((p, q)) = a.rates.pq()? else { bail!("give --tpr/--fpr or --p/--q") };
    let (tpr, fpr) = tpr_fpr(p, q);
    let mut table: Vec<(String, String)> = vec![
        ("p".into(), p.to_string()),
        ("q".into(), q.to_string()),
        ("tpr".into(), tpr.to_string()),
        ("fpr".into(), fpr.to_string()),
    ];
    for d in [Defense::Osse, Defense::Clrz] {
        let r = dp_report(d, tpr, fpr)?;
        table.push((format!("{d}_epsilon_documents"), r.epsilon_documents.to_string()));
        table.push((format!("{d}_epsilon_keywords"), r.epsilon_keywords.to_string()));
    }
    if let Some(eps) = a.epsilon {
        for d in [Defense::Osse, Defense::Clrz] {
            table.push((format!("{d}_fpr_for_epsilon"), fpr_for_epsilon(d, tpr, eps)?.to_string()));
        }
    }
    if let (Some(n), Some(freqmax)) = (a.n, a.freqmax) {
        let stats = DatasetStats { n, freqmax, sizemax: a.universe, universe_size: a.universe };
        let mut params = derive_params(&stats, a.hashing.into(), p, q, &ParamOptions::default())?;
        if let Some(c) = a.countermax {
            params = params.with_countermax(c)?;
        }
        let dist = match a.dist {
            Dist::Uniform => KeywordDistribution::Uniform,
            Dist::Zipf => KeywordDistribution::Zipf,
            Dist::Worst => KeywordDistribution::WorstCase,
        };
        let e_w = match a.ew {
            Some(v) => v,
            None => expected_matching_docs(dist, freqmax, a.universe)?,
        };
        let o = overhead_report(&params, e_w, a.token_size, a.doc_size, Some(dist))?;
        let c = &o.case_bounds;
        table.extend([
            ("label_space".into(), params.label_space.to_string()),
            ("countermax".into(), params.countermax.to_string()),
            ("e_w".into(), e_w.to_string()),
            ("expected_tokens".into(), o.expected_tokens.to_string()),
            ("expected_returned".into(), o.expected_returned.to_string()),
            ("overhead".into(), o.overhead.to_string()),
            ("overhead_bound".into(), o.overhead_bound.to_string()),
            ("computation".into(), o.computation.to_string()),
            ("computation_bound".into(), o.computation_bound.to_string()),
            ("case_bound".into(), c.get(dist).to_string()),
            ("within_case_bound".into(), o.within_case_bound.map(|b| b.to_string()).unwrap_or_default()),
        ]);
    }
    let mut out = std::io::stdout().lock();
    match a.format {
        Format::Csv => {
            let mut wr = csv::Writer::from_writer(&mut out);
            wr.write_record(["quantity", "value"])?;
            for (k, v) in &table {
                wr.write_record([k, v])?;
            }
            wr.flush()?;
        }
        Format::Table => {
            let width = table.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in &table {
                writeln!(out, "{k:<width$}  {v}")?;
            }
        }
    }
    Ok(())
}

fn build_params(ds: &Dataset, hashing: Hashing, rule: CountermaxRule, p: f64, q: f64) -> Result<SchemeParams> {
    let stats = compute_stats(ds)?;
    let params = derive_params(&stats, hashing, p, q, &ParamOptions::default())?;
    Ok(match rule {
        CountermaxRule::Formula => params,
        CountermaxRule::Tight => params.with_countermax(tightest_countermax(ds, &params).max(1))?,
        CountermaxRule::Fixed(c) => params.with_countermax(c)?,
    })
}

fn cmd_build(a: BuildArgs) -> Result<()> {
    let ds = a.corpus.load()?;
    let (p, q) = a.rates.pq()?.unwrap_or((1.0, 0.0));
    let params = build_params(&ds, a.hashing.into(), a.countermax, p, q)?;
    let index = build_index(&ds, &params)?;
    let out = resolve_out(&a.out);
    let mut w = create(&out)?;
    write_index(&index, &mut w)?;
    w.flush()?;
    println!("{}", serde_json::to_string(&params)?);
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_query(a: QueryArgs) -> Result<()> {
    let index = read_index(BufReader::new(File::open(&a.index).with_context(|| format!("opening {}", a.index.display()))?))?;
    let mut params = *index.params();
    if let Some((p, q)) = a.rates.pq()? {
        params = params.with_probabilities(p, q)?;
    }
    let mut rng = rng_from_seed(a.seed);
    let mut rows = Vec::new();
    for (i, &w) in a.keyword.iter().enumerate() {
        if w == 0 || w > params.universe {
            bail!("keyword {w} outside 1..={}", params.universe);
        }
        let tokens = gen_token(w, &params, &mut rng);
        let outcome = search(&index, &tokens)?;
        let ids = outcome.returned_ids();
        println!(
            "{i} keyword={w} tokens={} evaluations={} returned={}",
            outcome.token_count(),
            outcome.evaluations,
            ids.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" ")
        );
        rows.push(observe(&outcome, params.n as usize, params.label_space as usize)?);
    }
    if let Some(path) = &a.trace {
        let path = resolve_out(path);
        let mut w = create(&path)?;
        write_trace_csv(&rows, &mut w)?;
        w.flush()?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_clrz(a: ClrzArgs) -> Result<()> {
    let ds = a.corpus.load()?;
    let index = clrz_build(&ds, a.tpr, a.fpr, a.seed)?;
    let out = resolve_out(&a.out);
    let mut w = create(&out)?;
    serde_json::to_writer(&mut w, &index)?;
    w.flush()?;
    println!("n={} universe={} tpr={} fpr={}", index.n(), index.universe(), index.tpr(), index.fpr());
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_attack(a: AttackArgs) -> Result<()> {
    if a.runs == 0 {
        bail!("--runs must be at least 1");
    }
    let freq = a.attack == AttackKind::Freq;
    let params: AttackParams = match &a.params {
        Some(s) => serde_json::from_str(s).context("parsing --params")?,
        None => AttackParams::default(),
    };
    let cfg = ExperimentConfig {
        name: format!("{}-{}", a.attack, a.defense),
        seeds: (a.seed..a.seed + a.runs).collect(),
        runs: None,
        corpus: a.corpus.config(),
        scheme: SchemeConfig {
            defense: a.defense,
            tpr: Some(a.tpr),
            fpr: Some(a.fpr),
            p: None,
            q: None,
            hashing: Hashing::Single,
            countermax: a.countermax,
            sampler: Sampler::Scheme,
        },
        queries: QueryConfig {
            dist: if freq { QueryDist::Matrix } else { QueryDist::Zipf },
            count: a.queries,
            weeks: freq.then_some(a.weeks),
            jitter: osse_core::corpus::DEFAULT_JITTER,
        },
        attack: Some(AttackConfig { kinds: vec![a.attack], train_fraction: 0.5, params }),
        sweep: None,
        costs: None,
        checks: Vec::new(),
        output: None,
    };
    cfg.validate()?;
    let rows = run_experiment(&cfg)?;
    let setting = cfg.settings()?[0];
    let n_q = if freq { a.queries * a.weeks } else { a.queries };
    let out = resolve_out(&a.out);
    let mut wr = csv::Writer::from_writer(create(&out)?);
    wr.write_record(["attack", "defense", "tpr", "fpr", "n_q", "universe", "seed", "accuracy", "failed", "runtime_ms"])?;
    for seed in cfg.seed_list() {
        let pick = |metric: &str| {
            rows.iter()
                .find(|r| r.kind == RowKind::Run && r.seed == Some(seed) && r.attack == Some(a.attack) && r.metric == metric)
                .cloned()
        };
        let (Some(acc), Some(failed)) = (pick("accuracy"), pick("failed")) else {
            bail!("seed {seed} produced no attack result");
        };
        wr.write_record([
            a.attack.to_string(),
            a.defense.to_string(),
            setting.tpr.to_string(),
            setting.fpr.to_string(),
            n_q.to_string(),
            a.corpus.universe.to_string(),
            seed.to_string(),
            acc.value.to_string(),
            (failed.value != 0.0).to_string(),
            format!("{:.3}", acc.runtime_ms),
        ])?;
        println!("seed={seed} accuracy={:.4} failed={}", acc.value, failed.value != 0.0);
    }
    wr.flush()?;
    println!("wrote {}", out.display());
    Ok(())
}
