use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use spdesign_core::energy::{cl2_discrepancy, q_energy_distance};
use spdesign_core::harness::{self, Manifest, NamedDesign, PoolOptions};
use spdesign_core::metrics::{
    maximin, maxpro_criterion, minimax_fill_refined, projected_maximin_index, projected_minimax_index, MetricReport,
    DEFAULT_CANDIDATES, DEFAULT_SUBSET_CAP,
};
use spdesign_core::psp_opt::{psp_optimize, PspConfig};
use spdesign_core::sampling::{baseline_design, sample_sobol};
use spdesign_core::sp_opt::{sp_optimize, SpConfig};
use spdesign_core::testfns::Benchmark;
use spdesign_core::{load_design, save_design, BaselineKind, Design, Prior, RngConfig};

#[derive(Parser, Debug)]
#[command(name = "spdesign", version, about = "Support point designs for computer experiments")]
struct Cli {
    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a support point or projected support point design.
    Generate(GenerateArgs),
    /// Evaluate design criteria for a design CSV.
    Eval(EvalArgs),
    /// Run one of the benchmark studies.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Sp,
    Psp,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    /// sobol, random, maximin-lhd, or a CSV file.
    #[arg(long)]
    init: Option<String>,
    /// pod or exp:LAMBDA (psp only).
    #[arg(long, value_parser = parse_prior)]
    prior: Option<Prior>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    design: PathBuf,
    /// Comma-separated: energy, qenergy:Q, cl2, maximin, minimax, mml[:L], mmL[:L], maxpro:LAMBDA.
    #[arg(long, value_delimiter = ',', required = true)]
    metrics: Vec<MetricSpec>,
    /// Projection orders for bare `mml` / `mmL`.
    #[arg(long, num_args = 1..)]
    l: Vec<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluation batch size for energy metrics.
    #[arg(long, default_value_t = 1 << 16)]
    batch: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum Study {
    Fig4,
    Table2,
    Table3,
    Theorems,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_enum)]
    study: Study,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON option tree; keys match the flags below plus `sp` and `psp` optimizer settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Design size (fig4, table2).
    #[arg(long)]
    n: Option<usize>,
    /// Dimension (table2).
    #[arg(long)]
    p: Option<usize>,
    /// Benchmark function (table3).
    #[arg(long)]
    function: Option<Benchmark>,
    /// Design sizes (table3).
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Extra pool members read from CSV (table2, table3).
    #[arg(long = "design")]
    designs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct StudyConfig {
    n: Option<usize>,
    p: Option<usize>,
    theta: f64,
    function: Option<Benchmark>,
    n_list: Option<Vec<usize>>,
    /// `(theta_max, active_fraction)` cells for table2.
    cells: Vec<(f64, f64)>,
    sp: SpConfig,
    psp: PspConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            n: None,
            p: None,
            theta: 10.0,
            function: None,
            n_list: None,
            cells: vec![(5.0, 1.0), (5.0, 0.4), (20.0, 1.0), (20.0, 0.4)],
            sp: SpConfig::default(),
            psp: PspConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
enum MetricSpec {
    Energy,
    QEnergy(f64),
    Cl2,
    Maximin,
    Minimax,
    ProjMinimax(Option<usize>),
    ProjMaximin(Option<usize>),
    MaxPro(f64),
}

impl FromStr for MetricSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let num = |what: &str| -> std::result::Result<f64, String> {
            let v = arg.ok_or(format!("`{name}` needs a value, e.g. {name}:{what}"))?;
            v.parse().map_err(|_| format!("bad value `{v}` for `{name}`"))
        };
        let order = || -> std::result::Result<Option<usize>, String> {
            arg.map(|v| v.parse().map_err(|_| format!("bad projection order `{v}`")))
                .transpose()
        };
        // mml (minimax index) and mmL (maximin index) differ only by case
        Ok(match name {
            "energy" => MetricSpec::Energy,
            "qenergy" => MetricSpec::QEnergy(num("1.0")?),
            "cl2" => MetricSpec::Cl2,
            "maximin" => MetricSpec::Maximin,
            "minimax" => MetricSpec::Minimax,
            "mml" | "mM" => MetricSpec::ProjMinimax(order()?),
            "mmL" | "Mm" => MetricSpec::ProjMaximin(order()?),
            "maxpro" => MetricSpec::MaxPro(num("0")?),
            _ => return Err(format!("unknown metric `{s}`")),
        })
    }
}

fn parse_prior(s: &str) -> std::result::Result<Prior, String> {
    if s == "pod" {
        return Ok(Prior::Pod { max_order: 2 });
    }
    if let Some(v) = s.strip_prefix("exp:") {
        let lambda: f64 = v.parse().map_err(|_| format!("bad rate `{v}`"))?;
        if lambda > 0.0 && lambda.is_finite() {
            return Ok(Prior::Exp { lambda });
        }
        return Err("rate must be positive".into());
    }
    Err(format!("unknown prior `{s}` (expected pod or exp:LAMBDA)"))
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("no --seed given, using {s}");
        s
    })
}

fn write_json_file(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn initial_design(init: Option<&str>, method: Method, n: usize, p: usize, rng: RngConfig) -> Result<Design> {
    let spec = init.unwrap_or(match method {
        Method::Sp => "sobol",
        Method::Psp => "maximin-lhd",
    });
    if let Ok(kind) = spec.parse::<BaselineKind>() {
        return Ok(baseline_design(kind, n, p, rng)?);
    }
    let d = load_design(spec).with_context(|| format!("reading initial design {spec}"))?;
    if d.n() != n || d.p() != p {
        return Err(anyhow!("initial design {spec} is {}x{}, expected {n}x{p}", d.n(), d.p()));
    }
    Ok(d)
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    if a.n == 0 || a.p == 0 {
        return Err(anyhow!("--n and --p must be positive"));
    }
    let seed = resolve_seed(a.seed);
    let rng = RngConfig::new(seed);
    let init = initial_design(a.init.as_deref(), a.method, a.n, a.p, rng.derive(1))?;
    eprintln!("optimizing n={} p={} from {}", a.n, a.p, init.label);
    let (design, trace) = match a.method {
        Method::Sp => sp_optimize(
            &init,
            &SpConfig {
                rng: rng.derive(2),
                ..SpConfig::default()
            },
        )?,
        Method::Psp => {
            let mut cfg = PspConfig {
                rng: rng.derive(2),
                ..PspConfig::default()
            };
            if let Some(prior) = a.prior {
                cfg.prior = prior;
            }
            psp_optimize(&init, &cfg)?
        }
    };
    eprintln!(
        "{} sweeps in {:.2}s, converged: {}",
        trace.sweeps, trace.elapsed_secs, trace.converged
    );
    match &a.out {
        Some(path) => save_design(&design, path)?,
        None => spdesign_core::write_design(&design, std::io::stdout().lock())?,
    }
    if let Some(path) = &a.trace {
        let mut v: Value = serde_json::from_str(&trace.to_json()?)?;
        v["seed"] = json!(seed);
        write_json_file(path, &v)?;
    }
    Ok(())
}

fn eval_metric(m: &MetricSpec, d: &Design, ls: &[usize], batch: usize, rng: RngConfig) -> Result<Vec<MetricReport>> {
    let orders = |l: Option<usize>| -> Vec<usize> {
        match l {
            Some(l) => vec![l],
            None if ls.is_empty() => (1..=d.p()).collect(),
            None => ls.to_vec(),
        }
    };
    Ok(match *m {
        MetricSpec::Energy | MetricSpec::QEnergy(_) => {
            let q = if let MetricSpec::QEnergy(q) = *m { q } else { 1.0 };
            let b = sample_sobol(batch, d.p(), rng.derive(1))?;
            let e = q_energy_distance(d, &b, q)?;
            let name = if matches!(m, MetricSpec::Energy) {
                "energy".to_string()
            } else {
                format!("qenergy:{q}")
            };
            vec![MetricReport::new(name, e.value)
                .with_meta("std_error", e.std_error)
                .with_meta("n_batch", e.n_batch)]
        }
        MetricSpec::Cl2 => vec![MetricReport::new("cl2", cl2_discrepancy(d))],
        MetricSpec::Maximin => vec![MetricReport::new("maximin", maximin(d)?)],
        MetricSpec::Minimax => {
            let c = sample_sobol(DEFAULT_CANDIDATES, d.p(), rng.derive(2))?;
            vec![MetricReport::new("minimax", minimax_fill_refined(d, &c)?).with_meta("candidates", DEFAULT_CANDIDATES)]
        }
        MetricSpec::ProjMinimax(l) => orders(l)
            .into_iter()
            .map(|l| {
                let v = projected_minimax_index(d, l, DEFAULT_CANDIDATES, DEFAULT_SUBSET_CAP, rng.derive(3))?;
                Ok(v.report(&format!("mml:{l}"), l))
            })
            .collect::<Result<_>>()?,
        MetricSpec::ProjMaximin(l) => orders(l)
            .into_iter()
            .map(|l| {
                let v = projected_maximin_index(d, l, DEFAULT_SUBSET_CAP, rng.derive(4))?;
                Ok(v.report(&format!("mmL:{l}"), l))
            })
            .collect::<Result<_>>()?,
        MetricSpec::MaxPro(lambda) => {
            vec![MetricReport::new(format!("maxpro:{lambda}"), maxpro_criterion(d, lambda)?)]
        }
    })
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let seed = resolve_seed(a.seed);
    let rng = RngConfig::new(seed);
    let d = load_design(&a.design).with_context(|| format!("reading {}", a.design.display()))?;
    let mut reports = Vec::new();
    for m in &a.metrics {
        reports.extend(eval_metric(m, &d, &a.l, a.batch, rng)?);
    }
    let values: Map<String, Value> = reports.iter().map(|r| (r.metric.clone(), json!(r.value))).collect();
    let out = json!({
        "design": a.design.display().to_string(),
        "n": d.n(),
        "p": d.p(),
        "seed": seed,
        "metrics": values,
        "reports": reports,
    });
    match &a.out {
        Some(path) => write_json_file(path, &out),
        None => {
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(())
        }
    }
}

fn load_extra(paths: &[PathBuf]) -> Result<Vec<NamedDesign>> {
    paths
        .iter()
        .map(|p| {
            let design = load_design(p).with_context(|| format!("reading {}", p.display()))?;
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(NamedDesign { name, design })
        })
        .collect()
}

fn csv_file(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let mut cfg: StudyConfig = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => StudyConfig::default(),
    };
    cfg.n = a.n.or(cfg.n);
    cfg.p = a.p.or(cfg.p);
    cfg.function = a.function.or(cfg.function);
    cfg.n_list = a.n_list.clone().or(cfg.n_list);

    let seed = resolve_seed(a.seed);
    let rng = RngConfig::new(seed);
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let extra = load_extra(&a.designs)?;
    let opts = PoolOptions {
        sp: cfg.sp.clone(),
        psp: cfg.psp.clone(),
    };
    let start = Instant::now();
    let (name, record) = match a.study {
        Study::Fig4 => {
            let n = cfg.n.unwrap_or(7);
            eprintln!("fig4: n={n} theta={}", cfg.theta);
            let r = harness::run_fig4_study(n, cfg.theta, &cfg.sp, rng)?;
            r.write_mspe_csv(csv_file(&a.out, "fig4.csv")?)?;
            r.write_curves_csv(csv_file(&a.out, "fig4_curves.csv")?)?;
            for d in &r.designs {
                save_design(&d.design, a.out.join(format!("design_{}.csv", d.name)))?;
            }
            write_json_file(&a.out.join("report.json"), &r.mspe)?;
            ("fig4", json!({ "n": n, "theta": cfg.theta, "sp": cfg.sp }))
        }
        Study::Table2 => {
            let (n, p) = (cfg.n.unwrap_or(30), cfg.p.unwrap_or(5));
            eprintln!("table2: building pool n={n} p={p}");
            let mut pool = harness::standard_pool(n, p, &opts, rng.derive(1))?;
            pool.extend(extra);
            for d in &pool {
                save_design(&d.design, a.out.join(format!("design_{}.csv", d.name)))?;
            }
            let mut w = csv_file(&a.out, "table2.csv")?;
            use std::io::Write;
            writeln!(w, "theta_max,active_fraction,design,efficiency")?;
            let mut tables = Vec::new();
            for (k, &(tmax, frac)) in cfg.cells.iter().enumerate() {
                eprintln!("table2: cell theta_max={tmax} active={frac}");
                let t = harness::run_efficiency_table(p, n, tmax, frac, &pool, rng.derive2(2, k as u64))?;
                for (name, e) in t.names.iter().zip(&t.efficiency) {
                    writeln!(w, "{tmax},{frac},{name},{e}")?;
                }
                tables.push(t);
            }
            write_json_file(&a.out.join("report.json"), &tables)?;
            ("table2", json!({ "n": n, "p": p, "cells": cfg.cells, "sp": cfg.sp, "psp": cfg.psp }))
        }
        Study::Table3 => {
            let f = cfg.function.unwrap_or(Benchmark::Exponential);
            let n_list = cfg.n_list.clone().unwrap_or_else(|| harness::default_n_list(f));
            eprintln!("table3: {} at n = {n_list:?}", f.name());
            let t = harness::run_emulation_table(f, &n_list, &opts, &extra, rng)?;
            t.write_csv(csv_file(&a.out, "table3.csv")?)?;
            write_json_file(&a.out.join("report.json"), &t)?;
            ("table3", json!({ "function": f.name(), "n_list": n_list, "sp": cfg.sp, "psp": cfg.psp }))
        }
        Study::Theorems => {
            eprintln!("theorems: running 4 checks");
            let r = harness::run_identity_checks(rng)?;
            for c in &r.checks {
                eprintln!("  {:<28} {} {:?}", c.name, if c.passed { "pass" } else { "FAIL" }, c.measured);
            }
            write_json_file(&a.out.join("report.json"), &r)?;
            ("theorems", json!({}))
        }
    };
    Manifest::new(name, rng, record, start.elapsed().as_secs_f64()).save(a.out.join("manifest.json"))?;
    eprintln!("wrote {} in {:.1}s", a.out.display(), start.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
