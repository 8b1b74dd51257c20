use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use structcalc::canon::canonical_hash;
use structcalc::config::Config;
use structcalc::derivation::{
    apply_morphism, portion_by_ids, quotient, DerivationKind, LineageStore, Partition, Sidecar,
};
use structcalc::iso::iso_report;
use structcalc::pixel::demo::run_demo;
use structcalc::pixel::{analyze, load_raster, standard_signatures, Signature};
use structcalc::rules::{mine_rules, RecognitionLog};
use structcalc::solver::{solve, solve_with_cache, ProblemSpec, SolutionCache};
use structcalc::structure::TypeEntry;
use structcalc::{Error, Structure, TypeCatalog};

#[derive(Parser)]
#[command(name = "structcalc", version, about = "Attributed-structure toolkit")]
struct Cli {
    /// Seed for randomized steps; echoed into every report.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// JSON file overriding tunables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report file (directory for demo-polygons). Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact isomorphism test; exit 0 iff isomorphic.
    Iso { a: PathBuf, b: PathBuf },
    /// Portion, quotient and morphism of a structure.
    Derive {
        input: PathBuf,
        /// Sidecar with `block` and `mask` lines: quotient first, then mask.
        #[arg(long)]
        sidecar: Option<PathBuf>,
        /// Comma-separated part ids; the portion is taken before the rest.
        #[arg(long, value_delimiter = ',')]
        portion: Vec<String>,
        #[arg(long)]
        allow_disconnected: bool,
    },
    /// Raster pipeline on a PBM/PGM image; exit 1 when no signature fires.
    Analyze {
        image: PathBuf,
        /// JSON list of signatures replacing the built-in polygon set.
        #[arg(long)]
        signatures: Option<PathBuf>,
    },
    /// Associative rules from a recognition log; exit 1 when none qualify.
    Mine {
        log: PathBuf,
        #[arg(long)]
        min_support: Option<u64>,
        #[arg(long)]
        min_p: Option<f64>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        absence: Option<u64>,
    },
    /// Best-first search on a problem file; exit 1 unless solved.
    Solve {
        problem: PathBuf,
        #[arg(long)]
        budget: Option<usize>,
        /// Solution cache file, read if present and written back.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Sidecar mask for a new cache.
        #[arg(long)]
        cache_mask: Option<PathBuf>,
    },
    /// Generates the polygon corpus, analyzes it and writes reports.
    DemoPolygons,
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Iso { .. } => "iso",
            Cmd::Derive { .. } => "derive",
            Cmd::Analyze { .. } => "analyze",
            Cmd::Mine { .. } => "mine",
            Cmd::Solve { .. } => "solve",
            Cmd::DemoPolygons => "demo-polygons",
        }
    }
}

/// Failure with its exit code: 2 for bad input, 3 for internal errors.
struct Fail(u8, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(3, e.to_string())
    }
}

fn input(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail(2, format!("{}: {e}", path.display())))
}

/// Errors from parsing or checking user input.
fn bad_input(path: &Path) -> impl Fn(Error) -> Fail + '_ {
    move |e| Fail(2, format!("{}: {e}", path.display()))
}

fn read_struct(path: &Path) -> Result<Structure, Fail> {
    Structure::from_text(&input(path)?).map_err(bad_input(path))
}

fn json_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Fail> {
    serde_json::from_str(&input(path)?).map_err(|e| Fail(2, format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> Result<String, Fail> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Fail(3, e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn write(path: &Path, text: &str) -> Result<(), Fail> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Fail(3, format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| Fail(3, format!("{}: {e}", path.display())))
}

struct Ctx {
    seed: u64,
    config: Config,
    command: &'static str,
}

impl Ctx {
    fn report(&self, result: Value) -> Value {
        json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "config": self.config,
            "result": result,
        })
    }
}

fn value<T: Serialize>(v: &T) -> Result<Value, Fail> {
    serde_json::to_value(v).map_err(|e| Fail(3, e.to_string()))
}

/// Runs one subcommand: the report and whether the result is positive.
fn run(cmd: Cmd, ctx: &mut Ctx, out: Option<&Path>) -> Result<(Value, bool), Fail> {
    match cmd {
        Cmd::Iso { a, b } => {
            let (sa, sb) = (read_struct(&a)?, read_struct(&b)?);
            let rep = iso_report(&sa, &sb).map_err(|e| Fail(2, e.to_string()))?;
            Ok((ctx.report(value(&rep)?), rep.isomorphic))
        }
        Cmd::Derive {
            input: path,
            sidecar,
            portion,
            allow_disconnected,
        } => {
            let s = read_struct(&path)?;
            let sc = match &sidecar {
                Some(p) => Sidecar::from_text(&input(p)?).map_err(bad_input(p))?,
                None => Sidecar::default(),
            };
            let mut store = LineageStore::new();
            let mut cur = store.register(s.clone());
            let mut st = s;
            let mut catalog = TypeCatalog::new();
            if !portion.is_empty() {
                let ids: Vec<&str> = portion.iter().map(String::as_str).collect();
                let p = portion_by_ids(&st, &ids, allow_disconnected).map_err(|e| Fail(2, e.to_string()))?;
                st = p.induced;
                cur = store.derive(DerivationKind::Portion, &[cur], portion.join(","), st.clone())?;
            }
            if !sc.blocks.is_empty() {
                let k = Partition::from_ids(&st, &sc.blocks).map_err(|e| Fail(2, e.to_string()))?;
                st = quotient(&st, &k, &mut catalog)?;
                let params = sc.blocks.iter().map(|b| b.join(" ")).collect::<Vec<_>>().join(" | ");
                cur = store.derive(DerivationKind::Quotient, &[cur], params, st.clone())?;
            }
            if !sc.mask.is_identity() {
                st = apply_morphism(&st, &sc.mask, &catalog).map_err(|e| Fail(2, e.to_string()))?;
                store.derive(DerivationKind::Morphism, &[cur], sc.mask.to_lines().join("; "), st.clone())?;
            }
            let nested: Vec<Value> = catalog
                .entries()
                .filter_map(|(id, e)| match e {
                    TypeEntry::Nested { structure } => Some(json!({"id": id, "structure": structure.to_text()})),
                    _ => None,
                })
                .collect();
            let result = json!({
                "records": store.records(),
                "output": st.to_text(),
                "output_hash": canonical_hash(&st),
                "nested_types": nested,
            });
            Ok((ctx.report(result), true))
        }
        Cmd::Analyze { image, signatures } => {
            let bytes = fs::read(&image).map_err(|e| Fail(2, format!("{}: {e}", image.display())))?;
            let r = load_raster(&bytes, ctx.config.pixel.levels).map_err(bad_input(&image))?;
            let sigs: Vec<Signature> = match &signatures {
                Some(p) => json_file(p)?,
                None => standard_signatures(),
            };
            let rep = analyze(&r, &ctx.config.pixel, &sigs);
            let any = rep.firings.iter().any(|f| f.fired);
            Ok((ctx.report(value(&rep)?), any))
        }
        Cmd::Mine {
            log,
            min_support,
            min_p,
            horizon,
            absence,
        } => {
            let m = &mut ctx.config.mine;
            m.min_support = min_support.unwrap_or(m.min_support);
            m.min_p = min_p.unwrap_or(m.min_p);
            m.horizon = horizon.unwrap_or(m.horizon);
            m.absence = absence.unwrap_or(m.absence);
            ctx.config.check().map_err(|e| Fail(2, e.to_string()))?;
            let events = RecognitionLog::parse(&input(&log)?).map_err(bad_input(&log))?;
            let rules = mine_rules(&events, &ctx.config.mine).map_err(|e| Fail(2, e.to_string()))?;
            let result = json!({
                "events": events.len(),
                "span": events.span(),
                "rules": rules,
            });
            Ok((ctx.report(result), !rules.is_empty()))
        }
        Cmd::Solve {
            problem,
            budget,
            cache,
            cache_mask,
        } => {
            if let Some(b) = budget {
                ctx.config.budget = b;
            }
            ctx.config.check().map_err(|e| Fail(2, e.to_string()))?;
            let mut p: ProblemSpec = json_file(&problem)?;
            p.fuel = ctx.config.fuel;
            let res = match &cache {
                Some(path) => {
                    let mut c: SolutionCache = if path.exists() {
                        json_file(path)?
                    } else {
                        let mask = match &cache_mask {
                            Some(m) => Sidecar::from_text(&input(m)?).map_err(bad_input(m))?.mask,
                            None => Default::default(),
                        };
                        SolutionCache::new(mask)
                    };
                    let res = solve_with_cache(&p, &mut c, ctx.config.budget)?;
                    write(path, &to_json(&c)?)?;
                    res
                }
                None => solve(&p, ctx.config.budget)?,
            };
            let solved = res.status == structcalc::solver::Status::Solved;
            Ok((ctx.report(value(&res)?), solved))
        }
        Cmd::DemoPolygons => {
            let dir = out.ok_or_else(|| Fail(2, "demo-polygons needs --out <dir>".into()))?;
            let run = run_demo(ctx.seed, &ctx.config.pixel, &standard_signatures());
            for (item, rep) in run.corpus.iter().zip(&run.reports) {
                write(&dir.join("corpus").join(format!("{}.pbm", item.name)), &item.raster.to_pbm())?;
                let meta = json!({
                    "name": item.name,
                    "figure": item.figure,
                    "base": item.base,
                    "scale": item.scale,
                    "unit": item.unit,
                    "rotation_deg": item.rotation_deg,
                    "analysis": rep,
                });
                write(&dir.join("reports").join(format!("{}.json", item.name)), &to_json(&ctx.report(meta))?)?;
            }
            let result = json!({"summary": run.summary, "items": run.items});
            Ok((ctx.report(result), run.passed()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.cmd.name();
    let config = match &cli.config {
        None => Ok(Config::default()),
        Some(p) => input(p).and_then(|t| Config::from_json(&t).map_err(bad_input(p))),
    };
    let outcome = config.and_then(|config| {
        let mut ctx = Ctx {
            seed: cli.seed,
            config,
            command,
        };
        let demo = matches!(cli.cmd, Cmd::DemoPolygons);
        let (report, ok) = run(cli.cmd, &mut ctx, cli.out.as_deref())?;
        let text = to_json(&report)?;
        match (&cli.out, demo) {
            (Some(dir), true) => write(&dir.join("summary.json"), &text)?,
            (Some(file), false) => write(file, &text)?,
            (None, _) => print!("{text}"),
        }
        Ok(ok)
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
