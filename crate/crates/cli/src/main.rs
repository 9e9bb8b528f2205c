use std::fmt::Display;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde_json::{json, Value};

use klsym::evans::{batch_report, trace_middle, BatchOptions, EvansOptions, TraceMiddle};
use klsym::ffprime::Prime;
use klsym::invariants::{
    dims_table, fuwan_det, molien_dim_closed_form, molien_dim_series, molien_frob_pattern,
    molien_frob_series,
};
use klsym::modforms::{eta_quotient_series, CoefficientTable, EtaQuotient};
use klsym::moments::{
    sym_moment_degree8, sym_moments_direct, Convention, MomentEngine, PowerSumCache,
    PrecisionPolicy, SumMethod, DEFAULT_EXACT_LIMIT,
};

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Auto,
    Exact,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConventionArg {
    Restricted,
    Completed,
}

#[derive(Debug, Parser)]
#[command(name = "klsym", version, about = "Kloosterman sum moments and their modular interpretation")]
struct Cli {
    #[arg(long, value_enum, default_value = "text", global = true)]
    format: Format,
    /// Power sum cache directory.
    #[arg(long, env = "KLSYM_CACHE_DIR", default_value = ".klsym-cache", global = true)]
    cache_dir: PathBuf,
    #[arg(long, global = true)]
    no_cache: bool,
    /// Worker threads; defaults to the number of hardware threads.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: Option<u32>,
    /// Evaluate primes sequentially.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Largest p computed with exact cyclotomic arithmetic.
    #[arg(long, global = true, default_value_t = DEFAULT_EXACT_LIMIT,
          value_parser = clap::value_parser!(u64).range(3..))]
    exact_limit: u64,
    /// Starting precision in bits for the float path.
    #[arg(long, global = true, default_value_t = 64)]
    precision: u32,
    #[arg(long, global = true, default_value_t = 4096)]
    precision_cap: u32,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Power sums of Kl_2(p; a) over a.
    Sums {
        #[arg(long, value_parser = parse_prime)]
        p: Prime,
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
        nmax: u32,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
        #[arg(long, value_enum, default_value = "restricted")]
        convention: ConventionArg,
    },
    /// Symmetric power moments m^d(p) for d = 0..=dmax.
    Moments {
        #[arg(long, value_parser = parse_prime)]
        p: Prime,
        #[arg(long, default_value_t = 8)]
        dmax: u32,
        /// Recompute with the direct recurrence (and the degree-8 polynomial) and compare.
        #[arg(long)]
        verify: bool,
    },
    /// Moment-to-coefficient pipeline for d in {5, 6, 7, 8}.
    Evans {
        #[arg(long, value_parser = clap::value_parser!(u32).range(5..=8))]
        d: u32,
        #[arg(long, default_value_t = 2)]
        pmin: u64,
        #[arg(long)]
        pmax: u64,
        /// JSON coefficient table to compare against.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Weight parameter k for d = 8.
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..=4))]
        k: u32,
        #[arg(long, default_value_t = 0)]
        audit_seed: u64,
    },
    /// Middle-extension dimensions by degree and prime.
    Dims,
    /// Determinant sign of Frobenius for odd d.
    Det {
        #[arg(long)]
        d: u32,
        #[arg(long, num_args = 1.., required = true, value_parser = parse_prime)]
        p: Vec<Prime>,
    },
    /// q-expansion of an eta quotient, given as d:e pairs.
    Eta {
        #[arg(long, value_delimiter = ',', required = true, value_parser = parse_factor)]
        quotient: Vec<(u64, i64)>,
        #[arg(long, default_value_t = 20)]
        terms: usize,
    },
    /// Invariant dimension and Frobenius series of the binary tetrahedral group.
    Molien {
        #[arg(long, default_value_t = 24)]
        dmax: usize,
    },
    /// Frobenius trace on the middle extension read off from m^d(p).
    Trace {
        #[arg(long)]
        d: u32,
        #[arg(long, num_args = 1.., required = true, value_parser = parse_prime)]
        p: Vec<Prime>,
    },
}

fn parse_prime(s: &str) -> Result<Prime, String> {
    let v: u64 = s.parse().map_err(|e| format!("{e}"))?;
    Prime::new(v).map_err(|e| e.to_string())
}

fn parse_factor(s: &str) -> Result<(u64, i64), String> {
    let (d, e) = s.split_once(':').ok_or("expected d:e")?;
    let d: u64 = d.trim().parse().map_err(|e| format!("{e}"))?;
    if d == 0 {
        return Err("d must be positive".into());
    }
    let e: i64 = e.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((d, e))
}

struct Failure {
    kind: &'static str,
    message: String,
}

fn fail(kind: &'static str) -> impl Fn(&dyn Display) -> Failure {
    move |e| Failure {
        kind,
        message: e.to_string(),
    }
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value");
    s.push('\n');
    s
}

fn engine(cli: &Cli) -> MomentEngine {
    MomentEngine {
        exact_limit: cli.exact_limit,
        policy: PrecisionPolicy {
            start: cli.precision,
            cap: cli.precision_cap,
        },
        cache: (!cli.no_cache).then(|| PowerSumCache::new(&cli.cache_dir)),
    }
}

fn run(cli: &Cli) -> Result<String, Failure> {
    match &cli.command {
        Command::Sums {
            p,
            nmax,
            method,
            convention,
        } => cmd_sums(cli, *p, *nmax, *method, *convention),
        Command::Moments { p, dmax, verify } => cmd_moments(cli, *p, *dmax, *verify),
        Command::Evans {
            d,
            pmin,
            pmax,
            table,
            k,
            audit_seed,
        } => {
            let table = match table {
                Some(path) => Some(CoefficientTable::load(path).map_err(|e| fail("table")(&e))?),
                None => None,
            };
            let opts = BatchOptions {
                evans: EvansOptions {
                    engine: engine(cli),
                    table,
                    k8: *k,
                    ..EvansOptions::default()
                },
                sequential: cli.deterministic,
                audit_seed: *audit_seed,
            };
            let report = batch_report(*d, *pmin, *pmax, &opts).map_err(|e| fail("evans")(&e))?;
            Ok(match cli.format {
                Format::Text => report.to_text(),
                Format::Csv => report.to_csv(),
                Format::Json => report.to_json() + "\n",
            })
        }
        Command::Dims => {
            let t = dims_table();
            Ok(match cli.format {
                Format::Text => t.to_text(),
                Format::Csv => t.to_csv(),
                Format::Json => to_json(&json!({"schema_version": SCHEMA_VERSION, "table": t})),
            })
        }
        Command::Det { d, p } => cmd_det(cli, *d, p),
        Command::Eta { quotient, terms } => cmd_eta(cli, quotient, *terms),
        Command::Molien { dmax } => cmd_molien(cli, *dmax),
        Command::Trace { d, p } => cmd_trace(cli, *d, p),
    }
}

fn cmd_sums(
    cli: &Cli,
    p: Prime,
    nmax: u32,
    method: MethodArg,
    convention: ConventionArg,
) -> Result<String, Failure> {
    let mut eng = engine(cli);
    match method {
        MethodArg::Auto => {}
        MethodArg::Exact if p.get() > eng.exact_limit => {
            return Err(Failure {
                kind: "sums",
                message: format!("p = {p} exceeds the exact-path limit {}", eng.exact_limit),
            })
        }
        MethodArg::Exact => {}
        MethodArg::Float => eng.exact_limit = 0,
    }
    let outcome = eng.power_sums(p, nmax).map_err(|e| fail("sums")(&e))?;
    let table = match convention {
        ConventionArg::Restricted => outcome.table,
        ConventionArg::Completed => outcome.table.to_completed(),
    };
    let prime = if table.convention == Convention::Completed { "'" } else { "" };
    Ok(match cli.format {
        Format::Text => {
            let mut out = format!("p = {p}, {} convention, {}\n", table.convention, table.method);
            for (n, v) in &table.values {
                out.push_str(&format!("S{prime}_{n} = {v}\n"));
            }
            out
        }
        Format::Csv => {
            let mut out = String::from("p,n,value,convention,method\n");
            for (n, v) in &table.values {
                out.push_str(&format!("{p},{n},{v},{},{}\n", table.convention, table.method));
            }
            out
        }
        Format::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "p": p.get(),
            "convention": table.convention,
            "method": table.method,
            "values": table.values.iter().map(|(n, v)| json!({"n": n, "value": v.to_string()})).collect::<Vec<_>>(),
        })),
    })
}

fn cmd_moments(cli: &Cli, p: Prime, dmax: u32, verify: bool) -> Result<String, Failure> {
    let eng = engine(cli);
    let mut values: Vec<BigInt> = Vec::new();
    let mut method = SumMethod::ExactCyclotomic;
    for d in 0..=dmax {
        let (m, how) = eng.sym_moment(p, d).map_err(|e| fail("moments")(&e))?;
        if d > 0 {
            method = how;
        }
        values.push(m.value);
    }
    if verify {
        let direct = sym_moments_direct(p, dmax, u64::MAX).map_err(|e| fail("moments")(&e))?;
        if let Some(d) = (0..=dmax as usize).find(|&d| direct[d] != values[d]) {
            return Err(Failure {
                kind: "moments",
                message: format!("d = {d}: power sums give {}, recurrence gives {}", values[d], direct[d]),
            });
        }
        if dmax >= 8 {
            let sums = eng.power_sums(p, 8).map_err(|e| fail("moments")(&e))?;
            let m8 = sym_moment_degree8(p, &sums.table.to_completed()).map_err(|e| fail("moments")(&e))?;
            if m8.value != values[8] {
                return Err(Failure {
                    kind: "moments",
                    message: format!("d = 8: degree-8 polynomial gives {}", m8.value),
                });
            }
        }
    }
    Ok(match cli.format {
        Format::Text => {
            let mut out = format!("p = {p}, {method}{}\n", if verify { ", verified" } else { "" });
            for (d, v) in values.iter().enumerate() {
                out.push_str(&format!("m^{d} = {v}\n"));
            }
            out
        }
        Format::Csv => {
            let mut out = String::from("p,d,moment,method\n");
            for (d, v) in values.iter().enumerate() {
                out.push_str(&format!("{p},{d},{v},{method}\n"));
            }
            out
        }
        Format::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "p": p.get(),
            "method": method,
            "verified": verify,
            "moments": values.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        })),
    })
}

fn sign(s: i8) -> &'static str {
    if s > 0 {
        "+1"
    } else {
        "-1"
    }
}

fn cmd_det(cli: &Cli, d: u32, primes: &[Prime]) -> Result<String, Failure> {
    let rows: Vec<(u64, i8)> = primes
        .iter()
        .map(|&p| fuwan_det(d, p).map(|s| (p.get(), s)))
        .collect::<Result<_, _>>()
        .map_err(|e| fail("det")(&e))?;
    Ok(match cli.format {
        Format::Text => rows.iter().map(|(p, s)| format!("p = {p}: {}\n", sign(*s))).collect(),
        Format::Csv => {
            let mut out = String::from("d,p,det\n");
            for (p, s) in &rows {
                out.push_str(&format!("{d},{p},{s}\n"));
            }
            out
        }
        Format::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "d": d,
            "rows": rows.iter().map(|(p, s)| json!({"p": p, "det": s})).collect::<Vec<_>>(),
        })),
    })
}

fn cmd_eta(cli: &Cli, quotient: &[(u64, i64)], terms: usize) -> Result<String, Failure> {
    let eq = EtaQuotient::new(quotient);
    let s = eta_quotient_series(&eq, terms).map_err(|e| fail("eta")(&e))?;
    let lead = s.leading_exponent();
    let coeffs: Vec<(i64, BigInt)> = (lead..lead + terms as i64)
        .map(|n| (n, s.coeff(n).unwrap_or_default()))
        .collect();
    Ok(match cli.format {
        Format::Text => coeffs.iter().map(|(n, c)| format!("q^{n}: {c}\n")).collect(),
        Format::Csv => {
            let mut out = String::from("n,coefficient\n");
            for (n, c) in &coeffs {
                out.push_str(&format!("{n},{c}\n"));
            }
            out
        }
        Format::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "quotient": eq.factors,
            "weight": eq.weight().ok(),
            "coefficients": coeffs.iter().map(|(n, c)| json!({"n": n, "a": c.to_string()})).collect::<Vec<_>>(),
        })),
    })
}

fn cmd_molien(cli: &Cli, dmax: usize) -> Result<String, Failure> {
    let dims = molien_dim_series(dmax);
    let frob = molien_frob_series(dmax);
    let rows: Vec<(usize, &BigInt, &BigInt, bool)> = (0..=dmax)
        .map(|d| {
            let ok = dims[d] == BigInt::from(molien_dim_closed_form(d as u64))
                && frob[d] == BigInt::from(molien_frob_pattern(d as u64));
            (d, &dims[d], &frob[d], ok)
        })
        .collect();
    let mismatches: Vec<usize> = rows.iter().filter(|r| !r.3).map(|r| r.0).collect();
    if !mismatches.is_empty() {
        return Err(Failure {
            kind: "molien",
            message: format!("series disagree with closed forms at d = {mismatches:?}"),
        });
    }
    Ok(match cli.format {
        Format::Text => rows.iter().map(|(d, a, b, _)| format!("d = {d}: dim {a}, frob {b}\n")).collect(),
        Format::Csv => {
            let mut out = String::from("d,dimension,frobenius\n");
            for (d, a, b, _) in &rows {
                out.push_str(&format!("{d},{a},{b}\n"));
            }
            out
        }
        Format::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "dimension": dims.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "frobenius": frob.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        })),
    })
}

fn cmd_trace(cli: &Cli, d: u32, primes: &[Prime]) -> Result<String, Failure> {
    let opts = EvansOptions {
        engine: engine(cli),
        ..EvansOptions::default()
    };
    let rows: Vec<(u64, TraceMiddle)> = primes
        .iter()
        .map(|&p| trace_middle(d, p, &opts).map(|t| (p.get(), t)))
        .collect::<Result<_, _>>()
        .map_err(|e| fail("trace")(&e))?;
    let describe = |t: &TraceMiddle| match t {
        TraceMiddle::Odd { trace, dim, .. } => (trace.to_string(), *dim),
        TraceMiddle::Even { u, dim, .. } => (u.as_ref().map(|u| u.to_string()).unwrap_or_default(), *dim),
    };
    Ok(match cli.format {
        Format::Text => rows
            .iter()
            .map(|(p, t)| {
                let (v, dim) = describe(t);
                let name = if d % 2 == 1 { "t" } else { "u" };
                format!("p = {p}: {name} = {v} (dim {dim})\n")
            })
            .collect(),
        Format::Csv => {
            let mut out = String::from("d,p,value,dim\n");
            for (p, t) in &rows {
                let (v, dim) = describe(t);
                out.push_str(&format!("{d},{p},{v},{dim}\n"));
            }
            out
        }
        Format::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "d": d,
            "rows": rows.iter().map(|(p, t)| json!({"p": p, "result": t})).collect::<Vec<_>>(),
        })),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.precision > cli.precision_cap {
        Cli::command()
            .error(ErrorKind::ArgumentConflict, "--precision must not exceed --precision-cap")
            .exit();
    }
    let threads = if cli.deterministic { Some(1) } else { cli.jobs };
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
            log::warn!("could not configure thread pool: {e}");
        }
    }
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            if cli.format == Format::Json {
                print!(
                    "{}",
                    to_json(&json!({
                        "schema_version": SCHEMA_VERSION,
                        "error": {"kind": f.kind, "message": f.message},
                    }))
                );
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(1)
        }
    }
}
