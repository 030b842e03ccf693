use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use dyadic_core::cache::LValueCache;
use dyadic_core::iwasawa::{
    self, empirical_threshold, invariant_triple, k_group_ord2, n_d_bound, tame_kernel_structure,
    w_m_ord2, FieldLayerSpec, SweepConfig,
};
use dyadic_core::verify::{self, GridConfig, CHECK_NAMES};
use dyadic_core::{
    rational, CharSpec, DyadicValuation, Error, LValueEngine, SizeGuard, SCHEMA_VERSION,
};

const CONVENTION: &str = "chi_n(5) = zeta_{2^n}";

#[derive(Parser)]
#[command(
    name = "dyadic",
    version,
    about = "Exact 2-adic valuations of Dirichlet L-values and K-groups in the cyclotomic Z_2-tower"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// Print JSON instead of text
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// Print CSV instead of text
    #[arg(long, global = true)]
    csv: bool,
    /// Persistent L-value cache file (JSON lines)
    #[arg(long, global = true, env = "DYADIC_CACHE")]
    cache: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Allow sums longer than 2^24 terms
    #[arg(long, global = true)]
    force_large: bool,
}

#[derive(Subcommand)]
enum Command {
    /// L(χ_n ψ_d^power, 1-m) exactly
    Lvalue {
        #[arg(long, default_value_t = 0)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        d: u64,
        /// Exponent on ψ_d (2 gives the imprimitive square)
        #[arg(long, default_value_t = 1)]
        power: u8,
        #[arg(long, default_value_t = 2)]
        m: u32,
        /// Also remove the Euler factors at the primes dividing this number
        #[arg(long)]
        strip: Option<u64>,
    },
    /// ζ_F(1-m) for F = Q_n (d = 1) or Q_n(√d)
    Zeta {
        #[arg(long, default_value_t = 0)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        d: u64,
        #[arg(long, default_value_t = 2)]
        m: u32,
    },
    /// Iwasawa invariants μ, λ, ν of ord2 |K_{2m-2}| along Q_n(√d)
    Invariants {
        #[arg(long)]
        d: u64,
        #[arg(long, default_value_t = 2)]
        m: u32,
    },
    /// ord2 of the 2-part of K_{2m-2}(O_F) for F = Q_n or Q(√d)_n
    Kgroup {
        #[arg(long, default_value_t = 0)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        d: u64,
        #[arg(long, default_value_t = 2)]
        m: u32,
    },
    /// Structure of the 2-part of K_2(O_F) when the rank bound is tight
    Structure {
        #[arg(long, default_value_t = 0)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        d: u64,
        /// Number of primes above 2, overriding the per-family value
        #[arg(long)]
        g2: Option<u32>,
    },
    /// Run the congruence checks and report witnesses
    Verify(VerifyArgs),
    /// Computed vs predicted valuations over a grid, as CSV
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        ds: Vec<u64>,
        #[arg(long, default_value_t = 1)]
        n_min: u32,
        #[arg(long)]
        n_max: u32,
        #[arg(long, value_delimiter = ',', default_value = "2")]
        ms: Vec<u32>,
    },
    /// Layer from which the valuation formula holds: bounds and observed value
    Threshold {
        #[arg(long)]
        d: u64,
        #[arg(long, default_value_t = 2)]
        m: u32,
        /// Largest layer examined (default: ceiling bound + 2)
        #[arg(long)]
        n_max: Option<u32>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// Use the built-in grid (n ≤ 6, d ∈ {1,3,5,7,15,17,21,33,105}, m ∈ {2,4,6})
    #[arg(long)]
    default_grid: bool,
    /// Run only this check (repeatable)
    #[arg(long = "check")]
    checks: Vec<String>,
    #[arg(long = "n", value_delimiter = ',')]
    ns: Vec<u32>,
    #[arg(long = "d", value_delimiter = ',')]
    ds: Vec<u64>,
    #[arg(long = "m", value_delimiter = ',')]
    ms: Vec<u32>,
    /// Perturb the first witness; the run must then fail
    #[arg(long)]
    inject_fault: bool,
    /// List the check names and exit
    #[arg(long)]
    list: bool,
    /// Write all reports as JSON lines to this file
    #[arg(long)]
    reports: Option<PathBuf>,
    /// Re-derive the verdicts of a saved report file instead of running checks
    #[arg(long, conflicts_with_all = ["default_grid", "checks", "ns", "ds", "ms", "inject_fault"])]
    reverify: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Format {
    Text,
    Json,
    Csv,
}

/// What a command produced, in all three renderings.
struct Output {
    text: String,
    json: Value,
    csv: Vec<Vec<String>>,
    passed: bool,
}

impl Output {
    fn ok(text: String, json: Value, csv: Vec<Vec<String>>) -> Self {
        Self {
            text,
            json,
            csv,
            passed: true,
        }
    }
}

enum Failure {
    Input(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Inconsistent(_) | Error::CachePoisoned(_) => {
                Failure::Verification(e.to_string())
            }
            Error::Io(_) | Error::Cache(_) | Error::Json(_) => Failure::Verification(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Verification(e.to_string())
    }
}

type CmdResult = std::result::Result<Output, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = if cli.global.json {
        Format::Json
    } else if cli.global.csv {
        Format::Csv
    } else {
        Format::Text
    };
    let outcome = match cli.global.jobs {
        Some(0) => Err(Failure::Input("--jobs must be at least 1".into())),
        Some(jobs) => match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| run(&cli, format)),
            Err(e) => Err(Failure::Input(e.to_string())),
        },
        None => run(&cli, format),
    };
    match outcome {
        Ok(out) => {
            if let Err(e) = emit(&out, format) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn emit(out: &Output, format: Format) -> io::Result<()> {
    let stdout = io::stdout();
    let mut w = stdout.lock();
    match format {
        Format::Text => write!(w, "{}", out.text)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &out.json)?;
            writeln!(w)?;
        }
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(&mut w);
            for row in &out.csv {
                csv.write_record(row).map_err(io::Error::other)?;
            }
            csv.flush()?;
        }
    }
    w.flush()
}

fn engine(opts: &GlobalOpts) -> std::result::Result<LValueEngine, Failure> {
    let guard = if opts.force_large {
        SizeGuard::unlimited()
    } else {
        SizeGuard::default()
    };
    let mut engine = LValueEngine::new().with_guard(guard);
    if let Some(path) = &opts.cache {
        engine = engine.with_cache(Arc::new(LValueCache::open(path)?));
    }
    Ok(engine)
}

fn envelope(command: &str, result: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "convention": CONVENTION,
        "command": command,
        "result": result,
    })
}

fn to_json<T: serde::Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("result types serialize to JSON")
}

fn row<const N: usize>(cells: [String; N]) -> Vec<String> {
    cells.into()
}

fn run(cli: &Cli, format: Format) -> CmdResult {
    match &cli.command {
        Command::Lvalue {
            n,
            d,
            power,
            m,
            strip,
        } => cmd_lvalue(&cli.global, *n, *d, *power, *m, *strip),
        Command::Zeta { n, d, m } => cmd_zeta(&cli.global, *n, *d, *m),
        Command::Invariants { d, m } => cmd_invariants(&cli.global, *d, *m),
        Command::Kgroup { n, d, m } => cmd_kgroup(&cli.global, *n, *d, *m),
        Command::Structure { n, d, g2 } => cmd_structure(&cli.global, *n, *d, *g2),
        Command::Verify(args) => cmd_verify(&cli.global, args, format),
        Command::Sweep {
            ds,
            n_min,
            n_max,
            ms,
        } => cmd_sweep(&cli.global, ds, *n_min, *n_max, ms),
        Command::Threshold { d, m, n_max } => cmd_threshold(&cli.global, *d, *m, *n_max),
    }
}

fn char_spec(n: u32, d: u64, power: u8) -> std::result::Result<CharSpec, Failure> {
    if d == 0 {
        return Err(Failure::Input("d must be positive".into()));
    }
    if d.is_multiple_of(2) {
        if n != 0 || power != 1 {
            return Err(Failure::Input(format!(
                "even d = {d} is only supported for ψ_d alone (n = 0, power 1)"
            )));
        }
        return Ok(CharSpec::psi_even(d)?);
    }
    let power = if d == 1 { 0 } else { power };
    Ok(CharSpec::new(n, d, power)?)
}

fn field(n: u32, d: u64) -> std::result::Result<FieldLayerSpec, Failure> {
    match d {
        0 => Err(Failure::Input("d must be positive".into())),
        1 => Ok(FieldLayerSpec::rationals(n)),
        _ => Ok(FieldLayerSpec::quadratic(d, n)?),
    }
}

fn cmd_lvalue(
    opts: &GlobalOpts,
    n: u32,
    d: u64,
    power: u8,
    m: u32,
    strip: Option<u64>,
) -> CmdResult {
    let engine = engine(opts)?;
    let spec = char_spec(n, d, power)?;
    let result = match strip {
        Some(strip) => engine.l_value_imprimitive(&spec, strip, m)?,
        None => engine.dirichlet_l_value(&spec, m)?,
    };
    let s = 1 - m as i64;
    let mut text = format!(
        "L({spec}, {s}) = {}\nord2 = {}\n",
        result.value, result.ord2
    );
    if !result.euler_factors_removed.is_empty() {
        let primes: Vec<String> = result
            .euler_factors_removed
            .iter()
            .map(u64::to_string)
            .collect();
        text.push_str(&format!(
            "Euler factors removed at p = {}\n",
            primes.join(", ")
        ));
    }
    let csv = vec![
        row(["spec".into(), "m".into(), "value".into(), "ord2".into()]),
        row([
            spec.to_string(),
            m.to_string(),
            result.value.to_string(),
            result.ord2.to_string(),
        ]),
    ];
    Ok(Output::ok(text, envelope("lvalue", to_json(&result)), csv))
}

fn cmd_zeta(opts: &GlobalOpts, n: u32, d: u64, m: u32) -> CmdResult {
    let engine = engine(opts)?;
    let field = field(n, d)?;
    let value = field.zeta(&engine, m)?;
    let ord2 = DyadicValuation::of_rational(&value);
    let value_text = rational::format(&value);
    let text = format!(
        "ζ_{field}({}) = {value_text}\nord2 = {ord2}\n",
        1 - m as i64
    );
    let json = envelope(
        "zeta",
        json!({ "field": to_json(&field), "m": m, "value": value_text, "ord2": to_json(&ord2) }),
    );
    let csv = vec![
        row(["field".into(), "m".into(), "value".into(), "ord2".into()]),
        row([
            field.to_string(),
            m.to_string(),
            value_text,
            ord2.to_string(),
        ]),
    ];
    Ok(Output::ok(text, json, csv))
}

fn cmd_invariants(opts: &GlobalOpts, d: u64, m: u32) -> CmdResult {
    let engine = engine(opts)?;
    let t = invariant_triple(&engine, d, m)?;
    let derivation = to_json(&t.derivation);
    let derivation = derivation.as_str().unwrap_or_default();
    let text = format!(
        "d = {d}, m = {m}\nmu = {}\nlambda = {}\nnu = {}\nnu' = {}\nvalid for n >= {} ({derivation})\n",
        t.mu,
        t.lambda,
        t.nu,
        rational::format(&t.nu_prime),
        t.n_threshold
    );
    let csv = vec![
        row(["d", "m", "mu", "lambda", "nu", "nu_prime", "n_threshold"].map(String::from)),
        row([
            d.to_string(),
            m.to_string(),
            t.mu.to_string(),
            t.lambda.to_string(),
            t.nu.to_string(),
            rational::format(&t.nu_prime),
            t.n_threshold.to_string(),
        ]),
    ];
    Ok(Output::ok(text, envelope("invariants", to_json(&t)), csv))
}

fn cmd_kgroup(opts: &GlobalOpts, n: u32, d: u64, m: u32) -> CmdResult {
    let engine = engine(opts)?;
    let field = field(n, d)?;
    let k = k_group_ord2(&engine, &field, m)?;
    let w = w_m_ord2(&field, m)?;
    let text = format!(
        "F = {field}, [F:Q] = {}\nord2 w_{m}(F) = {w}\nord2 |K_{}(O_F)(2)| = {}\n",
        field.degree,
        2 * m - 2,
        k.e
    );
    let mut result = to_json(&k);
    result["w_ord2"] = json!(w);
    let csv = vec![
        row(["field", "m", "w_ord2", "e"].map(String::from)),
        row([
            field.to_string(),
            m.to_string(),
            w.to_string(),
            k.e.to_string(),
        ]),
    ];
    Ok(Output::ok(text, envelope("kgroup", result), csv))
}

fn cmd_structure(opts: &GlobalOpts, n: u32, d: u64, g2: Option<u32>) -> CmdResult {
    let engine = engine(opts)?;
    let mut field = field(n, d)?;
    if let Some(g2) = g2 {
        field = field.with_g2(g2);
    }
    let r = tame_kernel_structure(&engine, &field)?;
    let text = format!(
        "F = {field}, r1 = {}, g2 = {}\nord2 |K_2(O_F)(2)| = {}\nK_2(O_F)(2) = {}\n",
        r.r1, r.g2, r.order_ord2, r.structure
    );
    let csv = vec![
        row(["field", "r1", "g2", "order_ord2", "structure"].map(String::from)),
        row([
            field.to_string(),
            r.r1.to_string(),
            r.g2.to_string(),
            r.order_ord2.to_string(),
            r.structure.to_string(),
        ]),
    ];
    Ok(Output::ok(text, envelope("structure", to_json(&r)), csv))
}

fn describe(report: &verify::CheckReport) -> String {
    let params: Vec<String> = report
        .parameters
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    format!("{} {}", report.check_name, params.join(" "))
}

fn cmd_verify(opts: &GlobalOpts, args: &VerifyArgs, format: Format) -> CmdResult {
    if args.list {
        let text = CHECK_NAMES.iter().map(|c| format!("{c}\n")).collect();
        let csv = std::iter::once(row(["check".into()]))
            .chain(CHECK_NAMES.iter().map(|c| row([c.to_string()])))
            .collect();
        return Ok(Output::ok(
            text,
            envelope("verify", json!({ "checks": CHECK_NAMES })),
            csv,
        ));
    }
    let reports = match &args.reverify {
        Some(path) => verify::read_reports_jsonl(&std::fs::read_to_string(path)?)?,
        None => {
            let mut config = GridConfig {
                inject_fault: args.inject_fault,
                ..GridConfig::default()
            };
            if !args.ns.is_empty() {
                config.ns = args.ns.clone();
            }
            if !args.ds.is_empty() {
                config.ds = args.ds.clone();
            }
            if !args.ms.is_empty() {
                config.ms = args.ms.clone();
            }
            if !args.checks.is_empty() {
                config.checks = Some(args.checks.clone());
            }
            verify::run_all(&engine(opts)?, &config)?
        }
    };
    if let Some(path) = &args.reports {
        let mut out = BufWriter::new(File::create(path)?);
        verify::write_reports_jsonl(&reports, &mut out)?;
        out.flush()?;
    }

    let mut text = String::new();
    let mut csv = vec![row(
        ["check", "parameters", "passed", "witnesses"].map(String::from)
    )];
    let mut failed = 0usize;
    for r in &reports {
        let verdict = if args.reverify.is_some() {
            r.reverify()?
        } else {
            r.passed
        };
        if !verdict {
            failed += 1;
        }
        text.push_str(&format!(
            "{} {}\n",
            if verdict { "PASS" } else { "FAIL" },
            describe(r)
        ));
        if !verdict && format == Format::Text {
            for w in r.failures() {
                text.push_str(&format!("    failed witness: {}\n", w.label()));
            }
        }
        let params: Vec<String> = r
            .parameters
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        csv.push(row([
            r.check_name.clone(),
            params.join(";"),
            verdict.to_string(),
            r.witnesses.len().to_string(),
        ]));
    }
    text.push_str(&format!(
        "{} reports, {} passed, {failed} failed\n",
        reports.len(),
        reports.len() - failed
    ));
    let json = envelope(
        "verify",
        json!({ "total": reports.len(), "failed": failed, "reports": to_json(&reports) }),
    );
    Ok(Output {
        text,
        json,
        csv,
        passed: failed == 0,
    })
}

fn cmd_sweep(opts: &GlobalOpts, ds: &[u64], n_min: u32, n_max: u32, ms: &[u32]) -> CmdResult {
    if n_min == 0 || n_min > n_max {
        return Err(Failure::Input(format!(
            "need 1 <= n-min <= n-max, got {n_min}..{n_max}"
        )));
    }
    let engine = engine(opts)?;
    let config = SweepConfig {
        ds: ds.to_vec(),
        n_min,
        n_max,
        ms: ms.to_vec(),
    };
    let rows = iwasawa::sweep(&engine, &config)?;
    let mut buf = Vec::new();
    iwasawa::write_sweep_csv(&rows, &mut buf)?;
    let text = String::from_utf8(buf).expect("CSV output is UTF-8");
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let csv = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()
        .map_err(|e| Failure::Verification(e.to_string()))?;
    let json = envelope("sweep", json!({ "rows": to_json(&rows) }));
    // the text rendering of a sweep is its CSV
    Ok(Output::ok(text, json, csv))
}

fn cmd_threshold(opts: &GlobalOpts, d: u64, m: u32, n_max: Option<u32>) -> CmdResult {
    let engine = engine(opts)?;
    let bound = n_d_bound(d, m)?;
    let n_max = n_max.unwrap_or(bound.ceiling + 2);
    if n_max == 0 {
        return Err(Failure::Input("n-max must be at least 1".into()));
    }
    let observed = empirical_threshold(&engine, d, m, n_max)?;
    let refined = bound.refined.map_or("-".to_string(), |r| r.to_string());
    let observed_text = observed.map_or("none".to_string(), |t| t.to_string());
    let text = format!(
        "d = {d}, m = {m}, f = {}, tau = {}\nceiling bound n_d = {}\nrefined bound n_d = {refined}\nobserved threshold (n <= {n_max}) = {observed_text}\n",
        bound.f, bound.tau, bound.ceiling
    );
    let json = envelope(
        "threshold",
        json!({ "bound": to_json(&bound), "m": m, "n_max": n_max, "observed": observed }),
    );
    let csv = vec![
        row([
            "d",
            "m",
            "f",
            "tau",
            "n_d_ceiling",
            "n_d_refined",
            "observed",
            "n_max",
        ]
        .map(String::from)),
        row([
            d.to_string(),
            m.to_string(),
            bound.f.to_string(),
            bound.tau.to_string(),
            bound.ceiling.to_string(),
            refined,
            observed_text,
            n_max.to_string(),
        ]),
    ];
    Ok(Output::ok(text, json, csv))
}
