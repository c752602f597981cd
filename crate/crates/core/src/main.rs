use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ooakit::bounds::{bound_report, parse_rational, BoundReport};
use ooakit::construct::{full_factorial, hermite_ooa, oa_to_ooa, points_to_array};
use ooakit::gf::{parse_modulus, prime_power, FieldSpec};
use ooakit::io::{format_array, parse_array, parse_points};
use ooakit::klp::{certify, CertReport, CertifyOptions};
use ooakit::search::{
    anneal_search, find_min_size, search_lambda, SearchMode, SearchResult, SearchStatus, DEFAULT_BUDGET,
};
use ooakit::verify::{verify_oa, verify_ooa, VerifyOptions, VerifyReport};
use ooakit::{Error, SymbolArray};

#[derive(Parser)]
#[command(name = "ooakit", version, about = "Verify, construct, bound and search ordered orthogonal arrays")]
struct Cli {
    /// Worker threads for verification (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an array file at the strength in its header.
    Verify(VerifyArgs),
    /// Lower bounds, parametric upper bounds and space dimensions.
    Bounds(BoundsArgs),
    /// Build an array and write it after re-verifying it.
    Construct {
        #[command(subcommand)]
        kind: ConstructKind,
    },
    /// Find the smallest array exactly, or a witness heuristically.
    Search(SearchArgs),
    /// Check the basis and dual-basis identities of the test-function space.
    KlpCertify(CertifyArgs),
}

#[derive(Args)]
struct VerifyArgs {
    path: PathBuf,
    /// Check every t-subset of columns instead of the prefix shapes.
    #[arg(long)]
    oa: bool,
    /// Reject repeated rows.
    #[arg(long)]
    strict_set: bool,
    #[arg(long, default_value_t = ooakit::verify::DEFAULT_MAX_FAILURES)]
    max_failures: usize,
    /// Require this index.
    #[arg(long)]
    lambda: Option<u64>,
    /// Largest number of column subsets examined with --oa.
    #[arg(long, default_value_t = ooakit::verify::DEFAULT_SUBSET_CAP)]
    oa_cap: u128,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct Params {
    #[arg(long)]
    q: u32,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: usize,
    #[arg(long)]
    t: usize,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    params: Params,
    /// Constant of the existence bound (rational, e.g. 3/4).
    #[arg(long, default_value = "1")]
    c: String,
    /// Constant of the sampling threshold.
    #[arg(long = "C", default_value = "1")]
    big_c: String,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum ConstructKind {
    /// Every word of length n·r.
    Full {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        /// Strength written to the header and checked (default n·r).
        #[arg(long)]
        t: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Index-one array from Hasse derivatives of low-degree polynomials (q >= n).
    Hermite {
        #[command(flatten)]
        params: Params,
        /// Evaluation points as comma-separated element indices (default 0,1,...,n-1).
        #[arg(long, value_delimiter = ',')]
        points: Option<Vec<u32>>,
        /// Modulus coefficients, lowest degree first, for extension fields without a built-in one.
        #[arg(long)]
        modulus: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regroup the columns of an orthogonal array into n blocks of depth r.
    FromOa {
        path: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Digit array of a point set in [0,1)^s.
    FromPoints {
        path: PathBuf,
        #[arg(long)]
        q: u32,
        /// Digits of precision in the file.
        #[arg(long)]
        m: usize,
        /// Digits to extract per coordinate (default m).
        #[arg(long)]
        d: Option<usize>,
        /// Strength to check (default d).
        #[arg(long)]
        t: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Set,
    Multiset,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    params: Params,
    #[arg(long, value_enum, default_value = "multiset")]
    mode: ModeArg,
    /// Node budget (proposed moves with --anneal).
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Randomized local search at a fixed index instead of exact search.
    #[arg(long)]
    anneal: bool,
    /// Search only this index.
    #[arg(long)]
    lambda: Option<u64>,
    /// Where to write the witness array.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    params: Params,
    /// Largest ground set to enumerate.
    #[arg(long, default_value_t = ooakit::klp::DEFAULT_SCALE_CAP)]
    scale_cap: u64,
    /// Random maps checked in the spanning recursion.
    #[arg(long, default_value_t = ooakit::klp::DEFAULT_SPANNING_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

/// Failure of a command; maps onto the process exit code.
enum Failure {
    /// The object was checked and does not have the property (exit 1).
    Rejected,
    /// Bad input or parameters (exit 2).
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match cli.command {
        Command::Verify(args) => cmd_verify(&args),
        Command::Bounds(args) => cmd_bounds(&args),
        Command::Construct { kind } => cmd_construct(kind),
        Command::Search(args) => cmd_search(&args),
        Command::KlpCertify(args) => cmd_certify(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Rejected) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn say(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

fn print_json<T: Serialize>(value: &T) {
    say(&format!("{}\n", serde_json::to_string_pretty(value).expect("reports serialize")));
}

fn fmt_cols(cols: &[usize]) -> String {
    let parts: Vec<String> = cols.iter().map(usize::to_string).collect();
    format!("{{{}}}", parts.join(","))
}

fn fmt_tuple(tuple: &[u32]) -> String {
    let sep = if tuple.iter().any(|&s| s > 9) { " " } else { "" };
    tuple.iter().map(u32::to_string).collect::<Vec<_>>().join(sep)
}

/// Report for arrays whose row count rules them out before any census.
#[derive(Serialize)]
struct Rejection<'a> {
    pass: bool,
    kind: &'a str,
    rows: usize,
    reason: String,
}

fn cmd_verify(args: &VerifyArgs) -> Outcome {
    let file = parse_array(&read(&args.path)?)?;
    let a = &file.array;
    let opts = VerifyOptions {
        max_failures: args.max_failures,
        strict_set: args.strict_set,
        lambda: args.lambda,
        subset_cap: args.oa_cap,
    };
    let kind = if args.oa { "oa" } else { "ooa" };
    let result = if args.oa {
        verify_oa(a, a.q(), file.t, &opts)
    } else {
        verify_ooa(a, a.q(), a.blocks(), a.depth(), file.t, &opts)
    };
    let report = match result {
        Ok(report) => report,
        Err(e @ (Error::NonDivisibleRows { .. } | Error::LambdaMismatch { .. })) => {
            if args.json {
                print_json(&Rejection { pass: false, kind, rows: a.num_rows(), reason: e.to_string() });
            } else {
                say(&format!("FAIL: {e}\n"));
            }
            return Err(Failure::Rejected);
        }
        Err(e) => return Err(e.into()),
    };
    if args.json {
        print_json(&report);
    } else {
        print_verify_text(a, file.t, &report);
    }
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Rejected)
    }
}

fn print_verify_text(a: &SymbolArray, t: usize, report: &VerifyReport) {
    let mut o = String::new();
    let lambda = a.num_rows() as u64 / (a.q() as u64).pow(t as u32);
    let what = if args_is_oa(report) {
        format!("{t}-({},{},{lambda}) orthogonal array", a.q(), a.width())
    } else {
        format!("{t}-({},{},{},{lambda}) ordered orthogonal array", a.q(), a.blocks(), a.depth())
    };
    if report.pass {
        let _ = writeln!(o, "PASS: {what}, λ = {lambda}");
        let _ = writeln!(o, "{} selections checked, {} rows", report.selections_checked, report.rows);
        say(&o);
        return;
    }
    let _ = writeln!(o, "FAIL: not a {what}");
    for (first, repeat) in &report.duplicate_rows {
        let _ = writeln!(o, "rows {first} and {repeat} are equal");
    }
    for cols in report.failing_columns() {
        let missing: Vec<String> = report.missing_tuples(&cols).iter().map(|t| fmt_tuple(t)).collect();
        if missing.is_empty() {
            let _ = writeln!(o, "columns {}: unbalanced", fmt_cols(&cols));
        } else {
            let _ = writeln!(o, "columns {}: missing tuples {}", fmt_cols(&cols), missing.join(", "));
        }
    }
    for f in &report.failures {
        let _ = writeln!(
            o,
            "  columns {} tuple {}: observed {}, expected {}",
            fmt_cols(&f.columns),
            fmt_tuple(&f.tuple),
            f.observed,
            f.expected
        );
    }
    if report.truncated {
        let _ = writeln!(o, "… {} failures in total, {} shown", report.total_failures, report.failures.len());
    }
    let _ = writeln!(o, "{} of {} selections failed", report.failing_selections, report.selections_checked);
    say(&o);
}

fn args_is_oa(report: &VerifyReport) -> bool {
    report.kind == ooakit::verify::CheckKind::Oa
}

fn cmd_bounds(args: &BoundsArgs) -> Outcome {
    let Params { q, n, r, t } = args.params;
    let report = bound_report(q, n, r, t, &parse_rational(&args.c)?, &parse_rational(&args.big_c)?)?;
    if args.json {
        print_json(&report);
    } else {
        print_bounds_text(&report);
    }
    Ok(())
}

fn print_bounds_text(b: &BoundReport) {
    let mut o = String::new();
    let _ = writeln!(o, "parameters: q = {}, n = {}, r = {}, t = {}", b.q, b.n, b.r, b.t);
    let rao = b.lower_rao.as_ref().map_or("n/a".to_string(), |v| v.to_string());
    let _ = writeln!(o, "lower bound: {} (q^t = {}, Rao = {rao})", b.lower, b.lower_trivial);
    let _ = writeln!(o, "existence upper bound (c = {}): {}", b.c, b.existence_upper);
    let smallest = match &b.klp.smallest_size {
        Some(v) => v.to_string(),
        None => format!("None (exceeds |X|={})", b.klp.size_x),
    };
    let _ = writeln!(
        o,
        "sampling threshold (C = {}): {}; smallest admissible size: {smallest}",
        b.big_c, b.klp.raw_threshold
    );
    let d = &b.dims;
    let _ = writeln!(
        o,
        "dims: |X| = {}, |S| = {}, |F| = {}, |F'| = {}, dim V = {}, c1 = {}, c2 = {}, c3 = {}",
        d.size_x, d.size_s, d.size_f, d.size_fprime, d.dim_v, d.c1, d.c2, d.c3
    );
    let _ = writeln!(o, "note: {}", b.caveat);
    say(&o);
}

/// Verifies at strength `t` and writes the array only if it passes.
fn emit(array: &SymbolArray, t: usize, out: Option<&Path>) -> Outcome {
    let report = verify_ooa(array, array.q(), array.blocks(), array.depth(), t, &VerifyOptions::default());
    match report {
        Ok(rep) if rep.pass => {}
        Ok(rep) => {
            eprintln!("constructed array fails verification at strength {t}; nothing written");
            print_verify_text(array, t, &rep);
            return Err(Failure::Rejected);
        }
        Err(e) => {
            eprintln!("constructed array could not be verified: {e}; nothing written");
            return Err(Failure::Rejected);
        }
    }
    write_array(array, t, out)
}

fn write_array(array: &SymbolArray, t: usize, out: Option<&Path>) -> Outcome {
    let text = format_array(array, t);
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => {
            say(&text);
            Ok(())
        }
    }
}

fn field_for(q: u32, modulus: Option<&str>) -> Result<FieldSpec, Failure> {
    let (p, k) = prime_power(q as u64).ok_or(Error::NotPrimePower(q as u64))?;
    let modulus = modulus.map(parse_modulus).transpose()?;
    Ok(FieldSpec::new(p as u32, k, modulus)?)
}

fn cmd_construct(kind: ConstructKind) -> Outcome {
    match kind {
        ConstructKind::Full { q, n, r, t, out } => {
            let a = full_factorial(q, n, r)?;
            emit(&a, t.unwrap_or(n * r), out.as_deref())
        }
        ConstructKind::Hermite { params: Params { q, n, r, t }, points, modulus, out } => {
            let field = field_for(q, modulus.as_deref())?;
            let points = points.map(|idx| {
                idx.into_iter()
                    .map(|i| if i < q { Ok(field.element(i)) } else { Err(Error::ForeignElement(vec![i])) })
                    .collect::<Result<Vec<_>, _>>()
            });
            let points = points.transpose()?;
            let a = hermite_ooa(&field, n, r, t, points.as_deref())?;
            emit(&a, t, out.as_deref())
        }
        ConstructKind::FromOa { path, n, r, out } => {
            let file = parse_array(&read(&path)?)?;
            let a = oa_to_ooa(&file.array, n, r)?;
            emit(&a, file.t, out.as_deref())
        }
        ConstructKind::FromPoints { path, q, m, d, t, out } => {
            let ps = parse_points(&read(&path)?, q, m)?;
            if !ps.has_net_size() {
                eprintln!("warning: {} points, a net in base {q} with precision {m} has {q}^{m}", ps.points.len());
            }
            let d = d.unwrap_or(m);
            let a = points_to_array(&ps, d)?;
            if a.width() == 0 {
                return write_array(&a, 0, out.as_deref());
            }
            emit(&a, t.unwrap_or(d), out.as_deref())
        }
    }
}

fn cmd_search(args: &SearchArgs) -> Outcome {
    let Params { q, n, r, t } = args.params;
    let mode = match args.mode {
        ModeArg::Set => SearchMode::Set,
        ModeArg::Multiset => SearchMode::Multiset,
    };
    let mut result = match (args.anneal, args.lambda) {
        (true, lambda) => anneal_search(q, n, r, t, lambda.unwrap_or(1), args.seed, args.budget)?,
        (false, Some(lambda)) => search_lambda(q, n, r, t, lambda, mode, args.budget)?,
        (false, None) => find_min_size(q, n, r, t, mode, args.budget)?,
    };
    result.seed = args.seed;
    if let Some(w) = &result.witness {
        let rep = verify_ooa(w, q, n, r, t, &VerifyOptions::default())?;
        if !rep.pass {
            return Err(Failure::Usage("internal error: search witness fails verification".into()));
        }
        if let Some(path) = &args.out {
            write_array(w, t, Some(path))?;
        }
    }
    if args.json {
        print_json(&result);
    } else {
        print_search_text(&result, args.out.is_none());
    }
    match result.status {
        SearchStatus::ExactMinimum | SearchStatus::FoundUpperBound => Ok(()),
        SearchStatus::ExhaustedNoSolution | SearchStatus::BudgetExceeded => Err(Failure::Rejected),
    }
}

fn print_search_text(res: &SearchResult, show_witness: bool) {
    let mut o = String::new();
    let size = res.size.map_or("none".to_string(), |s| s.to_string());
    let headline = match res.status {
        SearchStatus::ExactMinimum => format!("exact minimum {size}"),
        SearchStatus::FoundUpperBound => format!("found upper bound {size}"),
        SearchStatus::ExhaustedNoSolution => "exhausted: no solution of the requested size".to_string(),
        SearchStatus::BudgetExceeded => format!("budget exceeded; best known upper bound {size}"),
    };
    let _ = writeln!(o, "{headline}");
    let _ = writeln!(o, "nodes explored: {}", res.nodes_explored);
    if show_witness {
        if let Some(w) = &res.witness {
            let _ = write!(o, "{}", format_array(w, res.t));
        }
    }
    say(&o);
}

fn cmd_certify(args: &CertifyArgs) -> Outcome {
    let Params { q, n, r, t } = args.params;
    let opts = CertifyOptions { scale_cap: args.scale_cap, spanning_samples: args.samples, seed: args.seed };
    let report = certify(q, n, r, t, &opts)?;
    if args.json {
        print_json(&report);
    } else {
        print_certify_text(&report);
    }
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Rejected)
    }
}

fn print_certify_text(rep: &CertReport) {
    let mut o = String::new();
    let _ = writeln!(o, "space for q = {}, n = {}, r = {}, t = {}", rep.q, rep.n, rep.r, rep.t);
    for e in &rep.entries {
        let _ = writeln!(o, "{:<8} {}  {}", e.name, if e.pass { "PASS" } else { "FAIL" }, e.detail);
        if let Some(w) = &e.witness {
            let _ = writeln!(o, "         witness: {}", serde_json::to_string(w).expect("witness serializes"));
        }
    }
    let c = &rep.constants;
    let _ = writeln!(
        o,
        "constants: c1 = {}, c2 = {}, c3 = {}, max ‖γ_b‖₁ = {}, |X| = {}, |S| = {}, |F| = {}, |F'| = {}",
        c.c1, c.c2, c.c3, c.decodability_bound, c.size_x, c.size_s, c.size_f, c.size_fprime
    );
    let _ = writeln!(o, "{}", if rep.pass { "all conditions PASS" } else { "some conditions FAIL" });
    say(&o);
}
