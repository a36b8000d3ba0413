use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use fcrystal::family::FiberStatus;
use fcrystal::io::{self, DEFAULT_PRECISION};
use fcrystal::newton_hodge::{decompose, self_dual_decompose, uniqueness_probe};
use fcrystal::polygon::{format_rational, parse_rational, Rational};
use fcrystal::report::{ExitCode, Report, Verdict};
use fcrystal::sample::{generate, GenMode};
use fcrystal::{Error, FCrystal, FormKind, Lattice, RingParams, SplitOptions};

#[derive(Parser)]
#[command(
    name = "fcrystal",
    version,
    about = "Newton and Hodge polygons and decompositions of F-crystals"
)]
struct Cli {
    /// Precision N used when an input file omits it.
    #[arg(long, global = true, env = "FCRYSTAL_DEFAULT_PRECISION", default_value_t = DEFAULT_PRECISION)]
    default_precision: u32,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ring parameters, rank, det valuation, Hodge and Newton slopes.
    Info { file: PathBuf },
    /// Defining identities, slope symmetry, Mazur's inequality, F(M)^perp.
    Validate { file: PathBuf },
    /// Newton-Hodge decomposition at a break point.
    Decompose(DecomposeArgs),
    /// Emit a random self-dual crystal in Cartan form K1 p^mu K2.
    Generate(GenerateArgs),
    /// Fiberwise self-dual decomposition of a family.
    Family {
        file: PathBuf,
        /// Maximum digits of precision the split may lose.
        #[arg(long)]
        loss_budget: Option<u32>,
    },
}

#[derive(Args)]
struct DecomposeArgs {
    file: PathBuf,
    /// Break point as A,B with B an integer or p/q.
    #[arg(long = "break", value_parser = parse_break)]
    break_point: (usize, Rational),
    /// Treat the input as self-dual and split into three pieces.
    #[arg(long)]
    self_dual: bool,
    /// Re-run in this many random bases and compare M1.
    #[arg(long, default_value_t = 0)]
    probe: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum digits of precision the split may lose.
    #[arg(long)]
    loss_budget: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Symplectic,
    Orthogonal,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Cartan,
    Ordinary,
}

#[derive(Args)]
struct GenerateArgs {
    /// Residue characteristic.
    #[arg(long)]
    p: u64,
    #[arg(long, default_value_t = 1)]
    a: usize,
    /// Witt vector precision.
    #[arg(long = "N")]
    precision: Option<u32>,
    /// Rank; must equal the number of exponents.
    #[arg(long)]
    n: Option<usize>,
    /// Exponents, comma separated, symmetric about val(c)/2.
    #[arg(long, value_delimiter = ',', required = true)]
    mu: Vec<u32>,
    #[arg(long, value_enum, default_value = "symplectic")]
    kind: Kind,
    /// `ordinary` makes the Newton slopes equal the Hodge slopes.
    #[arg(long, value_enum, default_value = "cartan")]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_break(s: &str) -> Result<(usize, Rational), String> {
    let (a, b) = s.split_once(',').ok_or("expected A,B")?;
    let a = a
        .trim()
        .parse()
        .map_err(|_| format!("bad abscissa {a:?}"))?;
    let b = parse_rational(b).map_err(|e| e.to_string())?;
    Ok((a, b))
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            process::exit(code);
        }
    };
    process::exit(run(cli));
}

fn read(path: &PathBuf) -> Result<Vec<u8>, i32> {
    fs::read(path).map_err(|e| {
        eprintln!("fcrystal: cannot read {}: {e}", path.display());
        64
    })
}

fn emit(report: Report) -> i32 {
    // a closed pipe is not an error of the computation
    let _ = writeln!(std::io::stdout(), "{}", report.to_json());
    report.exit_code.into()
}

fn run(cli: Cli) -> i32 {
    let np = cli.default_precision;
    match cli.command {
        Command::Info { file } => {
            let bytes = match read(&file) {
                Ok(b) => b,
                Err(c) => return c,
            };
            emit(with_input("info", &bytes, |text| info(text, np)))
        }
        Command::Validate { file } => {
            let bytes = match read(&file) {
                Ok(b) => b,
                Err(c) => return c,
            };
            emit(with_input("validate", &bytes, |text| validate(text, np)))
        }
        Command::Decompose(args) => {
            let bytes = match read(&args.file) {
                Ok(b) => b,
                Err(c) => return c,
            };
            let mut command = format!(
                "decompose --break {},{}",
                args.break_point.0,
                format_rational(&args.break_point.1)
            );
            if args.self_dual {
                command.push_str(" --self-dual");
            }
            if args.probe > 0 {
                command.push_str(&format!(" --probe {} --seed {}", args.probe, args.seed));
            }
            emit(with_input(&command, &bytes, |text| {
                run_decompose(text, np, &args)
            }))
        }
        Command::Generate(args) => run_generate(&args, np),
        Command::Family { file, loss_budget } => {
            let bytes = match read(&file) {
                Ok(b) => b,
                Err(c) => return c,
            };
            emit(with_input("family", &bytes, |text| {
                family(text, np, loss_budget)
            }))
        }
    }
}

/// The pieces of a report besides the command echo and digest.
type Outcome = (Vec<Verdict>, Option<u32>, Value, Option<ExitCode>);

fn with_input(
    command: &str,
    bytes: &[u8],
    f: impl FnOnce(&str) -> Result<Outcome, Error>,
) -> Report {
    let text = match std::str::from_utf8(bytes) {
        Ok(t) => t,
        Err(_) => {
            return Report::from_error(command, bytes, &Error::Parse("input is not UTF-8".into()))
        }
    };
    match f(text) {
        Ok((verdicts, prec, data, code)) => {
            let report = Report::new(command, bytes, verdicts, prec, data);
            match code {
                Some(c) => report.with_exit_code(c),
                None => report,
            }
        }
        Err(e) => Report::from_error(command, bytes, &e),
    }
}

fn ring_json(c: &FCrystal) -> Value {
    let r = c.ring();
    json!({
        "p": r.p(),
        "a": r.degree(),
        "N": r.precision(),
        "modulus": r.modulus().iter().map(|&m| m as u64).collect::<Vec<_>>(),
    })
}

fn info(text: &str, np: u32) -> Result<Outcome, Error> {
    let (c, s) = io::read_any(text, np)?;
    let mut data = json!({
        "ring": ring_json(&c),
        "n": c.rank(),
        "det_val": c.det_val()?,
        "hodge": c.hodge_slopes()?,
        "newton": c.newton_slopes()?,
    });
    if let Some(s) = s {
        data["kind"] = json!(s.kind());
        data["c_val"] = json!(s.nu());
    }
    Ok((vec![], Some(c.ring().precision()), data, None))
}

fn validate(text: &str, np: u32) -> Result<Outcome, Error> {
    let (c, s) = io::read_any(text, np)?;
    let mut verdicts = Vec::new();
    if let Some(s) = &s {
        verdicts.extend(s.validate()?);
        verdicts.push(
            s.frobenius_lattice_perp()
                .unwrap_or_else(|e| Verdict::fail("frobenius_lattice_perp", e.to_string())),
        );
    }
    let mazur = c.mazur_check()?;
    verdicts.push(Verdict::new(
        "mazur",
        mazur.passed,
        match mazur.violation {
            Some(i) => format!(
                "Newton {} dips below Hodge {} at {i}",
                mazur.newton, mazur.hodge
            ),
            None if !mazur.endpoints_match => format!(
                "endpoints differ: Newton {}, Hodge {}, val(det A) = {}",
                mazur.newton, mazur.hodge, mazur.det_val
            ),
            None => format!(
                "Newton {} lies on or above Hodge {}",
                mazur.newton, mazur.hodge
            ),
        },
    ));
    let data = json!({ "ring": ring_json(&c), "mazur": mazur });
    Ok((verdicts, Some(c.ring().precision()), data, None))
}

fn lattice_json(l: &Lattice) -> Value {
    json!({ "denom_exp": l.denom_exp(), "basis": io::matrix_value(l.basis()) })
}

fn block_json(c: &FCrystal) -> Result<Value, Error> {
    Ok(json!({
        "matrix": io::matrix_value(c.matrix()),
        "hodge": c.hodge_slopes()?,
        "newton": c.newton_slopes()?,
    }))
}

fn run_decompose(text: &str, np: u32, args: &DecomposeArgs) -> Result<Outcome, Error> {
    let (c, s) = io::read_any(text, np)?;
    let opts = SplitOptions {
        loss_budget: args.loss_budget,
        ..SplitOptions::default()
    };
    let (a, b) = args.break_point;
    let (mut verdicts, prec, mut data) = if args.self_dual {
        let s = s.ok_or_else(|| Error::Parse("--self-dual needs a file with a form".into()))?;
        let d = self_dual_decompose(&s, a, b, &opts)?;
        let data = json!({
            "hypothesis": d.hypothesis,
            "symmetric_break": [d.symmetric_break.0, format_rational(&d.symmetric_break.1)],
            "factor_precision": d.factor_precision,
            "m1": lattice_json(&d.m1),
            "m3": lattice_json(&d.m3),
            "ms1": lattice_json(&d.ms1),
            "ms2": lattice_json(&d.ms2),
            "flag": lattice_json(&d.flag),
            "outer": {
                "block": block_json(d.outer.base())?,
                "form": io::matrix_value(d.outer.form()),
            },
            "middle": {
                "block": block_json(d.middle.base())?,
                "form": io::matrix_value(d.middle.form()),
            },
        });
        (d.certificates, d.precision, data)
    } else {
        let d = decompose(&c, a, b, &opts)?;
        let data = json!({
            "hypothesis": d.hypothesis,
            "factor_precision": d.factor_precision,
            "m1": lattice_json(&d.m1),
            "m2": lattice_json(&d.m2),
            "f1": block_json(&d.f1)?,
            "f2": block_json(&d.f2)?,
        });
        (d.certificates, d.precision, data)
    };
    if args.probe > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let probe = uniqueness_probe(&c, a, b, args.probe, &opts, &mut rng)?;
        let agree = probe.passed();
        data["probe"] = json!(probe);
        verdicts.push(Verdict::new(
            "uniqueness_probe",
            agree,
            format!(
                "{} random bases, M1 {}",
                args.probe,
                if agree { "agrees" } else { "differs" }
            ),
        ));
    }
    Ok((verdicts, Some(prec), data, None))
}

fn family(text: &str, np: u32, loss_budget: Option<u32>) -> Result<Outcome, Error> {
    let fam = io::read_family(text, np)?;
    let opts = SplitOptions {
        loss_budget,
        ..SplitOptions::default()
    };
    let report = fam.filter_check(&opts);
    let verdicts: Vec<Verdict> = report
        .fibers
        .iter()
        .map(|f| {
            let details = match f.status {
                FiberStatus::Decomposed => {
                    format!("decomposed modulo p^{}", f.precision.unwrap_or(0))
                }
                _ => f
                    .verdicts
                    .iter()
                    .filter(|v| !v.passed)
                    .map(|v| format!("{}: {}", v.name, v.details))
                    .collect::<Vec<_>>()
                    .join("; "),
            };
            Verdict::new(
                format!("fiber_{}", f.index),
                f.status == FiberStatus::Decomposed,
                details,
            )
        })
        .collect();
    let failed = report
        .fibers
        .iter()
        .any(|f| f.status == FiberStatus::Failed);
    let code = if !failed && !report.hypothesis_violations.is_empty() {
        Some(ExitCode::HypothesisViolation)
    } else {
        None
    };
    let prec = report.fibers.iter().filter_map(|f| f.precision).min();
    Ok((verdicts, prec, json!(report), code))
}

fn run_generate(args: &GenerateArgs, np: u32) -> i32 {
    let usage = |msg: String| {
        eprintln!("fcrystal: {msg}");
        64
    };
    if let Some(n) = args.n {
        if n != args.mu.len() {
            return usage(format!(
                "--n {n} does not match {} exponents in --mu",
                args.mu.len()
            ));
        }
    }
    let ring = match RingParams::new(args.p, args.a, args.precision.unwrap_or(np)) {
        Ok(r) => r,
        Err(e) => return usage(e.to_string()),
    };
    let kind = match args.kind {
        Kind::Symplectic => FormKind::Symplectic,
        Kind::Orthogonal => FormKind::Orthogonal,
    };
    let mode = match args.mode {
        Mode::Cartan => GenMode::Cartan,
        Mode::Ordinary => GenMode::Ordinary,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let s = match generate(&ring, kind, &args.mu, mode, &mut rng) {
        Ok(s) => s,
        Err(e @ (Error::InvalidMu(_) | Error::Unsupported(_))) => return usage(e.to_string()),
        Err(e) => {
            eprintln!("fcrystal: {e}");
            return ExitCode::for_error(&e).into();
        }
    };
    let text = io::to_pretty(&io::self_dual_file(&s));
    match &args.out {
        Some(path) => {
            if let Err(e) = fs::write(path, &text) {
                eprintln!("fcrystal: cannot write {}: {e}", path.display());
                return 1;
            }
        }
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
        }
    }
    0
}
