//! Command-line front end: parse system files, run the analysis pipeline
//! (hypotheses → normal form → classification → monodromy → center), and emit
//! machine-readable reports and orbit CSV dumps.
//!
//! Exit codes: 0 ok, 2 invalid input, 3 hypothesis/monodromy precondition
//! failure, 4 inconclusive center stage.

use clap::{Args, Parser, Subcommand};
use qhflow::error::Error;
use qhflow::iifcheck::{verify_polynomial_iif, verify_power_iif, IifCandidate};
use qhflow::orbit::{orbit_csv, CenterVerdict};
use qhflow::pipeline::{analyze, field_from_spec, poly_from_records, AnalysisMode, AnalyzeOptions};
use qhflow::qhgrade::{basis, index_set_complement, QhType};
use qhflow::report::{
    parse_rational, FactorSpec, HamiltonianSpec, SystemSpec, VerifyReport, REPORT_SCHEMA_VERSION,
};
use qhflow::structure::hypothesis_report;
use qhflow::{rat, RatPoly};
use serde::Serialize;
use std::path::PathBuf;

const EXIT_OK: i32 = 0;
const EXIT_FAILURE: i32 = 1;
const EXIT_INVALID_INPUT: i32 = 2;
const EXIT_HYPOTHESIS: i32 = 3;
const EXIT_INCONCLUSIVE: i32 = 4;

#[derive(Parser)]
#[command(
    name = "qhflow",
    version,
    about = "Normal forms, inverse integrating factors and center-focus analysis \
             for planar systems with a quasi-homogeneous Hamiltonian leading part"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, clap::ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct TypeArg {
    /// Quasi-homogeneous type, e.g. `--type 3,4`
    #[arg(long = "type", value_name = "T1,T2")]
    qh_type: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Degrees (up to a bound) whose quasi-homogeneous space is trivial.
    IndexSet {
        #[command(flatten)]
        qh: TypeArg,
        /// Scan bound; defaults to t1·t2 − t1 − t2 (the set is then complete).
        #[arg(long)]
        bound: Option<i64>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Monomial basis of the degree-k space.
    Bases {
        #[command(flatten)]
        qh: TypeArg,
        #[arg(long)]
        degree: i64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Hypothesis checks (H1, H2, monodromy) for a Hamiltonian file.
    CheckH {
        file: PathBuf,
        #[command(flatten)]
        qh: TypeArg,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Full pipeline: normal form, factor classification, center stage.
    Classify {
        files: Vec<PathBuf>,
        #[command(flatten)]
        qh: TypeArg,
        /// Truncation degree override.
        #[arg(long)]
        degree: Option<i64>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Write the center-stage orbit samples and running integral as CSV.
        #[arg(long, value_name = "PATH", conflicts_with = "batch")]
        emit_orbit: Option<PathBuf>,
        /// Analyze several files concurrently (QHFLOW_THREADS caps workers).
        #[arg(long)]
        batch: bool,
    },
    /// Center/focus verdict for a monodromic system.
    Center {
        file: PathBuf,
        #[command(flatten)]
        qh: TypeArg,
        #[arg(long)]
        degree: Option<i64>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long, value_name = "PATH")]
        emit_orbit: Option<PathBuf>,
    },
    /// Verify a candidate inverse integrating factor exactly.
    VerifyIif {
        file: PathBuf,
        /// Candidate factor file (monomial records, bare list or {"w": [...]}).
        #[arg(long = "w", value_name = "WFILE")]
        w_file: PathBuf,
        /// Power-form exponent `p/q`; without it the candidate is checked as a
        /// polynomial factor.
        #[arg(long)]
        exponent: Option<String>,
        /// Only quasi-homogeneous defect components up to this degree must
        /// vanish (needs --type).
        #[arg(long)]
        truncate: Option<i64>,
        #[command(flatten)]
        qh: TypeArg,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

fn parse_type(arg: &TypeArg) -> Result<Option<QhType>, Error> {
    match &arg.qh_type {
        None => Ok(None),
        Some(s) => {
            let parts: Vec<&str> = s.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::Parse(format!("bad type {s:?}; expected t1,t2")));
            }
            let a: i64 = parts[0]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad type component {:?}", parts[0])))?;
            let b: i64 = parts[1]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad type component {:?}", parts[1])))?;
            Ok(Some(QhType::new(a, b)?))
        }
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parse(_)
        | Error::InvalidType(..)
        | Error::ExponentOverflow(..)
        | Error::ZeroPolynomial => EXIT_INVALID_INPUT,
        Error::NotHamiltonian { .. }
        | Error::Hypothesis { .. }
        | Error::NotMonodromic(_)
        | Error::NotQuasiHomogeneous { .. } => EXIT_HYPOTHESIS,
        _ => EXIT_FAILURE,
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, Error> {
    let data = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&data)
        .map_err(|e| Error::Parse(format!("cannot parse {}: {e}", path.display())))
}

#[derive(Serialize)]
struct IndexSetOut {
    #[serde(rename = "type")]
    qh_type: (i64, i64),
    bound: i64,
    complement: Vec<i64>,
}

#[derive(Serialize)]
struct BasesOut {
    #[serde(rename = "type")]
    qh_type: (i64, i64),
    degree: i64,
    basis: Vec<String>,
}

#[derive(Serialize)]
struct CheckHOut {
    schema_version: u32,
    #[serde(rename = "type")]
    qh_type: (i64, i64),
    h: String,
    hypothesis: qhflow::report::HypothesisJson,
}

fn cmd_index_set(qh: &TypeArg, bound: Option<i64>, format: Format) -> Result<i32, Error> {
    let t = parse_type(qh)?.ok_or_else(|| Error::Parse("--type is required".into()))?;
    let default_bound = (t.t1() * t.t2() - t.weight()).max(0);
    let bound = bound.unwrap_or(default_bound);
    let complement = index_set_complement(t, bound);
    let out = IndexSetOut { qh_type: (t.t1(), t.t2()), bound, complement };
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&out).unwrap()),
        Format::Text => {
            let inner =
                out.complement.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", ");
            println!("{{{inner}}}");
        }
    }
    Ok(EXIT_OK)
}

fn cmd_bases(qh: &TypeArg, degree: i64, format: Format) -> Result<i32, Error> {
    let t = parse_type(qh)?.ok_or_else(|| Error::Parse("--type is required".into()))?;
    let names: Vec<String> = basis(t, degree)
        .iter()
        .map(|e| RatPoly::monomial(e.i, e.j, rat(1, 1)).to_string())
        .collect();
    let out = BasesOut { qh_type: (t.t1(), t.t2()), degree, basis: names };
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&out).unwrap()),
        Format::Text => println!("{}", out.basis.join(", ")),
    }
    Ok(EXIT_OK)
}

fn cmd_check_h(file: &PathBuf, qh: &TypeArg, format: Format) -> Result<i32, Error> {
    let spec: HamiltonianSpec = read_json(file)?;
    let t = match parse_type(qh)? {
        Some(t) => t,
        None => match spec.qh_type {
            Some((a, b)) => QhType::new(a, b)?,
            None => return Err(Error::Parse("no type given (flag or file)".into())),
        },
    };
    let h = poly_from_records(&spec.h)?;
    let hr = hypothesis_report(&h, t)?;
    let out = CheckHOut {
        schema_version: REPORT_SCHEMA_VERSION,
        qh_type: (t.t1(), t.t2()),
        h: h.to_string(),
        hypothesis: qhflow::report::HypothesisJson {
            h1: hr.h1,
            h2: hr.h2,
            h2_checked_degrees: hr.h2_checked_degrees.clone(),
            monodromic: hr.monodromic,
            sign: hr.sign,
            n0: hr.n0,
        },
    };
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&out).unwrap()),
        Format::Text => println!(
            "h = {}\nH1: {}  H2: {} (degrees {:?})  monodromic: {} (sign {})  n0: {}",
            out.h,
            hr.h1,
            hr.h2,
            hr.h2_checked_degrees,
            hr.monodromic,
            hr.sign,
            hr.n0
        ),
    }
    if hr.h1 && hr.h2 {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_HYPOTHESIS)
    }
}

fn run_one(
    file: &PathBuf,
    opts: &AnalyzeOptions,
    format: Format,
    emit_orbit: Option<&PathBuf>,
) -> Result<i32, Error> {
    let spec: SystemSpec = read_json(file)?;
    let analysis = analyze(&spec, opts)?;
    match format {
        Format::Json => println!("{}", analysis.report.to_json()),
        Format::Text => print!("{}", analysis.report.to_text()),
    }
    if let Some(path) = emit_orbit {
        if let Some(orbit) = &analysis.orbit {
            let csv = orbit_csv(&orbit.table, &orbit.integrand_name, &orbit.integrand)?;
            std::fs::write(path, csv)
                .map_err(|e| Error::Parse(format!("cannot write {}: {e}", path.display())))?;
        }
    }
    if analysis.center == Some(CenterVerdict::Inconclusive) {
        Ok(EXIT_INCONCLUSIVE)
    } else {
        Ok(EXIT_OK)
    }
}

#[derive(Serialize)]
struct BatchEntry {
    file: String,
    exit: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<qhflow::report::Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn batch_workers() -> usize {
    std::env::var("QHFLOW_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

fn cmd_classify_batch(files: &[PathBuf], opts: &AnalyzeOptions) -> Result<i32, Error> {
    let cap = batch_workers();
    let mut entries: Vec<Option<BatchEntry>> = files.iter().map(|_| None).collect();
    for chunk in files.chunks(cap.max(1)) {
        let offset = files.iter().position(|f| f == &chunk[0]).unwrap_or(0);
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|file| {
                    let opts = opts.clone();
                    scope.spawn(move || {
                        let spec: Result<SystemSpec, Error> = read_json(file);
                        match spec.and_then(|s| analyze(&s, &opts)) {
                            Ok(a) => {
                                let exit = if a.center == Some(CenterVerdict::Inconclusive) {
                                    EXIT_INCONCLUSIVE
                                } else {
                                    EXIT_OK
                                };
                                BatchEntry {
                                    file: file.display().to_string(),
                                    exit,
                                    report: Some(a.report),
                                    error: None,
                                }
                            }
                            Err(e) => BatchEntry {
                                file: file.display().to_string(),
                                exit: exit_code_for(&e),
                                report: None,
                                error: Some(e.to_string()),
                            },
                        }
                    })
                })
                .collect();
            for (i, h) in handles.into_iter().enumerate() {
                entries[offset + i] = Some(h.join().expect("worker panicked"));
            }
        });
    }
    let entries: Vec<BatchEntry> = entries.into_iter().map(|e| e.unwrap()).collect();
    let code = entries.iter().map(|e| e.exit).max().unwrap_or(EXIT_OK);
    println!("{}", serde_json::to_string_pretty(&entries).unwrap());
    Ok(code)
}

fn cmd_verify_iif(
    file: &PathBuf,
    w_file: &PathBuf,
    exponent: Option<&str>,
    truncate: Option<i64>,
    qh: &TypeArg,
    format: Format,
) -> Result<i32, Error> {
    let spec: SystemSpec = read_json(file)?;
    let f = field_from_spec(&spec)?;
    let wspec: FactorSpec = read_json(w_file)?;
    let w = poly_from_records(wspec.records())?;
    let mut notes = Vec::new();
    let (ok, defect, exp_str) = match exponent {
        Some(s) => {
            let e = parse_rational(s)?;
            let cand = IifCandidate::new(w, e.clone())?;
            let truncate_spec = match truncate {
                None => None,
                Some(d) => {
                    let t = parse_type(qh)?
                        .or_else(|| {
                            spec.qh_type.and_then(|(a, b)| QhType::new(a, b).ok())
                        })
                        .ok_or_else(|| Error::Parse("--truncate needs a type".into()))?;
                    notes.push(format!(
                        "defect checked on quasi-homogeneous components up to degree {d}"
                    ));
                    Some((t, d))
                }
            };
            let (ok, defect) = verify_power_iif(&f, &cand, truncate_spec);
            (ok, defect, Some(e.to_string()))
        }
        None => {
            let (ok, defect) = verify_polynomial_iif(&f, &w)?;
            (ok, defect, None)
        }
    };
    let out = VerifyReport {
        schema_version: REPORT_SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        ok,
        exponent: exp_str,
        defect: defect.to_string(),
        notes,
    };
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&out).unwrap()),
        Format::Text => println!(
            "verified: {}{}{}",
            out.ok,
            out.exponent.as_ref().map(|e| format!(" (exponent {e})")).unwrap_or_default(),
            if out.ok { String::new() } else { format!("; defect = {}", out.defect) }
        ),
    }
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::IndexSet { qh, bound, format } => cmd_index_set(&qh, bound, format),
        Command::Bases { qh, degree, format } => cmd_bases(&qh, degree, format),
        Command::CheckH { file, qh, format } => cmd_check_h(&file, &qh, format),
        Command::Classify { files, qh, degree, tol, format, emit_orbit, batch } => {
            if files.is_empty() {
                return Err(Error::Parse("no input files".into()));
            }
            let opts = AnalyzeOptions {
                degree,
                tol,
                qh_type: parse_type(&qh)?,
                mode: AnalysisMode::Classify,
            };
            if batch {
                cmd_classify_batch(&files, &opts)
            } else if files.len() > 1 {
                Err(Error::Parse("several files given; use --batch".into()))
            } else {
                run_one(&files[0], &opts, format, emit_orbit.as_ref())
            }
        }
        Command::Center { file, qh, degree, tol, format, emit_orbit } => {
            let opts = AnalyzeOptions {
                degree,
                tol,
                qh_type: parse_type(&qh)?,
                mode: AnalysisMode::Center,
            };
            run_one(&file, &opts, format, emit_orbit.as_ref())
        }
        Command::VerifyIif { file, w_file, exponent, truncate, qh, format } => {
            cmd_verify_iif(&file, &w_file, exponent.as_deref(), truncate, &qh, format)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    };
    std::process::exit(code);
}
