use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ghostcheck_core::acceptance::{run_all, Engines};
use ghostcheck_core::factory::{
    build_fan_instance, dim_moduli, dim_stratum, random_instance, ModelKind, StratumSpec,
};
use ghostcheck_core::report::{
    render_check, render_localmodel, run_check, run_localmodel, to_json, CheckError,
    ComponentInput, InputError, ProblemFile,
};
use serde_json::json;

const EXIT_SELFTEST: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ghostcheck",
    version,
    about = "Exact obstruction checks for smoothing stable maps with ghost components"
)]
struct Cli {
    /// Machine-readable JSON output only.
    #[arg(long, global = true)]
    json: bool,
    /// Write the output here instead of standard output.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the injectivity test and the subset test on every ghost component.
    Check { path: PathBuf },
    /// Write a problem file for the fan of lines, or a seeded random one.
    Generate {
        #[arg(long = "N", value_name = "N")]
        ambient_dim: usize,
        /// Genus of the ghost curve.
        #[arg(long)]
        h: usize,
        #[arg(long, value_enum, default_value = "hyperelliptic")]
        model: GenModel,
        /// Seed for `--model random`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of points for `--model random` (default N*h).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Dimension of the moduli space and optionally of a boundary stratum.
    Dims {
        #[arg(long = "N", value_name = "N")]
        ambient_dim: i64,
        #[arg(long)]
        g: i64,
        #[arg(long)]
        d: i64,
        /// Stratum as JSON (inline or a file path) with fields N, g, d, h, n, parts.
        #[arg(long)]
        stratum: Option<String>,
    },
    /// Expand a map germ on the resolved chain and check the residues.
    Localmodel { path: PathBuf },
    /// Run the acceptance suite.
    Selftest {
        /// Append wall-clock time to each line.
        #[arg(long)]
        timing: bool,
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<Fault>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GenModel {
    Hyperelliptic,
    NodalRational,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fault {
    ResidueSign,
}

struct Failure {
    code: u8,
    error: CheckError,
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure {
            code: EXIT_INPUT,
            error: e.into(),
        }
    }
}

impl From<CheckError> for Failure {
    fn from(e: CheckError) -> Self {
        let code = match e {
            CheckError::Input(_) => EXIT_INPUT,
            CheckError::Internal(_) => EXIT_INTERNAL,
        };
        Failure { code, error: e }
    }
}

fn threads() -> Result<usize, InputError> {
    match std::env::var("GHOSTCHECK_THREADS") {
        Err(_) => Ok(1),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(InputError::new(
                "invalid_environment",
                format!("GHOSTCHECK_THREADS must be a positive integer, got {s:?}"),
            )),
        },
    }
}

fn read(path: &Path) -> Result<ProblemFile, InputError> {
    let src = fs::read_to_string(path)
        .map_err(|e| InputError::new("io", format!("cannot read {}: {e}", path.display())))?;
    ProblemFile::parse(&src)
}

/// Output text and exit code of a successful dispatch.
type Output = (String, u8);

fn dispatch(cli: &Cli) -> Result<Output, Failure> {
    match &cli.command {
        Command::Check { path } => {
            let file = read(path)?;
            let report = run_check(&file, threads()?)?;
            let text = if cli.json {
                to_json(&report)
            } else {
                render_check(&report)
            };
            Ok((text, 0))
        }
        Command::Localmodel { path } => {
            let file = read(path)?;
            let report = run_localmodel(&file)?;
            let text = if cli.json {
                to_json(&report)
            } else {
                render_localmodel(&report)
            };
            Ok((text, 0))
        }
        Command::Generate {
            ambient_dim,
            h,
            model,
            seed,
            n,
        } => {
            let input = match model {
                GenModel::Random => {
                    if *ambient_dim == 0 || *h == 0 || n == &Some(0) {
                        return Err(InputError::new(
                            "precondition",
                            "N, h and n must be at least 1",
                        )
                        .into());
                    }
                    let count = n.unwrap_or(ambient_dim * h);
                    ComponentInput::Raw(random_instance(*seed, *h, *ambient_dim, count, 5))
                }
                GenModel::Hyperelliptic | GenModel::NodalRational => {
                    let kind = match model {
                        GenModel::Hyperelliptic => ModelKind::Hyperelliptic,
                        _ => ModelKind::NodalRational,
                    };
                    let inst = build_fan_instance(*ambient_dim, *h, kind)
                        .map_err(|e| InputError::new("precondition", e.to_string()))?;
                    ComponentInput::Model {
                        curve_model: inst.curve_model,
                        attachments: inst.attachments,
                        derivs: inst.derivs,
                    }
                }
            };
            Ok((ProblemFile::single(input).to_json(), 0))
        }
        Command::Dims {
            ambient_dim,
            g,
            d,
            stratum,
        } => {
            let dm = dim_moduli(*ambient_dim, *g, *d)
                .map_err(|e| InputError::new("precondition", e.to_string()))?;
            let ds = match stratum {
                None => None,
                Some(s) => {
                    let src = if Path::new(s).is_file() {
                        fs::read_to_string(s)
                            .map_err(|e| InputError::new("io", format!("cannot read {s}: {e}")))?
                    } else {
                        s.clone()
                    };
                    let spec: StratumSpec = serde_json::from_str(&src)
                        .map_err(|e| InputError::new("schema", format!("--stratum: {e}")))?;
                    if (spec.ambient_dim, spec.g, spec.d) != (*ambient_dim, *g, *d) {
                        return Err(InputError::new(
                            "invalid_stratum",
                            "stratum N, g, d differ from --N, --g, --d",
                        )
                        .into());
                    }
                    Some((
                        dim_stratum(&spec)
                            .map_err(|e| InputError::new("invalid_stratum", e.to_string()))?,
                        spec,
                    ))
                }
            };
            let text = if cli.json {
                let v = json!({
                    "N": ambient_dim, "g": g, "d": d,
                    "dim_moduli": dm,
                    "dim_stratum": ds.as_ref().map(|x| x.0),
                });
                serde_json::to_string_pretty(&v).expect("plain JSON") + "\n"
            } else {
                let mut t = format!("dim M(P^{ambient_dim}, genus {g}, degree {d}) = {dm}\n");
                if let Some((v, spec)) = &ds {
                    t.push_str(&format!(
                        "dim stratum (h = {}, n = {}) = {v} = dim M + N h - n\n",
                        spec.h, spec.n
                    ));
                }
                t
            };
            Ok((text, 0))
        }
        Command::Selftest {
            timing,
            inject_fault,
        } => {
            let engines = match inject_fault {
                None => Engines::default(),
                Some(Fault::ResidueSign) => Engines::with_flipped_residues(),
            };
            let results = run_all(&engines);
            let ok = results.iter().all(|r| r.passed());
            let text = if cli.json {
                let rows: Vec<_> = results
                    .iter()
                    .map(|r| json!({"id": r.id, "name": r.name, "passed": r.passed(), "detail": r.detail}))
                    .collect();
                serde_json::to_string_pretty(&json!({"passed": ok, "criteria": rows}))
                    .expect("plain JSON")
                    + "\n"
            } else {
                let mut t: String = results
                    .iter()
                    .map(|r| if *timing { r.line_with_time() } else { r.line() } + "\n")
                    .collect();
                let failed = results.iter().filter(|r| !r.passed()).count();
                t.push_str(&if ok {
                    "all criteria passed\n".to_string()
                } else {
                    format!("{failed} of {} criteria failed\n", results.len())
                });
                t
            };
            Ok((text, if ok { 0 } else { EXIT_SELFTEST }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok((text, code)) => {
            if let Some(path) = &cli.out {
                if let Err(e) = fs::write(path, &text) {
                    eprintln!("error [io]: cannot write {}: {e}", path.display());
                    return ExitCode::from(EXIT_INPUT);
                }
            } else {
                print!("{text}");
            }
            ExitCode::from(code)
        }
        Err(f) => {
            if cli.json {
                println!("{}", f.error.to_json());
            }
            eprintln!("error [{}]: {}", f.error.code(), f.error.message());
            ExitCode::from(f.code)
        }
    }
}
