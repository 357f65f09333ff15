//! Command-line front end: problem files in, JSON reports out.
//!
//! Exit codes: 0 every verdict holds, 1 some verdict fails, 2 bad input,
//! 3 internal guard (lattice cap, oracle dimension cap, simplex pivot limit).

mod problem;
mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use problem::{Analysis, InputError, ProblemFile, RegionSpec, SCHEMA_VERSION};
pub use report::{run_analyses, write_csv, AnalysisReport, Report, RunOutput, Witness};

use crate::error::Error;
use crate::instances;
use crate::regularity::perturbation_bound;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

const PRECEDENCE: &str = "Settings resolve as flag > problem file > default: --seed and --budget \
override region.seed and region.budget, --tol overrides the file's tol (membership tolerance).";

#[derive(Parser, Debug)]
#[command(name = "metreg", version, about = "Directional metric regularity of f(x) - K", after_help = PRECEDENCE)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-sample table of the first modulus analysis.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads for sampling.
    #[arg(long)]
    threads: Option<usize>,
    /// Leave wall time and timestamp out of the report.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every analysis listed in the problem file.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Sampled directional modulus.
    Modulus {
        file: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Envelope slopes, with the slope criterion when --tau is given.
    Slope {
        file: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Robinson-type interiority LP.
    Robinson {
        file: PathBuf,
        /// Comma-separated direction; defaults to the file's ybar.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        ybar: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Sampled coderivative criterion.
    Coderivative {
        file: PathBuf,
        /// Comma-separated δ ladder.
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Modulus bound under an L-Lipschitz perturbation.
    Perturb {
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long = "ybar-norm")]
        ybar_norm: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long = "L")]
        lipschitz: f64,
    },
    /// Modulus over the affine pencil (A0 + p·A1)x + b.
    Sweep {
        file: PathBuf,
        /// A1 as JSON rows, e.g. [[1,0],[0,0]].
        #[arg(long)]
        a1: String,
        /// Comma-separated parameter values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        p: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Sampled modulus against the lattice oracle.
    OracleCheck {
        file: PathBuf,
        #[arg(long)]
        points: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// List registry instances, or export one as a problem file.
    Instances {
        #[arg(long)]
        export: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Input(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e.0)
    }
}

fn read_problem(path: &Path) -> Result<ProblemFile, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    ProblemFile::parse(&text).map_err(|e| Failure::Input(format!("{}: {}", path.display(), e.0)))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Six significant digits.
fn short(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    let prec = (5 - v.abs().log10().floor() as i32).max(0) as usize;
    format!("{v:.prec$}")
}

fn apply_flags(file: &mut ProblemFile, c: &Common) -> Result<(), Failure> {
    if let Some(s) = c.seed {
        file.region.seed = Some(s);
    }
    if let Some(b) = c.budget {
        file.region.budget = Some(b);
    }
    if let Some(t) = c.tol {
        file.tol = Some(t);
    }
    file.validate()?;
    Ok(())
}

fn analyze(mut file: ProblemFile, c: &Common, stdout: &mut dyn Write) -> Result<i32, Failure> {
    apply_flags(&mut file, c)?;
    let run = || run_analyses(&file, !c.no_timestamp);
    let out = match c.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Failure::Input(format!("--threads: {e}")))?
            .install(run),
        None => run(),
    }?;
    if let Some(path) = &c.csv {
        let samples = out
            .samples
            .as_deref()
            .ok_or_else(|| Failure::Input("--csv needs a modulus analysis".into()))?;
        let mut buf = Vec::new();
        write_csv(&mut buf, samples, file.f.dim_in(), file.f.dim_out())
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        write_file(path, &buf)?;
    }
    let json = out.report.to_json();
    match &c.out {
        Some(path) => {
            write_file(path, json.as_bytes())?;
            for (key, r) in &out.report.results {
                let _ = writeln!(stdout, "{key}: {}", if r.holds { "holds" } else { "fails" });
            }
        }
        None => {
            let _ = stdout.write_all(json.as_bytes());
        }
    }
    Ok(if out.report.all_hold { EXIT_OK } else { EXIT_FAILED })
}

fn with_analysis(file: &Path, a: Analysis) -> Result<ProblemFile, Failure> {
    let mut f = read_problem(file)?;
    f.analyses = vec![a];
    Ok(f)
}

fn dispatch(cmd: Command, stdout: &mut dyn Write) -> Result<i32, Failure> {
    match cmd {
        Command::Analyze { file, common } => analyze(read_problem(&file)?, &common, stdout),
        Command::Modulus { file, tau, common } => analyze(with_analysis(&file, Analysis::Modulus { tau })?, &common, stdout),
        Command::Slope { file, tau, common } => analyze(with_analysis(&file, Analysis::Slope { tau })?, &common, stdout),
        Command::Robinson { file, ybar, common } => {
            let a = Analysis::Robinson {
                ybar,
                lambda_max: None,
                u_max: None,
            };
            analyze(with_analysis(&file, a)?, &common, stdout)
        }
        Command::Coderivative { file, deltas, common } => {
            let a = Analysis::Coderivative { delta_ladder: deltas };
            analyze(with_analysis(&file, a)?, &common, stdout)
        }
        Command::Sweep { file, a1, p, common } => {
            let a1 = serde_json::from_str(&a1).map_err(|e| Failure::Input(format!("--a1: {e}")))?;
            analyze(with_analysis(&file, Analysis::Sweep { a1, p_grid: p })?, &common, stdout)
        }
        Command::OracleCheck { file, points, common } => {
            let a = Analysis::OracleCheck {
                points_per_axis: points,
                rel_tol: None,
            };
            analyze(with_analysis(&file, a)?, &common, stdout)
        }
        Command::Perturb {
            tau,
            delta,
            ybar_norm,
            alpha,
            lipschitz,
        } => match perturbation_bound(tau, delta, ybar_norm, alpha, lipschitz) {
            Ok(b) => {
                let _ = writeln!(stdout, "{}", short(b));
                Ok(EXIT_OK)
            }
            Err(e @ Error::InvalidPerturbation { .. }) => {
                let _ = writeln!(stdout, "{e}");
                Ok(EXIT_FAILED)
            }
            Err(e) => Err(e.into()),
        },
        Command::Instances { export, out } => match export {
            None => {
                for inst in instances::all() {
                    let m = inst.known.as_ref().map(|k| match k.modulus.finite() {
                        Some(v) => v.to_string(),
                        None => "inf".into(),
                    });
                    let _ = writeln!(
                        stdout,
                        "{}\tdim {} -> {}\tmodulus {}",
                        inst.name,
                        inst.map.dim_in(),
                        inst.map.dim_out(),
                        m.unwrap_or_else(|| "?".into())
                    );
                }
                Ok(EXIT_OK)
            }
            Some(name) => {
                let inst = instances::builtin(&name)?;
                let mut json = ProblemFile::from_instance(&inst).to_json();
                json.push('\n');
                match out {
                    Some(p) => write_file(&p, json.as_bytes())?,
                    None => {
                        let _ = stdout.write_all(json.as_bytes());
                    }
                }
                Ok(EXIT_OK)
            }
        },
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
            } else {
                let _ = stdout.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match dispatch(cli.cmd, stdout) {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_INPUT
        }
        Err(Failure::Lib(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_guard() {
                EXIT_GUARD
            } else {
                EXIT_INPUT
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("metreg").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn perturb_prints_bound() {
        let (code, out, _) = call(&["perturb", "--tau", "1", "--delta", "0.5", "--ybar-norm", "1", "--alpha", "0.5", "--L", "0.05"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.trim(), "2.64151");
        let (code, _, _) = call(&["perturb", "--tau", "1", "--delta", "0.5", "--ybar-norm", "1", "--alpha", "0.5", "--L", "0.5"]);
        assert_eq!(code, EXIT_FAILED);
        let (code, _, _) = call(&["perturb", "--tau", "1", "--delta", "0.5", "--ybar-norm", "1", "--alpha", "2", "--L", "0"]);
        assert_eq!(code, EXIT_INPUT);
    }

    #[test]
    fn bad_arguments_are_input_errors() {
        assert_eq!(call(&["frobnicate"]).0, EXIT_INPUT);
        assert_eq!(call(&["analyze", "/nonexistent/problem.json"]).0, EXIT_INPUT);
        assert_eq!(call(&["instances", "--export", "nope"]).0, EXIT_INPUT);
        assert_eq!(call(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn lists_registry() {
        let (code, out, _) = call(&["instances"]);
        assert_eq!(code, EXIT_OK);
        for n in instances::names() {
            assert!(out.contains(n));
        }
    }

    #[test]
    fn short_format() {
        assert_eq!(short(2.641509433962264), "2.64151");
        assert_eq!(short(123.456789), "123.457");
        assert_eq!(short(0.0), "0");
    }
}
