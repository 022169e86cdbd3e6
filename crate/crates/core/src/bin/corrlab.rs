//! Command-line front end.
//!
//! Exit codes: 0 when everything passes, 1 on a validation failure, 2 on
//! usage or parse errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use corrlab::bicat::{gamma_of_hom, morita_inverse_of_corner};
use corrlab::error::Error;
use corrlab::extension::k0::{K0Functor, K0Nerve};
use corrlab::extension::ncorr::{GammaFunctor, NCorrOracle};
use corrlab::extension::{Engine, TraceEntry};
use corrlab::nerve::{fill_horn, HornSpec, NCorrSimplex};
use corrlab::random::{self, Limits};
use corrlab::selftest;
use corrlab::serial;
use corrlab::subdivision::SubdivisionFunctor;
use corrlab::validate;

/// Largest simplex dimension accepted by `subdivide` and `extend`.
const CLI_MAX_N: usize = 3;

#[derive(Parser)]
#[command(name = "corrlab", version, about = "Finite-dimensional C*-correspondences, their nerve, and horn-filling extensions")]
struct Cli {
    /// Residual threshold for pass/fail reporting.
    #[arg(long, global = true, default_value_t = 1e-9)]
    eps: f64,
    /// Seed for generators and the self-test.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the horn-fill trace of `extend` here.
    #[arg(long, global = true)]
    trace: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Checks every invariant of a JSON document and reports residuals.
    Validate {
        /// Any document: algebra, star_hom, module, correspondence, iso, ncorr_simplex or horn.
        path: Option<PathBuf>,
        #[arg(long, conflicts_with = "path")]
        simplex: Option<PathBuf>,
    },
    /// Generates random or explicit documents.
    Make {
        #[command(subcommand)]
        what: Make,
    },
    /// Γ of a *-homomorphism as a correspondence.
    Gamma {
        #[arg(long)]
        hom: PathBuf,
    },
    /// The corner quasi-inverse of Γ(i_E) and both comparison isomorphisms.
    Morita {
        #[arg(long)]
        module: PathBuf,
    },
    /// Fills an inner or special outer horn.
    Fill {
        #[arg(long)]
        horn: PathBuf,
    },
    /// The functor S ↦ A_S, S ⊆ T ↦ f_ST of a simplex.
    Subdivide {
        #[arg(long)]
        simplex: PathBuf,
        /// Expected dimension of the simplex.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Extends a C*-stable functor over the correspondence nerve and
    /// evaluates it on a simplex.
    Extend {
        #[arg(long)]
        simplex: PathBuf,
        #[arg(long, value_enum)]
        functor: FunctorArg,
        #[arg(long, value_enum)]
        target: TargetArg,
        /// Fill special horns through the given simplex when possible.
        #[arg(long)]
        guided: bool,
    },
    /// Runs the acceptance suite and prints a JSON report.
    Selftest {
        /// A tenth of the cases.
        #[arg(long)]
        quick: bool,
        /// Only this suite (1 to 10).
        #[arg(long)]
        suite: Option<usize>,
    },
}

#[derive(Subcommand)]
enum Make {
    /// An algebra with the given block sizes.
    Algebra {
        #[arg(long, value_delimiter = ',', required = true)]
        blocks: Vec<usize>,
        #[arg(long)]
        label: Option<String>,
    },
    /// A random *-homomorphism.
    Hom {
        #[arg(long)]
        nonunital: bool,
    },
    /// A random module over a random algebra.
    Module,
    /// A random correspondence.
    Corr,
    /// A random n-simplex: a Γ-image, or gauged by random twists.
    Simplex {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        gauged: bool,
        /// Replace u_012 by a non-coherent unitary (dimension ≥ 3).
        #[arg(long)]
        corrupt: bool,
    },
    /// The horn Λⁿ_k of a random simplex.
    Horn {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        gauged: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FunctorArg {
    K0,
    Gamma,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    K0nerve,
    Ncorr,
}

/// A failure together with its exit code.
struct Fail {
    code: u8,
    msg: String,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::Schema { .. } => 2,
            _ => 1,
        };
        Fail { code, msg: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Fail {
    Fail { code: 2, msg: msg.into() }
}

type CliResult<T> = std::result::Result<T, Fail>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn emit(cli: &Cli, v: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(v).expect("records serialise");
    match &cli.out {
        Some(p) => fs::write(p, text + "\n").map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            // a closed pipe downstream is not an error worth reporting
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            Ok(())
        }
    }
}

fn load_simplex(path: &Path) -> CliResult<NCorrSimplex> {
    let s: serial::SimplexJson = serial::parse_as(&read(path)?, "ncorr_simplex")?;
    Ok(serial::simplex_from_json(&s, "$")?)
}

fn validate(cli: &Cli, text: &str) -> CliResult<bool> {
    let report = validate::validate_text(text, cli.eps)?;
    for c in &report.checks {
        let res = c.residual.map(|r| format!(" residual {r:.3e}")).unwrap_or_default();
        let det = c.detail.as_ref().map(|d| format!(" ({d})")).unwrap_or_default();
        eprintln!("{} {}{res}{det}", if c.passed { "PASS" } else { "FAIL" }, c.invariant);
    }
    emit(cli, &report)?;
    Ok(report.passed)
}

fn make(cli: &Cli, what: &Make) -> CliResult<Value> {
    let mut r = random::rng(cli.seed);
    let lim = Limits {
        max_blocks: 2,
        max_size: 3,
    };
    let tiny = Limits {
        max_blocks: 2,
        max_size: 2,
    };
    let to_value = |x: &dyn erased::Ser| x.value();
    Ok(match what {
        Make::Algebra { blocks, label } => {
            let a = corrlab::cstar::FdCstarAlgebra::new(blocks.clone())?;
            let a = match label {
                Some(l) => a.with_label(l.clone()),
                None => a,
            };
            to_value(&serial::algebra_to_json(&a))
        }
        Make::Hom { nonunital } => {
            let a = random::random_algebra(&mut r, lim);
            to_value(&serial::hom_to_json(&random::random_hom_from(&mut r, &a, lim, !nonunital)))
        }
        Make::Module => {
            let a = random::random_algebra(&mut r, lim);
            to_value(&serial::module_to_json(&random::random_module(&mut r, &a, 3)))
        }
        Make::Corr => {
            let a = random::random_algebra(&mut r, lim);
            to_value(&serial::corr_to_json(&random::random_corr(&mut r, &a, lim)?))
        }
        Make::Simplex { dim, gauged, corrupt } => {
            if *dim > CLI_MAX_N {
                return Err(usage(format!("--dim is capped at {CLI_MAX_N}")));
            }
            let s = random::random_simplex(&mut r, *dim, if *dim >= 3 { tiny } else { lim }, *gauged)?;
            let mut j = serial::simplex_to_json(&s);
            if *corrupt {
                if *dim < 3 {
                    return Err(usage("--corrupt needs --dim 3 or more"));
                }
                // a global phase keeps u_012 a unitary intertwiner but breaks the pentagon
                let t = j
                    .isos
                    .iter_mut()
                    .find(|t| (t.i, t.j, t.k) == (0, 1, 2))
                    .expect("a 3-simplex has u_012");
                for row in &mut t.unitary {
                    for z in row.iter_mut() {
                        *z = [-z[1], z[0]];
                    }
                }
            }
            to_value(&j)
        }
        Make::Horn { dim, k, gauged } => {
            if *dim < 2 || *dim > CLI_MAX_N || k > dim {
                return Err(usage(format!("need 2 ≤ dim ≤ {CLI_MAX_N} and k ≤ dim")));
            }
            let s = random::random_simplex(&mut r, *dim, tiny, *gauged)?;
            to_value(&serial::horn_to_json(&HornSpec::of_simplex(&s, *k)?))
        }
    })
}

/// Small helper so `make` can serialise different record types uniformly.
mod erased {
    pub trait Ser {
        fn value(&self) -> serde_json::Value;
    }
    impl<T: serde::Serialize> Ser for T {
        fn value(&self) -> serde_json::Value {
            serde_json::to_value(self).expect("records serialise")
        }
    }
}

fn check_dim(n: usize) -> CliResult<()> {
    if n > CLI_MAX_N {
        return Err(usage(format!("simplices of dimension {n} exceed the command-line cap {CLI_MAX_N}")));
    }
    Ok(())
}

fn write_trace(cli: &Cli, trace: &[TraceEntry]) -> CliResult<()> {
    if let Some(p) = &cli.trace {
        let text = serde_json::to_string_pretty(trace).expect("trace serialises");
        fs::write(p, text + "\n").map_err(|e| usage(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult<bool> {
    match &cli.cmd {
        Cmd::Validate { path, simplex } => {
            let p = path
                .as_ref()
                .or(simplex.as_ref())
                .ok_or_else(|| usage("validate needs a file"))?;
            validate(cli, &read(p)?)
        }
        Cmd::Make { what } => {
            let v = make(cli, what)?;
            emit(cli, &v)?;
            Ok(true)
        }
        Cmd::Gamma { hom } => {
            let h: serial::StarHomJson = serial::parse_as(&read(hom)?, "star_hom")?;
            let phi = serial::hom_from_json(&h, "$")?;
            let g = gamma_of_hom(&phi)?;
            emit(cli, &serial::corr_to_json(&g.corr))?;
            Ok(true)
        }
        Cmd::Morita { module } => {
            let m: serial::ModuleJson = serial::parse_as(&read(module)?, "module")?;
            let e = serial::module_from_json(&m, "$")?;
            let mi = morita_inverse_of_corner(&e)?;
            let report = json!({
                "gamma_corner": serial::corr_to_json(&mi.gamma_i.corr),
                "inverse": serial::corr_to_json(&mi.inverse),
                "gamma_then_inverse": serial::iso_to_json(&mi.gamma_then_inverse),
                "inverse_then_gamma": serial::iso_to_json(&mi.inverse_then_gamma),
            });
            emit(cli, &report)?;
            Ok(true)
        }
        Cmd::Fill { horn } => {
            let h: serial::HornJson = serial::parse_as(&read(horn)?, "horn")?;
            let h = serial::horn_from_json(&h, "$")?;
            let s = fill_horn(&h)?;
            emit(cli, &serial::simplex_to_json(&s))?;
            Ok(true)
        }
        Cmd::Subdivide { simplex, n } => {
            let s = load_simplex(simplex)?;
            if let Some(n) = n {
                check_dim(*n)?;
                if *n != s.dim() {
                    return Err(usage(format!("--n {n} but the simplex has dimension {}", s.dim())));
                }
            }
            check_dim(s.dim())?;
            let f = SubdivisionFunctor::build(&s)?;
            let rep = f.functoriality_report();
            let mut v = serde_json::to_value(serial::functor_to_json(&f)).expect("serialises");
            v["functoriality"] = json!({
                "chains_checked": rep.chains_checked,
                "max_residual": rep.max_residual,
            });
            emit(cli, &v)?;
            Ok(rep.max_residual <= cli.eps)
        }
        Cmd::Extend {
            simplex,
            functor,
            target,
            guided,
        } => {
            let s = load_simplex(simplex)?;
            check_dim(s.dim())?;
            match (functor, target) {
                (FunctorArg::K0, TargetArg::K0nerve) => {
                    let mut eng = Engine::with_functor(&K0Nerve, &K0Functor, *guided);
                    let v = eng.bar_f(&s, None)?;
                    write_trace(cli, eng.trace())?;
                    emit(cli, &serial::k0_to_json(&v))?;
                }
                (FunctorArg::Gamma, TargetArg::Ncorr) => {
                    let mut eng = Engine::with_functor(&NCorrOracle, &GammaFunctor, *guided);
                    let pref = guided.then_some(&s);
                    let v = eng.bar_f(&s, pref)?;
                    write_trace(cli, eng.trace())?;
                    let mut out = serde_json::to_value(serial::simplex_to_json(&v)).expect("serialises");
                    out["distance_to_input"] = json!(v.dist(&s));
                    emit(cli, &out)?;
                }
                _ => return Err(usage("the k0 functor lands in k0nerve and gamma lands in ncorr")),
            }
            Ok(true)
        }
        Cmd::Selftest { quick, suite } => {
            let cfg = selftest::Config {
                seed: cli.seed,
                eps: cli.eps,
                quick: *quick,
            };
            let report = match suite {
                Some(id) => {
                    if !(1..=selftest::SUITES.len()).contains(id) {
                        return Err(usage(format!("suites run from 1 to {}", selftest::SUITES.len())));
                    }
                    let (rec, cases) = selftest::run_suite(*id, &cfg);
                    selftest::Report {
                        seed: cfg.seed,
                        eps: cfg.eps,
                        quick: cfg.quick,
                        passed: rec.passed,
                        suites: vec![rec],
                        cases,
                    }
                }
                None => selftest::run_all(&cfg),
            };
            for s in &report.suites {
                eprintln!(
                    "{} {:>2} {} ({} cases, {:.1} s)",
                    if s.passed { "PASS" } else { "FAIL" },
                    s.id,
                    s.suite,
                    s.cases,
                    s.time_ms / 1e3
                );
            }
            emit(cli, &report)?;
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if !(cli.eps.is_finite() && cli.eps > 0.0) {
        eprintln!("error: --eps must be a positive number");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
