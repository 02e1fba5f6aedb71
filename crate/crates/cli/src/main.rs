use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gurarii::chain::{certify, run_chain_with, transcript, ChainConfig, Mode};
use gurarii::exact::rational::parse;
use gurarii::exact::Caps;
use gurarii::json::{DistortionJson, MapJson, PushoutJson, SpaceJson, SubspaceJson};
use gurarii::maps::{extend_into_linf, extend_norm, is_eps_isometric};
use gurarii::pushout::{pushout, PushoutVariant};
use gurarii::suite::{self, SuiteReport};
use gurarii::{Error, PolyhedralSpace};

/// Exact computations with rational polyhedral norms.
#[derive(Parser)]
#[command(name = "gurarii", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a canonical space.
    Space {
        #[command(subcommand)]
        builder: SpaceBuilder,
    },
    /// Distortion of a map and whether it is an eps-isometry.
    EmbedCheck {
        map: PathBuf,
        #[arg(long)]
        eps: String,
        /// Require strict inequalities.
        #[arg(long)]
        strict: bool,
    },
    /// Amalgamate an isometric embedding `i: Z -> X` with `f: Z -> Y`.
    Pushout {
        i: PathBuf,
        f: PathBuf,
        #[arg(long)]
        eps: String,
        /// Only require `||f|| <= 1`.
        #[arg(long)]
        contraction: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extend a norm or a map from a subspace.
    Extend {
        #[command(subcommand)]
        what: ExtendCommand,
    },
    /// Run the chain builder, writing a JSON-lines transcript.
    Chain {
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, default_value_t = 3)]
        dim_cap: usize,
        #[arg(long, default_value_t = 6)]
        bit_cap: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Gurarii)]
        mode: ModeArg,
        /// Transcript path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-verify a chain transcript.
    Certify {
        transcript: PathBuf,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also write per-level coverage as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the property suites and print a pass/fail table.
    VerifySuite {
        /// Use the full case counts instead of a quick pass.
        #[arg(long)]
        full: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum SpaceBuilder {
    L1 {
        n: usize,
    },
    Linf {
        n: usize,
    },
    /// Canonicalize a space given by functionals or vertices.
    FromJson {
        path: PathBuf,
    },
}

#[derive(Subcommand)]
enum ExtendCommand {
    /// Extend a norm on `E` to its ambient space, eps-equivalently.
    Norm {
        #[arg(long)]
        subspace: PathBuf,
        /// The new norm on `E`, in the coordinates of its basis.
        #[arg(long)]
        norm: PathBuf,
        #[arg(long)]
        eps: String,
    },
    /// Extend `T: E -> linf(n)` to the ambient space of `E` with the same norm.
    Linf {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        subspace: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Gurarii,
    Lindenstrauss,
    Complemented,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Gurarii => Mode::Gurarii,
            ModeArg::Lindenstrauss => Mode::Lindenstrauss,
            ModeArg::Complemented => Mode::Complemented,
        }
    }
}

/// A failed check, as opposed to bad input.
#[derive(Debug)]
struct VerificationFailed(String);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for VerificationFailed {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<VerificationFailed>().is_some() {
        return 1;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::Resource { .. }) => 3,
        Some(Error::Verification(_)) => 1,
        _ => 2,
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| {
        anyhow!(
            "{}: malformed JSON at line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        )
    })
}

fn emit(value: &impl Serialize, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_eps(s: &str) -> Result<gurarii::Rational> {
    Ok(parse(s)?)
}

fn install_caps() -> Result<()> {
    let mut caps = Caps::default();
    let read = |name: &str| -> Result<Option<usize>> {
        match std::env::var(name) {
            Ok(v) => Ok(Some(v.parse().map_err(|_| {
                Error::Input(format!("{name} must be a count, got {v:?}"))
            })?)),
            Err(_) => Ok(None),
        }
    };
    if let Some(d) = read("GURARII_MAX_DIM")? {
        caps.max_dim = d;
    }
    if let Some(v) = read("GURARII_MAX_VERTICES")? {
        caps.max_vertices = v;
    }
    Caps::install(caps);
    Ok(())
}

#[derive(Serialize)]
struct EmbedCheckOut {
    verdict: bool,
    eps: String,
    strict: bool,
    distortion: DistortionJson,
}

fn run(cli: Cli) -> Result<()> {
    install_caps()?;
    match cli.command {
        Command::Space { builder } => {
            let space = match builder {
                SpaceBuilder::L1 { n } => PolyhedralSpace::l1(n)?,
                SpaceBuilder::Linf { n } => PolyhedralSpace::linf(n)?,
                SpaceBuilder::FromJson { path } => read_json::<SpaceJson>(&path)?.to_space()?,
            };
            emit(&SpaceJson::from_space(&space), None)
        }
        Command::EmbedCheck { map, eps, strict } => {
            let f = read_json::<MapJson>(&map)?.to_map()?;
            let eps_q = parse_eps(&eps)?;
            let (verdict, report) = is_eps_isometric(&f, &eps_q, strict)?;
            emit(
                &EmbedCheckOut {
                    verdict,
                    eps,
                    strict,
                    distortion: DistortionJson::from_report(&report),
                },
                None,
            )?;
            if !verdict {
                bail!(VerificationFailed(format!(
                    "map is not an eps-isometry (eps* = {})",
                    report.eps_star
                )));
            }
            Ok(())
        }
        Command::Pushout {
            i,
            f,
            eps,
            contraction,
            out,
        } => {
            let i = read_json::<MapJson>(&i)?.to_map()?;
            let f = read_json::<MapJson>(&f)?.to_map()?;
            let variant = if contraction {
                PushoutVariant::Contraction
            } else {
                PushoutVariant::Standard
            };
            let p = pushout(&i, &f, &parse_eps(&eps)?, variant)?;
            emit(&PushoutJson::from_result(&p), out.as_deref())
        }
        Command::Extend { what } => match what {
            ExtendCommand::Norm {
                subspace,
                norm,
                eps,
            } => {
                let e = read_json::<SubspaceJson>(&subspace)?.to_subspace()?;
                let new_norm = read_json::<SpaceJson>(&norm)?.to_space()?;
                let ext = extend_norm(&e, &new_norm, &parse_eps(&eps)?)?;
                emit(&SpaceJson::from_space(&ext), None)
            }
            ExtendCommand::Linf { map, subspace } => {
                let t = read_json::<MapJson>(&map)?.to_map()?;
                let e = read_json::<SubspaceJson>(&subspace)?.to_subspace()?;
                emit(&MapJson::from_map(&extend_into_linf(&t, &e)?), None)
            }
        },
        Command::Chain {
            steps,
            dim_cap,
            bit_cap,
            seed,
            mode,
            out,
        } => {
            let config = ChainConfig {
                steps,
                dim_cap,
                bit_cap,
                seed,
                mode: mode.into(),
            };
            let mut sink: Box<dyn Write> = match &out {
                Some(p) => Box::new(
                    fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
                ),
                None => Box::new(std::io::stdout().lock()),
            };
            let run = run_chain_with(&config, |r| {
                writeln!(sink, "{}", r.to_line())
                    .and_then(|_| sink.flush())
                    .map_err(|e| Error::Input(format!("writing transcript: {e}")))
            })?;
            let applicable = run.certificates.iter().filter(|c| c.applicable).count();
            eprintln!(
                "{} steps, {} stages, final dimension {}, {} certificates ({applicable} applicable)",
                run.steps.len(),
                run.stages.len(),
                run.final_stage().dim(),
                run.certificates.len()
            );
            if let Some(a) = run.aborted {
                eprintln!("aborted after {} completed steps: {a}", run.steps.len());
                return Err(Error::Resource {
                    what: "chain run",
                    value: run.steps.len(),
                    limit: config.steps,
                }
                .into());
            }
            Ok(())
        }
        Command::Certify {
            transcript: path,
            report,
            csv,
        } => {
            let text =
                fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let run = transcript::replay(&text)?;
            let r = certify(&run);
            emit(&r, report.as_deref())?;
            if let Some(p) = csv {
                fs::write(&p, r.coverage_csv())
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            if !r.passed() {
                for f in &r.failures {
                    eprintln!("{f}");
                }
                bail!(VerificationFailed(format!(
                    "{} verification failures",
                    r.failures.len()
                )));
            }
            Ok(())
        }
        Command::VerifySuite { full, seed } => verify_suite(full, seed),
    }
}

type Suite = (&'static str, Box<dyn Fn(u64) -> SuiteReport>);

fn suites(full: bool) -> Vec<Suite> {
    let k = |quick: usize, all: usize| if full { all } else { quick };
    let (c1, c2, c3, c4, c5, c9) = (
        k(20, 200),
        k(5, 50),
        k(10, 100),
        k(10, 100),
        k(20, 500),
        k(10, 100),
    );
    let points = k(10, 50);
    let grid = k(100, 1000);
    vec![
        ("pushout", Box::new(move |s| suite::pushout_suite(c1, s))),
        (
            "pushout",
            Box::new(move |s| suite::quotient_oracle_suite(c2, points, s)),
        ),
        ("maps", Box::new(move |s| suite::linf_suite(c3, s))),
        (
            "maps",
            Box::new(move |s| suite::norm_extension_suite(c4, s)),
        ),
        (
            "exact-core",
            Box::new(move |s| suite::dd_roundtrip_suite(c5, grid, s)),
        ),
        ("pushout", Box::new(move |s| suite::mediate_suite(c9, s))),
        (
            "chain",
            Box::new(|s| suite::chain_suite(Mode::Gurarii, 50, &[0, s])),
        ),
        (
            "chain",
            Box::new(|s| suite::chain_suite(Mode::Lindenstrauss, 50, &[0, s])),
        ),
        (
            "chain",
            Box::new(|s| suite::chain_suite(Mode::Complemented, 50, &[0, s])),
        ),
    ]
}

fn verify_suite(full: bool, seed: u64) -> Result<()> {
    println!(
        "{:<12} {:<36} {:>6} {:>9} {:>8}  result",
        "module", "suite", "cases", "failures", "time"
    );
    let mut failed = 0;
    for (module, run) in suites(full) {
        let start = Instant::now();
        let r = run(seed);
        let ok = r.passed();
        println!(
            "{module:<12} {:<36} {:>6} {:>9} {:>7.1}s  {}",
            r.name,
            r.cases,
            r.failures.len(),
            start.elapsed().as_secs_f64(),
            if ok { "PASS" } else { "FAIL" }
        );
        for f in r.failures.iter().take(5) {
            println!("    {f}");
        }
        failed += usize::from(!ok);
    }
    if failed > 0 {
        bail!(VerificationFailed(format!("{failed} suites failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
