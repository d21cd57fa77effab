use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use upbbell::bell::{gyni_inequality, inequality_from_set, BellInequality};
use upbbell::bounds::{
    align_with_set, bounds_report, classical_bound, ns::ns_bound, product_epsilon, quantum_spectral_bound,
    seesaw_quantum_bound, upb_witness, BoundsOptions, SeesawOptions,
};
use upbbell::families::{default_e, gyni_upb, recursive_extend, shifts_upb, LocalPairChoice};
use upbbell::linalg::{span_projector, Ket, C64};
use upbbell::pipeline::{pipeline, PipelineOptions};
use upbbell::product_set::{check_property_p, gram_orthogonality_check, ProductVectorSet};
use upbbell::ratio::{self, Rational};
use upbbell::tightness::{is_tight_with, TightnessOptions, DEFAULT_TIGHTNESS_VERTICES};
use upbbell::upb::{unextendible_general, unextendible_qubit};
use upbbell::Error;

const CHECK_FAILED: u8 = 1;
const USAGE: u8 = 2;
const CAPACITY: u8 = 3;

#[derive(Parser)]
#[command(name = "upbbell", version, about = "Bell inequalities from unextendible product bases")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Pretty, global = true)]
    format: Format,
    /// Human-readable summary on standard error.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Pretty,
    Compact,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a product-vector set.
    Gen {
        #[arg(value_enum)]
        family: Family,
        #[arg(long)]
        n: Option<usize>,
        /// Local vector e as RE,IM,RE,IM.
        #[arg(long, allow_hyphen_values = true)]
        e: Option<String>,
        #[arg(short = 'o', long = "output", value_name = "FILE")]
        o: Option<PathBuf>,
    },
    /// Add one party to a set.
    Extend {
        #[arg(short = 'i', long = "input", value_name = "FILE")]
        i: PathBuf,
        #[arg(short = 'o', long = "output", value_name = "FILE")]
        o: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        e: Option<String>,
    },
    /// Orthogonality, property (P) or unextendibility of a set.
    Check {
        #[arg(value_enum)]
        what: CheckKind,
        #[arg(short = 'i', long = "input", value_name = "FILE")]
        i: PathBuf,
    },
    /// Build a Bell inequality.
    Ineq {
        #[command(subcommand)]
        source: IneqSource,
    },
    /// Classical, quantum and no-signalling bounds.
    Bounds {
        #[arg(value_enum)]
        which: BoundKind,
        #[arg(short = 'i', long = "input", value_name = "FILE")]
        i: PathBuf,
        #[arg(long)]
        set: Option<PathBuf>,
        #[command(flatten)]
        seeded: Seeded,
    },
    /// Entanglement witness built from an unextendible set.
    Witness {
        #[arg(short = 'i', long = "input", value_name = "FILE")]
        i: PathBuf,
        #[command(flatten)]
        seeded: Seeded,
        /// Include W and rho.
        #[arg(long)]
        matrices: bool,
    },
    /// Face dimension of an inequality on the local polytope.
    Tight {
        #[arg(short = 'i', long = "input", value_name = "FILE")]
        i: PathBuf,
        /// Allow scenarios beyond six binary parties.
        #[arg(long)]
        extended: bool,
        #[arg(long)]
        dump_vertices: bool,
    },
    /// Run every stage on the n-party family.
    Pipeline {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        seeded: Seeded,
    },
}

#[derive(Args)]
struct Seeded {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restarts for the heuristic searches.
    #[arg(long)]
    restarts: Option<usize>,
}

impl Seeded {
    fn bounds_options(&self) -> BoundsOptions {
        let mut o = BoundsOptions {
            seed: self.seed,
            ..BoundsOptions::default()
        };
        if let Some(r) = self.restarts {
            o.seesaw_restarts = r;
            o.epsilon_restarts = r;
        }
        o
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Shifts,
    Gyni,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckKind {
    Orth,
    PropertyP,
    Upb,
}

#[derive(Subcommand)]
enum IneqSource {
    /// Inequality read off a set with property (P).
    FromSet {
        #[arg(short = 'i', long = "input", value_name = "FILE")]
        i: PathBuf,
        /// Comma-separated weights, one per member.
        #[arg(long)]
        weights: Option<String>,
        #[arg(short = 'o', long = "output", value_name = "FILE")]
        o: Option<PathBuf>,
    },
    /// Guess-your-neighbour-input inequality.
    Gyni {
        #[arg(long)]
        n: usize,
        #[arg(short = 'o', long = "output", value_name = "FILE")]
        o: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundKind {
    Classical,
    Spectral,
    Seesaw,
    Ns,
    All,
}

enum Failure {
    Check(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(e.into())
    }
}

type Outcome = Result<(), Failure>;

struct Out {
    format: Format,
    verbose: bool,
}

impl Out {
    fn render<T: Serialize>(&self, v: &T) -> Result<String, Failure> {
        let mut s = match self.format {
            Format::Pretty => serde_json::to_string_pretty(v)?,
            Format::Compact => serde_json::to_string(v)?,
        };
        s.push('\n');
        Ok(s)
    }

    fn emit<T: Serialize>(&self, v: &T, file: Option<&Path>) -> Outcome {
        let s = self.render(v)?;
        match file {
            Some(p) => fs::write(p, s).map_err(|e| Failure::Lib(e.into())),
            None => {
                print!("{s}");
                Ok(())
            }
        }
    }

    fn note(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn read_set(p: &Path) -> Result<ProductVectorSet, Failure> {
    Ok(ProductVectorSet::from_json(&fs::read_to_string(p).map_err(Error::from)?)?)
}

fn read_ineq(p: &Path) -> Result<BellInequality, Failure> {
    Ok(BellInequality::from_json(&fs::read_to_string(p).map_err(Error::from)?)?)
}

fn parse_e(s: &str) -> Result<Ket, Failure> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Error::Argument(format!("--e: {e}")))?;
    if parts.len() != 4 {
        return Err(Error::Argument("--e expects RE,IM,RE,IM".into()).into());
    }
    Ok(Ket::normalized(vec![C64::new(parts[0], parts[1]), C64::new(parts[2], parts[3])])?)
}

fn with_classical(ineq: BellInequality) -> Result<BellInequality, Failure> {
    let c = classical_bound(&ineq)?.value;
    Ok(ineq.with_classical_bound(c))
}

fn run(cli: Cli) -> Outcome {
    let out = Out {
        format: cli.format,
        verbose: cli.verbose,
    };
    match cli.command {
        Command::Gen { family, n, e, o } => {
            let e = e.as_deref().map(parse_e).transpose()?;
            let set = match family {
                Family::Shifts => {
                    if n.is_some_and(|n| n != 3) {
                        return Err(Error::Argument("the Shifts set has three parties".into()).into());
                    }
                    let choice = e.map(|e| LocalPairChoice::uniform(3, e)).transpose()?;
                    shifts_upb(choice.as_ref())?
                }
                Family::Gyni => {
                    let n = n.ok_or_else(|| Error::Argument("gen gyni needs --n".into()))?;
                    let choice = match e {
                        Some(e) => LocalPairChoice::uniform(n, e)?,
                        None => LocalPairChoice::default_for(n),
                    };
                    gyni_upb(n, &choice)?
                }
            };
            out.note(format!("{} members, {} parties", set.len(), set.n()));
            out.emit(&set, o.as_deref())
        }
        Command::Extend { i, o, e } => {
            let set = read_set(&i)?;
            let e = e.as_deref().map(parse_e).transpose()?.unwrap_or_else(default_e);
            let ext = recursive_extend(&set, &e)?;
            out.note(format!("{} -> {} members", set.len(), ext.len()));
            out.emit(&ext, o.as_deref())
        }
        Command::Check { what, i } => {
            let set = read_set(&i)?;
            match what {
                CheckKind::Orth => {
                    let r = gram_orthogonality_check(&set);
                    out.emit(&r, None)?;
                    if !r.orthogonal {
                        return Err(Failure::Check(format!("largest overlap {:e}", r.worst_overlap)));
                    }
                }
                CheckKind::PropertyP => {
                    let p = check_property_p(&set);
                    let summary = upbbell::pipeline::PropertyPSummary::from(&p);
                    out.emit(&summary, None)?;
                    if !p.holds() {
                        return Err(Failure::Check("property (P) violated".into()));
                    }
                }
                CheckKind::Upb => {
                    let orth = gram_orthogonality_check(&set);
                    let r = if set.dims().iter().all(|&d| d == 2) {
                        unextendible_qubit(&set)?
                    } else {
                        unextendible_general(&set)?
                    };
                    out.emit(&r, None)?;
                    if !orth.orthogonal {
                        return Err(Failure::Check("set is not orthogonal".into()));
                    }
                    if !r.is_upb() {
                        return Err(Failure::Check(format!("not a UPB: {:?}", r.status)));
                    }
                }
            }
            Ok(())
        }
        Command::Ineq { source } => {
            let (ineq, o) = match source {
                IneqSource::FromSet { i, weights, o } => {
                    let set = read_set(&i)?;
                    let p = check_property_p(&set);
                    let Some(part) = p.partition() else {
                        return Err(Failure::Check("property (P) violated".into()));
                    };
                    let w: Vec<Rational> = match weights {
                        Some(s) => s.split(',').map(|t| ratio::parse(t.trim())).collect::<Result<_, _>>()?,
                        None => vec![Rational::from_integer(1.into()); set.len()],
                    };
                    (inequality_from_set(&set, part, &w)?, o)
                }
                IneqSource::Gyni { n, o } => (gyni_inequality(n)?, o),
            };
            let ineq = with_classical(ineq)?;
            out.note(format!("{} terms, classical bound {}", ineq.terms.len(), ratio::format(ineq.classical_bound.as_ref().expect("just set"))));
            out.emit(&ineq, o.as_deref())
        }
        Command::Bounds { which, i, set, seeded } => {
            let ineq = read_ineq(&i)?;
            let set = set.as_deref().map(read_set).transpose()?;
            let opts = seeded.bounds_options();
            match which {
                BoundKind::Classical => out.emit(&classical_bound(&ineq)?, None),
                BoundKind::Ns => out.emit(&ns_bound(&ineq)?, None),
                BoundKind::Spectral => {
                    let set = set.ok_or_else(|| Error::Argument("spectral bound needs --set".into()))?;
                    let (aligned, proj) = align_with_set(&ineq, &set)?;
                    let v = quantum_spectral_bound(&aligned, &proj)?;
                    out.emit(&json!({ "beta_q_spectral": v }), None)
                }
                BoundKind::Seesaw => {
                    let dims = match &set {
                        Some(s) => s.dims().to_vec(),
                        None => ineq.scenario.local_dims(),
                    };
                    let mut so = SeesawOptions::new(dims, opts.seed);
                    so.restarts = opts.seesaw_restarts;
                    let r = seesaw_quantum_bound(&ineq, &so)?;
                    out.emit(&json!({ "seed": opts.seed, "seesaw": r }), None)
                }
                BoundKind::All => {
                    let r = bounds_report(&ineq, set.as_ref(), &opts)?;
                    out.note(format!("sandwich holds: {}", r.sandwich_holds()));
                    out.emit(&json!({ "seed": opts.seed, "bounds": r }), None)
                }
            }
        }
        Command::Witness { i, seeded, matrices } => {
            let set = read_set(&i)?;
            let opts = seeded.bounds_options();
            let pi = span_projector(&set.global_kets())?;
            let eps = product_epsilon(&pi, set.dims(), opts.epsilon_restarts, opts.seed)?;
            let mut r = upb_witness(&set, eps.value)?;
            if !matrices {
                r = r.without_matrices();
            }
            out.note(format!("epsilon {} (restart search), Tr(BW) {}", eps.value, r.trace_bw));
            out.emit(&json!({ "seed": opts.seed, "witness": r }), None)
        }
        Command::Tight {
            i,
            extended,
            dump_vertices,
        } => {
            let ineq = read_ineq(&i)?;
            if extended && ineq.scenario.strategy_count() > DEFAULT_TIGHTNESS_VERTICES {
                eprintln!(
                    "warning: {} vertices exceeds the default {}; this may take a long time",
                    ineq.scenario.strategy_count(),
                    DEFAULT_TIGHTNESS_VERTICES
                );
            }
            let r = is_tight_with(&ineq, &TightnessOptions { extended, dump_vertices })?;
            out.note(format!("face {} of polytope {}", r.face_dim, r.polytope_dim));
            out.emit(&r, None)
        }
        Command::Pipeline { n, seeded } => {
            let opts = PipelineOptions {
                bounds: seeded.bounds_options(),
                tightness: TightnessOptions::default(),
            };
            let r = pipeline(n, &opts)?;
            if let Some(b) = r.bounds.done() {
                out.note(format!(
                    "beta_c {}, beta_n {}, seesaw {}",
                    ratio::format(&b.beta_c),
                    b.beta_n.as_ref().map_or("skipped".into(), ratio::format),
                    b.beta_q_seesaw
                ));
            }
            out.emit(&r, None)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("UPBBELL_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Argument(format!("UPBBELL_THREADS={v:?} is not a thread count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Internal(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    match configure_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(CHECK_FAILED)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Capacity { .. } => CAPACITY,
                Error::Argument(_) | Error::Format(_) | Error::Json(_) | Error::Io(_) => USAGE,
                Error::Precondition(_) | Error::Undecided(_) | Error::Internal(_) => CHECK_FAILED,
            })
        }
    }
}
