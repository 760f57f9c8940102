//! `cycle-integrals`: zero counts, bounds and experiments from the shell.
//!
//! Every JSON output is an envelope `{"config": ..., "report": ...}` so a run
//! can be reproduced from its own output. Exit codes: 0 on success, 2 when an
//! input or certificate precondition fails, 3 when the numerics could not
//! certify a result.

mod plot;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cycle_integrals::counting::{
    classify_alien, count_infinitesimal_zeros, count_tangential_zeros, default_schedule, run_sharpness_experiment,
    ExperimentKind, ExperimentSpec,
};
use cycle_integrals::cycle::{
    bound_infinitesimal, bound_simple, bound_tangential, certify, certify_deformed, Cycle, GenericityCertificate,
};
use cycle_integrals::exec::ExecMode;
use cycle_integrals::fiber::{monodromy, monodromy_with_basepoint, orbit_rank, FiberMap};
use cycle_integrals::melnikov::{
    brieskorn_dimension, brieskorn_generators, design_g_with_zeros, reduce_deformation, InstanceFile, RationalField,
};
use cycle_integrals::oracle::SolverConfig;
use cycle_integrals::poly::{format_rational, parse_rational, RatPoly};
use cycle_integrals::precision::{Precision, C64};
use cycle_integrals::report::{to_json, Cx};
use cycle_integrals::Error;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

const PRECISION_ENV: &str = "CYCLE_INTEGRALS_PRECISION_BITS";

#[derive(Parser, Debug)]
#[command(name = "cycle-integrals", version, about = "Zero counting for abelian integrals over zero-cycles")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Write the output here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Seed for every random choice (overrides the instance file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// 53 for double, anything larger for double-double sampling.
    #[arg(long, global = true)]
    precision_bits: Option<u32>,
    /// JSON file with solver settings; unknown keys are rejected.
    #[arg(long, global = true)]
    solver_config: Option<PathBuf>,
    #[arg(long, global = true)]
    tol_fit: Option<f64>,
    #[arg(long, global = true)]
    tol_at_critical: Option<f64>,
    #[arg(long, global = true)]
    tol_cluster: Option<f64>,
    #[arg(long, global = true)]
    match_rel: Option<f64>,
    #[arg(long, global = true)]
    degree_cap: Option<usize>,
    /// Disable automatic escalation to double-double on a rejected fit.
    #[arg(long, global = true)]
    no_escalate: bool,
    /// Run every job on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
enum Command {
    /// Count regular zeros of the abelian integral of `g`.
    Tangential(InstanceArgs),
    /// Count regular zeros of the displacement of `f + εg`.
    Infinitesimal {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Overrides the instance's ε.
        #[arg(long)]
        epsilon: Option<String>,
    },
    /// Split displacement zeros into regular and alien families.
    Alien {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Strictly decreasing, comma separated, e.g. `1/50,1/100,1/200`.
        #[arg(long)]
        schedule: Option<String>,
    },
    /// Closed-form bounds for degrees `m` and `n`.
    Bounds {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
    },
    /// Symmetry and regularity-at-infinity certificate of a cycle.
    CertifyCycle {
        /// Weights as a JSON array, e.g. `[1,-1,0]`.
        #[arg(long)]
        cycle: String,
        #[arg(long)]
        n: usize,
        /// Use the test for the deformed problem with `n > m`.
        #[arg(long)]
        deformed: bool,
    },
    /// Subtract the powers of `f` from `g`.
    Reduce {
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
    },
    /// Monodromy generators of `f`, and the orbit rank of a cycle.
    Monodromy {
        #[arg(long)]
        f: String,
        #[arg(long)]
        cycle: Option<String>,
        /// Basepoint as `re,im`.
        #[arg(long, allow_hyphen_values = true)]
        basepoint: Option<String>,
    },
    /// Dimension and generators of the Brieskorn module.
    Brieskorn {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// Print the generators for this `f` (degree `m`).
        #[arg(long)]
        f: Option<String>,
    },
    /// A deformation whose abelian integral vanishes at given points.
    DesignG {
        #[arg(long)]
        f: String,
        #[arg(long)]
        cycle: String,
        #[arg(long)]
        n: usize,
        /// Targets as `re,im;re,im;...`.
        #[arg(long, allow_hyphen_values = true)]
        targets: String,
    },
    /// Seeded random sharpness suite.
    Experiment {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Use the simple cycle `(1,-1,0,...)`.
        #[arg(long)]
        simple: bool,
        #[arg(long, default_value = "1/100")]
        epsilon: String,
    },
    /// CSV point sets from a saved report.
    PlotData {
        #[arg(long)]
        report: PathBuf,
        /// Also emit excluded and unresolved points.
        #[arg(long)]
        all: bool,
    },
}

#[derive(Args, Debug, Clone, Serialize)]
struct InstanceArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Fail with exit code 2 unless the cycle's certificate passes.
    #[arg(long)]
    require_generic: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum Kind {
    Tangential,
    Infinitesimal,
    Alien,
}

impl From<Kind> for ExperimentKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Tangential => ExperimentKind::Tangential,
            Kind::Infinitesimal => ExperimentKind::Infinitesimal,
            Kind::Alien => ExperimentKind::Alien,
        }
    }
}

/// The fully resolved settings of a run, embedded in its output.
#[derive(Debug, Serialize)]
struct RunConfig {
    #[serde(flatten)]
    command: Command,
    output_path: Option<PathBuf>,
    seed: Option<u64>,
    precision_bits: u32,
    solver: SolverConfig,
}

enum Output {
    Json(Value),
    Text(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                if let Some(hint) = hint(&e) {
                    eprintln!("hint: {hint}");
                }
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn hint(e: &Error) -> Option<&'static str> {
    match e {
        Error::NonConvergence { .. } | Error::MatchingAmbiguous(_) | Error::IdentityViolation(_) => {
            Some("rerun with --precision-bits 106")
        }
        Error::BranchMatchingAmbiguous(_) => Some("try a schedule with smaller ε"),
        _ => None,
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let instance = match &cli.command {
        Command::Tangential(a) | Command::Infinitesimal { instance: a, .. } | Command::Alien { instance: a, .. } => {
            Some(read_instance(&a.instance)?)
        }
        _ => None,
    };
    let bits = resolve_precision(cli.global.precision_bits, instance.as_ref().and_then(|i| i.precision_bits))?;
    let solver = solver_config(&cli.global, bits)?;
    let seed = cli.global.seed.or(instance.as_ref().and_then(|i| i.seed));
    let config = RunConfig {
        command: cli.command.clone(),
        output_path: cli.global.output.clone(),
        seed,
        precision_bits: bits,
        solver,
    };
    let out = execute(&cli.command, instance.as_ref(), &config)?;
    let text = match out {
        Output::Json(report) => to_json(&json!({ "config": config, "report": report }))?,
        Output::Text(s) => s,
    };
    match &cli.global.output {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Precondition(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Flag, then environment, then instance file, then double precision.
fn resolve_precision(flag: Option<u32>, file: Option<u32>) -> Result<u32, Error> {
    let env = match std::env::var(PRECISION_ENV) {
        Ok(s) => Some(
            s.trim()
                .parse::<u32>()
                .map_err(|_| Error::Parse(format!("{PRECISION_ENV}={s:?} is not a bit count")))?,
        ),
        Err(_) => None,
    };
    let bits = flag.or(env).or(file).unwrap_or(53);
    Ok(Precision::from_bits(bits).bits())
}

fn solver_config(g: &Global, bits: u32) -> Result<SolverConfig, Error> {
    let mut cfg = match &g.solver_config {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?,
        None => SolverConfig::default(),
    };
    cfg.precision = Precision::from_bits(bits);
    if let Some(x) = g.tol_fit {
        cfg.tol_fit = x;
    }
    if let Some(x) = g.tol_at_critical {
        cfg.tol_at_critical = x;
    }
    if let Some(x) = g.tol_cluster {
        cfg.tol_cluster = x;
    }
    if let Some(x) = g.match_rel {
        cfg.match_rel = x;
    }
    if let Some(x) = g.degree_cap {
        cfg.degree_cap = x;
    }
    if g.no_escalate {
        cfg.escalate = false;
    }
    if g.sequential {
        cfg.exec = ExecMode::Sequential;
    }
    for (name, v) in [
        ("tol_fit", cfg.tol_fit),
        ("tol_at_critical", cfg.tol_at_critical),
        ("tol_cluster", cfg.tol_cluster),
        ("match_rel", cfg.match_rel),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Precondition(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(cfg)
}

fn read(p: &PathBuf) -> Result<String, Error> {
    std::fs::read_to_string(p).map_err(|e| Error::Precondition(format!("cannot read {}: {e}", p.display())))
}

fn read_instance(p: &PathBuf) -> Result<InstanceFile, Error> {
    serde_json::from_str(&read(p)?).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, Error> {
    serde_json::to_value(v).map_err(|e| Error::Parse(e.to_string()))
}

fn parse_poly(s: &str) -> Result<RatPoly, Error> {
    let v: Vec<RationalField> =
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("polynomial {s:?}: {e}")))?;
    v.iter().map(RationalField::value).collect::<Result<Vec<_>, _>>().map(RatPoly::new)
}

fn parse_cycle(s: &str) -> Result<Cycle, Error> {
    let v: Vec<i64> = serde_json::from_str(s).map_err(|e| Error::Parse(format!("cycle {s:?}: {e}")))?;
    Cycle::new(v)
}

fn parse_complex(s: &str) -> Result<C64, Error> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |x: &str| {
        x.parse::<f64>()
            .map_err(|_| Error::Parse(format!("complex number {s:?}: expected re,im")))
    };
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => Err(Error::Parse(format!("complex number {s:?}: expected re,im"))),
    }
}

fn require_generic(cert: &GenericityCertificate, m: usize) -> Result<(), Error> {
    if cert.passes(m) {
        return Ok(());
    }
    if !cert.regular_at_infinity {
        let alpha = cert
            .failing_points
            .first()
            .map(|a| a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
            .unwrap_or_default();
        return Err(Error::Precondition(format!(
            "cycle not regular at infinity for n={}, failing α=({alpha})",
            cert.n
        )));
    }
    Err(Error::Precondition(format!(
        "cycle is not asymmetric (symmetry group of order {})",
        cert.symmetry_order
    )))
}

fn execute(cmd: &Command, file: Option<&InstanceFile>, config: &RunConfig) -> Result<Output, Error> {
    let cfg = &config.solver;
    let json = |v: Value| Ok(Output::Json(v));
    match cmd {
        Command::Tangential(a) => {
            let inst = file.expect("instance loaded").to_instance()?;
            let r = count_tangential_zeros(&inst, cfg)?;
            if a.require_generic {
                require_generic(&r.certificate, inst.m())?;
            }
            json(to_value(&r)?)
        }
        Command::Infinitesimal { instance: a, epsilon } => {
            let mut inst = file.expect("instance loaded").to_instance()?;
            if let Some(e) = epsilon {
                inst = inst.with_epsilon(Some(parse_rational(e)?));
            }
            let r = count_infinitesimal_zeros(&inst, cfg)?;
            if a.require_generic {
                require_generic(&r.certificate, inst.m())?;
            }
            json(to_value(&r)?)
        }
        Command::Alien { instance: a, schedule } => {
            let inst = file.expect("instance loaded").to_instance()?;
            let schedule = match schedule {
                Some(s) => s.split(',').map(|x| parse_rational(x.trim())).collect::<Result<Vec<_>, _>>()?,
                None => default_schedule(),
            };
            if a.require_generic {
                let n = inst.n();
                let cert = if n > inst.m() {
                    certify_deformed(&inst.cycle, n)?
                } else {
                    certify(&inst.cycle, n)?
                };
                require_generic(&cert, inst.m())?;
            }
            json(to_value(&classify_alien(&inst, &schedule, cfg)?)?)
        }
        Command::Bounds { m, n } => {
            if *m < 2 || *n < 1 {
                return Err(Error::Precondition(format!("bounds need m >= 2 and n >= 1, got m={m}, n={n}")));
            }
            let simple = bound_simple(*m, *n).ok();
            json(json!({
                "m": m,
                "n": n,
                "tangential": bound_tangential(*m, *n),
                "infinitesimal": bound_infinitesimal(*m, *n),
                "simple": simple,
                "brieskorn_dimension": brieskorn_dimension(*m, *n),
            }))
        }
        Command::CertifyCycle { cycle, n, deformed } => {
            let c = parse_cycle(cycle)?;
            let cert = if *deformed { certify_deformed(&c, *n)? } else { certify(&c, *n)? };
            json(json!({ "passes": cert.passes(c.len()), "certificate": to_value(&cert)? }))
        }
        Command::Reduce { f, g } => {
            let (f, g) = (parse_poly(f)?, parse_poly(g)?);
            let r = reduce_deformation(&f, &g)?;
            json(json!({
                "reduced": r.reduced.to_strings(),
                "subtracted": r.subtracted.iter().map(|(a, k)| (format_rational(a), *k)).collect::<Vec<_>>(),
            }))
        }
        Command::Monodromy { f, cycle, basepoint } => {
            let f = parse_poly(f)?;
            let map = FiberMap::new(&f, &cfg.roots)?;
            let b = basepoint.as_deref().map(parse_complex).transpose()?;
            let rep = match b {
                Some(b) => monodromy_with_basepoint(&map, b)?,
                None => monodromy(&map)?,
            };
            let rank = match cycle {
                Some(c) => Some(to_value(&orbit_rank(&map, &parse_cycle(c)?, b)?)?),
                None => None,
            };
            json(json!({
                "monodromy": to_value(&rep)?,
                "transitive": rep.is_transitive(),
                "orbit_rank": rank,
            }))
        }
        Command::Brieskorn { m, n, f } => {
            if *m < 2 || *n < 1 {
                return Err(Error::Precondition(format!("need m >= 2 and n >= 1, got m={m}, n={n}")));
            }
            let generators = match f {
                Some(f) => {
                    let f = parse_poly(f)?;
                    if f.degree() != Some(*m) {
                        return Err(Error::Precondition(format!("f must have degree m={m}")));
                    }
                    let b = brieskorn_generators(&f, *n)?;
                    Some(json!({
                        "exponents": b.exponents,
                        "polynomials": b.generators.iter().map(RatPoly::to_strings).collect::<Vec<_>>(),
                    }))
                }
                None => None,
            };
            json(json!({ "m": m, "n": n, "dimension": brieskorn_dimension(*m, *n), "generators": generators }))
        }
        Command::DesignG { f, cycle, n, targets } => {
            let f = parse_poly(f)?;
            let c = parse_cycle(cycle)?;
            let targets = targets
                .split(';')
                .filter(|s| !s.trim().is_empty())
                .map(parse_complex)
                .collect::<Result<Vec<_>, _>>()?;
            let d = design_g_with_zeros(&f, &c, *n, &targets, None, &cfg.roots)?;
            json(json!({
                "g": d.g.coeffs().iter().map(|&z| Cx(z)).collect::<Vec<_>>(),
                "coefficients": d.coefficients.iter().map(|&z| Cx(z)).collect::<Vec<_>>(),
                "exponents": d.basis.exponents,
                "targets": targets.iter().map(|&z| Cx(z)).collect::<Vec<_>>(),
                "residuals": d.residuals,
            }))
        }
        Command::Experiment { m, n, kind, trials, simple, epsilon } => {
            let spec = ExperimentSpec {
                m: *m,
                n: *n,
                kind: (*kind).into(),
                trials: *trials,
                seed: config.seed.unwrap_or(0),
                simple: *simple,
                epsilon: epsilon.clone(),
            };
            json(to_value(&run_sharpness_experiment(&spec, cfg)?)?)
        }
        Command::PlotData { report, all } => {
            let v: Value = serde_json::from_str(&read(report)?)
                .map_err(|e| Error::MalformedReport(format!("{}: {e}", report.display())))?;
            plot::csv(&v, *all).map(Output::Text)
        }
    }
}
