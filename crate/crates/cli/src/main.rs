use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use ugsos::approx::{build_capped, build_step_poly_capped, StepPolynomial};
use ugsos::graph::{johnson_cayley_graph, johnson_graph, noisy_hypercube, shortcode_graph, spectral_decompose, SpectralData};
use ugsos::instance::{brute_force_opt, plant_instance};
use ugsos::johnson::{johnson_pipeline, subcube_expansion_claim, JohnsonParams, PipelineOptions};
use ugsos::potential::{claims_report, instance_graph, potential_report, ClaimsReport, PotentialReport, SseConstants};
use ugsos::rounding::{condition_and_round, derandomized_round, RoundingOutcome};
use ugsos::sos::{build_relaxation, io as pe_io, solve_sdp, validate, PseudoExpectation};
use ugsos::verify::{self, CriterionResult, Tier};
use ugsos::{json, Error, UgInstance, WeightedGraph};

#[derive(Parser)]
#[command(name = "ugsos", version, about = "Sum-of-squares rounding for affine unique games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a planted instance, or the bare graph when --k is absent.
    Gen(Config),
    /// Solve the relaxation, symmetrize and round.
    SolveRound(Config),
    /// Potentials, spectrum and partition bounds of a solved instance.
    Analyze(Config),
    /// Run the acceptance checks, or validate a dumped operator with --pe.
    Verify(Config),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Family {
    Hypercube,
    Shortcode,
    Johnson,
    Cayley,
    File,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TierArg {
    Quick,
    Full,
}

#[derive(Args, Clone, Debug)]
struct Config {
    #[arg(long, value_enum, default_value = "hypercube")]
    family: Family,
    /// Hypercube dimension or short-code degree.
    #[arg(long)]
    d: Option<usize>,
    /// Ground set size (johnson, cayley) or number of variables (shortcode).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    /// Noise rate (hypercube), step fraction (johnson, cayley) or walk length parameter (shortcode).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, default_value_t = 4)]
    degree: usize,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Solver tolerance (default 1e-7), or validation tolerance with --pe (default 1e-5).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Instance file for --family file.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "quick")]
    tier: TierArg,
    /// Criteria by number or name, comma separated.
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    /// solve-round: write the symmetrized operator here.
    #[arg(long)]
    pe_out: Option<PathBuf>,
    /// Dumped operator to validate instead of running the suite.
    #[arg(long)]
    pe: Option<PathBuf>,
}

impl Config {
    fn solver_tol(&self) -> f64 {
        self.tol.unwrap_or(1e-7)
    }
}

enum Failure {
    Invariant(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn param(msg: impl Into<String>) -> Failure {
    Failure::Lib(Error::Parameter(msg.into()))
}

fn need<T>(v: Option<T>, flag: &str, family: Family) -> Result<T, Failure> {
    v.ok_or_else(|| param(format!("--{flag} is required for family {family:?}")))
}

fn build_graph(c: &Config) -> Result<WeightedGraph, Failure> {
    let f = c.family;
    Ok(match f {
        Family::Hypercube => noisy_hypercube(c.d.unwrap_or(3), c.alpha.unwrap_or(0.3))?,
        Family::Shortcode => {
            let d = c.d.unwrap_or(1);
            let t = c.alpha.map_or(1, |a| (1.0 + a * (1u64 << d) as f64).round() as usize);
            shortcode_graph(d, c.n.unwrap_or(2), t)?
        }
        Family::Johnson => johnson_graph(need(c.n, "n", f)?, need(c.l, "l", f)?, need(c.alpha, "alpha", f)?)?,
        Family::Cayley => johnson_cayley_graph(need(c.n, "n", f)?, need(c.l, "l", f)?, need(c.alpha, "alpha", f)?)?,
        Family::File => return Err(param("family file carries an instance, not a graph")),
    })
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Lib(Error::Io(format!("{}: {e}", path.display()))))
}

fn load_instance(c: &Config) -> Result<(UgInstance, Option<Vec<usize>>), Failure> {
    if c.family == Family::File {
        let path = need(c.input.as_ref(), "input", c.family)?;
        return Ok((UgInstance::from_json(&read(path)?)?, None));
    }
    let g = build_graph(c)?;
    let k = need(c.k, "k", c.family)?;
    let (inst, x) = plant_instance(&g, k, c.eps, &mut ChaCha8Rng::seed_from_u64(c.seed))?;
    Ok((inst, Some(x)))
}

fn emit(c: &Config, body: &str) -> Result<(), Failure> {
    match &c.out {
        Some(p) => std::fs::write(p, body).map_err(|e| Failure::Lib(Error::Io(format!("{}: {e}", p.display())))),
        None => {
            println!("{body}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct GenSummary {
    vertices: usize,
    edges: usize,
    planted_value: Option<f64>,
    planted: Option<Vec<usize>>,
    row_sum_error: Option<f64>,
}

fn cmd_gen(c: &Config) -> Result<(), Failure> {
    if c.k.is_none() {
        let g = build_graph(c)?;
        emit(c, &g.to_json())?;
        let s = GenSummary { vertices: g.num_vertices(), edges: g.edges().count(), planted_value: None, planted: None, row_sum_error: Some(g.row_sum_error()) };
        eprintln!("{}", json::to_string(&s));
        return Ok(());
    }
    let (inst, x) = load_instance(c)?;
    emit(c, &inst.to_json())?;
    let planted_value = x.as_ref().map(|x| inst.value(x)).transpose()?;
    let s = GenSummary { vertices: inst.num_vertices(), edges: inst.edges().len(), planted_value, planted: x, row_sum_error: None };
    eprintln!("{}", json::to_string(&s));
    Ok(())
}

/// Threshold polynomial that fits the operator degree: the requested `nu` when
/// achievable, otherwise the best capped fit.
fn potential_step(c: &Config) -> Result<(StepPolynomial, f64), Failure> {
    if c.degree < 4 {
        return Err(param("potentials need --degree >= 4"));
    }
    let cap = (c.degree - 2) / 2;
    if let Some(nu) = c.nu {
        if let Ok(p) = build_step_poly_capped(c.beta, nu, nu, cap) {
            return Ok((p, nu));
        }
    }
    let s = build_capped(c.beta, cap)?;
    Ok((s.poly, s.nu_eff))
}

#[derive(Serialize)]
struct Potentials {
    nu_requested: Option<f64>,
    nu_effective: f64,
    report: PotentialReport,
}

#[derive(Serialize)]
struct SolveReport {
    family: String,
    vertices: usize,
    k: usize,
    degree: usize,
    sdp_value: f64,
    brute_force: Option<f64>,
    potentials: Option<Potentials>,
    condition_and_round: Option<RoundingOutcome>,
    derandomized: RoundingOutcome,
    rounded_value: f64,
    seconds: f64,
}

const REPORT_BRUTE_CAP: u128 = 1_000_000;

fn solve_symmetrized(inst: &UgInstance, c: &Config) -> Result<(f64, PseudoExpectation), Failure> {
    let sol = solve_sdp(&build_relaxation(inst, c.degree)?, c.solver_tol())?;
    Ok((sol.value, sol.pe.symmetrize()?))
}

fn potentials(pe: &PseudoExpectation, inst: &UgInstance, c: &Config) -> Result<Option<Potentials>, Failure> {
    if c.degree < 4 {
        return Ok(None);
    }
    let (p, nu) = potential_step(c)?;
    let report = potential_report(pe, &p, c.beta, nu, inst)?;
    Ok(Some(Potentials { nu_requested: c.nu, nu_effective: nu, report }))
}

fn cmd_solve_round(c: &Config) -> Result<(), Failure> {
    let start = Instant::now();
    let (inst, _) = load_instance(c)?;
    let brute = brute_force_opt(&inst, REPORT_BRUTE_CAP).ok().map(|b| b.1);
    let (sdp_value, pot, cr, derand) = if c.family == Family::Johnson {
        let params = JohnsonParams::new(c.n.unwrap_or(0), c.l.unwrap_or(0), c.alpha.unwrap_or(0.0))?;
        let out = johnson_pipeline(&inst, &params, c.eps, &PipelineOptions { degree: c.degree, tol: c.solver_tol(), r: None })?;
        (out.sdp_value, None, None, out.rounding)
    } else {
        let (value, pe) = solve_symmetrized(&inst, c)?;
        if let Some(p) = &c.pe_out {
            std::fs::write(p, pe_io::dump(&pe)).map_err(|e| Failure::Lib(Error::Io(format!("{}: {e}", p.display()))))?;
        }
        let pot = potentials(&pe, &inst, c)?;
        let cr = if c.degree >= 4 { Some(condition_and_round(&pe, &inst, c.seed)?) } else { None };
        (value, pot, cr, derandomized_round(&pe, &inst, None)?)
    };
    let rounded_value = inst.value(&derand.full_assignment())?;
    let report = SolveReport {
        family: format!("{:?}", c.family).to_lowercase(),
        vertices: inst.num_vertices(),
        k: inst.alphabet_size(),
        degree: c.degree,
        sdp_value,
        brute_force: brute,
        potentials: pot,
        condition_and_round: cr,
        derandomized: derand,
        rounded_value,
        seconds: start.elapsed().as_secs_f64(),
    };
    emit(c, &json::to_string_pretty(&report))
}

#[derive(Serialize)]
struct AnalyzeReport {
    sdp_value: f64,
    potentials: Option<Potentials>,
    eigenvalues: Vec<f64>,
    spectral_gap: f64,
    claims: Option<ClaimsReport>,
    subcube_claim: Option<ugsos::johnson::SubcubeClaim>,
    seconds: f64,
}

fn cmd_analyze(c: &Config) -> Result<(), Failure> {
    let start = Instant::now();
    let (inst, _) = load_instance(c)?;
    let (sdp_value, pe) = solve_symmetrized(&inst, c)?;
    let pot = potentials(&pe, &inst, c)?;
    let spectral: SpectralData = spectral_decompose(&instance_graph(&inst)?)?;
    let sr = spectral.report();
    let claims = match (c.family, &pot) {
        (Family::Hypercube, Some(p)) if c.eps > 0.0 => {
            let (poly, _) = potential_step(c)?;
            let sse = SseConstants::from_hypercontractivity(0.6, 9.0, c.eps);
            Some(claims_report(&pe, &poly, c.beta, p.nu_effective, &inst, &sse, 1e-5)?)
        }
        _ => None,
    };
    let subcube_claim = match c.family {
        Family::Johnson => Some(subcube_expansion_claim(c.n.unwrap_or(0), c.l.unwrap_or(0), c.alpha.unwrap_or(0.0), c.eps)?),
        _ => None,
    };
    let report = AnalyzeReport {
        sdp_value,
        potentials: pot,
        eigenvalues: sr.eigenvalues,
        spectral_gap: sr.spectral_gap,
        claims,
        subcube_claim,
        seconds: start.elapsed().as_secs_f64(),
    };
    emit(c, &json::to_string_pretty(&report))
}

#[derive(Serialize)]
struct VerifyReport {
    tier: Tier,
    passed: bool,
    results: Vec<CriterionResult>,
}

fn cmd_verify(c: &Config) -> Result<(), Failure> {
    if let Some(path) = &c.pe {
        let pe = pe_io::load(&read(path)?)?;
        let rep = validate(&pe, c.tol.unwrap_or(1e-5));
        emit(c, &json::to_string_pretty(&rep))?;
        return if rep.passed {
            Ok(())
        } else {
            Err(Failure::Invariant(format!("operator fails validation: minimum eigenvalue {:e}", rep.min_eigenvalue)))
        };
    }
    let mut only = Vec::new();
    for key in &c.only {
        only.push(verify::criterion_id(key).ok_or_else(|| param(format!("unknown criterion {key}")))?);
    }
    let tier = match c.tier {
        TierArg::Quick => Tier::Quick,
        TierArg::Full => Tier::Full,
    };
    let results = verify::run(tier, &only, |r| println!("{r}"));
    let passed = results.iter().all(|r| r.passed);
    if let Some(p) = &c.out {
        std::fs::write(p, json::to_string_pretty(&VerifyReport { tier, passed, results }))
            .map_err(|e| Failure::Lib(Error::Io(format!("{}: {e}", p.display()))))?;
    }
    if passed {
        Ok(())
    } else {
        Err(Failure::Invariant("acceptance checks failed".into()))
    }
}

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Invariant(_) => 2,
        Failure::Lib(Error::Size { .. }) => 4,
        Failure::Lib(Error::Parameter(_) | Error::Input(_) | Error::Io(_) | Error::Domain(_)) => 3,
        Failure::Lib(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("UGSOS_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let res = match &cli.command {
        Command::Gen(c) => cmd_gen(c),
        Command::SolveRound(c) => cmd_solve_round(c),
        Command::Analyze(c) => cmd_analyze(c),
        Command::Verify(c) => cmd_verify(c),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Invariant(m) => eprintln!("error: {m}"),
                Failure::Lib(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(exit_code(&f))
        }
    }
}
