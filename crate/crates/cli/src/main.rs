use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use reldom::cusped::{auto_depth, CuspedSpace, Vertex};
use reldom::gallery;
use reldom::group::{Element, GroupSpec};
use reldom::path::{normalize_excursions, project, relative_length_check, reparametrize, verify_metric_quasigeodesic};
use reldom::report::emit;
use reldom::splitting::{self, Analysis, AxiomConstants, MatrixSequence};
use reldom::verifier::{check_dominated, Representation, Status, VerifierConfig, SUBSPACE_TOL};

const EXIT_VIOLATION: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "reldom", version, about = "Relative domination checks, cusped spaces and dominated splittings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cusped space of a group with peripheral subgroups.
    #[command(subcommand)]
    Cusped(CuspedCmd),
    /// Relative domination of a representation.
    #[command(subcommand)]
    Check(CheckCmd),
    /// Dominated splittings of matrix sequences.
    #[command(subcommand)]
    Split(SplitCmd),
    /// Shipped example fixtures.
    #[command(subcommand)]
    Examples(ExamplesCmd),
    /// Numerical self-tests.
    #[command(subcommand)]
    Linalg(LinalgCmd),
}

#[derive(Args)]
struct Common {
    /// Write JSON here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct Space {
    #[arg(long)]
    group: PathBuf,
    #[arg(long, default_value_t = 8)]
    radius: u32,
    /// Horoball depth; defaults to the radius.
    #[arg(long)]
    depth: Option<u32>,
}

#[derive(Subcommand)]
enum CuspedCmd {
    /// Ball statistics around the identity.
    Build {
        #[command(flatten)]
        space: Space,
        #[command(flatten)]
        common: Common,
    },
    /// Cusped distance between two words.
    Dist {
        #[command(flatten)]
        space: Space,
        #[arg(long, default_value = "1")]
        from: String,
        #[arg(long)]
        to: String,
        #[command(flatten)]
        common: Common,
    },
    /// A cusped geodesic from the identity, its projection and reparametrization.
    Geodesic {
        #[command(flatten)]
        space: Space,
        #[arg(long)]
        to: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum CheckCmd {
    Dominated {
        #[command(flatten)]
        space: Space,
        #[arg(long)]
        rep: PathBuf,
        #[arg(long, default_value_t = SUBSPACE_TOL)]
        tol: f64,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 200)]
        paths: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum SplitCmd {
    /// Fit constants, check the axioms and certify the splitting at `k`.
    Analyze {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        k: Option<i64>,
        /// Target error radius of the certificate.
        #[arg(long, default_value_t = 1e-6)]
        target: f64,
        /// Also check the block-product bounds over this many blocks.
        #[arg(long)]
        blocks: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum ExamplesCmd {
    Run {
        name: String,
        #[arg(long)]
        radius: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Names of the shipped examples.
    List {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum LinalgCmd {
    Selftest {
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[command(flatten)]
        common: Common,
    },
}

struct Outcome {
    status: Status,
}

fn load_group(path: &Path) -> Result<GroupSpec> {
    Ok(GroupSpec::load(path)?)
}

fn parse_element(spec: &GroupSpec, text: &str) -> Result<Element> {
    let t = text.trim();
    if t.is_empty() || t == "1" {
        return Ok(Element::identity());
    }
    Ok(spec.word(&spec.parse_word(t).with_context(|| format!("word `{t}`"))?))
}

fn depth_warning(space: &Space) -> Vec<String> {
    match space.depth {
        Some(d) if d != auto_depth(space.radius) => {
            let msg = format!("explicit depth {d} overrides the automatic depth {}", auto_depth(space.radius));
            eprintln!("warning: {msg}");
            vec![msg]
        }
        _ => Vec::new(),
    }
}

#[derive(Serialize)]
struct BuildReport {
    radius: u32,
    depth: u32,
    vertices: usize,
    group_elements: usize,
    vertices_by_level: Vec<usize>,
    sphere_sizes: Vec<usize>,
    certifies_group_distances: bool,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct DistReport {
    from: String,
    to: String,
    radius: u32,
    depth: u32,
    distance: u32,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct GeodesicReport {
    to: String,
    length: usize,
    cusped: Vec<Vertex>,
    projected: reldom::path::RelativePath,
    reparametrized: Option<reldom::path::RelativePath>,
    quasigeodesic: Option<reldom::path::QuasigeodesicReport>,
    ratio: Option<reldom::path::RatioReport>,
    warnings: Vec<String>,
}

fn cusped(cmd: CuspedCmd) -> Result<Outcome> {
    match cmd {
        CuspedCmd::Build { space, common } => {
            let spec = load_group(&space.group)?;
            let warnings = depth_warning(&space);
            let cs = CuspedSpace::for_radius(&spec, space.radius, space.depth);
            let g = cs.ball(Vertex::identity(), space.radius);
            let mut by_level = vec![0; cs.depth as usize + 1];
            for v in g.vertices.iter() {
                by_level[v.level as usize] += 1;
            }
            let mut spheres = vec![0; space.radius as usize + 1];
            for (_, l) in g.group_elements() {
                spheres[l as usize] += 1;
            }
            let r = BuildReport {
                radius: space.radius,
                depth: cs.depth,
                vertices: g.len(),
                group_elements: g.group_elements().count(),
                vertices_by_level: by_level,
                sphere_sizes: spheres,
                certifies_group_distances: g.certifies_group_distances(),
                warnings,
            };
            emit("cusped-build", &r, common.json.as_deref())?;
            Ok(Outcome { status: Status::Pass })
        }
        CuspedCmd::Dist { space, from, to, common } => {
            let spec = load_group(&space.group)?;
            let warnings = depth_warning(&space);
            let cs = CuspedSpace::for_radius(&spec, space.radius, space.depth);
            let (x, y) = (parse_element(&spec, &from)?, parse_element(&spec, &to)?);
            let d = cs.distance(&Vertex::group(x), &Vertex::group(y), space.radius)?;
            let r = DistReport { from, to, radius: space.radius, depth: cs.depth, distance: d, warnings };
            emit("cusped-dist", &r, common.json.as_deref())?;
            Ok(Outcome { status: Status::Pass })
        }
        CuspedCmd::Geodesic { space, to, common } => {
            let spec = load_group(&space.group)?;
            let warnings = depth_warning(&space);
            let cs = CuspedSpace::for_radius(&spec, space.radius, space.depth);
            let g = cs.ball(Vertex::identity(), space.radius);
            let target = Vertex::group(parse_element(&spec, &to)?);
            let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
            let geo = g.random_geodesic(&cs, &target, &mut rng)?;
            let proj = project(&spec, &normalize_excursions(&spec, &geo)?)?.path;
            let (reparametrized, quasigeodesic, ratio) = match reparametrize(&proj) {
                Ok(rp) => {
                    let q = verify_metric_quasigeodesic(&spec, &rp, 6.0, 20.0, true, |x| Ok(g.length(x)?))?;
                    let r = relative_length_check(&spec, &rp, 0, rp.end(), |x| Ok(g.length(x)?))?;
                    (Some(rp), Some(q), Some(r))
                }
                Err(reldom::Error::WhollyPeripheral) => (None, None, None),
                Err(e) => return Err(e.into()),
            };
            let ok = quasigeodesic.as_ref().is_none_or(|q| q.passed()) && ratio.as_ref().is_none_or(|r| r.holds());
            let r = GeodesicReport { to, length: geo.len() - 1, cusped: geo, projected: proj, reparametrized, quasigeodesic, ratio, warnings };
            emit("cusped-geodesic", &r, common.json.as_deref())?;
            Ok(Outcome { status: if ok { Status::Pass } else { Status::Violation } })
        }
    }
}

fn check(cmd: CheckCmd) -> Result<Outcome> {
    let CheckCmd::Dominated { space, rep, tol, samples, paths, common } = cmd;
    if !(tol > 0.0) {
        anyhow::bail!(reldom::Error::Input(format!("tolerance must be positive, got {tol}")));
    }
    let spec = load_group(&space.group)?;
    let rep = Representation::load(&spec, &rep)?;
    let warnings = depth_warning(&space);
    let cfg = VerifierConfig {
        radius: space.radius,
        depth: space.depth,
        seed: common.seed,
        sample_budget: samples,
        path_budget: paths,
        tol,
        ..Default::default()
    };
    let mut r = check_dominated(&rep, &cfg)?;
    r.warnings.extend(warnings);
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    emit("check-dominated", &r, common.json.as_deref())?;
    Ok(Outcome { status: r.status })
}

#[derive(Serialize)]
struct SplitReport {
    window: (i64, i64),
    dim: usize,
    k: i64,
    constants: AxiomConstants,
    s_min: Option<f64>,
    axioms: splitting::AxiomReport,
    certificate: Option<splitting::SplittingCertificate>,
    duality: Option<splitting::DualityCheck>,
    blocks: Option<Vec<reldom::report::BoundReport>>,
    inconclusive: Option<String>,
}

fn split(cmd: SplitCmd) -> Result<Outcome> {
    let SplitCmd::Analyze { file, k, target, blocks, common } = cmd;
    let text = std::fs::read_to_string(&file).with_context(|| file.display().to_string())?;
    let seq = MatrixSequence::parse(&text).with_context(|| file.display().to_string())?;
    let a = Analysis::new(&seq)?;
    let k = k.unwrap_or(if seq.k_min() < 0 && seq.k_max() >= 0 { 0 } else { (seq.k_min() + seq.k_max() + 1) / 2 });
    let c = splitting::fit_constants(&a)?;
    let axioms = splitting::check_axioms(&a, &c);
    let mut inconclusive = None;
    let certificate = match splitting::compute_splitting(&a, &c, k, target) {
        Ok(cert) => Some(cert),
        Err(e @ reldom::Error::WindowTooShort { .. }) => {
            inconclusive = Some(e.to_string());
            None
        }
        Err(e) => return Err(e.into()),
    };
    let duality = if certificate.is_some() {
        let dual = seq.reversed_dual();
        let ad = Analysis::new(&dual)?;
        let cd = splitting::fit_constants(&ad)?;
        splitting::duality_check(&a, &c, &ad, &cd, k, target).ok()
    } else {
        None
    };
    let blocks = match blocks {
        Some(b) => Some(splitting::verify_block_bounds(&a, &c, splitting::choose_n(&c)?, k, b)?),
        None => None,
    };
    let violated = !axioms.passed()
        || certificate.as_ref().is_some_and(|c| !c.consistent())
        || duality.as_ref().is_some_and(|d| !d.holds)
        || blocks.as_ref().is_some_and(|b| b.iter().any(|r| r.violated(reldom::report::SLACK)));
    let status = if violated {
        Status::Violation
    } else if inconclusive.is_some() {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    let r = SplitReport {
        window: (seq.k_min(), seq.k_max()),
        dim: seq.dim(),
        k,
        s_min: splitting::s_min(&c).ok(),
        constants: c,
        axioms,
        certificate,
        duality,
        blocks,
        inconclusive,
    };
    emit("split-analyze", &r, common.json.as_deref())?;
    Ok(Outcome { status })
}

fn examples(cmd: ExamplesCmd) -> Result<Outcome> {
    match cmd {
        ExamplesCmd::Run { name, radius, common } => {
            let r = gallery::run_example(&name, radius, common.seed)?;
            emit("example", &r, common.json.as_deref())?;
            Ok(Outcome { status: r.status })
        }
        ExamplesCmd::List { common } => {
            emit("example-list", &gallery::EXAMPLES, common.json.as_deref())?;
            Ok(Outcome { status: Status::Pass })
        }
    }
}

fn linalg(cmd: LinalgCmd) -> Result<Outcome> {
    let LinalgCmd::Selftest { n, common } = cmd;
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let r = reldom::lemmas::selftest(&mut rng, n)?;
    emit("linalg-selftest", &r, common.json.as_deref())?;
    Ok(Outcome { status: if r.violations() == 0 { Status::Pass } else { Status::Violation } })
}

/// Input problems exit with 3, truncation and budget limits with 2.
fn error_code(e: &anyhow::Error) -> u8 {
    use reldom::Error as E;
    match e.downcast_ref::<E>() {
        Some(E::Truncation(_) | E::WindowTooShort { .. } | E::Disconnected { .. }) => EXIT_INCONCLUSIVE,
        Some(E::NotDominated(_)) => EXIT_VIOLATION,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = std::env::var("RELDOM_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: RELDOM_THREADS ignored: {e}");
        }
    }
    let started = std::time::Instant::now();
    let result = match cli.command {
        Command::Cusped(c) => cusped(c),
        Command::Check(c) => check(c),
        Command::Split(c) => split(c),
        Command::Examples(c) => examples(c),
        Command::Linalg(c) => linalg(c),
    };
    eprintln!("elapsed: {:.3}s", started.elapsed().as_secs_f64());
    match result {
        Ok(o) => match o.status {
            Status::Pass => ExitCode::SUCCESS,
            Status::Violation => ExitCode::from(EXIT_VIOLATION),
            Status::Inconclusive => ExitCode::from(EXIT_INCONCLUSIVE),
        },
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}
