//! The `opclass` command line: equivalence-class dumps, OED scans, exact
//! dimension-polynomial fits, exponential fits, restricted Heisenberg
//! evolution, gate quenches, and the dense exact-diagonalization oracle.
//!
//! Every subcommand is deterministic for a fixed config and seed; CSV output
//! carries a timestamped `# schema=1` header that `--no-meta` suppresses, so
//! reruns are byte-identical. Exit codes: 0 ok, 2 config error, 3 closure
//! budget exhausted, 4 numerical or consistency failure.

pub mod analysis;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::One;
use opclass::closure::{self, DEFAULT_BUDGET};
use opclass::config::{parse_graph_csv, parse_schedule_json, ModelConfig};
use opclass::dimpoly;
use opclass::dynamics::{
    heisenberg_expectation, uniform_grid, EvolveOptions, Method, ProductState, Trajectory,
};
use opclass::oracle;
use opclass::pauli::PauliString;
use opclass::quench::{quenched_evolution, TimedGate};
use opclass::{Error, Hamiltonian, Result};

/// Coupling seed used when no coupling source is given. Class structure is
/// insensitive to generic nonzero coupling values, so any fixed seed gives
/// representative OEDs.
const DEFAULT_COUPLING_SEED: u64 = 91;

#[derive(Debug, Parser)]
#[command(
    name = "opclass",
    version,
    about = "Equivalence classes of Pauli strings under Hamiltonian commutation",
    max_term_width = 100
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON model config file (alternative to the inline model flags)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write output to a file instead of stdout
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Output format; tables and dumps default to csv, fits to json
    #[arg(long, global = true, value_enum, value_name = "FMT")]
    format: Option<Format>,
    /// Closure budget in members; accepts scientific notation like 1e7
    #[arg(long, global = true, value_name = "N")]
    budget: Option<String>,
    /// Worker threads for scans and closures (default: all cores)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Drop the timestamped "# schema=1" header line from CSV output
    #[arg(long, global = true)]
    no_meta: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dump one equivalence class, or the full partition with --partition
    Class(ClassArgs),
    /// Tabulate OEDs across sizes and seed families
    Scan(ScanArgs),
    /// Exact rational polynomial through integer (L, count) points
    FitPoly(FitPolyArgs),
    /// Log-linear least squares through (L, count) points
    FitExp(FitExpArgs),
    /// Heisenberg evolution of an observable restricted to its class
    Evolve(EvolveArgs),
    /// Heisenberg evolution interrupted by a gate schedule
    Quench(QuenchArgs),
    /// Dense exact-diagonalization ground truth (small sizes)
    Oracle(OracleArgs),
}

/// Inline model description, the flag twin of the JSON config file.
#[derive(Debug, Args, Clone, Default)]
struct ModelArgs {
    /// Model family: xy, kitaev, or xyzz
    #[arg(long, value_name = "NAME")]
    model: Option<String>,
    /// Number of sites
    #[arg(long = "L", visible_alias = "n", value_name = "N")]
    num_sites: Option<u32>,
    /// Chain boundary: open or periodic
    #[arg(long, value_name = "KIND")]
    boundary: Option<String>,
    /// Uniform coupling for every bond
    #[arg(long, value_name = "J")]
    j: Option<f64>,
    /// Uniform transverse field (xy model, together with --j)
    #[arg(long, value_name = "H")]
    hz: Option<f64>,
    /// Random nonzero couplings as "lo,hi,seed"
    #[arg(long, value_name = "LO,HI,SEED")]
    random: Option<String>,
    /// Edge-list CSV file with "i,j,color,J" rows (kitaev model)
    #[arg(long, value_name = "FILE")]
    graph: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClassArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Seed string, token form "X1" / "X1 Z3" or compact "XZII"
    #[arg(long, value_name = "WORD")]
    seed: Option<String>,
    /// Partition all 4^L strings into classes instead of closing one seed
    #[arg(long)]
    partition: bool,
    /// Print the header line only, skipping the member list
    #[arg(long)]
    oed_only: bool,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Sizes to scan: "4..8" (inclusive) or "4,6,8"
    #[arg(long, value_name = "RANGE")]
    sizes: String,
    /// Comma list of seed words like Z1, families X*/Y*/Z* (one seed per
    /// site), or "parity" for the all-Z string
    #[arg(long, value_name = "LIST")]
    seeds: String,
}

#[derive(Debug, Args)]
struct FitPolyArgs {
    /// CSV of L,count rows (scan output also works); "-" reads stdin
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// Fit this exact degree instead of detecting the smallest one
    #[arg(long, value_name = "N")]
    degree: Option<usize>,
}

#[derive(Debug, Args)]
struct FitExpArgs {
    /// CSV of L,count rows (scan output also works); "-" reads stdin
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
}

#[derive(Debug, Args, Clone)]
struct EvolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Initially polarized sites, one trajectory per site
    #[arg(long, value_delimiter = ',', default_value = "1", value_name = "LIST")]
    sites: Vec<usize>,
    /// State of the polarized site: plus-x, minus-x, plus-y, minus-y, up,
    /// down, or a Bloch vector "bx,by,bz"; repeat per site or give one
    #[arg(long = "state", default_value = "plus-x", value_name = "SPEC")]
    states: Vec<String>,
    /// Observable word; '*' is replaced by the trajectory's site
    #[arg(long, default_value = "X*", value_name = "WORD")]
    observable: String,
    /// Final time
    #[arg(long, default_value_t = 10.0, value_name = "T")]
    t_max: f64,
    /// Sample spacing
    #[arg(long, default_value_t = 0.1, value_name = "DT")]
    dt: f64,
    /// Integrator: auto, expm, or rk4
    #[arg(long, default_value = "auto", value_name = "NAME")]
    method: String,
    /// Substep for the rk4 integrator
    #[arg(long, value_name = "H")]
    step: Option<f64>,
}

#[derive(Debug, Args)]
struct QuenchArgs {
    #[command(flatten)]
    evolve: EvolveArgs,
    /// Gate schedule JSON file
    #[arg(long, value_name = "FILE")]
    schedule: PathBuf,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    evolve: EvolveArgs,
    /// Optional gate schedule JSON file
    #[arg(long, value_name = "FILE")]
    schedule: Option<PathBuf>,
    /// Dump the seed's class via dense commutator projection
    #[arg(long)]
    project: bool,
    /// Seed string for --project
    #[arg(long, value_name = "WORD")]
    seed: Option<String>,
}

/// Rendered output plus the process exit code.
struct CmdOutput {
    text: String,
    code: i32,
}

impl CmdOutput {
    fn ok(text: String) -> Self {
        CmdOutput { text, code: 0 }
    }
}

/// Map library errors onto the documented exit codes.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::IncompleteClass { .. } => 3,
        Error::Consistency(_) | Error::Numerical(_) => 4,
        _ => 2,
    }
}

/// Parse argv, execute, write output. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.global.threads {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        if pool.is_err() {
            eprintln!("warning: thread pool already initialized, --threads ignored");
        }
    }
    let result = match &cli.command {
        Command::Class(a) => cmd_class(&cli.global, a),
        Command::Scan(a) => cmd_scan(&cli.global, a),
        Command::FitPoly(a) => cmd_fit_poly(&cli.global, a),
        Command::FitExp(a) => cmd_fit_exp(&cli.global, a),
        Command::Evolve(a) => cmd_evolve(&cli.global, a),
        Command::Quench(a) => cmd_quench(&cli.global, a),
        Command::Oracle(a) => cmd_oracle(&cli.global, a),
    };
    match result {
        Ok(out) => {
            if let Some(path) = &cli.global.out {
                if let Err(e) = fs::write(path, &out.text) {
                    eprintln!("error: {}: {e}", path.display());
                    return 2;
                }
            } else {
                print!("{}", out.text);
            }
            out.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::IncompleteClass { .. }) {
                eprintln!("hint: raise --budget, or use the oracle subcommand at small sizes");
            }
            exit_code(&e)
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| Error::Config(format!("stdin: {e}")))?;
        return Ok(text);
    }
    fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn parse_budget(s: &str) -> Result<usize> {
    if let Ok(v) = s.parse::<usize>() {
        if v > 0 {
            return Ok(v);
        }
    } else if let Ok(f) = s.parse::<f64>() {
        if f.is_finite() && f >= 1.0 && f < usize::MAX as f64 {
            return Ok(f.round() as usize);
        }
    }
    Err(Error::Config(format!("bad --budget value {s:?}")))
}

fn budget_of(g: &GlobalArgs) -> Result<usize> {
    match &g.budget {
        Some(s) => parse_budget(s),
        None => Ok(DEFAULT_BUDGET),
    }
}

fn meta_header(no_meta: bool) -> String {
    if no_meta {
        return String::new();
    }
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# schema=1 generated={now}\n")
}

fn json_text(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serialization");
    s.push('\n');
    s
}

fn rational_str(r: &num_rational::BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Resolve the model from --config or the inline flags (exactly one side).
fn load_model(g: &GlobalArgs, m: &ModelArgs) -> Result<ModelConfig> {
    let inline_used = m.model.is_some()
        || m.num_sites.is_some()
        || m.boundary.is_some()
        || m.j.is_some()
        || m.hz.is_some()
        || m.random.is_some()
        || m.graph.is_some();
    if let Some(path) = &g.config {
        if inline_used {
            return Err(Error::Config(
                "pass either --config or inline model flags, not both".into(),
            ));
        }
        return ModelConfig::from_json(&read_text(path)?);
    }
    inline_model(m, None)
}

/// Build a [`ModelConfig`] from the inline flags, reusing the JSON schema
/// validation path. Without a coupling source the model falls back to fixed
/// random nonzero couplings.
fn inline_model(m: &ModelArgs, size_override: Option<u32>) -> Result<ModelConfig> {
    let model = m
        .model
        .as_deref()
        .ok_or_else(|| Error::Config("--model (or --config) is required".into()))?;
    let l = size_override
        .or(m.num_sites)
        .ok_or_else(|| Error::Config("--L is required".into()))?;
    let mut obj = serde_json::Map::new();
    obj.insert("model".into(), model.into());
    obj.insert("L".into(), l.into());
    if let Some(b) = &m.boundary {
        obj.insert("boundary".into(), b.as_str().into());
    }
    let sources = m.j.is_some() as u8 + m.random.is_some() as u8 + m.graph.is_some() as u8;
    if sources > 1 {
        return Err(Error::Config(
            "pick one coupling source: --j, --random, or --graph".into(),
        ));
    }
    if m.hz.is_some() && m.j.is_none() {
        return Err(Error::Config("--hz needs --j".into()));
    }
    if let Some(j) = m.j {
        let value = match m.hz {
            Some(hz) => serde_json::json!({ "j": j, "hz": hz }),
            None => j.into(),
        };
        obj.insert("uniform".into(), value);
    } else if let Some(spec) = &m.random {
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "--random takes \"lo,hi,seed\", got {spec:?}"
            )));
        }
        let lo: f64 = parts[0]
            .parse()
            .map_err(|_| Error::Config(format!("bad --random lo {:?}", parts[0])))?;
        let hi: f64 = parts[1]
            .parse()
            .map_err(|_| Error::Config(format!("bad --random hi {:?}", parts[1])))?;
        let seed: u64 = parts[2]
            .parse()
            .map_err(|_| Error::Config(format!("bad --random seed {:?}", parts[2])))?;
        obj.insert(
            "random".into(),
            serde_json::json!({ "lo": lo, "hi": hi, "seed": seed }),
        );
    } else if let Some(path) = &m.graph {
        let edges = parse_graph_csv(&read_text(path)?)?;
        let list: Vec<serde_json::Value> = edges
            .iter()
            .map(|e| serde_json::json!([e.i, e.j, e.color.letter().to_string(), e.coupling]))
            .collect();
        obj.insert("graph".into(), serde_json::json!({ "edges": list }));
    } else {
        obj.insert(
            "random".into(),
            serde_json::json!({ "lo": 0.3, "hi": 1.5, "seed": DEFAULT_COUPLING_SEED }),
        );
    }
    ModelConfig::from_json(&serde_json::Value::Object(obj).to_string())
}

/// Class dump text: header line, then one compact member word per line.
fn class_dump(
    g: &GlobalArgs,
    l: u32,
    seed: &str,
    dim: usize,
    complete: bool,
    members: Option<&[String]>,
) -> String {
    match g.format.unwrap_or(Format::Csv) {
        Format::Json => {
            let mut v = serde_json::json!({
                "L": l,
                "seed": seed,
                "oed": dim,
                "complete": complete,
            });
            if let Some(words) = members {
                v["members"] = serde_json::json!(words);
            }
            json_text(&v)
        }
        Format::Csv => {
            let mut s = meta_header(g.no_meta);
            let _ = writeln!(s, "L={l} seed={seed} oed={dim} complete={complete}");
            if let Some(words) = members {
                for word in words {
                    s.push_str(word);
                    s.push('\n');
                }
            }
            s
        }
    }
}

fn cmd_class(g: &GlobalArgs, a: &ClassArgs) -> Result<CmdOutput> {
    let cfg = load_model(g, &a.model)?;
    let h = cfg.build()?;
    let l = cfg.num_sites;
    if a.partition {
        if a.seed.is_some() {
            return Err(Error::Config("--partition ignores --seed; drop one".into()));
        }
        let part = closure::partition_all(&h)?;
        let k = part.num_classes();
        let total = part.total_dimension();
        let text = match g.format.unwrap_or(Format::Csv) {
            Format::Json => {
                let classes: Vec<serde_json::Value> = part
                    .classes()
                    .iter()
                    .map(|c| {
                        serde_json::json!({
                            "seed": c.members()[0].format_compact(),
                            "oed": c.dimension(),
                        })
                    })
                    .collect();
                json_text(&serde_json::json!({
                    "L": l,
                    "K": k,
                    "total": total,
                    "classes": classes,
                }))
            }
            Format::Csv => {
                let mut s = meta_header(g.no_meta);
                let _ = writeln!(s, "L={l} K={k} total={total}");
                for c in part.classes() {
                    let _ = writeln!(
                        s,
                        "seed={} oed={}",
                        c.members()[0].format_compact(),
                        c.dimension()
                    );
                }
                s
            }
        };
        return Ok(CmdOutput::ok(text));
    }
    let word = a
        .seed
        .as_deref()
        .ok_or_else(|| Error::Config("--seed is required without --partition".into()))?;
    let seed = PauliString::parse(word, l)?;
    let canonical = seed.format_compact();
    let budget = budget_of(g)?;
    let (dim, complete, members) = if a.oed_only {
        let r = closure::oed(&h, &seed, budget)?;
        (r.dimension, r.complete, None)
    } else {
        let class = closure::generate_class(&h, &seed, budget)?;
        let words: Vec<String> = class.members().iter().map(|p| p.format_compact()).collect();
        (class.dimension(), class.complete(), Some(words))
    };
    let text = class_dump(g, l, &canonical, dim, complete, members.as_deref());
    Ok(CmdOutput {
        text,
        code: if complete { 0 } else { 3 },
    })
}

/// One seed token of a scan: a literal word, a per-site family, or the
/// all-Z parity string.
#[derive(Debug, Clone, PartialEq, Eq)]
enum SeedSpec {
    Literal(String),
    PerSite(char),
    Parity,
}

fn parse_seed_specs(list: &str) -> Result<Vec<SeedSpec>> {
    let mut out = Vec::new();
    for tok in list.split(',').map(str::trim) {
        if tok.is_empty() {
            return Err(Error::Config("empty seed token".into()));
        }
        if tok.eq_ignore_ascii_case("parity") {
            out.push(SeedSpec::Parity);
            continue;
        }
        if let Some(head) = tok.strip_suffix('*') {
            let up = head.to_ascii_uppercase();
            if matches!(up.as_str(), "X" | "Y" | "Z") {
                out.push(SeedSpec::PerSite(up.chars().next().expect("one char")));
                continue;
            }
            return Err(Error::Config(format!(
                "bad seed family {tok:?}; use X*, Y*, or Z*"
            )));
        }
        out.push(SeedSpec::Literal(tok.to_string()));
    }
    Ok(out)
}

fn parse_sizes(spec: &str) -> Result<Vec<u32>> {
    let spec = spec.trim();
    let bad = |what: &str| Error::Config(format!("bad --sizes value {what:?}"));
    if let Some((a, b)) = spec.split_once("..") {
        let lo: u32 = a.trim().parse().map_err(|_| bad(spec))?;
        let hi: u32 = b.trim().parse().map_err(|_| bad(spec))?;
        if lo == 0 || hi < lo {
            return Err(bad(spec));
        }
        return Ok((lo..=hi).collect());
    }
    let mut out = Vec::new();
    for tok in spec.split(',') {
        let l: u32 = tok.trim().parse().map_err(|_| bad(tok))?;
        if l == 0 {
            return Err(bad(tok));
        }
        out.push(l);
    }
    if out.is_empty() {
        return Err(bad(spec));
    }
    Ok(out)
}

fn cmd_scan(g: &GlobalArgs, a: &ScanArgs) -> Result<CmdOutput> {
    if a.model.num_sites.is_some() {
        return Err(Error::Config("scan takes --sizes, not --L".into()));
    }
    let sizes = parse_sizes(&a.sizes)?;
    let specs = parse_seed_specs(&a.seeds)?;
    if a.model.graph.is_some() && sizes.len() > 1 {
        return Err(Error::Config(
            "an edge list fixes the size; scan a single size with --graph".into(),
        ));
    }
    let budget = budget_of(g)?;

    struct Job {
        l: u32,
        word: String,
        seed: PauliString,
        h: Arc<Hamiltonian>,
    }
    let mut jobs = Vec::new();
    for &l in &sizes {
        let cfg = match &g.config {
            Some(path) => {
                let mut c = ModelConfig::from_json(&read_text(path)?)?;
                c.num_sites = l;
                c
            }
            None => inline_model(&a.model, Some(l))?,
        };
        let h = Arc::new(cfg.build()?);
        for spec in &specs {
            match spec {
                SeedSpec::Literal(w) => {
                    let seed = PauliString::parse(w, l)?;
                    jobs.push(Job {
                        l,
                        word: seed.format_compact(),
                        seed,
                        h: h.clone(),
                    });
                }
                SeedSpec::PerSite(op) => {
                    for site in 1..=l as usize {
                        let seed = PauliString::parse(&format!("{op}{site}"), l)?;
                        jobs.push(Job {
                            l,
                            word: seed.format_compact(),
                            seed,
                            h: h.clone(),
                        });
                    }
                }
                SeedSpec::Parity => {
                    let word = "Z".repeat(l as usize);
                    let seed = PauliString::parse(&word, l)?;
                    jobs.push(Job {
                        l,
                        word,
                        seed,
                        h: h.clone(),
                    });
                }
            }
        }
    }

    use rayon::prelude::*;
    // ordered collect keeps the output deterministic across thread counts
    let rows: Vec<Result<(u32, String, usize, bool)>> = jobs
        .par_iter()
        .map(|job| {
            closure::oed(&job.h, &job.seed, budget)
                .map(|r| (job.l, job.word.clone(), r.dimension, r.complete))
        })
        .collect();
    let mut table = Vec::with_capacity(rows.len());
    let mut any_incomplete = false;
    for row in rows {
        let row = row?;
        any_incomplete |= !row.3;
        table.push(row);
    }
    let text = match g.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = meta_header(g.no_meta);
            s.push_str("L,seed,oed,complete\n");
            for (l, word, dim, complete) in &table {
                let _ = writeln!(s, "{l},{word},{dim},{complete}");
            }
            s
        }
        Format::Json => {
            let arr: Vec<serde_json::Value> = table
                .iter()
                .map(|(l, word, dim, complete)| {
                    serde_json::json!({
                        "L": l,
                        "seed": word,
                        "oed": dim,
                        "complete": complete,
                    })
                })
                .collect();
            json_text(&serde_json::json!(arr))
        }
    };
    Ok(CmdOutput {
        text,
        code: if any_incomplete { 3 } else { 0 },
    })
}

fn cmd_fit_poly(g: &GlobalArgs, a: &FitPolyArgs) -> Result<CmdOutput> {
    let mut points = analysis::parse_integer_points(&read_text(&a.data)?)?;
    points.sort_by_key(|&(l, _)| l);
    let (degree, poly) = match a.degree {
        Some(d) => {
            let poly = if points.len() == d + 1 {
                dimpoly::interpolate_points(&points)?
            } else {
                dimpoly::fit_with_holdout(&points, d)?
            };
            (d, poly)
        }
        None => dimpoly::detect_degree(&points)?,
    };
    let validated: Vec<i64> = points
        .iter()
        .skip(degree + 1)
        .map(|&(l, _)| l)
        .collect();
    let coeffs: Vec<String> = poly.coeffs().iter().map(rational_str).collect();
    let text = match g.format.unwrap_or(Format::Json) {
        Format::Json => json_text(&serde_json::json!({
            "degree": degree,
            "coeffs": coeffs,
            "validated_at": validated,
        })),
        Format::Csv => {
            let mut s = meta_header(g.no_meta);
            let _ = writeln!(s, "# degree={degree}");
            let joined: Vec<String> = validated.iter().map(|l| l.to_string()).collect();
            let _ = writeln!(s, "# validated_at={}", joined.join(","));
            s.push_str("power,coeff\n");
            for (p, c) in coeffs.iter().enumerate() {
                let _ = writeln!(s, "{p},{c}");
            }
            s
        }
    };
    Ok(CmdOutput::ok(text))
}

fn cmd_fit_exp(g: &GlobalArgs, a: &FitExpArgs) -> Result<CmdOutput> {
    let points = analysis::parse_points(&read_text(&a.data)?)?;
    let fit = analysis::fit_exponential(&points)?;
    let text = match g.format.unwrap_or(Format::Json) {
        Format::Json => json_text(&serde_json::json!({
            "prefactor": fit.prefactor,
            "rate": fit.rate,
            "r_squared": fit.r_squared,
            "points": fit.points,
        })),
        Format::Csv => {
            let mut s = meta_header(g.no_meta);
            s.push_str("prefactor,rate,r_squared,points\n");
            let _ = writeln!(
                s,
                "{},{},{},{}",
                fit.prefactor, fit.rate, fit.r_squared, fit.points
            );
            s
        }
    };
    Ok(CmdOutput::ok(text))
}

fn parse_state_spec(spec: &str) -> Result<[f64; 3]> {
    match spec.to_ascii_lowercase().as_str() {
        "plus-x" | "+x" => Ok([1.0, 0.0, 0.0]),
        "minus-x" | "-x" => Ok([-1.0, 0.0, 0.0]),
        "plus-y" | "+y" => Ok([0.0, 1.0, 0.0]),
        "minus-y" | "-y" => Ok([0.0, -1.0, 0.0]),
        "up" | "0" => Ok([0.0, 0.0, 1.0]),
        "down" | "1" => Ok([0.0, 0.0, -1.0]),
        other => {
            let parts: Vec<&str> = other.split(',').map(str::trim).collect();
            if parts.len() == 3 {
                let mut b = [0.0; 3];
                for (k, p) in parts.iter().enumerate() {
                    b[k] = p
                        .parse()
                        .map_err(|_| Error::Config(format!("bad Bloch component {p:?}")))?;
                }
                return Ok(b);
            }
            Err(Error::Config(format!("bad state spec {spec:?}")))
        }
    }
}

fn parse_method(name: &str) -> Result<Method> {
    match name.to_ascii_lowercase().as_str() {
        "auto" => Ok(Method::Auto),
        "expm" | "matrix-exp" => Ok(Method::MatrixExp),
        "rk4" | "runge-kutta" => Ok(Method::RungeKutta),
        other => Err(Error::Config(format!("unknown method {other:?}"))),
    }
}

/// Sample grid 0, dt, 2 dt, ..., t_max. A zero horizon degenerates to the
/// single sample t = 0.
fn build_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !t_max.is_finite() || t_max < 0.0 {
        return Err(Error::Config(format!("bad --t-max value {t_max}")));
    }
    if t_max == 0.0 {
        return Ok(vec![0.0]);
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::Config(format!("bad --dt value {dt}")));
    }
    let samples = ((t_max / dt).round() as usize).max(1) + 1;
    uniform_grid(0.0, t_max, samples)
}

struct TrajectoryRow {
    site: usize,
    observable: String,
    traj: Trajectory,
}

/// Run one trajectory per polarized site, either on the restricted engine
/// or on the dense oracle.
fn run_trajectories(
    g: &GlobalArgs,
    e: &EvolveArgs,
    schedule: Option<&[TimedGate]>,
    use_oracle: bool,
) -> Result<Vec<TrajectoryRow>> {
    let cfg = load_model(g, &e.model)?;
    let h = cfg.build()?;
    let l = cfg.num_sites;
    if e.sites.is_empty() {
        return Err(Error::Config("at least one site is required".into()));
    }
    let states: Vec<[f64; 3]> = if e.states.len() == 1 {
        vec![parse_state_spec(&e.states[0])?; e.sites.len()]
    } else if e.states.len() == e.sites.len() {
        e.states
            .iter()
            .map(|s| parse_state_spec(s))
            .collect::<Result<_>>()?
    } else {
        return Err(Error::Config(format!(
            "{} --state values for {} sites; give one per site or one for all",
            e.states.len(),
            e.sites.len()
        )));
    };
    let grid = build_grid(e.t_max, e.dt)?;
    let opts = EvolveOptions {
        method: parse_method(&e.method)?,
        step: e.step,
    };
    let budget = budget_of(g)?;
    let mut rows = Vec::with_capacity(e.sites.len());
    for (&site, bloch) in e.sites.iter().zip(&states) {
        let word = e.observable.replace('*', &site.to_string());
        let obs = PauliString::parse(&word, l)?;
        let state = ProductState::infinite_temperature(l).with_bloch(site, *bloch)?;
        let traj = if use_oracle {
            oracle::exact_quenched(&h, schedule.unwrap_or(&[]), &obs, &state, &grid)?
        } else if let Some(gates) = schedule {
            quenched_evolution(&h, gates, &obs, &state, &grid, &opts, budget)?
        } else {
            heisenberg_expectation(&h, &obs, &state, &grid, &opts, budget)?
        };
        rows.push(TrajectoryRow {
            site,
            observable: obs.format_compact(),
            traj,
        });
    }
    Ok(rows)
}

fn render_trajectories(g: &GlobalArgs, rows: &[TrajectoryRow]) -> CmdOutput {
    let text = match g.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = meta_header(g.no_meta);
            s.push_str("t,site,observable,value,norm_drift\n");
            for row in rows {
                for k in 0..row.traj.times.len() {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{}",
                        row.traj.times[k],
                        row.site,
                        row.observable,
                        row.traj.values[k],
                        row.traj.norm_drift[k]
                    );
                }
            }
            s
        }
        Format::Json => {
            let arr: Vec<serde_json::Value> = rows
                .iter()
                .map(|row| {
                    serde_json::json!({
                        "site": row.site,
                        "observable": row.observable,
                        "times": row.traj.times,
                        "values": row.traj.values,
                        "norm_drift": row.traj.norm_drift,
                    })
                })
                .collect();
            json_text(&serde_json::json!({ "trajectories": arr }))
        }
    };
    CmdOutput::ok(text)
}

fn cmd_evolve(g: &GlobalArgs, a: &EvolveArgs) -> Result<CmdOutput> {
    let rows = run_trajectories(g, a, None, false)?;
    Ok(render_trajectories(g, &rows))
}

fn cmd_quench(g: &GlobalArgs, a: &QuenchArgs) -> Result<CmdOutput> {
    let schedule = parse_schedule_json(&read_text(&a.schedule)?)?;
    let rows = run_trajectories(g, &a.evolve, Some(&schedule), false)?;
    Ok(render_trajectories(g, &rows))
}

fn cmd_oracle(g: &GlobalArgs, a: &OracleArgs) -> Result<CmdOutput> {
    if a.project {
        let cfg = load_model(g, &a.evolve.model)?;
        let h = cfg.build()?;
        let l = cfg.num_sites;
        let word = a
            .seed
            .as_deref()
            .ok_or_else(|| Error::Config("--project needs --seed".into()))?;
        let seed = PauliString::parse(word, l)?;
        let members = oracle::exact_class_projection(&h, &seed)?;
        let words: Vec<String> = members.iter().map(|p| p.format_compact()).collect();
        let text = class_dump(
            g,
            l,
            &seed.format_compact(),
            words.len(),
            true,
            Some(&words),
        );
        return Ok(CmdOutput::ok(text));
    }
    if a.seed.is_some() {
        return Err(Error::Config("--seed only applies with --project".into()));
    }
    let schedule = match &a.schedule {
        Some(path) => Some(parse_schedule_json(&read_text(path)?)?),
        None => None,
    };
    let rows = run_trajectories(g, &a.evolve, schedule.as_deref(), true)?;
    Ok(render_trajectories(g, &rows))
}
