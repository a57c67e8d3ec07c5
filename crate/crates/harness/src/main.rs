//! Command-line front end: graph utilities, assignment and probability
//! generation, one-shot estimation, and the scenario replication engine.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use spillover::design::{
    bernoulli_assignment, complete_randomization, enumerate_support, epsilon_net_clustering,
    AssignmentSet,
};
use spillover::estimators::{estimate_hajek, estimate_ht, EstimateOptions};
use spillover::exposure::{
    exposure_probabilities, map_exposures, ExposureMapper, ExposureMappingSpec,
};
use spillover::hierarchical::{load_hierarchical, marginal_effects};
use spillover::netgraph::{generate_small_world, load_graph, save_graph, save_graph_dense, Graph};

use spillover_cli::config::{parse_fraction, ScenarioConfig};
use spillover_cli::presets;
use spillover_cli::scenario::run_scenario;

#[derive(Parser)]
#[command(
    name = "spillover",
    version,
    about = "Design, simulate, and analyze randomized experiments under network interference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or inspect interference networks.
    Graph {
        #[command(subcommand)]
        command: GraphCommand,
    },
    /// Draw treatment assignment vectors from a design.
    Assign(AssignArgs),
    /// Partition a graph with greedy epsilon-net clustering.
    Cluster(ClusterArgs),
    /// Tally individual (and joint) exposure probabilities.
    Probs(ProbsArgs),
    /// Map one assignment to per-unit exposure conditions.
    Expose(ExposeArgs),
    /// Estimate exposure contrasts from a graph, assignment, and outcomes.
    Estimate(EstimateArgs),
    /// Estimate two-stage marginal effects from a hierarchical data file.
    HierEstimate(HierArgs),
    /// Run a replication scenario from a preset name or config file.
    Simulate(SimulateArgs),
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Generate a small-world graph.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        mean_degree: usize,
        #[arg(long, default_value_t = 0.1)]
        rewire_prob: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Output format: edges (u,v list) or dense (0/1 matrix).
        #[arg(long, default_value = "edges")]
        format: String,
    },
    /// Print unit count, edge count, and degree summary.
    Info { path: PathBuf },
}

#[derive(Args)]
struct AssignArgs {
    /// complete | bernoulli
    #[arg(long, default_value = "complete")]
    design: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: String,
    #[arg(long, default_value_t = 1)]
    r: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Allow repeated vectors in complete randomization.
    #[arg(long)]
    allow_repetitions: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 3)]
    epsilon: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProbsArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Treated share or Bernoulli probability (accepts fractions).
    #[arg(long)]
    p: String,
    /// complete | bernoulli
    #[arg(long, default_value = "complete")]
    design: String,
    /// Exposure mapping: none | 1 | 2 | full
    #[arg(long, default_value = "1")]
    hop: String,
    /// Enumerate the full support instead of Monte Carlo draws
    /// (complete randomization only).
    #[arg(long)]
    enumerate: bool,
    #[arg(long, default_value_t = 10_000)]
    prob_reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also tally joint probabilities (needed by variance estimators).
    #[arg(long)]
    joint: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExposeArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Comma-separated treated unit ids (0-based).
    #[arg(long)]
    treated: String,
    /// Exposure mapping: none | 1 | 2 | full
    #[arg(long, default_value = "1")]
    hop: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Comma-separated treated unit ids (0-based).
    #[arg(long)]
    treated: String,
    /// Outcome CSV with header `unit,y`.
    #[arg(long)]
    y: PathBuf,
    #[arg(long, default_value = "1")]
    hop: String,
    #[arg(long)]
    p: String,
    #[arg(long)]
    enumerate: bool,
    #[arg(long, default_value_t = 10_000)]
    prob_reps: usize,
    /// Contrast as `k:l` condition labels; repeatable. Defaults to every
    /// condition against the all-zero baseline.
    #[arg(long)]
    contrast: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Constant-effects redraws for the max-rule variance (0 disables).
    #[arg(long, default_value_t = 100)]
    ce_reps: usize,
    /// Restrict estimation to units with positive estimated probability
    /// in both contrasted conditions.
    #[arg(long)]
    restrict: bool,
}

#[derive(Args)]
struct HierArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Preset name or path to a config file.
    scenario: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    prob_reps: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_hop(text: &str) -> Result<ExposureMappingSpec> {
    Ok(match text {
        "none" | "0" => ExposureMappingSpec::no_interference(),
        "1" | "hop1" => ExposureMappingSpec::hop1(),
        "2" | "hop2" => ExposureMappingSpec::hop2(),
        "full" => ExposureMappingSpec::full_neighborhood(),
        other => bail!("unknown exposure mapping '{other}' (none|1|2|full)"),
    })
}

fn parse_treated(text: &str, n: usize) -> Result<Vec<u8>> {
    let mut z = vec![0u8; n];
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let unit: usize = item.parse().with_context(|| format!("bad unit id '{item}'"))?;
        if unit >= n {
            bail!("treated unit {unit} is outside 0..{n}");
        }
        z[unit] = 1;
    }
    Ok(z)
}

/// Write to stdout, treating a closed pipe (e.g. `| head`) as a clean exit.
fn print_stdout(content: &str) -> Result<()> {
    match std::io::stdout().write_all(content.as_bytes()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        Err(e) => Err(e.into()),
    }
}

fn write_or_print(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print_stdout(content)?,
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Graph { command } => run_graph(command),
        Command::Assign(args) => run_assign(args),
        Command::Cluster(args) => run_cluster(args),
        Command::Probs(args) => run_probs(args),
        Command::Expose(args) => run_expose(args),
        Command::Estimate(args) => run_estimate(args),
        Command::HierEstimate(args) => run_hier(args),
        Command::Simulate(args) => run_simulate(args),
    }
}

fn run_graph(command: GraphCommand) -> Result<()> {
    match command {
        GraphCommand::Gen { n, mean_degree, rewire_prob, seed, out, format } => {
            let g = generate_small_world(n, mean_degree, rewire_prob, seed)?;
            match format.as_str() {
                "edges" => save_graph(&g, &out)?,
                "dense" => save_graph_dense(&g, &out)?,
                other => bail!("unknown graph format '{other}' (edges|dense)"),
            }
            println!("wrote {} units, {} edges to {}", g.unit_count(), g.edge_count(), out.display());
        }
        GraphCommand::Info { path } => {
            let g = load_graph(&path)?;
            let degrees: Vec<usize> = (0..g.unit_count()).map(|u| g.degree(u)).collect();
            let mean_degree =
                degrees.iter().sum::<usize>() as f64 / degrees.len().max(1) as f64;
            println!("units: {}", g.unit_count());
            println!("edges: {}", g.edge_count());
            println!("mean_degree: {mean_degree}");
            println!(
                "degree_range: {}..{}",
                degrees.iter().min().copied().unwrap_or(0),
                degrees.iter().max().copied().unwrap_or(0)
            );
        }
    }
    Ok(())
}

fn run_assign(args: AssignArgs) -> Result<()> {
    let p = parse_fraction(&args.p)?;
    let set = match args.design.as_str() {
        "complete" => {
            complete_randomization(args.n, p, args.r, args.seed, args.allow_repetitions)?
        }
        "bernoulli" => bernoulli_assignment(args.n, p, args.r, args.seed)?,
        other => bail!("unknown design '{other}' (complete|bernoulli)"),
    };
    let mut content = String::from("rep,unit,z\n");
    for (rep, z) in set.vectors.iter().enumerate() {
        for (unit, &bit) in z.iter().enumerate() {
            content.push_str(&format!("{rep},{unit},{bit}\n"));
        }
    }
    write_or_print(&args.out, &content)
}

fn run_cluster(args: ClusterArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let clustering = epsilon_net_clustering(&g, args.epsilon, args.seed)?;
    let mut content = String::from("unit,cluster,is_center\n");
    for (unit, &cluster) in clustering.labels.iter().enumerate() {
        let is_center = clustering.centers[cluster] == unit;
        content.push_str(&format!("{unit},{cluster},{}\n", u8::from(is_center)));
    }
    eprintln!("{} clusters over {} units", clustering.cluster_count(), g.unit_count());
    write_or_print(&args.out, &content)
}

fn probability_draws(
    g: &Graph,
    p: f64,
    enumerate: bool,
    prob_reps: usize,
    seed: u64,
) -> Result<AssignmentSet> {
    if enumerate {
        enumerate_support(g.unit_count(), p).map_err(anyhow::Error::from)
    } else {
        complete_randomization(g.unit_count(), p, prob_reps, seed, false)
            .map_err(anyhow::Error::from)
    }
}

fn run_probs(args: ProbsArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let spec = parse_hop(&args.hop)?;
    let p = parse_fraction(&args.p)?;
    let draws = match args.design.as_str() {
        "complete" => probability_draws(&g, p, args.enumerate, args.prob_reps, args.seed)?,
        "bernoulli" => {
            if args.enumerate {
                bail!("--enumerate applies to complete randomization only");
            }
            bernoulli_assignment(g.unit_count(), p, args.prob_reps, args.seed)?
        }
        other => bail!("unknown design '{other}' (complete|bernoulli)"),
    };
    let probs = exposure_probabilities(&g, &draws, spec, args.joint)?;
    print_stdout(&format!(
        "replicates={} exact={} conditions={}\n",
        probs.replicates,
        probs.exact,
        spec.condition_count()
    ))?;

    let mut content = format!("# exact={},replicates={}\n", probs.exact, probs.replicates);
    if args.joint {
        content.push_str("unit,condition,unit_j,condition_j,prob\n");
    } else {
        content.push_str("unit,condition,prob\n");
    }
    for unit in 0..g.unit_count() {
        for cond in 0..spec.condition_count() {
            if args.joint {
                content.push_str(&format!(
                    "{unit},{},,,{}\n",
                    spec.label(cond),
                    probs.individual(cond, unit)
                ));
            } else {
                content.push_str(&format!(
                    "{unit},{},{}\n",
                    spec.label(cond),
                    probs.individual(cond, unit)
                ));
            }
        }
    }
    if args.joint {
        for i in 0..g.unit_count() {
            for j in 0..g.unit_count() {
                for ck in 0..spec.condition_count() {
                    for cl in 0..spec.condition_count() {
                        let prob = probs.joint(ck, cl, i, j);
                        if prob > 0.0 {
                            content.push_str(&format!(
                                "{i},{},{j},{},{prob}\n",
                                spec.label(ck),
                                spec.label(cl)
                            ));
                        }
                    }
                }
            }
        }
    }
    write_or_print(&args.out, &content)
}

fn run_expose(args: ExposeArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let spec = parse_hop(&args.hop)?;
    let z = parse_treated(&args.treated, g.unit_count())?;
    let e = map_exposures(&g, &z, spec)?;
    let mut content = String::from("unit,condition\n");
    for unit in 0..g.unit_count() {
        content.push_str(&format!("{unit},{}\n", spec.label(e.condition(unit))));
    }
    write_or_print(&args.out, &content)
}

fn load_outcomes(path: &PathBuf, n: usize) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut y = vec![f64::NAN; n];
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == "unit,y" {
            continue;
        }
        let (unit, value) = line
            .split_once(',')
            .ok_or_else(|| anyhow!("line {}: expected 'unit,y'", idx + 1))?;
        let unit: usize = unit.trim().parse().context("bad unit id")?;
        if unit >= n {
            bail!("line {}: unit {unit} outside 0..{n}", idx + 1);
        }
        y[unit] = value.trim().parse().context("bad outcome value")?;
    }
    if y.iter().any(|v| v.is_nan()) {
        bail!("outcome file misses some units in 0..{n}");
    }
    Ok(y)
}

fn run_estimate(args: EstimateArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let spec = parse_hop(&args.hop)?;
    let p = parse_fraction(&args.p)?;
    let z = parse_treated(&args.treated, g.unit_count())?;
    let y = load_outcomes(&args.y, g.unit_count())?;

    let draws = probability_draws(&g, p, args.enumerate, args.prob_reps, args.seed)?;
    let probs = exposure_probabilities(&g, &draws, spec, true)?;
    let mapper = ExposureMapper::new(&g, spec);
    let e = mapper.map(&z)?;

    let contrasts: Vec<(usize, usize)> = if args.contrast.is_empty() {
        (0..spec.baseline_condition()).map(|k| (k, spec.baseline_condition())).collect()
    } else {
        args.contrast
            .iter()
            .map(|pair| {
                let (k, l) = pair
                    .split_once(':')
                    .ok_or_else(|| anyhow!("contrast '{pair}' must look like k:l"))?;
                let k = spec
                    .condition_of_label(k.trim())
                    .ok_or_else(|| anyhow!("unknown condition label '{k}'"))?;
                let l = spec
                    .condition_of_label(l.trim())
                    .ok_or_else(|| anyhow!("unknown condition label '{l}'"))?;
                Ok((k, l))
            })
            .collect::<Result<_>>()?
    };

    let redraws = if args.ce_reps > 0 {
        Some(complete_randomization(
            g.unit_count(),
            p,
            args.ce_reps,
            args.seed.wrapping_add(1),
            true,
        )?)
    } else {
        None
    };
    let opts = EstimateOptions { alpha: args.alpha, restrict_to_positive: args.restrict };

    for (k, l) in contrasts {
        let ht = estimate_ht(&mapper, &e, &y, &probs, k, l, redraws.as_ref(), opts)?;
        print_stdout(&format!("{}\n", serde_json::to_string(&ht)?))?;
        let hj = estimate_hajek(&e, &y, &probs, k, l, opts)?;
        print_stdout(&format!("{}\n", serde_json::to_string(&hj)?))?;
    }
    Ok(())
}

fn run_hier(args: HierArgs) -> Result<()> {
    let data = load_hierarchical(&args.data)?;
    let report = marginal_effects(&data, args.alpha)?;
    print_stdout(&format!("{}\n", serde_json::to_string_pretty(&report)?))?;
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("thread pool already initialized")?;
    }
    let (name, text) = match presets::lookup(&args.scenario) {
        Some(text) => (args.scenario.clone(), text.to_string()),
        None => {
            let path = PathBuf::from(&args.scenario);
            if !path.exists() {
                bail!(
                    "'{}' is neither a preset ({}) nor a config file",
                    args.scenario,
                    presets::names().join(", ")
                );
            }
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| args.scenario.clone());
            (stem, std::fs::read_to_string(&path)?)
        }
    };
    let mut cfg = ScenarioConfig::from_text(&name, &text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = args.reps {
        cfg.reps = reps;
    }
    if let Some(prob_reps) = args.prob_reps {
        cfg.prob_reps = prob_reps;
    }

    let started = std::time::Instant::now();
    let output = run_scenario(&cfg)?;
    output.write(&args.out, &args.format)?;
    eprintln!(
        "scenario '{}': {} summary rows, {} replicate rows in {:.1}s -> {}",
        output.name,
        output.summary.len(),
        output.replicates.len(),
        started.elapsed().as_secs_f64(),
        args.out.display()
    );
    for row in &output.summary {
        print_stdout(&format!(
            "{} {} {} | true {:.4} mean {:.4} bias {:+.4} sd {:.4} rmse {:.4}\n",
            row.cell.design, row.metrics.estimand, row.metrics.estimator,
            row.metrics.true_value, row.metrics.mean_estimate, row.metrics.bias,
            row.metrics.sd, row.metrics.rmse
        ))?;
    }
    Ok(())
}
