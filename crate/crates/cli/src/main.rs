use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use longpath::baselines::{dfbnb, exhaustive_dfs};
use longpath::bench::{
    cactus, emit_csv, extract_subgraph_mapped, gen_maze, load_instance, load_suite, parse_csv, run_benchmark,
    save_instance, speedups, weight_disagreements, BenchConfig, MazeSpec, RunStatus, Solver, SpeedupSummary,
};
use longpath::graph::{load_graph, validate_path};
use longpath::lpdp::{solve_with_limits, Limits, SolveMode, DEFAULT_MAX_ENTRIES};
use longpath::parallel::{ParallelConfig, DEFAULT_DEPTH_LIMIT};
use longpath::partition::{build_hierarchy, import_hierarchy, write_hierarchy, PartitionConfig};
use longpath::{Error, Graph, Instance};

/// Exact longest simple path solver.
#[derive(Parser)]
#[command(name = "longpath", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance.
    Solve(SolveArgs),
    /// Generate benchmark instances.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run solvers over a suite and write CSV records.
    Bench(BenchArgs),
    /// Summarize a benchmark CSV: speedups, cactus data, weight checks.
    Report {
        #[arg(long)]
        csv: PathBuf,
    },
    /// Build a partition hierarchy and write it as one line per level.
    Partition {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        partition: PartitionArgs,
        /// Output file, stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct PartitionArgs {
    /// Allowed block imbalance.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 16)]
    target_block_size: usize,
    /// Blocks merged per parent: 2, 4 or 8.
    #[arg(long, default_value_t = 2)]
    fan_out: usize,
    #[arg(long, default_value_t = 0)]
    partition_seed: u64,
}

impl PartitionArgs {
    fn config(&self) -> PartitionConfig {
        PartitionConfig {
            epsilon: self.eps,
            target_block_size: self.target_block_size,
            fan_out: self.fan_out,
            seed: self.partition_seed,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Source vertex (0-indexed); read from the `.problem` sidecar if omitted.
    #[arg(long)]
    source: Option<usize>,
    #[arg(long)]
    target: Option<usize>,
    #[arg(long, default_value = "lpdp")]
    solver: Solver,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[command(flatten)]
    partition: PartitionArgs,
    /// Hierarchy file to use instead of the built-in partitioner.
    #[arg(long)]
    hierarchy: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_DEPTH_LIMIT)]
    depth_limit: usize,
    /// Solve blocks one after another, parallelizing only within a block.
    #[arg(long)]
    no_block_parallelism: bool,
    /// Time limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Cap on the total number of table entries.
    #[arg(long, default_value_t = DEFAULT_MAX_ENTRIES)]
    max_entries: usize,
    /// Print the path's vertices.
    #[arg(long)]
    print_path: bool,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Grid maze with random obstacles.
    Maze {
        #[arg(long)]
        side: usize,
        #[arg(long, default_value_t = 0.3)]
        fill: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Instance name, derived from the parameters if omitted.
        #[arg(long)]
        name: Option<String>,
        /// Print the maze as text.
        #[arg(long)]
        render: bool,
    },
    /// BFS-grown induced subgraph of a larger graph.
    Subgraph {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Permit a single-vertex instance with source equal to target.
        #[arg(long)]
        allow_trivial: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of `.graph` files with `.problem` sidecars.
    #[arg(long)]
    suite: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "lpdp,exhdfs,dfbnb")]
    solvers: Vec<Solver>,
    /// LPDP thread counts; baselines always run single-threaded.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    threads: Vec<usize>,
    /// Per-run time limit in seconds.
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    #[command(flatten)]
    partition: PartitionArgs,
    #[arg(long, default_value_t = DEFAULT_DEPTH_LIMIT)]
    depth_limit: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ENTRIES)]
    max_entries: usize,
    /// CSV output file, stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve(args) => solve(args),
        Command::Gen(cmd) => generate(cmd).map(|_| ExitCode::SUCCESS),
        Command::Bench(args) => bench(args).map(|_| ExitCode::SUCCESS),
        Command::Report { csv } => report(&csv).map(|_| ExitCode::SUCCESS),
        Command::Partition { graph, partition, out } => {
            let g = read_graph(&graph)?;
            let h = build_hierarchy(&g, &partition.config())?;
            for level in 0..h.level_count() {
                let sizes = h.members(level).iter().map(Vec::len).collect::<Vec<_>>();
                let assignment = h.assignment(level);
                let mut boundary = vec![0usize; h.block_count(level)];
                for v in 0..g.vertex_count() {
                    if g.neighbors(v).iter().any(|&(w, _)| assignment[w] != assignment[v]) {
                        boundary[assignment[v]] += 1;
                    }
                }
                let widest = boundary.iter().max().copied().unwrap_or(0);
                eprintln!(
                    "level {level}: {} blocks, sizes {}..{}, cut {}, max boundary {widest}",
                    sizes.len(),
                    sizes.iter().min().unwrap_or(&0),
                    sizes.iter().max().unwrap_or(&0),
                    h.edge_cut(&g, level),
                );
            }
            write_to(out.as_deref(), |w| Ok(write_hierarchy(&h, w)?))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read_graph(path: &Path) -> Result<Graph> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    load_graph(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn write_to(out: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(p) => {
            let mut file = io::BufWriter::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?);
            f(&mut file)?;
            file.flush()?;
        }
        None => f(&mut io::stdout().lock())?,
    }
    Ok(())
}

fn seconds(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).map_err(|_| anyhow::anyhow!("invalid time limit {s}"))
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let instance = match (args.source, args.target) {
        (Some(s), Some(t)) => Instance::new(read_graph(&args.graph)?, s, t)?,
        (None, None) => load_instance(&args.graph)
            .with_context(|| format!("loading {} and its .problem sidecar", args.graph.display()))?,
        _ => bail!("give both --source and --target, or neither"),
    };
    let limit = args.time_limit.map(seconds).transpose()?;
    let start = Instant::now();
    let result = match args.solver {
        Solver::Exhdfs => exhaustive_dfs(&instance, limit).result,
        Solver::Dfbnb => dfbnb(&instance, limit).result,
        Solver::Lpdp => {
            let hierarchy = match &args.hierarchy {
                Some(p) => import_hierarchy(BufReader::new(fs::File::open(p)?), &instance.graph)?,
                None => build_hierarchy(&instance.graph, &args.partition.config())?,
            };
            let mode = if args.threads <= 1 {
                SolveMode::Serial
            } else {
                SolveMode::Parallel(ParallelConfig {
                    threads: args.threads,
                    depth_limit: args.depth_limit,
                    block_parallelism: !args.no_block_parallelism,
                })
            };
            let limits = Limits { time: limit.map(|d| d.saturating_sub(start.elapsed())), max_entries: Some(args.max_entries) };
            solve_with_limits(&instance, &hierarchy, &mode, limits).map(|s| s.path)
        }
    };
    let elapsed = start.elapsed();
    match result {
        Ok(path) => {
            validate_path(&instance.graph, &path, instance.source, instance.target)?;
            println!("status solved");
            println!("weight {}", path.weight);
            println!("edges {}", path.edge_count());
            println!("time_ms {:.3}", elapsed.as_secs_f64() * 1e3);
            if args.print_path {
                let vs = path.vertices.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
                println!("path {vs}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(e @ (Error::Timeout | Error::TableLimit(_) | Error::NoPath { .. })) => {
            let status = match e {
                Error::Timeout => RunStatus::Timeout,
                Error::TableLimit(_) => RunStatus::Memout,
                _ => RunStatus::Nopath,
            };
            println!("status {status}");
            println!("time_ms {:.3}", elapsed.as_secs_f64() * 1e3);
            eprintln!("{e}");
            Ok(ExitCode::from(2))
        }
        Err(e) => Err(e.into()),
    }
}

fn generate(cmd: GenCommand) -> Result<()> {
    match cmd {
        GenCommand::Maze { side, fill, seed, out, name, render } => {
            let maze = gen_maze(MazeSpec { side, fill, seed })?;
            let name = name.unwrap_or_else(|| format!("maze_{side}_{:02}_{seed}", (fill * 100.0).round() as u32));
            save_instance(&out, &name, &maze.instance)?;
            if render {
                print!("{}", maze.render());
            }
            eprintln!(
                "{name}: {} vertices, {} edges, {} obstacles, {} retries",
                maze.instance.graph.vertex_count(),
                maze.instance.graph.edge_count(),
                maze.obstacle_count(),
                maze.retries
            );
        }
        GenCommand::Subgraph { graph, size, seed, allow_trivial, out, name } => {
            let g = read_graph(&graph)?;
            let (instance, _) = extract_subgraph_mapped(&g, size, seed, allow_trivial)?;
            let stem = graph.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "graph".into());
            let name = name.unwrap_or_else(|| format!("{stem}_{size}_{seed}"));
            save_instance(&out, &name, &instance)?;
            eprintln!(
                "{name}: {} vertices, {} edges, s={} t={}",
                instance.graph.vertex_count(),
                instance.graph.edge_count(),
                instance.source,
                instance.target
            );
        }
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let suite = load_suite(&args.suite).with_context(|| format!("loading suite {}", args.suite.display()))?;
    if suite.is_empty() {
        bail!("no instances with .problem sidecars in {}", args.suite.display());
    }
    if let Some(&t) = args.threads.iter().find(|&&t| t == 0) {
        bail!("invalid thread count {t}");
    }
    let config = BenchConfig {
        solvers: args.solvers,
        threads: args.threads,
        time_limit: seconds(args.time_limit)?,
        partition: args.partition.config(),
        depth_limit: args.depth_limit,
        max_entries: Some(args.max_entries),
    };
    let records = run_benchmark(&suite, &config);
    let csv = emit_csv(&records)?;
    write_to(args.out.as_deref(), |w| Ok(w.write_all(csv.as_bytes())?))?;
    for name in weight_disagreements(&records) {
        log::error!("solvers disagree on {name}");
    }
    Ok(())
}

fn print_summary(label: &str, s: &SpeedupSummary) {
    println!(
        "{:>7} {:>5} {:>9} {:>8.3} {:>8.3} {:>8.3}",
        s.threads, label, s.instances, s.average, s.total, s.median
    );
}

fn report(csv: &Path) -> Result<()> {
    let records = parse_csv(fs::File::open(csv).with_context(|| format!("opening {}", csv.display()))?)?;
    println!("{:>7} {:>5} {:>9} {:>8} {:>8} {:>8}", "threads", "set", "instances", "avg", "total", "median");
    for row in speedups(&records) {
        print_summary("all", &row.all);
        print_summary("big", &row.big);
    }
    println!();
    let mut configs: Vec<(Solver, usize)> = records.iter().map(|r| (r.solver, r.threads)).collect();
    configs.sort();
    configs.dedup();
    for (solver, threads) in configs {
        let times = cactus(&records, solver, threads);
        let total = records.iter().filter(|r| r.solver == solver && r.threads == threads).count();
        let shown = times.iter().map(|t| format!("{t:.3}")).collect::<Vec<_>>().join(" ");
        println!("{solver} x{threads}: solved {}/{total}: {shown}", times.len());
    }
    let bad = weight_disagreements(&records);
    if !bad.is_empty() {
        println!();
        println!("weight disagreements: {}", bad.join(", "));
    }
    Ok(())
}
