//! Instance generators and the benchmark runner.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::fs;
use std::io::{BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{dfbnb, exhaustive_dfs};
use crate::error::{Error, Result};
use crate::graph::{load_graph, read_problem, write_graph, write_problem, Graph, Instance, PathResult, VertexId};
use crate::lpdp::{solve_with_limits, Limits, SolveMode, DEFAULT_MAX_ENTRIES};
use crate::parallel::{ParallelConfig, DEFAULT_DEPTH_LIMIT};
use crate::partition::{build_hierarchy, PartitionConfig};

const MAX_MAZE_RETRIES: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MazeSpec {
    pub side: usize,
    /// Fraction of cells turned into obstacles.
    pub fill: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Maze {
    pub spec: MazeSpec,
    pub instance: Instance,
    /// Row-major cell grid, `true` for obstacles.
    pub blocked: Vec<bool>,
    /// Cell index of every vertex.
    pub cells: Vec<usize>,
    /// Regenerations needed until start and target were connected.
    pub retries: u64,
}

impl Maze {
    pub fn obstacle_count(&self) -> usize {
        self.blocked.iter().filter(|&&b| b).count()
    }

    /// Text picture: `#` obstacle, `.` free, `S`/`T` terminals.
    pub fn render(&self) -> String {
        let n = self.spec.side;
        let mut out = String::with_capacity(n * (n + 1));
        for r in 0..n {
            for c in 0..n {
                let cell = r * n + c;
                out.push(match cell {
                    0 => 'S',
                    _ if cell == n * n - 1 => 'T',
                    _ if self.blocked[cell] => '#',
                    _ => '.',
                });
            }
            out.push('\n');
        }
        out
    }
}

/// Number of obstacles for a maze: `ceil(fill * side^2)`.
pub fn obstacle_target(side: usize, fill: f64) -> usize {
    ((fill * (side * side) as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Grid maze with unit weights and 4-neighborhood. Obstacles are placed one
/// by one on random free cells other than the top-left start and bottom-right
/// target; if the terminals end up disconnected the maze is regenerated from
/// the next random stream of the same seed.
pub fn gen_maze(spec: MazeSpec) -> Result<Maze> {
    let n = spec.side;
    if n < 2 {
        return Err(Error::OutOfRange(format!("maze side must be at least 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&spec.fill) {
        return Err(Error::OutOfRange(format!("fill must be in [0, 1], got {}", spec.fill)));
    }
    let obstacles = obstacle_target(n, spec.fill);
    if obstacles > n * n - 2 {
        return Err(Error::OutOfRange(format!("{obstacles} obstacles leave no room for the terminals")));
    }
    for retry in 0..MAX_MAZE_RETRIES {
        // retries draw from further streams of the same seed, so they never
        // repeat the maze of another seed
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(retry);
        let mut free: Vec<usize> = (1..n * n - 1).collect();
        let mut blocked = vec![false; n * n];
        for _ in 0..obstacles {
            let i = rng.gen_range(0..free.len());
            blocked[free.swap_remove(i)] = true;
        }
        if let Some((instance, cells)) = maze_instance(n, &blocked) {
            return Ok(Maze { spec, instance, blocked, cells, retries: retry });
        }
    }
    Err(Error::InvalidInstance(format!("no connected maze after {MAX_MAZE_RETRIES} attempts")))
}

fn maze_instance(n: usize, blocked: &[bool]) -> Option<(Instance, Vec<usize>)> {
    let cells: Vec<usize> = (0..n * n).filter(|&c| !blocked[c]).collect();
    let mut vertex = vec![usize::MAX; n * n];
    for (v, &c) in cells.iter().enumerate() {
        vertex[c] = v;
    }
    let mut edges = Vec::new();
    for &c in &cells {
        let (r, col) = (c / n, c % n);
        if col + 1 < n && !blocked[c + 1] {
            edges.push((vertex[c], vertex[c + 1], 1.0));
        }
        if r + 1 < n && !blocked[c + n] {
            edges.push((vertex[c], vertex[c + n], 1.0));
        }
    }
    let graph = Graph::from_edges(cells.len(), edges).expect("grid edges are valid");
    let (s, t) = (vertex[0], vertex[n * n - 1]);
    let comp = graph.components();
    (comp[s] == comp[t]).then(|| (Instance::new(graph, s, t).expect("distinct terminals"), cells))
}

/// Induced subgraph on the first `size` vertices reached by a breadth-first
/// search from a random root. The root becomes the source (vertex 0), the
/// target is a random other touched vertex. `size == 1` is rejected unless
/// `allow_trivial`, which yields a single-vertex instance.
pub fn extract_subgraph(graph: &Graph, size: usize, seed: u64, allow_trivial: bool) -> Result<Instance> {
    extract_subgraph_mapped(graph, size, seed, allow_trivial).map(|(i, _)| i)
}

/// [`extract_subgraph`] also returning the original id of every vertex.
pub fn extract_subgraph_mapped(
    graph: &Graph,
    size: usize,
    seed: u64,
    allow_trivial: bool,
) -> Result<(Instance, Vec<VertexId>)> {
    let n = graph.vertex_count();
    if size == 0 || size > n {
        return Err(Error::OutOfRange(format!("subgraph size {size} not in 1..={n}")));
    }
    if size == 1 && !allow_trivial {
        return Err(Error::OutOfRange("a subgraph of one vertex has no distinct target".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root = rng.gen_range(0..n);
    let mut seen = vec![false; n];
    let mut order = vec![root];
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    'bfs: while let Some(v) = queue.pop_front() {
        for &(w, _) in graph.neighbors(v) {
            if order.len() == size {
                break 'bfs;
            }
            if !seen[w] {
                seen[w] = true;
                order.push(w);
                queue.push_back(w);
            }
        }
    }
    if order.len() < size {
        return Err(Error::OutOfRange(format!(
            "component of vertex {root} has only {} vertices, {size} requested",
            order.len()
        )));
    }
    let sub = graph.induced_subgraph(&order);
    let target = if size == 1 { 0 } else { rng.gen_range(1..size) };
    Ok((Instance::new(sub, 0, target)?, order))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Lpdp,
    Exhdfs,
    Dfbnb,
}

impl Solver {
    pub const ALL: [Solver; 3] = [Solver::Lpdp, Solver::Exhdfs, Solver::Dfbnb];

    pub fn name(self) -> &'static str {
        match self {
            Solver::Lpdp => "lpdp",
            Solver::Exhdfs => "exhdfs",
            Solver::Dfbnb => "dfbnb",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Solver::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::OutOfRange(format!("unknown solver {s:?} (expected lpdp, exhdfs or dfbnb)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Solved,
    Timeout,
    Nopath,
    /// Table entry budget exhausted.
    Memout,
    Failed,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Solved => "solved",
            RunStatus::Timeout => "timeout",
            RunStatus::Nopath => "nopath",
            RunStatus::Memout => "memout",
            RunStatus::Failed => "failed",
        })
    }
}

/// One (instance, solver, threads) measurement; `weight` is set iff solved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub instance: String,
    pub solver: Solver,
    pub threads: usize,
    /// Partition imbalance, LPDP rows only.
    pub eps: Option<f64>,
    /// `internal` for LPDP rows, empty otherwise.
    pub partitioner: String,
    pub time_ms: f64,
    pub status: RunStatus,
    pub weight: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub solvers: Vec<Solver>,
    /// Thread counts for LPDP; the baselines always run single-threaded.
    pub threads: Vec<usize>,
    pub time_limit: Duration,
    pub partition: PartitionConfig,
    pub depth_limit: usize,
    /// Table entry budget for LPDP runs.
    pub max_entries: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            solvers: Solver::ALL.to_vec(),
            threads: vec![1],
            time_limit: Duration::from_secs(60),
            partition: PartitionConfig::default(),
            depth_limit: DEFAULT_DEPTH_LIMIT,
            max_entries: Some(DEFAULT_MAX_ENTRIES),
        }
    }
}

/// Outcome of one timed solve.
#[derive(Debug, Clone)]
pub struct Run {
    pub status: RunStatus,
    pub elapsed: Duration,
    pub path: Option<PathResult>,
}

fn classify(result: Result<PathResult>, elapsed: Duration) -> Run {
    let (status, path) = match result {
        Ok(p) => (RunStatus::Solved, Some(p)),
        Err(Error::Timeout) => (RunStatus::Timeout, None),
        Err(Error::NoPath { .. }) => (RunStatus::Nopath, None),
        Err(Error::TableLimit(_)) => (RunStatus::Memout, None),
        Err(e) => {
            log::warn!("solver failed: {e}");
            (RunStatus::Failed, None)
        }
    };
    Run { status, elapsed, path }
}

/// Runs one solver with a time limit. LPDP timing includes partitioning;
/// `threads == 1` uses the serial LPDP.
pub fn run_solver(instance: &Instance, solver: Solver, threads: usize, config: &BenchConfig) -> Run {
    let start = Instant::now();
    let result = match solver {
        Solver::Exhdfs => exhaustive_dfs(instance, Some(config.time_limit)).result,
        Solver::Dfbnb => dfbnb(instance, Some(config.time_limit)).result,
        Solver::Lpdp => build_hierarchy(&instance.graph, &config.partition).and_then(|h| {
            let mode = if threads <= 1 {
                SolveMode::Serial
            } else {
                SolveMode::Parallel(ParallelConfig { threads, depth_limit: config.depth_limit, block_parallelism: true })
            };
            let remaining = config.time_limit.saturating_sub(start.elapsed());
            solve_with_limits(instance, &h, &mode, Limits { time: Some(remaining), max_entries: config.max_entries })
                .map(|s| s.path)
        }),
    };
    classify(result, start.elapsed())
}

/// One record per (instance, solver, threads); baselines only get a
/// single-thread row. A failing cell is recorded and never aborts the sweep.
pub fn run_benchmark(instances: &[(String, Instance)], config: &BenchConfig) -> Vec<BenchRecord> {
    let mut records = Vec::new();
    for (name, instance) in instances {
        for &solver in &config.solvers {
            let thread_counts = if solver == Solver::Lpdp { config.threads.clone() } else { vec![1] };
            for threads in thread_counts {
                let run = run_solver(instance, solver, threads, config);
                log::info!("{name} {solver} x{threads}: {} in {:.3?}", run.status, run.elapsed);
                let lpdp = solver == Solver::Lpdp;
                records.push(BenchRecord {
                    instance: name.clone(),
                    solver,
                    threads,
                    eps: lpdp.then_some(config.partition.epsilon),
                    partitioner: if lpdp { "internal".into() } else { String::new() },
                    time_ms: run.elapsed.as_secs_f64() * 1e3,
                    status: run.status,
                    weight: run.path.map(|p| p.weight),
                });
            }
        }
    }
    records
}

fn sort_records(records: &mut [BenchRecord]) {
    records.sort_by(|a, b| (&a.instance, a.solver, a.threads).cmp(&(&b.instance, b.solver, b.threads)));
}

pub const CSV_HEADER: &str = "instance,solver,threads,eps,partitioner,time_ms,status,weight";

/// CSV text with rows ordered by (instance, solver, threads).
pub fn emit_csv(records: &[BenchRecord]) -> Result<String> {
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in &sorted {
        writer.serialize(r)?;
    }
    let body = String::from_utf8(writer.into_inner().map_err(|e| Error::Io(e.into_error()))?)
        .expect("csv output is utf-8");
    Ok(format!("{CSV_HEADER}\n{body}"))
}

pub fn parse_csv<R: Read>(reader: R) -> Result<Vec<BenchRecord>> {
    let mut reader = csv::Reader::from_reader(reader);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Parse { line: 1, msg: format!("expected header {CSV_HEADER:?}") });
    }
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Speedup of parallel LPDP over serial LPDP for one thread count, over
/// the instances both solved.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupSummary {
    pub threads: usize,
    pub instances: usize,
    pub average: f64,
    /// Summed serial time over summed parallel time.
    pub total: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupRow {
    pub all: SpeedupSummary,
    /// Instances whose serial time exceeds `5 * threads` seconds.
    pub big: SpeedupSummary,
}

fn summarize(threads: usize, pairs: &[(f64, f64)]) -> SpeedupSummary {
    let mut ratios: Vec<f64> = pairs.iter().map(|&(s, p)| s / p).collect();
    ratios.sort_by(f64::total_cmp);
    let k = ratios.len();
    let median = match k {
        0 => f64::NAN,
        _ if k % 2 == 1 => ratios[k / 2],
        _ => (ratios[k / 2 - 1] + ratios[k / 2]) / 2.0,
    };
    let serial: f64 = pairs.iter().map(|p| p.0).sum();
    let parallel: f64 = pairs.iter().map(|p| p.1).sum();
    SpeedupSummary {
        threads,
        instances: k,
        average: if k == 0 { f64::NAN } else { ratios.iter().sum::<f64>() / k as f64 },
        total: serial / parallel,
        median,
    }
}

/// Whether a serial time in seconds counts as big for `threads` threads.
pub fn is_big(serial_secs: f64, threads: usize) -> bool {
    serial_secs > 5.0 * threads as f64
}

/// Speedup rows for every LPDP thread count above 1.
pub fn speedups(records: &[BenchRecord]) -> Vec<SpeedupRow> {
    let solved = |r: &&BenchRecord| r.solver == Solver::Lpdp && r.status == RunStatus::Solved;
    let serial: BTreeMap<&str, f64> =
        records.iter().filter(solved).filter(|r| r.threads == 1).map(|r| (r.instance.as_str(), r.time_ms)).collect();
    let mut by_threads: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for r in records.iter().filter(solved).filter(|r| r.threads > 1) {
        if let Some(&s) = serial.get(r.instance.as_str()) {
            by_threads.entry(r.threads).or_default().push((s / 1e3, r.time_ms / 1e3));
        }
    }
    by_threads
        .into_iter()
        .map(|(threads, pairs)| {
            let big: Vec<_> = pairs.iter().copied().filter(|&(s, _)| is_big(s, threads)).collect();
            SpeedupRow { all: summarize(threads, &pairs), big: summarize(threads, &big) }
        })
        .collect()
}

/// Sorted solve times in seconds of one solver, the data of a cactus plot.
pub fn cactus(records: &[BenchRecord], solver: Solver, threads: usize) -> Vec<f64> {
    let mut times: Vec<f64> = records
        .iter()
        .filter(|r| r.solver == solver && r.threads == threads && r.status == RunStatus::Solved)
        .map(|r| r.time_ms / 1e3)
        .collect();
    times.sort_by(f64::total_cmp);
    times
}

/// Instances where two finished solvers report different weights.
pub fn weight_disagreements(records: &[BenchRecord]) -> Vec<String> {
    let mut seen: BTreeMap<&str, f64> = BTreeMap::new();
    let mut bad = Vec::new();
    for r in records {
        if let Some(w) = r.weight {
            match seen.get(r.instance.as_str()) {
                Some(&x) if x != w => bad.push(r.instance.clone()),
                Some(_) => {}
                None => {
                    seen.insert(&r.instance, w);
                }
            }
        }
    }
    bad.sort();
    bad.dedup();
    bad
}

/// Writes `<name>.graph` and `<name>.problem` into `dir`.
pub fn save_instance(dir: &Path, name: &str, instance: &Instance) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut g = fs::File::create(dir.join(format!("{name}.graph")))?;
    write_graph(&instance.graph, &mut g)?;
    let mut p = fs::File::create(dir.join(format!("{name}.problem")))?;
    write_problem(instance.source, instance.target, &mut p)?;
    p.flush()?;
    Ok(())
}

pub fn load_instance(graph_path: &Path) -> Result<Instance> {
    let graph = load_graph(BufReader::new(fs::File::open(graph_path)?))?;
    let problem = graph_path.with_extension("problem");
    let (s, t): (VertexId, VertexId) = read_problem(BufReader::new(fs::File::open(&problem)?))?;
    Instance::new(graph, s, t)
}

/// Every `*.graph` file with a `.problem` sidecar in `dir`, sorted by name.
pub fn load_suite(dir: &Path) -> Result<Vec<(String, Instance)>> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "graph") && p.with_extension("problem").exists())
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().expect("file name").to_string_lossy().into_owned();
            load_instance(&p).map(|i| (name, i))
        })
        .collect()
}
