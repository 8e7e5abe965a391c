//! Shared-memory parallel solving.
//!
//! Two sources of parallelism are combined in one work queue:
//!
//! * blocks whose children are all solved can be solved independently;
//! * the search inside a block is cut at a fixed recursion depth, each
//!   deferred call becoming a branch that any thread can run.
//!
//! A worker that pulls a block builds its auxiliary graph, runs the search
//! down to the depth limit and appends the resulting branches to the queue.
//! The worker finishing the last branch of a block freezes its table and
//! releases the parent once all of the parent's children are frozen.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex, OnceLock};
use std::time::Duration;

use crate::error::{Error, Result};
use crate::graph::Instance;
use crate::lpdp::{
    solve_tables, AuxiliaryGraph, Limits, BlockLayout, BlockSolutionTable, BranchContext, CandidateSink,
    ChildTable, ConcurrentTable, LpdpStats, Search, SearchControl, SearchStats, SolveMode,
};
use crate::partition::PartitionHierarchy;

pub const DEFAULT_DEPTH_LIMIT: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelConfig {
    pub threads: usize,
    pub depth_limit: usize,
    pub block_parallelism: bool,
}

impl Default for ParallelConfig {
    fn default() -> Self {
        ParallelConfig { threads: 1, depth_limit: DEFAULT_DEPTH_LIMIT, block_parallelism: true }
    }
}

impl ParallelConfig {
    pub fn with_threads(threads: usize) -> Self {
        ParallelConfig { threads, ..Default::default() }
    }

    fn check(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(Error::OutOfRange("thread count must be at least 1".into()));
        }
        if self.depth_limit == 0 {
            return Err(Error::OutOfRange("depth limit must be at least 1".into()));
        }
        Ok(())
    }
}

/// Runs the search of one block down to `depth_limit`; candidates above the
/// cutoff go to `sink`, the deferred calls are returned.
pub fn enumerate_branches<S: CandidateSink>(
    aux: &AuxiliaryGraph,
    children: &[ChildTable<'_>],
    depth_limit: usize,
    control: &SearchControl,
    sink: S,
) -> (Vec<BranchContext>, SearchStats, S) {
    let mut search = Search::new(aux, children, control, sink);
    let branches = search.enumerate(depth_limit);
    let stats = search.stats();
    (branches, stats, search.into_sink())
}

/// Solves one block with `config.threads` threads pulling branches from a
/// shared queue in order.
pub fn run_block_parallel(
    aux: &AuxiliaryGraph,
    children: &[ChildTable<'_>],
    boundary: Vec<crate::graph::VertexId>,
    config: &ParallelConfig,
    control: &SearchControl,
) -> Result<(BlockSolutionTable, SearchStats)> {
    config.check()?;
    let shared = ConcurrentTable::default();
    let (branches, mut stats, _) = enumerate_branches(aux, children, config.depth_limit, control, &shared);
    let next = AtomicUsize::new(0);
    let executed = AtomicUsize::new(0);
    let worker_stats: Vec<SearchStats> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..config.threads)
            .map(|_| {
                scope.spawn(|| {
                    let mut search = Search::new(aux, children, control, &shared);
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(branch) = branches.get(i) else { break };
                        search.resume(branch.clone());
                        executed.fetch_add(1, Ordering::Relaxed);
                        if search.aborted() {
                            break;
                        }
                    }
                    search.stats()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    if control.is_cancelled() {
        return Err(control.error());
    }
    debug_assert_eq!(executed.load(Ordering::Relaxed), branches.len());
    for s in worker_stats {
        stats.nodes += s.nodes;
        stats.candidates += s.candidates;
    }
    Ok((BlockSolutionTable::from_concurrent(aux.level, aux.block, boundary, shared), stats))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Start,
    Finish,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleEvent {
    pub level: usize,
    pub block: usize,
    pub kind: EventKind,
}

/// Checks that every block starts after all of its children finished.
pub fn respects_containment(hierarchy: &PartitionHierarchy, events: &[ScheduleEvent]) -> bool {
    let mut finished: Vec<Vec<bool>> =
        (0..hierarchy.level_count()).map(|l| vec![false; hierarchy.block_count(l)]).collect();
    for e in events {
        match e.kind {
            EventKind::Start => {
                if e.level > 0 && hierarchy.children(e.level, e.block).iter().any(|&c| !finished[e.level - 1][c]) {
                    return false;
                }
            }
            EventKind::Finish => finished[e.level][e.block] = true,
        }
    }
    finished.iter().flatten().all(|&f| f)
}

/// Order in which blocks run without block parallelism: bottom-up, by id.
pub fn serial_block_order(hierarchy: &PartitionHierarchy) -> Vec<(usize, usize)> {
    (0..hierarchy.level_count()).flat_map(|l| (0..hierarchy.block_count(l)).map(move |b| (l, b))).collect()
}

/// Runs `task` for every block so that a block starts only after its
/// children finished. With block parallelism, up to `config.threads` ready
/// blocks run at once; without it blocks run in [`serial_block_order`].
pub fn schedule_blocks<F>(hierarchy: &PartitionHierarchy, config: &ParallelConfig, task: F) -> Result<Vec<ScheduleEvent>>
where
    F: Fn(usize, usize) -> Result<()> + Sync,
{
    config.check()?;
    let events = Mutex::new(Vec::new());
    if !config.block_parallelism || config.threads == 1 {
        for (level, block) in serial_block_order(hierarchy) {
            events.lock().unwrap().push(ScheduleEvent { level, block, kind: EventKind::Start });
            task(level, block)?;
            events.lock().unwrap().push(ScheduleEvent { level, block, kind: EventKind::Finish });
        }
        return Ok(events.into_inner().unwrap());
    }
    let deps = Dependencies::new(hierarchy);
    let ready = Mutex::new(ReadyQueue { blocks: (0..hierarchy.block_count(0)).map(|b| (0, b)).collect(), error: None });
    let cv = Condvar::new();
    let total = serial_block_order(hierarchy).len();
    let finished = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..config.threads {
            scope.spawn(|| loop {
                let (level, block) = {
                    let mut q = ready.lock().unwrap();
                    loop {
                        if q.error.is_some() || finished.load(Ordering::SeqCst) == total {
                            return;
                        }
                        if let Some(job) = q.blocks.pop_front() {
                            break job;
                        }
                        q = cv.wait(q).unwrap();
                    }
                };
                events.lock().unwrap().push(ScheduleEvent { level, block, kind: EventKind::Start });
                let outcome = task(level, block);
                let mut q = ready.lock().unwrap();
                match outcome {
                    Ok(()) => {
                        events.lock().unwrap().push(ScheduleEvent { level, block, kind: EventKind::Finish });
                        finished.fetch_add(1, Ordering::SeqCst);
                        if let Some(parent) = deps.finish(level, block) {
                            q.blocks.push_back(parent);
                        }
                    }
                    Err(e) => q.error = Some(e),
                }
                cv.notify_all();
            });
        }
    });
    if let Some(e) = ready.into_inner().unwrap().error {
        return Err(e);
    }
    Ok(events.into_inner().unwrap())
}

struct ReadyQueue {
    blocks: VecDeque<(usize, usize)>,
    error: Option<Error>,
}

/// Unfinished-children counters; finishing the last child releases the parent.
struct Dependencies {
    parents: Vec<Vec<usize>>,
    waiting: Vec<Vec<AtomicUsize>>,
}

impl Dependencies {
    fn new(hierarchy: &PartitionHierarchy) -> Self {
        let levels = hierarchy.level_count();
        let parents = (0..levels.saturating_sub(1)).map(|l| hierarchy.parents(l)).collect::<Vec<_>>();
        let mut waiting: Vec<Vec<AtomicUsize>> =
            (0..levels).map(|l| (0..hierarchy.block_count(l)).map(|_| AtomicUsize::new(0)).collect()).collect();
        for (l, ps) in parents.iter().enumerate() {
            for &p in ps {
                *waiting[l + 1][p].get_mut() += 1;
            }
        }
        Dependencies { parents, waiting }
    }

    fn finish(&self, level: usize, block: usize) -> Option<(usize, usize)> {
        let parent = *self.parents.get(level)?.get(block)?;
        (self.waiting[level + 1][parent].fetch_sub(1, Ordering::SeqCst) == 1).then_some((level + 1, parent))
    }
}

/// A block whose branches are being executed.
struct Job<'s> {
    level: usize,
    block: usize,
    aux: AuxiliaryGraph,
    handles: Vec<ChildTable<'s>>,
    table: ConcurrentTable,
    pending: AtomicUsize,
}

enum Task<'s> {
    Block(usize, usize),
    Branch(Arc<Job<'s>>, BranchContext),
}

struct Queue<'s> {
    tasks: VecDeque<Task<'s>>,
    /// blocks still to release without block parallelism
    serial: VecDeque<(usize, usize)>,
    done: bool,
    error: Option<Error>,
    stats: SearchStats,
}

struct Engine<'s> {
    instance: &'s Instance,
    hierarchy: &'s PartitionHierarchy,
    layout: &'s BlockLayout,
    config: &'s ParallelConfig,
    control: &'s SearchControl,
    frozen: &'s [Vec<OnceLock<BlockSolutionTable>>],
    deps: Dependencies,
    queue: Mutex<Queue<'s>>,
    cv: Condvar,
    events: Mutex<Vec<ScheduleEvent>>,
}

impl<'s> Engine<'s> {
    fn fail(&self, e: Error) {
        let mut q = self.queue.lock().unwrap();
        q.error.get_or_insert(e);
        q.done = true;
        self.control.cancel();
        self.cv.notify_all();
    }

    fn push(&self, tasks: impl IntoIterator<Item = Task<'s>>, front: bool) {
        let mut q = self.queue.lock().unwrap();
        for t in tasks {
            if front {
                q.tasks.push_front(t);
            } else {
                q.tasks.push_back(t);
            }
        }
        self.cv.notify_all();
    }

    fn add_stats(&self, s: SearchStats) {
        let mut q = self.queue.lock().unwrap();
        q.stats.nodes += s.nodes;
        q.stats.candidates += s.candidates;
        q.stats.branches += s.branches;
    }

    fn next_task(&self) -> Option<Task<'s>> {
        let mut q = self.queue.lock().unwrap();
        loop {
            if q.done {
                return None;
            }
            if let Some(t) = q.tasks.pop_front() {
                return Some(t);
            }
            q = self.cv.wait(q).unwrap();
        }
    }

    fn worker(&self) {
        while let Some(task) = self.next_task() {
            let outcome = match task {
                Task::Block(level, block) => self.start_block(level, block),
                Task::Branch(job, branch) => self.run_branch(job, branch),
            };
            if let Err(e) = outcome {
                self.fail(e);
                return;
            }
        }
    }

    fn start_block(&self, level: usize, block: usize) -> Result<()> {
        self.events.lock().unwrap().push(ScheduleEvent { level, block, kind: EventKind::Start });
        let aux = AuxiliaryGraph::build(&self.instance.graph, self.hierarchy, self.layout, level, block)?;
        let handles: Vec<ChildTable<'s>> = aux
            .children
            .iter()
            .map(|c| match c.block {
                None => Ok(ChildTable::Singleton),
                Some(b) => self.frozen[level - 1][b]
                    .get()
                    .map(ChildTable::Table)
                    .ok_or_else(|| Error::Inconsistent(format!("child block {b} not solved before its parent"))),
            })
            .collect::<Result<_>>()?;
        let job = Arc::new(Job { level, block, aux, handles, table: ConcurrentTable::default(), pending: AtomicUsize::new(0) });
        let (branches, stats, _) =
            enumerate_branches(&job.aux, &job.handles, self.config.depth_limit, self.control, &job.table);
        self.add_stats(stats);
        if self.control.is_cancelled() {
            return Err(self.control.error());
        }
        if branches.is_empty() {
            return self.finish_block(&job);
        }
        job.pending.store(branches.len(), Ordering::SeqCst);
        self.push(branches.into_iter().map(|b| Task::Branch(Arc::clone(&job), b)), false);
        Ok(())
    }

    fn run_branch(&self, job: Arc<Job<'s>>, branch: BranchContext) -> Result<()> {
        let mut search = Search::new(&job.aux, &job.handles, self.control, &job.table);
        search.resume(branch);
        self.add_stats(search.stats());
        if search.aborted() {
            return Err(self.control.error());
        }
        drop(search);
        if job.pending.fetch_sub(1, Ordering::SeqCst) == 1 {
            self.finish_block(&job)?;
        }
        Ok(())
    }

    fn finish_block(&self, job: &Job<'s>) -> Result<()> {
        let (level, block) = (job.level, job.block);
        let table = BlockSolutionTable::from_concurrent(
            level,
            block,
            self.layout.boundary[level][block].clone(),
            job.table.snapshot(),
        );
        if self.frozen[level][block].set(table).is_err() {
            return Err(Error::Inconsistent(format!("block {block} on level {level} solved twice")));
        }
        self.events.lock().unwrap().push(ScheduleEvent { level, block, kind: EventKind::Finish });
        if level == self.hierarchy.top_level() {
            let mut q = self.queue.lock().unwrap();
            q.done = true;
            self.cv.notify_all();
            return Ok(());
        }
        if self.config.block_parallelism {
            if let Some((l, b)) = self.deps.finish(level, block) {
                self.push([Task::Block(l, b)], true);
            }
        } else {
            let mut q = self.queue.lock().unwrap();
            if let Some((l, b)) = q.serial.pop_front() {
                q.tasks.push_front(Task::Block(l, b));
            }
            self.cv.notify_all();
        }
        Ok(())
    }
}

/// Solves every block of the hierarchy with the shared work queue.
pub fn solve_levels(
    instance: &Instance,
    hierarchy: &PartitionHierarchy,
    layout: &BlockLayout,
    config: &ParallelConfig,
    control: &SearchControl,
) -> Result<(Vec<Vec<BlockSolutionTable>>, LpdpStats)> {
    solve_levels_traced(instance, hierarchy, layout, config, control).map(|(t, s, _)| (t, s))
}

/// [`solve_levels`] also returning the block start/finish events.
pub fn solve_levels_traced(
    instance: &Instance,
    hierarchy: &PartitionHierarchy,
    layout: &BlockLayout,
    config: &ParallelConfig,
    control: &SearchControl,
) -> Result<(Vec<Vec<BlockSolutionTable>>, LpdpStats, Vec<ScheduleEvent>)> {
    config.check()?;
    let frozen: Vec<Vec<OnceLock<BlockSolutionTable>>> =
        (0..hierarchy.level_count()).map(|l| (0..hierarchy.block_count(l)).map(|_| OnceLock::new()).collect()).collect();
    let mut initial = VecDeque::new();
    let mut serial = VecDeque::new();
    if config.block_parallelism {
        initial.extend((0..hierarchy.block_count(0)).map(|b| Task::Block(0, b)));
    } else {
        serial.extend(serial_block_order(hierarchy));
        let first = serial.pop_front().expect("at least one block");
        initial.push_back(Task::Block(first.0, first.1));
    }
    let engine = Engine {
        instance,
        hierarchy,
        layout,
        config,
        control,
        frozen: &frozen,
        deps: Dependencies::new(hierarchy),
        queue: Mutex::new(Queue { tasks: initial, serial, done: false, error: None, stats: SearchStats::default() }),
        cv: Condvar::new(),
        events: Mutex::new(Vec::new()),
    };
    std::thread::scope(|scope| {
        for _ in 0..config.threads {
            scope.spawn(|| engine.worker());
        }
    });
    let events = std::mem::take(&mut *engine.events.lock().unwrap());
    let (error, search_stats) = {
        let mut q = engine.queue.lock().unwrap();
        q.tasks.clear();
        (q.error.take(), q.stats)
    };
    drop(engine);
    if let Some(e) = error {
        return Err(e);
    }
    let tables = frozen
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|cell| cell.into_inner().ok_or_else(|| Error::Inconsistent("block left unsolved".into())))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let stats = LpdpStats { search: search_stats, ..Default::default() };
    Ok((tables, stats, events))
}

/// Share of the summed block solve times spent in each block, from a serial
/// run; `shares[level][block]`.
pub fn profile_block_dominance(
    instance: &Instance,
    hierarchy: &PartitionHierarchy,
    time_limit: Option<Duration>,
) -> Result<Vec<Vec<f64>>> {
    let limits = Limits { time: time_limit, ..Default::default() };
    let (_, stats) = solve_tables(instance, hierarchy, &SolveMode::Serial, limits)?;
    let total: f64 = stats.block_times.iter().flatten().map(Duration::as_secs_f64).sum();
    let blocks: usize = stats.block_times.iter().map(Vec::len).sum();
    Ok(stats
        .block_times
        .iter()
        .map(|row| {
            row.iter()
                .map(|t| if total > 0.0 { t.as_secs_f64() / total } else { 1.0 / blocks as f64 })
                .collect()
        })
        .collect())
}

/// Largest per-block share from [`profile_block_dominance`].
pub fn dominant_share(shares: &[Vec<f64>]) -> f64 {
    shares.iter().flatten().copied().fold(0.0, f64::max)
}
