//! Experiment execution: warmup, measurement, and sweeps.

use std::hint::black_box;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use super::metrics::{summarize, LatencySample, MetricsSummary, OperatorBreakdown, SlaConfig};
use super::pinning::{available_cores, pin_current_thread, PinningOutcome};
use super::HarnessError;
use crate::config::{validate, OpKind, RecModelConfig};
use crate::kernels::{forward, init_weights, ModelInstance, Timing};
use crate::rng::{derive_seed, Stream};
use crate::workload::{gen_request, plan_queries, ArrivalPlan, QueryPlan};

/// Global cooperative-shutdown flag. A signal handler sets it; workers
/// poll it between queries and runs report themselves truncated.
static SHUTDOWN: AtomicBool = AtomicBool::new(false);

pub fn shutdown_flag() -> &'static AtomicBool {
    &SHUTDOWN
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pinning {
    None,
    OneCorePerInstance,
}

/// Everything one experiment needs: the model, the sweep axes, arrival
/// shape, pinning, SLA, and the root seed all derived randomness flows
/// from.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub model: RecModelConfig,
    pub batch_sizes: Vec<u32>,
    pub colocation_degrees: Vec<u32>,
    pub arrival: ArrivalPlan,
    pub pinning: Pinning,
    pub seed: u64,
    pub sla: SlaConfig,
    /// Co-located instances normally get independent weight copies to
    /// mimic distinct models contending for cache; sharing one copy is
    /// available for contrast experiments.
    pub shared_weights: bool,
}

impl RunPlan {
    pub fn new(model: RecModelConfig, arrival: ArrivalPlan, seed: u64) -> Self {
        Self {
            model,
            batch_sizes: vec![1],
            colocation_degrees: vec![1],
            arrival,
            pinning: Pinning::None,
            seed,
            sla: SlaConfig::default(),
            shared_weights: false,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.batch_sizes.is_empty() || self.batch_sizes.contains(&0) {
            return Err(HarnessError::InvalidPlan("batch sizes must be positive and non-empty".into()));
        }
        if self.colocation_degrees.is_empty() || self.colocation_degrees.contains(&0) {
            return Err(HarnessError::InvalidPlan(
                "colocation degrees must be positive and non-empty".into(),
            ));
        }
        let violations = validate(&self.model);
        if !violations.is_empty() {
            return Err(HarnessError::InvalidPlan(format!(
                "model config invalid: {}",
                crate::config::ViolationList(violations)
            )));
        }
        self.arrival.validate()?;
        self.sla.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SingleRun {
    pub summary: MetricsSummary,
    pub breakdown: OperatorBreakdown,
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct ColocatedRun {
    pub per_instance: Vec<MetricsSummary>,
    pub per_instance_breakdowns: Vec<Option<OperatorBreakdown>>,
    /// Latency statistics over the union of all instances' samples.
    pub pooled: MetricsSummary,
    /// Sum of per-instance throughputs.
    pub aggregate_inf_s: f64,
    pub aggregate_items_s: f64,
    pub pinning: PinningOutcome,
    pub truncated: bool,
}

/// One cell of a batch x colocation sweep; failed cells carry the error
/// text instead of aborting the sweep.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub batch: u32,
    pub colocation: u32,
    pub run: Option<ColocatedRun>,
    pub error: Option<String>,
}

/// Runs one instance at one batch size: warmup, then measured queries,
/// with per-operator timing collected throughout.
pub fn run_single(
    instance: &ModelInstance,
    plan: &RunPlan,
    batch: u32,
) -> Result<SingleRun, HarnessError> {
    plan.validate()?;
    if plan.colocation_degrees != [1] {
        return Err(HarnessError::InvalidPlan(
            "run_single requires colocation_degrees = [1]; use run_colocated for N > 1".into(),
        ));
    }
    let out = drive(&[instance], plan, batch)?;
    let summary = summarize(&out.per_instance_samples[0], &plan.sla)?;
    let breakdown = OperatorBreakdown::from_kind_totals(&out.per_instance_kind_totals[0])
        .ok_or(HarnessError::NoResults)?;
    Ok(SingleRun { summary, breakdown, truncated: out.truncated })
}

/// Runs `n` co-located instances of the model concurrently, each with its
/// own worker thread, weight copy (unless shared), and request stream.
pub fn run_colocated(
    model: &RecModelConfig,
    n: u32,
    plan: &RunPlan,
    batch: u32,
) -> Result<ColocatedRun, HarnessError> {
    plan.validate()?;
    if n == 0 {
        return Err(HarnessError::InvalidPlan("colocation degree must be at least 1".into()));
    }
    let owned: Vec<ModelInstance> = if plan.shared_weights {
        vec![init_weights(model, derive_seed(plan.seed, Stream::ModelWeights(0)))?]
    } else {
        (0..n)
            .map(|i| init_weights(model, derive_seed(plan.seed, Stream::ModelWeights(i as u64))))
            .collect::<Result<_, _>>()?
    };
    let refs: Vec<&ModelInstance> =
        (0..n as usize).map(|i| &owned[if plan.shared_weights { 0 } else { i }]).collect();

    let out = drive(&refs, plan, batch)?;
    let per_instance: Vec<MetricsSummary> = out
        .per_instance_samples
        .iter()
        .map(|s| summarize(s, &plan.sla))
        .collect::<Result<_, _>>()?;
    let all_samples: Vec<_> = out.per_instance_samples.iter().flatten().copied().collect();
    let pooled = summarize(&all_samples, &plan.sla)?;
    let per_instance_breakdowns = out
        .per_instance_kind_totals
        .iter()
        .map(|t| OperatorBreakdown::from_kind_totals(t))
        .collect();
    let aggregate_inf_s = per_instance.iter().map(|m| m.throughput_inf_s).sum();
    let aggregate_items_s = per_instance.iter().map(|m| m.throughput_items_s).sum();
    Ok(ColocatedRun {
        per_instance,
        per_instance_breakdowns,
        pooled,
        aggregate_inf_s,
        aggregate_items_s,
        pinning: out.pinning,
        truncated: out.truncated,
    })
}

/// Cartesian sweep over the plan's batch sizes and colocation degrees.
/// A failing cell is recorded and the sweep continues.
pub fn sweep(plan: &RunPlan) -> Result<Vec<SweepCell>, HarnessError> {
    plan.validate()?;
    let mut cells = Vec::with_capacity(plan.batch_sizes.len() * plan.colocation_degrees.len());
    for &batch in &plan.batch_sizes {
        for &n in &plan.colocation_degrees {
            let cell = match run_colocated(&plan.model, n, plan, batch) {
                Ok(run) => SweepCell { batch, colocation: n, run: Some(run), error: None },
                Err(e) => {
                    SweepCell { batch, colocation: n, run: None, error: Some(e.to_string()) }
                }
            };
            cells.push(cell);
            if SHUTDOWN.load(Ordering::Relaxed) {
                return Ok(cells);
            }
        }
    }
    Ok(cells)
}

struct DriveOutput {
    per_instance_samples: Vec<Vec<LatencySample>>,
    per_instance_kind_totals: Vec<[(OpKind, u64); 5]>,
    pinning: PinningOutcome,
    truncated: bool,
}

struct WorkerSpec<'a> {
    instance: &'a ModelInstance,
    instance_id: u32,
    driver_id: u64,
    pin_core: Option<usize>,
    offsets: Option<Vec<Duration>>,
}

/// Spawns the worker threads, streams their samples into the collector,
/// and merges per-driver operator totals per instance.
fn drive(
    instances: &[&ModelInstance],
    plan: &RunPlan,
    batch: u32,
) -> Result<DriveOutput, HarnessError> {
    let n = instances.len();
    if plan.pinning == Pinning::OneCorePerInstance {
        let available = available_cores();
        if n > available {
            return Err(HarnessError::PinningImpossible { requested: n as u32, available });
        }
    }

    // Resolve per-instance schedules up front so plan errors surface
    // before any thread spawns.
    let mut specs: Vec<WorkerSpec> = Vec::new();
    for (i, &instance) in instances.iter().enumerate() {
        let arrival_seed = derive_seed(plan.seed, Stream::Arrival(i as u64));
        match plan_queries(&plan.arrival, arrival_seed)? {
            QueryPlan::ClosedLoop { concurrency } => {
                for d in 0..concurrency {
                    specs.push(WorkerSpec {
                        instance,
                        instance_id: i as u32,
                        driver_id: (i as u64) * concurrency as u64 + d as u64,
                        pin_core: (plan.pinning == Pinning::OneCorePerInstance).then_some(i),
                        offsets: None,
                    });
                }
            }
            QueryPlan::OpenLoop { offsets } => {
                specs.push(WorkerSpec {
                    instance,
                    instance_id: i as u32,
                    driver_id: i as u64,
                    pin_core: (plan.pinning == Pinning::OneCorePerInstance).then_some(i),
                    offsets: Some(offsets),
                });
            }
        }
    }

    let pin_failed = AtomicBool::new(false);
    let run_start = Instant::now();
    let (tx, rx) = mpsc::channel::<LatencySample>();

    let mut per_instance_samples: Vec<Vec<LatencySample>> = vec![Vec::new(); n];
    let mut per_instance_kind_totals: Vec<[(OpKind, u64); 5]> = vec![zero_totals(); n];

    let worker_results: Vec<Result<(u32, [(OpKind, u64); 5]), HarnessError>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = specs
                .into_iter()
                .map(|spec| {
                    let tx = tx.clone();
                    let pin_failed = &pin_failed;
                    let run_start = &run_start;
                    scope.spawn(move || worker_loop(spec, plan, batch, run_start, tx, pin_failed))
                })
                .collect();
            drop(tx);
            // Single collector: the only writer of the result store.
            for sample in rx {
                per_instance_samples[sample.instance_id as usize].push(sample);
            }
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });

    for result in worker_results {
        let (instance_id, totals) = result?;
        let merged = &mut per_instance_kind_totals[instance_id as usize];
        for (slot, (kind, ns)) in merged.iter_mut().zip(totals) {
            debug_assert_eq!(slot.0, kind);
            slot.1 += ns;
        }
    }

    let pinning = match plan.pinning {
        Pinning::None => PinningOutcome::None,
        Pinning::OneCorePerInstance if pin_failed.load(Ordering::Relaxed) => {
            PinningOutcome::Unavailable
        }
        Pinning::OneCorePerInstance => PinningOutcome::Core,
    };
    Ok(DriveOutput {
        per_instance_samples,
        per_instance_kind_totals,
        pinning,
        truncated: SHUTDOWN.load(Ordering::Relaxed),
    })
}

fn zero_totals() -> [(OpKind, u64); 5] {
    [
        (OpKind::Fc, 0),
        (OpKind::Sls, 0),
        (OpKind::Concat, 0),
        (OpKind::Activation, 0),
        (OpKind::Other, 0),
    ]
}

fn now_ns(run_start: &Instant) -> u64 {
    run_start.elapsed().as_nanos() as u64
}

/// One driver thread: generates requests, runs forwards, and streams
/// post-warmup samples to the collector. Returns the per-kind operator
/// nanosecond totals over measured queries.
fn worker_loop(
    spec: WorkerSpec<'_>,
    plan: &RunPlan,
    batch: u32,
    run_start: &Instant,
    tx: mpsc::Sender<LatencySample>,
    pin_failed: &AtomicBool,
) -> Result<(u32, [(OpKind, u64); 5]), HarnessError> {
    if let Some(core) = spec.pin_core {
        if pin_current_thread(core).is_err() {
            pin_failed.store(true, Ordering::Relaxed);
        }
    }
    let duration_ns = plan.arrival.duration.as_nanos() as u64;
    let warmup_ns = plan.arrival.warmup.as_nanos() as u64;
    let mut totals = zero_totals();
    let mut measured: u64 = 0;

    let mut query: u64 = 0;
    loop {
        if SHUTDOWN.load(Ordering::Relaxed) || now_ns(run_start) >= duration_ns {
            break;
        }
        if let Some(offsets) = &spec.offsets {
            if query as usize >= offsets.len() {
                break;
            }
        }

        let req_seed =
            derive_seed(plan.seed, Stream::Request { instance: spec.driver_id, query });
        let request = gen_request(&plan.model, batch as usize, req_seed)?;

        // Open loop dispatches at the planned arrival time even when the
        // service thread is running behind; the gap shows up as queuing.
        let dispatch_ns = match &spec.offsets {
            Some(offsets) => {
                let target = offsets[query as usize];
                wait_until(run_start, target);
                target.as_nanos() as u64
            }
            None => now_ns(run_start),
        };
        let start_ns = now_ns(run_start).max(dispatch_ns);
        let (ctr, timings) = forward(spec.instance, &request, Timing::On)?;
        black_box(&ctr);
        let end_ns = now_ns(run_start).max(start_ns);
        query += 1;

        let warm = dispatch_ns < warmup_ns || query <= plan.arrival.warmup_queries;
        if !warm {
            measured += 1;
            for (slot, (kind, ns)) in totals.iter_mut().zip(timings.kind_totals()) {
                debug_assert_eq!(slot.0, kind);
                slot.1 += ns;
            }
            let _ = tx.send(LatencySample {
                instance_id: spec.instance_id,
                query_id: query - 1,
                dispatch_ns,
                start_ns,
                end_ns,
                batch,
            });
            if plan.arrival.query_limit.is_some_and(|limit| measured >= limit) {
                break;
            }
        }
    }
    Ok((spec.instance_id, totals))
}

/// Sleeps coarsely, then spins the last stretch, so open-loop dispatch
/// times stay close to the schedule without burning a core for long gaps.
fn wait_until(run_start: &Instant, target: Duration) {
    loop {
        let now = run_start.elapsed();
        if now >= target {
            return;
        }
        let gap = target - now;
        if gap > Duration::from_millis(1) {
            std::thread::sleep(gap - Duration::from_millis(1));
        } else {
            std::hint::spin_loop();
        }
    }
}
