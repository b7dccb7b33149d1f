//! Acceptance suite: one test per suite-level requirement.
//!
//! Functional requirements assert exact or toleranced values against
//! independent oracles; performance requirements assert host-relative
//! directional properties (orderings, ratios) rather than absolute
//! numbers. Every test prints the values it measured, and all tests
//! share one lock so timing measurements never overlap.

use std::path::Path;
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use recbench_core::cachesim::{
    interleave, misses_per_kilo_lookups, simulate, AccessTrace, CacheLevelConfig, HierarchyConfig,
    HierarchySim, InclusionPolicy, TableAddressMap,
};
use recbench_core::config::{
    operational_intensity, preset, storage_bytes, ModelClass, OpKind, OpShape, RecModelConfig,
};
use recbench_core::harness::{
    latency_bounded_throughput, percentile, run_colocated, run_single, summarize, LatencySample,
    MetricsSummary, RunPlan, SlaConfig, SlaSelection,
};
use recbench_core::kernels::{init_weights, sls, EmbeddingTable, SparseLookupBatch};
use recbench_core::rng::SplitMix64;
use recbench_core::workload::{gen_ids, ArrivalMode, ArrivalPlan, IdDistribution};

static SUITE_LOCK: Mutex<()> = Mutex::new(());

fn lock() -> std::sync::MutexGuard<'static, ()> {
    SUITE_LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn budget(test: &str, started: Instant, limit: Duration) {
    let elapsed = started.elapsed();
    println!("{test}: finished in {elapsed:.2?} (budget {limit:.0?})");
    assert!(elapsed < limit, "{test} exceeded its runtime budget: {elapsed:?}");
}

/// Closed-loop plan that measures exactly `measured` queries after
/// `warmup_queries` warmup queries.
fn fixed_count_plan(model: RecModelConfig, measured: u64, warmup_queries: u64, seed: u64) -> RunPlan {
    let arrival = ArrivalPlan {
        mode: ArrivalMode::ClosedLoop { concurrency: 1 },
        duration: Duration::from_secs(280),
        warmup: Duration::from_millis(1),
        warmup_queries,
        query_limit: Some(measured),
    };
    let mut plan = RunPlan::new(model, arrival, seed);
    plan.sla = SlaConfig::default();
    plan
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values[values.len() / 2]
}

// --- 1. SLS oracle equivalence ------------------------------------------

/// Independent brute-force oracle: out = S * table, where S[k][r] is the
/// multiplicity of row r in slice k.
fn one_hot_matmul(table: &EmbeddingTable, batch: &SparseLookupBatch) -> Vec<f32> {
    let (k_rows, r_rows, dim) = (batch.pooled_rows(), table.rows(), table.dim());
    let mut s = vec![0.0f32; k_rows * r_rows];
    let mut cursor = 0usize;
    for (k, &len) in batch.lengths().iter().enumerate() {
        for &id in &batch.ids()[cursor..cursor + len as usize] {
            s[k * r_rows + id as usize] += 1.0;
        }
        cursor += len as usize;
    }
    let mut out = vec![0.0f32; k_rows * dim];
    for k in 0..k_rows {
        for r in 0..r_rows {
            let m = s[k * r_rows + r];
            if m != 0.0 {
                for c in 0..dim {
                    out[k * dim + c] += m * table.row(r)[c];
                }
            }
        }
    }
    out
}

#[test]
fn c01_sls_matches_one_hot_oracle_on_1000_cases() {
    let _g = lock();
    let t0 = Instant::now();
    let mut rng = SplitMix64::new(0xACCE_0001);
    for case in 0..1_000 {
        let rows = (rng.next_u64_below(64) + 1) as usize;
        let dim = (rng.next_u64_below(8) + 1) as usize;
        let k = (rng.next_u64_below(8) + 1) as usize;
        let data: Vec<f32> = (0..rows * dim).map(|_| rng.next_f32_range(-4.0, 4.0)).collect();
        let table = EmbeddingTable::from_vec(rows, dim, data).unwrap();
        // slice lengths chosen so the total stays at or below 32
        let mut lengths = vec![0u32; k];
        let total_target = rng.next_u64_below(33) as usize;
        for _ in 0..total_target {
            let slot = rng.next_u64_below(k as u64) as usize;
            lengths[slot] += 1;
        }
        let total: usize = lengths.iter().map(|&l| l as usize).sum();
        let ids: Vec<u64> = (0..total).map(|_| rng.next_u64_below(rows as u64)).collect();
        let batch = SparseLookupBatch::new(lengths, ids).unwrap();

        let got = sls(&table, &batch).unwrap();
        let want = one_hot_matmul(&table, &batch);
        for (i, (g, w)) in got.data().iter().zip(&want).enumerate() {
            assert!(
                (g - w).abs() <= 1e-5 * w.abs().max(1.0),
                "case {case}, element {i}: sls {g} vs oracle {w}"
            );
        }
    }
    budget("c01", t0, Duration::from_secs(5));
}

// --- 2. Operational intensity -------------------------------------------

#[test]
fn c02_sls_operational_intensity_is_exactly_quarter() {
    let _g = lock();
    let t0 = Instant::now();
    let mut rng = SplitMix64::new(0xACCE_0002);
    for _ in 0..50 {
        let lookups = rng.next_u64_below(2_000) + 1;
        let dim = rng.next_u64_below(128) + 1;
        let v = operational_intensity(OpKind::Sls, OpShape::Sls { lookups, dim }).unwrap();
        assert_eq!(v, 0.25, "lookups={lookups} dim={dim}");
    }
    budget("c02", t0, Duration::from_secs(1));
}

// --- 3. Storage accounting ----------------------------------------------

#[test]
fn c03_embedding_storage_anchor_and_ratios() {
    let _g = lock();
    let t0 = Instant::now();
    let rmc1 = storage_bytes(&preset(ModelClass::Rmc1, 1.0).unwrap()).embedding_bytes;
    let rmc2 = storage_bytes(&preset(ModelClass::Rmc2, 1.0).unwrap()).embedding_bytes;
    let rmc3 = storage_bytes(&preset(ModelClass::Rmc3, 1.0).unwrap()).embedding_bytes;
    assert_eq!(rmc1, 64_000_000);
    let r2 = rmc2 as f64 / rmc1 as f64;
    let r3 = rmc3 as f64 / rmc1 as f64;
    println!("c03: embedding bytes rmc1={rmc1} rmc2={rmc2} rmc3={rmc3} (ratios 1:{r2}:{r3})");
    // targets 1 : 100 : 10, each within 2x
    assert!((50.0..=200.0).contains(&r2), "rmc2:rmc1 ratio {r2}");
    assert!((5.0..=20.0).contains(&r3), "rmc3:rmc1 ratio {r3}");
    budget("c03", t0, Duration::from_secs(1));
}

// --- 4. Operator breakdown direction -------------------------------------

#[test]
fn c04_operator_breakdown_direction_at_batch_16() {
    let _g = lock();
    let t0 = Instant::now();
    let scale = 1e-2;
    let mut fractions = Vec::new();
    for class in ModelClass::ALL {
        let model = preset(class, scale).unwrap();
        let instance = init_weights(&model, 0xBEEF).unwrap();
        let plan = fixed_count_plan(model, 250, 50, 17);
        let run = run_single(&instance, &plan, 16).unwrap();
        assert!(run.summary.count >= 200);
        println!(
            "c04: {class} fc={:.3} sls={:.3} concat={:.3} act={:.3} other={:.3}",
            run.breakdown.fc,
            run.breakdown.sls,
            run.breakdown.concat,
            run.breakdown.activation,
            run.breakdown.other
        );
        fractions.push(run.breakdown);
    }
    let (rmc1, rmc2, rmc3) = (fractions[0], fractions[1], fractions[2]);
    assert!(rmc3.fc > 0.7, "rmc3 FC fraction {:.3} should exceed 0.7", rmc3.fc);
    assert!(rmc2.sls > 0.5, "rmc2 SLS fraction {:.3} should exceed 0.5", rmc2.sls);
    assert!(
        rmc3.fc > rmc1.fc && rmc1.fc > rmc2.fc,
        "FC fraction ordering rmc3 ({:.3}) > rmc1 ({:.3}) > rmc2 ({:.3})",
        rmc3.fc,
        rmc1.fc,
        rmc2.fc
    );
    budget("c04", t0, Duration::from_secs(300));
}

// --- 5. Unit-batch latency ordering ---------------------------------------

#[test]
fn c05_unit_batch_latency_ordering_with_gaps() {
    let _g = lock();
    let t0 = Instant::now();
    let scale = 1e-2;
    let models: Vec<RecModelConfig> =
        ModelClass::ALL.iter().map(|&c| preset(c, scale).unwrap()).collect();
    let instances: Vec<_> = models.iter().map(|m| init_weights(m, 0xCAFE).unwrap()).collect();
    // interleave three repetitions per class and take medians, so one
    // noisy window cannot skew a single class
    let mut means: [Vec<f64>; 3] = Default::default();
    for rep in 0..3 {
        for (i, model) in models.iter().enumerate() {
            let plan = fixed_count_plan(model.clone(), 400, 50, 23 + rep);
            let run = run_single(&instances[i], &plan, 1).unwrap();
            means[i].push(run.summary.mean_us);
        }
    }
    let rmc1 = median(&mut means[0]);
    let rmc2 = median(&mut means[1]);
    let rmc3 = median(&mut means[2]);
    println!("c05: unit-batch mean latency rmc1={rmc1:.1}us rmc2={rmc2:.1}us rmc3={rmc3:.1}us");
    assert!(
        rmc3 > 1.2 * rmc2,
        "rmc3 ({rmc3:.1}us) should exceed rmc2 ({rmc2:.1}us) by more than 20%"
    );
    assert!(
        rmc2 > 1.2 * rmc1,
        "rmc2 ({rmc2:.1}us) should exceed rmc1 ({rmc1:.1}us) by more than 20%"
    );
    budget("c05", t0, Duration::from_secs(120));
}

// --- 6. Batching throughput -----------------------------------------------

#[test]
fn c06_rmc3_batching_doubles_item_throughput() {
    let _g = lock();
    let t0 = Instant::now();
    let model = preset(ModelClass::Rmc3, 1e-2).unwrap();
    let instance = init_weights(&model, 0xD00D).unwrap();
    let mut small = Vec::new();
    let mut large = Vec::new();
    for rep in 0..3 {
        let plan = fixed_count_plan(model.clone(), 300, 30, 31 + rep);
        small.push(run_single(&instance, &plan, 1).unwrap().summary.throughput_items_s);
        let plan = fixed_count_plan(model.clone(), 40, 5, 37 + rep);
        large.push(run_single(&instance, &plan, 256).unwrap().summary.throughput_items_s);
    }
    let b1 = median(&mut small);
    let b256 = median(&mut large);
    println!("c06: rmc3 items/s at B=1 {b1:.0}, at B=256 {b256:.0} (ratio {:.2})", b256 / b1);
    assert!(
        b256 >= 2.0 * b1,
        "batching gain {:.2}x below the required 2x ({b1:.0} -> {b256:.0} items/s)",
        b256 / b1
    );
    budget("c06", t0, Duration::from_secs(180));
}

// --- 7. Co-location tradeoff ----------------------------------------------

#[test]
fn c07_colocation_raises_throughput_and_tail_latency() {
    let _g = lock();
    let t0 = Instant::now();
    let cores = recbench_core::harness::available_cores();
    let model = preset(ModelClass::Rmc2, 1e-2).unwrap();
    let plan = fixed_count_plan(model.clone(), 200, 30, 41);
    println!("c07: host has {cores} cores (stated environment is >= 4)");

    let solo = run_colocated(&model, 1, &plan, 16).unwrap();
    let colocated = run_colocated(&model, 4, &plan, 16).unwrap();
    let solo_p99 = solo.per_instance[0].p99_us;
    let colo_p99: Vec<f64> = colocated.per_instance.iter().map(|m| m.p99_us).collect();
    println!(
        "c07: aggregate {:.1} -> {:.1} inf/s; p99 {:.0}us -> {:?}us",
        solo.aggregate_inf_s,
        colocated.aggregate_inf_s,
        solo_p99,
        colo_p99.iter().map(|v| *v as u64).collect::<Vec<_>>()
    );
    assert!(
        colocated.aggregate_inf_s > solo.aggregate_inf_s,
        "aggregate throughput at N=4 ({:.1}) should exceed N=1 ({:.1})",
        colocated.aggregate_inf_s,
        solo.aggregate_inf_s
    );
    for (i, p99) in colo_p99.iter().enumerate() {
        assert!(
            *p99 >= solo_p99,
            "instance {i} p99 at N=4 ({p99:.0}us) should be at least the N=1 p99 ({solo_p99:.0}us)"
        );
    }
    budget("c07", t0, Duration::from_secs(300));
}

// --- 8. Percentile and metric unit suite -----------------------------------

#[test]
fn c08_percentile_and_sla_selection_definitions() {
    let _g = lock();
    let t0 = Instant::now();
    let one_to_hundred: Vec<f64> = (1..=100).map(|v| v as f64).collect();
    assert_eq!(percentile(&one_to_hundred, 99.0).unwrap(), 99.0);
    assert_eq!(percentile(&one_to_hundred, 50.0).unwrap(), 50.0);

    // order independence of summarize
    let mk = |dispatch_ms: u64, end_ms: u64| LatencySample {
        instance_id: 0,
        query_id: 0,
        dispatch_ns: dispatch_ms * 1_000_000,
        start_ns: dispatch_ms * 1_000_000,
        end_ns: end_ms * 1_000_000,
        batch: 1,
    };
    let mut rng = SplitMix64::new(0xACCE_0008);
    let mut samples: Vec<_> =
        (0..97).map(|i| mk(i * 3, i * 3 + 1 + rng.next_u64_below(40))).collect();
    let sla = SlaConfig { threshold_ms: 25.0, percentile: 95.0 };
    let forward_order = summarize(&samples, &sla).unwrap();
    samples.reverse();
    assert_eq!(forward_order, summarize(&samples, &sla).unwrap());

    // SLA winner over a hand-built 3-point table
    let point = |sla_latency_us: f64, tput: f64| MetricsSummary {
        count: 10,
        mean_us: sla_latency_us,
        p5_us: sla_latency_us,
        p50_us: sla_latency_us,
        p95_us: sla_latency_us,
        p99_us: sla_latency_us,
        sla_latency_us,
        throughput_inf_s: tput,
        throughput_items_s: tput,
        sla_violation_frac: 0.0,
    };
    let table = vec![
        ("fast-low", point(1_000.0, 10.0)),
        ("late-high", point(5_000.0, 100.0)),
        ("mid", point(1_800.0, 40.0)),
    ];
    let sla = SlaConfig { threshold_ms: 2.0, percentile: 99.0 };
    match latency_bounded_throughput(&table, &sla).unwrap() {
        SlaSelection::Qualified { point, .. } => assert_eq!(point, "mid"),
        other => panic!("unexpected selection {other:?}"),
    }
    let strict = SlaConfig { threshold_ms: 0.5, percentile: 99.0 };
    match latency_bounded_throughput(&table, &strict).unwrap() {
        SlaSelection::NoneQualified { fastest, .. } => assert_eq!(fastest, "fast-low"),
        other => panic!("unexpected selection {other:?}"),
    }
    let lax = SlaConfig { threshold_ms: f64::INFINITY, percentile: 99.0 };
    match latency_bounded_throughput(&table, &lax).unwrap() {
        SlaSelection::Qualified { point, .. } => assert_eq!(point, "late-high"),
        other => panic!("unexpected selection {other:?}"),
    }
    budget("c08", t0, Duration::from_secs(1));
}

// --- 9. Cache hierarchy invariants ----------------------------------------

fn full_assoc(lines: u64) -> CacheLevelConfig {
    CacheLevelConfig::lru(lines * 64, 64, lines as u32)
}

#[test]
fn c09_cache_policy_invariants_and_working_set_experiment() {
    let _g = lock();
    let t0 = Instant::now();
    // invariants after every access across toy geometries
    let geometries = [
        (full_assoc(4), full_assoc(8)),
        (full_assoc(2), full_assoc(32)),
        (CacheLevelConfig::lru(8 * 64, 64, 2), CacheLevelConfig::lru(32 * 64, 64, 4)),
        (CacheLevelConfig::lru(16 * 64, 64, 4), CacheLevelConfig::lru(32 * 64, 64, 8)),
    ];
    for (l2, l3) in geometries {
        for policy in [InclusionPolicy::Inclusive, InclusionPolicy::Exclusive] {
            let cfg = HierarchyConfig { l2, l3, policy };
            let mut sim = HierarchySim::new(&cfg).unwrap();
            let mut rng = SplitMix64::new(0xACCE_0009);
            for access in 0..5_000 {
                sim.access(rng.next_u64_below(64) * 64);
                assert!(
                    sim.policy_invariant_holds(),
                    "{policy:?} invariant broken at access {access} for {cfg:?}"
                );
            }
            if policy == InclusionPolicy::Exclusive {
                assert_eq!(sim.stats().back_invalidations, 0);
            }
        }
    }

    // working set W with L3 < W <= L2 + L3: exclusive reaches steady state
    // with no DRAM traffic, inclusive keeps missing
    let lines: Vec<u64> = (0..12).collect();
    let passes = 8u64;
    let mut addrs = Vec::new();
    for _ in 0..passes {
        addrs.extend(lines.iter().map(|&l| l * 64));
    }
    let trace = AccessTrace::from_addresses(addrs);
    let excl = simulate(
        &HierarchyConfig {
            l2: full_assoc(4),
            l3: full_assoc(8),
            policy: InclusionPolicy::Exclusive,
        },
        &trace,
    )
    .unwrap();
    let incl = simulate(
        &HierarchyConfig {
            l2: full_assoc(4),
            l3: full_assoc(8),
            policy: InclusionPolicy::Inclusive,
        },
        &trace,
    )
    .unwrap();
    println!(
        "c09: working-set dram accesses over {passes} passes: exclusive={} inclusive={}",
        excl.dram_accesses, incl.dram_accesses
    );
    assert_eq!(
        excl.dram_accesses, 12,
        "exclusive should only miss on the cold pass (union capacity holds W)"
    );
    assert!(
        incl.dram_accesses > 12,
        "inclusive effective capacity is L3 alone, so cycling must keep missing"
    );
    assert_eq!(excl.back_invalidations, 0);
    budget("c09", t0, Duration::from_secs(30));
}

// --- 10. Cache co-location effect ------------------------------------------

#[test]
fn c10_interleaved_traces_raise_misses_per_kilo_lookup() {
    let _g = lock();
    let t0 = Instant::now();
    // four address-disjoint tables, each with a hot set that fits the
    // hierarchy alone but not together with its neighbors
    let tables: Vec<(u64, u64)> = vec![(512, 16); 4];
    let map = TableAddressMap::new(&tables, 64);
    let hierarchy = HierarchyConfig {
        l2: CacheLevelConfig::lru(16 * 64, 64, 4),
        l3: CacheLevelConfig::lru(64 * 64, 64, 8),
        policy: InclusionPolicy::Inclusive,
    };
    let dist = IdDistribution::HotCold { hot_set_size: 48, hot_probability: 0.95 };
    let lookups_per_trace = 20_000usize;
    let mut solo_mpk = Vec::new();
    let mut traces = Vec::new();
    for t in 0..4 {
        let ids = gen_ids(&dist, 512, lookups_per_trace, 7_000 + t as u64).unwrap();
        let mut trace = AccessTrace::new();
        for id in ids {
            for addr in map.row_line_addresses(t, id).unwrap() {
                trace.push(addr);
            }
        }
        let stats = simulate(&hierarchy, &trace).unwrap();
        solo_mpk.push(misses_per_kilo_lookups(&stats, lookups_per_trace as u64).unwrap());
        traces.push(trace);
    }
    let combined = interleave(&traces, 1);
    let stats = simulate(&hierarchy, &combined).unwrap();
    let combined_mpk =
        misses_per_kilo_lookups(&stats, (4 * lookups_per_trace) as u64).unwrap();
    println!("c10: solo mpk = {solo_mpk:?}, interleaved mpk = {combined_mpk:.1}");
    for (t, solo) in solo_mpk.iter().enumerate() {
        assert!(
            combined_mpk > *solo,
            "interleaving should raise per-trace miss rate: trace {t} solo {solo:.1} vs combined {combined_mpk:.1}"
        );
    }
    budget("c10", t0, Duration::from_secs(30));
}

// --- 11. Determinism through the CLI ----------------------------------------

fn recbench(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_recbench")).args(args).output().expect("binary runs")
}

fn non_timing_columns(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("model") && !l.trim().is_empty())
        .map(|l| {
            let p: Vec<&str> = l.split(',').collect();
            // model, scale, batch, colocation, count, pinning
            vec![p[0], p[1], p[2], p[3], p[4], p[13]].into_iter().map(String::from).collect()
        })
        .collect()
}

#[test]
fn c11_same_seed_reproduces_results_and_traces() {
    let _g = lock();
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let bench = |out: &Path| {
        let out_s = out.to_str().unwrap();
        let run = recbench(&[
            "bench", "run", "--model", "rmc1", "--scale", "1e-3", "--batch", "8", "--queries",
            "40", "--seed", "99", "--out", out_s,
        ]);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
        std::fs::read_to_string(out.join("results.csv")).unwrap()
    };
    let a = bench(&dir.path().join("a"));
    let b = bench(&dir.path().join("b"));
    assert_eq!(
        non_timing_columns(&a),
        non_timing_columns(&b),
        "identical seeds must reproduce all non-timing CSV columns"
    );

    let t1 = dir.path().join("t1.csv");
    let t2 = dir.path().join("t2.csv");
    for t in [&t1, &t2] {
        let run = recbench(&[
            "trace", "gen", "--model", "rmc2", "--scale", "1e-3", "--batch", "2", "--queries",
            "5", "--seed", "123", "--out", t.to_str().unwrap(),
        ]);
        assert!(run.status.success());
    }
    assert_eq!(
        std::fs::read(&t1).unwrap(),
        std::fs::read(&t2).unwrap(),
        "trace files must be byte-identical"
    );
    println!("c11: results CSV non-timing columns and trace bytes reproduce exactly");
    budget("c11", t0, Duration::from_secs(60));
}
