//! Quick host calibration: prints the operator breakdowns, unit-batch
//! latencies, batching gains, and co-location effects that the directional
//! tests depend on. Handy when bringing the suite up on a new machine.

use std::time::Duration;

use recbench_core::config::{preset, ModelClass};
use recbench_core::harness::{run_colocated, run_single, RunPlan, SlaConfig};
use recbench_core::kernels::init_weights;
use recbench_core::workload::{ArrivalMode, ArrivalPlan};

fn plan(model: recbench_core::RecModelConfig, queries: u64, warmup_queries: u64) -> RunPlan {
    let arrival = ArrivalPlan {
        mode: ArrivalMode::ClosedLoop { concurrency: 1 },
        duration: Duration::from_secs(120),
        warmup: Duration::from_millis(1),
        warmup_queries,
        query_limit: Some(queries),
    };
    let mut p = RunPlan::new(model, arrival, 7);
    p.sla = SlaConfig::default();
    p
}

fn main() {
    let scale = 1e-2;
    println!("== operator breakdown at scale {scale}, batch 16 ==");
    for class in ModelClass::ALL {
        let model = preset(class, scale).unwrap();
        let instance = init_weights(&model, 11).unwrap();
        let p = plan(model, 250, 50);
        let t0 = std::time::Instant::now();
        let run = run_single(&instance, &p, 16).unwrap();
        let b = run.breakdown;
        println!(
            "{class}: fc={:.3} sls={:.3} concat={:.3} act={:.3} mean={:.1}us p99={:.1}us ({:.1}s)",
            b.fc,
            b.sls,
            b.concat,
            b.activation,
            run.summary.mean_us,
            run.summary.p99_us,
            t0.elapsed().as_secs_f64()
        );
    }

    println!("== unit-batch latency ==");
    for class in ModelClass::ALL {
        let model = preset(class, scale).unwrap();
        let instance = init_weights(&model, 11).unwrap();
        let p = plan(model, 300, 50);
        let run = run_single(&instance, &p, 1).unwrap();
        let b = run.breakdown;
        println!(
            "{class}: mean={:.1}us p50={:.1}us p99={:.1}us | fc={:.3} sls={:.3}",
            run.summary.mean_us, run.summary.p50_us, run.summary.p99_us, b.fc, b.sls
        );
    }

    println!("== rmc3 batching ==");
    let model = preset(ModelClass::Rmc3, scale).unwrap();
    let instance = init_weights(&model, 11).unwrap();
    for (batch, queries) in [(1u32, 300u64), (256, 40)] {
        let p = plan(model.clone(), queries, 10);
        let run = run_single(&instance, &p, batch).unwrap();
        println!(
            "B={batch}: items/s={:.0} mean={:.1}us",
            run.summary.throughput_items_s, run.summary.mean_us
        );
    }

    println!("== rmc2 co-location (batch 16) ==");
    let model = preset(ModelClass::Rmc2, scale).unwrap();
    for n in [1u32, 1, 2, 4, 1] {
        let p = plan(model.clone(), 150, 30);
        let t0 = std::time::Instant::now();
        let run = run_colocated(&model, n, &p, 16).unwrap();
        let detail: Vec<String> = run
            .per_instance
            .iter()
            .map(|m| {
                format!("mean={:.0} p50={:.0} p99={:.0} tput={:.0}",
                    m.mean_us, m.p50_us, m.p99_us, m.throughput_inf_s)
            })
            .collect();
        println!(
            "N={n}: aggregate={:.1} inf/s ({:.1}s wall)\n    {}",
            run.aggregate_inf_s,
            t0.elapsed().as_secs_f64(),
            detail.join("\n    ")
        );
    }
}
