//! Micro-benchmark of the pooled-gather kernel on an RMC2-like footprint.

use recbench_core::kernels::{sls, EmbeddingTable, SparseLookupBatch};
use recbench_core::rng::SplitMix64;
use std::time::Instant;

fn main() {
    let tables: Vec<EmbeddingTable> = (0..50)
        .map(|t| {
            let mut rng = SplitMix64::new(t);
            let data = (0..10_000 * 32).map(|_| rng.next_f32_range(-1.0, 1.0)).collect();
            EmbeddingTable::from_vec(10_000, 32, data).unwrap()
        })
        .collect();

    let mut rng = SplitMix64::new(999);
    for (label, k, m) in [("B=1 M=80", 1usize, 80usize), ("B=16 M=80", 16, 80)] {
        // fresh ids per rep, pregenerated so only sls() is timed
        let reps = 200;
        let batches: Vec<Vec<SparseLookupBatch>> = (0..reps)
            .map(|_| {
                tables
                    .iter()
                    .map(|t| {
                        let ids = (0..k * m)
                            .map(|_| rng.next_u64_below(t.rows() as u64))
                            .collect();
                        SparseLookupBatch::new(vec![m as u32; k], ids).unwrap()
                    })
                    .collect()
            })
            .collect();
        let mut sink = 0.0f32;
        let mut best = f64::INFINITY;
        for _ in 0..5 {
            let t0 = Instant::now();
            for rep in &batches {
                for (t, b) in tables.iter().zip(rep) {
                    sink += sls(t, b).unwrap().get(0, 0);
                }
            }
            best = best.min(t0.elapsed().as_secs_f64());
        }
        let gathers = (reps * 50 * k * m) as f64;
        println!(
            "{label}: {:.1}ns/gather  {:.2}ms/query  (sink {sink:.2})",
            best * 1e9 / gathers,
            best * 1e3 / reps as f64
        );
    }
}
