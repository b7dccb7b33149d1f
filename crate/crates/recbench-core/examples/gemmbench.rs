//! Micro-benchmark of FC kernel formulations on this host's shapes.

use recbench_core::kernels::{fc_forward, DenseMatrix};
use recbench_core::rng::SplitMix64;
use std::time::Instant;

fn fill(rng: &mut SplitMix64, n: usize) -> Vec<f32> {
    (0..n).map(|_| rng.next_f32_range(-0.05, 0.05)).collect()
}

fn bench(label: &str, b: usize, k: usize, o: usize, reps: usize) {
    let mut rng = SplitMix64::new(1);
    let x = DenseMatrix::from_vec(b, k, fill(&mut rng, b * k)).unwrap();
    let w = DenseMatrix::from_vec(k, o, fill(&mut rng, k * o)).unwrap();
    let bias = fill(&mut rng, o);
    // warm
    let mut sink = 0.0f32;
    for _ in 0..3 {
        sink += fc_forward(&x, &w, &bias).unwrap().get(0, 0);
    }
    let t0 = Instant::now();
    for _ in 0..reps {
        sink += fc_forward(&x, &w, &bias).unwrap().get(0, 0);
    }
    let dt = t0.elapsed().as_secs_f64() / reps as f64;
    let gflops = (2.0 * b as f64 * k as f64 * o as f64) / dt / 1e9;
    println!("{label}: B={b} K={k} O={o}: {:.0}us {gflops:.1} GFLOP/s (sink {sink:.3})", dt * 1e6);
}

fn main() {
    for (b, k, o) in [
        (1, 256, 2048),
        (1, 2048, 256),
        (16, 256, 2048),
        (16, 2048, 256),
        (16, 1632, 128),
        (256, 256, 2048),
        (256, 2048, 256),
        (17, 100, 33), // deliberately ragged
    ] {
        bench("fc", b, k, o, if b >= 256 { 20 } else { 200 });
    }
}
