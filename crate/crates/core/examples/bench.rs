//! Prints fixed-length and adaptive metrics on one synthetic benchmark.
//!
//! cargo run --release -p seqwin-core --example bench -- image 1000 7 [shuffle] [noise] [drift]

use std::time::Instant;

use seqwin::adaptive::{run_adaptive, AdaptiveConfig};
use seqwin::eval::{auc, mtl, pr_curve, PrMode};
use seqwin::synth::{synth_generate, SynthSpec};
use seqwin::window::{fixed_localize, DEFAULT_FIXED_SWEEP};
use seqwin::{DifferenceMatrix, DiffOp, Method};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let modality = args.first().map(String::as_str).unwrap_or("image");
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(7);
    let shuffle = args.get(3).is_some_and(|s| s == "shuffle");
    let mut spec = match modality {
        "wifi" => SynthSpec::wifi(n, seed),
        _ => SynthSpec::image(n, seed),
    };
    if let Some(x) = args.get(4).and_then(|s| s.parse().ok()) {
        spec.noise_sigma = x;
    }
    if let Some(x) = args.get(5).and_then(|s| s.parse().ok()) {
        spec.speed_drift = x;
    }
    if shuffle {
        spec = spec.shuffled();
    }
    let t = Instant::now();
    let ds = synth_generate(&spec).unwrap();
    let m = DifferenceMatrix::build(&ds.query, &ds.reference, DiffOp::Sad).unwrap();
    println!("build {:?}", t.elapsed());
    let gt = &ds.ground_truth;
    for l in [1, 5].into_iter().chain(DEFAULT_FIXED_SWEEP) {
        let r = fixed_localize(&m, l).unwrap();
        let pts = pr_curve(&r, gt, PrMode::ThresholdOnScore);
        println!("fixed L={l:4} mtl={:5} auc={:.3}", mtl(&r, gt).unwrap(), auc(&pts));
    }
    for method in Method::ALL {
        let t = Instant::now();
        let cfg = AdaptiveConfig { method, ..Default::default() };
        let tr = run_adaptive(&m, &cfg).unwrap();
        let r = tr.results();
        let mut ls: Vec<usize> = tr.chosen_lengths().into_iter().flatten().collect();
        ls.sort();
        let med = ls[ls.len() / 2];
        let a_p = auc(&pr_curve(&r, gt, PrMode::ThresholdOnSignificance));
        let a_s = auc(&pr_curve(&r, gt, PrMode::ThresholdOnScore));
        println!(
            "adaptive {method:8} mtl={:5} auc_p={a_p:.3} auc_s={a_s:.3} medL={med} ({:?})",
            mtl(&r, gt).unwrap(),
            t.elapsed()
        );
    }
}
