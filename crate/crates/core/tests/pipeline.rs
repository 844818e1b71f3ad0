use seqwin::adaptive::{run_adaptive, AdaptiveConfig, StreamingLocalizer};
use seqwin::eval::{auc, correctness, pr_curve, PrMode};
use seqwin::image::{downsample, parse_pgm, patch_normalize};
use seqwin::store::{read_descriptors, write_descriptors};
use seqwin::synth::{synth_generate, SynthSpec};
use seqwin::window::{fixed_localize, DEFAULT_FIXED_SWEEP};
use seqwin::{build_row, DiffOp, DifferenceMatrix, Method};

fn in_order_benchmark() -> (DifferenceMatrix, seqwin::eval::GroundTruth) {
    let ds = synth_generate(&SynthSpec::image(2000, 1)).unwrap();
    let m = DifferenceMatrix::build(&ds.query, &ds.reference, DiffOp::Sad).unwrap();
    (m, ds.ground_truth)
}

#[test]
fn in_order_benchmark_localizes_after_warmup() {
    let (m, gt) = in_order_benchmark();
    let trace = run_adaptive(&m, &AdaptiveConfig::default()).unwrap();
    let late = &trace.results()[100..];
    let ok = late.iter().filter(|r| correctness(r, &gt)).count() as f64 / late.len() as f64;
    assert!(ok >= 0.95, "{ok}");
}

#[test]
fn in_order_sweep_varies_and_adaptive_keeps_up() {
    let (m, gt) = in_order_benchmark();
    let fixed: Vec<f64> = DEFAULT_FIXED_SWEEP
        .iter()
        .map(|&l| auc(&pr_curve(&fixed_localize(&m, l).unwrap(), &gt, PrMode::ThresholdOnScore)))
        .collect();
    let best = fixed.iter().cloned().fold(f64::MIN, f64::max);
    let worst = fixed.iter().cloned().fold(f64::MAX, f64::min);
    assert!(best - worst > 0.05, "{fixed:?}");
    let trace = run_adaptive(&m, &AdaptiveConfig::default()).unwrap();
    let adaptive = auc(&pr_curve(&trace.results(), &gt, PrMode::ThresholdOnSignificance));
    assert!(adaptive >= best - 0.05, "{adaptive} vs {fixed:?}");
}

#[test]
fn streaming_equals_batch_on_synthetic_traverse() {
    let ds = synth_generate(&SynthSpec::image(300, 5).shuffled()).unwrap();
    let cfg = AdaptiveConfig { l_max: 120, method: Method::RobustGaussian, ..AdaptiveConfig::default() };
    let m = DifferenceMatrix::build(&ds.query, &ds.reference, DiffOp::Sad).unwrap();
    let batch = run_adaptive(&m, &cfg).unwrap();
    let mut online = StreamingLocalizer::new(ds.reference.len(), cfg).unwrap();
    for (i, q) in ds.query.iter().enumerate() {
        let (row, _) = build_row(q, &ds.reference, DiffOp::Sad).unwrap();
        assert_eq!(online.push_row(&row).unwrap(), batch.frames[i]);
    }
}

#[test]
fn stored_descriptors_reproduce_results() {
    let dir = tempfile::tempdir().unwrap();
    for spec in [SynthSpec::image(200, 8), SynthSpec::wifi(200, 8)] {
        let ds = synth_generate(&spec).unwrap();
        let (rp, qp) = (dir.path().join("r.json"), dir.path().join("q.json"));
        write_descriptors(&rp, &ds.reference).unwrap();
        write_descriptors(&qp, &ds.query).unwrap();
        let (r, q) = (read_descriptors(&rp).unwrap(), read_descriptors(&qp).unwrap());
        assert_eq!((&r, &q), (&ds.reference, &ds.query));
        let a = DifferenceMatrix::build(&ds.query, &ds.reference, DiffOp::Sad).unwrap();
        let b = DifferenceMatrix::build(&q, &r, DiffOp::Sad).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn wifi_traverse_localizes() {
    let ds = synth_generate(&SynthSpec::wifi(600, 3)).unwrap();
    let m = DifferenceMatrix::build(&ds.query, &ds.reference, DiffOp::Sad).unwrap();
    let cfg = AdaptiveConfig { l_max: 200, ..AdaptiveConfig::default() };
    let r = run_adaptive(&m, &cfg).unwrap().results();
    let ok = r[50..].iter().filter(|x| correctness(x, &ds.ground_truth)).count() as f64 / (r.len() - 50) as f64;
    assert!(ok >= 0.9, "{ok}");
}

fn pgm(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> Vec<u8> {
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    for y in 0..h {
        for x in 0..w {
            bytes.push(f(x, y));
        }
    }
    bytes
}

#[test]
fn image_frames_localize_against_themselves() {
    // A camera panning along a textured strip: frame k sees columns k*8 ..
    let strip = |x: usize, y: usize| ((x * 37 + y * 11 + (x * y) % 13 + (x / 7) * 29) % 251) as u8;
    let frames: Vec<_> = (0..40)
        .map(|k| {
            let img = parse_pgm(&pgm(64, 32, |x, y| strip(x + 8 * k, y))).unwrap();
            patch_normalize(&downsample(&img, 32, 16).unwrap(), 4).unwrap()
        })
        .collect();
    assert!(frames.iter().all(|d| d.dim() == 512));
    let m = DifferenceMatrix::build(&frames, &frames, DiffOp::Sad).unwrap();
    let r = fixed_localize(&m, 5).unwrap();
    for x in &r[4..] {
        assert_eq!(x.best_ref(), Some(x.query_index));
    }
}
