use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use seqwin::adaptive::{adapt_frame, run_adaptive_prefix, AdaptiveConfig, AdaptiveTrace};
use seqwin::distribution::{significance_with, SignificanceOptions};
use seqwin::eval::{auc, mtl, pr_curve, GroundTruth, PrMode};
use seqwin::format::{curve_csv, match_csv, pr_csv, sig9, trace_csv};
use seqwin::image::{downsample, load_pgm, patch_normalize};
use seqwin::shuffle::{invert, manifest_csv, parse_manifest, shuffle_traverse, ShuffleSpec};
use seqwin::store::{read_descriptors, read_matrix, write_descriptors, write_matrix};
use seqwin::synth::{synth_generate, Modality, SynthSpec};
use seqwin::window::{fixed_localize_prefix, DEFAULT_FIXED_SWEEP};
use seqwin::wifi::{load_wifi_csv, vectorize_all};
use seqwin::{Descriptor, DiffOp, DifferenceMatrix, LocalizationResult, Method, PrefixField};

use crate::args::*;
use crate::{CliError, CliResult};

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

fn make_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))
}

fn make_parent(file: &Path) -> CliResult<()> {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => make_dir(p),
        _ => Ok(()),
    }
}

fn check_fractions(min_frac: f64, max_frac: f64) -> CliResult<()> {
    if !(min_frac > 0.0 && min_frac <= max_frac && max_frac < 1.0) {
        return Err(CliError::usage(format!(
            "need 0 < --min-frac <= --max-frac < 1, got {min_frac} and {max_frac}"
        )));
    }
    Ok(())
}

fn parse_list(s: &str, flag: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| CliError::usage(format!("{flag}: bad entry {t:?}"))))
        .collect()
}

fn method_of(a: ApproxArg) -> Method {
    match a {
        ApproxArg::Gaussian => Method::Gaussian,
        ApproxArg::Robust => Method::RobustGaussian,
        ApproxArg::Gmm2 => Method::Gmm2,
        ApproxArg::Gmm3 => Method::Gmm3,
    }
}

fn op_of(o: OpArg) -> DiffOp {
    match o {
        OpArg::Sad => DiffOp::Sad,
        OpArg::Cosine => DiffOp::Cosine,
    }
}

// ---------------------------------------------------------------- ingest

fn parse_size(s: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::usage(format!("--downsample expects WIDTHxHEIGHT, got {s:?}"));
    let (w, h) = s.to_ascii_lowercase().split_once('x').map(|(w, h)| (w.to_string(), h.to_string())).ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

fn pgm_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for e in entries {
        let p = e.map_err(CliError::data)?.path();
        let is_pgm = p.extension().and_then(|x| x.to_str()).is_some_and(|x| x.eq_ignore_ascii_case("pgm"));
        if is_pgm && p.is_file() {
            files.push(p);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::data(format!("no .pgm files in {}", dir.display())));
    }
    Ok(files)
}

pub fn ingest(a: IngestArgs) -> CliResult<()> {
    let size = a.downsample.as_deref().map(parse_size).transpose()?;
    if a.patch_norm == Some(0) {
        return Err(CliError::usage("--patch-norm must be positive"));
    }
    let descriptors = if let Some(dir) = &a.images {
        let mut out = Vec::new();
        for f in pgm_files(dir)? {
            let mut img = load_pgm(&f)?;
            if let Some((w, h)) = size {
                img = downsample(&img, w, h).map_err(|e| CliError::data(format!("{}: {e}", f.display())))?;
            }
            let d = match a.patch_norm {
                Some(p) => patch_normalize(&img, p).map_err(|e| CliError::data(format!("{}: {e}", f.display())))?,
                None => Descriptor::dense(img.pixels().to_vec())?,
            };
            out.push(d);
        }
        out
    } else {
        let path = a.wifi.as_ref().expect("clap requires --images or --wifi");
        let records = load_wifi_csv(path)?;
        vectorize_all(&records, a.ap_count).map_err(CliError::data)?
    };
    make_parent(&a.out)?;
    write_descriptors(&a.out, &descriptors)?;
    log::info!(
        "wrote {} descriptors of dim {} to {}",
        descriptors.len(),
        descriptors[0].dim(),
        a.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------- synth

pub fn synth(a: SynthArgs) -> CliResult<()> {
    let mut spec = match a.modality {
        ModalityArg::Image => SynthSpec::image(a.n, a.seed),
        ModalityArg::Wifi => SynthSpec::wifi(a.n, a.seed),
    };
    if let Some(v) = a.dim {
        spec.descriptor_dim = v;
    }
    if let Some(v) = a.noise {
        spec.noise_sigma = v;
    }
    if let Some(v) = a.drift {
        spec.speed_drift = v;
    }
    if let Some(v) = a.correlation_len {
        spec.correlation_len = v;
    }
    if let Some(v) = a.salience_spread {
        spec.salience_spread = v;
    }
    if let Some(v) = a.salience_len {
        spec.salience_len = v;
    }
    if let Some(v) = a.scene_spread {
        spec.scene_spread = v;
    }
    if let Some(v) = a.scene_len {
        spec.scene_len = v;
    }
    if let Some(v) = a.visible {
        spec.wifi_mean_visible = v;
    }
    if a.shuffle {
        check_fractions(a.min_frac, a.max_frac)?;
        spec.shuffle = Some(ShuffleSpec { min_frac: a.min_frac, max_frac: a.max_frac, seed: a.seed });
    }
    spec.validate()?;
    let ds = synth_generate(&spec)?;

    make_dir(&a.out)?;
    write_descriptors(a.out.join("reference.json"), &ds.reference)?;
    write_descriptors(a.out.join("query.json"), &ds.query)?;
    write(&a.out.join("ground_truth.csv"), &ds.ground_truth.to_csv())?;
    if let Some(s) = &ds.shuffle {
        write(&a.out.join("shuffle_manifest.csv"), &s.to_csv())?;
    }
    let spec_json = serde_json::to_string_pretty(&spec).map_err(|e| CliError::Internal(e.to_string()))?;
    write(&a.out.join("synth.json"), &(spec_json + "\n"))?;
    log::info!(
        "synthesized {} {} frames into {}",
        spec.n_ref,
        if spec.modality == Modality::Wifi { "wifi" } else { "image" },
        a.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------- shuffle

pub fn shuffle(a: ShuffleArgs) -> CliResult<()> {
    if a.manifest.is_none() {
        check_fractions(a.min_frac, a.max_frac)?;
    }
    let query = read_descriptors(&a.query)?;
    let n = query.len();
    let order = match &a.manifest {
        Some(m) => {
            let text = fs::read_to_string(m).map_err(|e| CliError::data(format!("{}: {e}", m.display())))?;
            let order = parse_manifest(&text)?;
            if order.len() != n {
                return Err(CliError::data(format!(
                    "manifest has {} rows but the query has {n} frames",
                    order.len()
                )));
            }
            order
        }
        None => {
            let spec = ShuffleSpec { min_frac: a.min_frac, max_frac: a.max_frac, seed: a.seed };
            shuffle_traverse(n, &spec)?.order
        }
    };
    let truth = a
        .ground_truth
        .as_ref()
        .map(|p| GroundTruth::load_csv(p, Some(n), 0))
        .transpose()?;

    // `take[k]` is the input index that lands at output position `k`.
    let take = if a.inverse { invert(&order) } else { order.clone() };
    let shuffled: Vec<Descriptor> = take.iter().map(|&k| query[k].clone()).collect();

    make_dir(&a.out)?;
    write_descriptors(a.out.join("query.json"), &shuffled)?;
    if !a.inverse {
        write(&a.out.join("shuffle_manifest.csv"), &manifest_csv(&order))?;
    }
    if let Some(gt) = truth {
        let remapped = GroundTruth::new(take.iter().map(|&k| gt.get(k)).collect(), 0);
        write(&a.out.join("ground_truth.csv"), &remapped.to_csv())?;
    }
    Ok(())
}

// ---------------------------------------------------------------- localize

struct Loaded {
    matrix: DifferenceMatrix,
    prefix: PrefixField,
}

fn load_source(src: &MatrixSource) -> CliResult<Loaded> {
    let matrix = match (&src.matrix, &src.reference, &src.query) {
        (Some(m), _, _) => read_matrix(m)?,
        (None, Some(r), Some(q)) => {
            let reference = read_descriptors(r)?;
            let query = read_descriptors(q)?;
            DifferenceMatrix::build(&query, &reference, op_of(src.op))?
        }
        _ => return Err(CliError::usage("give --reference and --query, or --matrix")),
    };
    if matrix.n_query() == 0 || matrix.n_ref() == 0 {
        return Err(CliError::data("difference matrix is empty"));
    }
    let prefix = PrefixField::build(&matrix);
    Ok(Loaded { matrix, prefix })
}

fn adaptive_config(a: &AdaptiveArgs, op: OpArg, method: Method, keep_curves: bool) -> CliResult<AdaptiveConfig> {
    let cfg = AdaptiveConfig {
        l_min: a.l_min,
        l_max: a.l_max,
        l_stride: a.l_stride,
        method,
        op: op_of(op),
        significance: SignificanceOptions { exclude_best: a.exclude_best },
        keep_curves,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn median_len(trace: &AdaptiveTrace) -> Option<usize> {
    let mut ls: Vec<usize> = trace.chosen_lengths().into_iter().flatten().collect();
    ls.sort_unstable();
    ls.get(ls.len() / 2).copied()
}

fn pr_mode(on: PrOnArg) -> PrMode {
    match on {
        PrOnArg::Score => PrMode::ThresholdOnScore,
        PrOnArg::Significance => PrMode::ThresholdOnSignificance,
    }
}

/// Metrics for one run, when ground truth is available.
fn evaluate(
    results: &[LocalizationResult],
    gt: Option<&GroundTruth>,
    mode: PrMode,
) -> CliResult<Option<(usize, f64, String)>> {
    let Some(gt) = gt else { return Ok(None) };
    let m = mtl(results, gt)?;
    let points = pr_curve(results, gt, mode);
    Ok(Some((m, auc(&points), pr_csv(&points))))
}

fn digest(settings: &Value) -> String {
    let canonical = serde_json::to_string(settings).expect("json value serializes");
    format!("{:x}", Sha256::digest(canonical.as_bytes()))
}

fn write_json(path: &Path, v: &Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| CliError::Internal(e.to_string()))?;
    write(path, &(text + "\n"))
}

pub fn localize(a: LocalizeArgs) -> CliResult<()> {
    let method = method_of(a.adaptive.approx);
    let cfg = adaptive_config(&a.adaptive, a.source.op, method, a.curves)?;
    match (a.mode, a.window_len) {
        (ModeArg::Fixed, None) => return Err(CliError::usage("--mode fixed needs --window-len")),
        (ModeArg::Fixed, Some(0)) => return Err(CliError::usage("--window-len must be >= 1")),
        (ModeArg::Adaptive | ModeArg::Sweep, Some(_)) => {
            return Err(CliError::usage("--window-len only applies to --mode fixed"))
        }
        _ => {}
    }
    if a.eval && a.ground_truth.is_none() {
        return Err(CliError::usage("--eval needs --ground-truth"));
    }
    if let Some(gt) = &a.ground_truth {
        if !gt.is_file() {
            return Err(CliError::data(format!("ground truth {} not found", gt.display())));
        }
    }

    let loaded = load_source(&a.source)?;
    let (nq, nr) = (loaded.matrix.n_query(), loaded.matrix.n_ref());
    let gt = match &a.ground_truth {
        Some(p) => {
            let gt = GroundTruth::load_csv(p, Some(nq), a.tolerance)?;
            gt.check_bounds(nq, nr)?;
            Some(gt)
        }
        None => None,
    };

    let mode_name = match a.mode {
        ModeArg::Fixed => "fixed",
        ModeArg::Adaptive => "adaptive",
        ModeArg::Sweep => "sweep",
    };
    let mut settings = json!({
        "mode": mode_name,
        "op": op_of(a.source.op).name(),
        "n_query": nq,
        "n_ref": nr,
        "tolerance": a.tolerance,
    });
    if a.mode != ModeArg::Fixed {
        settings["adaptive"] = json!({
            "l_min": cfg.l_min,
            "l_max": cfg.l_max,
            "l_stride": cfg.l_stride,
            "exclude_best": cfg.significance.exclude_best,
            "pr_on": pr_mode(a.pr_on).name(),
        });
    }
    if a.mode == ModeArg::Adaptive {
        settings["adaptive"]["approx"] = json!(method.name());
    }
    if let Some(l) = a.window_len {
        settings["window_len"] = json!(l);
    }
    let config_digest = digest(&settings);

    // All computation happens before the output directory is touched.
    let mut files: Vec<(String, String)> = Vec::new();
    let report = match a.mode {
        ModeArg::Fixed => {
            let len = a.window_len.expect("checked above");
            let results = fixed_localize_prefix(&loaded.prefix, len)?;
            files.push(("matches.csv".into(), match_csv(&results)));
            let metrics = evaluate(&results, gt.as_ref(), PrMode::ThresholdOnScore)?;
            metrics.map(|(m, auc, pr)| {
                files.push(("pr.csv".into(), pr));
                json!({"mode": "fixed", "window_len": len, "mtl": m, "auc": auc})
            })
        }
        ModeArg::Adaptive => {
            let trace = run_adaptive_prefix(&loaded.prefix, &cfg)?;
            let results = trace.results();
            files.push(("trace.csv".into(), trace_csv(&results)));
            if a.curves {
                files.push(("curves.csv".into(), curve_csv(&trace)));
            }
            let metrics = evaluate(&results, gt.as_ref(), pr_mode(a.pr_on))?;
            metrics.map(|(m, auc, pr)| {
                files.push(("pr.csv".into(), pr));
                json!({"mode": "adaptive", "approx": method.name(), "mtl": m, "auc": auc,
                       "median_chosen_L": median_len(&trace)})
            })
        }
        ModeArg::Sweep => Some(sweep(&loaded, &cfg, gt.as_ref(), pr_mode(a.pr_on), &mut files)?),
    };

    make_dir(&a.out)?;
    if let Some(path) = &a.save_matrix {
        make_parent(path)?;
        write_matrix(path, &loaded.matrix)?;
    }
    for (name, text) in &files {
        write(&a.out.join(name), text)?;
    }
    if let (Some(mut report), Some(gt)) = (report, gt.as_ref()) {
        report["n_frames"] = json!(nq);
        report["n_with_truth"] = json!(gt.n_with_truth());
        report["tolerance"] = json!(a.tolerance);
        report["config_digest"] = json!(config_digest);
        write_json(&a.out.join("report.json"), &report)?;
    }
    Ok(())
}

fn opt_cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Every fixed length of the baseline sweep, then adaptive with each method.
fn sweep(
    loaded: &Loaded,
    base: &AdaptiveConfig,
    gt: Option<&GroundTruth>,
    adaptive_pr: PrMode,
    files: &mut Vec<(String, String)>,
) -> CliResult<Value> {
    let mut table = String::from("mode,window_len,approx,mtl,auc,median_chosen_L\n");
    let mut runs = Vec::new();
    for len in DEFAULT_FIXED_SWEEP {
        let results = fixed_localize_prefix(&loaded.prefix, len)?;
        files.push((format!("fixed_L{len}.csv"), match_csv(&results)));
        let metrics = evaluate(&results, gt, PrMode::ThresholdOnScore)?;
        let (m, au) = match metrics {
            Some((m, au, pr)) => {
                files.push((format!("pr_fixed_L{len}.csv"), pr));
                (Some(m), Some(au))
            }
            None => (None, None),
        };
        writeln!(table, "fixed,{len},,{},{},", opt_cell(m), opt_cell(au.map(sig9))).unwrap();
        runs.push(json!({"mode": "fixed", "window_len": len, "mtl": m, "auc": au}));
    }
    for method in Method::ALL {
        let cfg = AdaptiveConfig { method, keep_curves: false, ..*base };
        let trace = run_adaptive_prefix(&loaded.prefix, &cfg)?;
        let results = trace.results();
        let name = method.name();
        files.push((format!("adaptive_{name}.csv"), trace_csv(&results)));
        let metrics = evaluate(&results, gt, adaptive_pr)?;
        let (m, au) = match metrics {
            Some((m, au, pr)) => {
                files.push((format!("pr_adaptive_{name}.csv"), pr));
                (Some(m), Some(au))
            }
            None => (None, None),
        };
        let med = median_len(&trace);
        writeln!(table, "adaptive,,{name},{},{},{}", opt_cell(m), opt_cell(au.map(sig9)), opt_cell(med)).unwrap();
        runs.push(json!({"mode": "adaptive", "approx": name, "mtl": m, "auc": au, "median_chosen_L": med}));
    }
    files.push(("sweep.csv".into(), table));
    Ok(json!({"mode": "sweep", "runs": runs}))
}

// ---------------------------------------------------------------- diag

fn pop_stats(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    (mean, var.sqrt(), min)
}

pub fn diag(a: DiagArgs) -> CliResult<()> {
    let method = method_of(a.adaptive.approx);
    let cfg = adaptive_config(&a.adaptive, a.source.op, method, false)?;
    let lengths = parse_list(&a.lengths, "--lengths")?;
    if lengths.is_empty() || lengths.contains(&0) {
        return Err(CliError::usage("--lengths needs positive window lengths"));
    }
    let explicit = a.frames.as_deref().map(|s| parse_list(s, "--frames")).transpose()?;
    if explicit.is_none() && a.every == 0 {
        return Err(CliError::usage("--every must be >= 1"));
    }

    let loaded = load_source(&a.source)?;
    let (nq, nr) = (loaded.matrix.n_query(), loaded.matrix.n_ref());
    let frames = match explicit {
        Some(f) => {
            if let Some(bad) = f.iter().find(|&&i| i >= nq) {
                return Err(CliError::usage(format!("--frames: {bad} is past the last query frame {}", nq - 1)));
            }
            f
        }
        None => (0..nq).step_by(a.every).collect(),
    };
    let opts = cfg.significance;

    let mut stats = String::from("query_index,L,mean,std,min,p_gaussian,p_robust,p_gmm2,p_gmm3\n");
    for &i in &frames {
        for &len in &lengths {
            if len > i + 1 || len > nr {
                continue;
            }
            let row = loaded.prefix.score_row(i, len)?;
            let (mean, std, min) = pop_stats(&row);
            write!(stats, "{i},{len},{},{},{}", sig9(mean), sig9(std), sig9(min)).unwrap();
            for m in Method::ALL {
                let p = if row.len() < 2 { 1.0 } else { significance_with(&row, m, opts)?.p };
                write!(stats, ",{}", sig9(p)).unwrap();
            }
            stats.push('\n');
        }
    }

    let mut curves = String::from("method,query_index,L,p,ln_p,best_ref,is_global_min\n");
    for m in Method::ALL {
        let mcfg = AdaptiveConfig { method: m, keep_curves: true, ..cfg };
        for &i in &frames {
            let frame = adapt_frame(&loaded.prefix, i, &mcfg)?;
            let chosen = frame.result.hypothesis.map(|_| frame.result.window_len);
            for w in frame.curve.iter().flatten() {
                writeln!(
                    curves,
                    "{},{i},{},{},{},{},{}",
                    m.name(),
                    w.window_len,
                    sig9(w.p),
                    sig9(w.ln_p),
                    w.best_ref,
                    u8::from(chosen == Some(w.window_len))
                )
                .unwrap();
            }
        }
    }

    let trace = run_adaptive_prefix(&loaded.prefix, &cfg)?;
    let mut chosen = String::from("query_index,chosen_L\n");
    for (i, l) in trace.chosen_lengths().into_iter().enumerate() {
        writeln!(chosen, "{i},{}", opt_cell(l)).unwrap();
    }

    make_dir(&a.out)?;
    write(&a.out.join("score_stats.csv"), &stats)?;
    write(&a.out.join("p_curves.csv"), &curves)?;
    write(&a.out.join("chosen_l.csv"), &chosen)?;
    Ok(())
}
