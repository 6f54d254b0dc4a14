//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs as a plain binary so the lines are always shown.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use clothflat::datagen::{gen_samples, wrap_angle, DatasetCounts, GenConfig, WrinkleType};
use clothflat::features::{choose_k, explained_curve, fit_pca, max_components, DataMatrix, PcaModel};
use clothflat::imaging::{extract_wrinkles, otsu_threshold, ImagingParams};
use clothflat::model::{adam_step, init_mlp, loss_and_grads, lr_at, MlpModel, OptimizerState, TrainHyper};
use clothflat::pipeline::{layer_sizes, predict_image, split, train, Dataset, DEFAULT_TRAIN_FRACTION};
use clothflat::{pnm, GrayImage, Rect};
use clothflat_testkit::{central_gradient, covariance_projector, otsu_exhaustive, relative_error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SPLIT_SEED: u64 = 3;
const HELD_OUT_SEED: u64 = 777;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed < Duration::from_secs(limit_s)
}

fn otsu_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    for _ in 0..100 {
        let (w, h) = (rng.random_range(1..64), rng.random_range(1..64));
        let lo: u8 = rng.random();
        let hi: u8 = rng.random_range(lo..=255);
        let data: Vec<u8> = (0..w * h).map(|_| rng.random_range(lo..=hi)).collect();
        let img = GrayImage::new(w, h, data).unwrap();
        if otsu_threshold(&img) != otsu_exhaustive(img.data()) {
            mismatches += 1;
        }
    }
    let t = start.elapsed();
    verdict(
        mismatches == 0 && within(t, 5),
        format!("{mismatches}/100 mismatches, {:.2} s (limit 5 s)", t.as_secs_f64()),
    )
}

fn pca_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (n, d) = (rng.random_range(5..=20), rng.random_range(3..=12));
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let kmax = max_components(n, d);
        let model = fit_pca(&DataMatrix::from_rows(&rows).unwrap(), kmax).unwrap();
        for k in 1..=kmax {
            let (want, _) = covariance_projector(&rows, k);
            let got = model.truncate(k).unwrap().projector();
            let diff = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst = worst.max(diff);
        }
    }
    let t = start.elapsed();
    verdict(
        worst <= 1e-8 && within(t, 10),
        format!("max projector difference {worst:.3e} (limit 1e-8), {:.2} s (limit 10 s)", t.as_secs_f64()),
    )
}

fn gradient_check() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for case in 0..20u64 {
        let k = rng.random_range(1..=8);
        let batch = rng.random_range(1..=12);
        let model = init_mlp(&layer_sizes(k), 100 + case).unwrap();
        let xs: Vec<Vec<f64>> = (0..batch).map(|_| (0..k).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let ts: Vec<Vec<f64>> = (0..batch).map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let (_, grads) = loss_and_grads(&model, &xs, &ts, 1e-4).unwrap();
        let mut probe: MlpModel = model.clone();
        let fd = central_gradient(
            |p| {
                probe.params_mut().copy_from_slice(p);
                loss_and_grads(&probe, &xs, &ts, 1e-4).unwrap().0
            },
            model.params(),
            1e-6,
        );
        for (g, f) in grads.iter().zip(&fd) {
            worst = worst.max(relative_error(*g, *f, 1e-5));
        }
    }
    let t = start.elapsed();
    verdict(
        worst < 1e-4 && within(t, 30),
        format!("max relative error {worst:.3e} (limit 1e-4), {:.2} s (limit 30 s)", t.as_secs_f64()),
    )
}

fn adam_and_schedule() -> Verdict {
    let hyper = TrainHyper::default();
    let mut worst = 0.0f64;
    for (w0, g, lr) in [(0.5, 0.3, 0.01), (-1.0, -2.5, 0.001), (2.0, 1e-3, 0.1), (0.0, 7.0, 0.01)] {
        let mut state = OptimizerState::new(1);
        let mut w = [w0];
        adam_step(&mut state, &mut w, &[g], lr, &hyper);
        let m_hat = (1.0 - hyper.beta1) * g / (1.0 - hyper.beta1);
        let v_hat = (1.0 - hyper.beta2) * g * g / (1.0 - hyper.beta2);
        let want = w0 - lr * m_hat / (v_hat.sqrt() + hyper.epsilon);
        worst = worst.max((w[0] - want).abs());
    }
    let lrs = [lr_at(1, &hyper), lr_at(11, &hyper), lr_at(100, &hyper)];
    let exact = lrs == [0.01, 0.001, 1e-11];
    verdict(
        worst <= 1e-12 && exact,
        format!("Adam first-step error {worst:.3e} (limit 1e-12); lr at epochs 1/11/100 = {lrs:?}"),
    )
}

struct Run {
    dataset: Dataset,
    pca: PcaModel,
    k_rule: usize,
    model: MlpModel,
    val_rmse: f64,
    val_rmse_k5: f64,
    elapsed: Duration,
}

fn gen_config(jitter: f64) -> GenConfig {
    let mut cfg = GenConfig::default();
    cfg.labeling.jitter_scale = jitter;
    cfg
}

fn end_to_end(jitter: f64) -> Run {
    let start = Instant::now();
    let samples = gen_samples(&gen_config(jitter)).unwrap();
    let dataset = Dataset::from_samples(&samples).unwrap();
    let data = dataset.data_matrix().unwrap();
    let full = fit_pca(&data, max_components(data.rows(), data.cols())).unwrap();
    let k_rule = choose_k(&explained_curve(&full).unwrap(), 0.92).unwrap();
    let sp = split(dataset.len(), DEFAULT_TRAIN_FRACTION, SPLIT_SEED).unwrap();
    assert_eq!((sp.train.len(), sp.val.len()), (91, 31));
    let hyper = TrainHyper::default();
    let pca = full.truncate(k_rule).unwrap();
    let outcome = train(&dataset, &sp, &pca, &hyper).unwrap();
    let elapsed = start.elapsed();
    let k5 = train(&dataset, &sp, &full.truncate(5).unwrap(), &hyper).unwrap();
    Run {
        dataset,
        pca,
        k_rule,
        val_rmse: outcome.history.last().unwrap().val_rmse,
        model: outcome.model,
        val_rmse_k5: k5.history.last().unwrap().val_rmse,
        elapsed,
    }
}

fn end_to_end_verdict(noisy: &Run, clean: &Run) -> Verdict {
    let pass = noisy.val_rmse <= 0.5
        && clean.val_rmse <= 0.15
        && within(noisy.elapsed, 120)
        && within(clean.elapsed, 120)
        && noisy.dataset.len() == 122
        && noisy.dataset.entries[0].image.len() == 100 * 100;
    let line = |name: &str, r: &Run, limit: f64| {
        format!(
            "{name}: k = {} (0.92 rule), val RMSE {:.4} (limit {limit}), forced k = 5 val RMSE {:.4}, {:.1} s",
            r.k_rule,
            r.val_rmse,
            r.val_rmse_k5,
            r.elapsed.as_secs_f64()
        )
    };
    verdict(pass, format!("{}; {}", line("jitter 0.05", noisy, 0.5), line("jitter 0", clean, 0.15)))
}

fn held_out() -> Dataset {
    let mut cfg = gen_config(0.0);
    cfg.seed = HELD_OUT_SEED;
    cfg.counts = DatasetCounts { horizontal: 10, vertical: 10, inclined: 10, flat: 10 };
    Dataset::from_samples(&gen_samples(&cfg).unwrap()).unwrap()
}

fn perpendicularity(run: &Run, held: &Dataset) -> Verdict {
    let wrinkled: Vec<_> = held.entries.iter().filter(|e| e.kind != WrinkleType::Flat).collect();
    let hits = wrinkled
        .iter()
        .filter(|e| {
            let pred = predict_image(&run.model, &run.pca, &e.image).unwrap();
            wrap_angle(pred.theta - e.action.theta).abs() <= 0.3
        })
        .count();
    let pass = wrinkled.len() == 30 && hits * 10 >= wrinkled.len() * 8;
    verdict(pass, format!("{hits}/{} held-out scenes within 0.3 rad (need 80%)", wrinkled.len()))
}

fn flat_cloth(run: &Run, held: &Dataset) -> Verdict {
    let lengths: Vec<f64> = run
        .dataset
        .entries
        .iter()
        .filter(|e| e.kind != WrinkleType::Flat)
        .map(|e| e.action.d)
        .collect();
    let limit = 0.2 * lengths.iter().sum::<f64>() / lengths.len() as f64;
    let ds: Vec<f64> = held
        .entries
        .iter()
        .filter(|e| e.kind == WrinkleType::Flat)
        .map(|e| predict_image(&run.model, &run.pca, &e.image).unwrap().d)
        .collect();
    let worst = ds.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ok = ds.iter().filter(|&&d| d <= limit).count();
    verdict(
        ds.len() == 10 && ok == ds.len(),
        format!("{ok}/{} flat scenes with d <= {limit:.4} m; largest predicted d {worst:.4} m", ds.len()),
    )
}

fn cli(dir: &Path, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_clothflat")).current_dir(dir).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn full_cli_run(dir: &Path) -> Vec<(String, Vec<u8>)> {
    cli(dir, &["generate"]);
    cli(dir, &["train"]);
    cli(dir, &["eval"]);
    cli(dir, &["render"]);
    ["data/manifest.csv", "run/pca.pca1", "run/model.mlp1", "run/history.csv", "run/actions.svg"]
        .iter()
        .map(|f| (f.to_string(), fs::read(dir.join(f)).unwrap()))
        .collect()
}

fn determinism() -> Verdict {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (first, second) = (full_cli_run(a.path()), full_cli_run(b.path()));
    let differing: Vec<&str> = first.iter().zip(&second).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0.as_str()).collect();
    verdict(
        differing.is_empty(),
        if differing.is_empty() {
            "manifest, PCA1, MLP1, history and SVG byte-identical across two runs".to_string()
        } else {
            format!("differing outputs: {}", differing.join(", "))
        },
    )
}

fn golden_suite() -> Verdict {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/golden");
    let index = fs::read_to_string(dir.join("index.txt")).unwrap();
    let mut total = 0;
    let mut mismatched = Vec::new();
    for line in index.lines().filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split_whitespace().collect();
        let n = |i: usize| f[i].parse::<usize>().unwrap();
        let scene = pnm::read_ppm(dir.join(format!("{}.ppm", f[0]))).unwrap();
        let map = extract_wrinkles(&scene, Rect::new(n(1), n(2), n(3), n(4)), &ImagingParams::default()).unwrap();
        total += 1;
        if pnm::encode_pgm(&map.into_gray()) != fs::read(dir.join(format!("{}.pgm", f[0]))).unwrap() {
            mismatched.push(f[0].to_string());
        }
    }
    verdict(
        total == 6 && mismatched.is_empty(),
        format!("{}/{total} golden maps byte-identical {mismatched:?}", total - mismatched.len()),
    )
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, v: Verdict| {
        println!("criterion {n} {name}: {} ({})", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed += 1;
        }
    };
    report(1, "otsu oracle", otsu_oracle());
    report(2, "pca oracle", pca_oracle());
    report(3, "gradient check", gradient_check());
    report(4, "adam step and lr schedule", adam_and_schedule());
    let noisy = end_to_end(0.05);
    let clean = end_to_end(0.0);
    report(5, "end-to-end validation RMSE", end_to_end_verdict(&noisy, &clean));
    let held = held_out();
    report(6, "pull perpendicular to wrinkles", perpendicularity(&noisy, &held));
    report(7, "flat cloth pull length", flat_cloth(&noisy, &held));
    report(8, "determinism", determinism());
    report(9, "imaging golden suite", golden_suite());
    if failed > 0 {
        println!("{failed} of 9 acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 9 acceptance criteria passed");
}
