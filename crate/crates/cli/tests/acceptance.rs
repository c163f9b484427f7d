//! The release gate: one test per contract criterion, each printing a
//! PASS line with the measured quantity (visible under --nocapture).
//!
//! Statistical checks here use their own brute-force oracles, written
//! independently of the library internals they judge.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use modescale::eemd::{eemd, EemdConfig};
use modescale::emd::{
    emd, Decomposition, DecompositionParams, Imf, Method, SiftConfig, TransformKind,
};
use modescale::hilbert::{analytic_signal, instantaneous_profile};
use modescale::metrics::mean_period;
use modescale::regression::{
    classify, multiscale_fit, ols_fit, RegressionSpec, RoleLabel, Taxonomy,
};
use modescale::series::TimeSeries;
use modescale::synth;

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn random_series(rng: &mut ChaCha8Rng, n: usize, name: &str) -> TimeSeries {
    // Random walk plus tone plus noise: trend, oscillation, and roughness.
    let freq = rng.random_range(0.02..0.3);
    let amp = rng.random_range(0.5..3.0);
    let mut level = 0.0;
    let values = (0..n)
        .map(|t| {
            let step: f64 = StandardNormal.sample(rng);
            level += 0.3 * step;
            let noise: f64 = StandardNormal.sample(rng);
            level + amp * (2.0 * std::f64::consts::PI * freq * t as f64).sin() + 0.2 * noise
        })
        .collect();
    synth::series(name, values)
}

#[test]
fn acceptance_1_completeness() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let lengths = [99usize, 512, 2048];
    let mut worst_emd = 0.0f64;
    let mut worst_eemd = 0.0f64;
    for case in 0..50 {
        let n = lengths[case % lengths.len()];
        let s = random_series(&mut rng, n, "x");
        let scale = max_abs(s.values());

        let d = emd(&s, &SiftConfig::default()).unwrap();
        let rebuilt = d.reconstruct();
        let err = s
            .values()
            .iter()
            .zip(&rebuilt)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        worst_emd = worst_emd.max(err / scale);
        assert!(
            err <= 1e-8 * scale,
            "EMD reconstruction error {err} exceeds 1e-8 * {scale} (n = {n}, case {case})"
        );

        let config = EemdConfig {
            ensemble_size: if n >= 2048 { 6 } else { 12 },
            noise_std: 0.2,
            seed: 2000 + case as u64,
            sift: SiftConfig::default(),
        };
        let e = eemd(&s, &config).unwrap();
        let rebuilt = e.reconstruct();
        let err = s
            .values()
            .iter()
            .zip(&rebuilt)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        worst_eemd = worst_eemd.max(err / scale);
        assert!(
            err <= 1e-12 * scale,
            "ensemble closure error {err} exceeds 1e-12 * {scale} (n = {n}, case {case})"
        );
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "completeness suite took {elapsed:.1} s");
    println!(
        "criterion 1 (completeness): PASS; worst relative error {worst_emd:.3e} plain, \
         {worst_eemd:.3e} ensemble, {elapsed:.1} s for 50 series"
    );
}

#[test]
fn acceptance_2_two_tone_separation() {
    let n = 2048;
    let fast: Vec<f64> = (0..n)
        .map(|t| (2.0 * std::f64::consts::PI * 0.25 * t as f64).sin())
        .collect();
    let slow: Vec<f64> = (0..n)
        .map(|t| (2.0 * std::f64::consts::PI * 0.03 * t as f64).sin())
        .collect();
    let s = synth::series("two", synth::two_tone(n));
    let d = emd(&s, &SiftConfig::default()).unwrap();
    assert!(d.imfs.len() >= 2, "expected at least two modes");

    let margin = n / 20;
    let interior = margin..n - margin;
    let stats = |got: &[f64], truth: &[f64]| {
        let idx: Vec<usize> = interior.clone().collect();
        let rmse = (idx
            .iter()
            .map(|&i| (got[i] - truth[i]) * (got[i] - truth[i]))
            .sum::<f64>()
            / idx.len() as f64)
            .sqrt();
        let g: Vec<f64> = idx.iter().map(|&i| got[i]).collect();
        let t: Vec<f64> = idx.iter().map(|&i| truth[i]).collect();
        let corr = modescale::metrics::pearson(&g, &t).unwrap().unwrap();
        (rmse, corr)
    };
    let (rmse1, corr1) = stats(&d.imfs[0].values, &fast);
    let (rmse2, corr2) = stats(&d.imfs[1].values, &slow);
    assert!(rmse1 < 0.05, "fast-mode interior RMSE {rmse1}");
    assert!(rmse2 < 0.05, "slow-mode interior RMSE {rmse2}");
    assert!(corr1 > 0.95, "fast-mode correlation {corr1}");
    assert!(corr2 > 0.95, "slow-mode correlation {corr2}");
    println!(
        "criterion 2 (two-tone separation): PASS; RMSE {rmse1:.4}/{rmse2:.4}, \
         correlation {corr1:.4}/{corr2:.4}"
    );
}

#[test]
fn acceptance_3_dyadic_filter_bank() {
    let n = 4096;
    let mut in_band = 0usize;
    let mut total = 0usize;
    let mut ratios = Vec::new();
    for seed in 0..5u64 {
        let noise = synth::gaussian(n, 3000 + seed);
        let s = synth::series("noise", noise);
        let config = EemdConfig {
            ensemble_size: 100,
            noise_std: 0.2,
            seed,
            sift: SiftConfig::default(),
        };
        let d = eemd(&s, &config).unwrap();
        let periods: Vec<Option<f64>> = d.imfs.iter().map(|imf| mean_period(&imf.values)).collect();
        for k in [2usize, 3, 4, 5] {
            // Ratio of mode k+1's period to mode k's, 1-based indexing.
            let (Some(Some(a)), Some(Some(b))) = (periods.get(k - 1), periods.get(k)) else {
                continue;
            };
            let (a, b) = (*a, *b);
            let ratio = b / a;
            ratios.push(ratio);
            total += 1;
            if (1.5..=2.6).contains(&ratio) {
                in_band += 1;
            }
        }
    }
    assert_eq!(total, 20, "five seeds with four ratio pairs each");
    let share = in_band as f64 / total as f64;
    assert!(
        share >= 0.9,
        "only {in_band}/{total} dyadic ratios in [1.5, 2.6]: {ratios:?}"
    );
    println!(
        "criterion 3 (dyadic filter bank): PASS; {in_band}/{total} consecutive-period \
         ratios in [1.5, 2.6]"
    );
}

#[test]
fn acceptance_4_degenerate_ensemble_is_plain_emd() {
    for (n, seed) in [(99usize, 11u64), (512, 12), (777, 13)] {
        let s = synth::series("x", synth::gaussian(n, seed));
        let plain = emd(&s, &SiftConfig::default()).unwrap();
        let config = EemdConfig {
            ensemble_size: 1,
            noise_std: 0.0,
            seed: 42,
            sift: SiftConfig::default(),
        };
        let ensemble = eemd(&s, &config).unwrap();
        assert_eq!(
            plain.imfs.len(),
            ensemble.imfs.len(),
            "mode count (n = {n})"
        );
        for (a, b) in plain.imfs.iter().zip(&ensemble.imfs) {
            for (x, y) in a.values.iter().zip(&b.values) {
                assert_eq!(
                    x.to_bits(),
                    y.to_bits(),
                    "mode {} differs (n = {n})",
                    a.index
                );
            }
            assert_eq!(a.converged, b.converged);
        }
        for (x, y) in plain.residue.iter().zip(&ensemble.residue) {
            assert_eq!(x.to_bits(), y.to_bits(), "residue differs (n = {n})");
        }
    }
    println!(
        "criterion 4 (degenerate ensemble): PASS; one-trial zero-noise ensembles \
         match plain decomposition bit for bit at three lengths"
    );
}

/// All-pairs Kendall tau-b, straight from the definition.
fn kendall_brute(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    let mut tied_a = 0i64;
    let mut tied_b = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let da = a[i] == a[j];
            let db = b[i] == b[j];
            if da {
                tied_a += 1;
            }
            if db {
                tied_b += 1;
            }
            if da || db {
                continue;
            }
            if (a[i] < a[j]) == (b[i] < b[j]) {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let denom_a = n0 - tied_a;
    let denom_b = n0 - tied_b;
    if denom_a == 0 || denom_b == 0 {
        return None;
    }
    Some((concordant - discordant) as f64 / ((denom_a as f64) * (denom_b as f64)).sqrt())
}

/// Pearson correlation from raw moments, the textbook one-pass formula.
fn pearson_brute(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let saa: f64 = a.iter().map(|x| x * x).sum();
    let sbb: f64 = b.iter().map(|x| x * x).sum();
    let sab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let cov = sab - sa * sb / n;
    let va = saa - sa * sa / n;
    let vb = sbb - sb * sb / n;
    if va <= 0.0 || vb <= 0.0 {
        return None;
    }
    Some(cov / (va * vb).sqrt())
}

/// OLS by normal equations and Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn ols_brute(y: &[f64], columns: &[Vec<f64>]) -> Vec<f64> {
    let n = y.len();
    let k = columns.len() + 1;
    let x = |i: usize, j: usize| if j == 0 { 1.0 } else { columns[j - 1][i] };
    let mut a = vec![vec![0.0f64; k + 1]; k];
    for p in 0..k {
        for q in 0..k {
            a[p][q] = (0..n).map(|i| x(i, p) * x(i, q)).sum();
        }
        a[p][k] = (0..n).map(|i| x(i, p) * y[i]).sum();
    }
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            for q in col..=k {
                a[row][q] -= f * a[col][q];
            }
        }
    }
    let mut beta = vec![0.0f64; k];
    for row in (0..k).rev() {
        let mut acc = a[row][k];
        for q in row + 1..k {
            acc -= a[row][q] * beta[q];
        }
        beta[row] = acc / a[row][row];
    }
    beta
}

#[test]
fn acceptance_5_statistical_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(5005);
    let mut worst_corr = 0.0f64;
    for case in 0..1000 {
        let n = rng.random_range(3..=200);
        // Half the vectors draw from small integer pools to force ties.
        let tied = case % 2 == 0;
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    if tied {
                        rng.random_range(0..6) as f64
                    } else {
                        StandardNormal.sample(rng)
                    }
                })
                .collect()
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);

        let got = modescale::metrics::kendall_tau(&a, &b).unwrap();
        let want = kendall_brute(&a, &b);
        match (got, want) {
            (None, None) => {}
            (Some(g), Some(w)) => {
                let diff = (g - w).abs();
                worst_corr = worst_corr.max(diff);
                assert!(diff <= 1e-12, "kendall {g} vs brute {w} (case {case})");
            }
            other => panic!("kendall definedness mismatch {other:?} (case {case})"),
        }

        let got = modescale::metrics::pearson(&a, &b).unwrap();
        let want = pearson_brute(&a, &b);
        match (got, want) {
            (None, None) => {}
            (Some(g), Some(w)) => {
                let diff = (g - w).abs();
                worst_corr = worst_corr.max(diff);
                assert!(diff <= 1e-12, "pearson {g} vs brute {w} (case {case})");
            }
            other => panic!("pearson definedness mismatch {other:?} (case {case})"),
        }
    }

    let mut worst_ols = 0.0f64;
    for case in 0..200 {
        let n = rng.random_range(20..=80);
        let k = rng.random_range(1..=5);
        let columns: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..n).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                columns.iter().map(|c| c[i]).sum::<f64>() + noise
            })
            .collect();
        let named: Vec<(String, Vec<f64>)> = columns
            .iter()
            .cloned()
            .enumerate()
            .map(|(j, c)| (format!("x{j}"), c))
            .collect();
        let fit = ols_fit(&y, &named, false).unwrap();
        let want = ols_brute(&y, &columns);
        let scale = max_abs(&want).max(1.0);
        for (g, w) in fit.coefficients.iter().zip(&want) {
            let rel = (g - w).abs() / scale;
            worst_ols = worst_ols.max(rel);
            assert!(rel <= 1e-10, "coefficient {g} vs brute {w} (case {case})");
        }
    }
    println!(
        "criterion 5 (statistical oracles): PASS; worst correlation gap {worst_corr:.2e} \
         over 1000 vectors, worst OLS relative gap {worst_ols:.2e} over 200 systems"
    );
}

fn planted_decomposition(name: &str, modes: Vec<Vec<f64>>, n: usize) -> Decomposition {
    let imfs: Vec<Imf> = modes
        .into_iter()
        .enumerate()
        .map(|(j, values)| Imf {
            values,
            index: j + 1,
            converged: true,
            sift_iterations: 1,
        })
        .collect();
    Decomposition {
        name: name.to_string(),
        timestamps: synth::series(name, vec![0.0; n]).timestamps().to_vec(),
        imfs,
        residue: vec![0.0; n],
        method: Method::Emd,
        params: DecompositionParams {
            sift: SiftConfig::default(),
            eemd: None,
        },
        transform: TransformKind::Levels,
        coverage: None,
    }
}

#[test]
fn acceptance_6_planted_coefficient_recovery() {
    let n = 99;
    let bp_fast = synth::tone(n, 0.25, 1.0, 0.3);
    let noise = synth::gaussian(n, 30);
    let spi_fast: Vec<f64> = bp_fast
        .iter()
        .zip(&noise)
        .map(|(b, e)| -0.5 * b + 0.01 * e)
        .collect();
    let bp = planted_decomposition(
        "BP",
        vec![
            bp_fast,
            synth::tone(n, 0.08, 0.7, 0.0),
            synth::tone(n, 0.02, 1.2, 0.5),
        ],
        n,
    );
    let spi = planted_decomposition(
        "SPI",
        vec![spi_fast, synth::gaussian(n, 31), synth::gaussian(n, 32)],
        n,
    );
    let spec = RegressionSpec {
        dependent: "SPI".to_string(),
        regressors: vec!["BP".to_string()],
        lag_dependent: 1,
        alpha: 0.10,
        robust_se: false,
        taxonomy: Taxonomy::ThreeWay,
    };
    let fits = multiscale_fit(&[spi, bp], &spec).unwrap();
    let scale1 = fits[0].fit.as_ref().unwrap();
    let j = scale1.term_index("BP").unwrap();
    let coef = scale1.coefficients[j];
    assert!(
        (coef + 0.5).abs() <= 0.05,
        "planted -0.5 recovered as {coef}"
    );
    let label = classify(scale1, "BP", 1, 0.10, Taxonomy::ThreeWay).unwrap();
    assert_eq!(label.label, RoleLabel::WeakSafeHaven, "{label:?}");
    println!(
        "criterion 6 (planted coefficient): PASS; recovered {coef:.4}, \
         classified weak-safe-haven at alpha 0.10"
    );
}

#[test]
fn acceptance_7_instantaneous_frequency() {
    let n = 512;
    let tone = synth::tone(n, 0.1, 1.0, 0.0);
    let z = analytic_signal(&tone).unwrap();
    let profile = instantaneous_profile(&z);
    let interior = &profile.frequency[16..n - 16];
    let mean = interior.iter().sum::<f64>() / interior.len() as f64;
    let tone_err = (mean - 0.1).abs() / 0.1;
    assert!(tone_err < 0.01, "tone frequency off by {tone_err:.4}");

    let n = 1024;
    let chirp = synth::chirp(n, 0.05, 0.2);
    let z = analytic_signal(&chirp).unwrap();
    let profile = instantaneous_profile(&z);
    let mut worst_chirp = 0.0f64;
    for t in n / 10..n * 9 / 10 {
        let expected = 0.05 + (0.2 - 0.05) * t as f64 / n as f64;
        let rel = (profile.frequency[t] - expected).abs() / expected;
        worst_chirp = worst_chirp.max(rel);
    }
    assert!(
        worst_chirp < 0.02,
        "chirp frequency off by {worst_chirp:.4} in the middle 80%"
    );
    println!(
        "criterion 7 (instantaneous frequency): PASS; tone mean off by {tone_err:.2e}, \
         chirp worst-case off by {worst_chirp:.2e}"
    );
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .ancestors()
        .nth(2)
        .unwrap()
        .to_path_buf()
}

fn run_bundled_pipeline(run_dir: &Path) -> std::process::Output {
    let root = repo_root();
    let template = std::fs::read_to_string(root.join("data/pipeline.conf")).unwrap();
    let mut rewritten = String::new();
    for line in template.lines() {
        let trimmed = line.trim();
        if trimmed.starts_with("input.file") {
            rewritten.push_str(&format!(
                "input.file = {}\n",
                root.join("data/synthetic_panel.csv").display()
            ));
        } else if trimmed.starts_with("output.dir") {
            rewritten.push_str(&format!("output.dir = {}\n", run_dir.display()));
        } else {
            rewritten.push_str(line);
            rewritten.push('\n');
        }
    }
    let config_path = run_dir.parent().unwrap().join(format!(
        "{}.conf",
        run_dir.file_name().unwrap().to_string_lossy()
    ));
    std::fs::write(&config_path, rewritten).unwrap();
    std::process::Command::new(env!("CARGO_BIN_EXE_modescale"))
        .arg("pipeline")
        .arg("--config")
        .arg(&config_path)
        .output()
        .expect("binary runs")
}

#[test]
fn acceptance_8_report_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let out = run_bundled_pipeline(&run_dir);
    assert!(
        out.status.success(),
        "pipeline failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let features = std::fs::read_to_string(run_dir.join("SPI_features.csv")).unwrap();
    let mut lines = features.lines();
    assert_eq!(
        lines.next().unwrap(),
        "imf_index,mean_period,pearson,pearson_p,kendall,kendall_p,variance_share,horizon"
    );
    let rows: Vec<&str> = lines.collect();
    let mode_count = rows.len();
    assert!(
        (3..=7).contains(&mode_count),
        "mode count {mode_count} outside [3, 7]"
    );
    let share_sum: f64 = rows
        .iter()
        .map(|r| r.split(',').nth(6).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!(
        (share_sum - 100.0).abs() <= 0.01,
        "variance shares sum to {share_sum}"
    );

    let table = std::fs::read_to_string(run_dir.join("regression.csv")).unwrap();
    let mut lines = table.lines();
    let header = lines.next().unwrap();
    let header_cols: Vec<&str> = header.split(',').collect();
    assert_eq!(header_cols[0], "term");
    assert_eq!(header_cols.len(), 1 + mode_count, "one column per mode");
    for (i, col) in header_cols[1..].iter().enumerate() {
        assert_eq!(*col, format!("IMF{}", i + 1));
    }
    let terms: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(
        terms,
        vec!["C", "SPI(-1)", "BP", "gold", "silver", "WTI", "R2"],
        "fixed row layout: intercept, lag, regressors, fit"
    );
    println!(
        "criterion 8 (report shapes): PASS; {mode_count} modes, variance \
         shares sum {share_sum:.4}, regression terms as expected"
    );
}

#[test]
fn acceptance_9_determinism_and_performance() {
    // Byte-identical rerun of the bundled pipeline into the same directory.
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let out = run_bundled_pipeline(&run_dir);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let snapshot: std::collections::BTreeMap<String, Vec<u8>> = std::fs::read_dir(&run_dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().to_string(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    assert!(snapshot.len() > 30, "expected a full run directory");
    let out = run_bundled_pipeline(&run_dir);
    assert!(out.status.success());
    let mut compared = 0;
    for entry in std::fs::read_dir(&run_dir).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name().to_string_lossy().to_string();
        let bytes = std::fs::read(entry.path()).unwrap();
        assert_eq!(
            Some(&bytes),
            snapshot.get(&name),
            "{name} changed across reruns"
        );
        compared += 1;
    }
    assert_eq!(compared, snapshot.len());

    // Single-threaded ensemble runtime bound.
    let s = synth::series("perf", synth::gaussian(1000, 99));
    let config = EemdConfig {
        ensemble_size: 200,
        noise_std: 0.2,
        seed: 42,
        sift: SiftConfig::default(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let started = Instant::now();
    let d = pool.install(|| eemd(&s, &config)).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    assert!(!d.imfs.is_empty());
    assert!(
        elapsed < 10.0,
        "single-threaded 200-trial ensemble took {elapsed:.2} s"
    );
    println!(
        "criterion 9 (determinism and performance): PASS; {compared} files byte-stable, \
         single-threaded ensemble in {elapsed:.2} s"
    );
}
