//! Acceptance checks, one PASS/FAIL line each. Run with
//! `cargo test -p dataneeds-cli --test acceptance -- --nocapture`.

#[path = "../../core/tests/support/oracles.rs"]
mod oracles;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use dataneeds::extrapolate::{bin_weights, fit_loglinear, invert_fit};
use dataneeds::metrics::{accuracy, leep, logme, nce, weighted_kendall_tau, PredictionSet};
use dataneeds::rfsignal::{
    add_awgn, apply_freq_offset, apply_iqi, iqi_term, modulate, resample, Complex64, ModulationScheme, PulseShape,
};
use dataneeds::rng::stream_rng;
use dataneeds::whitening::{default_gamma, residual, target_metric_estimate, whiten_with_sigma, WhiteningConfig};
use dataneeds_cli::cost::{cost_estimate, CostAssumptions, JULIAN_YEAR_SECONDS};
use dataneeds_cli::predict::{cmd_predict, PredictOptions, Report, REPORT_FILE};
use dataneeds_cli::sweep::{cmd_sweep, INDEX_FILE};
use dataneeds_cli::synth::{cmd_synth, EVAL_FILE, TRAIN_FILE};
use nalgebra::{DMatrix, DVector};
use oracles::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("runtime {:.1} s exceeds {limit_s} s", elapsed.as_secs_f64())
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn metric_oracles() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let n = rng.random_range(1..=50);
        let c = rng.random_range(2..=5);
        let (rows, labels) = random_instance(&mut rng, n, c);
        let pred = PredictionSet::from_rows(&rows, labels.clone()).map_err(|e| e.to_string())?;
        let got = [nce(&pred), leep(&pred).map_err(|e| e.to_string())?];
        let want = [nce_oracle(&rows, &labels, c), leep_oracle(&rows, &labels, c)];
        for (g, w) in got.iter().zip(&want) {
            let err = (g - w).abs();
            worst = worst.max(err);
            ensure(err <= 1e-12, || format!("instance {i} (N={n}, C={c}): {g} vs oracle {w}"))?;
        }
    }
    within(start.elapsed(), 5.0)?;
    Ok(format!("200 instances, max |Δ| = {worst:.1e}"))
}

fn logme_evidence() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x10C3);
    let (mut worst_gap, mut worst_residual): (f64, f64) = (0.0, 0.0);
    for i in 0..50 {
        let c = rng.random_range(2..=4);
        let n = rng.random_range(4 * c..=60);
        let (rows, mut labels) = random_instance(&mut rng, n, c);
        for (k, label) in labels.iter_mut().take(c).enumerate() {
            *label = k;
        }
        let pred = PredictionSet::from_rows(&rows, labels.clone()).map_err(|e| e.to_string())?;
        let result = logme(&pred).map_err(|e| e.to_string())?;
        let features = DMatrix::from_fn(n, c, |r, j| rows[r][j]);
        for (k, p) in result.per_class.iter().enumerate() {
            let y = DVector::from_iterator(n, labels.iter().map(|&l| (l == k) as u8 as f64));
            let (grid_best, grid_alpha, grid_beta) = MarginalSpectrum::new(&features, &y).grid_max();
            // The fast grid must agree with the dense Cholesky form.
            let dense = log_evidence_dense(&features, &y, grid_alpha, grid_beta);
            ensure(rel(dense, grid_best) < 1e-9, || format!("instance {i}: grid evaluators disagree"))?;
            let gap = rel(p.log_evidence, grid_best);
            worst_gap = worst_gap.max(gap);
            ensure(gap <= 1e-3, || {
                format!("instance {i} class {k}: fixed point {} vs grid {grid_best}", p.log_evidence)
            })?;
            let alpha_res = rel(p.alpha, p.effective_params / p.weight_norm2);
            let beta_res = rel(p.beta, (n as f64 - p.effective_params) / p.residual_norm2);
            worst_residual = worst_residual.max(alpha_res).max(beta_res);
            ensure(alpha_res < 1e-4 && beta_res < 1e-4, || {
                format!("instance {i} class {k}: self-consistency residuals {alpha_res:.1e}, {beta_res:.1e}")
            })?;
        }
    }
    within(start.elapsed(), 60.0)?;
    Ok(format!(
        "50 instances, max relative gap to grid {worst_gap:.1e}, max fixed-point residual {worst_residual:.1e}"
    ))
}

fn kendall() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7A0);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let n = rng.random_range(2..=200);
        // Coarse rounding on half the vectors exercises tie handling.
        let coarse = i % 2 == 0;
        let draw = |rng: &mut ChaCha8Rng| {
            let v: f64 = rng.random_range(-1.0..1.0);
            if coarse {
                (v * 5.0).round()
            } else {
                v
            }
        };
        let x: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.5 * v + draw(&mut rng)).collect();
        let got = weighted_kendall_tau(&x, &y).map_err(|e| e.to_string())?;
        let want = weighted_tau_oracle(&x, &y);
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() <= 1e-12, || format!("vector {i} (n={n}): {got} vs oracle {want}"))?;

        let strict: Vec<f64> = (0..n).map(|k| k as f64 + rng.random::<f64>() * 0.5).collect();
        let negated: Vec<f64> = strict.iter().map(|v| -v).collect();
        let same = weighted_kendall_tau(&strict, &strict).map_err(|e| e.to_string())?;
        let reverse = weighted_kendall_tau(&strict, &negated).map_err(|e| e.to_string())?;
        ensure(same == 1.0 && reverse == -1.0, || format!("vector {i}: τ(x,x) = {same}, τ(x,−x) = {reverse}"))?;
    }
    Ok(format!("100 vectors, max |Δ| = {worst:.1e}; τ(x,x) = 1 and τ(x,−x) = −1 exactly"))
}

fn whitening_calibration() -> Check {
    let start = Instant::now();
    let classes = 10;
    let labels: Vec<usize> = (0..100_000).map(|i| i % classes).collect();
    let estimate = |epsilon: f64| {
        let config = WhiteningConfig {
            epsilon,
            iterations: 100,
            ..WhiteningConfig::for_classes(classes, 2024)
        };
        target_metric_estimate(&labels, classes, &config).map_err(|e| e.to_string())
    };
    let mut detail = Vec::new();
    for epsilon in [1e-3, 1e-2] {
        let measured = estimate(epsilon)?.epsilon_measured;
        ensure(rel(measured, epsilon) <= 0.2, || format!("ε = {epsilon}: measured {measured}"))?;
        detail.push(format!("ε̂({epsilon}) = {measured:.4e}"));
    }

    let exact = whiten_with_sigma(&labels, classes, default_gamma(classes), 0.0, &mut stream_rng(1, &[])).map_err(|e| e.to_string())?;
    ensure(accuracy(&exact) == 1.0 && nce(&exact) == 0.0, || "σ = 0 is not exact".into())?;
    let bypass = estimate(0.0)?;
    ensure(bypass.accuracy_mean == 1.0 && bypass.nce_mean == 0.0, || {
        format!("ε = 0 bypass: accuracy {}, NCE {}", bypass.accuracy_mean, bypass.nce_mean)
    })?;

    let measured = estimate(1e-5)?.epsilon_measured;
    let delta = residual(1e-5, measured).map_err(|e| e.to_string())?;
    detail.push(format!("Δ(1e-5, ε̂) = {delta:.4}"));
    within(start.elapsed(), 120.0)?;
    Ok(detail.join(", "))
}

fn inversion_anchor() -> Check {
    let (q1, a1, q2, a2) = (1e6, 0.81, 5.25e6, 0.90);
    let slope = (a2 - a1) / (f64::log10(q2) - 6.0);
    let q_mid: f64 = 2.5e6;
    let a_mid = a1 + slope * (q_mid.log10() - 6.0);
    let fit = fit_loglinear(&[q1, q_mid, q2], &[a1, a_mid, a2]).map_err(|e| e.to_string())?;
    let q = invert_fit(&fit, 0.90).map_err(|e| e.to_string())?;
    ensure(rel(q, 5.25e6) <= 1e-6, || format!("inverted at 0.90: {q}"))?;

    let flat = fit_loglinear(&[1e3, 1e4, 1e5], &[0.5, 0.5, 0.5]).map_err(|e| e.to_string())?;
    let unbounded = invert_fit(&flat, 0.9).map_err(|e| e.to_string())?;
    ensure(unbounded == f64::INFINITY, || format!("flat fit returned {unbounded}"))?;
    Ok(format!("q(0.90) = {q:.6e}; flat fit → ∞"))
}

fn gof() -> Check {
    let quantities = [10.0, 20.0, 50.0, 100.0, 300.0, 1000.0, 5000.0];
    let values: Vec<f64> = quantities.iter().map(|q: &f64| 0.3 + 0.07 * q.log10()).collect();
    let fit = fit_loglinear(&quantities, &values).map_err(|e| e.to_string())?;
    let nrwmse = fit.gof.ok_or("missing gof")?;
    ensure(nrwmse.abs() <= 1e-12, || format!("exact line NRWMSE {nrwmse}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x60F);
    for _ in 0..1000 {
        let n = rng.random_range(2..40);
        let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(1..100_000u32) as f64).collect();
        q[1] = q[0] + 1.0;
        let w = bin_weights(&q).map_err(|e| e.to_string())?;
        let sum: f64 = w.iter().sum();
        ensure((sum - 1.0).abs() < 1e-12, || format!("weights of {q:?} sum to {sum}"))?;
    }

    // Three points in each of the bins [1, 10], (10, 100], (100, 1000].
    let balanced = [1.0, 2.0, 5.0, 20.0, 30.0, 50.0, 200.0, 500.0, 1000.0];
    let w = bin_weights(&balanced).map_err(|e| e.to_string())?;
    let expected = [1.0 / 7.0, 1.0 / 7.0, 1.0 / 7.0, 1.0 / 21.0, 1.0 / 21.0, 1.0 / 21.0, 1.0 / 7.0, 1.0 / 7.0, 1.0 / 7.0];
    for (got, want) in w.iter().zip(&expected) {
        ensure((got - want).abs() < 1e-12, || format!("equal occupancy weights {w:?}"))?;
    }
    Ok(format!("exact line NRWMSE {nrwmse:.1e}; weights sum to 1 on 1000 sets; 1/7–1/21–1/7 pattern"))
}

fn signal_chain() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x516);
    let qpsk = |len: usize, seed: u64| {
        modulate(ModulationScheme::Qpsk, len, 1, PulseShape::Rectangular, 0, &mut stream_rng(seed, &[]))
            .map_err(|e| e.to_string())
    };

    let obs = qpsk(4096, 1)?;
    ensure(apply_iqi(obs.clone(), 1.0, 1.0, 0.0, 0.0) == obs, || "IQI at g=1, φ=0 is not the identity".into())?;

    for _ in 0..1000 {
        let mut c = || Complex64::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let (x, y) = (c(), c());
        let (a, b): (f64, f64) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let (gt, gr) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
        let (pt, pr) = (rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        let lhs = iqi_term(x * a + y * b, gt, gr, pt, pr);
        let rhs = iqi_term(x, gt, gr, pt, pr) * a + iqi_term(y, gt, gr, pt, pr) * b;
        ensure((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()), || format!("IQI linearity {lhs} vs {rhs}"))?;
    }

    let clean = qpsk(1_000_000, 2)?;
    let mut snr_detail = Vec::new();
    for (i, target) in [0.0, 10.0, 20.0].into_iter().enumerate() {
        let noisy = add_awgn(clean.clone(), target, &mut stream_rng(3, &[i as u64]));
        let noise: f64 = clean.samples.iter().zip(&noisy.samples).map(|(a, b)| (b - a).norm_sqr()).sum();
        let signal: f64 = clean.samples.iter().map(|a| a.norm_sqr()).sum();
        let snr = 10.0 * (signal / noise).log10();
        ensure((snr - target).abs() <= 0.1, || format!("AWGN at {target} dB measured {snr:.3} dB"))?;
        snr_detail.push(format!("{snr:.3}"));
    }

    for _ in 0..20 {
        let f = rng.random_range(-0.49..0.49);
        let back = apply_freq_offset(apply_freq_offset(obs.clone(), f), -f);
        let err = back.samples.iter().zip(&obs.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        ensure(err <= 1e-12, || format!("FO {f} round trip error {err:.1e}"))?;
    }

    let len = 4096;
    let tones = [(0.013, 1.0, 0.3), (0.071, 0.7, 1.1), (0.137, 0.5, -0.4), (0.19, 0.3, 2.0)];
    let x: Vec<Complex64> = (0..len)
        .map(|n| {
            tones
                .iter()
                .map(|&(f, a, p)| Complex64::from_polar(a, 2.0 * std::f64::consts::PI * f * n as f64 + p))
                .sum()
        })
        .collect();
    let back = resample(&resample(&x, 2.0).map_err(|e| e.to_string())?, 0.5).map_err(|e| e.to_string())?;
    ensure(back.len() == len, || format!("SRM round trip length {}", back.len()))?;
    let edge = 64;
    let (err, sig) = (edge..len - edge).fold((0.0, 0.0), |(e, s), n| {
        (e + (back[n] - x[n]).norm_sqr(), s + x[n].norm_sqr())
    });
    let srm_db = 10.0 * (err / sig).log10();
    ensure(srm_db <= -60.0, || format!("SRM round trip {srm_db:.1} dB"))?;

    within(start.elapsed(), 30.0)?;
    Ok(format!("SNR measured [{}] dB at L=1e6; SRM round trip {srm_db:.1} dB", snr_detail.join(", ")))
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Runs the shipped default problem end to end under `threads` workers and
/// returns the report bytes.
fn default_pipeline(root: &Path, threads: Option<usize>) -> Result<Vec<u8>, String> {
    let configs = workspace_root().join("configs/default");
    let data = root.join("data");
    let mut sweep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(configs.join("sweep.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    sweep["train"] = serde_json::json!(data.join(TRAIN_FILE));
    sweep["eval"] = serde_json::json!(data.join(EVAL_FILE));
    let manifest = root.join("sweep.json");
    fs::write(&manifest, sweep.to_string()).map_err(|e| e.to_string())?;

    let run = || -> Result<(), String> {
        cmd_synth(&configs.join("synth.json"), 0, &data).map_err(|e| e.to_string())?;
        cmd_sweep(&manifest, None, &root.join("sweep")).map_err(|e| e.to_string())?;
        cmd_predict(&root.join("sweep").join(INDEX_FILE), PredictOptions::default(), &root.join("report"))
            .map_err(|e| e.to_string())?;
        Ok(())
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| e.to_string())?
            .install(run)?,
        None => run()?,
    }
    fs::read(root.join("report").join(REPORT_FILE)).map_err(|e| e.to_string())
}

fn end_to_end(report_bytes: &Result<Vec<u8>, String>, elapsed: Duration) -> Check {
    let bytes = report_bytes.as_ref().map_err(|e| e.clone())?;
    let report: Report = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
    let mut by_quantity: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for p in &report.points {
        by_quantity.entry(p.quantity).or_default().push(p.metrics.accuracy);
    }
    let expected: Vec<u64> = (5..=12).map(|e| 1u64 << e).collect();
    ensure(by_quantity.keys().cloned().collect::<Vec<_>>() == expected, || "unexpected quantity grid".into())?;
    ensure(by_quantity.values().all(|v| v.len() == 5), || "expected 5 trials per quantity".into())?;
    let medians: Vec<f64> = by_quantity
        .values_mut()
        .map(|v| {
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        })
        .collect();
    let medians_text = medians.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join(" ");
    let gate = report.correlation.ok_or("no correlation table")?;
    let pred = &report.prediction;
    let summary = format!(
        "median accuracy [{medians_text}]; τ(acc, ·): NCE {:.3}, LEEP {:.3}, LogME {:.3}; q̂ NCE {:?}, LogME {:?}, midpoint {:?}",
        gate.nce, gate.leep, gate.logme, pred.lower_hint, pred.upper_hint, pred.midpoint
    );
    let mut problems = Vec::new();
    if !medians.windows(2).all(|w| w[1] >= w[0]) {
        problems.push("median accuracy decreases".to_string());
    }
    if gate.nce < 0.7 {
        problems.push(format!("τ(acc, NCE) = {:.3} < 0.7", gate.nce));
    }
    if gate.leep < 0.7 {
        problems.push(format!("τ(acc, LEEP) = {:.3} < 0.7", gate.leep));
    }
    if report.fits.len() != 4 {
        problems.push("report lacks a fit".into());
    }
    if let (Some(lo), Some(hi), Some(mid)) = (pred.lower_hint, pred.upper_hint, pred.midpoint) {
        if lo.is_finite() && hi.is_finite() && !(lo.min(hi) <= mid && mid <= lo.max(hi)) {
            problems.push(format!("midpoint {mid} outside [{lo}, {hi}]"));
        }
    }
    if elapsed.as_secs_f64() >= 600.0 {
        problems.push(format!("runtime {:.0} s", elapsed.as_secs_f64()));
    }
    if problems.is_empty() {
        Ok(format!("{summary}; {:.0} s", elapsed.as_secs_f64()))
    } else {
        Err(format!("{}; {summary}", problems.join("; ")))
    }
}

fn determinism(reference: &Result<Vec<u8>, String>) -> Check {
    let reference = reference.as_ref().map_err(|e| e.clone())?;
    for threads in [1, 3] {
        let dir = TempDir::new().map_err(|e| e.to_string())?;
        let again = default_pipeline(dir.path(), Some(threads))?;
        ensure(&again == reference, || format!("report differs with {threads} worker(s)"))?;
    }
    Ok("report JSON byte-identical across reruns with 1, 3 and default workers".into())
}

fn cost() -> Check {
    let base = CostAssumptions {
        sample_rate_hz: 1e4,
        obs_len: 1024.0,
        n_classes: 3.0,
        bytes_per_sample: 8.0,
    };
    let trivial = cost_estimate(1e4, base).map_err(|e| e.to_string())?;
    ensure(trivial.total_samples == 3.072e7 && trivial.seconds == 3072.0, || {
        format!("trivial example: {} samples, {} s", trivial.total_samples, trivial.seconds)
    })?;
    for opc in [1.0, 7.0, 1234.5, 5.25e6] {
        let one = cost_estimate(opc, base).map_err(|e| e.to_string())?;
        let two = cost_estimate(2.0 * opc, base).map_err(|e| e.to_string())?;
        ensure(two.seconds == 2.0 * one.seconds && two.storage_bytes == 2.0 * one.storage_bytes, || {
            format!("not linear at OPC {opc}")
        })?;
    }

    let years = [1.72, 144.5, 33.4];
    let terabytes = [0.989, 82.9, 19.1];
    let ratios: Vec<f64> = terabytes.iter().zip(&years).map(|(t, y)| t / y).collect();
    let mean = ratios.iter().sum::<f64>() / 3.0;
    ensure(ratios.iter().all(|r| rel(*r, 0.574) < 0.01) && (mean - 0.574).abs() < 1e-3, || {
        format!("TB/year ratios {ratios:?}")
    })?;
    let bytes_per_sample = mean * 1e12 / (1e4 * JULIAN_YEAR_SECONDS);
    let implied = cost_estimate(
        1e6,
        CostAssumptions {
            bytes_per_sample,
            ..base
        },
    )
    .map_err(|e| e.to_string())?;
    let ratio = implied.storage_tb / implied.years;
    ensure(rel(ratio, mean) < 1e-12, || format!("estimator ratio {ratio} vs {mean}"))?;
    Ok(format!(
        "3.072e7 samples → 3072 s; TB/year ratios {:.4}, {:.4}, {:.4} (mean {mean:.4}, ≈ {bytes_per_sample:.2} bytes/sample)",
        ratios[0], ratios[1], ratios[2]
    ))
}

fn run(name: &str, check: impl FnOnce() -> Check) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
    match outcome {
        Ok(detail) => {
            println!("PASS  {name}: {detail}");
            true
        }
        Err(detail) => {
            println!("FAIL  {name}: {detail}");
            false
        }
    }
}

fn main() {
    let mut passed = vec![
        run("metric oracle equivalence", metric_oracles),
        run("LogME evidence", logme_evidence),
        run("Kendall tau", kendall),
        run("whitening calibration", whitening_calibration),
        run("inversion anchor", inversion_anchor),
        run("goodness of fit", gof),
    ];
    passed.push(run("signal chain", signal_chain));

    let dir = TempDir::new().expect("temporary directory");
    let start = Instant::now();
    let report = catch_unwind(AssertUnwindSafe(|| default_pipeline(dir.path(), None)))
        .unwrap_or_else(|_| Err("pipeline panicked".into()));
    let elapsed = start.elapsed();
    passed.push(run("end-to-end monotone demo", || end_to_end(&report, elapsed)));
    passed.push(run("determinism", || determinism(&report)));
    passed.push(run("cost arithmetic", cost));

    let failed = passed.iter().filter(|p| !**p).count();
    println!("{} passed, {failed} failed", passed.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
