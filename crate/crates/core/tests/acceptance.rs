//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion; exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use procert::certification::{
    build_plan, estimate_exhaustive, estimate_monte_carlo, expectation_via_inputs, relevant_for_gate,
    subsample_sweep, CertificationReport, Experiment,
};
use procert::channels::{average_fidelity, choi, choi_overlap, noisy_gate, Gate, NoiseModel, NoisePlacement, QuantumChannel};
use procert::golden;
use procert::linalg::ComplexMatrix;
use procert::pauli::enumerate_words;
use procert::readout::{measure_pauli, toggle_scheme, Mode, ReadoutCalibration};
use procert::rng::substream;
use procert::stats::{mean, sample_std, slope, spearman};
use procert::tomography::{collect, fidelity_from_tomography, invert};

type Outcome = Result<String, String>;

fn noisy(gate: Gate, noise: &str) -> QuantumChannel {
    let model: NoiseModel = noise.parse().expect("noise descriptor");
    noisy_gate(gate, &model, NoisePlacement::After).expect("noisy gate")
}

fn lab(ch: QuantumChannel) -> Experiment {
    Experiment::with_default_readout(ch).expect("experiment")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn check_report(r: &CertificationReport) -> Result<(), String> {
    ensure(r.average_fidelity_error() < 1e-12, || {
        format!("report F̄ {} inconsistent with F {}", r.average_fidelity, r.process_fidelity)
    })
}

fn golden_tables() -> Outcome {
    for gate in [Gate::Cnot, Gate::Cphase, Gate::CphaseChain] {
        let set = relevant_for_gate(gate).map_err(|e| e.to_string())?;
        ensure(set.render_table() == golden::raw(gate), || format!("{gate} table differs from golden file"))?;
    }
    let counts: Vec<usize> =
        [Gate::Cnot, Gate::Cphase, Gate::CphaseChain].iter().map(|&g| golden::table(g).len()).collect();
    ensure(counts == [16, 16, 64], || format!("golden row counts {counts:?}"))?;

    let toffoli = relevant_for_gate(Gate::Toffoli).map_err(|e| e.to_string())?;
    let unsigned: Vec<_> = toffoli.iter().map(|op| op.word).collect();
    ensure(unsigned == golden::table(Gate::Toffoli), || "toffoli word list differs from golden file".into())?;
    let unit = toffoli.iter().filter(|op| (op.ideal_expectation.abs() - 1.0).abs() < 1e-9).count();
    let half = toffoli.iter().filter(|op| (op.ideal_expectation.abs() - 0.5).abs() < 1e-9).count();
    ensure(toffoli.len() == 232 && unit == 8 && half == 224, || {
        format!("toffoli: {} operators, {unit} unit, {half} half", toffoli.len())
    })?;
    Ok("16/16/64 rows match with signs; toffoli 232 = 8 + 224".into())
}

fn setting_counts() -> Outcome {
    let mut got = Vec::new();
    for gate in [Gate::Cnot, Gate::CphaseChain, Gate::Toffoli] {
        let set = relevant_for_gate(gate).map_err(|e| e.to_string())?;
        got.push(build_plan(&set).map_err(|e| e.to_string())?.len());
    }
    ensure(got == [120, 2016, 7392], || format!("plan sizes {got:?}"))?;
    Ok(format!("plan sizes {got:?}"))
}

fn oracle_equivalence() -> Outcome {
    let noises = ["none", "depolarizing:0.05", "depolarizing:0.2", "amp_damp:0.1", "overrot:y:0.1"];
    let mut worst_f: f64 = 0.0;
    let mut worst_choi: f64 = 0.0;
    for gate in Gate::ALL {
        let set = relevant_for_gate(gate).map_err(|e| e.to_string())?;
        let ideal = choi(&gate.channel());
        for noise in noises {
            let ch = noisy(gate, noise);
            let e = lab(ch.clone());
            let report = estimate_exhaustive(&e, &set, Mode::Exact).map_err(|e| e.to_string())?;
            check_report(&report)?;
            let oracle = choi_overlap(&ideal, &choi(&ch)).map_err(|e| e.to_string())?;
            worst_f = worst_f.max((report.process_fidelity - oracle).abs());
            let est = invert(&collect(&e, Mode::Exact).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            worst_choi = worst_choi.max(est.matrix.max_abs_diff(choi(&ch).matrix()));
        }
    }
    ensure(worst_f < 1e-9 && worst_choi < 1e-9, || {
        format!("max |F − overlap| = {worst_f:.2e}, max Choi deviation = {worst_choi:.2e}")
    })?;
    Ok(format!("max |F − overlap| = {worst_f:.1e}, max tomography deviation = {worst_choi:.1e}"))
}

fn input_reduction() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut with_y = 0;
    for gate in Gate::ALL {
        let set = relevant_for_gate(gate).map_err(|e| e.to_string())?;
        for ch in [gate.channel(), noisy(gate, "amp_damp:0.15+overrot:x:0.2:1")] {
            let e = lab(ch.clone());
            let rho = choi(&ch);
            for op in &set {
                let via = expectation_via_inputs(&e, &op.word, Mode::Exact).map_err(|e| e.to_string())?.value;
                let direct = rho.expectation(&op.word).map_err(|e| e.to_string())?;
                worst = worst.max((via - direct).abs());
                if op.word.y_count() > 0 {
                    with_y += 1;
                }
            }
        }
    }
    ensure(worst < 1e-9, || format!("max deviation {worst:.2e}"))?;
    Ok(format!("max deviation {worst:.1e} ({with_y} checks with Y factors)"))
}

fn random_density(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let d = 1 << n;
    let g = ComplexMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let rho = g.matmul(&g.dagger()).expect("square");
    let tr = rho.trace().expect("square").re;
    rho.scale(Complex64::new(1.0 / tr, 0.0))
}

fn readout_extraction() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for n in 1..=3 {
        let targets: Vec<_> = enumerate_words(n).map_err(|e| e.to_string())?.into_iter().skip(1).collect();
        for t in &targets {
            let scheme = toggle_scheme(t).map_err(|e| e.to_string())?;
            ensure(scheme.patterns.len() == 1 << (n - 1), || format!("{t}: {} settings", scheme.patterns.len()))?;
        }
        let mut rng = substream(2024, &[n as u64]);
        for c in 0..5 {
            let cal = ReadoutCalibration::randomized(n, 100 * n as u64 + c).map_err(|e| e.to_string())?;
            for _ in 0..20 {
                let rho = random_density(n, &mut rng);
                for t in &targets {
                    let dense = rho.trace_product(&t.dense()).map_err(|e| e.to_string())?.re;
                    let r = measure_pauli(&rho, t, &cal, Mode::Exact).map_err(|e| e.to_string())?;
                    worst = worst.max((r.value - dense).abs());
                    checks += 1;
                }
            }
        }
    }
    ensure(worst < 1e-9, || format!("max deviation {worst:.2e}"))?;
    Ok(format!("{checks} extractions, max deviation {worst:.1e}; 2^(n-1) settings each"))
}

fn statistical_behavior() -> Outcome {
    let ch = noisy(Gate::Cnot, "depolarizing:0.2");
    let e = lab(ch.clone());
    let set = relevant_for_gate(Gate::Cnot).map_err(|e| e.to_string())?;
    let truth = choi_overlap(&choi(&Gate::Cnot.channel()), &choi(&ch)).map_err(|e| e.to_string())?;

    let trials = 1000;
    let mut estimates = Vec::with_capacity(trials);
    for t in 0..trials as u64 {
        let mode = Mode::Shots { shots: 1000, seed: 10_000 + t };
        let r = estimate_monte_carlo(&e, &set, 20, false, mode, t).map_err(|e| e.to_string())?;
        check_report(&r)?;
        estimates.push(r.process_fidelity);
    }
    let se = sample_std(&estimates) / (trials as f64).sqrt();
    let bias = mean(&estimates) - truth;
    ensure(bias.abs() < 4.0 * se, || format!("bias {bias:.2e} exceeds 4 SE ({se:.2e})"))?;

    let counts = [10usize, 40, 160, 640];
    let mut log_n = Vec::new();
    let mut log_sd = Vec::new();
    for &n in &counts {
        let f: Vec<f64> = (0..500u64)
            .map(|t| estimate_monte_carlo(&e, &set, n, false, Mode::Exact, 77_000 + t).map(|r| r.process_fidelity))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        log_n.push((n as f64).ln());
        log_sd.push(sample_std(&f).ln());
    }
    let fitted = slope(&log_n, &log_sd);
    ensure((fitted + 0.5).abs() <= 0.1, || format!("log-log slope {fitted:.3}"))?;
    Ok(format!("bias {bias:.1e} vs SE {se:.1e}; log-log slope {fitted:.3}"))
}

fn sweep_behavior() -> Outcome {
    let e = lab(noisy(Gate::Toffoli, "depolarizing:0.15"));
    let set = relevant_for_gate(Gate::Toffoli).map_err(|e| e.to_string())?;
    let counts = [10usize, 25, 50, 100, 200];
    let rows = subsample_sweep(&e, &set, &counts, 1000, Mode::Exact, 15).map_err(|e| e.to_string())?;
    let k: Vec<f64> = rows.iter().map(|r| r.samples as f64).collect();
    let hw: Vec<f64> = rows.iter().map(|r| r.half_width).collect();
    let rho = spearman(&k, &hw);
    ensure(rows.len() == counts.len() && rho < 0.0, || format!("rank correlation {rho:.3}, half-widths {hw:?}"))?;
    let shown: Vec<String> = hw.iter().map(|h| format!("{h:.4}")).collect();
    Ok(format!("rank correlation {rho:.2}; half-widths [{}]", shown.join(", ")))
}

fn method_agreement() -> Outcome {
    let mut summary = Vec::new();
    for (gate, noise) in [(Gate::Cnot, "depolarizing:0.1"), (Gate::Cphase, "amp_damp:0.1")] {
        let e = lab(noisy(gate, noise));
        let set = relevant_for_gate(gate).map_err(|e| e.to_string())?;
        let ideal = choi(&gate.channel());
        let mut diffs = Vec::new();
        for seed in 0..100u64 {
            let mode = Mode::Shots { shots: 1000, seed };
            let cert = estimate_exhaustive(&e, &set, mode).map_err(|e| e.to_string())?;
            check_report(&cert)?;
            let est = invert(&collect(&e, mode.with_seed(seed + 1_000_000)).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let f_tom = fidelity_from_tomography(&ideal, &est).map_err(|e| e.to_string())?;
            diffs.push((cert.process_fidelity - f_tom).abs());
        }
        let m = mean(&diffs);
        ensure(m < 0.02, || format!("{gate} {noise}: mean |F_MC − F_tom| = {m:.4}"))?;
        summary.push(format!("{gate} {noise}: {m:.4}"));
    }
    Ok(format!("mean |F_MC − F_tom|: {}", summary.join(", ")))
}

fn average_fidelity_conversion() -> Outcome {
    let spot = average_fidelity(0.817, 4);
    ensure((spot - 0.8536).abs() < 1e-12, || format!("F̄(0.817, 4) = {spot}"))?;
    for gate in Gate::ALL {
        let e = lab(noisy(gate, "amp_damp:0.1"));
        let set = relevant_for_gate(gate).map_err(|e| e.to_string())?;
        check_report(&estimate_exhaustive(&e, &set, Mode::Exact).map_err(|e| e.to_string())?)?;
        let mode = Mode::Shots { shots: 100, seed: 3 };
        check_report(&estimate_monte_carlo(&e, &set, 30, true, mode, 4).map_err(|e| e.to_string())?)?;
    }
    Ok(format!("F = 0.817, d = 4 gives F̄ = {spot:.4}; all reports consistent"))
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "1 golden tables", budget: Duration::from_secs(10), run: golden_tables },
        Criterion { name: "2 setting counts", budget: Duration::from_secs(10), run: setting_counts },
        Criterion { name: "3 oracle equivalence", budget: Duration::from_secs(60), run: oracle_equivalence },
        Criterion { name: "4 input-state reduction", budget: Duration::from_secs(60), run: input_reduction },
        Criterion { name: "5 readout extraction", budget: Duration::from_secs(120), run: readout_extraction },
        Criterion { name: "6 statistical behavior", budget: Duration::from_secs(300), run: statistical_behavior },
        Criterion { name: "7 sweep behavior", budget: Duration::from_secs(300), run: sweep_behavior },
        Criterion { name: "8 method agreement", budget: Duration::from_secs(600), run: method_agreement },
        Criterion { name: "9 average fidelity conversion", budget: Duration::from_secs(60), run: average_fidelity_conversion },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.budget => {
                Err(format!("{detail}; took {:.1} s, budget {} s", elapsed.as_secs_f64(), c.budget.as_secs()))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {:<30} {detail} ({:.2} s)", c.name, elapsed.as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {:<30} {detail} ({:.2} s)", c.name, elapsed.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
