//! Acceptance checks, one `PASS`/`FAIL` line per criterion.
//!
//! Run with `cargo test -p iforge --test acceptance`. The process exits
//! non-zero only when an evaluated criterion fails; a criterion whose inputs
//! are missing (the UCI files) is reported as `FAIL (not evaluated)`.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use iforge::io::load_csv;
use iforge::Parallel;
use iforge_core::bench::{run_benchmark, BenchMethod, BenchmarkConfig};
use iforge_core::dgp::{empirical_correlation, CorrelationTarget, Dgp};
use iforge_core::intervals::{
    boot_mean_interval, boot_percentile_interval, extra_nn_fit, extra_nn_interval, interval_table, mc_dropout_fit,
    mc_dropout_predict_all, member_seeds, resample_indices, unique_fraction, DeltaMethod, Method, DEFAULT_ALPHAS,
};
use iforge_core::masks::sample_mask;
use iforge_core::nn::{backward, forward, init_network, loss, predict, train_from, Masking};
use iforge_core::rng::rng_from_seed;
use iforge_core::study::{run_study, StudyConfig};
use iforge_core::{linalg, Dataset, Mask, MaskMode, NetworkSpec, Parameters, Sequential, TrainConfig};
use rand::Rng;

/// Box-Muller standard normal.
fn normal(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

enum Outcome {
    Pass(String),
    Fail(String),
    /// Inputs unavailable; reported as a failure without failing the run.
    Missing(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

type Check = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let checks: [Check; 10] = [
        ("AC1 gradient oracle", ac1),
        ("AC2 correlated features", ac2),
        ("AC3 extra-NN coverage, linear", ac3),
        ("AC4 dropout-rate sensitivity", ac4),
        ("AC5 MSPE ordering, nonlinear", ac5),
        ("AC6 bootstrap unique rows", ac6),
        ("AC7 interval properties", ac7),
        ("AC8 delta leverage", ac8),
        ("AC9 UCI spot checks", ac9),
        ("AC10 manifest replay", ac10),
    ];
    let (mut passed, mut failed, mut missing) = (0, 0, 0);
    for (name, check) in checks {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Outcome::Pass(d) => {
                passed += 1;
                println!("{name}: PASS ({d}; {secs:.1} s)");
            }
            Outcome::Fail(d) => {
                failed += 1;
                println!("{name}: FAIL ({d}; {secs:.1} s)");
            }
            Outcome::Missing(d) => {
                missing += 1;
                println!("{name}: FAIL (not evaluated: {d})");
            }
        }
    }
    println!("acceptance: {passed} passed, {failed} failed, {missing} not evaluated");
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn random_problem(seed: u64) -> (Parameters, Dataset) {
    let mut rng = rng_from_seed(seed);
    let d = rng.random_range(1..=5);
    let depth = rng.random_range(1..=2);
    let widths: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=6)).collect();
    let spec = NetworkSpec::new(d, widths).unwrap();
    let mut params = init_network(&spec, seed);
    for v in params.as_mut_slice() {
        *v += rng.random_range(-0.3..0.3);
    }
    let n = rng.random_range(1..=8);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    (params, Dataset::from_rows(&rows, &ys).unwrap())
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let (params, data) = random_problem(1_000 + seed);
        let rows: Vec<usize> = (0..data.len()).collect();
        let grad = backward(&params, &data, &rows, None).unwrap();
        for k in 0..params.len() {
            let mut plus = params.clone();
            plus.as_mut_slice()[k] += h;
            let mut minus = params.clone();
            minus.as_mut_slice()[k] -= h;
            let fd = (loss(&plus, &data, &rows, None).unwrap() - loss(&minus, &data, &rows, None).unwrap()) / (2.0 * h);
            let a = grad.as_slice()[k];
            worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-3));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst < 1e-5 && secs < 10.0, format!("max relative error {worst:.2e} over 100 networks"))
}

fn ac2() -> Outcome {
    let start = Instant::now();
    let data = Dgp::Linear.generate(100_000, 7).unwrap();
    let target = CorrelationTarget::simulation();
    let k = target.dim();
    let got = empirical_correlation(data.features(), k);
    let worst = got.iter().zip(target.matrix()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    verdict(worst <= 0.02 && secs < 30.0, format!("max |r - target| {worst:.2e} at n = 100000"))
}

fn miss_rates(dgp: Dgp, method: Method, t: usize, p: f64) -> (Vec<f64>, f64) {
    let config = StudyConfig::standard(dgp, method, t, p, 1);
    let study = run_study(&Parallel::from_env().unwrap(), &config, 20).unwrap();
    (study.summary.miss_rates.clone(), study.summary.mspe)
}

fn ac3() -> Outcome {
    let (miss, _) = miss_rates(Dgp::Linear, Method::ExtraNn, 30, 0.995);
    let ok = miss.iter().zip(DEFAULT_ALPHAS).all(|(m, a)| (m - a).abs() <= 0.03);
    verdict(ok, format!("miss rates {:.4} / {:.4} / {:.4} at alpha 0.01 / 0.05 / 0.10", miss[0], miss[1], miss[2]))
}

fn ac4() -> Outcome {
    let (mc, _) = miss_rates(Dgp::Linear, Method::McDropout, 30, 0.8);
    let (en, _) = miss_rates(Dgp::Linear, Method::ExtraNn, 30, 0.8);
    let ok = mc[1] <= 0.01 && (en[1] - 0.05).abs() <= 0.03;
    verdict(ok, format!("miss rate at alpha 0.05: MC dropout {:.4}, extra-NN {:.4}", mc[1], en[1]))
}

fn ac5() -> Outcome {
    let (_, en) = miss_rates(Dgp::Nonlinear, Method::ExtraNn, 30, 0.995);
    let (_, mc) = miss_rates(Dgp::Nonlinear, Method::McDropout, 30, 0.995);
    verdict(2.0 * en <= mc, format!("MSPE extra-NN {en:.3}, MC dropout {mc:.3}, ratio {:.2}", mc / en))
}

fn ac6() -> Outcome {
    let m = 1200;
    let fractions: Vec<f64> =
        member_seeds(2024, 50).into_iter().map(|s| unique_fraction(&resample_indices(m, s), m)).collect();
    let mean = fractions.iter().sum::<f64>() / fractions.len() as f64;
    verdict((mean - 0.6323).abs() <= 0.01, format!("mean unique fraction {mean:.4}"))
}

fn brute_quantile(values: &[f64], q: f64) -> f64 {
    // k-th order statistic by counting, no sorting
    let kth = |k: usize| -> f64 {
        *values
            .iter()
            .find(|&&v| {
                let below = values.iter().filter(|&&w| w < v).count();
                let equal = values.iter().filter(|&&w| w == v).count();
                below <= k && k < below + equal
            })
            .unwrap()
    };
    let h = (values.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 {
        kth(lo)
    } else {
        kth(lo) + frac * (kth(lo + 1) - kth(lo))
    }
}

fn delete_dropped_units(params: &Parameters, mask: &Mask) -> Parameters {
    let spec = params.spec();
    let kept: Vec<Vec<usize>> =
        mask.layers().iter().map(|l| l.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()).collect();
    let small = NetworkSpec::new(spec.input_dim(), kept.iter().map(Vec::len).collect()).unwrap();
    let inputs: Vec<usize> = (0..spec.input_dim()).collect();
    let output = vec![0usize];
    let mut values = Vec::new();
    for l in 0..=spec.depth() {
        let rows = if l < spec.depth() { &kept[l] } else { &output };
        let cols = if l == 0 { &inputs } else { &kept[l - 1] };
        let full_cols = params.shapes()[l].cols;
        for &i in rows {
            values.extend(cols.iter().map(|&k| params.weights(l)[i * full_cols + k]));
        }
        values.extend(rows.iter().map(|&i| params.biases(l)[i]));
    }
    Parameters::from_values(small, values).unwrap()
}

fn nested(intervals: &[Vec<iforge_core::intervals::PredictionInterval>]) -> bool {
    // alphas ascend, so each level must enclose the next
    intervals.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(wide, narrow)| wide.encloses(narrow)))
}

fn ac7() -> Outcome {
    let mut failures = Vec::new();
    let exec = Sequential;
    let data = Dgp::Linear.generate(240, 3).unwrap();
    let (train, test) = (data.subset(&(0..200).collect::<Vec<_>>()), data.subset(&(200..240).collect::<Vec<_>>()));
    let spec = NetworkSpec::new(train.dim(), vec![5]).unwrap();
    let config = TrainConfig::new(5, 32, 0.05, 11);

    // nesting across alpha for every method
    let ensemble = extra_nn_fit(&exec, &train, 8, 0.9, &spec, &config).unwrap();
    let members = ensemble.predict_all(&exec, &test).unwrap();
    let point: Vec<f64> = members[0].iter().map(|v| v + 0.1).collect();
    for method in Method::ALL {
        let table = if method == Method::Delta {
            let delta = DeltaMethod::fit(&ensemble.members[0].params, &train).unwrap().with_aleatoric_variance(0.3);
            DEFAULT_ALPHAS
                .iter()
                .map(|&a| (0..test.len()).map(|i| delta.interval(test.row(i), a).unwrap()).collect())
                .collect()
        } else {
            interval_table(method, &members, Some(&point), test.targets(), &DEFAULT_ALPHAS).unwrap().intervals
        };
        if !nested(&table) {
            failures.push(format!("{method} not nested"));
        }
    }

    // p = 1 MC dropout has no epistemic spread
    let params = mc_dropout_fit(&train, &spec, &config, 1.0).unwrap();
    let passes = mc_dropout_predict_all(&exec, &params, &test, 20, 1.0, 5).unwrap();
    let table = interval_table(Method::McDropout, &passes, None, test.targets(), &DEFAULT_ALPHAS).unwrap();
    if table.intervals.iter().flatten().any(|iv| iv.epistemic_var != 0.0) {
        failures.push("p = 1 epistemic variance not zero".into());
    }

    let mut rng = rng_from_seed(77);
    for t in 2..=12 {
        for _ in 0..100 {
            // quarter steps force ties
            let v: Vec<f64> = (0..t).map(|_| (rng.random_range(-5.0..5.0_f64) * 4.0).round() / 4.0).collect();
            for alpha in DEFAULT_ALPHAS {
                let iv = boot_percentile_interval(&v, alpha).unwrap();
                if iv.lower != brute_quantile(&v, alpha / 2.0) || iv.upper != brute_quantile(&v, 1.0 - alpha / 2.0) {
                    failures.push(format!("percentile mismatch at T = {t}"));
                }
                let s2 = rng.random_range(0.0..2.0);
                let (a, b) = (boot_mean_interval(&v, s2, alpha).unwrap(), extra_nn_interval(&v, s2, alpha).unwrap());
                if (a.center, a.lower, a.upper, a.epistemic_var) != (b.center, b.lower, b.upper, b.epistemic_var) {
                    failures.push(format!("boot_mean and extra_nn differ at T = {t}"));
                }
            }
        }
    }

    for seed in 0..200u64 {
        let mut rng = rng_from_seed(seed + 50_000);
        let d = rng.random_range(1..=4);
        let depth = rng.random_range(1..=2);
        let widths: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=3)).collect();
        let spec = NetworkSpec::new(d, widths).unwrap();
        let mut params = init_network(&spec, seed);
        for v in params.as_mut_slice() {
            *v += rng.random_range(-0.2..0.2);
        }
        let mask = sample_mask(&spec, 0.6, seed, MaskMode::FixedStructural).unwrap();
        let small = delete_dropped_units(&params, &mask);
        let rows: Vec<Vec<f64>> = (0..4).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let ys: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let data = Dataset::from_rows(&rows, &ys).unwrap();
        let same_outputs =
            rows.iter().all(|x| forward(&params, x, Some(&mask)).unwrap().output == predict(&small, x).unwrap());
        let idx = [0, 1, 2, 3];
        let g_full = delete_dropped_units(&backward(&params, &data, &idx, Some(&mask)).unwrap(), &mask);
        let g_small = backward(&small, &data, &idx, None).unwrap();
        if !same_outputs || g_full.as_slice() != g_small.as_slice() {
            failures.push(format!("masked and deleted networks differ, seed {seed}"));
        }
    }

    failures.dedup();
    let detail = if failures.is_empty() { "all five properties hold".to_owned() } else { failures.join("; ") };
    verdict(failures.is_empty(), detail)
}

fn ac8() -> Outcome {
    let mut rng = rng_from_seed(8);
    let (n, d) = (80, 2);
    let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 1.0 + 2.0 * x[0] - x[1] + 0.1 * normal(&mut rng)).collect();
    let data = Dataset::from_rows(&xs, &ys).unwrap();

    // a large hidden bias keeps the single unit in its linear region
    let spec = NetworkSpec::new(d, vec![1]).unwrap();
    let start = Parameters::from_values(spec, vec![0.5, -0.5, 10.0, 1.0, -10.0]).unwrap();
    let params = train_from(start, &data, &TrainConfig::new(200, 16, 0.01, 3), &Masking::None).unwrap().params;
    let active =
        xs.iter().all(|x| params.weights(0)[0] * x[0] + params.weights(0)[1] * x[1] + params.biases(0)[0] > 0.0);

    let k = d + 1;
    let mut xtx = vec![0.0; k * k];
    for x in &xs {
        let row: Vec<f64> = std::iter::once(1.0).chain(x.iter().copied()).collect();
        for a in 0..k {
            for b in 0..k {
                xtx[a * k + b] += row[a] * row[b];
            }
        }
    }
    let l = linalg::cholesky(&xtx, k).unwrap();
    let delta = DeltaMethod::fit(&params, &data).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let row: Vec<f64> = std::iter::once(1.0).chain(x.iter().copied()).collect();
        let h = 1.0 + linalg::inverse_quadratic_form(&l, k, &row);
        let (_, s) = delta.leverage(&x).unwrap();
        worst = worst.max(((1.0 + s) - h).abs() / h);
    }
    verdict(active && worst < 1e-6, format!("max relative error {worst:.2e}, unit active on every row: {active}"))
}

fn workspace_root() -> PathBuf {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    root.canonicalize().unwrap_or(root)
}

fn ac9() -> Outcome {
    let dir =
        std::env::var_os("IFORGE_UCI_DIR").map(PathBuf::from).unwrap_or_else(|| workspace_root().join("data/uci"));
    let bands = [("yacht", 1.5), ("energy", 1.2), ("boston", 4.0)];
    let mut lines = Vec::new();
    let mut absent = Vec::new();
    let mut ok = true;
    for (name, band) in bands {
        let path = dir.join(format!("{name}.csv"));
        if !path.is_file() {
            absent.push(name);
            continue;
        }
        let data = load_csv(&path, None).unwrap().data;
        let config = BenchmarkConfig::standard(BenchMethod::ExtraNn, 70, 1);
        let result = run_benchmark(&Parallel::from_env().unwrap(), &data, &config).unwrap();
        ok &= result.mean_rmspe <= band;
        lines.push(format!("{name} {:.3} ± {:.3} (band ≤ {band})", result.mean_rmspe, result.se.unwrap_or(f64::NAN)));
    }
    let detail = lines.join(", ");
    match (absent.is_empty(), ok) {
        (true, _) => verdict(ok, detail),
        (false, false) => Outcome::Fail(format!("{detail}; missing {}", absent.join(", "))),
        (false, true) => Outcome::Missing(format!("{detail}; no {} file in {}", absent.join(", "), dir.display())),
    }
}

fn iforge(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_iforge"))
        .args(args)
        .env("IFORGE_THREADS", "1")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn only_subdir(dir: &Path) -> PathBuf {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1, "{}", dir.display());
    entries.pop().unwrap()
}

/// Numeric artifacts: every CSV, and JSON results without wall-clock fields.
fn numeric_artifacts(run: &Path) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(run).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    for path in paths {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let text = std::fs::read_to_string(&path).unwrap();
        if name.ends_with(".csv") {
            out.push((name, text));
        } else if name.ends_with(".json") && name != "manifest.json" {
            let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
            if let Some(obj) = value.as_object_mut() {
                obj.remove("runtime_s");
            }
            out.push((name, value.to_string()));
        }
    }
    out
}

fn replay_matches(args: &[&str], base: &Path) -> Result<usize, String> {
    let first = base.join("first");
    let second = base.join("second");
    let mut full: Vec<&str> = args.to_vec();
    let first_s = first.to_str().unwrap();
    full.extend(["--out", first_s]);
    if !iforge(&full) {
        return Err(format!("`{}` failed", args.join(" ")));
    }
    let run = only_subdir(&first);
    let manifest = run.join("manifest.json");
    if !iforge(&["replay", manifest.to_str().unwrap(), "--out", second.to_str().unwrap()]) {
        return Err("replay failed".into());
    }
    let replayed = only_subdir(&second);
    if run.file_name() != replayed.file_name() {
        return Err("replay produced a different manifest hash".into());
    }
    let (a, b) = (numeric_artifacts(&run), numeric_artifacts(&replayed));
    if a.is_empty() || a != b {
        return Err(format!("{} artifacts differ", args[0]));
    }
    Ok(a.len())
}

fn ac10() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let sim = [
        "simulate",
        "--dgp",
        "linear",
        "--method",
        "extra_nn,mc_dropout,delta",
        "--T",
        "3",
        "--p",
        "0.9",
        "--replications",
        "2",
        "--n-train",
        "200",
        "--n-test",
        "50",
    ];
    let data = Dgp::Nonlinear.generate(120, 9).unwrap();
    let csv = tmp.path().join("toy.csv");
    let mut text = String::from("x1,x2,x3,x4,x5,y\n");
    for i in 0..data.len() {
        let cells: Vec<String> =
            data.row(i).iter().chain([data.target(i)].iter()).map(|v| format!("{v:.17e}")).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    std::fs::write(&csv, text).unwrap();
    let bench = ["benchmark", "--data", csv.to_str().unwrap(), "--T", "3", "--splits", "3", "--epochs", "5"];

    let sims = replay_matches(&sim, &tmp.path().join("sim"));
    let benches = replay_matches(&bench, &tmp.path().join("bench"));
    match (sims, benches) {
        (Ok(a), Ok(b)) => Outcome::Pass(format!("{a} simulate and {b} benchmark artifacts byte-identical on replay")),
        (a, b) => Outcome::Fail([a.err(), b.err()].into_iter().flatten().collect::<Vec<_>>().join("; ")),
    }
}
