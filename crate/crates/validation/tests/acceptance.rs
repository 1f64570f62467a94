//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use locpoly::experiment::{
    emit_csv, fit_rate, read_csv, run_convergence, Aggregate, ExperimentSpec, RateFit, ResultTable,
};
use locpoly::{
    adaptive_median, estimate, estimate_on_splits, gen_random_polynomial, make_dataset,
    median_ball, num_splits, split_dataset, AggregationConfig, CoefficientLaw, Dataset,
    DifferentialOperator, EstimatorConfig, ExperimentFunctionSpec, NoiseKind, NoiseModel,
    OperatorSpec, Term, VectorFunction,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

// Tolerances.
const RATE_TOL: f64 = 0.08;
const PER_D_SLOPE_TOL: f64 = 0.06;
const D_ERROR_RATIO_MAX: f64 = 1.5;
const RATE_BUDGET: Duration = Duration::from_secs(600);
const EXACT_REL_TOL: f64 = 1e-8;
const EXACT_CASES: usize = 100;
const EXACT_BUDGET: Duration = Duration::from_secs(30);
const COV_DRAWS: usize = 100_000;
const COV_BAND: (f64, f64) = (0.8, 1.2);
const CAPTURE_CASES: usize = 1000;
const CORRUPT_REPS: usize = 200;
const CORRUPT_FRACTION: f64 = 0.3;
const CORRUPT_SHIFT_SIGMAS: f64 = 100.0;
const CORRUPT_FACTOR: f64 = 3.0;
const CORRUPT_MIN_SHARE: f64 = 0.95;

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: String) -> Self {
        Self {
            pass,
            summary,
            details: Vec::new(),
        }
    }
}

fn reference_grid_spec(operator: &str, m: usize) -> ExperimentSpec {
    ExperimentSpec {
        d: 1,
        k: 3,
        m: Some(m),
        operator: OperatorSpec::Text(operator.into()),
        dim_list: vec![1, 10, 100],
        // 10^2, 10^2.75, 10^3.5, 10^4.25, 10^5
        n_list: [2.0, 2.75, 3.5, 4.25, 5.0]
            .iter()
            .map(|e: &f64| 10f64.powf(*e).round() as usize)
            .collect(),
        trials: 50,
        noise: NoiseModel::new(NoiseKind::SphereUniform, 0.1),
        bandwidth_constant: 1.0,
        seed: 20240607 + m as u64,
        robust: None,
        function_degree: None,
        coefficient_law: CoefficientLaw::default(),
        half_width: 1.0,
        fix_function: false,
        aggregate: Aggregate::Mean,
    }
}

fn timed_rate(spec: &ExperimentSpec) -> (ResultTable, RateFit, Duration) {
    let t0 = Instant::now();
    let table = run_convergence(spec).expect("convergence run");
    let elapsed = t0.elapsed();
    let rate = fit_rate(&table, spec.expected_rate().unwrap()).expect("rate fit");
    (table, rate, elapsed)
}

fn criteria_1_2() -> (Outcome, Outcome) {
    let spec = reference_grid_spec("identity", 0);
    let (table, rate, elapsed) = timed_rate(&spec);
    let target = -3.0 / 7.0;
    let ok1 = (rate.slope - target).abs() <= RATE_TOL && elapsed <= RATE_BUDGET;
    let mut c1 = Outcome::new(
        ok1,
        format!(
            "function-estimation rate: pooled slope {:.4}, target {:.4} ± {RATE_TOL} ({:.1} s, budget {} s)",
            rate.slope,
            target,
            elapsed.as_secs_f64(),
            RATE_BUDGET.as_secs()
        ),
    );
    c1.details.push(format!(
        "prefactor exp(intercept) = {:.4}, failed trials {}",
        rate.intercept.exp(),
        table.failed_trials()
    ));

    let worst_dev = rate
        .per_dim
        .iter()
        .map(|p| (p.slope.unwrap_or(f64::INFINITY) - rate.slope).abs())
        .fold(0.0, f64::max);
    let n_max = *spec.n_list.last().unwrap();
    let final_errors: Vec<(usize, f64)> = table
        .aggregates
        .iter()
        .filter(|a| a.n == n_max)
        .map(|a| (a.dim_out, a.mean_error))
        .collect();
    let lo = final_errors
        .iter()
        .map(|e| e.1)
        .fold(f64::INFINITY, f64::min);
    let hi = final_errors.iter().map(|e| e.1).fold(0.0, f64::max);
    let ok2 = worst_dev <= PER_D_SLOPE_TOL
        && hi / lo <= D_ERROR_RATIO_MAX
        && final_errors.len() == spec.dim_list.len();
    let mut c2 = Outcome::new(
        ok2,
        format!(
            "dimension independence: max |slope_D - pooled| {worst_dev:.4} (≤ {PER_D_SLOPE_TOL}), error spread at n={n_max} {:.3}x (≤ {D_ERROR_RATIO_MAX}x)",
            hi / lo
        ),
    );
    for p in &rate.per_dim {
        let e = final_errors
            .iter()
            .find(|e| e.0 == p.dim_out)
            .map(|e| e.1)
            .unwrap_or(f64::NAN);
        c2.details.push(format!(
            "D={:<4} slope {:.4}  mean error at n={n_max}: {e:.3e}",
            p.dim_out,
            p.slope.unwrap_or(f64::NAN)
        ));
    }
    (c1, c2)
}

fn criterion_3() -> Outcome {
    let spec = reference_grid_spec("d1", 1);
    let (_, rate, elapsed) = timed_rate(&spec);
    let target = -2.0 / 7.0;
    let mut out = Outcome::new(
        (rate.slope - target).abs() <= RATE_TOL,
        format!(
            "derivative rate: pooled slope {:.4}, target {:.4} ± {RATE_TOL} ({:.1} s)",
            rate.slope,
            target,
            elapsed.as_secs_f64()
        ),
    );
    for p in &rate.per_dim {
        out.details.push(format!(
            "D={:<4} slope {:.4}",
            p.dim_out,
            p.slope.unwrap_or(f64::NAN)
        ));
    }
    out
}

fn factorial(a: &[u32]) -> f64 {
    a.iter().map(|&e| (1..=e).product::<u32>() as f64).product()
}

fn criterion_4() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut operators = 0;
    let mut failures = Vec::new();
    for case in 0..EXACT_CASES {
        let d = rng.random_range(1..=3);
        let k = rng.random_range(1..=4);
        let dim_out = rng.random_range(1..=50);
        let degree = rng.random_range(0..k);
        let f = gen_random_polynomial(&ExperimentFunctionSpec {
            d,
            dim_out,
            degree,
            coefficient_law: CoefficientLaw::default(),
            seed: rng.random(),
        })
        .unwrap();
        let data = make_dataset(&f, 2000, &NoiseModel::none(), 1.0, rng.random()).unwrap();
        let config = EstimatorConfig::new(k);
        let rows = f.coefficient_rows();
        // ∂^a x^b at 0 is a! when a = b and zero otherwise
        let truth = |alpha: &[u32]| -> Vec<f64> {
            let pos = f
                .basis()
                .indices()
                .iter()
                .position(|b| b.exponents() == alpha);
            rows.iter()
                .map(|r| pos.map_or(0.0, |p| factorial(alpha) * r[p]))
                .collect()
        };
        let fit_basis = locpoly::enumerate_basis(d, k - 1);
        let mut ops: Vec<(DifferentialOperator, Vec<f64>)> = fit_basis
            .indices()
            .iter()
            .map(|a| {
                (
                    DifferentialOperator::derivative(a.clone()),
                    truth(a.exponents()),
                )
            })
            .collect();
        // one random combination of all of them
        let coeffs: Vec<f64> = (0..fit_basis.len())
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        let combo_terms: Vec<Term> = fit_basis
            .indices()
            .iter()
            .zip(&coeffs)
            .map(|(a, &c)| Term {
                alpha: a.clone(),
                coeff: c,
            })
            .collect();
        let mut combo_truth = vec![0.0; dim_out];
        for (a, &c) in fit_basis.indices().iter().zip(&coeffs) {
            for (o, t) in combo_truth.iter_mut().zip(truth(a.exponents())) {
                *o += c * t;
            }
        }
        ops.push((DifferentialOperator::new(combo_terms).unwrap(), combo_truth));
        for (op, want) in ops {
            operators += 1;
            let got = match estimate(&data, &op, &config) {
                Ok(r) => r.value,
                Err(e) => {
                    failures.push(format!("case {case}: {e}"));
                    continue;
                }
            };
            let err = got
                .iter()
                .zip(&want)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let scale = want.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
            worst = worst.max(err / scale);
            if err / scale > EXACT_REL_TOL {
                failures.push(format!(
                    "case {case} (d={d}, k={k}, D={dim_out}): relative error {:.2e}",
                    err / scale
                ));
            }
        }
    }
    let elapsed = t0.elapsed();
    let mut out = Outcome::new(
        failures.is_empty() && elapsed <= EXACT_BUDGET,
        format!(
            "exactness: {EXACT_CASES} datasets, {operators} operators, worst relative error {worst:.2e} (≤ {EXACT_REL_TOL:.0e}), {:.2} s (≤ {} s)",
            elapsed.as_secs_f64(),
            EXACT_BUDGET.as_secs()
        ),
    );
    out.details.extend(failures.into_iter().take(10));
    out
}

/// Operator norm of the sample covariance of `draws` noise vectors.
fn covariance_norm(model: NoiseModel, dim: usize, draws: usize, seed: u64) -> f64 {
    const CHUNK: usize = 2000;
    let chunks = draws.div_ceil(CHUNK);
    let (sum, second) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let rows = CHUNK.min(draws - c * CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            // one draw per column
            let mut block = DMatrix::<f64>::zeros(dim, rows);
            for mut col in block.column_iter_mut() {
                model.draw_into(&mut rng, col.as_mut_slice());
            }
            let sum = block.column_sum();
            (sum, &block * block.transpose())
        })
        .reduce(
            || (DVector::zeros(dim), DMatrix::zeros(dim, dim)),
            |(s1, m1), (s2, m2)| (s1 + s2, m1 + m2),
        );
    let n = draws as f64;
    let mean = sum / n;
    let cov = second / n - &mean * mean.transpose();
    SymmetricEigen::new(cov)
        .eigenvalues
        .iter()
        .fold(0.0, |a: f64, v| a.max(v.abs()))
}

fn criterion_5() -> Outcome {
    let sigma = 0.7;
    let mut details = Vec::new();
    let mut pass = true;
    let mut worst = (1.0, String::new());
    for (ki, kind) in [
        NoiseKind::SphereUniform,
        NoiseKind::BallUniform,
        NoiseKind::GaussianIsotropic,
    ]
    .into_iter()
    .enumerate()
    {
        for dim in [1, 10, 1000] {
            let model = NoiseModel::new(kind, sigma);
            let norm = covariance_norm(model, dim, COV_DRAWS, 500 + 10 * ki as u64 + dim as u64);
            let ratio = norm / (sigma * sigma / dim as f64);
            let ok = ratio >= COV_BAND.0 && ratio <= COV_BAND.1;
            pass &= ok;
            let label = format!("{kind:?} D={dim}");
            if (ratio - 1.0).abs() > (worst.0 - 1.0_f64).abs() {
                worst = (ratio, label.clone());
            }
            details.push(format!(
                "{} {label:<26} ‖cov‖/(σ²/D) = {ratio:.4}",
                if ok { "ok  " } else { "FAIL" }
            ));
        }
    }
    let mut out = Outcome::new(
        pass,
        format!(
            "noise covariance: ‖cov‖_op within [{}, {}]·σ²/D at {COV_DRAWS} draws; worst {} at {:.4}",
            COV_BAND.0, COV_BAND.1, worst.1, worst.0
        ),
    );
    if !pass {
        details.push(format!(
            "sample-covariance top eigenvalue concentrates at (1 + sqrt(D/N))^2 = {:.4} for D=1000, N={COV_DRAWS}",
            (1.0 + (1000.0 / COV_DRAWS as f64).sqrt()).powi(2)
        ));
    }
    out.details = details;
    out
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

struct Capture {
    ok: bool,
    beyond_two_rho: usize,
    detail: Option<String>,
}

fn majority_capture() -> Capture {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut beyond_two_rho = 0;
    for case in 0..CAPTURE_CASES {
        let dim = [1, 10, 1000][case % 3];
        let nu = rng.random_range(1..=41);
        let inliers = rng.random_range(nu / 2 + 1..=nu);
        let rho = rng.random_range(0.01..2.0);
        let center: Vec<f64> = (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect();
        let mut estimates: Vec<Vec<f64>> = (0..nu)
            .map(|i| {
                let dir = random_unit(&mut rng, dim);
                let r = if i < inliers {
                    rho * rng.random::<f64>()
                } else {
                    rho * rng.random_range(0.0..20.0)
                };
                center.iter().zip(&dir).map(|(c, u)| c + r * u).collect()
            })
            .collect();
        estimates.shuffle(&mut rng);
        let fixed = match median_ball(&estimates, rho) {
            Ok(c) => c,
            Err(e) => {
                return Capture {
                    ok: false,
                    beyond_two_rho,
                    detail: Some(format!("case {case}: median_ball failed: {e}")),
                };
            }
        };
        let dist_fixed = distance(&estimates[fixed.index], &center);
        if dist_fixed > 2.0 * rho {
            beyond_two_rho += 1;
        }
        let adaptive = adaptive_median(&estimates).unwrap();
        let dist_adaptive = distance(&estimates[adaptive.index], &center);
        let mut shuffled = estimates.clone();
        shuffled.shuffle(&mut rng);
        let again = adaptive_median(&shuffled).unwrap();
        let slack = 1e-12 * (1.0 + rho);
        if dist_fixed > 3.0 * rho + slack
            || dist_adaptive > 3.0 * rho + slack
            || again.radius != adaptive.radius
        {
            return Capture {
                ok: false,
                beyond_two_rho,
                detail: Some(format!(
                    "case {case} (D={dim}, ν={nu}): fixed {:.3}ρ, adaptive {:.3}ρ, radius {} vs {}",
                    dist_fixed / rho,
                    dist_adaptive / rho,
                    adaptive.radius,
                    again.radius
                )),
            };
        }
    }
    Capture {
        ok: true,
        beyond_two_rho,
        detail: None,
    }
}

fn corruption_run(nu: usize) -> (usize, f64) {
    let dim_out = 10;
    let sigma = 0.1;
    let per_split = 200;
    let corrupted = (CORRUPT_FRACTION * nu as f64).ceil() as usize;
    let config = EstimatorConfig::new(3);
    let agg = AggregationConfig::new(0.1);
    let op = DifferentialOperator::identity(1);
    let shift: Vec<f64> = vec![CORRUPT_SHIFT_SIGMAS * sigma / (dim_out as f64).sqrt(); dim_out];
    let ratios: Vec<f64> = (0..CORRUPT_REPS)
        .into_par_iter()
        .map(|rep| {
            let seed = 9000 + rep as u64;
            let f = gen_random_polynomial(&ExperimentFunctionSpec {
                d: 1,
                dim_out,
                degree: 2,
                coefficient_law: CoefficientLaw::default(),
                seed,
            })
            .unwrap();
            let truth = f.operator_at_origin(&op).unwrap();
            let data = make_dataset(
                &f,
                nu * per_split,
                &NoiseModel::new(NoiseKind::SphereUniform, sigma),
                1.0,
                seed,
            )
            .unwrap();
            let clean_parts = split_dataset(&data, nu, seed).unwrap();
            let mut dirty_parts = clean_parts.clone();
            for part in dirty_parts.iter_mut().take(corrupted) {
                shift_outputs(part, &shift);
            }
            let clean = estimate_on_splits(&clean_parts, &op, &config, &agg).unwrap();
            let dirty = estimate_on_splits(&dirty_parts, &op, &config, &agg).unwrap();
            distance(&dirty.value, &truth) / distance(&clean.value, &truth)
        })
        .collect();
    let within = ratios.iter().filter(|&&r| r <= CORRUPT_FACTOR).count();
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    (within, worst)
}

fn shift_outputs(part: &mut Dataset, shift: &[f64]) {
    for i in 0..part.len() {
        for (y, s) in part.y_mut(i).iter_mut().zip(shift) {
            *y += s;
        }
    }
}

fn criterion_6() -> Outcome {
    let nu = num_splits(0.1, 0.4).unwrap();
    let capture = majority_capture();
    let (within, worst) = corruption_run(nu);
    let share = within as f64 / CORRUPT_REPS as f64;
    let mut out = Outcome::new(
        nu == 116 && capture.ok && share >= CORRUPT_MIN_SHARE,
        format!(
            "median trick: ν(0.1, 0.4) = {nu}; majority capture {} over {CAPTURE_CASES} cases; corrupted/clean error ≤ {CORRUPT_FACTOR} in {within}/{CORRUPT_REPS} reps (≥ {:.0}%)",
            if capture.ok { "holds" } else { "violated" },
            100.0 * CORRUPT_MIN_SHARE
        ),
    );
    out.details.push(format!(
        "fixed-radius centers: all within 3ρ of T; {} of {CAPTURE_CASES} farther than 2ρ",
        capture.beyond_two_rho
    ));
    out.details.push(format!(
        "corruption: {:.0}% of {nu} splits shifted by {CORRUPT_SHIFT_SIGMAS}σ, D=10, worst ratio {worst:.3}",
        100.0 * CORRUPT_FRACTION
    ));
    if let Some(d) = capture.detail {
        out.details.push(d);
    }
    out
}

/// `x ↦ (sin x, cos x, e^x)`
struct TrigExp;

impl VectorFunction for TrigExp {
    fn input_dim(&self) -> usize {
        1
    }

    fn output_dim(&self) -> usize {
        3
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&[x[0].sin(), x[0].cos(), x[0].exp()]);
    }
}

fn criterion_7() -> Outcome {
    let config_k = 3;
    let mut worst_ratio: f64 = 0.0;
    let mut configs = 0;
    let mut violations = Vec::new();
    let truths = [
        (DifferentialOperator::identity(1), [0.0, 1.0, 1.0], 0),
        (DifferentialOperator::partial(1, 0), [1.0, 0.0, 1.0], 1),
    ];
    for n in [100, 316, 1000, 3162, 10_000, 31_623, 100_000] {
        for b in [0.5, 1.0, 2.0] {
            for seed in 0..3u64 {
                let data = make_dataset(&TrigExp, n, &NoiseModel::none(), 1.0, 70 + seed).unwrap();
                let config = EstimatorConfig::new(config_k).with_bandwidth_constant(b);
                for (op, truth, m) in &truths {
                    let r = estimate(&data, op, &config).unwrap();
                    let delta = r.neighborhood.delta;
                    // sup over |t| <= δ of ‖f'''(t)‖ = sqrt(1 + e^{2t})
                    let big_m = (1.0 + (2.0 * delta).exp()).sqrt();
                    let bound = big_m * delta.powi((config_k - m) as i32);
                    let err = distance(&r.value, truth);
                    configs += 1;
                    worst_ratio = worst_ratio.max(err / bound);
                    if err > bound {
                        violations.push(format!(
                            "n={n} b={b} seed={seed} m={m}: error {err:.3e} > bound {bound:.3e}"
                        ));
                    }
                }
            }
        }
    }
    let mut out = Outcome::new(
        violations.is_empty(),
        format!("Taylor oracle: {configs} noiseless fits of (sin, cos, exp), k=3, m ∈ {{0, 1}}; max error/(M·δ^(k-m)) = {worst_ratio:.3}"),
    );
    out.details.extend(violations.into_iter().take(10));
    out
}

fn cli(args: &[&str]) -> u8 {
    locpoly_cli::run(std::iter::once("locpoly").chain(args.iter().copied()))
}

fn criterion_8() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
    let mut details = Vec::new();
    let mut pass = true;
    let mut check = |ok: bool, what: String| {
        pass &= ok;
        details.push(format!("{} {what}", if ok { "ok  " } else { "FAIL" }));
    };

    // determinism of the library path
    let mut spec = reference_grid_spec("identity", 0);
    spec.dim_list = vec![1, 7];
    spec.n_list = vec![200, 800, 3200];
    spec.trials = 5;
    let a = run_convergence(&spec).unwrap();
    let b = run_convergence(&spec).unwrap();
    emit_csv(&a, &dir.join("run_a")).unwrap();
    emit_csv(&b, &dir.join("run_b")).unwrap();
    let same = |x: &Path, y: &Path| fs::read(x).unwrap() == fs::read(y).unwrap();
    check(
        same(&dir.join("run_a/raw.csv"), &dir.join("run_b/raw.csv"))
            && same(
                &dir.join("run_a/aggregate.csv"),
                &dir.join("run_b/aggregate.csv"),
            ),
        "library runs with equal seeds write byte-identical CSVs".into(),
    );
    let back = read_csv(&dir.join("run_a")).unwrap();
    emit_csv(&back, &dir.join("run_c")).unwrap();
    check(
        back.aggregates == a.aggregates
            && same(&dir.join("run_a/raw.csv"), &dir.join("run_c/raw.csv"))
            && same(
                &dir.join("run_a/aggregate.csv"),
                &dir.join("run_c/aggregate.csv"),
            ),
        "result CSV write→read→write is lossless".into(),
    );

    // CLI determinism
    let spec_path = p("spec.json");
    fs::write(
        &spec_path,
        r#"{"d":1,"k":3,"D_list":[2,5],"n_list":[300,1000,3000],"trials":4,
            "noise":{"kind":"ball_uniform","sigma":0.1},"seed":11}"#,
    )
    .unwrap();
    let c1 = cli(&["convergence", &spec_path, "--out", &p("cli_a")]);
    let c2 = cli(&["convergence", &spec_path, "--out", &p("cli_b")]);
    check(
        c1 == 0
            && c2 == 0
            && ["raw.csv", "aggregate.csv", "plot.svg", "rate.json"]
                .iter()
                .all(|f| same(&dir.join("cli_a").join(f), &dir.join("cli_b").join(f))),
        "CLI convergence reruns are byte-identical".into(),
    );

    // dataset CSV round trip through the generator
    let gen_path = p("gen.json");
    fs::write(&gen_path, r#"{"d":2,"D":3,"degree":2,"n":400,"seed":3,"noise":{"kind":"gaussian_isotropic","sigma":0.2}}"#).unwrap();
    let g = cli(&["generate", &gen_path, "--out", &p("data.csv")]);
    let data = Dataset::read_csv(&dir.join("data.csv")).unwrap();
    data.write_csv(&dir.join("data2.csv")).unwrap();
    check(
        g == 0 && same(&dir.join("data.csv"), &dir.join("data2.csv")),
        "dataset CSV round trip is byte-identical".into(),
    );

    // exit-code contract
    fs::write(p("bad.csv"), "x1,y1\n0.1,abc\n").unwrap();
    fs::write(p("tiny.csv"), "x1,y1\n0.0,1.0\n0.1,2.0\n").unwrap();
    fs::write(p("bad_spec.json"), r#"{"d":1,"k":3,"D_list":[1],"n_list":[100],"trials":0,"noise":{"kind":"sphere_uniform","sigma":0.1}}"#).unwrap();
    let out = p("report.json");
    let cases: Vec<(&str, Vec<String>, u8)> = vec![
        (
            "fit ok",
            vec![
                "fit".into(),
                p("data.csv"),
                "--k".into(),
                "3".into(),
                "-o".into(),
                out.clone(),
            ],
            0,
        ),
        (
            "--k 0",
            vec!["fit".into(), p("data.csv"), "--k".into(), "0".into()],
            2,
        ),
        (
            "invalid spec",
            vec![
                "convergence".into(),
                p("bad_spec.json"),
                "--out".into(),
                p("never"),
            ],
            2,
        ),
        (
            "order too high",
            vec![
                "fit".into(),
                p("data.csv"),
                "--k".into(),
                "2".into(),
                "--operator".into(),
                "d1d2".into(),
            ],
            2,
        ),
        (
            "malformed CSV",
            vec!["fit".into(), p("bad.csv"), "--k".into(), "2".into()],
            3,
        ),
        (
            "missing file",
            vec!["fit".into(), p("absent.csv"), "--k".into(), "2".into()],
            3,
        ),
        (
            "insufficient samples",
            vec!["fit".into(), p("tiny.csv"), "--k".into(), "3".into()],
            4,
        ),
        (
            "n < ν",
            vec![
                "robust".into(),
                p("tiny.csv"),
                "--k".into(),
                "1".into(),
                "--failure-prob".into(),
                "0.1".into(),
                "-o".into(),
                out.clone(),
            ],
            5,
        ),
        (
            "no majority ball",
            vec![
                "robust".into(),
                p("data.csv"),
                "--k".into(),
                "1".into(),
                "--failure-prob".into(),
                "0.3".into(),
                "--eps0".into(),
                "0.2".into(),
                "--radius".into(),
                "1e-9".into(),
                "-o".into(),
                out.clone(),
            ],
            5,
        ),
    ];
    for (name, args, want) in cases {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let got = cli(&refs);
        check(
            got == want,
            format!("exit code for {name}: {got} (want {want})"),
        );
    }
    check(
        !dir.join("never").exists(),
        "failed convergence leaves no output directory".into(),
    );

    let mut o = Outcome::new(
        pass,
        "determinism & formats: byte-identical reruns, lossless CSV, exit-code contract".into(),
    );
    o.details = details;
    o
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    let (c1, c2) = criteria_1_2();
    results.push((1, c1));
    results.push((2, c2));
    results.push((3, criterion_3()));
    results.push((4, criterion_4()));
    results.push((5, criterion_5()));
    results.push((6, criterion_6()));
    results.push((7, criterion_7()));
    results.push((8, criterion_8()));

    println!();
    println!("acceptance criteria");
    for (id, o) in &results {
        println!(
            "{} [{id}] {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.summary
        );
        for d in &o.details {
            println!("         {d}");
        }
    }
    let failed: Vec<u32> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    println!(
        "{} of {} criteria passed in {:.1} s{}",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failed: {failed:?}")
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
