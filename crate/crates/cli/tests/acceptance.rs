// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line; the
//! process exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::Parser;
use logicspace::commands::{Cli, Command};
use logicspace::matstore::{decode, encode, Dtype, HEADER_LEN};
use logicspace::IoError;
use logicspace_core::analysis::{
    generated_energy, projection_energy, roc_auc, style_from_counts, CountDelta,
};
use logicspace_core::rng::GaussianSource;
use logicspace_core::steering::{
    steer_stream_with_basis, DEFAULT_CANDIDATE_LAYERS, DEFAULT_EPSILON, DEFAULT_LAMBDA_GRID,
};
use logicspace_core::subspace::{DEFAULT_K, DEFAULT_VARIANCE_THRESHOLD};
use logicspace_core::synth::{
    generate_mixed_stream, generate_planted, principal_angles, PlantedSpec,
};
use logicspace_core::{
    cca_fit, center_columns, fit_subspace, random_orthonormal_basis, steer_vector, FitConfig,
    Matrix, OrthonormalBasis, SteerConfig,
};
use nalgebra::DMatrix;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($fmt)+));
        }
    };
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn planted_recovery() -> Outcome {
    let start = Instant::now();
    let spec = PlantedSpec::new(500, 16, 4, 0.0, 0);
    let planted = generate_planted(&spec).map_err(|e| e.to_string())?;
    let art = fit_subspace(&planted.pair, 0, &FitConfig::default().with_k(4))
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let min_rho = art
        .correlations()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let angles = principal_angles(art.basis().matrix(), planted.true_basis_nl.matrix())
        .map_err(|e| e.to_string())?;
    let max_angle = angles.iter().copied().fold(0.0, f64::max);
    ensure!(
        art.correlations().len() == 4,
        "expected 4 correlations, got {}",
        art.correlations().len()
    );
    ensure!(min_rho >= 1.0 - 1e-6, "min rho {min_rho}");
    ensure!(
        angles.len() == 4 && max_angle < 1e-3,
        "max principal angle {max_angle}"
    );
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!(
        "min rho {min_rho:.12}, max angle {max_angle:.2e} rad, {elapsed:.2?}"
    ))
}

/// Canonical correlations by Cholesky reduction of the generalized
/// symmetric problem `Σxy Σyy⁻¹ Σyx a = ρ² Σxx a`.
fn cca_generalized_eigen(x: &Matrix, y: &Matrix) -> Vec<f64> {
    let n = x.rows();
    let centered = |m: &Matrix| {
        let mut d = DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice());
        for mut col in d.column_iter_mut() {
            let mu = col.sum() / n as f64;
            col.add_scalar_mut(-mu);
        }
        d
    };
    let (xc, yc) = (centered(x), centered(y));
    let denom = (n - 1) as f64;
    let sxx = xc.transpose() * &xc / denom;
    let syy = yc.transpose() * &yc / denom;
    let sxy = xc.transpose() * &yc / denom;
    let l = sxx.cholesky().expect("Σxx positive definite").l();
    let l_inv = l.try_inverse().expect("invertible factor");
    let m = &l_inv
        * &sxy
        * syy.try_inverse().expect("Σyy invertible")
        * sxy.transpose()
        * l_inv.transpose();
    let sym = (&m + m.transpose()) * 0.5;
    let mut rho: Vec<f64> = sym
        .symmetric_eigenvalues()
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .collect();
    rho.sort_by(|a, b| b.total_cmp(a));
    rho
}

fn cca_oracle_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = GaussianSource::new(1000 + seed);
        let z = rng.matrix(200, 3).map_err(|e| e.to_string())?;
        let noise_x = rng.matrix(200, 3).map_err(|e| e.to_string())?;
        let noise_y = rng.matrix(200, 3).map_err(|e| e.to_string())?;
        let mix = |m: &Matrix, noise: &Matrix, w: [f64; 3]| {
            let data: Vec<f64> = (0..200)
                .flat_map(|i| (0..3).map(move |j| (i, j)))
                .map(|(i, j)| w[j] * m.get(i, j) + noise.get(i, j))
                .collect();
            Matrix::new(200, 3, data).unwrap()
        };
        let x = mix(&z, &noise_x, [2.0, 1.0, 0.3]);
        let y = mix(&z, &noise_y, [1.5, 0.7, 0.2]);
        let (xc, _) = center_columns(&x).map_err(|e| e.to_string())?;
        let (yc, _) = center_columns(&y).map_err(|e| e.to_string())?;
        let fitted = cca_fit(&xc, &yc, 3, 1e-6).map_err(|e| e.to_string())?;
        let oracle = cca_generalized_eigen(&x, &y);
        ensure!(
            fitted.correlations().len() == 3,
            "seed {seed}: {} components",
            fitted.correlations().len()
        );
        for (j, (a, b)) in fitted.correlations().iter().zip(&oracle).enumerate() {
            let diff = (a - b).abs();
            worst = worst.max(diff);
            ensure!(diff <= 1e-5, "seed {seed} component {j}: {a} vs oracle {b}");
        }
    }
    Ok(format!("20 seeds, worst |Δρ| {worst:.2e}"))
}

fn energy_exactness() -> Outcome {
    let mut rng = GaussianSource::new(77);
    let mut worst_scale = 0.0f64;
    for case in 0..10_000u64 {
        let dim = 2 + rng.below(63);
        let k = 1 + rng.below(dim);
        let basis = random_orthonormal_basis(dim, k, case).map_err(|e| e.to_string())?;
        let r = rng.normal_vec(dim);
        let report = projection_energy(&r, &basis).map_err(|e| e.to_string())?;
        let mut sum = 0.0;
        for e in &report.per_direction {
            sum += e;
        }
        ensure!(
            sum.to_bits() == report.total.to_bits(),
            "case {case}: Σ E_j {sum} != E {}",
            report.total
        );
        ensure!(
            (0.0..=1.0 + 1e-10).contains(&report.total),
            "case {case}: E = {}",
            report.total
        );
        for c in [1e-3, 1.0, 1e3] {
            let scaled: Vec<f64> = r.iter().map(|x| c * x).collect();
            let e = projection_energy(&scaled, &basis)
                .map_err(|e| e.to_string())?
                .total;
            let diff = (e - report.total).abs();
            worst_scale = worst_scale.max(diff);
            ensure!(
                diff <= 1e-10,
                "case {case}, c = {c}: {e} vs {}",
                report.total
            );
        }
    }
    Ok(format!(
        "10^4 cases, worst scale deviation {worst_scale:.2e}"
    ))
}

fn steering_contract() -> Outcome {
    let mut rng = GaussianSource::new(91);
    let mut increases = 0usize;
    for case in 0..10_000u64 {
        let dim = 2 + rng.below(63);
        let k = 1 + rng.below(dim);
        let basis = random_orthonormal_basis(dim, k, 50_000 + case).map_err(|e| e.to_string())?;
        let h = rng.normal_vec(dim);
        let lambda = 0.5 * (2.0 * rng.uniform() - 1.0);
        let hn = norm(&h);

        let same = steer_vector(&h, &basis, 0.0, DEFAULT_EPSILON).map_err(|e| e.to_string())?;
        ensure!(
            same.iter().zip(&h).all(|(a, b)| a.to_bits() == b.to_bits()),
            "case {case}: lambda = 0 changed the vector"
        );

        let out = steer_vector(&h, &basis, lambda, DEFAULT_EPSILON).map_err(|e| e.to_string())?;
        let delta: Vec<f64> = out.iter().zip(&h).map(|(a, b)| a - b).collect();
        let bound = lambda.abs() * hn;
        ensure!(
            norm(&delta) <= bound * (1.0 + 1e-12),
            "case {case}: |Δ| {} > |λ||h| {bound}",
            norm(&delta)
        );

        let inside = basis.project(&h).map_err(|e| e.to_string())?;
        let scaled =
            steer_vector(&inside, &basis, lambda, DEFAULT_EPSILON).map_err(|e| e.to_string())?;
        let n_in = norm(&inside);
        let err: f64 = norm(
            &scaled
                .iter()
                .zip(&inside)
                .map(|(s, v)| s - (1.0 + lambda) * v)
                .collect::<Vec<_>>(),
        );
        ensure!(
            err <= lambda.abs() * DEFAULT_EPSILON + 1e-12 * (1.0 + lambda.abs()) * n_in,
            "case {case}: in-span vector off (1+λ)h by {err}"
        );

        let e0 = projection_energy(&h, &basis)
            .map_err(|e| e.to_string())?
            .total;
        if e0 > 0.05 && e0 < 0.95 {
            let up = steer_vector(&h, &basis, 0.08, DEFAULT_EPSILON).map_err(|e| e.to_string())?;
            let e1 = projection_energy(&up, &basis)
                .map_err(|e| e.to_string())?
                .total;
            ensure!(
                e1 > e0,
                "case {case}: energy {e0} -> {e1} under lambda = 0.08"
            );
            increases += 1;
        }
    }
    Ok(format!(
        "10^4 cases, {increases} strict energy increases checked"
    ))
}

fn sensitivity_asymmetry() -> Outcome {
    let start = Instant::now();
    let dim = 16;
    let spec = PlantedSpec::new(500, dim, 4, 0.1, 11);
    let planted = generate_planted(&spec).map_err(|e| e.to_string())?;
    let art = fit_subspace(&planted.pair, 0, &FitConfig::default().with_k(4))
        .map_err(|e| e.to_string())?;
    let u = art.basis();
    let (events, _) = generate_mixed_stream(&spec, 400, (0.05, 0.95)).map_err(|e| e.to_string())?;
    let energy_with = |basis: &OrthonormalBasis, lambda: f64| -> Result<f64, String> {
        let cfg = SteerConfig {
            lambda,
            ..SteerConfig::new(0, 0.0)
        };
        let out = steer_stream_with_basis(&events, &cfg, basis).map_err(|e| e.to_string())?;
        generated_energy(&events, &out, u).map_err(|e| e.to_string())
    };
    let base = energy_with(u, 0.0)?;
    let plus = energy_with(u, 0.1)?;
    let minus = energy_with(u, -0.1)?;
    let sub_delta = plus - base;
    let mut random_abs = 0.0;
    for seed in 0..20u64 {
        let r = random_orthonormal_basis(dim, u.rank(), seed).map_err(|e| e.to_string())?;
        random_abs += (energy_with(&r, 0.1)? - base).abs();
    }
    let random_mean = random_abs / 20.0;
    let ratio = random_mean / sub_delta.abs();
    let elapsed = start.elapsed();
    ensure!(plus > minus, "E(+0.1) = {plus} <= E(-0.1) = {minus}");
    ensure!(
        ratio < 0.2,
        "random mean |Δ| {random_mean} is {:.1}% of subspace Δ {sub_delta}",
        100.0 * ratio
    );
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "E(-0.1) {minus:.4} < E(0) {base:.4} < E(+0.1) {plus:.4}; random/subspace |Δ| {:.1}%, {elapsed:.2?}",
        100.0 * ratio
    ))
}

fn auc_oracle() -> Outcome {
    let mut rng = GaussianSource::new(5);
    let mut instances = 0;
    while instances < 200 {
        let n = 2 + rng.below(499);
        let levels = 1 + rng.below(20);
        let scores: Vec<f64> = (0..n)
            .map(|_| rng.below(levels) as f64 * 0.25 - 1.0)
            .collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.uniform() < 0.4).collect();
        let pos = labels.iter().filter(|l| **l).count();
        if pos == 0 || pos == n {
            continue;
        }
        let mut twice_wins = 0u64;
        for (sp, _) in scores.iter().zip(&labels).filter(|(_, l)| **l) {
            for (sn, _) in scores.iter().zip(&labels).filter(|(_, l)| !**l) {
                twice_wins += if sp > sn {
                    2
                } else if sp == sn {
                    1
                } else {
                    0
                };
            }
        }
        let oracle = (twice_wins as f64 / 2.0) / (pos as f64 * (n - pos) as f64);
        let auc = roc_auc(&scores, &labels).map_err(|e| e.to_string())?;
        ensure!(
            auc.to_bits() == oracle.to_bits(),
            "instance {instances}: {auc} vs pair count {oracle}"
        );
        let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
        let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
        let flip = roc_auc(&scores, &flipped).map_err(|e| e.to_string())?;
        let neg = roc_auc(&negated, &labels).map_err(|e| e.to_string())?;
        ensure!(
            (auc + flip - 1.0).abs() <= 1e-12,
            "instance {instances}: label flip {auc} + {flip} != 1"
        );
        ensure!(
            (auc + neg - 1.0).abs() <= 1e-12,
            "instance {instances}: negation {auc} + {neg} != 1"
        );
        instances += 1;
    }
    Ok("200 instances with ties, exact match".to_string())
}

fn defaults() -> Outcome {
    ensure!(DEFAULT_K == 32, "k = {DEFAULT_K}");
    ensure!(
        DEFAULT_VARIANCE_THRESHOLD == 0.98,
        "variance threshold {DEFAULT_VARIANCE_THRESHOLD}"
    );
    ensure!(
        DEFAULT_LAMBDA_GRID == [0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14],
        "lambda grid {DEFAULT_LAMBDA_GRID:?}"
    );
    ensure!(
        DEFAULT_CANDIDATE_LAYERS == 8,
        "candidate layers {DEFAULT_CANDIDATE_LAYERS}"
    );
    ensure!(DEFAULT_EPSILON == 1e-8, "epsilon {DEFAULT_EPSILON}");
    let cfg = FitConfig::default();
    ensure!(
        cfg.k == 32 && cfg.variance_threshold == 0.98,
        "FitConfig::default() = {cfg:?}"
    );

    // With ‖h‖ = ε and h in span(U), ε only in the denominator gives gain λ/2.
    let basis = OrthonormalBasis::new(Matrix::new(2, 1, vec![1.0, 0.0]).unwrap(), 1e-12).unwrap();
    let h = [DEFAULT_EPSILON, 0.0];
    let out = steer_vector(&h, &basis, 0.1, DEFAULT_EPSILON).map_err(|e| e.to_string())?;
    let expected =
        DEFAULT_EPSILON * (1.0 + 0.1 * DEFAULT_EPSILON / (DEFAULT_EPSILON + DEFAULT_EPSILON));
    ensure!(
        (out[0] - expected).abs() <= 1e-15 * expected && out[1] == 0.0,
        "small in-span vector steered to {out:?}, expected [{expected}, 0]"
    );

    let parse = |args: &[&str]| Cli::try_parse_from(args).map_err(|e| e.to_string());
    match parse(&["logicspace", "fit", "--manifest", "m.json", "--out", "o"])?.command {
        Command::Fit(a) => ensure!(a.k == [32] && a.fit.variance == 0.98, "fit defaults {a:?}"),
        _ => return Err("fit did not parse as fit".into()),
    }
    match parse(&[
        "logicspace",
        "sweep",
        "--artifact",
        "a",
        "--input",
        "e.mvls",
        "--out",
        "s.csv",
    ])?
    .command
    {
        Command::Sweep(a) => ensure!(
            a.grid == DEFAULT_LAMBDA_GRID && a.epsilon == 1e-8,
            "sweep defaults {a:?}"
        ),
        _ => return Err("sweep did not parse as sweep".into()),
    }
    match parse(&[
        "logicspace",
        "align",
        "--manifest",
        "m.json",
        "--out",
        "a.csv",
        "--candidates",
    ])?
    .command
    {
        Command::Align(a) => ensure!(a.candidates == Some(8) && a.k == 32, "align defaults {a:?}"),
        _ => return Err("align did not parse as align".into()),
    }
    Ok(
        "k=32, variance 0.98, grid 0.02..0.14, 8 candidates, epsilon 1e-8 in the denominator"
            .to_string(),
    )
}

fn style_regression() -> Outcome {
    let counts = |pairs: &[(&str, u64)]| pairs.iter().map(|(w, c)| (w.to_string(), *c)).collect();
    let baseline = counts(&[
        ("since", 1800),
        ("if", 1128),
        ("then", 641),
        ("so", 126),
        ("therefore", 443),
        ("because", 123),
        ("know", 1419),
        ("given", 5176),
        ("conclude", 770),
    ]);
    let steered = counts(&[
        ("since", 1926),
        ("if", 1179),
        ("then", 664),
        ("so", 149),
        ("therefore", 447),
        ("because", 101),
        ("know", 944),
        ("given", 4483),
        ("conclude", 700),
    ]);
    let lexicons = logicspace::lexicon::style_lexicons(None).map_err(|e| e.to_string())?;
    let report = style_from_counts(&baseline, &steered, &lexicons);
    let published_words = [
        ("since", 7.0),
        ("if", 4.5),
        ("then", 3.6),
        ("so", 18.3),
        ("therefore", 0.9),
        ("because", -17.9),
        ("know", -33.5),
        ("given", -13.4),
        ("conclude", -9.1),
    ];
    let mut worst = 0.0f64;
    for (word, published) in published_words {
        let row = report
            .words
            .iter()
            .find(|r| r.word == word)
            .ok_or_else(|| format!("{word} missing from the report"))?;
        let pct = row
            .counts
            .percent
            .ok_or_else(|| format!("{word}: no percentage"))?;
        worst = worst.max((pct - published).abs());
        ensure!(
            (pct - published).abs() <= 0.05,
            "{word}: {pct:.3}% vs {published}%"
        );
    }
    // Group rows use the published group totals, which include words not
    // broken out individually.
    for (group, b, s, published) in [
        ("reasoning verbs", 7379, 6145, -16.7),
        ("connectives", 4263, 4466, 4.8),
    ] {
        let pct = CountDelta::new(b, s).percent.ok_or("no percentage")?;
        worst = worst.max((pct - published).abs());
        ensure!(
            (pct - published).abs() <= 0.05,
            "{group}: {pct:.3}% vs {published}%"
        );
    }
    Ok(format!(
        "10 published percentages, worst deviation {worst:.3} points"
    ))
}

fn format_fuzzing() -> Outcome {
    let mut rng = GaussianSource::new(4242);
    let seed_matrix = rng.matrix(3, 4).map_err(|e| e.to_string())?;
    let mut typed = 0usize;
    let mut accepted = 0usize;
    for case in 0..1000 {
        let dtype = if case % 2 == 0 {
            Dtype::F64
        } else {
            Dtype::F32
        };
        let mut bytes = encode(&seed_matrix, dtype).map_err(|e| e.to_string())?;
        for _ in 0..1 + rng.below(4) {
            let pos = rng.below(HEADER_LEN);
            bytes[pos] = rng.below(256) as u8;
        }
        match rng.below(4) {
            0 => bytes.truncate(rng.below(bytes.len() + 1)),
            1 => bytes.extend((0..rng.below(16)).map(|_| rng.below(256) as u8)),
            _ => {}
        }
        let result = catch_unwind(AssertUnwindSafe(|| decode(&bytes)));
        match result {
            Err(_) => {
                return Err(format!(
                    "case {case}: decoder panicked on {:02x?}",
                    &bytes[..bytes.len().min(HEADER_LEN)]
                ))
            }
            Ok(Ok(_)) => accepted += 1,
            Ok(Err(IoError::Format(_) | IoError::Validation(_))) => typed += 1,
            Ok(Err(other)) => return Err(format!("case {case}: unexpected error kind {other:?}")),
        }
    }
    Ok(format!(
        "1000 mutated headers: {typed} typed errors, {accepted} still valid, 0 panics"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("planted-subspace recovery", planted_recovery),
        ("CCA oracle equivalence", cca_oracle_equivalence),
        ("energy decomposition exactness", energy_exactness),
        ("steering formula contract", steering_contract),
        ("steering sensitivity asymmetry", sensitivity_asymmetry),
        ("ROC-AUC oracle", auc_oracle),
        ("published defaults", defaults),
        ("style-statistic regression", style_regression),
        ("MVLS header fuzzing", format_fuzzing),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(check).unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    let _ = std::panic::take_hook();
    println!(
        "{} of {} acceptance criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
