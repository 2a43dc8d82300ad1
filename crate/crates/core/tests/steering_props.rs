// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use common::{gaussian, to_na};
use logicspace_core::analysis::projection_energy;
use logicspace_core::matrix::{dot, norm};
use logicspace_core::steering::{
    candidate_layers_from_scores, steer_stream_with_basis, sweep_lambda, sweep_random,
    SweepDirection, DEFAULT_CANDIDATE_LAYERS, DEFAULT_EPSILON, DEFAULT_LAMBDA_GRID,
};
use logicspace_core::{
    random_orthonormal_basis, select_hyperparams, steer_stream, steer_vector, Error, EvalRecord,
    FitConfig, MaskPolicy, Matrix, OrthonormalBasis, SteerConfig, TokenEvent,
};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn basis(dim: usize, k: usize, seed: u64) -> OrthonormalBasis {
    random_orthonormal_basis(dim, k, seed).unwrap()
}

/// h + λ‖h‖ · UUᵀh / (‖UUᵀh‖ + ε), written with an explicit projector.
fn naive_steer(h: &[f64], u: &Matrix, lambda: f64, eps: f64) -> Vec<f64> {
    let un = to_na(u);
    let p = &un * un.transpose();
    let hv = nalgebra::DVector::from_column_slice(h);
    let ph = &p * &hv;
    let out = &hv + ph.clone() * (lambda * hv.norm() / (ph.norm() + eps));
    out.iter().copied().collect()
}

#[test]
fn steer_matches_naive_formula() {
    let b = basis(12, 3, 1);
    for seed in 0..20 {
        let h = gaussian(1, 12, 100 + seed).into_vec();
        let got = steer_vector(&h, &b, 0.08, DEFAULT_EPSILON).unwrap();
        let want = naive_steer(&h, b.matrix(), 0.08, DEFAULT_EPSILON);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }
}

#[test]
fn steer_zero_lambda_and_orthogonal_vector() {
    let b = basis(6, 2, 2);
    let h = gaussian(1, 6, 3).into_vec();
    assert_eq!(steer_vector(&h, &b, 0.0, DEFAULT_EPSILON).unwrap(), h);
    // r ⟂ span(U) exactly: Ph = 0, output unchanged
    let axes = Matrix::from_columns(&[
        vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
    ])
    .unwrap();
    let axes = OrthonormalBasis::new(axes, 1e-12).unwrap();
    let r = vec![0.0, 0.0, 3.0, -1.0, 0.5, 2.0];
    assert_eq!(steer_vector(&r, &axes, 0.1, DEFAULT_EPSILON).unwrap(), r);
    assert!(matches!(
        steer_vector(&h, &b, 0.1, 0.0),
        Err(Error::Parameter(_))
    ));
    assert!(steer_vector(&h[..5], &b, 0.1, DEFAULT_EPSILON).is_err());
}

fn stream(dim: usize, t: usize, seed: u64) -> Vec<TokenEvent> {
    let m = gaussian(t, dim, seed);
    (0..t)
        .map(|i| TokenEvent {
            position: i,
            h: m.row(i).to_vec(),
            generated: i >= t / 3,
        })
        .collect()
}

#[test]
fn generated_only_mask_leaves_prompt_bit_identical() {
    let b = basis(8, 2, 4);
    let events = stream(8, 9, 5);
    let cfg = SteerConfig::new(0, 0.1);
    assert_eq!(cfg.mask_policy, MaskPolicy::GeneratedOnly);
    let out = steer_stream_with_basis(&events, &cfg, &b).unwrap();
    for (e, o) in events.iter().zip(&out) {
        if e.generated {
            assert_ne!(&e.h, o);
        } else {
            assert_eq!(
                e.h.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                o.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }
    let all = SteerConfig {
        mask_policy: MaskPolicy::AllTokens,
        ..cfg
    };
    let out = steer_stream_with_basis(&events, &all, &b).unwrap();
    assert!(events.iter().zip(&out).all(|(e, o)| &e.h != o));
}

#[test]
fn steer_stream_rejects_layer_mismatch() {
    let planted = logicspace_core::synth::generate_planted(
        &logicspace_core::synth::PlantedSpec::new(60, 5, 2, 0.1, 1),
    )
    .unwrap();
    let art =
        logicspace_core::fit_subspace(&planted.pair, 7, &FitConfig::default().with_k(2)).unwrap();
    let events = stream(5, 4, 1);
    let err = steer_stream(&events, &SteerConfig::new(6, 0.1), &art).unwrap_err();
    assert!(matches!(err, Error::Configuration(_)));
    assert!(steer_stream(&events, &SteerConfig::new(7, 0.1), &art).is_ok());
}

#[test]
fn mask_policy_parsing() {
    assert_eq!(
        "generated_only".parse::<MaskPolicy>().unwrap(),
        MaskPolicy::GeneratedOnly
    );
    assert_eq!(
        "all_tokens".parse::<MaskPolicy>().unwrap(),
        MaskPolicy::AllTokens
    );
    assert!("prompt".parse::<MaskPolicy>().is_err());
}

#[test]
fn random_basis_overlap_statistics() {
    // D = 256, k = 1: √D·|⟨u, v⟩| is approximately |N(0, 1)|
    let d = 256;
    let v = {
        let mut e = vec![0.0; d];
        e[0] = 1.0;
        e
    };
    let trials = 1000;
    let (mut abs_sum, mut sq_sum) = (0.0, 0.0);
    for seed in 0..trials {
        let u = random_orthonormal_basis(d, 1, seed).unwrap().column(0);
        let c = dot(&u, &v) * (d as f64).sqrt();
        abs_sum += c.abs();
        sq_sum += c * c;
    }
    let mean_abs = abs_sum / trials as f64;
    let rms = (sq_sum / trials as f64).sqrt();
    assert!(
        (mean_abs - (2.0 / std::f64::consts::PI).sqrt()).abs() < 0.06,
        "{mean_abs}"
    );
    assert!((rms - 1.0).abs() < 0.06, "{rms}");
}

#[test]
fn random_basis_is_seeded_and_orthonormal() {
    let a = random_orthonormal_basis(20, 4, 9).unwrap();
    assert_eq!(a, random_orthonormal_basis(20, 4, 9).unwrap());
    assert_ne!(a, random_orthonormal_basis(20, 4, 10).unwrap());
    assert!(OrthonormalBasis::new(a.into_matrix(), 1e-10).is_ok());
    assert!(random_orthonormal_basis(4, 5, 0).is_err());
    assert!(random_orthonormal_basis(4, 0, 0).is_err());
}

#[test]
fn hyperparameter_selection_breaks_ties_by_lambda_then_layer() {
    let recs = [
        EvalRecord::new(12, 0.10, 0.81).unwrap(),
        EvalRecord::new(14, 0.04, 0.81).unwrap(),
        EvalRecord::new(10, 0.04, 0.81).unwrap(),
        EvalRecord::new(11, 0.02, 0.79).unwrap(),
    ];
    assert_eq!(select_hyperparams(&recs).unwrap(), (10, 0.04));
    assert!(select_hyperparams(&[]).is_err());
    assert!(EvalRecord::new(1, 0.1, 1.2).is_err());
}

#[test]
fn candidate_layers_take_top_upper_half() {
    let scores: BTreeMap<usize, f64> = (0..24)
        .map(|l| (l, 1.0 - ((l as f64) - 17.0).abs() * 0.01))
        .collect();
    let picked = candidate_layers_from_scores(&scores, DEFAULT_CANDIDATE_LAYERS, Some(24)).unwrap();
    assert_eq!(picked.len(), 8);
    assert_eq!(picked[0], 17);
    assert!(picked.iter().all(|l| *l >= 12));
    // an eligible layer set smaller than m is an error
    assert!(candidate_layers_from_scores(&scores, 13, Some(24)).is_err());
}

#[test]
fn sweep_covers_grid_and_seeds() {
    let b = basis(10, 3, 6);
    let events = stream(10, 12, 7);
    let template = SteerConfig::new(0, 0.0);
    let mut metric = |ev: &[TokenEvent], out: &[Vec<f64>]| {
        logicspace_core::analysis::generated_energy(ev, out, &b)
    };
    let rows = sweep_lambda(
        &events,
        &b,
        SweepDirection::Subspace,
        &DEFAULT_LAMBDA_GRID,
        &template,
        &mut metric,
    )
    .unwrap();
    assert_eq!(rows.len(), 7);
    assert!(rows.windows(2).all(|w| w[1].metric >= w[0].metric));
    let rand = sweep_random(
        &events,
        10,
        3,
        &[1, 2, 3],
        &[0.02, 0.1],
        &template,
        &mut metric,
    )
    .unwrap();
    assert_eq!(rand.len(), 6);
    assert_eq!(rand[4].direction, SweepDirection::Random { seed: 3 });
    assert!(sweep_lambda(
        &events,
        &b,
        SweepDirection::Subspace,
        &[],
        &template,
        &mut metric
    )
    .is_err());
}

proptest! {
    #[test]
    fn steered_norm_is_bounded(seed in 0u64..5000, lambda in 0.0f64..0.5) {
        let b = basis(9, 3, seed % 7);
        let h = gaussian(1, 9, seed).into_vec();
        let out = steer_vector(&h, &b, lambda, DEFAULT_EPSILON).unwrap();
        let (n, m) = (norm(&h), norm(&out));
        prop_assert!(m >= (1.0 - lambda) * n - 1e-9);
        prop_assert!(m <= (1.0 + lambda) * n + 1e-9);
    }

    #[test]
    fn steering_is_positively_homogeneous(seed in 0u64..5000, c in 0.01f64..100.0) {
        let b = basis(7, 2, seed % 5);
        let h = gaussian(1, 7, seed).into_vec();
        let scaled: Vec<f64> = h.iter().map(|v| c * v).collect();
        let lhs = steer_vector(&scaled, &b, 0.1, DEFAULT_EPSILON).unwrap();
        let rhs: Vec<f64> = steer_vector(&h, &b, 0.1, DEFAULT_EPSILON).unwrap().iter().map(|v| c * v).collect();
        for (a, r) in lhs.iter().zip(&rhs) {
            prop_assert!((a - r).abs() <= 1e-6 * (1.0 + r.abs()));
        }
    }

    #[test]
    fn positive_lambda_never_lowers_energy(seed in 0u64..5000, lambda in 0.001f64..0.5) {
        let b = basis(10, 3, seed % 11);
        let h = gaussian(1, 10, seed).into_vec();
        let out = steer_vector(&h, &b, lambda, DEFAULT_EPSILON).unwrap();
        let before = projection_energy(&h, &b).unwrap().total;
        let after = projection_energy(&out, &b).unwrap().total;
        prop_assert!(after >= before - 1e-12);
    }
}
