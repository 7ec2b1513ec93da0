//! Factorization and baseline forecasting against independent oracles:
//! generator-known rank-1 instances, a ridge-only alternating solver, manual
//! AR recursions, dense normal-equation solves, and a second Theta
//! implementation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topocast_core::forecast::{
    masked_rmse, rmse, theta_forecast, trmf_fit, trmf_fit_loadings, trmf_fit_with_graph,
    trmf_forecast, trmf_objective, TrmfHyper, TrmfModel,
};
use topocast_core::math::{standard_normal, Matrix};
use topocast_core::series::SeriesMatrix;
use topocast_core::testkit::{
    gaussian_solve, manual_ar_forecast, rank1_matrix, ridge_only_mf_objective, theta_reference,
};

fn tiny_hyper(d: usize, p: usize) -> TrmfHyper {
    // Near-unregularized: reconstruction dominates. lambda_phi sits well
    // below lambda_z because the printed normalizations scale the AR data
    // term by eta_z/(T-p); anything larger would shrink phi toward zero.
    TrmfHyper {
        d,
        p,
        lambda_f: 1e-6,
        lambda_z: 1e-6,
        lambda_phi: 1e-12,
        eta_z: 0.9,
        eta_f: 0.0,
        max_sweeps: 60,
        tol: 1e-10,
    }
}

#[test]
fn rank1_instance_is_recovered_with_ar_coefficient() {
    let y = rank1_matrix(5, 36, 12, 0.9);
    let model = trmf_fit(&y, &tiny_hyper(1, 1), 0).unwrap();

    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..y.n_series() {
        let recon = model.reconstruct_col(i);
        for t in 0..y.periods() {
            let e = y.value(t, i) - recon[t];
            num += e * e;
            den += y.value(t, i) * y.value(t, i);
        }
    }
    let rel = (num / den).sqrt();
    assert!(rel < 1e-3, "relative reconstruction error {rel}");
    let phi = model.ar_coeffs.get(0, 0);
    assert!((0.85..=0.95).contains(&phi), "phi = {phi}");
}

#[test]
fn objective_trace_never_increases_over_twenty_seeds() {
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 400);
        let periods = 24;
        let n = 8;
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..periods).map(|_| standard_normal(&mut rng)).collect())
            .collect();
        let y = SeriesMatrix::from_columns(periods, &cols).unwrap();
        let hyper = TrmfHyper {
            d: 3,
            p: 2,
            max_sweeps: 15,
            tol: 0.0,
            ..TrmfHyper::default()
        };
        let model = trmf_fit(&y, &hyper, seed).unwrap();
        for w in model.objective_trace.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-8,
                "seed {seed}: trace {:?}",
                model.objective_trace
            );
        }
    }
}

#[test]
fn eta_z_zero_matches_ridge_only_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let periods = 16;
    let n = 6;
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..periods).map(|_| standard_normal(&mut rng)).collect())
        .collect();
    let y = SeriesMatrix::from_columns(periods, &cols).unwrap();
    let sweeps = 8;
    let hyper = TrmfHyper {
        d: 2,
        p: 1,
        lambda_f: 0.4,
        lambda_z: 0.7,
        lambda_phi: 0.2,
        eta_z: 0.0,
        eta_f: 0.0,
        max_sweeps: sweeps,
        tol: 0.0,
        ..TrmfHyper::default()
    };
    for seed in [1u64, 2, 3] {
        let model = trmf_fit(&y, &hyper, seed).unwrap();
        let reference = ridge_only_mf_objective(&y, 2, 0.4, 0.7, seed, sweeps);
        let got = *model.objective_trace.last().unwrap();
        assert!(
            (got - reference).abs() < 1e-9 * reference.abs().max(1.0),
            "seed {seed}: {got} vs ridge-only {reference}"
        );
    }
}

#[test]
fn masked_entries_recover_on_rank1_data() {
    // 30% of cells hidden; held-out RMSE within 5x of the fully observed
    // fit. A small noise floor keeps both errors away from solver epsilon,
    // where their ratio would be meaningless.
    let mut fully = Vec::new();
    let mut held = Vec::new();
    for seed in 0..10u64 {
        let clean = rank1_matrix(seed, 30, 10, 0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
        let mut cols = Vec::new();
        let mut masks = Vec::new();
        for i in 0..clean.n_series() {
            let col: Vec<f64> = clean
                .col(i)
                .iter()
                .map(|&v| v + 0.01 * standard_normal(&mut rng))
                .collect();
            cols.push(col);
            let mask: Vec<bool> = (0..clean.periods()).map(|_| rng.gen::<f64>() > 0.3).collect();
            masks.push(mask);
        }
        let y = SeriesMatrix::from_columns(clean.periods(), &cols).unwrap();
        let masked = SeriesMatrix::from_masked_columns(clean.periods(), &cols, &masks).unwrap();

        let hyper = tiny_hyper(1, 1);
        let full_fit = trmf_fit(&y, &hyper, seed).unwrap();
        let masked_fit = trmf_fit(&masked, &hyper, seed).unwrap();

        let mut full_err = Vec::new();
        let mut heldout_err = Vec::new();
        for i in 0..y.n_series() {
            let rec_full = full_fit.reconstruct_col(i);
            let rec_masked = masked_fit.reconstruct_col(i);
            for t in 0..y.periods() {
                let truth = y.value(t, i);
                full_err.push(truth - rec_full[t]);
                if !masked.is_observed(t, i) {
                    heldout_err.push(truth - rec_masked[t]);
                }
            }
        }
        let rms = |v: &[f64]| (v.iter().map(|e| e * e).sum::<f64>() / v.len() as f64).sqrt();
        fully.push(rms(&full_err));
        held.push(rms(&heldout_err));
    }
    let mut ratios: Vec<f64> = fully
        .iter()
        .zip(&held)
        .map(|(f, h)| h / f.max(1e-12))
        .collect();
    ratios.sort_by(f64::total_cmp);
    let median = ratios[ratios.len() / 2];
    assert!(median < 5.0, "median held-out/full ratio {median}, {ratios:?}");
}

fn model_with(phi_rows: &[Vec<f64>], factor_tail: &[Vec<f64>], n: usize) -> TrmfModel {
    // Hand-built model: factors hold the provided tail (earlier rows zero),
    // identity-ish loadings so forecasts expose the factor recursion.
    let d = phi_rows.len();
    let p = phi_rows[0].len();
    let periods = factor_tail.len();
    let mut factors = Matrix::zeros(periods, d);
    for (t, row) in factor_tail.iter().enumerate() {
        for j in 0..d {
            factors.set(t, j, row[j]);
        }
    }
    let mut ar = Matrix::zeros(d, p);
    for (j, row) in phi_rows.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            ar.set(j, i, v);
        }
    }
    let mut loadings = Matrix::zeros(d, n);
    for i in 0..n {
        loadings.set(i % d, i, 1.0);
    }
    TrmfModel {
        factors,
        loadings,
        ar_coeffs: ar,
        hyper: TrmfHyper {
            d,
            p,
            max_sweeps: 0,
            ..TrmfHyper::default()
        },
        objective_trace: vec![],
        seed: 0,
    }
}

#[test]
fn unit_root_carries_last_level_forward() {
    let model = model_with(&[vec![1.0]], &[vec![3.0], vec![5.0]], 1);
    let fc = trmf_forecast(&model, 4);
    for h in 0..4 {
        assert_eq!(fc.get(h, 0), 5.0);
    }
}

#[test]
fn geometric_decay_halves_each_step() {
    let model = model_with(&[vec![0.5]], &[vec![8.0], vec![4.0]], 1);
    let fc = trmf_forecast(&model, 3);
    assert_eq!(fc.get(0, 0), 2.0);
    assert_eq!(fc.get(1, 0), 1.0);
    assert_eq!(fc.get(2, 0), 0.5);
}

#[test]
fn order_two_recursion_matches_hand_computation() {
    // phi = (0.5, 0.25) on lags (t-1, t-2), history (..., 2, 4).
    let model = model_with(&[vec![0.5, 0.25]], &[vec![2.0], vec![4.0]], 1);
    let fc = trmf_forecast(&model, 3);
    assert_eq!(fc.get(0, 0), 2.5);
    assert_eq!(fc.get(1, 0), 2.25);
    assert_eq!(fc.get(2, 0), 1.75);
}

#[test]
fn forecasts_match_manual_recursion_exactly_up_to_p3() {
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    for p in 1..=3usize {
        for case in 0..10 {
            let periods = 12;
            let phi: Vec<f64> = (0..p).map(|_| rng.gen_range(-0.6..0.9)).collect();
            let history: Vec<Vec<f64>> = (0..periods)
                .map(|_| vec![rng.gen_range(-2.0..2.0)])
                .collect();
            let model = model_with(&[phi.clone()], &history, 1);
            let fc = trmf_forecast(&model, 6);
            let flat: Vec<f64> = history.iter().map(|r| r[0]).collect();
            let oracle = manual_ar_forecast(&phi, &flat, 6);
            for h in 0..6 {
                assert_eq!(fc.get(h, 0), oracle[h], "p {p} case {case} step {h}");
            }
        }
    }
}

#[test]
fn forecast_prefix_is_stable() {
    let y = rank1_matrix(3, 24, 6, 0.85);
    let model = trmf_fit(&y, &tiny_hyper(2, 2), 4).unwrap();
    let short = trmf_forecast(&model, 3);
    let long = trmf_forecast(&model, 9);
    for h in 0..3 {
        for i in 0..y.n_series() {
            assert_eq!(short.get(h, i), long.get(h, i));
        }
    }
}

#[test]
fn loading_fit_reaches_span_members() {
    // Rank-2 data so both fitted factor directions carry real scale.
    let (y, _) = topocast_core::testkit::two_regime_matrix(8, 20, 4, 0.0);
    let mut hyper = tiny_hyper(2, 1);
    hyper.lambda_f = 1e-9;
    let model = trmf_fit(&y, &hyper, 2).unwrap();
    // A fresh combination of the fitted factors is in the span.
    let periods = y.periods();
    let target: Vec<f64> = (0..periods)
        .map(|t| 1.3 * model.factors.get(t, 0) - 0.4 * model.factors.get(t, 1))
        .collect();
    let mask = vec![true; periods];
    let loading = trmf_fit_loadings(&model, &target, &mask).unwrap();
    let recon: Vec<f64> = (0..periods)
        .map(|t| loading[0] * model.factors.get(t, 0) + loading[1] * model.factors.get(t, 1))
        .collect();
    let err = rmse(&recon, &target).unwrap();
    assert!(err < 1e-6, "span member reconstruction error {err}");

    // The all-zero series shrinks to (nearly) zero loadings.
    let zeros = vec![0.0; periods];
    let l0 = trmf_fit_loadings(&model, &zeros, &mask).unwrap();
    assert!(l0.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-6);
}

#[test]
fn loading_fit_matches_dense_normal_equations() {
    let y = rank1_matrix(13, 18, 4, 0.9);
    let hyper = TrmfHyper {
        d: 3,
        p: 1,
        lambda_f: 0.37,
        ..tiny_hyper(3, 1)
    };
    let model = trmf_fit(&y, &hyper, 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let periods = y.periods();
    let target: Vec<f64> = (0..periods).map(|_| standard_normal(&mut rng)).collect();
    let mask: Vec<bool> = (0..periods).map(|t| t % 5 != 0).collect();
    let got = trmf_fit_loadings(&model, &target, &mask).unwrap();

    // Dense oracle: (Zᵀ Z / m + (λ_F / d) I) f = Zᵀ y / m over observed rows.
    let d = 3;
    let m_obs = mask.iter().filter(|&&b| b).count() as f64;
    let mut a = Matrix::zeros(d, d);
    let mut b = vec![0.0; d];
    for t in 0..periods {
        if !mask[t] {
            continue;
        }
        for r in 0..d {
            b[r] += model.factors.get(t, r) * target[t] / m_obs;
            for c in 0..d {
                a.set(
                    r,
                    c,
                    a.get(r, c) + model.factors.get(t, r) * model.factors.get(t, c) / m_obs,
                );
            }
        }
    }
    for r in 0..d {
        a.set(r, r, a.get(r, r) + 0.37 / d as f64);
    }
    let oracle = gaussian_solve(&a, &b);
    for r in 0..d {
        assert!(
            (got[r] - oracle[r]).abs() < 1e-8,
            "coef {r}: {} vs {}",
            got[r],
            oracle[r]
        );
    }
}

#[test]
fn too_sparse_series_is_rejected() {
    let y = rank1_matrix(0, 10, 3, 0.9);
    let hyper = TrmfHyper {
        d: 2,
        p: 4,
        ..TrmfHyper::default()
    };
    let mut cols = Vec::new();
    let mut masks = Vec::new();
    for i in 0..3 {
        cols.push(y.col(i).to_vec());
        let mut mask = vec![false; 10];
        for t in 0..=i {
            mask[t] = true;
        }
        masks.push(mask);
    }
    let sparse = SeriesMatrix::from_masked_columns(10, &cols, &masks).unwrap();
    assert_eq!(
        trmf_fit(&sparse, &hyper, 0).unwrap_err().category(),
        "InsufficientHistory"
    );

    let ok = trmf_fit(&y, &TrmfHyper { d: 2, p: 1, max_sweeps: 3, ..TrmfHyper::default() }, 0)
        .unwrap();
    let mask = vec![false; 10];
    let err = trmf_fit_loadings(&ok, &vec![0.0; 10], &mask).unwrap_err();
    assert_eq!(err.category(), "InsufficientHistory");
}

#[test]
fn identity_similarity_reduces_to_scaled_ridge() {
    let y = rank1_matrix(21, 16, 5, 0.9);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let d = 2;
    let hyper_graph = TrmfHyper {
        d,
        p: 1,
        lambda_f: 0.8,
        eta_f: 0.6,
        ..TrmfHyper::default()
    };
    // Same parameters evaluated two ways: with A = I at eta_f, and with the
    // plain ridge at lambda_f scaled by (1 - eta_f).
    let hyper_plain = TrmfHyper {
        eta_f: 0.0,
        lambda_f: 0.8 * (1.0 - 0.6),
        ..hyper_graph.clone()
    };
    let mut eye = Matrix::zeros(5, 5);
    for i in 0..5 {
        eye.set(i, i, 1.0);
    }
    let factors = {
        let mut m = Matrix::zeros(16, d);
        for t in 0..16 {
            for j in 0..d {
                m.set(t, j, standard_normal(&mut rng));
            }
        }
        m
    };
    let loadings = {
        let mut m = Matrix::zeros(d, 5);
        for j in 0..d {
            for i in 0..5 {
                m.set(j, i, standard_normal(&mut rng));
            }
        }
        m
    };
    let ar = Matrix::zeros(d, 1);
    let with_graph = trmf_objective(&y, &factors, &loadings, &ar, &hyper_graph, Some(&eye));
    let plain = trmf_objective(&y, &factors, &loadings, &ar, &hyper_plain, None);
    assert!(
        (with_graph - plain).abs() < 1e-9,
        "graph {with_graph} vs plain {plain}"
    );

    // And the graph-fit path runs end to end.
    let fitted = trmf_fit_with_graph(&y, &hyper_graph, Some(&eye), 3).unwrap();
    for w in fitted.objective_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-8);
    }
}

#[test]
fn theta_matches_independent_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for case in 0..20 {
        let len = rng.gen_range(10..60);
        let mut level = 10.0;
        let series: Vec<f64> = (0..len)
            .map(|_| {
                level += standard_normal(&mut rng);
                level
            })
            .collect();
        let got = theta_forecast(&series, 8).unwrap();
        let reference = theta_reference(&series, 8);
        for h in 0..8 {
            assert!(
                (got[h] - reference[h]).abs() < 1e-9,
                "case {case} step {h}: {} vs {}",
                got[h],
                reference[h]
            );
        }
    }
}

#[test]
fn masked_rmse_agrees_with_rmse_when_fully_observed() {
    let a = [1.0, 2.0, 3.0];
    let b = [1.5, 2.5, 2.0];
    assert_eq!(
        rmse(&a, &b).unwrap(),
        masked_rmse(&a, &b, &[true, true, true]).unwrap()
    );
}
