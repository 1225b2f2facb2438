use proptest::prelude::*;
use qmm_core::matrix::Matrix;
use qmm_core::sic::{
    general_sic, high_rate_filters, predict_sic_wmse, round_half_up, sic_quantize,
    waterfill_spacings, Codebook, SicPlan,
};
use qmm_core::wmse::{cholesky_upper, eigenvalues_sym, CovarianceModel};

/// Upper-triangular `U` with diagonal in `[0.1, 3]`, plus spacings and a target.
fn instance() -> impl Strategy<Value = (Matrix, Vec<f64>, Vec<f64>)> {
    (1usize..=12).prop_flat_map(|n| {
        (
            prop::collection::vec(-2.0f64..2.0, n * n),
            prop::collection::vec(0.1f64..3.0, n),
            prop::collection::vec(0.01f64..2.0, n),
            prop::collection::vec(-50.0f64..50.0, n),
        )
            .prop_map(move |(off, diag, spacings, y)| {
                let u = Matrix::from_fn(n, n, |i, j| match i.cmp(&j) {
                    std::cmp::Ordering::Less => off[i * n + j],
                    std::cmp::Ordering::Equal => diag[i],
                    std::cmp::Ordering::Greater => 0.0,
                });
                (u, spacings, y)
            })
    })
}

fn codeword(spacings: &[f64], z: &[i64]) -> Vec<f64> {
    spacings.iter().zip(z).map(|(a, &k)| a * k as f64).collect()
}

fn spd() -> impl Strategy<Value = Matrix> {
    (1usize..=10).prop_flat_map(|n| {
        prop::collection::vec(-1.0f64..1.0, n * (n + 2)).prop_map(move |x| {
            let m = Matrix::new(n + 2, n, x).unwrap();
            m.t_matmul(&m).unwrap()
        })
    })
}

/// Plain re-statement of the general SIC recursion on explicit matrices.
fn sic_oracle(
    y: &[f64],
    u: &Matrix,
    spacings: &[f64],
    f: &Matrix,
    b: &Matrix,
    beta: f64,
) -> Vec<f64> {
    let n = u.rows();
    let filtered: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| f[(i, j)] * y[j]).sum())
        .collect();
    let mut w = vec![0.0; n];
    for i in (0..n).rev() {
        let fed: f64 = (i + 1..n).map(|k| b[(i, k)] * w[k]).sum();
        w[i] = spacings[i] * round_half_up((filtered[i] - fed) / spacings[i]);
    }
    w.iter().map(|v| beta * v).collect()
}

proptest! {
    #[test]
    fn error_lies_in_sic_box((u, spacings, y) in instance()) {
        let z = sic_quantize(&y, &u, &spacings).unwrap();
        let uc = u.mat_vec(&codeword(&spacings, &z)).unwrap();
        for i in 0..y.len() {
            let half = 0.5 * spacings[i] * u[(i, i)];
            let e = y[i] - uc[i];
            let slack = 1e-12 * (1.0 + y[i].abs() + uc[i].abs());
            prop_assert!(e >= -half - slack && e < half + slack, "coord {i}: e={e}, half={half}");
        }
    }

    #[test]
    fn lattice_shift_equivariance(
        (u, spacings, y) in instance(),
        shift in prop::collection::vec(-20i64..20, 12),
    ) {
        let n = y.len();
        let m = &shift[..n];
        let lifted = u.mat_vec(&codeword(&spacings, m)).unwrap();
        let moved: Vec<f64> = y.iter().zip(&lifted).map(|(a, b)| a + b).collect();
        let z = sic_quantize(&y, &u, &spacings).unwrap();
        let zm = sic_quantize(&moved, &u, &spacings).unwrap();
        let expected: Vec<i64> = z.iter().zip(m).map(|(a, b)| a + b).collect();
        prop_assert_eq!(zm, expected);
    }

    #[test]
    fn general_sic_matches_integer_sic((u, spacings, y) in instance()) {
        let z = sic_quantize(&y, &u, &spacings).unwrap();
        let plan = SicPlan::high_rate(u.clone(), spacings.clone(), Codebook::Integers).unwrap();
        let out = general_sic(&y, &plan).unwrap();
        prop_assert_eq!(out.overloads, 0);
        for (i, (w, c)) in out.w_hat.iter().zip(codeword(&spacings, &z)).enumerate() {
            prop_assert!((w - c).abs() <= 1e-9 * (1.0 + c.abs()), "coord {i}: {w} vs {c}");
        }
    }

    #[test]
    fn general_sic_matches_transcription((u, spacings, y) in instance(), beta in 0.5f64..1.0) {
        let (f, b, _) = high_rate_filters(&u).unwrap();
        let plan = SicPlan::high_rate(u.clone(), spacings.clone(), Codebook::Integers)
            .unwrap()
            .with_beta(beta)
            .unwrap();
        let got = general_sic(&y, &plan).unwrap().w_hat;
        let want = sic_oracle(&y, &u, &spacings, &f, &b, beta);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-9 * (1.0 + w.abs()));
        }
    }

    #[test]
    fn high_rate_plan_is_zero_forcing((u, spacings, _) in instance()) {
        let plan = SicPlan::high_rate(u, spacings, Codebook::Integers).unwrap();
        prop_assert!(plan.zero_forcing_residual().unwrap() <= 1e-9);
    }

    #[test]
    fn watersic_spacing_equalizes_steps((u, _, _) in instance(), alpha in 0.001f64..10.0) {
        let sp = waterfill_spacings(&u, alpha).unwrap();
        let steps: Vec<f64> = sp.iter().enumerate().map(|(i, a)| a * u[(i, i)]).collect();
        for s in &steps {
            prop_assert!((s - steps[0]).abs() <= 1e-12 * steps[0] * 4.0);
        }
    }

    #[test]
    fn gptq_never_beats_watersic((u, _, _) in instance(), alpha in 0.001f64..10.0) {
        let n = u.rows();
        let gptq = predict_sic_wmse(&u, &vec![alpha; n]).unwrap();
        let water = predict_sic_wmse(&u, &waterfill_spacings(&u, alpha).unwrap()).unwrap();
        prop_assert!(gptq >= water * (1.0 - 1e-12));
    }

    #[test]
    fn cholesky_identities(sigma in spd()) {
        let model = CovarianceModel::new(sigma.clone()).unwrap();
        prop_assume!(!model.is_regularized());
        let u = cholesky_upper(&sigma).unwrap();
        let rebuilt = u.t_matmul(&u).unwrap();
        prop_assert!(rebuilt.max_abs_diff(&sigma) <= 1e-8 * sigma.frobenius_norm());
        let log_diag: f64 = u.diag().iter().map(|v| 2.0 * v.ln()).sum();
        let log_eig: f64 = eigenvalues_sym(&sigma).unwrap().iter().map(|v| v.ln()).sum();
        prop_assert!((log_diag - log_eig).abs() <= 1e-6, "{log_diag} vs {log_eig}");
    }
}
