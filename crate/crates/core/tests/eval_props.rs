use proptest::prelude::*;
use qmm_core::eval::{matmul_error_report, Scheme};
use qmm_core::formats::Dither;
use qmm_core::io::{decode_csv, decode_qmx1, encode_csv, encode_qmx1};
use qmm_core::matrix::Matrix;
use qmm_core::rng::SeededRng;

fn scheme() -> impl Strategy<Value = Scheme> {
    prop_oneof![
        (2u32..=8).prop_map(|bits| Scheme::Int { bits }),
        (2u32..=4, 1u32..=3).prop_map(|(e, m)| Scheme::Fp {
            exponent_bits: e,
            mantissa_bits: m,
            dither: Dither::Random,
        }),
        Just(Scheme::NvInt4),
        Just(Scheme::NvFp4),
    ]
}

fn gaussian(n: usize, cols: usize, rng: &mut SeededRng) -> Matrix {
    Matrix::new(n, cols, rng.gaussian_vec(n * cols, 1.0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rms_summaries_are_scale_consistent(scheme in scheme(), seed in any::<u64>(), k in -6i32..6) {
        let s = 2f64.powi(k);
        let mut rng = SeededRng::new(seed);
        let a = gaussian(32, 3, &mut rng);
        let b = gaussian(32, 4, &mut rng);
        let base = matmul_error_report(&a, &b, scheme, false, &mut SeededRng::new(seed)).unwrap();
        let scaled = matmul_error_report(&a.scale(s), &b.scale(s), scheme, false, &mut SeededRng::new(seed)).unwrap();
        for (e, es) in base.error.data().iter().zip(scaled.error.data()) {
            prop_assert!((es - s * s * e).abs() <= 1e-9 * (s * s) * (1.0 + e.abs()));
        }
        for (x, y) in [
            (base.summary.rms_k, scaled.summary.rms_k),
            (base.summary.rms_int, scaled.summary.rms_int),
            (base.summary.rms_fp, scaled.summary.rms_fp),
        ] {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x));
        }
    }

    #[test]
    fn rotation_preserves_exact_products(seed in any::<u64>(), log_n in 1u32..=7) {
        let n = 1usize << log_n;
        let mut rng = SeededRng::new(seed);
        let a = gaussian(n, 3, &mut rng);
        let b = gaussian(n, 2, &mut rng);
        let r = matmul_error_report(&a, &b, Scheme::Exact, true, &mut rng).unwrap();
        prop_assert!(r.error.data().iter().all(|e| e.abs() <= 1e-9));
    }

    #[test]
    fn matrix_codecs_roundtrip(rows in 0usize..6, cols in 0usize..6, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let m = Matrix::new(rows, cols, rng.gaussian_vec(rows * cols, 1e3)).unwrap();
        prop_assert_eq!(&decode_qmx1(&encode_qmx1(&m)).unwrap(), &m);
        if rows > 0 && cols > 0 {
            prop_assert_eq!(&decode_csv(&encode_csv(&m)).unwrap(), &m);
        }
    }
}
