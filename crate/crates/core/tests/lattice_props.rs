use proptest::prelude::*;
use qmm_core::lattice::{
    nearest_e8, nearest_zn, shaping_membership, voronoi_decode, voronoi_encode, voronoi_roundtrip,
    LatticeKind, LatticeSpec, Membership, NestedCode,
};

fn e8_point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-6i64..6, 8).prop_map(|c| {
        let g = LatticeSpec::e8().generator().clone();
        let coords: Vec<f64> = c.iter().map(|&v| v as f64).collect();
        g.mat_vec(&coords).unwrap()
    })
}

proptest! {
    #[test]
    fn e8_fixes_lattice_points(p in e8_point()) {
        prop_assert_eq!(nearest_e8(&p).unwrap().to_vec(), p);
    }

    #[test]
    fn e8_equivariance(x in prop::collection::vec(-4.0f64..4.0, 8), p in e8_point()) {
        let moved: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
        let base = nearest_e8(&x).unwrap();
        let expected: Vec<f64> = base.iter().zip(&p).map(|(a, b)| a + b).collect();
        prop_assert_eq!(nearest_e8(&moved).unwrap().to_vec(), expected);
    }

    #[test]
    fn e8_is_nearest_among_neighbours(x in prop::collection::vec(-4.0f64..4.0, 8)) {
        let q = nearest_e8(&x).unwrap();
        let d = |p: &[f64]| p.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let best = d(&q);
        for r in LatticeKind::E8.relevant_vectors() {
            let cand: Vec<f64> = q.iter().zip(&r).map(|(a, b)| a + b).collect();
            prop_assert!(d(&cand) >= best - 1e-12);
        }
    }

    #[test]
    fn zn_equivariance(x in prop::collection::vec(-50.0f64..50.0, 1..=16), s in -1000i64..1000) {
        let moved: Vec<f64> = x.iter().map(|v| v + s as f64).collect();
        let expected: Vec<i64> = nearest_zn(&x).iter().map(|v| v + s).collect();
        prop_assert_eq!(nearest_zn(&moved), expected);
    }

    #[test]
    fn voronoi_roundtrip_inside_shaping_region(
        x in prop::collection::vec(-10.0f64..10.0, 8),
        q in 2u32..=8,
        beta in 0.2f64..2.0,
    ) {
        let code = NestedCode::new(LatticeSpec::e8(), q, beta).unwrap();
        let rt = voronoi_roundtrip(&x, &code).unwrap();
        let base: Vec<f64> = rt.nearest.iter().map(|v| v / beta).collect();
        if shaping_membership(LatticeKind::E8, q, &base) == Membership::Interior {
            prop_assert!(!rt.overload);
        }
        let idx = voronoi_encode(&x, &code).unwrap();
        prop_assert!(idx.iter().all(|&v| (0..q as i64).contains(&v)));
        prop_assert_eq!(voronoi_decode(&idx, &code).unwrap(), rt.decoded);
    }

    #[test]
    fn voronoi_decode_is_min_energy_in_coset(v in prop::collection::vec(0i64..4, 2)) {
        let code = NestedCode::new(LatticeSpec::integer(2).unwrap(), 4, 1.0).unwrap();
        let d = voronoi_decode(&v, &code).unwrap();
        let energy = d.iter().map(|a| a * a).sum::<f64>();
        for s0 in -2i64..=2 {
            for s1 in -2i64..=2 {
                let other = [d[0] + 4.0 * s0 as f64, d[1] + 4.0 * s1 as f64];
                prop_assert!(other.iter().map(|a| a * a).sum::<f64>() >= energy);
            }
        }
    }
}
