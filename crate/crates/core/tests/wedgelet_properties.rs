use approxrate::cartoon::Raster;
use approxrate::wedgelet::{
    decode, edgelet_from_index, edgelet_index, encode, encode_on, fit_rdp, project, reencode, wedge_mask, DictionaryParams,
    DyadicSquare, EdRdpLeaf, Wedge, WedgeCode, WedgeError,
};
use proptest::prelude::*;

fn raster(n: usize, values: &[f64]) -> Raster {
    let mut r = Raster::zeros(n);
    r.data.copy_from_slice(&values[..n * n]);
    r
}

proptest! {
    #[test]
    fn colex_rank_round_trips(v2 in 1u64..100_000, t in 0.0f64..1.0) {
        let v1 = ((v2 as f64) * t) as u64 % v2;
        let idx = edgelet_index(v1, v2);
        prop_assert_eq!(edgelet_from_index(idx), (v1, v2));
        prop_assert!(idx < v2 * (v2 + 1) / 2);
    }

    #[test]
    fn wedge_sides_partition_their_square(j in 0u32..3, v1 in 0u32..16, dv in 1u32..16) {
        let p = DictionaryParams::new(3, 1, Some(16)).unwrap();
        let m = p.vertex_count(j) as u32;
        let (a, b) = (v1 % m, (v1 + dv) % m);
        prop_assume!(a != b);
        let (v1, v2) = (a.min(b), a.max(b));
        let sq = DyadicSquare::new(j, 0, 0).unwrap();
        let side = |s| wedge_mask(&EdRdpLeaf { square: sq, split: Some(Wedge { v1, v2, side: s }) }, &p);
        match (side(0), side(1)) {
            (Ok(m0), Ok(m1)) => {
                for (x, y) in m0.values.iter().zip(&m1.values) {
                    prop_assert!((x + y - 1.0).abs() <= 1e-12);
                    prop_assert!((0.0..=1.0).contains(x));
                }
            }
            (Err(WedgeError::Degenerate(_)), Err(WedgeError::Degenerate(_))) => {}
            other => prop_assert!(false, "inconsistent sides {:?}", other.0.err()),
        }
    }

    #[test]
    fn fit_is_a_valid_partition_with_consistent_cost(values in prop::collection::vec(0.0f64..1.0, 64), lambda in 1e-5f64..1e-1) {
        let p = DictionaryParams::new(3, 1, Some(8)).unwrap();
        let f = raster(8, &values);
        let fit = fit_rdp(&f, p, lambda).unwrap();
        fit.partition.validate().unwrap();
        prop_assert!((fit.cost - (fit.error_sq + lambda * fit.pieces as f64)).abs() <= 1e-12);
        let proj = project(&f, &fit.partition).unwrap();
        let direct = f.sub(&proj.reconstruction).norm().powi(2);
        prop_assert!((direct - fit.error_sq).abs() <= 1e-10, "{} vs {}", direct, fit.error_sq);
        let flat = Raster { n: 8, data: vec![f.mean(); 64] };
        prop_assert!(fit.cost <= f.sub(&flat).norm().powi(2) + lambda + 1e-12);
    }

    #[test]
    fn codec_round_trip_is_stable(values in prop::collection::vec(0.0f64..1.0, 256), lambda in 1e-5f64..1e-2) {
        let p = DictionaryParams::new(4, 1, Some(16)).unwrap();
        let f = raster(16, &values);
        let (code, report) = encode(&f, p, lambda).unwrap();
        let bytes = code.to_bytes();
        prop_assert_eq!(bytes.len() as u64 * 8, code.total_bits());
        let parsed = WedgeCode::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&parsed, &code);
        let d = decode(&parsed).unwrap();
        prop_assert!((f.sub(&d.array).norm() - report.l2_error).abs() <= 1e-12);
        prop_assert_eq!(reencode(&code).unwrap(), code.clone());
        let fit = fit_rdp(&f, p, lambda).unwrap();
        prop_assert_eq!(encode_on(&f, &fit.partition).unwrap(), code);
    }

    #[test]
    fn truncated_streams_are_rejected(values in prop::collection::vec(0.0f64..1.0, 64), cut in 1usize..13) {
        let p = DictionaryParams::new(3, 1, Some(8)).unwrap();
        let (code, _) = encode(&raster(8, &values), p, 1e-3).unwrap();
        let bytes = code.to_bytes();
        prop_assert!(WedgeCode::from_bytes(&bytes[..cut.min(bytes.len() - 1)]).is_err());
    }
}
