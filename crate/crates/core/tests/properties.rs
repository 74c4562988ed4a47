use proptest::prelude::*;

use bratteli::extension;
use bratteli::linalg::{self, SimplexEntry, SimplexVector};
use bratteli::measures::{self, MeasureKind, TailInvariantMeasure};
use bratteli::num::{parse_rational, q, qi, Q};
use bratteli::vershik::{self, Descriptor, DescriptorTail, OrderSpec, OrderedDiagram};
use bratteli::{build_diagram, Family, SubdiagramSpec, VertexKey};
use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};

fn rational() -> impl Strategy<Value = Q> {
    (1i64..20, 1i64..20).prop_map(|(n, d)| q(n, d))
}

fn unit_rational() -> impl Strategy<Value = Q> {
    (1i64..19).prop_flat_map(|n| (Just(n), (n + 1)..20)).prop_map(|(n, d)| q(n, d))
}

fn simplex(len: usize) -> impl Strategy<Value = SimplexVector> {
    prop::collection::vec(0i64..10, len).prop_map(move |w| {
        let total: i64 = w.iter().sum::<i64>() + 1;
        let entries = w
            .iter()
            .enumerate()
            .map(|(i, &x)| SimplexEntry { vertex: VertexKey::Index(i as i64 + 1), rank: i as u64 + 1, value: q(x, total) })
            .collect();
        SimplexVector::new(1, entries).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn binfty_heights_match_binomials(i in 1i64..25, n in 1usize..14) {
        let d = build_diagram(Family::Binfty).unwrap();
        let h = linalg::heights(&d, n, &[VertexKey::Index(i)]).unwrap();
        prop_assert_eq!(&h.values[0].height, &linalg::heights_closed_form(&d, n, &VertexKey::Index(i)).unwrap());
        // Pascal rule on the triangle: H_i^(n+1) = Σ_{j ≤ i} H_j^(n)
        let below = linalg::heights(&d, n, &(1..=i).map(VertexKey::Index).collect::<Vec<_>>()).unwrap();
        let sum: BigUint = below.values.iter().map(|e| e.height.clone()).sum();
        let up = linalg::heights(&d, n + 1, &[VertexKey::Index(i)]).unwrap();
        prop_assert_eq!(&up.values[0].height, &sum);
    }

    #[test]
    fn pascal_rows_are_stochastic(counts in prop::collection::vec(0u32..4, 1..4)) {
        let pairs: Vec<(i64, u32)> = counts.iter().enumerate().filter(|p| *p.1 > 0).map(|(i, &m)| (i as i64 - 1, m)).collect();
        prop_assume!(!pairs.is_empty());
        let v = VertexKey::pascal(&pairs).unwrap();
        let d = build_diagram(Family::PascalZ).unwrap();
        let n = v.total() as usize;
        let f = linalg::stochastic_matrix(&d, n - 1, std::slice::from_ref(&v)).unwrap();
        prop_assert_eq!(f.rows[0].sum(), Q::one());
    }

    #[test]
    fn distance_is_a_metric(x in simplex(6), y in simplex(6), z in simplex(6)) {
        let d = |a: &SimplexVector, b: &SimplexVector| linalg::simplex_distance(a, b).unwrap();
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z));
        prop_assert_eq!(d(&x, &x), Q::zero());
        prop_assert!(d(&x, &y) <= qi(2));
    }

    #[test]
    fn mu_a_is_invariant(a in rational(), n in 1usize..6) {
        let m = TailInvariantMeasure::new(MeasureKind::BinftyMuA { a }).unwrap();
        let r = m.verify_invariance(n + 1, 10).unwrap();
        prop_assert!(r.all_pass);
    }

    #[test]
    fn perturbed_measure_fails_invariance(a in rational(), i in 1i64..5) {
        let m = TailInvariantMeasure::new(MeasureKind::BinftyMuA { a }).unwrap().perturbed(2, VertexKey::Index(i), q(1, 1000));
        let r = m.verify_invariance(3, 8).unwrap();
        prop_assert!(!r.all_pass);
    }

    #[test]
    fn nu_a_telescopes(a in unit_rational(), k in 1i64..4, n in 1usize..12) {
        for l in k..k + n as i64 {
            let tail: Q = (l..=k + n as i64).map(|j| measures::nu_a_value(&a, k, n + 1, j)).sum();
            prop_assert_eq!(tail, measures::nu_a_value(&a, k, n, l));
        }
    }

    #[test]
    fn nu_a_is_completely_monotone(a in unit_rational()) {
        let seq = measures::nu_a_sequence(&a, 10);
        prop_assert!(measures::is_completely_monotonic(&seq, 6).unwrap().monotone);
    }

    #[test]
    fn extension_partial_sums_nondecreasing(p in unit_rational(), k in 1i64..4) {
        let m = TailInvariantMeasure::new(MeasureKind::PascalEdgeNuP { p, k }).unwrap();
        let r = extension::edge_extension_series(&m, 20).unwrap();
        prop_assert!(r.terms.iter().all(|t| !t.is_negative()));
        prop_assert!(r.partial_sums.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(r.direct_check);
    }

    #[test]
    fn closed_form_routes_agree(a in unit_rational(), k in 1i64..4) {
        let rec = extension::mu_a_band_recursion(&a, k, 15);
        let dir = extension::mu_a_band_direct(&a, k, 15).unwrap();
        prop_assert_eq!(&rec, &dir);
        let value = extension::mu_a_band_value(&a, k).unwrap();
        prop_assert!(rec.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(rec.iter().all(|x| x >= &value));
    }

    #[test]
    fn vershik_inverse_undoes_step(slots in prop::collection::vec(0usize..8, 5), order in 0usize..3) {
        let order = [OrderSpec::LeftToRight, OrderSpec::Alternating, OrderSpec::CyclicBinfty][order].clone();
        let d = build_diagram(Family::Binfty).unwrap().subdiagram(&SubdiagramSpec::parse("band:2").unwrap()).unwrap();
        let od = OrderedDiagram::new(d, order).unwrap();
        let paths = vershik::enumerate_paths(&od, 5, 64).unwrap();
        let x = &paths[slots.iter().fold(0, |a, s| a * 8 + s) % paths.len()];
        if let Ok(y) = od.vershik_step(x) {
            prop_assert_eq!(&od.vershik_step_inverse(&y).unwrap(), x);
        }
    }

    #[test]
    fn f_map_is_an_involution_on_z(start in -5i64..5, gaps in prop::collection::vec(1i64..4, 1..4), counts in prop::collection::vec(1u64..4, 3)) {
        let mut positions = vec![start];
        for g in &gaps {
            positions.push(positions.last().unwrap() + g);
        }
        let desc = Descriptor { counts: counts[..positions.len() - 1].to_vec(), positions, tail: DescriptorTail::Concentrating };
        let once = vershik::f_map(&desc, false).unwrap();
        prop_assert!(!once.clipped);
        prop_assert_eq!(vershik::f_map(&once.descriptor, false).unwrap().descriptor, desc);
    }

    #[test]
    fn rationals_roundtrip(n in -1000i64..1000, d in 1i64..1000) {
        let x = q(n, d);
        prop_assert_eq!(parse_rational(&x.to_string()).unwrap(), x);
    }
}
