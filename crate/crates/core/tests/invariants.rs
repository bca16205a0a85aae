use proptest::prelude::*;

use reldom::cusped::{horoball_distance, is_preferred_shape, preferred_shape, HoroballFragment};
use reldom::group::GroupSpec;
use reldom::linalg::{diag, dual, exterior_power, grassmann_distance, rotation, singular_values, Mat, Subspace};
use reldom::path::ordered_partition;
use reldom::splitting::{self, Analysis, AxiomConstants, MatrixSequence};
use reldom::verifier::{fit_lower, fit_upper};

fn matrix(d: usize) -> impl Strategy<Value = Mat> {
    prop::collection::vec(-3.0f64..3.0, d * d).prop_map(move |v| Mat::from_row_slice(d, d, &v))
}

fn well_conditioned(d: usize) -> impl Strategy<Value = Mat> {
    matrix(d).prop_filter("near singular", |m| {
        let s = singular_values(m);
        s[s.len() - 1] > 1e-3 * s[0]
    })
}

fn free2() -> GroupSpec {
    GroupSpec::from_toml("generators = [\"a\", \"A\", \"b\", \"B\"]\ninverses = [\"A\", \"a\", \"B\", \"b\"]\nnormal_form = \"free\"\n").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn partition_sums_and_windows(n in 1i64..5000) {
        let p = ordered_partition(n).unwrap();
        prop_assert_eq!(p.iter().sum::<u64>(), n as u64);
        for j in 1..=p.len() {
            for w in p.windows(j) {
                prop_assert!(w.iter().sum::<u64>() as f64 >= 2f64.powf(j as f64 / 2.0) - 1.0);
            }
        }
    }

    #[test]
    fn horoball_distance_is_symmetric_and_triangle(k1 in 0u32..12, k2 in 0u32..12, k3 in 0u32..12, d1 in 0u64..4000, d2 in 0u64..4000) {
        prop_assert_eq!(horoball_distance(k1, k2, d1), horoball_distance(k2, k1, d1));
        // base distance d1 + d2 bounds the third side from above
        prop_assert!(horoball_distance(k1, k3, d1 + d2) <= horoball_distance(k1, k2, d1) + horoball_distance(k2, k3, d2));
        let s = preferred_shape(k1, k2, d1, None);
        prop_assert!(s.horizontal <= 3);
    }

    #[test]
    fn preferred_geodesic_agrees_with_bfs(v1 in 0usize..40, k1 in 0u32..6, v2 in 0usize..40, k2 in 0u32..6) {
        let h = HoroballFragment::segment(40, 5).unwrap();
        let (x, y) = ((v1, k1.min(5)), (v2, k2.min(5)));
        let dist = h.bfs(x);
        let p = h.preferred_geodesic(x, y);
        prop_assert_eq!(p.len() as u32 - 1, dist[h.index(y)]);
        prop_assert!(is_preferred_shape(&p));
    }

    #[test]
    fn free_group_axioms(w1 in prop::collection::vec(0usize..4, 0..12), w2 in prop::collection::vec(0usize..4, 0..12), w3 in prop::collection::vec(0usize..4, 0..12)) {
        let g = free2();
        let (x, y, z) = (g.word(&w1), g.word(&w2), g.word(&w3));
        prop_assert_eq!(g.mul(&g.mul(&x, &y), &z), g.mul(&x, &g.mul(&y, &z)));
        prop_assert!(g.mul(&x, &g.inv(&x)).is_identity());
        prop_assert_eq!(g.word(&g.base_word(&x)), x);
    }

    #[test]
    fn support_lines_bound_every_point(pts in prop::collection::vec((1u32..30, -5.0f64..40.0), 2..60)) {
        let (c, mu) = fit_lower(&pts);
        prop_assert!(c <= 1.0);
        for &(x, y) in &pts {
            prop_assert!(y >= c.ln() + mu * x as f64 - 1e-9 * (1.0 + y.abs()));
        }
        let (cu, muu) = fit_upper(&pts, mu);
        prop_assert!(cu >= 1.0 && muu >= mu);
        for &(x, y) in &pts {
            prop_assert!(y <= cu.ln() + muu * x as f64 + 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn exterior_square_singular_values(g in well_conditioned(4)) {
        let s = singular_values(&g);
        let w = singular_values(&exterior_power(&g, 2).unwrap());
        let mut products: Vec<f64> = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).map(|(i, j)| s[i] * s[j]).collect();
        products.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in w.iter().zip(&products) {
            prop_assert!((a - b).abs() <= 1e-9 * products[0]);
        }
    }

    #[test]
    fn dual_inverts_singular_values(g in well_conditioned(3)) {
        let s = singular_values(&g);
        let sd = singular_values(&dual(&g).unwrap());
        for i in 0..3 {
            prop_assert!((sd[i] * s[2 - i] - 1.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn grassmann_distance_is_a_metric_on_lines(a in prop::collection::vec(-1.0f64..1.0, 3), b in prop::collection::vec(-1.0f64..1.0, 3), c in prop::collection::vec(-1.0f64..1.0, 3)) {
        let ok = |v: &Vec<f64>| v.iter().map(|x| x * x).sum::<f64>() > 1e-4;
        prop_assume!(ok(&a) && ok(&b) && ok(&c));
        let (la, lb, lc) = (Subspace::line(&a).unwrap(), Subspace::line(&b).unwrap(), Subspace::line(&c).unwrap());
        let dab = grassmann_distance(&la, &lb).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&dab));
        prop_assert!((dab - grassmann_distance(&lb, &la).unwrap()).abs() < 1e-12);
        prop_assert!(grassmann_distance(&la, &lc).unwrap() <= dab + grassmann_distance(&lb, &lc).unwrap() + 1e-12);
    }

    #[test]
    fn sequence_text_round_trip(th in prop::collection::vec(-1.0f64..1.0, 1..12), k0 in -20i64..20) {
        let seq = MatrixSequence::from_fn(k0, k0 + th.len() as i64 - 1, |k| rotation(th[(k - k0) as usize]) * diag(&[2.0, 0.5])).unwrap();
        let back = MatrixSequence::parse(&seq.to_text()).unwrap();
        prop_assert_eq!(back.k_min(), seq.k_min());
        for k in seq.k_min()..=seq.k_max() {
            prop_assert_eq!(back.get(k).unwrap(), seq.get(k).unwrap());
        }
    }

    #[test]
    fn depth_choice_and_gap_floor(c in 1.0f64..50.0, mu in 0.05f64..5.0, r in 0.0f64..2.0) {
        let k = AxiomConstants { c, mu, mu_prime: r * mu };
        let s = splitting::s_min(&k).unwrap();
        prop_assert!(s > 0.0 && s <= 2.0 / 3.0);
        let worse = AxiomConstants { c: 2.0 * c, ..k };
        prop_assert!(splitting::s_min(&worse).unwrap() < s);
        let n = splitting::choose_n(&k).unwrap();
        prop_assert!(splitting::error_radius(&k, n) <= 1.0 / 3.0 + 1e-12);
        prop_assert!(n == 1 || splitting::error_radius(&k, n - 1) > 1.0 / 3.0 - 1e-12);
        prop_assert!(splitting::choose_n_closed_form(&k).abs_diff(n) <= 1);
    }

    #[test]
    fn fitted_constants_satisfy_axioms(th in prop::collection::vec(-0.3f64..0.3, 30)) {
        let seq = MatrixSequence::from_fn(-15, 14, |k| {
            let r = rotation(th[(k + 15) as usize]);
            &r * diag(&[3.0, 1.0 / 3.0]) * r.transpose()
        }).unwrap();
        let a = Analysis::new(&seq).unwrap();
        let c = splitting::fit_constants(&a).unwrap();
        prop_assert!(splitting::check_axioms(&a, &c).passed());
    }
}
