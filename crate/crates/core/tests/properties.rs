mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use qigraph::cover::{find_common_cover, verify_covering, TypedGraph};
use qigraph::fixtures::{fixture_catalog, random_graph, random_h_graph, random_lift, rng, GraphOptions, LabelMode};
use qigraph::graph::{is_balanced, is_integral, validate};
use qigraph::hgraph::{h_canonical_moves, minimize_h, validate_h, verify_h_morphism};
use qigraph::linear::{format_rational, integer_index, lattice_intersect, lattice_sum, parse_rational, ratio};
use qigraph::minimize::{bisimilar, minimize};
use qigraph::morphism::verify_morphism;

use common::*;

fn catalog() -> Arc<qigraph::catalog::OrbifoldCatalog> {
    Arc::new(fixture_catalog())
}

fn theta(k: usize) -> TypedGraph {
    let mut g = TypedGraph::default();
    g.add_vertex("a", "A");
    g.add_vertex("b", "B");
    for i in 0..k {
        g.add_edge(format!("x{i}"), "a", "b", "x");
    }
    g
}

fn hnf() -> impl Strategy<Value = Hnf> {
    (1i64..=12).prop_flat_map(|n| {
        let all = sublattices_of_index(n);
        (0..all.len()).prop_map(move |i| all[i])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rational_text_round_trips(n in -10_000i64..10_000, d in 1i64..500) {
        let r = ratio(n, d);
        let text = format_rational(&r);
        prop_assert_eq!(parse_rational(&text).unwrap(), r);
    }

    #[test]
    fn intersection_matches_enumeration(x in hnf(), y in hnf()) {
        let got = lattice_intersect(&x.lattice(), &y.lattice());
        let want = intersection_by_enumeration(&x, &y);
        prop_assert!(same_lattice(&got, &want));
        let index = integer_index(&got, &x.lattice()).expect("sublattice");
        prop_assert_eq!(index, (want.index() / x.index()).into());
        let sum = lattice_sum(&x.lattice(), &y.lattice());
        prop_assert!(x.lattice().is_sublattice_of(&sum) && y.lattice().is_sublattice_of(&sum));
    }

    #[test]
    fn balance_agrees_with_cycle_products(seed in any::<u64>()) {
        let g = random_graph(&mut rng(seed), &catalog(), &GraphOptions::new(4, 6, LabelMode::Random));
        prop_assert!(validate(&g).is_empty());
        prop_assert_eq!(is_balanced(&g).unwrap(), balanced_oracle(&g));
    }

    #[test]
    fn integral_graphs_are_balanced(seed in any::<u64>()) {
        let g = random_graph(&mut rng(seed), &catalog(), &GraphOptions::new(4, 6, LabelMode::Integral));
        prop_assert!(is_integral(&g).unwrap());
        prop_assert!(is_balanced(&g).unwrap());
    }

    #[test]
    fn minimize_is_idempotent_and_lift_invariant(seed in any::<u64>(), copies in 1usize..=3) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, &catalog(), &GraphOptions::new(3, 5, LabelMode::Random));
        let (q, m) = minimize(&g).unwrap();
        prop_assert!(verify_morphism(&g, &q, &m).is_empty());
        prop_assert!(nah_isomorphic(&minimize(&q).unwrap().0, &q));
        let (lift, _) = random_lift(&mut r, &g, copies);
        prop_assert!(nah_isomorphic(&minimize(&lift).unwrap().0, &q));
        prop_assert!(bisimilar(&lift, &g).unwrap());
    }

    #[test]
    fn moves_preserve_the_canonical_form(seed in any::<u64>(), steps in 1usize..=15) {
        let mut r = rng(seed);
        let h = random_h_graph(&mut r, &catalog(), &GraphOptions::new(3, 5, LabelMode::Random));
        let canon = h_canonical_moves(&h).unwrap();
        let mut g = h.clone();
        for _ in 0..steps {
            random_move(&mut r, &mut g);
        }
        prop_assert!(validate_h(&g).is_empty());
        prop_assert_eq!(h_canonical_moves(&g).unwrap(), canon);
    }

    #[test]
    fn minimize_h_verifies(seed in any::<u64>()) {
        let h = random_h_graph(&mut rng(seed), &catalog(), &GraphOptions::new(3, 5, LabelMode::Random));
        let (q, m) = minimize_h(&h).unwrap();
        prop_assert!(validate_h(&q).is_empty());
        prop_assert!(verify_h_morphism(&h, &q, &m).is_empty());
    }

    #[test]
    fn voltage_covers_have_a_common_cover(k in 2usize..=3, n1 in 1usize..=4, n2 in 1usize..=4, v in prop::collection::vec(0usize..4, 2)) {
        let base = theta(k);
        let volts = |n: usize, shift: usize| -> BTreeMap<String, usize> {
            base.edges.keys().enumerate().map(|(i, e)| (e.clone(), (i * (1 + shift)) % n)).collect()
        };
        let (g1, _) = voltage_cover(&base, n1, &volts(n1, v[0]));
        let (g2, _) = voltage_cover(&base, n2, &volts(n2, v[1]));
        prop_assume!(g1.is_connected() && g2.is_connected());
        let bound = n1 * n2 * base.types.len();
        let c = find_common_cover(&g1, &g2, bound).unwrap().expect("the fibre product component fits the bound");
        prop_assert!(verify_covering(&c.cover, &g1, &c.first));
        prop_assert!(verify_covering(&c.cover, &g2, &c.second));
        prop_assert!(c.cover.types.len() <= bound);
        prop_assert_eq!(fibre_sizes(&c.first, &g1).len(), 1);
    }

    #[test]
    fn a_cover_and_its_base_meet_at_the_cover(k in 2usize..=3, n in 1usize..=5, s in 1usize..5) {
        let base = theta(k);
        let volts: BTreeMap<String, usize> = base.edges.keys().enumerate().map(|(i, e)| (e.clone(), (i * s) % n)).collect();
        let (g, _) = voltage_cover(&base, n, &volts);
        prop_assume!(g.is_connected());
        let c = find_common_cover(&base, &g, 2 * n * base.types.len()).unwrap().expect("g covers base");
        prop_assert_eq!(c.cover.types.len(), g.types.len());
    }
}
