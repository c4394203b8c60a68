use ekrw_core::forbidden::{divides_factorial, f_value, kmw_certificate, small_l_guarantee};
use ekrw_core::graphfam::{
    count_kst_family, count_multipartite_family, is_member, verify_intersecting, KstParams,
    LabeledGraph, MultipartiteParams, VerifyMode,
};
use ekrw_core::thresholds::{beta, classify_range, lemma33_holds, scan_n0};
use ekrw_core::Rational;
use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn factorial(l: u64) -> BigUint {
    (1..=l).map(BigUint::from).product()
}

#[test]
fn certificates_exist_exactly_when_k_minus_l_misses_factorial() {
    for l in 0..=6usize {
        for k in (2 * l + 1)..=60 {
            let divides = (factorial(l as u64) % BigUint::from(k - l)).is_zero();
            assert_eq!(divides_factorial((k - l) as u64, l as u64).unwrap().0, divides);
            let out = kmw_certificate(k, l).unwrap();
            assert_eq!(out.certificate().is_some(), !divides, "k={k} l={l}");
            if let Some(c) = out.certificate() {
                assert!(c.verify());
                let p = BigInt::from(c.p);
                for i in 0..k {
                    if i != l {
                        assert!((f_value(i, k, l) % &p).is_zero(), "k={k} l={l} i={i}");
                    }
                }
                assert!(!(f_value(k, k, l) % &p).is_zero());
            }
        }
    }
}

#[test]
fn small_l_guarantee_has_no_exceptions_up_to_5000() {
    for k in 16..=5000 {
        let g = small_l_guarantee(k).unwrap();
        assert!(g.holds(), "k={k}: {:?}", g.failures);
        assert!(g.ratio_lo <= g.ratio_hi);
    }
}

fn graph_from_mask(n: usize, mask: u64) -> LabeledGraph {
    let bits: String = (0..n * (n - 1) / 2)
        .map(|b| if mask >> b & 1 == 1 { '1' } else { '0' })
        .collect();
    LabeledGraph::from_bit_string(n, &bits).unwrap()
}

#[test]
fn member_count_matches_exhaustive_enumeration() {
    for n in 5..=6 {
        let p = KstParams::new(n, 1, 2).unwrap().as_multipartite();
        let pairs = n * (n - 1) / 2;
        let members = (0u64..1 << pairs)
            .filter(|&m| is_member(&p, &graph_from_mask(n, m)))
            .count();
        assert_eq!(
            BigUint::from(members),
            count_kst_family(n, 1, 2).unwrap().count,
            "n={n}"
        );
    }
}

#[test]
fn multipartite_count_matches_structured_enumeration() {
    // enumerate the chosen-vertex rows, multiply by the free edges
    for (n, sizes, t) in [(7usize, vec![1usize, 1], 1usize), (8, vec![1, 1], 2), (8, vec![2], 2)] {
        let p = MultipartiteParams::new(n, &sizes, t).unwrap();
        let chosen = p.chosen();
        let mut slots: Vec<(usize, usize)> = Vec::new();
        for (a, &u) in chosen.iter().enumerate() {
            for &v in &chosen[a + 1..] {
                slots.push((u, v));
            }
            for &r in &p.r_set {
                slots.push((u, r));
            }
        }
        let mut members = 0u64;
        for mask in 0u64..1 << slots.len() {
            let edges: Vec<_> = slots
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            if is_member(&p, &LabeledGraph::from_edges(n, &edges).unwrap()) {
                members += 1;
            }
        }
        let free = n * (n - 1) / 2 - slots.len();
        let expected = BigUint::from(members) << free;
        assert_eq!(count_multipartite_family(n, &sizes, t).unwrap().count, expected, "{sizes:?}");
    }
}

#[test]
fn comparison_flag_tracks_the_condition() {
    for s in 1..=3usize {
        for t in 1..=(1usize << (2 * s)) + 2 {
            let c = count_kst_family(3 * s + t, s, t).unwrap();
            assert_eq!(c.exceeds, c.condition_holds, "s={s} t={t}");
            assert_eq!(c.condition_holds, t + 2 * s + 1 > 1 << (2 * s));
        }
    }
}

#[test]
fn single_part_matches_bipartite() {
    for s in 1..=2usize {
        for t in 1..=6 {
            let n = 3 * s + t + 1;
            assert_eq!(count_kst_family(n, s, t).unwrap(), count_multipartite_family(n, &[s], t).unwrap());
            let a = KstParams::new(n, s, t).unwrap().as_multipartite();
            let b = MultipartiteParams::new(n, &[s], t).unwrap();
            assert_eq!(a, b);
            assert!(verify_intersecting(&b, VerifyMode::ExhaustiveCore, 1).unwrap().holds);
        }
    }
}

#[test]
fn constructions_are_intersecting_for_every_t() {
    for (s, t_max) in [(1usize, 20usize), (2, 30), (3, 10)] {
        for t in 1..=t_max {
            let p = KstParams::new(3 * s + t, s, t).unwrap().as_multipartite();
            assert!(verify_intersecting(&p, VerifyMode::ExhaustiveCore, 1).unwrap().holds, "s={s} t={t}");
        }
    }
    let p = MultipartiteParams::new(9, &[1, 1], 3).unwrap();
    assert!(verify_intersecting(&p, VerifyMode::ExhaustiveCore, 1).unwrap().holds);
    let mode = VerifyMode::Sampled { pairs: 300, seed: 5 };
    assert!(verify_intersecting(&p, mode, 3).unwrap().holds);
}

#[test]
fn lowered_degree_breaks_the_property() {
    for t in 1..=4usize {
        let p = KstParams::new(3 + t, 1, t).unwrap();
        let weak = p.clone().with_min_degree(p.min_degree - 1).as_multipartite();
        let r = verify_intersecting(&weak, VerifyMode::ExhaustiveCore, 1).unwrap();
        assert!(!r.holds, "t={t}");
        let w = r.witness.unwrap();
        assert!(w.common < t);
        let g1 = LabeledGraph::from_bit_string(weak.n, &w.first).unwrap();
        let g2 = LabeledGraph::from_bit_string(weak.n, &w.second).unwrap();
        assert!(is_member(&weak, &g1) && is_member(&weak, &g2));
    }
}

#[test]
fn sampled_mode_is_seed_determined() {
    let p = KstParams::new(8, 1, 2).unwrap().with_min_degree(2).as_multipartite();
    let run = |seed, threads| {
        verify_intersecting(&p, VerifyMode::Sampled { pairs: 500, seed }, threads).unwrap()
    };
    assert_eq!(run(9, 1), run(9, 3));
    assert!(!run(9, 1).holds);
}

#[test]
fn lemma_forms_agree_on_random_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..2000 {
        let t = rng.gen_range(1..=6);
        let d = rng.gen_range(2..=6);
        let k = rng.gen_range(t + d - 2..=t + d + 40);
        let n = rng.gen_range(k + 1..=k + 400);
        lemma33_holds(n, k, t, d).unwrap();
    }
}

#[test]
fn window_ends_are_ordered_when_it_applies() {
    for n in 4..=80 {
        for k in 2..n {
            for t in 1..k {
                let c = classify_range(n, k, 3, t);
                let w = c.get("Thm1.7").unwrap();
                if w.applies {
                    assert!(w.upper_value.as_ref().unwrap() > &w.threshold_value);
                }
            }
        }
    }
}

#[test]
fn scans_match_the_root_bracket() {
    let fifth = Rational::new(BigInt::from(1), BigInt::from(5));
    assert!(scan_n0(&fifth, 2, 3, 10_000).unwrap().n0.is_some());
    let two_fifths = Rational::new(BigInt::from(2), BigInt::from(5));
    let tol = Rational::new(BigInt::from(1), BigInt::from(1_000_000));
    let b = beta(2, 4, &tol).unwrap();
    let scan = scan_n0(&two_fifths, 2, 4, 10_000).unwrap();
    if two_fifths < b.lo {
        assert!(scan.n0.is_some());
    }
    if two_fifths > b.hi {
        assert_eq!(scan.last_failure, Some(10_000));
    }
    let half = Rational::new(BigInt::from(1), BigInt::from(2));
    assert!(scan_n0(&half, 2, 3, 100).is_err());
}
