use ekrw_core::constructions::build;
use ekrw_core::counting::{choose, mu_p};
use ekrw_core::setcore::{enumerate_all_subsets, enumerate_k_subsets, intersect_all};
use ekrw_core::thresholds::trivially_intersecting;
use ekrw_core::verify::{are_isomorphic, canonical_form, is_d_wise_t_intersecting, is_nontrivial};
use ekrw_core::{ElementSet, FamilySpec, Permutation, Rational, SetFamily};
use num_bigint::BigInt;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_family(n: usize, k: usize, max_len: usize, seed: u64) -> SetFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<ElementSet> = enumerate_k_subsets(n, k).unwrap().collect();
    let len = rng.gen_range(0..=max_len.min(all.len()));
    let members = all.choose_multiple(&mut rng, len).copied().collect();
    SetFamily::from_unsorted(n, Some(k), members).unwrap().0
}

/// Every subset of at most `d` members (all of them when fewer), no pruning.
fn naive_d_wise(fam: &SetFamily, d: usize, t: usize) -> bool {
    let ms = fam.members();
    fn rec(ms: &[ElementSet], start: usize, chosen: &mut Vec<ElementSet>, d: usize, t: usize) -> bool {
        if !chosen.is_empty() && intersect_all(chosen).unwrap().len() < t {
            return false;
        }
        if chosen.len() == d {
            return true;
        }
        for i in start..ms.len() {
            chosen.push(ms[i]);
            let ok = rec(ms, i + 1, chosen, d, t);
            chosen.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    rec(ms, 0, &mut Vec::new(), d, t)
}

fn random_perm(n: usize, rng: &mut ChaCha8Rng) -> Permutation {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    Permutation::from_images(v).unwrap()
}

fn all_perms(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in all_perms(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn brute_isomorphic(a: &SetFamily, b: &SetFamily) -> bool {
    a.len() == b.len()
        && all_perms(a.n())
            .into_iter()
            .any(|p| a.permute(&Permutation::from_images(p).unwrap()).unwrap() == *b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn checker_matches_naive(n in 3usize..=8, k in 1usize..=7, d in 2usize..=4, t in 1usize..=3, seed: u64) {
        prop_assume!(k < n);
        let fam = random_family(n, k, 25, seed);
        let c = is_d_wise_t_intersecting(&fam, d, t);
        prop_assert_eq!(c.holds, naive_d_wise(&fam, d, t));
        if let Some(w) = c.witness {
            prop_assert!(w.replays());
            prop_assert!(w.sets.len() <= d);
        }
    }

    #[test]
    fn pairwise_consequence(n in 4usize..=8, k in 2usize..=7, d in 2usize..=4, t in 1usize..=2, seed: u64) {
        prop_assume!(k < n);
        let fam = random_family(n, k, 12, seed);
        prop_assume!(!fam.is_empty());
        if is_d_wise_t_intersecting(&fam, d, t).holds && is_nontrivial(&fam, t).unwrap() {
            prop_assert!(is_d_wise_t_intersecting(&fam, 2, t + d - 2).holds);
        }
    }

    #[test]
    fn small_ground_sets_force_intersection(seed: u64, which in 0usize..2) {
        let (n, k, d) = [(5, 4, 3), (7, 6, 4)][which];
        prop_assert!(trivially_intersecting(n, k, d));
        let fam = random_family(n, k, 40, seed);
        prop_assert!(is_d_wise_t_intersecting(&fam, d, 1).holds);
    }

    #[test]
    fn isomorphism_matches_brute_force(n in 3usize..=7, k in 1usize..=4, seed: u64, relabel: bool) {
        prop_assume!(k < n);
        let a = random_family(n, k, 8, seed);
        let b = if relabel {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            a.permute(&random_perm(n, &mut rng)).unwrap()
        } else {
            random_family(n, k, 8, seed.wrapping_add(1))
        };
        let got = are_isomorphic(&a, &b).unwrap();
        prop_assert_eq!(got.is_some(), brute_isomorphic(&a, &b));
        if let Some(pi) = got {
            prop_assert_eq!(a.permute(&pi).unwrap(), b);
        }
    }

    #[test]
    fn pascal(a in 1i64..=200, b in 1i64..=200) {
        let (a, b) = (a as u64, b as u64);
        prop_assert_eq!(choose(a, b), choose(a - 1, b - 1) + choose(a - 1, b));
    }

    #[test]
    fn measure_is_monotone(n in 2usize..=8, k in 1usize..=7, seed: u64, num in 1i64..20) {
        prop_assume!(k < n);
        let p = Rational::new(BigInt::from(num), BigInt::from(20));
        let big = random_family(n, k, 30, seed);
        let small = SetFamily::new(n, Some(k), big.members().iter().copied().step_by(2).collect()).unwrap();
        prop_assert!(mu_p(&small, &p).unwrap() <= mu_p(&big, &p).unwrap());
    }
}

#[test]
fn relabeled_fixtures_are_isomorphic() {
    let fixtures = [
        FamilySpec::H { n: 9, k: 5, d: 3 },
        FamilySpec::M { n: 10, k: 5, d: 3, r: 2 },
        FamilySpec::A { n: 8, k: 4, d: 2 },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for spec in fixtures {
        let f = build(&spec).unwrap();
        let canon = canonical_form(&f).unwrap();
        for _ in 0..100 {
            let g = f.permute(&random_perm(f.n(), &mut rng)).unwrap();
            assert_eq!(canonical_form(&g).unwrap(), canon);
            let pi = are_isomorphic(&f, &g).unwrap().expect("relabeled copy");
            assert_eq!(f.permute(&pi).unwrap(), g);
        }
    }
}

#[test]
fn power_set_has_measure_one() {
    for n in 1..=8 {
        let fam = SetFamily::new(n, None, {
            let mut v: Vec<_> = enumerate_all_subsets(n).unwrap().collect();
            v.sort();
            v
        })
        .unwrap();
        let p = Rational::new(BigInt::from(2), BigInt::from(7));
        assert_eq!(mu_p(&fam, &p).unwrap(), Rational::from_integer(1.into()));
    }
}
