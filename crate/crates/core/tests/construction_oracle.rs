use ekrw_core::constructions::{all_specs, build};
use ekrw_core::counting::{bound_value, count_construction};
use ekrw_core::verify::{are_isomorphic, check_m_wise_lemma, is_d_wise_t_intersecting, is_nontrivial};
use ekrw_core::FamilySpec;

fn nonuniform_specs(n: usize) -> Vec<FamilySpec> {
    let mut out = Vec::new();
    for d in 2..=4 {
        for t in 1..=3 {
            for i in 0..=n {
                let s = FamilySpec::FranklNonuniform { n, d, t, i };
                if s.validate().is_ok() {
                    out.push(s);
                }
            }
        }
    }
    out
}

fn every_spec(n_max: usize) -> impl Iterator<Item = FamilySpec> {
    (2..=n_max).flat_map(|n| {
        let mut v: Vec<FamilySpec> = (1..n).flat_map(|k| all_specs(n, k)).collect();
        v.extend(nonuniform_specs(n));
        v
    })
}

#[test]
fn closed_forms_match_enumeration() {
    let mut seen = 0;
    for spec in every_spec(12) {
        let built = build(&spec).unwrap();
        assert_eq!(count_construction(&spec).unwrap(), built.len().into(), "{spec}");
        seen += 1;
    }
    assert!(seen > 1000);
}

#[test]
fn families_have_their_stated_properties() {
    for spec in every_spec(12) {
        let fam = build(&spec).unwrap();
        match spec {
            FamilySpec::A { d, .. }
            | FamilySpec::H { d, .. }
            | FamilySpec::M { d, .. }
            | FamilySpec::T { d, .. } => {
                assert!(is_d_wise_t_intersecting(&fam, d, 1).holds, "{spec}");
                assert!(is_nontrivial(&fam, 1).unwrap(), "{spec}");
            }
            FamilySpec::Star { t, k, .. } => {
                for d in 2..=k.min(4) {
                    assert!(is_d_wise_t_intersecting(&fam, d, t).holds, "{spec}");
                }
            }
            FamilySpec::FranklNonuniform { d, t, .. } => {
                assert!(is_d_wise_t_intersecting(&fam, d, t).holds, "{spec}");
            }
            FamilySpec::FranklUniform { .. } => {}
        }
    }
}

#[test]
fn lemma_and_pairwise_consequence_on_named_families() {
    for spec in every_spec(11) {
        let d = match spec {
            FamilySpec::A { d, .. }
            | FamilySpec::H { d, .. }
            | FamilySpec::M { d, .. }
            | FamilySpec::T { d, .. } => d,
            _ => continue,
        };
        let fam = build(&spec).unwrap();
        assert!(check_m_wise_lemma(&fam, d, 1).unwrap().holds, "{spec}");
        assert!(is_d_wise_t_intersecting(&fam, 2, d - 1).holds, "{spec}");
    }
}

#[test]
fn a_is_a_frankl_family() {
    for n in 4..=12 {
        for k in 3..n {
            for d in 2..k {
                let a = FamilySpec::A { n, k, d };
                if a.validate().is_err() {
                    continue;
                }
                let f = FamilySpec::FranklUniform { n, k, t: d - 1, i: 1 };
                assert_eq!(build(&a).unwrap(), build(&f).unwrap(), "{a}");
            }
        }
    }
}

#[test]
fn hilton_milner_family_attains_its_bound() {
    for n in 4..=12 {
        for k in 3..n {
            let h = FamilySpec::H { n, k, d: 2 };
            if h.validate().is_ok() {
                assert_eq!(bound_value("HM", &[n, k]).unwrap(), count_construction(&h).unwrap());
            }
        }
    }
}

fn check_iso(f1: &FamilySpec, f2: &FamilySpec) {
    let a = build(f1).unwrap();
    let b = build(f2).unwrap();
    let pi = are_isomorphic(&a, &b).unwrap().unwrap_or_else(|| panic!("{f1} vs {f2}"));
    assert_eq!(a.permute(&pi).unwrap(), b);
}

#[test]
fn isomorphic_pairs_have_witnesses() {
    for n in 4..=12 {
        for k in 3..n {
            for d in 2..=4.min(k - 1) {
                let t = FamilySpec::T { n, k, d, r: d - 1 };
                let h = FamilySpec::H { n, k, d };
                if t.validate().is_ok() && h.validate().is_ok() {
                    check_iso(&t, &h);
                }
                if (k - 1) % (d - 1) == 0 {
                    let m = FamilySpec::M { n, k, d, r: (k - 1) / (d - 1) };
                    let t1 = FamilySpec::T { n, k, d, r: 1 };
                    if m.validate().is_ok() && t1.validate().is_ok() {
                        check_iso(&m, &t1);
                    }
                }
            }
        }
    }
}
