//! Certificates for k-uniform families that avoid one intersection size.
//!
//! The polynomial `f(x) = C(x-l-1, k-l-1)` vanishes on `[l+1, k-1]`, equals
//! 1 at `k`, and is divisible by `p` on `[0, l-1]` whenever `p^a | k-l` but
//! `p^a` does not divide `l!`. A certificate records that prime and the
//! residue table.

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::counting::{binomial, choose};
use crate::error::{Error, Result};
use crate::setcore::{ElementSet, SetFamily};

/// `f(i) = C(i-l-1, k-l-1)` as a signed generalized binomial.
pub fn f_value(i: usize, k: usize, l: usize) -> BigInt {
    binomial(i as i64 - l as i64 - 1, k as i64 - l as i64 - 1)
}

/// `f(i)` for `i < l` through `(-1)^(k-l+1) (k-i-1)...(k-l) / (l-i)!`.
pub fn f_value_product(i: usize, k: usize, l: usize) -> BigInt {
    assert!(i < l && l < k, "product form needs i < l < k");
    let mut num = BigInt::one();
    for v in (k - l)..=(k - i - 1) {
        num *= BigInt::from(v);
    }
    let mut den = BigInt::one();
    for v in 1..=(l - i) {
        den *= BigInt::from(v);
    }
    let (q, r) = num.div_rem(&den);
    assert!(r.is_zero(), "binomial quotient is exact");
    if (k - l + 1).is_multiple_of(2) {
        q
    } else {
        -q
    }
}

/// Prime factorization by trial division.
pub fn factorize(mut m: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            let mut e = 0;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        out.push((m, 1));
    }
    out
}

/// Exponent of `p` in `l!` by Legendre's formula.
pub fn legendre(l: u64, p: u64) -> u32 {
    let mut e = 0;
    let mut q = l;
    while q > 0 {
        q /= p;
        e += q as u32;
    }
    e
}

/// A prime power dividing `m` that does not divide `l!`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PrimeWitness {
    pub p: u64,
    pub a: u32,
}

/// Whether `m | l!`; when not, the smallest prime `p` with
/// `v_p(m) > v_p(l!)` and `a = v_p(m)`.
pub fn divides_factorial(m: u64, l: u64) -> Result<(bool, Option<PrimeWitness>)> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    for (p, e) in factorize(m) {
        if legendre(l, p) < e {
            let w = PrimeWitness { p, a: e };
            // p^a | m and p^a does not divide l!
            let pa = BigUint::from(p).pow(e);
            let fact: BigUint = (1..=l).map(BigUint::from).product();
            assert!((BigUint::from(m) % &pa).is_zero());
            assert!(!(fact % &pa).is_zero());
            return Ok((false, Some(w)));
        }
    }
    Ok((true, None))
}

fn residue(v: &BigInt, p: u64) -> u64 {
    let r = v.mod_floor(&BigInt::from(p));
    r.try_into().expect("residue below p")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KMWCertificate {
    pub k: usize,
    pub l: usize,
    pub p: u64,
    pub a: u32,
    /// `f(i) mod p` for `i = 0..=k`.
    pub residues: Vec<u64>,
    pub degree: usize,
}

impl KMWCertificate {
    /// Replays every residue condition using the product formula below `l`
    /// and the vanishing range above it.
    pub fn verify(&self) -> bool {
        let (k, l, p) = (self.k, self.l, self.p);
        if self.residues.len() != k + 1 || self.degree + l + 1 != k {
            return false;
        }
        for i in 0..k {
            if i == l {
                continue;
            }
            let v = if i < l {
                f_value_product(i, k, l)
            } else {
                f_value(i, k, l)
            };
            if i > l && !v.is_zero() {
                return false;
            }
            if residue(&v, p) != 0 || self.residues[i] != 0 {
                return false;
            }
        }
        let top = f_value(k, k, l);
        top.is_one() && self.residues[k] == residue(&top, p) && self.residues[k] != 0
    }

    /// The implied bound `C(n, k-l-1)`.
    pub fn bound(&self, n: usize) -> BigUint {
        choose(n as u64, self.degree as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum KmwOutcome {
    Certified(KMWCertificate),
    /// `k - l` divides `l!`.
    ConditionFails { k: usize, l: usize, quotient: String },
}

impl KmwOutcome {
    pub fn certificate(&self) -> Option<&KMWCertificate> {
        match self {
            KmwOutcome::Certified(c) => Some(c),
            KmwOutcome::ConditionFails { .. } => None,
        }
    }
}

pub fn kmw_certificate(k: usize, l: usize) -> Result<KmwOutcome> {
    if 2 * l >= k {
        return Err(Error::InvalidParameter(format!(
            "need 2l < k, got k={k} l={l}"
        )));
    }
    let m = (k - l) as u64;
    let (divides, witness) = divides_factorial(m, l as u64)?;
    let Some(PrimeWitness { p, a }) = witness else {
        debug_assert!(divides);
        let fact: BigUint = (1..=l as u64).map(BigUint::from).product();
        return Ok(KmwOutcome::ConditionFails {
            k,
            l,
            quotient: (fact / m).to_string(),
        });
    };
    let residues = (0..=k).map(|i| residue(&f_value(i, k, l), p)).collect();
    let cert = KMWCertificate {
        k,
        l,
        p,
        a,
        residues,
        degree: k - l - 1,
    };
    if !cert.verify() {
        return Err(Error::InvalidParameter(format!(
            "certificate for k={k} l={l} failed to verify"
        )));
    }
    Ok(KmwOutcome::Certified(cert))
}

/// Relative widening applied to the floating-point logarithm ratio.
const LOG_WIDEN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallLGuarantee {
    pub k: usize,
    /// Outward-rounded enclosure of `ln k / ln ln k`.
    pub ratio_lo: f64,
    pub ratio_hi: f64,
    /// Largest `l` certainly below the ratio.
    pub max_l: usize,
    pub checked: Vec<usize>,
    /// Values of `l` in range without a certificate.
    pub failures: Vec<usize>,
}

impl SmallLGuarantee {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks certificates for every `l < ln k / ln ln k` with `2l < k`.
pub fn small_l_guarantee(k: usize) -> Result<SmallLGuarantee> {
    if k < 16 {
        return Err(Error::InvalidParameter(format!(
            "guard: bound undefined for k = {k} < 16"
        )));
    }
    let r = (k as f64).ln() / (k as f64).ln().ln();
    let ratio_lo = r * (1.0 - LOG_WIDEN) - f64::MIN_POSITIVE;
    let ratio_hi = r * (1.0 + LOG_WIDEN) + f64::MIN_POSITIVE;
    // l < ratio must hold for the whole enclosure
    let max_l = (ratio_lo.ceil() as usize).saturating_sub(1);
    let mut checked = Vec::new();
    let mut failures = Vec::new();
    for l in 0..=max_l {
        if 2 * l >= k {
            break;
        }
        checked.push(l);
        if kmw_certificate(k, l)?.certificate().is_none() {
            failures.push(l);
        }
    }
    Ok(SmallLGuarantee {
        k,
        ratio_lo,
        ratio_hi,
        max_l,
        checked,
        failures,
    })
}

/// Allowed pairwise intersection sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AllowedSizes {
    Explicit(BTreeSet<usize>),
    /// Every size except this one.
    NotEqual(usize),
    /// Sizes not congruent to `k` modulo `q`.
    NotCongruent { k: usize, q: usize },
}

impl AllowedSizes {
    pub fn allows(&self, size: usize) -> bool {
        match self {
            AllowedSizes::Explicit(set) => set.contains(&size),
            AllowedSizes::NotEqual(l) => size != *l,
            AllowedSizes::NotCongruent { k, q } => size % q != k % q,
        }
    }

    /// The allowed sizes within `[0, k-1]`.
    pub fn materialize(&self, k: usize) -> BTreeSet<usize> {
        (0..k).filter(|&s| self.allows(s)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LSystemCheck {
    pub holds: bool,
    pub witness: Option<(ElementSet, ElementSet)>,
    pub intersection_size: Option<usize>,
}

/// Whether every two distinct members meet in an allowed number of points.
pub fn verify_l_system(family: &SetFamily, allowed: &AllowedSizes) -> Result<LSystemCheck> {
    let ms = family.members();
    if family.k().is_none() {
        if let Some(first) = ms.first() {
            if ms.iter().any(|m| m.len() != first.len()) {
                return Err(Error::InvalidParameter("family is not uniform".into()));
            }
        }
    }
    if let AllowedSizes::NotCongruent { q: 0, .. } = allowed {
        return Err(Error::InvalidParameter("modulus must be positive".into()));
    }
    for (i, a) in ms.iter().enumerate() {
        for b in &ms[i + 1..] {
            let s = a.intersection(b).len();
            if !allowed.allows(s) {
                return Ok(LSystemCheck {
                    holds: false,
                    witness: Some((*a, *b)),
                    intersection_size: Some(s),
                });
            }
        }
    }
    Ok(LSystemCheck {
        holds: true,
        witness: None,
        intersection_size: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{build, FamilySpec};

    #[test]
    fn polynomial_values() {
        assert_eq!(f_value(10, 10, 3), BigInt::one());
        assert_eq!(f_value(5, 10, 3), BigInt::zero());
        assert_eq!(f_value(0, 10, 3), BigInt::from(84));
        assert_eq!(f_value(0, 10, 3), binomial(-4, 6));
        for i in 0..3 {
            assert_eq!(f_value(i, 10, 3), f_value_product(i, 10, 3));
        }
    }

    #[test]
    fn factorial_divisibility() {
        assert_eq!(
            divides_factorial(7, 3).unwrap(),
            (false, Some(PrimeWitness { p: 7, a: 1 }))
        );
        assert_eq!(divides_factorial(2, 3).unwrap(), (true, None));
        assert_eq!(divides_factorial(8, 4).unwrap(), (true, None));
        assert!(divides_factorial(0, 3).is_err());
    }

    #[test]
    fn certificate_examples() {
        let c = kmw_certificate(10, 3).unwrap();
        let c = c.certificate().unwrap();
        assert_eq!(c.p, 7);
        assert_eq!(c.residues[10], 1);
        assert!(c.residues[..3].iter().all(|&r| r == 0));
        assert_eq!(c.bound(20), choose(20, 6));
        assert!(kmw_certificate(5, 3).is_err());
        assert!(matches!(
            kmw_certificate(9, 3).unwrap(),
            KmwOutcome::ConditionFails { .. }
        ));
    }

    #[test]
    fn small_l() {
        let g = small_l_guarantee(100).unwrap();
        assert_eq!(g.max_l, 3);
        assert!(g.holds());
        assert!(small_l_guarantee(16).unwrap().holds());
        assert!(small_l_guarantee(10).is_err());
    }

    #[test]
    fn l_systems() {
        let star = build(&FamilySpec::Star { n: 7, k: 4, t: 2 }).unwrap();
        let l23 = AllowedSizes::Explicit([2, 3].into_iter().collect());
        assert!(verify_l_system(&star, &l23).unwrap().holds);
        let one = SetFamily::new(6, Some(4), vec![ElementSet::from_elements(6, &[1, 2, 3, 4]).unwrap()]).unwrap();
        assert!(verify_l_system(&one, &AllowedSizes::NotEqual(0)).unwrap().holds);
        let pair = SetFamily::from_unsorted(
            6,
            Some(4),
            vec![
                ElementSet::from_elements(6, &[1, 2, 3, 4]).unwrap(),
                ElementSet::from_elements(6, &[3, 4, 5, 6]).unwrap(),
            ],
        )
        .unwrap()
        .0;
        let r = verify_l_system(&pair, &AllowedSizes::Explicit([0, 1].into_iter().collect())).unwrap();
        assert!(!r.holds);
        assert_eq!(r.intersection_size, Some(2));
    }

    #[test]
    fn congruence_contains_l() {
        for k in 3..40usize {
            for l in 0..k {
                if 2 * l >= k {
                    break;
                }
                let not_cong = AllowedSizes::NotCongruent { k, q: k - l };
                assert!(!not_cong.allows(l));
            }
        }
    }
}
