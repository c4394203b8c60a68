//! Exact counts of the named constructions, bound expressions, and the
//! product measure `mu_p`.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::constructions::FamilySpec;
use crate::error::{Error, Result};
use crate::scalar::{powi, Scalar};
use crate::setcore::SetFamily;

/// `C(n, k)` for nonnegative arguments.
pub fn choose(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `C(a, b)` with the conventions `C(a, b) = 0` for `b < 0` or `0 <= a < b`.
/// Always nonnegative; negative upper index yields zero here, see
/// [`binomial`] for the signed extension.
pub fn choose_i(a: i64, b: i64) -> BigUint {
    if a < 0 || b < 0 || b > a {
        BigUint::zero()
    } else {
        choose(a as u64, b as u64)
    }
}

/// Generalized binomial coefficient, signed. For `a < 0`,
/// `C(a, b) = (-1)^b C(b - a - 1, b)`.
pub fn binomial(a: i64, b: i64) -> BigInt {
    if b < 0 {
        return BigInt::zero();
    }
    if a >= 0 {
        return BigInt::from(choose_i(a, b));
    }
    let mag = BigInt::from(choose((b - a - 1) as u64, b as u64));
    if b % 2 == 0 {
        mag
    } else {
        -mag
    }
}

fn sum_window(lo: i64, hi: i64, mut term: impl FnMut(i64) -> BigUint) -> BigUint {
    let mut acc = BigUint::zero();
    let mut j = lo.max(0);
    while j <= hi {
        acc += term(j);
        j += 1;
    }
    acc
}

/// `|A(n,k,d)| = C(n-d-1, k-d-1) + (d+1) C(n-d-1, k-d)`.
pub fn count_a(n: usize, k: usize, d: usize) -> BigUint {
    let (n, k, d) = (n as i64, k as i64, d as i64);
    choose_i(n - d - 1, k - d - 1) + BigUint::from((d + 1) as u64) * choose_i(n - d - 1, k - d)
}

/// `|H(n,k,d)| = C(n-d+1, k-d+1) - C(n-k-1, k-d+1) + (d-1)`.
pub fn count_h(n: usize, k: usize, d: usize) -> BigUint {
    let (n, k, d) = (n as i64, k as i64, d as i64);
    choose_i(n - d + 1, k - d + 1) - choose_i(n - k - 1, k - d + 1) + BigUint::from((d - 1) as u64)
}

/// `|M(n,k,d,r)|`: sets through 1 meeting the window `[2, 2+(d-1)r]` in at
/// least `1+(d-2)r` points, plus sets avoiding 1 that contain the window.
pub fn count_m(n: usize, k: usize, d: usize, r: usize) -> BigUint {
    let (n, k, d, r) = (n as i64, k as i64, d as i64, r as i64);
    let w = (d - 1) * r + 1;
    let rest = n - 1 - w;
    let need = 1 + (d - 2) * r;
    let first = sum_window(need, w.min(k - 1), |j| {
        choose_i(w, j) * choose_i(rest, k - 1 - j)
    });
    first + choose_i(rest, k - w)
}

/// Threshold `j0 = floor((d-r-1)(k-r+1)/(d-r)) + 1` of the `T` family.
pub fn t_threshold(k: usize, d: usize, r: usize) -> usize {
    (d - r - 1) * (k - r + 1) / (d - r) + 1
}

/// `|T(n,k,d,r)|`: sets containing `[r]` with at least `j0` points of
/// `[r+1, k+1]`, plus the `r` sets `[k+1] \ {i}`.
pub fn count_t(n: usize, k: usize, d: usize, r: usize) -> BigUint {
    let j0 = t_threshold(k, d, r) as i64;
    let (n, k, r) = (n as i64, k as i64, r as i64);
    let window = k - r + 1;
    let outside = n - k - 1;
    let first = sum_window(j0, window.min(k - r), |j| {
        choose_i(window, j) * choose_i(outside, k - r - j)
    });
    first + BigUint::from(r as u64)
}

/// `|Star(n,k,t)| = C(n-t, k-t)`.
pub fn count_star(n: usize, k: usize, t: usize) -> BigUint {
    choose_i(n as i64 - t as i64, k as i64 - t as i64)
}

/// k-sets meeting `[t+2i]` in at least `t+i` points.
pub fn count_frankl_uniform(n: usize, k: usize, t: usize, i: usize) -> BigUint {
    let (n, k, t, i) = (n as i64, k as i64, t as i64, i as i64);
    let w = t + 2 * i;
    sum_window(t + i, w.min(k), |j| choose_i(w, j) * choose_i(n - w, k - j))
}

/// Subsets of `[n]` meeting `[t+di]` in at least `t+(d-1)i` points.
pub fn count_frankl_nonuniform(n: usize, d: usize, t: usize, i: usize) -> BigUint {
    let w = (t + d * i) as i64;
    let free = BigUint::one() << (n - (t + d * i));
    sum_window((t + (d - 1) * i) as i64, w, |j| choose_i(w, j)) * free
}

/// Exact size of a named construction, for any `n`.
pub fn count_construction(spec: &FamilySpec) -> Result<BigUint> {
    spec.validate()?;
    Ok(match *spec {
        FamilySpec::A { n, k, d } => count_a(n, k, d),
        FamilySpec::H { n, k, d } => count_h(n, k, d),
        FamilySpec::M { n, k, d, r } => count_m(n, k, d, r),
        FamilySpec::T { n, k, d, r } => count_t(n, k, d, r),
        FamilySpec::Star { n, k, t } => count_star(n, k, t),
        FamilySpec::FranklUniform { n, k, t, i } => count_frankl_uniform(n, k, t, i),
        FamilySpec::FranklNonuniform { n, d, t, i } => count_frankl_nonuniform(n, d, t, i),
    })
}

/// Named bound expressions. Evaluation never checks the range in which the
/// bound is a theorem; that lives in [`crate::thresholds`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Bound {
    /// Hilton–Milner: `C(n-1,k-1) - C(n-k-1,k-1) + 1`.
    HiltonMilner { n: usize, k: usize },
    /// t-intersecting EKR: `C(n-t, k-t)`.
    Ekr { n: usize, k: usize, t: usize },
    /// Frankl's bound: `C(n-1, k-t)`.
    FranklUb { n: usize, k: usize, t: usize },
    /// Missing-intersection bound: `C(n, k-l-1)`.
    MissingIntersection { n: usize, k: usize, l: usize },
}

impl Bound {
    /// Builds a bound from its id (`HM`, `EKR`, `FranklUB`, `MI`) and
    /// positional parameters.
    pub fn from_id(id: &str, params: &[usize]) -> Result<Self> {
        let want = |m: usize| -> Result<()> {
            if params.len() == m {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "bound {id} takes {m} parameters, got {}",
                    params.len()
                )))
            }
        };
        match id.to_ascii_lowercase().as_str() {
            "hm" | "hilton-milner" => {
                want(2)?;
                Ok(Bound::HiltonMilner {
                    n: params[0],
                    k: params[1],
                })
            }
            "ekr" => {
                want(3)?;
                Ok(Bound::Ekr {
                    n: params[0],
                    k: params[1],
                    t: params[2],
                })
            }
            "frankl" | "franklub" => {
                want(3)?;
                Ok(Bound::FranklUb {
                    n: params[0],
                    k: params[1],
                    t: params[2],
                })
            }
            "mi" | "missing" => {
                want(3)?;
                Ok(Bound::MissingIntersection {
                    n: params[0],
                    k: params[1],
                    l: params[2],
                })
            }
            _ => Err(Error::UnknownBound(id.to_string())),
        }
    }

    pub fn value(&self) -> BigUint {
        let c = |a: usize, b: i64| choose_i(a as i64, b);
        match *self {
            Bound::HiltonMilner { n, k } => {
                let (ni, ki) = (n as i64, k as i64);
                choose_i(ni - 1, ki - 1) + BigUint::one() - choose_i(ni - ki - 1, ki - 1)
            }
            Bound::Ekr { n, k, t } => choose_i(n as i64 - t as i64, k as i64 - t as i64),
            Bound::FranklUb { n, k, t } => c(n - 1, k as i64 - t as i64),
            Bound::MissingIntersection { n, k, l } => c(n, k as i64 - l as i64 - 1),
        }
    }
}

/// Convenience wrapper over [`Bound::from_id`] and [`Bound::value`].
pub fn bound_value(id: &str, params: &[usize]) -> Result<BigUint> {
    Ok(Bound::from_id(id, params)?.value())
}

/// `mu_p(F) = sum over members of p^|F| (1-p)^(n-|F|)`.
pub fn mu_p<T: Scalar>(family: &SetFamily, p: &T) -> Result<T> {
    if *p <= T::zero() || *p >= T::one() {
        return Err(Error::InvalidParameter(format!(
            "p = {p:?} outside (0, 1)"
        )));
    }
    let n = family.n();
    let q = T::one() - p.clone();
    // one weight per cardinality
    let weights: Vec<T> = (0..=n)
        .map(|s| powi(p, s as u32) * powi(&q, (n - s) as u32))
        .collect();
    let mut per_size = vec![0u64; n + 1];
    for m in family {
        per_size[m.len()] += 1;
    }
    let mut acc = T::zero();
    for (s, &c) in per_size.iter().enumerate() {
        if c > 0 {
            acc = acc + weights[s].clone() * T::from_int(c as i64);
        }
    }
    Ok(acc)
}

/// Sizes of the four reference families at `(n, k, d)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtremalReport {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    #[serde(with = "decimal")]
    pub a: BigUint,
    #[serde(with = "decimal")]
    pub h: BigUint,
    #[serde(with = "decimal")]
    pub m: BigUint,
    pub m_r: usize,
    #[serde(with = "decimal")]
    pub t: BigUint,
    pub t_r: usize,
}

impl ExtremalReport {
    /// The largest of the four counts.
    pub fn max(&self) -> BigUint {
        [&self.a, &self.h, &self.m, &self.t]
            .into_iter()
            .max()
            .cloned()
            .unwrap_or_default()
    }

    pub fn m_beats_a_and_h(&self) -> bool {
        self.m > self.a && self.m > self.h
    }
}

impl fmt::Display for ExtremalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} k={} d={}: |A|={} |H|={} m={} (r={}) t={} (r={})",
            self.n, self.k, self.d, self.a, self.h, self.m, self.m_r, self.t, self.t_r
        )
    }
}

/// Largest `|M(n,k,d,r)|` over `1 <= r <= (k-1)/(d-1)`; ties go to the smaller `r`.
pub fn m_max(n: usize, k: usize, d: usize) -> Result<(usize, BigUint)> {
    let rmax = (k - 1) / (d - 1);
    let mut best: Option<(usize, BigUint)> = None;
    for r in 1..=rmax {
        let c = count_construction(&FamilySpec::M { n, k, d, r })?;
        if best.as_ref().is_none_or(|(_, b)| c > *b) {
            best = Some((r, c));
        }
    }
    best.ok_or_else(|| Error::InvalidSpec("empty r range for M".into()))
}

/// Largest `|T(n,k,d,r)|` over `0 <= r <= d-1`; ties go to the smaller `r`.
pub fn t_max(n: usize, k: usize, d: usize) -> Result<(usize, BigUint)> {
    let mut best: Option<(usize, BigUint)> = None;
    for r in 0..d {
        let c = count_construction(&FamilySpec::T { n, k, d, r })?;
        if best.as_ref().is_none_or(|(_, b)| c > *b) {
            best = Some((r, c));
        }
    }
    best.ok_or_else(|| Error::InvalidSpec("empty r range for T".into()))
}

pub fn extremal_report(n: usize, k: usize, d: usize) -> Result<ExtremalReport> {
    if !(2 <= d && d < k && k < n) {
        return Err(Error::InvalidParameter(format!(
            "need 2 <= d < k < n, got n={n} k={k} d={d}"
        )));
    }
    let a = count_construction(&FamilySpec::A { n, k, d })?;
    let h = count_construction(&FamilySpec::H { n, k, d })?;
    let (m_r, m) = m_max(n, k, d)?;
    let (t_r, t) = t_max(n, k, d)?;
    Ok(ExtremalReport {
        n,
        k,
        d,
        a,
        h,
        m,
        m_r,
        t,
        t_r,
    })
}

/// Serializes big integers as decimal strings.
pub mod decimal {
    use num_bigint::BigUint;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }
}

/// Absolute value and sign of a signed big integer, for display.
pub fn signed_parts(v: &BigInt) -> (bool, BigUint) {
    (v.is_negative(), v.magnitude().clone())
}
