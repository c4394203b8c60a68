//! Range arithmetic: the density root `beta_{t,d}`, theorem applicability
//! on `(n, k, d, t)`, and the binomial inequality behind the improved range.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::counting::{choose_i, count_a, count_h};
use crate::error::{Error, Result};
use crate::scalar::{midpoint, powi, Scalar};
use crate::Rational;

/// `(1-x)^(t+d-3) - x^(d-2)`.
pub fn beta_poly<T: Scalar>(t: usize, d: usize, x: &T) -> T {
    powi(&(T::one() - x.clone()), (t + d - 3) as u32) - powi(x, (d - 2) as u32)
}

/// Bisection for the root of [`beta_poly`] in `(1/(t+1), 1/2)`, over any
/// scalar. Returns `(lo, hi)` with `f(lo) > 0 > f(hi)`.
pub fn bisect_beta<T: Scalar>(t: usize, d: usize, tol: &T) -> (T, T) {
    let floor = T::from_ratio(1, t as i64 + 1);
    let mut lo = floor.clone();
    let mut hi = T::from_ratio(1, 2);
    while hi.clone() - lo.clone() > *tol || lo <= floor {
        let mid = midpoint(&lo, &hi);
        if mid <= lo || mid >= hi {
            // no representable midpoint left
            break;
        }
        let f = beta_poly(t, d, &mid);
        if f.is_zero() {
            let eps = tol.clone() / T::from_int(4);
            let eps = if eps.clone() * T::from_int(2) < mid.clone() - lo.clone() {
                eps
            } else {
                (mid.clone() - lo.clone()) / T::from_int(2)
            };
            return (mid.clone() - eps.clone(), mid + eps);
        }
        if f.is_positive() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// An exact rational interval containing `beta_{t,d}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BetaBracket {
    pub t: usize,
    pub d: usize,
    #[serde(serialize_with = "ser_ratio")]
    pub lo: Rational,
    #[serde(serialize_with = "ser_ratio")]
    pub hi: Rational,
    #[serde(serialize_with = "ser_ratio")]
    pub tol: Rational,
}

/// Where a density sits relative to a bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Below,
    Indeterminate,
    Above,
}

impl BetaBracket {
    pub fn compare(&self, p: &Rational) -> Side {
        if *p < self.lo {
            Side::Below
        } else if *p > self.hi {
            Side::Above
        } else {
            Side::Indeterminate
        }
    }

    /// Rechecks every bracket invariant.
    pub fn is_valid(&self) -> bool {
        let zero = Rational::zero();
        let half = Rational::from_ratio(1, 2);
        let floor = Rational::from_ratio(1, self.t as i64 + 1);
        let flo = beta_poly(self.t, self.d, &self.lo);
        let fhi = beta_poly(self.t, self.d, &self.hi);
        self.lo > zero
            && self.lo < self.hi
            && self.hi < half
            && &self.hi - &self.lo <= self.tol
            && self.lo > floor
            && flo.is_positive()
            && fhi.is_negative()
    }

    pub fn lo_f64(&self) -> f64 {
        self.lo.to_f64_lossy()
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi.to_f64_lossy()
    }
}

/// Exact bracket of `beta_{t,d}` of width at most `tol`.
pub fn beta(t: usize, d: usize, tol: &Rational) -> Result<BetaBracket> {
    if t < 2 || d < 3 {
        return Err(Error::InvalidParameter(format!(
            "beta needs t >= 2 and d >= 3, got t={t} d={d}"
        )));
    }
    if !tol.is_positive() {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let (lo, hi) = bisect_beta(t, d, tol);
    Ok(BetaBracket {
        t,
        d,
        lo,
        hi,
        tol: tol.clone(),
    })
}

fn ser_ratio<S: Serializer>(v: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn ser_opt_ratio<S: Serializer>(v: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}

fn ser_opt_big<S: Serializer>(v: &Option<BigUint>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(b) => s.serialize_str(&b.to_string()),
        None => s.serialize_none(),
    }
}

/// Applicability of one theorem at a parameter point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Applicability {
    pub applies: bool,
    /// The theorem's threshold on `n` (lower end for windows).
    #[serde(serialize_with = "ser_ratio")]
    pub threshold_value: Rational,
    /// Upper end of a window condition.
    #[serde(serialize_with = "ser_opt_ratio")]
    pub upper_value: Option<Rational>,
    /// The bound's numeric value when the theorem applies.
    #[serde(serialize_with = "ser_opt_big")]
    pub bound: Option<BigUint>,
    /// The bound as an expression.
    pub bound_expr: String,
    /// Why it does not apply, when a hypothesis other than the range fails.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Asymptotic statement whose `n0` is not quantified.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Qualitative {
    /// `below` means `k/n` is provably under the root, so the conclusion
    /// holds for all sufficiently large `n` on that ray.
    pub status: Side,
    #[serde(serialize_with = "ser_ratio")]
    pub density: Rational,
    pub n0: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RangeClassification {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub t: usize,
    pub theorems: BTreeMap<String, Applicability>,
    /// The improved-constant theorem, only for `t >= 2`, `d >= 3`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub improved_ekr: Option<Qualitative>,
}

impl RangeClassification {
    pub fn get(&self, id: &str) -> Option<&Applicability> {
        self.theorems.get(id)
    }

    /// Smallest bound among the theorems that apply.
    pub fn best_bound(&self) -> Option<(&str, &BigUint)> {
        self.theorems
            .iter()
            .filter_map(|(id, a)| a.bound.as_ref().map(|b| (id.as_str(), b)))
            .min_by(|x, y| x.1.cmp(y.1))
    }
}

pub const THEOREM_IDS: [&str; 8] = [
    "Thm1.4",
    "Thm1.5",
    "Thm1.6(i)",
    "Thm1.6(ii)",
    "Thm1.7",
    "Thm1.8",
    "Thm3.1",
    "Thm3.2",
];

fn ri(v: i64) -> Rational {
    Rational::from_int(v)
}

fn max_ah(n: usize, k: usize, d: usize) -> BigUint {
    count_a(n, k, d).max(count_h(n, k, d))
}

/// Per-theorem applicability at `(n, k, d, t)`. Hypothesis failures are
/// reported as "does not apply", never as errors.
pub fn classify_range(n: usize, k: usize, d: usize, t: usize) -> RangeClassification {
    let (ni, ki, di, ti) = (n as i64, k as i64, d as i64, t as i64);
    let nr = ri(ni);
    let mut out = BTreeMap::new();
    let mut put = |id: &str,
                   ok_hyp: std::result::Result<(), String>,
                   threshold: Rational,
                   upper: Option<Rational>,
                   in_range: bool,
                   expr: String,
                   value: &dyn Fn() -> BigUint| {
        let applies = ok_hyp.is_ok() && in_range;
        out.insert(
            id.to_string(),
            Applicability {
                applies,
                threshold_value: threshold,
                upper_value: upper,
                bound: applies.then(value),
                bound_expr: expr,
                note: ok_hyp.err(),
            },
        );
    };
    let base = |extra: Vec<(bool, String)>| -> std::result::Result<(), String> {
        let mut checks = vec![(d >= 2, "d >= 2".to_string()), (t >= 1, "t >= 1".to_string()), (k < n, "k < n".to_string())];
        checks.extend(extra);
        match checks.into_iter().find(|c| !c.0) {
            Some((_, why)) => Err(format!("requires {why}")),
            None => Ok(()),
        }
    };

    // nontrivial d-wise intersecting
    let th = (ri(1) + Rational::from_ratio(di, 2)) * ri(ki - di + 2);
    put(
        "Thm1.4",
        base(vec![(t == 1, "t = 1".into()), (d < k, "d < k".into())]),
        th.clone(),
        None,
        nr > th,
        format!("max(|H(n,k,{d})|, |A(n,k,{d})|)"),
        &|| max_ah(n, k, d),
    );

    // nontrivial d-wise t-intersecting
    let s = t + d - 1;
    let th = Rational::from_ratio(ti + di + 1, 2) * ri(ki - ti - di + 3);
    put(
        "Thm1.5",
        base(vec![(k >= s, "k >= t+d-1".into())]),
        th.clone(),
        None,
        nr > th,
        format!("max(|H(n,k,{s})|, |A(n,k,{s})|)"),
        &|| max_ah(n, k, s),
    );

    // nontrivial t-intersecting, large n; every nontrivial d-wise
    // t-intersecting family is one
    let th = ri((ti + 1) * (ki - ti + 1));
    put(
        "Thm1.6(i)",
        base(vec![(k > t, "k >= t+1".into()), (k <= 2 * t + 1, "k <= 2t+1".into())]),
        th.clone(),
        None,
        nr > th,
        format!("|A(n,k,{})|", t + 1),
        &|| count_a(n, k, t + 1),
    );
    put(
        "Thm1.6(ii)",
        base(vec![(k > 2 * t + 1, "k > 2t+1".into())]),
        th.clone(),
        None,
        nr > th,
        format!("max(|A(n,k,{0})|, |H(n,k,{0})|)", t + 1),
        &|| max_ah(n, k, t + 1),
    );

    // t-intersecting window
    let lo = ri(ki - ti + 1) * (ri(2) + Rational::from_ratio(ti - 1, 2));
    let hi = ri((ki - ti - 1) * (ti + 1));
    put(
        "Thm1.7",
        base(vec![(k > t, "k >= t+1".into())]),
        lo.clone(),
        Some(hi.clone()),
        lo < nr && nr < hi,
        format!("|A(n,k,{})|", t + 1),
        &|| count_a(n, k, t + 1),
    );

    // d-wise t-intersecting EKR
    let th = ri((ti + di - 1) * (ki - ti - di + 3));
    put(
        "Thm1.8",
        base(vec![(k >= t, "k >= t".into())]),
        th.clone(),
        None,
        nr > th,
        format!("C(n-{t}, k-{t})"),
        &|| choose_i(ni - ti, ki - ti),
    );

    // t-intersecting EKR
    let th = ri((ti + 1) * (ki - ti + 1));
    put(
        "Thm3.1",
        base(vec![(k >= t, "k >= t".into())]),
        th.clone(),
        None,
        nr >= th,
        format!("C(n-{t}, k-{t})"),
        &|| choose_i(ni - ti, ki - ti),
    );

    let th = ri(2 * ki - ti + 1);
    put(
        "Thm3.2",
        base(vec![(k >= t, "k >= t".into())]),
        th.clone(),
        None,
        nr >= th,
        format!("C(n-1, k-{t})"),
        &|| choose_i(ni - 1, ki - ti),
    );

    let improved_ekr = (t >= 2 && d >= 3 && n > 0).then(|| {
        let density = Rational::new(BigInt::from(ki), BigInt::from(ni));
        let bracket = cached_beta(t, d);
        Qualitative {
            status: bracket.compare(&density),
            density,
            n0: "unquantified",
        }
    });

    RangeClassification {
        n,
        k,
        d,
        t,
        theorems: out,
        improved_ekr,
    }
}

/// Brackets at the default tolerance, computed once per `(t, d)`.
fn cached_beta(t: usize, d: usize) -> BetaBracket {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), BetaBracket>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(b) = cache.lock().expect("cache lock").get(&(t, d)) {
        return b.clone();
    }
    let tol = Rational::from_ratio(1, 1_000_000_000);
    let b = beta(t, d, &tol).expect("valid parameters");
    cache.lock().expect("cache lock").insert((t, d), b.clone());
    b
}

fn falling(lo: i64, hi: i64) -> BigUint {
    let mut acc = BigUint::one();
    let mut i = lo;
    while i <= hi {
        acc *= BigUint::from(i as u64);
        i += 1;
    }
    acc
}

/// `C(n-t, k-t) > C(n-1, k-t-d+2)`, by the binomials directly.
pub fn lemma33_binomial(n: usize, k: usize, t: usize, d: usize) -> bool {
    let (n, k, t, d) = (n as i64, k as i64, t as i64, d as i64);
    choose_i(n - t, k - t) > choose_i(n - 1, k - t - d + 2)
}

/// The same inequality after cancelling common factors:
/// `prod[n-k+1, n-k+t+d-3] > prod[n-t+1, n-1] * prod[k-t-d+3, k-t]`.
pub fn lemma33_product(n: usize, k: usize, t: usize, d: usize) -> bool {
    let (n, k, t, d) = (n as i64, k as i64, t as i64, d as i64);
    let lhs = falling(n - k + 1, n - k + t + d - 3);
    let rhs = falling(n - t + 1, n - 1) * falling(k - t - d + 3, k - t);
    lhs > rhs
}

/// Both forms, which must agree. Requires `k >= t+d-2`, `n > k`, `t >= 1`,
/// `d >= 2`.
pub fn lemma33_holds(n: usize, k: usize, t: usize, d: usize) -> Result<bool> {
    if t < 1 || d < 2 || k + 2 < t + d || n <= k {
        return Err(Error::InvalidParameter(format!(
            "lemma needs k >= t+d-2, n > k; got n={n} k={k} t={t} d={d}"
        )));
    }
    let a = lemma33_binomial(n, k, t, d);
    let b = lemma33_product(n, k, t, d);
    assert_eq!(a, b, "binomial and product forms disagree at n={n} k={k} t={t} d={d}");
    Ok(a)
}

/// Outcome of [`scan_n0`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanResult {
    /// Smallest scanned `n` from which every scanned point passes.
    pub n0: Option<usize>,
    /// Largest scanned `n` that fails.
    pub last_failure: Option<usize>,
    pub scanned: usize,
}

/// Scans `n` over multiples of `p`'s denominator up to `n_max`, with
/// `k = p n`, and reports the smallest `N` after which the inequality never
/// fails in range.
pub fn scan_n0(p: &Rational, t: usize, d: usize, n_max: usize) -> Result<ScanResult> {
    if !p.is_positive() || *p >= Rational::from_ratio(1, 2) {
        return Err(Error::InvalidParameter(format!("p = {p} must lie in (0, 1/2)")));
    }
    if n_max > 100_000 {
        return Err(Error::InvalidParameter("n_max must be at most 100000".into()));
    }
    let num: usize = p.numer().try_into().map_err(|_| Error::InvalidParameter("p too large".into()))?;
    let den: usize = p.denom().try_into().map_err(|_| Error::InvalidParameter("p too large".into()))?;
    let mut first_pass_after_failure: Option<usize> = None;
    let mut last_failure = None;
    let mut scanned = 0;
    let mut m = 1;
    while m * den <= n_max {
        let (n, k) = (m * den, m * num);
        m += 1;
        if k + 2 < t + d || k >= n {
            continue;
        }
        scanned += 1;
        if lemma33_product(n, k, t, d) {
            if first_pass_after_failure.is_none() {
                first_pass_after_failure = Some(n);
            }
        } else {
            last_failure = Some(n);
            first_pass_after_failure = None;
        }
    }
    Ok(ScanResult {
        n0: first_pass_after_failure,
        last_failure,
        scanned,
    })
}

/// `n (d-1) < k d`: below this every k-uniform family is d-wise intersecting.
pub fn trivially_intersecting(n: usize, k: usize, d: usize) -> bool {
    n * (d - 1) < k * d
}
