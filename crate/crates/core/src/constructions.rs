//! Named families: symbolic descriptions, membership predicates and explicit
//! materialization for small ground sets.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::Serialize;

use crate::counting::{self, t_threshold};
use crate::error::{Error, Result};
use crate::setcore::{
    enumerate_all_subsets, enumerate_k_subsets, ElementSet, SetFamily, ENUMERATION_LIMIT,
    MAX_GROUND,
};

/// A named construction with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FamilySpec {
    /// k-sets meeting `[d+1]` in at least `d` points.
    A { n: usize, k: usize, d: usize },
    /// Hilton–Milner type: `[d-1]` plus a point of `[d, k+1]`, and `[k+1] \ {i}` for `i < d`.
    H { n: usize, k: usize, d: usize },
    M { n: usize, k: usize, d: usize, r: usize },
    T { n: usize, k: usize, d: usize, r: usize },
    /// All k-sets containing `[t]`.
    Star { n: usize, k: usize, t: usize },
    /// k-sets meeting `[t+2i]` in at least `t+i` points.
    FranklUniform { n: usize, k: usize, t: usize, i: usize },
    /// Subsets of `[n]` meeting `[t+di]` in at least `t+(d-1)i` points.
    FranklNonuniform { n: usize, d: usize, t: usize, i: usize },
}

fn invalid(msg: String) -> Error {
    Error::InvalidSpec(msg)
}

impl FamilySpec {
    pub fn n(&self) -> usize {
        match *self {
            FamilySpec::A { n, .. }
            | FamilySpec::H { n, .. }
            | FamilySpec::M { n, .. }
            | FamilySpec::T { n, .. }
            | FamilySpec::Star { n, .. }
            | FamilySpec::FranklUniform { n, .. }
            | FamilySpec::FranklNonuniform { n, .. } => n,
        }
    }

    /// Uniform size, `None` for the nonuniform Frankl family.
    pub fn k(&self) -> Option<usize> {
        match *self {
            FamilySpec::A { k, .. }
            | FamilySpec::H { k, .. }
            | FamilySpec::M { k, .. }
            | FamilySpec::T { k, .. }
            | FamilySpec::Star { k, .. }
            | FamilySpec::FranklUniform { k, .. } => Some(k),
            FamilySpec::FranklNonuniform { .. } => None,
        }
    }

    /// Checks the parameter invariants of the variant.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 || n > MAX_GROUND {
            return Err(invalid(format!("n = {n} outside 1..=128")));
        }
        let dk = |d: usize, k: usize| -> Result<()> {
            if 2 <= d && d < k {
                Ok(())
            } else {
                Err(invalid(format!("{self}: requires 2 <= d < k")))
            }
        };
        match *self {
            FamilySpec::A { n, k, d } => {
                dk(d, k)?;
                if n < k + 2 {
                    return Err(invalid(format!("{self}: requires n >= k+2")));
                }
            }
            FamilySpec::H { n, k, d } => {
                dk(d, k)?;
                if n < k + 1 {
                    return Err(invalid(format!("{self}: requires n >= k+1")));
                }
            }
            FamilySpec::M { n, k, d, r } => {
                dk(d, k)?;
                if r < 1 || r > (k - 1) / (d - 1) {
                    return Err(invalid(format!(
                        "{self}: requires 1 <= r <= floor((k-1)/(d-1))"
                    )));
                }
                if n < 2 + (d - 1) * r {
                    return Err(invalid(format!("{self}: requires n >= 2+(d-1)r")));
                }
                if n < k + 1 {
                    return Err(invalid(format!("{self}: requires n >= k+1")));
                }
            }
            FamilySpec::T { n, k, d, r } => {
                dk(d, k)?;
                if r > d - 1 {
                    return Err(invalid(format!("{self}: requires 0 <= r <= d-1")));
                }
                if n < k + 1 {
                    return Err(invalid(format!("{self}: requires n >= k+1")));
                }
            }
            FamilySpec::Star { n, k, t } => {
                if !(1 <= t && t <= k && k <= n) {
                    return Err(invalid(format!("{self}: requires 1 <= t <= k <= n")));
                }
            }
            FamilySpec::FranklUniform { n, k, t, i } => {
                if t < 1 || k > n {
                    return Err(invalid(format!("{self}: requires t >= 1 and k <= n")));
                }
                if t + 2 * i > n {
                    return Err(invalid(format!("{self}: requires t+2i <= n")));
                }
                if t + i > k {
                    return Err(invalid(format!("{self}: requires t+i <= k")));
                }
            }
            FamilySpec::FranklNonuniform { n, d, t, i } => {
                if t < 1 || d < 2 {
                    return Err(invalid(format!("{self}: requires t >= 1 and d >= 2")));
                }
                if t + d * i > n {
                    return Err(invalid(format!("{self}: requires t+di <= n")));
                }
            }
        }
        Ok(())
    }

    /// Defining predicate; assumes `validate` passed and `s` lives on `[n]`.
    fn predicate(&self, s: &ElementSet) -> bool {
        let n = self.n();
        let size = s.len();
        let meet = |lo: usize, hi: usize| -> usize {
            s.intersection(&ElementSet::interval(n, lo, hi).expect("window in range"))
                .len()
        };
        match *self {
            FamilySpec::A { k, d, .. } => size == k && meet(1, d + 1) >= d,
            FamilySpec::H { k, d, .. } => {
                if size != k {
                    return false;
                }
                let core = ElementSet::prefix(n, d - 1).expect("in range");
                if core.is_subset(s) {
                    return meet(d, k + 1) > 0;
                }
                // [k+1] \ {i} for i in [d-1]
                let top = ElementSet::prefix(n, k + 1).expect("n >= k+1");
                top.difference(s).len() == 1 && s.is_subset(&top) && {
                    let missing = top.difference(s).elements().next().unwrap_or(0);
                    missing < d
                }
            }
            FamilySpec::M { k, d, r, .. } => {
                if size != k {
                    return false;
                }
                let hi = 2 + (d - 1) * r;
                if s.contains(1) {
                    meet(2, hi) > (d - 2) * r
                } else {
                    meet(2, hi) == hi - 1
                }
            }
            FamilySpec::T { k, d, r, .. } => {
                if size != k {
                    return false;
                }
                let core = ElementSet::prefix(n, r).expect("in range");
                if core.is_subset(s) && meet(r + 1, k + 1) >= t_threshold(k, d, r) {
                    return true;
                }
                let top = ElementSet::prefix(n, k + 1).expect("n >= k+1");
                s.is_subset(&top) && {
                    let missing: Vec<usize> = top.difference(s).elements().collect();
                    missing.len() == 1 && missing[0] <= r
                }
            }
            FamilySpec::Star { k, t, .. } => {
                size == k && ElementSet::prefix(n, t).expect("t <= n").is_subset(s)
            }
            FamilySpec::FranklUniform { k, t, i, .. } => size == k && meet(1, t + 2 * i) >= t + i,
            FamilySpec::FranklNonuniform { d, t, i, .. } => meet(1, t + d * i) >= t + (d - 1) * i,
        }
    }

    /// Whether `s` belongs to the family.
    pub fn membership(&self, s: &ElementSet) -> Result<bool> {
        self.validate()?;
        if s.n() != self.n() {
            return Err(Error::GroundSizeMismatch {
                expected: self.n(),
                found: s.n(),
            });
        }
        Ok(self.predicate(s))
    }

    pub fn count(&self) -> Result<BigUint> {
        counting::count_construction(self)
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FamilySpec::A { n, k, d } => write!(f, "A({n},{k},{d})"),
            FamilySpec::H { n, k, d } => write!(f, "H({n},{k},{d})"),
            FamilySpec::M { n, k, d, r } => write!(f, "M({n},{k},{d},{r})"),
            FamilySpec::T { n, k, d, r } => write!(f, "T({n},{k},{d},{r})"),
            FamilySpec::Star { n, k, t } => write!(f, "star({n},{k},{t})"),
            FamilySpec::FranklUniform { n, k, t, i } => write!(f, "franklU({n},{k},{t},{i})"),
            FamilySpec::FranklNonuniform { n, d, t, i } => write!(f, "franklN({n},{d},{t},{i})"),
        }
    }
}

impl FromStr for FamilySpec {
    type Err = Error;

    /// Parses `A(n,k,d)`, `H(n,k,d)`, `M(n,k,d,r)`, `T(n,k,d,r)`,
    /// `star(n,k,t)`, `franklU(n,k,t,i)`, `franklN(n,d,t,i)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || invalid(format!("cannot parse family spec `{s}`"));
        let open = s.find('(').ok_or_else(bad)?;
        let body = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let name = s[..open].trim();
        let args: Vec<usize> = body
            .split(',')
            .map(|a| a.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let arity = |m: usize| -> Result<()> {
            if args.len() == m {
                Ok(())
            } else {
                Err(invalid(format!("`{name}` takes {m} parameters, got {}", args.len())))
            }
        };
        let spec = match name {
            "A" | "a" => {
                arity(3)?;
                FamilySpec::A { n: args[0], k: args[1], d: args[2] }
            }
            "H" | "h" => {
                arity(3)?;
                FamilySpec::H { n: args[0], k: args[1], d: args[2] }
            }
            "M" | "m" => {
                arity(4)?;
                FamilySpec::M { n: args[0], k: args[1], d: args[2], r: args[3] }
            }
            "T" | "t" => {
                arity(4)?;
                FamilySpec::T { n: args[0], k: args[1], d: args[2], r: args[3] }
            }
            "star" | "Star" => {
                arity(3)?;
                FamilySpec::Star { n: args[0], k: args[1], t: args[2] }
            }
            "franklU" | "frankl_u" | "FranklU" => {
                arity(4)?;
                FamilySpec::FranklUniform { n: args[0], k: args[1], t: args[2], i: args[3] }
            }
            "franklN" | "frankl_n" | "FranklN" => {
                arity(4)?;
                FamilySpec::FranklNonuniform { n: args[0], d: args[1], t: args[2], i: args[3] }
            }
            _ => return Err(invalid(format!("unknown family `{name}`"))),
        };
        Ok(spec)
    }
}

/// Materializes the family by filtering all candidate sets, `n <= 28`.
pub fn build(spec: &FamilySpec) -> Result<SetFamily> {
    spec.validate()?;
    let n = spec.n();
    if n > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            n,
            limit: ENUMERATION_LIMIT,
        });
    }
    let members: Vec<ElementSet> = match spec.k() {
        Some(k) => enumerate_k_subsets(n, k)?
            .filter(|s| spec.predicate(s))
            .collect(),
        None => enumerate_all_subsets(n)?
            .filter(|s| spec.predicate(s))
            .collect(),
    };
    SetFamily::new(n, spec.k(), members)
}

/// Maximizer over `r` of a parametrized family.
#[derive(Debug, Clone)]
pub struct Argmax {
    pub r: usize,
    pub size: BigUint,
    pub spec: FamilySpec,
    /// Present when `n <= 28`.
    pub family: Option<SetFamily>,
}

fn materialize(spec: FamilySpec, r: usize, size: BigUint) -> Result<Argmax> {
    let family = if spec.n() <= ENUMERATION_LIMIT {
        Some(build(&spec)?)
    } else {
        None
    };
    Ok(Argmax {
        r,
        size,
        spec,
        family,
    })
}

/// `m(n,k,d)` with its maximizing `r` (smallest on ties) and family.
pub fn mkd_argmax(n: usize, k: usize, d: usize) -> Result<Argmax> {
    FamilySpec::M { n, k, d, r: 1 }.validate()?;
    let (r, size) = counting::m_max(n, k, d)?;
    materialize(FamilySpec::M { n, k, d, r }, r, size)
}

/// `t(n,k,d)` with its maximizing `r` (smallest on ties) and family.
pub fn tkd_argmax(n: usize, k: usize, d: usize) -> Result<Argmax> {
    FamilySpec::T { n, k, d, r: 0 }.validate()?;
    let (r, size) = counting::t_max(n, k, d)?;
    materialize(FamilySpec::T { n, k, d, r }, r, size)
}

/// Every valid construction at `(n, k)` over the given parameter ranges;
/// used to enumerate test sweeps and to seed search incumbents.
pub fn all_specs(n: usize, k: usize) -> Vec<FamilySpec> {
    let mut out = Vec::new();
    for d in 2..k {
        out.push(FamilySpec::A { n, k, d });
        out.push(FamilySpec::H { n, k, d });
        for r in 1..=(k - 1) / (d - 1) {
            out.push(FamilySpec::M { n, k, d, r });
        }
        for r in 0..d {
            out.push(FamilySpec::T { n, k, d, r });
        }
    }
    for t in 1..=k {
        out.push(FamilySpec::Star { n, k, t });
    }
    for t in 1..=k {
        for i in 0..=n {
            out.push(FamilySpec::FranklUniform { n, k, t, i });
        }
    }
    out.retain(|s| s.validate().is_ok());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize, e: &[usize]) -> ElementSet {
        ElementSet::from_elements(n, e).unwrap()
    }

    #[test]
    fn headline_sizes() {
        assert_eq!(build(&FamilySpec::A { n: 11, k: 7, d: 3 }).unwrap().len(), 175);
        assert_eq!(build(&FamilySpec::M { n: 11, k: 7, d: 3, r: 3 }).unwrap().len(), 176);
        assert_eq!(build(&FamilySpec::H { n: 11, k: 7, d: 3 }).unwrap().len(), 128);
    }

    #[test]
    fn star_members() {
        let f = build(&FamilySpec::Star { n: 5, k: 3, t: 2 }).unwrap();
        let want = vec![set(5, &[1, 2, 3]), set(5, &[1, 2, 4]), set(5, &[1, 2, 5])];
        assert_eq!(f.members(), want.as_slice());
    }

    #[test]
    fn membership_examples() {
        let a = FamilySpec::A { n: 11, k: 7, d: 3 };
        assert!(a.membership(&set(11, &[1, 2, 3, 5, 6, 7, 8])).unwrap());
        let h = FamilySpec::H { n: 11, k: 7, d: 3 };
        assert!(!h.membership(&set(11, &[3, 4, 5, 6, 7, 9, 10])).unwrap());
        assert!(h.membership(&set(11, &[2, 3, 4, 5, 6, 7, 8])).unwrap());
        let t = FamilySpec::T { n: 12, k: 8, d: 3, r: 1 };
        assert_eq!(t_threshold(8, 3, 1), 5);
        assert!(t.membership(&ElementSet::interval(12, 2, 9).unwrap()).unwrap());
        assert!(matches!(
            a.membership(&set(10, &[1])),
            Err(Error::GroundSizeMismatch { .. })
        ));
    }

    #[test]
    fn strict_validation() {
        assert!(FamilySpec::A { n: 8, k: 7, d: 3 }.validate().is_err());
        assert!(FamilySpec::H { n: 8, k: 7, d: 7 }.validate().is_err());
        assert!(FamilySpec::M { n: 11, k: 7, d: 3, r: 4 }.validate().is_err());
        assert!(FamilySpec::M { n: 11, k: 7, d: 3, r: 0 }.validate().is_err());
        assert!(FamilySpec::T { n: 11, k: 7, d: 3, r: 3 }.validate().is_err());
        assert!(FamilySpec::Star { n: 5, k: 3, t: 0 }.validate().is_err());
        assert!(FamilySpec::FranklNonuniform { n: 5, d: 3, t: 3, i: 1 }.validate().is_err());
        let e = build(&FamilySpec::A { n: 30, k: 7, d: 3 }).unwrap_err();
        assert!(matches!(e, Error::EnumerationLimit { .. }));
    }

    #[test]
    fn t_degenerate_r0() {
        // r = 0: no prefix condition, no appended block
        let spec = FamilySpec::T { n: 9, k: 5, d: 3, r: 0 };
        let f = build(&spec).unwrap();
        let j0 = t_threshold(5, 3, 0);
        assert!(f.iter().all(|s| s
            .intersection(&ElementSet::prefix(9, 6).unwrap())
            .len()
            >= j0));
    }

    #[test]
    fn spec_syntax_roundtrip() {
        for text in [
            "A(11,7,3)",
            "H(11,7,3)",
            "M(11,7,3,3)",
            "T(12,8,3,1)",
            "star(7,4,2)",
            "franklU(10,5,2,1)",
            "franklN(6,3,1,1)",
        ] {
            let spec: FamilySpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
        assert!("Q(1,2)".parse::<FamilySpec>().is_err());
        assert!("A(11,7)".parse::<FamilySpec>().is_err());
        assert!("A 11,7,3".parse::<FamilySpec>().is_err());
    }

    #[test]
    fn argmax_examples() {
        let m = mkd_argmax(11, 7, 3).unwrap();
        assert_eq!((m.r, m.size.clone()), (3, 176u32.into()));
        assert_eq!(m.family.unwrap().len(), 176);
        let m = mkd_argmax(12, 8, 3).unwrap();
        assert_eq!((m.r, m.size), (3, 299u32.into()));
        let t = tkd_argmax(12, 8, 3).unwrap();
        assert_eq!(t.size, 261u32.into());
        let big = mkd_argmax(120, 77, 4).unwrap();
        assert!(big.family.is_none());
    }
}
