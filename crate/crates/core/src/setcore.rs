//! Subsets of a ground set `[n] = {1, ..., n}` stored as bit masks, families
//! of such subsets, and the plain-text family file format.
//!
//! Element `i` lives at bit `i - 1`. Families keep their members strictly
//! increasing in numeric mask order; that order is also the tie-breaking
//! order for every deterministic output in the crate.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported ground set.
pub const MAX_GROUND: usize = 128;
/// Largest ground set for which families are materialized explicitly.
pub const ENUMERATION_LIMIT: usize = 28;

#[inline]
fn low_mask(n: usize) -> u128 {
    if n >= 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

/// A subset of `[n]`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ElementSet {
    n: u8,
    bits: u128,
}

impl ElementSet {
    pub fn empty(n: usize) -> Result<Self> {
        check_ground(n)?;
        Ok(Self { n: n as u8, bits: 0 })
    }

    pub fn full(n: usize) -> Result<Self> {
        check_ground(n)?;
        Ok(Self {
            n: n as u8,
            bits: low_mask(n),
        })
    }

    pub fn from_bits(n: usize, bits: u128) -> Result<Self> {
        check_ground(n)?;
        if bits & !low_mask(n) != 0 {
            let element = 128 - bits.leading_zeros() as usize;
            return Err(Error::ElementOutOfRange { element, n });
        }
        Ok(Self { n: n as u8, bits })
    }

    /// Builds a set from 1-based elements; repeats are ignored.
    pub fn from_elements(n: usize, elements: &[usize]) -> Result<Self> {
        check_ground(n)?;
        let mut bits = 0u128;
        for &e in elements {
            if e == 0 || e > n {
                return Err(Error::ElementOutOfRange { element: e, n });
            }
            bits |= 1u128 << (e - 1);
        }
        Ok(Self { n: n as u8, bits })
    }

    /// The interval `[lo, hi]` (1-based, inclusive); empty when `lo > hi`.
    pub fn interval(n: usize, lo: usize, hi: usize) -> Result<Self> {
        check_ground(n)?;
        if lo > hi {
            return Self::empty(n);
        }
        if lo == 0 || hi > n {
            return Err(Error::ElementOutOfRange {
                element: if lo == 0 { 0 } else { hi },
                n,
            });
        }
        let bits = low_mask(hi) & !low_mask(lo - 1);
        Ok(Self { n: n as u8, bits })
    }

    /// `[m] = {1, ..., m}`.
    pub fn prefix(n: usize, m: usize) -> Result<Self> {
        Self::interval(n, 1, m)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn bits(&self) -> u128 {
        self.bits
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn contains(&self, element: usize) -> bool {
        element >= 1 && element <= self.n() && self.bits >> (element - 1) & 1 == 1
    }

    /// Elements in increasing order, 1-based.
    pub fn elements(&self) -> impl Iterator<Item = usize> + '_ {
        let mut rest = self.bits;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i + 1)
            }
        })
    }

    #[inline]
    pub fn intersection(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            bits: self.bits & other.bits,
        }
    }

    #[inline]
    pub fn union(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            bits: self.bits | other.bits,
        }
    }

    #[inline]
    pub fn difference(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            bits: self.bits & !other.bits,
        }
    }

    #[inline]
    pub fn complement(&self) -> Self {
        Self {
            n: self.n,
            bits: !self.bits & low_mask(self.n()),
        }
    }

    #[inline]
    pub fn is_subset(&self, other: &Self) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn with(&self, element: usize) -> Result<Self> {
        if element == 0 || element > self.n() {
            return Err(Error::ElementOutOfRange {
                element,
                n: self.n(),
            });
        }
        Ok(Self {
            n: self.n,
            bits: self.bits | 1u128 << (element - 1),
        })
    }

    pub fn without(&self, element: usize) -> Self {
        if element == 0 || element > self.n() {
            return *self;
        }
        Self {
            n: self.n,
            bits: self.bits & !(1u128 << (element - 1)),
        }
    }
}

impl PartialOrd for ElementSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ElementSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.bits.cmp(&other.bits).then(self.n.cmp(&other.n))
    }
}

impl fmt::Debug for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, e) in self.elements().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("}")
    }
}

fn check_ground(n: usize) -> Result<()> {
    if n == 0 || n > MAX_GROUND {
        Err(Error::GroundSizeRange(n))
    } else {
        Ok(())
    }
}

/// Bitwise intersection of a nonempty sequence of sets over the same ground set.
pub fn intersect_all(sets: &[ElementSet]) -> Result<ElementSet> {
    let (first, rest) = sets.split_first().ok_or(Error::EmptyIntersection)?;
    let mut acc = *first;
    for s in rest {
        if s.n != first.n {
            return Err(Error::GroundSizeMismatch {
                expected: first.n(),
                found: s.n(),
            });
        }
        acc = acc.intersection(s);
    }
    Ok(acc)
}

/// Iterator over the `k`-subsets of `[n]` in increasing mask order.
#[derive(Debug, Clone)]
pub struct KSubsets {
    n: u8,
    limit: u128,
    next: Option<u128>,
}

impl Iterator for KSubsets {
    type Item = ElementSet;

    fn next(&mut self) -> Option<ElementSet> {
        let cur = self.next?;
        self.next = if cur == 0 {
            None
        } else {
            // Gosper's hack
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let nxt = (((r ^ cur) >> 2) / c) | r;
            (nxt < self.limit).then_some(nxt)
        };
        Some(ElementSet {
            n: self.n,
            bits: cur,
        })
    }
}

/// All `k`-subsets of `[n]`, `n <= 28`.
pub fn enumerate_k_subsets(n: usize, k: usize) -> Result<KSubsets> {
    if n > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            n,
            limit: ENUMERATION_LIMIT,
        });
    }
    check_ground(n)?;
    if k > n {
        return Ok(KSubsets {
            n: n as u8,
            limit: 0,
            next: None,
        });
    }
    Ok(KSubsets {
        n: n as u8,
        limit: 1u128 << n,
        next: Some(low_mask(k)),
    })
}

/// All subsets of `[n]` in increasing mask order, `n <= 28`.
pub fn enumerate_all_subsets(n: usize) -> Result<impl Iterator<Item = ElementSet>> {
    if n > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            n,
            limit: ENUMERATION_LIMIT,
        });
    }
    check_ground(n)?;
    let nn = n as u8;
    Ok((0..1u128 << n).map(move |bits| ElementSet { n: nn, bits }))
}

/// A permutation of `[n]`, stored 0-based: position `i` maps to `images[i]`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            images: (0..n).collect(),
        }
    }

    /// Accepts 0-based images; must be a bijection on `0..len`.
    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(Error::InvalidParameter(format!(
                    "not a permutation of [{n}]"
                )));
            }
            seen[i] = true;
        }
        Ok(Self { images })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Image of a 1-based element.
    pub fn image(&self, element: usize) -> usize {
        self.images[element - 1] + 1
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.images.len()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j] = i;
        }
        Self { images: inv }
    }

    /// `self` after `first`: `x -> self(first(x))`.
    pub fn after(&self, first: &Self) -> Self {
        Self {
            images: first.images.iter().map(|&i| self.images[i]).collect(),
        }
    }

    pub fn apply(&self, set: &ElementSet) -> ElementSet {
        let mut bits = 0u128;
        let mut rest = set.bits;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            bits |= 1u128 << self.images[i];
        }
        ElementSet { n: set.n, bits }
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_based: Vec<usize> = self.images.iter().map(|i| i + 1).collect();
        write!(f, "Permutation{one_based:?}")
    }
}

/// A duplicate-free family of subsets of `[n]`, sorted by mask.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SetFamily {
    n: usize,
    k: Option<usize>,
    members: Vec<ElementSet>,
}

impl SetFamily {
    /// Validating constructor: members must be strictly increasing, over `[n]`,
    /// and of size `k` when `k` is given.
    pub fn new(n: usize, k: Option<usize>, members: Vec<ElementSet>) -> Result<Self> {
        check_ground(n)?;
        for w in members.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidParameter(format!(
                    "members not strictly increasing at {}",
                    w[1]
                )));
            }
        }
        Self::validate_members(n, k, &members)?;
        Ok(Self { n, k, members })
    }

    /// Sorts and de-duplicates; returns the family and the number of
    /// duplicates dropped.
    pub fn from_unsorted(
        n: usize,
        k: Option<usize>,
        mut members: Vec<ElementSet>,
    ) -> Result<(Self, usize)> {
        check_ground(n)?;
        Self::validate_members(n, k, &members)?;
        members.sort_unstable();
        let before = members.len();
        members.dedup();
        let dropped = before - members.len();
        Ok((Self { n, k, members }, dropped))
    }

    pub fn empty(n: usize, k: Option<usize>) -> Result<Self> {
        Self::new(n, k, Vec::new())
    }

    fn validate_members(n: usize, k: Option<usize>, members: &[ElementSet]) -> Result<()> {
        for m in members {
            if m.n() != n {
                return Err(Error::GroundSizeMismatch {
                    expected: n,
                    found: m.n(),
                });
            }
            if let Some(k) = k {
                if m.len() != k {
                    return Err(Error::InvalidParameter(format!(
                        "member {m} has size {} but family is {k}-uniform",
                        m.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> Option<usize> {
        self.k
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[ElementSet] {
        &self.members
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ElementSet> {
        self.members.iter()
    }

    pub fn contains(&self, set: &ElementSet) -> bool {
        self.members.binary_search(set).is_ok()
    }

    /// Intersection of every member.
    pub fn global_intersection(&self) -> Result<ElementSet> {
        if self.members.is_empty() {
            return Err(Error::EmptyFamily);
        }
        intersect_all(&self.members)
    }

    /// Image of the family under a permutation of the ground set.
    pub fn permute(&self, perm: &Permutation) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::GroundSizeMismatch {
                expected: self.n,
                found: perm.len(),
            });
        }
        let mut members: Vec<ElementSet> = self.members.iter().map(|m| perm.apply(m)).collect();
        members.sort_unstable();
        Ok(Self {
            n: self.n,
            k: self.k,
            members,
        })
    }

    pub fn is_subfamily_of(&self, other: &Self) -> bool {
        self.members.iter().all(|m| other.contains(m))
    }
}

impl fmt::Debug for SetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SetFamily")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("len", &self.members.len())
            .finish()
    }
}

impl<'a> IntoIterator for &'a SetFamily {
    type Item = &'a ElementSet;
    type IntoIter = std::slice::Iter<'a, ElementSet>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

/// Result of parsing a family file.
#[derive(Debug, Clone)]
pub struct ParsedFamily {
    pub family: SetFamily,
    pub warnings: Vec<String>,
}

/// Marker line for the empty set, which has no element list.
pub const EMPTY_SET_LINE: &str = "-";

fn parse_header(line: &str, lineno: usize) -> Result<(usize, Option<usize>)> {
    let bad = |message: String| Error::Parse {
        line: lineno,
        message,
    };
    let mut n = None;
    let mut k = None;
    for token in line.split_whitespace() {
        match token.split_once('=') {
            Some(("n", v)) => {
                n = Some(
                    v.parse::<usize>()
                        .map_err(|_| bad(format!("malformed header: bad n `{v}`")))?,
                )
            }
            Some(("k", "*")) => k = Some(None),
            Some(("k", v)) => {
                k = Some(Some(v.parse::<usize>().map_err(|_| {
                    bad(format!("malformed header: bad k `{v}`"))
                })?))
            }
            _ => return Err(bad(format!("malformed header: unexpected `{token}`"))),
        }
    }
    match (n, k) {
        (Some(n), Some(k)) => {
            if n == 0 || n > MAX_GROUND {
                return Err(bad(format!("malformed header: n = {n} outside 1..=128")));
            }
            Ok((n, k))
        }
        _ => Err(bad("malformed header: expected `n=<int> k=<int|*>`".into())),
    }
}

/// Parses the text family format.
pub fn parse_family(text: &str) -> Result<ParsedFamily> {
    let mut header = None;
    let mut members = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((n, k)) = header else {
            header = Some(parse_header(line, lineno)?);
            continue;
        };
        let bad = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        if line == EMPTY_SET_LINE {
            if let Some(k) = k {
                if k != 0 {
                    return Err(bad(format!("empty set but family is {k}-uniform")));
                }
            }
            members.push(ElementSet::empty(n).expect("n validated by header"));
            continue;
        }
        let mut elements = Vec::new();
        for tok in line.split_whitespace() {
            let e: usize = tok
                .parse()
                .map_err(|_| bad(format!("not an integer: `{tok}`")))?;
            if e == 0 || e > n {
                return Err(bad(format!("element {e} out of range [1, {n}]")));
            }
            if let Some(&prev) = elements.last() {
                if e <= prev {
                    return Err(bad("elements not strictly increasing".into()));
                }
            }
            elements.push(e);
        }
        if let Some(k) = k {
            if elements.len() != k {
                return Err(bad(format!(
                    "set has {} elements but family is {k}-uniform",
                    elements.len()
                )));
            }
        }
        members.push(ElementSet::from_elements(n, &elements).expect("range checked"));
    }
    let Some((n, k)) = header else {
        return Err(Error::Parse {
            line: 1,
            message: "malformed header: missing".into(),
        });
    };
    let mut warnings = Vec::new();
    let sorted = members.windows(2).all(|w| w[0] < w[1]);
    let (family, dropped) = SetFamily::from_unsorted(n, k, members)?;
    if dropped > 0 {
        warnings.push(format!("dropped {dropped} duplicate member(s)"));
    }
    if !sorted && dropped == 0 {
        warnings.push("members re-sorted into mask order".into());
    }
    Ok(ParsedFamily { family, warnings })
}

/// Canonical text form: header, then one member per line in mask order.
pub fn format_family(family: &SetFamily) -> String {
    let mut out = String::new();
    match family.k {
        Some(k) => out.push_str(&format!("n={} k={}\n", family.n, k)),
        None => out.push_str(&format!("n={} k=*\n", family.n)),
    }
    for m in &family.members {
        if m.is_empty() {
            out.push_str(EMPTY_SET_LINE);
        } else {
            let parts: Vec<String> = m.elements().map(|e| e.to_string()).collect();
            out.push_str(&parts.join(" "));
        }
        out.push('\n');
    }
    out
}

pub fn read_family(path: impl AsRef<Path>) -> Result<SetFamily> {
    let text = fs::read_to_string(path.as_ref())?;
    let parsed = parse_family(&text)?;
    for w in &parsed.warnings {
        log::warn!("{}: {w}", path.as_ref().display());
    }
    Ok(parsed.family)
}

pub fn write_family(family: &SetFamily, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_family(family))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize, e: &[usize]) -> ElementSet {
        ElementSet::from_elements(n, e).unwrap()
    }

    #[test]
    fn intersect_examples() {
        let r = intersect_all(&[set(4, &[1, 2, 3]), set(4, &[2, 3, 4])]).unwrap();
        assert_eq!(r, set(4, &[2, 3]));
        assert_eq!(intersect_all(&[set(4, &[1, 2])]).unwrap(), set(4, &[1, 2]));
        let three = [
            set(11, &[1, 2, 3, 4, 5, 6, 7]),
            set(11, &[2, 3, 4, 5, 6, 7, 8]),
            set(11, &[1, 3, 4, 5, 6, 7, 8]),
        ];
        assert_eq!(intersect_all(&three).unwrap(), set(11, &[3, 4, 5, 6, 7]));
    }

    #[test]
    fn intersect_empty_and_mismatch() {
        assert!(matches!(intersect_all(&[]), Err(Error::EmptyIntersection)));
        assert!(matches!(
            intersect_all(&[set(4, &[1]), set(5, &[1])]),
            Err(Error::GroundSizeMismatch { .. })
        ));
    }

    #[test]
    fn k_subsets_order() {
        let v: Vec<_> = enumerate_k_subsets(4, 2).unwrap().collect();
        let expect = [[1, 2], [1, 3], [2, 3], [1, 4], [2, 4], [3, 4]];
        assert_eq!(v.len(), 6);
        for (s, e) in v.iter().zip(expect.iter()) {
            assert_eq!(*s, set(4, e));
        }
        let zero: Vec<_> = enumerate_k_subsets(5, 0).unwrap().collect();
        assert_eq!(zero, vec![ElementSet::empty(5).unwrap()]);
        assert_eq!(enumerate_k_subsets(11, 7).unwrap().count(), 330);
        assert_eq!(enumerate_k_subsets(3, 4).unwrap().count(), 0);
        assert_eq!(enumerate_k_subsets(28, 28).unwrap().count(), 1);
    }

    #[test]
    fn enumeration_guard() {
        assert!(matches!(
            enumerate_k_subsets(29, 2),
            Err(Error::EnumerationLimit { .. })
        ));
    }

    #[test]
    fn set_bounds() {
        assert!(ElementSet::from_elements(4, &[5]).is_err());
        assert!(ElementSet::from_elements(4, &[0]).is_err());
        assert!(ElementSet::from_bits(3, 0b1000).is_err());
        let full = ElementSet::full(128).unwrap();
        assert_eq!(full.len(), 128);
        assert_eq!(ElementSet::interval(11, 2, 8).unwrap().len(), 7);
        assert!(ElementSet::interval(11, 3, 2).unwrap().is_empty());
    }

    #[test]
    fn parse_basic() {
        let p = parse_family("n=4 k=2\n1 2\n3 4\n").unwrap();
        assert_eq!(p.family.len(), 2);
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn parse_duplicates_warn() {
        let p = parse_family("n=4 k=2\n1 2\n# comment\n1 2\n").unwrap();
        assert_eq!(p.family.len(), 1);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn parse_errors_name_line() {
        let e = parse_family("n=4 k=2\n1 2\n1 5\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = parse_family("n=4 k=2\n1 2 3\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_family("n=four k=2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = parse_family("n=4 k=2\n2 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn nonuniform_and_empty_member() {
        let fam = SetFamily::new(
            3,
            None,
            vec![
                ElementSet::empty(3).unwrap(),
                set(3, &[1]),
                set(3, &[1, 2, 3]),
            ],
        )
        .unwrap();
        let text = format_family(&fam);
        assert_eq!(text, "n=3 k=*\n-\n1\n1 2 3\n");
        assert_eq!(parse_family(&text).unwrap().family, fam);
    }

    #[test]
    fn permutation_roundtrip() {
        let p = Permutation::from_images(vec![2, 0, 1]).unwrap();
        let s = set(3, &[1, 2]);
        assert_eq!(p.apply(&s), set(3, &[1, 3]));
        assert_eq!(p.inverse().apply(&p.apply(&s)), s);
        assert!(Permutation::from_images(vec![0, 0]).is_err());
    }
}
