//! Labelled graph families in which every two members share a complete
//! bipartite (or complete multipartite) subgraph on fixed vertex blocks.
//!
//! Families are never materialized. A member is described by one
//! neighbourhood in `R` per chosen vertex, the forced edges between distinct
//! parts, and an arbitrary assignment of the remaining free edges.

use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigUint;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::counting::decimal;
use crate::error::{Error, Result};

/// Largest vertex count for which graphs are built explicitly.
pub const GRAPH_MAX_N: usize = 128;
/// Largest vertex count accepted by the closed-form counts.
pub const COUNT_MAX_N: usize = 4096;
/// Cap on neighbourhood configurations in exhaustive mode.
pub const EXHAUSTIVE_MAX_CONFIGS: u64 = 10_000;
/// Cap on sampled pairs.
pub const SAMPLED_MAX_PAIRS: u64 = 10_000_000;

/// Position of the pair `{i, j}` (1-based, `i < j`) in the order
/// `(1,2) < (1,3) < ... < (n-1,n)`.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(1 <= i && i < j && j <= n);
    // pairs whose smaller vertex is below i
    let before = (i - 1) * n - (i - 1) * i / 2;
    before + (j - i - 1)
}

fn pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// A labelled graph on `[n]` stored as a bit mask over the `C(n,2)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledGraph {
    n: usize,
    words: Vec<u64>,
}

impl LabeledGraph {
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 || n > GRAPH_MAX_N {
            return Err(Error::InvalidParameter(format!(
                "graph order {n} outside 1..={GRAPH_MAX_N}"
            )));
        }
        Ok(LabeledGraph {
            n,
            words: vec![0; pairs(n).div_ceil(64)],
        })
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for b in 0..pairs(n) {
            g.words[b / 64] |= 1 << (b % 64);
        }
        Ok(g)
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for &(a, b) in edges {
            if a == b || a == 0 || b == 0 || a > n || b > n {
                return Err(Error::InvalidParameter(format!("bad edge ({a},{b})")));
            }
            g.set_edge(a, b, true);
        }
        Ok(g)
    }

    /// Builds a graph from a `0`/`1` string in pair order.
    pub fn from_bit_string(n: usize, bits: &str) -> Result<Self> {
        let mut g = Self::empty(n)?;
        if bits.len() != pairs(n) {
            return Err(Error::InvalidParameter(format!(
                "mask length {} differs from C({n},2) = {}",
                bits.len(),
                pairs(n)
            )));
        }
        for (b, c) in bits.chars().enumerate() {
            match c {
                '0' => {}
                '1' => g.words[b / 64] |= 1 << (b % 64),
                _ => return Err(Error::InvalidParameter(format!("bad mask character {c:?}"))),
            }
        }
        Ok(g)
    }

    pub fn to_bit_string(&self) -> String {
        (0..pairs(self.n))
            .map(|b| if self.bit(b) { '1' } else { '0' })
            .collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn bit(&self, b: usize) -> bool {
        self.words[b / 64] >> (b % 64) & 1 == 1
    }

    fn index(&self, a: usize, b: usize) -> usize {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        pair_index(self.n, i, j)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a != b && self.bit(self.index(a, b))
    }

    pub fn set_edge(&mut self, a: usize, b: usize, present: bool) {
        assert!(a != b, "loops are not edges");
        let x = self.index(a, b);
        if present {
            self.words[x / 64] |= 1 << (x % 64);
        } else {
            self.words[x / 64] &= !(1 << (x % 64));
        }
    }

    pub fn edge_count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn intersection(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "graph orders differ");
        LabeledGraph {
            n: self.n,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    fn overlaps(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        (1..=self.n).filter(|&u| self.has_edge(u, v)).collect()
    }
}

/// Parameters of a bipartite construction with one block `S` of `s`
/// vertices and a block `R` of `t + 2s` vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KstParams {
    pub n: usize,
    pub s: usize,
    pub t: usize,
    pub s_set: Vec<usize>,
    pub r_set: Vec<usize>,
    /// Required degree into `R`; `t + 2s - 1` for the genuine family.
    pub min_degree: usize,
}

impl KstParams {
    /// Places `S = {1..s}` and `R = {s+1..3s+t}`.
    pub fn new(n: usize, s: usize, t: usize) -> Result<Self> {
        let m = MultipartiteParams::new(n, &[s], t)?;
        Ok(KstParams {
            n,
            s,
            t,
            s_set: m.parts[0].clone(),
            r_set: m.r_set,
            min_degree: m.min_degree,
        })
    }

    pub fn with_min_degree(mut self, d: usize) -> Self {
        self.min_degree = d;
        self
    }

    pub fn as_multipartite(&self) -> MultipartiteParams {
        MultipartiteParams {
            n: self.n,
            t: self.t,
            parts: vec![self.s_set.clone()],
            r_set: self.r_set.clone(),
            min_degree: self.min_degree,
        }
    }
}

/// Parameters of the multipartite construction with parts `S_1..S_r` and a
/// block `R` of `t + 2 sigma` vertices, `sigma` the total part size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultipartiteParams {
    pub n: usize,
    pub t: usize,
    pub parts: Vec<Vec<usize>>,
    pub r_set: Vec<usize>,
    pub min_degree: usize,
}

impl MultipartiteParams {
    /// Places the parts consecutively from vertex 1, followed by `R`.
    pub fn new(n: usize, sizes: &[usize], t: usize) -> Result<Self> {
        let sigma = check_sizes(n, sizes, t)?;
        let r_len = t + 2 * sigma;
        if r_len > 64 {
            return Err(Error::InstanceTooLarge(format!(
                "|R| = {r_len} exceeds 64"
            )));
        }
        if n > GRAPH_MAX_N {
            return Err(Error::InstanceTooLarge(format!(
                "n = {n} exceeds {GRAPH_MAX_N}"
            )));
        }
        let mut next = 1;
        let mut parts = Vec::new();
        for &s in sizes {
            parts.push((next..next + s).collect());
            next += s;
        }
        Ok(MultipartiteParams {
            n,
            t,
            parts,
            r_set: (next..next + r_len).collect(),
            min_degree: r_len - 1,
        })
    }

    pub fn with_min_degree(mut self, d: usize) -> Self {
        self.min_degree = d;
        self
    }

    pub fn sigma(&self) -> usize {
        self.parts.iter().map(Vec::len).sum()
    }

    /// All chosen vertices, part by part.
    pub fn chosen(&self) -> Vec<usize> {
        self.parts.iter().flatten().copied().collect()
    }

    fn forced_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, pa) in self.parts.iter().enumerate() {
            for pb in &self.parts[a + 1..] {
                for &u in pa {
                    for &v in pb {
                        out.push((u, v));
                    }
                }
            }
        }
        out
    }

    /// Mask of the positions fixed by the construction: chosen-to-`R`
    /// pairs and forced cross edges.
    fn structured_mask(&self) -> LabeledGraph {
        let mut g = LabeledGraph::empty(self.n).expect("order checked");
        for &u in &self.chosen() {
            for &r in &self.r_set {
                g.set_edge(u, r, true);
            }
        }
        for (u, v) in self.forced_edges() {
            g.set_edge(u, v, true);
        }
        g
    }

    /// Every neighbourhood in `R`, as a mask over positions of `r_set`,
    /// meeting the degree requirement.
    pub fn valid_neighborhoods(&self) -> Vec<u64> {
        let r = self.r_set.len();
        let full = if r == 64 { u64::MAX } else { (1u64 << r) - 1 };
        let mut out = Vec::new();
        // enumerate by missing vertices, few of them in the genuine family
        let max_missing = r.saturating_sub(self.min_degree);
        let mut stack = vec![(0usize, full, 0usize)];
        while let Some((from, mask, missing)) = stack.pop() {
            out.push(mask);
            if missing == max_missing {
                continue;
            }
            for b in from..r {
                stack.push((b + 1, mask & !(1 << b), missing + 1));
            }
        }
        out.sort_unstable_by(|a, b| b.cmp(a));
        out
    }
}

fn check_sizes(n: usize, sizes: &[usize], t: usize) -> Result<usize> {
    if sizes.is_empty() || sizes.contains(&0) || t == 0 {
        return Err(Error::InvalidParameter(
            "part sizes and t must be positive".into(),
        ));
    }
    let sigma: usize = sizes.iter().sum();
    if n < 3 * sigma + t {
        return Err(Error::InvalidParameter(format!(
            "n = {n} is below 3*{sigma} + {t} = {}",
            3 * sigma + t
        )));
    }
    Ok(sigma)
}

/// Exact size of a graph family with the size of its EKR-type rival.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphCount {
    #[serde(serialize_with = "decimal::serialize")]
    pub count: BigUint,
    #[serde(serialize_with = "decimal::serialize")]
    pub ekr_count: BigUint,
    /// `count > ekr_count`.
    pub exceeds: bool,
    /// `t > 2^(2 sigma) - 2 sigma - 1`.
    pub condition_holds: bool,
}

fn pow2(e: u64) -> BigUint {
    BigUint::one() << e
}

fn condition(t: usize, sigma: usize) -> bool {
    // t > 2^(2 sigma) - 2 sigma - 1, rearranged to stay nonnegative
    let lhs = BigUint::from(t + 2 * sigma + 1);
    lhs > pow2(2 * sigma as u64)
}

fn check_count_n(n: usize) -> Result<()> {
    if n > COUNT_MAX_N {
        return Err(Error::InstanceTooLarge(format!(
            "n = {n} exceeds {COUNT_MAX_N}"
        )));
    }
    Ok(())
}

pub fn count_kst_family(n: usize, s: usize, t: usize) -> Result<GraphCount> {
    check_sizes(n, &[s], t)?;
    check_count_n(n)?;
    let all = pairs(n) as u64;
    let (s64, t64) = (s as u64, t as u64);
    let count = BigUint::from(t + 2 * s + 1).pow(s as u32) * pow2(all - s64 * (t64 + 2 * s64));
    let ekr_count = pow2(all - s64 * t64);
    Ok(GraphCount {
        exceeds: count > ekr_count,
        count,
        ekr_count,
        condition_holds: condition(t, s),
    })
}

pub fn count_multipartite_family(n: usize, sizes: &[usize], t: usize) -> Result<GraphCount> {
    let sigma = check_sizes(n, sizes, t)? as u64;
    check_count_n(n)?;
    let all = pairs(n) as u64;
    let mut cross = 0u64;
    for (a, &x) in sizes.iter().enumerate() {
        for &y in &sizes[a + 1..] {
            cross += (x * y) as u64;
        }
    }
    let t64 = t as u64;
    let count = BigUint::from(t64 + 2 * sigma + 1).pow(sigma as u32)
        * pow2(all - sigma * (t64 + 2 * sigma) - cross);
    let ekr_count = pow2(all - cross - sigma * t64);
    Ok(GraphCount {
        exceeds: count > ekr_count,
        count,
        ekr_count,
        condition_holds: condition(t, sigma as usize),
    })
}

/// The member with the given `R`-neighbourhoods (one mask over `r_set`
/// positions per chosen vertex, in `chosen()` order) and free edges.
pub fn member_graph(
    params: &MultipartiteParams,
    neighborhoods: &[u64],
    free_edges: &LabeledGraph,
) -> Result<LabeledGraph> {
    let chosen = params.chosen();
    if neighborhoods.len() != chosen.len() {
        return Err(Error::InvalidParameter(format!(
            "expected {} neighbourhoods, got {}",
            chosen.len(),
            neighborhoods.len()
        )));
    }
    if free_edges.n() != params.n {
        return Err(Error::InvalidParameter("free-edge mask has the wrong order".into()));
    }
    if free_edges.overlaps(&params.structured_mask()) {
        return Err(Error::InvalidParameter(
            "free-edge mask overlaps structured positions".into(),
        ));
    }
    let r = params.r_set.len();
    let mut g = free_edges.clone();
    for (&u, &nb) in chosen.iter().zip(neighborhoods) {
        if r < 64 && nb >> r != 0 {
            return Err(Error::InvalidParameter("neighbourhood leaves R".into()));
        }
        if (nb.count_ones() as usize) < params.min_degree {
            return Err(Error::InvalidParameter(format!(
                "neighbourhood of size {} below {}",
                nb.count_ones(),
                params.min_degree
            )));
        }
        for (b, &v) in params.r_set.iter().enumerate() {
            if nb >> b & 1 == 1 {
                g.set_edge(u, v, true);
            }
        }
    }
    for (u, v) in params.forced_edges() {
        g.set_edge(u, v, true);
    }
    Ok(g)
}

pub fn is_member(params: &MultipartiteParams, g: &LabeledGraph) -> bool {
    if g.n() != params.n {
        return false;
    }
    let degree_ok = params.chosen().iter().all(|&u| {
        params.r_set.iter().filter(|&&v| g.has_edge(u, v)).count() >= params.min_degree
    });
    degree_ok && params.forced_edges().iter().all(|&(u, v)| g.has_edge(u, v))
}

/// Whether the vertices of `s_set` have at least `t` common neighbours
/// outside `s_set`.
pub fn contains_fixed_kst(g: &LabeledGraph, s_set: &[usize], t: usize) -> bool {
    let common = (1..=g.n())
        .filter(|v| !s_set.contains(v))
        .filter(|&v| s_set.iter().all(|&u| g.has_edge(u, v)))
        .count();
    common >= t
}

fn contains_fixed_multipartite(params: &MultipartiteParams, g: &LabeledGraph) -> bool {
    params.forced_edges().iter().all(|&(u, v)| g.has_edge(u, v))
        && contains_fixed_kst(g, &params.chosen(), params.t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum VerifyMode {
    ExhaustiveCore,
    Sampled { pairs: u64, seed: u64 },
}

/// Two members whose intersection lacks the required subgraph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphWitness {
    pub first: String,
    pub second: String,
    /// Common neighbours of all chosen vertices in the intersection.
    pub common: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntersectCheck {
    pub holds: bool,
    pub pairs_checked: u64,
    pub witness: Option<GraphWitness>,
}

fn common_count(g: &LabeledGraph, s_set: &[usize]) -> usize {
    (1..=g.n())
        .filter(|v| !s_set.contains(v))
        .filter(|&v| s_set.iter().all(|&u| g.has_edge(u, v)))
        .count()
}

/// Searches for two members whose intersection misses the fixed complete
/// multipartite graph on the chosen parts and `t` vertices.
pub fn verify_intersecting(
    params: &MultipartiteParams,
    mode: VerifyMode,
    threads: usize,
) -> Result<IntersectCheck> {
    let nbs = params.valid_neighborhoods();
    let sigma = params.sigma() as u32;
    match mode {
        VerifyMode::ExhaustiveCore => {
            let configs = (nbs.len() as u64)
                .checked_pow(sigma)
                .filter(|&c| c <= EXHAUSTIVE_MAX_CONFIGS)
                .ok_or_else(|| {
                    Error::InstanceTooLarge(format!(
                        "{}^{sigma} configurations exceed {EXHAUSTIVE_MAX_CONFIGS}",
                        nbs.len()
                    ))
                })?;
            Ok(exhaustive_core(params, &nbs, configs))
        }
        VerifyMode::Sampled { pairs, seed } => {
            if pairs > SAMPLED_MAX_PAIRS {
                return Err(Error::InstanceTooLarge(format!(
                    "{pairs} sampled pairs exceed {SAMPLED_MAX_PAIRS}"
                )));
            }
            Ok(sampled(params, &nbs, pairs, seed, threads.max(1)))
        }
    }
}

fn decode(mut c: u64, base: u64, sigma: usize, nbs: &[u64]) -> Vec<u64> {
    (0..sigma)
        .map(|_| {
            let x = nbs[(c % base) as usize];
            c /= base;
            x
        })
        .collect()
}

fn exhaustive_core(params: &MultipartiteParams, nbs: &[u64], configs: u64) -> IntersectCheck {
    let sigma = params.sigma();
    let base = nbs.len() as u64;
    let decoded: Vec<Vec<u64>> = (0..configs).map(|c| decode(c, base, sigma, nbs)).collect();
    let mut checked = 0;
    for a in &decoded {
        for b in &decoded {
            checked += 1;
            let common = a
                .iter()
                .zip(b)
                .fold(u64::MAX, |acc, (x, y)| acc & x & y)
                .count_ones() as usize;
            if common < params.t {
                let empty = LabeledGraph::empty(params.n).expect("order checked");
                let g1 = member_graph(params, a, &empty).expect("valid configuration");
                let g2 = member_graph(params, b, &empty).expect("valid configuration");
                let meet = g1.intersection(&g2);
                debug_assert!(!contains_fixed_multipartite(params, &meet));
                return IntersectCheck {
                    holds: false,
                    pairs_checked: checked,
                    witness: Some(GraphWitness {
                        first: g1.to_bit_string(),
                        second: g2.to_bit_string(),
                        common: common_count(&meet, &params.chosen()),
                    }),
                };
            }
        }
    }
    IntersectCheck {
        holds: true,
        pairs_checked: checked,
        witness: None,
    }
}

/// A uniformly random member drawn from `rng`.
pub fn random_member<R: Rng>(params: &MultipartiteParams, nbs: &[u64], rng: &mut R) -> LabeledGraph {
    let structured = params.structured_mask();
    let mut free = LabeledGraph::empty(params.n).expect("order checked");
    for i in 1..=params.n {
        for j in i + 1..=params.n {
            if !structured.has_edge(i, j) && rng.gen::<bool>() {
                free.set_edge(i, j, true);
            }
        }
    }
    let choice: Vec<u64> = (0..params.sigma())
        .map(|_| nbs[rng.gen_range(0..nbs.len())])
        .collect();
    member_graph(params, &choice, &free).expect("valid configuration")
}

fn sample_pair(params: &MultipartiteParams, nbs: &[u64], seed: u64, index: u64) -> (LabeledGraph, LabeledGraph) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (random_member(params, nbs, &mut rng), random_member(params, nbs, &mut rng))
}

fn sampled(params: &MultipartiteParams, nbs: &[u64], pairs: u64, seed: u64, threads: usize) -> IntersectCheck {
    // each pair has its own stream, so the first failing index does not
    // depend on how pairs are split between threads
    let first_bad = AtomicU64::new(u64::MAX);
    let next = AtomicU64::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= pairs || i > first_bad.load(Ordering::Relaxed) {
                    break;
                }
                let (a, b) = sample_pair(params, nbs, seed, i);
                if !contains_fixed_multipartite(params, &a.intersection(&b)) {
                    first_bad.fetch_min(i, Ordering::Relaxed);
                }
            });
        }
    });
    let bad = first_bad.into_inner();
    if bad == u64::MAX {
        return IntersectCheck {
            holds: true,
            pairs_checked: pairs,
            witness: None,
        };
    }
    let (a, b) = sample_pair(params, nbs, seed, bad);
    let common = common_count(&a.intersection(&b), &params.chosen());
    IntersectCheck {
        holds: false,
        pairs_checked: bad + 1,
        witness: Some(GraphWitness {
            first: a.to_bit_string(),
            second: b.to_bit_string(),
            common,
        }),
    }
}
