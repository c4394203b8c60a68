//! Intersection properties of explicit families, and family isomorphism.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::setcore::{intersect_all, ElementSet, Permutation, SetFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    /// At most `d` members meeting in fewer than `t` points.
    Tuple,
    /// The whole family shares at least `t` points.
    Triviality,
    /// An `m`-subset meeting in fewer than `t + d - m` points.
    Lemma,
}

/// Evidence for a failed property; re-evaluating it reproduces the failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViolationWitness {
    pub kind: WitnessKind,
    pub sets: Vec<ElementSet>,
    pub intersection_size: usize,
    /// The size the intersection needed to reach.
    pub required: usize,
}

impl ViolationWitness {
    /// Recomputes the intersection and confirms it is too small.
    pub fn replays(&self) -> bool {
        match intersect_all(&self.sets) {
            Ok(s) => s.len() == self.intersection_size && s.len() < self.required,
            Err(_) => false,
        }
    }
}

/// Outcome of a property check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub holds: bool,
    pub witness: Option<ViolationWitness>,
}

impl Check {
    fn pass() -> Self {
        Self {
            holds: true,
            witness: None,
        }
    }

    fn fail(w: ViolationWitness) -> Self {
        Self {
            holds: false,
            witness: Some(w),
        }
    }
}

/// Distinct intersections of member subsets, each with the smallest subset
/// size producing it and one such subset.
struct LevelMap {
    index: HashMap<u128, usize>,
    entries: Vec<(u128, usize, Vec<usize>)>,
}

impl LevelMap {
    fn new() -> Self {
        Self {
            index: HashMap::new(),
            entries: Vec::new(),
        }
    }

    fn offer(&mut self, mask: u128, level: usize, rep: Vec<usize>) {
        match self.index.get(&mask) {
            Some(&at) => {
                if self.entries[at].1 > level {
                    self.entries[at].1 = level;
                    self.entries[at].2 = rep;
                }
            }
            None => {
                self.index.insert(mask, self.entries.len());
                self.entries.push((mask, level, rep));
            }
        }
    }

    /// Adds member `i`, recording every subset containing it up to `max_level`.
    fn absorb(&mut self, i: usize, x: u128, max_level: usize) {
        if max_level == 0 {
            return;
        }
        let mut fresh = vec![(x, 1, vec![i])];
        if max_level >= 2 {
            for (w, lvl, rep) in &self.entries {
                if *lvl < max_level {
                    let mut r = rep.clone();
                    r.push(i);
                    fresh.push((w & x, lvl + 1, r));
                }
            }
        }
        for (m, l, r) in fresh {
            self.offer(m, l, r);
        }
    }
}

/// Whether every `d` members (repetition allowed) share at least `t` points.
///
/// A reported witness is the violating subset whose largest member index is
/// smallest; it is deterministic.
pub fn is_d_wise_t_intersecting(family: &SetFamily, d: usize, t: usize) -> Check {
    let ms = family.members();
    let mut levels = LevelMap::new();
    for (i, x) in ms.iter().enumerate() {
        if x.len() < t {
            return Check::fail(ViolationWitness {
                kind: WitnessKind::Tuple,
                sets: vec![*x],
                intersection_size: x.len(),
                required: t,
            });
        }
        if d >= 2 {
            for (w, lvl, rep) in &levels.entries {
                if *lvl < d && ((w & x.bits()).count_ones() as usize) < t {
                    let mut sets: Vec<ElementSet> = rep.iter().map(|&j| ms[j]).collect();
                    sets.push(*x);
                    return Check::fail(ViolationWitness {
                        kind: WitnessKind::Tuple,
                        sets,
                        intersection_size: (w & x.bits()).count_ones() as usize,
                        required: t,
                    });
                }
            }
        }
        levels.absorb(i, x.bits(), d.saturating_sub(1));
    }
    Check::pass()
}

/// Whether the whole family shares fewer than `t` points.
pub fn is_nontrivial(family: &SetFamily, t: usize) -> Result<bool> {
    Ok(family.global_intersection()?.len() < t)
}

/// Triviality as a witness-bearing check.
pub fn nontriviality_check(family: &SetFamily, t: usize) -> Result<Check> {
    let g = family.global_intersection()?;
    if g.len() < t {
        Ok(Check::pass())
    } else {
        Ok(Check::fail(ViolationWitness {
            kind: WitnessKind::Triviality,
            sets: family.members().to_vec(),
            intersection_size: g.len(),
            required: t,
        }))
    }
}

/// For a nontrivial d-wise t-intersecting family, checks that every
/// `m <= d` members share at least `t + d - m` points.
pub fn check_m_wise_lemma(family: &SetFamily, d: usize, t: usize) -> Result<Check> {
    if family.is_empty() {
        return Err(Error::LemmaHypothesis("family is empty".into()));
    }
    if !is_d_wise_t_intersecting(family, d, t).holds {
        return Err(Error::LemmaHypothesis(format!(
            "family is not {d}-wise {t}-intersecting"
        )));
    }
    if !is_nontrivial(family, t)? {
        return Err(Error::LemmaHypothesis(format!(
            "family is trivial (global intersection has >= {t} points)"
        )));
    }
    let ms = family.members();
    let mut levels = LevelMap::new();
    for (i, x) in ms.iter().enumerate() {
        levels.absorb(i, x.bits(), d);
    }
    // each mask at its smallest level carries the strongest requirement
    let mut worst: Option<&(u128, usize, Vec<usize>)> = None;
    for e in &levels.entries {
        let (mask, lvl, _) = e;
        let need = t + d - lvl;
        if (mask.count_ones() as usize) < need {
            let better = match worst {
                None => true,
                Some((_, wl, wr)) => (lvl, &e.2) < (wl, wr),
            };
            if better {
                worst = Some(e);
            }
        }
    }
    Ok(match worst {
        None => Check::pass(),
        Some((mask, lvl, rep)) => Check::fail(ViolationWitness {
            kind: WitnessKind::Lemma,
            sets: rep.iter().map(|&j| ms[j]).collect(),
            intersection_size: mask.count_ones() as usize,
            required: t + d - lvl,
        }),
    })
}

/// Largest ground set accepted by the canonicalizer.
pub const CANON_LIMIT: usize = 16;

struct Canonizer<'a> {
    n: usize,
    members: &'a [ElementSet],
    codeg: Vec<Vec<u32>>,
    first: Option<Leaf>,
    best: Option<Leaf>,
    generators: Vec<Vec<usize>>,
}

#[derive(Clone)]
struct Leaf {
    image: Vec<u128>,
    /// `labels[x]` is the new 0-based position of element `x`.
    labels: Vec<usize>,
    path: Vec<usize>,
}

type Partition = Vec<Vec<usize>>;

impl<'a> Canonizer<'a> {
    fn new(family: &'a SetFamily) -> Self {
        let n = family.n();
        let mut codeg = vec![vec![0u32; n]; n];
        for m in family {
            let els: Vec<usize> = m.elements().map(|e| e - 1).collect();
            for &a in &els {
                for &b in &els {
                    codeg[a][b] += 1;
                }
            }
        }
        Self {
            n,
            members: family.members(),
            codeg,
            first: None,
            best: None,
            generators: Vec::new(),
        }
    }

    /// Splits cells until element signatures are constant on each cell.
    /// Signatures depend only on the structure and the cell order, so the
    /// result is equivariant under relabeling.
    fn refine(&self, mut part: Partition) -> Partition {
        loop {
            let mut cell_of = vec![0usize; self.n];
            for (c, cell) in part.iter().enumerate() {
                for &x in cell {
                    cell_of[x] = c;
                }
            }
            let member_sig: Vec<Vec<u16>> = self
                .members
                .iter()
                .map(|m| {
                    let mut v = vec![0u16; part.len()];
                    for e in m.elements() {
                        v[cell_of[e - 1]] += 1;
                    }
                    v
                })
                .collect();
            let mut incident: Vec<Vec<&Vec<u16>>> = vec![Vec::new(); self.n];
            for (m, sig) in self.members.iter().zip(&member_sig) {
                for e in m.elements() {
                    incident[e - 1].push(sig);
                }
            }
            let signature = |x: usize| -> (Vec<Vec<u32>>, Vec<&Vec<u16>>) {
                let co: Vec<Vec<u32>> = part
                    .iter()
                    .map(|cell| {
                        let mut v: Vec<u32> = cell
                            .iter()
                            .filter(|&&y| y != x)
                            .map(|&y| self.codeg[x][y])
                            .collect();
                        v.sort_unstable();
                        v
                    })
                    .collect();
                let mut inc = incident[x].clone();
                inc.sort_unstable();
                (co, inc)
            };
            let mut next: Partition = Vec::with_capacity(self.n);
            for cell in &part {
                if cell.len() == 1 {
                    next.push(cell.clone());
                    continue;
                }
                let mut keyed: Vec<(_, usize)> = cell.iter().map(|&x| (signature(x), x)).collect();
                keyed.sort();
                let mut start = 0;
                for i in 1..=keyed.len() {
                    if i == keyed.len() || keyed[i].0 != keyed[start].0 {
                        let piece: Vec<usize> = keyed[start..i].iter().map(|p| p.1).collect();
                        next.push(piece);
                        start = i;
                    }
                }
            }
            let stable = next.len() == part.len();
            part = next;
            if stable {
                return part;
            }
        }
    }

    fn orbit_root(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut y = x;
        while parent[y] != r {
            let nxt = parent[y];
            parent[y] = r;
            y = nxt;
        }
        r
    }

    /// Orbits of the group generated by the known automorphisms that fix
    /// `path` pointwise.
    fn orbits_fixing(&self, path: &[usize]) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        for g in &self.generators {
            if path.iter().all(|&p| g[p] == p) {
                for x in 0..self.n {
                    let a = Self::orbit_root(&mut parent, x);
                    let b = Self::orbit_root(&mut parent, g[x]);
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        (0..self.n)
            .map(|x| Self::orbit_root(&mut parent, x))
            .collect()
    }

    fn leaf(&mut self, part: &Partition, path: &[usize]) -> Option<usize> {
        let mut labels = vec![0usize; self.n];
        for (pos, cell) in part.iter().enumerate() {
            labels[cell[0]] = pos;
        }
        let mut image: Vec<u128> = self
            .members
            .iter()
            .map(|m| {
                let mut b = 0u128;
                for e in m.elements() {
                    b |= 1u128 << labels[e - 1];
                }
                b
            })
            .collect();
        image.sort_unstable();
        let leaf = Leaf {
            image,
            labels,
            path: path.to_vec(),
        };
        let Some(first) = &self.first else {
            self.first = Some(leaf.clone());
            self.best = Some(leaf);
            return None;
        };
        let common = |a: &[usize], b: &[usize]| a.iter().zip(b).take_while(|(x, y)| x == y).count();
        if first.image == leaf.image {
            let g = automorphism(&first.labels, &leaf.labels);
            let depth = common(&first.path, path);
            self.generators.push(g);
            return Some(depth);
        }
        let best = self.best.as_ref().expect("set with first");
        match leaf.image.cmp(&best.image) {
            std::cmp::Ordering::Equal => {
                let g = automorphism(&best.labels, &leaf.labels);
                let depth = common(&best.path, path);
                self.generators.push(g);
                Some(depth)
            }
            std::cmp::Ordering::Less => {
                self.best = Some(leaf);
                None
            }
            std::cmp::Ordering::Greater => None,
        }
    }

    /// Returns `Some(depth)` to unwind to the node at that depth.
    fn search(&mut self, part: Partition, path: &mut Vec<usize>) -> Option<usize> {
        let part = self.refine(part);
        let Some(target) = part.iter().position(|c| c.len() > 1) else {
            return self.leaf(&part, path);
        };
        let depth = path.len();
        let mut explored: Vec<usize> = Vec::new();
        let cell = part[target].clone();
        for &v in &cell {
            if !explored.is_empty() {
                let orbits = self.orbits_fixing(path);
                if explored.iter().any(|&u| orbits[u] == orbits[v]) {
                    continue;
                }
            }
            let mut child = Vec::with_capacity(part.len() + 1);
            child.extend(part[..target].iter().cloned());
            child.push(vec![v]);
            child.push(cell.iter().copied().filter(|&x| x != v).collect());
            child.extend(part[target + 1..].iter().cloned());
            path.push(v);
            let res = self.search(child, path);
            path.pop();
            explored.push(v);
            if let Some(lvl) = res {
                if lvl < depth {
                    return Some(lvl);
                }
            }
        }
        None
    }
}

/// `g = first^{-1} . current`, mapping the structure onto itself.
fn automorphism(first: &[usize], current: &[usize]) -> Vec<usize> {
    let n = first.len();
    let mut inv = vec![0usize; n];
    for (x, &p) in first.iter().enumerate() {
        inv[p] = x;
    }
    (0..n).map(|x| inv[current[x]]).collect()
}

/// A canonical relabeling: the returned permutation maps `family` onto the
/// returned canonical family.
pub fn canonical_labeling(family: &SetFamily) -> Result<(SetFamily, Permutation)> {
    let n = family.n();
    if n > CANON_LIMIT {
        return Err(Error::CanonicalizationLimit(n));
    }
    if family.is_empty() {
        return Ok((family.clone(), Permutation::identity(n)));
    }
    let mut canon = Canonizer::new(family);
    let mut path = Vec::new();
    canon.search(vec![(0..n).collect()], &mut path);
    let best = canon.best.expect("search reaches at least one leaf");
    let perm = Permutation::from_images(best.labels)?;
    let out = family.permute(&perm)?;
    Ok((out, perm))
}

/// Permutation-invariant representative of the isomorphism class, `n <= 16`.
pub fn canonical_form(family: &SetFamily) -> Result<SetFamily> {
    Ok(canonical_labeling(family)?.0)
}

/// A permutation `pi` with `pi . f1 = f2`, if one exists. The witness is
/// re-applied before it is returned.
pub fn are_isomorphic(f1: &SetFamily, f2: &SetFamily) -> Result<Option<Permutation>> {
    if f1.n() != f2.n() {
        return Err(Error::GroundSizeMismatch {
            expected: f1.n(),
            found: f2.n(),
        });
    }
    if f1.n() > CANON_LIMIT {
        return Err(Error::CanonicalizationLimit(f1.n()));
    }
    if f1.len() != f2.len() {
        return Ok(None);
    }
    let mut sizes1: Vec<usize> = f1.iter().map(|m| m.len()).collect();
    let mut sizes2: Vec<usize> = f2.iter().map(|m| m.len()).collect();
    sizes1.sort_unstable();
    sizes2.sort_unstable();
    if sizes1 != sizes2 {
        return Ok(None);
    }
    let (c1, l1) = canonical_labeling(f1)?;
    let (c2, l2) = canonical_labeling(f2)?;
    if c1.members() != c2.members() {
        return Ok(None);
    }
    let pi = l2.inverse().after(&l1);
    let mapped = f1.permute(&pi)?;
    if mapped.members() != f2.members() {
        return Err(Error::InvalidParameter(
            "isomorphism witness failed to replay".into(),
        ));
    }
    Ok(Some(pi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{build, FamilySpec};

    fn fam(n: usize, sets: &[&[usize]]) -> SetFamily {
        let members = sets
            .iter()
            .map(|s| ElementSet::from_elements(n, s).unwrap())
            .collect();
        SetFamily::from_unsorted(n, None, members).unwrap().0
    }

    #[test]
    fn star_is_intersecting_and_trivial() {
        let star = build(&FamilySpec::Star { n: 7, k: 4, t: 2 }).unwrap();
        assert!(is_d_wise_t_intersecting(&star, 3, 2).holds);
        assert!(!is_nontrivial(&star, 2).unwrap());
        assert!(matches!(
            check_m_wise_lemma(&star, 3, 2),
            Err(Error::LemmaHypothesis(_))
        ));
    }

    #[test]
    fn triangle_fails_with_empty_witness() {
        let f = fam(5, &[&[1, 2, 3], &[1, 4, 5], &[2, 4, 5]]);
        let c = is_d_wise_t_intersecting(&f, 3, 1);
        assert!(!c.holds);
        let w = c.witness.unwrap();
        assert_eq!(w.intersection_size, 0);
        assert_eq!(w.sets.len(), 3);
        assert!(w.replays());
        // but it is pairwise intersecting
        assert!(is_d_wise_t_intersecting(&f, 2, 1).holds);
    }

    #[test]
    fn small_and_empty_families() {
        let empty = SetFamily::empty(4, Some(2)).unwrap();
        assert!(is_d_wise_t_intersecting(&empty, 3, 1).holds);
        assert!(matches!(is_nontrivial(&empty, 1), Err(Error::EmptyFamily)));
        let one = fam(4, &[&[1]]);
        assert!(is_d_wise_t_intersecting(&one, 5, 1).holds);
        assert!(!is_d_wise_t_intersecting(&one, 5, 2).holds);
        // two members meeting in one point, d larger than the family
        let two = fam(4, &[&[1, 2], &[2, 3]]);
        assert!(is_d_wise_t_intersecting(&two, 4, 1).holds);
        assert!(!is_d_wise_t_intersecting(&two, 4, 2).holds);
    }

    #[test]
    fn m_family_headline() {
        let m = build(&FamilySpec::M { n: 11, k: 7, d: 3, r: 3 }).unwrap();
        assert!(is_d_wise_t_intersecting(&m, 3, 1).holds);
        assert!(is_nontrivial(&m, 1).unwrap());
        assert!(check_m_wise_lemma(&m, 3, 1).unwrap().holds);
        let h = build(&FamilySpec::H { n: 9, k: 5, d: 3 }).unwrap();
        assert!(is_nontrivial(&h, 1).unwrap());
    }

    #[test]
    fn lemma_pairwise_on_a() {
        let a = build(&FamilySpec::A { n: 10, k: 5, d: 3 }).unwrap();
        assert!(check_m_wise_lemma(&a, 3, 1).unwrap().holds);
        assert!(is_d_wise_t_intersecting(&a, 2, 2).holds);
    }

    #[test]
    fn isomorphism_examples() {
        let m = build(&FamilySpec::M { n: 9, k: 5, d: 3, r: 2 }).unwrap();
        let t = build(&FamilySpec::T { n: 9, k: 5, d: 3, r: 1 }).unwrap();
        let pi = are_isomorphic(&m, &t).unwrap().expect("isomorphic");
        assert_eq!(m.permute(&pi).unwrap(), t);
        let a = build(&FamilySpec::A { n: 9, k: 5, d: 3 }).unwrap();
        let h = build(&FamilySpec::H { n: 9, k: 5, d: 3 }).unwrap();
        assert!(are_isomorphic(&a, &h).unwrap().is_none());
    }

    #[test]
    fn canonical_limits() {
        let big = fam(17, &[&[1]]);
        assert!(matches!(
            canonical_form(&big),
            Err(Error::CanonicalizationLimit(17))
        ));
        let other = fam(5, &[&[1]]);
        assert!(are_isomorphic(&fam(4, &[&[1]]), &other).is_err());
    }

    #[test]
    fn symmetric_star_canonicalizes_fast() {
        let star = build(&FamilySpec::Star { n: 16, k: 8, t: 2 }).unwrap();
        let rev = Permutation::from_images((0..16).rev().collect()).unwrap();
        let moved = star.permute(&rev).unwrap();
        assert_eq!(canonical_form(&star).unwrap(), canonical_form(&moved).unwrap());
    }
}
