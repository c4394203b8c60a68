//! Exact maximum nontrivial d-wise t-intersecting subfamilies of `C([n],k)`.
//!
//! The branch and bound treats the k-sets as vertices of a compatibility
//! graph and grows families clique-style. Every reachable family is kept
//! d-wise t-intersecting by filtering the candidate set against the stored
//! intersections of small member subsets; those intersections also induce
//! extra pairwise conflicts that sharpen the colouring bound.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::constructions::{all_specs, build};
use crate::counting::choose;
use crate::error::{Error, Result};
use crate::setcore::{
    enumerate_k_subsets, format_family, parse_family, ElementSet, Permutation, SetFamily,
};
use crate::verify::{is_d_wise_t_intersecting, is_nontrivial};

/// Largest ground set the search accepts.
pub const SEARCH_MAX_N: usize = 20;
/// Largest candidate universe for [`branch_and_bound_max`].
pub const BNB_MAX_CANDIDATES: usize = 500;
/// Largest candidate universe for [`brute_force_max`].
pub const BRUTE_MAX_CANDIDATES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchProblem {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub t: usize,
    pub require_nontrivial: bool,
    pub node_budget: Option<u64>,
}

impl SearchProblem {
    pub fn new(n: usize, k: usize, d: usize, t: usize, require_nontrivial: bool) -> Result<Self> {
        let p = Self {
            n,
            k,
            d,
            t,
            require_nontrivial,
            node_budget: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_budget(mut self, nodes: u64) -> Self {
        self.node_budget = Some(nodes);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let Self { n, k, d, t, .. } = *self;
        if d < 2 || t < 1 || t + d - 1 > k || k >= n || n > SEARCH_MAX_N {
            return Err(Error::InvalidParameter(format!(
                "search needs 2 <= d, 1 <= t, t+d-1 <= k < n <= {SEARCH_MAX_N}; got n={n} k={k} d={d} t={t}"
            )));
        }
        Ok(())
    }

    fn candidates(&self) -> usize {
        choose(self.n as u64, self.k as u64)
            .try_into()
            .unwrap_or(usize::MAX)
    }

    fn describe(&self) -> String {
        format!(
            "n={} k={} d={} t={} nontrivial={}",
            self.n, self.k, self.d, self.t, self.require_nontrivial
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Optimal,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchResult {
    pub best_size: usize,
    #[serde(skip)]
    pub witness: SetFamily,
    pub status: SearchStatus,
    pub nodes: u64,
    /// `(size, node index)` each time the incumbent improved.
    pub incumbent_history: Vec<(usize, u64)>,
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub threads: usize,
    /// Start from the largest valid named construction.
    pub seed_constructions: bool,
    /// Relabel the ground set before building the candidate order.
    pub relabel: Option<Permutation>,
    /// Where to write progress checkpoints.
    pub checkpoint: Option<PathBuf>,
    pub checkpoint_interval: Duration,
    pub resume: Option<Checkpoint>,
    /// Wall-clock limit; reaching it ends the run like an exhausted budget.
    pub time_limit: Option<Duration>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            threads: 1,
            seed_constructions: true,
            relabel: None,
            checkpoint: None,
            checkpoint_interval: Duration::from_secs(30),
            resume: None,
            time_limit: None,
        }
    }
}

/// Saved progress of an interrupted run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Checkpoint {
    pub problem: SearchProblem,
    pub completed: BTreeSet<(usize, usize)>,
    pub nodes: u64,
    pub best: SetFamily,
}

const CHECKPOINT_MAGIC: &str = "ekrw-checkpoint 1";

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let p = &self.problem;
        let mut s = String::new();
        let _ = writeln!(s, "{CHECKPOINT_MAGIC}");
        let _ = writeln!(
            s,
            "problem {} {} {} {} {}",
            p.n, p.k, p.d, p.t, p.require_nontrivial as u8
        );
        let _ = writeln!(s, "nodes {}", self.nodes);
        let _ = writeln!(s, "best {}", self.best.len());
        let done: Vec<String> = self
            .completed
            .iter()
            .map(|(j, i)| format!("{j}:{i}"))
            .collect();
        let _ = writeln!(s, "completed {}", done.join(" "));
        let _ = writeln!(s, "family");
        s.push_str(&format_family(&self.best));
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, m: &str| Error::Parse {
            line,
            message: m.to_string(),
        };
        let lines: Vec<&str> = text.lines().collect();
        if lines.first().map(|l| l.trim()) != Some(CHECKPOINT_MAGIC) {
            return Err(bad(1, "missing checkpoint header"));
        }
        let field = |idx: usize, key: &str| -> Result<&str> {
            let l = lines.get(idx).ok_or_else(|| bad(idx + 1, "truncated checkpoint"))?;
            l.strip_prefix(key)
                .map(str::trim)
                .ok_or_else(|| bad(idx + 1, &format!("expected '{key}'")))
        };
        let nums: Vec<usize> = field(1, "problem")?
            .split_whitespace()
            .map(|x| x.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(2, "bad problem line"))?;
        if nums.len() != 5 {
            return Err(bad(2, "problem line needs n k d t nontrivial"));
        }
        let problem = SearchProblem::new(nums[0], nums[1], nums[2], nums[3], nums[4] != 0)?;
        let nodes = field(2, "nodes")?
            .parse()
            .map_err(|_| bad(3, "bad node count"))?;
        let best_len: usize = field(3, "best")?
            .parse()
            .map_err(|_| bad(4, "bad best size"))?;
        let mut completed = BTreeSet::new();
        for item in field(4, "completed")?.split_whitespace() {
            let (a, b) = item.split_once(':').ok_or_else(|| bad(5, "bad task id"))?;
            let j = a.parse().map_err(|_| bad(5, "bad task id"))?;
            let i = b.parse().map_err(|_| bad(5, "bad task id"))?;
            completed.insert((j, i));
        }
        if !field(5, "family")?.is_empty() {
            return Err(bad(6, "expected 'family'"));
        }
        let body: String = lines[6..].iter().map(|l| format!("{l}\n")).collect();
        let best = parse_family(&body)
            .map_err(|e| match e {
                Error::Parse { line, message } => Error::Parse {
                    line: line + 6,
                    message,
                },
                other => other,
            })?
            .family;
        if best.len() != best_len || best.n() != problem.n {
            return Err(bad(4, "embedded family disagrees with header"));
        }
        Ok(Self {
            problem,
            completed,
            nodes,
            best,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_text())?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }
}

fn family_from_masks(n: usize, k: usize, masks: &[u32]) -> SetFamily {
    let members = masks
        .iter()
        .map(|&m| ElementSet::from_bits(n, m as u128).expect("mask within ground set"))
        .collect();
    SetFamily::from_unsorted(n, Some(k), members)
        .expect("candidates are k-sets")
        .0
}

fn certify(problem: &SearchProblem, witness: &SetFamily) -> Result<()> {
    if !is_d_wise_t_intersecting(witness, problem.d, problem.t).holds {
        return Err(Error::InvalidParameter(
            "search witness is not d-wise t-intersecting".into(),
        ));
    }
    if problem.require_nontrivial && !witness.is_empty() && !is_nontrivial(witness, problem.t)? {
        return Err(Error::InvalidParameter("search witness is trivial".into()));
    }
    Ok(())
}

fn acceptable(problem: &SearchProblem, size: usize, global: u32) -> bool {
    size > 0 && (!problem.require_nontrivial || (global.count_ones() as usize) < problem.t)
}

/// Exhaustive search over all subfamilies; returns the lexicographically
/// least optimum (member masks compared in sorted order).
pub fn brute_force_max(problem: &SearchProblem) -> Result<SearchResult> {
    problem.validate()?;
    let total = problem.candidates();
    if total > BRUTE_MAX_CANDIDATES {
        return Err(Error::InstanceTooLarge(format!(
            "brute force needs C(n,k) <= {BRUTE_MAX_CANDIDATES}, got {total}"
        )));
    }
    let cands: Vec<u32> = enumerate_k_subsets(problem.n, problem.k)?
        .map(|s| s.bits() as u32)
        .collect();
    struct State<'a> {
        p: &'a SearchProblem,
        cands: &'a [u32],
        best: Vec<u32>,
        history: Vec<(usize, u64)>,
        nodes: u64,
    }
    // `inter` holds each distinct intersection of at most d-1 members with
    // the smallest number of members producing it
    fn rec(s: &mut State, from: usize, fam: &mut Vec<u32>, inter: &[(u32, usize)], global: u32) {
        s.nodes += 1;
        if acceptable(s.p, fam.len(), global) && fam.len() > s.best.len() {
            s.best = fam.clone();
            s.history.push((fam.len(), s.nodes));
        }
        for i in from..s.cands.len() {
            if fam.len() + (s.cands.len() - i) <= s.best.len() {
                return;
            }
            let y = s.cands[i];
            let ok = inter
                .iter()
                .all(|&(m, l)| l >= s.p.d || (m & y).count_ones() as usize >= s.p.t);
            if !ok {
                continue;
            }
            let mut next: Vec<(u32, usize)> = inter.to_vec();
            let add = |m: u32, l: usize, next: &mut Vec<(u32, usize)>| {
                if l >= s.p.d {
                    return;
                }
                match next.iter_mut().find(|e| e.0 == m) {
                    Some(e) => e.1 = e.1.min(l),
                    None => next.push((m, l)),
                }
            };
            for &(m, l) in inter {
                add(m & y, l + 1, &mut next);
            }
            add(y, 1, &mut next);
            fam.push(y);
            rec(s, i + 1, fam, &next, global & y);
            fam.pop();
        }
    }
    let mut s = State {
        p: problem,
        cands: &cands,
        best: Vec::new(),
        history: Vec::new(),
        nodes: 0,
    };
    let full = ((1u64 << problem.n) - 1) as u32;
    rec(&mut s, 0, &mut Vec::new(), &[], full);
    let witness = family_from_masks(problem.n, problem.k, &s.best);
    certify(problem, &witness)?;
    Ok(SearchResult {
        best_size: witness.len(),
        witness,
        status: SearchStatus::Optimal,
        nodes: s.nodes,
        incumbent_history: s.history,
    })
}

const WORDS: usize = 8;

#[derive(Clone, Copy, PartialEq, Eq)]
struct Bits([u64; WORDS]);

impl Bits {
    const EMPTY: Bits = Bits([0; WORDS]);

    fn first_n(n: usize) -> Self {
        let mut b = Self::EMPTY;
        for i in 0..n {
            b.set(i);
        }
        b
    }

    #[inline]
    fn set(&mut self, i: usize) {
        self.0[i >> 6] |= 1 << (i & 63);
    }

    #[inline]
    fn contains(&self, i: usize) -> bool {
        self.0[i >> 6] >> (i & 63) & 1 == 1
    }

    #[inline]
    fn clear(&mut self, i: usize) {
        self.0[i >> 6] &= !(1 << (i & 63));
    }

    #[inline]
    fn and(&self, o: &Self) -> Self {
        let mut r = *self;
        for w in 0..WORDS {
            r.0[w] &= o.0[w];
        }
        r
    }

    #[inline]
    fn and_not(&self, o: &Self) -> Self {
        let mut r = *self;
        for w in 0..WORDS {
            r.0[w] &= !o.0[w];
        }
        r
    }

    #[inline]
    fn or_assign(&mut self, o: &Self) {
        for w in 0..WORDS {
            self.0[w] |= o.0[w];
        }
    }

    #[inline]
    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    #[inline]
    fn first(&self) -> Option<usize> {
        for w in 0..WORDS {
            if self.0[w] != 0 {
                return Some(w * 64 + self.0[w].trailing_zeros() as usize);
            }
        }
        None
    }

    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..WORDS).flat_map(move |w| {
            let mut x = self.0[w];
            std::iter::from_fn(move || {
                if x == 0 {
                    None
                } else {
                    let i = x.trailing_zeros() as usize;
                    x &= x - 1;
                    Some(w * 64 + i)
                }
            })
        })
    }
}

/// Read-only data shared by all workers.
struct Universe {
    p: SearchProblem,
    cands: Vec<u32>,
    branches: Vec<Branch>,
}

/// Root of the subtree where `[k]` and a representative partner meeting it
/// in `j` points are the pair of largest intersection.
struct Branch {
    j: usize,
    fixed: [usize; 2],
    /// Conflicts once the fixed pair is placed.
    conf: Vec<Bits>,
    /// Root tasks: a vertex, its colour, and the candidates left beside it.
    roots: Vec<(usize, usize, Bits)>,
    atoms: Vec<u32>,
}

/// Splits each atom by membership in `y`.
fn refine_atoms(atoms: &[u32], y: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(atoms.len() + 4);
    for &a in atoms {
        for part in [a & y, a & !y] {
            if part != 0 {
                out.push(part);
            }
        }
    }
    out
}

/// Orbits of the candidates under the permutations that fix every atom
/// setwise; `None` when that group is trivial.
struct Orbits {
    atoms: Vec<u32>,
    classes: HashMap<u128, Bits>,
}

impl Orbits {
    fn new(atoms: &[u32], cands: &[u32], within: &Bits) -> Option<Self> {
        if atoms.iter().all(|a| a.count_ones() == 1) {
            return None;
        }
        let mut o = Self {
            atoms: atoms.iter().copied().filter(|a| a.count_ones() > 1).collect(),
            classes: HashMap::new(),
        };
        for y in within.ones() {
            let key = o.key(cands[y]);
            o.classes.entry(key).or_insert(Bits::EMPTY).set(y);
        }
        Some(o)
    }

    fn key(&self, y: u32) -> u128 {
        let mut key = y as u128;
        for (i, &a) in self.atoms.iter().enumerate() {
            key |= ((y & a).count_ones() as u128) << (32 + 5 * i);
            key &= !(a as u128);
        }
        key
    }

    fn class(&self, y: u32) -> Bits {
        self.classes.get(&self.key(y)).copied().unwrap_or(Bits::EMPTY)
    }
}

struct Shared {
    best: AtomicUsize,
    nodes: AtomicU64,
    stop: AtomicBool,
    next_task: AtomicUsize,
    budget: Option<u64>,
    deadline: Option<Instant>,
    incumbent: Mutex<Incumbent>,
    problem: SearchProblem,
    checkpoint: Option<PathBuf>,
    checkpoint_interval: Duration,
    checkpoint_error: Mutex<Option<Error>>,
}

struct Incumbent {
    witness: Vec<u32>,
    history: Vec<(usize, u64)>,
    completed: BTreeSet<(usize, usize)>,
    last_checkpoint: Instant,
}

impl Shared {
    fn offer(&self, fam: &[u32], node: u64) {
        if fam.len() <= self.best.load(Ordering::Relaxed) {
            return;
        }
        let mut inc = self.incumbent.lock().expect("incumbent lock");
        if fam.len() > inc.witness.len() {
            inc.witness = fam.to_vec();
            inc.history.push((fam.len(), node));
            self.best.store(fam.len(), Ordering::Relaxed);
        }
    }

    fn write_checkpoint(&self, inc: &Incumbent) -> Result<()> {
        if let Some(path) = &self.checkpoint {
            let cp = Checkpoint {
                problem: self.problem,
                completed: inc.completed.clone(),
                nodes: self.nodes.load(Ordering::Relaxed),
                best: family_from_masks(self.problem.n, self.problem.k, &inc.witness),
            };
            cp.write(path)?;
        }
        Ok(())
    }

    /// Writes a checkpoint once the interval has passed. Safe mid-task: an
    /// unfinished root task is simply not listed as completed.
    fn maybe_checkpoint(&self, inc: &mut Incumbent) {
        if self.checkpoint.is_none() || inc.last_checkpoint.elapsed() < self.checkpoint_interval {
            return;
        }
        inc.last_checkpoint = Instant::now();
        if let Err(e) = self.write_checkpoint(inc) {
            *self.checkpoint_error.lock().expect("error lock") = Some(e);
            self.stop.store(true, Ordering::Relaxed);
        }
    }
}

struct Worker<'a> {
    uni: &'a Universe,
    sh: &'a Shared,
    kill_cache: HashMap<u32, Bits>,
    /// Smallest member count known for each intersection mask on the current
    /// path; `u8::MAX` when absent.
    level: Vec<u8>,
    undo: Vec<(u32, u8)>,
    /// Masks of level at most d-2, which can still grow by two members.
    ext: Vec<(u32, u8)>,
    family: Vec<usize>,
    pending_nodes: u64,
}

impl<'a> Worker<'a> {
    fn new(uni: &'a Universe, sh: &'a Shared) -> Self {
        Self {
            uni,
            sh,
            kill_cache: HashMap::new(),
            level: vec![u8::MAX; 1 << uni.p.n],
            undo: Vec::new(),
            ext: Vec::new(),
            family: Vec::new(),
            pending_nodes: 0,
        }
    }

    /// Candidates meeting `mask` in fewer than `t` points.
    fn kill(&mut self, mask: u32) -> Bits {
        if let Some(b) = self.kill_cache.get(&mask) {
            return *b;
        }
        let t = self.uni.p.t;
        let mut b = Bits::EMPTY;
        for (i, &c) in self.uni.cands.iter().enumerate() {
            if ((c & mask).count_ones() as usize) < t {
                b.set(i);
            }
        }
        self.kill_cache.insert(mask, b);
        b
    }

    fn count_node(&mut self) -> bool {
        self.pending_nodes += 1;
        if self.pending_nodes >= 256 || self.sh.budget.is_some() {
            self.flush_nodes();
        }
        !self.sh.stop.load(Ordering::Relaxed)
    }

    fn flush_nodes(&mut self) {
        let total = self.sh.nodes.fetch_add(self.pending_nodes, Ordering::Relaxed) + self.pending_nodes;
        self.pending_nodes = 0;
        let over_budget = self.sh.budget.is_some_and(|b| total >= b);
        let over_time = self.sh.deadline.is_some_and(|d| Instant::now() >= d);
        if over_budget || over_time {
            self.sh.stop.store(true, Ordering::Relaxed);
        }
        if self.sh.checkpoint.is_some() {
            if let Ok(mut inc) = self.sh.incumbent.try_lock() {
                self.sh.maybe_checkpoint(&mut inc);
            }
        }
    }

    fn node_index(&self) -> u64 {
        self.sh.nodes.load(Ordering::Relaxed) + self.pending_nodes
    }

    fn reset(&mut self) {
        for (m, old) in self.undo.drain(..).rev() {
            self.level[m as usize] = old;
        }
        self.ext.clear();
        self.family.clear();
    }

    /// Adds candidate `v`; returns the narrowed candidate set and the masks
    /// newly able to create pair conflicts.
    fn push(&mut self, v: usize, allowed: Bits, conf_v: &Bits) -> (Bits, Vec<u32>) {
        let d = self.uni.p.d;
        let y = self.uni.cands[v];
        let mut next = allowed.and_not(conf_v);
        next.clear(v);
        let mut fresh: Vec<(u32, u8)> = vec![(y, 1)];
        for &(m, l) in &self.ext {
            fresh.push((m & y, l + 1));
        }
        let mut grow = Vec::new();
        for (m, l) in fresh {
            if l as usize > d - 1 || self.level[m as usize] <= l {
                continue;
            }
            self.undo.push((m, self.level[m as usize]));
            self.level[m as usize] = l;
            next = next.and_not(&self.kill(m));
            if (l as usize) + 2 <= d {
                self.ext.push((m, l));
                grow.push(m);
            }
        }
        self.family.push(v);
        (next, grow)
    }

    fn pop(&mut self, undo_len: usize, ext_len: usize) {
        while self.undo.len() > undo_len {
            let (m, old) = self.undo.pop().expect("nonempty undo");
            self.level[m as usize] = old;
        }
        self.ext.truncate(ext_len);
        self.family.pop();
    }

    fn child_conflicts(&mut self, conf: &[Bits], allowed: &Bits, grow: &[u32]) -> Option<Vec<Bits>> {
        if grow.is_empty() {
            return None;
        }
        let mut out = conf.to_vec();
        let idx: Vec<usize> = allowed.ones().collect();
        for &m in grow {
            for &y in &idx {
                let k = self.kill(m & self.uni.cands[y]);
                out[y].or_assign(&k);
            }
        }
        Some(out)
    }

    fn offer_current(&mut self) {
        let masks: Vec<u32> = self.family.iter().map(|&i| self.uni.cands[i]).collect();
        let node = self.node_index();
        self.sh.offer(&masks, node);
    }

    fn best(&self) -> usize {
        self.sh.best.load(Ordering::Relaxed)
    }

    /// Explores the subtree below the current family. Returns false when the
    /// run was stopped.
    fn expand(&mut self, allowed: Bits, conf: &[Bits], global: u32, atoms: &[u32]) -> bool {
        if !self.count_node() {
            return false;
        }
        let size = self.family.len();
        if acceptable(&self.uni.p, size, global) && size > self.best() {
            self.offer_current();
        }
        if allowed.is_empty() {
            return true;
        }
        if self.uni.p.require_nontrivial {
            let mut core = global;
            for y in allowed.ones() {
                core &= self.uni.cands[y];
                if (core.count_ones() as usize) < self.uni.p.t {
                    break;
                }
            }
            if core.count_ones() as usize >= self.uni.p.t {
                return true;
            }
        }
        let order = colour_order(&allowed, conf);
        let orbits = Orbits::new(atoms, &self.uni.cands, &allowed);
        let mut rest = allowed;
        for &(v, col) in &order {
            if !rest.contains(v) {
                continue;
            }
            if size + col <= self.best() {
                return true;
            }
            rest.clear(v);
            let y = self.uni.cands[v];
            let (undo_len, ext_len) = (self.undo.len(), self.ext.len());
            let (next, grow) = self.push(v, rest, &conf[v]);
            let child_conf = self.child_conflicts(conf, &next, &grow);
            let ok = self.expand(
                next,
                child_conf.as_deref().unwrap_or(conf),
                global & y,
                &refine_atoms(atoms, y),
            );
            self.pop(undo_len, ext_len);
            if !ok {
                return false;
            }
            // every family through an orbit mate of v is an image of one
            // through v, which has just been covered
            if let Some(o) = &orbits {
                rest = rest.and_not(&o.class(y));
            }
        }
        true
    }

    /// Runs one root task: branch `b`, root vertex number `pos`.
    fn run_task(&mut self, b: usize, pos: usize) -> bool {
        let br = &self.uni.branches[b];
        let (v, col, allowed) = br.roots[pos];
        if 2 + col <= self.best() {
            return true;
        }
        self.reset();
        let mut global = u32::MAX;
        for &f in &br.fixed {
            self.push(f, Bits::EMPTY, &Bits::EMPTY);
            global &= self.uni.cands[f];
        }
        let y = self.uni.cands[v];
        let (next, grow) = self.push(v, allowed, &br.conf[v]);
        let child_conf = self.child_conflicts(&br.conf, &next, &grow);
        let res = self.expand(
            next,
            child_conf.as_deref().unwrap_or(&br.conf),
            global & y,
            &refine_atoms(&br.atoms, y),
        );
        self.reset();
        res
    }
}

/// Greedy colouring where each class is a set of pairwise conflicting
/// candidates; returns vertices in decreasing colour.
fn colour_order(allowed: &Bits, conf: &[Bits]) -> Vec<(usize, usize)> {
    let mut uncoloured = *allowed;
    let mut out = Vec::new();
    let mut colour = 0;
    while !uncoloured.is_empty() {
        colour += 1;
        let mut q = uncoloured;
        while let Some(v) = q.first() {
            q.clear(v);
            uncoloured.clear(v);
            q = q.and(&conf[v]);
            out.push((v, colour));
        }
    }
    out.reverse();
    out
}

fn build_universe(problem: &SearchProblem, relabel: Option<&Permutation>) -> Result<Universe> {
    let (n, k, d, t) = (problem.n, problem.k, problem.d, problem.t);
    let mut sets: Vec<ElementSet> = enumerate_k_subsets(n, k)?.collect();
    if let Some(pi) = relabel {
        if pi.len() != n {
            return Err(Error::GroundSizeMismatch {
                expected: n,
                found: pi.len(),
            });
        }
        sets = sets.iter().map(|s| pi.apply(s)).collect();
    }
    let cands: Vec<u32> = sets.iter().map(|s| s.bits() as u32).collect();
    let pair_min = if problem.require_nontrivial { t + d - 2 } else { t };
    let mut uni = Universe {
        p: *problem,
        cands,
        branches: Vec::new(),
    };
    let first = ((1u64 << k) - 1) as u32;
    let lo = pair_min.max((2 * k).saturating_sub(n));
    let index: HashMap<u32, usize> = uni.cands.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let sh = Shared {
        best: AtomicUsize::new(0),
        nodes: AtomicU64::new(0),
        stop: AtomicBool::new(false),
        next_task: AtomicUsize::new(0),
        budget: None,
        deadline: None,
        incumbent: Mutex::new(Incumbent {
            witness: Vec::new(),
            history: Vec::new(),
            completed: BTreeSet::new(),
            last_checkpoint: Instant::now(),
        }),
        problem: *problem,
        checkpoint: None,
        checkpoint_interval: Duration::MAX,
        checkpoint_error: Mutex::new(None),
    };
    let mut branches = Vec::new();
    for j in (lo..k).rev() {
        // [j] together with the k-j points after [k]
        let partner = ((1u64 << j) - 1) as u32 | ((((1u64 << (k - j)) - 1) as u32) << k);
        let fixed = [index[&first], index[&partner]];
        let total = uni.cands.len();
        let mut conf = vec![Bits::EMPTY; total];
        for a in 0..total {
            for b in 0..total {
                let s = (uni.cands[a] & uni.cands[b]).count_ones() as usize;
                if a != b && (s < pair_min || s > j) {
                    conf[a].set(b);
                }
            }
        }
        let mut w = Worker::new(&uni, &sh);
        let mut allowed = Bits::first_n(total);
        for &f in &fixed {
            let (next, grow) = w.push(f, allowed, &conf[f]);
            allowed = next;
            if let Some(c) = w.child_conflicts(&conf, &allowed, &grow) {
                conf = c;
            }
        }
        let order = colour_order(&allowed, &conf);
        drop(w);
        let full = ((1u64 << n) - 1) as u32;
        let atoms = refine_atoms(&refine_atoms(&[full], first), partner);
        let orbits = Orbits::new(&atoms, &uni.cands, &allowed);
        let mut rest = allowed;
        let mut roots = Vec::new();
        for (v, col) in order {
            if !rest.contains(v) {
                continue;
            }
            rest.clear(v);
            roots.push((v, col, rest));
            if let Some(o) = &orbits {
                rest = rest.and_not(&o.class(uni.cands[v]));
            }
        }
        branches.push(Branch {
            j,
            fixed,
            conf,
            roots,
            atoms,
        });
    }
    uni.branches = branches;
    Ok(uni)
}

/// Largest named construction satisfying the problem's constraints.
pub fn best_construction(problem: &SearchProblem) -> Option<SetFamily> {
    let mut best: Option<SetFamily> = None;
    for spec in all_specs(problem.n, problem.k) {
        let Ok(fam) = build(&spec) else { continue };
        if fam.len() <= best.as_ref().map_or(0, |b| b.len()) {
            continue;
        }
        if !is_d_wise_t_intersecting(&fam, problem.d, problem.t).holds {
            continue;
        }
        if problem.require_nontrivial && !is_nontrivial(&fam, problem.t).unwrap_or(false) {
            continue;
        }
        best = Some(fam);
    }
    best
}

/// Exact branch and bound. With `status = optimal` the result is a proven
/// maximum; the witness is the first optimum met, not necessarily the
/// lexicographically least.
pub fn branch_and_bound_max(problem: &SearchProblem, opts: &SearchOptions) -> Result<SearchResult> {
    problem.validate()?;
    let total = problem.candidates();
    if total > BNB_MAX_CANDIDATES {
        return Err(Error::InstanceTooLarge(format!(
            "branch and bound needs C(n,k) <= {BNB_MAX_CANDIDATES}, got {total}"
        )));
    }
    let started = Instant::now();
    let uni = build_universe(problem, opts.relabel.as_ref())?;

    let mut witness: Vec<u32> = Vec::new();
    let mut history = Vec::new();
    let mut completed = BTreeSet::new();
    let mut base_nodes = 0;
    if let Some(cp) = &opts.resume {
        if cp.problem.n != problem.n
            || cp.problem.k != problem.k
            || cp.problem.d != problem.d
            || cp.problem.t != problem.t
            || cp.problem.require_nontrivial != problem.require_nontrivial
        {
            return Err(Error::InvalidParameter(format!(
                "checkpoint is for {}, not {}",
                cp.problem.describe(),
                problem.describe()
            )));
        }
        certify(problem, &cp.best)?;
        witness = cp.best.iter().map(|s| s.bits() as u32).collect();
        if !witness.is_empty() {
            history.push((witness.len(), cp.nodes));
        }
        completed = cp.completed.clone();
        base_nodes = cp.nodes;
    }
    if !problem.require_nontrivial && witness.is_empty() {
        witness.push(((1u64 << problem.k) - 1) as u32);
        history.push((1, base_nodes));
    }
    if opts.seed_constructions {
        if let Some(fam) = best_construction(problem) {
            if fam.len() > witness.len() {
                witness = fam.iter().map(|s| s.bits() as u32).collect();
                history.push((fam.len(), base_nodes));
            }
        }
    }

    let tasks: Vec<(usize, usize)> = uni
        .branches
        .iter()
        .enumerate()
        .flat_map(|(b, br)| (0..br.roots.len()).map(move |pos| (b, pos)))
        .filter(|&(b, pos)| !completed.contains(&(uni.branches[b].j, pos)))
        .collect();

    let sh = Shared {
        best: AtomicUsize::new(witness.len()),
        nodes: AtomicU64::new(base_nodes),
        stop: AtomicBool::new(false),
        next_task: AtomicUsize::new(0),
        budget: problem.node_budget,
        deadline: opts.time_limit.map(|d| started + d),
        incumbent: Mutex::new(Incumbent {
            witness,
            history,
            completed,
            last_checkpoint: Instant::now(),
        }),
        problem: *problem,
        checkpoint: opts.checkpoint.clone(),
        checkpoint_interval: opts.checkpoint_interval,
        checkpoint_error: Mutex::new(None),
    };

    let threads = opts.threads.max(1);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| {
                let mut w = Worker::new(&uni, &sh);
                loop {
                    if sh.stop.load(Ordering::Relaxed) {
                        break;
                    }
                    let i = sh.next_task.fetch_add(1, Ordering::Relaxed);
                    let Some(&(b, pos)) = tasks.get(i) else { break };
                    let finished = w.run_task(b, pos);
                    w.flush_nodes();
                    if !finished {
                        break;
                    }
                    let mut inc = sh.incumbent.lock().expect("incumbent lock");
                    inc.completed.insert((uni.branches[b].j, pos));
                    sh.maybe_checkpoint(&mut inc);
                }
            });
        }
    });
    if let Some(e) = sh.checkpoint_error.lock().expect("error lock").take() {
        return Err(e);
    }

    let mut inc = sh.incumbent.lock().expect("incumbent lock");
    let all_done = tasks.len() <= inc.completed.len()
        && tasks
            .iter()
            .all(|&(b, pos)| inc.completed.contains(&(uni.branches[b].j, pos)));
    let status = if all_done {
        SearchStatus::Optimal
    } else {
        SearchStatus::BudgetExhausted
    };
    let nodes = sh.nodes.load(Ordering::Relaxed);
    if opts.checkpoint.is_some() {
        let cp_inc = Incumbent {
            witness: inc.witness.clone(),
            history: Vec::new(),
            completed: inc.completed.clone(),
            last_checkpoint: Instant::now(),
        };
        sh.write_checkpoint(&cp_inc)?;
    }
    let witness = family_from_masks(problem.n, problem.k, &inc.witness);
    certify(problem, &witness)?;
    log::info!(
        "search {}: best {} after {} nodes ({:?})",
        problem.describe(),
        witness.len(),
        nodes,
        status
    );
    Ok(SearchResult {
        best_size: witness.len(),
        witness,
        status,
        nodes,
        incumbent_history: std::mem::take(&mut inc.history),
    })
}
