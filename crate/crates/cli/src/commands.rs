use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use ekrw_core::constructions::build;
use ekrw_core::counting::{bound_value, count_construction, extremal_report, mu_p, ExtremalReport};
use ekrw_core::forbidden::{kmw_certificate, small_l_guarantee, verify_l_system, AllowedSizes, KmwOutcome};
use ekrw_core::graphfam::{
    count_kst_family, count_multipartite_family, verify_intersecting, MultipartiteParams, VerifyMode,
};
use ekrw_core::search::{branch_and_bound_max, brute_force_max, Checkpoint, SearchOptions, SearchProblem};
use ekrw_core::setcore::{format_family, read_family, write_family};
use ekrw_core::thresholds::{beta, classify_range, RangeClassification};
use ekrw_core::verify::{are_isomorphic, check_m_wise_lemma, is_d_wise_t_intersecting, nontriviality_check};
use ekrw_core::{FamilySpec, Rational, SetFamily};
use num_bigint::BigInt;
use serde_json::{json, Value};

use crate::args::*;
use crate::report::{extremal_table, threshold_table, Table};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(ekrw_core::Error),
}

impl From<ekrw_core::Error> for CliError {
    fn from(e: ekrw_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// What a command produced.
pub struct Outcome {
    pub results: Value,
    pub text: String,
    /// False when a checked property failed.
    pub property_holds: bool,
    pub table: Option<(Table, Option<TableFormat>)>,
}

impl Outcome {
    fn new(results: Value, text: String) -> Self {
        Outcome {
            results,
            text,
            property_holds: true,
            table: None,
        }
    }

    fn with_property(mut self, holds: bool) -> Self {
        self.property_holds = holds;
        self
    }
}

pub struct Context {
    pub threads: usize,
    pub seed: u64,
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

/// Parses "5", "5,7,9" or "5..9" (inclusive).
pub fn parse_int_list(s: &str) -> CliResult<Vec<usize>> {
    let bad = || usage(format!("cannot parse integer list `{s}`"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

/// Parses "a/b", an integer, a decimal or scientific notation, exactly.
pub fn parse_rational(s: &str) -> CliResult<Rational> {
    let bad = || usage(format!("cannot parse number `{s}`"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b == BigInt::from(0) {
            return Err(bad());
        }
        return Ok(Rational::new(a, b));
    }
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if frac.chars().any(|c| !c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        Rational::from_integer(digits * ten.pow(scale as u32))
    } else {
        Rational::new(digits, ten.pow((-scale) as u32))
    })
}

fn parse_spec(s: &str) -> CliResult<FamilySpec> {
    Ok(s.parse::<FamilySpec>()?)
}

pub fn run(cmd: &Command, ctx: &Context) -> CliResult<Outcome> {
    match cmd {
        Command::Construct(a) => construct(a),
        Command::Count(a) => count(a),
        Command::Verify(a) => verify(a),
        Command::Search(a) => search(a, ctx),
        Command::Extremal(a) => extremal(a),
        Command::Thresholds(a) => thresholds(a),
        Command::Beta(a) => beta_cmd(a),
        Command::Forbidden(f) => forbidden(f),
        Command::Graphs(g) => graphs(g, ctx),
        Command::Mu(a) => mu(a),
    }
}

fn construct(a: &ConstructArgs) -> CliResult<Outcome> {
    let spec = parse_spec(&a.spec)?;
    let fam = build(&spec)?;
    let results = json!({
        "spec": spec.to_string(),
        "size": fam.len(),
        "file": a.out,
    });
    let text = match &a.out {
        Some(path) => {
            write_family(&fam, path)?;
            format!("{spec}: {} members written to {}", fam.len(), path.display())
        }
        None => format_family(&fam),
    };
    Ok(Outcome::new(results, text))
}

fn count(a: &CountArgs) -> CliResult<Outcome> {
    if let Some(s) = &a.spec {
        let spec = parse_spec(s)?;
        let c = count_construction(&spec)?;
        return Ok(Outcome::new(
            json!({"spec": spec.to_string(), "count": c.to_string()}),
            format!("|{spec}| = {c}"),
        ));
    }
    let id = a.bound.as_deref().expect("clap requires spec or bound");
    let c = bound_value(id, &a.params)?;
    Ok(Outcome::new(
        json!({"bound": id, "params": a.params, "value": c.to_string()}),
        format!("{id}{:?} = {c}", a.params),
    ))
}

fn load(path: &Path) -> CliResult<SetFamily> {
    Ok(read_family(path)?)
}

fn verify(a: &VerifyArgs) -> CliResult<Outcome> {
    let fam = load(&a.family)?;
    let mut results = serde_json::Map::new();
    results.insert("size".into(), json!(fam.len()));
    let mut text = format!("{} members over [{}]\n", fam.len(), fam.n());
    let mut all = true;
    if let Some(d) = a.dwise {
        let c = is_d_wise_t_intersecting(&fam, d, a.t);
        all &= c.holds;
        writeln!(text, "{d}-wise {}-intersecting: {}", a.t, c.holds).unwrap();
        results.insert("dwise".into(), to_value(&c));
    }
    if a.nontrivial {
        let c = nontriviality_check(&fam, a.t)?;
        all &= c.holds;
        writeln!(text, "nontrivial (t={}): {}", a.t, c.holds).unwrap();
        results.insert("nontrivial".into(), to_value(&c));
    }
    if a.lemma {
        let d = a.dwise.expect("clap requires dwise");
        match check_m_wise_lemma(&fam, d, a.t) {
            Ok(c) => {
                all &= c.holds;
                writeln!(text, "m-wise consequence: {}", c.holds).unwrap();
                results.insert("lemma".into(), to_value(&c));
            }
            Err(ekrw_core::Error::LemmaHypothesis(why)) => {
                all = false;
                writeln!(text, "m-wise consequence: hypothesis fails ({why})").unwrap();
                results.insert("lemma".into(), json!({"holds": false, "hypothesis_fails": why}));
            }
            Err(e) => return Err(e.into()),
        }
    }
    if let Some(other) = &a.isomorphic {
        let g = load(other)?;
        let pi = are_isomorphic(&fam, &g)?;
        all &= pi.is_some();
        let images: Option<Vec<usize>> = pi.map(|p| p.images().iter().map(|i| i + 1).collect());
        writeln!(text, "isomorphic: {}", images.is_some()).unwrap();
        if let Some(im) = &images {
            writeln!(text, "witness images: {im:?}").unwrap();
        }
        results.insert(
            "isomorphic".into(),
            json!({"holds": images.is_some(), "permutation": images}),
        );
    }
    Ok(Outcome::new(Value::Object(results), text.trim_end().to_string()).with_property(all))
}

fn secs(s: f64) -> CliResult<Duration> {
    Duration::try_from_secs_f64(s).map_err(|_| usage(format!("bad duration {s}")))
}

fn search(a: &SearchArgs, ctx: &Context) -> CliResult<Outcome> {
    let mut problem = SearchProblem::new(a.n, a.k, a.d, a.t, a.nontrivial)?;
    if let Some(b) = a.budget {
        problem = problem.with_budget(b);
    }
    let resume = a.resume.as_ref().map(Checkpoint::read).transpose()?;
    let opts = SearchOptions {
        threads: ctx.threads.max(1),
        seed_constructions: !a.no_seed_constructions,
        relabel: None,
        checkpoint: a.checkpoint.clone().or_else(|| a.resume.clone()),
        checkpoint_interval: secs(a.checkpoint_interval)?,
        resume,
        time_limit: a.time_limit.map(secs).transpose()?,
    };
    let r = branch_and_bound_max(&problem, &opts)?;
    if let Some(path) = &a.witness {
        write_family(&r.witness, path)?;
    }
    let mut results = json!({
        "best_size": r.best_size,
        "status": r.status,
        "nodes": r.nodes,
        "witness_file": a.witness,
        "incumbent_history": r.incumbent_history,
    });
    let mut text = format!("best_size {} ({:?}) after {} nodes", r.best_size, r.status, r.nodes);
    let mut holds = true;
    if a.oracle {
        let exact = SearchProblem { node_budget: None, ..problem };
        let bf = brute_force_max(&exact)?;
        let agrees = bf.best_size == r.best_size;
        holds = agrees || r.status != ekrw_core::search::SearchStatus::Optimal;
        results["oracle"] = json!({"best_size": bf.best_size, "agrees": agrees});
        write!(text, "\nexhaustive search: {} ({})", bf.best_size, if agrees { "agrees" } else { "DISAGREES" }).unwrap();
    }
    Ok(Outcome::new(results, text).with_property(holds))
}

fn extremal(a: &ExtremalArgs) -> CliResult<Outcome> {
    let mut rows: Vec<ExtremalReport> = Vec::new();
    for n in parse_int_list(&a.n)? {
        for k in parse_int_list(&a.k)? {
            for d in parse_int_list(&a.d)? {
                if 2 <= d && d < k && k < n {
                    rows.push(extremal_report(n, k, d)?);
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(usage("no parameter point with 2 <= d < k < n"));
    }
    let table = extremal_table(&rows);
    let text = rows.iter().map(|r| format!("{r} max={}", r.max())).collect::<Vec<_>>().join("\n");
    let mut out = Outcome::new(table.to_json(), text);
    out.table = Some((table, a.format));
    Ok(out)
}

fn thresholds(a: &ThresholdArgs) -> CliResult<Outcome> {
    let mut rows: Vec<RangeClassification> = Vec::new();
    for n in parse_int_list(&a.n)? {
        for k in parse_int_list(&a.k)? {
            for d in parse_int_list(&a.d)? {
                for t in parse_int_list(&a.t)? {
                    rows.push(classify_range(n, k, d, t));
                }
            }
        }
    }
    let mut text = String::new();
    for r in &rows {
        writeln!(text, "n={} k={} d={} t={}", r.n, r.k, r.d, r.t).unwrap();
        for (id, ap) in &r.theorems {
            let b = ap.bound.as_ref().map(|b| format!(" bound {} = {b}", ap.bound_expr)).unwrap_or_default();
            writeln!(text, "  {id:<11} {}{b}", if ap.applies { "applies" } else { "-" }).unwrap();
        }
        if let Some(q) = &r.improved_ekr {
            writeln!(text, "  improved EKR: density {} is {:?} the root bracket", q.density, q.status).unwrap();
        }
    }
    let table = threshold_table(&rows);
    let mut out = Outcome::new(to_value(&rows), text.trim_end().to_string());
    out.table = Some((table, a.format));
    Ok(out)
}

fn beta_cmd(a: &BetaArgs) -> CliResult<Outcome> {
    let tol = parse_rational(&a.tol)?;
    let b = beta(a.t, a.d, &tol)?;
    let mut results = json!({
        "t": a.t,
        "d": a.d,
        "lo": b.lo.to_string(),
        "hi": b.hi.to_string(),
        "lo_f64": b.lo_f64(),
        "hi_f64": b.hi_f64(),
        "tol": tol.to_string(),
    });
    let mut text = format!("beta({}, {}) in [{:.12}, {:.12}]", a.t, a.d, b.lo_f64(), b.hi_f64());
    if let Some(p) = &a.p {
        let p = parse_rational(p)?;
        let side = b.compare(&p);
        results["p"] = json!(p.to_string());
        results["side"] = to_value(&side);
        write!(text, "\np = {p} is {side:?}").unwrap();
    }
    Ok(Outcome::new(results, text))
}

fn forbidden(f: &ForbiddenCommand) -> CliResult<Outcome> {
    match f {
        ForbiddenCommand::Cert { k, l, n } => {
            let out = kmw_certificate(*k, *l)?;
            let mut results = to_value(&out);
            let text = match &out {
                KmwOutcome::Certified(c) => {
                    let mut t = format!(
                        "k={k} l={l}: p={} a={} degree {}\nresidues {:?}",
                        c.p, c.a, c.degree, c.residues
                    );
                    if let Some(n) = n {
                        let b = c.bound(*n);
                        results["bound"] = json!(b.to_string());
                        write!(t, "\nbound C({n},{}) = {b}", c.degree).unwrap();
                    }
                    t
                }
                KmwOutcome::ConditionFails { quotient, .. } => {
                    format!("k={k} l={l}: k-l divides l! (quotient {quotient}); no certificate")
                }
            };
            Ok(Outcome::new(results, text))
        }
        ForbiddenCommand::SmallL { k } => {
            let g = small_l_guarantee(*k)?;
            let text = format!(
                "k={k}: l <= {} below ln k / ln ln k in [{:.12}, {:.12}]; checked {:?}; failures {:?}",
                g.max_l, g.ratio_lo, g.ratio_hi, g.checked, g.failures
            );
            let holds = g.holds();
            Ok(Outcome::new(to_value(&g), text).with_property(holds))
        }
        ForbiddenCommand::Check { family, allowed, not_equal, not_congruent } => {
            let fam = load(family)?;
            let sizes = match (allowed.is_empty(), not_equal, not_congruent) {
                (false, None, None) => AllowedSizes::Explicit(allowed.iter().copied().collect()),
                (true, Some(l), None) => AllowedSizes::NotEqual(*l),
                (true, None, Some(q)) => {
                    let k = fam.k().or_else(|| fam.members().first().map(|m| m.len())).unwrap_or(0);
                    AllowedSizes::NotCongruent { k, q: *q }
                }
                _ => return Err(usage("give one of --allowed, --not-equal, --not-congruent")),
            };
            let r = verify_l_system(&fam, &sizes)?;
            let text = match (&r.witness, r.intersection_size) {
                (Some((x, y)), Some(s)) => format!("false: {x} and {y} meet in {s}"),
                _ => "true".to_string(),
            };
            Ok(Outcome::new(to_value(&r), text).with_property(r.holds))
        }
    }
}

fn shape_params(s: &GraphShape) -> CliResult<(Vec<usize>, bool)> {
    match (s.s, s.parts.is_empty()) {
        (Some(x), true) => Ok((vec![x], false)),
        (None, false) => Ok((s.parts.clone(), true)),
        _ => Err(usage("give either --s or --parts")),
    }
}

fn graphs(g: &GraphsCommand, ctx: &Context) -> CliResult<Outcome> {
    match g {
        GraphsCommand::Count(s) => {
            let (sizes, multi) = shape_params(s)?;
            let c = if multi {
                count_multipartite_family(s.n, &sizes, s.t)?
            } else {
                count_kst_family(s.n, sizes[0], s.t)?
            };
            let text = format!(
                "count {} vs EKR-type {}: exceeds {}, condition {}",
                c.count, c.ekr_count, c.exceeds, c.condition_holds
            );
            Ok(Outcome::new(to_value(&c), text))
        }
        GraphsCommand::Verify { shape, mode, pairs, min_degree } => {
            let (sizes, _) = shape_params(shape)?;
            let mut p = MultipartiteParams::new(shape.n, &sizes, shape.t)?;
            if let Some(m) = min_degree {
                p = p.with_min_degree(*m);
            }
            let vm = match mode {
                GraphMode::Exhaustive => VerifyMode::ExhaustiveCore,
                GraphMode::Sampled => VerifyMode::Sampled { pairs: *pairs, seed: ctx.seed },
            };
            let r = verify_intersecting(&p, vm, ctx.threads)?;
            let mut results = to_value(&r);
            results["mode"] = to_value(&vm);
            let text = match &r.witness {
                None => format!("intersecting: true ({} pairs)", r.pairs_checked),
                Some(w) => format!(
                    "intersecting: false after {} pairs; {} common neighbours\n{}\n{}",
                    r.pairs_checked, w.common, w.first, w.second
                ),
            };
            Ok(Outcome::new(results, text).with_property(r.holds))
        }
    }
}

fn mu(a: &MuArgs) -> CliResult<Outcome> {
    let fam = match (&a.family, &a.spec) {
        (Some(path), None) => load(path)?,
        (None, Some(s)) => build(&parse_spec(s)?)?,
        _ => return Err(usage("give either --family or --spec")),
    };
    let p = parse_rational(&a.p)?;
    let exact = mu_p(&fam, &p)?;
    let mut results = json!({"p": p.to_string(), "mu": exact.to_string()});
    let mut text = format!("mu_{p} = {exact}");
    if a.approx {
        let pf = ekrw_core::Scalar::to_f64_lossy(&p);
        let approx: f64 = mu_p(&fam, &pf)?;
        results["mu_f64"] = json!(approx);
        write!(text, " ~ {approx:.12}").unwrap();
    }
    Ok(Outcome::new(results, text))
}
