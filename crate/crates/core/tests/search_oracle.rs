use ekrw_core::counting::choose;
use ekrw_core::search::{
    branch_and_bound_max, brute_force_max, Checkpoint, SearchOptions, SearchProblem, SearchStatus,
};
use ekrw_core::verify::{is_d_wise_t_intersecting, is_nontrivial};
use ekrw_core::Permutation;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_instances() -> Vec<SearchProblem> {
    let mut out = Vec::new();
    for n in 3..=8usize {
        for k in 2..n {
            if choose(n as u64, k as u64) > 24u32.into() {
                continue;
            }
            for d in 2..=k {
                for t in 1..=k + 1 - d {
                    for nt in [true, false] {
                        out.push(SearchProblem::new(n, k, d, t, nt).unwrap());
                    }
                }
            }
        }
    }
    out
}

fn unseeded() -> SearchOptions {
    SearchOptions {
        seed_constructions: false,
        ..Default::default()
    }
}

#[test]
fn bnb_equals_brute_force_on_all_small_instances() {
    for p in small_instances() {
        let bf = brute_force_max(&p).unwrap();
        let bb = branch_and_bound_max(&p, &unseeded()).unwrap();
        assert_eq!(bb.status, SearchStatus::Optimal);
        assert_eq!(bb.best_size, bf.best_size, "{p:?}");
        let seeded = branch_and_bound_max(&p, &SearchOptions::default()).unwrap();
        assert_eq!(seeded.best_size, bf.best_size, "{p:?} seeded");
    }
}

#[test]
fn witnesses_verify() {
    for p in small_instances() {
        for r in [brute_force_max(&p).unwrap(), branch_and_bound_max(&p, &unseeded()).unwrap()] {
            assert_eq!(r.best_size, r.witness.len());
            assert!(is_d_wise_t_intersecting(&r.witness, p.d, p.t).holds);
            if p.require_nontrivial && r.best_size > 0 {
                assert!(is_nontrivial(&r.witness, p.t).unwrap());
            }
        }
    }
}

#[test]
fn brute_force_witness_is_lexicographically_least() {
    // independent check: no family of the same size that precedes the witness
    // is valid; done by scanning every subfamily for the smallest n
    let p = SearchProblem::new(5, 3, 3, 1, true).unwrap();
    let r = brute_force_max(&p).unwrap();
    let sets: Vec<_> = ekrw_core::setcore::enumerate_k_subsets(5, 3).unwrap().collect();
    let witness_idx: Vec<usize> = r
        .witness
        .iter()
        .map(|w| sets.iter().position(|s| s == w).unwrap())
        .collect();
    for mask in 0u32..(1 << sets.len()) {
        if mask.count_ones() as usize != r.best_size {
            continue;
        }
        let idx: Vec<usize> = (0..sets.len()).filter(|&i| mask >> i & 1 == 1).collect();
        if idx >= witness_idx {
            continue;
        }
        let fam = ekrw_core::SetFamily::new(5, Some(3), idx.iter().map(|&i| sets[i]).collect()).unwrap();
        let valid = is_d_wise_t_intersecting(&fam, 3, 1).holds && is_nontrivial(&fam, 1).unwrap();
        assert!(!valid, "{idx:?} precedes the witness");
    }
}

#[test]
fn relabeling_and_threads_do_not_change_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for p in small_instances().into_iter().filter(|p| p.n >= 6) {
        let base = branch_and_bound_max(&p, &unseeded()).unwrap().best_size;
        let mut images: Vec<usize> = (0..p.n).collect();
        images.shuffle(&mut rng);
        let relabeled = SearchOptions {
            relabel: Some(Permutation::from_images(images).unwrap()),
            ..unseeded()
        };
        assert_eq!(branch_and_bound_max(&p, &relabeled).unwrap().best_size, base);
        let threaded = SearchOptions {
            threads: 4,
            ..unseeded()
        };
        assert_eq!(branch_and_bound_max(&p, &threaded).unwrap().best_size, base);
    }
}

#[test]
fn relaxing_nontriviality_never_decreases() {
    for p in small_instances().into_iter().filter(|p| p.require_nontrivial) {
        let strict = brute_force_max(&p).unwrap().best_size;
        let loose = SearchProblem {
            require_nontrivial: false,
            ..p
        };
        assert!(brute_force_max(&loose).unwrap().best_size >= strict);
    }
}

#[test]
fn budget_then_resume_reaches_the_same_optimum() {
    let p = SearchProblem::new(9, 5, 3, 1, true).unwrap();
    let full = branch_and_bound_max(&p, &unseeded()).unwrap();
    assert_eq!(full.status, SearchStatus::Optimal);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.ckpt");
    let mut opts = SearchOptions {
        checkpoint: Some(path.clone()),
        checkpoint_interval: std::time::Duration::ZERO,
        ..unseeded()
    };
    // an interrupted root task restarts, so the step must eventually exceed
    // the largest task
    let mut step = 50;
    let mut budgeted = p.with_budget(step);
    let mut rounds = 0;
    loop {
        let r = branch_and_bound_max(&budgeted, &opts).unwrap();
        rounds += 1;
        if r.status == SearchStatus::Optimal {
            assert_eq!(r.best_size, full.best_size);
            break;
        }
        let cp = Checkpoint::read(&path).unwrap();
        step *= 2;
        budgeted = budgeted.with_budget(cp.nodes + step);
        opts.resume = Some(cp);
        assert!(rounds < 64);
    }
    assert!(rounds > 1, "budget should interrupt at least once");
}

#[test]
fn resume_rejects_other_problems() {
    let p = SearchProblem::new(6, 4, 3, 1, true).unwrap();
    let q = SearchProblem::new(6, 4, 2, 1, true).unwrap();
    let best = brute_force_max(&p).unwrap().witness;
    let opts = SearchOptions {
        resume: Some(Checkpoint {
            problem: p,
            completed: Default::default(),
            nodes: 0,
            best,
        }),
        ..Default::default()
    };
    assert!(branch_and_bound_max(&q, &opts).is_err());
}

#[test]
fn checkpoints_are_written_inside_long_root_tasks() {
    // the first root task here runs for well over a second
    let p = SearchProblem::new(10, 6, 3, 1, true).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mid.ckpt");
    let opts = SearchOptions {
        checkpoint: Some(path.clone()),
        checkpoint_interval: std::time::Duration::from_millis(200),
        time_limit: Some(std::time::Duration::from_secs(3)),
        ..Default::default()
    };
    let run = std::thread::spawn(move || branch_and_bound_max(&p, &opts).unwrap());
    std::thread::sleep(std::time::Duration::from_millis(1500));
    let mid = Checkpoint::read(&path).expect("checkpoint before the run ends");
    let done = run.join().unwrap();
    assert!(mid.completed.len() <= 1);
    assert!(mid.nodes > 0 && mid.nodes < done.nodes);
    assert!(mid.best.len() >= 95);
    assert!(is_d_wise_t_intersecting(&mid.best, 3, 1).holds);
    assert!(is_nontrivial(&mid.best, 1).unwrap());
}
