//! Acceptance checks. Each criterion prints one `PASS`/`FAIL` line; run with
//! `cargo test -p pertinex-cli --test acceptance -- --nocapture` to see them.
//!
//! A criterion listed in `KNOWN_FAILURES` is expected to print `FAIL`: the
//! suite asserts that every other criterion passes and that the known ones
//! still fail, so a fix shows up as a test failure prompting removal.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use pertinex_core::evaluation::{average_precision, pr_curve_for_ids, Experiment};
use pertinex_core::feedback::{ppf_weight, prf_weight};
use pertinex_core::scoring::score_query_in;
use pertinex_core::{
    generate_synthetic, precision, recall, score_query, Arm, Collection, ExpansionStrategy,
    FeedbackCounts, FeedbackMethod, Frame, Index, Judgments, LogBase, MassFunction, ObjectRecord,
    PertinenceFeedback, PossibilityError, QueryRecord, Subset, SynthParams, DEFAULT_EXPANSION_SIZE,
};
use pertinex_service::SessionManager;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 7;

/// Criteria that cannot hold as stated; see the project notes.
const KNOWN_FAILURES: &[&str] = &["ppf monotone in r"];

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let (pass, detail) = f();
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    Outcome { name, pass, detail }
}

fn frame(size: usize) -> Frame {
    Frame::new((0..size).map(|i| format!("w{i}"))).unwrap()
}

fn all_subsets(size: usize) -> Vec<Subset> {
    (0u32..1 << size)
        .map(|bits| Subset::from_indices((0..size).filter(|i| bits >> i & 1 == 1)))
        .collect()
}

fn random_nested(rng: &mut ChaCha8Rng, max_size: usize) -> MassFunction {
    let size = rng.gen_range(1..=max_size);
    let mut order: Vec<usize> = (0..size).collect();
    order.shuffle(rng);
    let mut cuts: Vec<usize> = (1..=size).filter(|_| rng.gen_bool(0.5)).collect();
    if cuts.is_empty() {
        cuts.push(rng.gen_range(1..=size));
    }
    let raw: Vec<f64> = cuts.iter().map(|_| rng.gen_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let focal = cuts
        .iter()
        .zip(&raw)
        .map(|(&c, m)| (Subset::from_indices(order[..c].iter().copied()), m / total))
        .collect();
    MassFunction::new(frame(size), focal).unwrap()
}

fn possibility_oracle() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let started = Instant::now();
    let mut mismatches = 0;
    for _ in 0..1000 {
        let mf = random_nested(&mut rng, 8);
        let dist = mf.to_possibility_distribution().unwrap();
        for w in 0..mf.frame().len() {
            // brute force: every focal set containing w
            let brute: f64 = mf
                .focal_elements()
                .iter()
                .filter(|(e, _)| e.contains(w))
                .map(|(_, m)| m)
                .sum();
            if dist.degree(w) != brute {
                mismatches += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    (
        mismatches == 0 && elapsed < Duration::from_secs(5),
        format!("1000 nested mass functions, |Ω| ≤ 8, {mismatches} mismatches, {elapsed:.2?}"),
    )
}

fn characterization() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let mf = random_nested(&mut rng, 5);
        let subsets = all_subsets(mf.frame().len());
        for a in &subsets {
            for b in &subsets {
                let joint = mf.plausibility(&a.union(b)).unwrap();
                let max = mf.plausibility(a).unwrap().max(mf.plausibility(b).unwrap());
                worst = worst.max((joint - max).abs());
            }
        }
    }
    let counter = MassFunction::new(
        frame(2),
        vec![
            (Subset::from_indices([0]), 0.5),
            (Subset::from_indices([1]), 0.5),
        ],
    )
    .unwrap();
    let (a, b) = (Subset::from_indices([0]), Subset::from_indices([1]));
    let joint = counter.plausibility(&a.union(&b)).unwrap();
    let max = counter
        .plausibility(&a)
        .unwrap()
        .max(counter.plausibility(&b).unwrap());
    (
        worst <= 1e-9 && joint == 1.0 && max == 0.5,
        format!("max |Pl(A∪B) − max| = {worst:.1e} over 500; counterexample {joint} vs {max}"),
    )
}

fn mass_constraints() -> (bool, String) {
    let abc = || Frame::new(["a", "b", "c"]).unwrap();
    let valid = MassFunction::from_labels(
        abc(),
        &[
            (&["a"][..], 0.5),
            (&["a", "b"][..], 0.3),
            (&["a", "b", "c"][..], 0.2),
        ],
    );
    let over = MassFunction::from_labels(abc(), &[(&["a"][..], 0.5), (&["b"][..], 0.6)]);
    let zero = MassFunction::from_labels(abc(), &[(&["a"][..], 1.0), (&["a", "b"][..], 0.0)]);
    let ok = valid.is_ok()
        && matches!(over, Err(PossibilityError::SumNotOne { .. }))
        && matches!(zero, Err(PossibilityError::NonPositiveMass { .. }));
    (
        ok,
        "accepts {a}:.5,{a,b}:.3,{a,b,c}:.2; rejects sum 1.1 and zero mass".into(),
    )
}

fn toy() -> Collection {
    Collection::new(
        ["g1", "g2", "g3"].map(String::from).to_vec(),
        vec![
            ObjectRecord::new("o1", [("g1", 2), ("g2", 1)]),
            ObjectRecord::new("o2", [("g1", 1)]),
            ObjectRecord::new("o3", [("g3", 1)]),
        ],
        vec![QueryRecord::new("q1", ["g1", "g2"])],
        Judgments::new(),
    )
    .unwrap()
}

fn scoring_fixture() -> (bool, String) {
    let collection = toy();
    let ranked = score_query(&Index::build(&collection), &["g1", "g2"]);
    // brute force over the raw records
    let n = collection.objects().len() as f64;
    let containing = |g: &str| {
        collection
            .objects()
            .iter()
            .filter(|o| o.occurrences.contains_key(g))
            .count() as f64
    };
    let mut brute: Vec<(String, f64)> = Vec::new();
    for o in collection.objects() {
        let l = (o.occurrences.len().max(2) as f64).ln();
        let mut s = 0.0;
        let mut hit = false;
        for g in ["g1", "g2"] {
            if let Some(&f) = o.occurrences.get(g) {
                hit = true;
                s += (n / containing(g)).ln() * ((f as f64) + 1.0).ln() / l;
            }
        }
        if hit {
            brute.push((o.id.clone(), s));
        }
    }
    brute.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let same_order = ranked.ids().eq(brute.iter().map(|(id, _)| id.as_str()));
    let worst = ranked
        .iter()
        .zip(&brute)
        .map(|(e, (_, s))| (e.score - s).abs())
        .fold(0.0, f64::max);
    let o1 = ranked.score_of("o1").unwrap_or(f64::NAN);
    let o2 = ranked.score_of("o2").unwrap_or(f64::NAN);
    (
        same_order && worst <= 1e-9 && (o2 - 0.405465).abs() < 1e-6,
        format!(
            "ranking {:?}, π_s(o1) = {o1:.6}, π_s(o2) = {o2:.6}, max dev {worst:.1e}",
            ranked.ids().collect::<Vec<_>>()
        ),
    )
}

fn counts(n_total: usize, n: usize, r_total: usize, r: usize) -> FeedbackCounts {
    FeedbackCounts::new(n_total, n, r_total, r).unwrap()
}

fn all_counts() -> impl Iterator<Item = FeedbackCounts> {
    (1..=50usize).flat_map(|total| {
        (1..=total).flat_map(move |n| {
            (0..=total).flat_map(move |big_r| {
                (0..=big_r.min(n)).filter_map(move |r| FeedbackCounts::new(total, n, big_r, r).ok())
            })
        })
    })
}

fn weight_examples() -> (bool, String) {
    let cases = [
        ("prf(4,2,2,1)", prf_weight(&counts(4, 2, 2, 1)), 0.0),
        (
            "prf(100,10,10,5)",
            prf_weight(&counts(100, 10, 10, 5)),
            17f64.ln(),
        ),
        (
            "prf(10,2,3,2)",
            prf_weight(&counts(10, 2, 3, 2)),
            25f64.ln(),
        ),
        ("ppf(100,10,10,0)", ppf_weight(&counts(100, 10, 10, 0)), 0.0),
        (
            "ppf(100,10,10,5)",
            ppf_weight(&counts(100, 10, 10, 5)),
            5.0 * (85.5f64 / 5.5).ln(),
        ),
        (
            "ppf(140,20,5,4)",
            ppf_weight(&counts(140, 20, 5, 4)),
            4.0 * (4.5f64 * 119.5 / (1.5 * 16.5)).ln(),
        ),
    ];
    let bad: Vec<&str> = cases
        .iter()
        .filter(|(_, got, want)| (got - want).abs() > 1e-9)
        .map(|(name, ..)| *name)
        .collect();
    (
        bad.is_empty(),
        format!(
            "6 closed-form examples within 1e-9 (ppf(100,10,10,5) = {:.6}, ppf(140,20,5,4) = {:.6}); off: {bad:?}",
            cases[4].1, cases[5].1
        ),
    )
}

fn ppf_zero_at_r_zero() -> (bool, String) {
    let (mut checked, mut bad) = (0, 0);
    for c in all_counts().filter(|c| c.pertinent_containing() == 0) {
        checked += 1;
        if ppf_weight(&c) != 0.0 {
            bad += 1;
        }
    }
    (
        bad == 0,
        format!("{checked} count tuples with r = 0, N ≤ 50, {bad} non-zero"),
    )
}

fn ppf_monotone_in_r() -> (bool, String) {
    let (mut pairs, mut bad, mut bad_nonneg) = (0, 0, 0);
    let mut first = None;
    for c in all_counts().filter(|c| c.pertinent_containing() >= 1) {
        let Ok(next) = FeedbackCounts::new(
            c.total(),
            c.containing(),
            c.pertinent(),
            c.pertinent_containing() + 1,
        ) else {
            continue;
        };
        pairs += 1;
        if ppf_weight(&next) <= ppf_weight(&c) {
            bad += 1;
            if ppf_weight(&c) >= 0.0 {
                bad_nonneg += 1;
            }
            first.get_or_insert(c);
        }
    }
    let example = first
        .map(|c| {
            format!(
                "e.g. N={}, n={}, R={}: pw(r={}) = {:.4} ≥ pw(r+1)",
                c.total(),
                c.containing(),
                c.pertinent(),
                c.pertinent_containing(),
                ppf_weight(&c)
            )
        })
        .unwrap_or_default();
    (
        bad == 0,
        format!(
            "{bad} of {pairs} consecutive pairs not increasing ({bad_nonneg} where pw(r) ≥ 0); {example}"
        ),
    )
}

fn anti_monotone_in_n() -> (bool, String) {
    let (mut pairs, mut bad) = (0, 0);
    for c in all_counts() {
        let Ok(next) = FeedbackCounts::new(
            c.total(),
            c.containing() + 1,
            c.pertinent(),
            c.pertinent_containing(),
        ) else {
            continue;
        };
        pairs += 1;
        if prf_weight(&next) >= prf_weight(&c) {
            bad += 1;
        }
        if c.pertinent_containing() > 0 && ppf_weight(&next) >= ppf_weight(&c) {
            bad += 1;
        }
    }
    (
        bad == 0,
        format!("{pairs} consecutive n pairs, {bad} violations (PRF, and PPF for r ≥ 1)"),
    )
}

fn log_base_invariance() -> (bool, String) {
    let collection = toy();
    let index = Index::build(&collection);
    let toy_orders: Vec<Vec<String>> = [LogBase::Natural, LogBase::Two, LogBase::Ten]
        .iter()
        .map(|&b| {
            score_query_in(&index, &["g1", "g2"], b)
                .ids()
                .map(str::to_string)
                .collect()
        })
        .collect();
    let toy_ok = toy_orders.windows(2).all(|w| w[0] == w[1]);

    let (synthetic, judgments) = generate_synthetic(&SynthParams::default(), SEED).unwrap();
    let index = Index::build(&synthetic);
    let mut expansions = 0;
    let mut differing = 0;
    for q in synthetic.queries() {
        let pertinent: Vec<&String> = judgments.pertinent(&q.id).unwrap().iter().take(5).collect();
        for method in [FeedbackMethod::Prf, FeedbackMethod::Ppf] {
            let runs: Vec<(Vec<String>, Vec<String>)> = [LogBase::Two, LogBase::Ten]
                .iter()
                .map(|&base| {
                    let fb = PertinenceFeedback::new(&index, pertinent.iter().cloned(), method)
                        .unwrap()
                        .with_log_base(base);
                    let eq = fb.expand_query(&q.goals, ExpansionStrategy::TopK(10));
                    let goals = eq.added_goals().map(str::to_string).collect();
                    let ranking = fb.score(&eq).ids().map(str::to_string).collect();
                    (goals, ranking)
                })
                .collect();
            expansions += 1;
            if runs[0] != runs[1] {
                differing += 1;
            }
        }
    }
    (
        toy_ok && differing == 0,
        format!(
            "toy ranking {:?} in bases e/2/10; {expansions} top-10 expansions, {differing} differ between base 2 and 10",
            toy_orders[0]
        ),
    )
}

fn expansion_protocol() -> (bool, String) {
    let (collection, _) = generate_synthetic(&SynthParams::default(), SEED).unwrap();
    let manager = SessionManager::in_memory(&collection);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let vocabulary = collection.vocabulary();
    let (mut sessions, mut violations, mut max_added) = (0, 0, 0);
    while sessions < 200 {
        let len = rng.gen_range(1..=5);
        let goals: Vec<String> = vocabulary.choose_multiple(&mut rng, len).cloned().collect();
        let session = manager.create(goals.clone()).unwrap();
        let shown: Vec<String> = session.results.ids().map(str::to_string).collect();
        if shown.is_empty() {
            continue;
        }
        let marks = rng.gen_range(1..=shown.len().min(5));
        let marked: Vec<String> = shown.choose_multiple(&mut rng, marks).cloned().collect();
        manager
            .mark_pertinent(&session.session_id, marked.clone())
            .unwrap();
        let method = if rng.gen_bool(0.5) {
            FeedbackMethod::Prf
        } else {
            FeedbackMethod::Ppf
        };
        let after = manager
            .expand(&session.session_id, method, DEFAULT_EXPANSION_SIZE)
            .unwrap();
        let added: Vec<String> = after.added_goals().into_iter().map(|a| a.goal).collect();
        max_added = max_added.max(added.len());
        let disjoint = added.iter().all(|g| !goals.contains(g));
        let residual = after.results.ids().all(|o| !marked.iter().any(|m| m == o));
        if added.len() > 10 || !disjoint || !residual {
            violations += 1;
        }
        sessions += 1;
    }
    let default_k =
        DEFAULT_EXPANSION_SIZE == 10 && ExpansionStrategy::default() == ExpansionStrategy::TopK(10);
    (
        default_k && violations == 0,
        format!("default k = {DEFAULT_EXPANSION_SIZE}; 200 sessions, max |added| = {max_added}, {violations} violations"),
    )
}

fn metrics_fixture() -> (bool, String) {
    let ranking = ["o1", "o2", "o3", "o4", "o5"];
    let relevant: BTreeSet<String> = ["o1", "o3", "o4"].iter().map(|s| s.to_string()).collect();
    let curve = pr_curve_for_ids(&ranking, &relevant);
    let expected = [1.0, 1.0, 1.0, 1.0, 0.75, 0.75, 0.75, 0.75, 0.75, 0.75, 0.75];
    let fixture_ok = recall(&ranking[..3], &relevant) == 2.0 / 3.0
        && precision(&ranking[..3], &relevant) == 2.0 / 3.0
        && precision(&ranking, &relevant) == 3.0 / 5.0
        && recall(&ranking, &relevant) == 1.0
        && precision(&[] as &[&str], &relevant) == 0.0
        && curve.iter().map(|p| p.precision).eq(expected)
        && average_precision(&ranking, &relevant) == (1.0 + 2.0 / 3.0 + 3.0 / 4.0) / 3.0;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut increasing = 0;
    for _ in 0..1000 {
        let pool: Vec<String> = (0..30).map(|i| format!("o{i}")).collect();
        let mut ranked = pool.clone();
        ranked.shuffle(&mut rng);
        ranked.truncate(rng.gen_range(0..=30));
        let size = rng.gen_range(1..=10);
        let relevant: BTreeSet<String> = pool.choose_multiple(&mut rng, size).cloned().collect();
        let curve = pr_curve_for_ids(&ranked, &relevant);
        if curve.windows(2).any(|w| w[1].precision > w[0].precision) {
            increasing += 1;
        }
    }
    (
        fixture_ok && increasing == 0,
        format!("5-object fixture exact: {fixture_ok}; 1000 random rankings, {increasing} increasing curves"),
    )
}

fn overlap_analogue() -> (bool, String) {
    let (collection, judgments) = generate_synthetic(&SynthParams::default(), SEED).unwrap();
    let experiment = Experiment::new(&collection, &judgments);
    let report = experiment
        .overlap_between(5, 10, FeedbackMethod::Prf, FeedbackMethod::Ppf)
        .unwrap();
    let selves: Vec<(f64, f64)> = [FeedbackMethod::Prf, FeedbackMethod::Ppf]
        .iter()
        .map(|&m| {
            let r = experiment.overlap_between(5, 10, m, m).unwrap();
            (r.mean_set_difference_pct, r.mean_weight_difference_pct)
        })
        .collect();
    let self_zero = selves.iter().all(|&(s, w)| s == 0.0 && w == 0.0);
    (
        report.mean_set_difference_pct > 0.0 && self_zero,
        format!(
            "seed {SEED}, R=5, k=10: set difference {:.2}%, weight difference {:.2}%; self-vs-self {selves:?}",
            report.mean_set_difference_pct, report.mean_weight_difference_pct
        ),
    )
}

fn pertinex(args: &[&str], dir: &Path) -> std::process::Output {
    let output = Command::new(env!("CARGO_BIN_EXE_pertinex"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn feedback_efficacy() -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    pertinex(&["synth", "--seed", "7", "--out", "wp.json"], dir.path());
    pertinex(
        &[
            "eval",
            "feedback",
            "--collection",
            "wp.json",
            "--methods",
            "prf,ppf",
            "--R",
            "1..10",
            "--k",
            "10",
        ],
        dir.path(),
    );
    let elapsed = started.elapsed();
    let csv = std::fs::read_to_string(dir.path().join("feedback_curve.csv")).unwrap();
    let rows: BTreeSet<(String, usize)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let mut f = l.split(',');
            (
                f.next().unwrap().to_string(),
                f.next().unwrap().parse().unwrap(),
            )
        })
        .collect();
    let grid_ok = ["baseline", "prf", "ppf"]
        .iter()
        .all(|m| (1..=10).all(|r| rows.contains(&(m.to_string(), r))))
        && rows.len() == 30;

    let collection = pertinex_core::load_collection(dir.path().join("wp.json")).unwrap();
    let judgments = collection.judgments().clone();
    let experiment = Experiment::new(&collection, &judgments);
    let baseline = experiment.query_average_precisions(Arm::Baseline, 5, 10);
    let mut shares = Vec::new();
    for arm in [Arm::Prf, Arm::Ppf] {
        let fed = experiment.query_average_precisions(arm, 5, 10);
        let (mut wins, mut evaluable) = (0, 0);
        for ((_, b), (_, a)) in baseline.iter().zip(&fed) {
            if let (Some(b), Some(a)) = (b, a) {
                evaluable += 1;
                if a >= b {
                    wins += 1;
                }
            }
        }
        shares.push((arm, wins, evaluable));
    }
    let share_ok = shares
        .iter()
        .all(|&(_, w, e)| e > 0 && w as f64 >= 0.7 * e as f64);
    let summary: Vec<String> = shares
        .iter()
        .map(|(arm, w, e)| format!("{arm} ≥ baseline on {w}/{e}"))
        .collect();
    (
        share_ok && grid_ok && elapsed < Duration::from_secs(60),
        format!(
            "R=5: {}; csv has 3 arms × R 1..10: {grid_ok}; synth + eval in {elapsed:.2?}",
            summary.join(", ")
        ),
    )
}

fn determinism() -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    pertinex(&["synth", "--seed", "7", "--out", "a.json"], d);
    pertinex(&["synth", "--seed", "7", "--out", "b.json"], d);
    pertinex(
        &[
            "eval",
            "feedback",
            "--collection",
            "a.json",
            "--out",
            "a.csv",
        ],
        d,
    );
    pertinex(
        &[
            "eval",
            "feedback",
            "--collection",
            "a.json",
            "--out",
            "b.csv",
        ],
        d,
    );
    let read = |name: &str| std::fs::read(d.join(name)).unwrap();
    let synth_same = read("a.json") == read("b.json");
    let eval_same = read("a.csv") == read("b.csv");
    (
        synth_same && eval_same,
        format!("synth files identical: {synth_same}; feedback CSVs identical: {eval_same}"),
    )
}

fn main() {
    let outcomes = [
        check("possibility oracle", possibility_oracle),
        check("possibility measure characterization", characterization),
        check("mass constraints", mass_constraints),
        check("scoring fixture", scoring_fixture),
        check("weight formula examples", weight_examples),
        check("ppf zero at r = 0", ppf_zero_at_r_zero),
        check("ppf monotone in r", ppf_monotone_in_r),
        check("weights anti-monotone in n", anti_monotone_in_n),
        check("log-base invariance", log_base_invariance),
        check("expansion protocol", expansion_protocol),
        check("metrics fixture", metrics_fixture),
        check("overlap analogue", overlap_analogue),
        check("feedback efficacy", feedback_efficacy),
        check("determinism", determinism),
    ];
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("{passed} of {} criteria pass", outcomes.len());
    let unexpected: Vec<String> = outcomes
        .iter()
        .filter(|o| o.pass == KNOWN_FAILURES.contains(&o.name))
        .map(|o| format!("{} ({})", o.name, o.detail))
        .collect();
    assert!(
        unexpected.is_empty(),
        "unexpected outcomes: {unexpected:#?}"
    );
}
