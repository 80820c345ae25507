//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use isu_dialog::info_state::{InformationState, PublicIS};
use isu_dialog::nl_frontend::Tagger;
use isu_dialog::plan_engine::plan::PlanItem;
use isu_dialog::plan_engine::{Engine, EngineConfig, EngineEvent};
use isu_dialog::plan_library::{builtin_library, validate};
use isu_dialog::semantics::{Proposition, Question};
use isu_dialog::service::{run_script, Deployment, ScriptReport};
use isu_dialog::speech_acts::{grounding_role, ActKind, Content, GroundingRole, Speaker};
use isu_dialog::task_model::{evaluate_list, expand_query, refine_query, retrieve, EvaluatorConfig, ListVerdict, QueryExpr, TaskModel};

use common::{check_laws, random_corpus, random_script};

const CORPUS: &str = include_str!("fixtures/corpus_acts.tsv");
const GOLDEN: &str = include_str!("../scripts/golden.script");
const OPENING_LINE: &str = "Hello, I would like to know if there are documents about asthma";

const TAXONOMY_BUDGET: Duration = Duration::from_secs(1);
const LAWS_BUDGET: Duration = Duration::from_secs(30);
const MONOTONICITY_BUDGET: Duration = Duration::from_secs(60);
const LAW_CASES: u64 = 200;
const LAW_MAX_LEN: usize = 50;
const FINDOUT_LIMIT: u32 = 3;
const CORPORA: u64 = 50;
const QUERIES_PER_CORPUS: usize = 20;

const FROZEN_KINDS: [&[ActKind]; 7] = {
    use ActKind::*;
    [
        &[Greet],
        &[Acknowledge, Suggest, Inform, Inform, Inform, Inform, Suggest],
        &[Ask],
        &[Inform, Inform, Inform, Offer],
        &[Inform, Offer],
        &[Ask],
        &[Bye],
    ]
};

const SUBDIALOG_ORDER: [&str; 7] = [
    "Opening",
    "QueryAnalysis",
    "DocumentSearch",
    "QueryBuilding",
    "ListEvaluation",
    "DocumentDescription",
    "Ending",
];

type Outcome = Result<String, String>;

/// Rule-level state violations seen by the engine across all suites.
#[derive(Default)]
struct Tally {
    applications: usize,
    violations: Vec<String>,
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn taxonomy() -> Outcome {
    let start = Instant::now();
    let tagger = Tagger::english();
    let task = TaskModel::desk();
    let mut qud = PublicIS::default();
    let q: Question = "?endOfSearch".parse().expect("question");
    qud.issue.push(q.clone());
    qud.qud = Some(q);
    let mut n = 0;
    for line in CORPUS.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let f: Vec<&str> = line.split('\t').collect();
        let want: Vec<ActKind> = f[0].split(',').map(|k| k.parse().expect("kind")).collect();
        let ctx = if f[1] == "qud" { &qud } else { &PublicIS::default() };
        let got: Vec<ActKind> = tagger.tag(f[2], ctx, &task.terminology).iter().map(|a| a.kind).collect();
        ensure(got == want, || format!("`{}` tagged {got:?}, expected {want:?}", f[2]))?;
        n += 1;
    }
    ensure(n == 13, || format!("{n} examples, expected 13"))?;
    let grounding: BTreeSet<ActKind> = ActKind::ALL
        .into_iter()
        .filter(|k| grounding_role(*k) != GroundingRole::None)
        .collect();
    let want: BTreeSet<ActKind> = {
        use ActKind::*;
        [Accept, Acknowledge, WantsNothing, Confirm, Refuse].into()
    };
    ensure(grounding == want, || format!("grounding set {grounding:?}"))?;
    let t = start.elapsed();
    ensure(t < TAXONOMY_BUDGET, || format!("took {t:?}"))?;
    Ok(format!("{n} examples, grounding set of 5, {t:?}"))
}

fn transcription() -> Outcome {
    let lib = builtin_library();
    let diags = validate(&lib);
    ensure(diags.is_empty(), || format!("diagnostics: {diags:?}"))?;
    let opening = lib.plans.get("Opening").ok_or("no Opening plan")?;
    let want = vec![PlanItem::Say(ActKind::Greet), PlanItem::LoadPlan("QueryAnalysis".into())];
    ensure(opening.body == want, || format!("Opening body {:?}", opening.body))?;
    let search = lib.plans.get("DocumentSearch").ok_or("no DocumentSearch plan")?;
    ensure(search.persistent, || "DocumentSearch is not persistent".into())?;
    Ok(format!("{} plans, zero diagnostics", lib.plans.len()))
}

/// Replays the user acts of a transcript through a bare engine.
fn replay(report: &ScriptReport, dep: &Deployment, tally: &mut Tally) -> (Vec<Vec<EngineEvent>>, InformationState) {
    let cfg = EngineConfig {
        trace: true,
        ..dep.engine.clone()
    };
    let eng = Engine::new(&dep.library, &dep.task, cfg);
    let mut s = InformationState::new();
    let mut events = Vec::new();
    let mut inputs = vec![Vec::new()];
    inputs.extend(
        report
            .transcript()
            .iter()
            .filter(|r| r.speaker == Speaker::User)
            .map(|r| r.acts.clone()),
    );
    for input in inputs {
        let out = eng.step(&mut s, &input);
        tally.applications += out.trace.len();
        tally
            .violations
            .extend(out.violations.iter().map(|(rule, v)| format!("{rule}: {v:?}")));
        events.push(out.events);
    }
    (events, s)
}

fn accommodation(dep: &Deployment, tally: &mut Tally) -> Outcome {
    let report = run_script(dep, &format!("{OPENING_LINE}\n")).map_err(|e| e.to_string())?;
    for r in report.transcript() {
        for a in &r.acts {
            if let (ActKind::Ask, Content::Question(Question::Choice(alts))) = (a.kind, &a.content) {
                let about_goal = alts
                    .iter()
                    .any(|q| matches!(q, Question::Total(p) if p.predicate == "question"));
                ensure(!about_goal, || format!("turn {} asks {:?}", r.index, a.content))?;
            }
        }
    }
    let (events, state) = replay(&report, dep, tally);
    let first = &events[1];
    let opened = first
        .iter()
        .any(|e| matches!(e, EngineEvent::PlanCompleted { plan, .. } if plan == "Opening"));
    ensure(opened, || "Opening not completed in the first exchange".into())?;
    let delegated = first
        .iter()
        .any(|e| matches!(e, EngineEvent::PlanLoaded { plan, .. } if plan == "DocumentSearch"));
    ensure(delegated, || "QueryAnalysis did not dispatch to DocumentSearch".into())?;
    // QueryAnalysis is done once nothing in its frame can still pose a question.
    if let Some(f) = state.private.plan.iter().find(|f| f.plan == "QueryAnalysis") {
        let mut asking = f.wait.is_some();
        for item in &f.remaining {
            item.walk(&mut |i| asking |= i.question().is_some());
        }
        ensure(!asking, || format!("QueryAnalysis still has questions: {:?}", f.remaining))?;
    }
    let grounded = report.session.state.public.com.contains(&Proposition::unary("question", "Document"));
    ensure(grounded, || "question(Document) not grounded".into())?;
    Ok("Opening and QueryAnalysis complete in one exchange; no goal choice question".into())
}

fn golden(dep: &Deployment, tally: &mut Tally) -> Outcome {
    let first = run_script(dep, GOLDEN).map_err(|e| e.to_string())?;
    ensure(first.passed(), || format!("act kinds differ:\n{}", first.diff()))?;
    let kinds: Vec<Vec<ActKind>> = first
        .transcript()
        .iter()
        .filter(|r| r.speaker == Speaker::System)
        .map(|r| r.acts.iter().map(|a| a.kind).collect())
        .collect();
    let frozen: Vec<Vec<ActKind>> = FROZEN_KINDS.iter().map(|k| k.to_vec()).collect();
    ensure(kinds == frozen, || format!("system act kinds {kinds:?}"))?;

    let (events, _) = replay(&first, dep, tally);
    let mut order: Vec<String> = Vec::new();
    for e in events.iter().flatten() {
        let name = match e {
            EngineEvent::PlanLoaded { plan, .. } => plan.as_str(),
            EngineEvent::Ending => "Ending",
            _ => continue,
        };
        if !order.iter().any(|o| o == name) {
            order.push(name.to_string());
        }
    }
    ensure(order == SUBDIALOG_ORDER, || format!("sub-dialog order {order:?}"))?;

    let second = run_script(dep, GOLDEN).map_err(|e| e.to_string())?;
    ensure(first.transcript_jsonl() == second.transcript_jsonl(), || "replay differs".into())?;
    let (replayed, _) = replay(&second, dep, &mut Tally::default());
    ensure(replayed == events, || "engine events differ on replay".into())?;
    Ok(format!("{} system turns, order {}", kinds.len(), order.join(" > ")))
}

fn laws(tally: &mut Tally) -> Outcome {
    let start = Instant::now();
    let task = TaskModel::desk();
    let mut checks = 0;
    let mut steps = 0;
    for seed in 0..LAW_CASES {
        let len = 1 + (seed as usize * 7919) % LAW_MAX_LEN;
        let r = check_laws(&random_script(seed, len), &task, FINDOUT_LIMIT);
        checks += r.findout_checks;
        steps += r.steps;
        tally.applications += r.steps;
        tally.violations.extend(r.violations.iter().filter(|v| v.starts_with("state law")).cloned());
        let laws: Vec<&String> = r.violations.iter().filter(|v| !v.starts_with("state law")).collect();
        ensure(laws.is_empty(), || format!("seed {seed}: {laws:?}"))?;
    }
    ensure(checks > 0, || "no unanswered findout was exercised".into())?;
    let t = start.elapsed();
    ensure(t < LAWS_BUDGET, || format!("took {t:?}"))?;
    Ok(format!("{LAW_CASES} scripts, {steps} turns, {checks} unanswered findouts, {t:?}"))
}

fn thresholds() -> Outcome {
    let task = TaskModel::desk();
    let cfg = EvaluatorConfig::new(3, 30).map_err(|e| e.to_string())?;
    let doc = task.index.iter().next().ok_or("empty index")?;
    for n in 0..100 {
        let list = vec![doc; n];
        let v = evaluate_list(&list, &cfg);
        let want = if n < 3 {
            ListVerdict::NotEnough(n)
        } else if n > 30 {
            ListVerdict::TooMany(n)
        } else {
            ListVerdict::Acceptable(n)
        };
        ensure(v == want, || format!("n={n}: {v:?}"))?;
    }
    Ok("n in 0..100 partitioned at 3 and 30, bounds acceptable".into())
}

fn monotonicity() -> Outcome {
    let start = Instant::now();
    let (mut queries, mut expansions, mut refinements) = (0, 0, 0);
    for seed in 0..CORPORA {
        let corpus = random_corpus(seed);
        let task = corpus.model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let run = |q: &QueryExpr| -> Result<BTreeSet<String>, String> {
            let got: Vec<String> = retrieve(q, &task.terminology, &task.index)
                .map_err(|e| e.to_string())?
                .iter()
                .map(|d| d.id.clone())
                .collect();
            let scan = corpus.scan(q);
            ensure(got == scan, || format!("corpus {seed}: {q:?} retrieved {got:?}, scan {scan:?}"))?;
            Ok(got.into_iter().collect())
        };
        for _ in 0..QUERIES_PER_CORPUS {
            let q = corpus.random_query(&mut rng);
            queries += 1;
            let base = run(&q)?;
            for (e, _) in expand_query(&q, &task.terminology) {
                expansions += 1;
                let r = run(&e)?;
                ensure(r.is_superset(&base), || format!("corpus {seed}: {e:?} lost documents of {q:?}"))?;
            }
            let com: Vec<Proposition> = corpus
                .keywords
                .iter()
                .take(2)
                .map(|k| Proposition::unary("keyword", k.as_str()))
                .collect();
            for (r, _) in refine_query(&q, &task.terminology, &task.index, &com) {
                refinements += 1;
                let got = run(&r)?;
                ensure(got.is_subset(&base), || format!("corpus {seed}: {r:?} gained documents over {q:?}"))?;
            }
        }
    }
    ensure(expansions > 0 && refinements > 0, || "no candidates generated".into())?;
    let t = start.elapsed();
    ensure(t < MONOTONICITY_BUDGET, || format!("took {t:?}"))?;
    Ok(format!(
        "{CORPORA} corpora, {queries} queries, {expansions} expansions, {refinements} refinements, {t:?}"
    ))
}

fn well_formed(tally: &Tally) -> Outcome {
    ensure(tally.violations.is_empty(), || {
        format!("{} violations, first: {}", tally.violations.len(), tally.violations[0])
    })?;
    Ok(format!("{} checked rule applications and turns, zero violations", tally.applications))
}

#[test]
fn acceptance() {
    let dep = Deployment::desk();
    let mut tally = Tally::default();
    let results = [
        ("taxonomy fixture", taxonomy()),
        ("plan transcription", transcription()),
        ("accommodation trace", accommodation(&dep, &mut tally)),
        ("golden dialog", golden(&dep, &mut tally)),
        ("findout/raise laws", laws(&mut tally)),
        ("threshold partition", thresholds()),
        ("monotonicity", monotonicity()),
    ];
    let wf = well_formed(&tally);
    let mut failed = 0;
    for (name, r) in results.iter().chain(std::iter::once(&("state well-formedness", wf))) {
        match r {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
