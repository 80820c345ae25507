#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use isu_dialog::info_state::{InformationState, WaitKind};
use isu_dialog::plan_engine::{Engine, EngineConfig, EngineEvent, StepOutput};
use isu_dialog::plan_library::builtin_library;
use isu_dialog::semantics::{resolves, Answer, Proposition, Question};
use isu_dialog::speech_acts::{ActKind, Content, SpeechAct};
use isu_dialog::task_model::{Conjunct, DocumentIndex, EvaluatorConfig, QueryExpr, TaskModel, Terminology};

pub const SUBHEADINGS: [&str; 4] = ["therapy", "diagnosis", "etiology", "prevention"];
pub const RESOURCES: [&str; 3] = ["guideline", "review", "patient_information"];
pub const METAS: [&str; 3] = ["cardio", "neuro", "pneumo"];

/// A random keyword forest with documents, written in the loader formats.
pub struct Corpus {
    pub keywords: Vec<String>,
    /// keyword -> its broader keyword.
    pub parent: BTreeMap<String, String>,
    /// keyword -> its specialties.
    pub metas: BTreeMap<String, BTreeSet<String>>,
    pub docs: Vec<Doc>,
    pub terminology_tsv: String,
    pub documents_tsv: String,
}

#[derive(Debug, Clone)]
pub struct Doc {
    pub id: String,
    pub keywords: BTreeSet<String>,
    pub subheadings: BTreeSet<String>,
    pub resource: String,
}

pub fn random_corpus(seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_kw = rng.gen_range(4..16);
    let keywords: Vec<String> = (0..n_kw).map(|i| format!("kw{i}")).collect();
    let mut parent = BTreeMap::new();
    let mut metas: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (i, k) in keywords.iter().enumerate() {
        if i > 0 && rng.gen_bool(0.6) {
            parent.insert(k.clone(), keywords[rng.gen_range(0..i)].clone());
        }
        let m: BTreeSet<String> = METAS.iter().filter(|_| rng.gen_bool(0.3)).map(|m| m.to_string()).collect();
        metas.insert(k.clone(), m);
    }
    let mut t = String::from("# id\tkind\tlabel\tsynonyms\tbroader\tmeta_parents\n");
    for m in METAS {
        t.push_str(&format!("{m}\tmetaTerm\t{m} label\t\t\t\n"));
    }
    for s in SUBHEADINGS {
        t.push_str(&format!("{s}\tsubheading\t{s} label\t\t\t\n"));
    }
    for r in RESOURCES {
        t.push_str(&format!("{r}\tresourceType\t{r} label\t\t\t\n"));
    }
    for k in &keywords {
        let b = parent.get(k).cloned().unwrap_or_default();
        let m: Vec<&str> = metas[k].iter().map(String::as_str).collect();
        t.push_str(&format!("{k}\tkeyword\t{k} label\t\t{b}\t{}\n", m.join(";")));
    }
    let n_docs = rng.gen_range(5..60);
    let mut docs = Vec::new();
    let mut d = String::new();
    for i in 0..n_docs {
        let kws: BTreeSet<String> = (0..rng.gen_range(1..4))
            .map(|_| keywords.choose(&mut rng).unwrap().clone())
            .collect();
        let subs: BTreeSet<String> = SUBHEADINGS.iter().filter(|_| rng.gen_bool(0.35)).map(|s| s.to_string()).collect();
        let res = RESOURCES.choose(&mut rng).unwrap().to_string();
        let id = format!("d{i:03}");
        d.push_str(&format!(
            "{id}\tTitle {i}\t{}\t{}\t{res}\thttps://docs.example.org/{id}\tAbout {id}.\n",
            kws.iter().cloned().collect::<Vec<_>>().join(";"),
            subs.iter().cloned().collect::<Vec<_>>().join(";"),
        ));
        docs.push(Doc {
            id,
            keywords: kws,
            subheadings: subs,
            resource: res,
        });
    }
    Corpus {
        keywords,
        parent,
        metas,
        docs,
        terminology_tsv: t,
        documents_tsv: d,
    }
}

impl Corpus {
    pub fn model(&self) -> TaskModel {
        let t = Terminology::parse(&self.terminology_tsv).expect("generated terminology loads");
        let i = DocumentIndex::parse(&self.documents_tsv, &t).expect("generated documents load");
        TaskModel::new(t, i, EvaluatorConfig::default())
    }

    /// Whether `k` equals `ancestor` or sits below it, following parent links.
    pub fn under(&self, k: &str, ancestor: &str) -> bool {
        let mut cur = Some(k.to_string());
        let mut steps = 0;
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            steps += 1;
            if steps > self.keywords.len() {
                return false;
            }
            cur = self.parent.get(&c).cloned();
        }
        false
    }

    /// Brute-force scan: ids of documents matching `q`.
    pub fn scan(&self, q: &QueryExpr) -> Vec<String> {
        self.docs
            .iter()
            .filter(|d| {
                q.conjuncts.iter().all(|c| {
                    d.keywords.iter().any(|k| self.under(k, &c.keyword))
                        && c.subheading.as_ref().is_none_or(|s| d.subheadings.contains(s))
                }) && q
                    .meta_filter
                    .as_ref()
                    .is_none_or(|m| d.keywords.iter().any(|k| self.metas[k].contains(m)))
                    && q.resource_filter.as_ref().is_none_or(|r| d.resource == *r)
            })
            .map(|d| d.id.clone())
            .collect()
    }

    pub fn random_query(&self, rng: &mut ChaCha8Rng) -> QueryExpr {
        let mut conjuncts = Vec::new();
        for _ in 0..rng.gen_range(1..3) {
            let k = self.keywords.choose(rng).unwrap().clone();
            let c = if rng.gen_bool(0.3) {
                Conjunct::with(k, *SUBHEADINGS.choose(rng).unwrap())
            } else {
                Conjunct::bare(k)
            };
            if !conjuncts.contains(&c) {
                conjuncts.push(c);
            }
        }
        QueryExpr {
            conjuncts,
            meta_filter: rng.gen_bool(0.25).then(|| METAS.choose(rng).unwrap().to_string()),
            resource_filter: rng.gen_bool(0.25).then(|| RESOURCES.choose(rng).unwrap().to_string()),
        }
    }
}

// ---- engine laws ----

pub const KEYWORDS: [&str; 6] = ["asthma", "parasomny", "heart_failure", "insomnia", "medicine", "organ_donation"];

/// User moves that neither answer nor redirect anything.
pub fn is_non_answer(a: &SpeechAct) -> bool {
    a.kind == ActKind::Acknowledge && a.content.is_empty() || a.content == Content::Unknown
}

pub fn random_user_act(rng: &mut ChaCha8Rng) -> SpeechAct {
    let user = |k, ps: Vec<Proposition>| SpeechAct::user(k, Content::Props(ps));
    let pick = rng.gen_range(0..100);
    let k = KEYWORDS[rng.gen_range(0..KEYWORDS.len())];
    match pick {
        0..=19 => SpeechAct::user(ActKind::Acknowledge, Content::Empty),
        20..=34 => SpeechAct::user(ActKind::Inform, Content::Unknown),
        35..=46 => SpeechAct::user(ActKind::Accept, Content::Empty),
        47..=58 => SpeechAct::user(ActKind::Refuse, Content::Empty),
        59..=63 => user(
            ActKind::RequestInfo,
            vec![Proposition::unary("question", "Document"), Proposition::unary("term", k)],
        ),
        64..=67 => user(ActKind::Answer, vec![Proposition::unary("question", "Definition")]),
        68..=69 => user(ActKind::Answer, vec![Proposition::unary("question", "Explanation")]),
        70..=76 => user(ActKind::Answer, vec![Proposition::unary("term", k)]),
        77..=81 => user(ActKind::Answer, vec![Proposition::unary("subheading", "therapy")]),
        82..=85 => user(ActKind::Answer, vec![Proposition::unary("metaTerm", "cardiology")]),
        86..=89 => user(ActKind::Answer, vec![Proposition::unary("keyword", k)]),
        90..=93 => SpeechAct::user(ActKind::WantsNothing, Content::Empty),
        94..=97 => SpeechAct::user(ActKind::Greet, Content::Empty),
        _ => SpeechAct::user(ActKind::Bye, Content::Empty),
    }
}

/// A random script: each turn is one or two user acts.
pub fn random_script(seed: u64, len: usize) -> Vec<Vec<SpeechAct>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| {
            let n = if rng.gen_bool(0.2) { 2 } else { 1 };
            (0..n).map(|_| random_user_act(&mut rng)).collect()
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct LawReport {
    pub steps: usize,
    pub findout_checks: usize,
    pub violations: Vec<String>,
    pub state_violations: usize,
}

fn com_resolves(s: &InformationState, q: &Question) -> bool {
    s.public.com.iter().any(|p| resolves(&Answer::Instance(p.clone()), q))
}

/// Runs a script and checks the question-posing laws turn by turn.
pub fn check_laws(script: &[Vec<SpeechAct>], task: &TaskModel, limit: u32) -> LawReport {
    let lib = builtin_library();
    let cfg = EngineConfig {
        findout_limit: limit,
        ..EngineConfig::default()
    };
    let eng = Engine::new(&lib, task, cfg);
    let mut s = InformationState::new();
    let mut report = LawReport::default();
    let mut asks: HashMap<(u64, Question, bool), u32> = HashMap::new();
    let mut run = |s: &mut InformationState, input: &[SpeechAct], report: &mut LawReport| -> StepOutput {
        let before = s.clone();
        let out = eng.step(s, input);
        report.steps += 1;
        report.state_violations += out.violations.len();
        for (rule, v) in &out.violations {
            report.violations.push(format!("state law {v:?} after {rule}"));
        }
        for a in &out.acts {
            if let (ActKind::Ask, Content::Question(q)) = (a.kind, &a.content) {
                if com_resolves(s, q) {
                    report.violations.push(format!("asked already resolved {q}"));
                }
            }
        }
        for e in &out.events {
            match e {
                EngineEvent::Asked {
                    question,
                    kind,
                    activation,
                    count,
                } => {
                    let key = (*activation, question.clone(), *kind == WaitKind::Findout);
                    let n = asks.entry(key).or_default();
                    *n += 1;
                    if *n != *count {
                        report.violations.push(format!("ask count {count} but {n} asks of {question}"));
                    }
                    if *kind == WaitKind::Findout && *n > limit {
                        report.violations.push(format!("findout {question} asked {n} > {limit} times"));
                    }
                    if *kind == WaitKind::Raise && *n > 1 {
                        report.violations.push(format!("raise {question} asked {n} times"));
                    }
                }
                EngineEvent::Aborted { question, activation } => {
                    let n = asks.get(&(*activation, question.clone(), true)).copied().unwrap_or(0);
                    if n != limit {
                        report.violations.push(format!("aborted {question} after {n} asks"));
                    }
                }
                _ => {}
            }
        }
        // An open findout on top, met only by non-answers, is re-asked or aborted.
        let top = before.private.plan.last().and_then(|f| f.wait.clone().map(|w| (f.activation, w)));
        if let Some((activation, w)) = top {
            let quiet = !input.is_empty() && input.iter().all(is_non_answer);
            if w.kind == WaitKind::Findout && !w.suspended && quiet && !com_resolves(&before, &w.question) {
                report.findout_checks += 1;
                let reasked = out.events.iter().any(|e| {
                    matches!(e, EngineEvent::Asked { question, activation: a, count, .. }
                        if *question == w.question && *a == activation && *count == w.asks + 1)
                });
                let aborted = out.events.iter().any(|e| {
                    matches!(e, EngineEvent::Aborted { question, activation: a } if *question == w.question && *a == activation)
                });
                let ok = if w.asks < limit { reasked && !aborted } else { aborted && !reasked };
                if !ok {
                    report.violations.push(format!(
                        "findout {} with {} asks: reasked={reasked} aborted={aborted}",
                        w.question, w.asks
                    ));
                }
            }
        }
        out
    };
    run(&mut s, &[], &mut report);
    for turn in script {
        if s.ended {
            break;
        }
        run(&mut s, turn, &mut report);
    }
    report
}
