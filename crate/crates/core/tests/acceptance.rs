//! Acceptance checks. Runs without the test harness and prints one
//! PASS/FAIL line per criterion.

mod common;

use std::collections::{BTreeMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use charprobe::annotation::{self, cohen_kappa, AnnotationError, AnnotationStore};
use charprobe::clusterlab::{calinski_harabasz, kmeans_with, select_k, silhouette, KMeansConfig};
use charprobe::corpus::{english_ratio, filter_tweets, Cleaner, CorpusError, EnglishDictionary, RawTweet};
use charprobe::embedkit::{centroid, centroid_distance, Metric};
use charprobe::genclient::{collect_valid, CollectSettings, DecodingParams, ScriptedBackend};
use charprobe::promptkit::{render_entity_prompt, Catalog, Entity, Family, PrefixPrompt, Slot, PREFIX_PROMPTS};
use charprobe::report::{build_bundle, BuildOptions, Evaluation, PERFORMANCE_ROWS};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

type Check = fn() -> Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

#[derive(Deserialize)]
struct CleaningCase {
    raw: String,
    expected: String,
}

const TOKEN_POOL: &[&str] = &[
    "Hello", "WORLD", "farmers", "@user", "#Tag", "https://t.co/x1", "www.site.org", "🔥", "🙏🏽", "❤️", "😂",
    "don't", "it’s", "“quote”", "(paren)", "a.b.c", "!!!", "...", "$5", "+", ":", ":fire:", "_x_", "İstanbul",
    "ÉCOLE", "naïve", "tab\there", "a@b", "x#y", "'", "--", "e-mail", "100%", "👍👍", "rt", "\u{200d}", "ß",
];

fn random_text(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(0..12);
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.2) {
                (0..rng.gen_range(1..6))
                    .map(|_| char::from_u32(rng.gen_range(0x20..0x2FFF)).unwrap_or('?'))
                    .collect()
            } else {
                TOKEN_POOL.choose(rng).unwrap().to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(if rng.gen_bool(0.5) { " " } else { "  " })
}

fn cleaning() -> Result<(), String> {
    let start = Instant::now();
    let cleaner = Cleaner::default();
    let text = std::fs::read_to_string(common::fixture("cleaning.jsonl")).map_err(|e| e.to_string())?;
    let cases: Vec<CleaningCase> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    ensure(cases.len() == 20, || format!("{} cases", cases.len()))?;
    for c in &cases {
        let got = cleaner.clean(&c.raw);
        ensure(got == c.expected, || format!("{:?}: got {got:?}, want {:?}", c.raw, c.expected))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let raw = random_text(&mut rng);
        let once = cleaner.clean(&raw);
        let twice = cleaner.clean(&once);
        ensure(once == twice, || format!("not idempotent on {raw:?}: {once:?} then {twice:?}"))?;
    }
    within(start, Duration::from_secs(5))
}

fn english_filter() -> Result<(), String> {
    let words = ["a", "b", "c", "d", "e", "f", "g"];
    let dict = EnglishDictionary::from_words(words);
    let tweet = |id: &str, text: &str| RawTweet {
        id: id.into(),
        text: text.into(),
        corpus_tag: "t".into(),
    };
    let raws = [tweet("exact", "a b c d e f g x y z"), tweet("above", "a b c d e f g x y")];
    let out = filter_tweets(&raws, 0.70, &Cleaner::default(), &dict).map_err(|e| e.to_string())?;
    let kept: Vec<_> = out.kept.iter().map(|t| t.id.as_str()).collect();
    ensure(kept == ["above"], || format!("kept {kept:?}"))?;

    let vocab = ["a", "b", "c", "zz", "qq", "w1", ":fire:", ":red_heart:", "d", "e"];
    let members: HashSet<&str> = words.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let tokens: Vec<&str> = (0..rng.gen_range(0..15)).map(|_| *vocab.choose(&mut rng).unwrap()).collect();
        let text = tokens.join(" ");
        let counted: Vec<&&str> = tokens.iter().filter(|t| !(t.starts_with(':') && t.ends_with(':'))).collect();
        let hits = counted.iter().filter(|t| members.contains(**t)).count();
        match english_ratio(&text, &dict) {
            Ok(r) => ensure(!counted.is_empty() && r == hits as f64 / counted.len() as f64, || {
                format!("{text:?}: got {r}, counter {hits}/{}", counted.len())
            })?,
            Err(CorpusError::EmptyText) => ensure(counted.is_empty(), || format!("{text:?}: unexpected EmptyText"))?,
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(())
}

const TWEET: &str = "farmers need our support";
const SYNOPSIS: &str = "SYN";

fn family_of(id: &str) -> Family {
    let name = id.split('.').next().unwrap();
    Family::ALL.into_iter().find(|f| f.as_str() == name).unwrap()
}

fn prompts() -> Result<(), String> {
    let golden = std::fs::read_to_string(common::manifest_dir().join("tests/golden/prompts.txt")).map_err(|e| e.to_string())?;
    let catalog = Catalog::bundled();
    let entity = Entity::new("Arjun Mehra", "fixture").unwrap();
    let mut seen = 0;
    for line in golden.lines() {
        let (id, want) = line.split_once('\t').unwrap();
        let want = want.replace("\\n", "\n");
        let family = family_of(id);
        let got = match family {
            Family::EntityPrefix => {
                let prefix = PrefixPrompt::by_id(id.split_once('.').unwrap().1).map_err(|e| e.to_string())?;
                render_entity_prompt(&entity, &prefix)
            }
            _ => {
                let qid = id.split_once('.').unwrap().1;
                let synopsis = (family == Family::RecordRc).then_some(SYNOPSIS);
                catalog.render_question(family, qid, TWEET, synopsis)
            }
        }
        .map_err(|e| format!("{id}: {e}"))?;
        ensure(got.rendered == want, || format!("{id}: got {:?}, want {want:?}", got.rendered))?;
        seen += 1;
    }
    ensure(seen == catalog.templates().len(), || format!("{seen} golden rows, {} templates", catalog.templates().len()))?;
    ensure(catalog.family(Family::EntityPrefix).count() == PREFIX_PROMPTS.len(), || "prefix count".into())?;

    let words = ["farmers", "protest", "delhi", "we", "stand", "with", "you", "now", ":fire:", "it's", "Q:", "A:", "\"", "."];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let tweet = (0..rng.gen_range(1..10)).map(|_| *words.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" ");
        for t in catalog.templates().iter().filter(|t| t.family != Family::EntityPrefix) {
            let synopsis = (t.family == Family::RecordRc).then_some(SYNOPSIS);
            let inst = catalog
                .render_question(t.family, t.question_id(), &tweet, synopsis)
                .map_err(|e| format!("{}: {e}", t.id))?;
            let slots = catalog.parse(&t.id, &inst.rendered).map_err(|e| format!("{} on {tweet:?}: {e}", t.id))?;
            ensure(slots.get(&Slot::Tweet).map(String::as_str) == Some(tweet.as_str()), || {
                format!("{}: round trip of {tweet:?} gave {slots:?}", t.id)
            })?;
        }
    }
    Ok(())
}

fn generate_until_valid() -> Result<(), String> {
    let dict = EnglishDictionary::bundled();
    let prompt = render_entity_prompt(&Entity::new("Arjun Mehra", "fixture").unwrap(), &PREFIX_PROMPTS[0]).unwrap();
    let mut first = None;
    for seed in 0..10u64 {
        let backend = ScriptedBackend::cycle("mock", ["#### @@@", "a good leader who works hard for the people."]);
        let settings = CollectSettings {
            n_target: 10,
            max_attempts: 100,
            params: DecodingParams {
                seed: Some(seed),
                ..Default::default()
            },
            ..Default::default()
        };
        let c = collect_valid(&backend, &prompt, 0, &settings, &dict).map_err(|e| e.to_string())?;
        ensure(c.fail_count() == 10 && c.attempt_count() == 20, || {
            format!("seed {seed}: fail_count {} attempts {}", c.fail_count(), c.attempt_count())
        })?;
        let shape: Vec<(bool, String)> = c.attempts.iter().map(|a| (a.valid, a.text.clone())).collect();
        match &first {
            None => first = Some(shape),
            Some(f) => ensure(*f == shape, || format!("seed {seed}: attempts differ"))?,
        }
    }
    Ok(())
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn means(points: &[Vec<f64>], assign: &[usize], k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|c| {
            let idx: Vec<usize> = (0..points.len()).filter(|&i| assign[i] == c).collect();
            (0..2).map(|d| idx.iter().map(|&i| points[i][d]).sum::<f64>() / idx.len() as f64).collect()
        })
        .collect()
}

fn exhaustive_optimum(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    let mut assign = vec![0usize; n];
    for code in 0..k.pow(n as u32) {
        let mut c = code;
        for a in assign.iter_mut() {
            *a = c % k;
            c /= k;
        }
        if (0..k).any(|g| !assign.contains(&g)) {
            continue;
        }
        let m = means(points, &assign, k);
        let d: f64 = (0..n).map(|i| sq(&points[i], &m[assign[i]])).sum();
        best = best.min(d);
    }
    best
}

fn reference_silhouette(points: &[Vec<f64>], assign: &[usize]) -> f64 {
    let n = points.len();
    let labels: Vec<usize> = assign.iter().copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let mut total = 0.0;
    for i in 0..n {
        let dist_to = |c: usize| -> (f64, usize) {
            let js: Vec<usize> = (0..n).filter(|&j| j != i && assign[j] == c).collect();
            (js.iter().map(|&j| sq(&points[i], &points[j]).sqrt()).sum(), js.len())
        };
        let (own_sum, own_n) = dist_to(assign[i]);
        if own_n == 0 {
            continue;
        }
        let a = own_sum / own_n as f64;
        let b = labels
            .iter()
            .filter(|&&c| c != assign[i])
            .map(|&c| {
                let (s, m) = dist_to(c);
                s / m as f64
            })
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / n as f64
}

fn reference_ch(points: &[Vec<f64>], assign: &[usize], k: usize) -> f64 {
    let n = points.len();
    let all: Vec<f64> = (0..2).map(|d| points.iter().map(|p| p[d]).sum::<f64>() / n as f64).collect();
    let m = means(points, assign, k);
    let sizes: Vec<usize> = (0..k).map(|c| assign.iter().filter(|&&a| a == c).count()).collect();
    let between: f64 = (0..k).map(|c| sizes[c] as f64 * sq(&m[c], &all)).sum();
    let within: f64 = (0..n).map(|i| sq(&points[i], &m[assign[i]])).sum();
    (between / (k - 1) as f64) / (within / (n - k) as f64)
}

fn clustering_oracle() -> Result<(), String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for instance in 0..30u64 {
        let k = if instance % 2 == 0 { 2 } else { 3 };
        let n = rng.gen_range(k + 1..=8);
        let points: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)]).collect();
        let report = kmeans_with(
            &points,
            &KMeansConfig {
                k,
                seed: instance,
                restarts: 25,
                ..Default::default()
            },
        )
        .map_err(|e| e.to_string())?;
        let opt = exhaustive_optimum(&points, k);
        ensure(report.distortion <= opt * (1.0 + 1e-6), || {
            format!("instance {instance}: distortion {} vs optimum {opt}", report.distortion)
        })?;
        let s_ref = reference_silhouette(&points, &report.assignments);
        let s = silhouette(&points, &report.assignments).map_err(|e| e.to_string())?;
        ensure((s - s_ref).abs() <= 1e-9 && (report.silhouette.unwrap() - s_ref).abs() <= 1e-9, || {
            format!("instance {instance}: silhouette {s} vs {s_ref}")
        })?;
        let ch_ref = reference_ch(&points, &report.assignments, k);
        let ch = calinski_harabasz(&points, &report.assignments).map_err(|e| e.to_string())?;
        ensure((ch - ch_ref).abs() <= 1e-9 * ch_ref.abs().max(1.0), || {
            format!("instance {instance}: calinski-harabasz {ch} vs {ch_ref}")
        })?;
    }
    within(start, Duration::from_secs(10))
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn k_selection() -> Result<(), String> {
    let centers = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]];
    let mut hits = 0;
    let mut chosen = Vec::new();
    for trial in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + trial);
        let points: Vec<Vec<f64>> = (0..200)
            .map(|i| {
                let c = centers[i % 4];
                vec![c[0] + gaussian(&mut rng), c[1] + gaussian(&mut rng)]
            })
            .collect();
        let sel = select_k(&points, 2..=10, 10, trial).map_err(|e| e.to_string())?;
        hits += usize::from(sel.chosen_k == 4);
        chosen.push(sel.chosen_k);
    }
    ensure(hits >= 19, || format!("k = 4 in {hits} of 20 trials: {chosen:?}"))
}

fn kappa() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut checked = 0;
    while checked < 50 {
        let n = rng.gen_range(2..40);
        let a: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let b: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let nf = n as f64;
        let po = a.iter().zip(&b).filter(|(x, y)| x == y).count() as f64 / nf;
        let pa = a.iter().filter(|x| **x).count() as f64 / nf;
        let pb = b.iter().filter(|x| **x).count() as f64 / nf;
        let pe = pa * pb + (1.0 - pa) * (1.0 - pb);
        if pe == 1.0 {
            continue;
        }
        let want = (po - pe) / (1.0 - pe);
        let got = cohen_kappa(&a, &b).map_err(|e| e.to_string())?;
        ensure((got - want).abs() <= 1e-12, || format!("{a:?} {b:?}: {got} vs {want}"))?;
        checked += 1;
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (x, y, count) in [(true, true, 4), (true, false, 1), (false, true, 1), (false, false, 4)] {
        for _ in 0..count {
            a.push(x);
            b.push(y);
        }
    }
    let k = cohen_kappa(&a, &b).map_err(|e| e.to_string())?;
    ensure(k == 0.6, || format!("fixture kappa {k}"))?;
    for (x, y) in [(vec![true; 6], vec![true; 6]), (vec![false; 4], vec![false; 4])] {
        ensure(cohen_kappa(&x, &y) == Err(AnnotationError::DegenerateMarginals), || "degenerate marginals accepted".into())?;
    }
    Ok(())
}

fn centroid_math() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..1000 {
        let dim = rng.gen_range(1..8);
        let set = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
            (0..rng.gen_range(1..10)).map(|_| (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect()).collect()
        };
        let a = set(&mut rng);
        let b = set(&mut rng);
        let ar: Vec<&[f64]> = a.iter().map(Vec::as_slice).collect();
        let br: Vec<&[f64]> = b.iter().map(Vec::as_slice).collect();
        for metric in [Metric::Cosine, Metric::Euclidean] {
            let ab = centroid_distance(&ar, &br, metric);
            let ba = centroid_distance(&br, &ar, metric);
            ensure(ab == ba, || format!("{metric:?} not symmetric: {ab:?} {ba:?}"))?;
            if let Ok(aa) = centroid_distance(&ar, &ar, metric) {
                ensure(aa == 0.0, || format!("{metric:?} self distance {aa}"))?;
            }
            if let (Metric::Cosine, Ok(d)) = (metric, ab) {
                ensure((0.0..=2.0).contains(&d), || format!("cosine distance {d}"))?;
            }
        }
        let shift: Vec<f64> = (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let moved: Vec<Vec<f64>> = a.iter().map(|v| v.iter().zip(&shift).map(|(x, t)| x + t).collect()).collect();
        let mr: Vec<&[f64]> = moved.iter().map(Vec::as_slice).collect();
        let c = centroid(&ar).map_err(|e| e.to_string())?;
        let cm = centroid(&mr).map_err(|e| e.to_string())?;
        for ((x, t), y) in c.iter().zip(&shift).zip(&cm) {
            ensure((x + t - y).abs() <= 1e-12, || format!("translated centroid off by {}", (x + t - y).abs()))?;
        }
    }
    Ok(())
}

fn cents(s: &str) -> i64 {
    let (w, f) = s.split_once('.').unwrap();
    w.parse::<i64>().unwrap() * 100 + f.parse::<i64>().unwrap()
}

fn end_to_end() -> Result<(), String> {
    let start = Instant::now();
    let golden = common::read_tree(&common::manifest_dir().join("tests/golden/e2e"));
    for round in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let out = common::run_e2e(dir.path());
        let got = common::read_tree(&out);
        let names = |t: &[(String, Vec<u8>)]| t.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
        ensure(names(&got) == names(&golden), || format!("round {round}: files {:?} vs {:?}", names(&got), names(&golden)))?;
        for ((name, g), (_, w)) in got.iter().zip(&golden) {
            ensure(g == w, || format!("round {round}: {name} differs from golden"))?;
        }
    }
    within(start, Duration::from_secs(30))?;

    let file = |name: &str| {
        golden
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| String::from_utf8(b.clone()).unwrap())
            .unwrap()
    };
    let perf = file("prompt_performance.csv");
    let labels: Vec<&str> = perf.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    ensure(labels == PERFORMANCE_ROWS, || format!("performance rows {labels:?}"))?;
    ensure(perf.lines().next().unwrap().split(',').count() == 9, || "performance columns".into())?;
    let sentiment = file("sentiment_by_prompt.csv");
    let header: Vec<&str> = sentiment.lines().next().unwrap().split(',').collect();
    let pos = header.iter().position(|h| *h == "pct_positive").unwrap();
    let neg = header.iter().position(|h| *h == "pct_negative").unwrap();
    for line in sentiment.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        ensure(cents(cells[pos]) + cents(cells[neg]) == 10000, || format!("pos + neg != 100 in {line:?}"))?;
    }
    Ok(())
}

fn annotation_csv() -> Result<(), String> {
    let store = AnnotationStore::permissive();
    let n = annotation::import_csv(&store, &common::fixture("annotations_20.csv")).map_err(|e| e.to_string())?;
    ensure(n == 40, || format!("imported {n} rows"))?;
    let agreement = store.agreement("ann_a", "ann_b").map_err(|e| e.to_string())?;
    // relevant: p_o = 16/20, p_e = 0.52; characterizing: p_o = 18/20, p_e = 0.58
    let (kr, kc) = (agreement.kappa_relevant.unwrap(), agreement.kappa_characterizing.unwrap());
    ensure((kr - 7.0 / 12.0).abs() <= 1e-12, || format!("kappa relevant {kr}"))?;
    ensure((kc - 16.0 / 21.0).abs() <= 1e-12, || format!("kappa characterizing {kc}"))?;
    let s = store.relevance_summary();
    ensure(s.total_relevant == s.only_relevant + s.relevant_and_characterizing, || format!("{s:?}"))?;
    ensure(
        (s.non_relevant, s.only_relevant, s.relevant_and_characterizing, s.total_relevant, s.disagreements) == (6, 3, 5, 8, 6),
        || format!("{s:?}"),
    )?;
    let eval = Evaluation {
        run_id: "fixture".into(),
        ..Default::default()
    };
    let bundle = build_bundle(&eval, Some(&store), BuildOptions { entity_decimals: 1 });
    let table = bundle.table("relevance_summary").ok_or("no relevance_summary table")?;
    let want = "category,count,pct\n\
                non_relevant,6,42.86\n\
                only_relevant,3,21.43\n\
                relevant_and_characterizing,5,35.71\n\
                total_relevant,8,57.14\n\
                disagreements,6,NA\n";
    let got = table.to_csv(false);
    ensure(got == want, || format!("summary table:\n{got}"))
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("cleaning suite", cleaning),
        ("english-ratio filter", english_filter),
        ("prompt rendering", prompts),
        ("generate-until-valid", generate_until_valid),
        ("clustering oracle", clustering_oracle),
        ("k-selection", k_selection),
        ("cohen's kappa", kappa),
        ("centroid math", centroid_math),
        ("end-to-end golden run", end_to_end),
        ("annotation csv path", annotation_csv),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = BTreeMap::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let took = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("PASS criterion {}: {name} ({took:.2}s)", i + 1),
            Err(e) => {
                println!("FAIL criterion {}: {name} ({took:.2}s): {e}", i + 1);
                failed.insert(i + 1, *name);
            }
        }
    }
    if !failed.is_empty() {
        println!("{} of {} criteria failed", failed.len(), criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
