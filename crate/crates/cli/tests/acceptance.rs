//! Acceptance suite. Each test is one criterion; the harness prints one
//! pass/fail line per criterion. Expected values come from independent
//! brute-force oracles implemented in this file, never from the code
//! under test.
//!
//! Run with `cargo test -p recat-cli --test acceptance -- --nocapture`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use recat_core::classifier::{
    shape_dataset, train, ShapingPolicy, ShareMode, TrainConfig, TrainingExample, TrainingSet,
};
use recat_core::corpus::{BaselineLabels, Store};
use recat_core::evaluate::{cross_validate, format_percentage, transition_matrix, Assignments};
use recat_core::features::{tokenize, TokenSegments, Vocabulary};
use recat_core::remap::direct_remap;
use recat_core::taxonomy::{CorrespondenceTable, ForCode, Scheme, SchemeCatalog};
use recat_core::weaklabel::{filter_by_cluster, FilterStatus, LabeledExample, Provenance};

fn g08(digits: &str) -> ForCode {
    ForCode::parse(digits, Scheme::For2008).unwrap()
}

fn g20(digits: &str) -> ForCode {
    ForCode::parse(digits, Scheme::For2020).unwrap()
}

fn write_file(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    path
}

// ---------------------------------------------------------------------
// Criterion 1: on randomized fixtures the filter's Accepted set equals an
// exact integer-arithmetic recomputation from raw baseline rows, and the
// share = 1% boundary is rejected.
// ---------------------------------------------------------------------
#[test]
fn criterion_01_filter_oracle_equivalence() {
    let started = Instant::now();
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_pubs = rng.random_range(50..=1000);
        let n_codes = rng.random_range(1..=10);
        let n_clusters = rng.random_range(1..=20);
        let codes: Vec<String> = (0..n_codes).map(|i| format!("{:02}01", i + 1)).collect();

        // Raw fixture data: unique (pub, code) baseline rows and a partial
        // pub -> cluster map.
        let mut clusters: BTreeMap<String, i64> = BTreeMap::new();
        for p in 0..n_pubs {
            if rng.random_range(0..10) < 8 {
                clusters.insert(format!("p{p:04}"), rng.random_range(0..n_clusters));
            }
        }
        let mut raw_rows: BTreeSet<(String, String)> = BTreeSet::new();
        for _ in 0..rng.random_range(1..=3 * n_pubs) {
            let publication = format!("p{:04}", rng.random_range(0..n_pubs));
            let code = codes[rng.random_range(0..codes.len())].clone();
            raw_rows.insert((publication, code));
        }
        let mut candidates = Vec::new();
        for _ in 0..rng.random_range(1..=n_pubs) {
            let publication = format!("p{:04}", rng.random_range(0..n_pubs));
            let code = codes[rng.random_range(0..codes.len())].clone();
            candidates.push(LabeledExample::new(
                publication,
                g08(&code),
                Provenance::GrantPropagation,
            ));
        }

        // Oracle: exact integer arithmetic over the raw rows.
        // share > 1/100  <=>  100 * in_cluster > known_total.
        let mut oracle_accepted: BTreeSet<(String, String)> = BTreeSet::new();
        for candidate in &candidates {
            let Some(cluster) = clusters.get(&candidate.publication_id) else {
                continue;
            };
            let code_digits = candidate.code.digits().to_string();
            let known: Vec<i64> = raw_rows
                .iter()
                .filter(|(p, c)| *c == code_digits && clusters.contains_key(p))
                .map(|(p, _)| clusters[p])
                .collect();
            if known.is_empty() {
                continue;
            }
            let in_cluster = known.iter().filter(|c| *c == cluster).count();
            if 100 * in_cluster > known.len() {
                oracle_accepted.insert((candidate.publication_id.clone(), code_digits));
            }
        }

        let mut baseline = BaselineLabels::default();
        for (publication, code) in &raw_rows {
            baseline.insert(publication.clone(), g08(code));
        }
        let decisions = filter_by_cluster(candidates, &baseline, &clusters, 0.01);
        let got_accepted: BTreeSet<(String, String)> = decisions
            .iter()
            .filter(|d| d.example.filtered == FilterStatus::Accepted)
            .map(|d| {
                (
                    d.example.publication_id.clone(),
                    d.example.code.digits().to_string(),
                )
            })
            .collect();
        assert_eq!(got_accepted, oracle_accepted, "seed {seed}");
    }

    // Exact boundary: 100 cluster-known baseline pubs for the code, one of
    // them in cluster 7 -> share is exactly 0.01 and must be rejected.
    let mut baseline = BaselineLabels::default();
    let mut clusters = BTreeMap::new();
    for i in 0..100 {
        let id = format!("b{i:03}");
        baseline.insert(id.clone(), g08("1108"));
        clusters.insert(id, if i == 0 { 7 } else { 1 });
    }
    clusters.insert("cand".to_string(), 7);
    let decisions = filter_by_cluster(
        vec![LabeledExample::new(
            "cand",
            g08("1108"),
            Provenance::GrantPropagation,
        )],
        &baseline,
        &clusters,
        0.01,
    );
    assert_eq!(decisions[0].share, Some(0.01));
    assert_eq!(decisions[0].example.filtered, FilterStatus::Rejected);

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("criterion 01 filter oracle equivalence: PASS ({elapsed:?})");
}

// ---------------------------------------------------------------------
// Criterion 2: mine_split_rules recovers a planted rule set exactly
// (precision = recall = 1.0) across 20 seeds.
// ---------------------------------------------------------------------
#[test]
fn criterion_02_split_rule_recovery() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n_groups = rng.random_range(2..=6);
        let mut planted: BTreeSet<(String, i64, String)> = BTreeSet::new();
        let mut corr_rows: Vec<(String, String)> = Vec::new();
        let mut evidence: Vec<(String, ForCode)> = Vec::new();
        let mut clusters: BTreeMap<String, i64> = BTreeMap::new();
        let mut pub_counter = 0usize;

        for group_index in 0..n_groups {
            let source_group = format!("{:02}{:02}", group_index + 1, group_index + 2);
            let n_rules = rng.random_range(1..=3);
            for rule_index in 0..n_rules {
                let cluster = (group_index * 10 + rule_index) as i64;
                let target_group = format!("{:02}{:02}", 30 + rule_index, group_index + 1);
                // A dedicated 6-digit child carries this rule's evidence.
                let child = format!("{source_group}{:02}", rule_index + 1);
                let target_field = format!("{target_group}01");
                corr_rows.push((child.clone(), target_field));
                let support = rng.random_range(5..=12);
                for _ in 0..support {
                    let publication = format!("p{pub_counter:05}");
                    pub_counter += 1;
                    clusters.insert(publication.clone(), cluster);
                    evidence.push((publication, g08(&child)));
                }
                planted.insert((source_group.clone(), cluster, target_group));
            }
        }
        corr_rows.sort();
        corr_rows.dedup();
        let mut csv = String::from("source_2008,target_2020\n");
        for (source, target) in &corr_rows {
            csv.push_str(&format!("{source},{target}\n"));
        }
        let path = write_file(dir.path(), &format!("corr_{seed}.csv"), &csv);
        let table = CorrespondenceTable::load(&path).unwrap();

        let rules = recat_core::remap::mine_split_rules(&evidence, &table, &clusters, 5);
        let got: BTreeSet<(String, i64, String)> = rules
            .iter()
            .map(|r| {
                (
                    r.source_group_2008.digits().to_string(),
                    r.cluster_id,
                    r.target_group_2020.digits().to_string(),
                )
            })
            .collect();
        assert_eq!(got, planted, "seed {seed}: precision/recall must be 1.0");
    }
    println!("criterion 02 split-rule recovery: PASS");
}

// ---------------------------------------------------------------------
// Criterion 3: the two-document hand computation matches to 1e-9 and all
// nonempty vectors on a 10k-document fixture have unit norm within 1e-12.
// ---------------------------------------------------------------------
#[test]
fn criterion_03_tfidf_hand_example_and_norms() {
    // d1 = "x x y", d2 = "y"; max_n=1, min_df=1.
    let docs: Vec<TokenSegments> = vec![vec![tokenize("x x y")], vec![tokenize("y")]];
    let vocabulary = Vocabulary::build(&docs, 1, 1).unwrap();
    let vector = vocabulary.vectorize(&docs[0]);

    // Hand computation: idf(t) = ln((1+N)/(1+df)) + 1 with N = 2.
    let raw_x = 2.0 * ((3.0f64 / 2.0).ln() + 1.0);
    let raw_y = 1.0 * ((3.0f64 / 3.0).ln() + 1.0);
    let norm = raw_x.hypot(raw_y);
    let expected_x = raw_x / norm;
    let expected_y = raw_y / norm;

    let ix = vocabulary.term_index("x").unwrap();
    let iy = vocabulary.term_index("y").unwrap();
    let entries: BTreeMap<usize, f64> = vector.entries().iter().copied().collect();
    assert!((entries[&ix] - expected_x).abs() < 1e-9);
    assert!((entries[&iy] - expected_y).abs() < 1e-9);

    // 10,000-document fixture.
    let vocabulary_words = [
        "enzyme", "theorem", "pathogen", "qubit", "cohort", "membrane", "algebra", "culture",
        "circuit", "survey", "protein", "manifold",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let docs: Vec<TokenSegments> = (0..10_000)
        .map(|_| {
            let n = rng.random_range(0..14);
            let words: Vec<String> = (0..n)
                .map(|_| vocabulary_words[rng.random_range(0..vocabulary_words.len())].to_string())
                .collect();
            vec![words]
        })
        .collect();
    let vocabulary = Vocabulary::build(&docs, 2, 2).unwrap();
    let mut nonempty = 0usize;
    for doc in &docs {
        let vector = vocabulary.vectorize(doc);
        if !vector.is_empty() {
            nonempty += 1;
            assert!(
                (vector.l2_norm() - 1.0).abs() < 1e-12,
                "norm {} off unity",
                vector.l2_norm()
            );
        }
    }
    assert!(nonempty > 9_000);
    println!("criterion 03 tf-idf hand example + norms: PASS ({nonempty} nonempty vectors)");
}

/// Two classes with disjoint vocabularies, n docs each.
fn separable_fixture(n: usize) -> (TrainingSet, Vocabulary) {
    let words_a = ["enzyme", "protein", "membrane", "kinase", "substrate"];
    let words_b = ["theorem", "manifold", "algebra", "lattice", "homology"];
    let mut docs: Vec<TokenSegments> = Vec::new();
    let mut labels: Vec<ForCode> = Vec::new();
    for i in 0..n {
        docs.push(vec![tokenize(&format!(
            "{} {} {}",
            words_a[i % 5],
            words_a[(i + 1) % 5],
            words_a[(i * 3 + 2) % 5]
        ))]);
        labels.push(g20("3101"));
        docs.push(vec![tokenize(&format!(
            "{} {} {}",
            words_b[i % 5],
            words_b[(i + 2) % 5],
            words_b[(i * 2 + 1) % 5]
        ))]);
        labels.push(g20("4901"));
    }
    let vocabulary = Vocabulary::build(&docs, 1, 1).unwrap();
    let mut set = TrainingSet::default();
    for (i, (doc, code)) in docs.iter().zip(&labels).enumerate() {
        *set.class_counts.entry(code.clone()).or_insert(0) += 1;
        set.examples.push(TrainingExample {
            publication_id: format!("d{i:04}"),
            vector: vocabulary.vectorize(doc),
            labels: [code.clone()].into_iter().collect(),
            weight: 1.0,
        });
    }
    (set, vocabulary)
}

// ---------------------------------------------------------------------
// Criterion 4: separable fixture: 3-fold CV mean accuracy >= 0.95,
// training < 5 s, and a mixed-vocabulary document ranks both codes top-2.
// ---------------------------------------------------------------------
#[test]
fn criterion_04_classifier_sanity() {
    let (set, vocabulary) = separable_fixture(100);
    let config = TrainConfig {
        seed: 4,
        ..TrainConfig::default()
    };

    let started = Instant::now();
    let model = train(&set, &vocabulary, &config).unwrap();
    let train_elapsed = started.elapsed();
    assert!(train_elapsed.as_secs_f64() < 5.0, "training took {train_elapsed:?}");

    let reports = cross_validate(&set, &vocabulary, 3, 4, &config).unwrap();
    let mean_accuracy: f64 =
        reports.iter().map(|r| r.accuracy).sum::<f64>() / reports.len() as f64;
    assert!(mean_accuracy >= 0.95, "mean CV accuracy {mean_accuracy}");

    let mixed = vocabulary.vectorize(&vec![tokenize("enzyme theorem membrane manifold")]);
    let ranking = model.predict(&mixed).unwrap();
    let top2: BTreeSet<&str> = ranking
        .entries()
        .iter()
        .take(2)
        .map(|(code, _)| code.digits())
        .collect();
    assert!(top2.contains("3101") && top2.contains("4901"));
    println!(
        "criterion 04 classifier sanity: PASS (mean accuracy {mean_accuracy:.3}, train {train_elapsed:?})"
    );
}

// ---------------------------------------------------------------------
// Criterion 5: a publication labeled by two strategies appears once in
// the training set with both codes, and assign can return 2+ codes.
// ---------------------------------------------------------------------
#[test]
fn criterion_05_multi_label_correction() {
    let dir = tempfile::tempdir().unwrap();
    let words_a = ["enzyme", "protein", "membrane", "kinase", "substrate"];
    let words_b = ["theorem", "manifold", "algebra", "lattice", "homology"];
    let mut jsonl = String::new();
    let mut labels: Vec<LabeledExample> = Vec::new();
    let mut add_doc = |id: &str, text: String| {
        jsonl.push_str(&format!(
            "{{\"id\":\"{id}\",\"title\":\"{text}\",\"abstract\":\"\",\"year\":2020,\"record_type\":\"Article\"}}\n"
        ));
    };
    for i in 0..80 {
        let id = format!("a{i:03}");
        add_doc(&id, format!("{} {}", words_a[i % 5], words_a[(i + 2) % 5]));
        labels.push(LabeledExample::new(&id, g20("3101"), Provenance::Remapped));
        let id = format!("b{i:03}");
        add_doc(&id, format!("{} {}", words_b[i % 5], words_b[(i + 1) % 5]));
        labels.push(LabeledExample::new(&id, g20("4901"), Provenance::Remapped));
    }
    // Mixed-vocabulary publications labeled by two different strategies.
    for i in 0..40 {
        let id = format!("m{i:03}");
        add_doc(
            &id,
            format!("{} {}", words_a[i % 5], words_b[(i + 3) % 5]),
        );
        labels.push(LabeledExample::new(&id, g20("3101"), Provenance::Remapped));
        labels.push(LabeledExample::new(
            &id,
            g20("4901"),
            Provenance::KeywordQuery,
        ));
    }
    let pubs = write_file(dir.path(), "pubs.jsonl", &jsonl);
    let mut store = Store::new();
    store.ingest_publications(&pubs).unwrap();

    let docs: Vec<TokenSegments> = store
        .publications()
        .map(|p| vec![tokenize(&p.title)])
        .collect();
    let vocabulary = Vocabulary::build(&docs, 1, 1).unwrap();
    let set = shape_dataset(&labels, &store, &vocabulary, &ShapingPolicy::default()).unwrap();

    // The double-labeled publication appears exactly once, with the union.
    let occurrences: Vec<&TrainingExample> = set
        .examples
        .iter()
        .filter(|e| e.publication_id == "m000")
        .collect();
    assert_eq!(occurrences.len(), 1);
    assert_eq!(
        occurrences[0].labels,
        [g20("3101"), g20("4901")].into_iter().collect()
    );

    let model = train(
        &set,
        &vocabulary,
        &TrainConfig {
            seed: 5,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    let probe = vocabulary.vectorize(&vec![tokenize("enzyme theorem kinase algebra")]);
    let assignment = model.assign(&probe).unwrap();
    assert!(
        assignment.codes.len() >= 2,
        "expected 2+ codes, got {:?}",
        assignment.codes
    );
    println!(
        "criterion 05 multi-label correction: PASS (assigned {:?})",
        assignment.codes
    );
}

// ---------------------------------------------------------------------
// Criterion 6: equal-share shaping on class counts (1000, 100, 10) caps
// exactly and reproduces under a fixed seed.
// ---------------------------------------------------------------------
#[test]
fn criterion_06_shaping_caps_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mut jsonl = String::new();
    let mut labels = Vec::new();
    for (code, count) in [("3201", 1000usize), ("4901", 100), ("5201", 10)] {
        for i in 0..count {
            let id = format!("{code}-{i:04}");
            jsonl.push_str(&format!(
                "{{\"id\":\"{id}\",\"title\":\"doc {i}\",\"abstract\":\"\",\"year\":2020,\"record_type\":\"Article\"}}\n"
            ));
            labels.push(LabeledExample::new(&id, g20(code), Provenance::Remapped));
        }
    }
    let pubs = write_file(dir.path(), "pubs.jsonl", &jsonl);
    let mut store = Store::new();
    store.ingest_publications(&pubs).unwrap();
    let vocabulary = Vocabulary::build(&[vec![tokenize("doc")]], 1, 1).unwrap();

    let policy = ShapingPolicy {
        mode: ShareMode::EqualShare,
        floor: 0,
        seed: 42,
    };
    let set = shape_dataset(&labels, &store, &vocabulary, &policy).unwrap();
    // total assertions 1110, 3 classes -> cap = floor(1110/3) = 370.
    assert_eq!(set.class_counts[&g20("3201")], 370);
    assert_eq!(set.class_counts[&g20("4901")], 100);
    assert_eq!(set.class_counts[&g20("5201")], 10);

    let again = shape_dataset(&labels, &store, &vocabulary, &policy).unwrap();
    assert_eq!(set, again, "same seed must reproduce the same selection");

    // Floor below-minimum classes are up-weighted, never resampled.
    let floored = ShapingPolicy {
        mode: ShareMode::EqualShare,
        floor: 50,
        seed: 42,
    };
    let set = shape_dataset(&labels, &store, &vocabulary, &floored).unwrap();
    assert_eq!(set.class_counts[&g20("5201")], 10);
    let small = set
        .examples
        .iter()
        .find(|e| e.labels.contains(&g20("5201")))
        .unwrap();
    assert!((small.weight - 5.0).abs() < 1e-12);
    println!("criterion 06 shaping: PASS (370/100/10, reproducible)");
}

// ---------------------------------------------------------------------
// Criterion 7: transition-matrix row sums, identity case, and the
// planted 54.4% cell.
// ---------------------------------------------------------------------
#[test]
fn criterion_07_transition_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let catalog_path = write_file(
        dir.path(),
        "catalog.csv",
        "scheme,code,name\nFoR2008,01,Mathematical Sciences\nFoR2008,02,Physical Sciences\n\
         FoR2020,32,Biomedical and Clinical Sciences\nFoR2020,40,Engineering\nFoR2020,49,Mathematical Sciences\n",
    );
    let catalog = SchemeCatalog::load(&catalog_path).unwrap();

    // Random fixtures: rows must sum to 100 within 1e-9.
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
        let mut old = Assignments::new();
        let mut new = Assignments::new();
        for i in 0..rng.random_range(20..400) {
            let object = format!("o{i:04}");
            let old_code = if rng.random_bool(0.5) { "0101" } else { "0201" };
            old.insert(object.clone(), [g08(old_code)].into_iter().collect());
            let mut codes: BTreeSet<ForCode> = BTreeSet::new();
            for target in ["3201", "4001", "4901"] {
                if rng.random_bool(0.4) {
                    codes.insert(g20(target));
                }
            }
            if !codes.is_empty() {
                new.insert(object, codes);
            }
        }
        let matrix = transition_matrix(&old, &new, &catalog);
        for (row, sum) in matrix.rows.iter().zip(matrix.row_sums()) {
            assert!((sum - 100.0).abs() < 1e-9, "seed {seed}: row {row} sums {sum}");
        }
        assert!(matrix.cells.iter().flatten().all(|v| *v >= 0.0));
    }

    // Identity relabeling.
    let mut old = Assignments::new();
    let mut new = Assignments::new();
    for i in 0..30 {
        let object = format!("i{i}");
        let code = if i % 2 == 0 { "0101" } else { "0201" };
        old.insert(object.clone(), [g08(code)].into_iter().collect());
        new.insert(object, [g08(code)].into_iter().collect());
    }
    let matrix = transition_matrix(&old, &new, &catalog);
    for (r, row) in matrix.cells.iter().enumerate() {
        for (c, value) in row.iter().enumerate() {
            let expected = if matrix.rows[r] == matrix.cols[c] { 100.0 } else { 0.0 };
            assert!((value - expected).abs() < 1e-9);
        }
    }

    // Planted: 544 of 1000 division-01 objects move to 49.
    let mut old = Assignments::new();
    let mut new = Assignments::new();
    for i in 0..1000 {
        let object = format!("p{i:04}");
        old.insert(object.clone(), [g08("0101")].into_iter().collect());
        let target = if i < 544 { "4901" } else { "3201" };
        new.insert(object, [g20(target)].into_iter().collect());
    }
    let matrix = transition_matrix(&old, &new, &catalog);
    let cell = matrix.cell(&g08("01"), &g20("49")).unwrap();
    assert!((cell - 54.4).abs() < 1e-9);
    let csv = matrix.to_csv();
    assert!(csv.contains("54.4"), "csv was:\n{csv}");
    println!("criterion 07 transition matrix: PASS");
}

// ---------------------------------------------------------------------
// Criterion 8: coverage percentage formatting matches the reported
// one-decimal granularity.
// ---------------------------------------------------------------------
#[test]
fn criterion_08_coverage_formatting() {
    assert_eq!(format_percentage(716_918, 720_554), "99.5");
    println!("criterion 08 coverage formatting: PASS (716918/720554 -> 99.5%)");
}

fn run_cli(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_recat"))
        .args(args)
        .env("RUST_LOG", "error")
        .status()
        .expect("binary runs");
    assert!(status.success(), "recat {args:?} failed");
}

fn fixture_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/config.txt")
}

fn full_pipeline(run_dir: &Path) {
    let config = fixture_config();
    let config = config.to_str().unwrap();
    let run = run_dir.to_str().unwrap();
    let input = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/predict_input.jsonl");
    run_cli(&["--config", config, "--run-dir", run, "ingest"]);
    run_cli(&["--config", config, "--run-dir", run, "label"]);
    run_cli(&["--config", config, "--run-dir", run, "remap"]);
    run_cli(&["--config", config, "--run-dir", run, "train"]);
    run_cli(&["--config", config, "--run-dir", run, "predict", input.to_str().unwrap()]);
    run_cli(&["--config", config, "--run-dir", run, "evaluate"]);
    for report in ["coverage", "distribution", "transition", "journal-list"] {
        run_cli(&["--config", config, "--run-dir", run, "report", report]);
    }
}

// ---------------------------------------------------------------------
// Criterion 9: two full CLI runs with identical config and seed produce
// byte-identical label files, model archive, and reports.
// ---------------------------------------------------------------------
#[test]
fn criterion_09_end_to_end_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let run_a = dir.path().join("run_a");
    let run_b = dir.path().join("run_b");
    full_pipeline(&run_a);
    full_pipeline(&run_b);

    let compared = [
        "labels/labels.jsonl",
        "labels/summary.txt",
        "remap/labels_2020.jsonl",
        "remap/residual_2008.jsonl",
        "remap/rules.csv",
        "remap/summary.txt",
        "model/model.tar",
        "model/class_counts.csv",
        "predictions/predictions.jsonl",
        "eval/cv_folds.csv",
        "eval/cv_per_class.csv",
        "reports/coverage_record_type.csv",
        "reports/coverage_period.csv",
        "reports/coverage_period.svg",
        "reports/distribution.csv",
        "reports/distribution.svg",
        "reports/transition.csv",
        "reports/transition.svg",
        "reports/journal_list.csv",
        "manifest.txt",
    ];
    for name in compared {
        let a = std::fs::read(run_a.join(name)).unwrap_or_else(|_| panic!("missing {name}"));
        let b = std::fs::read(run_b.join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between identical runs");
    }
    println!(
        "criterion 09 end-to-end determinism: PASS ({} artifacts byte-identical)",
        compared.len()
    );
}

// ---------------------------------------------------------------------
// Criterion 10: direct_remap output partitions its input on 20 random
// fixtures, verified against an independent unanimity oracle.
// ---------------------------------------------------------------------
#[test]
fn criterion_10_direct_remap_partition() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let n_groups = rng.random_range(2..=8);
        let mut groups: Vec<String> = Vec::new();
        // Raw rows: (source6, Option<target6>).
        let mut raw_rows: Vec<(String, Option<String>)> = Vec::new();
        for gi in 0..n_groups {
            let group = format!("{:02}{:02}", gi + 1, (gi * 3) % 90 + 1);
            groups.push(group.clone());
            let n_children = rng.random_range(1..=3);
            for ci in 0..n_children {
                let child = format!("{group}{:02}", ci + 1);
                match rng.random_range(0..4) {
                    0 => raw_rows.push((child, None)), // deleted
                    1 => {
                        // split into two targets
                        raw_rows.push((child.clone(), Some(format!("{:02}0101", 30 + ci))));
                        raw_rows.push((child, Some(format!("{:02}0202", 40 + ci))));
                    }
                    _ => {
                        let target_group = format!("{:02}{:02}", 30 + rng.random_range(0..5), gi + 1);
                        raw_rows.push((child, Some(format!("{target_group}01"))));
                    }
                }
            }
        }
        let mut csv = String::from("source_2008,target_2020\n");
        for (source, target) in &raw_rows {
            csv.push_str(&format!("{},{}\n", source, target.as_deref().unwrap_or("")));
        }
        let path = write_file(dir.path(), &format!("corr10_{seed}.csv"), &csv);
        let table = CorrespondenceTable::load(&path).unwrap();

        let mut labels = Vec::new();
        for i in 0..rng.random_range(20..200) {
            let group = &groups[rng.random_range(0..groups.len())];
            labels.push(LabeledExample::new(
                format!("p{i:04}"),
                g08(group),
                Provenance::GrantPropagation,
            ));
        }

        // Independent oracle over the raw rows: a group direct-remaps iff
        // every child row has exactly one target and all child targets
        // share one 4-digit prefix.
        let mut oracle_target: BTreeMap<&String, Option<String>> = BTreeMap::new();
        for group in &groups {
            let child_rows: Vec<&(String, Option<String>)> = raw_rows
                .iter()
                .filter(|(source, _)| source.starts_with(group.as_str()))
                .collect();
            let mut children: BTreeMap<&str, Vec<Option<&String>>> = BTreeMap::new();
            for (source, target) in child_rows {
                children.entry(source).or_default().push(target.as_ref());
            }
            let mut target_groups: BTreeSet<String> = BTreeSet::new();
            let mut ok = true;
            for targets in children.values() {
                if targets.len() != 1 || targets[0].is_none() {
                    ok = false;
                    break;
                }
                target_groups.insert(targets[0].unwrap()[..4].to_string());
            }
            let verdict = if ok && target_groups.len() == 1 {
                Some(target_groups.into_iter().next().unwrap())
            } else {
                None
            };
            oracle_target.insert(group, verdict);
        }

        let split = direct_remap(labels.clone(), &table).unwrap();
        // Partition: counts add up and no label is lost or duplicated.
        assert_eq!(split.remapped.len() + split.residual.len(), labels.len());
        let expected_residual: Vec<&LabeledExample> = labels
            .iter()
            .filter(|l| oracle_target[&l.code.digits().to_string()].is_none())
            .collect();
        assert_eq!(split.residual.len(), expected_residual.len());
        let residual_set: BTreeSet<(String, String)> = split
            .residual
            .iter()
            .map(|l| (l.publication_id.clone(), l.code.digits().to_string()))
            .collect();
        for label in expected_residual {
            assert!(residual_set
                .contains(&(label.publication_id.clone(), label.code.digits().to_string())));
        }
        for remapped in &split.remapped {
            assert_eq!(remapped.code.scheme(), Scheme::For2020);
        }
        // Each remapped label matches the oracle target of some consumed
        // input label for the same publication.
        let mut expected_remapped: Vec<(String, String)> = labels
            .iter()
            .filter_map(|l| {
                oracle_target[&l.code.digits().to_string()]
                    .as_ref()
                    .map(|t| (l.publication_id.clone(), t.clone()))
            })
            .collect();
        expected_remapped.sort();
        let mut got_remapped: Vec<(String, String)> = split
            .remapped
            .iter()
            .map(|l| (l.publication_id.clone(), l.code.digits().to_string()))
            .collect();
        got_remapped.sort();
        assert_eq!(got_remapped, expected_remapped, "seed {seed}");
    }
    println!("criterion 10 direct-remap partition: PASS");
}
