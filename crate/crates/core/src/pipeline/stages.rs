//! The pipeline stages behind the CLI subcommands. Every stage validates
//! its prerequisites, writes artifacts only under its own subdirectory,
//! and records checksums in the run manifest.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{PipelineConfig, PipelineError, RunDir};
use crate::chart;
use crate::classifier::{shape_dataset, train, Model, TrainingSet};
use crate::corpus::Store;
use crate::evaluate::{
    self, coverage_report, distribution_report, journal_list, transition_matrix, Assignments,
    CoverageGrouping,
};
use crate::features::{doc_segments, Vocabulary};
use crate::remap::{
    apply_overrides, apply_split_rules, direct_remap, drop_deleted_groups, keyword_corpus,
    mine_split_rules, read_overrides, read_query_specs, write_rules,
};
use crate::taxonomy::{CorrespondenceTable, ForCode, Scheme, SchemeCatalog};
use crate::weaklabel::{
    dedup_examples, filter_by_cluster, import_contributed, journal_title_candidates,
    propagate_grant_codes, read_labels, write_labels, FilterStatus, LabelRecord, LabeledExample,
    Provenance,
};

/// Label-generation strategies selectable via `label --strategy`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Grants,
    Journals,
    Contributed,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Grants, Strategy::Journals, Strategy::Contributed];
}

/// Report families selectable via `report <which>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    Coverage,
    Distribution,
    Transition,
    JournalList,
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

fn create_dir(path: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(path).map_err(|e| PipelineError::io(path, e))
}

fn load_store_from_inputs(config: &PipelineConfig) -> Result<Store, PipelineError> {
    let mut store = Store::new();
    store.ingest_publications(&config.publications)?;
    store.ingest_grants(&config.grants)?;
    store.ingest_journals(&config.journals)?;
    store.ingest_clusters(&config.clusters)?;
    store.ingest_baseline(&config.baseline)?;
    Ok(store)
}

fn load_catalog(config: &PipelineConfig) -> Result<SchemeCatalog, PipelineError> {
    let mut catalog = SchemeCatalog::load(&config.catalog)?;
    catalog.load_stem_hass(&config.stem_hass)?;
    Ok(catalog)
}

fn load_table(config: &PipelineConfig) -> Result<CorrespondenceTable, PipelineError> {
    Ok(match &config.new_codes {
        Some(new_codes) => CorrespondenceTable::load_with_new(&config.correspondence, new_codes)?,
        None => CorrespondenceTable::load(&config.correspondence)?,
    })
}

/// Ingest: build the store from the configured inputs, persist it, and
/// write the dangling-reference report plus corpus stats.
pub fn cmd_ingest(config: &PipelineConfig, run: &RunDir) -> Result<(), PipelineError> {
    let _lock = run.lock()?;
    let store = load_store_from_inputs(config)?;
    let store_dir = run.store_dir();
    create_dir(&store_dir)?;
    store.save(&store_dir)?;

    let report = store.dangling_report();
    let mut dangling = String::from("publication_id,reference_kind,reference_id\n");
    for (publication_id, journal_id) in &report.missing_journals {
        dangling.push_str(&format!("{publication_id},journal,{journal_id}\n"));
    }
    for (publication_id, grant_id) in &report.missing_grants {
        dangling.push_str(&format!("{publication_id},grant,{grant_id}\n"));
    }
    let dangling_path = store_dir.join("dangling_references.csv");
    write_text(&dangling_path, &dangling)?;

    let stats = store.corpus_stats();
    let mut stats_csv = String::from("group,count\n");
    for (record_type, count) in &stats.by_record_type {
        stats_csv.push_str(&format!("{},{}\n", record_type.as_str(), count));
    }
    for (start, count) in &stats.by_period {
        stats_csv.push_str(&format!("{}-{},{}\n", start, start + 4, count));
    }
    let stats_path = store_dir.join("stats.csv");
    write_text(&stats_path, &stats_csv)?;

    let inputs = vec![
        ("publications".to_string(), config.publications.clone()),
        ("grants".to_string(), config.grants.clone()),
        ("journals".to_string(), config.journals.clone()),
        ("clusters".to_string(), config.clusters.clone()),
        ("baseline".to_string(), config.baseline.clone()),
    ];
    let artifacts = vec![
        store_dir.join("publications.jsonl"),
        store_dir.join("grants.jsonl"),
        store_dir.join("journals.csv"),
        store_dir.join("clusters.csv"),
        store_dir.join("baseline.csv"),
        dangling_path,
        stats_path,
    ];
    run.record_stage("ingest", &config.config_hash(), &inputs, &artifacts)
}

/// Label: run the selected strategies, pass grant and journal candidates
/// through the cluster filter, and write labels.jsonl (2008 scheme).
pub fn cmd_label(
    config: &PipelineConfig,
    run: &RunDir,
    strategies: &[Strategy],
) -> Result<(), PipelineError> {
    let _lock = run.lock()?;
    let store_dir = run.store_dir();
    run.require("label", &store_dir.join("publications.jsonl"), "ingest")?;
    let store = Store::open(&store_dir)?;
    let catalog = load_catalog(config)?;
    let clusters = store.cluster_index();

    let labels_dir = run.labels_dir();
    create_dir(&labels_dir)?;
    let mut records: Vec<LabelRecord> = Vec::new();
    let mut filterable: Vec<LabeledExample> = Vec::new();
    let mut notes = String::new();

    if strategies.contains(&Strategy::Grants) {
        let (candidates, dangling) = propagate_grant_codes(&store);
        notes.push_str(&format!("grant_candidates={}\n", candidates.len()));
        notes.push_str(&format!("dangling_grant_refs={}\n", dangling.len()));
        if !dangling.is_empty() {
            let mut csv = String::from("publication_id,grant_id\n");
            for d in &dangling {
                csv.push_str(&format!("{},{}\n", d.publication_id, d.grant_id));
            }
            write_text(&labels_dir.join("dangling_grants.csv"), &csv)?;
        }
        filterable.extend(candidates);
    }
    if strategies.contains(&Strategy::Journals) {
        let candidates = journal_title_candidates(&store, &catalog, Scheme::For2008);
        notes.push_str(&format!("journal_candidates={}\n", candidates.len()));
        filterable.extend(candidates);
    }

    let decisions = filter_by_cluster(
        filterable,
        store.baseline(),
        &clusters,
        config.filter_threshold,
    );
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut unfiltered = 0usize;
    for decision in &decisions {
        match decision.example.filtered {
            FilterStatus::Accepted => accepted += 1,
            FilterStatus::Rejected => rejected += 1,
            FilterStatus::Unfiltered => unfiltered += 1,
        }
        records.push(LabelRecord::from_decision(decision));
    }
    notes.push_str(&format!(
        "filter_accepted={accepted}\nfilter_rejected={rejected}\nfilter_unfiltered={unfiltered}\n"
    ));

    if strategies.contains(&Strategy::Contributed) {
        if let Some(contributed_path) = &config.contributed {
            let (examples, unknown) = import_contributed(contributed_path, &store)?;
            notes.push_str(&format!("contributed={}\n", examples.len()));
            notes.push_str(&format!("contributed_unknown_ids={}\n", unknown.len()));
            if !unknown.is_empty() {
                let mut csv = String::from("publication_id\n");
                for id in &unknown {
                    csv.push_str(id);
                    csv.push('\n');
                }
                write_text(&labels_dir.join("unknown_contributed.csv"), &csv)?;
            }
            records.extend(examples.iter().map(LabelRecord::from_example));
        } else {
            log::warn!("contributed strategy selected but no 'contributed' path configured");
        }
    }

    records.sort_by(|a, b| {
        (&a.publication_id, &a.code, a.provenance).cmp(&(
            &b.publication_id,
            &b.code,
            b.provenance,
        ))
    });
    let labels_path = labels_dir.join("labels.jsonl");
    write_labels(&labels_path, &records)?;
    write_text(&labels_dir.join("summary.txt"), &notes)?;

    let mut inputs = vec![("catalog".to_string(), config.catalog.clone())];
    if strategies.contains(&Strategy::Contributed) {
        if let Some(contributed) = &config.contributed {
            inputs.push(("contributed".to_string(), contributed.clone()));
        }
    }
    let mut artifacts = vec![labels_path, labels_dir.join("summary.txt")];
    for optional in ["dangling_grants.csv", "unknown_contributed.csv"] {
        let path = labels_dir.join(optional);
        if path.exists() {
            artifacts.push(path);
        }
    }
    run.record_stage("label", &config.config_hash(), &inputs, &artifacts)
}

/// The labels that feed downstream stages: Accepted always, Unfiltered
/// unless the config drops them, Rejected never.
fn usable_labels(records: &[LabelRecord], drop_unfiltered: bool) -> Vec<LabeledExample> {
    // Only grant and journal candidates ever face the cluster filter;
    // dropping unfiltered labels must not touch the other sources.
    let filterable = |p: Provenance| {
        matches!(p, Provenance::GrantPropagation | Provenance::JournalTitle)
    };
    records
        .iter()
        .filter(|r| match r.filtered {
            FilterStatus::Accepted => true,
            FilterStatus::Unfiltered => !(drop_unfiltered && filterable(r.provenance)),
            FilterStatus::Rejected => false,
        })
        .filter_map(|r| r.to_example().ok())
        .collect()
}

/// Remap: direct remapping, rule mining and application, keyword corpora,
/// curation overrides; writes the 2020-scheme label file.
pub fn cmd_remap(config: &PipelineConfig, run: &RunDir) -> Result<(), PipelineError> {
    let _lock = run.lock()?;
    let labels_path = run.labels_dir().join("labels.jsonl");
    run.require("remap", &labels_path, "label")?;
    let store = Store::open(&run.store_dir())?;
    let table = load_table(config)?;
    let clusters = store.cluster_index();
    let records = read_labels(&labels_path)?;
    let labels_2008 = usable_labels(&records, config.drop_unfiltered);

    let remap_dir = run.remap_dir();
    create_dir(&remap_dir)?;
    let mut notes = String::new();

    // 6-digit evidence for rule mining: grant codes on linked
    // publications, plus contributed rows (both are 6-digit sources).
    let mut evidence: Vec<(String, ForCode)> = Vec::new();
    for publication in store.publications() {
        for grant_id in &publication.grant_ids {
            if let Some(grant) = store.grant(grant_id) {
                for code in &grant.codes_2008 {
                    evidence.push((publication.id.clone(), code.clone()));
                }
            }
        }
    }
    if let Some(contributed_path) = &config.contributed {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(contributed_path)
            .map_err(|e| PipelineError::io(contributed_path, std::io::Error::other(e)))?;
        for record in reader.records() {
            let record =
                record.map_err(|e| PipelineError::io(contributed_path, std::io::Error::other(e)))?;
            if record.len() >= 2 {
                if let Ok(code) = ForCode::parse(&record[1], Scheme::For2008) {
                    if code.level() == crate::taxonomy::Level::Field {
                        evidence.push((record[0].trim().to_string(), code));
                    }
                }
            }
        }
    }
    evidence.sort();
    evidence.dedup();

    let rules = mine_split_rules(&evidence, &table, &clusters, config.min_support);
    let rules_path = remap_dir.join("rules.csv");
    write_rules(&rules_path, &rules)?;
    notes.push_str(&format!("split_rules={}\n", rules.len()));

    let direct = direct_remap(labels_2008, &table)?;
    notes.push_str(&format!("direct_remapped={}\n", direct.remapped.len()));
    let ruled = apply_split_rules(direct.residual, &rules, &clusters);
    notes.push_str(&format!("rule_remapped={}\n", ruled.remapped.len()));

    let mut labels_2020: Vec<LabeledExample> = Vec::new();
    labels_2020.extend(direct.remapped);
    labels_2020.extend(ruled.remapped);

    if let Some(queries_path) = &config.queries {
        let specs = read_query_specs(queries_path)?;
        let mut keyword_count = 0usize;
        for spec in &specs {
            let examples = keyword_corpus(spec, &store)?;
            keyword_count += examples.len();
            labels_2020.extend(examples);
        }
        notes.push_str(&format!("keyword_labels={keyword_count}\n"));
    }

    let (residual, dropped) = drop_deleted_groups(ruled.residual, &table);
    notes.push_str(&format!("dropped_deleted_group_labels={}\n", dropped.len()));
    notes.push_str(&format!("residual_2008_labels={}\n", residual.len()));

    dedup_examples(&mut labels_2020);
    if let Some(overrides_path) = &config.overrides {
        let overrides = read_overrides(overrides_path)?;
        let before = labels_2020.len();
        labels_2020 = apply_overrides(labels_2020, &overrides);
        notes.push_str(&format!(
            "override_rows={} labels_before={before} labels_after={}\n",
            overrides.len(),
            labels_2020.len()
        ));
    }

    let records_2020: Vec<LabelRecord> =
        labels_2020.iter().map(LabelRecord::from_example).collect();
    let labels_2020_path = remap_dir.join("labels_2020.jsonl");
    write_labels(&labels_2020_path, &records_2020)?;

    let residual_records: Vec<LabelRecord> =
        residual.iter().map(LabelRecord::from_example).collect();
    let residual_path = remap_dir.join("residual_2008.jsonl");
    write_labels(&residual_path, &residual_records)?;
    write_text(&remap_dir.join("summary.txt"), &notes)?;

    let mut inputs = vec![("correspondence".to_string(), config.correspondence.clone())];
    for (name, path) in [
        ("new_codes", &config.new_codes),
        ("contributed", &config.contributed),
        ("queries", &config.queries),
        ("overrides", &config.overrides),
    ] {
        if let Some(path) = path {
            inputs.push((name.to_string(), path.clone()));
        }
    }
    let artifacts = vec![
        rules_path,
        labels_2020_path,
        residual_path,
        remap_dir.join("summary.txt"),
    ];
    run.record_stage("remap", &config.config_hash(), &inputs, &artifacts)
}

/// Builds the vocabulary and shaped training set from the remapped labels.
fn build_training_set(
    config: &PipelineConfig,
    run: &RunDir,
    stage: &str,
) -> Result<(TrainingSet, Vocabulary, Store), PipelineError> {
    let labels_path = run.remap_dir().join("labels_2020.jsonl");
    run.require(stage, &labels_path, "remap")?;
    let store = Store::open(&run.store_dir())?;
    let records = read_labels(&labels_path)?;
    let labels: Vec<LabeledExample> =
        records.iter().filter_map(|r| r.to_example().ok()).collect();

    let mut publication_ids: BTreeSet<&str> = BTreeSet::new();
    for label in &labels {
        publication_ids.insert(&label.publication_id);
    }
    let docs: Vec<crate::features::TokenSegments> = publication_ids
        .iter()
        .filter_map(|id| store.publication(id))
        .map(|p| doc_segments(&p.title, &p.abstract_text))
        .collect();
    let vocabulary = Vocabulary::build(&docs, config.max_n, config.min_df)?;
    let set = shape_dataset(&labels, &store, &vocabulary, &config.shaping_policy())?;
    Ok((set, vocabulary, store))
}

/// Train: shape the dataset, fit the one-vs-rest model, persist the
/// archive.
pub fn cmd_train(config: &PipelineConfig, run: &RunDir) -> Result<(), PipelineError> {
    let _lock = run.lock()?;
    let (set, vocabulary, _store) = build_training_set(config, run, "train")?;
    let mut model = train(&set, &vocabulary, &config.train_config())?;
    model
        .extra
        .insert("shaping".to_string(), config.shaping_policy().describe());
    model
        .extra
        .insert("n_examples".to_string(), set.len().to_string());
    model
        .extra
        .insert("n_classes".to_string(), set.class_counts.len().to_string());

    let model_dir = run.model_dir();
    create_dir(&model_dir)?;
    let model_path = model_dir.join("model.tar");
    model.save(&model_path)?;

    let mut counts_csv = String::from("code,count\n");
    for (code, count) in &set.class_counts {
        counts_csv.push_str(&format!("{code},{count}\n"));
    }
    let counts_path = model_dir.join("class_counts.csv");
    write_text(&counts_path, &counts_csv)?;

    run.record_stage(
        "train",
        &config.config_hash(),
        &[],
        &[model_path, counts_path],
    )
}

#[derive(Debug, Deserialize)]
struct PredictInput {
    id: String,
    #[serde(default)]
    title: String,
    #[serde(rename = "abstract", default)]
    abstract_text: String,
}

#[derive(Debug, Serialize)]
struct PredictOutput {
    id: String,
    codes: Vec<String>,
    divisions: Vec<String>,
    ranking: Vec<(String, f64)>,
}

/// Predict: classify a JSONL file of documents (`id,title,abstract`).
pub fn cmd_predict(
    config: &PipelineConfig,
    run: &RunDir,
    input: &Path,
) -> Result<(), PipelineError> {
    let _lock = run.lock()?;
    let model_path = run.model_dir().join("model.tar");
    run.require("predict", &model_path, "train")?;
    let model = Model::load(&model_path)?;

    let file = std::fs::File::open(input).map_err(|e| PipelineError::io(input, e))?;
    let predictions_dir = run.predictions_dir();
    create_dir(&predictions_dir)?;
    let out_path = predictions_dir.join("predictions.jsonl");
    let mut out = std::fs::File::create(&out_path).map_err(|e| PipelineError::io(&out_path, e))?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| PipelineError::io(input, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: PredictInput = serde_json::from_str(&line).map_err(|e| {
            PipelineError::ConfigInvalid(format!(
                "{}:{}: bad prediction input: {e}",
                input.display(),
                i + 1
            ))
        })?;
        let ranking = model.predict_text(&doc.title, &doc.abstract_text);
        let assignment = model.assign_text(&doc.title, &doc.abstract_text);
        let output = PredictOutput {
            id: doc.id,
            codes: assignment.codes.iter().map(|c| c.digits().to_string()).collect(),
            divisions: assignment
                .divisions
                .iter()
                .map(|c| c.digits().to_string())
                .collect(),
            ranking: ranking
                .entries()
                .iter()
                .take(10)
                .map(|(c, s)| (c.digits().to_string(), *s))
                .collect(),
        };
        serde_json::to_writer(&mut out, &output).map_err(|e| PipelineError::io(&out_path, e.into()))?;
        out.write_all(b"\n").map_err(|e| PipelineError::io(&out_path, e))?;
    }
    run.record_stage(
        "predict",
        &config.config_hash(),
        &[("input".to_string(), input.to_path_buf())],
        &[out_path],
    )
}

/// Evaluate: k-fold cross-validation over the shaped training set.
pub fn cmd_evaluate(config: &PipelineConfig, run: &RunDir) -> Result<(), PipelineError> {
    let _lock = run.lock()?;
    let (set, vocabulary, _store) = build_training_set(config, run, "evaluate")?;
    let reports = evaluate::cross_validate(
        &set,
        &vocabulary,
        config.cv_folds,
        config.seed,
        &config.train_config(),
    )?;

    let eval_dir = run.eval_dir();
    create_dir(&eval_dir)?;
    let mut folds_csv = String::from(
        "fold,test_size,accuracy,coverage,micro_precision,micro_recall,micro_f1,macro_precision,macro_recall,macro_f1\n",
    );
    for report in &reports {
        folds_csv.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            report.fold,
            report.test_size,
            report.accuracy,
            report.coverage,
            report.micro.precision,
            report.micro.recall,
            report.micro.f1,
            report.macro_avg.precision,
            report.macro_avg.recall,
            report.macro_avg.f1,
        ));
    }
    let mean_accuracy =
        reports.iter().map(|r| r.accuracy).sum::<f64>() / reports.len().max(1) as f64;
    folds_csv.push_str(&format!("mean,,{mean_accuracy:.6},,,,,,,\n"));
    let folds_path = eval_dir.join("cv_folds.csv");
    write_text(&folds_path, &folds_csv)?;

    let mut per_class_csv = String::from("fold,code,precision,recall,f1\n");
    for report in &reports {
        for (code, prf) in &report.per_class {
            per_class_csv.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6}\n",
                report.fold, code, prf.precision, prf.recall, prf.f1
            ));
        }
    }
    let per_class_path = eval_dir.join("cv_per_class.csv");
    write_text(&per_class_path, &per_class_csv)?;

    run.record_stage(
        "evaluate",
        &config.config_hash(),
        &[],
        &[folds_path, per_class_path],
    )
}

fn assignments_from_records(records: &[LabelRecord], drop_unfiltered: bool) -> Assignments {
    let mut assignments = Assignments::new();
    for example in usable_labels(records, drop_unfiltered) {
        assignments
            .entry(example.publication_id.clone())
            .or_default()
            .insert(example.code.clone());
    }
    assignments
}

/// Report: emit the requested report family from the label artifacts.
pub fn cmd_report(
    config: &PipelineConfig,
    run: &RunDir,
    kind: ReportKind,
) -> Result<(), PipelineError> {
    let _lock = run.lock()?;
    let labels_2020_path = run.remap_dir().join("labels_2020.jsonl");
    run.require("report", &labels_2020_path, "remap")?;
    let store = Store::open(&run.store_dir())?;
    let catalog = load_catalog(config)?;
    let records_2020 = read_labels(&labels_2020_path)?;
    let assignments = assignments_from_records(&records_2020, config.drop_unfiltered);

    let reports_dir = run.reports_dir();
    create_dir(&reports_dir)?;
    let mut artifacts: Vec<PathBuf> = Vec::new();

    match kind {
        ReportKind::Coverage => {
            for (grouping, name) in [
                (CoverageGrouping::ByRecordType, "coverage_record_type.csv"),
                (CoverageGrouping::ByPeriod5y, "coverage_period.csv"),
            ] {
                let rows = coverage_report(&assignments, &store, grouping);
                let mut csv = String::from("group,total,covered,percentage\n");
                for row in &rows {
                    csv.push_str(&format!(
                        "{},{},{},{}\n",
                        row.group,
                        row.total,
                        row.covered,
                        row.percentage()
                    ));
                }
                let path = reports_dir.join(name);
                write_text(&path, &csv)?;
                artifacts.push(path);
            }
            let rows = coverage_report(&assignments, &store, CoverageGrouping::ByPeriod5y);
            let labels: Vec<String> = rows.iter().map(|r| r.group.clone()).collect();
            let values: Vec<f64> = rows
                .iter()
                .map(|r| {
                    if r.total == 0 {
                        0.0
                    } else {
                        100.0 * r.covered as f64 / r.total as f64
                    }
                })
                .collect();
            let svg = chart::line_chart(
                "Coverage by 5-year period",
                &labels,
                &[("coverage %".to_string(), values)],
                100.0,
            );
            let path = reports_dir.join("coverage_period.svg");
            write_text(&path, &svg)?;
            artifacts.push(path);
        }
        ReportKind::Distribution => {
            let rows = distribution_report(&assignments, &catalog);
            let total: u64 = rows.iter().map(|r| r.count).sum();
            let mut csv = String::from("division,name,count,share\n");
            for row in &rows {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    row.division,
                    row.name.replace(',', ";"),
                    row.count,
                    evaluate::format_percentage(row.count, total)
                ));
            }
            let path = reports_dir.join("distribution.csv");
            write_text(&path, &csv)?;
            artifacts.push(path);

            let labels: Vec<String> = rows
                .iter()
                .map(|r| format!("{} {}", r.division, r.name))
                .collect();
            let values: Vec<f64> = rows.iter().map(|r| r.count as f64).collect();
            let svg = chart::bar_chart("Outputs per division", &labels, &values, "outputs");
            let path = reports_dir.join("distribution.svg");
            write_text(&path, &svg)?;
            artifacts.push(path);
        }
        ReportKind::Transition => {
            let labels_2008_path = run.labels_dir().join("labels.jsonl");
            run.require("report", &labels_2008_path, "label")?;
            let records_2008 = read_labels(&labels_2008_path)?;
            let old = assignments_from_records(&records_2008, config.drop_unfiltered);
            let matrix = transition_matrix(&old, &assignments, &catalog);
            let path = reports_dir.join("transition.csv");
            write_text(&path, &matrix.to_csv())?;
            artifacts.push(path);

            let row_labels: Vec<String> =
                matrix.rows.iter().map(|c| c.digits().to_string()).collect();
            let col_labels: Vec<String> =
                matrix.cols.iter().map(|c| c.digits().to_string()).collect();
            let svg = chart::heatmap(
                "2008 to 2020 transition (%)",
                &row_labels,
                &col_labels,
                &matrix.cells,
                Some((matrix.stem_rows, matrix.stem_cols)),
            );
            let path = reports_dir.join("transition.svg");
            write_text(&path, &svg)?;
            artifacts.push(path);
        }
        ReportKind::JournalList => {
            let list = journal_list(
                &assignments,
                &store,
                config.report_top_k,
                config.report_since_year,
            );
            let path = reports_dir.join("journal_list.csv");
            let mut writer = csv::Writer::from_path(&path)
                .map_err(|e| PipelineError::io(&path, std::io::Error::other(e)))?;
            let mut header = vec!["journal_id".to_string(), "title".to_string()];
            for i in 1..=config.report_top_k {
                header.push(format!("code_{i}"));
            }
            writer
                .write_record(&header)
                .map_err(|e| PipelineError::io(&path, std::io::Error::other(e)))?;
            for journal in &list {
                let mut row = vec![journal.journal_id.clone(), journal.title.clone()];
                for i in 0..config.report_top_k {
                    row.push(
                        journal
                            .codes
                            .get(i)
                            .map(|c| c.digits().to_string())
                            .unwrap_or_default(),
                    );
                }
                writer
                    .write_record(&row)
                    .map_err(|e| PipelineError::io(&path, std::io::Error::other(e)))?;
            }
            writer
                .flush()
                .map_err(|e| PipelineError::io(&path, e))?;
            artifacts.push(path);
        }
    }
    run.record_stage("report", &config.config_hash(), &[], &artifacts)
}
