use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;
use serde_json::json;

use super::args::*;
use super::artifacts::{csv_text, file_stem, Artifacts, RunConfig};
use super::CliError;
use crate::error::Error;
use crate::experiment::{
    accuracy, analyze, confusion_csv, forest_csv, lambda_sweep, macro_f1, metrics_csv, ppi_inputs, run_loso_with_progress,
    sweep_csv, uniform_grid, AnalysisOutcome, ConfusionMatrix, F1Summary, InferenceSpec, LosoSpec, PredictorSource,
    VocabularyStats,
};
use crate::ingest::{load_records, split, CodClass, IngestConfig, LoadSummary, SplitParams, VaRecord};
use crate::mlogit::{Coefficients, ModelShape};
use crate::ppi::InferenceReport;
use crate::simulate::{coverage_experiment, replication_data, CoverageOptions, CovariateSpec, SyntheticSpec};
use crate::text::{
    majority_class, predict_all, read_external_predictions, PredictionCounts, PredictionSet, PredictorSpec, Provenance,
    RawPredictions, SvmOptions, TrainedModel, UnclassifiedPolicy,
};

type CliResult<T> = Result<T, CliError>;

pub(crate) fn progress(msg: &str) {
    eprintln!("multippi: {msg}");
}

pub(crate) fn dispatch(cli: Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Predict(a) => predict(a),
        Command::Infer(a) => infer(a),
        Command::Loso(a) => loso(a),
        Command::Simulate(a) => simulate(a),
    }
}

struct Loaded {
    records: Vec<VaRecord>,
    summary: LoadSummary,
    config: IngestConfig,
    seed: u64,
}

fn load(data: &DataArgs, split_args: Option<&SplitArgs>, seed: Option<u64>) -> CliResult<Loaded> {
    let mut config = match &data.config {
        Some(p) => IngestConfig::load(p)?,
        None => IngestConfig::default(),
    };
    if let Some(c) = &data.columns {
        config.columns.apply_overrides(c)?;
    }
    if let Some(s) = split_args {
        if let Some(st) = s.split {
            config.split.strategy = st.into();
        }
        if let Some(f) = s.labeled_fraction {
            config.split.labeled_fraction = f;
        }
    }
    if let Some(seed) = seed {
        config.split.seed = seed;
    }
    let loaded = load_records(&data.input, &config.columns)?;
    for w in &loaded.summary.warnings {
        progress(w);
    }
    if !loaded.summary.row_errors.is_empty() {
        progress(&format!("{} row(s) could not be parsed and were skipped", loaded.summary.row_errors.len()));
    }
    if loaded.records.is_empty() {
        return Err(Error::Precondition(format!("no usable records in {}", data.input.display())).into());
    }
    let seed = config.split.seed;
    Ok(Loaded { records: loaded.records, summary: loaded.summary, config, seed })
}

fn truth(r: &VaRecord) -> Option<CodClass> {
    r.true_cause.filter(|c| !c.is_unclassified())
}

fn predictor_spec(p: &PredictorArgs, kind: crate::text::PredictorKind) -> PredictorSpec {
    PredictorSpec {
        kind,
        min_count: p.min_count,
        nb_alpha: p.nb_alpha,
        knn_k: p.knn_k,
        svm: SvmOptions { c: p.svm_c, epochs: p.svm_epochs, ..SvmOptions::default() },
    }
}

fn inference_spec(e: &EstimatorArgs) -> InferenceSpec {
    InferenceSpec {
        lambda: e.lambda,
        alpha: e.alpha,
        reference: e.reference_class,
        standardize: e.standardize,
        ..InferenceSpec::default()
    }
}

fn vocab_stats(m: &TrainedModel) -> VocabularyStats {
    let v = &m.vocabulary;
    VocabularyStats {
        size: v.len(),
        min_count: v.min_count(),
        raw_token_total: v.raw_token_total(),
        retained_token_total: v.retained_token_total(),
    }
}

/// Raw predictions from an external file, reordered to `records`; every record must be covered.
fn external_for(path: &std::path::Path, records: &[VaRecord]) -> CliResult<RawPredictions> {
    let known: HashSet<&str> = records.iter().map(|r| r.record_id.as_str()).collect();
    let raw = read_external_predictions(path, &known)?;
    let map: HashMap<&str, CodClass> = raw.record_ids.iter().map(String::as_str).zip(raw.labels.iter().copied()).collect();
    let missing: Vec<&str> = records.iter().map(|r| r.record_id.as_str()).filter(|id| !map.contains_key(id)).collect();
    if !missing.is_empty() {
        return Err(Error::Precondition(format!(
            "{} record(s) have no external prediction (first: {})",
            missing.len(),
            missing[0]
        ))
        .into());
    }
    Ok(RawPredictions {
        provenance: raw.provenance.clone(),
        record_ids: records.iter().map(|r| r.record_id.clone()).collect(),
        labels: records.iter().map(|r| map[r.record_id.as_str()]).collect(),
    })
}

fn confusion_rows(cm: &ConfusionMatrix) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (i, row) in cm.counts.iter().enumerate() {
        for (j, n) in row.iter().enumerate() {
            rows.push(vec![cm.labels[i].clone(), cm.labels[j].clone(), n.to_string()]);
        }
    }
    rows
}

fn ingest(a: IngestArgs) -> CliResult<()> {
    let l = load(&a.data, Some(&a.split), a.out.seed)?;
    let parts = split(&l.records, &l.config.split)?;
    let mut sites: BTreeMap<&str, usize> = BTreeMap::new();
    let mut causes: BTreeMap<String, usize> = BTreeMap::new();
    for r in &l.records {
        *sites.entry(r.site.as_str()).or_default() += 1;
        let key = truth(r).map_or("missing".to_string(), |c| c.to_string());
        *causes.entry(key).or_default() += 1;
    }
    let mut subset = vec!["unlabeled"; l.records.len()];
    for &i in &parts.labeled {
        subset[i] = "labeled";
    }
    let config = RunConfig {
        subcommand: "ingest",
        seed: l.seed,
        settings: json!({
            "input": a.data.input,
            "config_file": a.data.config,
            "columns": l.config.columns,
            "split": l.config.split,
        }),
    };
    let mut out = Artifacts::create(&a.out.out, config)?;
    out.json(
        "ingest_summary.json",
        &json!({
            "load": l.summary,
            "n_records": l.records.len(),
            "sites": sites,
            "true_causes": causes,
            "split": {
                "strategy": parts.strategy,
                "labeled_fraction": parts.labeled_fraction,
                "seed": parts.seed,
                "n_labeled": parts.labeled.len(),
                "n_unlabeled": parts.unlabeled.len(),
            },
        }),
    )?;
    let rows = l.records.iter().zip(&subset).map(|(r, s)| {
        vec![
            r.record_id.clone(),
            r.site.clone(),
            r.age.to_string(),
            truth(r).map_or(String::new(), |c| c.to_string()),
            s.to_string(),
        ]
    });
    out.csv("records.csv", &csv_text(&["record_id", "site", "age", "true_cause", "subset"], rows)?)?;
    progress(&format!("ingest: {} records, {} labeled; wrote {}", l.records.len(), parts.labeled.len(), out.written().join(", ")));
    Ok(())
}

#[derive(Serialize)]
struct PredictMetrics<'a> {
    provenance: &'a Provenance,
    policy: UnclassifiedPolicy,
    n_evaluated: usize,
    n_predicted: usize,
    raw_counts: &'a PredictionCounts,
    counts: &'a PredictionCounts,
    dropped: &'a [String],
    imputed: &'a [String],
    imputed_class: Option<CodClass>,
    n_scored: usize,
    confusion: Option<ConfusionMatrix>,
    accuracy: Option<f64>,
    f1: Option<F1Summary>,
    n_training_records: Option<usize>,
    vocabulary: Option<VocabularyStats>,
    warnings: Vec<String>,
}

fn predict(a: PredictArgs) -> CliResult<()> {
    if a.model.is_none() && a.predictor.predictor.is_none() {
        return Err(CliError::Usage("predict needs --predictor or --model".into()));
    }
    let l = load(&a.data, None, a.out.seed)?;
    let mut warnings = Vec::new();
    let (train, eval): (Vec<VaRecord>, Vec<VaRecord>) = match (&a.eval_input, &a.holdout_site) {
        (Some(path), _) => {
            let e = load_records(path, &l.config.columns)?;
            for w in &e.summary.warnings {
                progress(w);
            }
            (l.records, e.records)
        }
        (None, Some(site)) => {
            if !l.records.iter().any(|r| &r.site == site) {
                return Err(CliError::Usage(format!("no records for held-out site `{site}`")));
            }
            l.records.into_iter().partition(|r| &r.site != site)
        }
        (None, None) => {
            warnings.push("no evaluation set given; predicting the training records in-sample".into());
            (l.records.clone(), l.records)
        }
    };
    if eval.is_empty() {
        return Err(Error::Precondition("no records to predict".into()).into());
    }

    let mut model = None;
    let raw = match (&a.model, &a.predictor.predictor) {
        (Some(path), _) => {
            let m = TrainedModel::load(path)?;
            let r = to_raw(predict_all(&m, &eval));
            model = Some((m, false));
            r
        }
        (None, Some(PredictorChoice::Builtin(kind))) => {
            let labeled: Vec<&VaRecord> = train.iter().filter(|r| truth(r).is_some()).collect();
            if labeled.is_empty() {
                return Err(Error::Precondition("no training records with a true cause".into()).into());
            }
            let text: Vec<&str> = labeled.iter().map(|r| r.narrative.as_str()).collect();
            let y: Vec<CodClass> = labeled.iter().map(|r| truth(r).unwrap()).collect();
            let m = TrainedModel::train(predictor_spec(&a.predictor, *kind), &text, &y)?;
            let r = to_raw(predict_all(&m, &eval));
            model = Some((m, true));
            r
        }
        (None, Some(PredictorChoice::External(path))) => external_for(path, &eval)?,
        (None, None) => return Err(CliError::Usage("predict needs --predictor or --model".into())),
    };
    let majority = majority_class(train.iter().filter_map(truth).collect::<Vec<_>>().iter())
        .or_else(|| majority_class(eval.iter().filter_map(truth).collect::<Vec<_>>().iter()));
    let set = raw.resolve(a.predictor.unclassified, majority)?;

    let by_id: HashMap<&str, &VaRecord> = eval.iter().map(|r| (r.record_id.as_str(), r)).collect();
    let scored: Vec<(CodClass, CodClass)> =
        set.record_ids.iter().zip(&set.labels).filter_map(|(id, &p)| Some((truth(by_id[id.as_str()])?, p))).collect();
    let confusion = if scored.is_empty() {
        None
    } else {
        let (t, p): (Vec<_>, Vec<_>) = scored.iter().copied().unzip();
        Some(ConfusionMatrix::from_classes(&t, &p)?)
    };

    let config = RunConfig {
        subcommand: "predict",
        seed: l.seed,
        settings: json!({
            "input": a.data.input,
            "config_file": a.data.config,
            "columns": l.config.columns,
            "predictor": a.predictor.predictor,
            "model": a.model,
            "predictor_spec": model.as_ref().map(|(m, _)| m.spec),
            "unclassified": a.predictor.unclassified,
            "eval_input": a.eval_input,
            "holdout_site": a.holdout_site,
        }),
    };
    let mut out = Artifacts::create(&a.out.out, config)?;
    let rows = set.record_ids.iter().zip(&set.labels).map(|(id, p)| {
        let r = by_id[id.as_str()];
        vec![id.clone(), p.to_string(), r.site.clone(), truth(r).map_or(String::new(), |c| c.to_string())]
    });
    out.csv("predictions.csv", &csv_text(&["record_id", "predicted_label", "site", "true_cause"], rows)?)?;
    if let Some(cm) = &confusion {
        out.csv("confusion.csv", &csv_text(&["truth", "predicted", "count"], confusion_rows(cm))?)?;
    } else {
        warnings.push("no evaluated record has a true cause; metrics skipped".into());
    }
    let metrics = PredictMetrics {
        provenance: &set.provenance,
        policy: set.policy,
        n_evaluated: eval.len(),
        n_predicted: set.len(),
        raw_counts: &set.raw_counts,
        counts: &set.counts,
        dropped: &set.dropped,
        imputed: &set.imputed,
        imputed_class: set.imputed_class,
        n_scored: scored.len(),
        accuracy: confusion.as_ref().map(accuracy),
        f1: confusion.as_ref().map(macro_f1),
        confusion,
        n_training_records: model.as_ref().filter(|(_, trained)| *trained).map(|_| train.len()),
        vocabulary: model.as_ref().map(|(m, _)| vocab_stats(m)),
        warnings,
    };
    out.json("metrics.json", &metrics)?;
    if let Some((m, true)) = &model {
        out.json_inline("model.json", m)?;
    }
    for w in &metrics.warnings {
        progress(w);
    }
    progress(&format!("predict: {} predictions; wrote {}", set.len(), out.written().join(", ")));
    Ok(())
}

fn to_raw(set: PredictionSet) -> RawPredictions {
    RawPredictions { provenance: set.provenance, record_ids: set.record_ids, labels: set.labels }
}

#[derive(Serialize)]
struct InferSplit {
    labeled_source: &'static str,
    split: Option<SplitParams>,
    n_labeled: usize,
    n_unlabeled: usize,
}

#[derive(Serialize)]
struct InferReport<'a> {
    provenance: &'a Provenance,
    policy: UnclassifiedPolicy,
    raw_counts: &'a PredictionCounts,
    counts: &'a PredictionCounts,
    dropped: &'a [String],
    imputed: &'a [String],
    split: InferSplit,
    outcome: &'a AnalysisOutcome,
}

fn infer(a: InferArgs) -> CliResult<()> {
    let model_path = match (&a.model, &a.predictor.predictor) {
        (Some(path), _) => Some(path),
        (None, Some(PredictorChoice::External(_))) => None,
        (None, Some(PredictorChoice::Builtin(_))) => {
            return Err(CliError::Usage(
                "infer takes predictions from external:<path> or --model; train a model with `predict` first".into(),
            ))
        }
        (None, None) => return Err(CliError::Usage("infer needs --predictor external:<path> or --model".into())),
    };
    let l = load(&a.data, Some(&a.split), a.out.seed)?;
    let records = l.records;
    let raw = match (model_path, &a.predictor.predictor) {
        (Some(path), _) => to_raw(predict_all(&TrainedModel::load(path)?, &records)),
        (None, Some(PredictorChoice::External(path))) => external_for(path, &records)?,
        _ => unreachable!("checked above"),
    };

    let with_truth = records.iter().filter(|r| truth(r).is_some()).count();
    let (labeled, unlabeled, split_info) = if with_truth == 0 {
        return Err(Error::Precondition("no record has a true cause; nothing to rectify with".into()).into());
    } else if with_truth < records.len() {
        let (lab, unl): (Vec<usize>, Vec<usize>) = (0..records.len()).partition(|&i| truth(&records[i]).is_some());
        let info = InferSplit { labeled_source: "rows with a true cause", split: None, n_labeled: 0, n_unlabeled: 0 };
        (lab, unl, info)
    } else {
        let parts = split(&records, &l.config.split)?;
        let info = InferSplit { labeled_source: "random split", split: Some(l.config.split), n_labeled: 0, n_unlabeled: 0 };
        (parts.labeled, parts.unlabeled, info)
    };
    let majority = majority_class(labeled.iter().map(|&i| truth(&records[i]).unwrap()).collect::<Vec<_>>().iter());
    let set = raw.resolve(a.predictor.unclassified, majority)?;

    let dropped: HashSet<&str> = set.dropped.iter().map(String::as_str).collect();
    let mut new_index = vec![usize::MAX; records.len()];
    let mut kept = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        if !dropped.contains(r.record_id.as_str()) {
            new_index[i] = kept.len();
            kept.push(r.clone());
        }
    }
    let remap = |v: &[usize]| v.iter().map(|&i| new_index[i]).filter(|&j| j != usize::MAX).collect::<Vec<_>>();
    let (labeled, unlabeled) = (remap(&labeled), remap(&unlabeled));
    let spec = inference_spec(&a.estimator);
    let outcome = analyze(&kept, &set.labels, &labeled, &unlabeled, &spec)?;
    let sweep = match a.sweep_step {
        Some(step) => {
            let grid = uniform_grid(step)?;
            let (inputs, names) = ppi_inputs(&kept, &set.labels, &labeled, &unlabeled, &spec)?;
            Some(lambda_sweep(&inputs, &grid, spec.alpha, &names, &spec.newton)?)
        }
        None => None,
    };

    let config = RunConfig {
        subcommand: "infer",
        seed: l.seed,
        settings: json!({
            "input": a.data.input,
            "config_file": a.data.config,
            "columns": l.config.columns,
            "predictor": a.predictor.predictor,
            "model": a.model,
            "unclassified": a.predictor.unclassified,
            "split": l.config.split,
            "inference": spec,
            "sweep_step": a.sweep_step,
        }),
    };
    let mut out = Artifacts::create(&a.out.out, config)?;
    let report = InferReport {
        provenance: &set.provenance,
        policy: set.policy,
        raw_counts: &set.raw_counts,
        counts: &set.counts,
        dropped: &set.dropped,
        imputed: &set.imputed,
        split: InferSplit { n_labeled: labeled.len(), n_unlabeled: unlabeled.len(), ..split_info },
        outcome: &outcome,
    };
    out.json("inference.json", &report)?;
    let mut body = Vec::new();
    body.extend_from_slice(InferenceReport::CSV_HEADER.as_bytes());
    body.push(b'\n');
    for rep in [&outcome.ground_truth, &outcome.classical, &outcome.naive, &outcome.multippi].into_iter().flatten() {
        rep.write_csv_rows("all", &mut body).map_err(|e| Error::io(&a.out.out, e))?;
    }
    out.csv("coefficients.csv", &String::from_utf8(body).expect("csv is utf-8"))?;
    if let Some(rows) = &sweep {
        out.csv("sweep.csv", &sweep_csv(rows))?;
    }
    for w in outcome.warnings.iter().chain(&outcome.errors) {
        progress(w);
    }
    progress(&format!("infer: n={} N={}; wrote {}", labeled.len(), unlabeled.len(), out.written().join(", ")));
    Ok(())
}

fn loso(a: LosoArgs) -> CliResult<()> {
    if a.predictor.predictor.is_none() {
        return Err(CliError::Usage("loso needs --predictor".into()));
    }
    let l = load(&a.data, Some(&a.split), a.out.seed)?;
    let predictor = match &a.predictor.predictor {
        Some(PredictorChoice::Builtin(kind)) => PredictorSource::Train(predictor_spec(&a.predictor, *kind)),
        Some(PredictorChoice::External(path)) => {
            let known: HashSet<&str> = l.records.iter().map(|r| r.record_id.as_str()).collect();
            PredictorSource::External(read_external_predictions(path, &known)?)
        }
        None => return Err(CliError::Usage("loso needs --predictor".into())),
    };
    let spec = LosoSpec {
        predictor,
        policy: a.predictor.unclassified,
        split: l.config.split.strategy,
        labeled_fraction: l.config.split.labeled_fraction,
        seed: l.seed,
        inference: inference_spec(&a.estimator),
        sites: a.sites.clone(),
    };
    let outcome = run_loso_with_progress(&l.records, &spec, &|m: &str| progress(m))?;

    let config = RunConfig {
        subcommand: "loso",
        seed: l.seed,
        settings: json!({
            "input": a.data.input,
            "config_file": a.data.config,
            "columns": l.config.columns,
            "predictor": a.predictor.predictor,
            "predictor_spec": match &spec.predictor {
                PredictorSource::Train(p) => Some(*p),
                PredictorSource::External(_) => None,
            },
            "unclassified": a.predictor.unclassified,
            "split": { "strategy": spec.split, "labeled_fraction": spec.labeled_fraction },
            "inference": spec.inference,
            "sites": a.sites,
        }),
    };
    let mut out = Artifacts::create(&a.out.out, config)?;
    for r in &outcome.reports {
        out.json(&format!("site_{}.json", file_stem(&r.site)), r)?;
    }
    out.csv("forest.csv", &forest_csv(&outcome.reports))?;
    out.csv("confusion.csv", &confusion_csv(&outcome.reports))?;
    out.csv("metrics.csv", &metrics_csv(&outcome.reports))?;
    out.json(
        "loso_summary.json",
        &json!({
            "sites": outcome.reports.iter().map(|r| &r.site).collect::<Vec<_>>(),
            "skipped": outcome.skipped,
        }),
    )?;
    if outcome.reports.is_empty() {
        return Err(Error::Precondition("every held-out site was skipped".into()).into());
    }
    progress(&format!(
        "loso: {} site(s) reported, {} skipped; wrote {} file(s)",
        outcome.reports.len(),
        outcome.skipped.len(),
        out.written().len()
    ));
    Ok(())
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let shape = ModelShape::new(a.classes, a.dim)?;
    let values = match &a.theta {
        Some(t) => t.clone(),
        None if a.classes == 3 && a.dim == 2 => vec![-0.5, 0.5, 0.5, 1.0],
        None => return Err(CliError::Usage(format!("--theta needs {} values for K={} d={}", shape.n_params(), a.classes, a.dim))),
    };
    let theta = Coefficients::new(shape, values).map_err(|e| CliError::Usage(e.to_string()))?;
    let seed = a.out.seed.unwrap_or(0);
    let mut spec = SyntheticSpec::new(theta, a.n_labeled, a.n_unlabeled, seed);
    spec.covariates = CovariateSpec { means: vec![a.covariate_mean; a.dim - 1], sds: vec![a.covariate_sd; a.dim - 1] };
    let noise = a.noise.build(a.classes)?;
    if a.dump_dataset && (a.dim != 2 || a.classes > CodClass::BROAD.len()) {
        return Err(CliError::Usage("--dump-dataset needs --dim 2 and at most 5 classes".into()));
    }
    let options = CoverageOptions {
        replications: a.replications,
        alpha: a.alpha,
        lambda: a.lambda,
        keep_replications: a.dump_replications,
        ..CoverageOptions::default()
    };
    let mut report = coverage_experiment(&spec, &noise, &options)?;
    let replications = report.replication_records.take();

    let config = RunConfig {
        subcommand: "simulate",
        seed,
        settings: json!({
            "classes": a.classes,
            "dim": a.dim,
            "theta": spec.theta.values,
            "n_labeled": a.n_labeled,
            "n_unlabeled": a.n_unlabeled,
            "covariates": spec.covariates,
            "noise": a.noise,
            "replications": a.replications,
            "alpha": a.alpha,
            "lambda": a.lambda,
        }),
    };
    let mut out = Artifacts::create(&a.out.out, config)?;
    out.json("coverage.json", &report)?;
    let mut body = Vec::new();
    body.extend_from_slice(crate::simulate::CoverageReport::CSV_HEADER.as_bytes());
    body.push(b'\n');
    report.write_csv_rows(&mut body).map_err(|e| Error::io(&a.out.out, e))?;
    out.csv("coverage.csv", &String::from_utf8(body).expect("csv is utf-8"))?;
    if let Some(reps) = &replications {
        out.json("replications.json", reps)?;
    }
    if a.dump_dataset {
        let (data, lyhat, uyhat) = replication_data(&spec, &noise, 0)?;
        let name = |k: usize| CodClass::BROAD[k].to_string();
        let mut records = Vec::new();
        let mut preds = Vec::new();
        let mut under_age = 0;
        let mut push = |id: String, x: f64, y: Option<usize>, yhat: usize| {
            if x < crate::ingest::ADULT_MIN_AGE {
                under_age += 1;
            }
            records.push(vec![id.clone(), "synthetic".into(), x.to_string(), String::new(), y.map_or(String::new(), name)]);
            preds.push(vec![id, name(yhat)]);
        };
        for i in 0..data.labeled_y.len() {
            push(format!("l{i}"), data.labeled_x.row(i)[1], Some(data.labeled_y[i]), lyhat[i]);
        }
        for i in 0..uyhat.len() {
            push(format!("u{i}"), data.unlabeled_x.row(i)[1], None, uyhat[i]);
        }
        if under_age > 0 {
            progress(&format!("{under_age} covariate value(s) below the adult age cut; they will be dropped on re-ingest"));
        }
        out.csv("dataset.csv", &csv_text(&["newid", "site", "age_years", "open_response", "gs_text34"], records)?)?;
        out.csv("predictions.csv", &csv_text(&["record_id", "predicted_label"], preds)?)?;
    }
    progress(&format!(
        "simulate: multippi coverage {:?}, naive {:?}; wrote {}",
        report.multippi.coverage,
        report.naive.coverage,
        out.written().join(", ")
    ));
    Ok(())
}
