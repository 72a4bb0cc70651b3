use rand::Rng as _;

use super::*;
use crate::ingest::{CodClass, SplitStrategy, VaRecord};
use crate::mlogit::{fit_mle, ModelShape, NewtonOptions};
use crate::ppi::{CoefficientLabels, LambdaMode, PpiInputs};
use crate::rng::stream_rng;
use crate::text::{PredictorKind, PredictorSpec, Provenance, RawPredictions, UnclassifiedPolicy};

const WORDS: [&[&str]; 5] = [
    &["heart", "diabetes", "stroke", "chest"],
    &["fever", "cough", "diarrhoea", "chills"],
    &["accident", "fell", "burn", "injury"],
    &["delivery", "bleeding", "pregnant", "labour"],
    &["wasting", "tuberculosis", "hiv", "weight"],
];

/// `per_site` records for each of `sites` sites; class 1 grows with age.
fn records(sites: usize, per_site: usize, seed: u64) -> Vec<VaRecord> {
    let mut rng = stream_rng(seed, 0);
    let mut out = Vec::new();
    for s in 0..sites {
        for i in 0..per_site {
            let age: f64 = 20.0 + 60.0 * rng.random::<f64>();
            let u: f64 = rng.random();
            let shift = 0.05 * s as f64;
            let c = if u < 0.3 + shift + 0.004 * (age - 50.0) {
                0
            } else if u < 0.55 + shift {
                1
            } else if u < 0.75 {
                2
            } else if u < 0.9 {
                3
            } else {
                4
            };
            let w = WORDS[c];
            let narrative = format!("the patient {} and {} then died", w[rng.random_range(0..4)], w[rng.random_range(0..4)]);
            out.push(VaRecord {
                record_id: format!("s{s}r{i}"),
                site: format!("site{s}"),
                age,
                narrative,
                true_cause: Some(CodClass::BROAD[c]),
                predicted_cause: None,
            });
        }
    }
    out
}

fn perfect_predictions(recs: &[VaRecord]) -> RawPredictions {
    RawPredictions {
        provenance: Provenance::External("oracle".into()),
        record_ids: recs.iter().map(|r| r.record_id.clone()).collect(),
        labels: recs.iter().map(|r| r.true_cause.unwrap()).collect(),
    }
}

fn spec(predictor: PredictorSource) -> LosoSpec {
    LosoSpec {
        predictor,
        policy: UnclassifiedPolicy::Drop,
        split: SplitStrategy::FullRandom,
        labeled_fraction: 0.2,
        seed: 42,
        inference: InferenceSpec::default(),
        sites: None,
    }
}

#[test]
fn six_sites_give_six_reports() {
    let recs = records(6, 150, 1);
    let out = run_loso(&recs, &spec(PredictorSource::External(perfect_predictions(&recs)))).unwrap();
    assert_eq!(out.reports.len(), 6);
    assert!(out.skipped.is_empty());
    let names: Vec<&str> = out.reports.iter().map(|r| r.site.as_str()).collect();
    assert_eq!(names, ["site0", "site1", "site2", "site3", "site4", "site5"]);
    for r in &out.reports {
        assert_eq!(r.split.n_labeled, 30);
        assert_eq!(r.split.labeled_source, "held-out site");
        assert_eq!(r.n_training_records + r.n_site_records, recs.len());
    }
}

#[test]
fn perfect_predictor_estimators_agree() {
    let recs = records(3, 400, 2);
    let out = run_loso(&recs, &spec(PredictorSource::External(perfect_predictions(&recs)))).unwrap();
    for r in &out.reports {
        assert_eq!(r.accuracy, 1.0);
        let inf = &r.inference;
        let gt = inf.ground_truth.as_ref().unwrap();
        let naive = inf.naive.as_ref().unwrap();
        let ppi = inf.multippi.as_ref().unwrap();
        assert_eq!(gt.estimates(), naive.estimates());
        for ((g, p), se) in gt.estimates().iter().zip(ppi.estimates()).zip(ppi.std_errors()) {
            assert!((g - p).abs() <= 2.0 * se, "{g} vs {p} (se {se})");
        }
    }
}

#[test]
fn estimators_share_class_order_and_design() {
    let recs = records(2, 300, 3);
    let out = run_loso(&recs, &spec(PredictorSource::External(perfect_predictions(&recs)))).unwrap();
    for r in &out.reports {
        let inf = &r.inference;
        assert_eq!(inf.reference, "non-communicable");
        for rep in [&inf.ground_truth, &inf.classical, &inf.naive, &inf.multippi] {
            let rep = rep.as_ref().unwrap();
            assert_eq!(rep.shape, inf.ground_truth.as_ref().unwrap().shape);
            assert_eq!(rep.coefficients[0].reference, inf.reference);
            assert_eq!(rep.coefficients.iter().map(|c| c.class.clone()).collect::<Vec<_>>(),
                       inf.ground_truth.as_ref().unwrap().coefficients.iter().map(|c| c.class.clone()).collect::<Vec<_>>());
        }
        // Standardization constants are the pooled site moments.
        let site: Vec<VaRecord> = recs.iter().filter(|x| x.site == r.site).cloned().collect();
        let (_, st) = age_design(&site, true).unwrap();
        assert_eq!(st, inf.standardization);
    }
}

#[test]
fn trained_predictor_never_sees_held_out_narratives() {
    let recs = records(3, 120, 4);
    for site in sites_of(&recs) {
        let (train, held) = partition_by_site(&recs, &site);
        assert!(train.iter().all(|&i| recs[i].site != site));
        assert!(held.iter().all(|&i| recs[i].site == site));
        assert_eq!(train.len() + held.len(), recs.len());
    }
    let mut s = spec(PredictorSource::Train(PredictorSpec { min_count: 1, ..PredictorSpec::new(PredictorKind::Nb) }));
    s.sites = Some(vec!["site1".into()]);
    let out = run_loso(&recs, &s).unwrap();
    assert_eq!(out.reports.len(), 1);
    let r = &out.reports[0];
    assert_eq!(r.training_sites, ["site0", "site2"]);
    assert_eq!(r.n_training_records, 240);
    assert!(r.accuracy > 0.8, "{}", r.accuracy);
    assert_eq!(r.provenance, "nb");
    // Vocabulary totals count training tokens only: 7 tokens per narrative.
    assert_eq!(r.vocabulary.as_ref().unwrap().raw_token_total, 240 * 7);
}

#[test]
fn missing_predictions_skip_the_site() {
    let recs = records(2, 100, 5);
    let mut raw = perfect_predictions(&recs);
    raw.record_ids.truncate(150);
    raw.labels.truncate(150);
    let out = run_loso(&recs, &spec(PredictorSource::External(raw))).unwrap();
    assert_eq!(out.reports.len(), 1);
    assert_eq!(out.skipped.len(), 1);
    assert_eq!(out.skipped[0].site, "site1");
}

#[test]
fn training_failure_is_recorded() {
    let mut recs = records(2, 60, 6);
    for r in recs.iter_mut().filter(|r| r.site == "site1") {
        r.true_cause = Some(CodClass::External);
    }
    let mut s = spec(PredictorSource::Train(PredictorSpec::new(PredictorKind::Svm)));
    s.sites = Some(vec!["site0".into()]);
    let out = run_loso(&recs, &s).unwrap();
    assert!(out.reports.is_empty());
    assert_eq!(out.skipped[0].kind, "degenerate");
}

#[test]
fn missing_labeled_class_is_flagged() {
    let recs = records(1, 300, 7);
    let predicted: Vec<CodClass> = recs.iter().map(|r| r.true_cause.unwrap()).collect();
    let (labeled, unlabeled): (Vec<usize>, Vec<usize>) =
        (0..recs.len()).partition(|&i| i % 4 == 0 && recs[i].true_cause != Some(CodClass::Maternal));
    let out = analyze(&recs, &predicted, &labeled, &unlabeled, &InferenceSpec::default()).unwrap();
    assert!(out.degenerate);
    assert_eq!(out.missing_labeled_classes, ["maternal"]);
    assert!(out.ground_truth.is_some());
    assert_eq!(out.classes.len(), 5);
}

#[test]
fn loso_preconditions() {
    let recs = records(1, 50, 8);
    assert!(matches!(run_loso(&recs, &spec(PredictorSource::External(perfect_predictions(&recs)))), Err(crate::Error::Precondition(_))));
    let mut recs = records(2, 50, 8);
    recs[3].true_cause = None;
    assert!(run_loso(&recs, &spec(PredictorSource::External(perfect_predictions(&records(2, 50, 8))))).is_err());
    let recs = records(2, 50, 8);
    let mut s = spec(PredictorSource::External(perfect_predictions(&recs)));
    s.sites = Some(vec!["nowhere".into()]);
    assert!(run_loso(&recs, &s).is_err());
}

#[test]
fn loso_is_deterministic_and_drop_policy_applies() {
    let recs = records(2, 150, 9);
    let mut raw = perfect_predictions(&recs);
    for i in (0..raw.labels.len()).step_by(10) {
        raw.labels[i] = CodClass::Unclassified;
    }
    let s = spec(PredictorSource::External(raw));
    let a = run_loso(&recs, &s).unwrap();
    let b = run_loso(&recs, &s).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    for r in &a.reports {
        assert_eq!(r.dropped.len(), 15);
        assert_eq!(r.confusion.total(), 135);
        assert_eq!(r.split.n_labeled + r.split.n_unlabeled, 135);
    }
}

fn sweep_inputs() -> PpiInputs {
    let recs = records(1, 1000, 10);
    let (design, _) = age_design(&recs, true).unwrap();
    let y: Vec<usize> = recs.iter().map(|r| r.true_cause.unwrap().ordinal().unwrap()).collect();
    let mut rng = stream_rng(11, 0);
    let yhat: Vec<usize> = y.iter().map(|&c| if rng.random::<f64>() < 0.8 { c } else { rng.random_range(0..5) }).collect();
    let lab: Vec<usize> = (0..250).collect();
    let unl: Vec<usize> = (250..1000).collect();
    PpiInputs::new(
        ModelShape::new(5, 2).unwrap(),
        design.select(&lab),
        lab.iter().map(|&i| y[i]).collect(),
        lab.iter().map(|&i| yhat[i]).collect(),
        design.select(&unl),
        unl.iter().map(|&i| yhat[i]).collect(),
    )
    .unwrap()
}

#[test]
fn sweep_at_zero_is_classical() {
    let inputs = sweep_inputs();
    let labels = CoefficientLabels::generic(inputs.shape);
    let opts = NewtonOptions::default();
    let rows = lambda_sweep(&inputs, &[0.0], 0.05, &labels, &opts).unwrap();
    let (mle, _) = fit_mle(&inputs.labeled_x, &inputs.labeled_y, inputs.shape, &opts).unwrap();
    for (a, b) in rows[0].estimates.iter().zip(&mle.values) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn sweep_structure_and_continuity() {
    let inputs = sweep_inputs();
    let labels = CoefficientLabels::generic(inputs.shape);
    let opts = NewtonOptions::default();
    let rows = lambda_sweep(&inputs, &[0.0, 0.5, 1.0], 0.05, &labels, &opts).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[0].lambda < w[1].lambda));
    assert!(lambda_sweep(&inputs, &[1.2], 0.05, &labels, &opts).is_err());

    let coarse = lambda_sweep(&inputs, &[0.4, 0.5], 0.05, &labels, &opts).unwrap();
    let fine = lambda_sweep(&inputs, &[0.49, 0.5], 0.05, &labels, &opts).unwrap();
    let diff = |r: &[SweepRow]| r[0].estimates.iter().zip(&r[1].estimates).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff(&fine) < 10.0 * diff(&coarse));
    // A dense grid stays close to linear interpolation of its neighbours.
    let dense = lambda_sweep(&inputs, &uniform_grid(0.01).unwrap()[40..=50], 0.05, &labels, &opts).unwrap();
    for w in dense.windows(2) {
        let step = w[0].estimates.iter().zip(&w[1].estimates).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(step < diff(&coarse) / 2.0);
    }
    assert_eq!(uniform_grid(0.5).unwrap(), [0.0, 0.5, 1.0]);
    assert!(matches!(LambdaMode::Fixed(0.5), LambdaMode::Fixed(_)));
}

#[test]
fn csv_outputs_have_expected_rows() {
    let recs = records(2, 150, 12);
    let out = run_loso(&recs, &spec(PredictorSource::External(perfect_predictions(&recs)))).unwrap();
    let forest = forest_csv(&out.reports);
    let lines: Vec<&str> = forest.lines().collect();
    assert!(lines[0].starts_with("group,estimator"));
    // 2 sites x 4 estimators x 8 coefficients.
    assert_eq!(lines.len(), 1 + 2 * 4 * 8);
    assert_eq!(confusion_csv(&out.reports).lines().count(), 1 + 2 * 25);
    assert_eq!(metrics_csv(&out.reports).lines().count(), 3);
}
