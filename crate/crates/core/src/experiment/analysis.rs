use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CodClass, VaRecord};
use crate::mlogit::{Design, DesignBuilder, ModelShape, NewtonOptions, Standardization};
use crate::ppi::{
    fit_classical, fit_naive, infer_multippi, CoefficientLabels, EstimatorKind, InferenceReport, LambdaMode, PpiInputs,
};

/// Options shared by every inferential fit in an analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceSpec {
    pub lambda: LambdaMode,
    pub alpha: f64,
    pub reference: CodClass,
    /// z-standardize age with the pooled moments of all analysed rows.
    pub standardize: bool,
    pub newton: NewtonOptions,
}

impl Default for InferenceSpec {
    fn default() -> Self {
        InferenceSpec {
            lambda: LambdaMode::Tuned,
            alpha: 0.05,
            reference: CodClass::NonCommunicable,
            standardize: true,
            newton: NewtonOptions::default(),
        }
    }
}

/// Class ordering for a fit: reference first, then the remaining present
/// classes in enumeration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSet {
    pub classes: Vec<CodClass>,
}

impl ClassSet {
    /// Classes appearing in `seen`, with `reference` moved to the front.
    /// When `reference` is absent the most frequent class stands in.
    pub fn from_observed(seen: &[CodClass], reference: CodClass, warnings: &mut Vec<String>) -> Result<Self> {
        let mut counts = [0usize; 5];
        for c in seen {
            let i = c.ordinal().ok_or_else(|| Error::Precondition("unclassified label reached inference".into()))?;
            counts[i] += 1;
        }
        let reference = if reference.ordinal().is_some_and(|i| counts[i] > 0) {
            reference
        } else {
            let best = (0..5).fold(0, |b, i| if counts[i] > counts[b] { i } else { b });
            let stand_in = CodClass::BROAD[best];
            warnings.push(format!("reference class {reference} absent; using {stand_in}"));
            stand_in
        };
        let mut classes = vec![reference];
        classes.extend(CodClass::BROAD.iter().copied().filter(|&c| c != reference && counts[c.ordinal().unwrap()] > 0));
        if classes.len() < 2 {
            return Err(Error::Degenerate(format!("only one class ({reference}) present")));
        }
        Ok(ClassSet { classes })
    }

    pub fn index(&self, c: CodClass) -> Result<usize> {
        self.classes
            .iter()
            .position(|&k| k == c)
            .ok_or_else(|| Error::Parameter(format!("class {c} not in the fitted class set")))
    }

    pub fn indices(&self, cs: &[CodClass]) -> Result<Vec<usize>> {
        cs.iter().map(|&c| self.index(c)).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.to_string()).collect()
    }
}

/// Estimator outputs for one analysed group of records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOutcome {
    pub classes: Vec<String>,
    pub reference: String,
    pub standardization: Standardization,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub ground_truth: Option<InferenceReport>,
    pub classical: Option<InferenceReport>,
    pub naive: Option<InferenceReport>,
    pub multippi: Option<InferenceReport>,
    /// Set when the labeled subset lacks a class of the class set.
    pub degenerate: bool,
    pub missing_labeled_classes: Vec<String>,
    pub warnings: Vec<String>,
    pub errors: Vec<String>,
}

fn keep(slot: &mut Option<InferenceReport>, errors: &mut Vec<String>, name: &str, r: Result<InferenceReport>) {
    match r {
        Ok(rep) => *slot = Some(rep),
        Err(e) => errors.push(format!("{name}: {e}")),
    }
}

struct Prepared {
    classes: ClassSet,
    shape: ModelShape,
    design: Design,
    standardization: Standardization,
    names: CoefficientLabels,
    yhat: Vec<usize>,
    labeled_truth: Vec<CodClass>,
    all_truth: Option<Vec<CodClass>>,
    warnings: Vec<String>,
}

fn prepare(records: &[VaRecord], predicted: &[CodClass], labeled: &[usize], unlabeled: &[usize], spec: &InferenceSpec) -> Result<Prepared> {
    if predicted.len() != records.len() {
        return Err(Error::Shape("predictions must align with records".into()));
    }
    if labeled.len() + unlabeled.len() != records.len() {
        return Err(Error::Shape("labeled and unlabeled indices must partition the records".into()));
    }
    let truth_of = |i: usize| {
        records[i]
            .true_cause
            .filter(|c| !c.is_unclassified())
            .ok_or_else(|| Error::Precondition(format!("labeled record `{}` has no true cause", records[i].record_id)))
    };
    let labeled_truth = labeled.iter().map(|&i| truth_of(i)).collect::<Result<Vec<_>>>()?;
    let all_truth: Option<Vec<CodClass>> = records.iter().map(|r| r.true_cause.filter(|c| !c.is_unclassified())).collect();

    let mut warnings = Vec::new();
    let mut seen: Vec<CodClass> = predicted.to_vec();
    match &all_truth {
        Some(t) => seen.extend(t),
        None => seen.extend(&labeled_truth),
    }
    let classes = ClassSet::from_observed(&seen, spec.reference, &mut warnings)?;
    let shape = ModelShape::new(classes.classes.len(), 2)?;
    let (design, standardization) = age_design(records, spec.standardize)?;
    let names = CoefficientLabels { classes: classes.names(), covariates: vec!["intercept".into(), "age".into()] };
    let yhat = classes.indices(predicted)?;
    Ok(Prepared { classes, shape, design, standardization, names, yhat, labeled_truth, all_truth, warnings })
}

impl Prepared {
    fn inputs(&self, labeled: &[usize], unlabeled: &[usize]) -> Result<PpiInputs> {
        PpiInputs::new(
            self.shape,
            self.design.select(labeled),
            self.classes.indices(&self.labeled_truth)?,
            labeled.iter().map(|&i| self.yhat[i]).collect(),
            self.design.select(unlabeled),
            unlabeled.iter().map(|&i| self.yhat[i]).collect(),
        )
    }
}

/// The rectified-fit inputs and coefficient names [`analyze`] uses.
pub fn ppi_inputs(
    records: &[VaRecord],
    predicted: &[CodClass],
    labeled: &[usize],
    unlabeled: &[usize],
    spec: &InferenceSpec,
) -> Result<(PpiInputs, CoefficientLabels)> {
    let p = prepare(records, predicted, labeled, unlabeled, spec)?;
    Ok((p.inputs(labeled, unlabeled)?, p.names.clone()))
}

/// Fits ground-truth (when every record has a true cause), classical on the
/// labeled rows, naive on all rows with predictions, and multiPPI++.
///
/// `predicted` aligns with `records`; `labeled` and `unlabeled` partition
/// the record indices. Age is the single covariate.
pub fn analyze(
    records: &[VaRecord],
    predicted: &[CodClass],
    labeled: &[usize],
    unlabeled: &[usize],
    spec: &InferenceSpec,
) -> Result<AnalysisOutcome> {
    let p = prepare(records, predicted, labeled, unlabeled, spec)?;
    let mut warnings = p.warnings.clone();
    let missing: Vec<String> =
        p.classes.classes.iter().filter(|c| !p.labeled_truth.contains(c)).map(|c| c.to_string()).collect();
    if !missing.is_empty() {
        warnings.push(format!("labeled subset has no rows of: {}", missing.join(", ")));
    }
    let mut out = AnalysisOutcome {
        classes: p.classes.names(),
        reference: p.classes.classes[0].to_string(),
        standardization: p.standardization.clone(),
        n_labeled: labeled.len(),
        n_unlabeled: unlabeled.len(),
        ground_truth: None,
        classical: None,
        naive: None,
        multippi: None,
        degenerate: !missing.is_empty(),
        missing_labeled_classes: missing,
        warnings,
        errors: Vec::new(),
    };
    let (alpha, opts, shape, names) = (spec.alpha, &spec.newton, p.shape, &p.names);
    match &p.all_truth {
        Some(t) => {
            let r = p.classes.indices(t).and_then(|y| fit_classical(&p.design, &y, shape, alpha, names, EstimatorKind::GroundTruth, opts));
            keep(&mut out.ground_truth, &mut out.errors, "ground-truth", r);
        }
        None => out.warnings.push("some records lack a true cause; ground-truth fit skipped".into()),
    }
    let lx = p.design.select(labeled);
    let r = p.classes.indices(&p.labeled_truth).and_then(|ly| fit_classical(&lx, &ly, shape, alpha, names, EstimatorKind::Classical, opts));
    keep(&mut out.classical, &mut out.errors, "classical", r);
    let r = fit_naive(&p.design, &p.yhat, shape, alpha, names, opts);
    keep(&mut out.naive, &mut out.errors, "naive", r);
    let r = p.inputs(labeled, unlabeled).and_then(|inp| infer_multippi(&inp, spec.lambda, alpha, names, opts));
    keep(&mut out.multippi, &mut out.errors, "multippi", r);
    Ok(out)
}

/// The design matrix [`analyze`] builds for `records`.
pub fn age_design(records: &[VaRecord], standardize: bool) -> Result<(Design, Standardization)> {
    let builder = DesignBuilder::new(vec!["age".into()], standardize);
    let raw: Vec<Vec<f64>> = records.iter().map(|r| vec![r.age]).collect();
    let s = builder.fit(&raw)?;
    Ok((builder.transform(&s, &raw)?, s))
}
