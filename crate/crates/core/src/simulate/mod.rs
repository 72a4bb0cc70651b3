//! Synthetic multinomial data with known coefficients, label corruption, and
//! Monte Carlo coverage experiments for the three estimators.

use std::io::Write;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlogit::{class_probs, Coefficients, Design, ModelShape, NewtonOptions};
use crate::ppi::{
    fit_classical, fit_naive, infer_multippi, CoefficientLabels, EstimatorKind, InferenceReport, LambdaMode, PpiInputs,
};
use crate::rng::{stream_key, stream_rng, Rng};

/// Normal covariates, one entry per non-intercept column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSpec {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl CovariateSpec {
    pub fn standard(count: usize) -> Self {
        CovariateSpec { means: vec![0.0; count], sds: vec![1.0; count] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub theta: Coefficients,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub covariates: CovariateSpec,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(theta: Coefficients, n_labeled: usize, n_unlabeled: usize, seed: u64) -> Self {
        let covariates = CovariateSpec::standard(theta.shape.dim - 1);
        SyntheticSpec { theta, n_labeled, n_unlabeled, covariates, seed }
    }

    pub fn shape(&self) -> ModelShape {
        self.theta.shape
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.theta.shape.dim;
        if self.theta.values.len() != self.theta.shape.n_params() {
            return Err(Error::Shape("theta length does not match its shape".into()));
        }
        if self.covariates.means.len() != d - 1 || self.covariates.sds.len() != d - 1 {
            return Err(Error::Shape(format!("need {} covariate means and sds", d - 1)));
        }
        if self.covariates.sds.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::Parameter("covariate sds must be finite and non-negative".into()));
        }
        if self.n_labeled == 0 {
            return Err(Error::Parameter("n_labeled must be positive".into()));
        }
        Ok(())
    }
}

/// Generated rows. `unlabeled_y` holds the truth an analyst would not see.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDataset {
    pub shape: ModelShape,
    pub labeled_x: Design,
    pub labeled_y: Vec<usize>,
    pub unlabeled_x: Design,
    pub unlabeled_y: Vec<usize>,
}

/// Draws index `i` with probability `weights[i]`.
fn categorical(rng: &mut Rng, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn draw_row(spec: &SyntheticSpec, rng: &mut Rng) -> Result<(Vec<f64>, usize)> {
    let mut x = Vec::with_capacity(spec.theta.shape.dim);
    x.push(1.0);
    for (m, s) in spec.covariates.means.iter().zip(&spec.covariates.sds) {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        x.push(m + s * z);
    }
    let p = class_probs(&spec.theta.values, &x, spec.theta.shape)?;
    let mut weights = Vec::with_capacity(p.len() + 1);
    weights.push(1.0 - p.iter().sum::<f64>());
    weights.extend(p);
    let y = categorical(rng, &weights);
    Ok((x, y))
}

/// Samples the dataset from the stream `(seed, 0)`.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    generate_with(spec, &mut stream_rng(spec.seed, 0))
}

pub fn generate_with(spec: &SyntheticSpec, rng: &mut Rng) -> Result<SyntheticDataset> {
    spec.validate()?;
    let d = spec.theta.shape.dim;
    let mut sample = |m: usize| -> Result<(Design, Vec<usize>)> {
        let mut data = Vec::with_capacity(m * d);
        let mut ys = Vec::with_capacity(m);
        for _ in 0..m {
            let (x, y) = draw_row(spec, rng)?;
            data.extend(x);
            ys.push(y);
        }
        Ok((Design::new(d, data)?, ys))
    };
    let (labeled_x, labeled_y) = sample(spec.n_labeled)?;
    let (unlabeled_x, unlabeled_y) = sample(spec.n_unlabeled)?;
    Ok(SyntheticDataset { shape: spec.theta.shape, labeled_x, labeled_y, unlabeled_x, unlabeled_y })
}

/// Row-stochastic confusion matrix: row = true class, column = prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    matrix: Vec<Vec<f64>>,
}

impl NoiseModel {
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let k = matrix.len();
        if k < 2 || matrix.iter().any(|r| r.len() != k) {
            return Err(Error::Shape("noise matrix must be square with K >= 2".into()));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(Error::Parameter(format!("noise row {i} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::Parameter(format!("noise row {i} sums to {s}, not 1")));
            }
        }
        Ok(NoiseModel { matrix })
    }

    pub fn identity(k: usize) -> Self {
        NoiseModel { matrix: (0..k).map(|i| (0..k).map(|j| f64::from(u8::from(i == j))).collect()).collect() }
    }

    /// Every row uniform: predictions carry no information.
    pub fn uniform(k: usize) -> Self {
        NoiseModel { matrix: vec![vec![1.0 / k as f64; k]; k] }
    }

    /// Correct with probability `accuracy`, otherwise uniform over the other classes.
    pub fn diagonal(k: usize, accuracy: f64) -> Result<Self> {
        let off = (1.0 - accuracy) / (k - 1) as f64;
        Self::new((0..k).map(|i| (0..k).map(|j| if i == j { accuracy } else { off }).collect()).collect())
    }

    /// Correct with probability `accuracy`. Every error on a class other than
    /// `sink` is a prediction of `sink`; errors on `sink` itself are spread
    /// evenly over the remaining classes.
    pub fn asymmetric(k: usize, accuracy: f64, sink: usize) -> Result<Self> {
        if sink >= k {
            return Err(Error::Parameter(format!("sink class {sink} out of range for K={k}")));
        }
        let spread = (1.0 - accuracy) / (k - 1) as f64;
        let matrix = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| match (i == j, i == sink, j == sink) {
                        (true, _, _) => accuracy,
                        (false, true, _) => spread,
                        (false, false, true) => 1.0 - accuracy,
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect();
        Self::new(matrix)
    }

    pub fn n_classes(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }
}

/// Replaces each label by a draw from its confusion row.
pub fn corrupt(labels: &[usize], noise: &NoiseModel, rng: &mut Rng) -> Result<Vec<usize>> {
    let k = noise.n_classes();
    labels
        .iter()
        .map(|&y| {
            if y >= k {
                return Err(Error::Parameter(format!("label {y} out of range for K={k}")));
            }
            Ok(categorical(rng, &noise.matrix[y]))
        })
        .collect()
}

/// [`corrupt`] on the stream `(seed, 0)`.
pub fn corrupt_seeded(labels: &[usize], noise: &NoiseModel, seed: u64) -> Result<Vec<usize>> {
    corrupt(labels, noise, &mut stream_rng(seed, 0))
}

/// Stream numbers for replication `rep`.
const DATA_STREAM: usize = 1;
const NOISE_STREAM: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageOptions {
    pub replications: usize,
    pub alpha: f64,
    pub lambda: LambdaMode,
    pub newton: NewtonOptions,
    /// Keep every replication's estimates and intervals in the report.
    pub keep_replications: bool,
}

impl Default for CoverageOptions {
    fn default() -> Self {
        CoverageOptions {
            replications: 1000,
            alpha: 0.05,
            lambda: LambdaMode::Tuned,
            newton: NewtonOptions::default(),
            keep_replications: false,
        }
    }
}

/// One estimator's result in one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationFit {
    pub estimates: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl From<&InferenceReport> for ReplicationFit {
    fn from(r: &InferenceReport) -> Self {
        ReplicationFit {
            estimates: r.estimates(),
            lower: r.coefficients.iter().map(|c| c.lower).collect(),
            upper: r.coefficients.iter().map(|c| c.upper).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub accuracy: f64,
    pub classical: Option<ReplicationFit>,
    pub naive: Option<ReplicationFit>,
    pub multippi: Option<ReplicationFit>,
    pub lambda_raw: Option<f64>,
    pub lambda: Option<f64>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: EstimatorKind,
    pub successes: usize,
    pub failures: usize,
    pub failure_rate: f64,
    /// Per-coordinate fraction of intervals containing theta*.
    pub coverage: Vec<f64>,
    /// Binomial standard error of each coverage.
    pub coverage_se: Vec<f64>,
    pub pooled_coverage: f64,
    pub pooled_coverage_se: f64,
    pub mean_estimate: Vec<f64>,
    pub bias: Vec<f64>,
    pub rmse: Vec<f64>,
    pub median_width: Vec<f64>,
    pub mean_width: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSummary {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub mean_raw: f64,
    /// Fraction of replications whose raw value needed clipping.
    pub clipped_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub shape: ModelShape,
    pub theta_star: Vec<f64>,
    pub labels: CoefficientLabels,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub replications: usize,
    pub alpha: f64,
    pub lambda_mode: LambdaMode,
    pub seed: u64,
    pub noise: NoiseModel,
    pub mean_accuracy: f64,
    pub classical: EstimatorSummary,
    pub naive: EstimatorSummary,
    pub multippi: EstimatorSummary,
    pub lambda: LambdaSummary,
    /// Per coordinate, the fraction of replications (where both fits
    /// succeeded) with the multiPPI++ estimate strictly closer to theta*
    /// than the naive estimate.
    pub multippi_closer_than_naive: Vec<f64>,
    pub replication_records: Option<Vec<ReplicationRecord>>,
}

fn run_replication(spec: &SyntheticSpec, noise: &NoiseModel, options: &CoverageOptions, labels: &CoefficientLabels, rep: usize) -> ReplicationRecord {
    let mut record = ReplicationRecord {
        replication: rep,
        accuracy: f64::NAN,
        classical: None,
        naive: None,
        multippi: None,
        lambda_raw: None,
        lambda: None,
        errors: Vec::new(),
    };
    let shape = spec.theta.shape;
    let (data, lyhat, uyhat) = match replication_data(spec, noise, rep) {
        Ok(d) => d,
        Err(e) => {
            record.errors.push(e.to_string());
            return record;
        }
    };
    let hits = data.labeled_y.iter().chain(&data.unlabeled_y).zip(lyhat.iter().chain(&uyhat)).filter(|(a, b)| a == b).count();
    record.accuracy = hits as f64 / (data.labeled_y.len() + data.unlabeled_y.len()) as f64;
    let opts = &options.newton;

    match fit_classical(&data.labeled_x, &data.labeled_y, shape, options.alpha, labels, EstimatorKind::Classical, opts) {
        Ok(r) => record.classical = Some((&r).into()),
        Err(e) => record.errors.push(format!("classical: {e}")),
    }
    let naive = data
        .labeled_x
        .concat(&data.unlabeled_x)
        .and_then(|x| fit_naive(&x, &[lyhat.clone(), uyhat.clone()].concat(), shape, options.alpha, labels, opts));
    match naive {
        Ok(r) => record.naive = Some((&r).into()),
        Err(e) => record.errors.push(format!("naive: {e}")),
    }
    let ppi = PpiInputs::new(shape, data.labeled_x, data.labeled_y, lyhat, data.unlabeled_x, uyhat)
        .and_then(|inputs| infer_multippi(&inputs, options.lambda, options.alpha, labels, opts));
    match ppi {
        Ok(r) => {
            record.lambda_raw = Some(r.lambda.raw);
            record.lambda = Some(r.lambda.clipped);
            record.multippi = Some((&r).into());
        }
        Err(e) => record.errors.push(format!("multippi: {e}")),
    }
    record
}

/// The dataset and corrupted predictions (labeled, unlabeled) of replication `rep`.
pub fn replication_data(spec: &SyntheticSpec, noise: &NoiseModel, rep: usize) -> Result<(SyntheticDataset, Vec<usize>, Vec<usize>)> {
    let data = generate_with(spec, &mut stream_rng(spec.seed, stream_key(DATA_STREAM, rep)))?;
    let mut noise_rng = stream_rng(spec.seed, stream_key(NOISE_STREAM, rep));
    let lyhat = corrupt(&data.labeled_y, noise, &mut noise_rng)?;
    let uyhat = corrupt(&data.unlabeled_y, noise, &mut noise_rng)?;
    Ok((data, lyhat, uyhat))
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn binomial_se(p: f64, m: usize) -> f64 {
    if m == 0 {
        f64::NAN
    } else {
        (p * (1.0 - p) / m as f64).sqrt()
    }
}

fn summarize(kind: EstimatorKind, fits: &[Option<&ReplicationFit>], theta: &[f64]) -> EstimatorSummary {
    let ok: Vec<&ReplicationFit> = fits.iter().flatten().copied().collect();
    let m = ok.len();
    let p = theta.len();
    let per = |f: &dyn Fn(&ReplicationFit, usize) -> f64| -> Vec<Vec<f64>> {
        (0..p).map(|j| ok.iter().map(|r| f(r, j)).collect()).collect()
    };
    let covers = per(&|r, j| f64::from(u8::from(r.lower[j] <= theta[j] && theta[j] <= r.upper[j])));
    let est = per(&|r, j| r.estimates[j]);
    let widths = per(&|r, j| r.upper[j] - r.lower[j]);
    let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    let coverage: Vec<f64> = covers.iter().map(|c| mean(c)).collect();
    let pooled = mean(&covers.concat());
    let mean_estimate: Vec<f64> = est.iter().map(|e| mean(e)).collect();
    EstimatorSummary {
        estimator: kind,
        successes: m,
        failures: fits.len() - m,
        failure_rate: (fits.len() - m) as f64 / fits.len().max(1) as f64,
        coverage_se: coverage.iter().map(|&c| binomial_se(c, m)).collect(),
        coverage,
        pooled_coverage: pooled,
        pooled_coverage_se: binomial_se(pooled, m * p),
        bias: mean_estimate.iter().zip(theta).map(|(e, t)| e - t).collect(),
        rmse: est.iter().zip(theta).map(|(e, t)| mean(&e.iter().map(|v| (v - t).powi(2)).collect::<Vec<_>>()).sqrt()).collect(),
        mean_estimate,
        median_width: widths.iter().map(|w| median(w.clone())).collect(),
        mean_width: widths.iter().map(|w| mean(w)).collect(),
    }
}

/// Runs `options.replications` independent replications of generate,
/// corrupt, and fit, and aggregates interval coverage of `spec.theta`.
///
/// Replication `r` draws its data from stream `(1, r)` and its noise from
/// stream `(2, r)` under `spec.seed`, so results do not depend on thread count.
pub fn coverage_experiment(spec: &SyntheticSpec, noise: &NoiseModel, options: &CoverageOptions) -> Result<CoverageReport> {
    spec.validate()?;
    if options.replications < 100 {
        return Err(Error::Precondition(format!("need at least 100 replications, got {}", options.replications)));
    }
    if noise.n_classes() != spec.theta.shape.n_classes {
        return Err(Error::Shape("noise matrix size must equal K".into()));
    }
    let labels = CoefficientLabels::generic(spec.theta.shape);
    let records: Vec<ReplicationRecord> = (0..options.replications)
        .into_par_iter()
        .map(|rep| run_replication(spec, noise, options, &labels, rep))
        .collect();
    let theta = &spec.theta.values;
    let pick = |f: fn(&ReplicationRecord) -> Option<&ReplicationFit>| records.iter().map(f).collect::<Vec<_>>();
    let classical = summarize(EstimatorKind::Classical, &pick(|r| r.classical.as_ref()), theta);
    let naive = summarize(EstimatorKind::Naive, &pick(|r| r.naive.as_ref()), theta);
    let multippi = summarize(EstimatorKind::Multippi, &pick(|r| r.multippi.as_ref()), theta);

    let lam: Vec<f64> = records.iter().filter_map(|r| r.lambda).collect();
    let raw: Vec<f64> = records.iter().filter_map(|r| r.lambda_raw).collect();
    let lm = lam.iter().sum::<f64>() / lam.len().max(1) as f64;
    let lambda = LambdaSummary {
        count: lam.len(),
        mean: lm,
        sd: if lam.len() > 1 { (lam.iter().map(|v| (v - lm).powi(2)).sum::<f64>() / (lam.len() - 1) as f64).sqrt() } else { 0.0 },
        min: lam.iter().copied().fold(f64::INFINITY, f64::min),
        max: lam.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_raw: raw.iter().sum::<f64>() / raw.len().max(1) as f64,
        clipped_fraction: raw.iter().zip(&lam).filter(|(r, l)| r != l).count() as f64 / lam.len().max(1) as f64,
    };

    let both: Vec<(&ReplicationFit, &ReplicationFit)> =
        records.iter().filter_map(|r| Some((r.naive.as_ref()?, r.multippi.as_ref()?))).collect();
    let multippi_closer_than_naive = (0..theta.len())
        .map(|j| {
            let wins = both.iter().filter(|(nv, pp)| (pp.estimates[j] - theta[j]).abs() < (nv.estimates[j] - theta[j]).abs()).count();
            wins as f64 / both.len().max(1) as f64
        })
        .collect();
    let acc: Vec<f64> = records.iter().map(|r| r.accuracy).filter(|a| a.is_finite()).collect();

    Ok(CoverageReport {
        shape: spec.theta.shape,
        theta_star: theta.clone(),
        labels,
        n_labeled: spec.n_labeled,
        n_unlabeled: spec.n_unlabeled,
        replications: options.replications,
        alpha: options.alpha,
        lambda_mode: options.lambda,
        seed: spec.seed,
        noise: noise.clone(),
        mean_accuracy: acc.iter().sum::<f64>() / acc.len().max(1) as f64,
        classical,
        naive,
        multippi,
        lambda,
        multippi_closer_than_naive,
        replication_records: options.keep_replications.then_some(records),
    })
}

impl CoverageReport {
    pub const CSV_HEADER: &'static str =
        "estimator,class,covariate,theta_star,coverage,coverage_se,mean_estimate,bias,rmse,median_width,mean_width,successes,failures";

    pub fn write_csv_rows<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let d = self.shape.dim;
        for s in [&self.classical, &self.naive, &self.multippi] {
            for j in 0..self.theta_star.len() {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    s.estimator.as_str(),
                    self.labels.classes[j / d + 1],
                    self.labels.covariates[j % d],
                    self.theta_star[j],
                    s.coverage[j],
                    s.coverage_se[j],
                    s.mean_estimate[j],
                    s.bias[j],
                    s.rmse[j],
                    s.median_width[j],
                    s.mean_width[j],
                    s.successes,
                    s.failures
                )?;
            }
        }
        Ok(())
    }
}
