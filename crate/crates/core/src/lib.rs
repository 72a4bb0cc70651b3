//! Prediction-powered inference for multinomial logistic regression.
//!
//! The crate fits cause-of-death regressions from a small set of records with
//! known causes plus a large set whose causes were predicted by a text
//! classifier. The rectified estimator ([`ppi::fit_multippi`]) corrects the
//! bias that comes from treating predictions as truth, and its sandwich
//! covariance gives confidence intervals with nominal coverage.
//!
//! Module map:
//! - [`ingest`]: CSV records, the 34-to-5 cause table, seeded splits
//! - [`text`]: tokenizer, bag-of-words, naive Bayes, KNN, linear SVM, external predictions
//! - [`mlogit`]: multinomial logit loss/gradient/Hessian and a Newton solver
//! - [`ppi`]: classical, naive and rectified estimators with sandwich CIs
//! - [`experiment`]: leave-one-site-out protocol, metrics, lambda sweeps
//! - [`simulate`]: synthetic data, label corruption, coverage studies

pub mod cli;
pub mod error;
pub mod experiment;
pub mod ingest;
pub mod mlogit;
pub mod ppi;
pub mod rng;
pub mod simulate;
pub mod text;

pub use error::{Error, Result};
