use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major covariate matrix. Every row has `dim` finite entries.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Design {
    dim: usize,
    data: Vec<f64>,
}

impl Design {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("design dimension must be positive".into()));
        }
        if data.len() % dim != 0 {
            return Err(Error::Shape(format!("{} values do not fill rows of width {dim}", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite design entry".into()));
        }
        Ok(Design { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or_else(|| Error::Shape("no rows".into()))?;
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape("ragged design rows".into()));
        }
        Design::new(dim, rows.concat())
    }

    /// Empty design with a fixed width.
    pub fn empty(dim: usize) -> Self {
        Design { dim, data: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim.max(1)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::Shape(format!("row width {} != {}", row.len(), self.dim)));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite design entry".into()));
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Design {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Design { dim: self.dim, data }
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn concat(&self, other: &Design) -> Result<Design> {
        if self.dim != other.dim {
            return Err(Error::Shape("cannot stack designs of different widths".into()));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Design { dim: self.dim, data })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Centering and scaling constants for the non-intercept covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    /// Sample standard deviations (divisor m-1); 1 for constant or unstandardized columns.
    pub scales: Vec<f64>,
    pub standardized: bool,
}

impl Standardization {
    /// Maps coefficients on the raw covariate scale to the standardized scale:
    /// `eta = b0 + sum b_j v_j = (b0 + sum b_j mu_j) + sum (b_j s_j) z_j`.
    pub fn to_standardized_block(&self, raw_block: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; raw_block.len()];
        out[0] = raw_block[0];
        for j in 0..self.names.len() {
            out[0] += raw_block[j + 1] * self.means[j];
            out[j + 1] = raw_block[j + 1] * self.scales[j];
        }
        out
    }
}

/// Builds `[1, z_1, ..., z_m]` design rows from raw numeric covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignBuilder {
    pub names: Vec<String>,
    pub standardize: bool,
}

impl DesignBuilder {
    pub fn new(names: Vec<String>, standardize: bool) -> Self {
        DesignBuilder { names, standardize }
    }

    /// Covariate names including the leading intercept.
    pub fn column_names(&self) -> Vec<String> {
        std::iter::once("intercept".to_string()).chain(self.names.iter().cloned()).collect()
    }

    /// Moments over all `raw` rows (pooled labeled and unlabeled).
    pub fn fit(&self, raw: &[Vec<f64>]) -> Result<Standardization> {
        let m = self.names.len();
        if raw.iter().any(|r| r.len() != m) {
            return Err(Error::Shape(format!("expected {m} raw covariates per row")));
        }
        let count = raw.len();
        let mut means = vec![0.0; m];
        let mut scales = vec![1.0; m];
        if self.standardize && count > 1 {
            for j in 0..m {
                let mean = raw.iter().map(|r| r[j]).sum::<f64>() / count as f64;
                let var = raw.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
                means[j] = mean;
                let sd = var.sqrt();
                scales[j] = if sd > 0.0 && sd.is_finite() { sd } else { 1.0 };
            }
        }
        Ok(Standardization { names: self.names.clone(), means, scales, standardized: self.standardize })
    }

    pub fn transform(&self, std: &Standardization, raw: &[Vec<f64>]) -> Result<Design> {
        let m = self.names.len();
        let mut data = Vec::with_capacity(raw.len() * (m + 1));
        for r in raw {
            if r.len() != m {
                return Err(Error::Shape(format!("expected {m} raw covariates per row")));
            }
            data.push(1.0);
            for j in 0..m {
                data.push((r[j] - std.means[j]) / std.scales[j]);
            }
        }
        Design::new(m + 1, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn select_and_concat() {
        let d = Design::from_rows(&[vec![1.0, 2.0], vec![1.0, 3.0], vec![1.0, 4.0]]).unwrap();
        assert_eq!(d.rows(), 3);
        let s = d.select(&[2, 0]);
        assert_eq!(s.row(0), &[1.0, 4.0]);
        assert_eq!(s.concat(&d).unwrap().rows(), 5);
        assert!(Design::new(2, vec![1.0, f64::NAN]).is_err());
        assert!(Design::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn standardization_round_trip() {
        let b = DesignBuilder::new(vec!["age".into()], true);
        let raw = vec![vec![20.0], vec![40.0], vec![60.0]];
        let st = b.fit(&raw).unwrap();
        assert_eq!(st.means, vec![40.0]);
        assert!((st.scales[0] - 20.0).abs() < 1e-12);
        let d = b.transform(&st, &raw).unwrap();
        assert_eq!(d.row(0), &[1.0, -1.0]);
        // Raw-scale block (b0, b1) gives the same linear predictor on z.
        let raw_block = [0.5, 0.03];
        let z_block = st.to_standardized_block(&raw_block);
        for (r, z) in raw.iter().zip(d.iter()) {
            let a = raw_block[0] + raw_block[1] * r[0];
            let b = z_block[0] + z_block[1] * z[1];
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unstandardized_is_identity() {
        let b = DesignBuilder::new(vec!["age".into()], false);
        let raw = vec![vec![20.0], vec![40.0]];
        let st = b.fit(&raw).unwrap();
        assert_eq!(b.transform(&st, &raw).unwrap().row(1), &[1.0, 40.0]);
        assert_eq!(b.column_names(), vec!["intercept", "age"]);
    }
}
