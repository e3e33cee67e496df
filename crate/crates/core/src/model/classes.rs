//! Function classes: finite dictionaries, linear classes, star hulls, and the
//! shifted star family `F - f* + star(F - F)` used by the offset process.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::function::{empirical_norm, EvaluatedFunction};

/// N functions given by their values on the n design points (row j = f_j).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDictionary {
    values: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl FiniteDictionary {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (0..values.len()).map(|j| format!("f{j}")).collect();
        Self::with_labels(values, labels)
    }

    pub fn with_labels(values: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("dictionary"));
        }
        if labels.len() != values.len() {
            return Err(Error::DimensionMismatch {
                what: "dictionary labels",
                expected: values.len(),
                got: labels.len(),
            });
        }
        let n = values[0].len();
        if n == 0 {
            return Err(Error::Empty("dictionary rows"));
        }
        for row in &values {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "dictionary row length",
                    expected: n,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("dictionary values"));
            }
        }
        Ok(FiniteDictionary { values, labels })
    }

    /// Number of members N.
    pub fn size(&self) -> usize {
        self.values.len()
    }

    /// Length of each value vector (the sample size n the class is evaluated on).
    pub fn len_n(&self) -> usize {
        self.values[0].len()
    }

    pub fn row(&self, j: usize) -> Result<&[f64]> {
        self.values.get(j).map(|r| r.as_slice()).ok_or({
            Error::IndexOutOfRange {
                what: "dictionary member",
                index: j,
                size: self.values.len(),
            }
        })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Row extraction as an evaluated function.
    pub fn evaluate(&self, j: usize) -> Result<EvaluatedFunction> {
        EvaluatedFunction::new(self.row(j)?.to_vec())
    }

    /// Largest empirical norm across members. Optional check for settings that
    /// assume the class sits inside the unit ball; never enforced on
    /// construction.
    pub fn max_empirical_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|r| empirical_norm(r))
            .fold(0.0, f64::max)
    }
}

/// Linear class `{ x -> w^T x : w in R^p }` represented by its n x p design
/// matrix on the sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClass {
    features: DMatrix<f64>,
}

impl LinearClass {
    pub fn new(features: DMatrix<f64>) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::Empty("linear class design matrix"));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear class design matrix"));
        }
        Ok(LinearClass { features })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("linear class design matrix"));
        }
        Self::new(crate::linalg::matrix_from_rows(rows))
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    /// `X . beta` on the sample.
    pub fn evaluate(&self, weights: &[f64]) -> Result<EvaluatedFunction> {
        if weights.len() != self.p() {
            return Err(Error::DimensionMismatch {
                what: "weight vector",
                expected: self.p(),
                got: weights.len(),
            });
        }
        let beta = DVector::from_column_slice(weights);
        let v = &self.features * beta;
        EvaluatedFunction::new(v.iter().cloned().collect())
    }
}

/// Star hull `star(F, g) = { lambda g + (1 - lambda) f : f in F, lambda in [0,1] }`.
#[derive(Debug, Clone)]
pub struct StarHullClass {
    base: FiniteDictionary,
    center: EvaluatedFunction,
}

impl StarHullClass {
    pub fn new(base: FiniteDictionary, center: EvaluatedFunction) -> Result<Self> {
        if center.len() != base.len_n() {
            return Err(Error::DimensionMismatch {
                what: "star hull center",
                expected: base.len_n(),
                got: center.len(),
            });
        }
        Ok(StarHullClass { base, center })
    }

    pub fn base(&self) -> &FiniteDictionary {
        &self.base
    }

    pub fn center(&self) -> &EvaluatedFunction {
        &self.center
    }

    /// `lambda * center + (1 - lambda) * base_j`. At lambda = 0 this returns
    /// the base member and at lambda = 1 the center, exactly.
    pub fn evaluate(&self, j: usize, lambda: f64) -> Result<EvaluatedFunction> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be in [0,1], got {lambda}"
            )));
        }
        let base = self.base.row(j)?;
        let v: Vec<f64> = self
            .center
            .values()
            .iter()
            .zip(base)
            .map(|(g, f)| lambda * g + (1.0 - lambda) * f)
            .collect();
        EvaluatedFunction::new(v)
    }
}

/// The shifted star family `H = F - f* + star(F - F)`, enumerable as the
/// three-index segment family `h = (f_j - f*) + lambda (f_k - f_l)`,
/// lambda in [0,1]. Contains the zero function whenever f* is a member of F
/// (take j with f_j = f* and lambda = 0).
#[derive(Debug, Clone)]
pub struct ShiftedStarClass {
    dict: FiniteDictionary,
    f_star: Vec<f64>,
}

impl ShiftedStarClass {
    pub fn new(dict: FiniteDictionary, f_star: Vec<f64>) -> Result<Self> {
        if f_star.len() != dict.len_n() {
            return Err(Error::DimensionMismatch {
                what: "f* values",
                expected: dict.len_n(),
                got: f_star.len(),
            });
        }
        if f_star.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("f* values"));
        }
        Ok(ShiftedStarClass { dict, f_star })
    }

    pub fn dict(&self) -> &FiniteDictionary {
        &self.dict
    }

    pub fn f_star(&self) -> &[f64] {
        &self.f_star
    }

    pub fn num_base(&self) -> usize {
        self.dict.size()
    }

    pub fn len_n(&self) -> usize {
        self.dict.len_n()
    }

    /// The segment `(a, b)` with `a = f_j - f*` and `b = f_k - f_l`, so that
    /// members along it are `a + lambda b`.
    pub fn segment(&self, j: usize, k: usize, l: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let fj = self.dict.row(j)?;
        let fk = self.dict.row(k)?;
        let fl = self.dict.row(l)?;
        let a = fj.iter().zip(&self.f_star).map(|(f, s)| f - s).collect();
        let b = fk.iter().zip(fl).map(|(u, v)| u - v).collect();
        Ok((a, b))
    }

    /// Concrete member `(f_j - f*) + lambda (f_k - f_l)`.
    pub fn member(&self, j: usize, k: usize, l: usize, lambda: f64) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be in [0,1], got {lambda}"
            )));
        }
        let (a, b) = self.segment(j, k, l)?;
        Ok(a.iter().zip(&b).map(|(x, y)| x + lambda * y).collect())
    }
}

/// Construct the shifted star family around a reference function.
pub fn shifted_star_class(
    dict: &FiniteDictionary,
    f_star: &EvaluatedFunction,
) -> Result<ShiftedStarClass> {
    ShiftedStarClass::new(dict.clone(), f_star.values().to_vec())
}

/// Classes the two-step estimator accepts.
#[derive(Debug, Clone)]
pub enum FunctionClass {
    Finite(FiniteDictionary),
    Linear(LinearClass),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dictionary_row_extraction_is_identity() {
        let d = FiniteDictionary::new(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(d.evaluate(0).unwrap().values(), &[1.0, 2.0]);
        assert!(d.evaluate(2).is_err());
    }

    #[test]
    fn linear_zero_weights_give_zero_vector() {
        let l = LinearClass::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let f = l.evaluate(&[0.0, 0.0]).unwrap();
        assert_eq!(f.values(), &[0.0, 0.0, 0.0]);
        assert!(l.evaluate(&[1.0]).is_err());
    }

    #[test]
    fn star_hull_endpoints_are_exact() {
        let base = FiniteDictionary::new(vec![vec![1.0, -2.0, 0.25]]).unwrap();
        let center = EvaluatedFunction::new(vec![0.5, 0.125, -8.0]).unwrap();
        let hull = StarHullClass::new(base, center.clone()).unwrap();
        assert_eq!(hull.evaluate(0, 1.0).unwrap().values(), center.values());
        assert_eq!(hull.evaluate(0, 0.0).unwrap().values(), &[1.0, -2.0, 0.25]);
    }

    #[test]
    fn singleton_shifted_star_is_zero() {
        let d = FiniteDictionary::new(vec![vec![2.0, -1.0]]).unwrap();
        let fstar = EvaluatedFunction::new(vec![2.0, -1.0]).unwrap();
        let h = shifted_star_class(&d, &fstar).unwrap();
        for lambda in [0.0, 0.3, 1.0] {
            assert_eq!(h.member(0, 0, 0, lambda).unwrap(), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn lambda_zero_slice_is_shifted_dictionary() {
        let d = FiniteDictionary::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let fstar = EvaluatedFunction::new(vec![0.5, 0.5]).unwrap();
        let h = shifted_star_class(&d, &fstar).unwrap();
        assert_eq!(h.member(0, 1, 1, 0.0).unwrap(), vec![0.5, -0.5]);
        assert_eq!(h.member(1, 0, 0, 0.0).unwrap(), vec![-0.5, 0.5]);
    }
}
