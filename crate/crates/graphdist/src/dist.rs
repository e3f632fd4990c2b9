//! Distance matrices tagged with the producing method and its parameters.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// The distance families computed by this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Shortest path over edge costs.
    Sp,
    /// Unweighted shortest path (hop count).
    Spu,
    /// Commute time.
    Ct,
    /// Commute cost.
    Cc,
    /// Resistance distance.
    Res,
    /// Convex combination of shortest path and resistance.
    Spct,
    /// Randomized shortest path dissimilarity.
    Rsp,
    /// Free energy distance.
    Fe,
    /// Logarithmic forest distance.
    LogFor,
    /// Flow based p-resistance.
    Pres,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Sp => "sp",
            Method::Spu => "spu",
            Method::Ct => "ct",
            Method::Cc => "cc",
            Method::Res => "res",
            Method::Spct => "spct",
            Method::Rsp => "rsp",
            Method::Fe => "fe",
            Method::LogFor => "logfor",
            Method::Pres => "pres",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "sp" => Some(Method::Sp),
            "spu" => Some(Method::Spu),
            "ct" => Some(Method::Ct),
            "cc" => Some(Method::Cc),
            "res" => Some(Method::Res),
            "spct" => Some(Method::Spct),
            "rsp" => Some(Method::Rsp),
            "fe" => Some(Method::Fe),
            "logfor" => Some(Method::LogFor),
            "pres" => Some(Method::Pres),
            _ => None,
        }
    }

    /// True when the family satisfies the triangle inequality for every
    /// parameter value. The RSP dissimilarity is the one semimetric here.
    pub fn is_metric(&self) -> bool {
        !matches!(self, Method::Rsp)
    }
}

/// Parameter record attached to a distance matrix; only the fields relevant
/// to the method are set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

impl Params {
    pub fn beta(beta: f64) -> Self {
        Params {
            beta: Some(beta),
            ..Default::default()
        }
    }

    pub fn alpha_gamma(alpha: f64, gamma: f64) -> Self {
        Params {
            alpha: Some(alpha),
            gamma: Some(gamma),
            ..Default::default()
        }
    }

    pub fn lambda(lambda: f64) -> Self {
        Params {
            lambda: Some(lambda),
            ..Default::default()
        }
    }

    pub fn p(p: f64) -> Self {
        Params {
            p: Some(p),
            ..Default::default()
        }
    }
}

/// An n x n symmetric nonnegative matrix of pairwise node distances with a
/// zero diagonal, tagged by the method and parameters that produced it.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    values: DMatrix<f64>,
    method: Method,
    params: Params,
}

impl DistanceMatrix {
    pub(crate) fn new(values: DMatrix<f64>, method: Method, params: Params) -> Self {
        debug_assert_eq!(values.nrows(), values.ncols());
        DistanceMatrix {
            values,
            method,
            params,
        }
    }

    /// Wrap raw values as a distance matrix, symmetrizing and zeroing the
    /// diagonal. For callers bringing their own matrices (bindings, tests).
    pub fn from_values(values: DMatrix<f64>, method: Method, params: Params) -> Self {
        finish_distance(values, method, params)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.values[(s, t)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Largest triangle-inequality violation d(i,k) - d(i,j) - d(j,k) over
    /// all ordered triples of distinct nodes; nonpositive for a metric.
    pub fn max_triangle_violation(&self) -> f64 {
        let n = self.n();
        let mut worst = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                if j == i {
                    continue;
                }
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    let v = self.values[(i, k)] - self.values[(i, j)] - self.values[(j, k)];
                    if v > worst {
                        worst = v;
                    }
                }
            }
        }
        worst
    }

    /// Max |d(i,j) - d(j,i)| relative to the matrix scale.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n();
        let scale = self.values.amax().max(1e-300);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.values[(i, j)] - self.values[(j, i)]).abs());
            }
        }
        worst / scale
    }
}

/// Symmetrize, zero the diagonal exactly, and wrap as a [`DistanceMatrix`].
pub(crate) fn finish_distance(
    mut values: DMatrix<f64>,
    method: Method,
    params: Params,
) -> DistanceMatrix {
    let n = values.nrows();
    for i in 0..n {
        values[(i, i)] = 0.0;
        for j in (i + 1)..n {
            let s = 0.5 * (values[(i, j)] + values[(j, i)]);
            values[(i, j)] = s;
            values[(j, i)] = s;
        }
    }
    DistanceMatrix::new(values, method, params)
}
