//! Parameter sweeps of the distance ratio between two node pairs, the
//! fingerprint each family leaves on the extended-triangle fixture.

use crate::dist::{Method, Params};
use crate::error::{Error, Result};
use crate::graph::CostedGraph;

/// One sweep point: the parameter value, the two tracked distances, and
/// their ratio.
#[derive(Debug, Clone, Copy)]
pub struct RatioPoint {
    pub param: f64,
    pub d01: f64,
    pub d12: f64,
    pub ratio: f64,
}

/// The default parameter grid per parametrized family: log-spaced over the
/// family's interesting range, linear for the convex-combination weight and
/// the flow exponent. Endpoints are exact.
pub fn default_grid(method: Method, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::ParamOutOfRange {
            name: "points",
            value: points as f64,
            expected: "at least 2 grid points",
        });
    }
    let (lo, hi, log) = match method {
        Method::Rsp => (1e-4, 20.0, true),
        Method::Fe => (1e-4, 100.0, true),
        Method::LogFor => (1e-2, 500.0, true),
        Method::Spct => (0.0, 1.0, false),
        Method::Pres => (1.0, 2.0, false),
        _ => {
            return Err(Error::ParamOutOfRange {
                name: "method",
                value: f64::NAN,
                expected: "a parametrized family (rsp, fe, logfor, spct, pres)",
            })
        }
    };
    Ok(grid(lo, hi, points, log))
}

/// Evenly spaced grid with exact endpoints, optionally in log space.
pub fn grid(lo: f64, hi: f64, points: usize, log: bool) -> Vec<f64> {
    let mut out = Vec::with_capacity(points);
    for i in 0..points {
        if i == 0 {
            out.push(lo);
        } else if i == points - 1 {
            out.push(hi);
        } else {
            let t = i as f64 / (points - 1) as f64;
            let v = if log {
                (lo.ln() + t * (hi.ln() - lo.ln())).exp()
            } else {
                lo + t * (hi - lo)
            };
            out.push(v);
        }
    }
    out
}

fn params_for(method: Method, value: f64) -> Params {
    match method {
        Method::Rsp | Method::Fe => Params::beta(value),
        Method::LogFor => Params::alpha_gamma(value, 1.0),
        Method::Spct => Params::lambda(value),
        Method::Pres => Params::p(value),
        _ => Params::default(),
    }
}

/// Sweep the family over the grid and report d(0,1), d(1,2), and their ratio
/// at every point.
pub fn ratio_curve(g: &CostedGraph, method: Method, grid: &[f64]) -> Result<Vec<RatioPoint>> {
    if g.node_count() < 3 {
        return Err(Error::ParamOutOfRange {
            name: "n",
            value: g.node_count() as f64,
            expected: "a fixture with at least 3 nodes",
        });
    }
    let mut out = Vec::with_capacity(grid.len());
    for &value in grid {
        let params = params_for(method, value);
        let d = crate::compute_distance(g, method, &params, crate::alt::PRES_DEFAULT_TOL, 200)?;
        let d01 = d.get(0, 1);
        let d12 = d.get(1, 2);
        out.push(RatioPoint {
            param: value,
            d01,
            d12,
            ratio: d01 / d12,
        });
    }
    Ok(out)
}
