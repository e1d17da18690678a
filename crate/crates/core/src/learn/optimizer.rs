//! Derivative-free minimisation with the Nelder-Mead simplex method.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::RngSeed;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Stop once every vertex is within this distance (max norm) of the best.
    pub convergence_tolerance: f64,
    pub restarts: usize,
    /// Costs below this mark a minimum worth refining from; `None` means
    /// within 1.5 times the best cost seen so far.
    pub warm_start_threshold: Option<f64>,
    pub seed: RngSeed,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iterations: 1000,
            initial_step: 0.5,
            convergence_tolerance: 1e-6,
            restarts: 50,
            warm_start_threshold: None,
            seed: RngSeed(0),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.restarts == 0 {
            return Err(Error::Argument(
                "max_iterations and restarts must be positive".into(),
            ));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::Argument(format!(
                "initial_step must be positive, got {}",
                self.initial_step
            )));
        }
        if self.convergence_tolerance.is_nan() || self.convergence_tolerance < 0.0 {
            return Err(Error::Argument(format!(
                "convergence_tolerance must be non-negative, got {}",
                self.convergence_tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub params: Vec<f64>,
    pub cost: f64,
    /// Best cost after each iteration, starting with the initial simplex.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        self.evaluations += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteCost {
                value: v,
                params: x.to_vec(),
            })
        }
    }
}

fn affine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a)
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Minimises `cost` from `x0`. Deterministic for a deterministic cost.
///
/// Returns [`Error::NonFiniteCost`] as soon as the cost is NaN or infinite.
pub fn minimize<F>(cost: F, x0: &[f64], config: &OptimizerConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    config.validate()?;
    if x0.is_empty() {
        return Err(Error::Argument("cannot minimise over zero parameters".into()));
    }
    let n = x0.len();
    let mut f = Counted { f: cost, evaluations: 0 };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f.eval(x0)?));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += config.initial_step;
        let v = f.eval(&x)?;
        simplex.push((x, v));
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut trace = vec![simplex[0].1];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        let best = &simplex[0].0;
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(best).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if size <= config.convergence_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let (worst, f_worst) = simplex[n].clone();
        let f_best = simplex[0].1;
        let f_second = simplex[n - 1].1;

        let xr = affine(&centroid, &worst, -REFLECT);
        let fr = f.eval(&xr)?;
        let mut shrink = false;
        if fr < f_best {
            let xe = affine(&centroid, &xr, EXPAND);
            let fe = f.eval(&xe)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < f_second {
            simplex[n] = (xr, fr);
        } else if fr < f_worst {
            let xc = affine(&centroid, &xr, CONTRACT);
            let fc = f.eval(&xc)?;
            if fc <= fr {
                simplex[n] = (xc, fc);
            } else {
                shrink = true;
            }
        } else {
            let xc = affine(&centroid, &worst, CONTRACT);
            let fc = f.eval(&xc)?;
            if fc < f_worst {
                simplex[n] = (xc, fc);
            } else {
                shrink = true;
            }
        }
        if shrink {
            let anchor = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let x = affine(&anchor, &vertex.0, SHRINK);
                let v = f.eval(&x)?;
                *vertex = (x, v);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        trace.push(simplex[0].1);
    }

    let (params, cost) = simplex.swap_remove(0);
    Ok(Minimum {
        params,
        cost,
        trace,
        iterations,
        evaluations: f.evaluations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(max_iterations: usize, tol: f64) -> OptimizerConfig {
        OptimizerConfig {
            max_iterations,
            convergence_tolerance: tol,
            ..OptimizerConfig::default()
        }
    }

    #[test]
    fn quadratic_bowl() {
        let cost = |x: &[f64]| x.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>();
        let m = minimize(cost, &[0.0; 4], &config(5000, 1e-8)).unwrap();
        assert!(m.converged);
        for v in &m.params {
            assert!((v - 1.0).abs() < 1e-3, "{:?}", m.params);
        }
        assert!(m.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(m.trace.len(), m.iterations + 1);
    }

    #[test]
    fn rosenbrock() {
        let cost = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let m = minimize(cost, &[-1.2, 1.0], &config(2000, 1e-10)).unwrap();
        assert!(m.cost < 1e-4, "{}", m.cost);
    }

    #[test]
    fn constant_cost_returns_start() {
        let x0 = [0.3, -1.0, 2.0];
        let m = minimize(|_: &[f64]| 4.0, &x0, &config(500, 1e-6)).unwrap();
        assert_eq!(m.params, x0);
        assert_eq!(m.cost, 4.0);
        assert!(m.converged);
    }

    #[test]
    fn deterministic() {
        let cost = |x: &[f64]| (x[0] * 3.0).sin() + x[1].cos() * x[0];
        let a = minimize(cost, &[0.1, 0.2], &config(300, 1e-9)).unwrap();
        let b = minimize(cost, &[0.1, 0.2], &config(300, 1e-9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn iteration_cap() {
        let cost = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let m = minimize(cost, &[5.0; 3], &config(7, 0.0)).unwrap();
        assert_eq!(m.iterations, 7);
        assert!(!m.converged);
    }

    #[test]
    fn non_finite_cost_is_an_error() {
        let cost = |x: &[f64]| if x[0] > 0.2 { f64::NAN } else { x[0] };
        let err = minimize(cost, &[0.0], &config(100, 1e-9)).unwrap_err();
        match err {
            Error::NonFiniteCost { value, params } => {
                assert!(value.is_nan());
                assert!(params[0] > 0.2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_config() {
        let c = OptimizerConfig {
            initial_step: 0.0,
            ..OptimizerConfig::default()
        };
        assert!(minimize(|x: &[f64]| x[0], &[0.0], &c).is_err());
        assert!(minimize(|_: &[f64]| 0.0, &[], &OptimizerConfig::default()).is_err());
    }
}
