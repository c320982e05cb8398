use argmin::core::{CostFunction, Error as ArgminError, Executor};
use argmin::solver::neldermead::NelderMead;
use rayon::prelude::*;

use crate::error::{LelError, Result};

/// Value returned for points where the objective is undefined.
const INFEASIBLE: f64 = 1e300;

struct Objective<'a, F: Fn(&[f64]) -> Option<f64>> {
    f: &'a F,
}

impl<F: Fn(&[f64]) -> Option<f64>> CostFunction for Objective<'_, F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, ArgminError> {
        Ok(match (self.f)(p) {
            Some(v) if v.is_finite() => v,
            _ => INFEASIBLE,
        })
    }
}

#[derive(Clone, Debug)]
pub struct MultistartResult {
    pub best: f64,
    pub best_param: Vec<f64>,
    /// Best value per start, in start order.
    pub per_start: Vec<f64>,
}

/// Nelder-Mead from each start (axis simplex with edge `step`), fixed iteration
/// count, no early stopping. Starts run concurrently; the reduction is in start order.
pub fn minimize_multistart<F>(f: &F, starts: &[Vec<f64>], step: f64, iterations: u64) -> Result<MultistartResult>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    if starts.is_empty() {
        return Err(LelError::Domain("no starting points".into()));
    }
    let results: Vec<(f64, Vec<f64>)> = starts
        .par_iter()
        .map(|x0| {
            let mut simplex = vec![x0.clone()];
            for i in 0..x0.len() {
                let mut v = x0.clone();
                v[i] += step;
                simplex.push(v);
            }
            let solver = NelderMead::new(simplex)
                .with_sd_tolerance(0.0)
                .map_err(|e| LelError::Numerical(e.to_string()))?;
            let res = Executor::new(Objective { f }, solver)
                .configure(|s| s.max_iters(iterations))
                .run()
                .map_err(|e| LelError::Numerical(e.to_string()))?;
            let st = res.state();
            let p = st.best_param.clone().unwrap_or_else(|| x0.clone());
            Ok((st.best_cost, p))
        })
        .collect::<Result<Vec<_>>>()?;
    let (bi, _) = results
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, r)| if r.0 < acc.1 { (i, r.0) } else { acc });
    Ok(MultistartResult {
        best: results[bi].0,
        best_param: results[bi].1.clone(),
        per_start: results.iter().map(|r| r.0).collect(),
    })
}
