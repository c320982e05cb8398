use rayon::prelude::*;
use serde::Serialize;

use crate::divergence::{fisher_information, sandwiched_renyi};
use crate::error::{LelError, Result};
use crate::generator::{Generator, GnsGenerator};
use crate::matcore::{frobenius, identity, unvec, vec_of, CMatrix, DensityMatrix};

/// Minimum eigenvalue accepted after a step.
const POSITIVITY_SLACK: f64 = 1e-8;
/// Richardson error budget per unit time.
const ERROR_PER_TIME: f64 = 1e-8;
const MAX_HALVINGS: u32 = 10;

#[derive(Clone, Copy, Debug)]
pub struct IntegrateOptions {
    pub t_end: f64,
    pub dt: f64,
    /// Keep every k-th state (the final state is always kept).
    pub record_every: usize,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Step actually used (≤ requested dt).
    pub dt: f64,
    /// Richardson estimate of the global error per unit time.
    pub error_per_time: f64,
    /// Number of steps that needed step halving.
    pub halved_steps: usize,
}

/// I + hL + (hL)²/2 + (hL)³/6 + (hL)⁴/24, the classic RK4 map of a linear ODE.
fn rk4_propagator(l: &CMatrix, h: f64) -> CMatrix {
    let dim = l.nrows();
    let hl = l.scale(h);
    let mut term = identity(dim);
    let mut acc = identity(dim);
    for k in 1..=4 {
        term = &term * &hl / num_complex::Complex64::new(k as f64, 0.0);
        acc += &term;
    }
    acc
}

fn op_norm_bound(m: &CMatrix) -> f64 {
    frobenius(m)
}

fn richardson_per_time(l: &CMatrix, h: f64) -> f64 {
    let full = rk4_propagator(l, h);
    let half = rk4_propagator(l, h / 2.0);
    op_norm_bound(&(full - &half * &half)) / 15.0 / h
}

/// Largest step (≤ `dt_max`) whose Richardson estimate meets the error budget.
pub fn suggest_dt(g: &dyn Generator, dt_max: f64) -> f64 {
    let l = g.schrodinger().matrix();
    let norm = crate::matcore::singular_values(l).into_iter().fold(0.0, f64::max);
    let mut h = if norm > 0.0 { dt_max.min(0.05 / norm) } else { dt_max };
    while h > 1e-9 && richardson_per_time(l, h) > 0.5 * ERROR_PER_TIME {
        h /= 2.0;
    }
    h
}

fn step_state(p: &CMatrix, rho: &CMatrix, n: usize) -> CMatrix {
    let v = p * vec_of(rho);
    let m = unvec(&v, n);
    let h = crate::matcore::hermitian_part(&m);
    let tr = h.trace().re;
    h.unscale(tr)
}

fn min_eig(m: &CMatrix) -> f64 {
    crate::matcore::eig_hermitian(m).map(|s| s.min()).unwrap_or(f64::NEG_INFINITY)
}

pub fn integrate(g: &dyn Generator, rho0: &DensityMatrix, t_end: f64, dt: f64) -> Result<Trajectory> {
    integrate_with(
        g,
        rho0,
        IntegrateOptions {
            t_end,
            dt,
            record_every: 1,
        },
    )
}

pub fn integrate_with(g: &dyn Generator, rho0: &DensityMatrix, opts: IntegrateOptions) -> Result<Trajectory> {
    let n = g.dim();
    if rho0.dim() != n {
        return Err(LelError::Structural("initial state dimension does not match generator".into()));
    }
    if !(opts.dt > 0.0 && opts.dt.is_finite()) || !(opts.t_end >= 0.0 && opts.t_end.is_finite()) {
        return Err(LelError::Domain(format!("need dt > 0 and t_end ≥ 0, got {} and {}", opts.dt, opts.t_end)));
    }
    let every = opts.record_every.max(1);
    let steps = ((opts.t_end / opts.dt) - 1e-9).ceil().max(0.0) as usize;
    let h = if steps == 0 { opts.dt } else { opts.t_end / steps as f64 };
    let l = g.schrodinger().matrix();
    let err = richardson_per_time(l, h);
    if err > ERROR_PER_TIME {
        return Err(LelError::Numerical(format!(
            "step {h:e} gives an estimated error of {err:e} per unit time (limit {ERROR_PER_TIME:e}); use dt ≤ {:e}",
            suggest_dt(g, h)
        )));
    }
    let mut props = vec![rk4_propagator(l, h)];
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    let mut rho = rho0.matrix().clone();
    let mut halved = 0;
    for k in 1..=steps {
        let mut next = step_state(&props[0], &rho, n);
        let mut level = 0u32;
        while min_eig(&next) < -POSITIVITY_SLACK {
            level += 1;
            if level > MAX_HALVINGS {
                return Err(LelError::Numerical(format!(
                    "positivity lost at t = {:.6e} even with step dt/{}",
                    (k - 1) as f64 * h,
                    1u32 << MAX_HALVINGS
                )));
            }
            if props.len() <= level as usize {
                props.push(rk4_propagator(l, h / f64::from(1u32 << level)));
            }
            next = rho.clone();
            for _ in 0..(1u32 << level) {
                next = step_state(&props[level as usize], &next, n);
            }
        }
        if level > 0 {
            halved += 1;
        }
        rho = next;
        if k % every == 0 || k == steps {
            times.push(k as f64 * h);
            states.push(DensityMatrix::normalized(&rho).map_err(|e| {
                LelError::Numerical(format!("state at t = {:.6e} is invalid: {e}", k as f64 * h))
            })?);
        }
    }
    Ok(Trajectory {
        times,
        states,
        dt: h,
        error_per_time: err,
        halved_steps: halved,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub alpha: f64,
    pub d: f64,
    pub i: f64,
}

#[derive(Clone, Debug)]
pub struct DivergenceTrace {
    /// Rows ordered by time, then by the order of `alphas`.
    pub rows: Vec<TraceRow>,
    /// Leading states dropped because they were not strictly positive.
    pub pruned: usize,
}

impl DivergenceTrace {
    pub fn series(&self, alpha: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut t = Vec::new();
        let mut d = Vec::new();
        let mut i = Vec::new();
        for r in self.rows.iter().filter(|r| r.alpha == alpha) {
            t.push(r.t);
            d.push(r.d);
            i.push(r.i);
        }
        (t, d, i)
    }
}

pub fn divergence_trace(traj: &Trajectory, g: &GnsGenerator, alphas: &[f64]) -> Result<DivergenceTrace> {
    let sigma = g.stationary();
    let pruned = traj.states.iter().take_while(|s| !s.is_strictly_positive()).count();
    let rows: Vec<Vec<TraceRow>> = traj.states[pruned..]
        .par_iter()
        .zip(traj.times[pruned..].par_iter())
        .map(|(rho, &t)| {
            alphas
                .iter()
                .map(|&a| {
                    Ok(TraceRow {
                        t,
                        alpha: a,
                        d: sandwiched_renyi(rho, sigma, a)?.value,
                        i: fisher_information(rho, sigma, a, g)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DivergenceTrace {
        rows: rows.into_iter().flatten().collect(),
        pruned,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum DecayFit {
    Rate { rate: f64, samples: usize },
    /// The trace never rises above the numerical floor.
    Stationary,
}

/// Least-squares slope of −log D over the final `tail_fraction` of samples.
pub fn fit_decay_rate(times: &[f64], values: &[f64], tail_fraction: f64) -> Result<DecayFit> {
    const FLOOR: f64 = 1e-14;
    if times.len() != values.len() {
        return Err(LelError::Structural("times and values differ in length".into()));
    }
    if values.iter().all(|v| v.abs() <= FLOOR) {
        return Ok(DecayFit::Stationary);
    }
    let start = ((1.0 - tail_fraction.clamp(0.0, 1.0)) * times.len() as f64).floor() as usize;
    let pts: Vec<(f64, f64)> = times[start..]
        .iter()
        .zip(&values[start..])
        .take_while(|(_, &v)| v > FLOOR)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(LelError::Numerical(format!(
            "only {} tail samples above the floor {FLOOR:e}",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    Ok(DecayFit::Rate {
        rate: -sxy / sxx,
        samples: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{depolarizing, qubit_xz, random_gns, spectral_gap};
    use crate::matcore::trace_norm;
    use crate::random::{random_density, random_density_with_floor, seeded};

    #[test]
    fn stationary_start_stays_put() {
        let g = qubit_xz();
        let s = g.stationary().clone();
        let tr = integrate(&g, &s, 2.0, 0.005).unwrap();
        for r in &tr.states {
            assert!(frobenius(&(r.matrix() - s.matrix())) <= 1e-9);
        }
    }

    #[test]
    fn depolarizing_closed_form() {
        let mut rng = seeded(1);
        let sigma = random_density_with_floor(3, 0.2, &mut rng);
        let gamma = 0.8;
        let g = depolarizing(&sigma, gamma).unwrap();
        let rho0 = random_density(3, &mut rng);
        let dt = suggest_dt(&g, 0.01);
        let tr = integrate(&g, &rho0, 3.0 / gamma, dt).unwrap();
        let mut worst: f64 = 0.0;
        for (t, r) in tr.times.iter().zip(&tr.states) {
            let exact = sigma.matrix() + (rho0.matrix() - sigma.matrix()).scale((-gamma * t).exp());
            worst = worst.max(frobenius(&(r.matrix() - exact)));
        }
        assert!(worst <= 1e-8, "{worst:e}");
    }

    #[test]
    fn converges_to_sigma() {
        let mut rng = seeded(2);
        let g = random_gns(3, &mut rng);
        let lam = spectral_gap(&g).unwrap().gap;
        let rho0 = random_density(3, &mut rng);
        let dt = suggest_dt(&g, 0.05);
        let tr = integrate_with(&g, &rho0, IntegrateOptions { t_end: 20.0 / lam, dt, record_every: 100 }).unwrap();
        let last = tr.states.last().unwrap();
        assert!(trace_norm(&(last.matrix() - g.stationary().matrix())) <= 1e-6);
    }

    #[test]
    fn oversized_step_is_refused() {
        let g = qubit_xz();
        let s = g.stationary().clone();
        assert!(matches!(integrate(&g, &s, 1.0, 0.5), Err(LelError::Numerical(_))));
    }

    #[test]
    fn stationary_fit_is_declined() {
        let t = vec![0.0, 1.0, 2.0, 3.0];
        assert_eq!(fit_decay_rate(&t, &[0.0; 4], 0.3).unwrap(), DecayFit::Stationary);
        let v: Vec<f64> = t.iter().map(|x| 2.0 * (-1.5 * x).exp()).collect();
        match fit_decay_rate(&t, &v, 1.0).unwrap() {
            DecayFit::Rate { rate, .. } => assert!((rate - 1.5).abs() < 1e-12),
            _ => panic!(),
        }
    }
}
