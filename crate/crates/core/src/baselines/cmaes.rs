//! (μ/μ_w, λ) CMA-ES with cumulative step-size adaptation, and a grasp
//! planner that searches `(ω, t, δd)` around the initial pose with it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::correspondence::{match_surfaces, ObjectModel};
use crate::error::{Error, Result};
use crate::geometry::{rodrigues, Vec3};
use crate::gripper::GripperSpec;
use crate::planner::{Method, PlanConfig, PlanContext, PlanResult, Termination, TraceEntry};
use crate::pointcloud::OrientedPointCloud;
use crate::quality::geom_error;

/// Objective assigned to poses without valid correspondences.
pub const FAILURE_PENALTY: f64 = 1e6;
/// Weight of the squared distance outside the box bounds.
const BOUND_PENALTY: f64 = 1e2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CmaParams {
    pub population: usize,
    pub sigma0: f64,
    pub max_evals: usize,
    pub seed: u64,
    /// Per-component bound on `ω` (radians).
    pub omega_bound: f64,
    /// Per-component bound on the translation offset (meters).
    pub translation_bound: f64,
}

impl Default for CmaParams {
    fn default() -> Self {
        Self {
            population: 16,
            sigma0: 0.02,
            max_evals: 2000,
            seed: 0,
            omega_bound: 0.5,
            translation_bound: 0.05,
        }
    }
}

impl CmaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::InvalidParameter("population must be >= 4".into()));
        }
        if self.max_evals < self.population {
            return Err(Error::InvalidParameter("max_evals must be >= population".into()));
        }
        if !(self.sigma0 > 0.0) || !(self.omega_bound > 0.0) || !(self.translation_bound > 0.0) {
            return Err(Error::InvalidParameter("sigma0 and bounds must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmaOutcome {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    pub evals: usize,
    pub generations: usize,
    /// Best-so-far value after each generation.
    pub history: Vec<f64>,
}

/// Minimizes `f` inside the box `[lower, upper]` starting from `x0`.
///
/// Candidates are evaluated at their projection onto the box, plus a
/// quadratic penalty on the projection distance; the best-ever projected
/// candidate is returned.
pub fn minimize<F>(mut f: F, x0: &[f64], lower: &[f64], upper: &[f64], params: &CmaParams) -> Result<CmaOutcome>
where
    F: FnMut(&[f64]) -> f64,
{
    params.validate()?;
    let n = x0.len();
    if n == 0 || lower.len() != n || upper.len() != n || lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
        return Err(Error::InvalidParameter("bounds do not match the start point".into()));
    }
    let lambda = params.population;
    let mu = lambda / 2;
    let raw: Vec<f64> = (0..mu).map(|i| (mu as f64 + 0.5).ln() - ((i + 1) as f64).ln()).collect();
    let wsum: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / wsum).collect();
    let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
    let nf = n as f64;
    let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
    let cs = (mueff + 2.0) / (nf + mueff + 5.0);
    let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
    let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
    let damps = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let clamp = |x: &DVector<f64>| -> (Vec<f64>, f64) {
        let mut out = Vec::with_capacity(n);
        let mut d2 = 0.0;
        for i in 0..n {
            let c = x[i].clamp(lower[i], upper[i]);
            d2 += (x[i] - c).powi(2);
            out.push(c);
        }
        (out, d2)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut mean = DVector::from_column_slice(x0);
    let mut sigma = params.sigma0;
    let mut cov = DMatrix::<f64>::identity(n, n);
    let mut ps = DVector::<f64>::zeros(n);
    let mut pc = DVector::<f64>::zeros(n);

    let (x0c, _) = clamp(&mean);
    let mut best = (f(&x0c), x0c);
    let mut evals = 1;
    let mut generations = 0;
    let mut history = Vec::new();

    while evals + lambda <= params.max_evals {
        let eig = SymmetricEigen::new(cov.clone());
        let b = eig.eigenvectors;
        let d = eig.eigenvalues.map(|v| v.max(1e-300).sqrt());
        let mut pop: Vec<(f64, DVector<f64>)> = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let y = &b * d.component_mul(&z);
            let x = &mean + sigma * &y;
            let (xc, d2) = clamp(&x);
            let fx = f(&xc);
            evals += 1;
            if fx < best.0 {
                best = (fx, xc);
            }
            pop.push((fx + BOUND_PENALTY * d2, y));
        }
        pop.sort_by(|a, b| a.0.total_cmp(&b.0));
        generations += 1;
        history.push(best.0);

        let mut yw = DVector::<f64>::zeros(n);
        for (w, (_, y)) in weights.iter().zip(&pop) {
            yw += *w * y;
        }
        mean += sigma * &yw;

        let inv_sqrt = &b * DMatrix::from_diagonal(&d.map(|v| 1.0 / v)) * b.transpose();
        ps = (1.0 - cs) * &ps + (cs * (2.0 - cs) * mueff).sqrt() * (inv_sqrt * &yw);
        let ps_norm = ps.norm();
        let hsig = ps_norm / (1.0 - (1.0 - cs).powi(2 * generations as i32)).sqrt() / chi_n < 1.4 + 2.0 / (nf + 1.0);
        let h = if hsig { 1.0 } else { 0.0 };
        pc = (1.0 - cc) * &pc + h * (cc * (2.0 - cc) * mueff).sqrt() * &yw;

        let mut rank_mu = DMatrix::<f64>::zeros(n, n);
        for (w, (_, y)) in weights.iter().zip(&pop) {
            rank_mu += *w * y * y.transpose();
        }
        cov = (1.0 - c1 - cmu + (1.0 - h) * c1 * cc * (2.0 - cc)) * &cov + c1 * &pc * pc.transpose() + cmu * rank_mu;
        cov = (&cov + cov.transpose()) * 0.5;
        sigma *= ((cs / damps) * (ps_norm / chi_n - 1.0)).exp();
        if !sigma.is_finite() || sigma < 1e-300 {
            break;
        }
    }

    Ok(CmaOutcome {
        x_best: best.1,
        f_best: best.0,
        evals,
        generations,
        history,
    })
}

pub fn cmaes_plan(object: &OrientedPointCloud, spec: &GripperSpec, config: &PlanConfig, cma: &CmaParams) -> Result<PlanResult> {
    let started = Instant::now();
    let model = ObjectModel::new(object.clone());
    let mut result = cmaes_plan_with_model(&model, spec, config, cma)?;
    result.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(result)
}

/// Searches `x = (ω, t, δd)`: rotation `rodrigues(ω) R0` about the initial
/// gripper origin, translation `t0 + t`, aperture `d0 + δd`.
pub fn cmaes_plan_with_model(object: &ObjectModel, spec: &GripperSpec, config: &PlanConfig, cma: &CmaParams) -> Result<PlanResult> {
    let started = Instant::now();
    cma.validate()?;
    let ctx = PlanContext::new(object, spec, config)?;
    let initial = ctx.initial_state()?;
    let initial_quality = Some(ctx.evaluate(&initial));

    let pose = |x: &[f64]| {
        let r = rodrigues(&Vec3::new(x[0], x[1], x[2]));
        ctx.state_at(r * initial.rotation, initial.translation + Vec3::new(x[3], x[4], x[5]), initial.aperture + x[6])
    };
    let objective = |x: &[f64]| {
        let state = pose(x);
        match match_surfaces(&ctx.surface_for(&state), object, &config.matching) {
            Ok(set) => geom_error(&set, &config.weights),
            Err(_) => FAILURE_PENALTY,
        }
    };
    let (wb, tb) = (cma.omega_bound, cma.translation_bound);
    let lower = [-wb, -wb, -wb, -tb, -tb, -tb, spec.d_min_m - ctx.d0];
    let upper = [wb, wb, wb, tb, tb, tb, spec.d_max_m - ctx.d0];
    let out = minimize(objective, &[0.0; 7], &lower, &upper, cma)?;

    let state = pose(&out.x_best);
    let x = &out.x_best;
    let trace = out
        .history
        .iter()
        .enumerate()
        .map(|(g, &e)| TraceEntry {
            iter: g + 1,
            e_before: if g == 0 { f64::INFINITY } else { out.history[g - 1] },
            e_after: e,
            omega: [x[0], x[1], x[2]],
            t_c: [x[3], x[4], x[5]],
            delta_d: x[6],
            n1: 0,
            n2: 0,
            halvings: 0,
            note: None,
        })
        .collect::<Vec<_>>();
    let termination = if out.f_best >= FAILURE_PENALTY {
        Termination::CorrespondenceFailure
    } else {
        Termination::MaxIters
    };
    let mut result = ctx.finish(Method::Cmaes, &state, out.generations, out.evals, trace, initial_quality, termination, 0, started);
    if let Some(q) = result.quality {
        for t in &mut result.trace {
            t.n1 = q.n1;
            t.n2 = q.n2;
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_function() {
        let target = [0.3, -0.2, 0.1, 0.05, -0.4];
        let sphere = |x: &[f64]| x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let params = CmaParams { sigma0: 0.3, max_evals: 5000, seed: 4, ..Default::default() };
        let out = minimize(sphere, &[0.0; 5], &[-1.0; 5], &[1.0; 5], &params).unwrap();
        assert!(out.evals <= 5000);
        for (x, t) in out.x_best.iter().zip(&target) {
            assert!((x - t).abs() < 1e-3);
        }
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn constant_objective_stays_in_bounds() {
        let params = CmaParams { max_evals: 400, ..Default::default() };
        let out = minimize(|_| 1.5, &[0.0; 3], &[-0.01; 3], &[0.01; 3], &params).unwrap();
        assert_eq!(out.f_best, 1.5);
        assert!(out.x_best.iter().all(|v| v.abs() <= 0.01));
    }

    #[test]
    fn optimum_on_the_boundary() {
        let params = CmaParams { sigma0: 0.5, max_evals: 3000, seed: 1, ..Default::default() };
        let out = minimize(|x: &[f64]| (x[0] - 2.0).powi(2) + x[1].powi(2), &[0.0, 0.5], &[-1.0, -1.0], &[1.0, 1.0], &params).unwrap();
        assert!((out.x_best[0] - 1.0).abs() < 1e-6);
        assert!(out.x_best[1].abs() < 1e-3);
    }

    #[test]
    fn reproducible_under_seed() {
        let f = |x: &[f64]| (x[0] - 0.1).powi(2) + 10.0 * (x[1] + 0.2).powi(2) + x[0] * x[1];
        let params = CmaParams { seed: 9, max_evals: 800, ..Default::default() };
        let a = minimize(f, &[0.0; 2], &[-1.0; 2], &[1.0; 2], &params).unwrap();
        let b = minimize(f, &[0.0; 2], &[-1.0; 2], &[1.0; 2], &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_params() {
        let p = CmaParams { population: 3, ..Default::default() };
        assert!(p.validate().is_err());
        let p = CmaParams { max_evals: 10, ..Default::default() };
        assert!(p.validate().is_err());
    }
}
