// SPDX-License-Identifier: Apache-2.0

//! Minimax weight search over one group's input simplex.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{group_counts, plan_from_weights, uniform_weights, PlanKind, RejuvenationPlan};
use crate::decoder::DecoderDesign;
use crate::error::{Error, Result};
use crate::timing::AgingEvaluator;
use crate::trace::DutyProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Allowed spread of the long outputs' aged delays at convergence.
    pub tol: f64,
    pub max_iters: usize,
    /// Initial step, as a fraction of weight mass.
    pub eta: f64,
    /// The search is stationary once the step falls below this.
    pub eta_min: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            tol: 1e-3,
            max_iters: 20_000,
            eta: 0.05,
            eta_min: 1e-7,
        }
    }
}

impl SearchOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tolerance {} must be positive", self.tol)));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) || !(self.eta_min > 0.0) {
            return Err(Error::Config("step sizes must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub weights: Vec<f64>,
    /// Aged critical delay of the group at `weights`.
    pub objective: f64,
    pub output_delays: Vec<f64>,
    /// Outputs that carried the longest path at some accepted iterate.
    pub long_outputs: Vec<usize>,
    /// Max minus min of `output_delays` over `long_outputs`.
    pub spread: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn argmax_outputs(delays: &[f64]) -> impl Iterator<Item = usize> + '_ {
    let m = max_of(delays);
    delays
        .iter()
        .enumerate()
        .filter(move |(_, &d)| d >= m - 1e-12 * m.abs())
        .map(|(i, _)| i)
}

fn spread(delays: &[f64], set: &BTreeSet<usize>) -> f64 {
    let vals: Vec<f64> = set.iter().map(|&i| delays[i]).collect();
    max_of(&vals) - vals.iter().copied().fold(f64::INFINITY, f64::min)
}

fn renormalise(w: &mut [f64]) {
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
}

/// Minimize the group's longest aged output delay over weight vectors `r`.
///
/// `delays(r)` returns per-output aged critical delays. Each iteration
/// tries moving `eta` of the mass towards every input value and between
/// every pair of values, keeps the move that shortens the longest path the
/// most, and halves `eta` when none does.
pub fn minimax_descent(
    delays: impl Fn(&[f64]) -> Result<Vec<f64>>,
    start: Vec<f64>,
    opts: &SearchOptions,
) -> Result<SearchOutcome> {
    opts.validate()?;
    let k = start.len();
    let mut r = start;
    renormalise(&mut r);
    let mut cur = delays(&r)?;
    let mut obj = max_of(&cur);
    let mut long: BTreeSet<usize> = argmax_outputs(&cur).collect();
    let mut eta = opts.eta;
    let mut iterations = 0;
    let mut trial = vec![0.0; k];
    while iterations < opts.max_iters && eta >= opts.eta_min {
        iterations += 1;
        let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
        let mut consider = |trial: &[f64]| -> Result<()> {
            let d = delays(trial)?;
            let m = max_of(&d);
            if best.as_ref().is_none_or(|(b, _, _)| m < *b) {
                best = Some((m, trial.to_vec(), d));
            }
            Ok(())
        };
        for v in 0..k {
            for (i, t) in trial.iter_mut().enumerate() {
                *t = (1.0 - eta) * r[i] + if i == v { eta } else { 0.0 };
            }
            consider(&trial)?;
        }
        for u in 0..k {
            let m = eta.min(r[u]);
            if m <= 0.0 {
                continue;
            }
            for v in (0..k).filter(|&v| v != u) {
                trial.copy_from_slice(&r);
                trial[u] -= m;
                trial[v] += m;
                consider(&trial)?;
            }
        }
        match best {
            Some((m, w, d)) if m < obj => {
                r = w;
                renormalise(&mut r);
                cur = d;
                obj = m;
                long.extend(argmax_outputs(&cur));
            }
            _ => eta /= 2.0,
        }
    }
    let s = spread(&cur, &long);
    Ok(SearchOutcome {
        converged: eta < opts.eta_min && s <= opts.tol,
        weights: r,
        objective: obj,
        output_delays: cur,
        long_outputs: long.into_iter().collect(),
        spread: s,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignAwareWeights {
    pub groups: Vec<SearchOutcome>,
    /// Worst group objective, the aged critical delay of running only this workload.
    pub minimax_delay: f64,
    pub converged: bool,
}

impl DesignAwareWeights {
    pub fn weights(&self) -> Vec<Vec<f64>> {
        self.groups.iter().map(|g| g.weights.clone()).collect()
    }
}

/// Weights that, applied alone, minimize each group's longest aged path.
pub fn design_aware_weights(eval: &AgingEvaluator, opts: &SearchOptions) -> Result<DesignAwareWeights> {
    let groups = (0..eval.groups.len())
        .map(|g| {
            let k = eval.groups[g].outputs;
            minimax_descent(|w| eval.output_delays(g, w), vec![1.0 / k as f64; k], opts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DesignAwareWeights {
        minimax_delay: groups.iter().map(|g| g.objective).fold(0.0, f64::max),
        converged: groups.iter().all(|g| g.converged),
        groups,
    })
}

/// Water-filling of the rejuvenation mass onto the deficits
/// `target - (1 - beta) * functional`. Returns the histogram and whether
/// the target is met exactly.
fn water_fill(target: &[f64], functional: &[f64], beta: f64) -> (Vec<f64>, bool) {
    let deficit: Vec<f64> = target.iter().zip(functional).map(|(t, f)| t - (1.0 - beta) * f).collect();
    if deficit.iter().all(|&d| d >= 0.0) {
        let mut r: Vec<f64> = deficit.iter().map(|d| d / beta).collect();
        renormalise(&mut r);
        return (r, true);
    }
    // find mu with sum(max(0, d - mu)) = beta by bisection
    let (mut lo, mut hi) = (deficit.iter().copied().fold(f64::INFINITY, f64::min) - beta, max_of(&deficit));
    for _ in 0..200 {
        let mu = 0.5 * (lo + hi);
        let mass: f64 = deficit.iter().map(|d| (d - mu).max(0.0)).sum();
        if mass > beta {
            lo = mu;
        } else {
            hi = mu;
        }
    }
    let mut r: Vec<f64> = deficit.iter().map(|d| (d - hi).max(0.0)).collect();
    if r.iter().sum::<f64>() <= 0.0 {
        let k = r.len();
        r = vec![1.0 / k as f64; k];
    }
    renormalise(&mut r);
    (r, false)
}

fn combined(functional: &[f64], r: &[f64], beta: f64) -> Vec<f64> {
    functional.iter().zip(r).map(|(f, x)| (1.0 - beta) * f + beta * x).collect()
}

/// Rejuvenation plan that pulls the combined duty towards the design-aware
/// target and then minimizes the longest aged path of the mix directly.
pub fn design_workload_aware_plan(
    design: &DecoderDesign,
    eval: &AgingEvaluator,
    weights: &DesignAwareWeights,
    functional: &DutyProfile,
    beta: f64,
    routine_length: u64,
    opts: &SearchOptions,
) -> Result<RejuvenationPlan> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::OutOfRange(format!(
            "design-and-workload-aware plan needs overhead in (0, 1], got {beta}"
        )));
    }
    let uniform = uniform_weights(design);
    let mut out = Vec::with_capacity(eval.groups.len());
    let mut partial = false;
    let mut converged = true;
    for g in 0..eval.groups.len() {
        let f = &functional.group_histograms[g];
        let target = &weights.groups[g].weights;
        let objective = |r: &[f64]| eval.group_critical(g, &combined(f, r, beta));
        let (filled, exact) = water_fill(target, f, beta);
        partial |= !exact;
        let refined = if exact {
            filled
        } else {
            let mut start = filled;
            let mut start_obj = objective(&start)?;
            for cand in [target, &uniform[g]] {
                let o = objective(cand)?;
                if o < start_obj {
                    start = cand.clone();
                    start_obj = o;
                }
            }
            let res = minimax_descent(|r| eval.output_delays(g, &combined(f, r, beta)), start, opts)?;
            converged &= res.converged;
            res.weights
        };
        // Keep whichever candidate is best once quantized to routine cycles.
        let quantized = |w: &Vec<f64>| -> Result<f64> {
            let counts = &group_counts(std::slice::from_ref(w), routine_length)[0];
            let h: Vec<f64> = counts.iter().map(|&c| c as f64 / routine_length as f64).collect();
            objective(&h)
        };
        let mut pick = refined;
        let mut pick_obj = quantized(&pick)?;
        for cand in [target, &uniform[g]] {
            let o = quantized(cand)?;
            if o < pick_obj {
                pick = cand.clone();
                pick_obj = o;
            }
        }
        out.push(pick);
    }
    let mut plan = plan_from_weights(design, PlanKind::DesignWorkloadAware, out, beta, routine_length)?;
    plan.partial = partial;
    plan.converged = Some(converged);
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn water_fill_exact_when_reachable() {
        let t = [0.25; 4];
        let (r, exact) = water_fill(&t, &t, 0.1);
        assert!(exact);
        for x in r {
            assert!((x - 0.25).abs() < 1e-12);
        }
        let (r, exact) = water_fill(&t, &[0.7, 0.1, 0.1, 0.1], 0.1);
        assert!(!exact);
        assert_eq!(r[0], 0.0);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn descent_finds_simple_minimax() {
        // outputs: 1 + w0 and 1 + 2 w1, optimum at w0 = 2/3
        let res = minimax_descent(
            |w| Ok(vec![1.0 + w[0], 1.0 + 2.0 * w[1]]),
            vec![0.5, 0.5],
            &SearchOptions::default(),
        )
        .unwrap();
        assert!((res.weights[0] - 2.0 / 3.0).abs() < 1e-5, "{:?}", res.weights);
        assert!(res.converged);
        assert!(res.spread <= 1e-3);
    }

    #[test]
    fn weights_stay_normalised() {
        let res = minimax_descent(
            |w| Ok(w.iter().enumerate().map(|(i, x)| (i + 1) as f64 * x).collect()),
            vec![0.1, 0.2, 0.3, 0.4],
            &SearchOptions::default(),
        )
        .unwrap();
        assert!((res.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(res.weights.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn capped_iterations_report_non_convergence() {
        let opts = SearchOptions {
            max_iters: 2,
            ..SearchOptions::default()
        };
        let res = minimax_descent(|w| Ok(vec![1.0 + w[0], 1.0 + 2.0 * w[1]]), vec![0.5, 0.5], &opts).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 2);
    }
}
