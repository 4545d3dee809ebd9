// SPDX-License-Identifier: Apache-2.0

//! Brute-force cross-checks of the search and mixing code.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Setup, Strategy, WorkloadSource};
use crate::bti::BtiModel;
use crate::decoder::{DecoderConfig, Family};
use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::rejuvenation::{mix, mix_interleaved, SearchOptions};
use crate::timing::GateDelayModel;

/// All points of the `k`-simplex whose coordinates are multiples of `1/n`,
/// as integer numerators.
pub fn simplex_grid(k: usize, n: u32) -> Vec<Vec<u32>> {
    fn rec(k: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for x in 0..=left {
            prefix.push(x);
            rec(k - 1, left - x, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(k, n, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Minimum of `objective` over the simplex grid, with the minimizing point.
/// Ties resolve to the earliest grid point.
pub fn grid_minimum(
    k: usize,
    n: u32,
    mode: Parallelism,
    objective: impl Fn(&[f64]) -> Result<f64> + Sync + Send,
) -> Result<(f64, Vec<f64>, usize)> {
    let grid = simplex_grid(k, n);
    let values = exec::try_map(mode, &grid, |p| {
        let w: Vec<f64> = p.iter().map(|&x| x as f64 / n as f64).collect();
        objective(&w)
    })?;
    let (mut best, mut at) = (f64::INFINITY, 0);
    for (i, &v) in values.iter().enumerate() {
        if v < best {
            best = v;
            at = i;
        }
    }
    let w = grid[at].iter().map(|&x| x as f64 / n as f64).collect();
    Ok((best, w, grid.len()))
}

const GRID_STEPS: u32 = 100;
const ORACLE_ROUTINE: u64 = 400;

fn toy_setup(family: Family, bti: &BtiModel, gdm: &GateDelayModel, years: f64, search: SearchOptions, mode: Parallelism) -> Result<Setup> {
    Ok(Setup::new(&DecoderConfig::with_groups(family, &[2]), bti, gdm, years)?
        .with_search(search)
        .with_routine_length(ORACLE_ROUTINE)
        .with_mode(mode))
}

/// Design-aware search against the grid optimum on a 2-to-4 decoder with
/// one artificially lengthened path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCheck {
    pub family: String,
    pub lengthened_path: String,
    pub lengthen_factor: f64,
    pub weights: Vec<f64>,
    pub search_delay: f64,
    pub grid_delay: f64,
    pub grid_weights: Vec<f64>,
    pub grid_points: usize,
    /// `(search - grid) / grid`; negative when the search beats the grid.
    pub relative_gap: f64,
    /// The input value that, applied alone, shortens the lengthened path most.
    pub relieving_value: usize,
    pub relieving_weight: f64,
    pub spread: f64,
    pub converged: bool,
}

pub fn design_aware_grid_check(
    family: Family,
    bti: &BtiModel,
    gdm: &GateDelayModel,
    years: f64,
    search: SearchOptions,
    lengthened: &str,
    factor: f64,
    mode: Parallelism,
) -> Result<GridCheck> {
    let gdm = gdm.clone().with_path_scale(lengthened, factor)?;
    let setup = toy_setup(family, bti, &gdm, years, search, mode)?;
    let group = &setup.eval.groups[0];
    let path = group
        .labels()
        .iter()
        .position(|l| l == lengthened)
        .ok_or_else(|| Error::Config(format!("no path `{lengthened}` in the 2-to-4 decoder")))?;
    let da = crate::rejuvenation::design_aware_weights(&setup.eval, &setup.search)?;
    let outcome = &da.groups[0];
    let k = group.outputs;
    let (grid_delay, grid_weights, grid_points) =
        grid_minimum(k, GRID_STEPS, mode, |w| setup.eval.group_critical(0, w))?;
    let mut relieving = (0, f64::INFINITY);
    for v in 0..k {
        let mut e = vec![0.0; k];
        e[v] = 1.0;
        let d = group.path_delays(&e, &setup.bti, setup.years(), &setup.gdm)?[path];
        if d < relieving.1 {
            relieving = (v, d);
        }
    }
    Ok(GridCheck {
        family: family.to_string(),
        lengthened_path: lengthened.to_string(),
        lengthen_factor: factor,
        weights: outcome.weights.clone(),
        search_delay: outcome.objective,
        grid_delay,
        grid_weights,
        grid_points,
        relative_gap: (outcome.objective - grid_delay) / grid_delay,
        relieving_value: relieving.0,
        relieving_weight: outcome.weights[relieving.0],
        spread: outcome.spread,
        converged: outcome.converged,
    })
}

/// Workload-aware plan against the grid optimum of the combined duty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadAwareCheck {
    pub family: String,
    pub functional: Vec<f64>,
    pub beta: f64,
    pub dw_delay: f64,
    pub universal_delay: f64,
    pub design_aware_delay: f64,
    pub grid_delay: f64,
    pub relative_gap: f64,
}

pub fn workload_aware_grid_check(
    family: Family,
    bti: &BtiModel,
    gdm: &GateDelayModel,
    years: f64,
    search: SearchOptions,
    functional: &[f64],
    beta: f64,
    mode: Parallelism,
) -> Result<WorkloadAwareCheck> {
    let setup = toy_setup(family, bti, gdm, years, search, mode)?;
    let f = crate::trace::DutyProfile::from_group_histograms(&setup.design, vec![functional.to_vec()], 1)?;
    let da = setup.design_aware()?;
    let delay = |s: Strategy| -> Result<f64> {
        let plan = setup.plan(s, beta, &f, Some(&da))?;
        setup.eval.aged_critical(&setup.mixed(&f, plan.as_ref())?.group_histograms)
    };
    let (grid_delay, _, _) = grid_minimum(functional.len(), GRID_STEPS, mode, |r| {
        let h: Vec<f64> = functional.iter().zip(r).map(|(f, r)| (1.0 - beta) * f + beta * r).collect();
        setup.eval.group_critical(0, &h)
    })?;
    let dw_delay = delay(Strategy::DesignWorkloadAware)?;
    Ok(WorkloadAwareCheck {
        family: family.to_string(),
        functional: functional.to_vec(),
        beta,
        dw_delay,
        universal_delay: delay(Strategy::Universal)?,
        design_aware_delay: delay(Strategy::DesignAware)?,
        grid_delay,
        relative_gap: (dw_delay - grid_delay) / grid_delay,
    })
}

/// Analytic mixing against the explicitly interleaved trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterleavingCheck {
    pub family: String,
    pub workload: String,
    pub strategy: Strategy,
    pub beta: f64,
    pub routine_length: u64,
    pub max_abs_diff: f64,
}

pub fn interleaving_check(setup: &Setup, source: &WorkloadSource, strategy: Strategy, beta: f64, seed: u64) -> Result<InterleavingCheck> {
    let w = setup.workload(source, seed)?;
    let weights = setup.design_aware_for(&[strategy])?;
    let plan = setup
        .plan(strategy, beta, &w.duty, weights.as_ref())?
        .ok_or_else(|| Error::Config("interleaving check needs a strategy and overhead that run a routine".into()))?;
    let a = mix(&w.duty, &plan, &setup.design)?;
    let b = mix_interleaved(&w.trace, &plan, &setup.design, setup.mode)?;
    let max_abs_diff = a
        .net_duty
        .iter()
        .zip(&b.net_duty)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(InterleavingCheck {
        family: setup.design.family.to_string(),
        workload: w.name,
        strategy,
        beta,
        routine_length: plan.routine_length,
        max_abs_diff,
    })
}

/// Address occupancy of a trace equals the sum over any split of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditivityCheck {
    pub workload: String,
    pub splits: usize,
    /// Largest absolute occupancy mismatch over all splits and addresses.
    pub max_mismatch: u64,
}

pub fn additivity_check(setup: &Setup, source: &WorkloadSource, splits: usize, seed: u64) -> Result<AdditivityCheck> {
    let trace = source.resolve(&setup.design, seed)?;
    let n = setup.design.address_count();
    let whole = trace.occupancy(n, setup.mode)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut max_mismatch = 0;
    for _ in 0..splits {
        let at = rng.gen_range(0..=trace.total_cycles());
        let (head, tail) = trace.split_at(at);
        let (h, t) = (head.occupancy(n, setup.mode)?, tail.occupancy(n, setup.mode)?);
        for i in 0..whole.len() {
            max_mismatch = max_mismatch.max(whole[i].abs_diff(h[i] + t[i]));
        }
    }
    Ok(AdditivityCheck {
        workload: source.name().to_string(),
        splits,
        max_mismatch,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub design_aware: Vec<GridCheck>,
    pub workload_aware: Vec<WorkloadAwareCheck>,
    pub interleaving: Vec<InterleavingCheck>,
    pub additivity: AdditivityCheck,
}

/// Path lengthened in the design-aware check and by how much.
pub const ORACLE_LENGTHENED_PATH: &str = "g0_out1_a1_act";
pub const ORACLE_LENGTHEN_FACTOR: f64 = 1.05;

/// Every oracle on both families. `setups` are full-size designs used for
/// the interleaving and additivity checks.
pub fn oracle(setups: &[Setup], seed: u64) -> Result<OracleReport> {
    let first = setups.first().ok_or_else(|| Error::Config("oracle needs at least one design".into()))?;
    let mut design_aware = Vec::new();
    let mut workload_aware = Vec::new();
    for s in setups {
        let fam = s.design.family;
        design_aware.push(design_aware_grid_check(
            fam,
            &s.bti,
            &s.gdm,
            s.years(),
            s.search,
            ORACLE_LENGTHENED_PATH,
            ORACLE_LENGTHEN_FACTOR,
            s.mode,
        )?);
        for (f, beta) in [(vec![0.85, 0.05, 0.05, 0.05], 0.01), (vec![0.1, 0.2, 0.3, 0.4], 0.2)] {
            workload_aware.push(workload_aware_grid_check(fam, &s.bti, &s.gdm, s.years(), s.search, &f, beta, s.mode)?);
        }
    }
    let mut interleaving = Vec::new();
    for s in setups {
        for name in ["fir", "aescbc"] {
            for strategy in [Strategy::Universal, Strategy::DesignAware] {
                interleaving.push(interleaving_check(s, &WorkloadSource::Preset(name.into()), strategy, 0.01, seed)?);
            }
        }
    }
    let additivity = additivity_check(first, &WorkloadSource::Preset("sha".into()), 32, seed)?;
    Ok(OracleReport {
        design_aware,
        workload_aware,
        interleaving,
        additivity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        assert_eq!(simplex_grid(4, 100).len(), 176_851);
        assert_eq!(simplex_grid(2, 3), vec![vec![0, 3], vec![1, 2], vec![2, 1], vec![3, 0]]);
        assert!(simplex_grid(3, 10).iter().all(|p| p.iter().sum::<u32>() == 10));
    }

    #[test]
    fn grid_minimum_finds_vertex() {
        let (v, w, n) = grid_minimum(3, 10, Parallelism::Sequential, |w| Ok(w[1] + 2.0 * w[2])).unwrap();
        assert_eq!(n, 66);
        assert_eq!(v, 0.0);
        assert_eq!(w, vec![1.0, 0.0, 0.0]);
    }
}
