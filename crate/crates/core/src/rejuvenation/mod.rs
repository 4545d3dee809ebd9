// SPDX-License-Identifier: Apache-2.0

//! Rejuvenation workloads: address schedules run from a periodic interrupt
//! that steer pre-decoder inputs so that path aging is balanced.
//!
//! Weights are factored per pre-decoder group. A plan holds one weight
//! vector per group, the overhead `beta` (fraction of all cycles spent in
//! the routine), the routine length `L` and the interrupt period `N`
//! (functional cycles between two routine calls).

mod mix;
mod search;

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::decoder::DecoderDesign;
use crate::error::{Error, Result};
use crate::trace::synth::apportion;
use crate::trace::{DutyProfile, MemoryTrace, Op, TraceEntry};

pub use mix::{interleave, mix, mix_interleaved};
pub use search::{
    design_aware_weights, design_workload_aware_plan, minimax_descent, DesignAwareWeights, SearchOptions,
    SearchOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PlanKind {
    #[serde(rename = "UNIVERSAL")]
    Universal,
    #[serde(rename = "DESIGN_AWARE")]
    DesignAware,
    #[serde(rename = "DESIGN_WORKLOAD_AWARE")]
    DesignWorkloadAware,
}

impl PlanKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlanKind::Universal => "UNIVERSAL",
            PlanKind::DesignAware => "DESIGN_AWARE",
            PlanKind::DesignWorkloadAware => "DESIGN_WORKLOAD_AWARE",
        }
    }
}

impl fmt::Display for PlanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejuvenationPlan {
    pub kind: PlanKind,
    pub beta: f64,
    pub routine_length: u64,
    /// `None` when `beta == 0` and the routine never runs.
    pub interrupt_period: Option<u64>,
    pub group_weights: Vec<Vec<f64>>,
    /// Address visited in each routine cycle; empty when `beta == 0`.
    pub schedule: Vec<u64>,
    /// The design-and-workload target could not be reached at this overhead.
    pub partial: bool,
    /// Outcome of the weight search, for plans that ran one.
    pub converged: Option<bool>,
}

/// Interrupt period for a routine of `length` cycles at overhead `beta`.
pub fn interrupt_period(length: u64, beta: f64) -> Result<Option<u64>> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::OutOfRange(format!("overhead {beta} outside [0, 1]")));
    }
    if beta == 0.0 {
        return Ok(None);
    }
    if length == 0 {
        return Err(Error::Config("routine length must be positive".into()));
    }
    let n = (length as f64 * (1.0 - beta) / beta).round();
    if n > u64::MAX as f64 / 2.0 {
        return Err(Error::OutOfRange(format!(
            "overhead {beta} too small to quantize with a {length}-cycle routine"
        )));
    }
    let n = n as u64;
    let achieved = length as f64 / (n + length) as f64;
    if (achieved - beta).abs() > 1.0 / (n + length) as f64 {
        return Err(Error::OutOfRange(format!(
            "overhead {beta} cannot be quantized with a {length}-cycle routine"
        )));
    }
    Ok(Some(n))
}

/// Rejuvenation-to-functional cycle ratio to overhead fraction.
pub fn ratio_to_beta(ratio: f64) -> Result<f64> {
    if !(ratio >= 0.0) || !ratio.is_finite() {
        return Err(Error::OutOfRange(format!("overhead ratio {ratio} must be nonnegative")));
    }
    Ok(ratio / (1.0 + ratio))
}

/// A sequence of `length` values in which value `v` occurs exactly
/// `counts[v]` times, spread out by smooth weighted round robin.
fn spread_sequence(counts: &[u64], length: u64) -> Vec<usize> {
    let mut credit = vec![0i64; counts.len()];
    let mut out = Vec::with_capacity(length as usize);
    for _ in 0..length {
        for (c, &n) in credit.iter_mut().zip(counts) {
            *c += n as i64;
        }
        let pick = credit
            .iter()
            .enumerate()
            .fold(0, |best, (i, &c)| if c > credit[best] { i } else { best });
        credit[pick] -= length as i64;
        out.push(pick);
    }
    out
}

fn check_weights(design: &DecoderDesign, weights: &[Vec<f64>]) -> Result<()> {
    if weights.len() != design.pre_decoders.len() {
        return Err(Error::OutOfRange(format!(
            "{} weight vectors for {} groups",
            weights.len(),
            design.pre_decoders.len()
        )));
    }
    for (g, (w, pd)) in weights.iter().zip(&design.pre_decoders).enumerate() {
        if w.len() != pd.output_count() {
            return Err(Error::OutOfRange(format!("group {g} weight vector has {} entries", w.len())));
        }
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::OutOfRange(format!("group {g} has a negative weight")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::OutOfRange(format!("group {g} weights sum to {sum}")));
        }
    }
    Ok(())
}

/// Per-group cycle counts of a routine of `length` cycles.
pub fn group_counts(weights: &[Vec<f64>], length: u64) -> Vec<Vec<u64>> {
    weights.iter().map(|w| apportion(length, w)).collect()
}

fn weighted_schedule(design: &DecoderDesign, weights: &[Vec<f64>], length: u64) -> Vec<u64> {
    let seqs: Vec<Vec<usize>> = group_counts(weights, length)
        .iter()
        .map(|c| spread_sequence(c, length))
        .collect();
    (0..length as usize)
        .map(|t| {
            design
                .pre_decoders
                .iter()
                .zip(&seqs)
                .map(|(pd, s)| (s[t] as u64) << pd.bits.start)
                .sum()
        })
        .collect()
}

/// Build a plan from per-group weights.
pub fn plan_from_weights(
    design: &DecoderDesign,
    kind: PlanKind,
    weights: Vec<Vec<f64>>,
    beta: f64,
    routine_length: u64,
) -> Result<RejuvenationPlan> {
    check_weights(design, &weights)?;
    let interrupt_period = interrupt_period(routine_length, beta)?;
    let schedule = if interrupt_period.is_some() {
        weighted_schedule(design, &weights, routine_length)
    } else {
        Vec::new()
    };
    Ok(RejuvenationPlan {
        kind,
        beta,
        routine_length,
        interrupt_period,
        group_weights: weights,
        schedule,
        partial: false,
        converged: None,
    })
}

pub fn uniform_weights(design: &DecoderDesign) -> Vec<Vec<f64>> {
    design
        .pre_decoders
        .iter()
        .map(|pd| vec![1.0 / pd.output_count() as f64; pd.output_count()])
        .collect()
}

/// Visit every address in turn for the same number of cycles.
/// The routine covers the address space once.
pub fn universal_plan(design: &DecoderDesign, beta: f64) -> Result<RejuvenationPlan> {
    universal_plan_with_length(design, beta, design.address_count())
}

pub fn universal_plan_with_length(design: &DecoderDesign, beta: f64, routine_length: u64) -> Result<RejuvenationPlan> {
    let interrupt_period = interrupt_period(routine_length, beta)?;
    let schedule = if interrupt_period.is_some() {
        (0..routine_length).map(|i| i % design.address_count()).collect()
    } else {
        Vec::new()
    };
    Ok(RejuvenationPlan {
        kind: PlanKind::Universal,
        beta,
        routine_length,
        interrupt_period,
        group_weights: uniform_weights(design),
        schedule,
        partial: false,
        converged: None,
    })
}

impl RejuvenationPlan {
    /// Fraction of cycles actually spent in the routine after quantization.
    pub fn achieved_beta(&self) -> f64 {
        match self.interrupt_period {
            None => 0.0,
            Some(n) => self.routine_length as f64 / (n + self.routine_length) as f64,
        }
    }

    /// Weights over every address; the outer product of the group weights.
    pub fn full_weights(&self, design: &DecoderDesign) -> Vec<f64> {
        (0..design.address_count())
            .map(|a| {
                design
                    .pre_decoders
                    .iter()
                    .zip(&self.group_weights)
                    .map(|(pd, w)| w[pd.group_value(a)])
                    .product()
            })
            .collect()
    }

    /// Group input distribution realized by the schedule. Falls back to the
    /// weights when the routine never runs.
    pub fn schedule_histograms(&self, design: &DecoderDesign) -> Vec<Vec<f64>> {
        if self.schedule.is_empty() {
            return self.group_weights.clone();
        }
        let n = self.schedule.len() as f64;
        design
            .pre_decoders
            .iter()
            .map(|pd| {
                let mut h = vec![0.0; pd.output_count()];
                for &a in &self.schedule {
                    h[pd.group_value(a)] += 1.0;
                }
                h.iter_mut().for_each(|x| *x /= n);
                h
            })
            .collect()
    }

    /// Duty profile of running only the routine.
    pub fn profile(&self, design: &DecoderDesign) -> Result<DutyProfile> {
        DutyProfile::from_group_histograms(design, self.schedule_histograms(design), self.routine_length)
    }

    /// The routine as a trace of reads, one per cycle.
    pub fn routine_trace(&self, design: &DecoderDesign) -> Result<MemoryTrace> {
        let entries = self
            .schedule
            .iter()
            .enumerate()
            .map(|(i, &address)| TraceEntry {
                cycle: i as u64,
                address,
                op: Op::Read,
            })
            .collect();
        MemoryTrace::new(entries, None, design.address_width)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Text routine descriptor: header, per-group counts and the visit
/// schedule as `(address, repeat)` runs.
pub fn emit_routine(plan: &RejuvenationPlan, design: &DecoderDesign) -> String {
    let mut out = String::new();
    let width = (design.address_width as usize).div_ceil(4);
    let _ = writeln!(out, "# rejuvenation routine");
    let _ = writeln!(out, "kind={}", plan.kind);
    let _ = writeln!(out, "routine_length={}", plan.routine_length);
    match plan.interrupt_period {
        Some(n) => {
            let _ = writeln!(out, "interrupt_period={n}");
        }
        None => {
            let _ = writeln!(out, "interrupt_period=none");
        }
    }
    let _ = writeln!(out, "beta={}", plan.beta);
    let _ = writeln!(out, "achieved_beta={}", plan.achieved_beta());
    if plan.schedule.is_empty() {
        let _ = writeln!(out, "# overhead is zero: the routine is never called");
        return out;
    }
    let _ = writeln!(out, "\n[group_counts]\n# group,value,count");
    for (g, counts) in group_counts(&plan.group_weights, plan.routine_length).iter().enumerate() {
        for (v, c) in counts.iter().enumerate() {
            let _ = writeln!(out, "{g},{v},{c}");
        }
    }
    let _ = writeln!(out, "\n[schedule]\n# address,repeat");
    let mut i = 0;
    while i < plan.schedule.len() {
        let a = plan.schedule[i];
        let run = plan.schedule[i..].iter().take_while(|&&x| x == a).count();
        let _ = writeln!(out, "{a:#0w$x},{run}", w = width + 2);
        i += run;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::{DecoderConfig, Family};

    fn design() -> DecoderDesign {
        DecoderConfig::new(Family::AndAnd).build().unwrap()
    }

    #[test]
    fn universal_defaults() {
        let d = design();
        let p = universal_plan(&d, 0.01).unwrap();
        let full = p.full_weights(&d);
        assert_eq!(full.len(), 512);
        assert!(full.iter().all(|&w| (w - 1.0 / 512.0).abs() < 1e-15));
        assert_eq!(p.interrupt_period, Some(50688));
        assert_eq!(p.schedule, (0..512).collect::<Vec<_>>());
        let none = universal_plan(&d, 0.0).unwrap();
        assert!(none.schedule.is_empty());
        assert_eq!(none.interrupt_period, None);
    }

    #[test]
    fn quantization_bound() {
        for &l in &[1u64, 7, 64, 512, 1000] {
            for &beta in &[0.0001, 0.01, 0.05, 0.3, 0.5, 0.99, 1.0] {
                let n = interrupt_period(l, beta).unwrap().unwrap();
                let achieved = l as f64 / (n + l) as f64;
                assert!((achieved - beta).abs() <= 1.0 / (n + l) as f64);
            }
        }
        assert!(interrupt_period(512, 1.5).is_err());
        assert!(interrupt_period(0, 0.1).is_err());
    }

    #[test]
    fn weighted_schedule_matches_counts() {
        let d = design();
        let w = vec![
            vec![0.5, 0.1, 0.1, 0.1, 0.05, 0.05, 0.05, 0.05],
            vec![0.125; 8],
            vec![0.0, 0.0, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25],
        ];
        let p = plan_from_weights(&d, PlanKind::DesignAware, w.clone(), 0.02, 512).unwrap();
        assert_eq!(p.schedule.len(), 512);
        for (h, w) in p.schedule_histograms(&d).iter().zip(&w) {
            for (a, b) in h.iter().zip(w) {
                assert!((a - b).abs() <= 1.0 / 512.0);
            }
        }
        let total: f64 = p.full_weights(&d).iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mut bad = w.clone();
        bad[0][0] = 0.6;
        assert!(plan_from_weights(&d, PlanKind::DesignAware, bad, 0.02, 512).is_err());
    }

    #[test]
    fn spread_sequence_is_exact() {
        let counts = [5u64, 0, 2, 9];
        let s = spread_sequence(&counts, 16);
        for (v, &c) in counts.iter().enumerate() {
            assert_eq!(s.iter().filter(|&&x| x == v).count() as u64, c);
        }
    }

    #[test]
    fn routine_text() {
        let d = DecoderConfig::with_groups(Family::NandNor, &[2]).build().unwrap();
        let p = universal_plan(&d, 0.2).unwrap();
        let text = emit_routine(&p, &d);
        let sched: Vec<&str> = text.lines().skip_while(|l| *l != "[schedule]").skip(2).collect();
        assert_eq!(sched, vec!["0x0,1", "0x1,1", "0x2,1", "0x3,1"]);
        assert!(text.contains("interrupt_period=16"));
        let back = RejuvenationPlan::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn ratio_conversion() {
        assert_eq!(ratio_to_beta(0.0).unwrap(), 0.0);
        assert!((ratio_to_beta(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(ratio_to_beta(-1.0).is_err());
    }
}
