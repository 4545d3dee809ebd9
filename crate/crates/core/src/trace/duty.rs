// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::MemoryTrace;
use crate::decoder::{DecoderDesign, Device, GroupLogic, NetId, TransistorId};
use crate::error::{Error, Result};
use crate::exec::Parallelism;

/// Signal and stress probabilities of a decoder under some workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DutyProfile {
    /// Probability of logic 1, per net.
    pub net_duty: Vec<f64>,
    /// Probability of BTI stress, per transistor.
    pub stress_duty: Vec<f64>,
    /// Per group, the distribution of the group's input value.
    pub group_histograms: Vec<Vec<f64>>,
    pub observed_cycles: u64,
}

impl DutyProfile {
    /// Build a profile from per-group input distributions.
    pub fn from_group_histograms(design: &DecoderDesign, histograms: Vec<Vec<f64>>, observed_cycles: u64) -> Result<Self> {
        Self::from_histograms_with(design, &design.group_logic(), histograms, observed_cycles)
    }

    pub(crate) fn from_histograms_with(
        design: &DecoderDesign,
        logic: &[GroupLogic],
        histograms: Vec<Vec<f64>>,
        observed_cycles: u64,
    ) -> Result<Self> {
        if histograms.len() != design.pre_decoders.len() {
            return Err(Error::OutOfRange(format!(
                "{} group histograms for {} groups",
                histograms.len(),
                design.pre_decoders.len()
            )));
        }
        let mut net_duty = vec![0.0; design.nets.len()];
        for (g, (hist, table)) in histograms.iter().zip(logic).enumerate() {
            if hist.len() != table.values.len() {
                return Err(Error::OutOfRange(format!("group {g} histogram has {} entries", hist.len())));
            }
            if hist.iter().any(|&p| !(0.0..=1.0 + 1e-12).contains(&p)) {
                return Err(Error::OutOfRange(format!("group {g} histogram entry outside [0, 1]")));
            }
            for (&p, row) in hist.iter().zip(&table.values) {
                if p == 0.0 {
                    continue;
                }
                for (net, &value) in table.nets.iter().zip(row) {
                    if value {
                        net_duty[net.index()] += p;
                    }
                }
            }
        }
        for d in &mut net_duty {
            *d = d.clamp(0.0, 1.0);
        }
        let stress_duty = stress_from_nets(design, &net_duty);
        Ok(DutyProfile {
            net_duty,
            stress_duty,
            group_histograms: histograms,
            observed_cycles,
        })
    }

    pub fn net(&self, net: NetId) -> f64 {
        self.net_duty[net.index()]
    }

    pub fn stress(&self, transistor: TransistorId) -> f64 {
        self.stress_duty[transistor.index()]
    }

    /// `(1 - beta) * self + beta * other`, net by net.
    pub fn mix(&self, other: &DutyProfile, beta: f64) -> Result<DutyProfile> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::OutOfRange(format!("mixing fraction {beta} outside [0, 1]")));
        }
        if self.net_duty.len() != other.net_duty.len() || self.group_histograms.len() != other.group_histograms.len() {
            return Err(Error::OutOfRange("profiles belong to different designs".into()));
        }
        let lerp = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter()
                .zip(b)
                .map(|(&x, &y)| {
                    if beta == 0.0 {
                        x
                    } else if beta == 1.0 {
                        y
                    } else {
                        (1.0 - beta) * x + beta * y
                    }
                })
                .collect()
        };
        Ok(DutyProfile {
            net_duty: lerp(&self.net_duty, &other.net_duty),
            stress_duty: lerp(&self.stress_duty, &other.stress_duty),
            group_histograms: self
                .group_histograms
                .iter()
                .zip(&other.group_histograms)
                .map(|(a, b)| lerp(a, b))
                .collect(),
            observed_cycles: self.observed_cycles,
        })
    }

    /// Cycle-weighted merge of profiles of consecutive trace segments.
    pub fn merge(parts: &[DutyProfile]) -> Result<DutyProfile> {
        let total: u64 = parts.iter().map(|p| p.observed_cycles).sum();
        let first = parts.first().ok_or(Error::EmptyTrace)?;
        if total == 0 {
            return Err(Error::EmptyTrace);
        }
        let weighted = |pick: &dyn Fn(&DutyProfile) -> &[f64]| -> Vec<f64> {
            let mut acc = vec![0.0; pick(first).len()];
            for p in parts {
                let w = p.observed_cycles as f64 / total as f64;
                for (a, &x) in acc.iter_mut().zip(pick(p)) {
                    *a += w * x;
                }
            }
            acc
        };
        let net_duty = weighted(&|p| &p.net_duty);
        let stress_duty = weighted(&|p| &p.stress_duty);
        let group_histograms = (0..first.group_histograms.len())
            .map(|g| weighted(&|p| &p.group_histograms[g]))
            .collect();
        Ok(DutyProfile {
            net_duty,
            stress_duty,
            group_histograms,
            observed_cycles: total,
        })
    }
}

pub(crate) fn stress_from_nets(design: &DecoderDesign, net_duty: &[f64]) -> Vec<f64> {
    design
        .transistors
        .iter()
        .map(|t| {
            let high = net_duty[t.gate_net.index()];
            match t.device {
                Device::Pmos => 1.0 - high,
                Device::Nmos => high,
            }
        })
        .collect()
}

fn group_counts(trace: &MemoryTrace, design: &DecoderDesign, mode: Parallelism) -> Result<(Vec<Vec<u64>>, u64)> {
    if trace.is_empty() || trace.observed_cycles() == 0 {
        return Err(Error::EmptyTrace);
    }
    let occupancy = trace.occupancy(design.address_count(), mode)?;
    let mut counts: Vec<Vec<u64>> = design.pre_decoders.iter().map(|pd| vec![0; pd.output_count()]).collect();
    for (address, &n) in occupancy.iter().enumerate() {
        if n == 0 {
            continue;
        }
        for (pd, c) in design.pre_decoders.iter().zip(counts.iter_mut()) {
            c[pd.group_value(address as u64)] += n;
        }
    }
    Ok((counts, trace.observed_cycles()))
}

fn normalise(counts: &[u64], total: u64) -> Vec<f64> {
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// Time-weighted duty of every net and transistor over a trace, holding the
/// last address through gaps and idle entries.
pub fn duty_profile(trace: &MemoryTrace, design: &DecoderDesign, mode: Parallelism) -> Result<DutyProfile> {
    let (counts, total) = group_counts(trace, design, mode)?;
    let histograms = counts.iter().map(|c| normalise(c, total)).collect();
    DutyProfile::from_group_histograms(design, histograms, total)
}

/// Distribution of the input value of one pre-decoder over a trace.
pub fn group_histogram(trace: &MemoryTrace, design: &DecoderDesign, group: usize) -> Result<Vec<f64>> {
    if group >= design.pre_decoders.len() {
        return Err(Error::OutOfRange(format!("no group {group}")));
    }
    let (counts, total) = group_counts(trace, design, Parallelism::Sequential)?;
    Ok(normalise(&counts[group], total))
}
