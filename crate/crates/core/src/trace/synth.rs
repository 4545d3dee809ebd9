// SPDX-License-Identifier: Apache-2.0

//! Synthetic functional workloads.
//!
//! The address space is split on the most significant pre-decoder group:
//! the *low* region (top group all zeros) holds code and data arrays, the
//! *stack* region (top group all ones) holds the stack, and the *body* is
//! everything in between. Each region gets exactly its share of cycles;
//! within a region the workload issues short sequential bursts.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{MemoryTrace, Op, TraceEntry};
use crate::decoder::DecoderDesign;
use crate::error::{Error, Result};
use crate::kv::KeyValues;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub name: String,
    pub length: u64,
    pub low_region_weight: f64,
    pub stack_region_weight: f64,
    pub body_weight: f64,
    pub seed: u64,
    /// Mean burst length in cycles.
    pub run_length: u64,
    /// Fraction of the low region the workload touches, from its base.
    pub low_span: f64,
    /// Fraction of the stack region the workload touches, from the top.
    pub stack_span: f64,
    /// Fraction of accesses that are writes.
    pub write_fraction: f64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            name: "workload".into(),
            length: 200_000,
            low_region_weight: 1.0,
            stack_region_weight: 1.0,
            body_weight: 1.0,
            seed: 1,
            run_length: 16,
            low_span: 1.0,
            stack_span: 1.0,
            write_fraction: 0.3,
        }
    }
}

const KEYS: &[&str] = &[
    "name",
    "length",
    "low_region_weight",
    "stack_region_weight",
    "body_weight",
    "seed",
    "run_length",
    "low_span",
    "stack_span",
    "write_fraction",
];

impl WorkloadSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        kv.check_known(KEYS)?;
        let d = WorkloadSpec::default();
        let spec = WorkloadSpec {
            name: kv.raw("name").unwrap_or(&d.name).to_string(),
            length: kv.get_or("length", d.length)?,
            low_region_weight: kv.get_or("low_region_weight", d.low_region_weight)?,
            stack_region_weight: kv.get_or("stack_region_weight", d.stack_region_weight)?,
            body_weight: kv.get_or("body_weight", d.body_weight)?,
            seed: kv.get_or("seed", d.seed)?,
            run_length: kv.get_or("run_length", d.run_length)?,
            low_span: kv.get_or("low_span", d.low_span)?,
            stack_span: kv.get_or("stack_span", d.stack_span)?,
            write_fraction: kv.get_or("write_fraction", d.write_fraction)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        format!(
            "name={}\nlength={}\nlow_region_weight={}\nstack_region_weight={}\nbody_weight={}\nseed={}\nrun_length={}\nlow_span={}\nstack_span={}\nwrite_fraction={}\n",
            self.name,
            self.length,
            self.low_region_weight,
            self.stack_region_weight,
            self.body_weight,
            self.seed,
            self.run_length,
            self.low_span,
            self.stack_span,
            self.write_fraction
        )
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let w = [self.low_region_weight, self.stack_region_weight, self.body_weight];
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) || w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config(format!(
                "workload `{}`: region weights must be nonnegative with a positive sum",
                self.name
            )));
        }
        if self.length == 0 {
            return Err(Error::Config(format!("workload `{}` has zero length", self.name)));
        }
        if self.run_length == 0 {
            return Err(Error::Config(format!("workload `{}`: run_length must be positive", self.name)));
        }
        for (key, v) in [("low_span", self.low_span), ("stack_span", self.stack_span)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("workload `{}`: {key} must be in (0, 1]", self.name)));
            }
        }
        if !(0.0..=1.0).contains(&self.write_fraction) {
            return Err(Error::Config(format!("workload `{}`: write_fraction must be in [0, 1]", self.name)));
        }
        Ok(())
    }
}

/// Largest-remainder split of `total` into parts proportional to `weights`.
pub(crate) fn apportion(total: u64, weights: &[f64]) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|&w| total as f64 * w / sum).collect();
    let mut counts: Vec<u64> = exact.iter().map(|&x| x.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    // stable: ties resolve to the lower index
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal)
    });
    for &i in order.iter().take((total - assigned.min(total)) as usize) {
        counts[i] += 1;
    }
    counts
}

struct Region {
    base: u64,
    size: u64,
}

/// Generate a deterministic trace for `spec` on `design`.
pub fn synth_workload(spec: &WorkloadSpec, design: &DecoderDesign) -> Result<MemoryTrace> {
    spec.validate()?;
    let top = design.groups.last().expect("design has groups");
    let top_bits = top.end - top.start;
    let low_size = 1u64 << top.start;
    let top_max = (1u64 << top_bits) - 1;

    let span = |fraction: f64, size: u64| ((fraction * size as f64).ceil() as u64).clamp(1, size);
    let low_used = span(spec.low_span, low_size);
    let stack_used = span(spec.stack_span, low_size);
    let regions = [
        Region { base: 0, size: low_used },
        Region {
            base: (top_max << top.start) + (low_size - stack_used),
            size: stack_used,
        },
        Region {
            base: low_size,
            size: low_size * top_max.saturating_sub(1),
        },
    ];
    let mut weights = [spec.low_region_weight, spec.stack_region_weight, spec.body_weight];
    if regions[2].size == 0 {
        if weights[2] > 0.0 {
            return Err(Error::Config(format!(
                "workload `{}`: design has no body region but body_weight > 0",
                spec.name
            )));
        }
        weights[2] = 0.0;
    }
    let cycles = apportion(spec.length, &weights);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut runs: Vec<(u64, u64)> = Vec::new(); // (start address, length)
    for (region, &budget) in regions.iter().zip(&cycles) {
        let mut left = budget;
        while left > 0 {
            let len = rng.gen_range(1..=2 * spec.run_length - 1).min(left);
            let start = region.base + rng.gen_range(0..region.size);
            runs.push((start, len));
            left -= len;
        }
    }
    runs.shuffle(&mut rng);

    // Region membership is preserved by wrapping bursts inside their region.
    let region_of = |addr: u64| {
        regions
            .iter()
            .find(|r| r.size > 0 && addr >= r.base && addr < r.base + r.size)
            .expect("run starts inside a region")
    };
    let mut entries = Vec::with_capacity(spec.length as usize);
    let mut cycle = 0u64;
    for (start, len) in runs {
        let region = region_of(start);
        for i in 0..len {
            let address = region.base + (start - region.base + i) % region.size;
            let op = if rng.gen_bool(spec.write_fraction) { Op::Write } else { Op::Read };
            entries.push(TraceEntry { cycle, address, op });
            cycle += 1;
        }
    }
    MemoryTrace::new(entries, None, design.address_width)
}

/// Benchmark-like presets used by the comparison experiments.
pub const PRESET_BENCHMARKS: [&str; 8] = ["aescbc", "conv2d", "fdctfst", "fft", "fir", "ipm", "keccak", "sha"];

const PRESET_FILES: [(&str, &str); 9] = [
    ("aescbc", include_str!("../../data/workloads/aescbc.spec")),
    ("conv2d", include_str!("../../data/workloads/conv2d.spec")),
    ("fdctfst", include_str!("../../data/workloads/fdctfst.spec")),
    ("fft", include_str!("../../data/workloads/fft.spec")),
    ("fir", include_str!("../../data/workloads/fir.spec")),
    ("ipm", include_str!("../../data/workloads/ipm.spec")),
    ("keccak", include_str!("../../data/workloads/keccak.spec")),
    ("sha", include_str!("../../data/workloads/sha.spec")),
    ("uniform", include_str!("../../data/workloads/uniform.spec")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESET_FILES.iter().map(|(n, _)| *n)
}

pub fn preset(name: &str) -> Option<WorkloadSpec> {
    PRESET_FILES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| WorkloadSpec::parse(text).expect("bundled preset parses"))
}
