// SPDX-License-Identifier: Apache-2.0

//! Cycle-accurate memory traces: parsing, synthesis and conversion into
//! per-net and per-transistor duty profiles.
//!
//! Trace format, one entry per line:
//!
//! ```text
//! # comment
//! <cycle>,<address>,<op>
//! ```
//!
//! `cycle` is decimal and strictly increasing, `address` is decimal or `0x`
//! hex, and `op` is `R`, `W` or `I`. The decoder inputs hold the last
//! address through gaps between entries and through `I` (idle) entries, so
//! an idle entry needs an earlier address to hold. The trace ends at the
//! last listed cycle.

mod duty;
pub(crate) mod synth;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::decoder::DecoderDesign;
use crate::error::{Error, Result};
use crate::exec::Parallelism;

pub use duty::{duty_profile, group_histogram, DutyProfile};
pub use synth::{preset, preset_names, synth_workload, WorkloadSpec, PRESET_BENCHMARKS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    Read,
    Write,
    Idle,
}

impl Op {
    fn code(self) -> char {
        match self {
            Op::Read => 'R',
            Op::Write => 'W',
            Op::Idle => 'I',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub cycle: u64,
    pub address: u64,
    pub op: Op,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryTrace {
    entries: Vec<TraceEntry>,
    total_cycles: u64,
}

impl MemoryTrace {
    /// Validate entries and build a trace. `total_cycles` of `None` ends the
    /// trace right after the last entry.
    pub fn new(entries: Vec<TraceEntry>, total_cycles: Option<u64>, address_width: u32) -> Result<Self> {
        let mut previous: Option<u64> = None;
        let mut have_address = false;
        for (i, e) in entries.iter().enumerate() {
            if let Some(p) = previous {
                if e.cycle <= p {
                    return Err(Error::NonMonotonicCycle {
                        line: i + 1,
                        cycle: e.cycle,
                        previous: p,
                    });
                }
            }
            previous = Some(e.cycle);
            match e.op {
                Op::Idle if !have_address => {
                    return Err(Error::parse(
                        i + 1,
                        "idle entry before any address: trace must define an address before the first idle hold",
                    ))
                }
                Op::Idle => {}
                _ => {
                    check_width(e.address, address_width)?;
                    have_address = true;
                }
            }
        }
        let min_total = previous.map_or(0, |c| c + 1);
        let total_cycles = total_cycles.unwrap_or(min_total);
        if total_cycles < min_total {
            return Err(Error::OutOfRange(format!(
                "total_cycles {total_cycles} ends before the last entry at cycle {}",
                min_total - 1
            )));
        }
        Ok(MemoryTrace { entries, total_cycles })
    }

    pub fn entries(&self) -> &[TraceEntry] {
        &self.entries
    }

    pub fn total_cycles(&self) -> u64 {
        self.total_cycles
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Cycles from the first entry to the end of the trace.
    pub fn observed_cycles(&self) -> u64 {
        self.entries.first().map_or(0, |e| self.total_cycles - e.cycle)
    }

    /// Address held on the decoder inputs after each entry.
    pub fn held_addresses(&self) -> Vec<u64> {
        let mut current = 0;
        self.entries
            .iter()
            .map(|e| {
                if e.op != Op::Idle {
                    current = e.address;
                }
                current
            })
            .collect()
    }

    /// Number of cycles each address is held, as a dense vector of length
    /// `address_count`.
    pub fn occupancy(&self, address_count: u64, mode: Parallelism) -> Result<Vec<u64>> {
        let held = self.held_addresses();
        if let Some(&bad) = held.iter().find(|&&a| a >= address_count) {
            return Err(Error::AddressOutOfRange {
                address: bad,
                width: address_count.trailing_zeros(),
            });
        }
        let n = self.entries.len();
        let duration = |i: usize| {
            let end = if i + 1 < n { self.entries[i + 1].cycle } else { self.total_cycles };
            end - self.entries[i].cycle
        };
        let count_range = |range: std::ops::Range<usize>| {
            let mut counts = vec![0u64; address_count as usize];
            for i in range {
                counts[held[i] as usize] += duration(i);
            }
            counts
        };
        // Chunks are reduced in index order; integer sums make both modes identical.
        let chunk = (n / 16).max(1 << 15);
        let chunks: Vec<std::ops::Range<usize>> = (0..n).step_by(chunk).map(|s| s..(s + chunk).min(n)).collect();
        let partial = crate::exec::map(mode, &chunks, |r| count_range(r.clone()));
        let mut total = vec![0u64; address_count as usize];
        for part in partial {
            for (t, p) in total.iter_mut().zip(part) {
                *t += p;
            }
        }
        Ok(total)
    }

    /// Append `other` after the end of this trace.
    pub fn concat(&self, other: &MemoryTrace) -> MemoryTrace {
        let offset = self.total_cycles;
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().map(|e| TraceEntry {
            cycle: e.cycle + offset,
            ..*e
        }));
        MemoryTrace {
            entries,
            total_cycles: offset + other.total_cycles,
        }
    }

    /// Split at `cycle` into two traces; the second is rebased to cycle 0
    /// and starts by re-stating the held address.
    pub fn split_at(&self, cycle: u64) -> (MemoryTrace, MemoryTrace) {
        let held = self.held_addresses();
        let idx = self.entries.partition_point(|e| e.cycle < cycle);
        let head = MemoryTrace {
            entries: self.entries[..idx].to_vec(),
            total_cycles: cycle.min(self.total_cycles),
        };
        let mut tail_entries = Vec::new();
        let starts_on_entry = self.entries.get(idx).is_some_and(|e| e.cycle == cycle && e.op != Op::Idle);
        if !starts_on_entry && idx > 0 {
            tail_entries.push(TraceEntry {
                cycle: 0,
                address: held[idx - 1],
                op: Op::Read,
            });
        }
        for (i, e) in self.entries[idx..].iter().enumerate() {
            if i == 0 && !starts_on_entry && e.cycle == cycle {
                // idle at the split point: the restated address already covers it
                continue;
            }
            tail_entries.push(TraceEntry {
                cycle: e.cycle - cycle,
                ..*e
            });
        }
        let tail = MemoryTrace {
            entries: tail_entries,
            total_cycles: self.total_cycles.saturating_sub(cycle),
        };
        (head, tail)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.entries.len() * 12);
        for e in &self.entries {
            let _ = writeln!(out, "{},{:#x},{}", e.cycle, e.address, e.op.code());
        }
        out
    }
}

fn check_width(address: u64, width: u32) -> Result<()> {
    if width < 64 && address >> width != 0 {
        Err(Error::AddressOutOfRange { address, width })
    } else {
        Ok(())
    }
}

fn parse_u64(field: &str) -> Option<u64> {
    let field = field.trim();
    match field.strip_prefix("0x").or_else(|| field.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => field.parse().ok(),
    }
}

/// Parse a trace for a decoder with `address_width` address bits.
pub fn parse_trace(text: &str, address_width: u32) -> Result<MemoryTrace> {
    let mut entries = Vec::new();
    let mut previous: Option<u64> = None;
    let mut have_address = false;
    for line in crate::kv::lines(text) {
        let fields: Vec<&str> = line.text.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::parse(line.number, format!("expected `cycle,address,op`, got `{}`", line.text)));
        }
        let cycle: u64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line.number, format!("invalid cycle `{}`", fields[0].trim())))?;
        let address = parse_u64(fields[1])
            .ok_or_else(|| Error::parse(line.number, format!("invalid address `{}`", fields[1].trim())))?;
        let op = match fields[2].trim() {
            "R" | "r" => Op::Read,
            "W" | "w" => Op::Write,
            "I" | "i" => Op::Idle,
            other => return Err(Error::parse(line.number, format!("invalid op `{other}`"))),
        };
        if let Some(p) = previous {
            if cycle <= p {
                return Err(Error::NonMonotonicCycle {
                    line: line.number,
                    cycle,
                    previous: p,
                });
            }
        }
        previous = Some(cycle);
        match op {
            Op::Idle if !have_address => {
                return Err(Error::parse(
                    line.number,
                    "trace must define an address before the first idle hold",
                ))
            }
            Op::Idle => {}
            _ => {
                check_width(address, address_width).map_err(|e| Error::parse(line.number, e.to_string()))?;
                have_address = true;
            }
        }
        entries.push(TraceEntry { cycle, address, op });
    }
    MemoryTrace::new(entries, None, address_width)
}

/// Bind a trace to a design, checking every held address fits.
pub fn check_trace(trace: &MemoryTrace, design: &DecoderDesign) -> Result<()> {
    for e in trace.entries().iter().filter(|e| e.op != Op::Idle) {
        design.check_address(e.address)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_basic_trace() {
        let t = parse_trace("0,0x1F0,R\n1,0x1F0,W", 9).unwrap();
        assert_eq!(t.entries().len(), 2);
        assert_eq!(t.total_cycles(), 2);
        assert_eq!(t.entries()[0].address, 0x1f0);
        assert_eq!(t.entries()[1].op, Op::Write);
    }

    #[test]
    fn idle_needs_prior_address() {
        let err = parse_trace("5,0x00,I", 9).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        assert!(err.to_string().contains("before the first idle"));
        let t = parse_trace("0,3,R\n5,0,I\n9,0,I", 9).unwrap();
        assert_eq!(t.held_addresses(), vec![3, 3, 3]);
        assert_eq!(t.total_cycles(), 10);
    }

    #[test]
    fn rejects_duplicate_cycles_and_overflow() {
        assert!(matches!(
            parse_trace("0,1,R\n0,2,R", 9).unwrap_err(),
            Error::NonMonotonicCycle { line: 2, .. }
        ));
        assert!(matches!(parse_trace("# c\n0,0x200,R", 9).unwrap_err(), Error::Parse { line: 2, .. }));
        assert!(matches!(parse_trace("0,1,X", 9).unwrap_err(), Error::Parse { line: 1, .. }));
        assert!(matches!(parse_trace("zero,1,R", 9).unwrap_err(), Error::Parse { line: 1, .. }));
        assert!(matches!(parse_trace("0,1", 9).unwrap_err(), Error::Parse { line: 1, .. }));
    }

    #[test]
    fn text_round_trip() {
        let t = parse_trace("# x\n0,7,R\n3,0x1ff,W\n8,0,I\n", 9).unwrap();
        assert_eq!(parse_trace(&t.to_text(), 9).unwrap(), t);
    }

    #[test]
    fn occupancy_holds_through_gaps() {
        let t = parse_trace("0,1,R\n4,2,W\n6,0,I\n9,3,R", 2).unwrap();
        assert_eq!(t.occupancy(4, Parallelism::Sequential).unwrap(), vec![0, 4, 5, 1]);
    }

    #[test]
    fn split_and_concat_preserve_occupancy() {
        let t = parse_trace("0,1,R\n4,2,W\n6,0,I\n9,3,R\n12,0,I", 2).unwrap();
        let whole = t.occupancy(4, Parallelism::Sequential).unwrap();
        for cut in 1..t.total_cycles() {
            let (a, b) = t.split_at(cut);
            let oa = a.occupancy(4, Parallelism::Sequential).unwrap();
            let ob = b.occupancy(4, Parallelism::Sequential).unwrap();
            let sum: Vec<u64> = oa.iter().zip(&ob).map(|(x, y)| x + y).collect();
            assert_eq!(sum, whole, "cut {cut}");
            assert_eq!(a.concat(&b).occupancy(4, Parallelism::Sequential).unwrap(), whole);
        }
    }
}
