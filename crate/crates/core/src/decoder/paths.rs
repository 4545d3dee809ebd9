// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{DecoderDesign, GateId, NetId, TransistorId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// Output pulled high.
    #[serde(rename = "ACTIVATION")]
    Activation,
    /// Output pulled low.
    #[serde(rename = "DEACTIVATION")]
    Deactivation,
}

impl Direction {
    pub fn short(self) -> &'static str {
        match self {
            Direction::Activation => "act",
            Direction::Deactivation => "deact",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Activation => "ACTIVATION",
            Direction::Deactivation => "DEACTIVATION",
        })
    }
}

/// A sensitized input-to-output path through one pre-decoder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Path {
    pub group: usize,
    pub output_index: usize,
    /// Absolute address bit index.
    pub driving_bit: u32,
    pub through_inverter: bool,
    pub direction: Direction,
    pub gate_chain: Vec<GateId>,
    /// Input net of each chain gate that carries the transition.
    pub switching_inputs: Vec<NetId>,
    /// Values holding the path sensitized: the other address bits of the
    /// group and the non-controlling side inputs of the decode gate.
    pub side_input_values: BTreeMap<NetId, bool>,
}

impl Path {
    /// Whether the output of chain stage `stage` rises during this transition.
    pub fn stage_output_rises(&self, stage: usize) -> bool {
        // every stage inverts
        let from_end = self.gate_chain.len() - 1 - stage;
        (self.direction == Direction::Activation) == (from_end.is_multiple_of(2))
    }

    /// Driving bit value before and after the transition.
    pub fn driving_values(&self, design: &DecoderDesign) -> (bool, bool) {
        let start = design.groups[self.group].start;
        let own = (self.output_index >> (self.driving_bit - start)) & 1 == 1;
        let ends_selected = (self.direction == Direction::Activation) == design.family.selected_level();
        if ends_selected {
            (!own, own)
        } else {
            (own, !own)
        }
    }

    pub fn output_net(&self, design: &DecoderDesign) -> NetId {
        design.pre_decoders[self.group].outputs[self.output_index]
    }

    pub fn transistors<'a>(&'a self, design: &'a DecoderDesign) -> impl Iterator<Item = TransistorId> + 'a {
        self.gate_chain
            .iter()
            .flat_map(move |&g| design.gate(g).transistors.iter().copied())
    }

    pub fn label(&self) -> String {
        format!(
            "g{}_out{}_a{}_{}",
            self.group,
            self.output_index,
            self.driving_bit,
            self.direction.short()
        )
    }
}

/// All sensitizable pre-decoder paths, ordered by
/// (group, output, driving bit, direction).
pub fn enumerate_paths(design: &DecoderDesign) -> Vec<Path> {
    let mut paths = Vec::new();
    for pd in &design.pre_decoders {
        let width = pd.width() as usize;
        for output in 0..pd.output_count() {
            let nand = design.gate(pd.decode_gates[output]);
            let out_gate = pd.output_gates[output];
            for i in 0..width {
                let bit = pd.bits.start + i as u32;
                let through_inverter = (output >> i) & 1 == 0;
                let literal = nand.input_nets[i];

                let mut side_input_values = BTreeMap::new();
                for k in (0..width).filter(|&k| k != i) {
                    side_input_values.insert(design.address_nets[pd.bits.start as usize + k], (output >> k) & 1 == 1);
                    side_input_values.insert(nand.input_nets[k], true);
                }

                let mut gate_chain = Vec::with_capacity(3);
                let mut switching_inputs = Vec::with_capacity(3);
                if through_inverter {
                    gate_chain.push(pd.inverters[i]);
                    switching_inputs.push(design.address_nets[bit as usize]);
                }
                gate_chain.push(nand.id);
                switching_inputs.push(literal);
                if out_gate != nand.id {
                    gate_chain.push(out_gate);
                    switching_inputs.push(nand.output_net);
                }

                for direction in [Direction::Activation, Direction::Deactivation] {
                    paths.push(Path {
                        group: pd.group,
                        output_index: output,
                        driving_bit: bit,
                        through_inverter,
                        direction,
                        gate_chain: gate_chain.clone(),
                        switching_inputs: switching_inputs.clone(),
                        side_input_values: side_input_values.clone(),
                    });
                }
            }
        }
    }
    paths
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::{evaluate_nets, DecoderConfig, Family};

    #[test]
    fn path_count_formula() {
        for family in Family::ALL {
            for k in 1..=4u32 {
                let d = DecoderConfig::with_groups(family, &[k, 1]).build().unwrap();
                let paths = enumerate_paths(&d);
                let in_group0 = paths.iter().filter(|p| p.group == 0).count();
                assert_eq!(in_group0, 2 * k as usize * (1 << k));
            }
        }
    }

    #[test]
    fn default_design_has_144_paths() {
        let d = DecoderConfig::new(Family::NandNor).build().unwrap();
        let paths = enumerate_paths(&d);
        assert_eq!(paths.len(), 144);
        for g in 0..3 {
            let act = paths.iter().filter(|p| p.group == g && p.direction == Direction::Activation).count();
            let deact = paths.iter().filter(|p| p.group == g && p.direction == Direction::Deactivation).count();
            assert_eq!((act, deact), (24, 24));
        }
        let two = DecoderConfig::with_groups(Family::NandNor, &[2]).build().unwrap();
        assert_eq!(enumerate_paths(&two).len(), 16);
    }

    #[test]
    fn ordering_is_deterministic_and_sorted() {
        let d = DecoderConfig::new(Family::AndAnd).build().unwrap();
        let paths = enumerate_paths(&d);
        let keys: Vec<_> = paths.iter().map(|p| (p.group, p.output_index, p.driving_bit, p.direction)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(paths, enumerate_paths(&d));
    }

    #[test]
    fn chains_start_at_driving_bit_and_end_at_output() {
        for family in Family::ALL {
            let d = DecoderConfig::new(family).build().unwrap();
            for p in enumerate_paths(&d) {
                let first = d.gate(p.gate_chain[0]);
                if p.through_inverter {
                    assert_eq!(first.input_nets, vec![d.address_nets[p.driving_bit as usize]]);
                } else {
                    assert!(first.input_nets.contains(&d.address_nets[p.driving_bit as usize]));
                }
                let last = d.gate(*p.gate_chain.last().unwrap());
                assert_eq!(last.output_net, p.output_net(&d));
                let extra = usize::from(family == Family::AndAnd);
                assert_eq!(p.gate_chain.len(), 1 + usize::from(p.through_inverter) + extra);
                for (stage, &g) in p.gate_chain.iter().enumerate() {
                    assert!(d.gate(g).input_nets.contains(&p.switching_inputs[stage]));
                }
                let gates: Vec<_> = p.gate_chain.iter().collect();
                assert!(p.transistors(&d).all(|t| gates.contains(&&d.transistor(t).gate)));
            }
        }
    }

    #[test]
    fn sensitization_toggles_output_in_the_stated_direction() {
        for family in Family::ALL {
            let d = DecoderConfig::with_groups(family, &[3]).build().unwrap();
            for p in enumerate_paths(&d) {
                let mut base = 0u64;
                for (net, &value) in &p.side_input_values {
                    if let Some(bit) = d.address_nets.iter().position(|a| a == net) {
                        base |= u64::from(value) << bit;
                    }
                }
                let (before, after) = p.driving_values(&d);
                let addr = |v: bool| base | (u64::from(v) << p.driving_bit);
                let v0 = evaluate_nets(&d, addr(before)).unwrap();
                let v1 = evaluate_nets(&d, addr(after)).unwrap();
                for (net, &value) in &p.side_input_values {
                    assert_eq!(v0.get(*net), value);
                    assert_eq!(v1.get(*net), value);
                }
                let out = p.output_net(&d);
                assert_ne!(v0.get(out), v1.get(out), "{}", p.label());
                assert_eq!(v1.get(out), p.direction == Direction::Activation, "{}", p.label());
                // intermediate nets toggle as the stage edges claim
                for (stage, &g) in p.gate_chain.iter().enumerate() {
                    let net = d.gate(g).output_net;
                    assert_eq!(v1.get(net), p.stage_output_rises(stage));
                    assert_ne!(v0.get(net), v1.get(net));
                }
            }
        }
    }
}
