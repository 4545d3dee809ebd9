// SPDX-License-Identifier: Apache-2.0

//! Gate and transistor level model of a hierarchical wordline decoder.
//!
//! The address is split into groups of bits. Each group drives a k-to-2^k
//! pre-decoder built from address inverters and NAND gates (NAND-NOR family)
//! or NAND+INV pairs (AND-AND family). The post-decoder only carries fan-in
//! bookkeeping; it has no transistors and does not age.

mod eval;
mod paths;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv::KeyValues;

pub use eval::{evaluate_nets, is_stressed, stress_states, GroupLogic, NetValues, StressMap};
pub use paths::{enumerate_paths, Direction, Path};

/// Widest address the model accepts; address histograms are dense vectors.
pub const MAX_ADDRESS_WIDTH: u32 = 24;
/// Widest single pre-decoder group.
pub const MAX_GROUP_BITS: u32 = 8;

macro_rules! id_type {
    ($name:ident) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(NetId);
id_type!(GateId);
id_type!(TransistorId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "NAND_NOR")]
    NandNor,
    #[serde(rename = "AND_AND")]
    AndAnd,
}

impl Family {
    pub const ALL: [Family; 2] = [Family::AndAnd, Family::NandNor];

    /// Logic level of a selected pre-decoder output.
    pub fn selected_level(self) -> bool {
        match self {
            Family::NandNor => false,
            Family::AndAnd => true,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::NandNor => "NAND_NOR",
            Family::AndAnd => "AND_AND",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "NAND_NOR" | "NANDNOR" | "NN" => Ok(Family::NandNor),
            "AND_AND" | "ANDAND" | "AA" => Ok(Family::AndAnd),
            _ => Err(Error::Config(format!("unknown decoder family `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateKind {
    #[serde(rename = "INV")]
    Inv,
    #[serde(rename = "NAND")]
    Nand,
    #[serde(rename = "AND")]
    And,
    #[serde(rename = "NOR")]
    Nor,
}

impl GateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GateKind::Inv => "INV",
            GateKind::Nand => "NAND",
            GateKind::And => "AND",
            GateKind::Nor => "NOR",
        }
    }

    /// Whether the devices of `network` are connected in series for this gate.
    pub fn is_series(self, network: Network) -> bool {
        match (self, network) {
            (GateKind::Inv, _) => true,
            (GateKind::Nand | GateKind::And, Network::PullDown) => true,
            (GateKind::Nand | GateKind::And, Network::PullUp) => false,
            (GateKind::Nor, Network::PullUp) => true,
            (GateKind::Nor, Network::PullDown) => false,
        }
    }

    pub fn eval(self, inputs: impl Iterator<Item = bool>) -> bool {
        let mut inputs = inputs;
        match self {
            GateKind::Inv => !inputs.next().unwrap_or(false),
            GateKind::Nand => !inputs.all(|v| v),
            GateKind::And => inputs.all(|v| v),
            GateKind::Nor => !inputs.any(|v| v),
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "INV" => Ok(GateKind::Inv),
            "NAND" => Ok(GateKind::Nand),
            "AND" => Ok(GateKind::And),
            "NOR" => Ok(GateKind::Nor),
            _ => Err(Error::Config(format!("unknown gate kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Device {
    #[serde(rename = "NMOS")]
    Nmos,
    #[serde(rename = "PMOS")]
    Pmos,
}

impl fmt::Display for Device {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Device::Nmos => "NMOS",
            Device::Pmos => "PMOS",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Network {
    PullUp,
    PullDown,
}

impl Network {
    /// The network that drives an output edge.
    pub fn for_edge(output_rises: bool) -> Self {
        if output_rises {
            Network::PullUp
        } else {
            Network::PullDown
        }
    }

    pub fn device(self) -> Device {
        match self {
            Network::PullUp => Device::Pmos,
            Network::PullDown => Device::Nmos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Net {
    pub name: String,
    pub driver: Option<GateId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateRole {
    AddressInverter { bit: u32 },
    /// The NAND realising pre-decoder output `output` of `group`.
    Decode { group: usize, output: usize },
    /// Output inverter completing an AND as NAND+INV.
    OutputInverter { group: usize, output: usize },
}

#[derive(Debug, Clone)]
pub struct Gate {
    pub id: GateId,
    pub kind: GateKind,
    pub fanin: usize,
    pub input_nets: Vec<NetId>,
    pub output_net: NetId,
    pub transistors: Vec<TransistorId>,
    pub role: GateRole,
}

#[derive(Debug, Clone, Copy)]
pub struct Transistor {
    pub id: TransistorId,
    pub device: Device,
    pub gate_net: NetId,
    pub network: Network,
    /// Position from the output node in a series stack; 0 for parallel devices.
    pub stack_position: usize,
    pub gate: GateId,
}

#[derive(Debug, Clone)]
pub struct PreDecoder {
    pub group: usize,
    pub bits: Range<u32>,
    /// One inverter per address bit of the group, least significant first.
    pub inverters: Vec<GateId>,
    /// The NAND of each output.
    pub decode_gates: Vec<GateId>,
    /// The gate driving each output net (the NAND, or its output inverter).
    pub output_gates: Vec<GateId>,
    pub outputs: Vec<NetId>,
}

impl PreDecoder {
    pub fn width(&self) -> u32 {
        self.bits.end - self.bits.start
    }

    pub fn output_count(&self) -> usize {
        1 << self.width()
    }

    /// The value this group sees for a full address.
    pub fn group_value(&self, address: u64) -> usize {
        ((address >> self.bits.start) & ((1u64 << self.width()) - 1)) as usize
    }
}

/// Structural record of the post-decoder stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostDecoder {
    pub kind: GateKind,
    /// One input per pre-decoder plus the decoder enable.
    pub fanin: usize,
    pub wordlines: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub family: Family,
    pub address_width: u32,
    pub groups: Vec<u32>,
    pub timing_budget: f64,
    pub setup_time: f64,
}

impl DecoderConfig {
    /// Nine address bits in three 3-bit groups, with a budget that leaves
    /// roughly 8% margin over the nominal critical delay of the default gate model.
    pub fn new(family: Family) -> Self {
        let timing_budget = match family {
            Family::NandNor => 2.0,
            Family::AndAnd => 2.4,
        };
        DecoderConfig {
            family,
            address_width: 9,
            groups: vec![3, 3, 3],
            timing_budget,
            setup_time: 0.2,
        }
    }

    pub fn with_groups(family: Family, groups: &[u32]) -> Self {
        DecoderConfig {
            address_width: groups.iter().sum(),
            groups: groups.to_vec(),
            ..DecoderConfig::new(family)
        }
    }

    /// Parse the `key=value` design file format.
    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        kv.check_known(&["family", "address_width", "groups", "timing_budget", "setup_time"])?;
        let family: Family = kv
            .raw("family")
            .ok_or_else(|| Error::Config("design file lacks `family`".into()))?
            .parse()?;
        let mut config = DecoderConfig::new(family);
        if let Some(groups) = kv.raw("groups") {
            config.groups = groups
                .split(',')
                .map(|g| {
                    g.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("invalid group size `{}`", g.trim())))
                })
                .collect::<Result<_>>()?;
        }
        config.address_width = kv.get_or("address_width", config.groups.iter().sum())?;
        config.timing_budget = kv.get_or("timing_budget", config.timing_budget)?;
        config.setup_time = kv.get_or("setup_time", config.setup_time)?;
        Ok(config)
    }

    pub fn to_text(&self) -> String {
        let groups: Vec<String> = self.groups.iter().map(|g| g.to_string()).collect();
        format!(
            "family={}\naddress_width={}\ngroups={}\ntiming_budget={}\nsetup_time={}\n",
            self.family,
            self.address_width,
            groups.join(","),
            self.timing_budget,
            self.setup_time
        )
    }

    fn validate(&self) -> Result<()> {
        if self.address_width < 2 || self.address_width > MAX_ADDRESS_WIDTH {
            return Err(Error::Config(format!(
                "address width {} outside 2..={MAX_ADDRESS_WIDTH}",
                self.address_width
            )));
        }
        if self.groups.is_empty() {
            return Err(Error::Config("no address groups given".into()));
        }
        let mut covered = 0;
        for (i, &size) in self.groups.iter().enumerate() {
            if size == 0 || size > MAX_GROUP_BITS {
                return Err(Error::Config(format!(
                    "group {i} has size {size}, expected 1..={MAX_GROUP_BITS}"
                )));
            }
            covered += size;
            if covered > self.address_width {
                return Err(Error::Config(format!(
                    "group {i} (size {size}) extends past address width {}",
                    self.address_width
                )));
            }
        }
        if covered != self.address_width {
            return Err(Error::Config(format!(
                "group {} leaves bits {covered}..{} uncovered",
                self.groups.len() - 1,
                self.address_width
            )));
        }
        if !(self.timing_budget > 0.0) || !(self.setup_time >= 0.0) {
            return Err(Error::Config(
                "timing budget must be positive and setup time nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<DecoderDesign> {
        build_decoder(self)
    }
}

#[derive(Debug, Clone)]
pub struct DecoderDesign {
    pub family: Family,
    pub address_width: u32,
    pub groups: Vec<Range<u32>>,
    pub nets: Vec<Net>,
    pub gates: Vec<Gate>,
    pub transistors: Vec<Transistor>,
    pub pre_decoders: Vec<PreDecoder>,
    pub post_decoder: PostDecoder,
    /// Net of each address bit, least significant first.
    pub address_nets: Vec<NetId>,
    pub timing_budget: f64,
    pub setup_time: f64,
    config: DecoderConfig,
}

impl DecoderDesign {
    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn net(&self, id: NetId) -> &Net {
        &self.nets[id.index()]
    }

    pub fn gate(&self, id: GateId) -> &Gate {
        &self.gates[id.index()]
    }

    pub fn transistor(&self, id: TransistorId) -> &Transistor {
        &self.transistors[id.index()]
    }

    pub fn wordlines(&self) -> usize {
        self.post_decoder.wordlines
    }

    pub fn address_count(&self) -> u64 {
        1u64 << self.address_width
    }

    pub fn pre_decoder_outputs(&self) -> usize {
        self.pre_decoders.iter().map(PreDecoder::output_count).sum()
    }

    /// Group index owning address bit `bit`.
    pub fn group_of_bit(&self, bit: u32) -> usize {
        self.groups
            .iter()
            .position(|r| r.contains(&bit))
            .expect("bit inside address width")
    }

    /// Group owning each net; address nets belong to the group of their bit.
    pub fn net_groups(&self) -> Vec<usize> {
        let mut owner = vec![0; self.nets.len()];
        for (bit, net) in self.address_nets.iter().enumerate() {
            owner[net.index()] = self.group_of_bit(bit as u32);
        }
        for gate in &self.gates {
            let group = match gate.role {
                GateRole::AddressInverter { bit } => self.group_of_bit(bit),
                GateRole::Decode { group, .. } | GateRole::OutputInverter { group, .. } => group,
            };
            owner[gate.output_net.index()] = group;
        }
        owner
    }

    /// The smallest address whose group `group` carries `value` (other groups zero).
    pub fn address_with(&self, group: usize, value: usize) -> u64 {
        (value as u64) << self.groups[group].start
    }

    pub fn check_address(&self, address: u64) -> Result<()> {
        if address >= self.address_count() {
            Err(Error::AddressOutOfRange {
                address,
                width: self.address_width,
            })
        } else {
            Ok(())
        }
    }
}

struct Builder {
    nets: Vec<Net>,
    gates: Vec<Gate>,
    transistors: Vec<Transistor>,
}

impl Builder {
    fn net(&mut self, name: String) -> NetId {
        let id = NetId(self.nets.len() as u32);
        self.nets.push(Net { name, driver: None });
        id
    }

    fn gate(&mut self, kind: GateKind, inputs: Vec<NetId>, output_name: String, role: GateRole) -> GateId {
        let id = GateId(self.gates.len() as u32);
        let output = self.net(output_name);
        self.nets[output.index()].driver = Some(id);
        let mut transistors = Vec::with_capacity(inputs.len() * 2);
        for network in [Network::PullUp, Network::PullDown] {
            let series = kind.is_series(network);
            for (pos, &input) in inputs.iter().enumerate() {
                let tid = TransistorId(self.transistors.len() as u32);
                self.transistors.push(Transistor {
                    id: tid,
                    device: network.device(),
                    gate_net: input,
                    network,
                    stack_position: if series { pos } else { 0 },
                    gate: id,
                });
                transistors.push(tid);
            }
        }
        self.gates.push(Gate {
            id,
            kind,
            fanin: inputs.len(),
            input_nets: inputs,
            output_net: output,
            transistors,
            role,
        });
        id
    }
}

/// Build the netlist for `config`.
pub fn build_decoder(config: &DecoderConfig) -> Result<DecoderDesign> {
    config.validate()?;
    let mut b = Builder {
        nets: Vec::new(),
        gates: Vec::new(),
        transistors: Vec::new(),
    };
    let address_nets: Vec<NetId> = (0..config.address_width).map(|i| b.net(format!("a{i}"))).collect();

    let mut groups = Vec::with_capacity(config.groups.len());
    let mut pre_decoders = Vec::with_capacity(config.groups.len());
    let mut start = 0;
    for (g, &size) in config.groups.iter().enumerate() {
        let bits = start..start + size;
        start += size;

        let inverters: Vec<GateId> = bits
            .clone()
            .map(|bit| {
                b.gate(
                    GateKind::Inv,
                    vec![address_nets[bit as usize]],
                    format!("a{bit}_n"),
                    GateRole::AddressInverter { bit },
                )
            })
            .collect();
        let inverted: Vec<NetId> = inverters.iter().map(|&id| b.gates[id.index()].output_net).collect();

        let outputs = 1usize << size;
        let mut decode_gates = Vec::with_capacity(outputs);
        let mut output_gates = Vec::with_capacity(outputs);
        for j in 0..outputs {
            let literals: Vec<NetId> = (0..size as usize)
                .map(|i| {
                    if (j >> i) & 1 == 1 {
                        address_nets[bits.start as usize + i]
                    } else {
                        inverted[i]
                    }
                })
                .collect();
            let role = GateRole::Decode { group: g, output: j };
            let nand = match config.family {
                Family::NandNor => b.gate(GateKind::Nand, literals, format!("g{g}_out{j}"), role),
                Family::AndAnd => b.gate(GateKind::Nand, literals, format!("g{g}_nand{j}"), role),
            };
            decode_gates.push(nand);
            let out = match config.family {
                Family::NandNor => nand,
                Family::AndAnd => {
                    let input = b.gates[nand.index()].output_net;
                    b.gate(
                        GateKind::Inv,
                        vec![input],
                        format!("g{g}_out{j}"),
                        GateRole::OutputInverter { group: g, output: j },
                    )
                }
            };
            output_gates.push(out);
        }
        let outputs: Vec<NetId> = output_gates.iter().map(|&id| b.gates[id.index()].output_net).collect();
        groups.push(bits.clone());
        pre_decoders.push(PreDecoder {
            group: g,
            bits,
            inverters,
            decode_gates,
            output_gates,
            outputs,
        });
    }

    let post_decoder = PostDecoder {
        kind: match config.family {
            Family::NandNor => GateKind::Nor,
            Family::AndAnd => GateKind::And,
        },
        fanin: config.groups.len() + 1,
        wordlines: 1usize << config.address_width,
    };

    Ok(DecoderDesign {
        family: config.family,
        address_width: config.address_width,
        groups,
        nets: b.nets,
        gates: b.gates,
        transistors: b.transistors,
        pre_decoders,
        post_decoder,
        address_nets,
        timing_budget: config.timing_budget,
        setup_time: config.setup_time,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_nand_nor_shape() {
        let d = DecoderConfig::new(Family::NandNor).build().unwrap();
        assert_eq!(d.pre_decoders.len(), 3);
        assert_eq!(d.pre_decoder_outputs(), 24);
        assert_eq!(d.wordlines(), 512);
        assert_eq!(d.post_decoder.kind, GateKind::Nor);
        assert_eq!(d.post_decoder.fanin, 4);
    }

    #[test]
    fn two_bit_decoder() {
        let d = DecoderConfig::with_groups(Family::NandNor, &[2]).build().unwrap();
        assert_eq!(d.pre_decoders.len(), 1);
        assert_eq!(d.pre_decoder_outputs(), 4);
        assert_eq!(d.wordlines(), 4);
    }

    #[test]
    fn and_and_adds_output_inverters() {
        let nn = DecoderConfig::new(Family::NandNor).build().unwrap();
        let aa = DecoderConfig::new(Family::AndAnd).build().unwrap();
        assert_eq!(aa.gates.len(), nn.gates.len() + 24);
        for pd in &aa.pre_decoders {
            for (&nand, &out) in pd.decode_gates.iter().zip(&pd.output_gates) {
                assert_eq!(aa.gate(nand).kind, GateKind::Nand);
                assert_eq!(aa.gate(out).kind, GateKind::Inv);
                assert_eq!(aa.gate(out).input_nets, vec![aa.gate(nand).output_net]);
            }
        }
    }

    #[test]
    fn every_net_has_at_most_one_driver_and_gates_are_complementary() {
        for family in Family::ALL {
            let d = DecoderConfig::new(family).build().unwrap();
            let mut drivers = vec![0; d.nets.len()];
            for g in &d.gates {
                drivers[g.output_net.index()] += 1;
                let pu = g.transistors.iter().filter(|&&t| d.transistor(t).network == Network::PullUp).count();
                let pd = g.transistors.len() - pu;
                assert_eq!((pu, pd), (g.fanin, g.fanin));
                for &t in &g.transistors {
                    let t = d.transistor(t);
                    assert!(g.input_nets.contains(&t.gate_net));
                    assert_eq!(t.device == Device::Pmos, t.network == Network::PullUp);
                }
            }
            for (net, count) in d.nets.iter().zip(drivers) {
                let expected = if d.address_nets.iter().any(|a| d.net(*a).name == net.name) { 0 } else { 1 };
                assert_eq!(count, expected, "{}", net.name);
            }
        }
    }

    #[test]
    fn invalid_partitions_name_the_group() {
        let mut c = DecoderConfig::new(Family::NandNor);
        c.groups = vec![3, 4, 3];
        let msg = c.build().unwrap_err().to_string();
        assert!(msg.contains("group 2"), "{msg}");
        c.groups = vec![3, 3, 2];
        let msg = c.build().unwrap_err().to_string();
        assert!(msg.contains("uncovered"), "{msg}");
        c.groups = vec![3, 0, 6];
        assert!(c.build().unwrap_err().to_string().contains("group 1"));
        c.address_width = 1;
        c.groups = vec![1];
        assert!(c.build().is_err());
    }

    #[test]
    fn config_file_round_trip() {
        let c = DecoderConfig::parse("family=AND_AND\ngroups=2,3,2\ntiming_budget=2.5\n").unwrap();
        assert_eq!(c.address_width, 7);
        assert_eq!(c.groups, vec![2, 3, 2]);
        assert_eq!(DecoderConfig::parse(&c.to_text()).unwrap(), c);
        assert!(DecoderConfig::parse("family=AND_AND\nbits=3").is_err());
    }
}
