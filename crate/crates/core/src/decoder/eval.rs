// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;

use super::{DecoderDesign, Device, NetId, TransistorId};
use crate::error::Result;

/// Logic value of every net for one address.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetValues(pub Vec<bool>);

impl NetValues {
    pub fn get(&self, net: NetId) -> bool {
        self.0[net.index()]
    }
}

/// BTI stress state of every transistor for one address.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StressMap(pub Vec<bool>);

impl StressMap {
    pub fn get(&self, transistor: TransistorId) -> bool {
        self.0[transistor.index()]
    }
}

/// NBTI stresses a PMOS with its gate low; PBTI stresses an NMOS with its gate high.
pub fn is_stressed(device: Device, gate_value: bool) -> bool {
    match device {
        Device::Pmos => !gate_value,
        Device::Nmos => gate_value,
    }
}

impl DecoderDesign {
    /// Evaluate into a caller-provided buffer; `address` must already be in range.
    pub(crate) fn evaluate_into(&self, address: u64, values: &mut [bool]) {
        for (bit, net) in self.address_nets.iter().enumerate() {
            values[net.index()] = (address >> bit) & 1 == 1;
        }
        // Gates are stored in topological order by construction.
        for gate in &self.gates {
            let out = gate.kind.eval(gate.input_nets.iter().map(|n| values[n.index()]));
            values[gate.output_net.index()] = out;
        }
    }
}

/// Logic values of one group's nets for each of the group's input values.
///
/// Every pre-decoder net depends only on its own group's address bits, so
/// these tables are enough to turn group histograms into net duty.
#[derive(Debug, Clone)]
pub struct GroupLogic {
    pub nets: Vec<NetId>,
    /// `values[v][i]` is the level of `nets[i]` when the group carries `v`.
    pub values: Vec<Vec<bool>>,
}

impl DecoderDesign {
    pub fn group_logic(&self) -> Vec<GroupLogic> {
        let owner = self.net_groups();
        let mut buf = vec![false; self.nets.len()];
        self.pre_decoders
            .iter()
            .map(|pd| {
                let nets: Vec<NetId> = (0..self.nets.len())
                    .filter(|&n| owner[n] == pd.group)
                    .map(|n| NetId(n as u32))
                    .collect();
                let values = (0..pd.output_count())
                    .map(|v| {
                        self.evaluate_into(self.address_with(pd.group, v), &mut buf);
                        nets.iter().map(|n| buf[n.index()]).collect()
                    })
                    .collect();
                GroupLogic { nets, values }
            })
            .collect()
    }
}

pub fn evaluate_nets(design: &DecoderDesign, address: u64) -> Result<NetValues> {
    design.check_address(address)?;
    let mut values = vec![false; design.nets.len()];
    design.evaluate_into(address, &mut values);
    Ok(NetValues(values))
}

pub fn stress_states(design: &DecoderDesign, address: u64) -> Result<StressMap> {
    let nets = evaluate_nets(design, address)?;
    Ok(StressMap(
        design
            .transistors
            .iter()
            .map(|t| is_stressed(t.device, nets.get(t.gate_net)))
            .collect(),
    ))
}
