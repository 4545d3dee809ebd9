// SPDX-License-Identifier: Apache-2.0

//! Nominal and aged path delays.
//!
//! Each gate contributes an intrinsic delay looked up by kind and fan-in.
//! Aging slows a gate by the alpha-power law
//!
//! ```text
//! d = d0 * ((vdd - vth0) / (vdd - vth0 - dVth_eff))^alpha
//! ```
//!
//! where `dVth_eff` comes from the devices of the network that drives the
//! path's edge through that gate.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bti::BtiModel;
use crate::decoder::{DecoderDesign, Device, Direction, GateKind, Network, Path, TransistorId};
use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::kv;
use crate::trace::DutyProfile;

/// How a series stack's threshold shifts combine into one effective shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StackRule {
    /// Worst device of the stack.
    #[default]
    Max,
    /// Sum over the stack; a pessimistic alternative.
    Sum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateDelayModel {
    base: BTreeMap<(GateKind, usize), f64>,
    pub alpha: f64,
    pub vdd: f64,
    pub vth0: f64,
    pub stack_rule: StackRule,
    /// Per-path delay multipliers keyed by path label, used to model an
    /// artificially lengthened path.
    path_scale: BTreeMap<String, f64>,
}

const DEFAULT_GATES: &str = include_str!("../data/gates/default.gates");

impl GateDelayModel {
    pub fn new(alpha: f64, vdd: f64, vth0: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&alpha) {
            return Err(Error::Config(format!("alpha {alpha} outside [1, 2]")));
        }
        if !(vdd > vth0) || !(vth0 >= 0.0) {
            return Err(Error::Config(format!("need vdd > vth0 >= 0, got vdd={vdd} vth0={vth0}")));
        }
        Ok(GateDelayModel {
            base: BTreeMap::new(),
            alpha,
            vdd,
            vth0,
            stack_rule: StackRule::Max,
            path_scale: BTreeMap::new(),
        })
    }

    pub fn default_model() -> Self {
        load_gate_model(DEFAULT_GATES).expect("bundled gate model is valid")
    }

    pub fn with_base(mut self, kind: GateKind, fanin: usize, delay: f64) -> Result<Self> {
        self.set_base(kind, fanin, delay)?;
        Ok(self)
    }

    pub fn set_base(&mut self, kind: GateKind, fanin: usize, delay: f64) -> Result<()> {
        if !(delay > 0.0) || !delay.is_finite() {
            return Err(Error::Config(format!("base delay of {kind}{fanin} must be positive, got {delay}")));
        }
        self.base.insert((kind, fanin), delay);
        Ok(())
    }

    pub fn with_stack_rule(mut self, rule: StackRule) -> Self {
        self.stack_rule = rule;
        self
    }

    /// Multiply every stage of the path labelled `label` by `factor`.
    pub fn with_path_scale(mut self, label: impl Into<String>, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::Config(format!("path scale must be positive, got {factor}")));
        }
        self.path_scale.insert(label.into(), factor);
        Ok(self)
    }

    /// Every base delay multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let mut out = self.clone();
        for (&(kind, fanin), &d) in &self.base {
            out.set_base(kind, fanin, d * c)?;
        }
        Ok(out)
    }

    pub fn base_delay(&self, kind: GateKind, fanin: usize) -> Result<f64> {
        self.base.get(&(kind, fanin)).copied().ok_or(Error::MissingGateDelay {
            kind: kind.to_string(),
            fanin,
        })
    }

    pub fn path_scale(&self, label: &str) -> f64 {
        self.path_scale.get(label).copied().unwrap_or(1.0)
    }

    pub fn overdrive(&self) -> f64 {
        self.vdd - self.vth0
    }

    /// Delay multiplier for an effective threshold shift.
    pub fn degradation(&self, delta_vth: f64) -> Result<f64> {
        let vov = self.overdrive();
        if delta_vth >= vov {
            return Err(Error::DegradationOverflow {
                delta_vth,
                overdrive: vov,
            });
        }
        if delta_vth <= 0.0 {
            return Ok(1.0);
        }
        Ok((vov / (vov - delta_vth)).powf(self.alpha))
    }

    fn combine(&self, shifts: impl Iterator<Item = f64>) -> f64 {
        match self.stack_rule {
            StackRule::Max => shifts.fold(0.0, f64::max),
            StackRule::Sum => shifts.sum(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "alpha={}", self.alpha);
        let _ = writeln!(out, "vdd_V={}", self.vdd);
        let _ = writeln!(out, "vth0_V={}", self.vth0);
        if self.stack_rule == StackRule::Sum {
            let _ = writeln!(out, "stack_rule=sum");
        }
        for (&(kind, fanin), &d) in &self.base {
            let _ = writeln!(out, "{kind},{fanin},{d}");
        }
        out
    }
}

impl Default for GateDelayModel {
    fn default() -> Self {
        GateDelayModel::default_model()
    }
}

/// Parse a gate model: header `key=value` lines, then `kind,fanin,base_delay` lines.
pub fn load_gate_model(text: &str) -> Result<GateDelayModel> {
    let mut header = kv::KeyValues::default();
    let mut rows = Vec::new();
    for line in kv::lines(text) {
        if line.text.contains('=') {
            let (k, v) = kv::split_pair(&line).expect("line contains `=`");
            header.insert(line.number, k, v)?;
            continue;
        }
        let fields: Vec<&str> = line.text.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(line.number, "expected `kind,fanin,base_delay`"));
        }
        let kind: GateKind = fields[0].parse().map_err(|e: Error| Error::parse(line.number, e.to_string()))?;
        let fanin: usize = fields[1]
            .parse()
            .map_err(|_| Error::parse(line.number, format!("invalid fanin `{}`", fields[1])))?;
        let delay: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(line.number, format!("invalid delay `{}`", fields[2])))?;
        rows.push((line.number, kind, fanin, delay));
    }
    header.check_known(&["alpha", "vdd_v", "vth0_v", "stack_rule"])?;
    let mut model = GateDelayModel::new(
        header.get_or("alpha", 1.3)?,
        header.get_or("vdd_v", 0.95)?,
        header.get_or("vth0_v", 0.40)?,
    )?;
    model.stack_rule = match header.raw("stack_rule").map(str::to_ascii_lowercase).as_deref() {
        None | Some("max") => StackRule::Max,
        Some("sum") => StackRule::Sum,
        Some(other) => return Err(Error::Config(format!("unknown stack_rule `{other}`"))),
    };
    for (line, kind, fanin, delay) in rows {
        model
            .set_base(kind, fanin, delay)
            .map_err(|e| Error::parse(line, e.to_string()))?;
    }
    Ok(model)
}

/// One gate of a path with the devices that age its switching edge.
#[derive(Debug, Clone)]
struct Stage {
    base: f64,
    device: Device,
    /// Series network: the whole stack. Parallel network: only the device
    /// gated by the switching input, the one that conducts.
    devices: Vec<TransistorId>,
}

fn stages(path: &Path, design: &DecoderDesign, gdm: &GateDelayModel) -> Result<Vec<Stage>> {
    let scale = gdm.path_scale(&path.label());
    path.gate_chain
        .iter()
        .enumerate()
        .map(|(i, &gid)| {
            let gate = design.gate(gid);
            let network = Network::for_edge(path.stage_output_rises(i));
            let series = gate.kind.is_series(network);
            let switching = path.switching_inputs[i];
            let devices = gate
                .transistors
                .iter()
                .copied()
                .filter(|&t| {
                    let t = design.transistor(t);
                    t.network == network && (series || t.gate_net == switching)
                })
                .collect();
            Ok(Stage {
                base: gdm.base_delay(gate.kind, gate.fanin)? * scale,
                device: network.device(),
                devices,
            })
        })
        .collect()
}

fn chain_delay(stages: &[Stage], gdm: &GateDelayModel, shift: impl Fn(Device, TransistorId) -> Result<f64>) -> Result<f64> {
    let mut total = 0.0;
    for s in stages {
        let shifts = s.devices.iter().map(|&t| shift(s.device, t)).collect::<Result<Vec<_>>>()?;
        total += s.base * gdm.degradation(gdm.combine(shifts.into_iter()))?;
    }
    Ok(total)
}

pub fn nominal_delay(path: &Path, design: &DecoderDesign, gdm: &GateDelayModel) -> Result<f64> {
    Ok(stages(path, design, gdm)?.iter().map(|s| s.base).sum())
}

pub fn aged_delay(
    path: &Path,
    design: &DecoderDesign,
    duty: &DutyProfile,
    bti: &BtiModel,
    years: f64,
    gdm: &GateDelayModel,
) -> Result<f64> {
    if duty.stress_duty.len() != design.transistors.len() {
        return Err(Error::OutOfRange("duty profile does not cover the design".into()));
    }
    let st = stages(path, design, gdm)?;
    chain_delay(&st, gdm, |device, t| bti.delta_vth(device, duty.stress(t).clamp(0.0, 1.0), years))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupCritical {
    pub group: usize,
    pub nominal_critical: f64,
    pub aged_critical: f64,
    /// Index into the path list of the nominal and the aged critical path.
    pub nominal_path: usize,
    pub aged_path: usize,
}

fn argmax(values: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    // first index wins ties
    values.fold(None, |best, (i, v)| match best {
        Some((_, b)) if b >= v => best,
        _ => Some((i, v)),
    })
}

fn group_criticals(design: &DecoderDesign, paths: &[Path], nominal: &[f64], aged: &[f64]) -> Result<Vec<GroupCritical>> {
    (0..design.pre_decoders.len())
        .map(|g| {
            let members = || paths.iter().enumerate().filter(move |(_, p)| p.group == g).map(|(i, _)| i);
            let (np, nc) = argmax(members().map(|i| (i, nominal[i])))
                .ok_or_else(|| Error::OutOfRange(format!("group {g} has no paths")))?;
            let (ap, ac) = argmax(members().map(|i| (i, aged[i]))).expect("group is non-empty");
            Ok(GroupCritical {
                group: g,
                nominal_critical: nc,
                aged_critical: ac,
                nominal_path: np,
                aged_path: ap,
            })
        })
        .collect()
}

/// Per-group nominal and aged critical delays.
pub fn critical_delays(
    design: &DecoderDesign,
    paths: &[Path],
    duty: &DutyProfile,
    bti: &BtiModel,
    years: f64,
    gdm: &GateDelayModel,
    mode: Parallelism,
) -> Result<Vec<GroupCritical>> {
    let nominal = exec::try_map(mode, paths, |p| nominal_delay(p, design, gdm))?;
    let aged = exec::try_map(mode, paths, |p| aged_delay(p, design, duty, bti, years, gdm))?;
    group_criticals(design, paths, &nominal, &aged)
}

pub fn aging_percentage(nominal_critical: f64, aged_critical: f64) -> Result<f64> {
    if !(nominal_critical > 0.0) {
        return Err(Error::OutOfRange(format!("nominal critical delay {nominal_critical} must be positive")));
    }
    if aged_critical == nominal_critical {
        return Ok(100.0);
    }
    Ok(100.0 * aged_critical / nominal_critical)
}

pub fn slack(budget: f64, setup: f64, aged_critical: f64) -> f64 {
    budget - setup - aged_critical
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDelay {
    pub label: String,
    pub group: usize,
    pub output: usize,
    pub driving_bit: u32,
    pub direction: Direction,
    pub through_inverter: bool,
    pub nominal_delay: f64,
    pub aged_delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: usize,
    pub nominal_critical: f64,
    pub aged_critical: f64,
    pub aging_percentage: f64,
    pub nominal_critical_path: String,
    pub aged_critical_path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgingReport {
    pub family: String,
    pub years: f64,
    pub paths: Vec<PathDelay>,
    pub groups: Vec<GroupSummary>,
    /// Worst-group critical delays.
    pub nominal_critical: f64,
    pub aged_critical: f64,
    pub aging_percentage: f64,
    pub timing_budget: f64,
    pub setup_time: f64,
    pub slack_remaining: f64,
    pub violated: bool,
}

/// Evaluate every path and summarize the decoder's aging.
pub fn assess(
    design: &DecoderDesign,
    paths: &[Path],
    duty: &DutyProfile,
    bti: &BtiModel,
    years: f64,
    gdm: &GateDelayModel,
    mode: Parallelism,
) -> Result<AgingReport> {
    let nominal = exec::try_map(mode, paths, |p| nominal_delay(p, design, gdm))?;
    let aged = exec::try_map(mode, paths, |p| aged_delay(p, design, duty, bti, years, gdm))?;
    let crit = group_criticals(design, paths, &nominal, &aged)?;
    let groups = crit
        .iter()
        .map(|c| {
            Ok(GroupSummary {
                group: c.group,
                nominal_critical: c.nominal_critical,
                aged_critical: c.aged_critical,
                aging_percentage: aging_percentage(c.nominal_critical, c.aged_critical)?,
                nominal_critical_path: paths[c.nominal_path].label(),
                aged_critical_path: paths[c.aged_path].label(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let nominal_critical = crit.iter().map(|c| c.nominal_critical).fold(0.0, f64::max);
    let aged_critical = crit.iter().map(|c| c.aged_critical).fold(0.0, f64::max);
    let slack_remaining = slack(design.timing_budget, design.setup_time, aged_critical);
    Ok(AgingReport {
        family: design.family.to_string(),
        years,
        paths: paths
            .iter()
            .zip(nominal.iter().zip(&aged))
            .map(|(p, (&n, &a))| PathDelay {
                label: p.label(),
                group: p.group,
                output: p.output_index,
                driving_bit: p.driving_bit,
                direction: p.direction,
                through_inverter: p.through_inverter,
                nominal_delay: n,
                aged_delay: a,
            })
            .collect(),
        groups,
        nominal_critical,
        aged_critical,
        aging_percentage: aging_percentage(nominal_critical, aged_critical)?,
        timing_budget: design.timing_budget,
        setup_time: design.setup_time,
        slack_remaining,
        violated: slack_remaining < 0.0,
    })
}

impl AgingReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// One row per path, then a per-group block and an overall row.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        w.write_record([
            "path",
            "group",
            "output",
            "driving_bit",
            "direction",
            "through_inverter",
            "nominal_delay",
            "aged_delay",
        ])?;
        for p in &self.paths {
            w.write_record([
                p.label.clone(),
                p.group.to_string(),
                p.output.to_string(),
                p.driving_bit.to_string(),
                p.direction.to_string(),
                p.through_inverter.to_string(),
                p.nominal_delay.to_string(),
                p.aged_delay.to_string(),
            ])?;
        }
        w.write_record([""])?;
        w.write_record([
            "group",
            "nominal_critical",
            "aged_critical",
            "aging_percentage",
            "nominal_critical_path",
            "aged_critical_path",
        ])?;
        for g in &self.groups {
            w.write_record([
                g.group.to_string(),
                g.nominal_critical.to_string(),
                g.aged_critical.to_string(),
                g.aging_percentage.to_string(),
                g.nominal_critical_path.clone(),
                g.aged_critical_path.clone(),
            ])?;
        }
        w.write_record([""])?;
        w.write_record([
            "summary",
            "nominal_critical",
            "aged_critical",
            "aging_percentage",
            "slack_remaining",
            "violated",
        ])?;
        w.write_record([
            "worst_group".to_string(),
            self.nominal_critical.to_string(),
            self.aged_critical.to_string(),
            self.aging_percentage.to_string(),
            self.slack_remaining.to_string(),
            self.violated.to_string(),
        ])?;
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Fast evaluator of one group's paths as a function of the group's input
/// histogram. Stress duty of every device in a pre-decoder is linear in
/// that histogram, so a profile never has to be rebuilt.
#[derive(Debug, Clone)]
pub struct GroupEvaluator {
    pub group: usize,
    pub outputs: usize,
    /// `stressed[t][v]`: local device `t` is under stress when the group carries `v`.
    stressed: Vec<Vec<bool>>,
    device: Vec<Device>,
    paths: Vec<LocalPath>,
    labels: Vec<String>,
}

#[derive(Debug, Clone)]
struct LocalPath {
    output: usize,
    stages: Vec<LocalStage>,
}

#[derive(Debug, Clone)]
struct LocalStage {
    base: f64,
    device: Device,
    devices: Vec<usize>,
}

impl GroupEvaluator {
    pub fn new(design: &DecoderDesign, paths: &[Path], group: usize, gdm: &GateDelayModel) -> Result<Self> {
        let pd = design
            .pre_decoders
            .get(group)
            .ok_or_else(|| Error::OutOfRange(format!("no group {group}")))?;
        let logic = &design.group_logic()[group];
        let mut local: BTreeMap<TransistorId, usize> = BTreeMap::new();
        let mut stressed = Vec::new();
        let mut device = Vec::new();
        let mut out_paths = Vec::new();
        let mut labels = Vec::new();
        for p in paths.iter().filter(|p| p.group == group) {
            let mut ls = Vec::new();
            for s in stages(p, design, gdm)? {
                let mut devices = Vec::with_capacity(s.devices.len());
                for t in s.devices {
                    let next = local.len();
                    let idx = *local.entry(t).or_insert_with(|| {
                        let tr = design.transistor(t);
                        let col = logic
                            .nets
                            .iter()
                            .position(|&n| n == tr.gate_net)
                            .expect("gate net belongs to the group");
                        stressed.push(
                            logic
                                .values
                                .iter()
                                .map(|row| crate::decoder::is_stressed(tr.device, row[col]))
                                .collect(),
                        );
                        device.push(tr.device);
                        next
                    });
                    devices.push(idx);
                }
                ls.push(LocalStage {
                    base: s.base,
                    device: s.device,
                    devices,
                });
            }
            out_paths.push(LocalPath {
                output: p.output_index,
                stages: ls,
            });
            labels.push(p.label());
        }
        if out_paths.is_empty() {
            return Err(Error::OutOfRange(format!("group {group} has no paths")));
        }
        Ok(GroupEvaluator {
            group,
            outputs: pd.output_count(),
            stressed,
            device,
            paths: out_paths,
            labels,
        })
    }

    /// All groups of a design.
    pub fn for_design(design: &DecoderDesign, paths: &[Path], gdm: &GateDelayModel) -> Result<Vec<Self>> {
        (0..design.pre_decoders.len())
            .map(|g| GroupEvaluator::new(design, paths, g, gdm))
            .collect()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn path_outputs(&self) -> impl Iterator<Item = usize> + '_ {
        self.paths.iter().map(|p| p.output)
    }

    pub fn nominal(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.stages.iter().map(|s| s.base).sum()).collect()
    }

    /// Aged delay of every path of the group under input histogram `hist`.
    pub fn path_delays(&self, hist: &[f64], bti: &BtiModel, years: f64, gdm: &GateDelayModel) -> Result<Vec<f64>> {
        if hist.len() != self.outputs {
            return Err(Error::OutOfRange(format!(
                "histogram has {} entries, group {} has {} values",
                hist.len(),
                self.group,
                self.outputs
            )));
        }
        let shift: Vec<f64> = self
            .stressed
            .iter()
            .zip(&self.device)
            .map(|(row, &dev)| {
                let s: f64 = row.iter().zip(hist).filter(|(&on, _)| on).map(|(_, &h)| h).sum();
                bti.delta_vth(dev, s.clamp(0.0, 1.0), years)
            })
            .collect::<Result<_>>()?;
        self.paths
            .iter()
            .map(|p| {
                let mut total = 0.0;
                for s in &p.stages {
                    debug_assert!(s.devices.iter().all(|&d| self.device[d] == s.device));
                    total += s.base * gdm.degradation(gdm.combine(s.devices.iter().map(|&d| shift[d])))?;
                }
                Ok(total)
            })
            .collect()
    }

    /// Aged critical delay of each output.
    pub fn output_delays(&self, hist: &[f64], bti: &BtiModel, years: f64, gdm: &GateDelayModel) -> Result<Vec<f64>> {
        let delays = self.path_delays(hist, bti, years, gdm)?;
        let mut out = vec![0.0f64; self.outputs];
        for (p, d) in self.paths.iter().zip(delays) {
            out[p.output] = out[p.output].max(d);
        }
        Ok(out)
    }

    /// Aged critical delay of the group.
    pub fn critical(&self, hist: &[f64], bti: &BtiModel, years: f64, gdm: &GateDelayModel) -> Result<f64> {
        Ok(self.path_delays(hist, bti, years, gdm)?.into_iter().fold(0.0, f64::max))
    }
}

/// Aging of a whole design as a function of per-group input histograms.
#[derive(Debug, Clone)]
pub struct AgingEvaluator {
    pub groups: Vec<GroupEvaluator>,
    pub bti: BtiModel,
    pub gdm: GateDelayModel,
    pub years: f64,
    nominal_critical: f64,
}

impl AgingEvaluator {
    pub fn new(design: &DecoderDesign, paths: &[Path], bti: &BtiModel, gdm: &GateDelayModel, years: f64) -> Result<Self> {
        if !(years > 0.0) {
            return Err(Error::OutOfRange(format!("age {years} years must be positive")));
        }
        let groups = GroupEvaluator::for_design(design, paths, gdm)?;
        let nominal_critical = groups
            .iter()
            .flat_map(|g| g.nominal())
            .fold(0.0, f64::max);
        Ok(AgingEvaluator {
            groups,
            bti: bti.clone(),
            gdm: gdm.clone(),
            years,
            nominal_critical,
        })
    }

    pub fn at_years(&self, years: f64) -> Result<Self> {
        if !(years > 0.0) {
            return Err(Error::OutOfRange(format!("age {years} years must be positive")));
        }
        Ok(AgingEvaluator { years, ..self.clone() })
    }

    /// Worst nominal critical delay over all groups.
    pub fn nominal_critical(&self) -> f64 {
        self.nominal_critical
    }

    pub fn output_delays(&self, group: usize, hist: &[f64]) -> Result<Vec<f64>> {
        self.groups[group].output_delays(hist, &self.bti, self.years, &self.gdm)
    }

    pub fn group_critical(&self, group: usize, hist: &[f64]) -> Result<f64> {
        self.groups[group].critical(hist, &self.bti, self.years, &self.gdm)
    }

    /// Aged worst-group critical delay.
    pub fn aged_critical(&self, hists: &[Vec<f64>]) -> Result<f64> {
        if hists.len() != self.groups.len() {
            return Err(Error::OutOfRange(format!("{} histograms for {} groups", hists.len(), self.groups.len())));
        }
        let mut worst = 0.0f64;
        for (g, h) in hists.iter().enumerate() {
            worst = worst.max(self.group_critical(g, h)?);
        }
        Ok(worst)
    }

    pub fn aging_percentage(&self, hists: &[Vec<f64>]) -> Result<f64> {
        aging_percentage(self.nominal_critical, self.aged_critical(hists)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::{enumerate_paths, DecoderConfig, Family};

    fn uniform_duty(d: &DecoderDesign) -> DutyProfile {
        let h = d.pre_decoders.iter().map(|pd| vec![1.0 / pd.output_count() as f64; pd.output_count()]).collect();
        DutyProfile::from_group_histograms(d, h, 1).unwrap()
    }

    #[test]
    fn nominal_is_chain_sum() {
        let d = DecoderConfig::new(Family::NandNor).build().unwrap();
        let gdm = GateDelayModel::new(1.3, 0.95, 0.4)
            .unwrap()
            .with_base(GateKind::Inv, 1, 0.5)
            .unwrap()
            .with_base(GateKind::Nand, 3, 1.0)
            .unwrap();
        for p in enumerate_paths(&d) {
            let expected = if p.through_inverter { 1.5 } else { 1.0 };
            assert_eq!(nominal_delay(&p, &d, &gdm).unwrap(), expected);
        }
    }

    #[test]
    fn missing_gate_is_an_error() {
        let d = DecoderConfig::new(Family::NandNor).build().unwrap();
        let gdm = GateDelayModel::new(1.3, 0.95, 0.4).unwrap().with_base(GateKind::Inv, 1, 0.5).unwrap();
        let p = &enumerate_paths(&d)[0];
        assert!(matches!(nominal_delay(p, &d, &gdm), Err(Error::MissingGateDelay { fanin: 3, .. })));
    }

    #[test]
    fn inverter_paths_are_slower() {
        let d = DecoderConfig::with_groups(Family::NandNor, &[3]).build().unwrap();
        let gdm = GateDelayModel::default_model();
        let paths = enumerate_paths(&d);
        for a in &paths {
            for b in paths.iter().filter(|b| b.output_index == a.output_index && b.direction == a.direction) {
                if a.through_inverter && !b.through_inverter {
                    assert!(nominal_delay(a, &d, &gdm).unwrap() > nominal_delay(b, &d, &gdm).unwrap());
                }
            }
        }
    }

    #[test]
    fn single_gate_closed_form() {
        let gdm = GateDelayModel::new(1.5, 1.0, 0.3).unwrap();
        let dv = 0.05;
        let direct = (0.7f64 / 0.65).powf(1.5);
        assert!((gdm.degradation(dv).unwrap() - direct).abs() < 1e-15);
        assert!(matches!(gdm.degradation(0.7), Err(Error::DegradationOverflow { .. })));
    }

    #[test]
    fn parser_and_round_trip() {
        let m = GateDelayModel::default_model();
        assert_eq!(m.base_delay(GateKind::Nand, 3).unwrap(), 1.32);
        let back = load_gate_model(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert!(load_gate_model("alpha=3\nINV,1,1").is_err());
        assert!(matches!(load_gate_model("INV,1,-1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(load_gate_model("INV,x,1"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn evaluator_matches_profile_path() {
        let bti = BtiModel::default_model();
        let gdm = GateDelayModel::default_model();
        for family in Family::ALL {
            let d = DecoderConfig::new(family).build().unwrap();
            let paths = enumerate_paths(&d);
            let hist = vec![
                vec![0.3, 0.1, 0.05, 0.05, 0.2, 0.1, 0.1, 0.1],
                vec![0.9, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.125; 8],
            ];
            let duty = DutyProfile::from_group_histograms(&d, hist.clone(), 1).unwrap();
            for ev in GroupEvaluator::for_design(&d, &paths, &gdm).unwrap() {
                let fast = ev.path_delays(&hist[ev.group], &bti, 3.0, &gdm).unwrap();
                let slow: Vec<f64> = paths
                    .iter()
                    .filter(|p| p.group == ev.group)
                    .map(|p| aged_delay(p, &d, &duty, &bti, 3.0, &gdm).unwrap())
                    .collect();
                for (a, b) in fast.iter().zip(&slow) {
                    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn histogram_evaluator_matches_report() {
        let bti = BtiModel::default_model();
        let gdm = GateDelayModel::default_model();
        let d = DecoderConfig::new(Family::NandNor).build().unwrap();
        let paths = enumerate_paths(&d);
        let duty = uniform_duty(&d);
        let r = assess(&d, &paths, &duty, &bti, 5.0, &gdm, Parallelism::Sequential).unwrap();
        let ev = AgingEvaluator::new(&d, &paths, &bti, &gdm, 5.0).unwrap();
        assert!((ev.aging_percentage(&duty.group_histograms).unwrap() - r.aging_percentage).abs() < 1e-10);
        assert_eq!(ev.nominal_critical(), r.nominal_critical);
    }

    #[test]
    fn uniform_duty_keeps_critical_path() {
        let bti = BtiModel::default_model();
        let gdm = GateDelayModel::default_model();
        for family in Family::ALL {
            let d = DecoderConfig::new(family).build().unwrap();
            let paths = enumerate_paths(&d);
            let mut duty = uniform_duty(&d);
            duty.stress_duty.iter_mut().for_each(|s| *s = 0.6);
            for c in critical_delays(&d, &paths, &duty, &bti, 3.0, &gdm, Parallelism::Sequential).unwrap() {
                // nominal ties may resolve to a different member of the tied set
                let n = nominal_delay(&paths[c.aged_path], &d, &gdm).unwrap();
                assert_eq!(n, c.nominal_critical);
                assert!(c.aged_critical > c.nominal_critical);
            }
        }
    }

    #[test]
    fn arithmetic_helpers() {
        assert_eq!(aging_percentage(2.0, 2.0).unwrap(), 100.0);
        assert!((aging_percentage(1.0, 1.2).unwrap() - 120.0).abs() < 1e-12);
        assert!(aging_percentage(0.0, 1.0).is_err());
        assert!((slack(2.0, 0.2, 1.5) - 0.3).abs() < 1e-12);
        assert_eq!(slack(2.0, 0.5, 1.5), 0.0);
        assert!(slack(2.0, 0.2, 1.9) < 0.0);
    }

    #[test]
    fn report_serializes() {
        let d = DecoderConfig::new(Family::AndAnd).build().unwrap();
        let paths = enumerate_paths(&d);
        let r = assess(
            &d,
            &paths,
            &uniform_duty(&d),
            &BtiModel::default_model(),
            3.0,
            &GateDelayModel::default_model(),
            Parallelism::Parallel,
        )
        .unwrap();
        assert!(r.aging_percentage > 100.0);
        assert_eq!(r.violated, r.slack_remaining < 0.0);
        let csv = r.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 1 + 144 + 1 + 1 + 3 + 1 + 2);
        let back: AgingReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
