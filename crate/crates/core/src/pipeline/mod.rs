// SPDX-License-Identifier: Apache-2.0

//! Experiment drivers shared by the command line tool and the tests.

mod experiments;
mod oracle;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bti::BtiModel;
use crate::decoder::{enumerate_paths, DecoderConfig, DecoderDesign, Path};
use crate::error::{Error, Result};
use crate::exec::Parallelism;
use crate::rejuvenation::{
    design_aware_weights, design_workload_aware_plan, plan_from_weights, universal_plan_with_length,
    DesignAwareWeights, PlanKind, RejuvenationPlan, SearchOptions,
};
use crate::timing::{AgingEvaluator, GateDelayModel};
use crate::trace::{check_trace, duty_profile, parse_trace, preset, synth_workload, DutyProfile, MemoryTrace, WorkloadSpec};

pub use experiments::{
    compare, compare_csv, lifetime_extension, sweep_overhead, sweep_years, overhead_csv, years_csv, CompareRow,
    CompareTable, Extension, OverheadSeries, Reduction, YearsSeries, DEFAULT_OVERHEAD_RATIOS,
};
pub use oracle::{
    additivity_check, design_aware_grid_check, grid_minimum, interleaving_check, oracle, simplex_grid,
    workload_aware_grid_check, AdditivityCheck, GridCheck, InterleavingCheck, OracleReport, WorkloadAwareCheck,
    ORACLE_LENGTHENED_PATH, ORACLE_LENGTHEN_FACTOR,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    NoRejuvenation,
    Universal,
    DesignAware,
    DesignWorkloadAware,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::NoRejuvenation,
        Strategy::Universal,
        Strategy::DesignAware,
        Strategy::DesignWorkloadAware,
    ];

    /// Column name in CSV output.
    pub fn column(self) -> &'static str {
        match self {
            Strategy::NoRejuvenation => "no_rej",
            Strategy::Universal => "universal",
            Strategy::DesignAware => "design_aware",
            Strategy::DesignWorkloadAware => "dw",
        }
    }

    fn needs_weights(self) -> bool {
        matches!(self, Strategy::DesignAware | Strategy::DesignWorkloadAware)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "none" | "no-rej" | "norej" => Ok(Strategy::NoRejuvenation),
            "universal" | "u" => Ok(Strategy::Universal),
            "design-aware" | "da" => Ok(Strategy::DesignAware),
            "dw" | "d&w" | "design-workload-aware" => Ok(Strategy::DesignWorkloadAware),
            _ => Err(Error::Config(format!(
                "unknown strategy `{s}` (expected none, universal, design-aware or dw)"
            ))),
        }
    }
}

/// Where a functional workload comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum WorkloadSource {
    Preset(String),
    Spec(WorkloadSpec),
    /// Trace text; `path`, when known, is named in parse errors.
    Trace { name: String, text: String, path: Option<std::path::PathBuf> },
}

impl WorkloadSource {
    pub fn name(&self) -> &str {
        match self {
            WorkloadSource::Preset(n) => n,
            WorkloadSource::Spec(s) => &s.name,
            WorkloadSource::Trace { name, .. } => name,
        }
    }

    /// Materialize the trace for `design`. `seed` is added to a synthetic
    /// spec's own seed, so seed 0 reproduces the bundled presets.
    pub fn resolve(&self, design: &DecoderDesign, seed: u64) -> Result<MemoryTrace> {
        let synth = |spec: &WorkloadSpec| {
            let spec = spec.clone().with_seed(spec.seed.wrapping_add(seed));
            synth_workload(&spec, design)
        };
        match self {
            WorkloadSource::Preset(name) => {
                let spec = preset(name).ok_or_else(|| Error::Config(format!("unknown preset workload `{name}`")))?;
                synth(&spec)
            }
            WorkloadSource::Spec(spec) => synth(spec),
            WorkloadSource::Trace { text, path, .. } => {
                let t = parse_trace(text, design.address_width).and_then(|t| check_trace(&t, design).map(|_| t));
                match path {
                    Some(p) => t.map_err(|e| e.in_file(p)),
                    None => t,
                }
            }
        }
    }
}

/// The eight benchmark presets.
pub fn preset_sources() -> Vec<WorkloadSource> {
    crate::trace::PRESET_BENCHMARKS
        .iter()
        .map(|n| WorkloadSource::Preset((*n).to_string()))
        .collect()
}

/// A named functional workload bound to a design.
#[derive(Debug, Clone)]
pub struct Workload {
    pub name: String,
    pub trace: MemoryTrace,
    pub duty: DutyProfile,
}

/// One design with its models, ready for experiments.
#[derive(Debug, Clone)]
pub struct Setup {
    pub design: DecoderDesign,
    pub paths: Vec<Path>,
    pub bti: BtiModel,
    pub gdm: GateDelayModel,
    pub eval: AgingEvaluator,
    pub search: SearchOptions,
    /// Routine length for weighted plans; universal plans visit every address once.
    pub routine_length: u64,
    pub mode: Parallelism,
}

impl Setup {
    pub fn new(config: &DecoderConfig, bti: &BtiModel, gdm: &GateDelayModel, years: f64) -> Result<Self> {
        let design = config.build()?;
        let paths = enumerate_paths(&design);
        let eval = AgingEvaluator::new(&design, &paths, bti, gdm, years)?;
        Ok(Setup {
            routine_length: design.address_count(),
            design,
            paths,
            bti: bti.clone(),
            gdm: gdm.clone(),
            eval,
            search: SearchOptions::default(),
            mode: Parallelism::default(),
        })
    }

    pub fn with_search(mut self, search: SearchOptions) -> Self {
        self.search = search;
        self
    }

    pub fn with_routine_length(mut self, length: u64) -> Self {
        self.routine_length = length;
        self
    }

    pub fn with_mode(mut self, mode: Parallelism) -> Self {
        self.mode = mode;
        self
    }

    pub fn years(&self) -> f64 {
        self.eval.years
    }

    pub fn workload(&self, source: &WorkloadSource, seed: u64) -> Result<Workload> {
        let trace = source.resolve(&self.design, seed)?;
        let duty = duty_profile(&trace, &self.design, self.mode)?;
        Ok(Workload {
            name: source.name().to_string(),
            trace,
            duty,
        })
    }

    pub fn workloads(&self, sources: &[WorkloadSource], seed: u64) -> Result<Vec<Workload>> {
        sources.iter().map(|s| self.workload(s, seed)).collect()
    }

    /// Design-aware weights; a search that fails to converge is an error.
    pub fn design_aware(&self) -> Result<DesignAwareWeights> {
        let da = design_aware_weights(&self.eval, &self.search)?;
        if !da.converged {
            let worst = da.groups.iter().map(|g| g.spread).fold(0.0, f64::max);
            return Err(Error::Convergence(format!(
                "design-aware weights for {}: long-path spread {worst:.3e} above tolerance {:.3e} after {} iterations",
                self.design.family,
                self.search.tol,
                da.groups.iter().map(|g| g.iterations).max().unwrap_or(0)
            )));
        }
        Ok(da)
    }

    /// Design-aware weights only when one of `strategies` needs them.
    pub fn design_aware_for(&self, strategies: &[Strategy]) -> Result<Option<DesignAwareWeights>> {
        if strategies.iter().any(|s| s.needs_weights()) {
            self.design_aware().map(Some)
        } else {
            Ok(None)
        }
    }

    /// The rejuvenation plan for `strategy`, or `None` when nothing runs.
    pub fn plan(
        &self,
        strategy: Strategy,
        beta: f64,
        functional: &DutyProfile,
        weights: Option<&DesignAwareWeights>,
    ) -> Result<Option<RejuvenationPlan>> {
        if strategy == Strategy::NoRejuvenation || beta == 0.0 {
            return Ok(None);
        }
        let need = || {
            weights.ok_or_else(|| Error::Config(format!("strategy {strategy} needs design-aware weights")))
        };
        let plan = match strategy {
            Strategy::NoRejuvenation => unreachable!("handled above"),
            Strategy::Universal => universal_plan_with_length(&self.design, beta, self.design.address_count())?,
            Strategy::DesignAware => {
                plan_from_weights(&self.design, PlanKind::DesignAware, need()?.weights(), beta, self.routine_length)?
            }
            Strategy::DesignWorkloadAware => design_workload_aware_plan(
                &self.design,
                &self.eval,
                need()?,
                functional,
                beta,
                self.routine_length,
                &self.search,
            )?,
        };
        Ok(Some(plan))
    }

    /// Combined duty of `functional` and the plan, by profile mixing.
    pub fn mixed(&self, functional: &DutyProfile, plan: Option<&RejuvenationPlan>) -> Result<DutyProfile> {
        match plan {
            None => Ok(functional.clone()),
            Some(p) => crate::rejuvenation::mix(functional, p, &self.design),
        }
    }

    /// Aging percentage of `functional` under `strategy` at overhead `beta`.
    pub fn aging(
        &self,
        strategy: Strategy,
        beta: f64,
        functional: &DutyProfile,
        weights: Option<&DesignAwareWeights>,
    ) -> Result<f64> {
        let plan = self.plan(strategy, beta, functional, weights)?;
        let duty = self.mixed(functional, plan.as_ref())?;
        self.eval.aging_percentage(&duty.group_histograms)
    }

    /// Aging of running only the design-aware workload, the lowest reachable.
    pub fn minimum(&self, weights: &DesignAwareWeights) -> Result<f64> {
        crate::timing::aging_percentage(self.eval.nominal_critical(), weights.minimax_delay)
    }
}
