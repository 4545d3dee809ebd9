// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use decoder_aging::bti::{load_calibration, BtiModel};
use decoder_aging::decoder::{DecoderConfig, Family};
use decoder_aging::error::{Error, Result};
use decoder_aging::exec::Parallelism;
use decoder_aging::pipeline::{
    compare, compare_csv, oracle, overhead_csv, preset_sources, sweep_overhead, sweep_years, years_csv, Setup,
    Strategy, WorkloadSource, DEFAULT_OVERHEAD_RATIOS,
};
use decoder_aging::rejuvenation::{emit_routine, SearchOptions};
use decoder_aging::timing::{assess, load_gate_model, GateDelayModel};
use decoder_aging::trace::{preset, WorkloadSpec};

#[derive(Parser)]
#[command(name = "decoder-aging", version, about = "BTI aging and rejuvenation analysis for memory address decoders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Aging report for every path of one design under one workload.
    Assess(Common),
    /// Aging of each workload under each strategy.
    Compare(Common),
    /// Workload-averaged aging against rejuvenation overhead.
    ///
    /// Here `--overhead` values are rejuvenation-to-functional cycle ratios
    /// (1.6 means 1.6 routine cycles per functional cycle), converted to the
    /// routine's cycle fraction as ratio / (1 + ratio).
    SweepOverhead(Common),
    /// Aging over a range of ages with and without rejuvenation.
    SweepYears(Common),
    /// Brute-force cross-checks of the search and mixing code.
    Oracle(Common),
    /// Write the trace of a synthetic workload spec.
    SynthTrace(Common),
    /// Write the firmware routine descriptor of a rejuvenation plan.
    EmitRoutine(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Decoder family (AND_AND, NAND_NOR) or design file; repeatable.
    #[arg(long)]
    design: Vec<String>,
    /// BTI calibration file.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Gate delay model file.
    #[arg(long = "gate-model")]
    gate_model: Option<PathBuf>,
    /// Memory trace file; repeatable.
    #[arg(long)]
    trace: Vec<PathBuf>,
    /// Preset name or workload spec file; repeatable.
    #[arg(long = "workload-spec")]
    workload_spec: Vec<String>,
    /// none, universal, design-aware or dw; repeatable.
    #[arg(long)]
    strategy: Vec<String>,
    /// Rejuvenation overhead as a fraction of all cycles (a ratio for sweep-overhead); repeatable.
    #[arg(long)]
    overhead: Vec<f64>,
    /// Age in years; repeatable.
    #[arg(long)]
    years: Vec<f64>,
    /// Output directory. Without it the main table goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Added to the seed of every synthetic workload.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Convergence tolerance of the weight search, in delay units.
    #[arg(long, default_value_t = SearchOptions::default().tol)]
    tol: f64,
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(e).in_file(path))
}

impl Common {
    fn mode(&self) -> Parallelism {
        if self.sequential {
            Parallelism::Sequential
        } else {
            Parallelism::Parallel
        }
    }

    fn designs(&self, default_both: bool) -> Result<Vec<DecoderConfig>> {
        if self.design.is_empty() {
            let fams: &[Family] = if default_both { &Family::ALL } else { &Family::ALL[..1] };
            return Ok(fams.iter().map(|&f| DecoderConfig::new(f)).collect());
        }
        self.design
            .iter()
            .map(|d| match d.parse::<Family>() {
                Ok(f) => Ok(DecoderConfig::new(f)),
                Err(_) => {
                    let p = Path::new(d);
                    DecoderConfig::parse(&read(p)?).map_err(|e| e.in_file(p))
                }
            })
            .collect()
    }

    fn bti(&self) -> Result<BtiModel> {
        match &self.calibration {
            None => Ok(BtiModel::default_model()),
            Some(p) => load_calibration(&read(p)?).map_err(|e| e.in_file(p)),
        }
    }

    fn gdm(&self) -> Result<GateDelayModel> {
        match &self.gate_model {
            None => Ok(GateDelayModel::default_model()),
            Some(p) => load_gate_model(&read(p)?).map_err(|e| e.in_file(p)),
        }
    }

    fn search(&self) -> SearchOptions {
        SearchOptions {
            tol: self.tol,
            ..SearchOptions::default()
        }
    }

    /// Workloads from the flags, or `default` when none are given.
    fn workloads(&self, default: Vec<WorkloadSource>) -> Result<Vec<WorkloadSource>> {
        let mut out = Vec::new();
        for s in &self.workload_spec {
            if preset(s).is_some() {
                out.push(WorkloadSource::Preset(s.clone()));
            } else {
                let p = Path::new(s);
                out.push(WorkloadSource::Spec(WorkloadSpec::parse(&read(p)?).map_err(|e| e.in_file(p))?));
            }
        }
        for p in &self.trace {
            let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
            out.push(WorkloadSource::Trace { name, text: read(p)?, path: Some(p.clone()) });
        }
        Ok(if out.is_empty() { default } else { out })
    }

    fn strategies(&self, default: &[Strategy]) -> Result<Vec<Strategy>> {
        if self.strategy.is_empty() {
            return Ok(default.to_vec());
        }
        self.strategy.iter().map(|s| s.parse()).collect()
    }

    fn one(&self, values: &[f64], what: &str, default: f64) -> Result<f64> {
        match values {
            [] => Ok(default),
            [x] => Ok(*x),
            _ => Err(Error::Config(format!("{what} takes a single value for this command"))),
        }
    }

    fn setups(&self, years: f64, default_both: bool) -> Result<Vec<Setup>> {
        let (bti, gdm) = (self.bti()?, self.gdm()?);
        self.designs(default_both)?
            .iter()
            .map(|c| Ok(Setup::new(c, &bti, &gdm, years)?.with_search(self.search()).with_mode(self.mode())))
            .collect()
    }

    /// Write `files` under `--out`, or print the first one.
    fn emit(&self, files: &[(&str, String)]) -> Result<()> {
        match &self.out {
            None => {
                print!("{}", files[0].1);
                Ok(())
            }
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| Error::Io(e).in_file(dir))?;
                for (name, body) in files {
                    let p = dir.join(name);
                    fs::write(&p, body).map_err(|e| Error::Io(e).in_file(&p))?;
                }
                Ok(())
            }
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Assess(c) => {
            let years = c.one(&c.years, "--years", 3.0)?;
            let beta = c.one(&c.overhead, "--overhead", 0.01)?;
            let strategies = c.strategies(&[Strategy::NoRejuvenation])?;
            let sources = c.workloads(vec![WorkloadSource::Preset("uniform".into())])?;
            let mut files = vec![(String::new(), String::new())];
            let mut summary = String::from("family,workload,strategy,beta,years,aging_percentage,slack_remaining,violated\n");
            for s in c.setups(years, false)? {
                let weights = s.design_aware_for(&strategies)?;
                for w in s.workloads(&sources, c.seed)? {
                    for &strategy in &strategies {
                        let plan = s.plan(strategy, beta, &w.duty, weights.as_ref())?;
                        let duty = s.mixed(&w.duty, plan.as_ref())?;
                        let report = assess(&s.design, &s.paths, &duty, &s.bti, years, &s.gdm, s.mode)?;
                        summary += &format!(
                            "{},{},{},{beta},{years},{:.6},{:.6},{}\n",
                            report.family, w.name, strategy, report.aging_percentage, report.slack_remaining, report.violated
                        );
                        let stem = format!("assess_{}_{}_{}", report.family, w.name, strategy);
                        files.push((format!("{stem}.json"), report.to_json()?));
                        files.push((format!("{stem}.csv"), report.to_csv()?));
                    }
                }
            }
            files[0] = ("assess_summary.csv".into(), summary);
            let refs: Vec<(&str, String)> = files.iter().map(|(n, b)| (n.as_str(), b.clone())).collect();
            c.emit(&refs)
        }
        Command::Compare(c) => {
            let years = c.one(&c.years, "--years", 3.0)?;
            let beta = c.one(&c.overhead, "--overhead", 0.01)?;
            let strategies = c.strategies(&Strategy::ALL)?;
            let sources = c.workloads(preset_sources())?;
            let tables = c
                .setups(years, true)?
                .iter()
                .map(|s| compare(s, &s.workloads(&sources, c.seed)?, &strategies, beta))
                .collect::<Result<Vec<_>>>()?;
            c.emit(&[("compare.csv", compare_csv(&tables)?), ("compare.json", json(&tables)?)])
        }
        Command::SweepOverhead(c) => {
            let years = c.one(&c.years, "--years", 3.0)?;
            let ratios = if c.overhead.is_empty() { DEFAULT_OVERHEAD_RATIOS.to_vec() } else { c.overhead.clone() };
            let strategies = c.strategies(&[Strategy::DesignWorkloadAware])?;
            let sources = c.workloads(preset_sources())?;
            let sweeps = c
                .setups(years, true)?
                .iter()
                .map(|s| sweep_overhead(s, &s.workloads(&sources, c.seed)?, &strategies, &ratios))
                .collect::<Result<Vec<_>>>()?;
            c.emit(&[("overhead.csv", overhead_csv(&sweeps)?), ("overhead.json", json(&sweeps)?)])
        }
        Command::SweepYears(c) => {
            let beta = c.one(&c.overhead, "--overhead", 0.01)?;
            let years = if c.years.is_empty() { (1..=10).map(f64::from).collect() } else { c.years.clone() };
            let strategy = match c.strategies(&[Strategy::Universal])?.as_slice() {
                [s] => *s,
                _ => return Err(Error::Config("--strategy takes a single value for sweep-years".into())),
            };
            let sources = c.workloads(vec![WorkloadSource::Preset("fir".into())])?;
            let mut sweeps = Vec::new();
            for s in c.setups(3.0, true)? {
                for w in s.workloads(&sources, c.seed)? {
                    sweeps.push(sweep_years(&s, &w, strategy, beta, &years)?);
                }
            }
            c.emit(&[("years.csv", years_csv(&sweeps)?), ("years.json", json(&sweeps)?)])
        }
        Command::Oracle(c) => {
            let years = c.one(&c.years, "--years", 3.0)?;
            let report = oracle(&c.setups(years, true)?, c.seed)?;
            let mut text = String::new();
            for g in &report.design_aware {
                text += &format!(
                    "design-aware {}: search {:.6} grid {:.6} gap {:+.3e} relieving value {} weight {:.4} spread {:.2e} converged {}\n",
                    g.family, g.search_delay, g.grid_delay, g.relative_gap, g.relieving_value, g.relieving_weight, g.spread, g.converged
                );
            }
            for w in &report.workload_aware {
                text += &format!(
                    "workload-aware {} beta {}: dw {:.6} universal {:.6} design-aware {:.6} grid {:.6}\n",
                    w.family, w.beta, w.dw_delay, w.universal_delay, w.design_aware_delay, w.grid_delay
                );
            }
            for i in &report.interleaving {
                text += &format!(
                    "interleaving {} {} {}: max |analytic - interleaved| = {:.3e}\n",
                    i.family, i.workload, i.strategy, i.max_abs_diff
                );
            }
            text += &format!(
                "additivity {}: {} splits, max mismatch {}\n",
                report.additivity.workload, report.additivity.splits, report.additivity.max_mismatch
            );
            c.emit(&[("oracle.txt", text), ("oracle.json", json(&report)?)])
        }
        Command::SynthTrace(c) => {
            let sources = c.workloads(vec![WorkloadSource::Preset("uniform".into())])?;
            let setups = c.setups(3.0, false)?;
            let s = &setups[0];
            let traces: Vec<(String, String)> = sources
                .iter()
                .map(|w| Ok((format!("{}.trace", w.name()), w.resolve(&s.design, c.seed)?.to_text())))
                .collect::<Result<_>>()?;
            let refs: Vec<(&str, String)> = traces.iter().map(|(n, b)| (n.as_str(), b.clone())).collect();
            c.emit(&refs)
        }
        Command::EmitRoutine(c) => {
            let years = c.one(&c.years, "--years", 3.0)?;
            let beta = c.one(&c.overhead, "--overhead", 0.01)?;
            let strategy = match c.strategies(&[Strategy::Universal])?.as_slice() {
                [s] => *s,
                _ => return Err(Error::Config("--strategy takes a single value for emit-routine".into())),
            };
            let setups = c.setups(years, false)?;
            let s = &setups[0];
            let sources = c.workloads(vec![WorkloadSource::Preset("uniform".into())])?;
            let w = s.workload(&sources[0], c.seed)?;
            let weights = s.design_aware_for(&[strategy])?;
            let plan = s
                .plan(strategy, beta, &w.duty, weights.as_ref())?
                .ok_or_else(|| Error::Config("no routine runs for this strategy and overhead".into()))?;
            c.emit(&[("routine.txt", emit_routine(&plan, &s.design)), ("plan.json", plan.to_json()?)])
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
