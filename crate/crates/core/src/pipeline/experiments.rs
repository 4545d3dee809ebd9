// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::{Setup, Strategy, Workload};
use crate::error::{Error, Result};
use crate::exec;
use crate::rejuvenation::ratio_to_beta;

/// Rejuvenation-to-functional cycle ratios of the overhead sweep.
pub const DEFAULT_OVERHEAD_RATIOS: [f64; 7] = [0.0, 0.05, 0.10, 0.20, 0.40, 0.80, 1.60];

fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn require_workloads(workloads: &[Workload]) -> Result<()> {
    if workloads.is_empty() {
        return Err(Error::Config("no workloads given".into()));
    }
    Ok(())
}

fn with_baseline(strategies: &[Strategy]) -> Vec<Strategy> {
    let mut s = vec![Strategy::NoRejuvenation];
    s.extend(strategies.iter().copied().filter(|&x| x != Strategy::NoRejuvenation));
    s.sort();
    s.dedup();
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub workload: String,
    /// Aging percentage per strategy, in table order.
    pub aging: Vec<f64>,
}

/// Aging reduction relative to no rejuvenation, over workloads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub strategy: Strategy,
    pub min: f64,
    pub avg: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareTable {
    pub family: String,
    pub beta: f64,
    pub years: f64,
    pub strategies: Vec<Strategy>,
    pub rows: Vec<CompareRow>,
    pub average: Vec<f64>,
    /// Aging when only the design-aware workload runs.
    pub minimum: Option<f64>,
    pub reductions: Vec<Reduction>,
}

/// `100 (no_rej - s) / (no_rej - 100)`; zero when there is nothing to recover.
fn reduction(no_rej: f64, s: f64) -> f64 {
    if no_rej <= 100.0 {
        0.0
    } else {
        100.0 * (no_rej - s) / (no_rej - 100.0)
    }
}

/// Aging of every workload under each strategy at overhead `beta`.
/// No rejuvenation is always included as the baseline column.
pub fn compare(setup: &Setup, workloads: &[Workload], strategies: &[Strategy], beta: f64) -> Result<CompareTable> {
    require_workloads(workloads)?;
    let strategies = with_baseline(strategies);
    let weights = setup.design_aware_for(&strategies)?;
    let rows = exec::try_map(setup.mode, workloads, |w| {
        let aging = strategies
            .iter()
            .map(|&s| setup.aging(s, beta, &w.duty, weights.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok::<_, Error>(CompareRow {
            workload: w.name.clone(),
            aging,
        })
    })?;
    let average = (0..strategies.len())
        .map(|i| mean(&rows.iter().map(|r| r.aging[i]).collect::<Vec<_>>()))
        .collect();
    let reductions = strategies
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &s)| {
            let r: Vec<f64> = rows.iter().map(|row| reduction(row.aging[0], row.aging[i])).collect();
            Reduction {
                strategy: s,
                min: r.iter().copied().fold(f64::INFINITY, f64::min),
                avg: mean(&r),
                max: r.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    Ok(CompareTable {
        family: setup.design.family.to_string(),
        beta,
        years: setup.years(),
        minimum: weights.as_ref().map(|w| setup.minimum(w)).transpose()?,
        strategies,
        rows,
        average,
        reductions,
    })
}

/// Per table: workload rows, the average, then reduction rows.
pub fn compare_csv(tables: &[CompareTable]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (t, table) in tables.iter().enumerate() {
        if t == 0 {
            let mut header = vec!["family".to_string(), "workload".to_string()];
            header.extend(table.strategies.iter().map(|s| s.column().to_string()));
            header.push("min".into());
            w.write_record(&header)?;
        } else if table.strategies != tables[0].strategies {
            return Err(Error::Config("tables with different strategies cannot share a CSV".into()));
        }
        let min = table.minimum.map(fmt6).unwrap_or_default();
        let mut emit = |label: &str, values: Vec<String>| -> Result<()> {
            let mut rec = vec![table.family.clone(), label.to_string()];
            rec.extend(values);
            w.write_record(&rec)?;
            Ok(())
        };
        for row in &table.rows {
            let mut v: Vec<String> = row.aging.iter().copied().map(fmt6).collect();
            v.push(min.clone());
            emit(&row.workload, v)?;
        }
        let mut v: Vec<String> = table.average.iter().copied().map(fmt6).collect();
        v.push(min.clone());
        emit("average", v)?;
        for (label, pick) in [
            ("reduction_min", (|r: &Reduction| r.min) as fn(&Reduction) -> f64),
            ("reduction_avg", |r| r.avg),
            ("reduction_max", |r| r.max),
        ] {
            let mut v = vec![String::new()];
            v.extend(table.reductions.iter().map(|r| fmt6(pick(r))));
            v.push(String::new());
            emit(label, v)?;
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("csv is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadSeries {
    pub family: String,
    pub years: f64,
    pub ratios: Vec<f64>,
    pub betas: Vec<f64>,
    pub strategies: Vec<Strategy>,
    /// Workload-averaged aging, `series[strategy][ratio]`.
    pub series: Vec<Vec<f64>>,
    pub minimum: Option<f64>,
}

/// Workload-averaged aging against overhead. `ratios` are rejuvenation to
/// functional cycle ratios, so values above one are allowed.
pub fn sweep_overhead(
    setup: &Setup,
    workloads: &[Workload],
    strategies: &[Strategy],
    ratios: &[f64],
) -> Result<OverheadSeries> {
    require_workloads(workloads)?;
    if ratios.is_empty() || strategies.is_empty() {
        return Err(Error::Config("overhead sweep needs at least one ratio and one strategy".into()));
    }
    let betas = ratios.iter().map(|&r| ratio_to_beta(r)).collect::<Result<Vec<_>>>()?;
    let weights = setup.design_aware_for(strategies)?;
    let cells: Vec<(usize, usize)> = (0..strategies.len())
        .flat_map(|s| (0..betas.len()).map(move |b| (s, b)))
        .collect();
    let values = exec::try_map(setup.mode, &cells, |&(s, b)| {
        let agings = workloads
            .iter()
            .map(|w| setup.aging(strategies[s], betas[b], &w.duty, weights.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok::<_, Error>(mean(&agings))
    })?;
    Ok(OverheadSeries {
        family: setup.design.family.to_string(),
        years: setup.years(),
        ratios: ratios.to_vec(),
        betas,
        strategies: strategies.to_vec(),
        series: values.chunks(ratios.len()).map(|c| c.to_vec()).collect(),
        minimum: weights.as_ref().map(|w| setup.minimum(w)).transpose()?,
    })
}

/// One row per family and overhead, one column per strategy.
pub fn overhead_csv(sweeps: &[OverheadSeries]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (i, sweep) in sweeps.iter().enumerate() {
        if i == 0 {
            let mut header = vec!["family".to_string(), "overhead".into(), "beta".into()];
            header.extend(sweep.strategies.iter().map(|s| s.column().to_string()));
            header.push("min".into());
            w.write_record(&header)?;
        } else if sweep.strategies != sweeps[0].strategies {
            return Err(Error::Config("sweeps with different strategies cannot share a CSV".into()));
        }
        for (b, (&r, &beta)) in sweep.ratios.iter().zip(&sweep.betas).enumerate() {
            let mut rec = vec![sweep.family.clone(), format!("{r}"), fmt6(beta)];
            rec.extend(sweep.series.iter().map(|s| fmt6(s[b])));
            rec.push(sweep.minimum.map(fmt6).unwrap_or_default());
            w.write_record(&rec)?;
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("csv is utf-8"))
}

/// Age at which mitigated aging first matches unmitigated aging at `years`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extension {
    pub unmitigated_years: f64,
    /// `None` when the mitigated design never gets there within the search bound.
    pub mitigated_years: Option<f64>,
    pub factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearsSeries {
    pub family: String,
    pub workload: String,
    pub strategy: Strategy,
    pub beta: f64,
    pub years: Vec<f64>,
    pub unmitigated: Vec<f64>,
    pub mitigated: Vec<f64>,
    pub extensions: Vec<Extension>,
    /// Largest finite extension factor over the grid.
    pub max_factor: Option<f64>,
}

const EXTENSION_BOUND: f64 = 1000.0;

/// Smallest `t` with `f(t) >= target`, for nondecreasing `f` and `t >= lo`.
/// Ages whose evaluation overflows count as exceeding every target.
pub fn lifetime_extension(mut f: impl FnMut(f64) -> Result<f64>, target: f64, lo: f64) -> Result<Option<f64>> {
    let mut at = |t: f64| match f(t) {
        Err(e) if matches!(e.root(), Error::DegradationOverflow { .. }) => Ok(f64::INFINITY),
        other => other,
    };
    if at(lo)? >= target {
        return Ok(Some(lo));
    }
    let mut hi = lo * 2.0;
    while at(hi)? < target {
        if hi >= lo * EXTENSION_BOUND {
            return Ok(None);
        }
        hi *= 2.0;
    }
    let mut lo = lo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(Some(hi))
}

/// Aging over a range of ages with and without rejuvenation. The plan is
/// built once, at the setup's own age.
pub fn sweep_years(
    setup: &Setup,
    workload: &Workload,
    strategy: Strategy,
    beta: f64,
    years: &[f64],
) -> Result<YearsSeries> {
    if years.is_empty() {
        return Err(Error::Config("years sweep needs at least one age".into()));
    }
    let weights = setup.design_aware_for(&[strategy])?;
    let plan = setup.plan(strategy, beta, &workload.duty, weights.as_ref())?;
    let mixed = setup.mixed(&workload.duty, plan.as_ref())?;
    let func = &workload.duty.group_histograms;
    let mit = &mixed.group_histograms;
    let at = |t: f64, h: &[Vec<f64>]| setup.eval.at_years(t)?.aging_percentage(h);
    let unmitigated = exec::try_map(setup.mode, years, |&t| at(t, func))?;
    let mitigated = exec::try_map(setup.mode, years, |&t| at(t, mit))?;
    let extensions = exec::try_map(setup.mode, &years.iter().copied().zip(unmitigated.iter().copied()).collect::<Vec<_>>(), |&(t, target)| {
        let m = lifetime_extension(|x| at(x, mit), target, t)?;
        Ok::<_, Error>(Extension {
            unmitigated_years: t,
            mitigated_years: m,
            factor: m.map(|m| m / t),
        })
    })?;
    let max_factor = extensions.iter().filter_map(|e| e.factor).reduce(f64::max);
    Ok(YearsSeries {
        family: setup.design.family.to_string(),
        workload: workload.name.clone(),
        strategy,
        beta,
        years: years.to_vec(),
        unmitigated,
        mitigated,
        extensions,
        max_factor,
    })
}

pub fn years_csv(sweeps: &[YearsSeries]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "family",
        "workload",
        "strategy",
        "beta",
        "years",
        "unmitigated",
        "mitigated",
        "equivalent_mitigated_years",
        "extension_factor",
    ])?;
    for s in sweeps {
        for (i, &t) in s.years.iter().enumerate() {
            let e = &s.extensions[i];
            w.write_record([
                s.family.clone(),
                s.workload.clone(),
                s.strategy.column().to_string(),
                fmt6(s.beta),
                format!("{t}"),
                fmt6(s.unmitigated[i]),
                fmt6(s.mitigated[i]),
                e.mitigated_years.map(fmt6).unwrap_or_default(),
                e.factor.map(fmt6).unwrap_or_default(),
            ])?;
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("csv is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_definition() {
        assert_eq!(reduction(110.0, 105.0), 50.0);
        assert_eq!(reduction(110.0, 110.0), 0.0);
        assert_eq!(reduction(100.0, 100.0), 0.0);
    }

    #[test]
    fn baseline_always_first() {
        assert_eq!(
            with_baseline(&[Strategy::DesignWorkloadAware, Strategy::Universal]),
            vec![Strategy::NoRejuvenation, Strategy::Universal, Strategy::DesignWorkloadAware]
        );
    }

    #[test]
    fn extension_bisection() {
        // f(t) = t, target 5 from 1
        let t = lifetime_extension(Ok, 5.0, 1.0).unwrap().unwrap();
        assert!((t - 5.0).abs() < 1e-9);
        assert_eq!(lifetime_extension(|_| Ok(0.0), 5.0, 1.0).unwrap(), None);
        let overflow = |t: f64| {
            if t > 3.0 {
                Err(Error::DegradationOverflow { delta_vth: 1.0, overdrive: 0.5 })
            } else {
                Ok(0.0)
            }
        };
        let t = lifetime_extension(overflow, 5.0, 1.0).unwrap().unwrap();
        assert!((t - 3.0).abs() < 1e-9);
    }
}
