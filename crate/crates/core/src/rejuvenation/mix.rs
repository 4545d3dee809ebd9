// SPDX-License-Identifier: Apache-2.0

use super::RejuvenationPlan;
use crate::decoder::DecoderDesign;
use crate::error::{Error, Result};
use crate::exec::Parallelism;
use crate::trace::{duty_profile, DutyProfile, MemoryTrace};

/// `(1 - beta) * functional + beta * plan`, by profile mixing.
pub fn mix(functional: &DutyProfile, plan: &RejuvenationPlan, design: &DecoderDesign) -> Result<DutyProfile> {
    if plan.beta == 0.0 {
        return Ok(functional.clone());
    }
    functional.mix(&plan.profile(design)?, plan.beta)
}

/// Insert an `L`-cycle routine burst after every `N` functional cycles.
///
/// The functional trace is treated as one pass of a periodic workload: a
/// trailing partial period gets a burst when it is at least half a period
/// long, and traces shorter than one period are repeated until they cover one.
pub fn interleave(functional: &MemoryTrace, plan: &RejuvenationPlan, design: &DecoderDesign) -> Result<MemoryTrace> {
    if functional.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let start = functional.entries()[0].cycle;
    let mut func = functional.split_at(start).1;
    let period = match plan.interrupt_period {
        None => return Ok(func),
        Some(n) => n,
    };
    let burst = plan.routine_trace(design)?;
    if period == 0 {
        return Ok(burst);
    }
    let one_pass = func.clone();
    while func.total_cycles() < period {
        func = func.concat(&one_pass);
    }
    let mut out: Option<MemoryTrace> = None;
    let mut rest = func;
    while rest.total_cycles() > 0 {
        let len = rest.total_cycles();
        let (mut seg, tail) = if len > period {
            rest.split_at(period)
        } else {
            (rest, MemoryTrace::default())
        };
        if 2 * len >= period {
            seg = seg.concat(&burst);
        }
        out = Some(match out {
            None => seg,
            Some(o) => o.concat(&seg),
        });
        rest = tail;
    }
    Ok(out.expect("functional trace is non-empty"))
}

/// Duty of the explicitly interleaved trace.
pub fn mix_interleaved(
    functional: &MemoryTrace,
    plan: &RejuvenationPlan,
    design: &DecoderDesign,
    mode: Parallelism,
) -> Result<DutyProfile> {
    duty_profile(&interleave(functional, plan, design)?, design, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::{DecoderConfig, Family};
    use crate::rejuvenation::{plan_from_weights, universal_plan, PlanKind};
    use crate::trace::{preset, synth_workload};

    #[test]
    fn endpoints_are_exact() {
        let d = DecoderConfig::new(Family::NandNor).build().unwrap();
        let t = synth_workload(&preset("fir").unwrap(), &d).unwrap();
        let f = duty_profile(&t, &d, Parallelism::Sequential).unwrap();
        let p0 = universal_plan(&d, 0.0).unwrap();
        assert_eq!(mix(&f, &p0, &d).unwrap(), f);
        assert_eq!(mix_interleaved(&t, &p0, &d, Parallelism::Sequential).unwrap().net_duty, f.net_duty);
        let p1 = universal_plan(&d, 1.0).unwrap();
        let plan_duty = p1.profile(&d).unwrap();
        assert_eq!(mix(&f, &p1, &d).unwrap().net_duty, plan_duty.net_duty);
        assert_eq!(mix_interleaved(&t, &p1, &d, Parallelism::Sequential).unwrap().net_duty, plan_duty.net_duty);
    }

    #[test]
    fn interleaving_matches_mixing() {
        let d = DecoderConfig::new(Family::AndAnd).build().unwrap();
        let t = synth_workload(&preset("conv2d").unwrap(), &d).unwrap();
        let f = duty_profile(&t, &d, Parallelism::Sequential).unwrap();
        let w = vec![
            vec![0.0, 0.0, 0.1, 0.1, 0.2, 0.2, 0.2, 0.2],
            vec![0.125; 8],
            vec![0.3, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1],
        ];
        for beta in [0.01, 0.2] {
            let plan = plan_from_weights(&d, PlanKind::DesignAware, w.clone(), beta, 512).unwrap();
            let a = mix(&f, &plan, &d).unwrap();
            let b = mix_interleaved(&t, &plan, &d, Parallelism::Sequential).unwrap();
            for (x, y) in a.net_duty.iter().zip(&b.net_duty) {
                assert!((x - y).abs() <= 1e-3, "beta {beta}: {x} vs {y}");
            }
        }
    }
}
