// SPDX-License-Identifier: Apache-2.0

//! Duty-factor based BTI model.
//!
//! Each device type has a calibration curve of threshold shift versus stress
//! duty factor at a reference age. The shift at another age follows a
//! separable power law:
//!
//! ```text
//! dVth(df, t) = interp(df) * (t / t_ref)^n
//! ```
//!
//! where `interp` is piecewise linear over the calibration points.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::decoder::Device;
use crate::error::{Error, Result};
use crate::kv;

/// One calibration point: stress duty factor and threshold shift in volts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub duty: f64,
    pub delta_vth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtiModel {
    nmos: Vec<CalibrationPoint>,
    pmos: Vec<CalibrationPoint>,
    pub t_ref_years: f64,
    pub time_exponent: f64,
    pub temperature_c: f64,
    pub vdd: f64,
    pub vth0: f64,
}

/// Aging of the FIR workload on the AND-AND decoder without mitigation,
/// years 1..=10, as percent delay increase. Source data for the default
/// time exponent.
pub const REFERENCE_AGING_SERIES: [(f64, f64); 10] = [
    (1.0, 26.409),
    (2.0, 30.755),
    (3.0, 33.678),
    (4.0, 36.026),
    (5.0, 38.051),
    (6.0, 39.811),
    (7.0, 41.339),
    (8.0, 42.754),
    (9.0, 44.032),
    (10.0, 45.162),
];

/// Least-squares fit of `REFERENCE_AGING_SERIES`, installed as the default exponent.
pub const DEFAULT_TIME_EXPONENT: f64 = 0.234453;

const DEFAULT_CALIBRATION: &str = include_str!("../data/calibration/default.cal");

impl BtiModel {
    pub fn new(
        nmos: Vec<CalibrationPoint>,
        pmos: Vec<CalibrationPoint>,
        t_ref_years: f64,
        time_exponent: f64,
        temperature_c: f64,
        vdd: f64,
        vth0: f64,
    ) -> Result<Self> {
        let model = BtiModel {
            nmos,
            pmos,
            t_ref_years,
            time_exponent,
            temperature_c,
            vdd,
            vth0,
        };
        model.validate()?;
        Ok(model)
    }

    /// The bundled surrogate calibration.
    pub fn default_model() -> Self {
        load_calibration(DEFAULT_CALIBRATION).expect("bundled calibration is valid")
    }

    /// A model whose threshold never shifts.
    pub fn zero_shift() -> Self {
        let flat = vec![
            CalibrationPoint { duty: 0.0, delta_vth: 0.0 },
            CalibrationPoint { duty: 1.0, delta_vth: 0.0 },
        ];
        BtiModel {
            nmos: flat.clone(),
            pmos: flat,
            ..BtiModel::default_model()
        }
    }

    /// Scale every calibration shift by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let scale = |pts: &[CalibrationPoint]| {
            pts.iter()
                .map(|p| CalibrationPoint {
                    duty: p.duty,
                    delta_vth: p.delta_vth * factor,
                })
                .collect()
        };
        BtiModel::new(
            scale(&self.nmos),
            scale(&self.pmos),
            self.t_ref_years,
            self.time_exponent,
            self.temperature_c,
            self.vdd,
            self.vth0,
        )
    }

    pub fn curve(&self, device: Device) -> &[CalibrationPoint] {
        match device {
            Device::Nmos => &self.nmos,
            Device::Pmos => &self.pmos,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.vdd > self.vth0) || !(self.vth0 >= 0.0) {
            return Err(Error::Calibration(format!(
                "need vdd > vth0 >= 0, got vdd={} vth0={}",
                self.vdd, self.vth0
            )));
        }
        if !(self.t_ref_years > 0.0) {
            return Err(Error::Calibration("t_ref_years must be positive".into()));
        }
        if !(self.time_exponent > 0.0 && self.time_exponent < 1.0) {
            return Err(Error::Calibration(format!(
                "time_exponent {} outside (0, 1)",
                self.time_exponent
            )));
        }
        let overdrive = self.vdd - self.vth0;
        for device in [Device::Nmos, Device::Pmos] {
            let pts = self.curve(device);
            let first = pts
                .first()
                .ok_or_else(|| Error::Calibration(format!("{device}: no calibration points")))?;
            if first.duty != 0.0 || first.delta_vth != 0.0 {
                return Err(Error::Calibration(format!("{device}: first point must be (0, 0)")));
            }
            if pts.last().map(|p| p.duty) != Some(1.0) {
                return Err(Error::Calibration(format!("{device}: last point must be at duty 1")));
            }
            for w in pts.windows(2) {
                if !(w[1].duty > w[0].duty) {
                    return Err(Error::Calibration(format!(
                        "{device}: duty factors must strictly increase ({} then {})",
                        w[0].duty, w[1].duty
                    )));
                }
                if !(w[1].delta_vth >= w[0].delta_vth) {
                    return Err(Error::Calibration(format!(
                        "{device}: threshold shift decreases between duty {} and {}",
                        w[0].duty, w[1].duty
                    )));
                }
            }
            if let Some(p) = pts.iter().find(|p| !(p.delta_vth < overdrive) || !(0.0..=1.0).contains(&p.duty)) {
                return Err(Error::Calibration(format!(
                    "{device}: point ({}, {} V) out of range (shift must stay below vdd - vth0 = {overdrive} V)",
                    p.duty, p.delta_vth
                )));
            }
        }
        Ok(())
    }

    /// Piecewise-linear threshold shift at the reference age.
    pub fn reference_shift(&self, device: Device, stress_df: f64) -> f64 {
        let pts = self.curve(device);
        let i = pts.partition_point(|p| p.duty <= stress_df);
        if i == 0 {
            return pts[0].delta_vth;
        }
        if i == pts.len() {
            return pts[pts.len() - 1].delta_vth;
        }
        let (a, b) = (pts[i - 1], pts[i]);
        if stress_df == a.duty {
            return a.delta_vth;
        }
        a.delta_vth + (b.delta_vth - a.delta_vth) * (stress_df - a.duty) / (b.duty - a.duty)
    }

    /// `(years / t_ref)^n`.
    pub fn time_factor(&self, years: f64) -> f64 {
        (years / self.t_ref_years).powf(self.time_exponent)
    }

    pub fn delta_vth(&self, device: Device, stress_df: f64, years: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&stress_df) {
            return Err(Error::OutOfRange(format!("stress duty {stress_df} outside [0, 1]")));
        }
        if !(years > 0.0) || !years.is_finite() {
            return Err(Error::OutOfRange(format!("age {years} years must be positive")));
        }
        Ok(self.reference_shift(device, stress_df) * self.time_factor(years))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "t_ref_years={}", self.t_ref_years);
        let _ = writeln!(out, "time_exponent={}", self.time_exponent);
        let _ = writeln!(out, "temperature_C={}", self.temperature_c);
        let _ = writeln!(out, "vdd_V={}", self.vdd);
        let _ = writeln!(out, "vth0_V={}", self.vth0);
        for (name, pts) in [("PMOS", &self.pmos), ("NMOS", &self.nmos)] {
            let _ = writeln!(out, "\n[{name}]");
            for p in pts {
                let _ = writeln!(out, "{},{}", p.duty, p.delta_vth * 1e3);
            }
        }
        out
    }
}

impl Default for BtiModel {
    fn default() -> Self {
        BtiModel::default_model()
    }
}

/// Parse a calibration file: header `key=value` lines, then `[NMOS]` and
/// `[PMOS]` sections of `duty,delta_vth_mV` lines.
pub fn load_calibration(text: &str) -> Result<BtiModel> {
    let mut header = kv::KeyValues::default();
    let mut nmos = None;
    let mut pmos = None;
    let mut section: Option<Device> = None;
    for line in kv::lines(text) {
        if let Some(name) = line.text.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let device = match name.trim().to_ascii_uppercase().as_str() {
                "NMOS" => Device::Nmos,
                "PMOS" => Device::Pmos,
                other => return Err(Error::parse(line.number, format!("unknown section `{other}`"))),
            };
            let slot = match device {
                Device::Nmos => &mut nmos,
                Device::Pmos => &mut pmos,
            };
            if slot.is_some() {
                return Err(Error::parse(line.number, format!("duplicate section [{device}]")));
            }
            *slot = Some(Vec::new());
            section = Some(device);
            continue;
        }
        match section {
            None => {
                let (key, value) = kv::split_pair(&line)
                    .ok_or_else(|| Error::parse(line.number, format!("expected key=value, got `{}`", line.text)))?;
                header.insert(line.number, key, value)?;
            }
            Some(device) => {
                let (d, mv) = line
                    .text
                    .split_once(',')
                    .ok_or_else(|| Error::parse(line.number, "expected `duty,delta_vth_mV`"))?;
                let duty: f64 = d.trim().parse().map_err(|_| Error::parse(line.number, "invalid duty"))?;
                let mv: f64 = mv.trim().parse().map_err(|_| Error::parse(line.number, "invalid threshold shift"))?;
                let point = CalibrationPoint {
                    duty,
                    delta_vth: mv * 1e-3,
                };
                match device {
                    Device::Nmos => nmos.as_mut(),
                    Device::Pmos => pmos.as_mut(),
                }
                .expect("section opened")
                .push(point);
            }
        }
    }
    header.check_known(&["t_ref_years", "time_exponent", "temperature_c", "vdd_v", "vth0_v"])?;
    BtiModel::new(
        nmos.ok_or_else(|| Error::Calibration("missing [NMOS] section".into()))?,
        pmos.ok_or_else(|| Error::Calibration("missing [PMOS] section".into()))?,
        header.get_or("t_ref_years", 3.0)?,
        header.get_or("time_exponent", DEFAULT_TIME_EXPONENT)?,
        header.get_or("temperature_c", 125.0)?,
        header.get_or("vdd_v", 0.95)?,
        header.get_or("vth0_v", 0.40)?,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub coefficient: f64,
    pub exponent: f64,
}

/// Ordinary least squares of `ln y = ln c + n ln t`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 2 {
        return Err(Error::OutOfRange("power-law fit needs at least two points".into()));
    }
    if points.iter().any(|&(t, y)| !(t > 0.0) || !(y > 0.0)) {
        return Err(Error::OutOfRange("power-law fit needs positive data".into()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::OutOfRange("power-law fit needs distinct times".into()));
    }
    let exponent = sxy / sxx;
    Ok(PowerLawFit {
        coefficient: (my - exponent * mx).exp(),
        exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "t_ref_years=3\ntime_exponent=0.25\n[PMOS]\n0,0\n0.5,20\n1.0,35\n[NMOS]\n0,0\n1,10\n";

    #[test]
    fn loads_valid_file() {
        let m = load_calibration(SAMPLE).unwrap();
        assert_eq!(m.curve(Device::Pmos).len(), 3);
        assert!((m.reference_shift(Device::Pmos, 0.5) - 0.020).abs() < 1e-15);
        assert!((m.reference_shift(Device::Pmos, 0.75) - 0.0275).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_curves() {
        let missing_origin = "[PMOS]\n0.1,1\n1,20\n[NMOS]\n0,0\n1,1\n";
        assert!(matches!(load_calibration(missing_origin), Err(Error::Calibration(_))));
        let decreasing = "[PMOS]\n0,0\n0.5,20\n1,10\n[NMOS]\n0,0\n1,1\n";
        assert!(matches!(load_calibration(decreasing), Err(Error::Calibration(_))));
        let huge = "[PMOS]\n0,0\n1,900\n[NMOS]\n0,0\n1,1\n";
        assert!(matches!(load_calibration(huge), Err(Error::Calibration(_))));
        let repeated_duty = "[PMOS]\n0,0\n0.5,1\n0.5,2\n1,3\n[NMOS]\n0,0\n1,1\n";
        assert!(load_calibration(repeated_duty).is_err());
        assert!(load_calibration("[PMOS]\n0,0\n1,3\n").is_err());
        assert!(matches!(load_calibration("[PMOS]\n0,zero\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn anchors_and_endpoints() {
        let m = load_calibration(SAMPLE).unwrap();
        for years in [0.5, 3.0, 10.0] {
            assert_eq!(m.delta_vth(Device::Nmos, 0.0, years).unwrap(), 0.0);
            assert_eq!(m.delta_vth(Device::Pmos, 0.0, years).unwrap(), 0.0);
        }
        assert_eq!(m.delta_vth(Device::Pmos, 1.0, 3.0).unwrap(), 0.035);
    }

    #[test]
    fn out_of_range_inputs() {
        let m = BtiModel::default_model();
        assert!(m.delta_vth(Device::Pmos, 1.1, 3.0).is_err());
        assert!(m.delta_vth(Device::Pmos, -0.1, 3.0).is_err());
        assert!(m.delta_vth(Device::Pmos, 0.5, 0.0).is_err());
    }

    #[test]
    fn default_curve_is_convex_with_nbti_dominant() {
        let m = BtiModel::default_model();
        for device in [Device::Nmos, Device::Pmos] {
            let pts = m.curve(device);
            let slopes: Vec<f64> = pts
                .windows(2)
                .map(|w| (w[1].delta_vth - w[0].delta_vth) / (w[1].duty - w[0].duty))
                .collect();
            assert!(slopes.windows(2).all(|s| s[1] >= s[0] - 1e-9), "{device}: {slopes:?}");
        }
        for df in [0.1, 0.5, 0.9, 1.0] {
            assert!(m.reference_shift(Device::Pmos, df) > m.reference_shift(Device::Nmos, df));
        }
    }

    #[test]
    fn decade_ratio_is_ten_to_the_n() {
        let m = BtiModel::default_model();
        let r = m.delta_vth(Device::Pmos, 0.7, 10.0).unwrap() / m.delta_vth(Device::Pmos, 0.7, 1.0).unwrap();
        assert!((r - 10f64.powf(m.time_exponent)).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_exact_power_law() {
        let pts: Vec<(f64, f64)> = (1..=10).map(|t| (t as f64, 3.5 * (t as f64).powf(0.31))).collect();
        let fit = fit_power_law(&pts).unwrap();
        assert!((fit.exponent - 0.31).abs() < 1e-12);
        assert!((fit.coefficient - 3.5).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip() {
        let m = BtiModel::default_model();
        let back = load_calibration(&m.to_text()).unwrap();
        assert_eq!(back.time_exponent, m.time_exponent);
        for device in [Device::Nmos, Device::Pmos] {
            for (a, b) in back.curve(device).iter().zip(m.curve(device)) {
                assert!((a.delta_vth - b.delta_vth).abs() < 1e-15);
            }
        }
    }
}
