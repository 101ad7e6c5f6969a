//! CSV and JSON renderings. Floats are written with 17 significant digits.

use std::fmt::Write;

use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::dynamics::{ConvergenceReport, DeviationReport, DynamicsTrace};
use crate::fano::SampledStructure;
use crate::model::ValidationReport;
use crate::pseudo::PseudomodeSet;

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn complex_json(z: C64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

/// `t,P1,Re_c1,Im_c1[,P_mode_1..][,norm][,trace_rho,min_eig]`.
pub fn trace_csv(trace: &DynamicsTrace) -> String {
    let modes = trace.mode_populations.first().map_or(0, |m| m.len());
    let mut out = String::from("t,P1,Re_c1,Im_c1");
    for i in 1..=modes {
        write!(out, ",P_mode_{i}").unwrap();
    }
    out.push_str(",norm");
    if trace.density.is_some() {
        out.push_str(",trace_rho,min_eig");
    }
    out.push('\n');
    for n in 0..trace.times.len() {
        let c = trace.c1.as_ref().map_or(C64::new(f64::NAN, f64::NAN), |c| c[n]);
        let mut row = vec![fmt_f64(trace.times[n]), fmt_f64(trace.p1[n]), fmt_f64(c.re), fmt_f64(c.im)];
        if modes > 0 {
            row.extend(trace.mode_populations[n].iter().map(|&p| fmt_f64(p)));
        }
        row.push(fmt_f64(trace.norm[n]));
        if let Some(d) = &trace.density {
            row.push(fmt_f64(d.trace[n]));
            row.push(fmt_f64(d.min_eig[n]));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// `omega,D,Re_g,Im_g`.
pub fn structure_csv(s: &SampledStructure) -> String {
    let mut out = String::from("omega,D,Re_g,Im_g\n");
    for ((w, d), g) in s.omega.iter().zip(&s.d).zip(&s.g) {
        writeln!(out, "{},{},{},{}", fmt_f64(*w), fmt_f64(*d), fmt_f64(g.re), fmt_f64(g.im)).unwrap();
    }
    out
}

pub fn pseudomodes_json(set: &PseudomodeSet) -> Value {
    let modes: Vec<Value> = set
        .modes
        .iter()
        .map(|m| json!({ "z": complex_json(m.pole), "r": complex_json(m.residue), "K": complex_json(m.coupling) }))
        .collect();
    json!({
        "strength": set.strength,
        "omega_sq": set.strength * set.strength,
        "atom_frequency": set.atom_frequency,
        "pseudomodes": modes,
        "residue_sum_residual": set.residue_sum_residual(),
        "cancelled_roots": set.cancelled.iter().map(|&z| complex_json(z)).collect::<Vec<_>>(),
    })
}

pub fn deviation_json(r: &DeviationReport) -> Value {
    json!({
        "max_dP1": r.max_dp1,
        "rms_dP1": r.rms_dp1,
        "max_dc1": r.max_dc1,
        "rms_dc1": r.rms_dc1,
    })
}

pub fn convergence_json(r: &ConvergenceReport) -> Value {
    json!({ "steps": r.steps, "differences": r.differences, "orders": r.orders })
}

pub fn validation_json(r: &ValidationReport) -> Value {
    let checks: Vec<Value> = r
        .checks
        .iter()
        .map(|c| json!({ "name": c.name, "passed": c.passed, "residual": c.residual }))
        .collect();
    json!({ "passed": r.passed(), "checks": checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::solve_pseudomode;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::f64::consts::PI] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn trace_header_and_rows() {
        let set = PseudomodeSet::lorentzian(1.0, 1.0, 0.5, 1.0).unwrap();
        let trace = solve_pseudomode(&set, 0.1, 0.01).unwrap();
        let csv = trace_csv(&trace);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,P1,Re_c1,Im_c1,P_mode_1,norm");
        assert_eq!(lines.count(), trace.times.len());
    }

    #[test]
    fn pseudomode_json_shape() {
        let set = PseudomodeSet::lorentzian(1.0, 1.0, 0.5, 1.0).unwrap();
        let v = pseudomodes_json(&set);
        assert_eq!(v["pseudomodes"][0]["r"]["im"], 1.0);
        assert_eq!(v["pseudomodes"][0]["K"]["re"], 0.5);
    }
}
