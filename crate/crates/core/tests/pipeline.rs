use num_complex::Complex64 as C64;

use quasimode::config::RunConfig;
use quasimode::dynamics::{compare_traces, Method};
use quasimode::fano::ReservoirStructure;

fn two_mode_config(numerics: &str) -> String {
    format!(
        r#"{{
  "atom": {{ "levels": [0.0, 1.2], "transitions": [{{ "upper": 1, "lower": 0 }}] }},
  "field": {{
    "omegas": [1.0, 1.6],
    "v": [[{{ "re": 0.0 }}, {{ "re": 0.15, "im": 0.05 }}], [{{ "re": 0.15, "im": -0.05 }}, {{ "re": 0.0 }}]],
    "W": [{{ "type": "constant", "re": 0.4 }}, {{ "type": "constant", "re": 0.2, "im": 0.1 }}],
    "rho_c": {{ "type": "constant", "value": 1.0 }},
    "lambda": [[{{ "re": 0.5 }}, {{ "re": 0.2, "im": -0.1 }}]]
  }},
  "numerics": {numerics}
}}"#
    )
}

#[test]
fn pseudomodes_reproduce_the_quasimode_master_equation() {
    // the pseudomode set comes from the poles of D; the Lindblad sector uses the quasimodes directly
    let config = RunConfig::from_json_str(&two_mode_config(
        r#"{ "t_max": 15.0, "h": 0.005, "single_excitation": true }"#,
    ))
    .unwrap();
    let pseudo = config.solve(Method::Pseudomode).unwrap();
    let lindblad = config.solve(Method::Lindblad).unwrap();
    let volterra = config.solve(Method::Volterra).unwrap();
    assert!(compare_traces(&pseudo, &lindblad).unwrap().max_dp1 < 1e-8);
    assert!(compare_traces(&pseudo, &volterra).unwrap().max_dc1.unwrap() < 1e-4);
    // both amplitude solvers share the phase convention
    let (a, b) = (pseudo.c1.as_ref().unwrap(), lindblad.c1.as_ref().unwrap());
    let dc = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(dc < 1e-8, "{dc}");
}

#[test]
fn dense_lindblad_matches_the_sector_for_one_excitation() {
    let sector = RunConfig::from_json_str(&two_mode_config(
        r#"{ "t_max": 5.0, "h": 0.005, "single_excitation": true }"#,
    ))
    .unwrap();
    let dense = RunConfig::from_json_str(&two_mode_config(r#"{ "t_max": 5.0, "h": 0.005, "truncation": 3 }"#)).unwrap();
    let a = sector.solve(Method::Lindblad).unwrap();
    let b = dense.solve(Method::Lindblad).unwrap();
    assert!(compare_traces(&a, &b).unwrap().max_dp1 < 1e-9);
    let rho = b.density.unwrap();
    assert!(rho.max_trace_deviation() < 1e-10);
    assert!(rho.min_eigenvalue() > -1e-10);
}

#[test]
fn sampled_structure_agrees_with_the_rational_form() {
    let config = RunConfig::from_json_str(&two_mode_config(
        r#"{ "omega_grid": { "min": -2.0, "max": 4.0, "points": 301 } }"#,
    ))
    .unwrap();
    let sampled = config.sampled_structure().unwrap();
    let ReservoirStructure::RationalFlat(rational) = config.reservoir().unwrap() else {
        panic!("flat config should give the rational form");
    };
    let peak = sampled.d.iter().copied().fold(0.0, f64::max);
    for (w, d) in sampled.omega.iter().zip(&sampled.d) {
        assert!((d - rational.density(*w)).abs() <= 1e-11 * peak, "ω = {w}");
    }
    // Ω² = Σ residues, compared with the trapezoid integral over a wide grid
    let set = config.pseudomodes().unwrap();
    let wide = RunConfig::from_json_str(&two_mode_config(
        r#"{ "omega_grid": { "min": -400.0, "max": 400.0, "points": 400001 } }"#,
    ))
    .unwrap()
    .sampled_structure()
    .unwrap();
    let dw = wide.omega[1] - wide.omega[0];
    let integral: f64 = wide.d.windows(2).map(|p| 0.5 * (p[0] + p[1]) * dw).sum();
    let omega_sq = set.strength * set.strength;
    // tails beyond ±400 fall off as 1/ω²
    assert!((integral - omega_sq).abs() < 2e-3 * omega_sq, "{integral} vs {omega_sq}");
}

#[test]
fn config_round_trips_through_json() {
    let config = RunConfig::from_json_str(&two_mode_config(r#"{ "t_max": 3.0, "tolerance": 1e-4 }"#)).unwrap();
    let again = RunConfig::from_json_str(&config.to_json_string()).unwrap();
    assert_eq!(config, again);
    let set = again.pseudomodes().unwrap();
    let sum: C64 = set.residues().iter().sum();
    assert!((sum - C64::new(0.0, 1.0)).norm() < 1e-10);
}
