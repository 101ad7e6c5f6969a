use pyo3::prelude::*;
use pyo3::types::PyDict;
use pyo3::wrap_pymodule;

const CONFIG: &str = r#"{
  "atom": { "levels": [0.0, 1.0], "transitions": [{ "upper": 1, "lower": 0 }] },
  "field": {
    "omegas": [1.0],
    "W": [{ "type": "constant", "re": 0.3989422804014327 }],
    "rho_c": { "type": "constant", "value": 1.0 },
    "lambda": [[{ "re": 0.5 }]]
  },
  "numerics": { "t_max": 1.0, "h": 0.01 }
}"#;

#[test]
fn module_round_trip() {
    Python::initialize();
    Python::attach(|py| {
        let m = wrap_pymodule!(quasimode_py::quasimode_py)(py);
        let m = m.bind(py);
        let etas: Vec<f64> = m.call_method1("eta_coefficients", (vec![0.0, 1.0], vec![(1usize, 0usize)])).unwrap().extract().unwrap();
        assert!((etas[0] - 0.5).abs() < 1e-14);

        let modes = m.call_method1("pseudomodes", (CONFIG,)).unwrap();
        let modes = modes.cast::<PyDict>().unwrap();
        let strength: f64 = modes.get_item("strength").unwrap().unwrap().extract().unwrap();
        assert!((strength - 0.5).abs() < 1e-12);

        let trace = m.call_method1("dynamics", (CONFIG, "volterra")).unwrap();
        let p1: Vec<f64> = trace.get_item("P1").unwrap().extract().unwrap();
        assert_eq!(p1.len(), 101);

        let e = m.call_method1("dynamics", (CONFIG, "euler")).unwrap_err();
        assert!(e.is_instance_of::<pyo3::exceptions::PyValueError>(py));
    });
}
