use cusum_sentinel_wasm::{fixture_bounds_json, fixture_sweep_json, zeta_curve_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn zeta_curve_hits_branch_values() {
    let c = parse(zeta_curve_json(0.025, 100.0, 0.005, -200.0, 200.0, 401).unwrap());
    let x = c["x"].as_array().unwrap();
    let z = c["zeta"].as_array().unwrap();
    assert_eq!(x.len(), 401);
    assert_eq!(x[200].as_f64().unwrap(), 0.0);
    assert!((z[200].as_f64().unwrap() + 0.0625).abs() < 1e-12);
    assert!((z[201].as_f64().unwrap() - 100.0).abs() < 1e-9);
    assert!((z[400].as_f64().unwrap() - 3.0e6).abs() < 1e-6);
    assert_eq!(c["breakpoints"][3].as_f64().unwrap(), 100.0);
}

#[test]
fn zeta_curve_rejects_bad_input() {
    assert!(zeta_curve_json(2.0, 1.0, 1.0, -1.0, 1.0, 10).is_err());
    assert!(zeta_curve_json(1.0, 2.0, 0.0, -1.0, 1.0, 10).is_err());
    assert!(zeta_curve_json(1.0, 2.0, 1.0, 1.0, -1.0, 10).is_err());
    assert!(zeta_curve_json(1.0, 2.0, 1.0, -1.0, 1.0, 1).is_err());
}

#[test]
fn fixture_bounds_report() {
    let b = parse(fixture_bounds_json(0.005, 0.025, 100.0, 100.0).unwrap());
    assert_eq!(b["meters"], 23);
    assert_eq!(b["states"], 13);
    let upper: f64 = b["per_meter_upper"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
    assert!((b["h_floor"].as_f64().unwrap() - 100.0 * upper).abs() < 1e-6 * upper * 100.0);
    assert!(fixture_bounds_json(0.005, 0.025, 100.0, 0.5).is_err());
}

#[test]
fn fixture_sweep_is_monotone_and_reproducible() {
    let a = fixture_sweep_json(0.01, 0.025, 100.0, 1.0, 500.0, 5000.0, 4, 40, 9).unwrap();
    assert_eq!(a, fixture_sweep_json(0.01, 0.025, 100.0, 1.0, 500.0, 5000.0, 4, 40, 9).unwrap());
    let rows = parse(a)["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 4);
    let arl: Vec<f64> = rows.iter().map(|r| r["arl"].as_f64().unwrap()).collect();
    let edd: Vec<f64> = rows.iter().map(|r| r["edd"].as_f64().unwrap()).collect();
    assert!(arl.windows(2).all(|w| w[0] <= w[1]));
    assert!(edd.windows(2).all(|w| w[0] <= w[1]));
    assert!(edd.iter().zip(&arl).all(|(e, a)| e < a));
    assert!(fixture_sweep_json(0.01, 0.025, 100.0, 1.0, 500.0, 5000.0, 4, 0, 9).is_err());
}
