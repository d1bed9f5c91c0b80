use bmst_web::{bound_curves, plan, spectrum};
use serde_json::Value;

#[test]
fn plan_json() {
    let v: Value = serde_json::from_str(&plan(0.5, 1e-5, 1000, 1000).unwrap()).unwrap();
    assert_eq!(v["memory"], 16);
}

#[test]
fn spectrum_json() {
    let v: Value = serde_json::from_str(&spectrum(2, 30, 0, 20, 1, 10).unwrap()).unwrap();
    assert_eq!(v["min_weight"], 3);
    assert_eq!(v["spectrum"].as_array().unwrap().len(), 10);
}

#[test]
fn curves_are_ordered() {
    let v: Value = serde_json::from_str(&bound_curves(2, 20, 0, 10, 2, 8, 2.0, 6.0, 1.0).unwrap()).unwrap();
    let pts = v.as_array().unwrap();
    assert_eq!(pts.len(), 5);
    for p in pts {
        assert!(p["lower"].as_f64().unwrap() <= p["upper"].as_f64().unwrap());
    }
}
