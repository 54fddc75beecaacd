use bihsolve_web::{outline_json, run_json};
use serde_json::Value;

#[test]
fn cusp_outline_has_points_and_one_corner() {
    let v: Value = serde_json::from_str(&outline_json("command = \"solve\"\n[map]\nname = \"cusp\"\n", 64).unwrap()).unwrap();
    assert_eq!(v["corners"].as_array().unwrap().len(), 1);
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts.len(), 64);
    // (Z + 1)² maps the circle into the disk of radius 4 about the origin.
    for p in pts {
        let (x, y) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
        assert!(x.hypot(y) <= 4.0 + 1e-12);
    }
}

#[test]
fn small_solve_reports_field() {
    let cfg = "command = \"field-export\"\n[grid]\nn = 48\n[probes]\nradii = [0.3, 0.6]\nangles = 8\n";
    let v: Value = serde_json::from_str(&run_json(cfg).unwrap()).unwrap();
    assert_eq!(v["exit_code"], 0, "{v}");
    assert_eq!(v["result"]["field"].as_array().unwrap().len(), 16);
}

#[test]
fn bad_config_is_an_error_string() {
    let err = outline_json("command = \"solve\"\n[map]\nname = \"corner-family\"\n[[map.corners]]\nangle = 0.0\nbeta = 1.5\nalpha = 0.0\n", 32)
        .unwrap_err();
    assert!(err.contains("(-1, 1]"), "{err}");
}
