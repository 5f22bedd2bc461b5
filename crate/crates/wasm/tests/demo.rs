use pvpp_wasm::{calibration_json, crps_json, diurnal_json};
use serde_json::Value;

fn parse(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.unwrap()).unwrap()
}

#[test]
fn crps_view_matches_the_library() {
    let v = parse(crps_json(2.0, 1.0, 0.0, f64::NAN, 1.5, 50));
    let d = pvpp_core::CensoredNormal::new(2.0, 1.0, pvpp_core::Bounds::nonnegative());
    assert_eq!(v["crps"].as_f64().unwrap(), d.crps(1.5));
    assert_eq!(v["x"].as_array().unwrap().len(), 50);
    let cdf: Vec<f64> = v["cdf"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
    assert!((v["mass_lower"].as_f64().unwrap() - d.cdf(0.0)).abs() < 1e-15);
    assert_eq!(v["mass_upper"].as_f64().unwrap(), 0.0);
    assert!(crps_json(0.0, 0.0, 0.0, 1.0, 0.5, 10).is_err());
}

#[test]
fn doubly_censored_view_has_upper_mass() {
    let v = parse(crps_json(18.0, 3.0, 0.0, 20.0, 20.0, 10));
    assert!(v["mass_upper"].as_f64().unwrap() > 0.2);
    assert_eq!(v["x"].as_array().unwrap().len(), 10);
}

#[test]
fn diurnal_curve_is_dark_at_night_and_bounded() {
    let v = parse(diurnal_json("2020-06-21", 1.0, 25.0, 2.0, 32.62));
    let hours = v.as_array().unwrap();
    assert_eq!(hours.len(), 24);
    for h in hours {
        let p = h["power_mw"].as_f64().unwrap();
        assert!((0.0..=20.0).contains(&p));
        let local = h["local_hour"].as_u64().unwrap();
        if local <= 3 || local >= 21 {
            assert_eq!(p, 0.0, "local hour {local}");
        }
    }
    let noon = hours.iter().find(|h| h["local_hour"] == 13).unwrap();
    assert!(noon["power_mw"].as_f64().unwrap() > 10.0);
    assert!(diurnal_json("June 21", 1.0, 25.0, 2.0, 30.0).is_err());
}

#[test]
fn calibration_demo_separates_good_and_bad_forecasts() {
    let good = parse(calibration_json(0.0, 1.0, 20_000, 1));
    let narrow = parse(calibration_json(0.0, 0.4, 20_000, 1));
    let cover = |v: &Value| v["coverage"].as_f64().unwrap();
    assert!((cover(&good) - good["nominal"].as_f64().unwrap()).abs() < 1.0);
    assert!(cover(&narrow) < cover(&good) - 20.0);
    assert!(narrow["mean_crps"].as_f64().unwrap() > good["mean_crps"].as_f64().unwrap());
    assert_eq!(good["pit_counts"].as_array().unwrap().len(), 20);
}
