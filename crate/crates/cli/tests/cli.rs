use std::process::Command;

use conecert_cli::{Grid, Range};
use serde_json::Value;

fn conecert(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_conecert")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn range_parsing() {
    assert_eq!("0.1, 0.2".parse::<Range>(), Ok(Range(0.1, 0.2)));
    assert_eq!("0,0".parse::<Range>(), Ok(Range(0.0, 0.0)));
    assert!("0.2,0.1".parse::<Range>().is_err());
    assert!("0.2".parse::<Range>().is_err());
    assert!("nan,1".parse::<Range>().is_err());
}

#[test]
fn grid_parsing() {
    assert_eq!("512x8".parse::<Grid>(), Ok(Grid(512, 8)));
    assert_eq!("3X4".parse::<Grid>(), Ok(Grid(3, 4)));
    assert!("0x4".parse::<Grid>().is_err());
    assert!("12".parse::<Grid>().is_err());
}

#[test]
fn profile_of_homogeneous_cone() {
    let (code, csv) = conecert(&["profile", "--c", "0", "--eps", "0", "--grid", "4x11"]);
    assert_eq!(code, 0);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,t,v_midpoint,w_midpoint,G_midpoint,grad_sq_midpoint"));
    let mut n = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        n += 1;
        if f[1] == "-1" {
            assert_eq!(f[2], "", "singular end is left blank");
            continue;
        }
        let [r, t, v] = [0, 1, 2].map(|i| f[i].parse::<f64>().unwrap());
        assert!((v - r * t).abs() <= 1e-12, "{line}");
    }
    assert_eq!(n, 44);
}

#[test]
fn critical_reports_enclosure() {
    let (code, out) = conecert(&["critical", "--tol", "1e-4"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["schema_version"], 1);
    let enc = &v["claims"][0]["detail"]["enclosure"];
    assert!(enc["lo"].as_f64().unwrap() < 0.5885 && enc["hi"].as_f64().unwrap() > 0.5883);
}

#[test]
fn critical_without_sign_change_is_an_error() {
    assert_eq!(conecert(&["critical", "--search", "0.0,0.3"]).0, 2);
}

#[test]
fn invalid_arguments_exit_two() {
    assert_eq!(conecert(&["subsolution", "--grid", "0x3"]).0, 2);
    assert_eq!(conecert(&["subsolution", "--c", "0.5,1.2"]).0, 2);
    assert_eq!(conecert(&["supersolution", "--row", "9"]).0, 2);
}

#[test]
fn subsolution_pass_and_fail_exit_codes() {
    let (code, out) = conecert(&["subsolution", "--c", "0,0.1", "--c-subintervals", "4", "--grid", "64x4"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["claims"][0]["detail"]["summary"]["global_min"]["value"]["lo"].as_f64().unwrap() > 0.0);
    assert_eq!(conecert(&["subsolution", "--c", "0.60,0.62", "--c-subintervals", "2", "--grid", "64x4"]).0, 1);
}

#[test]
fn report_schema_lists_commands() {
    let (code, out) = conecert(&["report-schema"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["properties"]["schema_version"]["const"], 1);
    let required: Vec<&str> = v["required"].as_array().unwrap().iter().filter_map(Value::as_str).collect();
    assert!(required.contains(&"claims") && required.contains(&"verdict"));
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("schema.json");
    let (code, out) = conecert(&["--out", path.to_str().unwrap(), "report-schema"]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let (_, direct) = conecert(&["report-schema"]);
    assert_eq!(std::fs::read_to_string(path).unwrap(), direct);
}
