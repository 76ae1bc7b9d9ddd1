#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eep_core::paircopula::{theta_from_tau, CopulaFamily, PairCopula, Rotation};
use eep_core::vine::StationaryVine;

pub fn eep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eep")).args(args).output().expect("binary runs")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn assert_ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), stderr(o));
}

pub fn upper_clayton(tau: f64) -> PairCopula {
    PairCopula::new(CopulaFamily::Clayton, Rotation::R180, theta_from_tau(tau, CopulaFamily::Clayton).unwrap()).unwrap()
}

/// d = 3, p = 1, positively dependent within and across time steps.
pub fn planted_vine() -> StationaryVine {
    let mut v = StationaryVine::independence(3, 1, vec![0, 1, 2]).unwrap();
    for c in 0..3 {
        v.set_class(1, c, upper_clayton(0.4));
    }
    for c in 0..3 {
        v.set_class(3, c, upper_clayton(0.3));
    }
    v
}

/// Writes `n` steps of the planted model on a unit-exponential scale, with a
/// leading time column.
pub fn write_planted_csv(path: &Path, n: usize, seed: u64) {
    let mut text = String::from("time,x1,x2,x3\n");
    for (t, row) in planted_vine().simulate_series(n, seed).iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|&u| format!("{:.9}", -(-u).ln_1p())).collect();
        text.push_str(&format!("{t},{}\n", cells.join(",")));
    }
    std::fs::write(path, text).unwrap();
}

pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect();
    (header, rows)
}

pub fn column(path: &Path, name: &str) -> Vec<String> {
    let (h, rows) = read_csv(path);
    let j = h.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.into_iter().map(|r| r[j].clone()).collect()
}

pub fn float_column(path: &Path, name: &str) -> Vec<f64> {
    column(path, name).iter().map(|s| s.parse().unwrap()).collect()
}

pub fn s(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}
