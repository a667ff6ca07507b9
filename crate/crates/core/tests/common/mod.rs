#![allow(dead_code)]

pub mod lp_oracle;
pub mod polygon_check;
pub mod streams;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use grid_interdict::grid::{load_network, Network};

pub const TOYS: [&str; 3] = ["toy5_meshed", "toy7_radial", "toy6_reactive"];

pub fn data_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(file)
}

pub fn toy(name: &str) -> Network {
    load_network(data_path(&format!("{name}.json"))).expect("bundled grid loads")
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Every file under `dir` keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}
