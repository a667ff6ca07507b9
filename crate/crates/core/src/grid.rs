//! Grid data model, JSON/CSV ingestion, and load-case application.
//!
//! All electrical quantities are per-unit on `base_mva`. A grid file may
//! declare `"units": "mw"`, in which case power quantities (`p_max`, `q_min`,
//! `q_max`, `p_base`, `s_max`) are converted on load; `g` and `b` are always
//! per-unit.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error("invalid grid: {0}")]
    Validation(String),
    #[error("grid is disconnected with all branches in service: bus {0} unreachable")]
    Disconnected(u32),
    #[error("invalid time series: {0}")]
    Timeseries(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Pu,
    Mw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: u32,
    pub v_min: f64,
    pub v_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: u32,
    pub from_bus: u32,
    pub to_bus: u32,
    pub g: f64,
    pub b: f64,
    /// Stored for completeness; solves treat it as zero.
    #[serde(default)]
    pub b_shunt: f64,
    pub s_max: f64,
    #[serde(default = "yes")]
    pub attackable: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: u32,
    pub bus: u32,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub alpha: f64,
    /// Marks the connection to an upstream grid; its bus becomes the angle reference.
    #[serde(default)]
    pub external_grid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub id: u32,
    pub bus: u32,
    pub p_base: f64,
    /// Reactive-to-active ratio; any finite value, negative for capacitive loads.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GridFile {
    #[serde(default)]
    name: String,
    base_mva: f64,
    #[serde(default)]
    units: Units,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    generators: Vec<Generator>,
    demands: Vec<Demand>,
}

/// One direction of an undirected branch. Both directions share the
/// branch's single in-service decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectedBranch {
    pub branch: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    pub demands: Vec<Demand>,
    bus_index: HashMap<u32, usize>,
}

impl Network {
    pub fn new(
        name: impl Into<String>,
        base_mva: f64,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
        demands: Vec<Demand>,
    ) -> Result<Self, GridError> {
        let bus_index = buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
        let net = Self {
            name: name.into(),
            base_mva,
            buses,
            branches,
            generators,
            demands,
            bus_index,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn from_json_str(text: &str, origin: &Path) -> Result<Self, GridError> {
        let file: GridFile = serde_json::from_str(text).map_err(|e| GridError::Parse {
            path: origin.to_path_buf(),
            msg: e.to_string(),
        })?;
        let mut file = file;
        if file.units == Units::Mw {
            if !(file.base_mva > 0.0) {
                return Err(GridError::Validation("base_mva must be positive".into()));
            }
            let s = 1.0 / file.base_mva;
            for br in &mut file.branches {
                br.s_max *= s;
            }
            for g in &mut file.generators {
                g.p_max *= s;
                g.q_min *= s;
                g.q_max *= s;
            }
            for d in &mut file.demands {
                d.p_base *= s;
            }
        }
        Self::new(
            file.name,
            file.base_mva,
            file.buses,
            file.branches,
            file.generators,
            file.demands,
        )
    }

    /// Serializes in per-unit, the form `from_json_str` reads back unchanged.
    pub fn to_json(&self) -> String {
        let file = GridFile {
            name: self.name.clone(),
            base_mva: self.base_mva,
            units: Units::Pu,
            buses: self.buses.clone(),
            branches: self.branches.clone(),
            generators: self.generators.clone(),
            demands: self.demands.clone(),
        };
        serde_json::to_string_pretty(&file).expect("grid serializes")
    }

    fn validate(&self) -> Result<(), GridError> {
        let bad = |msg: String| Err(GridError::Validation(msg));
        if !(self.base_mva > 0.0 && self.base_mva.is_finite()) {
            return bad("base_mva must be positive".into());
        }
        if self.buses.is_empty() {
            return bad("no buses".into());
        }
        if self.bus_index.len() != self.buses.len() {
            return bad("duplicate bus id".into());
        }
        for b in &self.buses {
            if !(b.v_min > 0.0 && b.v_min <= b.v_max && b.v_max.is_finite()) {
                return bad(format!("bus {}: need 0 < v_min <= v_max", b.id));
            }
        }
        let mut seen = HashSet::new();
        for br in &self.branches {
            if !seen.insert(br.id) {
                return bad(format!("duplicate branch id {}", br.id));
            }
            for end in [br.from_bus, br.to_bus] {
                if !self.bus_index.contains_key(&end) {
                    return bad(format!("branch {} references unknown bus {end}", br.id));
                }
            }
            if br.from_bus == br.to_bus {
                return bad(format!("branch {} is a self-loop", br.id));
            }
            if !(br.s_max > 0.0 && br.s_max.is_finite()) {
                return bad(format!("branch {}: s_max must be positive", br.id));
            }
            if br.b == 0.0 || !br.b.is_finite() || !br.g.is_finite() || !br.b_shunt.is_finite() {
                return bad(format!(
                    "branch {}: need finite g, b_shunt and nonzero finite b",
                    br.id
                ));
            }
        }
        if self.generators.is_empty() {
            return bad("at least one generator is required".into());
        }
        let mut seen = HashSet::new();
        for g in &self.generators {
            if !seen.insert(g.id) {
                return bad(format!("duplicate generator id {}", g.id));
            }
            if !self.bus_index.contains_key(&g.bus) {
                return bad(format!(
                    "generator {} references unknown bus {}",
                    g.id, g.bus
                ));
            }
            if !(g.p_max >= 0.0 && g.p_max.is_finite())
                || !(g.q_min <= g.q_max)
                || !g.alpha.is_finite()
            {
                return bad(format!(
                    "generator {}: need p_max >= 0, q_min <= q_max, finite alpha",
                    g.id
                ));
            }
        }
        let mut seen = HashSet::new();
        for d in &self.demands {
            if !seen.insert(d.id) {
                return bad(format!("duplicate demand id {}", d.id));
            }
            if !self.bus_index.contains_key(&d.bus) {
                return bad(format!("demand {} references unknown bus {}", d.id, d.bus));
            }
            if !(d.p_base >= 0.0 && d.p_base.is_finite()) || !d.alpha.is_finite() {
                return bad(format!(
                    "demand {}: need p_base >= 0 and finite alpha",
                    d.id
                ));
            }
        }
        if let Some(island) = self.unreachable_bus(&[]) {
            return Err(GridError::Disconnected(self.buses[island].id));
        }
        Ok(())
    }

    pub fn bus_idx(&self, id: u32) -> usize {
        self.bus_index[&id]
    }

    pub fn branch_idx(&self, id: u32) -> Option<usize> {
        self.branches.iter().position(|b| b.id == id)
    }

    /// Every undirected branch as its two directed entries, `(i,j)` then `(j,i)`.
    pub fn directed_branches(&self) -> Vec<DirectedBranch> {
        self.branches
            .iter()
            .enumerate()
            .flat_map(|(k, br)| {
                let (f, t) = (self.bus_idx(br.from_bus), self.bus_idx(br.to_bus));
                [
                    DirectedBranch {
                        branch: k,
                        from: f,
                        to: t,
                    },
                    DirectedBranch {
                        branch: k,
                        from: t,
                        to: f,
                    },
                ]
            })
            .collect()
    }

    /// Bus of the first external-grid generator, else the lowest bus id.
    pub fn reference_bus(&self) -> usize {
        match self.generators.iter().find(|g| g.external_grid) {
            Some(g) => self.bus_idx(g.bus),
            None => (0..self.buses.len())
                .min_by_key(|&i| self.buses[i].id)
                .unwrap(),
        }
    }

    pub fn attackable_branches(&self) -> Vec<usize> {
        (0..self.branches.len())
            .filter(|&k| self.branches[k].attackable)
            .collect()
    }

    pub fn total_demand(&self) -> f64 {
        self.demands.iter().map(|d| d.p_base).sum()
    }

    /// First bus (by position) not reachable from bus 0 when `removed`
    /// branch positions are out of service.
    pub fn unreachable_bus(&self, removed: &[usize]) -> Option<usize> {
        let n = self.buses.len();
        let mut adj = vec![Vec::new(); n];
        for (k, br) in self.branches.iter().enumerate() {
            if removed.contains(&k) {
                continue;
            }
            let (f, t) = (self.bus_idx(br.from_bus), self.bus_idx(br.to_bus));
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.iter().position(|s| !s)
    }
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network, GridError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| GridError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Network::from_json_str(&text, path)
}

/// Multipliers for one time step, aligned with the network's demand and
/// generator order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadCase {
    pub timestep: usize,
    pub demand_scale: Vec<f64>,
    pub gen_scale: Vec<f64>,
}

impl LoadCase {
    pub fn unit(network: &Network, timestep: usize) -> Self {
        Self {
            timestep,
            demand_scale: vec![1.0; network.demands.len()],
            gen_scale: vec![1.0; network.generators.len()],
        }
    }
}

/// Reads a CSV whose first column is `t` and whose other columns are
/// `d_<id>` / `g_<id>` multipliers. Columns not present default to 1.
pub fn load_timeseries(
    path: impl AsRef<Path>,
    network: &Network,
) -> Result<Vec<LoadCase>, GridError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| GridError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_timeseries(&text, network)
}

pub fn parse_timeseries(text: &str, network: &Network) -> Result<Vec<LoadCase>, GridError> {
    let err = |m: String| GridError::Timeseries(m);
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| err(e.to_string()))?.clone();
    if headers.get(0) != Some("t") {
        return Err(err("first column must be `t`".into()));
    }
    enum Target {
        Demand(usize),
        Gen(usize),
    }
    let mut targets = Vec::new();
    for h in headers.iter().skip(1) {
        let parsed = h
            .strip_prefix("d_")
            .map(|s| (true, s))
            .or_else(|| h.strip_prefix("g_").map(|s| (false, s)));
        let Some((is_demand, id)) = parsed else {
            return Err(err(format!("unexpected column `{h}`")));
        };
        let id: u32 = id
            .parse()
            .map_err(|_| err(format!("bad id in column `{h}`")))?;
        let pos = if is_demand {
            network
                .demands
                .iter()
                .position(|d| d.id == id)
                .map(Target::Demand)
        } else {
            network
                .generators
                .iter()
                .position(|g| g.id == id)
                .map(Target::Gen)
        };
        targets
            .push(pos.ok_or_else(|| err(format!("column `{h}` names no element of the network")))?);
    }
    let mut cases = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| err(e.to_string()))?;
        record
            .get(0)
            .and_then(|t| t.parse::<i64>().ok())
            .ok_or_else(|| err(format!("row {}: `t` must be an integer", row + 1)))?;
        let mut case = LoadCase::unit(network, row + 1);
        for (target, cell) in targets.iter().zip(record.iter().skip(1)) {
            let v: f64 = cell
                .parse()
                .map_err(|_| err(format!("row {}: bad number `{cell}`", row + 1)))?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(err(format!(
                    "row {}: multiplier {v} must be finite and nonnegative",
                    row + 1
                )));
            }
            match *target {
                Target::Demand(i) => case.demand_scale[i] = v,
                Target::Gen(i) => case.gen_scale[i] = v,
            }
        }
        cases.push(case);
    }
    if cases.is_empty() {
        return Err(err("no rows".into()));
    }
    Ok(cases)
}

/// Network with effective demand and generation limits for one load case.
pub fn apply_case(network: &Network, case: &LoadCase) -> Result<Network, GridError> {
    if case.demand_scale.len() != network.demands.len()
        || case.gen_scale.len() != network.generators.len()
    {
        return Err(GridError::Timeseries(
            "load case does not match the network".into(),
        ));
    }
    let mut snap = network.clone();
    for (d, s) in snap.demands.iter_mut().zip(&case.demand_scale) {
        d.p_base *= s;
    }
    for (g, s) in snap.generators.iter_mut().zip(&case.gen_scale) {
        g.p_max *= s;
    }
    Ok(snap)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
        "base_mva": 100,
        "buses": [{"id": 1, "v_min": 0.9, "v_max": 1.1}, {"id": 2, "v_min": 0.9, "v_max": 1.1}],
        "branches": [{"id": 1, "from_bus": 1, "to_bus": 2, "g": 1.0, "b": -10.0, "s_max": 1.0}],
        "generators": [{"id": 1, "bus": 1, "p_max": 2.0, "q_min": -1.0, "q_max": 1.0, "alpha": 0.5}],
        "demands": [{"id": 1, "bus": 2, "p_base": 0.5, "alpha": 0.2}]
    }"#;

    fn small() -> Network {
        Network::from_json_str(SMALL, Path::new("small.json")).unwrap()
    }

    #[test]
    fn parses_and_expands_directions() {
        let net = small();
        assert!(net.branches[0].attackable);
        assert_eq!(net.branches[0].b_shunt, 0.0);
        let dir = net.directed_branches();
        assert_eq!(dir.len(), 2);
        assert_eq!((dir[0].from, dir[0].to), (0, 1));
        assert_eq!((dir[1].from, dir[1].to), (1, 0));
        assert_eq!(dir[0].branch, dir[1].branch);
    }

    #[test]
    fn rejects_dangling_zero_limit_and_islands() {
        let dangling = SMALL.replace(r#""to_bus": 2"#, r#""to_bus": 99"#);
        assert!(matches!(
            Network::from_json_str(&dangling, Path::new("x")),
            Err(GridError::Validation(_))
        ));
        let zero = SMALL.replace(r#""s_max": 1.0"#, r#""s_max": 0"#);
        assert!(matches!(
            Network::from_json_str(&zero, Path::new("x")),
            Err(GridError::Validation(_))
        ));
        let island = SMALL.replace(
            r#"{"id": 2, "v_min": 0.9, "v_max": 1.1}]"#,
            r#"{"id": 2, "v_min": 0.9, "v_max": 1.1}, {"id": 3, "v_min": 0.9, "v_max": 1.1}]"#,
        );
        assert!(matches!(
            Network::from_json_str(&island, Path::new("x")),
            Err(GridError::Disconnected(3))
        ));
        assert!(matches!(
            Network::from_json_str("{", Path::new("x")),
            Err(GridError::Parse { .. })
        ));
    }

    #[test]
    fn mw_units_are_converted() {
        let mw = SMALL
            .replace(r#""base_mva": 100,"#, r#""base_mva": 100, "units": "mw","#)
            .replace(r#""p_base": 0.5"#, r#""p_base": 50"#)
            .replace(r#""s_max": 1.0"#, r#""s_max": 100"#)
            .replace(
                r#""p_max": 2.0, "q_min": -1.0, "q_max": 1.0"#,
                r#""p_max": 200, "q_min": -100, "q_max": 100"#,
            );
        assert_eq!(
            Network::from_json_str(&mw, Path::new("x")).unwrap(),
            small()
        );
    }

    #[test]
    fn timeseries_rows_and_errors() {
        let net = small();
        let mut csv = String::from("t,d_1,g_1\n");
        for t in 0..96 {
            csv.push_str(&format!("{t},0.8,1.0\n"));
        }
        let cases = parse_timeseries(&csv, &net).unwrap();
        assert_eq!(cases.len(), 96);
        assert_eq!(cases[0].timestep, 1);
        assert_eq!(cases[95].timestep, 96);
        assert!(parse_timeseries("t,d_1\n0,-0.1\n", &net).is_err());
        assert!(parse_timeseries("t,d_7\n0,1\n", &net).is_err());
        assert!(parse_timeseries("t,d_1\n", &net).is_err());
    }

    #[test]
    fn apply_case_scales_limits() {
        let net = small();
        assert_eq!(apply_case(&net, &LoadCase::unit(&net, 1)).unwrap(), net);
        let case = LoadCase {
            timestep: 1,
            demand_scale: vec![2.0],
            gen_scale: vec![0.0],
        };
        let snap = apply_case(&net, &case).unwrap();
        assert_eq!(snap.demands[0].p_base, 1.0);
        assert_eq!(snap.generators[0].p_max, 0.0);
        let zero = LoadCase {
            timestep: 1,
            demand_scale: vec![0.0],
            gen_scale: vec![1.0],
        };
        assert_eq!(apply_case(&net, &zero).unwrap().total_demand(), 0.0);
    }
}
