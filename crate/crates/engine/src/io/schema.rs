//! Input file schemas and loading.
//!
//! Network and bids are commented, human-editable TOML; time series are
//! plain CSV. Hours run 0-23, one clearing interval per hour, so MW and
//! MWh coincide numerically.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clearing::ClearingInput;
use crate::model::{
    AssignedPowerSeries, BidSegment, BusId, CustomerBid, FixedLoadSeries, Line, Network,
    TlmpSeries,
};
use crate::scenarios::baseline_assignment;
use crate::settlement::SettlementBasis;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {detail}")]
    Read { path: String, detail: String },
    #[error("{path}: {detail}")]
    Parse { path: String, detail: String },
    #[error("{path}: {detail}")]
    Invalid { path: String, detail: String },
    #[error("cannot write {path}: {detail}")]
    Write { path: String, detail: String },
}

fn read_err(path: &Path, e: impl std::fmt::Display) -> IoError {
    IoError::Read {
        path: path.display().to_string(),
        detail: e.to_string(),
    }
}

fn parse_err(path: &Path, e: impl std::fmt::Display) -> IoError {
    IoError::Parse {
        path: path.display().to_string(),
        detail: e.to_string(),
    }
}

fn invalid(path: &Path, detail: impl Into<String>) -> IoError {
    IoError::Invalid {
        path: path.display().to_string(),
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------------------
// TOML schemas
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct NetworkFile {
    interface_bus: u32,
    buses: Vec<u32>,
    #[serde(rename = "line", default)]
    lines: Vec<LineFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LineFile {
    id: u32,
    from: u32,
    to: u32,
    capacity: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct BidsFile {
    #[serde(rename = "customer", default)]
    customers: Vec<CustomerFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CustomerFile {
    bus: u32,
    /// [benefit $/MWh, capacity MW] pairs, benefits non-increasing.
    segments: Vec<(f64, f64)>,
}

pub fn load_network(path: &Path) -> Result<Network, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| read_err(path, e))?;
    let file: NetworkFile = toml::from_str(&text).map_err(|e| parse_err(path, e))?;
    let network = Network {
        buses: file.buses.iter().map(|&b| BusId(b)).collect::<BTreeSet<_>>(),
        lines: file
            .lines
            .into_iter()
            .map(|l| Line {
                id: l.id,
                from_bus: BusId(l.from),
                to_bus: BusId(l.to),
                capacity: l.capacity,
            })
            .collect(),
        interface_bus: BusId(file.interface_bus),
    };
    let report = network.validate();
    if !report.is_ok() {
        return Err(invalid(path, report.errors.join("; ")));
    }
    Ok(network)
}

pub fn load_bids(path: &Path) -> Result<Vec<CustomerBid>, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| read_err(path, e))?;
    let file: BidsFile = toml::from_str(&text).map_err(|e| parse_err(path, e))?;
    file.customers
        .into_iter()
        .map(|c| {
            let segments = c
                .segments
                .iter()
                .map(|&(benefit, capacity)| BidSegment { benefit, capacity })
                .collect();
            CustomerBid::new(BusId(c.bus), segments).map_err(|e| {
                invalid(
                    path,
                    format!("customer at bus {}: {e} (segments {:?})", c.bus, c.segments),
                )
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// CSV schemas
// ---------------------------------------------------------------------------

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>, IoError> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| read_err(path, e))
}

/// `hour,bus,mw` rows; buses absent for an hour default to zero load.
pub fn load_fixed_loads(path: &Path, horizon: usize) -> Result<FixedLoadSeries, IoError> {
    let mut reader = csv_reader(path)?;
    let mut series = FixedLoadSeries::new(horizon);
    for (idx, record) in reader.deserialize::<(usize, u32, f64)>().enumerate() {
        let line = idx + 2; // header is line 1
        let (hour, bus, mw) =
            record.map_err(|e| parse_err(path, format!("line {line}: {e}")))?;
        series
            .set(BusId(bus), hour, mw)
            .map_err(|e| invalid(path, format!("line {line}: {e}")))?;
    }
    Ok(series)
}

fn load_hourly_column(
    path: &Path,
    horizon: usize,
    what: &str,
) -> Result<Vec<f64>, IoError> {
    let mut reader = csv_reader(path)?;
    let mut values = Vec::with_capacity(horizon);
    for (idx, record) in reader.deserialize::<(usize, f64)>().enumerate() {
        let line = idx + 2;
        let (hour, value) =
            record.map_err(|e| parse_err(path, format!("line {line}: {e}")))?;
        if hour != values.len() {
            return Err(invalid(
                path,
                format!("line {line}: hours must be contiguous from 0, got {hour}"),
            ));
        }
        values.push(value);
    }
    if values.len() != horizon {
        return Err(invalid(
            path,
            format!("expected {horizon} hourly {what} entries, found {}", values.len()),
        ));
    }
    Ok(values)
}

pub fn load_tlmp(path: &Path, horizon: usize) -> Result<TlmpSeries, IoError> {
    let values = load_hourly_column(path, horizon, "price")?;
    TlmpSeries::new(values).map_err(|e| invalid(path, e.to_string()))
}

pub fn load_assigned(
    path: &Path,
    horizon: usize,
    allow_negative: bool,
) -> Result<AssignedPowerSeries, IoError> {
    let values = load_hourly_column(path, horizon, "power")?;
    let result = if allow_negative {
        AssignedPowerSeries::new_allow_negative(values)
    } else {
        AssignedPowerSeries::new(values)
    };
    result.map_err(|e| invalid(path, e.to_string()))
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub network: PathBuf,
    pub bids: Option<PathBuf>,
    pub fixed: Option<PathBuf>,
    pub tlmp: PathBuf,
    /// When absent, the assigned power defaults to the grid-following
    /// import profile (`baseline_assignment`).
    pub assigned: Option<PathBuf>,
    pub mu: f64,
    pub tlmp_scale: f64,
    pub lambda_enabled: bool,
    pub basis: SettlementBasis,
    pub out_dir: PathBuf,
    pub horizon: usize,
    pub allow_negative_assigned: bool,
    pub max_iterations: Option<usize>,
}

impl RunConfig {
    pub fn solver_options(&self) -> lp_core::SolverOptions {
        let mut opts = lp_core::SolverOptions::default();
        if let Some(n) = self.max_iterations {
            opts.max_iterations = n;
        }
        opts
    }
}

pub fn load_inputs(config: &RunConfig) -> Result<ClearingInput, IoError> {
    let network = load_network(&config.network)?;
    let bids = match &config.bids {
        Some(p) => load_bids(p)?,
        None => Vec::new(),
    };
    let fixed = match &config.fixed {
        Some(p) => load_fixed_loads(p, config.horizon)?,
        None => FixedLoadSeries::new(config.horizon),
    };
    let tlmp = load_tlmp(&config.tlmp, config.horizon)?;

    let mut input = ClearingInput {
        network,
        bids,
        fixed,
        tlmp,
        assigned: AssignedPowerSeries::new(vec![0.0; config.horizon]).unwrap(),
        mu: config.mu,
        tlmp_scale: config.tlmp_scale,
        lambda_enabled: config.lambda_enabled,
    };
    input.assigned = match &config.assigned {
        Some(p) => load_assigned(p, config.horizon, config.allow_negative_assigned)?,
        None => baseline_assignment(&input).map_err(|e| IoError::Invalid {
            path: config.network.display().to_string(),
            detail: format!("cannot derive baseline assigned power: {e}"),
        })?,
    };
    input
        .validate()
        .map_err(|e| invalid(&config.network, e.to_string()))?;
    Ok(input)
}

// ---------------------------------------------------------------------------
// Fixture emission (the inverse of the loaders above)
// ---------------------------------------------------------------------------

fn write_file(path: &Path, content: &str) -> Result<(), IoError> {
    std::fs::write(path, content).map_err(|e| IoError::Write {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

/// Writes a clearing input as the five input files (`network.toml`,
/// `bids.toml`, `fixed.csv`, `tlmp.csv`, `assigned.csv`). Floats are
/// printed with full round-trip precision so a reload is field-exact.
pub fn write_input_files(input: &ClearingInput, dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::Write {
        path: dir.display().to_string(),
        detail: e.to_string(),
    })?;
    let mut written = Vec::new();

    let mut net = String::new();
    net.push_str("# Distribution network. Bus 0 is the transmission interface (feeder head).\n");
    net.push_str("# Paper-style 1-based labels are internal id + 1.\n");
    net.push_str(&format!("interface_bus = {}\n", input.network.interface_bus));
    let buses: Vec<String> = input.network.buses.iter().map(|b| b.to_string()).collect();
    net.push_str(&format!("buses = [{}]\n", buses.join(", ")));
    for line in &input.network.lines {
        net.push_str(&format!(
            "\n[[line]]\nid = {}\nfrom = {}\nto = {}\ncapacity = {:?}\n",
            line.id, line.from_bus, line.to_bus, line.capacity
        ));
    }
    let p = dir.join("network.toml");
    write_file(&p, &net)?;
    written.push(p);

    let mut bids = String::new();
    bids.push_str("# Customer demand bids: segments are [benefit $/MWh, capacity MW],\n");
    bids.push_str("# benefits non-increasing. Fixture reading: \"maximum 10 MW\" is the\n");
    bids.push_str("# per-customer total, split across four equal segments.\n");
    for c in &input.bids {
        let segs: Vec<String> = c
            .segments
            .iter()
            .map(|s| format!("[{:?}, {:?}]", s.benefit, s.capacity))
            .collect();
        bids.push_str(&format!(
            "\n[[customer]]\nbus = {}\nsegments = [{}]\n",
            c.bus,
            segs.join(", ")
        ));
    }
    let p = dir.join("bids.toml");
    write_file(&p, &bids)?;
    written.push(p);

    let mut fixed = String::from("hour,bus,mw\n");
    for hour in 0..input.horizon() {
        for bus in input.fixed.buses() {
            fixed.push_str(&format!("{hour},{bus},{:?}\n", input.fixed.get(bus, hour)));
        }
    }
    let p = dir.join("fixed.csv");
    write_file(&p, &fixed)?;
    written.push(p);

    let mut tlmp = String::from("hour,price\n");
    for (hour, v) in input.tlmp.0.iter().enumerate() {
        tlmp.push_str(&format!("{hour},{v:?}\n"));
    }
    let p = dir.join("tlmp.csv");
    write_file(&p, &tlmp)?;
    written.push(p);

    let mut assigned = String::from("hour,mw\n");
    for (hour, v) in input.assigned.0.iter().enumerate() {
        assigned.push_str(&format!("{hour},{v:?}\n"));
    }
    let p = dir.join("assigned.csv");
    write_file(&p, &assigned)?;
    written.push(p);

    Ok(written)
}
