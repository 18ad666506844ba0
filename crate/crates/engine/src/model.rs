//! Domain types for the distribution network, customer bids, and the
//! hourly input series, plus validation and bid aggregation.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Line capacity used to mean "effectively unlimited" (MW).
pub const UNLIMITED_CAPACITY_MW: f64 = 1e6;

/// Default clearing horizon: 24 hourly intervals.
pub const DEFAULT_HORIZON: usize = 24;

/// Distribution bus identifier. Bus 0 is reserved for the
/// transmission-distribution interface (the feeder head).
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct BusId(pub u32);

impl BusId {
    pub const INTERFACE: BusId = BusId(0);
}

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Directed distribution line. Positive flow means power moving from
/// `from_bus` to `to_bus`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: u32,
    pub from_bus: BusId,
    pub to_bus: BusId,
    /// Flow limit in MW, applied symmetrically in both directions.
    pub capacity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub buses: BTreeSet<BusId>,
    pub lines: Vec<Line>,
    pub interface_bus: BusId,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

impl Network {
    /// Structural checks. An empty `errors` list means the network is
    /// usable by the clearing engine; warnings flag non-radial topology.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.interface_bus != BusId::INTERFACE {
            report
                .errors
                .push(format!("interface bus must be 0, got {}", self.interface_bus));
        }
        if !self.buses.contains(&self.interface_bus) {
            report
                .errors
                .push(format!("interface bus {} is not declared", self.interface_bus));
        }
        let mut seen_ids = HashSet::new();
        for line in &self.lines {
            if !seen_ids.insert(line.id) {
                report.errors.push(format!("duplicate line id {}", line.id));
            }
            if line.from_bus == line.to_bus {
                report
                    .errors
                    .push(format!("line {} is a self-loop at bus {}", line.id, line.from_bus));
            }
            for bus in [line.from_bus, line.to_bus] {
                if !self.buses.contains(&bus) {
                    report.errors.push(format!(
                        "line {} endpoint {} is not a declared bus",
                        line.id, bus
                    ));
                }
            }
            if !(line.capacity > 0.0) || !line.capacity.is_finite() {
                report.errors.push(format!(
                    "line {} capacity {} must be positive and finite \
                     (use the {UNLIMITED_CAPACITY_MW} MW sentinel for unlimited)",
                    line.id, line.capacity
                ));
            }
        }

        // Connectivity over the undirected graph.
        if !self.buses.is_empty() {
            let mut adj: BTreeMap<BusId, Vec<BusId>> = BTreeMap::new();
            for line in &self.lines {
                adj.entry(line.from_bus).or_default().push(line.to_bus);
                adj.entry(line.to_bus).or_default().push(line.from_bus);
            }
            let start = *self.buses.iter().next().unwrap();
            let mut seen = BTreeSet::new();
            let mut stack = vec![start];
            while let Some(b) = stack.pop() {
                if seen.insert(b) {
                    if let Some(next) = adj.get(&b) {
                        stack.extend(next.iter().copied());
                    }
                }
            }
            if seen.len() < self.buses.len() {
                let missing: Vec<String> = self
                    .buses
                    .iter()
                    .filter(|b| !seen.contains(b))
                    .map(|b| b.to_string())
                    .collect();
                report.errors.push(format!(
                    "network is disconnected; unreachable buses: {}",
                    missing.join(", ")
                ));
            } else if self.lines.len() + 1 != self.buses.len() {
                report.warnings.push(format!(
                    "network is not a tree ({} buses, {} lines); radial feeders expected",
                    self.buses.len(),
                    self.lines.len()
                ));
            }
        }
        report
    }

    /// Bus-line incidence: for line l oriented from i to j, a(l, j) = +1
    /// and a(l, i) = -1, so `sum_l a(l, m) * flow_l` is net inflow at m.
    pub fn incidence(&self) -> Incidence {
        Incidence {
            lines: self.lines.iter().map(|l| (l.from_bus, l.to_bus)).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Incidence {
    lines: Vec<(BusId, BusId)>,
}

impl Incidence {
    pub fn coefficient(&self, line: usize, bus: BusId) -> f64 {
        let (from, to) = self.lines[line];
        if bus == to {
            1.0
        } else if bus == from {
            -1.0
        } else {
            0.0
        }
    }

    pub fn num_lines(&self) -> usize {
        self.lines.len()
    }
}

/// One step of a customer's demand bid: willingness to pay `benefit`
/// ($/MWh) for up to `capacity` MW.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidSegment {
    pub benefit: f64,
    pub capacity: f64,
}

/// A customer's stepwise demand bid at one bus. Segment benefits must be
/// non-increasing (the staircase shape of a demand curve).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CustomerBid {
    pub bus: BusId,
    pub segments: Vec<BidSegment>,
}

impl CustomerBid {
    pub fn new(bus: BusId, segments: Vec<BidSegment>) -> Result<Self, ModelError> {
        let bid = CustomerBid { bus, segments };
        bid.validate()?;
        Ok(bid)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (g, seg) in self.segments.iter().enumerate() {
            if !seg.benefit.is_finite() {
                return Err(ModelError::BadBid {
                    bus: self.bus,
                    detail: format!("segment {g} benefit is not finite"),
                });
            }
            if !(seg.capacity >= 0.0) || !seg.capacity.is_finite() {
                return Err(ModelError::BadBid {
                    bus: self.bus,
                    detail: format!("segment {g} capacity {} is negative", seg.capacity),
                });
            }
            if g > 0 && seg.benefit > self.segments[g - 1].benefit {
                return Err(ModelError::BadBid {
                    bus: self.bus,
                    detail: format!(
                        "segments not non-increasing: benefit {} follows {}",
                        seg.benefit,
                        self.segments[g - 1].benefit
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn total_capacity(&self) -> f64 {
        self.segments.iter().map(|s| s.capacity).sum()
    }
}

/// Hourly fixed (passive-customer) load per bus. Buses without an entry
/// carry zero fixed load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedLoadSeries {
    horizon: usize,
    loads: BTreeMap<BusId, Vec<f64>>,
}

impl FixedLoadSeries {
    pub fn new(horizon: usize) -> Self {
        FixedLoadSeries {
            horizon,
            loads: BTreeMap::new(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn set(&mut self, bus: BusId, hour: usize, mw: f64) -> Result<(), ModelError> {
        if hour >= self.horizon {
            return Err(ModelError::BadHour {
                hour,
                horizon: self.horizon,
            });
        }
        if !(mw >= 0.0) || !mw.is_finite() {
            return Err(ModelError::BadFixedLoad { bus, hour, mw });
        }
        self.loads.entry(bus).or_insert_with(|| vec![0.0; self.horizon])[hour] = mw;
        Ok(())
    }

    /// Constant load across every hour of the horizon.
    pub fn set_flat(&mut self, bus: BusId, mw: f64) -> Result<(), ModelError> {
        for hour in 0..self.horizon {
            self.set(bus, hour, mw)?;
        }
        Ok(())
    }

    pub fn get(&self, bus: BusId, hour: usize) -> f64 {
        self.loads.get(&bus).map_or(0.0, |v| v[hour])
    }

    pub fn total(&self, hour: usize) -> f64 {
        self.loads.values().map(|v| v[hour]).sum()
    }

    pub fn buses(&self) -> impl Iterator<Item = BusId> + '_ {
        self.loads.keys().copied()
    }
}

/// Hourly T-LMP at the substation node ($/MWh), an exogenous input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TlmpSeries(pub Vec<f64>);

impl TlmpSeries {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        if let Some(h) = values.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteSeries {
                series: "tlmp",
                hour: h,
            });
        }
        Ok(TlmpSeries(values))
    }

    pub fn get(&self, hour: usize) -> f64 {
        self.0[hour]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Hourly power awarded by the ISO (MW). Negative entries are rejected
/// unless explicitly permitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignedPowerSeries(pub Vec<f64>);

impl AssignedPowerSeries {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        Self::checked(values, false)
    }

    pub fn new_allow_negative(values: Vec<f64>) -> Result<Self, ModelError> {
        Self::checked(values, true)
    }

    fn checked(values: Vec<f64>, allow_negative: bool) -> Result<Self, ModelError> {
        for (h, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(ModelError::NonFiniteSeries {
                    series: "assigned power",
                    hour: h,
                });
            }
            if v < 0.0 && !allow_negative {
                return Err(ModelError::NegativeAssignedPower { hour: h, mw: v });
            }
        }
        Ok(AssignedPowerSeries(values))
    }

    pub fn get(&self, hour: usize) -> f64 {
        self.0[hour]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The DMO's ISO-facing bid for one hour: merged elastic steps sorted by
/// non-increasing benefit plus the total inelastic (fixed) block.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregatedBid {
    pub hour: usize,
    pub steps: Vec<(f64, f64)>,
    pub inelastic_block: f64,
}

/// Merges all customers' segments into one staircase, summing capacities
/// of equal-benefit steps.
pub fn aggregate_bid(
    bids: &[CustomerBid],
    fixed: &FixedLoadSeries,
    hour: usize,
) -> AggregatedBid {
    let mut steps: Vec<(f64, f64)> = bids
        .iter()
        .flat_map(|b| b.segments.iter().map(|s| (s.benefit, s.capacity)))
        .collect();
    steps.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(steps.len());
    for (benefit, cap) in steps {
        match merged.last_mut() {
            Some((b, c)) if *b == benefit => *c += cap,
            _ => merged.push((benefit, cap)),
        }
    }
    AggregatedBid {
        hour,
        steps: merged,
        inelastic_block: fixed.total(hour),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid bid at bus {bus}: {detail}")]
    BadBid { bus: BusId, detail: String },
    #[error("hour {hour} outside horizon {horizon}")]
    BadHour { hour: usize, horizon: usize },
    #[error("fixed load at bus {bus}, hour {hour}: {mw} must be finite and >= 0")]
    BadFixedLoad { bus: BusId, hour: usize, mw: f64 },
    #[error("{series} series has a non-finite entry at hour {hour}")]
    NonFiniteSeries { series: &'static str, hour: usize },
    #[error("assigned power at hour {hour} is negative ({mw} MW); pass --allow-negative-assigned to accept")]
    NegativeAssignedPower { hour: usize, mw: f64 },
}
