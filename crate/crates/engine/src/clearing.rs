//! Hourly welfare-maximization clearing and D-LMP extraction.
//!
//! Each hour is an independent LP over the segment awards, line flows,
//! the interface import, and the deviation split. The LP is posed as a
//! minimization (negated welfare), so the dual of a bus balance row is
//! directly the marginal cost of serving one more MW of fixed load at
//! that bus: the D-LMP.

use std::collections::BTreeMap;

use lp_core::{solve, LpProblem, LpSolution, LpStatus, Relation, SolverOptions};

use crate::model::{
    AssignedPowerSeries, BusId, CustomerBid, FixedLoadSeries, Network, TlmpSeries,
};

/// Default penalty for grid-independent clearing. Must dominate the
/// largest bid benefit for the schedule to bind.
pub const DEFAULT_LARGE_MU: f64 = 1e6;

const SCHEDULE_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct ClearingInput {
    pub network: Network,
    pub bids: Vec<CustomerBid>,
    pub fixed: FixedLoadSeries,
    pub tlmp: TlmpSeries,
    pub assigned: AssignedPowerSeries,
    /// Deviation penalty mu ($/MWh), >= 0.
    pub mu: f64,
    /// Multiplier applied to every T-LMP before it enters the objective.
    pub tlmp_scale: f64,
    /// When false the import-cost term is dropped from the objective
    /// (the T-LMP is treated as negligible).
    pub lambda_enabled: bool,
}

impl ClearingInput {
    pub fn horizon(&self) -> usize {
        self.fixed.horizon()
    }

    /// Effective hourly import price as seen by the objective.
    pub fn effective_tlmp(&self, hour: usize) -> f64 {
        self.tlmp_scale * self.tlmp.get(hour)
    }

    pub fn validate(&self) -> Result<(), ClearingError> {
        let report = self.network.validate();
        if !report.is_ok() {
            return Err(ClearingError::InvalidInput(report.errors.join("; ")));
        }
        for bid in &self.bids {
            bid.validate()
                .map_err(|e| ClearingError::InvalidInput(e.to_string()))?;
            if !self.network.buses.contains(&bid.bus) {
                return Err(ClearingError::InvalidInput(format!(
                    "bid references undeclared bus {}",
                    bid.bus
                )));
            }
        }
        for bus in self.fixed.buses() {
            if !self.network.buses.contains(&bus) {
                return Err(ClearingError::InvalidInput(format!(
                    "fixed load references undeclared bus {bus}"
                )));
            }
        }
        let h = self.horizon();
        if self.tlmp.len() != h {
            return Err(ClearingError::InvalidInput(format!(
                "tlmp series has {} entries, expected {h}",
                self.tlmp.len()
            )));
        }
        if self.assigned.len() != h {
            return Err(ClearingError::InvalidInput(format!(
                "assigned power series has {} entries, expected {h}",
                self.assigned.len()
            )));
        }
        if !(self.mu >= 0.0) {
            return Err(ClearingError::InvalidInput(format!(
                "mu must be >= 0, got {}",
                self.mu
            )));
        }
        if !(self.tlmp_scale >= 0.0) {
            return Err(ClearingError::InvalidInput(format!(
                "tlmp_scale must be >= 0, got {}",
                self.tlmp_scale
            )));
        }
        Ok(())
    }
}

/// Variable and row layout of one hourly LP, used to read the solution
/// back out and to locate the balance-row duals.
#[derive(Clone, Debug)]
pub struct HourlyLayout {
    /// seg_vars[bid][segment] -> LP variable index.
    pub seg_vars: Vec<Vec<usize>>,
    /// line_vars[line index in network.lines] -> LP variable index.
    pub line_vars: Vec<usize>,
    pub p_main_var: usize,
    pub p_pos_var: usize,
    pub p_neg_var: usize,
    /// Balance row per bus, in ascending bus order.
    pub bus_rows: BTreeMap<BusId, usize>,
    pub deviation_row: usize,
}

/// Builds the minimization LP for one hour: negated bid benefits plus the
/// (scaled) import cost plus the deviation penalty, subject to nodal
/// balance, the interface row, the deviation split, and box limits.
pub fn build_hourly_lp(input: &ClearingInput, hour: usize) -> (LpProblem, HourlyLayout) {
    let mut lp = LpProblem::new();
    let inc = input.network.incidence();

    let seg_vars: Vec<Vec<usize>> = input
        .bids
        .iter()
        .map(|bid| {
            bid.segments
                .iter()
                .map(|seg| lp.add_var(0.0, seg.capacity, -seg.benefit))
                .collect()
        })
        .collect();

    let line_vars: Vec<usize> = input
        .network
        .lines
        .iter()
        .map(|line| lp.add_var(-line.capacity, line.capacity, 0.0))
        .collect();

    let import_cost = if input.lambda_enabled {
        input.effective_tlmp(hour)
    } else {
        0.0
    };
    let p_main_var = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, import_cost);
    let p_pos_var = lp.add_var(0.0, f64::INFINITY, input.mu);
    let p_neg_var = lp.add_var(0.0, f64::INFINITY, input.mu);

    // One balance row per bus: net line inflow minus elastic awards equals
    // the fixed load; the interface row additionally carries the import.
    let mut bus_rows = BTreeMap::new();
    for &bus in &input.network.buses {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        if bus == input.network.interface_bus {
            coeffs.push((p_main_var, 1.0));
        }
        for (l, &v) in line_vars.iter().enumerate() {
            let a = inc.coefficient(l, bus);
            if a != 0.0 {
                coeffs.push((v, a));
            }
        }
        for (b, bid) in input.bids.iter().enumerate() {
            if bid.bus == bus {
                for &v in &seg_vars[b] {
                    coeffs.push((v, -1.0));
                }
            }
        }
        let row = lp.add_constraint(coeffs, Relation::Eq, input.fixed.get(bus, hour));
        bus_rows.insert(bus, row);
    }

    let deviation_row = lp.add_constraint(
        vec![(p_main_var, 1.0), (p_pos_var, -1.0), (p_neg_var, 1.0)],
        Relation::Eq,
        input.assigned.get(hour),
    );

    (
        lp,
        HourlyLayout {
            seg_vars,
            line_vars,
            p_main_var,
            p_pos_var,
            p_neg_var,
            bus_rows,
            deviation_row,
        },
    )
}

/// D-LMP per bus: the dual of each bus balance row, i.e. the sensitivity
/// of the minimized objective to one extra MW of fixed load there.
pub fn extract_dlmp(layout: &HourlyLayout, solution: &LpSolution) -> BTreeMap<BusId, f64> {
    layout
        .bus_rows
        .iter()
        .map(|(&bus, &row)| (bus, solution.duals[row]))
        .collect()
}

/// Dispatch of one customer's bid in one hour.
#[derive(Clone, Debug)]
pub struct BidDispatch {
    pub bus: BusId,
    /// Award per segment (MW), in bid order.
    pub awards: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct HourlyClearing {
    pub hour: usize,
    /// Import from the main grid P^M (MW).
    pub p_main: f64,
    /// p_main minus the assigned power (MW).
    pub deviation: f64,
    pub p_pos: f64,
    pub p_neg: f64,
    pub dispatch: Vec<BidDispatch>,
    /// Total served load per bus (elastic awards plus fixed load).
    pub load: BTreeMap<BusId, f64>,
    /// Flow per line (MW), positive in the line's declared direction.
    pub flow: Vec<f64>,
    pub dlmp: BTreeMap<BusId, f64>,
    /// Social-welfare contribution of this hour (maximization sense).
    pub objective: f64,
    /// Scaled T-LMP this hour (the price the objective saw when enabled).
    pub effective_tlmp: f64,
}

impl HourlyClearing {
    pub fn total_load(&self) -> f64 {
        self.load.values().sum()
    }

    pub fn interface_dlmp(&self) -> f64 {
        self.dlmp[&BusId::INTERFACE]
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveDiagnostics {
    pub hour: usize,
    pub iterations: usize,
    pub lp_objective: f64,
}

#[derive(Clone, Debug)]
pub struct ClearingResult {
    pub hours: Vec<HourlyClearing>,
    /// Total social welfare over the horizon (maximization sense).
    pub total_objective: f64,
    pub diagnostics: Vec<SolveDiagnostics>,
}

impl ClearingResult {
    pub fn max_abs_deviation(&self) -> f64 {
        self.hours
            .iter()
            .map(|h| h.deviation.abs())
            .fold(0.0, f64::max)
    }

    pub fn total_abs_deviation(&self) -> f64 {
        self.hours.iter().map(|h| h.deviation.abs()).sum()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ClearingError {
    #[error("invalid clearing input: {0}")]
    InvalidInput(String),
    #[error("hour {hour} is infeasible: {detail}")]
    Infeasible { hour: usize, detail: String },
    #[error("hour {hour} is unbounded; check capacities and penalty signs")]
    Unbounded { hour: usize },
    #[error("solver failed at hour {hour}: {detail}")]
    Solver { hour: usize, detail: String },
    #[error(
        "schedule unreachable: max |deviation| = {max_deviation} MW at hour {hour} \
         despite mu = {mu}"
    )]
    ScheduleUnreachable {
        hour: usize,
        max_deviation: f64,
        mu: f64,
        /// The clearing that was produced anyway, for inspection.
        result: Box<ClearingResult>,
    },
}

/// Clears every hour of the horizon. Hours are independent LPs; results
/// are assembled in hour order.
pub fn clear(input: &ClearingInput) -> Result<ClearingResult, ClearingError> {
    clear_with_options(input, &SolverOptions::default())
}

pub fn clear_with_options(
    input: &ClearingInput,
    options: &SolverOptions,
) -> Result<ClearingResult, ClearingError> {
    input.validate()?;
    let mut hours = Vec::with_capacity(input.horizon());
    let mut diagnostics = Vec::with_capacity(input.horizon());
    let mut total = 0.0;
    for hour in 0..input.horizon() {
        let (lp, layout) = build_hourly_lp(input, hour);
        let sol = solve(&lp, options).map_err(|e| ClearingError::Solver {
            hour,
            detail: e.to_string(),
        })?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                return Err(ClearingError::Infeasible {
                    hour,
                    detail: infeasibility_diagnostic(input, hour, &layout, &sol),
                });
            }
            LpStatus::Unbounded => return Err(ClearingError::Unbounded { hour }),
            LpStatus::IterationLimit => {
                return Err(ClearingError::Solver {
                    hour,
                    detail: format!("iteration limit after {} pivots", sol.iterations),
                });
            }
        }
        let mut hc = assemble_hour(input, hour, &layout, &sol);
        if input.mu > 0.0 && hc.deviation.abs() <= SCHEDULE_TOL {
            // The hour sits exactly on the schedule, where the deviation
            // penalty kinks and the balance duals are a whole interval
            // (the solver may land on a band edge proportional to mu).
            // Price off a solve with the schedule nudged down instead:
            // that pins the dual to the marginal served benefit, which
            // does not scale with mu.
            if let Some(dlmp) = kink_pricing_duals(input, hour, options) {
                hc.dlmp = dlmp;
            }
        }
        total += hc.objective;
        diagnostics.push(SolveDiagnostics {
            hour,
            iterations: sol.iterations,
            lp_objective: sol.objective,
        });
        hours.push(hc);
    }
    Ok(ClearingResult {
        hours,
        total_objective: total,
        diagnostics,
    })
}

/// Size of the schedule nudge used to break dual degeneracy at the
/// penalty kink. Large enough to clear the feasibility tolerance, small
/// enough not to move the marginal segment.
const KINK_NUDGE_MW: f64 = 1e-6;

fn kink_pricing_duals(
    input: &ClearingInput,
    hour: usize,
    options: &SolverOptions,
) -> Option<BTreeMap<BusId, f64>> {
    let mut nudged = input.clone();
    let mut values: Vec<f64> = (0..input.horizon()).map(|t| input.assigned.get(t)).collect();
    values[hour] -= KINK_NUDGE_MW;
    nudged.assigned = AssignedPowerSeries::new_allow_negative(values).ok()?;
    let (lp, layout) = build_hourly_lp(&nudged, hour);
    let sol = solve(&lp, options).ok()?;
    if sol.status != LpStatus::Optimal {
        return None;
    }
    Some(extract_dlmp(&layout, &sol))
}

fn assemble_hour(
    input: &ClearingInput,
    hour: usize,
    layout: &HourlyLayout,
    sol: &LpSolution,
) -> HourlyClearing {
    let x = &sol.primal;
    let dispatch: Vec<BidDispatch> = input
        .bids
        .iter()
        .zip(&layout.seg_vars)
        .map(|(bid, vars)| BidDispatch {
            bus: bid.bus,
            awards: vars.iter().map(|&v| x[v]).collect(),
        })
        .collect();

    let mut load: BTreeMap<BusId, f64> = input
        .network
        .buses
        .iter()
        .map(|&b| (b, input.fixed.get(b, hour)))
        .collect();
    for d in &dispatch {
        let total: f64 = d.awards.iter().sum();
        *load.get_mut(&d.bus).unwrap() += total;
    }

    let p_main = x[layout.p_main_var];
    HourlyClearing {
        hour,
        p_main,
        deviation: p_main - input.assigned.get(hour),
        p_pos: x[layout.p_pos_var],
        p_neg: x[layout.p_neg_var],
        dispatch,
        load,
        flow: layout.line_vars.iter().map(|&v| x[v]).collect(),
        dlmp: extract_dlmp(layout, sol),
        // Welfare is the negated LP objective.
        objective: -sol.objective,
        effective_tlmp: input.effective_tlmp(hour),
    }
}

/// Names the binding candidates visible in the phase-1 point: lines at
/// capacity and buses whose balance could not be met.
fn infeasibility_diagnostic(
    input: &ClearingInput,
    hour: usize,
    layout: &HourlyLayout,
    sol: &LpSolution,
) -> String {
    let x = &sol.primal;
    let mut notes = vec![format!("phase-1 residual {:.6} MW", sol.infeasibility)];
    for (l, line) in input.network.lines.iter().enumerate() {
        let flow = x[layout.line_vars[l]];
        if flow.abs() >= line.capacity - 1e-9 {
            notes.push(format!(
                "line {} ({}->{}) at its {} MW limit",
                line.id, line.from_bus, line.to_bus, line.capacity
            ));
        }
    }
    for (&bus, &row) in &layout.bus_rows {
        let residual = balance_residual(input, hour, layout, x, bus, row);
        if residual.abs() > 1e-9 {
            notes.push(format!("bus {bus} balance short by {residual:.6} MW"));
        }
    }
    notes.join("; ")
}

fn balance_residual(
    input: &ClearingInput,
    hour: usize,
    layout: &HourlyLayout,
    x: &[f64],
    bus: BusId,
    _row: usize,
) -> f64 {
    let inc = input.network.incidence();
    let mut lhs = 0.0;
    if bus == input.network.interface_bus {
        lhs += x[layout.p_main_var];
    }
    for (l, &v) in layout.line_vars.iter().enumerate() {
        lhs += inc.coefficient(l, bus) * x[v];
    }
    for (b, bid) in input.bids.iter().enumerate() {
        if bid.bus == bus {
            for &v in &layout.seg_vars[b] {
                lhs -= x[v];
            }
        }
    }
    input.fixed.get(bus, hour) - lhs
}

/// Grid-following clearing: mu forced to zero, so the interface D-LMP
/// tracks the (scaled) T-LMP and imports float freely.
pub fn grid_following(input: &ClearingInput) -> Result<ClearingResult, ClearingError> {
    let mut i = input.clone();
    i.mu = 0.0;
    clear(&i)
}

/// Grid-independent clearing: mu set large so the assigned schedule
/// binds. Reports `ScheduleUnreachable` when the optimum still deviates
/// (the assigned power lies outside the deliverable range).
pub fn grid_independent(
    input: &ClearingInput,
    large_mu: f64,
) -> Result<ClearingResult, ClearingError> {
    let mut i = input.clone();
    i.mu = large_mu;
    let result = clear(&i)?;
    let max_dev = result.max_abs_deviation();
    if max_dev > SCHEDULE_TOL {
        let hour = result
            .hours
            .iter()
            .max_by(|a, b| a.deviation.abs().total_cmp(&b.deviation.abs()))
            .map(|h| h.hour)
            .unwrap_or(0);
        return Err(ClearingError::ScheduleUnreachable {
            hour,
            max_deviation: max_dev,
            mu: large_mu,
            result: Box::new(result),
        });
    }
    Ok(result)
}
