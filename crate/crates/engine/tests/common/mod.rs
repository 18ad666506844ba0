//! Shared helpers for the integration suites: small hand-built inputs, a
//! random radial-instance generator, and an exhaustive grid-search oracle
//! for the hourly clearing objective.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use dmo_engine::clearing::ClearingInput;
use dmo_engine::model::{
    AssignedPowerSeries, BidSegment, BusId, CustomerBid, FixedLoadSeries, Line, Network,
    TlmpSeries, UNLIMITED_CAPACITY_MW,
};

/// Two buses 0 and 1 joined by one line, a single customer at bus 1,
/// one-hour horizon.
pub fn two_bus_input(
    segments: &[(f64, f64)],
    fixed_at_1: f64,
    tlmp: f64,
    mu: f64,
    line_cap: f64,
    assigned: f64,
) -> ClearingInput {
    let network = Network {
        buses: [BusId(0), BusId(1)].into_iter().collect(),
        lines: vec![Line {
            id: 0,
            from_bus: BusId(0),
            to_bus: BusId(1),
            capacity: line_cap,
        }],
        interface_bus: BusId::INTERFACE,
    };
    let bids = if segments.is_empty() {
        vec![]
    } else {
        vec![CustomerBid::new(
            BusId(1),
            segments
                .iter()
                .map(|&(benefit, capacity)| BidSegment { benefit, capacity })
                .collect(),
        )
        .unwrap()]
    };
    let mut fixed = FixedLoadSeries::new(1);
    fixed.set(BusId(1), 0, fixed_at_1).unwrap();
    ClearingInput {
        network,
        bids,
        fixed,
        tlmp: TlmpSeries::new(vec![tlmp]).unwrap(),
        assigned: AssignedPowerSeries::new_allow_negative(vec![assigned]).unwrap(),
        mu,
        tlmp_scale: 1.0,
        lambda_enabled: true,
    }
}

/// A random radial instance: <= `max_buses` buses in a tree rooted at the
/// interface, bids with non-increasing random benefits, grid-aligned
/// capacities and fixed loads so the 0.5 MW oracle can reach the optimum
/// corner structure.
pub fn random_instance(rng: &mut ChaCha8Rng, horizon: usize, grid_aligned: bool) -> ClearingInput {
    let n_buses = rng.gen_range(2..=4usize);
    let buses: std::collections::BTreeSet<BusId> = (0..n_buses as u32).map(BusId).collect();
    // Tree: each bus i > 0 hangs off a random earlier bus.
    let lines: Vec<Line> = (1..n_buses as u32)
        .map(|i| {
            let parent = rng.gen_range(0..i);
            let capacity = if rng.gen_bool(0.3) {
                if grid_aligned {
                    rng.gen_range(4..=12) as f64 * 0.5
                } else {
                    rng.gen_range(2.0..6.0)
                }
            } else {
                UNLIMITED_CAPACITY_MW
            };
            Line {
                id: i - 1,
                from_bus: BusId(parent),
                to_bus: BusId(i),
                capacity,
            }
        })
        .collect();
    let network = Network {
        buses,
        lines,
        interface_bus: BusId::INTERFACE,
    };

    let mut bids = Vec::new();
    for b in 0..n_buses as u32 {
        if rng.gen_bool(0.7) {
            let n_segs = rng.gen_range(1..=3usize);
            let mut benefits: Vec<f64> = (0..n_segs).map(|_| rng.gen_range(5.0..60.0)).collect();
            benefits.sort_by(|a, b| b.total_cmp(a));
            let segments = benefits
                .into_iter()
                .map(|benefit| BidSegment {
                    benefit,
                    capacity: if grid_aligned {
                        rng.gen_range(1..=4) as f64 * 0.5
                    } else {
                        rng.gen_range(0.5..2.5)
                    },
                })
                .collect();
            bids.push(CustomerBid::new(BusId(b), segments).unwrap());
        }
    }

    let mut fixed = FixedLoadSeries::new(horizon);
    for b in 0..n_buses as u32 {
        if rng.gen_bool(0.5) {
            for h in 0..horizon {
                let mw = if grid_aligned {
                    rng.gen_range(0..=2) as f64 * 0.5
                } else {
                    rng.gen_range(0.0..1.0)
                };
                fixed.set(BusId(b), h, mw).unwrap();
            }
        }
    }

    let tlmp =
        TlmpSeries::new((0..horizon).map(|_| rng.gen_range(10.0..55.0)).collect()).unwrap();
    let assigned = AssignedPowerSeries::new(
        (0..horizon)
            .map(|_| {
                if grid_aligned {
                    rng.gen_range(0..=10) as f64 * 0.5
                } else {
                    rng.gen_range(0.0..6.0)
                }
            })
            .collect(),
    )
    .unwrap();

    ClearingInput {
        network,
        bids,
        fixed,
        tlmp,
        assigned,
        mu: 0.0,
        tlmp_scale: 1.0,
        lambda_enabled: true,
    }
}

/// Minimized-objective value of one feasible fill assignment, or None if
/// a line limit is violated. Flows on the tree are the downstream load
/// sums, so feasibility is a direct check.
fn evaluate_fills(input: &ClearingInput, hour: usize, fills: &[Vec<f64>]) -> Option<f64> {
    let n_buses = input.network.buses.len() as u32;
    let mut load = vec![0.0f64; n_buses as usize];
    for b in 0..n_buses {
        load[b as usize] = input.fixed.get(BusId(b), hour);
    }
    let mut benefit_total = 0.0;
    for (bid, bid_fills) in input.bids.iter().zip(fills) {
        for (seg, &fill) in bid.segments.iter().zip(bid_fills) {
            load[bid.bus.0 as usize] += fill;
            benefit_total += seg.benefit * fill;
        }
    }

    // Downstream load sum per line; lines are oriented parent -> child in
    // the generator, and children have larger ids than their parents.
    let mut subtree = load.clone();
    let mut lines: Vec<&dmo_engine::model::Line> = input.network.lines.iter().collect();
    lines.sort_by_key(|l| std::cmp::Reverse(l.to_bus.0));
    for line in &lines {
        let flow = subtree[line.to_bus.0 as usize];
        if flow.abs() > line.capacity + 1e-9 {
            return None;
        }
        subtree[line.from_bus.0 as usize] += flow;
    }

    let p_main: f64 = load.iter().sum();
    let import_cost = if input.lambda_enabled {
        input.effective_tlmp(hour) * p_main
    } else {
        0.0
    };
    let deviation = (p_main - input.assigned.get(hour)).abs();
    Some(-benefit_total + import_cost + input.mu * deviation)
}

/// Exhaustive grid search over segment fill levels at `step` MW
/// resolution. Returns the best minimized objective, or None when even
/// the all-zero fill is infeasible.
pub fn grid_search_min(input: &ClearingInput, hour: usize, step: f64) -> Option<f64> {
    let levels: Vec<Vec<usize>> = input
        .bids
        .iter()
        .map(|b| {
            b.segments
                .iter()
                .map(|s| (s.capacity / step).round() as usize)
                .collect()
        })
        .collect();
    let mut fills: Vec<Vec<f64>> = levels
        .iter()
        .map(|segs| vec![0.0; segs.len()])
        .collect();
    let mut counters: Vec<(usize, usize)> = Vec::new(); // (bid, seg) flattened
    for (b, segs) in levels.iter().enumerate() {
        for s in 0..segs.len() {
            counters.push((b, s));
        }
    }
    let mut state = vec![0usize; counters.len()];
    let mut best: Option<f64> = None;
    loop {
        if let Some(obj) = evaluate_fills(input, hour, &fills) {
            if best.map_or(true, |b| obj < b) {
                best = Some(obj);
            }
        }
        // Mixed-radix increment over all segment fill levels.
        let mut pos = 0;
        loop {
            if pos == counters.len() {
                return best;
            }
            let (b, s) = counters[pos];
            state[pos] += 1;
            if state[pos] <= levels[b][s] {
                fills[b][s] = state[pos] as f64 * step;
                break;
            }
            state[pos] = 0;
            fills[b][s] = 0.0;
            pos += 1;
        }
    }
}

/// Worst-case objective penalty of rounding an optimal fill vector down
/// to the oracle grid: half a step of lost benefit plus half a step of
/// extra deviation penalty per segment.
pub fn grid_search_bound(input: &ClearingInput, step: f64) -> f64 {
    let mut bound = 0.0;
    for bid in &input.bids {
        for seg in &bid.segments {
            bound += step * (seg.benefit.abs() + input.mu);
        }
    }
    bound
}
