//! Market settlement: customer payments at D-LMPs, the DMO's payment to
//! the ISO at the T-LMP, and the resulting cost surplus.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clearing::ClearingResult;
use crate::model::{BusId, TlmpSeries};

/// Which import quantity the ISO payment is priced on. `Actual` uses the
/// realized import P^M; `Assigned` uses the ISO's award PD^M.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SettlementBasis {
    #[default]
    Actual,
    Assigned,
}

#[derive(Clone, Debug)]
pub struct SettlementReport {
    /// Payment per (hour, bus): D-LMP times served load.
    pub payments: Vec<(usize, BusId, f64)>,
    /// Total per bus over the horizon.
    pub per_bus: BTreeMap<BusId, f64>,
    /// C_c: sum of all customer payments.
    pub customer_total: f64,
    /// C_u: the DMO's payment to the ISO.
    pub utility_payment: f64,
    /// C_delta = C_c - C_u.
    pub surplus: f64,
    /// |sum of loads - P^M| per hour; anything above 1e-6 flags a bug.
    pub conservation_residuals: Vec<f64>,
}

/// Per-bus payments and their total C_c: payment(m, t) = dlmp(m, t) * load(m, t).
pub fn customer_payments(result: &ClearingResult) -> (Vec<(usize, BusId, f64)>, f64) {
    let mut payments = Vec::new();
    let mut total = 0.0;
    for hour in &result.hours {
        for (&bus, &load) in &hour.load {
            let pay = hour.dlmp[&bus] * load;
            payments.push((hour.hour, bus, pay));
            total += pay;
        }
    }
    (payments, total)
}

/// C_u: sum over hours of the T-LMP times the import quantity under the
/// chosen basis.
pub fn utility_payment(
    result: &ClearingResult,
    tlmp: &TlmpSeries,
    basis: SettlementBasis,
) -> f64 {
    result
        .hours
        .iter()
        .map(|h| {
            let quantity = match basis {
                SettlementBasis::Actual => h.p_main,
                SettlementBasis::Assigned => h.p_main - h.deviation,
            };
            tlmp.get(h.hour) * quantity
        })
        .sum()
}

pub fn settle(
    result: &ClearingResult,
    tlmp: &TlmpSeries,
    basis: SettlementBasis,
) -> SettlementReport {
    let (payments, customer_total) = customer_payments(result);
    let utility = utility_payment(result, tlmp, basis);

    let mut per_bus: BTreeMap<BusId, f64> = BTreeMap::new();
    for &(_, bus, pay) in &payments {
        *per_bus.entry(bus).or_insert(0.0) += pay;
    }

    let conservation_residuals = result
        .hours
        .iter()
        .map(|h| (h.total_load() - h.p_main).abs())
        .collect();

    SettlementReport {
        payments,
        per_bus,
        customer_total,
        utility_payment: utility,
        surplus: customer_total - utility,
        conservation_residuals,
    }
}
