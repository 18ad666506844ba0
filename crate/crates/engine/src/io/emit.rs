//! Result emission: plot-ready CSV tables with fixed 6-decimal formatting
//! and deterministic row order (hour, then bus id, then line id).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lp_core::{LpProblem, LpSolution};

use crate::clearing::ClearingResult;
use crate::io::schema::IoError;
use crate::scenarios::SweepResult;
use crate::settlement::SettlementReport;

fn write_file(path: &Path, content: &str) -> Result<(), IoError> {
    std::fs::write(path, content).map_err(|e| IoError::Write {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

pub fn emit_results(
    result: &ClearingResult,
    report: &SettlementReport,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, IoError> {
    std::fs::create_dir_all(out_dir).map_err(|e| IoError::Write {
        path: out_dir.display().to_string(),
        detail: e.to_string(),
    })?;
    let mut written = Vec::new();

    let mut clearing = String::from("hour,bus,load_mw,dlmp,p_main_mw,deviation_mw\n");
    for h in &result.hours {
        for (&bus, &load) in &h.load {
            clearing.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{:.6}\n",
                h.hour, bus, load, h.dlmp[&bus], h.p_main, h.deviation
            ));
        }
    }
    let p = out_dir.join("clearing.csv");
    write_file(&p, &clearing)?;
    written.push(p);

    let mut flows = String::from("hour,line,flow_mw\n");
    for h in &result.hours {
        for (l, &flow) in h.flow.iter().enumerate() {
            flows.push_str(&format!("{},{},{:.6}\n", h.hour, l, flow));
        }
    }
    let p = out_dir.join("flows.csv");
    write_file(&p, &flows)?;
    written.push(p);

    let mut settlement = String::from("bus,payment\n");
    for (bus, pay) in &report.per_bus {
        settlement.push_str(&format!("{bus},{pay:.6}\n"));
    }
    settlement.push_str(&format!("total_customer,{:.6}\n", report.customer_total));
    settlement.push_str(&format!("utility,{:.6}\n", report.utility_payment));
    settlement.push_str(&format!("surplus,{:.6}\n", report.surplus));
    let p = out_dir.join("settlement.csv");
    write_file(&p, &settlement)?;
    written.push(p);

    Ok(written)
}

/// Writes `sweep.csv` (value, bus, avg D-LMP) and `deficit.csv`
/// (value, total |deviation|, C_c, C_u, C_c - C_u).
pub fn emit_sweep(sweep: &SweepResult, out_dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    std::fs::create_dir_all(out_dir).map_err(|e| IoError::Write {
        path: out_dir.display().to_string(),
        detail: e.to_string(),
    })?;
    let mut written = Vec::new();

    let mut table = String::from("sweep_value,bus,avg_dlmp\n");
    for row in &sweep.rows {
        for (bus, avg) in &row.avg_dlmp {
            table.push_str(&format!("{:.6},{},{:.6}\n", row.value, bus, avg));
        }
    }
    let p = out_dir.join("sweep.csv");
    write_file(&p, &table)?;
    written.push(p);

    let mut deficit =
        String::from("sweep_value,total_abs_deviation_mwh,customer_total,utility_payment,deficit\n");
    for row in &sweep.rows {
        deficit.push_str(&format!(
            "{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            row.value,
            row.total_abs_deviation,
            row.customer_total,
            row.utility_payment,
            row.surplus
        ));
    }
    let p = out_dir.join("deficit.csv");
    write_file(&p, &deficit)?;
    written.push(p);

    Ok(written)
}

/// One hour's LP and its solution, saved so `dmo kkt` can re-certify the
/// run without re-solving.
#[derive(Serialize, Deserialize)]
pub struct SavedHour {
    pub hour: usize,
    pub problem: LpProblem,
    pub solution: LpSolution,
}

pub fn write_solution_dump(hours: &[SavedHour], path: &Path) -> Result<(), IoError> {
    let json = serde_json::to_string(hours).map_err(|e| IoError::Write {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    write_file(path, &json)
}

pub fn read_solution_dump(path: &Path) -> Result<Vec<SavedHour>, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::Read {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| IoError::Parse {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}
