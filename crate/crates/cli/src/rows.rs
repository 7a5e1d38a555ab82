//! Result rows and their CSV form.

use std::path::Path;

use plateau_core::analytics::PrefactorMode;
use plateau_core::estimator::KMode;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Result};

/// One plotted point. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub figure_tag: String,
    pub n: usize,
    pub s: usize,
    pub l: usize,
    #[serde(rename = "N_eff")]
    pub n_eff: usize,
    pub k_mode: KMode,
    pub n_samples: usize,
    pub master_seed: u64,
    pub var_est: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub predicted: Option<f64>,
    pub prefactor_mode: PrefactorMode,
    pub setting_id: String,
}

pub const CSV_COLUMNS: [&str; 14] = [
    "figure_tag",
    "n",
    "s",
    "l",
    "N_eff",
    "k_mode",
    "n_samples",
    "master_seed",
    "var_est",
    "ci_low",
    "ci_high",
    "predicted",
    "prefactor_mode",
    "setting_id",
];

pub fn to_csv_bytes(rows: &[ResultRow]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| io_err("<memory>")(e.into_error()))
}

pub fn from_csv_bytes(bytes: &[u8]) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(bytes);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    std::fs::write(path, to_csv_bytes(rows)?).map_err(io_err(path))
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    from_csv_bytes(&std::fs::read(path).map_err(io_err(path))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(var: Option<f64>) -> ResultRow {
        ResultRow {
            figure_tag: "fig2".into(),
            n: 18,
            s: 1,
            l: 1,
            n_eff: 4,
            k_mode: KMode::FixedSlot(0),
            n_samples: 10_000,
            master_seed: u64::MAX,
            var_est: var,
            ci_low: var.map(|v| v * 0.9),
            ci_high: var.map(|v| v * 1.1),
            predicted: Some(0.1 + 0.2),
            prefactor_mode: PrefactorMode::BlockWidth,
            setting_id: "full_minus_identity/cz_brick/zeros".into(),
        }
    }

    #[test]
    fn header_is_fixed() {
        let bytes = to_csv_bytes(&[]).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap().trim_end(), CSV_COLUMNS.join(","));
    }

    #[test]
    fn round_trip_is_exact() {
        let rows = vec![row(Some(1.0 / 3.0)), row(None), row(Some(2.5e-300)), row(Some(0.0))];
        let bytes = to_csv_bytes(&rows).unwrap();
        assert_eq!(from_csv_bytes(&bytes).unwrap(), rows);
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("fig2,18,1,1,4,fixed_slot(0),10000,18446744073709551615,"));
    }
}
