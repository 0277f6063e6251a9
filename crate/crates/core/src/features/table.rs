//! Feature CSV (`patient_id,window_index,label,f0..f49`) and its JSON sidecar.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::config::ExtractionConfig;
use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{feature_names, FeatureVector, N_FEATURES};

fn header() -> Vec<String> {
    let mut h = vec!["patient_id".to_string(), "window_index".into(), "label".into()];
    h.extend((0..N_FEATURES).map(|i| format!("f{i}")));
    h
}

/// Writes rows in the given order; floats use the shortest round-trip form.
pub fn write_feature_csv<T: Real, W: Write>(writer: W, rows: &[FeatureVector<T>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(header())?;
    let mut record = Vec::with_capacity(N_FEATURES + 3);
    for row in rows {
        record.clear();
        record.push(row.patient_id.clone());
        record.push(row.window_index.to_string());
        record.push(row.label.map_or(String::new(), |l| l.as_str().to_string()));
        record.extend(row.values().iter().map(|v| v.to_string()));
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|e| Error::io("<features>", e))?;
    Ok(())
}

pub fn read_feature_csv<T: Real, R: Read>(reader: R) -> Result<Vec<FeatureVector<T>>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if found != header() {
        return Err(Error::validation(
            "feature CSV header must be `patient_id,window_index,label,f0..f49`",
        ));
    }
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let row = line + 2;
        let window_index = record[1]
            .parse()
            .map_err(|_| Error::validation(format!("row {row}: bad window_index")))?;
        let label = match &record[2] {
            "" => None,
            s => Some(s.parse().map_err(|e| Error::validation(format!("row {row}: {e}")))?),
        };
        let values = (3..3 + N_FEATURES)
            .map(|i| {
                record[i]
                    .parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| Error::validation(format!("row {row}: bad value in column f{}", i - 3)))
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push(FeatureVector::new(&record[0], window_index, label, values)?);
    }
    Ok(rows)
}

/// Metadata written next to a feature CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSidecar {
    pub config_digest: String,
    pub extraction: ExtractionConfig,
    pub feature_names: Vec<String>,
    pub lpc_failures: usize,
}

impl FeatureSidecar {
    pub fn new(extraction: ExtractionConfig, lpc_failures: usize) -> Self {
        Self {
            config_digest: extraction.digest(),
            extraction,
            feature_names: feature_names(),
            lpc_failures,
        }
    }
}
