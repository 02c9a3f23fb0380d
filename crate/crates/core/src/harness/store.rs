//! Long-format forecast persistence: one row per
//! (disease, horizon, target week, model or scheme).

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::EpiWeek;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub disease: String,
    pub horizon: usize,
    pub target_week: EpiWeek,
    /// Submodel id (`AR_A`) or scheme id (`P10_p2`).
    pub model_id: String,
    pub forecast: f64,
    pub actual: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ForecastStore {
    records: Vec<ForecastRecord>,
}

impl ForecastStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: ForecastRecord) {
        self.records.push(record);
    }

    pub fn extend(&mut self, records: impl IntoIterator<Item = ForecastRecord>) {
        self.records.extend(records);
    }

    pub fn records(&self) -> &[ForecastRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records of one series in target-week order.
    pub fn series(&self, disease: &str, horizon: usize, model_id: &str) -> Vec<&ForecastRecord> {
        let mut out: Vec<&ForecastRecord> = self
            .records
            .iter()
            .filter(|r| r.disease == disease && r.horizon == horizon && r.model_id == model_id)
            .collect();
        out.sort_by_key(|r| r.target_week);
        out
    }

    /// Every series keyed by (disease, horizon, model id), each in
    /// target-week order.
    pub fn grouped(&self) -> HashMap<(&str, usize, &str), Vec<&ForecastRecord>> {
        let mut out: HashMap<(&str, usize, &str), Vec<&ForecastRecord>> = HashMap::new();
        for r in &self.records {
            out.entry((r.disease.as_str(), r.horizon, r.model_id.as_str()))
                .or_default()
                .push(r);
        }
        for v in out.values_mut() {
            v.sort_by_key(|r| r.target_week);
        }
        out
    }

    /// Distinct (disease, horizon) pairs in first-appearance order.
    pub fn pairs(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for r in &self.records {
            if !out.iter().any(|(d, h)| *d == r.disease && *h == r.horizon) {
                out.push((r.disease.clone(), r.horizon));
            }
        }
        out
    }

    /// Distinct model ids of one pair in first-appearance order.
    pub fn model_ids(&self, disease: &str, horizon: usize) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.records {
            if r.disease == disease && r.horizon == horizon && !out.contains(&r.model_id) {
                out.push(r.model_id.clone());
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let records = r.deserialize().collect::<std::result::Result<Vec<ForecastRecord>, _>>()?;
        Ok(Self { records })
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}
