//! Weekly multivariate panel and its CSV representation.
//!
//! The CSV layout is one header row, a leading `epi_week` column formatted as
//! `YYYY-Www`, then one column per series. Disease count columns carry the
//! `ed.` prefix and environmental columns the `env.` prefix.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DISEASE_PREFIX: &str = "ed.";
pub const ENV_PREFIX: &str = "env.";

/// ISO-style epidemiological week label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EpiWeek {
    pub year: i32,
    pub week: u32,
}

impl EpiWeek {
    pub fn new(year: i32, week: u32) -> Result<Self> {
        if week == 0 || week > weeks_in_year(year) {
            return Err(Error::InvalidWeek(format!("{year}-W{week:02}")));
        }
        Ok(Self { year, week })
    }

    pub fn next(self) -> Self {
        if self.week < weeks_in_year(self.year) {
            Self {
                year: self.year,
                week: self.week + 1,
            }
        } else {
            Self {
                year: self.year + 1,
                week: 1,
            }
        }
    }
}

/// 52 or 53, following the ISO week-numbering calendar.
pub fn weeks_in_year(year: i32) -> u32 {
    if NaiveDate::from_isoywd_opt(year, 53, Weekday::Mon).is_some() {
        53
    } else {
        52
    }
}

impl fmt::Display for EpiWeek {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-W{:02}", self.year, self.week)
    }
}

impl FromStr for EpiWeek {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidWeek(s.to_string());
        let (year, week) = s.trim().split_once("-W").ok_or_else(bad)?;
        if week.len() != 2 {
            return Err(bad());
        }
        let year: i32 = year.parse().map_err(|_| bad())?;
        let week: u32 = week.parse().map_err(|_| bad())?;
        EpiWeek::new(year, week).map_err(|_| bad())
    }
}

impl Serialize for EpiWeek {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EpiWeek {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Consecutive weeks starting at `start`.
pub fn week_range(start: EpiWeek, len: usize) -> Vec<EpiWeek> {
    let mut out = Vec::with_capacity(len);
    let mut w = start;
    for _ in 0..len {
        out.push(w);
        w = w.next();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }
}

/// Aligned weekly panel of disease counts and environmental covariates.
///
/// Invariants checked on construction: every series has the panel length,
/// weeks are consecutive with no gaps, disease counts are finite and
/// non-negative, environmental values are finite, names are unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPanel {
    weeks: Vec<EpiWeek>,
    diseases: Vec<Series>,
    env: Vec<Series>,
}

impl SeriesPanel {
    pub fn new(weeks: Vec<EpiWeek>, diseases: Vec<Series>, env: Vec<Series>) -> Result<Self> {
        for pair in weeks.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidPanel(format!(
                    "week {} does not follow {}",
                    pair[1], pair[0]
                )));
            }
            if pair[1] != pair[0].next() {
                return Err(Error::InvalidPanel(format!(
                    "missing week(s) between {} and {}",
                    pair[0], pair[1]
                )));
            }
        }
        let mut names = std::collections::HashSet::new();
        for s in diseases.iter().chain(env.iter()) {
            if s.values.len() != weeks.len() {
                return Err(Error::InvalidPanel(format!(
                    "series `{}` has {} values for {} weeks",
                    s.name,
                    s.values.len(),
                    weeks.len()
                )));
            }
            if !names.insert(s.name.clone()) {
                return Err(Error::InvalidPanel(format!("duplicate series `{}`", s.name)));
            }
            if let Some(i) = s.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidPanel(format!(
                    "series `{}` has a non-finite value at {}",
                    s.name, weeks[i]
                )));
            }
        }
        for s in &diseases {
            if let Some(i) = s.values.iter().position(|v| *v < 0.0) {
                return Err(Error::InvalidPanel(format!(
                    "disease `{}` has a negative count at {}",
                    s.name, weeks[i]
                )));
            }
        }
        Ok(Self {
            weeks,
            diseases,
            env,
        })
    }

    pub fn len(&self) -> usize {
        self.weeks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weeks.is_empty()
    }

    pub fn weeks(&self) -> &[EpiWeek] {
        &self.weeks
    }

    pub fn diseases(&self) -> &[Series] {
        &self.diseases
    }

    pub fn env(&self) -> &[Series] {
        &self.env
    }

    pub fn disease_names(&self) -> Vec<String> {
        self.diseases.iter().map(|s| s.name.clone()).collect()
    }

    pub fn disease_index(&self, name: &str) -> Result<usize> {
        self.diseases
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::UnknownDisease(name.to_string()))
    }

    pub fn disease(&self, name: &str) -> Result<&Series> {
        Ok(&self.diseases[self.disease_index(name)?])
    }

    /// Week-wise sum of all disease series.
    pub fn total_counts(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.len()];
        for s in &self.diseases {
            for (t, v) in total.iter_mut().zip(&s.values) {
                *t += v;
            }
        }
        total
    }

    /// Panel with a single disease series (the all-cause total) and the same
    /// environmental covariates.
    pub fn all_cause(&self, name: &str) -> Result<Self> {
        Self::new(
            self.weeks.clone(),
            vec![Series::new(name, self.total_counts())],
            self.env.clone(),
        )
    }

    /// Copy with the given disease subset, in panel order.
    pub fn with_diseases(&self, keep: &[String]) -> Result<Self> {
        for k in keep {
            self.disease_index(k)?;
        }
        let diseases = self
            .diseases
            .iter()
            .filter(|s| keep.contains(&s.name))
            .cloned()
            .collect();
        Self::new(self.weeks.clone(), diseases, self.env.clone())
    }

    /// Mutable access for tests that perturb values; re-validation is the
    /// caller's responsibility.
    #[doc(hidden)]
    pub fn disease_values_mut(&mut self, index: usize) -> &mut Vec<f64> {
        &mut self.diseases[index].values
    }

    #[doc(hidden)]
    pub fn env_values_mut(&mut self, index: usize) -> &mut Vec<f64> {
        &mut self.env[index].values
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.get(0).map(str::trim) != Some("epi_week") {
            return Err(Error::InvalidPanel(
                "first column must be `epi_week`".to_string(),
            ));
        }
        enum Kind {
            Disease(usize),
            Env(usize),
        }
        let mut kinds = Vec::new();
        let mut diseases = Vec::new();
        let mut env = Vec::new();
        for h in headers.iter().skip(1) {
            let h = h.trim();
            if let Some(name) = h.strip_prefix(DISEASE_PREFIX) {
                kinds.push(Kind::Disease(diseases.len()));
                diseases.push(Series::new(name, Vec::new()));
            } else if let Some(name) = h.strip_prefix(ENV_PREFIX) {
                kinds.push(Kind::Env(env.len()));
                env.push(Series::new(name, Vec::new()));
            } else {
                return Err(Error::InvalidPanel(format!(
                    "column `{h}` lacks an `ed.` or `env.` prefix"
                )));
            }
        }
        let mut weeks = Vec::new();
        for record in rdr.records() {
            let record = record?;
            if record.len() != kinds.len() + 1 {
                return Err(Error::InvalidPanel(format!(
                    "row {} has {} fields, expected {}",
                    weeks.len() + 2,
                    record.len(),
                    kinds.len() + 1
                )));
            }
            weeks.push(record[0].parse::<EpiWeek>()?);
            for (kind, field) in kinds.iter().zip(record.iter().skip(1)) {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::InvalidPanel(format!(
                        "unparseable value `{field}` at {}",
                        weeks.last().unwrap()
                    ))
                })?;
                match kind {
                    Kind::Disease(i) => diseases[*i].values.push(v),
                    Kind::Env(i) => env[*i].values.push(v),
                }
            }
        }
        Self::new(weeks, diseases, env)
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["epi_week".to_string()];
        header.extend(self.diseases.iter().map(|s| format!("{DISEASE_PREFIX}{}", s.name)));
        header.extend(self.env.iter().map(|s| format!("{ENV_PREFIX}{}", s.name)));
        wtr.write_record(&header)?;
        for (t, week) in self.weeks.iter().enumerate() {
            let mut row = vec![week.to_string()];
            row.extend(
                self.diseases
                    .iter()
                    .chain(self.env.iter())
                    .map(|s| s.values[t].to_string()),
            );
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
