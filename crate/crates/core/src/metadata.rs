//! Patient metadata ingestion, category encoding and min-max normalisation.
//!
//! Each record contributes up to three scalar categories (date of birth,
//! gender, health and disability decile). Continuous categories are fitted
//! over a group and scaled into `[0, 1]`; gender is a fixed binary code.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Inclusive range of birth years accepted by [`dob_to_scalar`].
pub const DOB_YEAR_RANGE: (i32, i32) = (1850, 2100);

const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Error)]
pub enum MetadataError {
    #[error("schema error: required column `{column}` (for `{field}`) not found in header")]
    MissingColumn { field: &'static str, column: String },
    #[error("row {row}: {message}")]
    Row { row: u64, message: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("date {0} outside supported range [{min}-01-01, {max}-12-31]", min = DOB_YEAR_RANGE.0, max = DOB_YEAR_RANGE.1)]
    DateRange(NaiveDate),
    #[error("empty input: at least one value is required")]
    EmptyInput,
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("bin count must be at least 1")]
    BinCount,
    #[error("postcode `{0}` not present in the decile table")]
    LookupMiss(String),
    #[error("postcode table line {line}: {message}")]
    TableLoad { line: u64, message: String },
    #[error("record `{image_id}` has no value for category `{category}`")]
    MissingField { image_id: String, category: Category },
}

/// Metadata category encoded as its own GRF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Dob,
    Gender,
    Hdd,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Dob, Category::Gender, Category::Hdd];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Dob => "dob",
            Category::Gender => "gender",
            Category::Hdd => "hdd",
        }
    }

    /// Whether the category is fitted with min-max statistics.
    pub fn is_continuous(self) -> bool {
        !matches!(self, Category::Gender)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dob" => Ok(Category::Dob),
            "gender" => Ok(Category::Gender),
            "hdd" => Ok(Category::Hdd),
            other => Err(format!("unknown category `{other}` (expected dob, gender or hdd)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "female" | "f" => Ok(Gender::Female),
            "male" | "m" => Ok(Gender::Male),
            other => Err(format!("unrecognised gender `{other}` (expected male|female|m|f)")),
        }
    }
}

/// One patient/image row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataRecord {
    pub image_id: String,
    pub patient_id: String,
    pub dob: NaiveDate,
    pub gender: Gender,
    pub postcode: Option<String>,
    pub hdd: Option<u8>,
}

impl MetadataRecord {
    /// Raw (un-normalised) scalar for `category`.
    pub fn scalar(&self, category: Category) -> Result<f64, MetadataError> {
        match category {
            Category::Dob => dob_to_scalar(self.dob),
            Category::Gender => Ok(encode_gender(self.gender).value()),
            Category::Hdd => self.hdd.map(f64::from).ok_or_else(|| MetadataError::MissingField {
                image_id: self.image_id.clone(),
                category,
            }),
        }
    }
}

/// Maps logical record fields onto CSV column names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataSchema {
    pub image_id: String,
    pub patient_id: String,
    pub dob: String,
    pub gender: String,
    /// Optional columns are read when present in the header and ignored otherwise.
    pub postcode: Option<String>,
    pub hdd: Option<String>,
    /// Dates of birth after this date are rejected.
    pub as_of: NaiveDate,
}

impl Default for MetadataSchema {
    fn default() -> Self {
        MetadataSchema {
            image_id: "image_id".into(),
            patient_id: "patient_id".into(),
            dob: "dob".into(),
            gender: "gender".into(),
            postcode: Some("postcode".into()),
            hdd: Some("hdd".into()),
            as_of: Utc::now().date_naive(),
        }
    }
}

/// Parses a metadata CSV with a header row. Any row with an unparseable
/// required field fails the whole parse with the offending line number.
pub fn parse_metadata_csv<R: Read>(
    source: R,
    schema: &MetadataSchema,
) -> Result<Vec<MetadataRecord>, MetadataError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let required = |field: &'static str, column: &String| {
        find(column).ok_or_else(|| MetadataError::MissingColumn { field, column: column.clone() })
    };

    let image_idx = required("image_id", &schema.image_id)?;
    let patient_idx = required("patient_id", &schema.patient_id)?;
    let dob_idx = required("dob", &schema.dob)?;
    let gender_idx = required("gender", &schema.gender)?;
    let postcode_idx = schema.postcode.as_deref().and_then(find);
    let hdd_idx = schema.hdd.as_deref().and_then(find);

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let err = |message: String| MetadataError::Row { row: line, message };
        let cell = |idx: usize| row.get(idx).map(str::trim).unwrap_or("");
        let optional = |idx: Option<usize>| idx.map(cell).filter(|s| !s.is_empty());

        let image_id = cell(image_idx);
        if image_id.is_empty() {
            return Err(err("empty image_id".into()));
        }
        if !seen.insert(image_id.to_string()) {
            return Err(err(format!("duplicate image_id `{image_id}`")));
        }
        let dob = NaiveDate::parse_from_str(cell(dob_idx), "%Y-%m-%d")
            .map_err(|e| err(format!("malformed date `{}`: {e}", cell(dob_idx))))?;
        if dob > schema.as_of {
            return Err(err(format!("date of birth {dob} is after {}", schema.as_of)));
        }
        let gender = cell(gender_idx).parse::<Gender>().map_err(err)?;
        let hdd = optional(hdd_idx)
            .map(|s| {
                let decile: i64 = s.parse().map_err(|_| err(format!("malformed decile `{s}`")))?;
                validate_decile(decile).ok_or_else(|| err("decile out of range [1,10]".into()))
            })
            .transpose()?;

        records.push(MetadataRecord {
            image_id: image_id.to_string(),
            patient_id: cell(patient_idx).to_string(),
            dob,
            gender,
            postcode: optional(postcode_idx).map(str::to_string),
            hdd,
        });
    }
    Ok(records)
}

fn validate_decile(decile: i64) -> Option<u8> {
    (1..=10).contains(&decile).then_some(decile as u8)
}

/// Seconds since the Unix epoch at UTC midnight of `dob`.
pub fn dob_to_scalar(dob: NaiveDate) -> Result<f64, MetadataError> {
    if !(DOB_YEAR_RANGE.0..=DOB_YEAR_RANGE.1).contains(&dob.year()) {
        return Err(MetadataError::DateRange(dob));
    }
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch");
    Ok(((dob - epoch).num_days() * SECONDS_PER_DAY) as f64)
}

/// Extrema and shape statistics of one fitted group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl NormalizationStats {
    /// Scales `x` into `[0, 1]`, clamping values outside the fitted range.
    /// A degenerate group (`min == max`) maps everything to 0.5.
    pub fn apply(&self, x: f64) -> Result<f64, MetadataError> {
        if !x.is_finite() {
            return Err(MetadataError::NonFinite { index: 0, value: x });
        }
        if self.max <= self.min {
            return Ok(0.5);
        }
        Ok(((x - self.min) / (self.max - self.min)).clamp(0.0, 1.0))
    }
}

/// Fits min/max and population moment statistics.
pub fn minmax_fit(values: &[f64]) -> Result<NormalizationStats, MetadataError> {
    if values.is_empty() {
        return Err(MetadataError::EmptyInput);
    }
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(MetadataError::NonFinite { index, value });
    }
    let n = values.len() as f64;
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;

    let (skewness, excess_kurtosis) = if min == max || m2 <= 0.0 {
        (0.0, 0.0)
    } else {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    };
    Ok(NormalizationStats { min, max, count: values.len(), skewness, excess_kurtosis })
}

/// A category value scaled into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedValue {
    value: f64,
    category: Category,
}

impl NormalizedValue {
    pub fn new(value: f64, category: Category) -> Option<Self> {
        let ok = (0.0..=1.0).contains(&value)
            && (category != Category::Gender || value == 0.0 || value == 1.0);
        ok.then_some(NormalizedValue { value, category })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn category(&self) -> Category {
        self.category
    }
}

pub fn minmax_apply(
    stats: &NormalizationStats,
    category: Category,
    x: f64,
) -> Result<NormalizedValue, MetadataError> {
    let value = stats.apply(x)?;
    let value = if category == Category::Gender { value.round() } else { value };
    Ok(NormalizedValue { value, category })
}

/// Female is 0, male is 1.
pub fn encode_gender(gender: Gender) -> NormalizedValue {
    let value = match gender {
        Gender::Female => 0.0,
        Gender::Male => 1.0,
    };
    NormalizedValue { value, category: Category::Gender }
}

/// Uppercase with all whitespace removed.
pub fn normalize_postcode(postcode: &str) -> String {
    postcode.chars().filter(|c| !c.is_whitespace()).flat_map(char::to_uppercase).collect()
}

/// Postcode to health and disability decile lookup table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PostcodeTable {
    deciles: HashMap<String, u8>,
}

impl PostcodeTable {
    /// Loads a two-column `postcode,decile` CSV.
    pub fn from_csv<R: Read>(source: R) -> Result<Self, MetadataError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
        let headers = reader.headers()?.clone();
        let column = |name: &str| {
            headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name)).ok_or_else(|| {
                MetadataError::TableLoad { line: 1, message: format!("missing `{name}` column") }
            })
        };
        let postcode_idx = column("postcode")?;
        let decile_idx = column("decile")?;

        let mut deciles = HashMap::new();
        for row in reader.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line());
            let err = |message: String| MetadataError::TableLoad { line, message };
            let postcode = normalize_postcode(row.get(postcode_idx).unwrap_or(""));
            if postcode.is_empty() {
                return Err(err("empty postcode".into()));
            }
            let raw = row.get(decile_idx).unwrap_or("").trim();
            let decile = raw
                .parse::<i64>()
                .ok()
                .and_then(validate_decile)
                .ok_or_else(|| err(format!("decile `{raw}` out of range [1,10]")))?;
            if let Some(previous) = deciles.insert(postcode.clone(), decile) {
                if previous != decile {
                    return Err(err(format!("conflicting deciles for `{postcode}`")));
                }
            }
        }
        Ok(PostcodeTable { deciles })
    }

    pub fn insert(&mut self, postcode: &str, decile: u8) -> Result<(), MetadataError> {
        let decile = validate_decile(i64::from(decile)).ok_or_else(|| MetadataError::TableLoad {
            line: 0,
            message: format!("decile {decile} out of range [1,10]"),
        })?;
        self.deciles.insert(normalize_postcode(postcode), decile);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.deciles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deciles.is_empty()
    }

    pub fn lookup(&self, postcode: &str) -> Result<u8, MetadataError> {
        let key = normalize_postcode(postcode);
        self.deciles.get(&key).copied().ok_or(MetadataError::LookupMiss(key))
    }
}

pub fn hdd_lookup(postcode: &str, table: &PostcodeTable) -> Result<u8, MetadataError> {
    table.lookup(postcode)
}

/// Fills `hdd` from the postcode table for every record that lacks it.
pub fn resolve_hdd(
    records: &mut [MetadataRecord],
    table: &PostcodeTable,
) -> Result<(), MetadataError> {
    for record in records.iter_mut().filter(|r| r.hdd.is_none()) {
        let postcode = record.postcode.as_deref().ok_or_else(|| MetadataError::MissingField {
            image_id: record.image_id.clone(),
            category: Category::Hdd,
        })?;
        record.hdd = Some(table.lookup(postcode)?);
    }
    Ok(())
}

/// Uniform-width histogram plus the group's normalisation statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramReport {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub stats: NormalizationStats,
}

/// Histogram over `[min, max]` with the maximum assigned to the last bin.
/// A constant group gets edges spanning `[v, v + 1]` with every count in bin 0.
pub fn distribution_report(
    values: &[f64],
    bin_count: usize,
) -> Result<HistogramReport, MetadataError> {
    if bin_count == 0 {
        return Err(MetadataError::BinCount);
    }
    let stats = minmax_fit(values)?;
    let (lo, span) = if stats.max > stats.min {
        (stats.min, stats.max - stats.min)
    } else {
        (stats.min, 1.0)
    };
    let width = span / bin_count as f64;
    let mut bin_edges: Vec<f64> = (0..bin_count).map(|k| lo + k as f64 * width).collect();
    bin_edges.push(lo + span);

    let mut counts = vec![0u64; bin_count];
    for &v in values {
        let idx = (((v - lo) / width).floor() as usize).min(bin_count - 1);
        counts[idx] += 1;
    }
    Ok(HistogramReport { bin_edges, counts, stats })
}
