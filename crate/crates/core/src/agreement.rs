//! Inter- and intra-observer agreement: pairwise MAE, intraclass correlation
//! and one-way ANOVA over readers.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgreementError {
    #[error("no overlapping readings between {0} and {1}")]
    EmptyOverlap(String, String),
    #[error("insufficient data: {0}")]
    Insufficient(String),
    #[error("unknown reader {0}")]
    UnknownReader(String),
    #[error("bad ratings: {0}")]
    BadRatings(String),
}

/// What a rating measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RatingKind {
    HC,
    BPD,
    AC,
    FL,
    GA,
    EFW,
}

impl FromStr for RatingKind {
    type Err = AgreementError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "HC" => RatingKind::HC,
            "BPD" => RatingKind::BPD,
            "AC" => RatingKind::AC,
            "FL" => RatingKind::FL,
            "GA" => RatingKind::GA,
            "EFW" => RatingKind::EFW,
            other => return Err(AgreementError::BadRatings(format!("unknown kind {other:?}"))),
        })
    }
}

impl fmt::Display for RatingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Readers × cases × two readings for one measurement kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingsTable {
    pub readers: Vec<String>,
    pub cases: Vec<String>,
    /// `values[reader][case][reading - 1]`.
    pub values: Vec<Vec<[Option<f64>; 2]>>,
}

impl RatingsTable {
    pub fn new(readers: Vec<String>, cases: Vec<String>) -> Self {
        let values = vec![vec![[None, None]; cases.len()]; readers.len()];
        Self { readers, cases, values }
    }

    /// Builds a table from `values[reader][case]` with both readings equal.
    pub fn from_single_reading(readers: &[&str], cases: &[&str], values: &[Vec<f64>]) -> Self {
        let mut t = Self::new(
            readers.iter().map(|s| s.to_string()).collect(),
            cases.iter().map(|s| s.to_string()).collect(),
        );
        for (r, row) in values.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                t.values[r][c] = [Some(v), Some(v)];
            }
        }
        t
    }

    pub fn reader_index(&self, reader: &str) -> Result<usize, AgreementError> {
        self.readers
            .iter()
            .position(|r| r == reader)
            .ok_or_else(|| AgreementError::UnknownReader(reader.to_string()))
    }

    pub fn get(&self, reader: usize, case: usize, reading: Reading) -> Option<f64> {
        self.values[reader][case][reading.slot()]
    }

    /// Values of one reader for one reading, skipping absent cells.
    pub fn reader_values(&self, reader: usize, reading: Reading) -> Vec<f64> {
        (0..self.cases.len())
            .filter_map(|c| self.get(reader, c, reading))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Reading {
    First,
    Second,
}

impl Reading {
    pub const BOTH: [Reading; 2] = [Reading::First, Reading::Second];

    fn slot(self) -> usize {
        match self {
            Reading::First => 0,
            Reading::Second => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.slot() as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<Reading> {
        match n {
            1 => Some(Reading::First),
            2 => Some(Reading::Second),
            _ => None,
        }
    }
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    reader: String,
    case: String,
    reading: u8,
    kind: String,
    value_cm: Option<f64>,
}

/// Parses `reader,case,reading,kind,value_cm` rows into one table per kind.
/// Readers and cases keep their order of first appearance in the file; an
/// empty `value_cm` marks a missing reading.
pub fn read_ratings_csv(input: impl Read) -> Result<BTreeMap<RatingKind, RatingsTable>, AgreementError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| AgreementError::BadRatings(e.to_string()))?
        .clone();
    let expected = ["reader", "case", "reading", "kind", "value_cm"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(AgreementError::BadRatings(format!(
            "header must be {}, got {}",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut readers: Vec<String> = Vec::new();
    let mut cases: Vec<String> = Vec::new();
    let mut rows = Vec::new();
    for (line, rec) in rdr.deserialize::<CsvRow>().enumerate() {
        let row = rec.map_err(|e| AgreementError::BadRatings(format!("row {}: {e}", line + 2)))?;
        let kind: RatingKind = row.kind.parse()?;
        let reading = Reading::from_number(row.reading)
            .ok_or_else(|| AgreementError::BadRatings(format!("row {}: reading must be 1 or 2", line + 2)))?;
        if let Some(v) = row.value_cm {
            if !v.is_finite() {
                return Err(AgreementError::BadRatings(format!(
                    "row {}: non-finite value",
                    line + 2
                )));
            }
        }
        if !readers.contains(&row.reader) {
            readers.push(row.reader.clone());
        }
        if !cases.contains(&row.case) {
            cases.push(row.case.clone());
        }
        rows.push((line + 2, row.reader, row.case, reading, kind, row.value_cm));
    }
    let mut tables: BTreeMap<RatingKind, RatingsTable> = BTreeMap::new();
    let mut seen = std::collections::HashSet::new();
    for (line, reader, case, reading, kind, value) in rows {
        if !seen.insert((reader.clone(), case.clone(), reading, kind)) {
            return Err(AgreementError::BadRatings(format!(
                "row {line}: duplicate rating for {reader}/{case}/{kind}/reading {}",
                reading.number()
            )));
        }
        let t = tables
            .entry(kind)
            .or_insert_with(|| RatingsTable::new(readers.clone(), cases.clone()));
        let r = readers.iter().position(|x| *x == reader).expect("collected above");
        let c = cases.iter().position(|x| *x == case).expect("collected above");
        t.values[r][c][reading.slot()] = value;
    }
    Ok(tables)
}

/// Mean |reference − reader| over every (case, reading) cell present for both.
pub fn mae(t: &RatingsTable, reference: &str, reader: &str) -> Result<f64, AgreementError> {
    let (a, b) = (t.reader_index(reference)?, t.reader_index(reader)?);
    let mut sum = 0.0;
    let mut n = 0usize;
    for c in 0..t.cases.len() {
        for reading in Reading::BOTH {
            if let (Some(x), Some(y)) = (t.get(a, c, reading), t.get(b, c, reading)) {
                sum += (x - y).abs();
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(AgreementError::EmptyOverlap(reference.into(), reader.into()));
    }
    Ok(sum / n as f64)
}

/// MAE of every reader (including the reference itself) against `reference`.
pub fn mae_matrix(t: &RatingsTable, reference: &str) -> Result<Vec<(String, f64)>, AgreementError> {
    t.reader_index(reference)?;
    t.readers
        .iter()
        .map(|r| Ok((r.clone(), mae(t, reference, r)?)))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum IccVariant {
    /// One-way random effects, single rater.
    #[serde(rename = "1,1")]
    OneWay,
    /// Two-way random effects, absolute agreement, single rater.
    #[default]
    #[serde(rename = "2,1")]
    TwoWayRandom,
    /// Two-way mixed effects, consistency, single rater.
    #[serde(rename = "3,1")]
    TwoWayMixed,
}

impl FromStr for IccVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1,1" | "1" => Ok(IccVariant::OneWay),
            "2,1" | "2" => Ok(IccVariant::TwoWayRandom),
            "3,1" | "3" => Ok(IccVariant::TwoWayMixed),
            other => Err(format!("unknown ICC variant {other:?}; use 1,1, 2,1 or 3,1")),
        }
    }
}

/// Two-way mean squares of an `n` cases × `k` raters matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSquares {
    pub n: usize,
    pub k: usize,
    /// Between cases.
    pub msr: f64,
    /// Between raters.
    pub msc: f64,
    /// Residual.
    pub mse: f64,
    /// Within cases (raters + residual).
    pub msw: f64,
}

impl MeanSquares {
    /// `rows[case][rater]`; every row must have the same length.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self, AgreementError> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if n < 2 || k < 2 {
            return Err(AgreementError::Insufficient(format!(
                "ICC needs at least 2 complete cases and 2 readers, got {n} x {k}"
            )));
        }
        assert!(rows.iter().all(|r| r.len() == k), "ragged ratings matrix");
        let row_means: Vec<f64> = rows.iter().map(|r| r.iter().sum::<f64>() / k as f64).collect();
        let col_means: Vec<f64> = (0..k)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
            .collect();
        let grand = col_means.iter().sum::<f64>() / k as f64;
        let ssr = k as f64 * row_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
        let ssc = n as f64 * col_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
        let mut sse = 0.0;
        for (i, r) in rows.iter().enumerate() {
            for (j, &x) in r.iter().enumerate() {
                sse += (x - row_means[i] - col_means[j] + grand).powi(2);
            }
        }
        let (nf, kf) = (n as f64, k as f64);
        Ok(Self {
            n,
            k,
            msr: ssr / (nf - 1.0),
            msc: ssc / (kf - 1.0),
            mse: sse / ((nf - 1.0) * (kf - 1.0)),
            msw: (ssc + sse) / (nf * (kf - 1.0)),
        })
    }

    pub fn icc(&self, variant: IccVariant) -> Result<f64, AgreementError> {
        let (n, k) = (self.n as f64, self.k as f64);
        let (num, den) = match variant {
            IccVariant::OneWay => (self.msr - self.msw, self.msr + (k - 1.0) * self.msw),
            IccVariant::TwoWayRandom => (
                self.msr - self.mse,
                self.msr + (k - 1.0) * self.mse + k * (self.msc - self.mse) / n,
            ),
            IccVariant::TwoWayMixed => (self.msr - self.mse, self.msr + (k - 1.0) * self.mse),
        };
        if den == 0.0 {
            return Err(AgreementError::Insufficient("ratings have no variance".into()));
        }
        Ok(num / den)
    }
}

/// Cases × readers matrix for one reading, keeping only complete cases.
pub fn complete_matrix(t: &RatingsTable, reading: Reading) -> Vec<Vec<f64>> {
    (0..t.cases.len())
        .filter_map(|c| {
            (0..t.readers.len())
                .map(|r| t.get(r, c, reading))
                .collect::<Option<Vec<f64>>>()
        })
        .collect()
}

pub fn icc_with(t: &RatingsTable, reading: Reading, variant: IccVariant) -> Result<f64, AgreementError> {
    if t.readers.len() < 2 {
        return Err(AgreementError::Insufficient(format!(
            "ICC needs at least 2 readers, got {}",
            t.readers.len()
        )));
    }
    MeanSquares::from_matrix(&complete_matrix(t, reading))?.icc(variant)
}

/// ICC(2,1) over all readers for one reading.
pub fn icc(t: &RatingsTable, reading: Reading) -> Result<f64, AgreementError> {
    icc_with(t, reading, IccVariant::TwoWayRandom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f: f64,
    pub df: (usize, usize),
    pub p: f64,
}

impl AnovaResult {
    /// p rounded to four decimals for reporting.
    pub fn p_reported(&self) -> f64 {
        (self.p * 1e4).round() / 1e4
    }
}

/// Upper tail `P(F > f)` of an F distribution via the regularized incomplete
/// beta function.
pub fn f_survival(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f)).clamp(0.0, 1.0)
}

/// Classic one-way ANOVA. With no variance at all, F = 0 and p = 1; with
/// between-group but no within-group variance, F = ∞ and p = 0.
pub fn anova_oneway(groups: &[Vec<f64>]) -> Result<AnovaResult, AgreementError> {
    let k = groups.len();
    if k < 2 || groups.iter().any(|g| g.len() < 2) {
        return Err(AgreementError::Insufficient(
            "ANOVA needs at least 2 groups of at least 2 values".into(),
        ));
    }
    let total: usize = groups.iter().map(Vec::len).sum();
    let means: Vec<f64> = groups.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect();
    let grand = groups.iter().flatten().sum::<f64>() / total as f64;
    let ssb: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.len() as f64 * (m - grand).powi(2))
        .sum();
    let ssw: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.iter().map(|x| (x - m).powi(2)).sum::<f64>())
        .sum();
    let df = (k - 1, total - k);
    let f = if ssb == 0.0 {
        0.0
    } else if ssw == 0.0 {
        f64::INFINITY
    } else {
        (ssb / df.0 as f64) / (ssw / df.1 as f64)
    };
    Ok(AnovaResult {
        f,
        df,
        p: f_survival(f, df.0 as f64, df.1 as f64),
    })
}

/// Mean and sample standard deviation of |first − second| reading over
/// cases where the reader has both.
pub fn intra_observer(t: &RatingsTable, reader: &str) -> Result<(f64, f64), AgreementError> {
    let r = t.reader_index(reader)?;
    let diffs: Vec<f64> = (0..t.cases.len())
        .filter_map(|c| Some((t.get(r, c, Reading::First)? - t.get(r, c, Reading::Second)?).abs()))
        .collect();
    if diffs.is_empty() {
        return Err(AgreementError::Insufficient(format!(
            "{reader} has no case with both readings"
        )));
    }
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let sd = if diffs.len() < 2 {
        0.0
    } else {
        (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok((mean, sd))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_and_missing_cells() {
        let csv = "reader,case,reading,kind,value_cm\n\
                   A,c1,1,HC,20.0\nA,c1,2,HC,20.5\nB,c1,1,HC,21.0\nB,c2,1,HC,\nA,c2,1,AC,30\n";
        let tables = read_ratings_csv(csv.as_bytes()).unwrap();
        let hc = &tables[&RatingKind::HC];
        assert_eq!(hc.readers, vec!["A", "B"]);
        assert_eq!(hc.cases, vec!["c1", "c2"]);
        assert_eq!(hc.values[0][0], [Some(20.0), Some(20.5)]);
        assert_eq!(hc.values[1][1], [None, None]);
        assert_eq!(tables[&RatingKind::AC].values[0][1][0], Some(30.0));
    }

    #[test]
    fn csv_errors() {
        assert!(read_ratings_csv("a,b\n".as_bytes()).is_err());
        let dup = "reader,case,reading,kind,value_cm\nA,c1,1,HC,1\nA,c1,1,HC,2\n";
        assert!(read_ratings_csv(dup.as_bytes()).is_err());
        let bad_reading = "reader,case,reading,kind,value_cm\nA,c1,3,HC,1\n";
        assert!(read_ratings_csv(bad_reading.as_bytes()).is_err());
        let bad_kind = "reader,case,reading,kind,value_cm\nA,c1,1,XX,1\n";
        assert!(read_ratings_csv(bad_kind.as_bytes()).is_err());
    }

    #[test]
    fn mae_examples() {
        let t = RatingsTable::from_single_reading(
            &["ref", "same", "shift"],
            &["a", "b", "c"],
            &[vec![1.0, 2.0, 4.0], vec![1.0, 2.0, 4.0], vec![1.5, 2.5, 4.5]],
        );
        let m = mae_matrix(&t, "ref").unwrap();
        assert_eq!(m[0].1, 0.0);
        assert_eq!(m[1].1, 0.0);
        assert_eq!(m[2].1, 0.5);
        assert!(matches!(
            mae(&t, "ref", "nobody"),
            Err(AgreementError::UnknownReader(_))
        ));
        let mut gap = RatingsTable::new(vec!["x".into(), "y".into()], vec!["a".into()]);
        gap.values[0][0] = [Some(1.0), None];
        gap.values[1][0] = [None, Some(1.0)];
        assert!(matches!(mae(&gap, "x", "y"), Err(AgreementError::EmptyOverlap(..))));
    }

    #[test]
    fn icc_perfect_agreement() {
        let t = RatingsTable::from_single_reading(
            &["A", "B"],
            &["1", "2", "3"],
            &[vec![1.0, 5.0, 3.0], vec![1.0, 5.0, 3.0]],
        );
        assert_eq!(icc(&t, Reading::First).unwrap(), 1.0);
        let one = RatingsTable::from_single_reading(&["A"], &["1", "2"], &[vec![1.0, 2.0]]);
        assert!(matches!(
            icc(&one, Reading::First),
            Err(AgreementError::Insufficient(_))
        ));
    }

    #[test]
    fn anova_degenerate() {
        let r = anova_oneway(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!((r.f, r.p, r.df), (0.0, 1.0, (1, 4)));
        let flat = anova_oneway(&[vec![2.0, 2.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!((flat.f, flat.p), (0.0, 1.0));
        let sep = anova_oneway(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!((sep.f, sep.p), (f64::INFINITY, 0.0));
        assert!(anova_oneway(&[vec![1.0, 2.0]]).is_err());
        assert!(anova_oneway(&[vec![1.0], vec![2.0, 3.0]]).is_err());
    }

    #[test]
    fn intra_observer_examples() {
        let mut t = RatingsTable::new(vec!["A".into()], vec!["1".into(), "2".into(), "3".into()]);
        t.values[0] = vec![[Some(1.0), Some(1.0)], [Some(2.0), Some(2.0)], [Some(3.0), Some(3.0)]];
        assert_eq!(intra_observer(&t, "A").unwrap(), (0.0, 0.0));
        t.values[0] = vec![[Some(1.0), Some(1.5)], [Some(2.0), Some(2.5)], [Some(3.0), Some(3.5)]];
        assert_eq!(intra_observer(&t, "A").unwrap(), (0.5, 0.0));
    }
}
