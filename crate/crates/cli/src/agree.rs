//! `sonobio agree`: MAE against a reference reader, ICC per reading,
//! intra-observer differences and a one-way ANOVA across readers, per kind.

use std::fs::File;

use serde::Serialize;
use sonobiometry::agreement::{
    anova_oneway, icc_with, intra_observer, mae_matrix, read_ratings_csv, AgreementError, IccVariant, RatingKind,
    RatingsTable, Reading,
};

use crate::args::AgreeArgs;
use crate::commands::write_output;
use crate::{Failure, Progress};

#[derive(Debug, Serialize)]
struct AgreementReport {
    schema: u32,
    reference: String,
    icc_variant: IccVariant,
    kinds: Vec<KindStats>,
}

#[derive(Debug, Serialize)]
struct KindStats {
    kind: RatingKind,
    readers: Vec<String>,
    cases: usize,
    mae_cm: Vec<ReaderMae>,
    icc_reading_1: f64,
    /// `null` when the second reading has fewer than two complete cases.
    icc_reading_2: Option<f64>,
    intra_observer: Vec<IntraRow>,
    /// Readers as groups, first readings.
    anova: Option<AnovaRow>,
}

#[derive(Debug, Serialize)]
struct ReaderMae {
    reader: String,
    mae: f64,
}

#[derive(Debug, Serialize)]
struct IntraRow {
    reader: String,
    /// `null` for readers without a second reading.
    mean_abs_diff: Option<f64>,
    sd: Option<f64>,
}

#[derive(Debug, Serialize)]
struct AnovaRow {
    f: f64,
    df: (usize, usize),
    p: f64,
    p_reported: f64,
}

fn input(e: AgreementError) -> Failure {
    Failure::Input(e.to_string())
}

fn kind_stats(kind: RatingKind, t: &RatingsTable, args: &AgreeArgs) -> Result<KindStats, Failure> {
    if t.readers.len() < 2 {
        return Err(Failure::Input(format!(
            "{kind}: {}",
            AgreementError::Insufficient(format!("agreement needs at least 2 readers, got {}", t.readers.len()))
        )));
    }
    let mae_cm = mae_matrix(t, &args.reference)
        .map_err(input)?
        .into_iter()
        .map(|(reader, mae)| ReaderMae { reader, mae })
        .collect();
    let icc_reading_1 = icc_with(t, Reading::First, args.icc).map_err(|e| Failure::Input(format!("{kind}: {e}")))?;
    let icc_reading_2 = match icc_with(t, Reading::Second, args.icc) {
        Ok(v) => Some(v),
        Err(AgreementError::Insufficient(_)) => None,
        Err(e) => return Err(input(e)),
    };
    let intra_observer = t
        .readers
        .iter()
        .map(|r| match intra_observer(t, r) {
            Ok((m, sd)) => Ok(IntraRow {
                reader: r.clone(),
                mean_abs_diff: Some(m),
                sd: Some(sd),
            }),
            Err(AgreementError::Insufficient(_)) => Ok(IntraRow {
                reader: r.clone(),
                mean_abs_diff: None,
                sd: None,
            }),
            Err(e) => Err(input(e)),
        })
        .collect::<Result<_, _>>()?;
    let groups: Vec<Vec<f64>> = (0..t.readers.len())
        .map(|r| t.reader_values(r, Reading::First))
        .collect();
    let anova = match anova_oneway(&groups) {
        Ok(a) => Some(AnovaRow {
            f: a.f,
            df: a.df,
            p: a.p,
            p_reported: a.p_reported(),
        }),
        Err(AgreementError::Insufficient(_)) => None,
        Err(e) => return Err(input(e)),
    };
    Ok(KindStats {
        kind,
        readers: t.readers.clone(),
        cases: t.cases.len(),
        mae_cm,
        icc_reading_1,
        icc_reading_2,
        intra_observer,
        anova,
    })
}

pub fn agree(args: &AgreeArgs, progress: &Progress) -> Result<(), Failure> {
    let file = File::open(&args.ratings).map_err(|e| Failure::Input(format!("{}: {e}", args.ratings.display())))?;
    let tables = read_ratings_csv(file).map_err(input)?;
    if tables.is_empty() {
        return Err(Failure::Input(format!("{}: no ratings", args.ratings.display())));
    }
    let kinds = tables
        .iter()
        .map(|(kind, t)| kind_stats(*kind, t, args))
        .collect::<Result<Vec<_>, _>>()?;
    let report = AgreementReport {
        schema: sonobiometry::pipeline::REPORT_SCHEMA,
        reference: args.reference.clone(),
        icc_variant: args.icc,
        kinds,
    };
    write_output(
        &args.out,
        &(serde_json::to_string_pretty(&report).expect("stats serialize") + "\n"),
    )?;
    progress.say(&format!(
        "agreement statistics for {} kinds written to {}",
        report.kinds.len(),
        args.out.display()
    ));
    Ok(())
}
