//! Stacked-dataset CSV format.
//!
//! Header row required. `S` (`v`/`rct`), `A` (0/1) and `Y` are mandatory; `Z`
//! (empty when unobserved) and `prob` (externally computed membership
//! probability) are optional. Every other column is a numeric covariate, kept
//! in header order.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use xportme::{Dataset, Row, SampleLabel};

use crate::error::{CliError, Result};

pub const PROB_COLUMN: &str = "prob";
const RESERVED: [&str; 5] = ["S", "A", "Y", "Z", PROB_COLUMN];

#[derive(Debug, Clone, PartialEq)]
pub struct StackedInput {
    pub dataset: Dataset,
    /// Values of the `prob` column, when present.
    pub probs: Option<Vec<f64>>,
}

pub fn parse_stacked_csv(path: &Path) -> Result<StackedInput> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_stacked_reader(f)
}

fn number(line: usize, column: &str, raw: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| CliError::NonNumeric {
        line,
        column: column.to_string(),
        value: raw.to_string(),
    })
}

pub fn parse_stacked_reader<R: Read>(reader: R) -> Result<StackedInput> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let col = |name: &str| find(name).ok_or_else(|| CliError::MissingColumn(name.into()));
    let (s_col, a_col, y_col) = (col("S")?, col("A")?, col("Y")?);
    let z_col = find("Z");
    let p_col = find(PROB_COLUMN);
    let cov_cols: Vec<usize> = (0..headers.len())
        .filter(|&i| !RESERVED.contains(&headers[i].as_str()))
        .collect();
    let covariate_names: Vec<String> = cov_cols.iter().map(|&i| headers[i].clone()).collect();

    let mut rows = Vec::new();
    let mut probs = p_col.map(|_| Vec::new());
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        // header is line 1
        let line = k + 2;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let sample = SampleLabel::parse(field(s_col)).ok_or_else(|| CliError::BadLabel {
            line,
            value: field(s_col).to_string(),
        })?;
        let treated = match field(a_col) {
            "0" => false,
            "1" => true,
            other => {
                return Err(CliError::BadTreatment {
                    line,
                    value: other.to_string(),
                })
            }
        };
        if treated && sample == SampleLabel::Validation {
            return Err(CliError::ValidationRowTreated { line });
        }
        let y = number(line, "Y", field(y_col))?;
        let z = match z_col.map(field) {
            None | Some("") => None,
            Some(raw) => Some(number(line, "Z", raw)?),
        };
        if let (Some(i), Some(ps)) = (p_col, probs.as_mut()) {
            ps.push(number(line, PROB_COLUMN, field(i))?);
        }
        let covariates = cov_cols
            .iter()
            .map(|&i| number(line, &headers[i], field(i)))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(Row {
            sample,
            treated,
            y_reported: y,
            z_true: z,
            covariates,
        });
    }
    Ok(StackedInput {
        dataset: Dataset::new(rows, covariate_names),
        probs,
    })
}

/// Write a dataset in the same format. Floats use the shortest representation
/// that parses back to the identical value.
pub fn write_stacked_csv<W: Write>(d: &Dataset, probs: Option<&[f64]>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["S".to_string(), "A".into(), "Y".into(), "Z".into()];
    if probs.is_some() {
        header.push(PROB_COLUMN.into());
    }
    header.extend(d.covariate_names().iter().cloned());
    w.write_record(&header)?;
    for (i, r) in d.rows().iter().enumerate() {
        let mut rec = vec![
            r.sample.as_str().to_string(),
            (r.treated as u8).to_string(),
            r.y_reported.to_string(),
            r.z_true.map(|z| z.to_string()).unwrap_or_default(),
        ];
        if let Some(p) = probs {
            rec.push(p[i].to_string());
        }
        rec.extend(r.covariates.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| CliError::io("<csv output>", e))?;
    Ok(())
}
