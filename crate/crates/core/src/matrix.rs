use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where the columns of a [`FeatureMatrix`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Lexicon,
    Term,
    Pca,
    Raw,
}

/// Dense posts-by-features matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub row_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub provenance: Provenance,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_rows(
        row_ids: Vec<String>,
        feature_names: Vec<String>,
        provenance: Provenance,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if row_ids.len() != rows.len() {
            return Err(Error::Pipeline(format!(
                "{} row ids for {} rows",
                row_ids.len(),
                rows.len()
            )));
        }
        let width = feature_names.len();
        let mut data = Vec::with_capacity(rows.len() * width);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != width {
                return Err(Error::Pipeline(format!(
                    "row {i} has {} values, expected {width}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        Ok(Self {
            row_ids,
            feature_names,
            provenance,
            data,
        })
    }

    /// Rows without ids or names; handy for tests and raw numeric input.
    pub fn from_raw(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        let names = (0..width).map(|j| format!("x{j}")).collect();
        Self::from_rows(ids, names, Provenance::Raw, rows)
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_cols();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn has_nan(&self) -> bool {
        self.data.iter().any(|v| !v.is_finite())
    }

    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        let rows = self
            .rows()
            .map(|r| cols.iter().map(|&j| r[j]).collect())
            .collect();
        FeatureMatrix::from_rows(
            self.row_ids.clone(),
            cols.iter()
                .map(|&j| self.feature_names[j].clone())
                .collect(),
            self.provenance,
            rows,
        )
        .expect("column selection preserves shape")
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix::from_rows(
            idx.iter().map(|&i| self.row_ids[i].clone()).collect(),
            self.feature_names.clone(),
            self.provenance,
            idx.iter().map(|&i| self.row(i).to_vec()).collect(),
        )
        .expect("row selection preserves shape")
    }

    /// CSV with header `post_id,<feature...>,label`.
    pub fn write_csv<W: Write>(&self, labels: &[String], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["post_id".to_owned()];
        header.extend(self.feature_names.iter().cloned());
        header.push("label".to_owned());
        w.write_record(&header)?;
        for (i, row) in self.rows().enumerate() {
            let mut rec = vec![self.row_ids[i].clone()];
            rec.extend(row.iter().map(|v| format_value(*v)));
            rec.push(labels.get(i).cloned().unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Fixed six-decimal rendering used by every CSV export.
pub fn format_value(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_owned()
    } else {
        s
    }
}
