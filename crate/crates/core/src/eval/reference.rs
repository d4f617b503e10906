use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::{CellReport, TestSet};
use super::variant::EvalMode;
use crate::error::{Error, Result};
use crate::io;

/// One published value: `block` groups rows into a table (e.g. held-out vs
/// HateCheck), `variant` is the row and (`dataset`, `n_shot`) the column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceRow {
    pub block: String,
    pub variant: String,
    pub dataset: String,
    pub n_shot: usize,
    pub macro_f1: f64,
}

pub fn read_reference(path: &Path) -> Result<Vec<ReferenceRow>> {
    let text = io::read_to_string(path)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.deserialize::<ReferenceRow>().enumerate() {
        let row = record.map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: i + 2,
            message: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

/// A value of ours in the same coordinates as [`ReferenceRow`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultPoint {
    pub block: String,
    pub variant: String,
    pub dataset: String,
    pub n_shot: usize,
    pub macro_f1: f64,
}

/// Standard-mode grid reports as comparison points; the block is the test set.
pub fn points_from_reports<'a>(reports: impl IntoIterator<Item = &'a CellReport>) -> Vec<ResultPoint> {
    reports
        .into_iter()
        .filter(|r| r.key.mode == EvalMode::Standard)
        .map(|r| ResultPoint {
            block: block_name(r.key.test_set).to_string(),
            variant: r.key.variant.tag(),
            dataset: r.dataset.clone(),
            n_shot: r.key.n_shot,
            macro_f1: r.macro_f1,
        })
        .collect()
}

pub fn block_name(test_set: TestSet) -> &'static str {
    test_set.as_str()
}

fn canonical_variant(name: &str) -> String {
    name.split('+').map(str::trim).collect::<Vec<_>>().join("+")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffTable {
    pub block: String,
    pub rows: Vec<String>,
    pub columns: Vec<(String, usize)>,
    /// `cells[r][c]` is ours minus reference; `None` when either side is absent.
    pub cells: Vec<Vec<Option<f64>>>,
    pub row_avg: Vec<Option<f64>>,
    pub col_avg: Vec<Option<f64>>,
    /// Mean over all present cells.
    pub overall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub tables: Vec<DiffTable>,
    pub warnings: Vec<String>,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Per-cell differences (ours minus reference) laid out like the reference
/// table, with row, column and overall averages over present cells.
pub fn compare_to_reference(ours: &[ResultPoint], reference: &[ReferenceRow]) -> Result<Comparison> {
    if let Some(bad) = reference.iter().find(|r| !(0.0..=1.0).contains(&r.macro_f1)) {
        return Err(Error::UnitMismatch(format!(
            "reference value {} for {} / {} / N={} is outside [0, 1]; expected a fraction",
            bad.macro_f1, bad.variant, bad.dataset, bad.n_shot
        )));
    }
    if let Some(bad) = ours.iter().find(|r| !(0.0..=1.0).contains(&r.macro_f1)) {
        return Err(Error::UnitMismatch(format!(
            "result value {} for {} / {} / N={} is outside [0, 1]",
            bad.macro_f1, bad.variant, bad.dataset, bad.n_shot
        )));
    }

    let mut blocks: Vec<String> = Vec::new();
    for block in reference.iter().map(|r| &r.block).chain(ours.iter().map(|r| &r.block)) {
        if !blocks.contains(block) {
            blocks.push(block.clone());
        }
    }

    let mut tables = Vec::new();
    let mut warnings = Vec::new();
    for block in blocks {
        let refs: Vec<&ReferenceRow> = reference.iter().filter(|r| r.block == block).collect();
        let mine: Vec<&ResultPoint> = ours.iter().filter(|r| r.block == block).collect();
        let mut rows: Vec<String> = Vec::new();
        let mut columns: Vec<(String, usize)> = Vec::new();
        let coords = refs
            .iter()
            .map(|r| (canonical_variant(&r.variant), r.dataset.clone(), r.n_shot))
            .chain(mine.iter().map(|r| (canonical_variant(&r.variant), r.dataset.clone(), r.n_shot)));
        for (variant, dataset, n) in coords {
            if !rows.contains(&variant) {
                rows.push(variant);
            }
            if !columns.contains(&(dataset.clone(), n)) {
                columns.push((dataset, n));
            }
        }
        let ref_map: BTreeMap<(String, String, usize), f64> = refs
            .iter()
            .map(|r| ((canonical_variant(&r.variant), r.dataset.clone(), r.n_shot), r.macro_f1))
            .collect();
        let our_map: BTreeMap<(String, String, usize), f64> = mine
            .iter()
            .map(|r| ((canonical_variant(&r.variant), r.dataset.clone(), r.n_shot), r.macro_f1))
            .collect();

        let cells: Vec<Vec<Option<f64>>> = rows
            .iter()
            .map(|row| {
                columns
                    .iter()
                    .map(|(dataset, n)| {
                        let k = (row.clone(), dataset.clone(), *n);
                        Some(our_map.get(&k)? - ref_map.get(&k)?)
                    })
                    .collect()
            })
            .collect();
        if cells.iter().flatten().all(Option::is_none) {
            if !mine.is_empty() {
                warnings.push(format!("block `{block}`: no cells in common with the reference"));
            }
            continue;
        }
        let row_avg = cells.iter().map(|r| mean(r.iter().flatten().copied())).collect();
        let col_avg = (0..columns.len())
            .map(|c| mean(cells.iter().filter_map(|r| r[c])))
            .collect();
        let overall = mean(cells.iter().flatten().flatten().copied());
        tables.push(DiffTable {
            block,
            rows,
            columns,
            cells,
            row_avg,
            col_avg,
            overall,
        });
    }
    if tables.is_empty() {
        warnings.push("no result cells overlap the reference table".into());
    }
    Ok(Comparison { tables, warnings })
}

/// Two-decimal display; a negative zero prints as `0.00`.
pub fn format_diff(value: f64) -> String {
    let s = format!("{value:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(format_diff).unwrap_or_default()
}

impl DiffTable {
    /// CSV lines: a header, one line per row ending in its average, and a
    /// final `Avg. Diff.` line with column averages and the overall mean.
    pub fn to_records(&self) -> Vec<Vec<String>> {
        let mut out = Vec::with_capacity(self.rows.len() + 2);
        let mut header = vec![self.block.clone()];
        header.extend(self.columns.iter().map(|(d, n)| format!("{d}/{n}")));
        header.push("Avg. Diff.".into());
        out.push(header);
        for (i, row) in self.rows.iter().enumerate() {
            let mut line = vec![row.clone()];
            line.extend(self.cells[i].iter().copied().map(fmt_opt));
            line.push(fmt_opt(self.row_avg[i]));
            out.push(line);
        }
        let mut footer = vec!["Avg. Diff.".to_string()];
        footer.extend(self.col_avg.iter().copied().map(fmt_opt));
        footer.push(fmt_opt(self.overall));
        out.push(footer);
        out
    }
}

pub fn write_comparison_csv(path: &Path, comparison: &Comparison) -> Result<()> {
    io::atomic_write(path, |w| {
        let mut csv = csv::WriterBuilder::new().flexible(true).from_writer(w);
        for (i, table) in comparison.tables.iter().enumerate() {
            if i > 0 {
                csv.write_record([""])?;
            }
            for record in table.to_records() {
                csv.write_record(&record)?;
            }
        }
        csv.flush()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(variant: &str, dataset: &str, n: usize, v: f64) -> ReferenceRow {
        ReferenceRow {
            block: "held_out".into(),
            variant: variant.into(),
            dataset: dataset.into(),
            n_shot: n,
            macro_f1: v,
        }
    }

    fn p(variant: &str, dataset: &str, n: usize, v: f64) -> ResultPoint {
        ResultPoint {
            block: "held_out".into(),
            variant: variant.into(),
            dataset: dataset.into(),
            n_shot: n,
            macro_f1: v,
        }
    }

    #[test]
    fn spot_value_and_blank_cells() {
        let reference = vec![r("X + DEN", "BAS19_ES", 20, 0.66), r("X + DEN", "BAS19_ES", 200, 0.75)];
        let ours = vec![p("X+DEN", "BAS19_ES", 20, 0.66), p("X+DEN", "FOR19_PT", 20, 0.5)];
        let cmp = compare_to_reference(&ours, &reference).unwrap();
        let t = &cmp.tables[0];
        assert_eq!(t.rows, vec!["X+DEN"]);
        assert_eq!(t.cells[0][0], Some(0.0));
        assert_eq!(t.cells[0][1], None);
        assert_eq!(t.cells[0][2], None);
        assert_eq!(t.to_records()[1], vec!["X+DEN", "0.00", "", "", "0.00"]);
    }

    #[test]
    fn row_average_at_display_precision() {
        let diffs = [-0.03, -0.03, -0.01, -0.01, 0.00];
        let reference: Vec<_> = (0..5).map(|i| r("M", &format!("D{i}"), 20, 0.5)).collect();
        let ours: Vec<_> = diffs.iter().enumerate().map(|(i, d)| p("M", &format!("D{i}"), 20, 0.5 + d)).collect();
        let cmp = compare_to_reference(&ours, &reference).unwrap();
        let avg = cmp.tables[0].row_avg[0].unwrap();
        assert!((avg + 0.016).abs() < 1e-12);
        assert_eq!(format_diff(avg), "-0.02");
        assert_eq!(format_diff(-0.004), "0.00");
    }

    #[test]
    fn unit_mismatch_and_empty_intersection() {
        assert!(matches!(
            compare_to_reference(&[], &[r("M", "D", 20, 66.0)]),
            Err(Error::UnitMismatch(_))
        ));
        let cmp = compare_to_reference(&[p("M", "X", 20, 0.4)], &[r("M", "D", 20, 0.6)]).unwrap();
        assert!(cmp.tables.is_empty());
        assert!(!cmp.warnings.is_empty());
    }
}
