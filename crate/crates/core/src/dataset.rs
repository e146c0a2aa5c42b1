//! Tabular data: CSV loading, privileged feature splits, min-max scaling and
//! target encoding.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScnError};
use crate::random_config::{RandomStream, FEATURE_SPLIT_STREAM, SHUFFLE_STREAM};

/// Which CSV column holds the target.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetColumn {
    /// The trailing column.
    #[default]
    Last,
    /// Zero-based column index.
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
}

impl std::str::FromStr for TargetColumn {
    type Err = ScnError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("last") || s.is_empty() {
            Ok(TargetColumn::Last)
        } else if let Some(idx) = s.strip_prefix('#') {
            idx.parse()
                .map(TargetColumn::Index)
                .map_err(|_| ScnError::Parameter(format!("bad target column index '{s}'")))
        } else {
            Ok(TargetColumn::Name(s.to_string()))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Regression,
    Classification,
}

impl std::str::FromStr for TaskKind {
    type Err = ScnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "regression" | "reg" => Ok(TaskKind::Regression),
            "classification" | "class" | "clf" => Ok(TaskKind::Classification),
            other => Err(ScnError::Parameter(format!("unknown task kind '{other}'"))),
        }
    }
}

/// Raw features plus the untouched target column.
#[derive(Clone, Debug, PartialEq)]
pub struct DataTable {
    pub features: Array2<f64>,
    pub targets_raw: Vec<String>,
    pub feature_names: Option<Vec<String>>,
}

impl DataTable {
    pub fn new(features: Array2<f64>, targets_raw: Vec<String>) -> Result<Self> {
        let table = DataTable {
            features,
            targets_raw,
            feature_names: None,
        };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<()> {
        if self.features.nrows() == 0 {
            return Err(ScnError::Empty("table has no rows".into()));
        }
        if self.features.nrows() != self.targets_raw.len() {
            return Err(ScnError::Dimension(format!(
                "{} feature rows but {} targets",
                self.features.nrows(),
                self.targets_raw.len()
            )));
        }
        if self.features.iter().any(|v| !v.is_finite()) {
            return Err(ScnError::Data("non-finite feature value".into()));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_attributes(&self) -> usize {
        self.features.ncols()
    }

    /// Subset of rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> DataTable {
        DataTable {
            features: self.features.select(Axis(0), rows),
            targets_raw: rows.iter().map(|&i| self.targets_raw[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
        }
    }
}

fn is_numeric(cell: &str) -> bool {
    cell.trim().parse::<f64>().is_ok()
}

/// Reads a comma-separated table. The first row is a header iff one of its
/// non-target cells (or, when the target is chosen by name, any cell) fails to
/// parse as a number. Rows and columns in parse errors are 1-based file positions.
pub fn load_csv(path: impl AsRef<Path>, target: &TargetColumn) -> Result<DataTable> {
    let path = path.as_ref();
    let records = read_records(path)?;
    let width = records[0].1.len();
    let first = &records[0].1;

    let has_header = match target {
        TargetColumn::Name(_) => true,
        _ => {
            let tcol = resolve_positional(target, width)?;
            first
                .iter()
                .enumerate()
                .any(|(j, c)| j != tcol && !is_numeric(c))
        }
    };
    let header: Option<Vec<String>> = has_header.then(|| first.iter().map(str::to_string).collect());
    let target_col = match target {
        TargetColumn::Name(name) => header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| ScnError::Data(format!("no column named '{name}'")))?,
        _ => resolve_positional(target, width)?,
    };

    let body = if has_header { &records[1..] } else { &records[..] };
    if body.is_empty() {
        return Err(ScnError::Empty(format!("{} contains a header only", path.display())));
    }
    let p = width - 1;
    let mut features = Array2::zeros((body.len(), p));
    let mut targets = Vec::with_capacity(body.len());
    for (i, (line, rec)) in body.iter().enumerate() {
        if rec.len() != width {
            return Err(ScnError::Parse {
                row: *line,
                col: rec.len().min(width) + 1,
                message: format!("expected {width} cells, found {}", rec.len()),
            });
        }
        let mut k = 0;
        for (j, cell) in rec.iter().enumerate() {
            if j == target_col {
                if cell.is_empty() {
                    return Err(ScnError::Parse {
                        row: *line,
                        col: j + 1,
                        message: "missing target".into(),
                    });
                }
                targets.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| ScnError::Parse {
                row: *line,
                col: j + 1,
                message: format!("non-numeric feature cell '{cell}'"),
            })?;
            if !v.is_finite() {
                return Err(ScnError::Parse {
                    row: *line,
                    col: j + 1,
                    message: format!("non-finite feature cell '{cell}'"),
                });
            }
            features[[i, k]] = v;
            k += 1;
        }
    }
    let feature_names = header.map(|h| {
        h.into_iter()
            .enumerate()
            .filter(|(j, _)| *j != target_col)
            .map(|(_, n)| n)
            .collect()
    });
    let mut table = DataTable::new(features, targets)?;
    table.feature_names = feature_names;
    Ok(table)
}

fn read_records(path: &Path) -> Result<Vec<(usize, csv::StringRecord)>> {
    let bytes = std::fs::read(path).map_err(|e| ScnError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| ScnError::Parse {
            row: i + 1,
            col: 0,
            message: e.to_string(),
        })?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        records.push((i + 1, rec));
    }
    if records.is_empty() {
        return Err(ScnError::Empty(format!("{} contains no rows", path.display())));
    }
    Ok(records)
}

/// Number of cells in the first non-empty row.
pub fn csv_width(path: impl AsRef<Path>) -> Result<usize> {
    Ok(read_records(path.as_ref())?[0].1.len())
}

/// Reads an all-numeric table without a target column. A first row with any
/// non-numeric cell is taken as the header.
pub fn load_features(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let records = read_records(path)?;
    let width = records[0].1.len();
    let skip = usize::from(records[0].1.iter().any(|c| !is_numeric(c)));
    let body = &records[skip..];
    if body.is_empty() {
        return Err(ScnError::Empty(format!("{} contains a header only", path.display())));
    }
    let mut features = Array2::zeros((body.len(), width));
    for (i, (line, rec)) in body.iter().enumerate() {
        if rec.len() != width {
            return Err(ScnError::Parse {
                row: *line,
                col: rec.len().min(width) + 1,
                message: format!("expected {width} cells, found {}", rec.len()),
            });
        }
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| ScnError::Parse {
                row: *line,
                col: j + 1,
                message: format!("non-numeric feature cell '{cell}'"),
            })?;
            if !v.is_finite() {
                return Err(ScnError::Parse {
                    row: *line,
                    col: j + 1,
                    message: format!("non-finite feature cell '{cell}'"),
                });
            }
            features[[i, j]] = v;
        }
    }
    Ok(features)
}

fn resolve_positional(target: &TargetColumn, width: usize) -> Result<usize> {
    if width < 2 {
        return Err(ScnError::Data("need at least one feature and a target column".into()));
    }
    match target {
        TargetColumn::Last => Ok(width - 1),
        TargetColumn::Index(i) if *i < width => Ok(*i),
        TargetColumn::Index(i) => Err(ScnError::Data(format!(
            "target column {i} out of range for {width} columns"
        ))),
        TargetColumn::Name(_) => unreachable!(),
    }
}

/// Partition of the attribute indices into a normal and a privileged view.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureSplit {
    pub seed: u64,
    pub normal: Vec<usize>,
    pub privileged: Vec<usize>,
}

impl FeatureSplit {
    /// All attributes normal, nothing privileged.
    pub fn all_normal(p: usize) -> Self {
        FeatureSplit {
            seed: 0,
            normal: (0..p).collect(),
            privileged: vec![],
        }
    }

    pub fn n_attributes(&self) -> usize {
        self.normal.len() + self.privileged.len()
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let mut seen = vec![false; p];
        for &i in self.normal.iter().chain(&self.privileged) {
            if i >= p || seen[i] {
                return Err(ScnError::Data(format!(
                    "feature split index {i} repeated or out of range for {p} attributes"
                )));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) || self.normal.is_empty() {
            return Err(ScnError::Data("feature split does not cover all attributes".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("split serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| ScnError::Serde(e.to_string()))
    }

    /// Stable 64-bit fingerprint, used to check that variants saw the same split.
    pub fn fingerprint(&self) -> u64 {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.to_json().as_bytes());
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }
}

/// Random halving of the attributes; the normal side takes the extra one when
/// `p` is odd. Both index lists come back sorted.
pub fn split_privileged(table: &DataTable, seed: u64) -> Result<FeatureSplit> {
    split_privileged_count(table.n_attributes(), seed)
}

pub fn split_privileged_count(p: usize, seed: u64) -> Result<FeatureSplit> {
    if p < 2 {
        return Err(ScnError::Data(format!(
            "a privileged split needs at least 2 attributes, table has {p}"
        )));
    }
    let mut idx: Vec<usize> = (0..p).collect();
    idx.shuffle(&mut RandomStream::new(seed, FEATURE_SPLIT_STREAM).rng());
    let n = p.div_ceil(2);
    let mut normal = idx[..n].to_vec();
    let mut privileged = idx[n..].to_vec();
    normal.sort_unstable();
    privileged.sort_unstable();
    Ok(FeatureSplit {
        seed,
        normal,
        privileged,
    })
}

/// Per-column min/max fitted on training rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub fitted_on: usize,
}

impl NormalizationParams {
    pub fn is_degenerate(&self, col: usize) -> bool {
        self.max[col] <= self.min[col]
    }

    pub fn n_columns(&self) -> usize {
        self.min.len()
    }

    /// Restriction to a subset of columns.
    pub fn select(&self, cols: &[usize]) -> NormalizationParams {
        NormalizationParams {
            min: cols.iter().map(|&c| self.min[c]).collect(),
            max: cols.iter().map(|&c| self.max[c]).collect(),
            fitted_on: self.fitted_on,
        }
    }

    #[inline]
    pub fn scale(&self, col: usize, v: f64) -> f64 {
        if self.is_degenerate(col) {
            0.0
        } else {
            ((v - self.min[col]) / (self.max[col] - self.min[col])).clamp(0.0, 1.0)
        }
    }

    #[inline]
    pub fn unscale(&self, col: usize, v: f64) -> f64 {
        if self.is_degenerate(col) {
            self.min[col]
        } else {
            self.min[col] + v * (self.max[col] - self.min[col])
        }
    }
}

pub fn fit_normalizer(table: &DataTable, rows: &[usize]) -> Result<NormalizationParams> {
    fit_columns(table.features.view(), rows)
}

pub(crate) fn fit_columns(data: ArrayView2<f64>, rows: &[usize]) -> Result<NormalizationParams> {
    if rows.is_empty() {
        return Err(ScnError::Empty("cannot fit a normalizer on zero rows".into()));
    }
    let p = data.ncols();
    let mut min = vec![f64::INFINITY; p];
    let mut max = vec![f64::NEG_INFINITY; p];
    for &i in rows {
        if i >= data.nrows() {
            return Err(ScnError::Dimension(format!("row {i} out of range")));
        }
        for (j, &v) in data.row(i).iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    Ok(NormalizationParams {
        min,
        max,
        fitted_on: rows.len(),
    })
}

/// Maps each value to `(v - min) / (max - min)` clamped to `[0, 1]`; constant
/// columns map to 0.
pub fn apply_normalizer(params: &NormalizationParams, matrix: ArrayView2<f64>) -> Result<Array2<f64>> {
    if matrix.ncols() != params.n_columns() {
        return Err(ScnError::Dimension(format!(
            "normalizer fitted on {} columns, matrix has {}",
            params.n_columns(),
            matrix.ncols()
        )));
    }
    let mut out = matrix.to_owned();
    for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
        col.mapv_inplace(|v| params.scale(j, v));
    }
    Ok(out)
}

/// Encoded targets plus what is needed to decode them.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedTargets {
    pub t: Array2<f64>,
    pub encoding: TargetEncoding,
}

/// Target encoding fitted on training rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum TargetEncoding {
    Regression { min: f64, max: f64 },
    Classification { class_labels: Vec<String> },
}

impl TargetEncoding {
    pub fn task_kind(&self) -> TaskKind {
        match self {
            TargetEncoding::Regression { .. } => TaskKind::Regression,
            TargetEncoding::Classification { .. } => TaskKind::Classification,
        }
    }

    pub fn n_outputs(&self) -> usize {
        match self {
            TargetEncoding::Regression { .. } => 1,
            TargetEncoding::Classification { class_labels } => class_labels.len(),
        }
    }

    /// Fits the encoding on the given rows of `targets`.
    pub fn fit(targets: &[String], rows: &[usize], kind: TaskKind) -> Result<Self> {
        if rows.is_empty() {
            return Err(ScnError::Empty("cannot fit targets on zero rows".into()));
        }
        match kind {
            TaskKind::Regression => {
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                for &i in rows {
                    let v = parse_target(&targets[i], i)?;
                    min = min.min(v);
                    max = max.max(v);
                }
                Ok(TargetEncoding::Regression { min, max })
            }
            TaskKind::Classification => {
                let labels: Vec<&str> = rows.iter().map(|&i| targets[i].as_str()).collect();
                let class_labels = ordered_labels(&labels);
                if class_labels.len() < 2 {
                    return Err(ScnError::Data(format!(
                        "classification needs at least 2 classes, found {}",
                        class_labels.len()
                    )));
                }
                Ok(TargetEncoding::Classification { class_labels })
            }
        }
    }

    /// Encodes a list of raw targets.
    pub fn encode(&self, targets: &[String]) -> Result<Array2<f64>> {
        match self {
            TargetEncoding::Regression { min, max } => {
                let params = NormalizationParams {
                    min: vec![*min],
                    max: vec![*max],
                    fitted_on: 0,
                };
                let mut t = Array2::zeros((targets.len(), 1));
                for (i, raw) in targets.iter().enumerate() {
                    t[[i, 0]] = params.scale(0, parse_target(raw, i)?);
                }
                Ok(t)
            }
            TargetEncoding::Classification { class_labels } => {
                let index: BTreeMap<&str, usize> = class_labels
                    .iter()
                    .enumerate()
                    .map(|(k, l)| (l.as_str(), k))
                    .collect();
                let mut t = Array2::zeros((targets.len(), class_labels.len()));
                for (i, raw) in targets.iter().enumerate() {
                    let k = index.get(raw.as_str()).ok_or_else(|| {
                        ScnError::Data(format!("label '{raw}' at row {} unseen in training", i + 1))
                    })?;
                    t[[i, *k]] = 1.0;
                }
                Ok(t)
            }
        }
    }

    /// Maps normalized regression outputs back to target units.
    pub fn decode_regression(&self, v: f64) -> Option<f64> {
        match self {
            TargetEncoding::Regression { min, max } => Some(if max > min {
                min + v * (max - min)
            } else {
                *min
            }),
            TargetEncoding::Classification { .. } => None,
        }
    }
}

fn parse_target(raw: &str, row: usize) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ScnError::Data(format!("regression target '{raw}' at row {} is not a number", row + 1)))
}

/// Distinct labels, numerically ordered when every label is a number and
/// lexicographically otherwise.
fn ordered_labels(labels: &[&str]) -> Vec<String> {
    let mut distinct: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
    distinct.sort();
    distinct.dedup();
    if distinct.iter().all(|l| is_numeric(l)) {
        distinct.sort_by(|a, b| {
            let x: f64 = a.parse().unwrap();
            let y: f64 = b.parse().unwrap();
            x.total_cmp(&y).then_with(|| a.cmp(b))
        });
    }
    distinct
}

/// Encodes all targets, fitting the encoding on every row.
pub fn encode_targets(table: &DataTable, kind: TaskKind) -> Result<EncodedTargets> {
    let rows: Vec<usize> = (0..table.n_samples()).collect();
    encode_targets_fitted(table, kind, &rows)
}

/// Encodes all targets with the encoding fitted on `fit_rows`.
pub fn encode_targets_fitted(
    table: &DataTable,
    kind: TaskKind,
    fit_rows: &[usize],
) -> Result<EncodedTargets> {
    let encoding = TargetEncoding::fit(&table.targets_raw, fit_rows, kind)?;
    let t = encoding.encode(&table.targets_raw)?;
    Ok(EncodedTargets { t, encoding })
}

/// Seeded shuffle of `0..N`, then a prefix split into train and test index sets.
pub fn split_train_test(table: &DataTable, n_train: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    split_indices(table.n_samples(), n_train, seed)
}

pub fn split_indices(n: usize, n_train: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n_train == 0 || n_train >= n {
        return Err(ScnError::Parameter(format!(
            "training size must lie in 1..{n}, got {n_train}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut RandomStream::new(seed, SHUFFLE_STREAM).rng());
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

/// Normalized normal/privileged blocks and encoded targets for a row subset.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub x: Array2<f64>,
    pub x_priv: Array2<f64>,
    pub t: Array2<f64>,
}

/// Everything fitted on training rows that is needed to transform new data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub split: FeatureSplit,
    pub normalization: NormalizationParams,
    pub targets: TargetEncoding,
}

impl Preprocessor {
    pub fn fit(table: &DataTable, train_rows: &[usize], split: FeatureSplit, kind: TaskKind) -> Result<Self> {
        split.validate(table.n_attributes())?;
        Ok(Preprocessor {
            split,
            normalization: fit_normalizer(table, train_rows)?,
            targets: TargetEncoding::fit(&table.targets_raw, train_rows, kind)?,
        })
    }

    pub fn n_attributes(&self) -> usize {
        self.normalization.n_columns()
    }

    fn check_width(&self, z: &ArrayView2<f64>) -> Result<()> {
        if z.ncols() != self.n_attributes() {
            return Err(ScnError::Dimension(format!(
                "model expects {} attributes, data has {}",
                self.n_attributes(),
                z.ncols()
            )));
        }
        Ok(())
    }

    fn view(&self, z: ArrayView2<f64>, cols: &[usize]) -> Result<Array2<f64>> {
        self.check_width(&z)?;
        let mut out = z.select(Axis(1), cols);
        for (k, &c) in cols.iter().enumerate() {
            out.column_mut(k)
                .mapv_inplace(|v| self.normalization.scale(c, v));
        }
        Ok(out)
    }

    /// Normalized normal-feature block of raw attribute rows.
    pub fn normal_view(&self, z: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.view(z, &self.split.normal)
    }

    /// Normalized privileged-feature block of raw attribute rows.
    pub fn privileged_view(&self, z: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.view(z, &self.split.privileged)
    }

    pub fn prepare(&self, table: &DataTable, rows: &[usize]) -> Result<PreparedData> {
        let sub = table.select_rows(rows);
        Ok(PreparedData {
            x: self.normal_view(sub.features.view())?,
            x_priv: self.privileged_view(sub.features.view())?,
            t: self.targets.encode(&sub.targets_raw)?,
        })
    }
}

/// Argmax per row, ties to the lowest index.
pub fn argmax_rows(scores: ArrayView2<f64>) -> Vec<usize> {
    scores
        .rows()
        .into_iter()
        .map(|r| {
            let mut best = 0;
            for (k, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}


#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_features_without_target() {
        let f = write_tmp("a,b\n1,2\n3,4\n");
        let m = load_features(f.path()).unwrap();
        assert_eq!(m, ndarray::array![[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(csv_width(f.path()).unwrap(), 2);
        let f = write_tmp("1,2\n3,x\n");
        assert!(matches!(load_features(f.path()), Err(ScnError::Parse { row: 2, col: 2, .. })));
    }

    #[test]
    fn loads_shape_with_trailing_target() {
        let f = write_tmp("1,2,3,a\n4,5,6,b\n7,8,9,a\n");
        let t = load_csv(f.path(), &TargetColumn::Last).unwrap();
        assert_eq!(t.n_samples(), 3);
        assert_eq!(t.n_attributes(), 3);
        assert_eq!(t.targets_raw, vec!["a", "b", "a"]);
        assert!(t.feature_names.is_none());
    }

    #[test]
    fn detects_header_and_selects_by_name() {
        let f = write_tmp("x1,y,x2\n1,10,2\n3,20,4\n");
        let t = load_csv(f.path(), &TargetColumn::Name("y".into())).unwrap();
        assert_eq!(t.features, array![[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(t.targets_raw, vec!["10", "20"]);
        assert_eq!(t.feature_names.unwrap(), vec!["x1", "x2"]);
        let t = load_csv(f.path(), &TargetColumn::Last).unwrap();
        assert_eq!(t.n_samples(), 2);
    }

    #[test]
    fn reports_bad_cell_position() {
        let f = write_tmp("1,2,3,4\n5,6,oops,8\n");
        match load_csv(f.path(), &TargetColumn::Last) {
            Err(ScnError::Parse { row, col, .. }) => assert_eq!((row, col), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_and_empty_files() {
        assert!(matches!(
            load_csv("/nonexistent/file.csv", &TargetColumn::Last),
            Err(ScnError::Io { .. })
        ));
        let f = write_tmp("");
        assert!(matches!(load_csv(f.path(), &TargetColumn::Last), Err(ScnError::Empty(_))));
        let f = write_tmp("1,2,3\n4,,6\n");
        assert!(matches!(load_csv(f.path(), &TargetColumn::Last), Err(ScnError::Parse { row: 2, col: 2, .. })));
    }

    #[test]
    fn split_sizes() {
        for (p, n, d) in [(13, 7, 6), (8, 4, 4), (2, 1, 1), (15, 8, 7), (9, 5, 4)] {
            for seed in [0, 1, 77] {
                let s = split_privileged_count(p, seed).unwrap();
                assert_eq!((s.normal.len(), s.privileged.len()), (n, d));
                s.validate(p).unwrap();
            }
        }
        assert!(split_privileged_count(1, 0).is_err());
    }

    #[test]
    fn split_varies_with_seed() {
        let splits: std::collections::HashSet<_> =
            (0..100).map(|s| split_privileged_count(13, s).unwrap().normal).collect();
        assert!(splits.len() >= 2);
        assert_eq!(split_privileged_count(13, 5).unwrap(), split_privileged_count(13, 5).unwrap());
        let both: std::collections::HashSet<_> =
            (0..100).map(|s| split_privileged_count(2, s).unwrap().normal).collect();
        assert_eq!(both.len(), 2);
    }

    #[test]
    fn split_record_json() {
        let s = split_privileged_count(5, 3).unwrap();
        let back = FeatureSplit::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
        let raw = r#"{"seed": 9, "normal": [0, 2], "privileged": [1]}"#;
        let s = FeatureSplit::from_json(raw).unwrap();
        assert_eq!(s.privileged, vec![1]);
    }

    #[test]
    fn normalizer_fit_and_apply() {
        let t = DataTable::new(
            array![[0.0, 4.0], [5.0, 4.0], [10.0, 4.0], [100.0, 1.0]],
            vec!["a".into(); 4],
        )
        .unwrap();
        let p = fit_normalizer(&t, &[0, 1, 2]).unwrap();
        assert_eq!((p.min[0], p.max[0]), (0.0, 10.0));
        assert_eq!((p.min[1], p.max[1]), (4.0, 4.0));
        assert!(p.is_degenerate(1));
        assert_eq!(p.fitted_on, 3);
        let out = apply_normalizer(&p, t.features.view()).unwrap();
        assert_eq!(out.column(0).to_vec(), vec![0.0, 0.5, 1.0, 1.0]);
        assert!(out.column(1).iter().all(|&v| v == 0.0));
        assert!(fit_normalizer(&t, &[]).is_err());
        assert!(apply_normalizer(&p, array![[1.0]].view()).is_err());
    }

    #[test]
    fn normalizer_arithmetic() {
        let p = NormalizationParams { min: vec![2.0], max: vec![6.0], fitted_on: 2 };
        let out = apply_normalizer(&p, array![[2.0], [6.0], [4.0], [8.0], [-1.0]].view()).unwrap();
        let expect: Vec<f64> = [2.0, 6.0, 4.0, 8.0, -1.0]
            .iter()
            .map(|v| ((v - 2.0) / 4.0f64).clamp(0.0, 1.0))
            .collect();
        assert_eq!(out.column(0).to_vec(), expect);
        assert_eq!(expect, vec![0.0, 1.0, 0.5, 1.0, 0.0]);
    }

    #[test]
    fn one_hot_encoding() {
        let t = DataTable::new(Array2::zeros((4, 2)), vec!["b".into(), "a".into(), "c".into(), "b".into()]).unwrap();
        let enc = encode_targets(&t, TaskKind::Classification).unwrap();
        assert_eq!(enc.t.row(0).to_vec(), vec![0.0, 1.0, 0.0]);
        assert_eq!(enc.encoding.n_outputs(), 3);
        let single = DataTable::new(Array2::zeros((2, 2)), vec!["x".into(), "x".into()]).unwrap();
        assert!(encode_targets(&single, TaskKind::Classification).is_err());
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        assert_eq!(ordered_labels(&["10", "2", "1"]), vec!["1", "2", "10"]);
        assert_eq!(ordered_labels(&["b", "a", "b"]), vec!["a", "b"]);
    }

    #[test]
    fn regression_targets_are_single_column() {
        let t = DataTable::new(Array2::zeros((3, 2)), vec!["1".into(), "3".into(), "2".into()]).unwrap();
        let enc = encode_targets(&t, TaskKind::Regression).unwrap();
        assert_eq!(enc.t.shape(), &[3, 1]);
        assert_eq!(enc.t.column(0).to_vec(), vec![0.0, 1.0, 0.5]);
        assert_eq!(enc.encoding.decode_regression(0.5), Some(2.0));
    }

    #[test]
    fn train_test_sizes() {
        let (tr, te) = split_indices(178, 100, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (100, 78));
        let (tr, te) = split_indices(993, 700, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (700, 293));
        assert!(split_indices(10, 10, 0).is_err());
        assert!(split_indices(10, 0, 0).is_err());
    }

    #[test]
    fn preprocessor_selects_views() {
        let t = DataTable::new(
            array![[0.0, 10.0, 5.0], [2.0, 20.0, 5.0], [4.0, 30.0, 6.0]],
            vec!["1".into(), "2".into(), "3".into()],
        )
        .unwrap();
        let split = FeatureSplit { seed: 0, normal: vec![0, 2], privileged: vec![1] };
        let pre = Preprocessor::fit(&t, &[0, 1], split, TaskKind::Regression).unwrap();
        let d = pre.prepare(&t, &[2]).unwrap();
        assert_eq!(d.x.row(0).to_vec(), vec![1.0, 0.0]);
        assert_eq!(d.x_priv.row(0).to_vec(), vec![1.0]);
        assert_eq!(d.t[[0, 0]], 1.0);
        assert!(pre.normal_view(array![[1.0, 2.0]].view()).is_err());
    }

    proptest! {
        #[test]
        fn split_partitions_rows(n in 2usize..300, frac in 0.01f64..0.99, seed: u64) {
            let n_train = ((n as f64 * frac) as usize).clamp(1, n - 1);
            let (tr, te) = split_indices(n, n_train, seed).unwrap();
            let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }

        #[test]
        fn fitted_rows_normalize_into_unit_box(
            vals in proptest::collection::vec(-1e3f64..1e3, 6..60)
        ) {
            let rows = vals.len() / 3;
            let m = Array2::from_shape_vec((rows, 3), vals[..rows * 3].to_vec()).unwrap();
            let t = DataTable::new(m, vec!["0".into(); rows]).unwrap();
            let idx: Vec<usize> = (0..rows).collect();
            let p = fit_normalizer(&t, &idx).unwrap();
            let out = apply_normalizer(&p, t.features.view()).unwrap();
            prop_assert!(out.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }

        #[test]
        fn one_hot_rows_sum_to_one(labels in proptest::collection::vec(0usize..5, 2..40)) {
            prop_assume!(labels.iter().any(|&l| l != labels[0]));
            let raw: Vec<String> = labels.iter().map(|l| format!("c{l}")).collect();
            let t = DataTable::new(Array2::zeros((raw.len(), 2)), raw.clone()).unwrap();
            let enc = encode_targets(&t, TaskKind::Classification).unwrap();
            let TargetEncoding::Classification { class_labels } = &enc.encoding else { unreachable!() };
            let arg = argmax_rows(enc.t.view());
            for (i, row) in enc.t.rows().into_iter().enumerate() {
                prop_assert_eq!(row.sum(), 1.0);
                prop_assert_eq!(&class_labels[arg[i]], &raw[i]);
            }
        }
    }
}
