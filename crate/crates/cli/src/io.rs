//! CSV readers and writers for every artifact the tool emits. Floats are
//! written with 17 significant digits so they read back bit-exact.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use volscreen::featsel::{FeatureMatrix, SelectionReport};
use volscreen::gpr::{BasisKind, KernelSpec};
use volscreen::screen::{ScreenRow, Verdict, VpPrediction};
use volscreen::subsearch::{Combo, HoldoutMetrics, Status, SubsetRecord};
use volscreen::vapordata::{AntoineParams, AntoineRecord, Dataset, Partition, VpInstance};

use crate::CliError;

pub const RECORDS_HEADER: [&str; 7] = ["id", "smiles", "A", "B", "C", "t_min_K", "t_max_K"];
pub const POINTS_HEADER: [&str; 4] = ["id", "smiles", "temperature_K", "log10_vp_pa"];
pub const DATASET_HEADER: [&str; 4] = ["molecule_id", "temperature_K", "log10_vp_pa", "partition"];
pub const SEARCH_HEADER: [&str; 10] = [
    "features",
    "stage1_r2",
    "basis",
    "kernel",
    "stage2_r2",
    "holdout_r2",
    "holdout_rmse",
    "holdout_mae",
    "holdout_mape",
    "status",
];
pub const SCREEN_HEADER: [&str; 6] = ["smiles", "log10vp_387K", "std_387K", "log10vp_300K", "std_300K", "verdict"];
pub const EMBEDDING_HEADER: [&str; 4] = ["id", "x", "y", "cluster"];
pub const CLUSTERS_HEADER: [&str; 5] = ["cluster", "size", "median_log10vp", "std_log10vp", "medoid"];
pub const PREDICTION_HEADER: [&str; 4] = ["smiles", "temperature_K", "log10_vp_pa", "std"];
pub const SHAP_HEADER: [&str; 7] = ["smiles", "temperature_K", "member", "feature", "attribution", "base", "prediction"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn invalid(path: &Path, line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{}:{line}: {msg}", path.display()))
}

fn parse_f64(path: &Path, line: usize, field: &str, s: &str) -> Result<f64, CliError> {
    s.trim().parse::<f64>().map_err(|_| invalid(path, line, format!("{field}: not a number: {s:?}")))
}

fn parse_opt(path: &Path, line: usize, field: &str, s: &str) -> Result<Option<f64>, CliError> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(path, line, field, s).map(Some)
    }
}

/// A CSV file's header and rows, with the header checked against `expected`
/// as a prefix.
struct Table {
    header: Vec<String>,
    rows: Vec<(usize, csv::StringRecord)>,
}

fn read_table(path: &Path, expected: &[&str]) -> Result<Table, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| invalid(path, 1, e))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header.len() < expected.len() || header.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(invalid(path, 1, format!("expected header starting {}", expected.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| invalid(path, i + 2, e))?;
        rows.push((i + 2, rec));
    }
    Ok(Table { header, rows })
}

pub struct CsvOut {
    w: csv::Writer<Vec<u8>>,
}

impl CsvOut {
    pub fn new<S: AsRef<str>>(header: &[S]) -> CsvOut {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(header.iter().map(|s| s.as_ref())).expect("in-memory write");
        CsvOut { w }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        self.w.write_record(fields.iter().map(|s| s.as_ref())).expect("in-memory write");
    }

    pub fn save(self, path: &Path) -> Result<(), CliError> {
        let bytes = self.w.into_inner().expect("in-memory flush");
        write_bytes(path, &bytes)
    }
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

// Antoine records

pub fn write_records(path: &Path, records: &[AntoineRecord]) -> Result<(), CliError> {
    let mut out = CsvOut::new(&RECORDS_HEADER);
    for r in records {
        let p = &r.params;
        out.row(&[
            r.id.clone(),
            r.smiles.clone(),
            fmt_f64(p.a),
            fmt_f64(p.b),
            fmt_f64(p.c),
            fmt_f64(p.t_min),
            fmt_f64(p.t_max),
        ]);
    }
    out.save(path)
}

pub fn read_records(path: &Path) -> Result<Vec<AntoineRecord>, CliError> {
    let t = read_table(path, &RECORDS_HEADER)?;
    let mut ids = BTreeSet::new();
    t.rows
        .iter()
        .map(|(line, r)| {
            let num = |k: usize| parse_f64(path, *line, RECORDS_HEADER[k], &r[k]);
            let params = AntoineParams::new(num(2)?, num(3)?, num(4)?, num(5)?, num(6)?)
                .map_err(|e| invalid(path, *line, e))?;
            let id = r[0].trim().to_string();
            if !ids.insert(id.clone()) {
                return Err(invalid(path, *line, format!("duplicate id {id}")));
            }
            Ok(AntoineRecord { id, smiles: r[1].trim().to_string(), params })
        })
        .collect()
}

/// Raw measurements per molecule id: SMILES, (T, log10 Pa) points and the
/// indices of points marked for exclusion.
pub type PointSet = BTreeMap<String, (String, Vec<(f64, f64)>, BTreeSet<usize>)>;

/// Reads `id,smiles,temperature_K,log10_vp_pa[,exclude]`; `exclude` is 0/1.
pub fn read_points(path: &Path) -> Result<PointSet, CliError> {
    let t = read_table(path, &POINTS_HEADER)?;
    let has_exclude = t.header.get(4).is_some_and(|h| h == "exclude");
    let mut out: PointSet = BTreeMap::new();
    for (line, r) in &t.rows {
        let id = r[0].trim().to_string();
        let entry = out.entry(id).or_insert_with(|| (r[1].trim().to_string(), Vec::new(), BTreeSet::new()));
        if entry.0 != r[1].trim() {
            return Err(invalid(path, *line, "SMILES differs from earlier rows of this id"));
        }
        let temp = parse_f64(path, *line, "temperature_K", &r[2])?;
        let y = parse_f64(path, *line, "log10_vp_pa", &r[3])?;
        if has_exclude && matches!(r.get(4).map(str::trim), Some("1" | "true")) {
            entry.2.insert(entry.1.len());
        }
        entry.1.push((temp, y));
    }
    Ok(out)
}

// Datasets and features

pub fn write_dataset(path: &Path, data: &Dataset, labels: &[Partition]) -> Result<(), CliError> {
    let mut out = CsvOut::new(&DATASET_HEADER);
    for (inst, p) in data.instances.iter().zip(labels) {
        out.row(&[inst.molecule_id.clone(), fmt_f64(inst.temperature), fmt_f64(inst.y), p.to_string()]);
    }
    out.save(path)
}

pub fn read_dataset(path: &Path) -> Result<(Dataset, Vec<Partition>), CliError> {
    let t = read_table(path, &DATASET_HEADER)?;
    let mut data = Dataset::default();
    let mut labels = Vec::new();
    let mut seen: BTreeMap<String, Partition> = BTreeMap::new();
    for (line, r) in &t.rows {
        let id = r[0].trim().to_string();
        let p: Partition = r[3].trim().parse().map_err(|e| invalid(path, *line, e))?;
        if *seen.entry(id.clone()).or_insert(p) != p {
            return Err(invalid(path, *line, format!("molecule {id} appears in two partitions")));
        }
        data.instances.push(VpInstance {
            molecule_id: id,
            temperature: parse_f64(path, *line, "temperature_K", &r[1])?,
            y: parse_f64(path, *line, "log10_vp_pa", &r[2])?,
        });
        labels.push(p);
    }
    Ok((data, labels))
}

/// `molecule_id,temperature_K,<feature names>`, one row per dataset row.
pub fn write_features(path: &Path, keys: &[(String, f64)], x: &FeatureMatrix) -> Result<(), CliError> {
    let header: Vec<&str> = ["molecule_id", "temperature_K"].into_iter().chain(x.names.iter().map(String::as_str)).collect();
    let mut out = CsvOut::new(&header);
    for (i, (id, t)) in keys.iter().enumerate() {
        let mut row = vec![id.clone(), fmt_f64(*t)];
        row.extend(x.row(i).into_iter().map(fmt_f64));
        out.row(&row);
    }
    out.save(path)
}

pub fn read_features(path: &Path) -> Result<(Vec<(String, f64)>, FeatureMatrix), CliError> {
    let t = read_table(path, &["molecule_id", "temperature_K"])?;
    let names: Vec<String> = t.header[2..].to_vec();
    let mut keys = Vec::with_capacity(t.rows.len());
    let mut values = Vec::with_capacity(t.rows.len() * names.len());
    for (line, r) in &t.rows {
        if r.len() != names.len() + 2 {
            return Err(invalid(path, *line, format!("expected {} fields", names.len() + 2)));
        }
        keys.push((r[0].trim().to_string(), parse_f64(path, *line, "temperature_K", &r[1])?));
        for (k, name) in names.iter().enumerate() {
            values.push(parse_f64(path, *line, name, &r[k + 2])?);
        }
    }
    let data = DMatrix::from_row_slice(keys.len(), names.len(), &values);
    let x = FeatureMatrix::new(names, data).map_err(|e| invalid(path, 1, e))?;
    Ok((keys, x))
}

// Feature selection

/// `feature,fold0,...,selected`. Always-kept columns that skipped LASSO are
/// listed last with zero fold flags.
pub fn write_selection(path: &Path, report: &SelectionReport) -> Result<(), CliError> {
    let folds = report.fold_active.len();
    let mut header = vec!["feature".to_string()];
    header.extend((0..folds).map(|k| format!("fold{k}")));
    header.push("selected".into());
    let mut out = CsvOut::new(&header);
    let flag = |b: bool| if b { "1" } else { "0" }.to_string();
    for (name, flags, selected) in report.table() {
        let mut row = vec![name];
        row.extend(flags.into_iter().map(flag));
        row.push(flag(selected));
        out.row(&row);
    }
    for name in report.selected.iter().filter(|s| !report.candidates.contains(s)) {
        let mut row = vec![name.clone()];
        row.extend((0..folds).map(|_| "0".to_string()));
        row.push("1".into());
        out.row(&row);
    }
    out.save(path)
}

/// Selected feature names in file order.
pub fn read_selection(path: &Path) -> Result<Vec<String>, CliError> {
    let t = read_table(path, &["feature"])?;
    if t.header.last().map(String::as_str) != Some("selected") {
        return Err(invalid(path, 1, "last column must be 'selected'"));
    }
    let last = t.header.len() - 1;
    let mut out = Vec::new();
    for (line, r) in &t.rows {
        match r.get(last).map(str::trim) {
            Some("1") => out.push(r[0].trim().to_string()),
            Some("0") => {}
            other => return Err(invalid(path, *line, format!("selected flag {other:?}"))),
        }
    }
    Ok(out)
}

// Search report

pub fn write_search_report(path: &Path, records: &[SubsetRecord]) -> Result<(), CliError> {
    let mut out = CsvOut::new(&SEARCH_HEADER);
    for r in records {
        let h = r.holdout;
        out.row(&[
            r.key(),
            fmt_opt(r.stage1_r2),
            r.combo.map(|c| c.basis.to_string()).unwrap_or_default(),
            r.combo.map(|c| c.kernel.to_string()).unwrap_or_default(),
            fmt_opt(r.stage2_r2),
            fmt_opt(h.map(|m| m.r2)),
            fmt_opt(h.map(|m| m.rmse)),
            fmt_opt(h.map(|m| m.mae)),
            fmt_opt(h.map(|m| m.mape)),
            r.status.label().to_string(),
        ]);
    }
    out.save(path)
}

/// Reads a search report. Stage-2 RMSE and error text are not part of the
/// format and come back as `None`.
pub fn read_search_report(path: &Path) -> Result<Vec<SubsetRecord>, CliError> {
    let t = read_table(path, &SEARCH_HEADER)?;
    t.rows
        .iter()
        .map(|(line, r)| {
            let mut rec = SubsetRecord::new(r[0].split('+').map(str::to_string).collect());
            rec.stage1_r2 = parse_opt(path, *line, "stage1_r2", &r[1])?;
            rec.combo = match (r[2].trim(), r[3].trim()) {
                ("", "") => None,
                (b, k) => Some(Combo {
                    basis: b.parse::<BasisKind>().map_err(|e| invalid(path, *line, e))?,
                    kernel: k.parse::<KernelSpec>().map_err(|e| invalid(path, *line, e))?,
                }),
            };
            rec.stage2_r2 = parse_opt(path, *line, "stage2_r2", &r[4])?;
            let m: Vec<Option<f64>> =
                (5..9).map(|k| parse_opt(path, *line, SEARCH_HEADER[k], &r[k])).collect::<Result<_, _>>()?;
            rec.holdout = match (m[0], m[1], m[2], m[3]) {
                (Some(r2), Some(rmse), Some(mae), Some(mape)) => Some(HoldoutMetrics { r2, rmse, mae, mape }),
                (None, None, None, None) => None,
                _ => return Err(invalid(path, *line, "partial holdout metrics")),
            };
            rec.status = r[9].trim().parse::<Status>().map_err(|e| invalid(path, *line, e))?;
            Ok(rec)
        })
        .collect()
}

// Screening

pub fn write_screen(path: &Path, rows: &[ScreenRow]) -> Result<(), CliError> {
    let mut out = CsvOut::new(&SCREEN_HEADER);
    for r in rows {
        out.row(&[
            r.smiles.clone(),
            fmt_opt(r.stage1.map(|p| p.mean)),
            fmt_opt(r.stage1.map(|p| p.std)),
            fmt_opt(r.stage2.map(|p| p.mean)),
            fmt_opt(r.stage2.map(|p| p.std)),
            r.verdict.label().to_string(),
        ]);
    }
    out.save(path)
}

pub fn read_screen(path: &Path) -> Result<Vec<ScreenRow>, CliError> {
    let t = read_table(path, &SCREEN_HEADER)?;
    t.rows
        .iter()
        .map(|(line, r)| {
            let pred = |m: usize, s: usize| -> Result<Option<VpPrediction>, CliError> {
                match (parse_opt(path, *line, SCREEN_HEADER[m], &r[m])?, parse_opt(path, *line, SCREEN_HEADER[s], &r[s])?) {
                    (Some(mean), Some(std)) => Ok(Some(VpPrediction { mean, std })),
                    (None, None) => Ok(None),
                    _ => Err(invalid(path, *line, "prediction without its std")),
                }
            };
            Ok(ScreenRow {
                smiles: r[0].trim().to_string(),
                stage1: pred(1, 2)?,
                stage2: pred(3, 4)?,
                verdict: r[5].trim().parse::<Verdict>().map_err(|e| invalid(path, *line, e))?,
                error: None,
            })
        })
        .collect()
}

// Embedding and clusters

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedPoint {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub cluster: i32,
}

pub fn write_embedding(path: &Path, points: &[EmbeddedPoint]) -> Result<(), CliError> {
    let mut out = CsvOut::new(&EMBEDDING_HEADER);
    for p in points {
        out.row(&[p.id.clone(), fmt_f64(p.x), fmt_f64(p.y), p.cluster.to_string()]);
    }
    out.save(path)
}

pub fn read_embedding(path: &Path) -> Result<Vec<EmbeddedPoint>, CliError> {
    let t = read_table(path, &EMBEDDING_HEADER)?;
    t.rows
        .iter()
        .map(|(line, r)| {
            Ok(EmbeddedPoint {
                id: r[0].trim().to_string(),
                x: parse_f64(path, *line, "x", &r[1])?,
                y: parse_f64(path, *line, "y", &r[2])?,
                cluster: r[3].trim().parse().map_err(|_| invalid(path, *line, format!("cluster label {:?}", &r[3])))?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRow {
    pub cluster: i32,
    pub size: usize,
    pub median: f64,
    pub std: f64,
    /// Id of the representative member.
    pub medoid: String,
}

pub fn write_clusters(path: &Path, rows: &[ClusterRow]) -> Result<(), CliError> {
    let mut out = CsvOut::new(&CLUSTERS_HEADER);
    for c in rows {
        out.row(&[c.cluster.to_string(), c.size.to_string(), fmt_f64(c.median), fmt_f64(c.std), c.medoid.clone()]);
    }
    out.save(path)
}

pub fn read_clusters(path: &Path) -> Result<Vec<ClusterRow>, CliError> {
    let t = read_table(path, &CLUSTERS_HEADER)?;
    t.rows
        .iter()
        .map(|(line, r)| {
            let int = |k: usize| r[k].trim().parse::<i64>().map_err(|_| invalid(path, *line, format!("{}: {:?}", CLUSTERS_HEADER[k], &r[k])));
            Ok(ClusterRow {
                cluster: int(0)? as i32,
                size: int(1)? as usize,
                median: parse_f64(path, *line, "median_log10vp", &r[2])?,
                std: parse_f64(path, *line, "std_log10vp", &r[3])?,
                medoid: r[4].trim().to_string(),
            })
        })
        .collect()
}

// SMILES lists

/// One SMILES per line; blank lines and `#` comments are skipped, and only
/// the first whitespace- or comma-separated token of a line is used.
pub fn read_smiles_list(path: &Path) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split(|c: char| c.is_whitespace() || c == ',').next())
        .filter(|s| *s != "smiles")
        .map(str::to_string)
        .collect())
}

pub fn write_smiles_list(path: &Path, smiles: &[String]) -> Result<(), CliError> {
    let mut text = String::new();
    for s in smiles {
        text.push_str(s);
        text.push('\n');
    }
    write_bytes(path, text.as_bytes())
}
