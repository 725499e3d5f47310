//! Data ingestion and persistence.
//!
//! Two interchangeable data formats are supported:
//!
//! - **`csv-dir`**: a directory containing `manifest.json` and one numeric
//!   CSV file per set. Each manifest entry carries `set_id`, `file`, an
//!   optional `label` and an `orientation` declaring whether observations
//!   are the CSV's columns (`"columns"`, a `p × n_i` file) or its rows
//!   (`"rows"`, transposed on load). Labels are 1-based integers; string
//!   labels are allowed when the manifest's top-level `label_map` object
//!   maps them to integers.
//! - **`json`**: one document `{"p": …, "sets": [{"set_id", "label"?,
//!   "observations": [[…], …]}]}` where each inner array is a single
//!   observation vector of length `p` (column layout).
//!
//! Saving uses shortest round-trip float formatting, so `load(save(x))`
//! reproduces `x` bit for bit. Trained models persist as a single JSON
//! document carrying the embedding, the fitted rule, the feature layout,
//! the training subspace bases and the frozen scale constant.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use setclass_core::nalgebra::DMatrix;
use setclass_core::pipeline::TrainedSetClassifier;
use setclass_core::set::{ClassLabel, ObservationSet, SetCollection};

use crate::{Error, Result};

/// On-disk data format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    /// Directory of per-set CSV files described by `manifest.json`.
    CsvDir,
    /// Single JSON document.
    Json,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    label_map: BTreeMap<String, u32>,
    sets: Vec<ManifestEntry>,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    set_id: String,
    file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<LabelField>,
    orientation: Orientation,
}

/// Integer label, or a name resolved through the manifest's `label_map`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LabelField {
    Number(u32),
    Name(String),
}

#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Orientation {
    /// Observations are the CSV columns: the file is `p × n_i`.
    Columns,
    /// Observations are the CSV rows: the file is `n_i × p`.
    Rows,
}

/// Loads a collection from `path` under the declared format.
pub fn load_collection(path: &Path, format: DataFormat) -> Result<SetCollection> {
    match format {
        DataFormat::CsvDir => load_csv_dir(path),
        DataFormat::Json => load_json(path),
    }
}

/// Saves a collection to `path` under the declared format
/// (a directory for `csv-dir`, a file for `json`).
pub fn save_collection(
    collection: &SetCollection,
    path: &Path,
    format: DataFormat,
) -> Result<()> {
    match format {
        DataFormat::CsvDir => save_csv_dir(collection, path),
        DataFormat::Json => save_json(collection, path),
    }
}

fn resolve_label(
    entry: &ManifestEntry,
    label_map: &BTreeMap<String, u32>,
    manifest_path: &Path,
) -> Result<Option<ClassLabel>> {
    let value = match &entry.label {
        None => return Ok(None),
        Some(LabelField::Number(n)) => *n,
        Some(LabelField::Name(name)) => *label_map.get(name).ok_or_else(|| {
            Error::parse(
                manifest_path,
                format!(
                    "set `{}`: label `{name}` is not in the manifest's label_map",
                    entry.set_id
                ),
            )
        })?,
    };
    ClassLabel::new(value).map(Some).map_err(Error::from)
}

fn load_csv_dir(dir: &Path) -> Result<SetCollection> {
    let manifest_path = dir.join("manifest.json");
    let reader = fs::File::open(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_reader(BufReader::new(reader))
        .map_err(|e| Error::parse(&manifest_path, e.to_string()))?;

    let mut sets = Vec::with_capacity(manifest.sets.len());
    for entry in &manifest.sets {
        let file = dir.join(&entry.file);
        let matrix = read_csv_matrix(&file, &entry.set_id, entry.orientation)?;
        let label = resolve_label(entry, &manifest.label_map, &manifest_path)?;
        sets.push(ObservationSet::new(entry.set_id.clone(), matrix, label)?);
    }
    Ok(SetCollection::new(sets)?)
}

fn read_csv_matrix(path: &Path, set_id: &str, orientation: Orientation) -> Result<DMatrix<f64>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            Error::parse(path, format!("set `{set_id}`, row {i}: {e}"))
        })?;
        let mut row = Vec::with_capacity(record.len());
        for (j, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| {
                Error::parse(
                    path,
                    format!("set `{set_id}`, row {i}, column {j}: `{cell}` is not a number"),
                )
            })?;
            if !value.is_finite() {
                return Err(Error::parse(
                    path,
                    format!("set `{set_id}`, row {i}, column {j}: non-finite value {value}"),
                ));
            }
            row.push(value);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::parse(
                    path,
                    format!(
                        "set `{set_id}`, row {i}: {} cells, expected {}",
                        row.len(),
                        first.len()
                    ),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::parse(path, format!("set `{set_id}`: file is empty")));
    }

    let (nrows, ncols) = (rows.len(), rows[0].len());
    let as_read = DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]);
    Ok(match orientation {
        Orientation::Columns => as_read,
        Orientation::Rows => as_read.transpose(),
    })
}

fn save_csv_dir(collection: &SetCollection, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(collection.n_sets());
    for set in collection.sets() {
        if set.set_id().contains(['/', '\\']) || set.set_id().is_empty() {
            return Err(Error::parse(
                dir,
                format!("set id `{}` is not usable as a file name", set.set_id()),
            ));
        }
        let file = format!("{}.csv", set.set_id());
        let path = dir.join(&file);
        write_csv_matrix(&path, set.observations())?;
        entries.push(ManifestEntry {
            set_id: set.set_id().to_owned(),
            file,
            label: set.label().map(|l| LabelField::Number(l.get())),
            orientation: Orientation::Columns,
        });
    }
    let manifest = Manifest {
        label_map: BTreeMap::new(),
        sets: entries,
    };
    let manifest_path = dir.join("manifest.json");
    let writer = fs::File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut writer = BufWriter::new(writer);
    serde_json::to_writer_pretty(&mut writer, &manifest)
        .map_err(|e| Error::parse(&manifest_path, e.to_string()))?;
    writer.write_all(b"\n").map_err(|e| Error::io(&manifest_path, e))?;
    Ok(())
}

fn write_csv_matrix(path: &Path, matrix: &DMatrix<f64>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    for i in 0..matrix.nrows() {
        let row: Vec<String> = (0..matrix.ncols())
            .map(|j| format_float(matrix[(i, j)]))
            .collect();
        writer
            .write_record(&row)
            .map_err(|e| Error::parse(path, e.to_string()))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Shortest representation that parses back to the identical bit pattern.
fn format_float(value: f64) -> String {
    format!("{value}")
}

#[derive(Serialize, Deserialize)]
struct JsonDocument {
    p: usize,
    sets: Vec<JsonSet>,
}

#[derive(Serialize, Deserialize)]
struct JsonSet {
    set_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<u32>,
    /// One inner array per observation, each of length `p`.
    observations: Vec<Vec<f64>>,
}

fn load_json(path: &Path) -> Result<SetCollection> {
    let reader = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let doc: JsonDocument = serde_json::from_reader(BufReader::new(reader))
        .map_err(|e| Error::parse(path, e.to_string()))?;

    let mut sets = Vec::with_capacity(doc.sets.len());
    for js in &doc.sets {
        for (j, obs) in js.observations.iter().enumerate() {
            if obs.len() != doc.p {
                return Err(Error::parse(
                    path,
                    format!(
                        "set `{}`, observation {j}: length {} does not match p = {}",
                        js.set_id,
                        obs.len(),
                        doc.p
                    ),
                ));
            }
        }
        if js.observations.is_empty() {
            return Err(Error::parse(
                path,
                format!("set `{}` contains no observations", js.set_id),
            ));
        }
        let matrix = DMatrix::from_fn(doc.p, js.observations.len(), |i, j| js.observations[j][i]);
        let label = js.label.map(ClassLabel::new).transpose()?;
        sets.push(ObservationSet::new(js.set_id.clone(), matrix, label)?);
    }
    Ok(SetCollection::new(sets)?)
}

fn save_json(collection: &SetCollection, path: &Path) -> Result<()> {
    let doc = JsonDocument {
        p: collection.dim(),
        sets: collection
            .sets()
            .iter()
            .map(|set| JsonSet {
                set_id: set.set_id().to_owned(),
                label: set.label().map(ClassLabel::get),
                observations: (0..set.n_observations())
                    .map(|j| set.observations().column(j).iter().copied().collect())
                    .collect(),
            })
            .collect(),
    };
    let writer = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(writer);
    serde_json::to_writer_pretty(&mut writer, &doc).map_err(|e| Error::parse(path, e.to_string()))?;
    writer.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Persists a trained model as a single JSON document.
pub fn save_model(model: &TrainedSetClassifier, path: &Path) -> Result<()> {
    let writer = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(writer);
    serde_json::to_writer_pretty(&mut writer, model)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    writer.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Loads a previously saved model.
pub fn load_model(path: &Path) -> Result<TrainedSetClassifier> {
    let reader = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(reader)).map_err(|e| Error::parse(path, e.to_string()))
}

/// Reads back every file under a directory in sorted order; used by callers
/// comparing artifacts byte for byte.
pub fn directory_fingerprint(dir: &Path) -> Result<Vec<(PathBuf, Vec<u8>)>> {
    let mut files = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_file() {
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            files.push((path, bytes));
        }
    }
    files.sort();
    Ok(files)
}
