use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::{Dataset, Utterance};
use crate::{Error, Result};

const META_COLUMNS: [&str; 5] = ["id", "dataset", "speaker", "gender", "emotion"];

/// Reads a feature CSV (`id,dataset,speaker,gender,emotion,f1,...,fN`).
///
/// The feature dimension is taken from the header. Row order is preserved and
/// no normalization is applied.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, path)
}

/// Same as [`load_csv`] for any reader; `origin` names the source in errors.
pub fn read_csv<R: Read>(reader: R, origin: &Path) -> Result<Dataset> {
    let perr = |row: usize, column: &str, message: String| Error::Parse {
        path: origin.to_path_buf(),
        row,
        column: column.to_string(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| perr(0, "header", e.to_string()))?
        .clone();
    for (i, name) in META_COLUMNS.iter().enumerate() {
        if header.get(i).map(str::trim) != Some(*name) {
            return Err(perr(0, name, format!("header column {} must be {name:?}", i + 1)));
        }
    }
    let feature_dim = header.len().saturating_sub(META_COLUMNS.len());
    if feature_dim == 0 {
        return Err(perr(0, "header", "no feature columns".into()));
    }
    let feature_names: Vec<String> = header.iter().skip(META_COLUMNS.len()).map(str::to_string).collect();

    let mut utterances = Vec::new();
    let mut ids = HashSet::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| perr(row, "record", e.to_string()))?;
        if record.len() != header.len() {
            return Err(perr(
                row,
                "record",
                format!(
                    "expected {} columns ({feature_dim} features), found {}",
                    header.len(),
                    record.len()
                ),
            ));
        }
        let id = record[0].to_string();
        if !ids.insert(id.clone()) {
            return Err(perr(row, "id", format!("duplicate id {id:?}")));
        }
        let speaker_id = record[2].to_string();
        if speaker_id.is_empty() {
            return Err(perr(row, "speaker", "empty speaker id".into()));
        }
        let gender = record[3].parse().map_err(|m| perr(row, "gender", m))?;
        let emotion = record[4].parse().map_err(|m| perr(row, "emotion", m))?;
        let features = record
            .iter()
            .skip(META_COLUMNS.len())
            .zip(&feature_names)
            .map(|(field, name)| {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| perr(row, name, format!("not a number: {field:?}")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(perr(row, name, format!("non-finite value {field:?}")))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        utterances.push(Utterance {
            id,
            dataset_id: record[1].to_string(),
            speaker_id,
            gender,
            emotion,
            features,
        });
    }
    Dataset::new(utterances, feature_dim)
}

/// Writes a dataset in the feature CSV schema. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io {
        path: PathBuf::from("<csv>"),
        source: std::io::Error::other(e),
    };
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = META_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((1..=ds.feature_dim()).map(|i| format!("f{i}")));
    w.write_record(&header).map_err(io)?;
    let mut fields = Vec::with_capacity(header.len());
    for u in ds.utterances() {
        fields.clear();
        fields.push(u.id.clone());
        fields.push(u.dataset_id.clone());
        fields.push(u.speaker_id.clone());
        fields.push(u.gender.code().to_string());
        fields.push(u.emotion.name().to_string());
        fields.extend(u.features.iter().map(|v| v.to_string()));
        w.write_record(&fields).map_err(io)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: PathBuf::from("<csv>"),
        source,
    })
}

pub fn write_csv_file(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(ds, std::io::BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}
