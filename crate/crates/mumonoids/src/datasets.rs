//! Dataset files.
//!
//! Graph inputs (`Bag<(Int, Int)>` and `Bag<((Int, Int), Int)>`) are
//! tab-separated `src dst [weight]` lines with integer node ids. Any other
//! bag is stored one element per line in the value syntax, for example
//! `Flight(3, 5, 0, 7, 2)` or `User(4, {1, 9})`; the field order is that of
//! the constructor in the program's input declaration. A repeated line is a
//! repeated element. Blank lines and lines starting with `#` are skipped.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use mumonoids_core::{parse_value, Bag, TypeExpr, Value};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: {value} is not a {ty}")]
    Type { line: u64, value: String, ty: TypeExpr },
    #[error("inputs must be bags, found {0}")]
    NotABag(TypeExpr),
}

impl DatasetError {
    fn at(self, path: &Path) -> DatasetError {
        match self {
            DatasetError::Io { source, .. } => DatasetError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Edges,
    WeightedEdges,
    Values,
}

impl Format {
    pub fn for_elem(elem: &TypeExpr) -> Format {
        let int = TypeExpr::int();
        let edge = TypeExpr::pair(int.clone(), int.clone());
        if *elem == edge {
            Format::Edges
        } else if *elem == TypeExpr::pair(edge, int) {
            Format::WeightedEdges
        } else {
            Format::Values
        }
    }
}

fn io_err(source: io::Error) -> DatasetError {
    DatasetError::Io {
        path: PathBuf::new(),
        source,
    }
}

fn int_field(field: Option<&str>, line: u64) -> Result<i64, DatasetError> {
    let f = field.ok_or_else(|| DatasetError::Parse {
        line,
        message: "missing field".into(),
    })?;
    f.trim().parse().map_err(|e| DatasetError::Parse {
        line,
        message: format!("`{f}`: {e}"),
    })
}

fn read_edges(r: impl Read, weighted: bool) -> Result<Bag, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(r);
    let mut out = Bag::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| DatasetError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let expected = if weighted { 3 } else { 2 };
        if rec.len() != expected {
            return Err(DatasetError::Parse {
                line,
                message: format!("expected {expected} tab-separated fields, found {}", rec.len()),
            });
        }
        let edge = Value::pair(
            Value::Int(int_field(rec.get(0), line)?),
            Value::Int(int_field(rec.get(1), line)?),
        );
        out.insert(if weighted {
            Value::pair(edge, Value::Int(int_field(rec.get(2), line)?))
        } else {
            edge
        });
    }
    Ok(out)
}

fn read_values(mut r: impl Read, elem: &TypeExpr) -> Result<Bag, DatasetError> {
    let mut text = String::new();
    r.read_to_string(&mut text).map_err(io_err)?;
    let mut out = Bag::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i as u64 + 1;
        let src = raw.trim();
        if src.is_empty() || src.starts_with('#') {
            continue;
        }
        let v = parse_value(src).map_err(|e| DatasetError::Parse {
            line,
            message: e.to_string(),
        })?;
        if !elem.admits(&v) {
            return Err(DatasetError::Type {
                line,
                value: v.to_string(),
                ty: elem.clone(),
            });
        }
        out.insert(v);
    }
    Ok(out)
}

/// Reads a bag of type `bag_type` from `r`.
pub fn read_bag(r: impl Read, bag_type: &TypeExpr) -> Result<Bag, DatasetError> {
    let elem = bag_type
        .bag_elem()
        .ok_or_else(|| DatasetError::NotABag(bag_type.clone()))?;
    match Format::for_elem(elem) {
        Format::Edges => read_edges(r, false),
        Format::WeightedEdges => read_edges(r, true),
        Format::Values => read_values(r, elem),
    }
}

pub fn write_bag(mut w: impl Write, bag: &Bag, bag_type: &TypeExpr) -> Result<(), DatasetError> {
    let elem = bag_type
        .bag_elem()
        .ok_or_else(|| DatasetError::NotABag(bag_type.clone()))?;
    let format = Format::for_elem(elem);
    if format == Format::Values {
        for v in bag.instances() {
            writeln!(w, "{v}").map_err(io_err)?;
        }
        return Ok(());
    }
    let mut writer = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .from_writer(w);
    for v in bag.instances() {
        let (edge, weight) = match format {
            Format::WeightedEdges => v.as_pair().map(|(e, w)| (e, Some(w))),
            _ => Some((v, None)),
        }
        .ok_or_else(|| DatasetError::Type {
            line: 0,
            value: v.to_string(),
            ty: elem.clone(),
        })?;
        let mut fields: Vec<String> = match edge.as_pair() {
            Some((a, b)) => vec![a.to_string(), b.to_string()],
            None => {
                return Err(DatasetError::Type {
                    line: 0,
                    value: v.to_string(),
                    ty: elem.clone(),
                })
            }
        };
        fields.extend(weight.map(Value::to_string));
        writer.write_record(&fields).map_err(|e| io_err(e.into()))?;
    }
    writer.flush().map_err(io_err)
}

pub fn load(path: &Path, bag_type: &TypeExpr) -> Result<Bag, DatasetError> {
    let file = fs::File::open(path).map_err(|e| io_err(e).at(path))?;
    read_bag(io::BufReader::new(file), bag_type).map_err(|e| e.at(path))
}

pub fn save(path: &Path, bag: &Bag, bag_type: &TypeExpr) -> Result<(), DatasetError> {
    let file = fs::File::create(path).map_err(|e| io_err(e).at(path))?;
    write_bag(io::BufWriter::new(file), bag, bag_type).map_err(|e| e.at(path))
}
