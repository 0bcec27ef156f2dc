use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::eval::{Evaluator, Naive};
use crate::kernel::{SetV, Type, Value};
use crate::lang::{typecheck_expr_as, Declarations, Diagnostics};

use super::schema::{CarrierMode, ConstantDecl, Schema, Shape, Source};
use super::universe::{Constant, Universe, UniverseError};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("data file `{file}`: {message}")]
    File { file: String, message: String },
    #[error("data file `{file}` is given more than once ({first} and {second})")]
    AmbiguousFile {
        file: String,
        first: PathBuf,
        second: PathBuf,
    },
    #[error("{file}: no column `{column}` (header has: {available})")]
    MissingColumn {
        file: String,
        column: String,
        available: String,
    },
    #[error("{file}: path `{path}` {message}")]
    BadPath {
        file: String,
        path: String,
        message: String,
    },
    #[error("{location}: `{text}` is not a valid {expected} for constant `{constant}`")]
    BadValue {
        constant: String,
        location: String,
        text: String,
        expected: String,
    },
    #[error("constant `{constant}`: {element} is not an element of carrier `{carrier}`")]
    UnknownAtom {
        constant: String,
        carrier: String,
        element: String,
    },
    #[error("constant `{constant}` is declared as a function but maps {left} to both {first} and {second}")]
    NotFunctional {
        constant: String,
        left: String,
        first: String,
        second: String,
    },
    #[error("constant `{constant}`: {message}")]
    Shape { constant: String, message: String },
    #[error("constant `{constant}`: {diagnostics}")]
    Literal {
        constant: String,
        diagnostics: Diagnostics,
    },
    #[error(transparent)]
    Universe(#[from] UniverseError),
}

/// Every problem found while loading, in a stable order.
#[derive(Debug, Error)]
pub struct LoadErrors(pub Vec<LoadError>);

impl fmt::Display for LoadErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl From<UniverseError> for LoadErrors {
    fn from(e: UniverseError) -> Self {
        LoadErrors(vec![LoadError::Universe(e)])
    }
}

impl From<LoadError> for LoadErrors {
    fn from(e: LoadError) -> Self {
        LoadErrors(vec![e])
    }
}

/// Where the data files named in a schema come from.
#[derive(Debug, Clone)]
pub enum DataFiles {
    /// Files looked up first among explicitly listed paths (by file name),
    /// then relative to `base`.
    Disk {
        base: PathBuf,
        listed: BTreeMap<String, PathBuf>,
    },
    /// In-memory contents keyed by the name used in the schema.
    Memory(BTreeMap<String, String>),
}

impl DataFiles {
    pub fn from_dir(base: impl Into<PathBuf>) -> Self {
        DataFiles::Disk {
            base: base.into(),
            listed: BTreeMap::new(),
        }
    }

    /// Listed paths are matched against schema file names by their final
    /// component; two listed paths with the same name are a conflict.
    pub fn from_paths(base: impl Into<PathBuf>, paths: &[PathBuf]) -> Result<Self, LoadError> {
        let mut listed: BTreeMap<String, PathBuf> = BTreeMap::new();
        for p in paths {
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string());
            if let Some(prev) = listed.get(&name) {
                if prev != p {
                    return Err(LoadError::AmbiguousFile {
                        file: name,
                        first: prev.clone(),
                        second: p.clone(),
                    });
                }
            }
            listed.insert(name, p.clone());
        }
        Ok(DataFiles::Disk {
            base: base.into(),
            listed,
        })
    }

    pub fn resolve(&self, file: &str) -> Option<PathBuf> {
        match self {
            DataFiles::Disk { base, listed } => {
                let key = Path::new(file)
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                Some(listed.get(file).or_else(|| listed.get(&key)).cloned().unwrap_or_else(|| base.join(file)))
            }
            DataFiles::Memory(_) => None,
        }
    }

    fn read(&self, file: &str) -> Result<String, LoadError> {
        match self {
            DataFiles::Disk { .. } => {
                let path = self.resolve(file).expect("disk resolver");
                std::fs::read_to_string(&path).map_err(|e| LoadError::File {
                    file: file.to_string(),
                    message: format!("cannot read {}: {e}", path.display()),
                })
            }
            DataFiles::Memory(m) => m.get(file).cloned().ok_or_else(|| LoadError::File {
                file: file.to_string(),
                message: "no such file".into(),
            }),
        }
    }
}

enum Parsed {
    Csv { header: Vec<String>, rows: Vec<(u64, Vec<String>)> },
    Json(serde_json::Value),
}

/// A scalar as found in a data file, with its location for diagnostics.
struct Cell {
    location: String,
    raw: Raw,
}

enum Raw {
    Text(String),
    Json(serde_json::Value),
}

impl Raw {
    fn text(&self) -> String {
        match self {
            Raw::Text(s) => s.clone(),
            Raw::Json(serde_json::Value::String(s)) => s.clone(),
            Raw::Json(v) => v.to_string(),
        }
    }
}

fn parse_file(file: &str, text: &str) -> Result<Parsed, LoadError> {
    let bad = |message: String| LoadError::File {
        file: file.to_string(),
        message,
    };
    if file.to_ascii_lowercase().ends_with(".json") {
        return serde_json::from_str(text)
            .map(Parsed::Json)
            .map_err(|e| bad(format!("invalid JSON: {e}")));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| bad(format!("invalid CSV header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| bad(format!("invalid CSV: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(Parsed::Csv { header, rows })
}

/// Each tuple has one cell per bound column or path.
fn extract(file: &str, parsed: &Parsed, source: &Source) -> Result<Vec<Vec<Cell>>, LoadError> {
    match (parsed, source) {
        (Parsed::Csv { header, rows }, Source::Csv { columns, .. }) => {
            let mut idx = Vec::new();
            for c in columns {
                match header.iter().position(|h| h == c) {
                    Some(i) => idx.push(i),
                    None => {
                        return Err(LoadError::MissingColumn {
                            file: file.to_string(),
                            column: c.clone(),
                            available: header.join(", "),
                        })
                    }
                }
            }
            Ok(rows
                .iter()
                .map(|(line, row)| {
                    idx.iter()
                        .zip(columns)
                        .map(|(&i, col)| Cell {
                            location: format!("{file}:{line} column `{col}`"),
                            raw: Raw::Text(row.get(i).cloned().unwrap_or_default()),
                        })
                        .collect()
                })
                .collect())
        }
        (Parsed::Json(doc), Source::Json { paths, .. }) => {
            let mut columns = Vec::new();
            for path in paths {
                columns.push(json_path(file, doc, path)?);
            }
            if paths.len() == 2 {
                let prefix = |p: &str| p.rfind("[]").map(|i| p[..i].to_string());
                if prefix(&paths[0]) != prefix(&paths[1]) || columns[0].len() != columns[1].len() {
                    return Err(LoadError::BadPath {
                        file: file.to_string(),
                        path: paths[1].clone(),
                        message: format!("does not iterate the same array as `{}`", paths[0]),
                    });
                }
            }
            let n = columns.first().map_or(0, Vec::len);
            let mut out: Vec<Vec<Cell>> = (0..n).map(|_| Vec::new()).collect();
            for col in columns {
                for (i, cell) in col.into_iter().enumerate() {
                    out[i].push(cell);
                }
            }
            Ok(out)
        }
        (Parsed::Csv { .. }, Source::Json { .. }) => Err(LoadError::File {
            file: file.to_string(),
            message: "PATHS needs a .json file".into(),
        }),
        (Parsed::Json(_), _) => Err(LoadError::File {
            file: file.to_string(),
            message: "COLS needs a .csv file".into(),
        }),
        (_, Source::Literal(_)) => unreachable!("literal sources have no file"),
    }
}

/// Evaluates a dotted path where `name[]` steps into each array element.
fn json_path(file: &str, doc: &serde_json::Value, path: &str) -> Result<Vec<Cell>, LoadError> {
    let bad = |message: String| LoadError::BadPath {
        file: file.to_string(),
        path: path.to_string(),
        message,
    };
    let mut current: Vec<(String, &serde_json::Value)> = vec![(String::new(), doc)];
    for seg in path.split('.') {
        let (name, each) = match seg.strip_suffix("[]") {
            Some(n) => (n, true),
            None => (seg, false),
        };
        if name.is_empty() && !each {
            return Err(bad("has an empty segment".into()));
        }
        let mut next = Vec::new();
        for (loc, v) in current {
            let (loc, v) = if name.is_empty() {
                (loc, v)
            } else {
                let child = v
                    .get(name)
                    .ok_or_else(|| bad(format!("finds no key `{name}` at `{}`", display_loc(&loc))))?;
                (format!("{loc}.{name}"), child)
            };
            if each {
                let items = v
                    .as_array()
                    .ok_or_else(|| bad(format!("expects an array at `{}`", display_loc(&loc))))?;
                next.extend(items.iter().enumerate().map(|(i, item)| (format!("{loc}[{i}]"), item)));
            } else {
                next.push((loc, v));
            }
        }
        current = next;
    }
    Ok(current
        .into_iter()
        .map(|(loc, v)| Cell {
            location: format!("{file}:{}", display_loc(&loc)),
            raw: Raw::Json(v.clone()),
        })
        .collect())
}

fn display_loc(loc: &str) -> &str {
    let l = loc.strip_prefix('.').unwrap_or(loc);
    if l.is_empty() {
        "$"
    } else {
        l
    }
}

fn is_int_text(s: &str) -> bool {
    let digits = s.strip_prefix('-').unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

struct Interner<'s> {
    explicit: BTreeMap<&'s str, BTreeSet<&'s str>>,
    observed: BTreeMap<String, BTreeSet<String>>,
}

impl Interner<'_> {
    fn scalar(&mut self, constant: &str, cell: &Cell, ty: &Type) -> Result<Value, LoadError> {
        let bad = || LoadError::BadValue {
            constant: constant.to_string(),
            location: cell.location.clone(),
            text: cell.raw.text(),
            expected: match ty {
                Type::Given(c) => format!("element of `{c}`"),
                t => t.to_string(),
            },
        };
        match ty {
            Type::Integer => {
                let text = match &cell.raw {
                    Raw::Text(s) => s.clone(),
                    Raw::Json(v @ serde_json::Value::Number(_)) => v.to_string(),
                    Raw::Json(_) => return Err(bad()),
                };
                if !is_int_text(&text) {
                    return Err(bad());
                }
                text.parse::<i64>().map(Value::Int).map_err(|_| bad())
            }
            Type::Bool => match &cell.raw {
                Raw::Text(s) if s == "TRUE" => Ok(Value::Bool(true)),
                Raw::Text(s) if s == "FALSE" => Ok(Value::Bool(false)),
                Raw::Json(serde_json::Value::Bool(b)) => Ok(Value::Bool(*b)),
                _ => Err(bad()),
            },
            Type::Given(carrier) => {
                let name = match &cell.raw {
                    Raw::Text(s) => s.clone(),
                    Raw::Json(serde_json::Value::String(s)) => s.clone(),
                    Raw::Json(v @ serde_json::Value::Number(n)) if n.is_i64() || n.is_u64() => v.to_string(),
                    Raw::Json(_) => return Err(bad()),
                };
                if name.is_empty() {
                    return Err(bad());
                }
                match self.explicit.get(carrier.as_str()) {
                    Some(elems) if !elems.contains(name.as_str()) => Err(LoadError::UnknownAtom {
                        constant: constant.to_string(),
                        carrier: carrier.clone(),
                        element: name,
                    }),
                    _ => {
                        self.observed.entry(carrier.clone()).or_default().insert(name.clone());
                        Ok(Value::atom(carrier, &name))
                    }
                }
            }
            _ => Err(LoadError::Shape {
                constant: constant.to_string(),
                message: format!("{ty} cannot be read from a single cell"),
            }),
        }
    }

    fn constant(&mut self, decl: &ConstantDecl, tuples: Vec<Vec<Cell>>) -> Result<Value, Vec<LoadError>> {
        let mut errors = Vec::new();
        let value = match decl.shape() {
            Shape::Scalar => {
                if tuples.len() != 1 {
                    return Err(vec![LoadError::Shape {
                        constant: decl.name.clone(),
                        message: format!("a scalar needs exactly one value, found {}", tuples.len()),
                    }]);
                }
                return self.scalar(&decl.name, &tuples[0][0], &decl.ty).map_err(|e| vec![e]);
            }
            Shape::Set => {
                let elem = decl.ty.element().expect("set type");
                let mut items = Vec::with_capacity(tuples.len());
                for t in &tuples {
                    match self.scalar(&decl.name, &t[0], elem) {
                        Ok(v) => items.push(v),
                        Err(e) => errors.push(e),
                    }
                }
                SetV::from_unsorted(items)
            }
            Shape::Relation => {
                let (a, b) = decl.ty.element().and_then(Type::components).expect("relation type");
                let mut items = Vec::with_capacity(tuples.len());
                for t in &tuples {
                    match (self.scalar(&decl.name, &t[0], a), self.scalar(&decl.name, &t[1], b)) {
                        (Ok(l), Ok(r)) => items.push(Value::pair(l, r)),
                        (l, r) => errors.extend(l.err().into_iter().chain(r.err())),
                    }
                }
                let set = SetV::from_unsorted(items);
                if decl.arrow.is_some() {
                    if let Some(e) = functionality(&decl.name, &set) {
                        errors.push(e);
                    }
                }
                set
            }
        };
        errors.truncate(20);
        if errors.is_empty() {
            Ok(Value::Set(value))
        } else {
            Err(errors)
        }
    }
}

fn functionality(constant: &str, rel: &SetV) -> Option<LoadError> {
    rel.as_slice().windows(2).find_map(|w| {
        let (l1, r1) = w[0].as_pair()?;
        let (l2, r2) = w[1].as_pair()?;
        (l1 == l2).then(|| LoadError::NotFunctional {
            constant: constant.to_string(),
            left: l1.to_string(),
            first: r1.to_string(),
            second: r2.to_string(),
        })
    })
}

/// Loads every constant of `schema` and assembles the universe.
///
/// Files are read and parsed in parallel; assembly is sequential and
/// deterministic. All problems are collected before failing.
pub fn load_dataset(schema: &Schema, files: &DataFiles) -> Result<Universe, LoadErrors> {
    let names = schema.files();
    let parsed: Vec<Result<Parsed, LoadError>> = names
        .par_iter()
        .map(|f| files.read(f).and_then(|text| parse_file(f, &text)))
        .collect();
    let mut by_file = BTreeMap::new();
    let mut errors = Vec::new();
    for (name, p) in names.iter().zip(parsed) {
        match p {
            Ok(p) => {
                by_file.insert(*name, p);
            }
            Err(e) => errors.push(e),
        }
    }
    let mut interner = Interner {
        explicit: schema
            .carriers
            .iter()
            .filter_map(|c| match &c.mode {
                CarrierMode::Explicit(e) => Some((c.name.as_str(), e.iter().map(String::as_str).collect())),
                _ => None,
            })
            .collect(),
        observed: BTreeMap::new(),
    };
    let mut constants = BTreeMap::new();
    for decl in &schema.constants {
        let Some(file) = decl.source.file() else { continue };
        let Some(parsed) = by_file.get(file) else { continue };
        let tuples = match extract(file, parsed, &decl.source) {
            Ok(t) => t,
            Err(e) => {
                errors.push(e);
                continue;
            }
        };
        match interner.constant(decl, tuples) {
            Ok(value) => {
                constants.insert(
                    decl.name.clone(),
                    Constant {
                        ty: decl.ty.clone(),
                        value,
                    },
                );
            }
            Err(es) => errors.extend(es),
        }
    }
    if !errors.is_empty() {
        return Err(LoadErrors(errors));
    }

    let mut carriers: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for c in &schema.carriers {
        let elems = match &c.mode {
            CarrierMode::Explicit(e) => e.iter().cloned().collect(),
            CarrierMode::Collect => interner.observed.remove(&c.name).unwrap_or_default(),
        };
        carriers.insert(c.name.clone(), elems);
    }

    let literals: Vec<&ConstantDecl> = schema
        .constants
        .iter()
        .filter(|c| matches!(c.source, Source::Literal(_)))
        .collect();
    if !literals.is_empty() {
        let scope = Universe::new(carriers.clone(), BTreeMap::new())?;
        let decls = Declarations::new(
            carriers
                .iter()
                .map(|(k, v)| (k.clone(), Some(v.iter().cloned().collect())))
                .collect(),
            BTreeMap::new(),
        );
        for decl in literals {
            let Source::Literal(expr) = &decl.source else { unreachable!() };
            let mut expr = expr.clone();
            if let Err(diagnostics) = typecheck_expr_as(&mut expr, &decls, &decl.ty) {
                errors.push(LoadError::Literal {
                    constant: decl.name.clone(),
                    diagnostics,
                });
                continue;
            }
            match Naive::new(&scope).eval_expr(&expr, &mut Default::default()) {
                Ok(value) => {
                    if decl.arrow.is_some() {
                        if let Some(e) = value.as_set().and_then(|s| functionality(&decl.name, s)) {
                            errors.push(e);
                            continue;
                        }
                    }
                    constants.insert(
                        decl.name.clone(),
                        Constant {
                            ty: decl.ty.clone(),
                            value,
                        },
                    );
                }
                Err(wd) => errors.push(LoadError::Shape {
                    constant: decl.name.clone(),
                    message: format!("literal value is undefined: {wd}"),
                }),
            }
        }
    }
    if !errors.is_empty() {
        return Err(LoadErrors(errors));
    }
    Ok(Universe::new(carriers, constants)?)
}

/// Re-serializes a universe as a schema plus sorted CSV files.
///
/// Constants whose type does not fit in CSV columns are written as literals
/// in the schema.
pub fn dump_universe(u: &Universe) -> (String, BTreeMap<String, String>) {
    let mut schema = String::new();
    let mut files = BTreeMap::new();
    if !u.carriers().is_empty() {
        schema.push_str("SETS\n");
        let decls: Vec<String> = u
            .carriers()
            .iter()
            .map(|(name, set)| {
                let elems: Vec<String> = set
                    .iter()
                    .map(|v| match v {
                        Value::Atom(a) => crate::lang::pretty::quote(a.name()),
                        other => other.to_string(),
                    })
                    .collect();
                format!("  {name} = {{{}}}", elems.join(", "))
            })
            .collect();
        schema.push_str(&decls.join(";\n"));
        schema.push('\n');
    }
    if !u.constants().is_empty() {
        schema.push_str("CONSTANTS\n");
        let mut decls = Vec::new();
        for (name, c) in u.constants() {
            let scalar = |t: &Type| matches!(t, Type::Integer | Type::Bool | Type::Given(_));
            let columns: Option<Vec<&str>> = match &c.ty {
                t if scalar(t) => Some(vec!["value"]),
                Type::Power(e) if scalar(e) => Some(vec!["value"]),
                Type::Power(e) => match &**e {
                    Type::Prod(a, b) if scalar(a) && scalar(b) => Some(vec!["left", "right"]),
                    _ => None,
                },
                _ => None,
            };
            match columns {
                Some(cols) => {
                    let file = format!("{name}.csv");
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(&cols).expect("in-memory write");
                    let rows: Vec<&Value> = match &c.value {
                        Value::Set(s) => s.iter().collect(),
                        v => vec![v],
                    };
                    for v in rows {
                        let rec: Vec<String> = match v.as_pair() {
                            Some((l, r)) if cols.len() == 2 => vec![l.to_string(), r.to_string()],
                            _ => vec![v.to_string()],
                        };
                        w.write_record(&rec).expect("in-memory write");
                    }
                    let bytes = w.into_inner().expect("in-memory write");
                    files.insert(file.clone(), String::from_utf8(bytes).expect("utf-8"));
                    decls.push(format!(
                        "  {name} : {} FROM {} COLS ({})",
                        c.ty,
                        crate::lang::pretty::quote(&file),
                        cols.join(", ")
                    ));
                }
                None => decls.push(format!("  {name} : {} = {}", c.ty, literal_text(&c.value))),
            }
        }
        schema.push_str(&decls.join(";\n"));
        schema.push('\n');
    }
    (schema, files)
}

/// Value as expression text; differs from canonical text only in spacing
/// and in parenthesizing negative integers inside maplets.
fn literal_text(v: &Value) -> String {
    match v {
        Value::Pair(p) => {
            let left = match &p.0 {
                Value::Pair(_) => literal_text(&p.0),
                other => literal_text(other),
            };
            let right = match &p.1 {
                Value::Pair(_) => format!("({})", literal_text(&p.1)),
                other => literal_text(other),
            };
            format!("{left} |-> {right}")
        }
        Value::Set(s) => format!("{{{}}}", s.iter().map(literal_text).collect::<Vec<_>>().join(", ")),
        other => other.to_string(),
    }
}
