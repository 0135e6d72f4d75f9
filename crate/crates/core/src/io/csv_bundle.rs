//! One CSV file per parameter, mirroring the matrix notation of the model.
//!
//! Entity files carry fixed headers. Matrix files have a corner cell followed
//! by column ids in the header and a row id in the first column of every
//! other row; rows and columns may appear in any order but each id exactly
//! once. The obsolete schedule is a list of `course,faculty,slot` rows.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::str::FromStr;

use super::{IoError, Location};
use crate::grid::{Array3, Matrix};
use crate::instance::{ConflictPair, Course, FacultyMember, Instance, TimeSlot};

pub const CSV_FILES: [&str; 9] = [
    "courses.csv",
    "faculty.csv",
    "slots.csv",
    "conflicts.csv",
    "W.csv",
    "alpha.csv",
    "C.csv",
    "M.csv",
    "X.csv",
];

struct Table {
    file: &'static str,
    /// Row 0 is the header.
    rows: Vec<Vec<String>>,
}

impl Table {
    fn parse(file: &'static str, text: &str) -> Result<Self, IoError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let row = e.position().map_or(0, |p| p.line() as usize);
                IoError::at(Location::row(file, row), e.to_string())
            })?;
            rows.push(record.iter().map(str::to_string).collect());
        }
        if rows.is_empty() {
            return Err(IoError::at(Location::file(file), "missing header row"));
        }
        Ok(Self { file, rows })
    }

    fn expect_header(&self, names: &[&str]) -> Result<(), IoError> {
        let header = &self.rows[0];
        for (c, name) in names.iter().enumerate() {
            if header.get(c).map(String::as_str) != Some(*name) {
                return Err(IoError::at(
                    Location::cell(self.file, 1, c + 1),
                    format!("expected header {:?}", names.join(",")),
                ));
            }
        }
        if header.len() != names.len() {
            return Err(IoError::at(
                Location::row(self.file, 1),
                format!("expected {} columns, found {}", names.len(), header.len()),
            ));
        }
        Ok(())
    }

    /// Data rows with their 1-based line numbers, each checked for width.
    fn data(&self, width: usize) -> Result<Vec<(usize, &[String])>, IoError> {
        let mut out = Vec::with_capacity(self.rows.len() - 1);
        for (k, row) in self.rows.iter().enumerate().skip(1) {
            if row.len() != width {
                return Err(IoError::at(
                    Location::row(self.file, k + 1),
                    format!("expected {width} columns, found {}", row.len()),
                ));
            }
            out.push((k + 1, row.as_slice()));
        }
        Ok(out)
    }

    fn number<T: FromStr>(&self, row: usize, column: usize, text: &str) -> Result<T, IoError> {
        text.parse().map_err(|_| {
            IoError::at(
                Location::cell(self.file, row, column),
                format!("expected a number, found {text:?}"),
            )
        })
    }
}

fn unique_ids(table: &Table, ids: &[(usize, String)]) -> Result<HashMap<String, usize>, IoError> {
    let mut map = HashMap::new();
    for (k, (row, id)) in ids.iter().enumerate() {
        if map.insert(id.clone(), k).is_some() {
            return Err(IoError::at(Location::cell(table.file, *row, 1), format!("duplicated id {id:?}")));
        }
    }
    Ok(map)
}

fn resolve(table: &Table, map: &HashMap<String, usize>, id: &str, what: &str, row: usize, column: usize) -> Result<usize, IoError> {
    map.get(id).copied().ok_or_else(|| {
        IoError::at(Location::cell(table.file, row, column), format!("unknown {what} id {id:?}"))
    })
}

/// Reads a matrix file keyed by `row_ids` x `col_ids`. `cell` converts one
/// entry and returns an error message for bad values.
fn matrix<T: Clone>(
    table: &Table,
    rows: (&str, &HashMap<String, usize>),
    cols: (&str, &HashMap<String, usize>),
    cell: impl Fn(&str) -> Result<T, String>,
) -> Result<Matrix<T>, IoError> {
    let (row_what, row_map) = rows;
    let (col_what, col_map) = cols;
    let header = &table.rows[0];
    let mut col_of = Vec::with_capacity(header.len().saturating_sub(1));
    let mut seen_cols = vec![false; col_map.len()];
    for (c, id) in header.iter().enumerate().skip(1) {
        let k = resolve(table, col_map, id, col_what, 1, c + 1)?;
        if std::mem::replace(&mut seen_cols[k], true) {
            return Err(IoError::at(Location::cell(table.file, 1, c + 1), format!("duplicated {col_what} id {id:?}")));
        }
        col_of.push(k);
    }
    if let Some(k) = seen_cols.iter().position(|s| !s) {
        let missing = col_map.iter().find(|(_, &v)| v == k).map(|(id, _)| id.clone()).unwrap_or_default();
        return Err(IoError::at(
            Location::row(table.file, 1),
            format!("dimension mismatch: missing column for {col_what} {missing:?}"),
        ));
    }

    let mut values: Vec<Option<T>> = vec![None; row_map.len() * col_map.len()];
    let mut seen_rows = vec![false; row_map.len()];
    for (line, row) in table.data(header.len())? {
        let r = resolve(table, row_map, &row[0], row_what, line, 1)?;
        if std::mem::replace(&mut seen_rows[r], true) {
            return Err(IoError::at(Location::cell(table.file, line, 1), format!("duplicated {row_what} id {:?}", row[0])));
        }
        for (c, text) in row.iter().enumerate().skip(1) {
            let v = cell(text).map_err(|m| IoError::at(Location::cell(table.file, line, c + 1), m))?;
            values[r * col_map.len() + col_of[c - 1]] = Some(v);
        }
    }
    if let Some(r) = seen_rows.iter().position(|s| !s) {
        let missing = row_map.iter().find(|(_, &v)| v == r).map(|(id, _)| id.clone()).unwrap_or_default();
        return Err(IoError::at(
            Location::file(table.file),
            format!("dimension mismatch: missing row for {row_what} {missing:?}"),
        ));
    }
    let cols = col_map.len();
    Ok(Matrix::from_fn(row_map.len(), cols, |r, c| {
        values[r * cols + c].clone().expect("every cell filled")
    }))
}

fn non_negative(text: &str) -> Result<f64, String> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        Ok(v) => Err(format!("expected a non-negative number, found {v}")),
        Err(_) => Err(format!("expected a number, found {text:?}")),
    }
}

fn binary(text: &str) -> Result<bool, String> {
    match text {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(format!("expected 0 or 1, found {text:?}")),
    }
}

fn count(text: &str) -> Result<u32, String> {
    text.parse().map_err(|_| format!("expected a non-negative integer, found {text:?}"))
}

/// Parses a bundle given as file name to contents, without validating the
/// resulting instance beyond what the per-file checks enforce.
pub fn parse_csv_bundle_unchecked(files: &BTreeMap<String, String>) -> Result<Instance, IoError> {
    let missing: Vec<String> = CSV_FILES
        .iter()
        .filter(|f| !files.contains_key(**f))
        .map(|f| f.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(IoError::MissingFiles(missing));
    }
    let table = |name: &'static str| Table::parse(name, &files[name]);

    let t = table("courses.csv")?;
    t.expect_header(&["id", "label", "load_units"])?;
    let mut courses = Vec::new();
    for (line, row) in t.data(3)? {
        courses.push(Course::new(&row[0], &row[1], t.number(line, 3, &row[2])?));
    }
    let course_ids: Vec<(usize, String)> = t.data(3)?.iter().map(|(l, r)| (*l, r[0].clone())).collect();
    let course_map = unique_ids(&t, &course_ids)?;

    let t = table("faculty.csv")?;
    t.expect_header(&["id", "label", "load_min", "load_max"])?;
    let mut faculty = Vec::new();
    for (line, row) in t.data(4)? {
        faculty.push(FacultyMember::new(
            &row[0],
            &row[1],
            t.number(line, 3, &row[2])?,
            t.number(line, 4, &row[3])?,
        ));
    }
    let faculty_ids: Vec<(usize, String)> = t.data(4)?.iter().map(|(l, r)| (*l, r[0].clone())).collect();
    let faculty_map = unique_ids(&t, &faculty_ids)?;

    let t = table("slots.csv")?;
    t.expect_header(&["id", "label"])?;
    let rows = t.data(2)?;
    let slots: Vec<TimeSlot> = rows.iter().map(|(_, r)| TimeSlot::new(&r[0], &r[1])).collect();
    let slot_ids: Vec<(usize, String)> = rows.iter().map(|(l, r)| (*l, r[0].clone())).collect();
    let slot_map = unique_ids(&t, &slot_ids)?;

    let t = table("conflicts.csv")?;
    t.expect_header(&["slot_a", "slot_b"])?;
    let mut conflicts = Vec::new();
    for (line, row) in t.data(2)? {
        let a = resolve(&t, &slot_map, &row[0], "slot", line, 1)?;
        let b = resolve(&t, &slot_map, &row[1], "slot", line, 2)?;
        conflicts.push(ConflictPair::new(a, b).unwrap_or(ConflictPair { slot_a: a, slot_b: b }));
    }

    let preferences = matrix(&table("W.csv")?, ("faculty", &faculty_map), ("slot", &slot_map), non_negative)?;
    let swap_penalties = matrix(&table("alpha.csv")?, ("course", &course_map), ("faculty", &faculty_map), non_negative)?;
    let eligibility = matrix(&table("C.csv")?, ("course", &course_map), ("faculty", &faculty_map), binary)?;
    let demand = matrix(&table("M.csv")?, ("course", &course_map), ("slot", &slot_map), count)?;

    let t = table("X.csv")?;
    t.expect_header(&["course", "faculty", "slot"])?;
    let mut x = Array3::filled(courses.len(), faculty.len(), slots.len(), false);
    for (line, row) in t.data(3)? {
        let i = resolve(&t, &course_map, &row[0], "course", line, 1)?;
        let j = resolve(&t, &faculty_map, &row[1], "faculty", line, 2)?;
        let s = resolve(&t, &slot_map, &row[2], "slot", line, 3)?;
        if *x.get(i, j, s) {
            return Err(IoError::at(Location::row(t.file, line), "duplicated assignment triple"));
        }
        x.set(i, j, s, true);
    }

    Ok(Instance {
        courses,
        faculty,
        slots,
        conflicts,
        obsolete_schedule: x,
        preferences,
        swap_penalties,
        demand,
        eligibility,
    })
}

pub fn parse_csv_bundle(files: &BTreeMap<String, String>) -> Result<Instance, IoError> {
    let instance = parse_csv_bundle_unchecked(files)?;
    let report = instance.validate();
    if report.is_valid() {
        Ok(instance)
    } else {
        Err(IoError::Invalid(report))
    }
}

fn write_rows(rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is UTF-8")
}

fn matrix_rows<T: Clone + ToString>(corner: &str, row_ids: &[&str], col_ids: &[&str], m: &Matrix<T>) -> String {
    let header = std::iter::once(corner.to_string()).chain(col_ids.iter().map(|s| s.to_string())).collect();
    let body = row_ids.iter().enumerate().map(|(r, id)| {
        std::iter::once(id.to_string())
            .chain(m.row(r).iter().map(ToString::to_string))
            .collect()
    });
    write_rows(std::iter::once(header).chain(body))
}

pub fn render_csv_bundle(instance: &Instance) -> BTreeMap<String, String> {
    let course_ids: Vec<&str> = instance.courses.iter().map(|c| c.id.as_str()).collect();
    let faculty_ids: Vec<&str> = instance.faculty.iter().map(|f| f.id.as_str()).collect();
    let slot_ids: Vec<&str> = instance.slots.iter().map(|s| s.id.as_str()).collect();
    let header = |names: &[&str]| names.iter().map(|s| s.to_string()).collect::<Vec<_>>();

    let mut files = BTreeMap::new();
    files.insert(
        "courses.csv".to_string(),
        write_rows(std::iter::once(header(&["id", "label", "load_units"])).chain(
            instance.courses.iter().map(|c| vec![c.id.clone(), c.label.clone(), c.load_units.to_string()]),
        )),
    );
    files.insert(
        "faculty.csv".to_string(),
        write_rows(std::iter::once(header(&["id", "label", "load_min", "load_max"])).chain(
            instance.faculty.iter().map(|f| {
                vec![f.id.clone(), f.label.clone(), f.load_min.to_string(), f.load_max.to_string()]
            }),
        )),
    );
    files.insert(
        "slots.csv".to_string(),
        write_rows(
            std::iter::once(header(&["id", "label"]))
                .chain(instance.slots.iter().map(|s| vec![s.id.clone(), s.label.clone()])),
        ),
    );
    files.insert(
        "conflicts.csv".to_string(),
        write_rows(std::iter::once(header(&["slot_a", "slot_b"])).chain(
            instance.conflicts.iter().map(|p| vec![slot_ids[p.slot_a].to_string(), slot_ids[p.slot_b].to_string()]),
        )),
    );
    files.insert("W.csv".to_string(), matrix_rows("faculty", &faculty_ids, &slot_ids, &instance.preferences));
    files.insert("alpha.csv".to_string(), matrix_rows("course", &course_ids, &faculty_ids, &instance.swap_penalties));
    files.insert(
        "C.csv".to_string(),
        matrix_rows("course", &course_ids, &faculty_ids, &instance.eligibility.map(|&c| u8::from(c))),
    );
    files.insert("M.csv".to_string(), matrix_rows("course", &course_ids, &slot_ids, &instance.demand));
    files.insert(
        "X.csv".to_string(),
        write_rows(std::iter::once(header(&["course", "faculty", "slot"])).chain(
            instance.assignments().into_iter().map(|(i, j, t)| {
                vec![course_ids[i].to_string(), faculty_ids[j].to_string(), slot_ids[t].to_string()]
            }),
        )),
    );
    files
}

fn read_dir_files(dir: &Path) -> Result<BTreeMap<String, String>, IoError> {
    if !dir.is_dir() {
        return Err(IoError::io(dir, std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory")));
    }
    let mut files = BTreeMap::new();
    for name in CSV_FILES {
        let path = dir.join(name);
        match std::fs::read_to_string(&path) {
            Ok(text) => {
                files.insert(name.to_string(), text);
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(IoError::io(path, e)),
        }
    }
    Ok(files)
}

pub fn read_csv_bundle(dir: &Path) -> Result<Instance, IoError> {
    parse_csv_bundle(&read_dir_files(dir)?)
}

pub fn read_csv_bundle_unchecked(dir: &Path) -> Result<Instance, IoError> {
    parse_csv_bundle_unchecked(&read_dir_files(dir)?)
}

/// Writes all bundle files into `dir`, creating it if needed.
pub fn write_csv_bundle(instance: &Instance, dir: &Path) -> Result<(), IoError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    for (name, text) in render_csv_bundle(instance) {
        let path = dir.join(&name);
        std::fs::write(&path, text).map_err(|e| IoError::io(path, e))?;
    }
    Ok(())
}
