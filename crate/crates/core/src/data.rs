//! Tabular datasets: schema, CSV ingestion, preparation recipes and row splits.
//!
//! A [`Dataset`] is column-major and immutable. Every row carries a stable
//! source row id (its 0-based position in the file it was loaded from), which
//! survives recipes and splits and ends up in exported predictions.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Explanatory,
    Response,
    Ignored,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Numeric => "numeric",
            Kind::Categorical => "categorical",
        })
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Explanatory => "explanatory",
            Role::Response => "response",
            Role::Ignored => "ignored",
        })
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "numeric" => Ok(Kind::Numeric),
            "categorical" => Ok(Kind::Categorical),
            other => Err(Error::Schema(format!("unknown column kind '{other}'"))),
        }
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explanatory" => Ok(Role::Explanatory),
            "response" => Ok(Role::Response),
            "ignored" => Ok(Role::Ignored),
            other => Err(Error::Schema(format!("unknown column role '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: Kind,
    pub role: Role,
}

impl ColumnSchema {
    pub fn new(name: impl Into<String>, kind: Kind, role: Role) -> Self {
        Self {
            name: name.into(),
            kind,
            role,
        }
    }

    pub fn numeric(name: impl Into<String>) -> Self {
        Self::new(name, Kind::Numeric, Role::Explanatory)
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        Self::new(name, Kind::Categorical, Role::Explanatory)
    }

    pub fn response(name: impl Into<String>) -> Self {
        Self::new(name, Kind::Numeric, Role::Response)
    }
}

/// Parses a schema sidecar: one `name kind role` line per column. Blank lines
/// and `#` comments are skipped.
pub fn parse_schema(text: &str) -> Result<Vec<ColumnSchema>> {
    let mut schema = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Schema(format!(
                "line {}: expected 'name kind role', got '{line}'",
                lineno + 1
            )));
        }
        schema.push(ColumnSchema::new(
            fields[0],
            fields[1].parse()?,
            fields[2].parse()?,
        ));
    }
    validate_schema(&schema)?;
    Ok(schema)
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<Vec<ColumnSchema>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_schema(&text)
}

pub fn format_schema(schema: &[ColumnSchema]) -> String {
    let mut out = String::new();
    for col in schema {
        let _ = writeln!(out, "{} {} {}", col.name, col.kind, col.role);
    }
    out
}

fn validate_schema(schema: &[ColumnSchema]) -> Result<()> {
    let mut seen = HashSet::new();
    for col in schema {
        if !seen.insert(col.name.as_str()) {
            return Err(Error::Schema(format!("duplicate column name '{}'", col.name)));
        }
    }
    let responses: Vec<&ColumnSchema> = schema.iter().filter(|c| c.role == Role::Response).collect();
    match responses.as_slice() {
        [one] if one.kind == Kind::Numeric => Ok(()),
        [one] => Err(Error::Schema(format!(
            "response column '{}' must be numeric",
            one.name
        ))),
        [] => Err(Error::Schema("no response column".into())),
        _ => Err(Error::Schema("more than one response column".into())),
    }
}

/// Column storage. `None` is an explicit missing marker.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> Kind {
        match self {
            Column::Numeric(_) => Kind::Numeric,
            Column::Categorical(_) => Kind::Categorical,
        }
    }

    fn is_missing(&self, row: usize) -> bool {
        match self {
            Column::Numeric(v) => v[row].is_none(),
            Column::Categorical(v) => v[row].is_none(),
        }
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
            Column::Categorical(v) => {
                Column::Categorical(rows.iter().map(|&r| v[r].clone()).collect())
            }
        }
    }

    fn cell_text(&self, row: usize) -> String {
        match self {
            Column::Numeric(v) => v[row].map_or_else(|| "?".to_string(), |x| x.to_string()),
            Column::Categorical(v) => v[row].clone().unwrap_or_else(|| "?".to_string()),
        }
    }
}

impl From<Vec<f64>> for Column {
    fn from(values: Vec<f64>) -> Self {
        Column::Numeric(values.into_iter().map(Some).collect())
    }
}

impl From<Vec<&str>> for Column {
    fn from(values: Vec<&str>) -> Self {
        Column::Categorical(values.into_iter().map(|s| Some(s.to_string())).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    schema: Vec<ColumnSchema>,
    columns: Vec<Column>,
    row_ids: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset with row ids `0..n`.
    pub fn new(
        name: impl Into<String>,
        schema: Vec<ColumnSchema>,
        columns: Vec<Column>,
    ) -> Result<Self> {
        let n = columns.first().map_or(0, Column::len);
        Self::with_row_ids(name, schema, columns, (0..n).collect())
    }

    pub fn with_row_ids(
        name: impl Into<String>,
        schema: Vec<ColumnSchema>,
        columns: Vec<Column>,
        row_ids: Vec<usize>,
    ) -> Result<Self> {
        validate_schema(&schema)?;
        if schema.len() != columns.len() {
            return Err(Error::Schema(format!(
                "{} schema entries but {} columns",
                schema.len(),
                columns.len()
            )));
        }
        for (col, data) in schema.iter().zip(&columns) {
            if col.kind != data.kind() {
                return Err(Error::Schema(format!(
                    "column '{}' declared {} but holds {} data",
                    col.name,
                    col.kind,
                    data.kind()
                )));
            }
            if data.len() != row_ids.len() {
                return Err(Error::Schema(format!(
                    "column '{}' has {} cells, expected {}",
                    col.name,
                    data.len(),
                    row_ids.len()
                )));
            }
            if let Column::Numeric(v) = data {
                if let Some(pos) = v.iter().position(|x| matches!(x, Some(x) if !x.is_finite())) {
                    return Err(Error::Schema(format!(
                        "column '{}', row {}: non-finite value",
                        col.name, row_ids[pos]
                    )));
                }
            }
        }
        let unique: HashSet<usize> = row_ids.iter().copied().collect();
        if unique.len() != row_ids.len() {
            return Err(Error::Schema("duplicate row ids".into()));
        }
        Ok(Self {
            name: name.into(),
            schema,
            columns,
            row_ids,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.column_index(name).map(|i| &self.columns[i])
    }

    pub fn response_name(&self) -> &str {
        self.schema
            .iter()
            .find(|c| c.role == Role::Response)
            .map(|c| c.name.as_str())
            .expect("schema validated to hold one response")
    }

    /// Columns that feed the model, in schema order.
    pub fn explanatory(&self) -> impl Iterator<Item = (&ColumnSchema, &Column)> {
        self.schema
            .iter()
            .zip(&self.columns)
            .filter(|(c, _)| c.role == Role::Explanatory)
    }

    /// Columns that take part in modelling (explanatory and response).
    pub fn modelled(&self) -> impl Iterator<Item = (&ColumnSchema, &Column)> {
        self.schema
            .iter()
            .zip(&self.columns)
            .filter(|(c, _)| c.role != Role::Ignored)
    }

    /// Values of a numeric column; fails on missing markers.
    pub fn numeric(&self, name: &str) -> Result<Vec<f64>> {
        match self.column(name) {
            Some(Column::Numeric(v)) => v
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    x.ok_or_else(|| Error::MissingValue {
                        column: name.to_string(),
                        row_id: self.row_ids[i],
                    })
                })
                .collect(),
            Some(Column::Categorical(_)) => {
                Err(Error::Schema(format!("column '{name}' is categorical")))
            }
            None => Err(Error::Schema(format!("no column named '{name}'"))),
        }
    }

    pub fn response(&self) -> Result<Vec<f64>> {
        self.numeric(self.response_name())
    }

    /// Fails if any modelled column holds a missing marker.
    pub fn ensure_complete(&self) -> Result<()> {
        for (col, data) in self.modelled() {
            if let Some(row) = (0..data.len()).find(|&r| data.is_missing(r)) {
                return Err(Error::MissingValue {
                    column: col.name.clone(),
                    row_id: self.row_ids[row],
                });
            }
        }
        Ok(())
    }

    /// New dataset holding the rows at `positions`, in that order.
    pub fn select(&self, positions: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.select(positions)).collect(),
            row_ids: positions.iter().map(|&p| self.row_ids[p]).collect(),
        }
    }

    /// Replaces the data of one column, keeping the schema entry.
    pub(crate) fn replace_column(&mut self, index: usize, column: Column) {
        debug_assert_eq!(column.len(), self.n_rows());
        debug_assert_eq!(column.kind(), self.schema[index].kind);
        self.columns[index] = column;
    }

    /// SHA-256 over a canonical text rendering of schema, row ids and cells.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for col in &self.schema {
            hasher.update(format!("{}\t{}\t{}\n", col.name, col.kind, col.role).as_bytes());
        }
        for row in 0..self.n_rows() {
            let mut line = self.row_ids[row].to_string();
            for col in &self.columns {
                line.push('\t');
                match col {
                    Column::Numeric(v) => match v[row] {
                        Some(x) => {
                            let _ = write!(line, "{:016x}", x.to_bits());
                        }
                        None => line.push('?'),
                    },
                    Column::Categorical(v) => match &v[row] {
                        Some(s) => {
                            line.push('"');
                            line.push_str(s);
                            line.push('"');
                        }
                        None => line.push('?'),
                    },
                }
            }
            line.push('\n');
            hasher.update(line.as_bytes());
        }
        hex(&hasher.finalize())
    }

    /// Writes the dataset as CSV. Numbers use the shortest representation
    /// that parses back to the same `f64`; missing cells are written as `?`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.schema.iter().map(|c| c.name.as_str()))?;
        for row in 0..self.n_rows() {
            w.write_record(self.columns.iter().map(|c| c.cell_text(row)))?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn is_missing_marker(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

/// Reads CSV text against a schema. Header names are matched to schema
/// entries by name, in any order; the result follows schema order.
pub fn read_csv<R: Read>(
    reader: R,
    schema: &[ColumnSchema],
    name: impl Into<String>,
) -> Result<Dataset> {
    validate_schema(schema)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();

    let mut position: HashMap<&str, usize> = HashMap::new();
    for (i, h) in header.iter().enumerate() {
        if !schema.iter().any(|c| &c.name == h) {
            return Err(Error::Schema(format!("unknown header '{h}'")));
        }
        if position.insert(h.as_str(), i).is_some() {
            return Err(Error::Schema(format!("duplicate header '{h}'")));
        }
    }
    let source: Vec<usize> = schema
        .iter()
        .map(|c| {
            position
                .get(c.name.as_str())
                .copied()
                .ok_or_else(|| Error::Schema(format!("header lacks column '{}'", c.name)))
        })
        .collect::<Result<_>>()?;

    let mut columns: Vec<Column> = schema
        .iter()
        .map(|c| match c.kind {
            Kind::Numeric => Column::Numeric(Vec::new()),
            Kind::Categorical => Column::Categorical(Vec::new()),
        })
        .collect();

    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        for ((col, data), &src) in schema.iter().zip(columns.iter_mut()).zip(&source) {
            let cell = record.get(src).unwrap_or("");
            match data {
                Column::Numeric(v) => {
                    if is_missing_marker(cell) {
                        v.push(None);
                    } else {
                        let x: f64 = cell.parse().ok().filter(|x: &f64| x.is_finite()).ok_or_else(
                            || Error::Parse {
                                row,
                                column: col.name.clone(),
                                value: cell.to_string(),
                            },
                        )?;
                        v.push(Some(x));
                    }
                }
                Column::Categorical(v) => {
                    v.push((!is_missing_marker(cell)).then(|| cell.to_string()));
                }
            }
        }
    }
    Dataset::new(name, schema.to_vec(), columns)
}

pub fn load_csv(path: impl AsRef<Path>, schema: &[ColumnSchema]) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv(std::io::BufReader::new(file), schema, name)
}

/// Preparation steps applied to a raw dataset before modelling.
///
/// Steps run in a fixed order: explicit row drops, missing-value row drops,
/// largest-response drops, categorical casts, ignores, response designation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrepRecipe {
    pub drop_rows_with_missing: bool,
    /// Source row ids (0-based file order) to remove.
    pub drop_row_ids: Vec<usize>,
    /// Remove the rows with the `n` largest response values (ties by row id).
    pub drop_largest_response: usize,
    pub cast_to_categorical: Vec<String>,
    pub set_response: String,
    pub ignore_columns: Vec<String>,
    /// Free-text notes carried into reports.
    pub notes: Vec<String>,
}

impl PrepRecipe {
    pub fn identity(response: impl Into<String>) -> Self {
        Self {
            set_response: response.into(),
            ..Self::default()
        }
    }

    /// Parses the `key value...` recipe format. `note` lines keep the rest of
    /// the line verbatim.
    pub fn parse(text: &str) -> Result<Self> {
        let mut recipe = PrepRecipe::default();
        let mut response = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            let words = || rest.split_whitespace().map(str::to_string);
            let bad = |what: &str| Error::Recipe(format!("line {}: {what}", lineno + 1));
            match key {
                "drop_rows_with_missing" => {
                    recipe.drop_rows_with_missing =
                        rest.parse().map_err(|_| bad("expected true or false"))?;
                }
                "drop_row_ids" => {
                    for w in words() {
                        recipe
                            .drop_row_ids
                            .push(w.parse().map_err(|_| bad("row ids must be integers"))?);
                    }
                }
                "drop_largest_response" => {
                    recipe.drop_largest_response =
                        rest.parse().map_err(|_| bad("expected a row count"))?;
                }
                "cast_to_categorical" => recipe.cast_to_categorical.extend(words()),
                "ignore_columns" => recipe.ignore_columns.extend(words()),
                "set_response" => response = Some(rest.to_string()),
                "note" => recipe.notes.push(rest.to_string()),
                other => return Err(bad(&format!("unknown key '{other}'"))),
            }
        }
        recipe.set_response = response
            .filter(|r| !r.is_empty())
            .ok_or_else(|| Error::Recipe("set_response is required".into()))?;
        Ok(recipe)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn apply(&self, raw: &Dataset) -> Result<Dataset> {
        apply_recipe(raw, self)
    }
}

pub fn apply_recipe(raw: &Dataset, recipe: &PrepRecipe) -> Result<Dataset> {
    let require_column = |name: &str| {
        raw.column_index(name)
            .ok_or_else(|| Error::Recipe(format!("no column named '{name}'")))
    };
    let response_idx = require_column(&recipe.set_response)?;
    if raw.schema[response_idx].kind != Kind::Numeric {
        return Err(Error::Recipe(format!(
            "response '{}' must be numeric",
            recipe.set_response
        )));
    }
    let cast: Vec<usize> = recipe
        .cast_to_categorical
        .iter()
        .map(|c| require_column(c))
        .collect::<Result<_>>()?;
    let ignored: Vec<usize> = recipe
        .ignore_columns
        .iter()
        .map(|c| require_column(c))
        .collect::<Result<_>>()?;
    if ignored.contains(&response_idx) || cast.contains(&response_idx) {
        return Err(Error::Recipe(format!(
            "response '{}' cannot be ignored or cast",
            recipe.set_response
        )));
    }
    let present: HashSet<usize> = raw.row_ids.iter().copied().collect();
    if let Some(id) = recipe.drop_row_ids.iter().find(|id| !present.contains(id)) {
        return Err(Error::Recipe(format!("no row with id {id}")));
    }

    let mut schema = raw.schema.clone();
    for (i, col) in schema.iter_mut().enumerate() {
        if i == response_idx {
            col.role = Role::Response;
        } else if ignored.contains(&i) || col.role == Role::Response {
            col.role = Role::Ignored;
        }
    }

    let dropped: BTreeSet<usize> = recipe.drop_row_ids.iter().copied().collect();
    let mut keep: Vec<usize> = (0..raw.n_rows())
        .filter(|&r| !dropped.contains(&raw.row_ids[r]))
        .filter(|&r| {
            !recipe.drop_rows_with_missing
                || !schema
                    .iter()
                    .zip(&raw.columns)
                    .any(|(c, data)| c.role != Role::Ignored && data.is_missing(r))
        })
        .collect();

    if recipe.drop_largest_response > 0 {
        let Column::Numeric(resp) = &raw.columns[response_idx] else {
            unreachable!("response checked numeric")
        };
        let mut ranked: Vec<usize> = keep.clone();
        ranked.sort_by(|&a, &b| {
            let (ya, yb) = (resp[a].unwrap_or(f64::NEG_INFINITY), resp[b].unwrap_or(f64::NEG_INFINITY));
            yb.total_cmp(&ya).then(raw.row_ids[a].cmp(&raw.row_ids[b]))
        });
        if recipe.drop_largest_response >= ranked.len() {
            return Err(Error::Recipe("drop_largest_response removes every row".into()));
        }
        let gone: HashSet<usize> = ranked[..recipe.drop_largest_response].iter().copied().collect();
        keep.retain(|r| !gone.contains(r));
    }

    let mut out = raw.select(&keep);
    out.schema = schema;
    for &i in &cast {
        out.schema[i].kind = Kind::Categorical;
        if let Column::Numeric(v) = &out.columns[i] {
            out.columns[i] =
                Column::Categorical(v.iter().map(|x| x.map(|x| x.to_string())).collect());
        }
    }
    validate_schema(&out.schema)?;
    Ok(out)
}

/// Splits `ds` into train and test by row position. Each output keeps the
/// order of its position list.
pub fn split(ds: &Dataset, train: &[usize], test: &[usize]) -> Result<(Dataset, Dataset)> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::Split("train and test must both be nonempty".into()));
    }
    let n = ds.n_rows();
    let mut seen = vec![false; n];
    for &p in train.iter().chain(test) {
        if p >= n {
            return Err(Error::Split(format!("row position {p} out of range (n = {n})")));
        }
        if seen[p] {
            return Err(Error::Split(format!("row position {p} listed twice")));
        }
        seen[p] = true;
    }
    Ok((ds.select(train), ds.select(test)))
}
