use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::littlewood_paley::DyadicPartition;

/// 17 significant digits, round-trippable.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Write to a sibling temp file, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Bumped whenever a report layout changes.
pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fields shared by every output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Header {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub dyadic_range: (i32, i32),
    pub covered_band: (f64, f64),
    pub disclaimer: String,
}

impl Header {
    pub fn new(command: &str, config_hash: &str, part: &DyadicPartition) -> Self {
        let (lo, hi) = part.covered_band();
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION,
            command: command.to_string(),
            config_hash: config_hash.to_string(),
            dyadic_range: (part.j_min, part.j_max),
            covered_band: (lo, hi),
            disclaimer: disclaimer(part),
        }
    }

    /// `# key: value` lines for CSV preambles.
    pub fn csv_preamble(&self) -> String {
        format!(
            "# schema_version: {}\n# tool_version: {}\n# command: {}\n# config_hash: {}\n# dyadic_range: [{}, {}]\n# disclaimer: {}\n",
            self.schema_version,
            self.tool_version,
            self.command,
            self.config_hash,
            self.dyadic_range.0,
            self.dyadic_range.1,
            self.disclaimer
        )
    }
}

pub fn disclaimer(part: &DyadicPartition) -> String {
    let (lo, hi) = part.covered_band();
    format!(
        "periodic torus surrogate on n = {}: only blocks j = {}..={} are resolved (|xi| in [{lo:.4}, {hi:.4}]); \
         whole-space statements are checked on this finite band only",
        part.grid.n, part.j_min, part.j_max
    )
}

/// Prints every finite float as `{:.16e}` (17 significant digits).
struct Digits17;

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W: ?Sized + std::io::Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(format!("{value:.16e}").as_bytes())
    }

    fn write_f32<W: ?Sized + std::io::Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Pretty JSON with 17-digit floats; keys keep declaration order.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17Pretty::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("json is utf-8"))
}

/// `{"header": ..., <record fields>}`.
pub fn json_report<T: Serialize>(header: &Header, record: &T) -> Result<String> {
    let mut obj = serde_json::Map::new();
    obj.insert("header".into(), serde_json::to_value(header)?);
    match serde_json::to_value(record)? {
        serde_json::Value::Object(m) => obj.extend(m),
        other => {
            obj.insert("record".into(), other);
        }
    }
    to_json(&obj)
}

/// CSV with the header preamble, one column-name row and 17-digit floats.
pub fn csv_report(header: &Header, columns: &[&str], rows: impl IntoIterator<Item = Vec<CsvCell>>) -> String {
    let mut out = header.csv_preamble();
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(CsvCell::render).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum CsvCell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl CsvCell {
    fn render(&self) -> String {
        match self {
            CsvCell::Int(i) => i.to_string(),
            CsvCell::Float(x) => fmt_f64(*x),
            CsvCell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for CsvCell {
    fn from(x: f64) -> Self {
        CsvCell::Float(x)
    }
}

impl From<i64> for CsvCell {
    fn from(i: i64) -> Self {
        CsvCell::Int(i)
    }
}

impl From<usize> for CsvCell {
    fn from(i: usize) -> Self {
        CsvCell::Int(i as i64)
    }
}

impl From<i32> for CsvCell {
    fn from(i: i32) -> Self {
        CsvCell::Int(i as i64)
    }
}

impl From<&str> for CsvCell {
    fn from(s: &str) -> Self {
        CsvCell::Text(s.to_string())
    }
}

/// Pretty printer that keeps the 17-digit floats.
#[derive(Default)]
struct Digits17Pretty {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

macro_rules! forward {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + std::io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> std::io::Result<()> {
            self.inner.$name(w $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for Digits17Pretty {
    forward! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }

    fn write_f64<W: ?Sized + std::io::Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        Digits17.write_f64(writer, value)
    }

    fn write_f32<W: ?Sized + std::io::Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        Digits17.write_f64(writer, value as f64)
    }
}
