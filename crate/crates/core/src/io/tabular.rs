//! Plain-text tabular files.
//!
//! ```text
//! id:int,x:float,y:float,z:float
//! 1,0.0,0.0,0.0
//! 2,0.1,1e-300,-0.0
//! ```
//!
//! The first line declares `name:type` for every column. Rows are
//! comma-separated and every line, including the last, ends in `\n`.
//! Integers are plain decimal. Floats use the shortest decimal string that
//! parses back to the same 64-bit value (`NaN`, `inf` and `-inf` for the
//! non-finite values). `text` columns percent-encode `%`, `,`, `\r` and
//! `\n`; everything else is written verbatim as UTF-8.

use std::fmt;
use std::io::{BufRead, Write};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Int,
    Float,
    Text,
}

impl ColumnType {
    fn as_str(self) -> &'static str {
        match self {
            ColumnType::Int => "int",
            ColumnType::Float => "float",
            ColumnType::Text => "text",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub ty: ColumnType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub columns: Vec<Column>,
}

impl Schema {
    /// Parses a header such as `id:int,x:float`.
    pub fn parse(header: &str) -> Result<Self, String> {
        let columns = header
            .split(',')
            .map(|c| {
                let (name, ty) = c.split_once(':').ok_or_else(|| format!("column `{c}` has no type"))?;
                let ty = match ty {
                    "int" => ColumnType::Int,
                    "float" => ColumnType::Float,
                    "text" => ColumnType::Text,
                    other => return Err(format!("unknown column type `{other}`")),
                };
                if name.is_empty() {
                    return Err("empty column name".into());
                }
                Ok(Column { name: name.to_string(), ty })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { columns })
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.columns.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}", c.name, c.ty.as_str())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Field {
    pub fn as_int(&self) -> i64 {
        match self {
            Field::Int(v) => *v,
            other => panic!("expected int field, found {other:?}"),
        }
    }

    pub fn as_float(&self) -> f64 {
        match self {
            Field::Float(v) => *v,
            other => panic!("expected float field, found {other:?}"),
        }
    }

    pub fn as_text(&self) -> &str {
        match self {
            Field::Text(v) => v,
            other => panic!("expected text field, found {other:?}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("header `{found}` does not match expected `{expected}`")]
    SchemaMismatch { expected: String, found: String },
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for FormatError {
    fn from(e: std::io::Error) -> Self {
        FormatError::Io(e.to_string())
    }
}

pub fn format_float(v: f64) -> String {
    ryu::Buffer::new().format(v).to_string()
}

fn escape(s: &str, out: &mut String) {
    for ch in s.chars() {
        match ch {
            '%' => out.push_str("%25"),
            ',' => out.push_str("%2C"),
            '\n' => out.push_str("%0A"),
            '\r' => out.push_str("%0D"),
            c => out.push(c),
        }
    }
}

fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find('%') {
        out.push_str(&rest[..pos]);
        let code = rest.get(pos + 1..pos + 3).ok_or("truncated escape")?;
        out.push(match code {
            "25" => '%',
            "2C" => ',',
            "0A" => '\n',
            "0D" => '\r',
            other => return Err(format!("unknown escape %{other}")),
        });
        rest = &rest[pos + 3..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Streams rows under a fixed schema.
pub struct TableWriter<W: Write> {
    out: W,
    schema: Schema,
    line: String,
}

impl<W: Write> TableWriter<W> {
    pub fn new(mut out: W, schema: &Schema) -> std::io::Result<Self> {
        writeln!(out, "{schema}")?;
        Ok(Self { out, schema: schema.clone(), line: String::new() })
    }

    pub fn write_row(&mut self, fields: &[Field]) -> std::io::Result<()> {
        assert_eq!(fields.len(), self.schema.len(), "row width differs from schema");
        self.line.clear();
        let mut buf = ryu::Buffer::new();
        for (i, (f, col)) in fields.iter().zip(&self.schema.columns).enumerate() {
            if i > 0 {
                self.line.push(',');
            }
            match (f, col.ty) {
                (Field::Int(v), ColumnType::Int) => self.line.push_str(&v.to_string()),
                (Field::Float(v), ColumnType::Float) => self.line.push_str(buf.format(*v)),
                (Field::Text(v), ColumnType::Text) => escape(v, &mut self.line),
                (f, ty) => panic!("field {f:?} written to {ty:?} column {}", col.name),
            }
        }
        self.line.push('\n');
        self.out.write_all(self.line.as_bytes())
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// A parsed file: schema plus rows tagged with their 1-based line number
/// (the header is line 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: Schema,
    pub rows: Vec<(usize, Vec<Field>)>,
}

fn parse_field(raw: &str, ty: ColumnType) -> Result<Field, String> {
    match ty {
        ColumnType::Int => raw.parse().map(Field::Int).map_err(|_| format!("`{raw}` is not an int")),
        ColumnType::Float => raw.parse().map(Field::Float).map_err(|_| format!("`{raw}` is not a float")),
        ColumnType::Text => unescape(raw).map(Field::Text),
    }
}

/// Reads a whole table. When `expected` is given the header must match it.
pub fn read_table(mut r: impl BufRead, expected: Option<&Schema>) -> Result<Table, FormatError> {
    let mut header = String::new();
    if r.read_line(&mut header)? == 0 {
        return Err(FormatError::Parse { line: 1, msg: "missing header".into() });
    }
    let header = header.strip_suffix('\n').unwrap_or(&header);
    let schema = Schema::parse(header).map_err(|msg| FormatError::Parse { line: 1, msg })?;
    if let Some(exp) = expected {
        if *exp != schema {
            return Err(FormatError::SchemaMismatch { expected: exp.to_string(), found: schema.to_string() });
        }
    }
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 2;
        let raw: Vec<&str> = line.split(',').collect();
        if raw.len() != schema.len() {
            return Err(FormatError::Parse {
                line: lineno,
                msg: format!("expected {} fields, found {}", schema.len(), raw.len()),
            });
        }
        let fields = raw
            .iter()
            .zip(&schema.columns)
            .map(|(v, c)| parse_field(v, c.ty))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|msg| FormatError::Parse { line: lineno, msg })?;
        rows.push((lineno, fields));
    }
    Ok(Table { schema, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn schema() -> Schema {
        Schema::parse("id:int,v:float,label:text").unwrap()
    }

    fn write(rows: &[Vec<Field>]) -> Vec<u8> {
        let mut w = TableWriter::new(Vec::new(), &schema()).unwrap();
        for r in rows {
            w.write_row(r).unwrap();
        }
        w.finish().unwrap()
    }

    #[test]
    fn exact_bytes() {
        let bytes = write(&[
            vec![Field::Int(1), Field::Float(0.1), Field::Text("a,b%c\nd".into())],
            vec![Field::Int(-2), Field::Float(1e-300), Field::Text(String::new())],
            vec![Field::Int(3), Field::Float(f64::NAN), Field::Text("x".into())],
        ]);
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "id:int,v:float,label:text\n1,0.1,a%2Cb%25c%0Ad\n-2,1e-300,\n3,NaN,x\n"
        );
        let empty = write(&[]);
        assert_eq!(empty, b"id:int,v:float,label:text\n");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let src = "id:int,v:float,label:text\n1,2.0,x\n2,oops,y\n";
        assert_eq!(
            read_table(src.as_bytes(), None),
            Err(FormatError::Parse { line: 3, msg: "`oops` is not a float".into() })
        );
        let src = "id:int,v:float,label:text\n1,2.0\n";
        assert!(matches!(read_table(src.as_bytes(), None), Err(FormatError::Parse { line: 2, .. })));
        let src = "id:int,w:float,label:text\n";
        assert!(matches!(read_table(src.as_bytes(), Some(&schema())), Err(FormatError::SchemaMismatch { .. })));
        assert!(matches!(read_table(&b""[..], None), Err(FormatError::Parse { line: 1, .. })));
        assert!(matches!(read_table(&b"id:blob\n"[..], None), Err(FormatError::Parse { line: 1, .. })));
    }

    #[test]
    fn adversarial_floats_round_trip_bitwise() {
        let vals = [
            0.1,
            1e-300,
            -0.0,
            f64::MIN_POSITIVE,
            5e-324,
            f64::MAX,
            f64::from_bits(0.1f64.to_bits() + 1),
            f64::from_bits(1.0f64.to_bits() - 1),
            f64::INFINITY,
            f64::NEG_INFINITY,
        ];
        let rows: Vec<_> =
            vals.iter().map(|&v| vec![Field::Int(0), Field::Float(v), Field::Text("t".into())]).collect();
        let t = read_table(&write(&rows)[..], Some(&schema())).unwrap();
        for ((_, r), v) in t.rows.iter().zip(vals) {
            assert_eq!(r[1].as_float().to_bits(), v.to_bits());
        }
    }

    proptest! {
        #[test]
        fn rows_round_trip(bits in prop::collection::vec(any::<u64>(), 0..20), text in "\\PC{0,12}", id in any::<i64>()) {
            let rows: Vec<_> = bits
                .iter()
                .map(|&b| vec![Field::Int(id), Field::Float(f64::from_bits(b)), Field::Text(text.clone())])
                .collect();
            let bytes = write(&rows);
            let t = read_table(&bytes[..], Some(&schema())).unwrap();
            prop_assert_eq!(t.rows.len(), rows.len());
            for ((_, got), want) in t.rows.iter().zip(&rows) {
                prop_assert_eq!(got[0].as_int(), id);
                let (g, w) = (got[1].as_float(), want[1].as_float());
                prop_assert!(g.to_bits() == w.to_bits() || (g.is_nan() && w.is_nan()));
                prop_assert_eq!(got[2].as_text(), text.as_str());
            }
        }
    }
}
