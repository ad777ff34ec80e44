//! Deterministic CSV assembly. Floats carry 12 significant digits in
//! scientific notation, rows end in LF, and every file opens with a units
//! comment, so repeated identical runs produce byte-identical output.

use otto_heom::Error;

pub const UNITS_HEADER: &str = "# units: omega_h = 1";

pub fn f(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        (if x > 0.0 { "inf" } else { "-inf" }).into()
    } else {
        format!("{:.11e}", x)
    }
}

pub fn b(x: bool) -> String {
    (if x { "true" } else { "false" }).into()
}

/// Quote a free-text cell: newlines flattened, inner quotes doubled.
pub fn quote(s: &str) -> String {
    let flat: String = s
        .chars()
        .map(|c| if c == '\n' || c == '\r' { ' ' } else { c })
        .collect();
    format!("\"{}\"", flat.replace('"', "\"\""))
}

/// One output row. Failed points keep their full set of filler cells so the
/// column count never varies within a file.
pub struct Row {
    pub cells: Vec<String>,
    /// `(axis value, error)` when the point failed.
    pub err: Option<(f64, Error)>,
}

impl Row {
    pub fn ok(cells: Vec<String>) -> Self {
        Row { cells, err: None }
    }

    pub fn failed(cells: Vec<String>, value: f64, err: Error) -> Self {
        Row {
            cells,
            err: Some((value, err)),
        }
    }
}

/// A failed point surfaced in strict mode, with enough context for the
/// machine-readable error record.
#[derive(Debug)]
pub struct PointFailure {
    pub axis: &'static str,
    pub value: f64,
    pub index: usize,
    pub error: Error,
}

/// Join rows under `header`. In strict mode the first failed point aborts
/// the table; otherwise an `error` column is appended (only when some row
/// actually failed, keeping clean runs at the documented header) and failed
/// rows carry the quoted message there.
pub fn assemble(
    header: &str,
    rows: Vec<Row>,
    strict: bool,
    axis: &'static str,
) -> Result<String, PointFailure> {
    if strict {
        for (index, row) in rows.iter().enumerate() {
            if let Some((value, error)) = &row.err {
                return Err(PointFailure {
                    axis,
                    value: *value,
                    index,
                    error: error.clone(),
                });
            }
        }
    }
    let any_err = rows.iter().any(|r| r.err.is_some());
    let mut out = String::new();
    out.push_str(UNITS_HEADER);
    out.push('\n');
    out.push_str(header);
    if any_err {
        out.push_str(",error");
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row.cells.join(","));
        if any_err {
            out.push(',');
            if let Some((_, e)) = &row.err {
                out.push_str(&quote(&e.to_string()));
            }
        }
        out.push('\n');
    }
    Ok(out)
}
