//! Loading input files with messages that name the file, the field and,
//! for malformed JSON, the byte offset.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use csp_core::{fixtures, io, Composition, Error, ForceField, Structure, UnitCell};

/// Exit status classes of the command-line contract.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or unreadable input: exit code 2.
    Usage(String),
    /// Anything that goes wrong after the inputs were accepted: exit code 1.
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Failure {
        Failure::Runtime(format!("{e:#}"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::Runtime(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

/// Message for a failed parse of `text` read from `path`.
pub fn describe(path: &Path, text: &str, err: &Error) -> String {
    match err {
        Error::Json(e) if e.line() > 0 => {
            let offset = io::byte_offset(text, e.line(), e.column());
            format!("{}: invalid JSON at byte {offset}: {e}", path.display())
        }
        Error::Schema { field, message } => {
            format!("{}: field `{field}`: {message}", path.display())
        }
        other => format!("{}: {other}", path.display()),
    }
}

fn load<T>(path: &Path, parse: impl Fn(&str) -> csp_core::Result<T>) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| Failure::Usage(describe(path, &text, &e)))
}

pub fn structure(path: &Path) -> CliResult<Structure> {
    load(path, io::parse_structure)
}

/// The bundled table when `path` is `None`.
pub fn forcefield(path: Option<&Path>) -> CliResult<ForceField> {
    match path {
        Some(p) => load(p, io::parse_forcefield),
        None => Ok(fixtures::table6()),
    }
}

/// A bundled composition name (`srtio3`, `y2ti2o7`) or a composition file.
pub fn composition(name_or_path: &str, base: &Path) -> CliResult<Composition> {
    match name_or_path {
        "srtio3" => Ok(fixtures::srtio3_composition(1)),
        "y2ti2o7" => Ok(fixtures::y2ti2o7_composition(1)),
        path => load(&resolve(base, path), io::parse_composition),
    }
}

pub fn resolve(base: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Cubic cell at the perovskite ion density (11.91 Å³ per ion).
pub fn default_cell(composition: &Composition) -> UnitCell {
    let per_ion = fixtures::SRTIO3_LATTICE.powi(3) / 5.0;
    let side = (per_ion * composition.site_count() as f64).cbrt();
    UnitCell::cubic(side).expect("positive length")
}

/// `a,b,c` or `a,b,c,alpha,beta,gamma`.
pub fn parse_cell(spec: &str) -> CliResult<UnitCell> {
    let values: Vec<f64> = spec
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Usage(format!("--cell: {e}")))?;
    let (lengths, angles) = match values.as_slice() {
        [a, b, c] => ([*a, *b, *c], [90.0; 3]),
        [a, b, c, al, be, ga] => ([*a, *b, *c], [*al, *be, *ga]),
        _ => return Err(Failure::Usage("--cell takes 3 or 6 comma-separated numbers".into())),
    };
    UnitCell::new(lengths, angles).map_err(|e| Failure::Usage(format!("--cell: {e}")))
}
