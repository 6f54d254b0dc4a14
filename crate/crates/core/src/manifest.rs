//! Dataset manifest: `image,processed,type,x,y,d,theta` CSV, paths relative
//! to the manifest file, floats with 9 significant digits, LF endings.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::datagen::{Action, WrinkleType};
use crate::error::{Error, Result};

pub const MANIFEST_HEADER: &str = "image,processed,type,x,y,d,theta";

/// Formats like C's `%.9g`.
pub fn fmt_sig9(v: f64) -> String {
    fmt_sig(v, 9)
}

/// Formats like C's `%.<digits>g`: shortest of fixed or scientific notation
/// at `digits` significant digits, trailing zeros dropped.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    /// Raw scene PPM, relative to the manifest.
    pub image: String,
    /// Processed wrinkle PGM, relative to the manifest.
    pub processed: String,
    pub kind: WrinkleType,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub records: Vec<ManifestRecord>,
}

impl Manifest {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(MANIFEST_HEADER);
        out.push('\n');
        for r in &self.records {
            let a = r.action;
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.image,
                r.processed,
                r.kind,
                fmt_sig9(a.x),
                fmt_sig9(a.y),
                fmt_sig9(a.d),
                fmt_sig9(a.theta)
            )
            .expect("writing to a String");
        }
        out
    }

    /// Parses manifest CSV. Errors name the offending 1-based line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end_matches('\r') == MANIFEST_HEADER => {}
            _ => return Err(bad_line(1, format!("expected header {MANIFEST_HEADER:?}"))),
        }
        let mut records = Vec::new();
        for (i, line) in lines {
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(bad_line(i + 1, format!("expected 7 fields, found {}", fields.len())));
            }
            let kind = fields[2]
                .parse::<WrinkleType>()
                .map_err(|e| bad_line(i + 1, e.to_string()))?;
            let mut vals = [0.0; 4];
            for (v, f) in vals.iter_mut().zip(&fields[3..]) {
                *v = f
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad_line(i + 1, format!("bad number {f:?}")))?;
            }
            records.push(ManifestRecord {
                image: fields[0].to_string(),
                processed: fields[1].to_string(),
                kind,
                action: Action::from_array(vals),
            });
        }
        Ok(Manifest { records })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Manifest::parse(&text).map_err(|e| match e {
            Error::Format { what, msg } => Error::Format {
                what,
                msg: format!("{}:{msg}", path.display()),
            },
            other => other,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Resolves a record path against the manifest's directory.
    pub fn resolve(manifest_path: &Path, rel: &str) -> PathBuf {
        manifest_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(rel)
    }
}

fn bad_line(line: usize, msg: String) -> Error {
    Error::Format {
        what: "manifest",
        msg: format!("line {line}: {msg}"),
    }
}
