use std::fs;
use std::io::Write;

use serde::Serialize;

use phasebc::{fmt17, Result};

use crate::{Common, Format};

/// Writes `text` to `--out` or stdout.
pub fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Renders either the text form or a single JSON document.
pub fn render<T: Serialize>(common: &Common, value: &T, text: impl FnOnce() -> String) -> Result<String> {
    Ok(match common.format {
        Format::Text => text(),
        Format::Structured => {
            let mut s = serde_json::to_string_pretty(value).map_err(|e| phasebc::Error::Numerical(e.to_string()))?;
            s.push('\n');
            s
        }
    })
}

/// `key = value` lines.
#[derive(Default)]
pub struct KeyValues(String);

impl KeyValues {
    pub fn float(&mut self, key: &str, v: f64) -> &mut Self {
        self.raw(key, &fmt17(v))
    }

    pub fn raw(&mut self, key: &str, v: &dyn std::fmt::Display) -> &mut Self {
        self.0.push_str(&format!("{key} = {v}\n"));
        self
    }

    pub fn finish(&mut self) -> String {
        std::mem::take(&mut self.0)
    }
}
