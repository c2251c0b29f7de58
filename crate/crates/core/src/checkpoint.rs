//! Plain-text grid files for learned kernels and reference probes.
//!
//! Both formats are line oriented:
//!
//! ```text
//! format lmm-kernels 1        | format lmm-probe 1
//! width 7                     | beta 0.4
//! height 7                    | c 50.0
//! ceiling 256.0               | ceiling 256.0
//! heights                     | width 7
//! <height rows of width reals>| height 7
//! mask_logits                 | heights
//! <height rows of width reals>| <rows>
//!                             | mask
//!                             | <rows of 0/1>
//! ```
//!
//! Reals are written in Rust's shortest round-trip notation, so a reload is
//! bit-exact. Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dataset::{write_atomic, ReferenceProbe, REFERENCE_WINDOW};
use crate::error::{Error, Result};
use crate::layer::KernelPair;

const KERNEL_FORMAT: &str = "lmm-kernels 1";
const PROBE_FORMAT: &str = "lmm-probe 1";

/// Kernels plus the ceiling they were trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kernels: KernelPair,
    pub ceiling: f64,
}

fn write_grid<T>(out: &mut String, name: &str, width: usize, values: &[T], fmt: impl Fn(&T) -> String) {
    let _ = writeln!(out, "{name}");
    for row in values.chunks(width) {
        let line: Vec<String> = row.iter().map(&fmt).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
}

struct Lines<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let mut offset = 0;
        let mut lines = Vec::new();
        for raw in text.split_inclusive('\n') {
            let line = raw.trim();
            if !line.is_empty() && !line.starts_with('#') {
                lines.push((offset, line));
            }
            offset += raw.len();
        }
        Lines { lines, pos: 0 }
    }

    fn offset(&self) -> usize {
        self.lines.get(self.pos).map_or_else(
            || self.lines.last().map_or(0, |(o, l)| o + l.len()),
            |(o, _)| *o,
        )
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let item = self
            .lines
            .get(self.pos)
            .copied()
            .ok_or_else(|| Error::parse(self.offset(), format!("unexpected end of file, expected {what}")))?;
        self.pos += 1;
        Ok(item)
    }

    fn value(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (offset, line) = self.next(key)?;
        match line.split_once(char::is_whitespace) {
            Some((k, v)) if k == key => Ok((offset, v.trim())),
            _ => Err(Error::parse(offset, format!("expected `{key} <value>`, got `{line}`"))),
        }
    }

    fn number<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (offset, v) = self.value(key)?;
        v.parse()
            .map_err(|_| Error::parse(offset, format!("invalid {key} `{v}`")))
    }

    fn grid<T>(&mut self, name: &str, width: usize, height: usize, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
        let (offset, line) = self.next(name)?;
        if line != name {
            return Err(Error::parse(offset, format!("expected `{name}`, got `{line}`")));
        }
        let mut values = Vec::with_capacity(width * height);
        for _ in 0..height {
            let (offset, line) = self.next("grid row")?;
            let row: Vec<&str> = line.split_whitespace().collect();
            if row.len() != width {
                return Err(Error::parse(offset, format!("row has {} values, expected {width}", row.len())));
            }
            for token in row {
                values.push(parse(token).ok_or_else(|| Error::parse(offset, format!("invalid entry `{token}`")))?);
            }
        }
        Ok(values)
    }

    fn finish(&self) -> Result<()> {
        match self.lines.get(self.pos) {
            Some((offset, line)) => Err(Error::parse(*offset, format!("unexpected trailing line `{line}`"))),
            None => Ok(()),
        }
    }
}

fn check_format(lines: &mut Lines<'_>, expected: &str) -> Result<()> {
    let (offset, v) = lines.value("format")?;
    if v != expected {
        return Err(Error::parse(offset, format!("unsupported format `{v}`, expected `{expected}`")));
    }
    Ok(())
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let k = &self.kernels;
        let mut out = format!(
            "format {KERNEL_FORMAT}\nwidth {}\nheight {}\nceiling {:?}\n",
            k.width(),
            k.height(),
            self.ceiling
        );
        write_grid(&mut out, "heights", k.width(), &k.heights, |v| format!("{v:?}"));
        write_grid(&mut out, "mask_logits", k.width(), &k.mask_logits, |v| format!("{v:?}"));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        check_format(&mut lines, KERNEL_FORMAT)?;
        let width: usize = lines.number("width")?;
        let height: usize = lines.number("height")?;
        let ceiling: f64 = lines.number("ceiling")?;
        let heights = lines.grid("heights", width, height, |t| t.parse().ok())?;
        let mask_logits = lines.grid("mask_logits", width, height, |t| t.parse().ok())?;
        lines.finish()?;
        Ok(Checkpoint {
            kernels: KernelPair::new(width, height, heights, mask_logits)?,
            ceiling,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_text().as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Checkpoint::from_text(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

pub fn probe_to_text(probe: &ReferenceProbe) -> String {
    let mut out = format!(
        "format {PROBE_FORMAT}\nbeta {:?}\nc {:?}\nceiling {:?}\nwidth {REFERENCE_WINDOW}\nheight {REFERENCE_WINDOW}\n",
        probe.beta, probe.c, probe.ceiling
    );
    write_grid(&mut out, "heights", REFERENCE_WINDOW, &probe.heights, |v| format!("{v:?}"));
    write_grid(&mut out, "mask", REFERENCE_WINDOW, &probe.mask, |&s| u8::from(s).to_string());
    out
}

pub fn probe_from_text(text: &str) -> Result<ReferenceProbe> {
    let mut lines = Lines::new(text);
    check_format(&mut lines, PROBE_FORMAT)?;
    let beta: f64 = lines.number("beta")?;
    let c: f64 = lines.number("c")?;
    let ceiling: f64 = lines.number("ceiling")?;
    let width: usize = lines.number("width")?;
    let height: usize = lines.number("height")?;
    if width != REFERENCE_WINDOW || height != REFERENCE_WINDOW {
        return Err(Error::InvalidValue(format!(
            "reference probes are {REFERENCE_WINDOW}x{REFERENCE_WINDOW}, got {width}x{height}"
        )));
    }
    let heights = lines.grid("heights", width, height, |t| t.parse().ok())?;
    let mask = lines.grid("mask", width, height, |t| match t {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    })?;
    lines.finish()?;
    if !mask.iter().any(|&s| s) {
        return Err(Error::EmptySupport);
    }
    Ok(ReferenceProbe {
        beta,
        c,
        ceiling,
        heights,
        mask,
    })
}

pub fn save_probe(path: impl AsRef<Path>, probe: &ReferenceProbe) -> Result<()> {
    write_atomic(path.as_ref(), probe_to_text(probe).as_bytes())
}

pub fn load_probe(path: impl AsRef<Path>) -> Result<ReferenceProbe> {
    let path = path.as_ref();
    probe_from_text(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}
