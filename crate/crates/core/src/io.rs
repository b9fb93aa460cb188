//! Space files (text and binary), generator metadata sidecars, and JSON
//! output with fixed 17-significant-digit reals.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::space::MetricMeasureSpace;

pub const BINARY_MAGIC: &[u8; 4] = b"EMB1";

/// Text layout: `m n inj`, then the `m` weights on one line, then the `m`
/// rows of the distance matrix.
pub fn write_space_text(space: &MetricMeasureSpace, mut w: impl Write) -> io::Result<()> {
    let m = space.len();
    writeln!(w, "{} {} {}", m, space.dim(), space.inj())?;
    write_row(&mut w, space.weights())?;
    for i in 0..m {
        write_row(&mut w, space.row(i))?;
    }
    w.flush()
}

fn write_row(w: &mut impl Write, values: &[f64]) -> io::Result<()> {
    let mut first = true;
    for v in values {
        if !first {
            w.write_all(b" ")?;
        }
        first = false;
        write!(w, "{v}")?;
    }
    w.write_all(b"\n")
}

pub fn parse_space_text(text: &str) -> Result<MetricMeasureSpace> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or_else(|| Error::parse(1, "empty space file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::parse(ln, "header must be \"m n inj\""));
    }
    let m: usize = fields[0]
        .parse()
        .map_err(|_| Error::parse(ln, format!("bad point count {:?}", fields[0])))?;
    let n: usize = fields[1]
        .parse()
        .map_err(|_| Error::parse(ln, format!("bad dimension {:?}", fields[1])))?;
    let inj: f64 = fields[2]
        .parse()
        .map_err(|_| Error::parse(ln, format!("bad injectivity radius {:?}", fields[2])))?;

    let mut read_row = |what: &str| -> Result<Vec<f64>> {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| Error::parse(0, format!("unexpected end of file reading {what}")))?;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse()
                    .map_err(|_| Error::parse(ln, format!("bad number {tok:?}")))
            })
            .collect::<Result<_>>()?;
        if row.len() != m {
            return Err(Error::parse(ln, format!("{what} has {} entries, expected {m}", row.len())));
        }
        Ok(row)
    };
    let weight = read_row("weights")?;
    let mut dist = Vec::with_capacity(m * m);
    for i in 0..m {
        dist.extend(read_row(&format!("distance row {i}"))?);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::parse(ln, "trailing data after the distance matrix"));
    }
    MetricMeasureSpace::new(n, inj, dist, weight)
}

/// Binary layout, little-endian: magic `EMB1`, `u64 m`, `u64 n`, `f64 inj`,
/// `m` weights, then the distance matrix row-major.
pub fn write_space_binary(space: &MetricMeasureSpace, mut w: impl Write) -> io::Result<()> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&(space.len() as u64).to_le_bytes())?;
    w.write_all(&(space.dim() as u64).to_le_bytes())?;
    w.write_all(&space.inj().to_le_bytes())?;
    for v in space.weights().iter().chain(space.distances()) {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

pub fn parse_space_binary(bytes: &[u8]) -> Result<MetricMeasureSpace> {
    let bad = |msg: &str| Error::MalformedSpace(format!("binary space file: {msg}"));
    if bytes.len() < 28 || &bytes[..4] != BINARY_MAGIC {
        return Err(bad("missing EMB1 header"));
    }
    let u64_at = |off: usize| u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    let m = usize::try_from(u64_at(4)).map_err(|_| bad("point count overflows"))?;
    let n = usize::try_from(u64_at(12)).map_err(|_| bad("dimension overflows"))?;
    let inj = f64::from_le_bytes(bytes[20..28].try_into().unwrap());
    let count = m
        .checked_mul(m)
        .and_then(|mm| mm.checked_add(m))
        .ok_or_else(|| bad("point count overflows"))?;
    let body = &bytes[28..];
    if body.len() != count * 8 {
        return Err(bad(&format!(
            "expected {} payload bytes for m = {m}, found {}",
            count * 8,
            body.len()
        )));
    }
    let mut values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let weight: Vec<f64> = values.by_ref().take(m).collect();
    let dist: Vec<f64> = values.collect();
    MetricMeasureSpace::new(n, inj, dist, weight)
}

/// Reads either format, sniffing the binary magic.
pub fn read_space(path: &Path) -> Result<MetricMeasureSpace> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(BINARY_MAGIC) {
        parse_space_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::MalformedSpace("space file is neither EMB1 nor UTF-8 text".into()))?;
        parse_space_text(&text)
    }
}

/// Ground-truth sidecar written next to generated space files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceMetadata {
    pub generator: String,
    pub m: usize,
    pub n: usize,
    pub inj: f64,
    pub vol: f64,
    pub betti: Option<Vec<usize>>,
}

impl SpaceMetadata {
    pub fn describe(generator: &str, space: &MetricMeasureSpace) -> Self {
        Self {
            generator: generator.to_string(),
            m: space.len(),
            n: space.dim(),
            inj: space.inj(),
            vol: space.volume(),
            betti: space.truth().map(<[usize]>::to_vec),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::parse(e.line(), e.to_string()))
    }
}

/// Pretty JSON formatter that writes every float with 17 significant digits
/// in scientific notation, so identical values always print identically.
pub struct FixedDigitsFormatter {
    inner: PrettyFormatter<'static>,
}

impl Default for FixedDigitsFormatter {
    fn default() -> Self {
        Self {
            inner: PrettyFormatter::with_indent(b"  "),
        }
    }
}

impl Formatter for FixedDigitsFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigitsFormatter::default());
    value
        .serialize(&mut ser)
        .expect("report types serialize without error");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}
