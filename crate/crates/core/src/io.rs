//! File formats.
//!
//! * Float images: one ASCII header line `MDFLOAT32 <side> <min> <max>`
//!   followed by `side * side` little-endian `f32` values, row-major.
//! * PGM: 8-bit binary export (affine rescale of min..max onto 0..255) and a
//!   reader for plain and binary grayscale PGM.
//! * CSV with a header row, one row per iteration or grid point.
//! * Summary records: `key = value` lines in insertion order.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::analysis::{RadialSpectrum, SweepCurve};
use crate::error::{Error, Result};
use crate::sampler::ChainRecord;
use crate::spectral::Image;

const MAGIC: &str = "MDFLOAT32";

pub fn encode_image(img: &Image) -> Vec<u8> {
    let (lo, hi) = img.min_max();
    let mut out = format!("{MAGIC} {} {lo} {hi}\n", img.side()).into_bytes();
    out.reserve(4 * img.len());
    for v in img.data() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    let nl = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| Error::Format("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::Format("header is not text".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != MAGIC {
        return Err(Error::Format(format!("bad header {header:?}")));
    }
    let side: usize = fields[1].parse().map_err(|_| Error::Format(format!("bad side {:?}", fields[1])))?;
    let body = &bytes[nl + 1..];
    if body.len() != 4 * side * side {
        return Err(Error::Format(format!("expected {} data bytes, found {}", 4 * side * side, body.len())));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Image::new(side, data)
}

pub fn write_image(path: &Path, img: &Image) -> Result<()> {
    fs::write(path, encode_image(img))?;
    Ok(())
}

pub fn read_image(path: &Path) -> Result<Image> {
    decode_image(&fs::read(path)?)
}

/// 8-bit binary PGM, min..max mapped onto 0..255.
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let (lo, hi) = img.min_max();
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n{} {}\n255\n", img.side(), img.side()).into_bytes();
    out.extend(img.data().iter().map(|v| ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8));
    out
}

pub fn write_pgm(path: &Path, img: &Image) -> Result<()> {
    fs::write(path, encode_pgm(img))?;
    Ok(())
}

/// Reads a square grayscale PGM (P2 or P5, 8 or 16 bit) as raw gray levels.
pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0;
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad PGM field {s:?}")));
    let (w, h, maxval) = (num(&tokens[1])?, num(&tokens[2])?, num(&tokens[3])?);
    if w != h {
        return Err(Error::InvalidImage(format!("{w}x{h} image is not square")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("bad PGM maxval {maxval}")));
    }
    let n = w * h;
    let data: Vec<f64> = match tokens[0].as_str() {
        "P5" => {
            let body = &bytes[(pos + 1).min(bytes.len())..];
            let bpp = if maxval < 256 { 1 } else { 2 };
            if body.len() < n * bpp {
                return Err(Error::Format("truncated PGM data".into()));
            }
            if bpp == 1 {
                body[..n].iter().map(|b| *b as f64).collect()
            } else {
                body[..2 * n].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64).collect()
            }
        }
        "P2" => {
            let text = String::from_utf8_lossy(&bytes[pos..]);
            let vals = text
                .split_whitespace()
                .take(n)
                .map(|t| t.parse::<f64>().map_err(|_| Error::Format(format!("bad PGM value {t:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != n {
                return Err(Error::Format("truncated PGM data".into()));
            }
            vals
        }
        m => return Err(Error::Format(format!("unsupported PGM magic {m:?}"))),
    };
    Image::new(w, data)
}

pub fn read_pgm(path: &Path) -> Result<Image> {
    decode_pgm(&fs::read(path)?)
}

/// Reads either format, chosen by the leading magic.
pub fn read_any_image(path: &Path) -> Result<Image> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(MAGIC.as_bytes()) {
        decode_image(&bytes)
    } else {
        decode_pgm(&bytes)
    }
}

pub fn chains_csv(chains: &ChainRecord) -> String {
    let mut s = String::from("iteration,gamma_eps,gamma_0,gamma_1,w_alpha,w_beta,phi,accept_w_alpha,accept_w_beta,accept_phi,convergence\n");
    // the statistic exists from the second retained sample on
    let offset = chains.len() - chains.convergence.len();
    for k in 0..chains.len() {
        let _ = write!(s, "{},{},{},{}", k, chains.gamma_eps[k], chains.gamma_0[k], chains.gamma_1[k]);
        match chains.w.get(k) {
            Some(w) => {
                let a = chains.accepted[k];
                let _ = write!(s, ",{},{},{},{},{},{}", w.w_alpha, w.w_beta, w.phi, a[0] as u8, a[1] as u8, a[2] as u8);
            }
            None => s.push_str(",,,,,,"),
        }
        match k.checked_sub(offset).and_then(|j| chains.convergence.get(j)) {
            Some(c) => {
                let _ = writeln!(s, ",{c}");
            }
            None => s.push_str(",\n"),
        }
    }
    s
}

pub fn curve_csv(curve: &SweepCurve) -> String {
    let mut s = format!("{},error\n", curve.param.name());
    for (v, e) in curve.values.iter().zip(&curve.errors) {
        let _ = writeln!(s, "{v},{e}");
    }
    s
}

/// Spectra sharing one binning, written side by side.
pub fn spectra_csv(columns: &[(&str, &RadialSpectrum)]) -> Result<String> {
    let first = columns.first().ok_or_else(|| Error::Format("no spectra".into()))?.1;
    if columns.iter().any(|(_, r)| r.frequencies != first.frequencies) {
        return Err(Error::Format("spectra use different frequency bins".into()));
    }
    let mut s = String::from("frequency");
    for (name, _) in columns {
        let _ = write!(s, ",{name}");
    }
    s.push('\n');
    for (i, f) in first.frequencies.iter().enumerate() {
        let _ = write!(s, "{f}");
        for (_, r) in columns {
            let _ = write!(s, ",{}", r.power[i]);
        }
        s.push('\n');
    }
    Ok(s)
}

/// Ordered `key = value` record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record {
    pub entries: Vec<(String, String)>,
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        let v = self.get(key).ok_or_else(|| Error::Format(format!("missing key {key:?}")))?;
        v.parse().map_err(|_| Error::Format(format!("{key}: bad number {v:?}")))
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut r = Record::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Format(format!("bad record line {line:?}")))?;
            r.push(k.trim(), v.trim());
        }
        Ok(r)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}
