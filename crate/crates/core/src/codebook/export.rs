//! On-disk codebook formats.
//!
//! CSV: a `# bdris-codebook G=.. M_bar=.. T=.. kind=..` comment, a column
//! header, then one row per slot: the zero-based slot index followed by the
//! `G*Mbar^2` entries of that column as interleaved `re,im` pairs. Values are
//! written in shortest round-trip form, so reading back is lossless.
//!
//! Binary (all integers and floats little-endian):
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `BDCB`                            |
//! | 4      | 4    | format version (u32, currently 1)       |
//! | 8      | 4    | G (u32)                                 |
//! | 12     | 4    | Mbar (u32)                              |
//! | 16     | 4    | T (u32)                                 |
//! | 20     | 4    | kind (u32: 0 dft, 1 hadamard, 2 random) |
//! | 24     | 16·GMbar²·T | column-major entries, each `re: f64, im: f64` |

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{BaseKind, CodebookError, GroupTopology, TrainingCodebook};
use crate::linalg::CMatrix;

pub const BINARY_MAGIC: [u8; 4] = *b"BDCB";
pub const BINARY_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

// Codebook files carry no antenna count; N is irrelevant to the training matrix.
const FILE_N_BS: usize = 1;

pub fn write_csv<W: Write>(cb: &TrainingCodebook, out: W) -> Result<(), CodebookError> {
    let mut w = BufWriter::new(out);
    let top = cb.topology();
    writeln!(
        w,
        "# bdris-codebook G={} M_bar={} T={} kind={}",
        top.g(),
        top.m_bar(),
        cb.t_slots(),
        cb.kind()
    )?;
    write!(w, "t")?;
    for p in 0..top.t_min() {
        write!(w, ",re_{p},im_{p}")?;
    }
    writeln!(w)?;
    for t in 0..cb.t_slots() {
        write!(w, "{t}")?;
        for z in cb.phi_hat().column(t) {
            write!(w, ",{:?},{:?}", z.re, z.im)?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<TrainingCodebook, CodebookError> {
    let mut lines = BufReader::new(input).lines();
    let meta = lines
        .next()
        .ok_or_else(|| CodebookError::Format("empty CSV".into()))??;
    let meta = meta
        .strip_prefix("# bdris-codebook")
        .ok_or_else(|| CodebookError::Format("missing `# bdris-codebook` metadata line".into()))?;
    let (mut g, mut m_bar, mut t, mut kind) = (None, None, None, None);
    for field in meta.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| CodebookError::Format(format!("bad metadata field `{field}`")))?;
        match key {
            "G" => g = Some(parse_usize(value)?),
            "M_bar" => m_bar = Some(parse_usize(value)?),
            "T" => t = Some(parse_usize(value)?),
            "kind" => kind = Some(value.parse::<BaseKind>().map_err(CodebookError::Format)?),
            _ => {}
        }
    }
    let missing = |name: &str| CodebookError::Format(format!("metadata lacks {name}"));
    let (g, m_bar, t, kind) = (
        g.ok_or_else(|| missing("G"))?,
        m_bar.ok_or_else(|| missing("M_bar"))?,
        t.ok_or_else(|| missing("T"))?,
        kind.ok_or_else(|| missing("kind"))?,
    );
    let top = GroupTopology::new(FILE_N_BS, g, m_bar)?;
    let rows = top.t_min();

    lines
        .next()
        .ok_or_else(|| CodebookError::Format("missing column header".into()))??;
    let mut data = Vec::with_capacity(rows * t);
    let mut seen = 0;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let slot = parse_usize(fields.next().unwrap_or_default())?;
        if slot != seen {
            return Err(CodebookError::Format(format!("expected slot {seen}, found {slot}")));
        }
        let values: Vec<f64> = fields.map(parse_f64).collect::<Result<_, _>>()?;
        if values.len() != 2 * rows {
            return Err(CodebookError::Format(format!(
                "slot {slot}: expected {} values, found {}",
                2 * rows,
                values.len()
            )));
        }
        data.extend(values.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])));
        seen += 1;
    }
    if seen != t {
        return Err(CodebookError::Format(format!("expected {t} slots, found {seen}")));
    }
    TrainingCodebook::from_matrix(top, kind, CMatrix::from_column_major(rows, t, data)?)
}

pub fn write_binary<W: Write>(cb: &TrainingCodebook, out: W) -> Result<(), CodebookError> {
    let mut w = BufWriter::new(out);
    let top = cb.topology();
    w.write_all(&BINARY_MAGIC)?;
    for field in [
        BINARY_VERSION,
        to_u32(top.g())?,
        to_u32(top.m_bar())?,
        to_u32(cb.t_slots())?,
        cb.kind().code(),
    ] {
        w.write_all(&field.to_le_bytes())?;
    }
    for z in cb.phi_hat().as_slice() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<TrainingCodebook, CodebookError> {
    let mut header = [0u8; HEADER_LEN];
    input.read_exact(&mut header)?;
    if header[..4] != BINARY_MAGIC {
        return Err(CodebookError::Format("bad magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(header[4 * i..4 * i + 4].try_into().expect("4-byte field"));
    let version = word(1);
    if version != BINARY_VERSION {
        return Err(CodebookError::Format(format!("unsupported version {version}")));
    }
    let (g, m_bar, t) = (word(2) as usize, word(3) as usize, word(4) as usize);
    let kind =
        BaseKind::from_code(word(5)).ok_or_else(|| CodebookError::Format(format!("unknown kind {}", word(5))))?;
    let top = GroupTopology::new(FILE_N_BS, g, m_bar)?;
    let rows = top.t_min();

    let mut payload = Vec::new();
    input.read_to_end(&mut payload)?;
    let expected = rows * t * 16;
    if payload.len() != expected {
        return Err(CodebookError::Format(format!(
            "payload is {} bytes, expected {expected}",
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    TrainingCodebook::from_matrix(top, kind, CMatrix::from_column_major(rows, t, data)?)
}

/// Reads either format, sniffing the binary magic.
pub fn read_codebook(path: &Path) -> Result<TrainingCodebook, CodebookError> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(&BINARY_MAGIC) {
        read_binary(bytes.as_slice())
    } else {
        read_csv(bytes.as_slice())
    }
}

fn to_u32(v: usize) -> Result<u32, CodebookError> {
    u32::try_from(v).map_err(|_| CodebookError::Format(format!("{v} does not fit the binary header")))
}

fn parse_usize(s: &str) -> Result<usize, CodebookError> {
    s.trim()
        .parse()
        .map_err(|_| CodebookError::Format(format!("expected an integer, found `{s}`")))
}

fn parse_f64(s: &str) -> Result<f64, CodebookError> {
    s.trim()
        .parse()
        .map_err(|_| CodebookError::Format(format!("expected a number, found `{s}`")))
}
