//! Channel file formats.
//!
//! Binary (`.sich`), little-endian:
//!
//! ```text
//! b"SICH" | version: u16 | M_u: u32 | M_d: u32 | N: u32
//! N × f64 frequencies (Hz, ascending)
//! M_u × M_d × N × (re: f64, im: f64), row-major [rx][tx][freq]
//! ```
//!
//! CSV: header `rx,tx,freq_hz,re,im`, one line per tensor entry.
//!
//! Neither format records the element grid. On load a square element count
//! becomes a square layout and anything else a `M × 1` line; use
//! [`SiChannel::with_layouts`] to relabel.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SiChannel;
use crate::error::{Error, Result};
use crate::geometry::ArrayLayout;

const MAGIC: &[u8; 4] = b"SICH";
const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelFormat {
    Binary,
    Csv,
}

impl ChannelFormat {
    /// `.csv` files are CSV; everything else is the binary container.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::Binary,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn save_channel(ch: &SiChannel, path: &Path, format: ChannelFormat) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    match format {
        ChannelFormat::Binary => write_binary(ch, &mut w).map_err(io_err(path))?,
        ChannelFormat::Csv => write_csv(ch, &mut w)?,
    }
    w.flush().map_err(io_err(path))
}

pub fn load_channel(path: &Path, format: ChannelFormat) -> Result<SiChannel> {
    let file = File::open(path).map_err(io_err(path))?;
    let r = BufReader::new(file);
    match format {
        ChannelFormat::Binary => read_binary(r),
        ChannelFormat::Csv => read_csv(r),
    }
}

pub fn write_binary<W: Write>(ch: &SiChannel, mut w: W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for dim in [ch.n_rx(), ch.n_tx(), ch.n_freqs()] {
        let dim = u32::try_from(dim).map_err(|_| {
            std::io::Error::new(std::io::ErrorKind::InvalidInput, "dimension exceeds u32")
        })?;
        w.write_all(&dim.to_le_bytes())?;
    }
    for f in ch.freqs_hz() {
        w.write_all(&f.to_le_bytes())?;
    }
    for h in ch.data() {
        w.write_all(&h.re.to_le_bytes())?;
        w.write_all(&h.im.to_le_bytes())?;
    }
    Ok(())
}

/// Infers an element grid from a bare element count.
fn default_layout(m: usize) -> Result<ArrayLayout> {
    let side = (m as f64).sqrt().round() as usize;
    if side * side == m {
        ArrayLayout::ura(side, side)
    } else {
        ArrayLayout::ura(m, 1)
    }
}

fn f64_at(buf: &[u8], offset: usize) -> f64 {
    f64::from_le_bytes(buf[offset..offset + 8].try_into().unwrap())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<SiChannel> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|e| Error::MalformedFile(format!("short header: {e}")))?;
    if &header[..4] != MAGIC {
        return Err(Error::MalformedFile(format!(
            "bad magic {:?}",
            String::from_utf8_lossy(&header[..4])
        )));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != VERSION {
        return Err(Error::MalformedFile(format!(
            "unsupported version {version}"
        )));
    }
    let dim = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap()) as usize;
    let (m_u, m_d, n) = (dim(6), dim(10), dim(14));
    if m_u == 0 || m_d == 0 || n == 0 {
        return Err(Error::MalformedFile(format!(
            "zero dimension {m_u}x{m_d}x{n}"
        )));
    }

    let expected = m_u
        .checked_mul(m_d)
        .and_then(|x| x.checked_mul(n))
        .and_then(|x| x.checked_mul(16))
        .and_then(|x| x.checked_add(n * 8))
        .ok_or_else(|| Error::MalformedFile(format!("dimensions {m_u}x{m_d}x{n} overflow")))?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)
        .map_err(|e| Error::MalformedFile(format!("payload read failed: {e}")))?;
    if payload.len() != expected {
        return Err(Error::DimensionMismatch {
            context: "binary payload bytes",
            expected,
            actual: payload.len(),
        });
    }

    let freqs: Vec<f64> = (0..n).map(|i| f64_at(&payload, i * 8)).collect();
    let base = n * 8;
    let data = (0..m_u * m_d * n)
        .map(|i| {
            let o = base + i * 16;
            Complex64::new(f64_at(&payload, o), f64_at(&payload, o + 8))
        })
        .collect();
    SiChannel::new(default_layout(m_u)?, default_layout(m_d)?, freqs, data)
        .map_err(|e| Error::MalformedFile(e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    rx: usize,
    tx: usize,
    freq_hz: f64,
    re: f64,
    im: f64,
}

pub fn write_csv<W: Write>(ch: &SiChannel, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for rx in 0..ch.n_rx() {
        for tx in 0..ch.n_tx() {
            for (h, &freq_hz) in ch.series(rx, tx).iter().zip(ch.freqs_hz()) {
                wtr.serialize(CsvRow {
                    rx,
                    tx,
                    freq_hz,
                    re: h.re,
                    im: h.im,
                })?;
            }
        }
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<SiChannel> {
    let mut rdr = csv::Reader::from_reader(r);
    let header_ok = rdr
        .headers()?
        .iter()
        .map(str::trim)
        .eq(["rx", "tx", "freq_hz", "re", "im"]);
    if !header_ok {
        return Err(Error::MalformedFile(
            "CSV header must be rx,tx,freq_hz,re,im".into(),
        ));
    }
    let rows: Vec<CsvRow> = rdr.deserialize().collect::<Result<_, _>>()?;
    if rows.is_empty() {
        return Err(Error::MalformedFile("CSV has no entries".into()));
    }
    if let Some(row) = rows.iter().find(|r| !r.freq_hz.is_finite()) {
        return Err(Error::MalformedFile(format!(
            "non-finite frequency {}",
            row.freq_hz
        )));
    }

    let m_u = rows.iter().map(|r| r.rx).max().unwrap() + 1;
    let m_d = rows.iter().map(|r| r.tx).max().unwrap() + 1;
    let mut freqs: Vec<f64> = rows.iter().map(|r| r.freq_hz).collect();
    freqs.sort_by(f64::total_cmp);
    freqs.dedup();
    let n = freqs.len();

    let expected = m_u * m_d * n;
    if rows.len() != expected {
        return Err(Error::DimensionMismatch {
            context: "CSV entry count",
            expected,
            actual: rows.len(),
        });
    }
    let mut data: Vec<Option<Complex64>> = vec![None; expected];
    for row in &rows {
        let k = freqs.partition_point(|&f| f < row.freq_hz);
        let slot = &mut data[(row.rx * m_d + row.tx) * n + k];
        if slot.is_some() {
            return Err(Error::MalformedFile(format!(
                "duplicate entry rx={} tx={} freq_hz={}",
                row.rx, row.tx, row.freq_hz
            )));
        }
        *slot = Some(Complex64::new(row.re, row.im));
    }
    // Count matched and no duplicates, so every slot is filled.
    let data = data.into_iter().map(Option::unwrap).collect();
    SiChannel::new(default_layout(m_u)?, default_layout(m_d)?, freqs, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::linspace_hz;
    use proptest::prelude::*;

    fn random_channel(m_u: usize, m_d: usize, n: usize, seed: u64) -> SiChannel {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = (0..m_u * m_d * n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() * 1e-7))
            .collect();
        SiChannel::new(
            default_layout(m_u).unwrap(),
            default_layout(m_d).unwrap(),
            linspace_hz(3.49e9, 3.51e9, n),
            data,
        )
        .unwrap()
    }

    fn bits(ch: &SiChannel) -> Vec<u64> {
        ch.freqs_hz()
            .iter()
            .map(|f| f.to_bits())
            .chain(
                ch.data()
                    .iter()
                    .flat_map(|h| [h.re.to_bits(), h.im.to_bits()]),
            )
            .collect()
    }

    #[test]
    fn binary_round_trip_4x4x33() {
        let ch = random_channel(4, 4, 33, 7);
        let mut buf = Vec::new();
        write_binary(&ch, &mut buf).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 33 * 8 + 16 * 33 * 16);
        let back = read_binary(buf.as_slice()).unwrap();
        assert_eq!(bits(&back), bits(&ch));
        assert_eq!(back.rx_layout().to_string(), "2x2");
    }

    #[test]
    fn truncated_payload_is_dimension_mismatch() {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        for d in [64u32, 64, 1601] {
            buf.extend_from_slice(&d.to_le_bytes());
        }
        buf.extend_from_slice(&[0u8; 1000]);
        assert!(matches!(
            read_binary(buf.as_slice()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn binary_header_errors() {
        assert!(matches!(
            read_binary(&b"SIC"[..]),
            Err(Error::MalformedFile(_))
        ));
        let mut buf = Vec::new();
        write_binary(&random_channel(1, 1, 2, 1), &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            read_binary(bad.as_slice()),
            Err(Error::MalformedFile(_))
        ));
        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(matches!(
            read_binary(bad.as_slice()),
            Err(Error::MalformedFile(_))
        ));
        // Swap the two frequencies: grid no longer ascending.
        let mut bad = buf.clone();
        let (a, b) = (HEADER_LEN, HEADER_LEN + 8);
        let first: Vec<u8> = bad[a..b].to_vec();
        bad.copy_within(b..b + 8, a);
        bad[b..b + 8].copy_from_slice(&first);
        assert!(matches!(
            read_binary(bad.as_slice()),
            Err(Error::MalformedFile(_))
        ));
    }

    #[test]
    fn csv_header_and_errors() {
        let ch = random_channel(1, 2, 2, 3);
        let mut buf = Vec::new();
        write_csv(&ch, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("rx,tx,freq_hz,re,im\n"));
        assert_eq!(text.lines().count(), 1 + 4);

        let missing: String = text.lines().take(4).collect::<Vec<_>>().join("\n");
        assert!(matches!(
            read_csv(missing.as_bytes()),
            Err(Error::DimensionMismatch { .. })
        ));
        let lines: Vec<&str> = text.lines().collect();
        let dup = [lines[0], lines[1], lines[1], lines[3], lines[4]].join("\n");
        assert!(read_csv(dup.as_bytes()).is_err());
        assert!(read_csv("a,b,c\n1,2,3\n".as_bytes()).is_err());
    }

    #[test]
    fn file_round_trip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let ch = random_channel(4, 2, 5, 11);
        for (name, fmt) in [
            ("c.sich", ChannelFormat::Binary),
            ("c.csv", ChannelFormat::Csv),
        ] {
            let p = dir.path().join(name);
            assert_eq!(ChannelFormat::from_path(&p), fmt);
            save_channel(&ch, &p, fmt).unwrap();
            let back = load_channel(&p, fmt).unwrap();
            assert_eq!(bits(&back), bits(&ch));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn csv_round_trip_is_bit_exact(m_u in 1usize..4, m_d in 1usize..4, n in 1usize..4,
                                       vals in proptest::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 54)) {
            let data: Vec<Complex64> = (0..m_u * m_d * n)
                .map(|i| Complex64::new(vals[2 * i], vals[2 * i + 1]))
                .collect();
            let ch = SiChannel::new(
                default_layout(m_u).unwrap(),
                default_layout(m_d).unwrap(),
                linspace_hz(1.0e9, 1.3e9, n),
                data,
            ).unwrap();
            let mut buf = Vec::new();
            write_csv(&ch, &mut buf).unwrap();
            let back = read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(bits(&back), bits(&ch));
        }
    }
}
