//! Table files: a little-endian binary record stream and a CSV export.
//!
//! Binary record: `u64 |Δ|`, `u64 h`, `u8 k`, then `k` × `u64` invariant factors.
//! CSV: header `|delta|,h,divisors`, divisors joined by `x`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::classnum::{ClassRecord, Provenance};
use crate::error::{Error, Result};

pub const BIN_NAME: &str = "classes.bin";
pub const CSV_NAME: &str = "classes.csv";
pub const CSV_HEADER: &str = "|delta|,h,divisors";

fn provenance_of(abs_disc: u64) -> Provenance {
    if abs_disc % 8 == 7 {
        Provenance::Enumeration
    } else {
        Provenance::Series
    }
}

pub fn encode_record(r: &ClassRecord, out: &mut Vec<u8>) -> Result<()> {
    let k = u8::try_from(r.divisors.len())
        .map_err(|_| Error::Format(format!("too many divisors for {}", r.abs_disc)))?;
    out.extend_from_slice(&r.abs_disc.to_le_bytes());
    out.extend_from_slice(&r.h.to_le_bytes());
    out.push(k);
    for d in &r.divisors {
        out.extend_from_slice(&d.to_le_bytes());
    }
    Ok(())
}

pub fn write_bin(path: &Path, records: &[ClassRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let mut buf = Vec::with_capacity(64);
    for r in records {
        buf.clear();
        encode_record(r, &mut buf)?;
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn decode_records(bytes: &[u8]) -> Result<Vec<ClassRecord>> {
    let mut out = Vec::new();
    let mut pos = 0usize;
    let take = |n: usize, pos: &mut usize| -> Result<&[u8]> {
        let s = bytes
            .get(*pos..*pos + n)
            .ok_or_else(|| Error::Format(format!("record truncated at byte {}", *pos)))?;
        *pos += n;
        Ok(s)
    };
    let u64_at = |s: &[u8]| u64::from_le_bytes(s.try_into().expect("8 bytes"));
    while pos < bytes.len() {
        let abs_disc = u64_at(take(8, &mut pos)?);
        let h = u64_at(take(8, &mut pos)?);
        let k = take(1, &mut pos)?[0] as usize;
        let divisors = (0..k)
            .map(|_| take(8, &mut pos).map(u64_at))
            .collect::<Result<Vec<_>>>()?;
        out.push(ClassRecord {
            abs_disc,
            h,
            divisors,
            provenance: provenance_of(abs_disc),
        });
    }
    Ok(out)
}

pub fn read_bin(path: &Path) -> Result<Vec<ClassRecord>> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_records(&bytes)
}

fn csv_line(r: &ClassRecord) -> String {
    let ds: Vec<String> = r.divisors.iter().map(u64::to_string).collect();
    format!("{},{},{}", r.abs_disc, r.h, ds.join("x"))
}

pub fn write_csv(path: &Path, records: &[ClassRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", csv_line(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ClassRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Format("missing csv header".into())),
    }
    let bad = |line: &str| Error::Format(format!("bad csv line {line:?}"));
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.trim().split(',');
        let (Some(d), Some(h), Some(ds), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(bad(&line));
        };
        let abs_disc: u64 = d.parse().map_err(|_| bad(&line))?;
        let h: u64 = h.parse().map_err(|_| bad(&line))?;
        let divisors = if ds.is_empty() {
            Vec::new()
        } else {
            ds.split('x')
                .map(|x| x.parse().map_err(|_| bad(&line)))
                .collect::<Result<Vec<u64>>>()?
        };
        out.push(ClassRecord {
            abs_disc,
            h,
            divisors,
            provenance: provenance_of(abs_disc),
        });
    }
    Ok(out)
}

/// Reads `classes.bin` from `dir`, or `classes.csv` when no binary table exists.
pub fn read_table_dir(dir: &Path) -> Result<Vec<ClassRecord>> {
    let bin = dir.join(BIN_NAME);
    if bin.exists() {
        return read_bin(&bin);
    }
    let csv = dir.join(CSV_NAME);
    if csv.exists() {
        return read_csv(&csv);
    }
    Err(Error::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!("no {BIN_NAME} or {CSV_NAME} in {}", dir.display()),
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<ClassRecord> {
        vec![
            ClassRecord::new(3, 1, Provenance::Series),
            ClassRecord {
                abs_disc: 23,
                h: 3,
                divisors: vec![3],
                provenance: Provenance::Enumeration,
            },
            ClassRecord {
                abs_disc: 5460,
                h: 16,
                divisors: vec![2, 2, 2, 2],
                provenance: Provenance::Series,
            },
        ]
    }

    #[test]
    fn binary_layout() {
        let mut buf = Vec::new();
        encode_record(&sample()[1], &mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 8 + 1 + 8);
        assert_eq!(&buf[..8], &23u64.to_le_bytes());
        assert_eq!(buf[16], 1);
    }

    #[test]
    fn roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join(BIN_NAME);
        let csv = dir.path().join(CSV_NAME);
        write_bin(&bin, &sample()).unwrap();
        write_csv(&csv, &sample()).unwrap();
        assert_eq!(read_bin(&bin).unwrap(), sample());
        assert_eq!(read_csv(&csv).unwrap(), sample());
        let text = std::fs::read_to_string(&csv).unwrap();
        assert!(text.contains("5460,16,2x2x2x2\n"));
        assert!(text.contains("3,1,\n"));
    }

    #[test]
    fn truncation_is_an_error() {
        let mut buf = Vec::new();
        encode_record(&sample()[2], &mut buf).unwrap();
        buf.pop();
        assert!(matches!(decode_records(&buf), Err(Error::Format(_))));
    }
}
