//! CSV storage for fields: header `f1,..,fq,i1,..,iw,value`, one row per site.
//! Paths ending in `.gz` are gzip-compressed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::domain::{ObservationDomain, SpaceTimeField};
use crate::error::{Error, Result};

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

pub(crate) fn open_reader(path: &Path) -> Result<Box<dyn Read>> {
    let f = File::open(path)?;
    Ok(if is_gz(path) {
        Box::new(GzDecoder::new(BufReader::new(f)))
    } else {
        Box::new(BufReader::new(f))
    })
}

pub(crate) fn open_writer(path: &Path) -> Result<Box<dyn Write>> {
    let f = File::create(path)?;
    Ok(if is_gz(path) {
        Box::new(GzEncoder::new(BufWriter::new(f), Compression::default()))
    } else {
        Box::new(BufWriter::new(f))
    })
}

pub fn field_header(domain: &ObservationDomain) -> Vec<String> {
    let mut h: Vec<String> = (1..=domain.q()).map(|k| format!("f{k}")).collect();
    h.extend((1..=domain.w()).map(|k| format!("i{k}")));
    h.push("value".into());
    h
}

/// Writes the field in canonical site order. Values use the shortest
/// representation that parses back to the identical `f64`.
pub fn write_field<W: Write>(field: &SpaceTimeField, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let domain = field.domain();
    wtr.write_record(field_header(domain))?;
    let mut rec: Vec<String> = Vec::with_capacity(domain.d() + 1);
    for (i, v) in field.values().iter().enumerate() {
        rec.clear();
        rec.extend(domain.site_coords(i).iter().map(|x| x.to_string()));
        rec.push(format!("{v:?}"));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_field(field: &SpaceTimeField, path: &Path) -> Result<()> {
    let mut w = open_writer(path)?;
    write_field(field, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads a field for `domain`. Rows may come in any order; each site must
/// appear exactly once. With `require_positive` every value must be `> 0`.
pub fn read_field<R: Read>(
    input: R,
    domain: &ObservationDomain,
    require_positive: bool,
    path: &Path,
) -> Result<SpaceTimeField> {
    let err = |msg: String| Error::FieldFormat {
        path: path.to_path_buf(),
        msg,
    };
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let expected = field_header(domain);
    if header != expected {
        return Err(err(format!(
            "header {header:?} does not match expected {expected:?}"
        )));
    }
    let index = domain.fixed_index();
    let d = domain.d();
    let mut values = vec![f64::NAN; domain.site_count()];
    let mut seen = vec![false; domain.site_count()];
    let mut coords = vec![0i64; d];
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        if rec.len() != d + 1 {
            return Err(err(format!("line {line}: expected {} columns", d + 1)));
        }
        for k in 0..d {
            coords[k] = rec[k]
                .trim()
                .parse()
                .map_err(|_| err(format!("line {line}: bad coordinate {:?}", &rec[k])))?;
        }
        let raw = rec[d].trim();
        let v: f64 = raw
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| err(format!("line {line}: unparseable value {raw:?}")))?;
        if require_positive && v <= 0.0 {
            return Err(err(format!("line {line}: non-positive value {v}")));
        }
        let i = domain
            .site_index_with(&index, &coords)
            .ok_or_else(|| err(format!("line {line}: extra site {coords:?} not in domain")))?;
        if seen[i] {
            return Err(err(format!("line {line}: duplicate site {coords:?}")));
        }
        seen[i] = true;
        values[i] = v;
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(err(format!("missing site {:?}", domain.site_coords(i))));
    }
    SpaceTimeField::new(domain.clone(), values)
}

pub fn load_field(
    path: &Path,
    domain: &ObservationDomain,
    require_positive: bool,
) -> Result<SpaceTimeField> {
    let r = open_reader(path)?;
    read_field(r, domain, require_positive, path)
}
