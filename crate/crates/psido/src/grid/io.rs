//! On-disk format for lattice data: a short text header (key/value lines,
//! `#` comments allowed) terminated by a line reading `data`, followed by
//! the samples as raw little-endian f64 pairs (re, im) in row-major order.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::data::{ClassMeta, GridFn, KernelGrid, SymbolGrid};
use super::spec::GridSpec;
use crate::{Error, Result};

const MAGIC: &str = "psido-grid v1";

fn open_for_write(path: &Path, force: bool) -> Result<BufWriter<File>> {
    if path.exists() && !force {
        return Err(Error::Config(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_payload<W: Write>(w: &mut W, data: &[Complex64]) -> Result<()> {
    let mut buf = Vec::with_capacity(data.len() * 16);
    for z in data {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn write_comments<W: Write>(w: &mut W, comments: &[String]) -> Result<()> {
    for c in comments {
        for line in c.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    Ok(())
}

pub fn write_gridfn(path: &Path, f: &GridFn, comments: &[String], force: bool) -> Result<()> {
    let mut w = open_for_write(path, force)?;
    writeln!(w, "{MAGIC}")?;
    write_comments(&mut w, comments)?;
    writeln!(w, "kind gridfn")?;
    writeln!(w, "complex 1")?;
    writeln!(w, "dim {}", f.spec.dim)?;
    writeln!(w, "extent {}", f.spec.extent)?;
    writeln!(w, "n {}", f.spec.n)?;
    writeln!(w, "data")?;
    write_payload(&mut w, &f.data)
}

pub fn write_symbol(path: &Path, a: &SymbolGrid, comments: &[String], force: bool) -> Result<()> {
    let mut w = open_for_write(path, force)?;
    writeln!(w, "{MAGIC}")?;
    write_comments(&mut w, comments)?;
    writeln!(w, "kind symbol")?;
    writeln!(w, "complex 1")?;
    writeln!(w, "dim {}", a.base.dim)?;
    writeln!(w, "base_extent {}", a.base.extent)?;
    writeln!(w, "base_n {}", a.base.n)?;
    writeln!(w, "cov_extent {}", a.cov.extent)?;
    writeln!(w, "cov_n {}", a.cov.n)?;
    writeln!(w, "sigma {}", a.class.sigma)?;
    writeln!(w, "l {}", a.class.l)?;
    writeln!(w, "m {}", a.class.m)?;
    writeln!(w, "data")?;
    write_payload(&mut w, &a.data)
}

pub fn write_kernel(path: &Path, k: &KernelGrid, comments: &[String], force: bool) -> Result<()> {
    let mut w = open_for_write(path, force)?;
    writeln!(w, "{MAGIC}")?;
    write_comments(&mut w, comments)?;
    writeln!(w, "kind kernel")?;
    writeln!(w, "complex 1")?;
    writeln!(w, "dim {}", k.x.dim)?;
    writeln!(w, "x_extent {}", k.x.extent)?;
    writeln!(w, "x_n {}", k.x.n)?;
    writeln!(w, "y_extent {}", k.y.extent)?;
    writeln!(w, "y_n {}", k.y.n)?;
    writeln!(w, "data")?;
    write_payload(&mut w, &k.data)
}

struct Header {
    fields: HashMap<String, String>,
}

impl Header {
    fn get(&self, key: &str) -> Result<&str> {
        self.fields
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Format(format!("missing header field '{key}'")))
    }

    fn f64(&self, key: &str) -> Result<f64> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::Format(format!("field '{key}' is not a number")))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::Format(format!("field '{key}' is not an integer")))
    }
}

fn read_header(r: &mut impl BufRead, expect_kind: &str) -> Result<Header> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != MAGIC {
        return Err(Error::Format(format!(
            "bad magic line: expected '{MAGIC}', got '{}'",
            line.trim_end()
        )));
    }
    let mut fields = HashMap::new();
    loop {
        line.clear();
        let n = r.read_line(&mut line)?;
        if n == 0 {
            return Err(Error::Format("header ended before 'data' line".into()));
        }
        let t = line.trim_end();
        if t == "data" {
            break;
        }
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut parts = t.splitn(2, char::is_whitespace);
        let key = parts.next().unwrap_or("").to_string();
        let val = parts.next().unwrap_or("").trim().to_string();
        fields.insert(key, val);
    }
    let h = Header { fields };
    let kind = h.get("kind")?;
    if kind != expect_kind {
        return Err(Error::Format(format!(
            "expected kind '{expect_kind}', file holds '{kind}'"
        )));
    }
    Ok(h)
}

fn read_payload(r: &mut impl Read, len: usize) -> Result<Vec<Complex64>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != len * 16 {
        return Err(Error::Format(format!(
            "payload holds {} bytes, expected {} for {} complex samples",
            bytes.len(),
            len * 16,
            len
        )));
    }
    let mut data = Vec::with_capacity(len);
    for i in 0..len {
        let re = f64::from_le_bytes(bytes[16 * i..16 * i + 8].try_into().unwrap());
        let im = f64::from_le_bytes(bytes[16 * i + 8..16 * i + 16].try_into().unwrap());
        data.push(Complex64::new(re, im));
    }
    Ok(data)
}

pub fn read_gridfn(path: &Path) -> Result<GridFn> {
    let mut r = BufReader::new(File::open(path)?);
    let h = read_header(&mut r, "gridfn")?;
    let spec = GridSpec::new(h.usize("dim")?, h.f64("extent")?, h.usize("n")?)?;
    let data = read_payload(&mut r, spec.len())?;
    Ok(GridFn { spec, data })
}

pub fn read_symbol(path: &Path) -> Result<SymbolGrid> {
    let mut r = BufReader::new(File::open(path)?);
    let h = read_header(&mut r, "symbol")?;
    let dim = h.usize("dim")?;
    let base = GridSpec::new(dim, h.f64("base_extent")?, h.usize("base_n")?)?;
    let cov = GridSpec::new(dim, h.f64("cov_extent")?, h.usize("cov_n")?)?;
    let class = ClassMeta {
        sigma: h.f64("sigma")?,
        l: h.f64("l")?,
        m: h.f64("m")?,
    };
    let len = base.len() * cov.len();
    let data = read_payload(&mut r, len)?;
    Ok(SymbolGrid { base, cov, class, data })
}

pub fn read_kernel(path: &Path) -> Result<KernelGrid> {
    let mut r = BufReader::new(File::open(path)?);
    let h = read_header(&mut r, "kernel")?;
    let dim = h.usize("dim")?;
    let x = GridSpec::new(dim, h.f64("x_extent")?, h.usize("x_n")?)?;
    let y = GridSpec::new(dim, h.f64("y_extent")?, h.usize("y_n")?)?;
    let len = x.len() * y.len();
    let data = read_payload(&mut r, len)?;
    Ok(KernelGrid { x, y, data })
}
