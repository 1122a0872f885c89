//! On-disk cache of sieved tables.
//!
//! Layout (all little-endian): magic `FSTB`, then `u32` format version,
//! `u32` kind (0 Λ, 1 μ, 2 τ_k), `u32` k, `u64` lo, `u64` hi, followed by
//! `hi - lo` entries as `i64`.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::sieve::{sieve_table_with, ArithKind, ArithmeticTable, SieveOptions};
use crate::{Error, Result};

pub const CACHE_ENV: &str = "FLOORSUM_CACHE";
pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"FSTB";

pub fn cache_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn kind_code(kind: ArithKind) -> (u32, u32) {
    match kind {
        ArithKind::Lambda => (0, 0),
        ArithKind::Mu => (1, 0),
        ArithKind::TauK(k) => (2, k),
    }
}

pub fn cache_path(dir: &Path, kind: ArithKind, lo: u64, hi: u64) -> PathBuf {
    dir.join(format!("{}-{lo}-{hi}.v{FORMAT_VERSION}.bin", kind.name()))
}

pub fn write_table<W: Write>(table: &ArithmeticTable, mut w: W) -> Result<()> {
    let (code, k) = kind_code(table.kind);
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&code.to_le_bytes())?;
    w.write_all(&k.to_le_bytes())?;
    w.write_all(&table.lo.to_le_bytes())?;
    w.write_all(&table.hi.to_le_bytes())?;
    for v in &table.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table<R: Read>(mut r: R) -> Result<ArithmeticTable> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::BadCache("bad magic".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    let mut u32_field = |r: &mut R| -> Result<u32> {
        r.read_exact(&mut b4)?;
        Ok(u32::from_le_bytes(b4))
    };
    let version = u32_field(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(Error::BadCache(format!("unsupported version {version}")));
    }
    let code = u32_field(&mut r)?;
    let k = u32_field(&mut r)?;
    let kind = match code {
        0 => ArithKind::Lambda,
        1 => ArithKind::Mu,
        2 => ArithKind::TauK(k),
        other => return Err(Error::BadCache(format!("unknown kind code {other}"))),
    };
    r.read_exact(&mut b8)?;
    let lo = u64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let hi = u64::from_le_bytes(b8);
    if lo == 0 || lo >= hi {
        return Err(Error::BadCache(format!("bad range [{lo}, {hi})")));
    }
    let mut values = Vec::with_capacity((hi - lo) as usize);
    for _ in lo..hi {
        r.read_exact(&mut b8)?;
        values.push(i64::from_le_bytes(b8));
    }
    if r.read(&mut b8)? != 0 {
        return Err(Error::BadCache("trailing bytes".into()));
    }
    Ok(ArithmeticTable {
        kind,
        lo,
        hi,
        values,
    })
}

pub fn store(dir: &Path, table: &ArithmeticTable) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = cache_path(dir, table.kind, table.lo, table.hi);
    let tmp = path.with_extension("tmp");
    write_table(table, BufWriter::new(fs::File::create(&tmp)?))?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

pub fn load(dir: &Path, kind: ArithKind, lo: u64, hi: u64) -> Result<Option<ArithmeticTable>> {
    let path = cache_path(dir, kind, lo, hi);
    if !path.exists() {
        return Ok(None);
    }
    let table = read_table(BufReader::new(fs::File::open(&path)?))?;
    if table.kind != kind || table.lo != lo || table.hi != hi {
        return Err(Error::BadCache(format!(
            "{} holds a different table",
            path.display()
        )));
    }
    Ok(Some(table))
}

/// Sieves through the cache in `dir` (or no cache when `None`).
pub fn sieve_table_cached(
    dir: Option<&Path>,
    kind: ArithKind,
    lo: u64,
    hi: u64,
    opts: &SieveOptions,
) -> Result<ArithmeticTable> {
    let Some(dir) = dir else {
        return sieve_table_with(kind, lo, hi, opts);
    };
    if let Some(t) = load(dir, kind, lo, hi)? {
        return Ok(t);
    }
    let t = sieve_table_with(kind, lo, hi, opts)?;
    store(dir, &t)?;
    Ok(t)
}
