//! Binary field checkpoints.
//!
//! One field per file: an ASCII header line `HPDE1 nx ny nz Lx Ly h name`
//! followed by `nx * ny * nz` little-endian `f64` values, x fastest.
//! Footprint fields are written with `nz = 1`. A horizontal vector field is
//! two files, `<stem>.v1.hpde` and `<stem>.v2.hpde`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::field::{Field2D, HVectorField, ScalarField};
use crate::grid::{FieldBc, GridSpec};

pub const MAGIC: &str = "HPDE1";
pub const EXTENSION: &str = "hpde";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub lx: f64,
    pub ly: f64,
    pub h: f64,
    pub name: String,
    pub data: Vec<f64>,
}

fn bad(path: &Path, message: impl Into<String>) -> Error {
    Error::Checkpoint {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

impl Checkpoint {
    pub fn from_scalar(f: &ScalarField, name: &str) -> Self {
        let g = f.grid;
        Self {
            nx: g.nx,
            ny: g.ny,
            nz: g.nz,
            lx: g.lx,
            ly: g.ly,
            h: g.h,
            name: name.to_string(),
            data: f.data.clone(),
        }
    }

    pub fn from_field2d(f: &Field2D, name: &str) -> Self {
        let g = f.grid;
        Self {
            nx: g.nx,
            ny: g.ny,
            nz: 1,
            lx: g.lx,
            ly: g.ly,
            h: g.h,
            name: name.to_string(),
            data: f.data.clone(),
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.lx, self.ly, self.h, self.nx, self.ny, self.nz)
    }

    pub fn into_scalar(self, bc: FieldBc) -> Result<ScalarField> {
        let g = self.grid()?;
        ScalarField::new(g, self.data, bc)
    }

    /// Footprint field on `grid`, whose horizontal geometry must match.
    pub fn into_field2d(self, grid: GridSpec) -> Result<Field2D> {
        if self.nz != 1 || self.nx != grid.nx || self.ny != grid.ny {
            return Err(Error::Shape(format!(
                "checkpoint is {}x{}x{}, expected a {}x{}x1 footprint",
                self.nx, self.ny, self.nz, grid.nx, grid.ny
            )));
        }
        Field2D::new(grid, self.data)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "{MAGIC} {} {} {} {:?} {:?} {:?} {}",
            self.nx, self.ny, self.nz, self.lx, self.ly, self.h, self.name
        )?;
        let mut buf = Vec::with_capacity(8 * self.data.len());
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        w.flush()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if self.name.is_empty() || self.name.chars().any(char::is_whitespace) {
            return Err(bad(path, format!("invalid field name {:?}", self.name)));
        }
        let f = std::fs::File::create(path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.write_to(std::io::BufWriter::new(f))
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn read_from<R: Read>(r: R, path: &Path) -> Result<Self> {
        let mut rd = BufReader::new(r);
        let mut header = String::new();
        rd.read_line(&mut header)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let parts: Vec<&str> = header.trim_end_matches('\n').split(' ').collect();
        if parts.len() != 8 || parts[0] != MAGIC {
            return Err(bad(path, format!("malformed header {:?}", header.trim_end())));
        }
        let dim = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| bad(path, format!("bad dimension {s:?}")))
        };
        let len = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(path, format!("bad extent {s:?}")))
        };
        let (nx, ny, nz) = (dim(parts[1])?, dim(parts[2])?, dim(parts[3])?);
        let (lx, ly, h) = (len(parts[4])?, len(parts[5])?, len(parts[6])?);
        let count = nx
            .checked_mul(ny)
            .and_then(|v| v.checked_mul(nz))
            .ok_or_else(|| bad(path, "dimensions overflow"))?;
        let mut bytes = Vec::new();
        rd.read_to_end(&mut bytes)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if bytes.len() != 8 * count {
            return Err(bad(
                path,
                format!("expected {} data bytes, found {}", 8 * count, bytes.len()),
            ));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(Self {
            nx,
            ny,
            nz,
            lx,
            ly,
            h,
            name: parts[7].to_string(),
            data,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        Self::read_from(f, path)
    }
}

/// `<stem>.<suffix>.hpde`.
pub fn path_with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_os_string();
    s.push(format!(".{suffix}.{EXTENSION}"));
    PathBuf::from(s)
}

pub fn write_scalar(path: &Path, f: &ScalarField, name: &str) -> Result<()> {
    Checkpoint::from_scalar(f, name).write(path)
}

pub fn read_scalar(path: &Path, bc: FieldBc) -> Result<ScalarField> {
    Checkpoint::read(path)?.into_scalar(bc)
}

pub fn write_vector(stem: &Path, v: &HVectorField, name: &str) -> Result<()> {
    write_scalar(&path_with_suffix(stem, "v1"), &v.x, &format!("{name}.v1"))?;
    write_scalar(&path_with_suffix(stem, "v2"), &v.y, &format!("{name}.v2"))
}

pub fn read_vector(stem: &Path, bc: FieldBc) -> Result<HVectorField> {
    let x = read_scalar(&path_with_suffix(stem, "v1"), bc)?;
    let y = read_scalar(&path_with_suffix(stem, "v2"), bc)?;
    HVectorField::new(x, y)
}

/// Accepts either a stem or the path of its `.v1.hpde` / `.v2.hpde` file.
pub fn vector_stem(path: &Path) -> PathBuf {
    let s = path.to_string_lossy();
    for suffix in [".v1.hpde", ".v2.hpde"] {
        if let Some(stem) = s.strip_suffix(suffix) {
            return PathBuf::from(stem);
        }
    }
    path.to_path_buf()
}
