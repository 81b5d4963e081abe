//! Padded grid buffers and their file formats.
//!
//! Binary layout (little endian): `STGR`, version `u8`, dtype `u8` (1 = f32,
//! 2 = f64), ndims `u8`, reserved `u8`, ndims × `u64` extents, `u64` order,
//! then every padded value in row-major order.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::frontend::{DType, GridDecl};

const MAGIC: &[u8; 4] = b"STGR";
const VERSION: u8 = 1;

#[derive(Debug, thiserror::Error)]
pub enum GridIoError {
    #[error("not a grid file (bad magic)")]
    BadMagic,
    #[error("unsupported grid file version {0}")]
    Version(u8),
    #[error("unknown dtype code {0}")]
    DType(u8),
    #[error("grid file truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("line {line}: {message}")]
    Text { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

/// Row-major grid with a halo of `order` cells on every side.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBuffer {
    pub dtype: DType,
    pub shape: Vec<usize>,
    pub order: usize,
    pub data: GridData,
}

/// Affine map from logical coordinates to a flat index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Geom {
    /// Logical coordinate of flat element 0.
    pub origin: Vec<i64>,
    pub extent: Vec<usize>,
    pub strides: Vec<usize>,
}

impl Geom {
    pub fn new(origin: Vec<i64>, extent: Vec<usize>) -> Self {
        let mut strides = vec![1; extent.len()];
        for d in (0..extent.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * extent[d + 1];
        }
        Geom {
            origin,
            extent,
            strides,
        }
    }

    pub fn len(&self) -> usize {
        self.extent.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn flat(&self, p: &[i64]) -> usize {
        let mut i = 0i64;
        for d in 0..p.len() {
            i += (p[d] - self.origin[d]) * self.strides[d] as i64;
        }
        i as usize
    }

    #[inline]
    pub fn flat_off(&self, p: &[i64], o: &[i64]) -> usize {
        let mut i = 0i64;
        for d in 0..p.len() {
            i += (p[d] + o[d] - self.origin[d]) * self.strides[d] as i64;
        }
        i as usize
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        p.iter()
            .zip(&self.origin)
            .zip(&self.extent)
            .all(|((&x, &o), &e)| x >= o && x < o + e as i64)
    }
}

impl GridBuffer {
    pub fn zeros(dtype: DType, shape: &[usize], order: usize) -> Self {
        let n: usize = shape.iter().map(|e| e + 2 * order).product();
        let data = match dtype {
            DType::F32 => GridData::F32(vec![0.0; n]),
            DType::F64 => GridData::F64(vec![0.0; n]),
        };
        GridBuffer {
            dtype,
            shape: shape.to_vec(),
            order,
            data,
        }
    }

    pub fn for_decl(g: &GridDecl) -> Self {
        GridBuffer::zeros(g.dtype, &g.shape, g.order)
    }

    pub fn dims(&self) -> usize {
        self.shape.len()
    }

    pub fn padded_shape(&self) -> Vec<usize> {
        self.shape.iter().map(|e| e + 2 * self.order).collect()
    }

    pub fn geom(&self) -> Geom {
        Geom::new(vec![-(self.order as i64); self.dims()], self.padded_shape())
    }

    pub fn len(&self) -> usize {
        match &self.data {
            GridData::F32(v) => v.len(),
            GridData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn interior_len(&self) -> usize {
        self.shape.iter().product()
    }

    /// Flat index of logical point `p` (halo cells have negative or
    /// `>= extent` coordinates).
    pub fn index(&self, p: &[i64]) -> usize {
        self.geom().flat(p)
    }

    pub fn get_flat(&self, i: usize) -> f64 {
        match &self.data {
            GridData::F32(v) => v[i] as f64,
            GridData::F64(v) => v[i],
        }
    }

    pub fn set_flat(&mut self, i: usize, x: f64) {
        match &mut self.data {
            GridData::F32(v) => v[i] = x as f32,
            GridData::F64(v) => v[i] = x,
        }
    }

    pub fn get(&self, p: &[i64]) -> f64 {
        self.get_flat(self.index(p))
    }

    pub fn set(&mut self, p: &[i64], x: f64) {
        let i = self.index(p);
        self.set_flat(i, x)
    }

    /// Visit interior points in row-major order with their flat index.
    pub fn for_each_interior(&self, mut f: impl FnMut(&[i64], usize)) {
        let g = self.geom();
        let dims = self.dims();
        if self.shape.contains(&0) {
            return;
        }
        let mut p = vec![0i64; dims];
        loop {
            f(&p, g.flat(&p));
            let mut d = dims;
            loop {
                if d == 0 {
                    return;
                }
                d -= 1;
                p[d] += 1;
                if p[d] < self.shape[d] as i64 {
                    break;
                }
                p[d] = 0;
            }
        }
    }

    pub fn is_interior_flat(&self, i: usize) -> bool {
        let padded = self.padded_shape();
        let mut rem = i;
        let mut inside = true;
        for d in (0..self.dims()).rev() {
            let c = rem % padded[d];
            rem /= padded[d];
            inside &= c >= self.order && c < self.order + self.shape[d];
        }
        inside
    }

    pub fn halo_is_zero(&self) -> bool {
        (0..self.len()).all(|i| self.is_interior_flat(i) || self.get_flat(i) == 0.0)
    }

    pub fn count_nonfinite(&self) -> usize {
        match &self.data {
            GridData::F32(v) => v.iter().filter(|x| !x.is_finite()).count(),
            GridData::F64(v) => v.iter().filter(|x| !x.is_finite()).count(),
        }
    }

    /// Fill the interior with log-uniform samples in `[lo, hi]`.
    pub fn fill_log_uniform(&mut self, seed: u64, lo: f64, hi: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (lo.ln(), hi.ln());
        let mut idx = Vec::with_capacity(self.interior_len());
        self.for_each_interior(|_, i| idx.push(i));
        for i in idx {
            let x: f64 = rng.gen_range(a..=b);
            self.set_flat(i, x.exp());
        }
    }

    /// Interior values in row-major order.
    pub fn interior_values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.interior_len());
        self.for_each_interior(|_, i| out.push(self.get_flat(i)));
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(match self.dtype {
            DType::F32 => 1,
            DType::F64 => 2,
        });
        out.push(self.dims() as u8);
        out.push(0);
        for &e in &self.shape {
            out.extend_from_slice(&(e as u64).to_le_bytes());
        }
        out.extend_from_slice(&(self.order as u64).to_le_bytes());
        match &self.data {
            GridData::F32(v) => v
                .iter()
                .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            GridData::F64(v) => v
                .iter()
                .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, GridIoError> {
        let need = |n: usize| {
            if b.len() < n {
                Err(GridIoError::Truncated {
                    expected: n,
                    found: b.len(),
                })
            } else {
                Ok(())
            }
        };
        need(8)?;
        if &b[..4] != MAGIC {
            return Err(GridIoError::BadMagic);
        }
        if b[4] != VERSION {
            return Err(GridIoError::Version(b[4]));
        }
        let dtype = match b[5] {
            1 => DType::F32,
            2 => DType::F64,
            c => return Err(GridIoError::DType(c)),
        };
        let nd = b[6] as usize;
        need(8 + 8 * (nd + 1))?;
        let word =
            |k: usize| u64::from_le_bytes(b[8 + 8 * k..16 + 8 * k].try_into().unwrap()) as usize;
        let shape: Vec<usize> = (0..nd).map(word).collect();
        let order = word(nd);
        let mut g = GridBuffer::zeros(dtype, &shape, order);
        let body = 8 + 8 * (nd + 1);
        let size = dtype.size();
        need(body + g.len() * size)?;
        if b.len() != body + g.len() * size {
            return Err(GridIoError::Truncated {
                expected: body + g.len() * size,
                found: b.len(),
            });
        }
        let raw = &b[body..];
        match &mut g.data {
            GridData::F32(v) => {
                for (x, c) in v.iter_mut().zip(raw.chunks_exact(4)) {
                    *x = f32::from_le_bytes(c.try_into().unwrap());
                }
            }
            GridData::F64(v) => {
                for (x, c) in v.iter_mut().zip(raw.chunks_exact(8)) {
                    *x = f64::from_le_bytes(c.try_into().unwrap());
                }
            }
        }
        Ok(g)
    }

    pub fn read_file(path: &std::path::Path) -> Result<Self, GridIoError> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(MAGIC) {
            GridBuffer::from_bytes(&bytes)
        } else {
            GridBuffer::parse_text(&String::from_utf8_lossy(&bytes))
        }
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<(), GridIoError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    /// Text fixture: `dtype`, `shape` and `order` lines, then `values`
    /// followed by the interior values in row-major order. `#` starts a
    /// comment.
    pub fn parse_text(text: &str) -> Result<Self, GridIoError> {
        let err = |line: usize, m: &str| GridIoError::Text {
            line,
            message: m.to_string(),
        };
        let mut dtype = None;
        let mut shape = None;
        let mut order = 0;
        let mut values: Option<Vec<f64>> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let n = n + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(v) = values.as_mut() {
                for w in line.split_whitespace() {
                    v.push(w.parse().map_err(|_| err(n, &format!("bad value `{w}`")))?);
                }
                continue;
            }
            let (k, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            match k {
                "dtype" => {
                    dtype = Some(match rest.trim() {
                        "f32" => DType::F32,
                        "f64" => DType::F64,
                        other => return Err(err(n, &format!("unknown dtype `{other}`"))),
                    })
                }
                "shape" => {
                    shape = Some(
                        rest.split_whitespace()
                            .map(|w| w.parse::<usize>())
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(|_| err(n, "bad shape"))?,
                    )
                }
                "order" => order = rest.trim().parse().map_err(|_| err(n, "bad order"))?,
                "values" => values = Some(Vec::new()),
                _ => return Err(err(n, &format!("unknown key `{k}`"))),
            }
        }
        let dtype = dtype.ok_or_else(|| err(0, "missing dtype"))?;
        let shape = shape.ok_or_else(|| err(0, "missing shape"))?;
        let values = values.ok_or_else(|| err(0, "missing values"))?;
        let mut g = GridBuffer::zeros(dtype, &shape, order);
        if values.len() != g.interior_len() {
            return Err(err(
                0,
                &format!(
                    "expected {} values, found {}",
                    g.interior_len(),
                    values.len()
                ),
            ));
        }
        let mut idx = Vec::new();
        g.for_each_interior(|_, i| idx.push(i));
        for (i, v) in idx.into_iter().zip(values) {
            g.set_flat(i, v);
        }
        Ok(g)
    }

    pub fn to_text(&self) -> String {
        let dims: Vec<String> = self.shape.iter().map(|e| e.to_string()).collect();
        let mut s = format!(
            "dtype {}\nshape {}\norder {}\nvalues\n",
            self.dtype.name(),
            dims.join(" "),
            self.order
        );
        let row = self.shape.last().copied().unwrap_or(1).max(1);
        for (k, v) in self.interior_values().iter().enumerate() {
            s.push_str(&format!("{v:e}"));
            s.push(if (k + 1) % row == 0 { '\n' } else { ' ' });
        }
        s
    }
}

impl fmt::Display for GridBuffer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:?} order={}",
            self.dtype.name(),
            self.shape,
            self.order
        )
    }
}
