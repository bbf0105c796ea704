//! Reading and writing data matrices, corrupting them, and splitting them.
//!
//! Two on-disk formats are supported. CSV holds one sample per row; an
//! optional first line `# labeled` marks the last column as an integer class
//! label. BIN is a little-endian binary layout:
//!
//! ```text
//! "ARSSMAT1" | L: u64 | N: u64 | flag: u8 | L·N f64, column-major | N i32 labels if flag == 1
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use arss_core::Matrix;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Location, Result};

pub const BIN_MAGIC: &[u8; 8] = b"ARSSMAT1";
const BIN_HEADER: usize = 8 + 8 + 8 + 1;
const CSV_LABEL_HEADER: &str = "# labeled";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Bin,
}

impl Format {
    /// Guesses the format from a `.csv` or `.bin` extension.
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(Format::Csv),
            "bin" => Some(Format::Bin),
            _ => None,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "bin" => Ok(Format::Bin),
            _ => Err(format!("unknown format '{s}' (expected csv or bin)")),
        }
    }
}

/// Where a dataset came from and what was done to it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Option<PathBuf>,
    pub format: Option<Format>,
    /// `(operation, seed)` for every randomized step applied.
    pub seeds: Vec<(String, u64)>,
    /// Columns altered by [`inject_noise`], ascending.
    pub corrupted: Option<Vec<usize>>,
    /// Column indices in the parent dataset, after [`split_candidates`].
    pub original_indices: Option<Vec<usize>>,
}

/// Data matrix (features × samples) with optional per-sample labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub x: Matrix,
    pub labels: Option<Vec<i32>>,
    pub provenance: Provenance,
}

impl LabeledDataset {
    pub fn new(x: Matrix, labels: Option<Vec<i32>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != x.cols() {
                return Err(Error::LabelMismatch { expected: x.cols(), found: l.len() });
            }
        }
        Ok(Self { x, labels, provenance: Provenance::default() })
    }

    pub fn n_samples(&self) -> usize {
        self.x.cols()
    }

    pub fn n_features(&self) -> usize {
        self.x.rows()
    }

    /// The samples at `cols`, in that order. Provenance is cleared.
    pub fn select_columns(&self, cols: &[usize]) -> LabeledDataset {
        let l = self.x.rows();
        let mut data = Vec::with_capacity(l * cols.len());
        for &j in cols {
            data.extend_from_slice(self.x.col(j));
        }
        let x = if cols.is_empty() {
            Matrix::zeros(l, 0)
        } else {
            Matrix::from_col_major(l, cols.len(), data).expect("shape is consistent")
        };
        let labels = self.labels.as_ref().map(|lab| cols.iter().map(|&j| lab[j]).collect());
        LabeledDataset { x, labels, provenance: Provenance::default() }
    }
}

pub fn read_matrix(path: &Path, format: Format) -> Result<LabeledDataset> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut ds = match format {
        Format::Csv => {
            let text = std::str::from_utf8(&bytes).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                location: Location::Byte(e.valid_up_to() as u64),
                message: "invalid UTF-8".into(),
            })?;
            parse_csv(text, path)?
        }
        Format::Bin => parse_bin(&bytes, path)?,
    };
    ds.provenance.source = Some(path.to_path_buf());
    ds.provenance.format = Some(format);
    Ok(ds)
}

pub fn write_matrix(dataset: &LabeledDataset, path: &Path, format: Format) -> Result<()> {
    let bytes = match format {
        Format::Csv => encode_csv(dataset).into_bytes(),
        Format::Bin => encode_bin(dataset),
    };
    write_atomic(path, &bytes)
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into
/// place, so `path` never holds a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn parse_csv(text: &str, path: &Path) -> Result<LabeledDataset> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        location: Location::Line(line),
        message,
    };
    let mut lines = text.lines().enumerate().peekable();
    let labeled = match lines.peek() {
        Some((_, first)) if first.trim() == CSV_LABEL_HEADER => {
            lines.next();
            true
        }
        _ => false,
    };

    let mut width = None;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut n = 0;
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let values = if labeled {
            if fields.len() < 2 {
                return Err(err(lineno, "labeled row needs at least one value and a label".into()));
            }
            let label = fields[fields.len() - 1];
            labels.push(
                label.parse::<i32>().map_err(|_| err(lineno, format!("invalid label '{label}'")))?,
            );
            &fields[..fields.len() - 1]
        } else {
            &fields[..]
        };
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(err(lineno, format!("expected {w} values, found {}", values.len())));
            }
            _ => {}
        }
        for v in values {
            let x: f64 = v.parse().map_err(|_| err(lineno, format!("invalid number '{v}'")))?;
            if !x.is_finite() {
                return Err(err(lineno, format!("non-finite value '{v}'")));
            }
            data.push(x);
        }
        n += 1;
    }
    let Some(l) = width else {
        return Err(err(text.lines().count().max(1), "no samples".into()));
    };
    // rows of the file are columns of X, so the values are already column-major
    let x = Matrix::from_col_major(l, n, data).map_err(|e| err(1, e.to_string()))?;
    LabeledDataset::new(x, labeled.then_some(labels))
}

pub fn encode_csv(dataset: &LabeledDataset) -> String {
    let mut out = String::new();
    if dataset.labels.is_some() {
        out.push_str(CSV_LABEL_HEADER);
        out.push('\n');
    }
    for j in 0..dataset.n_samples() {
        for (i, v) in dataset.x.col(j).iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            // shortest representation that parses back to the same bits
            write!(out, "{v}").unwrap();
        }
        if let Some(labels) = &dataset.labels {
            write!(out, ",{}", labels[j]).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_bin(bytes: &[u8], path: &Path) -> Result<LabeledDataset> {
    let err = |at: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        location: Location::Byte(at as u64),
        message,
    };
    if bytes.len() < BIN_MAGIC.len() || &bytes[..8] != BIN_MAGIC {
        return Err(Error::BadMagic { path: path.to_path_buf() });
    }
    if bytes.len() < BIN_HEADER {
        return Err(err(bytes.len(), "truncated header".into()));
    }
    let l = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let n = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let flag = bytes[24];
    if l == 0 || n == 0 {
        return Err(err(8, format!("empty matrix {l}x{n}")));
    }
    if flag > 1 {
        return Err(err(24, format!("invalid label flag {flag:#04x}")));
    }
    let count = l.checked_mul(n).filter(|&c| c <= (usize::MAX / 8) as u64);
    let Some(count) = count.map(|c| c as usize) else {
        return Err(err(8, format!("dimensions {l}x{n} too large")));
    };
    let label_bytes = if flag == 1 { n as usize * 4 } else { 0 };
    let expected = BIN_HEADER + count * 8 + label_bytes;
    if bytes.len() < expected {
        return Err(err(bytes.len(), format!("truncated: expected {expected} bytes")));
    }
    if bytes.len() > expected {
        return Err(err(expected, format!("{} trailing bytes", bytes.len() - expected)));
    }
    let mut data = Vec::with_capacity(count);
    for (i, chunk) in bytes[BIN_HEADER..BIN_HEADER + count * 8].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(err(BIN_HEADER + i * 8, "non-finite value".into()));
        }
        data.push(v);
    }
    let labels = (flag == 1).then(|| {
        bytes[BIN_HEADER + count * 8..]
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
            .collect()
    });
    let x = Matrix::from_col_major(l as usize, n as usize, data).map_err(|e| err(8, e.to_string()))?;
    LabeledDataset::new(x, labels)
}

pub fn encode_bin(dataset: &LabeledDataset) -> Vec<u8> {
    let (l, n) = dataset.x.shape();
    let mut out = Vec::with_capacity(BIN_HEADER + l * n * 8 + n * 4);
    out.extend_from_slice(BIN_MAGIC);
    out.extend_from_slice(&(l as u64).to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.push(u8::from(dataset.labels.is_some()));
    for v in dataset.x.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    if let Some(labels) = &dataset.labels {
        for lab in labels {
            out.extend_from_slice(&lab.to_le_bytes());
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    Laplace,
    SaltPepper,
}

impl FromStr for NoiseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gaussian" => Ok(NoiseKind::Gaussian),
            "laplace" => Ok(NoiseKind::Laplace),
            "salt_pepper" | "salt-pepper" => Ok(NoiseKind::SaltPepper),
            _ => Err(format!("unknown noise kind '{s}' (expected gaussian, laplace or salt_pepper)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Fraction of samples corrupted, per class when labels exist.
    pub fraction: f64,
    pub kinds: Vec<NoiseKind>,
    /// Gaussian σ as a fraction of each feature's value range.
    pub gaussian_sigma_rel: f64,
    /// Laplace scale as a fraction of each feature's value range.
    pub laplace_scale_rel: f64,
    /// Fraction of entries set to an extreme within a salt-and-pepper sample.
    pub sp_fraction: f64,
    /// Fail with [`Error::MissingLabels`] instead of sampling globally.
    pub require_labels: bool,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            fraction: 0.1,
            kinds: vec![NoiseKind::Gaussian, NoiseKind::Laplace, NoiseKind::SaltPepper],
            gaussian_sigma_rel: 0.1,
            laplace_scale_rel: 0.1,
            sp_fraction: 0.1,
            require_labels: false,
            seed: 0,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(Error::InvalidNoise("fraction must lie in [0, 1]"));
        }
        if self.kinds.is_empty() {
            return Err(Error::InvalidNoise("at least one noise kind is required"));
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.gaussian_sigma_rel) || !positive(self.laplace_scale_rel) {
            return Err(Error::InvalidNoise("noise magnitudes must be positive"));
        }
        if !(self.sp_fraction > 0.0 && self.sp_fraction <= 1.0) {
            return Err(Error::InvalidNoise("sp_fraction must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// `⌈fraction · size⌉`, ignoring rounding noise in the product.
fn ceil_count(fraction: f64, size: usize) -> usize {
    let raw = fraction * size as f64;
    ((raw - 1e-9).ceil().max(0.0) as usize).min(size)
}

/// Corrupts a seeded subset of samples. The altered columns are recorded in
/// `provenance.corrupted`; all other columns are left bit-identical.
pub fn inject_noise(dataset: &LabeledDataset, spec: &NoiseSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let (l, n) = dataset.x.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let groups: Vec<Vec<usize>> = match &dataset.labels {
        Some(labels) => {
            let mut by_class: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
            for (j, &c) in labels.iter().enumerate() {
                by_class.entry(c).or_default().push(j);
            }
            by_class.into_values().collect()
        }
        None if spec.require_labels => return Err(Error::MissingLabels),
        None => {
            log::warn!("dataset has no labels; corrupting samples globally instead of per class");
            vec![(0..n).collect()]
        }
    };
    let mut mask = Vec::new();
    for group in &groups {
        let count = ceil_count(spec.fraction, group.len());
        mask.extend(index::sample(&mut rng, group.len(), count).into_iter().map(|i| group[i]));
    }
    mask.sort_unstable();

    let x = &dataset.x;
    let ranges: Vec<f64> = (0..l)
        .map(|i| {
            let (lo, hi) = (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), j| {
                (lo.min(x[(i, j)]), hi.max(x[(i, j)]))
            });
            hi - lo
        })
        .collect();
    let global_min = x.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
    let global_max = x.as_slice().iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut out = x.clone();
    for &j in &mask {
        let kind = spec.kinds[rng.random_range(0..spec.kinds.len())];
        let col = out.col_mut(j);
        match kind {
            NoiseKind::Gaussian => {
                for (v, r) in col.iter_mut().zip(&ranges) {
                    let normal = Normal::new(0.0, spec.gaussian_sigma_rel * r).expect("finite sigma");
                    *v += normal.sample(&mut rng);
                }
            }
            NoiseKind::Laplace => {
                for (v, r) in col.iter_mut().zip(&ranges) {
                    // difference of two unit exponentials is a unit Laplace draw
                    let a: f64 = Exp1.sample(&mut rng);
                    let b: f64 = Exp1.sample(&mut rng);
                    *v += spec.laplace_scale_rel * r * (a - b);
                }
            }
            NoiseKind::SaltPepper => {
                let count = ceil_count(spec.sp_fraction, l).max(1);
                let mut entries = index::sample(&mut rng, l, count).into_vec();
                entries.sort_unstable();
                for i in entries {
                    col[i] = if rng.random_bool(0.5) { global_max } else { global_min };
                }
            }
        }
    }

    let mut provenance = dataset.provenance.clone();
    provenance.seeds.push(("noise".into(), spec.seed));
    provenance.corrupted = Some(mask);
    Ok(LabeledDataset { x: out, labels: dataset.labels.clone(), provenance })
}

/// Seeded uniform split into `candidate_count` candidates and the remaining
/// test samples. Both halves keep ascending original order, recorded in
/// `provenance.original_indices`.
pub fn split_candidates(
    dataset: &LabeledDataset,
    candidate_count: usize,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let n = dataset.n_samples();
    if candidate_count == 0 || candidate_count > n {
        return Err(Error::InvalidCount { count: candidate_count, available: n });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (cand, test) = perm.split_at_mut(candidate_count);
    cand.sort_unstable();
    test.sort_unstable();

    let part = |idx: &[usize]| {
        let mut d = dataset.select_columns(idx);
        d.provenance = dataset.provenance.clone();
        d.provenance.seeds.push(("split".into(), seed));
        d.provenance.original_indices = Some(idx.to_vec());
        d
    };
    Ok((part(cand), part(test)))
}
