//! Dataset ingestion (CSV and libsvm sparse text), train-only standardization,
//! seeded splitting, and a versioned binary container for generated
//! hierarchical logistic-regression instances.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ensemble::{streams, RngStream};
use crate::error::{Error, Result};
use crate::targets::{GroupLaw, HlrConfig, HlrHyper, HlrModel};

/// Compressed sparse rows with sorted column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn empty(ncols: usize) -> Self {
        Self {
            nrows: 0,
            ncols,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Appends a row given as `(column, value)` pairs sorted by column.
    pub fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, f64)>) {
        for (c, v) in entries {
            debug_assert!(c < self.ncols);
            self.indices.push(c);
            self.values.push(v);
        }
        self.indptr.push(self.indices.len());
        self.nrows += 1;
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.nrows, self.ncols));
        for i in 0..self.nrows {
            let (idx, val) = self.row(i);
            for (c, v) in idx.iter().zip(val) {
                out[[i, *c]] = *v;
            }
        }
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut out = Self::empty(self.ncols);
        for &r in rows {
            let (idx, val) = self.row(r);
            out.push_row(idx.iter().copied().zip(val.iter().copied()));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Features {
    Dense(Array2<f64>),
    Sparse(CsrMatrix),
}

impl Features {
    pub fn nrows(&self) -> usize {
        match self {
            Features::Dense(m) => m.nrows(),
            Features::Sparse(m) => m.nrows,
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Features::Dense(m) => m.ncols(),
            Features::Sparse(m) => m.ncols,
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            Features::Dense(m) => m.clone(),
            Features::Sparse(m) => m.to_dense(),
        }
    }
}

/// Per-column statistics fitted on the training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Features,
    /// Binary labels in `{0, 1}`.
    pub labels: Vec<u8>,
    pub scaling: Option<ColumnScaling>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    fn select(&self, rows: &[usize], name: &str) -> Dataset {
        let features = match &self.features {
            Features::Dense(m) => Features::Dense(m.select(ndarray::Axis(0), rows)),
            Features::Sparse(m) => Features::Sparse(m.select_rows(rows)),
        };
        Dataset {
            name: format!("{}/{}", self.name, name),
            features,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            scaling: self.scaling.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataFormat {
    Csv {
        #[serde(default)]
        header: bool,
        /// Zero-based label column; the last column when absent.
        #[serde(default)]
        label_column: Option<usize>,
    },
    LibsvmSparseText,
}

/// Maps raw label tokens to `{0, 1}`.
///
/// Numeric labels in `{0, 1}` are kept, `{-1, +1}` maps `-1 -> 0`, any other
/// two-valued numeric set maps smaller to 0. Non-numeric labels map in
/// lexicographic order.
fn map_labels(raw: &[String]) -> Result<Vec<u8>> {
    let distinct: BTreeSet<&str> = raw.iter().map(String::as_str).collect();
    let numeric: Option<Vec<f64>> = distinct.iter().map(|s| s.parse::<f64>().ok()).collect();
    if let Some(mut vals) = numeric {
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        if vals.len() > 2 {
            return Err(Error::Data(format!(
                "expected a binary task, found {} label values",
                vals.len()
            )));
        }
        let zero_one = vals.iter().all(|v| *v == 0.0 || *v == 1.0);
        let pm_one = vals.iter().all(|v| *v == -1.0 || *v == 1.0);
        let low = vals[0];
        return raw
            .iter()
            .map(|s| {
                let v: f64 = s.parse().expect("checked numeric");
                Ok(if zero_one {
                    v as u8
                } else if pm_one {
                    u8::from(v == 1.0)
                } else {
                    u8::from(v != low)
                })
            })
            .collect();
    }
    if distinct.len() > 2 {
        return Err(Error::Data(format!(
            "expected a binary task, found {} classes",
            distinct.len()
        )));
    }
    let first = *distinct.iter().next().expect("non-empty");
    Ok(raw.iter().map(|s| u8::from(s != first)).collect())
}

pub fn load_dataset(path: impl AsRef<Path>, format: &DataFormat) -> Result<Dataset> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        DataFormat::LibsvmSparseText => read_libsvm(BufReader::new(file), name, path),
        DataFormat::Csv {
            header,
            label_column,
        } => read_csv(file, *header, *label_column, name),
    }
}

/// Parses `<label> <index>:<value> ...` lines with 1-based indices.
pub fn read_libsvm(reader: impl BufRead, name: String, path: &Path) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut raw_labels = Vec::new();
    let mut ncols = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line_no = lineno + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = tokens.next().expect("non-empty line").to_string();
        let mut entries = Vec::new();
        for tok in tokens {
            let bad = |msg: String| Error::DataLine {
                line: line_no,
                msg,
            };
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| bad(format!("expected index:value, got '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| bad(format!("bad feature index '{idx}'")))?;
            if idx == 0 {
                return Err(bad("feature indices are 1-based".into()));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| bad(format!("bad feature value '{val}'")))?;
            if !val.is_finite() {
                return Err(bad(format!("non-finite feature value '{val}'")));
            }
            entries.push((idx - 1, val));
        }
        entries.sort_by_key(|e| e.0);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::DataLine {
                line: line_no,
                msg: "duplicate feature index".into(),
            });
        }
        if let Some(last) = entries.last() {
            ncols = ncols.max(last.0 + 1);
        }
        raw_labels.push(label);
        rows.push(entries);
    }
    if rows.is_empty() {
        return Err(Error::Data("empty dataset".into()));
    }
    let labels = map_labels(&raw_labels)?;
    let mut csr = CsrMatrix::empty(ncols);
    for r in rows {
        csr.push_row(r);
    }
    Ok(Dataset {
        name,
        features: Features::Sparse(csr),
        labels,
        scaling: None,
    })
}

pub fn read_csv(
    reader: impl std::io::Read,
    header: bool,
    label_column: Option<usize>,
    name: String,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .delimiter(b',')
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    let mut width: Option<usize> = None;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w || w < 2 {
            return Err(Error::DataLine {
                line,
                msg: format!("expected {w} columns, found {}", rec.len()),
            });
        }
        let lc = label_column.unwrap_or(w - 1);
        if lc >= w {
            return Err(Error::config(format!("label column {lc} out of range")));
        }
        for (c, field) in rec.iter().enumerate() {
            if c == lc {
                raw_labels.push(field.to_string());
                continue;
            }
            let v: f64 = field.parse().map_err(|_| Error::DataLine {
                line,
                msg: format!("bad numeric field '{field}'"),
            })?;
            if !v.is_finite() {
                return Err(Error::DataLine {
                    line,
                    msg: format!("non-finite feature '{field}'"),
                });
            }
            values.push(v);
        }
    }
    let n = raw_labels.len();
    if n == 0 {
        return Err(Error::Data("empty dataset".into()));
    }
    let p = values.len() / n;
    let labels = map_labels(&raw_labels)?;
    let features = Array2::from_shape_vec((n, p), values).expect("rectangular by construction");
    Ok(Dataset {
        name,
        features: Features::Dense(features),
        labels,
        scaling: None,
    })
}

/// Writes a dataset in libsvm sparse text. Zero entries of dense features
/// are omitted.
pub fn save_libsvm(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let sparse = match &ds.features {
        Features::Sparse(m) => std::borrow::Cow::Borrowed(m),
        Features::Dense(m) => {
            let mut csr = CsrMatrix::empty(m.ncols());
            for row in m.rows() {
                csr.push_row(row.iter().copied().enumerate().filter(|(_, v)| *v != 0.0));
            }
            std::borrow::Cow::Owned(csr)
        }
    };
    for i in 0..ds.n() {
        out.push_str(&ds.labels[i].to_string());
        let (idx, val) = sparse.row(i);
        for (c, v) in idx.iter().zip(val) {
            out.push_str(&format!(" {}:{}", c + 1, v));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Writes via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or(""),
        std::process::id()
    ));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train: f64,
    /// May be zero, in which case no validation split is produced.
    #[serde(default)]
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn train_test(seed: u64) -> Self {
        Self {
            train: 0.8,
            validation: 0.0,
            test: 0.2,
            seed,
        }
    }

    pub fn train_val_test(seed: u64) -> Self {
        Self {
            train: 0.6,
            validation: 0.2,
            test: 0.2,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.train > 0.0
            && self.test > 0.0
            && self.validation >= 0.0
            && ((self.train + self.validation + self.test) - 1.0).abs() < 1e-9;
        if ok {
            Ok(())
        } else {
            Err(Error::config(
                "split fractions must be positive (validation may be 0) and sum to 1",
            ))
        }
    }

    /// Seeded partition of `0..n` into (train, validation, test) indices.
    pub fn indices(&self, n: usize) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
        self.validate()?;
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut RngStream::new(self.seed).substream(streams::DATA_SPLIT));
        let n_train = (self.train * n as f64).round() as usize;
        let n_val = (self.validation * n as f64).round() as usize;
        if n_train == 0 || n_train + n_val >= n || (self.validation > 0.0 && n_val == 0) {
            return Err(Error::Data(format!("{n} rows cannot fill every split")));
        }
        let test = perm.split_off(n_train + n_val);
        let val = perm.split_off(n_train);
        Ok((perm, val, test))
    }
}

pub struct Splits {
    pub train: Dataset,
    pub validation: Option<Dataset>,
    pub test: Dataset,
}

/// Dense binary classification data from a logistic model with correlated
/// features: `x = z + 0.5 u` with a shared factor `u`, labels drawn with
/// `P(y = 1) = sigmoid(x . w + 0.5)` and `w ~ N(0, 4 / p)`.
pub fn synthetic_classification(n: usize, p: usize, seed: u64) -> Result<Dataset> {
    if n < 2 || p == 0 {
        return Err(Error::config("synthetic data needs n >= 2 and p >= 1"));
    }
    let mut rng = RngStream::new(seed).substream(streams::DATA_GEN);
    let scale = 2.0 / (p as f64).sqrt();
    let w: Vec<f64> = (0..p).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
    let mut x = Array2::zeros((n, p));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let u: f64 = rng.sample(StandardNormal);
        let mut z = 0.5;
        for j in 0..p {
            let v = rng.sample::<f64, _>(StandardNormal) + 0.5 * u;
            x[[i, j]] = v;
            z += v * w[j];
        }
        let prob = 1.0 / (1.0 + (-z).exp());
        labels.push(u8::from(rng.random::<f64>() < prob));
    }
    Ok(Dataset {
        name: "synthetic".into(),
        features: Features::Dense(x),
        labels,
        scaling: None,
    })
}

/// Splits the rows with a seeded permutation, then standardizes every split
/// with column statistics computed on the training rows only. Constant
/// columns are centred but not scaled.
pub fn standardize_and_split(ds: &Dataset, split: &SplitSpec) -> Result<Splits> {
    let (tr, va, te) = split.indices(ds.n())?;
    let dense = Dataset {
        features: Features::Dense(ds.features.to_dense()),
        ..ds.clone()
    };
    let mut train = dense.select(&tr, "train");
    let mut validation = (!va.is_empty()).then(|| dense.select(&va, "validation"));
    let mut test = dense.select(&te, "test");

    let Features::Dense(x) = &train.features else {
        unreachable!("densified above")
    };
    let n = x.nrows() as f64;
    let mean: Vec<f64> = x.columns().into_iter().map(|c| c.sum() / n).collect();
    let std: Vec<f64> = x
        .columns()
        .into_iter()
        .zip(&mean)
        .map(|(c, m)| {
            let s = (c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let scaling = ColumnScaling { mean, std };
    for part in [Some(&mut train), validation.as_mut(), Some(&mut test)]
        .into_iter()
        .flatten()
    {
        if let Features::Dense(m) = &mut part.features {
            for mut row in m.rows_mut() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = (*v - scaling.mean[j]) / scaling.std[j];
                }
            }
        }
        part.scaling = Some(scaling.clone());
    }
    Ok(Splits {
        train,
        validation,
        test,
    })
}

const HLR_MAGIC: &[u8; 8] = b"MSVGDHLR";
const HLR_VERSION: u32 = 1;

/// Persists a generated HLR instance, including generator settings, seed and
/// the true parameters.
pub fn persist_hlr(model: &HlrModel, path: impl AsRef<Path>) -> Result<()> {
    let mut b = Vec::new();
    b.extend_from_slice(HLR_MAGIC);
    b.extend_from_slice(&HLR_VERSION.to_le_bytes());
    let c = &model.config;
    for v in [c.n as u64, c.p as u64, c.groups as u64, c.seed] {
        b.extend_from_slice(&v.to_le_bytes());
    }
    b.push(match c.law {
        GroupLaw::LongTail => 0,
        GroupLaw::Uniform => 1,
    });
    let h = &c.hyper;
    for v in [
        c.sparsity,
        c.zipf_exponent,
        h.sigma_beta,
        h.sigma_alpha,
        h.mu_tau,
        h.sigma_tau,
        model.true_alpha,
        model.true_log_tau,
    ] {
        b.extend_from_slice(&v.to_le_bytes());
    }
    put_f64s(&mut b, &model.true_beta);
    put_f64s(&mut b, &model.true_z);
    let x = &model.features;
    b.extend_from_slice(&(x.nrows as u64).to_le_bytes());
    b.extend_from_slice(&(x.ncols as u64).to_le_bytes());
    b.extend_from_slice(&(x.nnz() as u64).to_le_bytes());
    for v in &x.indptr {
        b.extend_from_slice(&(*v as u64).to_le_bytes());
    }
    for v in &x.indices {
        b.extend_from_slice(&(*v as u32).to_le_bytes());
    }
    for v in &x.values {
        b.extend_from_slice(&v.to_le_bytes());
    }
    b.extend_from_slice(&model.labels);
    for g in &model.groups {
        b.extend_from_slice(&g.to_le_bytes());
    }
    write_atomic(path.as_ref(), &b)
}

fn put_f64s(b: &mut Vec<u8>, vals: &[f64]) {
    b.extend_from_slice(&(vals.len() as u64).to_le_bytes());
    for v in vals {
        b.extend_from_slice(&v.to_le_bytes());
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(self.err("truncated file")),
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Format {
            path: self.path.to_path_buf(),
            msg: msg.into(),
        }
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| self.err("length overflow"))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.usize()?;
        if n > self.bytes.len() / 8 {
            return Err(self.err("truncated file"));
        }
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn load_hlr(path: impl AsRef<Path>) -> Result<HlrModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cur = Cursor {
        bytes: &bytes,
        pos: 0,
        path,
    };
    if cur.take(8)? != HLR_MAGIC {
        return Err(cur.err("not an HLR container"));
    }
    let version = cur.u32()?;
    if version != HLR_VERSION {
        return Err(cur.err(&format!(
            "unsupported version {version} (expected {HLR_VERSION})"
        )));
    }
    let (n, p, groups, seed) = (cur.usize()?, cur.usize()?, cur.usize()?, cur.u64()?);
    let law = match cur.u8()? {
        0 => GroupLaw::LongTail,
        1 => GroupLaw::Uniform,
        _ => return Err(cur.err("unknown group law")),
    };
    let sparsity = cur.f64()?;
    let zipf_exponent = cur.f64()?;
    let hyper = HlrHyper {
        sigma_beta: cur.f64()?,
        sigma_alpha: cur.f64()?,
        mu_tau: cur.f64()?,
        sigma_tau: cur.f64()?,
    };
    let true_alpha = cur.f64()?;
    let true_log_tau = cur.f64()?;
    let true_beta = cur.f64s()?;
    let true_z = cur.f64s()?;
    let nrows = cur.usize()?;
    let ncols = cur.usize()?;
    let nnz = cur.usize()?;
    if nrows != n || ncols != p || true_beta.len() != p || true_z.len() != groups {
        return Err(cur.err("inconsistent dimensions"));
    }
    if nnz > bytes.len() {
        return Err(cur.err("truncated file"));
    }
    let indptr = (0..=nrows)
        .map(|_| cur.usize())
        .collect::<Result<Vec<_>>>()?;
    let indices = (0..nnz)
        .map(|_| cur.u32().map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let values = (0..nnz).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
    let labels = cur.take(n)?.to_vec();
    let group_idx = (0..n).map(|_| cur.u32()).collect::<Result<Vec<_>>>()?;
    if cur.pos != bytes.len() {
        return Err(cur.err("trailing bytes"));
    }
    if indptr.last() != Some(&nnz)
        || indices.iter().any(|c| *c >= p)
        || group_idx.iter().any(|g| *g as usize >= groups)
        || labels.iter().any(|y| *y > 1)
    {
        return Err(cur.err("corrupt payload"));
    }
    Ok(HlrModel {
        config: HlrConfig {
            n,
            p,
            groups,
            law,
            sparsity,
            zipf_exponent,
            hyper,
            seed,
        },
        features: CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        },
        labels,
        groups: group_idx,
        true_beta,
        true_alpha,
        true_z,
        true_log_tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor as IoCursor;

    #[test]
    fn synthetic_classification_is_seeded_and_balanced_enough() {
        let a = synthetic_classification(400, 6, 1).unwrap();
        assert_eq!(a, synthetic_classification(400, 6, 1).unwrap());
        assert_ne!(a, synthetic_classification(400, 6, 2).unwrap());
        let pos = a.labels.iter().filter(|&&y| y == 1).count();
        assert!(pos > 40 && pos < 360, "{pos} positives");
        assert_eq!((a.n(), a.p()), (400, 6));
    }

    fn libsvm(s: &str) -> Result<Dataset> {
        read_libsvm(IoCursor::new(s), "t".into(), Path::new("mem"))
    }

    #[test]
    fn libsvm_line_format() {
        let ds = libsvm("1 3:0.5 7:-2\n").unwrap();
        assert_eq!(ds.labels, vec![1]);
        let Features::Sparse(m) = &ds.features else {
            panic!()
        };
        let (idx, val) = m.row(0);
        // 1-based columns 3 and 7
        assert_eq!(idx, &[2, 6]);
        assert_eq!(val, &[0.5, -2.0]);
        assert_eq!(m.ncols, 7);
    }

    #[test]
    fn libsvm_label_mapping_and_errors() {
        let ds = libsvm("-1 1:1\n+1 2:1\n-1 1:2\n").unwrap();
        assert_eq!(ds.labels, vec![0, 1, 0]);
        let err = libsvm("1 1:1\n0 2:x\n").unwrap_err();
        assert!(matches!(err, Error::DataLine { line: 2, .. }), "{err}");
        assert!(libsvm("1 1:1\n2 1:1\n3 1:1\n").is_err());
        assert!(libsvm("1 0:1\n").is_err());
    }

    #[test]
    fn csv_with_header_and_string_classes() {
        let text = "a,b,c,label\n1,2,3,0\n4,5,6,1\n7,8,9,1\n";
        let ds = read_csv(IoCursor::new(text), true, None, "c".into()).unwrap();
        assert_eq!((ds.n(), ds.p()), (3, 3));
        assert_eq!(ds.labels, vec![0, 1, 1]);
        let text = "M,1.0,2.0\nB,3.0,4.0\n";
        let ds = read_csv(IoCursor::new(text), false, Some(0), "c".into()).unwrap();
        assert_eq!(ds.labels, vec![1, 0]);
        let bad = "1,2,0\n1,x,1\n";
        assert!(matches!(
            read_csv(IoCursor::new(bad), false, None, "c".into()),
            Err(Error::DataLine { line: 2, .. })
        ));
        let three = "1,a\n2,b\n3,c\n";
        assert!(read_csv(IoCursor::new(three), false, None, "c".into()).is_err());
    }

    fn toy(n: usize) -> Dataset {
        let x = Array2::from_shape_fn((n, 3), |(i, j)| match j {
            0 => i as f64,
            1 => (i * i % 7) as f64,
            _ => 5.0,
        });
        Dataset {
            name: "toy".into(),
            features: Features::Dense(x),
            labels: (0..n).map(|i| (i % 2) as u8).collect(),
            scaling: None,
        }
    }

    #[test]
    fn split_partition_and_determinism() {
        let spec = SplitSpec::train_val_test(4);
        let (a, b, c) = spec.indices(50).unwrap();
        assert_eq!(spec.indices(50).unwrap(), (a.clone(), b.clone(), c.clone()));
        let mut all: Vec<usize> = a.iter().chain(&b).chain(&c).copied().collect();
        all.sort();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
        assert_eq!((a.len(), b.len(), c.len()), (30, 10, 10));
        assert!(SplitSpec::train_test(0).indices(1).is_err());
    }

    #[test]
    fn standardization_uses_train_statistics() {
        let ds = toy(40);
        let s = standardize_and_split(&ds, &SplitSpec::train_val_test(1)).unwrap();
        let Features::Dense(x) = &s.train.features else {
            panic!()
        };
        let n = x.nrows() as f64;
        for j in 0..2 {
            let c = x.column(j);
            let mean = c.sum() / n;
            let sd = (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            assert!(mean.abs() < 1e-8 && (sd - 1.0).abs() < 1e-8);
        }
        // constant column: centred, unscaled
        assert!(x.column(2).iter().all(|v| *v == 0.0));
        let sc = s.train.scaling.as_ref().unwrap();
        assert_eq!(sc.std[2], 1.0);
        // test rows use the same transform
        let Features::Dense(xt) = &s.test.features else {
            panic!()
        };
        let (_, _, te) = SplitSpec::train_val_test(1).indices(40).unwrap();
        let raw = ds.features.to_dense();
        assert!((xt[[0, 0]] - (raw[[te[0], 0]] - sc.mean[0]) / sc.std[0]).abs() < 1e-15);
    }

    #[test]
    fn libsvm_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut csr = CsrMatrix::empty(30);
        for r in 0..25 {
            let mut entries = Vec::new();
            for c in 0..29 {
                if rng.random_bool(0.2) {
                    entries.push((c, rng.random_range(-5.0..5.0)));
                }
            }
            // the last column must appear so that ncols survives
            if r == 24 {
                entries.push((29, 1.0));
            }
            csr.push_row(entries);
        }
        let ds = Dataset {
            name: "rt".into(),
            features: Features::Sparse(csr.clone()),
            labels: (0..25).map(|i| (i % 3 == 0) as u8).collect(),
            scaling: None,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.libsvm");
        save_libsvm(&ds, &path).unwrap();
        let back = load_dataset(&path, &DataFormat::LibsvmSparseText).unwrap();
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.features, Features::Sparse(csr));
    }
}
