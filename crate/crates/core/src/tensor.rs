//! Dense tensor algebra.
//!
//! Tensors are stored row-major with the last index varying fastest, so the
//! canonical flat offset of `(i_1, ..., i_d)` is `sum_j i_j * prod_{l>j} p_l`.
//! With this layout the mode-1 unfolding of an order-3 tensor puts entry
//! `(i, j, k)` in column `j * p_3 + k`.
//!
//! Modes and in-memory indices are zero-based throughout the API. The text
//! formats (tensor files, trace CSVs, observation files) use one-based arm
//! indices; [`Arm`] converts between the two.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense real matrix. Factor matrices, unfoldings and design matrices all use it.
pub type Matrix = DMatrix<f64>;

/// Order-d dense tensor with canonical (last index fastest) layout.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    values: Vec<f64>,
}

/// Strides of the canonical layout.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for j in (0..dims.len().saturating_sub(1)).rev() {
        s[j] = s[j + 1] * dims[j + 1];
    }
    s
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::Shape("tensor must have at least one mode".into()));
    }
    if dims.contains(&0) {
        return Err(Error::Shape(format!("dimensions must be positive, got {dims:?}")));
    }
    Ok(())
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        check_dims(&dims)?;
        let len: usize = dims.iter().product();
        if values.len() != len {
            return Err(Error::Shape(format!(
                "dims {dims:?} need {len} values, got {}",
                values.len()
            )));
        }
        Ok(DenseTensor { dims, values })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let len = dims.iter().product();
        DenseTensor {
            dims: dims.to_vec(),
            values: vec![0.0; len],
        }
    }

    /// Builds a tensor by evaluating `f` at every zero-based index, in layout order.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let len: usize = dims.iter().product();
        let mut idx = vec![0usize; dims.len()];
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            values.push(f(&idx));
            increment(&mut idx, dims);
        }
        DenseTensor {
            dims: dims.to_vec(),
            values,
        }
    }

    /// The indicator tensor `e_{i_1} o ... o e_{i_d}` of an arm.
    pub fn indicator(dims: &[usize], arm: &Arm) -> Result<Self> {
        let off = flat_offset(arm, dims)?;
        let mut t = DenseTensor::zeros(dims);
        t.values[off] = 1.0;
        Ok(t)
    }

    /// Outer product `v_1 o v_2 o ... o v_d`.
    pub fn outer(vectors: &[&[f64]]) -> Self {
        let dims: Vec<usize> = vectors.iter().map(|v| v.len()).collect();
        let mut values = vec![1.0];
        for v in vectors {
            let mut next = Vec::with_capacity(values.len() * v.len());
            for &a in &values {
                next.extend(v.iter().map(|&b| a * b));
            }
            values = next;
        }
        DenseTensor { dims, values }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Entry at a zero-based index. Panics when out of range.
    pub fn at(&self, idx: &[usize]) -> f64 {
        let off: usize = idx
            .iter()
            .zip(strides(&self.dims))
            .map(|(&i, s)| i * s)
            .sum();
        self.values[off]
    }

    /// Entry at an arm, with range checking.
    pub fn get(&self, arm: &Arm) -> Result<f64> {
        Ok(self.values[flat_offset(arm, &self.dims)?])
    }

    pub fn scaled(&self, c: f64) -> Self {
        DenseTensor {
            dims: self.dims.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Largest entry and its arm; ties go to the lowest flat offset.
    pub fn argmax(&self) -> (Arm, f64) {
        let (off, val) = argmax_first(&self.values);
        (Arm::from_offset(off, &self.dims), val)
    }

    /// Serializes to the text format: a `dims:` header followed by the values
    /// in layout order, one last-mode fiber per line.
    pub fn to_text(&self) -> String {
        let mut out = String::from("dims:");
        for p in &self.dims {
            out.push(' ');
            out.push_str(&p.to_string());
        }
        out.push('\n');
        let row = *self.dims.last().unwrap_or(&1);
        for chunk in self.values.chunks(row) {
            let line: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (header_line, header) = loop {
            match lines.next() {
                Some((_, l)) if l.trim().is_empty() => continue,
                Some((i, l)) => break (i + 1, l.trim()),
                None => return Err(Error::parse(1, "empty tensor file")),
            }
        };
        let rest = header
            .strip_prefix("dims:")
            .ok_or_else(|| Error::parse(header_line, "expected header `dims: p1 p2 ... pd`"))?;
        let dims = rest
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|_| Error::parse(header_line, format!("bad dimension `{tok}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::parse(header_line, "dimensions must be positive integers"));
        }
        let expected: usize = dims.iter().product();
        let mut values = Vec::with_capacity(expected);
        let mut last_line = header_line;
        for (i, line) in lines {
            last_line = i + 1;
            for tok in line.split_whitespace() {
                let v = tok
                    .parse::<f64>()
                    .map_err(|_| Error::parse(i + 1, format!("bad value `{tok}`")))?;
                values.push(v);
            }
        }
        if values.len() != expected {
            return Err(Error::parse(
                last_line,
                format!("dims {dims:?} need {expected} values, found {}", values.len()),
            ));
        }
        DenseTensor::new(dims, values)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        DenseTensor::from_text(&text).map_err(|e| e.with_path(path))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Index of the first maximal element. NaNs are never selected unless all are NaN.
pub(crate) fn argmax_first(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    (best, values.get(best).copied().unwrap_or(f64::NAN))
}

/// Advances a zero-based multi-index in layout order (last index fastest).
pub(crate) fn increment(idx: &mut [usize], dims: &[usize]) {
    for j in (0..idx.len()).rev() {
        idx[j] += 1;
        if idx[j] < dims[j] {
            return;
        }
        idx[j] = 0;
    }
}

/// One entry per mode, identifying a cell of the reward tensor.
///
/// Stored zero-based; `Display`/`FromStr` use the one-based `i1|i2|...|id` form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Arm(Vec<usize>);

impl Arm {
    pub fn new(zero_based: Vec<usize>) -> Self {
        Arm(zero_based)
    }

    pub fn from_one_based(indices: &[usize]) -> Result<Self> {
        indices
            .iter()
            .map(|&i| {
                i.checked_sub(1)
                    .ok_or_else(|| Error::Range("arm indices are one-based".into()))
            })
            .collect::<Result<Vec<_>>>()
            .map(Arm)
    }

    /// Inverse of [`flat_offset`].
    pub fn from_offset(mut offset: usize, dims: &[usize]) -> Self {
        let mut idx = vec![0; dims.len()];
        for j in (0..dims.len()).rev() {
            idx[j] = offset % dims[j];
            offset /= dims[j];
        }
        Arm(idx)
    }

    /// Concatenates a context prefix and a decision suffix.
    pub fn join(context: &[usize], decision: &[usize]) -> Self {
        let mut v = Vec::with_capacity(context.len() + decision.len());
        v.extend_from_slice(context);
        v.extend_from_slice(decision);
        Arm(v)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn check(&self, dims: &[usize]) -> Result<()> {
        if self.0.len() != dims.len() {
            return Err(Error::Range(format!(
                "arm {self} has {} indices but the tensor has order {}",
                self.0.len(),
                dims.len()
            )));
        }
        for (j, (&i, &p)) in self.0.iter().zip(dims).enumerate() {
            if i >= p {
                return Err(Error::Range(format!(
                    "arm {self}: index {} on mode {} exceeds dimension {p}",
                    i + 1,
                    j + 1
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, i) in self.0.iter().enumerate() {
            if j > 0 {
                f.write_str("|")?;
            }
            write!(f, "{}", i + 1)?;
        }
        Ok(())
    }
}

impl FromStr for Arm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let idx = s
            .split('|')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Range(format!("bad arm `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Arm::from_one_based(&idx)
    }
}

/// Canonical flat offset of an arm.
pub fn flat_offset(arm: &Arm, dims: &[usize]) -> Result<usize> {
    arm.check(dims)?;
    Ok(arm
        .indices()
        .iter()
        .zip(strides(dims))
        .map(|(&i, s)| i * s)
        .sum())
}

/// Splits the layout around `mode` into (outer, p_mode, inner) extents.
fn mode_extents(dims: &[usize], mode: usize) -> (usize, usize, usize) {
    let outer: usize = dims[..mode].iter().product();
    let inner: usize = dims[mode + 1..].iter().product();
    (outer, dims[mode], inner)
}

fn check_mode(dims: &[usize], mode: usize) -> Result<()> {
    if mode >= dims.len() {
        return Err(Error::Range(format!(
            "mode {mode} out of range for order-{} tensor (modes are zero-based)",
            dims.len()
        )));
    }
    Ok(())
}

/// Mode-`mode` unfolding. Columns enumerate the remaining indices in their
/// original order with the last varying fastest.
pub fn matricize(x: &DenseTensor, mode: usize) -> Result<Matrix> {
    check_mode(&x.dims, mode)?;
    let (outer, p, inner) = mode_extents(&x.dims, mode);
    let mut m = Matrix::zeros(p, outer * inner);
    for o in 0..outer {
        for i in 0..p {
            let src = &x.values[(o * p + i) * inner..(o * p + i + 1) * inner];
            for (k, &v) in src.iter().enumerate() {
                m[(i, o * inner + k)] = v;
            }
        }
    }
    Ok(m)
}

/// Inverse of [`matricize`].
pub fn dematricize(m: &Matrix, mode: usize, dims: &[usize]) -> Result<DenseTensor> {
    check_dims(dims)?;
    check_mode(dims, mode)?;
    let (outer, p, inner) = mode_extents(dims, mode);
    if m.nrows() != p || m.ncols() != outer * inner {
        return Err(Error::Shape(format!(
            "{}x{} matrix cannot fold into dims {dims:?} along mode {mode}",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut values = vec![0.0; outer * p * inner];
    for o in 0..outer {
        for i in 0..p {
            for k in 0..inner {
                values[(o * p + i) * inner + k] = m[(i, o * inner + k)];
            }
        }
    }
    DenseTensor::new(dims.to_vec(), values)
}

/// Marginal multiplication `x ×_mode y`: contracts mode `mode` of `x` against
/// the columns of `y`, replacing that dimension by `y.nrows()`.
pub fn marginal_multiply(x: &DenseTensor, y: &Matrix, mode: usize) -> Result<DenseTensor> {
    check_mode(&x.dims, mode)?;
    let (outer, p, inner) = mode_extents(&x.dims, mode);
    if y.ncols() != p {
        return Err(Error::Shape(format!(
            "matrix with {} columns cannot multiply mode {mode} of dimension {p}",
            y.ncols()
        )));
    }
    let r = y.nrows();
    let mut out = vec![0.0; outer * r * inner];
    for o in 0..outer {
        let src = &x.values[o * p * inner..(o + 1) * p * inner];
        let dst = &mut out[o * r * inner..(o + 1) * r * inner];
        for i in 0..r {
            let row = &mut dst[i * inner..(i + 1) * inner];
            for k in 0..p {
                let w = y[(i, k)];
                if w == 0.0 {
                    continue;
                }
                let fiber = &src[k * inner..(k + 1) * inner];
                for (a, b) in row.iter_mut().zip(fiber) {
                    *a += w * b;
                }
            }
        }
    }
    let mut dims = x.dims.clone();
    dims[mode] = r;
    DenseTensor::new(dims, out)
}

/// Applies `x ×_1 m_1 ×_2 ... ×_d m_d`, skipping modes whose matrix is `None`.
pub fn multiply_all(x: &DenseTensor, mats: &[Option<&Matrix>]) -> Result<DenseTensor> {
    if mats.len() != x.order() {
        return Err(Error::Shape(format!(
            "{} matrices for an order-{} tensor",
            mats.len(),
            x.order()
        )));
    }
    let mut cur = x.clone();
    for (j, m) in mats.iter().enumerate() {
        if let Some(m) = m {
            cur = marginal_multiply(&cur, m, j)?;
        }
    }
    Ok(cur)
}

/// Projects every mode onto the transpose of the given factor: `x ×_j U_jᵀ`.
pub fn project(x: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    let ts: Vec<Matrix> = factors.iter().map(|u| u.transpose()).collect();
    let refs: Vec<Option<&Matrix>> = ts.iter().map(Some).collect();
    multiply_all(x, &refs)
}

pub fn inner_product(x: &DenseTensor, y: &DenseTensor) -> Result<f64> {
    if x.dims != y.dims {
        return Err(Error::Shape(format!(
            "inner product of dims {:?} and {:?}",
            x.dims, y.dims
        )));
    }
    Ok(x.values.iter().zip(&y.values).map(|(a, b)| a * b).sum())
}

/// Frobenius norm and entrywise max-abs norm.
pub fn norms(x: &DenseTensor) -> (f64, f64) {
    let fro = x.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    let max = x.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (fro, max)
}

/// Core tensor plus one factor matrix per mode (`factors[j]` is `p_j × r_j`).
#[derive(Clone, Debug, PartialEq)]
pub struct TuckerDecomp {
    pub core: DenseTensor,
    pub factors: Vec<Matrix>,
}

impl TuckerDecomp {
    pub fn new(core: DenseTensor, factors: Vec<Matrix>) -> Result<Self> {
        if factors.len() != core.order() {
            return Err(Error::Shape(format!(
                "{} factors for an order-{} core",
                factors.len(),
                core.order()
            )));
        }
        for (j, u) in factors.iter().enumerate() {
            if u.ncols() != core.dims()[j] {
                return Err(Error::Shape(format!(
                    "factor {j} has {} columns, core mode has {}",
                    u.ncols(),
                    core.dims()[j]
                )));
            }
        }
        Ok(TuckerDecomp { core, factors })
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|u| u.nrows()).collect()
    }

    pub fn ranks(&self) -> &[usize] {
        self.core.dims()
    }

    /// Largest deviation of `UᵀU` from the identity over all factors.
    pub fn orthonormality_error(&self) -> f64 {
        self.factors
            .iter()
            .map(orthonormality_error)
            .fold(0.0, f64::max)
    }

    pub fn reconstruct(&self) -> DenseTensor {
        tucker_reconstruct(self).expect("shapes validated at construction")
    }
}

pub(crate) fn orthonormality_error(u: &Matrix) -> f64 {
    let g = u.transpose() * u;
    let mut err = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            err = err.max((g[(i, j)] - target).abs());
        }
    }
    err
}

/// `S ×_1 U_1 ×_2 ... ×_d U_d`.
pub fn tucker_reconstruct(t: &TuckerDecomp) -> Result<DenseTensor> {
    let refs: Vec<Option<&Matrix>> = t.factors.iter().map(Some).collect();
    multiply_all(&t.core, &refs)
}

/// Top-`r` left singular vectors of `m`, with each column's largest-magnitude
/// entry made positive.
pub fn truncated_svd_left(m: &Matrix, r: usize) -> Result<Matrix> {
    let k = m.nrows().min(m.ncols());
    if r == 0 || r > k {
        return Err(Error::Range(format!(
            "rank {r} outside [1, {k}] for a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let svd = nalgebra::SVD::try_new(m.clone(), true, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("SVD did not converge".into()))?;
    let u = svd
        .u
        .ok_or_else(|| Error::Numeric("SVD returned no left vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut out = Matrix::zeros(m.nrows(), r);
    for (c, &src) in order.iter().take(r).enumerate() {
        out.set_column(c, &u.column(src));
    }
    fix_signs(&mut out);
    Ok(out)
}

/// Flips columns so their largest-magnitude entry (first on ties) is positive.
pub(crate) fn fix_signs(u: &mut Matrix) {
    for c in 0..u.ncols() {
        let mut best = 0;
        for i in 1..u.nrows() {
            if u[(i, c)].abs() > u[(best, c)].abs() {
                best = i;
            }
        }
        if u[(best, c)] < 0.0 {
            u.column_mut(c).neg_mut();
        }
    }
}

/// Orthonormal basis of the complement of `u`'s column space (`p × (p-r)`).
///
/// Built by Gram-Schmidt over the standard basis, always taking the basis
/// vector with the largest residual next, with one re-orthogonalization pass.
pub fn orthonormal_complement(u: &Matrix) -> Result<Matrix> {
    let (p, r) = u.shape();
    if r > p {
        return Err(Error::Shape(format!("{p}x{r} matrix has more columns than rows")));
    }
    let err = orthonormality_error(u);
    if err > 1e-8 {
        return Err(Error::Contract(format!(
            "complement needs orthonormal columns (|UᵀU - I| = {err:.2e})"
        )));
    }
    let mut basis: Vec<Vec<f64>> = (0..r).map(|c| u.column(c).iter().copied().collect()).collect();
    let mut used = vec![false; p];
    let mut out = Matrix::zeros(p, p - r);
    for c in 0..p - r {
        let mut best = None;
        let mut best_norm = -1.0;
        for i in (0..p).filter(|&i| !used[i]) {
            let captured: f64 = basis.iter().map(|b| b[i] * b[i]).sum();
            let residual = 1.0 - captured;
            if residual > best_norm + 1e-12 {
                best_norm = residual;
                best = Some(i);
            }
        }
        let i = best.expect("a free basis vector remains while the complement is incomplete");
        used[i] = true;
        let mut v = vec![0.0; p];
        v[i] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
                for (vk, bk) in v.iter_mut().zip(b) {
                    *vk -= dot * bk;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return Err(Error::Numeric("complement construction lost rank".into()));
        }
        v.iter_mut().for_each(|x| *x /= norm);
        for (k, &x) in v.iter().enumerate() {
            out[(k, c)] = x;
        }
        basis.push(v);
    }
    Ok(out)
}

/// `[U, U_⊥]`, the square orthogonal matrix whose leading columns are `u`.
pub fn complete_basis(u: &Matrix) -> Result<Matrix> {
    let comp = orthonormal_complement(u)?;
    let (p, r) = u.shape();
    let mut w = Matrix::zeros(p, p);
    w.view_mut((0, 0), (p, r)).copy_from(u);
    w.view_mut((0, r), (p, p - r)).copy_from(&comp);
    Ok(w)
}

/// A fixed re-indexing of a `dims`-shaped tensor into a vector whose leading
/// entries are the `ranks` sub-block.
///
/// Positions come in three tiers, each in canonical layout order:
/// 1. every index inside the block (`i_j < r_j` for all `j`), `prod r_j` entries;
/// 2. indices with at least one coordinate inside the block and one outside;
/// 3. indices with every coordinate outside the block, `prod (p_j - r_j)` entries.
///
/// Tiers 1 and 2 together are the first `q = prod p_j - prod (p_j - r_j)`
/// positions, the ones that carry the low-rank signal after rotation.
#[derive(Clone, Debug)]
pub struct BlockedLayout {
    dims: Vec<usize>,
    ranks: Vec<usize>,
    /// blocked position -> canonical offset
    order: Vec<usize>,
    /// canonical offset -> blocked position
    position: Vec<usize>,
    block_len: usize,
    head_len: usize,
}

impl BlockedLayout {
    pub fn new(dims: &[usize], ranks: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        if ranks.len() != dims.len() {
            return Err(Error::Shape(format!("ranks {ranks:?} do not match dims {dims:?}")));
        }
        for (j, (&r, &p)) in ranks.iter().zip(dims).enumerate() {
            if r > p {
                return Err(Error::Domain(format!("rank {r} exceeds dimension {p} on mode {j}")));
            }
        }
        let len: usize = dims.iter().product();
        let mut tiers: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let mut idx = vec![0usize; dims.len()];
        for off in 0..len {
            let inside = idx.iter().zip(ranks).filter(|(i, r)| i < r).count();
            let tier = if inside == dims.len() {
                0
            } else if inside > 0 {
                1
            } else {
                2
            };
            tiers[tier].push(off);
            increment(&mut idx, dims);
        }
        let block_len = tiers[0].len();
        let head_len = block_len + tiers[1].len();
        let order: Vec<usize> = tiers.concat();
        let mut position = vec![0; len];
        for (pos, &off) in order.iter().enumerate() {
            position[off] = pos;
        }
        Ok(BlockedLayout {
            dims: dims.to_vec(),
            ranks: ranks.to_vec(),
            order,
            position,
            block_len,
            head_len,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// `prod r_j`.
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// `q = prod p_j - prod (p_j - r_j)`.
    pub fn head_len(&self) -> usize {
        self.head_len
    }

    /// Canonical offset stored at a blocked position.
    pub fn offset_at(&self, pos: usize) -> usize {
        self.order[pos]
    }

    /// Blocked position of a canonical offset.
    pub fn position_of(&self, offset: usize) -> usize {
        self.position[offset]
    }

    pub fn vectorize(&self, y: &DenseTensor) -> Result<Vec<f64>> {
        if y.dims() != self.dims.as_slice() {
            return Err(Error::Shape(format!(
                "layout for {:?} applied to tensor {:?}",
                self.dims,
                y.dims()
            )));
        }
        Ok(self.order.iter().map(|&off| y.values[off]).collect())
    }

    pub fn unvectorize(&self, v: &[f64]) -> Result<DenseTensor> {
        if v.len() != self.len() {
            return Err(Error::Shape(format!(
                "vector of length {} for layout of length {}",
                v.len(),
                self.len()
            )));
        }
        let mut values = vec![0.0; v.len()];
        for (pos, &off) in self.order.iter().enumerate() {
            values[off] = v[pos];
        }
        DenseTensor::new(self.dims.clone(), values)
    }
}

/// Blocked vectorization of `y` (see [`BlockedLayout`]).
pub fn vectorize_blocked(y: &DenseTensor, ranks: &[usize]) -> Result<Vec<f64>> {
    BlockedLayout::new(y.dims(), ranks)?.vectorize(y)
}
