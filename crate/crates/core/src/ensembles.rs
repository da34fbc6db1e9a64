//! Embedding operators: normalized Gaussian matrices, partial circulant
//! matrices generated by random signs, and the column-sign-randomized wrapper
//! `A_ε = A·D_ε`.
//!
//! # Circulant convention
//!
//! Indices are zero-based. Row `j` of the full circulant matrix `Γ` is the
//! shift `τ_j ξ` with `(τ_j v)_i = v_{(j−i) mod n}`, so `Γx` is the circular
//! convolution of `ξ` with `x`. For `ξ = (a, b, c, d)`:
//!
//! ```text
//! Γ = | a d c b |
//!     | b a d c |
//!     | c b a d |
//!     | d c b a |
//! ```
//!
//! The partial operator keeps rows `I = (I_0 < … < I_{m−1})` and scales by
//! `√(1/m)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{usage, Error, Result};
use crate::numerics::matrix::norm_squared;
use crate::numerics::{mat_vec, CirculantKernel, DenseMatrix, RealVector, RngStream};

/// Materialization refuses operators with more than this many entries.
pub const MATERIALIZE_LIMIT: usize = 100_000_000;

/// A vector of `±1` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SignVector(Vec<f64>);

impl SignVector {
    pub fn new(signs: Vec<f64>) -> Result<Self> {
        if signs.is_empty() {
            return usage("sign vector must be nonempty");
        }
        if let Some(i) = signs.iter().position(|&s| s != 1.0 && s != -1.0) {
            return usage(format!("sign entry {i} is {} (must be ±1)", signs[i]));
        }
        Ok(Self(signs))
    }

    pub fn from_i8(signs: &[i8]) -> Result<Self> {
        Self::new(signs.iter().map(|&s| s as f64).collect())
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_all_positive(&self) -> bool {
        self.0.iter().all(|&s| s == 1.0)
    }

    /// Coordinatewise product, itself a sign vector.
    pub fn product(&self, other: &SignVector) -> Result<SignVector> {
        if self.len() != other.len() {
            return usage("sign vectors of different lengths");
        }
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect(),
        ))
    }

    /// `ε ⊙ x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.0.iter().zip(x).map(|(s, v)| s * v).collect()
    }

    pub fn negated(&self) -> SignVector {
        Self(self.0.iter().map(|s| -s).collect())
    }
}

/// `n` independent uniform signs drawn from the start of `r`.
pub fn sample_sign_vector(n: usize, r: RngStream) -> Result<SignVector> {
    if n == 0 {
        return usage("sign vector length must be at least 1");
    }
    let mut c = r.cursor();
    Ok(SignVector((0..n).map(|_| c.next_sign()).collect()))
}

/// Generator and selected rows of a partial circulant matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CirculantSpec {
    generator: SignVector,
    rows: Vec<usize>,
}

impl CirculantSpec {
    pub fn new(generator: SignVector, rows: Vec<usize>) -> Result<Self> {
        let n = generator.len();
        if rows.is_empty() {
            return usage("circulant row set must be nonempty");
        }
        if rows.len() > n {
            return usage(format!(
                "{} rows requested from an n = {n} circulant",
                rows.len()
            ));
        }
        if !rows.windows(2).all(|w| w[0] < w[1]) {
            return usage("circulant row indices must be strictly increasing");
        }
        if let Some(&bad) = rows.iter().find(|&&i| i >= n) {
            return usage(format!(
                "circulant row index {bad} out of range for n = {n}"
            ));
        }
        Ok(Self { generator, rows })
    }

    /// Rows `0..m`.
    pub fn first_rows(generator: SignVector, m: usize) -> Result<Self> {
        Self::new(generator, (0..m).collect())
    }

    /// A uniformly random `m`-subset of rows drawn from `r`.
    pub fn random_rows(generator: SignVector, m: usize, r: RngStream) -> Result<Self> {
        let n = generator.len();
        if m == 0 || m > n {
            return usage(format!("cannot select {m} rows out of {n}"));
        }
        let rows = r.cursor().subset(n, m);
        Self::new(generator, rows)
    }

    pub fn generator(&self) -> &SignVector {
        &self.generator
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }
}

/// A partial circulant operator with its cached convolution spectrum.
#[derive(Clone, Debug)]
pub struct CirculantOperator {
    spec: CirculantSpec,
    kernel: CirculantKernel,
    scale: f64,
}

impl CirculantOperator {
    pub fn spec(&self) -> &CirculantSpec {
        &self.spec
    }

    pub fn uses_fft(&self) -> bool {
        self.kernel.uses_fft()
    }
}

/// An `m × n` linear map with a uniform apply/materialize contract.
#[derive(Clone, Debug)]
pub enum EmbeddingOperator {
    Dense(DenseMatrix),
    Circulant(CirculantOperator),
    /// `base · D_signs`. Never wraps another column-randomized operator.
    ColumnRandomized {
        base: Box<EmbeddingOperator>,
        signs: SignVector,
    },
}

impl EmbeddingOperator {
    pub fn identity(n: usize) -> Self {
        Self::Dense(DenseMatrix::identity(n))
    }

    /// `(m, n)`.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Self::Dense(a) => (a.rows(), a.cols()),
            Self::Circulant(c) => (c.spec.rows.len(), c.spec.generator.len()),
            Self::ColumnRandomized { base, .. } => base.dims(),
        }
    }

    pub fn rows(&self) -> usize {
        self.dims().0
    }

    pub fn cols(&self) -> usize {
        self.dims().1
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Dense(_) => "dense",
            Self::Circulant(_) => "circulant",
            Self::ColumnRandomized { .. } => "column-randomized",
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<RealVector> {
        let n = self.cols();
        if x.len() != n {
            return usage(format!(
                "operator has {n} columns but input has length {}",
                x.len()
            ));
        }
        match self {
            Self::Dense(a) => mat_vec(a, x),
            Self::Circulant(c) => {
                let full = c.kernel.apply(x)?;
                Ok(RealVector::from_vec_unchecked(
                    c.spec.rows.iter().map(|&j| c.scale * full[j]).collect(),
                ))
            }
            Self::ColumnRandomized { base, signs } => base.apply(&signs.apply(x)),
        }
    }

    /// Applies the operator to every column of `x` (`n × p`), returning `m × p`.
    pub fn apply_columns(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let (m, n) = self.dims();
        if x.rows() != n {
            return usage(format!(
                "operator has {n} columns but the batch has {} rows",
                x.rows()
            ));
        }
        match self {
            Self::Dense(a) => a.mat_mul(x),
            Self::Circulant(_) => {
                let p = x.cols();
                let mut out = DenseMatrix::zeros(m, p);
                for col in 0..p {
                    let y = self.apply(&x.column(col))?;
                    for (r, v) in y.iter().enumerate() {
                        out.set(r, col, *v);
                    }
                }
                Ok(out)
            }
            Self::ColumnRandomized { base, signs } => {
                base.apply_columns(&x.scale_rows(signs.as_slice())?)
            }
        }
    }

    pub fn materialize(&self) -> Result<DenseMatrix> {
        let (m, n) = self.dims();
        if m.saturating_mul(n) > MATERIALIZE_LIMIT {
            return Err(Error::Resource(format!(
                "materializing a {m}x{n} operator exceeds {MATERIALIZE_LIMIT} entries"
            )));
        }
        match self {
            Self::Dense(a) => Ok(a.clone()),
            Self::Circulant(c) => {
                let xi = c.spec.generator.as_slice();
                let mut out = DenseMatrix::zeros(m, n);
                for (r, &j) in c.spec.rows.iter().enumerate() {
                    for i in 0..n {
                        out.set(r, i, c.scale * xi[(j + n - i) % n]);
                    }
                }
                Ok(out)
            }
            Self::ColumnRandomized { base, signs } => {
                base.materialize()?.scale_columns(signs.as_slice())
            }
        }
    }

    /// Squared Euclidean norms of the columns `A e_i`.
    pub fn column_norms_squared(&self) -> Result<Vec<f64>> {
        match self {
            Self::Dense(a) => Ok(a.column_norms_squared()),
            // Every column of a sign circulant has entries ±√(1/m).
            Self::Circulant(c) => {
                let m = c.spec.rows.len();
                Ok(vec![m as f64 * c.scale * c.scale; c.spec.generator.len()])
            }
            Self::ColumnRandomized { base, .. } => base.column_norms_squared(),
        }
    }

    /// `|‖Ax‖² − ‖x‖²|`.
    pub fn norm_distortion(&self, x: &[f64]) -> Result<f64> {
        let y = self.apply(x)?;
        Ok((y.norm_squared() - norm_squared(x)).abs())
    }
}

/// Dense operator with i.i.d. `N(0, 1/m)` entries, filled row-major from `r`.
pub fn gaussian_operator(m: usize, n: usize, r: RngStream) -> Result<EmbeddingOperator> {
    if m == 0 || n == 0 {
        return usage("operator dimensions must be positive");
    }
    if m > n {
        return usage(format!(
            "gaussian operator needs m <= n, got m = {m}, n = {n}"
        ));
    }
    let scale = 1.0 / (m as f64).sqrt();
    let mut data = vec![0.0; m * n];
    let mut c = r.cursor();
    for v in &mut data {
        *v = scale * c.next_normal();
    }
    Ok(EmbeddingOperator::Dense(DenseMatrix::from_vec_unchecked(
        m, n, data,
    )))
}

/// The normalized partial circulant operator `√(1/m)·P_I·Γ`.
pub fn partial_circulant(spec: CirculantSpec) -> Result<EmbeddingOperator> {
    let spec = CirculantSpec::new(spec.generator, spec.rows)?;
    let kernel = CirculantKernel::new(spec.generator.as_slice())?;
    let scale = (1.0 / spec.rows.len() as f64).sqrt();
    Ok(EmbeddingOperator::Circulant(CirculantOperator {
        spec,
        kernel,
        scale,
    }))
}

/// `A_ε = A·D_ε`. Wrapping a column-randomized operator multiplies the sign
/// vectors; a product of all `+1` unwraps to the base operator.
pub fn column_randomize(base: EmbeddingOperator, eps: SignVector) -> Result<EmbeddingOperator> {
    if eps.len() != base.cols() {
        return usage(format!(
            "sign vector of length {} for an operator with {} columns",
            eps.len(),
            base.cols()
        ));
    }
    let (base, signs) = match base {
        EmbeddingOperator::ColumnRandomized { base, signs } => (*base, signs.product(&eps)?),
        other => (other, eps),
    };
    if signs.is_all_positive() {
        return Ok(base);
    }
    Ok(EmbeddingOperator::ColumnRandomized {
        base: Box::new(base),
        signs,
    })
}

pub fn materialize(op: &EmbeddingOperator) -> Result<DenseMatrix> {
    op.materialize()
}

/// Provenance header written next to an exported operator matrix.
///
/// The file is UTF-8 text, one `key: value` pair per line, in the order
/// `kind`, `rows`, `cols`, then `seed` and `stream` when known, then any
/// extra keys in lexicographic order. Blank lines and lines starting with `#`
/// are ignored on read.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct OperatorHeader {
    pub kind: String,
    pub rows: usize,
    pub cols: usize,
    pub seed: Option<u64>,
    pub stream: Option<u64>,
    pub extra: BTreeMap<String, String>,
}

impl OperatorHeader {
    pub fn for_operator(op: &EmbeddingOperator, provenance: Option<RngStream>) -> Self {
        let (rows, cols) = op.dims();
        let mut extra = BTreeMap::new();
        let mut inner = op;
        if let EmbeddingOperator::ColumnRandomized { base, .. } = op {
            extra.insert("base_kind".into(), base.kind_name().into());
            inner = base;
        }
        if let EmbeddingOperator::Circulant(c) = inner {
            let rows: Vec<String> = c.spec.rows.iter().map(|r| r.to_string()).collect();
            extra.insert("row_indices".into(), rows.join(","));
        }
        Self {
            kind: op.kind_name().into(),
            rows,
            cols,
            seed: provenance.map(|r| r.seed()),
            stream: provenance.map(|r| r.stream_id()),
            extra,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "kind: {}", self.kind);
        let _ = writeln!(s, "rows: {}", self.rows);
        let _ = writeln!(s, "cols: {}", self.cols);
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed: {seed}");
        }
        if let Some(stream) = self.stream {
            let _ = writeln!(s, "stream: {stream}");
        }
        for (k, v) in &self.extra {
            let _ = writeln!(s, "{k}: {v}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let map = parse_key_values(text)?;
        let get = |k: &str| {
            map.get(k)
                .ok_or_else(|| Error::Parse(format!("operator header is missing {k:?}")))
        };
        let num = |k: &str, v: &str| {
            v.parse::<u64>()
                .map_err(|e| Error::Parse(format!("operator header {k}: {e}")))
        };
        let mut header = Self {
            kind: get("kind")?.clone(),
            rows: num("rows", get("rows")?)? as usize,
            cols: num("cols", get("cols")?)? as usize,
            ..Self::default()
        };
        for (k, v) in &map {
            match k.as_str() {
                "kind" | "rows" | "cols" => {}
                "seed" => header.seed = Some(num(k, v)?),
                "stream" => header.stream = Some(num(k, v)?),
                _ => {
                    header.extra.insert(k.clone(), v.clone());
                }
            }
        }
        Ok(header)
    }
}

/// Parses `key: value` lines; rejects duplicates and lines without a colon.
pub(crate) fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `key: value`", lineno + 1)))?;
        let k = k.trim().to_string();
        if map.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Parse(format!(
                "line {}: duplicate key {k:?}",
                lineno + 1
            )));
        }
    }
    Ok(map)
}

/// Writes `<stem>.txt` (matrix text format) and `<stem>.header`.
pub fn export_operator(
    op: &EmbeddingOperator,
    provenance: Option<RngStream>,
    dir: &Path,
    stem: &str,
) -> Result<()> {
    let matrix = op.materialize()?;
    std::fs::write(dir.join(format!("{stem}.txt")), matrix.to_text())?;
    std::fs::write(
        dir.join(format!("{stem}.header")),
        OperatorHeader::for_operator(op, provenance).to_text(),
    )?;
    Ok(())
}

/// Reads an exported operator back as a dense operator.
pub fn import_operator(dir: &Path, stem: &str) -> Result<(EmbeddingOperator, OperatorHeader)> {
    let header = OperatorHeader::from_text(&std::fs::read_to_string(
        dir.join(format!("{stem}.header")),
    )?)?;
    let matrix =
        DenseMatrix::from_text(&std::fs::read_to_string(dir.join(format!("{stem}.txt")))?)?;
    if (matrix.rows(), matrix.cols()) != (header.rows, header.cols) {
        return Err(Error::Parse(format!(
            "header says {}x{} but the matrix is {}x{}",
            header.rows,
            header.cols,
            matrix.rows(),
            matrix.cols()
        )));
    }
    Ok((EmbeddingOperator::Dense(matrix), header))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng_standard_normal;

    fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den.max(f64::MIN_POSITIVE)).sqrt()
    }

    #[test]
    fn gaussian_column_norms_average_one() {
        // 2500 operators of size 4x8 give 10^4 columns.
        let mut total = 0.0;
        let mut count = 0;
        for t in 0..2500 {
            let op = gaussian_operator(4, 8, RngStream::new(17, t)).unwrap();
            for v in op.column_norms_squared().unwrap() {
                total += v;
                count += 1;
            }
        }
        let mean = total / count as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn gaussian_is_deterministic_and_guarded() {
        let a = gaussian_operator(3, 5, RngStream::new(1, 2)).unwrap();
        let b = gaussian_operator(3, 5, RngStream::new(1, 2)).unwrap();
        assert_eq!(a.materialize().unwrap(), b.materialize().unwrap());
        assert!(matches!(
            gaussian_operator(6, 5, RngStream::new(1, 2)),
            Err(Error::Usage(_))
        ));
        let one = gaussian_operator(1, 1, RngStream::new(1, 2)).unwrap();
        let expected = rng_standard_normal(RngStream::new(1, 2), 1)[0];
        assert_eq!(one.materialize().unwrap().data(), &[expected]);
    }

    #[test]
    fn sign_vectors() {
        let s = sample_sign_vector(1_000_000, RngStream::new(8, 8)).unwrap();
        let mean = s.as_slice().iter().sum::<f64>() / s.len() as f64;
        assert!(mean.abs() < 4e-3);
        assert_eq!(
            s,
            sample_sign_vector(1_000_000, RngStream::new(8, 8)).unwrap()
        );
        let one = sample_sign_vector(1, RngStream::new(0, 0)).unwrap();
        assert!(one.as_slice()[0].abs() == 1.0);
        assert!(sample_sign_vector(0, RngStream::new(0, 0)).is_err());
        assert!(SignVector::new(vec![1.0, 0.5]).is_err());
    }

    #[test]
    fn all_ones_generator_sums() {
        let spec = CirculantSpec::new(SignVector::ones(4), vec![0]).unwrap();
        let op = partial_circulant(spec).unwrap();
        for x in [[1.0, 2.0, 3.0, 4.0], [-1.0, 0.5, 0.0, 7.0]] {
            let y = op.apply(&x).unwrap();
            assert!((y[0] - x.iter().sum::<f64>()).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_convention_hand_example() {
        let xi = SignVector::new(vec![1.0, -1.0, 1.0, -1.0]).unwrap();
        let op = partial_circulant(CirculantSpec::new(xi, vec![0, 1]).unwrap()).unwrap();
        let y = op.apply(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let h = (0.5f64).sqrt();
        assert!((y[0] - h).abs() < 1e-15 && (y[1] + h).abs() < 1e-15);
        let a = op.materialize().unwrap();
        assert_eq!(a.column(0), vec![h, -h]);
    }

    #[test]
    fn worked_4x4_layout() {
        let xi = SignVector::new(vec![1.0, -1.0, -1.0, 1.0]).unwrap();
        let op = partial_circulant(CirculantSpec::first_rows(xi.clone(), 4).unwrap()).unwrap();
        let a = op.materialize().unwrap();
        let v = xi.as_slice();
        // Row j is (ξ_j, ξ_{j−1}, ξ_{j−2}, ξ_{j−3}) scaled by 1/2.
        for j in 0..4 {
            for i in 0..4 {
                assert_eq!(a.get(j, i), 0.5 * v[(j + 4 - i) % 4]);
            }
        }
    }

    #[test]
    fn circulant_apply_matches_materialize() {
        for (n, m) in [(64, 16), (48, 10)] {
            let xi = sample_sign_vector(n, RngStream::new(4, 0)).unwrap();
            let spec = CirculantSpec::random_rows(xi, m, RngStream::new(4, 1)).unwrap();
            let op = partial_circulant(spec).unwrap();
            let x = rng_standard_normal(RngStream::new(4, 2), n);
            let fast = op.apply(&x).unwrap();
            let slow = mat_vec(&op.materialize().unwrap(), &x).unwrap();
            assert!(rel_diff(&fast, &slow) <= 1e-10);
        }
    }

    #[test]
    fn all_ones_materialize() {
        let op =
            partial_circulant(CirculantSpec::first_rows(SignVector::ones(4), 4).unwrap()).unwrap();
        assert_eq!(op.materialize().unwrap().data(), &[0.5; 16]);
    }

    #[test]
    fn column_randomized_dense_flip() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let eps = SignVector::new(vec![1.0, -1.0]).unwrap();
        let op = column_randomize(EmbeddingOperator::Dense(a), eps).unwrap();
        assert_eq!(op.materialize().unwrap().data(), &[1.0, -2.0, 3.0, -4.0]);
    }

    #[test]
    fn identity_signs_and_involution() {
        let base = gaussian_operator(5, 9, RngStream::new(2, 0)).unwrap();
        let x = rng_standard_normal(RngStream::new(2, 1), 9);
        let plain = base.apply(&x).unwrap();
        let same = column_randomize(base.clone(), SignVector::ones(9)).unwrap();
        assert_eq!(same.apply(&x).unwrap(), plain);

        let eps = sample_sign_vector(9, RngStream::new(2, 2)).unwrap();
        let once = column_randomize(base.clone(), eps.clone()).unwrap();
        assert!(matches!(once, EmbeddingOperator::ColumnRandomized { .. }));
        let twice = column_randomize(once.clone(), eps).unwrap();
        assert!(matches!(twice, EmbeddingOperator::Dense(_)));
        assert_eq!(twice.apply(&x).unwrap(), plain);

        let ca = once.materialize().unwrap().column_norms_squared();
        let cb = base.materialize().unwrap().column_norms_squared();
        assert_eq!(ca, cb);
    }

    #[test]
    fn wrappers_never_nest() {
        let base = EmbeddingOperator::identity(3);
        let e1 = SignVector::new(vec![1.0, -1.0, 1.0]).unwrap();
        let e2 = SignVector::new(vec![-1.0, -1.0, 1.0]).unwrap();
        let op = column_randomize(column_randomize(base, e1).unwrap(), e2).unwrap();
        match op {
            EmbeddingOperator::ColumnRandomized { base, signs } => {
                assert!(matches!(*base, EmbeddingOperator::Dense(_)));
                assert_eq!(signs.as_slice(), &[-1.0, 1.0, 1.0]);
            }
            _ => panic!("expected a wrapper"),
        }
        assert!(column_randomize(EmbeddingOperator::identity(3), SignVector::ones(4)).is_err());
    }

    #[test]
    fn apply_columns_agrees_per_kind() {
        let n = 32;
        let xi = sample_sign_vector(n, RngStream::new(6, 0)).unwrap();
        let eps = sample_sign_vector(n, RngStream::new(6, 1)).unwrap();
        let circ = partial_circulant(CirculantSpec::first_rows(xi, 8).unwrap()).unwrap();
        let ops = [
            gaussian_operator(8, n, RngStream::new(6, 2)).unwrap(),
            circ.clone(),
            column_randomize(circ, eps).unwrap(),
        ];
        let x = DenseMatrix::new(
            n,
            5,
            rng_standard_normal(RngStream::new(6, 3), n * 5).into_inner(),
        )
        .unwrap();
        for op in &ops {
            let batch = op.apply_columns(&x).unwrap();
            for c in 0..5 {
                let y = op.apply(&x.column(c)).unwrap();
                assert!(rel_diff(&batch.column(c), &y) <= 1e-12);
            }
        }
    }

    #[test]
    fn invalid_circulant_specs() {
        let g = SignVector::ones(4);
        assert!(CirculantSpec::new(g.clone(), vec![]).is_err());
        assert!(CirculantSpec::new(g.clone(), vec![1, 1]).is_err());
        assert!(CirculantSpec::new(g.clone(), vec![2, 1]).is_err());
        assert!(CirculantSpec::new(g.clone(), vec![4]).is_err());
        assert!(CirculantSpec::random_rows(g, 5, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn header_round_trip() {
        let xi = sample_sign_vector(8, RngStream::new(1, 0)).unwrap();
        let op = partial_circulant(CirculantSpec::new(xi, vec![1, 3, 6]).unwrap()).unwrap();
        let h = OperatorHeader::for_operator(&op, Some(RngStream::new(1, 0)));
        let text = h.to_text();
        assert!(text.starts_with("kind: circulant\nrows: 3\ncols: 8\nseed: 1\nstream: 0\n"));
        assert_eq!(OperatorHeader::from_text(&text).unwrap(), h);
        assert!(OperatorHeader::from_text("kind: dense\nrows: 2\n").is_err());
        assert!(OperatorHeader::from_text("kind dense").is_err());
    }

    #[test]
    fn export_import() {
        let dir = tempfile::tempdir().unwrap();
        let op = gaussian_operator(3, 6, RngStream::new(9, 9)).unwrap();
        export_operator(&op, Some(RngStream::new(9, 9)), dir.path(), "op").unwrap();
        let (back, header) = import_operator(dir.path(), "op").unwrap();
        assert_eq!(back.materialize().unwrap(), op.materialize().unwrap());
        assert_eq!(header.seed, Some(9));
    }
}
