//! Test sets `T ⊂ Rⁿ`, Gaussian mean-width estimation and uniform distortion.
//!
//! Every set variant has a closed-form support function
//! `h_T(g) = sup_{t ∈ T} |⟨g, t⟩|`, so the mean width
//! `ℓ_*(T) = E h_T(g)` is a plain Monte-Carlo average over Gaussian `g`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{parse_key_values, EmbeddingOperator};
use crate::error::{usage, Error, Result};
use crate::numerics::matrix::{dot, norm_squared};
use crate::numerics::{sym_eig, DenseMatrix, RngStream};
use crate::regularity::{
    binomial, sparse_distortion_exact, sparse_distortion_sampled, ENUMERATION_LIMIT,
};

/// Default Monte-Carlo sample count for width estimates.
pub const DEFAULT_WIDTH_SAMPLES: usize = 20_000;
/// Probes used when the sparse sphere is too large to enumerate.
pub const SPARSE_SAMPLED_TRIALS: usize = 4096;
/// Random boundary points probed for the ℓ₁ ball.
pub const L1_RANDOM_SAMPLES: usize = 10_000;
/// Conditional-gradient steps used to refine the ℓ₁ ball lower bound.
pub const L1_REFINE_STEPS: usize = 50;
const WIDTH_CHUNK: usize = 1024;

#[derive(Clone, Debug, PartialEq)]
pub enum TestSetKind {
    /// Points stored as the columns of an `n × p` matrix.
    FinitePoints(DenseMatrix),
    /// `{B y : ‖y‖₂ ≤ radius}` for an orthonormal `n × d` basis `B`.
    SubspaceBall {
        basis: DenseMatrix,
        radius: f64,
    },
    /// Unit vectors with at most `k` nonzero coordinates.
    SparseSphere {
        k: usize,
    },
    L1Ball {
        radius: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestSet {
    n: usize,
    kind: TestSetKind,
}

impl TestSet {
    pub fn finite_points(points: &[Vec<f64>]) -> Result<Self> {
        let n = match points.first() {
            Some(p) => p.len(),
            None => return usage("finite point set must be nonempty"),
        };
        if points.iter().any(|p| p.len() != n) {
            return usage("all points must have the same dimension");
        }
        let mut m = DenseMatrix::zeros(n, points.len());
        for (j, p) in points.iter().enumerate() {
            for (i, v) in p.iter().enumerate() {
                m.set(i, j, *v);
            }
        }
        Self::finite_points_matrix(DenseMatrix::new(n, points.len(), m.into_data())?)
    }

    /// Points given as the columns of `points`.
    pub fn finite_points_matrix(points: DenseMatrix) -> Result<Self> {
        Ok(Self {
            n: points.rows(),
            kind: TestSetKind::FinitePoints(points),
        })
    }

    /// `count` independent uniform points on the unit sphere.
    pub fn random_unit_points(n: usize, count: usize, r: RngStream) -> Result<Self> {
        if n == 0 || count == 0 {
            return usage("random point sets need n ≥ 1 and count ≥ 1");
        }
        let mut cursor = r.cursor();
        let mut pts = DenseMatrix::zeros(n, count);
        let mut g = vec![0.0; n];
        for j in 0..count {
            cursor.fill_normal(&mut g);
            let norm = norm_squared(&g).sqrt();
            for (i, v) in g.iter().enumerate() {
                pts.set(i, j, v / norm);
            }
        }
        Self::finite_points_matrix(pts)
    }

    pub fn subspace_ball(basis: DenseMatrix, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return usage("subspace ball radius must be positive");
        }
        let (n, d) = (basis.rows(), basis.cols());
        if d > n {
            return usage(format!(
                "subspace dimension {d} exceeds ambient dimension {n}"
            ));
        }
        let g = basis.gram();
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                if (g.get(i, j) - target).abs() > 1e-10 {
                    return usage("subspace basis columns are not orthonormal");
                }
            }
        }
        Ok(Self {
            n,
            kind: TestSetKind::SubspaceBall { basis, radius },
        })
    }

    /// Ball of a uniformly random `d`-dimensional subspace (Gram–Schmidt on
    /// Gaussian columns, re-orthogonalized once).
    pub fn random_subspace_ball(n: usize, d: usize, radius: f64, r: RngStream) -> Result<Self> {
        if d == 0 || d > n {
            return usage(format!("subspace dimension {d} must lie in 1..={n}"));
        }
        let mut cursor = r.cursor();
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
        while cols.len() < d {
            let mut v = vec![0.0; n];
            cursor.fill_normal(&mut v);
            for _ in 0..2 {
                for q in &cols {
                    let c = dot(q, &v);
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= c * qi;
                    }
                }
            }
            let norm = norm_squared(&v).sqrt();
            if norm > 1e-8 {
                v.iter_mut().for_each(|x| *x /= norm);
                cols.push(v);
            }
        }
        let mut basis = DenseMatrix::zeros(n, d);
        for (j, c) in cols.iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                basis.set(i, j, *v);
            }
        }
        Self::subspace_ball(basis, radius)
    }

    pub fn sparse_sphere(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return usage(format!(
                "sparse sphere needs 1 ≤ k ≤ n, got k = {k}, n = {n}"
            ));
        }
        Ok(Self {
            n,
            kind: TestSetKind::SparseSphere { k },
        })
    }

    pub fn l1_ball(n: usize, radius: f64) -> Result<Self> {
        if n == 0 {
            return usage("dimension must be positive");
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return usage("l1 ball radius must be positive");
        }
        Ok(Self {
            n,
            kind: TestSetKind::L1Ball { radius },
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &TestSetKind {
        &self.kind
    }

    pub fn variant_name(&self) -> &'static str {
        match self.kind {
            TestSetKind::FinitePoints(_) => "finite_points",
            TestSetKind::SubspaceBall { .. } => "subspace_ball",
            TestSetKind::SparseSphere { .. } => "sparse_sphere",
            TestSetKind::L1Ball { .. } => "l1_ball",
        }
    }

    /// Same set scaled by `alpha`. Only defined for point sets.
    pub fn scaled_points(&self, alpha: f64) -> Result<Self> {
        match &self.kind {
            TestSetKind::FinitePoints(p) => {
                let data = p.data().iter().map(|v| alpha * v).collect();
                Self::finite_points_matrix(DenseMatrix::new(p.rows(), p.cols(), data)?)
            }
            _ => usage("only finite point sets can be rescaled"),
        }
    }
}

/// `sup_{t ∈ T} |⟨g, t⟩|`.
pub fn support_value(t: &TestSet, g: &[f64]) -> Result<f64> {
    if g.len() != t.n {
        return usage(format!(
            "direction has length {} but the set lives in dimension {}",
            g.len(),
            t.n
        ));
    }
    Ok(match &t.kind {
        TestSetKind::FinitePoints(p) => transpose_times(p, g)
            .into_iter()
            .fold(0.0, |acc, v| acc.max(v.abs())),
        TestSetKind::SubspaceBall { basis, radius } => {
            radius * norm_squared(&transpose_times(basis, g)).sqrt()
        }
        TestSetKind::SparseSphere { k } => {
            let mut sq: Vec<f64> = g.iter().map(|v| v * v).collect();
            sq.sort_unstable_by(|a, b| b.total_cmp(a));
            sq[..*k].iter().fold(0.0, |acc, v| acc + v).sqrt()
        }
        TestSetKind::L1Ball { radius } => radius * g.iter().fold(0.0f64, |acc, v| acc.max(v.abs())),
    })
}

/// `Mᵀ g` with each output summed over rows in order.
fn transpose_times(m: &DenseMatrix, g: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for (i, gi) in g.iter().enumerate() {
        for (o, v) in out.iter_mut().zip(m.row(i)) {
            *o += v * gi;
        }
    }
    out
}

/// `d_T = sup_{t ∈ T} ‖t‖₂`.
pub fn radius(t: &TestSet) -> f64 {
    match &t.kind {
        TestSetKind::FinitePoints(p) => p
            .column_norms_squared()
            .into_iter()
            .fold(0.0, f64::max)
            .sqrt(),
        TestSetKind::SubspaceBall { radius, .. } | TestSetKind::L1Ball { radius } => *radius,
        TestSetKind::SparseSphere { .. } => 1.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub radius: f64,
    /// `(mean / radius)²`, zero for a degenerate set.
    pub critical_dimension: f64,
}

/// Support values for `samples` Gaussian directions. Chunk `c` of 1024
/// directions draws from `r.child(c)`, so the output does not depend on the
/// worker count.
pub fn support_samples(t: &TestSet, samples: usize, r: RngStream) -> Result<Vec<f64>> {
    let chunks = samples.div_ceil(WIDTH_CHUNK);
    let parts: Vec<Result<Vec<f64>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = WIDTH_CHUNK.min(samples - c * WIDTH_CHUNK);
            let mut cursor = r.child(c as u64).cursor();
            let mut g = vec![0.0; t.n];
            (0..count)
                .map(|_| {
                    cursor.fill_normal(&mut g);
                    support_value(t, &g)
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(samples);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Monte-Carlo estimate of `ℓ_*(T) = E sup_{t ∈ T} |⟨g, t⟩|`.
pub fn mean_width(t: &TestSet, samples: usize, r: RngStream) -> Result<WidthEstimate> {
    if samples < 100 {
        return usage("width estimation needs at least 100 samples");
    }
    let values = support_samples(t, samples, r)?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let d = radius(t);
    Ok(WidthEstimate {
        mean,
        std_error: var.sqrt() / n.sqrt(),
        samples,
        radius: d,
        critical_dimension: if d > 0.0 { (mean / d).powi(2) } else { 0.0 },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exactness {
    Exact,
    LowerBound,
}

impl Exactness {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::LowerBound => "lower-bound",
        }
    }
}

/// `sup_{t ∈ T} |‖Mt‖² − ‖t‖²|`, exactly where the set's structure allows and
/// as a lower bound otherwise. Randomness from `r` is only used by the
/// lower-bound strategies.
pub fn sup_distortion(
    op: &EmbeddingOperator,
    t: &TestSet,
    r: RngStream,
) -> Result<(f64, Exactness)> {
    if op.cols() != t.n {
        return usage(format!(
            "operator has {} columns but the set lives in dimension {}",
            op.cols(),
            t.n
        ));
    }
    match &t.kind {
        TestSetKind::FinitePoints(p) => {
            let images = op.apply_columns(p)?.column_norms_squared();
            let norms = p.column_norms_squared();
            let v = images
                .iter()
                .zip(&norms)
                .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            Ok((v, Exactness::Exact))
        }
        TestSetKind::SubspaceBall { basis, radius } => {
            let mut g = op.apply_columns(basis)?.gram();
            for i in 0..g.rows() {
                let v = g.get(i, i) - 1.0;
                g.set(i, i, v);
            }
            Ok((
                radius * radius * sym_eig(&g)?.spectral_radius(),
                Exactness::Exact,
            ))
        }
        TestSetKind::SparseSphere { k } => {
            let a = op.materialize()?;
            if binomial(t.n, *k) <= ENUMERATION_LIMIT {
                Ok((sparse_distortion_exact(&a, *k)?, Exactness::Exact))
            } else {
                Ok((
                    sparse_distortion_sampled(&a, *k, SPARSE_SAMPLED_TRIALS, r)?,
                    Exactness::LowerBound,
                ))
            }
        }
        TestSetKind::L1Ball { radius } => Ok((
            l1_lower_bound(&op.materialize()?, *radius, r)?,
            Exactness::LowerBound,
        )),
    }
}

/// `f(x) = ‖Ax‖² − ‖x‖²`.
fn quad(a: &DenseMatrix, x: &[f64]) -> Result<f64> {
    Ok(crate::numerics::mat_vec(a, x)?.norm_squared() - norm_squared(x))
}

/// Lower bound on `max_{‖x‖₁ ≤ ρ} |‖Ax‖² − ‖x‖²|`: all signed vertices,
/// random boundary points, then conditional-gradient ascent from the best
/// points found for `f` and for `−f`. Every candidate stays inside the ball.
fn l1_lower_bound(a: &DenseMatrix, rho: f64, r: RngStream) -> Result<f64> {
    let n = a.cols();
    let mut best_hi = (f64::NEG_INFINITY, vec![0.0; n]);
    let mut best_lo = (f64::INFINITY, vec![0.0; n]);
    let mut consider = |val: f64, x: &Vec<f64>| {
        if val > best_hi.0 {
            best_hi = (val, x.clone());
        }
        if val < best_lo.0 {
            best_lo = (val, x.clone());
        }
    };

    // ±ρe_i give the same value; one sign per vertex pair suffices.
    for (i, c) in a.column_norms_squared().into_iter().enumerate() {
        let mut x = vec![0.0; n];
        x[i] = rho;
        consider(rho * rho * (c - 1.0), &x);
    }

    let mut cursor = r.cursor();
    for _ in 0..L1_RANDOM_SAMPLES {
        let mut x: Vec<f64> = (0..n).map(|_| -libm::log(cursor.next_open01())).collect();
        let total: f64 = x.iter().sum();
        for v in &mut x {
            *v *= cursor.next_sign() * rho / total;
        }
        consider(quad(a, &x)?, &x);
    }

    let at = a.transpose();
    let mut best = best_hi.0.abs().max(best_lo.0.abs());
    for (sign, start) in [(1.0, best_hi.1), (-1.0, best_lo.1)] {
        let mut x = start;
        let mut fx = quad(a, &x)?;
        for _ in 0..L1_REFINE_STEPS {
            let y = crate::numerics::mat_vec(a, &x)?;
            let aty = crate::numerics::mat_vec(&at, &y)?;
            let grad: Vec<f64> = aty.iter().zip(&x).map(|(u, v)| 2.0 * (u - v)).collect();
            let (j, gj) = grad.iter().enumerate().fold((0, 0.0f64), |acc, (i, &g)| {
                if g.abs() > acc.1.abs() {
                    (i, g)
                } else {
                    acc
                }
            });
            let mut v = vec![0.0; n];
            v[j] = rho * (sign * gj).signum();
            let d: Vec<f64> = v.iter().zip(&x).map(|(vi, xi)| vi - xi).collect();
            let slope = sign * dot(&grad, &d);
            let curvature = sign * quad(a, &d)?;
            let mut theta = if slope + curvature > 0.0 { 1.0 } else { 0.0 };
            if curvature < 0.0 {
                let stationary = -slope / (2.0 * curvature);
                if stationary > 0.0 && stationary < 1.0 {
                    theta = stationary;
                }
            }
            if theta == 0.0 {
                break;
            }
            let candidate: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + theta * di).collect();
            let fc = quad(a, &candidate)?;
            if sign * fc <= sign * fx {
                break;
            }
            x = candidate;
            fx = fc;
        }
        best = best.max(fx.abs());
    }
    Ok(best)
}

/// Portable description of a test set.
///
/// As a standalone file it is `key: value` text with these keys:
///
/// * `variant`: `finite_points`, `subspace_ball`, `sparse_sphere` or `l1_ball`
/// * `n`: ambient dimension
/// * `k`: sparsity (`sparse_sphere`)
/// * `d`: subspace dimension (`subspace_ball`, random basis)
/// * `radius`: radius (`subspace_ball`, `l1_ball`; default 1)
/// * `points`: number of random unit points (`finite_points`)
/// * `points_file`: CSV with one point per line (`finite_points`)
/// * `seed`, `stream`: randomness for random constructions
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSetSpec {
    pub variant: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<u64>,
}

impl TestSetSpec {
    pub fn from_key_values(text: &str) -> Result<Self> {
        let map = parse_key_values(text)?;
        let mut spec = TestSetSpec::default();
        fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            v.parse()
                .map_err(|e| Error::Parse(format!("test set field {k}: {e}")))
        }
        let mut have_n = false;
        for (k, v) in &map {
            match k.as_str() {
                "variant" => spec.variant = v.clone(),
                "n" => {
                    spec.n = num(k, v)?;
                    have_n = true;
                }
                "k" => spec.k = Some(num(k, v)?),
                "d" => spec.d = Some(num(k, v)?),
                "radius" => spec.radius = Some(num(k, v)?),
                "points" => spec.points = Some(num(k, v)?),
                "points_file" => spec.points_file = Some(PathBuf::from(v)),
                "seed" => spec.seed = Some(num(k, v)?),
                "stream" => spec.stream = Some(num(k, v)?),
                other => return Err(Error::Parse(format!("unknown test set field {other:?}"))),
            }
        }
        if spec.variant.is_empty() || !have_n {
            return Err(Error::Parse("test set needs `variant` and `n`".into()));
        }
        Ok(spec)
    }

    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "variant: {}", self.variant);
        let _ = writeln!(s, "n: {}", self.n);
        let opt = |s: &mut String, k: &str, v: Option<String>| {
            if let Some(v) = v {
                let _ = writeln!(s, "{k}: {v}");
            }
        };
        opt(&mut s, "k", self.k.map(|v| v.to_string()));
        opt(&mut s, "d", self.d.map(|v| v.to_string()));
        opt(&mut s, "radius", self.radius.map(|v| v.to_string()));
        opt(&mut s, "points", self.points.map(|v| v.to_string()));
        opt(
            &mut s,
            "points_file",
            self.points_file.as_ref().map(|p| p.display().to_string()),
        );
        opt(&mut s, "seed", self.seed.map(|v| v.to_string()));
        opt(&mut s, "stream", self.stream.map(|v| v.to_string()));
        s
    }

    /// Builds the set. Relative `points_file` paths resolve against
    /// `base_dir`; random constructions use `(seed, stream)` when given and
    /// `fallback` otherwise.
    pub fn build(&self, base_dir: &Path, fallback: RngStream) -> Result<TestSet> {
        let r = match self.seed {
            Some(seed) => RngStream::new(seed, self.stream.unwrap_or(0)),
            None => fallback,
        };
        let radius = self.radius.unwrap_or(1.0);
        let need = |v: Option<usize>, name: &str| {
            v.ok_or_else(|| {
                Error::Usage(format!("test_set.{name} is required for {}", self.variant))
            })
        };
        match self.variant.as_str() {
            "finite_points" => match (&self.points_file, self.points) {
                (Some(path), None) => {
                    let path = base_dir.join(path);
                    let text = std::fs::read_to_string(&path).map_err(|e| {
                        Error::Usage(format!(
                            "test_set.points_file: cannot read {}: {e}",
                            path.display()
                        ))
                    })?;
                    let pts = parse_points_csv(&text)?;
                    let set = TestSet::finite_points(&pts)?;
                    if set.n != self.n {
                        return usage(format!(
                            "test_set.points_file has dimension {} but n = {}",
                            set.n, self.n
                        ));
                    }
                    Ok(set)
                }
                (None, Some(count)) => TestSet::random_unit_points(self.n, count, r),
                _ => usage(
                    "finite_points needs exactly one of test_set.points or test_set.points_file",
                ),
            },
            "subspace_ball" => TestSet::random_subspace_ball(self.n, need(self.d, "d")?, radius, r),
            "sparse_sphere" => TestSet::sparse_sphere(self.n, need(self.k, "k")?),
            "l1_ball" => TestSet::l1_ball(self.n, radius),
            other => usage(format!("unknown test set variant {other:?}")),
        }
    }
}

fn parse_points_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("points line {}: {e}", i + 1)))
                })
                .collect()
        })
        .collect()
}
