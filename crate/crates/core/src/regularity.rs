//! Sparse distortion profiles and the regularity threshold `k*`.
//!
//! For a matrix `A` with `n` columns, `raw[k] = sup_{x ∈ Σ_k} |‖Ax‖² − 1|`
//! where `Σ_k` is the set of unit vectors supported on at most `k`
//! coordinates. `A` is `(δ, k)`-regular when `raw[k] ≤ δ√k`, and `k*(δ)` is
//! the largest `k` such that this holds for every `j ≤ k`.
//!
//! On a fixed support `J` the supremum is the largest absolute eigenvalue of
//! `A_Jᵀ A_J − I`, so exact profiles enumerate supports and solve small
//! eigenproblems. Sampled profiles give certified lower bounds when
//! enumeration is out of reach.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::numerics::matrix::dot;
use crate::numerics::{sym_eig, DenseMatrix, RngStream};

/// Largest number of supports an exact evaluation will enumerate.
pub const ENUMERATION_LIMIT: u64 = 2_000_000;
/// Number of best supports re-evaluated exactly in sampled mode.
pub const REFINED_SUPPORTS: usize = 5;
const SAMPLE_CHUNK: usize = 256;

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileMode {
    Exact,
    SampledLowerBound,
}

impl ProfileMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::SampledLowerBound => "sampled-lower-bound",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub k: usize,
    pub raw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityProfile {
    pub m: usize,
    pub n: usize,
    pub mode: ProfileMode,
    /// Probes per sparsity level; zero in exact mode.
    pub trials: usize,
    /// Ascending in `k`, `raw` nondecreasing.
    pub entries: Vec<ProfileEntry>,
}

impl RegularityProfile {
    pub fn raw(&self, k: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.k == k).map(|e| e.raw)
    }

    /// True when the profile covers every `k` in `1..=K`.
    pub fn is_contiguous(&self) -> bool {
        self.entries.iter().enumerate().all(|(i, e)| e.k == i + 1)
    }

    pub fn max_k(&self) -> usize {
        self.entries.last().map_or(0, |e| e.k)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,raw,mode,trials\n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                e.k,
                e.raw,
                self.mode.as_str(),
                self.trials
            );
        }
        s
    }
}

fn spectral_radius_of_shifted(g: &DenseMatrix) -> Result<f64> {
    let mut m = g.clone();
    let k = m.rows();
    for i in 0..k {
        let v = m.get(i, i) - 1.0;
        m.set(i, i, v);
    }
    Ok(sym_eig(&m)?.spectral_radius())
}

/// Advances `idx` to the next `k`-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn enumeration_guard(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return usage(format!("sparsity k = {k} must lie in 1..={n}"));
    }
    let count = binomial(n, k);
    if count > ENUMERATION_LIMIT {
        return Err(Error::Resource(format!(
            "C({n}, {k}) = {count} supports exceeds the enumeration limit {ENUMERATION_LIMIT}; \
             use the sampled estimate instead"
        )));
    }
    Ok(())
}

/// Exact value over all supports of size `k`, from a precomputed Gram matrix.
fn exact_from_gram(gram: &DenseMatrix, k: usize) -> Result<f64> {
    let n = gram.rows();
    enumeration_guard(n, k)?;
    let per_first: Vec<Result<f64>> = (0..=n - k)
        .into_par_iter()
        .map(|first| {
            let mut best = 0.0f64;
            let mut idx: Vec<usize> = (first..first + k).collect();
            loop {
                best = best.max(spectral_radius_of_shifted(&gram.principal_submatrix(&idx))?);
                if !next_combination(&mut idx[1..], n) || k == 1 {
                    break;
                }
            }
            Ok(best)
        })
        .collect();
    per_first
        .into_iter()
        .try_fold(0.0f64, |acc, r| r.map(|v| acc.max(v)))
}

/// `sup_{x ∈ Σ_k} |‖Ax‖² − 1|` by enumerating every support of size `k`.
pub fn sparse_distortion_exact(a: &DenseMatrix, k: usize) -> Result<f64> {
    enumeration_guard(a.cols(), k)?;
    exact_from_gram(&a.gram(), k)
}

/// Exact profile for `k = 1..=max_k`.
pub fn exact_profile(a: &DenseMatrix, max_k: usize) -> Result<RegularityProfile> {
    let n = a.cols();
    if max_k == 0 || max_k > n {
        return usage(format!("profile range 1..={max_k} must lie within 1..={n}"));
    }
    for k in 1..=max_k {
        enumeration_guard(n, k)?;
    }
    let gram = a.gram();
    let mut entries = Vec::with_capacity(max_k);
    let mut running = 0.0f64;
    for k in 1..=max_k {
        running = running.max(exact_from_gram(&gram, k)?);
        entries.push(ProfileEntry { k, raw: running });
    }
    Ok(RegularityProfile {
        m: a.rows(),
        n,
        mode: ProfileMode::Exact,
        trials: 0,
        entries,
    })
}

/// Gram matrix of the columns `support`, summed in the same order as
/// [`DenseMatrix::gram`].
fn support_gram(columns: &DenseMatrix, support: &[usize]) -> DenseMatrix {
    let k = support.len();
    let mut g = DenseMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let v = dot(columns.row(support[a]), columns.row(support[b]));
            g.set(a, b, v);
            g.set(b, a, v);
        }
    }
    g
}

fn sample_chunk(columns: &DenseMatrix, k: usize, count: usize, r: RngStream) -> Result<f64> {
    let n = columns.rows();
    let m = columns.cols();
    let mut cursor = r.cursor();
    let mut best = 0.0f64;
    let mut top: Vec<(f64, Vec<usize>)> = Vec::with_capacity(REFINED_SUPPORTS + 1);
    let mut coeffs = vec![0.0; k];
    let mut y = vec![0.0; m];
    for _ in 0..count {
        let support = cursor.subset(n, k);
        cursor.fill_normal(&mut coeffs);
        let norm = dot(&coeffs, &coeffs).sqrt();
        if norm == 0.0 {
            continue;
        }
        y.iter_mut().for_each(|v| *v = 0.0);
        for (c, &j) in coeffs.iter().zip(&support) {
            let w = c / norm;
            for (yv, a) in y.iter_mut().zip(columns.row(j)) {
                *yv += w * a;
            }
        }
        let value = (dot(&y, &y) - 1.0).abs();
        best = best.max(value);

        if top.iter().any(|(_, s)| *s == support) {
            continue;
        }
        let admits = top.len() < REFINED_SUPPORTS || value > top[top.len() - 1].0;
        if admits {
            let refined = spectral_radius_of_shifted(&support_gram(columns, &support))?;
            best = best.max(refined);
            let pos = top.partition_point(|(v, _)| *v >= value);
            top.insert(pos, (value, support));
            top.truncate(REFINED_SUPPORTS);
        }
    }
    Ok(best)
}

fn sampled_with_columns(
    columns: &DenseMatrix,
    k: usize,
    trials: usize,
    r: RngStream,
) -> Result<f64> {
    let n = columns.rows();
    if k == 0 || k > n {
        return usage(format!("sparsity k = {k} must lie in 1..={n}"));
    }
    if trials == 0 {
        return usage("trials must be ≥ 1");
    }
    let chunks = trials.div_ceil(SAMPLE_CHUNK);
    let outcomes: Vec<Result<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = SAMPLE_CHUNK.min(trials - c * SAMPLE_CHUNK);
            sample_chunk(columns, k, count, r.child(c as u64))
        })
        .collect();
    outcomes
        .into_iter()
        .try_fold(0.0f64, |acc, o| o.map(|v| acc.max(v)))
}

/// Certified lower bound on `sup_{x ∈ Σ_k} |‖Ax‖² − 1|`.
///
/// Probes random unit vectors on random `k`-supports. Every support that
/// enters the running top five is also solved exactly, so the result is the
/// largest value actually attained by some sparse unit vector. Trials are
/// processed in fixed chunks of 256 with chunk `c` drawing from `r.child(c)`,
/// making the value independent of the worker count and nondecreasing in
/// `trials`.
pub fn sparse_distortion_sampled(
    a: &DenseMatrix,
    k: usize,
    trials: usize,
    r: RngStream,
) -> Result<f64> {
    sampled_with_columns(&a.transpose(), k, trials, r)
}

/// Sampled profile over the given sparsity levels (sparsity `k` uses
/// `r.child(k)`). Values are made nondecreasing by a running maximum, which
/// keeps them valid lower bounds since `Σ_j ⊆ Σ_k` for `j ≤ k`.
pub fn sampled_profile(
    a: &DenseMatrix,
    ks: &[usize],
    trials: usize,
    r: RngStream,
) -> Result<RegularityProfile> {
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return usage("at least one sparsity level is required");
    }
    let columns = a.transpose();
    let mut running = 0.0f64;
    let mut entries = Vec::with_capacity(ks.len());
    for &k in &ks {
        running = running.max(sampled_with_columns(
            &columns,
            k,
            trials,
            r.child(k as u64),
        )?);
        entries.push(ProfileEntry { k, raw: running });
    }
    Ok(RegularityProfile {
        m: a.rows(),
        n: a.cols(),
        mode: ProfileMode::SampledLowerBound,
        trials,
        entries,
    })
}

/// Largest `k ≤ K` with `raw[j] ≤ δ√j` for every `j ≤ k`; zero if `k = 1` fails.
pub fn k_star(profile: &RegularityProfile, delta: f64) -> Result<usize> {
    if delta.is_nan() || delta <= 0.0 {
        return usage("delta must be positive");
    }
    if profile.entries.is_empty() || !profile.is_contiguous() {
        return usage("k* needs a profile covering every k in 1..=K");
    }
    Ok(profile
        .entries
        .iter()
        .take_while(|e| e.raw <= delta * (e.k as f64).sqrt())
        .count())
}

/// 256 log-spaced values from `10⁻³` to `2`, ascending.
pub fn delta_grid() -> Vec<f64> {
    let (lo, hi) = (1e-3f64, 2.0f64);
    let ratio = (hi / lo).ln();
    (0..256)
        .map(|i| lo * (ratio * i as f64 / 255.0).exp())
        .collect()
}

/// Smallest grid value `δ` with `k*(δ) ≥ ⌈1/δ²⌉`, or `None` if no grid point
/// qualifies within the range the profile covers.
pub fn select_delta(profile: &RegularityProfile) -> Result<Option<f64>> {
    for delta in delta_grid() {
        if k_star(profile, delta)? as f64 >= (1.0 / (delta * delta)).ceil() {
            return Ok(Some(delta));
        }
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

/// Outcome of checking `raw[s] ≤ 4·max(δ√s, δ²s)` for every `s ≤ n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowToHighReport {
    pub status: CheckStatus,
    pub delta: f64,
    pub k_star: usize,
    /// `raw[s] / bound(s)` for `s = 1..=n`; empty when not applicable.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub violations: usize,
}

pub fn low_to_high_bound(delta: f64, s: usize) -> f64 {
    let s = s as f64;
    4.0 * (delta * s.sqrt()).max(delta * delta * s)
}

/// Checks the low-to-high sparsity bound against a full exact profile.
pub fn check_low_to_high_profile(
    profile: &RegularityProfile,
    delta: f64,
) -> Result<LowToHighReport> {
    if profile.mode != ProfileMode::Exact
        || profile.max_k() != profile.n
        || !profile.is_contiguous()
    {
        return usage("the low-to-high check needs an exact profile covering k = 1..=n");
    }
    let ks = k_star(profile, delta)?;
    if (ks as f64) < 1.0 / (delta * delta) {
        return Ok(LowToHighReport {
            status: CheckStatus::NotApplicable,
            delta,
            k_star: ks,
            ratios: Vec::new(),
            max_ratio: 0.0,
            violations: 0,
        });
    }
    let ratios: Vec<f64> = profile
        .entries
        .iter()
        .map(|e| e.raw / low_to_high_bound(delta, e.k))
        .collect();
    let violations = ratios.iter().filter(|&&r| r > 1.0).count();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(LowToHighReport {
        status: if violations == 0 {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        delta,
        k_star: ks,
        ratios,
        max_ratio,
        violations,
    })
}

pub fn check_low_to_high(a: &DenseMatrix, delta: f64) -> Result<LowToHighReport> {
    check_low_to_high_profile(&exact_profile(a, a.cols())?, delta)
}

/// Reference envelope `√(k·ln(e·n/k)/m)` for normalized Gaussian matrices.
pub fn gaussian_regularity_expectation(m: usize, n: usize, k: usize) -> f64 {
    let (m, n, k) = (m as f64, n as f64, k as f64);
    (k * (1.0 + (n / k).ln()) / m).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{
        column_randomize, gaussian_operator, sample_sign_vector, EmbeddingOperator,
    };

    fn gaussian(m: usize, n: usize, seed: u64) -> DenseMatrix {
        gaussian_operator(m, n, RngStream::new(seed, 0))
            .unwrap()
            .materialize()
            .unwrap()
    }

    #[test]
    fn identity_has_zero_distortion() {
        let id = DenseMatrix::identity(6);
        for k in 1..=6 {
            assert_eq!(sparse_distortion_exact(&id, k).unwrap(), 0.0);
            assert!(sparse_distortion_sampled(&id, k, 50, RngStream::new(0, 0)).unwrap() <= 1e-14);
        }
        let p = exact_profile(&id, 6).unwrap();
        assert_eq!(k_star(&p, 0.1).unwrap(), 6);
    }

    #[test]
    fn scaled_first_coordinate() {
        let mut d = vec![1.0; 5];
        d[0] = 2f64.sqrt();
        let a = DenseMatrix::diagonal(&d).unwrap();
        for k in 1..=5 {
            let v = sparse_distortion_exact(&a, k).unwrap();
            assert!((v - 1.0).abs() < 1e-14, "k={k}: {v}");
        }
    }

    #[test]
    fn rank_one_two_by_two() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(sparse_distortion_exact(&a, 1).unwrap(), 0.0);
        assert!((sparse_distortion_exact(&a, 2).unwrap() - 1.0).abs() < 1e-14);
        let p = exact_profile(&a, 2).unwrap();
        assert_eq!(k_star(&p, 0.5).unwrap(), 1);
    }

    #[test]
    fn k_star_immediate_failure() {
        let p = RegularityProfile {
            m: 1,
            n: 3,
            mode: ProfileMode::Exact,
            trials: 0,
            entries: vec![
                ProfileEntry { k: 1, raw: 0.3 },
                ProfileEntry { k: 2, raw: 0.3 },
            ],
        };
        assert_eq!(k_star(&p, 0.2).unwrap(), 0);
        assert!(k_star(&p, 0.0).is_err());
        let gappy = RegularityProfile {
            entries: vec![ProfileEntry { k: 2, raw: 0.1 }],
            ..p
        };
        assert!(k_star(&gappy, 1.0).is_err());
    }

    #[test]
    fn guard_is_resource_error() {
        let a = DenseMatrix::identity(40);
        assert!(matches!(
            sparse_distortion_exact(&a, 20),
            Err(Error::Resource(_))
        ));
        assert!(matches!(
            sparse_distortion_exact(&a, 0),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn combinations_enumerate_all() {
        let mut count = 0;
        let mut idx = vec![0, 1, 2];
        loop {
            count += 1;
            if !next_combination(&mut idx, 7) {
                break;
            }
        }
        assert_eq!(count, binomial(7, 3));
        assert_eq!(binomial(12, 6), 924);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(1000, 500), u64::MAX);
    }

    #[test]
    fn sampled_is_dominated_and_monotone() {
        for seed in 0..5 {
            let a = gaussian(5, 9, seed);
            for k in [1, 2, 4, 9] {
                let exact = sparse_distortion_exact(&a, k).unwrap();
                let mut prev = 0.0;
                for trials in [1, 10, 100, 300, 600] {
                    let s =
                        sparse_distortion_sampled(&a, k, trials, RngStream::new(seed, 7)).unwrap();
                    assert!(s <= exact + 1e-12, "sampled {s} above exact {exact}");
                    assert!(s >= prev);
                    prev = s;
                }
            }
        }
    }

    #[test]
    fn profile_is_nondecreasing() {
        let a = gaussian(6, 10, 3);
        let p = exact_profile(&a, 10).unwrap();
        assert!(p.entries.windows(2).all(|w| w[0].raw <= w[1].raw));
        let s = sampled_profile(&a, &[8, 1, 4, 2], 200, RngStream::new(1, 1)).unwrap();
        assert_eq!(
            s.entries.iter().map(|e| e.k).collect::<Vec<_>>(),
            vec![1, 2, 4, 8]
        );
        assert!(s.entries.windows(2).all(|w| w[0].raw <= w[1].raw));
        assert!(s.to_csv().starts_with("k,raw,mode,trials\n1,"));
        assert!(s.to_csv().contains(",sampled-lower-bound,200\n"));
    }

    #[test]
    fn sign_and_permutation_invariance() {
        let a = gaussian(4, 8, 11);
        let eps = sample_sign_vector(8, RngStream::new(11, 1)).unwrap();
        let flipped = column_randomize(EmbeddingOperator::Dense(a.clone()), eps)
            .unwrap()
            .materialize()
            .unwrap();
        let perm = [3, 0, 7, 5, 1, 6, 2, 4];
        let permuted = a.select_columns(&perm);
        for k in 1..=8 {
            let base = sparse_distortion_exact(&a, k).unwrap();
            assert!((sparse_distortion_exact(&flipped, k).unwrap() - base).abs() <= 1e-12);
            assert!((sparse_distortion_exact(&permuted, k).unwrap() - base).abs() <= 1e-12);
        }
    }

    #[test]
    fn single_row_pairs() {
        // 1×n with unit-magnitude entries: k = 1 is exact isometry, and each
        // pair's Gram minus identity is [[0, a_i a_j], [a_i a_j, 0]].
        let row = vec![1.0, -1.0, 1.0, 1.0];
        let a = DenseMatrix::new(1, 4, row.clone()).unwrap();
        assert_eq!(sparse_distortion_exact(&a, 1).unwrap(), 0.0);
        let mut closed = 0.0f64;
        for i in 0..4 {
            for j in i + 1..4 {
                closed = closed.max((row[i] * row[j]).abs());
            }
        }
        assert!((sparse_distortion_exact(&a, 2).unwrap() - closed).abs() < 1e-14);
    }

    #[test]
    fn low_to_high_identity_and_guard() {
        let r = check_low_to_high(&DenseMatrix::identity(5), 0.5).unwrap();
        assert_eq!(r.status, CheckStatus::Pass);
        assert!(r.ratios.iter().all(|&v| v == 0.0));

        let a = gaussian(6, 6, 2);
        let r = check_low_to_high(&a, 1e-3).unwrap();
        assert_eq!(r.status, CheckStatus::NotApplicable);
    }

    #[test]
    fn delta_selection_on_gaussians() {
        for seed in 0..10 {
            let a = gaussian(8, 8, 100 + seed);
            let p = exact_profile(&a, 8).unwrap();
            let delta = select_delta(&p)
                .unwrap()
                .expect("grid contains a feasible delta");
            let r = check_low_to_high_profile(&p, delta).unwrap();
            assert_eq!(r.status, CheckStatus::Pass, "seed {seed}: {r:?}");
        }
        let grid = delta_grid();
        assert_eq!(grid.len(), 256);
        assert!((grid[0] - 1e-3).abs() < 1e-15 && (grid[255] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn envelope_formula() {
        assert!((gaussian_regularity_expectation(7, 7, 7) - 1.0).abs() < 1e-15);
        let v = gaussian_regularity_expectation(128, 256, 4);
        let direct = (4.0 * (std::f64::consts::E * 64.0).ln() / 128.0).sqrt();
        assert!((v - direct).abs() < 1e-15);
        assert!((v - 0.40152).abs() < 1e-4);
        let half = gaussian_regularity_expectation(256, 256, 4);
        assert!((v / half - 2f64.sqrt()).abs() < 1e-14);
    }
}
