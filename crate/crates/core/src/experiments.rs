//! Monte-Carlo experiments over the column signs `ε`.
//!
//! The reference error for a set `T` is
//!
//! ```text
//! bound = u² · (Λ · d_T · δ · ℓ_*(T) + (δ · ℓ_*(T))²),   Λ = max(1, δ² ln(e(1 + nδ²)))
//! ```
//!
//! with the unknown absolute constant set to one. Experiments only compare
//! shapes (slopes, envelopes, ratios) against it.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{
    column_randomize, gaussian_operator, partial_circulant, sample_sign_vector, CirculantSpec,
    EmbeddingOperator,
};
use crate::error::{usage, Result};
use crate::geometry::{mean_width, sup_distortion, Exactness, TestSet};
use crate::numerics::RngStream;

/// Smallest sample count accepted by [`tail_report`].
pub const MIN_TAIL_SAMPLES: usize = 200;
/// Trials needed before the `1 − e⁻⁴` quantile is reported.
pub const DEEP_QUANTILE_TRIALS: usize = 10_000;
pub const SURVIVAL_POINTS: usize = 20;

/// `Λ = max(1, δ² ln(e(1 + nδ²)))`.
pub fn lambda(delta: f64, n: usize) -> f64 {
    let d2 = delta * delta;
    (d2 * (std::f64::consts::E * (1.0 + n as f64 * d2)).ln()).max(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParameters {
    pub delta: f64,
    pub n: usize,
    pub width: f64,
    pub radius: f64,
    pub u: f64,
    pub lambda: f64,
}

impl BoundParameters {
    pub fn new(delta: f64, n: usize, width: f64, radius: f64, u: f64) -> Result<Self> {
        if !delta.is_finite() || delta <= 0.0 {
            return usage("delta must be positive");
        }
        if !(width >= 0.0 && radius >= 0.0) {
            return usage("width and radius must be nonnegative");
        }
        if u.is_nan() || u < 1.0 {
            return usage("u must be at least 1");
        }
        Ok(Self {
            delta,
            n,
            width,
            radius,
            u,
            lambda: lambda(delta, n),
        })
    }

    pub fn with_u(&self, u: f64) -> Result<Self> {
        Self::new(self.delta, self.n, self.width, self.radius, u)
    }
}

pub fn evaluate_bound(p: &BoundParameters) -> f64 {
    let dw = p.delta * p.width;
    p.u * p.u * (p.lambda * p.radius * dw + dw * dw)
}

/// `δ·ℓ_*(T)/d_T`: the relative accuracy at which the linear term dominates.
pub fn derived_rho(delta: f64, width: f64, radius: f64) -> f64 {
    if radius > 0.0 {
        delta * width / radius
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionSample {
    pub trial_id: usize,
    pub sup_distortion: f64,
    pub exactness: Exactness,
    /// Stream the trial drew its signs from.
    pub seed: u64,
    pub stream: u64,
}

/// Trial `t` stream; its child 0 yields `ε`, child 1 feeds lower-bound
/// searches.
fn trial_stream(r: RngStream, trial: usize) -> RngStream {
    r.child(trial as u64)
}

/// Evaluates `sup_{t ∈ T} |‖A_ε t‖² − ‖t‖²|` for one trial's sign draw.
pub fn single_trial(
    a: &EmbeddingOperator,
    t: &TestSet,
    trial: usize,
    r: RngStream,
) -> Result<DistortionSample> {
    let s = trial_stream(r, trial);
    let eps = sample_sign_vector(a.cols(), s.child(0))?;
    let op = column_randomize(a.clone(), eps)?;
    let (value, exactness) = sup_distortion(&op, t, s.child(1))?;
    Ok(DistortionSample {
        trial_id: trial,
        sup_distortion: value,
        exactness,
        seed: s.seed(),
        stream: s.stream_id(),
    })
}

/// Draws a fresh `ε` per trial and evaluates the column-randomized operator on
/// `T`. `A` itself is never resampled.
pub fn distortion_trials(
    a: &EmbeddingOperator,
    t: &TestSet,
    trials: usize,
    r: RngStream,
) -> Result<Vec<DistortionSample>> {
    if trials == 0 {
        return usage("trials must be ≥ 1");
    }
    if a.cols() != t.ambient_dim() {
        return usage(format!(
            "operator has {} columns but the set lives in dimension {}",
            a.cols(),
            t.ambient_dim()
        ));
    }
    (0..trials)
        .into_par_iter()
        .map(|i| single_trial(a, t, i, r))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

pub fn samples_to_csv(samples: &[DistortionSample]) -> String {
    let mut s = String::from("trial,sup_distortion,exactness,seed,stream\n");
    for d in samples {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            d.trial_id,
            d.sup_distortion,
            d.exactness.as_str(),
            d.seed,
            d.stream
        );
    }
    s
}

/// Linear-interpolation quantile of ascending data (Hyndman–Fan type 7).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantilePoint {
    pub probability: f64,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPoint {
    pub threshold: f64,
    /// `ln P̂(X ≥ threshold)`.
    pub log_survival: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub trials: usize,
    pub quantiles: Vec<QuantilePoint>,
    pub survival: Vec<SurvivalPoint>,
    /// Least-squares slope of `ln survival` against `((x − median)/scale)²`;
    /// `None` when the samples carry no spread.
    pub fitted_slope: Option<f64>,
    pub scale: f64,
}

impl TailReport {
    pub fn quantile(&self, p: f64) -> Option<f64> {
        self.quantiles
            .iter()
            .find(|q| (q.probability - p).abs() < 1e-12)
            .map(|q| q.value)
    }
}

/// Probabilities reported for a run of `trials` samples, ascending.
pub fn report_probabilities(trials: usize) -> Vec<f64> {
    let mut p = vec![0.5, 0.9, 0.99];
    if trials >= DEEP_QUANTILE_TRIALS {
        p.insert(2, 1.0 - (-4.0f64).exp());
    }
    p
}

pub fn tail_report(samples: &[DistortionSample], scale: f64) -> Result<TailReport> {
    let values: Vec<f64> = samples.iter().map(|s| s.sup_distortion).collect();
    tail_report_values(&values, scale)
}

/// Empirical quantiles, log-survival curve on 20 thresholds from the median
/// to the maximum, and the sub-gaussian slope fit.
pub fn tail_report_values(values: &[f64], scale: f64) -> Result<TailReport> {
    if values.len() < MIN_TAIL_SAMPLES {
        return usage(format!(
            "tail reports need at least {MIN_TAIL_SAMPLES} samples, got {}",
            values.len()
        ));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let quantiles = report_probabilities(n)
        .into_iter()
        .map(|p| QuantilePoint {
            probability: p,
            value: quantile(&sorted, p),
        })
        .collect();
    let med = quantile(&sorted, 0.5);
    let max = sorted[n - 1];
    let survival: Vec<SurvivalPoint> = (0..SURVIVAL_POINTS)
        .map(|i| {
            let threshold = med + (max - med) * i as f64 / (SURVIVAL_POINTS - 1) as f64;
            let below = sorted.partition_point(|&v| v < threshold);
            SurvivalPoint {
                threshold,
                log_survival: ((n - below) as f64 / n as f64).ln(),
            }
        })
        .collect();

    let fitted_slope = if max > med && scale > 0.0 {
        let xs: Vec<f64> = survival
            .iter()
            .map(|s| ((s.threshold - med) / scale).powi(2))
            .collect();
        let ys: Vec<f64> = survival.iter().map(|s| s.log_survival).collect();
        least_squares_slope(&xs, &ys)
    } else {
        None
    };
    Ok(TailReport {
        trials: n,
        quantiles,
        survival,
        fitted_slope,
        scale,
    })
}

/// Ordinary least-squares slope; `None` when `x` has no spread.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Slope of `ln y` against `ln x`; every value must be positive.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.iter().chain(ys).any(|v| v.is_nan() || *v <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    least_squares_slope(&lx, &ly)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    Circulant,
}

/// A fresh operator from the family; circulant operators keep rows `0..m`
/// and take their generator from `r.child(0)`.
pub fn build_family(family: Family, m: usize, n: usize, r: RngStream) -> Result<EmbeddingOperator> {
    match family {
        Family::Gaussian => gaussian_operator(m, n, r),
        Family::Circulant => {
            let xi = sample_sign_vector(n, r.child(0))?;
            partial_circulant(CirculantSpec::first_rows(xi, m)?)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingAxis {
    /// Vary the number of rows; the set `T` is fixed.
    Rows { n: usize, ms: Vec<usize> },
    /// Vary the dimension of a random subspace ball; the operator is fixed.
    SubspaceDim {
        m: usize,
        n: usize,
        dims: Vec<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingGrid {
    pub family: Family,
    pub axis: ScalingAxis,
    pub trials: usize,
    pub width_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub parameter: usize,
    pub m: usize,
    pub n: usize,
    pub width: f64,
    pub radius: f64,
    pub median: f64,
    pub q90: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub axis: String,
    pub rows: Vec<ScalingRow>,
    /// Log-log slope of the median against `m` (rows axis) or against the
    /// mean width (subspace axis).
    pub exponent: Option<f64>,
}

impl ScalingTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("parameter,m,n,width,radius,median,q90\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.parameter, r.m, r.n, r.width, r.radius, r.median, r.q90
            );
        }
        s
    }
}

fn summarize(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    (quantile(&v, 0.5), quantile(&v, 0.9))
}

/// Median distortion across a parameter grid plus the fitted log-log exponent.
///
/// Rows axis: grid point `i` builds its operator from `r.child(0).child(i)`
/// and runs trials on `r.child(1).child(i)`; `t` is shared. Subspace axis:
/// one operator from `r.child(0)`, subspace `i` from `r.child(2).child(i)`.
pub fn scaling_study(grid: &ScalingGrid, t: &TestSet, r: RngStream) -> Result<ScalingTable> {
    let points = match &grid.axis {
        ScalingAxis::Rows { ms, .. } => ms.len(),
        ScalingAxis::SubspaceDim { dims, .. } => dims.len(),
    };
    if points < 4 {
        return usage(format!(
            "scaling grids need at least 4 points, got {points}"
        ));
    }
    let mut rows = Vec::with_capacity(points);
    match &grid.axis {
        ScalingAxis::Rows { n, ms } => {
            if t.ambient_dim() != *n {
                return usage("test set dimension does not match the grid's n");
            }
            let w = mean_width(t, grid.width_samples, r.child(3))?;
            for (i, &m) in ms.iter().enumerate() {
                let a = build_family(grid.family, m, *n, r.child(0).child(i as u64))?;
                let samples = distortion_trials(&a, t, grid.trials, r.child(1).child(i as u64))?;
                let values: Vec<f64> = samples.iter().map(|s| s.sup_distortion).collect();
                let (median, q90) = summarize(&values);
                rows.push(ScalingRow {
                    parameter: m,
                    m,
                    n: *n,
                    width: w.mean,
                    radius: w.radius,
                    median,
                    q90,
                });
            }
        }
        ScalingAxis::SubspaceDim { m, n, dims } => {
            let a = build_family(grid.family, *m, *n, r.child(0))?;
            for (i, &d) in dims.iter().enumerate() {
                let ti = TestSet::random_subspace_ball(*n, d, 1.0, r.child(2).child(i as u64))?;
                let w = mean_width(&ti, grid.width_samples, r.child(3).child(i as u64))?;
                let samples = distortion_trials(&a, &ti, grid.trials, r.child(1).child(i as u64))?;
                let values: Vec<f64> = samples.iter().map(|s| s.sup_distortion).collect();
                let (median, q90) = summarize(&values);
                rows.push(ScalingRow {
                    parameter: d,
                    m: *m,
                    n: *n,
                    width: w.mean,
                    radius: w.radius,
                    median,
                    q90,
                });
            }
        }
    }
    let (axis, xs): (&str, Vec<f64>) = match &grid.axis {
        ScalingAxis::Rows { .. } => ("rows", rows.iter().map(|r| r.m as f64).collect()),
        ScalingAxis::SubspaceDim { .. } => ("subspace_dim", rows.iter().map(|r| r.width).collect()),
    };
    let ys: Vec<f64> = rows.iter().map(|r| r.median).collect();
    Ok(ScalingTable {
        axis: axis.into(),
        exponent: log_log_slope(&xs, &ys),
        rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileRatio {
    pub probability: f64,
    pub randomized: f64,
    pub gaussian: f64,
    /// `None` when the Gaussian quantile is zero.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineTable {
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub randomized: Vec<f64>,
    pub gaussian: Vec<f64>,
    pub quantiles: Vec<QuantileRatio>,
    /// Median of the column-randomized operator over the Gaussian median.
    pub median_ratio: Option<f64>,
    /// Set when the Gaussian median is zero and no ratio exists.
    pub degenerate: bool,
}

impl BaselineTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("trial,randomized,gaussian\n");
        for (i, (a, b)) in self.randomized.iter().zip(&self.gaussian).enumerate() {
            let _ = writeln!(s, "{i},{a},{b}");
        }
        s
    }
}

/// Column-randomized `A` (trials on `r.child(0)`) against a fresh Gaussian
/// operator of the same shape per trial (trial `i` from `r.child(1).child(i)`).
pub fn baseline_compare(
    a: &EmbeddingOperator,
    t: &TestSet,
    trials: usize,
    r: RngStream,
) -> Result<BaselineTable> {
    let (m, n) = a.dims();
    if m > n {
        return usage(format!("baseline needs m <= n, got {m}x{n}"));
    }
    let randomized: Vec<f64> = distortion_trials(a, t, trials, r.child(0))?
        .into_iter()
        .map(|s| s.sup_distortion)
        .collect();
    let gaussian: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let s = r.child(1).child(i as u64);
            let g = gaussian_operator(m, n, s.child(0))?;
            Ok(sup_distortion(&g, t, s.child(1))?.0)
        })
        .collect::<Vec<Result<f64>>>()
        .into_iter()
        .collect::<Result<_>>()?;

    let mut ra = randomized.clone();
    ra.sort_by(f64::total_cmp);
    let mut ga = gaussian.clone();
    ga.sort_by(f64::total_cmp);
    let ratio = |x: f64, y: f64| (y > 0.0).then(|| x / y);
    let quantiles: Vec<QuantileRatio> = [0.5, 0.9, 0.99]
        .into_iter()
        .map(|p| {
            let (x, y) = (quantile(&ra, p), quantile(&ga, p));
            QuantileRatio {
                probability: p,
                randomized: x,
                gaussian: y,
                ratio: ratio(x, y),
            }
        })
        .collect();
    let median_ratio = quantiles[0].ratio;
    Ok(BaselineTable {
        m,
        n,
        trials,
        randomized,
        gaussian,
        quantiles,
        median_ratio,
        degenerate: median_ratio.is_none(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{DenseMatrix, RngStream};
    use crate::regularity::sparse_distortion_exact;
    use proptest::prelude::*;

    #[test]
    fn bound_reference_values() {
        let p = BoundParameters::new(0.1, 100, 3.0, 1.0, 1.0).unwrap();
        assert_eq!(p.lambda, 1.0);
        assert!((evaluate_bound(&p) - 0.39).abs() < 1e-15);
        let p2 = p.with_u(2.0).unwrap();
        assert_eq!(evaluate_bound(&p2), 4.0 * evaluate_bound(&p));
        let tiny = BoundParameters::new(1e-300, 100, 3.0, 1.0, 1.0).unwrap();
        assert!(evaluate_bound(&tiny) < 1e-290);
        assert!(BoundParameters::new(0.1, 100, 3.0, 1.0, 0.5).is_err());
        assert!(BoundParameters::new(0.0, 100, 3.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn lambda_is_well_defined_everywhere() {
        assert_eq!(lambda(0.01, 1), 1.0);
        let big = lambda(1.0, 10_000);
        assert!((big - (std::f64::consts::E * 10_001.0).ln()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn bound_is_monotone(
            delta in 1e-3f64..2.0, width in 0.0f64..50.0, radius in 0.0f64..5.0,
            u in 1.0f64..5.0, n in 1usize..5000, bump in 1.0f64..2.0,
        ) {
            let base = evaluate_bound(&BoundParameters::new(delta, n, width, radius, u).unwrap());
            for p in [
                BoundParameters::new(delta * bump, n, width, radius, u).unwrap(),
                BoundParameters::new(delta, n, width * bump, radius, u).unwrap(),
                BoundParameters::new(delta, n, width, radius * bump, u).unwrap(),
                BoundParameters::new(delta, n, width, radius, u * bump).unwrap(),
            ] {
                prop_assert!(evaluate_bound(&p) >= base);
            }
        }
    }

    #[test]
    fn identity_trials_are_zero_and_deterministic() {
        let id = EmbeddingOperator::identity(8);
        let t = TestSet::random_subspace_ball(8, 3, 1.0, RngStream::new(1, 0)).unwrap();
        let s = distortion_trials(&id, &t, 20, RngStream::new(1, 1)).unwrap();
        assert!(s.iter().all(|d| d.sup_distortion < 1e-14));
        let a = gaussian_operator(4, 8, RngStream::new(1, 2)).unwrap();
        let x = distortion_trials(&a, &t, 20, RngStream::new(1, 3)).unwrap();
        let y = distortion_trials(&a, &t, 20, RngStream::new(1, 3)).unwrap();
        assert_eq!(x, y);
        assert!(distortion_trials(&a, &t, 0, RngStream::new(1, 3)).is_err());
    }

    #[test]
    fn sparse_sphere_trials_have_zero_variance() {
        let a = gaussian_operator(4, 9, RngStream::new(2, 0)).unwrap();
        let t = TestSet::sparse_sphere(9, 3).unwrap();
        let expected = sparse_distortion_exact(&a.materialize().unwrap(), 3).unwrap();
        let s = distortion_trials(&a, &t, 30, RngStream::new(2, 1)).unwrap();
        for d in &s {
            assert_eq!(d.exactness, Exactness::Exact);
            assert!((d.sup_distortion - expected).abs() <= 1e-12);
        }
    }

    #[test]
    fn global_sign_flip_changes_nothing() {
        let a = gaussian_operator(5, 12, RngStream::new(3, 0)).unwrap();
        let t = TestSet::random_unit_points(12, 10, RngStream::new(3, 1)).unwrap();
        for seed in 0..10 {
            let eps = sample_sign_vector(12, RngStream::new(seed, 0)).unwrap();
            let r = RngStream::new(seed, 1);
            let plus =
                sup_distortion(&column_randomize(a.clone(), eps.clone()).unwrap(), &t, r).unwrap();
            let minus = sup_distortion(&column_randomize(a.clone(), eps.negated()).unwrap(), &t, r)
                .unwrap();
            assert_eq!(plus, minus);
        }
    }

    #[test]
    fn single_point_matches_direct_simulation() {
        let n = 16;
        let a = gaussian_operator(6, n, RngStream::new(4, 0)).unwrap();
        let point = crate::numerics::rng_standard_normal(RngStream::new(4, 1), n);
        let t = TestSet::finite_points(&[point.as_slice().to_vec()]).unwrap();
        let r = RngStream::new(4, 2);
        let samples = distortion_trials(&a, &t, 101, r).unwrap();
        let dense = a.materialize().unwrap();
        let direct: Vec<f64> = (0..101)
            .map(|i| {
                let eps = sample_sign_vector(n, r.child(i).child(0)).unwrap();
                let x: Vec<f64> = eps.apply(&point);
                let mut y2 = 0.0;
                for row in 0..6 {
                    let mut s = 0.0;
                    for (j, xj) in x.iter().enumerate() {
                        s += dense.get(row, j) * xj;
                    }
                    y2 += s * s;
                }
                (y2 - point.norm_squared()).abs()
            })
            .collect();
        let via: Vec<f64> = samples.iter().map(|s| s.sup_distortion).collect();
        assert!((median(&via) - median(&direct)).abs() <= 1e-12);
    }

    #[test]
    fn point_scaling_is_quadratic() {
        let a = gaussian_operator(5, 10, RngStream::new(5, 0)).unwrap();
        let t = TestSet::random_unit_points(10, 7, RngStream::new(5, 1)).unwrap();
        let t2 = t.scaled_points(2.0).unwrap();
        let r = RngStream::new(5, 2);
        let x = distortion_trials(&a, &t, 40, r).unwrap();
        let y = distortion_trials(&a, &t2, 40, r).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert_eq!(4.0 * p.sup_distortion, q.sup_distortion);
        }
    }

    #[test]
    fn tail_report_shapes() {
        let constant = vec![0.25; 300];
        let r = tail_report_values(&constant, 1.0).unwrap();
        assert!(r.quantiles.iter().all(|q| q.value == 0.25));
        assert_eq!(r.fitted_slope, None);
        assert!(tail_report_values(&constant[..199], 1.0).is_err());

        let n = 10_000;
        let draws = crate::numerics::rng_standard_normal(RngStream::new(6, 0), n);
        let abs: Vec<f64> = draws.iter().map(|v| v.abs()).collect();
        let r = tail_report_values(&abs, 1.0).unwrap();
        // Median of |N(0,1)| is Φ⁻¹(0.75); its standard error is
        // √(p(1−p)/n) / f(q) with density f(q) = 2φ(q).
        let q = 0.674_489_750_196_081_7;
        let density = 2.0 * (-q * q / 2.0f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let se = (0.25f64 / n as f64).sqrt() / density;
        assert!((r.quantile(0.5).unwrap() - q).abs() <= 3.0 * se);
        assert_eq!(r.quantiles.len(), 4);
        assert!(r
            .survival
            .windows(2)
            .all(|w| w[0].log_survival >= w[1].log_survival));
        assert!(r.fitted_slope.unwrap() < 0.0);
        assert!(r.quantiles.windows(2).all(|w| w[0].value <= w[1].value));
    }

    proptest! {
        #[test]
        fn survival_nonincreasing(values in proptest::collection::vec(0.0f64..100.0, 200..400)) {
            let r = tail_report_values(&values, 1.0).unwrap();
            prop_assert!(r.survival.windows(2).all(|w| w[0].log_survival >= w[1].log_survival));
            prop_assert!(r.quantiles.windows(2).all(|w| w[0].value <= w[1].value));
        }
    }

    #[test]
    fn scaling_grid_validation_and_rows() {
        let t = TestSet::random_subspace_ball(64, 2, 1.0, RngStream::new(7, 0)).unwrap();
        let small = ScalingGrid {
            family: Family::Gaussian,
            axis: ScalingAxis::Rows {
                n: 64,
                ms: vec![8, 16, 32],
            },
            trials: 10,
            width_samples: 200,
        };
        assert!(scaling_study(&small, &t, RngStream::new(7, 1)).is_err());
        let grid = ScalingGrid {
            axis: ScalingAxis::Rows {
                n: 64,
                ms: vec![8, 16, 32, 64],
            },
            trials: 40,
            ..small
        };
        let table = scaling_study(&grid, &t, RngStream::new(7, 1)).unwrap();
        assert_eq!(table.rows.len(), 4);
        assert!(table.exponent.unwrap() < 0.0);
        assert!(table
            .to_csv()
            .starts_with("parameter,m,n,width,radius,median,q90\n8,8,64,"));

        let dims = ScalingGrid {
            family: Family::Circulant,
            axis: ScalingAxis::SubspaceDim {
                m: 32,
                n: 64,
                dims: vec![1, 2, 4, 8],
            },
            trials: 30,
            width_samples: 500,
        };
        let table = scaling_study(&dims, &t, RngStream::new(7, 2)).unwrap();
        assert!(table.exponent.unwrap() > 0.0);
    }

    #[test]
    fn baseline_ratio_and_degenerate_guard() {
        let a = gaussian_operator(16, 64, RngStream::new(8, 0)).unwrap();
        let t = TestSet::random_subspace_ball(64, 2, 1.0, RngStream::new(8, 1)).unwrap();
        let b = baseline_compare(&a, &t, 60, RngStream::new(8, 2)).unwrap();
        let ratio = b.median_ratio.unwrap();
        assert!((0.5..=2.0).contains(&ratio), "ratio {ratio}");
        assert!(!b.degenerate);
        assert!(b.to_csv().lines().count() == 61);

        let zero = TestSet::finite_points(&[vec![0.0; 8]]).unwrap();
        let b = baseline_compare(
            &EmbeddingOperator::identity(8),
            &zero,
            5,
            RngStream::new(8, 3),
        )
        .unwrap();
        assert!(b.degenerate);
        assert_eq!(b.median_ratio, None);
        let id = DenseMatrix::identity(4);
        let b = baseline_compare(
            &EmbeddingOperator::Dense(id),
            &TestSet::random_unit_points(4, 3, RngStream::new(8, 4)).unwrap(),
            20,
            RngStream::new(8, 5),
        )
        .unwrap();
        assert_eq!(b.median_ratio, Some(0.0));
    }

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!((quantile(&v, 0.5) - 2.5).abs() < 1e-15);
        assert_eq!(
            log_log_slope(&[1.0, 2.0, 4.0], &[1.0, 0.5, 0.25]),
            Some(-1.0)
        );
        assert_eq!(log_log_slope(&[1.0, 2.0], &[0.0, 1.0]), None);
    }
}
