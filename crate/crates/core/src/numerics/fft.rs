//! Circular convolution, via an iterative radix-2 FFT when the length is a
//! power of two and by direct summation otherwise.
//!
//! Convention: `w_j = Σ_i u_{(j−i) mod n} · v_i`.

use crate::error::{usage, Result};

use super::matrix::RealVector;

#[derive(Clone, Copy, Debug, Default)]
struct Complex {
    re: f64,
    im: f64,
}

impl Complex {
    #[inline]
    fn mul(self, o: Complex) -> Complex {
        Complex {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

/// Precomputed radix-2 transform of one length.
#[derive(Clone, Debug)]
struct Radix2Plan {
    n: usize,
    // exp(−2πi k/n) for k < n/2, each computed directly from k.
    twiddles: Vec<Complex>,
    bitrev: Vec<usize>,
}

impl Radix2Plan {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| {
                if bits == 0 {
                    0
                } else {
                    i.reverse_bits() >> (usize::BITS - bits)
                }
            })
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| {
                let a = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Complex {
                    re: libm::cos(a),
                    im: libm::sin(a),
                }
            })
            .collect();
        Self {
            n,
            twiddles,
            bitrev,
        }
    }

    fn transform(&self, data: &mut [Complex], inverse: bool) {
        let n = self.n;
        for i in 0..n {
            let j = self.bitrev[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w.im = -w.im;
                    }
                    let a = data[start + k];
                    let b = data[start + k + half].mul(w);
                    data[start + k] = Complex {
                        re: a.re + b.re,
                        im: a.im + b.im,
                    };
                    data[start + k + half] = Complex {
                        re: a.re - b.re,
                        im: a.im - b.im,
                    };
                }
            }
            len <<= 1;
        }
        if inverse {
            let scale = 1.0 / n as f64;
            for c in data {
                c.re *= scale;
                c.im *= scale;
            }
        }
    }

    fn forward_real(&self, x: &[f64]) -> Vec<Complex> {
        let mut buf: Vec<Complex> = x.iter().map(|&re| Complex { re, im: 0.0 }).collect();
        self.transform(&mut buf, false);
        buf
    }
}

/// Convolution with a fixed left operand, caching its spectrum.
///
/// `apply(v)` returns exactly what [`circular_convolve`]`(kernel, v)` would.
#[derive(Clone, Debug)]
pub struct CirculantKernel {
    kernel: Vec<f64>,
    fft: Option<(Radix2Plan, Vec<Complex>)>,
}

impl CirculantKernel {
    pub fn new(kernel: &[f64]) -> Result<Self> {
        if kernel.is_empty() {
            return usage("convolution kernel must be nonempty");
        }
        let fft = kernel.len().is_power_of_two().then(|| {
            let plan = Radix2Plan::new(kernel.len());
            let spectrum = plan.forward_real(kernel);
            (plan, spectrum)
        });
        Ok(Self {
            kernel: kernel.to_vec(),
            fft,
        })
    }

    pub fn len(&self) -> usize {
        self.kernel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernel.is_empty()
    }

    pub fn uses_fft(&self) -> bool {
        self.fft.is_some()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.kernel.len() {
            return usage(format!(
                "convolution length mismatch: {} vs {}",
                self.kernel.len(),
                v.len()
            ));
        }
        Ok(match &self.fft {
            Some((plan, spectrum)) => {
                let mut buf = plan.forward_real(v);
                for (b, s) in buf.iter_mut().zip(spectrum) {
                    *b = s.mul(*b);
                }
                plan.transform(&mut buf, true);
                buf.into_iter().map(|c| c.re).collect()
            }
            None => direct(&self.kernel, v),
        })
    }
}

fn direct(u: &[f64], v: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|j| {
            let mut s = 0.0;
            for (i, vi) in v.iter().enumerate() {
                s += u[(j + n - i) % n] * vi;
            }
            s
        })
        .collect()
}

/// Circular convolution `w_j = Σ_i u_{(j−i) mod n} v_i`.
pub fn circular_convolve(u: &[f64], v: &[f64]) -> Result<RealVector> {
    if u.len() != v.len() {
        return usage(format!(
            "convolution length mismatch: {} vs {}",
            u.len(),
            v.len()
        ));
    }
    Ok(RealVector::from_vec_unchecked(
        CirculantKernel::new(u)?.apply(v)?,
    ))
}

/// The `O(n²)` summation path regardless of length.
pub fn circular_convolve_direct(u: &[f64], v: &[f64]) -> Result<RealVector> {
    if u.len() != v.len() || u.is_empty() {
        return usage(format!(
            "convolution length mismatch: {} vs {}",
            u.len(),
            v.len()
        ));
    }
    Ok(RealVector::from_vec_unchecked(direct(u, v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::RngStream;
    use crate::numerics::rng_standard_normal;
    use crate::Error;

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    #[test]
    fn delta_is_identity() {
        for n in [1, 3, 4, 8] {
            let mut u = vec![0.0; n];
            u[0] = 1.0;
            let v: Vec<f64> = (0..n).map(|i| i as f64 + 0.5).collect();
            let w = circular_convolve(&u, &v).unwrap();
            for (a, b) in w.iter().zip(&v) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn shifted_delta_rotates() {
        let u = [0.0, 1.0, 0.0, 0.0];
        let v = [1.0, 2.0, 3.0, 4.0];
        let w = circular_convolve(&u, &v).unwrap();
        for (a, b) in w.iter().zip(&[4.0, 1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let w = circular_convolve(&u[..3], &v[..3]).unwrap();
        assert_eq!(w.as_slice(), &[3.0, 1.0, 2.0]);
    }

    #[test]
    fn fft_matches_direct() {
        let n = 1024;
        let u = rng_standard_normal(RngStream::new(1, 1), n);
        let v = rng_standard_normal(RngStream::new(1, 2), n);
        let fast = circular_convolve(&u, &v).unwrap();
        let slow = circular_convolve_direct(&u, &v).unwrap();
        assert!(rel_err(&fast, &slow) <= 1e-10);
    }

    #[test]
    fn linear_in_second_argument() {
        let n = 64;
        let u = rng_standard_normal(RngStream::new(3, 0), n);
        let v = rng_standard_normal(RngStream::new(3, 1), n);
        let w = rng_standard_normal(RngStream::new(3, 2), n);
        let alpha = -1.7;
        let combo: Vec<f64> = v.iter().zip(w.iter()).map(|(a, b)| alpha * a + b).collect();
        let lhs = circular_convolve(&u, &combo).unwrap();
        let cv = circular_convolve(&u, &v).unwrap();
        let cw = circular_convolve(&u, &w).unwrap();
        let rhs: Vec<f64> = cv
            .iter()
            .zip(cw.iter())
            .map(|(a, b)| alpha * a + b)
            .collect();
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn mismatch_is_usage_error() {
        assert!(matches!(
            circular_convolve(&[1.0, 2.0], &[1.0]),
            Err(Error::Usage(_))
        ));
        assert!(CirculantKernel::new(&[]).is_err());
    }
}
