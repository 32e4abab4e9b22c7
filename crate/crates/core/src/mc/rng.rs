//! One ChaCha stream per path, normals by inversion.

use crate::mathkit::inv_cdf_rational;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TWO_POW_M53: f64 = 1.0 / 9_007_199_254_740_992.0;

/// Random source for a single path (or antithetic pair).
///
/// The stream id selects an independent ChaCha keystream for the same seed, so
/// path `i` draws the same numbers whichever worker simulates it.
#[derive(Debug, Clone)]
pub struct PathRng {
    inner: ChaCha8Rng,
    negate: bool,
}

impl PathRng {
    pub fn new(seed: u64, stream: u64, negate: bool) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner, negate }
    }

    /// Uniform on the open interval (0, 1) with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * TWO_POW_M53
    }

    /// Standard normal draw; negated for the antithetic member of a pair.
    #[inline]
    pub fn normal(&mut self) -> f64 {
        let z = inv_cdf_rational(self.uniform());
        if self.negate {
            -z
        } else {
            z
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<f64> = {
            let mut r = PathRng::new(42, 7, false);
            (0..8).map(|_| r.normal()).collect()
        };
        let b: Vec<f64> = {
            let mut r = PathRng::new(42, 7, false);
            (0..8).map(|_| r.normal()).collect()
        };
        let c: Vec<f64> = {
            let mut r = PathRng::new(42, 8, false);
            (0..8).map(|_| r.normal()).collect()
        };
        let d: Vec<f64> = {
            let mut r = PathRng::new(42, 7, true);
            (0..8).map(|_| r.normal()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().zip(&d).all(|(x, y)| *x == -*y));
    }

    #[test]
    fn moments() {
        let mut r = PathRng::new(1, 0, false);
        let n = 200_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let z = r.normal();
            s1 += z;
            s2 += z * z;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn uniform_stays_open() {
        let mut r = PathRng::new(3, 1, false);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }
}
