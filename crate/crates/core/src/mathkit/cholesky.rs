use crate::error::{ensure_correlation, Error, Result};

/// Correlations within this distance of ±1 are pulled in to ±(1 − CLAMP).
pub const CLAMP: f64 = 1e-12;
const PSD_TOL: f64 = 1e-12;

/// Off-diagonal entries of a symmetric 3×3 correlation matrix with unit diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrMatrix3 {
    pub r12: f64,
    pub r13: f64,
    pub r23: f64,
}

impl CorrMatrix3 {
    pub fn new(r12: f64, r13: f64, r23: f64) -> Result<Self> {
        ensure_correlation("r12", r12)?;
        ensure_correlation("r13", r13)?;
        ensure_correlation("r23", r23)?;
        Ok(Self { r12, r13, r23 })
    }

    pub fn clamped(&self) -> Self {
        Self {
            r12: clamp_correlation(self.r12),
            r13: clamp_correlation(self.r13),
            r23: clamp_correlation(self.r23),
        }
    }

    pub fn as_matrix(&self) -> [[f64; 3]; 3] {
        [
            [1.0, self.r12, self.r13],
            [self.r12, 1.0, self.r23],
            [self.r13, self.r23, 1.0],
        ]
    }
}

pub fn clamp_correlation(r: f64) -> f64 {
    let edge = 1.0 - CLAMP;
    r.clamp(-edge, edge)
}

/// Lower-triangular factor R with R·Rᵀ equal to the (clamped) correlation matrix.
pub fn cholesky3(m: &CorrMatrix3) -> Result<[[f64; 3]; 3]> {
    let m = m.clamped();
    let l21 = m.r12;
    let l22 = pivot_sqrt(2, 1.0 - l21 * l21)?;
    let l31 = m.r13;
    let l32 = if l22 > 0.0 {
        (m.r23 - l21 * l31) / l22
    } else if (m.r23 - l21 * l31).abs() <= PSD_TOL {
        0.0
    } else {
        return Err(Error::NotPsd { pivot: 2, value: 0.0 });
    };
    let l33 = pivot_sqrt(3, 1.0 - l31 * l31 - l32 * l32)?;
    Ok([[1.0, 0.0, 0.0], [l21, l22, 0.0], [l31, l32, l33]])
}

fn pivot_sqrt(pivot: usize, value: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value.sqrt())
    } else if value >= -PSD_TOL {
        Ok(0.0)
    } else {
        Err(Error::NotPsd { pivot, value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn reconstruct(r: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| r[i][k] * r[j][k]).sum();
            }
        }
        out
    }

    #[test]
    fn identity() {
        let r = cholesky3(&CorrMatrix3::new(0.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(r, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    }

    #[test]
    fn equicorrelated_half() {
        let r = cholesky3(&CorrMatrix3::new(0.5, 0.5, 0.5).unwrap()).unwrap();
        assert_abs_diff_eq!(r[2][0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r[2][1], 0.288_675_134_594_812_9, epsilon = 1e-15);
        assert_abs_diff_eq!(r[2][2], 0.816_496_580_927_726, epsilon = 1e-15);
    }

    #[test]
    fn unit_correlation_is_clamped() {
        let m = CorrMatrix3::new(1.0, 0.0, 0.0).unwrap();
        let r = cholesky3(&m).unwrap();
        let back = reconstruct(&r);
        let target = m.clamped().as_matrix();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(back[i][j], target[i][j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn indefinite_matrix_names_pivot() {
        let err = cholesky3(&CorrMatrix3::new(0.9, 0.9, -0.9).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NotPsd { pivot: 3, .. }));
        assert!(CorrMatrix3::new(1.2, 0.0, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn factor_reproduces_random_psd_matrices(
            u in prop::array::uniform9(-1.0..1.0f64),
        ) {
            // Gram matrix of three random unit vectors is a valid correlation matrix.
            let norms: Vec<f64> = u.chunks(3).map(|c| (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()).collect();
            prop_assume!(norms.iter().all(|&n| n > 1e-3));
            let rows: Vec<[f64; 3]> = u.chunks(3).zip(&norms).map(|(c, &n)| {
                [c[0] / n, c[1] / n, c[2] / n]
            }).collect();
            let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
            let m = CorrMatrix3::new(
                dot(&rows[0], &rows[1]).clamp(-1.0, 1.0),
                dot(&rows[0], &rows[2]).clamp(-1.0, 1.0),
                dot(&rows[1], &rows[2]).clamp(-1.0, 1.0),
            ).unwrap();
            prop_assume!(m.r12.abs() < 1.0 - 1e-6);
            let r = cholesky3(&m).unwrap();
            let back = reconstruct(&r);
            let target = m.clamped().as_matrix();
            for i in 0..3 {
                prop_assert!((r[i].iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
                for j in 0..3 {
                    prop_assert!((back[i][j] - target[i][j]).abs() <= 1e-12);
                }
            }
        }
    }
}
