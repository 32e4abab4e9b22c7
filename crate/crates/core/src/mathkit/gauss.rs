use super::normal::norm_pdf;
use crate::error::{Error, Result};

/// Completed-square form of φ(a + b·x)·φ(c + d·x) = constant · φ(shift + scale·x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussProduct {
    pub shift: f64,
    pub scale: f64,
    pub constant: f64,
}

impl GaussProduct {
    pub fn eval(&self, x: f64) -> f64 {
        self.constant * norm_pdf(self.shift + self.scale * x)
    }
}

pub fn gauss_product_split(a: f64, b: f64, c: f64, d: f64) -> Result<GaussProduct> {
    let scale = b.hypot(d);
    if scale == 0.0 {
        return Err(Error::Degenerate("sqrt(b^2 + d^2)"));
    }
    Ok(GaussProduct {
        shift: (a * b + c * d) / scale,
        scale,
        constant: norm_pdf((a * d - b * c) / scale),
    })
}
