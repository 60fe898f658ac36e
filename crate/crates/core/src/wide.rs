//! Double-double arithmetic for the 9×9 exponential.
//!
//! Scaling and squaring doubles any error along the trace-preserving
//! direction at every squaring, and the stiff probe generators need 25 or
//! more squarings. Carrying about 32 significant digits through the Taylor
//! kernel and the squarings leaves the rounded result accurate to `f64`
//! precision.

use core::ops::{Add, Mul, Sub};

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg3::{Complex, Mat9C};

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let t = 134_217_729.0 * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl Dd {
    pub(crate) const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub(crate) fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub(crate) fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// Exact product of two doubles.
    #[inline]
    pub(crate) fn prod(a: f64, b: f64) -> Dd {
        let (p, e) = two_prod(a, b);
        Dd { hi: p, lo: e }
    }

    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub(crate) fn div(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let r = self - Dd::prod(q1, b);
        let (hi, lo) = quick_two_sum(q1, r.hi / b);
        Dd { hi, lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, y: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, y.hi);
        let (t, f) = two_sum(self.lo, y.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, y: Dd) -> Dd {
        self + y.neg()
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, y: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, y.hi);
        let (hi, lo) = quick_two_sum(p, e + (self.hi * y.lo + self.lo * y.hi));
        Dd { hi, lo }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct CDd {
    re: Dd,
    im: Dd,
}

impl CDd {
    const ZERO: CDd = CDd {
        re: Dd::ZERO,
        im: Dd::ZERO,
    };

    fn from_c(z: Complex) -> CDd {
        CDd {
            re: Dd::from_f64(z.re),
            im: Dd::from_f64(z.im),
        }
    }

    /// `z · t` with the real factor applied exactly.
    fn scaled_exact(z: Complex, t: f64) -> CDd {
        CDd {
            re: Dd::prod(z.re, t),
            im: Dd::prod(z.im, t),
        }
    }

    fn to_c(self) -> Complex {
        Complex::new(self.re.to_f64(), self.im.to_f64())
    }

    fn div(self, b: f64) -> CDd {
        CDd {
            re: self.re.div(b),
            im: self.im.div(b),
        }
    }

    fn is_zero(&self) -> bool {
        self.re.hi == 0.0 && self.im.hi == 0.0
    }

    fn abs_approx(&self) -> f64 {
        self.re.hi.hypot(self.im.hi)
    }
}

impl Add for CDd {
    type Output = CDd;
    #[inline]
    fn add(self, y: CDd) -> CDd {
        CDd {
            re: self.re + y.re,
            im: self.im + y.im,
        }
    }
}

impl Mul for CDd {
    type Output = CDd;
    #[inline]
    fn mul(self, y: CDd) -> CDd {
        CDd {
            re: self.re * y.re - self.im * y.im,
            im: self.re * y.im + self.im * y.re,
        }
    }
}

/// 9×9 complex matrix in double-double precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct WideMat9(pub(crate) [[CDd; 9]; 9]);

impl WideMat9 {
    pub(crate) fn identity() -> Self {
        let mut m = WideMat9([[CDd::ZERO; 9]; 9]);
        for i in 0..9 {
            m.0[i][i] = CDd::from_c(Complex::new(1.0, 0.0));
        }
        m
    }

    /// `l · t · 2^{-squarings}`, with each entry formed exactly.
    pub(crate) fn scaled(l: &Mat9C, t: f64, squarings: i32) -> Self {
        let mut m = WideMat9([[CDd::ZERO; 9]; 9]);
        let pow = 0.5f64.powi(squarings);
        for i in 0..9 {
            for j in 0..9 {
                // Multiplying by a power of two is exact.
                m.0[i][j] = CDd::scaled_exact(l.0[i][j] * pow, t);
            }
        }
        m
    }

    pub(crate) fn mul(&self, rhs: &WideMat9) -> WideMat9 {
        let mut out = WideMat9([[CDd::ZERO; 9]; 9]);
        for i in 0..9 {
            for k in 0..9 {
                let a = self.0[i][k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..9 {
                    out.0[i][j] = out.0[i][j] + a * rhs.0[k][j];
                }
            }
        }
        out
    }

    pub(crate) fn add(&self, rhs: &WideMat9) -> WideMat9 {
        let mut out = *self;
        for i in 0..9 {
            for j in 0..9 {
                out.0[i][j] = out.0[i][j] + rhs.0[i][j];
            }
        }
        out
    }

    pub(crate) fn div(&self, b: f64) -> WideMat9 {
        WideMat9(self.0.map(|r| r.map(|z| z.div(b))))
    }

    pub(crate) fn norm1_approx(&self) -> f64 {
        (0..9)
            .map(|j| (0..9).map(|i| self.0[i][j].abs_approx()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub(crate) fn round(&self) -> Mat9C {
        let mut m = Mat9C::zeros();
        for i in 0..9 {
            for j in 0..9 {
                m.0[i][j] = self.0[i][j].to_c();
            }
        }
        m
    }
}
