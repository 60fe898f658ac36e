//! Fixed-size complex linear algebra for three-level systems.
//!
//! [`Mat3C`] carries the non-Hermitian no-photon generator `M` and its
//! exponential `e^{-Mt}`, which is evaluated in spectral (Lagrange) form from
//! an [`EigenDecomp3`]. [`Mat9C`] is a superoperator acting on the
//! column-stacked vectorization of a 3×3 matrix: entry `(i, j)` of the matrix
//! sits at position [`vec_index`]`(i, j) = i + 3 j`.

use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::wide::WideMat9;
use crate::{Error, Result};

pub type Complex = Complex64;

pub const ZERO: Complex = Complex::new(0.0, 0.0);
pub const ONE: Complex = Complex::new(1.0, 0.0);
pub const I: Complex = Complex::new(0.0, 1.0);

/// Relative eigenvalue gap below which a spectrum is treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Largest `‖L t‖₁` accepted by [`expm9`].
pub const EXPM_NORM_GUARD: f64 = 1e9;

#[inline]
pub const fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

#[inline]
pub const fn re(x: f64) -> Complex {
    Complex::new(x, 0.0)
}

/// Column-stacking position of matrix entry `(row, col)`.
#[inline]
pub const fn vec_index(row: usize, col: usize) -> usize {
    row + 3 * col
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3C(pub [Complex; 3]);

impl Vec3C {
    pub const fn new(c1: Complex, c2: Complex, c3: Complex) -> Self {
        Vec3C([c1, c2, c3])
    }

    pub const fn zeros() -> Self {
        Vec3C([ZERO; 3])
    }

    /// Basis state `|level⟩`, with `level` in `1..=3`.
    ///
    /// # Panics
    /// If `level` is outside `1..=3`.
    pub fn level(level: usize) -> Self {
        assert!((1..=3).contains(&level), "atomic level must be 1, 2 or 3");
        let mut v = Self::zeros();
        v.0[level - 1] = ONE;
        v
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Unit vector along `self`, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(*self * (1.0 / n))
        } else {
            None
        }
    }

    /// Inner product `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &Vec3C) -> Complex {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|self⟩⟨other|`.
    pub fn outer(&self, other: &Vec3C) -> Mat3C {
        let mut m = Mat3C::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i] * other.0[j].conj();
            }
        }
        m
    }

    /// `|self⟩ otherᵀ`, the bilinear outer product.
    fn outer_bilinear(&self, other: &Vec3C) -> Mat3C {
        let mut m = Mat3C::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i] * other.0[j];
            }
        }
        m
    }

    /// Bilinear dot product `selfᵀ other`.
    fn dot_bilinear(&self, other: &Vec3C) -> Complex {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    fn cross(&self, other: &Vec3C) -> Vec3C {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = other.0;
        Vec3C([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.is_finite())
    }
}

impl Index<usize> for Vec3C {
    type Output = Complex;
    fn index(&self, i: usize) -> &Complex {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vec3C {
    fn index_mut(&mut self, i: usize) -> &mut Complex {
        &mut self.0[i]
    }
}

impl Add for Vec3C {
    type Output = Vec3C;
    fn add(self, rhs: Vec3C) -> Vec3C {
        Vec3C([
            self.0[0] + rhs.0[0],
            self.0[1] + rhs.0[1],
            self.0[2] + rhs.0[2],
        ])
    }
}

impl AddAssign for Vec3C {
    fn add_assign(&mut self, rhs: Vec3C) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl Sub for Vec3C {
    type Output = Vec3C;
    fn sub(self, rhs: Vec3C) -> Vec3C {
        Vec3C([
            self.0[0] - rhs.0[0],
            self.0[1] - rhs.0[1],
            self.0[2] - rhs.0[2],
        ])
    }
}

impl Mul<Complex> for Vec3C {
    type Output = Vec3C;
    fn mul(self, s: Complex) -> Vec3C {
        Vec3C(self.0.map(|z| z * s))
    }
}

impl Mul<f64> for Vec3C {
    type Output = Vec3C;
    fn mul(self, s: f64) -> Vec3C {
        Vec3C(self.0.map(|z| z * s))
    }
}

/// Dense 3×3 complex matrix, row-major.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat3C(pub [[Complex; 3]; 3]);

impl Mat3C {
    pub const fn zeros() -> Self {
        Mat3C([[ZERO; 3]; 3])
    }

    pub const fn identity() -> Self {
        Mat3C([[ONE, ZERO, ZERO], [ZERO, ONE, ZERO], [ZERO, ZERO, ONE]])
    }

    pub const fn from_rows(rows: [[Complex; 3]; 3]) -> Self {
        Mat3C(rows)
    }

    pub fn diag(d: [Complex; 3]) -> Self {
        let mut m = Self::zeros();
        for (i, z) in d.into_iter().enumerate() {
            m.0[i][i] = z;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn trace(&self) -> Complex {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> Complex {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// `self - λ I`.
    pub fn shifted(&self, lambda: Complex) -> Self {
        let mut m = *self;
        for i in 0..3 {
            m.0[i][i] -= lambda;
        }
        m
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm1(&self) -> f64 {
        (0..3)
            .map(|j| (0..3).map(|i| self.0[i][j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.is_finite())
    }

    pub fn row(&self, i: usize) -> Vec3C {
        Vec3C(self.0[i])
    }

    pub fn col(&self, j: usize) -> Vec3C {
        Vec3C([self.0[0][j], self.0[1][j], self.0[2][j]])
    }

    pub fn scale(&self, s: Complex) -> Self {
        Mat3C(self.0.map(|r| r.map(|z| z * s)))
    }

    /// Column-stacking vectorization, see [`vec_index`].
    pub fn vectorize(&self) -> [Complex; 9] {
        let mut v = [ZERO; 9];
        for i in 0..3 {
            for j in 0..3 {
                v[vec_index(i, j)] = self.0[i][j];
            }
        }
        v
    }

    pub fn unvectorize(v: &[Complex; 9]) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = v[vec_index(i, j)];
            }
        }
        m
    }
}

impl Index<(usize, usize)> for Mat3C {
    type Output = Complex;
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat3C {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.0[i][j]
    }
}

impl Add for Mat3C {
    type Output = Mat3C;
    fn add(mut self, rhs: Mat3C) -> Mat3C {
        self += rhs;
        self
    }
}

impl AddAssign for Mat3C {
    fn add_assign(&mut self, rhs: Mat3C) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] += rhs.0[i][j];
            }
        }
    }
}

impl Sub for Mat3C {
    type Output = Mat3C;
    fn sub(mut self, rhs: Mat3C) -> Mat3C {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
        self
    }
}

impl Neg for Mat3C {
    type Output = Mat3C;
    fn neg(self) -> Mat3C {
        Mat3C(self.0.map(|r| r.map(|z| -z)))
    }
}

impl Mul for Mat3C {
    type Output = Mat3C;
    fn mul(self, rhs: Mat3C) -> Mat3C {
        let mut m = Mat3C::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        m
    }
}

impl Mul<Vec3C> for Mat3C {
    type Output = Vec3C;
    fn mul(self, v: Vec3C) -> Vec3C {
        Vec3C([
            self.0[0][0] * v.0[0] + self.0[0][1] * v.0[1] + self.0[0][2] * v.0[2],
            self.0[1][0] * v.0[0] + self.0[1][1] * v.0[1] + self.0[1][2] * v.0[2],
            self.0[2][0] * v.0[0] + self.0[2][1] * v.0[1] + self.0[2][2] * v.0[2],
        ])
    }
}

impl Mul<Complex> for Mat3C {
    type Output = Mat3C;
    fn mul(self, s: Complex) -> Mat3C {
        self.scale(s)
    }
}

impl Mul<f64> for Mat3C {
    type Output = Mat3C;
    fn mul(self, s: f64) -> Mat3C {
        Mat3C(self.0.map(|r| r.map(|z| z * s)))
    }
}

/// Dense 9×9 complex superoperator on column-stacked 3×3 matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat9C(pub [[Complex; 9]; 9]);

impl Default for Mat9C {
    fn default() -> Self {
        Self::zeros()
    }
}

impl Mat9C {
    pub const fn zeros() -> Self {
        Mat9C([[ZERO; 9]; 9])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..9 {
            m.0[i][i] = ONE;
        }
        m
    }

    pub fn diag(d: [Complex; 9]) -> Self {
        let mut m = Self::zeros();
        for (i, z) in d.into_iter().enumerate() {
            m.0[i][i] = z;
        }
        m
    }

    pub fn norm1(&self) -> f64 {
        (0..9)
            .map(|j| (0..9).map(|i| self.0[i][j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.is_finite())
    }

    pub fn scale(&self, s: f64) -> Self {
        Mat9C(self.0.map(|r| r.map(|z| z * s)))
    }

    pub fn apply(&self, v: &[Complex; 9]) -> [Complex; 9] {
        let mut out = [ZERO; 9];
        for (o, row) in out.iter_mut().zip(self.0.iter()) {
            *o = row.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// Apply to the vectorization of `m` and fold back into a matrix.
    pub fn apply_mat(&self, m: &Mat3C) -> Mat3C {
        Mat3C::unvectorize(&self.apply(&m.vectorize()))
    }

    #[cfg(test)]
    fn add_scaled_identity(&mut self, s: Complex) {
        for i in 0..9 {
            self.0[i][i] += s;
        }
    }
}

impl Add for Mat9C {
    type Output = Mat9C;
    fn add(mut self, rhs: Mat9C) -> Mat9C {
        for i in 0..9 {
            for j in 0..9 {
                self.0[i][j] += rhs.0[i][j];
            }
        }
        self
    }
}

impl Sub for Mat9C {
    type Output = Mat9C;
    fn sub(mut self, rhs: Mat9C) -> Mat9C {
        for i in 0..9 {
            for j in 0..9 {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
        self
    }
}

impl Mul for Mat9C {
    type Output = Mat9C;
    fn mul(self, rhs: Mat9C) -> Mat9C {
        let mut m = Mat9C::zeros();
        for i in 0..9 {
            for k in 0..9 {
                let a = self.0[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..9 {
                    m.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        m
    }
}

/// `e^{L t}` by scaling and squaring around a Taylor kernel.
///
/// `L t` is scaled by `2^{-s}` to 1-norm at most `1/2`, the Taylor series is
/// summed until the next term drops below `1e-32` of the partial sum, and the
/// result is squared `s` times. Kernel and squarings run in double-double
/// arithmetic, so the rounded result keeps full `f64` accuracy even after the
/// 25 or more squarings that stiff generators require.
///
/// Fails with [`Error::NormOverflow`] when `‖L t‖₁ > 1e9`; callers are
/// expected to subdivide.
pub fn expm9(l: &Mat9C, t: f64) -> Result<Mat9C> {
    Ok(expm9_wide(l, t)?.round())
}

pub(crate) fn expm9_wide(l: &Mat9C, t: f64) -> Result<WideMat9> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: "propagation time must be finite and non-negative",
        });
    }
    let norm = l.norm1() * t;
    if !norm.is_finite() || norm > EXPM_NORM_GUARD {
        return Err(Error::NormOverflow { norm });
    }
    if norm == 0.0 {
        return Ok(WideMat9::identity());
    }
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let a = WideMat9::scaled(l, t, squarings);

    let mut sum = WideMat9::identity();
    let mut term = WideMat9::identity();
    for k in 1..=40 {
        term = term.mul(&a).div(k as f64);
        sum = sum.add(&term);
        if term.norm1_approx() <= 1e-32 * sum.norm1_approx() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.mul(&sum);
    }
    Ok(sum)
}

/// Coefficients of the characteristic polynomial
/// `λ³ − c2 λ² + c1 λ − c0`.
fn char_poly(m: &Mat3C) -> (Complex, Complex, Complex) {
    let a = &m.0;
    let c2 = m.trace();
    let c1 = a[0][0] * a[1][1] - a[0][1] * a[1][0] + a[0][0] * a[2][2] - a[0][2] * a[2][0]
        + a[1][1] * a[2][2]
        - a[1][2] * a[2][1];
    (c2, c1, m.det())
}

#[inline]
fn poly(x: Complex, (c2, c1, c0): (Complex, Complex, Complex)) -> (Complex, Complex) {
    let p = ((x - c2) * x + c1) * x - c0;
    let dp = (re(3.0) * x - re(2.0) * c2) * x + c1;
    (p, dp)
}

/// Newton iterations on the characteristic polynomial, keeping only steps
/// that reduce the residual.
fn polish(mut x: Complex, coeffs: (Complex, Complex, Complex)) -> Complex {
    let (mut p, mut dp) = poly(x, coeffs);
    for _ in 0..5 {
        if p == ZERO || dp == ZERO {
            break;
        }
        let next = x - p / dp;
        let (pn, dpn) = poly(next, coeffs);
        if !(pn.norm() < p.norm()) {
            break;
        }
        x = next;
        p = pn;
        dp = dpn;
    }
    x
}

/// Roots of `λ³ − c2 λ² + c1 λ − c0` by Cardano's formula over the complex
/// numbers, snapping numerically-vanishing invariants so that exact multiple
/// roots come out exactly equal.
fn cardano((c2, c1, c0): (Complex, Complex, Complex)) -> [Complex; 3] {
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = -c0 + c1 * c2 / 3.0 - c2 * c2 * c2 * (2.0 / 27.0);

    let scale = (c2.norm() / 3.0)
        .max(c1.norm().sqrt())
        .max(c0.norm().cbrt());
    if scale == 0.0 {
        return [ZERO; 3];
    }
    let eps = 64.0 * f64::EPSILON;
    if p.norm() <= eps * scale * scale && q.norm() <= eps * scale.powi(3) {
        return [shift; 3];
    }

    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let mut disc = half_q * half_q + third_p * third_p * third_p;
    if disc.norm() <= 1e-14 * scale.powi(6) {
        disc = ZERO;
    }
    let sq = disc.sqrt();
    let (w1, w2) = (-half_q + sq, -half_q - sq);
    let w = if w1.norm() >= w2.norm() { w1 } else { w2 };
    if w == ZERO {
        return [shift; 3];
    }
    let u = w.cbrt();
    let v = -third_p / u;
    let omega = c(-0.5, 0.75f64.sqrt());
    let omega2 = omega.conj();
    [
        u + v + shift,
        u * omega + v * omega2 + shift,
        u * omega2 + v * omega + shift,
    ]
}

/// Recompute the two roots other than `isolated` from the quadratic left
/// after deflation, which keeps the small one accurate when rates differ by
/// many orders of magnitude.
fn deflated_pair(
    isolated: Complex,
    coeffs: (Complex, Complex, Complex),
    others: [Complex; 2],
) -> [Complex; 2] {
    let (c2, c1, c0) = coeffs;
    let sum = c2 - isolated;
    let big = others[0].norm().max(others[1].norm());
    let prod = if isolated.norm() >= big && isolated != ZERO {
        c0 / isolated
    } else {
        c1 - isolated * sum
    };
    let disc = (sum * sum - prod * 4.0).sqrt();
    let (qa, qb) = (sum + disc, sum - disc);
    let q = if qa.norm() >= qb.norm() { qa } else { qb };
    if q == ZERO {
        return [ZERO, ZERO];
    }
    let r1 = q / 2.0;
    let r2 = if r1 == ZERO { ZERO } else { prod / r1 };
    [r1, r2]
}

fn sort_roots(roots: &mut [Complex; 3]) {
    roots.sort_by(|a, b| {
        a.norm()
            .partial_cmp(&b.norm())
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(
                a.im.partial_cmp(&b.im)
                    .unwrap_or(core::cmp::Ordering::Equal),
            )
    });
}

/// Eigenvalues of `m`, sorted by modulus.
pub fn eigenvalues3(m: &Mat3C) -> [Complex; 3] {
    let coeffs = char_poly(m);
    let mut r = cardano(coeffs);
    let distinct = |a: Complex, b: Complex| a != b;
    for k in 0..3 {
        let unique = (0..3).all(|j| j == k || distinct(r[j], r[k]));
        if unique {
            r[k] = polish(r[k], coeffs);
        }
    }
    // The root farthest from the other two is well conditioned; refine the
    // remaining pair by deflation.
    let gap = |k: usize| -> f64 {
        (0..3)
            .filter(|&j| j != k)
            .map(|j| (r[j] - r[k]).norm())
            .fold(f64::INFINITY, f64::min)
    };
    let iso = (0..3)
        .max_by(|&a, &b| {
            gap(a)
                .partial_cmp(&gap(b))
                .unwrap_or(core::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    if gap(iso) > 0.0 {
        let others: [usize; 2] = match iso {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        };
        let pair = deflated_pair(r[iso], coeffs, [r[others[0]], r[others[1]]]);
        if pair.iter().all(|z| z.is_finite()) {
            let split = pair[0] != pair[1];
            r[others[0]] = if split {
                polish(pair[0], coeffs)
            } else {
                pair[0]
            };
            r[others[1]] = if split {
                polish(pair[1], coeffs)
            } else {
                pair[1]
            };
        }
    }
    sort_roots(&mut r);
    r
}

/// Null vector of a rank-deficient 3×3 matrix from the best-conditioned
/// cross product of two of its rows. Returns `None` if every cross product
/// vanishes (nullity above one).
fn null_vector(a: &Mat3C) -> Option<Vec3C> {
    let rows = [a.row(0), a.row(1), a.row(2)];
    let candidates = [
        rows[0].cross(&rows[1]),
        rows[0].cross(&rows[2]),
        rows[1].cross(&rows[2]),
    ];
    let best = candidates.into_iter().max_by(|x, y| {
        x.max_abs()
            .partial_cmp(&y.max_abs())
            .unwrap_or(core::cmp::Ordering::Equal)
    })?;
    let size = best.max_abs();
    if size > 0.0 && size.is_finite() {
        Some(best * (1.0 / size))
    } else {
        None
    }
}

/// Spectral projector of a simple eigenvalue, `r lᵀ / (lᵀ r)` with right and
/// left eigenvectors taken from cross products.
fn simple_projector(m: &Mat3C, lambda: Complex) -> Option<Mat3C> {
    let a = m.shifted(lambda);
    let right = null_vector(&a)?;
    let left = null_vector(&a.transpose())?;
    let overlap = left.dot_bilinear(&right);
    if overlap == ZERO || !overlap.is_finite() {
        return None;
    }
    Some(right.outer_bilinear(&left).scale(overlap.inv()))
}

/// Lagrange form of the spectral projector of eigenvalue `i`,
/// `(M − λⱼ)(M − λₖ) / ((λᵢ − λⱼ)(λᵢ − λₖ))`.
pub fn lagrange_projector(m: &Mat3C, lambdas: &[Complex; 3], i: usize) -> Mat3C {
    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
    let num = m.shifted(lambdas[j]) * m.shifted(lambdas[k]);
    num.scale(((lambdas[i] - lambdas[j]) * (lambdas[i] - lambdas[k])).inv())
}

/// Spectral data of a 3×3 matrix sufficient to evaluate `e^{-M t}` exactly.
///
/// For a non-degenerate spectrum, `projectors[i]` is the spectral projector
/// of `lambdas[i]` and `nilpotents` vanish. When two or three eigenvalues
/// coincide within [`DEGENERACY_TOL`], the cluster is merged to its mean, the
/// projector onto the whole generalized eigenspace sits in the first slot of
/// the cluster, and `nilpotents` holds `(M − λ) P` for the confluent limit.
#[derive(Clone, Copy, Debug)]
pub struct EigenDecomp3 {
    pub lambdas: [Complex; 3],
    pub degenerate: bool,
    pub projectors: [Mat3C; 3],
    pub nilpotents: [Mat3C; 3],
}

/// Eigendecomposition of a 3×3 complex matrix.
///
/// Eigenvalues come from Cardano's formula followed by Newton polishing on
/// the characteristic polynomial. The spectrum is flagged degenerate when the
/// smallest pairwise gap is at most `1e-8` times the largest modulus.
pub fn eig3(m: &Mat3C) -> EigenDecomp3 {
    let mut lambdas = eigenvalues3(m);
    let scale = lambdas.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = DEGENERACY_TOL * scale;
    let close = |a: usize, b: usize, l: &[Complex; 3]| (l[a] - l[b]).norm() <= tol;

    let pairs = [(0, 1), (0, 2), (1, 2)];
    let n_close = pairs
        .iter()
        .filter(|&&(a, b)| close(a, b, &lambdas))
        .count();
    let zero = Mat3C::zeros();

    if n_close == 0 {
        let mut projectors = [zero; 3];
        let mut ok = true;
        for i in 0..3 {
            match simple_projector(m, lambdas[i]) {
                Some(p) => projectors[i] = p,
                None => ok = false,
            }
        }
        if !ok {
            for (i, p) in projectors.iter_mut().enumerate() {
                *p = lagrange_projector(m, &lambdas, i);
            }
        }
        return EigenDecomp3 {
            lambdas,
            degenerate: false,
            projectors,
            nilpotents: [zero; 3],
        };
    }

    if n_close >= 2 {
        let mean = (lambdas[0] + lambdas[1] + lambdas[2]) / 3.0;
        return EigenDecomp3 {
            lambdas: [mean; 3],
            degenerate: true,
            projectors: [Mat3C::identity(), zero, zero],
            nilpotents: [m.shifted(mean), zero, zero],
        };
    }

    let &(a, b) = pairs
        .iter()
        .find(|&&(a, b)| close(a, b, &lambdas))
        .expect("one close pair");
    let simple = 3 - a - b;
    let mean = (lambdas[a] + lambdas[b]) / 2.0;
    lambdas[a] = mean;
    lambdas[b] = mean;
    let p_simple = simple_projector(m, lambdas[simple]).unwrap_or_else(|| {
        let d = lambdas[simple] - mean;
        let s = m.shifted(mean);
        (s * s).scale((d * d).inv())
    });
    let p_pair = Mat3C::identity() - p_simple;
    let mut projectors = [zero; 3];
    let mut nilpotents = [zero; 3];
    projectors[simple] = p_simple;
    projectors[a] = p_pair;
    nilpotents[a] = m.shifted(mean) * p_pair;
    EigenDecomp3 {
        lambdas,
        degenerate: true,
        projectors,
        nilpotents,
    }
}

/// `e^{z}` that returns exactly zero far below the underflow threshold.
#[inline]
fn decay(z: Complex) -> Complex {
    if z.re < -745.0 {
        ZERO
    } else {
        z.exp()
    }
}

impl EigenDecomp3 {
    /// The matrix exponential `e^{-M t}`.
    pub fn exp_neg(&self, t: f64) -> Mat3C {
        let mut out = Mat3C::zeros();
        for i in 0..3 {
            let e = decay(-self.lambdas[i] * t);
            if e == ZERO {
                continue;
            }
            let n = self.nilpotents[i];
            let mut block = self.projectors[i] - n * t;
            if n != Mat3C::zeros() {
                block += (n * n) * (0.5 * t * t);
            }
            out += block * e;
        }
        out
    }

    /// `e^{-M t} v`.
    pub fn propagate(&self, t: f64, v: &Vec3C) -> Vec3C {
        self.modes(v).at(t)
    }

    /// Expansion of `t ↦ e^{-M t} v` into exponential modes.
    pub fn modes(&self, v: &Vec3C) -> Modes {
        let mut m = Modes {
            rates: self.lambdas,
            constant: [Vec3C::zeros(); 3],
            linear: [Vec3C::zeros(); 3],
            quadratic: [Vec3C::zeros(); 3],
            polynomial: self.degenerate,
        };
        for i in 0..3 {
            let pv = self.projectors[i] * *v;
            m.constant[i] = pv;
            if self.degenerate {
                let n = self.nilpotents[i];
                let npv = n * pv;
                m.linear[i] = npv * -1.0;
                m.quadratic[i] = (n * npv) * 0.5;
            }
        }
        m
    }
}

/// `t ↦ Σᵢ e^{-λᵢ t} (aᵢ + bᵢ t + cᵢ t²)`, the exact evolution of one fixed
/// initial vector.
#[derive(Clone, Copy, Debug)]
pub struct Modes {
    pub rates: [Complex; 3],
    pub constant: [Vec3C; 3],
    pub linear: [Vec3C; 3],
    pub quadratic: [Vec3C; 3],
    polynomial: bool,
}

impl Modes {
    #[inline]
    pub fn at(&self, t: f64) -> Vec3C {
        let mut out = Vec3C::zeros();
        for i in 0..3 {
            let e = decay(-self.rates[i] * t);
            if e == ZERO {
                continue;
            }
            let mut v = self.constant[i];
            if self.polynomial {
                v += self.linear[i] * t + self.quadratic[i] * (t * t);
            }
            out += v * e;
        }
        out
    }
}

/// `e^{-M t} v` via [`eig3`], using the confluent limit for degenerate
/// spectra.
pub fn expm_action3(m: &Mat3C, t: f64, v: &Vec3C) -> Vec3C {
    eig3(m).propagate(t, v)
}
