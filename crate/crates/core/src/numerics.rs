//! Dense complex matrices and the handful of linear-algebra primitives the
//! estimation pipeline needs.
//!
//! Storage is column-major throughout, so [`vec`] is a plain copy of the
//! backing buffer and [`unvec`] its exact inverse.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Condition number above which `X X^H` is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Dense complex matrix, column-major.
#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        CMat { rows, cols, data }
    }

    /// Builds a matrix from row-major nested slices; convenient in tests.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        CMat::from_fn(n_rows, n_cols, |r, c| rows[r][c])
    }

    /// Wraps a column-major buffer.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(CMat { rows, cols, data })
    }

    /// Column vector from a slice.
    pub fn column(v: &[Complex64]) -> Self {
        CMat {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// Row vector from a slice.
    pub fn row(v: &[Complex64]) -> Self {
        CMat {
            rows: 1,
            cols: v.len(),
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn col(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scale(&self, s: Complex64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> CMat {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn matmul(&self, rhs: &CMat) -> Result<CMat> {
        if self.cols != rhs.rows {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for c in 0..rhs.cols {
            let out_col = &mut out.data[c * self.rows..(c + 1) * self.rows];
            for k in 0..self.cols {
                let b = rhs[(k, c)];
                if b == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (o, a) in out_col.iter_mut().zip(self.col(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · diag(d)`: scales column `c` by `d[c]`.
    pub fn mul_diag(&self, d: &[Complex64]) -> Result<CMat> {
        if d.len() != self.cols {
            return Err(Error::shape(format!(
                "diagonal of length {} against {} columns",
                d.len(),
                self.cols
            )));
        }
        let mut out = self.clone();
        for (c, s) in d.iter().enumerate() {
            for z in &mut out.data[c * self.rows..(c + 1) * self.rows] {
                *z *= s;
            }
        }
        Ok(out)
    }

    /// Horizontal concatenation `[M_1, M_2, ...]`.
    pub fn hcat(blocks: &[CMat]) -> Result<CMat> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(Error::shape("hcat blocks disagree on row count"));
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let data = blocks.iter().flat_map(|b| b.data.iter().copied()).collect();
        Ok(CMat { rows, cols, data })
    }

    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[c * self.rows + r]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[c * self.rows + r]
    }
}

impl Add for &CMat {
    type Output = CMat;

    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!(self.shape(), rhs.shape(), "matrix add shape mismatch");
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;

    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!(self.shape(), rhs.shape(), "matrix sub shape mismatch");
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMat {
    type Output = CMat;

    /// Panics on incompatible shapes; use [`CMat::matmul`] for a checked product.
    fn mul(self, rhs: &CMat) -> CMat {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4e}{:+.4e}j ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// DFT matrix with entry `(r, q) = exp(j 2π r q / n)`, scaled by `1/√n` when
/// `normalized`.
pub fn dft_matrix(n: usize, normalized: bool) -> CMat {
    let scale = if normalized { 1.0 / (n as f64).sqrt() } else { 1.0 };
    CMat::from_fn(n, n, |r, q| {
        // reduce the exponent mod n so large indices keep full precision
        let k = (r * q) % n;
        Complex64::from_polar(scale, 2.0 * PI * k as f64 / n as f64)
    })
}

/// Inverse of a square matrix by Gauss-Jordan elimination with partial
/// pivoting. Fails when the 1-norm condition estimate exceeds [`MAX_CONDITION`].
pub fn invert_square(a: &CMat) -> Result<CMat> {
    if !a.is_square() {
        return Err(Error::shape(format!(
            "cannot invert a {}x{} matrix",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let mut work = a.clone();
    let mut inv = CMat::identity(n);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| work[(i, col)].norm().total_cmp(&work[(j, col)].norm()))
            .unwrap_or(col);
        let pivot = work[(pivot_row, col)];
        if pivot.norm() == 0.0 || !pivot.norm().is_finite() {
            return Err(Error::Singular {
                condition: f64::INFINITY,
            });
        }
        if pivot_row != col {
            for c in 0..n {
                work.data.swap(c * n + col, c * n + pivot_row);
                inv.data.swap(c * n + col, c * n + pivot_row);
            }
        }
        let inv_pivot = pivot.inv();
        for c in 0..n {
            work[(col, c)] *= inv_pivot;
            inv[(col, c)] *= inv_pivot;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = work[(r, col)];
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in 0..n {
                let w = work[(col, c)];
                let v = inv[(col, c)];
                work[(r, c)] -= factor * w;
                inv[(r, c)] -= factor * v;
            }
        }
    }
    let condition = norm_one(a) * norm_one(&inv);
    if !(condition.is_finite() && condition <= MAX_CONDITION) {
        return Err(Error::Singular { condition });
    }
    Ok(inv)
}

fn norm_one(a: &CMat) -> f64 {
    (0..a.cols)
        .map(|c| a.col(c).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Pseudoinverse of a square full-rank matrix, `X^H (X X^H)^{-1}`.
pub fn pinv_square(x: &CMat) -> Result<CMat> {
    if !x.is_square() {
        return Err(Error::shape(format!(
            "pinv_square needs a square matrix, got {}x{}",
            x.rows, x.cols
        )));
    }
    let xh = x.adjoint();
    let gram = x * &xh;
    let gram_inv = invert_square(&gram)?;
    Ok(&xh * &gram_inv)
}

/// Column-stacking vectorization.
pub fn vec(m: &CMat) -> Vec<Complex64> {
    m.data.clone()
}

/// Inverse of [`vec`] for a known shape.
pub fn unvec(v: &[Complex64], rows: usize, cols: usize) -> Result<CMat> {
    CMat::from_col_major(rows, cols, v.to_vec())
}

/// Sum of squared magnitudes.
pub fn fro_norm_sq(m: &CMat) -> f64 {
    m.data.iter().map(|z| z.norm_sqr()).sum()
}

/// Matrix of i.i.d. `CN(0, variance)` entries.
pub fn randn_complex(rows: usize, cols: usize, variance: f64, rng: &mut RngStream) -> CMat {
    assert!(variance >= 0.0, "negative variance {variance}");
    let sd = (variance / 2.0).sqrt();
    CMat::from_fn(rows, cols, |_, _| rng.complex_normal() * sd)
}

/// Seeded, splittable random stream.
///
/// Every `(seed, stream id)` pair selects an independent ChaCha8 keystream.
/// Child streams are derived by mixing a tag into the stream id, which lets
/// parallel workers draw reproducibly without sharing a generator.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Fresh stream identified by `tag`; does not advance `self`.
    pub fn derive(&self, tag: u64) -> RngStream {
        RngStream::new(self.seed, splitmix64(self.stream ^ splitmix64(tag)))
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// `CN(0, 2)` sample: independent standard normal real and imaginary parts.
    fn complex_normal(&mut self) -> Complex64 {
        let re = self.standard_normal();
        let im = self.standard_normal();
        Complex64::new(re, im)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.rng);
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
