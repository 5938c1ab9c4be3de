use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// Dense row-major `f64` matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix({}x{}) ", self.rows, self.cols)?;
        f.debug_list()
            .entries(self.data.chunks(self.cols.max(1)))
            .finish()
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                op: "from_vec",
                lhs: (rows, cols),
                rhs: (data.len(), 1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension {
                    op: "from_rows",
                    lhs: (rows.len(), cols),
                    rhs: (1, r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Column vector.
    pub fn column(values: &[f64]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
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

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension {
                op: "matmul",
                lhs: self.shape(),
                rhs: rhs.shape(),
            });
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    fn zip_with(&self, rhs: &Matrix, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.shape() != rhs.shape() {
            return Err(Error::Dimension {
                op,
                lhs: self.shape(),
                rhs: rhs.shape(),
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    /// Hadamard product.
    pub fn mul(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with(rhs, "mul", |a, b| a * b)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, k: f64) -> Matrix {
        self.map(|v| v * k)
    }

    pub fn sigmoid(&self) -> Matrix {
        self.map(sigmoid)
    }

    pub fn tanh(&self) -> Matrix {
        self.map(f64::tanh)
    }

    /// Inverted-dropout mask: each entry is 0 with probability `p`, else `1/(1-p)`.
    pub fn dropout_mask<R: Rng + ?Sized>(rows: usize, cols: usize, p: f64, rng: &mut R) -> Result<Matrix> {
        let mut mask = Matrix::zeros(rows, cols);
        fill_dropout_mask(&mut mask.data, p, rng)?;
        Ok(mask)
    }

    pub fn apply_mask(&self, mask: &Matrix) -> Result<Matrix> {
        self.zip_with(mask, "dropout_mask_apply", |a, m| a * m)
    }

    /// Samples a fresh inverted-dropout mask and applies it.
    pub fn dropout<R: Rng + ?Sized>(&self, p: f64, rng: &mut R) -> Result<Matrix> {
        let mask = Matrix::dropout_mask(self.rows, self.cols, p, rng)?;
        self.apply_mask(&mask)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn fill_dropout_mask<R: Rng + ?Sized>(mask: &mut [f64], p: f64, rng: &mut R) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::contract(format!(
            "dropout probability must lie in [0, 1), got {p}"
        )));
    }
    if p == 0.0 {
        mask.iter_mut().for_each(|m| *m = 1.0);
        return Ok(());
    }
    let keep = 1.0 / (1.0 - p);
    for m in mask.iter_mut() {
        *m = if rng.gen::<f64>() < p { 0.0 } else { keep };
    }
    Ok(())
}

// Hot-path kernels used by the recurrent layers. Shapes are checked by the
// callers once per sequence rather than per step.

/// `out += w · x` for row-major `w` of shape `(out.len(), x.len())`.
#[inline]
pub(crate) fn gemv_acc(w: &[f64], x: &[f64], out: &mut [f64]) {
    let n = x.len();
    debug_assert_eq!(w.len(), out.len() * n);
    for (o, row) in out.iter_mut().zip(w.chunks_exact(n)) {
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(x) {
            acc += a * b;
        }
        *o += acc;
    }
}

/// `out += wᵀ · d` for row-major `w` of shape `(d.len(), out.len())`.
#[inline]
pub(crate) fn gemv_t_acc(w: &[f64], d: &[f64], out: &mut [f64]) {
    let n = out.len();
    debug_assert_eq!(w.len(), d.len() * n);
    for (&dv, row) in d.iter().zip(w.chunks_exact(n)) {
        if dv == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(row) {
            *o += dv * a;
        }
    }
}

/// `g += d ⊗ x` for row-major `g` of shape `(d.len(), x.len())`.
#[inline]
pub(crate) fn outer_acc(d: &[f64], x: &[f64], g: &mut [f64]) {
    let n = x.len();
    debug_assert_eq!(g.len(), d.len() * n);
    for (&dv, row) in d.iter().zip(g.chunks_exact_mut(n)) {
        if dv == 0.0 {
            continue;
        }
        for (o, b) in row.iter_mut().zip(x) {
            *o += dv * b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn identity_product_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random(3, 5, &mut rng);
        assert_eq!(Matrix::identity(3).matmul(&m).unwrap(), m);
    }

    #[test]
    fn zero_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random(3, 4, &mut rng);
        assert_eq!(Matrix::zeros(2, 3).matmul(&m).unwrap(), Matrix::zeros(2, 4));
    }

    #[test]
    fn hand_computed_product() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let b = Matrix::column(&[5.0, 6.0]);
        assert_eq!(a.matmul(&b).unwrap(), Matrix::column(&[17.0, 39.0]));
    }

    #[test]
    fn shape_mismatch_names_both_shapes() {
        let err = Matrix::zeros(2, 3).matmul(&Matrix::zeros(2, 3)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(2, 3)"), "{msg}");
        assert!(matches!(err, Error::Dimension { lhs: (2, 3), rhs: (2, 3), .. }));
        assert!(Matrix::zeros(2, 2).add(&Matrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn activations_at_zero() {
        let z = Matrix::zeros(2, 3);
        assert!(z.sigmoid().as_slice().iter().all(|&v| v == 0.5));
        assert!(z.tanh().as_slice().iter().all(|&v| v == 0.0));
        assert!(sigmoid(-800.0).is_finite() && sigmoid(800.0) == 1.0);
    }

    #[test]
    fn dropout_half_on_ones() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ones = Matrix::filled(1, 1000, 1.0);
        let out = ones.dropout(0.5, &mut rng).unwrap();
        let mean = out.sum() / 1000.0;
        assert!((mean - 1.0).abs() <= 0.15, "mean {mean}");
        assert!(out.as_slice().iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn dropout_rejects_bad_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(Matrix::zeros(1, 1).dropout(1.0, &mut rng).is_err());
        assert!(Matrix::zeros(1, 1).dropout(-0.1, &mut rng).is_err());
    }

    #[test]
    fn kernels_match_matmul() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = random(6, 4, &mut rng);
        let x = random(4, 1, &mut rng);
        let mut out = vec![0.0; 6];
        gemv_acc(w.as_slice(), x.as_slice(), &mut out);
        let expect = w.matmul(&x).unwrap();
        for (a, b) in out.iter().zip(expect.as_slice()) {
            assert!((a - b).abs() < 1e-14);
        }

        let d = random(6, 1, &mut rng);
        let mut back = vec![0.0; 4];
        gemv_t_acc(w.as_slice(), d.as_slice(), &mut back);
        let expect = w.transpose().matmul(&d).unwrap();
        for (a, b) in back.iter().zip(expect.as_slice()) {
            assert!((a - b).abs() < 1e-14);
        }

        let mut g = vec![0.0; 24];
        outer_acc(d.as_slice(), x.as_slice(), &mut g);
        let expect = d.matmul(&x.transpose()).unwrap();
        assert_eq!(g, expect.into_vec());
    }

    proptest! {
        #[test]
        fn matmul_is_associative(seed in any::<u64>(), n in 1usize..6, k in 1usize..6, m in 1usize..6, p in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random(n, k, &mut rng);
            let b = random(k, m, &mut rng);
            let c = random(m, p, &mut rng);
            let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
            let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
            for (x, y) in left.as_slice().iter().zip(right.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0));
            }
        }

        #[test]
        fn zero_dropout_is_identity(seed in any::<u64>(), len in 1usize..64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random(1, len, &mut rng);
            prop_assert_eq!(x.dropout(0.0, &mut rng).unwrap(), x);
        }
    }
}
