// SPDX-License-Identifier: Apache-2.0

//! Small dense symmetric linear algebra: a cyclic Jacobi eigensolver,
//! spectral functions, block extraction and inversion.

use nalgebra::DMatrix;

use crate::{Error, Result};

pub type Matrix = DMatrix<f64>;

const JACOBI_REL_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

/// A real symmetric matrix; symmetry holds bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Accepts `m` if it is symmetric up to rounding (relative 1e-12) and
    /// stores the exactly symmetrized average; rejects anything else.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidInput(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entry".into()));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let n = m.nrows();
        let mut s = m.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if (a - b).abs() > 1e-12 * scale {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
                let avg = 0.5 * (a + b);
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
        }
        Ok(SymMatrix(s))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

/// `A = Q diag(ω) Qᵀ` with ascending eigenvalues and orthonormal columns.
#[derive(Clone, Debug)]
pub struct SpectralDecomp {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl SpectralDecomp {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
/// `1e-14·‖A‖_F`.
pub fn eigh(a: &SymMatrix) -> Result<SpectralDecomp> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::InvalidInput("eigh needs n ≥ 1".into()));
    }
    let mut m = a.0.clone();
    let mut v = Matrix::identity(n, n);
    let norm = m.norm();
    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&m);
        if off <= JACOBI_REL_TOL * norm {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence(sweeps));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (m[(p, p)], m[(q, q)]);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s, t);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut vec = v.column(i).clone_owned();
        // fix the sign: largest-magnitude component positive
        let (imax, _) = vec
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bi, bv), (k, x)| if x.abs() > bv { (k, x.abs()) } else { (bi, bv) });
        if vec[imax] < 0.0 {
            vec.neg_mut();
        }
        eigenvectors.set_column(col, &vec);
    }
    Ok(SpectralDecomp {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(m: &Matrix) -> f64 {
    let n = m.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn rotate(m: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64, t: f64) {
    let n = m.nrows();
    let apq = m[(p, q)];
    m[(p, p)] -= t * apq;
    m[(q, q)] += t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for k in 0..n {
        if k != p && k != q {
            let (akp, akq) = (m[(k, p)], m[(k, q)]);
            let new_p = c * akp - s * akq;
            let new_q = s * akp + c * akq;
            m[(k, p)] = new_p;
            m[(p, k)] = new_p;
            m[(k, q)] = new_q;
            m[(q, k)] = new_q;
        }
    }
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// `Q diag(φ(ω)) Qᵀ`.
pub fn spectral_apply(d: &SpectralDecomp, phi: impl Fn(f64) -> f64) -> Result<Matrix> {
    let n = d.dim();
    let vals: Vec<f64> = d.eigenvalues.iter().map(|&w| phi(w)).collect();
    if let Some(w) = vals.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "spectral function at eigenvalue {}",
            d.eigenvalues[w]
        )));
    }
    let q = &d.eigenvectors;
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let s: f64 = (0..n).map(|k| q[(i, k)] * vals[k] * q[(j, k)]).sum();
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    Ok(out)
}

/// Submatrix in the given row and column order.
pub fn block(a: &Matrix, rows: &[usize], cols: &[usize]) -> Result<Matrix> {
    if let Some(&r) = rows.iter().find(|&&r| r >= a.nrows()) {
        return Err(Error::InvalidInput(format!("row index {r} out of range")));
    }
    if let Some(&c) = cols.iter().find(|&&c| c >= a.ncols()) {
        return Err(Error::InvalidInput(format!("column index {c} out of range")));
    }
    Ok(Matrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])]))
}

/// Inverse by LU with partial pivoting.
pub fn inverse(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::InvalidInput("inverse of a non-square matrix".into()));
    }
    if a.nrows() == 0 {
        return Ok(a.clone());
    }
    a.clone()
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular(format!("{}x{} matrix", a.nrows(), a.ncols())))
}

/// Inverse of a symmetric positive definite matrix through its spectrum.
pub fn spd_inverse(a: &SymMatrix) -> Result<Matrix> {
    let d = eigh(a)?;
    if d.eigenvalues[0] <= 0.0 {
        return Err(Error::Singular(format!(
            "smallest eigenvalue {} is not positive",
            d.eigenvalues[0]
        )));
    }
    spectral_apply(&d, |w| 1.0 / w)
}

/// Matrix exponential by Taylor expansion with scaling and squaring.
///
/// Independent of the eigensolver; used as a reference for heat kernels.
pub fn expm_taylor(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm1 * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let b = a * scale;
    let mut term = Matrix::identity(n, n);
    let mut sum = Matrix::identity(n, n);
    for k in 1..=30 {
        term = &term * &b / k as f64;
        sum += &term;
        if term.amax() < 1e-18 * sum.amax() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.gen_range(-2.0..2.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix::new(m).unwrap()
    }

    fn check_decomp(a: &SymMatrix, d: &SpectralDecomp) {
        let n = a.dim();
        let q = &d.eigenvectors;
        let qtq = q.transpose() * q;
        assert!((qtq - Matrix::identity(n, n)).amax() < 1e-12);
        let lam = Matrix::from_diagonal(&nalgebra::DVector::from_vec(d.eigenvalues.clone()));
        let resid = (a.as_matrix() * q - q * lam).amax();
        assert!(resid < 1e-11 * (1.0 + a.as_matrix().amax()), "residual {resid}");
        assert!(d.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn line_graph_spectrum() {
        let a = SymMatrix::new(Matrix::from_row_slice(3, 3, &[1., -1., 0., -1., 2., -1., 0., -1., 1.])).unwrap();
        let d = eigh(&a).unwrap();
        for (got, want) in d.eigenvalues.iter().zip([0.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
        check_decomp(&a, &d);
    }

    #[test]
    fn identity_spectrum() {
        let a = SymMatrix::new(Matrix::identity(4, 4)).unwrap();
        let d = eigh(&a).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0; 4]);
        assert_eq!(d.eigenvectors, Matrix::identity(4, 4));
    }

    #[test]
    fn random_residuals() {
        for seed in 0..5 {
            let a = random_sym(8, seed);
            let d = eigh(&a).unwrap();
            check_decomp(&a, &d);
            for k in 0..8 {
                let v = d.eigenvectors.column(k);
                let r = (a.as_matrix() * v - v * d.eigenvalues[k]).norm();
                assert!(r < 1e-11);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let m = Matrix::from_row_slice(2, 2, &[1., 2., 3., 4.]);
        assert!(SymMatrix::new(m).is_err());
        let m = Matrix::from_row_slice(2, 2, &[1., f64::NAN, f64::NAN, 4.]);
        assert!(SymMatrix::new(m).is_err());
        assert!(SymMatrix::new(Matrix::zeros(2, 3)).is_err());
        let z = SymMatrix::new(Matrix::zeros(0, 0)).unwrap();
        assert!(eigh(&z).is_err());
    }

    #[test]
    fn spectral_functions() {
        let a = random_sym(6, 11);
        let d = eigh(&a).unwrap();
        let back = spectral_apply(&d, |w| w).unwrap();
        assert!((back - a.as_matrix()).amax() < 1e-11);
        let inv = spectral_apply(&d, |w| 1.0 / (w + 10.0)).unwrap();
        let direct = inverse(&(a.as_matrix() + Matrix::identity(6, 6) * 10.0)).unwrap();
        assert!((inv - direct).amax() < 1e-13);
        assert!(spectral_apply(&d, |_| f64::INFINITY).is_err());
    }

    #[test]
    fn line_graph_green_and_block() {
        let lap = Matrix::from_row_slice(3, 3, &[1., -1., 0., -1., 2., -1., 0., -1., 1.]);
        let m2 = 1.0;
        let shifted = &lap + Matrix::identity(3, 3) * m2;
        let d = eigh(&SymMatrix::new(lap.clone()).unwrap()).unwrap();
        let g = spectral_apply(&d, |w| 1.0 / (w + m2)).unwrap();
        assert!((&g - inverse(&shifted).unwrap()).amax() < 1e-14);
        let mid = block(&shifted, &[1], &[1]).unwrap();
        assert_eq!(mid[(0, 0)], 2.0 + m2);
        assert_eq!(block(&shifted, &[0, 1, 2], &[0, 1, 2]).unwrap(), shifted);
        assert!(block(&shifted, &[3], &[0]).is_err());
        let sub = block(&shifted, &[2, 0], &[1]).unwrap();
        assert_eq!(sub[(0, 0)], shifted[(2, 1)]);
        assert_eq!(sub[(1, 0)], shifted[(0, 1)]);
    }

    #[test]
    fn singular_inverse_rejected() {
        let lap = Matrix::from_row_slice(2, 2, &[1., -1., -1., 1.]);
        assert!(inverse(&lap).is_err());
        assert!(spd_inverse(&SymMatrix::new(lap).unwrap()).is_err());
    }

    #[test]
    fn taylor_exponential_matches_spectral() {
        let a = random_sym(7, 3);
        let d = eigh(&a).unwrap();
        for t in [0.1, 1.0, 5.0] {
            let e = spectral_apply(&d, |w| (-t * w).exp()).unwrap();
            let tay = expm_taylor(&(a.as_matrix() * -t));
            assert!((e - &tay).amax() < 1e-10 * (1.0 + tay.amax()));
        }
    }

    proptest! {
        #[test]
        fn semigroup_and_trace(seed in 0u64..1000, t1 in 0.05..2.0f64, t2 in 0.05..2.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..9);
            let a = random_sym(n, seed);
            let d = eigh(&a).unwrap();
            let e1 = spectral_apply(&d, |w| (-t1 * w).exp()).unwrap();
            let e2 = spectral_apply(&d, |w| (-t2 * w).exp()).unwrap();
            let e12 = spectral_apply(&d, |w| (-(t1 + t2) * w).exp()).unwrap();
            prop_assert!((&e1 * &e2 - &e12).amax() < 1e-10 * (1.0 + e12.amax()));
            let tr: f64 = d.eigenvalues.iter().map(|w| (-t1 * w).exp()).sum();
            prop_assert!((e1.trace() - tr).abs() < 1e-11 * (1.0 + tr.abs()));
        }
    }
}
