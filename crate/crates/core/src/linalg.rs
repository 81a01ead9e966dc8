//! Thin helpers over `faer` dense complex matrices.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = Mat<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub fn identity(dim: usize) -> CMat {
    CMat::from_fn(dim, dim, |i, j| if i == j { ONE } else { ZERO })
}

pub fn zeros(dim: usize) -> CMat {
    CMat::zeros(dim, dim)
}

pub fn from_real_diag(diag: &[f64]) -> CMat {
    let n = diag.len();
    CMat::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(diag[i], 0.0)
        } else {
            ZERO
        }
    })
}

/// Builds a square matrix from row-major entries.
pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<CMat> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Structural(format!(
            "matrix rows must all have length {n}"
        )));
    }
    Ok(CMat::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn is_square(m: MatRef<'_, Complex64>) -> bool {
    m.nrows() == m.ncols()
}

/// Max-entry deviation `max |A - A^†|`.
pub fn hermitian_deviation(m: MatRef<'_, Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

pub fn max_abs_diff(a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

pub fn trace(m: MatRef<'_, Complex64>) -> Complex64 {
    (0..m.nrows()).fold(ZERO, |acc, i| acc + m[(i, i)])
}

/// `Tr(A B)` without forming the product.
pub fn trace_of_product(a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn kron(a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) -> CMat {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    CMat::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Eigenvalues of the Hermitian part `(A + A^†)/2`, ascending.
pub fn hermitian_eigenvalues(m: MatRef<'_, Complex64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    let h = CMat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let vals = h
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("hermitian eigenvalue solver failed: {e:?}")))?;
    Ok(vals)
}

/// Returns `true` if every off-diagonal entry is exactly zero.
pub fn is_diagonal(m: MatRef<'_, Complex64>) -> bool {
    let n = m.nrows();
    (0..n).all(|j| (0..n).all(|i| i == j || m[(i, j)] == ZERO))
}

/// A unitary `exp(i H t)` for Hermitian `H`, kept diagonal when `H` is.
#[derive(Debug, Clone)]
pub enum Propagator {
    Diagonal(Vec<Complex64>),
    Dense(CMat),
}

impl Propagator {
    pub fn dim(&self) -> usize {
        match self {
            Propagator::Diagonal(d) => d.len(),
            Propagator::Dense(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> CMat {
        match self {
            Propagator::Diagonal(d) => {
                let n = d.len();
                CMat::from_fn(n, n, |i, j| if i == j { d[i] } else { ZERO })
            }
            Propagator::Dense(m) => m.clone(),
        }
    }
}

/// `exp(i H t)` through the Hermitian eigendecomposition `H = W Λ W^†`.
pub fn hermitian_propagator(h: MatRef<'_, Complex64>, t: f64) -> Result<Propagator> {
    if !t.is_finite() {
        return Err(Error::Precondition(format!("evolution time must be finite, got {t}")));
    }
    let n = h.nrows();
    if is_diagonal(h) {
        return Ok(Propagator::Diagonal(
            (0..n)
                .map(|i| Complex64::new(0.0, h[(i, i)].re * t).exp())
                .collect(),
        ));
    }
    let eig = h.self_adjoint_eigen(Side::Lower).map_err(|e| {
        Error::Numerical(format!(
            "eigendecomposition of a {n}x{n} Hermitian generator did not converge: {e:?}"
        ))
    })?;
    let w = eig.U();
    let lambda = eig.S().column_vector();
    let scaled = CMat::from_fn(n, n, |i, k| {
        w[(i, k)] * Complex64::new(0.0, lambda[k].re * t).exp()
    });
    Ok(Propagator::Dense(&scaled * w.adjoint()))
}

/// `P^† X Q` for propagators `P`, `Q`.
pub fn sandwich(p: &Propagator, x: MatRef<'_, Complex64>, q: &Propagator) -> CMat {
    let xq = match q {
        Propagator::Diagonal(d) => {
            CMat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * d[j])
        }
        Propagator::Dense(m) => x * m.as_ref(),
    };
    match p {
        Propagator::Diagonal(d) => {
            CMat::from_fn(xq.nrows(), xq.ncols(), |i, j| d[i].conj() * xq[(i, j)])
        }
        Propagator::Dense(m) => m.adjoint() * xq.as_ref(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_generator_gives_phases() {
        let h = from_real_diag(&[1.0, -2.0]);
        let u = hermitian_propagator(h.as_ref(), 0.5).unwrap();
        match u {
            Propagator::Diagonal(d) => {
                assert!((d[0] - Complex64::new(0.0, 0.5).exp()).norm() < 1e-15);
                assert!((d[1] - Complex64::new(0.0, -1.0).exp()).norm() < 1e-15);
            }
            Propagator::Dense(_) => panic!("expected diagonal propagator"),
        }
    }

    #[test]
    fn pauli_x_rotation() {
        let sx = from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap();
        let u = hermitian_propagator(sx.as_ref(), std::f64::consts::FRAC_PI_2)
            .unwrap()
            .to_dense();
        // exp(i π/2 σx) = i σx
        let expected = from_rows(&[
            vec![ZERO, Complex64::new(0.0, 1.0)],
            vec![Complex64::new(0.0, 1.0), ZERO],
        ])
        .unwrap();
        assert!(max_abs_diff(u.as_ref(), expected.as_ref()) < 1e-14);
    }

    #[test]
    fn kron_shapes_and_entries() {
        let a = from_real_diag(&[1.0, 2.0]);
        let b = from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap();
        let k = kron(a.as_ref(), b.as_ref());
        assert_eq!(k.nrows(), 4);
        assert_eq!(k[(2, 3)], Complex64::new(2.0, 0.0));
        assert_eq!(k[(0, 2)], ZERO);
    }
}
