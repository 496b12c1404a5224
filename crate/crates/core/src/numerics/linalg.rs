//! Hermitian solve (Cholesky) and Hermitian eigendecomposition (cyclic
//! complex Jacobi). These are the only factorizations the estimators need.

use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Solves `A X = B` for Hermitian positive-definite `A` via Cholesky.
pub fn hermitian_solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "solve {}x{} against {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let l = cholesky(a)?;
    let mut x = b.clone();
    for col in 0..b.cols() {
        // forward: L y = b
        for i in 0..n {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)].re;
        }
        // backward: Lᴴ x = y
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)].re;
        }
    }
    Ok(x)
}

/// Lower Cholesky factor `L` with `A = L Lᴴ`; only the lower triangle of `A` is read.
fn cholesky(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Eigen-decomposition `A = U Λ Uᴴ` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    /// Reassembles `U f(Λ) Uᴴ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let u = &self.vectors;
        let fv: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        ComplexMatrix::from_fn(n, n, |r, c| {
            (0..n).map(|k| u[(r, k)] * fv[k] * u[(c, k)].conj()).sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|v| v)
    }
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Each rotation first removes the phase of the pivot `a_pq` and then applies a
/// real Givens rotation; the loop ends when the off-diagonal mass drops below
/// `1e-15 · ‖A‖_F`.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEig> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eig of non-square {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut m = a.clone();
    // symmetrize the input so later updates can assume exact Hermitian structure
    for r in 0..n {
        m[(r, r)] = Complex64::new(m[(r, r)].re, 0.0);
        for c in r + 1..n {
            let v = 0.5 * (m[(r, c)] + m[(c, r)].conj());
            m[(r, c)] = v;
            m[(c, r)] = v.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm();
    let tol = 1e-15 * scale.max(f64::MIN_POSITIVE);

    let mut converged = n <= 1;
    for _sweep in 0..MAX_SWEEPS {
        if off_diagonal_norm(&m) <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&m) > tol {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].re.total_cmp(&m[(i, i)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEig { values, vectors })
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += m[(r, c)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let b = apq.norm();
    if b == 0.0 {
        return;
    }
    let n = m.rows();
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let phase = (apq / b).conj(); // e^{-iφ}
    let theta = 0.5 * (2.0 * b).atan2(aqq - app);
    let (s, c) = theta.sin_cos();

    // J = [[c, s], [-s·e^{-iφ}, c·e^{-iφ}]] on (p, q)
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = -phase * s;
    let jqq = phase * c;

    // A ← A J (columns)
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * jpp + akq * jqp;
        m[(k, q)] = akp * jpq + akq * jqq;
    }
    // A ← Jᴴ A (rows)
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        m[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
        let mut rng = RngStream::new(seed, 0);
        let v = rng.complex_gaussian(rows * cols, 1.0);
        ComplexMatrix::from_vec(rows, cols, v).unwrap()
    }

    fn random_hermitian_pd(n: usize, seed: u64) -> ComplexMatrix {
        let g = random_matrix(n, n, seed);
        let mut a = g.matmul(&g.adjoint()).unwrap();
        a.add_diag(0.5);
        a
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let b = random_matrix(3, 2, 1);
        let x = hermitian_solve(&ComplexMatrix::identity(3), &b).unwrap();
        assert!(x.max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn solve_diagonal() {
        let a = ComplexMatrix::from_real_diag(&[2.0, 4.0]);
        let x = hermitian_solve(&a, &ComplexMatrix::identity(2)).unwrap();
        let want = ComplexMatrix::from_real_diag(&[0.5, 0.25]);
        assert!(x.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn solve_random_pd_residual() {
        let a = random_hermitian_pd(8, 7);
        let b = random_matrix(8, 3, 8);
        let x = hermitian_solve(&a, &b).unwrap();
        let r = a.matmul(&x).unwrap().sub(&b).unwrap();
        assert!(r.frobenius_norm() / b.frobenius_norm() < 1e-10);
    }

    #[test]
    fn solve_rejects_indefinite() {
        let a = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
        let err = hermitian_solve(&a, &ComplexMatrix::identity(2)).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { pivot: 1, .. }));
    }

    #[test]
    fn eig_identity() {
        let e = hermitian_eig(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
    }

    #[test]
    fn eig_two_by_two_closed_form() {
        let a = ComplexMatrix::from_vec(2, 2, vec![c(1.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(1.0, 0.0)])
            .unwrap();
        let e = hermitian_eig(&a).unwrap();
        assert!((e.values[0] - 1.5).abs() < 1e-14);
        assert!((e.values[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn eig_random_reconstructs() {
        let g = random_matrix(6, 6, 3);
        let a = g.add(&g.adjoint()).unwrap();
        let e = hermitian_eig(&a).unwrap();
        let back = e.reconstruct();
        assert!(back.max_abs_diff(&a) < 1e-12 * a.max_abs());
        // AU = UΛ
        let au = a.matmul(&e.vectors).unwrap();
        let ul = e
            .vectors
            .matmul(&ComplexMatrix::from_real_diag(&e.values))
            .unwrap();
        assert!(au.sub(&ul).unwrap().frobenius_norm() <= 1e-8 * a.frobenius_norm());
        // unitary
        let uhu = e.vectors.adjoint().matmul(&e.vectors).unwrap();
        assert!(uhu.max_abs_diff(&ComplexMatrix::identity(6)) < 1e-8);
        // descending
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let tr: f64 = e.values.iter().sum();
        assert!((tr - a.trace().re).abs() < 1e-8 * a.trace().re.abs().max(1.0));
    }

    #[test]
    fn eig_complex_pair() {
        // [[2, i], [-i, 2]] has eigenvalues 3 and 1
        let a = ComplexMatrix::from_vec(2, 2, vec![c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)])
            .unwrap();
        let e = hermitian_eig(&a).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn solve_round_trip(seed in any::<u64>(), n in 1usize..10, k in 1usize..4) {
                let a = random_hermitian_pd(n, seed);
                let b = random_matrix(n, k, seed ^ 0xabc);
                let x = hermitian_solve(&a, &b).unwrap();
                let r = a.matmul(&x).unwrap().sub(&b).unwrap();
                prop_assert!(r.frobenius_norm() / b.frobenius_norm() < 1e-8);
            }

            #[test]
            fn eig_sum_is_trace(seed in any::<u64>(), n in 1usize..12) {
                let g = random_matrix(n, n, seed);
                let a = g.add(&g.adjoint()).unwrap();
                let e = hermitian_eig(&a).unwrap();
                let sum: f64 = e.values.iter().sum();
                let tr = a.trace().re;
                prop_assert!((sum - tr).abs() <= 1e-8 * a.frobenius_norm().max(1e-300));
            }
        }
    }
}
