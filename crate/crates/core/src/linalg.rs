//! Small dense helpers: column-major scalarization and a cyclic Jacobi
//! eigensolver for the spectral atoms.

use ndarray::Array2;

/// Flatten in column-major order, the scalarization used for solver columns.
pub fn vec_cm(a: &Array2<f64>) -> Vec<f64> {
    let (r, c) = a.dim();
    let mut out = Vec::with_capacity(r * c);
    for j in 0..c {
        for i in 0..r {
            out.push(a[(i, j)]);
        }
    }
    out
}

/// Rebuild a matrix from a column-major slice.
pub fn from_vec_cm(v: &[f64], rows: usize, cols: usize) -> Array2<f64> {
    assert_eq!(v.len(), rows * cols);
    Array2::from_shape_fn((rows, cols), |(i, j)| v[j * rows + i])
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, sorted
/// descending. Converges to machine precision for the small matrices the
/// spectral atoms see.
pub fn sym_eigenvalues(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eigenvalues expects a square matrix");
    let mut m = a.clone();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() < 1e-15 * (1.0 + m.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    eigs
}

/// Singular values of a rectangular matrix, descending: square roots of the
/// eigenvalues of the smaller Gram matrix.
pub fn singular_values(a: &Array2<f64>) -> Vec<f64> {
    let gram = if a.nrows() <= a.ncols() { a.dot(&a.t()) } else { a.t().dot(a) };
    sym_eigenvalues(&gram).into_iter().map(|l| l.max(0.0).sqrt()).collect()
}
