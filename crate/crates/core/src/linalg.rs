//! Cyclic Jacobi eigendecomposition of real symmetric matrices.
//!
//! Used for 3×3 inertia tensors and for trajectory covariance matrices
//! (3N×3N, N = 39 for the Posner cluster). The cyclic sweep order is fixed,
//! so results are bit-reproducible.

use nalgebra::DMatrix;

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
/// Column `k` of `vectors` belongs to `values[k]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

const MAX_SWEEPS: usize = 100;

/// Diagonalizes `matrix` (only symmetry is assumed; the lower triangle is read
/// as the mirror of the upper one after symmetrization).
pub fn jacobi_eigen(matrix: &DMatrix<f64>) -> SymmetricEigen {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "jacobi_eigen needs a square matrix");
    let mut a = (matrix + matrix.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);

    let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
                .map(|(p, q)| a[(p, q)] * a[(p, q)])
                .sum();
            if off.sqrt() <= f64::EPSILON * scale * 1e-2 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    SymmetricEigen { values, vectors }
}

// One Jacobi rotation annihilating a[p][q].
fn rotate(a: &mut DMatrix<f64>, v: &mut DMatrix<f64>, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);

    a[(p, p)] = app - t * apq;
    a[(q, q)] = aqq + t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    let n = a.nrows();
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        let new_rp = arp - s * (arq + tau * arp);
        let new_rq = arq + s * (arp - tau * arq);
        a[(r, p)] = new_rp;
        a[(p, r)] = new_rp;
        a[(r, q)] = new_rq;
        a[(q, r)] = new_rq;
    }
    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = vrp - s * (vrq + tau * vrp);
        v[(r, q)] = vrq + s * (vrp - tau * vrq);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &m + m.transpose()
    }

    #[test]
    fn diagonal_matrix_sorted() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 3.0, 2.0]));
        let e = jacobi_eigen(&m);
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        assert_eq!(e.vectors[(1, 0)].abs(), 1.0);
    }

    #[test]
    fn reconstructs_random_matrices() {
        for (n, seed) in [(3, 1), (7, 2), (30, 3)] {
            let m = random_symmetric(n, seed);
            let e = jacobi_eigen(&m);
            let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone()));
            let back = &e.vectors * d * e.vectors.transpose();
            assert!((back - &m).amax() < 1e-10);
            let gram = e.vectors.transpose() * &e.vectors;
            assert!((gram - DMatrix::identity(n, n)).amax() < 1e-12);
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn agrees_with_nalgebra() {
        let m = random_symmetric(12, 9);
        let ours = jacobi_eigen(&m);
        let mut theirs: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        theirs.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in ours.values.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_matrix() {
        let e = jacobi_eigen(&DMatrix::zeros(4, 4));
        assert!(e.values.iter().all(|&v| v == 0.0));
    }
}
