//! Small dense kernels for minibatch network passes. All matrices are
//! row-major slices.

use crate::scalar::Scalar;

const MR: usize = 4;
const NR: usize = 4;

/// `c += a · b` with `a` of shape `m × k`, `b` of shape `k × n`.
pub(crate) fn gemm_acc<T: Scalar>(m: usize, k: usize, n: usize, a: &[T], b: &[T], c: &mut [T]) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let m_main = m - m % MR;
    let n_main = n - n % NR;
    for i0 in (0..m_main).step_by(MR) {
        let (a0, rest) = a[i0 * k..].split_at(k);
        let (a1, rest) = rest.split_at(k);
        let (a2, rest) = rest.split_at(k);
        let a3 = &rest[..k];
        for j0 in (0..n_main).step_by(NR) {
            // register block: MR rows of c times NR columns
            let mut acc = [[T::zero(); NR]; MR];
            let panel = b.chunks_exact(n).take(k).map(|row| &row[j0..j0 + NR]);
            for ((((&v0, &v1), &v2), &v3), brow) in a0.iter().zip(a1).zip(a2).zip(a3).zip(panel) {
                let brow: &[T; NR] = brow.try_into().expect("NR columns");
                for q in 0..NR {
                    acc[0][q] += v0 * brow[q];
                    acc[1][q] += v1 * brow[q];
                    acc[2][q] += v2 * brow[q];
                    acc[3][q] += v3 * brow[q];
                }
            }
            for (r, acc_row) in acc.iter().enumerate() {
                let crow = &mut c[(i0 + r) * n + j0..(i0 + r) * n + j0 + NR];
                for (cv, av) in crow.iter_mut().zip(acc_row) {
                    *cv += *av;
                }
            }
        }
        if n_main < n {
            for (r, row) in [a0, a1, a2, a3].iter().enumerate() {
                axpy_rows(row, b, n, n_main, &mut c[(i0 + r) * n..(i0 + r + 1) * n]);
            }
        }
    }
    for i in m_main..m {
        axpy_rows(&a[i * k..(i + 1) * k], b, n, 0, &mut c[i * n..(i + 1) * n]);
    }
}

/// `crow[from..] += Σ_p arow[p] · b[p][from..]`.
fn axpy_rows<T: Scalar>(arow: &[T], b: &[T], n: usize, from: usize, crow: &mut [T]) {
    for (p, &av) in arow.iter().enumerate() {
        let brow = &b[p * n + from..(p + 1) * n];
        for (cv, bv) in crow[from..].iter_mut().zip(brow) {
            *cv += av * *bv;
        }
    }
}

/// Writes the `cols × rows` transpose of `src` (`rows × cols`) into `dst`.
pub(crate) fn transpose<T: Scalar>(rows: usize, cols: usize, src: &[T], dst: &mut Vec<T>) {
    dst.clear();
    dst.resize(rows * cols, T::zero());
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive(m: usize, k: usize, n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                c[i * n + j] = (0..k).map(|p| a[i * k + p] * b[p * n + j]).sum();
            }
        }
        c
    }

    #[test]
    fn gemm_matches_naive_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (m, k, n) in [
            (1, 1, 1),
            (4, 3, 4),
            (5, 7, 9),
            (16, 64, 64),
            (16, 5, 1),
            (3, 2, 13),
        ] {
            let a: Vec<f64> = (0..m * k).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..k * n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut c = vec![0.5; m * n];
            gemm_acc(m, k, n, &a, &b, &mut c);
            for (got, want) in c.iter().zip(naive(m, k, n, &a, &b)) {
                assert!((got - 0.5 - want).abs() < 1e-12, "{m}x{k}x{n}");
            }
        }
    }

    #[test]
    fn transpose_small() {
        let mut t = Vec::new();
        transpose(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &mut t);
        assert_eq!(t, vec![1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
    }
}
