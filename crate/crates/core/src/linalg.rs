//! Small dense complex-matrix helpers shared by the other modules.

use nalgebra::DMatrix;
pub use num_complex::Complex64 as C64;
use rand::Rng;

pub type CMatrix = DMatrix<C64>;

pub fn zeros(dim: usize) -> CMatrix {
    CMatrix::zeros(dim, dim)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

pub fn real_trace(m: &CMatrix) -> f64 {
    m.trace().re
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest `|m - m†|` entry together with its position.
pub fn hermiticity_deviation(m: &CMatrix) -> (f64, (usize, usize)) {
    let mut worst = (0.0, (0, 0));
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > worst.0 {
                worst = (d, (i, j));
            }
        }
    }
    worst
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    herm.symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `|i><j|` in a `dim`-dimensional space.
pub fn matrix_unit(dim: usize, row: usize, col: usize) -> CMatrix {
    let mut m = zeros(dim);
    m[(row, col)] = C64::new(1.0, 0.0);
    m
}

/// Rank-1 projector onto the normalised direction of `v`.
pub fn outer_normalized(v: &[C64]) -> CMatrix {
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let n = v.len();
    CMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj() / (norm * norm))
}

pub fn random_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// Random unitary from the QR factor of a random complex matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    random_matrix(dim, rng).qr().q()
}

/// Random full-rank density matrix with unit trace.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let a = random_matrix(dim, rng);
    let m = &a * a.adjoint();
    let tr = real_trace(&m);
    m / C64::new(tr, 0.0)
}

/// Random pure state `|psi><psi|`.
pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    outer_normalized(&v)
}

/// `count` mutually orthogonal rank-1 projectors in a random basis.
pub fn random_orthogonal_projectors<R: Rng + ?Sized>(
    dim: usize,
    count: usize,
    rng: &mut R,
) -> Vec<CMatrix> {
    assert!(count <= dim, "cannot fit {count} orthogonal projectors in dimension {dim}");
    let u = random_unitary(dim, rng);
    (0..count)
        .map(|k| {
            let col: Vec<C64> = u.column(k).iter().cloned().collect();
            outer_normalized(&col)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_projectors_are_orthogonal_and_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ps = random_orthogonal_projectors(4, 3, &mut rng);
        for (i, p) in ps.iter().enumerate() {
            assert!(max_abs(&(p * p - p)) < 1e-12);
            assert!((real_trace(p) - 1.0).abs() < 1e-12);
            for q in &ps[i + 1..] {
                assert!(max_abs(&(p * q)) < 1e-12);
            }
        }
    }

    #[test]
    fn min_eigenvalue_of_diagonal() {
        let mut m = zeros(3);
        m[(0, 0)] = C64::new(0.5, 0.0);
        m[(1, 1)] = C64::new(-0.25, 0.0);
        m[(2, 2)] = C64::new(0.75, 0.0);
        assert!((min_eigenvalue(&m) + 0.25).abs() < 1e-12);
    }

    #[test]
    fn hermiticity_deviation_locates_entry() {
        let mut m = identity(2);
        m[(0, 1)] = C64::new(0.3, 0.0);
        let (dev, at) = hermiticity_deviation(&m);
        assert!((dev - 0.3).abs() < 1e-15);
        assert!(at == (0, 1) || at == (1, 0));
    }
}
