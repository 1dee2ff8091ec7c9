//! Multiport interferometer matrices, mutually unbiased bases for prime
//! dimension, and the unitary qudit observables q̂_k(m) built on them.
//!
//! Convention: the columns of a `Multiport` matrix are the measurement-basis
//! vectors, i.e. `U(m)` maps the computational basis onto basis `m` and the
//! creation operator of output `j` is `x̂†_j(m) = Σ_l ⟨l|j(m)⟩ x̂†_l` with
//! `⟨l|j(m)⟩ = U(m)[l][j]`. Global phases of `U(m)` never matter downstream:
//! every observable built here is a conjugation `U f U†`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const UNITARITY_TOL: f64 = 1e-12;

/// d-th root of unity exp(2πi/d).
pub fn omega(d: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / d as f64)
}

/// exp(2πi k/d), evaluated with an exact-angle reduction of k mod d.
pub fn omega_pow(d: usize, k: i64) -> Complex64 {
    let k = k.rem_euclid(d as i64);
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64)
}

fn is_prime(d: usize) -> bool {
    if d < 2 {
        return false;
    }
    let mut i = 2;
    while i * i <= d {
        if d % i == 0 {
            return false;
        }
        i += 1;
    }
    true
}

/// A d-input d-output interferometer: unitary basis change on one party's modes.
#[derive(Clone, Debug)]
pub struct Multiport {
    dim: usize,
    matrix: CMatrix,
    /// Basis index m ∈ {0,…,d} when the multiport belongs to a MUB family.
    label: Option<usize>,
}

impl Multiport {
    pub fn new(matrix: CMatrix, label: Option<usize>) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim {
            return Err(Error::Contract("multiport matrix must be square".into()));
        }
        let dev = unitarity_deviation(&matrix);
        if dev > UNITARITY_TOL {
            return Err(Error::Contract(format!(
                "multiport matrix is not unitary (deviation {dev:.3e})"
            )));
        }
        Ok(Multiport { dim, matrix, label })
    }

    pub fn identity(dim: usize) -> Self {
        Multiport {
            dim,
            matrix: CMatrix::identity(dim, dim),
            label: Some(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn label(&self) -> Option<usize> {
        self.label
    }

    /// Basis vector j in computational components (column j).
    pub fn basis_vector(&self, j: usize) -> nalgebra::DVector<Complex64> {
        self.matrix.column(j).into_owned()
    }
}

pub fn unitarity_deviation(m: &CMatrix) -> f64 {
    let d = m.nrows();
    let prod = m.adjoint() * m;
    let mut dev: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let expect = if i == j { Complex64::ONE } else { Complex64::ZERO };
            dev = dev.max((prod[(i, j)] - expect).norm());
        }
    }
    dev
}

/// D=2 basis at Bloch angle θ in the z–x plane: eigenvectors of
/// cosθ·σ₃ + sinθ·σ₁, the +1 eigenvector first. θ=0 is the computational basis.
pub fn bloch_zx_basis(theta: f64) -> Multiport {
    let (s, c) = (theta / 2.0).sin_cos();
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 0)] = Complex64::new(c, 0.0);
    m[(1, 0)] = Complex64::new(s, 0.0);
    m[(0, 1)] = Complex64::new(-s, 0.0);
    m[(1, 1)] = Complex64::new(c, 0.0);
    Multiport {
        dim: 2,
        matrix: m,
        label: None,
    }
}

/// The full set of d+1 mutually unbiased bases for d = 2 or an odd prime.
///
/// m = 0 is the computational basis. For d = 2 the explicit polarization
/// triple {H/V, ±45°, R/L}; for an odd prime the quadratic-phase construction
/// ⟨l|j(m)⟩ = ω^{m l² + j l}/√d for m = 1..d. Pairwise unbiasedness is
/// verified at construction.
pub fn mub_family(d: usize) -> Result<Vec<Multiport>> {
    if !(d == 2 || (is_prime(d) && d % 2 == 1)) {
        return Err(Error::UnsupportedDimension(d));
    }
    let mut family = Vec::with_capacity(d + 1);
    family.push(Multiport::identity(d));
    if d == 2 {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // ±45°: eigenvectors of σ₁, +1 first.
        let mut diag = CMatrix::zeros(2, 2);
        diag[(0, 0)] = Complex64::new(r, 0.0);
        diag[(1, 0)] = Complex64::new(r, 0.0);
        diag[(0, 1)] = Complex64::new(r, 0.0);
        diag[(1, 1)] = Complex64::new(-r, 0.0);
        family.push(Multiport::new(diag, Some(1))?);
        // R/L: eigenvectors of σ₂, +1 first.
        let mut circ = CMatrix::zeros(2, 2);
        circ[(0, 0)] = Complex64::new(r, 0.0);
        circ[(1, 0)] = Complex64::new(0.0, r);
        circ[(0, 1)] = Complex64::new(r, 0.0);
        circ[(1, 1)] = Complex64::new(0.0, -r);
        family.push(Multiport::new(circ, Some(2))?);
    } else {
        let norm = 1.0 / (d as f64).sqrt();
        for m in 1..=d {
            let mut u = CMatrix::zeros(d, d);
            for j in 0..d {
                for l in 0..d {
                    let phase = (m * l * l + j * l) as i64;
                    u[(l, j)] = omega_pow(d, phase) * norm;
                }
            }
            family.push(Multiport::new(u, Some(m))?);
        }
    }
    verify_unbiased(&family)?;
    Ok(family)
}

fn verify_unbiased(family: &[Multiport]) -> Result<()> {
    let d = family[0].dim();
    let target = 1.0 / d as f64;
    for (m, um) in family.iter().enumerate() {
        for (mp, ump) in family.iter().enumerate().skip(m + 1) {
            let overlaps = um.matrix().adjoint() * ump.matrix();
            for i in 0..d {
                for j in 0..d {
                    let dev = (overlaps[(i, j)].norm_sqr() - target).abs();
                    if dev > UNITARITY_TOL {
                        return Err(Error::Contract(format!(
                            "bases {m} and {mp} are not unbiased (|overlap|^2 off by {dev:.3e})"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Unitary qudit observable q̂_k(m) = Σ_{j=1..d} ω^{jk} |j(m)⟩⟨j(m)|,
/// where |j(m)⟩ is column j-1 of U(m).
#[derive(Clone, Debug)]
pub struct QuditObservable {
    pub dim: usize,
    pub k: usize,
    pub m: usize,
    pub matrix: CMatrix,
}

pub fn unitary_observable(
    d: usize,
    k: usize,
    m: usize,
    family: &[Multiport],
) -> Result<QuditObservable> {
    if family.len() != d + 1 || family.iter().any(|f| f.dim() != d) {
        return Err(Error::Contract(format!(
            "family of {} multiports of mixed dimension does not fit d={d}",
            family.len()
        )));
    }
    if k > d - 1 || m > d {
        return Err(Error::IndexOutOfRange(format!(
            "(k={k}, m={m}) outside 0..={} x 0..={d}",
            d - 1
        )));
    }
    let u = family[m].matrix();
    let mut q = CMatrix::zeros(d, d);
    for j in 0..d {
        let col = u.column(j);
        let phase = omega_pow(d, (j as i64 + 1) * k as i64);
        for l in 0..d {
            for lp in 0..d {
                q[(l, lp)] += phase * col[l] * col[lp].conj();
            }
        }
    }
    Ok(QuditObservable {
        dim: d,
        k,
        m,
        matrix: q,
    })
}

/// All q̂_k(m) with k = 1..d-1, m = 0..d, in (m, k) lexicographic order.
pub fn unitary_observable_set(d: usize, family: &[Multiport]) -> Result<Vec<QuditObservable>> {
    let mut out = Vec::with_capacity((d + 1) * (d - 1));
    for m in 0..=d {
        for k in 1..d {
            out.push(unitary_observable(d, k, m, family)?);
        }
    }
    Ok(out)
}

/// Hilbert-Schmidt orthonormality deviation:
/// max over pairs of |Tr q_k†(m) q_k'(m')/d − δ_mm' δ_kk'|.
pub fn hs_orthonormality_deviation(d: usize, family: &[Multiport]) -> Result<f64> {
    let set = unitary_observable_set(d, family)?;
    let mut dev: f64 = 0.0;
    for a in &set {
        for b in &set {
            let tr = (a.matrix.adjoint() * &b.matrix).trace() / d as f64;
            let expect = if a.m == b.m && a.k == b.k {
                Complex64::ONE
            } else {
                Complex64::ZERO
            };
            dev = dev.max((tr - expect).norm());
        }
        // against q_0(0) = identity
        let tr = a.matrix.trace() / d as f64;
        dev = dev.max(tr.norm());
    }
    Ok(dev)
}

/// Completeness of {q_0(0)/√d} ∪ {q_k(m)/√d} in Hilbert-Schmidt space:
/// Σ_{m,k} [q_k(m)]_{ll'} [q_k(m)]*_{nn'} + δ_{ll'} δ_{nn'} = d δ_{ln} δ_{l'n'},
/// the component form of Σ_α B_α ⊗ B̄_α = identity on operators.
///
/// Returns (holds within 1e-12, max deviation).
pub fn operator_basis_completeness_check(d: usize, family: &[Multiport]) -> Result<(bool, f64)> {
    let set = unitary_observable_set(d, family)?;
    let mut dev: f64 = 0.0;
    for l in 0..d {
        for lp in 0..d {
            for n in 0..d {
                for np in 0..d {
                    let mut acc = Complex64::ZERO;
                    for q in &set {
                        acc += q.matrix[(l, lp)] * q.matrix[(n, np)].conj();
                    }
                    if l == lp && n == np {
                        acc += Complex64::ONE;
                    }
                    let expect = if l == n && lp == np {
                        Complex64::new(d as f64, 0.0)
                    } else {
                        Complex64::ZERO
                    };
                    dev = dev.max((acc - expect).norm());
                }
            }
        }
    }
    Ok((dev < 1e-12, dev))
}

/// Entrywise complex conjugate of every multiport in a family.
///
/// The EPR correlations of the symmetric squeezed vacuum pair A-output j of
/// `U(m)` with B-output j of `U*(m)`, so the B station of the MUB conditions
/// uses the conjugated family.
pub fn conjugate_family(family: &[Multiport]) -> Vec<Multiport> {
    family
        .iter()
        .map(|p| Multiport {
            dim: p.dim,
            matrix: p.matrix.map(|x| x.conj()),
            label: p.label,
        })
        .collect()
}

/// Pauli matrices σ₀..σ₃ (σ₀ = identity).
pub fn pauli(j: usize) -> CMatrix {
    let z = Complex64::ZERO;
    let one = Complex64::ONE;
    let i = Complex64::I;
    let entries = match j {
        0 => [one, z, z, one],
        1 => [z, one, one, z],
        2 => [z, -i, i, z],
        3 => [one, z, z, -one],
        _ => panic!("Pauli index {j} out of range"),
    };
    CMatrix::from_row_slice(2, 2, &entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn random_density(d: usize, rng: &mut impl Rng) -> CMatrix {
        let g = CMatrix::from_fn(d, d, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let h = &g * g.adjoint();
        let tr = h.trace().re;
        h / Complex64::new(tr, 0.0)
    }

    #[test]
    fn d2_family_is_the_polarization_triple() {
        let fam = mub_family(2).unwrap();
        assert_eq!(fam.len(), 3);
        for m in 0..3 {
            for mp in (m + 1)..3 {
                let ov = fam[m].matrix().adjoint() * fam[mp].matrix();
                for i in 0..2 {
                    for j in 0..2 {
                        assert_abs_diff_eq!(ov[(i, j)].norm_sqr(), 0.5, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn d3_family_is_unbiased() {
        let fam = mub_family(3).unwrap();
        assert_eq!(fam.len(), 4);
        for m in 0..4 {
            for mp in (m + 1)..4 {
                let ov = fam[m].matrix().adjoint() * fam[mp].matrix();
                for i in 0..3 {
                    for j in 0..3 {
                        assert_abs_diff_eq!(ov[(i, j)].norm_sqr(), 1.0 / 3.0, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn composite_dimension_is_rejected() {
        match mub_family(4) {
            Err(Error::UnsupportedDimension(4)) => {}
            other => panic!("expected unsupported dimension, got {other:?}"),
        }
        assert!(mub_family(9).is_err());
    }

    #[test]
    fn q_observable_matches_definition_for_qubits() {
        let fam = mub_family(2).unwrap();
        let q = unitary_observable(2, 1, 0, &fam).unwrap();
        // diag(ω¹, ω²) = diag(-1, +1)
        assert_abs_diff_eq!(q.matrix[(0, 0)].re, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(q.matrix[(1, 1)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(q.matrix[(0, 1)].norm(), 0.0, epsilon = 1e-14);

        // q_1(m)² = identity for every basis
        for m in 0..=2 {
            let q = unitary_observable(2, 1, m, &fam).unwrap();
            let sq = &q.matrix * &q.matrix;
            assert_abs_diff_eq!((sq - CMatrix::identity(2, 2)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn q_eigenvalues_are_roots_of_unity() {
        let d = 3;
        let fam = mub_family(d).unwrap();
        for m in 0..=d {
            for k in 0..d {
                let q = unitary_observable(d, k, m, &fam).unwrap();
                for j in 0..d {
                    let v = fam[m].basis_vector(j);
                    let qv = &q.matrix * &v;
                    let ev = omega_pow(d, (j as i64 + 1) * k as i64);
                    assert_abs_diff_eq!((qv - v * ev).norm(), 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn hs_orthonormality_for_small_primes() {
        for d in [2usize, 3, 5] {
            let fam = mub_family(d).unwrap();
            let dev = hs_orthonormality_deviation(d, &fam).unwrap();
            assert!(dev < 1e-12, "d={d}: deviation {dev:.3e}");
        }
    }

    #[test]
    fn completeness_relation_holds_and_fails_on_corruption() {
        for d in [2usize, 3] {
            let fam = mub_family(d).unwrap();
            let (ok, dev) = operator_basis_completeness_check(d, &fam).unwrap();
            assert!(ok, "d={d}: deviation {dev:.3e}");
            assert!(dev < 1e-13);
        }
        // negative control: flip one phase
        let mut fam = mub_family(3).unwrap();
        let mut m = fam[1].matrix().clone();
        m[(0, 0)] = -m[(0, 0)];
        fam[1] = Multiport {
            dim: 3,
            matrix: m,
            label: Some(1),
        };
        let (ok, _) = operator_basis_completeness_check(3, &fam).unwrap();
        assert!(!ok);
    }

    #[test]
    fn density_matrix_reconstruction_and_purity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for d in [2usize, 3, 5] {
            let fam = mub_family(d).unwrap();
            let set = unitary_observable_set(d, &fam).unwrap();
            for _ in 0..4 {
                let rho = random_density(d, &mut rng);
                let sqrt_d = (d as f64).sqrt();
                // expansion with c_{m,k} = Tr q_k†(m) ρ / √d and c_00 = 1/√d
                let mut rec = CMatrix::identity(d, d) * Complex64::new(1.0 / d as f64, 0.0);
                let mut purity = 1.0 / d as f64;
                for q in &set {
                    let cmk = (q.matrix.adjoint() * &rho).trace() / sqrt_d;
                    rec += &q.matrix * (cmk / sqrt_d);
                    let tr = (&rho * &q.matrix).trace();
                    purity += tr.norm_sqr() / d as f64;
                }
                assert_abs_diff_eq!((rec - &rho).norm(), 0.0, epsilon = 1e-12);
                let tr_rho2 = (&rho * &rho).trace().re;
                assert_abs_diff_eq!(purity, tr_rho2, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn bloch_basis_is_unitary_and_matches_pauli_eigenvectors() {
        let b = bloch_zx_basis(0.0);
        assert_abs_diff_eq!(
            (b.matrix() - CMatrix::identity(2, 2)).norm(),
            0.0,
            epsilon = 1e-15
        );
        let b = bloch_zx_basis(std::f64::consts::FRAC_PI_2);
        let obs = b.matrix() * CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::ONE,
            -Complex64::ONE,
        ])) * b.matrix().adjoint();
        assert_abs_diff_eq!((obs - pauli(1)).norm(), 0.0, epsilon = 1e-12);
    }
}
