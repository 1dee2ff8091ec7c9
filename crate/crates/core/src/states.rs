//! Analytic state factory: Fock products, creation-polynomial states, the
//! d×d (bright) squeezed vacuum and its Bell-like variants, and the
//! distortion-noise mixtures built from them.
//!
//! The Bell-like squeezed vacuum Ξ^d(m,l) expands, per photon-number sector n,
//! into occupation pairs (occ, occ shifted by l) with amplitudes of equal
//! magnitude tanhⁿΓ/cosh^dΓ and phases ω^{m Σ_k k·n_k}; summing |·|² over the
//! C(n+d-1, d-1) compositions reproduces the sector weights of the symmetric
//! form, so the family is exactly unit-norm before truncation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{EnsembleState, Party, PartyLayout, PureState};
use crate::modes::omega_pow;

/// Default bound on the squared mass discarded by truncation.
pub const DEFAULT_TAIL_BOUND: f64 = 1e-12;

/// Fock state with the given joint occupation tuple (A modes first).
pub fn fock(layout: &PartyLayout, occupations: &[u16]) -> Result<PureState> {
    PureState::basis_state(layout, occupations)
}

/// Normalized state F†|Ω⟩ for a creation polynomial
/// F† = Σ_t c_t Π_i (x̂†_i)^{p_{t,i}}, given as (coefficient, powers) terms
/// over all modes. Components beyond a party cutoff are dropped and their
/// squared mass recorded as the truncation tail.
pub fn polynomial_state(
    layout: &PartyLayout,
    terms: &[(Complex64, Vec<u16>)],
) -> Result<PureState> {
    let n_modes = layout.modes(Party::A) + layout.modes(Party::B);
    let mut kept: Vec<(u64, Complex64)> = Vec::new();
    let mut dropped: std::collections::HashMap<Vec<u16>, Complex64> = std::collections::HashMap::new();
    for (coeff, powers) in terms {
        if powers.len() != n_modes {
            return Err(Error::LayoutMismatch(format!(
                "term has {} mode powers, layout has {n_modes} modes",
                powers.len()
            )));
        }
        // Π (x†)^p |Ω⟩ = √(Π p!) |p⟩
        let mut mono_norm = 1.0_f64;
        for &p in powers {
            for q in 1..=p {
                mono_norm *= q as f64;
            }
        }
        let amp = coeff * mono_norm.sqrt();
        match layout.index_of(powers) {
            Ok(idx) => kept.push((idx, amp)),
            Err(_) => {
                *dropped.entry(powers.clone()).or_insert(Complex64::ZERO) += amp;
            }
        }
    }
    let state = PureState::from_entries(layout.clone(), kept, 0.0);
    let kept_sq = state.norm_sqr();
    let dropped_sq: f64 = dropped.values().map(|a| a.norm_sqr()).sum();
    let total = kept_sq + dropped_sq;
    if kept_sq <= 1e-28 * total.max(1.0) || total == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let scale = Complex64::new(1.0 / total.sqrt(), 0.0);
    Ok(state.scaled(scale).with_tail(dropped_sq / total))
}

/// Product state F_A† F_B† |Ω⟩ from per-party creation polynomials.
pub fn product_state(
    layout: &PartyLayout,
    a_terms: &[(Complex64, Vec<u16>)],
    b_terms: &[(Complex64, Vec<u16>)],
) -> Result<PureState> {
    let (da, db) = (layout.modes(Party::A), layout.modes(Party::B));
    let mut joint = Vec::with_capacity(a_terms.len() * b_terms.len());
    for (ca, pa) in a_terms {
        if pa.len() != da {
            return Err(Error::LayoutMismatch(format!(
                "A-party term has {} powers, expected {da}",
                pa.len()
            )));
        }
        for (cb, pb) in b_terms {
            if pb.len() != db {
                return Err(Error::LayoutMismatch(format!(
                    "B-party term has {} powers, expected {db}",
                    pb.len()
                )));
            }
            let mut powers = Vec::with_capacity(da + db);
            powers.extend_from_slice(pa);
            powers.extend_from_slice(pb);
            joint.push((ca * cb, powers));
        }
    }
    polynomial_state(layout, &joint)
}

/// Two-photon polarization singlet (â_H† b̂_V† − â_V† b̂_H†)/√2 |Ω⟩ on a
/// 2+2-mode layout with the given per-party cutoff.
pub fn two_photon_singlet(cutoff: u32) -> Result<PureState> {
    let layout = PartyLayout::new(2, cutoff, 2, cutoff)?;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    polynomial_state(
        &layout,
        &[
            (Complex64::new(r, 0.0), vec![1, 0, 0, 1]),
            (Complex64::new(-r, 0.0), vec![0, 1, 1, 0]),
        ],
    )
}

/// Photon-pair-number distribution weight of sector n:
/// w_n = C(n+d-1, d-1) tanh^{2n}Γ / cosh^{2d}Γ.
pub fn bsv_sector_weight(gamma: f64, d: usize, n: u32) -> f64 {
    let x = gamma.tanh().powi(2);
    let mut binom = 1.0_f64;
    for i in 1..d as u32 {
        binom *= (n + i) as f64 / i as f64;
    }
    binom * x.powi(n as i32) / gamma.cosh().powi(2 * d as i32)
}

/// Mass above the cutoff: Σ_{n > cutoff} w_n.
pub fn bsv_tail_mass(gamma: f64, d: usize, cutoff: u32) -> f64 {
    let x = gamma.tanh().powi(2);
    if x == 0.0 {
        return 0.0;
    }
    let mut tail = 0.0;
    let mut n = cutoff + 1;
    loop {
        let w = bsv_sector_weight(gamma, d, n);
        tail += w;
        // strictly decreasing ratio x·C(n+d)/C(n+d-1) < 1 once n is large;
        // stop when the remaining geometric bound is negligible
        if w < 1e-18 * (tail + 1e-300) || w < f64::MIN_POSITIVE {
            break;
        }
        n += 1;
        if n > cutoff + 1_000_000 {
            break;
        }
    }
    tail
}

/// Smallest cutoff with tail mass below `bound`.
pub fn bsv_cutoff_for_tail(gamma: f64, d: usize, bound: f64) -> u32 {
    let mut cum = 0.0;
    let mut n = 0u32;
    loop {
        cum += bsv_sector_weight(gamma, d, n);
        if 1.0 - cum < bound * 0.5 || bsv_tail_mass(gamma, d, n) < bound {
            return n;
        }
        n += 1;
        if n > 10_000_000 {
            return n;
        }
    }
}

fn check_tail(gamma: f64, d: usize, cutoff: u32, bound: f64) -> Result<f64> {
    let tail = bsv_tail_mass(gamma, d, cutoff);
    if tail > bound {
        return Err(Error::Contract(format!(
            "truncation tail {tail:.3e} above bound {bound:.3e} at cutoff {cutoff}; raise the cutoff"
        )));
    }
    Ok(tail)
}

/// Bell-like d×d squeezed vacuum Ξ^d(m,l) built from
/// (Σ_k ω^{km} â_k† b̂_{k+l}†)ⁿ with mod-d index arithmetic, truncated at
/// `cutoff` photon pairs (auto-selected from `tail_bound` when `None`).
pub fn bell_like_bsv(
    gamma: f64,
    d: usize,
    m: usize,
    l: usize,
    cutoff: Option<u32>,
    tail_bound: f64,
) -> Result<PureState> {
    if gamma < 0.0 {
        return Err(Error::Contract(format!("gain must be non-negative, got {gamma}")));
    }
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    if m >= d || l >= d {
        return Err(Error::IndexOutOfRange(format!(
            "Bell-basis labels (m={m}, l={l}) for d={d}"
        )));
    }
    let cutoff = match cutoff {
        Some(c) => c,
        None => bsv_cutoff_for_tail(gamma, d, tail_bound),
    };
    let tail = check_tail(gamma, d, cutoff, tail_bound)?;
    let layout = PartyLayout::new(d, cutoff, d, cutoff)?;
    let state = bell_like_entries(gamma, d, m, l, cutoff, &layout)?;
    Ok(state.with_tail(tail))
}

fn bell_like_entries(
    gamma: f64,
    d: usize,
    m: usize,
    l: usize,
    cutoff: u32,
    layout: &PartyLayout,
) -> Result<PureState> {
    let t = gamma.tanh();
    let norm = gamma.cosh().powi(-(d as i32));
    let basis_a = layout.basis(Party::A);
    let basis_b = layout.basis(Party::B);
    let mut entries = Vec::with_capacity(basis_a.dim() as usize);
    let mut shifted = vec![0u16; d];
    for n in 0..=cutoff {
        let mag = t.powi(n as i32) * norm;
        for a_idx in basis_a.sector_range(n) {
            let occ = basis_a.occ(a_idx);
            // B-mode (k+l) mod d carries what A-mode k carries
            for k in 0..d {
                shifted[(k + l) % d] = occ[k];
            }
            let b_idx = basis_b
                .index_of(&shifted)
                .expect("shifted occupation stays in the same sector");
            let phase_sum: i64 = occ
                .iter()
                .enumerate()
                .map(|(k, &nk)| (k as i64) * (nk as i64))
                .sum();
            let amp = omega_pow(d, (m as i64) * phase_sum) * mag;
            entries.push((layout.join_index(a_idx, b_idx), amp));
        }
    }
    Ok(PureState::from_entries(layout.clone(), entries, 0.0))
}

/// Four-mode (2×2) bright squeezed vacuum of Bell type (m,l);
/// (m,l) = (1,1) is the polarization "macroscopic singlet" |Ψ⁻⟩.
pub fn bsv_2x2(gamma: f64, m: usize, l: usize, cutoff: Option<u32>, tail_bound: f64) -> Result<PureState> {
    bell_like_bsv(gamma, 2, m, l, cutoff, tail_bound)
}

/// Symmetric d×d bright squeezed vacuum (Ξ^d(0,0)).
pub fn bsv_dxd(gamma: f64, d: usize, cutoff: Option<u32>, tail_bound: f64) -> Result<PureState> {
    bell_like_bsv(gamma, d, 0, 0, cutoff, tail_bound)
}

/// Unit-norm photon-number-sector component of Ξ^d(m,l) on the given layout
/// (the |ψ_d^n⟩ analogue, exact, no truncation tail).
pub fn bsv_sector_component(
    d: usize,
    m: usize,
    l: usize,
    n: u32,
    layout: &PartyLayout,
) -> Result<PureState> {
    if layout.modes(Party::A) != d || layout.modes(Party::B) != d {
        return Err(Error::LayoutMismatch(format!(
            "layout has {}+{} modes, component needs {d}+{d}",
            layout.modes(Party::A),
            layout.modes(Party::B)
        )));
    }
    if n > layout.cutoff(Party::A) || n > layout.cutoff(Party::B) {
        return Err(Error::IndexOutOfRange(format!(
            "sector {n} beyond layout cutoffs"
        )));
    }
    let basis_a = layout.basis(Party::A);
    let basis_b = layout.basis(Party::B);
    let range = basis_a.sector_range(n);
    let count = (range.end - range.start) as f64;
    let mag = 1.0 / count.sqrt();
    let mut shifted = vec![0u16; d];
    let mut entries = Vec::with_capacity(count as usize);
    for a_idx in basis_a.sector_range(n) {
        let occ = basis_a.occ(a_idx);
        for k in 0..d {
            shifted[(k + l) % d] = occ[k];
        }
        let b_idx = basis_b.index_of(&shifted).expect("same sector");
        let phase_sum: i64 = occ
            .iter()
            .enumerate()
            .map(|(k, &nk)| (k as i64) * (nk as i64))
            .sum();
        entries.push((
            layout.join_index(a_idx, b_idx),
            omega_pow(d, (m as i64) * phase_sum) * mag,
        ));
    }
    Ok(PureState::from_entries(layout.clone(), entries, 0.0))
}

/// Uniform mixture of the d² Bell-like squeezed vacua — the distortion-noise
/// analogue of white noise.
pub fn noise_ensemble(
    gamma: f64,
    d: usize,
    cutoff: Option<u32>,
    tail_bound: f64,
) -> Result<EnsembleState> {
    let cutoff = match cutoff {
        Some(c) => c,
        None => bsv_cutoff_for_tail(gamma, d, tail_bound),
    };
    let w = 1.0 / (d * d) as f64;
    let mut members = Vec::with_capacity(d * d);
    for m in 0..d {
        for l in 0..d {
            members.push((w, bell_like_bsv(gamma, d, m, l, Some(cutoff), tail_bound)?));
        }
    }
    EnsembleState::new(members)
}

/// ϱ = v |base⟩⟨base| + (1-v) ϱ_noise.
pub fn mix_with_noise(base: &PureState, noise: &EnsembleState, v: f64) -> Result<EnsembleState> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Contract(format!("visibility {v} outside [0, 1]")));
    }
    base.layout().check_same(noise.layout())?;
    let mut members = vec![(v, base.clone())];
    for (w, st) in noise.members() {
        members.push((w * (1.0 - v), st.clone()));
    }
    EnsembleState::new(members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::{
        chi_field, expectation_mixed, projected_inverse_number, stokes_normalized, total_number,
        vacuum_projector, FieldOperator,
    };
    use crate::modes::mub_family;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    // Paper closed forms evaluated independently (frozen):
    //   <N>(Γ=1,d=2)  = 2 sinh²1,     <N²> = sinh²1 (3cosh2 − 1)
    //   <Π>(Γ=1,d=2)  = 1 − sech⁴1,   <Π(1/N)Π> = (2tanh²1/cosh⁴1)·₃F₂(1,1,3;2,2;tanh²1)
    const N_MEAN_G1_D2: f64 = 2.762195691083631;
    const N_SQ_G1_D2: f64 = 14.206783244845102;
    const PI_G1_D2: f64 = 0.823621552385865;
    const INV_N_G1_D2: f64 = 0.396615072970624;
    const N_MEAN_G1_D3: f64 = 4.143293536625447;
    const N_SQ_G1_D3: f64 = 27.032468644148388;
    const PI_G1_D3: f64 = 0.925925577588350;
    const INV_N_G1_D3: f64 = 0.339518113746225;

    #[test]
    fn fock_state_round_trips() {
        let l = PartyLayout::new(2, 3, 2, 3).unwrap();
        let st = fock(&l, &[1, 0, 0, 1]).unwrap();
        assert_abs_diff_eq!(st.norm_sqr(), 1.0, epsilon = 1e-15);
        assert!(fock(&l, &[4, 0, 0, 0]).is_err());
    }

    #[test]
    fn singlet_has_perfect_anticorrelations() {
        let psi = two_photon_singlet(2).unwrap();
        for j in 1..=3 {
            let op = stokes_normalized(Party::A, j)
                .unwrap()
                .mul(&stokes_normalized(Party::B, j).unwrap())
                .assert_hermitian();
            assert_abs_diff_eq!(op.expectation_real(&psi).unwrap(), -1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn polynomial_state_reports_dropped_mass_and_zero_norm() {
        let l = PartyLayout::single(1, 1).unwrap();
        // (|1> + |2>)/norm with cutoff 1: the |2> term is dropped
        let st = polynomial_state(
            &l,
            &[
                (Complex64::ONE, vec![1]),
                (Complex64::ONE, vec![2]),
            ],
        )
        .unwrap();
        // |1> has monomial norm 1, (a†)²|Ω> has norm √2 -> dropped mass 2 of 3
        assert_abs_diff_eq!(st.truncation_tail(), 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(st.norm_sqr() + st.truncation_tail(), 1.0, epsilon = 1e-12);
        // fully out-of-range polynomial has zero kept norm
        assert!(matches!(
            polynomial_state(&l, &[(Complex64::ONE, vec![2])]),
            Err(Error::ZeroNorm)
        ));
    }

    #[test]
    fn bsv_sector_amplitudes_match_analytic_weights() {
        let gamma = 0.8;
        let psi = bsv_2x2(gamma, 1, 1, Some(40), 1e-12).unwrap();
        let layout = psi.layout().clone();
        let basis = layout.basis(Party::A);
        for n in 0..=6u32 {
            let mut sector_mass = 0.0;
            for a_idx in basis.sector_range(n) {
                for b_idx in layout.basis(Party::B).sector_range(n) {
                    sector_mass += psi.amplitude(layout.join_index(a_idx, b_idx)).norm_sqr();
                }
            }
            let expect = bsv_sector_weight(gamma, 2, n);
            assert_abs_diff_eq!(sector_mass, expect, epsilon = 1e-14 * expect.max(1e-3));
            // √(n+1) tanhⁿ/cosh² form of the sector amplitude
            let analytic =
                (n as f64 + 1.0).sqrt() * gamma.tanh().powi(n as i32) / gamma.cosh().powi(2);
            assert_abs_diff_eq!(sector_mass.sqrt(), analytic, epsilon = 1e-14);
        }
        for (d, g) in [(3usize, 0.6), (4, 0.4)] {
            let psi = bsv_dxd(g, d, None, 1e-12).unwrap();
            assert_abs_diff_eq!(psi.norm_sqr() + psi.truncation_tail(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn bsv_moments_match_paper_closed_forms() {
        for (d, nm, ns, pi, inv) in [
            (2usize, N_MEAN_G1_D2, N_SQ_G1_D2, PI_G1_D2, INV_N_G1_D2),
            (3, N_MEAN_G1_D3, N_SQ_G1_D3, PI_G1_D3, INV_N_G1_D3),
        ] {
            let psi = bsv_dxd(1.0, d, None, 1e-12).unwrap();
            assert!(psi.truncation_tail() < 1e-12);
            let n = total_number(Party::A);
            let n2 = n.mul(&n).assert_hermitian();
            assert_abs_diff_eq!(n.expectation_real(&psi).unwrap(), nm, epsilon = 1e-8 * nm);
            assert_abs_diff_eq!(n2.expectation_real(&psi).unwrap(), ns, epsilon = 1e-8 * ns);
            assert_abs_diff_eq!(
                vacuum_projector(Party::A).expectation_real(&psi).unwrap(),
                pi,
                epsilon = 1e-8
            );
            assert_abs_diff_eq!(
                projected_inverse_number(Party::A, 1.0)
                    .expectation_real(&psi)
                    .unwrap(),
                inv,
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn symmetric_bsv_is_the_zero_zero_bell_variant() {
        let a = bsv_dxd(0.7, 3, Some(20), 1e-6).unwrap();
        let b = bell_like_bsv(0.7, 3, 0, 0, Some(20), 1e-6).unwrap();
        for (ea, eb) in a.entries().iter().zip(b.entries()) {
            assert_eq!(ea.0, eb.0);
            assert_abs_diff_eq!((ea.1 - eb.1).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn epr_identity_on_sector_components() {
        // χ̂_k^A(m) |ψ_d^n⟩ = χ̂_k^B(m) |ψ_d^n⟩ for every k, m, with the B
        // station behind the conjugated interferometer family.
        for d in [2usize, 3] {
            let fam = mub_family(d).unwrap();
            let fam_b = crate::modes::conjugate_family(&fam);
            let layout = PartyLayout::new(d, 6, d, 6).unwrap();
            for n in 0..=6u32 {
                let psi = bsv_sector_component(d, 0, 0, n, &layout).unwrap();
                for m in 0..=d {
                    for k in 1..d {
                        let lhs = chi_field(Party::A, k, m, &fam)
                            .unwrap()
                            .apply(&psi)
                            .unwrap();
                        let rhs = chi_field(Party::B, k, m, &fam_b)
                            .unwrap()
                            .apply(&psi)
                            .unwrap();
                        let diff = lhs.add(&rhs.scaled(-Complex64::ONE)).unwrap();
                        assert!(
                            diff.norm_sqr().sqrt() < 1e-12,
                            "d={d} n={n} k={k} m={m}: |difference| = {:.3e}",
                            diff.norm_sqr().sqrt()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn noise_kills_stokes_correlations_but_keeps_joint_vacuum_weight() {
        let gamma = 0.6;
        let noise = noise_ensemble(gamma, 2, None, 1e-12).unwrap();
        let psi_minus = bsv_2x2(gamma, 1, 1, None, 1e-12).unwrap();
        for i in 1..=3 {
            for j in 1..=3 {
                let op = stokes_normalized(Party::A, i)
                    .unwrap()
                    .mul(&stokes_normalized(Party::B, j).unwrap())
                    .assert_hermitian();
                let v = expectation_mixed(&op, &noise).unwrap();
                assert!(
                    v.norm() < 1e-10,
                    "<S_{i} S_{j}> on noise = {v} should vanish"
                );
            }
        }
        let pipi = vacuum_projector(Party::A)
            .mul(&vacuum_projector(Party::B))
            .assert_hermitian();
        let on_noise = expectation_mixed(&pipi, &noise).unwrap().re;
        let on_signal = pipi.expectation_real(&psi_minus).unwrap();
        assert_abs_diff_eq!(on_noise, on_signal, epsilon = 1e-12);
    }

    #[test]
    fn qutrit_noise_kills_intensity_mub_correlations() {
        let d = 3;
        let gamma = 0.4;
        let fam = mub_family(d).unwrap();
        let noise = noise_ensemble(gamma, d, None, 1e-12).unwrap();
        for m in 0..=d {
            for mp in 0..=d {
                for i in 1..d {
                    for j in 1..d {
                        let op = chi_field(Party::A, i, m, &fam)
                            .unwrap()
                            .mul(&chi_field(Party::B, j, mp, &fam).unwrap().adjoint());
                        let v = op.expectation(&noise).unwrap();
                        assert!(
                            v.norm() < 1e-10,
                            "Tr χ_{i}^A({m}) χ_{j}^B†({mp}) ϱ_noise = {v}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn mixture_weights_are_convex() {
        let gamma = 0.5;
        let noise = noise_ensemble(gamma, 2, Some(25), 1e-9).unwrap();
        let base = bsv_2x2(gamma, 1, 1, Some(25), 1e-9).unwrap();
        let mix = mix_with_noise(&base, &noise, 0.7).unwrap();
        assert_eq!(mix.members().len(), 5);
        let total: f64 = mix.members().iter().map(|(w, _)| w).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        assert!(mix_with_noise(&base, &noise, 1.3).is_err());
    }

    #[test]
    fn explicit_cutoff_below_tail_bound_is_refused() {
        match bsv_2x2(1.0, 1, 1, Some(5), 1e-12) {
            Err(Error::Contract(msg)) => assert!(msg.contains("tail")),
            other => panic!("expected tail refusal, got {other:?}"),
        }
        // auto cutoff honors the bound
        let psi = bsv_2x2(1.0, 1, 1, None, 1e-12).unwrap();
        assert!(psi.truncation_tail() < 1e-12);
        assert_abs_diff_eq!(psi.norm_sqr() + psi.truncation_tail(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn product_state_gram_inputs_factorize() {
        // smoke test of the product constructor itself
        let l = PartyLayout::new(2, 3, 2, 3).unwrap();
        let st = product_state(
            &l,
            &[
                (Complex64::ONE, vec![1, 0]),
                (Complex64::new(0.0, 0.5), vec![0, 2]),
            ],
            &[(Complex64::ONE, vec![1, 1])],
        )
        .unwrap();
        assert_abs_diff_eq!(st.norm_sqr(), 1.0, epsilon = 1e-12);
        let _ = FieldOperator::identity();
    }
}
