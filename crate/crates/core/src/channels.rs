//! Detection losses via exact beamsplitter dilation.
//!
//! Each mode gets a partner loss mode (party mode count doubles, signal modes
//! first); the beamsplitter â†(η) = √η â† + √(1−η) ĉ† splits every occupation
//! binomially between the pair. The map is unitary, photon number per party is
//! conserved, and downstream observables act on the signal modes only (use
//! [`FieldOperator::embed_in_doubled`]).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{Party, PartyLayout, PureState};
use crate::observables::{stokes_normalized, stokes_standard, total_number, FieldOperator};

/// Per-party detector efficiencies (intensity transmission; amplitude √η).
#[derive(Clone, Copy, Debug)]
pub struct LossSpec {
    pub eta_a: f64,
    pub eta_b: f64,
}

impl LossSpec {
    pub fn new(eta_a: f64, eta_b: f64) -> Result<Self> {
        for eta in [eta_a, eta_b] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::Contract(format!("efficiency {eta} outside [0, 1]")));
            }
        }
        Ok(LossSpec { eta_a, eta_b })
    }

    pub fn symmetric(eta: f64) -> Result<Self> {
        Self::new(eta, eta)
    }

    pub fn eta(&self, party: Party) -> f64 {
        match party {
            Party::A => self.eta_a,
            Party::B => self.eta_b,
        }
    }
}

/// Layout with the loss modes appended: each party's mode count doubles,
/// per-party cutoffs unchanged (the beamsplitter conserves photon number).
pub fn enlarged_layout(layout: &PartyLayout) -> Result<PartyLayout> {
    PartyLayout::new(
        2 * layout.modes(Party::A),
        layout.cutoff(Party::A),
        2 * layout.modes(Party::B),
        layout.cutoff(Party::B),
    )
}

/// Amplitudes √C(n,k) η^{(n−k)/2} (1−η)^{k/2} for losing k of n photons.
fn split_amplitudes(n: u16, eta: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    // C(n,k) η^{n-k} (1-η)^k under the square root, built recursively
    for k in 0..=n {
        let mut c = 1.0f64;
        for i in 0..k {
            c = c * (n - i) as f64 / (i + 1) as f64;
        }
        let w = c * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32);
        out.push(w.sqrt());
    }
    out
}

/// Exact beamsplitter dilation of the loss channel: pure state in, pure state
/// on the enlarged layout out. Norm is preserved.
pub fn dilate_loss(state: &PureState, spec: &LossSpec) -> Result<PureState> {
    let layout = state.layout();
    let big = enlarged_layout(layout)?;
    let da = layout.modes(Party::A);
    let db = layout.modes(Party::B);
    let mut entries: Vec<(u64, Complex64)> = Vec::new();
    let mut occ_buf = vec![0u16; 2 * (da + db)];
    for &(idx, amp) in state.entries() {
        let occ = layout.occ_of(idx).occ;
        // per-mode splitting tables
        let tables: Vec<Vec<f64>> = occ
            .iter()
            .enumerate()
            .map(|(i, &n)| split_amplitudes(n, if i < da { spec.eta_a } else { spec.eta_b }))
            .collect();
        // iterate the product of (n_i + 1) choices; k[i] photons lost in mode i
        let mut k = vec![0u16; occ.len()];
        loop {
            let mut factor = 1.0f64;
            for (i, &ki) in k.iter().enumerate() {
                factor *= tables[i][ki as usize];
            }
            if factor != 0.0 {
                for i in 0..da {
                    occ_buf[i] = occ[i] - k[i];
                    occ_buf[da + i] = k[i];
                }
                for i in 0..db {
                    occ_buf[2 * da + i] = occ[da + i] - k[da + i];
                    occ_buf[2 * da + db + i] = k[da + i];
                }
                let new_idx = big
                    .index_of(&occ_buf)
                    .expect("dilated occupation conserves party totals");
                entries.push((new_idx, amp * factor));
            }
            // odometer increment
            let mut pos = 0;
            loop {
                if pos == k.len() {
                    break;
                }
                if k[pos] < occ[pos] {
                    k[pos] += 1;
                    break;
                }
                k[pos] = 0;
                pos += 1;
            }
            if pos == k.len() {
                break;
            }
        }
    }
    Ok(PureState::from_entries(big, entries, state.truncation_tail()))
}

/// ⟨Θ̂_i^A Θ̂_j^B⟩ after loss vs before: returns (lossy, ideal, ratio).
/// The ratio equals η_A·η_B wherever the ideal value is nonzero.
pub fn verify_theta_scaling(
    state: &PureState,
    i: usize,
    j: usize,
    spec: &LossSpec,
) -> Result<(f64, f64, f64)> {
    let corr = stokes_standard(Party::A, i)?
        .mul(&stokes_standard(Party::B, j)?)
        .assert_hermitian();
    let ideal = corr.expectation_real(state)?;
    let lossy_state = dilate_loss(state, spec)?;
    let da = state.layout().modes(Party::A);
    let db = state.layout().modes(Party::B);
    let lossy = corr
        .embed_in_doubled(da, db)
        .expectation_real(&lossy_state)?;
    let ratio = if ideal.abs() > 1e-14 {
        lossy / ideal
    } else {
        f64::NAN
    };
    Ok((lossy, ideal, ratio))
}

/// Normalized-Stokes loss factor of a Fock state:
/// H_F = Π_X [1 − (1−η_X)^{m_X}] with m_X the pre-loss photon total at X.
/// Returns (observed ⟨Ŝ_0^A Ŝ_0^B⟩ after loss, predicted product).
///
/// The same factor multiplies ⟨Ŝ_μ^A Ŝ_ν^B⟩ for every μ, ν; the full check
/// is exposed through [`normalized_scaling_matrix`].
pub fn verify_normalized_scaling(state: &PureState, spec: &LossSpec) -> Result<(f64, f64)> {
    let occ = state.as_single_occupation().ok_or_else(|| {
        Error::Contract("normalized-Stokes scaling law is stated for Fock states".into())
    })?;
    let da = state.layout().modes(Party::A);
    let m_a: u32 = occ.occ[..da].iter().map(|&x| x as u32).sum();
    let m_b: u32 = occ.occ[da..].iter().map(|&x| x as u32).sum();
    let predicted = (1.0 - (1.0 - spec.eta_a).powi(m_a as i32))
        * (1.0 - (1.0 - spec.eta_b).powi(m_b as i32));
    let lossy_state = dilate_loss(state, spec)?;
    let db = state.layout().modes(Party::B);
    let s0s0 = stokes_normalized(Party::A, 0)?
        .mul(&stokes_normalized(Party::B, 0)?)
        .assert_hermitian()
        .embed_in_doubled(da, db);
    let observed = s0s0.expectation_real(&lossy_state)?;
    Ok((observed, predicted))
}

/// All sixteen ⟨Ŝ_μ^A Ŝ_ν^B⟩ pairs, (lossy, ideal·H_F) per (μ, ν).
pub fn normalized_scaling_matrix(
    state: &PureState,
    spec: &LossSpec,
) -> Result<Vec<((usize, usize), f64, f64)>> {
    let (_, h_f) = verify_normalized_scaling(state, spec)?;
    let lossy_state = dilate_loss(state, spec)?;
    let da = state.layout().modes(Party::A);
    let db = state.layout().modes(Party::B);
    let mut rows = Vec::with_capacity(16);
    for mu in 0..=3 {
        for nu in 0..=3 {
            let op = stokes_normalized(Party::A, mu)?
                .mul(&stokes_normalized(Party::B, nu)?)
                .assert_hermitian();
            let ideal = op.expectation_real(state)?;
            let lossy = op.embed_in_doubled(da, db).expectation_real(&lossy_state)?;
            rows.push(((mu, nu), lossy, h_f * ideal));
        }
    }
    Ok(rows)
}

/// ⟨N̂⟩ of the signal modes of a party on the enlarged layout.
pub fn signal_number(party: Party, orig_modes: usize) -> FieldOperator {
    total_number(party).embed_in_doubled(orig_modes, orig_modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::{rate_observable, vacuum_projector};
    use crate::modes::mub_family;
    use crate::states::{bsv_2x2, two_photon_singlet};
    use approx::assert_abs_diff_eq;

    #[test]
    fn full_transmission_is_an_identity_embedding() {
        let psi = two_photon_singlet(2).unwrap();
        let spec = LossSpec::symmetric(1.0).unwrap();
        let out = dilate_loss(&psi, &spec).unwrap();
        assert_abs_diff_eq!(out.norm_sqr(), 1.0, epsilon = 1e-12);
        // all photons stay in signal modes
        for &(idx, _) in out.entries() {
            let occ = out.layout().occ_of(idx).occ;
            assert_eq!(occ[2], 0);
            assert_eq!(occ[3], 0);
            assert_eq!(occ[6], 0);
            assert_eq!(occ[7], 0);
        }
    }

    #[test]
    fn zero_transmission_blacks_out_projected_observables() {
        let psi = two_photon_singlet(2).unwrap();
        let spec = LossSpec::symmetric(0.0).unwrap();
        let out = dilate_loss(&psi, &spec).unwrap();
        assert_abs_diff_eq!(out.norm_sqr(), 1.0, epsilon = 1e-12);
        let pipi = vacuum_projector(Party::A)
            .mul(&vacuum_projector(Party::B))
            .assert_hermitian()
            .embed_in_doubled(2, 2);
        assert_abs_diff_eq!(pipi.expectation_real(&out).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn dilation_preserves_norm() {
        let psi = bsv_2x2(0.6, 1, 1, None, 1e-10).unwrap();
        for eta in [0.25, 0.5, 0.8] {
            let out = dilate_loss(&psi, &LossSpec::symmetric(eta).unwrap()).unwrap();
            assert_abs_diff_eq!(out.norm_sqr(), psi.norm_sqr(), epsilon = 1e-12);
        }
    }

    #[test]
    fn rate_of_lossy_fock_state_matches_binomial_formula() {
        // r_1(η) = n/(n+m) (1 − (1−η)^{n+m}) for |n, m⟩; here |1,1⟩, η = 1/2.
        let l = PartyLayout::single(2, 2).unwrap();
        let f = PureState::basis_state(&l, &[1, 1]).unwrap();
        let spec = LossSpec::new(0.5, 0.5).unwrap();
        let lossy = dilate_loss(&f, &spec).unwrap();
        let fam = mub_family(2).unwrap();
        let r_h = rate_observable(Party::A, 0, &fam[0])
            .unwrap()
            .embed_in_doubled(2, 0);
        let got = r_h.expectation_real(&lossy).unwrap();
        assert_abs_diff_eq!(got, 0.375, epsilon = 1e-12);
        // general formula at another efficiency
        let spec = LossSpec::new(0.3, 0.3).unwrap();
        let lossy = dilate_loss(&f, &spec).unwrap();
        let got = r_h.expectation_real(&lossy).unwrap();
        let expect = 0.5 * (1.0 - 0.7f64.powi(2));
        assert_abs_diff_eq!(got, expect, epsilon = 1e-12);
    }

    #[test]
    fn theta_correlations_scale_as_product_of_efficiencies() {
        let psi = two_photon_singlet(2).unwrap();
        let spec = LossSpec::new(0.7, 0.4).unwrap();
        for j in 1..=3 {
            let (_, ideal, ratio) = verify_theta_scaling(&psi, j, j, &spec).unwrap();
            assert_abs_diff_eq!(ideal, -1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(ratio, 0.28, epsilon = 1e-10);
        }
        // unit efficiencies give ratio 1
        let unit = LossSpec::symmetric(1.0).unwrap();
        let (_, _, ratio) = verify_theta_scaling(&psi, 1, 1, &unit).unwrap();
        assert_abs_diff_eq!(ratio, 1.0, epsilon = 1e-12);
        // bright squeezed vacuum, asymmetric efficiencies
        let bsv = bsv_2x2(0.5, 1, 1, None, 1e-10).unwrap();
        let spec = LossSpec::new(0.3, 0.9).unwrap();
        let (_, _, ratio) = verify_theta_scaling(&bsv, 3, 3, &spec).unwrap();
        assert_abs_diff_eq!(ratio, 0.27, epsilon = 1e-10);
    }

    #[test]
    fn fock_normalized_scaling_factor() {
        // |1,0⟩|0,1⟩ at η = 1/2 on both sides: H_F = 1/4.
        let l = PartyLayout::new(2, 2, 2, 2).unwrap();
        let f = PureState::basis_state(&l, &[1, 0, 0, 1]).unwrap();
        let spec = LossSpec::symmetric(0.5).unwrap();
        let (obs, pred) = verify_normalized_scaling(&f, &spec).unwrap();
        assert_abs_diff_eq!(pred, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(obs, pred, epsilon = 1e-12);

        // |2,0⟩|1,1⟩ with η_A = 0.5, η_B = 0.8: H_F = (1−0.25)(1−0.04) = 0.72
        let f = PureState::basis_state(&l, &[2, 0, 1, 1]).unwrap();
        let spec = LossSpec::new(0.5, 0.8).unwrap();
        let (obs, pred) = verify_normalized_scaling(&f, &spec).unwrap();
        assert_abs_diff_eq!(pred, 0.72, epsilon = 1e-15);
        assert_abs_diff_eq!(obs, pred, epsilon = 1e-12);

        // η = 1 gives H_F = 1
        let spec = LossSpec::symmetric(1.0).unwrap();
        let (obs, pred) = verify_normalized_scaling(&f, &spec).unwrap();
        assert_abs_diff_eq!(pred, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(obs, 1.0, epsilon = 1e-12);

        // the same factor multiplies every ⟨Ŝ_μ Ŝ_ν⟩ pair
        let spec = LossSpec::new(0.6, 0.35).unwrap();
        for ((mu, nu), lossy, scaled_ideal) in normalized_scaling_matrix(&f, &spec).unwrap() {
            assert_abs_diff_eq!(lossy, scaled_ideal, epsilon = 1e-10);
            let _ = (mu, nu);
        }
        // non-Fock input is refused
        let psi = two_photon_singlet(2).unwrap();
        assert!(verify_normalized_scaling(&psi, &spec).is_err());
    }
}

