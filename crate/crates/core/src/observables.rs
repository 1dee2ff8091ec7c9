//! Field observables as lazily applied operator expressions.
//!
//! Every observable in scope is built from two photon-number-conserving
//! primitives acting on one party's modes:
//!
//! * `Diag` — a function of the total photon number in a set of modes
//!   (vacuum projector Π̂, 1/N̂ with the 0/0 → 0 convention, N̂ itself);
//! * `OneBody` — a balanced quadratic form Σ_kl C_kl x̂†_k x̂_l.
//!
//! combined by sums, products and scalar multiples. Expressions are applied
//! directly to sparse states, so no joint-space matrix is ever required; for
//! small layouts `to_matrix` materializes the dense matrix used by the
//! operator-identity suites.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{EnsembleState, Party, PartyLayout, PureState};
use crate::modes::{pauli, CMatrix, Multiport};

/// Hermitian expectations must have |Im| below this; the real part is returned.
pub const HERMITIAN_IMAG_TOL: f64 = 1e-12;

/// Cap on the dimension of materialized operator matrices.
pub const MAX_MATRIX_DIM: u64 = 8192;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DiagKind {
    /// Π̂ = 1 − |Ω⟩⟨Ω| over the masked modes: 0 on their vacuum, 1 elsewhere.
    VacuumProjector,
    /// Total photon number in the masked modes.
    PhotonNumber,
    /// 1/N̂ with the vacuum sector mapped to zero (never a float division by 0).
    InvPhotonNumber,
    /// 1/√N̂ with the vacuum sector mapped to zero.
    InvSqrtPhotonNumber,
}

impl DiagKind {
    fn eval(self, n: u32) -> f64 {
        match self {
            DiagKind::VacuumProjector => {
                if n == 0 {
                    0.0
                } else {
                    1.0
                }
            }
            DiagKind::PhotonNumber => n as f64,
            DiagKind::InvPhotonNumber => {
                if n == 0 {
                    0.0
                } else {
                    1.0 / n as f64
                }
            }
            DiagKind::InvSqrtPhotonNumber => {
                if n == 0 {
                    0.0
                } else {
                    1.0 / (n as f64).sqrt()
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Expr {
    Identity,
    Diag {
        party: Party,
        /// Restriction to a subset of the party's modes; `None` = all modes.
        modes: Option<Vec<usize>>,
        kind: DiagKind,
    },
    OneBody {
        party: Party,
        coeff: CMatrix,
    },
    Scale(Complex64, Box<Expr>),
    Sum(Vec<Expr>),
    /// Prod[a, b, ...]: rightmost factor applied first.
    Prod(Vec<Expr>),
}

impl Expr {
    fn adjoint(&self) -> Expr {
        match self {
            Expr::Identity => Expr::Identity,
            Expr::Diag { party, modes, kind } => Expr::Diag {
                party: *party,
                modes: modes.clone(),
                kind: *kind,
            },
            Expr::OneBody { party, coeff } => Expr::OneBody {
                party: *party,
                coeff: coeff.adjoint(),
            },
            Expr::Scale(c, inner) => Expr::Scale(c.conj(), Box::new(inner.adjoint())),
            Expr::Sum(terms) => Expr::Sum(terms.iter().map(|t| t.adjoint()).collect()),
            Expr::Prod(factors) => Expr::Prod(factors.iter().rev().map(|f| f.adjoint()).collect()),
        }
    }

    fn touches(&self, party: Party) -> bool {
        match self {
            Expr::Identity => false,
            Expr::Diag { party: p, .. } | Expr::OneBody { party: p, .. } => *p == party,
            Expr::Scale(_, inner) => inner.touches(party),
            Expr::Sum(v) | Expr::Prod(v) => v.iter().any(|e| e.touches(party)),
        }
    }
}

/// Which party's modes an operator acts on.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Scope {
    A,
    B,
    Both,
    Neither,
}

/// A (generally sparse, sector-blocked) linear map on the truncated space.
#[derive(Clone, Debug)]
pub struct FieldOperator {
    expr: Expr,
    hermitian: bool,
}

impl FieldOperator {
    pub fn identity() -> Self {
        FieldOperator {
            expr: Expr::Identity,
            hermitian: true,
        }
    }

    /// Σ_kl C_kl x̂†_k x̂_l on one party; Hermitian iff C is.
    pub fn quadratic(party: Party, coeff: CMatrix) -> Result<Self> {
        if coeff.nrows() != coeff.ncols() {
            return Err(Error::Contract("coefficient matrix must be square".into()));
        }
        let hermitian = (coeff.adjoint() - &coeff).norm() <= 1e-12 * (1.0 + coeff.norm());
        Ok(FieldOperator {
            expr: Expr::OneBody { party, coeff },
            hermitian,
        })
    }

    /// Diagonal function of the total photon number in `modes` (all if `None`).
    pub fn diagonal(party: Party, modes: Option<Vec<usize>>, kind: DiagKind) -> Self {
        FieldOperator {
            expr: Expr::Diag { party, modes, kind },
            hermitian: true,
        }
    }

    pub fn hermitian(&self) -> bool {
        self.hermitian
    }

    /// Override the structurally derived flag (used when a construction is
    /// known Hermitian although the expression tree cannot see it).
    pub fn assert_hermitian(mut self) -> Self {
        self.hermitian = true;
        self
    }

    pub fn scope(&self) -> Scope {
        match (self.expr.touches(Party::A), self.expr.touches(Party::B)) {
            (true, true) => Scope::Both,
            (true, false) => Scope::A,
            (false, true) => Scope::B,
            (false, false) => Scope::Neither,
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        FieldOperator {
            expr: Expr::Scale(c, Box::new(self.expr.clone())),
            hermitian: self.hermitian && c.im == 0.0,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        FieldOperator {
            expr: Expr::Sum(vec![self.expr.clone(), other.expr.clone()]),
            hermitian: self.hermitian && other.hermitian,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-Complex64::ONE))
    }

    pub fn sum(terms: &[FieldOperator]) -> Self {
        FieldOperator {
            expr: Expr::Sum(terms.iter().map(|t| t.expr.clone()).collect()),
            hermitian: terms.iter().all(|t| t.hermitian),
        }
    }

    /// Operator product `self · other` (apply `other` first).
    pub fn mul(&self, other: &Self) -> Self {
        FieldOperator {
            expr: Expr::Prod(vec![self.expr.clone(), other.expr.clone()]),
            hermitian: false,
        }
    }

    /// O†O; Hermitian (and non-negative) by construction.
    pub fn abs_squared(&self) -> Self {
        FieldOperator {
            expr: Expr::Prod(vec![self.expr.adjoint(), self.expr.clone()]),
            hermitian: true,
        }
    }

    /// O² of a Hermitian O.
    pub fn squared(&self) -> Self {
        FieldOperator {
            expr: Expr::Prod(vec![self.expr.clone(), self.expr.clone()]),
            hermitian: self.hermitian,
        }
    }

    pub fn adjoint(&self) -> Self {
        FieldOperator {
            expr: self.expr.adjoint(),
            hermitian: self.hermitian,
        }
    }

    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        apply_expr(&self.expr, state)
    }

    /// ⟨state|O|state⟩ for a pure or mixed state.
    pub fn expectation<S: QuantumState + ?Sized>(&self, state: &S) -> Result<Complex64> {
        state.expectation_with(|pure| pure.inner(&self.apply(pure)?))
    }

    /// Expectation of a Hermitian operator; asserts the imaginary part is
    /// below `HERMITIAN_IMAG_TOL` and returns the real part.
    pub fn expectation_real<S: QuantumState + ?Sized>(&self, state: &S) -> Result<f64> {
        let v = self.expectation(state)?;
        if !self.hermitian {
            return Err(Error::Contract(
                "expectation_real called on a non-Hermitian operator".into(),
            ));
        }
        if v.im.abs() >= HERMITIAN_IMAG_TOL * (1.0 + v.re.abs()) {
            return Err(Error::Contract(format!(
                "Hermitian expectation has imaginary part {:.3e}",
                v.im
            )));
        }
        Ok(v.re)
    }

    /// Dense matrix on the given layout (columns = images of basis vectors).
    pub fn to_matrix(&self, layout: &PartyLayout) -> Result<CMatrix> {
        let dim = layout.dim();
        if dim > MAX_MATRIX_DIM {
            return Err(Error::Capacity {
                needed: dim as u128,
                max: MAX_MATRIX_DIM,
            });
        }
        let dim = dim as usize;
        let mut m = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            let e = PureState::from_entries(
                layout.clone(),
                vec![(col as u64, Complex64::ONE)],
                0.0,
            );
            let out = self.apply(&e)?;
            for &(row, amp) in out.entries() {
                m[(row as usize, col)] = amp;
            }
        }
        Ok(m)
    }

    /// Re-express an operator built for a layout with `orig_a`/`orig_b` modes
    /// per party on a doubled layout where each party's first half are the
    /// original (signal) modes: quadratic coefficients are zero-padded,
    /// unrestricted diagonals are restricted to the signal modes.
    pub fn embed_in_doubled(&self, orig_a: usize, orig_b: usize) -> Self {
        fn embed(expr: &Expr, orig_a: usize, orig_b: usize) -> Expr {
            match expr {
                Expr::Identity => Expr::Identity,
                Expr::Diag { party, modes, kind } => {
                    let orig = match party {
                        Party::A => orig_a,
                        Party::B => orig_b,
                    };
                    let modes = match modes {
                        Some(ms) => Some(ms.clone()),
                        None => Some((0..orig).collect()),
                    };
                    Expr::Diag {
                        party: *party,
                        modes,
                        kind: *kind,
                    }
                }
                Expr::OneBody { party, coeff } => {
                    let orig = match party {
                        Party::A => orig_a,
                        Party::B => orig_b,
                    };
                    debug_assert_eq!(coeff.nrows(), orig);
                    let mut c = CMatrix::zeros(2 * orig, 2 * orig);
                    c.view_mut((0, 0), (orig, orig)).copy_from(coeff);
                    Expr::OneBody {
                        party: *party,
                        coeff: c,
                    }
                }
                Expr::Scale(c, inner) => Expr::Scale(*c, Box::new(embed(inner, orig_a, orig_b))),
                Expr::Sum(v) => Expr::Sum(v.iter().map(|e| embed(e, orig_a, orig_b)).collect()),
                Expr::Prod(v) => Expr::Prod(v.iter().map(|e| embed(e, orig_a, orig_b)).collect()),
            }
        }
        FieldOperator {
            expr: embed(&self.expr, orig_a, orig_b),
            hermitian: self.hermitian,
        }
    }
}

fn apply_expr(expr: &Expr, state: &PureState) -> Result<PureState> {
    match expr {
        Expr::Identity => Ok(state.clone()),
        Expr::Scale(c, inner) => Ok(apply_expr(inner, state)?.scaled(*c)),
        Expr::Sum(terms) => {
            let mut acc: Option<PureState> = None;
            for t in terms {
                let part = apply_expr(t, state)?;
                acc = Some(match acc {
                    None => part,
                    Some(prev) => prev.add(&part)?,
                });
            }
            acc.ok_or_else(|| Error::Contract("empty operator sum".into()))
        }
        Expr::Prod(factors) => {
            let mut cur = state.clone();
            for f in factors.iter().rev() {
                cur = apply_expr(f, &cur)?;
            }
            Ok(cur)
        }
        Expr::Diag { party, modes, kind } => {
            let layout = state.layout();
            if layout.modes(*party) == 0 {
                return Err(Error::LayoutMismatch(format!(
                    "operator acts on party {party:?} which has no modes"
                )));
            }
            if let Some(ms) = modes {
                if ms.iter().any(|&m| m >= layout.modes(*party)) {
                    return Err(Error::IndexOutOfRange(format!(
                        "diagonal mode mask {ms:?} vs {} modes",
                        layout.modes(*party)
                    )));
                }
            }
            let basis = layout.basis(*party);
            let entries = state
                .entries()
                .iter()
                .filter_map(|&(idx, amp)| {
                    let (ia, ib) = layout.split_index(idx);
                    let pidx = if *party == Party::A { ia } else { ib };
                    let n = match modes {
                        None => basis.total(pidx),
                        Some(ms) => {
                            let occ = basis.occ(pidx);
                            ms.iter().map(|&m| occ[m] as u32).sum()
                        }
                    };
                    let f = kind.eval(n);
                    if f == 0.0 {
                        None
                    } else {
                        Some((idx, amp * f))
                    }
                })
                .collect();
            Ok(PureState::from_entries(
                layout.clone(),
                entries,
                state.truncation_tail(),
            ))
        }
        Expr::OneBody { party, coeff } => {
            let layout = state.layout();
            let d = layout.modes(*party);
            if coeff.nrows() != d {
                return Err(Error::LayoutMismatch(format!(
                    "quadratic coefficient is {}x{} but party {party:?} has {d} modes",
                    coeff.nrows(),
                    coeff.ncols()
                )));
            }
            let basis = layout.basis(*party);
            let mut out: Vec<(u64, Complex64)> = Vec::with_capacity(state.entries().len() * 2);
            let mut buf: Vec<u16> = Vec::new();
            for &(idx, amp) in state.entries() {
                let (ia, ib) = layout.split_index(idx);
                let pidx = if *party == Party::A { ia } else { ib };
                let occ = basis.occ(pidx);
                for l in 0..d {
                    let n_l = occ[l];
                    if n_l == 0 {
                        continue;
                    }
                    for k in 0..d {
                        let c = coeff[(k, l)];
                        if c == Complex64::ZERO {
                            continue;
                        }
                        // a†_k a_l
                        let (factor, new_pidx) = if k == l {
                            (n_l as f64, pidx)
                        } else {
                            buf.clear();
                            buf.extend_from_slice(occ);
                            buf[l] = n_l - 1;
                            buf[k] += 1;
                            let f = (n_l as f64).sqrt() * (occ[k] as f64 + 1.0).sqrt();
                            let np = basis
                                .index_of(&buf)
                                .expect("balanced move stays within cutoff");
                            (f, np)
                        };
                        let new_idx = match party {
                            Party::A => layout.join_index(new_pidx, ib),
                            Party::B => layout.join_index(ia, new_pidx),
                        };
                        out.push((new_idx, amp * c * factor));
                    }
                }
            }
            Ok(PureState::from_entries(
                layout.clone(),
                out,
                state.truncation_tail(),
            ))
        }
    }
}

/// Anything with a convex decomposition into pure states.
pub trait QuantumState {
    fn layout(&self) -> &PartyLayout;
    /// Weighted sum of `f` over the pure members.
    fn expectation_with(
        &self,
        f: impl FnMut(&PureState) -> Result<Complex64>,
    ) -> Result<Complex64>;
    fn pure_members(&self) -> Vec<(f64, &PureState)>;
}

impl QuantumState for PureState {
    fn layout(&self) -> &PartyLayout {
        self.layout()
    }
    fn expectation_with(
        &self,
        mut f: impl FnMut(&PureState) -> Result<Complex64>,
    ) -> Result<Complex64> {
        f(self)
    }
    fn pure_members(&self) -> Vec<(f64, &PureState)> {
        vec![(1.0, self)]
    }
}

impl QuantumState for EnsembleState {
    fn layout(&self) -> &PartyLayout {
        self.layout()
    }
    fn expectation_with(
        &self,
        mut f: impl FnMut(&PureState) -> Result<Complex64>,
    ) -> Result<Complex64> {
        let mut acc = Complex64::ZERO;
        for (w, st) in self.members() {
            acc += f(st)? * *w;
        }
        Ok(acc)
    }
    fn pure_members(&self) -> Vec<(f64, &PureState)> {
        self.members().iter().map(|(w, s)| (*w, s)).collect()
    }
}

/// ⟨O⟩ on a pure state.
pub fn expectation(op: &FieldOperator, state: &PureState) -> Result<Complex64> {
    op.expectation(state)
}

/// ⟨O⟩ on a finite mixture: Σ w_λ ⟨O⟩_λ.
pub fn expectation_mixed(op: &FieldOperator, ens: &EnsembleState) -> Result<Complex64> {
    op.expectation(ens)
}

// ---------------------------------------------------------------------------
// Named observables
// ---------------------------------------------------------------------------

/// Total photon number N̂ of one party.
pub fn total_number(party: Party) -> FieldOperator {
    FieldOperator::diagonal(party, None, DiagKind::PhotonNumber)
}

/// Vacuum projector Π̂ = 1 − |Ω⟩⟨Ω| of one party.
pub fn vacuum_projector(party: Party) -> FieldOperator {
    FieldOperator::diagonal(party, None, DiagKind::VacuumProjector)
}

/// Π̂ (2/N̂) Π̂-style sandwich: Π̂ (c/N̂) Π̂ as a single diagonal.
pub fn projected_inverse_number(party: Party, c: f64) -> FieldOperator {
    FieldOperator::diagonal(party, None, DiagKind::InvPhotonNumber).scale(Complex64::new(c, 0.0))
}

/// Π̂ op (1/N̂) Π̂ for a photon-number-conserving `op` on `party`'s modes.
///
/// Each party sector with n photons is scaled by 1/n, the vacuum sector is
/// mapped to zero structurally. One- and two-sided Π̂ sandwiches coincide for
/// number-conserving operators; the two-sided form is used.
pub fn normalize_by_photon_number(op: &FieldOperator, party: Party) -> Result<FieldOperator> {
    match op.scope() {
        Scope::A if party == Party::A => {}
        Scope::B if party == Party::B => {}
        Scope::Neither => {}
        _ => {
            return Err(Error::NotNumberConserving(party));
        }
    }
    let pi = Expr::Diag {
        party,
        modes: None,
        kind: DiagKind::VacuumProjector,
    };
    let inv = Expr::Diag {
        party,
        modes: None,
        kind: DiagKind::InvPhotonNumber,
    };
    Ok(FieldOperator {
        expr: Expr::Prod(vec![pi.clone(), inv, op.expr.clone(), pi]),
        hermitian: op.hermitian,
    })
}

/// Standard Stokes observable Θ̂_j of a two-mode party.
/// Θ̂_0 = N̂; for j = 1,2,3, Θ̂_j = Σ_kl (σ_j)_kl x̂†_k x̂_l
/// (j = 3 is the photon-number difference of the computational modes).
pub fn stokes_standard(party: Party, j: usize) -> Result<FieldOperator> {
    match j {
        0 => Ok(total_number(party)),
        1..=3 => FieldOperator::quadratic(party, pauli(j)),
        _ => Err(Error::IndexOutOfRange(format!("Stokes index {j}"))),
    }
}

/// Normalized Stokes observable Ŝ_j = Π̂ Θ̂_j/N̂ Π̂; Ŝ_0 = Π̂.
pub fn stokes_normalized(party: Party, j: usize) -> Result<FieldOperator> {
    match j {
        0 => Ok(vacuum_projector(party)),
        1..=3 => normalize_by_photon_number(&stokes_standard(party, j)?, party),
        _ => Err(Error::IndexOutOfRange(format!("Stokes index {j}"))),
    }
}

/// Photon number behind output `l` of a multiport: n̂_l(m) = x̂†_l(m) x̂_l(m).
pub fn output_number(party: Party, l: usize, port: &Multiport) -> Result<FieldOperator> {
    let d = port.dim();
    if l >= d {
        return Err(Error::IndexOutOfRange(format!("output {l} of {d}")));
    }
    let v = port.basis_vector(l);
    let mut c = CMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            c[(a, b)] = v[a] * v[b].conj();
        }
    }
    FieldOperator::quadratic(party, c)
}

/// Intensity-rate observable r̂_l = Π̂ n̂_l(m)/N̂ Π̂ behind a multiport.
pub fn rate_observable(party: Party, l: usize, port: &Multiport) -> Result<FieldOperator> {
    normalize_by_photon_number(&output_number(party, l, port)?, party)
}

/// Intensity observable χ̂_k(m) = Σ_j ω^{jk} n̂_j(m) = Σ_ll' [q̂_k(m)]_ll' x̂†_l x̂_l'.
pub fn chi_field(party: Party, k: usize, m: usize, family: &[Multiport]) -> Result<FieldOperator> {
    let d = family[0].dim();
    if k == 0 || k > d - 1 || m > d {
        return Err(Error::IndexOutOfRange(format!("(k={k}, m={m}) for d={d}")));
    }
    let q = crate::modes::unitary_observable(d, k, m, family)?;
    FieldOperator::quadratic(party, q.matrix)
}

/// Rate observable Q̂_k(m) = Σ_j Π̂ ω^{jk} n̂_j(m)/N̂ Π̂.
pub fn q_field(party: Party, k: usize, m: usize, family: &[Multiport]) -> Result<FieldOperator> {
    normalize_by_photon_number(&chi_field(party, k, m, family)?, party)
}
