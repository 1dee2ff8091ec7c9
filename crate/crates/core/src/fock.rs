//! Truncated multimode bosonic Fock space: basis enumeration, sparse state
//! vectors, and exact creation/annihilation actions.
//!
//! The space is a product of two per-party truncations: each party keeps every
//! occupation tuple whose total photon number is at most the party cutoff.
//! Basis order is graded (ascending total photon number) with descending
//! lexicographic order inside a sector, so sectors form contiguous blocks and
//! per-sector scalings (1/N̂, vacuum projection) are block-diagonal.
//!
//! States are stored as sorted sparse `(index, amplitude)` lists. The physical
//! states of interest (squeezed vacua and their noise mixtures) populate a
//! vanishing fraction of the joint basis, which for the gains covered by the
//! scans can exceed 1e9 joint states; a dense vector is only materialized on
//! demand for small layouts.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hard cap on any materialized basis (per party, joint enumeration, dense
/// views, operator matrices).
pub const MAX_BASIS_STATES: u64 = 5_000_000;

/// Measurement stations. Mode indices for party A come first, then party B.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Party {
    A,
    B,
}

/// Global mode index (A modes first, then B modes).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ModeIndex(pub usize);

fn binom(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// One party's truncated occupation basis.
#[derive(Debug)]
pub struct ModeBasis {
    modes: usize,
    cutoff: u32,
    occs: Vec<Box<[u16]>>,
    index: HashMap<Box<[u16]>, u64>,
    /// `sector_start[n]` = first index of the total-photon-number-`n` sector.
    sector_start: Vec<u64>,
}

impl ModeBasis {
    fn build(modes: usize, cutoff: u32) -> Result<Self> {
        let dim = if modes == 0 {
            1u128
        } else {
            binom(cutoff as u64 + modes as u64, modes as u64)
        };
        if dim > MAX_BASIS_STATES as u128 {
            return Err(Error::Capacity {
                needed: dim,
                max: MAX_BASIS_STATES,
            });
        }
        let mut occs: Vec<Box<[u16]>> = Vec::with_capacity(dim as usize);
        let mut sector_start = Vec::with_capacity(cutoff as usize + 2);
        if modes == 0 {
            occs.push(Box::from(&[][..]));
            sector_start.push(0);
            sector_start.push(1);
        } else {
            let mut buf = vec![0u16; modes];
            for n in 0..=cutoff {
                sector_start.push(occs.len() as u64);
                fill_compositions(n as u16, 0, &mut buf, &mut occs);
            }
            sector_start.push(occs.len() as u64);
        }
        let index = occs
            .iter()
            .enumerate()
            .map(|(i, o)| (o.clone(), i as u64))
            .collect();
        Ok(ModeBasis {
            modes,
            cutoff,
            occs,
            index,
            sector_start,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn dim(&self) -> u64 {
        self.occs.len() as u64
    }

    pub fn occ(&self, idx: u64) -> &[u16] {
        &self.occs[idx as usize]
    }

    pub fn index_of(&self, occ: &[u16]) -> Option<u64> {
        self.index.get(occ).copied()
    }

    /// Total photon number of basis state `idx`.
    pub fn total(&self, idx: u64) -> u32 {
        // sector_start is sorted; the sector of idx is the last start <= idx.
        (self.sector_start.partition_point(|&s| s <= idx) - 1) as u32
    }

    pub fn sector_range(&self, n: u32) -> std::ops::Range<u64> {
        self.sector_start[n as usize]..self.sector_start[n as usize + 1]
    }
}

/// Descending-lexicographic compositions: first mode takes n, n-1, ..., 0.
fn fill_compositions(n: u16, mode: usize, buf: &mut Vec<u16>, out: &mut Vec<Box<[u16]>>) {
    if mode == buf.len() - 1 {
        buf[mode] = n;
        out.push(buf.clone().into_boxed_slice());
        return;
    }
    for k in (0..=n).rev() {
        buf[mode] = k;
        fill_compositions(n - k, mode + 1, buf, out);
    }
}

/// Mode counts and per-party photon-number cutoffs of the truncated space.
#[derive(Clone, Debug)]
pub struct PartyLayout {
    modes_a: usize,
    modes_b: usize,
    cutoff_a: u32,
    cutoff_b: u32,
    basis_a: Arc<ModeBasis>,
    basis_b: Arc<ModeBasis>,
}

impl PartialEq for PartyLayout {
    fn eq(&self, other: &Self) -> bool {
        self.modes_a == other.modes_a
            && self.modes_b == other.modes_b
            && self.cutoff_a == other.cutoff_a
            && self.cutoff_b == other.cutoff_b
    }
}
impl Eq for PartyLayout {}

impl PartyLayout {
    /// A two-party layout. `modes_b = 0` yields a single-party space
    /// (the B factor is the trivial one-dimensional space).
    pub fn new(modes_a: usize, cutoff_a: u32, modes_b: usize, cutoff_b: u32) -> Result<Self> {
        if modes_a == 0 {
            return Err(Error::Contract("party A needs at least one mode".into()));
        }
        if modes_b == 0 && cutoff_b != 0 {
            return Err(Error::Contract(
                "cutoff_b must be 0 when party B has no modes".into(),
            ));
        }
        let basis_a = Arc::new(ModeBasis::build(modes_a, cutoff_a)?);
        let basis_b = Arc::new(ModeBasis::build(modes_b, cutoff_b)?);
        Ok(PartyLayout {
            modes_a,
            modes_b,
            cutoff_a,
            cutoff_b,
            basis_a,
            basis_b,
        })
    }

    /// Single-party layout (no B modes).
    pub fn single(modes: usize, cutoff: u32) -> Result<Self> {
        Self::new(modes, cutoff, 0, 0)
    }

    pub fn modes(&self, party: Party) -> usize {
        match party {
            Party::A => self.modes_a,
            Party::B => self.modes_b,
        }
    }

    pub fn cutoff(&self, party: Party) -> u32 {
        match party {
            Party::A => self.cutoff_a,
            Party::B => self.cutoff_b,
        }
    }

    pub fn basis(&self, party: Party) -> &ModeBasis {
        match party {
            Party::A => &self.basis_a,
            Party::B => &self.basis_b,
        }
    }

    /// Joint dimension `dim_A * dim_B`.
    pub fn dim(&self) -> u64 {
        self.basis_a.dim() * self.basis_b.dim()
    }

    pub fn party_of(&self, mode: ModeIndex) -> Result<(Party, usize)> {
        if mode.0 < self.modes_a {
            Ok((Party::A, mode.0))
        } else if mode.0 < self.modes_a + self.modes_b {
            Ok((Party::B, mode.0 - self.modes_a))
        } else {
            Err(Error::IndexOutOfRange(format!(
                "mode {} of {} total",
                mode.0,
                self.modes_a + self.modes_b
            )))
        }
    }

    pub fn split_index(&self, idx: u64) -> (u64, u64) {
        let db = self.basis_b.dim();
        (idx / db, idx % db)
    }

    pub fn join_index(&self, a_idx: u64, b_idx: u64) -> u64 {
        a_idx * self.basis_b.dim() + b_idx
    }

    /// Index of the joint occupation tuple (A modes first).
    pub fn index_of(&self, occ: &[u16]) -> Result<u64> {
        if occ.len() != self.modes_a + self.modes_b {
            return Err(Error::IndexOutOfRange(format!(
                "occupation tuple has {} entries, layout has {} modes",
                occ.len(),
                self.modes_a + self.modes_b
            )));
        }
        let (oa, ob) = occ.split_at(self.modes_a);
        let ia = self
            .basis_a
            .index_of(oa)
            .ok_or_else(|| Error::IndexOutOfRange(format!("A occupation {oa:?} beyond cutoff")))?;
        let ib = self
            .basis_b
            .index_of(ob)
            .ok_or_else(|| Error::IndexOutOfRange(format!("B occupation {ob:?} beyond cutoff")))?;
        Ok(self.join_index(ia, ib))
    }

    /// Joint occupation tuple of basis index `idx`.
    pub fn occ_of(&self, idx: u64) -> OccState {
        let (ia, ib) = self.split_index(idx);
        let mut occ = Vec::with_capacity(self.modes_a + self.modes_b);
        occ.extend_from_slice(self.basis_a.occ(ia));
        occ.extend_from_slice(self.basis_b.occ(ib));
        OccState { occ }
    }

    /// The full ordered joint basis. Refuses to materialize beyond the cap.
    pub fn enumerate_basis(&self) -> Result<Vec<OccState>> {
        let dim = self.basis_a.dim() as u128 * self.basis_b.dim() as u128;
        if dim > MAX_BASIS_STATES as u128 {
            return Err(Error::Capacity {
                needed: dim,
                max: MAX_BASIS_STATES,
            });
        }
        Ok((0..dim as u64).map(|i| self.occ_of(i)).collect())
    }

    pub fn check_same(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::LayoutMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Occupation-number tuple over all modes (A modes first, then B modes).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OccState {
    pub occ: Vec<u16>,
}

/// Pure state: sparse complex amplitudes over the joint occupation basis plus
/// the squared mass discarded by truncation.
#[derive(Clone, Debug)]
pub struct PureState {
    layout: PartyLayout,
    /// Sorted by basis index, exact zeros pruned.
    entries: Vec<(u64, Complex64)>,
    truncation_tail: f64,
}

impl PureState {
    pub fn from_entries(
        layout: PartyLayout,
        mut entries: Vec<(u64, Complex64)>,
        truncation_tail: f64,
    ) -> Self {
        entries.sort_unstable_by_key(|e| e.0);
        let mut merged: Vec<(u64, Complex64)> = Vec::with_capacity(entries.len());
        for (i, a) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += a,
                _ => merged.push((i, a)),
            }
        }
        merged.retain(|e| e.1 != Complex64::ZERO);
        PureState {
            layout,
            entries: merged,
            truncation_tail,
        }
    }

    /// Dense amplitude vector -> sparse state (small layouts).
    pub fn from_dense(layout: PartyLayout, amps: &[Complex64]) -> Result<Self> {
        if amps.len() as u64 != layout.dim() {
            return Err(Error::LayoutMismatch(format!(
                "dense vector of length {} vs dimension {}",
                amps.len(),
                layout.dim()
            )));
        }
        let entries = amps
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != Complex64::ZERO)
            .map(|(i, a)| (i as u64, *a))
            .collect();
        Ok(PureState::from_entries(layout, entries, 0.0))
    }

    /// Basis state with the given joint occupation tuple.
    pub fn basis_state(layout: &PartyLayout, occ: &[u16]) -> Result<Self> {
        let idx = layout.index_of(occ)?;
        Ok(PureState::from_entries(
            layout.clone(),
            vec![(idx, Complex64::ONE)],
            0.0,
        ))
    }

    /// Vacuum of the whole layout.
    pub fn vacuum(layout: &PartyLayout) -> Self {
        PureState::from_entries(layout.clone(), vec![(0, Complex64::ONE)], 0.0)
    }

    pub fn layout(&self) -> &PartyLayout {
        &self.layout
    }

    pub fn entries(&self) -> &[(u64, Complex64)] {
        &self.entries
    }

    pub fn truncation_tail(&self) -> f64 {
        self.truncation_tail
    }

    pub fn with_tail(mut self, tail: f64) -> Self {
        self.truncation_tail = tail;
        self
    }

    pub fn norm_sqr(&self) -> f64 {
        // Kahan summation; states can have ~1e6 entries and the unitarity
        // contracts sit at 1e-12.
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (_, a) in &self.entries {
            let y = a.norm_sqr() - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        sum
    }

    pub fn amplitude(&self, idx: u64) -> Complex64 {
        match self.entries.binary_search_by_key(&idx, |e| e.0) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => Complex64::ZERO,
        }
    }

    /// Scale all amplitudes in place.
    pub fn scaled(mut self, c: Complex64) -> Self {
        if c == Complex64::ZERO {
            self.entries.clear();
        } else {
            for e in &mut self.entries {
                e.1 *= c;
            }
        }
        self
    }

    /// Normalize to unit norm; the discarded-mass record is kept as-is.
    pub fn normalized(self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if n2 <= 1e-28 {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(Complex64::new(1.0 / n2.sqrt(), 0.0)))
    }

    /// `self + other` as raw vectors (tails take the max of the two records).
    pub fn add(&self, other: &PureState) -> Result<PureState> {
        self.layout.check_same(&other.layout)?;
        let mut entries = Vec::with_capacity(self.entries.len() + other.entries.len());
        entries.extend_from_slice(&self.entries);
        entries.extend_from_slice(&other.entries);
        Ok(PureState::from_entries(
            self.layout.clone(),
            entries,
            self.truncation_tail.max(other.truncation_tail),
        ))
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        self.layout.check_same(&other.layout)?;
        let mut sum = Complex64::ZERO;
        let mut comp = Complex64::ZERO;
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.entries.len() && j < other.entries.len() {
            let (ia, aa) = self.entries[i];
            let (ib, ab) = other.entries[j];
            match ia.cmp(&ib) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let y = aa.conj() * ab - comp;
                    let t = sum + y;
                    comp = (t - sum) - y;
                    sum = t;
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(sum)
    }

    /// Dense amplitude view (small layouts only).
    pub fn to_dense(&self) -> Result<Vec<Complex64>> {
        let dim = self.layout.dim();
        if dim > MAX_BASIS_STATES {
            return Err(Error::Capacity {
                needed: dim as u128,
                max: MAX_BASIS_STATES,
            });
        }
        let mut v = vec![Complex64::ZERO; dim as usize];
        for &(i, a) in &self.entries {
            v[i as usize] = a;
        }
        Ok(v)
    }

    /// If the state is a single occupation-basis vector (up to phase), return it.
    pub fn as_single_occupation(&self) -> Option<OccState> {
        if self.entries.len() == 1 && (self.entries[0].1.norm_sqr() - 1.0).abs() < 1e-12 {
            Some(self.layout.occ_of(self.entries[0].0))
        } else {
            None
        }
    }

    /// a†_mode; components pushed past the party cutoff are dropped into the
    /// truncation tail.
    pub fn apply_creation(&self, mode: ModeIndex) -> Result<PureState> {
        let (party, local) = self.layout.party_of(mode)?;
        let basis = self.layout.basis(party);
        let cutoff = basis.cutoff();
        let mut entries = Vec::with_capacity(self.entries.len());
        let mut tail = self.truncation_tail;
        let mut buf: Vec<u16> = Vec::new();
        for &(idx, amp) in &self.entries {
            let (ia, ib) = self.layout.split_index(idx);
            let pidx = if party == Party::A { ia } else { ib };
            if basis.total(pidx) + 1 > cutoff {
                tail += amp.norm_sqr();
                continue;
            }
            let occ = basis.occ(pidx);
            buf.clear();
            buf.extend_from_slice(occ);
            let n = buf[local];
            buf[local] = n + 1;
            let new_p = basis
                .index_of(&buf)
                .expect("within-cutoff occupation must be indexed");
            let new_idx = match party {
                Party::A => self.layout.join_index(new_p, ib),
                Party::B => self.layout.join_index(ia, new_p),
            };
            entries.push((new_idx, amp * ((n as f64 + 1.0).sqrt())));
        }
        Ok(PureState::from_entries(self.layout.clone(), entries, tail))
    }

    /// a_mode; `a|0⟩ = 0`.
    pub fn apply_annihilation(&self, mode: ModeIndex) -> Result<PureState> {
        let (party, local) = self.layout.party_of(mode)?;
        let basis = self.layout.basis(party);
        let mut entries = Vec::with_capacity(self.entries.len());
        let mut buf: Vec<u16> = Vec::new();
        for &(idx, amp) in &self.entries {
            let (ia, ib) = self.layout.split_index(idx);
            let pidx = if party == Party::A { ia } else { ib };
            let occ = basis.occ(pidx);
            let n = occ[local];
            if n == 0 {
                continue;
            }
            buf.clear();
            buf.extend_from_slice(occ);
            buf[local] = n - 1;
            let new_p = basis.index_of(&buf).expect("lowered occupation indexed");
            let new_idx = match party {
                Party::A => self.layout.join_index(new_p, ib),
                Party::B => self.layout.join_index(ia, new_p),
            };
            entries.push((new_idx, amp * (n as f64).sqrt()));
        }
        Ok(PureState::from_entries(
            self.layout.clone(),
            entries,
            self.truncation_tail,
        ))
    }
}

/// Mixed state as a finite convex combination of pure states.
#[derive(Clone, Debug)]
pub struct EnsembleState {
    members: Vec<(f64, PureState)>,
}

impl EnsembleState {
    pub fn new(members: Vec<(f64, PureState)>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Contract("ensemble needs at least one member".into()));
        }
        let layout = members[0].1.layout().clone();
        let mut total = 0.0;
        for (w, st) in &members {
            if *w < -1e-15 {
                return Err(Error::Contract(format!("negative ensemble weight {w}")));
            }
            st.layout().check_same(&layout)?;
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Contract(format!(
                "ensemble weights sum to {total}, expected 1"
            )));
        }
        Ok(EnsembleState { members })
    }

    pub fn pure(state: PureState) -> Self {
        EnsembleState {
            members: vec![(1.0, state)],
        }
    }

    pub fn members(&self) -> &[(f64, PureState)] {
        &self.members
    }

    pub fn layout(&self) -> &PartyLayout {
        self.members[0].1.layout()
    }
}
