//! Pants decompositions of a closed genus-g surface and Dehn-Thurston
//! coordinates for multicurves.
//!
//! A decomposition is stored as 2g-2 pants, each with three boundary slots,
//! together with a fixed-point-free involution on the 6g-6 slots. Each orbit
//! of the involution is a decomposition curve. Multicurves are recorded by
//! one intersection number and one twist per decomposition curve, both exact
//! integers.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact integer used throughout the coordinate layer.
pub type Int = BigInt;

/// Convenience constructor for `Int` from machine integers in tests and code.
pub fn int(v: i64) -> Int {
    Int::from(v)
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PantsError {
    #[error("genus must be at least 2, got {0}")]
    GenusTooSmall(usize),
    #[error("gluing must be an involution on {expected} slots, got {got}")]
    WrongSlotCount { expected: usize, got: usize },
    #[error("gluing is not a fixed-point-free involution at slot {0}")]
    BadInvolution(usize),
    #[error("dual graph of the decomposition is disconnected")]
    Disconnected,
    #[error("coordinate vector length {got} does not match curve count {expected}")]
    WrongCurveCount { expected: usize, got: usize },
    #[error("odd total intersection number on pants {0}")]
    OddParity(usize),
    #[error("negative intersection number on curve {0}")]
    NegativeIntersection(usize),
    #[error("negative twist {twist} on curve {curve} with zero intersection number")]
    NegativeTwistAtZero { curve: usize, twist: Int },
}

/// Index of a boundary slot: `pants * 3 + side`.
pub type SlotId = usize;
/// Index of a decomposition curve, `0..3g-3`.
pub type CurveId = usize;

/// A complete decomposing system of a closed genus-g surface: 3g-3 curves
/// cutting it into 2g-2 pairs-of-pants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PantsDecomposition {
    genus: usize,
    /// Involution on slots; `gluing[s]` is the slot glued to `s`.
    gluing: Vec<SlotId>,
    /// Curve label of each slot, derived canonically from the involution.
    slot_curve: Vec<CurveId>,
    /// The two slots of each curve, in increasing order.
    curve_slots: Vec<(SlotId, SlotId)>,
}

impl PantsDecomposition {
    /// Builds and validates a decomposition from a slot involution.
    ///
    /// Curve labels are assigned canonically: curves are numbered in order of
    /// their smallest slot, so the labeling is deterministic in the gluing.
    pub fn from_gluing(genus: usize, gluing: Vec<SlotId>) -> Result<Self, PantsError> {
        if genus < 2 {
            return Err(PantsError::GenusTooSmall(genus));
        }
        let slots = 6 * genus - 6;
        if gluing.len() != slots {
            return Err(PantsError::WrongSlotCount {
                expected: slots,
                got: gluing.len(),
            });
        }
        for s in 0..slots {
            let t = gluing[s];
            if t >= slots || t == s || gluing[t] != s {
                return Err(PantsError::BadInvolution(s));
            }
        }
        // Connectivity of the dual graph (pants as nodes, curves as edges).
        let pants_count = 2 * genus - 2;
        let mut seen = vec![false; pants_count];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(p) = stack.pop() {
            for side in 0..3 {
                let q = gluing[p * 3 + side] / 3;
                if !seen[q] {
                    seen[q] = true;
                    stack.push(q);
                }
            }
        }
        if seen.iter().any(|&v| !v) {
            return Err(PantsError::Disconnected);
        }
        // Canonical curve labels.
        let mut slot_curve = vec![usize::MAX; slots];
        let mut curve_slots = Vec::with_capacity(slots / 2);
        for s in 0..slots {
            if slot_curve[s] == usize::MAX {
                let id = curve_slots.len();
                slot_curve[s] = id;
                slot_curve[gluing[s]] = id;
                curve_slots.push((s, gluing[s]));
            }
        }
        Ok(PantsDecomposition {
            genus,
            gluing,
            slot_curve,
            curve_slots,
        })
    }

    /// The "linear" genus-g decomposition used as the base model: pants 2k and
    /// 2k+1 are glued along three curves for g = 2 (theta graph), and for
    /// higher genus theta-pairs are chained through their third slots.
    ///
    /// For genus 2: two pants glued along all three slot pairs.
    /// For genus 3: two theta-pairs, each glued along two curves, connected in
    /// a ring through the remaining four slots.
    pub fn linear(genus: usize) -> Result<Self, PantsError> {
        match genus {
            2 => {
                // P0 side k glued to P1 side k.
                Self::from_gluing(2, vec![3, 4, 5, 0, 1, 2])
            }
            3 => {
                // P0(0,1,2), P1(3,4,5), P2(6,7,8), P3(9,10,11).
                // Theta-pair A: P0 sides 0,1 <-> P1 sides 0,1.
                // Theta-pair B: P2 sides 0,1 <-> P3 sides 0,1.
                // Ring: P0 side 2 <-> P2 side 2, P1 side 2 <-> P3 side 2.
                Self::from_gluing(3, vec![3, 4, 8, 0, 1, 11, 9, 10, 2, 6, 7, 5])
            }
            g => {
                // Ring of g-1 theta-pairs: pair k is pants (2k, 2k+1) glued
                // on sides 0 and 1; side 2 of 2k is glued to side 2 of
                // 2(k+1)+1, closing the chain into a ring.
                let pairs = g - 1;
                let slots = 6 * g - 6;
                let mut gluing = vec![0usize; slots];
                for k in 0..pairs {
                    let a = 2 * k;
                    let b = 2 * k + 1;
                    gluing[a * 3] = b * 3;
                    gluing[b * 3] = a * 3;
                    gluing[a * 3 + 1] = b * 3 + 1;
                    gluing[b * 3 + 1] = a * 3 + 1;
                    let nb = 2 * ((k + 1) % pairs) + 1;
                    gluing[a * 3 + 2] = nb * 3 + 2;
                    gluing[nb * 3 + 2] = a * 3 + 2;
                }
                Self::from_gluing(g, gluing)
            }
        }
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn pants_count(&self) -> usize {
        2 * self.genus - 2
    }

    pub fn curve_count(&self) -> usize {
        3 * self.genus - 3
    }

    pub fn slot_count(&self) -> usize {
        6 * self.genus - 6
    }

    /// Curve label attached to a slot.
    pub fn curve_at(&self, slot: SlotId) -> CurveId {
        self.slot_curve[slot]
    }

    /// The two slots of a curve.
    pub fn slots_of(&self, curve: CurveId) -> (SlotId, SlotId) {
        self.curve_slots[curve]
    }

    pub fn glued_slot(&self, slot: SlotId) -> SlotId {
        self.gluing[slot]
    }

    /// Curve labels on the three boundary slots of a pants.
    pub fn pants_curves(&self, pants: usize) -> [CurveId; 3] {
        [
            self.slot_curve[pants * 3],
            self.slot_curve[pants * 3 + 1],
            self.slot_curve[pants * 3 + 2],
        ]
    }

    /// True if the curve has both slots on the same pants (handle pants).
    pub fn is_handle_curve(&self, curve: CurveId) -> bool {
        let (a, b) = self.curve_slots[curve];
        a / 3 == b / 3
    }
}

/// Dehn-Thurston coordinates of a multicurve relative to a decomposition:
/// per curve an intersection number `m >= 0` and a twist `t`. When `m = 0`
/// the twist counts parallel copies of the decomposition curve and must be
/// non-negative.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DtCoordinates {
    pub m: Vec<Int>,
    pub t: Vec<Int>,
}

impl DtCoordinates {
    pub fn new(m: Vec<Int>, t: Vec<Int>) -> Self {
        DtCoordinates { m, t }
    }

    pub fn zero(curves: usize) -> Self {
        DtCoordinates {
            m: vec![Int::zero(); curves],
            t: vec![Int::zero(); curves],
        }
    }

    /// The full decomposition itself: one copy of every decomposition curve.
    pub fn full_system(pd: &PantsDecomposition) -> Self {
        DtCoordinates {
            m: vec![Int::zero(); pd.curve_count()],
            t: vec![Int::one(); pd.curve_count()],
        }
    }

    /// A single decomposition curve.
    pub fn decomposition_curve(pd: &PantsDecomposition, curve: CurveId) -> Self {
        let mut c = Self::zero(pd.curve_count());
        c.t[curve] = Int::one();
        c
    }

    pub fn from_i64(m: &[i64], t: &[i64]) -> Self {
        DtCoordinates {
            m: m.iter().map(|&v| Int::from(v)).collect(),
            t: t.iter().map(|&v| Int::from(v)).collect(),
        }
    }

    /// Checks admissibility relative to `pd` and reports the first failure.
    pub fn validate(&self, pd: &PantsDecomposition) -> Result<(), PantsError> {
        if self.m.len() != pd.curve_count() || self.t.len() != pd.curve_count() {
            return Err(PantsError::WrongCurveCount {
                expected: pd.curve_count(),
                got: self.m.len(),
            });
        }
        for (i, m) in self.m.iter().enumerate() {
            if m.is_negative() {
                return Err(PantsError::NegativeIntersection(i));
            }
            if m.is_zero() && self.t[i].is_negative() {
                return Err(PantsError::NegativeTwistAtZero {
                    curve: i,
                    twist: self.t[i].clone(),
                });
            }
        }
        for p in 0..pd.pants_count() {
            let [a, b, c] = pd.pants_curves(p);
            // A curve appearing on two slots of the same pants contributes its
            // intersection number twice to that pants.
            let total: Int = &self.m[a] + &self.m[b] + &self.m[c];
            if (&total % 2u8) != Int::zero() {
                return Err(PantsError::OddParity(p));
            }
        }
        Ok(())
    }

    /// Zero-intersection multicurve: a disjoint union of decomposition curves.
    pub fn is_pants_multiple(&self) -> bool {
        self.m.iter().all(|m| m.is_zero())
    }

    /// True when the multicurve is empty.
    pub fn is_empty(&self) -> bool {
        self.m.iter().all(|m| m.is_zero()) && self.t.iter().all(|t| t.is_zero())
    }
}

/// Checks whether coordinates are admissible relative to the decomposition:
/// per-pants parity and the non-negative-twist-at-zero convention. Total
/// function: returns false rather than failing.
pub fn is_admissible_dt(coords: &DtCoordinates, pd: &PantsDecomposition) -> bool {
    coords.validate(pd).is_ok()
}

/// Arc-type counts of a multicurve inside one pair-of-pants: `same[i]` counts
/// arcs with both endpoints on boundary i (waves), `seam(i, j)` arcs joining
/// boundaries i and j.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcTypeCounts {
    pub same: [Int; 3],
    /// Seam counts indexed x12, x13, x23.
    pub seams: [Int; 3],
}

impl ArcTypeCounts {
    pub fn seam(&self, i: usize, j: usize) -> &Int {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        match (i, j) {
            (0, 1) => &self.seams[0],
            (0, 2) => &self.seams[1],
            (1, 2) => &self.seams[2],
            _ => panic!("seam indices must be distinct and in 0..3"),
        }
    }

    /// Boundary intersection number recovered from the counts.
    pub fn boundary_total(&self, i: usize) -> Int {
        let mut total: Int = &self.same[i] * 2;
        for j in 0..3 {
            if j != i {
                total += self.seam(i, j);
            }
        }
        total
    }
}

/// The canonical tight arc-type solution for boundary intersection numbers
/// `(m1, m2, m3)` with even sum.
///
/// When the triangle inequalities hold all arcs are seams,
/// `x_jk = (m_j + m_k - m_i) / 2`. When `m_i > m_j + m_k` the excess is
/// carried by waves at boundary i: `x_ii = (m_i - m_j - m_k) / 2`, the
/// opposite seam count is zero and `x_ij = m_j`, `x_ik = m_k`.
pub fn arc_type_counts(m1: &Int, m2: &Int, m3: &Int) -> Result<ArcTypeCounts, PantsError> {
    let m = [m1.clone(), m2.clone(), m3.clone()];
    for (i, v) in m.iter().enumerate() {
        if v.is_negative() {
            return Err(PantsError::NegativeIntersection(i));
        }
    }
    let total: Int = &m[0] + &m[1] + &m[2];
    if (&total % 2u8) != Int::zero() {
        return Err(PantsError::OddParity(0));
    }
    let mut same = [Int::zero(), Int::zero(), Int::zero()];
    let mut seams = [Int::zero(), Int::zero(), Int::zero()];
    let seam_index = |i: usize, j: usize| -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        match (i, j) {
            (0, 1) => 0,
            (0, 2) => 1,
            _ => 2,
        }
    };
    // At most one boundary can violate the triangle inequality.
    let mut wave_at: Option<usize> = None;
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        if m[i] > &m[j] + &m[k] {
            wave_at = Some(i);
        }
    }
    match wave_at {
        Some(i) => {
            let j = (i + 1) % 3;
            let k = (i + 2) % 3;
            same[i] = (&m[i] - &m[j] - &m[k]) / 2;
            seams[seam_index(i, j)] = m[j].clone();
            seams[seam_index(i, k)] = m[k].clone();
        }
        None => {
            for i in 0..3 {
                let j = (i + 1) % 3;
                let k = (i + 2) % 3;
                seams[seam_index(j, k)] = (&m[j] + &m[k] - &m[i]) / 2;
            }
        }
    }
    Ok(ArcTypeCounts { same, seams })
}

/// Arc-type counts of `coords` in every pants of the decomposition.
pub fn arc_types_per_pants(
    coords: &DtCoordinates,
    pd: &PantsDecomposition,
) -> Result<Vec<ArcTypeCounts>, PantsError> {
    coords.validate(pd)?;
    let mut out = Vec::with_capacity(pd.pants_count());
    for p in 0..pd.pants_count() {
        let [a, b, c] = pd.pants_curves(p);
        out.push(arc_type_counts(&coords.m[a], &coords.m[b], &coords.m[c])?);
    }
    Ok(out)
}
