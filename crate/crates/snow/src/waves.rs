//! Wave detection for curve systems in a pants frame, and the symmetric
//! no-wave check for pairs of complete decomposing systems.
//!
//! A wave of a curve in a pair-of-pants is an arc with both endpoints on the
//! same boundary component. In the canonical tight position such arcs exist
//! at boundary i exactly when `m_i > m_j + m_k`, so wave detection reduces to
//! triangle inequalities on intersection numbers.

use serde::{Deserialize, Serialize};

use crate::mcg::TwistWord;
use crate::pants::{
    arc_type_counts, CurveId, DtCoordinates, Int, PantsDecomposition, PantsError,
};
use num_traits::Zero;

/// A pants in which the wave criterion fires, with the boundary it fires at
/// and the number of wave arcs there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveWitness {
    pub pants: usize,
    /// Side of the pants (0..3) carrying the waves.
    pub side: usize,
    /// Decomposition curve on that side.
    pub curve: CurveId,
    /// Number of wave arcs, `(m_i - m_j - m_k) / 2 > 0`.
    pub count: Int,
}

/// Which direction of a pair a wave was found in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairDirection {
    /// The moved system has a wave relative to the frame decomposition.
    SystemInFrame,
    /// The frame has a wave relative to the moved system's decomposition.
    FrameInSystem,
}

/// A pair of complete decomposing systems: a fixed frame decomposition and a
/// second system given by a mapping-class word, expressed in both directions.
///
/// `system` is the image of the frame curves under `word`, in frame
/// coordinates; `frame_in_system` is the frame curves in the coordinates of
/// the image decomposition, i.e. the image of the frame under `word⁻¹`.
/// Pairs are built by [`crate::mcg::pair_frames`], which checks that the two
/// expressions are inverse to each other.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CdsPair {
    pub frame: PantsDecomposition,
    pub system: DtCoordinates,
    pub frame_in_system: DtCoordinates,
    pub word: TwistWord,
}

/// Verdict of the symmetric no-wave check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnowVerdict {
    pub snow: bool,
    pub direction: Option<PairDirection>,
    pub witness: Option<WaveWitness>,
}

/// Returns the boundary index with a wave for intersection numbers
/// `(m1, m2, m3)`, if any. At most one triangle inequality can fail, so the
/// index is unique.
pub fn pants_has_wave(m1: &Int, m2: &Int, m3: &Int) -> Result<Option<usize>, PantsError> {
    let total: Int = m1 + m2 + m3;
    if (&total % 2u8) != Int::zero() {
        return Err(PantsError::OddParity(0));
    }
    let m = [m1, m2, m3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        if *m[i] > m[j] + m[k] {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Scans every pants of the frame and reports one witness per pants where
/// the curve system has waves. An empty list means the system is wave-free
/// relative to the frame.
pub fn curve_has_wave(
    curve: &DtCoordinates,
    frame: &PantsDecomposition,
) -> Result<Vec<WaveWitness>, PantsError> {
    curve.validate(frame)?;
    let mut out = Vec::new();
    for p in 0..frame.pants_count() {
        let [a, b, c] = frame.pants_curves(p);
        let counts = arc_type_counts(&curve.m[a], &curve.m[b], &curve.m[c])?;
        for side in 0..3 {
            if counts.same[side] > Int::zero() {
                out.push(WaveWitness {
                    pants: p,
                    side,
                    curve: frame.pants_curves(p)[side],
                    count: counts.same[side].clone(),
                });
            }
        }
    }
    Ok(out)
}

/// Symmetric no-wave check: true iff neither member of the pair has a wave
/// relative to the other's decomposition. On failure the verdict records the
/// direction and a witness.
pub fn snow_check(pair: &CdsPair) -> Result<SnowVerdict, PantsError> {
    let forward = curve_has_wave(&pair.system, &pair.frame)?;
    if let Some(w) = forward.into_iter().next() {
        return Ok(SnowVerdict {
            snow: false,
            direction: Some(PairDirection::SystemInFrame),
            witness: Some(w),
        });
    }
    // The image decomposition is combinatorially identical to the frame
    // (mapping classes preserve the pants pattern), so the reverse direction
    // is checked in the same frame against the reverse coordinates.
    let backward = curve_has_wave(&pair.frame_in_system, &pair.frame)?;
    if let Some(w) = backward.into_iter().next() {
        return Ok(SnowVerdict {
            snow: false,
            direction: Some(PairDirection::FrameInSystem),
            witness: Some(w),
        });
    }
    Ok(SnowVerdict {
        snow: true,
        direction: None,
        witness: None,
    })
}

/// Necessary condition for a curve to bound a disk in the handlebody defined
/// by the decomposing system: the curve is one of the decomposition curves,
/// or it has a wave relative to them. Not sufficient.
pub fn meridian_necessary_condition(
    curve: &DtCoordinates,
    cds: &PantsDecomposition,
) -> Result<bool, PantsError> {
    curve.validate(cds)?;
    if curve.is_pants_multiple() && !curve.is_empty() {
        return Ok(true);
    }
    Ok(!curve_has_wave(curve, cds)?.is_empty())
}
