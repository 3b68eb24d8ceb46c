//! Combinatorial train tracks: standard maximal models tight with respect
//! to a pants decomposition, carried weights, elementary splits, and
//! guide-directed derivation with coverage logs.
//!
//! A track is a trivalent branched 1-complex with a ribbon structure: every
//! switch has one large end and two small ends, and the cyclic data at
//! switches determines the boundary of a fibered neighbourhood, traced
//! combinatorially by [`TrainTrack::boundary_components`]. The standard
//! model for a decomposition consists of one core loop per decomposition
//! curve and one connector branch per pair of boundaries in each pants; its
//! carried cone is the no-wave, twist-sign chart of Dehn-Thurston space.

use serde::{Deserialize, Serialize};

use crate::pants::{
    arc_type_counts, is_admissible_dt, CurveId, DtCoordinates, Int, PantsDecomposition,
    PantsError,
};
use num_traits::Zero;

pub type SwitchId = usize;
pub type BranchId = usize;

/// Port of a switch. Looking from the switch along the large branch, away
/// from the switch, the left small end is `SmallLeft`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Port {
    Large,
    SmallLeft,
    SmallRight,
}

impl Port {
    fn index(self) -> usize {
        match self {
            Port::Large => 0,
            Port::SmallLeft => 1,
            Port::SmallRight => 2,
        }
    }
}

/// One end of a branch, attached to a switch port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchEnd {
    pub switch: SwitchId,
    pub port: Port,
}

/// A branch joining two switch ports. `base` counts, per branch of the
/// base track, how many times this branch runs over it (carrying
/// provenance through splits); for a base track every branch covers
/// exactly itself once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    pub ends: [BranchEnd; 2],
    pub base: Vec<Int>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrackError {
    #[error("pants error: {0}")]
    Pants(#[from] PantsError),
    #[error("branch {0} is not large")]
    NotLarge(BranchId),
    #[error("split direction inconsistent with guide weights")]
    DirectionMismatch,
    #[error("weight vector has wrong length {0}, track has {1} branches")]
    WeightLength(usize, usize),
    #[error("guide does not cover the track (zero weight on branch {0})")]
    GuideNotPositive(BranchId),
    #[error("split budget {0} exhausted before coverage")]
    BudgetExhausted(usize),
    #[error("weights are not a carried multicurve")]
    NotCarried,
    #[error("multicurve is not a complete decomposing system")]
    NotComplete,
    #[error("malformed track: {0}")]
    Malformed(String),
}

/// A train track with carrying provenance relative to a base track.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainTrack {
    pub genus: usize,
    pub switch_count: usize,
    pub branches: Vec<Branch>,
}

/// A boundary component of the fibered neighbourhood: the number of cusps
/// passed while tracing it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryComponent {
    pub cusps: usize,
}

/// A complementary region: cusp count and Euler characteristic defect. For
/// maximal tracks every region is a disk (`euler = 1`) with three cusps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub cusps: usize,
    pub euler: i64,
}

impl TrainTrack {
    /// Checks that every switch has its three ports filled exactly once.
    pub fn validate(&self) -> Result<(), TrackError> {
        if 3 * self.switch_count != 2 * self.branches.len() {
            return Err(TrackError::Malformed(format!(
                "{} switches vs {} branches",
                self.switch_count,
                self.branches.len()
            )));
        }
        let mut seen = vec![[false; 3]; self.switch_count];
        for b in &self.branches {
            for e in b.ends {
                if e.switch >= self.switch_count {
                    return Err(TrackError::Malformed(format!(
                        "end at missing switch {}",
                        e.switch
                    )));
                }
                let slot = &mut seen[e.switch][e.port.index()];
                if *slot {
                    return Err(TrackError::Malformed(format!(
                        "switch {} port {:?} used twice",
                        e.switch, e.port
                    )));
                }
                *slot = true;
            }
        }
        Ok(())
    }

    /// The branch end attached at a given switch port.
    pub(crate) fn end_at(&self, switch: SwitchId, port: Port) -> (BranchId, usize) {
        for (i, b) in self.branches.iter().enumerate() {
            for (j, e) in b.ends.iter().enumerate() {
                if e.switch == switch && e.port == port {
                    return (i, j);
                }
            }
        }
        panic!("port {port:?} of switch {switch} is not attached");
    }

    /// Traces the boundary of the fibered neighbourhood. Each state is a
    /// branch end together with a corner (left or right as seen looking
    /// from the branch into the switch); the switch relations pair corners
    /// around each switch, with a cusp between the two small ends.
    pub fn boundary_components(&self) -> Vec<BoundaryComponent> {
        // State: (branch, end index, corner); corner 0 = left. The two
        // corners of a strip side are (b, 0, c) and (b, 1, 1-c); marking
        // sides rather than states keeps each component from being traced
        // a second time in the reverse direction.
        let mut seen = vec![[false; 2]; self.branches.len()];
        let side_of = |e: usize, c: usize| if e == 0 { c } else { 1 - c };
        let mut out = Vec::new();
        for b0 in 0..self.branches.len() {
            for e0 in 0..2 {
                for c0 in 0..2 {
                    if seen[b0][side_of(e0, c0)] {
                        continue;
                    }
                    let mut cusps = 0usize;
                    let (mut b, mut e, mut c) = (b0, e0, c0);
                    loop {
                        if seen[b][side_of(e, c)] {
                            break;
                        }
                        seen[b][side_of(e, c)] = true;
                        let end = self.branches[b].ends[e];
                        // Around the switch: (Large, L) <-> (SmallLeft, R),
                        // (Large, R) <-> (SmallRight, L),
                        // (SmallLeft, L) <-> (SmallRight, R) passing the cusp.
                        let (port, corner, cusp) = match (end.port, c) {
                            (Port::Large, 0) => (Port::SmallLeft, 1, false),
                            (Port::Large, 1) => (Port::SmallRight, 0, false),
                            (Port::SmallLeft, 1) => (Port::Large, 0, false),
                            (Port::SmallRight, 0) => (Port::Large, 1, false),
                            (Port::SmallLeft, 0) => (Port::SmallRight, 1, true),
                            (Port::SmallRight, 1) => (Port::SmallLeft, 0, true),
                            _ => unreachable!(),
                        };
                        if cusp {
                            cusps += 1;
                        }
                        let (nb, ne) = self.end_at(end.switch, port);
                        // Travel to the other end of the next branch; the
                        // corner flips because the two ends look into their
                        // switches from opposite directions.
                        b = nb;
                        e = 1 - ne;
                        c = 1 - corner;
                    }
                    out.push(BoundaryComponent { cusps });
                }
            }
        }
        out
    }

    /// Complementary regions inferred from the Euler budget: the regions of
    /// a track on a closed genus-g surface have total Euler characteristic
    /// χ(Σ) − (switches − branches). When that total equals the number of
    /// boundary components every region is a disk bounded by one component;
    /// otherwise the deficit is reported as a single flagged region of
    /// positive genus or excess boundary.
    pub fn complementary_regions(&self) -> Vec<Region> {
        let comps = self.boundary_components();
        let chi_regions = (2 - 2 * self.genus as i64)
            - (self.switch_count as i64 - self.branches.len() as i64);
        if chi_regions == comps.len() as i64 {
            return comps.iter().map(|c| Region { cusps: c.cusps, euler: 1 }).collect();
        }
        // Non-filling: lump the deficit into one flagged region.
        vec![Region {
            cusps: comps.iter().map(|c| c.cusps).sum(),
            euler: chi_regions,
        }]
    }

    /// True iff every complementary region is a triangle.
    pub fn is_maximal(&self) -> bool {
        self.complementary_regions()
            .iter()
            .all(|r| r.euler == 1 && r.cusps == 3)
    }

    /// Switch-condition check: every large-end weight equals the sum of the
    /// small-end weights at its switch and all weights are non-negative.
    pub fn check_switch_conditions(&self, weights: &[Int]) -> Result<bool, TrackError> {
        if weights.len() != self.branches.len() {
            return Err(TrackError::WeightLength(weights.len(), self.branches.len()));
        }
        if weights.iter().any(|w| *w < Int::zero()) {
            return Ok(false);
        }
        for s in 0..self.switch_count {
            let (l, _) = self.end_at(s, Port::Large);
            let (a, _) = self.end_at(s, Port::SmallLeft);
            let (b, _) = self.end_at(s, Port::SmallRight);
            if weights[l] != &weights[a] + &weights[b] {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// True iff every branch carries strictly positive weight (the carried
    /// object meets every fiber of the track).
    pub fn covers(&self, weights: &[Int]) -> Result<bool, TrackError> {
        if weights.len() != self.branches.len() {
            return Err(TrackError::WeightLength(weights.len(), self.branches.len()));
        }
        Ok(weights.iter().all(|w| *w > Int::zero()))
    }

    /// Pushes carried weights down to the base track through the recorded
    /// carrying provenance.
    pub fn push_to_base(&self, weights: &[Int], base_branches: usize) -> Vec<Int> {
        let mut out = vec![Int::zero(); base_branches];
        for (b, br) in self.branches.iter().enumerate() {
            for (o, c) in out.iter_mut().zip(br.base.iter()) {
                *o += c * &weights[b];
            }
        }
        debug_assert!(self.branches.iter().all(|br| br.base.len() == base_branches));
        out
    }
}

/// Twist-sign chart selector for standard models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TwistChart {
    /// Carries curves with `t_k >= 0` on every decomposition curve.
    RightTwisting,
    /// Carries curves with `t_k <= 0`.
    LeftTwisting,
}

/// A standard model track together with its embedding record relative to
/// the decomposition it is tight with respect to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StandardModel {
    pub track: TrainTrack,
    pub chart: TwistChart,
    /// Branch ids of the connector in pants `p` joining boundary sides
    /// `i < j`, indexed `[p][pair]` with pair order (0,1), (0,2), (1,2).
    pub connectors: Vec<[BranchId; 3]>,
    /// Branch ids of the four core-loop arcs of each decomposition curve,
    /// in cyclic order around the loop.
    pub loop_arcs: Vec<[BranchId; 4]>,
    /// Embedding record for tightness checks: true while the construction
    /// invariants (loops on decomposition curves, connectors joining
    /// distinct boundaries through the pants triangles) are untouched.
    pub embedding_intact: bool,
}

/// Builds the standard maximal track tight with respect to `pd`.
///
/// Per decomposition curve there is one core loop carrying four switches:
/// two connector attachments from each of the two adjacent pants sides. Per
/// pants there are three connector branches, one per pair of boundary
/// sides. Counting gives 12g−12 switches, 18g−18 branches and 4g−4
/// triangle regions.
pub fn standard_track(
    pd: &PantsDecomposition,
    chart: TwistChart,
) -> Result<StandardModel, TrackError> {
    // Chirality of the attachment: in the right-twisting model every
    // connector merges with the loop winding along the positive loop
    // direction, so both the entering stub below the loop and the exiting
    // stub above it sit on the small-right ports of their switches. The
    // left-twisting model is the mirror image with the loop run backwards,
    // which also reverses the order in which the two stubs of each window
    // land on the loop.
    match chart {
        TwistChart::RightTwisting => build_standard_roles(
            pd,
            chart,
            Port::SmallRight,
            Port::SmallRight,
            [false, false],
            [true, true, false, false],
        ),
        TwistChart::LeftTwisting => build_standard_roles(
            pd,
            chart,
            Port::SmallLeft,
            Port::SmallLeft,
            [true, true],
            [true, true, false, false],
        ),
    }
}

/// `roles[pos]` is true for a merge switch; exactly two merges and two
/// exits per loop. Window flips reverse the attachment order per side.
fn build_standard_roles(
    pd: &PantsDecomposition,
    chart: TwistChart,
    cp_merge: Port,
    cp_exit: Port,
    flips: [bool; 2],
    roles: [bool; 4],
) -> Result<StandardModel, TrackError> {
    let g = pd.genus();
    let curves = pd.curve_count();
    let pants = pd.pants_count();
    // Switches: curve k owns switches 4k..4k+3, in cyclic order around its
    // loop. Positions 0,1 are merges receiving the side-0 connector ends;
    // positions 2,3 are exits releasing the side-1 ends.
    let switch_count = 4 * curves;
    let mut branches = Vec::new();
    let mut next_point = vec![[0usize; 2]; curves];
    let mut connectors = vec![[usize::MAX; 3]; pants];
    let side_of = |slot: usize, pdd: &PantsDecomposition, k: CurveId| -> usize {
        let (s0, _) = pdd.slots_of(k);
        if s0 == slot {
            0
        } else {
            1
        }
    };
    for p in 0..pants {
        let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
        for (pi, (i, j)) in pairs.into_iter().enumerate() {
            let id = branches.len();
            let mut ends = Vec::new();
            for side in [i, j] {
                let slot = 3 * p + side;
                let k = pd.curve_at(slot);
                let s = side_of(slot, pd, k);
                let mut nth = next_point[k][s];
                next_point[k][s] += 1;
                if flips[s] {
                    nth = 1 - nth;
                }
                // Side-0 ends take the merge positions in loop order,
                // side-1 ends the exit positions.
                let slots: Vec<usize> = (0..4)
                    .filter(|&q| roles[q] == (s == 0))
                    .collect();
                let pos = slots[nth];
                let port = if s == 0 { cp_merge } else { cp_exit };
                ends.push(BranchEnd { switch: 4 * k + pos, port });
            }
            branches.push(Branch {
                ends: [ends[0], ends[1]],
                base: Vec::new(),
            });
            connectors[p][pi] = id;
        }
    }
    // Core loop arcs: arc a runs from switch 4k+a to 4k+(a+1). At a merge
    // the outgoing arc is the large end and the incoming arc takes the
    // small port the connector left free; at an exit the incoming arc is
    // the large end and the outgoing arc takes the free small port.
    let other = |p: Port| -> Port {
        if p == Port::SmallLeft {
            Port::SmallRight
        } else {
            Port::SmallLeft
        }
    };
    let mut loop_arcs = vec![[usize::MAX; 4]; curves];
    for k in 0..curves {
        for a in 0..4 {
            let id = branches.len();
            let from = 4 * k + a;
            let to = 4 * k + (a + 1) % 4;
            // Role at the `from` switch (the arc is outgoing there).
            let from_port = if roles[a] { Port::Large } else { other(cp_exit) };
            // Role at the `to` switch (the arc is incoming there).
            let to_pos = (a + 1) % 4;
            let to_port = if roles[to_pos] { other(cp_merge) } else { Port::Large };
            branches.push(Branch {
                ends: [
                    BranchEnd { switch: from, port: from_port },
                    BranchEnd { switch: to, port: to_port },
                ],
                base: Vec::new(),
            });
            loop_arcs[k][a] = id;
        }
    }
    let mut track = TrainTrack {
        genus: g,
        switch_count,
        branches,
    };
    let n = track.branches.len();
    for (i, b) in track.branches.iter_mut().enumerate() {
        let mut unit = vec![Int::zero(); n];
        unit[i] = Int::from(1);
        b.base = unit;
    }
    track.validate()?;
    Ok(StandardModel {
        track,
        chart,
        connectors,
        loop_arcs,
        embedding_intact: true,
    })
}

/// Tightness of a standard model relative to its decomposition: the
/// singular fibers (switch cusps) lie on decomposition curves, every
/// connector joins two distinct boundary sides of its pants, and the loops
/// lie on the decomposition curves. These are the construction invariants
/// of [`standard_track`], recorded in the embedding record; a model whose
/// record has been invalidated (fixture surgery) fails.
pub fn is_tight(model: &StandardModel, pd: &PantsDecomposition) -> bool {
    if !model.embedding_intact {
        return false;
    }
    if model.track.validate().is_err() {
        return false;
    }
    if model.connectors.len() != pd.pants_count()
        || model.loop_arcs.len() != pd.curve_count()
    {
        return false;
    }
    // Connectors must join distinct sides: their two ends lie on loops of
    // the two distinct curves bounding those sides (or two attachment
    // points that are distinct even for a curve meeting the pants twice).
    for p in 0..pd.pants_count() {
        for c in model.connectors[p] {
            let [e0, e1] = model.track.branches[c].ends;
            if e0 == e1 {
                return false;
            }
        }
    }
    true
}

/// Carried weights of an admissible curve system on a standard model, or
/// `None` when the coordinates leave the model's chart (a wave arc or a
/// twist of the wrong sign cannot run along the track).
pub fn is_carried(
    coords: &DtCoordinates,
    model: &StandardModel,
    pd: &PantsDecomposition,
) -> Result<Option<Vec<Int>>, TrackError> {
    coords.validate(pd)?;
    if !is_admissible_dt(coords, pd) {
        return Ok(None);
    }
    let mut weights = vec![Int::zero(); model.track.branches.len()];
    // Connector weights are the pants arc counts; a same-boundary arc is a
    // wave and leaves the chart.
    for p in 0..pd.pants_count() {
        let [a, b, c] = pd.pants_curves(p);
        let counts = arc_type_counts(&coords.m[a], &coords.m[b], &coords.m[c])?;
        if counts.same.iter().any(|s| *s > Int::zero()) {
            return Ok(None);
        }
        let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
        for (pi, (i, j)) in pairs.into_iter().enumerate() {
            weights[model.connectors[p][pi]] = counts.seam(i, j).clone();
        }
    }
    // Loop arcs: solved from the switch conditions with the free winding
    // weight equal to |t_k|; the chart requires the matching twist sign.
    for k in 0..pd.curve_count() {
        let t = &coords.t[k];
        let theta = match model.chart {
            TwistChart::RightTwisting => {
                if *t < Int::zero() && !coords.m[k].is_zero() {
                    return Ok(None);
                }
                t.clone()
            }
            TwistChart::LeftTwisting => {
                if coords.m[k].is_zero() {
                    // Core-curve components wind the loop either way; the
                    // zero-intersection convention stores them with t >= 0.
                    t.clone()
                } else if *t > Int::zero() {
                    return Ok(None);
                } else {
                    -t.clone()
                }
            }
        };
        if theta < Int::zero() {
            return Ok(None);
        }
        // Connector weights entering at the two switch positions of side 0
        // (positions 0 and 1) and leaving at side 1 (positions 2 and 3).
        let (mut c_in, mut c_out) = (Vec::new(), Vec::new());
        for (br, w) in model
            .track
            .branches
            .iter()
            .zip(weights.iter())
            .take(3 * pd.pants_count())
        {
            for e in br.ends {
                if e.switch / 4 == k {
                    let pos = e.switch % 4;
                    if pos < 2 {
                        c_in.push((pos, w.clone()));
                    } else {
                        c_out.push((pos, w.clone()));
                    }
                }
            }
        }
        let at = |v: &[(usize, Int)], pos: usize| -> Int {
            v.iter()
                .filter(|(p, _)| *p == pos)
                .map(|(_, w)| w.clone())
                .sum()
        };
        // Arc a runs from switch a to a+1; switch conditions:
        // A_a = A_{a-1} + c(a) at merges (positions 0,1) and
        // A_{a-1} = A_a + c(a) at exits (positions 2,3); base A_3 = theta.
        let c0 = at(&c_in, 0);
        let c1 = at(&c_in, 1);
        let c3 = at(&c_out, 3);
        let a3 = theta;
        let a0 = &a3 + &c0;
        let a1 = &a0 + &c1;
        let a2 = &a3 + &c3;
        for (i, v) in [a0, a1, a2, a3].into_iter().enumerate() {
            weights[model.loop_arcs[k][i]] = v;
        }
    }
    debug_assert_eq!(model.track.check_switch_conditions(&weights), Ok(true));
    Ok(Some(weights))
}

/// Reads Dehn-Thurston coordinates back off a standard-model weight vector.
pub fn weights_to_coords(
    weights: &[Int],
    model: &StandardModel,
    pd: &PantsDecomposition,
) -> Result<DtCoordinates, TrackError> {
    if weights.len() != model.track.branches.len() {
        return Err(TrackError::WeightLength(
            weights.len(),
            model.track.branches.len(),
        ));
    }
    let mut m = vec![Int::zero(); pd.curve_count()];
    let mut t = vec![Int::zero(); pd.curve_count()];
    for k in 0..pd.curve_count() {
        // Boundary weight: sum of connector weights entering from side 0.
        let mut mk = Int::zero();
        for (br, w) in model
            .track
            .branches
            .iter()
            .zip(weights.iter())
            .take(3 * pd.pants_count())
        {
            for e in br.ends {
                if e.switch / 4 == k && e.switch % 4 < 2 {
                    mk += w;
                }
            }
        }
        let theta = weights[model.loop_arcs[k][3]].clone();
        t[k] = match model.chart {
            TwistChart::RightTwisting => theta,
            TwistChart::LeftTwisting if mk.is_zero() => theta,
            TwistChart::LeftTwisting => -theta,
        };
        m[k] = mk;
    }
    Ok(DtCoordinates::new(m, t))
}

/// Direction of an elementary split at a large branch. Looking along the
/// branch with its two large-end switches at the ends, `Left` reroutes the
/// flow joining the two small-left corners onto the new diagonal branch,
/// `Right` the two small-right corners, `Central` disconnects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitDirection {
    Left,
    Right,
    Central,
}

/// Record of one elementary split: enough to replay or invert the weight
/// transfer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMove {
    pub branch: BranchId,
    pub direction: SplitDirection,
    /// Corner branches `[a_left, a_right, b_left, b_right]` at the two ends.
    pub corners: [BranchId; 4],
    /// Switches at the two ends of the split branch.
    pub switches: [SwitchId; 2],
}

impl StandardModel {
    /// Fixture helper: invalidate the embedding record (tests use this to
    /// model a cusp moved off the decomposition).
    pub fn break_embedding(&mut self) {
        self.embedding_intact = false;
    }
}

/// The corner branches of a large branch `e`: at each end switch, the
/// branches on the small-left and small-right ports.
fn split_corners(
    track: &TrainTrack,
    branch: BranchId,
) -> Result<([(BranchId, usize); 4], [SwitchId; 2]), TrackError> {
    let b = &track.branches[branch];
    if b.ends.iter().any(|e| e.port != Port::Large) {
        return Err(TrackError::NotLarge(branch));
    }
    let u = b.ends[0].switch;
    let v = b.ends[1].switch;
    let al = track.end_at(u, Port::SmallLeft);
    let ar = track.end_at(u, Port::SmallRight);
    let bl = track.end_at(v, Port::SmallLeft);
    let br = track.end_at(v, Port::SmallRight);
    Ok(([al, ar, bl, br], [u, v]))
}

/// The split direction forced by a carried guide: compares the flow of the
/// guide through the branch. Returns the direction and the weight of the
/// diagonal after the split.
pub fn guide_direction(
    track: &TrainTrack,
    branch: BranchId,
    weights: &[Int],
) -> Result<(SplitDirection, Int), TrackError> {
    let ([al, _ar, _bl, br], _) = split_corners(track, branch)?;
    // Strand order in the branch rectangle pairs the u-side small-left
    // corner against the v-side small-right corner (they lie on the same
    // side of the rectangle).
    let d = &weights[al.0] - &weights[br.0];
    Ok(if d > Int::zero() {
        (SplitDirection::Left, d)
    } else if d < Int::zero() {
        (SplitDirection::Right, -d)
    } else {
        (SplitDirection::Central, Int::zero())
    })
}

/// Performs an elementary split at a large branch, rewriting the track in
/// place and returning the move record. The split branch keeps its id as
/// the new diagonal (except for central splits, which delete it and merge
/// the through-branches).
pub fn split(
    track: &mut TrainTrack,
    branch: BranchId,
    direction: SplitDirection,
) -> Result<SplitMove, TrackError> {
    let (corner_ends, [u, v]) = split_corners(track, branch)?;
    let [al, ar, bl, br] = corner_ends;
    let corners = [al.0, ar.0, bl.0, br.0];
    let mut attach = |end: (BranchId, usize), sw: SwitchId, port: Port| {
        track.branches[end.0].ends[end.1] = BranchEnd { switch: sw, port };
    };
    match direction {
        SplitDirection::Left => {
            // Diagonal carries the small-left to small-left flow; the two
            // right corners swap switches past it. New attachments:
            //   u: Large = al, SmallLeft = e', SmallRight = br
            //   v: Large = bl, SmallLeft = e', SmallRight = ar
            attach(al, u, Port::Large);
            attach(bl, v, Port::Large);
            attach(br, u, Port::SmallRight);
            attach(ar, v, Port::SmallRight);
            let e = &mut track.branches[branch];
            e.ends = [
                BranchEnd { switch: u, port: Port::SmallLeft },
                BranchEnd { switch: v, port: Port::SmallLeft },
            ];
        }
        SplitDirection::Right => {
            attach(ar, u, Port::Large);
            attach(br, v, Port::Large);
            attach(bl, u, Port::SmallLeft);
            attach(al, v, Port::SmallLeft);
            let e = &mut track.branches[branch];
            e.ends = [
                BranchEnd { switch: u, port: Port::SmallRight },
                BranchEnd { switch: v, port: Port::SmallRight },
            ];
        }
        SplitDirection::Central => {
            // Merge the through-flows: a_left joins b_right and a_right
            // joins b_left; both end switches disappear.
            merge_central(track, branch, corner_ends, [u, v])?;
        }
    }
    // Carrying provenance: the two corner branches that slid past the
    // split branch now run over its rectangle as well; the diagonal keeps
    // the rectangle as its own image.
    if direction != SplitDirection::Central {
        let ebase = track.branches[branch].base.clone();
        let moved = match direction {
            SplitDirection::Left => [corners[1], corners[3]],
            SplitDirection::Right => [corners[0], corners[2]],
            SplitDirection::Central => unreachable!(),
        };
        for m in moved {
            for (x, e) in track.branches[m].base.iter_mut().zip(ebase.iter()) {
                *x += e;
            }
        }
    }
    track.validate()?;
    Ok(SplitMove {
        branch,
        direction,
        corners,
        switches: [u, v],
    })
}

/// Central split: delete the large branch, merge the two through-flows and
/// drop the two end switches.
fn merge_central(
    track: &mut TrainTrack,
    branch: BranchId,
    [al, ar, bl, br]: [(BranchId, usize); 4],
    [u, v]: [SwitchId; 2],
) -> Result<(), TrackError> {
    let (al, ar, bl, br) = (al.0, ar.0, bl.0, br.0);
    if al == br || ar == bl {
        return Err(TrackError::Malformed(
            "central split would close a loop onto itself".into(),
        ));
    }
    let ebase = track.branches[branch].base.clone();
    // a_left absorbs b_right: its end at u is replaced by b_right's far end.
    let far = |t: &TrainTrack, b: BranchId, sw: SwitchId| -> BranchEnd {
        let ends = t.branches[b].ends;
        if ends[0].switch == sw {
            ends[1]
        } else {
            ends[0]
        }
    };
    let far_br = far(track, br, v);
    let far_bl = far(track, bl, v);
    let base_br = track.branches[br].base.clone();
    let base_bl = track.branches[bl].base.clone();
    for e in &mut track.branches[al].ends {
        if e.switch == u {
            *e = far_br;
        }
    }
    for (x, (e, o)) in track.branches[al]
        .base
        .iter_mut()
        .zip(ebase.iter().zip(base_br.iter()))
    {
        *x += e + o;
    }
    for e in &mut track.branches[ar].ends {
        if e.switch == u {
            *e = far_bl;
        }
    }
    for (x, (e, o)) in track.branches[ar]
        .base
        .iter_mut()
        .zip(ebase.iter().zip(base_bl.iter()))
    {
        *x += e + o;
    }
    // Remove branch, bl, br and switches u, v, compacting ids.
    let mut dead_branches = [branch, bl, br];
    dead_branches.sort_unstable();
    for &d in dead_branches.iter().rev() {
        track.branches.remove(d);
    }
    let mut dead_switches = [u, v];
    dead_switches.sort_unstable();
    for b in &mut track.branches {
        for e in &mut b.ends {
            let shift = dead_switches.iter().filter(|&&d| d < e.switch).count();
            e.switch -= shift;
        }
    }
    track.switch_count -= 2;
    Ok(())
}

/// Pushes a weight vector of the pre-split track through a recorded split,
/// returning the weights on the post-split track, or `None` when the
/// carried object does not survive the chosen direction.
pub fn transfer_weights(
    pre: &[Int],
    mv: &SplitMove,
) -> Option<Vec<Int>> {
    let [al, _ar, _bl, br] = mv.corners;
    let d = &pre[al] - &pre[br];
    let new = match mv.direction {
        SplitDirection::Left => {
            if d < Int::zero() {
                return None;
            }
            d
        }
        SplitDirection::Right => {
            if d > Int::zero() {
                return None;
            }
            -d
        }
        SplitDirection::Central => {
            if !d.is_zero() {
                return None;
            }
            Int::zero()
        }
    };
    let mut out = pre.to_vec();
    match mv.direction {
        SplitDirection::Central => {
            // Branch ids shift down: delete branch, bl, br entries.
            let mut dead = [mv.branch, mv.corners[2], mv.corners[3]];
            dead.sort_unstable();
            for &idx in dead.iter().rev() {
                out.remove(idx);
            }
        }
        _ => out[mv.branch] = new,
    }
    Some(out)
}

/// Integer basis of the switch-condition kernel: weight vectors (not
/// necessarily non-negative) spanning all solutions of the switch
/// equations. Carried cones are the non-negative integer points of this
/// lattice, so shifting a known interior point by small basis combinations
/// samples the cone.
pub fn switch_kernel(track: &TrainTrack) -> Vec<Vec<Int>> {
    use num_rational::BigRational;
    let rows = track.switch_count;
    let cols = track.branches.len();
    let mut m = vec![vec![BigRational::from_integer(0.into()); cols]; rows];
    for s in 0..rows {
        let (l, _) = track.end_at(s, Port::Large);
        let (a, _) = track.end_at(s, Port::SmallLeft);
        let (b, _) = track.end_at(s, Port::SmallRight);
        m[s][l] += BigRational::from_integer(1.into());
        m[s][a] -= BigRational::from_integer(1.into());
        m[s][b] -= BigRational::from_integer(1.into());
    }
    // Gaussian elimination to reduced echelon form.
    let mut pivot_of_col = vec![None; cols];
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].clone();
        for x in &mut m[r] {
            *x /= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let delta = &f * &m[r][j];
                    m[i][j] -= delta;
                }
            }
        }
        pivot_of_col[c] = Some(r);
        r += 1;
        if r == rows {
            break;
        }
    }
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivot_of_col[free].is_some() {
            continue;
        }
        let mut v = vec![BigRational::from_integer(0.into()); cols];
        v[free] = BigRational::from_integer(1.into());
        for c in 0..cols {
            if let Some(pr) = pivot_of_col[c] {
                v[c] = -m[pr][free].clone();
            }
        }
        // Clear denominators.
        let lcm = v.iter().fold(Int::from(1), |acc, x| {
            num_integer::lcm(acc, x.denom().clone())
        });
        basis.push(
            v.iter()
                .map(|x| x.numer() * (&lcm / x.denom()))
                .collect(),
        );
    }
    basis
}

/// One derivation level: the split sequence performed, the per-cusp
/// coverage logs over the level's base track, and the resulting track.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub track: TrainTrack,
    pub splits: Vec<SplitMove>,
    /// For each cusp (indexed by its switch), the sorted set of base
    /// branches its unzipping trail has swept through.
    pub coverage: Vec<Vec<BranchId>>,
    /// The guide re-expressed as weights on the derived track.
    pub guide: Vec<Int>,
}

/// Guide-directed derivation: split along large branches in the direction
/// the guide forces, logging each swept rectangle to the two cusps at the
/// split, until every cusp's trail has covered every branch of the base.
///
/// The scheduler always splits the lowest-numbered splittable branch,
/// making the result deterministic. Branches where the guide balances are
/// skipped; if nothing is splittable before coverage completes the guide
/// has closed up.
pub fn derive(base: &TrainTrack, guide: &[Int], max_splits: usize) -> Result<Derivation, TrackError> {
    if guide.len() != base.branches.len() {
        return Err(TrackError::WeightLength(guide.len(), base.branches.len()));
    }
    if let Some(z) = guide.iter().position(|w| *w <= Int::zero()) {
        return Err(TrackError::GuideNotPositive(z));
    }
    if base.check_switch_conditions(guide)? != true {
        return Err(TrackError::Malformed("guide violates switch conditions".into()));
    }
    let mut track = base.clone();
    let total = track.branches.len();
    for (i, b) in track.branches.iter_mut().enumerate() {
        let mut unit = vec![Int::zero(); total];
        unit[i] = Int::from(1);
        b.base = unit;
    }
    let mut g = guide.to_vec();
    let mut coverage: Vec<std::collections::BTreeSet<BranchId>> =
        vec![Default::default(); track.switch_count];
    let mut splits = Vec::new();
    let mut done = false;
    // Rounds of full splits: every large branch is split once per round in
    // branch order, advancing all unzipping trails evenly.
    while !done {
        let larges: Vec<BranchId> = (0..track.branches.len())
            .filter(|&b| track.branches[b].ends.iter().all(|e| e.port == Port::Large))
            .collect();
        let mut acted = false;
        for b in larges {
            if coverage.iter().all(|c| c.len() == total) {
                done = true;
                break;
            }
            if splits.len() >= max_splits {
                return Err(TrackError::BudgetExhausted(max_splits));
            }
            let (dir, _) = guide_direction(&track, b, &g)?;
            if dir == SplitDirection::Central {
                continue;
            }
            let swept: Vec<BranchId> = track.branches[b]
                .base
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, _)| i)
                .collect();
            let mv = split(&mut track, b, dir)?;
            g = transfer_weights(&g, &mv).expect("guide survives its own split");
            for sw in mv.switches {
                coverage[sw].extend(swept.iter().cloned());
            }
            splits.push(mv);
            acted = true;
        }
        if !done && !acted {
            return Err(TrackError::Malformed(
                "guide closes up before covering the base".into(),
            ));
        }
    }
    Ok(Derivation {
        track,
        splits,
        coverage: coverage.into_iter().map(|s| s.into_iter().collect()).collect(),
        guide: g,
    })
}

/// A tower of derived tracks over a standard model: level k+1 is derived
/// from level k with respect to the same guide, re-expressed at each level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tower {
    pub base: StandardModel,
    pub levels: Vec<Derivation>,
    /// The guide expressed on the base track.
    pub guide: Vec<Int>,
}

impl Tower {
    pub fn height(&self) -> usize {
        self.levels.len()
    }

    /// The track at level `j` (level 0 is the base).
    pub fn track_at(&self, j: usize) -> &TrainTrack {
        if j == 0 {
            &self.base.track
        } else {
            &self.levels[j - 1].track
        }
    }

    /// Replays every recorded split from the base and checks the recorded
    /// tracks, coverage logs and re-expressed guides are reproduced.
    pub fn replay(&self) -> Result<(), TrackError> {
        let mut prev = self.base.track.clone();
        let mut guide = self.guide.clone();
        for (k, level) in self.levels.iter().enumerate() {
            let redone = derive(&prev, &guide, level.splits.len())?;
            if &redone != level {
                return Err(TrackError::Malformed(format!(
                    "level {} does not replay",
                    k + 1
                )));
            }
            prev = level.track.clone();
            guide = level.guide.clone();
        }
        Ok(())
    }
}

/// Builds an n-tower by iterated derivation; `max_splits` bounds each
/// level separately.
pub fn build_tower(
    model: &StandardModel,
    guide: &[Int],
    n: usize,
    max_splits: usize,
) -> Result<Tower, TrackError> {
    let mut levels = Vec::new();
    let mut prev = model.track.clone();
    let mut g = guide.to_vec();
    for _ in 0..n {
        let level = derive(&prev, &g, max_splits)?;
        prev = level.track.clone();
        g = level.guide.clone();
        levels.push(level);
    }
    Ok(Tower {
        base: model.clone(),
        levels,
        guide: guide.to_vec(),
    })
}

/// Pushes base-model weights up a tower to level `j`, or `None` when the
/// carried object does not survive some recorded split.
pub fn lift_weights(tower: &Tower, base_weights: &[Int], j: usize) -> Option<Vec<Int>> {
    let mut w = base_weights.to_vec();
    for level in tower.levels.iter().take(j) {
        for mv in &level.splits {
            w = transfer_weights(&w, mv)?;
        }
    }
    Some(w)
}

/// Carried weights of a curve on tower level `j`.
pub fn is_carried_at(
    coords: &DtCoordinates,
    tower: &Tower,
    j: usize,
    pd: &PantsDecomposition,
) -> Result<Option<Vec<Int>>, TrackError> {
    let Some(w0) = is_carried(coords, &tower.base, pd)? else {
        return Ok(None);
    };
    Ok(lift_weights(tower, &w0, j))
}

/// A transverse crossing between a branch of the right track and a branch
/// of the left track, with its position along each branch (order of
/// crossings along the branch orientation) and the local rotation: `rot =
/// 1` means the counterclockwise order of strand germs around the crossing
/// is (right-forward, left-forward, right-backward, left-backward); `rot =
/// -1` swaps the two left germs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crossing {
    pub r_branch: BranchId,
    pub r_pos: usize,
    pub l_branch: BranchId,
    pub l_pos: usize,
    pub rot: i8,
}

/// Two maximal tracks in transverse position, with the overlay recorded as
/// the ordered crossing lists; complementary regions of the union are
/// recovered from the rotation data by [`check_transverse`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransversePair {
    pub right: StandardModel,
    pub left: StandardModel,
    pub crossings: Vec<Crossing>,
}

/// Builds the shipped transverse pair for a decomposition: the
/// right-twisting standard model together with the left-twisting model
/// with its core loops pushed off the decomposition curves toward side 1.
///
/// In each annulus the left model's entering stubs then cross the right
/// loop (on its first two arcs) and the right model's exiting stubs cross
/// the left loop (on its last two arcs); connectors of the two models run
/// parallel inside every pair of pants and nowhere else meet.
pub fn transverse_standard_pair(pd: &PantsDecomposition) -> Result<TransversePair, TrackError> {
    let right = standard_track(pd, TwistChart::RightTwisting)?;
    let left = standard_track(pd, TwistChart::LeftTwisting)?;
    let mut crossings = Vec::new();
    // One crossing per left-connector end. A left connector runs parallel
    // to its right-model window-mate, displaced against the induced
    // boundary orientation at its first end and with it at its second; at
    // a side-0 window the left stub then crosses the right loop next to
    // the mate's merge switch, while at a side-1 window the mate's exit
    // stub crosses the left loop next to the left exit switch.
    let nb = 3 * pd.pants_count();
    for lb in 0..nb {
        for idx in 0..2 {
            let end = left.track.branches[lb].ends[idx];
            let (k, q) = (end.switch / 4, end.switch % 4);
            let against = idx == 0;
            if q < 2 {
                // Displacement in loop coordinates: +x is against the
                // induced orientation of a side-0 window.
                let p = 1 - q;
                let (arc, near_start) = if against { (p, true) } else { ((p + 3) % 4, false) };
                crossings.push(Crossing {
                    r_branch: right.loop_arcs[k][arc],
                    r_pos: if near_start { 0 } else { usize::MAX },
                    l_branch: lb,
                    l_pos: if idx == 0 { 0 } else { usize::MAX },
                    rot: if idx == 1 { 1 } else { -1 },
                });
            } else {
                // At a side-1 window, +x is with the induced orientation.
                let p = 5 - q;
                let (rb, re) = right.track.end_at(4 * k + p, Port::SmallRight);
                let plus = !against;
                let (larc, near_start) = if plus { (q, true) } else { ((q + 3) % 4, false) };
                crossings.push(Crossing {
                    r_branch: rb,
                    r_pos: if re == 0 { 0 } else { usize::MAX },
                    l_branch: left.loop_arcs[k][larc],
                    l_pos: if near_start { 0 } else { usize::MAX },
                    rot: if re == 0 { 1 } else { -1 },
                });
            }
        }
    }
    // Crossings near a branch's second end come after any near its first.
    for side in [false, true] {
        let count = |cs: &[Crossing], b: BranchId| {
            cs.iter()
                .filter(|c| if side { c.l_branch == b } else { c.r_branch == b })
                .count()
        };
        let counts: Vec<usize> = crossings
            .iter()
            .map(|c| count(&crossings, if side { c.l_branch } else { c.r_branch }))
            .collect();
        for (c, n) in crossings.iter_mut().zip(counts) {
            let pos = if side { &mut c.l_pos } else { &mut c.r_pos };
            if *pos == usize::MAX {
                *pos = n - 1;
            }
        }
    }
    Ok(TransversePair {
        right,
        left,
        crossings,
    })
}

/// Verifies transversality of a pair from its overlay data: both tracks
/// are maximal and tight, the crossing lists are consistent, and the union
/// embeds in the genus-g surface with every complementary region an m-gon
/// with m >= 3 (counting crossing corners and cusps).
pub fn check_transverse(pair: &TransversePair, pd: &PantsDecomposition) -> bool {
    let r = &pair.right.track;
    let l = &pair.left.track;
    if r.validate().is_err() || l.validate().is_err() {
        return false;
    }
    if !r.is_maximal() || !l.is_maximal() {
        return false;
    }
    if !is_tight(&pair.right, pd) || !is_tight(&pair.left, pd) {
        return false;
    }
    // Crossing positions along each branch must be exactly 0..count.
    for side in [false, true] {
        let nb = if side { l.branches.len() } else { r.branches.len() };
        let mut per: Vec<Vec<usize>> = vec![Vec::new(); nb];
        for c in &pair.crossings {
            let (b, p) = if side {
                (c.l_branch, c.l_pos)
            } else {
                (c.r_branch, c.r_pos)
            };
            if b >= nb {
                return false;
            }
            per[b].push(p);
        }
        for mut v in per {
            v.sort_unstable();
            if v.iter().enumerate().any(|(i, &p)| i != p) {
                return false;
            }
        }
    }
    union_regions_ok(pair)
}

/// Face-traces the union of the two tracks from the rotation data.
fn union_regions_ok(pair: &TransversePair) -> bool {
    let r = &pair.right.track;
    let l = &pair.left.track;
    let nr = r.switch_count;
    let nl = l.switch_count;
    let nx = pair.crossings.len();
    // Vertex slots: switches have [Large, SmallLeft, SmallRight] in
    // counterclockwise order; crossings have four germs per `rot`.
    let nv = nr + nl + nx;
    let deg = |v: usize| if v < nr + nl { 3 } else { 4 };
    // Build segments: (vertex, slot) pairs per branch of each track.
    // Crossing slots: 0 = right-forward, 2 = right-backward; the left
    // strand's forward germ is slot 1 for rot=1 and slot 3 for rot=-1.
    let mut seg: Vec<[(usize, usize); 2]> = Vec::new();
    for side in [false, true] {
        let (track, voff) = if side { (l, nr) } else { (r, 0) };
        for (b, br) in track.branches.iter().enumerate() {
            let mut xs: Vec<(usize, &Crossing)> = pair
                .crossings
                .iter()
                .enumerate()
                .filter(|(_, c)| (if side { c.l_branch } else { c.r_branch }) == b)
                .collect();
            xs.sort_by_key(|(_, c)| if side { c.l_pos } else { c.r_pos });
            let port_slot = |p: Port| p.index();
            let mut prev = (voff + br.ends[0].switch, port_slot(br.ends[0].port));
            for (i, c) in xs {
                let v = nr + nl + i;
                let (back, fwd) = if side {
                    if c.rot == 1 { (3, 1) } else { (1, 3) }
                } else {
                    (2, 0)
                };
                seg.push([prev, (v, back)]);
                prev = (v, fwd);
            }
            seg.push([prev, (voff + br.ends[1].switch, port_slot(br.ends[1].port))]);
        }
    }
    // Every slot must be used exactly once.
    let mut owner: Vec<Vec<Option<usize>>> = (0..nv).map(|v| vec![None; deg(v)]).collect();
    for (i, s) in seg.iter().enumerate() {
        for &(v, sl) in s {
            if sl >= deg(v) || owner[v][sl].is_some() {
                return false;
            }
            owner[v][sl] = Some(i);
        }
    }
    if owner.iter().flatten().any(|o| o.is_none()) {
        return false;
    }
    // Connectivity over segments.
    let mut comp = vec![usize::MAX; nv];
    let mut stack = vec![0usize];
    comp[0] = 0;
    while let Some(v) = stack.pop() {
        for sl in 0..deg(v) {
            let s = owner[v][sl].unwrap();
            for &(w, _) in &seg[s] {
                if comp[w] == usize::MAX {
                    comp[w] = 0;
                    stack.push(w);
                }
            }
        }
    }
    let connected = !comp.iter().any(|&c| c == usize::MAX);
    // Face tracing: arriving at (v, slot), leave through the clockwise
    // neighbour slot. Count corners: every crossing passage is a corner;
    // a switch passage is a cusp exactly when it turns from small-right
    // to small-left.
    let mut visited = vec![[false; 2]; seg.len()];
    let mut faces = 0usize;
    let mut ok = true;
    for s0 in 0..seg.len() {
        for d0 in 0..2 {
            if visited[s0][d0] {
                continue;
            }
            faces += 1;
            let mut corners = 0usize;
            let (mut s, mut d) = (s0, d0);
            loop {
                if visited[s][d] {
                    break;
                }
                visited[s][d] = true;
                let (v, slot) = seg[s][1 - d];
                if v >= nr + nl {
                    corners += 1;
                } else if slot == Port::SmallRight.index() {
                    corners += 1;
                }
                let next_slot = (slot + deg(v) - 1) % deg(v);
                let ns = owner[v][next_slot].unwrap();
                let nd = if seg[ns][0] == (v, next_slot) { 0 } else { 1 };
                s = ns;
                d = nd;
            }
            if corners < 3 {
                ok = false;
            }
        }
    }
    let v = nv as i64;
    let e = seg.len() as i64;
    let f = faces as i64;
    connected && ok && v - e + f == 2 - 2 * (pair.right.track.genus as i64)
}
