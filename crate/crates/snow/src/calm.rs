//! Complementary-pants shapes, calmness, and the constructive calm-CDS
//! procedure.
//!
//! Everything here works at the strand level of the fibered neighbourhood
//! of a maximal track. A carried object with integer weights determines,
//! on every I-fiber, an ordered set of strand slots; both the shape
//! classifier and the calm construction manipulate the strip complex those
//! strands cut out of the neighbourhood.
//!
//! Fiber coordinates: on the fiber of a switch whose large branch carries
//! `w` strands (`wa` of them continuing into the small-left branch), slots
//! are numbered `0..w` from the small-left outer edge; the base coordinate
//! of slot `p` is `2p + 1` and the cusp sits at coordinate `2 * wa`, so
//! strand and cusp positions interleave without collisions.

use std::collections::HashMap;

use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::pants::Int;
use crate::track::{switch_kernel, BranchId, Port, SwitchId, TrackError, TrainTrack};

/// Canonical lateral side of a branch strip: `Lo` is the side of slot 0
/// (the traveller's left when running from `ends[0]` to `ends[1]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CSide {
    Lo,
    Hi,
}

/// The three branch attachments of one switch fiber, each as
/// `(branch, end index)`.
#[derive(Clone, Copy)]
struct Fiber {
    large: (BranchId, usize),
    sl: (BranchId, usize),
    sr: (BranchId, usize),
}

fn fibers(track: &TrainTrack) -> Vec<Fiber> {
    (0..track.switch_count)
        .map(|s| Fiber {
            large: track.end_at(s, Port::Large),
            sl: track.end_at(s, Port::SmallLeft),
            sr: track.end_at(s, Port::SmallRight),
        })
        .collect()
}

/// Fiber slot of the strand with canonical lateral index `g`, as seen at
/// end `e` of its branch. `wa` and `w` are the small-left and large strand
/// counts of the switch holding that end.
fn fiber_pos(port: Port, e: usize, g: usize, wa: usize, w: usize) -> usize {
    match (port, e) {
        (Port::Large, 0) => g,
        (Port::Large, 1) => w - 1 - g,
        (Port::SmallLeft, 0) => wa - 1 - g,
        (Port::SmallLeft, 1) => g,
        (Port::SmallRight, 0) => w - 1 - g,
        (Port::SmallRight, 1) => wa + g,
        _ => unreachable!(),
    }
}

fn fiber_pos_inv(port: Port, e: usize, p: usize, wa: usize, w: usize) -> usize {
    match (port, e) {
        (Port::Large, 0) => p,
        (Port::Large, 1) => w - 1 - p,
        (Port::SmallLeft, 0) => wa - 1 - p,
        (Port::SmallLeft, 1) => p,
        (Port::SmallRight, 0) => w - 1 - p,
        (Port::SmallRight, 1) => p - wa,
        _ => unreachable!(),
    }
}

/// Lateral orientation at a branch end: true iff the canonical lateral
/// index increases with the fiber coordinate there.
fn lat_increasing(port: Port, e: usize) -> bool {
    (port == Port::Large) == (e == 0)
}

// ---------------------------------------------------------------------------
// Strand orbits
// ---------------------------------------------------------------------------

/// One traversal of a branch by the traced curve: entered at end `e_in`
/// with canonical lateral index `lat`.
#[derive(Clone, Copy, Debug)]
struct GPass {
    branch: BranchId,
    e_in: usize,
    lat: usize,
}

/// The fiber crossing between two consecutive passes.
#[derive(Clone, Copy, Debug)]
struct FiberCrossing {
    switch: SwitchId,
    pos: usize,
    /// Port through which the orbit leaves the fiber (entry port of the
    /// next pass).
    in_port: Port,
    /// Port through which the orbit arrives at the fiber.
    out_port: Port,
}

/// The strand-level edge path of a connected curve covering the track with
/// the given positive weights. `crossings[i]` sits between `passes[i]` and
/// `passes[i + 1 mod n]`.
struct Orbit {
    weights: Vec<usize>,
    fibers: Vec<Fiber>,
    passes: Vec<GPass>,
    crossings: Vec<FiberCrossing>,
    crossing_at: HashMap<(SwitchId, usize), usize>,
}

impl Orbit {
    fn wa(&self, s: SwitchId) -> usize {
        self.weights[self.fibers[s].sl.0]
    }

    fn w(&self, s: SwitchId) -> usize {
        self.weights[self.fibers[s].large.0]
    }
}

/// Advances one strand step: from a pass, compute the next pass and the
/// crossing between them.
fn orbit_step(
    track: &TrainTrack,
    fibers: &[Fiber],
    weights: &[usize],
    pass: GPass,
) -> (GPass, FiberCrossing) {
    let e_arr = 1 - pass.e_in;
    let end = track.branches[pass.branch].ends[e_arr];
    let f = fibers[end.switch];
    let wa = weights[f.sl.0];
    let w = weights[f.large.0];
    let p = fiber_pos(end.port, e_arr, pass.lat, wa, w);
    let next_port = if end.port == Port::Large {
        if p < wa {
            Port::SmallLeft
        } else {
            Port::SmallRight
        }
    } else {
        Port::Large
    };
    let (nb, ne) = match next_port {
        Port::Large => f.large,
        Port::SmallLeft => f.sl,
        Port::SmallRight => f.sr,
    };
    let nlat = fiber_pos_inv(next_port, ne, p, wa, w);
    debug_assert_eq!(
        fiber_pos(next_port, ne, nlat, wa, w),
        p,
        "fiber position maps disagree across a switch"
    );
    (
        GPass { branch: nb, e_in: ne, lat: nlat },
        FiberCrossing { switch: end.switch, pos: p, in_port: next_port, out_port: end.port },
    )
}

/// Traces the strand orbit through `(branch 0, end 0, slot 0)`. Returns
/// `None` unless the weights are strictly positive and the orbit is a
/// single closed curve covering every slot.
fn trace_orbit(track: &TrainTrack, weights: &[usize]) -> Option<Orbit> {
    if weights.len() != track.branches.len() || weights.iter().any(|&w| w == 0) {
        return None;
    }
    let fibers = fibers(track);
    let total: usize = weights.iter().sum();
    let start = GPass { branch: 0, e_in: 0, lat: 0 };
    let mut passes = Vec::with_capacity(total);
    let mut crossings = Vec::with_capacity(total);
    let mut cur = start;
    loop {
        passes.push(cur);
        let (next, cx) = orbit_step(track, &fibers, weights, cur);
        crossings.push(cx);
        if (next.branch, next.e_in, next.lat) == (start.branch, start.e_in, start.lat) {
            break;
        }
        if passes.len() > total {
            return None;
        }
        cur = next;
    }
    if passes.len() != total {
        return None;
    }
    let mut crossing_at = HashMap::new();
    for (i, cx) in crossings.iter().enumerate() {
        if crossing_at.insert((cx.switch, cx.pos), i).is_some() {
            return None;
        }
    }
    Some(Orbit { weights: weights.to_vec(), fibers, passes, crossings, crossing_at })
}

/// Decomposes a carried multicurve (weights satisfying the switch
/// conditions, zeros allowed) into closed components. Returns, per strand
/// slot `(branch, lat)`, the component id and the end through which the
/// chosen traversal enters the branch.
#[allow(dead_code)]
fn multicurve_components(
    track: &TrainTrack,
    weights: &[usize],
) -> (usize, HashMap<(BranchId, usize), (usize, usize)>) {
    let fibers = fibers(track);
    let mut slot_info: HashMap<(BranchId, usize), (usize, usize)> = HashMap::new();
    let mut count = 0;
    for b in 0..track.branches.len() {
        for g in 0..weights[b] {
            if slot_info.contains_key(&(b, g)) {
                continue;
            }
            let start = GPass { branch: b, e_in: 0, lat: g };
            let mut cur = start;
            loop {
                slot_info.insert((cur.branch, cur.lat), (count, cur.e_in));
                let (next, _) = orbit_step(track, &fibers, weights, cur);
                if (next.branch, next.lat) == (start.branch, start.lat) {
                    break;
                }
                cur = next;
            }
            count += 1;
        }
    }
    (count, slot_info)
}

// ---------------------------------------------------------------------------
// Base complementary triangles
// ---------------------------------------------------------------------------

/// The complementary triangles of a maximal track, with enough structure
/// to attach them to strip complexes: which triangle lies beyond each
/// strip side and which triangle owns each switch cusp.
struct BaseTriangles {
    /// `region_of_side[b][0]` = triangle beyond the `Lo` side of branch b.
    region_of_side: Vec<[usize; 2]>,
    region_of_cusp: Vec<usize>,
    cusps_of_region: Vec<Vec<SwitchId>>,
    sides_of_region: Vec<Vec<(BranchId, CSide)>>,
}

fn base_triangles(track: &TrainTrack) -> Result<BaseTriangles, TrackError> {
    if !track.is_maximal() {
        return Err(TrackError::Malformed("track is not maximal".into()));
    }
    let nb = track.branches.len();
    let mut region_of_side = vec![[usize::MAX; 2]; nb];
    let mut region_of_cusp = vec![usize::MAX; track.switch_count];
    let mut cusps_of_region = Vec::new();
    let mut sides_of_region = Vec::new();
    let mut seen = vec![[false; 2]; nb];
    // Which lateral side the walk state (b, e, c) runs along: at a large
    // end the low-coordinate corner is 0, at a small end it is 1, and the
    // low-coordinate side is canonical `Lo` exactly when the lateral index
    // increases with the fiber coordinate there; both conditions reduce to
    // c == e.
    let side_idx = |e: usize, c: usize| if e == c { 0 } else { 1 };
    for b0 in 0..nb {
        for e0 in 0..2 {
            for c0 in 0..2 {
                if seen[b0][side_idx(e0, c0)] {
                    continue;
                }
                let region = cusps_of_region.len();
                let mut cusps = Vec::new();
                let mut sides = Vec::new();
                let (mut b, mut e, mut c) = (b0, e0, c0);
                loop {
                    let si = side_idx(e, c);
                    if seen[b][si] {
                        break;
                    }
                    seen[b][si] = true;
                    region_of_side[b][si] = region;
                    sides.push((b, if si == 0 { CSide::Lo } else { CSide::Hi }));
                    let end = track.branches[b].ends[e];
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
                        cusps.push(end.switch);
                        region_of_cusp[end.switch] = region;
                    }
                    let (nb2, ne) = track.end_at(end.switch, port);
                    b = nb2;
                    e = 1 - ne;
                    c = 1 - corner;
                }
                if cusps.len() != 3 {
                    return Err(TrackError::Malformed(
                        "complementary region is not a triangle".into(),
                    ));
                }
                cusps_of_region.push(cusps);
                sides_of_region.push(sides);
            }
        }
    }
    Ok(BaseTriangles { region_of_side, region_of_cusp, cusps_of_region, sides_of_region })
}

// ---------------------------------------------------------------------------
// Strip complexes
// ---------------------------------------------------------------------------

/// A rectangle of the fibered neighbourhood between two consecutive
/// cutting strands of one branch (or between a strand and the strip side).
struct Cell {
    branch: BranchId,
    idx: usize,
    /// Junction id met at each branch end.
    ends: [usize; 2],
    /// Lateral orientation at each end (`lat_increasing`).
    inc: [bool; 2],
}

/// A maximal uncut sub-interval of one switch fiber: the place where the
/// large-side cell meets one small-side cell (smooth) or two of them with
/// the switch cusp in between.
struct Junction {
    large: (usize, usize),
    /// Small-side incidences ordered by fiber coordinate (top first).
    smalls: Vec<(usize, usize)>,
    cusp: Option<SwitchId>,
}

struct StripComplex {
    cells: Vec<Cell>,
    cell_base: Vec<usize>,
    junctions: Vec<Junction>,
}

/// Per-branch description of the cutting strands as the complex builder
/// needs them: how many there are and the base coordinate of the `i`-th
/// one (in canonical lateral order) at each branch end.
trait Cutters {
    fn count(&self, b: BranchId) -> usize;
    fn coord(&self, b: BranchId, i: usize, e: usize) -> usize;
    /// Axis slot count of the branch (all strands, cutting or not).
    fn axis(&self, b: BranchId) -> usize;
    fn cusp_live(&self, s: SwitchId) -> bool;
}

fn build_complex<C: Cutters>(
    track: &TrainTrack,
    fib: &[Fiber],
    cut: &C,
) -> Result<StripComplex, TrackError> {
    let nb = track.branches.len();
    let mut cell_base = vec![0usize; nb];
    let mut total = 0;
    for b in 0..nb {
        cell_base[b] = total;
        total += cut.count(b) + 1;
    }
    let mut cells: Vec<Cell> = (0..nb)
        .flat_map(|b| {
            (0..cut.count(b) + 1).map(move |i| (b, i))
        })
        .map(|(b, i)| Cell {
            branch: b,
            idx: i,
            ends: [usize::MAX; 2],
            inc: [
                lat_increasing(track.branches[b].ends[0].port, 0),
                lat_increasing(track.branches[b].ends[1].port, 1),
            ],
        })
        .collect();
    // Cell of branch attachment (b, e) whose interior contains the doubled
    // fiber coordinate y2.
    let cell_at = |b: BranchId, e: usize, y2: usize| -> usize {
        let k = cut.count(b);
        let below = (0..k).filter(|&i| 2 * cut.coord(b, i, e) < y2).count();
        let inc = lat_increasing(track.branches[b].ends[e].port, e);
        cell_base[b] + if inc { below } else { k - below }
    };
    let mut junctions = Vec::new();
    for (s, f) in fib.iter().enumerate() {
        let w = cut.axis(f.large.0);
        let wa = cut.axis(f.sl.0);
        let cusp_coord = 2 * wa;
        if w == 0 {
            // Empty fiber: the whole neighbourhood chunk is one junction
            // joining the three single cells around the live cusp.
            if !cut.cusp_live(s) {
                return Err(TrackError::Malformed("consumed cusp on an empty fiber".into()));
            }
            let jid = junctions.len();
            let large_cell = cell_base[f.large.0];
            let smalls = vec![(cell_base[f.sl.0], f.sl.1), (cell_base[f.sr.0], f.sr.1)];
            for &(c, e) in std::iter::once(&(large_cell, f.large.1)).chain(smalls.iter()) {
                if cells[c].ends[e] != usize::MAX {
                    return Err(TrackError::Malformed(
                        "strip cell end met two fiber junctions".into(),
                    ));
                }
                cells[c].ends[e] = jid;
            }
            junctions.push(Junction { large: (large_cell, f.large.1), smalls, cusp: Some(s) });
            continue;
        }
        let mut blocks: Vec<usize> = Vec::new();
        for &(b, e) in [&f.large, &f.sl, &f.sr] {
            for i in 0..cut.count(b) {
                blocks.push(cut.coord(b, i, e));
            }
        }
        blocks.sort_unstable();
        blocks.dedup();
        let mut bounds = Vec::with_capacity(blocks.len() + 2);
        bounds.push(0);
        bounds.extend_from_slice(&blocks);
        bounds.push(2 * w);
        for win in bounds.windows(2) {
            let (lo, hi) = (win[0], win[1]);
            if hi <= lo {
                continue;
            }
            let mid2 = lo + hi;
            let large_cell = cell_at(f.large.0, f.large.1, mid2);
            let jid = junctions.len();
            // The cusp belongs to this interval when interior, or when it
            // degenerates onto the fiber boundary (an empty small side) at
            // the first or last interval.
            let cusp_here = cut.cusp_live(s)
                && ((lo < cusp_coord && cusp_coord < hi)
                    || (cusp_coord == 0 && lo == 0)
                    || (cusp_coord == 2 * w && hi == 2 * w));
            let (smalls, cusp) = if cusp_here {
                let top = cell_at(f.sl.0, f.sl.1, lo + cusp_coord);
                let bot = cell_at(f.sr.0, f.sr.1, cusp_coord + hi);
                (vec![(top, f.sl.1), (bot, f.sr.1)], Some(s))
            } else if hi <= cusp_coord {
                (vec![(cell_at(f.sl.0, f.sl.1, mid2), f.sl.1)], None)
            } else {
                (vec![(cell_at(f.sr.0, f.sr.1, mid2), f.sr.1)], None)
            };
            for &(c, e) in std::iter::once(&(large_cell, f.large.1)).chain(smalls.iter()) {
                if cells[c].ends[e] != usize::MAX {
                    return Err(TrackError::Malformed(
                        "strip cell end met two fiber junctions".into(),
                    ));
                }
                cells[c].ends[e] = jid;
            }
            junctions.push(Junction { large: (large_cell, f.large.1), smalls, cusp });
        }
    }
    if cells.iter().any(|c| c.ends.iter().any(|&j| j == usize::MAX)) {
        return Err(TrackError::Malformed("strip cell end met no fiber junction".into()));
    }
    Ok(StripComplex { cells, cell_base, junctions })
}

/// One boundary circle of the cut-open fibered neighbourhood: the strip
/// walls it runs along and the live cusps it passes.
struct WallCircle {
    walls: Vec<(usize, CSide)>,
    #[allow(dead_code)]
    cusps: Vec<SwitchId>,
}

impl StripComplex {
    /// Which incidence of junction `j` the pair `(cell, end)` is.
    fn role(&self, j: usize, cell: usize, end: usize) -> usize {
        let jn = &self.junctions[j];
        if jn.large == (cell, end) {
            return 0;
        }
        for (i, &s) in jn.smalls.iter().enumerate() {
            if s == (cell, end) {
                return i + 1;
            }
        }
        unreachable!("cell end not incident to its junction");
    }

    /// Traces every boundary circle of the complex.
    fn wall_circles(&self) -> Vec<WallCircle> {
        #[derive(Clone, Copy, PartialEq)]
        enum Corner {
            Top,
            Bottom,
        }
        let mut seen: Vec<[bool; 2]> = vec![[false; 2]; self.cells.len()];
        let sidx = |s: CSide| if s == CSide::Lo { 0 } else { 1 };
        let mut out = Vec::new();
        for c0 in 0..self.cells.len() {
            for s0 in [CSide::Lo, CSide::Hi] {
                if seen[c0][sidx(s0)] {
                    continue;
                }
                let mut walls = Vec::new();
                let mut cusps = Vec::new();
                let (mut cell, mut side, mut dir) = (c0, s0, 1usize);
                loop {
                    if seen[cell][sidx(side)] {
                        break;
                    }
                    seen[cell][sidx(side)] = true;
                    walls.push((cell, side));
                    let j = self.cells[cell].ends[dir];
                    let corner = if (side == CSide::Lo) == self.cells[cell].inc[dir] {
                        Corner::Top
                    } else {
                        Corner::Bottom
                    };
                    let jn = &self.junctions[j];
                    let role = self.role(j, cell, dir);
                    let (next, ncorner) = match (role, corner) {
                        (0, Corner::Top) => (jn.smalls[0], Corner::Top),
                        (0, Corner::Bottom) => (*jn.smalls.last().unwrap(), Corner::Bottom),
                        (1, Corner::Top) => (jn.large, Corner::Top),
                        (1, Corner::Bottom) => {
                            if jn.smalls.len() == 2 {
                                cusps.push(jn.cusp.expect("trivalent junction without cusp"));
                                (jn.smalls[1], Corner::Top)
                            } else {
                                (jn.large, Corner::Bottom)
                            }
                        }
                        (2, Corner::Bottom) => (jn.large, Corner::Bottom),
                        (2, Corner::Top) => {
                            cusps.push(jn.cusp.expect("trivalent junction without cusp"));
                            (jn.smalls[0], Corner::Bottom)
                        }
                        _ => unreachable!(),
                    };
                    let (ncell, ne) = next;
                    cell = ncell;
                    dir = 1 - ne;
                    side = if (ncorner == Corner::Top) == self.cells[ncell].inc[ne] {
                        CSide::Lo
                    } else {
                        CSide::Hi
                    };
                }
                out.push(WallCircle { walls, cusps });
            }
        }
        out
    }

    /// Connected component id per cell (cells joined across junctions).
    fn components(&self) -> (usize, Vec<usize>) {
        let mut parent: Vec<usize> = (0..self.cells.len()).collect();
        fn find(p: &mut Vec<usize>, mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for jn in &self.junctions {
            let a = find(&mut parent, jn.large.0);
            for &(c, _) in &jn.smalls {
                let b = find(&mut parent, c);
                parent[b] = a;
            }
        }
        let mut label = HashMap::new();
        let mut out = vec![0usize; self.cells.len()];
        for c in 0..self.cells.len() {
            let r = find(&mut parent, c);
            let n = label.len();
            out[c] = *label.entry(r).or_insert(n);
        }
        (label.len(), out)
    }

    /// Follows the strip emanating from the cusp of junction `j` into the
    /// large side until it runs into another cusp. Returns the terminal
    /// switch and the cells traversed.
    fn trace_connector(&self, j: usize) -> Result<(SwitchId, Vec<usize>), TrackError> {
        let (mut cell, mut entered) = self.junctions[j].large;
        let mut cells = Vec::new();
        let mut visited = vec![false; self.cells.len()];
        loop {
            if visited[cell] {
                return Err(TrackError::Malformed("connector strip revisits a cell".into()));
            }
            visited[cell] = true;
            cells.push(cell);
            let far = 1 - entered;
            let j2 = self.cells[cell].ends[far];
            let jn = &self.junctions[j2];
            if jn.large == (cell, far) {
                match jn.cusp {
                    Some(s) => return Ok((s, cells)),
                    None => {
                        debug_assert_eq!(jn.smalls.len(), 1, "cuspless junction must be smooth");
                        let (nc, ne) = jn.smalls[0];
                        cell = nc;
                        entered = ne;
                    }
                }
            } else {
                let (nc, ne) = jn.large;
                cell = nc;
                entered = ne;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Shape classification
// ---------------------------------------------------------------------------

/// Shape of one complementary pair-of-pants of a decomposing system cut
/// out of the surface, relative to the carrying track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Theta,
    Eyeglass,
}

/// One connector arc between two switch cusps, labelled with the triangle
/// owning each endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectorArc {
    pub from_cusp: SwitchId,
    pub from_triangle: usize,
    pub to_cusp: SwitchId,
    pub to_triangle: usize,
}

/// Classification of one complementary pants: the two contained triangles
/// and the three connector arcs joining their cusps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PantsShape {
    pub pants: usize,
    pub shape: Shape,
    pub triangles: [usize; 2],
    pub connectors: Vec<ConnectorArc>,
}

struct MulticurveCutters {
    counts: Vec<usize>,
    coords: Vec<Vec<[usize; 2]>>,
}

impl Cutters for MulticurveCutters {
    fn count(&self, b: BranchId) -> usize {
        self.counts[b]
    }
    fn coord(&self, b: BranchId, i: usize, e: usize) -> usize {
        self.coords[b][i][e]
    }
    fn axis(&self, b: BranchId) -> usize {
        self.counts[b]
    }
    fn cusp_live(&self, _s: SwitchId) -> bool {
        true
    }
}

const CLASSIFY_CELL_CAP: usize = 4_000_000;

fn usize_weights(weights: &[Int], cap: usize) -> Result<Vec<usize>, TrackError> {
    let mut out = Vec::with_capacity(weights.len());
    let mut total = 0usize;
    for w in weights {
        if w.is_negative() {
            return Err(TrackError::NotCarried);
        }
        let v = w.to_usize().ok_or_else(|| {
            TrackError::Malformed("weights too large for strand-level classification".into())
        })?;
        total = total.checked_add(v).ok_or_else(|| {
            TrackError::Malformed("weights too large for strand-level classification".into())
        })?;
        out.push(v);
    }
    if total > cap {
        return Err(TrackError::Malformed(
            "weights too large for strand-level classification".into(),
        ));
    }
    Ok(out)
}

/// Cuts the fibered neighbourhood of `track` along the carried multicurve
/// with the given weights and classifies every complementary pants.
///
/// Errors if the weights are not a carried multicurve, the track is not
/// maximal, or the complement is not a disjoint union of pants (the
/// system is not a complete decomposing system).
pub fn classify_pants_shapes(
    weights: &[Int],
    track: &TrainTrack,
) -> Result<Vec<PantsShape>, TrackError> {
    if weights.len() != track.branches.len() {
        return Err(TrackError::WeightLength(weights.len(), track.branches.len()));
    }
    if !track.check_switch_conditions(weights)? {
        return Err(TrackError::NotCarried);
    }
    let base = base_triangles(track)?;
    let w = usize_weights(weights, CLASSIFY_CELL_CAP)?;
    let fib = fibers(track);
    let counts = w.clone();
    let coords: Vec<Vec<[usize; 2]>> = (0..track.branches.len())
        .map(|b| {
            (0..w[b])
                .map(|g| {
                    let mut c = [0usize; 2];
                    for (e, ci) in c.iter_mut().enumerate() {
                        let end = track.branches[b].ends[e];
                        let wa = w[fib[end.switch].sl.0];
                        let wt = w[fib[end.switch].large.0];
                        *ci = 2 * fiber_pos(end.port, e, g, wa, wt) + 1;
                    }
                    c
                })
                .collect()
        })
        .collect();
    let cutters = MulticurveCutters { counts, coords };
    let complex = build_complex(track, &fib, &cutters)?;
    let (ncomp, comp_of_cell) = complex.components();

    // Group every triangle with the component of the cells beyond its
    // sides; the complement regions of the system are those groups.
    let ntri = base.cusps_of_region.len();
    let mut comp_of_triangle = vec![usize::MAX; ntri];
    for (t, sides) in base.sides_of_region.iter().enumerate() {
        for &(b, side) in sides {
            let cell = match side {
                CSide::Lo => complex.cell_base[b],
                CSide::Hi => complex.cell_base[b] + cutters.count(b),
            };
            let c = comp_of_cell[cell];
            if comp_of_triangle[t] == usize::MAX {
                comp_of_triangle[t] = c;
            } else if comp_of_triangle[t] != c {
                return Err(TrackError::Malformed(
                    "triangle sides face different complement components".into(),
                ));
            }
        }
    }
    let mut triangles_of_comp: Vec<Vec<usize>> = vec![Vec::new(); ncomp];
    for (t, &c) in comp_of_triangle.iter().enumerate() {
        triangles_of_comp[c].push(t);
    }
    if triangles_of_comp.iter().any(|ts| ts.is_empty()) {
        // An annular component without a triangle: parallel or boundary-
        // parallel strands; not a complete decomposing system.
        return Err(TrackError::NotComplete);
    }

    // Boundary circles per component: a pants has exactly three. These
    // checks run before connector tracing, which is only meaningful once
    // the complement is known to be a union of pants.
    let circles = complex.wall_circles();
    let mut circles_of_comp = vec![0usize; ncomp];
    for c in &circles {
        circles_of_comp[comp_of_cell[c.walls[0].0]] += 1;
    }
    for (c, ts) in triangles_of_comp.iter().enumerate() {
        if ts.len() != 2 || circles_of_comp[c] != 3 {
            return Err(TrackError::NotComplete);
        }
    }

    // Trace the connector emanating from every cusp.
    let mut germ_of_cusp: HashMap<SwitchId, usize> = HashMap::new();
    for (j, jn) in complex.junctions.iter().enumerate() {
        if let Some(s) = jn.cusp {
            if germ_of_cusp.insert(s, j).is_some() {
                return Err(TrackError::Malformed("cusp met twice among junctions".into()));
            }
        }
    }
    if germ_of_cusp.len() != track.switch_count {
        return Err(TrackError::Malformed("lost a switch cusp while cutting".into()));
    }
    let mut connector_of: HashMap<SwitchId, SwitchId> = HashMap::new();
    for (&s, &j) in &germ_of_cusp {
        let (other, _) = complex.trace_connector(j)?;
        connector_of.insert(s, other);
    }
    for (&s, &other) in &connector_of {
        if connector_of.get(&other) != Some(&s) {
            return Err(TrackError::Malformed("connector germs do not pair up".into()));
        }
        if other == s {
            return Err(TrackError::Malformed("connector strip returned to its cusp".into()));
        }
    }

    // Assemble per-component shapes, ordered by smallest triangle id.
    let mut order: Vec<usize> = (0..ncomp).collect();
    order.sort_by_key(|&c| *triangles_of_comp[c].iter().min().unwrap());
    let mut out = Vec::new();
    for (pants, &c) in order.iter().enumerate() {
        let ts = &triangles_of_comp[c];
        let (t1, t2) = (ts[0], ts[1]);
        let mut connectors = Vec::new();
        let mut seen_cusp: Vec<SwitchId> = Vec::new();
        for &t in ts {
            for &s in &base.cusps_of_region[t] {
                if seen_cusp.contains(&s) {
                    continue;
                }
                let other = connector_of[&s];
                seen_cusp.push(s);
                seen_cusp.push(other);
                connectors.push(ConnectorArc {
                    from_cusp: s,
                    from_triangle: base.region_of_cusp[s],
                    to_cusp: other,
                    to_triangle: base.region_of_cusp[other],
                });
            }
        }
        if connectors.len() != 3 {
            return Err(TrackError::Malformed("pants does not carry three connectors".into()));
        }
        if connectors
            .iter()
            .any(|cn| ![t1, t2].contains(&cn.to_triangle) || ![t1, t2].contains(&cn.from_triangle))
        {
            return Err(TrackError::Malformed("connector leaves its pants".into()));
        }
        let crossing = connectors.iter().filter(|cn| cn.from_triangle != cn.to_triangle).count();
        let shape = match crossing {
            3 => Shape::Theta,
            1 => Shape::Eyeglass,
            _ => {
                return Err(TrackError::Malformed(
                    "pants spine is neither theta nor eyeglass".into(),
                ))
            }
        };
        out.push(PantsShape { pants, shape, triangles: [t1, t2], connectors });
    }
    Ok(out)
}

/// True iff every complementary pants of the system has Θ-graph shape.
pub fn is_calm(weights: &[Int], track: &TrainTrack) -> Result<bool, TrackError> {
    Ok(classify_pants_shapes(weights, track)?
        .iter()
        .all(|p| p.shape == Shape::Theta))
}

// ---------------------------------------------------------------------------
// Calm construction
// ---------------------------------------------------------------------------

/// A connector arc accepted by the construction: a contiguous run of guide
/// passes whose ends are isotoped onto the cusps of `start_sw` / `end_sw`.
#[derive(Clone, Debug)]
struct ArcRec {
    passes: Vec<usize>,
    start_sw: SwitchId,
    end_sw: SwitchId,
    forward: bool,
}

struct Cuts {
    arc_of: Vec<Option<usize>>,
    arcs: Vec<ArcRec>,
    consumed: Vec<Option<usize>>,
    /// Coordinate overrides at arc terminals: (orbit pass, branch end) ->
    /// base fiber coordinate (the consumed cusp position).
    overrides: HashMap<(usize, usize), usize>,
}

impl Cuts {
    fn new(orbit: &Orbit, switches: usize) -> Self {
        Cuts {
            arc_of: vec![None; orbit.passes.len()],
            arcs: Vec::new(),
            consumed: vec![None; switches],
            overrides: HashMap::new(),
        }
    }

    /// Base coordinate of the cutting strand of `pass` at branch end `e`.
    fn coord(&self, track: &TrainTrack, orbit: &Orbit, pass: usize, e: usize) -> usize {
        if let Some(&c) = self.overrides.get(&(pass, e)) {
            return c;
        }
        let gp = orbit.passes[pass];
        let end = track.branches[gp.branch].ends[e];
        let wa = orbit.wa(end.switch);
        let w = orbit.w(end.switch);
        2 * fiber_pos(end.port, e, gp.lat, wa, w) + 1
    }

    fn apply(&mut self, track: &TrainTrack, orbit: &Orbit, arc: ArcRec) {
        let id = self.arcs.len();
        for &p in &arc.passes {
            debug_assert!(self.arc_of[p].is_none());
            self.arc_of[p] = Some(id);
        }
        self.consumed[arc.start_sw] = Some(id);
        self.consumed[arc.end_sw] = Some(id);
        let first = arc.passes[0];
        let last = *arc.passes.last().unwrap();
        let (e_first, e_last) = if arc.forward {
            (orbit.passes[first].e_in, 1 - orbit.passes[last].e_in)
        } else {
            (1 - orbit.passes[first].e_in, orbit.passes[last].e_in)
        };
        debug_assert_eq!(
            track.branches[orbit.passes[first].branch].ends[e_first].switch,
            arc.start_sw
        );
        debug_assert_eq!(
            track.branches[orbit.passes[first].branch].ends[e_first].port,
            Port::Large
        );
        debug_assert_eq!(
            track.branches[orbit.passes[last].branch].ends[e_last].switch,
            arc.end_sw
        );
        self.overrides.insert((first, e_first), 2 * orbit.wa(arc.start_sw));
        self.overrides.insert((last, e_last), 2 * orbit.wa(arc.end_sw));
        self.arcs.push(arc);
    }

    fn undo_last(&mut self) {
        let arc = self.arcs.pop().expect("undo without arc");
        for &p in &arc.passes {
            self.arc_of[p] = None;
        }
        self.consumed[arc.start_sw] = None;
        self.consumed[arc.end_sw] = None;
        let first = arc.passes[0];
        let last = *arc.passes.last().unwrap();
        self.overrides.retain(|&(p, _), _| p != first && p != last);
    }
}

struct CutCutters<'a> {
    track: &'a TrainTrack,
    orbit: &'a Orbit,
    cuts: &'a Cuts,
    lists: Vec<Vec<usize>>,
}

impl<'a> CutCutters<'a> {
    fn new(track: &'a TrainTrack, orbit: &'a Orbit, cuts: &'a Cuts) -> Self {
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); track.branches.len()];
        for (p, a) in cuts.arc_of.iter().enumerate() {
            if a.is_some() {
                lists[orbit.passes[p].branch].push(p);
            }
        }
        for list in &mut lists {
            list.sort_by_key(|&p| orbit.passes[p].lat);
        }
        CutCutters { track, orbit, cuts, lists }
    }
}

impl Cutters for CutCutters<'_> {
    fn count(&self, b: BranchId) -> usize {
        self.lists[b].len()
    }
    fn coord(&self, b: BranchId, i: usize, e: usize) -> usize {
        self.cuts.coord(self.track, self.orbit, self.lists[b][i], e)
    }
    fn axis(&self, b: BranchId) -> usize {
        self.orbit.weights[b]
    }
    fn cusp_live(&self, s: SwitchId) -> bool {
        self.cuts.consumed[s].is_none()
    }
}

/// Scans the guide for connector-arc candidates from a live cusp of the
/// `from` set to a live cusp of the `to` set. A candidate leaves its start
/// cusp through the large branch hugging one of the two cusp-adjacent
/// strands, runs along uncut guide passes, and arrives at the target cusp
/// again along the large branch at a cusp-adjacent slot; `k` bounds the
/// number of candidates kept per (cusp, side) start.
fn scan_candidates(
    orbit: &Orbit,
    cuts: &Cuts,
    from: &[SwitchId],
    to: &[SwitchId],
    k: usize,
) -> Vec<ArcRec> {
    let n = orbit.passes.len();
    let mut out = Vec::new();
    for &s1 in from {
        if cuts.consumed[s1].is_some() {
            continue;
        }
        let wa1 = orbit.wa(s1);
        for p1 in [wa1 - 1, wa1] {
            let ci = orbit.crossing_at[&(s1, p1)];
            let forward = orbit.crossings[ci].in_port == Port::Large;
            let mut pass = if forward { (ci + 1) % n } else { ci };
            let mut passes: Vec<usize> = Vec::new();
            let mut found = 0usize;
            for _ in 0..n - 1 {
                if cuts.arc_of[pass].is_some() {
                    break;
                }
                passes.push(pass);
                let cx_i = if forward { pass } else { (pass + n - 1) % n };
                let cx = orbit.crossings[cx_i];
                let exit_port = if forward { cx.out_port } else { cx.in_port };
                if exit_port == Port::Large {
                    let s2 = cx.switch;
                    let wa2 = orbit.wa(s2);
                    if s2 != s1
                        && cuts.consumed[s2].is_none()
                        && to.contains(&s2)
                        && (cx.pos + 1 == wa2 || cx.pos == wa2)
                    {
                        out.push(ArcRec {
                            passes: passes.clone(),
                            start_sw: s1,
                            end_sw: s2,
                            forward,
                        });
                        found += 1;
                        if found == k {
                            break;
                        }
                    }
                }
                pass = if forward { (pass + 1) % n } else { (pass + n - 1) % n };
            }
        }
    }
    out
}

/// Merged complement-region class of every wall under the arcs accepted so
/// far; used to count the boundary circles of the region a triangle pair
/// was merged into.
fn count_region_circles(
    track: &TrainTrack,
    orbit: &Orbit,
    cuts: &Cuts,
    base: &BaseTriangles,
    region: usize,
) -> Result<usize, TrackError> {
    let ntri = base.cusps_of_region.len();
    let mut parent: Vec<usize> = (0..ntri).collect();
    fn find(p: &mut Vec<usize>, mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for arc in &cuts.arcs {
        let a = find(&mut parent, base.region_of_cusp[arc.start_sw]);
        let b = find(&mut parent, base.region_of_cusp[arc.end_sw]);
        parent[b] = a;
    }
    let target = find(&mut parent, region);
    let cutters = CutCutters::new(track, orbit, cuts);
    let complex = build_complex(track, &orbit.fibers, &cutters)?;
    let circles = complex.wall_circles();
    let mut count = 0;
    for circ in &circles {
        let mut class = usize::MAX;
        for &(cell, side) in &circ.walls {
            let info = &complex.cells[cell];
            let k = cutters.count(info.branch);
            let tri = if info.idx == 0 && side == CSide::Lo {
                base.region_of_side[info.branch][0]
            } else if info.idx == k && side == CSide::Hi {
                base.region_of_side[info.branch][1]
            } else {
                let strand = match side {
                    CSide::Lo => cutters.lists[info.branch][info.idx - 1],
                    CSide::Hi => cutters.lists[info.branch][info.idx],
                };
                let arc = cuts.arc_of[strand].expect("interior wall without arc");
                base.region_of_cusp[cuts.arcs[arc].start_sw]
            };
            let c = find(&mut parent, tri);
            if class == usize::MAX {
                class = c;
            } else if class != c {
                return Err(TrackError::Malformed(
                    "boundary circle touches two complement regions".into(),
                ));
            }
        }
        if class == target {
            count += 1;
        }
    }
    Ok(count)
}

/// The calm complete decomposing system produced by the construction,
/// with the guide weights used as a witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalmCds {
    /// Carried weights of the system on the input track.
    pub weights: Vec<Int>,
    /// Weights of the strictly positive guide curve that supplied the
    /// connector segments.
    pub guide: Vec<Int>,
    /// Number of curves in the system (3g - 3).
    pub curve_count: usize,
    /// Guide curves sampled before the construction succeeded.
    pub guide_attempts: usize,
}

fn live_cusps(base: &BaseTriangles, cuts: &Cuts, t: usize) -> Vec<SwitchId> {
    base.cusps_of_region[t]
        .iter()
        .copied()
        .filter(|&s| cuts.consumed[s].is_none())
        .collect()
}

/// Runs the three-connector step for one triangle pair, backtracking over
/// candidate segments. The third connector is accepted only if the merged
/// region comes out a pants (three boundary circles); this check replaces
/// the leaf-direction disambiguation of the source procedure.
fn try_pair(
    track: &TrainTrack,
    orbit: &Orbit,
    cuts: &mut Cuts,
    base: &BaseTriangles,
    t1: usize,
    t2: usize,
) -> Result<bool, TrackError> {
    let c1s = live_cusps(base, cuts, t1);
    let c2s = live_cusps(base, cuts, t2);
    for a1 in scan_candidates(orbit, cuts, &c1s, &c2s, 2) {
        cuts.apply(track, orbit, a1);
        let c1s2 = live_cusps(base, cuts, t1);
        let c2s2 = live_cusps(base, cuts, t2);
        for a2 in scan_candidates(orbit, cuts, &c1s2, &c2s2, 2) {
            cuts.apply(track, orbit, a2);
            let c1s3 = live_cusps(base, cuts, t1);
            let c2s3 = live_cusps(base, cuts, t2);
            for a3 in scan_candidates(orbit, cuts, &c1s3, &c2s3, 4) {
                cuts.apply(track, orbit, a3);
                if count_region_circles(track, orbit, cuts, base, t1)? == 3 {
                    return Ok(true);
                }
                cuts.undo_last();
            }
            cuts.undo_last();
        }
        cuts.undo_last();
    }
    Ok(false)
}

/// Samples a strictly positive connected guide curve on the track: a
/// random positive integer point of the switch-condition kernel whose
/// strand orbit is a single covering curve.
fn sample_guide(
    track: &TrainTrack,
    basis: &[Vec<Int>],
    rng: &mut ChaCha8Rng,
    scale: i64,
    cap: usize,
) -> Option<Vec<usize>> {
    let nb = track.branches.len();
    for _ in 0..4000 {
        let mut w = vec![Int::zero(); nb];
        for v in basis {
            let c = rng.gen_range(-scale..=scale);
            for (wi, vi) in w.iter_mut().zip(v.iter()) {
                *wi += vi * c;
            }
        }
        if w.iter().any(|x| !x.is_positive()) {
            continue;
        }
        let wu: Option<Vec<usize>> = w.iter().map(|x| x.to_usize()).collect();
        let Some(wu) = wu else { continue };
        if wu.iter().sum::<usize>() > cap {
            continue;
        }
        if trace_orbit(track, &wu).is_some() {
            return Some(wu);
        }
    }
    None
}

/// Builds a calm complete decomposing system carried by the maximal track.
///
/// The construction partitions the complementary triangles into pairs and,
/// for each pair, splits the neighbourhood open along three connector arcs
/// taken from a strictly positive guide curve: each arc leaves a cusp
/// through the large branch hugging the innermost guide strand and ends
/// the same way at a cusp of the partner triangle, so every split consumes
/// two cusps. When the split track disconnects, remaining triangles are
/// re-paired within their components (their number per component is
/// always even). Once every cusp is consumed the remaining strips form
/// fibered annuli whose cores are the system: its weight on a branch is
/// the number of accepted arc strands running over it plus one.
pub fn construct_calm_cds(track: &TrainTrack, seed: u64) -> Result<CalmCds, TrackError> {
    construct_calm_cds_with_budget(track, seed, 24)
}

/// As [`construct_calm_cds`] with an explicit bound on the number of guide
/// curves sampled before giving up.
pub fn construct_calm_cds_with_budget(
    track: &TrainTrack,
    seed: u64,
    budget: usize,
) -> Result<CalmCds, TrackError> {
    let base = base_triangles(track)?;
    let basis = switch_kernel(track);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..budget {
        let scale = 2 + (attempt as i64) / 2;
        let cap = 40_000 + 20_000 * attempt;
        let Some(guide) = sample_guide(track, &basis, &mut rng, scale, cap) else {
            continue;
        };
        let orbit = trace_orbit(track, &guide).expect("sampled guide must trace");
        match run_construction(track, &orbit, &base, &mut rng)? {
            Some(cuts) => {
                let mut weights = vec![Int::from(1u32); track.branches.len()];
                for (p, a) in cuts.arc_of.iter().enumerate() {
                    if a.is_some() {
                        weights[orbit.passes[p].branch] += 1;
                    }
                }
                if !track.check_switch_conditions(&weights)? {
                    return Err(TrackError::Malformed(
                        "constructed system violates switch conditions".into(),
                    ));
                }
                let curve_count = 3 * track.genus - 3;
                return Ok(CalmCds {
                    weights,
                    guide: guide.iter().map(|&g| Int::from(g)).collect(),
                    curve_count,
                    guide_attempts: attempt + 1,
                });
            }
            None => continue,
        }
    }
    Err(TrackError::BudgetExhausted(budget))
}

/// One full pass of the pairing procedure with a fixed guide. Returns the
/// accepted cuts, or `None` when no candidate assignment works for some
/// pair (the caller resamples the guide).
fn run_construction(
    track: &TrainTrack,
    orbit: &Orbit,
    base: &BaseTriangles,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Cuts>, TrackError> {
    let ntri = base.cusps_of_region.len();
    let mut cuts = Cuts::new(orbit, track.switch_count);
    let mut remaining: Vec<bool> = vec![true; ntri];
    while remaining.iter().any(|&r| r) {
        // Component of the current split track under each remaining
        // triangle; triangles pair within components.
        let cutters = CutCutters::new(track, orbit, &cuts);
        let complex = build_complex(track, &orbit.fibers, &cutters)?;
        let (_, comp_of_cell) = complex.components();
        let mut comp_of_triangle = vec![usize::MAX; ntri];
        for (t, sides) in base.sides_of_region.iter().enumerate() {
            if !remaining[t] {
                continue;
            }
            for &(b, side) in sides {
                let cell = match side {
                    CSide::Lo => complex.cell_base[b],
                    CSide::Hi => complex.cell_base[b] + cutters.count(b),
                };
                let c = comp_of_cell[cell];
                if comp_of_triangle[t] == usize::MAX {
                    comp_of_triangle[t] = c;
                } else if comp_of_triangle[t] != c {
                    return Err(TrackError::Malformed(
                        "triangle sides face different split components".into(),
                    ));
                }
            }
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for t in 0..ntri {
            if remaining[t] {
                groups.entry(comp_of_triangle[t]).or_default().push(t);
            }
        }
        let mut keys: Vec<usize> = groups.keys().copied().collect();
        keys.sort_unstable();
        let group = &groups[&keys[0]];
        if group.len() < 2 || group.len() % 2 != 0 {
            return Err(TrackError::Malformed(
                "split component holds an odd number of triangles".into(),
            ));
        }
        let i = rng.gen_range(0..group.len());
        let mut j = rng.gen_range(0..group.len() - 1);
        if j >= i {
            j += 1;
        }
        let (t1, t2) = (group[i], group[j]);
        if !try_pair(track, orbit, &mut cuts, base, t1, t2)? {
            return Ok(None);
        }
        remaining[t1] = false;
        remaining[t2] = false;
    }
    // Every cusp is consumed; the leftover strips must be fibered annuli,
    // one per curve of the system.
    let cutters = CutCutters::new(track, orbit, &cuts);
    let complex = build_complex(track, &orbit.fibers, &cutters)?;
    if complex.junctions.iter().any(|j| j.cusp.is_some()) {
        return Err(TrackError::Malformed("live cusp left after the construction".into()));
    }
    let (ncomp, _) = complex.components();
    if ncomp != 3 * track.genus - 3 {
        return Err(TrackError::Malformed(
            "leftover annuli do not form a complete system".into(),
        ));
    }
    Ok(Some(cuts))
}
