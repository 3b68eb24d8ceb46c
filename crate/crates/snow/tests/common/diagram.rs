//! Explicit curve diagrams on a pants-decomposed surface, used as the
//! geometric ground truth for twist computations.
//!
//! The surface is cut into disk faces: every pants is cut along two arcs
//! (hole 0 to outer, hole 1 to outer, feet at the circle tops) into a
//! polygon, and every gluing annulus is cut along a seam (feet at the circle
//! bottoms) into a rectangle. A multicurve is stored as its crossings with
//! the circles, cuts and seams, together with the chords it traces inside
//! each face. Chords inside a disk are determined by their boundary
//! endpoints, so no winding data is needed anywhere.
//!
//! Local conventions, fixed once:
//! - pants slots 3p, 3p+1 are the holes (left, right), 3p+2 the outer circle;
//! - each circle's crossing list is counterclockwise as seen from inside its
//!   pants chart, starting at the seam foot (bottom); the cut feet are
//!   sentinels in the list (hole circles: one, at the top; outer circles:
//!   cut 1's foot top-right, cut 0's top-left);
//! - a cut crossing has an East and a West end, a seam crossing a T end (in
//!   the annulus band below it) and a B end (band above), a circle crossing
//!   a pants-side and an annulus-side end.

use snow::pants::{
    arc_types_per_pants, DtCoordinates, Int, PantsDecomposition,
};

pub type CrossId = usize;
pub type ChordId = usize;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Object {
    /// Gate circle, indexed by slot.
    Circle(usize),
    /// Cut arc of a pants, from hole `h` to the outer circle.
    Cut(usize, u8),
    /// Seam of an annulus, indexed by curve.
    Seam(usize),
}

/// One end of a crossing; `hi` selects between the two sides (pants/annulus
/// for circles, East/West for cuts, T/B for seams).
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub struct End {
    pub cross: CrossId,
    pub hi: bool,
}

pub fn end(cross: CrossId, hi: bool) -> End {
    End { cross, hi }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Entry {
    Cross(CrossId),
    FootSeam,
    FootCut(u8),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub enum Face {
    Pants(usize),
    Ann(usize),
}

#[derive(Clone, Debug)]
pub struct Diagram {
    pub pd: PantsDecomposition,
    /// Crossing arena; `None` marks a deleted crossing.
    pub obj: Vec<Option<Object>>,
    /// Per slot: cyclic entry list, index 0 is always `FootSeam`.
    pub circle: Vec<Vec<Entry>>,
    /// Per pants: crossings on each cut, ordered hole end to outer end.
    pub cut: Vec<[Vec<CrossId>; 2]>,
    /// Per curve: seam crossings ordered from the `slots_of(c).0` side to
    /// the `.1` side.
    pub seam: Vec<Vec<CrossId>>,
    /// Chord arena; `None` marks a deleted chord.
    pub chords: Vec<Option<(End, End)>>,
}

impl Diagram {
    pub fn empty(pd: &PantsDecomposition) -> Self {
        for c in 0..pd.curve_count() {
            assert!(
                !pd.is_handle_curve(c),
                "diagram engine does not support handle curves"
            );
        }
        let mut circle = Vec::new();
        for slot in 0..pd.slot_count() {
            let mut entries = vec![Entry::FootSeam];
            match slot % 3 {
                0 => entries.push(Entry::FootCut(0)),
                1 => entries.push(Entry::FootCut(1)),
                _ => {
                    entries.push(Entry::FootCut(1));
                    entries.push(Entry::FootCut(0));
                }
            }
            circle.push(entries);
        }
        Diagram {
            pd: pd.clone(),
            obj: Vec::new(),
            circle,
            cut: vec![[Vec::new(), Vec::new()]; pd.pants_count()],
            seam: vec![Vec::new(); pd.curve_count()],
            chords: Vec::new(),
        }
    }

    pub fn new_cross(&mut self, o: Object) -> CrossId {
        self.obj.push(Some(o));
        self.obj.len() - 1
    }

    pub fn add_chord(&mut self, a: End, b: End) -> ChordId {
        self.chords.push(Some((a, b)));
        self.chords.len() - 1
    }

    pub fn chord_at(&self, e: End) -> Option<ChordId> {
        self.chords
            .iter()
            .position(|c| matches!(c, Some((a, b)) if *a == e || *b == e))
    }

    /// The face an end lies in.
    pub fn face_of(&self, e: End) -> Face {
        match self.obj[e.cross].expect("live crossing") {
            Object::Circle(slot) => {
                if e.hi {
                    Face::Ann(self.pd.curve_at(slot))
                } else {
                    Face::Pants(slot / 3)
                }
            }
            Object::Cut(p, _) => Face::Pants(p),
            Object::Seam(c) => Face::Ann(c),
        }
    }

    /// Crossings on a circle in list order (sentinels skipped).
    pub fn circle_crossings(&self, slot: usize) -> Vec<CrossId> {
        self.circle[slot]
            .iter()
            .filter_map(|e| match e {
                Entry::Cross(c) => Some(*c),
                _ => None,
            })
            .collect()
    }

    /// Boundary walk of a face as a cyclic sequence of chord ends.
    pub fn face_ends(&self, f: Face) -> Vec<End> {
        let mut out = Vec::new();
        match f {
            Face::Pants(p) => {
                let outer = 3 * p + 2;
                let (rb, top, lb) = self.outer_sections(outer);
                let push_circle =
                    |out: &mut Vec<End>, ids: &[CrossId]| {
                        out.extend(ids.iter().map(|&c| end(c, false)));
                    };
                // Counterclockwise along the outer circle: bottom right up
                // to cut 1's foot.
                push_circle(&mut out, &rb);
                // Down the east side of cut 1, clockwise round hole 1, back
                // up the west side.
                out.extend(self.cut[p][1].iter().rev().map(|&c| end(c, false)));
                push_circle(&mut out, &self.hole_clockwise(3 * p + 1));
                out.extend(self.cut[p][1].iter().map(|&c| end(c, true)));
                // Across the top to cut 0's foot, then round hole 0.
                push_circle(&mut out, &top);
                out.extend(self.cut[p][0].iter().rev().map(|&c| end(c, false)));
                push_circle(&mut out, &self.hole_clockwise(3 * p));
                out.extend(self.cut[p][0].iter().map(|&c| end(c, true)));
                // Down the left side back to the seam foot.
                push_circle(&mut out, &lb);
            }
            Face::Ann(a) => {
                let (s0, s1) = self.pd.slots_of(a);
                // The annulus traverses each circle opposite to the pants
                // face: hole circles in list order, outer circles reversed.
                out.extend(
                    self.ann_walk(s0).into_iter().map(|c| end(c, true)),
                );
                out.extend(self.seam[a].iter().map(|&c| end(c, false)));
                out.extend(
                    self.ann_walk(s1).into_iter().map(|c| end(c, true)),
                );
                out.extend(self.seam[a].iter().rev().map(|&c| end(c, true)));
            }
        }
        out
    }

    /// Crossings of a circle in the direction the adjacent annulus face
    /// traverses it: list order for hole circles, reversed for outer
    /// circles (the opposite of the pants-face direction in each case).
    fn ann_walk(&self, slot: usize) -> Vec<CrossId> {
        let mut ids = self.circle_crossings(slot);
        if slot % 3 == 2 {
            ids.reverse();
        }
        ids
    }

    /// Outer circle entries split at the cut feet: (seam foot to cut 1,
    /// cut 1 to cut 0, cut 0 back to the seam foot).
    fn outer_sections(&self, slot: usize) -> (Vec<CrossId>, Vec<CrossId>, Vec<CrossId>) {
        let mut sections = vec![Vec::new()];
        for e in self.circle[slot].iter().skip(1) {
            match e {
                Entry::Cross(c) => sections.last_mut().unwrap().push(*c),
                Entry::FootCut(_) => sections.push(Vec::new()),
                Entry::FootSeam => panic!("seam foot must be entry 0"),
            }
        }
        assert_eq!(sections.len(), 3, "outer circle must have two cut feet");
        let lb = sections.pop().unwrap();
        let top = sections.pop().unwrap();
        let rb = sections.pop().unwrap();
        (rb, top, lb)
    }

    /// Hole circle crossings walked clockwise starting just after the cut
    /// foot (the traversal used by the pants face boundary).
    fn hole_clockwise(&self, slot: usize) -> Vec<CrossId> {
        let list = &self.circle[slot];
        let foot = list
            .iter()
            .position(|e| matches!(e, Entry::FootCut(_)))
            .expect("hole circle has a cut foot");
        let n = list.len();
        let mut out = Vec::new();
        for i in 1..n {
            let e = list[(foot + n - i) % n];
            if let Entry::Cross(c) = e {
                out.push(c);
            }
        }
        out
    }

    /// Cyclic component traces: each component as the sequence of chord ends
    /// visited (two per chord).
    pub fn components(&self) -> Vec<Vec<End>> {
        let mut seen = vec![false; self.chords.len()];
        let mut out = Vec::new();
        for start in 0..self.chords.len() {
            if seen[start] || self.chords[start].is_none() {
                continue;
            }
            let mut comp = Vec::new();
            let first = self.chords[start].unwrap().0;
            let mut at = first;
            loop {
                let ch = self.chord_at(at).expect("every end is on a chord");
                if seen[ch] {
                    assert_eq!(at, first, "component closes where it began");
                    break;
                }
                seen[ch] = true;
                let (a, b) = self.chords[ch].unwrap();
                let far = if a == at { b } else { a };
                comp.push(at);
                comp.push(far);
                // Step through the crossing to its other side.
                at = end(far.cross, !far.hi);
            }
            out.push(comp);
        }
        out
    }

    /// Structural soundness: every live crossing is listed exactly once on
    /// its object, both its ends are used by exactly one chord each, chords
    /// stay within one face, and the chords of every face are pairwise
    /// non-crossing.
    pub fn validate(&self) {
        let mut listed = vec![0usize; self.obj.len()];
        for (slot, entries) in self.circle.iter().enumerate() {
            assert_eq!(entries[0], Entry::FootSeam, "slot {slot} list base");
            for e in entries {
                if let Entry::Cross(c) = e {
                    assert_eq!(self.obj[*c], Some(Object::Circle(slot)));
                    listed[*c] += 1;
                }
            }
        }
        for (p, cuts) in self.cut.iter().enumerate() {
            for (h, ids) in cuts.iter().enumerate() {
                for c in ids {
                    assert_eq!(self.obj[*c], Some(Object::Cut(p, h as u8)));
                    listed[*c] += 1;
                }
            }
        }
        for (a, ids) in self.seam.iter().enumerate() {
            for c in ids {
                assert_eq!(self.obj[*c], Some(Object::Seam(a)));
                listed[*c] += 1;
            }
        }
        for (c, o) in self.obj.iter().enumerate() {
            assert_eq!(
                listed[c],
                if o.is_some() { 1 } else { 0 },
                "crossing {c} listing"
            );
        }
        // End usage.
        let mut use_count: std::collections::HashMap<End, usize> =
            std::collections::HashMap::new();
        for ch in self.chords.iter().flatten() {
            assert_ne!(ch.0, ch.1);
            assert_eq!(self.face_of(ch.0), self.face_of(ch.1), "chord {ch:?}");
            *use_count.entry(ch.0).or_default() += 1;
            *use_count.entry(ch.1).or_default() += 1;
        }
        for (c, o) in self.obj.iter().enumerate() {
            if o.is_none() {
                continue;
            }
            for hi in [false, true] {
                assert_eq!(
                    use_count.get(&end(c, hi)),
                    Some(&1),
                    "end ({c},{hi}) usage"
                );
            }
        }
        // Planarity face by face.
        let mut faces: Vec<Face> = (0..self.pd.pants_count()).map(Face::Pants).collect();
        faces.extend((0..self.pd.curve_count()).map(Face::Ann));
        for f in faces {
            let walk = self.face_ends(f);
            let pos: std::collections::HashMap<End, usize> =
                walk.iter().enumerate().map(|(i, e)| (*e, i)).collect();
            assert_eq!(pos.len(), walk.len(), "duplicate end in walk of {f:?}");
            let spans: Vec<(usize, usize)> = self
                .chords
                .iter()
                .flatten()
                .filter(|(a, _)| self.face_of(*a) == f)
                .map(|(a, b)| {
                    let (x, y) = (pos[a], pos[b]);
                    (x.min(y), x.max(y))
                })
                .collect();
            for (i, &(a1, a2)) in spans.iter().enumerate() {
                for &(b1, b2) in &spans[i + 1..] {
                    let inside1 = a1 < b1 && b1 < a2;
                    let inside2 = a1 < b2 && b2 < a2;
                    assert_eq!(
                        inside1, inside2,
                        "crossing chords in {f:?}: ({a1},{a2}) vs ({b1},{b2})"
                    );
                }
            }
        }
    }
}

/// Coordinates converted to small integers for diagram work.
pub fn coords_i64(coords: &DtCoordinates) -> (Vec<i64>, Vec<i64>) {
    let conv = |v: &Int| -> i64 {
        i64::try_from(v).unwrap_or_else(|_| panic!("coordinate too large for diagram"))
    };
    (
        coords.m.iter().map(conv).collect(),
        coords.t.iter().map(conv).collect(),
    )
}

/// Builds the canonical tight diagram of admissible coordinates.
pub fn build_canonical(coords: &DtCoordinates, pd: &PantsDecomposition) -> Diagram {
    coords.validate(pd).expect("admissible coordinates");
    let arcs = arc_types_per_pants(coords, pd).unwrap();
    let (m, t) = coords_i64(coords);
    let mut d = Diagram::empty(pd);

    // Pants sides first; they fix every circle's crossing order.
    for p in 0..pd.pants_count() {
        build_pants(&mut d, p, &arcs[p]);
    }
    // Annulus strands connect the circle orders.
    for a in 0..pd.curve_count() {
        build_annulus(&mut d, a, m[a], t[a]);
    }
    d.validate();
    d
}

/// Converts an `Int` arc count to usize.
fn cnt(v: &Int) -> usize {
    usize::try_from(v).expect("arc count fits usize")
}

/// Lays down the pants-side chord system for one pants. Sector layout per
/// circle (counterclockwise from the seam foot at the bottom):
/// hole circles [seam foot | right side | cut foot | left side], outer
/// [seam foot | right bottom | cut 1 | top | cut 0 | left bottom].
fn build_pants(d: &mut Diagram, p: usize, arcs: &snow::pants::ArcTypeCounts) {
    let h0 = 3 * p;
    let h1 = 3 * p + 1;
    let outer = 3 * p + 2;
    let a = cnt(arcs.seam(0, 1));
    let b = cnt(arcs.seam(0, 2));
    let c = cnt(arcs.seam(1, 2));
    let waves: Vec<usize> = (0..3).filter(|&i| arcs.same[i] > Int::from(0)).collect();
    assert!(waves.len() <= 1);

    let mut h0_r = Vec::new(); // hole 0, right sector, bottom -> top
    let mut h0_l = Vec::new(); // hole 0, left sector, top -> bottom
    let mut h1_r = Vec::new();
    let mut h1_l = Vec::new();
    let mut out_rb = Vec::new(); // outer, seam foot -> cut 1 foot
    let mut out_lb = Vec::new(); // outer, cut 0 foot -> seam foot
    let mut chords: Vec<(End, End)> = Vec::new();

    let mk = |d: &mut Diagram, o: Object| d.new_cross(o);

    // Seam family hole0 <-> hole1: bottom middle. Bottom-most arc leaves
    // hole 0 lowest on its right side and lands lowest on hole 1's left.
    let mut a_pairs = Vec::new();
    for _ in 0..a {
        let x = mk(d, Object::Circle(h0));
        let y = mk(d, Object::Circle(h1));
        a_pairs.push((x, y));
        chords.push((end(x, false), end(y, false)));
    }
    // h0 right sector reads bottom->top, so bottom-most first; on h1's left
    // sector (top->bottom) the bottom-most lands last.
    h0_r.extend(a_pairs.iter().map(|&(x, _)| x));
    h1_l.extend(a_pairs.iter().rev().map(|&(_, y)| y));

    // Seam family hole0 <-> outer: bottom left.
    for _ in 0..b {
        let x = mk(d, Object::Circle(h0));
        let y = mk(d, Object::Circle(outer));
        // Top-most arc first on both (aligned nesting along the left side).
        h0_l.push(x);
        out_lb.push(y);
        chords.push((end(x, false), end(y, false)));
    }

    // Seam family hole1 <-> outer: bottom right, bottom-most first on both.
    for _ in 0..c {
        let x = mk(d, Object::Circle(h1));
        let y = mk(d, Object::Circle(outer));
        h1_r.push(x);
        out_rb.push(y);
        chords.push((end(x, false), end(y, false)));
    }

    if let Some(&w) = waves.first() {
        let s = cnt(&arcs.same[w]);
        match w {
            0 => {
                // Humps on hole 0 wrapping hole 1, one East->West crossing
                // of cut 1 each. Index 0 is the outermost hump: its going
                // end sits lowest on hole 0's right side, its return end
                // highest, and its cut crossing nearest the outer end.
                let mut going = Vec::new();
                let mut ret = Vec::new();
                let mut xs = Vec::new();
                for _ in 0..s {
                    let g = mk(d, Object::Circle(h0));
                    let r = mk(d, Object::Circle(h0));
                    let x = mk(d, Object::Cut(p, 1));
                    chords.push((end(g, false), end(x, false)));
                    chords.push((end(x, true), end(r, false)));
                    going.push(g);
                    ret.push(r);
                    xs.push(x);
                }
                // Right sector bottom->top: going (outermost first), then
                // the seam-to-hole1 block already placed, then returns
                // (innermost first).
                let mut sector = going.clone();
                sector.extend(h0_r.iter().copied());
                sector.extend(ret.iter().rev().copied());
                h0_r = sector;
                // Cut list hole->outer: innermost first.
                d.cut[p][1] = xs.iter().rev().copied().collect();
            }
            1 => {
                // Mirror image: humps on hole 1 wrapping hole 0, one
                // West->East crossing of cut 0 each.
                let mut going = Vec::new();
                let mut ret = Vec::new();
                let mut xs = Vec::new();
                for _ in 0..s {
                    let g = mk(d, Object::Circle(h1));
                    let r = mk(d, Object::Circle(h1));
                    let x = mk(d, Object::Cut(p, 0));
                    chords.push((end(g, false), end(x, true)));
                    chords.push((end(x, false), end(r, false)));
                    going.push(g);
                    ret.push(r);
                    xs.push(x);
                }
                // Left sector top->bottom: returns (outermost first), the
                // hole0 seam block, then going ends (innermost first).
                let mut sector = ret.clone();
                sector.extend(h1_l.iter().copied());
                sector.extend(going.iter().rev().copied());
                h1_l = sector;
                d.cut[p][0] = xs.iter().rev().copied().collect();
            }
            _ => {
                // Humps on the outer circle separating the holes, passing
                // over hole 0 with one East->West crossing of cut 0. Both
                // ends sit on the left-bottom sector: the west end early in
                // the sector, the seam-side end late. Index 0 is the
                // outermost (widest) hump.
                let mut west = Vec::new();
                let mut near = Vec::new();
                let mut xs = Vec::new();
                for _ in 0..s {
                    let e1 = mk(d, Object::Circle(outer));
                    let e2 = mk(d, Object::Circle(outer));
                    let x = mk(d, Object::Cut(p, 0));
                    chords.push((end(e1, false), end(x, false)));
                    chords.push((end(x, true), end(e2, false)));
                    near.push(e1);
                    west.push(e2);
                    xs.push(x);
                }
                // Left-bottom sector west->seam: west ends (outermost
                // first), the hole0-outer block, then seam-side ends
                // (innermost first).
                let mut sector = west.clone();
                sector.extend(out_lb.iter().copied());
                sector.extend(near.iter().rev().copied());
                out_lb = sector;
                d.cut[p][0] = xs.iter().rev().copied().collect();
            }
        }
    }

    // Assemble circle entry lists.
    d.circle[h0] = std::iter::once(Entry::FootSeam)
        .chain(h0_r.iter().map(|&c| Entry::Cross(c)))
        .chain(std::iter::once(Entry::FootCut(0)))
        .chain(h0_l.iter().map(|&c| Entry::Cross(c)))
        .collect();
    d.circle[h1] = std::iter::once(Entry::FootSeam)
        .chain(h1_r.iter().map(|&c| Entry::Cross(c)))
        .chain(std::iter::once(Entry::FootCut(1)))
        .chain(h1_l.iter().map(|&c| Entry::Cross(c)))
        .collect();
    d.circle[outer] = std::iter::once(Entry::FootSeam)
        .chain(out_rb.iter().map(|&c| Entry::Cross(c)))
        .chain(std::iter::once(Entry::FootCut(1)))
        .chain(std::iter::once(Entry::FootCut(0)))
        .chain(out_lb.iter().map(|&c| Entry::Cross(c)))
        .collect();

    for (x, y) in chords {
        d.add_chord(x, y);
    }
}

/// Connects the two circles of annulus `a` with `m` strands twisted `t`
/// times (or lays down `t` core circles when `m = 0`).
///
/// In the unrolled annulus the side-`i` points sit at heights
/// `u_k = (2k+1)/(2m)` in u-increasing order and every strand climbs by
/// `t/m`, so the strand from side-0 u-index `k` ends at side-1 u-index
/// `(k + t) mod m` and crosses the seam once for each integer in
/// `(u_k, u_k + t/m)`.
fn build_annulus(d: &mut Diagram, a: usize, m: i64, t: i64) {
    let (s0, s1) = d.pd.slots_of(a);
    if m == 0 {
        assert!(t >= 0);
        for _ in 0..t {
            let x = d.new_cross(Object::Seam(a));
            d.seam[a].push(x);
            d.add_chord(end(x, true), end(x, false));
        }
        return;
    }
    // Points in u-increasing order: the annulus walks side 0 with u
    // increasing and side 1 with u decreasing.
    let p0 = d.ann_walk(s0);
    let mut p1 = d.ann_walk(s1);
    p1.reverse();
    assert_eq!(p0.len(), m as usize, "side 0 of annulus {a}");
    assert_eq!(p1.len(), m as usize, "side 1 of annulus {a}");

    // Seam crossings of strand k at integer heights n, ordered along the
    // seam by the crossing abscissa (n - u_k)/(t/m), i.e. by the key
    // (2mn - 2k - 1) * sign(t).
    let mut order: Vec<(i64, usize, i64)> = Vec::new(); // (key, strand, n)
    let mut per_strand: Vec<Vec<i64>> = vec![Vec::new(); m as usize];
    for k in 0..m {
        let w = (2 * k + 1 + 2 * t).div_euclid(2 * m);
        let heights: Vec<i64> = if w >= 0 {
            (1..=w).collect()
        } else {
            (w + 1..=0).rev().collect()
        };
        for n in &heights {
            let key = (2 * m * n - 2 * k - 1) * t.signum();
            order.push((key, k as usize, *n));
        }
        per_strand[k as usize] = heights;
    }
    order.sort();
    let mut cross_of: std::collections::HashMap<(usize, i64), CrossId> =
        std::collections::HashMap::new();
    for (_, k, n) in &order {
        let x = d.new_cross(Object::Seam(a));
        d.seam[a].push(x);
        cross_of.insert((*k, *n), x);
    }
    let total: i64 = per_strand
        .iter()
        .map(|h| h.len() as i64 * t.signum())
        .sum();
    assert_eq!(total, t, "seam crossings sum to the twist");

    for k in 0..m as usize {
        let j = (k as i64 + t).rem_euclid(m) as usize;
        // Chain: side-0 point, its seam crossings in traversal order, the
        // matched side-1 point. Ascending strands enter each crossing from
        // the band below (T end) and leave above (B end).
        let mut prev = end(p0[k], true);
        for &n in &per_strand[k] {
            let x = cross_of[&(k, n)];
            let (enter, exit) = if t > 0 {
                (end(x, false), end(x, true))
            } else {
                (end(x, true), end(x, false))
            };
            d.add_chord(prev, enter);
            prev = exit;
        }
        d.add_chord(prev, end(p1[j], true));
    }
}

/// Reads Dehn-Thurston coordinates off a canonical (combed) diagram.
pub fn read_coords(d: &Diagram) -> DtCoordinates {
    let nc = d.pd.curve_count();
    let mut m = vec![0i64; nc];
    let mut t = vec![0i64; nc];
    for a in 0..nc {
        let (s0, s1) = d.pd.slots_of(a);
        let c0 = d.circle_crossings(s0).len();
        let c1 = d.circle_crossings(s1).len();
        assert_eq!(c0, c1, "unequal gate counts on annulus {a}");
        m[a] = c0 as i64;
    }
    // Twists: trace annulus strands; a T-to-B passage counts +1, B-to-T -1.
    // Core components (chord joining the two ends of one seam crossing)
    // count one parallel copy each.
    for a in 0..nc {
        let cores = d
            .chords
            .iter()
            .flatten()
            .filter(|(x, y)| {
                x.cross == y.cross
                    && matches!(d.obj[x.cross], Some(Object::Seam(s)) if s == a)
            })
            .count() as i64;
        let signed: i64 = strand_passages(d, a).iter().sum();
        if m[a] == 0 {
            t[a] = cores;
            assert_eq!(signed, 0);
        } else {
            assert_eq!(cores, 0, "cores on a crossed annulus");
            t[a] = signed;
        }
    }
    DtCoordinates::from_i64(
        &m.iter().copied().collect::<Vec<_>>(),
        &t.iter().copied().collect::<Vec<_>>(),
    )
}

/// Signed seam passages of annulus `a`: for each run of chords crossing the
/// annulus face from the side-0 circle to the side-1 circle, the signed
/// number of seam crossings along it.
fn strand_passages(d: &Diagram, a: usize) -> Vec<i64> {
    let (s0, _s1) = d.pd.slots_of(a);
    let mut out = Vec::new();
    for start in d.circle_crossings(s0) {
        // Walk from the annulus-side end of a side-0 point to the far
        // circle, accumulating seam signs.
        let mut signed = 0i64;
        let mut at = end(start, true);
        loop {
            let ch = d.chord_at(at).expect("end on chord");
            let (x, y) = d.chords[ch].unwrap();
            let far = if x == at { y } else { x };
            match d.obj[far.cross].unwrap() {
                Object::Circle(_) => break,
                Object::Seam(s) => {
                    assert_eq!(s, a);
                    // Arriving at the T end means climbing (+1).
                    signed += if !far.hi { 1 } else { -1 };
                    at = end(far.cross, !far.hi);
                }
                Object::Cut(..) => panic!("cut inside annulus face"),
            }
        }
        out.push(signed);
    }
    out
}
