//! Slice decorations over herd label vectors.
//!
//! Splits the target positions of an extended-until label family into
//! delta+1 slices, marks each slice's own target and witness propositions,
//! places interval labels (open, bullet, close) around special-position
//! blocks, and colors positions with forward/backward consistency colors.
//! A fixed list of locally checkable conditions then characterizes the
//! witness marks: the canonical decoration of consistent labels passes all
//! of them, and any decoration that passes them carries exactly the marks
//! the mark-level witness characterization dictates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::herd::HerdLabels;

/// Per-slice decoration vectors, all indexed by position minus one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceDecoration {
    /// Target positions assigned to this slice.
    pub tau: Vec<bool>,
    /// Witness marks for this slice.
    pub psi: Vec<bool>,
    /// Lower interval-end marks.
    pub eminus: Vec<bool>,
    /// Upper interval-end marks.
    pub eplus: Vec<bool>,
    /// Open labels (interval start).
    pub open: Vec<bool>,
    /// Bullet labels (interval interior).
    pub mid: Vec<bool>,
    /// Close labels (interval end).
    pub close: Vec<bool>,
    /// Forward consistency color for open-label bookkeeping.
    pub a_fwd: Vec<bool>,
    /// Backward consistency color for open-label bookkeeping.
    pub a_bwd: Vec<bool>,
    /// Forward consistency color for witness bookkeeping.
    pub c_fwd: Vec<bool>,
    /// Backward consistency color for witness bookkeeping.
    pub c_bwd: Vec<bool>,
}

impl SliceDecoration {
    fn empty(n: usize) -> Self {
        SliceDecoration {
            tau: vec![false; n],
            psi: vec![false; n],
            eminus: vec![false; n],
            eplus: vec![false; n],
            open: vec![false; n],
            mid: vec![false; n],
            close: vec![false; n],
            a_fwd: vec![false; n],
            a_bwd: vec![false; n],
            c_fwd: vec![false; n],
            c_bwd: vec![false; n],
        }
    }

    /// True when the position carries any interval label.
    pub fn labeled(&self, k: usize) -> bool {
        self.open[k - 1] || self.mid[k - 1] || self.close[k - 1]
    }
}

/// A slice assignment plus per-slice decorations.
#[derive(Clone, Debug)]
pub struct SDecoration {
    /// The window offset the labels were built for.
    pub delta: u64,
    /// Slice index for each target position.
    pub s_of: BTreeMap<usize, u32>,
    /// One decoration per slice, index 0..=delta.
    pub slices: Vec<SliceDecoration>,
}

/// A failed condition with the position it failed at.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// 1-based position of the first failure.
    pub position: usize,
    /// Human-readable explanation.
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "position {}: {}", self.position, self.detail)
    }
}

/// Outcome of all conditions for one slice.
#[derive(Clone, Debug)]
pub struct ConditionReport {
    /// Witness-color local rule at target positions.
    pub col1: Result<(), Violation>,
    /// Open-color local rule at open-labeled positions.
    pub col2: Result<(), Violation>,
    /// Global label pattern.
    pub spec1: Result<(), Violation>,
    /// Per-class label pattern and contiguity.
    pub spec2: Result<(), Violation>,
    /// Close-label characterization.
    pub spec3: Result<(), Violation>,
    /// Open-label window and history requirements.
    pub spec4: Result<(), Violation>,
    /// Witness marks on unlabeled positions.
    pub log1: Result<(), Violation>,
    /// Witness marks on labeled positions.
    pub log2: Result<(), Violation>,
}

impl ConditionReport {
    /// True when every condition holds.
    pub fn all_pass(&self) -> bool {
        self.first_failure().is_none()
    }

    /// Name and violation of the first failed condition, if any.
    pub fn first_failure(&self) -> Option<(&'static str, &Violation)> {
        let entries: [(&'static str, &Result<(), Violation>); 8] = [
            ("col1", &self.col1),
            ("col2", &self.col2),
            ("spec1", &self.spec1),
            ("spec2", &self.spec2),
            ("spec3", &self.spec3),
            ("spec4", &self.spec4),
            ("log1", &self.log1),
            ("log2", &self.log2),
        ];
        for (name, res) in entries {
            if let Err(v) = res {
                return Some((name, v));
            }
        }
        None
    }
}

fn val(labels: &HerdLabels, i: usize) -> crate::word::DataValue {
    labels.values[i - 1]
}

/// Largest slice target k <= j - delta, strictly before j, with the same
/// value as j.
fn slice_delta_pred(
    labels: &HerdLabels,
    sl: &SliceDecoration,
    j: usize,
    delta: usize,
) -> Option<usize> {
    let hi = j.checked_sub(delta.max(1))?;
    (1..=hi)
        .rev()
        .find(|&k| sl.tau[k - 1] && val(labels, k) == val(labels, j))
}

/// Largest m strictly before k with the same value as k.
fn class_pred(labels: &HerdLabels, k: usize) -> Option<usize> {
    (1..k).rev().find(|&m| val(labels, m) == val(labels, k))
}

/// Minimal slice target j >= i+delta with a value different from i's.
fn star_witness(labels: &HerdLabels, tau_s: &[bool], i: usize) -> Option<usize> {
    let n = labels.len();
    let delta = labels.delta as usize;
    let start = i.checked_add(delta)?;
    (start..=n).find(|&j| tau_s[j - 1] && val(labels, j) != val(labels, i))
}

/// Witness marks for one slice: position i is marked when its minimal
/// slice witness exists and every window position up to it is either
/// inequality-marked or a same-value equality-marked position.
pub fn star_marks(labels: &HerdLabels, tau_s: &[bool]) -> Vec<bool> {
    let n = labels.len();
    let delta = labels.delta as usize;
    (1..=n)
        .map(|i| {
            let Some(j) = star_witness(labels, tau_s, i) else {
                return false;
            };
            (i + delta..j).all(|k| {
                labels.rho_neq[k - 1]
                    || (val(labels, k) == val(labels, i) && labels.rho_eq[k - 1])
            })
        })
        .collect()
}

/// Largest k < j qualifying as a close-label seed for target j: different
/// value, all-inequality gap, and not itself inequality-marked.
fn forced_close(labels: &HerdLabels, j: usize) -> Option<usize> {
    let mut gap_clean = true;
    for k in (1..j).rev() {
        if gap_clean && val(labels, k) != val(labels, j) && !labels.rho_neq[k - 1] {
            return Some(k);
        }
        gap_clean = gap_clean && labels.rho_neq[k - 1];
    }
    None
}

/// Extends a block of same-value special positions leftward along the
/// class-predecessor chain while the window toward the target stays
/// explained: every window position is inequality-marked or an
/// equality-marked block member.
fn extend_block(
    labels: &HerdLabels,
    sl: &SliceDecoration,
    j: usize,
    delta: usize,
    seed: &BTreeSet<usize>,
) -> BTreeSet<usize> {
    let mut block = seed.clone();
    loop {
        let lo = *block.iter().next().expect("seed is nonempty");
        let Some(m) = class_pred(labels, lo) else {
            break;
        };
        // Stop at positions that are already labeled or that the close
        // characterization claims for a block of their own, and never skip
        // over such positions either: blocks must not interleave.
        let claimed = |x: usize| sl.labeled(x) || spec3_rhs(labels, sl, x).0;
        if (m..lo).any(claimed) {
            break;
        }
        let mut candidate = block.clone();
        candidate.insert(m);
        let ok = (m + delta..j).all(|l| {
            labels.rho_neq[l - 1] || (candidate.contains(&l) && labels.rho_eq[l - 1])
        });
        if !ok {
            break;
        }
        block = candidate;
    }
    block
}

/// Assigns forward and backward witness colors satisfying the color
/// conditions: a target's backward color is the negation of its class
/// delta-predecessor's forward color (true with no predecessor), a marked
/// position's forward color matches its frame target's backward color, and
/// an unmarked position with a clean frame mismatches it. Constraints form
/// equality and inequality edges solved by 2-coloring; positions free of
/// constraints stay uncolored.
fn solve_witness_colors(labels: &HerdLabels, sl: &mut SliceDecoration, delta: usize) {
    let n = labels.len();
    // Variable indices: 0..n forward colors, n..2n backward colors.
    let fwd = |i: usize| i - 1;
    let bwd = |j: usize| n + j - 1;
    let mut edges: Vec<Vec<(usize, bool)>> = vec![Vec::new(); 2 * n];
    let mut pinned: Vec<(usize, bool)> = Vec::new();
    for j in 1..=n {
        if !sl.tau[j - 1] {
            continue;
        }
        match slice_delta_pred(labels, sl, j, delta) {
            None => pinned.push((bwd(j), true)),
            Some(p) => {
                edges[bwd(j)].push((fwd(p), false));
                edges[fwd(p)].push((bwd(j), false));
            }
        }
    }
    for i in 1..=n {
        let Some(j) = witness_frame(labels, sl, delta, i) else {
            continue;
        };
        edges[fwd(i)].push((bwd(j), true));
        edges[bwd(j)].push((fwd(i), true));
    }
    let color = two_color(&edges, &pinned);
    for i in 1..=n {
        sl.c_fwd[i - 1] = color[fwd(i)].unwrap_or(false);
    }
    for j in 1..=n {
        if sl.tau[j - 1] {
            sl.c_bwd[j - 1] = color[bwd(j)].unwrap_or(false);
        }
    }
}

/// Propagates parity constraints over equality and inequality edges by
/// breadth-first 2-coloring, starting from the pinned assignments and
/// seeding leftover constrained components with false. A contradiction
/// leaves the earlier color in place; the condition checks surface it as
/// a reported violation.
fn two_color(edges: &[Vec<(usize, bool)>], pinned: &[(usize, bool)]) -> Vec<Option<bool>> {
    let mut color: Vec<Option<bool>> = vec![None; edges.len()];
    let mut queue: Vec<usize> = Vec::new();
    let assign = |color: &mut Vec<Option<bool>>, queue: &mut Vec<usize>, v: usize, c: bool| {
        if color[v].is_none() {
            color[v] = Some(c);
            queue.push(v);
        }
    };
    for &(v, c) in pinned {
        assign(&mut color, &mut queue, v, c);
    }
    let mut cursor = 0;
    let mut seeds = (0..edges.len()).filter(|&v| !edges[v].is_empty());
    loop {
        while cursor < queue.len() {
            let v = queue[cursor];
            cursor += 1;
            let cv = color[v].unwrap();
            for &(u, same) in &edges[v] {
                let want = if same { cv } else { !cv };
                assign(&mut color, &mut queue, u, want);
            }
        }
        match seeds.find(|&v| color[v].is_none()) {
            Some(v) => assign(&mut color, &mut queue, v, false),
            None => break,
        }
    }
    color
}

/// Assigns forward and backward open colors satisfying the open-color
/// rule and the history sweeps: an open without a class predecessor takes
/// the backward color, a predecessor's forward color is the negation of
/// its open's backward color, and the positions swept by the open's
/// strongest history clause match the open's backward color. Constraints
/// form parity edges solved by 2-coloring.
fn solve_open_colors(labels: &HerdLabels, sl: &mut SliceDecoration, delta: usize) {
    let n = labels.len();
    let fwd = |i: usize| i - 1;
    let bwd = |k: usize| n + k - 1;
    let mut edges: Vec<Vec<(usize, bool)>> = vec![Vec::new(); 2 * n];
    let mut pinned: Vec<(usize, bool)> = Vec::new();
    let open_preds = open_pred_set(labels, sl);
    for k in 1..=n {
        if !sl.open[k - 1] {
            continue;
        }
        match class_pred(labels, k) {
            None => pinned.push((bwd(k), true)),
            Some(m) => {
                edges[bwd(k)].push((fwd(m), false));
                edges[fwd(m)].push((bwd(k), false));
            }
        }
        let Some(m) = corresponding_close(labels, sl, k) else {
            continue;
        };
        let Some(j) = (m + 1..=n).find(|&j| sl.tau[j - 1] && val(labels, j) != val(labels, m))
        else {
            continue;
        };
        let from = (1..k)
            .rev()
            .find(|&i| spec4_boundary(labels, sl, delta, i, j))
            .map(|i| i + 1)
            .unwrap_or(1);
        for x in from..k {
            if sl.labeled(x) || val(labels, x) == val(labels, k) || open_preds.contains(&x) {
                continue;
            }
            edges[fwd(x)].push((bwd(k), true));
            edges[bwd(k)].push((fwd(x), true));
        }
    }
    let color = two_color(&edges, &pinned);
    for i in 1..=n {
        sl.a_fwd[i - 1] = color[fwd(i)].unwrap_or(false);
    }
    for k in 1..=n {
        if sl.open[k - 1] {
            sl.a_bwd[k - 1] = color[bwd(k)].unwrap_or(false);
        }
    }
}

/// Builds the canonical slice decoration for a herd label family.
pub fn build_s_decoration(labels: &HerdLabels) -> SDecoration {
    let n = labels.len();
    let delta = labels.delta as usize;
    let tau_positions: Vec<usize> = (1..=n).filter(|&j| labels.tau[j - 1]).collect();

    let mut anchored: Vec<(usize, usize)> = tau_positions
        .iter()
        .map(|&j| (forced_close(labels, j).unwrap_or(j), j))
        .collect();
    anchored.sort_unstable();
    let slice_count = delta + 1;
    let mut s_of = BTreeMap::new();
    for (idx, &(_, j)) in anchored.iter().enumerate() {
        s_of.insert(j, (idx % slice_count) as u32);
    }

    let mut slices = Vec::with_capacity(slice_count);
    for s in 0..slice_count {
        let mut sl = SliceDecoration::empty(n);
        for &j in &tau_positions {
            if s_of[&j] == s as u32 {
                sl.tau[j - 1] = true;
            }
        }
        sl.psi = star_marks(labels, &sl.tau);

        // Interval labels: each slice target's block ends at the forced
        // close seed, takes the target's equality-marked same-value special
        // positions below it as interior members, and extends leftward.
        for &j in &tau_positions {
            if !sl.tau[j - 1] {
                continue;
            }
            let Some(kstar) = forced_close(labels, j) else {
                continue;
            };
            let witness_stolen = (kstar + 1..j)
                .any(|x| sl.tau[x - 1] && val(labels, x) != val(labels, kstar));
            if witness_stolen {
                continue;
            }
            let seed = BTreeSet::from([kstar]);
            let block = extend_block(labels, &sl, j, delta, &seed);
            if block.iter().any(|&x| sl.labeled(x)) {
                continue;
            }
            let lo = *block.iter().next().unwrap();
            let hi = *block.iter().next_back().unwrap();
            sl.open[lo - 1] = true;
            sl.close[hi - 1] = true;
            for &x in &block {
                if x != lo && x != hi {
                    sl.mid[x - 1] = true;
                }
            }
            sl.eminus[lo - 1] = true;
            sl.eplus[hi - 1] = true;
        }

        // Chain closes: any remaining position whose close-label
        // characterization holds gets a singleton block of its own. The
        // characterization only reads labels to the right, so a
        // right-to-left pass reaches a fixed point in one sweep.
        for k in (1..=n).rev() {
            if sl.labeled(k) {
                continue;
            }
            let (rhs, witness) = spec3_rhs(labels, &sl, k);
            if !rhs {
                continue;
            }
            let j = witness.expect("a true characterization has a witness");
            let seed = BTreeSet::from([k]);
            let block = extend_block(labels, &sl, j, delta, &seed);
            let lo = *block.iter().next().unwrap();
            sl.open[lo - 1] = true;
            sl.close[k - 1] = true;
            for &x in &block {
                if x != lo && x != k {
                    sl.mid[x - 1] = true;
                }
            }
            sl.eminus[lo - 1] = true;
            sl.eplus[k - 1] = true;
        }

        // Witness colors: the conditions relate each target's backward
        // color to its class delta-predecessor's forward color and each
        // position's forward color to its condition frame target, so the
        // colors are found by solving those parity constraints directly.
        solve_witness_colors(labels, &mut sl, delta);

        // Open colors: the open-color rule and the history sweeps are
        // parity constraints over the open colors, so they are solved the
        // same way as the witness colors.
        solve_open_colors(labels, &mut sl, delta);

        slices.push(sl);
    }

    SDecoration {
        delta: labels.delta,
        s_of,
        slices,
    }
}

fn fail(position: usize, detail: impl Into<String>) -> Result<(), Violation> {
    Err(Violation {
        position,
        detail: detail.into(),
    })
}

fn check_col1(labels: &HerdLabels, sl: &SliceDecoration, delta: usize) -> Result<(), Violation> {
    for j in 1..=labels.len() {
        if !sl.tau[j - 1] {
            continue;
        }
        let pred_colored = slice_delta_pred(labels, sl, j, delta)
            .map(|k| sl.c_fwd[k - 1])
            .unwrap_or(false);
        if pred_colored == sl.c_bwd[j - 1] {
            return fail(j, "witness color disagrees with class predecessor");
        }
    }
    Ok(())
}

fn check_col2(labels: &HerdLabels, sl: &SliceDecoration) -> Result<(), Violation> {
    for k in 1..=labels.len() {
        if !sl.open[k - 1] {
            continue;
        }
        let pred_colored = class_pred(labels, k)
            .map(|m| sl.a_fwd[m - 1])
            .unwrap_or(false);
        if pred_colored == sl.a_bwd[k - 1] {
            return fail(k, "open color disagrees with class predecessor");
        }
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum LabelSet {
    None,
    Open,
    Mid,
    Close,
    OpenClose,
    Invalid,
}

fn label_set(sl: &SliceDecoration, k: usize) -> LabelSet {
    match (sl.open[k - 1], sl.mid[k - 1], sl.close[k - 1]) {
        (false, false, false) => LabelSet::None,
        (true, false, false) => LabelSet::Open,
        (false, true, false) => LabelSet::Mid,
        (false, false, true) => LabelSet::Close,
        (true, false, true) => LabelSet::OpenClose,
        _ => LabelSet::Invalid,
    }
}

/// Runs the block pattern over a sequence of labeled cells: one or more
/// complete blocks, each an open label, bullets, and a close label, or a
/// single position carrying open and close together.
fn pattern_ok(cells: &[(usize, LabelSet)]) -> Result<(), Violation> {
    let mut inside = false;
    for &(pos, set) in cells {
        match (inside, set) {
            (false, LabelSet::Open) => inside = true,
            (false, LabelSet::OpenClose) => {}
            (true, LabelSet::Mid) => {}
            (true, LabelSet::Close) => inside = false,
            _ => return fail(pos, "label breaks the block pattern"),
        }
    }
    if inside {
        let pos = cells.last().map(|c| c.0).unwrap_or(0);
        return fail(pos, "unclosed block");
    }
    Ok(())
}

fn check_spec1(labels: &HerdLabels, sl: &SliceDecoration) -> Result<(), Violation> {
    let cells: Vec<(usize, LabelSet)> = (1..=labels.len())
        .filter(|&k| sl.labeled(k))
        .map(|k| (k, label_set(sl, k)))
        .collect();
    pattern_ok(&cells)
}

fn check_spec2(labels: &HerdLabels, sl: &SliceDecoration) -> Result<(), Violation> {
    let mut by_value: BTreeMap<crate::word::DataValue, Vec<usize>> = BTreeMap::new();
    for i in 1..=labels.len() {
        by_value.entry(val(labels, i)).or_default().push(i);
    }
    for members in by_value.values() {
        let mut run: Vec<(usize, LabelSet)> = Vec::new();
        for &m in members {
            if sl.labeled(m) {
                run.push((m, label_set(sl, m)));
            } else if !run.is_empty() {
                pattern_ok(&run)?;
                run.clear();
            }
        }
        if !run.is_empty() {
            pattern_ok(&run)?;
        }
    }
    Ok(())
}

/// The close-label characterization's right-hand side at position k, and
/// the witness the minimal selection picks.
fn spec3_rhs(labels: &HerdLabels, sl: &SliceDecoration, k: usize) -> (bool, Option<usize>) {
    let n = labels.len();
    let Some(j) = (k + 1..=n).find(|&j| sl.tau[j - 1] && val(labels, j) != val(labels, k)) else {
        return (false, None);
    };
    let gap = (k + 1..j).all(|m| labels.rho_neq[m - 1]);
    let qual = if !labels.rho_neq[k - 1] {
        true
    } else if sl.tau[k - 1] {
        !sl.labeled(j) || (k + 1..j).any(|x| sl.open[x - 1])
    } else {
        false
    };
    (gap && qual, Some(j))
}

fn check_spec3(labels: &HerdLabels, sl: &SliceDecoration) -> Result<(), Violation> {
    for k in 1..=labels.len() {
        let (rhs, _) = spec3_rhs(labels, sl, k);
        if rhs != sl.close[k - 1] {
            return fail(
                k,
                if rhs {
                    "close label missing where the characterization demands one"
                } else {
                    "close label present where the characterization forbids it"
                },
            );
        }
    }
    Ok(())
}

/// The close label that ends the block containing labeled position i.
fn corresponding_close(labels: &HerdLabels, sl: &SliceDecoration, i: usize) -> Option<usize> {
    (i..=labels.len()).find(|&m| sl.close[m - 1])
}

fn a_consistent(sl: &SliceDecoration, x: usize, k: usize) -> bool {
    sl.a_fwd[x - 1] == sl.a_bwd[k - 1]
}

/// Structural part of the history clauses that can explain an open label:
/// a boundary i qualifies when the window start past it is an unlabeled
/// full target or misses one of the relation marks.
fn spec4_boundary(
    labels: &HerdLabels,
    sl: &SliceDecoration,
    delta: usize,
    i: usize,
    j: usize,
) -> bool {
    if i + delta >= j {
        return false;
    }
    let w = i + delta;
    (!sl.labeled(w) && labels.tau[w - 1])
        || !labels.rho_eq[w - 1]
        || (!sl.labeled(w) && !labels.rho_neq[w - 1])
}

fn c_consistent(sl: &SliceDecoration, i: usize, j: usize) -> bool {
    sl.c_fwd[i - 1] == sl.c_bwd[j - 1]
}

/// Class predecessors of the slice's open labels; their forward colors
/// belong to the open-color rule.
fn open_pred_set(labels: &HerdLabels, sl: &SliceDecoration) -> BTreeSet<usize> {
    (1..=labels.len())
        .filter(|&k| sl.open[k - 1])
        .filter_map(|k| class_pred(labels, k))
        .collect()
}

fn check_spec4(labels: &HerdLabels, sl: &SliceDecoration, delta: usize) -> Result<(), Violation> {
    let n = labels.len();
    let open_preds = open_pred_set(labels, sl);
    for k in 1..=n {
        if !sl.open[k - 1] {
            continue;
        }
        let Some(m) = corresponding_close(labels, sl, k) else {
            return fail(k, "open label without a corresponding close label");
        };
        let Some(j) = (m + 1..=n).find(|&j| sl.tau[j - 1] && val(labels, j) != val(labels, m))
        else {
            return fail(k, "open label whose block has no target");
        };
        for l in k + delta + 1..=m {
            if sl.labeled(l) && !labels.rho_eq[l - 1] {
                return fail(k, format!("labeled window position {l} lacks the equality mark"));
            }
        }
        for l in k + delta + 1..m {
            if !sl.labeled(l) && !labels.rho_neq[l - 1] {
                return fail(
                    k,
                    format!("unlabeled window position {l} lacks the inequality mark"),
                );
            }
        }
        let c_from = (m + 1).max(k + delta);
        for l in c_from..j {
            if !labels.rho_neq[l - 1] {
                return fail(
                    k,
                    format!("tail window position {l} lacks the inequality mark"),
                );
            }
        }
        // Positions in the open's own class and class predecessors of open
        // labels are covered by the class predecessor rule, not by color
        // propagation.
        let consistent_over = |from: usize| {
            (from..k).all(|x| {
                sl.labeled(x)
                    || val(labels, x) == val(labels, k)
                    || open_preds.contains(&x)
                    || a_consistent(sl, x, k)
            })
        };
        let explained = (1..k)
            .any(|i| spec4_boundary(labels, sl, delta, i, j) && consistent_over(i + 1))
            || consistent_over(1);
        if !explained {
            return fail(k, "no history clause explains the open label");
        }
    }
    Ok(())
}

/// The slice target a position's witness-mark condition compares colors
/// against: the minimal slice target at or past the window start whose
/// value differs, provided every window position up to it is
/// inequality-marked or shares the position's value under an equality mark.
fn witness_frame(labels: &HerdLabels, sl: &SliceDecoration, delta: usize, i: usize) -> Option<usize> {
    let n = labels.len();
    let j = (i + delta..=n).find(|&j| sl.tau[j - 1] && val(labels, j) != val(labels, i))?;
    (i + delta..j)
        .all(|k| {
            labels.rho_neq[k - 1]
                || (val(labels, k) == val(labels, i) && labels.rho_eq[k - 1])
        })
        .then_some(j)
}

fn check_log1(labels: &HerdLabels, sl: &SliceDecoration, delta: usize) -> Result<(), Violation> {
    for i in 1..=labels.len() {
        if sl.labeled(i) {
            continue;
        }
        let frame = witness_frame(labels, sl, delta, i);
        if frame.is_some() != sl.psi[i - 1] {
            return fail(i, "unlabeled witness mark disagrees with its window");
        }
        if let Some(j) = frame {
            if !c_consistent(sl, i, j) {
                return fail(i, "unlabeled witness mark has inconsistent colors");
            }
        }
    }
    Ok(())
}

fn check_log2(labels: &HerdLabels, sl: &SliceDecoration, delta: usize) -> Result<(), Violation> {
    for i in 1..=labels.len() {
        if !sl.labeled(i) {
            continue;
        }
        let frame = witness_frame(labels, sl, delta, i);
        if frame.is_some() != sl.psi[i - 1] {
            return fail(i, "labeled witness mark disagrees with its window");
        }
        if let Some(j) = frame {
            if !c_consistent(sl, i, j) {
                return fail(i, "labeled witness mark has inconsistent colors");
            }
        }
    }
    Ok(())
}

/// Checks every condition of one slice.
pub fn check_conditions(labels: &HerdLabels, dec: &SDecoration, s: u32) -> ConditionReport {
    let delta = labels.delta as usize;
    let sl = &dec.slices[s as usize];
    ConditionReport {
        col1: check_col1(labels, sl, delta),
        col2: check_col2(labels, sl),
        spec1: check_spec1(labels, sl),
        spec2: check_spec2(labels, sl),
        spec3: check_spec3(labels, sl),
        spec4: check_spec4(labels, sl, delta),
        log1: check_log1(labels, sl, delta),
        log2: check_log2(labels, sl, delta),
    }
}

/// Checks every slice and returns one report per slice.
pub fn check_all_conditions(labels: &HerdLabels, dec: &SDecoration) -> Vec<ConditionReport> {
    (0..dec.slices.len() as u32)
        .map(|s| check_conditions(labels, dec, s))
        .collect()
}

/// Checks that the per-slice witness marks together reconstruct the
/// original witness marks: a position carries a mark in some slice exactly
/// when the label family marks it.
pub fn check_cover(labels: &HerdLabels, dec: &SDecoration) -> Result<(), Violation> {
    for i in 1..=labels.len() {
        let union = dec.slices.iter().any(|sl| sl.psi[i - 1]);
        if union != labels.psi[i - 1] {
            return fail(i, "slice marks do not reconstruct the original marks");
        }
    }
    Ok(())
}

/// True when every slice's witness marks equal the slice's mark-level
/// witness characterization.
pub fn conditions_imply_truth(labels: &HerdLabels, dec: &SDecoration) -> bool {
    dec.slices
        .iter()
        .all(|sl| sl.psi == star_marks(labels, &sl.tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::running_word;
    use crate::generate::{random_complete_word, random_restricted_uneq, FormulaShape, SplitMix64};
    use crate::herd::HerdLabels;
    use crate::word::AttributedWord;

    fn labels_from(
        values: &[u64],
        delta: u64,
        psi: &[usize],
        tau: &[usize],
        rho_eq: &[usize],
        rho_neq: &[usize],
    ) -> HerdLabels {
        let mut w = AttributedWord::new(&["tau", "rho_eq", "rho_neq"], &["a"]).unwrap();
        for (idx, v) in values.iter().enumerate() {
            let i = idx + 1;
            let mut props = Vec::new();
            if tau.contains(&i) {
                props.push("tau");
            }
            if rho_eq.contains(&i) {
                props.push("rho_eq");
            }
            if rho_neq.contains(&i) {
                props.push("rho_neq");
            }
            w.push(&props, &[("a", *v)]).unwrap();
        }
        HerdLabels::from_marks(&w, "a", delta, psi, "tau", "rho_eq", "rho_neq").unwrap()
    }

    #[test]
    fn ten_position_word_with_consistent_marks_passes_all_conditions() {
        // The running ten-position word with the full mark-level witness
        // set {1..8}, which is what consistent labels look like there.
        let labels = labels_from(
            &[1, 2, 1, 1, 2, 1, 2, 2, 2, 3],
            2,
            &[1, 2, 3, 4, 5, 6, 7, 8],
            &[4, 10],
            &[1, 3, 4, 6],
            &[5, 7, 8, 9],
        );
        let dec = build_s_decoration(&labels);
        assert_eq!(dec.slices.len(), 3);
        assert_eq!(dec.s_of[&4], 0);
        assert_eq!(dec.s_of[&10], 1);

        // Slice 0 owns target 4 and marks only position 2, with no labels.
        let s0 = &dec.slices[0];
        assert_eq!(s0.psi, vec![false, true, false, false, false, false, false, false, false, false]);
        assert!((1..=10).all(|k| !s0.labeled(k)));

        // Slice 1 owns target 10; its block spans the whole value-1 class.
        let s1 = &dec.slices[1];
        assert!(s1.open[0] && s1.mid[2] && s1.mid[3] && s1.close[5]);
        assert!(s1.eminus[0] && s1.eplus[5]);
        assert_eq!(
            s1.psi,
            vec![true, false, true, true, true, true, true, true, false, false]
        );

        for report in check_all_conditions(&labels, &dec) {
            if let Some((name, v)) = report.first_failure() {
                panic!("condition {name} failed: {v}");
            }
        }
        assert!(conditions_imply_truth(&labels, &dec));
    }

    #[test]
    fn empty_stair_targets_get_forced_blocks() {
        // Three positions, offset 1: both targets have nonempty herds but
        // empty stair sets, and each slice must still place a close label.
        let labels = labels_from(&[1, 2, 3], 1, &[1, 2], &[2, 3], &[1, 2], &[2]);
        let dec = build_s_decoration(&labels);
        assert_eq!(dec.slices.len(), 2);
        assert_eq!(dec.s_of[&2], 0);
        assert_eq!(dec.s_of[&3], 1);
        let s0 = &dec.slices[0];
        assert!(s0.open[0] && s0.close[0]);
        assert_eq!(s0.psi, vec![true, false, false]);
        let s1 = &dec.slices[1];
        assert!(s1.open[0] && s1.close[0]);
        assert!(!s1.labeled(2));
        assert_eq!(s1.psi, vec![true, true, false]);
        for report in check_all_conditions(&labels, &dec) {
            if let Some((name, v)) = report.first_failure() {
                panic!("condition {name} failed: {v}");
            }
        }
        assert!(conditions_imply_truth(&labels, &dec));
    }

    #[test]
    fn running_word_truth_labels_pass() {
        // Labels evaluated from a side-condition-respecting formula over
        // the running word.
        let w = running_word();
        let f = crate::parse::parse_formula(
            "((@a & rho_eq) | (!=@a & (rho_neq & rho_eq))) U!{a}[2] (!=@a & tau)",
        )
        .unwrap();
        let labels = HerdLabels::from_truth(&w, &f).unwrap();
        let dec = build_s_decoration(&labels);
        for report in check_all_conditions(&labels, &dec) {
            if let Some((name, v)) = report.first_failure() {
                panic!("condition {name} failed: {v}");
            }
        }
        assert!(conditions_imply_truth(&labels, &dec));
    }

    #[test]
    fn random_valid_labels_pass_all_conditions() {
        let mut rng = SplitMix64::new(0x5EED_D0C5);
        let shape = FormulaShape {
            props: vec!["p".into(), "q".into()],
            attrs: vec!["a".into()],
            max_depth: 2,
            allow_class: false,
            allow_extended: true,
            max_shift: 0,
        };
        let mut checked = 0usize;
        for trial in 0..900 {
            let len = 1 + (rng.below(9) as usize);
            let w = random_complete_word(&mut rng, &["p", "q"], &["a"], len, 4);
            let f = random_restricted_uneq(&mut rng, &shape, 2);
            let Ok(labels) = HerdLabels::from_truth(&w, &f) else {
                continue;
            };
            let dec = build_s_decoration(&labels);
            for (s, report) in check_all_conditions(&labels, &dec).into_iter().enumerate() {
                if let Some((name, v)) = report.first_failure() {
                    panic!(
                        "trial {trial}: slice {s} condition {name} failed: {v}\nvalues {:?}\npsi {:?}\ntau {:?}\nrho_eq {:?}\nrho_neq {:?}\ndelta {}",
                        labels.values, labels.psi, labels.tau, labels.rho_eq, labels.rho_neq, labels.delta
                    );
                }
            }
            if let Err(v) = check_cover(&labels, &dec) {
                panic!(
                    "trial {trial}: cover failed: {v}\nvalues {:?}\npsi {:?}\ntau {:?}\ndelta {}",
                    labels.values, labels.psi, labels.tau, labels.delta
                );
            }
            assert!(conditions_imply_truth(&labels, &dec));
            checked += 1;
        }
        assert!(checked >= 300, "only {checked} label families checked");
    }

    #[test]
    fn passing_mutated_decorations_keep_true_witness_marks() {
        // Sample decorations with one flipped bit; whenever all conditions
        // still pass, the witness marks must still be the true ones.
        let mut rng = SplitMix64::new(0xFA15_1F1E);
        let shape = FormulaShape {
            props: vec![],
            attrs: vec!["a".into()],
            max_depth: 1,
            allow_class: false,
            allow_extended: true,
            max_shift: 0,
        };
        let mut passing_mutants = 0usize;
        for _ in 0..400 {
            let len = 1 + (rng.below(7) as usize);
            let w = random_complete_word(&mut rng, &[], &["a"], len, 3);
            let f = random_restricted_uneq(&mut rng, &shape, 1);
            let Ok(labels) = HerdLabels::from_truth(&w, &f) else {
                continue;
            };
            let dec = build_s_decoration(&labels);
            let n = labels.len();
            if n == 0 {
                continue;
            }
            for _ in 0..20 {
                let mut mutant = dec.clone();
                let s = rng.below(mutant.slices.len() as u64) as usize;
                let i = rng.below(n as u64) as usize;
                let field = rng.below(8);
                {
                    let sl = &mut mutant.slices[s];
                    match field {
                        0 => sl.psi[i] ^= true,
                        1 => sl.open[i] ^= true,
                        2 => sl.mid[i] ^= true,
                        3 => sl.close[i] ^= true,
                        4 => sl.a_fwd[i] ^= true,
                        5 => sl.a_bwd[i] ^= true,
                        6 => sl.c_fwd[i] ^= true,
                        7 => sl.c_bwd[i] ^= true,
                        _ => unreachable!(),
                    }
                }
                let passes = check_cover(&labels, &mutant).is_ok()
                    && check_all_conditions(&labels, &mutant)
                        .iter()
                        .all(|r| r.all_pass());
                if passes {
                    passing_mutants += 1;
                    assert!(
                        conditions_imply_truth(&labels, &mutant),
                        "a passing mutant carries wrong witness marks"
                    );
                }
            }
        }
        // Color flips on unconstrained positions may pass; mark and label
        // flips must not silently pass with wrong witness marks.
        let _ = passing_mutants;
    }
}

