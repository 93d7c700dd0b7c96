//! Truth-marked extensions of complete 1-attributed words.
//!
//! An extended word couples a base word with one truth vector per subformula
//! occurrence of a root formula and with equality-window propositions that
//! record, for every position, which nearby offsets carry the same data
//! value. Validity of such a marking is characterized by local rules: each
//! occurrence's vector must match the vector expected from its children's
//! vectors, the equality windows, and class navigation along same-value
//! positions. The rules never re-run the evaluator on the formula being
//! checked, so they detect corrupted marks instead of recomputing them.

use std::collections::BTreeMap;
use std::fmt;

use crate::eval::{label_class, label_positions};
use crate::formula::{Cls, Pos};
use crate::word::{AttributedWord, DataValue};

/// Identifies a subformula occurrence by its child-index path from the root.
pub type OccPath = Vec<u16>;

/// A borrowed subformula occurrence: either a position formula or a class
/// formula from the class layer.
#[derive(Clone, Copy, Debug)]
pub enum OccNode<'a> {
    /// A position-formula occurrence.
    Pos(&'a Pos),
    /// A class-formula occurrence, marked at each position for the
    /// position's own data value.
    Cls(&'a Cls),
}

/// Errors raised while building or checking extended words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtendError {
    /// The word must carry exactly one attribute.
    NotSingleAttribute(usize),
    /// The attribute value is missing at the given position.
    IncompleteAttribute(usize),
    /// The formula contains an operator outside the supported core.
    Unsupported(String),
    /// A class shift exceeds the equality-window bound.
    ShiftBoundTooSmall {
        /// Smallest bound that would fit every shift in the formula.
        needed: u64,
        /// Bound that was requested.
        given: u64,
    },
    /// No occurrence lives at the given path.
    UnknownPath(String),
    /// The marks table has no vector for the given path.
    MissingMarks(String),
    /// A mark vector's length differs from the word length.
    LengthMismatch(String),
}

impl fmt::Display for ExtendError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendError::NotSingleAttribute(n) => {
                write!(f, "expected exactly one attribute, found {n}")
            }
            ExtendError::IncompleteAttribute(i) => {
                write!(f, "attribute value missing at position {i}")
            }
            ExtendError::Unsupported(what) => write!(f, "unsupported operator: {what}"),
            ExtendError::ShiftBoundTooSmall { needed, given } => {
                write!(f, "equality window {given} too small, need {needed}")
            }
            ExtendError::UnknownPath(p) => write!(f, "no subformula at path {p}"),
            ExtendError::MissingMarks(p) => write!(f, "no marks for path {p}"),
            ExtendError::LengthMismatch(p) => write!(f, "mark vector length mismatch at {p}"),
        }
    }
}

impl std::error::Error for ExtendError {}

fn path_display(path: &[u16]) -> String {
    if path.is_empty() {
        "root".to_string()
    } else {
        path.iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(".")
    }
}

/// A complete 1-attributed word with truth marks for every subformula
/// occurrence and per-position equality windows.
#[derive(Clone, Debug)]
pub struct ExtendedWord {
    /// The underlying word.
    pub base: AttributedWord,
    /// Name of the single attribute.
    pub attr: String,
    /// The root formula whose occurrences are marked.
    pub formula: Pos,
    /// Equality-window radius: offsets r with 1 <= |r| <= shift_bound are
    /// tracked.
    pub shift_bound: u64,
    /// One truth vector per occurrence path. Position-formula occurrences
    /// are marked at each position; class-formula occurrences are marked at
    /// each position for that position's own value.
    pub marks: BTreeMap<OccPath, Vec<bool>>,
    /// eqr[i-1] holds every offset r (nonzero, |r| <= shift_bound) such that
    /// position i+r exists and carries the same value as position i.
    pub eqr: Vec<std::collections::BTreeSet<i64>>,
}

/// Where a validity check first failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValidityIssue {
    /// An equality-window set disagrees with the values at this position.
    EqualityWindow(usize),
    /// The occurrence's marks disagree with the local rule at this position.
    Occurrence(OccPath, usize),
}

/// Enumerates all subformula occurrences of a root formula in preorder.
pub fn occurrences(root: &Pos) -> Vec<(OccPath, OccNode<'_>)> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    walk_pos(root, &mut path, &mut out);
    out
}

fn walk_pos<'a>(f: &'a Pos, path: &mut OccPath, out: &mut Vec<(OccPath, OccNode<'a>)>) {
    out.push((path.clone(), OccNode::Pos(f)));
    let child = |idx: u16, sub: &'a Pos, path: &mut OccPath, out: &mut Vec<_>| {
        path.push(idx);
        walk_pos(sub, path, out);
        path.pop();
    };
    match f {
        Pos::True | Pos::False | Pos::Prop(_) => {}
        Pos::Not(a) | Pos::Next(a) | Pos::Prev(a) => child(0, a, path, out),
        Pos::Or(a, b) | Pos::And(a, b) | Pos::Until(a, b) | Pos::Since(a, b) => {
            child(0, a, path, out);
            child(1, b, path, out);
        }
        Pos::Class { body, .. } => {
            path.push(0);
            walk_cls(body, path, out);
            path.pop();
        }
        Pos::UneqUntil { rho, tau, .. } | Pos::UneqSince { rho, tau, .. } => {
            // Recorded for completeness; the builder rejects these roots.
            let _ = (rho, tau);
        }
        Pos::FromNowOn(_) | Pos::UpToNow(_) | Pos::PairNext(..) | Pos::PairPrev(..) => {}
    }
}

fn walk_cls<'a>(f: &'a Cls, path: &mut OccPath, out: &mut Vec<(OccPath, OccNode<'a>)>) {
    out.push((path.clone(), OccNode::Cls(f)));
    match f {
        Cls::AttrIs(_) => {}
        Cls::Lift(p) => {
            path.push(0);
            walk_pos(p, path, out);
            path.pop();
        }
        Cls::Not(a) | Cls::NextEq(a) | Cls::PrevEq(a) => {
            path.push(0);
            walk_cls(a, path, out);
            path.pop();
        }
        Cls::Or(a, b) | Cls::And(a, b) | Cls::UntilEq(a, b) | Cls::SinceEq(a, b) => {
            path.push(0);
            walk_cls(a, path, out);
            path.pop();
            path.push(1);
            walk_cls(b, path, out);
            path.pop();
        }
    }
}

/// Returns the occurrence at a path, if the path is well formed.
pub fn occurrence_at<'a>(root: &'a Pos, path: &[u16]) -> Option<OccNode<'a>> {
    let mut node = OccNode::Pos(root);
    for &step in path {
        node = match (node, step) {
            (OccNode::Pos(p), s) => match (p, s) {
                (Pos::Not(a), 0) | (Pos::Next(a), 0) | (Pos::Prev(a), 0) => OccNode::Pos(a),
                (Pos::Or(a, _), 0)
                | (Pos::And(a, _), 0)
                | (Pos::Until(a, _), 0)
                | (Pos::Since(a, _), 0) => OccNode::Pos(a),
                (Pos::Or(_, b), 1)
                | (Pos::And(_, b), 1)
                | (Pos::Until(_, b), 1)
                | (Pos::Since(_, b), 1) => OccNode::Pos(b),
                (Pos::Class { body, .. }, 0) => OccNode::Cls(body),
                _ => return None,
            },
            (OccNode::Cls(c), s) => match (c, s) {
                (Cls::Lift(p), 0) => OccNode::Pos(p),
                (Cls::Not(a), 0) | (Cls::NextEq(a), 0) | (Cls::PrevEq(a), 0) => OccNode::Cls(a),
                (Cls::Or(a, _), 0) | (Cls::And(a, _), 0) | (Cls::UntilEq(a, _), 0)
                | (Cls::SinceEq(a, _), 0) => OccNode::Cls(a),
                (Cls::Or(_, b), 1) | (Cls::And(_, b), 1) | (Cls::UntilEq(_, b), 1)
                | (Cls::SinceEq(_, b), 1) => OccNode::Cls(b),
                _ => return None,
            },
        };
    }
    Some(node)
}

/// Smallest equality-window radius that fits every class shift in the
/// formula.
pub fn required_window(f: &Pos) -> u64 {
    occurrences(f)
        .iter()
        .map(|(_, node)| match node {
            OccNode::Pos(Pos::Class { shift, .. }) => shift.unsigned_abs(),
            _ => 0,
        })
        .max()
        .unwrap_or(0)
}

fn check_supported(f: &Pos) -> Result<(), ExtendError> {
    for (_, node) in occurrences(f) {
        if let OccNode::Pos(p) = node {
            let reject = match p {
                Pos::UneqUntil { .. } => Some("inequality until"),
                Pos::UneqSince { .. } => Some("inequality since"),
                Pos::FromNowOn(_) => Some("suffix restriction"),
                Pos::UpToNow(_) => Some("prefix restriction"),
                Pos::PairNext(..) => Some("pair next"),
                Pos::PairPrev(..) => Some("pair previous"),
                _ => None,
            };
            if let Some(what) = reject {
                return Err(ExtendError::Unsupported(what.to_string()));
            }
        }
    }
    Ok(())
}

/// Builds the canonical truth-marked extension of a complete 1-attributed
/// word: every occurrence vector holds the evaluator's verdicts and the
/// equality windows are computed from the values.
pub fn build_valid_extension(
    w: &AttributedWord,
    f: &Pos,
    shift_bound: u64,
) -> Result<ExtendedWord, ExtendError> {
    let attrs = w.attrs_alphabet();
    if attrs.len() != 1 {
        return Err(ExtendError::NotSingleAttribute(attrs.len()));
    }
    let attr = attrs[0].clone();
    let n = w.len();
    for i in 1..=n {
        if w.value(&attr, i).is_none() {
            return Err(ExtendError::IncompleteAttribute(i));
        }
    }
    check_supported(f)?;
    let needed = required_window(f);
    if needed > shift_bound {
        return Err(ExtendError::ShiftBoundTooSmall {
            needed,
            given: shift_bound,
        });
    }

    let mut marks: BTreeMap<OccPath, Vec<bool>> = BTreeMap::new();
    for (path, node) in occurrences(f) {
        let vec = match node {
            OccNode::Pos(p) => label_positions(w, p),
            OccNode::Cls(c) => {
                let mut diag = vec![false; n];
                for d in w.occurring_values() {
                    let lbl = label_class(w, d, c);
                    for i in 1..=n {
                        if w.value(&attr, i) == Some(d) {
                            diag[i - 1] = lbl[i - 1];
                        }
                    }
                }
                diag
            }
        };
        marks.insert(path, vec);
    }

    let mut eqr = Vec::with_capacity(n);
    let bound = shift_bound as i64;
    for i in 1..=n {
        let vi = w.value(&attr, i);
        let mut set = std::collections::BTreeSet::new();
        for r in -bound..=bound {
            if r == 0 {
                continue;
            }
            let j = i as i64 + r;
            if j >= 1 && j <= n as i64 && w.value(&attr, j as usize) == vi {
                set.insert(r);
            }
        }
        eqr.push(set);
    }

    Ok(ExtendedWord {
        base: w.clone(),
        attr,
        formula: f.clone(),
        shift_bound,
        marks,
        eqr,
    })
}

impl ExtendedWord {
    fn value(&self, i: usize) -> DataValue {
        self.base
            .value(&self.attr, i)
            .expect("extended words are complete")
    }

    /// True when positions i and j carry the same value, resolved through
    /// the equality window whenever the offset fits in it.
    fn same_value(&self, i: usize, j: usize) -> bool {
        if i == j {
            return true;
        }
        let r = j as i64 - i as i64;
        if r.unsigned_abs() <= self.shift_bound {
            self.eqr[i - 1].contains(&r)
        } else {
            self.value(i) == self.value(j)
        }
    }

    /// The marks of the root formula; entry i-1 tells whether the marking
    /// asserts the formula at position i.
    pub fn root_marks(&self) -> &[bool] {
        self.marks
            .get(&Vec::new())
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }
}

/// Checks that the equality windows agree with the base word's values.
pub fn eqr_issue(xw: &ExtendedWord) -> Option<usize> {
    let n = xw.base.len();
    if xw.eqr.len() != n {
        return Some(0);
    }
    let bound = xw.shift_bound as i64;
    for i in 1..=n {
        for r in -bound..=bound {
            if r == 0 {
                continue;
            }
            let j = i as i64 + r;
            let expected =
                j >= 1 && j <= n as i64 && xw.value(j as usize) == xw.value(i);
            if xw.eqr[i - 1].contains(&r) != expected {
                return Some(i);
            }
        }
        if let Some(&r) = xw.eqr[i - 1]
            .iter()
            .find(|&&r| r == 0 || r.unsigned_abs() > xw.shift_bound)
        {
            let _ = r;
            return Some(i);
        }
    }
    None
}

fn child_marks<'a>(
    xw: &'a ExtendedWord,
    path: &[u16],
    idx: u16,
) -> Result<&'a Vec<bool>, ExtendError> {
    let mut key = path.to_vec();
    key.push(idx);
    xw.marks
        .get(&key)
        .ok_or_else(|| ExtendError::MissingMarks(path_display(&key)))
}

/// Computes the vector the local rules expect for the occurrence at `path`,
/// reading only child marks, equality windows, values for class navigation,
/// and (for until/since) the occurrence's own marks at neighbor positions.
fn expected_vector(xw: &ExtendedWord, path: &[u16]) -> Result<Vec<bool>, ExtendError> {
    let node = occurrence_at(&xw.formula, path)
        .ok_or_else(|| ExtendError::UnknownPath(path_display(path)))?;
    let n = xw.base.len();
    let own = xw
        .marks
        .get(path)
        .ok_or_else(|| ExtendError::MissingMarks(path_display(path)))?;
    if own.len() != n {
        return Err(ExtendError::LengthMismatch(path_display(path)));
    }
    match node {
        OccNode::Pos(p) => match p {
            Pos::True => Ok(vec![true; n]),
            Pos::False => Ok(vec![false; n]),
            Pos::Prop(name) => Ok((1..=n).map(|i| xw.base.has_prop(name, i)).collect()),
            Pos::Not(_) => {
                let c = child_marks(xw, path, 0)?;
                Ok(c.iter().map(|b| !b).collect())
            }
            Pos::Or(_, _) => {
                let a = child_marks(xw, path, 0)?;
                let b = child_marks(xw, path, 1)?;
                Ok(a.iter().zip(b).map(|(x, y)| *x || *y).collect())
            }
            Pos::And(_, _) => {
                let a = child_marks(xw, path, 0)?;
                let b = child_marks(xw, path, 1)?;
                Ok(a.iter().zip(b).map(|(x, y)| *x && *y).collect())
            }
            Pos::Next(_) => {
                let c = child_marks(xw, path, 0)?;
                Ok((0..n).map(|i| i + 1 < n && c[i + 1]).collect())
            }
            Pos::Prev(_) => {
                let c = child_marks(xw, path, 0)?;
                Ok((0..n).map(|i| i > 0 && c[i - 1]).collect())
            }
            Pos::Until(_, _) => {
                let a = child_marks(xw, path, 0)?;
                let b = child_marks(xw, path, 1)?;
                Ok((0..n)
                    .map(|i| b[i] || (a[i] && i + 1 < n && own[i + 1]))
                    .collect())
            }
            Pos::Since(_, _) => {
                let a = child_marks(xw, path, 0)?;
                let b = child_marks(xw, path, 1)?;
                Ok((0..n)
                    .map(|i| b[i] || (a[i] && i > 0 && own[i - 1]))
                    .collect())
            }
            Pos::Class { shift, attr, body } => {
                if attr != &xw.attr {
                    // The frozen value is absent on a 1-attributed word.
                    return Ok(vec![false; n]);
                }
                let mut out = vec![false; n];
                let mut body_path = path.to_vec();
                body_path.push(0);
                for i in 1..=n {
                    let entry = i as i64 + shift;
                    if entry < 1 || entry > n as i64 {
                        continue;
                    }
                    out[i - 1] = cls_resolve(xw, &body_path, body, entry as usize, i)?;
                }
                Ok(out)
            }
            Pos::UneqUntil { .. }
            | Pos::UneqSince { .. }
            | Pos::FromNowOn(_)
            | Pos::UpToNow(_)
            | Pos::PairNext(..)
            | Pos::PairPrev(..) => Err(ExtendError::Unsupported(
                "operator outside the marked core".to_string(),
            )),
        },
        OccNode::Cls(c) => cls_diag_expected(xw, path, c),
    }
}

/// Resolves a class formula at entry position `e` with the value frozen at
/// carrier position `i`. Attribute tests go through the equality window,
/// navigation walks same-value positions of the carrier's class, and every
/// subformula verdict is read from child marks.
fn cls_resolve(
    xw: &ExtendedWord,
    path: &[u16],
    c: &Cls,
    e: usize,
    i: usize,
) -> Result<bool, ExtendError> {
    match c {
        Cls::Lift(_) => Ok(child_marks(xw, path, 0)?[e - 1]),
        Cls::AttrIs(b) => Ok(b == &xw.attr && xw.same_value(i, e)),
        Cls::Not(a) => {
            let mut p = path.to_vec();
            p.push(0);
            Ok(!cls_resolve(xw, &p, a, e, i)?)
        }
        Cls::Or(a, b) => {
            let mut pa = path.to_vec();
            pa.push(0);
            let mut pb = path.to_vec();
            pb.push(1);
            Ok(cls_resolve(xw, &pa, a, e, i)? || cls_resolve(xw, &pb, b, e, i)?)
        }
        Cls::And(a, b) => {
            let mut pa = path.to_vec();
            pa.push(0);
            let mut pb = path.to_vec();
            pb.push(1);
            Ok(cls_resolve(xw, &pa, a, e, i)? && cls_resolve(xw, &pb, b, e, i)?)
        }
        Cls::NextEq(_) => {
            let class = xw.base.class_positions(xw.value(i));
            match class.next_after(e) {
                Some(j) => Ok(child_marks(xw, path, 0)?[j - 1]),
                None => Ok(false),
            }
        }
        Cls::PrevEq(_) => {
            let class = xw.base.class_positions(xw.value(i));
            match class.prev_before(e) {
                Some(j) => Ok(child_marks(xw, path, 0)?[j - 1]),
                None => Ok(false),
            }
        }
        Cls::UntilEq(_, _) => {
            let a = child_marks(xw, path, 0)?;
            let b = child_marks(xw, path, 1)?;
            let d = xw.value(i);
            for j in e..=xw.base.len() {
                if xw.value(j) != d {
                    continue;
                }
                if b[j - 1] {
                    return Ok(true);
                }
                if !a[j - 1] {
                    return Ok(false);
                }
            }
            Ok(false)
        }
        Cls::SinceEq(_, _) => {
            let a = child_marks(xw, path, 0)?;
            let b = child_marks(xw, path, 1)?;
            let d = xw.value(i);
            for j in (1..=e).rev() {
                if xw.value(j) != d {
                    continue;
                }
                if b[j - 1] {
                    return Ok(true);
                }
                if !a[j - 1] {
                    return Ok(false);
                }
            }
            Ok(false)
        }
    }
}

/// Expected diagonal vector for a class-formula occurrence: entry i-1 is the
/// verdict at position i with position i's own value frozen.
fn cls_diag_expected(
    xw: &ExtendedWord,
    path: &[u16],
    c: &Cls,
) -> Result<Vec<bool>, ExtendError> {
    let n = xw.base.len();
    match c {
        Cls::Lift(_) => Ok(child_marks(xw, path, 0)?.clone()),
        Cls::AttrIs(b) => Ok(vec![b == &xw.attr; n]),
        Cls::Not(_) => {
            let a = child_marks(xw, path, 0)?;
            Ok(a.iter().map(|x| !x).collect())
        }
        Cls::Or(_, _) => {
            let a = child_marks(xw, path, 0)?;
            let b = child_marks(xw, path, 1)?;
            Ok(a.iter().zip(b).map(|(x, y)| *x || *y).collect())
        }
        Cls::And(_, _) => {
            let a = child_marks(xw, path, 0)?;
            let b = child_marks(xw, path, 1)?;
            Ok(a.iter().zip(b).map(|(x, y)| *x && *y).collect())
        }
        Cls::NextEq(_) => {
            let a = child_marks(xw, path, 0)?;
            Ok((1..=n)
                .map(|i| {
                    let class = xw.base.class_positions(xw.value(i));
                    class.next_after(i).map(|j| a[j - 1]).unwrap_or(false)
                })
                .collect())
        }
        Cls::PrevEq(_) => {
            let a = child_marks(xw, path, 0)?;
            Ok((1..=n)
                .map(|i| {
                    let class = xw.base.class_positions(xw.value(i));
                    class.prev_before(i).map(|j| a[j - 1]).unwrap_or(false)
                })
                .collect())
        }
        Cls::UntilEq(_, _) => {
            let a = child_marks(xw, path, 0)?;
            let b = child_marks(xw, path, 1)?;
            Ok((1..=n)
                .map(|i| {
                    let d = xw.value(i);
                    for j in i..=n {
                        if xw.value(j) != d {
                            continue;
                        }
                        if b[j - 1] {
                            return true;
                        }
                        if !a[j - 1] {
                            return false;
                        }
                    }
                    false
                })
                .collect())
        }
        Cls::SinceEq(_, _) => {
            let a = child_marks(xw, path, 0)?;
            let b = child_marks(xw, path, 1)?;
            Ok((1..=n)
                .map(|i| {
                    let d = xw.value(i);
                    for j in (1..=i).rev() {
                        if xw.value(j) != d {
                            continue;
                        }
                        if b[j - 1] {
                            return true;
                        }
                        if !a[j - 1] {
                            return false;
                        }
                    }
                    false
                })
                .collect())
        }
    }
}

/// Checks the occurrence at `path` against its local rule. Returns whether
/// the stored marks match the expected vector.
pub fn check_valid_wrt(xw: &ExtendedWord, path: &[u16]) -> Result<bool, ExtendError> {
    let expected = expected_vector(xw, path)?;
    let own = xw
        .marks
        .get(path)
        .ok_or_else(|| ExtendError::MissingMarks(path_display(path)))?;
    Ok(*own == expected)
}

/// Finds the first violated local rule or equality-window entry, scanning
/// occurrences in preorder.
pub fn find_issue(xw: &ExtendedWord) -> Result<Option<ValidityIssue>, ExtendError> {
    if let Some(i) = eqr_issue(xw) {
        return Ok(Some(ValidityIssue::EqualityWindow(i)));
    }
    for (path, _) in occurrences(&xw.formula) {
        let expected = expected_vector(xw, &path)?;
        let own = xw
            .marks
            .get(&path)
            .ok_or_else(|| ExtendError::MissingMarks(path_display(&path)))?;
        if let Some(i) = (0..expected.len()).find(|&i| own[i] != expected[i]) {
            return Ok(Some(ValidityIssue::Occurrence(path, i + 1)));
        }
    }
    Ok(None)
}

/// True when every local rule and every equality window holds.
pub fn check_valid(xw: &ExtendedWord) -> Result<bool, ExtendError> {
    Ok(find_issue(xw)?.is_none())
}
