//! Shepherd, herd, and special-position analysis for inequality untils on
//! words complete in one attribute.
//!
//! For the restricted shape, truth at position i is characterized by the
//! minimal witness j at or beyond the shifted window start such that the
//! target part holds at j with a value different from the frozen one, and
//! every window position before j either satisfies the inequality branch or
//! carries the frozen value and satisfies the equality branch. The minimal
//! witness is the shepherd of i; this module computes shepherds, herds, the
//! special positions around each witness, and checks the structural claims
//! the automaton construction relies on.
//!
//! The analysis works on label vectors. Truth-relative labels come from the
//! evaluator; mark-relative labels are taken verbatim from the caller and
//! need not be consistent with any formula.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::eval::label_positions;
use crate::formula::{build, restricted_shape, Pos};
use crate::word::{AttributedWord, DataValue};

/// Errors from label construction and analysis.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum HerdError {
    /// The formula is not an inequality until.
    #[error("herd analysis needs an inequality-until formula at the top")]
    NotExtendedUntil,
    /// The operands do not decompose into the restricted shape.
    #[error("operands are not in the restricted shape: {0}")]
    UnsupportedShape(String),
    /// The word misses the frozen attribute somewhere.
    #[error("attribute {attr} is absent at position {position}")]
    MissingAttribute {
        /// The frozen attribute.
        attr: String,
        /// First position lacking it.
        position: usize,
    },
    /// A supplied mark position is outside the word.
    #[error("mark position {0} is out of range")]
    MarkOutOfRange(usize),
    /// A label vector has the wrong length.
    #[error("label vectors must all have the word's length")]
    LengthMismatch,
}

/// Label vectors driving the analysis, one entry per position.
#[derive(Clone, Debug)]
pub struct HerdLabels {
    /// Window shift of the until.
    pub delta: u64,
    /// Positions treated as satisfying the until.
    pub psi: Vec<bool>,
    /// Target-part labels.
    pub tau: Vec<bool>,
    /// Equality-branch labels.
    pub rho_eq: Vec<bool>,
    /// Inequality-branch labels.
    pub rho_neq: Vec<bool>,
    /// The frozen attribute's value at each position.
    pub values: Vec<DataValue>,
}

impl HerdLabels {
    fn check(self) -> Result<Self, HerdError> {
        let n = self.values.len();
        if self.psi.len() != n
            || self.tau.len() != n
            || self.rho_eq.len() != n
            || self.rho_neq.len() != n
        {
            return Err(HerdError::LengthMismatch);
        }
        Ok(self)
    }

    /// Truth-relative labels: evaluates the inequality until `f` and its
    /// operand parts on `w`. The plain intermediate disjunct is pushed into
    /// both guarded branches, which preserves the formula's meaning.
    pub fn from_truth(w: &AttributedWord, f: &Pos) -> Result<Self, HerdError> {
        let Pos::UneqUntil {
            attr,
            shift,
            rho,
            tau,
        } = f
        else {
            return Err(HerdError::NotExtendedUntil);
        };
        let shape = restricted_shape(rho, tau).map_err(HerdError::UnsupportedShape)?;
        if &shape.guard_attr != attr {
            return Err(HerdError::UnsupportedShape(format!(
                "operand guards test {} but the until freezes {}",
                shape.guard_attr, attr
            )));
        }
        let values = complete_values(w, attr)?;
        let rho_eq = build::or(shape.rho.clone(), shape.rho_eq);
        let rho_neq = build::or(shape.rho, shape.rho_neq);
        HerdLabels {
            delta: *shift,
            psi: label_positions(w, f),
            tau: label_positions(w, &shape.tau),
            rho_eq: label_positions(w, &rho_eq),
            rho_neq: label_positions(w, &rho_neq),
            values,
        }
        .check()
    }

    /// Mark-relative labels: the until-positions are supplied explicitly,
    /// the operand labels are read from propositions of the word.
    pub fn from_marks(
        w: &AttributedWord,
        attr: &str,
        delta: u64,
        psi_positions: &[usize],
        tau_prop: &str,
        rho_eq_prop: &str,
        rho_neq_prop: &str,
    ) -> Result<Self, HerdError> {
        let values = complete_values(w, attr)?;
        let n = w.len();
        let mut psi = vec![false; n];
        for &i in psi_positions {
            if i == 0 || i > n {
                return Err(HerdError::MarkOutOfRange(i));
            }
            psi[i - 1] = true;
        }
        let prop_vec = |name: &str| (1..=n).map(|i| w.has_prop(name, i)).collect();
        HerdLabels {
            delta,
            psi,
            tau: prop_vec(tau_prop),
            rho_eq: prop_vec(rho_eq_prop),
            rho_neq: prop_vec(rho_neq_prop),
            values,
        }
        .check()
    }

    /// Number of positions the label vectors cover.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when the label vectors cover no positions.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn complete_values(w: &AttributedWord, attr: &str) -> Result<Vec<DataValue>, HerdError> {
    (1..=w.len())
        .map(|i| {
            w.value(attr, i).ok_or(HerdError::MissingAttribute {
                attr: attr.to_string(),
                position: i,
            })
        })
        .collect()
}

/// Why a position is special for a witness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SpecialKind {
    /// A herd member whose window contains a position failing the
    /// inequality branch.
    RhoFar,
    /// A window position failing the inequality branch.
    RhoStair,
    /// A herd member whose window contains another target-labeled position.
    TauFar,
    /// A target-labeled window position before the witness.
    TauStair,
    /// Added by the empty-herd rule for target positions without a herd.
    EmptyHerdTechnical,
}

/// The complete shepherd structure of a labeled word.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HerdReport {
    /// Positions labeled as satisfying the until.
    pub psi_positions: Vec<usize>,
    /// Each labeled position with a witness, mapped to it.
    pub shepherds: BTreeMap<usize, usize>,
    /// Witness j to its herd H(j); only nonempty herds are recorded.
    pub herds: BTreeMap<usize, Vec<usize>>,
    /// Witness j to its special positions S(j) with the reasons; only
    /// nonempty sets are recorded.
    pub specials: BTreeMap<usize, BTreeMap<usize, BTreeSet<SpecialKind>>>,
    /// Witness j to its special interval ends (min, max of S(j)).
    pub intervals: BTreeMap<usize, (usize, usize)>,
}

impl HerdReport {
    /// S(j) as a plain position set.
    pub fn special_set(&self, j: usize) -> BTreeSet<usize> {
        self.specials
            .get(&j)
            .map(|m| m.keys().copied().collect())
            .unwrap_or_default()
    }
}

/// The witness for position i under the given labels: the minimal j at or
/// beyond the window start where the target holds with a different value.
fn witness(labels: &HerdLabels, i: usize) -> Option<usize> {
    let n = labels.len();
    let start = i + labels.delta as usize;
    (start..=n).find(|&j| labels.tau[j - 1] && labels.values[j - 1] != labels.values[i - 1])
}

/// Truth of the until at every position according to the witness
/// characterization: a witness exists and every window position before it
/// satisfies the inequality branch or carries the frozen value and
/// satisfies the equality branch. This is the independent second path next
/// to the evaluator.
pub fn characterize(labels: &HerdLabels) -> Vec<bool> {
    let n = labels.len();
    (1..=n)
        .map(|i| {
            let Some(j) = witness(labels, i) else {
                return false;
            };
            let start = i + labels.delta as usize;
            (start..j).all(|k| {
                labels.rho_neq[k - 1]
                    || (labels.values[k - 1] == labels.values[i - 1] && labels.rho_eq[k - 1])
            })
        })
        .collect()
}

/// Computes shepherds, herds, special positions, and special intervals from
/// the labels.
pub fn analyze(labels: &HerdLabels) -> HerdReport {
    let n = labels.len();
    let delta = labels.delta as usize;
    let psi_positions: Vec<usize> = (1..=n).filter(|&i| labels.psi[i - 1]).collect();
    let mut shepherds = BTreeMap::new();
    let mut herds: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &i in &psi_positions {
        if let Some(j) = witness(labels, i) {
            shepherds.insert(i, j);
            herds.entry(j).or_default().push(i);
        }
    }
    let mut specials: BTreeMap<usize, BTreeMap<usize, BTreeSet<SpecialKind>>> = BTreeMap::new();
    let add = |specials: &mut BTreeMap<usize, BTreeMap<usize, BTreeSet<SpecialKind>>>,
                   j: usize,
                   pos: usize,
                   kind: SpecialKind| {
        specials
            .entry(j)
            .or_default()
            .entry(pos)
            .or_default()
            .insert(kind);
    };
    for j in 1..=n {
        if !labels.tau[j - 1] {
            continue;
        }
        if let Some(herd) = herds.get(&j) {
            for &i in herd {
                for k in (i + delta)..j {
                    if !labels.rho_neq[k - 1] {
                        add(&mut specials, j, i, SpecialKind::RhoFar);
                        add(&mut specials, j, k, SpecialKind::RhoStair);
                    }
                    if labels.tau[k - 1] {
                        add(&mut specials, j, i, SpecialKind::TauFar);
                        add(&mut specials, j, k, SpecialKind::TauStair);
                    }
                }
            }
        } else {
            // empty herd: strictly inside the window before j, take the
            // maximal position with a different value whose gap to j is all
            // inequality-labeled and which is target-labeled or
            // equality-only-labeled, plus its value mates before it
            let lo = j.saturating_sub(delta) + 1;
            let mut gap_ok = true;
            let mut chosen = None;
            for k in (lo..j).rev() {
                if gap_ok
                    && labels.values[k - 1] != labels.values[j - 1]
                    && (labels.tau[k - 1] || (labels.rho_eq[k - 1] && !labels.rho_neq[k - 1]))
                {
                    chosen = Some(k);
                    break;
                }
                gap_ok = gap_ok && labels.rho_neq[k - 1];
            }
            if let Some(k) = chosen {
                add(&mut specials, j, k, SpecialKind::EmptyHerdTechnical);
                for l in lo..k {
                    if labels.values[l - 1] == labels.values[k - 1] {
                        add(&mut specials, j, l, SpecialKind::EmptyHerdTechnical);
                    }
                }
            }
        }
    }
    let intervals = specials
        .iter()
        .map(|(&j, set)| {
            let lo = *set.keys().next().unwrap();
            let hi = *set.keys().next_back().unwrap();
            (j, (lo, hi))
        })
        .collect();
    HerdReport {
        psi_positions,
        shepherds,
        herds,
        specials,
        intervals,
    }
}

/// Outcome of the structural claim checks; each entry is Ok or carries the
/// first counterexample found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClaimsReport {
    /// All special positions of one witness share a data value.
    pub same_value: Result<(), String>,
    /// The upper interval end is the maximal qualifying position below the
    /// witness.
    pub upper_end: Result<(), String>,
    /// The lower interval end is the minimal qualifying value mate of the
    /// upper end.
    pub lower_end: Result<(), String>,
    /// Special intervals of distinct witnesses overlap in at most delta
    /// positions.
    pub interval_overlap: Result<(), String>,
}

impl ClaimsReport {
    /// True when every claim holds.
    pub fn all_pass(&self) -> bool {
        self.same_value.is_ok()
            && self.upper_end.is_ok()
            && self.lower_end.is_ok()
            && self.interval_overlap.is_ok()
    }
}

fn expected_upper_end(labels: &HerdLabels, j: usize) -> Option<usize> {
    let mut gap_ok = true;
    for k in (1..j).rev() {
        if gap_ok
            && labels.values[k - 1] != labels.values[j - 1]
            && (labels.tau[k - 1] || (labels.rho_eq[k - 1] && !labels.rho_neq[k - 1]))
        {
            return Some(k);
        }
        gap_ok = gap_ok && labels.rho_neq[k - 1];
    }
    None
}

fn expected_lower_end(
    labels: &HerdLabels,
    j: usize,
    upper: usize,
    special: &BTreeSet<usize>,
) -> Option<usize> {
    let delta = labels.delta as usize;
    (1..=upper).find(|&m| {
        if labels.values[m - 1] != labels.values[upper - 1] {
            return false;
        }
        let window = (m + delta)..j;
        window.clone().all(|l| labels.rho_eq[l - 1])
            && window
                .clone()
                .filter(|l| !special.contains(l))
                .all(|l| labels.rho_neq[l - 1] && !labels.tau[l - 1])
    })
}

/// Checks the structural claims against a report computed from the same
/// labels.
pub fn verify_claims(labels: &HerdLabels, report: &HerdReport) -> ClaimsReport {
    let mut same_value: Result<(), String> = Ok(());
    for (&j, set) in &report.specials {
        let mut vals = set.keys().map(|&p| (p, labels.values[p - 1]));
        if let Some((p0, v0)) = vals.next() {
            if let Some((p1, v1)) = vals.find(|&(_, v)| v != v0) {
                same_value = Err(format!(
                    "S({j}) mixes values: position {p0} carries {v0:?}, position {p1} carries {v1:?}"
                ));
                break;
            }
        }
    }
    let mut upper_end: Result<(), String> = Ok(());
    let mut lower_end: Result<(), String> = Ok(());
    for (&j, &(lo, hi)) in &report.intervals {
        let expect_hi = expected_upper_end(labels, j);
        if expect_hi != Some(hi) {
            upper_end = Err(format!(
                "interval of witness {j}: upper end is {hi} but the maximal qualifying position is {expect_hi:?}"
            ));
            break;
        }
        if lower_end.is_ok() {
            let expect_lo = expected_lower_end(labels, j, hi, &report.special_set(j));
            if expect_lo != Some(lo) {
                lower_end = Err(format!(
                    "interval of witness {j}: lower end is {lo} but the minimal qualifying position is {expect_lo:?}"
                ));
            }
        }
    }
    let mut interval_overlap: Result<(), String> = Ok(());
    let intervals: Vec<(usize, (usize, usize))> = report
        .intervals
        .iter()
        .map(|(&j, &iv)| (j, iv))
        .collect();
    'outer: for (a, &(j, (lo, hi))) in intervals.iter().enumerate() {
        for &(j2, (lo2, hi2)) in intervals.iter().skip(a + 1) {
            let lo_m = lo.max(lo2);
            let hi_m = hi.min(hi2);
            if lo_m <= hi_m {
                let overlap = hi_m - lo_m + 1;
                if overlap > labels.delta as usize {
                    interval_overlap = Err(format!(
                        "intervals of witnesses {j} and {j2} share {overlap} positions, more than the shift {}",
                        labels.delta
                    ));
                    break 'outer;
                }
            }
        }
    }
    ClaimsReport {
        same_value,
        upper_end,
        lower_end,
        interval_overlap,
    }
}
