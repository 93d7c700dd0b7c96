//! Reference evaluator over attributed words.
//!
//! Evaluation is bottom-up labeling. A position subformula is labeled with
//! one truth vector over the word's positions. A class or until-operand
//! subformula is labeled with one truth vector per frozen data value, so its
//! total cost is a (position, occurring value) matrix. Only occurring values
//! matter: the class quantifier and the inequality until/since freeze values
//! read from the word itself.
//!
//! Unknown propositions and attributes evaluate as absent rather than
//! erroring; alphabet validation belongs to parsing and input loading.

use std::collections::HashMap;
use std::rc::Rc;

use thiserror::Error;

use crate::formula::{Cls, Pos, RestrictedShape, Usub};
use crate::generate::enumerate_words;
use crate::parse::{Cltl, CltlAtom};
use crate::word::{AttributedWord, DataValue};

/// Errors from the evaluation entry points.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    /// The requested position does not exist.
    #[error("position {index} is out of range for a word of length {len}")]
    PositionOutOfRange {
        /// Requested 1-based position.
        index: usize,
        /// Length of the word.
        len: usize,
    },
    /// Top-level evaluation needs a first position.
    #[error("the empty word has no position to evaluate at")]
    EmptyWord,
    /// A constraint-logic formula needs the attribute at every position.
    #[error("word is not complete for attribute {0}")]
    IncompleteAttribute(String),
}

fn check_index(w: &AttributedWord, i: usize) -> Result<(), EvalError> {
    if i == 0 || i > w.len() {
        Err(EvalError::PositionOutOfRange {
            index: i,
            len: w.len(),
        })
    } else {
        Ok(())
    }
}

/// Evaluates a position formula at position i (1-based).
pub fn eval_position(w: &AttributedWord, i: usize, f: &Pos) -> Result<bool, EvalError> {
    check_index(w, i)?;
    Ok(Labeler::new(w).pos_vec(f)[i - 1])
}

/// Evaluates a class formula at position i with frozen value d.
pub fn eval_class(w: &AttributedWord, i: usize, d: DataValue, f: &Cls) -> Result<bool, EvalError> {
    check_index(w, i)?;
    Ok(Labeler::new(w).cls_vec(f, d)[i - 1])
}

/// Evaluates an until-operand formula at position i with frozen value d.
pub fn eval_usub(w: &AttributedWord, i: usize, d: DataValue, f: &Usub) -> Result<bool, EvalError> {
    check_index(w, i)?;
    Ok(Labeler::new(w).usub_vec(f, d)[i - 1])
}

/// Evaluates a formula on a word: truth at the first position. The empty
/// word is a legal word but has no first position, so this errors.
pub fn eval_word(w: &AttributedWord, f: &Pos) -> Result<bool, EvalError> {
    if w.is_empty() {
        return Err(EvalError::EmptyWord);
    }
    eval_position(w, 1, f)
}

/// Truth vector of a position formula over all positions (empty for the
/// empty word).
pub fn label_positions(w: &AttributedWord, f: &Pos) -> Vec<bool> {
    if w.is_empty() {
        return Vec::new();
    }
    Labeler::new(w).pos_vec(f).as_ref().clone()
}

/// Truth vector of a class formula for a fixed frozen value.
pub fn label_class(w: &AttributedWord, d: DataValue, f: &Cls) -> Vec<bool> {
    if w.is_empty() {
        return Vec::new();
    }
    Labeler::new(w).cls_vec(f, d).as_ref().clone()
}

/// Truth vector of an until-operand formula for a fixed frozen value.
pub fn label_usub(w: &AttributedWord, d: DataValue, f: &Usub) -> Vec<bool> {
    if w.is_empty() {
        return Vec::new();
    }
    Labeler::new(w).usub_vec(f, d).as_ref().clone()
}

struct Labeler<'w> {
    w: &'w AttributedWord,
    n: usize,
    pos_cache: HashMap<usize, Rc<Vec<bool>>>,
    cls_cache: HashMap<(usize, DataValue), Rc<Vec<bool>>>,
    usub_cache: HashMap<(usize, DataValue), Rc<Vec<bool>>>,
}

impl<'w> Labeler<'w> {
    fn new(w: &'w AttributedWord) -> Self {
        Labeler {
            w,
            n: w.len(),
            pos_cache: HashMap::new(),
            cls_cache: HashMap::new(),
            usub_cache: HashMap::new(),
        }
    }

    fn pos_vec(&mut self, f: &Pos) -> Rc<Vec<bool>> {
        let key = f as *const Pos as usize;
        if let Some(v) = self.pos_cache.get(&key) {
            return v.clone();
        }
        let n = self.n;
        let v: Vec<bool> = match f {
            Pos::True => vec![true; n],
            Pos::False => vec![false; n],
            Pos::Prop(p) => match self.w.prop_index(p) {
                Some(pi) => (1..=n).map(|i| self.w.has_prop_idx(pi, i)).collect(),
                None => vec![false; n],
            },
            Pos::Not(c) => self.pos_vec(c).iter().map(|b| !b).collect(),
            Pos::Or(a, b) => {
                let av = self.pos_vec(a);
                let bv = self.pos_vec(b);
                av.iter().zip(bv.iter()).map(|(x, y)| *x || *y).collect()
            }
            Pos::And(a, b) => {
                let av = self.pos_vec(a);
                let bv = self.pos_vec(b);
                av.iter().zip(bv.iter()).map(|(x, y)| *x && *y).collect()
            }
            Pos::Next(c) => {
                let cv = self.pos_vec(c);
                (0..n).map(|i| i + 1 < n && cv[i + 1]).collect()
            }
            Pos::Prev(c) => {
                let cv = self.pos_vec(c);
                (0..n).map(|i| i >= 1 && cv[i - 1]).collect()
            }
            Pos::Until(a, b) => {
                let av = self.pos_vec(a);
                let bv = self.pos_vec(b);
                let mut v = vec![false; n];
                for i in (0..n).rev() {
                    v[i] = bv[i] || (av[i] && i + 1 < n && v[i + 1]);
                }
                v
            }
            Pos::Since(a, b) => {
                let av = self.pos_vec(a);
                let bv = self.pos_vec(b);
                let mut v = vec![false; n];
                for i in 0..n {
                    v[i] = bv[i] || (av[i] && i >= 1 && v[i - 1]);
                }
                v
            }
            Pos::Class { shift, attr, body } => {
                let mut v = vec![false; n];
                for i in 1..=n {
                    let Some(d) = self.w.value(attr, i) else {
                        continue;
                    };
                    let j = i as i64 + shift;
                    if j < 1 || j > n as i64 {
                        continue;
                    }
                    v[i - 1] = self.cls_vec(body, d)[j as usize - 1];
                }
                v
            }
            Pos::UneqUntil {
                attr,
                shift,
                rho,
                tau,
            } => self.uneq_vec(true, attr, *shift, rho, tau),
            Pos::UneqSince {
                attr,
                shift,
                rho,
                tau,
            } => self.uneq_vec(false, attr, *shift, rho, tau),
            Pos::FromNowOn(c) => (1..=n)
                .map(|i| {
                    let sw = self.w.suffix(i);
                    Labeler::new(&sw).pos_vec(c)[0]
                })
                .collect(),
            Pos::UpToNow(c) => (1..=n)
                .map(|i| {
                    let pw = self.w.prefix(i);
                    Labeler::new(&pw).pos_vec(c)[i - 1]
                })
                .collect(),
            Pos::PairNext(a, b, c) => {
                let cv = self.pos_vec(c);
                (1..=n)
                    .map(|i| match (self.w.value(a, i), self.w.value(b, i)) {
                        (Some(da), Some(db)) => (i + 1..=n)
                            .find(|&j| {
                                self.w.value(a, j) == Some(da) && self.w.value(b, j) == Some(db)
                            })
                            .is_some_and(|j| cv[j - 1]),
                        _ => false,
                    })
                    .collect()
            }
            Pos::PairPrev(a, b, c) => {
                let cv = self.pos_vec(c);
                (1..=n)
                    .map(|i| match (self.w.value(a, i), self.w.value(b, i)) {
                        (Some(da), Some(db)) => (1..i)
                            .rev()
                            .find(|&j| {
                                self.w.value(a, j) == Some(da) && self.w.value(b, j) == Some(db)
                            })
                            .is_some_and(|j| cv[j - 1]),
                        _ => false,
                    })
                    .collect()
            }
        };
        let rc = Rc::new(v);
        self.pos_cache.insert(key, rc.clone());
        rc
    }

    fn uneq_vec(&mut self, is_until: bool, attr: &str, shift: u64, rho: &Usub, tau: &Usub) -> Vec<bool> {
        let n = self.n;
        let mut v = vec![false; n];
        for i in 1..=n {
            let Some(d) = self.w.value(attr, i) else {
                continue;
            };
            let rv = self.usub_vec(rho, d);
            let tv = self.usub_vec(tau, d);
            v[i - 1] = if is_until {
                let mut j = i + shift as usize;
                loop {
                    if j > n {
                        break false;
                    }
                    if tv[j - 1] {
                        break true;
                    }
                    if !rv[j - 1] {
                        break false;
                    }
                    j += 1;
                }
            } else if (shift as usize) >= i {
                false
            } else {
                let mut j = i - shift as usize;
                loop {
                    if tv[j - 1] {
                        break true;
                    }
                    if !rv[j - 1] || j == 1 {
                        break false;
                    }
                    j -= 1;
                }
            };
        }
        v
    }

    fn cls_vec(&mut self, f: &Cls, d: DataValue) -> Rc<Vec<bool>> {
        if let Cls::Lift(p) = f {
            return self.pos_vec(p);
        }
        let key = (f as *const Cls as usize, d);
        if let Some(v) = self.cls_cache.get(&key) {
            return v.clone();
        }
        let n = self.n;
        let v: Vec<bool> = match f {
            Cls::Lift(_) => unreachable!(),
            Cls::AttrIs(a) => (1..=n).map(|i| self.w.value(a, i) == Some(d)).collect(),
            Cls::Not(c) => self.cls_vec(c, d).iter().map(|b| !b).collect(),
            Cls::Or(a, b) => {
                let av = self.cls_vec(a, d);
                let bv = self.cls_vec(b, d);
                av.iter().zip(bv.iter()).map(|(x, y)| *x || *y).collect()
            }
            Cls::And(a, b) => {
                let av = self.cls_vec(a, d);
                let bv = self.cls_vec(b, d);
                av.iter().zip(bv.iter()).map(|(x, y)| *x && *y).collect()
            }
            Cls::NextEq(c) => {
                let cv = self.cls_vec(c, d);
                let cls = self.w.class_positions(d);
                (1..=n)
                    .map(|i| cls.next_after(i).is_some_and(|j| cv[j - 1]))
                    .collect()
            }
            Cls::PrevEq(c) => {
                let cv = self.cls_vec(c, d);
                let cls = self.w.class_positions(d);
                (1..=n)
                    .map(|i| cls.prev_before(i).is_some_and(|j| cv[j - 1]))
                    .collect()
            }
            Cls::UntilEq(a, b) => {
                let av = self.cls_vec(a, d);
                let bv = self.cls_vec(b, d);
                let ps = self.w.class_positions(d).positions;
                let mut on_class = vec![false; ps.len()];
                for idx in (0..ps.len()).rev() {
                    let p = ps[idx] - 1;
                    on_class[idx] = bv[p] || (av[p] && idx + 1 < ps.len() && on_class[idx + 1]);
                }
                let mut v = vec![false; n];
                let mut ptr = 0usize;
                for i in 1..=n {
                    while ptr < ps.len() && ps[ptr] < i {
                        ptr += 1;
                    }
                    v[i - 1] = ptr < ps.len() && on_class[ptr];
                }
                v
            }
            Cls::SinceEq(a, b) => {
                let av = self.cls_vec(a, d);
                let bv = self.cls_vec(b, d);
                let ps = self.w.class_positions(d).positions;
                let mut on_class = vec![false; ps.len()];
                for idx in 0..ps.len() {
                    let p = ps[idx] - 1;
                    on_class[idx] = bv[p] || (av[p] && idx >= 1 && on_class[idx - 1]);
                }
                let mut v = vec![false; n];
                let mut last: Option<usize> = None;
                let mut ptr = 0usize;
                for i in 1..=n {
                    while ptr < ps.len() && ps[ptr] <= i {
                        last = Some(ptr);
                        ptr += 1;
                    }
                    v[i - 1] = last.is_some_and(|idx| on_class[idx]);
                }
                v
            }
        };
        let rc = Rc::new(v);
        self.cls_cache.insert(key, rc.clone());
        rc
    }

    fn usub_vec(&mut self, f: &Usub, d: DataValue) -> Rc<Vec<bool>> {
        if let Usub::Lift(p) = f {
            return self.pos_vec(p);
        }
        let key = (f as *const Usub as usize, d);
        if let Some(v) = self.usub_cache.get(&key) {
            return v.clone();
        }
        let n = self.n;
        let v: Vec<bool> = match f {
            Usub::Lift(_) => unreachable!(),
            Usub::AttrEq(b) => (1..=n).map(|i| self.w.value(b, i) == Some(d)).collect(),
            Usub::AttrNeq(b) => (1..=n)
                .map(|i| self.w.value(b, i).is_some_and(|v| v != d))
                .collect(),
            Usub::Or(a, b) => {
                let av = self.usub_vec(a, d);
                let bv = self.usub_vec(b, d);
                av.iter().zip(bv.iter()).map(|(x, y)| *x || *y).collect()
            }
            Usub::And(a, b) => {
                let av = self.usub_vec(a, d);
                let bv = self.usub_vec(b, d);
                av.iter().zip(bv.iter()).map(|(x, y)| *x && *y).collect()
            }
        };
        let rc = Rc::new(v);
        self.usub_cache.insert(key, rc.clone());
        rc
    }
}

/// Evaluates an until-operand formula at a possibly out-of-range position.
///
/// Out-of-range positions are virtual: lifted position formulas and equality
/// tests are false there, inequality tests are true. This matches what the
/// negative-shift rewriting produces, where a shifted position test becomes
/// a strong past/future operator (false beyond the word) and a shifted
/// inequality test becomes the negation of a range-guarded equality (true
/// beyond the word).
fn usub_at_signed(w: &AttributedWord, p: i64, d: DataValue, f: &Usub) -> bool {
    let real = p >= 1 && p <= w.len() as i64;
    match f {
        Usub::Lift(c) => real && eval_position(w, p as usize, c).unwrap(),
        Usub::AttrEq(b) => real && w.value(b, p as usize) == Some(d),
        Usub::AttrNeq(b) => {
            if real {
                w.value(b, p as usize).is_some_and(|v| v != d)
            } else {
                true
            }
        }
        Usub::Or(a, b) => usub_at_signed(w, p, d, a) || usub_at_signed(w, p, d, b),
        Usub::And(a, b) => usub_at_signed(w, p, d, a) && usub_at_signed(w, p, d, b),
    }
}

/// Direct evaluation of an inequality until/since whose shift may be
/// negative, used as the reference semantics for the negative-shift
/// rewriting. Positions outside the word contribute under the virtual rule
/// described at `usub_at_signed`.
pub fn eval_uneq_signed(
    w: &AttributedWord,
    i: usize,
    is_until: bool,
    attr: &str,
    shift: i64,
    rho: &Usub,
    tau: &Usub,
) -> Result<bool, EvalError> {
    check_index(w, i)?;
    let n = w.len() as i64;
    let Some(d) = w.value(attr, i) else {
        return Ok(false);
    };
    if is_until {
        let mut j = i as i64 + shift;
        loop {
            if j > n {
                return Ok(false);
            }
            if usub_at_signed(w, j, d, tau) {
                return Ok(true);
            }
            if !usub_at_signed(w, j, d, rho) {
                return Ok(false);
            }
            j += 1;
        }
    } else {
        let mut j = i as i64 - shift;
        loop {
            if j < 1 {
                return Ok(false);
            }
            if usub_at_signed(w, j, d, tau) {
                return Ok(true);
            }
            if !usub_at_signed(w, j, d, rho) {
                return Ok(false);
            }
            j -= 1;
        }
    }
}

/// Verdict of the implication check between the inequality-guarded and the
/// equality-guarded intermediate disjuncts.
#[derive(Clone, Debug, PartialEq)]
pub enum SideVerdict {
    /// The implication holds syntactically: the equality disjunct contains
    /// the inequality disjunct as a top-level disjunct (or the inequality
    /// disjunct is constant false).
    Verified,
    /// A witness word and position where the inequality disjunct holds but
    /// the equality disjunct does not.
    Falsified {
        /// Counterexample word.
        word: AttributedWord,
        /// 1-based position inside it.
        position: usize,
    },
    /// Bounded search found no counterexample; the implication was not
    /// decided.
    Unknown,
}

fn disjuncts_of<'f>(f: &'f Pos, out: &mut Vec<&'f Pos>) {
    match f {
        Pos::Or(a, b) => {
            disjuncts_of(a, out);
            disjuncts_of(b, out);
        }
        other => out.push(other),
    }
}

/// Checks the side condition of the restricted shape: wherever the
/// inequality-guarded intermediate holds, the equality-guarded one must hold
/// too. Fast path: the equality formula has the inequality formula as a
/// top-level disjunct. Otherwise, bounded search over words up to `max_len`
/// positions and `max_values` distinct values (at most three propositions
/// and two attributes of the formulas' vocabulary are varied).
pub fn check_side_condition(
    shape: &RestrictedShape,
    max_len: usize,
    max_values: u64,
) -> SideVerdict {
    use crate::formula::build::{and, not};
    if shape.rho_neq == Pos::False {
        return SideVerdict::Verified;
    }
    let mut eq_disjuncts = Vec::new();
    disjuncts_of(&shape.rho_eq, &mut eq_disjuncts);
    if eq_disjuncts.iter().any(|p| **p == shape.rho_neq) {
        return SideVerdict::Verified;
    }
    let gap = and(shape.rho_neq.clone(), not(shape.rho_eq.clone()));
    let (props, attrs) = crate::formula::vocabulary(&gap);
    let props: Vec<&str> = props.iter().take(3).map(|s| s.as_str()).collect();
    let attrs: Vec<&str> = attrs.iter().take(2).map(|s| s.as_str()).collect();
    let mut witness: Option<(AttributedWord, usize)> = None;
    for len in 1..=max_len {
        enumerate_words(&props, &attrs, len, max_values, false, &mut |w| {
            let labels = label_positions(w, &gap);
            if let Some(k) = labels.iter().position(|b| *b) {
                witness = Some((w.clone(), k + 1));
                false
            } else {
                true
            }
        });
        if witness.is_some() {
            break;
        }
    }
    match witness {
        Some((word, position)) => SideVerdict::Falsified { word, position },
        None => SideVerdict::Unknown,
    }
}

fn require_attr_everywhere(w: &AttributedWord, a: &str) -> Result<(), EvalError> {
    for i in 1..=w.len() {
        if w.value(a, i).is_none() {
            return Err(EvalError::IncompleteAttribute(a.to_string()));
        }
    }
    Ok(())
}

/// Evaluates a constraint-logic atom at position i. The word must carry the
/// atom's variables everywhere (completeness for the variables involved).
pub fn eval_cltl_atom(w: &AttributedWord, i: usize, atom: &CltlAtom) -> Result<bool, EvalError> {
    check_index(w, i)?;
    match atom {
        CltlAtom::ShiftEq { x, delta, y } => {
            require_attr_everywhere(w, x)?;
            require_attr_everywhere(w, y)?;
            let dx = w.value(x, i).unwrap();
            let j = i + *delta as usize;
            Ok(j <= w.len() && w.value(y, j) == Some(dx))
        }
        CltlAtom::FutureEq { x, y } => {
            require_attr_everywhere(w, x)?;
            require_attr_everywhere(w, y)?;
            let dx = w.value(x, i).unwrap();
            Ok((i + 1..=w.len()).any(|j| w.value(y, j) == Some(dx)))
        }
    }
}

fn cltl_vars<'f>(f: &'f Cltl, out: &mut Vec<&'f str>) {
    match f {
        Cltl::True | Cltl::False | Cltl::Prop(_) => {}
        Cltl::Atom(a) => match a {
            CltlAtom::ShiftEq { x, y, .. } | CltlAtom::FutureEq { x, y } => {
                out.push(x);
                out.push(y);
            }
        },
        Cltl::Not(c) | Cltl::Next(c) | Cltl::Prev(c) => cltl_vars(c, out),
        Cltl::Or(a, b) | Cltl::And(a, b) | Cltl::Until(a, b) | Cltl::Since(a, b) => {
            cltl_vars(a, out);
            cltl_vars(b, out);
        }
    }
}

fn cltl_vec(w: &AttributedWord, f: &Cltl) -> Vec<bool> {
    let n = w.len();
    match f {
        Cltl::True => vec![true; n],
        Cltl::False => vec![false; n],
        Cltl::Prop(p) => match w.prop_index(p) {
            Some(pi) => (1..=n).map(|i| w.has_prop_idx(pi, i)).collect(),
            None => vec![false; n],
        },
        Cltl::Atom(a) => (1..=n).map(|i| eval_cltl_atom(w, i, a).unwrap()).collect(),
        Cltl::Not(c) => cltl_vec(w, c).iter().map(|b| !b).collect(),
        Cltl::Or(a, b) => {
            let av = cltl_vec(w, a);
            let bv = cltl_vec(w, b);
            av.iter().zip(bv.iter()).map(|(x, y)| *x || *y).collect()
        }
        Cltl::And(a, b) => {
            let av = cltl_vec(w, a);
            let bv = cltl_vec(w, b);
            av.iter().zip(bv.iter()).map(|(x, y)| *x && *y).collect()
        }
        Cltl::Next(c) => {
            let cv = cltl_vec(w, c);
            (0..n).map(|i| i + 1 < n && cv[i + 1]).collect()
        }
        Cltl::Prev(c) => {
            let cv = cltl_vec(w, c);
            (0..n).map(|i| i >= 1 && cv[i - 1]).collect()
        }
        Cltl::Until(a, b) => {
            let av = cltl_vec(w, a);
            let bv = cltl_vec(w, b);
            let mut v = vec![false; n];
            for i in (0..n).rev() {
                v[i] = bv[i] || (av[i] && i + 1 < n && v[i + 1]);
            }
            v
        }
        Cltl::Since(a, b) => {
            let av = cltl_vec(w, a);
            let bv = cltl_vec(w, b);
            let mut v = vec![false; n];
            for i in 0..n {
                v[i] = bv[i] || (av[i] && i >= 1 && v[i - 1]);
            }
            v
        }
    }
}

/// Evaluates a constraint-logic formula at position i. The word must carry
/// every variable of the formula at every position.
pub fn eval_cltl(w: &AttributedWord, i: usize, f: &Cltl) -> Result<bool, EvalError> {
    check_index(w, i)?;
    let mut vars = Vec::new();
    cltl_vars(f, &mut vars);
    vars.sort_unstable();
    vars.dedup();
    for x in vars {
        require_attr_everywhere(w, x)?;
    }
    Ok(cltl_vec(w, f)[i - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{client_server_word, running_word};
    use crate::formula::build::*;
    use crate::generate::{enumerate_words, random_word, SplitMix64, WordShape};
    use crate::parse::{parse_cltl, parse_formula};

    fn pv(w: &AttributedWord, text: &str) -> Vec<bool> {
        label_positions(w, &parse_formula(text).unwrap())
    }

    #[test]
    fn boolean_and_prop_basics() {
        let w = running_word();
        assert_eq!(pv(&w, "tau"), vec![false, false, false, true, false, false, false, false, false, true]);
        assert!(eval_position(&w, 1, &parse_formula("p | !p").unwrap()).unwrap());
        assert!(eval_position(&w, 3, &parse_formula("rho_eq & !tau").unwrap()).unwrap());
        // unknown propositions are simply absent
        assert!(!eval_position(&w, 1, &parse_formula("nonexistent").unwrap()).unwrap());
    }

    #[test]
    fn next_prev_until_since() {
        let w = running_word();
        // X tau holds exactly at 3 and 9
        assert_eq!(pv(&w, "X tau"), vec![false, false, true, false, false, false, false, false, true, false]);
        // strong next fails at the last position
        assert!(!eval_position(&w, 10, &parse_formula("X true").unwrap()).unwrap());
        assert!(!eval_position(&w, 1, &parse_formula("Y true").unwrap()).unwrap());
        // F tau is true everywhere (tau at 10), G !tau nowhere before 4
        assert_eq!(pv(&w, "F tau"), vec![true; 10]);
        // non-strict until: target at the current position counts
        assert!(eval_position(&w, 4, &parse_formula("false U tau").unwrap()).unwrap());
        // until demands the intermediate from the current position on
        assert!(eval_position(&w, 1, &parse_formula("!tau U tau").unwrap()).unwrap());
        assert!(!eval_position(&w, 5, &parse_formula("rho_neq U tau").unwrap()).unwrap());
        assert!(eval_position(&w, 5, &parse_formula("!tau S tau").unwrap()).unwrap());
        assert!(!eval_position(&w, 3, &parse_formula("false S tau").unwrap()).unwrap());
        // past operators
        assert!(!pv(&w, "P tau")[2]);
        assert!(pv(&w, "P tau")[3]);
        assert!(pv(&w, "P tau")[9]);
        assert!(pv(&w, "H !tau")[2]);
    }

    #[test]
    fn empty_word_rules() {
        let w = AttributedWord::new(&["p"], &[]).unwrap();
        assert_eq!(eval_word(&w, &parse_formula("true").unwrap()), Err(EvalError::EmptyWord));
        assert_eq!(label_positions(&w, &parse_formula("p").unwrap()), Vec::<bool>::new());
        let err = eval_position(&w, 1, &parse_formula("p").unwrap());
        assert_eq!(err, Err(EvalError::PositionOutOfRange { index: 1, len: 0 }));
    }

    #[test]
    fn class_quantifier_and_navigation() {
        let w = running_word();
        // the next class position of value 1 after position 1 is 3
        let d1 = w.value("a", 1).unwrap();
        assert!(eval_class(&w, 1, d1, &xeq(attr_is("a"))).unwrap());
        // no future class position from the last class member
        assert!(!eval_class(&w, 6, d1, &xeq(cl(Pos::True))).unwrap());
        let f = parse_formula("C{a} X= @a").unwrap();
        assert_eq!(
            label_positions(&w, &f),
            // next same-value position exists for 1,2,3,4,5,7,8 (values repeat later)
            vec![true, true, true, true, true, false, true, true, false, false]
        );
        // shifted entry: C[7]{a} @a at position 1 tests val(a,8)=val(a,1)? 2 vs 1: false
        assert!(!eval_position(&w, 1, &parse_formula("C[7]{a} @a").unwrap()).unwrap());
        // C[1]{a} @a at position 4: val(a,5)=2, val(a,4)=1: false; at 7: val(8)=2=val(7): true
        let shifted = parse_formula("C[1]{a} @a").unwrap();
        let lv = label_positions(&w, &shifted);
        assert!(!lv[3]);
        assert!(lv[6]);
        // out-of-range shift is false
        assert!(!eval_position(&w, 10, &shifted).unwrap());
        // absent attribute makes the class quantifier false
        let cs = client_server_word();
        assert!(!eval_position(&cs, 5, &parse_formula("C{A} @A").unwrap()).unwrap());
        assert!(eval_position(&cs, 5, &parse_formula("C{B} @B").unwrap()).unwrap());
    }

    #[test]
    fn class_until_and_since() {
        let w = running_word();
        // from position 1 (value 1, class 1,3,4,6): rho_eq holds along the
        // class until tau at 4
        let f = parse_formula("C{a}(rho_eq U= (@a & tau))").unwrap();
        assert!(eval_position(&w, 1, &f).unwrap());
        // value 2 (class 2,5,7,8,9): no tau on the class at all
        assert!(!eval_position(&w, 2, &f).unwrap());
        // S= mirrored: at position 6 (value 1) the class past holds rho_eq
        // back to position 4 where tau holds
        let g = parse_formula("C{a}(rho_eq S= (@a & tau))").unwrap();
        assert!(eval_position(&w, 6, &g).unwrap());
        assert!(!eval_position(&w, 3, &g).unwrap());
        // Y= from 6 reaches 4 (tau there)
        let h = parse_formula("C{a} Y= tau").unwrap();
        assert!(eval_position(&w, 6, &h).unwrap());
        assert!(!eval_position(&w, 4, &h).unwrap());
    }

    #[test]
    fn client_server_until_eq_verdict() {
        // at position 1 the B value is 2; on the class of 2 the query at
        // position 1 itself violates the intermediate, and the only serving
        // B-position with value 2 is position 4
        let w = client_server_word();
        let d2 = w.value("B", 1).unwrap();
        let frag = ueq(
            cimplies(attr_is("B"), cl(not(p("q_B")))),
            cand(attr_is("B"), cl(p("s_B"))),
        );
        assert!(!eval_class(&w, 1, d2, &frag).unwrap());
        // the same fragment holds at position 2 entered on B's value 3:
        // class of 3 is {2,5}; at 2 B carries 3 with q_B, so the
        // intermediate fails there too
        let d3 = w.value("B", 2).unwrap();
        assert!(!eval_class(&w, 2, d3, &frag).unwrap());
        // value 4 (positions 3 and 6): at 3, @B & q_B violates; entered at
        // position 6 (s_B there) the target holds immediately
        let d4 = w.value("B", 3).unwrap();
        assert!(eval_class(&w, 6, d4, &frag).unwrap());
    }

    #[test]
    fn usub_atoms() {
        let w = running_word();
        let d1 = w.value("a", 1).unwrap();
        let d2 = w.value("a", 2).unwrap();
        // value 3 at position 10 differs from both frozen values
        assert!(eval_usub(&w, 10, d1, &uneq_attr("a")).unwrap());
        assert!(eval_usub(&w, 10, d2, &uneq_attr("a")).unwrap());
        assert!(!eval_usub(&w, 1, d1, &uneq_attr("a")).unwrap());
        assert!(eval_usub(&w, 1, d1, &ueq_attr("a")).unwrap());
        assert!(!eval_usub(&w, 1, d2, &ueq_attr("a")).unwrap());
        // absent attribute: both tests false
        let cs = client_server_word();
        let dc = cs.value("C", 2).unwrap();
        assert!(!eval_usub(&cs, 1, dc, &ueq_attr("C")).unwrap());
        assert!(!eval_usub(&cs, 1, dc, &uneq_attr("C")).unwrap());
    }

    #[test]
    fn inequality_until_on_running_word() {
        let w = running_word();
        let f = parse_formula("(@a & rho_eq | !=@a & rho_neq) U!{a}[2] (!=@a & tau)").unwrap();
        // positions 5 and 7 fail: their windows contain a same-value
        // position that only carries rho_neq, and the equality branch
        // requires rho_eq there
        assert_eq!(
            label_positions(&w, &f),
            vec![true, true, true, true, false, true, false, true, false, false]
        );
        // in particular the window start respects the shift: position 9
        // has no window at all (9+2 > 10)
        assert!(!eval_position(&w, 9, &f).unwrap());
        assert!(eval_position(&w, 3, &f).unwrap());
        assert!(eval_position(&w, 8, &f).unwrap());
    }

    #[test]
    fn inequality_since_mirror() {
        let w = running_word();
        // target: a tau position with a different value, looking back from 6
        // with window end 6-2=4: tau at 4 carries value 1 = val(a,6), so the
        // target fails there; no earlier tau, hence false
        let f = parse_formula("true S!{a}[2] (!=@a & tau)").unwrap();
        assert!(!eval_position(&w, 6, &f).unwrap());
        // from 7 (value 2, window end 5): position 4 carries tau with value
        // 1, different from 2
        assert!(eval_position(&w, 7, &f).unwrap());
        // window end below 1: false
        assert!(!eval_position(&w, 1, &f).unwrap());
        // intermediate must hold from the window end backwards
        let g = parse_formula("rho_neq S!{a}[0] (!=@a & tau)").unwrap();
        // at 9 (value 2): scan 9,8,7 all rho_neq, reach... tau at 4 blocked
        // by rho_neq failing at 6
        assert!(!eval_position(&w, 9, &g).unwrap());
        let h = parse_formula("(rho_neq | rho_eq | tau) S!{a}[0] (!=@a & tau)").unwrap();
        assert!(eval_position(&w, 9, &h).unwrap());
    }

    #[test]
    fn uneq_nil_entry_is_false() {
        let cs = client_server_word();
        // position 5 has no A value
        let f = parse_formula("true U!{A}[0] (!=@A & true)").unwrap();
        assert!(!eval_position(&cs, 5, &f).unwrap());
        assert!(eval_position(&cs, 1, &f).unwrap());
    }

    #[test]
    fn suffix_and_prefix_restriction() {
        let w = running_word();
        // N G !tau: from position 5 on, tau still appears at 10
        assert!(!eval_position(&w, 5, &parse_formula("N G !tau").unwrap()).unwrap());
        // N (tau) asks tau at the suffix start
        assert_eq!(pv(&w, "N tau"), pv(&w, "tau"));
        // within the prefix ending at i, the future from i is just i itself,
        // while the past is untouched
        assert_eq!(pv(&w, "Nbar F tau"), pv(&w, "tau"));
        assert_eq!(pv(&w, "Nbar P tau"), pv(&w, "P tau"));
        // Nbar G tau differs from G tau: the prefix ends at i
        assert!(eval_position(&w, 4, &parse_formula("Nbar (tau -> G tau)").unwrap()).unwrap());
        assert!(!eval_position(&w, 4, &parse_formula("tau -> G tau").unwrap()).unwrap());
        // suffix/prefix slicing identities by construction
        let f = parse_formula("F (tau & Y rho_eq)").unwrap();
        for i in 1..=w.len() {
            let sw = w.suffix(i);
            assert_eq!(
                eval_position(&w, i, &from_now_on(f.clone())).unwrap(),
                eval_position(&sw, 1, &f).unwrap()
            );
            let pw = w.prefix(i);
            assert_eq!(
                eval_position(&w, i, &up_to_now(f.clone())).unwrap(),
                eval_position(&pw, i, &f).unwrap()
            );
        }
    }

    #[test]
    fn pair_operators_pick_extremal_repeat() {
        let mut w = AttributedWord::new(&["m"], &["a", "b"]).unwrap();
        // (a,b): (1,1) (1,2) (1,1) (2,1) (1,1)
        w.push(&[], &[("a", 1), ("b", 1)]).unwrap();
        w.push(&["m"], &[("a", 1), ("b", 2)]).unwrap();
        w.push(&["m"], &[("a", 1), ("b", 1)]).unwrap();
        w.push(&[], &[("a", 2), ("b", 1)]).unwrap();
        w.push(&["m"], &[("a", 1), ("b", 1)]).unwrap();
        // from 1 the smallest pair repeat is 3 (not 5)
        assert!(eval_position(&w, 1, &parse_formula("XX{a,b} m").unwrap()).unwrap());
        // minimality: from 3 the smallest pair repeat is 5, which carries m
        assert!(!eval_position(&w, 3, &parse_formula("XX{a,b} !m").unwrap()).unwrap());
        // from 5 looking back the largest pair repeat is 3
        assert!(eval_position(&w, 5, &parse_formula("YY{a,b} m").unwrap()).unwrap());
        assert!(!eval_position(&w, 3, &parse_formula("YY{a,b} !true").unwrap()).unwrap());
        // missing component: position 4 backward has pair (2,1) nowhere
        assert!(!eval_position(&w, 4, &parse_formula("YY{a,b} true").unwrap()).unwrap());
        // linear-scan cross-check of minimality
        let target = parse_formula("m").unwrap();
        for i in 1..=w.len() {
            let da = w.value("a", i);
            let db = w.value("b", i);
            let expect = match (da, db) {
                (Some(da), Some(db)) => (i + 1..=w.len())
                    .find(|&j| w.value("a", j) == Some(da) && w.value("b", j) == Some(db))
                    .map(|j| w.has_prop("m", j))
                    .unwrap_or(false),
                _ => false,
            };
            assert_eq!(
                eval_position(&w, i, &pair_next("a", "b", target.clone())).unwrap(),
                expect,
                "position {i}"
            );
        }
    }

    #[test]
    fn until_duality_bounded() {
        // !(f U g) agrees with (!g) while not reaching a g, plus the
        // all-false tail case, on every word up to length 5
        let f = parse_formula("p").unwrap();
        let g = parse_formula("q").unwrap();
        let lhs = not(until(f.clone(), g.clone()));
        for len in 1..=5 {
            enumerate_words(&["p", "q"], &[], len, 1, true, &mut |w| {
                for i in 1..=w.len() {
                    let direct = eval_position(w, i, &lhs).unwrap();
                    // brute force the quantifier
                    let mut sat = false;
                    for j in i..=w.len() {
                        if eval_position(w, j, &g).unwrap()
                            && (i..j).all(|k| eval_position(w, k, &f).unwrap())
                        {
                            sat = true;
                            break;
                        }
                    }
                    assert_eq!(direct, !sat);
                }
                true
            });
        }
    }

    #[test]
    fn value_renaming_invariance() {
        let mut rng = SplitMix64::new(2024);
        let shape = WordShape {
            props: vec!["p".into()],
            attrs: vec!["a".into()],
            len: 8,
            max_values: 3,
            complete: false,
        };
        let f = parse_formula("(p | @a & true | !=@a & p) U!{a}[1] (!=@a & p) | C{a} X= @a").unwrap();
        for _ in 0..50 {
            let w = random_word(&mut rng, &shape);
            let canon = w.canonicalize_values();
            assert_eq!(label_positions(&w, &f), label_positions(&canon, &f));
        }
    }

    #[test]
    fn signed_shift_direct_matches_rewriting() {
        // the parser lowers negative shifts into the past-shifted form; the
        // direct signed evaluator must agree on complete words
        for delta in 1..=2i64 {
            let lowered = parse_formula(&format!(
                "(p | @a & (q | p) | !=@a & p) U!{{a}}[{}] (!=@a & q)",
                -delta
            ))
            .unwrap();
            let rho = uor(
                ul(p("p")),
                uor(
                    uand(ueq_attr("a"), ul(or(p("q"), p("p")))),
                    uand(uneq_attr("a"), ul(p("p"))),
                ),
            );
            let tau = uand(uneq_attr("a"), ul(p("q")));
            for len in 1..=4 {
                enumerate_words(&["p", "q"], &["a"], len, 2, true, &mut |w| {
                    for i in 1..=w.len() {
                        let direct =
                            eval_uneq_signed(w, i, true, "a", -delta, &rho, &tau).unwrap();
                        let via_rewrite = eval_position(w, i, &lowered).unwrap();
                        assert_eq!(direct, via_rewrite, "len {len} i {i} delta {delta}");
                    }
                    true
                });
            }
        }
    }

    #[test]
    fn signed_shift_since_matches_rewriting() {
        let lowered = parse_formula("(p | @a & (q | p) | !=@a & p) S!{a}[-2] (!=@a & q)").unwrap();
        let rho = uor(
            ul(p("p")),
            uor(
                uand(ueq_attr("a"), ul(or(p("q"), p("p")))),
                uand(uneq_attr("a"), ul(p("p"))),
            ),
        );
        let tau = uand(uneq_attr("a"), ul(p("q")));
        for len in 1..=4 {
            enumerate_words(&["p", "q"], &["a"], len, 2, true, &mut |w| {
                for i in 1..=w.len() {
                    let direct = eval_uneq_signed(w, i, false, "a", -2, &rho, &tau).unwrap();
                    let via_rewrite = eval_position(w, i, &lowered).unwrap();
                    assert_eq!(direct, via_rewrite, "len {len} i {i}");
                }
                true
            });
        }
    }

    #[test]
    fn side_condition_fast_path_and_search() {
        use crate::formula::restricted_shape;
        // shape with rho_eq = (extra | rho_neq): syntactic fast path
        let rho = uor(
            uand(ueq_attr("a"), ul(or(p("x"), p("r")))),
            uand(uneq_attr("a"), ul(p("r"))),
        );
        let tau = uand(uneq_attr("a"), ul(p("t")));
        let (r, t) = match parse_formula("(@a & (x | r) | !=@a & r) U!{a}[0] (!=@a & t)").unwrap() {
            Pos::UneqUntil { rho, tau, .. } => (*rho, *tau),
            _ => unreachable!(),
        };
        assert_eq!(r, rho);
        assert_eq!(t, tau);
        let shape = restricted_shape(&rho, &tau).unwrap();
        assert_eq!(check_side_condition(&shape, 3, 2), SideVerdict::Verified);
        // falsifiable: rho_eq = x, rho_neq = r
        let rho_bad = uor(
            uand(ueq_attr("a"), ul(p("x"))),
            uand(uneq_attr("a"), ul(p("r"))),
        );
        let shape_bad = restricted_shape(&rho_bad, &tau).unwrap();
        match check_side_condition(&shape_bad, 2, 2) {
            SideVerdict::Falsified { word, position } => {
                assert!(eval_position(&word, position, &p("r")).unwrap());
                assert!(!eval_position(&word, position, &p("x")).unwrap());
            }
            v => panic!("expected a counterexample, got {v:?}"),
        }
        // semantically fine but not syntactically contained: rho_eq = !!r is
        // equivalent to the inequality disjunct r without being its disjunct
        let rho_odd = uor(
            uand(ueq_attr("a"), ul(not(not(p("r"))))),
            uand(uneq_attr("a"), ul(p("r"))),
        );
        let shape_odd = restricted_shape(&rho_odd, &tau).unwrap();
        assert_eq!(check_side_condition(&shape_odd, 3, 2), SideVerdict::Unknown);
    }

    #[test]
    fn cltl_atoms_and_translations() {
        let mut w = AttributedWord::new(&[], &["x"]).unwrap();
        for v in [5u64, 5, 6, 5] {
            w.push(&[], &[("x", v)]).unwrap();
        }
        let shift = CltlAtom::ShiftEq {
            x: "x".into(),
            delta: 1,
            y: "x".into(),
        };
        assert!(eval_cltl_atom(&w, 1, &shift).unwrap());
        assert!(!eval_cltl_atom(&w, 2, &shift).unwrap());
        assert!(!eval_cltl_atom(&w, 4, &shift).unwrap());
        let fut = CltlAtom::FutureEq {
            x: "x".into(),
            y: "x".into(),
        };
        assert!(eval_cltl_atom(&w, 1, &fut).unwrap());
        assert!(eval_cltl_atom(&w, 2, &fut).unwrap());
        assert!(!eval_cltl_atom(&w, 3, &fut).unwrap());
        assert!(!eval_cltl_atom(&w, 4, &fut).unwrap());
        // incomplete word errors
        let mut bad = AttributedWord::new(&[], &["x"]).unwrap();
        bad.push(&[], &[("x", 1)]).unwrap();
        bad.push(&[], &[]).unwrap();
        assert_eq!(
            eval_cltl_atom(&bad, 1, &fut),
            Err(EvalError::IncompleteAttribute("x".into()))
        );
        // the atom verdicts agree with their class-quantifier translations
        let mut rng = SplitMix64::new(99);
        let shift_f = parse_formula("C[1]{x} @y").unwrap();
        let fut_f = parse_formula("C{x} X= F= @y").unwrap();
        let shift_xy = CltlAtom::ShiftEq {
            x: "x".into(),
            delta: 1,
            y: "y".into(),
        };
        let fut_xy = CltlAtom::FutureEq {
            x: "x".into(),
            y: "y".into(),
        };
        for _ in 0..60 {
            let len = 1 + (rng.below(6) as usize);
            let w = crate::generate::random_complete_word(&mut rng, &[], &["x", "y"], len, 3);
            for i in 1..=len {
                assert_eq!(
                    eval_cltl_atom(&w, i, &shift_xy).unwrap(),
                    eval_position(&w, i, &shift_f).unwrap()
                );
                assert_eq!(
                    eval_cltl_atom(&w, i, &fut_xy).unwrap(),
                    eval_position(&w, i, &fut_f).unwrap()
                );
            }
        }
        // full formulas
        let cf = parse_cltl("G (x=X^1x -> x=<>x)").unwrap();
        assert!(eval_cltl(&w, 1, &cf).unwrap());
    }
}
