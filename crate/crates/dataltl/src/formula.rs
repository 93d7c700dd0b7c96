//! Formula ASTs: position formulas, class formulas, until-operand formulas,
//! the fragment classifier, and the negative-shift rewriting.
//!
//! Conjunction and the constants are first-class nodes. Stored shifts in the
//! inequality until/since are always nonnegative; negative shifts are
//! rewritten away by `lower_shift` (the parser applies it automatically).

use std::fmt;

/// A position formula, evaluated at (word, position).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Pos {
    /// Constant truth.
    True,
    /// Constant falsity.
    False,
    /// A proposition.
    Prop(String),
    /// Negation.
    Not(Box<Pos>),
    /// Disjunction.
    Or(Box<Pos>, Box<Pos>),
    /// Conjunction.
    And(Box<Pos>, Box<Pos>),
    /// Strong next: a successor position must exist.
    Next(Box<Pos>),
    /// Strong previous.
    Prev(Box<Pos>),
    /// Non-strict until: the witness may be the current position.
    Until(Box<Pos>, Box<Pos>),
    /// Non-strict since, mirroring `Until` into the past.
    Since(Box<Pos>, Box<Pos>),
    /// Class quantifier `C[shift]{attr} body`: freezes the value of `attr`
    /// at the current position, moves `shift` steps, and evaluates the class
    /// formula there. False when the attribute is absent or the shifted
    /// position leaves the word.
    Class {
        /// Relative shift (may be negative).
        shift: i64,
        /// Attribute whose value is frozen.
        attr: String,
        /// Class formula evaluated at the shifted position.
        body: Box<Cls>,
    },
    /// Inequality until `rho U!{attr}[shift] tau`: freezes val(attr, i);
    /// false if absent; otherwise some position j >= i+shift satisfies the
    /// target and every position in [i+shift, j) satisfies the intermediate.
    UneqUntil {
        /// Attribute whose value is frozen at the evaluation position.
        attr: String,
        /// Nonnegative shift applied to the window start.
        shift: u64,
        /// Intermediate operand.
        rho: Box<Usub>,
        /// Target operand.
        tau: Box<Usub>,
    },
    /// Inequality since: some j <= i-shift satisfies the target and every
    /// position in (j, i-shift] satisfies the intermediate.
    UneqSince {
        /// Attribute whose value is frozen at the evaluation position.
        attr: String,
        /// Nonnegative shift applied to the window end.
        shift: u64,
        /// Intermediate operand.
        rho: Box<Usub>,
        /// Target operand.
        tau: Box<Usub>,
    },
    /// Restriction to the suffix: evaluates the body at position 1 of the
    /// suffix word starting at the current position.
    FromNowOn(Box<Pos>),
    /// Restriction to the prefix: evaluates the body at the current position
    /// of the prefix word ending here.
    UpToNow(Box<Pos>),
    /// `XX{a,b} body`: the smallest future position repeating both the
    /// current a-value and the current b-value; both must be present.
    PairNext(String, String, Box<Pos>),
    /// Past mirror of `PairNext` (largest earlier repeat).
    PairPrev(String, String, Box<Pos>),
}

/// A class formula, evaluated at (word, position, frozen value).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Cls {
    /// A position formula; the frozen value is ignored.
    Lift(Box<Pos>),
    /// `@a`: attribute a carries the frozen value here.
    AttrIs(String),
    /// Negation.
    Not(Box<Cls>),
    /// Disjunction.
    Or(Box<Cls>, Box<Cls>),
    /// Conjunction.
    And(Box<Cls>, Box<Cls>),
    /// `X=`: the smallest class position strictly after the current one.
    NextEq(Box<Cls>),
    /// `Y=`: the largest class position strictly before the current one.
    PrevEq(Box<Cls>),
    /// `U=`: non-strict until along class positions.
    UntilEq(Box<Cls>, Box<Cls>),
    /// `S=`: non-strict since along class positions.
    SinceEq(Box<Cls>, Box<Cls>),
}

/// An operand of the inequality until/since: a positive combination of
/// position formulas, equality tests and inequality tests. Negation exists
/// only inside lifted position formulas.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Usub {
    /// A position formula; the frozen value is ignored.
    Lift(Box<Pos>),
    /// `@b`: attribute b carries the frozen value.
    AttrEq(String),
    /// `!=@b`: attribute b carries a value different from the frozen one
    /// (false when b is absent).
    AttrNeq(String),
    /// Disjunction.
    Or(Box<Usub>, Box<Usub>),
    /// Conjunction.
    And(Box<Usub>, Box<Usub>),
}

/// Fragment classification of a position formula.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum FragmentTag {
    /// No extended operators occur.
    BasicDataLTL,
    /// Every inequality until/since fits the restricted operand shapes.
    ExtendedDataLTL,
    /// Some construct falls outside the decidable fragments.
    BeyondDecidable(String),
}

impl fmt::Display for FragmentTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FragmentTag::BasicDataLTL => write!(f, "basic"),
            FragmentTag::ExtendedDataLTL => write!(f, "extended"),
            FragmentTag::BeyondDecidable(reason) => write!(f, "beyond-decidable: {reason}"),
        }
    }
}

/// Convenience constructors. The boolean class/operand constructors collapse
/// combinations of lifted position formulas into a single lift, keeping ASTs
/// in the normal form the parser produces.
pub mod build {
    use super::*;

    /// Proposition.
    pub fn p(name: &str) -> Pos {
        Pos::Prop(name.to_string())
    }
    /// Negation.
    pub fn not(a: Pos) -> Pos {
        Pos::Not(Box::new(a))
    }
    /// Disjunction.
    pub fn or(a: Pos, b: Pos) -> Pos {
        Pos::Or(Box::new(a), Box::new(b))
    }
    /// Conjunction.
    pub fn and(a: Pos, b: Pos) -> Pos {
        Pos::And(Box::new(a), Box::new(b))
    }
    /// Conjunction of a sequence; `true` when empty.
    pub fn and_all<I: IntoIterator<Item = Pos>>(items: I) -> Pos {
        let mut it = items.into_iter();
        match it.next() {
            None => Pos::True,
            Some(first) => it.fold(first, and),
        }
    }
    /// Disjunction of a sequence; `false` when empty.
    pub fn or_all<I: IntoIterator<Item = Pos>>(items: I) -> Pos {
        let mut it = items.into_iter();
        match it.next() {
            None => Pos::False,
            Some(first) => it.fold(first, or),
        }
    }
    /// Implication, expanded to `!a | b`.
    pub fn implies(a: Pos, b: Pos) -> Pos {
        or(not(a), b)
    }
    /// Strong next.
    pub fn x(a: Pos) -> Pos {
        Pos::Next(Box::new(a))
    }
    /// Strong previous.
    pub fn y(a: Pos) -> Pos {
        Pos::Prev(Box::new(a))
    }
    /// k-fold strong next.
    pub fn x_pow(k: u64, a: Pos) -> Pos {
        (0..k).fold(a, |f, _| x(f))
    }
    /// k-fold strong previous.
    pub fn y_pow(k: u64, a: Pos) -> Pos {
        (0..k).fold(a, |f, _| y(f))
    }
    /// Signed shift: `X^k` for positive k, `Y^|k|` for negative.
    pub fn shift_pow(k: i64, a: Pos) -> Pos {
        if k >= 0 {
            x_pow(k as u64, a)
        } else {
            y_pow(k.unsigned_abs(), a)
        }
    }
    /// Until.
    pub fn until(a: Pos, b: Pos) -> Pos {
        Pos::Until(Box::new(a), Box::new(b))
    }
    /// Since.
    pub fn since(a: Pos, b: Pos) -> Pos {
        Pos::Since(Box::new(a), Box::new(b))
    }
    /// Finally.
    pub fn f(a: Pos) -> Pos {
        until(Pos::True, a)
    }
    /// Globally.
    pub fn g(a: Pos) -> Pos {
        not(f(not(a)))
    }
    /// Past finally.
    pub fn past(a: Pos) -> Pos {
        since(Pos::True, a)
    }
    /// Past globally.
    pub fn hist(a: Pos) -> Pos {
        not(past(not(a)))
    }
    /// Class quantifier.
    pub fn class(shift: i64, attr: &str, body: Cls) -> Pos {
        Pos::Class {
            shift,
            attr: attr.to_string(),
            body: Box::new(body),
        }
    }
    /// The pair-shift abbreviation `@a=X^shift@b`.
    pub fn pair_shift(a: &str, shift: i64, b: &str) -> Pos {
        class(shift, a, Cls::AttrIs(b.to_string()))
    }
    /// Inequality until with nonnegative shift.
    pub fn uneq_until(attr: &str, shift: u64, rho: Usub, tau: Usub) -> Pos {
        Pos::UneqUntil {
            attr: attr.to_string(),
            shift,
            rho: Box::new(rho),
            tau: Box::new(tau),
        }
    }
    /// Inequality since with nonnegative shift.
    pub fn uneq_since(attr: &str, shift: u64, rho: Usub, tau: Usub) -> Pos {
        Pos::UneqSince {
            attr: attr.to_string(),
            shift,
            rho: Box::new(rho),
            tau: Box::new(tau),
        }
    }
    /// Suffix restriction.
    pub fn from_now_on(a: Pos) -> Pos {
        Pos::FromNowOn(Box::new(a))
    }
    /// Prefix restriction.
    pub fn up_to_now(a: Pos) -> Pos {
        Pos::UpToNow(Box::new(a))
    }
    /// Pair next.
    pub fn pair_next(a: &str, b: &str, body: Pos) -> Pos {
        Pos::PairNext(a.to_string(), b.to_string(), Box::new(body))
    }
    /// Pair previous.
    pub fn pair_prev(a: &str, b: &str, body: Pos) -> Pos {
        Pos::PairPrev(a.to_string(), b.to_string(), Box::new(body))
    }

    /// Lifted position formula as a class formula.
    pub fn cl(a: Pos) -> Cls {
        Cls::Lift(Box::new(a))
    }
    /// `@a` as a class formula.
    pub fn attr_is(a: &str) -> Cls {
        Cls::AttrIs(a.to_string())
    }
    /// Class negation, collapsing over lifts.
    pub fn cnot(a: Cls) -> Cls {
        match a {
            Cls::Lift(f) => Cls::Lift(Box::new(not(*f))),
            other => Cls::Not(Box::new(other)),
        }
    }
    /// Class disjunction, collapsing over lifts.
    pub fn cor(a: Cls, b: Cls) -> Cls {
        match (a, b) {
            (Cls::Lift(f), Cls::Lift(g)) => Cls::Lift(Box::new(or(*f, *g))),
            (a, b) => Cls::Or(Box::new(a), Box::new(b)),
        }
    }
    /// Class conjunction, collapsing over lifts.
    pub fn cand(a: Cls, b: Cls) -> Cls {
        match (a, b) {
            (Cls::Lift(f), Cls::Lift(g)) => Cls::Lift(Box::new(and(*f, *g))),
            (a, b) => Cls::And(Box::new(a), Box::new(b)),
        }
    }
    /// Class implication.
    pub fn cimplies(a: Cls, b: Cls) -> Cls {
        cor(cnot(a), b)
    }
    /// `X=`.
    pub fn xeq(a: Cls) -> Cls {
        Cls::NextEq(Box::new(a))
    }
    /// `Y=`.
    pub fn yeq(a: Cls) -> Cls {
        Cls::PrevEq(Box::new(a))
    }
    /// `U=`.
    pub fn ueq(a: Cls, b: Cls) -> Cls {
        Cls::UntilEq(Box::new(a), Box::new(b))
    }
    /// `S=`.
    pub fn seq(a: Cls, b: Cls) -> Cls {
        Cls::SinceEq(Box::new(a), Box::new(b))
    }
    /// `F=`.
    pub fn feq(a: Cls) -> Cls {
        ueq(cl(Pos::True), a)
    }
    /// `G=`.
    pub fn geq(a: Cls) -> Cls {
        cnot(feq(cnot(a)))
    }
    /// `P=`.
    pub fn peq(a: Cls) -> Cls {
        seq(cl(Pos::True), a)
    }
    /// `H=`.
    pub fn heq(a: Cls) -> Cls {
        cnot(peq(cnot(a)))
    }

    /// Lifted position formula as an until operand.
    pub fn ul(a: Pos) -> Usub {
        Usub::Lift(Box::new(a))
    }
    /// `@b` as an until operand.
    pub fn ueq_attr(b: &str) -> Usub {
        Usub::AttrEq(b.to_string())
    }
    /// `!=@b` as an until operand.
    pub fn uneq_attr(b: &str) -> Usub {
        Usub::AttrNeq(b.to_string())
    }
    /// Operand disjunction, collapsing over lifts.
    pub fn uor(a: Usub, b: Usub) -> Usub {
        match (a, b) {
            (Usub::Lift(f), Usub::Lift(g)) => Usub::Lift(Box::new(or(*f, *g))),
            (a, b) => Usub::Or(Box::new(a), Box::new(b)),
        }
    }
    /// Operand conjunction, collapsing over lifts.
    pub fn uand(a: Usub, b: Usub) -> Usub {
        match (a, b) {
            (Usub::Lift(f), Usub::Lift(g)) => Usub::Lift(Box::new(and(*f, *g))),
            (a, b) => Usub::And(Box::new(a), Box::new(b)),
        }
    }
}

impl Cls {
    /// Extracts a position formula when this class formula is built purely
    /// from lifted leaves and boolean connectives.
    pub fn as_position(&self) -> Option<Pos> {
        match self {
            Cls::Lift(f) => Some((**f).clone()),
            Cls::Not(a) => a.as_position().map(|f| Pos::Not(Box::new(f))),
            Cls::Or(a, b) => Some(Pos::Or(
                Box::new(a.as_position()?),
                Box::new(b.as_position()?),
            )),
            Cls::And(a, b) => Some(Pos::And(
                Box::new(a.as_position()?),
                Box::new(b.as_position()?),
            )),
            _ => None,
        }
    }
}

impl Usub {
    /// Extracts a position formula when this operand is built purely from
    /// lifted leaves and boolean connectives.
    pub fn as_position(&self) -> Option<Pos> {
        match self {
            Usub::Lift(f) => Some((**f).clone()),
            Usub::Or(a, b) => Some(Pos::Or(
                Box::new(a.as_position()?),
                Box::new(b.as_position()?),
            )),
            Usub::And(a, b) => Some(Pos::And(
                Box::new(a.as_position()?),
                Box::new(b.as_position()?),
            )),
            _ => None,
        }
    }
}

/// Rewrites an inequality until/since with a negative shift into an
/// equivalent formula whose stored shifts are all zero.
///
/// For the until case with shift `-d` (d > 0) the result is
/// `(rho U!{a}[0] tau & R_1 & ... & R_d) | OR_j (T_j & R_{j+1} & ... & R_d)`
/// where `R_c`/`T_c` shift the operand `c` steps into the past: position
/// formulas get a Y-chain, `@b` becomes `@a=Y^c@b`, and `!=@b` becomes
/// `!(@a=Y^c@b)`. The since case mirrors this with X-chains and forward pair
/// shifts.
pub fn lower_shift(
    is_until: bool,
    attr: &str,
    shift: i64,
    rho: &Usub,
    tau: &Usub,
) -> Result<Pos, String> {
    use build::*;
    if shift >= 0 {
        return Err(format!("lower_shift requires a negative shift, got {shift}"));
    }
    let d = shift.unsigned_abs();
    let dir: i64 = if is_until { -1 } else { 1 };
    let shifted = |op: &Usub, c: u64| shift_usub(op, dir * c as i64, attr);
    let zero = if is_until {
        uneq_until(attr, 0, rho.clone(), tau.clone())
    } else {
        uneq_since(attr, 0, rho.clone(), tau.clone())
    };
    let head = and_all(std::iter::once(zero).chain((1..=d).map(|c| shifted(rho, c))));
    let alts = (1..=d).map(|j| {
        and_all(std::iter::once(shifted(tau, j)).chain(((j + 1)..=d).map(|c| shifted(rho, c))))
    });
    Ok(or_all(std::iter::once(head).chain(alts)))
}

/// Shifts an until operand `k` steps (negative = past) into a position
/// formula, replacing attribute tests by pair shifts on `attr`.
fn shift_usub(op: &Usub, k: i64, attr: &str) -> Pos {
    use build::*;
    match op {
        Usub::Lift(f) => shift_pow(k, (**f).clone()),
        Usub::AttrEq(b) => pair_shift(attr, k, b),
        Usub::AttrNeq(b) => not(pair_shift(attr, k, b)),
        Usub::Or(a, b) => or(shift_usub(a, k, attr), shift_usub(b, k, attr)),
        Usub::And(a, b) => and(shift_usub(a, k, attr), shift_usub(b, k, attr)),
    }
}

/// The decomposed restricted shape of an inequality until/since.
#[derive(Clone, Debug)]
pub struct RestrictedShape {
    /// The attribute tested by the operand guards.
    pub guard_attr: String,
    /// Unguarded intermediate disjunct.
    pub rho: Pos,
    /// Intermediate disjunct guarded by `@b`.
    pub rho_eq: Pos,
    /// Intermediate disjunct guarded by `!=@b`.
    pub rho_neq: Pos,
    /// Target conjunct next to the `!=@b` guard.
    pub tau: Pos,
}

fn flatten_or(op: &Usub, out: &mut Vec<Usub>) {
    match op {
        Usub::Or(a, b) => {
            flatten_or(a, out);
            flatten_or(b, out);
        }
        other => out.push(other.clone()),
    }
}

fn flatten_and(op: &Usub, out: &mut Vec<Usub>) {
    match op {
        Usub::And(a, b) => {
            flatten_and(a, out);
            flatten_and(b, out);
        }
        other => out.push(other.clone()),
    }
}

/// Splits a conjunction into (equality guards, inequality guards, lifted
/// position part). Returns None if a nested disjunction blocks the split.
fn split_conjunct(op: &Usub) -> Option<(Vec<String>, Vec<String>, Pos)> {
    let mut parts = Vec::new();
    flatten_and(op, &mut parts);
    let mut eqs = Vec::new();
    let mut neqs = Vec::new();
    let mut lifts = Vec::new();
    for part in parts {
        match part {
            Usub::AttrEq(b) => eqs.push(b),
            Usub::AttrNeq(b) => neqs.push(b),
            Usub::Lift(f) => lifts.push(*f),
            Usub::Or(..) | Usub::And(..) => return None,
        }
    }
    Some((eqs, neqs, build::and_all(lifts)))
}

/// Tries to decompose the operands of an inequality until/since into the
/// restricted shape: intermediate `rho | (@b & rho_eq) | (!=@b & rho_neq)`
/// (each disjunct optional) and target `!=@b & tau`, with one shared guard
/// attribute. Returns an error naming the offending piece otherwise.
pub fn restricted_shape(rho: &Usub, tau: &Usub) -> Result<RestrictedShape, String> {
    let (t_eqs, t_neqs, t_lift) = split_conjunct(tau)
        .ok_or_else(|| "target is not a conjunction of tests".to_string())?;
    if !t_eqs.is_empty() {
        return Err("positive attribute test in target".to_string());
    }
    if t_neqs.len() != 1 {
        return Err(if t_neqs.is_empty() {
            "target lacks an inequality guard".to_string()
        } else {
            "target has more than one inequality guard".to_string()
        });
    }
    let guard_attr = t_neqs[0].clone();

    let mut disjuncts = Vec::new();
    flatten_or(rho, &mut disjuncts);
    let mut plain: Option<Pos> = None;
    let mut eq_part: Option<Pos> = None;
    let mut neq_part: Option<Pos> = None;
    for dis in &disjuncts {
        let (eqs, neqs, lift) = split_conjunct(dis)
            .ok_or_else(|| "intermediate disjunct is not a conjunction".to_string())?;
        match (eqs.len(), neqs.len()) {
            (0, 0) => {
                if plain.is_some() {
                    return Err("multiple unguarded intermediate disjuncts".to_string());
                }
                plain = Some(lift);
            }
            (1, 0) => {
                if eqs[0] != guard_attr {
                    return Err("equality guard on a different attribute than the target".into());
                }
                if eq_part.is_some() {
                    return Err("multiple equality-guarded intermediate disjuncts".to_string());
                }
                eq_part = Some(lift);
            }
            (0, 1) => {
                if neqs[0] != guard_attr {
                    return Err("inequality guard on a different attribute than the target".into());
                }
                if neq_part.is_some() {
                    return Err("multiple inequality-guarded intermediate disjuncts".to_string());
                }
                neq_part = Some(lift);
            }
            _ => return Err("intermediate disjunct mixes several guards".to_string()),
        }
    }
    Ok(RestrictedShape {
        guard_attr,
        rho: plain.unwrap_or(Pos::False),
        rho_eq: eq_part.unwrap_or(Pos::False),
        rho_neq: neq_part.unwrap_or(Pos::False),
        tau: t_lift,
    })
}

/// Classifies a formula into the decidable fragments, purely syntactically.
/// The semantic side condition on restricted shapes (the inequality-guarded
/// intermediate must imply the equality-guarded one) is checked separately
/// by the evaluator module.
pub fn classify(formula: &Pos) -> FragmentTag {
    let mut worst = FragmentTag::BasicDataLTL;
    classify_walk(formula, &mut worst);
    worst
}

fn bump(worst: &mut FragmentTag, tag: FragmentTag) {
    let rank = |t: &FragmentTag| match t {
        FragmentTag::BasicDataLTL => 0,
        FragmentTag::ExtendedDataLTL => 1,
        FragmentTag::BeyondDecidable(_) => 2,
    };
    if rank(&tag) > rank(worst) {
        *worst = tag;
    }
}

fn classify_walk(formula: &Pos, worst: &mut FragmentTag) {
    match formula {
        Pos::True | Pos::False | Pos::Prop(_) => {}
        Pos::Not(a) | Pos::Next(a) | Pos::Prev(a) => classify_walk(a, worst),
        Pos::Or(a, b) | Pos::And(a, b) | Pos::Until(a, b) | Pos::Since(a, b) => {
            classify_walk(a, worst);
            classify_walk(b, worst);
        }
        Pos::Class { body, .. } => classify_cls(body, worst),
        Pos::UneqUntil { rho, tau, .. } | Pos::UneqSince { rho, tau, .. } => {
            match restricted_shape(rho, tau) {
                Ok(shape) => {
                    bump(worst, FragmentTag::ExtendedDataLTL);
                    classify_walk(&shape.rho, worst);
                    classify_walk(&shape.rho_eq, worst);
                    classify_walk(&shape.rho_neq, worst);
                    classify_walk(&shape.tau, worst);
                }
                Err(reason) => bump(worst, FragmentTag::BeyondDecidable(reason)),
            }
        }
        Pos::FromNowOn(a) => {
            bump(worst, FragmentTag::BeyondDecidable("suffix restriction".into()));
            classify_walk(a, worst);
        }
        Pos::UpToNow(a) => {
            bump(worst, FragmentTag::BeyondDecidable("prefix restriction".into()));
            classify_walk(a, worst);
        }
        Pos::PairNext(_, _, a) => {
            bump(worst, FragmentTag::BeyondDecidable("pair next operator".into()));
            classify_walk(a, worst);
        }
        Pos::PairPrev(_, _, a) => {
            bump(worst, FragmentTag::BeyondDecidable("pair previous operator".into()));
            classify_walk(a, worst);
        }
    }
}

fn classify_cls(formula: &Cls, worst: &mut FragmentTag) {
    match formula {
        Cls::Lift(f) => classify_walk(f, worst),
        Cls::AttrIs(_) => {}
        Cls::Not(a) | Cls::NextEq(a) | Cls::PrevEq(a) => classify_cls(a, worst),
        Cls::Or(a, b) | Cls::And(a, b) | Cls::UntilEq(a, b) | Cls::SinceEq(a, b) => {
            classify_cls(a, worst);
            classify_cls(b, worst);
        }
    }
}

/// Collects the propositions and attributes mentioned by a formula.
pub fn vocabulary(formula: &Pos) -> (Vec<String>, Vec<String>) {
    let mut props = Vec::new();
    let mut attrs = Vec::new();
    vocab_pos(formula, &mut props, &mut attrs);
    props.sort();
    props.dedup();
    attrs.sort();
    attrs.dedup();
    (props, attrs)
}

fn vocab_pos(formula: &Pos, props: &mut Vec<String>, attrs: &mut Vec<String>) {
    match formula {
        Pos::True | Pos::False => {}
        Pos::Prop(p) => props.push(p.clone()),
        Pos::Not(a) | Pos::Next(a) | Pos::Prev(a) | Pos::FromNowOn(a) | Pos::UpToNow(a) => {
            vocab_pos(a, props, attrs)
        }
        Pos::Or(a, b) | Pos::And(a, b) | Pos::Until(a, b) | Pos::Since(a, b) => {
            vocab_pos(a, props, attrs);
            vocab_pos(b, props, attrs);
        }
        Pos::Class { attr, body, .. } => {
            attrs.push(attr.clone());
            vocab_cls(body, props, attrs);
        }
        Pos::UneqUntil { attr, rho, tau, .. } | Pos::UneqSince { attr, rho, tau, .. } => {
            attrs.push(attr.clone());
            vocab_usub(rho, props, attrs);
            vocab_usub(tau, props, attrs);
        }
        Pos::PairNext(a, b, f) | Pos::PairPrev(a, b, f) => {
            attrs.push(a.clone());
            attrs.push(b.clone());
            vocab_pos(f, props, attrs);
        }
    }
}

fn vocab_cls(formula: &Cls, props: &mut Vec<String>, attrs: &mut Vec<String>) {
    match formula {
        Cls::Lift(f) => vocab_pos(f, props, attrs),
        Cls::AttrIs(a) => attrs.push(a.clone()),
        Cls::Not(a) | Cls::NextEq(a) | Cls::PrevEq(a) => vocab_cls(a, props, attrs),
        Cls::Or(a, b) | Cls::And(a, b) | Cls::UntilEq(a, b) | Cls::SinceEq(a, b) => {
            vocab_cls(a, props, attrs);
            vocab_cls(b, props, attrs);
        }
    }
}

fn vocab_usub(formula: &Usub, props: &mut Vec<String>, attrs: &mut Vec<String>) {
    match formula {
        Usub::Lift(f) => vocab_pos(f, props, attrs),
        Usub::AttrEq(b) | Usub::AttrNeq(b) => attrs.push(b.clone()),
        Usub::Or(a, b) | Usub::And(a, b) => {
            vocab_usub(a, props, attrs);
            vocab_usub(b, props, attrs);
        }
    }
}

// --- pretty printing ---------------------------------------------------

/// Precedence levels: 0 or, 1 and, 2 until family, 3 unary, 4 atoms.
fn pos_level(f: &Pos) -> u8 {
    match f {
        Pos::True | Pos::False | Pos::Prop(_) => 4,
        Pos::Class { body, .. } => {
            // the pair-shift abbreviation prints as an atom
            if matches!(**body, Cls::AttrIs(_)) {
                4
            } else {
                3
            }
        }
        Pos::Not(_)
        | Pos::Next(_)
        | Pos::Prev(_)
        | Pos::FromNowOn(_)
        | Pos::UpToNow(_)
        | Pos::PairNext(..)
        | Pos::PairPrev(..) => 3,
        Pos::Until(..) | Pos::Since(..) | Pos::UneqUntil { .. } | Pos::UneqSince { .. } => 2,
        Pos::And(..) => 1,
        Pos::Or(..) => 0,
    }
}

fn cls_level(f: &Cls) -> u8 {
    match f {
        Cls::Lift(p) => pos_level(p),
        Cls::AttrIs(_) => 4,
        Cls::Not(_) | Cls::NextEq(_) | Cls::PrevEq(_) => 3,
        Cls::UntilEq(..) | Cls::SinceEq(..) => 2,
        Cls::And(..) => 1,
        Cls::Or(..) => 0,
    }
}

fn usub_level(f: &Usub) -> u8 {
    match f {
        Usub::Lift(p) => pos_level(p),
        Usub::AttrEq(_) | Usub::AttrNeq(_) => 4,
        Usub::And(..) => 1,
        Usub::Or(..) => 0,
    }
}

fn write_pos(f: &Pos, min: u8, out: &mut String) {
    let level = pos_level(f);
    let parens = level < min;
    if parens {
        out.push('(');
    }
    match f {
        Pos::True => out.push_str("true"),
        Pos::False => out.push_str("false"),
        Pos::Prop(p) => out.push_str(p),
        Pos::Not(a) => {
            out.push('!');
            write_pos(a, 3, out);
        }
        Pos::Or(a, b) => {
            write_pos(a, 0, out);
            out.push_str(" | ");
            write_pos(b, 1, out);
        }
        Pos::And(a, b) => {
            write_pos(a, 1, out);
            out.push_str(" & ");
            write_pos(b, 2, out);
        }
        Pos::Next(a) => {
            out.push_str("X ");
            write_pos(a, 3, out);
        }
        Pos::Prev(a) => {
            out.push_str("Y ");
            write_pos(a, 3, out);
        }
        Pos::Until(a, b) => {
            write_pos(a, 3, out);
            out.push_str(" U ");
            write_pos(b, 2, out);
        }
        Pos::Since(a, b) => {
            write_pos(a, 3, out);
            out.push_str(" S ");
            write_pos(b, 2, out);
        }
        Pos::Class { shift, attr, body } => {
            if let Cls::AttrIs(b) = &**body {
                if *shift >= 0 {
                    out.push_str(&format!("@{attr}=X^{shift}@{b}"));
                } else {
                    out.push_str(&format!("@{attr}=Y^{}@{b}", -shift));
                }
            } else {
                if *shift == 0 {
                    out.push_str(&format!("C{{{attr}}} "));
                } else {
                    out.push_str(&format!("C[{shift}]{{{attr}}} "));
                }
                write_cls(body, 3, out);
            }
        }
        Pos::UneqUntil { attr, shift, rho, tau } => {
            write_usub(rho, 3, out);
            out.push_str(&format!(" U!{{{attr}}}[{shift}] "));
            write_usub(tau, 2, out);
        }
        Pos::UneqSince { attr, shift, rho, tau } => {
            write_usub(rho, 3, out);
            out.push_str(&format!(" S!{{{attr}}}[{shift}] "));
            write_usub(tau, 2, out);
        }
        Pos::FromNowOn(a) => {
            out.push_str("N ");
            write_pos(a, 3, out);
        }
        Pos::UpToNow(a) => {
            out.push_str("Nbar ");
            write_pos(a, 3, out);
        }
        Pos::PairNext(a, b, body) => {
            out.push_str(&format!("XX{{{a},{b}}} "));
            write_pos(body, 3, out);
        }
        Pos::PairPrev(a, b, body) => {
            out.push_str(&format!("YY{{{a},{b}}} "));
            write_pos(body, 3, out);
        }
    }
    if parens {
        out.push(')');
    }
}

fn write_cls(f: &Cls, min: u8, out: &mut String) {
    let level = cls_level(f);
    let parens = level < min;
    if parens {
        out.push('(');
    }
    match f {
        Cls::Lift(p) => write_pos(p, if parens { 0 } else { min }, out),
        Cls::AttrIs(a) => out.push_str(&format!("@{a}")),
        Cls::Not(a) => {
            out.push('!');
            write_cls(a, 3, out);
        }
        Cls::Or(a, b) => {
            write_cls(a, 0, out);
            out.push_str(" | ");
            write_cls(b, 1, out);
        }
        Cls::And(a, b) => {
            write_cls(a, 1, out);
            out.push_str(" & ");
            write_cls(b, 2, out);
        }
        Cls::NextEq(a) => {
            out.push_str("X= ");
            write_cls(a, 3, out);
        }
        Cls::PrevEq(a) => {
            out.push_str("Y= ");
            write_cls(a, 3, out);
        }
        Cls::UntilEq(a, b) => {
            write_cls(a, 3, out);
            out.push_str(" U= ");
            write_cls(b, 2, out);
        }
        Cls::SinceEq(a, b) => {
            write_cls(a, 3, out);
            out.push_str(" S= ");
            write_cls(b, 2, out);
        }
    }
    if parens {
        out.push(')');
    }
}

fn write_usub(f: &Usub, min: u8, out: &mut String) {
    let level = usub_level(f);
    let parens = level < min;
    if parens {
        out.push('(');
    }
    match f {
        Usub::Lift(p) => write_pos(p, if parens { 0 } else { min }, out),
        Usub::AttrEq(b) => out.push_str(&format!("@{b}")),
        Usub::AttrNeq(b) => out.push_str(&format!("!=@{b}")),
        Usub::Or(a, b) => {
            write_usub(a, 0, out);
            out.push_str(" | ");
            write_usub(b, 1, out);
        }
        Usub::And(a, b) => {
            write_usub(a, 1, out);
            out.push_str(" & ");
            write_usub(b, 2, out);
        }
    }
    if parens {
        out.push(')');
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_pos(self, 0, &mut out);
        write!(f, "{out}")
    }
}

impl fmt::Display for Cls {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_cls(self, 0, &mut out);
        write!(f, "{out}")
    }
}

impl fmt::Display for Usub {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_usub(self, 0, &mut out);
        write!(f, "{out}")
    }
}
