//! Reduction from many attributes to one. Words are encoded blockwise,
//! formulas are translated to match, and the two constraint-style value
//! atoms are embedded as class formulas.
//!
//! A word over attributes a_1..a_m becomes a word over the single attribute
//! "a" where source position i expands to a block of m positions. Slot j of
//! a block repeats the source propositions, adds the marker proposition
//! att_j, and carries the value of a_j together with the marker R when a_j
//! is present; slots of absent attributes get a padding value chosen by
//! [`PaddingMode`]. The translation preserves truth slotwise: the
//! translated formula holds at every slot of block i exactly when the
//! source formula holds at source position i.

use std::collections::HashSet;

use thiserror::Error;

use crate::eval::EvalError;
use crate::formula::{
    build, classify, lower_shift, restricted_shape, Cls, FragmentTag, Pos, Usub,
};
use crate::word::{AttributedWord, RawValue, WordError};

/// How the slots of absent attributes get their values.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PaddingMode {
    /// Every padding slot receives a value that occurs nowhere else.
    Fresh,
    /// Padding reuses the value of the nearest position where the slot's
    /// attribute is present, preferring later positions over earlier ones,
    /// and falls back to a fresh value when the attribute never occurs.
    NearestValue,
}

/// Errors raised by encoding, decoding, and translation.
#[derive(Debug, Error)]
pub enum EncodeError {
    /// A word or formula mentions an attribute the scheme does not cover.
    #[error("attribute {0:?} is outside the encoding scheme")]
    UnknownAttribute(String),
    /// A word mentions a proposition the scheme does not cover.
    #[error("proposition {0:?} is outside the encoding scheme")]
    UnknownProposition(String),
    /// The user alphabet collides with a reserved marker name.
    #[error("name {0:?} is reserved by the encoding")]
    ReservedName(String),
    /// An alphabet handed to the scheme constructor is unusable.
    #[error("bad alphabet: {0}")]
    BadAlphabet(String),
    /// A word handed to the decoder is not a well-formed block sequence.
    #[error("malformed block structure: {0}")]
    MalformedBlocks(String),
    /// The formula lies outside the translatable fragments.
    #[error("formula is not translatable: {0}")]
    Untranslatable(String),
    /// An underlying word operation failed.
    #[error(transparent)]
    Word(#[from] WordError),
}

/// Fixed data of the block encoding: the attribute order, the user
/// proposition alphabet, and the padding mode.
///
/// The encoded side uses the reserved marker propositions att_1..att_m and
/// R plus the single attribute "a"; the constructor rejects user alphabets
/// that collide with the markers.
#[derive(Clone, Debug)]
pub struct EncodingScheme {
    attrs: Vec<String>,
    props: Vec<String>,
    padding: PaddingMode,
}

impl EncodingScheme {
    /// Builds a scheme over the given attribute order and user proposition
    /// alphabet, with fresh-value padding.
    pub fn new(attrs: &[&str], props: &[&str]) -> Result<Self, EncodeError> {
        if attrs.is_empty() {
            return Err(EncodeError::BadAlphabet(
                "the attribute order is empty".into(),
            ));
        }
        let mut seen: HashSet<&str> = HashSet::new();
        for a in attrs {
            if !seen.insert(a) {
                return Err(EncodeError::BadAlphabet(format!(
                    "duplicate attribute {a:?}"
                )));
            }
        }
        seen.clear();
        for p in props {
            if !seen.insert(p) {
                return Err(EncodeError::BadAlphabet(format!(
                    "duplicate proposition {p:?}"
                )));
            }
        }
        let reserved: Vec<String> = (1..=attrs.len())
            .map(|j| format!("att{j}"))
            .chain(["R".to_string()])
            .collect();
        for p in props {
            if reserved.iter().any(|r| r == p) {
                return Err(EncodeError::ReservedName((*p).to_string()));
            }
        }
        Ok(EncodingScheme {
            attrs: attrs.iter().map(|a| (*a).to_string()).collect(),
            props: props.iter().map(|p| (*p).to_string()).collect(),
            padding: PaddingMode::Fresh,
        })
    }

    /// Returns the scheme with a different padding mode.
    pub fn with_padding(mut self, mode: PaddingMode) -> Self {
        self.padding = mode;
        self
    }

    /// The number of attributes, which is also the block width.
    pub fn block_width(&self) -> usize {
        self.attrs.len()
    }

    /// The attribute order.
    pub fn attrs(&self) -> &[String] {
        &self.attrs
    }

    /// The user proposition alphabet.
    pub fn props(&self) -> &[String] {
        &self.props
    }

    /// 1-based slot of an attribute within a block.
    pub fn slot(&self, attr: &str) -> Option<usize> {
        self.attrs.iter().position(|a| a == attr).map(|k| k + 1)
    }

    /// Marker proposition of the given 1-based slot.
    pub fn slot_marker(&self, j: usize) -> String {
        format!("att{j}")
    }

    /// Marker proposition of slots that carry a present attribute's value.
    pub fn value_marker(&self) -> &'static str {
        "R"
    }

    /// Name of the single attribute on the encoded side.
    pub fn encoded_attr(&self) -> &'static str {
        "a"
    }

    fn encoded_props(&self) -> Vec<String> {
        self.props
            .iter()
            .cloned()
            .chain((1..=self.block_width()).map(|j| self.slot_marker(j)))
            .chain([self.value_marker().to_string()])
            .collect()
    }
}

fn fresh_raw(used: &mut HashSet<RawValue>, counter: &mut u64) -> RawValue {
    loop {
        let candidate = RawValue::Int(*counter);
        *counter += 1;
        if used.insert(candidate.clone()) {
            return candidate;
        }
    }
}

fn padding_raw(
    w: &AttributedWord,
    scheme: &EncodingScheme,
    i: usize,
    attr: &str,
    used: &mut HashSet<RawValue>,
    counter: &mut u64,
) -> RawValue {
    if scheme.padding == PaddingMode::NearestValue {
        let nearest = (i + 1..=w.len())
            .find_map(|k| w.value(attr, k))
            .or_else(|| (1..i).rev().find_map(|k| w.value(attr, k)));
        if let Some(d) = nearest {
            return w.raw_value(d).clone();
        }
    }
    fresh_raw(used, counter)
}

/// Encodes a word blockwise over the scheme's single attribute.
pub fn encode_word(
    w: &AttributedWord,
    scheme: &EncodingScheme,
) -> Result<AttributedWord, EncodeError> {
    for a in w.attrs_alphabet() {
        if scheme.slot(a).is_none() {
            return Err(EncodeError::UnknownAttribute(a.clone()));
        }
    }
    for p in w.props_alphabet() {
        if !scheme.props.iter().any(|q| q == p) {
            return Err(EncodeError::UnknownProposition(p.clone()));
        }
    }
    let m = scheme.block_width();
    let enc_props = scheme.encoded_props();
    let prop_refs: Vec<&str> = enc_props.iter().map(String::as_str).collect();
    let mut out = AttributedWord::new(&prop_refs, &[scheme.encoded_attr()])?;
    let markers: Vec<String> = (1..=m).map(|j| scheme.slot_marker(j)).collect();
    let mut used: HashSet<RawValue> = w
        .occurring_values()
        .into_iter()
        .map(|d| w.raw_value(d).clone())
        .collect();
    let mut counter: u64 = 0;
    for i in 1..=w.len() {
        let here: Vec<&str> = scheme
            .props
            .iter()
            .filter(|p| w.has_prop(p, i))
            .map(String::as_str)
            .collect();
        for j in 1..=m {
            let mut props = here.clone();
            props.push(&markers[j - 1]);
            let raw = match w.value(&scheme.attrs[j - 1], i) {
                Some(d) => {
                    props.push(scheme.value_marker());
                    w.raw_value(d).clone()
                }
                None => padding_raw(w, scheme, i, &scheme.attrs[j - 1], &mut used, &mut counter),
            };
            out.push_raw(&props, &[(scheme.encoded_attr(), raw)])?;
        }
    }
    Ok(out)
}

/// Decodes a blockwise-encoded word back to its source form. Values of
/// marked slots are carried over verbatim; padding slots are dropped.
pub fn decode_word(
    w: &AttributedWord,
    scheme: &EncodingScheme,
) -> Result<AttributedWord, EncodeError> {
    let m = scheme.block_width();
    if w.len() % m != 0 {
        return Err(EncodeError::MalformedBlocks(format!(
            "length {} is not a multiple of the block width {m}",
            w.len()
        )));
    }
    let attr_refs: Vec<&str> = scheme.attrs.iter().map(String::as_str).collect();
    let prop_refs: Vec<&str> = scheme.props.iter().map(String::as_str).collect();
    let mut out = AttributedWord::new(&prop_refs, &attr_refs)?;
    let markers: Vec<String> = (1..=m).map(|j| scheme.slot_marker(j)).collect();
    for b in 0..w.len() / m {
        let base = b * m;
        let mut here_props: Vec<&str> = Vec::new();
        for p in &scheme.props {
            let first = w.has_prop(p, base + 1);
            if (2..=m).any(|j| w.has_prop(p, base + j) != first) {
                return Err(EncodeError::MalformedBlocks(format!(
                    "block {} disagrees on proposition {p:?}",
                    b + 1
                )));
            }
            if first {
                here_props.push(p);
            }
        }
        let mut here_attrs: Vec<(&str, RawValue)> = Vec::new();
        for j in 1..=m {
            let pos = base + j;
            for (k, marker) in markers.iter().enumerate() {
                if w.has_prop(marker, pos) != (k + 1 == j) {
                    return Err(EncodeError::MalformedBlocks(format!(
                        "slot marker pattern broken at position {pos}"
                    )));
                }
            }
            if w.has_prop(scheme.value_marker(), pos) {
                let d = w.value(scheme.encoded_attr(), pos).ok_or_else(|| {
                    EncodeError::MalformedBlocks(format!("no attribute value at position {pos}"))
                })?;
                here_attrs.push((&scheme.attrs[j - 1], w.raw_value(d).clone()));
            }
        }
        out.push_raw(&here_props, &here_attrs)?;
    }
    Ok(out)
}

/// Position formula holding exactly on well-formed encodings: slot markers
/// cycle att_1..att_m from the first position to the last, every position
/// carries exactly one marker, the word ends at a block boundary, and all
/// positions of a block agree on the user propositions.
pub fn structure_formula(scheme: &EncodingScheme) -> Pos {
    use build::*;
    let m = scheme.block_width();
    let att = |j: usize| p(&scheme.slot_marker(j));
    let mut parts = vec![att(1)];
    parts.push(g(or_all((1..=m).map(att))));
    parts.push(g(and_all((1..=m).map(|j| {
        implies(
            att(j),
            and_all((1..=m).filter(|&k| k != j).map(|k| not(att(k)))),
        )
    }))));
    parts.push(g(and_all(
        (1..m).map(|j| implies(att(j), x(att(j + 1)))),
    )));
    parts.push(g(implies(att(m), or(x(att(1)), not(x(Pos::True))))));
    for q in scheme.props() {
        let q = p(q);
        parts.push(g(implies(
            not(att(m)),
            and(implies(q.clone(), x(q.clone())), implies(x(q.clone()), q)),
        )));
    }
    and_all(parts)
}

/// Rewrites every shifted class quantifier whose body is more than a bare
/// attribute test into unshifted quantifiers, class navigation, and value
/// pair tests. `attrs` must cover every attribute that may occur in the
/// words the formula will be evaluated on: the rewrite decides membership
/// of the skipped positions in the frozen value's class by testing each
/// listed attribute.
pub fn normalize_class_shifts(formula: &Pos, attrs: &[String]) -> Pos {
    match formula {
        Pos::True | Pos::False | Pos::Prop(_) => formula.clone(),
        Pos::Not(a) => Pos::Not(Box::new(normalize_class_shifts(a, attrs))),
        Pos::Or(a, b) => Pos::Or(
            Box::new(normalize_class_shifts(a, attrs)),
            Box::new(normalize_class_shifts(b, attrs)),
        ),
        Pos::And(a, b) => Pos::And(
            Box::new(normalize_class_shifts(a, attrs)),
            Box::new(normalize_class_shifts(b, attrs)),
        ),
        Pos::Next(a) => Pos::Next(Box::new(normalize_class_shifts(a, attrs))),
        Pos::Prev(a) => Pos::Prev(Box::new(normalize_class_shifts(a, attrs))),
        Pos::Until(a, b) => Pos::Until(
            Box::new(normalize_class_shifts(a, attrs)),
            Box::new(normalize_class_shifts(b, attrs)),
        ),
        Pos::Since(a, b) => Pos::Since(
            Box::new(normalize_class_shifts(a, attrs)),
            Box::new(normalize_class_shifts(b, attrs)),
        ),
        Pos::Class { shift, attr, body } => {
            let body = normalize_cls(body, attrs);
            rewrite_class(*shift, attr, &body, attrs)
        }
        Pos::UneqUntil {
            attr,
            shift,
            rho,
            tau,
        } => Pos::UneqUntil {
            attr: attr.clone(),
            shift: *shift,
            rho: Box::new(normalize_usub(rho, attrs)),
            tau: Box::new(normalize_usub(tau, attrs)),
        },
        Pos::UneqSince {
            attr,
            shift,
            rho,
            tau,
        } => Pos::UneqSince {
            attr: attr.clone(),
            shift: *shift,
            rho: Box::new(normalize_usub(rho, attrs)),
            tau: Box::new(normalize_usub(tau, attrs)),
        },
        Pos::FromNowOn(a) => Pos::FromNowOn(Box::new(normalize_class_shifts(a, attrs))),
        Pos::UpToNow(a) => Pos::UpToNow(Box::new(normalize_class_shifts(a, attrs))),
        Pos::PairNext(a, b, body) => Pos::PairNext(
            a.clone(),
            b.clone(),
            Box::new(normalize_class_shifts(body, attrs)),
        ),
        Pos::PairPrev(a, b, body) => Pos::PairPrev(
            a.clone(),
            b.clone(),
            Box::new(normalize_class_shifts(body, attrs)),
        ),
    }
}

fn normalize_cls(c: &Cls, attrs: &[String]) -> Cls {
    match c {
        Cls::Lift(f) => Cls::Lift(Box::new(normalize_class_shifts(f, attrs))),
        Cls::AttrIs(_) => c.clone(),
        Cls::Not(a) => Cls::Not(Box::new(normalize_cls(a, attrs))),
        Cls::Or(a, b) => Cls::Or(
            Box::new(normalize_cls(a, attrs)),
            Box::new(normalize_cls(b, attrs)),
        ),
        Cls::And(a, b) => Cls::And(
            Box::new(normalize_cls(a, attrs)),
            Box::new(normalize_cls(b, attrs)),
        ),
        Cls::NextEq(a) => Cls::NextEq(Box::new(normalize_cls(a, attrs))),
        Cls::PrevEq(a) => Cls::PrevEq(Box::new(normalize_cls(a, attrs))),
        Cls::UntilEq(a, b) => Cls::UntilEq(
            Box::new(normalize_cls(a, attrs)),
            Box::new(normalize_cls(b, attrs)),
        ),
        Cls::SinceEq(a, b) => Cls::SinceEq(
            Box::new(normalize_cls(a, attrs)),
            Box::new(normalize_cls(b, attrs)),
        ),
    }
}

fn normalize_usub(u: &Usub, attrs: &[String]) -> Usub {
    match u {
        Usub::Lift(f) => Usub::Lift(Box::new(normalize_class_shifts(f, attrs))),
        Usub::AttrEq(_) | Usub::AttrNeq(_) => u.clone(),
        Usub::Or(a, b) => Usub::Or(
            Box::new(normalize_usub(a, attrs)),
            Box::new(normalize_usub(b, attrs)),
        ),
        Usub::And(a, b) => Usub::And(
            Box::new(normalize_usub(a, attrs)),
            Box::new(normalize_usub(b, attrs)),
        ),
    }
}

/// Rewrites `C[shift]{attr} body` (body already normalized). Keeps the
/// quantifier as is when the shift is zero or the body is a bare attribute
/// test; otherwise eliminates the shift.
fn rewrite_class(shift: i64, attr: &str, body: &Cls, attrs: &[String]) -> Pos {
    use build::*;
    if shift == 0 || matches!(body, Cls::AttrIs(_)) {
        return class(shift, attr, body.clone());
    }
    let present = class(0, attr, cl(Pos::True));
    let in_range = shift_pow(shift, Pos::True);
    match body {
        Cls::AttrIs(_) => unreachable!(),
        Cls::Lift(f) => and(present, shift_pow(shift, (**f).clone())),
        Cls::Not(inner) => and_all([
            present,
            in_range,
            not(rewrite_class(shift, attr, inner, attrs)),
        ]),
        Cls::Or(l, r) => or(
            rewrite_class(shift, attr, l, attrs),
            rewrite_class(shift, attr, r, attrs),
        ),
        Cls::And(l, r) => and(
            rewrite_class(shift, attr, l, attrs),
            rewrite_class(shift, attr, r, attrs),
        ),
        Cls::NextEq(_) | Cls::PrevEq(_) | Cls::UntilEq(..) | Cls::SinceEq(..) => {
            let offsets: Vec<i64> = if shift > 0 {
                (1..=shift).collect()
            } else {
                (shift..=-1).collect()
            };
            let member =
                |c: i64| or_all(attrs.iter().map(|b| pair_shift(attr, c, b)));
            let forward = shift > 0;
            let mut cases = Vec::new();
            for pick in 0u32..(1 << offsets.len()) {
                let chosen: Vec<i64> = offsets
                    .iter()
                    .copied()
                    .enumerate()
                    .filter(|(idx, _)| pick >> idx & 1 == 1)
                    .map(|(_, c)| c)
                    .collect();
                let pattern = and_all(offsets.iter().copied().enumerate().map(|(idx, c)| {
                    if pick >> idx & 1 == 1 {
                        member(c)
                    } else {
                        not(member(c))
                    }
                }));
                let hit = chosen.contains(&shift);
                let between = chosen.iter().filter(|&&c| c != shift).count();
                let steps = match body {
                    Cls::UntilEq(..) => {
                        if !forward || hit {
                            chosen.len()
                        } else {
                            chosen.len() + 1
                        }
                    }
                    Cls::SinceEq(..) => {
                        if forward || hit {
                            chosen.len()
                        } else {
                            chosen.len() + 1
                        }
                    }
                    Cls::NextEq(_) => {
                        if forward {
                            chosen.len() + 1
                        } else {
                            between
                        }
                    }
                    Cls::PrevEq(_) => {
                        if forward {
                            between
                        } else {
                            chosen.len() + 1
                        }
                    }
                    _ => unreachable!(),
                };
                let landed = match body {
                    Cls::NextEq(inner) | Cls::PrevEq(inner) => (**inner).clone(),
                    other => other.clone(),
                };
                let walked = (0..steps).fold(landed, |f, _| {
                    if forward {
                        Cls::NextEq(Box::new(f))
                    } else {
                        Cls::PrevEq(Box::new(f))
                    }
                });
                cases.push(and(pattern, class(0, attr, walked)));
            }
            and_all([present, in_range, or_all(cases)])
        }
    }
}

fn slot_of(sc: &EncodingScheme, attr: &str) -> Result<usize, EncodeError> {
    sc.slot(attr)
        .ok_or_else(|| EncodeError::UnknownAttribute(attr.to_string()))
}

/// `@a=X^delta@a` on the encoded side: the value `delta` steps away is
/// marked and equals the value here.
fn value_pair(sc: &EncodingScheme, delta: i64) -> Pos {
    use build::*;
    class(
        delta,
        sc.encoded_attr(),
        cand(cl(p(sc.value_marker())), attr_is(sc.encoded_attr())),
    )
}

/// Navigation to slot `i` of the current block: from slot j, move i-j
/// steps, then evaluate the payload.
fn nav_to_slot(sc: &EncodingScheme, i: usize, payload: Pos) -> Pos {
    use build::*;
    and_all((1..=sc.block_width()).map(|j| {
        implies(
            p(&sc.slot_marker(j)),
            shift_pow(i as i64 - j as i64, payload.clone()),
        )
    }))
}

/// Navigation to the last marked slot of the current block that carries
/// the current value, then evaluation of the class payload there.
fn block_last_match(sc: &EncodingScheme, payload: Cls) -> Pos {
    use build::*;
    let m = sc.block_width();
    and_all((1..=m).map(|i| {
        let span = (m - i) as i64;
        implies(
            p(&sc.slot_marker(i)),
            and_all((0..=span).map(|d| {
                let pattern = and_all(
                    std::iter::once(value_pair(sc, d))
                        .chain((d + 1..=span).map(|dd| not(value_pair(sc, dd)))),
                );
                implies(pattern, class(d, sc.encoded_attr(), payload.clone()))
            })),
        )
    }))
}

/// Past mirror of [`block_last_match`]: the first marked slot of the
/// current block carrying the current value.
fn block_first_match(sc: &EncodingScheme, payload: Cls) -> Pos {
    use build::*;
    let m = sc.block_width();
    and_all((1..=m).map(|i| {
        let span = (i - 1) as i64;
        implies(
            p(&sc.slot_marker(i)),
            and_all((0..=span).map(|d| {
                let pattern = and_all(
                    std::iter::once(value_pair(sc, -d))
                        .chain((d + 1..=span).map(|dd| not(value_pair(sc, -dd)))),
                );
                implies(pattern, class(-d, sc.encoded_attr(), payload.clone()))
            })),
        )
    }))
}

/// Embeds a translated class formula into a position context at a marked
/// slot: a bare lift needs no rebinding, anything else refreezes the slot's
/// own value.
fn embed_cls(sc: &EncodingScheme, c: Cls) -> Pos {
    match c {
        Cls::Lift(f) => *f,
        other => build::class(0, sc.encoded_attr(), other),
    }
}

/// Translates a position formula for evaluation on encodings: the result
/// holds at every slot of block i exactly when the source formula holds at
/// source position i.
pub fn translate(formula: &Pos, scheme: &EncodingScheme) -> Result<Pos, EncodeError> {
    if let FragmentTag::BeyondDecidable(reason) = classify(formula) {
        return Err(EncodeError::Untranslatable(reason));
    }
    let normalized = normalize_class_shifts(formula, &scheme.attrs);
    t_pos(&normalized, scheme)
}

fn t_pos(f: &Pos, sc: &EncodingScheme) -> Result<Pos, EncodeError> {
    use build::*;
    let m = sc.block_width() as u64;
    Ok(match f {
        Pos::True | Pos::False | Pos::Prop(_) => f.clone(),
        Pos::Not(a) => not(t_pos(a, sc)?),
        Pos::Or(a, b) => or(t_pos(a, sc)?, t_pos(b, sc)?),
        Pos::And(a, b) => and(t_pos(a, sc)?, t_pos(b, sc)?),
        Pos::Next(a) => x_pow(m, t_pos(a, sc)?),
        Pos::Prev(a) => y_pow(m, t_pos(a, sc)?),
        Pos::Until(a, b) => until(t_pos(a, sc)?, t_pos(b, sc)?),
        Pos::Since(a, b) => since(t_pos(a, sc)?, t_pos(b, sc)?),
        Pos::Class { shift, attr, body } => {
            let i = slot_of(sc, attr)?;
            match &**body {
                Cls::AttrIs(b) => {
                    let j = slot_of(sc, b)?;
                    let delta = shift * m as i64 + (j as i64 - i as i64);
                    nav_to_slot(sc, i, and(p(sc.value_marker()), value_pair(sc, delta)))
                }
                body if *shift == 0 => {
                    let embedded = embed_cls(sc, t_cls(body, sc)?);
                    nav_to_slot(sc, i, and(p(sc.value_marker()), embedded))
                }
                _ => {
                    return Err(EncodeError::Untranslatable(
                        "shifted class quantifier with a compound body".into(),
                    ))
                }
            }
        }
        Pos::UneqUntil {
            attr,
            shift,
            rho,
            tau,
        } => t_uneq(sc, true, attr, *shift, rho, tau)?,
        Pos::UneqSince {
            attr,
            shift,
            rho,
            tau,
        } => t_uneq(sc, false, attr, *shift, rho, tau)?,
        Pos::FromNowOn(_) | Pos::UpToNow(_) | Pos::PairNext(..) | Pos::PairPrev(..) => {
            return Err(EncodeError::Untranslatable(
                "operator outside the translatable fragments".into(),
            ))
        }
    })
}

fn t_cls(c: &Cls, sc: &EncodingScheme) -> Result<Cls, EncodeError> {
    use build::*;
    let r = || p(sc.value_marker());
    Ok(match c {
        Cls::Lift(f) => cl(t_pos(f, sc)?),
        Cls::AttrIs(b) => {
            let j = slot_of(sc, b)?;
            cl(and_all((1..=sc.block_width()).map(|i| {
                implies(
                    p(&sc.slot_marker(i)),
                    value_pair(sc, j as i64 - i as i64),
                )
            })))
        }
        Cls::Not(a) => cnot(t_cls(a, sc)?),
        Cls::Or(a, b) => cor(t_cls(a, sc)?, t_cls(b, sc)?),
        Cls::And(a, b) => cand(t_cls(a, sc)?, t_cls(b, sc)?),
        Cls::NextEq(a) => {
            let landing = cand(cl(r()), t_cls(a, sc)?);
            cl(block_last_match(sc, xeq(ueq(cl(not(r())), landing))))
        }
        Cls::PrevEq(a) => {
            let landing = cand(cl(r()), t_cls(a, sc)?);
            cl(block_first_match(sc, yeq(seq(cl(not(r())), landing))))
        }
        Cls::UntilEq(a, b) => ueq(
            cimplies(cl(r()), t_cls(a, sc)?),
            cand(cl(r()), t_cls(b, sc)?),
        ),
        Cls::SinceEq(a, b) => seq(
            cimplies(cl(r()), t_cls(a, sc)?),
            cand(cl(r()), t_cls(b, sc)?),
        ),
    })
}

fn t_uneq(
    sc: &EncodingScheme,
    is_until: bool,
    attr: &str,
    shift: u64,
    rho: &Usub,
    tau: &Usub,
) -> Result<Pos, EncodeError> {
    use build::*;
    let shape = restricted_shape(rho, tau).map_err(EncodeError::Untranslatable)?;
    let j = slot_of(sc, attr)?;
    let beta = slot_of(sc, &shape.guard_attr)?;
    let m = sc.block_width() as i64;
    let a = sc.encoded_attr();
    let r = || p(sc.value_marker());
    let att_beta = || p(&sc.slot_marker(beta));
    let plain = or(t_pos(&shape.rho, sc)?, not(att_beta()));
    let enc_rho = uor(
        ul(plain),
        uor(
            uand(ueq_attr(a), ul(and(r(), t_pos(&shape.rho_eq, sc)?))),
            uand(uneq_attr(a), ul(and(r(), t_pos(&shape.rho_neq, sc)?))),
        ),
    );
    let enc_tau = uand(
        uneq_attr(a),
        ul(and(r(), and(att_beta(), t_pos(&shape.tau, sc)?))),
    );
    let d = if is_until {
        shift as i64 * m - (j as i64 - 1)
    } else {
        shift as i64 * m - (m - j as i64)
    };
    let inner = if d >= 0 {
        if is_until {
            uneq_until(a, d as u64, enc_rho, enc_tau)
        } else {
            uneq_since(a, d as u64, enc_rho, enc_tau)
        }
    } else {
        lower_shift(is_until, a, d, &enc_rho, &enc_tau).map_err(EncodeError::Untranslatable)?
    };
    Ok(nav_to_slot(sc, j, and(r(), inner)))
}

/// Value atom of the constraint-style fragment: a comparison with a fixed
/// lookahead, or an eventual recurrence of the current value.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CltlAtom {
    /// Holds when attribute `x` here carries the same value as attribute
    /// `y` exactly `delta` positions ahead.
    ShiftEq {
        /// Attribute read at the current position.
        x: String,
        /// Lookahead distance.
        delta: u64,
        /// Attribute read at the shifted position.
        y: String,
    },
    /// Holds when the value of `x` here occurs again as the value of `y`
    /// at some strictly later position.
    DiamondEq {
        /// Attribute read at the current position.
        x: String,
        /// Attribute whose later occurrences are searched.
        y: String,
    },
}

/// Expresses a constraint atom as a class formula.
pub fn translate_cltl(atom: &CltlAtom) -> Pos {
    use build::*;
    match atom {
        CltlAtom::ShiftEq { x, delta, y } => pair_shift(x, *delta as i64, y),
        CltlAtom::DiamondEq { x, y } => class(0, x, xeq(feq(attr_is(y)))),
    }
}

/// Direct semantics of a constraint atom, the reference the translation is
/// tested against.
pub fn eval_cltl_atom(w: &AttributedWord, i: usize, atom: &CltlAtom) -> Result<bool, EvalError> {
    if i == 0 || i > w.len() {
        return Err(EvalError::PositionOutOfRange {
            index: i,
            len: w.len(),
        });
    }
    Ok(match atom {
        CltlAtom::ShiftEq { x, delta, y } => match w.value(x, i) {
            Some(v) => {
                let target = i + *delta as usize;
                target <= w.len() && w.value(y, target) == Some(v)
            }
            None => false,
        },
        CltlAtom::DiamondEq { x, y } => match w.value(x, i) {
            Some(v) => (i + 1..=w.len()).any(|k| w.value(y, k) == Some(v)),
            None => false,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{eval_position, eval_word, label_positions};
    use crate::generate::{
        enumerate_words, random_formula, random_word, FormulaShape, SplitMix64, WordShape,
    };
    use build::*;

    fn two_attr_scheme() -> EncodingScheme {
        EncodingScheme::new(&["a1", "a2"], &["p", "q"]).unwrap()
    }

    /// Three positions, each attribute present at two of them.
    fn two_attr_word() -> AttributedWord {
        let mut w = AttributedWord::new(&["p", "q"], &["a1", "a2"]).unwrap();
        w.push(&["p"], &[("a1", 1)]).unwrap();
        w.push(&["q"], &[("a2", 2)]).unwrap();
        w.push(&["p", "q"], &[("a1", 3), ("a2", 4)]).unwrap();
        w
    }

    fn raw_at(w: &AttributedWord, i: usize) -> RawValue {
        w.raw_value(w.value("a", i).unwrap()).clone()
    }

    #[test]
    fn nearest_value_padding_encodes_the_example_word() {
        let scheme = two_attr_scheme().with_padding(PaddingMode::NearestValue);
        let enc = encode_word(&two_attr_word(), &scheme).unwrap();
        assert_eq!(enc.len(), 6);
        let marked: Vec<usize> = (1..=6).filter(|&i| enc.has_prop("R", i)).collect();
        assert_eq!(marked, vec![1, 4, 5, 6]);
        let values: Vec<RawValue> = (1..=6).map(|i| raw_at(&enc, i)).collect();
        let ints: Vec<RawValue> = [1, 2, 3, 2, 3, 4].iter().map(|&v| RawValue::Int(v)).collect();
        assert_eq!(values, ints);
        for i in 1..=6 {
            let j = if i % 2 == 1 { 1 } else { 2 };
            assert!(enc.has_prop(&format!("att{j}"), i));
            assert!(!enc.has_prop(&format!("att{}", 3 - j), i));
        }
        assert!(enc.has_prop("p", 1) && enc.has_prop("p", 2) && !enc.has_prop("q", 1));
        assert!(enc.has_prop("q", 3) && enc.has_prop("q", 4) && !enc.has_prop("p", 3));
        assert!(enc.has_prop("p", 5) && enc.has_prop("q", 6));
    }

    #[test]
    fn fresh_padding_never_reuses_a_value() {
        let scheme = two_attr_scheme();
        let enc = encode_word(&two_attr_word(), &scheme).unwrap();
        let pad2 = raw_at(&enc, 2);
        let pad3 = raw_at(&enc, 3);
        assert_ne!(pad2, pad3);
        for i in [1, 4, 5, 6] {
            assert_ne!(raw_at(&enc, i), pad2);
            assert_ne!(raw_at(&enc, i), pad3);
        }
    }

    #[test]
    fn empty_word_encodes_to_the_empty_word() {
        let scheme = two_attr_scheme();
        let w = AttributedWord::new(&["p", "q"], &["a1", "a2"]).unwrap();
        assert_eq!(encode_word(&w, &scheme).unwrap().len(), 0);
    }

    #[test]
    fn single_attribute_encoding_only_adds_markers() {
        let scheme = EncodingScheme::new(&["z"], &["p"]).unwrap();
        let mut w = AttributedWord::new(&["p"], &["z"]).unwrap();
        w.push(&["p"], &[("z", 7)]).unwrap();
        w.push(&[], &[("z", 9)]).unwrap();
        let enc = encode_word(&w, &scheme).unwrap();
        assert_eq!(enc.len(), 2);
        for i in 1..=2 {
            assert!(enc.has_prop("att1", i));
            assert!(enc.has_prop("R", i));
            assert_eq!(enc.has_prop("p", i), w.has_prop("p", i));
            assert_eq!(raw_at(&enc, i), w.raw_value(w.value("z", i).unwrap()).clone());
        }
    }

    #[test]
    fn decoding_inverts_encoding_exactly() {
        for mode in [PaddingMode::Fresh, PaddingMode::NearestValue] {
            let scheme = two_attr_scheme().with_padding(mode);
            let w = two_attr_word();
            let enc = encode_word(&w, &scheme).unwrap();
            assert_eq!(decode_word(&enc, &scheme).unwrap(), w);
        }
    }

    #[test]
    fn decoding_rejects_malformed_blocks() {
        let scheme = two_attr_scheme();
        let enc_props = ["p", "q", "att1", "att2", "R"];

        let mut odd = AttributedWord::new(&enc_props, &["a"]).unwrap();
        odd.push(&["att1"], &[("a", 1)]).unwrap();
        assert!(matches!(
            decode_word(&odd, &scheme),
            Err(EncodeError::MalformedBlocks(_))
        ));

        let mut swapped = AttributedWord::new(&enc_props, &["a"]).unwrap();
        swapped.push(&["att2"], &[("a", 1)]).unwrap();
        swapped.push(&["att1"], &[("a", 2)]).unwrap();
        assert!(matches!(
            decode_word(&swapped, &scheme),
            Err(EncodeError::MalformedBlocks(_))
        ));

        let mut disagreeing = AttributedWord::new(&enc_props, &["a"]).unwrap();
        disagreeing.push(&["p", "att1"], &[("a", 1)]).unwrap();
        disagreeing.push(&["att2"], &[("a", 2)]).unwrap();
        assert!(matches!(
            decode_word(&disagreeing, &scheme),
            Err(EncodeError::MalformedBlocks(_))
        ));
    }

    #[test]
    fn scheme_and_encode_validate_their_inputs() {
        assert!(matches!(
            EncodingScheme::new(&["a1", "a2"], &["att2"]),
            Err(EncodeError::ReservedName(_))
        ));
        assert!(matches!(
            EncodingScheme::new(&["a1", "a2"], &["R"]),
            Err(EncodeError::ReservedName(_))
        ));
        assert!(matches!(
            EncodingScheme::new(&["a1", "a1"], &[]),
            Err(EncodeError::BadAlphabet(_))
        ));
        assert!(matches!(
            EncodingScheme::new(&[], &["p"]),
            Err(EncodeError::BadAlphabet(_))
        ));
        let scheme = two_attr_scheme();
        let mut w = AttributedWord::new(&[], &["other"]).unwrap();
        w.push(&[], &[("other", 1)]).unwrap();
        assert!(matches!(
            encode_word(&w, &scheme),
            Err(EncodeError::UnknownAttribute(_))
        ));
        let w2 = AttributedWord::new(&["r"], &["a1"]).unwrap();
        assert!(matches!(
            encode_word(&w2, &scheme),
            Err(EncodeError::UnknownProposition(_))
        ));
    }

    #[test]
    fn structure_formula_accepts_encodings_and_rejects_tampering() {
        let scheme = two_attr_scheme();
        let phi = structure_formula(&scheme);
        let enc = encode_word(&two_attr_word(), &scheme).unwrap();
        assert!(eval_word(&enc, &phi).unwrap());

        let enc_props = ["p", "q", "att1", "att2", "R"];
        let mut wrong_marker = AttributedWord::new(&enc_props, &["a"]).unwrap();
        wrong_marker.push(&["att1"], &[("a", 1)]).unwrap();
        wrong_marker.push(&["att1"], &[("a", 2)]).unwrap();
        assert!(!eval_word(&wrong_marker, &phi).unwrap());

        let mut cut_short = AttributedWord::new(&enc_props, &["a"]).unwrap();
        cut_short.push(&["att1"], &[("a", 1)]).unwrap();
        assert!(!eval_word(&cut_short, &phi).unwrap());

        let mut disagreeing = AttributedWord::new(&enc_props, &["a"]).unwrap();
        disagreeing.push(&["p", "att1"], &[("a", 1)]).unwrap();
        disagreeing.push(&["att2"], &[("a", 2)]).unwrap();
        assert!(!eval_word(&disagreeing, &phi).unwrap());
    }

    #[test]
    fn class_quantifier_translation_expands_by_slot() {
        let scheme = two_attr_scheme();
        let formula = class(0, "a2", cl(Pos::True));
        let expected = and(
            implies(p("att1"), x(and(p("R"), Pos::True))),
            implies(p("att2"), and(p("R"), Pos::True)),
        );
        assert_eq!(translate(&formula, &scheme).unwrap(), expected);
    }

    #[test]
    fn translation_is_compositional_and_keeps_propositions() {
        let scheme = two_attr_scheme();
        assert_eq!(translate(&p("p"), &scheme).unwrap(), p("p"));
        let inner = class(0, "a1", attr_is("a2"));
        let t_inner = translate(&inner, &scheme).unwrap();
        assert_eq!(
            translate(&not(inner.clone()), &scheme).unwrap(),
            not(t_inner.clone())
        );
        assert_eq!(
            translate(&or(inner.clone(), p("q")), &scheme).unwrap(),
            or(t_inner, p("q"))
        );
        assert!(matches!(
            translate(&from_now_on(p("p")), &scheme),
            Err(EncodeError::Untranslatable(_))
        ));
    }

    #[test]
    fn translation_preserves_truth_on_random_words() {
        let mut rng = SplitMix64::new(0xB10C_ED01);
        let word_shape = WordShape {
            props: vec!["p".into(), "q".into()],
            attrs: vec!["a1".into(), "a2".into()],
            len: 0,
            max_values: 4,
            complete: false,
        };
        let formula_shape = FormulaShape {
            props: vec!["p".into(), "q".into()],
            attrs: vec!["a1".into(), "a2".into()],
            max_depth: 3,
            allow_class: true,
            allow_extended: true,
            max_shift: 2,
        };
        let schemes = [
            two_attr_scheme(),
            two_attr_scheme().with_padding(PaddingMode::NearestValue),
        ];
        for trial in 0..350 {
            let mut shape = word_shape.clone();
            shape.len = 1 + rng.below(5) as usize;
            let w = random_word(&mut rng, &shape);
            let chi = random_formula(&mut rng, &formula_shape);
            let source = label_positions(&w, &chi);
            for scheme in &schemes {
                let enc = encode_word(&w, scheme).unwrap();
                assert!(
                    eval_word(&enc, &structure_formula(scheme)).unwrap(),
                    "trial {trial}: encoding violates the structure formula"
                );
                let t = translate(&chi, scheme).unwrap();
                let target = label_positions(&enc, &t);
                for i in 1..=w.len() {
                    for s in 1..=scheme.block_width() {
                        assert_eq!(
                            target[(i - 1) * scheme.block_width() + s - 1],
                            source[i - 1],
                            "trial {trial}: mismatch at source position {i}, slot {s}\nword {w:?}\nformula {chi:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn shifted_class_rewrites_match_direct_evaluation() {
        let attrs: Vec<String> = vec!["a".into(), "b".into()];
        let mut bodies: Vec<Cls> = vec![
            xeq(attr_is("b")),
            yeq(attr_is("a")),
            ueq(cl(p("p")), attr_is("b")),
            seq(cl(p("p")), attr_is("b")),
            ueq(attr_is("a"), cl(not(p("p")))),
            cnot(xeq(cl(p("p")))),
            cand(xeq(attr_is("a")), cl(p("p"))),
            cor(yeq(attr_is("b")), cl(not(p("p")))),
            cl(x(p("p"))),
        ];
        bodies.push(xeq(Box::new(bodies[2].clone()).as_ref().clone()));
        let mut formulas = Vec::new();
        for shift in [-2i64, -1, 1, 2] {
            for body in &bodies {
                formulas.push(class(shift, "a", body.clone()));
            }
        }
        for len in 0..=3usize {
            enumerate_words(&["p"], &["a", "b"], len, 3, false, &mut |w| {
                for f in &formulas {
                    let rewritten = normalize_class_shifts(f, &attrs);
                    for i in 1..=w.len() {
                        assert_eq!(
                            eval_position(w, i, f).unwrap(),
                            eval_position(w, i, &rewritten).unwrap(),
                            "word {w:?} position {i} formula {f:?}"
                        );
                    }
                }
                true
            });
        }
    }

    #[test]
    fn shifted_class_rewrites_match_on_random_words() {
        let mut rng = SplitMix64::new(0x5H1F_7ED5u64 as u64);
        let attrs: Vec<String> = vec!["a1".into(), "a2".into()];
        let word_shape = WordShape {
            props: vec!["p".into()],
            attrs: attrs.clone(),
            len: 0,
            max_values: 3,
            complete: false,
        };
        let formula_shape = FormulaShape {
            props: vec!["p".into()],
            attrs: attrs.clone(),
            max_depth: 3,
            allow_class: true,
            allow_extended: false,
            max_shift: 2,
        };
        for _ in 0..600 {
            let mut shape = word_shape.clone();
            shape.len = 1 + rng.below(6) as usize;
            let w = random_word(&mut rng, &shape);
            let f = random_formula(&mut rng, &formula_shape);
            let rewritten = normalize_class_shifts(&f, &attrs);
            assert_eq!(
                label_positions(&w, &f),
                label_positions(&w, &rewritten),
                "word {w:?} formula {f:?}"
            );
        }
    }

    #[test]
    fn constraint_atoms_translate_faithfully() {
        let tautology = translate_cltl(&CltlAtom::ShiftEq {
            x: "x".into(),
            delta: 0,
            y: "x".into(),
        });
        assert_eq!(tautology, class(0, "x", attr_is("x")));

        let mut rng = SplitMix64::new(0xC17A_70E5);
        let attrs = ["x", "y"];
        for _ in 0..300 {
            let len = 1 + rng.below(6) as usize;
            let mut w = AttributedWord::new(&[], &attrs).unwrap();
            for _ in 0..len {
                w.push(
                    &[],
                    &[("x", rng.below(3)), ("y", rng.below(3))],
                )
                .unwrap();
            }
            let atom = if rng.chance(1, 2) {
                CltlAtom::ShiftEq {
                    x: rng.pick(&attrs).to_string(),
                    delta: rng.below(4),
                    y: rng.pick(&attrs).to_string(),
                }
            } else {
                CltlAtom::DiamondEq {
                    x: rng.pick(&attrs).to_string(),
                    y: rng.pick(&attrs).to_string(),
                }
            };
            let translated = translate_cltl(&atom);
            for i in 1..=len {
                assert_eq!(
                    eval_cltl_atom(&w, i, &atom).unwrap(),
                    eval_position(&w, i, &translated).unwrap(),
                    "word {w:?} position {i} atom {atom:?}"
                );
            }
            assert!(eval_position(&w, 1, &tautology).unwrap());
        }
    }

    #[test]
    fn encode_then_decode_round_trips_random_words() {
        let mut rng = SplitMix64::new(0xDEC0_DE55);
        let scheme = EncodingScheme::new(&["a1", "a2", "a3"], &["p"]).unwrap();
        let phi = structure_formula(&scheme);
        for _ in 0..200 {
            let shape = WordShape {
                props: vec!["p".into()],
                attrs: vec!["a1".into(), "a2".into(), "a3".into()],
                len: 1 + rng.below(5) as usize,
                max_values: 3,
                complete: false,
            };
            let w = random_word(&mut rng, &shape);
            for mode in [PaddingMode::Fresh, PaddingMode::NearestValue] {
                let scheme = scheme.clone().with_padding(mode);
                let enc = encode_word(&w, &scheme).unwrap();
                assert_eq!(enc.len(), 3 * w.len());
                assert!(eval_word(&enc, &phi).unwrap());
                assert_eq!(decode_word(&enc, &scheme).unwrap(), w);
            }
        }
    }
}
