//! Deterministic generators for words and formulas.
//!
//! Randomness comes from a splitmix64 stream seeded explicitly, so every
//! test and harness run is reproducible from its seed. Exhaustive word
//! enumeration is canonical up to value renaming: data values are assigned
//! in first-occurrence order, which is sound for any property that is
//! invariant under injective value renaming (all evaluation is).

use crate::formula::{build, Pos, Usub};
use crate::word::AttributedWord;

/// A splitmix64 pseudo-random stream.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    /// Creates a stream from a seed.
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Next raw 64-bit output.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw from 0..bound (bound must be positive). The modulo bias
    /// is irrelevant at the bounds used here.
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        self.next_u64() % bound
    }

    /// True with probability num/denom.
    pub fn chance(&mut self, num: u64, denom: u64) -> bool {
        self.below(denom) < num
    }

    /// Uniformly picks an element of a nonempty slice.
    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len() as u64) as usize]
    }
}

/// Shape parameters for random word generation.
#[derive(Clone, Debug)]
pub struct WordShape {
    /// Proposition alphabet.
    pub props: Vec<String>,
    /// Attribute alphabet.
    pub attrs: Vec<String>,
    /// Exact number of positions.
    pub len: usize,
    /// Values are drawn from 0..max_values.
    pub max_values: u64,
    /// When true every attribute is present at every position.
    pub complete: bool,
}

/// Draws a random word of the given shape.
pub fn random_word(rng: &mut SplitMix64, shape: &WordShape) -> AttributedWord {
    let props: Vec<&str> = shape.props.iter().map(|s| s.as_str()).collect();
    let attrs: Vec<&str> = shape.attrs.iter().map(|s| s.as_str()).collect();
    let mut w = AttributedWord::new(&props, &attrs).unwrap();
    for _ in 0..shape.len {
        let here_props: Vec<&str> = props
            .iter()
            .copied()
            .filter(|_| rng.chance(1, 2))
            .collect();
        let mut here_attrs: Vec<(&str, u64)> = Vec::new();
        for a in &attrs {
            if shape.complete || rng.chance(3, 4) {
                here_attrs.push((a, rng.below(shape.max_values)));
            }
        }
        w.push(&here_props, &here_attrs).unwrap();
    }
    w
}

/// Calls `visit` with every word of exactly `len` positions over the given
/// alphabets, canonical up to value renaming, with at most `max_values`
/// distinct values. Attribute presence ranges over all subsets unless
/// `complete` is set. Stops early when `visit` returns false; the return
/// value reports whether enumeration ran to completion.
pub fn enumerate_words(
    props: &[&str],
    attrs: &[&str],
    len: usize,
    max_values: u64,
    complete: bool,
    visit: &mut dyn FnMut(&AttributedWord) -> bool,
) -> bool {
    let mut positions: Vec<(u64, Vec<Option<u64>>)> = Vec::with_capacity(len);
    fill(props, attrs, len, max_values, complete, &mut positions, 0, visit)
}

#[allow(clippy::too_many_arguments)]
fn fill(
    props: &[&str],
    attrs: &[&str],
    len: usize,
    max_values: u64,
    complete: bool,
    positions: &mut Vec<(u64, Vec<Option<u64>>)>,
    used_values: u64,
    visit: &mut dyn FnMut(&AttributedWord) -> bool,
) -> bool {
    if positions.len() == len {
        let mut w = AttributedWord::new(props, attrs).unwrap();
        for (mask, vals) in positions.iter() {
            let here_props: Vec<&str> = props
                .iter()
                .enumerate()
                .filter(|(k, _)| mask & (1 << k) != 0)
                .map(|(_, p)| *p)
                .collect();
            let here_attrs: Vec<(&str, u64)> = attrs
                .iter()
                .zip(vals.iter())
                .filter_map(|(a, v)| v.map(|v| (*a, v)))
                .collect();
            w.push(&here_props, &here_attrs).unwrap();
        }
        return visit(&w);
    }
    let prop_masks = 1u64 << props.len();
    for mask in 0..prop_masks {
        let mut stack: Vec<(usize, Vec<Option<u64>>, u64)> = vec![(0, Vec::new(), used_values)];
        let mut assignments: Vec<(Vec<Option<u64>>, u64)> = Vec::new();
        while let Some((k, vals, used)) = stack.pop() {
            if k == attrs.len() {
                assignments.push((vals, used));
                continue;
            }
            if !complete {
                let mut next = vals.clone();
                next.push(None);
                stack.push((k + 1, next, used));
            }
            let fresh_allowed = used < max_values;
            let top = if fresh_allowed { used + 1 } else { used };
            for v in 0..top {
                let mut next = vals.clone();
                next.push(Some(v));
                stack.push((k + 1, next, used.max(v + 1)));
            }
        }
        for (vals, used) in assignments {
            positions.push((mask, vals));
            let go = fill(props, attrs, len, max_values, complete, positions, used, visit);
            positions.pop();
            if !go {
                return false;
            }
        }
    }
    true
}

/// Shape parameters for random formula generation.
#[derive(Clone, Debug)]
pub struct FormulaShape {
    /// Proposition vocabulary.
    pub props: Vec<String>,
    /// Attribute vocabulary.
    pub attrs: Vec<String>,
    /// Maximum nesting depth.
    pub max_depth: u32,
    /// Permit class quantifiers and class navigation.
    pub allow_class: bool,
    /// Permit inequality until/since (restricted shape, side condition met
    /// by construction).
    pub allow_extended: bool,
    /// Largest class-quantifier shift magnitude.
    pub max_shift: u64,
}

/// Draws a random position formula.
pub fn random_formula(rng: &mut SplitMix64, shape: &FormulaShape) -> Pos {
    random_pos(rng, shape, shape.max_depth)
}

fn random_prop(rng: &mut SplitMix64, shape: &FormulaShape) -> Pos {
    if shape.props.is_empty() || rng.chance(1, 8) {
        if rng.chance(1, 2) {
            Pos::True
        } else {
            Pos::False
        }
    } else {
        build::p(rng.pick(&shape.props))
    }
}

fn random_pos(rng: &mut SplitMix64, shape: &FormulaShape, depth: u32) -> Pos {
    use build::*;
    if depth == 0 {
        return random_prop(rng, shape);
    }
    let has_attrs = !shape.attrs.is_empty();
    let mut choices: Vec<u32> = vec![0, 1, 2, 3, 4, 5, 6, 7];
    if shape.allow_class && has_attrs {
        choices.push(8);
        choices.push(9);
    }
    if shape.allow_extended && has_attrs {
        choices.push(10);
    }
    match *rng.pick(&choices) {
        0 => random_prop(rng, shape),
        1 => not(random_pos(rng, shape, depth - 1)),
        2 => or(
            random_pos(rng, shape, depth - 1),
            random_pos(rng, shape, depth - 1),
        ),
        3 => and(
            random_pos(rng, shape, depth - 1),
            random_pos(rng, shape, depth - 1),
        ),
        4 => x(random_pos(rng, shape, depth - 1)),
        5 => y(random_pos(rng, shape, depth - 1)),
        6 => until(
            random_pos(rng, shape, depth - 1),
            random_pos(rng, shape, depth - 1),
        ),
        7 => since(
            random_pos(rng, shape, depth - 1),
            random_pos(rng, shape, depth - 1),
        ),
        8 | 9 => {
            let a = rng.pick(&shape.attrs).clone();
            let span = 2 * shape.max_shift + 1;
            let shift = rng.below(span) as i64 - shape.max_shift as i64;
            class(shift, &a, random_cls(rng, shape, depth - 1))
        }
        _ => random_restricted_uneq(rng, shape, depth - 1),
    }
}

fn random_cls(rng: &mut SplitMix64, shape: &FormulaShape, depth: u32) -> crate::formula::Cls {
    use build::*;
    use crate::formula::Cls;
    if depth == 0 {
        return if rng.chance(1, 2) {
            attr_is(rng.pick(&shape.attrs))
        } else {
            cl(random_prop(rng, shape))
        };
    }
    match rng.below(8) {
        0 => attr_is(rng.pick(&shape.attrs)),
        1 => cl(random_pos(rng, shape, depth)),
        2 => cnot(random_cls(rng, shape, depth - 1)),
        3 => cor(
            random_cls(rng, shape, depth - 1),
            random_cls(rng, shape, depth - 1),
        ),
        4 => cand(
            random_cls(rng, shape, depth - 1),
            random_cls(rng, shape, depth - 1),
        ),
        5 => xeq(random_cls(rng, shape, depth - 1)),
        6 => yeq(random_cls(rng, shape, depth - 1)),
        _ => {
            let lhs = random_cls(rng, shape, depth - 1);
            let rhs = random_cls(rng, shape, depth - 1);
            if rng.chance(1, 2) {
                Cls::UntilEq(Box::new(lhs), Box::new(rhs))
            } else {
                Cls::SinceEq(Box::new(lhs), Box::new(rhs))
            }
        }
    }
}

/// Draws restricted-shape operands for an inequality until/since over
/// attribute `attr`: the intermediate is plain | (@attr & eq) | (!=@attr &
/// neq) and the target is !=@attr & tail. The equality part is built as
/// (extra | neq), so the implication side condition holds by construction.
pub fn random_restricted_parts(
    rng: &mut SplitMix64,
    shape: &FormulaShape,
    depth: u32,
    attr: &str,
) -> (Usub, Usub) {
    use build::*;
    let plain = random_pos(rng, shape, depth.min(1));
    let extra = random_pos(rng, shape, depth.min(1));
    let neq_part = random_pos(rng, shape, depth.min(1));
    let eq_part = or(extra, neq_part.clone());
    let rho = uor(
        ul(plain),
        uor(
            uand(ueq_attr(attr), ul(eq_part)),
            uand(uneq_attr(attr), ul(neq_part)),
        ),
    );
    let tau = uand(uneq_attr(attr), ul(random_pos(rng, shape, depth.min(1))));
    (rho, tau)
}

/// Draws an inequality until/since in the restricted shape, side condition
/// met by construction.
pub fn random_restricted_uneq(rng: &mut SplitMix64, shape: &FormulaShape, depth: u32) -> Pos {
    use build::*;
    let a = rng.pick(&shape.attrs).clone();
    let (rho, tau) = random_restricted_parts(rng, shape, depth, &a);
    let shift = rng.below(3);
    if rng.chance(1, 2) {
        uneq_until(&a, shift, rho, tau)
    } else {
        uneq_since(&a, shift, rho, tau)
    }
}

/// Draws a random CLTL-style word (complete in all attributes), convenience
/// wrapper used by the embedding tests.
pub fn random_complete_word(
    rng: &mut SplitMix64,
    props: &[&str],
    attrs: &[&str],
    len: usize,
    max_values: u64,
) -> AttributedWord {
    let shape = WordShape {
        props: props.iter().map(|s| s.to_string()).collect(),
        attrs: attrs.iter().map(|s| s.to_string()).collect(),
        len,
        max_values,
        complete: true,
    };
    random_word(rng, &shape)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn splitmix_known_stream() {
        let mut r = SplitMix64::new(1234567);
        let first: Vec<u64> = (0..3).map(|_| r.next_u64()).collect();
        let mut r2 = SplitMix64::new(1234567);
        let again: Vec<u64> = (0..3).map(|_| r2.next_u64()).collect();
        assert_eq!(first, again);
        assert_ne!(first[0], first[1]);
    }

    #[test]
    fn enumeration_counts_props_only() {
        let mut count = 0usize;
        enumerate_words(&["p"], &[], 2, 1, true, &mut |_| {
            count += 1;
            true
        });
        assert_eq!(count, 4);
    }

    #[test]
    fn enumeration_counts_one_attr_complete() {
        // Canonical value sequences of length 3 with at most 2 distinct
        // values: 000 001 010 011 (values must appear in first-use order).
        let mut seqs = HashSet::new();
        enumerate_words(&[], &["a"], 3, 2, true, &mut |w| {
            let vals: Vec<u32> = (1..=3).map(|i| w.value("a", i).unwrap().0).collect();
            seqs.insert(vals);
            true
        });
        assert_eq!(seqs.len(), 4);
    }

    #[test]
    fn enumeration_partial_attr_includes_absent() {
        let mut with_absent = 0usize;
        let mut total = 0usize;
        enumerate_words(&[], &["a"], 2, 1, false, &mut |w| {
            total += 1;
            if w.value("a", 1).is_none() || w.value("a", 2).is_none() {
                with_absent += 1;
            }
            true
        });
        // presence patterns: --, -v, v-, vv with a single canonical value
        assert_eq!(total, 4);
        assert_eq!(with_absent, 3);
    }

    #[test]
    fn enumeration_early_stop() {
        let mut count = 0usize;
        let finished = enumerate_words(&["p", "q"], &[], 3, 1, true, &mut |_| {
            count += 1;
            count < 5
        });
        assert!(!finished);
        assert_eq!(count, 5);
    }

    #[test]
    fn random_word_respects_shape() {
        let mut rng = SplitMix64::new(42);
        let shape = WordShape {
            props: vec!["p".into(), "q".into()],
            attrs: vec!["a".into(), "b".into()],
            len: 12,
            max_values: 3,
            complete: true,
        };
        let w = random_word(&mut rng, &shape);
        assert_eq!(w.len(), 12);
        assert!(w.is_complete(&["a", "b"]));
        assert!(w.occurring_values().len() <= 6);
    }

    #[test]
    fn random_formula_is_deterministic() {
        let shape = FormulaShape {
            props: vec!["p".into(), "q".into()],
            attrs: vec!["a".into()],
            max_depth: 4,
            allow_class: true,
            allow_extended: true,
            max_shift: 2,
        };
        let f1 = random_formula(&mut SplitMix64::new(7), &shape);
        let f2 = random_formula(&mut SplitMix64::new(7), &shape);
        assert_eq!(f1, f2);
    }
}
