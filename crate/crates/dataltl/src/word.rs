//! Attributed words: positions with proposition sets and partial
//! attribute-to-value maps, class views, and projections.
//!
//! Positions are 1-based in the public API. Data values are opaque tokens
//! compared only for equality; attribute absence models the nil value, so no
//! token can collide with nil.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

/// Maximum number of propositions in a word alphabet (bitset storage).
pub const MAX_PROPS: usize = 64;

/// Opaque data value token. Equality is the only meaningful relation.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct DataValue(pub u32);

/// External form of a data value: a nonnegative integer or a string.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawValue {
    /// Integer-shaped value.
    Int(u64),
    /// String-shaped value.
    Str(String),
}

impl fmt::Display for RawValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RawValue::Int(n) => write!(f, "{n}"),
            RawValue::Str(s) => write!(f, "{s}"),
        }
    }
}

/// Errors from word construction and ingestion.
#[derive(Debug, Error)]
pub enum WordError {
    /// A position used a proposition outside the declared alphabet.
    #[error("proposition {0:?} is not in the declared alphabet")]
    UnknownProp(String),
    /// A position used an attribute outside the declared alphabet.
    #[error("attribute {0:?} is not in the declared alphabet")]
    UnknownAttr(String),
    /// An alphabet lists the same name twice.
    #[error("duplicate alphabet entry {0:?}")]
    DuplicateAlphabetEntry(String),
    /// The proposition alphabet exceeds the bitset capacity.
    #[error("proposition alphabet has {0} entries, the maximum is {MAX_PROPS}")]
    PropAlphabetTooLarge(usize),
    /// Malformed JSON input.
    #[error("malformed word JSON: {0}")]
    Json(String),
    /// A 1-based position index outside 1..=len.
    #[error("position {index} out of range 1..={len}")]
    PositionOutOfRange {
        /// Requested 1-based index.
        index: usize,
        /// Word length.
        len: usize,
    },
}

/// One position: a proposition set (bitset over the word's alphabet) and a
/// partial attribute-to-value map (sorted by attribute index).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Position {
    props: u64,
    attrs: Vec<(u32, DataValue)>,
}

impl Position {
    /// Value of the attribute with the given index, if present.
    pub fn value_at(&self, attr_idx: u32) -> Option<DataValue> {
        self.attrs
            .binary_search_by_key(&attr_idx, |&(a, _)| a)
            .ok()
            .map(|k| self.attrs[k].1)
    }

    /// Whether the proposition with the given index holds here.
    pub fn has_prop(&self, prop_idx: u32) -> bool {
        self.props & (1u64 << prop_idx) != 0
    }

    /// Attribute indices present at this position, ascending.
    pub fn attr_indices(&self) -> impl Iterator<Item = u32> + '_ {
        self.attrs.iter().map(|&(a, _)| a)
    }

    /// Attribute-value pairs at this position, ascending by attribute index.
    pub fn attr_entries(&self) -> impl Iterator<Item = (u32, DataValue)> + '_ {
        self.attrs.iter().copied()
    }

    /// Raw proposition bitset.
    pub fn prop_bits(&self) -> u64 {
        self.props
    }
}

/// A finite attributed word with declared proposition and attribute
/// alphabets. Immutable after construction apart from `push`.
#[derive(Clone, PartialEq, Debug)]
pub struct AttributedWord {
    props_alphabet: Vec<String>,
    attrs_alphabet: Vec<String>,
    positions: Vec<Position>,
    values: Vec<RawValue>,
}

fn check_alphabet(names: &[&str]) -> Result<Vec<String>, WordError> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(*n) {
            return Err(WordError::DuplicateAlphabetEntry((*n).to_string()));
        }
    }
    Ok(names.iter().map(|s| s.to_string()).collect())
}

impl AttributedWord {
    /// Creates an empty word over the given alphabets.
    pub fn new(props: &[&str], attrs: &[&str]) -> Result<Self, WordError> {
        if props.len() > MAX_PROPS {
            return Err(WordError::PropAlphabetTooLarge(props.len()));
        }
        Ok(AttributedWord {
            props_alphabet: check_alphabet(props)?,
            attrs_alphabet: check_alphabet(attrs)?,
            positions: Vec::new(),
            values: Vec::new(),
        })
    }

    /// Appends a position. Propositions and attributes must belong to the
    /// declared alphabets; integer values are interned by equality.
    pub fn push(&mut self, props: &[&str], attrs: &[(&str, u64)]) -> Result<(), WordError> {
        let raw: Vec<(&str, RawValue)> = attrs
            .iter()
            .map(|&(a, v)| (a, RawValue::Int(v)))
            .collect();
        self.push_raw(props, &raw)
    }

    /// Appends a position with raw (integer or string) values.
    pub fn push_raw(&mut self, props: &[&str], attrs: &[(&str, RawValue)]) -> Result<(), WordError> {
        let mut bits = 0u64;
        for p in props {
            let idx = self
                .prop_index(p)
                .ok_or_else(|| WordError::UnknownProp(p.to_string()))?;
            bits |= 1u64 << idx;
        }
        let mut entries = Vec::with_capacity(attrs.len());
        for (a, v) in attrs {
            let idx = self
                .attr_index(a)
                .ok_or_else(|| WordError::UnknownAttr(a.to_string()))?;
            entries.push((idx, self.intern(v.clone())));
        }
        entries.sort_by_key(|&(a, _)| a);
        self.positions.push(Position {
            props: bits,
            attrs: entries,
        });
        Ok(())
    }

    fn intern(&mut self, v: RawValue) -> DataValue {
        if let Some(k) = self.values.iter().position(|u| *u == v) {
            DataValue(k as u32)
        } else {
            self.values.push(v);
            DataValue((self.values.len() - 1) as u32)
        }
    }

    /// Word length.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    /// Whether the word is empty.
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Declared proposition alphabet.
    pub fn props_alphabet(&self) -> &[String] {
        &self.props_alphabet
    }

    /// Declared attribute alphabet.
    pub fn attrs_alphabet(&self) -> &[String] {
        &self.attrs_alphabet
    }

    /// Index of a proposition name in the alphabet.
    pub fn prop_index(&self, name: &str) -> Option<u32> {
        self.props_alphabet.iter().position(|p| p == name).map(|k| k as u32)
    }

    /// Index of an attribute name in the alphabet.
    pub fn attr_index(&self, name: &str) -> Option<u32> {
        self.attrs_alphabet.iter().position(|a| a == name).map(|k| k as u32)
    }

    /// The position record at 1-based index i.
    pub fn position(&self, i: usize) -> Result<&Position, WordError> {
        if i == 0 || i > self.positions.len() {
            return Err(WordError::PositionOutOfRange {
                index: i,
                len: self.positions.len(),
            });
        }
        Ok(&self.positions[i - 1])
    }

    /// Value of attribute `a` at 1-based position i; `None` models nil.
    /// Out-of-range positions and unknown attributes also yield `None`.
    pub fn value(&self, a: &str, i: usize) -> Option<DataValue> {
        let idx = self.attr_index(a)?;
        self.value_idx(idx, i)
    }

    /// Like `value` with a pre-resolved attribute index.
    pub fn value_idx(&self, attr_idx: u32, i: usize) -> Option<DataValue> {
        if i == 0 || i > self.positions.len() {
            return None;
        }
        self.positions[i - 1].value_at(attr_idx)
    }

    /// Whether proposition `p` holds at 1-based position i (false when the
    /// name is outside the alphabet).
    pub fn has_prop(&self, p: &str, i: usize) -> bool {
        match self.prop_index(p) {
            Some(idx) => self.has_prop_idx(idx, i),
            None => false,
        }
    }

    /// Like `has_prop` with a pre-resolved proposition index.
    pub fn has_prop_idx(&self, prop_idx: u32, i: usize) -> bool {
        i >= 1 && i <= self.positions.len() && self.positions[i - 1].has_prop(prop_idx)
    }

    /// External form of a data value token.
    pub fn raw_value(&self, d: DataValue) -> &RawValue {
        &self.values[d.0 as usize]
    }

    /// All distinct values occurring in the word, in token order.
    pub fn occurring_values(&self) -> Vec<DataValue> {
        let mut seen = vec![false; self.values.len()];
        for pos in &self.positions {
            for &(_, d) in &pos.attrs {
                seen[d.0 as usize] = true;
            }
        }
        (0..self.values.len() as u32)
            .map(DataValue)
            .filter(|d| seen[d.0 as usize])
            .collect()
    }

    /// Positions of w where some attribute carries value d, ascending.
    pub fn class_positions(&self, d: DataValue) -> ClassView<'_> {
        let positions = (1..=self.len())
            .filter(|&i| self.positions[i - 1].attrs.iter().any(|&(_, v)| v == d))
            .collect();
        ClassView {
            word: self,
            value: d,
            positions,
        }
    }

    /// The sequence of proposition sets, one per position.
    pub fn string_projection(&self) -> Vec<BTreeSet<String>> {
        self.positions
            .iter()
            .map(|pos| {
                self.props_alphabet
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| pos.props & (1u64 << k) != 0)
                    .map(|(_, p)| p.clone())
                    .collect()
            })
            .collect()
    }

    /// True iff every position carries exactly the attributes in `attrs`.
    pub fn is_complete(&self, attrs: &[&str]) -> bool {
        let mut want: Vec<u32> = attrs.iter().filter_map(|a| self.attr_index(a)).collect();
        if want.len() != attrs.len() {
            // An attribute outside the alphabet occurs nowhere, so only the
            // empty word is complete with respect to it.
            return self.is_empty();
        }
        want.sort_unstable();
        self.positions
            .iter()
            .all(|pos| pos.attrs.iter().map(|&(a, _)| a).eq(want.iter().copied()))
    }

    /// Renames data values to 0,1,2,... in order of first occurrence,
    /// scanning positions left to right and attributes in declared-alphabet
    /// order. The output is value-isomorphic to the input.
    pub fn canonicalize_values(&self) -> AttributedWord {
        let mut map: Vec<Option<u32>> = vec![None; self.values.len()];
        let mut next = 0u32;
        for pos in &self.positions {
            // attrs are sorted by attribute index, which is alphabet order
            for &(_, d) in &pos.attrs {
                if map[d.0 as usize].is_none() {
                    map[d.0 as usize] = Some(next);
                    next += 1;
                }
            }
        }
        let positions = self
            .positions
            .iter()
            .map(|pos| Position {
                props: pos.props,
                attrs: pos
                    .attrs
                    .iter()
                    .map(|&(a, d)| (a, DataValue(map[d.0 as usize].unwrap())))
                    .collect(),
            })
            .collect();
        AttributedWord {
            props_alphabet: self.props_alphabet.clone(),
            attrs_alphabet: self.attrs_alphabet.clone(),
            positions,
            values: (0..next as u64).map(RawValue::Int).collect(),
        }
    }

    /// The suffix word starting at 1-based position i (inclusive).
    pub fn suffix(&self, i: usize) -> AttributedWord {
        AttributedWord {
            props_alphabet: self.props_alphabet.clone(),
            attrs_alphabet: self.attrs_alphabet.clone(),
            positions: self.positions[i - 1..].to_vec(),
            values: self.values.clone(),
        }
    }

    /// The prefix word ending at 1-based position i (inclusive).
    pub fn prefix(&self, i: usize) -> AttributedWord {
        AttributedWord {
            props_alphabet: self.props_alphabet.clone(),
            attrs_alphabet: self.attrs_alphabet.clone(),
            positions: self.positions[..i].to_vec(),
            values: self.values.clone(),
        }
    }

    /// Parses the JSON word format.
    pub fn parse_json(text: &str) -> Result<Self, WordError> {
        let ext: ExternalWord =
            serde_json::from_str(text).map_err(|e| WordError::Json(e.to_string()))?;
        ext.into_word()
    }

    /// Serializes to the JSON word format.
    pub fn to_json(&self) -> String {
        let ext = ExternalWord {
            props_alphabet: self.props_alphabet.clone(),
            attrs_alphabet: self.attrs_alphabet.clone(),
            positions: self
                .positions
                .iter()
                .map(|pos| ExternalPosition {
                    props: self
                        .props_alphabet
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| pos.props & (1u64 << k) != 0)
                        .map(|(_, p)| p.clone())
                        .collect(),
                    attrs: pos
                        .attrs
                        .iter()
                        .map(|&(a, d)| {
                            (
                                self.attrs_alphabet[a as usize].clone(),
                                self.values[d.0 as usize].clone(),
                            )
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&ext).expect("word serialization cannot fail")
    }
}

/// JSON transport form of a position.
#[derive(Serialize, Deserialize)]
struct ExternalPosition {
    #[serde(default)]
    props: Vec<String>,
    #[serde(default)]
    attrs: std::collections::BTreeMap<String, RawValue>,
}

/// JSON transport form of a word.
#[derive(Serialize, Deserialize)]
struct ExternalWord {
    props_alphabet: Vec<String>,
    attrs_alphabet: Vec<String>,
    positions: Vec<ExternalPosition>,
}

impl ExternalWord {
    fn into_word(self) -> Result<AttributedWord, WordError> {
        let props: Vec<&str> = self.props_alphabet.iter().map(|s| s.as_str()).collect();
        let attrs: Vec<&str> = self.attrs_alphabet.iter().map(|s| s.as_str()).collect();
        let mut w = AttributedWord::new(&props, &attrs)?;
        for pos in &self.positions {
            let props: Vec<&str> = pos.props.iter().map(|s| s.as_str()).collect();
            let attrs: Vec<(&str, RawValue)> = pos
                .attrs
                .iter()
                .map(|(a, v)| (a.as_str(), v.clone()))
                .collect();
            w.push_raw(&props, &attrs)?;
        }
        Ok(w)
    }
}

/// The class of a data value: all positions where it occurs.
#[derive(Clone, Debug)]
pub struct ClassView<'w> {
    /// The word this class belongs to.
    pub word: &'w AttributedWord,
    /// The class value.
    pub value: DataValue,
    /// Strictly increasing 1-based positions carrying the value.
    pub positions: Vec<usize>,
}

impl ClassView<'_> {
    /// Smallest class position strictly greater than i.
    pub fn next_after(&self, i: usize) -> Option<usize> {
        self.positions.iter().copied().find(|&j| j > i)
    }

    /// Largest class position strictly smaller than i.
    pub fn prev_before(&self, i: usize) -> Option<usize> {
        self.positions.iter().copied().rev().find(|&j| j < i)
    }
}
