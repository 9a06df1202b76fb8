//! Boolean vectors and square Boolean matrices indexed by named element universes.
//!
//! Every operand carries the ordered list of element ids its rows and columns
//! refer to. Binary operations demand identical universes; differently sized
//! operands have to be aligned first with [`complete`] (or [`BoolMatrix::extend_to`]).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identity of a node. Ids are unique within one universe and survive completion.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElemId(Arc<str>);

impl ElemId {
    pub fn new(id: impl AsRef<str>) -> Self {
        ElemId(Arc::from(id.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for ElemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ElemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ElemId {
    fn from(s: &str) -> Self {
        ElemId::new(s)
    }
}

impl From<String> for ElemId {
    fn from(s: String) -> Self {
        ElemId::new(s)
    }
}

/// Ordered, duplicate-free list of element ids.
#[derive(Clone)]
pub struct Universe {
    ids: Arc<Vec<ElemId>>,
    index: Arc<HashMap<ElemId, usize>>,
}

impl Universe {
    pub fn new(ids: Vec<ElemId>) -> Result<Self> {
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateElement(id.clone()));
            }
        }
        Ok(Universe {
            ids: Arc::new(ids),
            index: Arc::new(index),
        })
    }

    pub fn empty() -> Self {
        Universe::new(Vec::new()).expect("empty universe")
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[ElemId] {
        &self.ids
    }

    pub fn index_of(&self, id: &ElemId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &ElemId) -> bool {
        self.index.contains_key(id)
    }

    /// Universe with the ids of `other` that are missing here appended in order.
    pub fn union(&self, other: &Universe) -> Universe {
        if self == other {
            return self.clone();
        }
        let mut ids: Vec<ElemId> = self.ids.to_vec();
        ids.extend(other.ids().iter().filter(|id| !self.contains(id)).cloned());
        Universe::new(ids).expect("union keeps ids unique")
    }

    pub fn is_subset_of(&self, other: &Universe) -> bool {
        self.ids.iter().all(|id| other.contains(id))
    }
}

impl PartialEq for Universe {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.ids, &other.ids) || self.ids == other.ids
    }
}

impl Eq for Universe {}

impl fmt::Debug for Universe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.ids.iter()).finish()
    }
}

/// One bit per element of the universe.
#[derive(Clone, PartialEq, Eq)]
pub struct BoolVector {
    universe: Universe,
    bits: Vec<bool>,
}

impl BoolVector {
    pub fn zeros(universe: &Universe) -> Self {
        BoolVector {
            universe: universe.clone(),
            bits: vec![false; universe.len()],
        }
    }

    pub fn ones(universe: &Universe) -> Self {
        BoolVector {
            universe: universe.clone(),
            bits: vec![true; universe.len()],
        }
    }

    pub fn from_bits(universe: &Universe, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != universe.len() {
            return Err(Error::UniverseMismatch);
        }
        Ok(BoolVector {
            universe: universe.clone(),
            bits,
        })
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn get_id(&self, id: &ElemId) -> bool {
        self.universe.index_of(id).is_some_and(|i| self.bits[i])
    }

    pub fn set_id(&mut self, id: &ElemId, value: bool) -> Result<()> {
        let i = self
            .universe
            .index_of(id)
            .ok_or_else(|| Error::UnknownElement(id.clone()))?;
        self.bits[i] = value;
        Ok(())
    }

    /// Ids whose bit is set, in universe order.
    pub fn support(&self) -> Vec<ElemId> {
        self.universe
            .ids()
            .iter()
            .zip(&self.bits)
            .filter(|(_, b)| **b)
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// Or of all components; false on the empty universe.
    pub fn norm1(&self) -> bool {
        self.bits.iter().any(|b| *b)
    }

    pub fn not(&self) -> BoolVector {
        BoolVector {
            universe: self.universe.clone(),
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn and(&self, other: &BoolVector) -> Result<BoolVector> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &BoolVector) -> Result<BoolVector> {
        self.zip_with(other, |a, b| a || b)
    }

    fn zip_with(&self, other: &BoolVector, f: impl Fn(bool, bool) -> bool) -> Result<BoolVector> {
        if self.universe != other.universe {
            return Err(Error::UniverseMismatch);
        }
        Ok(BoolVector {
            universe: self.universe.clone(),
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn is_zero(&self) -> bool {
        !self.norm1()
    }

    /// Re-index onto a larger universe, padding new positions with zeros.
    pub fn extend_to(&self, universe: &Universe) -> Result<BoolVector> {
        if &self.universe == universe {
            return Ok(self.clone());
        }
        let mut out = BoolVector::zeros(universe);
        for (i, id) in self.universe.ids().iter().enumerate() {
            let j = universe
                .index_of(id)
                .ok_or_else(|| Error::UnknownElement(id.clone()))?;
            out.bits[j] = self.bits[i];
        }
        Ok(out)
    }

    /// Restrict to a smaller universe; bits outside it are dropped.
    pub fn restrict_to(&self, universe: &Universe) -> BoolVector {
        let mut out = BoolVector::zeros(universe);
        for (j, id) in universe.ids().iter().enumerate() {
            out.bits[j] = self.get_id(id);
        }
        out
    }

    /// Tensor (Kronecker) product of two vectors: `m[i][j] = a[i] & b[j]`.
    pub fn tensor(&self, other: &BoolVector) -> Result<BoolMatrix> {
        if self.universe != other.universe {
            return Err(Error::UniverseMismatch);
        }
        let n = self.universe.len();
        let mut m = BoolMatrix::zeros(&self.universe);
        for i in 0..n {
            for j in 0..n {
                m.bits[i * n + j] = self.bits[i] && other.bits[j];
            }
        }
        Ok(m)
    }
}

impl fmt::Debug for BoolVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self
            .bits
            .iter()
            .map(|b| if *b { '1' } else { '0' })
            .collect();
        write!(f, "{s} {:?}", self.universe)
    }
}

/// Square Boolean matrix; rows and columns share one universe.
#[derive(Clone, PartialEq, Eq)]
pub struct BoolMatrix {
    universe: Universe,
    bits: Vec<bool>,
}

impl BoolMatrix {
    pub fn zeros(universe: &Universe) -> Self {
        BoolMatrix {
            universe: universe.clone(),
            bits: vec![false; universe.len() * universe.len()],
        }
    }

    pub fn ones(universe: &Universe) -> Self {
        BoolMatrix {
            universe: universe.clone(),
            bits: vec![true; universe.len() * universe.len()],
        }
    }

    pub fn identity(universe: &Universe) -> Self {
        let mut m = BoolMatrix::zeros(universe);
        for i in 0..universe.len() {
            m.set(i, i, true);
        }
        m
    }

    /// Build from rows given as `0`/`1` strings (whitespace ignored).
    pub fn from_rows(universe: &Universe, rows: &[&str]) -> Result<Self> {
        let n = universe.len();
        if rows.len() != n {
            return Err(Error::UniverseMismatch);
        }
        let mut m = BoolMatrix::zeros(universe);
        for (i, row) in rows.iter().enumerate() {
            let cells: Vec<bool> = row
                .chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| c == '1')
                .collect();
            if cells.len() != n {
                return Err(Error::UniverseMismatch);
            }
            for (j, b) in cells.into_iter().enumerate() {
                m.set(i, j, b);
            }
        }
        Ok(m)
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn dim(&self) -> usize {
        self.universe.len()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.dim() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        let n = self.dim();
        self.bits[i * n + j] = value;
    }

    pub fn get_ids(&self, from: &ElemId, to: &ElemId) -> bool {
        match (self.universe.index_of(from), self.universe.index_of(to)) {
            (Some(i), Some(j)) => self.get(i, j),
            _ => false,
        }
    }

    pub fn set_ids(&mut self, from: &ElemId, to: &ElemId, value: bool) -> Result<()> {
        let i = self
            .universe
            .index_of(from)
            .ok_or_else(|| Error::UnknownElement(from.clone()))?;
        let j = self
            .universe
            .index_of(to)
            .ok_or_else(|| Error::UnknownElement(to.clone()))?;
        self.set(i, j, value);
        Ok(())
    }

    /// Set entries as `(row id, column id)` pairs, row-major order.
    pub fn entries(&self) -> Vec<(ElemId, ElemId)> {
        let ids = self.universe.ids();
        let n = ids.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if self.bits[i * n + j] {
                    out.push((ids[i].clone(), ids[j].clone()));
                }
            }
        }
        out
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|b| !b)
    }

    pub fn not(&self) -> BoolMatrix {
        BoolMatrix {
            universe: self.universe.clone(),
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn and(&self, other: &BoolMatrix) -> Result<BoolMatrix> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &BoolMatrix) -> Result<BoolMatrix> {
        self.zip_with(other, |a, b| a || b)
    }

    /// `self & !other`
    pub fn minus(&self, other: &BoolMatrix) -> Result<BoolMatrix> {
        self.zip_with(other, |a, b| a && !b)
    }

    fn zip_with(&self, other: &BoolMatrix, f: impl Fn(bool, bool) -> bool) -> Result<BoolMatrix> {
        if self.universe != other.universe {
            return Err(Error::UniverseMismatch);
        }
        Ok(BoolMatrix {
            universe: self.universe.clone(),
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn transpose(&self) -> BoolMatrix {
        let n = self.dim();
        let mut out = BoolMatrix::zeros(&self.universe);
        for i in 0..n {
            for j in 0..n {
                out.bits[j * n + i] = self.bits[i * n + j];
            }
        }
        out
    }

    /// Boolean matrix-vector product: `c[i] = OR_j (a[i][j] & v[j])`.
    pub fn bool_product(&self, v: &BoolVector) -> Result<BoolVector> {
        if self.universe != v.universe {
            return Err(Error::UniverseMismatch);
        }
        let n = self.dim();
        let bits = (0..n)
            .map(|i| (0..n).any(|j| self.bits[i * n + j] && v.bits[j]))
            .collect();
        Ok(BoolVector {
            universe: self.universe.clone(),
            bits,
        })
    }

    pub fn is_subset_of(&self, other: &BoolMatrix) -> Result<bool> {
        Ok(self.minus(other)?.is_zero())
    }

    /// Re-index onto a larger universe, padding with zero rows and columns.
    pub fn extend_to(&self, universe: &Universe) -> Result<BoolMatrix> {
        if &self.universe == universe {
            return Ok(self.clone());
        }
        let map: Vec<usize> = self
            .universe
            .ids()
            .iter()
            .map(|id| {
                universe
                    .index_of(id)
                    .ok_or_else(|| Error::UnknownElement(id.clone()))
            })
            .collect::<Result<_>>()?;
        let n = self.dim();
        let mut out = BoolMatrix::zeros(universe);
        for i in 0..n {
            for j in 0..n {
                if self.bits[i * n + j] {
                    out.set(map[i], map[j], true);
                }
            }
        }
        Ok(out)
    }

    /// Restrict to a smaller universe; entries touching dropped ids are lost.
    pub fn restrict_to(&self, universe: &Universe) -> BoolMatrix {
        let mut out = BoolMatrix::zeros(universe);
        let ids = universe.ids();
        for (i, a) in ids.iter().enumerate() {
            for (j, b) in ids.iter().enumerate() {
                if self.get_ids(a, b) {
                    out.set(i, j, true);
                }
            }
        }
        out
    }

    /// Rename ids through `map` (ids missing from the map are kept).
    pub fn rename(&self, map: &BTreeMap<ElemId, ElemId>) -> Result<BoolMatrix> {
        let universe = rename_universe(&self.universe, map)?;
        Ok(BoolMatrix {
            universe,
            bits: self.bits.clone(),
        })
    }
}

impl BoolVector {
    pub fn rename(&self, map: &BTreeMap<ElemId, ElemId>) -> Result<BoolVector> {
        let universe = rename_universe(&self.universe, map)?;
        Ok(BoolVector {
            universe,
            bits: self.bits.clone(),
        })
    }
}

fn rename_universe(universe: &Universe, map: &BTreeMap<ElemId, ElemId>) -> Result<Universe> {
    let mut seen: HashMap<ElemId, ElemId> = HashMap::new();
    let mut ids = Vec::with_capacity(universe.len());
    for id in universe.ids() {
        let target = map.get(id).cloned().unwrap_or_else(|| id.clone());
        if let Some(first) = seen.insert(target.clone(), id.clone()) {
            return Err(Error::NonInjectiveIdentification {
                first,
                second: id.clone(),
                target,
            });
        }
        ids.push(target);
    }
    Universe::new(ids)
}

impl fmt::Debug for BoolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.dim();
        for (i, id) in self.universe.ids().iter().enumerate() {
            let row: String = (0..n)
                .map(|j| if self.get(i, j) { '1' } else { '0' })
                .collect();
            writeln!(f, "{row} | {id}")?;
        }
        Ok(())
    }
}

/// An operand of [`complete`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Matrix(BoolMatrix),
    Vector(BoolVector),
}

impl Operand {
    fn universe(&self) -> &Universe {
        match self {
            Operand::Matrix(m) => m.universe(),
            Operand::Vector(v) => v.universe(),
        }
    }
}

/// Align operands onto one universe.
///
/// `identification[k]` renames the elements of operand `k` (missing entries
/// keep their id). Elements that end up with the same id are merged; the
/// resulting universe lists ids in order of first appearance, and positions
/// an operand did not have are zero.
pub fn complete(
    operands: &[Operand],
    identification: &[BTreeMap<ElemId, ElemId>],
) -> Result<Vec<Operand>> {
    let empty = BTreeMap::new();
    let renamed: Vec<Operand> = operands
        .iter()
        .enumerate()
        .map(|(k, op)| {
            let map = identification.get(k).unwrap_or(&empty);
            Ok(match op {
                Operand::Matrix(m) => Operand::Matrix(m.rename(map)?),
                Operand::Vector(v) => Operand::Vector(v.rename(map)?),
            })
        })
        .collect::<Result<_>>()?;
    let mut universe = Universe::empty();
    for op in &renamed {
        universe = universe.union(op.universe());
    }
    renamed
        .into_iter()
        .map(|op| {
            Ok(match op {
                Operand::Matrix(m) => Operand::Matrix(m.extend_to(&universe)?),
                Operand::Vector(v) => Operand::Vector(v.extend_to(&universe)?),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uni(ids: &[&str]) -> Universe {
        Universe::new(ids.iter().map(|s| ElemId::new(s)).collect()).unwrap()
    }

    #[test]
    fn complement_identity_involution() {
        let u = uni(&["a", "b", "c"]);
        let x = BoolMatrix::from_rows(&u, &["010", "001", "100"]).unwrap();
        assert!(x.and(&x.not()).unwrap().is_zero());
        assert_eq!(x.or(&BoolMatrix::zeros(&u)).unwrap(), x);
        assert_eq!(x.transpose().transpose(), x);
    }

    #[test]
    fn bool_product_examples() {
        let u = uni(&["1", "2"]);
        let v = BoolVector::from_bits(&u, vec![false, true]).unwrap();
        assert_eq!(BoolMatrix::identity(&u).bool_product(&v).unwrap(), v);
        assert!(BoolMatrix::zeros(&u).bool_product(&v).unwrap().is_zero());
        let a = BoolMatrix::from_rows(&u, &["01", "00"]).unwrap();
        assert_eq!(a.bool_product(&v).unwrap().bits(), &[true, false]);
    }

    #[test]
    fn tensor_examples() {
        let u = uni(&["1", "2"]);
        let ones = BoolVector::ones(&u);
        assert_eq!(ones.tensor(&ones).unwrap(), BoolMatrix::ones(&u));
        assert!(BoolVector::zeros(&u).tensor(&ones).unwrap().is_zero());
        let a = BoolVector::from_bits(&u, vec![true, false]).unwrap();
        let m = a.tensor(&ones).unwrap();
        assert_eq!(m, BoolMatrix::from_rows(&u, &["11", "00"]).unwrap());
    }

    #[test]
    fn norm_examples() {
        assert!(!BoolVector::zeros(&uni(&["a", "b"])).norm1());
        let u = uni(&["a", "b", "c"]);
        assert!(BoolVector::from_bits(&u, vec![false, true, false])
            .unwrap()
            .norm1());
        assert!(!BoolVector::zeros(&Universe::empty()).norm1());
    }

    #[test]
    fn mismatch_is_an_error() {
        let a = BoolMatrix::zeros(&uni(&["a"]));
        let b = BoolMatrix::zeros(&uni(&["b"]));
        assert_eq!(a.and(&b), Err(Error::UniverseMismatch));
    }

    #[test]
    fn completion_of_disjoint_single_nodes() {
        let a = BoolMatrix::from_rows(&uni(&["x"]), &["1"]).unwrap();
        let b = BoolMatrix::from_rows(&uni(&["y"]), &["1"]).unwrap();
        let out = complete(&[Operand::Matrix(a), Operand::Matrix(b)], &[]).unwrap();
        let Operand::Matrix(a2) = &out[0] else {
            panic!()
        };
        let Operand::Matrix(b2) = &out[1] else {
            panic!()
        };
        assert_eq!(a2.universe(), &uni(&["x", "y"]));
        assert_eq!(
            a2,
            &BoolMatrix::from_rows(&uni(&["x", "y"]), &["10", "00"]).unwrap()
        );
        assert_eq!(
            b2,
            &BoolMatrix::from_rows(&uni(&["x", "y"]), &["00", "01"]).unwrap()
        );
    }

    #[test]
    fn completion_with_identification_merges() {
        let a = BoolMatrix::from_rows(&uni(&["1", "2"]), &["01", "00"]).unwrap();
        let b = BoolMatrix::from_rows(&uni(&["u"]), &["1"]).unwrap();
        let ident = vec![
            BTreeMap::new(),
            BTreeMap::from([(ElemId::new("u"), ElemId::new("2"))]),
        ];
        let out = complete(&[Operand::Matrix(a), Operand::Matrix(b)], &ident).unwrap();
        let Operand::Matrix(b2) = &out[1] else {
            panic!()
        };
        assert_eq!(
            b2,
            &BoolMatrix::from_rows(&uni(&["1", "2"]), &["00", "01"]).unwrap()
        );
    }

    #[test]
    fn completion_rejects_non_injective_identification() {
        let a = BoolVector::ones(&uni(&["1", "2"]));
        let ident = vec![BTreeMap::from([
            (ElemId::new("1"), ElemId::new("z")),
            (ElemId::new("2"), ElemId::new("z")),
        ])];
        assert!(matches!(
            complete(&[Operand::Vector(a)], &ident),
            Err(Error::NonInjectiveIdentification { .. })
        ));
    }

    #[test]
    fn completion_against_itself_is_identity() {
        let u = uni(&["a", "b"]);
        let x = BoolMatrix::from_rows(&u, &["01", "10"]).unwrap();
        let out = complete(
            &[Operand::Matrix(x.clone()), Operand::Matrix(x.clone())],
            &[],
        )
        .unwrap();
        assert_eq!(out[0], Operand::Matrix(x));
    }
}
