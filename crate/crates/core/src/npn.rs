//! NPN equivalence: input negation, input permutation and output negation.
//!
//! The canonical representative of a class is the numerically smallest truth
//! table in its orbit, found by scanning all `2 * 2^n * n!` transforms. At
//! `n = 4` there are 768 transforms and 222 classes.

use std::sync::OnceLock;

use thiserror::Error;

use crate::truthtable::{row_mask, TruthTable, TruthTableError, MAX_VARS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NpnError {
    #[error("transform has {transform} inputs but table has {table}")]
    ArityMismatch { transform: usize, table: usize },
    #[error("not a permutation of 0..{0}")]
    BadPermutation(usize),
    #[error("class enumeration is limited to n <= 4, got {0}")]
    TooManyVariables(usize),
    #[error(transparent)]
    Table(#[from] TruthTableError),
}

/// An element of the NPN group acting on `n`-input functions.
///
/// Input `i` of the original function moves to position `perm[i]` and is
/// complemented when bit `i` of `input_neg` is set, so the transformed
/// function is `g(y) = f(x) ^ output_neg` with `x_i = y_{perm[i]} ^ neg_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NpnTransform {
    n: u8,
    perm: [u8; MAX_VARS],
    input_neg: u8,
    output_neg: bool,
}

impl NpnTransform {
    pub fn identity(n: usize) -> Self {
        let mut perm = [0u8; MAX_VARS];
        for (i, p) in perm.iter_mut().enumerate() {
            *p = i as u8;
        }
        Self {
            n: n as u8,
            perm,
            input_neg: 0,
            output_neg: false,
        }
    }

    pub fn new(perm: &[usize], input_neg: u8, output_neg: bool) -> Result<Self, NpnError> {
        let n = perm.len();
        if n == 0 || n > MAX_VARS {
            return Err(NpnError::BadPermutation(n));
        }
        let mut seen = 0u8;
        let mut packed = [0u8; MAX_VARS];
        for (i, &p) in perm.iter().enumerate() {
            if p >= n || seen & (1 << p) != 0 {
                return Err(NpnError::BadPermutation(n));
            }
            seen |= 1 << p;
            packed[i] = p as u8;
        }
        for (i, slot) in packed.iter_mut().enumerate().skip(n) {
            *slot = i as u8;
        }
        if n < 8 && input_neg >> n != 0 {
            return Err(NpnError::BadPermutation(n));
        }
        Ok(Self {
            n: n as u8,
            perm: packed,
            input_neg,
            output_neg,
        })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn perm(&self) -> &[u8] {
        &self.perm[..self.n()]
    }

    pub fn input_neg(&self) -> u8 {
        self.input_neg
    }

    pub fn output_neg(&self) -> bool {
        self.output_neg
    }

    /// Original row read when producing transformed row `y`.
    #[inline]
    pub fn source_row(&self, y: usize) -> usize {
        let mut x = 0usize;
        for i in 0..self.n() {
            let bit = ((y >> self.perm[i]) & 1) ^ ((self.input_neg as usize >> i) & 1);
            x |= bit << i;
        }
        x
    }

    /// Row `y` of the result is row `source_row(y)` of the input.
    pub fn apply(&self, tt: TruthTable) -> Result<TruthTable, NpnError> {
        if tt.n() != self.n() {
            return Err(NpnError::ArityMismatch {
                transform: self.n(),
                table: tt.n(),
            });
        }
        Ok(TruthTable::from_masked(self.n(), self.apply_bits(tt.bits()))?)
    }

    pub(crate) fn apply_bits(&self, bits: u64) -> u64 {
        let rows = 1usize << self.n;
        let mut out = 0u64;
        for y in 0..rows {
            out |= ((bits >> self.source_row(y)) & 1) << y;
        }
        if self.output_neg {
            out = !out & row_mask(self.n());
        }
        out
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &NpnTransform) -> NpnTransform {
        let mut perm = self.perm;
        let mut neg = 0u8;
        for i in 0..self.n() {
            let p = self.perm[i] as usize;
            perm[i] = next.perm[p];
            let bit = ((self.input_neg >> i) & 1) ^ ((next.input_neg >> p) & 1);
            neg |= bit << i;
        }
        NpnTransform {
            n: self.n,
            perm,
            input_neg: neg,
            output_neg: self.output_neg ^ next.output_neg,
        }
    }

    pub fn inverse(&self) -> NpnTransform {
        let mut perm = self.perm;
        let mut neg = 0u8;
        for i in 0..self.n() {
            let p = self.perm[i] as usize;
            perm[p] = i as u8;
            neg |= ((self.input_neg >> i) & 1) << p;
        }
        NpnTransform {
            n: self.n,
            perm,
            input_neg: neg,
            output_neg: self.output_neg,
        }
    }

    /// Maps input variable `var` of the original to `(new position, negated)`.
    pub fn map_input(&self, var: usize) -> (usize, bool) {
        (self.perm[var] as usize, (self.input_neg >> var) & 1 == 1)
    }
}

/// All `2 * 2^n * n!` transforms in a fixed order: permutations in
/// lexicographic order, then input negation masks, then output polarity.
pub fn all_transforms(n: usize) -> &'static [NpnTransform] {
    static CACHE: [OnceLock<Vec<NpnTransform>>; MAX_VARS + 1] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    CACHE[n.min(MAX_VARS)].get_or_init(|| {
        let mut out = Vec::new();
        for perm in permutations(n) {
            for neg in 0..(1u16 << n) {
                for out_neg in [false, true] {
                    out.push(NpnTransform::new(&perm, neg as u8, out_neg).expect("valid"));
                }
            }
        }
        out
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Canonical form and a transform `witness` with `witness.apply(tt) == canon`.
pub fn canonicalize(tt: TruthTable) -> (TruthTable, NpnTransform) {
    let mut best = u64::MAX;
    let mut witness = NpnTransform::identity(tt.n());
    for t in all_transforms(tt.n()) {
        let image = t.apply_bits(tt.bits());
        if image < best {
            best = image;
            witness = *t;
        }
    }
    (
        TruthTable::from_masked(tt.n(), best).expect("same arity"),
        witness,
    )
}

/// One NPN class: its minimum-pattern representative and enumeration index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct NpnClass {
    pub canon: TruthTable,
    pub class_index: usize,
    pub orbit_size: usize,
}

/// Every class of `n`-input functions, sorted by canonical pattern.
pub fn enumerate_classes(n: usize) -> Result<Vec<NpnClass>, NpnError> {
    Ok(ClassIndex::build(n)?.classes)
}

/// Dense lookup from every `n`-input function (`n <= 4`) to its class and to
/// a transform taking it onto the class representative.
#[derive(Debug, Clone)]
pub struct ClassIndex {
    n: usize,
    classes: Vec<NpnClass>,
    class_of: Vec<u16>,
    to_canon: Vec<u16>,
}

impl ClassIndex {
    pub fn build(n: usize) -> Result<Self, NpnError> {
        if n > 4 {
            return Err(NpnError::TooManyVariables(n));
        }
        if n == 0 {
            return Err(TruthTableError::BadArity(0).into());
        }
        let transforms = all_transforms(n);
        let total = 1usize << (1 << n);
        let mut class_of = vec![u16::MAX; total];
        let mut to_canon = vec![0u16; total];
        let mut classes = Vec::new();
        // The first unvisited pattern is the minimum of its orbit.
        for f in 0..total {
            if class_of[f] != u16::MAX {
                continue;
            }
            let idx = classes.len() as u16;
            let mut orbit = 0usize;
            for t in transforms {
                let g = t.apply_bits(f as u64) as usize;
                if class_of[g] == u16::MAX {
                    class_of[g] = idx;
                    // t maps f to g, so its inverse maps g back to f.
                    to_canon[g] = transform_index(n, &t.inverse()) as u16;
                    debug_assert_eq!(transforms[to_canon[g] as usize].inverse(), *t);
                    orbit += 1;
                }
            }
            classes.push(NpnClass {
                canon: TruthTable::from_masked(n, f as u64)?,
                class_index: idx as usize,
                orbit_size: orbit,
            });
        }
        Ok(Self {
            n,
            classes,
            class_of,
            to_canon,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn classes(&self) -> &[NpnClass] {
        &self.classes
    }

    pub fn class_of(&self, tt: TruthTable) -> usize {
        self.class_of[tt.bits() as usize] as usize
    }

    #[inline]
    pub(crate) fn class_of_bits(&self, bits: u64) -> usize {
        self.class_of[bits as usize] as usize
    }

    /// A transform mapping `tt` onto its class representative.
    pub fn to_canon(&self, tt: TruthTable) -> NpnTransform {
        all_transforms(self.n)[self.to_canon[tt.bits() as usize] as usize]
    }

    pub fn class(&self, index: usize) -> Option<&NpnClass> {
        self.classes.get(index)
    }

    /// Index of the class whose representative is exactly `canon`.
    pub fn index_of_canon(&self, canon: TruthTable) -> Option<usize> {
        self.classes
            .binary_search_by_key(&canon.bits(), |c| c.canon.bits())
            .ok()
    }
}

/// Position of `t` in [`all_transforms`].
pub fn transform_index(n: usize, t: &NpnTransform) -> usize {
    // Lehmer rank of the permutation, then the negation mask and polarity.
    let mut rank = 0usize;
    let perm = t.perm();
    for i in 0..n {
        let smaller = perm[i + 1..].iter().filter(|&&p| p < perm[i]).count();
        rank = rank * (n - i) + smaller;
    }
    (rank << (n + 1)) | ((t.input_neg() as usize) << 1) | t.output_neg() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tt(hex: &str, n: usize) -> TruthTable {
        TruthTable::parse_hex(hex, n).unwrap()
    }

    /// Direct evaluation of the group action, one assignment at a time.
    fn apply_oracle(f: TruthTable, t: &NpnTransform) -> TruthTable {
        let n = f.n();
        let mut bits = 0u64;
        for y in 0..(1usize << n) {
            let mut x = 0usize;
            for i in 0..n {
                let (pos, neg) = t.map_input(i);
                let v = ((y >> pos) & 1 == 1) ^ neg;
                x |= (v as usize) << i;
            }
            if f.bit(x) ^ t.output_neg() {
                bits |= 1 << y;
            }
        }
        TruthTable::new(n, bits).unwrap()
    }

    #[test]
    fn apply_examples() {
        let negate_all = NpnTransform::new(&[0, 1, 2, 3], 0b1111, false).unwrap();
        assert_eq!(negate_all.apply(tt("0x0001", 4)).unwrap(), tt("0x8000", 4));
        assert_eq!(apply_oracle(tt("0x0001", 4), &negate_all), tt("0x8000", 4));
        let id = NpnTransform::identity(4);
        assert_eq!(id.apply(tt("0x1b3c", 4)).unwrap(), tt("0x1b3c", 4));
        let out = NpnTransform::new(&[0, 1, 2, 3], 0, true).unwrap();
        assert_eq!(out.apply(tt("0x0001", 4)).unwrap(), tt("0xfffe", 4));
        assert!(matches!(
            id.apply(tt("0x1", 2)),
            Err(NpnError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn rejects_bad_permutations() {
        assert!(NpnTransform::new(&[0, 0, 1], 0, false).is_err());
        assert!(NpnTransform::new(&[0, 3, 1], 0, false).is_err());
        assert!(NpnTransform::new(&[0, 1], 0b100, false).is_err());
    }

    #[test]
    fn canonicalize_examples() {
        let (c, w) = canonicalize(tt("0x0080", 4));
        assert_eq!(c, tt("0x0001", 4));
        assert_eq!(w.apply(tt("0x0080", 4)).unwrap(), c);
        assert_eq!(canonicalize(tt("0x0001", 4)).0, tt("0x0001", 4));
        assert_eq!(canonicalize(tt("0xffff", 4)).0, tt("0x0000", 4));
    }

    #[test]
    fn class_counts() {
        assert_eq!(enumerate_classes(1).unwrap().len(), 2);
        assert_eq!(enumerate_classes(2).unwrap().len(), 4);
        assert_eq!(enumerate_classes(3).unwrap().len(), 14);
        assert!(matches!(
            enumerate_classes(5),
            Err(NpnError::TooManyVariables(5))
        ));
    }

    #[test]
    fn orbit_sizes_partition_function_space() {
        for n in 1..=4 {
            let classes = enumerate_classes(n).unwrap();
            let total: usize = classes.iter().map(|c| c.orbit_size).sum();
            assert_eq!(total, 1 << (1 << n));
            assert!(classes.windows(2).all(|w| w[0].canon < w[1].canon));
        }
    }

    #[test]
    fn class_index_transforms_reach_canon() {
        let index = ClassIndex::build(3).unwrap();
        for f in TruthTable::all(3).unwrap() {
            let c = index.class(index.class_of(f)).unwrap().canon;
            assert_eq!(index.to_canon(f).apply(f).unwrap(), c);
            assert_eq!(canonicalize(f).0, c);
        }
    }

    #[test]
    fn transform_index_matches_table_order() {
        for n in 1..=4 {
            for (i, t) in all_transforms(n).iter().enumerate() {
                assert_eq!(transform_index(n, t), i);
            }
        }
    }

    fn transform(n: usize) -> impl Strategy<Value = NpnTransform> {
        (0..all_transforms(n).len()).prop_map(move |i| all_transforms(n)[i])
    }

    proptest! {
        #[test]
        fn apply_matches_oracle(bits in 0u64..65536, t in transform(4)) {
            let f = TruthTable::new(4, bits).unwrap();
            prop_assert_eq!(t.apply(f).unwrap(), apply_oracle(f, &t));
        }

        #[test]
        fn inverse_and_composition(bits in 0u64..65536, a in transform(4), b in transform(4)) {
            let f = TruthTable::new(4, bits).unwrap();
            prop_assert_eq!(a.inverse().apply(a.apply(f).unwrap()).unwrap(), f);
            prop_assert_eq!(a.then(&b).apply(f).unwrap(), b.apply(a.apply(f).unwrap()).unwrap());
        }

        #[test]
        fn hamming_invariance(x in 0u64..65536, y in 0u64..65536, t in transform(4)) {
            let a = TruthTable::new(4, x).unwrap();
            let b = TruthTable::new(4, y).unwrap();
            prop_assert_eq!(
                t.apply(a).unwrap().hamming(&t.apply(b).unwrap()).unwrap(),
                a.hamming(&b).unwrap()
            );
        }

        #[test]
        fn canonical_form_is_orbit_invariant(bits in 0u64..65536, t in transform(4)) {
            let f = TruthTable::new(4, bits).unwrap();
            let (c, w) = canonicalize(f);
            prop_assert_eq!(canonicalize(t.apply(f).unwrap()).0, c);
            prop_assert_eq!(canonicalize(c).0, c);
            prop_assert_eq!(w.apply(f).unwrap(), c);
        }
    }
}
