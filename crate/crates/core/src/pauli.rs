//! Pauli strings, qubit layouts and the local Pauli basis.
//!
//! Qubits are 0-based inside the library and qubit 0 is the most significant
//! tensor factor. A Pauli string acts on computational basis states as
//! `P|c⟩ = i^{#Y} (-1)^{|c ∧ z|} |c ⊕ x⟩`, where `x` marks the X/Y factors and
//! `z` the Z/Y factors; every dense operation below goes through that form.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{HermitianMatrix, Matrix};

/// Largest qubit count for any dense object.
pub const MAX_QUBITS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    fn signs(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }
}

/// An n-fold tensor product of single-qubit Paulis.
///
/// Ordering is lexicographic over factors with `I < X < Y < Z`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    factors: Vec<Pauli>,
}

impl PauliString {
    pub fn new(factors: Vec<Pauli>) -> Result<Self> {
        if factors.is_empty() || factors.len() > MAX_QUBITS {
            return Err(Error::InvalidQubitCount(factors.len()));
        }
        Ok(PauliString { factors })
    }

    pub fn identity(n: usize) -> Self {
        PauliString {
            factors: vec![Pauli::I; n],
        }
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Pauli] {
        &self.factors
    }

    pub fn is_identity(&self) -> bool {
        self.factors.iter().all(|&p| p == Pauli::I)
    }

    /// Positions carrying a non-identity factor, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(q, _)| q)
            .collect()
    }

    pub fn support_within(&self, subset: &[usize]) -> bool {
        self.factors
            .iter()
            .enumerate()
            .all(|(q, &p)| p == Pauli::I || subset.contains(&q))
    }

    /// The factors at `subset`, in the order given.
    pub fn restrict(&self, subset: &[usize]) -> Result<PauliString> {
        if !self.support_within(subset) {
            return Err(Error::SupportNotContained {
                pauli: self.to_string(),
            });
        }
        let factors = subset
            .iter()
            .map(|&q| {
                self.factors.get(q).copied().ok_or(Error::SubsetOutOfRange {
                    qubit: q,
                    n: self.num_qubits(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        PauliString::new(factors)
    }

    /// Inverse of [`restrict`](Self::restrict): places `self` on `subset` of an
    /// `n`-qubit register, identity elsewhere.
    pub fn embed(&self, subset: &[usize], n: usize) -> Result<PauliString> {
        if subset.len() != self.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits(),
                found: subset.len(),
            });
        }
        let mut factors = vec![Pauli::I; n];
        for (&q, &p) in subset.iter().zip(&self.factors) {
            if q >= n {
                return Err(Error::SubsetOutOfRange { qubit: q, n });
            }
            factors[q] = p;
        }
        PauliString::new(factors)
    }

    pub fn mask(&self) -> PauliMask {
        let n = self.num_qubits();
        let mut x = 0usize;
        let mut z = 0usize;
        let mut ny = 0u32;
        for (q, &p) in self.factors.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            if p.flips() {
                x |= bit;
            }
            if p.signs() {
                z |= bit;
            }
            if p == Pauli::Y {
                ny += 1;
            }
        }
        let phase = match ny % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        PauliMask {
            dim: 1 << n,
            x,
            z,
            phase,
        }
    }

    /// The `2^n × 2^n` matrix of the tensor product.
    pub fn dense_matrix(&self) -> HermitianMatrix {
        let mask = self.mask();
        let mut m = Matrix::zeros(mask.dim);
        mask.accumulate(&mut m, 1.0);
        HermitianMatrix::hermitian_part(&m)
    }

    /// All `4^n` strings on `n` qubits in sorted order.
    pub fn all(n: usize) -> impl Iterator<Item = PauliString> {
        (0..(1usize << (2 * n))).map(move |code| {
            let factors = (0..n)
                .map(|q| Pauli::ALL[(code >> (2 * (n - 1 - q))) & 3])
                .collect();
            PauliString { factors }
        })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.factors {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let factors = s
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::InvalidPauli(s.to_string())))
            .collect::<Result<Vec<_>>>()?;
        PauliString::new(factors).map_err(|_| Error::InvalidPauli(s.to_string()))
    }
}

impl serde::Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let label = String::deserialize(d)?;
        label.parse().map_err(serde::de::Error::custom)
    }
}

/// Bit-mask form of a Pauli string used by the dense kernels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliMask {
    dim: usize,
    x: usize,
    z: usize,
    phase: Complex64,
}

impl PauliMask {
    #[inline]
    fn entry(&self, col: usize) -> Complex64 {
        if (col & self.z).count_ones() % 2 == 1 {
            -self.phase
        } else {
            self.phase
        }
    }

    /// `Tr(P M)`.
    #[inline]
    pub fn trace_with(&self, m: &Matrix) -> Complex64 {
        debug_assert_eq!(m.dim(), self.dim);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..self.dim {
            acc += self.entry(c) * m.get(c, c ^ self.x);
        }
        acc
    }

    /// `⟨v|P|v⟩` for a state vector `v`.
    #[inline]
    pub fn expectation_vec(&self, v: &[Complex64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..self.dim {
            acc += v[c ^ self.x].conj() * self.entry(c) * v[c];
        }
        acc.re
    }

    /// `M += s P`.
    #[inline]
    pub fn accumulate(&self, m: &mut Matrix, s: f64) {
        debug_assert_eq!(m.dim(), self.dim);
        for c in 0..self.dim {
            let r = c ^ self.x;
            let v = m.get(r, c) + self.entry(c) * s;
            m.set(r, c, v);
        }
    }
}

/// Real coefficients `β_P = Tr(P H) / 2^c` over all `4^c` Pauli strings.
/// `Σ_P β_P P` reconstructs `H`.
pub fn pauli_expansion(h: &HermitianMatrix) -> BTreeMap<PauliString, f64> {
    let n = h.dim().trailing_zeros() as usize;
    let norm = h.dim() as f64;
    PauliString::all(n)
        .map(|p| {
            let beta = p.mask().trace_with(h.matrix()).re / norm;
            (p, beta)
        })
        .collect()
}

/// Qubit subsets `C_1..C_m` over an `n`-qubit register. Each subset is stored
/// sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    n: usize,
    subsets: Vec<Vec<usize>>,
}

impl Layout {
    pub fn new(n: usize, subsets: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::InvalidQubitCount(n));
        }
        let mut normalized = Vec::with_capacity(subsets.len());
        for mut s in subsets {
            if s.is_empty() {
                return Err(Error::EmptySubset);
            }
            s.sort_unstable();
            for w in s.windows(2) {
                if w[0] == w[1] {
                    return Err(Error::DuplicateQubit(w[0]));
                }
            }
            if let Some(&q) = s.iter().find(|&&q| q >= n) {
                return Err(Error::SubsetOutOfRange { qubit: q, n });
            }
            normalized.push(s);
        }
        Ok(Layout {
            n,
            subsets: normalized,
        })
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    /// Largest subset size `k`.
    pub fn locality(&self) -> usize {
        self.subsets.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// The local Pauli set `S`: every non-identity string supported inside some
/// subset of the layout, sorted by `(support, factors)`.
#[derive(Clone, Debug)]
pub struct LocalPauliBasis {
    layout: Layout,
    elements: Vec<PauliString>,
    masks: Vec<PauliMask>,
    index: HashMap<PauliString, usize>,
    /// For each element, the subsets that cover its support (ascending).
    covers: Vec<Vec<usize>>,
    /// For each subset, the indices of the elements supported inside it.
    members: Vec<Vec<usize>>,
}

impl LocalPauliBasis {
    pub fn new(layout: Layout) -> Self {
        let n = layout.num_qubits();
        let mut keyed: BTreeSet<(Vec<usize>, PauliString)> = BTreeSet::new();
        for subset in layout.subsets() {
            for local in PauliString::all(subset.len()) {
                if local.is_identity() {
                    continue;
                }
                let p = local
                    .embed(subset, n)
                    .expect("layout subsets are validated");
                keyed.insert((p.support(), p));
            }
        }
        let elements: Vec<PauliString> = keyed.into_iter().map(|(_, p)| p).collect();
        let masks = elements.iter().map(PauliString::mask).collect();
        let index = elements
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        let covers: Vec<Vec<usize>> = elements
            .iter()
            .map(|p| {
                layout
                    .subsets()
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| p.support_within(s))
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        let mut members = vec![Vec::new(); layout.len()];
        for (e, cs) in covers.iter().enumerate() {
            for &i in cs {
                members[i].push(e);
            }
        }
        LocalPauliBasis {
            layout,
            elements,
            masks,
            index,
            covers,
            members,
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn num_qubits(&self) -> usize {
        self.layout.num_qubits()
    }

    /// `d = |S|`.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[PauliString] {
        &self.elements
    }

    pub fn masks(&self) -> &[PauliMask] {
        &self.masks
    }

    pub fn index_of(&self, p: &PauliString) -> Option<usize> {
        self.index.get(p).copied()
    }

    /// Subsets covering element `e`, ascending.
    pub fn covering_subsets(&self, e: usize) -> &[usize] {
        &self.covers[e]
    }

    /// Elements supported inside subset `i`.
    pub fn subset_members(&self, i: usize) -> &[usize] {
        &self.members[i]
    }
}

/// Builds `S` for `layout`.
pub fn local_pauli_set(layout: &Layout) -> LocalPauliBasis {
    LocalPauliBasis::new(layout.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hs_inner;
    use proptest::prelude::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn dense_z_and_identity() {
        let z = ps("Z").dense_matrix();
        assert_eq!(z.matrix(), &Matrix::from_diag(&[1.0, -1.0]));
        assert_eq!(ps("II").dense_matrix().matrix(), &Matrix::identity(4));
    }

    #[test]
    fn dense_y_matches_definition() {
        let y = ps("Y").dense_matrix();
        assert_eq!(y.get(0, 1), c(0.0, -1.0));
        assert_eq!(y.get(1, 0), c(0.0, 1.0));
    }

    #[test]
    fn dense_xz_is_kron() {
        let xz = ps("XZ").dense_matrix();
        let x = ps("X").dense_matrix();
        let z = ps("Z").dense_matrix();
        assert_eq!(xz, x.kron(&z));
        let sq = xz.matrix().matmul(xz.matrix());
        assert_eq!(sq.trace(), c(4.0, 0.0));
        assert_eq!(sq, Matrix::identity(4));
    }

    #[test]
    fn support_examples() {
        assert_eq!(ps("IXI").support(), vec![1]);
        assert!(ps("III").support().is_empty());
        assert_eq!(ps("ZIY").support(), vec![0, 2]);
    }

    #[test]
    fn restrict_examples() {
        assert_eq!(ps("IXI").restrict(&[1, 2]).unwrap(), ps("XI"));
        assert_eq!(ps("III").restrict(&[0]).unwrap(), ps("I"));
        assert_eq!(ps("XIZ").restrict(&[0, 2]).unwrap(), ps("XZ"));
        assert!(matches!(
            ps("XIZ").restrict(&[0, 1]),
            Err(Error::SupportNotContained { .. })
        ));
    }

    #[test]
    fn hs_inner_examples() {
        let z = ps("Z").dense_matrix();
        let x = ps("X").dense_matrix();
        let xy = ps("XY").dense_matrix();
        assert_eq!(hs_inner(z.matrix(), z.matrix()).unwrap(), c(2.0, 0.0));
        assert_eq!(hs_inner(x.matrix(), z.matrix()).unwrap(), c(0.0, 0.0));
        assert_eq!(hs_inner(xy.matrix(), xy.matrix()).unwrap(), c(4.0, 0.0));
    }

    #[test]
    fn orthogonality_exhaustive_small() {
        for n in 1..=2 {
            let all: Vec<_> = PauliString::all(n).map(|p| p.dense_matrix()).collect();
            for (i, a) in all.iter().enumerate() {
                for (j, b) in all.iter().enumerate() {
                    let expected = if i == j { (1 << n) as f64 } else { 0.0 };
                    assert_eq!(hs_inner(a.matrix(), b.matrix()).unwrap(), c(expected, 0.0));
                }
            }
        }
    }

    #[test]
    fn expansion_examples() {
        let id = pauli_expansion(&HermitianMatrix::identity(2));
        assert_eq!(id[&ps("I")], 1.0);
        assert_eq!(id[&ps("X")], 0.0);
        assert_eq!(id[&ps("Y")], 0.0);
        assert_eq!(id[&ps("Z")], 0.0);

        let proj = pauli_expansion(&HermitianMatrix::from_real_diag(&[1.0, 0.0]).unwrap());
        assert_eq!(proj[&ps("I")], 0.5);
        assert_eq!(proj[&ps("Z")], 0.5);
        assert_eq!(proj[&ps("X")], 0.0);

        let xx = pauli_expansion(&ps("XX").dense_matrix());
        for (p, beta) in xx {
            assert_eq!(beta, if p == ps("XX") { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn local_set_sizes() {
        let b = local_pauli_set(&Layout::new(1, vec![vec![0]]).unwrap());
        assert_eq!(b.elements(), &[ps("X"), ps("Y"), ps("Z")]);
        assert_eq!(local_pauli_set(&Layout::new(2, vec![vec![0, 1]]).unwrap()).len(), 15);
        let chain = local_pauli_set(&Layout::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap());
        assert_eq!(chain.len(), 27);
        assert!(chain.elements().iter().all(|p| !p.is_identity()));
        assert!(chain.len() <= 16 * 2 - 1);
    }

    #[test]
    fn local_set_order_is_by_support_then_labels() {
        let b = local_pauli_set(&Layout::new(2, vec![vec![0, 1]]).unwrap());
        let names: Vec<String> = b.elements().iter().map(|p| p.to_string()).collect();
        assert_eq!(&names[..6], &["XI", "YI", "ZI", "XX", "XY", "XZ"]);
        assert_eq!(&names[12..], &["IX", "IY", "IZ"]);
    }

    #[test]
    fn layout_validation() {
        assert!(matches!(
            Layout::new(2, vec![vec![0, 2]]),
            Err(Error::SubsetOutOfRange { qubit: 2, n: 2 })
        ));
        assert!(matches!(Layout::new(2, vec![vec![]]), Err(Error::EmptySubset)));
        assert!(matches!(
            Layout::new(2, vec![vec![1, 1]]),
            Err(Error::DuplicateQubit(1))
        ));
    }

    #[test]
    fn parse_rejects_bad_labels() {
        assert!("XQ".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
        assert_eq!(ps("IXZ").to_string(), "IXZ");
    }

    fn hermitian_strategy(n: usize) -> impl Strategy<Value = HermitianMatrix> {
        let dim = 1usize << n;
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim).prop_map(move |v| {
            let m = Matrix::from_vec(dim, v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap();
            HermitianMatrix::hermitian_part(&m)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn expansion_round_trip(h in (1usize..=3).prop_flat_map(hermitian_strategy)) {
            let mut rebuilt = Matrix::zeros(h.dim());
            for (p, beta) in pauli_expansion(&h) {
                p.mask().accumulate(&mut rebuilt, beta);
            }
            prop_assert!(rebuilt.max_abs_diff(h.matrix()) < 1e-10);
        }
    }
}
