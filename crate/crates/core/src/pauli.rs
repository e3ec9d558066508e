//! Sparse many-body spin operators as sums of Pauli strings.
//!
//! A term is stored by its X and Z bit masks with a real coefficient; the
//! operator `X^x Z^z` acts as `|b⟩ ↦ (−1)^{z·b} |b ⊕ x⟩`. Products with an
//! even number of Y factors stay real, which covers every operator in this
//! crate (star and plaquette strings, XX+YY couplings, swaps, sign flips).
//!
//! Term algebra is exact: equal coefficients cancel to zero in commutators,
//! so conservation laws come out as identically zero operators rather than
//! small numbers. Pauli strings are orthogonal in the Hilbert-Schmidt inner
//! product, so the Frobenius norm is read off the coefficients directly.

use std::collections::BTreeMap;

use crate::error::{CoreError, Result};
use crate::linalg::{LinOp, SymMatrix};
use crate::scalar::Real;

/// Sum of Pauli strings over `n_qubits` spins, keyed by (x_mask, z_mask).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperatorMatrix<R> {
    n_qubits: usize,
    terms: BTreeMap<(u64, u64), R>,
}

impl<R: Real> SpinOperatorMatrix<R> {
    pub fn zero(n_qubits: usize) -> Self {
        assert!(n_qubits <= 63, "qubit masks are stored in u64");
        SpinOperatorMatrix {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_qubits: usize) -> Self {
        let mut op = Self::zero(n_qubits);
        op.add_term(0, 0, R::one());
        op
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, u64, R)> + '_ {
        self.terms.iter().map(|(&(x, z), &c)| (x, z, c))
    }

    /// Hilbert-space dimension 2^n.
    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    pub fn add_term(&mut self, x_mask: u64, z_mask: u64, coeff: R) {
        if coeff == R::zero() {
            return;
        }
        let entry = self.terms.entry((x_mask, z_mask)).or_insert_with(R::zero);
        *entry += coeff;
        if *entry == R::zero() {
            self.terms.remove(&(x_mask, z_mask));
        }
    }

    /// Product of Z operators over a set of qubits.
    pub fn z_string(n_qubits: usize, mask: u64, coeff: R) -> Self {
        let mut op = Self::zero(n_qubits);
        op.add_term(0, mask, coeff);
        op
    }

    /// Product of X operators over a set of qubits.
    pub fn x_string(n_qubits: usize, mask: u64, coeff: R) -> Self {
        let mut op = Self::zero(n_qubits);
        op.add_term(mask, 0, coeff);
        op
    }

    /// `c · X_a X_b` on two distinct qubits.
    pub fn xx(n_qubits: usize, a: usize, b: usize, coeff: R) -> Self {
        assert_ne!(a, b);
        Self::x_string(n_qubits, 1 << a | 1 << b, coeff)
    }

    /// `c · Y_a Y_b` on two distinct qubits. Y_a Y_b = −X_aZ_a X_bZ_b, so
    /// the stored coefficient flips sign.
    pub fn yy(n_qubits: usize, a: usize, b: usize, coeff: R) -> Self {
        assert_ne!(a, b);
        let mask = 1u64 << a | 1 << b;
        let mut op = Self::zero(n_qubits);
        op.add_term(mask, mask, -coeff);
        op
    }

    /// SWAP of two qubits: (1 + XX + YY + ZZ)/2.
    pub fn swap(n_qubits: usize, a: usize, b: usize) -> Self {
        assert_ne!(a, b);
        let mask = 1u64 << a | 1 << b;
        let half = R::of(0.5);
        let mut op = Self::zero(n_qubits);
        op.add_term(0, 0, half);
        op.add_term(mask, 0, half);
        op.add_term(mask, mask, -half);
        op.add_term(0, mask, half);
        op
    }

    pub fn scaled(&self, factor: R) -> Self {
        let mut out = Self::zero(self.n_qubits);
        for (&k, &c) in &self.terms {
            let v = c * factor;
            if v != R::zero() {
                out.terms.insert(k, v);
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n_qubits, other.n_qubits);
        let mut out = self.clone();
        for (&(x, z), &c) in &other.terms {
            out.add_term(x, z, c);
        }
        out
    }

    /// Operator product. `(X^a Z^b)(X^c Z^d) = (−1)^{b·c} X^{a⊕c} Z^{b⊕d}`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n_qubits, other.n_qubits);
        let mut out = Self::zero(self.n_qubits);
        for (&(xa, za), &ca) in &self.terms {
            for (&(xb, zb), &cb) in &other.terms {
                let sign = if (za & xb).count_ones() % 2 == 0 {
                    R::one()
                } else {
                    -R::one()
                };
                out.add_term(xa ^ xb, za ^ zb, ca * cb * sign);
            }
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).add(&other.mul(self).scaled(-R::one()))
    }

    /// Frobenius norm divided by √dim: √(Σ c²), since distinct Pauli
    /// strings are orthogonal with ‖P‖_F² = dim. The empty sum's −0.0 is
    /// clamped so exact zeros print as zeros.
    pub fn normalized_frobenius_norm(&self) -> R {
        self.terms
            .values()
            .map(|&c| c * c)
            .sum::<R>()
            .sqrt()
            .max(R::zero())
    }

    /// Exact hermiticity check: a real-coefficient term is Hermitian iff its
    /// X and Z masks overlap on an even number of qubits (even Y count).
    pub fn is_hermitian(&self) -> bool {
        self.terms
            .iter()
            .all(|(&(x, z), _)| (x & z).count_ones() % 2 == 0)
    }

    /// Densify into a symmetric matrix. Only valid for Hermitian operators
    /// with real matrix elements; guarded to 2^12.
    pub fn to_dense(&self) -> Result<SymMatrix<R>> {
        if self.n_qubits > 12 {
            return Err(CoreError::guard(format!(
                "dense form of a {}-qubit operator would be {}-dimensional",
                self.n_qubits,
                self.dim()
            )));
        }
        if !self.is_hermitian() {
            return Err(CoreError::invalid(
                "dense form requires a Hermitian operator",
            ));
        }
        let dim = self.dim();
        let mut m = SymMatrix::zeros(dim);
        for (&(x, z), &c) in &self.terms {
            for b in 0..dim as u64 {
                let sign = if (z & b).count_ones() % 2 == 0 { c } else { -c };
                m.add_to((b ^ x) as usize, b as usize, sign);
            }
        }
        Ok(m)
    }

    /// Maximum number of distinct off-diagonal strings touching one row,
    /// plus the diagonal: an upper bound on the row sparsity.
    pub fn row_sparsity_bound(&self) -> usize {
        let mut x_masks: Vec<u64> = self.terms.keys().map(|&(x, _)| x).collect();
        x_masks.sort_unstable();
        x_masks.dedup();
        x_masks.len()
    }
}

impl<R: Real> LinOp<R> for SpinOperatorMatrix<R> {
    fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    fn apply(&self, x: &[R], y: &mut [R]) {
        let dim = self.dim();
        assert_eq!(x.len(), dim);
        assert_eq!(y.len(), dim);
        // Gather form: each output element sums its terms in a fixed order,
        // so results do not depend on any parallel schedule.
        for (b, out) in y.iter_mut().enumerate() {
            let b = b as u64;
            let mut acc = R::zero();
            for (&(xm, zm), &c) in &self.terms {
                let src = b ^ xm;
                let sign = if (zm & src).count_ones() % 2 == 0 {
                    c
                } else {
                    -c
                };
                acc += sign * x[src as usize];
            }
            *out = acc;
        }
    }
}

/// Unitary (as a term sum) implementing a monomial matter transformation on
/// the given qubits: permutation realized by swaps, sign flips by Z.
///
/// Conjugation satisfies `U μ⁻_n U† = s_n μ⁻_{π(n)}` for the monomial with
/// row `n` carrying sign `s_n` in column `π(n)` (up to a global phase, which
/// drops out of every commutator).
pub fn monomial_unitary<R: Real>(
    n_qubits: usize,
    qubits: &[usize; 4],
    monomial: &crate::hadamard::MonomialMatrix,
) -> SpinOperatorMatrix<R> {
    // Permutation part: decompose π into transpositions applied left to
    // right. Conjugation by swap(a,b) exchanges operators on a and b.
    let mut u = SpinOperatorMatrix::identity(n_qubits);
    let mut current = [0usize, 1, 2, 3];
    // Build π as a product of swaps: find where each value must go.
    let target = monomial.perm;
    for pos in 0..4 {
        if current[pos] != target[pos] {
            let other = (pos + 1..4)
                .find(|&k| current[k] == target[pos])
                .expect("bijection");
            u = u.mul(&SpinOperatorMatrix::swap(
                n_qubits,
                qubits[pos],
                qubits[other],
            ));
            current.swap(pos, other);
        }
    }
    let mut flip_mask = 0u64;
    for (n, &s) in monomial.signs.iter().enumerate() {
        if s == -1 {
            flip_mask |= 1 << qubits[n];
        }
    }
    if flip_mask != 0 {
        u = u.mul(&SpinOperatorMatrix::z_string(n_qubits, flip_mask, R::one()));
    }
    u
}
