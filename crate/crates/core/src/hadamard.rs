//! Hadamard coupling matrix and its monomial automorphism group.
//!
//! The Josephson couplings at a site follow a 4×4 sign matrix `W` with
//! `WᵀW = 4·1`. Such matrices are invariant under pairs of monomial
//! matrices `(L, R)` with `L⁻¹ W R = W`; because gauge wires are shared
//! between sites, the physical `R` is restricted to diagonal sign flips
//! while `L` may also permute the site-local matter wires. Those pairs,
//! combined with π phase shifts, are the combinatorial gauge symmetry.
//!
//! Everything in this module is exact integer arithmetic; no tolerance is
//! involved in any symmetry check.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::{group_eigenvalues, jacobi_eigen, SymMatrix};
use crate::scalar::Real;

/// 4×4 matrix with entries in {−1, +1}; rows index matter wires, columns
/// index gauge wires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignMatrix {
    pub entries: [[i32; 4]; 4],
}

impl SignMatrix {
    /// The canonical coupling choice: −1 on the diagonal, +1 elsewhere.
    /// All 4×4 Hadamard matrices are physically equivalent; this one is the
    /// crate-wide default.
    pub const fn canonical() -> Self {
        SignMatrix {
            entries: [[-1, 1, 1, 1], [1, -1, 1, 1], [1, 1, -1, 1], [1, 1, 1, -1]],
        }
    }

    pub fn new(entries: [[i32; 4]; 4]) -> Result<Self> {
        for row in &entries {
            for &e in row {
                if e != 1 && e != -1 {
                    return Err(CoreError::invalid(format!(
                        "sign matrix entries must be ±1, got {e}"
                    )));
                }
            }
        }
        Ok(SignMatrix { entries })
    }

    #[inline]
    pub fn get(&self, matter: usize, gauge: usize) -> i32 {
        self.entries[matter][gauge]
    }
}

/// Exact product of two integer 4×4 matrices.
fn mat_mul(a: &[[i32; 4]; 4], b: &[[i32; 4]; 4]) -> [[i32; 4]; 4] {
    let mut c = [[0i32; 4]; 4];
    for (i, row) in c.iter_mut().enumerate() {
        for (j, cij) in row.iter_mut().enumerate() {
            *cij = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn mat_transpose(a: &[[i32; 4]; 4]) -> [[i32; 4]; 4] {
    let mut t = [[0i32; 4]; 4];
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            t[j][i] = v;
        }
    }
    t
}

/// `true` iff `WᵀW = 4·1` holds exactly.
pub fn is_hadamard(w: &SignMatrix) -> bool {
    let p = mat_mul(&mat_transpose(&w.entries), &w.entries);
    for (i, row) in p.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let expect = if i == j { 4 } else { 0 };
            if v != expect {
                return false;
            }
        }
    }
    true
}

/// Generalized permutation matrix with entries in {−1, 0, +1}: row `r` has
/// its single nonzero in column `perm[r]`, with value `signs[r]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialMatrix {
    pub perm: [usize; 4],
    pub signs: [i32; 4],
}

impl MonomialMatrix {
    pub fn identity() -> Self {
        MonomialMatrix {
            perm: [0, 1, 2, 3],
            signs: [1; 4],
        }
    }

    pub fn new(perm: [usize; 4], signs: [i32; 4]) -> Result<Self> {
        let mut seen = [false; 4];
        for &p in &perm {
            if p >= 4 || seen[p] {
                return Err(CoreError::invalid("perm must be a bijection on 0..4"));
            }
            seen[p] = true;
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(CoreError::invalid("signs must be ±1"));
        }
        Ok(MonomialMatrix { perm, signs })
    }

    /// Diagonal sign matrix (identity permutation).
    pub fn diagonal(signs: [i32; 4]) -> Self {
        MonomialMatrix {
            perm: [0, 1, 2, 3],
            signs,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.perm == [0, 1, 2, 3]
    }

    pub fn to_dense(&self) -> [[i32; 4]; 4] {
        let mut m = [[0i32; 4]; 4];
        for r in 0..4 {
            m[r][self.perm[r]] = self.signs[r];
        }
        m
    }

    /// Group composition `self · other` of the dense forms.
    pub fn compose(&self, other: &MonomialMatrix) -> MonomialMatrix {
        // (S₁P₁)(S₂P₂): row r picks other's row perm[r].
        let mut perm = [0usize; 4];
        let mut signs = [0i32; 4];
        for r in 0..4 {
            perm[r] = other.perm[self.perm[r]];
            signs[r] = self.signs[r] * other.signs[self.perm[r]];
        }
        MonomialMatrix { perm, signs }
    }

    /// Monomial matrices are orthogonal, so the inverse is the transpose.
    pub fn inverse(&self) -> MonomialMatrix {
        let mut perm = [0usize; 4];
        let mut signs = [0i32; 4];
        for r in 0..4 {
            perm[self.perm[r]] = r;
            signs[self.perm[r]] = self.signs[r];
        }
        MonomialMatrix { perm, signs }
    }

    /// Extract a monomial from a dense matrix, if it is one.
    pub fn from_dense(m: &[[i32; 4]; 4]) -> Option<MonomialMatrix> {
        let mut perm = [usize::MAX; 4];
        let mut signs = [0i32; 4];
        let mut col_used = [false; 4];
        for (r, row) in m.iter().enumerate() {
            let mut nonzero = None;
            for (c, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 | -1 => {
                        if nonzero.is_some() {
                            return None;
                        }
                        nonzero = Some((c, v));
                    }
                    _ => return None,
                }
            }
            let (c, v) = nonzero?;
            if col_used[c] {
                return None;
            }
            col_used[c] = true;
            perm[r] = c;
            signs[r] = v;
        }
        Some(MonomialMatrix { perm, signs })
    }
}

/// A symmetry pair `(L, R)` with `L⁻¹ W R = W`. The gauge-side `R` must be
/// diagonal: gauge wires bridge two sites and can be sign-flipped but not
/// permuted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutomorphismPair {
    pub left: MonomialMatrix,
    pub right: MonomialMatrix,
}

impl AutomorphismPair {
    pub fn identity() -> Self {
        AutomorphismPair {
            left: MonomialMatrix::identity(),
            right: MonomialMatrix::identity(),
        }
    }

    /// The worked example pair for the canonical `W`: `R` flips the first
    /// two gauge wires, `L` swaps matter wires (1 2) and swaps (3 4) with a
    /// sign flip.
    pub fn canonical_example() -> Self {
        AutomorphismPair {
            left: MonomialMatrix {
                perm: [1, 0, 3, 2],
                signs: [1, 1, -1, -1],
            },
            right: MonomialMatrix::diagonal([-1, -1, 1, 1]),
        }
    }

    pub fn compose(&self, other: &AutomorphismPair) -> AutomorphismPair {
        AutomorphismPair {
            left: self.left.compose(&other.left),
            right: self.right.compose(&other.right),
        }
    }
}

/// `true` iff `L⁻¹ W R = W` holds exactly in integer arithmetic.
pub fn verify_automorphism(w: &SignMatrix, pair: &AutomorphismPair) -> bool {
    let l_inv = pair.left.inverse().to_dense();
    let r = pair.right.to_dense();
    mat_mul(&mat_mul(&l_inv, &w.entries), &r) == w.entries
}

fn all_sign_vectors() -> impl Iterator<Item = [i32; 4]> {
    (0u8..16).map(|bits| {
        let mut s = [1i32; 4];
        for (i, si) in s.iter_mut().enumerate() {
            if bits & (1 << i) != 0 {
                *si = -1;
            }
        }
        s
    })
}

fn all_permutations() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    let mut items = [0usize, 1, 2, 3];
    permute(&mut items, 0, &mut out);
    out
}

fn permute(items: &mut [usize; 4], k: usize, out: &mut Vec<[usize; 4]>) {
    if k == 4 {
        out.push(*items);
        return;
    }
    for i in k..4 {
        items.swap(k, i);
        permute(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Exhaustively enumerate all pairs with diagonal `R` satisfying
/// `L⁻¹ W R = W`: all 384 monomial `L` against all 16 diagonal `R`.
///
/// For the canonical `W` this yields the 8 even sign patterns on the gauge
/// wires, each with a unique matter-side companion; the set is closed under
/// composition.
pub fn enumerate_automorphism_pairs(w: &SignMatrix) -> Result<Vec<AutomorphismPair>> {
    if !is_hadamard(w) {
        return Err(CoreError::invalid(
            "automorphism enumeration requires a Hadamard matrix",
        ));
    }
    let perms = all_permutations();
    let mut pairs = Vec::new();
    for signs_r in all_sign_vectors() {
        let right = MonomialMatrix::diagonal(signs_r);
        for &perm in &perms {
            for signs_l in all_sign_vectors() {
                let left = MonomialMatrix {
                    perm,
                    signs: signs_l,
                };
                let pair = AutomorphismPair { left, right };
                if verify_automorphism(w, &pair) {
                    pairs.push(pair);
                }
            }
        }
    }
    Ok(pairs)
}

/// Exploration variant: allow `R` to be any monomial matrix (384 × 384
/// search). Physically the gauge wires cannot be permuted, so this set is
/// not a symmetry of the lattice model; it is exposed for studying the full
/// automorphism group of `W`.
pub fn enumerate_automorphism_pairs_full(w: &SignMatrix) -> Result<Vec<AutomorphismPair>> {
    if !is_hadamard(w) {
        return Err(CoreError::invalid(
            "automorphism enumeration requires a Hadamard matrix",
        ));
    }
    let perms = all_permutations();
    let mut pairs = Vec::new();
    for &perm_r in &perms {
        for signs_r in all_sign_vectors() {
            let right = MonomialMatrix {
                perm: perm_r,
                signs: signs_r,
            };
            // L is determined by R when it exists: L = W R W⁻¹ = W R Wᵀ / 4.
            let wr = mat_mul(&w.entries, &right.to_dense());
            let wrwt = mat_mul(&wr, &mat_transpose(&w.entries));
            let mut l_dense = [[0i32; 4]; 4];
            let mut ok = true;
            'outer: for i in 0..4 {
                for j in 0..4 {
                    if wrwt[i][j] % 4 != 0 {
                        ok = false;
                        break 'outer;
                    }
                    l_dense[i][j] = wrwt[i][j] / 4;
                }
            }
            if !ok {
                continue;
            }
            if let Some(left) = MonomialMatrix::from_dense(&l_dense) {
                let pair = AutomorphismPair { left, right };
                debug_assert!(verify_automorphism(w, &pair));
                pairs.push(pair);
            }
        }
    }
    Ok(pairs)
}

/// Eigenvalues (with multiplicity) of the 8×8 bipartite hopping block
/// `[[0, W], [Wᵀ, 0]]`. For a Hadamard `W` every singular value is 2, so
/// the spectrum is flat: {−2 ×4, +2 ×4}.
pub fn flat_band_spectrum<R: Real>(w: &SignMatrix) -> Vec<(R, usize)> {
    let block = SymMatrix::from_fn(8, |i, j| {
        if i < 4 && j >= 4 {
            R::of_i64(w.entries[i][j - 4] as i64)
        } else if i >= 4 && j < 4 {
            R::of_i64(w.entries[j][i - 4] as i64)
        } else {
            R::zero()
        }
    });
    let eig = jacobi_eigen(&block);
    group_eigenvalues(&eig.values, R::of(1e-9))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_w_is_hadamard() {
        assert!(is_hadamard(&SignMatrix::canonical()));
    }

    #[test]
    fn all_ones_is_not_hadamard() {
        let w = SignMatrix::new([[1; 4]; 4]).unwrap();
        assert!(!is_hadamard(&w));
    }

    #[test]
    fn single_negated_entry_breaks_hadamard() {
        // Oracle: recompute WᵀW directly for each corruption.
        let w = SignMatrix::canonical();
        for r in 0..4 {
            for c in 0..4 {
                let mut bad = w;
                bad.entries[r][c] *= -1;
                let p = mat_mul(&mat_transpose(&bad.entries), &bad.entries);
                let diag_ok = (0..4).all(|i| p[i][i] == 4);
                let off_ok = (0..4).all(|i| (0..4).all(|j| i == j || p[i][j] == 0));
                assert_eq!(is_hadamard(&bad), diag_ok && off_ok);
                assert!(!is_hadamard(&bad));
            }
        }
    }

    #[test]
    fn entries_validated() {
        assert!(SignMatrix::new([[0; 4]; 4]).is_err());
        assert!(MonomialMatrix::new([0, 0, 2, 3], [1; 4]).is_err());
        assert!(MonomialMatrix::new([0, 1, 2, 3], [1, 2, 1, 1]).is_err());
    }

    #[test]
    fn worked_example_pair_is_an_automorphism() {
        let w = SignMatrix::canonical();
        let pair = AutomorphismPair::canonical_example();
        assert!(verify_automorphism(&w, &pair));
        // Its dense form matches the matrices stated for this example.
        assert_eq!(
            pair.left.to_dense(),
            [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, -1, 0]]
        );
        assert_eq!(
            pair.right.to_dense(),
            [[-1, 0, 0, 0], [0, -1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
        );
    }

    #[test]
    fn identity_pair_is_an_automorphism() {
        let w = SignMatrix::canonical();
        assert!(verify_automorphism(&w, &AutomorphismPair::identity()));
    }

    #[test]
    fn dropping_r_breaks_the_example_pair() {
        let w = SignMatrix::canonical();
        let pair = AutomorphismPair {
            left: AutomorphismPair::canonical_example().left,
            right: MonomialMatrix::identity(),
        };
        // Oracle: L⁻¹ W ≠ W by direct integer product.
        let l_inv = pair.left.inverse().to_dense();
        let lw = mat_mul(&l_inv, &w.entries);
        assert_ne!(lw, w.entries);
        assert!(!verify_automorphism(&w, &pair));
    }

    #[test]
    fn monomial_compose_matches_dense_product() {
        let a = MonomialMatrix {
            perm: [1, 0, 3, 2],
            signs: [1, -1, -1, 1],
        };
        let b = MonomialMatrix {
            perm: [2, 3, 1, 0],
            signs: [-1, 1, 1, -1],
        };
        let dense = mat_mul(&a.to_dense(), &b.to_dense());
        assert_eq!(a.compose(&b).to_dense(), dense);
        let inv = mat_mul(&a.inverse().to_dense(), &a.to_dense());
        assert_eq!(inv, MonomialMatrix::identity().to_dense());
    }

    /// Enumerated fixture: the canonical W admits exactly 8 diagonal-R
    /// pairs (the even sign patterns on the gauge wires).
    #[test]
    fn enumeration_count_and_membership() {
        let w = SignMatrix::canonical();
        let pairs = enumerate_automorphism_pairs(&w).unwrap();
        assert_eq!(pairs.len(), 8);
        assert!(pairs.contains(&AutomorphismPair::identity()));
        assert!(pairs.contains(&AutomorphismPair::canonical_example()));
        // Every R has an even number of sign flips.
        for p in &pairs {
            assert!(p.right.is_diagonal());
            let flips = p.right.signs.iter().filter(|&&s| s == -1).count();
            assert_eq!(flips % 2, 0, "odd flip pattern {:?}", p.right.signs);
        }
    }

    #[test]
    fn enumeration_forms_a_group() {
        let w = SignMatrix::canonical();
        let pairs = enumerate_automorphism_pairs(&w).unwrap();
        for a in &pairs {
            for b in &pairs {
                let c = a.compose(b);
                assert!(verify_automorphism(&w, &c));
                assert!(pairs.contains(&c), "composition left the enumerated set");
            }
        }
        // Inverses are present as well.
        for a in &pairs {
            let inv = AutomorphismPair {
                left: a.left.inverse(),
                right: a.right.inverse(),
            };
            assert!(pairs.contains(&inv));
        }
    }

    /// Enumerated fixture: with monomial R allowed, the canonical W admits
    /// 192 pairs (L is determined by R whenever W R Wᵀ/4 is monomial;
    /// exhaustive 384×384 search).
    #[test]
    fn full_enumeration_is_a_superset() {
        let w = SignMatrix::canonical();
        let full = enumerate_automorphism_pairs_full(&w).unwrap();
        let diag = enumerate_automorphism_pairs(&w).unwrap();
        for p in &diag {
            assert!(full.contains(p));
        }
        assert_eq!(full.len(), 192);
        for p in full.iter() {
            assert!(verify_automorphism(&w, p));
        }
        // Closed under composition, like the diagonal subgroup.
        for a in full.iter().step_by(17) {
            for b in full.iter().step_by(23) {
                assert!(full.contains(&a.compose(b)));
            }
        }
    }

    #[test]
    fn flat_band_spectrum_of_canonical_w() {
        let groups = flat_band_spectrum::<f64>(&SignMatrix::canonical());
        assert_eq!(groups.len(), 2);
        assert!((groups[0].0 + 2.0).abs() < 1e-12);
        assert_eq!(groups[0].1, 4);
        assert!((groups[1].0 - 2.0).abs() < 1e-12);
        assert_eq!(groups[1].1, 4);
    }

    #[test]
    fn flat_band_spectrum_of_all_ones() {
        // Rank-one 4×4 block: singular values {4, 0, 0, 0}, so the 8×8
        // bipartite block has spectrum {−4, 0 ×6, +4}.
        let w = SignMatrix::new([[1; 4]; 4]).unwrap();
        let groups = flat_band_spectrum::<f64>(&w);
        assert_eq!(groups.len(), 3);
        assert!((groups[0].0 + 4.0).abs() < 1e-9 && groups[0].1 == 1);
        assert!(groups[1].0.abs() < 1e-9 && groups[1].1 == 6);
        assert!((groups[2].0 - 4.0).abs() < 1e-9 && groups[2].1 == 1);
        // Traceless: eigenvalue sum is zero.
        let sum: f64 = groups.iter().map(|&(v, m)| v * m as f64).sum();
        assert!(sum.abs() < 1e-9);
    }

    /// Any 4×4 Hadamard admits the same 8-element diagonal-R group: all of
    /// them are monomially equivalent to the canonical choice.
    #[test]
    fn enumeration_for_transformed_hadamard() {
        // Swap two columns and negate a row of the canonical W.
        let base = SignMatrix::canonical().entries;
        let mut entries = base;
        for row in entries.iter_mut() {
            row.swap(1, 3);
        }
        for e in entries[2].iter_mut() {
            *e = -*e;
        }
        let w = SignMatrix::new(entries).unwrap();
        assert!(is_hadamard(&w));
        let pairs = enumerate_automorphism_pairs(&w).unwrap();
        assert_eq!(pairs.len(), 8);
        for a in &pairs {
            assert!(verify_automorphism(&w, a));
            for b in &pairs {
                assert!(pairs.contains(&a.compose(b)));
            }
        }
    }

    #[test]
    fn serialization_roundtrip_is_integer_only() {
        let pair = AutomorphismPair::canonical_example();
        let json = serde_json::to_string(&pair).unwrap();
        assert!(!json.contains('.'), "schema must stay integer-only: {json}");
        let back: AutomorphismPair = serde_json::from_str(&json).unwrap();
        assert_eq!(back, pair);
    }
}
