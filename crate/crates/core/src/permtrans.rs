//! The permutation transforms of blocked matrix multiplication and their
//! diagonal-convergence decompositions.
//!
//! For row-major n×n blocks in n² slots the product machinery uses five
//! permutation families:
//!
//! - `Sigma` (σ): σ(A)[i][j] = A[i][i+j], diagonals −(n−1)..(n−1)
//! - `Tau` (τ): τ(A)[i][j] = A[i+j][j], diagonals {k·n}
//! - `ColShift(k)`: A[i][j] ← A[i][j+k], diagonals {k, k−n}
//! - `RowShift(k)`: A[i][j] ← A[i+k][j], the pure rotation n·k
//! - `Transpose`: A ← Aᵀ, diagonals {(n−1)·t}
//!
//! A diagonal-convergence decomposition rewrites σ (as two one-sided branches)
//! or τ as a product of `⌈(n−1)/n'⌉` factors whose combined distinct diagonal
//! indices are far fewer than the original's, shrinking the rotation-key set
//! at the price of one level per factor. Factor structure: every factor but
//! the leftmost has diagonals only in {0, ±n'} (σ) or {0, n'·n} (τ); the
//! leftmost keeps indices within the target range and is the only one that
//! needs a full baby-step/giant-step evaluation.

use serde::Serialize;
use std::collections::BTreeMap;

use crate::lintrans::DiagonalMap;
use crate::{Error, Result};

/// Permutation transform selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermKind {
    Sigma,
    Tau,
    /// Cyclic column shift by k, 1 ≤ k < n.
    ColShift(usize),
    /// Cyclic row shift by k, 1 ≤ k < n.
    RowShift(usize),
    Transpose,
}

/// Diagonal coordinate D(k, l): position l along generalized diagonal k.
/// `f(N(i,j)) = D(j−i, i)` and `f⁻¹(D(k,l)) = N(l, k+l)`, both mod the matrix
/// side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagCoord {
    pub diag: i64,
    pub pos: usize,
}

pub fn normal_to_diag(dim: usize, row: usize, col: usize) -> DiagCoord {
    DiagCoord { diag: ((col + dim - row) % dim) as i64, pos: row }
}

pub fn diag_to_normal(dim: usize, c: DiagCoord) -> (usize, usize) {
    let k = c.diag.rem_euclid(dim as i64) as usize;
    (c.pos, (k + c.pos) % dim)
}

/// Generate one of the permutation transforms as a DiagonalMap over n² slots.
pub fn gen_perm(kind: PermKind, n: usize) -> Result<DiagonalMap> {
    let dim = n * n;
    let mut map = DiagonalMap::new(dim);
    match kind {
        PermKind::Sigma => {
            for i in 0..n {
                for j in 0..n {
                    map.set_entry(n * i + j, n * i + (i + j) % n, 1.0);
                }
            }
        }
        PermKind::Tau => {
            for i in 0..n {
                for j in 0..n {
                    map.set_entry(n * i + j, n * ((i + j) % n) + j, 1.0);
                }
            }
        }
        PermKind::ColShift(k) => {
            if k == 0 || k >= n {
                return Err(Error::Config(format!("column shift k must be in [1, n), got {k}")));
            }
            for i in 0..n {
                for j in 0..n {
                    map.set_entry(n * i + j, n * i + (j + k) % n, 1.0);
                }
            }
        }
        PermKind::RowShift(k) => {
            if k == 0 || k >= n {
                return Err(Error::Config(format!("row shift k must be in [1, n), got {k}")));
            }
            for i in 0..n {
                for j in 0..n {
                    map.set_entry(n * i + j, n * ((i + k) % n) + j, 1.0);
                }
            }
        }
        PermKind::Transpose => {
            for i in 0..n {
                for j in 0..n {
                    map.set_entry(n * i + j, n * j + i, 1.0);
                }
            }
        }
    }
    Ok(map)
}

/// Which branch of the decomposition a chain carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DcdKind {
    /// σ diagonals ≥ 0.
    SigmaNonNeg,
    /// σ diagonals < 0.
    SigmaNeg,
    Tau,
}

/// A decomposition chain; `factors[0]` is the leftmost matrix of the product,
/// so application to a vector walks the list in reverse.
#[derive(Debug, Clone)]
pub struct DcdChain {
    pub kind: DcdKind,
    /// Target maximum diagonal index: n' for σ branches, n'·n for τ.
    pub target_max_index: usize,
    factors: Vec<DiagonalMap>,
}

impl DcdChain {
    pub fn factors(&self) -> &[DiagonalMap] {
        &self.factors
    }

    pub fn leftmost(&self) -> &DiagonalMap {
        &self.factors[0]
    }

    /// Factors right of the leftmost, in application order (rightmost first).
    pub fn right_factors(&self) -> impl Iterator<Item = &DiagonalMap> {
        self.factors.iter().skip(1).rev()
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Dense product of the factors (leftmost · … · rightmost).
    pub fn product(&self) -> DiagonalMap {
        let mut acc = self.factors[0].clone();
        for f in &self.factors[1..] {
            acc = acc.matmul_map(f);
        }
        acc
    }

    /// Distinct nonzero diagonal indices across all factors.
    pub fn distinct_indices(&self) -> std::collections::BTreeSet<usize> {
        self.factors.iter().flat_map(|f| f.indices()).collect()
    }
}

/// Decompose the `diag`-th diagonal (1-positions listed in `positions`) onto
/// diagonal `right_diag` of the right factor and `left_diag = diag −
/// right_diag` of the left factor, per the diagonal-coordinate rules:
/// right gets D(k₁, k+l−k₁), left gets D(k₂, l).
pub fn decompose_diagonal(
    dim: usize,
    diag: i64,
    positions: &[usize],
    right_diag: i64,
    left_diag: i64,
    right: &mut DiagonalMap,
    left: &mut DiagonalMap,
) -> Result<()> {
    let d = dim as i64;
    if (right_diag + left_diag - diag).rem_euclid(d) != 0 {
        return Err(Error::Config(format!(
            "split {right_diag} + {left_diag} does not recompose diagonal {diag}"
        )));
    }
    for &l in positions {
        // Right gets the cell on `right_diag` sharing the source's column;
        // routing cells may be shared by several sources of one column class.
        let rpos = (diag + l as i64 - right_diag).rem_euclid(d) as usize;
        let (rr, rc) = diag_to_normal(dim, DiagCoord { diag: right_diag, pos: rpos });
        if right.entry(rr, rc) != 0.0 && right.entry(rr, rc) != 1.0 {
            return Err(Error::DecompositionConflict { diag, pos: l });
        }
        right.set_entry(rr, rc, 1.0);

        // Left gets the cell on `left_diag` sharing the source's row; two
        // sources landing on one left cell would merge rows, so that is a
        // conflict.
        let (lr, lc) = diag_to_normal(dim, DiagCoord { diag: left_diag, pos: l });
        if left.entry(lr, lc) == 1.0 {
            return Err(Error::DecompositionConflict { diag, pos: l });
        }
        left.set_entry(lr, lc, 1.0);
    }
    Ok(())
}

fn chain_factor_count(n: usize, target: usize) -> usize {
    (n - 1).div_ceil(target)
}

/// Diagonal-convergence decomposition of σ into two branch chains
/// (non-negative and negative diagonals), each a product of ⌈(n−1)/n'⌉
/// factors. Branch reconstruction: σ = Π chain₁ + Π chain₂ exactly.
pub fn dcd_for_sigma(n: usize, target: usize) -> Result<(DcdChain, DcdChain)> {
    if target < 1 || target > n - 1 {
        return Err(Error::Config(format!("target index must be in [1, n-1], got {target}")));
    }
    let sigma = gen_perm(PermKind::Sigma, n)?;
    let dim = n * n;
    let mut pos_branch = DiagonalMap::new(dim);
    let mut neg_branch = DiagonalMap::new(dim);
    for l in sigma.indices().collect::<Vec<_>>() {
        let signed = sigma.to_signed(l);
        let vec = sigma.diag(l as i64).unwrap().clone();
        if signed >= 0 {
            pos_branch.insert_diag(signed, vec);
        } else {
            neg_branch.insert_diag(signed, vec);
        }
    }
    let steps = chain_factor_count(n, target) - 1;
    let c1 = decompose_branch(pos_branch, target as i64, steps, DcdKind::SigmaNonNeg)?;
    let c2 = decompose_branch(neg_branch, target as i64, steps, DcdKind::SigmaNeg)?;
    Ok((c1, c2))
}

/// One branch decomposition. The non-negative branch moves every diagonal
/// with k ≥ n' onto (left k−n', right n'); the negative branch moves k < −n'
/// onto (left k+n', right −n'). Everything else stays in the left factor over
/// a zero-diagonal right.
fn decompose_branch(
    branch: DiagonalMap,
    target: i64,
    steps: usize,
    kind: DcdKind,
) -> Result<DcdChain> {
    let dim = branch.dim();
    let mut current = branch;
    let mut rights: Vec<DiagonalMap> = Vec::new();
    for _ in 0..steps {
        let mut left = DiagonalMap::new(dim);
        let mut right = DiagonalMap::new(dim);
        for l in current.indices().collect::<Vec<_>>() {
            let k = current.to_signed(l);
            let positions: Vec<usize> = current
                .diag(k)
                .unwrap()
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, _)| i)
                .collect();
            let moves = match kind {
                DcdKind::SigmaNonNeg => k >= target,
                DcdKind::SigmaNeg => k < -target,
                DcdKind::Tau => unreachable!(),
            };
            let (rd, ld) = if moves {
                let sign = if k >= 0 { 1 } else { -1 };
                (sign * target, k - sign * target)
            } else {
                (0, k)
            };
            decompose_diagonal(dim, k, &positions, rd, ld, &mut right, &mut left)?;
        }
        rights.push(right);
        current = left;
    }
    let mut factors = vec![current];
    factors.extend(rights.into_iter().rev());
    Ok(DcdChain { kind, target_max_index: target as usize, factors })
}

/// Diagonal-convergence decomposition of τ into a single chain of
/// ⌈(n−1)/n'⌉ factors with diagonal indices in {0, n'·n} off the leftmost.
pub fn dcd_for_tau(n: usize, target: usize) -> Result<DcdChain> {
    if target < 1 || target > n - 1 {
        return Err(Error::Config(format!("target index must be in [1, n-1], got {target}")));
    }
    let tau = gen_perm(PermKind::Tau, n)?;
    let dim = n * n;
    let steps = chain_factor_count(n, target) - 1;
    let mut current = tau;
    let mut rights: Vec<DiagonalMap> = Vec::new();
    for _ in 0..steps {
        let mut left = DiagonalMap::new(dim);
        let mut right = DiagonalMap::new(dim);
        for l in current.indices().collect::<Vec<_>>() {
            let mult = (l / n) as i64; // diagonal index in units of n
            let positions: Vec<usize> = current
                .diag(l as i64)
                .unwrap()
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, _)| i)
                .collect();
            let (rd, ld) = if mult >= target as i64 {
                ((target * n) as i64, (mult - target as i64) * n as i64)
            } else {
                (0, l as i64)
            };
            decompose_diagonal(dim, l as i64, &positions, rd, ld, &mut right, &mut left)?;
        }
        rights.push(right);
        current = left;
    }
    let mut factors = vec![current];
    factors.extend(rights.into_iter().rev());
    Ok(DcdChain { kind: DcdKind::Tau, target_max_index: target * n, factors })
}

/// Exact reconstruction check: the sum of the chain products must equal the
/// original map element-wise.
pub fn verify_chain(chains: &[&DcdChain], original: &DiagonalMap) -> bool {
    let mut sum: Option<DiagonalMap> = None;
    for c in chains {
        let p = c.product();
        sum = Some(match sum {
            None => p,
            Some(s) => s.add_map(&p),
        });
    }
    match sum {
        Some(s) => s == *original,
        None => original.num_diags() == 0 || *original == DiagonalMap::identity(original.dim()),
    }
}

/// JSON description of chains: per factor, signed diagonal index → positions
/// of the 1 entries.
#[derive(Debug, Serialize)]
pub struct ChainJson {
    pub kind: DcdKind,
    pub target_max_index: usize,
    pub factors: Vec<BTreeMap<i64, Vec<usize>>>,
}

pub fn chain_to_json(chain: &DcdChain) -> ChainJson {
    let factors = chain
        .factors()
        .iter()
        .map(|f| {
            let mut m: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
            for l in f.indices() {
                let signed = f.to_signed(l);
                let positions: Vec<usize> = f
                    .diag(signed)
                    .unwrap()
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(i, _)| i)
                    .collect();
                m.insert(signed, positions);
            }
            m
        })
        .collect();
    ChainJson { kind: chain.kind, target_max_index: chain.target_max_index, factors }
}
