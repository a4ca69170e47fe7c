//! Diagonal-encoded homomorphic linear transformations.
//!
//! A transform U on the n² slots is stored by its generalized diagonals
//! `u_ℓ[i] = U[i][(ℓ+i) mod n²]`, so that `U·m = Σ_ℓ u_ℓ ⊙ ρ(m; ℓ)`. The
//! naive evaluator pays one full rotation per nonzero diagonal. When the
//! nonzero indices sit on an arithmetic progression the baby-step/giant-step
//! plan regroups the sum as
//!
//! ```text
//!   U·m = Σ_i ρ( Σ_j ρ(u_{a(d1·i+j)}; −a·d1·i) ⊙ ρ(m; a·j) ; a·d1·i )
//! ```
//!
//! and the double-hoisted evaluator shares one Decompose across the inner
//! rotations, multiplies and accumulates in the extended modulus, and defers
//! each group's ModDown, giving phase counts (d1+G)·(Pm+MS) and (G+1)·(Dp+MD)
//! for G giant groups.

use std::collections::{BTreeMap, BTreeSet};

use crate::engine::{CipherBlock, CostLedger, HoistedBlock, SlotEngine};
use crate::dense::Mat;
use crate::{Error, Result};

/// A linear transform as a sparse map from generalized-diagonal index to the
/// diagonal's slot vector. Indices are stored canonically in [0, dim).
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalMap {
    dim: usize,
    diags: BTreeMap<usize, Vec<f64>>,
}

impl DiagonalMap {
    pub fn new(dim: usize) -> Self {
        DiagonalMap { dim, diags: BTreeMap::new() }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = DiagonalMap::new(dim);
        m.insert_diag(0, vec![1.0; dim]);
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Insert a diagonal; all-zero vectors are dropped.
    pub fn insert_diag(&mut self, index: i64, values: Vec<f64>) {
        assert_eq!(values.len(), self.dim);
        if values.iter().any(|&v| v != 0.0) {
            self.diags.insert(index.rem_euclid(self.dim as i64) as usize, values);
        }
    }

    pub fn diag(&self, index: i64) -> Option<&Vec<f64>> {
        self.diags.get(&index.rem_euclid(self.dim as i64).try_into().unwrap())
    }

    /// Canonical nonzero diagonal indices in [0, dim).
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.diags.keys().copied()
    }

    /// Signed view of an index in the residual class (−dim/2, dim/2].
    pub fn to_signed(&self, index: usize) -> i64 {
        let half = self.dim / 2;
        if index > half {
            index as i64 - self.dim as i64
        } else {
            index as i64
        }
    }

    pub fn signed_indices(&self) -> Vec<i64> {
        self.diags.keys().map(|&k| self.to_signed(k)).collect()
    }

    pub fn num_diags(&self) -> usize {
        self.diags.len()
    }

    /// Extract the generalized diagonals of a dense square matrix.
    pub fn from_dense(m: &Mat) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::Shape { expected: m.rows * m.rows, got: m.rows * m.cols });
        }
        let dim = m.rows;
        let mut out = DiagonalMap::new(dim);
        for l in 0..dim {
            let v: Vec<f64> = (0..dim).map(|i| m[(i, (l + i) % dim)]).collect();
            out.insert_diag(l as i64, v);
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Mat {
        let mut m = Mat::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    /// Nonzero entries as (row, col, value).
    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (&l, vec) in &self.diags {
            for (i, &v) in vec.iter().enumerate() {
                if v != 0.0 {
                    out.push((i, (i + l) % self.dim, v));
                }
            }
        }
        out
    }

    pub fn set_entry(&mut self, row: usize, col: usize, value: f64) {
        let l = (col + self.dim - row) % self.dim;
        let vec = self.diags.entry(l).or_insert_with(|| vec![0.0; self.dim]);
        vec[row] = value;
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let l = (col + self.dim - row) % self.dim;
        self.diags.get(&l).map_or(0.0, |v| v[row])
    }

    /// Matrix product `self · other` on the sparse entries.
    pub fn matmul_map(&self, other: &DiagonalMap) -> DiagonalMap {
        assert_eq!(self.dim, other.dim);
        // index `other` by row
        let mut rows: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
        for (r, c, v) in other.entries() {
            rows.entry(r).or_default().push((c, v));
        }
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (r, a, v) in self.entries() {
            if let Some(cols) = rows.get(&a) {
                for &(c, w) in cols {
                    *acc.entry((r, c)).or_insert(0.0) += v * w;
                }
            }
        }
        let mut out = DiagonalMap::new(self.dim);
        for ((r, c), v) in acc {
            if v != 0.0 {
                out.set_entry(r, c, v);
            }
        }
        out
    }

    /// Entry-wise sum.
    pub fn add_map(&self, other: &DiagonalMap) -> DiagonalMap {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (r, c, v) in other.entries() {
            let cur = out.entry(r, c);
            out.set_entry(r, c, cur + v);
        }
        // drop diagonals that cancelled to zero
        let keep: Vec<usize> = out
            .diags
            .iter()
            .filter(|(_, v)| v.iter().any(|&x| x != 0.0))
            .map(|(&k, _)| k)
            .collect();
        out.diags.retain(|k, _| keep.contains(k));
        out
    }

    /// True when the matrix is boolean with at most one 1 per row and column.
    pub fn is_partial_permutation(&self) -> bool {
        let mut rows = BTreeSet::new();
        let mut cols = BTreeSet::new();
        for (r, c, v) in self.entries() {
            if v != 1.0 {
                return false;
            }
            if !rows.insert(r) || !cols.insert(c) {
                return false;
            }
        }
        true
    }
}

/// Plaintext-side cyclic left rotation, used to pre-rotate diagonal vectors.
pub fn rotate_plain(values: &[f64], step: i64) -> Vec<f64> {
    let n = values.len();
    let k = step.rem_euclid(n as i64) as usize;
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&values[k..]);
    out.extend_from_slice(&values[..k]);
    out
}

/// Baby-step/giant-step plan: inner stride progression `{a·j : 0 ≤ j < d1}`
/// and giant groups at `a·d1·i` for the populated outer indices.
#[derive(Debug, Clone)]
pub struct BsgsPlan {
    stride: i64,
    inner_count: usize,
    outer_lo: i64,
    outer_hi: i64,
    /// populated giant groups: outer index i → list of (j, signed diagonal)
    groups: BTreeMap<i64, Vec<(usize, i64)>>,
    two_sided: bool,
}

impl BsgsPlan {
    pub fn stride(&self) -> i64 {
        self.stride
    }

    /// Inner (baby) loop count d1.
    pub fn inner_count(&self) -> usize {
        self.inner_count
    }

    /// One-sided outer (giant) loop count d2.
    pub fn outer_count(&self) -> usize {
        (-self.outer_lo).max(self.outer_hi + 1) as usize
    }

    pub fn two_sided(&self) -> bool {
        self.two_sided
    }

    /// Number of giant groups the evaluation actually walks.
    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn outer_range(&self) -> (i64, i64) {
        (self.outer_lo, self.outer_hi)
    }
}

/// Build a BSGS plan for `map` with the requested inner loop count.
///
/// The nonzero diagonal indices (in whichever of the unsigned/signed views
/// spans less) must cover a contiguous range of multiples of their stride;
/// maps with holes in the progression are rejected and callers fall back to
/// naive evaluation.
pub fn plan_bsgs(map: &DiagonalMap, inner_count: usize) -> Result<BsgsPlan> {
    if inner_count == 0 {
        return Err(Error::Planning("inner loop count must be >= 1".into()));
    }
    let dim = map.dim() as i64;
    let unsigned: Vec<i64> = map.indices().map(|i| i as i64).collect();
    if unsigned.is_empty() {
        return Err(Error::Planning("map has no nonzero diagonals".into()));
    }
    let signed = map.signed_indices();

    // Candidate (stride, normalized progression) views of the index set:
    // plain unsigned and signed residues divided by their gcd, plus the
    // modular view ℓ ≡ a·t (mod n²) for a = the smallest |signed| index,
    // which covers strides coprime to n² such as the transpose's n−1.
    let mut candidates: Vec<(i64, Vec<i64>)> = Vec::new();
    for idx in [&unsigned, &signed] {
        let stride = idx.iter().fold(0i64, |g, &x| gcd(g, x.abs()));
        let stride = if stride == 0 { 1 } else { stride };
        candidates.push((stride, idx.iter().map(|&x| x / stride).collect()));
    }
    if let Some(a) = signed.iter().filter(|&&x| x != 0).map(|&x| x.abs()).min() {
        if let Some(norm) = modular_progression(&unsigned, a, dim) {
            candidates.push((a, norm));
        }
    }

    let best = candidates
        .into_iter()
        .filter_map(|(stride, norm)| try_plan_view(stride, &norm, inner_count))
        .min_by_key(|p| (p.groups.len(), p.outer_hi - p.outer_lo));
    best.ok_or_else(|| {
        Error::Planning("indices do not form a contiguous progression in any view".into())
    })
}

/// Solve ℓ ≡ a·t (mod dim) for every index, taking the balanced
/// representative of t. Returns None when some index is not reachable.
fn modular_progression(idx: &[i64], a: i64, dim: i64) -> Option<Vec<i64>> {
    let g = gcd(a, dim);
    let a_red = a / g;
    let m = dim / g;
    let inv = mod_inverse(a_red.rem_euclid(m), m)?;
    idx.iter()
        .map(|&l| {
            if l.rem_euclid(g) != 0 {
                return None;
            }
            let t = ((l / g).rem_euclid(m) * inv).rem_euclid(m);
            Some(if t > m / 2 { t - m } else { t })
        })
        .collect()
}

fn mod_inverse(a: i64, m: i64) -> Option<i64> {
    if m <= 1 {
        return None;
    }
    let (mut t, mut new_t) = (0i64, 1i64);
    let (mut r, mut new_r) = (m, a.rem_euclid(m));
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        None
    } else {
        Some(t.rem_euclid(m))
    }
}

fn try_plan_view(stride: i64, norm_list: &[i64], inner_count: usize) -> Option<BsgsPlan> {
    let norm: BTreeSet<i64> = norm_list.iter().copied().collect();
    let lo = *norm.iter().next().unwrap();
    let hi = *norm.iter().next_back().unwrap();
    if (hi - lo + 1) as usize != norm.len() {
        return None;
    }
    let width = (hi - lo + 1) as usize;
    let d1 = inner_count.min(width).max(1) as i64;
    let mut groups: BTreeMap<i64, Vec<(usize, i64)>> = BTreeMap::new();
    for &k in &norm {
        let i = k.div_euclid(d1);
        let j = k.rem_euclid(d1) as usize;
        groups.entry(i).or_default().push((j, k * stride));
    }
    let outer_lo = *groups.keys().next().unwrap();
    let outer_hi = *groups.keys().next_back().unwrap();
    Some(BsgsPlan {
        stride,
        inner_count: d1 as usize,
        outer_lo,
        outer_hi,
        groups,
        two_sided: outer_lo < 0 && outer_hi > 0,
    })
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Rotation steps a plan needs at runtime: the inner progression and the
/// nonzero giant steps. Pre-rotation of the diagonals happens plaintext-side
/// and needs no keys.
pub fn required_steps(plan: &BsgsPlan) -> BTreeSet<i64> {
    let mut steps = BTreeSet::new();
    for j in 1..plan.inner_count as i64 {
        steps.insert(plan.stride * j);
    }
    for &i in plan.groups.keys() {
        if i != 0 {
            steps.insert(plan.stride * plan.inner_count as i64 * i);
        }
    }
    steps
}

/// Rotation steps for naive evaluation: every nonzero diagonal index.
pub fn required_steps_naive(map: &DiagonalMap) -> BTreeSet<i64> {
    map.indices().filter(|&l| l != 0).map(|l| l as i64).collect()
}

/// Evaluate `U·m` one diagonal at a time: one full rotation per nonzero
/// diagonal (index 0 exempt), then masks and a sum. Consumes one level.
pub fn apply_naive(
    engine: &SlotEngine,
    ct: &CipherBlock,
    map: &DiagonalMap,
    ledger: &mut CostLedger,
) -> Result<CipherBlock> {
    if ct.level() == 0 {
        return Err(Error::DepthExhausted { level: 0, needed: 1 });
    }
    let mut terms = Vec::new();
    for l in map.indices().collect::<Vec<_>>() {
        let u = map.diag(l as i64).unwrap();
        let rotated = if l == 0 { ct.clone() } else { engine.rotate(ct, l as i64, ledger)? };
        let mask = engine.encode_plain(u, rotated.level())?;
        terms.push(engine.pmult(&rotated, &mask, ledger)?);
    }
    engine.sum(&terms, ledger)
}

/// Double-hoisted BSGS evaluation of `U·m`.
///
/// One Decompose is shared by all d1 inner rotations; each giant group is
/// combined in the extended modulus with pre-rotated diagonals, ModDown'd,
/// re-decomposed and rotated into the accumulator, which takes its own final
/// ModDown. Ledger: (d1 + G)·(Pm + MS), (G + 1)·(Dp + MD).
pub fn apply_bsgs_dh(
    engine: &SlotEngine,
    ct: &CipherBlock,
    map: &DiagonalMap,
    plan: &BsgsPlan,
    ledger: &mut CostLedger,
) -> Result<CipherBlock> {
    if ct.level() == 0 {
        return Err(Error::DepthExhausted { level: 0, needed: 1 });
    }
    let a = plan.stride;
    let d1 = plan.inner_count as i64;

    let decomposed = engine.hoist_decompose(ct, ledger)?;
    let mut inner: Vec<HoistedBlock> = Vec::with_capacity(plan.inner_count);
    for j in 0..d1 {
        inner.push(engine.hoist_rotate(&decomposed, a * j, ledger)?);
    }

    let mut acc: Option<HoistedBlock> = None;
    for (&i, members) in &plan.groups {
        let giant = a * d1 * i;
        let mut group: Option<HoistedBlock> = None;
        for &(j, diag) in members {
            let u = map
                .diag(diag)
                .ok_or_else(|| Error::Planning(format!("plan references absent diagonal {diag}")))?;
            let pre = rotate_plain(u, -giant);
            let mask = engine.encode_plain(&pre, ct.level())?;
            let term = engine.hoist_pmult(&inner[j], &mask, ledger)?;
            group = Some(match group {
                None => term,
                Some(g) => engine.hoist_add(&g, &term, ledger)?,
            });
        }
        let combined = engine.moddown(group.unwrap(), ledger);
        let re = engine.hoist_decompose(&combined, ledger)?;
        let rotated = engine.hoist_rotate(&re, giant, ledger)?;
        acc = Some(match acc {
            None => rotated,
            Some(g) => engine.hoist_add(&g, &rotated, ledger)?,
        });
    }
    Ok(engine.moddown(acc.unwrap(), ledger))
}

/// Direct hoisted evaluation for maps with few nonzero diagonals (column
/// shifts, decomposition right factors): one shared Decompose, one hoisted
/// rotation per nonzero diagonal, products accumulated in the extended
/// modulus with a single deferred ModDown. The zero diagonal, when present,
/// is a plain masked copy added after the ModDown.
pub fn apply_hoisted_direct(
    engine: &SlotEngine,
    ct: &CipherBlock,
    map: &DiagonalMap,
    ledger: &mut CostLedger,
) -> Result<CipherBlock> {
    if ct.level() == 0 {
        return Err(Error::DepthExhausted { level: 0, needed: 1 });
    }
    let zero_part = match map.diag(0) {
        Some(u) => {
            let mask = engine.encode_plain(u, ct.level())?;
            Some(engine.pmult(ct, &mask, ledger)?)
        }
        None => None,
    };
    let nonzero: Vec<usize> = map.indices().filter(|&l| l != 0).collect();
    if nonzero.is_empty() {
        return zero_part.ok_or_else(|| Error::Planning("empty map".into()));
    }
    let d = engine.hoist_decompose(ct, ledger)?;
    let mut acc: Option<HoistedBlock> = None;
    for l in nonzero {
        let u = map.diag(l as i64).unwrap();
        let h = engine.hoist_rotate(&d, l as i64, ledger)?;
        let mask = engine.encode_plain(u, ct.level())?;
        let t = engine.hoist_pmult(&h, &mask, ledger)?;
        acc = Some(match acc {
            None => t,
            Some(a) => engine.hoist_add(&a, &t, ledger)?,
        });
    }
    let rotated_part = engine.moddown(acc.unwrap(), ledger);
    match zero_part {
        Some(z) => engine.add(&rotated_part, &z, ledger),
        None => Ok(rotated_part),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{EngineConfig, RotKeyRegistry};

    fn engine_all(n: usize, level: u32) -> SlotEngine {
        let cfg = EngineConfig::new(n, level);
        let all: Vec<i64> = (1..(n * n) as i64).collect();
        SlotEngine::new(cfg, RotKeyRegistry::from_steps(n * n, all)).unwrap()
    }

    /// σ permutation (row-major) as a dense matrix, built from first
    /// principles for the oracle:  σ(A)[i][j] = A[i][i+j mod n].
    fn sigma_dense(n: usize) -> Mat {
        let dim = n * n;
        let mut m = Mat::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                m[(n * i + j, n * i + (i + j) % n)] = 1.0;
            }
        }
        m
    }

    /// τ(A)[i][j] = A[i+j mod n][j].
    fn tau_dense(n: usize) -> Mat {
        let dim = n * n;
        let mut m = Mat::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                m[(n * i + j, n * ((i + j) % n) + j)] = 1.0;
            }
        }
        m
    }

    #[test]
    fn identity_map_has_single_ones_diagonal() {
        let m = DiagonalMap::from_dense(&Mat::identity(4)).unwrap();
        assert_eq!(m.num_diags(), 1);
        assert_eq!(m.diag(0).unwrap(), &vec![1.0; 4]);
    }

    #[test]
    fn sigma_diagonals_for_n2() {
        let m = DiagonalMap::from_dense(&sigma_dense(2)).unwrap();
        assert_eq!(m.diag(-1).unwrap(), &vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(m.diag(0).unwrap(), &vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(m.diag(1).unwrap(), &vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(m.num_diags(), 3);
    }

    #[test]
    fn tau_diagonals_for_n2() {
        let m = DiagonalMap::from_dense(&tau_dense(2)).unwrap();
        assert_eq!(m.diag(0).unwrap(), &vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(m.diag(2).unwrap(), &vec![0.0, 1.0, 0.0, 1.0]);
        assert_eq!(m.num_diags(), 2);
    }

    #[test]
    fn non_square_input_is_shape_error() {
        let m = Mat::zeros(2, 3);
        assert!(DiagonalMap::from_dense(&m).is_err());
    }

    #[test]
    fn naive_identity_keeps_slots_spends_level() {
        let e = engine_all(2, 3);
        let mut led = CostLedger::new();
        let ct = e.encode(&[1.0, 2.0, 3.0, 4.0], 3).unwrap();
        let id = DiagonalMap::identity(4);
        let out = apply_naive(&e, &ct, &id, &mut led).unwrap();
        assert_eq!(out.slots(), ct.slots());
        assert_eq!(out.level(), 2);
        assert_eq!(led.phases(), (0, 0, 0, 0));
    }

    #[test]
    fn naive_sigma_tau_match_row_major_oracle() {
        let e = engine_all(2, 3);
        let mut led = CostLedger::new();
        let a = [10.0, 20.0, 30.0, 40.0]; // a00 a01 a10 a11
        let ct = e.encode(&a, 3).unwrap();
        let z = DiagonalMap::from_dense(&sigma_dense(2)).unwrap();
        let out = apply_naive(&e, &ct, &z, &mut led).unwrap();
        // σ(A)[i][j] = A[i][i+j]: rows (a00,a01),(a11,a10)
        assert_eq!(out.slots(), &[10.0, 20.0, 40.0, 30.0]);

        let t = DiagonalMap::from_dense(&tau_dense(2)).unwrap();
        let out = apply_naive(&e, &ct, &t, &mut led).unwrap();
        // τ(A)[i][j] = A[i+j][j]: rows (a00,a11),(a10,a01)
        assert_eq!(out.slots(), &[10.0, 40.0, 30.0, 20.0]);
    }

    #[test]
    fn plan_for_tau_n128() {
        let n = 128usize;
        let dim = n * n;
        let mut map = DiagonalMap::new(dim);
        for k in 0..n {
            map.insert_diag((k * n) as i64, vec![1.0; dim]);
        }
        let plan = plan_bsgs(&map, 16).unwrap();
        assert_eq!(plan.stride(), n as i64);
        assert_eq!(plan.inner_count(), 16);
        assert_eq!(plan.outer_count(), 8);
        assert!(!plan.two_sided());
    }

    #[test]
    fn plan_for_sigma_n128() {
        let n = 128i64;
        let dim = (n * n) as usize;
        let mut map = DiagonalMap::new(dim);
        for k in -(n - 1)..n {
            map.insert_diag(k, vec![1.0; dim]);
        }
        let plan = plan_bsgs(&map, 8).unwrap();
        assert_eq!(plan.stride(), 1);
        assert_eq!(plan.inner_count(), 8);
        assert_eq!(plan.outer_count(), 16);
        assert!(plan.two_sided());
        // keys: inner n1−1 plus nonzero outers
        assert_eq!(required_steps(&plan).len(), 8 + 2 * 16 - 2);
    }

    #[test]
    fn plan_identity_is_one_by_one() {
        let id = DiagonalMap::identity(16);
        let plan = plan_bsgs(&id, 8).unwrap();
        assert_eq!(plan.inner_count(), 1);
        assert_eq!(plan.outer_count(), 1);
        assert!(required_steps(&plan).is_empty());
    }

    #[test]
    fn plan_rejects_holes() {
        let mut map = DiagonalMap::new(64);
        map.insert_diag(3, vec![1.0; 64]);
        map.insert_diag(-5, vec![1.0; 64]);
        assert!(matches!(plan_bsgs(&map, 2), Err(Error::Planning(_))));
    }

    #[test]
    fn bsgs_matches_naive_on_random_maps() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 4, 8] {
            let dim = n * n;
            let e = engine_all(n, 4);
            // full two-sided progression like σ
            let mut map = DiagonalMap::new(dim);
            for k in -(n as i64 - 1)..n as i64 {
                let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                map.insert_diag(k, v);
            }
            let input: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ct = e.encode(&input, 4).unwrap();
            let mut l1 = CostLedger::new();
            let naive = apply_naive(&e, &ct, &map, &mut l1).unwrap();
            let plan = plan_bsgs(&map, 2.max(n / 2)).unwrap();
            let mut l2 = CostLedger::new();
            let fast = apply_bsgs_dh(&e, &ct, &map, &plan, &mut l2).unwrap();
            for (x, y) in naive.slots().iter().zip(fast.slots()) {
                assert!((x - y).abs() < 1e-12, "n={n}");
            }
            assert_eq!(fast.level(), ct.level() - 1);
        }
    }

    #[test]
    fn bsgs_ledger_matches_closed_forms() {
        // τ-shaped map, n=128, n1=16: (Pm,MS) = n1+n2 = 24, (Dp,MD) = n2+1 = 9
        let n = 128usize;
        let dim = n * n;
        let mut tau = DiagonalMap::new(dim);
        for k in 0..n {
            tau.insert_diag((k * n) as i64, vec![1.0; dim]);
        }
        let e = engine_all(n, 2);
        let ct = e.encode(&vec![1.0; dim], 2).unwrap();
        let plan = plan_bsgs(&tau, 16).unwrap();
        let mut led = CostLedger::new();
        apply_bsgs_dh(&e, &ct, &tau, &plan, &mut led).unwrap();
        assert_eq!(led.phases(), (9, 24, 24, 9));

        // σ-shaped map, n=128, n1=8: (Pm,MS) = n1+2n2 = 40, (Dp,MD) = 2n2+1 = 33
        let mut sigma = DiagonalMap::new(dim);
        for k in -(n as i64 - 1)..n as i64 {
            sigma.insert_diag(k, vec![1.0; dim]);
        }
        let plan = plan_bsgs(&sigma, 8).unwrap();
        let mut led = CostLedger::new();
        apply_bsgs_dh(&e, &ct, &sigma, &plan, &mut led).unwrap();
        assert_eq!(led.phases(), (33, 40, 40, 33));
    }

    #[test]
    fn key_sets_match_min_rot_keys() {
        // T at n=128, n1=16: n1+n2−2 = 22
        let n = 128usize;
        let dim = n * n;
        let mut tau = DiagonalMap::new(dim);
        for k in 0..n {
            tau.insert_diag((k * n) as i64, vec![1.0; dim]);
        }
        let plan = plan_bsgs(&tau, 16).unwrap();
        assert_eq!(required_steps(&plan).len(), 16 + 8 - 2);
    }

    #[test]
    fn removing_any_required_key_breaks_bsgs() {
        let n = 8usize;
        let dim = n * n;
        let mut sigma = DiagonalMap::new(dim);
        for k in -(n as i64 - 1)..n as i64 {
            sigma.insert_diag(k, vec![1.0; dim]);
        }
        let plan = plan_bsgs(&sigma, 2).unwrap();
        let steps = required_steps(&plan);
        let cfg = EngineConfig::new(n, 3);
        // with the exact set, evaluation succeeds
        let reg = RotKeyRegistry::from_steps(dim, steps.iter().copied());
        let e = SlotEngine::new(cfg, reg).unwrap();
        let ct = e.encode(&vec![1.0; dim], 3).unwrap();
        let mut led = CostLedger::new();
        assert!(apply_bsgs_dh(&e, &ct, &sigma, &plan, &mut led).is_ok());
        // removing any one step breaks it
        for &victim in &steps {
            let mut reg = RotKeyRegistry::from_steps(dim, steps.iter().copied());
            assert!(reg.remove(victim));
            let e = SlotEngine::new(cfg, reg).unwrap();
            let ct = e.encode(&vec![1.0; dim], 3).unwrap();
            let mut led = CostLedger::new();
            match apply_bsgs_dh(&e, &ct, &sigma, &plan, &mut led) {
                Err(Error::KeyMissing { .. }) => {}
                other => panic!("expected KeyMissing after removing {victim}, got {other:?}"),
            }
        }
    }
}
