//! SIMD-slot emulation of an approximate-arithmetic leveled HE scheme.
//!
//! A [`CipherBlock`] models one ciphertext: a vector of n² real slots plus a
//! modulus level, a scale exponent and a cipher/plaintext marker. All
//! arithmetic acts slotwise; multiplications rescale (level − 1) and, in
//! quantized mode, round slots to `precision_bits` fractional bits, which is
//! the deterministic stand-in for rescaling noise.
//!
//! Rotation is modeled with its four key-switching phases so that rotation
//! scheduling strategies (hoisting, double-hoisting) are distinguishable by
//! cost even though every strategy produces identical slots:
//!
//! ```text
//!   Decompose -> Permute -> MultSum -> ModDown
//! ```
//!
//! `rotate` runs all four at once. `hoist_decompose` runs Decompose alone and
//! the result can feed many `hoist_rotate` calls (Permute + MultSum each),
//! which land in an extended-modulus [`HoistedBlock`]; additions and plaintext
//! multiplications are free of phase cost there, and a single [`SlotEngine::moddown`]
//! finishes the batch. Taking the hoisted block by value makes a second
//! moddown unrepresentable.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::{Error, Result};

static ENGINE_IDS: AtomicU64 = AtomicU64::new(1);

/// Parameters of the emulated scheme.
///
/// `n` is the block dimension: every block carries n² slots, standing for the
/// message vector of a ciphertext with N/2 = n² usable slots. `max_level` is
/// the multiplicative depth budget L, `scale_bits` the per-level scale Δ, and
/// `precision_bits` the working fractional precision applied when `quantize`
/// is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub n: usize,
    pub max_level: u32,
    pub scale_bits: u32,
    pub precision_bits: u32,
    pub quantize: bool,
    /// Per-key size used by key-space reports. Absolute key bytes depend on
    /// RNS parameters the emulator does not model, so reports should be read
    /// as ratios.
    pub key_bytes: u64,
}

impl EngineConfig {
    pub fn new(n: usize, max_level: u32) -> Self {
        EngineConfig {
            n,
            max_level,
            scale_bits: 40,
            precision_bits: 20,
            quantize: false,
            key_bytes: 1 << 20,
        }
    }

    pub fn quantized(mut self) -> Self {
        self.quantize = true;
        self
    }

    pub fn slots(&self) -> usize {
        self.n * self.n
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || !self.n.is_power_of_two() {
            return Err(Error::Config(format!(
                "block dimension must be a power of two >= 2, got {}",
                self.n
            )));
        }
        if self.max_level < 1 {
            return Err(Error::Config("max_level must be >= 1".into()));
        }
        if self.precision_bits < 1 {
            return Err(Error::Config("precision_bits must be >= 1".into()));
        }
        Ok(())
    }
}

/// An emulated ciphertext (or plaintext operand, when `is_cipher` is false).
#[derive(Debug, Clone, PartialEq)]
pub struct CipherBlock {
    slots: Vec<f64>,
    level: u32,
    scale: u32,
    is_cipher: bool,
    engine_id: u64,
}

impl CipherBlock {
    pub fn slots(&self) -> &[f64] {
        &self.slots
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn is_cipher(&self) -> bool {
        self.is_cipher
    }
}

/// Result of the shared Decompose phase; reusable across many rotations of
/// the same block.
#[derive(Debug, Clone)]
pub struct DecomposedBlock {
    source: CipherBlock,
}

impl DecomposedBlock {
    pub fn level(&self) -> u32 {
        self.source.level
    }
}

/// Extended-modulus intermediate with its ModDown still pending.
#[derive(Debug, Clone)]
pub struct HoistedBlock {
    slots: Vec<f64>,
    level: u32,
    scale: u32,
    engine_id: u64,
}

impl HoistedBlock {
    pub fn level(&self) -> u32 {
        self.level
    }
}

/// Set of registered rotation steps, normalized mod n².
#[derive(Debug, Clone, Default)]
pub struct RotKeyRegistry {
    steps: BTreeSet<usize>,
    slots: usize,
}

impl RotKeyRegistry {
    /// Build a registry over `slots` positions. Steps are normalized modulo
    /// the slot count; a step of 0 is dropped (no key needed).
    pub fn from_steps<I: IntoIterator<Item = i64>>(slots: usize, steps: I) -> Self {
        let mut set = BTreeSet::new();
        for s in steps {
            let norm = s.rem_euclid(slots as i64) as usize;
            if norm != 0 {
                set.insert(norm);
            }
        }
        RotKeyRegistry { steps: set, slots }
    }

    pub fn empty(slots: usize) -> Self {
        RotKeyRegistry { steps: BTreeSet::new(), slots }
    }

    pub fn contains(&self, step: i64) -> bool {
        let norm = step.rem_euclid(self.slots as i64) as usize;
        norm == 0 || self.steps.contains(&norm)
    }

    pub fn key_count(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().copied()
    }

    /// Remove one step; used by key-minimality mutation tests.
    pub fn remove(&mut self, step: i64) -> bool {
        let norm = step.rem_euclid(self.slots as i64) as usize;
        self.steps.remove(&norm)
    }
}

/// Register a key set, recording the generation count in the ledger.
pub fn register_keys<I: IntoIterator<Item = i64>>(
    slots: usize,
    steps: I,
    ledger: &mut CostLedger,
) -> RotKeyRegistry {
    let reg = RotKeyRegistry::from_steps(slots, steps);
    ledger.keys_generated += reg.key_count() as u64;
    reg
}

/// Monotone counters for the rotation phases and the arithmetic operations.
/// Ledgers merge by component-wise addition, so per-worker ledgers can be
/// combined in any order without changing the totals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub decompose: u64,
    pub permute: u64,
    pub mult_sum: u64,
    pub mod_down: u64,
    pub ct_mult: u64,
    pub pt_mult: u64,
    pub adds: u64,
    pub refreshes: u64,
    pub keys_generated: u64,
}

impl CostLedger {
    pub fn new() -> Self {
        CostLedger::default()
    }

    pub fn merge(&mut self, other: &CostLedger) {
        self.decompose += other.decompose;
        self.permute += other.permute;
        self.mult_sum += other.mult_sum;
        self.mod_down += other.mod_down;
        self.ct_mult += other.ct_mult;
        self.pt_mult += other.pt_mult;
        self.adds += other.adds;
        self.refreshes += other.refreshes;
        self.keys_generated += other.keys_generated;
    }

    /// The four phase counters as (Decompose, Permute, MultSum, ModDown).
    pub fn phases(&self) -> (u64, u64, u64, u64) {
        (self.decompose, self.permute, self.mult_sum, self.mod_down)
    }
}

/// The evaluation engine: immutable configuration plus the bound key registry.
#[derive(Debug, Clone)]
pub struct SlotEngine {
    cfg: EngineConfig,
    keys: RotKeyRegistry,
    id: u64,
}

impl SlotEngine {
    pub fn new(cfg: EngineConfig, keys: RotKeyRegistry) -> Result<Self> {
        cfg.validate()?;
        Ok(SlotEngine { cfg, keys, id: ENGINE_IDS.fetch_add(1, Ordering::Relaxed) })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn registry(&self) -> &RotKeyRegistry {
        &self.keys
    }

    pub fn max_level(&self) -> u32 {
        self.cfg.max_level
    }

    pub fn key_space_bytes(&self) -> u64 {
        self.keys.key_count() as u64 * self.cfg.key_bytes
    }

    fn quantize_vec(&self, slots: &mut [f64]) {
        if self.cfg.quantize {
            let f = (1u64 << self.cfg.precision_bits) as f64;
            for s in slots.iter_mut() {
                *s = (*s * f).round() / f;
            }
        }
    }

    fn check_block(&self, b: &CipherBlock) -> Result<()> {
        if b.engine_id != self.id {
            return Err(Error::Config("block is bound to a different engine".into()));
        }
        Ok(())
    }

    fn check_aligned(&self, a: &CipherBlock, b: &CipherBlock) -> Result<()> {
        if a.level != b.level || a.scale != b.scale {
            return Err(Error::Alignment {
                left_level: a.level,
                right_level: b.level,
                left_scale: a.scale,
                right_scale: b.scale,
            });
        }
        Ok(())
    }

    /// Encode a slot vector into a ciphertext block at the given level.
    pub fn encode(&self, values: &[f64], level: u32) -> Result<CipherBlock> {
        self.encode_inner(values, level, true)
    }

    /// Encode a plaintext operand (for `pmult` / plaintext addition).
    pub fn encode_plain(&self, values: &[f64], level: u32) -> Result<CipherBlock> {
        self.encode_inner(values, level, false)
    }

    /// Plaintext block with every slot equal to `c`.
    pub fn constant_plain(&self, c: f64, level: u32) -> CipherBlock {
        self.encode_inner(&vec![c; self.cfg.slots()], level, false).unwrap()
    }

    fn encode_inner(&self, values: &[f64], level: u32, is_cipher: bool) -> Result<CipherBlock> {
        if values.len() != self.cfg.slots() {
            return Err(Error::Shape {
                expected: self.cfg.slots(),
                got: values.len(),
            });
        }
        if level > self.cfg.max_level {
            return Err(Error::Config(format!(
                "level {} exceeds max level {}",
                level, self.cfg.max_level
            )));
        }
        let mut slots = values.to_vec();
        self.quantize_vec(&mut slots);
        Ok(CipherBlock {
            slots,
            level,
            scale: self.cfg.scale_bits,
            is_cipher,
            engine_id: self.id,
        })
    }

    pub fn decode(&self, block: &CipherBlock) -> Vec<f64> {
        block.slots.clone()
    }

    /// Slotwise `a + sign·b`. Levels and scales must already agree.
    pub fn add_sub(
        &self,
        a: &CipherBlock,
        b: &CipherBlock,
        sign: f64,
        ledger: &mut CostLedger,
    ) -> Result<CipherBlock> {
        self.check_block(a)?;
        self.check_block(b)?;
        self.check_aligned(a, b)?;
        let slots = a.slots.iter().zip(&b.slots).map(|(x, y)| x + sign * y).collect();
        ledger.adds += 1;
        Ok(CipherBlock {
            slots,
            level: a.level,
            scale: a.scale,
            is_cipher: a.is_cipher || b.is_cipher,
            engine_id: self.id,
        })
    }

    pub fn add(&self, a: &CipherBlock, b: &CipherBlock, ledger: &mut CostLedger) -> Result<CipherBlock> {
        self.add_sub(a, b, 1.0, ledger)
    }

    pub fn sub(&self, a: &CipherBlock, b: &CipherBlock, ledger: &mut CostLedger) -> Result<CipherBlock> {
        self.add_sub(a, b, -1.0, ledger)
    }

    /// Plaintext multiplication with rescale: level − 1, quantization applied.
    /// The plaintext operand's own level is ignored (plaintexts are encoded at
    /// whatever parameters the ciphertext carries).
    pub fn pmult(
        &self,
        a: &CipherBlock,
        p: &CipherBlock,
        ledger: &mut CostLedger,
    ) -> Result<CipherBlock> {
        self.check_block(a)?;
        self.check_block(p)?;
        if p.is_cipher {
            return Err(Error::Config("pmult operand must be a plaintext block".into()));
        }
        if a.level == 0 {
            return Err(Error::DepthExhausted { level: 0, needed: 1 });
        }
        let mut slots: Vec<f64> = a.slots.iter().zip(&p.slots).map(|(x, y)| x * y).collect();
        self.quantize_vec(&mut slots);
        ledger.pt_mult += 1;
        Ok(CipherBlock {
            slots,
            level: a.level - 1,
            scale: a.scale,
            is_cipher: a.is_cipher,
            engine_id: self.id,
        })
    }

    /// Ciphertext multiplication with rescale and (modeled) relinearization.
    pub fn mult(
        &self,
        a: &CipherBlock,
        b: &CipherBlock,
        ledger: &mut CostLedger,
    ) -> Result<CipherBlock> {
        self.check_block(a)?;
        self.check_block(b)?;
        if !a.is_cipher || !b.is_cipher {
            return Err(Error::Config("mult requires two ciphertext blocks".into()));
        }
        self.check_aligned(a, b)?;
        if a.level == 0 {
            return Err(Error::DepthExhausted { level: 0, needed: 1 });
        }
        let mut slots: Vec<f64> = a.slots.iter().zip(&b.slots).map(|(x, y)| x * y).collect();
        self.quantize_vec(&mut slots);
        ledger.ct_mult += 1;
        Ok(CipherBlock {
            slots,
            level: a.level - 1,
            scale: a.scale,
            is_cipher: true,
            engine_id: self.id,
        })
    }

    fn rotated_slots(slots: &[f64], step: i64) -> Vec<f64> {
        let n = slots.len();
        let k = step.rem_euclid(n as i64) as usize;
        let mut out = Vec::with_capacity(n);
        out.extend_from_slice(&slots[k..]);
        out.extend_from_slice(&slots[..k]);
        out
    }

    fn require_key(&self, step: i64) -> Result<()> {
        if !self.keys.contains(step) {
            let slots = self.cfg.slots() as i64;
            return Err(Error::KeyMissing { step: step.rem_euclid(slots) });
        }
        Ok(())
    }

    /// Cyclic left rotation by `step` over the n² slots; all four phases run.
    /// Step 0 is the identity and costs nothing.
    pub fn rotate(&self, a: &CipherBlock, step: i64, ledger: &mut CostLedger) -> Result<CipherBlock> {
        self.check_block(a)?;
        if !a.is_cipher {
            return Err(Error::Config("rotate requires a ciphertext block".into()));
        }
        if step.rem_euclid(self.cfg.slots() as i64) == 0 {
            return Ok(a.clone());
        }
        self.require_key(step)?;
        ledger.decompose += 1;
        ledger.permute += 1;
        ledger.mult_sum += 1;
        ledger.mod_down += 1;
        Ok(CipherBlock {
            slots: Self::rotated_slots(&a.slots, step),
            level: a.level,
            scale: a.scale,
            is_cipher: true,
            engine_id: self.id,
        })
    }

    /// Decompose phase, shareable across rotations of the same block.
    pub fn hoist_decompose(&self, a: &CipherBlock, ledger: &mut CostLedger) -> Result<DecomposedBlock> {
        self.check_block(a)?;
        if !a.is_cipher {
            return Err(Error::Config("hoist_decompose requires a ciphertext block".into()));
        }
        ledger.decompose += 1;
        Ok(DecomposedBlock { source: a.clone() })
    }

    /// Permute + MultSum on a shared decomposition; result stays in the
    /// extended modulus until `moddown`.
    pub fn hoist_rotate(
        &self,
        d: &DecomposedBlock,
        step: i64,
        ledger: &mut CostLedger,
    ) -> Result<HoistedBlock> {
        if step.rem_euclid(self.cfg.slots() as i64) != 0 {
            self.require_key(step)?;
        }
        ledger.permute += 1;
        ledger.mult_sum += 1;
        Ok(HoistedBlock {
            slots: Self::rotated_slots(&d.source.slots, step),
            level: d.source.level,
            scale: d.source.scale,
            engine_id: d.source.engine_id,
        })
    }

    /// Plaintext multiplication in the extended modulus. Consumes a level per
    /// the engine's rescale schedule; quantization is deferred to moddown.
    pub fn hoist_pmult(
        &self,
        h: &HoistedBlock,
        p: &CipherBlock,
        ledger: &mut CostLedger,
    ) -> Result<HoistedBlock> {
        self.check_block(p)?;
        if p.is_cipher {
            return Err(Error::Config("hoist_pmult operand must be a plaintext block".into()));
        }
        if h.level == 0 {
            return Err(Error::DepthExhausted { level: 0, needed: 1 });
        }
        ledger.pt_mult += 1;
        Ok(HoistedBlock {
            slots: h.slots.iter().zip(&p.slots).map(|(x, y)| x * y).collect(),
            level: h.level - 1,
            scale: h.scale,
            engine_id: h.engine_id,
        })
    }

    pub fn hoist_add(
        &self,
        a: &HoistedBlock,
        b: &HoistedBlock,
        ledger: &mut CostLedger,
    ) -> Result<HoistedBlock> {
        if a.level != b.level || a.scale != b.scale {
            return Err(Error::Alignment {
                left_level: a.level,
                right_level: b.level,
                left_scale: a.scale,
                right_scale: b.scale,
            });
        }
        ledger.adds += 1;
        Ok(HoistedBlock {
            slots: a.slots.iter().zip(&b.slots).map(|(x, y)| x + y).collect(),
            level: a.level,
            scale: a.scale,
            engine_id: a.engine_id,
        })
    }

    /// Final ModDown; consumes the hoisted block, so a second moddown cannot
    /// be expressed. Deferred quantization lands here.
    pub fn moddown(&self, h: HoistedBlock, ledger: &mut CostLedger) -> CipherBlock {
        ledger.mod_down += 1;
        let mut slots = h.slots;
        self.quantize_vec(&mut slots);
        CipherBlock {
            slots,
            level: h.level,
            scale: h.scale,
            is_cipher: true,
            engine_id: h.engine_id,
        }
    }

    /// Modulus refresh: slots unchanged, level restored to L.
    pub fn mod_refresh(&self, a: &CipherBlock, ledger: &mut CostLedger) -> CipherBlock {
        ledger.refreshes += 1;
        CipherBlock {
            slots: a.slots.clone(),
            level: self.cfg.max_level,
            scale: a.scale,
            is_cipher: a.is_cipher,
            engine_id: a.engine_id,
        }
    }

    /// Modulus drop for operand alignment: lowers the level without touching
    /// slots or scale. No phase cost (no key material involved).
    pub fn drop_to_level(&self, a: &CipherBlock, level: u32) -> Result<CipherBlock> {
        self.check_block(a)?;
        if level > a.level {
            return Err(Error::Config(format!(
                "cannot raise level {} to {} by dropping",
                a.level, level
            )));
        }
        let mut out = a.clone();
        out.level = level;
        Ok(out)
    }

    /// Align two blocks to their common (minimum) level.
    pub fn align(&self, a: &CipherBlock, b: &CipherBlock) -> Result<(CipherBlock, CipherBlock)> {
        let lvl = a.level.min(b.level);
        Ok((self.drop_to_level(a, lvl)?, self.drop_to_level(b, lvl)?))
    }

    /// Sum a non-empty list of blocks in slice order, aligning to the lowest
    /// level present. Fixed order keeps results bit-identical across runs.
    pub fn sum(&self, blocks: &[CipherBlock], ledger: &mut CostLedger) -> Result<CipherBlock> {
        let min_level = blocks
            .iter()
            .map(|b| b.level)
            .min()
            .ok_or_else(|| Error::Config("sum of empty block list".into()))?;
        let mut acc = self.drop_to_level(&blocks[0], min_level)?;
        for b in &blocks[1..] {
            let b = self.drop_to_level(b, min_level)?;
            acc = self.add(&acc, &b, ledger)?;
        }
        Ok(acc)
    }
}
