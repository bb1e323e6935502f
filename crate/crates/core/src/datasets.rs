//! Dataset enumeration, sampling, and train/test splitting.
//!
//! The published counts for the three enumerated puzzles (476 number path,
//! 425 arithmetic, 660 drop water) do not pin down the enumeration rules, so
//! each enumeration here ships a documented default *interpretation* plus a
//! family of nearby variants. [`reconcile`] brute-forces every variant and
//! reports which one (if any) reproduces the published count; the shipped
//! split records the variant in `interpretation_tag`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::oracle::{min_steps_drop_water, solve_arithmetic};
use crate::puzzles::{
    ArithmeticInstance, DropWaterInstance, MinimalGrassInstance, NumberPathInstance,
    PuzzleInstance, PuzzleKind,
};

/// Published dataset sizes, per puzzle: (total, train, test).
pub const PUBLISHED_SIZES: [(PuzzleKind, usize, usize, usize); 4] = [
    (PuzzleKind::DropWater, 660, 578, 82),
    (PuzzleKind::NumberPath, 476, 381, 95),
    (PuzzleKind::Arithmetic, 425, 372, 53),
    (PuzzleKind::MinimalGrass, 400, 300, 100),
];

/// Test-set size per puzzle.
pub fn test_size(kind: PuzzleKind) -> usize {
    PUBLISHED_SIZES
        .iter()
        .find(|(k, ..)| *k == kind)
        .map(|&(_, _, _, t)| t)
        .expect("all kinds listed")
}

/// An instance with its stable id (its index in the canonical enumeration or
/// sampling order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumberedInstance {
    pub id: u64,
    pub instance: PuzzleInstance,
}

/// A train/test partition of one puzzle's instances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub kind: PuzzleKind,
    pub seed: u64,
    pub interpretation_tag: String,
    pub train: Vec<NumberedInstance>,
    pub test: Vec<NumberedInstance>,
}

impl DatasetSplit {
    pub fn all(&self) -> impl Iterator<Item = &NumberedInstance> {
        self.train.iter().chain(self.test.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DatasetError {
    #[error("test size {test_size} exceeds instance count {total}")]
    TestTooLarge { test_size: usize, total: usize },
}

/// Default number-path interpretation: start in [1, 20], goal <= 100, goal
/// reachable in exactly 4 operations, distinct (start, goal) pairs sorted
/// ascending.
pub const NUMBER_PATH_TAG: &str = "start 1..=20, goal <= 100, exactly 4 ops, distinct pairs";

pub fn enumerate_number_path() -> Vec<NumberPathInstance> {
    enumerate_number_path_variant(1, false)
}

fn reachable_exact(start: u64, steps: u32) -> Vec<u64> {
    let mut outs: Vec<u64> = Vec::new();
    for bits in 0u64..(1 << steps) {
        let mut v = start;
        let mut ok = true;
        for k in 0..steps {
            v = if bits >> k & 1 == 0 {
                match v.checked_mul(2) {
                    Some(x) => x,
                    None => {
                        ok = false;
                        break;
                    }
                }
            } else {
                v + 1
            };
        }
        if ok {
            outs.push(v);
        }
    }
    outs.sort_unstable();
    outs.dedup();
    outs
}

fn enumerate_number_path_variant(start_lo: u64, at_most: bool) -> Vec<NumberPathInstance> {
    let mut out = Vec::new();
    for start in start_lo..=20 {
        let mut goals: Vec<u64> = if at_most {
            (1..=4).flat_map(|n| reachable_exact(start, n)).collect()
        } else {
            reachable_exact(start, 4)
        };
        goals.sort_unstable();
        goals.dedup();
        for goal in goals {
            if goal > start && goal <= 100 {
                out.push(NumberPathInstance {
                    start,
                    goal,
                    steps: 4,
                });
            }
        }
    }
    out
}

/// Default arithmetic interpretation: multisets over [1, 12], goals in
/// {6, 8, 12, 16, 18, 24}, oracle-solvable with exact rational `+ - * /`.
pub const ARITHMETIC_TAG: &str =
    "multisets over 1..=12, goals {6,8,12,16,18,24}, rational + - * / solvable";

pub const ARITHMETIC_GOALS: [u32; 6] = [6, 8, 12, 16, 18, 24];

pub fn enumerate_arithmetic() -> Vec<ArithmeticInstance> {
    enumerate_arithmetic_variant(false, false)
}

fn enumerate_arithmetic_variant(distinct_only: bool, no_division: bool) -> Vec<ArithmeticInstance> {
    let mut out = Vec::new();
    for a in 1u32..=12 {
        for b in a..=12 {
            for c in b..=12 {
                if distinct_only && (a == b || b == c) {
                    continue;
                }
                for goal in ARITHMETIC_GOALS {
                    let inst = ArithmeticInstance::new([a, b, c], goal);
                    let solvable = if no_division {
                        solvable_without_division(&inst)
                    } else {
                        solve_arithmetic(&inst).is_some()
                    };
                    if solvable {
                        out.push(inst);
                    }
                }
            }
        }
    }
    out
}

fn solvable_without_division(instance: &ArithmeticInstance) -> bool {
    use crate::puzzles::{apply_move, is_goal, legal_moves, ArithOp, Move};
    let wrapped = PuzzleInstance::Arithmetic(*instance);
    let start = wrapped.initial_state();
    let keep = |m: &Move| !matches!(m, Move::Arithmetic(am) if am.op == ArithOp::Div);
    for first in legal_moves(&wrapped, &start).unwrap().into_iter().filter(keep) {
        let mid = apply_move(&wrapped, &start, &first).unwrap();
        for second in legal_moves(&wrapped, &mid).unwrap().into_iter().filter(keep) {
            let end = apply_move(&wrapped, &mid, &second).unwrap();
            if is_goal(&wrapped, &end, 2) {
                return true;
            }
        }
    }
    false
}

/// Default drop-water interpretation: unordered capacities 5 <= a <= b <= 30,
/// targets reachable within 4 operations excluding the trivial c in {a, b},
/// one case per (a, b, c) with the step limit set to the minimum length.
pub const DROP_WATER_TAG: &str =
    "unordered 5<=a<=b<=30, nontrivial targets, n = min steps within 4";

pub fn enumerate_drop_water() -> Vec<DropWaterInstance> {
    enumerate_drop_water_variant(false, true, false)
}

fn enumerate_drop_water_variant(
    keep_trivial: bool,
    n_is_min: bool,
    target_ge_2: bool,
) -> Vec<DropWaterInstance> {
    let mut out = Vec::new();
    for cap_a in 5u32..=30 {
        for cap_b in cap_a..=30 {
            for target in 1..=cap_b.max(cap_a) {
                if !keep_trivial && (target == cap_a || target == cap_b) {
                    continue;
                }
                if target_ge_2 && target < 2 {
                    continue;
                }
                let Some(min) = min_steps_drop_water(cap_a, cap_b, target) else {
                    continue;
                };
                if min > 4 {
                    continue;
                }
                if n_is_min {
                    out.push(DropWaterInstance {
                        cap_a,
                        cap_b,
                        target,
                        max_steps: min,
                    });
                } else {
                    for max_steps in min..=4 {
                        out.push(DropWaterInstance {
                            cap_a,
                            cap_b,
                            target,
                            max_steps,
                        });
                    }
                }
            }
        }
    }
    out
}

/// `count` distinct area triples drawn uniformly from {1..15}^3 with a seeded
/// generator; deterministic given the seed.
pub fn sample_minimal_grass(count: usize, seed: u64) -> Vec<MinimalGrassInstance> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d67_7261_7373); // domain-separated
    let mut seen: Vec<MinimalGrassInstance> = Vec::with_capacity(count);
    while seen.len() < count {
        let inst = MinimalGrassInstance {
            areas: [
                rng.random_range(1..=15),
                rng.random_range(1..=15),
                rng.random_range(1..=15),
            ],
        };
        if !seen.contains(&inst) {
            seen.push(inst);
        }
    }
    seen
}

/// Uniform sample without replacement of `test_size` instances as the test
/// set, the remainder as train; deterministic given the seed. Ids are the
/// indices in the input order.
pub fn split(
    kind: PuzzleKind,
    instances: Vec<PuzzleInstance>,
    test_size: usize,
    seed: u64,
    interpretation_tag: &str,
) -> Result<DatasetSplit, DatasetError> {
    let total = instances.len();
    if test_size > total {
        return Err(DatasetError::TestTooLarge { test_size, total });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ kind_salt(kind));
    let picked = rand::seq::index::sample(&mut rng, total, test_size);
    let mut is_test = alloc::vec![false; total];
    for idx in picked.iter() {
        is_test[idx] = true;
    }
    let mut train = Vec::with_capacity(total - test_size);
    let mut test = Vec::with_capacity(test_size);
    for (id, instance) in instances.into_iter().enumerate() {
        let numbered = NumberedInstance {
            id: id as u64,
            instance,
        };
        if is_test[id] {
            test.push(numbered);
        } else {
            train.push(numbered);
        }
    }
    Ok(DatasetSplit {
        kind,
        seed,
        interpretation_tag: interpretation_tag.to_string(),
        train,
        test,
    })
}

fn kind_salt(kind: PuzzleKind) -> u64 {
    match kind {
        PuzzleKind::DropWater => 0x6477,
        PuzzleKind::NumberPath => 0x6e70,
        PuzzleKind::Arithmetic => 0x6172,
        PuzzleKind::MinimalGrass => 0x6d67,
    }
}

/// Builds the four splits with paper test sizes under the default
/// interpretations.
pub fn generate_all(seed: u64) -> Result<Vec<DatasetSplit>, DatasetError> {
    let mut out = Vec::with_capacity(4);
    out.push(split(
        PuzzleKind::DropWater,
        enumerate_drop_water()
            .into_iter()
            .map(PuzzleInstance::DropWater)
            .collect(),
        test_size(PuzzleKind::DropWater),
        seed,
        DROP_WATER_TAG,
    )?);
    out.push(split(
        PuzzleKind::NumberPath,
        enumerate_number_path()
            .into_iter()
            .map(PuzzleInstance::NumberPath)
            .collect(),
        test_size(PuzzleKind::NumberPath),
        seed,
        NUMBER_PATH_TAG,
    )?);
    out.push(split(
        PuzzleKind::Arithmetic,
        enumerate_arithmetic()
            .into_iter()
            .map(PuzzleInstance::Arithmetic)
            .collect(),
        test_size(PuzzleKind::Arithmetic),
        seed,
        ARITHMETIC_TAG,
    )?);
    let grass = sample_minimal_grass(400, seed);
    out.push(split(
        PuzzleKind::MinimalGrass,
        grass.into_iter().map(PuzzleInstance::MinimalGrass).collect(),
        test_size(PuzzleKind::MinimalGrass),
        seed,
        "400 distinct uniform triples over 1..=15",
    )?);
    Ok(out)
}

/// One interpretation variant's outcome in the reconciliation report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantCount {
    pub tag: String,
    pub count: usize,
    pub is_default: bool,
}

/// Count-reconciliation report for one puzzle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reconciliation {
    pub kind: PuzzleKind,
    pub published: usize,
    pub variants: Vec<VariantCount>,
    /// Tag of the variant matching the published count, when one exists.
    pub matching: Option<String>,
    /// Tag of the closest variant otherwise.
    pub closest: String,
}

impl Reconciliation {
    fn from_variants(kind: PuzzleKind, published: usize, variants: Vec<VariantCount>) -> Self {
        let matching = variants
            .iter()
            .find(|v| v.count == published)
            .map(|v| v.tag.clone());
        let closest = variants
            .iter()
            .min_by_key(|v| v.count.abs_diff(published))
            .expect("at least one variant")
            .tag
            .clone();
        Reconciliation {
            kind,
            published,
            variants,
            matching,
            closest,
        }
    }

    pub fn render_text(&self) -> String {
        let mut s = format!(
            "{}: published count {}\n",
            self.kind.display_name(),
            self.published
        );
        for v in &self.variants {
            s += &format!(
                "  {} {:>5}  {}\n",
                if v.count == self.published { "=" } else { " " },
                v.count,
                v.tag
            );
        }
        match &self.matching {
            Some(tag) => s += &format!("  matched by: {tag}\n"),
            None => {
                s += &format!(
                    "  NO VARIANT MATCHES; closest: {} (shipping the default)\n",
                    self.closest
                )
            }
        }
        s
    }
}

/// Brute-forces every documented interpretation variant for the three
/// enumerated puzzles.
pub fn reconcile() -> Vec<Reconciliation> {
    let np = |tag: &str, start_lo: u64, at_most: bool, default: bool| VariantCount {
        tag: tag.to_string(),
        count: enumerate_number_path_variant(start_lo, at_most).len(),
        is_default: default,
    };
    let number_path = Reconciliation::from_variants(
        PuzzleKind::NumberPath,
        476,
        alloc::vec![
            np(NUMBER_PATH_TAG, 1, false, true),
            np("start 0..=20, exactly 4 ops", 0, false, false),
            np("start 1..=20, at most 4 ops", 1, true, false),
            np("start 0..=20, at most 4 ops", 0, true, false),
        ],
    );

    let ar = |tag: &str, distinct: bool, no_div: bool, default: bool| VariantCount {
        tag: tag.to_string(),
        count: enumerate_arithmetic_variant(distinct, no_div).len(),
        is_default: default,
    };
    let arithmetic = Reconciliation::from_variants(
        PuzzleKind::Arithmetic,
        425,
        alloc::vec![
            ar(ARITHMETIC_TAG, false, false, true),
            ar("distinct values, + - * /", true, false, false),
            ar("multisets, + - * only", false, true, false),
            ar("distinct values, + - * only", true, true, false),
        ],
    );

    let dw = |tag: &str, trivial: bool, n_min: bool, ge2: bool, default: bool| VariantCount {
        tag: tag.to_string(),
        count: enumerate_drop_water_variant(trivial, n_min, ge2).len(),
        is_default: default,
    };
    let drop_water = Reconciliation::from_variants(
        PuzzleKind::DropWater,
        660,
        alloc::vec![
            dw(DROP_WATER_TAG, false, true, false, true),
            dw("as default but keeping trivial targets", true, true, false, false),
            dw("as default but a case per n in min..=4", false, false, false, false),
            dw("as default but targets >= 2 only", false, true, true, false),
            dw(
                "trivial kept, a case per n in min..=4",
                true,
                false,
                false,
                false
            ),
        ],
    );

    alloc::vec![drop_water, number_path, arithmetic]
}
