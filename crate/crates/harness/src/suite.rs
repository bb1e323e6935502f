//! Parallel evaluation of (method, setting) arms over test sets.
//!
//! Work items run on a bounded worker pool; results land in slots indexed by
//! item order, so aggregation and persisted files are canonical regardless
//! of scheduling.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ats_core::datasets::DatasetSplit;
use ats_core::gateway::ChatBackend;
use ats_core::orchestrator::{
    run_self_consistency, run_single, run_tot, Method, RunRecord, RunSetting,
};
use ats_core::prompts::{build_exemplar_set, ExemplarConfig, ExemplarSet, Shot};
use ats_core::puzzles::{PuzzleInstance, PuzzleKind};

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("exemplar construction failed for {kind:?}/{method:?}: {message}")]
    Exemplars {
        kind: PuzzleKind,
        method: Method,
        message: String,
    },
}

/// Exemplar sets per (kind, method), built once from train splits.
pub struct ExemplarBank {
    sets: BTreeMap<(PuzzleKind, Method), ExemplarSet>,
}

impl ExemplarBank {
    pub fn build(
        splits: &[DatasetSplit],
        methods: &[Method],
        count: usize,
        seed: u64,
        cfg: &ExemplarConfig,
    ) -> Result<ExemplarBank, SuiteError> {
        let mut sets = BTreeMap::new();
        for split in splits {
            let pool: Vec<PuzzleInstance> =
                split.train.iter().map(|n| n.instance).collect();
            for &method in methods {
                if method == Method::Tot {
                    continue; // the tree controller builds its own prompts
                }
                let set = build_exemplar_set(split.kind, method, &pool, count, seed, cfg)
                    .map_err(|e| SuiteError::Exemplars {
                        kind: split.kind,
                        method,
                        message: e.to_string(),
                    })?;
                sets.insert((split.kind, method), set);
            }
        }
        Ok(ExemplarBank { sets })
    }

    pub fn get(&self, kind: PuzzleKind, method: Method) -> Option<&ExemplarSet> {
        self.sets.get(&(kind, method))
    }
}

struct WorkItem<'a> {
    instance: &'a PuzzleInstance,
    instance_id: u64,
    method: Method,
    setting: &'a RunSetting,
    exemplars: Option<&'a ExemplarSet>,
}

/// Runs every (method, setting) arm over each split's test set (optionally
/// capped) and returns the records in canonical order: split order, then
/// method, then setting, then instance.
pub fn evaluate_suite(
    splits: &[DatasetSplit],
    methods: &[Method],
    settings: &[RunSetting],
    backend: &dyn ChatBackend,
    concurrency: usize,
    exemplar_bank: &ExemplarBank,
    max_instances: usize,
) -> Vec<RunRecord> {
    let mut items: Vec<WorkItem> = Vec::new();
    for split in splits {
        let take = if max_instances == 0 {
            split.test.len()
        } else {
            max_instances.min(split.test.len())
        };
        for &method in methods {
            for setting in settings {
                let needs_exemplars = setting.shot == Shot::FewShot && method != Method::Tot;
                let exemplars = needs_exemplars
                    .then(|| exemplar_bank.get(split.kind, method))
                    .flatten();
                for numbered in &split.test[..take] {
                    items.push(WorkItem {
                        instance: &numbered.instance,
                        instance_id: numbered.id,
                        method,
                        setting,
                        exemplars,
                    });
                }
            }
        }
    }

    let results: Mutex<Vec<Option<RunRecord>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    let cursor = AtomicUsize::new(0);
    let workers = concurrency.max(1).min(items.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = cursor.fetch_add(1, Ordering::Relaxed);
                if idx >= items.len() {
                    break;
                }
                let item = &items[idx];
                let record = run_item(item, backend);
                results.lock().expect("no poisoned workers")[idx] = Some(record);
            });
        }
    });
    results
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|slot| slot.expect("every slot filled"))
        .collect()
}

fn run_item(item: &WorkItem, backend: &dyn ChatBackend) -> RunRecord {
    match item.method {
        Method::Tot => run_tot(item.instance, item.instance_id, item.setting, backend),
        method if item.setting.self_consistency > 1 => run_self_consistency(
            method,
            item.instance,
            item.instance_id,
            item.setting,
            backend,
            item.exemplars,
        ),
        method => run_single(
            method,
            item.instance,
            item.instance_id,
            item.setting,
            backend,
            item.exemplars,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ats_core::datasets;
    use ats_core::gateway::MockBackend;
    use ats_core::orchestrator::aggregate;

    fn tiny_splits() -> Vec<DatasetSplit> {
        datasets::generate_all(7).unwrap()
    }

    #[test]
    fn suite_is_deterministic_across_concurrency_levels() {
        let splits = tiny_splits();
        let methods = [Method::Cot, Method::Tot];
        let settings = [RunSetting::low_cost(Shot::ZeroShot)];
        let bank = ExemplarBank::build(
            &splits,
            &methods,
            4,
            41,
            &ats_core::prompts::ExemplarConfig::default(),
        )
        .unwrap();
        let backend = MockBackend::default();
        let serial = evaluate_suite(&splits, &methods, &settings, &backend, 1, &bank, 5);
        let parallel = evaluate_suite(&splits, &methods, &settings, &backend, 8, &bank, 5);
        assert_eq!(serial, parallel);
        assert_eq!(serial.len(), 4 * 2 * 5);
        assert_eq!(aggregate(&serial), aggregate(&parallel));
    }

    #[test]
    fn perfect_mock_is_all_correct() {
        let splits = tiny_splits();
        let methods = Method::ALL;
        let settings = [RunSetting::low_cost(Shot::ZeroShot)];
        let bank = ExemplarBank::build(
            &splits,
            &methods,
            4,
            41,
            &ats_core::prompts::ExemplarConfig::default(),
        )
        .unwrap();
        let backend = MockBackend::default();
        let records = evaluate_suite(&splits, &methods, &settings, &backend, 4, &bank, 3);
        assert!(records.iter().all(|r| r.final_verdict.correct));
    }
}
