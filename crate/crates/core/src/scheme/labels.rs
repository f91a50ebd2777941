//! Label and counter assignment for keyword roots.

use serde::{Deserialize, Serialize};

use super::{Hashing, SchemeError, SchemeParams};
use crate::corpus::{Dataset, DocId, Keyword};

/// Label and counter of one keyword root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootSlot {
    pub keyword: Keyword,
    pub label: u32,
    pub counter: u32,
}

/// Per-document root slots, aligned with each document's keyword list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelingPlan {
    slots: Vec<Vec<RootSlot>>,
    doc_labels: Vec<Vec<u32>>,
}

impl LabelingPlan {
    pub fn slots(&self, id: DocId) -> &[RootSlot] {
        &self.slots[id as usize - 1]
    }

    /// Labels the server checks for document `id`.
    pub fn doc_labels(&self, id: DocId) -> &[u32] {
        &self.doc_labels[id as usize - 1]
    }

    pub fn slot_of(&self, id: DocId, w: Keyword) -> Option<RootSlot> {
        self.slots(id).iter().copied().find(|s| s.keyword == w)
    }

    /// Largest counter handed out, plus one (the smallest budget that fits this plan).
    pub fn required_countermax(&self) -> u32 {
        self.slots
            .iter()
            .flatten()
            .map(|s| s.counter + 1)
            .max()
            .unwrap_or(1)
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

/// Hands out counters first-come per `(w, l)` in document order. Fails as soon
/// as a counter would reach `countermax`.
pub fn assign_labels_and_counters(
    ds: &Dataset,
    params: &SchemeParams,
) -> Result<LabelingPlan, SchemeError> {
    assign(ds, params, Some(params.countermax))
}

/// The smallest `countermax` for which [`assign_labels_and_counters`] succeeds
/// under these hash keys and hashing mode.
pub fn tightest_countermax(ds: &Dataset, params: &SchemeParams) -> u32 {
    assign(ds, params, None)
        .expect("unbounded assignment cannot fail")
        .required_countermax()
}

fn assign(
    ds: &Dataset,
    params: &SchemeParams,
    budget: Option<u32>,
) -> Result<LabelingPlan, SchemeError> {
    let labels = params.label_space as usize;
    let mut load = vec![0u32; ds.universe_size() * labels];
    let idx = |w: Keyword, l: u32| (w as usize - 1) * labels + (l as usize - 1);
    let mut slots = Vec::with_capacity(ds.len());
    let mut doc_labels = Vec::with_capacity(ds.len());
    for d in ds.documents() {
        let h1 = params.h1(d.id);
        let h2 = params.h2(d.id);
        let mut doc_slots = Vec::with_capacity(d.len());
        for &w in &d.keywords {
            let label = match params.hashing {
                Hashing::Single => h1,
                Hashing::Dual => {
                    if load[idx(w, h2)] < load[idx(w, h1)] {
                        h2
                    } else {
                        h1
                    }
                }
            };
            let counter = load[idx(w, label)];
            if budget.is_some_and(|b| counter >= b) {
                return Err(SchemeError::BuildFailure { keyword: w, label });
            }
            load[idx(w, label)] += 1;
            doc_slots.push(RootSlot {
                keyword: w,
                label,
                counter,
            });
        }
        slots.push(doc_slots);
        doc_labels.push(params.doc_labels(d.id));
    }
    Ok(LabelingPlan { slots, doc_labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::compute_stats;

    fn params_for(
        ds: &Dataset,
        hashing: Hashing,
        countermax: u32,
        label_space: u32,
    ) -> SchemeParams {
        let s = compute_stats(ds).unwrap();
        SchemeParams::new(&s, hashing, 0.9, 0.1, countermax, label_space, [3, 4]).unwrap()
    }

    #[test]
    fn shared_keyword_and_label_get_distinct_counters() {
        let ds = Dataset::from_keyword_lists(vec![vec![1], vec![1, 2]], 2).unwrap();
        let p = params_for(&ds, Hashing::Single, 4, 1);
        let plan = assign_labels_and_counters(&ds, &p).unwrap();
        assert_eq!(plan.slot_of(1, 1).unwrap().counter, 0);
        assert_eq!(plan.slot_of(2, 1).unwrap().counter, 1);
        assert_eq!(plan.slot_of(2, 2).unwrap().counter, 0);
    }

    #[test]
    fn pigeonhole_failure() {
        let ds = Dataset::from_keyword_lists(vec![vec![1], vec![1], vec![1]], 1).unwrap();
        let p = params_for(&ds, Hashing::Single, 1, 1);
        match assign_labels_and_counters(&ds, &p) {
            Err(SchemeError::BuildFailure { keyword, label }) => {
                assert_eq!((keyword, label), (1, 1))
            }
            other => panic!("expected failure, got {other:?}"),
        }
        assert_eq!(tightest_countermax(&ds, &p), 3);
    }

    #[test]
    fn dual_picks_less_loaded_label() {
        let lists = vec![vec![1]; 40];
        let ds = Dataset::from_keyword_lists(lists, 1).unwrap();
        let p = params_for(&ds, Hashing::Dual, 40, 8);
        let plan = assign_labels_and_counters(&ds, &p).unwrap();
        for d in ds.documents() {
            let s = plan.slot_of(d.id, 1).unwrap();
            assert!(s.label == p.h1(d.id) || s.label == p.h2(d.id));
            assert_eq!(plan.doc_labels(d.id), p.doc_labels(d.id).as_slice());
        }
        let single = params_for(&ds, Hashing::Single, 40, 8);
        assert!(tightest_countermax(&ds, &p) <= tightest_countermax(&ds, &single));
    }

    #[test]
    fn counters_unique_per_keyword_label() {
        let lists = (0..200).map(|i| vec![1 + (i % 3) as u32, 4]).collect();
        let ds = Dataset::from_keyword_lists(lists, 4).unwrap();
        for hashing in [Hashing::Single, Hashing::Dual] {
            let p = params_for(&ds, hashing, 200, 10);
            let plan = assign_labels_and_counters(&ds, &p).unwrap();
            let mut seen = std::collections::HashSet::new();
            for d in ds.documents() {
                for s in plan.slots(d.id) {
                    assert!(seen.insert((s.keyword, s.label, s.counter)));
                    assert!(s.counter < p.countermax);
                }
            }
        }
    }
}
