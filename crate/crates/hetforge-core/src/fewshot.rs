//! Few-shot episode sampling.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::adapt::{FewShotTask, TaskKind};
use crate::error::{Error, Result};
use crate::rng::{derive, Rng};

/// Draw a |C|-way K-shot task: K instances per class into the support set,
/// the rest pooled, shuffled, and bisected into validation and test (an odd
/// remainder goes to validation). Every class must have at least K + 2
/// labeled instances.
pub fn sample_few_shot(
    labels: &[(usize, usize)],
    n_classes: usize,
    k_shot: usize,
    seed: u64,
    kind: TaskKind,
    hop_radius: usize,
) -> Result<FewShotTask> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(id, class) in labels {
        if class >= n_classes {
            return Err(Error::RowIndex { op: "sample_few_shot", index: class, rows: n_classes });
        }
        by_class.entry(class).or_default().push(id);
    }
    for class in 0..n_classes {
        let have = by_class.get(&class).map_or(0, Vec::len);
        if have < k_shot + 2 {
            return Err(Error::InsufficientInstances { class, have, need: k_shot + 2 });
        }
    }

    let mut rng = Rng::new(derive(seed, "fewshot"));
    let mut support = Vec::with_capacity(n_classes * k_shot);
    let mut pool: Vec<(usize, usize)> = Vec::new();
    for class in 0..n_classes {
        let mut ids = by_class.remove(&class).unwrap();
        ids.sort_unstable(); // canonical base order regardless of caller order
        rng.shuffle(&mut ids);
        for &id in &ids[..k_shot] {
            support.push((id, class));
        }
        pool.extend(ids[k_shot..].iter().map(|&id| (id, class)));
    }
    pool.sort_unstable();
    rng.shuffle(&mut pool);
    let n_val = pool.len() - pool.len() / 2; // odd remainder goes to validation
    let test = pool.split_off(n_val);

    let task = FewShotTask {
        n_classes,
        k_shot,
        support,
        val: pool,
        test,
        kind,
        hop_radius,
    };
    task.validate()?;
    Ok(task)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn labels(n: usize, n_classes: usize) -> Vec<(usize, usize)> {
        (0..n).map(|i| (i, i % n_classes)).collect()
    }

    #[test]
    fn support_size_is_classes_times_shots() {
        let task = sample_few_shot(&labels(30, 3), 3, 1, 7, TaskKind::Node, 2).unwrap();
        assert_eq!(task.support.len(), 3);
        task.validate().unwrap();
    }

    #[test]
    fn class_with_too_few_instances_is_named() {
        // class 1 has exactly k instances, needs k + 2
        let lab = vec![(0, 0), (1, 0), (2, 0), (3, 0), (4, 1), (5, 1)];
        let got = sample_few_shot(&lab, 2, 2, 7, TaskKind::Node, 2);
        assert_eq!(got, Err(Error::InsufficientInstances { class: 1, have: 2, need: 4 }));
    }

    #[test]
    fn hundred_nodes_split_45_45() {
        let task = sample_few_shot(&labels(100, 2), 2, 5, 3, TaskKind::Node, 2).unwrap();
        assert_eq!(task.support.len(), 10);
        assert_eq!(task.val.len(), 45);
        assert_eq!(task.test.len(), 45);
    }

    #[test]
    fn odd_remainder_goes_to_validation() {
        // 17 labeled, k = 1 each class -> 15 remaining: 8 val, 7 test
        let lab: Vec<(usize, usize)> =
            (0..17).map(|i| (i, if i < 9 { 0 } else { 1 })).collect();
        let task = sample_few_shot(&lab, 2, 1, 5, TaskKind::Node, 2).unwrap();
        assert_eq!(task.val.len(), 8);
        assert_eq!(task.test.len(), 7);
    }

    #[test]
    fn sampling_is_deterministic_and_seed_sensitive() {
        let lab = labels(40, 2);
        let a = sample_few_shot(&lab, 2, 2, 11, TaskKind::Node, 2).unwrap();
        let b = sample_few_shot(&lab, 2, 2, 11, TaskKind::Node, 2).unwrap();
        let c = sample_few_shot(&lab, 2, 2, 12, TaskKind::Node, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
