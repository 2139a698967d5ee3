use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::superpixel::WeakNodeLabels;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitRole {
    Train,
    Val,
    Unlabeled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMask(pub Vec<SplitRole>);

impl SplitMask {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self, role: SplitRole) -> usize {
        self.0.iter().filter(|&&r| r == role).count()
    }

    /// Labels restricted to nodes with `role`, everything else ignored.
    pub fn labels_for(&self, weak: &WeakNodeLabels, role: SplitRole) -> Vec<Option<usize>> {
        self.0
            .iter()
            .zip(&weak.0)
            .map(|(&r, &l)| if r == role { l.map(usize::from) } else { None })
            .collect()
    }
}

/// Seeded stratified train/validation split of the labeled nodes.
///
/// The validation size is `round(fraction·L)` (at least 1). It is spread
/// over the classes holding two or more labeled nodes in proportion to
/// their size, by largest remainder, and a class never gives up its last
/// node. Classes with a single labeled node stay entirely in TRAIN.
pub fn split_weak_labels(weak: &WeakNodeLabels, val_fraction: f64, seed: u64) -> Result<SplitMask> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("validation fraction {val_fraction} outside (0, 1)")));
    }
    let labeled = weak.labeled_count();
    if labeled < 2 {
        return Err(Error::InsufficientLabels(labeled));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); 256];
    for (i, l) in weak.0.iter().enumerate() {
        if let Some(c) = l {
            by_class[*c as usize].push(i);
        }
    }
    let capacity: Vec<usize> = by_class.iter().map(|v| v.len().saturating_sub(1)).collect();
    let total_capacity: usize = capacity.iter().sum();
    let target = ((val_fraction * labeled as f64).round() as usize).max(1).min(total_capacity);

    let eligible: usize = by_class.iter().filter(|v| v.len() >= 2).map(|v| v.len()).sum();
    let mut quota = vec![0usize; 256];
    let mut remainders = Vec::new();
    for (c, nodes) in by_class.iter().enumerate() {
        if nodes.len() < 2 {
            continue;
        }
        let ideal = target as f64 * nodes.len() as f64 / eligible as f64;
        quota[c] = (ideal.floor() as usize).min(capacity[c]);
        remainders.push((ideal - ideal.floor(), c));
    }
    // largest remainder first, lower class on ties; loop again while caps bite
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut assigned: usize = quota.iter().sum();
    while assigned < target {
        let before = assigned;
        for &(_, c) in &remainders {
            if assigned < target && quota[c] < capacity[c] {
                quota[c] += 1;
                assigned += 1;
            }
        }
        if assigned == before {
            break;
        }
    }

    let mut roles: Vec<SplitRole> = weak
        .0
        .iter()
        .map(|l| if l.is_some() { SplitRole::Train } else { SplitRole::Unlabeled })
        .collect();
    for (c, nodes) in by_class.iter().enumerate() {
        if quota[c] == 0 {
            continue;
        }
        let mut rng = stream(seed, Purpose::Split, c as u64);
        let mut pick = nodes.clone();
        pick.shuffle(&mut rng);
        for &i in &pick[..quota[c]] {
            roles[i] = SplitRole::Val;
        }
    }
    Ok(SplitMask(roles))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weak(labels: &[Option<u8>]) -> WeakNodeLabels {
        WeakNodeLabels(labels.to_vec())
    }

    #[test]
    fn five_percent_of_hundred() {
        let w = weak(&(0..100).map(|i| Some((i % 4) as u8)).collect::<Vec<_>>());
        let m = split_weak_labels(&w, 0.05, 1).unwrap();
        assert_eq!(m.count(SplitRole::Val), 5);
        assert_eq!(m.count(SplitRole::Train), 95);
    }

    #[test]
    fn singleton_class_stays_train() {
        let mut l: Vec<Option<u8>> = (0..40).map(|_| Some(0)).collect();
        l.push(Some(3));
        l.push(None);
        let w = weak(&l);
        for seed in 0..20 {
            let m = split_weak_labels(&w, 0.5, seed).unwrap();
            assert_eq!(m.0[40], SplitRole::Train);
            assert_eq!(m.0[41], SplitRole::Unlabeled);
        }
    }

    #[test]
    fn seeded_and_varied() {
        let w = weak(&(0..200).map(|i| Some((i % 3) as u8)).collect::<Vec<_>>());
        let a = split_weak_labels(&w, 0.1, 7).unwrap();
        assert_eq!(a, split_weak_labels(&w, 0.1, 7).unwrap());
        let distinct = (0..10).map(|s| split_weak_labels(&w, 0.1, s).unwrap()).filter(|m| *m != a).count();
        assert!(distinct >= 9);
    }

    #[test]
    fn every_class_keeps_a_train_node() {
        let w = weak(&[Some(0), Some(0), Some(1), Some(1), Some(2), Some(2)]);
        let m = split_weak_labels(&w, 0.9, 3).unwrap();
        for c in 0..3 {
            assert!((0..6).any(|i| w.0[i] == Some(c) && m.0[i] == SplitRole::Train));
        }
        assert_eq!(m.count(SplitRole::Val), 3);
    }

    #[test]
    fn too_few_labels() {
        assert!(split_weak_labels(&weak(&[Some(1), None]), 0.05, 0).is_err());
        assert!(split_weak_labels(&weak(&[None; 4]), 0.05, 0).is_err());
        assert!(split_weak_labels(&weak(&[Some(1), Some(1)]), 0.0, 0).is_err());
    }
}
