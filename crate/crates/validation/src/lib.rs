//! Exhaustive reference implementations. They share no code with the crates
//! under test and are only fast enough for small instances.

use std::collections::{BTreeMap, BTreeSet};

/// Largest total of a row-major `rows × cols` weight matrix over every
/// injective partial map from rows to columns.
pub fn best_injective_total(rows: usize, cols: usize, weights: &[f64]) -> f64 {
    assert_eq!(weights.len(), rows * cols);
    fn go(row: usize, rows: usize, cols: usize, w: &[f64], used: &mut [bool]) -> f64 {
        if row == rows {
            return 0.0;
        }
        let mut best = go(row + 1, rows, cols, w, used);
        for c in 0..cols {
            if !used[c] {
                used[c] = true;
                best = best.max(w[row * cols + c] + go(row + 1, rows, cols, w, used));
                used[c] = false;
            }
        }
        best
    }
    go(0, rows, cols, weights, &mut vec![false; cols])
}

/// Clustering accuracy by trying every injective map from the predicted ids
/// to the true classes.
pub fn acc_by_enumeration(predicted: &[u32], truth: &[usize]) -> f64 {
    assert_eq!(predicted.len(), truth.len());
    assert!(!predicted.is_empty());
    let clusters: Vec<u32> = predicted.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let classes: Vec<usize> = truth.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();

    struct Search<'a> {
        clusters: &'a [u32],
        classes: &'a [usize],
        predicted: &'a [u32],
        truth: &'a [usize],
        map: BTreeMap<u32, usize>,
        used: Vec<bool>,
    }
    impl Search<'_> {
        fn go(&mut self, i: usize) -> usize {
            if i == self.clusters.len() {
                return self.predicted.iter().zip(self.truth).filter(|(p, t)| self.map.get(p) == Some(t)).count();
            }
            let mut best = self.go(i + 1);
            for c in 0..self.classes.len() {
                if !self.used[c] {
                    self.used[c] = true;
                    self.map.insert(self.clusters[i], self.classes[c]);
                    best = best.max(self.go(i + 1));
                    self.map.remove(&self.clusters[i]);
                    self.used[c] = false;
                }
            }
            best
        }
    }

    let mut search = Search {
        clusters: &clusters,
        classes: &classes,
        predicted,
        truth,
        map: BTreeMap::new(),
        used: vec![false; classes.len()],
    };
    search.go(0) as f64 / predicted.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracles_on_hand_examples() {
        assert_eq!(best_injective_total(2, 2, &[1.0, 5.0, 4.0, 1.0]), 9.0);
        assert_eq!(best_injective_total(3, 1, &[2.0, 7.0, 3.0]), 7.0);
        assert_eq!(acc_by_enumeration(&[0, 0, 1, 1], &[1, 1, 0, 2]), 0.75);
        assert_eq!(acc_by_enumeration(&[4, 4, 9], &[2, 2, 0]), 1.0);
        assert_eq!(acc_by_enumeration(&[1, 2, 3, 3], &[0, 0, 1, 1]), 0.75);
    }
}
