//! Seeded fold assignment shared by the lambda search and the
//! cross-validated calibration pipeline.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CalibError, Result};

/// Assign each row to a fold in `0..k`, stratified by class: rows of each
/// class are shuffled and dealt round-robin, with the dealing position
/// carried across classes so overall fold sizes also differ by at most one.
pub(crate) fn stratified_folds(
    labels: &[usize],
    n_classes: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let n = labels.len();
    if k > n {
        return Err(CalibError::TooManyFolds { folds: k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut assignment = vec![0usize; n];
    let mut next_fold = 0usize;
    for indices in &mut by_class {
        indices.shuffle(&mut rng);
        for &i in indices.iter() {
            assignment[i] = next_fold;
            next_fold = (next_fold + 1) % k;
        }
    }
    Ok(assignment)
}

/// Unstratified assignment: a single shuffle dealt round-robin.
pub(crate) fn unstratified_folds(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k > n {
        return Err(CalibError::TooManyFolds { folds: k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut assignment = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        assignment[i] = pos % k;
    }
    Ok(assignment)
}

/// Check that, for every fold, the rows outside it still contain every class.
pub(crate) fn check_training_splits_cover_classes(
    assignment: &[usize],
    labels: &[usize],
    n_classes: usize,
    k: usize,
) -> Result<()> {
    // counts[fold][class]
    let mut counts = vec![vec![0usize; n_classes]; k];
    let mut totals = vec![0usize; n_classes];
    for (&fold, &class) in assignment.iter().zip(labels) {
        counts[fold][class] += 1;
        totals[class] += 1;
    }
    for fold in 0..k {
        for class in 0..n_classes {
            if totals[class] == counts[fold][class] {
                return Err(CalibError::DegenerateFold { fold });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_binary_gives_one_of_each_per_fold() {
        let labels = vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let assignment = stratified_folds(&labels, 2, 5, 3).unwrap();
        for fold in 0..5 {
            let members: Vec<usize> = (0..10).filter(|&i| assignment[i] == fold).collect();
            assert_eq!(members.len(), 2);
            let classes: Vec<usize> = members.iter().map(|&i| labels[i]).collect();
            assert!(classes.contains(&0) && classes.contains(&1));
        }
    }

    #[test]
    fn same_seed_same_assignment() {
        let labels: Vec<usize> = (0..97).map(|i| i % 3).collect();
        let a = stratified_folds(&labels, 3, 5, 11).unwrap();
        let b = stratified_folds(&labels, 3, 5, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fold_sizes_balanced_overall_and_per_class() {
        // 3 classes x 7 rows, 5 folds: sizes must differ by at most 1
        // overall and within each class.
        let labels: Vec<usize> = (0..21).map(|i| i / 7).collect();
        let assignment = stratified_folds(&labels, 3, 5, 0).unwrap();
        let mut overall = vec![0usize; 5];
        let mut per_class = vec![vec![0usize; 5]; 3];
        for (i, &f) in assignment.iter().enumerate() {
            overall[f] += 1;
            per_class[labels[i]][f] += 1;
        }
        assert!(overall.iter().max().unwrap() - overall.iter().min().unwrap() <= 1);
        for counts in per_class {
            assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn leave_one_out_is_singletons() {
        let labels = vec![0, 1, 0, 1, 1, 0];
        let assignment = stratified_folds(&labels, 2, 6, 9).unwrap();
        let mut sorted = assignment.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn too_many_folds_is_an_error() {
        let err = stratified_folds(&[0, 1], 2, 3, 0).unwrap_err();
        assert!(matches!(err, CalibError::TooManyFolds { folds: 3, n: 2 }));
    }

    #[test]
    fn single_member_class_degenerates_some_split() {
        let labels = vec![0, 0, 0, 0, 1];
        let assignment = stratified_folds(&labels, 2, 2, 0).unwrap();
        let err =
            check_training_splits_cover_classes(&assignment, &labels, 2, 2).unwrap_err();
        assert!(matches!(err, CalibError::DegenerateFold { .. }));
    }
}
