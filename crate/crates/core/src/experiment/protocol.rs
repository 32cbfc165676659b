//! Class balancing and stratified train/test splitting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::eeg_io::{Trial, TrialLabel};
use crate::error::{Error, Result};
use crate::featurize::TrialFeatures;

/// Anything carrying a binary trial label.
pub trait Labeled {
    fn label(&self) -> TrialLabel;
}

impl Labeled for TrialLabel {
    fn label(&self) -> TrialLabel {
        *self
    }
}

impl Labeled for Trial {
    fn label(&self) -> TrialLabel {
        self.label
    }
}

impl<T> Labeled for TrialFeatures<T> {
    fn label(&self) -> TrialLabel {
        self.label
    }
}

fn class_indices<I: Labeled>(items: &[I]) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (i, it) in items.iter().enumerate() {
        out[it.label().class_index()].push(i);
    }
    out
}

/// Drops majority-class items uniformly at random until both classes have
/// `min(|OK|, |ERR|)` members. Survivors keep their original order.
pub fn undersample<I: Labeled + Clone>(items: &[I], seed: u64) -> Result<Vec<I>> {
    let [mut ok, mut err] = class_indices(items);
    if ok.is_empty() || err.is_empty() {
        return Err(Error::Empty(format!(
            "undersampling needs both classes (OK={}, ERR={})",
            ok.len(),
            err.len()
        )));
    }
    let n = ok.len().min(err.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for class in [&mut ok, &mut err] {
        if class.len() > n {
            class.shuffle(&mut rng);
            class.truncate(n);
        }
    }
    let mut keep: Vec<usize> = ok.into_iter().chain(err).collect();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| items[i].clone()).collect())
}

/// Class-stratified random split: each class contributes
/// `round(train_fraction · n_class)` items to the training part.
pub fn random_split<I: Labeled + Clone>(
    items: &[I],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<I>, Vec<I>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train_fraction {train_fraction} must lie in (0, 1)"
        )));
    }
    if items.len() < 2 {
        return Err(Error::InvalidArgument(
            "split needs at least two items".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_train = vec![false; items.len()];
    for mut class in class_indices(items) {
        class.shuffle(&mut rng);
        let n_train = (train_fraction * class.len() as f64).round() as usize;
        for &i in &class[..n_train] {
            is_train[i] = true;
        }
    }
    let n_train = is_train.iter().filter(|&&t| t).count();
    if n_train == 0 || n_train == items.len() {
        return Err(Error::InvalidArgument(format!(
            "train_fraction {train_fraction} on {} items leaves an empty part",
            items.len()
        )));
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (it, t) in items.iter().zip(is_train) {
        if t {
            train.push(it.clone());
        } else {
            test.push(it.clone());
        }
    }
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(ok: usize, err: usize) -> Vec<(usize, TrialLabel)> {
        (0..ok + err)
            .map(|i| {
                (
                    i,
                    if i % (ok + err).max(1) < ok {
                        TrialLabel::Ok
                    } else {
                        TrialLabel::Err
                    },
                )
            })
            .collect()
    }

    impl Labeled for (usize, TrialLabel) {
        fn label(&self) -> TrialLabel {
            self.1
        }
    }

    fn count(v: &[(usize, TrialLabel)], l: TrialLabel) -> usize {
        v.iter().filter(|x| x.1 == l).count()
    }

    #[test]
    fn undersample_to_minority() {
        let set = labels(597, 63);
        let out = undersample(&set, 1).unwrap();
        assert_eq!(count(&out, TrialLabel::Ok), 63);
        assert_eq!(count(&out, TrialLabel::Err), 63);
        assert!(out.windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(out, undersample(&set, 1).unwrap());
        assert_ne!(out, undersample(&set, 2).unwrap());
    }

    #[test]
    fn balanced_set_unchanged() {
        let set = labels(10, 10);
        assert_eq!(undersample(&set, 5).unwrap(), set);
    }

    #[test]
    fn missing_class_is_an_error() {
        assert!(matches!(
            undersample(&labels(5, 0), 0),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn split_126_at_three_quarters() {
        let set = labels(63, 63);
        let (train, test) = random_split(&set, 0.75, 3).unwrap();
        assert_eq!((train.len(), test.len()), (94, 32));
        assert_eq!(count(&test, TrialLabel::Err), 16);
    }

    #[test]
    fn split_errors() {
        let set = labels(1, 1);
        assert!(random_split(&set, 0.9, 0).is_err());
        assert!(random_split(&set, 1.0, 0).is_err());
        assert!(random_split(&labels(1, 0), 0.5, 0).is_err());
    }

    proptest! {
        #[test]
        fn split_is_a_stratified_partition(ok in 1usize..40, err in 1usize..40, frac in 0.2f64..0.8, seed: u64) {
            let set = labels(ok, err);
            if let Ok((train, test)) = random_split(&set, frac, seed) {
                let mut ids: Vec<usize> = train.iter().chain(&test).map(|x| x.0).collect();
                ids.sort_unstable();
                prop_assert_eq!(ids, (0..ok + err).collect::<Vec<_>>());
                prop_assert_eq!(count(&train, TrialLabel::Ok), (frac * ok as f64).round() as usize);
                prop_assert_eq!(count(&train, TrialLabel::Err), (frac * err as f64).round() as usize);
            }
        }

        #[test]
        fn undersample_is_balanced_subset(ok in 1usize..60, err in 1usize..60, seed: u64) {
            let set = labels(ok, err);
            let out = undersample(&set, seed).unwrap();
            let m = ok.min(err);
            prop_assert_eq!(count(&out, TrialLabel::Ok), m);
            prop_assert_eq!(count(&out, TrialLabel::Err), m);
            prop_assert!(out.iter().all(|x| set.contains(x)));
        }
    }
}
