use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const TRAIN_FRACTION: f64 = 0.70;
pub const VAL_FRACTION: f64 = 0.15;
pub const TEST_FRACTION: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

/// How rows are assigned to the train/validation/test subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitMode {
    /// Seeded uniform shuffle, then a 70/15/15 cut.
    Random { seed: u64 },
    /// Contiguous chronological blocks: first 70% train, next 15%
    /// validation, last 15% test.
    Predefined,
}

impl SplitMode {
    pub fn name(&self) -> &'static str {
        match self {
            SplitMode::Random { .. } => "random",
            SplitMode::Predefined => "predefined",
        }
    }

    /// Parses `random` or `predefined`; the seed is used for `random`.
    pub fn parse(name: &str, seed: u64) -> Result<Self> {
        match name {
            "random" => Ok(SplitMode::Random { seed }),
            "predefined" => Ok(SplitMode::Predefined),
            other => Err(Error::Config(format!("unknown split `{other}` (expected random or predefined)"))),
        }
    }
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitMode::Random { seed } => write!(f, "random(seed={seed})"),
            SplitMode::Predefined => f.write_str("predefined"),
        }
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split label `{other}`"))),
        }
    }
}

/// Input/target pairs with time stamps and split labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
    pub times: Vec<f64>,
    pub labels: Vec<Split>,
}

impl Dataset {
    /// All rows start labelled [`Split::Train`].
    pub fn new(inputs: Array2<f64>, targets: Array2<f64>, times: Vec<f64>) -> Result<Self> {
        let n = inputs.nrows();
        if targets.nrows() != n || times.len() != n {
            return Err(Error::Dimension { expected: n, got: targets.nrows().min(times.len()) });
        }
        if inputs.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState);
        }
        Ok(Dataset { inputs, targets, times, labels: vec![Split::Train; n] })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        self.labels.iter().enumerate().filter(|(_, l)| **l == split).map(|(i, _)| i).collect()
    }

    pub fn count(&self, split: Split) -> usize {
        self.labels.iter().filter(|l| **l == split).count()
    }

    /// `(inputs, targets)` of one subset, in row order.
    pub fn subset(&self, split: Split) -> (Array2<f64>, Array2<f64>) {
        let idx = self.indices(split);
        (self.inputs.select(Axis(0), &idx), self.targets.select(Axis(0), &idx))
    }
}

fn cut_sizes(n: usize) -> (usize, usize) {
    let n_train = (TRAIN_FRACTION * n as f64).round() as usize;
    let n_val = (VAL_FRACTION * n as f64).round() as usize;
    (n_train, n_val.min(n - n_train))
}

/// Labels every row of `ds` according to `mode`. Predefined splits are cut
/// in time order.
pub fn split_dataset(mut ds: Dataset, mode: SplitMode) -> Result<Dataset> {
    let n = ds.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!("splitting needs at least 10 rows, got {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    match mode {
        SplitMode::Random { seed } => order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed)),
        SplitMode::Predefined => order.sort_by(|&a, &b| ds.times[a].total_cmp(&ds.times[b]).then(a.cmp(&b))),
    }
    let (n_train, n_val) = cut_sizes(n);
    for (rank, &row) in order.iter().enumerate() {
        ds.labels[row] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize) -> Dataset {
        let inputs = Array2::from_shape_fn((n, 2), |(i, j)| (i * 2 + j) as f64);
        let targets = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        Dataset::new(inputs, targets, (0..n).map(|i| i as f64 * 0.5).collect()).unwrap()
    }

    #[test]
    fn random_split_sizes() {
        let ds = split_dataset(toy(100), SplitMode::Random { seed: 7 }).unwrap();
        assert_eq!((ds.count(Split::Train), ds.count(Split::Val), ds.count(Split::Test)), (70, 15, 15));
    }

    #[test]
    fn random_split_is_seeded() {
        let a = split_dataset(toy(200), SplitMode::Random { seed: 1 }).unwrap();
        let b = split_dataset(toy(200), SplitMode::Random { seed: 1 }).unwrap();
        let c = split_dataset(toy(200), SplitMode::Random { seed: 2 }).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_ne!(a.labels, c.labels);
        // not chronological
        let train = a.indices(Split::Train);
        assert!(train.iter().any(|&i| i >= 140));
    }

    #[test]
    fn predefined_split_is_chronological() {
        let ds = split_dataset(toy(101), SplitMode::Predefined).unwrap();
        let max_t = |s| ds.indices(s).iter().map(|&i| ds.times[i]).fold(f64::MIN, f64::max);
        let min_t = |s| ds.indices(s).iter().map(|&i| ds.times[i]).fold(f64::MAX, f64::min);
        assert!(max_t(Split::Train) < min_t(Split::Val));
        assert!(max_t(Split::Val) < min_t(Split::Test));
        assert_eq!(ds.count(Split::Train) + ds.count(Split::Val) + ds.count(Split::Test), 101);
    }

    #[test]
    fn predefined_uses_time_not_row_order() {
        let mut ds = toy(20);
        ds.times.reverse();
        let ds = split_dataset(ds, SplitMode::Predefined).unwrap();
        assert_eq!(ds.labels[19], Split::Train);
        assert_eq!(ds.labels[0], Split::Test);
    }

    #[test]
    fn too_small() {
        assert!(matches!(split_dataset(toy(9), SplitMode::Predefined), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn subset_gathers_rows() {
        let ds = split_dataset(toy(20), SplitMode::Predefined).unwrap();
        let (x, y) = ds.subset(Split::Test);
        assert_eq!(x.nrows(), 3);
        assert_eq!(y[[0, 0]], 17.0);
    }
}
