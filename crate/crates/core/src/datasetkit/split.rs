use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::DatasetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Eval,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Eval, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Eval => "eval",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fractions for train, eval and test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios(pub [f64; 3]);

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios([0.7, 0.1, 0.2])
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let sum: f64 = self.0.iter().sum();
        if self.0.iter().any(|r| !r.is_finite() || *r < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(DatasetError::InvalidRatios(self.0));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelBalance {
    pub total: usize,
    pub counts: [usize; 3],
    pub proportions: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitAssignment {
    pub ratios: SplitRatios,
    pub assignment: BTreeMap<String, Split>,
    pub balance: BTreeMap<String, LabelBalance>,
}

impl SplitAssignment {
    pub fn sizes(&self) -> [usize; 3] {
        let mut sizes = [0; 3];
        for s in self.assignment.values() {
            sizes[*s as usize] += 1;
        }
        sizes
    }

    /// Largest |proportion − ratio| over labels and splits.
    pub fn max_deviation(&self) -> f64 {
        max_deviation(&self.balance, self.ratios)
    }
}

pub fn balance_report(
    labels: &BTreeMap<String, BTreeSet<String>>,
    assignment: &BTreeMap<String, Split>,
) -> BTreeMap<String, LabelBalance> {
    let mut counts: BTreeMap<String, [usize; 3]> = BTreeMap::new();
    for (id, set) in labels {
        for label in set {
            let c = counts.entry(label.clone()).or_default();
            if let Some(s) = assignment.get(id) {
                c[*s as usize] += 1;
            }
        }
    }
    counts
        .into_iter()
        .map(|(label, counts)| {
            let total: usize = counts.iter().sum();
            let proportions = counts.map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 });
            (label, LabelBalance { total, counts, proportions })
        })
        .collect()
}

pub fn max_deviation(balance: &BTreeMap<String, LabelBalance>, ratios: SplitRatios) -> f64 {
    balance.values().flat_map(|b| b.proportions.iter().zip(ratios.0).map(|(p, r)| (p - r).abs())).fold(0.0, f64::max)
}

fn argmax_with_ties(values: [f64; 3], candidates: &[usize]) -> Vec<usize> {
    let best = candidates.iter().map(|&j| values[j]).fold(f64::NEG_INFINITY, f64::max);
    candidates.iter().copied().filter(|&j| values[j] == best).collect()
}

/// Iterative stratification. Labels are processed rarest first (ties by
/// label name); each of a label's unassigned pieces goes to the split that
/// still wants most pieces of that label, then the split that wants most
/// pieces overall, then a random one. Pieces without labels are placed by
/// overall demand alone.
pub fn stratified_split<R: Rng + ?Sized>(
    labels: &BTreeMap<String, BTreeSet<String>>,
    ratios: SplitRatios,
    rng: &mut R,
) -> Result<SplitAssignment, DatasetError> {
    ratios.validate()?;
    if labels.is_empty() {
        return Err(DatasetError::EmptyCorpus);
    }
    let n = labels.len() as f64;
    let mut wanted: [f64; 3] = ratios.0.map(|r| r * n);
    let mut label_total: BTreeMap<&str, usize> = BTreeMap::new();
    for set in labels.values() {
        for l in set {
            *label_total.entry(l).or_default() += 1;
        }
    }
    let mut wanted_label: BTreeMap<&str, [f64; 3]> =
        label_total.iter().map(|(&l, &c)| (l, ratios.0.map(|r| r * c as f64))).collect();

    let mut unassigned: BTreeSet<&str> = labels.keys().map(String::as_str).collect();
    let mut assignment: BTreeMap<String, Split> = BTreeMap::new();
    let all = [0usize, 1, 2];

    let mut place = |id: &str, j: usize, wanted: &mut [f64; 3], wanted_label: &mut BTreeMap<&str, [f64; 3]>| {
        for l in &labels[id] {
            wanted_label.get_mut(l.as_str()).unwrap()[j] -= 1.0;
        }
        wanted[j] -= 1.0;
        assignment.insert(id.to_owned(), Split::ALL[j]);
    };

    loop {
        // rarest label among unassigned pieces
        let mut remaining: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for &id in &unassigned {
            for l in &labels[id] {
                remaining.entry(l.as_str()).or_default().push(id);
            }
        }
        let Some((label, pieces)) = remaining.into_iter().min_by_key(|(_, v)| v.len()) else { break };
        for id in pieces {
            let by_label = argmax_with_ties(wanted_label[label], &all);
            let by_total = argmax_with_ties(wanted, &by_label);
            let j = by_total[if by_total.len() > 1 { rng.random_range(0..by_total.len()) } else { 0 }];
            place(id, j, &mut wanted, &mut wanted_label);
            unassigned.remove(id);
        }
    }
    for id in std::mem::take(&mut unassigned) {
        let by_total = argmax_with_ties(wanted, &all);
        let j = by_total[if by_total.len() > 1 { rng.random_range(0..by_total.len()) } else { 0 }];
        place(id, j, &mut wanted, &mut wanted_label);
    }

    fill_empty_splits(labels, ratios, &mut assignment);
    let balance = balance_report(labels, &assignment);
    Ok(SplitAssignment { ratios, assignment, balance })
}

/// The greedy pass can starve a small split when every label prefers the
/// larger ones. A split that should hold at least one piece but ended up
/// empty receives the piece, taken from an over-full split, whose move
/// hurts label balance least (ties by piece id).
fn fill_empty_splits(
    labels: &BTreeMap<String, BTreeSet<String>>,
    ratios: SplitRatios,
    assignment: &mut BTreeMap<String, Split>,
) {
    let n = labels.len() as f64;
    for target in Split::ALL {
        let sizes = Split::ALL.map(|s| assignment.values().filter(|&&v| v == s).count());
        if sizes[target as usize] > 0 || ratios.0[target as usize] * n < 1.0 {
            continue;
        }
        let mut best: Option<(f64, &str)> = None;
        for (id, &split) in assignment.iter() {
            let k = split as usize;
            if sizes[k] as f64 <= ratios.0[k] * n {
                continue;
            }
            let mut trial = assignment.clone();
            trial.insert(id.clone(), target);
            let dev = max_deviation(&balance_report(labels, &trial), ratios);
            if best.is_none_or(|(d, _)| dev < d) {
                best = Some((dev, id));
            }
        }
        if let Some((_, id)) = best {
            let id = id.to_owned();
            assignment.insert(id, target);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn corpus(specs: &[&[&str]]) -> BTreeMap<String, BTreeSet<String>> {
        specs
            .iter()
            .enumerate()
            .map(|(i, ls)| (format!("p{i:03}"), ls.iter().map(|s| s.to_string()).collect()))
            .collect()
    }

    #[test]
    fn single_label_proportional() {
        for n in [10, 20, 30, 100] {
            let labels = corpus(&vec![&["violin"][..]; n]);
            let out =
                stratified_split(&labels, SplitRatios::default(), &mut ChaCha8Rng::seed_from_u64(n as u64)).unwrap();
            assert_eq!(out.sizes(), [7 * n / 10, n / 10, 2 * n / 10]);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            stratified_split(&BTreeMap::new(), SplitRatios::default(), &mut rng),
            Err(DatasetError::EmptyCorpus)
        ));
        let labels = corpus(&[&["a"]]);
        assert!(matches!(
            stratified_split(&labels, SplitRatios([0.5, 0.5, 0.5]), &mut rng),
            Err(DatasetError::InvalidRatios(_))
        ));
        assert!(stratified_split(&labels, SplitRatios([1.2, -0.1, -0.1]), &mut rng).is_err());
    }

    #[test]
    fn rare_label_follows_desired_counts() {
        // tuba wants 2.1 / 0.3 / 0.6 pieces: the greedy pass sends two to
        // train, then the last to test, which now wants more than eval
        let mut specs: Vec<&[&str]> = vec![&["violin"]; 17];
        specs.extend([&["violin", "tuba"][..], &["tuba"], &["tuba", "cello"]]);
        let labels = corpus(&specs);
        let out = stratified_split(&labels, SplitRatios::default(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(out.balance["tuba"].counts, [2, 0, 1]);
        for (size, want) in out.sizes().iter().zip([14.0, 2.0, 4.0]) {
            assert!((*size as f64 - want).abs() <= 1.0, "{:?}", out.sizes());
        }
    }

    #[test]
    fn starved_split_is_filled() {
        // every label wants under half a piece in eval
        let labels =
            corpus(&[&["a", "b"], &["c"], &["c"], &["a"], &["b"], &["c", "d"], &["d"], &["a"], &["b"], &["d"]]);
        let out = stratified_split(&labels, SplitRatios::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(out.sizes()[1] >= 1, "{:?}", out.sizes());
    }

    proptest! {
        #[test]
        fn total_partition_and_determinism(
            sets in proptest::collection::vec(proptest::collection::btree_set(0u8..5, 0..4), 1..60),
            seed: u64,
        ) {
            let labels: BTreeMap<String, BTreeSet<String>> = sets
                .iter()
                .enumerate()
                .map(|(i, s)| (format!("p{i}"), s.iter().map(|l| format!("l{l}")).collect()))
                .collect();
            let a = stratified_split(&labels, SplitRatios::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let b = stratified_split(&labels, SplitRatios::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.assignment.len(), labels.len());
            prop_assert!(a.assignment.keys().eq(labels.keys()));
            for (label, bal) in &a.balance {
                let expected = labels.values().filter(|s| s.contains(label)).count();
                prop_assert_eq!(bal.total, expected);
            }
            if labels.len() >= 10 {
                prop_assert!(a.sizes().iter().all(|&s| s > 0), "{:?}", a.sizes());
            }
        }
    }
}
