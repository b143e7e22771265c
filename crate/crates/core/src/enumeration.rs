//! Brute-force oracle: all plane trees of a small size, weighted, with the
//! exact law of `a_r` computed tree by tree.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::tree::{removed_operational, TreeShape};
use crate::weights::WeightFamily;

/// Largest size accepted by [`enumerate_trees`] (Catalan(13) = 742900 trees).
pub const MAX_ENUMERATION_SIZE: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Oracle,
    Series,
    /// Relative frequencies of a finite sample.
    Empirical,
}

/// Exact law of an integer statistic on trees of size `n`.
#[derive(Debug, Clone)]
pub struct Distribution {
    n: usize,
    probs: BTreeMap<usize, BigRational>,
    provenance: Provenance,
}

impl Distribution {
    /// Atoms with zero mass are dropped.
    pub fn new(n: usize, probs: BTreeMap<usize, BigRational>, provenance: Provenance) -> Self {
        let probs = probs.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        Distribution {
            n,
            probs,
            provenance,
        }
    }

    /// Relative frequencies `count / m` of observed values.
    pub fn empirical(n: usize, values: &[usize]) -> Self {
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        for &v in values {
            *counts.entry(v).or_default() += 1;
        }
        let total = BigInt::from(values.len());
        let probs = counts
            .into_iter()
            .map(|(v, c)| (v, BigRational::new(BigInt::from(c), total.clone())))
            .collect();
        Distribution::new(n, probs, Provenance::Empirical)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn probabilities(&self) -> &BTreeMap<usize, BigRational> {
        &self.probs
    }

    pub fn probability(&self, m: usize) -> BigRational {
        self.probs.get(&m).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn support(&self) -> Vec<usize> {
        self.probs.keys().copied().collect()
    }

    pub fn total(&self) -> BigRational {
        self.probs.values().fold(BigRational::zero(), |acc, p| acc + p)
    }

    pub fn mean(&self) -> BigRational {
        self.probs
            .iter()
            .fold(BigRational::zero(), |acc, (&m, p)| acc + p * BigInt::from(m))
    }

    pub fn variance(&self) -> BigRational {
        let mean = self.mean();
        let second = self.probs.iter().fold(BigRational::zero(), |acc, (&m, p)| {
            acc + p * BigInt::from(m) * BigInt::from(m)
        });
        second - &mean * &mean
    }

    pub fn frequencies_f64(&self) -> BTreeMap<usize, f64> {
        self.probs
            .iter()
            .map(|(&m, p)| (m, p.to_f64().unwrap_or(f64::NAN)))
            .collect()
    }

    /// Same size and identical exact probabilities, regardless of provenance.
    pub fn same_law(&self, other: &Distribution) -> bool {
        self.n == other.n && self.probs == other.probs
    }
}

/// Every plane tree with `n` vertices, each exactly once, ordered
/// lexicographically by the sizes of the root's branches (first branch
/// smallest first), recursively.
pub fn enumerate_trees(n: usize) -> Result<Vec<TreeShape>> {
    if n == 0 {
        return Err(Error::InvalidArgument("trees have at least one vertex".into()));
    }
    if n > MAX_ENUMERATION_SIZE {
        return Err(Error::SizeLimit {
            n,
            max: MAX_ENUMERATION_SIZE,
        });
    }
    let mut table = ForestTable::default();
    let forests = table.forests(n - 1);
    Ok(forests
        .iter()
        .map(|(k, seq)| {
            let mut degrees = Vec::with_capacity(n);
            degrees.push(*k);
            degrees.extend_from_slice(seq);
            TreeShape::from_degrees(degrees).expect("enumerated sequences are valid")
        })
        .collect())
}

/// Forests of plane trees by total size, as (number of trees, concatenated
/// preorder degree sequences). Memoised by size.
#[derive(Default)]
struct ForestTable {
    by_size: Vec<Vec<(u32, Vec<u32>)>>,
}

impl ForestTable {
    fn forests(&mut self, m: usize) -> &[(u32, Vec<u32>)] {
        while self.by_size.len() <= m {
            let size = self.by_size.len();
            let built = if size == 0 {
                vec![(0, Vec::new())]
            } else {
                let mut out = Vec::new();
                // first tree has size s: a root over a forest of size s - 1
                for s in 1..=size {
                    for (k1, first) in &self.by_size[s - 1] {
                        for (k, rest) in &self.by_size[size - s] {
                            let mut seq = Vec::with_capacity(size);
                            seq.push(*k1);
                            seq.extend_from_slice(first);
                            seq.extend_from_slice(rest);
                            out.push((k + 1, seq));
                        }
                    }
                }
                out
            };
            self.by_size.push(built);
        }
        &self.by_size[m]
    }
}

/// Law of `param(t, r)` over size-`n` trees weighted by `w(t)`.
pub fn oracle_distribution_with<P>(
    f: &WeightFamily,
    r: usize,
    n: usize,
    param: P,
) -> Result<Distribution>
where
    P: Fn(&TreeShape, usize) -> usize,
{
    let mut mass: BTreeMap<usize, BigRational> = BTreeMap::new();
    let mut total = BigRational::zero();
    for t in enumerate_trees(n)? {
        let w = f.tree_weight(&t);
        if w.is_zero() {
            continue;
        }
        total += &w;
        *mass.entry(param(&t, r)).or_insert_with(BigRational::zero) += w;
    }
    if total.is_zero() {
        return Err(Error::InvalidSize {
            n,
            period: f.period(),
        });
    }
    let probs = mass.into_iter().map(|(m, w)| (m, w / &total)).collect();
    Ok(Distribution::new(n, probs, Provenance::Oracle))
}

/// Law of `a_r` on weighted size-`n` trees by exhaustive enumeration.
pub fn oracle_distribution(f: &WeightFamily, r: usize, n: usize) -> Result<Distribution> {
    if r == 0 {
        return Err(Error::InvalidArgument("r must be >= 1".into()));
    }
    oracle_distribution_with(f, r, n, removed_operational)
}

/// Total weight of size-`n` trees by enumeration.
pub fn weighted_count(f: &WeightFamily, n: usize) -> Result<BigRational> {
    Ok(enumerate_trees(n)?
        .iter()
        .map(|t| f.tree_weight(t))
        .fold(BigRational::zero(), |acc, w| acc + w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::removed_additive;
    use crate::weights::parse_rational;
    use std::collections::HashSet;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn counts_are_catalan() {
        let catalan = [1usize, 1, 2, 5, 14, 42, 132, 429, 1430, 4862];
        for (i, &c) in catalan.iter().enumerate() {
            let trees = enumerate_trees(i + 1).unwrap();
            assert_eq!(trees.len(), c, "n = {}", i + 1);
            let distinct: HashSet<_> = trees.iter().collect();
            assert_eq!(distinct.len(), c);
            assert!(trees.iter().all(|t| t.size() == i + 1));
        }
    }

    #[test]
    fn enumeration_guard() {
        assert!(matches!(enumerate_trees(15), Err(Error::SizeLimit { .. })));
        assert!(enumerate_trees(0).is_err());
    }

    #[test]
    fn enumeration_order_is_deterministic() {
        let trees: Vec<String> = enumerate_trees(3).unwrap().iter().map(|t| t.to_string()).collect();
        assert_eq!(trees, vec!["(()())", "((()))"]);
    }

    #[test]
    fn weighted_counts() {
        let plane: Vec<_> = (1..=5)
            .map(|n| weighted_count(&WeightFamily::plane(), n).unwrap())
            .collect();
        assert_eq!(plane, vec![q("1"), q("1"), q("2"), q("5"), q("14")]);
        assert_eq!(weighted_count(&WeightFamily::cayley(), 4).unwrap(), q("8/3"));
        assert_eq!(weighted_count(&WeightFamily::binary(), 4).unwrap(), q("0"));
    }

    #[test]
    fn oracle_examples() {
        let d = oracle_distribution(&WeightFamily::plane(), 1, 4).unwrap();
        assert_eq!(d.probability(1), q("1/5"));
        assert_eq!(d.probability(2), q("3/5"));
        assert_eq!(d.probability(3), q("1/5"));
        assert_eq!(d.provenance(), Provenance::Oracle);

        let d = oracle_distribution(&WeightFamily::cayley(), 1, 3).unwrap();
        assert_eq!(d.probability(2), q("1/3"));
        assert_eq!(d.probability(1), q("2/3"));

        // both 5-vertex full binary trees lose 4 vertices in two rounds
        let d = oracle_distribution(&WeightFamily::binary(), 2, 5).unwrap();
        assert_eq!(d.support(), vec![4]);
        assert_eq!(d.probability(4), q("1"));

        assert!(matches!(
            oracle_distribution(&WeightFamily::binary(), 1, 4),
            Err(Error::InvalidSize { .. })
        ));
    }

    #[test]
    fn additive_oracle_matches_operational() {
        for fam in [WeightFamily::plane(), WeightFamily::cayley(), WeightFamily::binary()] {
            for n in 1..=9 {
                for r in 1..=4 {
                    let op = oracle_distribution(&fam, r, n);
                    let add = oracle_distribution_with(&fam, r, n, removed_additive);
                    match (op, add) {
                        (Ok(a), Ok(b)) => assert!(a.same_law(&b)),
                        (Err(_), Err(_)) => {}
                        _ => panic!("mismatched outcome for {fam} n={n} r={r}"),
                    }
                }
            }
        }
    }

    #[test]
    fn distribution_statistics() {
        let d = Distribution::empirical(4, &[1, 2, 2, 3, 2]);
        assert_eq!(d.probability(2), q("3/5"));
        assert_eq!(d.total(), q("1"));
        assert_eq!(d.mean(), q("2"));
        assert_eq!(d.variance(), q("2/5"));
        assert_eq!(d.provenance(), Provenance::Empirical);
    }
}
