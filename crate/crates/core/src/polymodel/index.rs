use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing 1-based index tuple `(i₁ < … < i_d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct IndexTuple(Vec<usize>);

impl IndexTuple {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidIndex("empty tuple".into()));
        }
        if indices[0] < 1 {
            return Err(Error::InvalidIndex(format!("{indices:?}: indices start at 1")));
        }
        if !indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidIndex(format!("{indices:?} is not strictly increasing")));
        }
        Ok(Self(indices))
    }

    /// Checks the tuple fits `I(d, n)`.
    pub fn check(&self, d: usize, n: usize) -> Result<()> {
        if self.0.len() != d {
            return Err(Error::InvalidIndex(format!("{:?} has length {}, expected {d}", self.0, self.0.len())));
        }
        if self.last() > n {
            return Err(Error::InvalidIndex(format!("{:?} exceeds n = {n}", self.0)));
        }
        Ok(())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn d(&self) -> usize {
        self.0.len()
    }

    pub fn first(&self) -> usize {
        self.0[0]
    }

    pub fn last(&self) -> usize {
        self.0[self.0.len() - 1]
    }
}

impl TryFrom<Vec<usize>> for IndexTuple {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<IndexTuple> for Vec<usize> {
    fn from(t: IndexTuple) -> Self {
        t.0
    }
}

/// Lexicographic iterator over `I(d, n)`, or over `J(d, k) = {I : i_d = k}`.
#[derive(Debug, Clone)]
pub struct IndexIter {
    current: Option<Vec<usize>>,
    n: usize,
    last_fixed: Option<usize>,
}

impl Iterator for IndexIter {
    type Item = IndexTuple;

    fn next(&mut self) -> Option<IndexTuple> {
        let cur = self.current.take()?;
        let out = IndexTuple(cur.clone());
        self.current = self.advance(cur);
        Some(out)
    }
}

impl IndexIter {
    fn advance(&self, mut c: Vec<usize>) -> Option<Vec<usize>> {
        let d = c.len();
        // with a fixed last index only the first d−1 positions move
        let (movable, top) = match self.last_fixed {
            Some(k) => (d - 1, k - 1),
            None => (d, self.n),
        };
        let mut pos = movable;
        while pos > 0 {
            let j = pos - 1;
            if c[j] < top - (movable - 1 - j) {
                c[j] += 1;
                for l in j + 1..movable {
                    c[l] = c[l - 1] + 1;
                }
                return Some(c);
            }
            pos -= 1;
        }
        None
    }
}

/// All strictly increasing tuples of `I(d, n)` in lexicographic order; with
/// `last_fixed = Some(k)` only those with `i_d = k`. `J(1, n) = {(n)}`.
pub fn enumerate_indices(d: usize, n: usize, last_fixed: Option<usize>) -> Result<IndexIter> {
    if d == 0 {
        return Err(Error::InvalidIndex("d must be >= 1".into()));
    }
    if d > n {
        return Err(Error::InvalidIndex(format!("d = {d} exceeds n = {n}")));
    }
    let current = match last_fixed {
        None => Some((1..=d).collect()),
        Some(k) if k > n => return Err(Error::InvalidIndex(format!("last index {k} exceeds n = {n}"))),
        Some(k) if k < d => None,
        Some(k) => {
            let mut v: Vec<usize> = (1..d).collect();
            v.push(k);
            Some(v)
        }
    };
    Ok(IndexIter { current, n, last_fixed })
}

/// `C(n, d)` as `f64`.
pub fn binomial(n: usize, d: usize) -> f64 {
    if d > n {
        return 0.0;
    }
    let d = d.min(n - d);
    (0..d).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collect(d: usize, n: usize, k: Option<usize>) -> Vec<Vec<usize>> {
        enumerate_indices(d, n, k).unwrap().map(|t| t.indices().to_vec()).collect()
    }

    #[test]
    fn small_enumerations() {
        assert_eq!(collect(2, 3, None), vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(collect(2, 3, Some(3)), vec![vec![1, 3], vec![2, 3]]);
        assert_eq!(collect(1, 4, Some(4)), vec![vec![4]]);
        assert_eq!(enumerate_indices(3, 10, None).unwrap().count(), 120);
        assert!(enumerate_indices(4, 3, None).is_err());
        assert_eq!(collect(3, 5, Some(2)), Vec::<Vec<usize>>::new());
    }

    #[test]
    fn j_sets_partition_i() {
        for (d, n) in [(1, 5), (2, 6), (3, 7), (4, 8)] {
            let total: usize = (1..=n).map(|k| enumerate_indices(d, n, Some(k)).unwrap().count()).sum();
            assert_eq!(total, enumerate_indices(d, n, None).unwrap().count());
            assert_eq!(total as f64, binomial(n, d));
        }
    }

    #[test]
    fn tuple_validation() {
        assert!(IndexTuple::new(vec![2, 2]).is_err());
        assert!(IndexTuple::new(vec![0, 2]).is_err());
        assert!(IndexTuple::new(vec![1, 4]).unwrap().check(2, 3).is_err());
        let t: IndexTuple = serde_json::from_str("[1,3]").unwrap();
        assert_eq!(t.last(), 3);
        assert!(serde_json::from_str::<IndexTuple>("[3,1]").is_err());
    }
}
