use std::cmp::Ordering;
use std::fmt;

/// Multi-index over a fixed number of variables. Entries are exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut e = vec![0; dim];
        e[axis] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total order `|a| = sum_i a_i`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn factorial(&self) -> u128 {
        self.0.iter().map(|&k| fact(k)).product()
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if other.le(self) {
            Some(MultiIndex(
                self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
            ))
        } else {
            None
        }
    }

    pub fn scale(&self, k: u32) -> MultiIndex {
        MultiIndex(self.0.iter().map(|a| a * k).collect())
    }

    /// Graded lexicographic order: compare total order first, then lexicographic.
    /// This is the order used to enumerate the inner-index chains of the higher
    /// chain rule.
    pub fn graded_cmp(&self, other: &MultiIndex) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| self.0.cmp(&other.0))
    }

    /// All multi-indices of the given dimension with total order exactly `k`.
    pub fn of_order(dim: usize, k: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; dim];
        fill(&mut out, &mut cur, 0, k);
        out
    }

    /// All multi-indices with total order in `0..=k`, graded-lex sorted.
    pub fn up_to_order(dim: usize, k: u32) -> Vec<MultiIndex> {
        let mut out: Vec<MultiIndex> = (0..=k).flat_map(|j| Self::of_order(dim, j)).collect();
        out.sort_by(|a, b| a.graded_cmp(b));
        out
    }

    /// `x^a` for a point `x`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&k, &xi)| xi.powi(k as i32))
            .product()
    }
}

fn fill(out: &mut Vec<MultiIndex>, cur: &mut Vec<u32>, pos: usize, rem: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = rem;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for v in 0..=rem {
        cur[pos] = v;
        fill(out, cur, pos + 1, rem - v);
    }
    cur[pos] = 0;
}

pub(crate) fn fact(k: u32) -> u128 {
    (1..=k as u128).product::<u128>().max(1)
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_counts() {
        // dim 2, order k has k+1 indices
        assert_eq!(MultiIndex::of_order(2, 3).len(), 4);
        // dim 3, order 2: C(4,2) = 6
        assert_eq!(MultiIndex::of_order(3, 2).len(), 6);
        assert_eq!(MultiIndex::up_to_order(2, 2).len(), 1 + 2 + 3);
    }

    #[test]
    fn graded_order_is_by_total_then_lex() {
        let idx = MultiIndex::up_to_order(2, 2);
        let orders: Vec<u32> = idx.iter().map(|a| a.order()).collect();
        let mut sorted = orders.clone();
        sorted.sort();
        assert_eq!(orders, sorted);
        assert!(idx.windows(2).all(|w| w[0].graded_cmp(&w[1]) == Ordering::Less));
    }

    #[test]
    fn factorial_product() {
        assert_eq!(MultiIndex(vec![3, 2]).factorial(), 12);
        assert_eq!(MultiIndex::zero(2).factorial(), 1);
    }
}
