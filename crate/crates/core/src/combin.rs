//! Small enumeration helpers shared by the semantics and the basis code.

/// All ways to split `total` items into `parts` ordered bins.
///
/// Order is lexicographically descending: the first composition puts everything
/// into bin 0, the last everything into the last bin.
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Vec<u32>,
    done: bool,
}

impl Compositions {
    pub fn new(total: u32, parts: usize) -> Self {
        if parts == 0 {
            return Compositions {
                current: Vec::new(),
                done: total != 0,
            };
        }
        let mut current = vec![0; parts];
        current[0] = total;
        Compositions { current, done: false }
    }

    fn advance(&mut self) {
        let n = self.current.len();
        if n <= 1 {
            self.done = true;
            return;
        }
        // rightmost nonzero bin strictly before the last one
        let last = self.current[n - 1];
        let Some(i) = (0..n - 1).rev().find(|&i| self.current[i] > 0) else {
            self.done = true;
            return;
        };
        self.current[i] -= 1;
        self.current[n - 1] = 0;
        self.current[i + 1] = last + 1;
    }
}

impl Iterator for Compositions {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        self.advance();
        Some(out)
    }
}

/// Mixed-radix counter over a product of finite choice lists.
///
/// `next_index` yields index vectors `[i_0, .., i_k]` with `i_j < sizes[j]`, first
/// coordinate slowest. An empty `sizes` yields exactly one empty vector.
pub struct Odometer {
    sizes: Vec<usize>,
    current: Vec<usize>,
    done: bool,
}

impl Odometer {
    pub fn new(sizes: Vec<usize>) -> Self {
        let done = sizes.contains(&0);
        Odometer {
            current: vec![0; sizes.len()],
            sizes,
            done,
        }
    }
}

impl Iterator for Odometer {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let mut j = self.sizes.len();
        loop {
            if j == 0 {
                self.done = true;
                break;
            }
            j -= 1;
            self.current[j] += 1;
            if self.current[j] < self.sizes[j] {
                break;
            }
            self.current[j] = 0;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: u64, k: u64) -> u64 {
        (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
    }

    #[test]
    fn compositions_count_matches_stars_and_bars() {
        for total in 0..6u32 {
            for parts in 1..5usize {
                let all: Vec<_> = Compositions::new(total, parts).collect();
                assert_eq!(
                    all.len() as u64,
                    binom(total as u64 + parts as u64 - 1, parts as u64 - 1)
                );
                assert!(all.iter().all(|c| c.iter().sum::<u32>() == total));
                let mut sorted = all.clone();
                sorted.sort_by(|a, b| b.cmp(a));
                assert_eq!(sorted, all, "not lexicographically descending");
            }
        }
    }

    #[test]
    fn compositions_degenerate() {
        assert_eq!(Compositions::new(0, 0).count(), 1);
        assert_eq!(Compositions::new(2, 0).count(), 0);
        assert_eq!(Compositions::new(3, 1).collect::<Vec<_>>(), vec![vec![3]]);
    }

    #[test]
    fn odometer_enumerates_product() {
        let all: Vec<_> = Odometer::new(vec![2, 3]).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 0]);
        assert_eq!(all[1], vec![0, 1]);
        assert_eq!(all[5], vec![1, 2]);
        assert_eq!(Odometer::new(vec![]).count(), 1);
        assert_eq!(Odometer::new(vec![2, 0]).count(), 0);
    }
}
