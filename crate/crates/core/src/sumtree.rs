/// Complete binary tree of nonnegative weights with prefix-sum search.
///
/// Internal nodes are recomputed from their children on every update, so the
/// root never accumulates drift from incremental adds.
#[derive(Debug, Clone)]
pub(crate) struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(n: usize) -> Self {
        let leaves = n.max(1).next_power_of_two();
        Self { leaves, nodes: vec![0.0; 2 * leaves] }
    }

    pub fn from_weights(w: &[f64]) -> Self {
        let mut t = Self::new(w.len());
        t.nodes[t.leaves..t.leaves + w.len()].copy_from_slice(w);
        for i in (1..t.leaves).rev() {
            t.nodes[i] = t.nodes[2 * i] + t.nodes[2 * i + 1];
        }
        t
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    #[cfg(test)]
    pub fn get(&self, i: usize) -> f64 {
        self.nodes[self.leaves + i]
    }

    pub fn set(&mut self, i: usize, w: f64) {
        let mut k = self.leaves + i;
        self.nodes[k] = w;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    /// Leaf `i` with `prefix(i) <= u < prefix(i) + w_i`, for `u` in `[0, total)`.
    /// Zero-weight leaves are never returned.
    pub fn find(&self, mut u: f64) -> usize {
        let mut k = 1;
        while k < self.leaves {
            let left = self.nodes[2 * k];
            if u < left || self.nodes[2 * k + 1] <= 0.0 {
                k *= 2;
            } else {
                u -= left;
                k = 2 * k + 1;
            }
        }
        k - self.leaves
    }
}
