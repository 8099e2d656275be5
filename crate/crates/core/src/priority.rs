//! Indexed max-priority queue over states, one entry per state.

const ABSENT: usize = usize::MAX;

/// Binary max-heap keyed by state with in-place key updates. Ties go to the lower
/// state index. States with a nonpositive key are not held.
#[derive(Debug, Clone)]
pub(crate) struct StateQueue {
    heap: Vec<usize>,
    key: Vec<f64>,
    pos: Vec<usize>,
}

impl StateQueue {
    pub fn new(n: usize) -> Self {
        StateQueue {
            heap: Vec::with_capacity(n),
            key: vec![0.0; n],
            pos: vec![ABSENT; n],
        }
    }

    #[inline]
    fn above(&self, a: usize, b: usize) -> bool {
        let (ka, kb) = (self.key[a], self.key[b]);
        ka > kb || (ka == kb && a < b)
    }

    /// Inserts, updates or (for `key <= 0`) removes `state`.
    pub fn set(&mut self, state: usize, key: f64) {
        let at = self.pos[state];
        if !(key > 0.0) {
            if at != ABSENT {
                self.remove_at(at);
            }
            return;
        }
        self.key[state] = key;
        if at == ABSENT {
            self.pos[state] = self.heap.len();
            self.heap.push(state);
            self.sift_up(self.heap.len() - 1);
        } else {
            let at = self.sift_up(at);
            self.sift_down(at);
        }
    }

    pub fn pop(&mut self) -> Option<usize> {
        let top = *self.heap.first()?;
        self.remove_at(0);
        Some(top)
    }

    pub fn clear(&mut self) {
        for &s in &self.heap {
            self.pos[s] = ABSENT;
        }
        self.heap.clear();
    }

    fn remove_at(&mut self, at: usize) {
        let s = self.heap[at];
        let last = self.heap.pop().unwrap();
        self.pos[s] = ABSENT;
        if at < self.heap.len() {
            self.heap[at] = last;
            self.pos[last] = at;
            let at = self.sift_up(at);
            self.sift_down(at);
        }
    }

    fn sift_up(&mut self, mut i: usize) -> usize {
        while i > 0 {
            let parent = (i - 1) / 2;
            if !self.above(self.heap[i], self.heap[parent]) {
                break;
            }
            self.swap(i, parent);
            i = parent;
        }
        i
    }

    fn sift_down(&mut self, mut i: usize) {
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut best = i;
            if l < self.heap.len() && self.above(self.heap[l], self.heap[best]) {
                best = l;
            }
            if r < self.heap.len() && self.above(self.heap[r], self.heap[best]) {
                best = r;
            }
            if best == i {
                return;
            }
            self.swap(i, best);
            i = best;
        }
    }

    #[inline]
    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.pos[self.heap[i]] = i;
        self.pos[self.heap[j]] = j;
    }
}
