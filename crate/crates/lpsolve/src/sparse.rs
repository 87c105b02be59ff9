//! Work vectors that carry their nonzero pattern, and triangular solves that
//! only touch the part of the factor reachable from that pattern.

/// Dense values plus a list of indices that covers every nonzero.
#[derive(Debug, Clone)]
pub(crate) struct SparseVec {
    pub val: Vec<f64>,
    pub idx: Vec<usize>,
    listed: Vec<bool>,
}

impl SparseVec {
    pub fn new(m: usize) -> Self {
        Self {
            val: vec![0.0; m],
            idx: Vec::new(),
            listed: vec![false; m],
        }
    }

    pub fn len(&self) -> usize {
        self.val.len()
    }

    pub fn clear(&mut self) {
        if self.idx.len() * 4 > self.val.len() {
            self.val.fill(0.0);
            self.listed.fill(false);
        } else {
            for &i in &self.idx {
                self.val[i] = 0.0;
                self.listed[i] = false;
            }
        }
        self.idx.clear();
    }

    pub fn set(&mut self, i: usize, v: f64) {
        if !self.listed[i] {
            self.listed[i] = true;
            self.idx.push(i);
        }
        self.val[i] = v;
    }

    pub fn add(&mut self, i: usize, v: f64) {
        if !self.listed[i] {
            self.listed[i] = true;
            self.idx.push(i);
        }
        self.val[i] += v;
    }

    /// Recomputes the pattern after the values were written densely.
    pub fn rebuild(&mut self) {
        self.idx.clear();
        for (i, (&v, l)) in self.val.iter().zip(self.listed.iter_mut()).enumerate() {
            *l = v != 0.0;
            if *l {
                self.idx.push(i);
            }
        }
    }

    pub fn copy_from(&mut self, other: &SparseVec) {
        self.clear();
        for &i in &other.idx {
            self.set(i, other.val[i]);
        }
    }

    /// Replaces the pattern with `pattern`, which must cover every nonzero.
    fn set_pattern(&mut self, pattern: &[usize]) {
        for &i in &self.idx {
            self.listed[i] = false;
        }
        self.idx.clear();
        for &i in pattern {
            self.listed[i] = true;
            self.idx.push(i);
        }
    }
}

/// Scratch space for depth-first reach computations.
#[derive(Debug, Clone)]
pub(crate) struct Dfs {
    mark: Vec<bool>,
    stack: Vec<(usize, usize)>,
    post: Vec<usize>,
}

impl Dfs {
    pub fn new(m: usize) -> Self {
        Self {
            mark: vec![false; m],
            stack: Vec::new(),
            post: Vec::new(),
        }
    }
}

/// Triangular matrix as a graph: after `x[s]` is final, every edge
/// `(s, t, a)` applies `x[t] -= a * x[s]`. Edges go to higher nodes when
/// `forward` and to lower nodes otherwise.
#[derive(Debug, Clone, Default)]
pub(crate) struct Triangle {
    start: Vec<usize>,
    target: Vec<usize>,
    coef: Vec<f64>,
    forward: bool,
}

impl Triangle {
    /// Builds the graph from `(from, to, coef)` edges over `m` nodes.
    pub fn from_edges(m: usize, edges: &[(usize, usize, f64)], forward: bool) -> Self {
        let mut start = vec![0usize; m + 1];
        for &(s, _, _) in edges {
            start[s + 1] += 1;
        }
        for s in 0..m {
            start[s + 1] += start[s];
        }
        let mut next = start.clone();
        let mut target = vec![0; edges.len()];
        let mut coef = vec![0.0; edges.len()];
        for &(s, t, a) in edges {
            debug_assert!(if forward { t > s } else { t < s });
            target[next[s]] = t;
            coef[next[s]] = a;
            next[s] += 1;
        }
        Self {
            start,
            target,
            coef,
            forward,
        }
    }

    pub fn nnz(&self) -> usize {
        self.target.len()
    }

    #[inline]
    fn step(&self, s: usize, diag: Option<&[f64]>, x: &mut [f64]) {
        if let Some(d) = diag {
            x[s] /= d[s];
        }
        let v = x[s];
        if v != 0.0 {
            for k in self.start[s]..self.start[s + 1] {
                x[self.target[k]] -= self.coef[k] * v;
            }
        }
    }

    /// Solves in place, dividing each node by `diag` before propagating.
    pub fn solve(&self, diag: Option<&[f64]>, x: &mut SparseVec, dfs: &mut Dfs) {
        let m = x.len();
        if x.idx.len() * 10 < m && self.reach(&x.idx, m / 10, dfs) {
            for &s in dfs.post.iter().rev() {
                self.step(s, diag, &mut x.val);
            }
            for &s in &dfs.post {
                dfs.mark[s] = false;
            }
            x.set_pattern(&dfs.post);
            return;
        }
        if self.forward {
            for s in 0..m {
                self.step(s, diag, &mut x.val);
            }
        } else {
            for s in (0..m).rev() {
                self.step(s, diag, &mut x.val);
            }
        }
        x.rebuild();
    }

    /// Collects the nodes reachable from `roots` in postorder. Gives up and
    /// leaves no marks behind once more than `limit` nodes are reached.
    fn reach(&self, roots: &[usize], limit: usize, dfs: &mut Dfs) -> bool {
        dfs.post.clear();
        for &r in roots {
            if dfs.mark[r] {
                continue;
            }
            dfs.mark[r] = true;
            dfs.stack.push((r, self.start[r]));
            while let Some(top) = dfs.stack.last_mut() {
                let (node, k) = *top;
                if k < self.start[node + 1] {
                    top.1 += 1;
                    let t = self.target[k];
                    if !dfs.mark[t] {
                        dfs.mark[t] = true;
                        dfs.stack.push((t, self.start[t]));
                    }
                } else {
                    dfs.stack.pop();
                    dfs.post.push(node);
                }
            }
            if dfs.post.len() > limit {
                for &s in &dfs.post {
                    dfs.mark[s] = false;
                }
                dfs.post.clear();
                return false;
            }
        }
        true
    }
}
