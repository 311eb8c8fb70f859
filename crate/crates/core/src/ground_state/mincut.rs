//! Dinic maximum flow with extremal minimum cuts.

use std::collections::VecDeque;

use crate::num::Real;

pub struct FlowNetwork<R: Real> {
    adj: Vec<Vec<u32>>,
    to: Vec<u32>,
    cap: Vec<R>,
}

impl<R: Real> FlowNetwork<R> {
    pub fn new(nodes: usize) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
        }
    }

    pub fn nodes(&self) -> usize {
        self.adj.len()
    }

    /// Arc pair `u → v` with capacity `c_uv` and `v → u` with capacity `c_vu`.
    pub fn add_edge(&mut self, u: usize, v: usize, c_uv: R, c_vu: R) {
        let a = self.to.len() as u32;
        self.to.push(v as u32);
        self.cap.push(c_uv);
        self.to.push(u as u32);
        self.cap.push(c_vu);
        self.adj[u].push(a);
        self.adj[v].push(a + 1);
    }

    fn levels(&self, s: usize, eps: R) -> Vec<i32> {
        let mut level = vec![-1; self.nodes()];
        level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &a in &self.adj[u] {
                let v = self.to[a as usize] as usize;
                if level[v] < 0 && self.cap[a as usize] > eps {
                    level[v] = level[u] + 1;
                    q.push_back(v);
                }
            }
        }
        level
    }

    /// Pushes a maximum flow from `s` to `t`; residual capacities stay in the network.
    pub fn max_flow(&mut self, s: usize, t: usize) -> R {
        let eps = R::of(R::FLOW_EPS);
        let mut total = R::zero();
        loop {
            let mut level = self.levels(s, eps);
            if level[t] < 0 {
                return total;
            }
            let mut it = vec![0usize; self.nodes()];
            let mut path: Vec<u32> = Vec::new();
            let mut u = s;
            loop {
                if u == t {
                    let f = path
                        .iter()
                        .map(|&a| self.cap[a as usize])
                        .fold(R::infinity(), R::min);
                    for &a in &path {
                        self.cap[a as usize] = self.cap[a as usize] - f;
                        self.cap[(a ^ 1) as usize] = self.cap[(a ^ 1) as usize] + f;
                    }
                    total = total + f;
                    path.clear();
                    u = s;
                    continue;
                }
                let mut advanced = false;
                while it[u] < self.adj[u].len() {
                    let a = self.adj[u][it[u]];
                    let v = self.to[a as usize] as usize;
                    if self.cap[a as usize] > eps && level[v] == level[u] + 1 {
                        path.push(a);
                        u = v;
                        advanced = true;
                        break;
                    }
                    it[u] += 1;
                }
                if advanced {
                    continue;
                }
                if u == s {
                    break;
                }
                level[u] = -1;
                let a = path.pop().unwrap();
                u = self.to[(a ^ 1) as usize] as usize;
                it[u] += 1;
            }
        }
    }

    /// Nodes reachable from `s` through arcs with residual above `eps`.
    pub fn source_reachable(&self, s: usize, eps: R) -> Vec<bool> {
        let mut seen = vec![false; self.nodes()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &a in &self.adj[u] {
                let v = self.to[a as usize] as usize;
                if !seen[v] && self.cap[a as usize] > eps {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Nodes from which `t` is reachable through arcs with residual above `eps`.
    pub fn sink_reaching(&self, t: usize, eps: R) -> Vec<bool> {
        let mut seen = vec![false; self.nodes()];
        seen[t] = true;
        let mut stack = vec![t];
        while let Some(v) = stack.pop() {
            for &a in &self.adj[v] {
                // arc a leaves v; its reverse a^1 enters v from u
                let u = self.to[a as usize] as usize;
                if !seen[u] && self.cap[(a ^ 1) as usize] > eps {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }
}
