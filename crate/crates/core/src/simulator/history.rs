use std::collections::VecDeque;

/// Recent `(t, u, u̇)` samples with cubic Hermite interpolation.
///
/// Reads before `t = 0` return the quiescent initial history `u ≡ 0`.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    window: f64,
    n: usize,
    times: VecDeque<f64>,
    u: VecDeque<Vec<f64>>,
    v: VecDeque<Vec<f64>>,
}

impl HistoryBuffer {
    pub fn new(n: usize, window: f64) -> Self {
        HistoryBuffer {
            window,
            n,
            times: VecDeque::new(),
            u: VecDeque::new(),
            v: VecDeque::new(),
        }
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn latest_time(&self) -> Option<f64> {
        self.times.back().copied()
    }

    /// Appends a sample and drops those no longer needed to cover
    /// `[t − window, t]`.
    pub fn push(&mut self, t: f64, u: &[f64], v: &[f64]) {
        debug_assert!(self.times.back().is_none_or(|&last| t > last));
        self.times.push_back(t);
        self.u.push_back(u.to_vec());
        self.v.push_back(v.to_vec());
        let horizon = t - self.window;
        while self.times.len() > 2 && self.times[1] <= horizon {
            self.times.pop_front();
            self.u.pop_front();
            self.v.pop_front();
        }
    }

    /// Displacements at time `s`, written into `out`.
    pub fn displacement_at(&self, s: f64, out: &mut [f64]) {
        if s < 0.0 || self.times.is_empty() {
            out.fill(0.0);
            return;
        }
        let last = self.times.len() - 1;
        if s >= self.times[last] {
            out.copy_from_slice(&self.u[last]);
            return;
        }
        let idx = self.times.partition_point(|&t| t <= s);
        if idx == 0 {
            // older than the retained window: fall back to the oldest sample
            out.copy_from_slice(&self.u[0]);
            return;
        }
        let (i0, i1) = (idx - 1, idx);
        let (t0, t1) = (self.times[i0], self.times[i1]);
        let h = t1 - t0;
        let x = (s - t0) / h;
        let x2 = x * x;
        let x3 = x2 * x;
        let h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
        let h10 = x3 - 2.0 * x2 + x;
        let h01 = -2.0 * x3 + 3.0 * x2;
        let h11 = x3 - x2;
        let (u0, u1, v0, v1) = (&self.u[i0], &self.u[i1], &self.v[i0], &self.v[i1]);
        for k in 0..self.n {
            out[k] = h00 * u0[k] + h10 * h * v0[k] + h01 * u1[k] + h11 * h * v1[k];
        }
    }
}
