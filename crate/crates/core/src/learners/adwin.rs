//! ADWIN adaptive-window change detector over a bounded real-valued stream
//! (here: 0/1 prediction errors).
//!
//! The window is stored as an exponential histogram: row `i` holds buckets
//! that each summarize `2^i` consecutive items, newest at the front. Every
//! `clock` insertions the window is scanned for a split point where the means
//! of the older and newer parts differ by more than the cut bound; the oldest
//! buckets are dropped until no such split remains.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Bucket {
    total: f64,
    /// Sum of squared deviations from the bucket mean.
    m2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adwin {
    delta: f64,
    clock: u64,
    max_buckets: usize,
    min_window_length: u64,
    grace_period: u64,
    rows: Vec<VecDeque<Bucket>>,
    total: f64,
    m2: f64,
    width: u64,
    ticks: u64,
    detections: u64,
}

impl Default for Adwin {
    fn default() -> Self {
        Self::new(0.002)
    }
}

impl Adwin {
    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            clock: 32,
            max_buckets: 5,
            min_window_length: 5,
            grace_period: 10,
            rows: Vec::new(),
            total: 0.0,
            m2: 0.0,
            width: 0,
            ticks: 0,
            detections: 0,
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    /// Mean of the current window, 0 when empty.
    pub fn estimation(&self) -> f64 {
        if self.width == 0 {
            0.0
        } else {
            self.total / self.width as f64
        }
    }

    /// Population variance of the current window.
    pub fn variance(&self) -> f64 {
        if self.width == 0 {
            0.0
        } else {
            self.m2 / self.width as f64
        }
    }

    pub fn detections(&self) -> u64 {
        self.detections
    }

    /// Adds one value; returns `true` when a change was detected (and the
    /// window shrunk) on this insertion.
    pub fn update(&mut self, value: f64) -> bool {
        self.insert(value);
        self.compress();
        self.ticks += 1;
        let mut change = false;
        if self.ticks % self.clock == 0 && self.width > self.grace_period {
            change = self.detect_and_shrink();
        }
        if change {
            self.detections += 1;
        }
        change
    }

    fn insert(&mut self, value: f64) {
        if self.rows.is_empty() {
            self.rows.push(VecDeque::new());
        }
        self.rows[0].push_front(Bucket {
            total: value,
            m2: 0.0,
        });
        self.width += 1;
        if self.width > 1 {
            let prev_mean = self.total / (self.width - 1) as f64;
            let d = value - prev_mean;
            self.m2 += (self.width - 1) as f64 * d * d / self.width as f64;
        }
        self.total += value;
    }

    fn compress(&mut self) {
        let mut row = 0;
        while row < self.rows.len() {
            if self.rows[row].len() <= self.max_buckets {
                break;
            }
            let size = (1u64 << row) as f64;
            // the two oldest buckets of this row
            let a = self.rows[row].pop_back().expect("row overflow");
            let b = self.rows[row].pop_back().expect("row overflow");
            let d = a.total / size - b.total / size;
            let merged = Bucket {
                total: a.total + b.total,
                m2: a.m2 + b.m2 + size * size * d * d / (2.0 * size),
            };
            if row + 1 == self.rows.len() {
                self.rows.push(VecDeque::new());
            }
            self.rows[row + 1].push_front(merged);
            row += 1;
        }
    }

    fn detect_and_shrink(&mut self) -> bool {
        let mut changed = false;
        loop {
            if !self.find_cut() {
                break;
            }
            changed = true;
            self.drop_oldest();
            if self.width <= self.min_window_length {
                break;
            }
        }
        changed
    }

    /// Scans split points from the oldest end; true if any violates the bound.
    fn find_cut(&self) -> bool {
        let mut n0 = 0u64;
        let mut u0 = 0.0;
        let mut n1 = self.width;
        let mut u1 = self.total;
        for (row, buckets) in self.rows.iter().enumerate().rev() {
            let size = 1u64 << row;
            for b in buckets.iter().rev() {
                n0 += size;
                n1 -= size;
                u0 += b.total;
                u1 -= b.total;
                if n1 < self.min_window_length {
                    return false;
                }
                if n0 >= self.min_window_length && self.cut_expression(n0, n1, u0, u1) {
                    return true;
                }
            }
        }
        false
    }

    fn cut_expression(&self, n0: u64, n1: u64, u0: f64, u1: f64) -> bool {
        let n = self.width as f64;
        let diff = libm::fabs(u0 / n0 as f64 - u1 / n1 as f64);
        let v = self.variance();
        let dd = libm::log(2.0 * libm::log(n) / self.delta);
        let min_len = self.min_window_length as f64;
        let m = 1.0 / (n0 as f64 - min_len + 1.0) + 1.0 / (n1 as f64 - min_len + 1.0);
        let eps = libm::sqrt(2.0 * m * v * dd) + 2.0 / 3.0 * dd * m;
        diff > eps
    }

    fn drop_oldest(&mut self) {
        let Some(row) = self.rows.iter().rposition(|r| !r.is_empty()) else {
            return;
        };
        let bucket = self.rows[row].pop_back().expect("non-empty row");
        let size = 1u64 << row;
        let rest = self.width - size;
        if rest == 0 {
            self.total = 0.0;
            self.m2 = 0.0;
        } else {
            let mean_b = bucket.total / size as f64;
            let mean_rest = (self.total - bucket.total) / rest as f64;
            let d = mean_b - mean_rest;
            self.m2 -= bucket.m2 + (size * rest) as f64 * d * d / self.width as f64;
            self.m2 = self.m2.max(0.0);
            self.total -= bucket.total;
        }
        self.width = rest;
        while self.rows.last().is_some_and(VecDeque::is_empty) {
            self.rows.pop();
        }
    }
}
