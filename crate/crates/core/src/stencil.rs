//! Periodic discrete balls and fast per-center window sums and maxima.
//!
//! A ball of radius `r` around a cell contains every cell whose center lies at
//! torus distance strictly less than `r`. Each ball is stored as a list of row
//! offsets (axis 1) with a symmetric half-width along axis 0.

use rayon::prelude::*;

use crate::grid::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RowExtent {
    Full,
    Half(usize),
}

#[derive(Debug, Clone)]
pub(crate) struct BallStencil {
    rows: Vec<(i64, RowExtent)>,
    count: usize,
}

/// Largest integer `m >= 0` with `m^2 < bound`, or `None` if `bound <= 0`.
fn strict_isqrt(bound: f64) -> Option<usize> {
    if bound <= 0.0 {
        return None;
    }
    let mut m = bound.sqrt().floor() as usize;
    while (m * m) as f64 >= bound && m > 0 {
        m -= 1;
    }
    while (((m + 1) * (m + 1)) as f64) < bound {
        m += 1;
    }
    Some(m)
}

impl BallStencil {
    pub(crate) fn new(grid: &GridSpec, radius: f64) -> Self {
        let n = grid.n();
        let half = n / 2;
        let mut q = radius / grid.spacing();
        if (q - q.round()).abs() < 1e-9 {
            q = q.round();
        }
        let q2 = q * q;
        let extent_for = |dy: i64| -> Option<RowExtent> {
            let w = strict_isqrt(q2 - (dy * dy) as f64)?;
            Some(if w >= half { RowExtent::Full } else { RowExtent::Half(w) })
        };
        let mut rows = Vec::new();
        if grid.dim() == 1 {
            if let Some(e) = extent_for(0) {
                rows.push((0, e));
            }
        } else {
            let lo = -(half as i64) + 1;
            for dy in lo..=half as i64 {
                if let Some(e) = extent_for(dy) {
                    rows.push((dy, e));
                }
            }
        }
        let count = rows
            .iter()
            .map(|(_, e)| match e {
                RowExtent::Full => n,
                RowExtent::Half(w) => 2 * w + 1,
            })
            .sum();
        Self { rows, count }
    }

    /// Number of cells in the ball.
    pub(crate) fn count(&self) -> usize {
        self.count
    }

    /// Every cell offset in the ball, axis 0 offsets in `(-N/2, N/2]` when full.
    pub(crate) fn offsets(&self, grid: &GridSpec) -> Vec<[i64; 2]> {
        let half = (grid.n() / 2) as i64;
        let mut out = Vec::with_capacity(self.count);
        for &(dy, e) in &self.rows {
            match e {
                RowExtent::Full => out.extend((-half + 1..=half).map(|dx| [dx, dy])),
                RowExtent::Half(w) => {
                    let w = w as i64;
                    out.extend((-w..=w).map(|dx| [dx, dy]));
                }
            }
        }
        out
    }
}

/// Periodic prefix sums per row, answering ball sums in `O(rows)`.
pub(crate) struct PeriodicPrefix {
    n: usize,
    raw: Vec<Vec<f64>>,
    rows: Vec<Vec<f64>>,
}

/// Windows this short are summed directly, which keeps one-cell sums exact.
const DIRECT_WINDOW: usize = 16;

impl PeriodicPrefix {
    pub(crate) fn new(grid: &GridSpec, values: &[f64]) -> Self {
        let n = grid.n();
        let rows = values
            .chunks(n)
            .map(|row| {
                let mut p = Vec::with_capacity(n + 1);
                let mut acc = 0.0;
                p.push(0.0);
                for v in row {
                    acc += v;
                    p.push(acc);
                }
                p
            })
            .collect();
        let raw = values.chunks(n).map(<[f64]>::to_vec).collect();
        Self { n, raw, rows }
    }

    /// Sum of `row[k]` over the periodic index range `[a, b)`.
    fn range(&self, row: usize, a: i64, b: i64) -> f64 {
        let n = self.n as i64;
        let p = &self.rows[row];
        let total = p[self.n];
        let cum = |k: i64| total * k.div_euclid(n) as f64 + p[k.rem_euclid(n) as usize];
        cum(b) - cum(a)
    }

    pub(crate) fn ball_sum(&self, grid: &GridSpec, center: usize, stencil: &BallStencil) -> f64 {
        let n = self.n as i64;
        let [cx, cy] = grid.multi_index(center);
        let mut s = 0.0;
        for &(dy, e) in &stencil.rows {
            let row = (cy as i64 + dy).rem_euclid(n) as usize;
            s += match e {
                RowExtent::Full => self.rows[row][self.n],
                RowExtent::Half(w) if 2 * w < DIRECT_WINDOW => {
                    let w = w as i64;
                    (cx as i64 - w..=cx as i64 + w)
                        .map(|i| self.raw[row][i.rem_euclid(n) as usize])
                        .sum()
                }
                RowExtent::Half(w) => {
                    let w = w as i64;
                    self.range(row, cx as i64 - w, cx as i64 + w + 1)
                }
            };
        }
        s
    }
}

/// Ball sums at every center.
pub(crate) fn ball_sums(grid: &GridSpec, values: &[f64], stencil: &BallStencil) -> Vec<f64> {
    let prefix = PeriodicPrefix::new(grid, values);
    (0..grid.len())
        .into_par_iter()
        .map(|c| prefix.ball_sum(grid, c, stencil))
        .collect()
}

/// Sparse tables over each row doubled, for periodic range maxima.
pub(crate) struct PeriodicRangeMax {
    n: usize,
    tables: Vec<Vec<Vec<f64>>>,
}

impl PeriodicRangeMax {
    pub(crate) fn new(grid: &GridSpec, values: &[f64]) -> Self {
        let n = grid.n();
        let tables = values
            .chunks(n)
            .map(|row| {
                let base: Vec<f64> = row.iter().chain(row.iter()).copied().collect();
                let mut levels = vec![base];
                let mut span = 1;
                while 2 * span <= 2 * n {
                    let prev = levels.last().expect("nonempty");
                    let next: Vec<f64> = (0..prev.len() - span)
                        .map(|i| prev[i].max(prev[i + span]))
                        .collect();
                    levels.push(next);
                    span *= 2;
                }
                levels
            })
            .collect();
        Self { n, tables }
    }

    /// Maximum over the periodic range `[a, a + len)`, `1 <= len <= N`.
    fn range(&self, row: usize, a: i64, len: usize) -> f64 {
        let start = a.rem_euclid(self.n as i64) as usize;
        let level = usize::BITS as usize - 1 - len.leading_zeros() as usize;
        let t = &self.tables[row][level];
        t[start].max(t[start + len - (1 << level)])
    }

    pub(crate) fn ball_max(&self, grid: &GridSpec, center: usize, stencil: &BallStencil) -> f64 {
        let n = self.n as i64;
        let [cx, cy] = grid.multi_index(center);
        let mut m = f64::NEG_INFINITY;
        for &(dy, e) in &stencil.rows {
            let row = (cy as i64 + dy).rem_euclid(n) as usize;
            let v = match e {
                RowExtent::Full => self.range(row, 0, self.n),
                RowExtent::Half(w) => self.range(row, cx as i64 - w as i64, 2 * w + 1),
            };
            m = m.max(v);
        }
        m
    }
}

/// Ball maxima at every center.
pub(crate) fn ball_maxima(grid: &GridSpec, values: &[f64], stencil: &BallStencil) -> Vec<f64> {
    let table = PeriodicRangeMax::new(grid, values);
    (0..grid.len())
        .into_par_iter()
        .map(|c| table.ball_max(grid, c, stencil))
        .collect()
}
