//! Dense linear assignment by shortest augmenting paths.
//!
//! Dual variables start from a column reduction; every still-free row is then
//! matched along a Dijkstra shortest path in the reduced costs. Costs are
//! pulled lazily from a closure so no `n × n` matrix is ever stored.

/// Optimal assignment: `row_to_col[i]` and the total cost.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub row_to_col: Vec<usize>,
    pub cost: f64,
}

const FREE: usize = usize::MAX;

/// Source of the cost `c(i, j)`. Columns may carry a packed payload that is
/// copied into a contiguous buffer during each shortest-path search.
pub trait CostSource {
    fn cost(&self, i: usize, j: usize) -> f64;

    fn payload_len(&self) -> usize {
        0
    }

    fn pack(&self, _j: usize, _out: &mut [f64]) {}

    fn cost_packed(&self, i: usize, j: usize, _payload: &[f64]) -> f64 {
        self.cost(i, j)
    }

    /// `dist[k] ← min(dist[k], base + c(i, col[k]) − price[k])`, recording `i`
    /// in `pred` where the distance drops.
    #[allow(clippy::too_many_arguments)]
    fn relax(&self, i: usize, base: f64, col: &[usize], payload: &[f64], price: &[f64], dist: &mut [f64], pred: &mut [usize]) {
        let w = self.payload_len();
        for k in 0..col.len() {
            let c = if w == 0 {
                self.cost(i, col[k])
            } else {
                self.cost_packed(i, col[k], &payload[k * w..(k + 1) * w])
            };
            let r = base + c - price[k];
            if r < dist[k] {
                pred[k] = i;
                dist[k] = r;
            }
        }
    }
}

impl<F: Fn(usize, usize) -> f64> CostSource for F {
    fn cost(&self, i: usize, j: usize) -> f64 {
        self(i, j)
    }
}

/// Squared Euclidean distances between rows of two flat `n × d` buffers.
pub struct SquaredEuclidean<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub dim: usize,
}

impl CostSource for SquaredEuclidean<'_> {
    #[inline]
    fn cost(&self, i: usize, j: usize) -> f64 {
        let d = self.dim;
        self.cost_packed(i, j, &self.y[j * d..(j + 1) * d])
    }

    fn payload_len(&self) -> usize {
        self.dim
    }

    fn pack(&self, j: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.y[j * self.dim..(j + 1) * self.dim]);
    }

    #[inline]
    fn cost_packed(&self, i: usize, _j: usize, yj: &[f64]) -> f64 {
        if self.dim == 2 {
            let (a, b) = (self.x[2 * i] - yj[0], self.x[2 * i + 1] - yj[1]);
            return a * a + b * b;
        }
        let xi = &self.x[i * self.dim..(i + 1) * self.dim];
        let mut s = 0.0;
        for (a, b) in xi.iter().zip(yj) {
            let t = a - b;
            s += t * t;
        }
        s
    }

    fn relax(&self, i: usize, base: f64, col: &[usize], payload: &[f64], price: &[f64], dist: &mut [f64], pred: &mut [usize]) {
        if self.dim != 2 {
            for k in 0..col.len() {
                let r = base + self.cost_packed(i, col[k], &payload[k * self.dim..(k + 1) * self.dim]) - price[k];
                if r < dist[k] {
                    pred[k] = i;
                    dist[k] = r;
                }
            }
            return;
        }
        let (x0, x1) = (self.x[2 * i], self.x[2 * i + 1]);
        let n = col.len();
        let (payload, price, dist, pred) = (&payload[..2 * n], &price[..n], &mut dist[..n], &mut pred[..n]);
        for k in 0..n {
            let (a, b) = (x0 - payload[2 * k], x1 - payload[2 * k + 1]);
            let r = base + (a * a + b * b) - price[k];
            let better = r < dist[k];
            pred[k] = if better { i } else { pred[k] };
            dist[k] = if better { r } else { dist[k] };
        }
    }
}

/// Columns not yet settled in the current search, stored contiguously.
struct Todo {
    col: Vec<usize>,
    price: Vec<f64>,
    dist: Vec<f64>,
    pred: Vec<usize>,
    payload: Vec<f64>,
    width: usize,
}

impl Todo {
    fn swap_remove(&mut self, k: usize) -> (usize, f64, usize) {
        let out = (self.col.swap_remove(k), self.dist.swap_remove(k), self.pred.swap_remove(k));
        self.price.swap_remove(k);
        if self.width > 0 {
            let last = self.col.len();
            if k != last {
                let w = self.width;
                self.payload.copy_within(last * w..(last + 1) * w, k * w);
            }
            self.payload.truncate(last * self.width);
        }
        out
    }
}

pub fn solve<C: CostSource>(n: usize, cost: C) -> Assignment {
    if n == 0 {
        return Assignment {
            row_to_col: Vec::new(),
            cost: 0.0,
        };
    }
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut col4row = vec![FREE; n];
    let mut row4col = vec![FREE; n];

    // column reduction
    for j in 0..n {
        let (mut best, mut arg) = (f64::INFINITY, 0);
        for i in 0..n {
            let c = cost.cost(i, j);
            if c < best {
                best = c;
                arg = i;
            }
        }
        v[j] = best;
        if col4row[arg] == FREE {
            col4row[arg] = j;
            row4col[j] = arg;
        }
    }

    augmenting_row_reduction(n, &cost, &mut v, &mut col4row, &mut row4col);
    for i in 0..n {
        if col4row[i] != FREE {
            u[i] = cost.cost(i, col4row[i]) - v[col4row[i]];
        }
    }

    let width = cost.payload_len();
    let mut packed = vec![0.0; n * width];
    for j in 0..n {
        cost.pack(j, &mut packed[j * width..(j + 1) * width]);
    }
    let mut todo = Todo {
        col: Vec::with_capacity(n),
        price: Vec::with_capacity(n),
        dist: Vec::with_capacity(n),
        pred: Vec::with_capacity(n),
        payload: Vec::with_capacity(n * width),
        width,
    };
    let mut spc = vec![0.0; n];
    let mut path = vec![FREE; n];
    let mut scanned_rows: Vec<usize> = Vec::with_capacity(n);
    let mut scanned_cols: Vec<usize> = Vec::with_capacity(n);

    for cur in 0..n {
        if col4row[cur] != FREE {
            continue;
        }
        todo.col.clear();
        todo.col.extend(0..n);
        todo.price.clear();
        todo.price.extend_from_slice(&v);
        todo.dist.clear();
        todo.dist.resize(n, f64::INFINITY);
        todo.pred.clear();
        todo.pred.resize(n, FREE);
        todo.payload.clear();
        todo.payload.extend_from_slice(&packed);
        scanned_rows.clear();
        scanned_cols.clear();
        let mut min_val = 0.0;
        let mut i = cur;
        let sink = loop {
            scanned_rows.push(i);
            let base = min_val - u[i];
            cost.relax(i, base, &todo.col, &todo.payload, &todo.price, &mut todo.dist, &mut todo.pred);
            let lowest = todo.dist.iter().copied().fold(f64::INFINITY, f64::min);
            let mut index = FREE;
            for (k, &d) in todo.dist.iter().enumerate() {
                if d == lowest {
                    if row4col[todo.col[k]] == FREE {
                        index = k;
                        break;
                    }
                    if index == FREE {
                        index = k;
                    }
                }
            }
            min_val = lowest;
            let (j, d, p) = todo.swap_remove(index);
            spc[j] = d;
            path[j] = p;
            scanned_cols.push(j);
            if row4col[j] == FREE {
                break j;
            }
            i = row4col[j];
        };

        // dual update keeps reduced costs non-negative and tight on the path
        u[cur] += min_val;
        for &r in &scanned_rows {
            if r != cur {
                u[r] += min_val - spc[col4row[r]];
            }
        }
        for &j in &scanned_cols {
            v[j] -= min_val - spc[j];
        }

        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            let prev = col4row[r];
            col4row[r] = j;
            if r == cur {
                break;
            }
            j = prev;
        }
    }

    let total = (0..n).map(|i| cost.cost(i, col4row[i])).sum();
    Assignment {
        row_to_col: col4row,
        cost: total,
    }
}

/// Jonker–Volgenant augmenting row reduction with a cap on row scans. Prices
/// only decrease and every column whose price drops changes owner, so each
/// assigned row stays at its row minimum.
fn augmenting_row_reduction<C: CostSource>(
    n: usize,
    cost: &C,
    v: &mut [f64],
    col4row: &mut [usize],
    row4col: &mut [usize],
) {
    let mut free: Vec<usize> = (0..n).filter(|&i| col4row[i] == FREE).collect();
    let mut budget = 2 * n;
    for _ in 0..2 {
        let mut k = 0;
        let pending = free.len();
        let mut next_free = Vec::new();
        while k < pending {
            if budget == 0 {
                next_free.extend_from_slice(&free[k..pending]);
                break;
            }
            budget -= 1;
            let i = free[k];
            k += 1;
            let (mut umin, mut usub) = (cost.cost(i, 0) - v[0], f64::INFINITY);
            let (mut j1, mut j2) = (0, FREE);
            for j in 1..n {
                let h = cost.cost(i, j) - v[j];
                if h < usub {
                    if h >= umin {
                        usub = h;
                        j2 = j;
                    } else {
                        usub = umin;
                        umin = h;
                        j2 = j1;
                        j1 = j;
                    }
                }
            }
            let mut i0 = row4col[j1];
            let strict = umin < usub;
            if strict {
                v[j1] -= usub - umin;
            } else if i0 != FREE && j2 != FREE {
                j1 = j2;
                i0 = row4col[j2];
            }
            if i0 != FREE {
                col4row[i0] = FREE;
            }
            col4row[i] = j1;
            row4col[j1] = i;
            if i0 != FREE {
                if strict {
                    k -= 1;
                    free[k] = i0;
                } else {
                    next_free.push(i0);
                }
            }
        }
        free = next_free;
    }
}
