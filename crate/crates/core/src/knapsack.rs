//! Exact 0/1 knapsack over byte-sized items.
//!
//! Capacities are DRAM sizes (up to gigabytes), so the table is kept sparse:
//! for every suffix of the item list we store the Pareto frontier of
//! `(weight, value)` pairs. A forward pass then picks items greedily while the
//! optimum stays reachable, which favours items earlier in the list among all
//! value-optimal selections.

/// One candidate for local storage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnapsackItem {
    /// Caller-side tag, typically a layer index.
    pub tag: usize,
    pub weight: u64,
    pub value: f64,
}

/// Upper bound on stored frontier points across all suffixes.
const STATE_BUDGET: usize = 1 << 18;

type Frontier = Vec<(u64, f64)>;

fn best_within(frontier: &Frontier, capacity: u64) -> f64 {
    let i = frontier.partition_point(|&(w, _)| w <= capacity);
    // (0, 0.0) is always present
    frontier[i - 1].1
}

fn extend(next: &Frontier, item: &KnapsackItem, capacity: u64, max_points: usize) -> Frontier {
    let mut merged: Frontier = Vec::with_capacity(next.len() * 2);
    let (mut a, mut b) = (0, 0);
    let shifted = |j: usize| (next[j].0 + item.weight, next[j].1 + item.value);
    while a < next.len() || b < next.len() {
        let take_b = b < next.len() && shifted(b).0 <= capacity && (a >= next.len() || shifted(b).0 < next[a].0);
        let point = if take_b {
            b += 1;
            shifted(b - 1)
        } else if a < next.len() {
            a += 1;
            next[a - 1]
        } else {
            break;
        };
        match merged.last_mut() {
            Some(last) if last.0 == point.0 => {
                if point.1 > last.1 {
                    last.1 = point.1;
                }
            }
            _ => merged.push(point),
        }
    }
    let mut frontier: Frontier = Vec::with_capacity(merged.len());
    for p in merged {
        match frontier.last() {
            Some(&(_, v)) if p.1 <= v => {}
            _ => frontier.push(p),
        }
    }
    if frontier.len() > max_points {
        coarsen(&mut frontier, capacity, max_points);
    }
    frontier
}

/// Keeps the best point per weight bucket. Only reached on very large
/// instances; the result stays feasible but may lose optimality.
fn coarsen(frontier: &mut Frontier, capacity: u64, max_points: usize) {
    let buckets = (max_points / 2).max(1) as u64;
    let width = capacity / buckets + 1;
    let mut out: Frontier = Vec::with_capacity(max_points);
    for &p in frontier.iter() {
        match out.last_mut() {
            Some(last) if last.0 / width == p.0 / width && last.0 != 0 => *last = p,
            _ => out.push(p),
        }
    }
    *frontier = out;
}

fn tied(a: f64, b: f64) -> bool {
    a >= b - 1e-12 * a.abs().max(b.abs())
}

/// Maximizes total value subject to total weight `<= capacity`.
///
/// Returns a selection mask aligned with `items`. Among value-optimal
/// selections the one that prefers earlier items is returned, so callers
/// encode their tie-break priority in the item order.
pub fn knapsack_solver(items: &[KnapsackItem], capacity: u64) -> Vec<bool> {
    let total: u64 = items.iter().map(|i| i.weight).sum();
    if total <= capacity {
        return vec![true; items.len()];
    }
    let max_points = (STATE_BUDGET / items.len().max(1)).max(4096);
    let mut suffix: Vec<Frontier> = vec![Vec::new(); items.len() + 1];
    suffix[items.len()] = vec![(0, 0.0)];
    for i in (0..items.len()).rev() {
        suffix[i] = extend(&suffix[i + 1], &items[i], capacity, max_points);
    }
    let mut selected = vec![false; items.len()];
    let mut room = capacity;
    for (i, item) in items.iter().enumerate() {
        if item.weight > room {
            continue;
        }
        let with = item.value + best_within(&suffix[i + 1], room - item.weight);
        let without = best_within(&suffix[i + 1], room);
        if tied(with, without) {
            selected[i] = true;
            room -= item.weight;
        }
    }
    selected
}

/// Knapsack where some items must be kept. If the mandatory items alone
/// overflow, the lowest-value ones (latest in priority order on ties) are
/// evicted until they fit; the rest fill the remaining capacity optimally.
pub fn knapsack_with_mandatory(items: &[KnapsackItem], mandatory: &[bool], capacity: u64) -> Vec<bool> {
    let mut keep: Vec<usize> = (0..items.len()).filter(|&i| mandatory[i]).collect();
    let mut used: u64 = keep.iter().map(|&i| items[i].weight).sum();
    if used > capacity {
        // highest value first, earlier priority first on ties; evict from the back
        keep.sort_by(|&a, &b| items[b].value.total_cmp(&items[a].value).then(a.cmp(&b)));
        while used > capacity {
            let i = keep.pop().expect("overflow implies a mandatory item");
            used -= items[i].weight;
        }
    }
    let mut selected = vec![false; items.len()];
    for &i in &keep {
        selected[i] = true;
    }
    let optional: Vec<usize> = (0..items.len()).filter(|&i| !mandatory[i]).collect();
    let rest: Vec<KnapsackItem> = optional.iter().map(|&i| items[i]).collect();
    for (j, take) in knapsack_solver(&rest, capacity - used).into_iter().enumerate() {
        if take {
            selected[optional[j]] = true;
        }
    }
    selected
}

pub fn selection_value(items: &[KnapsackItem], selected: &[bool]) -> f64 {
    items
        .iter()
        .zip(selected)
        .filter(|(_, &s)| s)
        .map(|(i, _)| i.value)
        .sum()
}

pub fn selection_weight(items: &[KnapsackItem], selected: &[bool]) -> u64 {
    items
        .iter()
        .zip(selected)
        .filter(|(_, &s)| s)
        .map(|(i, _)| i.weight)
        .sum()
}
