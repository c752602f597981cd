//! Exact and heuristic search for small ordered orthogonal arrays.
//!
//! [`find_min_size`] settles `N(q, n, r, t)` by exhaustive backtracking over
//! sorted row sequences. Two symmetry reductions keep it small, both sound:
//!
//! * translating every row by a fixed word preserves the property, so the
//!   first (smallest) row can be taken to be all zeros;
//! * the first column is balanced in any solution, so in a sorted solution
//!   row `k` starts with symbol `k / (M / q)`.
//!
//! A branch is cut as soon as some shape sees a tuple more than `λ` times.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::construct::full_factorial;
use crate::design::{enumerate_shapes, shape_to_columns, SymbolArray};
use crate::error::{Error, Result};

/// Largest ground set the exact search will index.
pub const MAX_POINTS: u64 = 1 << 20;
/// Largest `|X| · |S|` code table the search will build.
const MAX_CODE_TABLE: u64 = 1 << 26;
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    /// Rows must be distinct.
    Set,
    /// Rows may repeat.
    #[default]
    Multiset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    /// Smallest feasible size, every smaller candidate exhausted.
    ExactMinimum,
    /// A witness was found; minimality is not claimed.
    FoundUpperBound,
    /// The requested size admits no solution.
    ExhaustedNoSolution,
    /// The node budget ran out; `size` and `witness` hold the full factorial.
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult {
    pub q: u32,
    pub n: usize,
    pub r: usize,
    pub t: usize,
    pub status: SearchStatus,
    pub size: Option<u64>,
    pub witness: Option<SymbolArray>,
    pub nodes_explored: u64,
    pub mode: SearchMode,
    pub seed: u64,
}

impl Serialize for SearchResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire {
            q: u32,
            n: usize,
            r: usize,
            t: usize,
            status: SearchStatus,
            size: Option<u64>,
            witness: Option<String>,
            nodes_explored: u64,
            mode: SearchMode,
            seed: u64,
        }
        Wire {
            q: self.q,
            n: self.n,
            r: self.r,
            t: self.t,
            status: self.status,
            size: self.size,
            witness: self.witness.as_ref().map(|w| crate::io::format_array(w, self.t)),
            nodes_explored: self.nodes_explored,
            mode: self.mode,
            seed: self.seed,
        }
        .serialize(s)
    }
}

/// `Σ_shapes Σ_tuples |observed - λ|`; zero exactly when the array is an OOA.
pub fn violation_count(array: &SymbolArray, q: u32, n: usize, r: usize, t: usize) -> Result<u64> {
    if array.width() != n * r {
        return Err(Error::DimensionMismatch(format!("array has {} columns, expected {}", array.width(), n * r)));
    }
    let qt = (q as u64).pow(t as u32);
    let m = array.num_rows();
    if !(m as u64).is_multiple_of(qt) || m == 0 {
        return Err(Error::NonDivisibleRows { rows: m, qt });
    }
    let lambda = m as u64 / qt;
    let mut total = 0u64;
    for shape in enumerate_shapes(n, r, t)? {
        let cols: Vec<usize> = shape_to_columns(&shape, r).iter().map(|c| c.offset(r)).collect();
        let mut counts = vec![0u64; qt as usize];
        for row in array.rows() {
            counts[tuple_code(row, &cols, q)] += 1;
        }
        total += counts.iter().map(|&c| c.abs_diff(lambda)).sum::<u64>();
    }
    Ok(total)
}

fn tuple_code(row: &[u32], cols: &[usize], q: u32) -> usize {
    cols.iter().fold(0usize, |acc, &c| acc * q as usize + row[c] as usize)
}

/// Tuple code of every candidate row on every shape.
struct CodeTable {
    q: u32,
    width: usize,
    points: usize,
    shapes: usize,
    qt: usize,
    codes: Vec<u32>,
}

impl CodeTable {
    fn new(q: u32, n: usize, r: usize, t: usize) -> Result<Self> {
        crate::design::ArrayParams::new(q, n, r, t, 1)?;
        let width = n * r;
        let points = (q as u64)
            .checked_pow(width as u32)
            .filter(|&p| p <= MAX_POINTS)
            .ok_or_else(|| Error::ScaleExceeded(format!("{q}^{width} candidate rows exceeds {MAX_POINTS}")))?;
        let shapes = enumerate_shapes(n, r, t)?;
        if points * shapes.len() as u64 > MAX_CODE_TABLE {
            return Err(Error::ScaleExceeded(format!("{points} rows × {} shapes", shapes.len())));
        }
        let cols: Vec<Vec<usize>> =
            shapes.iter().map(|s| shape_to_columns(s, r).iter().map(|c| c.offset(r)).collect()).collect();
        let mut codes = Vec::with_capacity(points as usize * cols.len());
        let mut row = vec![0u32; width];
        for idx in 0..points {
            decode(idx, q, &mut row);
            codes.extend(cols.iter().map(|c| tuple_code(&row, c, q) as u32));
        }
        Ok(Self { q, width, points: points as usize, shapes: cols.len(), qt: (q as usize).pow(t as u32), codes })
    }

    fn row_codes(&self, idx: usize) -> &[u32] {
        &self.codes[idx * self.shapes..(idx + 1) * self.shapes]
    }

    fn row(&self, idx: usize) -> Vec<u32> {
        let mut row = vec![0u32; self.width];
        decode(idx as u64, self.q, &mut row);
        row
    }
}

fn decode(mut idx: u64, q: u32, row: &mut [u32]) {
    for slot in row.iter_mut().rev() {
        *slot = (idx % q as u64) as u32;
        idx /= q as u64;
    }
}

enum Outcome {
    Found(Vec<usize>),
    Exhausted,
    OutOfBudget,
}

struct Backtrack<'a> {
    table: &'a CodeTable,
    lambda: u32,
    rows: usize,
    distinct: bool,
    counts: Vec<u32>,
    chosen: Vec<usize>,
    nodes: u64,
    budget: u64,
}

impl Backtrack<'_> {
    fn place(&mut self, idx: usize) -> bool {
        let mut ok = true;
        for (s, &code) in self.table.row_codes(idx).iter().enumerate() {
            let slot = &mut self.counts[s * self.table.qt + code as usize];
            *slot += 1;
            ok &= *slot <= self.lambda;
        }
        self.chosen.push(idx);
        ok
    }

    fn unplace(&mut self) {
        let idx = self.chosen.pop().expect("nonempty");
        for (s, &code) in self.table.row_codes(idx).iter().enumerate() {
            self.counts[s * self.table.qt + code as usize] -= 1;
        }
    }

    fn run(&mut self) -> Outcome {
        let block = self.table.points / self.table.q as usize;
        let per_symbol = self.rows / self.table.q as usize;
        // row 0 is the zero word
        self.nodes += 1;
        if self.place(0) && self.descend(block, per_symbol) {
            return Outcome::Found(self.chosen.clone());
        }
        if self.nodes > self.budget {
            Outcome::OutOfBudget
        } else {
            Outcome::Exhausted
        }
    }

    fn descend(&mut self, block: usize, per_symbol: usize) -> bool {
        let k = self.chosen.len();
        if k == self.rows {
            return true;
        }
        let lead = k / per_symbol;
        let prev = *self.chosen.last().expect("row 0 placed");
        let lo = (prev + usize::from(self.distinct)).max(lead * block);
        let hi = (lead + 1) * block;
        for idx in lo..hi {
            self.nodes += 1;
            if self.nodes > self.budget {
                return false;
            }
            let ok = self.place(idx);
            if ok && self.descend(block, per_symbol) {
                return true;
            }
            self.unplace();
            if self.nodes > self.budget {
                return false;
            }
        }
        false
    }
}

fn search_with_table(table: &CodeTable, lambda: u64, mode: SearchMode, budget: u64) -> (Outcome, u64) {
    let rows = lambda as usize * table.qt;
    if mode == SearchMode::Set && rows > table.points {
        return (Outcome::Exhausted, 0);
    }
    let mut bt = Backtrack {
        table,
        lambda: lambda as u32,
        rows,
        distinct: mode == SearchMode::Set,
        counts: vec![0; table.shapes * table.qt],
        chosen: Vec::with_capacity(rows),
        nodes: 0,
        budget,
    };
    let outcome = bt.run();
    (outcome, bt.nodes.min(budget))
}

fn witness(table: &CodeTable, n: usize, r: usize, rows: &[usize]) -> Result<SymbolArray> {
    let data = rows.iter().flat_map(|&i| table.row(i)).collect();
    SymbolArray::from_flat(table.q, n, r, data)
}

fn budget_result(
    q: u32,
    n: usize,
    r: usize,
    t: usize,
    mode: SearchMode,
    nodes: u64,
    seed: u64,
) -> Result<SearchResult> {
    let ff = full_factorial(q, n, r)?;
    Ok(SearchResult {
        q,
        n,
        r,
        t,
        status: SearchStatus::BudgetExceeded,
        size: Some(ff.num_rows() as u64),
        witness: Some(ff),
        nodes_explored: nodes,
        mode,
        seed,
    })
}

/// Smallest `M` admitting an OOA, trying `λ = 1, 2, …`. `budget` caps the
/// total number of search nodes over all `λ`.
pub fn find_min_size(q: u32, n: usize, r: usize, t: usize, mode: SearchMode, budget: u64) -> Result<SearchResult> {
    let table = CodeTable::new(q, n, r, t)?;
    let max_lambda = (table.points / table.qt) as u64;
    let mut spent = 0u64;
    for lambda in 1..=max_lambda {
        let (outcome, nodes) = search_with_table(&table, lambda, mode, budget - spent);
        spent += nodes;
        match outcome {
            Outcome::Found(rows) => {
                return Ok(SearchResult {
                    q,
                    n,
                    r,
                    t,
                    status: SearchStatus::ExactMinimum,
                    size: Some(rows.len() as u64),
                    witness: Some(witness(&table, n, r, &rows)?),
                    nodes_explored: spent,
                    mode,
                    seed: 0,
                })
            }
            Outcome::Exhausted => {}
            Outcome::OutOfBudget => return budget_result(q, n, r, t, mode, spent, 0),
        }
    }
    unreachable!("the full factorial is a solution at λ = q^(nr-t)")
}

/// Exhaustive search at one fixed `λ`.
pub fn search_lambda(
    q: u32,
    n: usize,
    r: usize,
    t: usize,
    lambda: u64,
    mode: SearchMode,
    budget: u64,
) -> Result<SearchResult> {
    if lambda == 0 {
        return Err(Error::InvalidParams("lambda must be positive".into()));
    }
    let table = CodeTable::new(q, n, r, t)?;
    let (outcome, nodes) = search_with_table(&table, lambda, mode, budget);
    let (status, rows) = match outcome {
        Outcome::Found(rows) => (SearchStatus::FoundUpperBound, Some(rows)),
        Outcome::Exhausted => (SearchStatus::ExhaustedNoSolution, None),
        Outcome::OutOfBudget => return budget_result(q, n, r, t, mode, nodes, 0),
    };
    let witness = rows.as_deref().map(|rows| witness(&table, n, r, rows)).transpose()?;
    Ok(SearchResult {
        q,
        n,
        r,
        t,
        status,
        size: witness.as_ref().map(|w| w.num_rows() as u64),
        witness,
        nodes_explored: nodes,
        mode,
        seed: 0,
    })
}

/// Local search over row multisets of size `λ q^t`: replace one row at a time,
/// accepting worse states with probability `exp(-Δ/T)` under geometric cooling.
/// `budget` is the number of proposed moves.
pub fn anneal_search(
    q: u32,
    n: usize,
    r: usize,
    t: usize,
    lambda: u64,
    seed: u64,
    budget: u64,
) -> Result<SearchResult> {
    if lambda == 0 {
        return Err(Error::InvalidParams("lambda must be positive".into()));
    }
    let table = CodeTable::new(q, n, r, t)?;
    let rows = lambda as usize * table.qt;
    let done = |status, witness: SymbolArray, nodes| SearchResult {
        q,
        n,
        r,
        t,
        status,
        size: Some(witness.num_rows() as u64),
        witness: Some(witness),
        nodes_explored: nodes,
        mode: SearchMode::Multiset,
        seed,
    };
    if rows == table.points {
        return Ok(done(SearchStatus::FoundUpperBound, full_factorial(q, n, r)?, 0));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current: Vec<usize> = (0..rows).map(|_| rng.gen_range(0..table.points)).collect();
    let mut counts = vec![0i64; table.shapes * table.qt];
    for &idx in &current {
        for (s, &c) in table.row_codes(idx).iter().enumerate() {
            counts[s * table.qt + c as usize] += 1;
        }
    }
    let lam = lambda as i64;
    let mut cost: i64 = counts.iter().map(|&c| (c - lam).abs()).sum();
    let mut temperature = 2.0f64;
    let cooling = if budget > 0 { (0.02f64 / temperature).powf(1.0 / budget as f64) } else { 1.0 };

    let mut moves = 0u64;
    while cost > 0 && moves < budget {
        moves += 1;
        let slot = rng.gen_range(0..rows);
        let old = current[slot];
        let new = rng.gen_range(0..table.points);
        if new == old {
            continue;
        }
        let mut delta = 0i64;
        for (s, (&co, &cn)) in table.row_codes(old).iter().zip(table.row_codes(new)).enumerate() {
            if co == cn {
                continue;
            }
            let o = counts[s * table.qt + co as usize];
            let nn = counts[s * table.qt + cn as usize];
            delta += (o - 1 - lam).abs() - (o - lam).abs() + (nn + 1 - lam).abs() - (nn - lam).abs();
        }
        let accept = delta <= 0 || rng.gen::<f64>() < (-(delta as f64) / temperature).exp();
        if accept {
            for (s, (&co, &cn)) in table.row_codes(old).iter().zip(table.row_codes(new)).enumerate() {
                counts[s * table.qt + co as usize] -= 1;
                counts[s * table.qt + cn as usize] += 1;
            }
            current[slot] = new;
            cost += delta;
        }
        temperature *= cooling;
    }
    if cost == 0 {
        current.sort_unstable();
        return Ok(done(SearchStatus::FoundUpperBound, witness(&table, n, r, &current)?, moves));
    }
    let mut out = budget_result(q, n, r, t, SearchMode::Multiset, moves, seed)?;
    out.seed = seed;
    Ok(out)
}
