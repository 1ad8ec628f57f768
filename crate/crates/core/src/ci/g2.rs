//! The G² likelihood-ratio test of conditional independence.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::chi2::chi_square_upper_tail;
use crate::dataset::Dataset;
use crate::graph::VarId;

/// Largest number of z-configurations counted in a dense array.
const DENSE_STRATA: usize = 1 << 20;

/// Counts `N[x][y][z]`, laid out with `y` fastest, then `x`, then the z
/// configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    rx: usize,
    ry: usize,
    strata: Vec<Vec<u32>>,
}

impl ContingencyTable {
    /// Table from per-stratum `rx × ry` blocks (row-major, `y` fastest).
    pub fn from_strata(rx: usize, ry: usize, strata: Vec<Vec<u32>>) -> Self {
        assert!(strata.iter().all(|s| s.len() == rx * ry), "every stratum holds rx*ry cells");
        Self { rx, ry, strata }
    }

    /// Single-stratum table from nested rows.
    pub fn from_rows(rows: &[Vec<u32>]) -> Self {
        let rx = rows.len();
        let ry = rows.first().map_or(0, Vec::len);
        Self::from_strata(rx, ry, vec![rows.iter().flatten().copied().collect()])
    }

    pub fn rx(&self) -> usize {
        self.rx
    }

    pub fn ry(&self) -> usize {
        self.ry
    }

    pub fn strata(&self) -> &[Vec<u32>] {
        &self.strata
    }

    pub fn total(&self) -> u64 {
        self.strata.iter().flatten().map(|&c| u64::from(c)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G2Statistic {
    pub statistic: f64,
    pub dof: usize,
}

/// Statistic and degrees of freedom of one `rx × ry` stratum.
pub fn stratum_g2(rx: usize, ry: usize, cells: &[u32]) -> G2Statistic {
    let mut row = vec![0u64; rx];
    let mut col = vec![0u64; ry];
    for i in 0..rx {
        for j in 0..ry {
            let c = u64::from(cells[i * ry + j]);
            row[i] += c;
            col[j] += c;
        }
    }
    let n: u64 = row.iter().sum();
    if n == 0 {
        return G2Statistic { statistic: 0.0, dof: 0 };
    }
    let nf = n as f64;
    let mut g = 0.0;
    for i in 0..rx {
        if row[i] == 0 {
            continue;
        }
        for j in 0..ry {
            let o = cells[i * ry + j];
            if o == 0 {
                continue;
            }
            let o = f64::from(o);
            g += o * (o * nf / (row[i] as f64 * col[j] as f64)).ln();
        }
    }
    let live_x = row.iter().filter(|&&r| r > 0).count();
    let live_y = col.iter().filter(|&&c| c > 0).count();
    G2Statistic { statistic: (2.0 * g).max(0.0), dof: (live_x - 1) * (live_y - 1) }
}

/// `G² = 2 Σ O ln(O/E)` summed over z-strata, with expected counts from each
/// stratum's margins. Each stratum contributes `(r_x − 1)(r_y − 1)` degrees
/// of freedom, counting only states with a nonzero margin in that stratum.
pub fn g2_statistic(table: &ContingencyTable) -> G2Statistic {
    table.strata.iter().fold(G2Statistic { statistic: 0.0, dof: 0 }, |acc, s| {
        let part = stratum_g2(table.rx, table.ry, s);
        G2Statistic { statistic: acc.statistic + part.statistic, dof: acc.dof + part.dof }
    })
}

/// Counts the `(x, y, z)` configurations of `data` in one pass; empty strata
/// are omitted.
pub fn contingency(data: &Dataset, x: VarId, y: VarId, z: &[VarId]) -> ContingencyTable {
    let schema = data.schema();
    let rx = schema.card(x);
    let ry = schema.card(y);
    let block = rx * ry;
    let xs = data.column(x);
    let ys = data.column(y);
    let zcols: Vec<&[u16]> = z.iter().map(|&v| data.column(v)).collect();
    let zcards: Vec<usize> = z.iter().map(|&v| schema.card(v)).collect();
    let n_strata = zcards.iter().try_fold(1usize, |a, &c| a.checked_mul(c));

    let z_key = |r: usize| -> usize {
        zcols
            .iter()
            .zip(&zcards)
            .fold(0usize, |k, (col, &card)| k * card + usize::from(col[r]))
    };

    match n_strata {
        Some(ns) if ns.saturating_mul(block) <= DENSE_STRATA * 4 && ns <= DENSE_STRATA => {
            let mut counts = vec![0u32; ns * block];
            for r in 0..data.n_rows() {
                let key = (z_key(r) * rx + usize::from(xs[r])) * ry + usize::from(ys[r]);
                counts[key] += 1;
            }
            let strata = counts
                .chunks(block)
                .filter(|s| s.iter().any(|&c| c > 0))
                .map(<[u32]>::to_vec)
                .collect();
            ContingencyTable { rx, ry, strata }
        }
        _ => {
            let mut map: HashMap<Vec<u16>, Vec<u32>> = HashMap::new();
            for r in 0..data.n_rows() {
                let key: Vec<u16> = zcols.iter().map(|c| c[r]).collect();
                map.entry(key).or_insert_with(|| vec![0; block])[usize::from(xs[r]) * ry + usize::from(ys[r])] += 1;
            }
            let mut keyed: Vec<_> = map.into_iter().collect();
            keyed.sort();
            ContingencyTable { rx, ry, strata: keyed.into_iter().map(|(_, v)| v).collect() }
        }
    }
}

/// Outcome of one conditional-independence test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub independent: bool,
    pub reliable: bool,
}

impl CiResult {
    /// Result of an exact (graphical) test.
    pub fn exact(independent: bool) -> Self {
        Self {
            statistic: 0.0,
            dof: 0,
            p_value: if independent { 1.0 } else { 0.0 },
            independent,
            reliable: true,
        }
    }
}

/// A test is reliable when the dataset has at least `factor` rows per cell of
/// the full `x × y × z` table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reliability {
    pub rows_per_cell: f64,
}

impl Default for Reliability {
    fn default() -> Self {
        Self { rows_per_cell: 5.0 }
    }
}

impl Reliability {
    pub fn is_reliable(&self, n_rows: usize, cells: f64) -> bool {
        n_rows as f64 >= self.rows_per_cell * cells
    }
}

/// G² test of `x ⫫ y | z` on `data`. Unreliable tests, including those with
/// zero degrees of freedom, report dependence.
pub fn g2_test(data: &Dataset, x: VarId, y: VarId, z: &[VarId], alpha: f64, rule: Reliability) -> CiResult {
    let schema = data.schema();
    let cells: f64 = [x, y].iter().chain(z).map(|&v| schema.card(v) as f64).product();
    let table = contingency(data, x, y, z);
    let G2Statistic { statistic, dof } = g2_statistic(&table);
    let p_value = chi_square_upper_tail(statistic, dof);
    let reliable = dof > 0 && rule.is_reliable(data.n_rows(), cells);
    CiResult { statistic, dof, p_value, independent: reliable && p_value > alpha, reliable }
}
