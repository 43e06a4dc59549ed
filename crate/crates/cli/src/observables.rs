//! Observable specifications for `--obs`.
//!
//! Each item is one of
//! - a 1-based column index (`2`) or a column name (`q2`),
//! - `hermite:i` or `hermite:i@col`, the Hermite polynomial `H_i` of a column
//!   (the first one by default),
//! - `u1`, `u2`, `u3`, the Hermite combinations used by the `gaussian1d`
//!   experiment, evaluated on the first column.

use anyhow::{anyhow, bail, Result};
use taumax::experiments::HermiteObservable;
use taumax::io::NumericTable;

#[derive(Debug, Clone, PartialEq)]
pub enum ObsSpec {
    Column(usize),
    Hermite { order: usize, column: usize },
    Combination(usize),
}

fn column_ref(table: &NumericTable, s: &str) -> Result<usize> {
    if let Ok(i) = s.parse::<usize>() {
        if i == 0 || i > table.header.len() {
            bail!("column index {i} out of range 1..={}", table.header.len());
        }
        return Ok(i - 1);
    }
    table
        .header
        .iter()
        .position(|h| h == s)
        .ok_or_else(|| anyhow!("no column named `{s}` (columns: {})", table.header.join(", ")))
}

pub fn parse_spec(item: &str, table: &NumericTable) -> Result<ObsSpec> {
    let item = item.trim();
    if let Some(rest) = item.strip_prefix("hermite:") {
        let (order, column) = match rest.split_once('@') {
            Some((o, c)) => (o, column_ref(table, c)?),
            None => (rest, 0),
        };
        let order = order
            .parse()
            .map_err(|_| anyhow!("bad Hermite order in `{item}`"))?;
        return Ok(ObsSpec::Hermite { order, column });
    }
    match item {
        "u1" if table.column("u1").is_none() => Ok(ObsSpec::Combination(0)),
        "u2" if table.column("u2").is_none() => Ok(ObsSpec::Combination(1)),
        "u3" if table.column("u3").is_none() => Ok(ObsSpec::Combination(2)),
        _ => Ok(ObsSpec::Column(column_ref(table, item)?)),
    }
}

fn hermite(order: usize, xs: &[f64]) -> Vec<f64> {
    let h = HermiteObservable::new(order);
    xs.iter().map(|&x| h.eval(x)).collect()
}

/// Evaluated series and their labels. An empty spec list selects every column.
pub fn evaluate(specs: &[String], table: &NumericTable) -> Result<(Vec<Vec<f64>>, Vec<String>)> {
    if table.columns.is_empty() {
        bail!("input has no columns");
    }
    if specs.is_empty() {
        return Ok((table.columns.clone(), table.header.clone()));
    }
    let mut rows = Vec::with_capacity(specs.len());
    let mut labels = Vec::with_capacity(specs.len());
    for item in specs {
        let row = match parse_spec(item, table)? {
            ObsSpec::Column(j) => table.columns[j].clone(),
            ObsSpec::Hermite { order, column } => hermite(order, &table.columns[column]),
            ObsSpec::Combination(k) => {
                let q = &table.columns[0];
                let (h1, h2, h3) = (hermite(1, q), hermite(2, q), hermite(3, q));
                let sign = match k {
                    0 => [1.0, 1.0, 1.0],
                    1 => [1.0, -1.0, 1.0],
                    _ => [1.0, 1.0, -1.0],
                };
                (0..q.len())
                    .map(|i| sign[0] * h1[i] + sign[1] * h2[i] + sign[2] * h3[i])
                    .collect()
            }
        };
        rows.push(row);
        labels.push(item.trim().to_string());
    }
    Ok((rows, labels))
}
