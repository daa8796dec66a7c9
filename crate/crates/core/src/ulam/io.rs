//! Plain-text exports: matrices as `row col value` triplets and densities
//! as CSV rows of box centers and values.

use std::io::{BufRead, Write};

use super::{DensityGrid, StochasticMatrix, UlamError};

/// One `row col value` line per nonzero, preceded by a `# n nnz` header.
pub fn write_triplets(matrix: &StochasticMatrix, mut out: impl Write) -> Result<(), UlamError> {
    writeln!(out, "# {} {}", matrix.dim(), matrix.nnz())?;
    for (i, j, v) in matrix.triplets() {
        writeln!(out, "{i} {j} {v:e}")?;
    }
    Ok(())
}

pub fn read_triplets(input: impl BufRead) -> Result<StochasticMatrix, UlamError> {
    let mut n = None;
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let bad = || UlamError::Invalid(format!("malformed triplet on line {}", lineno + 1));
        if let Some(h) = line.strip_prefix('#') {
            // the first `# n nnz` line is the header; other comments are skipped
            let nums: Vec<usize> = h.split_whitespace().map_while(|t| t.parse().ok()).collect();
            if n.is_none() && nums.len() == 2 {
                n = Some(nums[0]);
                rows = vec![Vec::new(); nums[0]];
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let i: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let j: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let v: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        rows.get_mut(i).ok_or_else(bad)?.push((j, v));
    }
    if n.is_none() {
        return Err(UlamError::Invalid("missing `# n nnz` header".into()));
    }
    StochasticMatrix::from_rows_with_tolerance(rows, 1e-12)
}

/// CSV with columns `u1, …, uk, density`.
pub fn write_density_csv(density: &DensityGrid, mut out: impl Write) -> Result<(), UlamError> {
    let k = density.grid.dim();
    let header: Vec<String> = (1..=k)
        .map(|i| format!("u{i}"))
        .chain(["density".to_string()])
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (idx, v) in density.values.iter().enumerate() {
        let c = density.grid.center(idx);
        let cols: Vec<String> = c
            .iter()
            .map(|x| format!("{x:e}"))
            .chain([format!("{v:e}")])
            .collect();
        writeln!(out, "{}", cols.join(","))?;
    }
    Ok(())
}
