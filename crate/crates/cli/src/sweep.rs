//! Sweep-result CSV tables. Numbers use the shortest representation that
//! round-trips, so readback is bit exact; empty cells mark per-point
//! failures.

use std::io::{BufRead, BufReader, Read, Write};

/// Column-labelled table of optional values with a monotone first column.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl SweepTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| c.map_or_else(String::new, |v| v.to_string()))
                .collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn read<R: Read>(r: R) -> anyhow::Result<Self> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| anyhow::anyhow!("empty sweep file"))??;
        let header: Vec<String> = header_line.split(',').map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != header.len() {
                anyhow::bail!("line {}: expected {} columns, got {}", n + 2, header.len(), cells.len());
            }
            let mut row = Vec::with_capacity(cells.len());
            for c in cells {
                let c = c.trim();
                row.push(if c.is_empty() {
                    None
                } else {
                    Some(c.parse::<f64>().map_err(|e| anyhow::anyhow!("line {}: {e}", n + 2))?)
                });
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }
}
