//! Comparison-table assembly and rendering.
//!
//! CSV rows follow the fixed header `lambda1,..,lambdaN,d1,..,dN,d_analytic`
//! with delays in milliseconds at one decimal; the aligned-text format adds
//! confidence half-widths and the run metadata.

use std::fmt::Write as _;

use delaylab_core::{DelayStats, Regime};

/// Per-node simulated means with confidence half-widths, in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SimColumn {
    pub mean_s: Vec<f64>,
    pub ci95_half_s: Vec<f64>,
}

impl SimColumn {
    pub fn from_stats(stats: &DelayStats) -> Self {
        SimColumn {
            mean_s: stats.per_node.iter().map(|n| n.mean_delay_s).collect(),
            ci95_half_s: stats.per_node.iter().map(|n| n.ci95_half_s).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub lambdas: Vec<f64>,
    /// CSMA/CA simulator column, when that engine ran.
    pub dcf: Option<SimColumn>,
    /// Polling-oracle column, when that engine ran.
    pub rps: Option<SimColumn>,
    pub analytic_per_node_s: Option<Vec<f64>>,
    pub rho: f64,
}

impl TableRow {
    /// The simulated column shown in CSV output: the CSMA/CA engine when it
    /// ran, the polling oracle otherwise.
    pub fn sim(&self) -> Option<&SimColumn> {
        self.dcf.as_ref().or(self.rps.as_ref())
    }

    /// Single analytic figure for the row (node mean; nodes coincide for
    /// homogeneous length distributions).
    pub fn analytic_mean_s(&self) -> Option<f64> {
        self.analytic_per_node_s
            .as_ref()
            .map(|d| d.iter().sum::<f64>() / d.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableMeta {
    pub name: Option<String>,
    pub nodes: usize,
    pub mtu_bytes: u32,
    pub capacity_pkts_per_s: f64,
    pub regime: Regime,
    pub replications: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub meta: TableMeta,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Text,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "text" => Ok(ReportFormat::Text),
            other => Err(format!("unknown format {other:?}, expected csv or text")),
        }
    }
}

fn ms(seconds: f64) -> String {
    format!("{:.1}", seconds * 1e3)
}

/// Machine-readable CSV with the fixed header.
pub fn emit_csv(table: &ComparisonTable) -> String {
    let n = table.meta.nodes;
    let mut out = String::new();
    let lambda_cols: Vec<String> = (1..=n).map(|i| format!("lambda{i}")).collect();
    let d_cols: Vec<String> = (1..=n).map(|i| format!("d{i}")).collect();
    out.push_str(&lambda_cols.join(","));
    out.push(',');
    out.push_str(&d_cols.join(","));
    out.push_str(",d_analytic\n");
    for row in &table.rows {
        let mut fields: Vec<String> = row.lambdas.iter().map(|l| format!("{l:.1}")).collect();
        match row.sim() {
            Some(sim) => fields.extend(sim.mean_s.iter().map(|d| ms(*d))),
            None => fields.extend(std::iter::repeat_n(String::new(), n)),
        }
        fields.push(row.analytic_mean_s().map(ms).unwrap_or_default());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Parses CSV produced by [`emit_csv`] back into (lambdas, sim delays,
/// analytic delay) tuples in the printed units.
pub fn parse_csv(
    text: &str,
) -> Result<Vec<(Vec<f64>, Vec<Option<f64>>, Option<f64>)>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty input")?;
    let n = header.split(',').filter(|c| c.starts_with("lambda")).count();
    if n == 0 {
        return Err("header has no lambda columns".into());
    }
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 2 * n + 1 {
            return Err(format!("line {}: expected {} cells", ln + 2, 2 * n + 1));
        }
        let parse = |s: &str| -> Result<Option<f64>, String> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|e| format!("{s:?}: {e}"))
            }
        };
        let lambdas: Vec<f64> = cells[..n]
            .iter()
            .map(|c| c.parse().map_err(|e| format!("{c:?}: {e}")))
            .collect::<Result<_, _>>()?;
        let sims: Vec<Option<f64>> = cells[n..2 * n]
            .iter()
            .map(|c| parse(c))
            .collect::<Result<_, _>>()?;
        rows.push((lambdas, sims, parse(cells[2 * n])?));
    }
    Ok(rows)
}

/// Aligned text mirroring the reference table layout, with CI half-widths.
pub fn emit_text(table: &ComparisonTable) -> String {
    let n = table.meta.nodes;
    let mut out = String::new();
    if let Some(name) = &table.meta.name {
        let _ = writeln!(out, "# {name}");
    }
    let _ = writeln!(
        out,
        "# {} nodes, MTU {} B, C = {} pkts/s, regime {:?}, {} replications, seed {}",
        n,
        table.meta.mtu_bytes,
        table.meta.capacity_pkts_per_s,
        table.meta.regime,
        table.meta.replications,
        table.meta.seed,
    );
    let _ = writeln!(out, "# delays in ms");
    let mut header: Vec<String> = (1..=n).map(|i| format!("lambda{i}")).collect();
    for engine in ["dcf", "rps"] {
        header.extend((1..=n).map(|i| format!("{engine}_d{i}")));
    }
    header.push("rho".into());
    header.push("d_analytic".into());
    let mut grid: Vec<Vec<String>> = vec![header];
    for row in &table.rows {
        let mut cells: Vec<String> = row.lambdas.iter().map(|l| format!("{l:.1}")).collect();
        for col in [&row.dcf, &row.rps] {
            match col {
                Some(sim) => cells.extend(
                    sim.mean_s
                        .iter()
                        .zip(&sim.ci95_half_s)
                        .map(|(m, h)| format!("{}±{}", ms(*m), ms(*h))),
                ),
                None => cells.extend(std::iter::repeat_n("-".to_string(), n)),
            }
        }
        cells.push(format!("{:.3}", row.rho));
        cells.push(
            row.analytic_mean_s()
                .map(ms)
                .unwrap_or_else(|| "-".into()),
        );
        grid.push(cells);
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    for row in &grid {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:>w$}", w = w))
            .collect();
        let _ = writeln!(out, "{}", line.join("  "));
    }
    out
}

/// Renders `table` in the requested format.
pub fn emit_report(table: &ComparisonTable, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => emit_csv(table),
        ReportFormat::Text => emit_text(table),
    }
}
