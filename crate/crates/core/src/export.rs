//! CSV and gnuplot output for run series and sweep results.

use std::fs;
use std::path::{Path, PathBuf};

use crate::diagnostics::{format_g17, NormSeries};
use crate::error::{Error, Result};
use crate::sweep::SweepResult;

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn table_csv(header: &[String], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|&x| format_g17(x)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Parses a numeric CSV with one header line.
pub fn parse_table(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Config("empty CSV".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("CSV row {}: bad number `{c}`", i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(Error::Config(format!(
                "CSV row {} has {} cells, header has {}",
                i + 1,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// One row per epsilon: `epsilon`, `osc_amplitude`, then every metric.
pub fn sweep_table_csv(result: &SweepResult) -> String {
    let metrics = result.metrics();
    let mut header = vec!["epsilon".to_string(), "osc_amplitude".to_string()];
    header.extend(metrics.iter().map(|(n, _)| n.clone()));
    let rows: Vec<Vec<f64>> = result
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut v = vec![r.epsilon, r.osc_amplitude];
            v.extend(metrics.iter().map(|(_, col)| col[i]));
            v
        })
        .collect();
    table_csv(&header, &rows)
}

/// `metric,slope,intercept,residual,points`; absent fits are `nan`.
pub fn slopes_csv(result: &SweepResult) -> String {
    let mut s = String::from("metric,slope,intercept,residual,points\n");
    for (name, f) in &result.slopes {
        s.push_str(&format!(
            "{name},{},{},{},{}\n",
            format_g17(f.slope),
            format_g17(f.intercept),
            format_g17(f.residual),
            f.points
        ));
    }
    s
}

fn series_script(csv: &str, png: &str, columns: usize) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead outside\n\
         set logscale y\n\
         set xlabel 't'\n\
         set terminal pngcairo size 1000,650\n\
         set output '{png}'\n\
         plot for [i=2:{}] '{csv}' using 1:i with lines\n",
        columns + 1
    )
}

/// Writes `<stem>.csv` and `<stem>.gp` into `dir`.
pub fn export_series(series: &NormSeries, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let csv = format!("{stem}.csv");
    write(dir.join(&csv), &series.to_csv(), &mut written)?;
    let script = series_script(&csv, &format!("{stem}.png"), series.channel_names().len());
    write(dir.join(format!("{stem}.gp")), &script, &mut written)?;
    Ok(written)
}

/// Writes the sweep table, the fitted slopes, every run's series and a
/// log-log plot script.
pub fn export_sweep(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    write(dir.join("sweep.csv"), &sweep_table_csv(result), &mut written)?;
    write(dir.join("slopes.csv"), &slopes_csv(result), &mut written)?;
    write(dir.join("qg_series.csv"), &result.qg_series.to_csv(), &mut written)?;
    for (i, r) in result.rows.iter().enumerate() {
        write(
            dir.join(format!("pe_series_{i}.csv")),
            &r.series.to_csv(),
            &mut written,
        )?;
    }
    let cols = result.metrics().len();
    let script = format!(
        "set datafile separator ','\n\
         set key autotitle columnhead outside\n\
         set logscale xy\n\
         set xlabel 'epsilon'\n\
         set terminal pngcairo size 1000,650\n\
         set output 'convergence.png'\n\
         plot for [i=3:{}] 'sweep.csv' using 1:i with linespoints\n",
        cols + 2
    );
    write(dir.join("convergence.gp"), &script, &mut written)?;
    Ok(written)
}
