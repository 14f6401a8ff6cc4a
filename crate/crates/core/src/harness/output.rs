//! On-disk formats: record CSV, raw t-value store, summary tables and
//! plot-data panels.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::aggregate::{SeriesStats, Summary};
use crate::error::{Error, Result};
use crate::synthetic::{RunRecord, Scenario};

pub const RECORD_HEADER: &str = "scenario,epsilon,seed,p_value,basic_test_reject,r_hat_s,r_hat_g,r_hat_s_prime,sigma_t2,avg_weight_misclassified,avg_weight_successful_adv,true_risk_estimate";

/// Twelve significant digits.
pub fn fmt_real(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.11e}")
    }
}

pub fn record_line(r: &RunRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        r.scenario.name(),
        fmt_real(r.epsilon),
        r.seed,
        fmt_real(r.p_value),
        r.basic_test_reject,
        fmt_real(r.r_hat_s),
        fmt_real(r.r_hat_g),
        fmt_real(r.r_hat_s_prime),
        fmt_real(r.sigma_t2),
        fmt_real(r.avg_weight_misclassified),
        fmt_real(r.avg_weight_successful_adv),
        fmt_real(r.true_risk_estimate),
    )
}

pub fn parse_record(line: &str, location: &str) -> Result<RunRecord> {
    let err = |reason: String| Error::Parse { location: location.into(), reason };
    let cells: Vec<&str> = line.split(',').collect();
    if cells.len() != 12 {
        return Err(err(format!("expected 12 columns, found {}", cells.len())));
    }
    let real = |i: usize| -> Result<f64> {
        cells[i].parse().map_err(|_| err(format!("column {i}: invalid number `{}`", cells[i])))
    };
    Ok(RunRecord {
        scenario: Scenario::parse(cells[0]).ok_or_else(|| err(format!("unknown scenario `{}`", cells[0])))?,
        epsilon: real(1)?,
        seed: cells[2].parse().map_err(|_| err(format!("invalid seed `{}`", cells[2])))?,
        p_value: real(3)?,
        basic_test_reject: cells[4].parse().map_err(|_| err(format!("invalid flag `{}`", cells[4])))?,
        r_hat_s: real(5)?,
        r_hat_g: real(6)?,
        r_hat_s_prime: real(7)?,
        sigma_t2: real(8)?,
        avg_weight_misclassified: real(9)?,
        avg_weight_successful_adv: real(10)?,
        true_risk_estimate: real(11)?,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn emit_records_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{RECORD_HEADER}").map_err(io)?;
    for r in records {
        writeln!(w, "{}", record_line(r)).map_err(io)?;
    }
    finish(w, path)
}

/// Records of a CSV file. A trailing line without a newline is treated as
/// an interrupted write and ignored.
pub fn load_records_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(&text, &path.display().to_string())
}

pub fn parse_records(text: &str, source: &str) -> Result<Vec<RunRecord>> {
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut lines = complete.lines();
    match lines.next() {
        None => return Ok(Vec::new()),
        Some(h) if h == RECORD_HEADER => {}
        Some(_) => {
            return Err(Error::Parse { location: format!("{source}:1"), reason: "unexpected header".into() })
        }
    }
    lines
        .enumerate()
        .map(|(i, l)| parse_record(l, &format!("{source}:{}", i + 2)))
        .collect()
}

/// Appends little-endian `f64` values.
pub fn write_f64s(w: &mut impl Write, values: &[f64]) -> std::io::Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Splits a raw t-value store into rows of `width` values; a trailing
/// partial row is dropped.
pub fn load_t_values(path: &Path, width: usize) -> Result<Vec<Vec<f64>>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let row_bytes = width * 8;
    if row_bytes == 0 {
        return Ok(Vec::new());
    }
    Ok(bytes
        .chunks_exact(row_bytes)
        .map(|row| {
            row.chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                .collect()
        })
        .collect())
}

const STATS_COLUMNS: [&str; 6] = ["mean", "lo", "hi", "min", "max", "count"];

fn stats_cells(s: &SeriesStats) -> String {
    format!(
        "{},{},{},{},{},{}",
        fmt_real(s.mean),
        fmt_real(s.lo),
        fmt_real(s.hi),
        fmt_real(s.min),
        fmt_real(s.max),
        s.count
    )
}

const SERIES: [&str; 7] = [
    "p_value",
    "r_hat_s",
    "r_hat_g",
    "r_hat_s_prime",
    "true_risk_estimate",
    "avg_weight_misclassified",
    "avg_weight_successful_adv",
];

/// `summary.csv` (one row per strength) and `n_model.csv` (one row per bin).
pub fn emit_summary_csv(summary: &Summary, dir: &Path) -> Result<()> {
    let path = dir.join("summary.csv");
    let mut w = create(&path)?;
    let io = |e| Error::io(&path, e);
    let mut header = vec!["scenario".to_string(), "epsilon".into(), "runs".into(), "median_p".into(), "basic_reject_rate".into()];
    for s in SERIES {
        header.extend(STATS_COLUMNS.iter().map(|c| format!("{s}_{c}")));
    }
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for c in &summary.cells {
        let series = [
            &c.p_value,
            &c.r_hat_s,
            &c.r_hat_g,
            &c.r_hat_s_prime,
            &c.true_risk_estimate,
            &c.avg_weight_misclassified,
            &c.avg_weight_successful_adv,
        ];
        let stats: Vec<String> = series.iter().map(|s| stats_cells(s)).collect();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            c.scenario.name(),
            fmt_real(c.epsilon),
            c.runs,
            fmt_real(c.median_p),
            fmt_real(c.basic_reject_rate),
            stats.join(",")
        )
        .map_err(io)?;
    }
    finish(w, &path)?;

    let path = dir.join("n_model.csv");
    let mut w = create(&path)?;
    let io = |e| Error::io(&path, e);
    writeln!(w, "epsilon,n,bin,p_value").map_err(io)?;
    for r in &summary.n_model {
        writeln!(w, "{},{},{},{}", fmt_real(r.epsilon), r.n, r.bin, fmt_real(r.p_value)).map_err(io)?;
    }
    finish(w, &path)
}

/// Number formatting for panel files; strengths print as `eps_<value>`.
fn eps_tag(e: f64) -> String {
    format!("{e}").replace('.', "p")
}

/// One plain-text file per panel under `dir`, whitespace separated with a
/// `#` header line.
pub fn emit_plot_data(summary: &Summary, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut written = Vec::new();
    let mut panel = |name: String, header: &str, rows: Vec<String>| -> Result<()> {
        let path = dir.join(name);
        let mut w = create(&path)?;
        let io = |e| Error::io(&path, e);
        writeln!(w, "# {header}").map_err(io)?;
        for r in rows {
            writeln!(w, "{r}").map_err(io)?;
        }
        finish(w, &path)?;
        written.push(path);
        Ok(())
    };
    let triple = |s: &SeriesStats| format!("{} {} {}", fmt_real(s.mean), fmt_real(s.lo), fmt_real(s.hi));

    for &n in &summary.n_values {
        let rows = summary
            .n_model_curve(n)
            .map(|(e, s)| format!("{} {}", fmt_real(e), triple(&s)))
            .collect();
        let bounds = if n <= 2 { "2.5% and 97.5% percentiles" } else { "min and max" };
        panel(format!("p_value_n{n}.dat"), &format!("epsilon mean_p lo hi (bounds: {bounds})"), rows)?;
    }
    let rows = summary
        .cells
        .iter()
        .map(|c| {
            format!(
                "{} {} {} {} {}",
                fmt_real(c.epsilon),
                triple(&c.r_hat_s),
                triple(&c.r_hat_g),
                triple(&c.r_hat_s_prime),
                triple(&c.true_risk_estimate)
            )
        })
        .collect();
    panel(
        "estimates.dat".into(),
        "epsilon r_hat_s lo hi r_hat_g lo hi r_hat_s_prime lo hi true_risk lo hi",
        rows,
    )?;
    let rows = summary
        .cells
        .iter()
        .map(|c| {
            format!(
                "{} {} {}",
                fmt_real(c.epsilon),
                triple(&c.avg_weight_misclassified),
                triple(&c.avg_weight_successful_adv)
            )
        })
        .collect();
    panel(
        "densities.dat".into(),
        "epsilon avg_weight_misclassified lo hi avg_weight_successful_adv lo hi",
        rows,
    )?;
    for h in &summary.histograms {
        let width = 1.0 / h.counts.len() as f64;
        let rows = h
            .counts
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{} {} {c}", fmt_real(i as f64 * width), fmt_real((i + 1) as f64 * width)))
            .collect();
        panel(
            format!("histogram_n{}_eps_{}.dat", h.n, eps_tag(h.epsilon)),
            &format!("bin_lo bin_hi count (epsilon {}, N {})", h.epsilon, h.n),
            rows,
        )?;
    }
    Ok(written)
}
