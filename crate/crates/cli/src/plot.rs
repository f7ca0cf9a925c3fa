//! SVG charts of the CSVs in a run directory.

use plotters::prelude::*;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::output::{read_table, Table};

type Series = Vec<(String, Vec<(f64, f64)>)>;

const SIZE: (u32, u32) = (900, 600);

/// Renders a chart for every recognized CSV in `dir`.
pub fn plot_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let renderers: [(&str, fn(&Table, &Path) -> Result<()>, &str); 5] = [
        ("memory_curve.csv", memory_curve, "mf.svg"),
        ("mc_vs_L.csv", mc_vs_l, "mc_vs_L.svg"),
        ("capacity_report.csv", capacity_bars, "capacity.svg"),
        ("narma_sweep.csv", narma_sweep, "narma_sweep.svg"),
        ("lyapunov.csv", lyapunov, "lyapunov.svg"),
    ];
    let mut written = Vec::new();
    for (csv, render, svg) in renderers {
        let path = dir.join(csv);
        if !path.exists() {
            continue;
        }
        let table = read_table(&path)?;
        if table.rows.is_empty() {
            return Err(CliError::Config(format!(
                "{}: no data rows",
                path.display()
            )));
        }
        let out = dir.join(svg);
        render(&table, &out)?;
        written.push(out);
    }
    if written.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no plottable CSV found",
            dir.display()
        )));
    }
    Ok(written)
}

fn col(t: &Table, name: &str) -> Result<usize> {
    t.column(name)
        .ok_or_else(|| CliError::Config(format!("{}: missing column `{name}`", t.file)))
}

fn real(t: &Table, row: usize, c: usize) -> Result<f64> {
    let cell = &t.rows[row][c];
    cell.parse().map_err(|_| {
        CliError::Config(format!(
            "{}: row {}: `{cell}` is not a number",
            t.file,
            row + 1
        ))
    })
}

/// Points grouped by the joined values of `keys`, in first-seen order.
fn grouped(t: &Table, keys: &[&str], x: &str, y: &str) -> Result<Series> {
    let kc = keys.iter().map(|k| col(t, k)).collect::<Result<Vec<_>>>()?;
    let (xc, yc) = (col(t, x)?, col(t, y)?);
    let mut out: Series = Vec::new();
    for r in 0..t.rows.len() {
        if t.rows[r][yc].is_empty() {
            continue;
        }
        let key = kc
            .iter()
            .map(|&c| t.rows[r][c].as_str())
            .collect::<Vec<_>>()
            .join(" L=");
        let p = (real(t, r, xc)?, real(t, r, yc)?);
        match out.iter_mut().find(|(k, _)| *k == key) {
            Some((_, pts)) => pts.push(p),
            None => out.push((key, vec![p])),
        }
    }
    Ok(out)
}

fn bounds(series: &Series) -> ((f64, f64), (f64, f64)) {
    let pts = series.iter().flat_map(|(_, p)| p.iter().copied());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for (x, y) in pts.filter(|(x, y)| x.is_finite() && y.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let pad = |lo: f64, hi: f64| {
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi > lo {
            let m = 0.05 * (hi - lo);
            (lo - m, hi + m)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    (pad(x0, x1), pad(y0, y1))
}

fn draw_err<E: std::fmt::Debug>(e: E) -> CliError {
    CliError::Io(format!("chart rendering failed: {e:?}"))
}

fn line_chart(series: &Series, title: &str, x: &str, y: &str, out: &Path) -> Result<()> {
    let ((x0, x1), (y0, y1)) = bounds(series);
    let root = SVGBackend::new(out, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 24))
        .margin(20)
        .x_label_area_size(45)
        .y_label_area_size(70)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc(x)
        .y_desc(y)
        .draw()
        .map_err(draw_err)?;
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
            .map_err(draw_err)?
            .label(name.as_str())
            .legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2))
            });
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(draw_err)?;
    root.present().map_err(draw_err)
}

fn memory_curve(t: &Table, out: &Path) -> Result<()> {
    let keys: &[&str] = if t.column("trials").is_some() {
        &["variant", "trials"]
    } else {
        &["variant"]
    };
    line_chart(
        &grouped(t, keys, "tau", "m_tau")?,
        "Memory function",
        "delay",
        "M(delay)",
        out,
    )
}

fn mc_vs_l(t: &Table, out: &Path) -> Result<()> {
    let mut s = grouped(t, &["variant"], "trials", "mc")?;
    for (_, pts) in &mut s {
        pts.iter_mut().for_each(|p| p.0 = p.0.log10());
    }
    line_chart(&s, "Memory capacity vs ensemble size", "log10 L", "MC", out)
}

fn narma_sweep(t: &Table, out: &Path) -> Result<()> {
    let s = grouped(t, &["variant"], "value", "test_nmse")?;
    line_chart(&s, "NARMA10 test NMSE", "parameter", "NMSE", out)
}

fn lyapunov(t: &Table, out: &Path) -> Result<()> {
    let s = grouped(t, &["parameter"], "value", "lambda")?;
    line_chart(&s, "Largest Lyapunov exponent", "parameter", "lambda", out)
}

/// One stacked bar per scan value; segments are IPC then TIPC by degree.
fn capacity_bars(t: &Table, out: &Path) -> Result<()> {
    let (vc, dc, ic, tc) = (
        col(t, "value")?,
        col(t, "degree")?,
        col(t, "ipc")?,
        col(t, "tipc")?,
    );
    let mut bars: Vec<(String, BTreeMap<u32, (f64, f64)>)> = Vec::new();
    for r in 0..t.rows.len() {
        let key = t.rows[r][vc].clone();
        let degree: u32 = t.rows[r][dc]
            .parse()
            .map_err(|_| CliError::Config(format!("{}: row {}: bad degree", t.file, r + 1)))?;
        let seg = (real(t, r, ic)?, real(t, r, tc)?);
        match bars.iter_mut().find(|(k, _)| *k == key) {
            Some((_, m)) => {
                m.insert(degree, seg);
            }
            None => bars.push((key, BTreeMap::from([(degree, seg)]))),
        }
    }
    let top = bars
        .iter()
        .map(|(_, m)| m.values().map(|(a, b)| a + b).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-9)
        * 1.1;
    let root = SVGBackend::new(out, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let n = bars.len();
    let labels: Vec<String> = bars.iter().map(|(k, _)| k.clone()).collect();
    let mut chart = ChartBuilder::on(&root)
        .caption("Capacity by degree", ("sans-serif", 24))
        .margin(20)
        .x_label_area_size(45)
        .y_label_area_size(70)
        .build_cartesian_2d(0f64..n as f64, 0f64..top)
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .disable_x_mesh()
        .x_labels(n.max(1))
        .x_label_formatter(&|x| {
            let i = x.floor() as usize;
            labels
                .get(i)
                .map(|l| format!("{:.4}", l.parse::<f64>().unwrap_or(f64::NAN)))
                .unwrap_or_default()
        })
        .x_desc("parameter")
        .y_desc("capacity")
        .draw()
        .map_err(draw_err)?;
    let degrees: Vec<u32> = {
        let mut d: Vec<u32> = bars.iter().flat_map(|(_, m)| m.keys().copied()).collect();
        d.sort_unstable();
        d.dedup();
        d
    };
    for (di, &d) in degrees.iter().enumerate() {
        for (temporal, label) in [(false, "IPC"), (true, "TIPC")] {
            let color = Palette99::pick(di).to_rgba();
            let style = if temporal {
                color.mix(0.45).filled()
            } else {
                color.filled()
            };
            let mut rects = Vec::new();
            for (i, (_, m)) in bars.iter().enumerate() {
                let below: f64 = m.range(..d).map(|(_, (a, b))| a + b).sum::<f64>()
                    + if temporal {
                        m.get(&d).map_or(0.0, |s| s.0)
                    } else {
                        0.0
                    };
                let h = m.get(&d).map_or(0.0, |s| if temporal { s.1 } else { s.0 });
                if h > 0.0 {
                    let x = i as f64;
                    rects.push(Rectangle::new(
                        [(x + 0.15, below), (x + 0.85, below + h)],
                        style,
                    ));
                }
            }
            if rects.is_empty() {
                continue;
            }
            chart
                .draw_series(rects)
                .map_err(draw_err)?
                .label(format!("{label} degree {d}"))
                .legend(move |(x, y)| Rectangle::new([(x, y - 5), (x + 12, y + 5)], style));
        }
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(draw_err)?;
    root.present().map_err(draw_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::num;

    #[test]
    fn memory_curve_renders_svg() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("memory_curve.csv", &["variant", "trials", "tau", "m_tau"]);
        for tau in 1..5 {
            t.push(vec![
                "erc".into(),
                "10".into(),
                tau.to_string(),
                num(1.0 / tau as f64),
            ]);
        }
        t.write(dir.path()).unwrap();
        let out = plot_dir(dir.path()).unwrap();
        let svg = std::fs::read_to_string(&out[0]).unwrap();
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn capacity_report_renders_stacked_bars() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(
            "capacity_report.csv",
            &["parameter", "value", "degree", "ipc", "tipc"],
        );
        for (v, d) in [(0.5, 1), (0.5, 2), (0.9, 1), (0.9, 2)] {
            t.push(vec![
                "rho".into(),
                num(v),
                d.to_string(),
                num(1.0),
                num(0.2),
            ]);
        }
        t.write(dir.path()).unwrap();
        let out = plot_dir(dir.path()).unwrap();
        assert!(out[0].ends_with("capacity.svg"));
        assert!(std::fs::read_to_string(&out[0]).unwrap().contains("<rect"));
    }

    #[test]
    fn empty_and_malformed_csvs_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("memory_curve.csv"), "variant,tau,m_tau\n").unwrap();
        assert!(matches!(plot_dir(dir.path()), Err(CliError::Config(_))));
        std::fs::write(
            dir.path().join("memory_curve.csv"),
            "variant,m_tau\nerc,1\n",
        )
        .unwrap();
        assert!(matches!(plot_dir(dir.path()), Err(CliError::Config(_))));
        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(plot_dir(empty.path()), Err(CliError::Config(_))));
    }
}
