//! Static MSE comparison plot, built from the curve CSVs of a run.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use plotters::prelude::*;

const COLORS: [RGBColor; 4] = [BLUE, RED, GREEN, MAGENTA];

fn read_curve(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let mut fields = line.split(',');
        let (Some(it), Some(mse)) = (fields.next(), fields.next()) else {
            bail!("{}:{}: malformed row", path.display(), i + 1);
        };
        points.push((it.parse()?, mse.parse()?));
    }
    Ok(points)
}

/// Writes `mse.svg` in `dir` with one line per `curve_<name>.csv`.
pub fn plot_mse(dir: &Path, names: &[&str], title: &str) -> Result<()> {
    let curves: Vec<(&str, Vec<(f64, f64)>)> = names
        .iter()
        .map(|n| Ok((*n, read_curve(&dir.join(format!("curve_{n}.csv")))?)))
        .collect::<Result<_>>()?;
    let x_max = curves
        .iter()
        .flat_map(|(_, c)| c.iter().map(|p| p.0))
        .fold(1.0, f64::max);
    let (mut y_min, mut y_max) = curves
        .iter()
        .flat_map(|(_, c)| c.iter().map(|p| p.1))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y), hi.max(y)));
    if !y_min.is_finite() {
        (y_min, y_max) = (-1.0, 1.0);
    }
    let pad = ((y_max - y_min) * 0.05).max(0.5);

    let out = dir.join("mse.svg");
    let root = SVGBackend::new(&out, (900, 600)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(15)
        .x_label_area_size(45)
        .y_label_area_size(60)
        .build_cartesian_2d(0.0..x_max, (y_min - pad)..(y_max + pad))?;
    chart
        .configure_mesh()
        .x_desc("iteration")
        .y_desc("network MSE (dB)")
        .draw()?;
    for (i, (name, points)) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        chart
            .draw_series(LineSeries::new(points.iter().copied(), &color))?
            .label(name.to_string())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()?;
    root.present()?;
    Ok(())
}
