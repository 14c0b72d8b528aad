//! SVG figures.

use std::path::Path;

use anyhow::{anyhow, Result};
use plotters::coord::types::RangedCoordf64;
use plotters::prelude::*;

use crate::output::{write_bytes, Artifact};

const SIZE: (u32, u32) = (900, 600);
const MAX_CELLS: usize = 240;

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Draw as points instead of a line.
    pub points: bool,
}

impl Series {
    pub fn line(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            x,
            y,
            points: false,
        }
    }

    pub fn points(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self {
            points: true,
            ..Self::line(label, x, y)
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Axes<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log_x: bool,
}

fn bounds<'a>(vals: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.03 * (hi - lo);
    (lo - pad, hi + pad)
}

fn err<E: std::fmt::Debug>(e: E) -> anyhow::Error {
    anyhow!("plot: {e:?}")
}

pub fn line_plot(path: &Path, axes: Axes<'_>, series: &[Series]) -> Result<Artifact> {
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(err)?;
        let (mut x0, mut x1) = bounds(series.iter().flat_map(|s| s.x.iter()));
        let (y0, y1) = bounds(series.iter().flat_map(|s| s.y.iter()));
        if axes.log_x {
            let pos = series.iter().flat_map(|s| s.x.iter()).filter(|&&v| v > 0.0);
            let (a, b) = pos.fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
            (x0, x1) = (a / 1.2, b * 1.2);
        }
        let colors = |i: usize| Palette99::pick(i).to_rgba();
        let mut builder = ChartBuilder::on(&root);
        builder
            .caption(axes.title, ("sans-serif", 22))
            .margin(12)
            .x_label_area_size(45)
            .y_label_area_size(70);
        macro_rules! draw {
            ($chart:expr) => {{
                let mut chart = $chart;
                chart
                    .configure_mesh()
                    .x_desc(axes.x_label)
                    .y_desc(axes.y_label)
                    .draw()
                    .map_err(err)?;
                for (i, s) in series.iter().enumerate() {
                    let c = colors(i);
                    let data =
                        s.x.iter()
                            .copied()
                            .zip(s.y.iter().copied())
                            .filter(|(x, y)| {
                                x.is_finite() && y.is_finite() && (!axes.log_x || *x > 0.0)
                            });
                    let anno = if s.points {
                        chart
                            .draw_series(data.map(|p| Circle::new(p, 3, c.filled())))
                            .map_err(err)?
                    } else {
                        chart
                            .draw_series(LineSeries::new(data, c.stroke_width(2)))
                            .map_err(err)?
                    };
                    anno.label(s.label.clone()).legend(move |(x, y)| {
                        PathElement::new([(x, y), (x + 18, y)], c.stroke_width(2))
                    });
                }
                chart
                    .configure_series_labels()
                    .background_style(WHITE.mix(0.85))
                    .border_style(BLACK)
                    .draw()
                    .map_err(err)?;
            }};
        }
        if axes.log_x {
            draw!(builder
                .build_cartesian_2d((x0..x1).log_scale(), y0..y1)
                .map_err(err)?);
        } else {
            draw!(builder.build_cartesian_2d(x0..x1, y0..y1).map_err(err)?);
        }
        root.present().map_err(err)?;
    }
    write_bytes(path, svg.as_bytes())
}

/// Colour map from white through blue to dark red on log10 of the value.
fn shade(v: f64, lo: f64, hi: f64) -> RGBColor {
    let s = ((v.max(1e-300).log10() - lo) / (hi - lo)).clamp(0.0, 1.0);
    let (r, g, b) = if s < 0.5 {
        let u = s * 2.0;
        (255.0 * (1.0 - u), 255.0 * (1.0 - 0.6 * u), 255.0)
    } else {
        let u = (s - 0.5) * 2.0;
        (150.0 * u, 102.0 * (1.0 - u), 255.0 * (1.0 - 0.8 * u))
    };
    RGBColor(r as u8, g as u8, b as u8)
}

/// Heatmap of `z[i][j]` at (`x[i]`, `y[j]`) with markers on top. Large
/// grids are reduced to at most 240 cells per axis by taking the maximum in
/// each block, which keeps narrow ridges visible.
pub fn heatmap(
    path: &Path,
    axes: Axes<'_>,
    x: &[f64],
    y: &[f64],
    z: &[Vec<f64>],
    markers: &[(f64, f64)],
) -> Result<Artifact> {
    if x.len() < 2 || y.len() < 2 {
        return Err(anyhow!("heatmap needs at least two points per axis"));
    }
    let bx = x.len().div_ceil(MAX_CELLS);
    let by = y.len().div_ceil(MAX_CELLS);
    let nx = x.len().div_ceil(bx);
    let ny = y.len().div_ceil(by);
    let mut cells = vec![vec![0.0f64; ny]; nx];
    for (i, col) in z.iter().enumerate() {
        for (j, &v) in col.iter().enumerate() {
            let c = &mut cells[i / bx][j / by];
            *c = c.max(v);
        }
    }
    let (lo, hi) = cells
        .iter()
        .flatten()
        .filter(|v| **v > 0.0 && v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v.log10()), b.max(v.log10()))
        });
    let (lo, hi) = if lo < hi {
        (lo, hi)
    } else {
        (lo - 1.0, lo + 1.0)
    };
    let dx = (x[x.len() - 1] - x[0]) / (nx as f64);
    let dy = (y[y.len() - 1] - y[0]) / (ny as f64);

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(err)?;
        let mut chart: ChartContext<'_, _, Cartesian2d<RangedCoordf64, RangedCoordf64>> =
            ChartBuilder::on(&root)
                .caption(axes.title, ("sans-serif", 22))
                .margin(12)
                .x_label_area_size(45)
                .y_label_area_size(60)
                .build_cartesian_2d(x[0]..x[x.len() - 1], y[0]..y[y.len() - 1])
                .map_err(err)?;
        chart
            .configure_mesh()
            .disable_mesh()
            .x_desc(axes.x_label)
            .y_desc(axes.y_label)
            .draw()
            .map_err(err)?;
        chart
            .draw_series(cells.iter().enumerate().flat_map(|(i, col)| {
                col.iter().enumerate().map(move |(j, &v)| {
                    let a = (x[0] + i as f64 * dx, y[0] + j as f64 * dy);
                    let b = (a.0 + dx, a.1 + dy);
                    Rectangle::new([a, b], shade(v, lo, hi).filled())
                })
            }))
            .map_err(err)?;
        chart
            .draw_series(markers.iter().map(|&p| Circle::new(p, 2, BLACK.filled())))
            .map_err(err)?;
        root.present().map_err(err)?;
    }
    write_bytes(path, svg.as_bytes())
}
