//! Grid scans of moduli space: CSV rows and an SVG heatmap.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{conformal_area, conjecture_margin, upper_bound_u};
use crate::error::{Error, Result};
use crate::flat_spectrum::normalized_eigenvalue;
use crate::moduli::TorusParams;

pub const CSV_HEADER: &str =
    "a,b,in_region,U,A_c,four_Ac,ratio_U_over_Ac,flat_lambda2_bar,conjecture_margin,supports_conjecture";

/// `steps` evenly spaced values from `min` to `max`; a single step yields `min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Range {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !min.is_finite() || !max.is_finite() || max < min {
            return Err(Error::Config(format!(
                "invalid range [{min}, {max}] with {steps} steps"
            )));
        }
        Ok(Self { min, max, steps })
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.steps == 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.value(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Svg,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    U,
    #[serde(rename = "A_c")]
    Ac,
    FourAc,
    RatioUOverAc,
    FlatLambda2Bar,
    ConjectureMargin,
}

impl Column {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "U" => Column::U,
            "A_c" => Column::Ac,
            "four_Ac" => Column::FourAc,
            "ratio_U_over_Ac" => Column::RatioUOverAc,
            "flat_lambda2_bar" => Column::FlatLambda2Bar,
            "conjecture_margin" => Column::ConjectureMargin,
            _ => return Err(Error::Config(format!("unknown column '{name}'"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Column::U => "U",
            Column::Ac => "A_c",
            Column::FourAc => "four_Ac",
            Column::RatioUOverAc => "ratio_U_over_Ac",
            Column::FlatLambda2Bar => "flat_lambda2_bar",
            Column::ConjectureMargin => "conjecture_margin",
        }
    }

    pub fn get(&self, row: &ScanRow) -> f64 {
        match self {
            Column::U => row.u,
            Column::Ac => row.a_c,
            Column::FourAc => row.four_ac,
            Column::RatioUOverAc => row.ratio_u_over_ac,
            Column::FlatLambda2Bar => row.flat_lambda2_bar,
            Column::ConjectureMargin => row.conjecture_margin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub a_range: Range,
    pub b_range: Range,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub a: f64,
    pub b: f64,
    pub in_region: bool,
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "A_c")]
    pub a_c: f64,
    #[serde(rename = "four_Ac")]
    pub four_ac: f64,
    #[serde(rename = "ratio_U_over_Ac")]
    pub ratio_u_over_ac: f64,
    pub flat_lambda2_bar: f64,
    pub conjecture_margin: f64,
    pub supports_conjecture: bool,
}

impl ScanRow {
    pub fn at(params: &TorusParams) -> Result<Self> {
        let u = upper_bound_u(params);
        let a_c = conformal_area(params);
        let margin = conjecture_margin(params);
        Ok(Self {
            a: params.a(),
            b: params.b(),
            in_region: params.is_in_fundamental_region(),
            u,
            a_c,
            four_ac: 4.0 * a_c,
            ratio_u_over_ac: u / a_c,
            flat_lambda2_bar: normalized_eigenvalue(params, 2)?,
            conjecture_margin: margin,
            supports_conjecture: margin < 0.0,
        })
    }
}

/// Rows in `a`-outer, `b`-inner order.
pub fn scan(config: &ScanConfig) -> Result<Vec<ScanRow>> {
    let bs = config.b_range.values();
    let blocks: Vec<Result<Vec<ScanRow>>> = config
        .a_range
        .values()
        .into_par_iter()
        .map(|a| bs.iter().map(|&b| ScanRow::at(&TorusParams::new(a, b)?)).collect())
        .collect();
    let mut rows = Vec::with_capacity(config.a_range.steps * config.b_range.steps);
    for block in blocks {
        rows.extend(block?);
    }
    Ok(rows)
}

#[inline]
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(rows: &[ScanRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_float(r.a),
            fmt_float(r.b),
            r.in_region,
            fmt_float(r.u),
            fmt_float(r.a_c),
            fmt_float(r.four_ac),
            fmt_float(r.ratio_u_over_ac),
            fmt_float(r.flat_lambda2_bar),
            fmt_float(r.conjecture_margin),
            r.supports_conjecture
        )?;
    }
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<ScanRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Config("CSV header does not match".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(Error::Config(format!("CSV line {} has {} fields", i + 2, f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Config(format!("bad number '{s}'")));
            let flag = |s: &str| s.parse::<bool>().map_err(|_| Error::Config(format!("bad flag '{s}'")));
            Ok(ScanRow {
                a: num(f[0])?,
                b: num(f[1])?,
                in_region: flag(f[2])?,
                u: num(f[3])?,
                a_c: num(f[4])?,
                four_ac: num(f[5])?,
                ratio_u_over_ac: num(f[6])?,
                flat_lambda2_bar: num(f[7])?,
                conjecture_margin: num(f[8])?,
                supports_conjecture: flag(f[9])?,
            })
        })
        .collect()
}

const LOW_COLOR: [f64; 3] = [33.0, 102.0, 172.0];
const HIGH_COLOR: [f64; 3] = [178.0, 24.0, 43.0];
const OUTSIDE_COLOR: &str = "#bdbdbd";

/// Linear ramp from the low color (at `min`) to the high color (at `max`).
pub fn ramp_color(value: f64, min: f64, max: f64) -> String {
    let t = if max > min {
        ((value - min) / (max - min)).clamp(0.0, 1.0)
    } else {
        0.5
    };
    let c: Vec<u8> = (0..3)
        .map(|i| (LOW_COLOR[i] + t * (HIGH_COLOR[i] - LOW_COLOR[i])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// One rect per cell, `a` to the right and `b` upward; cells outside the
/// fundamental region are gray and excluded from the ramp. When the column
/// changes sign the ramp spans `[-m, m]`, so negative cells fall in the
/// low-color half.
pub fn render_svg(rows: &[ScanRow], config: &ScanConfig, column: Column) -> String {
    let (na, nb) = (config.a_range.steps, config.b_range.steps);
    let cell = 12.0_f64.max(480.0 / na.max(nb) as f64).min(48.0);
    let (left, top, legend_h) = (70.0, 20.0, 60.0);
    let (w, h) = (cell * na as f64, cell * nb as f64);
    let inside: Vec<f64> = rows.iter().filter(|r| r.in_region).map(|r| column.get(r)).collect();
    let (min, max) = if inside.is_empty() {
        (0.0, 0.0)
    } else {
        inside.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
    };
    // a column that changes sign gets a ramp centred on zero, so the sign
    // is readable from the hue
    let (lo, hi) = if min < 0.0 && max > 0.0 {
        let m = min.abs().max(max);
        (-m, m)
    } else {
        (min, max)
    };

    let mut s = String::new();
    let (tw, th) = (left + w + 20.0, top + h + 40.0 + legend_h);
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{tw:.1}\" height=\"{th:.1}\" viewBox=\"0 0 {tw:.1} {th:.1}\">"
    );
    let _ = writeln!(
        s,
        "<rect x=\"0\" y=\"0\" width=\"{tw:.1}\" height=\"{th:.1}\" fill=\"#ffffff\"/>"
    );
    for (k, r) in rows.iter().enumerate() {
        let (i, j) = (k / nb, k % nb);
        let x = left + cell * i as f64;
        let y = top + cell * (nb - 1 - j) as f64;
        let fill = if r.in_region {
            ramp_color(column.get(r), lo, hi)
        } else {
            OUTSIDE_COLOR.to_string()
        };
        let _ = writeln!(
            s,
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{cell:.2}\" height=\"{cell:.2}\" fill=\"{fill}\"><title>a={:.6} b={:.6} {}={:.9e}</title></rect>",
            r.a,
            r.b,
            column.name(),
            column.get(r)
        );
    }
    let axis_y = top + h + 16.0;
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{axis_y:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">a from {:.4} to {:.4}</text>",
        left + w / 2.0,
        config.a_range.min,
        config.a_range.max
    );
    let _ = writeln!(
        s,
        "<text x=\"14\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">b from {:.4} to {:.4}</text>",
        top + h / 2.0,
        top + h / 2.0,
        config.b_range.min,
        config.b_range.max
    );
    let ly = axis_y + 14.0;
    let _ = writeln!(
        s,
        "<rect x=\"{left:.1}\" y=\"{ly:.1}\" width=\"12\" height=\"12\" fill=\"{}\"/><text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{} min {:.9e}</text>",
        ramp_color(min, lo, hi),
        left + 18.0,
        ly + 10.0,
        column.name(),
        min
    );
    let _ = writeln!(
        s,
        "<rect x=\"{left:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{}\"/><text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{} max {:.9e}</text>",
        ly + 16.0,
        ramp_color(max, lo, hi),
        left + 18.0,
        ly + 26.0,
        column.name(),
        max
    );
    let _ = writeln!(
        s,
        "<rect x=\"{left:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{OUTSIDE_COLOR}\"/><text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">outside fundamental region</text>",
        ly + 32.0,
        left + 18.0,
        ly + 42.0
    );
    s.push_str("</svg>\n");
    s
}
