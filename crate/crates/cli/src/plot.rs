//! Deterministic SVG plots: embedding scatterplots and sweep loss curves.
//!
//! Output depends only on the inputs. Numbers are printed with fixed
//! precision and categories are ordered lexicographically, so equal inputs
//! give byte-identical files.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use morsemap_core::embed::Embedding2D;
use serde_json::Value;

pub const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#393b79", "#ad494a",
];

/// Anchors of a perceptually ordered dark-blue to yellow ramp.
const RAMP: [[u8; 3]; 5] = [[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]];

const FALLBACK: &str = "#4c4c4c";
const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 640.0;
const PLOT: (f64, f64, f64) = (40.0, 40.0, 560.0); // left, top, side
const LEGEND_X: f64 = 630.0;

/// Color of `t` in `[0, 1]` on the continuous ramp.
pub fn ramp(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (RAMP.len() - 1) as f64;
    let i = (x.floor() as usize).min(RAMP.len() - 2);
    let f = x - i as f64;
    let c: Vec<u8> = (0..3).map(|k| (RAMP[i][k] as f64 + f * (RAMP[i + 1][k] as f64 - RAMP[i][k] as f64)).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[derive(Clone, Debug, PartialEq)]
pub enum ColorScale {
    /// Categories in legend order.
    Categorical(Vec<String>),
    Continuous { min: f64, max: f64 },
    /// The key was missing everywhere.
    Single,
}

fn key_value(p: &morsemap_core::embed::EmbeddedPoint, key: &str) -> Option<Value> {
    match key {
        "label" => Some(Value::from(p.label.as_str())),
        "id" => Some(Value::from(p.id.as_str())),
        _ => p.meta.get(key).cloned(),
    }
}

fn category(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Scale for `key`: numeric values give a continuous ramp, anything else
/// categories. Warnings report a missing key or more categories than colors.
pub fn color_scale(e: &Embedding2D, key: &str) -> (ColorScale, Vec<String>) {
    let values: Vec<Option<Value>> = e.points.iter().map(|p| key_value(p, key)).collect();
    let mut warnings = Vec::new();
    if values.iter().all(Option::is_none) {
        warnings.push(format!("no point has {key:?}; using a single color"));
        return (ColorScale::Single, warnings);
    }
    if values.iter().any(Option::is_none) {
        warnings.push(format!("some points lack {key:?}; they are drawn in gray"));
    }
    let present: Vec<&Value> = values.iter().flatten().collect();
    if present.iter().all(|v| v.is_number()) {
        let nums = present.iter().filter_map(|v| v.as_f64());
        let (min, max) = nums.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        return (ColorScale::Continuous { min, max }, warnings);
    }
    let cats: Vec<String> = present.iter().map(|v| category(v)).collect::<BTreeSet<_>>().into_iter().collect();
    if cats.len() > PALETTE.len() {
        warnings.push(format!("{} categories for {} colors; colors repeat", cats.len(), PALETTE.len()));
    }
    (ColorScale::Categorical(cats), warnings)
}

fn point_color(scale: &ColorScale, v: Option<&Value>) -> String {
    match (scale, v) {
        (ColorScale::Categorical(cats), Some(v)) => {
            let c = category(v);
            let i = cats.binary_search(&c).unwrap_or(0);
            PALETTE[i % PALETTE.len()].to_string()
        }
        (ColorScale::Continuous { min, max }, Some(v)) => {
            let x = v.as_f64().unwrap_or(*min);
            ramp(if max > min { (x - min) / (max - min) } else { 0.5 })
        }
        _ => FALLBACK.to_string(),
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.1}" y="24" font-size="14">{}</text>"#, PLOT.0, escape(title));
    let (l, t, s) = PLOT;
    let _ = writeln!(out, r##"<rect x="{l}" y="{t}" width="{s}" height="{s}" fill="none" stroke="#cccccc"/>"##);
}

/// Scatterplot of `e`, one circle per point, colored by `color_by` (`label`,
/// `id` or a metadata key), with a legend. Returns the document and warnings.
pub fn embedding_svg(e: &Embedding2D, color_by: &str) -> (String, Vec<String>) {
    let (scale, warnings) = color_scale(e, color_by);
    let mut out = String::new();
    let method = serde_json::to_value(e.projection.method).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
    let title = match e.projection.perplexity {
        Some(p) => format!("{method}({p}) of {} points, colored by {color_by}", e.points.len()),
        None => format!("{method} of {} points, colored by {color_by}", e.points.len()),
    };
    header(&mut out, &title);

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &e.points {
        for (k, v) in [p.x, p.y].into_iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    // One scale for both axes keeps distances comparable.
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let span = if span > 0.0 { span } else { 1.0 };
    let (l, t, s) = PLOT;
    let pad = 8.0;
    let inner = s - 2.0 * pad;
    let cx = |x: f64| l + pad + (x - lo[0]) / span * inner + (span - (hi[0] - lo[0])) / span * inner / 2.0;
    let cy = |y: f64| t + pad + (hi[1] - y) / span * inner + (span - (hi[1] - lo[1])) / span * inner / 2.0;
    out.push_str("<g stroke=\"none\" fill-opacity=\"0.8\">\n");
    for p in &e.points {
        let color = point_color(&scale, key_value(p, color_by).as_ref());
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"><title>{}</title></circle>"#,
            cx(p.x),
            cy(p.y),
            escape(&p.id)
        );
    }
    out.push_str("</g>\n");

    let _ = writeln!(out, r#"<text x="{LEGEND_X}" y="{:.1}" font-weight="bold">{}</text>"#, PLOT.1 + 12.0, escape(color_by));
    match &scale {
        ColorScale::Categorical(cats) => {
            for (i, c) in cats.iter().enumerate() {
                let y = PLOT.1 + 32.0 + 18.0 * i as f64;
                let _ = writeln!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="5" fill="{}"/>"#, LEGEND_X + 6.0, y - 4.0, PALETTE[i % PALETTE.len()]);
                let _ = writeln!(out, r#"<text x="{:.1}" y="{y:.1}">{}</text>"#, LEGEND_X + 18.0, escape(c));
            }
        }
        ColorScale::Continuous { min, max } => {
            out.push_str("<defs><linearGradient id=\"ramp\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">\n");
            for k in 0..=10 {
                let _ = writeln!(out, r#"<stop offset="{:.1}" stop-color="{}"/>"#, k as f64 / 10.0, ramp(k as f64 / 10.0));
            }
            out.push_str("</linearGradient></defs>\n");
            let top = PLOT.1 + 24.0;
            let _ = writeln!(out, r#"<rect x="{LEGEND_X}" y="{top:.1}" width="16" height="200" fill="url(#ramp)"/>"#);
            let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{max:.4}</text>"#, LEGEND_X + 22.0, top + 10.0);
            let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{min:.4}</text>"#, LEGEND_X + 22.0, top + 200.0);
        }
        ColorScale::Single => {
            let _ = writeln!(out, r#"<text x="{LEGEND_X}" y="{:.1}">(no values)</text>"#, PLOT.1 + 32.0);
        }
    }
    out.push_str("</svg>\n");
    (out, warnings)
}

/// Loss curve of one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub latent_dim: usize,
    pub seed: u64,
    /// `(iteration, train_bce)`.
    pub points: Vec<(f64, f64)>,
}

/// Read every `loss_m<m>_s<seed>.csv` in a sweep directory, ordered by
/// `(m, seed)`.
pub fn read_sweep(dir: &Path) -> Result<Vec<Curve>> {
    let mut curves = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let Some(rest) = name.strip_prefix("loss_m").and_then(|r| r.strip_suffix(".csv")) else { continue };
        let Some((m, s)) = rest.split_once("_s") else { continue };
        let (Ok(latent_dim), Ok(seed)) = (m.parse(), s.parse()) else { continue };
        let text = std::fs::read_to_string(&path)?;
        let points = text
            .lines()
            .skip(1)
            .filter(|l| !l.is_empty())
            .map(|l| {
                let cols: Vec<&str> = l.split(',').collect();
                Ok((cols[0].parse::<f64>()?, cols.get(2).context("missing train_bce column")?.parse::<f64>()?))
            })
            .collect::<Result<Vec<_>>>()
            .with_context(|| format!("parsing {}", path.display()))?;
        curves.push(Curve { latent_dim, seed, points });
    }
    if curves.is_empty() {
        bail!("no loss curves in {}", dir.display());
    }
    curves.sort_by_key(|c| (c.latent_dim, c.seed));
    Ok(curves)
}

/// Train loss against iteration, one polyline per run, colored by latent size.
pub fn loss_curves_svg(curves: &[Curve]) -> String {
    let dims: Vec<usize> = curves.iter().map(|c| c.latent_dim).collect::<BTreeSet<_>>().into_iter().collect();
    let mut out = String::new();
    header(&mut out, &format!("train BCE over {} runs", curves.len()));
    let all = curves.iter().flat_map(|c| &c.points);
    let xmax = all.clone().map(|p| p.0).fold(0.0, f64::max).max(1.0);
    let (ymin, ymax) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let (ymin, ymax) = if ymax > ymin { (ymin, ymax) } else { (ymin - 0.5, ymin + 0.5) };
    let (l, t, s) = PLOT;
    let px = |x: f64| l + x / xmax * s;
    let py = |y: f64| t + (ymax - y) / (ymax - ymin) * s;
    for c in curves {
        let color = PALETTE[dims.binary_search(&c.latent_dim).unwrap_or(0) % PALETTE.len()];
        let pts: Vec<String> = c.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-opacity="0.6" points="{}"><title>m={} seed={}</title></polyline>"#,
            pts.join(" "),
            c.latent_dim,
            c.seed
        );
    }
    let _ = writeln!(out, r#"<text x="{l}" y="{:.1}">0</text>"#, t + s + 16.0);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{xmax:.0} iterations</text>"#, l + s, t + s + 16.0);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{ymax:.3}</text>"#, l - 4.0, t + 10.0);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{ymin:.3}</text>"#, l - 4.0, t + s);
    let _ = writeln!(out, r#"<text x="{LEGEND_X}" y="{:.1}" font-weight="bold">latent size</text>"#, t + 12.0);
    for (i, d) in dims.iter().enumerate() {
        let y = t + 32.0 + 18.0 * i as f64;
        let _ = writeln!(out, r#"<line x1="{LEGEND_X}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-width="3"/>"#, y - 4.0, LEGEND_X + 14.0, y - 4.0, PALETTE[i % PALETTE.len()]);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{y:.1}">{d}</text>"#, LEGEND_X + 20.0);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use morsemap_core::embed::{EmbeddedPoint, Method, Projection};
    use serde_json::Map;

    fn embedding() -> Embedding2D {
        let points = (0..6)
            .map(|i| EmbeddedPoint {
                id: format!("p{i}"),
                x: i as f64,
                y: (i * i) as f64 * 0.1,
                label: ["sine", "blobs", "rotsine"][i % 3].into(),
                meta: Map::from_iter([("x".to_string(), Value::from(i * 50))]),
            })
            .collect();
        Embedding2D::new(Projection { method: Method::Pca, perplexity: None, seed: None, latent_dim: 4 }, points)
    }

    #[test]
    fn one_circle_per_point_and_sorted_legend() {
        let (svg, warnings) = embedding_svg(&embedding(), "label");
        assert!(warnings.is_empty());
        assert_eq!(svg.matches("<title>p").count(), 6);
        let (b, r, s) = (svg.find(">blobs<").unwrap(), svg.find(">rotsine<").unwrap(), svg.find(">sine<").unwrap());
        assert!(b < r && r < s);
        assert_eq!(svg, embedding_svg(&embedding(), "label").0);
    }

    #[test]
    fn numeric_metadata_uses_the_ramp() {
        let (scale, _) = color_scale(&embedding(), "x");
        assert_eq!(scale, ColorScale::Continuous { min: 0.0, max: 250.0 });
        let (svg, _) = embedding_svg(&embedding(), "x");
        assert!(svg.contains(&format!("fill=\"{}\"", ramp(0.0))) && svg.contains(&format!("fill=\"{}\"", ramp(1.0))));
    }

    #[test]
    fn unknown_key_falls_back_to_one_color() {
        let (scale, warnings) = color_scale(&embedding(), "nope");
        assert_eq!(scale, ColorScale::Single);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp(0.0), "#440154");
        assert_eq!(ramp(1.0), "#fde725");
    }
}
