//! Standalone HTML export: one file, scene embedded, no network fetches.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::scene::Scene;

const BUILTIN_TEMPLATE: &str = include_str!("viewer.html");

/// Placeholder replaced by the scene JSON. Required in custom templates.
pub const SCENE_PLACEHOLDER: &str = "{{SCENE_JSON}}";
const TITLE_PLACEHOLDER: &str = "{{TITLE}}";
const LEGEND_PLACEHOLDER: &str = "{{LEGEND}}";
const HEATMAP_PLACEHOLDER: &str = "{{HEATMAP_PANEL}}";

/// Where the page skeleton comes from.
#[derive(Debug, Clone, Copy)]
pub enum Template<'a> {
    Builtin,
    File(&'a Path),
}

fn escape_html(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

fn legend_html(scene: &Scene) -> String {
    let mut out = String::new();
    for class in scene.classes() {
        let color = &scene.class_palette[&class];
        let name = escape_html(&class);
        let _ = writeln!(
            out,
            r#"    <div class="legend-item" data-class="{name}"><span class="swatch" style="background:{color}"></span>{name}</div>"#
        );
    }
    out
}

fn heatmap_html(scene: &Scene) -> String {
    let Some(heatmap) = &scene.overlap else {
        return String::new();
    };
    let mut out =
        String::from("  <section id=\"heatmap-panel\">\n  <h2>Pairwise overlap</h2>\n  <table class=\"heatmap\">\n");
    out.push_str("    <tr><th>i</th><th>j</th><th>&omega;<sub>ij</sub></th></tr>\n");
    for cell in &heatmap.cells {
        // white -> red on the normalized color scale
        let shade = (255.0 * (1.0 - cell.color)).round() as u8;
        let _ = writeln!(
            out,
            "    <tr style=\"background:#FF{shade:02X}{shade:02X}\"><td>{}</td><td>{}</td><td>{:.4e}</td></tr>",
            escape_html(&cell.class_i),
            escape_html(&cell.class_j),
            cell.omega
        );
    }
    out.push_str("  </table>\n  </section>\n");
    out
}

/// Renders `scene` into a self-contained HTML page.
///
/// The scene JSON sits verbatim inside a `<script type="application/json">`
/// block; the only change is that `</` is written as `<\/`, which JSON
/// parsers read back identically.
pub fn export_html(scene: &Scene, template: Template<'_>) -> Result<String> {
    let skeleton = match template {
        Template::Builtin => BUILTIN_TEMPLATE.to_string(),
        Template::File(path) => {
            std::fs::read_to_string(path).map_err(|_| Error::TemplateMissing(path.display().to_string()))?
        }
    };
    if !skeleton.contains(SCENE_PLACEHOLDER) {
        return Err(Error::InvalidData(format!("template lacks the {SCENE_PLACEHOLDER} placeholder")));
    }
    scene.validate()?;
    let json = scene.to_json()?.replace("</", "<\\/");
    let title = format!("{} display", method_title(scene));
    Ok(skeleton
        .replace(TITLE_PLACEHOLDER, &escape_html(&title))
        .replace(LEGEND_PLACEHOLDER, &legend_html(scene))
        .replace(HEATMAP_PLACEHOLDER, &heatmap_html(scene))
        .replace(SCENE_PLACEHOLDER, &json))
}

fn method_title(scene: &Scene) -> &'static str {
    use crate::projection::ProjectionMethod::*;
    match scene.method {
        RadViz2D => "RadViz2D",
        RadViz3D => "RadViz3D",
        Viz3D => "Viz3D",
    }
}
