//! Memory-map renderings: operator index runs left to right, memory top to
//! bottom, one box per tensor.
//!
//! In offsets mode a box covers its byte range. In shared mode each object is
//! a horizontal lane, stacked in id order as if the objects were laid out
//! contiguously, and a box fills its object's lane up to the tensor's size.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::model::{operator_count, TensorId, TensorUsageRecord};
use crate::plan::Plan;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Ascii,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Block {
    tensor: TensorId,
    first_op: usize,
    last_op: usize,
    top: u64,
    bottom: u64,
    lane: Option<usize>,
}

fn blocks(plan: &Plan, records: &[TensorUsageRecord]) -> (Vec<Block>, u64) {
    let mut out = Vec::new();
    let total = plan.footprint();
    match plan {
        Plan::Offsets(p) => {
            for r in records {
                if let Some(&off) = p.assignment.get(&r.tensor_id) {
                    out.push(Block {
                        tensor: r.tensor_id,
                        first_op: r.first_op,
                        last_op: r.last_op,
                        top: off,
                        bottom: off + r.size,
                        lane: None,
                    });
                }
            }
        }
        Plan::Shared(p) => {
            let mut objects = p.objects.clone();
            objects.sort_by_key(|o| o.id);
            let mut base = BTreeMap::new();
            let mut next = 0;
            for o in &objects {
                base.insert(o.id, next);
                next += o.size;
            }
            for r in records {
                if let Some(o) = p.assignment.get(&r.tensor_id) {
                    let top = base.get(o).copied().unwrap_or(0);
                    out.push(Block {
                        tensor: r.tensor_id,
                        first_op: r.first_op,
                        last_op: r.last_op,
                        top,
                        bottom: top + r.size,
                        lane: Some(*o),
                    });
                }
            }
        }
    }
    (out, total)
}

pub fn render(plan: &Plan, records: &[TensorUsageRecord], format: Format) -> String {
    match format {
        Format::Ascii => render_ascii(plan, records),
        Format::Svg => render_svg(plan, records),
    }
}

const GLYPHS: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
const CELL: usize = 3;

/// Text grid with one column group per operator and one row per band
/// between consecutive distinct block edges. Each tensor fills its cells
/// with its own glyph; the legend maps glyphs back to tensors.
pub fn render_ascii(plan: &Plan, records: &[TensorUsageRecord]) -> String {
    let (blocks, total) = blocks(plan, records);
    let n_ops = operator_count(records);
    let mut edges: Vec<u64> = blocks.iter().flat_map(|b| [b.top, b.bottom]).collect();
    edges.push(0);
    edges.push(total);
    edges.sort_unstable();
    edges.dedup();

    let glyph = |i: usize| GLYPHS[i % GLYPHS.len()] as char;
    let label_width = total.to_string().len();
    let mut out = String::new();
    let _ = writeln!(out, "{} plan, footprint {total} bytes", plan.mode());
    let _ = write!(out, "{:>w$} |", "op", w = label_width);
    for op in 0..n_ops {
        let _ = write!(out, "{op:^w$}", w = CELL);
    }
    out.push('\n');
    let _ = writeln!(
        out,
        "{}-+{}",
        "-".repeat(label_width),
        "-".repeat(n_ops * CELL)
    );

    for band in edges.windows(2) {
        let (lo, hi) = (band[0], band[1]);
        let mut row = vec![' '; n_ops * CELL];
        for (i, b) in blocks.iter().enumerate() {
            if b.top <= lo && hi <= b.bottom {
                for op in b.first_op..=b.last_op {
                    for c in &mut row[op * CELL..(op + 1) * CELL] {
                        *c = glyph(i);
                    }
                }
            }
        }
        let _ = writeln!(
            out,
            "{lo:>w$} |{}",
            row.into_iter().collect::<String>().trim_end(),
            w = label_width
        );
    }
    let _ = writeln!(out, "{total:>w$} +", w = label_width);
    out.push('\n');
    for (i, b) in blocks.iter().enumerate() {
        let placement = match b.lane {
            Some(o) => format!("object {o}"),
            None => format!("offset {}", b.top),
        };
        let _ = writeln!(
            out,
            "{} t{}: ops {}..={}, {} bytes, {placement}",
            glyph(i),
            b.tensor,
            b.first_op,
            b.last_op,
            b.bottom - b.top
        );
    }
    out
}

const SVG_OP_WIDTH: f64 = 48.0;
const SVG_HEIGHT: f64 = 480.0;
const SVG_MARGIN: f64 = 24.0;

/// Scalable drawing with one `<rect>` per tensor.
pub fn render_svg(plan: &Plan, records: &[TensorUsageRecord]) -> String {
    let (blocks, total) = blocks(plan, records);
    let n_ops = operator_count(records).max(1);
    let scale = if total == 0 {
        0.0
    } else {
        SVG_HEIGHT / total as f64
    };
    let width = n_ops as f64 * SVG_OP_WIDTH + 2.0 * SVG_MARGIN;
    let height = SVG_HEIGHT + 2.0 * SVG_MARGIN;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(
        out,
        r#"  <title>{} plan, footprint {total} bytes</title>"#,
        plan.mode()
    );
    let _ = writeln!(
        out,
        r##"  <rect x="{SVG_MARGIN:.0}" y="{SVG_MARGIN:.0}" width="{:.2}" height="{SVG_HEIGHT:.2}" fill="none" stroke="#888"/>"##,
        n_ops as f64 * SVG_OP_WIDTH
    );
    for b in &blocks {
        let x = SVG_MARGIN + b.first_op as f64 * SVG_OP_WIDTH;
        let w = (b.last_op - b.first_op + 1) as f64 * SVG_OP_WIDTH;
        let y = SVG_MARGIN + b.top as f64 * scale;
        let h = (b.bottom - b.top) as f64 * scale;
        let hue = (b.tensor * 47) % 360;
        let _ = writeln!(
            out,
            r##"  <rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="hsl({hue},60%,70%)" stroke="#333" stroke-width="0.5"><title>t{}: ops {}..={}, {} bytes at {}</title></rect>"##,
            b.tensor,
            b.first_op,
            b.last_op,
            b.bottom - b.top,
            b.top
        );
        let _ = writeln!(
            out,
            r#"  <text x="{:.2}" y="{:.2}" font-family="monospace" font-size="10" text-anchor="middle" dominant-baseline="middle">t{}</text>"#,
            x + w / 2.0,
            y + h / 2.0,
            b.tensor
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offsets::greedy_by_size_offsets;
    use crate::shared::greedy_by_size;

    fn two_chain() -> Vec<TensorUsageRecord> {
        vec![
            TensorUsageRecord::new(1, 0, 1, 64),
            TensorUsageRecord::new(2, 1, 2, 64),
        ]
    }

    #[test]
    fn ascii_boxes_do_not_collide() {
        let recs = two_chain();
        let plan = Plan::Offsets(greedy_by_size_offsets(&recs));
        let text = render_ascii(&plan, &recs);
        assert!(text.contains("A t1: ops 0..=1, 64 bytes, offset 0"));
        assert!(text.contains("B t2: ops 1..=2, 64 bytes, offset 64"));
        let grid: Vec<&str> = text.lines().filter(|l| l.contains(" |")).skip(1).collect();
        assert_eq!(grid.len(), 2);
        assert_eq!(grid[0].trim_start(), "0 |AAAAAA");
        assert_eq!(grid[1].trim_start(), "64 |   BBBBBB");
    }

    #[test]
    fn svg_has_one_rect_per_record() {
        let recs = two_chain();
        let plan = Plan::Shared(greedy_by_size(&recs));
        let svg = render_svg(&plan, &recs);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        // One frame plus one per tensor.
        assert_eq!(svg.matches("<rect").count(), 3);
        assert_eq!(svg.matches("</rect>").count(), 2);
        assert_eq!(render_svg(&plan, &recs), svg);
    }
}
