//! PPM and SVG output for planar labelings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{GridLabeling, OUTSIDE};
use crate::scalar::Real;
use crate::sites::SiteSet;

const BACKGROUND: [u8; 3] = [255, 255, 255];
const ORPHAN: [u8; 3] = [0, 0, 0];

/// A light, well-separated colour for each site (golden-ratio hue walk).
pub fn site_color(site: usize) -> [u8; 3] {
    let h = (site as f64 * 0.618_033_988_749_895).fract() * 6.0;
    let (s, v) = (0.55, 0.95);
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r, g, b].map(|t| ((t + m) * 255.0).round() as u8)
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Binary PPM with one pixel per cell, `+y` pointing up. Cells flagged in
/// `orphans` are drawn black, cells outside the field white.
pub fn render_ppm<T: Real>(labeling: &GridLabeling<T, 2>, orphans: &[bool]) -> Vec<u8> {
    let [nx, ny] = labeling.dims();
    let mut out = format!("P6\n{nx} {ny}\n255\n").into_bytes();
    out.reserve(3 * nx * ny);
    for row in 0..ny {
        let j = ny - 1 - row;
        for i in 0..nx {
            let c = labeling.flat_index(&[i, j]);
            let px = if orphans.get(c).copied().unwrap_or(false) {
                ORPHAN
            } else {
                match labeling.labels()[c] {
                    OUTSIDE => BACKGROUND,
                    l => site_color(l as usize),
                }
            };
            out.extend_from_slice(&px);
        }
    }
    out
}

/// Closed boundary loops of the cells selected by `inside`, in grid
/// coordinates with `+y` up. Each loop runs counter-clockwise around the
/// selected cells, so holes come out clockwise.
fn trace(dims: [usize; 2], inside: impl Fn(usize, usize) -> bool) -> Vec<Vec<(usize, usize)>> {
    let [nx, ny] = dims;
    let sel = |i: isize, j: isize| i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny && inside(i as usize, j as usize);
    let mut edges: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for j in 0..ny {
        for i in 0..nx {
            if !inside(i, j) {
                continue;
            }
            let (ii, jj) = (i as isize, j as isize);
            let mut add = |a, b| edges.entry(a).or_default().push(b);
            if !sel(ii, jj - 1) {
                add((i, j), (i + 1, j));
            }
            if !sel(ii + 1, jj) {
                add((i + 1, j), (i + 1, j + 1));
            }
            if !sel(ii, jj + 1) {
                add((i + 1, j + 1), (i, j + 1));
            }
            if !sel(ii - 1, jj) {
                add((i, j + 1), (i, j));
            }
        }
    }
    let mut loops = Vec::new();
    while let Some((&start, _)) = edges.iter().next() {
        let mut ring = vec![start];
        let mut at = start;
        loop {
            let outs = edges.get_mut(&at).expect("boundary edges form closed loops");
            let next = outs.pop().unwrap();
            if outs.is_empty() {
                edges.remove(&at);
            }
            if next == start {
                break;
            }
            ring.push(next);
            at = next;
        }
        loops.push(simplify(ring));
    }
    loops
}

/// Drops vertices lying on a straight run.
fn simplify(ring: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    let n = ring.len();
    (0..n)
        .filter(|&k| {
            let (p, c, q) = (ring[(k + n - 1) % n], ring[k], ring[(k + 1) % n]);
            !((p.0 == c.0 && c.0 == q.0) || (p.1 == c.1 && c.1 == q.1))
        })
        .map(|k| ring[k])
        .collect()
}

fn path_data(loops: &[Vec<(usize, usize)>], ny: usize) -> String {
    let mut d = String::new();
    for ring in loops {
        for (k, &(x, y)) in ring.iter().enumerate() {
            let cmd = if k == 0 { 'M' } else { 'L' };
            write!(d, "{cmd}{x} {} ", ny - y).unwrap();
        }
        d.push_str("Z ");
    }
    d.pop();
    d
}

/// SVG with one traced polygon per region, orphan cells overdrawn in black
/// and the sites marked.
pub fn render_svg<T: Real>(labeling: &GridLabeling<T, 2>, sites: &SiteSet<T, 2>, orphans: &[bool]) -> String {
    let [nx, ny] = labeling.dims();
    let scale = (512 / nx.max(ny)).max(1);
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {nx} {ny}" width="{}" height="{}" shape-rendering="crispEdges">"#,
        nx * scale,
        ny * scale
    )
    .unwrap();
    writeln!(out, r#"<rect width="{nx}" height="{ny}" fill="{}"/>"#, hex(BACKGROUND)).unwrap();
    let labels = labeling.labels();
    let present: std::collections::BTreeSet<u32> = labels.iter().copied().filter(|&l| l != OUTSIDE).collect();
    for l in present {
        let loops = trace([nx, ny], |i, j| labels[labeling.flat_index(&[i, j])] == l);
        writeln!(
            out,
            r#"<path data-site="{l}" fill="{}" fill-rule="evenodd" d="{}"/>"#,
            hex(site_color(l as usize)),
            path_data(&loops, ny)
        )
        .unwrap();
    }
    if orphans.iter().any(|&o| o) {
        let loops = trace([nx, ny], |i, j| orphans[labeling.flat_index(&[i, j])]);
        writeln!(out, r#"<path class="orphan" fill="{}" fill-rule="evenodd" d="{}"/>"#, hex(ORPHAN), path_data(&loops, ny))
            .unwrap();
    }
    let lo = labeling.domain().lo;
    let cs = labeling.cell_size();
    for p in sites.points() {
        let x = ((p[0] - lo[0]) / cs[0]).as_f64();
        let y = ny as f64 - ((p[1] - lo[1]) / cs[1]).as_f64();
        writeln!(out, r#"<circle cx="{x:.4}" cy="{y:.4}" r="{:.3}" fill="black"/>"#, 0.004 * nx.max(ny) as f64 + 0.3)
            .unwrap();
    }
    out.push_str("</svg>\n");
    out
}
