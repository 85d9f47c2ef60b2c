use std::fmt::Write as _;

use serde_json::json;

use super::{checkerboard, lobe_positions, WignerField};

/// `x,p,W` rows, x outer, 17 significant digits.
pub fn to_csv(field: &WignerField) -> String {
    let g = &field.grid;
    let mut out = String::with_capacity(g.len() * 72 + 8);
    out.push_str("x,p,W\n");
    for i in 0..g.nx {
        for j in 0..g.np {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", g.x(i), g.p(j), field.at(i, j))
                .expect("writing to a String");
        }
    }
    out
}

/// Grid, convention and diagnostics for the field.
pub fn field_sidecar(field: &WignerField, expected_lobes: Option<usize>) -> serde_json::Value {
    let lobes = lobe_positions(field, expected_lobes);
    let board = checkerboard(field, 1.5);
    json!({
        "grid": field.grid,
        "convention": field.convention,
        "min": field.min(),
        "max": field.max(),
        "integral": field.integral(),
        "negativity_volume": field.negativity_volume(),
        "lobes": lobes,
        "checkerboard": board,
    })
}

/// Binary PPM heatmap: blue negative, white zero, red positive, scaled by
/// max |W|. Top row is p_max.
pub fn to_ppm(field: &WignerField) -> Vec<u8> {
    let g = &field.grid;
    let scale = field.max_abs().max(f64::MIN_POSITIVE);
    let mut out = format!("P6\n{} {}\n255\n", g.nx, g.np).into_bytes();
    for j in (0..g.np).rev() {
        for i in 0..g.nx {
            let t = (field.at(i, j) / scale).clamp(-1.0, 1.0);
            let fade = (255.0 * (1.0 - t.abs())).round() as u8;
            let px = if t >= 0.0 {
                [255, fade, fade]
            } else {
                [fade, fade, 255]
            };
            out.extend_from_slice(&px);
        }
    }
    out
}
