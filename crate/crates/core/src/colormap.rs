//! Scalar-to-color mapping for colorized point cloud output.

const MISSING: [u8; 3] = [128, 128, 128];

/// Blue, white, red.
const DIVERGING: [[f64; 3]; 3] = [[0.23, 0.30, 0.75], [0.95, 0.95, 0.95], [0.71, 0.02, 0.15]];

/// Blue, cyan, green, yellow, red.
const SEQUENTIAL: [[f64; 3]; 5] = [
    [0.0, 0.0, 1.0],
    [0.0, 1.0, 1.0],
    [0.0, 1.0, 0.0],
    [1.0, 1.0, 0.0],
    [1.0, 0.0, 0.0],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Colormap {
    /// Centered on zero; for signed quantities.
    Diverging,
    Sequential,
}

/// Percentile with linear interpolation between order statistics.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn interpolate(stops: &[[f64; 3]], t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let segments = (stops.len() - 1) as f64;
    let pos = t * segments;
    let i = (pos.floor() as usize).min(stops.len() - 2);
    let frac = pos - i as f64;
    let mut out = [0u8; 3];
    for (c, slot) in out.iter_mut().enumerate() {
        let v = stops[i][c] + frac * (stops[i + 1][c] - stops[i][c]);
        *slot = (v * 255.0).round() as u8;
    }
    out
}

/// Clipping range from the 2nd and 98th percentiles of the finite values.
pub fn clip_range(values: &[f64], map: Colormap) -> Option<(f64, f64)> {
    let mut finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return None;
    }
    finite.sort_by(f64::total_cmp);
    let (lo, hi) = (percentile(&finite, 0.02), percentile(&finite, 0.98));
    Some(match map {
        Colormap::Diverging => {
            let reach = lo.abs().max(hi.abs());
            (-reach, reach)
        }
        Colormap::Sequential => (lo, hi),
    })
}

/// Position in `[0, 1]` of `v` within the clipping range.
pub fn normalized(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        0.5
    }
}

/// One RGB color per value; non-finite values are gray.
pub fn colorize(values: &[f64], map: Colormap) -> Vec<[u8; 3]> {
    let Some(range) = clip_range(values, map) else {
        return vec![MISSING; values.len()];
    };
    let stops: &[[f64; 3]] = match map {
        Colormap::Diverging => &DIVERGING,
        Colormap::Sequential => &SEQUENTIAL,
    };
    values
        .iter()
        .map(|&v| if v.is_finite() { interpolate(stops, normalized(v, range)) } else { MISSING })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hue(c: [u8; 3]) -> f64 {
        let [r, g, b] = c.map(f64::from);
        let max = r.max(g).max(b);
        let min = r.min(g).min(b);
        if max == min {
            return 0.0;
        }
        let h = if max == r {
            (g - b) / (max - min)
        } else if max == g {
            2.0 + (b - r) / (max - min)
        } else {
            4.0 + (r - g) / (max - min)
        };
        (h * 60.0).rem_euclid(360.0)
    }

    #[test]
    fn outliers_are_clipped() {
        let mut values: Vec<f64> = (0..100).map(f64::from).collect();
        values.push(1e9);
        let range = clip_range(&values, Colormap::Sequential).unwrap();
        assert!(range.1 < 100.0);
        let colors = colorize(&values, Colormap::Sequential);
        assert_eq!(colors[100], [255, 0, 0]);
    }

    #[test]
    fn diverging_is_centered() {
        let values = [-1.0, 0.0, 4.0];
        let colors = colorize(&values, Colormap::Diverging);
        assert_eq!(colors[1], [242, 242, 242]);
        assert_eq!(colorize(&[f64::NAN], Colormap::Diverging), vec![MISSING]);
    }

    proptest! {
        #[test]
        fn mapping_is_monotone(mut values in proptest::collection::vec(-10.0f64..10.0, 2..60)) {
            values.sort_by(f64::total_cmp);
            let seq = colorize(&values, Colormap::Sequential);
            for w in seq.windows(2) {
                // Hue runs from blue (240°) down to red (0°).
                prop_assert!(hue(w[1]) <= hue(w[0]) + 1e-9);
            }
            let div = colorize(&values, Colormap::Diverging);
            for w in div.windows(2) {
                let warmth = |c: [u8; 3]| i32::from(c[0]) - i32::from(c[2]);
                prop_assert!(warmth(w[1]) >= warmth(w[0]) - 1);
            }
        }
    }
}
