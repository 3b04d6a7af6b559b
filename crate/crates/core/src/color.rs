//! Color-space conversions for unit-range sRGB.

/// sRGB (D65) to CIE L*a*b*, `L` in `[0, 100]`.
pub fn rgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    fn linear(c: f64) -> f64 {
        if c <= 0.04045 {
            c / 12.92
        } else {
            ((c + 0.055) / 1.055).powf(2.4)
        }
    }
    fn f(t: f64) -> f64 {
        const DELTA: f64 = 6.0 / 29.0;
        if t > DELTA * DELTA * DELTA {
            t.cbrt()
        } else {
            t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
        }
    }
    let [r, g, b] = rgb.map(linear);
    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    let (fx, fy, fz) = (f(x / 0.95047), f(y), f(z / 1.08883));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Full-range BT.601 YCbCr, `Y` in `[0, 1]`, chroma in `[-0.5, 0.5]`.
pub fn rgb_to_ycbcr(rgb: [f64; 3]) -> [f64; 3] {
    let [r, g, b] = rgb;
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    [y, (b - y) / 1.772, (r - y) / 1.402]
}

/// Lab rescaled to roughly `[0, 1]` per channel.
pub fn lab_unit(rgb: [f64; 3]) -> [f64; 3] {
    let [l, a, b] = rgb_to_lab(rgb);
    [l / 100.0, (a + 128.0) / 255.0, (b + 128.0) / 255.0]
}

/// YCbCr shifted to `[0, 1]` per channel.
pub fn ycbcr_unit(rgb: [f64; 3]) -> [f64; 3] {
    let [y, cb, cr] = rgb_to_ycbcr(rgb);
    [y, cb + 0.5, cr + 0.5]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lab_reference_points() {
        let white = rgb_to_lab([1.0, 1.0, 1.0]);
        assert!((white[0] - 100.0).abs() < 1e-3);
        assert!(white[1].abs() < 1e-2 && white[2].abs() < 1e-2);
        assert_eq!(rgb_to_lab([0.0; 3]), [0.0, 0.0, 0.0]);
        // sRGB red
        let red = rgb_to_lab([1.0, 0.0, 0.0]);
        assert!((red[0] - 53.24).abs() < 0.05);
        assert!((red[1] - 80.09).abs() < 0.1);
        assert!((red[2] - 67.20).abs() < 0.1);
    }

    #[test]
    fn ycbcr_gray_has_no_chroma() {
        let [y, cb, cr] = rgb_to_ycbcr([0.4, 0.4, 0.4]);
        assert!((y - 0.4).abs() < 1e-12 && cb.abs() < 1e-12 && cr.abs() < 1e-12);
        let [_, cb, cr] = ycbcr_unit([0.0, 0.0, 1.0]);
        assert!((cb - 1.0).abs() < 1e-12 && (0.0..=1.0).contains(&cr));
    }
}
