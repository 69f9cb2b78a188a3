//! Normalized RGB coordinates for the 40 color names.
//!
//! Bundled values come from the common web/X11 definitions divided by 255.
//! Names without a standard definition use the usual paint-chart values:
//! Mud_Green (96, 102, 48), Off_White (250, 249, 246), Cream (255, 253, 208),
//! Mustard (255, 219, 88), Dark_Brown (101, 67, 33), Dark_Pink (231, 84, 128),
//! Emerald (80, 200, 120), Lilac (200, 162, 200). Dark_Gray is a quarter
//! gray (0.25, 0.25, 0.25); the X11 "DarkGray" is lighter than "Gray",
//! which would invert the ordering the names imply.

use std::io::BufRead;

use crate::verbalization::ColorName;

use super::MetricsError;

pub type Rgb = [f64; 3];

#[derive(Clone, Debug, PartialEq)]
pub struct RgbTable {
    values: [Rgb; 40],
}

const fn rgb8(r: u8, g: u8, b: u8) -> Rgb {
    [r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0]
}

impl Default for RgbTable {
    fn default() -> Self {
        use ColorName::*;
        let mut values = [[0.0; 3]; 40];
        let entries: [(ColorName, Rgb); 40] = [
            (Red, rgb8(255, 0, 0)),
            (DarkRed, rgb8(139, 0, 0)),
            (Green, rgb8(0, 128, 0)),
            (BrightGreen, rgb8(0, 255, 0)),
            (DarkGreen, rgb8(0, 100, 0)),
            (LightGreen, rgb8(144, 238, 144)),
            (MudGreen, rgb8(96, 102, 48)),
            (Blue, rgb8(0, 0, 255)),
            (DarkBlue, rgb8(0, 0, 139)),
            (LightBlue, rgb8(173, 216, 230)),
            (RoyalBlue, rgb8(65, 105, 225)),
            (Black, rgb8(0, 0, 0)),
            (White, rgb8(255, 255, 255)),
            (OffWhite, rgb8(250, 249, 246)),
            (Gray, rgb8(128, 128, 128)),
            (DarkGray, [0.25, 0.25, 0.25]),
            (Silver, rgb8(192, 192, 192)),
            (Cream, rgb8(255, 253, 208)),
            (Magenta, rgb8(255, 0, 255)),
            (Cyan, rgb8(0, 255, 255)),
            (Yellow, rgb8(255, 255, 0)),
            (Mustard, rgb8(255, 219, 88)),
            (Khaki, rgb8(240, 230, 140)),
            (Brown, rgb8(165, 42, 42)),
            (DarkBrown, rgb8(101, 67, 33)),
            (Violet, rgb8(238, 130, 238)),
            (Pink, rgb8(255, 192, 203)),
            (DarkPink, rgb8(231, 84, 128)),
            (Maroon, rgb8(128, 0, 0)),
            (Tan, rgb8(210, 180, 140)),
            (Purple, rgb8(128, 0, 128)),
            (Lavender, rgb8(230, 230, 250)),
            (Turquoise, rgb8(64, 224, 208)),
            (Plum, rgb8(221, 160, 221)),
            (Gold, rgb8(255, 215, 0)),
            (Emerald, rgb8(80, 200, 120)),
            (Orange, rgb8(255, 165, 0)),
            (Beige, rgb8(245, 245, 220)),
            (Lilac, rgb8(200, 162, 200)),
            (Olive, rgb8(128, 128, 0)),
        ];
        for (name, rgb) in entries {
            values[name as usize] = rgb;
        }
        Self { values }
    }
}

impl RgbTable {
    pub fn get(&self, color: ColorName) -> Rgb {
        self.values[color as usize]
    }

    pub fn set(&mut self, color: ColorName, rgb: Rgb) -> Result<(), MetricsError> {
        if rgb.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(MetricsError::RgbRange(color.to_string()));
        }
        self.values[color as usize] = rgb;
        Ok(())
    }

    /// Applies `ColorName r g b` override lines on top of the bundled table.
    pub fn with_overrides<R: BufRead>(mut self, reader: R) -> Result<Self, MetricsError> {
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let err = |message: String| MetricsError::Parse {
                line: i + 1,
                message,
            };
            if fields.len() != 4 {
                return Err(err(format!("expected `Name r g b`, got `{line}`")));
            }
            let color: ColorName = fields[0].parse().map_err(|e| err(format!("{e}")))?;
            let mut rgb = [0.0; 3];
            for (slot, field) in rgb.iter_mut().zip(&fields[1..]) {
                *slot = field.parse().map_err(|e| err(format!("{e}")))?;
            }
            self.set(color, rgb)?;
        }
        Ok(self)
    }

    pub fn distance(&self, a: ColorName, b: ColorName) -> f64 {
        let (p, q) = (self.get(a), self.get(b));
        p.iter()
            .zip(&q)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Color whose RGB point is closest to `rgb` (first in list order on ties).
    pub fn nearest(&self, rgb: Rgb) -> ColorName {
        let mut best = (ColorName::ALL[0], f64::INFINITY);
        for c in ColorName::ALL {
            let v = self.get(c);
            let d: f64 = v.iter().zip(&rgb).map(|(x, y)| (x - y) * (x - y)).sum();
            if d < best.1 {
                best = (c, d);
            }
        }
        best.0
    }
}
