//! Aligned plain-text rendering of report objects.

use std::fmt::Write as _;

/// One line of human-readable output: label, value, unit.
pub struct Line {
    pub label: String,
    pub value: String,
    pub unit: &'static str,
}

impl Line {
    pub fn new(label: impl Into<String>, value: impl Into<String>, unit: &'static str) -> Self {
        Self { label: label.into(), value: value.into(), unit }
    }

    /// A section heading; rendered without value alignment.
    pub fn heading(label: impl Into<String>) -> Self {
        Self { label: label.into(), value: String::new(), unit: "" }
    }
}

pub trait Table {
    fn lines(&self) -> Vec<Line>;
}

pub fn render(lines: &[Line]) -> String {
    let label_w = lines.iter().filter(|l| !l.value.is_empty()).map(|l| l.label.len()).max().unwrap_or(0);
    let value_w = lines.iter().map(|l| l.value.len()).max().unwrap_or(0);
    let mut out = String::new();
    for l in lines {
        if l.value.is_empty() {
            let _ = writeln!(out, "{}", l.label);
        } else {
            let line = format!("  {:<label_w$}  {:>value_w$} {}", l.label, l.value, l.unit);
            let _ = writeln!(out, "{}", line.trim_end());
        }
    }
    out
}

/// Fixed significant-figure formatting for table cells.
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-3..6).contains(&mag) {
        let decimals = (digits as i32 - 1 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{:.*e}", digits.saturating_sub(1), x)
    }
}

/// `2pi x <f>` with an SI prefix chosen for `f` (Hz).
pub fn two_pi(f_hz: f64) -> (String, &'static str) {
    let (scale, unit) = match f_hz.abs() {
        x if x >= 1e9 => (1e-9, "GHz"),
        x if x >= 1e6 => (1e-6, "MHz"),
        x if x >= 1e3 => (1e-3, "kHz"),
        _ => (1.0, "Hz"),
    };
    (format!("2pi x {}", sig(f_hz * scale, 5)), unit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_figures() {
        assert_eq!(sig(161.5634, 5), "161.56");
        assert_eq!(sig(3175.0, 4), "3175");
        assert_eq!(sig(6.23e14, 3), "6.23e14");
        assert_eq!(sig(0.0123, 2), "0.012");
    }

    #[test]
    fn columns_line_up() {
        let text = render(&[Line::new("a", "1.0", "m"), Line::new("longer", "22.0", "s")]);
        let widths: Vec<usize> = text.lines().map(str::len).collect();
        assert_eq!(widths.len(), 2);
        assert_eq!(widths[0], widths[1], "{text}");
    }
}
