//! Default acceptance tolerances and the residual measure they apply to.

/// Symbolic polynomial pipelines, relative.
pub const IDENTITY: f64 = 1e-8;
/// Round trips that only add and subtract the same expressions.
pub const INVOLUTION: f64 = 1e-9;
/// Centre-valuedness and closedness of the invariant 3-form.
pub const CENTRE: f64 = 1e-9;
/// Pipelines with trigonometric, exponential or quadrature steps.
pub const TRANSCENDENTAL: f64 = 1e-6;
/// Internal gate of the homotopy-operator primitive.
pub const QUADRATURE_GATE: f64 = 1e-7;
/// Recovery of an exact primitive on polynomial input.
pub const PRIMITIVE: f64 = 1e-9;
/// Coefficients that must vanish up to round-off.
pub const EXACT: f64 = 1e-10;
/// Compatibility conditions required as hypotheses.
pub const COMPATIBILITY: f64 = 1e-8;

/// `|a - b| / (1 + max(|a|, |b|))`.
pub fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

/// Running maxima of absolute and relative differences.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Residual {
    pub absolute: f64,
    pub relative: f64,
}

impl Residual {
    pub fn record(&mut self, a: f64, b: f64) {
        let abs = (a - b).abs();
        // NaN must never pass as a small residual
        if abs.is_nan() {
            self.absolute = f64::INFINITY;
            self.relative = f64::INFINITY;
            return;
        }
        self.absolute = self.absolute.max(abs);
        self.relative = self.relative.max(relative(a, b));
    }

    pub fn record_slices(&mut self, a: &[f64], b: &[f64]) {
        debug_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            self.record(*x, *y);
        }
    }

    pub fn merge(&mut self, other: Residual) {
        self.absolute = self.absolute.max(other.absolute);
        self.relative = self.relative.max(other.relative);
    }
}
