//! Small numerical helpers shared by the engines.

/// Neumaier (improved Kahan-Babuška) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Accumulator that is either plain or compensated, chosen at runtime.
#[derive(Debug, Clone, Copy)]
pub enum Accumulator {
    Plain(f64),
    Compensated(NeumaierSum),
}

impl Accumulator {
    pub fn new(compensated: bool) -> Self {
        if compensated {
            Accumulator::Compensated(NeumaierSum::new())
        } else {
            Accumulator::Plain(0.0)
        }
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        match self {
            Accumulator::Plain(s) => *s += value,
            Accumulator::Compensated(s) => s.add(value),
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Accumulator::Plain(s) => *s,
            Accumulator::Compensated(s) => s.value(),
        }
    }
}

/// Sum of a slice in a fixed left-to-right order, optionally compensated.
pub fn ordered_sum(values: &[f64], compensated: bool) -> f64 {
    let mut acc = Accumulator::new(compensated);
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// `ln(e^a + e^b + ...)` without overflow.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}

/// Relative difference `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_small_terms() {
        let mut s = NeumaierSum::new();
        s.add(1.0);
        s.add(1e100);
        s.add(1.0);
        s.add(-1e100);
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn log_sum_exp_large_arguments() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn rel_diff_zero() {
        assert_eq!(rel_diff(0.0, 0.0), 0.0);
        assert!((rel_diff(1.0, 2.0) - 0.5).abs() < 1e-15);
    }
}
