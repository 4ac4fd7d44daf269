//! Derivative-free maximization of unimodal functions of one variable.

/// Result of a golden-section search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
    /// The bracket shrank below tolerance before the iteration cap.
    pub converged: bool,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `rel_tol * max(|lo|, |hi|)` or
/// after `max_iter` iterations. `f` must be unimodal on the interval.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64, max_iter: usize) -> Maximum
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    let width_ok = |a: f64, b: f64| b - a <= rel_tol * a.abs().max(b.abs());
    while iterations < max_iter && !width_ok(a, b) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let converged = width_ok(a, b);
    // Report the best point seen in the final bracket, including its ends.
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [a, b] {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    Maximum {
        x: best.0,
        value: best.1,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak() {
        let m = golden_section_max(|x| -(x - 2.0).powi(2) + 1.0, 0.0, 5.0, 1e-12, 200);
        assert!(m.converged);
        assert!((m.x - 2.0).abs() < 1e-6);
        assert!((m.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_maximum() {
        let m = golden_section_max(|x| -x, 0.0, 1.0, 1e-12, 200);
        assert_eq!(m.x, 0.0);
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn iteration_cap_is_honored() {
        let m = golden_section_max(|x| -(x - 0.3).powi(2), 0.0, 1.0, 0.0, 10);
        assert_eq!(m.iterations, 10);
        assert!(!m.converged);
    }
}
