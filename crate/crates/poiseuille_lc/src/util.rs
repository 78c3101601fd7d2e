//! Small quadrature and interpolation helpers shared across modules.

/// Composite Simpson rule over uniformly spaced samples.
///
/// Requires an odd number of samples (even number of intervals); falls back to
/// a trapezoid for the final interval when the count is even.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(n >= 2, "simpson needs at least two samples");
    let (core, tail) = if n % 2 == 1 {
        (n, 0.0)
    } else {
        (n - 1, 0.5 * h * (values[n - 2] + values[n - 1]))
    };
    let mut sum = values[0] + values[core - 1];
    for (i, v) in values.iter().enumerate().take(core - 1).skip(1) {
        sum += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    sum * h / 3.0 + tail
}

/// Composite Simpson of `f` over `[a, b]` with `n` intervals (`n` made even).
pub fn simpson_fn(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n.max(2) } else { n + 1 };
    let h = (b - a) / n as f64;
    let values: Vec<f64> = (0..=n).map(|i| f(a + i as f64 * h)).collect();
    simpson(&values, h)
}

/// Trapezoid rule over uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let interior: f64 = values[1..n - 1].iter().sum();
    h * (0.5 * (values[0] + values[n - 1]) + interior)
}

/// Cumulative trapezoid: output[i] = integral of the samples up to node i.
pub fn cumtrapz(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for pair in values.windows(2) {
        acc += 0.5 * h * (pair[0] + pair[1]);
        out.push(acc);
    }
    out
}

/// Linear interpolation into a table of (ascending xs, ys); clamps outside.
pub fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = match xs.partition_point(|&v| v <= x) {
        0 => 1,
        idx => idx.min(n - 1),
    };
    let (x0, x1) = (xs[k - 1], xs[k]);
    let (y0, y1) = (ys[k - 1], ys[k]);
    let frac = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
    y0 + frac * (y1 - y0)
}

/// Inverse lookup in a strictly monotone (increasing) table: find x with
/// table(x) = y by linear interpolation.
pub fn interp_inverse(xs: &[f64], ys: &[f64], y: f64) -> f64 {
    interp_linear(ys, xs, y)
}

/// Centered second derivative sample helper for tests.
pub fn second_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// Sup-norm distance between two equally sized slices.
pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Sup norm of a slice.
pub fn sup_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let h = 0.1;
        let values: Vec<f64> = (0..=10).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson(&values, h) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn simpson_fn_sine() {
        let val = simpson_fn(|x| x.sin(), 0.0, PI, 200);
        assert!((val - 2.0).abs() < 1e-9);
    }

    #[test]
    fn interp_linear_roundtrip() {
        let xs: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((interp_linear(&xs, &ys, 3.25) - 7.5).abs() < 1e-14);
        assert!((interp_inverse(&xs, &ys, 7.5) - 3.25).abs() < 1e-14);
    }

    #[test]
    fn cumtrapz_linear() {
        let values = [0.0, 1.0, 2.0, 3.0];
        let out = cumtrapz(&values, 1.0);
        assert_eq!(out, vec![0.0, 0.5, 2.0, 4.5]);
    }
}

/// Replace entries flagged in `mask` by linear interpolation between the
/// nearest unflagged neighbours. A sample taken inside a cusp cell reads the
/// nearly singular slope at one point; weighting it with a full quadrature
/// cell would grossly overestimate the (finite) cell integral, so the cell
/// contributes its smooth-neighbour average instead.
pub fn interpolate_masked(values: &mut [f64], mask: &[bool]) {
    let nx = values.len();
    let mut i = 0;
    while i < nx {
        if !mask[i] {
            i += 1;
            continue;
        }
        let lo = (0..i).rev().find(|&k| !mask[k]);
        let hi = (i..nx).find(|&k| !mask[k]);
        let run_end = hi.unwrap_or(nx);
        for k in i..run_end {
            values[k] = match (lo, hi) {
                (Some(a), Some(b)) => {
                    let s = (k - a) as f64 / (b - a) as f64;
                    (1.0 - s) * values[a] + s * values[b]
                }
                (Some(a), None) => values[a],
                (None, Some(b)) => values[b],
                (None, None) => 0.0,
            };
        }
        i = run_end;
    }
}

/// Root-mean-square difference of two equally long slices.
pub fn rms_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let ss: f64 = a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum();
    (ss / a.len() as f64).sqrt()
}
