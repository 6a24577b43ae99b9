//! Adaptive Gauss–Kronrod (7/15) integration on finite intervals.

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_DEPTH: u32 = 60;
const MAX_SEGMENTS: usize = 200_000;

/// Kronrod estimate and error bound (|K15 - G7|) on `[a, b]`.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Intervals are bisected depth-first until each piece's Kronrod/Gauss gap is
/// within its share of the tolerance. The sum is accumulated in a fixed
/// order so results are reproducible.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Numeric(format!(
            "integration bounds must be finite, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate(f, b, a, tol).map(|v| -v);
    }
    let mut stack = vec![(a, b, tol, 0u32)];
    let mut total = 0.0;
    let mut segments = 0usize;
    while let Some((lo, hi, t, depth)) = stack.pop() {
        let (est, err) = gk15(&f, lo, hi);
        if !est.is_finite() {
            return Err(Error::Numeric(format!("integrand is not finite on [{lo}, {hi}]")));
        }
        segments += 1;
        if err <= t || hi - lo <= f64::EPSILON * lo.abs().max(hi.abs()) * 4.0 {
            total += est;
            continue;
        }
        if depth >= MAX_DEPTH || segments > MAX_SEGMENTS {
            return Err(Error::Numeric(format!(
                "quadrature did not converge on [{lo}, {hi}] (error estimate {err:e}, target {t:e})"
            )));
        }
        let mid = 0.5 * (lo + hi);
        stack.push((mid, hi, 0.5 * t, depth + 1));
        stack.push((lo, mid, 0.5 * t, depth + 1));
    }
    Ok(total)
}

/// Integrates over `[a, b]` split at the given interior breakpoints, so
/// that kinks and jumps of `f` fall on segment ends.
pub fn integrate_piecewise(f: impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<f64> {
    let mut points: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut edges = vec![a];
    edges.extend(points);
    edges.push(b);
    let share = tol / (edges.len() - 1) as f64;
    let mut total = 0.0;
    for w in edges.windows(2) {
        total += integrate(&f, w[0], w[1], share)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_transcendentals() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 8.0).abs() < 1e-12);
        let v = integrate(f64::exp, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-12);
        let v = integrate(|x| 1.0 / x, 1.0, 1e4, 1e-10).unwrap();
        assert!((v - 1e4f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn reversed_and_empty_intervals() {
        assert_eq!(integrate(|x| x, 1.0, 1.0, 1e-9).unwrap(), 0.0);
        let v = integrate(|x| x, 1.0, 0.0, 1e-12).unwrap();
        assert!((v + 0.5).abs() < 1e-12);
    }

    #[test]
    fn kinks_at_breakpoints() {
        let f = |x: f64| if x < 0.3 { 1.0 } else { 2.0 };
        let v = integrate_piecewise(f, 0.0, 1.0, &[0.3], 1e-12).unwrap();
        assert!((v - (0.3 + 1.4)).abs() < 1e-12);
    }

    #[test]
    fn non_finite_integrand_fails() {
        assert!(integrate(|x| 1.0 / x, 0.0, 1.0, 1e-8).is_err());
        assert!(integrate(|x| x, 0.0, f64::INFINITY, 1e-8).is_err());
    }
}
