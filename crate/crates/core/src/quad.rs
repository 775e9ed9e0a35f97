//! Thin wrappers over double-exponential quadrature.

const TOL: f64 = 1e-12;

/// `int_a^b f` for finite `a <= b`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    quadrature::double_exponential::integrate(f, a, b, TOL).integral
}

/// `int_a^inf f`, via `x = a + t / (1 - t)`.
pub fn integrate_to_infinity(f: impl Fn(f64) -> f64, a: f64) -> f64 {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let u = 1.0 - t;
        let v = f(a + t / u) / (u * u);
        if v.is_finite() { v } else { 0.0 }
    };
    quadrature::double_exponential::integrate(g, 0.0, 1.0, TOL).integral
}
