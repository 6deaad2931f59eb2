//! The hyperbolic plane as R^2 with metric ds^2 = dx^2 + cosh^2(x) dy^2.
//! Closed-form exponential/logarithm maps, the geodesic ODE, and parallel
//! transport along geodesics.

use nalgebra::DMatrix;

/// sinh(r)/r, stable through r = 0.
fn sinhc(r: f64) -> f64 {
    if r.abs() < 1e-4 {
        let r2 = r * r;
        1.0 + r2 / 6.0 + r2 * r2 / 120.0
    } else {
        r.sinh() / r
    }
}

/// Riemannian norm of a tangent vector at p.
pub fn norm_at(p: &[f64], v: &[f64]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] * p[0].cosh().powi(2)).sqrt()
}

/// Metric matrix at p.
pub fn metric(p: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, p[0].cosh().powi(2)])
}

/// Geodesic exponential, closed form.
pub fn exp(p: &[f64], v: &[f64]) -> Vec<f64> {
    let (x, y) = (p[0], p[1]);
    let r = norm_at(p, v);
    if r < 1e-300 {
        return vec![x, y];
    }
    // v = r * (cos_x, sin_x) in the metric-polar decomposition
    let (chr, shc) = (r.cosh(), sinhc(r));
    let g1_arg = chr * x.sinh() + shc * x.cosh() * v[0];
    let g1 = g1_arg.asinh();
    let g2_num =
        chr * x.cosh() * y.sinh() + shc * (x.sinh() * y.sinh() * v[0] + x.cosh() * y.cosh() * v[1]);
    let g2 = (g2_num / g1.cosh()).asinh();
    vec![g1, g2]
}

/// Geodesic logarithm, closed form. Inverse of [`exp`] in the second slot.
pub fn log(p: &[f64], q: &[f64]) -> Vec<f64> {
    let (x, y) = (p[0], p[1]);
    let (xp, yp) = (q[0], q[1]);
    let dy = yp - y;
    let f = xp.cosh() * dy.cosh() * x.cosh() - xp.sinh() * x.sinh();
    let u = f - 1.0;
    if u < 1e-12 {
        return vec![0.0, 0.0];
    }
    // factor = argch(f) / sqrt(f^2 - 1), series for small u
    let factor = if u < 1e-6 {
        1.0 - u / 3.0 + 2.0 * u * u / 15.0
    } else {
        let d = (f + (f * f - 1.0).sqrt()).ln();
        d / (f * f - 1.0).sqrt()
    };
    let g = xp.cosh() * dy.cosh() * x.sinh() - xp.sinh() * x.cosh();
    let v2 = xp.cosh() / x.cosh() * dy.sinh();
    vec![-g * factor, v2 * factor]
}

/// Geodesic distance.
pub fn distance(p: &[f64], q: &[f64]) -> f64 {
    let dy = q[1] - p[1];
    let f = q[0].cosh() * dy.cosh() * p[0].cosh() - q[0].sinh() * p[0].sinh();
    f.max(1.0).acosh()
}

fn geodesic_rhs(state: &[f64; 4]) -> [f64; 4] {
    let [x, _y, vx, vy] = *state;
    [
        vx,
        vy,
        x.cosh() * x.sinh() * vy * vy,
        -2.0 * x.tanh() * vx * vy,
    ]
}

/// RK4 integration of the geodesic equations from (p, v) to parameter time t.
/// Returns (position, velocity). Independent of the closed forms; used as an
/// oracle for them.
pub fn geodesic_ode(p: &[f64], v: &[f64], t: f64, dt: f64) -> (Vec<f64>, Vec<f64>) {
    let mut s = [p[0], p[1], v[0], v[1]];
    let n = (t.abs() / dt).ceil().max(1.0) as usize;
    let h = t / n as f64;
    for _ in 0..n {
        s = rk4_step(&s, h, geodesic_rhs);
    }
    (vec![s[0], s[1]], vec![s[2], s[3]])
}

fn rk4_step<const N: usize>(s: &[f64; N], h: f64, rhs: impl Fn(&[f64; N]) -> [f64; N]) -> [f64; N] {
    let k1 = rhs(s);
    let mut s2 = *s;
    for i in 0..N {
        s2[i] = s[i] + 0.5 * h * k1[i];
    }
    let k2 = rhs(&s2);
    for i in 0..N {
        s2[i] = s[i] + 0.5 * h * k2[i];
    }
    let k3 = rhs(&s2);
    for i in 0..N {
        s2[i] = s[i] + h * k3[i];
    }
    let k4 = rhs(&s2);
    let mut out = *s;
    for i in 0..N {
        out[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Parallel transport along the geodesic t -> exp_p(t w), t in [0, 1],
/// as a 2x2 matrix from T_p to T_{exp_p(w)} in model coordinates.
/// Basis vectors are carried by RK4 together with the geodesic itself.
pub fn transport(p: &[f64], w: &[f64], dt: f64) -> DMatrix<f64> {
    if norm_at(p, w) < 1e-14 {
        return DMatrix::identity(2, 2);
    }
    // state: x, y, vx, vy, b1x, b1y, b2x, b2y
    let mut s = [p[0], p[1], w[0], w[1], 1.0, 0.0, 0.0, 1.0];
    let rhs = |st: &[f64; 8]| -> [f64; 8] {
        let [x, _y, vx, vy, b1x, b1y, b2x, b2y] = *st;
        let (ch, sh, th) = (x.cosh(), x.sinh(), x.tanh());
        // beta' = -Gamma(gamma') beta with Gamma^x_yy = -ch*sh, Gamma^y_xy = th
        let tb = |bx: f64, by: f64| (ch * sh * vy * by, -th * (vx * by + vy * bx));
        let (d1x, d1y) = tb(b1x, b1y);
        let (d2x, d2y) = tb(b2x, b2y);
        [
            vx,
            vy,
            ch * sh * vy * vy,
            -2.0 * th * vx * vy,
            d1x,
            d1y,
            d2x,
            d2y,
        ]
    };
    let n = (1.0 / dt).ceil().max(1.0) as usize;
    let h = 1.0 / n as f64;
    for _ in 0..n {
        s = rk4_step(&s, h, rhs);
    }
    DMatrix::from_row_slice(2, 2, &[s[4], s[6], s[5], s[7]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn axis_geodesics_are_straight() {
        // from the origin, exp is the identity on both axes
        let e = exp(&[0.0, 0.0], &[1.3, 0.0]);
        assert_relative_eq!(e[0], 1.3, epsilon = 1e-12);
        assert_relative_eq!(e[1], 0.0, epsilon = 1e-12);
        let e = exp(&[0.0, 0.0], &[0.0, -0.7]);
        assert_relative_eq!(e[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(e[1], -0.7, epsilon = 1e-12);
    }

    #[test]
    fn log_inverts_exp() {
        let p = [0.4, -1.1];
        let v = [2.0, 0.9];
        let q = exp(&p, &v);
        let back = log(&p, &q);
        assert_relative_eq!(back[0], v[0], epsilon = 1e-10);
        assert_relative_eq!(back[1], v[1], epsilon = 1e-10);
    }

    #[test]
    fn exp_matches_ode() {
        let p = [-0.3, 0.8];
        let v = [0.7, -1.2];
        let r = norm_at(&p, &v);
        // closed form evaluates gamma at arc length r with unit initial speed;
        // the ODE with initial velocity v reaches the same point at t = 1
        let (pos, _) = geodesic_ode(&p, &v, 1.0, 1e-3);
        let e = exp(&p, &v);
        assert!(r > 0.0);
        assert_relative_eq!(e[0], pos[0], epsilon = 1e-8);
        assert_relative_eq!(e[1], pos[1], epsilon = 1e-8);
    }

    #[test]
    fn distance_agrees_with_log_norm() {
        let p = [0.2, 0.5];
        let q = [-1.0, 2.0];
        let v = log(&p, &q);
        assert_relative_eq!(distance(&p, &q), norm_at(&p, &v), epsilon = 1e-10);
    }

    #[test]
    fn transport_is_isometric() {
        let p = [0.3, -0.2];
        let w = [1.1, 0.6];
        let q = exp(&p, &w);
        let m = transport(&p, &w, 1e-3);
        for v in [[1.0, 0.0], [0.3, -1.4]] {
            let tv = [
                m[(0, 0)] * v[0] + m[(0, 1)] * v[1],
                m[(1, 0)] * v[0] + m[(1, 1)] * v[1],
            ];
            assert_relative_eq!(norm_at(&q, &tv), norm_at(&p, &v), epsilon = 1e-8);
        }
    }

    #[test]
    fn transport_of_velocity_is_velocity() {
        // the geodesic's own velocity is parallel: P(v) = gamma'(1)
        let p = [0.5, 0.1];
        let w = [-0.8, 0.9];
        let (_, vel) = geodesic_ode(&p, &w, 1.0, 1e-3);
        let m = transport(&p, &w, 1e-3);
        let tv = [
            m[(0, 0)] * w[0] + m[(0, 1)] * w[1],
            m[(1, 0)] * w[0] + m[(1, 1)] * w[1],
        ];
        assert_relative_eq!(tv[0], vel[0], epsilon = 1e-7);
        assert_relative_eq!(tv[1], vel[1], epsilon = 1e-7);
    }
}
