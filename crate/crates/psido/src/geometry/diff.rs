use nalgebra::DMatrix;
use num_complex::Complex64;

use super::multi_index::MultiIndex;

/// Per-axis central stencils on the offsets -3..=3, all 4th-order accurate.
/// Row k holds the coefficients of the k-th derivative; the divisor is h^k
/// times the listed denominator.
pub(crate) const STENCILS: [([f64; 7], f64); 5] = [
    // k = 0: point evaluation
    ([0., 0., 0., 1., 0., 0., 0.], 1.),
    // k = 1: (f(-2) - 8 f(-1) + 8 f(1) - f(2)) / 12
    ([0., 1., -8., 0., 8., -1., 0.], 12.),
    // k = 2: (-f(-2) + 16 f(-1) - 30 f(0) + 16 f(1) - f(2)) / 12
    ([0., -1., 16., -30., 16., -1., 0.], 12.),
    // k = 3: (f(-3) - 8 f(-2) + 13 f(-1) - 13 f(1) + 8 f(2) - f(3)) / 8
    ([1., -8., 13., 0., -13., 8., -1.], 8.),
    // k = 4: (-f(-3) + 12 f(-2) - 39 f(-1) + 56 f(0) - 39 f(1) + 12 f(2) - f(3)) / 6
    ([-1., 12., -39., 56., -39., 12., -1.], 6.),
];

/// Stencil row for one derivative order, for reuse by the lattice layer.
pub(crate) fn stencil_row(k: usize) -> ([f64; 7], f64) {
    STENCILS[k]
}

/// Step size balancing truncation against roundoff for a derivative of the
/// given total order taken with 4th-order stencils.
pub fn step_for_order(order: u32) -> f64 {
    match order {
        0..=2 => 1e-3,
        3 => 2e-3,
        _ => 5e-3,
    }
}

/// Mixed partial `d^a f(x)` of a scalar callable by tensored central stencils,
/// one step `h` for every axis.
pub fn mixed_partial<F>(f: F, x: &[f64], alpha: &MultiIndex, h: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(x.len(), alpha.dim());
    assert!(alpha.order() <= 4 * alpha.dim() as u32);
    let dim = x.len();
    let mut acc = 0.0;
    let mut offsets = vec![0i32; dim];
    tensor_accumulate(&f, x, alpha, h, 0, &mut offsets, 1.0, &mut acc);
    let mut denom = 1.0;
    for &k in &alpha.0 {
        let (_, d) = STENCILS[k as usize];
        denom *= d * h.powi(k as i32);
    }
    acc / denom
}

fn tensor_accumulate<F>(
    f: &F,
    x: &[f64],
    alpha: &MultiIndex,
    h: f64,
    axis: usize,
    offsets: &mut Vec<i32>,
    weight: f64,
    acc: &mut f64,
) where
    F: Fn(&[f64]) -> f64,
{
    if axis == x.len() {
        let mut p = x.to_vec();
        for i in 0..x.len() {
            p[i] += offsets[i] as f64 * h;
        }
        *acc += weight * f(&p);
        return;
    }
    let k = alpha.0[axis] as usize;
    let (coeffs, _) = STENCILS[k];
    for (j, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        offsets[axis] = j as i32 - 3;
        tensor_accumulate(f, x, alpha, h, axis + 1, offsets, weight * c, acc);
    }
    offsets[axis] = 0;
}

/// Vector-output sibling of [`tensor_accumulate`] with a shared sample cache:
/// offset tuples reused across monomials are evaluated once.
fn contract_monomial<F>(
    f: &F,
    center: &[f64],
    alpha: &MultiIndex,
    h: f64,
    axis: usize,
    offsets: &mut Vec<i32>,
    weight: f64,
    cache: &mut std::collections::HashMap<Vec<i32>, Vec<f64>>,
    acc: &mut [f64],
) where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if axis == center.len() {
        let vals = cache.entry(offsets.clone()).or_insert_with(|| {
            let mut p = center.to_vec();
            for i in 0..center.len() {
                p[i] += offsets[i] as f64 * h;
            }
            f(&p)
        });
        for (a, v) in acc.iter_mut().zip(vals.iter()) {
            *a += weight * v;
        }
        return;
    }
    let k = alpha.0[axis] as usize;
    let (coeffs, _) = STENCILS[k];
    for (j, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        offsets[axis] = j as i32 - 3;
        contract_monomial(f, center, alpha, h, axis + 1, offsets, weight * c, cache, acc);
    }
    offsets[axis] = 0;
}

/// Jacobian of `f` at `x`: 4th-order central differences per column plus one
/// Richardson extrapolation level. Default step 1e-4.
pub fn numeric_jacobian<F>(f: F, x: &[f64], h: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let m = f(x).len();
    let col = |h: f64, j: usize| -> Vec<f64> {
        let ev = |s: f64| {
            let mut p = x.to_vec();
            p[j] += s;
            f(&p)
        };
        let (f1, f2, fm1, fm2) = (ev(h), ev(2.0 * h), ev(-h), ev(-2.0 * h));
        (0..m)
            .map(|i| (fm2[i] - 8.0 * fm1[i] + 8.0 * f1[i] - f2[i]) / (12.0 * h))
            .collect()
    };
    let mut out = DMatrix::zeros(m, n);
    for j in 0..n {
        let d1 = col(h, j);
        let d2 = col(0.5 * h, j);
        for i in 0..m {
            // both are 4th order; one Richardson level in h^4
            out[(i, j)] = (16.0 * d2[i] - d1[i]) / 15.0;
        }
    }
    out
}

pub fn jacobian_det<F>(f: F, x: &[f64], h: f64) -> f64
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    numeric_jacobian(f, x, h).determinant()
}

/// Truncated Taylor algebra in `dim` variables up to total degree `cap`.
/// Monomials are graded-lex ordered; coefficients are complex.
#[derive(Debug, Clone)]
pub struct JetSpace {
    pub dim: usize,
    pub cap: u32,
    monos: Vec<MultiIndex>,
    /// mixed-radix exponent tuple -> slot ((cap+1)-ary digits)
    lookup: Vec<Option<usize>>,
}

/// Coefficients of a truncated Taylor expansion in some [`JetSpace`];
/// slot i is the coefficient of that space's i-th monomial.
#[derive(Debug, Clone)]
pub struct Jet(pub Vec<Complex64>);

impl JetSpace {
    pub fn new(dim: usize, cap: u32) -> Self {
        let monos = MultiIndex::up_to_order(dim, cap);
        let radix = (cap + 1) as usize;
        let mut lookup = vec![None; radix.pow(dim as u32)];
        for (i, m) in monos.iter().enumerate() {
            lookup[Self::key(&m.0, radix)] = Some(i);
        }
        JetSpace {
            dim,
            cap,
            monos,
            lookup,
        }
    }

    fn key(exps: &[u32], radix: usize) -> usize {
        exps.iter().fold(0usize, |k, &e| k * radix + e as usize)
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.monos
    }

    pub fn slot(&self, m: &MultiIndex) -> Option<usize> {
        if m.order() > self.cap {
            return None;
        }
        self.lookup[Self::key(&m.0, (self.cap + 1) as usize)]
    }

    pub fn zero(&self) -> Jet {
        Jet(vec![Complex64::new(0.0, 0.0); self.len()])
    }

    pub fn constant(&self, c: Complex64) -> Jet {
        let mut j = self.zero();
        j.0[0] = c;
        j
    }

    /// The coordinate jet `w_axis`.
    pub fn coordinate(&self, axis: usize) -> Jet {
        let mut j = self.zero();
        let slot = self.slot(&MultiIndex::unit(self.dim, axis)).unwrap();
        j.0[slot] = Complex64::new(1.0, 0.0);
        j
    }

    pub fn add(&self, a: &Jet, b: &Jet) -> Jet {
        Jet(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect())
    }

    pub fn sub(&self, a: &Jet, b: &Jet) -> Jet {
        Jet(a.0.iter().zip(&b.0).map(|(x, y)| x - y).collect())
    }

    pub fn scale(&self, a: &Jet, c: Complex64) -> Jet {
        Jet(a.0.iter().map(|x| x * c).collect())
    }

    pub fn mul(&self, a: &Jet, b: &Jet) -> Jet {
        let mut out = self.zero();
        for (i, ma) in self.monos.iter().enumerate() {
            let ca = a.0[i];
            if ca.norm_sqr() == 0.0 {
                continue;
            }
            for (j, mb) in self.monos.iter().enumerate() {
                let cb = b.0[j];
                if cb.norm_sqr() == 0.0 {
                    continue;
                }
                if ma.order() + mb.order() > self.cap {
                    continue;
                }
                if let Some(slot) = self.slot(&ma.add(mb)) {
                    out.0[slot] += ca * cb;
                }
            }
        }
        out
    }

    /// `exp(a)` for a jet with zero constant term.
    pub fn exp(&self, a: &Jet) -> Jet {
        assert!(a.0[0].norm() < 1e-12, "exp needs zero constant term");
        let mut out = self.constant(Complex64::new(1.0, 0.0));
        let mut pw = self.constant(Complex64::new(1.0, 0.0));
        let mut k_fact = 1.0;
        for k in 1..=self.cap {
            pw = self.mul(&pw, a);
            k_fact *= k as f64;
            out = self.add(&out, &self.scale(&pw, Complex64::new(1.0 / k_fact, 0.0)));
        }
        out
    }

    /// Substitute jets (each with zero constant term) into an outer Taylor
    /// expansion given as (monomial over the outer variables, coefficient).
    pub fn compose(&self, outer: &[(MultiIndex, Complex64)], args: &[Jet]) -> Jet {
        for a in args {
            assert!(a.0[0].norm() < 1e-9, "compose needs centered arguments");
        }
        // cache powers of each argument
        let mut powers: Vec<Vec<Jet>> = Vec::with_capacity(args.len());
        for a in args {
            let mut ps = vec![self.constant(Complex64::new(1.0, 0.0))];
            for k in 1..=self.cap {
                let next = self.mul(&ps[(k - 1) as usize], a);
                ps.push(next);
            }
            powers.push(ps);
        }
        let mut out = self.zero();
        for (m, c) in outer {
            if c.norm_sqr() == 0.0 || m.order() > self.cap {
                continue;
            }
            let mut term = self.constant(*c);
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    term = self.mul(&term, &powers[i][e as usize]);
                }
            }
            out = self.add(&out, &term);
        }
        out
    }

    /// `1/a` for a jet with nonzero constant term, via the geometric series
    /// in `a/a0 - 1`.
    pub fn recip(&self, a: &Jet) -> Jet {
        let a0 = a.0[0];
        assert!(a0.norm() > 1e-300, "recip needs nonzero constant term");
        let inv0 = Complex64::new(1.0, 0.0) / a0;
        let mut u = self.scale(a, inv0);
        u.0[0] = Complex64::new(0.0, 0.0); // u = a/a0 - 1
        let mut out = self.constant(Complex64::new(1.0, 0.0));
        let mut pw = self.constant(Complex64::new(1.0, 0.0));
        for k in 1..=self.cap {
            pw = self.mul(&pw, &u);
            let sgn = if k % 2 == 0 { 1.0 } else { -1.0 };
            out = self.add(&out, &self.scale(&pw, Complex64::new(sgn, 0.0)));
        }
        self.scale(&out, inv0)
    }

    /// Keep only the coefficients whose monomial satisfies `keep`; used to
    /// zero slots known to vanish identically before exp/recip see the
    /// finite-difference noise in them.
    pub fn filter(&self, a: &Jet, keep: impl Fn(&MultiIndex) -> bool) -> Jet {
        let mut out = a.clone();
        for (i, m) in self.monos.iter().enumerate() {
            if !keep(m) {
                out.0[i] = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    /// Jet of the partial derivative along `axis` (degree drops by one).
    pub fn derivative(&self, a: &Jet, axis: usize) -> Jet {
        let mut out = self.zero();
        for (i, m) in self.monos.iter().enumerate() {
            if m.0[axis] == 0 {
                continue;
            }
            let mut e = m.clone();
            e.0[axis] -= 1;
            let slot = self.slot(&e).unwrap();
            out.0[slot] += a.0[i] * m.0[axis] as f64;
        }
        out
    }

    /// Determinant of a k x k matrix of jets (k <= 4), by Laplace expansion.
    pub fn det(&self, m: &[Vec<Jet>]) -> Jet {
        let k = m.len();
        assert!(k >= 1 && k <= 4 && m.iter().all(|r| r.len() == k));
        if k == 1 {
            return m[0][0].clone();
        }
        let mut out = self.zero();
        for j in 0..k {
            let minor: Vec<Vec<Jet>> = (1..k)
                .map(|r| {
                    (0..k)
                        .filter(|&c| c != j)
                        .map(|c| m[r][c].clone())
                        .collect()
                })
                .collect();
            let cof = self.mul(&m[0][j], &self.det(&minor));
            let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
            out = self.add(&out, &self.scale(&cof, Complex64::new(sgn, 0.0)));
        }
        out
    }

    /// Taylor coefficient of `w^gamma`, i.e. `d^gamma f(0) / gamma!`.
    pub fn coeff(&self, a: &Jet, gamma: &MultiIndex) -> Complex64 {
        match self.slot(gamma) {
            Some(i) => a.0[i],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Raw derivative `d^gamma f(0) = gamma! * coeff`.
    pub fn raw_derivative(&self, a: &Jet, gamma: &MultiIndex) -> Complex64 {
        self.coeff(a, gamma) * gamma.factorial() as f64
    }

    /// Taylor jets of a smooth map at `center` by finite differences.
    /// Only the stencil offsets the requested monomials touch are evaluated
    /// (evaluations may be expensive: chart chains, transport ODEs).
    /// Returns one jet per output component.
    pub fn jets_of_map<F>(&self, f: F, center: &[f64], out_dim: usize, h: f64) -> Vec<Jet>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        assert_eq!(center.len(), self.dim);
        let mut cache: std::collections::HashMap<Vec<i32>, Vec<f64>> =
            std::collections::HashMap::new();
        let mut out = vec![self.zero(); out_dim];
        let mut offsets = vec![0i32; self.dim];
        for (slot, m) in self.monos.iter().enumerate() {
            let mut denom = 1.0;
            for &k in &m.0 {
                denom *= STENCILS[k as usize].1 * h.powi(k as i32);
            }
            let gamma_fact = m.factorial() as f64;
            let mut acc = vec![0.0; out_dim];
            contract_monomial(
                &f, center, m, h, 0, &mut offsets, 1.0, &mut cache, &mut acc,
            );
            for comp in 0..out_dim {
                out[comp].0[slot] = Complex64::new(acc[comp] / denom / gamma_fact, 0.0);
            }
        }
        out
    }
}

/// 4th-order partial derivative of a scalar callable along one axis.
pub fn partial_derivative<F>(f: F, x: &[f64], axis: usize, h: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    mixed_partial(f, x, &MultiIndex::unit(x.len(), axis), h)
}
