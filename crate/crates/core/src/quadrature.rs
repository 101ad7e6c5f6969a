//! Adaptive Gauss-Kronrod quadrature and Cauchy principal values.

use num_complex::Complex64 as C64;

// G7-K15 nodes and weights (QUADPACK qk15)
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
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_DEPTH: u32 = 60;

fn kronrod15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).norm())
}

fn adapt<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, tol: f64, depth: u32, ok: &mut bool) -> C64 {
    let (value, err) = kronrod15(f, a, b);
    if err <= tol.max(1e-15 * value.norm()) {
        return value;
    }
    if depth >= MAX_DEPTH || b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
        *ok = false;
        return value;
    }
    let mid = 0.5 * (a + b);
    adapt(f, a, mid, 0.5 * tol, depth + 1, ok) + adapt(f, mid, b, 0.5 * tol, depth + 1, ok)
}

/// Adaptive integral of `f` over `[a, b]`, split at the given breakpoints.
///
/// Returns `None` when some subinterval fails to reach `tol`.
pub fn integrate<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, breakpoints: &[f64], tol: f64) -> Option<C64> {
    if b <= a {
        return Some(C64::new(0.0, 0.0));
    }
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let pieces = (cuts.len() - 1) as f64;
    let mut ok = true;
    let total = cuts
        .windows(2)
        .map(|w| adapt(&f, w[0], w[1], tol / pieces, 0, &mut ok))
        .sum();
    ok.then_some(total)
}

/// Outcome of a principal-value evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PvOutcome {
    Converged(C64),
    /// Successive window halvings still differed by `change`.
    NotConverged { value: C64, change: f64 },
}

/// `P ∫_a^b f(x) / (ω - x) dx`.
///
/// A window `[ω-ε, ω+ε]` is excluded; inside it `f` is replaced by its secant
/// through `ω ± ε`, whose principal value is `-(f(ω+ε) - f(ω-ε))`. The window
/// is halved until the total changes by less than `tol`.
pub fn principal_value<F: Fn(f64) -> C64>(
    f: F,
    a: f64,
    b: f64,
    omega: f64,
    breakpoints: &[f64],
    tol: f64,
) -> PvOutcome {
    let quad_tol = (tol * 1e-3).max(1e-14);
    let kernel = |x: f64| f(x) / (omega - x);
    if !(omega > a && omega < b) {
        if (omega == a || omega == b) && f(omega).norm() > 0.0 {
            return PvOutcome::NotConverged { value: C64::new(f64::NAN, f64::NAN), change: f64::INFINITY };
        }
        return match integrate(kernel, a, b, breakpoints, quad_tol) {
            Some(v) => PvOutcome::Converged(v),
            None => PvOutcome::NotConverged { value: C64::new(f64::NAN, f64::NAN), change: f64::INFINITY },
        };
    }

    let mut eps = 0.5 * (omega - a).min(b - omega);
    let (left, right) = match (
        integrate(kernel, a, omega - eps, breakpoints, quad_tol),
        integrate(kernel, omega + eps, b, breakpoints, quad_tol),
    ) {
        (Some(l), Some(r)) => (l, r),
        _ => return PvOutcome::NotConverged { value: C64::new(f64::NAN, f64::NAN), change: f64::INFINITY },
    };
    let mut outside = left + right;
    let mut total = outside - (f(omega + eps) - f(omega - eps));
    let mut change = f64::INFINITY;
    for _ in 0..60 {
        let next = 0.5 * eps;
        let strips = integrate(kernel, omega - eps, omega - next, breakpoints, quad_tol)
            .zip(integrate(kernel, omega + next, omega + eps, breakpoints, quad_tol));
        let Some((l, r)) = strips else {
            return PvOutcome::NotConverged { value: total, change };
        };
        outside += l + r;
        eps = next;
        let updated = outside - (f(omega + eps) - f(omega - eps));
        change = (updated - total).norm();
        total = updated;
        if change < tol {
            return PvOutcome::Converged(total);
        }
    }
    PvOutcome::NotConverged { value: total, change }
}
