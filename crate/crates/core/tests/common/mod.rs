//! Dense oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, Matrix2};
use paraopt::numerics::{Complex64, ComplexMatrix, RealMatrix, RealVector};
use paraopt::{AffinePropagator, IeVariant, LinearControlProblem, ObjectiveData, ObjectiveKind};
use rand::Rng;

/// Matching Jacobian assembled block by block from the propagator blocks.
pub fn dense_jacobian(prop: &AffinePropagator, l_hat: usize) -> RealMatrix {
    let m = prop.dim();
    let n = l_hat * m;
    let mut a = RealMatrix::identity(2 * n, 2 * n);
    for l in 0..l_hat {
        a.view_mut((l * m, n + l * m), (m, m)).copy_from(prop.psi_p());
        if l > 0 {
            a.view_mut((l * m, (l - 1) * m), (m, m)).copy_from(&(-prop.phi_p()));
        }
        if l + 1 < l_hat {
            a.view_mut((n + l * m, l * m), (m, m)).copy_from(&(-prop.psi_q()));
            a.view_mut((n + l * m, n + (l + 1) * m), (m, m)).copy_from(&(-prop.phi_q()));
        }
    }
    let corner = match prop.objective() {
        ObjectiveKind::Tracking => -prop.psi_q(),
        ObjectiveKind::TerminalCost => -RealMatrix::identity(m, m),
    };
    a.view_mut((2 * n - m, n - m), (m, m)).copy_from(&corner);
    a
}

/// `C(α)`: `−1` on the subdiagonal, `−α` in the top-right corner.
pub fn dense_alpha_circulant(l_hat: usize, alpha: f64) -> RealMatrix {
    let mut c = RealMatrix::zeros(l_hat, l_hat);
    for l in 1..l_hat {
        c[(l, l - 1)] = -1.0;
    }
    c[(0, l_hat - 1)] -= alpha;
    c
}

fn kron(a: &RealMatrix, b: &RealMatrix) -> RealMatrix {
    a.kronecker(b)
}

/// `P(α) = [[I + C⊗Φ̃_P, I⊗Ψ̃_P], [−I⊗Ψ̃_Q, I + Cᵀ⊗Φ̃_Q]]` for real α.
pub fn dense_p_alpha(prop: &AffinePropagator, l_hat: usize, alpha: f64) -> RealMatrix {
    let m = prop.dim();
    let n = l_hat * m;
    let c = dense_alpha_circulant(l_hat, alpha);
    let il = RealMatrix::identity(l_hat, l_hat);
    let mut p = RealMatrix::identity(2 * n, 2 * n);
    let mut tl = p.view_mut((0, 0), (n, n));
    tl += kron(&c, prop.phi_p());
    p.view_mut((0, n), (n, n)).copy_from(&kron(&il, prop.psi_p()));
    p.view_mut((n, 0), (n, n)).copy_from(&(-kron(&il, prop.psi_q())));
    let mut br = p.view_mut((n, n), (n, n));
    br += kron(&c.transpose(), prop.phi_q());
    p
}

pub fn to_c(a: &RealMatrix) -> ComplexMatrix {
    a.map(|x| Complex64::new(x, 0.0))
}

/// Brute-force coefficients of one sub-interval: the `2J` implicit-Euler
/// equations are assembled and solved for unit boundary data.
/// Returns `(φ_P, ψ_P, φ_Q, ψ_Q)` with `P = φ_P y0 − ψ_P λ̂_B`,
/// `Q = ψ_Q y0 + φ_Q λ̂_B`.
pub fn scalar_ie_assembly(
    objective: ObjectiveKind,
    variant: IeVariant,
    sigma: f64,
    gamma: f64,
    tau: f64,
    j: usize,
) -> (f64, f64, f64, f64) {
    let zeta = 1.0 + sigma * tau;
    let (c_p, c_q) = match objective {
        ObjectiveKind::Tracking => (tau / gamma.sqrt(), tau / gamma.sqrt()),
        ObjectiveKind::TerminalCost => (tau / gamma, 0.0),
    };
    // Unknowns: y_1..y_J at 0..J, λ̂_0..λ̂_{J−1} at J..2J.
    let yi = |s: usize| s - 1;
    let li = |s: usize| j + s;
    let solve = |y0: f64, lam_b: f64| -> (f64, f64) {
        let mut a = DMatrix::<f64>::zeros(2 * j, 2 * j);
        let mut b = nalgebra::DVector::<f64>::zeros(2 * j);
        for s in 1..=j {
            let row = s - 1;
            // ζ y_s − y_{s−1} + c_P λ̂_k = 0, k = s (FOTD) or s − 1 (FDTO).
            a[(row, yi(s))] = zeta;
            if s > 1 {
                a[(row, yi(s - 1))] = -1.0;
            } else {
                b[row] += y0;
            }
            let k = match variant {
                IeVariant::Fotd => s,
                IeVariant::Fdto => s - 1,
            };
            if k == j {
                b[row] -= c_p * lam_b;
            } else {
                a[(row, li(k))] += c_p;
            }
            // ζ λ̂_{s−1} − λ̂_s − c_Q y_{s−1} = 0.
            let row = j + s - 1;
            a[(row, li(s - 1))] = zeta;
            if s == j {
                b[row] += lam_b;
            } else {
                a[(row, li(s))] = -1.0;
            }
            if s > 1 {
                a[(row, yi(s - 1))] -= c_q;
            } else {
                b[row] += c_q * y0;
            }
        }
        let x = a.lu().solve(&b).expect("sub-interval system is regular");
        (x[yi(j)], x[li(0)])
    };
    let (p1, q1) = solve(1.0, 0.0);
    let (p2, q2) = solve(0.0, 1.0);
    (p1, -p2, q2, q1)
}

/// Exact-propagator coefficients from the 2×2 matrix exponential of the
/// scalar optimality system over one sub-interval. Returns `(φ, ψ)`.
pub fn scalar_exact_expm(objective: ObjectiveKind, sigma: f64, gamma: f64, dt: f64) -> (f64, f64) {
    let m = match objective {
        ObjectiveKind::Tracking => {
            let g = 1.0 / gamma.sqrt();
            Matrix2::new(-sigma, -g, -g, sigma)
        }
        ObjectiveKind::TerminalCost => Matrix2::new(-sigma, -1.0 / gamma, 0.0, sigma),
    };
    let e = (m * dt).exp();
    // [y_l; λ̂_l] = E [y_{l−1}; λ̂_{l−1}], solved for λ̂_{l−1}; det E = 1 turns
    // a − bc/d into 1/d without the cancellation.
    let (b, d) = (e[(0, 1)], e[(1, 1)]);
    (1.0 / d, -b / d)
}

/// Symmetric positive definite `K` with eigenvalues in `[lo, hi]`.
pub fn random_spd<R: Rng>(rng: &mut R, m: usize, lo: f64, hi: f64) -> RealMatrix {
    let a = RealMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
    let q = a.qr().q();
    let d = RealMatrix::from_diagonal(&RealVector::from_fn(m, |_, _| rng.gen_range(lo..hi)));
    let k = &q * d * q.transpose();
    (&k + k.transpose()) * 0.5
}

/// Small problem with a random SPD `K` and constant data.
pub fn random_problem<R: Rng>(
    rng: &mut R,
    m: usize,
    objective: ObjectiveKind,
    gamma: f64,
    horizon: f64,
) -> LinearControlProblem {
    let k = random_spd(rng, m, 0.1, 5.0);
    let y0 = RealVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
    let target = RealVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
    let data = match objective {
        ObjectiveKind::Tracking => ObjectiveData::constant_tracking(target),
        ObjectiveKind::TerminalCost => ObjectiveData::TerminalCost { y_target: target },
    };
    LinearControlProblem::new(k, gamma, horizon, y0, data).unwrap()
}
