//! Property checks shared by the proptest suite and the acceptance report.
//! Each check returns `Err(description)` on the first violated instance.

#![allow(dead_code)]

use atem_core::atem::{self, Condition, Rescaling, RootSettings};
use atem_core::expr::Bindings;
use atem_core::hamiltonian::{ordering_potential, Ordering, OrderingPreset, OrderingSpec, PdmProblem};
use atem_core::scalar::Precision;
use atem_core::series::TruncatedSeries;
use atem_core::wavefunction::{self, ReconstructSettings};

pub fn quadratic_mass(gamma: f64, ord: impl Into<Ordering>) -> PdmProblem {
    PdmProblem::from_text("1+gamma*x^2", "0.5*x^2", &[("gamma", gamma)], ord).unwrap()
}

fn close(a: f64, b: f64, tol: f64, scale: f64) -> bool {
    (a - b).abs() <= tol * scale.max(1.0)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn series(c: &[f64]) -> TruncatedSeries {
    TruncatedSeries::from_f64(c).unwrap()
}

fn compare(label: &str, got: &TruncatedSeries, want: &TruncatedSeries, tol: f64) -> Result<(), String> {
    let order = got.valid_order().min(want.valid_order());
    let scale = max_abs(got.coeffs()).max(max_abs(want.coeffs()));
    for k in 0..=order {
        if !close(got.coeff(k), want.coeff(k), tol, scale) {
            return Err(format!(
                "{label}: coefficient {k}: {} vs {}",
                got.coeff(k),
                want.coeff(k)
            ));
        }
    }
    Ok(())
}

pub fn ring_laws(a: &[f64], b: &[f64], c: &[f64]) -> Result<(), String> {
    let (a, b, c) = (series(a), series(b), series(c));
    compare("a+b = b+a", &a.add(&b), &b.add(&a), 1e-12)?;
    compare("ab = ba", &a.mul(&b), &b.mul(&a), 1e-12)?;
    compare("(ab)c = a(bc)", &a.mul(&b).mul(&c), &a.mul(&b.mul(&c)), 1e-12)?;
    compare("a(b+c) = ab+ac", &a.mul(&b.add(&c)), &a.mul(&b).add(&a.mul(&c)), 1e-12)?;
    compare("(a+b)+c = a+(b+c)", &a.add(&b).add(&c), &a.add(&b.add(&c)), 1e-12)?;
    let one = TruncatedSeries::constant(1.0, a.capacity());
    compare("1a = a", &one.mul(&a), &a, 1e-12)?;
    compare("a-a = 0", &a.sub(&a), &TruncatedSeries::zero(a.capacity()), 1e-12)
}

pub fn leibniz(a: &[f64], b: &[f64]) -> Result<(), String> {
    let (a, b) = (series(a), series(b));
    let lhs = a.mul(&b).derivative().map_err(|e| e.to_string())?;
    let rhs = a.derivative().unwrap().mul(&b).add(&a.mul(&b.derivative().unwrap()));
    compare("(ab)' = a'b + ab'", &lhs, &rhs, 1e-12)
}

pub fn reciprocal(a: &[f64]) -> Result<(), String> {
    let a = series(a);
    let inv = a.reciprocal().map_err(|e| e.to_string())?;
    let product = a.mul(&inv);
    // Each product coefficient is a sum of terms as large as |a| |1/a|.
    let scale = max_abs(a.coeffs()) * max_abs(inv.coeffs());
    for k in 0..=product.valid_order() {
        let want = if k == 0 { 1.0 } else { 0.0 };
        if !close(product.coeff(k), want, 1e-12, scale) {
            return Err(format!("a * (1/a) = 1: coefficient {k} is {}", product.coeff(k)));
        }
    }
    Ok(())
}

/// Local power-series helpers, deliberately separate from the library kernel.
mod naive {
    pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = a.len().min(b.len());
        (0..n).map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum()).collect()
    }

    pub fn deriv(a: &[f64]) -> Vec<f64> {
        (1..a.len()).map(|k| k as f64 * a[k]).collect()
    }

    /// `a^alpha` by the J. C. P. Miller recurrence.
    pub fn pow(a: &[f64], alpha: f64) -> Vec<f64> {
        let mut b = vec![0.0; a.len()];
        b[0] = a[0].powf(alpha);
        for k in 1..a.len() {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += (alpha * j as f64 - (k - j) as f64) * a[j] * b[k - j];
            }
            b[k] = acc / (k as f64 * a[0]);
        }
        b
    }

    pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
        a.iter().map(|x| x * s).collect()
    }

    pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }
}

/// `m^eta p m^eps p m^rho psi` expanded literally, `p = -i d/dx`.
fn sandwich(m: &[f64], psi: &[f64], outer: f64, middle: f64, inner: f64) -> Vec<f64> {
    let a = naive::mul(&naive::pow(m, inner), psi);
    let b = naive::mul(&naive::pow(m, middle), &naive::deriv(&a));
    let c = naive::deriv(&b);
    naive::scale(&naive::mul(&naive::pow(m, outer), &c), -1.0)
}

/// The symmetrised von Roos operator applied to `psi` equals the BenDaniel-Duke
/// operator plus the library's ordering potential.
pub fn ordering_closed_form(m: &[f64], psi: &[f64], eta: f64, eps: f64) -> Result<(), String> {
    let rho = -1.0 - eta - eps;
    let n = m.len();
    let kinetic = naive::scale(
        &naive::add(&sandwich(m, psi, eta, eps, rho), &sandwich(m, psi, rho, eps, eta)),
        0.25,
    );
    let inv_m = naive::pow(m, -1.0);
    let bdd = naive::scale(&naive::deriv(&naive::mul(&naive::deriv(psi), &inv_m)), -0.5);
    let spec = OrderingSpec::new(eta, eps, rho).map_err(|e| e.to_string())?;
    let u = ordering_potential(&series(m), &spec).map_err(|e| e.to_string())?;
    let u_psi = naive::mul(&u.to_f64_vec(), psi);
    let order = n - 3;
    let want: Vec<f64> = (0..=order).map(|k| bdd[k] + u_psi[k]).collect();
    let scale = max_abs(&kinetic[..=order]).max(max_abs(&want));
    for k in 0..=order {
        if (kinetic[k] - want[k]).abs() > 1e-10 * scale.max(1.0) {
            return Err(format!(
                "ordering ({eta}, {eps}, {rho}) coefficient {k}: operator {} vs closed form {}",
                kinetic[k], want[k]
            ));
        }
    }
    Ok(())
}

/// The determinant's sign on a fixed grid does not depend on rescaling.
pub fn rescaling_invariance(gamma: f64, preset: OrderingPreset, m: usize) -> Result<(), String> {
    let p = quadratic_mass(gamma, preset);
    let ode = p.canonical_ode::<f64>(m + 4).map_err(|e| e.to_string())?;
    for i in 0..=60 {
        let e = 0.1 * i as f64;
        let scaled = atem::iterate(&ode, e, m, Rescaling::Joint).map_err(|e| e.to_string())?;
        let raw = atem::iterate(&ode, e, m, Rescaling::Off).map_err(|e| e.to_string())?;
        let a = atem::termination_det(&scaled).unwrap();
        let b = atem::termination_det(&raw).unwrap();
        if a.signum() != b.signum() && a != 0.0 && b != 0.0 {
            return Err(format!("m = {m}, E = {e}: signs {a:e} vs {b:e}"));
        }
    }
    Ok(())
}

/// Every even- or odd-branch root is also a determinant root.
pub fn parity_determinant_equivalence(gamma: f64, k: usize) -> Result<(), String> {
    let p = quadratic_mass(gamma, OrderingPreset::Bdd);
    let run = |condition| {
        let s = RootSettings {
            condition,
            ..RootSettings::default()
        };
        atem::find_roots(&p, k, (0.0, 5.5), &s)
            .map(|r| r.into_iter().map(|x| x.energy).collect::<Vec<_>>())
            .map_err(|e| e.to_string())
    };
    let det = run(Condition::Determinant)?;
    let mut branches = run(Condition::Even)?;
    branches.extend(run(Condition::Odd)?);
    if branches.len() != det.len() {
        return Err(format!(
            "{} branch roots vs {} determinant roots",
            branches.len(),
            det.len()
        ));
    }
    for e in branches {
        let nearest = det.iter().map(|d| (d - e).abs()).fold(f64::INFINITY, f64::min);
        if nearest > 1e-10 {
            return Err(format!("branch root {e} is {nearest:e} from every determinant root"));
        }
    }
    Ok(())
}

/// `psi = g f` satisfies `psi'' = P psi' + (Q_V + E Q_E) psi` on `|x| <= 2`.
pub fn ode_residual(problem: &PdmProblem, state: usize, energy: f64, k: usize) -> Result<f64, String> {
    let w = wavefunction::reconstruct(problem, state, energy, k, &ReconstructSettings::default())
        .map_err(|e| e.to_string())?;
    let b: &Bindings = &problem.bindings;
    let psi = |x: f64| problem.gauge.factor(x, b).unwrap() * w.eval_f(x);
    let mass = |x: f64| problem.mass.eval(x, b).unwrap();
    let h = 1e-3;
    let d1 = |f: &dyn Fn(f64) -> f64, x: f64| {
        (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
    };
    let d2 = |f: &dyn Fn(f64) -> f64, x: f64| {
        (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h)
    };
    let spec = problem.ordering.spec;
    let mut worst = 0.0f64;
    let mut peak = 0.0f64;
    for i in 0..=400 {
        let x = -2.0 + 0.01 * i as f64;
        let m = mass(x);
        let dm = d1(&mass, x);
        let d2m = d2(&mass, x);
        let u = spec.potential_at(m, dm, d2m);
        let v = problem.potential.eval(x, b).unwrap();
        let p = dm / m;
        let q = 2.0 * m * (v + u) - 2.0 * m * energy;
        let r = d2(&psi, x) - p * d1(&psi, x) - q * psi(x);
        worst = worst.max(r.abs());
        peak = peak.max(psi(x).abs());
    }
    Ok(worst / peak)
}

/// Roots of the quadratic-mass oscillator at iteration count `k`, double-double.
pub fn quadratic_mass_roots(k: usize) -> Vec<f64> {
    atem::find_roots(
        &quadratic_mass(0.1, OrderingPreset::Bdd),
        k,
        (0.0, 5.5),
        &RootSettings::default(),
    )
    .unwrap()
    .into_iter()
    .map(|r| r.energy)
    .collect()
}

/// Sturm-sequence polynomial count: sign changes of `p_0 .. p_n` at `x`,
/// computed without the library's LDL recurrence.
pub fn sturm_polynomial_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut prev2 = 1.0f64;
    let mut prev = diag[0] - x;
    let mut count = usize::from(prev < 0.0);
    for i in 1..diag.len() {
        let cur = (diag[i] - x) * prev - off[i - 1] * off[i - 1] * prev2;
        // Rescale to keep the sequence finite; signs are unaffected.
        let s = cur.abs().max(prev.abs()).max(1e-300);
        if (cur < 0.0) != (prev < 0.0) {
            count += 1;
        }
        prev2 = prev / s;
        prev = cur / s;
    }
    count
}

pub fn double_double_agrees_with_double(gamma: f64) -> Result<(), String> {
    let p = quadratic_mass(gamma, OrderingPreset::Bdd);
    let mut s = RootSettings::default();
    let hi = atem::find_roots(&p, 30, (0.0, 3.0), &s).map_err(|e| e.to_string())?;
    s.precision = Precision::Double;
    let lo = atem::find_roots(&p, 30, (0.0, 3.0), &s).map_err(|e| e.to_string())?;
    if hi.len() != lo.len() {
        return Err("root counts differ".into());
    }
    for (a, b) in hi.iter().zip(&lo) {
        if (a.energy - b.energy).abs() > 1e-9 {
            return Err(format!("{} vs {}", a.energy, b.energy));
        }
    }
    Ok(())
}
