mod common;

use common::{random_signal, rng};
use rosetta_core::variational::{energy_gradient, regulariser_energy};
use rosetta_core::{
    discrete_energy, euler_lagrange_residual, explicit_step, minimize_by_diffusion,
    tikhonov_solve_oracle, translate, CouplingParams, EnergySpec, Family, FamilySpec, Role,
    RoleFunction, Signal1D,
};

fn energy(fam: Family, alpha: f64) -> EnergySpec {
    EnergySpec::new(
        RoleFunction::family(FamilySpec::unit(fam), Role::Regulariser),
        alpha,
    )
    .unwrap()
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = rng(21);
    for fam in Family::ALL {
        let spec = energy(fam, 0.7);
        for _ in 0..100 {
            let u = random_signal(&mut rng, 2..=24, 2.0);
            let f =
                rosetta_core::Signal1D::unit(u.values().iter().map(|x| x * 0.5 + 0.1).collect())
                    .unwrap();
            let grad = energy_gradient(&u, &f, &spec).unwrap();
            for j in 0..u.len() {
                let step = 1e-6;
                let mut plus = u.values().to_vec();
                let mut minus = u.values().to_vec();
                plus[j] += step;
                minus[j] -= step;
                let e =
                    |v: Vec<f64>| discrete_energy(&Signal1D::unit(v).unwrap(), &f, &spec).unwrap();
                let fd = (e(plus) - e(minus)) / (2.0 * step);
                let rel = (grad[j] - fd).abs() / grad[j].abs().max(fd.abs()).max(1e-3);
                assert!(rel <= 1e-5, "{fam} j={j}: analytic {} vs fd {fd}", grad[j]);
            }
        }
    }
}

#[test]
fn convex_regularisers_decrease_along_the_flow() {
    let mut rng = rng(22);
    let coupling = CouplingParams::default();
    for fam in Family::ALL
        .into_iter()
        .filter(|f| f.has_convex_regulariser())
    {
        let spec = energy(fam, 0.25);
        let phi = translate(spec.psi(), Role::Activation, &coupling).unwrap();
        for _ in 0..100 {
            let f = random_signal(&mut rng, 2..=40, 2.0);
            let mut u = f.clone();
            let mut previous = regulariser_energy(&u, &spec);
            for _ in 0..30 {
                u = explicit_step(&u, &phi, 0.25).unwrap();
                let now = regulariser_energy(&u, &spec);
                assert!(now <= previous + 1e-12, "{fam}: {previous} -> {now}");
                previous = now;
            }
            let out = minimize_by_diffusion(&f, &spec, 1).unwrap();
            assert!(
                discrete_energy(&out, &f, &spec).unwrap()
                    <= discrete_energy(&f, &f, &spec).unwrap() + 1e-12
            );
        }
    }
}

#[test]
fn oracle_residual_is_tiny() {
    let mut rng = rng(23);
    for alpha in [0.01, 0.25, 1.0, 10.0] {
        for _ in 0..50 {
            let f = random_signal(&mut rng, 1..=128, 1.0);
            let u = tikhonov_solve_oracle(&f, alpha).unwrap();
            // residual of the linear equation itself, independent of numeric Psi'
            let v = u.values();
            let n = v.len();
            for i in 0..n {
                let l = v[i.saturating_sub(1)];
                let r = v[(i + 1).min(n - 1)];
                let res = (v[i] - f.values()[i]) / alpha - (r - 2.0 * v[i] + l);
                assert!(res.abs() <= 1e-10, "alpha={alpha}: {res}");
            }
            let el = euler_lagrange_residual(&u, &f, &energy(Family::Constant, alpha)).unwrap();
            assert!(el.values().iter().all(|r| r.abs() <= 1e-7));
        }
    }
}

#[test]
fn explicit_steps_converge_to_the_heat_semigroup() {
    // m steps of size alpha/m approach exp(alpha Lap) f at first order;
    // the reference uses many more steps.
    let f = Signal1D::unit(vec![0.0, 1.0, 0.2, 0.9, 0.4, 0.0, 1.0, 0.3, 0.5, 0.8]).unwrap();
    let spec = energy(Family::Constant, 1.0);
    let reference = minimize_by_diffusion(&f, &spec, 1 << 14).unwrap();
    let mut prev = f64::INFINITY;
    for k in 2..=8 {
        let m = 1 << k;
        let err = minimize_by_diffusion(&f, &spec, m)
            .unwrap()
            .max_abs_diff(&reference);
        assert!(err <= 0.6 * prev, "m={m}: {err} vs {prev}");
        prev = err;
    }
}
