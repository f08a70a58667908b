use std::f64::consts::PI;

use proptest::prelude::*;
use rotator_dynamics::consistency::{magnetization_residual, solve_magnetization_with};
use rotator_dynamics::dynamics::{integrate_flow_at, FieldEvaluator};
use rotator_dynamics::ldp::{edge_weights, hamiltonian_gradient};
use rotator_dynamics::simplex::{fourier_mode, tv_distance};
use rotator_dynamics::*;

fn model(beta: f64, q: usize) -> Model {
    Model::with(beta, q).unwrap()
}

/// Interior simplex points with every weight at least `0.01 / q`.
fn interior(q: usize) -> impl Strategy<Value = SimplexVector> {
    prop::collection::vec(0.01f64..1.0, q).prop_map(|w| SimplexVector::normalized(w).unwrap())
}

fn zero_sum(q: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, q).prop_map(|mut v| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter_mut().for_each(|x| *x -= mean);
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn fixed_point_residual(nu in interior(10)) {
        let m3 = model(3.0, 10);
        let rep = solve_magnetization(&m3, &nu, None).unwrap();
        prop_assert!(rep.converged);
        prop_assert!(magnetization_residual(&m3, &nu, rep.m).unwrap() <= 1e-12);
    }

    #[test]
    fn lyapunov_rate_is_nonpositive(nu in interior(10), hot in any::<bool>()) {
        let m = model(if hot { 3.0 } else { 2.3 }, 10);
        let rate = free_energy_rate(&m, &nu).unwrap().as_f64();
        prop_assert!(rate <= 1e-10, "{rate}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn shift_rotates_magnetization(nu in interior(10), beta in 0.5f64..8.0) {
        let m = model(beta, 10);
        let a = solve_magnetization(&m, &nu, None).unwrap().m;
        let b = solve_magnetization(&m, &nu.cyclic_shift(1), None).unwrap().m;
        prop_assert!((a.rotate(2.0 * PI / 10.0) - b).norm() <= 1e-10);
    }

    #[test]
    fn antipodal_starts_agree(nu in interior(10), beta in 0.5f64..10.0) {
        let m = model(beta, 10);
        prop_assume!(classify_regime(beta, 10).uniqueness);
        let opts = m.solver_options();
        let a = solve_magnetization_with(&m, &nu, Some(Vec2::new(0.9, 0.0)), opts).unwrap().m;
        let b = solve_magnetization_with(&m, &nu, Some(Vec2::new(-0.9, 0.0)), opts).unwrap().m;
        prop_assert!((a - b).norm() <= 1e-10);
    }

    #[test]
    fn field_sums_to_zero(nu in interior(12), beta in 0.0f64..20.0) {
        let f = vector_field(&model(beta, 12), &nu).unwrap();
        prop_assert!(f.iter().sum::<f64>().abs() <= 1e-15);
    }

    #[test]
    fn free_energy_shift_invariance(nu in interior(10), shift in 1isize..10) {
        let m = model(3.0, 10);
        let a = free_energy(&m, &nu).unwrap().value;
        let b = free_energy(&m, &nu.cyclic_shift(shift)).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-10);
    }

    #[test]
    fn jacobian_conserves_mass(nu in interior(8), rho in zero_sum(8), beta in 0.5f64..6.0) {
        let Ok(j) = jacobian_at(&model(beta, 8), &nu) else { return Ok(()) };
        prop_assert!(j.apply(&rho).iter().sum::<f64>().abs() <= 1e-12);
        let ones = j.apply(&[1.0; 8]);
        prop_assert!(ones.iter().sum::<f64>().abs() <= 1e-12);
    }

    #[test]
    fn spectrum_conjugate_pairs(beta in 2.01f64..100.0, q in 3usize..60) {
        let Ok(spec) = eq_eigenvalues(&model(beta, q)) else { return Ok(()) };
        let l = &spec.eigenvalues;
        prop_assert_eq!(l[q - 1].norm(), 0.0);
        for j in 1..q {
            prop_assert!((l[j - 1] - l[q - j - 1].conj()).norm() <= 1e-12);
        }
    }

    #[test]
    fn projector_is_complete(rho in zero_sum(11)) {
        let p = stable_manifold_projector(11).unwrap();
        let u = p.unstable_part(&rho);
        let s = p.stable_part(&rho);
        for k in 0..11 {
            prop_assert!((u[k] + s[k] - rho[k]).abs() <= 1e-12);
        }
        let uu = p.unstable_part(&u);
        prop_assert!(uu.iter().zip(&u).all(|(a, b)| (a - b).abs() <= 1e-12));
        prop_assert!(p.unstable_part(&s).iter().all(|x| x.abs() <= 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn flow_velocity_costs_nothing(nu in interior(10)) {
        let m = model(3.0, 10);
        let f = vector_field(&m, &nu).unwrap();
        prop_assert!(lagrangian(&m, &nu, &f).unwrap().value <= 1e-10);
    }

    #[test]
    fn lagrangian_nonnegative_and_dual(nu in interior(10), u in zero_sum(10), scale in 0.0f64..2.0) {
        let m = model(3.0, 10);
        let u: Vec<f64> = u.iter().map(|x| x * scale).collect();
        let l = lagrangian(&m, &nu, &u).unwrap();
        prop_assert!(l.converged);
        prop_assert!(l.value >= 0.0);
        let w = edge_weights(&m, &nu).unwrap();
        let g = hamiltonian_gradient(&w, l.maximizer.values()).unwrap();
        prop_assert!(g.iter().zip(&u).all(|(a, b)| (a - b).abs() <= 1e-8));
    }

    #[test]
    fn lagrangian_convex_in_velocity(nu in interior(10), a in zero_sum(10), b in zero_sum(10)) {
        let m = model(3.0, 10);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let la = lagrangian(&m, &nu, &a).unwrap().value;
        let lb = lagrangian(&m, &nu, &b).unwrap().value;
        let lm = lagrangian(&m, &nu, &mid).unwrap().value;
        prop_assert!(lm <= 0.5 * (la + lb) + 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn lagrangian_strictly_positive_off_flow(nu in interior(10)) {
        let m = model(3.0, 10);
        let mode = fourier_mode(10, 2);
        let u: Vec<f64> = vector_field(&m, &nu).unwrap().iter().zip(&mode).map(|(f, r)| f + 0.1 * r).collect();
        prop_assert!(lagrangian(&m, &nu, &u).unwrap().value >= 1e-6);
    }

    #[test]
    fn zero_set_is_only_rest_points(nu in interior(10)) {
        let m = model(3.0, 10);
        let eq = SimplexVector::uniform(10);
        prop_assume!(nu.tv_distance(&eq) >= 0.05);
        prop_assume!(orbit_distance(&m, &nu, 640).unwrap() >= 0.05);
        let rate = free_energy_rate(&m, &nu).unwrap().as_f64();
        prop_assert!(rate.abs() >= 1e-4, "{rate}");
    }

    #[test]
    fn trajectories_stay_positive_and_descend(nu in interior(10)) {
        let m = model(3.0, 10);
        let times: Vec<f64> = (0..=40).map(|i| 0.25 * i as f64).collect();
        let traj = integrate_flow_at(&m, &nu, &times, 1e-9, 1e-9).unwrap();
        prop_assert!(traj.stats.min_component >= -1e-12);
        let psi: Vec<f64> = traj.states.iter().map(|s| free_energy(&m, s).unwrap().value).collect();
        for w in psi.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9);
        }
    }
}

#[test]
fn boundary_starts_stay_in_the_simplex() {
    let m = model(3.0, 10);
    for k in 0..10 {
        let nu = SimplexVector::dirac(10, k + 1).unwrap();
        let times: Vec<f64> = (0..=20).map(|i| 0.5 * i as f64).collect();
        let traj = integrate_flow_at(&m, &nu, &times, 1e-9, 1e-9).unwrap();
        assert!(traj.stats.min_component >= -1e-12, "{}", traj.stats.min_component);
    }
}

#[test]
fn integrator_error_follows_tolerance() {
    let m = model(3.0, 10);
    let nu = SimplexVector::dirac(10, 1).unwrap().mix(&SimplexVector::uniform(10), 0.5).unwrap();
    let times = [0.0, 1.0, 2.0, 3.0];
    let reference = integrate_flow_at(&m, &nu, &times, 1e-13, 1e-13).unwrap();
    let err = |tol: f64| {
        let t = integrate_flow_at(&m, &nu, &times, tol, tol).unwrap();
        t.states
            .iter()
            .zip(&reference.states)
            .map(|(a, b)| a.tv_distance(b))
            .fold(0.0, f64::max)
    };
    let coarse = err(1e-5);
    let fine = err(1e-7);
    // a fifth-order pair with tolerance-proportional local error: global
    // error falls roughly in proportion to the tolerance
    assert!(coarse > 0.0 && fine < coarse / 10.0, "{coarse} {fine}");
    assert!(fine > coarse / 1e4, "{coarse} {fine}");
}

#[test]
fn gillespie_conserves_particles() {
    let m = model(3.0, 10);
    let start = OccupationState::from_simplex(&SimplexVector::dirac(10, 3).unwrap(), 257).unwrap();
    let path = simulate_path(&m, &start, 3.0, 4, SimOptions::default()).unwrap();
    assert!(!path.is_empty());
    assert!(path.event_times.windows(2).all(|w| w[1] > w[0]));
    for st in path.states() {
        assert_eq!(st.counts.iter().sum::<u64>(), 257);
    }
}

#[test]
fn large_n_equidistribution_stays_put() {
    let m = model(3.0, 10);
    let eq = SimplexVector::uniform(10);
    let start = OccupationState::from_simplex(&eq, 10_000).unwrap();
    let close = (0..20u64)
        .filter(|&seed| {
            let path = simulate_path(&m, &start, 1.0, seed, SimOptions::default()).unwrap();
            tv_distance(&path.final_state().fractions(), eq.weights()) <= 0.05
        })
        .count();
    assert!(close >= 18, "{close}");
}

#[test]
fn large_n_orbit_rotates_at_unit_speed() {
    let m = model(3.0, 10);
    let nu = discretize_gibbs(&m, 0.0).unwrap().nu;
    let start = OccupationState::from_simplex(&nu, 10_000).unwrap();
    let period = 2.0 * PI / 10.0;
    for seed in 0..3 {
        let path = simulate_path(&m, &start, period, seed, SimOptions::default()).unwrap();
        let ms = stochastic::magnetization_series(&m, &path, &[0.0, period]).unwrap();
        let mut turn = ms[1].angle() - ms[0].angle();
        turn = (turn + PI).rem_euclid(2.0 * PI) - PI;
        let speed = turn / period;
        assert!((speed - 1.0).abs() <= 0.05, "seed {seed}: {speed}");
    }
}

#[test]
fn event_counts_match_intensity() {
    let m = model(3.0, 10);
    let start = OccupationState::from_simplex(&SimplexVector::dirac(10, 1).unwrap(), 400).unwrap();
    let t_final = 5.0;
    let path = simulate_path(&m, &start, t_final, 21, SimOptions::default()).unwrap();
    let mut ev = FieldEvaluator::new(&m);
    let mut c = vec![0.0; 10];
    // integrated intensity and observed count per unit window
    let mut intensity = [0.0; 5];
    let mut observed = [0u64; 5];
    for (i, st) in path.states().enumerate() {
        ev.rates(&st.fractions(), &mut c).unwrap();
        let total: f64 = st.counts.iter().zip(&c).map(|(&n, r)| n as f64 * r).sum();
        let from = if i == 0 { 0.0 } else { path.event_times[i - 1] };
        let to = path.event_times.get(i).copied().unwrap_or(t_final);
        for (w, acc) in intensity.iter_mut().enumerate() {
            let (a, b) = (from.max(w as f64), to.min(w as f64 + 1.0));
            if b > a {
                *acc += total * (b - a);
            }
        }
        if let Some(&t) = path.event_times.get(i) {
            observed[(t.floor() as usize).min(4)] += 1;
        }
    }
    for (lam, n) in intensity.iter().zip(&observed) {
        assert!((*n as f64 - lam).abs() <= 3.0 * lam.sqrt(), "{n} vs {lam}");
    }
}

#[test]
fn single_particle_jump_times_are_exponential() {
    // one particle: c(k) at a Dirac measure is the same for every arc, so
    // inter-event gaps are i.i.d. exponential
    let m = model(3.0, 5);
    let start = OccupationState::new(vec![1, 0, 0, 0, 0]).unwrap();
    let path = simulate_path(&m, &start, 2000.0, 8, SimOptions::default()).unwrap();
    let c = rates(&m, &SimplexVector::dirac(5, 1).unwrap(), solve_magnetization(&m, &SimplexVector::dirac(5, 1).unwrap(), None).unwrap().m)
        .unwrap()
        .0[0];
    let mean_gap = path.t_final / path.len() as f64;
    assert!((mean_gap * c - 1.0).abs() < 0.1, "{}", mean_gap * c);
}
