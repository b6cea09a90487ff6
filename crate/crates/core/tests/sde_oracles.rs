//! Integration oracles for the Euler–Maruyama path integrator: a dense
//! matrix-exponential check for the deterministic part, the bit-flip closed
//! form for the stochastic part, and mean-trace preservation.

use noisegate::qstate::StateVector;
use noisegate::stochastic::{integrate_sde, NoiseTerm, SdeSpec, StreamKey, TimeGrid};
use noisegate::C64;
use rayon::prelude::*;

fn sigma_x() -> Vec<C64> {
    vec![
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
    ]
}

/// e^{−iHt} by scaling-and-squaring Taylor series; test-only dense oracle.
fn expm_minus_i_h_t(h: &[C64], dim: usize, t: f64) -> Vec<C64> {
    let mut a: Vec<C64> = h.iter().map(|&x| C64::new(0.0, -t) * x).collect();
    let norm: f64 = a.iter().map(|z| z.norm()).sum();
    let squarings = norm.log2().ceil().max(0.0) as u32 + 4;
    let scale = 2f64.powi(squarings as i32);
    for z in &mut a {
        *z /= scale;
    }
    let mm = |x: &[C64], y: &[C64]| -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for k in 0..dim {
                let v = x[r * dim + k];
                for c in 0..dim {
                    out[r * dim + c] += v * y[k * dim + c];
                }
            }
        }
        out
    };
    let mut result = vec![C64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        result[i * dim + i] = C64::new(1.0, 0.0);
    }
    let mut term = result.clone();
    for k in 1..=20 {
        term = mm(&term, &a);
        for z in &mut term {
            *z /= k as f64;
        }
        for (r, t) in result.iter_mut().zip(&term) {
            *r += t;
        }
    }
    for _ in 0..squarings {
        result = mm(&result, &result);
    }
    result
}

#[test]
fn deterministic_part_matches_matrix_exponential() {
    // H = σ_z, no noise, t = π: the flow is e^{−iσ_z π} = −I, and the Euler
    // error shrinks linearly in dt.
    let h = vec![
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(-1.0, 0.0),
    ];
    let spec = SdeSpec::new(2, h.clone(), vec![]).unwrap();
    let hsq = std::f64::consts::FRAC_1_SQRT_2;
    let psi0 = StateVector::from_amplitudes(1, vec![C64::new(hsq, 0.0), C64::new(0.0, hsq)]).unwrap();
    let exact_m = expm_minus_i_h_t(&h, 2, std::f64::consts::PI);
    let exact: Vec<C64> = (0..2)
        .map(|r| {
            exact_m[r * 2] * psi0.amplitudes()[0] + exact_m[r * 2 + 1] * psi0.amplitudes()[1]
        })
        .collect();
    // Sanity: e^{−iσ_z π} = −I.
    assert!((exact_m[0] + C64::new(1.0, 0.0)).norm() < 1e-12);

    let mut errs = Vec::new();
    for n_steps in [2_000usize, 4_000] {
        let grid = TimeGrid::new(0.0, std::f64::consts::PI, n_steps).unwrap();
        let out = integrate_sde(&spec, &psi0, &grid, &[]).unwrap();
        let err: f64 = out
            .amplitudes()
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        errs.push(err);
    }
    assert!(errs[0] < 5e-3, "coarse error {}", errs[0]);
    let ratio = errs[0] / errs[1];
    assert!((1.5..=2.5).contains(&ratio), "order-1 ratio {ratio}");
}

fn bitflip_ensemble_p(gamma: f64, t_end: f64, n_steps: usize, n_traj: u64, seed: u64) -> (f64, f64) {
    let spec = SdeSpec::new(
        2,
        vec![C64::new(0.0, 0.0); 4],
        vec![NoiseTerm {
            operator: sigma_x(),
            gamma,
        }],
    )
    .unwrap();
    let grid = TimeGrid::new(0.0, t_end, n_steps).unwrap();
    let psi0 = StateVector::zero_state(1);
    let results: Vec<f64> = (0..n_traj)
        .into_par_iter()
        .map(|traj| {
            let keys = [StreamKey::new(seed, traj, 0, 0)];
            let out = integrate_sde(&spec, &psi0, &grid, &keys).unwrap();
            out.amplitudes()[0].norm_sqr()
        })
        .collect();
    let n = n_traj as f64;
    let mean = results.iter().sum::<f64>() / n;
    let var = results.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn bitflip_moment_matches_closed_form() {
    // E[|⟨0|ψ_T⟩|²] = p(T) = (1 + e^{−2γT})/2 within 3 SE (plus the small
    // O(dt) integrator bias at γ·dt = 0.002).
    let gamma = 0.1;
    let (mean, se) = bitflip_ensemble_p(gamma, 1.0, 50, 30_000, 11);
    let p = 0.5 * (1.0 + (-2.0 * gamma).exp());
    assert!(
        (mean - p).abs() < 3.0 * se + 5e-4,
        "mean {mean} vs p {p} (se {se})"
    );
}

#[test]
fn mean_trace_is_preserved() {
    // E[‖ψ_T‖²] = ‖ψ_0‖² for every spec (Lindblad trace preservation seen
    // through the unraveling).
    let specs = [
        SdeSpec::new(
            2,
            vec![C64::new(0.0, 0.0); 4],
            vec![NoiseTerm {
                operator: sigma_x(),
                gamma: 0.4,
            }],
        )
        .unwrap(),
        SdeSpec::new(
            2,
            vec![C64::new(0.0, 0.0); 4],
            vec![
                NoiseTerm {
                    // σ⁻
                    operator: vec![
                        C64::new(0.0, 0.0),
                        C64::new(1.0, 0.0),
                        C64::new(0.0, 0.0),
                        C64::new(0.0, 0.0),
                    ],
                    gamma: 0.5,
                },
                NoiseTerm {
                    // σ⁺
                    operator: vec![
                        C64::new(0.0, 0.0),
                        C64::new(0.0, 0.0),
                        C64::new(1.0, 0.0),
                        C64::new(0.0, 0.0),
                    ],
                    gamma: 0.2,
                },
            ],
        )
        .unwrap(),
    ];
    let hsq = std::f64::consts::FRAC_1_SQRT_2;
    let psi0 =
        StateVector::from_amplitudes(1, vec![C64::new(hsq, 0.0), C64::new(0.0, -hsq)]).unwrap();
    for (si, spec) in specs.iter().enumerate() {
        let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let n_traj = 40_000u64;
        let keys_of = |traj: u64| -> Vec<StreamKey> {
            (0..spec.noise_terms().len() as u64)
                .map(|c| StreamKey::new(77 + si as u64, traj, 0, c))
                .collect()
        };
        let norms: Vec<f64> = (0..n_traj)
            .into_par_iter()
            .map(|traj| {
                integrate_sde(spec, &psi0, &grid, &keys_of(traj))
                    .unwrap()
                    .norm_sq()
            })
            .collect();
        let n = n_traj as f64;
        let mean = norms.iter().sum::<f64>() / n;
        let var = norms.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!(
            (mean - 1.0).abs() < 3.0 * se + 2e-3,
            "spec {si}: mean norm² {mean} (se {se})"
        );
    }
}
