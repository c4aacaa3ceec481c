//! Direct scalar transcription of the four update rules, evaluated with
//! dense matrices and literal index comparisons, checked against the
//! library on every connected graph with at most three nodes.

use difflms::combiners::{metropolis, uniform};
use difflms::{
    atc_iteration, cta_iteration, no_coop_iteration, si_lms_iteration, CombinationMatrix, Graph, NodeState, Sample,
    Schedule, StepSizes,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Dense = Vec<Vec<f64>>;

fn dense(m: &CombinationMatrix) -> Dense {
    (0..m.n_nodes()).map(|k| m.row(k).to_vec()).collect()
}

fn lms(w: Complex64, x: Complex64, d: Complex64, mu: f64) -> Complex64 {
    w + mu * x * (d - w.conj() * x).conj()
}

fn oracle_nocoop(w: &[Complex64], x: &[Complex64], d: &[Complex64], mu: f64) -> Vec<Complex64> {
    (0..w.len()).map(|k| lms(w[k], x[k], d[k], mu)).collect()
}

fn oracle_atc(w: &[Complex64], x: &[Complex64], d: &[Complex64], c: &Dense, mu: f64) -> Vec<Complex64> {
    let n = w.len();
    let psi: Vec<Complex64> = (0..n).map(|k| lms(w[k], x[k], d[k], mu)).collect();
    (0..n).map(|k| (0..n).map(|l| c[k][l] * psi[l]).sum()).collect()
}

fn oracle_cta(w: &[Complex64], x: &[Complex64], d: &[Complex64], c: &Dense, mu: f64) -> Vec<Complex64> {
    let n = w.len();
    (0..n)
        .map(|k| {
            let psi: Complex64 = (0..n).map(|l| c[k][l] * w[l]).sum();
            lms(psi, x[k], d[k], mu)
        })
        .collect()
}

// psi_k = c_kk w_k + sum_{l > k} c_kl w_l + sum_{m < k} c_km phi_m
// phi_k = psi_k + mu x_k conj(d_k - psi_k^* x_k)
// w_p   = sum_q a_pq phi_q
fn oracle_si(w: &[Complex64], x: &[Complex64], d: &[Complex64], c: &Dense, a: &Dense, mu: f64) -> Vec<Complex64> {
    let n = w.len();
    let mut phi = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let mut psi = c[k][k] * w[k];
        for l in k + 1..n {
            psi += c[k][l] * w[l];
        }
        for m in 0..k {
            psi += c[k][m] * phi[m];
        }
        phi[k] = lms(psi, x[k], d[k], mu);
    }
    (0..n).map(|p| (0..n).map(|q| a[p][q] * phi[q]).sum()).collect()
}

fn connected_graphs_up_to_three() -> Vec<Graph> {
    let mut out = vec![Graph::new(1, &[]).unwrap(), Graph::new(2, &[(0, 1)]).unwrap()];
    let all = [(0, 1), (0, 2), (1, 2)];
    for mask in 1u8..8 {
        let edges: Vec<_> = (0..3).filter(|b| mask & (1 << b) != 0).map(|b| all[b]).collect();
        if let Ok(g) = Graph::new(3, &edges) {
            out.push(g);
        }
    }
    out
}

fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

#[derive(Clone, Copy, Debug)]
enum Which {
    NoCoop,
    Atc,
    Cta,
    Si,
}

fn check(graph: &Graph, c: &CombinationMatrix, a: &CombinationMatrix, which: Which, seed: u64) {
    let n = graph.n_nodes();
    let mu_val = 0.3;
    let mu = StepSizes::uniform(n, mu_val).unwrap();
    let schedule = Schedule::ascending(n);
    let (cd, ad) = (dense(c), dense(a));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w0 = Complex64::new(0.8, -0.6);

    let mut lib: Vec<NodeState> = vec![NodeState::zeros(1); n];
    let mut ora = vec![Complex64::new(0.0, 0.0); n];
    for iter in 0..10 {
        let x: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let d: Vec<Complex64> = x
            .iter()
            .map(|xk| w0.conj() * xk + Complex64::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)))
            .collect();
        let samples: Vec<Sample> = (0..n)
            .map(|k| Sample {
                node: k,
                regressor: vec![x[k]],
                observation: d[k],
            })
            .collect();
        lib = match which {
            Which::NoCoop => no_coop_iteration(&lib, &samples, &mu),
            Which::Atc => atc_iteration(&lib, &samples, c, &mu),
            Which::Cta => cta_iteration(&lib, &samples, c, &mu),
            Which::Si => si_lms_iteration(&lib, &samples, c, a, &mu, &schedule),
        }
        .unwrap();
        ora = match which {
            Which::NoCoop => oracle_nocoop(&ora, &x, &d, mu_val),
            Which::Atc => oracle_atc(&ora, &x, &d, &cd, mu_val),
            Which::Cta => oracle_cta(&ora, &x, &d, &cd, mu_val),
            Which::Si => oracle_si(&ora, &x, &d, &cd, &ad, mu_val),
        };
        for k in 0..n {
            let e = rel_err(lib[k].omega[0], ora[k]);
            assert!(
                e <= 1e-12,
                "{which:?} n={n} edges={:?} iter={iter} node={k}: {} vs {} (rel {e:e})",
                graph.edges(),
                lib[k].omega[0],
                ora[k]
            );
        }
    }
}

#[test]
fn all_algorithms_match_transcription_oracle() {
    for g in connected_graphs_up_to_three() {
        let m = metropolis(&g);
        let u = uniform(&g);
        for seed in 0..5 {
            for which in [Which::NoCoop, Which::Atc, Which::Cta, Which::Si] {
                check(&g, &m, &m, which, seed);
            }
            check(&g, &m, &u, Which::Si, seed);
            check(&g, &u, &m, Which::Si, seed);
        }
    }
}

#[test]
fn six_connected_graphs_enumerated() {
    assert_eq!(connected_graphs_up_to_three().len(), 6);
}

#[test]
fn si_path_hand_values() {
    // Path 0-1-2, Metropolis, one iteration from zero with x = 1, d = 1,
    // mu = 0.5. Node 0: psi = 0, phi = 0.5. Node 1: psi = phi_0 / 3 = 1/6,
    // phi = 1/6 + 0.5 (1 - 1/6) = 7/12. Node 2: psi = phi_1 / 3 = 7/36,
    // phi = 7/36 + 0.5 (29/36) = 43/72.
    let g = Graph::path(3).unwrap();
    let c = metropolis(&g);
    let one = Complex64::new(1.0, 0.0);
    let samples: Vec<Sample> = (0..3)
        .map(|k| Sample {
            node: k,
            regressor: vec![one],
            observation: one,
        })
        .collect();
    let mu = StepSizes::uniform(3, 0.5).unwrap();
    let out = si_lms_iteration(
        &vec![NodeState::zeros(1); 3],
        &samples,
        &c,
        &c,
        &mu,
        &Schedule::ascending(3),
    )
    .unwrap();
    let phi = [0.5, 7.0 / 12.0, 43.0 / 72.0];
    for k in 0..3 {
        assert!((out[k].phi[0].re - phi[k]).abs() < 1e-15);
    }
    let w0 = 2.0 / 3.0 * phi[0] + phi[1] / 3.0;
    let w1 = (phi[0] + phi[1] + phi[2]) / 3.0;
    assert!((out[0].omega[0].re - w0).abs() < 1e-15);
    assert!((out[1].omega[0].re - w1).abs() < 1e-15);
}
