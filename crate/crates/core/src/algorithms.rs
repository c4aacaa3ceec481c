//! Diffusion LMS strategies.
//!
//! One call to an `*_iteration` function advances every node of the
//! network by one time index. All strategies read the previous estimates
//! from `states` and return fresh states; inputs are never modified.
//!
//! * no cooperation: plain LMS at every node.
//! * ATC: adapt locally, then combine neighbor intermediates with `C`.
//! * CTA: combine previous estimates with `C`, then adapt.
//! * SI-LMS: a serial sweep in schedule order where node `k` first combines
//!   the previous estimates of itself and of later neighbors with the
//!   freshly adapted estimates of earlier neighbors (weights `C`), adapts
//!   that combination, and publishes it; after the sweep every node
//!   combines the adapted estimates with `A`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::combiners::{self, validate, CombinationMatrix, Violation};
use crate::graph::Graph;
use crate::linalg::{dist_sqr, inner, zeros};
use crate::signal::{InputProfile, NoiseProfile, ParameterVector, Sample, SampleStreams, SignalKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgorithmError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid combination matrix: {0}")]
    InvalidMatrix(#[from] Violation),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid step size at node {0}: {1}")]
    InvalidStepSize(usize, f64),
    #[error("n_iterations must be at least 1")]
    NoIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    NoCoop,
    Atc,
    Cta,
    SiLms,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::NoCoop, Algorithm::Atc, Algorithm::Cta, Algorithm::SiLms];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::NoCoop => "nocoop",
            Algorithm::Atc => "atc",
            Algorithm::Cta => "cta",
            Algorithm::SiLms => "silms",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "nocoop" => Ok(Algorithm::NoCoop),
            "atc" => Ok(Algorithm::Atc),
            "cta" => Ok(Algorithm::Cta),
            "silms" | "si" => Ok(Algorithm::SiLms),
            _ => Err(format!("unknown algorithm {s:?} (valid: nocoop, atc, cta, silms)")),
        }
    }
}

/// Per-node estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    /// Current estimate.
    pub omega: Vec<Complex64>,
    /// Intermediate estimate: the adapted value for ATC, the combined value
    /// for CTA and SI-LMS.
    pub psi: Vec<Complex64>,
    /// Adapted estimate published during the SI-LMS sweep.
    pub phi: Vec<Complex64>,
}

impl NodeState {
    pub fn zeros(m: usize) -> Self {
        Self {
            omega: zeros(m),
            psi: zeros(m),
            phi: zeros(m),
        }
    }

    pub fn with_estimate(omega: Vec<Complex64>) -> Self {
        let m = omega.len();
        Self {
            omega,
            psi: zeros(m),
            phi: zeros(m),
        }
    }
}

/// Per-node step sizes. Zero is allowed (a frozen node).
#[derive(Debug, Clone, PartialEq)]
pub struct StepSizes(Vec<f64>);

impl StepSizes {
    pub fn new(mu: Vec<f64>) -> Result<Self, AlgorithmError> {
        if let Some((k, &m)) = mu.iter().enumerate().find(|(_, m)| !(m.is_finite() && **m >= 0.0)) {
            return Err(AlgorithmError::InvalidStepSize(k, m));
        }
        Ok(Self(mu))
    }

    pub fn uniform(n: usize, mu: f64) -> Result<Self, AlgorithmError> {
        Self::new(vec![mu; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Serial update order: a permutation of the node indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    order: Vec<usize>,
    position: Vec<usize>,
}

impl Schedule {
    pub fn new(order: Vec<usize>) -> Result<Self, AlgorithmError> {
        let n = order.len();
        let mut position = vec![usize::MAX; n];
        for (pos, &k) in order.iter().enumerate() {
            if k >= n {
                return Err(AlgorithmError::InvalidSchedule(format!(
                    "node {k} out of range for {n} nodes"
                )));
            }
            if position[k] != usize::MAX {
                return Err(AlgorithmError::InvalidSchedule(format!("node {k} appears twice")));
            }
            position[k] = pos;
        }
        Ok(Self { order, position })
    }

    pub fn ascending(n: usize) -> Self {
        Self {
            order: (0..n).collect(),
            position: (0..n).collect(),
        }
    }

    pub fn reversed(&self) -> Self {
        let order: Vec<usize> = self.order.iter().rev().copied().collect();
        Self::new(order).expect("reversal of a permutation")
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn position(&self, k: usize) -> usize {
        self.position[k]
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// `state + mu * x * conj(d - state^H x)`.
pub fn lms_adapt(state: &[Complex64], sample: &Sample, mu: f64) -> Result<Vec<Complex64>, AlgorithmError> {
    if state.len() != sample.regressor.len() {
        return Err(AlgorithmError::DimensionMismatch(format!(
            "estimate has {} entries, regressor has {}",
            state.len(),
            sample.regressor.len()
        )));
    }
    Ok(adapt_unchecked(state, sample, mu))
}

fn adapt_unchecked(state: &[Complex64], sample: &Sample, mu: f64) -> Vec<Complex64> {
    let err = (sample.observation - inner(state, &sample.regressor)).conj();
    let gain = err * mu;
    state.iter().zip(&sample.regressor).map(|(w, x)| w + x * gain).collect()
}

/// Weighted sum of estimates.
pub fn combine(estimates: &[(&[Complex64], f64)]) -> Result<Vec<Complex64>, AlgorithmError> {
    let Some(((first, _), rest)) = estimates.split_first() else {
        return Err(AlgorithmError::DimensionMismatch("nothing to combine".into()));
    };
    if let Some((v, _)) = rest.iter().find(|(v, _)| v.len() != first.len()) {
        return Err(AlgorithmError::DimensionMismatch(format!(
            "combining vectors of length {} and {}",
            first.len(),
            v.len()
        )));
    }
    Ok(weighted_sum(estimates.iter().copied()))
}

// Starts from the first scaled term so that a single unit weight
// reproduces its input bit for bit.
fn weighted_sum<'a>(mut terms: impl Iterator<Item = (&'a [Complex64], f64)>) -> Vec<Complex64> {
    let (v, w) = terms.next().expect("at least one term");
    let mut acc: Vec<Complex64> = v.iter().map(|z| z * w).collect();
    for (v, w) in terms {
        for (a, z) in acc.iter_mut().zip(v) {
            *a += z * w;
        }
    }
    acc
}

fn combine_row<'a>(c: &CombinationMatrix, k: usize, source: impl Fn(usize) -> &'a [Complex64]) -> Vec<Complex64> {
    weighted_sum(c.support(k).iter().map(|&l| (source(l), c.get(k, l))))
}

fn check_inputs(
    states: &[NodeState],
    samples: &[Sample],
    mu: &StepSizes,
    matrices: &[&CombinationMatrix],
) -> Result<(), AlgorithmError> {
    let n = states.len();
    if n == 0 {
        return Err(AlgorithmError::DimensionMismatch("no nodes".into()));
    }
    if samples.len() != n || mu.0.len() != n {
        return Err(AlgorithmError::DimensionMismatch(format!(
            "{n} states, {} samples, {} step sizes",
            samples.len(),
            mu.0.len()
        )));
    }
    let m = states[0].omega.len();
    for (k, (s, x)) in states.iter().zip(samples).enumerate() {
        if s.omega.len() != m || s.psi.len() != m || s.phi.len() != m || x.regressor.len() != m {
            return Err(AlgorithmError::DimensionMismatch(format!(
                "node {k} vectors differ from length {m}"
            )));
        }
        if x.node != k {
            return Err(AlgorithmError::DimensionMismatch(format!(
                "sample at slot {k} belongs to node {}",
                x.node
            )));
        }
    }
    for c in matrices {
        if c.n_nodes() != n {
            return Err(AlgorithmError::DimensionMismatch(format!(
                "{}x{} matrix for {n} nodes",
                c.n_nodes(),
                c.n_nodes()
            )));
        }
        if !c.is_row_stochastic() {
            return Err(AlgorithmError::InvalidMatrix(
                c.check_doubly_stochastic()
                    .err()
                    .unwrap_or(Violation::RowSum(0, f64::NAN)),
            ));
        }
    }
    Ok(())
}

/// Independent LMS at every node.
pub fn no_coop_iteration(
    states: &[NodeState],
    samples: &[Sample],
    mu: &StepSizes,
) -> Result<Vec<NodeState>, AlgorithmError> {
    check_inputs(states, samples, mu, &[])?;
    Ok(states
        .iter()
        .zip(samples)
        .zip(&mu.0)
        .map(|((s, x), &mu)| {
            let w = adapt_unchecked(&s.omega, x, mu);
            NodeState {
                omega: w.clone(),
                psi: w,
                phi: s.phi.clone(),
            }
        })
        .collect())
}

/// Adapt-then-combine.
pub fn atc_iteration(
    states: &[NodeState],
    samples: &[Sample],
    c: &CombinationMatrix,
    mu: &StepSizes,
) -> Result<Vec<NodeState>, AlgorithmError> {
    check_inputs(states, samples, mu, &[c])?;
    let psi: Vec<Vec<Complex64>> = states
        .iter()
        .zip(samples)
        .zip(&mu.0)
        .map(|((s, x), &mu)| adapt_unchecked(&s.omega, x, mu))
        .collect();
    Ok((0..states.len())
        .map(|k| NodeState {
            omega: combine_row(c, k, |l| &psi[l]),
            psi: psi[k].clone(),
            phi: states[k].phi.clone(),
        })
        .collect())
}

/// Combine-then-adapt.
pub fn cta_iteration(
    states: &[NodeState],
    samples: &[Sample],
    c: &CombinationMatrix,
    mu: &StepSizes,
) -> Result<Vec<NodeState>, AlgorithmError> {
    check_inputs(states, samples, mu, &[c])?;
    Ok((0..states.len())
        .map(|k| {
            let psi = combine_row(c, k, |l| &states[l].omega);
            NodeState {
                omega: adapt_unchecked(&psi, &samples[k], mu.0[k]),
                psi,
                phi: states[k].phi.clone(),
            }
        })
        .collect())
}

/// Serial-inspired LMS. `c` weights the pre-adaptation serial combination,
/// `a` the final combination; `schedule` fixes the sweep order.
pub fn si_lms_iteration(
    states: &[NodeState],
    samples: &[Sample],
    c: &CombinationMatrix,
    a: &CombinationMatrix,
    mu: &StepSizes,
    schedule: &Schedule,
) -> Result<Vec<NodeState>, AlgorithmError> {
    check_inputs(states, samples, mu, &[c, a])?;
    let n = states.len();
    if schedule.len() != n {
        return Err(AlgorithmError::InvalidSchedule(format!(
            "schedule covers {} nodes, network has {n}",
            schedule.len()
        )));
    }
    let mut psi: Vec<Vec<Complex64>> = vec![Vec::new(); n];
    let mut phi: Vec<Vec<Complex64>> = vec![Vec::new(); n];
    for &k in schedule.order() {
        // neighbors earlier in the sweep contribute this iteration's phi,
        // the node itself and later neighbors their previous omega
        let pos_k = schedule.position(k);
        let combined = weighted_sum(c.support(k).iter().map(|&l| {
            let v: &[Complex64] = if schedule.position(l) < pos_k {
                &phi[l]
            } else {
                &states[l].omega
            };
            (v, c.get(k, l))
        }));
        phi[k] = adapt_unchecked(&combined, &samples[k], mu.0[k]);
        psi[k] = combined;
    }
    Ok(psi
        .into_iter()
        .enumerate()
        .map(|(p, psi)| NodeState {
            omega: combine_row(a, p, |q| &phi[q]),
            psi,
            phi: phi[p].clone(),
        })
        .collect())
}

/// Which estimate the reported squared error uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMetric {
    /// `d_k(i) - omega_k(i-1)^H x_k(i)`.
    #[default]
    APriori,
    /// `d_k(i) - omega_k(i)^H x_k(i)`.
    APosteriori,
}

impl fmt::Display for ErrorMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorMetric::APriori => "a_priori",
            ErrorMetric::APosteriori => "a_posteriori",
        })
    }
}

impl FromStr for ErrorMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "a_priori" => Ok(ErrorMetric::APriori),
            "a_posteriori" => Ok(ErrorMetric::APosteriori),
            _ => Err(format!("expected a_priori or a_posteriori, got {s:?}")),
        }
    }
}

/// Everything a trajectory needs besides the algorithm and the run seed.
#[derive(Debug, Clone)]
pub struct Setup {
    pub graph: Graph,
    pub c: CombinationMatrix,
    pub a: CombinationMatrix,
    pub mu: StepSizes,
    pub schedule: Schedule,
    pub omega0: ParameterVector,
    pub input: InputProfile,
    pub noise: NoiseProfile,
    pub signal: SignalKind,
    pub metric: ErrorMetric,
}

impl Setup {
    /// Validates that all per-node quantities and both matrices match
    /// `graph`. Signal kind and error metric start at their defaults.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        graph: Graph,
        c: CombinationMatrix,
        a: CombinationMatrix,
        mu: StepSizes,
        schedule: Schedule,
        omega0: ParameterVector,
        input: InputProfile,
        noise: NoiseProfile,
    ) -> Result<Self, AlgorithmError> {
        let n = graph.n_nodes();
        validate(&c, &graph)?;
        validate(&a, &graph)?;
        let sizes = [
            mu.0.len(),
            schedule.len(),
            input.variances().len(),
            noise.variances().len(),
        ];
        if sizes.iter().any(|&s| s != n) {
            return Err(AlgorithmError::DimensionMismatch(format!(
                "graph has {n} nodes; step sizes, schedule, input and noise profiles have {sizes:?}"
            )));
        }
        Ok(Self {
            graph,
            c,
            a,
            mu,
            schedule,
            omega0,
            input,
            noise,
            signal: SignalKind::default(),
            metric: ErrorMetric::default(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    /// Advances `states` by one iteration of `algorithm`.
    pub fn step(
        &self,
        algorithm: Algorithm,
        states: &[NodeState],
        samples: &[Sample],
    ) -> Result<Vec<NodeState>, AlgorithmError> {
        match algorithm {
            Algorithm::NoCoop => no_coop_iteration(states, samples, &self.mu),
            Algorithm::Atc => atc_iteration(states, samples, &self.c, &self.mu),
            Algorithm::Cta => cta_iteration(states, samples, &self.c, &self.mu),
            Algorithm::SiLms => si_lms_iteration(states, samples, &self.c, &self.a, &self.mu, &self.schedule),
        }
    }
}

/// Output of [`run_trajectory`]. Entry `i` of each series describes
/// iteration `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Network mean squared error, `(1/N) sum_k |e_k|^2`.
    pub mse: Vec<f64>,
    /// Network mean square deviation, `(1/N) sum_k ||omega_k - w0||^2`.
    pub msd: Vec<f64>,
    /// States after each iteration, when requested.
    pub states: Option<Vec<Vec<NodeState>>>,
    /// Hash of every sample consumed, for checking that runs are paired.
    pub sample_checksum: u64,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

fn fnv_step(h: u64, word: u64) -> u64 {
    (h ^ word).wrapping_mul(0x0100_0000_01b3)
}

/// Runs `n_iterations` of `algorithm` from all-zero estimates, drawing
/// samples from the per-node streams of `run_seed`.
pub fn run_trajectory(
    algorithm: Algorithm,
    setup: &Setup,
    n_iterations: usize,
    run_seed: u64,
    record_states: bool,
) -> Result<Trajectory, AlgorithmError> {
    if n_iterations == 0 {
        return Err(AlgorithmError::NoIterations);
    }
    let n = setup.n_nodes();
    let m = setup.omega0.len();
    let w0 = setup.omega0.as_slice();
    let mut streams = SampleStreams::new(run_seed, n, setup.signal);
    let mut checksum = FNV_OFFSET;
    let mut states = vec![NodeState::zeros(m); n];
    let mut mse = Vec::with_capacity(n_iterations);
    let mut msd = Vec::with_capacity(n_iterations);
    let mut history = record_states.then(|| Vec::with_capacity(n_iterations));

    for _ in 0..n_iterations {
        let samples = streams.draw_round(&setup.omega0, &setup.input, &setup.noise);
        for s in &samples {
            for z in s.regressor.iter().chain([&s.observation]) {
                checksum = fnv_step(fnv_step(checksum, z.re.to_bits()), z.im.to_bits());
            }
        }
        let next = setup.step(algorithm, &states, &samples)?;
        let error_source = match setup.metric {
            ErrorMetric::APriori => &states,
            ErrorMetric::APosteriori => &next,
        };
        let err: f64 = error_source
            .iter()
            .zip(&samples)
            .map(|(s, x)| (x.observation - inner(&s.omega, &x.regressor)).norm_sqr())
            .sum();
        mse.push(err / n as f64);
        msd.push(next.iter().map(|s| dist_sqr(&s.omega, w0)).sum::<f64>() / n as f64);
        states = next;
        if let Some(h) = history.as_mut() {
            h.push(states.clone());
        }
    }
    Ok(Trajectory {
        mse,
        msd,
        states: history,
        sample_checksum: checksum,
    })
}

/// Identity combiner for `n` nodes; the no-cooperation baseline.
pub fn no_cooperation(n: usize) -> CombinationMatrix {
    combiners::identity(n)
}
