//! Linear observation model `d = w0^H x + n` with per-node input and
//! noise powers.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::{inner, norm_sqr};
use crate::seed::substream;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("parameter vector must have at least one entry")]
    EmptyParameter,
    #[error("parameter vector entry {0} is not finite")]
    NonFiniteParameter(usize),
    #[error("{what} variance at node {node} must be {bound}, got {value}")]
    BadVariance {
        what: &'static str,
        node: usize,
        bound: &'static str,
        value: f64,
    },
    #[error("profile needs at least one node")]
    EmptyProfile,
    #[error("profiles csv line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

/// The unknown parameter `w0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector(Vec<Complex64>);

impl ParameterVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self, SignalError> {
        if entries.is_empty() {
            return Err(SignalError::EmptyParameter);
        }
        if let Some(i) = entries.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(SignalError::NonFiniteParameter(i));
        }
        Ok(Self(entries))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.0)
    }
}

/// Unit-norm parameter with circular Gaussian direction.
pub fn random_parameter(m: usize, seed: u64) -> Result<ParameterVector, SignalError> {
    if m == 0 {
        return Err(SignalError::EmptyParameter);
    }
    let mut rng = substream(seed, 0);
    let mut v: Vec<Complex64> = (0..m).map(|_| circular_gaussian(&mut rng, 1.0)).collect();
    let norm = norm_sqr(&v).sqrt();
    for z in &mut v {
        *z /= norm;
    }
    ParameterVector::new(v)
}

/// Zero-mean circular complex Gaussian with `E|z|^2 = variance`.
pub fn circular_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(scale * re, scale * im)
}

/// Regressor and noise distribution family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignalKind {
    /// Circular complex Gaussian inputs and noise.
    #[default]
    Complex,
    /// Real Gaussian inputs and noise, for debugging.
    Real,
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignalKind::Complex => "complex",
            SignalKind::Real => "real",
        })
    }
}

impl FromStr for SignalKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "complex" => Ok(SignalKind::Complex),
            "real" => Ok(SignalKind::Real),
            _ => Err(format!("expected complex or real, got {s:?}")),
        }
    }
}

impl SignalKind {
    fn draw<R: Rng + ?Sized>(self, rng: &mut R, variance: f64) -> Complex64 {
        match self {
            SignalKind::Complex => circular_gaussian(rng, variance),
            SignalKind::Real => {
                let re: f64 = StandardNormal.sample(rng);
                Complex64::new(variance.sqrt() * re, 0.0)
            }
        }
    }
}

/// Per-node regressor power.
#[derive(Debug, Clone, PartialEq)]
pub struct InputProfile(Vec<f64>);

/// Per-node observation noise power.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProfile(Vec<f64>);

impl InputProfile {
    pub fn new(variances: Vec<f64>) -> Result<Self, SignalError> {
        check_variances(&variances, "input", false)?;
        Ok(Self(variances))
    }

    pub fn variances(&self) -> &[f64] {
        &self.0
    }
}

impl NoiseProfile {
    /// Zero variance is accepted so noiseless runs can be expressed.
    pub fn new(variances: Vec<f64>) -> Result<Self, SignalError> {
        check_variances(&variances, "noise", true)?;
        Ok(Self(variances))
    }

    pub fn variances(&self) -> &[f64] {
        &self.0
    }
}

fn check_variances(v: &[f64], what: &'static str, allow_zero: bool) -> Result<(), SignalError> {
    if v.is_empty() {
        return Err(SignalError::EmptyProfile);
    }
    for (node, &value) in v.iter().enumerate() {
        let ok = value.is_finite() && (value > 0.0 || (allow_zero && value == 0.0));
        if !ok {
            return Err(SignalError::BadVariance {
                what,
                node,
                bound: if allow_zero { "nonnegative" } else { "positive" },
                value,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceMode {
    Equal,
    Varying,
}

impl fmt::Display for VarianceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarianceMode::Equal => "equal",
            VarianceMode::Varying => "varying",
        })
    }
}

impl FromStr for VarianceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "equal" => Ok(VarianceMode::Equal),
            "varying" => Ok(VarianceMode::Varying),
            _ => Err(format!("expected equal or varying, got {s:?}")),
        }
    }
}

pub const EQUAL_INPUT_VARIANCE: f64 = 1.0;
pub const EQUAL_NOISE_VARIANCE: f64 = 0.01;
pub const VARYING_INPUT_RANGE: (f64, f64) = (0.5, 2.0);
pub const VARYING_NOISE_RANGE: (f64, f64) = (0.005, 0.05);

/// Input and noise powers for `n` nodes. `Equal` gives `(1, 0.01)` at
/// every node; `Varying` draws each power uniformly from its range.
pub fn variance_profiles(n: usize, mode: VarianceMode, seed: u64) -> Result<(InputProfile, NoiseProfile), SignalError> {
    if n == 0 {
        return Err(SignalError::EmptyProfile);
    }
    let (input, noise) = match mode {
        VarianceMode::Equal => (vec![EQUAL_INPUT_VARIANCE; n], vec![EQUAL_NOISE_VARIANCE; n]),
        VarianceMode::Varying => {
            let mut rng = substream(seed, 0);
            let (xl, xh) = VARYING_INPUT_RANGE;
            let (vl, vh) = VARYING_NOISE_RANGE;
            (0..n).map(|_| (rng.gen_range(xl..=xh), rng.gen_range(vl..=vh))).unzip()
        }
    };
    Ok((InputProfile::new(input)?, NoiseProfile::new(noise)?))
}

/// CSV with header `node,sigma2_x,sigma2_v`.
pub fn profiles_to_csv(input: &InputProfile, noise: &NoiseProfile) -> String {
    let mut out = String::from("node,sigma2_x,sigma2_v\n");
    for (k, (x, v)) in input.0.iter().zip(&noise.0).enumerate() {
        out.push_str(&format!("{k},{x:?},{v:?}\n"));
    }
    out
}

pub fn profiles_from_csv(text: &str) -> Result<(InputProfile, NoiseProfile), SignalError> {
    let mut input = Vec::new();
    let mut noise = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| SignalError::Csv { line: idx + 1, reason };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, got {}", fields.len())));
        }
        let node: usize = fields[0].parse().map_err(|_| err("bad node index".into()))?;
        if node != input.len() {
            return Err(err(format!("expected node {}, got {node}", input.len())));
        }
        input.push(fields[1].parse().map_err(|_| err("bad sigma2_x".into()))?);
        noise.push(fields[2].parse().map_err(|_| err("bad sigma2_v".into()))?);
    }
    Ok((InputProfile::new(input)?, NoiseProfile::new(noise)?))
}

/// One observation at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub node: usize,
    pub regressor: Vec<Complex64>,
    pub observation: Complex64,
}

/// Draws `x ~ CN(0, s2x I)`, `n ~ CN(0, s2v)` and returns `d = w0^H x + n`.
pub fn draw_sample<R: Rng + ?Sized>(
    node: usize,
    omega0: &ParameterVector,
    input: &InputProfile,
    noise: &NoiseProfile,
    kind: SignalKind,
    rng: &mut R,
) -> Sample {
    let sx = input.0[node];
    let sv = noise.0[node];
    let regressor: Vec<Complex64> = (0..omega0.len()).map(|_| kind.draw(rng, sx)).collect();
    let n = kind.draw(rng, sv);
    let observation = inner(omega0.as_slice(), &regressor) + n;
    Sample {
        node,
        regressor,
        observation,
    }
}

/// Per-node sample streams for one Monte Carlo run. Node `k` always reads
/// from substream `k` of the run seed.
#[derive(Debug, Clone)]
pub struct SampleStreams {
    streams: Vec<ChaCha8Rng>,
    kind: SignalKind,
}

impl SampleStreams {
    pub fn new(run_seed: u64, n_nodes: usize, kind: SignalKind) -> Self {
        Self {
            streams: (0..n_nodes as u64).map(|k| substream(run_seed, k)).collect(),
            kind,
        }
    }

    pub fn draw(
        &mut self,
        node: usize,
        omega0: &ParameterVector,
        input: &InputProfile,
        noise: &NoiseProfile,
    ) -> Sample {
        draw_sample(node, omega0, input, noise, self.kind, &mut self.streams[node])
    }

    /// One sample per node, all at the same time index.
    pub fn draw_round(&mut self, omega0: &ParameterVector, input: &InputProfile, noise: &NoiseProfile) -> Vec<Sample> {
        (0..self.streams.len())
            .map(|k| self.draw(k, omega0, input, noise))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    fn profiles(n: usize, sx: f64, sv: f64) -> (InputProfile, NoiseProfile) {
        (
            InputProfile::new(vec![sx; n]).unwrap(),
            NoiseProfile::new(vec![sv; n]).unwrap(),
        )
    }

    #[test]
    fn random_parameter_is_unit_norm_and_seeded() {
        for m in [1, 2, 5, 16] {
            let w = random_parameter(m, 11).unwrap();
            assert_eq!(w.len(), m);
            assert!((w.norm_sqr() - 1.0).abs() < 1e-12);
        }
        assert_eq!(random_parameter(5, 3).unwrap(), random_parameter(5, 3).unwrap());
        assert_ne!(random_parameter(5, 3).unwrap(), random_parameter(5, 4).unwrap());
        assert!((random_parameter(1, 9).unwrap().as_slice()[0].norm() - 1.0).abs() < 1e-12);
        assert_eq!(random_parameter(0, 1), Err(SignalError::EmptyParameter));
    }

    #[test]
    fn noiseless_observation_is_exact() {
        let w = random_parameter(4, 1).unwrap();
        let (input, noise) = profiles(1, 1.5, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let s = draw_sample(0, &w, &input, &noise, SignalKind::Complex, &mut rng);
            assert_eq!(s.observation, inner(w.as_slice(), &s.regressor));
        }
    }

    fn empirical_var(w: &ParameterVector, sx: f64, sv: f64) -> f64 {
        let (input, noise) = profiles(1, sx, sv);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 100_000;
        (0..n)
            .map(|_| {
                draw_sample(0, w, &input, &noise, SignalKind::Complex, &mut rng)
                    .observation
                    .norm_sqr()
            })
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn pure_noise_variance() {
        let zero = ParameterVector::new(vec![Complex64::new(0.0, 0.0); 3]).unwrap();
        let v = empirical_var(&zero, 1.0, 1.0);
        assert!((v - 1.0).abs() < 0.05, "{v}");
    }

    #[test]
    fn observation_variance_adds() {
        // var(d) = s2x * |w0|^2 + s2v for independent x and n
        let w = random_parameter(5, 2).unwrap();
        let v = empirical_var(&w, 2.0, 0.1);
        assert!((v - 2.1).abs() < 0.05 * 2.1, "{v}");
    }

    #[test]
    fn regressor_second_moments() {
        let m = 3;
        let sx = 2.0;
        let w = random_parameter(m, 5).unwrap();
        let (input, noise) = profiles(1, sx, 0.01);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 100_000;
        let mut cov = vec![Complex64::new(0.0, 0.0); m * m];
        let mut pseudo = vec![Complex64::new(0.0, 0.0); m * m];
        for _ in 0..n {
            let x = draw_sample(0, &w, &input, &noise, SignalKind::Complex, &mut rng).regressor;
            for i in 0..m {
                for j in 0..m {
                    cov[i * m + j] += x[i] * x[j].conj();
                    pseudo[i * m + j] += x[i] * x[j];
                }
            }
        }
        for i in 0..m {
            for j in 0..m {
                let expected = if i == j { sx } else { 0.0 };
                let c = cov[i * m + j] / n as f64;
                assert!((c - expected).norm() < 0.05 * sx, "cov[{i}{j}] = {c}");
                let p = pseudo[i * m + j] / n as f64;
                assert!(p.norm() < 0.05 * sx, "pseudo[{i}{j}] = {p}");
            }
        }
    }

    #[test]
    fn real_mode_has_no_imaginary_part() {
        let w = random_parameter(3, 1).unwrap();
        let (input, noise) = profiles(1, 1.0, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = draw_sample(0, &w, &input, &noise, SignalKind::Real, &mut rng);
        assert!(s.regressor.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn streams_are_order_independent() {
        let w = random_parameter(2, 1).unwrap();
        let (input, noise) = profiles(3, 1.0, 0.1);
        let mut forward = SampleStreams::new(9, 3, SignalKind::Complex);
        let mut backward = forward.clone();
        let a: Vec<Sample> = (0..3).map(|k| forward.draw(k, &w, &input, &noise)).collect();
        let mut b: Vec<Sample> = (0..3).rev().map(|k| backward.draw(k, &w, &input, &noise)).collect();
        b.reverse();
        assert_eq!(a, b);
        assert_ne!(a[0].regressor, a[1].regressor);
    }

    #[test]
    fn profile_modes() {
        let (input, noise) = variance_profiles(20, VarianceMode::Equal, 0).unwrap();
        assert!(input.variances().iter().all(|&v| v == 1.0));
        assert!(noise.variances().iter().all(|&v| v == 0.01));

        let a = variance_profiles(20, VarianceMode::Varying, 3).unwrap();
        let b = variance_profiles(20, VarianceMode::Varying, 3).unwrap();
        assert_eq!(a, b);

        let (input, noise) = variance_profiles(1, VarianceMode::Varying, 8).unwrap();
        assert!((0.5..=2.0).contains(&input.variances()[0]));
        assert!((0.005..=0.05).contains(&noise.variances()[0]));
    }

    #[test]
    fn profile_validation() {
        assert!(InputProfile::new(vec![1.0, 0.0]).is_err());
        assert!(NoiseProfile::new(vec![0.0]).is_ok());
        assert!(NoiseProfile::new(vec![-1.0]).is_err());
        assert!(InputProfile::new(vec![]).is_err());
    }

    #[test]
    fn profiles_csv_round_trip() {
        let (input, noise) = variance_profiles(6, VarianceMode::Varying, 4).unwrap();
        let csv = profiles_to_csv(&input, &noise);
        assert!(csv.starts_with("node,sigma2_x,sigma2_v\n"));
        assert_eq!(profiles_from_csv(&csv).unwrap(), (input, noise));
    }
}
