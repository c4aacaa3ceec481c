//! Row-stochastic combination matrices supported on a graph.
//!
//! Entry `(k, l)` is the weight node `k` applies to node `l`'s estimate.
//! Each rule produces nonnegative weights that vanish outside the closed
//! neighborhood of `k` and sum to one along every row.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::Graph;

/// Tolerance on row and column sums.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    Metropolis,
    Uniform,
    RelativeDegree,
    /// `I - (kappa / d_max) L`.
    Laplacian {
        kappa: f64,
    },
    Identity,
}

impl Rule {
    pub const NAMES: [&'static str; 5] = ["metropolis", "uniform", "relative_degree", "laplacian", "identity"];

    /// Builds the combination matrix for `graph` under this rule.
    pub fn build(&self, graph: &Graph) -> CombinationMatrix {
        match *self {
            Rule::Metropolis => metropolis(graph),
            Rule::Uniform => uniform(graph),
            Rule::RelativeDegree => relative_degree(graph),
            Rule::Laplacian { kappa } => laplacian(graph, kappa),
            Rule::Identity => identity(graph.n_nodes()),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Metropolis => f.write_str("metropolis"),
            Rule::Uniform => f.write_str("uniform"),
            Rule::RelativeDegree => f.write_str("relative_degree"),
            Rule::Laplacian { kappa } if *kappa == 1.0 => f.write_str("laplacian"),
            Rule::Laplacian { kappa } => write!(f, "laplacian:{kappa}"),
            Rule::Identity => f.write_str("identity"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("unknown combiner rule {given:?} (valid: metropolis, uniform, relative_degree, laplacian[:kappa], identity)")]
pub struct UnknownRule {
    pub given: String,
}

impl FromStr for Rule {
    type Err = UnknownRule;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let unknown = || UnknownRule { given: s.to_string() };
        match lower.as_str() {
            "metropolis" => Ok(Rule::Metropolis),
            "uniform" => Ok(Rule::Uniform),
            "relative_degree" | "relative-degree" => Ok(Rule::RelativeDegree),
            "laplacian" => Ok(Rule::Laplacian { kappa: 1.0 }),
            "identity" => Ok(Rule::Identity),
            other => {
                let kappa = other
                    .strip_prefix("laplacian:")
                    .and_then(|k| k.parse::<f64>().ok())
                    .ok_or_else(unknown)?;
                if kappa > 0.0 && kappa <= 1.0 {
                    Ok(Rule::Laplacian { kappa })
                } else {
                    Err(unknown())
                }
            }
        }
    }
}

/// First violated property found by [`validate`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("matrix is {matrix}x{matrix} but graph has {graph} nodes")]
    Dimension { matrix: usize, graph: usize },
    #[error("entry ({0}, {1}) = {2} is negative or not finite")]
    Negative(usize, usize, f64),
    #[error("entry ({0}, {1}) is nonzero but {1} is not a neighbor of {0}")]
    Support(usize, usize),
    #[error("row {0} sums to {1}")]
    RowSum(usize, f64),
    #[error("column {0} sums to {1}")]
    ColumnSum(usize, f64),
}

/// Dense `N x N` combination weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationMatrix {
    n: usize,
    weights: Vec<f64>,
    rule: Option<Rule>,
    // nonzero column indices per row, ascending
    support: Vec<Vec<usize>>,
    row_stochastic: bool,
}

impl CombinationMatrix {
    /// Wraps arbitrary row-major weights. The result may violate the
    /// stochasticity invariants; check with [`validate`].
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self::from_dense(n, rows.into_iter().flatten().collect(), None)
    }

    fn from_dense(n: usize, weights: Vec<f64>, rule: Option<Rule>) -> Self {
        let support = (0..n)
            .map(|k| (0..n).filter(|&l| weights[k * n + l] != 0.0).collect())
            .collect();
        let mut m = Self {
            n,
            weights,
            rule,
            support,
            row_stochastic: false,
        };
        m.row_stochastic = m.check_rows().is_ok();
        m
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    /// Rule that produced the matrix, `None` for hand-built weights.
    pub fn rule(&self) -> Option<Rule> {
        self.rule
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.weights[k * self.n + l]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.weights[k * self.n..(k + 1) * self.n]
    }

    /// Column indices with nonzero weight in row `k`, ascending.
    pub fn support(&self, k: usize) -> &[usize] {
        &self.support[k]
    }

    /// Nonnegative with unit row sums.
    pub fn is_row_stochastic(&self) -> bool {
        self.row_stochastic
    }

    fn check_rows(&self) -> Result<(), Violation> {
        for k in 0..self.n {
            for l in 0..self.n {
                let w = self.get(k, l);
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(Violation::Negative(k, l, w));
                }
            }
            let sum: f64 = self.row(k).iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Violation::RowSum(k, sum));
            }
        }
        Ok(())
    }

    /// Column sums equal one (the matrix is already row-stochastic).
    pub fn check_doubly_stochastic(&self) -> Result<(), Violation> {
        self.check_rows()?;
        for l in 0..self.n {
            let sum: f64 = (0..self.n).map(|k| self.get(k, l)).sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Violation::ColumnSum(l, sum));
            }
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|k| (0..k).all(|l| self.get(k, l) == self.get(l, k)))
    }

    /// Full matrix as CSV, row-major, 17 significant digits per entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for k in 0..self.n {
            let row: Vec<String> = self.row(k).iter().map(|w| format!("{w:.16e}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Checks nonnegativity, support on the closed neighborhoods of `graph`,
/// and unit row sums. Reports the first violation in row-major order.
pub fn validate(m: &CombinationMatrix, graph: &Graph) -> Result<(), Violation> {
    if m.n != graph.n_nodes() {
        return Err(Violation::Dimension {
            matrix: m.n,
            graph: graph.n_nodes(),
        });
    }
    for k in 0..m.n {
        for l in 0..m.n {
            let w = m.get(k, l);
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Violation::Negative(k, l, w));
            }
            if w != 0.0 && k != l && !graph.has_edge(k, l) {
                return Err(Violation::Support(k, l));
            }
        }
        let sum: f64 = m.row(k).iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Violation::RowSum(k, sum));
        }
    }
    Ok(())
}

fn build(graph: &Graph, rule: Rule, mut row_fn: impl FnMut(usize, &mut [f64])) -> CombinationMatrix {
    let n = graph.n_nodes();
    let mut weights = vec![0.0; n * n];
    for (k, row) in weights.chunks_mut(n).enumerate() {
        row_fn(k, row);
    }
    CombinationMatrix::from_dense(n, weights, Some(rule))
}

/// Metropolis weights: `1 / max(|N_k|, |N_l|)` between neighbors, with
/// the self-weight taking the remainder of the row.
pub fn metropolis(graph: &Graph) -> CombinationMatrix {
    build(graph, Rule::Metropolis, |k, row| {
        let deg_k = graph.members(k).len();
        let mut off = 0.0;
        for &l in graph.members(k).iter().filter(|&&l| l != k) {
            let w = 1.0 / deg_k.max(graph.members(l).len()) as f64;
            row[l] = w;
            off += w;
        }
        row[k] = 1.0 - off;
    })
}

/// Equal weights `1 / |N_k|` across the closed neighborhood.
pub fn uniform(graph: &Graph) -> CombinationMatrix {
    build(graph, Rule::Uniform, |k, row| {
        let members = graph.members(k);
        let w = 1.0 / members.len() as f64;
        for &l in members {
            row[l] = w;
        }
    })
}

/// Weights proportional to the neighbor's degree:
/// `|N_l| / sum_{m in N_k} |N_m|`.
pub fn relative_degree(graph: &Graph) -> CombinationMatrix {
    build(graph, Rule::RelativeDegree, |k, row| {
        let members = graph.members(k);
        let total: usize = members.iter().map(|&m| graph.members(m).len()).sum();
        for &l in members {
            row[l] = graph.members(l).len() as f64 / total as f64;
        }
    })
}

/// `I - (kappa / d_max) L`, where `L` is the graph Laplacian and `d_max`
/// the largest edge count at any node. Nonnegative for `kappa <= 1`.
pub fn laplacian(graph: &Graph, kappa: f64) -> CombinationMatrix {
    let d_max = graph.max_edge_degree();
    build(graph, Rule::Laplacian { kappa }, |k, row| {
        if d_max == 0 {
            row[k] = 1.0;
            return;
        }
        let step = kappa / d_max as f64;
        let edges_k = graph.members(k).len() - 1;
        for &l in graph.members(k).iter().filter(|&&l| l != k) {
            row[l] = step;
        }
        row[k] = 1.0 - step * edges_k as f64;
    })
}

/// No cooperation: every node keeps its own estimate.
pub fn identity(n: usize) -> CombinationMatrix {
    let mut weights = vec![0.0; n * n];
    for k in 0..n {
        weights[k * n + k] = 1.0;
    }
    CombinationMatrix::from_dense(n, weights, Some(Rule::Identity))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_rows(m: &CombinationMatrix, expected: &[&[f64]]) {
        for (k, row) in expected.iter().enumerate() {
            for (l, &w) in row.iter().enumerate() {
                assert!((m.get(k, l) - w).abs() < 1e-15, "({k},{l}): {} != {w}", m.get(k, l));
            }
        }
    }

    #[test]
    fn metropolis_path() {
        let g = Graph::path(3).unwrap();
        let m = metropolis(&g);
        let t = 1.0 / 3.0;
        assert_rows(&m, &[&[2.0 / 3.0, t, 0.0], &[t, t, t], &[0.0, t, 2.0 / 3.0]]);
        assert!(m.is_symmetric());
        m.check_doubly_stochastic().unwrap();
        validate(&m, &g).unwrap();
    }

    #[test]
    fn metropolis_complete_is_uniform() {
        let m = metropolis(&Graph::complete(3).unwrap());
        let t = 1.0 / 3.0;
        assert_rows(&m, &[&[t, t, t], &[t, t, t], &[t, t, t]]);
    }

    #[test]
    fn single_node_all_rules() {
        let g = Graph::new(1, &[]).unwrap();
        for rule in [
            Rule::Metropolis,
            Rule::Uniform,
            Rule::RelativeDegree,
            Rule::Laplacian { kappa: 1.0 },
            Rule::Identity,
        ] {
            let m = rule.build(&g);
            assert_eq!(m.row(0), &[1.0], "{rule}");
        }
    }

    #[test]
    fn uniform_rows() {
        let g = Graph::path(3).unwrap();
        let t = 1.0 / 3.0;
        assert_rows(&uniform(&g), &[&[0.5, 0.5, 0.0], &[t, t, t]]);
        let star = Graph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_rows(&uniform(&star), &[&[0.25, 0.25, 0.25, 0.25]]);
    }

    #[test]
    fn relative_degree_rows() {
        let m = relative_degree(&Graph::path(3).unwrap());
        assert_rows(&m, &[&[0.4, 0.6, 0.0]]);
        let k3 = relative_degree(&Graph::complete(3).unwrap());
        let t = 1.0 / 3.0;
        assert_rows(&k3, &[&[t, t, t], &[t, t, t], &[t, t, t]]);
    }

    #[test]
    fn laplacian_rows() {
        let m = laplacian(&Graph::path(3).unwrap(), 1.0);
        assert_rows(&m, &[&[0.5, 0.5, 0.0], &[0.5, 0.0, 0.5], &[0.0, 0.5, 0.5]]);
        let k2 = laplacian(&Graph::complete(2).unwrap(), 1.0);
        assert_rows(&k2, &[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!(m.is_symmetric());
    }

    #[test]
    fn identity_matrix() {
        let m = identity(3);
        assert_rows(&m, &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert_eq!(m.support(1), &[1]);
        validate(&identity(1), &Graph::new(1, &[]).unwrap()).unwrap();
    }

    #[test]
    fn validate_reports_violations() {
        let g = Graph::path(3).unwrap();
        let off_support =
            CombinationMatrix::from_rows(vec![vec![0.5, 0.0, 0.5], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        assert_eq!(validate(&off_support, &g), Err(Violation::Support(0, 2)));

        let not_edge =
            CombinationMatrix::from_rows(vec![vec![0.5, 0.5, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let other = Graph::new(3, &[(0, 2), (1, 2)]).unwrap();
        assert_eq!(validate(&not_edge, &other), Err(Violation::Support(0, 1)));

        let short = CombinationMatrix::from_rows(vec![vec![0.9, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        assert_eq!(validate(&short, &g), Err(Violation::RowSum(0, 0.9)));
        assert!(!short.is_row_stochastic());

        let negative =
            CombinationMatrix::from_rows(vec![vec![1.5, -0.5, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        assert_eq!(validate(&negative, &g), Err(Violation::Negative(0, 1, -0.5)));

        assert_eq!(
            validate(&identity(2), &g),
            Err(Violation::Dimension { matrix: 2, graph: 3 })
        );
    }

    #[test]
    fn uniform_not_doubly_stochastic_on_path() {
        let m = uniform(&Graph::path(3).unwrap());
        assert!(matches!(m.check_doubly_stochastic(), Err(Violation::ColumnSum(0, _))));
    }

    #[test]
    fn rule_names_parse() {
        for name in Rule::NAMES {
            let rule: Rule = name.parse().unwrap();
            assert_eq!(rule.to_string(), name);
        }
        assert_eq!("laplacian:0.5".parse::<Rule>().unwrap(), Rule::Laplacian { kappa: 0.5 });
        assert!("laplacian:1.5".parse::<Rule>().is_err());
        assert!("hastings".parse::<Rule>().is_err());
    }

    #[test]
    fn csv_has_full_precision() {
        let csv = metropolis(&Graph::path(3).unwrap()).to_csv();
        let first: Vec<f64> = csv
            .lines()
            .next()
            .unwrap()
            .split(',')
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(first, vec![1.0 - 1.0 / 3.0, 1.0 / 3.0, 0.0]);
        assert_eq!(csv.lines().count(), 3);
    }
}
