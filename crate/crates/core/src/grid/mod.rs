//! DC power-flow feasibility as a Gaussian half-space union.
//!
//! Busses are fixed (`p = η`), random (`p_R ~ N(η_R, Σ)`) or the single slack
//! bus, which absorbs the imbalance `p_S = -1ᵀp_R - 1ᵀp_F`. Phases solve
//! `Bθ = p` through the Laplacian pseudo-inverse. Feasibility is `Γ p_R ≤ 𝒦`
//! with rows, in order: random-bus upper limits, random-bus lower limits, the
//! slack lower limit, the slack upper limit, forward phase limits and backward
//! phase limits. Each violated row `γ_jᵀ p_R > κ_j` is one event.
//!
//! Internally busses are indexed in ascending id order, and `p_R`, `Σ` and the
//! columns of `Γ` follow the ascending ids of the random busses.

mod case;

pub use case::{Bus, BusRole, GridCase, Line};

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{AloeError, Result};
use crate::events::{whiten_rows, HalfSpaceProblem, RowWhitening};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RowLabel {
    BusUpper { bus: i64 },
    BusLower { bus: i64 },
    SlackLower { bus: i64 },
    SlackUpper { bus: i64 },
    PhaseForward { line: usize, from: i64, to: i64 },
    PhaseBackward { line: usize, from: i64, to: i64 },
}

impl fmt::Display for RowLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowLabel::BusUpper { bus } => write!(f, "bus {bus} upper"),
            RowLabel::BusLower { bus } => write!(f, "bus {bus} lower"),
            RowLabel::SlackLower { bus } => write!(f, "slack bus {bus} lower"),
            RowLabel::SlackUpper { bus } => write!(f, "slack bus {bus} upper"),
            RowLabel::PhaseForward { line, from, to } => {
                write!(f, "line {line} ({from}->{to}) forward")
            }
            RowLabel::PhaseBackward { line, from, to } => {
                write!(f, "line {line} ({from}->{to}) backward")
            }
        }
    }
}

/// `Γ p_R ≤ 𝒦` together with the distribution of `p_R`.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    /// Rows `γ_j`, each of length `N_R`.
    pub gamma: Vec<Vec<f64>>,
    /// Bounds `κ_j`; `+∞` for an absent limit.
    pub kappa: Vec<f64>,
    pub row_labels: Vec<RowLabel>,
    /// Ids of the random busses, ascending; the column order of `Γ`.
    pub random_bus_ids: Vec<i64>,
    pub eta_r: Vec<f64>,
    pub sigma: DMatrix<f64>,
}

impl ConstraintSystem {
    pub fn num_rows(&self) -> usize {
        self.gamma.len()
    }

    /// Whether `Γ p_R ≤ 𝒦` holds in every row.
    pub fn is_feasible(&self, p_r: &[f64]) -> bool {
        self.gamma
            .iter()
            .zip(&self.kappa)
            .all(|(g, &k)| crate::stats::dot(g, p_r) <= k)
    }

    /// Smallest slack `κ_j - γ_jᵀ p_R` over all rows.
    pub fn min_slack(&self, p_r: &[f64]) -> f64 {
        self.gamma
            .iter()
            .zip(&self.kappa)
            .map(|(g, &k)| k - crate::stats::dot(g, p_r))
            .fold(f64::INFINITY, f64::min)
    }
}

/// A network with its Laplacian, pseudo-inverse and incidence matrix.
#[derive(Debug, Clone)]
pub struct GridModel {
    case: GridCase,
    /// Bus positions in `case.busses`, sorted by id.
    order: Vec<usize>,
    index_of: HashMap<i64, usize>,
    random: Vec<usize>,
    fixed: Vec<usize>,
    slack: usize,
    laplacian: DMatrix<f64>,
    pinv: DMatrix<f64>,
    incidence: DMatrix<f64>,
}

/// Outcome of evaluating a dispatch directly on the network.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalCheck {
    /// Full injection vector in ascending bus-id order.
    pub injections: Vec<f64>,
    pub phases: Vec<f64>,
    /// Smallest margin over all limits; feasible when non-negative.
    pub min_margin: f64,
}

impl PhysicalCheck {
    pub fn feasible(&self) -> bool {
        self.min_margin >= 0.0
    }
}

impl GridModel {
    pub fn new(case: GridCase) -> Result<Self> {
        case.validate()?;
        let mut order: Vec<usize> = (0..case.busses.len()).collect();
        order.sort_by_key(|&i| case.busses[i].id);
        let index_of: HashMap<i64, usize> = order
            .iter()
            .enumerate()
            .map(|(k, &i)| (case.busses[i].id, k))
            .collect();
        let role_indices = |role: BusRole| -> Vec<usize> {
            order
                .iter()
                .enumerate()
                .filter(|(_, &i)| case.busses[i].role == role)
                .map(|(k, _)| k)
                .collect()
        };
        let random = role_indices(BusRole::Random);
        let fixed = role_indices(BusRole::Fixed);
        let slack = role_indices(BusRole::Slack)[0];
        let laplacian = laplacian_from(&case, &index_of)?;
        let pinv = pseudo_inverse(&laplacian);
        let incidence = incidence_from(&case, &index_of);
        Ok(Self {
            case,
            order,
            index_of,
            random,
            fixed,
            slack,
            laplacian,
            pinv,
            incidence,
        })
    }

    pub fn case(&self) -> &GridCase {
        &self.case
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    pub fn pseudo_inverse(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    pub fn incidence(&self) -> &DMatrix<f64> {
        &self.incidence
    }

    /// Internal index of a bus id.
    pub fn bus_index(&self, id: i64) -> Option<usize> {
        self.index_of.get(&id).copied()
    }

    fn bus(&self, k: usize) -> &Bus {
        &self.case.busses[self.order[k]]
    }

    pub fn num_random(&self) -> usize {
        self.random.len()
    }

    pub fn random_bus_ids(&self) -> Vec<i64> {
        self.random.iter().map(|&k| self.bus(k).id).collect()
    }

    pub fn eta_random(&self) -> Vec<f64> {
        self.random.iter().map(|&k| self.bus(k).eta).collect()
    }

    fn eta_fixed_total(&self) -> f64 {
        self.fixed.iter().map(|&k| self.bus(k).eta).sum()
    }

    pub fn assemble(&self) -> ConstraintSystem {
        let nr = self.random.len();
        let m = self.case.lines.len();
        let slack_id = self.bus(self.slack).id;
        let slack = self.bus(self.slack);
        let fixed_total = self.eta_fixed_total();

        // D(B^{•R} - B^{•S} 1_Rᵀ) and D(B^{•F} - B^{•S} 1_Fᵀ) η_F.
        let slack_col = self.pinv.column(self.slack).into_owned();
        let mut shifted_r = DMatrix::zeros(self.pinv.nrows(), nr);
        for (c, &k) in self.random.iter().enumerate() {
            shifted_r.set_column(c, &(self.pinv.column(k) - &slack_col));
        }
        let mut fixed_shift = DVector::zeros(self.pinv.nrows());
        for &k in &self.fixed {
            fixed_shift += (self.pinv.column(k) - &slack_col) * self.bus(k).eta;
        }
        let mut phase = &self.incidence * shifted_r;
        // Entries at round-off level would otherwise turn constant rows into
        // nearly flat random ones.
        let cutoff = self.order.len() as f64 * f64::EPSILON * phase.amax();
        phase.apply(|v| {
            if v.abs() <= cutoff {
                *v = 0.0
            }
        });
        let phase_offset = &self.incidence * fixed_shift;

        let mut gamma = Vec::with_capacity(2 * nr + 2 + 2 * m);
        let mut kappa = Vec::with_capacity(gamma.capacity());
        let mut labels = Vec::with_capacity(gamma.capacity());
        let unit = |c: usize, sign: f64| -> Vec<f64> {
            let mut v = vec![0.0; nr];
            v[c] = sign;
            v
        };
        for (c, &k) in self.random.iter().enumerate() {
            gamma.push(unit(c, 1.0));
            kappa.push(self.bus(k).upper());
            labels.push(RowLabel::BusUpper {
                bus: self.bus(k).id,
            });
        }
        for (c, &k) in self.random.iter().enumerate() {
            gamma.push(unit(c, -1.0));
            kappa.push(-self.bus(k).lower());
            labels.push(RowLabel::BusLower {
                bus: self.bus(k).id,
            });
        }
        gamma.push(vec![1.0; nr]);
        kappa.push(-slack.lower() - fixed_total);
        labels.push(RowLabel::SlackLower { bus: slack_id });
        gamma.push(vec![-1.0; nr]);
        kappa.push(slack.upper() + fixed_total);
        labels.push(RowLabel::SlackUpper { bus: slack_id });
        let theta_bar = self.case.theta_bar;
        for (l, line) in self.case.lines.iter().enumerate() {
            gamma.push(phase.row(l).iter().copied().collect());
            kappa.push(theta_bar - phase_offset[l]);
            labels.push(RowLabel::PhaseForward {
                line: l,
                from: line.from,
                to: line.to,
            });
        }
        for (l, line) in self.case.lines.iter().enumerate() {
            gamma.push(phase.row(l).iter().map(|v| -v).collect());
            kappa.push(theta_bar + phase_offset[l]);
            labels.push(RowLabel::PhaseBackward {
                line: l,
                from: line.from,
                to: line.to,
            });
        }
        ConstraintSystem {
            gamma,
            kappa,
            row_labels: labels,
            random_bus_ids: self.random_bus_ids(),
            eta_r: self.eta_random(),
            sigma: self.case.sigma_matrix(),
        }
    }

    /// All injections for a given `p_R`, with fixed busses at their means and
    /// the slack bus balancing the total.
    pub fn injections(&self, p_r: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.order.len()];
        for (&k, &v) in self.random.iter().zip(p_r) {
            p[k] = v;
        }
        for &k in &self.fixed {
            p[k] = self.bus(k).eta;
        }
        p[self.slack] = -p_r.iter().sum::<f64>() - self.eta_fixed_total();
        p
    }

    /// Solves for phases with `θ = B⁺p` and checks every limit directly.
    pub fn physical_check(&self, p_r: &[f64]) -> PhysicalCheck {
        let p = self.injections(p_r);
        let theta = &self.pinv * DVector::from_column_slice(&p);
        let mut margin = f64::INFINITY;
        for &k in self.random.iter().chain(std::iter::once(&self.slack)) {
            let bus = self.bus(k);
            margin = margin.min(bus.upper() - p[k]).min(p[k] - bus.lower());
        }
        for line in &self.case.lines {
            let diff = theta[self.index_of[&line.from]] - theta[self.index_of[&line.to]];
            margin = margin.min(self.case.theta_bar - diff.abs());
        }
        PhysicalCheck {
            injections: p,
            phases: theta.iter().copied().collect(),
            min_margin: margin,
        }
    }
}

pub fn build_laplacian(case: &GridCase) -> Result<DMatrix<f64>> {
    Ok(GridModel::new(case.clone())?.laplacian)
}

pub fn build_incidence(case: &GridCase) -> Result<DMatrix<f64>> {
    Ok(GridModel::new(case.clone())?.incidence)
}

pub fn assemble_constraints(case: &GridCase) -> Result<ConstraintSystem> {
    Ok(GridModel::new(case.clone())?.assemble())
}

fn laplacian_from(case: &GridCase, index_of: &HashMap<i64, usize>) -> Result<DMatrix<f64>> {
    let n = case.busses.len();
    let mut b = DMatrix::zeros(n, n);
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for line in &case.lines {
        let (i, j) = (index_of[&line.from], index_of[&line.to]);
        b[(i, j)] -= line.b;
        b[(j, i)] -= line.b;
        b[(i, i)] += line.b;
        b[(j, j)] += line.b;
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        parent[ri] = rj;
    }
    let components = (0..n).filter(|&i| find(&mut parent, i) == i).count();
    if components != 1 {
        return Err(AloeError::DisconnectedNetwork { components });
    }
    Ok(b)
}

fn incidence_from(case: &GridCase, index_of: &HashMap<i64, usize>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(case.lines.len(), case.busses.len());
    for (m, line) in case.lines.iter().enumerate() {
        d[(m, index_of[&line.from])] = 1.0;
        d[(m, index_of[&line.to])] = -1.0;
    }
    d
}

/// Moore–Penrose pseudo-inverse of a symmetric matrix through its
/// eigendecomposition, inverting eigenvalues above `N·ε·λ_max`.
pub fn pseudo_inverse(b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = b.nrows();
    let eig = b.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let tol = n as f64 * f64::EPSILON * lmax;
    let inv = eig
        .eigenvalues
        .map(|l| if l.abs() > tol { 1.0 / l } else { 0.0 });
    let v = &eig.eigenvectors;
    let p = v * DMatrix::from_diagonal(&inv) * v.transpose();
    (&p + p.transpose()) * 0.5
}

/// The grid as a whitened half-space problem; event `j` is the violation of
/// row `j` of the constraint system.
#[derive(Debug, Clone)]
pub struct GridProblem {
    pub problem: HalfSpaceProblem,
    pub system: ConstraintSystem,
    /// Rows whose value is deterministic at the mean; they carry probability 0.
    pub deterministic_rows: Vec<usize>,
    /// `p_R = η_R + Σ^{1/2} x`.
    pub sqrt_sigma: DMatrix<f64>,
}

impl GridProblem {
    pub fn to_injections(&self, x: &[f64]) -> Vec<f64> {
        let y = DVector::from_column_slice(&self.system.eta_r)
            + &self.sqrt_sigma * DVector::from_column_slice(x);
        y.iter().copied().collect()
    }
}

/// Whitens every row. Rows with zero variance are checked at the mean: a
/// violation there is reported as infeasible, otherwise the row gets
/// probability 0.
pub fn to_halfspace_problem(cs: &ConstraintSystem) -> Result<GridProblem> {
    let nr = cs.eta_r.len();
    let (rows, root) = whiten_rows(&cs.eta_r, &cs.sigma, &cs.gamma, &cs.kappa)?;
    let mut normals = Vec::with_capacity(rows.len() * nr);
    let mut taus = Vec::with_capacity(rows.len());
    let mut deterministic_rows = Vec::new();
    for (j, row) in rows.into_iter().enumerate() {
        match row {
            RowWhitening::Random { omega, tau, .. } => {
                normals.extend(omega);
                taus.push(tau);
            }
            RowWhitening::Deterministic { mean, .. } => {
                let bound = cs.kappa[j];
                if mean - bound > 1e-12 * (1.0 + bound.abs() + mean.abs()) {
                    return Err(AloeError::InfeasibleDeterministic {
                        label: cs.row_labels[j].to_string(),
                        value: mean,
                        bound,
                    });
                }
                deterministic_rows.push(j);
                let mut e = vec![0.0; nr];
                e[0] = 1.0;
                normals.extend(e);
                taus.push(f64::INFINITY);
            }
        }
    }
    Ok(GridProblem {
        problem: HalfSpaceProblem::from_flat(nr, normals, taus)?,
        system: cs.clone(),
        deterministic_rows,
        sqrt_sigma: root,
    })
}

/// Loads, assembles and whitens a case in one step.
pub fn grid_problem(case: &GridCase) -> Result<GridProblem> {
    to_halfspace_problem(&assemble_constraints(case)?)
}
