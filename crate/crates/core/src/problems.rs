//! Reproducible benchmark problem generators and loaders.
//!
//! Every generator is a pure function of its seed. An instance is plain
//! serializable data (JSON on disk, full float precision) from which
//! [`ProblemInstance::build`] constructs fresh oracles with a fresh ledger,
//! so repeated runs and parallel runs never share state. Each oracle carries
//! a hidden verifier with the exact analytic gradient.
//!
//! Instance zoo:
//!
//! * `lcqp` — indefinite quadratic objective, affine equality constraints,
//!   box `[-5, 5]ⁿ`. The spectrum of `Q` is pinned (smallest eigenvalue
//!   exactly `-ρ`), constraint rows are unit-normalized, and `b = A·x_feas`
//!   for an interior feasible point.
//! * `uscqp` — strongly convex quadratic, spectrum on `[μ, L]`, with the
//!   analytic minimizer stored in the instance.
//! * `logistic` — ℓ₂-regularized logistic regression; synthetic generator
//!   (planted hyperplane, 5% label noise) or a CSV loader (label first,
//!   features after).
//! * `sensor` — estimation-error trace objective
//!   `tr((I + Hᵀ(wwᵀ∘R⁻¹)H)⁻¹) + λ·1ᵀw` with binarity constraints
//!   `wᵢ² - wᵢ = 0` and box `[0, 1]`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ialm::{ConstrainedProblem, ConstraintConstants, ProblemConstants};
use crate::oracle::{BlackBoxOracle, QueryLedger};
use crate::prox::SeparableConvexTerm;

/// Default top eigenvalue of the `uscqp` spectrum.
pub const DEFAULT_USCQP_SMOOTHNESS: f64 = 10.0;
/// Default top eigenvalue of the `lcqp` spectrum.
pub const DEFAULT_LCQP_SMOOTHNESS: f64 = 100.0;
/// Feature scale of the synthetic logistic data.
const LOGISTIC_FEATURE_SCALE: f64 = 2.5;
const LOGISTIC_FLIP_PROBABILITY: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcqpData {
    pub n: usize,
    pub m: usize,
    pub rho: f64,
    pub l0: f64,
    pub q: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    pub x_feasible: Vec<f64>,
    /// Exact smoothness `‖A‖²` contributed by the quadratic penalty; tighter
    /// than the generic aggregate `Σ Bᵢ²`.
    pub penalty_smoothness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UscqpData {
    pub n: usize,
    pub mu: f64,
    pub l_smooth: f64,
    pub q: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    pub x_star: Vec<f64>,
    pub f_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticData {
    pub lambda: f64,
    /// Rows of features; the variable vector is `(w, b)` with dimension
    /// `features + 1`.
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorData {
    pub d: usize,
    pub lambda: f64,
    pub h: Vec<Vec<f64>>,
    /// The matrix `R⁻¹` (the noise covariance is its inverse; only the
    /// inverse enters the objective).
    pub r_inv: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemData {
    Lcqp(LcqpData),
    Uscqp(UscqpData),
    Logistic(LogisticData),
    Sensor(SensorData),
}

/// A named, seeded, fully serializable problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub name: String,
    pub seed: u64,
    pub data: ProblemData,
}

/// Oracles and metadata instantiated from a [`ProblemInstance`].
pub struct BuiltProblem {
    /// The problem with a fresh ledger; `c` is empty for unconstrained
    /// instances.
    pub problem: ConstrainedProblem<'static, f64>,
    /// Canonical starting point.
    pub x0: Vec<f64>,
    /// Strong convexity when the objective has one.
    pub mu: Option<f64>,
    pub x_star: Option<Vec<f64>>,
    pub f_star: Option<f64>,
}

impl ProblemInstance {
    pub fn dim(&self) -> usize {
        match &self.data {
            ProblemData::Lcqp(d) => d.n,
            ProblemData::Uscqp(d) => d.n,
            ProblemData::Logistic(d) => d.features.first().map_or(1, |r| r.len()) + 1,
            ProblemData::Sensor(d) => d.d,
        }
    }

    pub fn num_constraints(&self) -> usize {
        match &self.data {
            ProblemData::Lcqp(d) => d.m,
            ProblemData::Sensor(d) => d.d,
            _ => 0,
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let instance: ProblemInstance = serde_json::from_str(&text)?;
        instance.built_constants_check()?;
        Ok(instance)
    }

    fn built_constants_check(&self) -> Result<()> {
        self.build()?.problem.constants.validate()
    }

    /// Analytic curvature laws `(ρ̂, L̂)(β)` recommended for benchmark runs,
    /// when tighter than the generic constant aggregates.
    pub fn suggested_curvature(&self) -> Option<crate::ialm::CurvatureModel<f64>> {
        match &self.data {
            ProblemData::Lcqp(d) => Some(crate::ialm::CurvatureModel::Affine {
                rho_const: d.rho,
                rho_beta: 0.0,
                l_const: d.l0.max(d.rho),
                l_beta: d.penalty_smoothness,
            }),
            ProblemData::Sensor(_) => Some(crate::ialm::CurvatureModel::Affine {
                rho_const: 2.0,
                rho_beta: 0.5,
                l_const: 50.0,
                l_beta: 0.3,
            }),
            _ => None,
        }
    }

    /// Instantiates oracles (fresh ledger) from the stored data.
    pub fn build(&self) -> Result<BuiltProblem> {
        match &self.data {
            ProblemData::Lcqp(d) => build_lcqp(d),
            ProblemData::Uscqp(d) => build_uscqp(d),
            ProblemData::Logistic(d) => build_logistic(d),
            ProblemData::Sensor(d) => build_sensor(d),
        }
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Random orthogonal matrix: QR of a Gaussian matrix with the sign fix that
/// makes the factorization (and hence the draw) unique.
fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let gauss = DMatrix::from_fn(n, n, |_, _| standard_normal(rng));
    let qr = gauss.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Symmetric matrix with the given eigenvalues in a random orthogonal basis.
fn symmetric_with_spectrum(eigs: &[f64], rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = eigs.len();
    let u = random_orthogonal(n, rng);
    let lambda = DMatrix::from_diagonal(&DVector::from_column_slice(eigs));
    let m = &u * lambda * u.transpose();
    // symmetrize away the last bits of drift
    0.5 * (&m + m.transpose())
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn quadratic_value(q: &[Vec<f64>], c: &[f64], x: &[f64]) -> f64 {
    let mut val = 0.0;
    for (i, row) in q.iter().enumerate() {
        let mut qx = 0.0;
        for (j, &qij) in row.iter().enumerate() {
            qx += qij * x[j];
        }
        val += 0.5 * x[i] * qx + c[i] * x[i];
    }
    val
}

fn quadratic_gradient(q: &[Vec<f64>], c: &[f64], x: &[f64]) -> Vec<f64> {
    q.iter()
        .zip(c)
        .map(|(row, &ci)| row.iter().zip(x).map(|(&qij, &xj)| qij * xj).sum::<f64>() + ci)
        .collect()
}

/// Nonconvex linearly-constrained quadratic program at the default spectrum
/// top.
pub fn gen_lcqp(n: usize, m: usize, rho: f64, seed: u64) -> Result<ProblemInstance> {
    gen_lcqp_with(n, m, rho, DEFAULT_LCQP_SMOOTHNESS, seed)
}

/// Nonconvex LCQP with spectrum on `[-rho, l0]` (both endpoints attained).
pub fn gen_lcqp_with(n: usize, m: usize, rho: f64, l0: f64, seed: u64) -> Result<ProblemInstance> {
    if n <= m || m == 0 {
        return Err(Error::invalid("need n > m ≥ 1"));
    }
    if !(rho > 0.0) || !(l0 > 0.0) {
        return Err(Error::invalid("curvature constants must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // the negative curvature -rho is planted on a random coordinate; the
    // remaining spectrum sits in [l0/4, l0] so the proximal path has no
    // near-singular directions to crawl along
    let neg_coord = rng.random_range(0..n);
    let mut eigs = vec![0.0; n - 1];
    eigs[n - 2] = l0;
    let floor = 0.25 * l0;
    for e in eigs.iter_mut().take(n - 2) {
        *e = rng.random_range(floor..l0);
    }
    let q_pos = symmetric_with_spectrum(&eigs, &mut rng);
    // embed: row/column neg_coord is -rho·e, the rest is the PD block
    let mut q = DMatrix::zeros(n, n);
    {
        let keep: Vec<usize> = (0..n).filter(|&j| j != neg_coord).collect();
        for (bi, &i) in keep.iter().enumerate() {
            for (bj, &j) in keep.iter().enumerate() {
                q[(i, j)] = q_pos[(bi, bj)];
            }
        }
        q[(neg_coord, neg_coord)] = -rho;
    }
    let c: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();

    let mut a = DMatrix::zeros(m, n);
    let mut tries = 0;
    loop {
        for i in 0..m {
            for j in 0..n {
                a[(i, j)] = standard_normal(&mut rng);
            }
        }
        // rows avoid the negative-curvature coordinate (so the equality
        // constraints do not load the saddle escape) and are unit-norm (so
        // the constraint bounds are 1 and the penalty smoothness ‖A‖² stays
        // O(1))
        for i in 0..m {
            a[(i, neg_coord)] = 0.0;
            let norm = a.row(i).norm();
            if norm > 0.0 {
                for j in 0..n {
                    a[(i, j)] /= norm;
                }
            }
        }
        if a.rank(1e-10) == m {
            break;
        }
        tries += 1;
        if tries >= 3 {
            return Err(Error::Generation(format!(
                "constraint matrix rank-deficient after {tries} draws"
            )));
        }
    }
    // a feasible point near the flipped-spectrum reference minimizer keeps
    // the equality multipliers O(1) regardless of the spectrum stiffness
    let mut q_abs = q.clone();
    q_abs[(neg_coord, neg_coord)] = rho;
    let c_vec = DVector::from_column_slice(&c);
    let x_ref = q_abs
        .lu()
        .solve(&(-&c_vec))
        .ok_or_else(|| Error::Generation("singular reference system".into()))?;
    let x_feas: Vec<f64> = x_ref
        .iter()
        .map(|&v| (v + 0.01 * standard_normal(&mut rng)).clamp(-4.0, 4.0))
        .collect();
    let b = &a * DVector::from_column_slice(&x_feas);
    let spectral = a.clone().svd(false, false).singular_values[0];

    Ok(ProblemInstance {
        name: format!("lcqp-n{n}-m{m}"),
        seed,
        data: ProblemData::Lcqp(LcqpData {
            n,
            m,
            rho,
            l0,
            q: to_rows(&q),
            c,
            a: to_rows(&a),
            b: b.iter().copied().collect(),
            lower: -5.0,
            upper: 5.0,
            x_feasible: x_feas,
            penalty_smoothness: spectral * spectral,
        }),
    })
}

fn build_lcqp(data: &LcqpData) -> Result<BuiltProblem> {
    let ledger = QueryLedger::new_handle();
    let n = data.n;
    let (qv, cv) = (data.q.clone(), data.c.clone());
    let (qg, cg) = (data.q.clone(), data.c.clone());
    let g = BlackBoxOracle::with_ledger(n, move |x: &[f64]| quadratic_value(&qv, &cv, x), ledger.clone())
        .with_verifier(move |x: &[f64]| quadratic_gradient(&qg, &cg, x));
    let mut constraints = Vec::with_capacity(data.m);
    let mut per_constraint = Vec::with_capacity(data.m);
    for i in 0..data.m {
        let row = data.a[i].clone();
        let row_grad = row.clone();
        let rhs = data.b[i];
        let oracle = BlackBoxOracle::with_ledger(
            n,
            move |x: &[f64]| row.iter().zip(x).map(|(&aj, &xj)| aj * xj).sum::<f64>() - rhs,
            ledger.clone(),
        )
        .with_verifier(move |_x: &[f64]| row_grad.clone());
        constraints.push(oracle);
        per_constraint.push(ConstraintConstants {
            rho: 0.0,
            l_smooth: 0.0,
            bound: data.a[i].iter().map(|v| v * v).sum::<f64>().sqrt(),
        });
    }
    let h = SeparableConvexTerm::uniform_box(n, data.lower, data.upper);
    // B₀ over the box: |f₀| ≤ (L₀/2)‖x‖² + ‖c‖‖x‖ and ‖∇g‖ ≤ L₀‖x‖ + ‖c‖
    let x_norm_max = data.upper.abs().max(data.lower.abs()) * (n as f64).sqrt();
    let c_norm = data.c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let l0_eff = data.l0.max(data.rho);
    let b0 = (0.5 * l0_eff * x_norm_max * x_norm_max + c_norm * x_norm_max)
        .max(l0_eff * x_norm_max + c_norm);
    let b_c = 1.0f64.max((data.m as f64).sqrt());
    let constants = ProblemConstants::new(data.rho, l0_eff, b0, b_c, per_constraint, 0.0, 2);
    Ok(BuiltProblem {
        problem: ConstrainedProblem::new(g, h, constraints, constants)?,
        x0: data.x_feasible.clone(),
        mu: None,
        x_star: None,
        f_star: None,
    })
}

/// Unconstrained strongly-convex quadratic at the default spectrum top.
pub fn gen_uscqp(n: usize, mu: f64, seed: u64) -> Result<ProblemInstance> {
    gen_uscqp_with(n, mu, DEFAULT_USCQP_SMOOTHNESS, seed)
}

/// Unconstrained strongly-convex quadratic with spectrum on `[mu, l]`.
pub fn gen_uscqp_with(n: usize, mu: f64, l: f64, seed: u64) -> Result<ProblemInstance> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if !(mu > 0.0) || l < mu {
        return Err(Error::invalid("need 0 < mu ≤ l"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eigs = vec![0.0; n];
    eigs[0] = mu;
    eigs[n - 1] = l;
    for e in eigs.iter_mut().take(n - 1).skip(1) {
        *e = rng.random_range(mu..=l);
    }
    if n == 1 {
        eigs[0] = mu;
    }
    let q = symmetric_with_spectrum(&eigs, &mut rng);
    let c: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
    let c_vec = DVector::from_column_slice(&c);
    let x_star = q
        .clone()
        .lu()
        .solve(&(-&c_vec))
        .ok_or_else(|| Error::Generation("singular quadratic".into()))?;
    let f_star = 0.5 * x_star.dot(&(&q * &x_star)) + c_vec.dot(&x_star);
    Ok(ProblemInstance {
        name: format!("uscqp-n{n}"),
        seed,
        data: ProblemData::Uscqp(UscqpData {
            n,
            mu,
            l_smooth: l,
            q: to_rows(&q),
            c,
            x_star: x_star.iter().copied().collect(),
            f_star,
        }),
    })
}

fn build_uscqp(data: &UscqpData) -> Result<BuiltProblem> {
    let ledger = QueryLedger::new_handle();
    let n = data.n;
    let (qv, cv) = (data.q.clone(), data.c.clone());
    let (qg, cg) = (data.q.clone(), data.c.clone());
    let g = BlackBoxOracle::with_ledger(n, move |x: &[f64]| quadratic_value(&qv, &cv, x), ledger)
        .with_verifier(move |x: &[f64]| quadratic_gradient(&qg, &cg, x));
    let h = SeparableConvexTerm::zero(n);
    let constants = ProblemConstants::new(0.0, data.l_smooth, 0.0, 0.0, vec![], 0.0, 2);
    Ok(BuiltProblem {
        problem: ConstrainedProblem::new(g, h, vec![], constants)?,
        x0: vec![0.0; n],
        mu: Some(data.mu),
        x_star: Some(data.x_star.clone()),
        f_star: Some(data.f_star),
    })
}

/// Synthetic logistic regression: Gaussian features, labels from a planted
/// hyperplane with 5% flips.
pub fn gen_logistic(n_samples: usize, n_features: usize, lambda: f64, seed: u64) -> Result<ProblemInstance> {
    if n_samples == 0 || n_features == 0 {
        return Err(Error::invalid("need at least one sample and one feature"));
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid("regularization weight must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plane: Vec<f64> = (0..n_features).map(|_| standard_normal(&mut rng)).collect();
    let intercept = 0.1 * standard_normal(&mut rng);
    let mut features = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let row: Vec<f64> = (0..n_features)
            .map(|_| LOGISTIC_FEATURE_SCALE * standard_normal(&mut rng))
            .collect();
        let margin: f64 = row.iter().zip(&plane).map(|(&x, &w)| x * w).sum::<f64>() + intercept;
        let mut label = if margin >= 0.0 { 1.0 } else { -1.0 };
        if rng.random_range(0.0..1.0) < LOGISTIC_FLIP_PROBABILITY {
            label = -label;
        }
        features.push(row);
        labels.push(label);
    }
    Ok(ProblemInstance {
        name: format!("logistic-N{n_samples}-d{}", n_features + 1),
        seed,
        data: ProblemData::Logistic(LogisticData {
            lambda,
            features,
            labels,
        }),
    })
}

/// Loads a logistic regression problem from CSV (label in the first column,
/// features after), sampling `n_rows` rows at random when fewer than the
/// file provides.
pub fn load_logistic(
    path: &std::path::Path,
    lambda: f64,
    n_rows: usize,
    seed: u64,
    has_header: bool,
) -> Result<ProblemInstance> {
    let text = std::fs::read_to_string(path)?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if idx == 0 && has_header {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let label_text = fields.next().unwrap_or("").trim();
        let label: f64 = label_text.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("bad label {label_text:?}"),
        })?;
        if label != 1.0 && label != -1.0 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("label must be +1 or -1, got {label}"),
            });
        }
        let row: Vec<f64> = fields
            .enumerate()
            .map(|(col, f)| {
                f.trim().parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("bad feature in column {}", col + 2),
                })
            })
            .collect::<Result<_>>()?;
        if let Some(w) = width {
            if row.len() != w {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected {w} features, got {}", row.len()),
                });
            }
        } else {
            if row.is_empty() {
                return Err(Error::Parse {
                    line: lineno,
                    message: "no feature columns".into(),
                });
            }
            width = Some(row.len());
        }
        features.push(row);
        labels.push(label);
    }
    if features.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no data rows".into(),
        });
    }
    if n_rows > features.len() {
        return Err(Error::invalid(format!(
            "requested {n_rows} rows, file has {}",
            features.len()
        )));
    }
    // sample without replacement, deterministically per seed
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..features.len()).collect();
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    order.truncate(n_rows);
    order.sort_unstable();
    let features: Vec<Vec<f64>> = order.iter().map(|&i| features[i].clone()).collect();
    let labels: Vec<f64> = order.iter().map(|&i| labels[i]).collect();
    Ok(ProblemInstance {
        name: format!("logistic-file-N{n_rows}"),
        seed,
        data: ProblemData::Logistic(LogisticData {
            lambda,
            features,
            labels,
        }),
    })
}

fn softplus(t: f64) -> f64 {
    // ln(1 + e^t), stable for both signs
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn logistic_sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn build_logistic(data: &LogisticData) -> Result<BuiltProblem> {
    let n = data.features.len();
    let n_features = data.features[0].len();
    let d = n_features + 1;
    let lambda = data.lambda;
    let ledger = QueryLedger::new_handle();
    let (fv, lv) = (data.features.clone(), data.labels.clone());
    let (fg, lg) = (data.features.clone(), data.labels.clone());
    let g = BlackBoxOracle::with_ledger(
        d,
        move |x: &[f64]| {
            let (w, b) = x.split_at(n_features);
            let mut loss = 0.0;
            for (row, &y) in fv.iter().zip(&lv) {
                let t: f64 = row.iter().zip(w).map(|(&xi, &wi)| xi * wi).sum::<f64>() + b[0];
                loss += softplus(-y * t);
            }
            loss / n as f64
                + 0.5 * lambda * (w.iter().map(|v| v * v).sum::<f64>() + b[0] * b[0])
        },
        ledger,
    )
    .with_verifier(move |x: &[f64]| {
        let (w, b) = x.split_at(n_features);
        let mut grad = vec![0.0; n_features + 1];
        for (row, &y) in fg.iter().zip(&lg) {
            let t: f64 = row.iter().zip(w).map(|(&xi, &wi)| xi * wi).sum::<f64>() + b[0];
            let coeff = -y * logistic_sigmoid(-y * t) / n as f64;
            for (gi, &xi) in grad.iter_mut().zip(row) {
                *gi += coeff * xi;
            }
            grad[n_features] += coeff;
        }
        for (gi, &wi) in grad.iter_mut().zip(w) {
            *gi += lambda * wi;
        }
        grad[n_features] += lambda * b[0];
        grad
    });
    let h = SeparableConvexTerm::zero(d);
    // L = λ + ‖(1/N) X̃ᵀX̃‖ / 4 with the intercept column appended
    let xt = DMatrix::from_fn(n, d, |i, j| {
        if j < n_features {
            data.features[i][j]
        } else {
            1.0
        }
    });
    let second_moment = xt.transpose() * &xt / n as f64;
    let spectral = second_moment
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let l_smooth = lambda + 0.25 * spectral;
    let constants = ProblemConstants::new(0.0, l_smooth, 0.0, 0.0, vec![], 0.0, 2);
    Ok(BuiltProblem {
        problem: ConstrainedProblem::new(g, h, vec![], constants)?,
        x0: vec![0.0; d],
        mu: Some(lambda),
        x_star: None,
        f_star: None,
    })
}

/// Sensor-activation problem: symmetric `H` with entries from `U(0,1)`,
/// `R⁻¹` symmetric with entries from `U(0, 1e-3)`, unit source statistics.
pub fn gen_sensor(d: usize, lambda: f64, seed: u64) -> Result<ProblemInstance> {
    if d < 2 {
        return Err(Error::invalid("need at least two sensors"));
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid("activation weight must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h_raw = DMatrix::from_fn(d, d, |_, _| rng.random_range(0.0..1.0));
    let h = 0.5 * (&h_raw + h_raw.transpose());
    let r_raw = DMatrix::from_fn(d, d, |_, _| rng.random_range(0.0..1e-3));
    let r_inv = 0.5 * (&r_raw + r_raw.transpose());
    Ok(ProblemInstance {
        name: format!("sensor-d{d}"),
        seed,
        data: ProblemData::Sensor(SensorData {
            d,
            lambda,
            h: to_rows(&h),
            r_inv: to_rows(&r_inv),
        }),
    })
}

/// `M(w) = I + Hᵀ(wwᵀ∘R⁻¹)H`, computed as `I + BᵀR⁻¹B` with `B = diag(w)H`.
fn sensor_matrix(h: &DMatrix<f64>, r_inv: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let d = w.len();
    let mut b = h.clone();
    for i in 0..d {
        for j in 0..d {
            b[(i, j)] *= w[i];
        }
    }
    let mut m = b.transpose() * (r_inv * &b);
    for i in 0..d {
        m[(i, i)] += 1.0;
    }
    m
}

fn build_sensor(data: &SensorData) -> Result<BuiltProblem> {
    let d = data.d;
    let lambda = data.lambda;
    let ledger = QueryLedger::new_handle();
    let h_mat = DMatrix::from_fn(d, d, |i, j| data.h[i][j]);
    let r_inv = DMatrix::from_fn(d, d, |i, j| data.r_inv[i][j]);

    let (h_v, r_v) = (h_mat.clone(), r_inv.clone());
    let g = BlackBoxOracle::with_ledger(
        d,
        move |w: &[f64]| {
            let m = sensor_matrix(&h_v, &r_v, w);
            let trace_inv = match m.clone().cholesky() {
                Some(chol) => chol.inverse().trace(),
                None => match m.try_inverse() {
                    Some(inv) => inv.trace(),
                    None => return f64::NAN,
                },
            };
            trace_inv + lambda * w.iter().sum::<f64>()
        },
        ledger.clone(),
    )
    .with_verifier(move |w: &[f64]| {
        // ∂/∂w_k tr(M⁻¹) = -2 (H M⁻² Bᵀ R⁻¹)_kk with B = diag(w)H
        let m = sensor_matrix(&h_mat, &r_inv, w);
        let m_inv = match m.clone().cholesky() {
            Some(chol) => chol.inverse(),
            None => match m.try_inverse() {
                Some(inv) => inv,
                None => return vec![f64::NAN; d],
            },
        };
        let mut b = h_mat.clone();
        for i in 0..d {
            for j in 0..d {
                b[(i, j)] *= w[i];
            }
        }
        let m_inv2 = &m_inv * &m_inv;
        let g_mat = &h_mat * m_inv2 * b.transpose() * &r_inv;
        (0..d).map(|k| -2.0 * g_mat[(k, k)] + lambda).collect()
    });

    let mut constraints = Vec::with_capacity(d);
    let mut per_constraint = Vec::with_capacity(d);
    for i in 0..d {
        let oracle = BlackBoxOracle::with_ledger(
            d,
            move |w: &[f64]| w[i] * w[i] - w[i],
            ledger.clone(),
        )
        .with_verifier(move |w: &[f64]| {
            let mut grad = vec![0.0; d];
            grad[i] = 2.0 * w[i] - 1.0;
            grad
        });
        constraints.push(oracle);
        // over [0,1]: |wᵢ² - wᵢ| ≤ 1/4 and |2wᵢ - 1| ≤ 1
        per_constraint.push(ConstraintConstants {
            rho: 2.0,
            l_smooth: 2.0,
            bound: 1.0,
        });
    }
    let h_term = SeparableConvexTerm::uniform_box(d, 0.0, 1.0);
    // objective curvature over the box is not available in closed form;
    // benchmark runs supply hand-tuned affine laws instead
    let constants = ProblemConstants::new(50.0, 50.0, 0.0, 0.0, per_constraint, 0.0, 2);
    Ok(BuiltProblem {
        problem: ConstrainedProblem::new(g, h_term, constraints, constants)?,
        x0: vec![0.5; d],
        mu: None,
        x_star: None,
        f_star: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{estimate_full_gradient, stencil_coefficients};

    fn central_diff(oracle: &BlackBoxOracle<'_, f64>, x: &[f64], a: f64) -> Vec<f64> {
        let spec = stencil_coefficients(2, a).unwrap();
        estimate_full_gradient(oracle, x, &spec).unwrap()
    }

    fn check_verifier(built: &BuiltProblem, points: usize, seed: u64, tol: f64, radius: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = built.problem.dim();
        for _ in 0..points {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..0.95)).collect();
            let exact = built.problem.g.true_gradient(&x).unwrap();
            let numeric = central_diff(&built.problem.g, &x, radius);
            for (e, n) in exact.iter().zip(&numeric) {
                assert!(
                    (e - n).abs() < tol,
                    "verifier vs central difference: {e} vs {n}"
                );
            }
        }
    }

    #[test]
    fn lcqp_construction_invariants() {
        let inst = gen_lcqp(12, 3, 1.0, 5).unwrap();
        let built = inst.build().unwrap();
        let data = match &inst.data {
            ProblemData::Lcqp(d) => d,
            _ => unreachable!(),
        };
        // b = A x_feas exactly
        let c_at_feas = built.problem.constraint_values(&data.x_feasible).unwrap();
        assert!(c_at_feas.iter().all(|v| v.abs() < 1e-12));
        // interior feasible point
        assert!(data.x_feasible.iter().all(|&v| v > -5.0 && v < 5.0));
        // smallest eigenvalue of Q is exactly -rho
        let q = DMatrix::from_fn(12, 12, |i, j| data.q[i][j]);
        let min_eig = q
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        assert!((min_eig + 1.0).abs() < 1e-10, "min eig {min_eig}");
        // unit constraint rows recorded as the bounds
        for cc in &built.problem.constants.per_constraint {
            assert!((cc.bound - 1.0).abs() < 1e-12);
        }
        built.problem.constants.validate().unwrap();
        // affine constraints: rho_c = 0
        assert_eq!(built.problem.constants.rho_c, 0.0);
    }

    #[test]
    fn lcqp_is_deterministic_per_seed() {
        let a = gen_lcqp(10, 2, 1.0, 9).unwrap();
        let b = gen_lcqp(10, 2, 1.0, 9).unwrap();
        assert_eq!(a, b);
        let c = gen_lcqp(10, 2, 1.0, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uscqp_minimizer_is_stationary() {
        let inst = gen_uscqp(20, 1.0, 3).unwrap();
        let built = inst.build().unwrap();
        let x_star = built.x_star.clone().unwrap();
        let grad = built.problem.g.true_gradient(&x_star).unwrap();
        let norm: f64 = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm <= 1e-10, "‖Qx*+c‖ = {norm}");
        // f_star matches a direct evaluation
        let value = built.problem.g.eval(&x_star).unwrap();
        assert!((value - built.f_star.unwrap()).abs() < 1e-10);
    }

    #[test]
    fn uscqp_identity_case() {
        let inst = gen_uscqp_with(4, 2.0, 2.0, 8).unwrap();
        let data = match &inst.data {
            ProblemData::Uscqp(d) => d,
            _ => unreachable!(),
        };
        // spectrum [μ, μ] forces Q = μI, so x* = -c/μ
        for (i, row) in data.q.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let expect = if i == j { 2.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-12);
            }
        }
        for (xs, c) in data.x_star.iter().zip(&data.c) {
            assert!((xs + c / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn logistic_loss_at_zero_is_log_two() {
        let inst = gen_logistic(50, 7, 1.0, 21).unwrap();
        let built = inst.build().unwrap();
        let zero = vec![0.0; built.problem.dim()];
        let loss = built.problem.g.eval(&zero).unwrap();
        assert!((loss - (2.0f64).ln()).abs() < 1e-12, "loss {loss}");
    }

    #[test]
    fn logistic_verifier_matches_finite_differences() {
        let inst = gen_logistic(40, 6, 1.0, 2).unwrap();
        let built = inst.build().unwrap();
        check_verifier(&built, 5, 77, 1e-6, 1e-5);
    }

    #[test]
    fn sensor_known_values() {
        let d = 10;
        let inst = gen_sensor(d, 0.5, 4).unwrap();
        let built = inst.build().unwrap();
        // w = 0: the information term vanishes, objective = tr(I) = d
        let zero = vec![0.0; d];
        let at_zero = built.problem.g.eval(&zero).unwrap();
        assert!((at_zero - d as f64).abs() < 1e-9, "got {at_zero}");
        // binary w: every constraint is exactly zero
        let mut w = vec![0.0; d];
        for i in (0..d).step_by(2) {
            w[i] = 1.0;
        }
        let c_vals = built.problem.constraint_values(&w).unwrap();
        assert!(c_vals.iter().all(|v| v.abs() < 1e-15));
        // infeasible interior point
        let half = vec![0.5; d];
        let c_half = built.problem.constraint_values(&half).unwrap();
        assert!(c_half.iter().all(|&v| (v + 0.25).abs() < 1e-15));
    }

    #[test]
    fn sensor_verifier_matches_finite_differences() {
        let inst = gen_sensor(8, 0.5, 11).unwrap();
        let built = inst.build().unwrap();
        check_verifier(&built, 5, 13, 1e-5, 1e-5);
        // constraint gradients too
        let w = vec![0.3; 8];
        for ci in &built.problem.c {
            let exact = ci.true_gradient(&w).unwrap();
            let numeric = central_diff(ci, &w, 1e-6);
            for (e, n) in exact.iter().zip(&numeric) {
                assert!((e - n).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn instance_files_round_trip_bit_exact() {
        let dir = std::env::temp_dir().join(format!("zoal-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        for inst in [
            gen_lcqp(6, 2, 1.0, 1).unwrap(),
            gen_uscqp(5, 1.0, 2).unwrap(),
            gen_logistic(10, 4, 1.0, 3).unwrap(),
            gen_sensor(4, 0.5, 4).unwrap(),
        ] {
            let path = dir.join(format!("{}.json", inst.name));
            inst.save(&path).unwrap();
            let loaded = ProblemInstance::load(&path).unwrap();
            assert_eq!(inst, loaded);
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn logistic_csv_round_trip_and_errors() {
        let dir = std::env::temp_dir().join(format!("zoal-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let good = dir.join("good.csv");
        std::fs::write(&good, "label,f1,f2\n1,0.5,1.5\n-1,2.0,-0.25\n1,0,3\n").unwrap();
        let inst = load_logistic(&good, 1.0, 2, 5, true).unwrap();
        match &inst.data {
            ProblemData::Logistic(d) => {
                assert_eq!(d.features.len(), 2);
                assert_eq!(d.features[0].len(), 2);
            }
            _ => unreachable!(),
        }
        let bad_label = dir.join("bad_label.csv");
        std::fs::write(&bad_label, "1,0.5\n2,1.0\n").unwrap();
        match load_logistic(&bad_label, 1.0, 1, 0, false) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("expected parse error at line 2, got {other:?}"),
        }
        let bad_field = dir.join("bad_field.csv");
        std::fs::write(&bad_field, "1,0.5\n-1,zzz\n").unwrap();
        assert!(matches!(
            load_logistic(&bad_field, 1.0, 1, 0, false),
            Err(Error::Parse { line: 2, .. })
        ));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn generators_validate_arguments() {
        assert!(gen_lcqp(5, 5, 1.0, 0).is_err());
        assert!(gen_lcqp(5, 0, 1.0, 0).is_err());
        assert!(gen_uscqp(0, 1.0, 0).is_err());
        assert!(gen_uscqp_with(5, 2.0, 1.0, 0).is_err());
        assert!(gen_sensor(1, 0.5, 0).is_err());
        assert!(gen_logistic(0, 3, 1.0, 0).is_err());
    }
}
