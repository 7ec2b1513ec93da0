//! Matrix factorization with autoregressive factor dynamics.
//!
//! The objective being minimized over factors Z (T×d), loadings F (d×n) and
//! AR coefficients phi (d×p) is
//!
//! ```text
//!   1/(2|Ω|) ‖P_Ω(Y − Z F)‖²
//! + λ_F/2 · R_F(F)
//! + λ_φ/(2 d p) ‖φ‖²
//! + λ_Z/2 · [ (1−η_Z)/(T d) ‖Z‖²
//!           + η_Z/((T−p) d) Σ_j Σ_{t>p} (Z_tj − Σ_i φ_ji Z_{t−i,j})² ]
//! ```
//!
//! with `R_F(F) = 1/(dn) ‖F‖²`, or, when a column-similarity matrix A is
//! supplied,
//!
//! ```text
//!   R_F(F) = (1−η_F)/(dn) ‖F‖² + η_F/(dn) ‖F (I − Aᵀ D⁻¹)‖²
//! ```
//!
//! where D is the degree matrix of the graph behind A. Minimization is block
//! coordinate descent with closed-form solves: a d×d ridge system per
//! loading column, a d×d system per factor row (AR terms included on both
//! sides of each row), and a p×p ridge system per factor's AR coefficients.
//! Every block solve is exact, so the objective never increases.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::math::{solve_spd, standard_normal, Matrix};
use crate::series::SeriesMatrix;
use crate::{Error, Result};

/// Hyperparameters; see the module doc for where each one lands.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrmfHyper {
    /// Number of latent factors.
    pub d: usize,
    /// Autoregression order on the factors.
    pub p: usize,
    pub lambda_f: f64,
    pub lambda_z: f64,
    pub lambda_phi: f64,
    /// Balance between the ridge and AR penalties on Z, in [0, 1].
    pub eta_z: f64,
    /// Balance between the ridge and graph penalties on F, in [0, 1].
    pub eta_f: f64,
    pub max_sweeps: usize,
    /// Stop when the relative objective improvement falls below this.
    pub tol: f64,
}

impl Default for TrmfHyper {
    fn default() -> Self {
        TrmfHyper {
            d: 8,
            p: 4,
            lambda_f: 0.5,
            lambda_z: 0.5,
            lambda_phi: 0.1,
            eta_z: 0.9,
            eta_f: 0.0,
            max_sweeps: 25,
            tol: 1e-4,
        }
    }
}

impl TrmfHyper {
    fn validate(&self, periods: usize) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("d must be >= 1".into()));
        }
        if self.p == 0 || self.p >= periods {
            return Err(Error::Config(format!(
                "AR order p = {} must satisfy 1 <= p < T = {periods}",
                self.p
            )));
        }
        for (name, v) in [
            ("lambda_f", self.lambda_f),
            ("lambda_z", self.lambda_z),
            ("lambda_phi", self.lambda_phi),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be non-negative")));
            }
        }
        for (name, v) in [("eta_z", self.eta_z), ("eta_f", self.eta_f)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Fitted model: factors, loadings, AR coefficients, and the objective trace
/// recorded after initialization and after every sweep.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrmfModel {
    /// T×d factor series.
    pub factors: Matrix,
    /// d×n loadings.
    pub loadings: Matrix,
    /// d×p AR coefficients, row j governing factor j.
    pub ar_coeffs: Matrix,
    pub hyper: TrmfHyper,
    pub objective_trace: Vec<f64>,
    pub seed: u64,
}

impl TrmfModel {
    pub fn periods(&self) -> usize {
        self.factors.rows()
    }

    pub fn n_series(&self) -> usize {
        self.loadings.cols()
    }

    /// Reconstruction Z·F restricted to one column.
    pub fn reconstruct_col(&self, i: usize) -> Vec<f64> {
        let d = self.hyper.d;
        (0..self.periods())
            .map(|t| {
                (0..d)
                    .map(|j| self.factors.get(t, j) * self.loadings.get(j, i))
                    .sum()
            })
            .collect()
    }
}

struct Scales {
    recon: f64,
    f_ridge: f64,
    z_ridge: f64,
    ar: f64,
    phi_ridge: f64,
    f_graph: f64,
}

fn scales(hyper: &TrmfHyper, periods: usize, n: usize, n_obs: usize, graph: bool) -> Scales {
    let d = hyper.d as f64;
    let t = periods as f64;
    let nn = n as f64;
    let ridge_share = if graph { 1.0 - hyper.eta_f } else { 1.0 };
    Scales {
        recon: 1.0 / n_obs as f64,
        f_ridge: hyper.lambda_f * ridge_share / (d * nn),
        z_ridge: hyper.lambda_z * (1.0 - hyper.eta_z) / (t * d),
        ar: hyper.lambda_z * hyper.eta_z / ((t - hyper.p as f64) * d),
        phi_ridge: hyper.lambda_phi / (d * hyper.p as f64),
        f_graph: hyper.lambda_f * hyper.eta_f / (d * nn),
    }
}

/// Evaluates the objective for the given parameters; this is the quantity
/// recorded in `objective_trace`.
pub fn trmf_objective(
    y: &SeriesMatrix,
    factors: &Matrix,
    loadings: &Matrix,
    ar_coeffs: &Matrix,
    hyper: &TrmfHyper,
    similarity: Option<&Matrix>,
) -> f64 {
    let (periods, n) = (y.periods(), y.n_series());
    let s = scales(hyper, periods, n, y.observed_count(), similarity.is_some());
    let d = hyper.d;
    let p = hyper.p;

    let mut recon = 0.0;
    for i in 0..n {
        let col = y.col(i);
        let mask = y.col_mask(i);
        for t in 0..periods {
            if mask[t] {
                let mut pred = 0.0;
                for j in 0..d {
                    pred += factors.get(t, j) * loadings.get(j, i);
                }
                let e = col[t] - pred;
                recon += e * e;
            }
        }
    }

    let f_sq: f64 = loadings.data().iter().map(|v| v * v).sum();
    let z_sq: f64 = factors.data().iter().map(|v| v * v).sum();
    let phi_sq: f64 = ar_coeffs.data().iter().map(|v| v * v).sum();

    let mut ar_ss = 0.0;
    for j in 0..d {
        for t in p..periods {
            let mut pred = 0.0;
            for i in 1..=p {
                pred += ar_coeffs.get(j, i - 1) * factors.get(t - i, j);
            }
            let e = factors.get(t, j) - pred;
            ar_ss += e * e;
        }
    }

    let mut obj = 0.5 * s.recon * recon
        + 0.5 * s.f_ridge * f_sq
        + 0.5 * s.phi_ridge * phi_sq
        + 0.5 * s.z_ridge * z_sq
        + 0.5 * s.ar * ar_ss;

    if let Some(a) = similarity {
        // ‖F·B‖² with B = I − Aᵀ D⁻¹.
        let b = graph_operator(a).expect("validated earlier");
        let mut graph_sq = 0.0;
        for j in 0..d {
            for c in 0..n {
                let mut v = 0.0;
                for i in 0..n {
                    v += loadings.get(j, i) * b.get(i, c);
                }
                graph_sq += v * v;
            }
        }
        obj += 0.5 * s.f_graph * graph_sq;
    }
    obj
}

/// B = I − Aᵀ D⁻¹ where D_ii is the degree (row sum) of A.
fn graph_operator(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Shape("similarity matrix must be square".into()));
    }
    let mut b = Matrix::zeros(n, n);
    let mut degrees = vec![0.0f64; n];
    for i in 0..n {
        let mut deg = 0.0;
        for j in 0..n {
            let v = a.get(i, j);
            if v < 0.0 || !v.is_finite() {
                return Err(Error::Data("similarity entries must be >= 0".into()));
            }
            deg += v;
        }
        if deg <= 0.0 {
            return Err(Error::Data(format!("similarity row {i} has zero degree")));
        }
        degrees[i] = deg;
    }
    for i in 0..n {
        for c in 0..n {
            let identity = if i == c { 1.0 } else { 0.0 };
            b.set(i, c, identity - a.get(c, i) / degrees[c]);
        }
    }
    Ok(b)
}

/// Fits the factorization by block coordinate descent from a seeded Gaussian
/// initialization (sigma = 0.1) with phi = 0, so the first sweep behaves like
/// plain regularized matrix factorization.
pub fn trmf_fit(y: &SeriesMatrix, hyper: &TrmfHyper, seed: u64) -> Result<TrmfModel> {
    trmf_fit_with_graph(y, hyper, None, seed)
}

/// As [`trmf_fit`], with an optional n×n column-similarity matrix switching
/// the loadings regularizer to its graph form.
pub fn trmf_fit_with_graph(
    y: &SeriesMatrix,
    hyper: &TrmfHyper,
    similarity: Option<&Matrix>,
    seed: u64,
) -> Result<TrmfModel> {
    let (periods, n) = (y.periods(), y.n_series());
    hyper.validate(periods)?;
    for i in 0..n {
        let obs = y.observed_count_col(i);
        if obs < hyper.p + 1 {
            return Err(Error::InsufficientHistory(format!(
                "series {i} has {obs} observations, needs >= {}",
                hyper.p + 1
            )));
        }
    }
    let d = hyper.d;
    let p = hyper.p;
    let s = scales(hyper, periods, n, y.observed_count(), similarity.is_some());

    // Graph pieces: B = I − AᵀD⁻¹ and G = B Bᵀ drive the coupled F solve.
    let graph = match similarity {
        Some(a) => {
            let b = graph_operator(a)?;
            let mut g = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let mut v = 0.0;
                    for c in 0..n {
                        v += b.get(i, c) * b.get(j, c);
                    }
                    g.set(i, j, v);
                }
            }
            Some(g)
        }
        None => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factors = Matrix::zeros(periods, d);
    for t in 0..periods {
        for j in 0..d {
            factors.set(t, j, 0.1 * standard_normal(&mut rng));
        }
    }
    let mut loadings = Matrix::zeros(d, n);
    for j in 0..d {
        for i in 0..n {
            loadings.set(j, i, 0.1 * standard_normal(&mut rng));
        }
    }
    let mut ar_coeffs = Matrix::zeros(d, p);

    // Loadings are solved last so that, at any exit point, F is exact for
    // the final factors; per-series training errors then agree with a
    // fresh loading refit against the frozen model.
    let mut trace = vec![trmf_objective(y, &factors, &loadings, &ar_coeffs, hyper, similarity)];
    for _ in 0..hyper.max_sweeps {
        solve_factors(y, &mut factors, &loadings, &ar_coeffs, &s, p)?;
        solve_ar(&factors, &mut ar_coeffs, &s, p)?;
        solve_loadings(y, &factors, &mut loadings, &s, graph.as_ref())?;
        let obj = trmf_objective(y, &factors, &loadings, &ar_coeffs, hyper, similarity);
        let prev = *trace.last().unwrap();
        trace.push(obj);
        if prev - obj < hyper.tol * prev.abs().max(1e-12) {
            break;
        }
    }

    Ok(TrmfModel {
        factors,
        loadings,
        ar_coeffs,
        hyper: hyper.clone(),
        objective_trace: trace,
        seed,
    })
}

fn solve_loadings(
    y: &SeriesMatrix,
    factors: &Matrix,
    loadings: &mut Matrix,
    s: &Scales,
    graph: Option<&Matrix>,
) -> Result<()> {
    let d = factors.cols();
    let n = y.n_series();
    let periods = y.periods();
    for i in 0..n {
        let mask = y.col_mask(i);
        let col = y.col(i);
        let mut a = Matrix::zeros(d, d);
        let mut b = vec![0.0f64; d];
        for t in 0..periods {
            if !mask[t] {
                continue;
            }
            let z = factors.row(t);
            for r in 0..d {
                let zr = z[r] * s.recon;
                b[r] += zr * col[t];
                for c in r..d {
                    a.set(r, c, a.get(r, c) + zr * z[c]);
                }
            }
        }
        for r in 0..d {
            for c in 0..r {
                a.set(r, c, a.get(c, r));
            }
        }
        let mut diag_extra = s.f_ridge;
        if let Some(g) = graph {
            diag_extra += s.f_graph * g.get(i, i);
            for r in 0..d {
                let mut cross = 0.0;
                for other in 0..n {
                    if other != i {
                        cross += loadings.get(r, other) * g.get(other, i);
                    }
                }
                b[r] -= s.f_graph * cross;
            }
        }
        for r in 0..d {
            a.set(r, r, a.get(r, r) + diag_extra);
        }
        let f = solve_spd(&a, &b)?;
        for r in 0..d {
            loadings.set(r, i, f[r]);
        }
    }
    Ok(())
}

fn solve_factors(
    y: &SeriesMatrix,
    factors: &mut Matrix,
    loadings: &Matrix,
    ar_coeffs: &Matrix,
    s: &Scales,
    p: usize,
) -> Result<()> {
    let d = loadings.rows();
    let n = y.n_series();
    let periods = y.periods();
    for t in 0..periods {
        let mut a = Matrix::zeros(d, d);
        let mut b = vec![0.0f64; d];
        for i in 0..n {
            if !y.is_observed(t, i) {
                continue;
            }
            let yv = y.value(t, i);
            for r in 0..d {
                let fr = loadings.get(r, i) * s.recon;
                b[r] += fr * yv;
                for c in r..d {
                    a.set(r, c, a.get(r, c) + fr * loadings.get(c, i));
                }
            }
        }
        for r in 0..d {
            for c in 0..r {
                a.set(r, c, a.get(c, r));
            }
        }
        if s.ar > 0.0 {
            for j in 0..d {
                let mut diag = 0.0;
                let mut rhs = 0.0;
                // Row t as the left-hand side of its own AR residual.
                if t >= p {
                    diag += 1.0;
                    let mut lag = 0.0;
                    for i in 1..=p {
                        lag += ar_coeffs.get(j, i - 1) * factors.get(t - i, j);
                    }
                    rhs += lag;
                }
                // Row t as a lag inside later residuals.
                for i in 1..=p {
                    let ti = t + i;
                    if ti >= p && ti < periods {
                        let phi = ar_coeffs.get(j, i - 1);
                        diag += phi * phi;
                        let mut rest = factors.get(ti, j);
                        for other in 1..=p {
                            if other != i {
                                rest -= ar_coeffs.get(j, other - 1) * factors.get(ti - other, j);
                            }
                        }
                        rhs += phi * rest;
                    }
                }
                a.set(j, j, a.get(j, j) + s.ar * diag);
                b[j] += s.ar * rhs;
            }
        }
        for j in 0..d {
            a.set(j, j, a.get(j, j) + s.z_ridge);
        }
        let z = solve_spd(&a, &b)?;
        factors.row_mut(t).copy_from_slice(&z);
    }
    Ok(())
}

fn solve_ar(factors: &Matrix, ar_coeffs: &mut Matrix, s: &Scales, p: usize) -> Result<()> {
    let d = factors.cols();
    let periods = factors.rows();
    if s.ar == 0.0 {
        // The AR residual term is absent; the ridge drives phi to zero.
        for j in 0..d {
            for i in 0..p {
                ar_coeffs.set(j, i, 0.0);
            }
        }
        return Ok(());
    }
    for j in 0..d {
        let mut a = Matrix::zeros(p, p);
        let mut b = vec![0.0f64; p];
        for t in p..periods {
            let target = factors.get(t, j);
            for r in 0..p {
                let lr = factors.get(t - r - 1, j) * s.ar;
                b[r] += lr * target;
                for c in r..p {
                    a.set(r, c, a.get(r, c) + lr * factors.get(t - c - 1, j));
                }
            }
        }
        for r in 0..p {
            for c in 0..r {
                a.set(r, c, a.get(c, r));
            }
            a.set(r, r, a.get(r, r) + s.phi_ridge);
        }
        let phi = solve_spd(&a, &b)?;
        for r in 0..p {
            ar_coeffs.set(j, r, phi[r]);
        }
    }
    Ok(())
}

/// Rolls every factor forward `horizon` steps by its AR recursion, seeding
/// lags with the fitted factor values. Returns an h×d matrix.
pub fn trmf_forecast_factors(model: &TrmfModel, horizon: usize) -> Matrix {
    let d = model.hyper.d;
    let p = model.hyper.p;
    let periods = model.periods();
    let mut out = Matrix::zeros(horizon, d);
    for j in 0..d {
        let mut history: Vec<f64> = (0..periods).map(|t| model.factors.get(t, j)).collect();
        for h in 0..horizon {
            let mut v = 0.0;
            for i in 1..=p {
                v += model.ar_coeffs.get(j, i - 1) * history[history.len() - i];
            }
            history.push(v);
            out.set(h, j, v);
        }
    }
    out
}

/// h-step-ahead forecasts for every series: rolled factors times loadings,
/// an h×n matrix.
pub fn trmf_forecast(model: &TrmfModel, horizon: usize) -> Matrix {
    let future = trmf_forecast_factors(model, horizon);
    let n = model.n_series();
    let d = model.hyper.d;
    let mut out = Matrix::zeros(horizon, n);
    for h in 0..horizon {
        for i in 0..n {
            let mut v = 0.0;
            for j in 0..d {
                v += future.get(h, j) * model.loadings.get(j, i);
            }
            out.set(h, i, v);
        }
    }
    out
}

/// Ridge solve for the loadings of one new series against frozen factors:
/// argmin_f 1/(2|Ω'|) ‖P_Ω'(y − Z f)‖² + λ_F/(2d) ‖f‖².
pub fn trmf_fit_loadings(model: &TrmfModel, y_new: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    let periods = model.periods();
    let d = model.hyper.d;
    if y_new.len() != periods || mask.len() != periods {
        return Err(Error::Shape(format!(
            "new series length {} vs model periods {periods}",
            y_new.len()
        )));
    }
    let n_obs = mask.iter().filter(|&&m| m).count();
    if n_obs < d {
        return Err(Error::InsufficientHistory(format!(
            "{n_obs} observations for a {d}-dimensional loading fit"
        )));
    }
    let recon = 1.0 / n_obs as f64;
    let ridge = model.hyper.lambda_f / d as f64;
    let mut a = Matrix::zeros(d, d);
    let mut b = vec![0.0f64; d];
    for t in 0..periods {
        if !mask[t] {
            continue;
        }
        let z = model.factors.row(t);
        for r in 0..d {
            let zr = z[r] * recon;
            b[r] += zr * y_new[t];
            for c in r..d {
                a.set(r, c, a.get(r, c) + zr * z[c]);
            }
        }
    }
    for r in 0..d {
        for c in 0..r {
            a.set(r, c, a.get(c, r));
        }
        a.set(r, r, a.get(r, r) + ridge);
    }
    solve_spd(&a, &b)
}
