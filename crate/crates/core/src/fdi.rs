//! Local statistical approach to fault detection and isolation.
//!
//! A batch of scalar prediction residuals `e_k` and regressors `X_k` (the
//! output gradient of the linear-in-weights ARMAX predictor) is turned into
//! primary residuals `H_k = e_k·X_k`, their normalized sum, the sensitivity
//! matrix `M` and the lag-corrected covariance `S`. Detection uses the
//! global chi-square statistic; isolation uses either the sensitivity test
//! (other weights assumed unchanged) or the min-max test (robust to changes
//! in the other weights).
//!
//! All quadratic forms are evaluated on diagonally equilibrated matrices.
//! The statistics are invariant under that scaling, and it keeps the
//! ridge thresholds meaningful when the regressor entries differ by orders
//! of magnitude.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::armax::ARMAX_ORDER;
use crate::error::{Error, Result};
use crate::kalman::FilterRun;
use crate::linalg::{equilibration, inverse_quadratic_form, min_eigenvalue, symmetrize};
use crate::stats::chi2_threshold;
use crate::wave_model::{position_index, WaveModel};

/// Residuals `e_k` and regressor rows `X_k` of one test window.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBatch {
    pub residuals: DVector<f64>,
    /// `Nb × p`.
    pub regressors: DMatrix<f64>,
}

impl ResidualBatch {
    pub fn new(residuals: DVector<f64>, regressors: DMatrix<f64>) -> Result<Self> {
        let nb = residuals.len();
        let p = regressors.ncols();
        if regressors.nrows() != nb {
            return Err(Error::Dimension(format!(
                "{nb} residuals but {} regressor rows",
                regressors.nrows()
            )));
        }
        if p == 0 || nb < p {
            return Err(Error::Dimension(format!(
                "batch needs at least p = {p} > 0 samples, got {nb}"
            )));
        }
        if residuals
            .iter()
            .chain(regressors.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Domain("batch contains non-finite entries".into()));
        }
        Ok(Self {
            residuals,
            regressors,
        })
    }

    pub fn len(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }

    pub fn params(&self) -> usize {
        self.regressors.ncols()
    }
}

/// `H_k = e_k · X_k`, one row per sample.
pub fn primary_residuals(batch: &ResidualBatch) -> DMatrix<f64> {
    let mut h = batch.regressors.clone();
    for (k, mut row) in h.row_iter_mut().enumerate() {
        row *= batch.residuals[k];
    }
    h
}

/// `X = (1/√Nb) Σ_k H_k`.
pub fn normalized_residual(h: &DMatrix<f64>) -> DVector<f64> {
    let nb = h.nrows().max(1) as f64;
    h.row_sum().transpose() / nb.sqrt()
}

/// `M = (1/Nb) Σ_k X_k X_kᵀ`.
pub fn sensitivity_matrix(regressors: &DMatrix<f64>) -> DMatrix<f64> {
    let nb = regressors.nrows().max(1) as f64;
    let mut m = regressors.transpose() * regressors / nb;
    symmetrize(&mut m);
    m
}

/// Lag-corrected covariance of the normalized residual:
/// `S = (1/Nb) Σ H_k H_kᵀ + Σ_{m=1..lags} 1/(Nb−m) Σ_k (H_k H_{k+m}ᵀ + H_{k+m} H_kᵀ)`.
pub fn covariance_matrix(h: &DMatrix<f64>, lags: usize) -> DMatrix<f64> {
    let nb = h.nrows();
    let p = h.ncols();
    let mut s = if nb > 0 {
        h.transpose() * h / nb as f64
    } else {
        DMatrix::zeros(p, p)
    };
    for m in 1..=lags.min(nb.saturating_sub(1)) {
        let head = h.rows(0, nb - m);
        let tail = h.rows(m, nb - m);
        let cross = head.transpose() * tail;
        s += (&cross + cross.transpose()) / (nb - m) as f64;
    }
    symmetrize(&mut s);
    s
}

/// Fisher information `F = MᵀS⁻¹M` and score `g = MᵀS⁻¹X`.
fn information(
    x: &DVector<f64>,
    m: &DMatrix<f64>,
    s: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let p = s.nrows();
    if s.ncols() != p || x.len() != p || m.nrows() != p {
        return Err(Error::Dimension(format!(
            "X has {} entries, M is {:?}, S is {:?}",
            x.len(),
            m.shape(),
            s.shape()
        )));
    }
    if m.ncols() == 0 {
        return Err(Error::EmptySelection);
    }
    if s.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateStatistics(
            "covariance S is the zero matrix".into(),
        ));
    }
    if s.iter()
        .chain(m.iter())
        .chain(x.iter())
        .any(|v| !v.is_finite())
    {
        return Err(Error::DegenerateStatistics("non-finite statistics".into()));
    }

    // S̃ = D S D, whitened through its eigendecomposition with the ridge
    // floor applied to the spectrum.
    let d = equilibration(s);
    let mut se = s.clone();
    for i in 0..p {
        for j in 0..p {
            se[(i, j)] *= d[i] * d[j];
        }
    }
    symmetrize(&mut se);
    let scale = se.trace() / p as f64;
    let eig = SymmetricEigen::new(se);
    let lambda_min = eig.eigenvalues.min();
    if !(eig.eigenvalues.max() > 0.0) || !(scale > 0.0) {
        return Err(Error::DegenerateStatistics(
            "covariance S has no positive spectrum".into(),
        ));
    }
    let ridge = if lambda_min < 1e-12 * scale {
        1e-10 * scale
    } else {
        0.0
    };
    // whitening W = Λ^{-1/2} Vᵀ D, with eigenvalues floored at the ridge
    let floor = 1e-10 * scale;
    let inv_sqrt = eig.eigenvalues.map(|l| 1.0 / (l + ridge).max(floor).sqrt());
    let vt = eig.eigenvectors.transpose();
    let dm = DMatrix::from_fn(p, m.ncols(), |i, j| d[i] * m[(i, j)]);
    let dx = x.component_mul(&d);
    let mut mw = &vt * dm;
    let mut xw = &vt * dx;
    for i in 0..p {
        mw.row_mut(i).scale_mut(inv_sqrt[i]);
        xw[i] *= inv_sqrt[i];
    }
    let mut f = mw.transpose() * &mw;
    symmetrize(&mut f);
    let g = mw.transpose() * xw;
    Ok((f, g))
}

/// Global test `t = XᵀS⁻¹M(MᵀS⁻¹M)⁻¹MᵀS⁻¹X`.
pub fn global_chi2_test(x: &DVector<f64>, m: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<f64> {
    if x.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let (f, g) = information(x, m, s)?;
    Ok(inverse_quadratic_form(&f, &g)?.max(0.0))
}

/// Selection matrix `A` (`p × |subset|`) whose columns pick the subset.
pub fn selection_matrix(p: usize, subset: &[usize]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(p, subset.len());
    for (col, &i) in subset.iter().enumerate() {
        a[(i, col)] = 1.0;
    }
    a
}

fn check_subset(p: usize, subset: &[usize]) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut seen = vec![false; p];
    for &i in subset {
        if i >= p {
            return Err(Error::Dimension(format!("parameter {i} is outside 0..{p}")));
        }
        if seen[i] {
            return Err(Error::Dimension(format!("parameter {i} selected twice")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Sensitivity test on the parameter subset `φ` (0-based weight indices):
/// the global test with `M` replaced by `M_φ = M·A`.
pub fn sensitivity_test(
    x: &DVector<f64>,
    m: &DMatrix<f64>,
    s: &DMatrix<f64>,
    subset: &[usize],
) -> Result<f64> {
    check_subset(m.ncols(), subset)?;
    let m_phi = m.select_columns(subset);
    global_chi2_test(x, &m_phi, s)
}

/// Min-max test on the subset `φ`, robust to changes in the complement `ψ`.
///
/// With `F = MᵀS⁻¹M` partitioned into `φ`/`ψ` blocks:
/// `X*_φ = g_φ − I_φψ I_ψψ⁻¹ g_ψ`, `I*_φ = I_φφ − I_φψ I_ψψ⁻¹ I_ψφ`,
/// `τ* = X*_φᵀ (I*_φ)⁻¹ X*_φ`.
pub fn minmax_test(
    x: &DVector<f64>,
    m: &DMatrix<f64>,
    s: &DMatrix<f64>,
    subset: &[usize],
) -> Result<f64> {
    let p = m.ncols();
    check_subset(p, subset)?;
    if x.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let (f, g) = information(x, m, s)?;
    let psi: Vec<usize> = (0..p).filter(|i| !subset.contains(i)).collect();
    if psi.is_empty() {
        return Ok(inverse_quadratic_form(&f, &g)?.max(0.0));
    }
    let pick = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| f[(rows[i], cols[j])])
    };
    let i_pp = pick(subset, subset);
    let i_ps = pick(subset, &psi);
    let i_ss = pick(&psi, &psi);
    let g_phi = DVector::from_fn(subset.len(), |i, _| g[subset[i]]);
    let g_psi = DVector::from_fn(psi.len(), |i, _| g[psi[i]]);

    // I_ψψ⁻¹ [I_ψφ | g_ψ] on the equilibrated block
    let d = equilibration(&i_ss);
    let mut se = DMatrix::from_fn(psi.len(), psi.len(), |i, j| i_ss[(i, j)] * d[i] * d[j]);
    symmetrize(&mut se);
    crate::linalg::ridge_regularize(&mut se);
    let chol = crate::linalg::cholesky_with_ridge(&se).ok_or_else(|| {
        Error::UnidentifiableSubset("nuisance information block is singular".into())
    })?;
    let mut rhs = DMatrix::zeros(psi.len(), subset.len() + 1);
    for i in 0..psi.len() {
        for j in 0..subset.len() {
            rhs[(i, j)] = i_ps[(j, i)] * d[i];
        }
        rhs[(i, subset.len())] = g_psi[i] * d[i];
    }
    let mut sol = chol.solve(&rhs);
    for i in 0..psi.len() {
        sol.row_mut(i).scale_mut(d[i]);
    }
    let proj = &i_ps * sol;
    let mut i_star = &i_pp - proj.columns(0, subset.len());
    symmetrize(&mut i_star);
    let x_star = &g_phi - proj.column(subset.len());

    let de = equilibration(&i_pp);
    let scaled = DMatrix::from_fn(subset.len(), subset.len(), |i, j| {
        i_star[(i, j)] * de[i] * de[j]
    });
    if min_eigenvalue(&scaled) <= 1e-10 {
        return Err(Error::UnidentifiableSubset(format!(
            "effective information of {subset:?} is singular given the other weights"
        )));
    }
    Ok(inverse_quadratic_form(&i_star, &x_star)?.max(0.0))
}

/// How the detection threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// Upper `alpha` quantile of `χ²_p`.
    #[default]
    Quantile,
    /// `λ = p`, the mean of `χ²_p`.
    DofMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum IsolationMode {
    #[default]
    None,
    Sensitivity,
    Minmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Healthy,
    Faulty,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Healthy => "healthy",
            Verdict::Faulty => "faulty",
        })
    }
}

/// Settings for [`run_fdi_pipeline`]. Subsets use 0-based weight indices.
#[derive(Debug, Clone, PartialEq)]
pub struct FdiSettings {
    pub alpha: f64,
    pub threshold: ThresholdMode,
    pub lags: usize,
    pub isolation: IsolationMode,
    pub subsets: Vec<Vec<usize>>,
}

impl Default for FdiSettings {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            threshold: ThresholdMode::Quantile,
            lags: 3,
            isolation: IsolationMode::None,
            subsets: default_subsets(),
        }
    }
}

/// Every singleton plus the pair `{w₂, w₃}`.
pub fn default_subsets() -> Vec<Vec<usize>> {
    let mut s: Vec<Vec<usize>> = (0..ARMAX_ORDER).map(|i| vec![i]).collect();
    s.push(vec![1, 2]);
    s
}

/// `w2+w3` style label for a 0-based subset.
pub fn subset_label(subset: &[usize]) -> String {
    subset
        .iter()
        .map(|i| format!("w{}", i + 1))
        .collect::<Vec<_>>()
        .join("+")
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsolationOutcome {
    pub mode: IsolationMode,
    /// Statistic per candidate subset (`t_φ` or `τ*_φ`).
    pub candidates: Vec<(Vec<usize>, f64)>,
    /// Index into `candidates` of the largest statistic.
    pub best: usize,
}

impl IsolationOutcome {
    pub fn best_subset(&self) -> &[usize] {
        &self.candidates[self.best].0
    }

    pub fn best_statistic(&self) -> f64 {
        self.candidates[self.best].1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdiReport {
    /// Normalized residual.
    pub x: DVector<f64>,
    pub m: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub t: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub verdict: Verdict,
    pub isolation: Option<IsolationOutcome>,
}

/// Detection threshold for `dof` monitored parameters.
pub fn detection_threshold(mode: ThresholdMode, alpha: f64, dof: usize) -> f64 {
    match mode {
        ThresholdMode::Quantile => chi2_threshold(alpha, dof),
        ThresholdMode::DofMean => dof as f64,
    }
}

/// Residual derivatives, Jacobian, `M`, `S`, global test, and optional
/// isolation, in that order.
pub fn run_fdi_pipeline(batch: &ResidualBatch, settings: &FdiSettings) -> Result<FdiReport> {
    if !(settings.alpha > 0.0 && settings.alpha < 1.0) {
        return Err(Error::Domain("alpha must lie in (0, 1)".into()));
    }
    let p = batch.params();
    let h = primary_residuals(batch);
    let jacobian = &batch.regressors;
    let m = sensitivity_matrix(jacobian);
    let s = covariance_matrix(&h, settings.lags);
    let x = normalized_residual(&h);
    let t = global_chi2_test(&x, &m, &s)?;
    let lambda = detection_threshold(settings.threshold, settings.alpha, p);
    let verdict = if t > lambda {
        Verdict::Faulty
    } else {
        Verdict::Healthy
    };

    let isolation = match (verdict, settings.isolation) {
        (Verdict::Faulty, IsolationMode::Sensitivity | IsolationMode::Minmax) => {
            let mut candidates = Vec::with_capacity(settings.subsets.len());
            for subset in &settings.subsets {
                let stat = match settings.isolation {
                    IsolationMode::Sensitivity => sensitivity_test(&x, &m, &s, subset),
                    _ => minmax_test(&x, &m, &s, subset),
                };
                // An unidentifiable candidate is reported as NaN and never
                // wins; the other candidates are still ranked.
                let stat = match stat {
                    Err(Error::UnidentifiableSubset(_)) => f64::NAN,
                    other => other?,
                };
                candidates.push((subset.clone(), stat));
            }
            let best = candidates
                .iter()
                .enumerate()
                .filter(|c| !c.1 .1.is_nan())
                .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
                .map(|(i, _)| i)
                .ok_or_else(|| {
                    if candidates.is_empty() {
                        Error::EmptySelection
                    } else {
                        Error::UnidentifiableSubset("no candidate subset is identifiable".into())
                    }
                })?;
            Some(IsolationOutcome {
                mode: settings.isolation,
                candidates,
                best,
            })
        }
        _ => None,
    };

    Ok(FdiReport {
        x,
        m,
        s,
        t,
        lambda,
        alpha: settings.alpha,
        verdict,
        isolation,
    })
}

/// Scalar signals of the monitored subsystem extracted from a filter run.
///
/// `zhat(k)` is the filter's prediction of the subsystem output before
/// measurement `k`, `innovation(k)` the matching innovation and `input(k)`
/// the bundled subsystem input evaluated at the posterior of step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemSignals {
    pub zhat: Vec<f64>,
    pub innovation: Vec<f64>,
    pub input: Vec<f64>,
}

impl SubsystemSignals {
    /// `grid_index` is the 1-based grid point, `sensor_row` the 0-based row
    /// of `C` that observes it.
    pub fn from_filter_run(
        run: &FilterRun,
        model: &WaveModel,
        grid_index: usize,
        sensor_row: usize,
    ) -> Self {
        let pos = position_index(grid_index);
        let mut s = SubsystemSignals {
            zhat: Vec::with_capacity(run.len()),
            innovation: Vec::with_capacity(run.len()),
            input: Vec::with_capacity(run.len()),
        };
        for rec in &run.records {
            s.zhat.push(rec.xhat_prior[pos]);
            s.innovation.push(rec.innovation[sensor_row]);
            s.input
                .push(model.subsystem_input(grid_index, rec.xhat.as_slice()));
        }
        s
    }

    pub fn len(&self) -> usize {
        self.zhat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zhat.is_empty()
    }

    /// Pairs regressors `X(k)` with residuals `e(k+1) = ẑ(k+1) − z(k+1)`
    /// for `k ∈ [start, end)`; needs `start ≥ 1` and `end < len`.
    pub fn batch(&self, start: usize, end: usize) -> Result<ResidualBatch> {
        if start == 0 || end >= self.len() || start >= end {
            return Err(Error::InsufficientHistory {
                needed: end + 1,
                available: self.len(),
            });
        }
        let nb = end - start;
        let mut regs = DMatrix::zeros(nb, ARMAX_ORDER);
        let mut res = DVector::zeros(nb);
        for (row, k) in (start..end).enumerate() {
            let x = crate::armax::build_regressor(&self.zhat, &self.input, &self.innovation, k)?;
            for (c, v) in x.iter().enumerate() {
                regs[(row, c)] = *v;
            }
            res[row] = -self.innovation[k + 1];
        }
        ResidualBatch::new(res, regs)
    }
}

/// Window bounds `[start, start + window)` stepping by `window·(1 − overlap)`
/// and fitting inside `[first, last)`.
pub fn sliding_windows(
    first: usize,
    last: usize,
    window: usize,
    overlap: f64,
) -> Vec<(usize, usize)> {
    if window == 0 || last <= first {
        return Vec::new();
    }
    let stride = ((window as f64) * (1.0 - overlap.clamp(0.0, 0.99)))
        .round()
        .max(1.0) as usize;
    let mut out = Vec::new();
    let mut start = first;
    while start + window <= last {
        out.push((start, start + window));
        start += stride;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_residuals_give_zero_primary_residuals() {
        let batch =
            ResidualBatch::new(DVector::zeros(6), DMatrix::from_element(6, 5, 1.3)).unwrap();
        assert!(primary_residuals(&batch).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_primary_residual() {
        let batch = ResidualBatch::new(
            DVector::from_vec(vec![2.0]),
            DMatrix::from_row_slice(1, 1, &[1.0]),
        )
        .unwrap();
        assert_eq!(primary_residuals(&batch)[(0, 0)], 2.0);
        let regs = DMatrix::from_row_slice(
            5,
            5,
            &[
                1.0, 0.5, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, 1.0,
            ],
        );
        let batch =
            ResidualBatch::new(DVector::from_vec(vec![2.0, 0.0, 0.0, 0.0, 0.0]), regs).unwrap();
        let h = primary_residuals(&batch);
        assert_eq!(
            h.row(0).iter().copied().collect::<Vec<_>>(),
            vec![2.0, 1.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn normalized_residual_of_equal_rows() {
        let h = DMatrix::from_fn(4, 3, |_, j| (j + 1) as f64);
        let x = normalized_residual(&h);
        assert_eq!(x.as_slice(), &[2.0, 4.0, 6.0]);
        assert!(normalized_residual(&DMatrix::zeros(4, 3))
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn sensitivity_matrix_special_cases() {
        let e1 = DMatrix::from_fn(7, 5, |_, j| if j == 0 { 1.0 } else { 0.0 });
        let m = sensitivity_matrix(&e1);
        let mut expected = DMatrix::zeros(5, 5);
        expected[(0, 0)] = 1.0;
        assert_eq!(m, expected);
        let m = sensitivity_matrix(&DMatrix::identity(5, 5));
        assert!((m - DMatrix::identity(5, 5) / 5.0).amax() < 1e-15);
    }

    #[test]
    fn covariance_zero_and_lag0() {
        assert!(covariance_matrix(&DMatrix::zeros(10, 3), 3)
            .iter()
            .all(|&v| v == 0.0));
        let h = DMatrix::from_fn(10, 2, |i, j| ((i * 3 + j) as f64).sin());
        let s0 = covariance_matrix(&h, 0);
        let expected = h.transpose() * &h / 10.0;
        assert!((s0 - expected).amax() < 1e-15);
    }

    #[test]
    fn global_test_trivia() {
        let s = DMatrix::identity(3, 3);
        let m = DMatrix::identity(3, 3);
        assert_eq!(global_chi2_test(&DVector::zeros(3), &m, &s).unwrap(), 0.0);
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let t = global_chi2_test(&x, &m, &s).unwrap();
        assert!((t - x.norm_squared()).abs() < 1e-12);
        assert!(matches!(
            global_chi2_test(&x, &m, &DMatrix::zeros(3, 3)),
            Err(Error::DegenerateStatistics(_))
        ));
    }

    #[test]
    fn selection_helpers() {
        let a = selection_matrix(5, &[1, 2]);
        assert_eq!(a.shape(), (5, 2));
        assert_eq!(a[(1, 0)], 1.0);
        assert_eq!(a[(2, 1)], 1.0);
        assert_eq!(subset_label(&[1, 2]), "w2+w3");
        let x = DVector::from_element(5, 1.0);
        let m = DMatrix::identity(5, 5);
        assert!(matches!(
            sensitivity_test(&x, &m, &m, &[]),
            Err(Error::EmptySelection)
        ));
        assert!(minmax_test(&x, &m, &m, &[]).is_err());
    }

    #[test]
    fn windows() {
        assert_eq!(
            sliding_windows(0, 10, 4, 0.5),
            vec![(0, 4), (2, 6), (4, 8), (6, 10)]
        );
        assert_eq!(sliding_windows(1, 10, 4, 0.0), vec![(1, 5), (5, 9)]);
        assert!(sliding_windows(0, 3, 4, 0.5).is_empty());
    }

    #[test]
    fn zero_residual_batch_is_healthy() {
        let regs = DMatrix::from_fn(50, 5, |i, j| ((i + 7 * j) as f64 * 0.3).cos());
        let batch = ResidualBatch::new(DVector::zeros(50), regs).unwrap();
        let report = run_fdi_pipeline(&batch, &FdiSettings::default()).unwrap();
        assert_eq!(report.t, 0.0);
        assert_eq!(report.verdict, Verdict::Healthy);
    }

    #[test]
    fn batch_validation() {
        assert!(ResidualBatch::new(DVector::zeros(3), DMatrix::zeros(3, 5)).is_err());
        assert!(ResidualBatch::new(DVector::zeros(6), DMatrix::zeros(5, 5)).is_err());
        let mut regs = DMatrix::zeros(6, 5);
        regs[(0, 0)] = f64::NAN;
        assert!(ResidualBatch::new(DVector::zeros(6), regs).is_err());
    }
}
