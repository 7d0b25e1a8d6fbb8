//! Bezier trajectory models.
//!
//! The ego plan is a deterministic [`BezierCurve`]; the target is a
//! [`ProbBezierCurve`] whose control points are independent Gaussians, which
//! makes every time-indexed marginal Gaussian as well:
//! `mean(t) = sum b_i(tau) m_i`, `cov(t) = sum b_i(tau)^2 S_i`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::probability::{eigenvalues, Gaussian2, Mat2};

/// Below this speed (m/s) the hodograph direction is considered undefined.
pub const MIN_HEADING_SPEED: f64 = 1e-3;

/// Number of grid points used when fitting the covariance schedule.
pub const COV_FIT_GRID: usize = 128;

/// Control-point variance floor, m^2.
pub const MIN_POINT_VARIANCE: f64 = 1e-10;

/// Tolerance on `t` beyond the horizon, absorbing rounding in node mapping.
const TIME_SLACK: f64 = 1e-9;

/// Bernstein basis values `b_{i,d}(tau)` for `i = 0..=d`.
pub fn bernstein(degree: usize, tau: f64) -> Vec<f64> {
    let mut b = vec![0.0; degree + 1];
    b[0] = 1.0;
    let s = 1.0 - tau;
    // Build up degree by degree (de Casteljau on the basis itself).
    for k in 1..=degree {
        let mut prev = 0.0;
        for bj in b.iter_mut().take(k + 1) {
            let cur = *bj;
            *bj = s * cur + tau * prev;
            prev = cur;
        }
    }
    b
}

fn check_time(t: f64, horizon: f64) -> Result<f64> {
    if !(t >= -TIME_SLACK && t <= horizon + TIME_SLACK) {
        return Err(Error::Domain { t, horizon });
    }
    Ok((t / horizon).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BezierCurve {
    control_points: Vec<Vec2>,
    horizon: f64,
}

impl BezierCurve {
    pub fn new(control_points: Vec<Vec2>, horizon: f64) -> Result<Self> {
        if control_points.len() < 2 {
            return Err(Error::InvalidArgument(
                "a Bezier curve needs at least two control points".into(),
            ));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self {
            control_points,
            horizon,
        })
    }

    pub fn degree(&self) -> usize {
        self.control_points.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn control_points(&self) -> &[Vec2] {
        &self.control_points
    }

    pub fn evaluate(&self, t: f64) -> Result<Vec2> {
        let tau = check_time(t, self.horizon)?;
        Ok(self.eval_tau(tau))
    }

    fn eval_tau(&self, tau: f64) -> Vec2 {
        bernstein(self.degree(), tau)
            .iter()
            .zip(&self.control_points)
            .fold(Vec2::zeros(), |acc, (b, p)| acc + p * *b)
    }

    /// Time derivative, m/s.
    pub fn velocity(&self, t: f64) -> Result<Vec2> {
        let tau = check_time(t, self.horizon)?;
        Ok(self.velocity_tau(tau))
    }

    fn velocity_tau(&self, tau: f64) -> Vec2 {
        let d = self.degree();
        let scale = d as f64 / self.horizon;
        bernstein(d - 1, tau)
            .iter()
            .zip(self.control_points.windows(2))
            .fold(Vec2::zeros(), |acc, (b, w)| acc + (w[1] - w[0]) * (*b * scale))
    }

    /// Direction of travel at `t`. Where the curve is (nearly) stationary the
    /// heading of the closest earlier time with usable speed is returned, or
    /// 0 if there is none.
    pub fn heading(&self, t: f64) -> Result<f64> {
        let tau = check_time(t, self.horizon)?;
        let v = self.velocity_tau(tau);
        if v.norm() >= MIN_HEADING_SPEED {
            return Ok(v.y.atan2(v.x));
        }
        const STEPS: usize = 512;
        let start = (tau * STEPS as f64).floor() as usize;
        for k in (0..=start).rev() {
            let v = self.velocity_tau(k as f64 / STEPS as f64);
            if v.norm() >= MIN_HEADING_SPEED {
                return Ok(v.y.atan2(v.x));
            }
        }
        Ok(0.0)
    }
}

/// Bezier curve with independent Gaussian control points.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbBezierCurve {
    mean_points: Vec<Vec2>,
    point_covs: Vec<Mat2>,
    horizon: f64,
}

impl ProbBezierCurve {
    /// Control-point covariances must be symmetric positive semidefinite.
    /// Marginals are checked for definiteness when requested.
    pub fn new(mean_points: Vec<Vec2>, point_covs: Vec<Mat2>, horizon: f64) -> Result<Self> {
        BezierCurve::new(mean_points.clone(), horizon)?;
        if point_covs.len() != mean_points.len() {
            return Err(Error::InvalidArgument(format!(
                "{} control points but {} covariances",
                mean_points.len(),
                point_covs.len()
            )));
        }
        for (i, c) in point_covs.iter().enumerate() {
            let asym = (c[(0, 1)] - c[(1, 0)]).abs();
            if !c.iter().all(|v| v.is_finite()) || asym > 1e-12 * c.abs().max().max(1.0) {
                return Err(Error::InvalidDistribution(format!("control covariance {i} not symmetric")));
            }
            if eigenvalues(c).0 < -1e-15 {
                return Err(Error::InvalidDistribution(format!(
                    "control covariance {i} has a negative eigenvalue"
                )));
            }
        }
        Ok(Self {
            mean_points,
            point_covs,
            horizon,
        })
    }

    pub fn degree(&self) -> usize {
        self.mean_points.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn mean_points(&self) -> &[Vec2] {
        &self.mean_points
    }

    pub fn point_covs(&self) -> &[Mat2] {
        &self.point_covs
    }

    pub fn mean_curve(&self) -> BezierCurve {
        BezierCurve {
            control_points: self.mean_points.clone(),
            horizon: self.horizon,
        }
    }

    pub fn marginal_at(&self, t: f64) -> Result<Gaussian2> {
        let tau = check_time(t, self.horizon)?;
        let b = bernstein(self.degree(), tau);
        let mut mean = Vec2::zeros();
        let mut cov = Mat2::zeros();
        for ((bi, m), s) in b.iter().zip(&self.mean_points).zip(&self.point_covs) {
            mean += m * *bi;
            cov += s * (bi * bi);
        }
        Gaussian2::new(mean, cov)
    }

    /// One coherent trajectory: every control point drawn once.
    pub fn sample_trajectory<R: Rng + ?Sized>(&self, rng: &mut R) -> BezierCurve {
        let control_points = self
            .mean_points
            .iter()
            .zip(&self.point_covs)
            .map(|(m, s)| {
                let z = Vec2::new(
                    rng.sample(rand_distr::StandardNormal),
                    rng.sample(rand_distr::StandardNormal),
                );
                m + crate::probability::psd_cholesky(s) * z
            })
            .collect();
        BezierCurve {
            control_points,
            horizon: self.horizon,
        }
    }
}

/// Time-stamped 2D positions.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrack {
    timestamps: Vec<f64>,
    positions: Vec<Vec2>,
}

impl SampledTrack {
    pub fn new(timestamps: Vec<f64>, positions: Vec<Vec2>) -> Result<Self> {
        if timestamps.len() != positions.len() {
            return Err(Error::InvalidArgument(format!(
                "{} timestamps but {} positions",
                timestamps.len(),
                positions.len()
            )));
        }
        if timestamps.len() < 2 {
            return Err(Error::InvalidArgument("track needs at least two samples".into()));
        }
        if let Some(i) = (1..timestamps.len()).find(|&i| !(timestamps[i] > timestamps[i - 1])) {
            return Err(Error::InvalidArgument(format!(
                "timestamps not strictly increasing at index {i}"
            )));
        }
        Ok(Self {
            timestamps,
            positions,
        })
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Span from the first to the last timestamp.
    pub fn duration(&self) -> f64 {
        self.timestamps[self.len() - 1] - self.timestamps[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BezierFit {
    pub curve: BezierCurve,
    pub residual_rms: f64,
}

/// Endpoint-pinned least-squares Bezier fit with `tau_i = (t_i - t_0) / T`.
pub fn fit_bezier(track: &SampledTrack, degree: usize) -> Result<BezierFit> {
    if degree < 1 {
        return Err(Error::InvalidArgument("degree must be at least 1".into()));
    }
    let n = track.len();
    if n < degree + 1 {
        return Err(Error::Fit(format!(
            "{n} samples cannot determine a degree-{degree} curve"
        )));
    }
    let t0 = track.timestamps()[0];
    let horizon = track.duration();
    let taus: Vec<f64> = track.timestamps().iter().map(|t| (t - t0) / horizon).collect();
    let first = track.positions()[0];
    let last = track.positions()[n - 1];

    let mut controls = vec![first; degree + 1];
    controls[degree] = last;
    let interior = degree - 1;
    if interior > 0 {
        let mut design = DMatrix::<f64>::zeros(n, interior);
        let mut rhs = DMatrix::<f64>::zeros(n, 2);
        for (row, &tau) in taus.iter().enumerate() {
            let b = bernstein(degree, tau);
            for j in 0..interior {
                design[(row, j)] = b[j + 1];
            }
            let r = track.positions()[row] - first * b[0] - last * b[degree];
            rhs[(row, 0)] = r.x;
            rhs[(row, 1)] = r.y;
        }
        let svd = design.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-12 * smax) {
            return Err(Error::Fit(format!(
                "rank-deficient design (singular values {smin:e} / {smax:e})"
            )));
        }
        let sol = svd
            .solve(&rhs, 0.0)
            .map_err(|e| Error::Fit(e.to_string()))?;
        for j in 0..interior {
            controls[j + 1] = Vec2::new(sol[(j, 0)], sol[(j, 1)]);
        }
    }

    let curve = BezierCurve::new(controls, horizon)?;
    let sq: f64 = taus
        .iter()
        .zip(track.positions())
        .map(|(&tau, p)| (curve.eval_tau(tau) - p).norm_squared())
        .sum();
    Ok(BezierFit {
        curve,
        residual_rms: (sq / n as f64).sqrt(),
    })
}

/// Fits a probabilistic Bezier curve: means from [`fit_bezier`], isotropic
/// control covariances `c_i I` from [`fit_variance_schedule`].
pub fn fit_prob_bezier(
    track: &SampledTrack,
    degree: usize,
    sigma0: f64,
    sigma1: f64,
) -> Result<ProbBezierCurve> {
    if !(sigma0 > 0.0 && sigma0 <= sigma1 && sigma1.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < sigma0 <= sigma1, got {sigma0}, {sigma1}"
        )));
    }
    let fit = fit_bezier(track, degree)?;
    let variances = fit_variance_schedule(degree, sigma0, sigma1)?;
    let point_covs = variances.iter().map(|&c| Mat2::identity() * c).collect();
    ProbBezierCurve::new(fit.curve.control_points, point_covs, fit.curve.horizon)
}

/// Per-control-point variances `c_i >= 0` so that the marginal variance
/// `v(tau) = sum b_i(tau)^2 c_i` tracks `s(tau)^2`, with
/// `s(tau) = sigma0 + (sigma1 - sigma0) tau`, on a uniform grid.
///
/// Residuals are relative, `v / s^2 - 1`, which is the second-order
/// expansion of the KL divergence between isotropic Gaussians of equal mean.
/// When the schedule grows, `v` is also constrained to be nondecreasing
/// across the grid. Results below [`MIN_POINT_VARIANCE`] are floored.
pub fn fit_variance_schedule(degree: usize, sigma0: f64, sigma1: f64) -> Result<Vec<f64>> {
    let m = COV_FIT_GRID;
    let n = degree + 1;
    let mut basis = DMatrix::<f64>::zeros(m, n);
    let mut target = DVector::<f64>::zeros(m);
    for k in 0..m {
        let tau = k as f64 / (m - 1) as f64;
        for (i, b) in bernstein(degree, tau).into_iter().enumerate() {
            basis[(k, i)] = b * b;
        }
        let s = sigma0 + (sigma1 - sigma0) * tau;
        target[k] = s * s;
    }
    let mut weighted = basis.clone();
    for k in 0..m {
        weighted.row_mut(k).scale_mut(1.0 / target[k]);
    }
    let ones = DVector::<f64>::from_element(m, 1.0);

    let monotone = sigma1 > sigma0;
    let rows = n + if monotone { m - 1 } else { 0 };
    let mut g = DMatrix::<f64>::zeros(rows, n);
    g.view_mut((0, 0), (n, n)).fill_with_identity();
    if monotone {
        for k in 0..m - 1 {
            let diff = basis.row(k + 1) - basis.row(k);
            g.row_mut(n + k).copy_from(&diff);
        }
    }
    let h = DVector::<f64>::zeros(rows);
    let c = constrained_least_squares(&weighted, &ones, &g, &h)?;
    Ok(c.iter().map(|&v| v.max(MIN_POINT_VARIANCE)).collect())
}

/// `argmin ||E x - f||` subject to `G x >= h`, for `E` with full column rank.
///
/// Reduces to a least-distance problem and solves that with [`nnls`]
/// (Lawson and Hanson's LSI -> LDP -> NNLS chain).
pub fn constrained_least_squares(
    e: &DMatrix<f64>,
    f: &DVector<f64>,
    g: &DMatrix<f64>,
    h: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = e.ncols();
    let qr = e.clone().qr();
    let r = qr.r();
    let f1 = qr.q().transpose() * f;
    let r_inv = r
        .try_inverse()
        .ok_or_else(|| Error::Fit("least-squares system is rank deficient".into()))?;
    // x = R^-1 (z + f1); constraints become (G R^-1) z >= h - G R^-1 f1
    let gt = g * &r_inv;
    let ht = h - &gt * &f1;

    let p = g.nrows();
    let mut lhs = DMatrix::<f64>::zeros(n + 1, p);
    lhs.view_mut((0, 0), (n, p)).copy_from(&gt.transpose());
    lhs.row_mut(n).copy_from(&ht.transpose());
    let mut rhs = DVector::<f64>::zeros(n + 1);
    rhs[n] = 1.0;
    let u = nnls(&lhs, &rhs);
    let resid = &lhs * u - rhs;
    if resid.norm() < 1e-12 || resid[n].abs() < 1e-300 {
        return Err(Error::Fit("inequality constraints are infeasible".into()));
    }
    let z = -resid.rows(0, n) / resid[n];
    Ok(r_inv * (z + f1))
}

/// Lawson-Hanson active-set nonnegative least squares: argmin ||Ax - y||, x >= 0.
pub fn nnls(a: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * a.norm() * y.norm().max(1.0);
    let max_outer = 3 * n + 10;

    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let mut z = DVector::<f64>::zeros(n);
        if idx.is_empty() {
            return z;
        }
        let sub = a.select_columns(&idx);
        let sol = sub
            .svd(true, true)
            .solve(y, 1e-14)
            .expect("svd solve with both factors");
        for (k, &j) in idx.iter().enumerate() {
            z[j] = sol[k];
        }
        z
    };

    for _ in 0..max_outer {
        let grad = a.transpose() * (y - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && grad[j] > tol)
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        loop {
            let z = solve_passive(&passive);
            if (0..n).filter(|&k| passive[k]).all(|k| z[k] > 0.0) {
                x = z;
                break;
            }
            // Step back toward x until the first passive variable hits zero.
            let alpha = (0..n)
                .filter(|&k| passive[k] && z[k] <= 0.0)
                .map(|k| x[k] / (x[k] - z[k]))
                .fold(f64::INFINITY, f64::min);
            x += (z - &x) * alpha;
            for k in 0..n {
                if passive[k] && x[k] <= 1e-15 {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::FRAC_PI_4;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    fn sample_curve(curve: &BezierCurve, n: usize) -> SampledTrack {
        let ts: Vec<f64> = (0..n).map(|i| curve.horizon() * i as f64 / (n - 1) as f64).collect();
        let ps = ts.iter().map(|&t| curve.evaluate(t).unwrap()).collect();
        SampledTrack::new(ts, ps).unwrap()
    }

    #[test]
    fn bernstein_partition_of_unity() {
        for d in 0..10 {
            for k in 0..=20 {
                let s: f64 = bernstein(d, k as f64 / 20.0).iter().sum();
                assert_abs_diff_eq!(s, 1.0, epsilon = 1e-14);
            }
        }
        assert_eq!(bernstein(3, 0.0), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(bernstein(3, 1.0), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn evaluate_examples() {
        let c = BezierCurve::new(vec![v(0.0, 0.0), v(10.0, 0.0)], 6.0).unwrap();
        assert_abs_diff_eq!(c.evaluate(3.0).unwrap().x, 5.0, epsilon = 1e-14);
        assert_eq!(c.evaluate(0.0).unwrap(), v(0.0, 0.0));
        let q = BezierCurve::new(vec![v(0.0, 0.0), v(1.0, 1.0), v(2.0, 0.0)], 4.0).unwrap();
        let p = q.evaluate(2.0).unwrap();
        assert_abs_diff_eq!(p.x, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.y, 0.5, epsilon = 1e-14);
        assert_eq!(q.evaluate(4.0).unwrap(), v(2.0, 0.0));
        assert!(matches!(q.evaluate(4.1), Err(Error::Domain { .. })));
        assert!(q.evaluate(-0.1).is_err());
    }

    #[test]
    fn heading_examples() {
        let c = BezierCurve::new(vec![v(0.0, 0.0), v(5.0, 0.0), v(10.0, 0.0)], 6.0).unwrap();
        for t in [0.0, 2.0, 6.0] {
            assert_abs_diff_eq!(c.heading(t).unwrap(), 0.0, epsilon = 1e-14);
        }
        let d = BezierCurve::new(vec![v(0.0, 0.0), v(3.0, 3.0)], 6.0).unwrap();
        assert_abs_diff_eq!(d.heading(1.0).unwrap(), FRAC_PI_4, epsilon = 1e-14);
        let s = BezierCurve::new(vec![v(1.0, 2.0); 4], 6.0).unwrap();
        assert_eq!(s.heading(3.0).unwrap(), 0.0);
    }

    #[test]
    fn heading_stall_uses_earlier_direction() {
        // Moves along +y then stops: the end tangent is zero.
        let c = BezierCurve::new(vec![v(0.0, 0.0), v(0.0, 5.0), v(0.0, 5.0)], 6.0).unwrap();
        assert!(c.velocity(6.0).unwrap().norm() < 1e-12);
        assert_abs_diff_eq!(c.heading(6.0).unwrap(), std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn velocity_matches_finite_difference() {
        let c = BezierCurve::new(vec![v(0.0, 0.0), v(3.0, 1.0), v(4.0, -2.0), v(9.0, 0.5)], 5.0).unwrap();
        let h = 1e-6;
        for t in [0.5, 2.0, 4.0] {
            let fd = (c.evaluate(t + h).unwrap() - c.evaluate(t - h).unwrap()) / (2.0 * h);
            assert!((fd - c.velocity(t).unwrap()).norm() < 1e-6);
        }
    }

    #[test]
    fn fit_recovers_exact_curve() {
        let controls: Vec<Vec2> = (0..8)
            .map(|i| v(10.0 * i as f64, (i as f64 * 0.9).sin() * 3.0))
            .collect();
        let c = BezierCurve::new(controls.clone(), 6.0).unwrap();
        let fit = fit_bezier(&sample_curve(&c, 601), 7).unwrap();
        for (a, b) in fit.curve.control_points().iter().zip(&controls) {
            assert!((a - b).norm() < 1e-8);
        }
        assert!(fit.residual_rms < 1e-9);
    }

    #[test]
    fn fit_line_any_degree() {
        let c = BezierCurve::new(vec![v(1.0, 2.0), v(61.0, -10.0)], 6.0).unwrap();
        let track = sample_curve(&c, 301);
        for deg in 1..=9 {
            let fit = fit_bezier(&track, deg).unwrap();
            for (t, p) in track.timestamps().iter().zip(track.positions()) {
                assert!((fit.curve.evaluate(*t).unwrap() - p).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn fit_noisy_arc() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let radius = 300.0;
        let speed = 75.0;
        let ts: Vec<f64> = (0..601).map(|i| i as f64 * 0.01).collect();
        let ps = ts
            .iter()
            .map(|&t| {
                let a = speed * t / radius;
                v(radius * a.sin() + noise.sample(&mut rng), radius * (1.0 - a.cos()) + noise.sample(&mut rng))
            })
            .collect();
        let fit = fit_bezier(&SampledTrack::new(ts, ps).unwrap(), 7).unwrap();
        assert!(fit.residual_rms <= 0.1, "rms {}", fit.residual_rms);
    }

    #[test]
    fn fit_endpoints_pinned() {
        let ts: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let ps: Vec<Vec2> = ts.iter().map(|&t| v(t * t, (3.0 * t).sin())).collect();
        let track = SampledTrack::new(ts, ps.clone()).unwrap();
        let fit = fit_bezier(&track, 5).unwrap();
        assert_eq!(fit.curve.control_points()[0], ps[0]);
        assert_eq!(fit.curve.control_points()[5], ps[49]);
    }

    #[test]
    fn fit_errors() {
        assert!(SampledTrack::new(vec![0.0, 1.0, 1.0], vec![Vec2::zeros(); 3]).is_err());
        let track = SampledTrack::new(vec![0.0, 1.0, 2.0], vec![Vec2::zeros(); 3]).unwrap();
        assert!(matches!(fit_bezier(&track, 7), Err(Error::Fit(_))));
    }

    #[test]
    fn schedule_endpoints() {
        let c = variance_curve(7, 0.1, 1.0);
        let pbc = ProbBezierCurve::new(vec![Vec2::zeros(); 8], c, 6.0).unwrap();
        let s0 = pbc.marginal_at(0.0).unwrap().cov()[(0, 0)].sqrt();
        let s1 = pbc.marginal_at(6.0).unwrap().cov()[(0, 0)].sqrt();
        // A nondecreasing Bernstein-squared mix starts with slope -2d c_0, so
        // the start of the schedule is undershot.
        assert!((s0 - 0.1).abs() <= 0.02, "sd(0) = {s0}");
        assert!((s1 - 1.0).abs() <= 0.11, "sd(T) = {s1}");
    }

    #[test]
    fn schedule_matches_convex_solver() {
        // Interior-point solution of the same weighted, monotone problem.
        let want = [
            0.00685399, 0.25975981, 0.22167735, 1.56810451, 1.45020559, 2.25407282, 3.40642286,
            1.2164874,
        ];
        let got = fit_variance_schedule(7, 0.1, 1.0).unwrap();
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= 1e-6 * w.max(1.0), "{got:?}");
        }
    }

    fn variance_curve(deg: usize, s0: f64, s1: f64) -> Vec<Mat2> {
        fit_variance_schedule(deg, s0, s1)
            .unwrap()
            .into_iter()
            .map(|c| Mat2::identity() * c)
            .collect()
    }

    #[test]
    fn schedule_monotone() {
        let pbc = ProbBezierCurve::new(vec![Vec2::zeros(); 8], variance_curve(7, 0.1, 1.0), 6.0).unwrap();
        let mut prev = 0.0;
        for k in 0..COV_FIT_GRID {
            let t = 6.0 * k as f64 / (COV_FIT_GRID - 1) as f64;
            let var = pbc.marginal_at(t).unwrap().cov()[(0, 0)];
            assert!(var >= prev - 1e-12, "variance decreased at t={t}");
            prev = var;
        }
    }

    #[test]
    fn constant_schedule_degree_one_matches_grid_search() {
        let s = 0.5;
        let got = fit_variance_schedule(1, s, s).unwrap();
        let obj = |c0: f64, c1: f64| -> f64 {
            (0..COV_FIT_GRID)
                .map(|k| {
                    let tau = k as f64 / (COV_FIT_GRID - 1) as f64;
                    let m = (1.0 - tau).powi(2) * c0 + tau * tau * c1;
                    (m - s * s).powi(2)
                })
                .sum()
        };
        // coarse then fine grid over (c0, c1)
        let (mut best, mut b0, mut b1) = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=400 {
            for j in 0..=400 {
                let (c0, c1) = (i as f64 * 0.001, j as f64 * 0.001);
                let o = obj(c0, c1);
                if o < best {
                    (best, b0, b1) = (o, c0, c1);
                }
            }
        }
        let (c0_lo, c1_lo) = (b0 - 0.001, b1 - 0.001);
        for i in 0..=200 {
            for j in 0..=200 {
                let (c0, c1) = (c0_lo + i as f64 * 1e-5, c1_lo + j as f64 * 1e-5);
                let o = obj(c0, c1);
                if o < best {
                    (best, b0, b1) = (o, c0, c1);
                }
            }
        }
        assert_abs_diff_eq!(got[0], b0, epsilon = 2e-5);
        assert_abs_diff_eq!(got[1], b1, epsilon = 2e-5);
        assert!(got[0] > s * s && got[1] > s * s);
    }

    #[test]
    fn nnls_active_constraint() {
        // Unconstrained optimum has a negative coordinate.
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let y = DVector::from_vec(vec![2.0, -1.0, 1.0]);
        let x = nnls(&a, &y);
        assert!(x[1] == 0.0);
        assert_abs_diff_eq!(x[0], 1.5, epsilon = 1e-12);
    }

    #[test]
    fn prob_fit_means_match_deterministic_fit() {
        let ts: Vec<f64> = (0..601).map(|i| i as f64 * 0.01).collect();
        let ps: Vec<Vec2> = ts.iter().map(|&t| v(70.0 * t, 2.0 * (0.5 * t).sin())).collect();
        let track = SampledTrack::new(ts.clone(), ps).unwrap();
        let det = fit_bezier(&track, 7).unwrap().curve;
        let pbc = fit_prob_bezier(&track, 7, 0.1, 1.0).unwrap();
        for k in 0..COV_FIT_GRID {
            let t = 6.0 * k as f64 / (COV_FIT_GRID - 1) as f64;
            let m = pbc.marginal_at(t).unwrap().mean();
            assert!((m - det.evaluate(t).unwrap()).norm() < 1e-10);
        }
        assert!(fit_prob_bezier(&track, 7, 0.0, 1.0).is_err());
        assert!(fit_prob_bezier(&track, 7, 1.0, 0.5).is_err());
    }

    #[test]
    fn marginal_endpoint_and_isotropy() {
        let covs = vec![Mat2::new(0.3, 0.1, 0.1, 0.2), Mat2::identity() * 0.5, Mat2::identity()];
        let pbc = ProbBezierCurve::new(vec![v(1.0, 2.0), v(3.0, 3.0), v(5.0, 1.0)], covs.clone(), 6.0).unwrap();
        let g = pbc.marginal_at(0.0).unwrap();
        assert_eq!(g.mean(), v(1.0, 2.0));
        assert_eq!(g.cov(), covs[0]);
        let iso = ProbBezierCurve::new(
            vec![v(0.0, 0.0); 3],
            vec![Mat2::identity() * 0.2, Mat2::identity() * 0.7, Mat2::identity()],
            6.0,
        )
        .unwrap();
        let c = iso.marginal_at(2.5).unwrap().cov();
        assert_eq!(c[(0, 1)], 0.0);
        assert_abs_diff_eq!(c[(0, 0)], c[(1, 1)], epsilon = 1e-15);
    }

    #[test]
    fn sampling_zero_covariance_is_mean() {
        let pbc = ProbBezierCurve::new(vec![v(1.0, 2.0), v(3.0, 4.0)], vec![Mat2::zeros(); 2], 6.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(pbc.sample_trajectory(&mut rng), pbc.mean_curve());
    }

    #[test]
    fn sampling_seeded() {
        let pbc = ProbBezierCurve::new(vec![v(1.0, 2.0), v(3.0, 4.0)], vec![Mat2::identity(); 2], 6.0).unwrap();
        let a = pbc.sample_trajectory(&mut ChaCha8Rng::seed_from_u64(42));
        let b = pbc.sample_trajectory(&mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_statistics_match_marginal() {
        let pbc = ProbBezierCurve::new(
            vec![v(0.0, 0.0), v(10.0, 2.0), v(20.0, -1.0), v(30.0, 0.0)],
            vec![
                Mat2::identity() * 0.01,
                Mat2::new(0.3, 0.1, 0.1, 0.2),
                Mat2::identity() * 0.6,
                Mat2::new(1.0, -0.2, -0.2, 0.8),
            ],
            6.0,
        )
        .unwrap();
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let draws: Vec<BezierCurve> = (0..n).map(|_| pbc.sample_trajectory(&mut rng)).collect();

        for (i, m) in pbc.mean_points().iter().enumerate() {
            let mean = draws.iter().fold(Vec2::zeros(), |a, c| a + c.control_points()[i]) / n as f64;
            let cov = pbc.point_covs()[i];
            let se = Vec2::new(cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt()) / (n as f64).sqrt();
            assert!((mean.x - m.x).abs() <= 3.0 * se.x && (mean.y - m.y).abs() <= 3.0 * se.y);
        }

        for t in [1.0, 3.3, 6.0] {
            let g = pbc.marginal_at(t).unwrap();
            let pts: Vec<Vec2> = draws.iter().map(|c| c.evaluate(t).unwrap()).collect();
            let mean = pts.iter().fold(Vec2::zeros(), |a, p| a + p) / n as f64;
            let mut cov = Mat2::zeros();
            for p in &pts {
                let d = p - mean;
                cov += d * d.transpose();
            }
            cov /= (n - 1) as f64;
            let se = (g.cov()[(0, 0)] / n as f64).sqrt();
            assert!((mean - g.mean()).norm() <= 3.0 * 2f64.sqrt() * se);
            for (a, b) in [(0, 0), (1, 1)] {
                let rel = (cov[(a, b)] - g.cov()[(a, b)]).abs() / g.cov()[(a, b)];
                assert!(rel < 0.03, "t={t} cov[{a}{b}] rel err {rel}");
            }
        }
    }
}
