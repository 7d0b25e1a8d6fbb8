//! Bivariate Gaussians and their mass over rectangles and disks.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{OrientedRect, Pose2, Vec2};
use crate::quadrature::{gauss_legendre_rule, integrate_2d, Interval, QuadRule};

pub type Mat2 = Matrix2<f64>;

/// Minimum admissible covariance eigenvalue, m^2.
pub const MIN_EIGENVALUE: f64 = 1e-12;

/// Default radial x angular order for disk integrals.
pub const DISK_ORDER: usize = 32;

/// Bivariate normal with its precision matrix and normalizer precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian2 {
    mean: Vec2,
    cov: Mat2,
    precision: Mat2,
    norm: f64,
}

impl Gaussian2 {
    pub fn new(mean: Vec2, cov: Mat2) -> Result<Self> {
        check_symmetric(&cov)?;
        let (lo, _) = eigenvalues(&cov);
        if !(lo > MIN_EIGENVALUE) {
            return Err(Error::InvalidDistribution(format!(
                "covariance not positive definite (min eigenvalue {lo:e} m^2)"
            )));
        }
        let det = cov[(0, 0)] * cov[(1, 1)] - cov[(0, 1)] * cov[(1, 0)];
        let precision = Mat2::new(cov[(1, 1)], -cov[(0, 1)], -cov[(1, 0)], cov[(0, 0)]) / det;
        Ok(Self {
            mean,
            cov,
            precision,
            norm: 1.0 / (2.0 * PI * det.sqrt()),
        })
    }

    pub fn isotropic(mean: Vec2, variance: f64) -> Result<Self> {
        Self::new(mean, Mat2::identity() * variance)
    }

    pub fn mean(&self) -> Vec2 {
        self.mean
    }

    pub fn cov(&self) -> Mat2 {
        self.cov
    }

    pub fn pdf(&self, p: Vec2) -> f64 {
        let d = p - self.mean;
        let q = d.dot(&(self.precision * d));
        self.norm * (-0.5 * q).exp()
    }

    /// Same covariance, different mean.
    pub fn with_mean(&self, mean: Vec2) -> Self {
        Self { mean, ..*self }
    }

    /// The distribution expressed in the local frame of `pose`.
    pub fn in_frame(&self, pose: &Pose2) -> Self {
        let (s, c) = pose.heading().sin_cos();
        let rot = Mat2::new(c, -s, s, c);
        let rt = rot.transpose();
        Self {
            mean: pose.to_local(self.mean),
            cov: rt * self.cov * rot,
            precision: rt * self.precision * rot,
            norm: self.norm,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2 {
        let z = Vec2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        self.mean + psd_cholesky(&self.cov) * z
    }
}

fn check_symmetric(cov: &Mat2) -> Result<()> {
    let off = (cov[(0, 1)] - cov[(1, 0)]).abs();
    let scale = cov.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !cov.iter().all(|v| v.is_finite()) || off > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidDistribution(format!(
            "covariance not symmetric: {cov:?}"
        )));
    }
    Ok(())
}

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
pub fn eigenvalues(m: &Mat2) -> (f64, f64) {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mid = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mid - r, mid + r)
}

/// Lower Cholesky factor that tolerates positive semidefinite input
/// (zero variance yields a zero column).
pub fn psd_cholesky(m: &Mat2) -> Mat2 {
    let l11 = m[(0, 0)].max(0.0).sqrt();
    let l21 = if l11 > 0.0 { m[(1, 0)] / l11 } else { 0.0 };
    let l22 = (m[(1, 1)] - l21 * l21).max(0.0).sqrt();
    Mat2::new(l11, 0.0, l21, l22)
}

pub fn pdf(g: &Gaussian2, p: Vec2) -> f64 {
    g.pdf(p)
}

/// Half-width, in marginal standard deviations, of the box around the mean
/// that a rule of this order integrates well. Balances the Gauss-Legendre
/// error on `exp(-k^2 u^2 / 2)` against the Gaussian tail mass beyond `k`:
/// about 1.7e-5 at order 12, 3e-10 at order 24; capped at 8 sigma.
pub fn tail_sigmas(order: usize) -> f64 {
    (1.3 * (order as f64).sqrt()).min(8.0)
}

/// Cubature of the density over an oriented rectangle, clipped to [0, 1].
///
/// Nodes live in the rectangle frame. The domain `[-L/2, L/2] x [-W/2, W/2]`
/// is first intersected with the [`tail_sigmas`] box around the mean, so a
/// density much narrower than the rectangle still lands on the nodes. An
/// empty intersection gives 0.
pub fn integral_over_rect(g: &Gaussian2, rect: &OrientedRect, rule: &QuadRule) -> f64 {
    let local = g.in_frame(&rect.pose);
    let hl = 0.5 * rect.length();
    let hw = 0.5 * rect.width();
    let m = local.mean();
    let k = tail_sigmas(rule.order());
    let rx = k * local.cov()[(0, 0)].sqrt();
    let ry = k * local.cov()[(1, 1)].sqrt();
    let (Ok(x), Ok(y)) = (
        Interval::new((m.x - rx).max(-hl), (m.x + rx).min(hl)),
        Interval::new((m.y - ry).max(-hw), (m.y + ry).min(hw)),
    ) else {
        return 0.0;
    };
    let mass = integrate_2d(|u, v| local.pdf(Vec2::new(u, v)), x, y, rule);
    mass.clamp(0.0, 1.0)
}

/// Polar Gauss-Legendre product rule over a disk, clipped to [0, 1].
pub fn integral_over_disk(
    g: &Gaussian2,
    center: Vec2,
    radius: f64,
    radial_order: usize,
    angular_order: usize,
) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("disk radius must be positive, got {radius}")));
    }
    let radial = gauss_legendre_rule(radial_order)?;
    let angular = gauss_legendre_rule(angular_order)?;
    let r_dom = Interval::new(0.0, radius)?;
    let th_dom = Interval::new(0.0, 2.0 * PI)?;
    let mut total = 0.0;
    for (th, wt) in angular.mapped_nodes(th_dom) {
        let dir = Vec2::new(th.cos(), th.sin());
        let ring: f64 = radial
            .mapped_nodes(r_dom)
            .map(|(r, wr)| wr * r * g.pdf(center + dir * r))
            .sum();
        total += wt * ring;
    }
    let mass = 0.5 * radius * PI * total;
    Ok(mass.clamp(0.0, 1.0))
}
