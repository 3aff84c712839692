//! Denominator-polynomial extraction and pole finding.
//!
//! A lossless ladder terminated in Z0 has Re[Y](omega) = omega^(2d) / P(x)
//! with x = omega^2 and P a degree-d polynomial with positive constant
//! term. P is recovered by sampling the exact product
//! x^d * (A^2 Z0^2 + |B|^2) / Z0 at Chebyshev-spaced nodes and solving the
//! interpolation system in a rescaled variable for conditioning.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Angular-frequency window for the interpolation nodes. The sampled
/// function is a polynomial, so node placement only affects conditioning.
const NODE_OMEGA_LO: f64 = 2.0 * std::f64::consts::PI * 0.25e9;
const NODE_OMEGA_HI: f64 = 2.0 * std::f64::consts::PI * 16e9;

/// Degree-d real polynomial in x = omega^2, constant term first.
#[derive(Debug, Clone, PartialEq)]
pub struct DenominatorPoly {
    coeffs: Vec<f64>,
}

impl DenominatorPoly {
    /// Build from raw coefficients (constant first); the constant term must
    /// be positive and the polynomial positive over the sampled real axis.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidInput(
                "denominator polynomial needs degree >= 1".into(),
            ));
        }
        if !(coeffs[0] > 0.0) {
            return Err(Error::InvalidInput(format!(
                "constant term must be positive, got {}",
                coeffs[0]
            )));
        }
        let p = Self { coeffs };
        // Positivity spot check for real frequencies across the node window.
        for i in 0..64 {
            let omega = NODE_OMEGA_LO + (NODE_OMEGA_HI - NODE_OMEGA_LO) * i as f64 / 63.0;
            if p.eval(omega * omega) <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "polynomial not positive at omega = {omega}"
                )));
            }
        }
        Ok(p)
    }

    /// Interpolate the degree-`degree` polynomial g(x) through Chebyshev
    /// nodes, where `g` must be exactly polynomial in x.
    pub fn interpolate<G>(g: G, degree: usize) -> Result<Self>
    where
        G: Fn(f64) -> Result<f64>,
    {
        if degree == 0 {
            return Err(Error::InvalidInput("degree must be >= 1".into()));
        }
        let n = degree + 1;
        let x_lo = NODE_OMEGA_LO * NODE_OMEGA_LO;
        let x_hi = NODE_OMEGA_HI * NODE_OMEGA_HI;
        let x_scale = x_hi;

        // Chebyshev points mapped onto [x_lo, x_hi].
        let mut nodes_u = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        for k in 0..n {
            let t = ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
            let x = 0.5 * (x_lo + x_hi) + 0.5 * (x_hi - x_lo) * t;
            nodes_u.push(x / x_scale);
            values.push(g(x)?);
        }

        // Scale the sampled values to keep the solve near unit magnitude.
        let v_scale = values
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut vander = DMatrix::<f64>::zeros(n, n);
        for (j, &u) in nodes_u.iter().enumerate() {
            let mut p = 1.0;
            for k in 0..n {
                vander[(j, k)] = p;
                p *= u;
            }
        }
        let rhs = DVector::from_iterator(n, values.iter().map(|v| v / v_scale));
        let lu = vander.clone().lu();
        let q = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Conditioning("interpolation system is singular".into()))?;

        // Residual check against rank deficiency slipping through LU.
        let resid = (&vander * &q - &rhs).amax();
        if !resid.is_finite() || resid > 1e-6 {
            return Err(Error::Conditioning(format!(
                "interpolation residual {resid:e} too large"
            )));
        }

        let mut coeffs = Vec::with_capacity(n);
        let mut scale_k = 1.0;
        for k in 0..n {
            coeffs.push(q[k] * v_scale / scale_k);
            scale_k *= x_scale;
        }
        Self::from_coeffs(coeffs)
    }

    /// Coefficients in x = omega^2, constant term first, SI units.
    #[must_use]
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    #[must_use]
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Horner evaluation at x = omega^2.
    #[must_use]
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// All roots in x via companion-matrix eigenvalues, computed in the
    /// rescaled variable for conditioning.
    pub fn roots_x(&self) -> Result<Vec<Complex64>> {
        let d = self.degree();
        let x_scale = NODE_OMEGA_HI * NODE_OMEGA_HI;
        // q_k = c_k * x_scale^k so that q(u) = P(u * x_scale).
        let mut q: Vec<f64> = Vec::with_capacity(d + 1);
        let mut s = 1.0;
        for &c in &self.coeffs {
            q.push(c * s);
            s *= x_scale;
        }
        let lead = q[d];
        if lead == 0.0 || !lead.is_finite() {
            return Err(Error::RootFinding(format!(
                "leading coefficient degenerate: {lead}"
            )));
        }
        let mut comp = DMatrix::<f64>::zeros(d, d);
        for i in 1..d {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..d {
            comp[(i, d - 1)] = -q[i] / lead;
        }
        let eig = comp
            .complex_eigenvalues()
            .iter()
            .map(|e| Complex64::new(e.re, e.im) * x_scale)
            .collect::<Vec<_>>();

        // Residual diagnostic: every eigenvalue must actually be a root.
        for x in &eig {
            let p = self.eval_complex(*x);
            let scale = self
                .coeffs
                .iter()
                .enumerate()
                .fold(0.0f64, |acc, (k, &c)| acc.max((c * x.norm().powi(k as i32)).abs()));
            if p.norm() > 1e-6 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::RootFinding(format!(
                    "companion root {x} has residual {:e}",
                    p.norm()
                )));
            }
        }
        Ok(eig)
    }

    fn eval_complex(&self, x: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    /// Resonant poles: roots with Re(x) > 0 mapped to omega = sqrt(x) on
    /// the decaying branch (Re > 0, Im <= 0), sorted by real part. One pole
    /// per conjugate pair.
    pub fn resonant_poles(&self) -> Result<Vec<Complex64>> {
        let mut poles: Vec<Complex64> = self
            .roots_x()?
            .into_iter()
            .filter(|x| x.re > 0.0 && x.im <= 0.0)
            .map(|x| x.sqrt())
            .collect();
        poles.sort_by(|a, b| a.re.total_cmp(&b.re));
        Ok(poles)
    }
}
