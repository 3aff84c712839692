//! Complex two-port (ABCD) algebra for ladder networks.
//!
//! Elements are evaluated lazily per angular frequency, cascaded by 2x2
//! matrix multiplication, and reduced to an input admittance against a
//! resistive termination. All frequencies are angular (rad/s); Hz only
//! appears at I/O boundaries.

mod nodal;

pub use nodal::nodal_oracle;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Denominators smaller than this are reported as singular instead of
/// letting infinities propagate.
pub const SINGULAR_DENOMINATOR: f64 = 1e-300;

/// Relative tolerance for the lossless-structure check on ABCD entries.
pub const LOSSLESS_TOL: f64 = 1e-12;

/// ABCD matrix of a two-port at a single angular frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPort {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl TwoPort {
    /// Through connection: [[1, 0], [0, 1]].
    #[must_use]
    pub fn identity() -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    /// Series impedance `z`: [[1, z], [0, 1]].
    #[must_use]
    pub fn series_impedance(z: Complex64) -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: z,
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    /// Shunt admittance `y`: [[1, 0], [y, 1]].
    #[must_use]
    pub fn shunt_admittance(y: Complex64) -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: y,
            d: Complex64::new(1.0, 0.0),
        }
    }

    /// Lossless line section of electrical length `beta_l` and
    /// characteristic impedance `z`.
    #[must_use]
    pub fn line_section(beta_l: f64, z: f64) -> Self {
        let (s, c) = beta_l.sin_cos();
        Self {
            a: Complex64::new(c, 0.0),
            b: Complex64::new(0.0, z * s),
            c: Complex64::new(0.0, s / z),
            d: Complex64::new(c, 0.0),
        }
    }

    /// `self` followed by `rhs` (left-to-right matrix product).
    #[must_use]
    pub fn then(&self, rhs: &TwoPort) -> TwoPort {
        TwoPort {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    /// ABCD determinant `ad - bc`; 1 for every reciprocal network.
    #[must_use]
    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// Largest entry magnitude, used to scale structural tolerances.
    #[must_use]
    pub fn max_norm(&self) -> f64 {
        self.a
            .norm()
            .max(self.b.norm())
            .max(self.c.norm())
            .max(self.d.norm())
    }

    /// Y-parameters of the two-port, for nodal stamping. Requires `b != 0`.
    pub(crate) fn y_params(&self) -> Result<[[Complex64; 2]; 2]> {
        if self.b.norm() < SINGULAR_DENOMINATOR {
            return Err(Error::SingularMatrix(
                "two-port with vanishing B entry has no Y-parameter form".into(),
            ));
        }
        let inv_b = Complex64::new(1.0, 0.0) / self.b;
        let det = self.det();
        Ok([
            [self.d * inv_b, -det * inv_b],
            [-inv_b, self.a * inv_b],
        ])
    }
}

/// Left-to-right cascade of two-ports; the empty cascade is the identity.
#[must_use]
pub fn cascade<'a, I>(ports: I) -> TwoPort
where
    I: IntoIterator<Item = &'a TwoPort>,
{
    let mut acc = TwoPort::identity();
    for p in ports {
        acc = acc.then(p);
    }
    acc
}

/// Frequency-dependent impedance or admittance, shared across threads.
pub type OmegaFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// One ladder element. Physical element values are validated at
/// construction; the generic function variants carry arbitrary dispersive
/// branches and are not validated.
#[derive(Clone)]
pub enum CircuitElement {
    SeriesCapacitor { farads: f64 },
    ShuntInductor { henries: f64 },
    SeriesInductor { henries: f64 },
    ShuntCapacitor { farads: f64 },
    SeriesImpedance(OmegaFn),
    ShuntAdmittance(OmegaFn),
    TransmissionLine {
        length_m: f64,
        z_ohms: f64,
        velocity_mps: f64,
    },
}

impl fmt::Debug for CircuitElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SeriesCapacitor { farads } => write!(f, "SeriesCapacitor({farads} F)"),
            Self::ShuntInductor { henries } => write!(f, "ShuntInductor({henries} H)"),
            Self::SeriesInductor { henries } => write!(f, "SeriesInductor({henries} H)"),
            Self::ShuntCapacitor { farads } => write!(f, "ShuntCapacitor({farads} F)"),
            Self::SeriesImpedance(_) => write!(f, "SeriesImpedance(fn)"),
            Self::ShuntAdmittance(_) => write!(f, "ShuntAdmittance(fn)"),
            Self::TransmissionLine {
                length_m,
                z_ohms,
                velocity_mps,
            } => write!(f, "TransmissionLine({length_m} m, {z_ohms} ohm, {velocity_mps} m/s)"),
        }
    }
}

fn require_positive(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidInput(format!(
            "{what} must be strictly positive, got {value}"
        )))
    }
}

impl CircuitElement {
    pub fn series_capacitor(farads: f64) -> Result<Self> {
        Ok(Self::SeriesCapacitor {
            farads: require_positive(farads, "series capacitance")?,
        })
    }

    pub fn shunt_inductor(henries: f64) -> Result<Self> {
        Ok(Self::ShuntInductor {
            henries: require_positive(henries, "shunt inductance")?,
        })
    }

    pub fn series_inductor(henries: f64) -> Result<Self> {
        Ok(Self::SeriesInductor {
            henries: require_positive(henries, "series inductance")?,
        })
    }

    pub fn shunt_capacitor(farads: f64) -> Result<Self> {
        Ok(Self::ShuntCapacitor {
            farads: require_positive(farads, "shunt capacitance")?,
        })
    }

    pub fn series_impedance<F>(z_of_omega: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        Self::SeriesImpedance(Arc::new(z_of_omega))
    }

    pub fn shunt_admittance<F>(y_of_omega: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        Self::ShuntAdmittance(Arc::new(y_of_omega))
    }

    pub fn transmission_line(length_m: f64, z_ohms: f64, velocity_mps: f64) -> Result<Self> {
        Ok(Self::TransmissionLine {
            length_m: require_positive(length_m, "line length")?,
            z_ohms: require_positive(z_ohms, "line impedance")?,
            velocity_mps: require_positive(velocity_mps, "line phase velocity")?,
        })
    }

    /// True for shunt branches, which do not open a new ladder node.
    #[must_use]
    pub fn is_shunt(&self) -> bool {
        matches!(
            self,
            Self::ShuntInductor { .. } | Self::ShuntCapacitor { .. } | Self::ShuntAdmittance(_)
        )
    }

    /// Shunt-branch admittance at `omega`; `None` for series/line elements.
    pub(crate) fn shunt_value(&self, omega: f64) -> Option<Complex64> {
        match self {
            Self::ShuntInductor { henries } => {
                Some(Complex64::new(1.0, 0.0) / Complex64::new(0.0, omega * henries))
            }
            Self::ShuntCapacitor { farads } => Some(Complex64::new(0.0, omega * farads)),
            Self::ShuntAdmittance(y) => Some(y(omega)),
            _ => None,
        }
    }
}

/// ABCD matrix of one element at angular frequency `omega`.
pub fn element_abcd(element: &CircuitElement, omega: f64) -> Result<TwoPort> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidInput(format!(
            "angular frequency must be strictly positive, got {omega}"
        )));
    }
    let port = match element {
        CircuitElement::SeriesCapacitor { farads } => {
            TwoPort::series_impedance(Complex64::new(1.0, 0.0) / Complex64::new(0.0, omega * farads))
        }
        CircuitElement::SeriesInductor { henries } => {
            TwoPort::series_impedance(Complex64::new(0.0, omega * henries))
        }
        CircuitElement::ShuntInductor { .. }
        | CircuitElement::ShuntCapacitor { .. }
        | CircuitElement::ShuntAdmittance(_) => {
            TwoPort::shunt_admittance(element.shunt_value(omega).expect("shunt element"))
        }
        CircuitElement::SeriesImpedance(z) => TwoPort::series_impedance(z(omega)),
        CircuitElement::TransmissionLine {
            length_m,
            z_ohms,
            velocity_mps,
        } => TwoPort::line_section(omega * length_m / velocity_mps, *z_ohms),
    };
    Ok(port)
}

/// Ordered ladder of elements (port-1 side first) against a resistive
/// termination.
#[derive(Debug, Clone)]
pub struct Netlist {
    pub elements: Vec<CircuitElement>,
    pub termination_ohms: f64,
}

impl Netlist {
    /// An empty element list is legal: the bare termination.
    pub fn new(elements: Vec<CircuitElement>, termination_ohms: f64) -> Result<Self> {
        Ok(Self {
            elements,
            termination_ohms: require_positive(termination_ohms, "termination resistance")?,
        })
    }

    /// Cascaded ABCD matrix of all elements at `omega` (termination excluded).
    pub fn abcd(&self, omega: f64) -> Result<TwoPort> {
        let mut acc = TwoPort::identity();
        for e in &self.elements {
            acc = acc.then(&element_abcd(e, omega)?);
        }
        Ok(acc)
    }
}

/// Input admittance at port 1 with port 2 terminated in the netlist's
/// resistance: Y = (C*Z0 + D) / (A*Z0 + B).
pub fn input_admittance(netlist: &Netlist, omega: f64) -> Result<Complex64> {
    let m = netlist.abcd(omega)?;
    let z0 = Complex64::new(netlist.termination_ohms, 0.0);
    let denom = m.a * z0 + m.b;
    if denom.norm() < SINGULAR_DENOMINATOR {
        return Err(Error::SingularFrequency { omega });
    }
    Ok((m.c * z0 + m.d) / denom)
}

/// Real part of the terminated input admittance of a lossless two-port:
/// Re[Y] = Z0 / (A^2 Z0^2 + |B|^2), valid when A, D are real and B, C are
/// purely imaginary.
pub fn re_admittance_lossless(filter_abcd: &TwoPort, z0_ohms: f64) -> Result<f64> {
    if !(z0_ohms.is_finite() && z0_ohms > 0.0) {
        return Err(Error::InvalidInput(format!(
            "termination must be strictly positive, got {z0_ohms}"
        )));
    }
    let scale = filter_abcd.max_norm();
    let tol = LOSSLESS_TOL * scale;
    let residue = filter_abcd
        .a
        .im
        .abs()
        .max(filter_abcd.d.im.abs())
        .max(filter_abcd.b.re.abs())
        .max(filter_abcd.c.re.abs());
    if residue > tol {
        return Err(Error::LosslessViolation(format!(
            "lossy residue {residue:e} exceeds {tol:e}"
        )));
    }
    let a = filter_abcd.a.re;
    let b = filter_abcd.b.im;
    let denom = a * a * z0_ohms * z0_ohms + b * b;
    if denom < SINGULAR_DENOMINATOR {
        return Err(Error::SingularFrequency { omega: f64::NAN });
    }
    Ok(z0_ohms / denom)
}

/// Strictly increasing grid of angular frequencies.
#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    points: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("frequency grid is empty".into()));
        }
        if !points[0].is_finite() || points[0] <= 0.0 {
            return Err(Error::InvalidInput(
                "frequency grid must start above zero".into(),
            ));
        }
        if points.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidInput(
                "frequency grid must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    /// `n` evenly spaced points over `[lo, hi]`; `n == 1` yields `[lo]`.
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("need at least one grid point".into()));
        }
        if n == 1 {
            return Self::new(vec![lo]);
        }
        if !(hi > lo) {
            return Err(Error::InvalidInput(format!(
                "need hi > lo for a grid, got [{lo}, {hi}]"
            )));
        }
        let step = (hi - lo) / (n - 1) as f64;
        Self::new((0..n).map(|i| lo + step * i as f64).collect())
    }

    /// `n` log-spaced points over `[lo, hi]`.
    pub fn logspace(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("need at least one grid point".into()));
        }
        if n == 1 {
            return Self::new(vec![lo]);
        }
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::InvalidInput(format!(
                "need 0 < lo < hi for a log grid, got [{lo}, {hi}]"
            )));
        }
        let (llo, lhi) = (lo.ln(), hi.ln());
        let step = (lhi - llo) / (n - 1) as f64;
        Self::new((0..n).map(|i| (llo + step * i as f64).exp()).collect())
    }

    #[must_use]
    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const GHZ: f64 = 2.0 * PI * 1e9;

    fn assert_c_eq(x: Complex64, y: Complex64, eps: f64) {
        assert!(
            (x - y).norm() <= eps * (1.0 + y.norm()),
            "{x} != {y} (eps {eps})"
        );
    }

    #[test]
    fn zero_series_impedance_is_identity() {
        let e = CircuitElement::series_impedance(|_| Complex64::new(0.0, 0.0));
        let m = element_abcd(&e, 7.0 * GHZ).unwrap();
        assert_c_eq(m.a, Complex64::new(1.0, 0.0), 1e-15);
        assert_c_eq(m.b, Complex64::new(0.0, 0.0), 1e-15);
        assert_c_eq(m.c, Complex64::new(0.0, 0.0), 1e-15);
        assert_c_eq(m.d, Complex64::new(1.0, 0.0), 1e-15);
    }

    #[test]
    fn half_wave_line_negates() {
        // beta * l = pi at omega = pi * v / l
        let v = 1.2e8;
        let l = 0.008;
        let omega = PI * v / l;
        let e = CircuitElement::transmission_line(l, 50.0, v).unwrap();
        let m = element_abcd(&e, omega).unwrap();
        assert_relative_eq!(m.a.re, -1.0, epsilon = 1e-12);
        assert_relative_eq!(m.d.re, -1.0, epsilon = 1e-12);
        assert!(m.b.norm() < 1e-9 * 50.0);
        assert!(m.c.norm() < 1e-9 / 50.0);
    }

    #[test]
    fn series_capacitor_b_entry_matches_closed_form() {
        let c = 7.92e-15;
        let omega = 7.0 * GHZ;
        let e = CircuitElement::series_capacitor(c).unwrap();
        let m = element_abcd(&e, omega).unwrap();
        assert_relative_eq!(m.b.norm(), 1.0 / (omega * c), max_relative = 1e-14);
        assert_relative_eq!(m.b.im, -1.0 / (omega * c), max_relative = 1e-14);
        assert_eq!(m.b.re, 0.0);
    }

    #[test]
    fn rejects_nonpositive_values() {
        assert!(CircuitElement::series_capacitor(0.0).is_err());
        assert!(CircuitElement::shunt_inductor(-1e-9).is_err());
        assert!(CircuitElement::transmission_line(0.01, 50.0, f64::NAN).is_err());
        let e = CircuitElement::series_capacitor(1e-15).unwrap();
        assert!(element_abcd(&e, -1.0).is_err());
        assert!(element_abcd(&e, 0.0).is_err());
    }

    #[test]
    fn cascade_empty_and_identity() {
        let id = cascade([].iter());
        assert_c_eq(id.a, Complex64::new(1.0, 0.0), 0.0);
        let m = element_abcd(&CircuitElement::series_capacitor(5e-15).unwrap(), GHZ).unwrap();
        let back = cascade([TwoPort::identity(), m].iter());
        assert_c_eq(back.b, m.b, 0.0);
    }

    #[test]
    fn cascade_matches_hand_multiplied_product() {
        let omega = 3.7 * GHZ;
        let mc = element_abcd(&CircuitElement::series_capacitor(8e-15).unwrap(), omega).unwrap();
        let ml = element_abcd(&CircuitElement::shunt_inductor(1.5e-9).unwrap(), omega).unwrap();
        let got = cascade([mc, ml].iter());
        // hand multiply [[1, Zc], [0, 1]] * [[1, 0], [Yl, 1]]
        let zc = mc.b;
        let yl = ml.c;
        assert_c_eq(got.a, Complex64::new(1.0, 0.0) + zc * yl, 1e-15);
        assert_c_eq(got.b, zc, 1e-15);
        assert_c_eq(got.c, yl, 1e-15);
        assert_c_eq(got.d, Complex64::new(1.0, 0.0), 1e-15);
    }

    #[test]
    fn bare_termination_admittance() {
        let n = Netlist::new(vec![], 50.0).unwrap();
        let y = input_admittance(&n, 7.5 * GHZ).unwrap();
        assert_relative_eq!(y.re, 0.02, max_relative = 1e-15);
        assert_eq!(y.im, 0.0);
    }

    #[test]
    fn single_series_capacitor_closed_form() {
        let c = 9.13e-15;
        let z0 = 50.0;
        let omega = 6.3 * GHZ;
        let n = Netlist::new(vec![CircuitElement::series_capacitor(c).unwrap()], z0).unwrap();
        let y = input_admittance(&n, omega).unwrap();
        let jwc = Complex64::new(0.0, omega * c);
        let expect = jwc / (Complex64::new(1.0, 0.0) + jwc * z0);
        assert_c_eq(y, expect, 1e-14);
    }

    #[test]
    fn singular_denominator_is_an_error() {
        // A constant -Z0 series branch cancels the termination exactly.
        let n = Netlist::new(
            vec![CircuitElement::series_impedance(|_| Complex64::new(-50.0, 0.0))],
            50.0,
        )
        .unwrap();
        match input_admittance(&n, GHZ) {
            Err(Error::SingularFrequency { .. }) => {}
            other => panic!("expected singular frequency, got {other:?}"),
        }
    }

    #[test]
    fn re_admittance_identity_filter_is_bare_load() {
        let y = re_admittance_lossless(&TwoPort::identity(), 50.0).unwrap();
        assert_relative_eq!(y, 0.02, max_relative = 1e-15);
    }

    #[test]
    fn re_admittance_single_series_capacitor() {
        let c = 7.4e-15;
        let z0 = 50.0;
        let omega = 5.9 * GHZ;
        let m = element_abcd(&CircuitElement::series_capacitor(c).unwrap(), omega).unwrap();
        let got = re_admittance_lossless(&m, z0).unwrap();
        let w2c2 = omega * omega * c * c;
        assert_relative_eq!(got, w2c2 * z0 / (1.0 + w2c2 * z0 * z0), max_relative = 1e-12);
    }

    #[test]
    fn re_admittance_rejects_lossy_matrix() {
        let m = TwoPort::series_impedance(Complex64::new(50.0, 0.0));
        match re_admittance_lossless(&m, 50.0) {
            Err(Error::LosslessViolation(_)) => {}
            other => panic!("expected lossless violation, got {other:?}"),
        }
    }

    #[test]
    fn grid_constructors_validate() {
        assert!(FrequencyGrid::new(vec![]).is_err());
        assert!(FrequencyGrid::new(vec![1.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![-1.0, 1.0]).is_err());
        let g = FrequencyGrid::linspace(GHZ, 2.0 * GHZ, 11).unwrap();
        assert_eq!(g.len(), 11);
        assert_relative_eq!(g.as_slice()[10], 2.0 * GHZ, max_relative = 1e-15);
        let lg = FrequencyGrid::logspace(GHZ, 10.0 * GHZ, 5).unwrap();
        assert_relative_eq!(lg.as_slice()[2], GHZ.sqrt() * (10.0 * GHZ).sqrt(), max_relative = 1e-12);
    }
}
