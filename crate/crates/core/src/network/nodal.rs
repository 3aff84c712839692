//! Independent input-admittance oracle via full nodal analysis.
//!
//! Instead of cascading ABCD matrices, this route assembles the complete
//! node-admittance matrix of the ladder (one node per series-element
//! junction, the termination as a resistor to ground) and solves the
//! complex linear system for the node voltages under unit current
//! injection at port 1.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::network::{element_abcd, Netlist};

/// Input admittance of `netlist` at `omega` by nodal analysis.
///
/// Series and line elements are stamped through their Y-parameters; shunt
/// elements add onto the diagonal of the current node. Intended as a test
/// oracle for [`crate::network::input_admittance`].
pub fn nodal_oracle(netlist: &Netlist, omega: f64) -> Result<Complex64> {
    // Count nodes: port 1 plus one per series/line element.
    let n_nodes = 1 + netlist
        .elements
        .iter()
        .filter(|e| !e.is_shunt())
        .count();
    let mut g = DMatrix::<Complex64>::zeros(n_nodes, n_nodes);

    let mut node = 0usize;
    for element in &netlist.elements {
        if let Some(y) = element.shunt_value(omega) {
            if !(y.re.is_finite() && y.im.is_finite()) {
                return Err(Error::SingularMatrix(format!(
                    "shunt branch evaluated non-finite at omega = {omega}"
                )));
            }
            g[(node, node)] += y;
        } else {
            let yp = element_abcd(element, omega)?.y_params()?;
            let next = node + 1;
            g[(node, node)] += yp[0][0];
            g[(node, next)] += yp[0][1];
            g[(next, node)] += yp[1][0];
            g[(next, next)] += yp[1][1];
            node = next;
        }
    }
    // Termination resistor from the last node to ground.
    g[(node, node)] += Complex64::new(1.0 / netlist.termination_ohms, 0.0);

    if g.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::SingularMatrix(
            "non-finite entry in node-admittance matrix".into(),
        ));
    }

    // Unit current into node 0; admittance is I / V(0).
    let mut rhs = DMatrix::<Complex64>::zeros(n_nodes, 1);
    rhs[(0, 0)] = Complex64::new(1.0, 0.0);
    let lu = g.lu();
    let v = lu
        .solve(&rhs)
        .ok_or_else(|| Error::SingularMatrix("LU solve failed".into()))?;
    let v0 = v[(0, 0)];
    if v0.norm() < crate::network::SINGULAR_DENOMINATOR || !v0.re.is_finite() || !v0.im.is_finite()
    {
        return Err(Error::SingularMatrix(format!(
            "driven node voltage vanished at omega = {omega}"
        )));
    }
    Ok(Complex64::new(1.0, 0.0) / v0)
}
