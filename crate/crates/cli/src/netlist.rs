//! JSON netlist document schema.

use plateau_core::{CircuitElement, Netlist, QubitCouplingSpec};
use serde::{Deserialize, Serialize};

/// On-disk circuit description: a ladder of elements against a resistive
/// termination, optionally with a qubit readout chain attached.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetlistDocument {
    pub z0_ohms: f64,
    pub elements: Vec<ElementDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit: Option<QubitDoc>,
}

/// One ladder element. Capacitor values in farads, inductor values in
/// henries; transmission lines carry explicit geometry fields.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ElementDoc {
    SeriesCapacitor { value: f64 },
    ShuntCapacitor { value: f64 },
    SeriesInductor { value: f64 },
    ShuntInductor { value: f64 },
    TransmissionLine { l_m: f64, z_ohms: f64, v_mps: f64 },
}

/// Qubit block: coupling capacitance, lumped resonator, and the total
/// qubit capacitance used for T1 limits.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitDoc {
    pub c_c_f: f64,
    pub c_res_f: f64,
    pub l_res_h: f64,
    pub c_q_f: f64,
}

impl NetlistDocument {
    pub fn to_netlist(&self) -> plateau_core::Result<Netlist> {
        let mut elements = Vec::with_capacity(self.elements.len());
        for e in &self.elements {
            elements.push(match *e {
                ElementDoc::SeriesCapacitor { value } => CircuitElement::series_capacitor(value)?,
                ElementDoc::ShuntCapacitor { value } => CircuitElement::shunt_capacitor(value)?,
                ElementDoc::SeriesInductor { value } => CircuitElement::series_inductor(value)?,
                ElementDoc::ShuntInductor { value } => CircuitElement::shunt_inductor(value)?,
                ElementDoc::TransmissionLine { l_m, z_ohms, v_mps } => {
                    CircuitElement::transmission_line(l_m, z_ohms, v_mps)?
                }
            });
        }
        Netlist::new(elements, self.z0_ohms)
    }

    pub fn qubit_spec(&self) -> plateau_core::Result<Option<(QubitCouplingSpec, f64)>> {
        match &self.qubit {
            None => Ok(None),
            Some(q) => {
                if !(q.c_q_f > 0.0 && q.c_q_f.is_finite()) {
                    return Err(plateau_core::Error::InvalidInput(format!(
                        "qubit capacitance must be positive, got {}",
                        q.c_q_f
                    )));
                }
                let spec = QubitCouplingSpec::new(q.c_c_f, q.c_res_f, q.l_res_h)?;
                Ok(Some((spec, q.c_q_f)))
            }
        }
    }

    /// Ladder document for an alternating series-C / shunt-L filter.
    pub fn from_ladder(values: &[f64], z0_ohms: f64, qubit: Option<QubitDoc>) -> Self {
        let elements = values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if i % 2 == 0 {
                    ElementDoc::SeriesCapacitor { value: v }
                } else {
                    ElementDoc::ShuntInductor { value: v }
                }
            })
            .collect();
        Self {
            z0_ohms,
            elements,
            qubit,
        }
    }
}
