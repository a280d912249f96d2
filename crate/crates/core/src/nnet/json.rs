//! JSON document for [`Network`]:
//! `{d, L, activation:{kind, k, C, a, b}, steps:[{in, out, edges:[[r,c,v]…], nodes:[[r,v]…]}]}`.

use serde::{Deserialize, Serialize};

use super::{ActivationKind, ActivationSpec, AffineStep, NetError, Network, SigmoidalConstants, Table};

#[derive(Serialize, Deserialize)]
struct ActivationDoc {
    kind: String,
    k: u32,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none", default)]
    c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    table: Option<Vec<(f64, f64)>>,
}

#[derive(Serialize, Deserialize)]
struct StepDoc {
    #[serde(rename = "in")]
    in_dim: usize,
    out: usize,
    edges: Vec<(usize, usize, f64)>,
    nodes: Vec<(usize, f64)>,
}

#[derive(Serialize, Deserialize)]
struct NetworkDoc {
    d: usize,
    #[serde(rename = "L")]
    depth: usize,
    activation: ActivationDoc,
    steps: Vec<StepDoc>,
}

pub fn network_to_json(net: &Network) -> String {
    let act = net.activation();
    let table = match &act.kind {
        ActivationKind::Tabulated(t) => Some(t.knots.clone()),
        _ => None,
    };
    let doc = NetworkDoc {
        d: net.input_dim(),
        depth: net.depth(),
        activation: ActivationDoc {
            kind: act.kind.name().to_string(),
            k: act.order,
            c: act.constants.map(|c| c.c),
            a: act.constants.map(|c| c.a),
            b: act.constants.map(|c| c.b),
            table,
        },
        steps: net
            .steps()
            .iter()
            .map(|s| StepDoc { in_dim: s.in_dim(), out: s.out_dim(), edges: s.edges().to_vec(), nodes: s.nodes().to_vec() })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("network documents always serialize")
}

/// Parse and validate a network document.
pub fn network_from_json(text: &str) -> Result<Network, NetError> {
    let doc: NetworkDoc = serde_json::from_str(text)?;
    let a = doc.activation;
    if a.k == 0 {
        return Err(NetError::Invalid("activation order must be positive".into()));
    }
    let kind = match a.kind.as_str() {
        "relu_power" => ActivationKind::ReluPower,
        "logistic_power" => ActivationKind::LogisticPower,
        "tabulated" => {
            let knots = a.table.ok_or_else(|| NetError::Invalid("tabulated activation without table".into()))?;
            ActivationKind::Tabulated(Table::new(knots)?)
        }
        other => return Err(NetError::Invalid(format!("unknown activation kind {other:?}"))),
    };
    let constants = match (a.c, a.a, a.b) {
        (Some(c), Some(a), Some(b)) => Some(SigmoidalConstants { c, a, b }),
        (None, None, None) => None,
        _ => return Err(NetError::Invalid("activation constants C, a, b must be given together".into())),
    };
    let activation = ActivationSpec { kind, order: a.k, constants };
    if doc.steps.len() != doc.depth {
        return Err(NetError::Invalid(format!("L = {} but {} steps given", doc.depth, doc.steps.len())));
    }
    let mut steps = Vec::with_capacity(doc.steps.len());
    for s in doc.steps {
        let stored = s.edges.len() + s.nodes.len();
        let step = AffineStep::new(s.in_dim, s.out, s.edges, s.nodes)?;
        if step.nonzeros() != stored {
            return Err(NetError::Invalid("stored entries must be nonzero".into()));
        }
        steps.push(step);
    }
    Network::new(doc.d, steps, activation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::parallel_compose;

    #[test]
    fn round_trip_is_lossless() {
        let u = Network::single_unit(ActivationSpec::relu_power(2), 0.1 + 0.2, -1.0 / 3.0, 1e-17).unwrap();
        let net = parallel_compose(&[u.clone(), u], &[std::f64::consts::PI, -2.5], &[0.0, 0.7]).unwrap();
        let text = network_to_json(&net);
        let back = network_from_json(&text).unwrap();
        assert_eq!(back, net);
        assert_eq!(network_to_json(&back), text);
    }

    #[test]
    fn loader_validates_invariants() {
        let bad_chain = r#"{"d":1,"L":2,"activation":{"kind":"relu_power","k":1,"C":1,"a":1,"b":1},
            "steps":[{"in":1,"out":2,"edges":[[0,0,1.0]],"nodes":[]},{"in":3,"out":1,"edges":[[0,0,1.0]],"nodes":[]}]}"#;
        assert!(network_from_json(bad_chain).is_err());
        let zero = r#"{"d":1,"L":2,"activation":{"kind":"relu_power","k":1},
            "steps":[{"in":1,"out":1,"edges":[[0,0,0.0]],"nodes":[]},{"in":1,"out":1,"edges":[[0,0,1.0]],"nodes":[]}]}"#;
        assert!(network_from_json(zero).is_err());
        let unknown = r#"{"d":1,"L":2,"activation":{"kind":"tanh","k":1},"steps":[]}"#;
        assert!(network_from_json(unknown).is_err());
        assert!(network_from_json("{").is_err());
    }
}
