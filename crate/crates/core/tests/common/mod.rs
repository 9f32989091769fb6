#![allow(dead_code)]

use proptest::prelude::*;
use vqpulse_core::circuit::{Circuit, Gate, ParamAngle, Parametrization};

fn angle(param_count: usize) -> BoxedStrategy<ParamAngle> {
    let constant = (-7.0f64..7.0).prop_map(ParamAngle::Constant);
    if param_count == 0 {
        return constant.boxed();
    }
    prop_oneof![
        constant,
        (0..param_count, -2.5f64..2.5, -3.0f64..3.0)
            .prop_map(|(p, c, o)| ParamAngle::affine(p, c, o)),
    ]
    .boxed()
}

fn gate(width: usize, param_count: usize) -> BoxedStrategy<Gate> {
    let q = 0..width;
    let one = prop_oneof![
        (q.clone(), angle(param_count)).prop_map(|(q, a)| Gate::rz(q, a)),
        (q.clone(), angle(param_count)).prop_map(|(q, a)| Gate::rx(q, a)),
        q.clone().prop_map(Gate::h),
    ];
    if width < 2 {
        return one.boxed();
    }
    let pair = (0..width, 1..width).prop_map(move |(a, d)| (a, (a + d) % width));
    prop_oneof![
        3 => one,
        1 => pair.clone().prop_map(|(a, b)| Gate::cx(a, b)),
        1 => pair.prop_map(|(a, b)| Gate::swap(a, b)),
    ]
    .boxed()
}

/// Random circuits of width 1..=`max_width`, up to `max_depth` gates and
/// up to three parameters.
pub fn circuit(max_width: usize, max_depth: usize) -> impl Strategy<Value = Circuit> {
    (1..=max_width, 0usize..=3).prop_flat_map(move |(w, p)| {
        proptest::collection::vec(gate(w, p), 0..=max_depth)
            .prop_map(move |gates| Circuit::from_gates(w, p, gates).unwrap())
    })
}

/// Circuit together with a parametrization of matching length.
pub fn circuit_and_params(
    max_width: usize,
    max_depth: usize,
) -> impl Strategy<Value = (Circuit, Parametrization)> {
    circuit(max_width, max_depth).prop_flat_map(|c| {
        let p = c.param_count();
        (Just(c), proptest::collection::vec(-4.0f64..4.0, p))
            .prop_map(|(c, v)| (c, Parametrization::new(v)))
    })
}

/// Relabels parameter references so indices are nondecreasing along the
/// gate list.
pub fn make_monotonic(c: &Circuit) -> Circuit {
    let total = c.gates().iter().filter(|g| g.is_parametrized()).count();
    let p = c.param_count();
    let mut seen = 0;
    let gates = c
        .gates()
        .iter()
        .map(|g| match g.angle {
            Some(ParamAngle::Affine { coeff, offset, .. }) => {
                let idx = seen * p / total.max(1);
                seen += 1;
                Gate {
                    angle: Some(ParamAngle::affine(idx, coeff, offset)),
                    ..g.clone()
                }
            }
            _ => g.clone(),
        })
        .collect();
    Circuit::from_gates(c.width(), p, gates).unwrap()
}
