//! Loss evaluation and three independent gradient routines.

use std::f64::consts::FRAC_PI_2;

use crate::circuit::{CircuitInstance, Gate};
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::simulator::{expectation, matrix_element, StateVector};

pub const MIN_FD_STEP: f64 = 1e-6;
pub const MAX_FD_STEP: f64 = 1e-2;

/// An instance cut just before the rotation of one slot.
#[derive(Debug, Clone, Copy)]
pub struct SplitCircuit<'a> {
    pub slot: usize,
    /// Gates strictly before the slot's rotation.
    pub minus_part: &'a [Gate],
    /// The slot's rotation and everything after it.
    pub plus_part: &'a [Gate],
}

impl<'a> SplitCircuit<'a> {
    pub fn new(instance: &'a CircuitInstance, slot: usize) -> Result<Self> {
        let idx = instance.gate_index(slot).ok_or(Error::InactiveSlot(slot))?;
        let (minus_part, plus_part) = instance.gates().split_at(idx);
        Ok(Self { slot, minus_part, plus_part })
    }
}

pub fn loss(instance: &CircuitInstance, observable: &PauliString) -> Result<f64> {
    expectation(&instance.final_state()?, observable)
}

fn checked_split(instance: &CircuitInstance, slot: usize) -> Result<(usize, &PauliString)> {
    let idx = instance.gate_index(slot).ok_or(Error::InactiveSlot(slot))?;
    let Gate::Rotation(r) = &instance.gates()[idx] else { unreachable!() };
    if r.generator.is_identity() {
        return Err(Error::IdentityGenerator(slot));
    }
    Ok((idx, &r.generator))
}

/// `[L(θ_k + π/2) − L(θ_k − π/2)] / 2`, sharing the prefix state.
pub fn grad_parameter_shift(
    instance: &CircuitInstance,
    observable: &PauliString,
    slot: usize,
) -> Result<f64> {
    let (idx, generator) = checked_split(instance, slot)?;
    let Gate::Rotation(r) = &instance.gates()[idx] else { unreachable!() };
    let mut prefix = instance.initial_state();
    instance.evolve(&mut prefix, 0..idx)?;
    let end = instance.gates().len();
    let shifted = |delta: f64| -> Result<f64> {
        let mut v = prefix.clone();
        v.rotate(generator, r.angle + delta)?;
        instance.evolve(&mut v, idx + 1..end)?;
        expectation(&v, observable)
    };
    let plus = shifted(FRAC_PI_2)?;
    let minus = shifted(-FRAC_PI_2)?;
    Ok(0.5 * (plus - minus))
}

/// `(i/2)·⟨ψ₋|[P_k, O₊]|ψ₋⟩ = Im⟨U₊ψ₋|O|U₊P_kψ₋⟩`.
pub fn grad_commutator(
    instance: &CircuitInstance,
    observable: &PauliString,
    slot: usize,
) -> Result<f64> {
    checked_split(instance, slot)?;
    let split = SplitCircuit::new(instance, slot)?;
    let run = |v: &mut StateVector, gates: &[Gate]| -> Result<()> {
        for g in gates {
            match g {
                Gate::Rotation(r) => v.rotate(&r.generator, r.angle)?,
                Gate::Entangler(p) => v.apply_entangler(p)?,
            }
        }
        Ok(())
    };
    let mut psi = instance.initial_state();
    run(&mut psi, split.minus_part)?;
    let Gate::Rotation(r) = &split.plus_part[0] else { unreachable!() };
    let mut p_psi = r.generator.apply(&psi)?;
    run(&mut psi, split.plus_part)?;
    run(&mut p_psi, split.plus_part)?;
    Ok(matrix_element(&psi, observable, &p_psi)?.im)
}

/// Central difference `[L(θ_k + h) − L(θ_k − h)] / (2h)`.
pub fn grad_finite_difference(
    instance: &CircuitInstance,
    observable: &PauliString,
    slot: usize,
    h: f64,
) -> Result<f64> {
    if !(MIN_FD_STEP..=MAX_FD_STEP).contains(&h) {
        return Err(Error::StepOutOfRange(h));
    }
    let plus = loss(&instance.shifted(slot, h)?, observable)?;
    let minus = loss(&instance.shifted(slot, -h)?, observable)?;
    Ok((plus - minus) / (2.0 * h))
}

/// Parameter-shift gradient on the smallest equivalent circuit: trailing
/// gates that commute with a diagonal observable are dropped, the circuit is
/// cut to the observable's light cone, and independent qubit groups are
/// evaluated separately. Slots removed along the way, and identity
/// generators, have gradient exactly 0.
pub fn grad_reduced(instance: &CircuitInstance, observable: &PauliString, slot: usize) -> Result<f64> {
    if instance.gate_index(slot).is_none() {
        return Err(Error::InactiveSlot(slot));
    }
    if observable.n_sites() != instance.n_qubits() {
        return Err(Error::SizeMismatch { expected: instance.n_qubits(), got: observable.n_sites() });
    }
    if observable.is_identity() {
        return Ok(0.0);
    }
    let stripped = instance.strip_trailing_diagonal(observable);
    let (cone, obs) = stripped.restrict_to_light_cone(observable)?;
    match cone.rotation(slot) {
        Some(r) if !r.generator.is_identity() => {}
        _ => return Ok(0.0),
    }
    let mut grad = 0.0;
    let mut rest = 1.0;
    for (qubits, sub) in cone.components()? {
        let o = if qubits.len() == cone.n_qubits() { obs.clone() } else { obs.restrict(&qubits) };
        if sub.gate_index(slot).is_some() {
            grad = grad_parameter_shift(&sub, &o, slot)?;
        } else if !o.is_identity() {
            rest *= loss(&sub, &o)?;
        }
    }
    Ok(grad * rest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CircuitSpec, Rotation};
    use crate::estimator::RandomStream;
    use crate::simulator::{EntanglerKind, InitKind};

    fn single(gen: &str, angle: f64) -> CircuitInstance {
        let g: PauliString = gen.parse().unwrap();
        let n = g.n_sites();
        let support = g.support_mask();
        CircuitInstance::new(
            n,
            InitKind::Zeros,
            vec![Gate::Rotation(Rotation { slot: 0, support, generator: g, angle })],
        )
        .unwrap()
    }

    fn z(n: usize) -> PauliString {
        PauliString::z_prefix(n, n).unwrap()
    }

    #[test]
    fn empty_circuit_loss() {
        let inst = CircuitInstance::new(3, InitKind::Zeros, vec![]).unwrap();
        assert!((loss(&inst, &z(3)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bit_flip_loss() {
        assert!((loss(&single("X", std::f64::consts::PI), &z(1)).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_landscape() {
        for f in [grad_parameter_shift, grad_commutator] {
            assert!(f(&single("X", 0.0), &z(1), 0).unwrap().abs() < 1e-15);
            assert!((f(&single("X", FRAC_PI_2), &z(1), 0).unwrap() + 1.0).abs() < 1e-14);
        }
        let fd = grad_finite_difference(&single("X", FRAC_PI_2), &z(1), 0, 1e-4).unwrap();
        assert!((fd + 1.0).abs() < 2e-9);
    }

    #[test]
    fn commuting_generator_has_zero_gradient() {
        let inst = single("Z", 0.4);
        assert!(grad_parameter_shift(&inst, &z(1), 0).unwrap().abs() < 1e-15);
        assert!(grad_commutator(&inst, &z(1), 0).unwrap().abs() < 1e-15);
        assert!(grad_finite_difference(&inst, &z(1), 0, 1e-3).unwrap().abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let inst = single("X", 0.1);
        assert!(matches!(grad_parameter_shift(&inst, &z(1), 3), Err(Error::InactiveSlot(3))));
        assert!(matches!(
            grad_finite_difference(&inst, &z(1), 0, 0.1),
            Err(Error::StepOutOfRange(_))
        ));
        let id = single("I", 0.1);
        assert!(matches!(grad_commutator(&id, &z(1), 0), Err(Error::IdentityGenerator(0))));
    }

    #[test]
    fn loss_matches_dense_unitary() {
        let spec = CircuitSpec::new(2, 1, 1).unwrap().with_entangler(EntanglerKind::CzBrick);
        let inst = CircuitInstance::sample(&spec, &mut RandomStream::new(5, 0)).unwrap();
        let u = inst.dense_unitary().unwrap();
        let o = "ZX".parse::<PauliString>().unwrap().to_dense().unwrap();
        let rho_col0 = &(&u.adjoint() * &o) * &u;
        let dense = rho_col0.get(0, 0).re;
        assert!((loss(&inst, &"ZX".parse().unwrap()).unwrap() - dense).abs() < 1e-12);
    }

    #[test]
    fn split_reassembles() {
        let spec = CircuitSpec::new(6, 3, 2).unwrap();
        let inst = CircuitInstance::sample(&spec, &mut RandomStream::new(1, 1)).unwrap();
        let split = SplitCircuit::new(&inst, 4).unwrap();
        assert_eq!([split.minus_part, split.plus_part].concat(), inst.gates());
        assert!(matches!(split.plus_part[0], Gate::Rotation(ref r) if r.slot == 4));
    }

    #[test]
    fn reduced_gradient_matches_full() {
        let cases = [
            (6, 3, 2, EntanglerKind::CzBrick, "ZIIIII"),
            (5, 2, 1, EntanglerKind::CxBrick, "IXZII"),
            (6, 1, 1, EntanglerKind::CzBrick, "ZZZIII"),
            (4, 3, 1, EntanglerKind::None, "ZIYZ"),
            (6, 2, 3, EntanglerKind::None, "IIIZZZ"),
        ];
        for (n, l, s, kind, o) in cases {
            let spec = CircuitSpec::new(n, l, s).unwrap().with_entangler(kind);
            let o: PauliString = o.parse().unwrap();
            for i in 0..10 {
                let inst = CircuitInstance::sample(&spec, &mut RandomStream::new(30, i)).unwrap();
                for slot in 0..spec.parameter_count() {
                    let full = grad_parameter_shift(&inst, &o, slot).unwrap();
                    let fast = grad_reduced(&inst, &o, slot).unwrap();
                    assert!((full - fast).abs() < 1e-12, "{n} {l} {s} {kind:?} slot {slot}: {full} vs {fast}");
                }
            }
        }
    }

    #[test]
    fn fig5_ineffective_slots_vanish() {
        let spec = CircuitSpec::new(6, 3, 2).unwrap();
        let o = PauliString::z_prefix(6, 1).unwrap();
        for i in 0..20 {
            let inst = CircuitInstance::sample(&spec, &mut RandomStream::new(8, i)).unwrap();
            for slot in [5, 7, 8] {
                assert!(grad_parameter_shift(&inst, &o, slot).unwrap().abs() < 1e-12);
                assert!(grad_commutator(&inst, &o, slot).unwrap().abs() < 1e-12);
            }
        }
    }
}
