use plateau_core::analytics::{exact_twirl_first_moment, predict_single_layer_variance, PrefactorMode};
use plateau_core::circuit::{effective_parameters, prune, CircuitInstance, CircuitSpec, GeneratorPolicy};
use plateau_core::estimator::{chunked_summary, RandomStream, Welford};
use plateau_core::gradient::{grad_commutator, grad_finite_difference, grad_parameter_shift, grad_reduced, loss};
use plateau_core::pauli::{twirl_closed_form, twirl_sum, BlockSupport, DenseOperator, Letter, PauliString};
use plateau_core::simulator::{expectation, EntanglerKind, StateVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn letter() -> impl Strategy<Value = Letter> {
    prop::sample::select(Letter::ALL.to_vec())
}

fn pauli(n: usize) -> impl Strategy<Value = PauliString> {
    prop::collection::vec(letter(), n).prop_map(|ls| PauliString::from_letters(&ls).unwrap())
}

fn entangler() -> impl Strategy<Value = EntanglerKind> {
    prop::sample::select(EntanglerKind::ALL.to_vec())
}

/// `(n, l, s)` with `s` dividing `n`.
fn shape(max_n: usize) -> impl Strategy<Value = (usize, usize, usize)> {
    (1..=3usize, 1..=max_n / 3 + 1, 1..=3usize).prop_filter_map("s must divide n", move |(s, k, l)| {
        let n = s * k;
        (n <= max_n).then_some((n, l, s))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_square_is_identity(p in pauli(5)) {
        let sq = p.mul(&p).unwrap();
        prop_assert!(sq.is_identity());
        prop_assert_eq!(sq.phase_exp(), 0);
    }

    #[test]
    fn pauli_product_matches_dense(p in pauli(3), q in pauli(3)) {
        let pq = p.mul(&q).unwrap().to_dense().unwrap();
        let dense = &p.to_dense().unwrap() * &q.to_dense().unwrap();
        prop_assert!(pq.max_abs_diff(&dense) < 1e-15);
        prop_assert_eq!(p.commutes(&q).unwrap(), q.commutes(&p).unwrap());
    }

    #[test]
    fn pauli_text_round_trip(p in pauli(7)) {
        prop_assert_eq!(p.to_string().parse::<PauliString>().unwrap(), p);
    }

    #[test]
    fn twirl_enumeration_equals_partial_trace(seed in any::<u64>(), n in 1..=4usize, width in 1..=2usize, off in 0..3usize) {
        prop_assume!(off + width <= n);
        let a = DenseOperator::random_hermitian(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let block = BlockSupport::new(off, width);
        let lhs = twirl_sum(&a, block).unwrap();
        let rhs = twirl_closed_form(&a, block).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn rotation_is_unitary_and_invertible(p in pauli(4), theta in -10.0..10.0f64, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps: Vec<_> = (0..16).map(|_| num_complex::Complex64::new(rand::Rng::gen_range(&mut rng, -1.0..1.0), rand::Rng::gen_range(&mut rng, -1.0..1.0))).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let v = StateVector::from_amplitudes(amps.iter().map(|a| a / norm).collect()).unwrap();
        let mut w = v.clone();
        w.rotate(&p, theta).unwrap();
        prop_assert!((w.norm() - 1.0).abs() < 1e-12);
        w.rotate(&p, -theta).unwrap();
        prop_assert!((w.inner(&v).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradients_agree_three_ways((n, l, s) in shape(6), kind in entangler(), seed in any::<u64>(), o in pauli(6), k in any::<prop::sample::Index>()) {
        let spec = CircuitSpec::new(n, l, s).unwrap().with_entangler(kind);
        let inst = CircuitInstance::sample(&spec, &mut RandomStream::new(seed, 0)).unwrap();
        let o = o.restrict_letters(n);
        let slot = k.index(spec.parameter_count());
        let ps = grad_parameter_shift(&inst, &o, slot).unwrap();
        let cm = grad_commutator(&inst, &o, slot).unwrap();
        let fd = grad_finite_difference(&inst, &o, slot, 1e-4).unwrap();
        prop_assert!((ps - cm).abs() <= 1e-10, "ps {} comm {}", ps, cm);
        prop_assert!((ps - fd).abs() <= 1e-6, "ps {} fd {}", ps, fd);
        prop_assert!(loss(&inst, &o).unwrap().abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn reductions_are_exact((n, l, s) in shape(8), kind in entangler(), seed in any::<u64>(), o in pauli(8)) {
        let spec = CircuitSpec::new(n, l, s).unwrap().with_entangler(kind);
        let inst = CircuitInstance::sample(&spec, &mut RandomStream::new(seed, 1)).unwrap();
        let o = o.restrict_letters(n);
        let full = loss(&inst, &o).unwrap();
        let (cone, oc) = inst.restrict_to_light_cone(&o).unwrap();
        prop_assert!((loss(&cone, &oc).unwrap() - full).abs() < 1e-12);
        let stripped = inst.strip_trailing_diagonal(&o);
        prop_assert!((loss(&stripped, &o).unwrap() - full).abs() < 1e-12);
        for slot in 0..spec.parameter_count() {
            let a = grad_parameter_shift(&inst, &o, slot).unwrap();
            let b = grad_reduced(&inst, &o, slot).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn slots_outside_the_cone_have_zero_gradient((n, l, s) in shape(8), kind in entangler(), seed in any::<u64>(), q in 0..8usize) {
        let spec = CircuitSpec::new(n, l, s).unwrap().with_entangler(kind);
        let o = PauliString::single(n, q % n, Letter::Z).unwrap();
        let eff = effective_parameters(&spec, &o).unwrap();
        let inst = CircuitInstance::sample(&spec, &mut RandomStream::new(seed, 2)).unwrap();
        for slot in (0..spec.parameter_count()).filter(|k| !eff.contains(k)) {
            prop_assert!(grad_parameter_shift(&inst, &o, slot).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn pruning_removes_exact_count((n, l, s) in shape(9), f in 0.0..=1.0f64, seed in any::<u64>()) {
        let spec = CircuitSpec::new(n, l, s).unwrap();
        let pruned = prune(&spec, f, &mut RandomStream::pruning(seed, 0));
        let total = spec.parameter_count();
        prop_assert_eq!(total - pruned.n_active(), (f * total as f64 + 1e-9).floor() as usize);
        let o = PauliString::z_prefix(n, n).unwrap();
        prop_assert!(effective_parameters(&pruned, &o).unwrap().iter().all(|&k| pruned.is_active(k)));
    }

    #[test]
    fn exact_twirl_is_unital_trace_and_hermiticity_preserving((n, l, s) in shape(4), kind in entangler(), seed in any::<u64>(), full in any::<bool>()) {
        let policy = if full { GeneratorPolicy::Full } else { GeneratorPolicy::FullMinusIdentity };
        let spec = CircuitSpec::new(n, l, s).unwrap().with_entangler(kind).with_policy(policy).unwrap();
        let id = DenseOperator::identity(n).unwrap();
        prop_assert!(exact_twirl_first_moment(&id, &spec).unwrap().max_abs_diff(&id) < 1e-12);
        let a = DenseOperator::random_hermitian(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let out = exact_twirl_first_moment(&a, &spec).unwrap();
        prop_assert!((out.trace() - a.trace()).norm() < 1e-12);
        prop_assert!(out.is_hermitian(1e-12));
    }

    #[test]
    fn chunked_moments_match_direct(xs in prop::collection::vec(-1e3..1e3f64, 2..5000)) {
        let mut w = Welford::new();
        xs.iter().for_each(|&x| w.push(x));
        let c = chunked_summary(&xs);
        let scale = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64 + 1.0;
        prop_assert!((c.mean() - w.mean()).abs() < 1e-9 * scale.sqrt());
        prop_assert!((c.variance() - w.variance()).abs() < 1e-9 * scale);
    }

    #[test]
    fn single_layer_prediction_decreases(s in 1..=4usize, n_eff in 1..30usize) {
        let n = s * 30;
        for mode in PrefactorMode::ALL {
            let a = predict_single_layer_variance(n, s, n_eff, mode).unwrap();
            let b = predict_single_layer_variance(n, s, n_eff + 1, mode).unwrap();
            prop_assert!(b < a);
        }
    }
}

trait RestrictLetters {
    fn restrict_letters(&self, n: usize) -> PauliString;
}

impl RestrictLetters for PauliString {
    /// First `n` letters, as a string on `n` qubits.
    fn restrict_letters(&self, n: usize) -> PauliString {
        PauliString::from_letters(&self.letters()[..n]).unwrap()
    }
}

#[test]
fn loss_is_expectation_of_final_state() {
    let spec = CircuitSpec::new(4, 2, 2).unwrap();
    let inst = CircuitInstance::sample(&spec, &mut RandomStream::new(1, 1)).unwrap();
    let o: PauliString = "XZIY".parse().unwrap();
    assert_eq!(loss(&inst, &o).unwrap(), expectation(&inst.final_state().unwrap(), &o).unwrap());
}
