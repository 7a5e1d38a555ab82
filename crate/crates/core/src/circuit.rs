//! Layered ansatz of s-qubit Pauli rotation blocks separated by entanglers.
//!
//! Slots are indexed layer-major, block-minor: slot `layer * (n / s) + b`
//! acts on qubits `[b*s, (b+1)*s)` of layer `layer`. Within a layer every
//! rotation is applied before the layer's entangler columns.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::RandomStream;
use crate::pauli::{block_letters, check_dense, qubit_bit, BlockSupport, DenseOperator, PauliString};
use crate::simulator::{init_state, EntanglerKind, EntanglerPattern, InitKind, StateVector};

/// Largest register for which a full unitary is materialised.
pub const MAX_UNITARY_QUBITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorPolicy {
    /// `{I,X,Y,Z}^⊗s` without the all-identity string.
    #[default]
    FullMinusIdentity,
    /// `{I,X,Y,Z}^⊗s` including the identity.
    Full,
    /// `{X,Y,Z}`; single-qubit blocks only.
    XyzOnly,
}

impl GeneratorPolicy {
    pub const ALL: [GeneratorPolicy; 3] =
        [GeneratorPolicy::FullMinusIdentity, GeneratorPolicy::Full, GeneratorPolicy::XyzOnly];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorPolicy::FullMinusIdentity => "full_minus_identity",
            GeneratorPolicy::Full => "full",
            GeneratorPolicy::XyzOnly => "xyz_only",
        }
    }

    /// Range of block-letter indices (see [`block_letters`]) in the set.
    pub fn index_range(self, width: usize) -> std::ops::Range<usize> {
        match self {
            GeneratorPolicy::Full => 0..1 << (2 * width),
            GeneratorPolicy::FullMinusIdentity => 1..1 << (2 * width),
            GeneratorPolicy::XyzOnly => 1..4,
        }
    }

    pub fn set_size(self, width: usize) -> usize {
        self.index_range(width).len()
    }

    /// Every generator in the set, embedded on `block` of an `n`-qubit register.
    pub fn generators(self, n: usize, block: BlockSupport) -> Result<Vec<PauliString>> {
        block.validate(n)?;
        if self == GeneratorPolicy::XyzOnly && block.width != 1 {
            return Err(Error::InvalidSpec("xyz_only requires block width 1".into()));
        }
        self.index_range(block.width)
            .map(|i| PauliString::on_block(n, block.offset, &block_letters(block.width, i)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum ThetaDist {
    #[default]
    #[serde(rename = "uniform_0_2pi")]
    Uniform0To2Pi,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub n: usize,
    pub layers: usize,
    pub block_width: usize,
    #[serde(default)]
    pub entangler: EntanglerKind,
    #[serde(default)]
    pub generator_policy: GeneratorPolicy,
    #[serde(default)]
    pub init_kind: InitKind,
    /// One flag per slot; empty in a config means "all active".
    #[serde(default)]
    pub active_mask: Vec<bool>,
    #[serde(default)]
    pub theta_dist: ThetaDist,
}

impl CircuitSpec {
    /// Fully active spec with the default entangler, policy and initial state.
    pub fn new(n: usize, layers: usize, block_width: usize) -> Result<Self> {
        let mut spec = Self {
            n,
            layers,
            block_width,
            entangler: EntanglerKind::default(),
            generator_policy: GeneratorPolicy::default(),
            init_kind: InitKind::default(),
            active_mask: Vec::new(),
            theta_dist: ThetaDist::default(),
        };
        spec.normalize()?;
        Ok(spec)
    }

    pub fn with_entangler(mut self, kind: EntanglerKind) -> Self {
        self.entangler = kind;
        self
    }

    pub fn with_policy(mut self, policy: GeneratorPolicy) -> Result<Self> {
        self.generator_policy = policy;
        self.validate()?;
        Ok(self)
    }

    pub fn with_init(mut self, init: InitKind) -> Self {
        self.init_kind = init;
        self
    }

    /// Fill an empty mask with "all active" and validate.
    pub fn normalize(&mut self) -> Result<()> {
        if self.block_width > 0 && self.active_mask.is_empty() && self.n % self.block_width == 0 {
            self.active_mask = vec![true; self.n * self.layers / self.block_width];
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=crate::simulator::MAX_QUBITS).contains(&self.n) {
            return Err(Error::QubitCount(self.n));
        }
        if self.block_width == 0 || self.n % self.block_width != 0 {
            return Err(Error::InvalidSpec(format!(
                "block width {} must divide n = {}",
                self.block_width, self.n
            )));
        }
        if self.layers == 0 {
            return Err(Error::InvalidSpec("layer count must be positive".into()));
        }
        if self.active_mask.len() != self.parameter_count() {
            return Err(Error::InvalidSpec(format!(
                "active_mask has {} entries, expected {}",
                self.active_mask.len(),
                self.parameter_count()
            )));
        }
        if self.generator_policy == GeneratorPolicy::XyzOnly && self.block_width != 1 {
            return Err(Error::InvalidSpec("xyz_only requires block width 1".into()));
        }
        Ok(())
    }

    pub fn blocks_per_layer(&self) -> usize {
        self.n / self.block_width
    }

    /// `n·l/s`, every slot including pruned ones.
    pub fn parameter_count(&self) -> usize {
        self.n * self.layers / self.block_width
    }

    pub fn n_active(&self) -> usize {
        self.active_mask.iter().filter(|&&a| a).count()
    }

    pub fn is_active(&self, slot: usize) -> bool {
        self.active_mask.get(slot).copied().unwrap_or(false)
    }

    pub fn active_slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.active_mask.iter().enumerate().filter(|(_, &a)| a).map(|(i, _)| i)
    }

    pub fn slot_layer(&self, slot: usize) -> usize {
        slot / self.blocks_per_layer()
    }

    pub fn slot_block(&self, slot: usize) -> BlockSupport {
        let b = slot % self.blocks_per_layer();
        BlockSupport::new(b * self.block_width, self.block_width)
    }

    pub fn entangler_pattern(&self) -> EntanglerPattern {
        EntanglerPattern::new(self.entangler, self.n)
    }

    fn check_observable(&self, o: &PauliString) -> Result<()> {
        if o.n_sites() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, got: o.n_sites() });
        }
        Ok(())
    }
}

pub fn parameter_count(spec: &CircuitSpec) -> usize {
    spec.parameter_count()
}

/// One generator per active slot, in slot order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorAssignment {
    pub slots: Vec<usize>,
    pub generators: Vec<PauliString>,
}

/// One angle per active slot, in slot order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub angles: Vec<f64>,
}

/// Draw a generator and an angle for every active slot, in slot order.
pub fn sample_instance(
    spec: &CircuitSpec,
    stream: &mut RandomStream,
) -> (GeneratorAssignment, ParameterVector) {
    let range = spec.generator_policy.index_range(spec.block_width);
    let mut slots = Vec::with_capacity(spec.n_active());
    let mut generators = Vec::with_capacity(spec.n_active());
    let mut angles = Vec::with_capacity(spec.n_active());
    for slot in spec.active_slots() {
        let idx = range.start + stream.below(range.len());
        let block = spec.slot_block(slot);
        let letters = block_letters(spec.block_width, idx);
        generators.push(PauliString::on_block(spec.n, block.offset, &letters).expect("valid block"));
        angles.push(match spec.theta_dist {
            ThetaDist::Uniform0To2Pi => stream.uniform() * TAU,
        });
        slots.push(slot);
    }
    (GeneratorAssignment { slots, generators }, ParameterVector { angles })
}

/// Deactivate `⌊fraction · slots⌋` uniformly chosen slots.
pub fn prune(spec: &CircuitSpec, fraction: f64, stream: &mut RandomStream) -> CircuitSpec {
    let total = spec.parameter_count();
    let k = ((fraction.clamp(0.0, 1.0) * total as f64) + 1e-9).floor() as usize;
    let mut out = spec.clone();
    for slot in index::sample(stream, total, k.min(total)) {
        out.active_mask[slot] = false;
    }
    out
}

/// Backward light-cone sweep over a gate sequence.
///
/// Returns the qubit set at the start of the circuit and, for every rotation,
/// whether it lies in the cone. Entangler pairs fully connect their qubits;
/// an in-cone rotation adds its whole block.
fn sweep_cone<'a, I>(n: usize, observable: &PauliString, gates: I) -> (u64, Vec<bool>)
where
    I: DoubleEndedIterator<Item = ConeOp<'a>>,
{
    let mut cone = observable.support_mask();
    let mut flags = Vec::new();
    for op in gates.rev() {
        match op {
            ConeOp::Rotation(support) => {
                let hit = cone != 0 && support & cone != 0;
                if hit {
                    cone |= support;
                }
                flags.push(hit);
            }
            ConeOp::Entangler(pattern) => {
                for col in pattern.columns().iter().rev() {
                    for &(a, b) in col.iter().rev() {
                        let m = qubit_bit(n, a) | qubit_bit(n, b);
                        if cone & m != 0 {
                            cone |= m;
                        }
                    }
                }
            }
        }
    }
    flags.reverse();
    (cone, flags)
}

enum ConeOp<'a> {
    Rotation(u64),
    Entangler(&'a EntanglerPattern),
}

/// Slots whose block lies in the backward light cone of `observable`,
/// intersected with the active mask.
pub fn effective_parameters(spec: &CircuitSpec, observable: &PauliString) -> Result<BTreeSet<usize>> {
    spec.check_observable(observable)?;
    let pattern = spec.entangler_pattern();
    let bpl = spec.blocks_per_layer();
    let mut ops = Vec::with_capacity(spec.parameter_count() + spec.layers);
    for layer in 0..spec.layers {
        for b in 0..bpl {
            ops.push(ConeOp::Rotation(spec.slot_block(layer * bpl + b).mask(spec.n)));
        }
        ops.push(ConeOp::Entangler(&pattern));
    }
    let (_, flags) = sweep_cone(spec.n, observable, ops.into_iter());
    Ok(flags
        .into_iter()
        .enumerate()
        .filter(|&(slot, hit)| hit && spec.is_active(slot))
        .map(|(slot, _)| slot)
        .collect())
}

pub fn n_eff(spec: &CircuitSpec, observable: &PauliString) -> Result<usize> {
    Ok(effective_parameters(spec, observable)?.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    pub slot: usize,
    /// Index-bit mask of the block the rotation belongs to.
    pub support: u64,
    pub generator: PauliString,
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Rotation(Rotation),
    Entangler(EntanglerPattern),
}

/// A concrete circuit: fixed generators, fixed angles, fixed wiring.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitInstance {
    n: usize,
    init: InitKind,
    gates: Vec<Gate>,
}

impl CircuitInstance {
    pub fn new(n: usize, init: InitKind, gates: Vec<Gate>) -> Result<Self> {
        if !(1..=crate::simulator::MAX_QUBITS).contains(&n) {
            return Err(Error::QubitCount(n));
        }
        for g in &gates {
            let m = match g {
                Gate::Rotation(r) => r.generator.n_sites(),
                Gate::Entangler(p) => p.n_qubits(),
            };
            if m != n {
                return Err(Error::SizeMismatch { expected: n, got: m });
            }
        }
        Ok(Self { n, init, gates })
    }

    /// Lay out sampled generators and angles on the spec's wiring.
    pub fn build(
        spec: &CircuitSpec,
        generators: &GeneratorAssignment,
        params: &ParameterVector,
    ) -> Result<Self> {
        spec.validate()?;
        if generators.slots.len() != params.angles.len()
            || generators.generators.len() != params.angles.len()
        {
            return Err(Error::InvalidSpec("generator and angle counts differ".into()));
        }
        let pattern = spec.entangler_pattern();
        let bpl = spec.blocks_per_layer();
        let mut gates = Vec::with_capacity(params.angles.len() + spec.layers);
        let mut next = 0;
        for layer in 0..spec.layers {
            let layer_end = (layer + 1) * bpl;
            while next < generators.slots.len() && generators.slots[next] < layer_end {
                let slot = generators.slots[next];
                if !spec.is_active(slot) {
                    return Err(Error::InactiveSlot(slot));
                }
                let support = spec.slot_block(slot).mask(spec.n);
                let generator = generators.generators[next].clone();
                if generator.support_mask() & !support != 0 || generator.n_sites() != spec.n {
                    return Err(Error::InvalidSpec(format!("generator at slot {slot} leaves its block")));
                }
                gates.push(Gate::Rotation(Rotation { slot, support, generator, angle: params.angles[next] }));
                next += 1;
            }
            if !pattern.is_empty() {
                gates.push(Gate::Entangler(pattern.clone()));
            }
        }
        if next != generators.slots.len() {
            return Err(Error::InvalidSpec("slots out of order or out of range".into()));
        }
        Self::new(spec.n, spec.init_kind, gates)
    }

    pub fn sample(spec: &CircuitSpec, stream: &mut RandomStream) -> Result<Self> {
        let (g, p) = sample_instance(spec, stream);
        Self::build(spec, &g, &p)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn init_kind(&self) -> InitKind {
        self.init
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Gate index of the rotation for `slot`.
    pub fn gate_index(&self, slot: usize) -> Option<usize> {
        self.gates
            .iter()
            .position(|g| matches!(g, Gate::Rotation(r) if r.slot == slot))
    }

    pub fn rotation(&self, slot: usize) -> Option<&Rotation> {
        self.gate_index(slot).map(|i| match &self.gates[i] {
            Gate::Rotation(r) => r,
            Gate::Entangler(_) => unreachable!(),
        })
    }

    /// Copy with the angle of `slot` shifted by `delta`.
    pub fn shifted(&self, slot: usize, delta: f64) -> Result<Self> {
        let idx = self.gate_index(slot).ok_or(Error::InactiveSlot(slot))?;
        let mut out = self.clone();
        if let Gate::Rotation(r) = &mut out.gates[idx] {
            r.angle += delta;
        }
        Ok(out)
    }

    pub fn initial_state(&self) -> StateVector {
        init_state(self.n, self.init).expect("validated qubit count")
    }

    /// Apply `gates[range]` to `state` in place.
    pub fn evolve(&self, state: &mut StateVector, range: std::ops::Range<usize>) -> Result<()> {
        for g in &self.gates[range] {
            match g {
                Gate::Rotation(r) => state.rotate(&r.generator, r.angle)?,
                Gate::Entangler(p) => state.apply_entangler(p)?,
            }
        }
        Ok(())
    }

    pub fn final_state(&self) -> Result<StateVector> {
        let mut v = self.initial_state();
        self.evolve(&mut v, 0..self.gates.len())?;
        Ok(v)
    }

    /// Full `2^n × 2^n` unitary, built column by column.
    pub fn dense_unitary(&self) -> Result<DenseOperator> {
        check_dense(self.n, MAX_UNITARY_QUBITS)?;
        let mut u = DenseOperator::zeros(self.n)?;
        for col in 0..1usize << self.n {
            let mut v = StateVector::basis(self.n, col)?;
            self.evolve(&mut v, 0..self.gates.len())?;
            for (row, a) in v.amplitudes().iter().enumerate() {
                u.set(row, col, *a);
            }
        }
        Ok(u)
    }

    /// Qubits in the backward light cone of `observable` and per-rotation flags.
    fn cone(&self, observable: &PauliString) -> (u64, Vec<bool>) {
        let ops = self.gates.iter().map(|g| match g {
            Gate::Rotation(r) => ConeOp::Rotation(r.support),
            Gate::Entangler(p) => ConeOp::Entangler(p),
        });
        let ops: Vec<_> = ops.collect();
        sweep_cone(self.n, observable, ops.into_iter())
    }

    /// Drop every gate outside the backward light cone of `observable` and
    /// every qubit the cone never touches. The loss, and the gradient of any
    /// retained slot, are unchanged; slots not retained have zero gradient.
    pub fn restrict_to_light_cone(&self, observable: &PauliString) -> Result<(Self, PauliString)> {
        if observable.n_sites() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, got: observable.n_sites() });
        }
        let (cone_mask, flags) = self.cone(observable);
        let kept: Vec<usize> = (0..self.n).filter(|&q| cone_mask & qubit_bit(self.n, q) != 0).collect();
        if kept.is_empty() || kept.len() == self.n {
            return Ok((self.clone(), observable.clone()));
        }
        // Walk backward again to select the entangler pairs inside the cone.
        let mut cone = observable.support_mask();
        let mut selected = Vec::new();
        let mut rot_flags = flags.iter().rev();
        for g in self.gates.iter().rev() {
            match g {
                Gate::Rotation(r) => {
                    if *rot_flags.next().expect("one flag per rotation") {
                        cone |= r.support;
                        selected.push(g.clone());
                    }
                }
                Gate::Entangler(p) => {
                    let mut cols: [Vec<(usize, usize)>; 2] = [Vec::new(), Vec::new()];
                    for (ci, col) in p.columns().iter().enumerate().rev() {
                        for &(a, b) in col.iter().rev() {
                            let m = qubit_bit(self.n, a) | qubit_bit(self.n, b);
                            if cone & m != 0 {
                                cone |= m;
                                cols[ci].push((a, b));
                            }
                        }
                        cols[ci].reverse();
                    }
                    if cols.iter().any(|c| !c.is_empty()) {
                        selected.push(Gate::Entangler(EntanglerPattern::from_columns(p.kind(), self.n, cols)?));
                    }
                }
            }
        }
        selected.reverse();
        let instance = Self::new(kept.len(), self.init, relabel(self.n, &kept, &selected)?)?;
        Ok((instance, observable.restrict(&kept)))
    }

    /// Remove trailing gates that commute with a diagonal observable: CZ
    /// layers and rotations with diagonal generators. Off-diagonal
    /// observables are returned unchanged.
    pub fn strip_trailing_diagonal(&self, observable: &PauliString) -> Self {
        if observable.x_mask() != 0 {
            return self.clone();
        }
        let keep = self
            .gates
            .iter()
            .rposition(|g| match g {
                Gate::Rotation(r) => r.generator.x_mask() != 0,
                Gate::Entangler(p) => p.kind() != EntanglerKind::CzBrick,
            })
            .map_or(0, |i| i + 1);
        Self { n: self.n, init: self.init, gates: self.gates[..keep].to_vec() }
    }

    /// Split into independent sub-circuits on connected groups of qubits,
    /// ordered by their lowest qubit. Rotations connect their whole block.
    pub fn components(&self) -> Result<Vec<(Vec<usize>, Self)>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut q: usize) -> usize {
            while parent[q] != q {
                parent[q] = parent[parent[q]];
                q = parent[q];
            }
            q
        }
        let mut union = |a: usize, b: usize| {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        };
        for g in &self.gates {
            match g {
                Gate::Rotation(r) => {
                    let qs: Vec<usize> = (0..self.n).filter(|&q| r.support & qubit_bit(self.n, q) != 0).collect();
                    qs.windows(2).for_each(|w| union(w[0], w[1]));
                }
                Gate::Entangler(p) => p.pairs().for_each(|(a, b)| union(a, b)),
            }
        }
        let roots: Vec<usize> = (0..self.n).map(|q| find(&mut parent, q)).collect();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for q in 0..self.n {
            match groups.iter_mut().find(|g| roots[g[0]] == roots[q]) {
                Some(g) => g.push(q),
                None => groups.push(vec![q]),
            }
        }
        if groups.len() == 1 {
            return Ok(vec![(groups.pop().expect("one group"), self.clone())]);
        }
        groups
            .into_iter()
            .map(|qs| {
                let mask = qs.iter().fold(0, |m, &q| m | qubit_bit(self.n, q));
                let mut inside = Vec::new();
                for g in &self.gates {
                    match g {
                        Gate::Rotation(r) if r.support & !mask == 0 => inside.push(g.clone()),
                        Gate::Rotation(_) => {}
                        Gate::Entangler(p) => {
                            let in_group = |&(a, _): &(usize, usize)| mask & qubit_bit(self.n, a) != 0;
                            let cols = p.columns().clone().map(|c| c.into_iter().filter(in_group).collect::<Vec<_>>());
                            if cols.iter().any(|c| !c.is_empty()) {
                                inside.push(Gate::Entangler(EntanglerPattern::from_columns(p.kind(), self.n, cols)?));
                            }
                        }
                    }
                }
                let sub = Self::new(qs.len(), self.init, relabel(self.n, &qs, &inside)?)?;
                Ok((qs, sub))
            })
            .collect()
    }
}

/// Rewrite `gates` of an `n`-qubit register onto the sorted subset `kept`.
/// Every gate must act inside `kept`.
fn relabel(n: usize, kept: &[usize], gates: &[Gate]) -> Result<Vec<Gate>> {
    let m = kept.len();
    let mut remap = vec![usize::MAX; n];
    for (new, &old) in kept.iter().enumerate() {
        remap[old] = new;
    }
    let mask_map = |mask: u64| -> u64 {
        kept.iter()
            .enumerate()
            .filter(|(_, &old)| mask & qubit_bit(n, old) != 0)
            .fold(0, |acc, (new, _)| acc | qubit_bit(m, new))
    };
    gates
        .iter()
        .map(|g| match g {
            Gate::Rotation(r) => Ok(Gate::Rotation(Rotation {
                slot: r.slot,
                support: mask_map(r.support),
                generator: r.generator.restrict(kept),
                angle: r.angle,
            })),
            Gate::Entangler(p) => {
                let cols = p.columns().clone().map(|c| c.into_iter().map(|(a, b)| (remap[a], remap[b])).collect());
                Ok(Gate::Entangler(EntanglerPattern::from_columns(p.kind(), m, cols)?))
            }
        })
        .collect()
}
