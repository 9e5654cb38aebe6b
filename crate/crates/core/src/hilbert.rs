//! Dense complex state-vector and density-operator algebra over tensor
//! products of small labeled registers.
//!
//! A register is either a photonic frequency-bin register or an atomic
//! internal-level register, tagged with the side (L or R) of the apparatus it
//! lives on. Joint bases are ordered row-major over the register list in
//! declaration order: the first register varies slowest. All values are
//! immutable after construction and every operation is a pure function.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest joint dimension the dense algebra accepts.
pub const DIMENSION_CAP: usize = 4096;
/// Tolerance for algebraic identities (norms, traces, Hermiticity).
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Floor for density-operator eigenvalues; accounts for accumulation in
/// mixes.
pub const EIGEN_TOL: f64 = 1e-10;
/// Projection probabilities below this are treated as true orthogonality
/// rather than renormalizable remainder.
pub const HERALD_THRESHOLD: f64 = 1e-14;

/// Which side of the apparatus a register lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::L => write!(f, "L"),
            Side::R => write!(f, "R"),
        }
    }
}

/// One discrete optical frequency component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBin {
    pub label: String,
    /// Angular frequency, rad/s. Must be positive.
    pub omega: f64,
}

impl FrequencyBin {
    pub fn new(label: impl Into<String>, omega: f64) -> Self {
        Self {
            label: label.into(),
            omega,
        }
    }
}

/// A frequency-binned photonic mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonRegister {
    pub side: Side,
    pub bins: Vec<FrequencyBin>,
}

impl PhotonRegister {
    pub fn new(side: Side, bins: Vec<FrequencyBin>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::Register(
                "photon register needs at least one bin".into(),
            ));
        }
        for (i, a) in bins.iter().enumerate() {
            if a.omega <= 0.0 || !a.omega.is_finite() {
                return Err(Error::Parameter(format!(
                    "bin '{}' has non-positive frequency {}",
                    a.label, a.omega
                )));
            }
            for b in bins.iter().skip(i + 1) {
                if a.label == b.label {
                    return Err(Error::Register(format!(
                        "duplicate bin label '{}'",
                        a.label
                    )));
                }
                if a.omega == b.omega {
                    return Err(Error::Register(format!(
                        "bins '{}' and '{}' share frequency {}",
                        a.label, b.label, a.omega
                    )));
                }
            }
        }
        Ok(Self { side, bins })
    }

    pub fn bin_index(&self, label: &str) -> Option<usize> {
        self.bins.iter().position(|b| b.label == label)
    }
}

/// An atomic internal-level manifold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRegister {
    pub side: Side,
    pub levels: Vec<String>,
    /// Level energies as angular frequencies, rad/s. Bookkeeping only: the
    /// gate algebra works in the rotating frame of the local drive.
    pub level_energies: Vec<f64>,
}

impl AtomRegister {
    pub fn new(side: Side, levels: Vec<String>, level_energies: Vec<f64>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::Register(
                "atom register needs at least two levels".into(),
            ));
        }
        if levels.len() != level_energies.len() {
            return Err(Error::Dimension {
                expected: levels.len(),
                actual: level_energies.len(),
            });
        }
        for (i, a) in levels.iter().enumerate() {
            if levels.iter().skip(i + 1).any(|b| b == a) {
                return Err(Error::Register(format!("duplicate level label '{a}'")));
            }
        }
        Ok(Self {
            side,
            levels,
            level_energies,
        })
    }

    pub fn level_index(&self, label: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == label)
    }
}

/// A labeled basis factor of the joint Hilbert space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Register {
    Photon(PhotonRegister),
    Atom(AtomRegister),
}

/// Register kind, used with [`Side`] to identify a register inside a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegisterKind {
    Photon,
    Atom,
}

/// Identity of a register within one state: its kind and side. Two registers
/// with the same identity cannot coexist in a joint system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RegId {
    pub kind: RegisterKind,
    pub side: Side,
}

impl RegId {
    pub fn photon(side: Side) -> Self {
        Self {
            kind: RegisterKind::Photon,
            side,
        }
    }
    pub fn atom(side: Side) -> Self {
        Self {
            kind: RegisterKind::Atom,
            side,
        }
    }
}

impl std::fmt::Display for RegId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            RegisterKind::Photon => write!(f, "photon:{}", self.side),
            RegisterKind::Atom => write!(f, "atom:{}", self.side),
        }
    }
}

impl Register {
    pub fn dim(&self) -> usize {
        match self {
            Register::Photon(p) => p.bins.len(),
            Register::Atom(a) => a.levels.len(),
        }
    }

    pub fn side(&self) -> Side {
        match self {
            Register::Photon(p) => p.side,
            Register::Atom(a) => a.side,
        }
    }

    pub fn id(&self) -> RegId {
        match self {
            Register::Photon(p) => RegId::photon(p.side),
            Register::Atom(a) => RegId::atom(a.side),
        }
    }

    pub fn as_photon(&self) -> Option<&PhotonRegister> {
        match self {
            Register::Photon(p) => Some(p),
            Register::Atom(_) => None,
        }
    }

    pub fn as_atom(&self) -> Option<&AtomRegister> {
        match self {
            Register::Atom(a) => Some(a),
            Register::Photon(_) => None,
        }
    }
}

fn check_register_list(registers: &[Register]) -> Result<usize> {
    let mut dim = 1usize;
    for (i, r) in registers.iter().enumerate() {
        for other in registers.iter().skip(i + 1) {
            if r.id() == other.id() {
                return Err(Error::Register(format!(
                    "register identity {} collides",
                    r.id()
                )));
            }
        }
        dim = dim.checked_mul(r.dim()).ok_or(Error::DimensionCap {
            dim: usize::MAX,
            cap: DIMENSION_CAP,
        })?;
    }
    if dim > DIMENSION_CAP {
        return Err(Error::DimensionCap {
            dim,
            cap: DIMENSION_CAP,
        });
    }
    Ok(dim)
}

/// Row-major strides for a register dimension list.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

fn decompose(index: usize, dims: &[usize], strides: &[usize]) -> Vec<usize> {
    dims.iter()
        .zip(strides)
        .map(|(d, s)| (index / s) % d)
        .collect()
}

/// A normalized pure state over an ordered list of registers.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridState {
    registers: Vec<Register>,
    amplitudes: Vec<Complex64>,
}

/// Builds a normalized pure state from raw amplitudes in the row-major joint
/// basis.
pub fn make_pure(registers: Vec<Register>, amplitudes: &[Complex64]) -> Result<HybridState> {
    let dim = check_register_list(&registers)?;
    if amplitudes.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            actual: amplitudes.len(),
        });
    }
    let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(Error::Normalization { norm });
    }
    let amplitudes = amplitudes.iter().map(|a| a / norm).collect();
    Ok(HybridState {
        registers,
        amplitudes,
    })
}

impl HybridState {
    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn register_dims(&self) -> Vec<usize> {
        self.registers.iter().map(|r| r.dim()).collect()
    }

    /// Position of the register with the given identity.
    pub fn register_position(&self, id: RegId) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.id() == id)
            .ok_or_else(|| Error::Register(format!("no register {id} in state")))
    }

    pub fn register(&self, id: RegId) -> Result<&Register> {
        Ok(&self.registers[self.register_position(id)?])
    }

    /// Amplitude of a joint basis element addressed by per-register indices.
    pub fn amplitude(&self, indices: &[usize]) -> Complex64 {
        let dims = self.register_dims();
        let st = strides(&dims);
        let flat: usize = indices.iter().zip(&st).map(|(i, s)| i * s).sum();
        self.amplitudes[flat]
    }

    /// Same state with registers listed in a new order.
    pub fn permuted(&self, order: &[usize]) -> Result<HybridState> {
        let dims = self.register_dims();
        let (map, new_regs) = permutation_map(&self.registers, &dims, order)?;
        let mut amplitudes = vec![Complex64::ZERO; self.dim()];
        for (i, &j) in map.iter().enumerate() {
            amplitudes[j] = self.amplitudes[i];
        }
        Ok(HybridState {
            registers: new_regs,
            amplitudes,
        })
    }

    pub(crate) fn from_normalized_parts(
        registers: Vec<Register>,
        amplitudes: Vec<Complex64>,
    ) -> Self {
        Self {
            registers,
            amplitudes,
        }
    }
}

fn permutation_map(
    registers: &[Register],
    dims: &[usize],
    order: &[usize],
) -> Result<(Vec<usize>, Vec<Register>)> {
    if order.len() != registers.len() {
        return Err(Error::Dimension {
            expected: registers.len(),
            actual: order.len(),
        });
    }
    let mut seen = vec![false; registers.len()];
    for &k in order {
        if k >= registers.len() || seen[k] {
            return Err(Error::Register("invalid register permutation".into()));
        }
        seen[k] = true;
    }
    let new_regs: Vec<Register> = order.iter().map(|&k| registers[k].clone()).collect();
    let new_dims: Vec<usize> = new_regs.iter().map(|r| r.dim()).collect();
    let old_strides = strides(dims);
    let new_strides = strides(&new_dims);
    let dim: usize = dims.iter().product();
    let mut map = vec![0usize; dim];
    for (i, entry) in map.iter_mut().enumerate() {
        let idx = decompose(i, dims, &old_strides);
        *entry = order
            .iter()
            .zip(&new_strides)
            .map(|(&k, s)| idx[k] * s)
            .sum();
    }
    Ok((map, new_regs))
}

/// Inner product `<a|b>`; registers must match exactly.
pub fn inner(a: &HybridState, b: &HybridState) -> Result<Complex64> {
    if a.registers != b.registers {
        return Err(Error::Register(
            "inner product over mismatched registers".into(),
        ));
    }
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// Fidelity `|<a|b>|^2` between two pure states.
pub fn fidelity(a: &HybridState, b: &HybridState) -> Result<f64> {
    Ok(inner(a, b)?.norm_sqr())
}

/// Joint state of two disjoint systems; amplitudes are the outer product and
/// the register lists concatenate.
pub fn tensor(a: &HybridState, b: &HybridState) -> Result<HybridState> {
    let mut registers = a.registers.clone();
    registers.extend(b.registers.iter().cloned());
    let dim = check_register_list(&registers)?;
    let mut amplitudes = Vec::with_capacity(dim);
    for x in &a.amplitudes {
        for y in &b.amplitudes {
            amplitudes.push(x * y);
        }
    }
    Ok(HybridState {
        registers,
        amplitudes,
    })
}

/// A Hermitian, unit-trace, positive-semidefinite operator over a joint
/// register basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    registers: Vec<Register>,
    matrix: DMatrix<Complex64>,
}

impl DensityOperator {
    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn register_dims(&self) -> Vec<usize> {
        self.registers.iter().map(|r| r.dim()).collect()
    }

    pub fn register_position(&self, id: RegId) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.id() == id)
            .ok_or_else(|| Error::Register(format!("no register {id} in state")))
    }

    pub fn register(&self, id: RegId) -> Result<&Register> {
        Ok(&self.registers[self.register_position(id)?])
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Eigenvalues of the (symmetrized) operator, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let sym = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = nalgebra::linalg::SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    /// Checks Hermiticity, unit trace, and eigenvalue positivity at the
    /// module tolerances.
    pub fn validate(&self) -> Result<()> {
        let adj = self.matrix.adjoint();
        let herm_defect = (&self.matrix - &adj)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if herm_defect > ALGEBRA_TOL {
            return Err(Error::Parameter(format!(
                "operator not Hermitian: defect {herm_defect:.3e}"
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > ALGEBRA_TOL || tr.im.abs() > ALGEBRA_TOL {
            return Err(Error::Parameter(format!("trace {tr} differs from 1")));
        }
        let min = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min < -EIGEN_TOL {
            return Err(Error::Parameter(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// Builds an operator from raw parts, enforcing all invariants. Intended
    /// for deserialized input.
    pub fn from_parts(registers: Vec<Register>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = check_register_list(&registers)?;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Dimension {
                expected: dim,
                actual: matrix.nrows(),
            });
        }
        let op = Self { registers, matrix };
        op.validate()?;
        Ok(op)
    }

    /// Same operator with registers listed in a new order.
    pub fn permuted(&self, order: &[usize]) -> Result<DensityOperator> {
        let dims = self.register_dims();
        let (map, new_regs) = permutation_map(&self.registers, &dims, order)?;
        let d = self.dim();
        let mut matrix = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                matrix[(map[i], map[j])] = self.matrix[(i, j)];
            }
        }
        Ok(DensityOperator {
            registers: new_regs,
            matrix,
        })
    }

    pub(crate) fn from_trusted_parts(registers: Vec<Register>, matrix: DMatrix<Complex64>) -> Self {
        Self { registers, matrix }
    }
}

/// Rank-1 projector `|s><s|` of a pure state.
pub fn to_density(state: &HybridState) -> DensityOperator {
    let d = state.dim();
    let matrix = DMatrix::from_fn(d, d, |i, j| {
        state.amplitudes[i] * state.amplitudes[j].conj()
    });
    DensityOperator {
        registers: state.registers.clone(),
        matrix,
    }
}

/// Convex combination of density operators over identical register lists.
pub fn mix(components: &[(f64, DensityOperator)]) -> Result<DensityOperator> {
    let Some(((_, first), rest)) = components.split_first() else {
        return Err(Error::Weight { sum: 0.0 });
    };
    let sum: f64 = components.iter().map(|(w, _)| w).sum();
    if components.iter().any(|(w, _)| *w <= 0.0) || (sum - 1.0).abs() > ALGEBRA_TOL {
        return Err(Error::Weight { sum });
    }
    for (_, op) in rest {
        if op.registers != first.registers {
            return Err(Error::Register(
                "mixture components over different registers".into(),
            ));
        }
    }
    let d = first.dim();
    let mut matrix = DMatrix::zeros(d, d);
    for (w, op) in components {
        matrix += &op.matrix * Complex64::new(*w, 0.0);
    }
    Ok(DensityOperator {
        registers: first.registers.clone(),
        matrix,
    })
}

/// A bra vector over a subset of a state's registers. `amplitudes` are the
/// coefficients of the basis bras in the listed register order, so that for a
/// pure state the projection amplitude is `sum_i amplitudes[i] * psi[i]`.
#[derive(Clone, Debug)]
pub struct Bra {
    pub registers: Vec<RegId>,
    pub amplitudes: Vec<Complex64>,
}

impl Bra {
    pub fn new(registers: Vec<RegId>, amplitudes: Vec<Complex64>) -> Self {
        Self {
            registers,
            amplitudes,
        }
    }

    /// Bra picking out one basis level/bin of a single register.
    pub fn basis(id: RegId, dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::ZERO; dim];
        amplitudes[index] = Complex64::ONE;
        Self {
            registers: vec![id],
            amplitudes,
        }
    }
}

struct BraIndexing {
    /// For each full joint index: index into the bra's subset basis.
    subset: Vec<usize>,
    /// For each full joint index: index into the remaining joint basis.
    kept: Vec<usize>,
    kept_registers: Vec<Register>,
    kept_dim: usize,
}

fn bra_indexing(rho_registers: &[Register], bra: &Bra) -> Result<BraIndexing> {
    let dims: Vec<usize> = rho_registers.iter().map(|r| r.dim()).collect();
    let st = strides(&dims);
    let mut subset_positions = Vec::with_capacity(bra.registers.len());
    for id in &bra.registers {
        let pos = rho_registers
            .iter()
            .position(|r| r.id() == *id)
            .ok_or_else(|| Error::Register(format!("bra addresses missing register {id}")))?;
        if subset_positions.contains(&pos) {
            return Err(Error::Register(format!(
                "bra addresses register {id} twice"
            )));
        }
        subset_positions.push(pos);
    }
    let subset_dims: Vec<usize> = subset_positions.iter().map(|&p| dims[p]).collect();
    let subset_dim: usize = subset_dims.iter().product();
    if bra.amplitudes.len() != subset_dim {
        return Err(Error::Dimension {
            expected: subset_dim,
            actual: bra.amplitudes.len(),
        });
    }
    let norm = bra
        .amplitudes
        .iter()
        .map(|a| a.norm_sqr())
        .sum::<f64>()
        .sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Normalization { norm });
    }
    let kept_positions: Vec<usize> = (0..rho_registers.len())
        .filter(|p| !subset_positions.contains(p))
        .collect();
    let kept_registers: Vec<Register> = kept_positions
        .iter()
        .map(|&p| rho_registers[p].clone())
        .collect();
    let kept_dims: Vec<usize> = kept_positions.iter().map(|&p| dims[p]).collect();
    let kept_dim: usize = kept_dims.iter().product::<usize>().max(1);
    let subset_strides = strides(&subset_dims);
    let kept_strides = strides(&kept_dims);
    let total: usize = dims.iter().product();
    let mut subset = vec![0usize; total];
    let mut kept = vec![0usize; total];
    for i in 0..total {
        let idx = decompose(i, &dims, &st);
        subset[i] = subset_positions
            .iter()
            .zip(&subset_strides)
            .map(|(&p, s)| idx[p] * s)
            .sum();
        kept[i] = kept_positions
            .iter()
            .zip(&kept_strides)
            .map(|(&p, s)| idx[p] * s)
            .sum();
    }
    Ok(BraIndexing {
        subset,
        kept,
        kept_registers,
        kept_dim,
    })
}

/// Unnormalized projection value `<b|rho|b>`. Total function used by the
/// witness functionals and by completeness checks.
pub fn projection_weight(rho: &DensityOperator, bra: &Bra) -> Result<f64> {
    let ix = bra_indexing(&rho.registers, bra)?;
    let d = rho.dim();
    let mut acc = Complex64::ZERO;
    for i in 0..d {
        for j in 0..d {
            if ix.kept[i] == ix.kept[j] {
                acc += bra.amplitudes[ix.subset[i]]
                    * rho.matrix[(i, j)]
                    * bra.amplitudes[ix.subset[j]].conj();
            }
        }
    }
    Ok(acc.re)
}

/// Conditions `rho` on the outcome `<b|`, returning the outcome probability
/// and the renormalized post-state over the remaining registers.
///
/// Probabilities below [`HERALD_THRESHOLD`] are reported as
/// [`Error::HeraldFailure`]; there is no post-state to renormalize.
pub fn project(rho: &DensityOperator, bra: &Bra) -> Result<(f64, DensityOperator)> {
    let ix = bra_indexing(&rho.registers, bra)?;
    if ix.kept_registers.is_empty() {
        return Err(Error::Register(
            "projection must leave at least one register".into(),
        ));
    }
    let d = rho.dim();
    let mut block = DMatrix::<Complex64>::zeros(ix.kept_dim, ix.kept_dim);
    for i in 0..d {
        for j in 0..d {
            block[(ix.kept[i], ix.kept[j])] += bra.amplitudes[ix.subset[i]]
                * rho.matrix[(i, j)]
                * bra.amplitudes[ix.subset[j]].conj();
        }
    }
    let probability = block.trace().re;
    if probability < HERALD_THRESHOLD {
        return Err(Error::HeraldFailure { probability });
    }
    let matrix = block * Complex64::new(1.0 / probability, 0.0);
    Ok((
        probability,
        DensityOperator {
            registers: ix.kept_registers,
            matrix,
        },
    ))
}

/// Traces out one register, returning the reduced operator over the rest.
pub fn partial_trace(rho: &DensityOperator, id: RegId) -> Result<DensityOperator> {
    let pos = rho.register_position(id)?;
    if rho.registers.len() == 1 {
        return Err(Error::Register("cannot trace out the only register".into()));
    }
    let dims = rho.register_dims();
    let st = strides(&dims);
    let kept_positions: Vec<usize> = (0..rho.registers.len()).filter(|&p| p != pos).collect();
    let kept_registers: Vec<Register> = kept_positions
        .iter()
        .map(|&p| rho.registers[p].clone())
        .collect();
    let kept_dims: Vec<usize> = kept_positions.iter().map(|&p| dims[p]).collect();
    let kept_strides = strides(&kept_dims);
    let kept_dim: usize = kept_dims.iter().product();
    let d = rho.dim();
    let mut traced_of = vec![0usize; d];
    let mut kept_of = vec![0usize; d];
    for i in 0..d {
        let idx = decompose(i, &dims, &st);
        traced_of[i] = idx[pos];
        kept_of[i] = kept_positions
            .iter()
            .zip(&kept_strides)
            .map(|(&p, s)| idx[p] * s)
            .sum();
    }
    let mut matrix = DMatrix::<Complex64>::zeros(kept_dim, kept_dim);
    for i in 0..d {
        for j in 0..d {
            if traced_of[i] == traced_of[j] {
                matrix[(kept_of[i], kept_of[j])] += rho.matrix[(i, j)];
            }
        }
    }
    Ok(DensityOperator {
        registers: kept_registers,
        matrix,
    })
}

/// Applies a 2x2 unitary on two levels of one register of a pure state,
/// identity elsewhere.
pub(crate) fn apply_level_pair_unitary(
    state: &HybridState,
    reg_pos: usize,
    level_a: usize,
    level_b: usize,
    u: &[[Complex64; 2]; 2],
) -> HybridState {
    let dims = state.register_dims();
    let st = strides(&dims);
    let stride = st[reg_pos];
    let mut amplitudes = state.amplitudes.clone();
    for i in 0..state.dim() {
        if (i / stride) % dims[reg_pos] == level_a {
            let j = i + (level_b - level_a) * stride;
            let (x, y) = (amplitudes[i], amplitudes[j]);
            amplitudes[i] = u[0][0] * x + u[0][1] * y;
            amplitudes[j] = u[1][0] * x + u[1][1] * y;
        }
    }
    HybridState {
        registers: state.registers.clone(),
        amplitudes,
    }
}

/// Multiplies the amplitude of every joint basis element whose register
/// indices match all listed (position, index) constraints by `factor`.
pub(crate) fn apply_conditional_phase(
    state: &HybridState,
    constraints: &[(usize, usize)],
    factor: Complex64,
) -> HybridState {
    let dims = state.register_dims();
    let st = strides(&dims);
    let mut amplitudes = state.amplitudes.clone();
    for (i, amp) in amplitudes.iter_mut().enumerate() {
        if constraints.iter().all(|&(p, v)| (i / st[p]) % dims[p] == v) {
            *amp *= factor;
        }
    }
    HybridState {
        registers: state.registers.clone(),
        amplitudes,
    }
}

/// Applies a diagonal single-register phase (or general diagonal) operator to
/// a density operator: `rho -> D rho D^dagger` with D diagonal over the full
/// joint basis.
pub(crate) fn conjugate_by_diagonal(rho: &DensityOperator, diag: &[Complex64]) -> DensityOperator {
    let d = rho.dim();
    let matrix = DMatrix::from_fn(d, d, |i, j| diag[i] * rho.matrix[(i, j)] * diag[j].conj());
    DensityOperator {
        registers: rho.registers.clone(),
        matrix,
    }
}

/// Applies a full-dimension unitary built from a 2x2 block on one register to
/// a density operator.
pub(crate) fn conjugate_by_level_pair_unitary(
    rho: &DensityOperator,
    reg_pos: usize,
    level_a: usize,
    level_b: usize,
    u: &[[Complex64; 2]; 2],
) -> DensityOperator {
    let dims = rho.register_dims();
    let st = strides(&dims);
    let stride = st[reg_pos];
    let d = rho.dim();
    // U rho: mix row pairs, then (U rho) U^dagger: mix column pairs.
    let mut m = rho.matrix.clone();
    for i in 0..d {
        if (i / stride) % dims[reg_pos] == level_a {
            let k = i + (level_b - level_a) * stride;
            for j in 0..d {
                let (x, y) = (m[(i, j)], m[(k, j)]);
                m[(i, j)] = u[0][0] * x + u[0][1] * y;
                m[(k, j)] = u[1][0] * x + u[1][1] * y;
            }
        }
    }
    for j in 0..d {
        if (j / stride) % dims[reg_pos] == level_a {
            let k = j + (level_b - level_a) * stride;
            for i in 0..d {
                let (x, y) = (m[(i, j)], m[(i, k)]);
                m[(i, j)] = x * u[0][0].conj() + y * u[0][1].conj();
                m[(i, k)] = x * u[1][0].conj() + y * u[1][1].conj();
            }
        }
    }
    DensityOperator {
        registers: rho.registers.clone(),
        matrix: m,
    }
}

pub(crate) fn register_strides(dims: &[usize]) -> Vec<usize> {
    strides(dims)
}

/// Serialization shape for a density operator stored in a JSON file.
#[derive(Serialize, Deserialize)]
pub struct DensityMatrixFile {
    pub registers: Vec<Register>,
    pub matrix: Vec<Vec<Complex64>>,
}

impl DensityMatrixFile {
    pub fn from_density(op: &DensityOperator) -> Self {
        let d = op.dim();
        let matrix = (0..d)
            .map(|i| (0..d).map(|j| op.matrix()[(i, j)]).collect())
            .collect();
        Self {
            registers: op.registers().to_vec(),
            matrix,
        }
    }

    pub fn into_density(self) -> Result<DensityOperator> {
        let d: usize = self.registers.iter().map(|r| r.dim()).product();
        if self.matrix.len() != d || self.matrix.iter().any(|row| row.len() != d) {
            return Err(Error::Dimension {
                expected: d,
                actual: self.matrix.len(),
            });
        }
        let matrix = DMatrix::from_fn(d, d, |i, j| self.matrix[i][j]);
        DensityOperator::from_parts(self.registers, matrix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn photon_l() -> Register {
        Register::Photon(
            PhotonRegister::new(
                Side::L,
                vec![
                    FrequencyBin::new("w4", 4.0e9),
                    FrequencyBin::new("w3", 3.0e9),
                ],
            )
            .unwrap(),
        )
    }

    fn atom_r() -> Register {
        Register::Atom(
            AtomRegister::new(Side::R, vec!["g1".into(), "g2".into()], vec![0.0, 1.0e8]).unwrap(),
        )
    }

    fn bell_state() -> HybridState {
        // (|w4 g2> + |w3 g1>)/sqrt(2) in the (w4g1, w4g2, w3g1, w3g2) order.
        make_pure(
            vec![photon_l(), atom_r()],
            &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn make_pure_normalizes_and_orders() {
        let s = bell_state();
        assert_relative_eq!(s.norm(), 1.0, epsilon = ALGEBRA_TOL);
        let r = 0.5f64.sqrt();
        assert_relative_eq!(s.amplitude(&[0, 1]).re, r, epsilon = ALGEBRA_TOL);
        assert_relative_eq!(s.amplitude(&[1, 0]).re, r, epsilon = ALGEBRA_TOL);
        assert_eq!(s.amplitude(&[0, 0]), Complex64::ZERO);
    }

    #[test]
    fn make_pure_basis_state() {
        let s = make_pure(vec![atom_r()], &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(s.amplitudes()[0], Complex64::ONE);
    }

    #[test]
    fn make_pure_rescales() {
        let s = make_pure(
            vec![photon_l(), atom_r()],
            &[c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        assert_relative_eq!(s.amplitudes()[0].re, 1.0, epsilon = ALGEBRA_TOL);
    }

    #[test]
    fn make_pure_rejects_zero_norm() {
        let err = make_pure(vec![atom_r()], &[c(0.0, 0.0), c(0.0, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::Normalization { .. }));
    }

    #[test]
    fn make_pure_rejects_bad_length() {
        let err = make_pure(vec![atom_r()], &[c(1.0, 0.0)]).unwrap_err();
        assert!(matches!(
            err,
            Error::Dimension {
                expected: 2,
                actual: 1
            }
        ));
    }

    #[test]
    fn tensor_builds_outer_product() {
        let g1 = make_pure(vec![atom_r()], &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let pair = make_pure(vec![photon_l()], &[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let joint = tensor(&pair, &g1).unwrap();
        assert_eq!(joint.registers().len(), 2);
        let r = 0.5f64.sqrt();
        assert_relative_eq!(joint.amplitude(&[0, 0]).re, r, epsilon = ALGEBRA_TOL);
        assert_relative_eq!(joint.amplitude(&[1, 0]).im, r, epsilon = ALGEBRA_TOL);
        assert_eq!(joint.amplitude(&[0, 1]), Complex64::ZERO);
    }

    #[test]
    fn tensor_norm_multiplicative() {
        let a = make_pure(vec![atom_r()], &[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let b = make_pure(vec![photon_l()], &[c(0.3, 0.4), c(0.5, -0.2)]).unwrap();
        assert_relative_eq!(tensor(&a, &b).unwrap().norm(), 1.0, epsilon = ALGEBRA_TOL);
    }

    #[test]
    fn tensor_rejects_identity_collision() {
        let a = make_pure(vec![atom_r()], &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let err = tensor(&a, &a).unwrap_err();
        assert!(matches!(err, Error::Register(_)));
    }

    #[test]
    fn to_density_diag_for_basis() {
        let s = make_pure(vec![atom_r()], &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let rho = to_density(&s);
        assert_relative_eq!(rho.matrix()[(0, 0)].re, 1.0, epsilon = ALGEBRA_TOL);
        assert_relative_eq!(rho.matrix()[(1, 1)].norm(), 0.0, epsilon = ALGEBRA_TOL);
        rho.validate().unwrap();
    }

    #[test]
    fn to_density_bell_entries() {
        let rho = to_density(&bell_state());
        let mut half_entries = 0;
        for i in 0..4 {
            for j in 0..4 {
                let m = rho.matrix()[(i, j)].norm();
                if (m - 0.5).abs() < ALGEBRA_TOL {
                    half_entries += 1;
                } else {
                    assert!(m < ALGEBRA_TOL);
                }
            }
        }
        assert_eq!(half_entries, 4);
        assert_relative_eq!(rho.trace().re, 1.0, epsilon = ALGEBRA_TOL);
    }

    #[test]
    fn mix_weight_validation() {
        let rho = to_density(&bell_state());
        assert!(matches!(
            mix(&[(0.4, rho.clone()), (0.4, rho.clone())]).unwrap_err(),
            Error::Weight { .. }
        ));
        let single = mix(&[(1.0, rho.clone())]).unwrap();
        assert_relative_eq!(
            (single.matrix() - rho.matrix())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max),
            0.0,
            epsilon = ALGEBRA_TOL
        );
    }

    #[test]
    fn mix_rejects_register_mismatch() {
        let rho = to_density(&bell_state());
        let other = to_density(&make_pure(vec![atom_r()], &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap());
        assert!(matches!(
            mix(&[(0.5, rho), (0.5, other)]).unwrap_err(),
            Error::Register(_)
        ));
    }

    #[test]
    fn mix_stays_positive() {
        let mut rng_state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let amps: Vec<Complex64> = (0..4).map(|_| c(next() - 0.5, next() - 0.5)).collect();
            let a = to_density(&make_pure(vec![photon_l(), atom_r()], &amps).unwrap());
            let amps: Vec<Complex64> = (0..4).map(|_| c(next() - 0.5, next() - 0.5)).collect();
            let b = to_density(&make_pure(vec![photon_l(), atom_r()], &amps).unwrap());
            let w = 0.1 + 0.8 * next();
            let m = mix(&[(w, a), (1.0 - w, b)]).unwrap();
            assert!(m.eigenvalues()[0] >= -EIGEN_TOL);
            m.validate().unwrap();
        }
    }

    #[test]
    fn mix_flattens_associatively() {
        let rho_a = to_density(&bell_state());
        let rho_b = to_density(
            &make_pure(
                vec![photon_l(), atom_r()],
                &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            )
            .unwrap(),
        );
        let rho_c = to_density(
            &make_pure(
                vec![photon_l(), atom_r()],
                &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            )
            .unwrap(),
        );
        let nested = mix(&[
            (
                0.5,
                mix(&[(0.4, rho_a.clone()), (0.6, rho_b.clone())]).unwrap(),
            ),
            (0.5, rho_c.clone()),
        ])
        .unwrap();
        let flat = mix(&[(0.2, rho_a), (0.3, rho_b), (0.5, rho_c)]).unwrap();
        let defect = (nested.matrix() - flat.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(defect < ALGEBRA_TOL);
    }

    #[test]
    fn project_selects_amplitudes() {
        let rho = to_density(&bell_state());
        let bra = Bra::basis(RegId::photon(Side::L), 2, 0); // <w4|
        let (p, post) = project(&rho, &bra).unwrap();
        assert_relative_eq!(p, 0.5, epsilon = ALGEBRA_TOL);
        assert_eq!(post.registers().len(), 1);
        assert_relative_eq!(post.matrix()[(1, 1)].re, 1.0, epsilon = ALGEBRA_TOL);
    }

    #[test]
    fn project_orthogonal_is_herald_failure() {
        let g1 = to_density(
            &make_pure(vec![atom_r(), photon_l()], &{
                let mut v = vec![c(0.0, 0.0); 4];
                v[0] = c(1.0, 0.0);
                v
            })
            .unwrap(),
        );
        let bra = Bra::basis(RegId::atom(Side::R), 2, 1); // <g2|
        assert!(matches!(
            project(&g1, &bra),
            Err(Error::HeraldFailure { .. })
        ));
    }

    #[test]
    fn projection_probabilities_complete() {
        let rho = to_density(&bell_state());
        let mut total = 0.0;
        for k in 0..2 {
            let bra = Bra::basis(RegId::photon(Side::L), 2, k);
            total += projection_weight(&rho, &bra).unwrap();
        }
        assert_relative_eq!(total, 1.0, epsilon = ALGEBRA_TOL);
    }

    #[test]
    fn global_phase_leaves_probabilities() {
        let s = bell_state();
        let phase = Complex64::from_polar(1.0, 1.234);
        let rotated = HybridState::from_normalized_parts(
            s.registers().to_vec(),
            s.amplitudes().iter().map(|a| a * phase).collect(),
        );
        let bra = Bra::new(vec![RegId::photon(Side::L)], vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let p0 = projection_weight(&to_density(&s), &bra).unwrap();
        let p1 = projection_weight(&to_density(&rotated), &bra).unwrap();
        assert_relative_eq!(p0, p1, epsilon = ALGEBRA_TOL);
    }

    #[test]
    fn partial_trace_bell_gives_maximally_mixed() {
        let rho = to_density(&bell_state());
        let reduced = partial_trace(&rho, RegId::photon(Side::L)).unwrap();
        assert_relative_eq!(reduced.matrix()[(0, 0)].re, 0.5, epsilon = ALGEBRA_TOL);
        assert_relative_eq!(reduced.matrix()[(1, 1)].re, 0.5, epsilon = ALGEBRA_TOL);
        assert_relative_eq!(reduced.matrix()[(0, 1)].norm(), 0.0, epsilon = ALGEBRA_TOL);
        assert_relative_eq!(reduced.trace().re, 1.0, epsilon = ALGEBRA_TOL);
    }

    #[test]
    fn partial_trace_of_product_recovers_factor() {
        let a = make_pure(vec![photon_l()], &[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let b = make_pure(vec![atom_r()], &[c(0.8, 0.0), c(0.6, 0.0)]).unwrap();
        let joint = to_density(&tensor(&a, &b).unwrap());
        let reduced = partial_trace(&joint, RegId::atom(Side::R)).unwrap();
        let expect = to_density(&a);
        let defect = (reduced.matrix() - expect.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(defect < ALGEBRA_TOL);
    }

    #[test]
    fn partial_trace_unknown_register() {
        let rho = to_density(&bell_state());
        assert!(matches!(
            partial_trace(&rho, RegId::atom(Side::L)).unwrap_err(),
            Error::Register(_)
        ));
    }

    #[test]
    fn project_then_trace_commutes_on_disjoint_registers() {
        // Three registers: project one, trace another; order must not matter.
        let atom_l = Register::Atom(
            AtomRegister::new(Side::L, vec!["g1".into(), "g2".into()], vec![0.0, 1.0]).unwrap(),
        );
        let amps: Vec<Complex64> = (0..8)
            .map(|k| c(0.1 + k as f64 * 0.07, 0.05 * (k as f64 - 3.0)))
            .collect();
        let rho = to_density(&make_pure(vec![photon_l(), atom_r(), atom_l], &amps).unwrap());
        let bra = Bra::new(vec![RegId::photon(Side::L)], vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let (p1, projected_first) = project(&rho, &bra).unwrap();
        let a = partial_trace(&projected_first, RegId::atom(Side::L)).unwrap();
        let traced_first = partial_trace(&rho, RegId::atom(Side::L)).unwrap();
        let (p2, b) = project(&traced_first, &bra).unwrap();
        assert_relative_eq!(p1, p2, epsilon = ALGEBRA_TOL);
        let defect = (a.matrix() - b.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(defect < ALGEBRA_TOL);
    }

    #[test]
    fn permutation_round_trip() {
        let s = bell_state();
        let swapped = s.permuted(&[1, 0]).unwrap();
        assert_eq!(swapped.registers()[0].id(), RegId::atom(Side::R));
        let back = swapped.permuted(&[1, 0]).unwrap();
        assert_eq!(back, s);
        let rho = to_density(&s).permuted(&[1, 0]).unwrap();
        assert_relative_eq!(rho.trace().re, 1.0, epsilon = ALGEBRA_TOL);
        assert_relative_eq!(rho.matrix()[(2, 2)].re, 0.5, epsilon = ALGEBRA_TOL);
    }

    #[test]
    fn dimension_cap_enforced() {
        let bins: Vec<FrequencyBin> = (0..5000)
            .map(|k| FrequencyBin::new(format!("b{k}"), 1.0 + k as f64))
            .collect();
        let reg = Register::Photon(PhotonRegister::new(Side::L, bins).unwrap());
        let err = make_pure(vec![reg], &vec![c(1.0, 0.0); 5000]).unwrap_err();
        assert!(matches!(err, Error::DimensionCap { .. }));
    }

    #[test]
    fn density_file_round_trip() {
        let rho = to_density(&bell_state());
        let file = DensityMatrixFile::from_density(&rho);
        let back = file.into_density().unwrap();
        let defect = (back.matrix() - rho.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(defect < ALGEBRA_TOL);
    }
}
