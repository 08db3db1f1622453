//! Breadth-first commutator closure of the dynamical Lie algebra.
//!
//! The closure runs on `{i·traceless(H0), iH1, …, iHM}`. Whether `i·I` belongs
//! to the full algebra generated by the raw Hamiltonians is tracked separately
//! in [`LieAlgebraBasis::contains_identity`]; the identity component only
//! contributes a global phase.

use num_complex::Complex64;

use crate::linalg::{
    self, commutator, frobenius, hs_inner_unchecked, identity, traceless_part, CMatrix, SkewHermitian,
};
use crate::models::ControlSystem;

/// Relative threshold above which a residual counts as a new direction.
pub const CLOSURE_TOL: f64 = 1e-8;

/// Residual norm, relative to the parent scale, below which a second
/// Gram–Schmidt pass is applied.
const REORTHOGONALIZE_BELOW: f64 = 1e-4;

#[derive(Clone, Copy, Debug)]
pub struct ClosureOptions {
    /// Multiplies [`CLOSURE_TOL`].
    pub tolerance_scale: f64,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        ClosureOptions { tolerance_scale: 1.0 }
    }
}

impl ClosureOptions {
    pub fn tolerance(&self) -> f64 {
        CLOSURE_TOL * self.tolerance_scale
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    /// The generator at this position of `{i·traceless(H0), iH1, …}`.
    Generator(usize),
    /// Commutator of two earlier basis elements.
    Commutator(usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationRecord {
    pub source: Source,
    /// Residual norm relative to the parent scale at acceptance.
    pub residual: f64,
}

/// Hilbert–Schmidt orthonormal basis of a matrix Lie algebra.
#[derive(Clone, Debug)]
pub struct LieAlgebraBasis {
    dim_space: usize,
    elements: Vec<SkewHermitian>,
    contains_identity: bool,
    generation_log: Vec<GenerationRecord>,
    tolerance: f64,
    ill_conditioned: bool,
}

impl LieAlgebraBasis {
    pub fn empty(n: usize) -> Self {
        LieAlgebraBasis {
            dim_space: n,
            elements: Vec::new(),
            contains_identity: false,
            generation_log: Vec::new(),
            tolerance: CLOSURE_TOL,
            ill_conditioned: false,
        }
    }

    /// Orthonormalizes the given matrices without closing under commutators.
    pub fn span_of(n: usize, matrices: &[SkewHermitian]) -> Self {
        let mut basis = Self::empty(n);
        for (k, m) in matrices.iter().enumerate() {
            basis.try_insert(m.matrix(), frobenius(m.matrix()), Source::Generator(k));
        }
        basis
    }

    /// Dimension `N` of the underlying Hilbert space.
    pub fn dim_space(&self) -> usize {
        self.dim_space
    }

    pub fn elements(&self) -> &[SkewHermitian] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains_identity(&self) -> bool {
        self.contains_identity
    }

    /// True when `i·I` lies in the span of [`Self::elements`] itself.
    pub fn spans_identity(&self) -> bool {
        let n = self.dim_space;
        let id = identity(n).map(|z| z * linalg::I);
        let (_, norm) = project_residual(self, &id);
        norm <= self.tolerance * (n as f64).sqrt()
    }

    pub fn generation_log(&self) -> &[GenerationRecord] {
        &self.generation_log
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Set when some element was accepted with a residual within 10× of the tolerance.
    pub fn ill_conditioned(&self) -> bool {
        self.ill_conditioned
    }

    /// `X = Σ cₖ eₖ`.
    pub fn combine(&self, coeffs: &[f64]) -> SkewHermitian {
        let n = self.dim_space;
        let mut m = CMatrix::zeros(n, n);
        for (ck, e) in coeffs.iter().zip(&self.elements) {
            m += e.matrix().scale(*ck);
        }
        SkewHermitian::skew_part(m)
    }

    /// Gram–Schmidt step; returns true when `x` was accepted as a new element.
    fn try_insert(&mut self, x: &CMatrix, parent_scale: f64, source: Source) -> bool {
        if parent_scale == 0.0 {
            return false;
        }
        let (mut residual, mut norm) = project_residual(self, x);
        if norm < REORTHOGONALIZE_BELOW * parent_scale {
            let (again, again_norm) = project_residual(self, &residual);
            residual = again;
            norm = again_norm;
        }
        let relative = norm / parent_scale;
        if relative <= self.tolerance {
            return false;
        }
        if relative <= 10.0 * self.tolerance {
            self.ill_conditioned = true;
        }
        let unit = SkewHermitian::skew_part(residual.unscale(norm));
        self.elements.push(unit);
        self.generation_log.push(GenerationRecord { source, residual: relative });
        true
    }
}

/// Component of `x` orthogonal to the span of the basis, and its norm.
pub fn project_residual(basis: &LieAlgebraBasis, x: &CMatrix) -> (CMatrix, f64) {
    let mut residual = x.clone();
    let coeffs: Vec<Complex64> =
        basis.elements.iter().map(|e| hs_inner_unchecked(e.matrix(), x)).collect();
    for (coef, e) in coeffs.iter().zip(&basis.elements) {
        residual -= e.matrix() * *coef;
    }
    let norm = frobenius(&residual);
    (residual, norm)
}

/// Generators `{i·traceless(H0), iH1, …, iHM}` in input order.
pub fn generators(system: &ControlSystem) -> Vec<SkewHermitian> {
    std::iter::once(traceless_part(system.drift()).times_i())
        .chain(system.controls().iter().map(|h| h.times_i()))
        .collect()
}

pub fn generate_dynamical_algebra(system: &ControlSystem, opts: &ClosureOptions) -> LieAlgebraBasis {
    let n = system.dim();
    let max_dim = n * n;
    let mut basis = LieAlgebraBasis::empty(n);
    basis.tolerance = opts.tolerance();

    for (k, g) in generators(system).iter().enumerate() {
        if basis.len() == max_dim {
            break;
        }
        basis.try_insert(g.matrix(), frobenius(g.matrix()), Source::Generator(k));
    }

    // Each element is bracketed once against every element accepted before it;
    // elements appended meanwhile are processed in FIFO order.
    let mut next = 1;
    'sweep: while next < basis.len() {
        for j in 0..next {
            if basis.len() == max_dim {
                break 'sweep;
            }
            let comm = commutator(basis.elements[j].matrix(), basis.elements[next].matrix())
                .expect("basis elements share a dimension");
            basis.try_insert(&comm, 1.0, Source::Commutator(j, next));
        }
        next += 1;
    }

    let drift_trace = linalg::trace(system.drift().matrix()).re;
    basis.contains_identity =
        drift_trace.abs() > opts.tolerance() * frobenius(system.drift().matrix()).max(1.0)
            || basis.spans_identity();
    basis
}

pub fn algebra_dimension(basis: &LieAlgebraBasis) -> usize {
    basis.len()
}

/// Largest relative residual of `[eᵢ, eⱼ]` after projection onto the span.
pub fn closure_defect(basis: &LieAlgebraBasis) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..basis.len() {
        for j in i + 1..basis.len() {
            let comm = commutator(basis.elements[i].matrix(), basis.elements[j].matrix())
                .expect("basis elements share a dimension");
            worst = worst.max(project_residual(basis, &comm).1);
        }
    }
    worst
}

/// Largest `|⟨eᵢ, eⱼ⟩ − δᵢⱼ|`.
pub fn orthonormality_defect(basis: &LieAlgebraBasis) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in basis.elements.iter().enumerate() {
        for (j, b) in basis.elements.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((hs_inner_unchecked(a.matrix(), b.matrix()) - target).norm());
        }
    }
    worst
}
