//! Algebra identification through invariant bilinear forms.
//!
//! A matrix `J` with `xᵀJ + Jx = 0` for every `x` in the algebra is an
//! invariant bilinear form. A symmetric `J` marks an orthogonal algebra
//! `so(N)`, an antisymmetric one a symplectic algebra `sp(N/2)`. Together with
//! the dimension count this decides between complete controllability,
//! pure-state controllability and neither.

use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::closure::LieAlgebraBasis;
use crate::linalg::{self, c, conj, frobenius, max_imag, unitarity_defect, CMatrix};
use crate::{Error, Result};

/// Relative singular-value threshold for null directions of the form equations.
pub const NULL_SPACE_TOL: f64 = 1e-8;

/// Largest accepted `max ‖xᵀJ + Jx‖_F` when tagging an algebra.
pub const FORM_RESIDUAL_TOL: f64 = 1e-8;

/// Minimal `σ_min / σ_max` of a nondegenerate form.
pub const NONDEGENERACY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormSymmetry {
    Symmetric,
    Antisymmetric,
    None,
}

#[derive(Clone, Debug)]
pub struct InvariantForm {
    j: CMatrix,
    symmetry: FormSymmetry,
    residual: f64,
    null_space_dim: usize,
    notes: Vec<String>,
}

impl InvariantForm {
    /// Wraps a given `J`, tagging its symmetry and measuring its residual on `basis`.
    pub fn from_matrix(j: CMatrix, basis: &LieAlgebraBasis) -> Result<Self> {
        let n = linalg::check_square(&j)?;
        if n != basis.dim_space() {
            return Err(Error::DimensionMismatch { expected: basis.dim_space(), actual: n });
        }
        let scale = frobenius(&j);
        let symmetry = if frobenius(&(&j - j.transpose())) <= 1e-10 * scale {
            FormSymmetry::Symmetric
        } else if frobenius(&(&j + j.transpose())) <= 1e-10 * scale {
            FormSymmetry::Antisymmetric
        } else {
            FormSymmetry::None
        };
        let residual = form_residual(basis, &j);
        Ok(InvariantForm { j, symmetry, residual, null_space_dim: 1, notes: Vec::new() })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.j
    }

    pub fn symmetry(&self) -> FormSymmetry {
        self.symmetry
    }

    /// `max ‖xᵀJ + Jx‖_F` over the basis the form was computed for.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn null_space_dim(&self) -> usize {
        self.null_space_dim
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// `σ_min(J) / σ_max(J)`.
    pub fn condition_ratio(&self) -> f64 {
        condition_ratio(&self.j)
    }
}

/// `‖xᵀJ + Jx‖_F`.
pub fn form_defect(x: &CMatrix, j: &CMatrix) -> f64 {
    frobenius(&(x.transpose() * j + j * x))
}

/// `max ‖xᵀJ + Jx‖_F` over the basis elements.
pub fn form_residual(basis: &LieAlgebraBasis, j: &CMatrix) -> f64 {
    basis.elements().iter().map(|x| form_defect(x.matrix(), j)).fold(0.0, f64::max)
}

/// Outcome of the null-space search, with diagnostics when no form is returned.
#[derive(Clone, Debug)]
pub struct FormSearch {
    pub form: Option<InvariantForm>,
    pub null_space_dim: usize,
    pub notes: Vec<String>,
}

pub fn find_invariant_form(basis: &LieAlgebraBasis) -> Option<InvariantForm> {
    search_invariant_form(basis).form
}

/// Solves `xᵀJ + Jx = 0` for all basis elements `x` by extracting the numerical
/// null space of the stacked `(dim·N²) × N²` coefficient matrix.
pub fn search_invariant_form(basis: &LieAlgebraBasis) -> FormSearch {
    let n = basis.dim_space();
    if basis.is_empty() {
        return FormSearch {
            form: None,
            null_space_dim: n * n,
            notes: vec!["empty algebra: every matrix is invariant".into()],
        };
    }
    let null = null_vectors(&constraint_matrix(basis));
    let null_space_dim = null.len();
    let mut notes = Vec::new();
    if null.is_empty() {
        notes.push("no invariant bilinear form".into());
        return FormSearch { form: None, null_space_dim, notes };
    }

    let as_matrix = |v: &DVector<Complex64>| CMatrix::from_fn(n, n, |p, q| v[p * n + q]);
    let candidates: Vec<CMatrix> = if null_space_dim == 1 {
        vec![normalize(as_matrix(&null[0]))]
    } else {
        notes.push(format!(
            "invariant forms span a {null_space_dim}-dimensional space; reporting a distinguished element"
        ));
        split_candidates(&null.iter().map(as_matrix).collect::<Vec<_>>())
    };

    // largest symmetric/antisymmetric gap first, then best conditioned
    let scored = candidates.into_iter().map(|j| {
        let (sym, anti) = parts(&j);
        let total = frobenius(&j);
        let gap = (frobenius(&sym) - frobenius(&anti)).abs() / total;
        let cond = condition_ratio(&j);
        (gap, cond, j)
    });
    let mut best: Option<(f64, f64, CMatrix)> = None;
    for cand in scored {
        let better = match &best {
            None => true,
            Some((gap, cond, _)) => {
                cand.0 > gap + 1e-12 || ((cand.0 - gap).abs() <= 1e-12 && cand.1 > cond + 1e-12)
            }
        };
        if better {
            best = Some(cand);
        }
    }
    let (_, cond, j) = best.expect("at least one candidate");
    if cond < NONDEGENERACY_TOL {
        notes.push(format!("every invariant form found is degenerate (σ_min/σ_max = {cond:.3e})"));
        return FormSearch { form: None, null_space_dim, notes };
    }

    let (sym, anti) = parts(&j);
    let (ns, na) = (frobenius(&sym), frobenius(&anti));
    let (j, symmetry) = if na <= 1e-6 * ns {
        (normalize(sym), FormSymmetry::Symmetric)
    } else if ns <= 1e-6 * na {
        (normalize(anti), FormSymmetry::Antisymmetric)
    } else {
        (j, FormSymmetry::None)
    };
    let residual = form_residual(basis, &j);
    let form = InvariantForm { j, symmetry, residual, null_space_dim, notes: notes.clone() };
    FormSearch { form: Some(form), null_space_dim, notes }
}

/// Coefficients of `J ↦ xᵀJ + Jx` on `vec(J)` (row-major), stacked over the basis.
fn constraint_matrix(basis: &LieAlgebraBasis) -> CMatrix {
    let n = basis.dim_space();
    let nn = n * n;
    let mut m = CMatrix::zeros(basis.len() * nn, nn);
    for (k, x) in basis.elements().iter().enumerate() {
        let x = x.matrix();
        for a in 0..n {
            for b in 0..n {
                let row = k * nn + a * n + b;
                for s in 0..n {
                    // (xᵀJ)_ab = Σ_s x_sa J_sb,  (Jx)_ab = Σ_s J_as x_sb
                    m[(row, s * n + b)] += x[(s, a)];
                    m[(row, a * n + s)] += x[(s, b)];
                }
            }
        }
    }
    m
}

fn null_vectors(m: &CMatrix) -> Vec<DVector<Complex64>> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let largest = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut idx: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] <= NULL_SPACE_TOL * largest)
        .collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    // M = U Σ V†: row k of V† is the conjugate of the k-th right singular vector
    idx.into_iter().map(|k| v_t.row(k).transpose().map(|z| z.conj())).collect()
}

fn parts(j: &CMatrix) -> (CMatrix, CMatrix) {
    let t = j.transpose();
    ((j + &t).scale(0.5), (j - &t).scale(0.5))
}

/// Scales so the first largest-magnitude entry (row-major) equals one.
fn normalize(j: CMatrix) -> CMatrix {
    let largest = j.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let n = j.nrows();
    let pivot = (0..n)
        .flat_map(|p| (0..n).map(move |q| (p, q)))
        .map(|(p, q)| j[(p, q)])
        .find(|z| z.norm() >= (1.0 - 1e-9) * largest)
        .unwrap_or(c(1.0, 0.0));
    j.map(|z| z / pivot)
}

fn condition_ratio(j: &CMatrix) -> f64 {
    let sv = j.clone().singular_values();
    let hi = sv.iter().copied().fold(0.0, f64::max);
    let lo = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if hi == 0.0 {
        0.0
    } else {
        lo / hi
    }
}

/// The null space is closed under transposition, so it splits into symmetric
/// and antisymmetric subspaces. Candidates are the orthonormalized members of
/// each plus one fixed-weight combination per subspace.
fn split_candidates(null: &[CMatrix]) -> Vec<CMatrix> {
    let mut out = Vec::new();
    for pick_symmetric in [true, false] {
        let mut family: Vec<CMatrix> = Vec::new();
        for v in null {
            let (sym, anti) = parts(v);
            let mut w = if pick_symmetric { sym } else { anti };
            for f in &family {
                let coef = linalg::hs_inner_unchecked(f, &w);
                w -= f * coef;
            }
            let norm = frobenius(&w);
            if norm > 1e-8 {
                family.push(w.unscale(norm));
            }
        }
        if family.is_empty() {
            continue;
        }
        let mut weighted = CMatrix::zeros(family[0].nrows(), family[0].ncols());
        let mut weight = 1.0;
        for f in &family {
            weighted += f.scale(weight);
            weight *= 0.5;
        }
        out.extend(family.into_iter().map(normalize));
        out.push(normalize(weighted));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgebraTag {
    FullU,
    FullSu,
    OrthogonalSo,
    SymplecticSp,
    OtherSubalgebra,
}

impl fmt::Display for AlgebraTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AlgebraTag::FullU => "full_u",
            AlgebraTag::FullSu => "full_su",
            AlgebraTag::OrthogonalSo => "orthogonal_so",
            AlgebraTag::SymplecticSp => "symplectic_sp",
            AlgebraTag::OtherSubalgebra => "other_subalgebra",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct AlgebraClass {
    pub tag: AlgebraTag,
    /// Dimension of the algebra, counting `i·I` when it is contained.
    pub dim: usize,
    pub form: Option<InvariantForm>,
    pub notes: Vec<String>,
}

pub fn so_dimension(n: usize) -> usize {
    n * (n - 1) / 2
}

/// `dim sp(N/2) = (N/2)(N+1)` for even `N`.
pub fn sp_dimension(n: usize) -> Option<usize> {
    n.is_multiple_of(2).then(|| n / 2 * (n + 1))
}

pub fn classify_algebra(basis: &LieAlgebraBasis) -> AlgebraClass {
    let n = basis.dim_space();
    let count = basis.len();
    let extra_identity = basis.contains_identity() && !basis.spans_identity();
    let full_dim = count + usize::from(extra_identity);
    let mut notes = Vec::new();

    if full_dim == n * n {
        return AlgebraClass { tag: AlgebraTag::FullU, dim: full_dim, form: None, notes };
    }
    if count == n * n - 1 && !basis.contains_identity() {
        return AlgebraClass { tag: AlgebraTag::FullSu, dim: count, form: None, notes };
    }

    let search = search_invariant_form(basis);
    notes.extend(search.notes.iter().cloned());
    let Some(form) = search.form else {
        return AlgebraClass { tag: AlgebraTag::OtherSubalgebra, dim: full_dim, form: None, notes };
    };
    if extra_identity {
        notes.push("algebra also contains i·I (global phase), ignored for the form test".into());
    }
    let sound = form.residual() <= FORM_RESIDUAL_TOL;
    let tag = match form.symmetry() {
        FormSymmetry::Symmetric if sound && count == so_dimension(n) => AlgebraTag::OrthogonalSo,
        FormSymmetry::Antisymmetric if sound && Some(count) == sp_dimension(n) => AlgebraTag::SymplecticSp,
        symmetry => {
            notes.push(format!(
                "{symmetry:?} invariant form (residual {:.3e}) but dimension {count} does not match \
                 the corresponding classical algebra",
                form.residual()
            ));
            AlgebraTag::OtherSubalgebra
        }
    };
    let dim = match tag {
        AlgebraTag::OtherSubalgebra => full_dim,
        _ => count,
    };
    AlgebraClass { tag, dim, form: Some(form), notes }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControllabilityVerdict {
    pub complete: bool,
    pub pure_state: bool,
    pub notes: String,
}

pub fn controllability_verdict(class: &AlgebraClass, n: usize) -> ControllabilityVerdict {
    let (complete, pure_state, notes) = match class.tag {
        AlgebraTag::FullU | AlgebraTag::FullSu => {
            (true, true, "every unitary is generated (up to a global phase)".to_string())
        }
        AlgebraTag::SymplecticSp if n.is_multiple_of(2) => (
            false,
            true,
            format!("Sp({}) acts transitively on the unit sphere of C^{n}", n / 2),
        ),
        AlgebraTag::SymplecticSp => (false, false, "symplectic tag with odd dimension is inconsistent".into()),
        AlgebraTag::OrthogonalSo => (
            false,
            false,
            "SO(N) is not transitive on the sphere of C^N; O(2N) is not a subalgebra of U(N), \
             and real states stay real in the adapted basis"
                .to_string(),
        ),
        AlgebraTag::OtherSubalgebra => (
            false,
            false,
            "proper subalgebra outside the classified families; pure-state controllability not decided"
                .to_string(),
        ),
    };
    ControllabilityVerdict { complete, pure_state, notes }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealStructureCheck {
    /// Every `U x U†` is real and antisymmetric.
    pub is_real_rep: bool,
    /// Largest imaginary entry over all `U x U†`.
    pub max_imag: f64,
    /// Largest `‖B + Bᵀ‖_F` over all `B = U x U†`.
    pub max_asymmetry: f64,
    /// `U = conj(U)·J`.
    pub condition_holds: bool,
    pub condition_defect: f64,
}

pub fn verify_real_structure(
    basis: &LieAlgebraBasis,
    u: &CMatrix,
    form: &InvariantForm,
) -> Result<RealStructureCheck> {
    let n = linalg::check_square(u)?;
    if n != basis.dim_space() || form.matrix().nrows() != n {
        return Err(Error::DimensionMismatch { expected: basis.dim_space(), actual: n });
    }
    let defect = unitarity_defect(u);
    if defect > 1e-8 {
        return Err(Error::NotUnitary(defect));
    }
    if form.symmetry() != FormSymmetry::Symmetric {
        return Err(Error::InvalidArgument("real-structure check needs a symmetric form".into()));
    }
    let tol = linalg::STRUCTURE_TOL * frobenius(u).max(1.0);
    let condition_defect = frobenius(&(u - conj(u) * form.matrix()));

    let mut worst_imag: f64 = 0.0;
    let mut worst_asym: f64 = 0.0;
    for x in basis.elements() {
        let b = u * x.matrix() * u.adjoint();
        worst_imag = worst_imag.max(max_imag(&b));
        worst_asym = worst_asym.max(frobenius(&(&b + b.transpose())));
    }
    Ok(RealStructureCheck {
        is_real_rep: worst_imag <= tol && worst_asym <= tol,
        max_imag: worst_imag,
        max_asymmetry: worst_asym,
        condition_holds: condition_defect <= tol,
        condition_defect,
    })
}
