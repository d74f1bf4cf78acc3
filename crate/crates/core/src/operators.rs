//! Discretizations of the model vector fields and the second-order family on
//! a rectangle in `(x, t)`: `Lbar = d_x + i a (t d_t + s)`, its conjugate, the
//! composed family, the microlocal cutoff in the `t`-frequency, and the exact
//! multiplier identity behind the conjugation by fractional powers.
//!
//! `t d_t` is realized exactly as `d/d(log t)` on log-spaced half-line grids
//! (a dense spectral block in `t`) and by centered differences times `t` on
//! linear grids; `d_x` is always second-order centered.

use crate::error::{Error, Result};
use crate::fourier::{multiplier_matrix, spectral_derivative_matrix};
use crate::scalar::{cre, iu, Cx, Scalar};
use crate::sparse::{CooBuilder, CsrMatrix};
use crate::util::{linspace, linspace_sym, smoothstep5, trapezoid_weights};
use serde::Serialize;
use std::io::Write;

/// Sign convention selecting `(t d_t + s)` versus `(t d_t - s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SignS {
    Plus,
    Minus,
}

impl SignS {
    pub fn factor<T: Scalar>(self) -> T {
        match self {
            SignS::Plus => T::one(),
            SignS::Minus => -T::one(),
        }
    }
}

/// Smooth real coefficient of `x`: zero, a constant, or a polynomial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Coefficient<T: Scalar> {
    Zero,
    Constant(T),
    Poly(Vec<T>),
}

impl<T: Scalar> Coefficient<T> {
    pub fn value(&self, x: T) -> T {
        match self {
            Coefficient::Zero => T::zero(),
            Coefficient::Constant(c) => *c,
            Coefficient::Poly(c) => c.iter().rev().fold(T::zero(), |acc, &ck| acc * x + ck),
        }
    }

    pub fn derivative(&self, x: T) -> T {
        match self {
            Coefficient::Zero | Coefficient::Constant(_) => T::zero(),
            Coefficient::Poly(c) => {
                let mut acc = T::zero();
                for k in (1..c.len()).rev() {
                    acc = acc * x + c[k] * T::from_usize_(k);
                }
                acc
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Coefficient::Zero)
            || matches!(self, Coefficient::Constant(c) if *c == T::zero())
    }
}

/// Data of the ODE family and the 2-D model operators: the constant (or
/// slowly varying) coefficient `a`, the lower-order coefficients, the sign
/// convention and the interval half-width `r` of `I = [-r, r]`.
#[derive(Clone, Debug, Serialize)]
pub struct OdeCoefficients<T: Scalar> {
    pub a: Coefficient<T>,
    pub beta1: Coefficient<T>,
    pub beta2: Coefficient<T>,
    pub beta3: Coefficient<T>,
    pub sign_s: SignS,
    /// Half-width of the base interval `I`.
    pub r: T,
}

impl<T: Scalar> OdeCoefficients<T> {
    /// The pure model: constant `a`, vanishing betas.
    pub fn model(a: T, r: T) -> Self {
        Self {
            a: Coefficient::Constant(a),
            beta1: Coefficient::Zero,
            beta2: Coefficient::Zero,
            beta3: Coefficient::Zero,
            sign_s: SignS::Plus,
            r,
        }
    }

    /// `Re a != 0` on `I`, sampled.
    pub fn validate(&self) -> Result<()> {
        if !(self.r > T::zero()) {
            return Err(Error::InvalidCoefficients("interval half-width must be positive".into()));
        }
        for &x in linspace(-self.r, self.r, 64).iter() {
            if self.a.value(x) == T::zero() {
                return Err(Error::InvalidCoefficients(format!(
                    "a({}) = 0 on the base interval",
                    x.to_f64_()
                )));
            }
        }
        Ok(())
    }
}

/// Boundary condition tag for grid operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundaryKind {
    /// Functions supported strictly inside the box; stencils truncate.
    SupportedInterior,
    /// Homogeneous Dirichlet: ghost values are zero (same stencil behavior).
    Dirichlet,
    /// Periodic wrap in the `t` direction.
    PeriodicT,
}

/// The `t` axis: a symmetric linear grid or a log-spaced half-line grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum TAxis<T: Scalar> {
    Linear { t_min: T, t_max: T },
    LogHalfLine { t_min: T, t_max: T },
}

/// Tensor grid on `[x_min, x_max] x (t axis)`, x-major storage.
#[derive(Clone, Debug, Serialize)]
pub struct GridSpec<T: Scalar> {
    pub nx: usize,
    pub nt: usize,
    pub x_min: T,
    pub x_max: T,
    pub t_axis: TAxis<T>,
    pub bc: BoundaryKind,
}

impl<T: Scalar> GridSpec<T> {
    /// Standard box for estimate work: `x` over `[-r-delta, r+delta]`,
    /// symmetric linear `t` over `[-delta, delta]`.
    pub fn support_box(r: T, delta: T, nx: usize, nt: usize) -> Result<Self> {
        let g = Self {
            nx,
            nt,
            x_min: -(r + delta),
            x_max: r + delta,
            t_axis: TAxis::Linear { t_min: -delta, t_max: delta },
            bc: BoundaryKind::SupportedInterior,
        };
        g.validate()?;
        Ok(g)
    }

    /// Half-line log grid for Mellin work.
    pub fn mellin_box(r: T, delta: T, t_min: T, t_max: T, nx: usize, nt: usize) -> Result<Self> {
        let g = Self {
            nx,
            nt,
            x_min: -(r + delta),
            x_max: r + delta,
            t_axis: TAxis::LogHalfLine { t_min, t_max },
            bc: BoundaryKind::SupportedInterior,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 8 || self.nt < 8 {
            return Err(Error::GridTooCoarse(format!("nx = {}, nt = {}", self.nx, self.nt)));
        }
        if !(self.x_max > self.x_min) {
            return Err(Error::InvalidGrid("empty x range".into()));
        }
        match self.t_axis {
            TAxis::Linear { t_min, t_max } => {
                if !(t_max > t_min) {
                    return Err(Error::InvalidGrid("empty t range".into()));
                }
            }
            TAxis::LogHalfLine { t_min, t_max } => {
                if !(t_min > T::zero() && t_max > t_min) {
                    return Err(Error::InvalidGrid("log axis needs 0 < t_min < t_max".into()));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nt + j
    }

    pub fn dx(&self) -> T {
        (self.x_max - self.x_min) / T::from_usize_(self.nx - 1)
    }

    pub fn x_nodes(&self) -> Vec<T> {
        if self.x_min == -self.x_max {
            linspace_sym(self.x_max, self.nx)
        } else {
            linspace(self.x_min, self.x_max, self.nx)
        }
    }

    pub fn t_nodes(&self) -> Vec<T> {
        match self.t_axis {
            TAxis::Linear { t_min, t_max } => {
                if t_min == -t_max {
                    linspace_sym(t_max, self.nt)
                } else {
                    linspace(t_min, t_max, self.nt)
                }
            }
            TAxis::LogHalfLine { t_min, t_max } => linspace(t_min.ln(), t_max.ln(), self.nt)
                .into_iter()
                .map(|l| l.exp())
                .collect(),
        }
    }

    /// Spacing of the underlying uniform coordinate (t or log t).
    pub fn t_spacing(&self) -> T {
        match self.t_axis {
            TAxis::Linear { t_min, t_max } => (t_max - t_min) / T::from_usize_(self.nt - 1),
            TAxis::LogHalfLine { t_min, t_max } => {
                (t_max.ln() - t_min.ln()) / T::from_usize_(self.nt - 1)
            }
        }
    }

    /// Quadrature weights of the `dt` measure per node (trapezoid; on the log
    /// axis the measure is `t dlambda`).
    pub fn t_weights(&self) -> Vec<T> {
        match self.t_axis {
            TAxis::Linear { .. } => trapezoid_weights(self.nt, self.t_spacing()),
            TAxis::LogHalfLine { .. } => {
                let base = trapezoid_weights(self.nt, self.t_spacing());
                self.t_nodes().iter().zip(base).map(|(&t, w)| t * w).collect()
            }
        }
    }

    pub fn x_weights(&self) -> Vec<T> {
        trapezoid_weights(self.nx, self.dx())
    }

    /// `L^2(dx dt)` inner product weights, flattened x-major.
    pub fn cell_weights(&self) -> Vec<T> {
        let wx = self.x_weights();
        let wt = self.t_weights();
        let mut w = Vec::with_capacity(self.len());
        for &a in &wx {
            for &b in &wt {
                w.push(a * b);
            }
        }
        w
    }
}

/// `L^2` norm of grid samples under the grid measure.
pub fn grid_norm<T: Scalar>(grid: &GridSpec<T>, u: &[Cx<T>]) -> T {
    let w = grid.cell_weights();
    u.iter().zip(w.iter()).map(|(z, &wi)| z.norm_sqr() * wi).sum::<T>().sqrt()
}

/// `L^2` inner product `<u, v>` under the grid measure.
pub fn grid_inner<T: Scalar>(grid: &GridSpec<T>, u: &[Cx<T>], v: &[Cx<T>]) -> Cx<T> {
    let w = grid.cell_weights();
    u.iter()
        .zip(v.iter())
        .zip(w.iter())
        .map(|((a, b), &wi)| a * b.conj() * Cx::new(wi, T::zero()))
        .sum()
}

/// Sparse linear operator on grid samples with declared order and boundary
/// condition.
#[derive(Clone, Debug)]
pub struct DiscreteOperator<T: Scalar> {
    matrix: CsrMatrix<T>,
    order: i8,
    bc: BoundaryKind,
}

impl<T: Scalar> DiscreteOperator<T> {
    pub fn new(matrix: CsrMatrix<T>, order: i8, bc: BoundaryKind) -> Self {
        Self { matrix, order, bc }
    }

    pub fn identity(n: usize, bc: BoundaryKind) -> Self {
        Self { matrix: CsrMatrix::identity(n), order: 0, bc }
    }

    pub fn order(&self) -> i8 {
        self.order
    }

    pub fn bc(&self) -> BoundaryKind {
        self.bc
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.matrix
    }

    pub fn apply(&self, u: &[Cx<T>]) -> Vec<Cx<T>> {
        self.matrix.apply(u)
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), order: self.order, bc: self.bc }
    }

    pub fn scale(&self, factor: Cx<T>) -> Self {
        Self { matrix: self.matrix.scale(factor), order: self.order, bc: self.bc }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::ShapeMismatch(format!("{} vs {}", self.dim(), other.dim())));
        }
        let one = cre(T::one());
        Ok(Self {
            matrix: self.matrix.add_scaled(one, &other.matrix, one),
            order: self.order.max(other.order),
            bc: self.bc,
        })
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::ShapeMismatch(format!("{} vs {}", self.dim(), other.dim())));
        }
        Ok(Self {
            matrix: self.matrix.matmul(&other.matrix),
            order: self.order + other.order,
            bc: self.bc,
        })
    }

    /// Coordinate-list text export: `row col re im` per line.
    pub fn export_coo(&self, out: &mut impl Write) -> std::io::Result<()> {
        self.matrix.write_coo(out)
    }
}

// ---- stencil builders ----

fn centered_dx<T: Scalar>(g: &GridSpec<T>) -> CsrMatrix<T> {
    let n = g.len();
    let inv = T::one() / (T::of(2.0) * g.dx());
    let mut b = CooBuilder::new(n, n);
    for i in 0..g.nx {
        for j in 0..g.nt {
            let row = g.idx(i, j);
            if i + 1 < g.nx {
                b.push(row, g.idx(i + 1, j), cre(inv));
            }
            if i >= 1 {
                b.push(row, g.idx(i - 1, j), cre(-inv));
            }
        }
    }
    b.build()
}

fn centered_dt_linear<T: Scalar>(g: &GridSpec<T>) -> CsrMatrix<T> {
    let n = g.len();
    let inv = T::one() / (T::of(2.0) * g.t_spacing());
    let periodic = g.bc == BoundaryKind::PeriodicT;
    let mut b = CooBuilder::new(n, n);
    for i in 0..g.nx {
        for j in 0..g.nt {
            let row = g.idx(i, j);
            if j + 1 < g.nt {
                b.push(row, g.idx(i, j + 1), cre(inv));
            } else if periodic {
                b.push(row, g.idx(i, 0), cre(inv));
            }
            if j >= 1 {
                b.push(row, g.idx(i, j - 1), cre(-inv));
            } else if periodic {
                b.push(row, g.idx(i, g.nt - 1), cre(-inv));
            }
        }
    }
    b.build()
}

/// Expand an `nt x nt` block acting in `t` to the full grid (identity in x).
fn expand_t_block<T: Scalar>(g: &GridSpec<T>, block: &[Cx<T>]) -> CsrMatrix<T> {
    let n = g.len();
    let mut b = CooBuilder::new(n, n);
    for i in 0..g.nx {
        for r in 0..g.nt {
            for c in 0..g.nt {
                let v = block[r * g.nt + c];
                if v.re != T::zero() || v.im != T::zero() {
                    b.push(g.idx(i, r), g.idx(i, c), v);
                }
            }
        }
    }
    b.build()
}

/// First derivative in `t` (centered on linear axes; meaningless on log axes,
/// kept internal).
pub fn op_dt<T: Scalar>(g: &GridSpec<T>) -> Result<DiscreteOperator<T>> {
    match g.t_axis {
        TAxis::Linear { .. } => Ok(DiscreteOperator::new(centered_dt_linear(g), 1, g.bc)),
        TAxis::LogHalfLine { .. } => {
            Err(Error::InvalidGrid("d_t stencil is defined on linear t axes only".into()))
        }
    }
}

/// `d_x` as a grid operator.
pub fn op_dx<T: Scalar>(g: &GridSpec<T>) -> DiscreteOperator<T> {
    DiscreteOperator::new(centered_dx(g), 1, g.bc)
}

/// The dilation generator `t d_t`: exact `d/d(log t)` (spectral, dense in `t`)
/// on log axes, `diag(t) * centered d_t` on linear axes.
pub fn op_tdt<T: Scalar>(g: &GridSpec<T>) -> DiscreteOperator<T> {
    match g.t_axis {
        TAxis::Linear { .. } => {
            let dt = centered_dt_linear(g);
            let t_nodes = g.t_nodes();
            let n = g.len();
            let mut diag = Vec::with_capacity(n);
            for _ in 0..g.nx {
                for &t in &t_nodes {
                    diag.push(cre(t));
                }
            }
            DiscreteOperator::new(CsrMatrix::diagonal(&diag).matmul(&dt), 1, g.bc)
        }
        TAxis::LogHalfLine { .. } => {
            let d = spectral_derivative_matrix(g.nt, g.t_spacing());
            let block: Vec<Cx<T>> = d.into_iter().map(cre).collect();
            DiscreteOperator::new(expand_t_block(g, &block), 1, g.bc)
        }
    }
}

/// Multiplication by `t`.
pub fn op_mult_t<T: Scalar>(g: &GridSpec<T>) -> DiscreteOperator<T> {
    let t_nodes = g.t_nodes();
    let mut diag = Vec::with_capacity(g.len());
    for _ in 0..g.nx {
        for &t in &t_nodes {
            diag.push(cre(t));
        }
    }
    DiscreteOperator::new(CsrMatrix::diagonal(&diag), 0, g.bc)
}

/// Multiplication by a function of `x`.
pub fn op_mult_x<T: Scalar>(g: &GridSpec<T>, f: &Coefficient<T>) -> DiscreteOperator<T> {
    let xs = g.x_nodes();
    let mut diag = Vec::with_capacity(g.len());
    for &x in &xs {
        let v = cre(f.value(x));
        for _ in 0..g.nt {
            diag.push(v);
        }
    }
    DiscreteOperator::new(CsrMatrix::diagonal(&diag), 0, g.bc)
}

/// Fourier multiplier in the `t`-frequency `tau` (dense block per x-slice).
/// Requires a linear `t` axis so that `tau` is meaningful.
pub fn op_t_multiplier<T: Scalar>(
    g: &GridSpec<T>,
    order: i8,
    sym: impl Fn(T) -> T,
) -> Result<DiscreteOperator<T>> {
    match g.t_axis {
        TAxis::Linear { .. } => {
            let block = multiplier_matrix(g.nt, g.t_spacing(), sym);
            Ok(DiscreteOperator::new(expand_t_block(g, &block), order, g.bc))
        }
        TAxis::LogHalfLine { .. } => Err(Error::MultiplierNeedsLinearAxis),
    }
}

/// Perturbation menu for the order-`<= 0` terms whose symbol vanishes on the
/// degenerate segment: zero, multiplication by `t`, or `t` composed with a
/// fixed smoothing multiplier in `tau`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AChoice {
    Zero,
    MultiplyByT,
    TTimesSmoother,
}

/// Concrete representative of the chosen perturbation class (`None` for the
/// zero choice).
pub fn a_choice_operator<T: Scalar>(
    g: &GridSpec<T>,
    choice: AChoice,
) -> Result<Option<DiscreteOperator<T>>> {
    match choice {
        AChoice::Zero => Ok(None),
        AChoice::MultiplyByT => Ok(Some(op_mult_t(g))),
        AChoice::TTimesSmoother => {
            let smoother =
                op_t_multiplier(g, -1, |tau| T::one() / (T::one() + tau * tau).sqrt())?;
            Ok(Some(op_mult_t(g).compose(&smoother)?))
        }
    }
}

/// `Lbar = d_x + i a(x) (t d_t + sign * s) + t2 * t^2 d_t`.
pub fn assemble_lbar<T: Scalar>(
    s: T,
    c: &OdeCoefficients<T>,
    g: &GridSpec<T>,
    t2: T,
) -> Result<DiscreteOperator<T>> {
    g.validate()?;
    c.validate()?;
    assemble_field(s, c, g, t2, T::one())
}

/// `L = d_x - i a(x) (t d_t + sign * s) + t2 * t^2 d_t` (real `a`).
pub fn assemble_l<T: Scalar>(
    s: T,
    c: &OdeCoefficients<T>,
    g: &GridSpec<T>,
    t2: T,
) -> Result<DiscreteOperator<T>> {
    g.validate()?;
    c.validate()?;
    assemble_field(s, c, g, t2, -T::one())
}

fn assemble_field<T: Scalar>(
    s: T,
    c: &OdeCoefficients<T>,
    g: &GridSpec<T>,
    t2: T,
    i_sign: T,
) -> Result<DiscreteOperator<T>> {
    let n = g.len();
    let shift = c.sign_s.factor::<T>() * s;
    let tdt_plus_s = op_tdt(g)
        .add(&DiscreteOperator::identity(n, g.bc).scale(cre(shift)))?;
    let ia = op_mult_x(g, &c.a).scale(iu::<T>().scale(i_sign));
    let mut field = op_dx(g).add(&ia.compose(&tdt_plus_s)?)?;
    if t2 != T::zero() {
        let t_op = op_mult_t(g);
        // t^2 d_t: on log axes written as t * (t d_t)
        let t2_dt = match g.t_axis {
            TAxis::Linear { .. } => t_op.compose(&t_op)?.compose(&op_dt(g)?)?,
            TAxis::LogHalfLine { .. } => t_op.compose(&op_tdt(g))?,
        }
        .scale(cre(t2));
        field = field.add(&t2_dt)?;
    }
    Ok(field)
}

/// The composed second-order family
/// `calL_s = Lbar L + (beta1 + A) Lbar + (beta2 + A) L + (beta3 + A)`.
pub fn assemble_call<T: Scalar>(
    s: T,
    c: &OdeCoefficients<T>,
    g: &GridSpec<T>,
    choice: AChoice,
    t2: T,
) -> Result<DiscreteOperator<T>> {
    let lbar = assemble_lbar(s, c, g, t2)?;
    let l = assemble_l(s, c, g, t2)?;
    let a_op = a_choice_operator(g, choice)?;
    let with_a = |beta: &Coefficient<T>| -> Result<DiscreteOperator<T>> {
        let m = op_mult_x(g, beta);
        match &a_op {
            Some(a) => m.add(a),
            None => Ok(m),
        }
    };
    let mut op = lbar.compose(&l)?;
    let b1 = with_a(&c.beta1)?;
    if b1.nnz() > 0 {
        op = op.add(&b1.compose(&lbar)?)?;
    }
    let b2 = with_a(&c.beta2)?;
    if b2.nnz() > 0 {
        op = op.add(&b2.compose(&l)?)?;
    }
    let b3 = with_a(&c.beta3)?;
    if b3.nnz() > 0 {
        op = op.add(&b3)?;
    }
    Ok(op)
}

/// Symbol of the cutoff `Q`: `1` for `tau <= -1`, `0` for `tau >= -1/2`,
/// quintic smoothstep between.
pub fn q_symbol<T: Scalar>(tau: T) -> T {
    T::one() - smoothstep5((tau + T::one()) / T::of(0.5))
}

/// The microlocal cutoff `Q` as an order-0 multiplier in `tau`, elliptic on
/// the negative `tau` ray and vanishing identically for `tau >= -1/2`.
pub fn build_q_cutoff<T: Scalar>(g: &GridSpec<T>) -> Result<DiscreteOperator<T>> {
    op_t_multiplier(g, 0, q_symbol)
}

/// Exact symbol of `Lambda^{-s} [t, Lambda^s] d_t` in the `tau` variable for
/// the multiplier branch `m(tau) = (1 + tau^2)^{1/2}`:
/// `-s tau^2 / (1 + tau^2)`, which equals `-s` plus a symbol of order `-2`.
pub fn lambda_conjugation_symbol<T: Scalar>(s: T, tau: T) -> T {
    -s * tau * tau / (T::one() + tau * tau)
}

/// The order `-2` remainder `symbol + s = s / (1 + tau^2)`.
pub fn lambda_conjugation_remainder<T: Scalar>(s: T, tau: T) -> T {
    s / (T::one() + tau * tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::grid_inner;
    use crate::scalar::cis;

    type C = Cx<f64>;

    fn model_grid_log(nx: usize, nt: usize) -> GridSpec<f64> {
        GridSpec::mellin_box(1.0, 0.25, 1e-3, 10.0, nx, nt).unwrap()
    }

    fn model_grid_linear(nx: usize, nt: usize) -> GridSpec<f64> {
        GridSpec::support_box(1.0, 0.25, nx, nt).unwrap()
    }

    #[test]
    fn coefficient_poly_eval() {
        let p = Coefficient::Poly(vec![1.0, -2.0, 3.0]); // 1 - 2x + 3x^2
        assert_eq!(p.value(2.0), 1.0 - 4.0 + 12.0);
        assert_eq!(p.derivative(2.0), -2.0 + 12.0);
        assert_eq!(Coefficient::Constant(5.0).value(9.0), 5.0);
        assert_eq!(Coefficient::Constant(5.0).derivative(9.0), 0.0);
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::support_box(1.0, 0.25, 4, 32).is_err());
        assert!(GridSpec::mellin_box(1.0, 0.25, -1.0, 10.0, 32, 32).is_err());
        assert!(GridSpec::support_box(1.0, 0.25, 32, 32).is_ok());
    }

    #[test]
    fn lbar_kills_constants() {
        let g = model_grid_log(16, 16);
        let c = OdeCoefficients::model(1.0, 1.0);
        let lbar = assemble_lbar(0.0, &c, &g, 0.0).unwrap();
        let u = vec![C::new(1.0, 0.0); g.len()];
        let v = lbar.apply(&u);
        // interior rows: both d_x and t d_t annihilate constants
        let xs = g.x_nodes();
        for i in 1..g.nx - 1 {
            for j in 0..g.nt {
                let _ = xs[i];
                assert!(v[g.idx(i, j)].norm() < 1e-10, "row ({i},{j})");
            }
        }
    }

    #[test]
    fn lbar_eigenrelation_on_monomials() {
        // u = e^{i xi x} t^k (log-windowed so the spectral t-block sees a
        // decaying sample): Lbar u = (i xi + i a (k + s)) u where the window
        // is flat, up to discretization error.
        let g = model_grid_log(64, 96);
        let c = OdeCoefficients::model(1.0, 1.0);
        let s = 1.5;
        let xi = 2.0;
        let k = 1.25;
        let lbar = assemble_lbar(s, &c, &g, 0.0).unwrap();
        let xs = g.x_nodes();
        let ts = g.t_nodes();
        let (l0, l1) = (1e-3f64.ln(), 10.0f64.ln());
        let span = l1 - l0;
        let window =
            |t: f64| crate::util::plateau_bump(t.ln(), l0, l1, 0.25 * span);
        let u: Vec<C> = (0..g.len())
            .map(|idx| {
                let (i, j) = (idx / g.nt, idx % g.nt);
                cis(xi * xs[i]).scale(ts[j].powf(k) * window(ts[j]))
            })
            .collect();
        let v = lbar.apply(&u);
        let lambda = C::new(0.0, xi + k + s);
        let mut worst: f64 = 0.0;
        for i in 2..g.nx - 2 {
            for j in 0..g.nt {
                // restrict to the flat part of the window
                let lam = ts[j].ln();
                if lam < l0 + 0.3 * span || lam > l1 - 0.3 * span {
                    continue;
                }
                let idx = g.idx(i, j);
                let err = (v[idx] - lambda * u[idx]).norm() / u[idx].norm().max(1e-12);
                worst = worst.max(err);
            }
        }
        assert!(worst < 1e-3, "relative eigen-defect {worst}");
    }

    #[test]
    fn adjoint_defect_is_order_zero() {
        // <Lbar u, v> + <u, L v> stays bounded under refinement for
        // compactly supported grid functions
        let c = OdeCoefficients::model(1.0, 1.0);
        let s = 2.0;
        let mut defects = Vec::new();
        for nt in [32usize, 64] {
            let g = model_grid_linear(2 * nt, nt);
            let lbar = assemble_lbar(s, &c, &g, 0.0).unwrap();
            let l = assemble_l(s, &c, &g, 0.0).unwrap();
            let xs = g.x_nodes();
            let ts = g.t_nodes();
            let bump = |x: f64, t: f64, p: f64| {
                let wx = (1.0 - (x / 1.1).powi(2)).max(0.0).powi(3);
                let wt = (1.0 - (t / 0.24).powi(2)).max(0.0).powi(3);
                wx * wt * (p * x + 2.0 * t).cos()
            };
            let u: Vec<C> = (0..g.len())
                .map(|idx| C::new(bump(xs[idx / g.nt], ts[idx % g.nt], 3.0), 0.0))
                .collect();
            let v: Vec<C> = (0..g.len())
                .map(|idx| C::new(bump(xs[idx / g.nt], ts[idx % g.nt], 5.0), 0.1))
                .collect();
            let nu = crate::operators::grid_norm(&g, &u);
            let nv = crate::operators::grid_norm(&g, &v);
            let pairing = grid_inner(&g, &lbar.apply(&u), &v) + grid_inner(&g, &u, &l.apply(&v));
            defects.push(pairing.norm() / (nu * nv));
        }
        // bounded under refinement: the order-0 residual is i a (1 - 2s),
        // of norm 3 for s = 2
        for d in &defects {
            assert!(*d < 10.0, "defect {d}");
        }
        assert!((defects[0] - defects[1]).abs() < 1.0, "defects {defects:?}");
    }

    #[test]
    fn call_linearity() {
        let g = model_grid_linear(16, 16);
        let c = OdeCoefficients::model(1.0, 1.0);
        let op = assemble_call(1.0, &c, &g, AChoice::MultiplyByT, 0.0).unwrap();
        let u: Vec<C> = (0..g.len()).map(|i| C::new((i as f64).sin(), 0.2)).collect();
        let v: Vec<C> = (0..g.len()).map(|i| C::new(0.5, (i as f64).cos())).collect();
        let sum: Vec<C> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let lhs = op.apply(&sum);
        let rhs: Vec<C> = op.apply(&u).iter().zip(op.apply(&v).iter()).map(|(a, b)| a + b).collect();
        for (a, b) in lhs.iter().zip(rhs.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn q_cutoff_splits_pure_modes() {
        let mut g = model_grid_linear(8, 64);
        g.bc = BoundaryKind::PeriodicT;
        let q = build_q_cutoff(&g).unwrap();
        let ts = g.t_nodes();
        let spacing = g.t_spacing();
        let period = spacing * g.nt as f64;
        // tau0 <= -1: unchanged
        let k_neg = -((period / (2.0 * std::f64::consts::PI)).ceil() as i64) * 2;
        let tau_neg = 2.0 * std::f64::consts::PI * k_neg as f64 / period;
        assert!(tau_neg <= -1.0);
        let u: Vec<C> = (0..g.len()).map(|idx| cis(tau_neg * ts[idx % g.nt])).collect();
        let v = q.apply(&u);
        for (a, b) in u.iter().zip(v.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
        // tau0 >= -1/2 (positive here): annihilated
        let tau_pos = -tau_neg;
        let u: Vec<C> = (0..g.len()).map(|idx| cis(tau_pos * ts[idx % g.nt])).collect();
        let v = q.apply(&u);
        for b in v.iter() {
            assert!(b.norm() < 1e-10);
        }
    }

    #[test]
    fn q_energy_split_matches_parseval() {
        let mut g = model_grid_linear(8, 64);
        g.bc = BoundaryKind::PeriodicT;
        let q = build_q_cutoff(&g).unwrap();
        let ts = g.t_nodes();
        let spacing = g.t_spacing();
        let period = spacing * g.nt as f64;
        // mixed wave packet on one x-slice
        let packet = |t: f64| {
            let mut z = C::new(0.0, 0.0);
            for k in [-20i64, -9, -3, 2, 7] {
                let tau = 2.0 * std::f64::consts::PI * k as f64 / period;
                z += cis(tau * t).scale(1.0 / (1.0 + k.abs() as f64));
            }
            z
        };
        let u: Vec<C> = (0..g.len()).map(|idx| packet(ts[idx % g.nt])).collect();
        let v = q.apply(&u);
        // independent quadrature of q against the power spectrum (per slice)
        let mut spectrum = vec![C::new(0.0, 0.0); g.nt];
        for (j, z) in spectrum.iter_mut().enumerate() {
            *z = packet(ts[j]);
        }
        crate::fourier::dft_forward(&mut spectrum);
        let freqs = crate::fourier::angular_frequencies(g.nt, spacing, false);
        let expect: f64 = spectrum
            .iter()
            .zip(freqs.iter())
            .map(|(z, &tau)| q_symbol(tau).powi(2) * z.norm_sqr())
            .sum::<f64>()
            / g.nt as f64;
        let got: f64 =
            v[..g.nt].iter().map(|z| z.norm_sqr()).sum::<f64>();
        assert!((got - expect).abs() <= 1e-8 * expect.max(1.0), "{got} vs {expect}");
    }

    #[test]
    fn conjugation_symbol_identities() {
        for &s in &[0.0, 1.0, 4.5] {
            assert_eq!(lambda_conjugation_symbol(s, 0.0), 0.0);
            for &tau in &[0.0, 1.0, 10.0, 100.0] {
                let sym = lambda_conjugation_symbol(s, tau);
                let rem = lambda_conjugation_remainder(s, tau);
                assert!((sym + s - rem).abs() <= 1e-15 * (1.0 + s));
            }
        }
        // tau -> infinity limit is -s
        assert!((lambda_conjugation_symbol(2.0, 1e8) + 2.0).abs() < 1e-10);
        // s = 0: identity conjugation, zero symbol
        for &tau in &[0.3, 5.0, 77.0] {
            assert_eq!(lambda_conjugation_symbol(0.0, tau), 0.0);
        }
    }

    #[test]
    fn coo_export_roundtrip() {
        let g = model_grid_linear(8, 8);
        let op = op_dx(&g);
        let mut buf = Vec::new();
        op.export_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), op.nnz());
        let first: Vec<&str> = lines[0].split_whitespace().collect();
        assert_eq!(first.len(), 4);
    }
}
