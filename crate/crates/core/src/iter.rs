//! Solver networks emulating modified Richardson iteration and the
//! Chebyshev-optimal (cg-type) polynomial, plus iteration counts and
//! complexity audits.

use alloc::vec;
use alloc::vec::Vec;

use crate::arith::sparse_matvec_scaled;
use crate::calculus::{affine_net, concat, concat_sparse, identity_net, parallelize, scale_add_net};
use crate::error::{invalid, Error, Result};
use crate::math;
use crate::net::{Layer, LayerBuilder, ReluNetwork};
use crate::sparse::SparsityPattern;

/// Spectral box `[lambda_min, lambda_max]` of a matrix class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralClass {
    lambda_min: f64,
    lambda_max: f64,
}

/// Exponent selecting the convergence factor: `One` for Richardson, `Half`
/// for the Chebyshev polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exponent {
    Half,
    One,
}

impl SpectralClass {
    /// Requires `0 < lambda_min <= lambda_max`, both finite. Equality is the
    /// degenerate case `kappa = 1`.
    pub fn new(lambda_min: f64, lambda_max: f64) -> Result<Self> {
        if !(lambda_min > 0.0) || !lambda_max.is_finite() || lambda_max < lambda_min {
            return Err(invalid("spectral bounds need 0 < lambda_min <= lambda_max < inf"));
        }
        Ok(Self {
            lambda_min,
            lambda_max,
        })
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn kappa(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }

    /// Richardson relaxation `2 / (lambda + Lambda)`.
    pub fn omega(&self) -> f64 {
        2.0 / (self.lambda_min + self.lambda_max)
    }

    pub fn rho(&self, alpha: Exponent) -> f64 {
        rho_alpha(self, alpha)
    }

    pub fn is_degenerate(&self) -> bool {
        self.lambda_min == self.lambda_max
    }
}

/// `(kappa^a - 1) / (kappa^a + 1)`.
pub fn rho_alpha(spec: &SpectralClass, alpha: Exponent) -> f64 {
    let k = match alpha {
        Exponent::One => spec.kappa(),
        Exponent::Half => math::sqrt(spec.kappa()),
    };
    (k - 1.0) / (k + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Richardson,
    ChebyshevCg,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Richardson => "richardson",
            Method::ChebyshevCg => "cg",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub c_sc: f64,
    pub method: Method,
}

impl SolverConfig {
    pub fn new(method: Method, epsilon: f64, c_sc: f64) -> Result<Self> {
        let config = Self {
            epsilon,
            c_sc,
            method,
        };
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid("epsilon must lie in (0, 1)"));
        }
        if !(self.c_sc >= 1.0) || !self.c_sc.is_finite() {
            return Err(invalid("c_sc must be finite and >= 1"));
        }
        Ok(())
    }

    /// Largest admissible right-hand-side scale for this method.
    pub fn c_sc_limit(method: Method, spec: &SpectralClass) -> f64 {
        match method {
            Method::Richardson => (1.0 + spec.kappa()) / 2.0,
            Method::ChebyshevCg => spec.kappa(),
        }
    }

    /// Checks the accuracy range and the admissible `c_sc` range for `spec`.
    pub fn check_against(&self, spec: &SpectralClass) -> Result<()> {
        self.check()?;
        let limit = Self::c_sc_limit(self.method, spec);
        if self.c_sc > limit {
            return Err(invalid(alloc::format!(
                "c_sc = {} exceeds the admissible bound {} for {}",
                self.c_sc,
                limit,
                self.method.name()
            )));
        }
        Ok(())
    }
}

fn check_count_args(eps: f64, c_sc: f64, rho: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("epsilon must lie in (0, 1)"));
    }
    if !(c_sc >= 1.0) || !c_sc.is_finite() {
        return Err(invalid("c_sc must be finite and >= 1"));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(invalid("convergence factor must lie in [0, 1)"));
    }
    Ok(())
}

/// `ceil(|log2(target)| / |log2(rho)|)`, bumped while `rho^m * factor > goal`
/// in floating point.
fn iteration_count(target: f64, rho: f64, factor: f64, goal: f64) -> usize {
    if rho == 0.0 {
        return 1;
    }
    let raw = math::log2(target).abs() / math::log2(rho).abs();
    let mut m = (math::ceil(raw) as usize).max(1);
    while math::powi(rho, m as i32) * factor > goal {
        m += 1;
    }
    m
}

/// Richardson steps so that `rho1^m c_sc <= eps / 2`.
pub fn m_richardson(eps: f64, c_sc: f64, rho1: f64) -> Result<usize> {
    check_count_args(eps, c_sc, rho1)?;
    Ok(iteration_count(eps / (2.0 * c_sc), rho1, c_sc, eps / 2.0))
}

/// Chebyshev degree so that `2 c_sc rho_half^m <= eps / 2`.
pub fn m_cg(eps: f64, c_sc: f64, rho_half: f64) -> Result<usize> {
    check_count_args(eps, c_sc, rho_half)?;
    Ok(iteration_count(eps / (4.0 * c_sc), rho_half, 2.0 * c_sc, eps / 2.0))
}

/// Coefficients of the cg-optimal polynomial in the second-kind Chebyshev
/// basis, normalized by their maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct ChebyshevPlan {
    pub degree: usize,
    /// `x0 = (kappa + 1) / (kappa - 1)`.
    pub sigma0: f64,
    /// `alpha_l / alpha_max` for `l = 0..degree`.
    pub coeffs: Vec<f64>,
    pub log_alpha_max: f64,
    /// Factor turning `sum coeffs_l U_l(B) r_hat` into `q_{m-1}(A_hat) r_hat`.
    pub final_scale: f64,
}

impl ChebyshevPlan {
    /// Plan for a given `x0 >= 1`. The affine map is
    /// `sigma(z) = x0 - (x0 + 1) z`.
    pub fn from_sigma0(m: usize, x0: f64) -> Result<Self> {
        if m == 0 {
            return Err(invalid("Chebyshev degree must be at least 1"));
        }
        if !x0.is_finite() {
            return Err(Error::IllConditionedPlan {
                kappa: (x0 + 1.0) / (x0 - 1.0),
            });
        }
        if !(x0 >= 1.0) {
            return Err(invalid("sigma(0) must be >= 1"));
        }
        let theta = math::acosh(x0);
        // ln alpha_l = ln 2 + ln T_{m-1-l}(x0) for l <= m-2, alpha_{m-1} = 1.
        let log_alpha: Vec<f64> = (0..m)
            .map(|l| {
                if l + 1 == m {
                    0.0
                } else {
                    core::f64::consts::LN_2 + math::ln_cosh((m - 1 - l) as f64 * theta)
                }
            })
            .collect();
        let log_alpha_max = log_alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let coeffs = log_alpha.iter().map(|&a| math::exp(a - log_alpha_max)).collect();
        let log_tm = math::ln_cosh(m as f64 * theta);
        let final_scale = (x0 + 1.0) * math::exp(log_alpha_max - log_tm);
        Ok(Self {
            degree: m,
            sigma0: x0,
            coeffs,
            log_alpha_max,
            final_scale,
        })
    }

    pub fn alpha_max(&self) -> f64 {
        math::exp(self.log_alpha_max)
    }

    /// Denormalized coefficients `alpha_l`.
    pub fn alphas(&self) -> Vec<f64> {
        let a = self.alpha_max();
        self.coeffs.iter().map(|c| c * a).collect()
    }

    /// Slope of `sigma`, `2 kappa / (kappa - 1) = x0 + 1`.
    pub fn slope(&self) -> f64 {
        self.sigma0 + 1.0
    }
}

pub fn cheb_plan(m: usize, spec: &SpectralClass) -> Result<ChebyshevPlan> {
    let kappa = spec.kappa();
    let x0 = (kappa + 1.0) / (kappa - 1.0);
    if !x0.is_finite() {
        return Err(Error::IllConditionedPlan { kappa });
    }
    ChebyshevPlan::from_sigma0(m, x0)
}

/// `T_m(sigma(z)) / T_m(sigma(0))` for `z` in `[1/kappa, 1]`, the residual
/// polynomial of the Chebyshev method.
pub fn chebyshev_residual(m: usize, spec: &SpectralClass, z: f64) -> f64 {
    let kappa = spec.kappa();
    let x0 = (kappa + 1.0) / (kappa - 1.0);
    let x = (x0 - (x0 + 1.0) * z).clamp(-1.0, 1.0);
    let num = math::cos(m as f64 * math::acos(x));
    num * math::exp(-math::ln_cosh(m as f64 * math::acosh(x0)))
}

/// `(A^v, r, c) -> (A^v, A r, r + c)` with the product accurate to `delta`
/// for `||A||_2 <= 1` and `||r||_2 <= z`.
pub fn richardson_step_net(pattern: &SparsityPattern, delta: f64, z: f64) -> Result<ReluNetwork> {
    let eta = pattern.eta();
    let n = pattern.n();
    let matvec = sparse_matvec_scaled(pattern, delta, z, 1.0)?;
    let depth = matvec.depth();
    let carry = identity_net(eta, depth)?;
    let par = parallelize(vec![carry, matvec, scale_add_net(1.0, n)])?;
    let mut picks: Vec<usize> = (0..eta).collect();
    picks.extend(0..eta + n);
    picks.extend(eta..eta + 2 * n);
    concat(par, affine_net(crate::calculus::selection_layer(eta + 2 * n, &picks)))
}

/// Parallel part of a Clenshaw step: `(B^v, b1, b2, r) -> (B^v, 2 B b1, b1, b2, r)`.
fn clenshaw_core(pattern: &SparsityPattern, delta: f64, z: f64) -> Result<ReluNetwork> {
    let eta = pattern.eta();
    let n = pattern.n();
    let matvec = sparse_matvec_scaled(pattern, delta / 2.0, z, 2.0)?;
    let depth = matvec.depth();
    let par = parallelize(vec![
        identity_net(eta, depth)?,
        matvec,
        identity_net(3 * n, depth)?,
    ])?;
    let mut picks: Vec<usize> = (0..eta).collect();
    picks.extend(0..eta + n);
    picks.extend(eta..eta + 3 * n);
    concat(par, affine_net(crate::calculus::selection_layer(eta + 3 * n, &picks)))
}

/// `(B^v, 2 B b1, b1, b2, r) -> (B^v, coeff r + 2 B b1 - b2, b1, r)`.
fn clenshaw_combination(eta: usize, n: usize, coeff: f64) -> Layer {
    let mut b = LayerBuilder::new(eta + 4 * n);
    for p in 0..eta {
        b.push_row([(p, 1.0)], 0.0);
    }
    for i in 0..n {
        b.push_row(
            [(eta + i, 1.0), (eta + 2 * n + i, -1.0), (eta + 3 * n + i, coeff)],
            0.0,
        );
    }
    for i in 0..n {
        b.push_row([(eta + n + i, 1.0)], 0.0);
    }
    for i in 0..n {
        b.push_row([(eta + 3 * n + i, 1.0)], 0.0);
    }
    b.finish()
}

/// `(B^v, b1, b2, r) -> (B^v, coeff r + 2 B b1 - b2, b1, r)` with the
/// product accurate to `delta` for `||B||_2 <= 1` and `||b1||_2 <= z`.
pub fn clenshaw_step_net(
    pattern: &SparsityPattern,
    coeff: f64,
    delta: f64,
    z: f64,
) -> Result<ReluNetwork> {
    let core = clenshaw_core(pattern, delta, z)?;
    concat(
        affine_net(clenshaw_combination(pattern.eta(), pattern.n(), coeff)),
        core,
    )
}

/// Parameters a solver network was built with.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverMeta {
    pub method: Method,
    pub n: usize,
    pub eta: usize,
    pub lambda: f64,
    pub lambda_max: f64,
    pub epsilon: f64,
    pub c_sc: f64,
    pub m: usize,
}

/// A solver network together with the layers at which its iteration state
/// can be read off.
#[derive(Clone, Debug)]
pub struct SolverNetwork {
    pub network: ReluNetwork,
    pub meta: SolverMeta,
    junctions: Vec<usize>,
}

/// Output of an instrumented evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub output: Vec<f64>,
    /// Iteration states after steps `1..` (excluding the final step).
    pub states: Vec<Vec<f64>>,
}

impl SolverNetwork {
    /// Input is `(A^v, r)`.
    pub fn solve(&self, values: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
        let mut input = Vec::with_capacity(values.len() + rhs.len());
        input.extend_from_slice(values);
        input.extend_from_slice(rhs);
        self.network.evaluate(&input)
    }

    /// 1-based hidden layers whose activations are `[ReLU(X); ReLU(-X)]`
    /// for an intermediate state `X`.
    pub fn junction_layers(&self) -> &[usize] {
        &self.junctions
    }

    /// Evaluates and recovers the intermediate states `X` at every junction.
    pub fn trace(&self, values: &[f64], rhs: &[f64]) -> Result<Trace> {
        let mut input = Vec::with_capacity(values.len() + rhs.len());
        input.extend_from_slice(values);
        input.extend_from_slice(rhs);
        let mut states = Vec::with_capacity(self.junctions.len());
        let mut next = 0;
        let output = self.network.evaluate_with(&input, |layer, act| {
            if next < self.junctions.len() && self.junctions[next] == layer {
                let half = act.len() / 2;
                states.push((0..half).map(|i| act[i] - act[half + i]).collect());
                next += 1;
            }
        })?;
        Ok(Trace { output, states })
    }
}

fn check_build(pattern: &SparsityPattern, spec: &SpectralClass, config: &SolverConfig, method: Method) -> Result<()> {
    if config.method != method {
        return Err(invalid("solver configuration is for a different method"));
    }
    config.check_against(spec)?;
    if !pattern.has_diagonal() {
        return Err(Error::InvalidPattern(
            "pattern must contain every diagonal position".into(),
        ));
    }
    Ok(())
}

/// `(A^v, r) -> r / lambda` for the degenerate class `lambda = Lambda`.
fn degenerate_net(pattern: &SparsityPattern, lambda: f64) -> ReluNetwork {
    let eta = pattern.eta();
    let mut b = LayerBuilder::new(eta + pattern.n());
    for i in 0..pattern.n() {
        b.push_row([(eta + i, 1.0 / lambda)], 0.0);
    }
    affine_net(b.finish())
}

/// Affine map from `(A^v, r)` to the blocks in `layout`: the matrix block is
/// `diag_shift I + matrix_scale A`, the rhs block `rhs_scale r`.
fn rescale_layer(
    pattern: &SparsityPattern,
    diag_shift: f64,
    matrix_scale: f64,
    rhs_scale: f64,
    layout: &[Block],
) -> Layer {
    let eta = pattern.eta();
    let n = pattern.n();
    let diag = pattern.diagonal_positions().unwrap_or_default();
    let mut is_diag = vec![false; eta];
    for p in diag {
        is_diag[p] = true;
    }
    let mut b = LayerBuilder::new(eta + n);
    for block in layout {
        match block {
            Block::Matrix => {
                for p in 0..eta {
                    b.push_row([(p, matrix_scale)], if is_diag[p] { diag_shift } else { 0.0 });
                }
            }
            Block::Rhs => {
                for i in 0..n {
                    b.push_row([(eta + i, rhs_scale)], 0.0);
                }
            }
            Block::Zero => {
                for _ in 0..n {
                    b.push_row(core::iter::empty(), 0.0);
                }
            }
        }
    }
    b.finish()
}

enum Block {
    Matrix,
    Rhs,
    Zero,
}

/// Projection onto the `block`-th length-`n` block after the matrix values.
fn projection_layer(eta: usize, n: usize, blocks: usize, block: usize, scale: f64) -> Layer {
    let mut b = LayerBuilder::new(eta + blocks * n);
    for i in 0..n {
        b.push_row([(eta + block * n + i, scale)], 0.0);
    }
    b.finish()
}

/// Chains `steps` copies of a step network by sparse concatenation and
/// returns the 1-based junction layers.
fn chain<F>(steps: usize, mut step: F) -> Result<(ReluNetwork, Vec<usize>)>
where
    F: FnMut(usize) -> Result<ReluNetwork>,
{
    let mut net = step(0)?;
    let mut junctions = Vec::with_capacity(steps.saturating_sub(1));
    for k in 1..steps {
        junctions.push(net.depth());
        net = concat_sparse(step(k)?, net)?;
    }
    Ok((net, junctions))
}

/// Accuracy budget for Richardson steps.
pub fn richardson_delta(eps: f64, m: usize) -> f64 {
    let m = m as f64;
    eps / (2.0 * f64::max(m * m, (m + 1.0) * (m + 2.0) / 2.0))
}

/// Network with `||A^{-1} r - N(A^v, r)||_2 <= eps` for every `A` in the
/// pattern with spectrum in `spec` and `||r||_2 <= c_sc lambda`.
pub fn build_richardson_net(
    pattern: &SparsityPattern,
    spec: &SpectralClass,
    config: &SolverConfig,
) -> Result<SolverNetwork> {
    check_build(pattern, spec, config, Method::Richardson)?;
    let eta = pattern.eta();
    let n = pattern.n();
    let mut meta = SolverMeta {
        method: Method::Richardson,
        n,
        eta,
        lambda: spec.lambda_min(),
        lambda_max: spec.lambda_max(),
        epsilon: config.epsilon,
        c_sc: config.c_sc,
        m: 0,
    };
    if spec.is_degenerate() {
        return Ok(SolverNetwork {
            network: degenerate_net(pattern, spec.lambda_min()),
            meta,
            junctions: Vec::new(),
        });
    }
    let m = m_richardson(config.epsilon, config.c_sc, spec.rho(Exponent::One))?;
    meta.m = m;
    let delta = richardson_delta(config.epsilon, m);
    let z = m as f64 + 3.0;
    let step = richardson_step_net(pattern, delta, z)?;
    let (chained, junctions) = chain(m + 1, |_| Ok(step.clone()))?;
    drop(step);
    let omega = spec.omega();
    let rescale = rescale_layer(pattern, 1.0, -omega, omega, &[Block::Matrix, Block::Rhs, Block::Zero]);
    let net = concat(chained, affine_net(rescale))?;
    let net = concat(affine_net(projection_layer(eta, n, 2, 1, 1.0)), net)?;
    Ok(SolverNetwork {
        network: net,
        meta,
        junctions,
    })
}

/// Accuracy budget for Clenshaw steps.
pub fn cg_delta(eps: f64, m: usize, final_scale: f64) -> f64 {
    let m1 = m as f64 + 1.0;
    eps / (2.0 * m1 * m1) / f64::max(1.0, final_scale.abs())
}

/// Chebyshev-polynomial network with the same accuracy contract as
/// [`build_richardson_net`] for `||r||_2 <= c_sc lambda`, `c_sc <= kappa`.
pub fn build_cg_net(
    pattern: &SparsityPattern,
    spec: &SpectralClass,
    config: &SolverConfig,
) -> Result<SolverNetwork> {
    check_build(pattern, spec, config, Method::ChebyshevCg)?;
    let eta = pattern.eta();
    let n = pattern.n();
    let mut meta = SolverMeta {
        method: Method::ChebyshevCg,
        n,
        eta,
        lambda: spec.lambda_min(),
        lambda_max: spec.lambda_max(),
        epsilon: config.epsilon,
        c_sc: config.c_sc,
        m: 0,
    };
    if spec.is_degenerate() {
        return Ok(SolverNetwork {
            network: degenerate_net(pattern, spec.lambda_min()),
            meta,
            junctions: Vec::new(),
        });
    }
    let m = m_cg(config.epsilon, config.c_sc, spec.rho(Exponent::Half))?;
    meta.m = m;
    let plan = cheb_plan(m, spec)?;
    let delta = cg_delta(config.epsilon, m, plan.final_scale);
    let z = 3.0 * (m * m) as f64;
    let core = clenshaw_core(pattern, delta, z)?;
    // Steps run over k = m-1 down to 0.
    let (chained, junctions) = chain(m, |j| {
        let k = m - 1 - j;
        concat(
            affine_net(clenshaw_combination(eta, n, plan.coeffs[k])),
            core.clone(),
        )
    })?;
    drop(core);
    let lmax = spec.lambda_max();
    let rescale = rescale_layer(
        pattern,
        plan.sigma0,
        -plan.slope() / lmax,
        1.0 / lmax,
        &[Block::Matrix, Block::Zero, Block::Zero, Block::Rhs],
    );
    let net = concat(chained, affine_net(rescale))?;
    let net = concat(affine_net(projection_layer(eta, n, 3, 0, plan.final_scale)), net)?;
    Ok(SolverNetwork {
        network: net,
        meta,
        junctions,
    })
}

/// Dispatches on `config.method`.
pub fn build_solver(
    pattern: &SparsityPattern,
    spec: &SpectralClass,
    config: &SolverConfig,
) -> Result<SolverNetwork> {
    match config.method {
        Method::Richardson => build_richardson_net(pattern, spec, config),
        Method::ChebyshevCg => build_cg_net(pattern, spec, config),
    }
}

/// Measured size of a solver network against the logarithmic size shape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditRecord {
    pub depth: usize,
    pub weights: usize,
    /// `L / [m (log2(1/eps) + log2 n + log2 m)]`.
    pub ratio_depth: f64,
    /// `M / [m (log2(1/eps) + log2 n + log2 m) eta]`.
    pub ratio_weights: f64,
}

pub fn audit_complexity(net: &ReluNetwork, m: usize, eps: f64, n: usize, eta: usize) -> AuditRecord {
    let m = m.max(1) as f64;
    let shape = m * (math::log2(1.0 / eps) + math::log2(n as f64) + math::log2(m));
    let depth = net.depth();
    let weights = net.weight_count();
    AuditRecord {
        depth,
        weights,
        ratio_depth: depth as f64 / shape,
        ratio_weights: weights as f64 / (shape * eta as f64),
    }
}

/// Flags ratios more than 4x the smallest ratio in the sweep; returns
/// `(depth_flag, weight_flag)` per record.
pub fn flag_unstable(records: &[AuditRecord]) -> Vec<(bool, bool)> {
    let min_d = records.iter().map(|r| r.ratio_depth).fold(f64::INFINITY, f64::min);
    let min_w = records.iter().map(|r| r.ratio_weights).fold(f64::INFINITY, f64::min);
    records
        .iter()
        .map(|r| (r.ratio_depth > 4.0 * min_d, r.ratio_weights > 4.0 * min_w))
        .collect()
}
