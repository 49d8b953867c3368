//! Monotone conductivity laws `s -> sigma(s)` and their resolvents.
//!
//! The product graph `m(s) = sigma(s) * s` is the object the solvers
//! invert: for a rate `lambda >= 0` and right-hand magnitude `r >= 0`,
//! `resolve` returns the unique `s >= 0` with `(lambda + sigma(s)) * s = r`,
//! filling jumps of `m` with the maximal-monotone relaxation (the returned
//! effective conductivity is the selection inside the jump interval that
//! makes the relation exact). `lambda = 0` is the stationary inverse used
//! by the quasi-static solver; `lambda = eps/dt` is the implicit-step
//! resolvent used by the full solver.

use crate::error::{Error, Result};
use crate::grid::StaggeredGrid;

const RESOLVE_MAX_ITERS: usize = 200;

/// A monotone conductivity law. Graphs are immutable after construction
/// and cheap to clone.
#[derive(Debug, Clone, PartialEq)]
pub enum ConductivityGraph {
    /// `sigma(s) = s^p`, `p >= 0`.
    PowerLaw { p: f64 },
    /// `sigma = a` for `s <= threshold`, `b` above, `0 < a < b`. The value
    /// at the threshold is the whole interval `[a, b]`.
    Step { a: f64, b: f64, threshold: f64 },
    /// Continuous piecewise-linear interpolation of `(s_i, sigma_i)` knots,
    /// constant below the first and above the last knot.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
    /// Mollification of a base graph: equal to the base outside
    /// `[threshold - 1/m, threshold + 1/m]`, linear inside.
    Smoothed { m: f64, base: Box<ConductivityGraph> },
    /// `sigma(s) = sigma0 >= 0`.
    Constant { sigma: f64 },
}

/// Output of a resolvent solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    /// The magnitude `s = |E|`.
    pub s: f64,
    /// The conductivity selection with `(lambda + sigma_eff) * s = r`.
    pub sigma_eff: f64,
}

impl ConductivityGraph {
    pub fn step(a: f64, b: f64) -> Self {
        Self::Step { a, b, threshold: 1.0 }
    }

    /// Structural validation of the graph parameters.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::PowerLaw { p } => {
                if !(*p >= 0.0) || !p.is_finite() {
                    return Err(Error::Parameter(format!("power-law exponent p must be >= 0, got {p}")));
                }
            }
            Self::Step { a, b, threshold } => {
                if !(*a > 0.0 && b > a) {
                    return Err(Error::Parameter(format!(
                        "step graph needs 0 < a < b, got a = {a}, b = {b}"
                    )));
                }
                if !(*threshold > 0.0) {
                    return Err(Error::Parameter(format!("step threshold must be > 0, got {threshold}")));
                }
            }
            Self::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return Err(Error::Parameter("piecewise-linear graph needs at least one knot".into()));
                }
                for w in knots.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(Error::Parameter("piecewise-linear abscissae must be strictly increasing".into()));
                    }
                    if w[1].1 < w[0].1 {
                        return Err(Error::Parameter("piecewise-linear ordinates must be non-decreasing".into()));
                    }
                }
                if knots.iter().any(|k| k.1 < 0.0 || k.0 < 0.0) {
                    return Err(Error::Parameter("piecewise-linear knots must be non-negative".into()));
                }
            }
            Self::Smoothed { m, base } => {
                if !(*m >= 1.0) {
                    return Err(Error::Parameter(format!("mollification index m must be >= 1, got {m}")));
                }
                base.validate()?;
            }
            Self::Constant { sigma } => {
                if !(*sigma >= 0.0) || !sigma.is_finite() {
                    return Err(Error::Parameter(format!("constant conductivity must be >= 0, got {sigma}")));
                }
            }
        }
        Ok(())
    }

    /// The set value of the graph at `s`: a degenerate interval at
    /// continuity points, the full jump interval at a jump.
    pub fn sigma_eval(&self, s: f64) -> Result<(f64, f64)> {
        if !(s >= 0.0) {
            return Err(Error::Parameter(format!("magnitude must be >= 0, got {s}")));
        }
        Ok(match self {
            Self::PowerLaw { p } => {
                let v = if *p == 0.0 { 1.0 } else { s.powf(*p) };
                (v, v)
            }
            Self::Step { a, b, threshold } => {
                if s < *threshold {
                    (*a, *a)
                } else if s > *threshold {
                    (*b, *b)
                } else {
                    (*a, *b)
                }
            }
            Self::PiecewiseLinear { knots } => {
                let v = pl_eval(knots, s);
                (v, v)
            }
            Self::Smoothed { m, base } => {
                let v = smoothed_eval(*m, base, s);
                (v, v)
            }
            Self::Constant { sigma } => (*sigma, *sigma),
        })
    }

    /// Single-valued representative (midpoint at a jump).
    pub fn sigma_mid(&self, s: f64) -> f64 {
        let (lo, hi) = self.sigma_eval(s).expect("s >= 0");
        0.5 * (lo + hi)
    }

    /// Growth exponent of the coercivity envelope for this graph shape.
    pub fn growth_exponent(&self) -> f64 {
        match self {
            Self::PowerLaw { p } => *p,
            Self::Smoothed { base, .. } => base.growth_exponent(),
            _ => 0.0,
        }
    }

    /// Checks that the stationary (`lambda = 0`) resolvent is well defined:
    /// `m(s) = sigma(s) s` must be strictly increasing away from jumps and
    /// unbounded. Fails for graphs with `sigma = 0` on an interval, the
    /// regime where uniqueness of the weak solution is lost.
    pub fn stationary_ok(&self) -> Result<()> {
        match self {
            Self::PowerLaw { .. } => Ok(()),
            Self::Step { .. } => Ok(()), // validated 0 < a < b
            Self::Constant { sigma } => {
                if *sigma > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Degenerate(
                        "sigma = 0: the stationary product graph is not invertible and the weak solution is non-unique".into(),
                    ))
                }
            }
            Self::PiecewiseLinear { knots } => {
                // sigma must be positive for every s > 0, i.e. it may vanish
                // only at s = 0.
                let zero_at_positive = knots
                    .iter()
                    .any(|&(s, sig)| s > 0.0 && sig == 0.0)
                    || knots[0].1 == 0.0 && knots[0].0 > 0.0;
                if zero_at_positive || (knots.len() == 1 && knots[0].1 == 0.0) {
                    Err(Error::Degenerate(
                        "sigma vanishes on an interval of s > 0: stationary resolvent undefined (non-uniqueness regime)".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            Self::Smoothed { base, .. } => base.stationary_ok(),
        }
    }

    /// Solve `(lambda + sigma(s)) * s = r` for `s >= 0`.
    pub fn resolve(&self, lambda: f64, r: f64) -> Result<Resolved> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Parameter(format!("rate must be >= 0 and finite, got {lambda}")));
        }
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::Parameter(format!("magnitude must be >= 0 and finite, got {r}")));
        }
        if lambda == 0.0 {
            self.stationary_ok()?;
        }
        if r == 0.0 {
            return Ok(Resolved { s: 0.0, sigma_eff: self.sigma_eval(0.0)?.0 });
        }
        match self {
            Self::Constant { sigma } => {
                let denom = lambda + sigma;
                Ok(Resolved { s: r / denom, sigma_eff: *sigma })
            }
            Self::PowerLaw { p } => {
                let pw = |s: f64| if *p == 0.0 { 1.0 } else { s.powf(*p) };
                if lambda == 0.0 {
                    let s = r.powf(1.0 / (p + 1.0));
                    return Ok(Resolved { s, sigma_eff: pw(s) });
                }
                // Newton on the convex map s -> lambda s + s^{p+1} - r from
                // an upper bound of the root: monotone decrease, quadratic
                // convergence, no bracketing needed.
                let mut s = (r / lambda).min(r.powf(1.0 / (p + 1.0)));
                let tol = 1e-13 * r.max(1.0);
                let mut converged = false;
                for _ in 0..100 {
                    let f = (lambda + pw(s)) * s - r;
                    if f.abs() <= tol {
                        converged = true;
                        break;
                    }
                    s -= f / (lambda + (p + 1.0) * pw(s));
                }
                if !converged {
                    let f = |s: f64| (lambda + pw(s)) * s;
                    s = monotone_root(f, r, r.powf(1.0 / (p + 1.0)).max(r / lambda))?;
                }
                Ok(Resolved { s, sigma_eff: pw(s) })
            }
            Self::Step { a, b, threshold } => {
                let s_star = *threshold;
                let low_cap = (lambda + a) * s_star;
                let high_cap = (lambda + b) * s_star;
                if r <= low_cap {
                    Ok(Resolved { s: r / (lambda + a), sigma_eff: *a })
                } else if r >= high_cap {
                    Ok(Resolved { s: r / (lambda + b), sigma_eff: *b })
                } else {
                    // Inside the jump: s is pinned at the threshold and the
                    // selection makes the relation exact.
                    Ok(Resolved { s: s_star, sigma_eff: r / s_star - lambda })
                }
            }
            Self::PiecewiseLinear { .. } | Self::Smoothed { .. } => {
                let f = |s: f64| (lambda + self.sigma_eval(s).map(|(lo, hi)| 0.5 * (lo + hi)).unwrap_or(f64::NAN)) * s;
                let guess = if lambda > 0.0 { r / lambda } else { 1.0 };
                let s = monotone_root(f, r, guess.min(1e6).max(1.0))?;
                let sigma_eff = r / s - lambda;
                Ok(Resolved { s, sigma_eff })
            }
        }
    }

    /// Electric resistivity `rho = 1/sigma_eff` of the stationary resolvent
    /// at magnitude `max(r, floor)`. The floor regularizes degenerate laws
    /// (a pure power law has unbounded resistivity as `r -> 0`).
    pub fn resistivity(&self, r: f64, floor: f64) -> Result<f64> {
        if !(floor > 0.0) {
            return Err(Error::Parameter(format!("resistivity floor must be > 0, got {floor}")));
        }
        let res = self.resolve(0.0, r.max(floor))?;
        Ok(1.0 / res.sigma_eff)
    }

    /// Mollify a jump graph: continuous, monotone, equal to the base
    /// outside a `1/m` neighborhood of the jump.
    pub fn smooth(&self, m: f64) -> Result<ConductivityGraph> {
        if !(m >= 1.0) {
            return Err(Error::Parameter(format!("mollification index must be >= 1, got {m}")));
        }
        match self {
            Self::Smoothed { .. } => Err(Error::Unsupported(
                "cannot mollify an already mollified graph".into(),
            )),
            g => Ok(Self::Smoothed { m, base: Box::new(g.clone()) }),
        }
    }

    /// Numerically verifies the two-sided growth envelope on `[0, s_max]`.
    pub fn validate_growth(&self, req: &GrowthRequest) -> Result<GrowthReport> {
        req.check()?;
        let n = req.n_samples;
        let mut lower_ok = true;
        let mut upper_ok = true;
        let mut monotone_ok = true;
        let mut prev_sigma = f64::NEG_INFINITY;
        let mut integral = 0.0f64; // int_0^s 2 v sigma(v) dv, accumulated
        let mut s_prev = 0.0f64;
        for j in 0..=n {
            let s = req.s_max * j as f64 / n as f64;
            let sig = self.sigma_mid(s);
            if sig < prev_sigma - 1e-12 * (1.0 + prev_sigma.abs()) {
                monotone_ok = false;
            }
            prev_sigma = sig;
            if sig > req.b0 * (1.0 + if req.p == 0.0 { 1.0 } else { s.powf(req.p) })
                + 1e-9 * (1.0 + sig.abs())
            {
                upper_ok = false;
            }
            if j > 0 {
                integral += adaptive_integral(
                    |v| 2.0 * v * self.sigma_mid(v),
                    s_prev,
                    s,
                    1e-8,
                    &self.breakpoints(),
                );
                s_prev = s;
                if s >= req.m0 {
                    let bound = req.a0 * s.powf(req.p + 2.0) - req.a1;
                    // Slack covers the quadrature tolerance when the bound
                    // is attained with equality (pure power laws).
                    if integral < bound - 1e-6 * (1.0 + bound.abs()) {
                        lower_ok = false;
                    }
                }
            }
        }
        Ok(GrowthReport {
            s_max: req.s_max,
            n_samples: n,
            p: req.p,
            a0: req.a0,
            a1: req.a1,
            b0: req.b0,
            m0: req.m0,
            lower_ok,
            upper_ok,
            monotone_ok,
        })
    }

    /// Magnitude of the jump of the law, if it has one (the mollified
    /// variant reports its base's jump).
    pub fn jump_threshold(&self) -> Option<f64> {
        match self {
            Self::Step { threshold, .. } => Some(*threshold),
            Self::Smoothed { base, .. } => base.jump_threshold(),
            _ => None,
        }
    }

    /// Abscissae where the law is not smooth; quadrature splits on these.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Step { threshold, .. } => vec![*threshold],
            Self::PiecewiseLinear { knots } => knots.iter().map(|k| k.0).collect(),
            Self::Smoothed { m, base } => match base.as_ref() {
                Self::Step { threshold, .. } => {
                    vec![(threshold - 1.0 / m).max(0.0), threshold + 1.0 / m]
                }
                b => b.breakpoints(),
            },
            _ => Vec::new(),
        }
    }
}

fn pl_eval(knots: &[(f64, f64)], s: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if s <= first.0 {
        return first.1;
    }
    if s >= last.0 {
        return last.1;
    }
    // Knot lists are short; linear scan beats the binary-search setup.
    for w in knots.windows(2) {
        if s <= w[1].0 {
            let t = (s - w[0].0) / (w[1].0 - w[0].0);
            return w[0].1 + t * (w[1].1 - w[0].1);
        }
    }
    last.1
}

fn smoothed_eval(m: f64, base: &ConductivityGraph, s: f64) -> f64 {
    match base {
        ConductivityGraph::Step { a, b, threshold } => {
            let lo = (threshold - 1.0 / m).max(0.0);
            let hi = threshold + 1.0 / m;
            if s <= lo {
                *a
            } else if s >= hi {
                *b
            } else {
                a + (b - a) * (s - lo) / (hi - lo)
            }
        }
        // Continuous base: mollification is the identity.
        g => g.sigma_mid(s),
    }
}

/// Bracketing bisection for the monotone map `f`, solving `f(s) = r`.
/// The initial bracket grows geometrically from `guess` until it encloses
/// the root; failure to bracket within the iteration cap is a degeneracy
/// (bounded product graph), failure to converge a convergence error.
fn monotone_root(f: impl Fn(f64) -> f64, r: f64, guess: f64) -> Result<f64> {
    let mut hi = guess.max(f64::MIN_POSITIVE);
    let mut grow = 0;
    while f(hi) < r {
        hi *= 2.0;
        grow += 1;
        if grow > RESOLVE_MAX_ITERS || !hi.is_finite() {
            return Err(Error::Degenerate(format!(
                "product graph stays below r = {r}; resolvent has no solution"
            )));
        }
    }
    let mut lo = 0.0f64;
    let tol = 1e-14 * r.max(1.0);
    for _ in 0..RESOLVE_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if (v - r).abs() <= tol {
            return Ok(mid);
        }
        if v < r {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    let s = 0.5 * (lo + hi);
    // Bisection exhausts the f64 spacing long before the iteration cap;
    // accept if the residual meets the contract, else report.
    if (f(s) - r).abs() <= 1e-12 * r.max(1.0) {
        Ok(s)
    } else {
        Err(Error::Convergence(format!(
            "bisection residual {} at s = {s} exceeds tolerance",
            f(s) - r
        )))
    }
}

/// Adaptive Simpson quadrature split on the integrand's breakpoints.
fn adaptive_integral(
    f: impl Fn(f64) -> f64 + Copy,
    a: f64,
    b: f64,
    rel_tol: f64,
    breaks: &[f64],
) -> f64 {
    let mut pts: Vec<f64> = vec![a];
    for &p in breaks {
        if p > a && p < b {
            pts.push(p);
        }
    }
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += adaptive_simpson(f, w[0], w[1], rel_tol, 30);
    }
    total
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive_simpson(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let whole = simpson(f, a, b);
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    let refined = left + right;
    if depth == 0 || (refined - whole).abs() <= tol * (refined.abs() + 1e-30) * 15.0 {
        refined + (refined - whole) / 15.0
    } else {
        adaptive_simpson(f, a, m, tol, depth - 1) + adaptive_simpson(f, m, b, tol, depth - 1)
    }
}

/// Parameters for a growth-envelope check.
#[derive(Debug, Clone, Copy)]
pub struct GrowthRequest {
    pub p: f64,
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub m0: f64,
    pub s_max: f64,
    pub n_samples: usize,
}

impl GrowthRequest {
    fn check(&self) -> Result<()> {
        if !(self.a0 > 0.0 && self.a1 >= 0.0 && self.b0 >= 0.0 && self.p >= 0.0) {
            return Err(Error::Parameter("growth constants need a0 > 0, a1 >= 0, b0 >= 0, p >= 0".into()));
        }
        if !(self.s_max > self.m0 && self.m0 >= 0.0) {
            return Err(Error::Parameter("growth check needs s_max > m0 >= 0".into()));
        }
        if self.n_samples < 10 {
            return Err(Error::Parameter("growth check needs at least 10 samples".into()));
        }
        Ok(())
    }
}

/// Outcome of a growth check; failures are reported, never thrown.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct GrowthReport {
    pub s_max: f64,
    pub n_samples: usize,
    pub p: f64,
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub m0: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub monotone_ok: bool,
}

impl GrowthReport {
    pub fn pass(&self) -> bool {
        self.lower_ok && self.upper_ok && self.monotone_ok
    }
}

/// Spatial conductivity: one or two graphs selected by a per-E-sample
/// material index. Covers measurable-in-x dependence at the level the
/// experiments need.
#[derive(Debug, Clone, PartialEq)]
pub struct Medium {
    graphs: Vec<ConductivityGraph>,
    index: Option<Vec<u8>>,
}

impl Medium {
    pub fn uniform(graph: ConductivityGraph) -> Result<Self> {
        graph.validate()?;
        Ok(Self { graphs: vec![graph], index: None })
    }

    pub fn two_phase(
        grid: &StaggeredGrid,
        primary: ConductivityGraph,
        secondary: ConductivityGraph,
        index: Vec<u8>,
    ) -> Result<Self> {
        primary.validate()?;
        secondary.validate()?;
        if index.len() != grid.e_len() {
            return Err(Error::Shape(format!(
                "material index has {} entries, grid has {} electric samples",
                index.len(),
                grid.e_len()
            )));
        }
        if index.iter().any(|&i| i > 1) {
            return Err(Error::Parameter("material index entries must be 0 or 1".into()));
        }
        Ok(Self { graphs: vec![primary, secondary], index: Some(index) })
    }

    /// Index into `graphs()` of the law governing electric sample `e_idx`.
    pub fn slot_at(&self, e_idx: usize) -> usize {
        match &self.index {
            None => 0,
            Some(idx) => idx[e_idx] as usize,
        }
    }

    pub fn graph_at(&self, e_idx: usize) -> &ConductivityGraph {
        match &self.index {
            None => &self.graphs[0],
            Some(idx) => &self.graphs[idx[e_idx] as usize],
        }
    }

    pub fn primary(&self) -> &ConductivityGraph {
        &self.graphs[0]
    }

    pub fn graphs(&self) -> &[ConductivityGraph] {
        &self.graphs
    }

    pub fn stationary_ok(&self) -> Result<()> {
        for g in &self.graphs {
            g.stationary_ok()?;
        }
        Ok(())
    }

    pub fn growth_exponent(&self) -> f64 {
        self.graphs
            .iter()
            .map(|g| g.growth_exponent())
            .fold(0.0, f64::max)
    }
}
