//! Relaxed joint subproblem at a fixed extraction ratio.
//!
//! For each mismatched class `p` of a link the binaries are the transmission
//! mode `a_p` and, for classes the MBS can supply, `s_p = a_p * b_p`
//! (knowledge uploaded by the device rather than downloaded). With that
//! substitution the delivered information `X`, the air time `Y` and the
//! completion time `T` are all affine in `(a, s)`, and `0 <= s_p <= a_p`
//! is linear.

use crate::joint::SolverMode;
use crate::lp::LinearProgram;
use crate::model::{Link, LinkContext, Scenario, DELAY_SLACK};

use super::{AffineForm, FpError, FractionalLp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinaryVar {
    /// `a_p`: class `p` is sent in semantic mode.
    Mode(usize),
    /// `a_p * b_p`: class `p` is semantic and its knowledge is uploaded by the device.
    Upload(usize),
}

/// Which binaries exist for a link under a solver mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableLayout {
    pub vars: Vec<BinaryVar>,
    mode_var: Vec<Option<usize>>,
    upload_var: Vec<Option<usize>>,
}

impl VariableLayout {
    pub fn new(ctx: &LinkContext, mode: SolverMode) -> Self {
        let n = ctx.num_mismatched();
        let mut layout = VariableLayout { vars: Vec::new(), mode_var: vec![None; n], upload_var: vec![None; n] };
        if mode == SolverMode::NoKnowledgeSharing {
            return layout;
        }
        for (p, class) in ctx.mismatched.iter().enumerate() {
            layout.mode_var[p] = Some(layout.vars.len());
            layout.vars.push(BinaryVar::Mode(p));
            if class.via_mbs && mode == SolverMode::Joint {
                layout.upload_var[p] = Some(layout.vars.len());
                layout.vars.push(BinaryVar::Upload(p));
            }
        }
        layout
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    /// Maps a full binary assignment back to per-class `(a, b)`, with `b`
    /// canonicalized to 1 wherever `a = 0`.
    pub fn decode(&self, values: &[bool]) -> (Vec<bool>, Vec<bool>) {
        let a: Vec<bool> = self.mode_var.iter().map(|v| v.is_some_and(|n| values[n])).collect();
        let b = self
            .upload_var
            .iter()
            .zip(&a)
            .map(|(v, &sem)| match v {
                Some(n) if sem => values[*n],
                _ => true,
            })
            .collect();
        (a, b)
    }
}

/// A node relaxation ready for Dinkelbach, plus the binary index of each LP column.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeProblem {
    pub fp: FractionalLp,
    pub free: Vec<usize>,
    /// Numerator was divided by this (total semantic information of the device).
    pub scale: f64,
}

#[derive(Clone, Copy, Default)]
struct Coef {
    x: f64,
    y: f64,
    t: f64,
}

/// Builds the relaxation at extraction ratio `xi` with some binaries fixed.
/// Returns `Ok(None)` when the fixings are contradictory.
pub fn build_node(
    ctx: &LinkContext,
    layout: &VariableLayout,
    xi: f64,
    fixings: &[Option<bool>],
) -> Result<Option<NodeProblem>, FpError> {
    debug_assert_eq!(fixings.len(), layout.len());
    let rate = ctx.access_rate;
    let eps = ctx.accuracy.accuracy(xi)?;
    let omega = ctx.compute_ratio(xi);
    let f = ctx.compute_speed;
    let scale = ctx.matched_info + ctx.mismatched_demand.iter().map(|d| d.semantic_info).sum::<f64>();
    if !(scale > 0.0) {
        return Err(crate::model::ModelError::Degenerate.into());
    }
    if !omega.is_finite() && ctx.matched_compute > 0.0 {
        return Ok(None);
    }

    // everything in bit mode is the baseline; binaries add deltas to it
    let mut x0 = ctx.matched_info * eps / scale;
    let mut y0 = xi * ctx.matched_source_bits / rate;
    let mut t0 = y0 + if ctx.matched_compute > 0.0 { omega * ctx.matched_compute / f } else { 0.0 };
    let mut coefs = vec![Coef::default(); layout.len()];
    let mut force_zero = vec![false; layout.len()];
    for (p, d) in ctx.mismatched_demand.iter().enumerate() {
        x0 += d.semantic_info / scale;
        y0 += d.source_bits / rate;
        t0 += d.source_bits / rate + d.compute_load / f;
        let Some(av) = layout.mode_var[p] else { continue };
        let knowledge = match (layout.upload_var[p], ctx.backhaul_rate) {
            (Some(_), Some(r0)) => d.knowledge_bits / r0,
            _ => d.knowledge_bits / rate,
        };
        let y = (xi - 1.0) * d.source_bits / rate + knowledge;
        let compute = if omega.is_finite() {
            (omega - 1.0) * d.compute_load / f
        } else {
            force_zero[av] = true;
            0.0
        };
        coefs[av] = Coef { x: (eps - 1.0) * d.semantic_info / scale, y, t: y + compute };
        if let (Some(sv), Some(r0)) = (layout.upload_var[p], ctx.backhaul_rate) {
            let y = d.knowledge_bits / rate - d.knowledge_bits / r0;
            coefs[sv] = Coef { x: 0.0, y, t: y };
        }
    }

    // bounds per binary after fixings and coupling
    let mut bounds: Vec<(f64, f64)> = fixings
        .iter()
        .zip(&force_zero)
        .map(|(fix, &zero)| match fix {
            Some(v) => {
                let v = if *v { 1.0 } else { 0.0 };
                (v, v)
            }
            None if zero => (0.0, 0.0),
            None => (0.0, 1.0),
        })
        .collect();
    for (v, fix) in fixings.iter().enumerate() {
        if *fix == Some(true) && force_zero[v] {
            return Ok(None);
        }
    }
    let mut coupled = Vec::new();
    for p in 0..ctx.num_mismatched() {
        let (Some(av), Some(sv)) = (layout.mode_var[p], layout.upload_var[p]) else { continue };
        match (fixings[av], fixings[sv]) {
            (Some(a), Some(s)) if s && !a => return Ok(None),
            (Some(_), None) => bounds[sv].1 = bounds[sv].1.min(bounds[av].1),
            (None, Some(true)) => bounds[av].0 = 1.0,
            (None, None) => coupled.push((av, sv)),
            _ => {}
        }
    }
    if bounds.iter().any(|(lo, hi)| lo > hi) {
        return Ok(None);
    }

    let y_min = min_denominator(ctx, layout, &coefs, &bounds, y0);
    if !(y_min > 0.0) {
        return Err(FpError::NonPositiveDenominator(y_min));
    }

    let free: Vec<usize> = (0..layout.len()).filter(|&v| fixings[v].is_none()).collect();
    let column = |v: usize| free.iter().position(|&w| w == v);
    let (mut xc, mut yc, mut tc) = (x0, y0, t0);
    for (v, fix) in fixings.iter().enumerate() {
        if let Some(true) = fix {
            xc += coefs[v].x;
            yc += coefs[v].y;
            tc += coefs[v].t;
        }
    }
    let mut rows = vec![free.iter().map(|&v| coefs[v].t).collect::<Vec<_>>()];
    let mut rhs = vec![ctx.t_max + DELAY_SLACK - tc];
    for (av, sv) in coupled {
        let mut row = vec![0.0; free.len()];
        row[column(sv).expect("free")] = 1.0;
        row[column(av).expect("free")] = -1.0;
        rows.push(row);
        rhs.push(0.0);
    }
    let region = LinearProgram::new(vec![0.0; free.len()], rows, rhs, free.iter().map(|&v| bounds[v]).collect())?;
    let fp = FractionalLp::new(
        AffineForm::new(xc, free.iter().map(|&v| coefs[v].x).collect()),
        AffineForm::new(yc, free.iter().map(|&v| coefs[v].y).collect()),
        region,
    )?;
    Ok(Some(NodeProblem { fp, free, scale }))
}

/// Minimum air time over the integral vertices of the coupling polytope
/// (the delay row can only shrink the region).
fn min_denominator(ctx: &LinkContext, layout: &VariableLayout, coefs: &[Coef], bounds: &[(f64, f64)], y0: f64) -> f64 {
    let allowed = |v: usize, val: f64| bounds[v].0 <= val && val <= bounds[v].1;
    let mut total = y0;
    for p in 0..ctx.num_mismatched() {
        let Some(av) = layout.mode_var[p] else { continue };
        let options: &[(f64, f64)] = &[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)];
        let best = options
            .iter()
            .filter(|(a, s)| {
                allowed(av, *a)
                    && match layout.upload_var[p] {
                        Some(sv) => allowed(sv, *s),
                        None => *s == 0.0,
                    }
            })
            .map(|(a, s)| a * coefs[av].y + layout.upload_var[p].map_or(0.0, |sv| s * coefs[sv].y))
            .fold(f64::INFINITY, f64::min);
        total += if best.is_finite() { best } else { 0.0 };
    }
    total
}

/// Relaxation of the joint subproblem for `link` at extraction ratio `xi`,
/// with binaries fixed according to `fixings` (indexed like the mode's
/// [`VariableLayout`]).
pub fn build_fractional_lp(
    scenario: &Scenario,
    link: Link,
    xi: f64,
    mode: SolverMode,
    fixings: &[Option<bool>],
) -> Result<Option<NodeProblem>, FpError> {
    let ctx = LinkContext::new(scenario, link)?;
    let xi_th = ctx.accuracy.min_extraction_ratio(ctx.eps_th)?;
    if xi < xi_th {
        return Err(FpError::BelowAccuracyFloor { xi, xi_th });
    }
    let layout = VariableLayout::new(&ctx, mode);
    if fixings.len() != layout.len() {
        return Err(FpError::FormLength { form: "fixings", expected: layout.len(), got: fixings.len() });
    }
    build_node(&ctx, &layout, xi, fixings)
}
