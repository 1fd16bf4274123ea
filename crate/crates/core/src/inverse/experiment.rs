use super::forward::{InverseContext, SlipParam};
use super::geometry::FaultParam;
use crate::error::Result;
use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    /// ‖F₁ − F₂‖ / max(‖F₁‖, ‖F₂‖).
    pub gap: f64,
    pub norm1: f64,
    pub norm2: f64,
    pub floor: f64,
    pub distinguishable: bool,
}

/// Compares the surface data of two (fault, slip) cases, each on its own
/// conforming mesh, on the common Ξ sampling.
pub fn distinguishability_experiment(
    ctx: &InverseContext,
    case1: (&FaultParam, &SlipParam),
    case2: (&FaultParam, &SlipParam),
    floor: f64,
) -> Result<GapReport> {
    let (d1, d2) = par::join(
        ctx.exec,
        || ctx.realize(case1.0)?.data(case1.1),
        || ctx.realize(case2.0)?.data(case2.1),
    );
    let (d1, d2) = (d1?, d2?);
    let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| a - b).collect();
    let (norm1, norm2) = (n(&d1), n(&d2));
    let scale = norm1.max(norm2);
    let gap = if scale > 0.0 { n(&diff) / scale } else { 0.0 };
    Ok(GapReport { gap, norm1, norm2, floor, distinguishable: gap > floor })
}

/// Two parallel horizontal faults over [0.3, 0.7] (in domain-relative
/// coordinates) separated by 0.1·diam(Ω), carrying the same slip profile.
pub fn default_two_fault_cases(ctx: &InverseContext, p: usize) -> ((FaultParam, SlipParam), (FaultParam, SlipParam)) {
    let dom = &ctx.domain;
    let w = dom.x[1] - dom.x[0];
    let hgt = dom.y[1] - dom.y[0];
    let (a, b) = (dom.x[0] + 0.3 * w, dom.x[0] + 0.7 * w);
    let y1 = dom.y[0] + 0.55 * hgt;
    let y2 = y1 - 0.1 * dom.diameter();
    let m = p / 2;
    let coeffs = (0..p)
        .map(|i| if i < m { 0.01 / (i + 1) as f64 } else { 0.002 / (i - m + 1) as f64 })
        .collect();
    let slip = SlipParam { coeffs };
    ((FaultParam::horizontal(a, b, y1, 5), slip.clone()), (FaultParam::horizontal(a, b, y2, 5), slip))
}
