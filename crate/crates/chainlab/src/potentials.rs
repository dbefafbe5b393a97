//! Closed-form interaction and pinning potentials.
//!
//! Two families are supported, both closed under differentiation to any
//! order (which the Taylor-jet engine relies on):
//!
//! ```text
//! trig part:  c0 + sum_k ( a_k cos(k x) + b_k sin(k x) )     k = 1..K
//! poly part:  sum_d  p_d x^d
//! ```
//!
//! A torus potential carries only the trig part (so it is 2*pi-periodic by
//! construction); a line potential may carry both (oscillator pinning such
//! as `x^2/2 + sin(x)/10` needs the mixed form). Tabulated potentials are
//! rejected at config load.
//!
//! Validation certifies the rotor non-degeneracy floor
//! `min (V')^2 + (V'')^2 > 0` by grid search with local refinement, and
//! classifies oscillator specs as strictly convex or convex at infinity,
//! returning the applicable Lie-derivative order threshold.

use serde::{Deserialize, Serialize};

use crate::jets::Jet;

/// Domain a potential lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    /// Angle variable, `2*pi`-periodic.
    Torus,
    /// Real line.
    Line,
}

/// One closed-form potential: trig polynomial, real polynomial, or their sum.
///
/// `shift` is an additive constant applied at load time (recorded separately
/// so validation reports can state it); it only affects order-0 evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub domain: Domain,
    /// Constant term (before `shift`).
    pub c0: f64,
    /// Cosine coefficients for harmonics `1..=K`.
    pub cos: Vec<f64>,
    /// Sine coefficients for harmonics `1..=K`.
    pub sin: Vec<f64>,
    /// Polynomial coefficients for powers `1..=D` (constant lives in `c0`).
    pub poly: Vec<f64>,
    /// Additive shift applied on top of `c0`, recorded by validation.
    pub shift: f64,
}

impl Potential {
    /// Trig polynomial on the torus: `c0 + sum a_k cos(kx) + b_k sin(kx)`.
    pub fn trig(c0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Potential {
            domain: Domain::Torus,
            c0,
            cos,
            sin,
            poly: Vec::new(),
            shift: 0.0,
        }
    }

    /// `c0 + cos(x)` convenience; `Potential::cosine(2.0)` is the `2 + cos x`
    /// workhorse interaction.
    pub fn cosine(c0: f64) -> Self {
        Potential::trig(c0, vec![1.0], vec![])
    }

    /// Polynomial on the line from full coefficient list `coeffs[d] * x^d`.
    pub fn polynomial(coeffs: &[f64]) -> Self {
        let c0 = coeffs.first().copied().unwrap_or(0.0);
        Potential {
            domain: Domain::Line,
            c0,
            cos: Vec::new(),
            sin: Vec::new(),
            poly: coeffs.iter().skip(1).copied().collect(),
            shift: 0.0,
        }
    }

    /// `x^2/2`, the harmonic reference potential.
    pub fn harmonic() -> Self {
        Potential::polynomial(&[0.0, 0.0, 0.5])
    }

    /// Line potential with both polynomial and trigonometric parts.
    pub fn mixed(coeffs: &[f64], cos: Vec<f64>, sin: Vec<f64>) -> Self {
        let mut p = Potential::polynomial(coeffs);
        p.cos = cos;
        p.sin = sin;
        p
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    /// Exact `order`-th derivative at `x`.
    ///
    /// Harmonic `a cos(kx) + b sin(kx)` differentiates by the coefficient
    /// rotation `(a, b) -> (k b, -k a)`; the polynomial part by falling
    /// factorials. The shift enters order 0 only.
    pub fn eval_deriv(&self, x: f64, order: usize) -> f64 {
        let mut acc = if order == 0 { self.c0 + self.shift } else { 0.0 };
        for (i, (&a0, &b0)) in self.cos.zip_pad(&self.sin).enumerate() {
            let k = (i + 1) as f64;
            let (mut a, mut b) = (a0, b0);
            for _ in 0..order {
                let (na, nb) = (k * b, -k * a);
                a = na;
                b = nb;
            }
            acc += a * (k * x).cos() + b * (k * x).sin();
        }
        for (i, &c) in self.poly.iter().enumerate() {
            let d = i + 1; // power of x
            if d < order {
                continue;
            }
            let mut f = c;
            for m in 0..order {
                f *= (d - m) as f64;
            }
            acc += f * x.powi((d - order) as i32);
        }
        acc
    }

    /// `order`-th derivative evaluated on a jet argument (exact truncated
    /// power-series composition).
    pub fn eval_deriv_jet(&self, u: &Jet, order: usize) -> Jet {
        let mut acc = Jet::constant(
            if order == 0 { self.c0 + self.shift } else { 0.0 },
            u.order(),
        );
        for (i, (&a0, &b0)) in self.cos.zip_pad(&self.sin).enumerate() {
            let k = (i + 1) as f64;
            let (mut a, mut b) = (a0, b0);
            for _ in 0..order {
                let (na, nb) = (k * b, -k * a);
                a = na;
                b = nb;
            }
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let (s, c) = u.scale(k).sin_cos();
            acc = acc.add(&c.scale(a)).add(&s.scale(b));
        }
        if !self.poly.is_empty() {
            // Horner evaluation of the differentiated polynomial.
            let mut coeffs: Vec<f64> = Vec::new();
            for (i, &c) in self.poly.iter().enumerate() {
                let d = i + 1;
                if d < order {
                    continue;
                }
                let mut f = c;
                for m in 0..order {
                    f *= (d - m) as f64;
                }
                let pw = d - order;
                if coeffs.len() <= pw {
                    coeffs.resize(pw + 1, 0.0);
                }
                coeffs[pw] += f;
            }
            if !coeffs.is_empty() {
                let mut h = Jet::constant(*coeffs.last().unwrap(), u.order());
                for &c in coeffs.iter().rev().skip(1) {
                    h = h.mul(u);
                    h.add_scalar(c);
                }
                acc = acc.add(&h);
            }
        }
        acc
    }

    /// Upper bound on `sup |V^(order)|` from coefficient norms
    /// (`sum k^order (|a_k| + |b_k|)` for the trig part). Only meaningful on
    /// the torus; used to instantiate audit constants.
    pub fn sup_deriv_bound(&self, order: usize) -> f64 {
        let mut acc = if order == 0 {
            (self.c0 + self.shift).abs()
        } else {
            0.0
        };
        for (i, (&a, &b)) in self.cos.zip_pad(&self.sin).enumerate() {
            let k = (i + 1) as f64;
            acc += k.powi(order as i32) * (a.abs() + b.abs());
        }
        acc
    }

    pub fn is_torus(&self) -> bool {
        self.domain == Domain::Torus
    }
}

trait ZipPad<'a> {
    fn zip_pad(&'a self, other: &'a [f64]) -> ZipPadIter<'a>;
}

impl<'a> ZipPad<'a> for [f64] {
    fn zip_pad(&'a self, other: &'a [f64]) -> ZipPadIter<'a> {
        ZipPadIter {
            a: self,
            b: other,
            i: 0,
        }
    }
}

struct ZipPadIter<'a> {
    a: &'a [f64],
    b: &'a [f64],
    i: usize,
}

impl<'a> Iterator for ZipPadIter<'a> {
    type Item = (&'a f64, &'a f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.i >= self.a.len() && self.i >= self.b.len() {
            return None;
        }
        static ZERO: f64 = 0.0;
        let a = self.a.get(self.i).unwrap_or(&ZERO);
        let b = self.b.get(self.i).unwrap_or(&ZERO);
        self.i += 1;
        Some((a, b))
    }
}

/// Outcome of a potential validation pass.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub pass: bool,
    /// min over the refined grid of `(V')^2 + (V'')^2`.
    pub nondegeneracy_min: f64,
    /// Location of that minimum.
    pub nondegeneracy_argmin: f64,
    /// min over the refined grid of the (shifted) potential.
    pub value_min: f64,
    /// Shift applied so the shifted potential is >= 1.
    pub applied_shift: f64,
    pub messages: Vec<String>,
}

/// Grid settings for validation sweeps.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridConfig {
    pub points: usize,
    pub floor: f64,
    pub refine_rounds: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            points: 4096,
            floor: 1e-8,
            refine_rounds: 3,
        }
    }
}

fn grid_min<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let mut best = (f(lo), lo);
    for i in 1..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let v = f(x);
        if v < best.0 {
            best = (v, x);
        }
    }
    best
}

/// Minimize `f` on `[lo, hi]` by a coarse grid followed by x4 refinement
/// passes around the running argmin.
pub fn refined_min<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    grid: &GridConfig,
) -> (f64, f64) {
    let (mut val, mut arg) = grid_min(&f, lo, hi, grid.points);
    let mut h = (hi - lo) / grid.points as f64;
    for _ in 0..grid.refine_rounds {
        let (v, a) = grid_min(&f, arg - h, arg + h, 8);
        if v < val {
            val = v;
            arg = a;
        }
        h /= 4.0;
    }
    (val, arg)
}

/// Certify a rotator interaction potential: the non-degeneracy floor
/// `(V')^2 + (V'')^2 > floor` everywhere on the torus, and `V >= 1` after
/// an additive shift (the shift is computed here and recorded).
pub fn validate_rotor_potential(pot: &Potential, grid: &GridConfig) -> ValidationReport {
    let tau = std::f64::consts::TAU;
    let (nd_min, nd_arg) = refined_min(
        |x| {
            let d1 = pot.eval_deriv(x, 1);
            let d2 = pot.eval_deriv(x, 2);
            d1 * d1 + d2 * d2
        },
        0.0,
        tau,
        grid,
    );
    let (v_min, _) = refined_min(|x| pot.eval_deriv(x, 0), 0.0, tau, grid);

    let mut messages = Vec::new();
    let mut pass = true;
    if !pot.is_torus() {
        pass = false;
        messages.push("rotator interaction potential must live on the torus".into());
    }
    if nd_min <= grid.floor {
        pass = false;
        messages.push(format!(
            "non-degeneracy floor violated: min (V')^2+(V'')^2 = {nd_min:.3e} at x = {nd_arg:.6}"
        ));
    }
    let applied_shift = if v_min < 1.0 { 1.0 - v_min } else { 0.0 };
    if applied_shift > 0.0 {
        messages.push(format!(
            "shift +{applied_shift} applied so the potential is >= 1"
        ));
    }
    ValidationReport {
        pass,
        nondegeneracy_min: nd_min,
        nondegeneracy_argmin: nd_arg,
        value_min: v_min + applied_shift,
        applied_shift,
        messages,
    }
}

/// Classification of an oscillator chain's potential family, fixing the
/// applicable Lie-derivative order threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OscClass {
    /// All pinning and interaction potentials strictly convex with minimum
    /// at 0; threshold `r = 4N - 1`.
    StrictlyConvex,
    /// Interactions convex outside a radius `R`, pinning forces escaping to
    /// +-infinity; threshold `r = 3 * 2^{N+1} - 5`.
    GeneralConvexAtInfinity,
}

#[derive(Clone, Debug)]
pub struct OscValidation {
    pub pass: bool,
    pub class: Option<OscClass>,
    /// Applicable order threshold `r`.
    pub r: Option<usize>,
    /// Convexity radius for the general class (0 for strictly convex).
    pub convexity_radius: f64,
    pub messages: Vec<String>,
}

/// Scan box half-width used by the grid checks.
const CLASS_SCAN_BOX: f64 = 12.0;

fn poly_leading(pot: &Potential) -> Option<(usize, f64)> {
    pot.poly
        .iter()
        .enumerate()
        .rev()
        .find(|(_, &c)| c != 0.0)
        .map(|(i, &c)| (i + 1, c))
}

fn strictly_convex_min_at_zero(pot: &Potential, grid: &GridConfig) -> bool {
    if pot.eval_deriv(0.0, 1).abs() > 1e-12 {
        return false;
    }
    let (min_dd, _) = refined_min(
        |x| pot.eval_deriv(x, 2),
        -CLASS_SCAN_BOX,
        CLASS_SCAN_BOX,
        grid,
    );
    if min_dd <= 0.0 {
        return false;
    }
    // Beyond the scan box the polynomial part must keep the convexity.
    match poly_leading(pot) {
        Some((d, c)) => d % 2 == 0 && c > 0.0 && d >= 2,
        None => false,
    }
}

fn convexity_radius(pot: &Potential, grid: &GridConfig) -> Option<f64> {
    match poly_leading(pot) {
        Some((d, c)) if d >= 2 && d % 2 == 0 && c > 0.0 => {}
        _ => return None,
    }
    // Largest |x| in the scan box with V'' <= 0; the leading term keeps
    // V'' > 0 beyond the box (checked at the box edge).
    let n = grid.points;
    let mut radius: f64 = 0.0;
    for i in 0..=n {
        let x = -CLASS_SCAN_BOX + 2.0 * CLASS_SCAN_BOX * i as f64 / n as f64;
        if pot.eval_deriv(x, 2) <= 0.0 {
            radius = radius.max(x.abs());
        }
    }
    if pot.eval_deriv(CLASS_SCAN_BOX, 2) <= 0.0 || pot.eval_deriv(-CLASS_SCAN_BOX, 2) <= 0.0 {
        return None;
    }
    Some(if radius == 0.0 {
        0.0
    } else {
        radius + 2.0 * CLASS_SCAN_BOX / n as f64
    })
}

/// Classify an oscillator chain as strictly convex or convex at infinity
/// and return the applicable order threshold.
pub fn validate_oscillator_potentials(spec: &crate::chain::ChainSpec) -> OscValidation {
    use crate::chain::ChainKind;
    assert_eq!(spec.kind(), ChainKind::Oscillator);
    let grid = GridConfig::default();
    let n = spec.n();
    let mut messages = Vec::new();

    let all = spec.pinnings().iter().chain(spec.interactions());
    if all.clone().all(|p| strictly_convex_min_at_zero(p, &grid)) {
        return OscValidation {
            pass: true,
            class: Some(OscClass::StrictlyConvex),
            r: Some(4 * n - 1),
            convexity_radius: 0.0,
            messages,
        };
    }
    messages.push("not strictly convex with minimum at 0; trying convex-at-infinity".into());

    // V_k'' > 0 for |x| >= R, with (V'')^2 + (V''')^2 > 0 everywhere.
    let mut radius: f64 = 0.0;
    let mut ok = true;
    for (k, v) in spec.interactions().iter().enumerate() {
        match convexity_radius(v, &grid) {
            Some(r) => radius = radius.max(r),
            None => {
                ok = false;
                messages.push(format!("V_{} is not convex at infinity", k + 1));
            }
        }
        let (nd, arg) = refined_min(
            |x| {
                let d2 = v.eval_deriv(x, 2);
                let d3 = v.eval_deriv(x, 3);
                d2 * d2 + d3 * d3
            },
            -CLASS_SCAN_BOX,
            CLASS_SCAN_BOX,
            &grid,
        );
        if nd <= grid.floor {
            ok = false;
            messages.push(format!(
                "V_{}: (V'')^2 + (V''')^2 vanishes near x = {arg:.6}",
                k + 1
            ));
        }
    }
    // U_k' must escape to +-infinity: even-degree positive leading term.
    for (k, u) in spec.pinnings().iter().enumerate() {
        match poly_leading(u) {
            Some((d, c)) if d >= 2 && d % 2 == 0 && c > 0.0 => {}
            _ => {
                ok = false;
                messages.push(format!("U_{}' does not escape to +-infinity", k + 1));
            }
        }
    }
    if ok {
        OscValidation {
            pass: true,
            class: Some(OscClass::GeneralConvexAtInfinity),
            r: Some(3 * (1usize << (n + 1)) - 5),
            convexity_radius: radius,
            messages,
        }
    } else {
        OscValidation {
            pass: false,
            class: None,
            r: None,
            convexity_radius: radius,
            messages,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn eval_deriv_matches_hand_values() {
        let v = Potential::cosine(2.0);
        assert_eq!(v.eval_deriv(0.0, 0), 3.0);
        assert!((v.eval_deriv(FRAC_PI_2, 1) - (-1.0)).abs() < 1e-15);
        let u = Potential::harmonic();
        assert_eq!(u.eval_deriv(3.0, 2), 1.0);
        assert_eq!(u.eval_deriv(3.0, 0), 4.5);
        assert_eq!(u.eval_deriv(3.0, 3), 0.0);
    }

    #[test]
    fn shift_only_touches_order_zero() {
        let v = Potential::cosine(0.0);
        let vs = v.clone().with_shift(2.0);
        for order in 1..=6 {
            for i in 0..32 {
                let x = i as f64 * 0.2 - 3.0;
                assert_eq!(v.eval_deriv(x, order), vs.eval_deriv(x, order));
            }
        }
        assert_eq!(vs.eval_deriv(0.0, 0), v.eval_deriv(0.0, 0) + 2.0);
    }

    #[test]
    fn validate_cosine_passes_without_shift() {
        let v = Potential::cosine(2.0);
        let rep = validate_rotor_potential(&v, &GridConfig::default());
        assert!(rep.pass);
        assert!((rep.nondegeneracy_min - 1.0).abs() < 1e-9);
        assert_eq!(rep.applied_shift, 0.0);
    }

    #[test]
    fn validate_bare_cosine_gets_shift_two() {
        let v = Potential::cosine(0.0);
        let rep = validate_rotor_potential(&v, &GridConfig::default());
        assert!(rep.pass);
        assert!((rep.applied_shift - 2.0).abs() < 1e-9);
        assert!(rep.value_min >= 1.0 - 1e-12);
    }

    #[test]
    fn validate_flags_degenerate_point() {
        // 2 + cos^3 x = 2 + (3 cos x + cos 3x)/4 has V' = V'' = 0 at pi/2.
        let v = Potential::trig(2.0, vec![0.75, 0.0, 0.25], vec![]);
        let rep = validate_rotor_potential(&v, &GridConfig::default());
        assert!(!rep.pass);
        assert!(rep.nondegeneracy_min < 1e-8);
        let d = (rep.nondegeneracy_argmin - FRAC_PI_2)
            .min((rep.nondegeneracy_argmin - 3.0 * FRAC_PI_2).abs());
        assert!(d < 1e-2, "argmin {} not near pi/2", rep.nondegeneracy_argmin);
    }

    #[test]
    fn mixed_potential_derivatives() {
        // x^2/2 + sin(x)/10
        let v = Potential::mixed(&[0.0, 0.0, 0.5], vec![], vec![0.1]);
        let x = 0.7;
        assert!((v.eval_deriv(x, 0) - (x * x / 2.0 + x.sin() / 10.0)).abs() < 1e-15);
        assert!((v.eval_deriv(x, 1) - (x + x.cos() / 10.0)).abs() < 1e-15);
        assert!((v.eval_deriv(x, 2) - (1.0 - x.sin() / 10.0)).abs() < 1e-15);
        assert!((v.eval_deriv(x, 3) - (-x.cos() / 10.0)).abs() < 1e-15);
    }

    #[test]
    fn finite_difference_consistency() {
        let pots = [
            Potential::cosine(2.0),
            Potential::trig(1.0, vec![0.3, -0.2], vec![0.5, 0.0, 0.1]),
            Potential::mixed(&[0.0, 1.0, 0.25, -0.1, 0.05], vec![0.2], vec![-0.3]),
        ];
        let h = 1e-5;
        for pot in &pots {
            for order in 0..=6 {
                for i in 0..100 {
                    let x = -PI + TAU_F * i as f64 / 100.0;
                    let fd =
                        (pot.eval_deriv(x + h, order) - pot.eval_deriv(x - h, order)) / (2.0 * h);
                    let exact = pot.eval_deriv(x, order + 1);
                    let scale = 1.0 + exact.abs();
                    assert!(
                        (fd - exact).abs() / scale < 1e-6,
                        "order {order} x {x}: fd {fd} exact {exact}"
                    );
                }
            }
        }
    }

    const TAU_F: f64 = std::f64::consts::TAU;

    use crate::chain::ChainSpec;

    #[test]
    fn quadratic_chain_is_strictly_convex() {
        let spec =
            ChainSpec::oscillator_uniform(2, Potential::harmonic(), Potential::harmonic())
                .unwrap();
        let v = validate_oscillator_potentials(&spec);
        assert!(v.pass);
        assert_eq!(v.class, Some(OscClass::StrictlyConvex));
        assert_eq!(v.r, Some(7));
        let spec3 =
            ChainSpec::oscillator_uniform(3, Potential::harmonic(), Potential::harmonic())
                .unwrap();
        assert_eq!(validate_oscillator_potentials(&spec3).r, Some(11));
    }

    #[test]
    fn quartic_pinning_with_wavy_interaction_is_general() {
        // U = x^4, V = x^2/2 + sin(x)/10: V'(0) != 0 so not strictly convex
        // with minimum at 0, but V'' = 1 - sin(x)/10 > 0 everywhere.
        let u = Potential::polynomial(&[0.0, 0.0, 0.0, 0.0, 1.0]);
        let v = Potential::mixed(&[0.0, 0.0, 0.5], vec![], vec![0.1]);
        let spec = ChainSpec::oscillator(2, vec![v], vec![u.clone(), u]).unwrap();
        let val = validate_oscillator_potentials(&spec);
        assert!(val.pass, "{:?}", val.messages);
        assert_eq!(val.class, Some(OscClass::GeneralConvexAtInfinity));
        assert_eq!(val.r, Some(19));
    }

    #[test]
    fn linear_interaction_fails_validation() {
        // V = x has V'' == 0 everywhere: neither assumption set certifies.
        let v = Potential::polynomial(&[0.0, 1.0]);
        let spec = ChainSpec::oscillator(
            2,
            vec![v],
            vec![Potential::harmonic(), Potential::harmonic()],
        )
        .unwrap();
        let val = validate_oscillator_potentials(&spec);
        assert!(!val.pass);
        assert!(val.class.is_none());
    }

    #[test]
    fn two_well_pinning_is_general_with_positive_radius() {
        // U = x^4 - x^2 is concave on |x| < 1/sqrt(6).
        let u = Potential::polynomial(&[0.0, 0.0, -1.0, 0.0, 1.0]);
        let spec = ChainSpec::oscillator_uniform(2, u.clone(), Potential::harmonic()).unwrap();
        let val = validate_oscillator_potentials(&spec);
        assert!(val.pass);
        assert_eq!(val.class, Some(OscClass::GeneralConvexAtInfinity));
        // Interactions are harmonic (radius 0); pinning convexity doesn't
        // enter the interaction radius.
        assert_eq!(val.convexity_radius, 0.0);
    }
}
