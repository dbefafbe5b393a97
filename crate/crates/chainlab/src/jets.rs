//! Truncated Taylor-series (jet) arithmetic and flow transport.
//!
//! A [`Jet`] holds coefficients `c_0..c_K` of a scalar time signal at
//! `t = 0`. Arithmetic is exact truncated power-series arithmetic, so for a
//! closed-form observable `g` evaluated on the flow jets of `dx/dt = F(x)`,
//!
//! ```text
//! L_F^k g (x0)  =  k! * c_k( g(x(t)) )
//! ```
//!
//! which is how every iterated Lie derivative in this crate is produced.
//! The flow jets themselves come from the classical recursion
//! `c_{k+1} = [F(jets)]_k / (k+1)`, seeded at the initial state.

/// Truncated Taylor series of a scalar signal; `c[k]` is the k-th
/// coefficient, so the represented order is `c.len() - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    c: Vec<f64>,
}

impl Jet {
    pub fn constant(x: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = x;
        Jet { c }
    }

    /// Seed `x + t` (the identity time-variable), used for directional jets.
    pub fn variable(x: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = x;
        if order >= 1 {
            c[1] = 1.0;
        }
        Jet { c }
    }

    pub fn from_coeffs(c: Vec<f64>) -> Self {
        assert!(!c.is_empty());
        Jet { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.c.get(k).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `k! * c_k`, i.e. the k-th time derivative at `t = 0`.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut f = 1.0;
        for i in 1..=k {
            f *= i as f64;
        }
        f * self.coeff(k)
    }

    pub fn add(&self, other: &Jet) -> Jet {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        debug_assert_eq!(self.c.len(), other.c.len());
        Jet {
            c: self
                .c
                .iter()
                .zip(&other.c)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add_scalar(&mut self, s: f64) {
        self.c[0] += s;
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            c: self.c.iter().map(|&a| a * s).collect(),
        }
    }

    pub fn neg(&self) -> Jet {
        self.scale(-1.0)
    }

    /// Truncated Cauchy product, `O(K^2)`.
    pub fn mul(&self, other: &Jet) -> Jet {
        debug_assert_eq!(self.c.len(), other.c.len());
        let n = self.c.len();
        let mut c = vec![0.0; n];
        for k in 0..n {
            let mut s = 0.0;
            for i in 0..=k {
                s += self.c[i] * other.c[k - i];
            }
            c[k] = s;
        }
        Jet { c }
    }

    /// Integer power by repeated multiplication (exponents here are small:
    /// `gamma_0 = 2N - 1` and the ladder exponents below it).
    pub fn powi(&self, n: usize) -> Jet {
        match n {
            0 => Jet::constant(1.0, self.order()),
            _ => {
                let mut acc = self.clone();
                for _ in 1..n {
                    acc = acc.mul(self);
                }
                acc
            }
        }
    }

    /// Joint sine/cosine of a jet via the standard coupled recurrences
    ///
    /// ```text
    /// s_k =  (1/k) sum_{j=1..k} j u_j c_{k-j}
    /// c_k = -(1/k) sum_{j=1..k} j u_j s_{k-j}
    /// ```
    pub fn sin_cos(&self) -> (Jet, Jet) {
        let n = self.c.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        let (s0, c0) = self.c[0].sin_cos();
        s[0] = s0;
        c[0] = c0;
        for k in 1..n {
            let mut sa = 0.0;
            let mut ca = 0.0;
            for j in 1..=k {
                let ju = j as f64 * self.c[j];
                sa += ju * c[k - j];
                ca += ju * s[k - j];
            }
            s[k] = sa / k as f64;
            c[k] = -ca / k as f64;
        }
        (Jet { c: s }, Jet { c })
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_finite())
    }
}

/// Per-coordinate jets of a phase point: the carrier the observables are
/// evaluated on. Produced either by flow transport ([`propagate`]) or by a
/// directional seed (for momentum derivatives of observables).
///
/// [`propagate`]: crate::chain::propagate
#[derive(Clone, Debug)]
pub struct PhaseJets {
    pub q: Vec<Jet>,
    pub p: Vec<Jet>,
}

impl PhaseJets {
    pub fn order(&self) -> usize {
        self.q[0].order()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().all(Jet::is_finite) && self.p.iter().all(Jet::is_finite)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum JetError {
    /// A coefficient left the finite float range; the requested order is too
    /// high for the energy of the seed state.
    #[error("jet coefficient overflow at order {order}")]
    Overflow { order: usize },
}

use crate::chain::{vector_field_jets, ChainSpec, State};

/// Taylor-transport the flow through `s` to the given order: coefficient
/// `k+1` of each coordinate is `[F(jets)]_k / (k+1)`.
pub fn propagate(spec: &ChainSpec, s: &State, order: usize) -> Result<PhaseJets, JetError> {
    let n = spec.n();
    let mut qc: Vec<Vec<f64>> = s.q.iter().map(|&x| vec![x]).collect();
    let mut pc: Vec<Vec<f64>> = s.p.iter().map(|&x| vec![x]).collect();
    for k in 0..order {
        let jets = PhaseJets {
            q: qc.iter().map(|c| Jet::from_coeffs(c.clone())).collect(),
            p: pc.iter().map(|c| Jet::from_coeffs(c.clone())).collect(),
        };
        let (dq, dp) = vector_field_jets(spec, &jets);
        let div = (k + 1) as f64;
        for i in 0..n {
            let cq = dq[i].coeff(k) / div;
            let cp = dp[i].coeff(k) / div;
            if !cq.is_finite() || !cp.is_finite() {
                return Err(JetError::Overflow { order: k + 1 });
            }
            qc[i].push(cq);
            pc[i].push(cp);
        }
    }
    Ok(PhaseJets {
        q: qc.into_iter().map(Jet::from_coeffs).collect(),
        p: pc.into_iter().map(Jet::from_coeffs).collect(),
    })
}

/// Jets seeded along the `p_j` direction (1-based `j`): the order-2
/// coefficient of an observable on these jets is half its second partial
/// derivative in `p_j`.
pub fn momentum_direction_jets(s: &State, j: usize, order: usize) -> PhaseJets {
    PhaseJets {
        q: s.q.iter().map(|&x| Jet::constant(x, order)).collect(),
        p: s.p
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if i == j - 1 {
                    Jet::variable(x, order)
                } else {
                    Jet::constant(x, order)
                }
            })
            .collect(),
    }
}

/// Exact second partial derivative of a jet-evaluable observable in `p_j`.
pub fn d2_dpj2(
    spec: &ChainSpec,
    s: &State,
    j: usize,
    g: impl Fn(&ChainSpec, &PhaseJets) -> Jet,
) -> f64 {
    let jets = momentum_direction_jets(s, j, 2);
    2.0 * g(spec, &jets).coeff(2)
}

/// Iterated Lie derivatives `L_F^k g(s)` for `k = 0..=kmax`: entry `k` is
/// `k!` times the k-th Taylor coefficient of `g` on the flow jets.
pub fn lie_derivatives(
    spec: &ChainSpec,
    s: &State,
    g: impl Fn(&ChainSpec, &PhaseJets) -> Jet,
    kmax: usize,
) -> Result<Vec<f64>, JetError> {
    let jets = propagate(spec, s, kmax)?;
    let gj = g(spec, &jets);
    if !gj.is_finite() {
        return Err(JetError::Overflow { order: kmax });
    }
    Ok((0..=kmax).map(|k| gj.derivative(k)).collect())
}

/// Result of an order-of-vanishing query. `order = None` means the search
/// stayed below tolerance up to `kmax` (reported as Unresolved; floats can
/// never certify an exact infinite order).
#[derive(Clone, Debug)]
pub struct OrderResult {
    pub order: Option<usize>,
    pub kmax: usize,
    /// The Lie derivative values that were tested.
    pub lie: Vec<f64>,
    /// Per-order absolute tolerances actually used.
    pub tol: Vec<f64>,
    pub overflow: bool,
}

impl OrderResult {
    pub fn unresolved(&self) -> bool {
        self.order.is_none()
    }
}

/// Smallest `k_start <= k <= kmax` with `|L_F^k g| > zero_tol * (1 + |s|^k)`,
/// the relative scale growing with the phase-point norm per order. On
/// coefficient overflow the search falls back to the longest finite prefix.
pub fn order_of_from<G: Fn(&ChainSpec, &PhaseJets) -> Jet>(
    spec: &ChainSpec,
    s: &State,
    g: G,
    k_start: usize,
    kmax: usize,
    zero_tol: f64,
) -> OrderResult {
    assert!(zero_tol > 0.0);
    let norm = s.norm();
    let mut overflow = false;
    let mut kk = kmax;
    let lie = loop {
        let jets_ok = propagate(spec, s, kk).ok().and_then(|jets| {
            let gj = g(spec, &jets);
            gj.is_finite().then(|| (0..=kk).map(|k| gj.derivative(k)).collect::<Vec<_>>())
        });
        match jets_ok {
            Some(v) => break v,
            None if kk == 0 => {
                overflow = true;
                break Vec::new();
            }
            None => {
                overflow = true;
                kk -= 1;
            }
        }
    };
    let mut tol = Vec::with_capacity(lie.len());
    let mut order = None;
    for (k, &v) in lie.iter().enumerate() {
        let t = zero_tol * (1.0 + norm.powi(k as i32));
        tol.push(t);
        if order.is_none() && k >= k_start && v.abs() > t {
            order = Some(k);
        }
    }
    OrderResult {
        order,
        kmax,
        lie,
        tol,
        overflow,
    }
}

/// Order-of-vanishing starting the search at `k = 1` (the form used for the
/// energy, whose own value never vanishes on the states of interest).
pub fn order_of<G: Fn(&ChainSpec, &PhaseJets) -> Jet>(
    spec: &ChainSpec,
    s: &State,
    g: G,
    kmax: usize,
    zero_tol: f64,
) -> OrderResult {
    order_of_from(spec, s, g, 1, kmax, zero_tol)
}
