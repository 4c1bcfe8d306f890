//! Closed-form bond-dimension and error bounds.
//!
//! Hidden `O(·)` constants are explicit inputs defaulting to 1, so every
//! bond-dimension value here is a scaling estimate, not a guarantee. `O(x)` is
//! read as `C·x` with the matching user constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCALING_LABEL: &str = "scaling estimate, constants user-supplied";

/// Every symbol the bound formulas consume. Missing JSON fields take the
/// [`Default`] value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundInputs {
    pub beta: f64,
    pub t: f64,
    pub k: f64,
    pub xi: f64,
    pub eps: f64,
    pub d: f64,
    pub gamma: f64,
    pub z: f64,
    pub h: f64,
    #[serde(rename = "K")]
    pub big_k: f64,
    #[serde(rename = "N")]
    pub n: f64,
    /// Polynomial-decay constant; replaces `ξ^d` when present.
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub v_lr: f64,
    pub c: f64,
    #[serde(rename = "C")]
    pub big_c: f64,
    #[serde(rename = "C_prime")]
    pub big_c_prime: f64,
    pub c1: f64,
    pub c2: f64,
    /// Distance for the Lieb-Robinson tail.
    pub l: f64,
    pub norm_a: f64,
    /// Cluster size cut-off.
    #[serde(rename = "L")]
    pub big_l: f64,
    /// Squaring parameter.
    #[serde(rename = "M")]
    pub m: f64,
}

impl Default for BoundInputs {
    fn default() -> Self {
        BoundInputs {
            beta: 0.1,
            t: 1.0,
            k: 2.0,
            xi: 1.0,
            eps: 0.1,
            d: 1.0,
            gamma: 2.0,
            z: 2.0,
            h: 1.0,
            big_k: 1.0,
            n: 1.0,
            r: None,
            v_lr: 1.0,
            c: 1.0,
            big_c: 1.0,
            big_c_prime: 1.0,
            c1: 1.0,
            c2: 1.0,
            l: 1.0,
            norm_a: 1.0,
            big_l: 1.0,
            m: 1.0,
        }
    }
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::invalid("eps", format!("must lie in (0, 1), got {}", self.eps)));
        }
        let positive = [
            ("gamma", self.gamma),
            ("h", self.h),
            ("z", self.z),
            ("d", self.d),
            ("xi", self.xi),
            ("C", self.big_c),
            ("C_prime", self.big_c_prime),
            ("c1", self.c1),
            ("c2", self.c2),
            ("M", self.m),
            ("L", self.big_l),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        let nonneg = [
            ("beta", self.beta),
            ("k", self.k),
            ("K", self.big_k),
            ("N", self.n),
            ("v_lr", self.v_lr),
            ("c", self.c),
            ("l", self.l),
            ("norm_a", self.norm_a),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("must be ≥ 0 and finite, got {v}")));
            }
        }
        if !self.t.is_finite() {
            return Err(Error::invalid("t", "must be finite"));
        }
        if let Some(r) = self.r {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::invalid("R", format!("must be positive, got {r}")));
            }
        }
        Ok(())
    }

    /// `ξ^d`, or `R` in the polynomial-decay case.
    fn decay_scale(&self) -> f64 {
        self.r.unwrap_or_else(|| self.xi.powf(self.d))
    }
}

/// `log((1 + sqrt(1 + 4/γ))/2) / 2h`.
pub fn beta_star(gamma: f64, h: f64) -> f64 {
    ((1.0 + (1.0 + 4.0 / gamma).sqrt()) / 2.0).ln() / (2.0 * h)
}

/// Root of `γ e^{(2z−1)βh}(e^{βh} − 1) = 1`, the `x < 1` edge of the cluster
/// expansion.
pub fn beta_star_cluster(gamma: f64, z: f64, h: f64) -> f64 {
    let f = |b: f64| cluster_x(b, gamma, z, h) - 1.0;
    let mut hi = 1.0 / h;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `|1 / log[γ e^{2βh}(e^{2βh} − 1)]|`.
pub fn xi_of_beta(beta: f64, gamma: f64, h: f64) -> f64 {
    let a = 2.0 * beta * h;
    (1.0 / (gamma * a.exp() * a.exp_m1()).ln()).abs()
}

/// `γ e^{(2z−1)βh}(e^{βh} − 1)`.
pub fn cluster_x(beta: f64, gamma: f64, z: f64, h: f64) -> f64 {
    gamma * ((2.0 * z - 1.0) * beta * h).exp() * (beta * h).exp_m1()
}

/// Distance from `printed` in units of its fourth significant digit.
/// A value at most 1 agrees with a four-digit printed figure.
pub fn printed_gap(got: f64, printed: f64) -> f64 {
    let unit = 10f64.powf(printed.abs().log10().floor() - 3.0);
    (got - printed).abs() / unit
}

/// `exp(K x^L/(1 − x)) − 1`; infinite when `x ≥ 1`.
pub fn cluster_error_bound(big_k: f64, big_l: f64, x: f64) -> f64 {
    if x >= 1.0 {
        return f64::INFINITY;
    }
    (big_k * x.powf(big_l) / (1.0 - x)).exp_m1()
}

/// `C ((k+ξ)/ε) exp[c1 max{β, sqrt(β ln((k+ξ)/ε²))}]`.
pub fn thermal_bond_1d(b: &BoundInputs) -> Result<f64> {
    b.validate()?;
    let s = b.k + b.decay_scale();
    let inner = (b.beta * (s / (b.eps * b.eps)).ln()).max(0.0).sqrt();
    Ok(b.big_c * (s / b.eps) * (b.c1 * b.beta.max(inner)).exp())
}

/// `(C′ β d max{k^d/ε², d^{2d} ξ^{d²}/ε^{d+1}})^{c1 β d}`.
pub fn thermal_bond_hd(b: &BoundInputs) -> Result<f64> {
    b.validate()?;
    let d = b.d;
    let spread = match b.r {
        Some(r) => r.powf(d),
        None => b.xi.powf(d * d),
    };
    let m = (b.k.powf(d) / (b.eps * b.eps)).max(d.powf(2.0 * d) * spread / b.eps.powf(d + 1.0));
    Ok((b.big_c_prime * b.beta * d * m).powf(b.c1 * b.beta * d))
}

/// `e^{c1|t|} ((k + v t + ln 1/ε)/ε)^{c2}`.
pub fn time_bond_1d(b: &BoundInputs) -> Result<f64> {
    b.validate()?;
    let cone = b.k + b.v_lr * b.t.abs() + (1.0 / b.eps).ln();
    Ok((b.c1 * b.t.abs()).exp() * (cone / b.eps).powf(b.c2))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondmapBond {
    /// Single Pauli-string input.
    pub pauli: f64,
    /// Arbitrary input on `k` sites, with `ε → 4^{−k} ε`.
    pub arbitrary: f64,
}

/// `(C d|t|(k + vt + ln 1/ε)/ε)^{c1|t|d}` and the `4^k` variant
/// `(C d|t| 4^k (vt + k(1 + ln(4/ε)))/ε)^{c1|t|d}`.
pub fn condmap_bond(b: &BoundInputs) -> Result<CondmapBond> {
    b.validate()?;
    let (t, d) = (b.t.abs(), b.d);
    let expo = b.c1 * t * d;
    let pauli = (b.big_c * d * t * (b.k + b.v_lr * t + (1.0 / b.eps).ln()) / b.eps).powf(expo);
    let arbitrary = (b.big_c * d * t * 4f64.powf(b.k) * (b.v_lr * t + b.k * (1.0 + (4.0 / b.eps).ln()))
        / b.eps)
        .powf(expo);
    Ok(CondmapBond { pauli, arbitrary })
}

/// `‖A‖ c l^{d−1} e^{v t − l}`.
pub fn lr_bound(b: &BoundInputs) -> Result<f64> {
    b.validate()?;
    Ok(b.norm_a * b.c * b.l.powf(b.d - 1.0) * (b.v_lr * b.t - b.l).exp())
}

/// `min{time_bond_1d, e^{k/ε}}`.
pub fn quench_bound(b: &BoundInputs) -> Result<f64> {
    Ok(time_bond_1d(b)?.min((b.k / b.eps).exp()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub label: String,
    pub beta_star: f64,
    pub beta_star_cluster: f64,
    pub xi_of_beta: f64,
    pub cluster_x: f64,
    pub cluster_error_bound: f64,
    /// `cluster_x` at `β/2M`, the squared-product regime.
    pub cluster_x_squared: f64,
    pub thermal_bond_1d: f64,
    pub thermal_bond_hd: f64,
    pub time_bond_1d: f64,
    pub condmap_bond_pauli: f64,
    pub condmap_bond_arbitrary: f64,
    pub lr_bound: f64,
    pub quench_bound: f64,
}

pub fn evaluate_all(b: &BoundInputs) -> Result<BoundsReport> {
    b.validate()?;
    let x = cluster_x(b.beta, b.gamma, b.z, b.h);
    let cm = condmap_bond(b)?;
    Ok(BoundsReport {
        label: SCALING_LABEL.to_string(),
        beta_star: beta_star(b.gamma, b.h),
        beta_star_cluster: beta_star_cluster(b.gamma, b.z, b.h),
        xi_of_beta: xi_of_beta(b.beta, b.gamma, b.h),
        cluster_x: x,
        cluster_error_bound: cluster_error_bound(b.big_k, b.big_l, x),
        cluster_x_squared: cluster_x(b.beta / (2.0 * b.m), b.gamma, b.z, b.h),
        thermal_bond_1d: thermal_bond_1d(b)?,
        thermal_bond_hd: thermal_bond_hd(b)?,
        time_bond_1d: time_bond_1d(b)?,
        condmap_bond_pauli: cm.pauli,
        condmap_bond_arbitrary: cm.arbitrary,
        lr_bound: lr_bound(b)?,
        quench_bound: quench_bound(b)?,
    })
}
