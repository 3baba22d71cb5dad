//! The elementary bound `u^m <= C 2^(lambda u)` and the Hölder estimate for
//! the power-density integrals of the Rademacher-series example.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Check, Relation, VerificationReport};
use crate::error::{Result, SmError};
use crate::integrate::quadrature::adaptive;
use crate::integrate::{singular_weight_quadrature, Integrand, QuadratureConfig};

pub const DEFAULT_SHARPNESS_GRID: usize = 1_000_000;
const POINTWISE_GRID: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpMomentConstant {
    pub k: u64,
    pub lambda: f64,
    /// `2 k^(1/3) - 1`.
    pub m: f64,
    /// Maximizer of `u^m 2^(-lambda u)`.
    pub u_star: f64,
    pub c: f64,
}

impl ExpMomentConstant {
    /// `u^m 2^(-lambda u)`.
    pub fn ratio(&self, u: f64) -> f64 {
        u.powf(self.m) * (-self.lambda * u).exp2()
    }
}

/// `C = (m / (lambda ln 2))^m 2^(-m / ln 2)`, the least constant with
/// `u^m <= C 2^(lambda u)` for all `u >= 0`.
pub fn exp_moment_constant(k: u64, lambda: f64) -> Result<ExpMomentConstant> {
    if k == 0 || !(lambda > 0.0 && lambda.is_finite()) {
        return Err(SmError::Domain(format!("need k >= 1 and lambda > 0, got k = {k}, lambda = {lambda}")));
    }
    let m = 2.0 * (k as f64).cbrt() - 1.0;
    let u_star = m / (lambda * LN_2);
    // 2^(-m/ln 2) = e^(-m)
    let c = u_star.powf(m) * (-m).exp();
    Ok(ExpMomentConstant {
        k,
        lambda,
        m,
        u_star,
        c,
    })
}

/// Grid maximum of `u^m 2^(-lambda u)` over `[0, 4 u*]` against `C`.
pub fn exp_moment_sharpness_check(k: u64, lambda: f64, grid_points: usize) -> Result<VerificationReport> {
    let e = exp_moment_constant(k, lambda)?;
    if grid_points < 2 {
        return Err(SmError::InvalidInput("sharpness grid needs at least two points".into()));
    }
    let step = 4.0 * e.u_star / (grid_points - 1) as f64;
    let (mut best, mut best_u) = (f64::NEG_INFINITY, 0.0);
    for i in 0..grid_points {
        let u = i as f64 * step;
        let v = e.ratio(u);
        if v > best {
            best = v;
            best_u = u;
        }
    }
    let mut report = VerificationReport::new(
        "exp_moment_sharpness",
        json!({ "k": k, "lambda": lambda, "grid_points": grid_points }),
        0,
        None,
    );
    report.stat("C", e.c);
    report.stat("u_star", e.u_star);
    report.stat("grid_max", best);
    report.stat("grid_argmax", best_u);
    report.check(Check::new("relative_gap", (best - e.c).abs() / e.c, Relation::Le, 1e-9));
    report.check(Check::new("argmax_distance", (best_u - e.u_star).abs(), Relation::Le, step));
    Ok(report)
}

/// Bounded test functions on `[0, 1]`: `0`, `1`, `x`, `sin(2 pi x)`.
pub fn holder_catalogue() -> Vec<Integrand> {
    vec![
        Integrand::zero(),
        Integrand::constant(1.0).relabel("one"),
        Integrand::identity().with_bound(1.0),
        Integrand::sin(std::f64::consts::TAU).relabel("sin:2pi"),
    ]
}

/// Checks `int_0^1 |f| x^(c_k - 1) dx <= 2 k^(1/3) (int_0^1 |f|^m dx)^(1/m)` and
/// the pointwise bound `|f(x)|^m <= C 2^(lambda |f(x)|)` on a grid, with
/// equality at `|f| = u*`.
pub fn holder_bound_check(f: &Integrand, k: u64, lambda: f64, q: &QuadratureConfig) -> Result<VerificationReport> {
    let e = exp_moment_constant(k, lambda)?;
    let sup = f.bound().ok_or_else(|| {
        SmError::InvalidInput(format!(
            "{} has no certified bound, so int 2^(lambda |f|) is not known to be finite",
            f.label()
        ))
    })?;
    let cube_root = (k as f64).cbrt();
    let c_k = 1.0 / cube_root;
    let m = e.m;
    let abs = f.abs();
    let lhs = singular_weight_quadrature(&abs, c_k, 0.0, 1.0, q)?;
    let power = adaptive(&|x: f64| f.eval(x).abs().powf(m), 0.0, 1.0, f.breakpoints(), q.abs_tol, q.max_subdivisions)?;
    let rhs = 2.0 * cube_root * power.value.max(0.0).powf(1.0 / m);

    let mut worst: f64 = 0.0;
    for i in 0..POINTWISE_GRID {
        let a = f.eval(i as f64 / (POINTWISE_GRID - 1) as f64).abs();
        worst = worst.max(a.powf(m) / (e.c * (lambda * a).exp2()));
    }
    let at_u_star = e.u_star.powf(m) / (e.c * (lambda * e.u_star).exp2());

    let mut report = VerificationReport::new(
        "holder_bound",
        json!({ "function": f.label(), "sup_bound": sup, "k": k, "lambda": lambda }),
        0,
        None,
    );
    report.stat("lhs", lhs);
    report.stat("rhs", rhs);
    report.stat("C", e.c);
    report.stat("u_star", e.u_star);
    report.stat("max_pointwise_ratio", worst);
    report.check(Check::new("holder_inequality", lhs, Relation::Le, rhs * (1.0 + 1e-8)));
    report.check(Check::new("pointwise_bound", worst, Relation::Le, 1.0 + 1e-9));
    report.check(Check::new("equality_at_u_star", (at_u_star - 1.0).abs(), Relation::Le, 1e-9));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_examples() {
        let e = exp_moment_constant(1, 1.0).unwrap();
        assert!((e.c - 0.530738).abs() < 1e-6);
        assert!((e.u_star - std::f64::consts::LOG2_E).abs() < 1e-12);
        let e = exp_moment_constant(1, 1.0 / LN_2).unwrap();
        assert!((e.c - (-1.0f64).exp()).abs() < 1e-12);
        assert!((e.u_star - 1.0).abs() < 1e-12);
        let e = exp_moment_constant(8, 1.0).unwrap();
        assert_eq!(e.m, 3.0);
        assert!((e.c - 4.037).abs() < 1e-3);
        assert!(exp_moment_constant(0, 1.0).is_err());
    }

    #[test]
    fn sharpness() {
        for (k, l) in [(1, 1.0), (8, 0.5), (27, 2.0)] {
            let r = exp_moment_sharpness_check(k, l, DEFAULT_SHARPNESS_GRID).unwrap();
            assert!(r.pass, "{k} {l}: {:#?}", r.checks);
        }
    }

    #[test]
    fn holder_examples() {
        let q = QuadratureConfig::default();
        let cat = holder_catalogue();
        let r = holder_bound_check(&cat[0], 1, 1.0, &q).unwrap();
        assert_eq!((r.statistic("lhs"), r.statistic("rhs")), (Some(0.0), Some(0.0)));
        assert!(r.pass);
        let r = holder_bound_check(&cat[1], 1, 1.0, &q).unwrap();
        assert!((r.statistic("lhs").unwrap() - 1.0).abs() < 1e-10);
        assert!((r.statistic("rhs").unwrap() - 2.0).abs() < 1e-10);
        let r = holder_bound_check(&cat[2], 8, 1.0, &q).unwrap();
        assert!((r.statistic("lhs").unwrap() - 2.0 / 3.0).abs() < 1e-9);
        assert!((r.statistic("rhs").unwrap() - 4.0 * 0.25f64.cbrt()).abs() < 1e-9);
        for f in &cat {
            for k in [1, 8, 27] {
                assert!(holder_bound_check(f, k, 1.0, &q).unwrap().pass, "{} k={k}", f.label());
            }
        }
    }

    #[test]
    fn unbounded_function_rejected() {
        let q = QuadratureConfig::default();
        assert!(holder_bound_check(&Integrand::identity(), 1, 1.0, &q).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn constant_dominates(k in 1u64..1000, lambda in 0.05f64..5.0, t in 0.0f64..8.0) {
                let e = exp_moment_constant(k, lambda).unwrap();
                let u = t * e.u_star;
                prop_assert!(e.ratio(u) <= e.c * (1.0 + 1e-12));
                prop_assert!((e.ratio(e.u_star) / e.c - 1.0).abs() < 1e-12);
            }
        }
    }
}
