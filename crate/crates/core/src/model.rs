//! Coefficients and pointwise algebra of the model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Variable};

/// Coefficients `(a, b, c, d)` and the spatial dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub n: usize,
}

impl Params {
    pub fn new(a: f64, b: f64, c: f64, d: f64, n: usize) -> Result<Self> {
        let p = Params { a, b, c, d, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidParameter(format!("a must be > 0, got {}", self.a)));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidParameter(format!("b must be > 0, got {}", self.b)));
        }
        if !self.c.is_finite() || !self.d.is_finite() {
            return Err(Error::InvalidParameter("c and d must be finite".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("dimension n must be positive".into()));
        }
        Ok(())
    }

    /// Parabolicity threshold `a/(2b)`, the vertex of `φ`.
    pub fn u_crit(&self) -> f64 {
        self.a / (2.0 * self.b)
    }

    /// Logistic equilibrium `c/d`, if `d ≠ 0`.
    pub fn logistic_cap(&self) -> Option<f64> {
        (self.d != 0.0).then(|| self.c / self.d)
    }
}

/// `φ(u) = (a − b u) u`, the quantity under the Laplacian.
pub fn flux_phi(u: f64, p: &Params) -> f64 {
    (p.a - p.b * u) * u
}

/// `φ'(u) = a − 2 b u`, the effective diffusivity.
pub fn flux_phi_prime(u: f64, p: &Params) -> f64 {
    p.a - 2.0 * p.b * u
}

/// Logistic reaction `g(u) = (c − d u) u`.
pub fn reaction_g(u: f64, p: &Params) -> f64 {
    (p.c - p.d * u) * u
}

pub fn reaction_g_prime(u: f64, p: &Params) -> f64 {
    p.c - 2.0 * p.d * u
}

/// `−b v²`: the flux potential in the shifted variable, equal to
/// `φ(v + a/2b) − a²/4b`.
pub fn flux_psi(v: f64, p: &Params) -> f64 {
    -p.b * v * v
}

/// Reaction in the shifted variable, `(c − d a/2b − d v)(v + a/2b)`.
pub fn reaction_h(v: f64, p: &Params) -> f64 {
    let s = p.u_crit();
    (p.c - p.d * s - p.d * v) * (v + s)
}

pub fn to_v(f: &Field, p: &Params) -> Result<Field> {
    if f.var != Variable::U {
        return Err(Error::VariableMismatch {
            expected: "u",
            found: f.var.name(),
        });
    }
    let s = p.u_crit();
    Ok(f.map_with(Variable::V, |u| u - s))
}

pub fn from_v(f: &Field, p: &Params) -> Result<Field> {
    if f.var != Variable::V {
        return Err(Error::VariableMismatch {
            expected: "v",
            found: f.var.name(),
        });
    }
    let s = p.u_crit();
    Ok(f.map_with(Variable::U, |v| v + s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoundaryKind, Grid};
    use proptest::prelude::*;

    fn p(a: f64, b: f64, c: f64, d: f64) -> Params {
        Params::new(a, b, c, d, 1).unwrap()
    }

    #[test]
    fn phi_roots_and_vertex() {
        let q = p(2.0, 1.0, 0.0, 0.0);
        assert_eq!(flux_phi(0.0, &q), 0.0);
        assert_eq!(flux_phi(2.0, &q), 0.0);
        // brute-force maximisation on a fine grid of u values
        let (mut best_u, mut best) = (0.0, f64::MIN);
        for k in 0..=20_000 {
            let u = 2.0 * k as f64 / 20_000.0;
            let v = (2.0 - u) * u;
            if v > best {
                best = v;
                best_u = u;
            }
        }
        assert!((best_u - 1.0).abs() < 1e-9);
        assert!((flux_phi(1.0, &q) - best).abs() < 1e-12);
        assert_eq!(flux_phi(1.0, &q), 1.0);
    }

    #[test]
    fn phi_prime_values() {
        assert_eq!(flux_phi_prime(0.0, &p(1.0, 1.0, 0.0, 0.0)), 1.0);
        let q = p(2.0, 1.0, 0.0, 0.0);
        assert_eq!(flux_phi_prime(q.u_crit(), &q), 0.0);
        assert_eq!(flux_phi_prime(1.5, &q), -1.0);
    }

    #[test]
    fn reaction_values() {
        let q = p(1.0, 1.0, 1.0, 1.0);
        assert_eq!(reaction_g(0.0, &q), 0.0);
        assert_eq!(reaction_g(1.0, &q), 0.0);
        assert_eq!(reaction_g(0.5, &q), 0.25);
    }

    #[test]
    fn v_shift() {
        let q = p(1.0, 1.0, 0.0, 0.0);
        let g = Grid::interval(1.0, 4).unwrap();
        let f = Field::constant(g, BoundaryKind::Neumann, Variable::U, 0.75);
        let v = to_v(&f, &q).unwrap();
        assert!(v.values.iter().all(|&x| x == 0.25));
        let crit = Field::constant(g, BoundaryKind::Neumann, Variable::U, q.u_crit());
        assert!(to_v(&crit, &q).unwrap().values.iter().all(|&x| x == 0.0));
        assert!(matches!(from_v(&f, &q), Err(Error::VariableMismatch { .. })));
        assert!(matches!(to_v(&v, &q), Err(Error::VariableMismatch { .. })));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(Params::new(0.0, 1.0, 0.0, 0.0, 1).is_err());
        assert!(Params::new(1.0, -1.0, 0.0, 0.0, 1).is_err());
        assert!(Params::new(1.0, 1.0, f64::NAN, 0.0, 1).is_err());
        assert!(Params::new(1.0, 1.0, 0.0, 0.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn phi_symmetric_about_vertex(a in 0.1f64..10.0, b in 0.1f64..10.0, u in -5.0f64..5.0) {
            let q = p(a, b, 0.0, 0.0);
            let l = flux_phi(u, &q);
            let r = flux_phi(a / b - u, &q);
            prop_assert!((l - r).abs() <= 1e-12 * (1.0 + l.abs()));
        }

        #[test]
        fn phi_prime_is_derivative(a in 0.1f64..10.0, b in 0.1f64..10.0, u in -5.0f64..5.0) {
            let q = p(a, b, 0.0, 0.0);
            let eps = 1e-4;
            let fd = (flux_phi(u + eps, &q) - flux_phi(u - eps, &q)) / (2.0 * eps);
            prop_assert!((fd - flux_phi_prime(u, &q)).abs() <= 10.0 * eps * eps);
        }

        #[test]
        fn v_roundtrip(a in 0.1f64..10.0, b in 0.1f64..10.0, vals in proptest::collection::vec(0.0f64..10.0, 5)) {
            let q = p(a, b, 0.0, 0.0);
            let g = Grid::interval(1.0, 4).unwrap();
            let f = Field::new(g, BoundaryKind::Neumann, Variable::U, vals).unwrap();
            let back = from_v(&to_v(&f, &q).unwrap(), &q).unwrap();
            for (x, y) in f.values.iter().zip(&back.values) {
                // one rounding in each direction
                prop_assert!((x - y).abs() <= 2.0 * f64::EPSILON * (x.abs() + q.u_crit()));
            }
        }
    }
}
