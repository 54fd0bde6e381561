//! Numerical quadrature on reference triangles and edges.
//!
//! Triangle points are given in barycentric-style reference coordinates
//! `(ξ, η)` on the unit triangle `{ξ ≥ 0, η ≥ 0, ξ + η ≤ 1}`; weights sum to
//! 1 and must be multiplied by the physical element area.

/// A quadrature point: reference coordinates and weight.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    /// Reference coordinates `(ξ, η)`.
    pub xi: [f64; 2],
    /// Weight (normalized: weights of a rule sum to 1).
    pub weight: f64,
}

/// A 6-point rule exact for polynomials of degree ≤ 4, used for all bilinear
/// forms with polynomial integrands (stiffness, divergence, mass).
pub fn triangle_rule_degree4() -> &'static [QuadPoint] {
    const A1: f64 = 0.445948490915965;
    const B1: f64 = 0.108103018168070;
    const W1: f64 = 0.223381589678011;
    const A2: f64 = 0.091576213509771;
    const B2: f64 = 0.816847572980459;
    const W2: f64 = 0.109951743655322;
    const RULE: [QuadPoint; 6] = [
        QuadPoint { xi: [A1, A1], weight: W1 },
        QuadPoint { xi: [B1, A1], weight: W1 },
        QuadPoint { xi: [A1, B1], weight: W1 },
        QuadPoint { xi: [A2, A2], weight: W2 },
        QuadPoint { xi: [B2, A2], weight: W2 },
        QuadPoint { xi: [A2, B2], weight: W2 },
    ];
    &RULE
}

/// A 12-point rule exact for polynomials of degree ≤ 6, used for the
/// nonlinear viscous integrands where the viscosity varies inside elements.
pub fn triangle_rule_degree6() -> &'static [QuadPoint] {
    const A1: f64 = 0.249286745170910;
    const B1: f64 = 0.501426509658179;
    const W1: f64 = 0.116786275726379;
    const A2: f64 = 0.063089014491502;
    const B2: f64 = 0.873821971016996;
    const W2: f64 = 0.050844906370207;
    const A3: f64 = 0.310352451033785;
    const B3: f64 = 0.636502499121399;
    const C3: f64 = 0.053145049844816;
    const W3: f64 = 0.082851075618374;
    const RULE: [QuadPoint; 12] = [
        QuadPoint { xi: [A1, A1], weight: W1 },
        QuadPoint { xi: [B1, A1], weight: W1 },
        QuadPoint { xi: [A1, B1], weight: W1 },
        QuadPoint { xi: [A2, A2], weight: W2 },
        QuadPoint { xi: [B2, A2], weight: W2 },
        QuadPoint { xi: [A2, B2], weight: W2 },
        QuadPoint { xi: [A3, B3], weight: W3 },
        QuadPoint { xi: [B3, A3], weight: W3 },
        QuadPoint { xi: [A3, C3], weight: W3 },
        QuadPoint { xi: [C3, A3], weight: W3 },
        QuadPoint { xi: [B3, C3], weight: W3 },
        QuadPoint { xi: [C3, B3], weight: W3 },
    ];
    &RULE
}

/// 3-point Gauss–Legendre rule on `[0,1]` (exact for degree ≤ 5), used for
/// boundary-edge integrals (tractions, electrode fluxes).
pub fn edge_rule() -> &'static [(f64, f64)] {
    // (position on [0,1], weight); weights sum to 1.
    const S: f64 = 0.7745966692414834; // sqrt(3/5)
    const RULE: [(f64, f64); 3] = [
        (0.5 * (1.0 - S), 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.5 * (1.0 + S), 5.0 / 18.0),
    ];
    &RULE
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact value of ∫_T ξ^p η^q over the unit triangle: p! q! / (p+q+2)!.
    fn exact_monomial(p: u32, q: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        fact(p) * fact(q) / fact(p + q + 2)
    }

    fn check_rule(rule: &[QuadPoint], degree: u32) {
        // Weights are normalized to 1; the reference triangle has area 1/2.
        let total: f64 = rule.iter().map(|q| q.weight).sum();
        assert!((total - 1.0).abs() < 1e-14);
        for p in 0..=degree {
            for q in 0..=(degree - p) {
                let approx: f64 = rule
                    .iter()
                    .map(|pt| 0.5 * pt.weight * pt.xi[0].powi(p as i32) * pt.xi[1].powi(q as i32))
                    .sum();
                let exact = exact_monomial(p, q);
                assert!(
                    (approx - exact).abs() < 1e-14,
                    "monomial ξ^{p} η^{q}: {approx} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn degree4_rule_is_exact_to_degree_4() {
        check_rule(triangle_rule_degree4(), 4);
    }

    #[test]
    fn degree6_rule_is_exact_to_degree_6() {
        check_rule(triangle_rule_degree6(), 6);
    }

    #[test]
    fn edge_rule_is_exact_to_degree_5() {
        for p in 0..=5u32 {
            let approx: f64 = edge_rule()
                .iter()
                .map(|&(s, w)| w * s.powi(p as i32))
                .sum();
            let exact = 1.0 / (p as f64 + 1.0);
            assert!((approx - exact).abs() < 1e-14, "s^{p}: {approx} vs {exact}");
        }
    }
}
