//! Symmetric triangle rules and Gauss-Legendre rules on [0, 1].

/// Barycentric points with weights summing to one (multiply by the area).
#[derive(Clone, Debug)]
pub struct TriRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

fn orbit3(a: f64, w: f64, rule: &mut TriRule) {
    let b = (1.0 - a) / 2.0;
    for p in [[a, b, b], [b, a, b], [b, b, a]] {
        rule.points.push(p);
        rule.weights.push(w);
    }
}

/// Rule exact for polynomials of total degree `degree` (at most 5).
pub fn tri_rule(degree: usize) -> TriRule {
    let mut r = TriRule { points: Vec::new(), weights: Vec::new() };
    match degree {
        0 | 1 => {
            r.points.push([1.0 / 3.0; 3]);
            r.weights.push(1.0);
        }
        2 => orbit3(2.0 / 3.0, 1.0 / 3.0, &mut r),
        3 | 4 => {
            orbit3(0.108_103_018_168_070, 0.223_381_589_678_011, &mut r);
            orbit3(0.816_847_572_980_459, 0.109_951_743_655_322, &mut r);
        }
        5 => {
            r.points.push([1.0 / 3.0; 3]);
            r.weights.push(0.225);
            orbit3(0.059_715_871_789_770, 0.132_394_152_788_506, &mut r);
            orbit3(0.797_426_985_353_087, 0.125_939_180_544_827, &mut r);
        }
        _ => panic!("no triangle rule of degree {degree}"),
    }
    r
}

/// `n`-point Gauss-Legendre nodes and weights on [0, 1] (n in 1..=4).
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let ref_rule: Vec<(f64, f64)> = match n {
        1 => vec![(0.0, 2.0)],
        2 => {
            let a = 1.0 / 3f64.sqrt();
            vec![(-a, 1.0), (a, 1.0)]
        }
        3 => {
            let a = (3.0f64 / 5.0).sqrt();
            vec![(-a, 5.0 / 9.0), (0.0, 8.0 / 9.0), (a, 5.0 / 9.0)]
        }
        4 => {
            let s = (6.0f64 / 5.0).sqrt() * 2.0;
            let (a, b) = (((3.0 - s) / 7.0).sqrt(), ((3.0 + s) / 7.0).sqrt());
            let (wa, wb) = ((18.0 + 30f64.sqrt()) / 36.0, (18.0 - 30f64.sqrt()) / 36.0);
            vec![(-b, wb), (-a, wa), (a, wa), (b, wb)]
        }
        _ => panic!("no Gauss rule with {n} points"),
    };
    ref_rule.into_iter().map(|(x, w)| ((x + 1.0) / 2.0, w / 2.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn triangle_monomials_exact() {
        // ∫_T λ0^a λ1^b λ2^c = 2|T| a! b! c! / (a+b+c+2)!, here |T| = 1
        for deg in 1..=5usize {
            let r = tri_rule(deg);
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for a in 0..=deg as u32 {
                for b in 0..=(deg as u32 - a) {
                    let c = deg as u32 - a - b;
                    let q: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
                        .sum();
                    let exact = 2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2);
                    assert!((q - exact).abs() < 1e-13, "deg {deg} ({a},{b},{c}): {q} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn gauss_monomials_exact() {
        for n in 1..=4 {
            let r = gauss_legendre(n);
            for k in 0..(2 * n) as i32 {
                let q: f64 = r.iter().map(|(x, w)| w * x.powi(k)).sum();
                assert!((q - 1.0 / (k + 1) as f64).abs() < 1e-14);
            }
        }
    }
}
