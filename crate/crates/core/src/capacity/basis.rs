use serde::{Deserialize, Serialize};
use std::fmt;

/// `cos(2 pi k t / period)` or `sin(2 pi k t / period)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Harmonic {
    pub k: u32,
    pub sine: bool,
}

/// Product of Legendre polynomials of delayed inputs, optionally times a temporal harmonic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolynomialBasisTerm {
    /// `(delay, degree)` pairs with distinct delays, sorted by delay.
    pub factors: Vec<(usize, u32)>,
    pub harmonic: Option<Harmonic>,
}

impl PolynomialBasisTerm {
    pub fn linear(delay: usize) -> Self {
        Self {
            factors: vec![(delay, 1)],
            harmonic: None,
        }
    }

    pub fn total_degree(&self) -> u32 {
        self.factors.iter().map(|f| f.1).sum()
    }

    pub fn max_delay(&self) -> usize {
        self.factors.iter().map(|f| f.0).max().unwrap_or(0)
    }

    pub fn is_temporal(&self) -> bool {
        self.harmonic.is_some()
    }

    pub fn delays_string(&self) -> String {
        join(self.factors.iter().map(|f| f.0))
    }

    pub fn degrees_string(&self) -> String {
        join(self.factors.iter().map(|f| f.1))
    }

    pub fn harmonic_string(&self) -> String {
        match self.harmonic {
            None => String::new(),
            Some(h) => format!("{}{}", if h.sine { "sin" } else { "cos" }, h.k),
        }
    }
}

fn join<T: ToString>(it: impl Iterator<Item = T>) -> String {
    it.map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

impl fmt::Display for PolynomialBasisTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .factors
            .iter()
            .map(|(d, n)| format!("P{n}(u[t-{}])", d - 1))
            .collect();
        if let Some(h) = self.harmonic {
            parts.push(format!("{}({}t)", if h.sine { "sin" } else { "cos" }, h.k));
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

/// Legendre polynomials `P_0 ..= P_max` at `x`, by the three-term recurrence.
pub fn legendre_all(x: f64, max: u32) -> Vec<f64> {
    let mut p = Vec::with_capacity(max as usize + 1);
    p.push(1.0);
    if max >= 1 {
        p.push(x);
    }
    for n in 1..max as usize {
        let nf = n as f64;
        p.push(((2.0 * nf + 1.0) * x * p[n] - nf * p[n - 1]) / (nf + 1.0));
    }
    p
}

/// All delay/degree factor sets of total degree `degree` whose largest delay is exactly `max_delay`.
fn factor_sets(degree: u32, max_delay: usize) -> Vec<Vec<(usize, u32)>> {
    let mut out = Vec::new();
    if degree == 0 || max_delay == 0 {
        return out;
    }
    for k in (1..=degree).rev() {
        let rest = degree - k;
        if rest == 0 {
            out.push(vec![(max_delay, k)]);
            continue;
        }
        for m in 1..max_delay {
            for mut set in factor_sets(rest, m) {
                set.push((max_delay, k));
                out.push(set);
            }
        }
    }
    out
}

/// Enumerates terms ordered by total degree, then largest delay, then harmonic,
/// stopping after `budget` terms. `max_delay_by_degree[d - 1]` overrides
/// `max_delay` for degree `d`. Harmonics `1..=max_harmonic` add temporal
/// products (and pure time terms at degree 0).
pub fn enumerate_terms(
    max_degree: u32,
    max_delay: usize,
    max_delay_by_degree: &[usize],
    max_harmonic: u32,
    budget: usize,
) -> Vec<PolynomialBasisTerm> {
    let harmonics: Vec<Option<Harmonic>> = std::iter::once(None)
        .chain((1..=max_harmonic).flat_map(|k| {
            [
                Some(Harmonic { k, sine: false }),
                Some(Harmonic { k, sine: true }),
            ]
        }))
        .collect();
    let mut out = Vec::new();
    for h in harmonics.iter().skip(1) {
        if out.len() >= budget {
            return out;
        }
        out.push(PolynomialBasisTerm {
            factors: Vec::new(),
            harmonic: *h,
        });
    }
    for d in 1..=max_degree {
        let limit = max_delay_by_degree
            .get(d as usize - 1)
            .copied()
            .unwrap_or(max_delay);
        for m in 1..=limit {
            for factors in factor_sets(d, m) {
                for h in &harmonics {
                    if out.len() >= budget {
                        return out;
                    }
                    out.push(PolynomialBasisTerm {
                        factors: factors.clone(),
                        harmonic: *h,
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_low_orders() {
        let p = legendre_all(0.5, 3);
        assert_eq!(p[0], 1.0);
        assert_eq!(p[1], 0.5);
        assert!((p[2] - (1.5 * 0.25 - 0.5)).abs() < 1e-15);
        assert!((p[3] - (2.5 * 0.125 - 1.5 * 0.5)).abs() < 1e-15);
        assert_eq!(legendre_all(1.0, 6), vec![1.0; 7]);
    }

    #[test]
    fn term_counts_match_combinatorics() {
        // degree 1: 4 delays; degree 2: 4 squares + 6 pairs.
        let terms = enumerate_terms(2, 4, &[], 0, usize::MAX);
        assert_eq!(terms.len(), 4 + 4 + 6);
        assert!(terms
            .windows(2)
            .all(|w| w[0].total_degree() <= w[1].total_degree()));
        // degree 3 over 3 delays: 3 cubes + 6 (square, linear) + 1 triple.
        assert_eq!(enumerate_terms(3, 3, &[0, 0], 0, usize::MAX).len(), 10);
    }

    #[test]
    fn delays_are_distinct_and_sorted() {
        for t in enumerate_terms(4, 5, &[], 0, usize::MAX) {
            assert!(t.factors.windows(2).all(|w| w[0].0 < w[1].0));
            assert!(t.factors.iter().all(|f| f.1 >= 1));
        }
    }

    #[test]
    fn temporal_terms_include_pure_time() {
        let terms = enumerate_terms(1, 1, &[], 1, usize::MAX);
        // cos, sin, then P1 with {none, cos, sin}.
        assert_eq!(terms.len(), 5);
        assert_eq!(terms[0].total_degree(), 0);
        assert_eq!(terms[2].to_string(), "P1(u[t-0])");
        assert_eq!(terms[4].to_string(), "P1(u[t-0])*sin(1t)");
    }

    #[test]
    fn budget_truncates() {
        assert_eq!(enumerate_terms(3, 20, &[], 0, 7).len(), 7);
    }
}
