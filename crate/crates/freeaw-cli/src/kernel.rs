//! Kernel specification strings: `power:V:N` for the reciprocal quadratic
//! kernel `h_V(y)^-N`, `cheb:c0,c1,...` for a polynomial in the
//! Chebyshev-U basis.

use anyhow::{bail, Context};
use freeaw::functional::AnalyticKernel;
use freeaw::moment::ChebPoly;
use freeaw::C64;

/// Parsed form of a kernel flag, kept alongside the analytic kernel so
/// commands can branch on the kind and echo a normalized spec.
pub enum ParsedKernel {
    Power { v: f64, n: u32 },
    Cheb(Vec<f64>),
}

impl ParsedKernel {
    /// Normalized spec string: numbers reprinted in shortest round-trip
    /// form, so equivalent inputs echo identically.
    pub fn canonical(&self) -> String {
        match self {
            ParsedKernel::Power { v, n } => format!("power:{v}:{n}"),
            ParsedKernel::Cheb(coeffs) => format!(
                "cheb:{}",
                coeffs
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        }
    }
}

pub fn parse(spec: &str) -> anyhow::Result<(ParsedKernel, AnalyticKernel)> {
    if let Some(rest) = spec.strip_prefix("power:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 2 {
            bail!("power kernel spec must be power:V:N, got {spec:?}");
        }
        let v: f64 = parts[0]
            .parse()
            .with_context(|| format!("bad kernel parameter {:?}", parts[0]))?;
        let n: u32 = parts[1]
            .parse()
            .with_context(|| format!("bad kernel exponent {:?}", parts[1]))?;
        let kernel = AnalyticKernel::power(C64::new(v, 0.0), n)?;
        Ok((ParsedKernel::Power { v, n }, kernel))
    } else if let Some(rest) = spec.strip_prefix("cheb:") {
        let coeffs: Vec<f64> = rest
            .split(',')
            .map(|c| {
                c.parse()
                    .with_context(|| format!("bad Chebyshev coefficient {c:?}"))
            })
            .collect::<anyhow::Result<_>>()?;
        if coeffs.is_empty() {
            bail!("Chebyshev kernel spec needs at least one coefficient");
        }
        let kernel = AnalyticKernel::cheb(ChebPoly::from_reals(&coeffs));
        Ok((ParsedKernel::Cheb(coeffs), kernel))
    } else {
        bail!("kernel spec must be power:V:N or cheb:c0,c1,..., got {spec:?}");
    }
}
