//! Browser bindings. Every function returns a flat `Float64Array`.

use num_complex::Complex64;
use toeplitz_lattice::biorth::biorth_family;
use toeplitz_lattice::flows::{
    compare_flow_vs_oracle, hermitian_check, integrate, CompareSettings, HermitianData, Integrator,
    LatticeSystem, ReductionSign,
};
use toeplitz_lattice::MatrixLaurentSeries;
use wasm_bindgen::prelude::*;

fn err(e: toeplitz_lattice::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn symbol(a: f64, b: f64) -> Result<MatrixLaurentSeries, JsValue> {
    MatrixLaurentSeries::scalar(-1, &[b, 1.0, a]).map_err(err)
}

/// Reflection coefficients of `1 + a z + b z⁻¹`: rows `(k, x_k, y_k, h_k)` for `k = 0..=n_max`.
#[wasm_bindgen]
pub fn reflection_profile(a: f64, b: f64, n_max: usize) -> Result<Vec<f64>, JsValue> {
    let r = n_max as i64;
    let fam = biorth_family(&symbol(a, b)?.widened(-r, r), n_max).map_err(err)?;
    let mut out = Vec::with_capacity(4 * (n_max + 1));
    for k in 0..=n_max {
        out.extend([k as f64, fam.xl(k)[(0, 0)].re, fam.yr(k)[(0, 0)].re, fam.hl(k)[(0, 0)].re]);
    }
    Ok(out)
}

/// Integrated lattice against the moment oracle: rows `(k, error_x, error_y)`.
#[wasm_bindgen]
pub fn flow_vs_oracle(a: f64, b: f64, tau_end: f64, step: f64, sites: usize) -> Result<Vec<f64>, JsValue> {
    let cfg = CompareSettings::new(tau_end, step, sites, 6);
    let report = compare_flow_vs_oracle(&symbol(a, b)?, LatticeSystem::Scalar, &cfg).map_err(err)?;
    Ok(report.per_site.iter().flat_map(|e| [e.k as f64, e.x, e.y]).collect())
}

/// Imaginary-time flow from a uniform profile `x_k = amplitude`.
/// Returns `|x_k|` at `tau_end` for `k = 1..=sites`, then the largest deviation from the reduction.
#[wasm_bindgen]
pub fn hermitian_evolution(amplitude: f64, plus: bool, tau_end: f64, sites: usize) -> Result<Vec<f64>, JsValue> {
    let sign = if plus { ReductionSign::Plus } else { ReductionSign::Minus };
    let x = vec![Complex64::new(amplitude, 0.0); sites];
    let data = HermitianData::scalar(&x, sign).map_err(err)?;
    let HermitianData::Scalar(state) = &data else { unreachable!() };
    let step = 1e-3;
    let integ = Integrator {
        time_factor: Complex64::i(),
        ..Integrator::new(step)
    };
    let end = integrate(state, tau_end, &integ).map_err(err)?;
    let mut out: Vec<f64> = end.last().xs()[1..].iter().map(|m| m[(0, 0)].norm()).collect();
    out.push(hermitian_check(&data, sign, tau_end, step).map_err(err)?.max_deviation);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_rows() {
        let p = reflection_profile(0.2, 0.2, 3).unwrap();
        assert_eq!(p.len(), 16);
        assert!((p[5] + 0.2).abs() < 1e-14);
        assert!((p[7] - 0.96).abs() < 1e-14);
    }

    #[test]
    fn flow_matches_oracle() {
        let rows = flow_vs_oracle(0.2, 0.2, 0.1, 1e-3, 16).unwrap();
        assert!(rows.chunks(3).all(|r| r[1] < 1e-6 && r[2] < 1e-6));
    }

    #[test]
    fn hermitian_stays_reduced() {
        let out = hermitian_evolution(0.1, false, 0.1, 12).unwrap();
        assert_eq!(out.len(), 13);
        assert!(out[12] < 1e-8);
    }
}
