//! Phase-space pictures: Wigner grids of coherent-state mixtures and zeros
//! of stellar polynomials.
//!
//! A mixture `sum_j w_j |alpha_j><alpha_j|` has Wigner function
//! `(1/pi) sum_j w_j exp(-|alpha_j - (x + i p)|^2)`, normalized so that the
//! integral over the plane is one.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, Schur};
use serde::Serialize;

use crate::codestates::code_amplitude;
use crate::error::{Error, Result};
use crate::fock::FockVector;
use crate::format::{fmt17, ser_f64};
use crate::{Bit, C64};

/// Default number of samples per axis.
pub const DEFAULT_RESOLUTION: usize = 201;

/// Rectangular sampling window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub p_range: (f64, f64),
    /// Samples per axis, endpoints included.
    pub resolution: usize,
}

impl GridSpec {
    pub fn new(x_range: (f64, f64), p_range: (f64, f64), resolution: usize) -> Result<Self> {
        let spec = GridSpec { x_range, p_range, resolution };
        spec.validate()?;
        Ok(spec)
    }

    /// `[-h, h]^2`.
    pub fn square(half_width: f64, resolution: usize) -> Result<Self> {
        GridSpec::new((-half_width, half_width), (-half_width, half_width), resolution)
    }

    /// `[-(t+4), t+4]^2` at the default resolution.
    pub fn for_amplitude(amplitude: f64) -> Result<Self> {
        GridSpec::square(amplitude.abs() + 4.0, DEFAULT_RESOLUTION)
    }

    fn validate(&self) -> Result<()> {
        for (lo, hi) in [self.x_range, self.p_range] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::param(format!("grid range ({lo}, {hi}) must be finite and increasing")));
            }
        }
        if self.resolution < 2 {
            return Err(Error::param("grid resolution must be >= 2"));
        }
        Ok(())
    }

    fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
        let step = (range.1 - range.0) / (n - 1) as f64;
        (0..n).map(|i| range.0 + step * i as f64).collect()
    }
}

/// Sampled Wigner function. `values[i][j]` belongs to `(xs[i], ps[j])`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    xs: Vec<f64>,
    ps: Vec<f64>,
    values: DMatrix<f64>,
}

impl WignerGrid {
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ps(&self) -> &[f64] {
        &self.ps
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn min(&self) -> f64 {
        self.values.min()
    }

    pub fn max(&self) -> f64 {
        self.values.max()
    }

    /// Riemann sum over the window.
    pub fn integral(&self) -> f64 {
        let dx = self.xs[1] - self.xs[0];
        let dp = self.ps[1] - self.ps[0];
        self.values.sum() * dx * dp
    }

    /// `max |W - W'|` over a common grid.
    pub fn max_gap(&self, other: &WignerGrid) -> Result<f64> {
        if self.xs != other.xs || self.ps != other.ps {
            return Err(Error::Dimension("Wigner grids sample different points".into()));
        }
        Ok((&self.values - &other.values).amax())
    }

    /// `x,p,w` rows in x-major order, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * self.values.len() + 8);
        out.push_str("x,p,w\n");
        for (i, &x) in self.xs.iter().enumerate() {
            for (j, &p) in self.ps.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", fmt17(x), fmt17(p), fmt17(self.values[(i, j)]));
            }
        }
        out
    }
}

/// Wigner grid of the mixture `sum_j w_j |alpha_j><alpha_j|`.
pub fn wigner_mixture(points: &[(f64, C64)], spec: &GridSpec) -> Result<WignerGrid> {
    spec.validate()?;
    if points.is_empty() {
        return Err(Error::EmptyMixture);
    }
    if let Some((w, _)) = points.iter().find(|(w, a)| !(w.is_finite() && *w >= 0.0) || !(a.re.is_finite() && a.im.is_finite())) {
        return Err(Error::param(format!("mixture weight {w} must be finite and nonnegative")));
    }
    let total: f64 = points.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::param(format!("mixture weights sum to {total}, not 1")));
    }
    let xs = GridSpec::axis(spec.x_range, spec.resolution);
    let ps = GridSpec::axis(spec.p_range, spec.resolution);
    let values = DMatrix::from_fn(xs.len(), ps.len(), |i, j| {
        let z = C64::new(xs[i], ps[j]);
        points.iter().map(|(w, a)| w * (-(a - z).norm_sqr()).exp()).sum::<f64>() / PI
    });
    Ok(WignerGrid { xs, ps, values })
}

/// The `M` equally weighted code-state points of `sigma_b`.
pub fn code_state_points(bit: Bit, amplitude: f64, modulation: usize) -> Result<Vec<(f64, C64)>> {
    if modulation == 0 {
        return Err(Error::param("modulation must be >= 1"));
    }
    let w = 1.0 / modulation as f64;
    (0..modulation).map(|m| Ok((w, code_amplitude(amplitude, m, bit, modulation)?))).collect()
}

/// `sum_n d_n alpha^n` with `d_n = c_n / sqrt(n!)`, up to the normalizing
/// Gaussian the stellar function of `sum_n c_n |n>`.
#[derive(Clone, Debug, PartialEq)]
pub struct StellarPolynomial {
    coefficients: Vec<C64>,
}

impl StellarPolynomial {
    /// Coefficients `d_0..=d_deg`; trailing exact zeros are stripped.
    pub fn from_coefficients(mut coefficients: Vec<C64>) -> Result<Self> {
        while coefficients.last().is_some_and(|c| *c == C64::new(0.0, 0.0)) {
            coefficients.pop();
        }
        if coefficients.is_empty() {
            return Err(Error::ZeroPolynomial);
        }
        Ok(StellarPolynomial { coefficients })
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Index of the first nonzero coefficient: the multiplicity of the root
    /// at the origin.
    pub fn zero_multiplicity(&self) -> usize {
        self.coefficients.iter().position(|c| *c != C64::new(0.0, 0.0)).expect("nonzero polynomial")
    }

    pub fn eval(&self, alpha: C64) -> C64 {
        self.coefficients.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * alpha + c)
    }

    /// All roots, the zero root repeated by its multiplicity.
    pub fn roots(&self) -> Result<Vec<C64>> {
        let z = self.zero_multiplicity();
        let mut out = vec![C64::new(0.0, 0.0); z];
        let q = &self.coefficients[z..];
        let deg = q.len() - 1;
        if deg == 0 {
            return Ok(out);
        }
        // alpha = s y balances the constant and leading terms; the companion
        // matrix of the monic polynomial in y is then well scaled.
        let s = (q[0].norm() / q[deg].norm()).powf(1.0 / deg as f64);
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Numerical("cannot scale stellar polynomial".into()));
        }
        let lead = q[deg] * s.powi(deg as i32);
        let scaled: Vec<C64> = q.iter().enumerate().map(|(j, &c)| c * s.powi(j as i32) / lead).collect();
        let mut comp = DMatrix::<C64>::zeros(deg, deg);
        for i in 1..deg {
            comp[(i, i - 1)] = C64::new(1.0, 0.0);
        }
        for i in 0..deg {
            comp[(i, deg - 1)] = -scaled[i];
        }
        let eig = companion_eigenvalues(comp)?;
        out.extend(eig.iter().map(|y| polish(&scaled, *y) * s));
        Ok(out)
    }
}

/// Eigenvalues of a companion matrix. Spectra with rotational symmetry can
/// stall the QR iteration, so on failure the matrix is shifted by a fixed
/// off-axis constant, which breaks the symmetry, and the shift is undone.
fn companion_eigenvalues(comp: DMatrix<C64>) -> Result<Vec<C64>> {
    const MAX_ITER: usize = 20_000;
    let n = comp.nrows();
    for shift in [C64::new(0.0, 0.0), C64::new(0.3141, 0.2718), C64::new(-0.577, 0.1234)] {
        let m = &comp + DMatrix::<C64>::identity(n, n) * shift;
        if let Some(schur) = Schur::try_new(m, f64::EPSILON, MAX_ITER) {
            if let Some(eig) = schur.eigenvalues() {
                return Ok(eig.iter().map(|z| z - shift).collect());
            }
        }
    }
    Err(Error::Numerical("companion Schur decomposition did not converge".into()))
}

/// A few Newton steps on the scaled monic polynomial.
fn polish(coeffs: &[C64], mut y: C64) -> C64 {
    for _ in 0..3 {
        let (mut p, mut dp) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for &c in coeffs.iter().rev() {
            dp = dp * y + p;
            p = p * y + c;
        }
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        if !(step.re.is_finite() && step.im.is_finite()) || step.norm() > 1e-3 * y.norm().max(1.0) {
            break;
        }
        y -= step;
    }
    y
}

pub fn stellar_polynomial(v: &FockVector) -> Result<StellarPolynomial> {
    let mut log_fact = 0.0;
    let coeffs = v
        .amps()
        .iter()
        .enumerate()
        .map(|(n, &c)| {
            if n > 0 {
                log_fact += (n as f64).ln();
            }
            c * (-0.5 * log_fact).exp()
        })
        .collect();
    StellarPolynomial::from_coefficients(coeffs)
}

/// Roots closer together than this (relative to their size) are one cluster.
pub const ROOT_CLUSTER_TOL: f64 = 1e-6;

/// Root cluster: a representative position and how many roots it holds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootCluster {
    #[serde(serialize_with = "ser_f64")]
    pub re: f64,
    #[serde(serialize_with = "ser_f64")]
    pub im: f64,
    pub multiplicity: usize,
}

/// Roots inside `|alpha| <= radius`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootReport {
    #[serde(serialize_with = "ser_f64")]
    pub radius: f64,
    pub degree: usize,
    pub zero_multiplicity: usize,
    /// Count with multiplicity.
    pub count_inside: usize,
    pub clusters: Vec<RootCluster>,
}

/// Roots of `poly` inside the disc of the given radius (`sqrt(N)` when
/// `None`), with multiplicity. The zero root is exact.
pub fn stellar_roots(poly: &StellarPolynomial, radius: Option<f64>) -> Result<RootReport> {
    let radius = radius.unwrap_or_else(|| (poly.degree() as f64).sqrt());
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(Error::param(format!("root radius must be finite and >= 0, got {radius}")));
    }
    let z = poly.zero_multiplicity();
    let mut clusters: Vec<RootCluster> = Vec::new();
    if z > 0 {
        clusters.push(RootCluster { re: 0.0, im: 0.0, multiplicity: z });
    }
    let inside: Vec<C64> = poly.roots()?.into_iter().skip(z).filter(|r| r.norm() <= radius).collect();
    let mut taken = vec![false; inside.len()];
    for i in 0..inside.len() {
        if taken[i] {
            continue;
        }
        let mut members = vec![inside[i]];
        for j in i + 1..inside.len() {
            if !taken[j] && (inside[j] - inside[i]).norm() <= ROOT_CLUSTER_TOL * inside[i].norm().max(1.0) {
                taken[j] = true;
                members.push(inside[j]);
            }
        }
        let centre = members.iter().sum::<C64>() / members.len() as f64;
        clusters.push(RootCluster { re: centre.re, im: centre.im, multiplicity: members.len() });
    }
    Ok(RootReport {
        radius,
        degree: poly.degree(),
        zero_multiplicity: z,
        count_inside: z + inside.len(),
        clusters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codestates::{sector_vector, CodeParams};
    use crate::fock::coherent_vector;

    fn gap(t: f64, m: usize) -> f64 {
        let spec = GridSpec::for_amplitude(t).unwrap();
        let w0 = wigner_mixture(&code_state_points(Bit::Zero, t, m).unwrap(), &spec).unwrap();
        let w1 = wigner_mixture(&code_state_points(Bit::One, t, m).unwrap(), &spec).unwrap();
        w0.max_gap(&w1).unwrap()
    }

    #[test]
    fn vacuum_peak_and_integral() {
        let g = wigner_mixture(&[(1.0, C64::new(0.0, 0.0))], &GridSpec::square(6.0, 241).unwrap()).unwrap();
        assert!((g.value(120, 120) - 1.0 / PI).abs() < 1e-15);
        assert!((g.integral() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn code_mixture_is_normalized_and_nonnegative() {
        let spec = GridSpec::square(7.0, 281).unwrap();
        for (b, t, m) in [(Bit::Zero, 1.0, 6), (Bit::One, 2.0, 3)] {
            let g = wigner_mixture(&code_state_points(b, t, m).unwrap(), &spec).unwrap();
            assert!((g.integral() - 1.0).abs() < 1e-4);
            assert!(g.min() >= -1e-15);
        }
    }

    #[test]
    fn linear_in_weights() {
        let spec = GridSpec::square(4.0, 41).unwrap();
        let a = C64::new(1.0, 0.5);
        let b = C64::new(-0.3, 1.2);
        let ga = wigner_mixture(&[(1.0, a)], &spec).unwrap();
        let gb = wigner_mixture(&[(1.0, b)], &spec).unwrap();
        let mix = wigner_mixture(&[(0.3, a), (0.7, b)], &spec).unwrap();
        let combo = ga.values() * 0.3 + gb.values() * 0.7;
        assert!((mix.values() - combo).amax() < 1e-15);
    }

    #[test]
    fn gaps_shrink_with_modulation() {
        let oracle = [(6, 1.3684250024368697e-3), (8, 8.62270475899922e-5), (12, 1.8125376434301177e-7)];
        for (m, want) in oracle {
            let g = gap(1.0, m);
            assert!((g - want).abs() < 1e-12 * want.max(1e-3), "M={m}: {g}");
        }
        assert!(gap(1.0, 32) < 1e-3);
        let seq: Vec<f64> = [2, 3, 4, 6, 8, 12, 32].iter().map(|&m| gap(1.0, m)).collect();
        assert!(seq.windows(2).all(|w| w[0] > w[1]), "{seq:?}");
    }

    #[test]
    fn rejects_bad_mixtures() {
        let spec = GridSpec::square(1.0, 3).unwrap();
        assert!(matches!(wigner_mixture(&[], &spec), Err(Error::EmptyMixture)));
        assert!(wigner_mixture(&[(0.5, C64::new(0.0, 0.0))], &spec).is_err());
        assert!(wigner_mixture(&[(1.5, C64::new(0.0, 0.0)), (-0.5, C64::new(1.0, 0.0))], &spec).is_err());
        assert!(GridSpec::square(1.0, 1).is_err());
        assert!(GridSpec::new((1.0, 0.0), (0.0, 1.0), 5).is_err());
    }

    #[test]
    fn csv_layout() {
        let g = wigner_mixture(&[(1.0, C64::new(0.0, 0.0))], &GridSpec::square(1.0, 3).unwrap()).unwrap();
        let csv = g.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x,p,w");
        assert_eq!(lines.len(), 10);
        assert!(lines[1].starts_with("-1.0000000000000000e0,-1.0000000000000000e0,"));
        assert!(lines[2].starts_with("-1.0000000000000000e0,0.0000000000000000e0,"));
    }

    #[test]
    fn truncated_coherent_has_no_small_roots() {
        let v = coherent_vector(C64::new(1.0, 0.0), 20);
        let poly = stellar_polynomial(&v).unwrap();
        assert_eq!(poly.degree(), 20);
        let r = stellar_roots(&poly, Some(2.0)).unwrap();
        assert_eq!(r.count_inside, 0);
        // truncated exponential: smallest root modulus 6.4703324...
        let min = poly.roots().unwrap().iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        assert!((min - 6.47033241923663).abs() < 1e-8, "{min}");
        for z in poly.roots().unwrap() {
            let scale: f64 = poly.coefficients().iter().enumerate().map(|(n, c)| c.norm() * z.norm().powi(n as i32)).sum();
            assert!(poly.eval(z).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn sector_eigenvector_zero_at_origin() {
        let params = CodeParams::new(1.0, 4, 30).unwrap();
        let v = sector_vector(2, Bit::Zero, &params).unwrap();
        let poly = stellar_polynomial(&v).unwrap();
        assert_eq!(poly.zero_multiplicity(), 2);
        let r = stellar_roots(&poly, None).unwrap();
        assert_eq!(r.clusters[0], RootCluster { re: 0.0, im: 0.0, multiplicity: 2 });
        // remaining zeros sit on |alpha| = pi sqrt(2) in a four-fold pattern
        assert_eq!(r.count_inside, 6);
        for c in &r.clusters[1..] {
            assert!((C64::new(c.re, c.im).norm() - PI * 2f64.sqrt()).abs() < 1e-6, "{c:?}");
        }
    }

    #[test]
    fn single_photon_root() {
        let poly = stellar_polynomial(&FockVector::basis(1, 10).unwrap()).unwrap();
        assert_eq!(poly.degree(), 1);
        let r = stellar_roots(&poly, None).unwrap();
        assert_eq!(r.count_inside, 1);
        assert_eq!(r.clusters, vec![RootCluster { re: 0.0, im: 0.0, multiplicity: 1 }]);
    }

    #[test]
    fn zero_vector_is_rejected() {
        let v = FockVector::new(vec![C64::new(0.0, 0.0); 5]).unwrap();
        assert!(matches!(stellar_polynomial(&v), Err(Error::ZeroPolynomial)));
    }

    #[test]
    fn root_count_ignores_global_phase() {
        for beta in [C64::new(1.0, 0.0), C64::new(0.5, -2.0)] {
            let v = coherent_vector(beta, 25);
            let base = stellar_roots(&stellar_polynomial(&v).unwrap(), Some(6.0)).unwrap().count_inside;
            for phase in [0.3, 1.7, -2.9] {
                let w = v.scaled(C64::from_polar(1.0, phase));
                assert_eq!(stellar_roots(&stellar_polynomial(&w).unwrap(), Some(6.0)).unwrap().count_inside, base);
            }
        }
    }
}
