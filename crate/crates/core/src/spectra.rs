//! Eigendecomposition of the correlation matrix and the random-matrix-theory
//! diagnostics: Marchenko-Pastur bounds and density, bulk classification,
//! sqrt(N)-scaled eigenvector components for the Gaussian comparison, the
//! two-sample Kolmogorov-Smirnov test, and the inverse participation ratio.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};

/// Full eigendecomposition of a correlation matrix.
///
/// Eigenvalues are sorted descending; eigenvectors are unit-norm, aligned
/// with the eigenvalues, and sign-fixed so each vector's largest-magnitude
/// component is positive. Repeated decompositions of the same matrix are
/// bitwise identical.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    /// Row k holds eigenvector k (length n).
    eigenvectors: Vec<f64>,
    n: usize,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, k: usize) -> &[f64] {
        &self.eigenvectors[k * self.n..(k + 1) * self.n]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Builds a decomposition from explicit parts, validating descending
    /// order and orthonormality (1e-10) and applying the sign convention.
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: Vec<Vec<f64>>) -> Result<Self> {
        let n = eigenvalues.len();
        if n == 0 || eigenvectors.len() != n || eigenvectors.iter().any(|v| v.len() != n) {
            return Err(Error::Domain(
                "need n eigenvalues and n eigenvectors of length n".into(),
            ));
        }
        if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Domain(
                "eigenvalues must be sorted descending".into(),
            ));
        }
        let mut flat = Vec::with_capacity(n * n);
        for v in &eigenvectors {
            flat.extend_from_slice(v);
        }
        let mut out = Self {
            eigenvalues,
            eigenvectors: flat,
            n,
        };
        out.apply_sign_convention();
        out.check_orthonormal()?;
        Ok(out)
    }

    fn apply_sign_convention(&mut self) {
        let n = self.n;
        for k in 0..n {
            let row = &mut self.eigenvectors[k * n..(k + 1) * n];
            let mut arg = 0;
            let mut best = row[0].abs();
            for (l, v) in row.iter().enumerate().skip(1) {
                if v.abs() > best {
                    best = v.abs();
                    arg = l;
                }
            }
            if row[arg] < 0.0 {
                for v in row.iter_mut() {
                    *v = -*v;
                }
            }
        }
    }

    fn check_orthonormal(&self) -> Result<()> {
        let n = self.n;
        for k in 0..n {
            for l in k..n {
                let dot: f64 = self
                    .eigenvector(k)
                    .iter()
                    .zip(self.eigenvector(l))
                    .map(|(a, b)| a * b)
                    .sum();
                let expect = if k == l { 1.0 } else { 0.0 };
                if (dot - expect).abs() > 1e-10 {
                    return Err(Error::Numerical(format!(
                        "eigenvectors {k},{l} not orthonormal: dot = {dot}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_against(&self, c: &CorrelationMatrix) -> Result<()> {
        let n = self.n;
        let trace: f64 = self.eigenvalues.iter().sum();
        if (trace - n as f64).abs() > 1e-8 * n as f64 {
            return Err(Error::Numerical(format!(
                "eigenvalue sum {trace} deviates from trace {n}"
            )));
        }
        for k in 0..n {
            let v = self.eigenvector(k);
            let lambda = self.eigenvalues[k];
            let mut residual_sq = 0.0;
            for i in 0..n {
                let mut cv = 0.0;
                for (j, vj) in v.iter().enumerate() {
                    cv += c.get(i, j) * vj;
                }
                let r = cv - lambda * v[i];
                residual_sq += r * r;
            }
            if residual_sq.sqrt() > 1e-8 {
                return Err(Error::Numerical(format!(
                    "residual |Cv - lambda v| = {:e} for eigenpair {k} \
                     (n = {n}, lambda = {lambda})",
                    residual_sq.sqrt()
                )));
            }
        }
        Ok(())
    }
}

/// Eigendecomposes a correlation matrix (Cv = lambda v).
///
/// 2x2 matrices take a closed form; larger matrices go through a symmetric
/// QR solve. Post-conditions checked: trace identity, residual norms below
/// 1e-8, orthonormality within 1e-10, deterministic ordering and signs.
pub fn eigendecompose(c: &CorrelationMatrix) -> Result<SpectralDecomposition> {
    let n = c.n();
    let mut out = if n == 2 {
        eigendecompose_2x2(c)
    } else {
        let m = DMatrix::from_fn(n, n, |i, j| c.get(i, j));
        let eig = nalgebra::SymmetricEigen::try_new(m, f64::EPSILON, 100_000).ok_or_else(|| {
            let max_off = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|(i, j)| i != j)
                .map(|(i, j)| c.get(i, j).abs())
                .fold(0.0_f64, f64::max);
            Error::Numerical(format!(
                "symmetric eigensolver failed to converge (n = {n}, max |off-diag| = {max_off})"
            ))
        })?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .expect("finite eigenvalues")
                .then(a.cmp(&b))
        });
        let mut eigenvalues = Vec::with_capacity(n);
        let mut eigenvectors = Vec::with_capacity(n * n);
        for &k in &order {
            eigenvalues.push(eig.eigenvalues[k]);
            let col = eig.eigenvectors.column(k);
            eigenvectors.extend((0..n).map(|l| col[l]));
        }
        SpectralDecomposition {
            eigenvalues,
            eigenvectors,
            n,
        }
    };
    out.apply_sign_convention();
    out.check_orthonormal()?;
    out.check_against(c)?;
    Ok(out)
}

/// Closed-form symmetric 2x2 eigendecomposition. Exact on the correlation
/// form [[1, rho], [rho, 1]], where the eigenvalues are 1 + |rho| and
/// 1 - |rho|.
fn eigendecompose_2x2(c: &CorrelationMatrix) -> SpectralDecomposition {
    let (a, b, d) = (c.get(0, 0), c.get(0, 1), c.get(1, 1));
    if b == 0.0 {
        let (hi, lo, first_is_hi) = if a >= d { (a, d, true) } else { (d, a, false) };
        let eigenvectors = if first_is_hi {
            vec![1.0, 0.0, 0.0, 1.0]
        } else {
            vec![0.0, 1.0, 1.0, 0.0]
        };
        return SpectralDecomposition {
            eigenvalues: vec![hi, lo],
            eigenvectors,
            n: 2,
        };
    }
    let mean = 0.5 * (a + d);
    let delta = 0.5 * (a - d);
    let radius = (delta * delta + b * b).sqrt();
    let (l1, l2) = (mean + radius, mean - radius);
    // (A - l1 I) v = 0 gives v1 proportional to (b, l1 - a).
    let (mut x, mut y) = (b, l1 - a);
    let norm = (x * x + y * y).sqrt();
    x /= norm;
    y /= norm;
    SpectralDecomposition {
        eigenvalues: vec![l1, l2],
        eigenvectors: vec![x, y, -y, x],
        n: 2,
    }
}

/// Marchenko-Pastur support bounds for a Wishart matrix with aspect ratio
/// Q = T/N and variance sigma^2: lambda_pm = sigma^2 (1 + 1/Q +- 2 sqrt(1/Q)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpBounds {
    pub q_factor: f64,
    pub sigma_sq: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
}

pub fn mp_bounds(q_factor: f64, sigma_sq: f64) -> Result<MpBounds> {
    if q_factor.is_nan() || q_factor < 1.0 {
        return Err(Error::Domain(format!(
            "MP bounds need Q >= 1, got {q_factor}"
        )));
    }
    if !sigma_sq.is_finite() || sigma_sq <= 0.0 {
        return Err(Error::Domain(format!(
            "MP bounds need sigma^2 > 0, got {sigma_sq}"
        )));
    }
    let inv = 1.0 / q_factor;
    let lambda_plus = sigma_sq * (1.0 + inv + 2.0 * inv.sqrt());
    let lambda_minus = (sigma_sq * (1.0 + inv - 2.0 * inv.sqrt())).max(0.0);
    Ok(MpBounds {
        q_factor,
        sigma_sq,
        lambda_minus,
        lambda_plus,
    })
}

impl MpBounds {
    /// Marchenko-Pastur density
    /// P(lambda) = Q sqrt((lambda_plus - lambda)(lambda - lambda_minus))
    ///             / (2 pi sigma^2 lambda),
    /// zero outside the open support interval.
    pub fn density(&self, lambda: f64) -> f64 {
        if lambda <= self.lambda_minus || lambda >= self.lambda_plus {
            return 0.0;
        }
        let prod = (self.lambda_plus - lambda) * (lambda - self.lambda_minus);
        self.q_factor * prod.sqrt() / (2.0 * std::f64::consts::PI * self.sigma_sq * lambda)
    }
}

/// Convenience form of [`MpBounds::density`].
pub fn mp_density(lambda: f64, q_factor: f64, sigma_sq: f64) -> Result<f64> {
    Ok(mp_bounds(q_factor, sigma_sq)?.density(lambda))
}

/// Indices of bulk (inside the closed MP interval) and deviating eigenvalues.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BulkPartition {
    pub bulk_indices: Vec<usize>,
    pub deviating_indices: Vec<usize>,
    pub n_below: usize,
    pub n_above: usize,
}

/// Splits eigenvalues into bulk and deviating sets against the closed
/// interval [lambda_minus, lambda_plus].
pub fn classify_eigenvalues(spec: &SpectralDecomposition, bounds: &MpBounds) -> BulkPartition {
    let mut bulk = Vec::new();
    let mut deviating = Vec::new();
    let (mut below, mut above) = (0, 0);
    for (i, &l) in spec.eigenvalues().iter().enumerate() {
        if l < bounds.lambda_minus {
            below += 1;
            deviating.push(i);
        } else if l > bounds.lambda_plus {
            above += 1;
            deviating.push(i);
        } else {
            bulk.push(i);
        }
    }
    BulkPartition {
        bulk_indices: bulk,
        deviating_indices: deviating,
        n_below: below,
        n_above: above,
    }
}

/// Components of eigenvector `index` scaled by sqrt(N), making bulk
/// eigenvectors comparable to the standard normal reference (unit-norm
/// vectors have component variance 1/N).
pub fn scaled_components(spec: &SpectralDecomposition, index: usize) -> Result<Vec<f64>> {
    if index >= spec.n() {
        return Err(Error::Domain(format!(
            "eigenvector index {index} out of range for n = {}",
            spec.n()
        )));
    }
    let scale = (spec.n() as f64).sqrt();
    Ok(spec.eigenvector(index).iter().map(|u| u * scale).collect())
}

/// Pools sqrt(N)-scaled components of the given eigenvectors, in index order.
pub fn pooled_scaled_components(spec: &SpectralDecomposition, indices: &[usize]) -> Vec<f64> {
    let scale = (spec.n() as f64).sqrt();
    let mut out = Vec::with_capacity(indices.len() * spec.n());
    for &k in indices {
        out.extend(spec.eigenvector(k).iter().map(|u| u * scale));
    }
    out
}

/// Default significance level for KS comparisons.
pub const DEFAULT_KS_ALPHA: f64 = 0.05;

/// Two-sample Kolmogorov-Smirnov result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    /// sup |ECDF_a - ECDF_b| in [0, 1].
    pub statistic: f64,
    /// Asymptotic p-value from the Kolmogorov distribution with effective
    /// size n_a n_b / (n_a + n_b).
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
}

impl KsResult {
    /// Whether the test rejects the same-distribution null at level `alpha`.
    pub fn rejects_at(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }

    /// Rejection at [`DEFAULT_KS_ALPHA`].
    pub fn rejects(&self) -> bool {
        self.rejects_at(DEFAULT_KS_ALPHA)
    }
}

/// Two-sample KS test. Symmetric in its arguments.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("KS test needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Domain("KS samples must be finite".into()));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    ys.sort_unstable_by(f64::total_cmp);

    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0_usize, 0_usize);
    let mut statistic = 0.0_f64;
    while i < xs.len() || j < ys.len() {
        let x = match (xs.get(i), ys.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => break,
        };
        while i < xs.len() && xs[i] == x {
            i += 1;
        }
        while j < ys.len() && ys[j] == x {
            j += 1;
        }
        let diff = (i as f64 / n - j as f64 / m).abs();
        if diff > statistic {
            statistic = diff;
        }
    }

    let n_eff = n * m / (n + m);
    let p_value = kolmogorov_sf(n_eff.sqrt() * statistic);
    Ok(KsResult {
        statistic,
        p_value,
        n_a: xs.len(),
        n_b: ys.len(),
    })
}

/// Survival function of the Kolmogorov distribution,
/// Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2),
/// truncated at 100 terms or a term below 1e-12. Q(x) = 1 for x <= 0.2,
/// where the true deficit is below 1e-13 and the alternating series is slow.
fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.2 {
        return 1.0;
    }
    let mut sum = 0.0_f64;
    for k in 1..=100_u32 {
        let term = (-2.0 * (k as f64) * (k as f64) * x * x).exp();
        if k % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Deterministic standard-normal reference sample used for comparing bulk
/// eigenvector components against the Gaussian prediction.
pub fn standard_normal_sample(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    (0..n).map(|_| normal.sample(&mut rng)).collect()
}

/// Inverse participation ratios, aligned with eigenvalue order.
#[derive(Debug, Clone, PartialEq)]
pub struct IprSeries {
    pub values: Vec<f64>,
    pub mean_ipr: f64,
}

/// IPR of one unit-norm vector: the sum of fourth powers of its components.
/// 1/N for a fully delocalized vector, 1 for a basis vector.
pub fn ipr_of(components: &[f64]) -> f64 {
    components
        .iter()
        .map(|u| {
            let s = u * u;
            s * s
        })
        .sum()
}

/// IPR per eigenvector (on unit-norm vectors, not the scaled ones) plus the
/// mean over all eigenvectors.
pub fn ipr(spec: &SpectralDecomposition) -> IprSeries {
    let values: Vec<f64> = (0..spec.n()).map(|k| ipr_of(spec.eigenvector(k))).collect();
    let mean_ipr = values.iter().sum::<f64>() / values.len() as f64;
    IprSeries { values, mean_ipr }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::correlation_matrix;
    use crate::market_data::synthesize_panel;
    use crate::returns::{log_returns, normalize_returns};

    fn corr_of(seed: u64, n: usize, t: usize, factors: usize, scale: f64) -> CorrelationMatrix {
        let panel = synthesize_panel(seed, n, t, factors, scale).unwrap();
        let g = normalize_returns(&log_returns(&panel).unwrap()).unwrap();
        correlation_matrix(&g).unwrap()
    }

    fn identity_corr(n: usize) -> CorrelationMatrix {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        CorrelationMatrix::from_values((0..n).map(|i| format!("A{i}")).collect(), v).unwrap()
    }

    #[test]
    fn identity_matrix_has_unit_eigenvalues() {
        let spec = eigendecompose(&identity_corr(3)).unwrap();
        for &l in spec.eigenvalues() {
            assert!((l - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_2x2_eigenpairs() {
        let rho = 0.6;
        let c =
            CorrelationMatrix::from_values(vec!["A".into(), "B".into()], vec![1.0, rho, rho, 1.0])
                .unwrap();
        let spec = eigendecompose(&c).unwrap();
        assert_eq!(spec.eigenvalues()[0], 1.0 + rho);
        assert_eq!(spec.eigenvalues()[1], 1.0 - rho);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = spec.eigenvector(0);
        let v1 = spec.eigenvector(1);
        assert!((v0[0] - s).abs() < 1e-15 && (v0[1] - s).abs() < 1e-15);
        assert!((v1[0] - s).abs() < 1e-15 && (v1[1] + s).abs() < 1e-15);
    }

    /// Reconstruction oracle: V^T Lambda V must reproduce C entrywise.
    #[test]
    fn reconstruction_of_random_gram_matrix() {
        let c = corr_of(17, 8, 40, 1, 0.5);
        let spec = eigendecompose(&c).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let mut acc = 0.0;
                for k in 0..8 {
                    acc += spec.eigenvalues()[k] * spec.eigenvector(k)[i] * spec.eigenvector(k)[j];
                }
                assert!(
                    (acc - c.get(i, j)).abs() <= 1e-9,
                    "({i},{j}): {acc} vs {}",
                    c.get(i, j)
                );
            }
        }
    }

    #[test]
    fn decomposition_is_bitwise_deterministic() {
        let c = corr_of(23, 12, 60, 2, 0.6);
        let a = eigendecompose(&c).unwrap();
        let b = eigendecompose(&c).unwrap();
        assert_eq!(a, b);
        for (x, y) in a.eigenvalues().iter().zip(b.eigenvalues()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn trace_identity_holds() {
        let c = corr_of(31, 15, 50, 1, 0.7);
        let spec = eigendecompose(&c).unwrap();
        let trace: f64 = spec.eigenvalues().iter().sum();
        assert!((trace - 15.0).abs() < 1e-8 * 15.0);
    }

    #[test]
    fn mp_bounds_reference_value_and_exact_points() {
        let b = mp_bounds(2.5, 1.0).unwrap();
        assert!((b.lambda_minus - 0.135).abs() < 1e-3);
        assert!((b.lambda_plus - 2.665).abs() < 1e-3);

        let b = mp_bounds(1.0, 1.0).unwrap();
        assert_eq!(b.lambda_minus, 0.0);
        assert_eq!(b.lambda_plus, 4.0);

        let b = mp_bounds(4.0, 1.0).unwrap();
        assert_eq!(b.lambda_minus, 0.25);
        assert_eq!(b.lambda_plus, 2.25);

        assert!(mp_bounds(0.5, 1.0).is_err());
        assert!(mp_bounds(2.0, 0.0).is_err());
    }

    #[test]
    fn mp_density_support_and_endpoints() {
        let b = mp_bounds(2.5, 1.0).unwrap();
        assert_eq!(b.density(b.lambda_minus - 0.01), 0.0);
        assert_eq!(b.density(b.lambda_plus + 0.01), 0.0);
        assert_eq!(b.density(b.lambda_minus), 0.0);
        assert_eq!(b.density(b.lambda_plus), 0.0);
        assert!(b.density(1.0) > 0.0);
    }

    /// Quadrature oracle: integrate the density with the substitution
    /// lambda = lambda_- + (lambda_+ - lambda_-) sin^2(theta), which removes
    /// the square-root edge singularities, then Simpson's rule.
    #[test]
    fn mp_density_integrates_to_one() {
        for q in [1.5, 2.5, 5.0] {
            let b = mp_bounds(q, 1.0).unwrap();
            let integral = mp_quadrature(&b, 20_001);
            assert!(
                (integral - 1.0).abs() < 1e-6,
                "Q = {q}: integral = {integral}"
            );
        }
    }

    fn mp_quadrature(b: &MpBounds, n_points: usize) -> f64 {
        let width = b.lambda_plus - b.lambda_minus;
        let h = std::f64::consts::FRAC_PI_2 / (n_points - 1) as f64;
        let f = |theta: f64| {
            let s = theta.sin();
            let c = theta.cos();
            let lambda = b.lambda_minus + width * s * s;
            // d lambda = 2 width sin cos d theta
            b.density(lambda) * 2.0 * width * s * c
        };
        let mut acc = 0.0;
        for k in 0..n_points - 1 {
            let t0 = k as f64 * h;
            let t1 = t0 + h;
            acc += (f(t0) + 4.0 * f(0.5 * (t0 + t1)) + f(t1)) * h / 6.0;
        }
        acc
    }

    #[test]
    fn classify_against_bounds() {
        let b = mp_bounds(2.5, 1.0).unwrap();
        let spec = SpectralDecomposition::from_parts(
            vec![3.0, 1.0, 0.05],
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
        )
        .unwrap();
        let p = classify_eigenvalues(&spec, &b);
        assert_eq!(p.deviating_indices, vec![0, 2]);
        assert_eq!(p.bulk_indices, vec![1]);
        assert_eq!(p.n_above, 1);
        assert_eq!(p.n_below, 1);

        let spec = eigendecompose(&identity_corr(4)).unwrap();
        let p = classify_eigenvalues(&spec, &b);
        assert_eq!(p.bulk_indices.len(), 4);
        assert!(p.deviating_indices.is_empty());
    }

    /// A one-factor panel must push its top eigenvalue above lambda_plus.
    #[test]
    fn factor_model_produces_deviating_market_mode() {
        let c = corr_of(7, 20, 100, 1, 0.8);
        let spec = eigendecompose(&c).unwrap();
        let b = mp_bounds(100.0 / 20.0, 1.0).unwrap();
        assert!(
            spec.lambda_max() > b.lambda_plus,
            "lambda_max = {} vs lambda_plus = {}",
            spec.lambda_max(),
            b.lambda_plus
        );
    }

    #[test]
    fn scaled_components_analytic_cases() {
        let uniform = SpectralDecomposition::from_parts(
            vec![1.0, 1.0, 1.0, 1.0],
            vec![
                vec![0.5, 0.5, 0.5, 0.5],
                vec![0.5, -0.5, 0.5, -0.5],
                vec![0.5, 0.5, -0.5, -0.5],
                vec![0.5, -0.5, -0.5, 0.5],
            ],
        )
        .unwrap();
        let scaled = scaled_components(&uniform, 0).unwrap();
        assert_eq!(scaled, vec![1.0, 1.0, 1.0, 1.0]);

        let basis = eigendecompose(&identity_corr(4)).unwrap();
        let scaled = scaled_components(&basis, 0).unwrap();
        assert_eq!(scaled.iter().filter(|v| **v == 2.0).count(), 1);
        assert_eq!(scaled.iter().filter(|v| **v == 0.0).count(), 3);

        assert!(scaled_components(&basis, 4).is_err());
    }

    /// Null-model oracle: a bulk eigenvector of an i.i.d. Gaussian panel
    /// should be indistinguishable from the standard normal at alpha = 0.01.
    #[test]
    fn bulk_eigenvector_passes_gaussian_ks() {
        let c = corr_of(7, 50, 125, 0, 0.0);
        let spec = eigendecompose(&c).unwrap();
        let b = mp_bounds(2.5, 1.0).unwrap();
        let part = classify_eigenvalues(&spec, &b);
        let mid = part.bulk_indices[part.bulk_indices.len() / 2];
        let sample = scaled_components(&spec, mid).unwrap();
        let reference = standard_normal_sample(4242, 10_000);
        let ks = ks_two_sample(&sample, &reference).unwrap();
        assert!(ks.p_value >= 0.01, "p = {}", ks.p_value);
    }

    #[test]
    fn ks_identical_samples() {
        let a = [0.3, -1.2, 0.8, 2.0];
        let ks = ks_two_sample(&a, &a).unwrap();
        assert_eq!(ks.statistic, 0.0);
        assert_eq!(ks.p_value, 1.0);
    }

    #[test]
    fn ks_separated_distributions_reject() {
        let a = standard_normal_sample(1, 100);
        let b: Vec<f64> = standard_normal_sample(2, 100)
            .iter()
            .map(|v| v + 5.0)
            .collect();
        let ks = ks_two_sample(&a, &b).unwrap();
        assert!(ks.statistic > 0.95, "stat = {}", ks.statistic);
        assert!(ks.p_value < 1e-6);
        assert!(ks.rejects());
        assert!(ks.rejects_at(0.01));
    }

    /// Hand-computed sup distance: {1,2,3} vs {1,2,10} separate only on
    /// [3, 10), where ECDFs read 1 and 2/3.
    #[test]
    fn ks_hand_computed_statistic() {
        let ks = ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 10.0]).unwrap();
        assert!((ks.statistic - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ks_is_symmetric_and_validates_input() {
        let a = standard_normal_sample(3, 57);
        let b: Vec<f64> = standard_normal_sample(4, 91)
            .iter()
            .map(|v| v * 1.3)
            .collect();
        let ab = ks_two_sample(&a, &b).unwrap();
        let ba = ks_two_sample(&b, &a).unwrap();
        assert_eq!(ab.statistic.to_bits(), ba.statistic.to_bits());
        assert_eq!(ab.p_value.to_bits(), ba.p_value.to_bits());
        assert!(ks_two_sample(&[], &a).is_err());
        assert!(ks_two_sample(&a, &[f64::NAN]).is_err());
    }

    #[test]
    fn ipr_extremes() {
        assert_eq!(ipr_of(&[0.5, 0.5, 0.5, 0.5]), 0.25);
        assert_eq!(ipr_of(&[1.0, 0.0, 0.0]), 1.0);
        let n = 100;
        let u = 1.0 / (n as f64).sqrt();
        let uniform: Vec<f64> = vec![u; n];
        assert!((ipr_of(&uniform) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn ipr_bounds_hold_for_every_eigenvector() {
        let c = corr_of(5, 30, 90, 2, 0.5);
        let spec = eigendecompose(&c).unwrap();
        let series = ipr(&spec);
        let n = spec.n() as f64;
        for &v in &series.values {
            assert!(v >= 1.0 / n - 1e-12 && v <= 1.0 + 1e-12);
        }
        let mean: f64 = series.values.iter().sum::<f64>() / series.values.len() as f64;
        assert!((series.mean_ipr - mean).abs() < 1e-15);
    }
}
