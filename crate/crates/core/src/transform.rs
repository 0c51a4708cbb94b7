//! Whitening, coloring and perturbed coloring of feature maps.
//!
//! With `Fc` the centered content feature and `(Dc, Ec)`, `(Ds, Es)` the
//! truncated eigenpairs of the content and style Grams:
//!
//! ```text
//! whiten:           F̂c   = Ec · Dc^{-1/2} · Ecᵀ · Fc
//! color:            F̂cs  = Es · Ds^{1/2}  · Esᵀ · F̂c
//! perturbed color:  F̂csn = Es · Ds^{1/2}  · Z · Esᵀ · F̂c      (Z Zᵀ = I)
//! ```
//!
//! Because `Z Zᵀ = I`, `F̂csn F̂csnᵀ = Es Ds Esᵀ` whenever `F̂c F̂cᵀ = I`: every
//! orthogonal `Z` yields a different feature map with the same Gram matrix.

use crate::dense;
use crate::error::{Error, Result};
use crate::linalg::{
    orthogonal_noise, sym_eig, EigenFactorization, NoiseSpec, OrthogonalMatrix, DEFAULT_THRESHOLD,
};
use crate::tensor::{center, ensure_same_shape, gram, recenter, FeatureMap};

/// Parameters of one perturbed whitening-and-coloring pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PwctParams {
    /// Diversity strength: weight of the perturbed coloring.
    pub lambda: f64,
    /// Stylization strength: weight of the styled feature against the content.
    pub alpha: f64,
    pub content_threshold: f64,
    pub style_threshold: f64,
    pub noise: NoiseSpec,
}

impl Default for PwctParams {
    fn default() -> Self {
        PwctParams {
            lambda: 0.6,
            alpha: 0.6,
            content_threshold: DEFAULT_THRESHOLD,
            style_threshold: DEFAULT_THRESHOLD,
            noise: NoiseSpec::standard_normal(0),
        }
    }
}

impl PwctParams {
    pub fn validate(&self) -> Result<()> {
        check_weight("lambda", self.lambda)?;
        check_weight("alpha", self.alpha)?;
        for (name, t) in [
            ("content_threshold", self.content_threshold),
            ("style_threshold", self.style_threshold),
        ] {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and non-negative, got {t}"
                )));
            }
        }
        self.noise.validate()
    }
}

fn check_weight(name: &str, w: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidParameter(format!(
            "{name} must lie in [0, 1], got {w}"
        )));
    }
    Ok(())
}

/// Ranks seen during a [`pwct_detailed`] call.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PwctDiagnostics {
    pub channels: usize,
    pub content_rank: usize,
    pub style_rank: usize,
}

impl PwctDiagnostics {
    /// The style Gram is reproduced exactly only when the whitened content
    /// has identity Gram, i.e. no content eigenvalue was truncated.
    pub fn gram_preserving(&self) -> bool {
        self.content_rank == self.channels
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PwctOutput {
    pub feature: FeatureMap,
    pub diagnostics: PwctDiagnostics,
}

fn ensure_centered(f: &FeatureMap) -> Result<()> {
    let scale = f.data().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let max_mean = f
        .channel_means()
        .into_iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if max_mean > 1e-9 * scale {
        return Err(Error::NotCentered { max_mean });
    }
    Ok(())
}

/// Left-multiplies every column of `f` by the `C × C` matrix `m`.
fn apply(m: &[f64], f: &FeatureMap) -> Result<FeatureMap> {
    let c = f.channels();
    f.with_data(dense::matmul(m, f.data(), c, c, f.positions()))
}

fn whiten_with(fc_centered: &FeatureMap, content: &EigenFactorization) -> Result<FeatureMap> {
    let w = content.spectral_map(|d| 1.0 / d.sqrt());
    apply(&w, fc_centered)
}

/// Whitening transform of a centered content feature.
///
/// With no truncation the result has identity Gram; with `k > 0` truncated
/// eigenvalues its Gram is the rank-`r` projector `Ec · Ecᵀ`. The centering
/// check allows channel means up to `1e-9 · max(1, max |value|)`.
pub fn whiten(fc_centered: &FeatureMap, threshold: f64) -> Result<FeatureMap> {
    ensure_centered(fc_centered)?;
    let content = sym_eig(&gram(fc_centered), threshold)?;
    whiten_with(fc_centered, &content)
}

fn ensure_channels(f: &FeatureMap, style: &EigenFactorization) -> Result<()> {
    if f.channels() != style.dim() {
        return Err(Error::DimensionMismatch {
            context: "feature channels vs style dimension",
            expected: style.dim(),
            found: f.channels(),
        });
    }
    Ok(())
}

/// `Es · Ds^{1/2} · Esᵀ`.
fn coloring_matrix(style: &EigenFactorization) -> Vec<f64> {
    style.spectral_map(f64::sqrt)
}

/// `Es · Ds^{1/2} · Z · Esᵀ`.
fn perturbed_coloring_matrix(style: &EigenFactorization, z: &OrthogonalMatrix) -> Result<Vec<f64>> {
    let r = style.rank();
    if z.dim() != r {
        return Err(Error::DimensionMismatch {
            context: "noise dimension vs style rank",
            expected: r,
            found: z.dim(),
        });
    }
    Ok(sandwich(style, z.data()))
}

/// `Es · Ds^{1/2} · M · Esᵀ` for an `r × r` matrix `M`.
fn sandwich(style: &EigenFactorization, inner: &[f64]) -> Vec<f64> {
    let (c, r) = (style.dim(), style.rank());
    let scaled = style.scaled_vectors(f64::sqrt);
    let mixed = dense::matmul(&scaled, inner, c, r, r);
    dense::matmul_bt(&mixed, style.eigenvectors(), c, r, c)
}

/// Coloring transform: imposes the style statistics on a whitened feature.
pub fn color(fc_hat: &FeatureMap, style: &EigenFactorization) -> Result<FeatureMap> {
    ensure_channels(fc_hat, style)?;
    apply(&coloring_matrix(style), fc_hat)
}

/// Coloring with orthogonal noise `Z` inserted between `Ds^{1/2}` and `Esᵀ`.
pub fn perturbed_color(
    fc_hat: &FeatureMap,
    style: &EigenFactorization,
    z: &OrthogonalMatrix,
) -> Result<FeatureMap> {
    ensure_channels(fc_hat, style)?;
    apply(&perturbed_coloring_matrix(style, z)?, fc_hat)
}

/// `w · a + (1 − w) · b`, returning `a` or `b` untouched at the endpoints.
fn mix(a: &FeatureMap, b: &FeatureMap, w: f64) -> Result<FeatureMap> {
    ensure_same_shape(a, b)?;
    if w == 1.0 {
        return Ok(a.clone());
    }
    if w == 0.0 {
        return Ok(b.clone());
    }
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| w * x + (1.0 - w) * y)
        .collect();
    a.with_data(data)
}

/// `λ · F̂csn + (1 − λ) · F̂cs`.
pub fn blend_diversity(f_csn: &FeatureMap, f_cs: &FeatureMap, lambda: f64) -> Result<FeatureMap> {
    check_weight("lambda", lambda)?;
    mix(f_csn, f_cs, lambda)
}

/// `α · styled + (1 − α) · content`, where `content` is the original
/// (uncentered) content feature.
pub fn blend_content(styled: &FeatureMap, content: &FeatureMap, alpha: f64) -> Result<FeatureMap> {
    check_weight("alpha", alpha)?;
    mix(styled, content, alpha)
}

/// Perturbed whitening and coloring transform.
pub fn pwct(fc: &FeatureMap, fs: &FeatureMap, params: &PwctParams) -> Result<FeatureMap> {
    pwct_detailed(fc, fs, params).map(|out| out.feature)
}

/// [`pwct`] plus the content and style ranks.
///
/// Steps: center both features, whiten the content, factorize the centered
/// style Gram, draw `Z` sized to the style rank, color with the blend
/// `λ · (Es Ds^{1/2} Z Esᵀ) + (1 − λ) · (Es Ds^{1/2} Esᵀ)`, add the style
/// means back, and blend with the content by `α`. The blend is formed once
/// as `Es Ds^{1/2} (λZ + (1 − λ)I) Esᵀ` and applied in a single product,
/// which equals blending the two colored features.
/// At `λ = 0` no noise is drawn and the result is exactly plain WCT.
pub fn pwct_detailed(fc: &FeatureMap, fs: &FeatureMap, params: &PwctParams) -> Result<PwctOutput> {
    params.validate()?;
    if fc.channels() != fs.channels() {
        return Err(Error::DimensionMismatch {
            context: "content vs style channels",
            expected: fc.channels(),
            found: fs.channels(),
        });
    }
    let channels = fc.channels();
    let (fc_centered, _) = center(fc);
    let (fs_centered, style_mean) = center(fs);

    let content = sym_eig(&gram(&fc_centered), params.content_threshold)?;
    let fc_hat = whiten_with(&fc_centered, &content)?;
    let style = sym_eig(&gram(&fs_centered), params.style_threshold)?;

    let diagnostics = PwctDiagnostics {
        channels,
        content_rank: content.rank(),
        style_rank: style.rank(),
    };
    if !diagnostics.gram_preserving() && params.lambda > 0.0 {
        log::warn!(
            "content Gram truncated to rank {} of {channels} (style rank {}); \
             perturbed output does not reproduce the style Gram exactly",
            diagnostics.content_rank,
            diagnostics.style_rank,
        );
    }

    let transform = if params.lambda == 0.0 {
        coloring_matrix(&style)
    } else {
        let z = orthogonal_noise(style.rank(), &params.noise)?;
        if params.lambda == 1.0 {
            perturbed_coloring_matrix(&style, &z)?
        } else {
            // λ·Es Ds^{1/2} Z Esᵀ + (1 − λ)·Es Ds^{1/2} Esᵀ = Es Ds^{1/2} (λZ + (1 − λ)I) Esᵀ
            let (l, r) = (params.lambda, style.rank());
            let mut inner: Vec<f64> = z.data().iter().map(|v| l * v).collect();
            for i in 0..r {
                inner[i * r + i] += 1.0 - l;
            }
            sandwich(&style, &inner)
        }
    };
    let styled = recenter(&apply(&transform, &fc_hat)?, &style_mean)?;
    let feature = blend_content(&styled, fc, params.alpha)?;
    Ok(PwctOutput {
        feature,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_THRESHOLD;
    use crate::rng::SeededRng;
    use crate::tensor::GramMatrix;

    fn random_map(c: usize, n: usize, seed: u64) -> FeatureMap {
        let mut rng = SeededRng::new(seed);
        let data = (0..c * n).map(|_| rng.standard_normal()).collect();
        FeatureMap::new(c, 1, n, data).unwrap()
    }

    fn assert_identity(g: &GramMatrix, tol: f64) {
        let n = g.dim();
        for i in 0..n {
            for j in 0..n {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (g.get(i, j) - t).abs() <= tol,
                    "({i},{j}) = {}",
                    g.get(i, j)
                );
            }
        }
    }

    #[test]
    fn whiten_diagonal_closed_form() {
        let f = FeatureMap::from_rows(&[[3.0, -3.0], [0.0, 0.0]]).unwrap();
        let w = whiten(&f, DEFAULT_THRESHOLD).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expected = [h, -h, 0.0, 0.0];
        for (a, b) in w.data().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn whiten_keeps_white_input() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let f = FeatureMap::from_rows(&[[h, -h, 0.0, 0.0], [0.0, 0.0, h, -h]]).unwrap();
        let w = whiten(&f, DEFAULT_THRESHOLD).unwrap();
        for (a, b) in w.data().iter().zip(f.data()) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn whiten_random_full_rank() {
        let (f, _) = center(&random_map(4, 10, 17));
        let w = whiten(&f, DEFAULT_THRESHOLD).unwrap();
        assert_identity(&gram(&w), 1e-10);
    }

    #[test]
    fn whiten_truncated_gives_projector() {
        // Four channels spanned by two centered directions.
        let (base, _) = center(&random_map(2, 12, 2));
        let mut rows: Vec<Vec<f64>> = (0..2).map(|c| base.row(c).to_vec()).collect();
        rows.push(
            base.row(0)
                .iter()
                .zip(base.row(1))
                .map(|(a, b)| a + b)
                .collect(),
        );
        rows.push(
            base.row(0)
                .iter()
                .zip(base.row(1))
                .map(|(a, b)| a - 2.0 * b)
                .collect(),
        );
        let f = FeatureMap::from_rows(&rows).unwrap();
        let fact = sym_eig(&gram(&f), DEFAULT_THRESHOLD).unwrap();
        assert_eq!(fact.rank(), 2);
        let w = whiten(&f, DEFAULT_THRESHOLD).unwrap();
        let projector = fact.spectral_map(|_| 1.0);
        for (a, b) in gram(&w).data().iter().zip(&projector) {
            assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn whiten_errors() {
        let uncentered = FeatureMap::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(matches!(
            whiten(&uncentered, 1e-5),
            Err(Error::NotCentered { .. })
        ));
        let zero = FeatureMap::from_rows(&[[0.0, 0.0]]).unwrap();
        assert!(matches!(whiten(&zero, 1e-5), Err(Error::Degenerate(_))));
    }

    #[test]
    fn color_identity_and_scalar() {
        let f = random_map(3, 6, 4);
        let eye = sym_eig(&GramMatrix::identity(3), 0.0).unwrap();
        assert_eq!(color(&f, &eye).unwrap(), f);

        let four = sym_eig(&GramMatrix::diagonal(&[4.0]).unwrap(), 0.0).unwrap();
        let x = FeatureMap::from_rows(&[[1.0, -1.0]]).unwrap();
        assert_eq!(color(&x, &four).unwrap().data(), &[2.0, -2.0]);
        assert!(color(&random_map(2, 3, 1), &four).is_err());
    }

    #[test]
    fn color_imposes_style_gram() {
        let (fc, _) = center(&random_map(5, 40, 8));
        let (fs, _) = center(&random_map(5, 30, 9));
        let style = sym_eig(&gram(&fs), DEFAULT_THRESHOLD).unwrap();
        let out = color(&whiten(&fc, DEFAULT_THRESHOLD).unwrap(), &style).unwrap();
        let target = style.reconstruct();
        assert!(gram(&out).relative_error(&target).unwrap() <= 1e-8);
    }

    #[test]
    fn identity_noise_equals_plain_coloring() {
        let (fc, _) = center(&random_map(6, 20, 1));
        let (fs, _) = center(&random_map(6, 25, 2));
        let style = sym_eig(&gram(&fs), DEFAULT_THRESHOLD).unwrap();
        let fc_hat = whiten(&fc, DEFAULT_THRESHOLD).unwrap();
        let z = OrthogonalMatrix::identity(style.rank());
        assert_eq!(
            perturbed_color(&fc_hat, &style, &z).unwrap(),
            color(&fc_hat, &style).unwrap()
        );
    }

    #[test]
    fn quarter_turn_noise_two_channels() {
        let (fc, _) = center(&random_map(2, 8, 31));
        let (fs, _) = center(&random_map(2, 8, 32));
        let style = sym_eig(&gram(&fs), DEFAULT_THRESHOLD).unwrap();
        let fc_hat = whiten(&fc, DEFAULT_THRESHOLD).unwrap();
        let z = OrthogonalMatrix::new(2, vec![0.0, 1.0, -1.0, 0.0]).unwrap();
        let plain = color(&fc_hat, &style).unwrap();
        let noisy = perturbed_color(&fc_hat, &style, &z).unwrap();
        assert!(gram(&noisy).distance(&gram(&plain)).unwrap() <= 1e-10);
        let max_diff = noisy
            .data()
            .iter()
            .zip(plain.data())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(max_diff > 0.1, "{max_diff}");
    }

    #[test]
    fn noise_rank_mismatch() {
        let style = sym_eig(&GramMatrix::diagonal(&[4.0, 1.0]).unwrap(), 0.0).unwrap();
        let f = random_map(2, 4, 0);
        let z = OrthogonalMatrix::identity(3);
        assert!(matches!(
            perturbed_color(&f, &style, &z),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn blend_endpoints_and_midpoint() {
        let a = FeatureMap::from_rows(&[[2.0]]).unwrap();
        let b = FeatureMap::from_rows(&[[0.0]]).unwrap();
        assert_eq!(blend_diversity(&a, &b, 0.0).unwrap(), b);
        assert_eq!(blend_diversity(&a, &b, 1.0).unwrap(), a);
        assert_eq!(blend_diversity(&a, &b, 0.5).unwrap().data(), &[1.0]);

        let s = FeatureMap::from_rows(&[[1.0]]).unwrap();
        assert_eq!(blend_content(&s, &b, 0.0).unwrap(), b);
        assert_eq!(blend_content(&s, &b, 1.0).unwrap(), s);
        assert!((blend_content(&s, &b, 0.6).unwrap().data()[0] - 0.6).abs() < 1e-16);

        assert!(blend_diversity(&a, &b, 1.5).is_err());
        let wide = FeatureMap::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(blend_content(&wide, &b, 0.5).is_err());
    }

    fn plain_wct(fc: &FeatureMap, fs: &FeatureMap, alpha: f64) -> FeatureMap {
        let (fc0, _) = center(fc);
        let (fs0, ms) = center(fs);
        let fc_hat = whiten(&fc0, DEFAULT_THRESHOLD).unwrap();
        let style = sym_eig(&gram(&fs0), DEFAULT_THRESHOLD).unwrap();
        let styled = recenter(&color(&fc_hat, &style).unwrap(), &ms).unwrap();
        blend_content(&styled, fc, alpha).unwrap()
    }

    #[test]
    fn zero_lambda_is_plain_wct() {
        let fc = random_map(6, 30, 40);
        let fs = random_map(6, 24, 41);
        let params = PwctParams {
            lambda: 0.0,
            ..PwctParams::default()
        };
        let out = pwct(&fc, &fs, &params).unwrap();
        let reference = plain_wct(&fc, &fs, params.alpha);
        assert!(out.distance(&reference).unwrap() <= 1e-12);
    }

    #[test]
    fn intermediate_lambda_matches_stepwise_composition() {
        let fc = random_map(5, 40, 50);
        let fs = random_map(5, 33, 51);
        let params = PwctParams {
            lambda: 0.35,
            alpha: 0.8,
            ..PwctParams::default()
        };
        let out = pwct(&fc, &fs, &params).unwrap();

        let (fc_centered, _) = center(&fc);
        let (fs_centered, ms) = center(&fs);
        let hat = whiten(&fc_centered, DEFAULT_THRESHOLD).unwrap();
        let style = sym_eig(&gram(&fs_centered), DEFAULT_THRESHOLD).unwrap();
        let z = orthogonal_noise(style.rank(), &params.noise).unwrap();
        let csn = perturbed_color(&hat, &style, &z).unwrap();
        let cs = color(&hat, &style).unwrap();
        let mixed = blend_diversity(&csn, &cs, params.lambda).unwrap();
        let reference = blend_content(&recenter(&mixed, &ms).unwrap(), &fc, params.alpha).unwrap();
        assert!(out.distance(&reference).unwrap() <= 1e-12);
    }

    #[test]
    fn full_strength_preserves_style_statistics() {
        let fc = random_map(8, 64, 50);
        let fs = random_map(8, 64, 51);
        let params = PwctParams {
            lambda: 1.0,
            alpha: 1.0,
            ..PwctParams::default()
        };
        let out = pwct_detailed(&fc, &fs, &params).unwrap();
        assert!(out.diagnostics.gram_preserving());
        let (centered, means) = center(&out.feature);
        let (fs0, ms) = center(&fs);
        let target = sym_eig(&gram(&fs0), DEFAULT_THRESHOLD)
            .unwrap()
            .reconstruct();
        assert!(gram(&centered).relative_error(&target).unwrap() <= 1e-8);
        for (a, b) in means.values().iter().zip(ms.values()) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn seeds_change_output_not_gram() {
        let fc = random_map(8, 64, 60);
        let fs = random_map(8, 64, 61);
        let run = |seed| {
            let params = PwctParams {
                lambda: 1.0,
                alpha: 1.0,
                noise: NoiseSpec::standard_normal(seed),
                ..PwctParams::default()
            };
            pwct(&fc, &fs, &params).unwrap()
        };
        let (a, b) = (run(1), run(2));
        assert!(a.distance(&b).unwrap() > 0.0);
        let (ga, gb) = (gram(&center(&a).0), gram(&center(&b).0));
        assert!(ga.relative_error(&gb).unwrap() <= 1e-8);
    }

    #[test]
    fn pwct_rejects_mismatch_and_bad_params() {
        let fc = random_map(3, 10, 0);
        let fs = random_map(4, 10, 1);
        assert!(matches!(
            pwct(&fc, &fs, &PwctParams::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        let params = PwctParams {
            alpha: -0.1,
            ..PwctParams::default()
        };
        assert!(matches!(
            pwct(&fc, &fc, &params),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn fewer_positions_than_channels_is_flagged() {
        let fc = random_map(6, 4, 70);
        let fs = random_map(6, 4, 71);
        let out = pwct_detailed(&fc, &fs, &PwctParams::default()).unwrap();
        assert!(!out.diagnostics.gram_preserving());
        assert!(out.diagnostics.content_rank <= 3);
    }
}
