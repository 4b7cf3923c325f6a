//! Numeric kernels for the contrastive restoration objective.
//!
//! Everything here works on caller-supplied discriminator scores, feature
//! vectors and images; no network is evaluated. Expectations are sample
//! means, and all reductions run left to right so results do not depend on
//! how a caller batches work.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::ImagePlane;

pub const DEFAULT_TAU: f64 = 0.07;

/// Vectors with a max-abs component below this count as zero-norm.
pub const MIN_NORM: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_gan: f64,
    pub lambda_nce: f64,
    pub lambda_idt: f64,
    pub tau: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_gan: 1.0,
            lambda_nce: 1.0,
            lambda_idt: 10.0,
            tau: DEFAULT_TAU,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_gan", self.lambda_gan),
            ("lambda_nce", self.lambda_nce),
            ("lambda_idt", self.lambda_idt),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invariant(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        check_tau(self.tau)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invariant(format!("temperature {tau} must be > 0")));
    }
    Ok(())
}

/// Discriminator outputs on real target images and on generated images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorScores {
    pub real: Vec<f64>,
    pub fake: Vec<f64>,
}

impl DiscriminatorScores {
    pub fn new(real: Vec<f64>, fake: Vec<f64>) -> Result<Self> {
        let s = Self { real, fake };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.real.is_empty() || self.fake.is_empty() {
            return Err(Error::invariant("discriminator score lists must be non-empty"));
        }
        if self.real.iter().chain(&self.fake).any(|v| !v.is_finite()) {
            return Err(Error::invariant("non-finite discriminator score"));
        }
        Ok(())
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Least-squares adversarial term in its printed form:
/// `mean(D(y)²) + mean((1 − D(G(x)))²)`.
pub fn lsgan_loss(scores: &DiscriminatorScores) -> Result<f64> {
    scores.validate()?;
    Ok(mean(scores.real.iter().map(|d| d * d)) + mean(scores.fake.iter().map(|d| (1.0 - d) * (1.0 - d))))
}

/// Conventional least-squares discriminator loss:
/// `½·(mean((D(y) − 1)²) + mean(D(G(x))²))`.
pub fn lsgan_d_loss(scores: &DiscriminatorScores) -> Result<f64> {
    scores.validate()?;
    Ok(0.5 * (mean(scores.real.iter().map(|d| (d - 1.0) * (d - 1.0))) + mean(scores.fake.iter().map(|d| d * d))))
}

/// Conventional least-squares generator loss: `mean((D(G(x)) − 1)²)`.
pub fn lsgan_g_loss(fake: &[f64]) -> Result<f64> {
    if fake.is_empty() {
        return Err(Error::invariant("discriminator score list must be non-empty"));
    }
    if fake.iter().any(|v| !v.is_finite()) {
        return Err(Error::invariant("non-finite discriminator score"));
    }
    Ok(mean(fake.iter().map(|d| (d - 1.0) * (d - 1.0))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AdversarialConvention {
    /// [`lsgan_loss`].
    #[default]
    Printed,
    /// [`lsgan_d_loss`].
    LeastSquaresDiscriminator,
    /// [`lsgan_g_loss`] on the fake scores.
    LeastSquaresGenerator,
}

pub fn adversarial_loss(scores: &DiscriminatorScores, convention: AdversarialConvention) -> Result<f64> {
    match convention {
        AdversarialConvention::Printed => lsgan_loss(scores),
        AdversarialConvention::LeastSquaresDiscriminator => lsgan_d_loss(scores),
        AdversarialConvention::LeastSquaresGenerator => {
            scores.validate()?;
            lsgan_g_loss(&scores.fake)
        }
    }
}

/// `v / ‖v‖₂` computed without overflow, plus the norm.
fn unit(v: &[f64]) -> Result<(Vec<f64>, f64)> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invariant("non-finite embedding component"));
    }
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale < MIN_NORM {
        return Err(Error::invariant("zero-norm embedding"));
    }
    let scaled: Vec<f64> = v.iter().map(|x| x / scale).collect();
    let n = scaled.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok((scaled.iter().map(|x| x / n).collect(), n * scale))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity `uᵀv / (‖u‖‖v‖)`.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::shape(format!("embedding dimensions {} and {}", u.len(), v.len())));
    }
    Ok(dot(&unit(u)?.0, &unit(v)?.0).clamp(-1.0, 1.0))
}

fn check_dims(query: &[f64], positive: &[f64], negatives: &[&[f64]]) -> Result<()> {
    if query.is_empty() {
        return Err(Error::shape("empty embedding"));
    }
    if negatives.is_empty() {
        return Err(Error::invariant("InfoNCE needs at least one negative"));
    }
    let k = query.len();
    if positive.len() != k || negatives.iter().any(|n| n.len() != k) {
        return Err(Error::shape(format!("all embeddings must have dimension {k}")));
    }
    Ok(())
}

/// Temperature-scaled cosine logits, positive first.
fn logits(query: &[f64], positive: &[f64], negatives: &[&[f64]], tau: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>, f64)> {
    check_tau(tau)?;
    check_dims(query, positive, negatives)?;
    let (q_hat, q_norm) = unit(query)?;
    let mut keys = Vec::with_capacity(negatives.len() + 1);
    keys.push(unit(positive)?.0);
    for n in negatives {
        keys.push(unit(n)?.0);
    }
    let logits = keys.iter().map(|k| dot(&q_hat, k).clamp(-1.0, 1.0) / tau).collect();
    Ok((logits, keys, q_hat, q_norm))
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// (N+1)-way cross-entropy of picking `positive` over `negatives` by
/// temperature-scaled cosine similarity to `query`.
pub fn infonce(query: &[f64], positive: &[f64], negatives: &[&[f64]], tau: f64) -> Result<f64> {
    let (s, _, _, _) = logits(query, positive, negatives, tau)?;
    Ok((log_sum_exp(&s) - s[0]).max(0.0))
}

/// Gradient of [`infonce`] with respect to `query`.
///
/// With softmax weights `w_i` over the logits and unit keys `k_i`,
/// `∂ℓ/∂q = Σ_i (w_i − δ_i0)·(k_i − cos_i·q̂) / (τ‖q‖)`.
pub fn infonce_grad_query(query: &[f64], positive: &[f64], negatives: &[&[f64]], tau: f64) -> Result<Vec<f64>> {
    let (s, keys, q_hat, q_norm) = logits(query, positive, negatives, tau)?;
    let lse = log_sum_exp(&s);
    let mut grad = vec![0.0; query.len()];
    for (i, (si, key)) in s.iter().zip(&keys).enumerate() {
        let coeff = (si - lse).exp() - if i == 0 { 1.0 } else { 0.0 };
        let cos = si * tau;
        for ((g, k), q) in grad.iter_mut().zip(key).zip(&q_hat) {
            *g += coeff * (k - cos * q);
        }
    }
    let denom = tau * q_norm;
    Ok(grad.into_iter().map(|g| g / denom).collect())
}

/// One layer of a feature stack: `s` locations × `c` channels, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureLayer {
    pub s: usize,
    pub c: usize,
    pub data: Vec<f64>,
}

impl FeatureLayer {
    pub fn new(s: usize, c: usize, data: Vec<f64>) -> Result<Self> {
        let layer = Self { s, c, data };
        layer.validate()?;
        Ok(layer)
    }

    fn validate(&self) -> Result<()> {
        if self.c == 0 {
            return Err(Error::shape("feature layer with zero channels"));
        }
        if self.s < 2 {
            return Err(Error::invariant(format!(
                "feature layer has {} locations; at least 2 are needed",
                self.s
            )));
        }
        if self.data.len() != self.s * self.c {
            return Err(Error::shape(format!(
                "layer declares {}x{} but holds {} values",
                self.s,
                self.c,
                self.data.len()
            )));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invariant("non-finite feature value"));
        }
        Ok(())
    }

    pub fn location(&self, s: usize) -> &[f64] {
        &self.data[s * self.c..(s + 1) * self.c]
    }
}

/// Per-layer patch features extracted from one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStack {
    pub layers: Vec<FeatureLayer>,
}

impl FeatureStack {
    pub fn new(layers: Vec<FeatureLayer>) -> Result<Self> {
        let stack = Self { layers };
        stack.validate()?;
        Ok(stack)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::invariant("feature stack has no layers"));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            layer.validate().map_err(|e| Error::invariant(format!("layer {l}: {e}")))?;
        }
        Ok(())
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.s, l.c)).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let stack: Self = serde_json::from_str(text).map_err(|e| Error::parse("feature stack", e))?;
        stack.validate()?;
        Ok(stack)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("feature stack serializes")
    }

    /// Uniform `[-1, 1)` features with the given `(s, c)` layer shapes.
    pub fn random(shapes: &[(usize, usize)], rng: &mut ChaCha8Rng) -> Result<Self> {
        let layers = shapes
            .iter()
            .map(|&(s, c)| FeatureLayer::new(s, c, (0..s * c).map(|_| uniform_pm1(rng)).collect()))
            .collect::<Result<_>>()?;
        Self::new(layers)
    }

    pub fn random_seeded(shapes: &[(usize, usize)], seed: u64) -> Result<Self> {
        Self::random(shapes, &mut ChaCha8Rng::seed_from_u64(seed))
    }
}

fn uniform_pm1(rng: &mut ChaCha8Rng) -> f64 {
    // 53 random mantissa bits
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    2.0 * u - 1.0
}

/// Patch-wise contrastive loss between an input's features and those of
/// its translation.
///
/// For every layer `l` and location `s`, the query is `generated[l][s]`, the
/// positive `source[l][s]`, and the negatives the other locations of
/// `source[l]`. Returns the sum over all `(l, s)`.
pub fn patchnce(source: &FeatureStack, generated: &FeatureStack, tau: f64) -> Result<f64> {
    source.validate()?;
    generated.validate()?;
    if source.shapes() != generated.shapes() {
        return Err(Error::shape(format!(
            "feature stacks differ: {:?} vs {:?}",
            source.shapes(),
            generated.shapes()
        )));
    }
    let mut total = 0.0;
    for (src, gen) in source.layers.iter().zip(&generated.layers) {
        for s in 0..src.s {
            let negatives: Vec<&[f64]> = (0..src.s).filter(|&o| o != s).map(|o| src.location(o)).collect();
            total += infonce(gen.location(s), src.location(s), &negatives, tau)?;
        }
    }
    Ok(total)
}

/// Mean absolute difference between a prediction and its target.
pub fn identity_l1(predicted: &ImagePlane, target: &ImagePlane) -> Result<f64> {
    predicted.ensure_same_shape(target)?;
    Ok(l1_mean(predicted.data(), target.data()))
}

fn l1_mean(a: &[f64], b: &[f64]) -> f64 {
    mean(a.iter().zip(b).map(|(x, y)| (x - y).abs()))
}

/// Gradient of [`identity_l1`] with respect to `predicted`, flattened in
/// sample order. Errors at a zero residual, where the loss has a kink.
pub fn identity_l1_grad(predicted: &ImagePlane, target: &ImagePlane) -> Result<Vec<f64>> {
    predicted.ensure_same_shape(target)?;
    let n = predicted.data().len() as f64;
    predicted
        .data()
        .iter()
        .zip(target.data())
        .enumerate()
        .map(|(i, (p, t))| {
            let r = p - t;
            if r == 0.0 {
                Err(Error::invariant(format!("zero residual at sample {i}: L1 is not differentiable")))
            } else {
                Ok(r.signum() / n)
            }
        })
        .collect()
}

/// Weighted sum of the three objective terms.
pub fn full_objective(gan: f64, nce: f64, idt: f64, weights: &LossWeights) -> Result<f64> {
    weights.validate()?;
    if ![gan, nce, idt].iter().all(|v| v.is_finite()) {
        return Err(Error::invariant("objective components must be finite"));
    }
    Ok(weights.lambda_gan * gan + weights.lambda_nce * nce + weights.lambda_idt * idt)
}

/// Central-difference gradient of `f` at `point`.
pub fn finite_difference_gradient(f: impl Fn(&[f64]) -> Result<f64>, point: &[f64], eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(Error::invariant("finite-difference step must be > 0"));
    }
    let mut x = point.to_vec();
    let mut grad = Vec::with_capacity(point.len());
    for i in 0..point.len() {
        let orig = x[i];
        x[i] = orig + eps;
        let up = f(&x)?;
        x[i] = orig - eps;
        let down = f(&x)?;
        x[i] = orig;
        grad.push((up - down) / (2.0 * eps));
    }
    Ok(grad)
}

/// Central-difference derivative of `f` along `direction`.
pub fn directional_derivative(f: impl Fn(&[f64]) -> Result<f64>, point: &[f64], direction: &[f64], eps: f64) -> Result<f64> {
    if direction.len() != point.len() {
        return Err(Error::shape("direction and point differ in length"));
    }
    let step = |sign: f64| -> Vec<f64> { point.iter().zip(direction).map(|(p, d)| p + sign * eps * d).collect() };
    Ok((f(&step(1.0))? - f(&step(-1.0))?) / (2.0 * eps))
}

/// Largest deviation between `analytic` and a central-difference gradient,
/// relative to the largest analytic component.
pub fn grad_check(f: impl Fn(&[f64]) -> Result<f64>, analytic: &[f64], point: &[f64], eps: f64) -> Result<f64> {
    if analytic.len() != point.len() {
        return Err(Error::shape("analytic gradient and point differ in length"));
    }
    let numeric = finite_difference_gradient(f, point, eps)?;
    let scale = analytic.iter().fold(0.0f64, |m, g| m.max(g.abs())).max(f64::MIN_POSITIVE);
    Ok(analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / scale)
        .fold(0.0, f64::max))
}

/// [`grad_check`] of the InfoNCE query gradient.
pub fn grad_check_infonce(query: &[f64], positive: &[f64], negatives: &[&[f64]], tau: f64, eps: f64) -> Result<f64> {
    let norm = unit(query)?.1;
    if norm <= 2.0 * eps * (query.len() as f64).sqrt() {
        return Err(Error::invariant("query norm too small for finite differences"));
    }
    let analytic = infonce_grad_query(query, positive, negatives, tau)?;
    grad_check(|q| infonce(q, positive, negatives, tau), &analytic, query, eps)
}

/// [`grad_check`] of the identity-loss prediction gradient.
pub fn grad_check_identity(predicted: &ImagePlane, target: &ImagePlane, eps: f64) -> Result<f64> {
    let analytic = identity_l1_grad(predicted, target)?;
    if let Some(i) = predicted
        .data()
        .iter()
        .zip(target.data())
        .position(|(p, t)| (p - t).abs() <= eps)
    {
        return Err(Error::invariant(format!("residual at sample {i} within eps of the L1 kink")));
    }
    let y = target.data();
    grad_check(|p| Ok(l1_mean(p, y)), &analytic, predicted.data(), eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scores(real: &[f64], fake: &[f64]) -> DiscriminatorScores {
        DiscriminatorScores::new(real.to_vec(), fake.to_vec()).unwrap()
    }

    #[test]
    fn lsgan_printed_examples() {
        assert_eq!(lsgan_loss(&scores(&[0.0], &[1.0])).unwrap(), 0.0);
        assert_eq!(lsgan_loss(&scores(&[1.0], &[0.0])).unwrap(), 2.0);
        let v = lsgan_loss(&scores(&[0.3, -0.1], &[0.8])).unwrap();
        let oracle = {
            let mut r = 0.0;
            for x in [0.3f64, -0.1] {
                r += x * x;
            }
            r / 2.0 + (1.0f64 - 0.8).powi(2)
        };
        assert!((v - 0.09).abs() < 1e-15 && (v - oracle).abs() < 1e-15);
        assert!(DiscriminatorScores::new(vec![], vec![1.0]).is_err());
        assert!(DiscriminatorScores::new(vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn lsgan_conventional_variants() {
        let s = scores(&[1.0, 1.0], &[0.0]);
        assert_eq!(lsgan_d_loss(&s).unwrap(), 0.0);
        assert_eq!(lsgan_g_loss(&[1.0]).unwrap(), 0.0);
        assert_eq!(adversarial_loss(&s, AdversarialConvention::LeastSquaresGenerator).unwrap(), 1.0);
        assert_eq!(adversarial_loss(&s, AdversarialConvention::Printed).unwrap(), 2.0);
        assert!(lsgan_g_loss(&[]).is_err());
    }

    #[test]
    fn infonce_symmetric_points() {
        let v = [1.0, 0.0];
        let u = [0.0, 1.0];
        let w = [0.0, -1.0];
        assert!((infonce(&v, &u, &[&w], 0.07).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        let same = [0.3, 0.4, 0.5];
        for n in 1..=6 {
            let negs: Vec<&[f64]> = (0..n).map(|_| &same[..]).collect();
            let l = infonce(&same, &same, &negs, 0.07).unwrap();
            assert!((l - ((n + 1) as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn infonce_confident_case() {
        let l = infonce(&[1.0, 0.0], &[1.0, 0.0], &[&[0.0, 1.0]], 0.07).unwrap();
        let direct = -((1.0f64 / 0.07).exp() / ((1.0f64 / 0.07).exp() + 1.0)).ln();
        assert!((l - direct).abs() < 1e-15);
        assert!((l - (-1.0f64 / 0.07).exp()).abs() < 1e-12);
    }

    #[test]
    fn infonce_errors() {
        assert!(infonce(&[0.0, 0.0], &[1.0, 0.0], &[&[0.0, 1.0]], 0.07).is_err());
        assert!(infonce(&[1.0, 0.0], &[1.0, 0.0, 0.0], &[&[0.0, 1.0]], 0.07).is_err());
        assert!(infonce(&[1.0, 0.0], &[1.0, 0.0], &[], 0.07).is_err());
        assert!(infonce(&[1.0, 0.0], &[1.0, 0.0], &[&[0.0, 1.0]], 0.0).is_err());
    }

    #[test]
    fn infonce_survives_huge_norms() {
        let q = [1e30, -3e29, 2e29];
        let p = [2e30, 1e30, -1e30];
        let n = [-1e30, 5e29, 1e28];
        let l = infonce(&q, &p, &[&n], 0.07).unwrap();
        let small = infonce(&[1.0, -0.3, 0.2], &[2.0, 1.0, -1.0], &[&[-1.0, 0.5, 0.01]], 0.07).unwrap();
        assert!(l.is_finite());
        assert!((l - small).abs() < 1e-12);
    }

    #[test]
    fn patchnce_two_location_symmetric() {
        let layer = FeatureLayer::new(2, 3, vec![0.5, 0.5, 0.5, 0.5, 0.5, 0.5]).unwrap();
        let stack = FeatureStack::new(vec![layer]).unwrap();
        let l = patchnce(&stack, &stack, 0.07).unwrap();
        assert!((l - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn patchnce_orthogonal_locations_vanish() {
        let mut data = vec![0.0; 16];
        for s in 0..4 {
            data[s * 4 + s] = 1.0;
        }
        let stack = FeatureStack::new(vec![FeatureLayer::new(4, 4, data).unwrap()]).unwrap();
        let mut prev = f64::INFINITY;
        for tau in [0.5, 0.1, 0.07, 0.02] {
            let l = patchnce(&stack, &stack, tau).unwrap();
            assert!(l < prev);
            prev = l;
        }
        assert!(prev < 1e-20);
    }

    #[test]
    fn patchnce_shape_errors() {
        let a = FeatureStack::random_seeded(&[(3, 4)], 1).unwrap();
        let b = FeatureStack::random_seeded(&[(3, 5)], 1).unwrap();
        assert!(patchnce(&a, &b, 0.07).is_err());
        assert!(FeatureLayer::new(1, 4, vec![0.0; 4]).is_err());
        assert!(FeatureLayer::new(2, 4, vec![0.0; 7]).is_err());
        assert!(FeatureStack::new(vec![]).is_err());
    }

    #[test]
    fn feature_stack_json() {
        let stack = FeatureStack::from_json(r#"{"layers":[{"s":2,"c":2,"data":[1,0,0,1]}]}"#).unwrap();
        assert_eq!(stack.shapes(), vec![(2, 2)]);
        assert_eq!(FeatureStack::from_json(&stack.to_json()).unwrap(), stack);
        assert!(FeatureStack::from_json(r#"{"layers":[{"s":2,"c":2,"data":[1,0,0]}]}"#).is_err());
    }

    #[test]
    fn identity_examples_and_gradient() {
        let y = ImagePlane::from_fn(4, 4, |x, yy| [x as f64 / 8.0, yy as f64 / 8.0, 0.25]).unwrap();
        assert_eq!(identity_l1(&y, &y).unwrap(), 0.0);
        let shifted = y.map(|_, v| v + 0.5).unwrap();
        assert!((identity_l1(&shifted, &y).unwrap() - 0.5).abs() < 1e-15);
        let gy = y.map(|c, v| v + if c == 1 { -0.1 } else { 0.2 }).unwrap();
        assert!(grad_check_identity(&gy, &y, 1e-5).unwrap() <= 1e-6);
        assert!(identity_l1_grad(&y, &y).is_err());
        let other = ImagePlane::filled(2, 2, [0.0; 3]).unwrap();
        assert!(identity_l1(&y, &other).is_err());
    }

    #[test]
    fn objective_weighting() {
        let w = LossWeights::default();
        assert_eq!(full_objective(0.0, 0.0, 0.0, &w).unwrap(), 0.0);
        assert_eq!(full_objective(1.0, 1.0, 1.0, &w).unwrap(), 12.0);
        assert!((full_objective(0.5, 2.0, 0.1, &w).unwrap() - 3.5).abs() < 1e-15);
        assert!(full_objective(f64::NAN, 0.0, 0.0, &w).is_err());
        let bad = LossWeights { tau: 0.0, ..w };
        assert!(full_objective(1.0, 1.0, 1.0, &bad).is_err());
    }

    #[test]
    fn radial_direction_is_flat() {
        let q = [0.3, -0.7, 0.2];
        let p = [0.1, 0.9, -0.4];
        let n = [0.5, 0.5, 0.5];
        let d = directional_derivative(|v| infonce(v, &p, &[&n], 0.07), &q, &q, 1e-6).unwrap();
        assert!(d.abs() < 1e-8);
        let g = infonce_grad_query(&q, &p, &[&n], 0.07).unwrap();
        assert!(dot(&g, &q).abs() < 1e-12);
    }

    #[test]
    fn grad_check_rejects_tiny_query() {
        assert!(grad_check_infonce(&[1e-9, 0.0], &[1.0, 0.0], &[&[0.0, 1.0]], 0.07, 1e-6).is_err());
    }

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, 3).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
    }

    proptest! {
        #[test]
        fn prop_infonce_nonnegative_and_scale_invariant(
            q in vec3(), p in vec3(), n1 in vec3(), n2 in vec3(), alpha in 1e-3f64..1e3,
        ) {
            let l = infonce(&q, &p, &[&n1, &n2], 0.07).unwrap();
            prop_assert!(l >= 0.0);
            let qs: Vec<f64> = q.iter().map(|x| x * alpha).collect();
            let ls = infonce(&qs, &p, &[&n1, &n2], 0.07).unwrap();
            prop_assert!((l - ls).abs() <= 1e-12 * l.max(1.0));
        }

        #[test]
        fn prop_infonce_decreasing_in_positive_similarity(
            q in vec3(), n in vec3(), a in vec3(), b in vec3(),
        ) {
            let (ca, cb) = (cosine(&q, &a).unwrap(), cosine(&q, &b).unwrap());
            prop_assume!((ca - cb).abs() > 1e-9);
            let la = infonce(&q, &a, &[&n], 0.07).unwrap();
            let lb = infonce(&q, &b, &[&n], 0.07).unwrap();
            if ca > cb { prop_assert!(la < lb); } else { prop_assert!(la > lb); }
        }

        #[test]
        fn prop_sample_order_does_not_matter(
            real in prop::collection::vec(-2.0f64..2.0, 1..8),
            fake in prop::collection::vec(-2.0f64..2.0, 1..8),
        ) {
            let a = lsgan_loss(&DiscriminatorScores::new(real.clone(), fake.clone()).unwrap()).unwrap();
            let mut r = real; r.reverse();
            let mut f = fake; f.reverse();
            let b = lsgan_loss(&DiscriminatorScores::new(r, f).unwrap()).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn prop_objective_linear(g in -5.0f64..5.0, n in -5.0f64..5.0, i in -5.0f64..5.0, k in 0.0f64..4.0) {
            let w = LossWeights::default();
            let base = full_objective(g, n, i, &w).unwrap();
            let scaled = full_objective(k * g, n, i, &w).unwrap();
            prop_assert!((scaled - base - (k - 1.0) * g).abs() <= 1e-9);
        }
    }
}
