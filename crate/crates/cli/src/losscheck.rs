use hydroptic::losses::{full_objective, grad_check_infonce, infonce, patchnce, FeatureStack, LossWeights};
use hydroptic::Result;

pub const PATCHNCE_TOL: f64 = 1e-10;
pub const SYMMETRIC_TOL: f64 = 1e-12;
pub const GRAD_TOL: f64 = 1e-4;
pub const GRAD_EPS: f64 = 1e-6;
/// Locations whose query gradient is checked.
pub const GRAD_POINTS: usize = 20;

pub struct Check {
    pub name: &'static str,
    pub deviation: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<18} max deviation {:.3e} (tolerance {:.0e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.deviation,
            self.tolerance
        )
    }
}

/// Straight double loop over locations with an unguarded softmax.
fn brute_force_patchnce(x: &FeatureStack, gx: &FeatureStack, tau: f64) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut total = 0.0;
    for (src, gen) in x.layers.iter().zip(&gx.layers) {
        for s in 0..src.s {
            let q = gen.location(s);
            let mut denom = 0.0;
            let mut numer = 0.0;
            for o in 0..src.s {
                let k = src.location(o);
                let mut d = 0.0;
                for c in 0..src.c {
                    d += q[c] * k[c];
                }
                let e = (d / (norm(q) * norm(k)) / tau).exp();
                denom += e;
                if o == s {
                    numer = e;
                }
            }
            total += -(numer / denom).ln();
        }
    }
    total
}

pub fn run(x: &FeatureStack, gx: &FeatureStack, weights: &LossWeights) -> Result<Vec<Check>> {
    weights.validate()?;
    let tau = weights.tau;
    let value = patchnce(x, gx, tau)?;
    let oracle = brute_force_patchnce(x, gx, tau);
    println!("patchnce = {value:.12} (oracle {oracle:.12})");
    let mut checks = vec![Check {
        name: "patchnce-oracle",
        deviation: (value - oracle).abs(),
        tolerance: PATCHNCE_TOL,
    }];

    let mut worst_grad: f64 = 0.0;
    let locations = gx.layers.iter().enumerate().flat_map(|(l, layer)| (0..layer.s).map(move |s| (l, s)));
    for (l, s) in locations.take(GRAD_POINTS) {
        let src = &x.layers[l];
        let negatives: Vec<&[f64]> = (0..src.s).filter(|&o| o != s).map(|o| src.location(o)).collect();
        let err = grad_check_infonce(gx.layers[l].location(s), src.location(s), &negatives, tau, GRAD_EPS)?;
        worst_grad = worst_grad.max(err);
    }
    checks.push(Check {
        name: "infonce-gradient",
        deviation: worst_grad,
        tolerance: GRAD_TOL,
    });

    let anchor = gx.layers[0].location(0);
    let mut worst_sym: f64 = 0.0;
    for n in 1..=16 {
        let negatives = vec![anchor; n];
        let loss = infonce(anchor, anchor, &negatives, tau)?;
        worst_sym = worst_sym.max((loss - ((n + 1) as f64).ln()).abs());
    }
    checks.push(Check {
        name: "infonce-symmetric",
        deviation: worst_sym,
        tolerance: SYMMETRIC_TOL,
    });

    let objective = full_objective(1.0, 1.0, 1.0, weights)?;
    let expected = weights.lambda_gan + weights.lambda_nce + weights.lambda_idt;
    println!("full objective at (1, 1, 1) = {objective}");
    checks.push(Check {
        name: "objective-weights",
        deviation: (objective - expected).abs(),
        tolerance: 0.0,
    });
    Ok(checks)
}
