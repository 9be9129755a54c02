//! Gaussian-blob multi-view datasets with per-view informativeness.
//!
//! For view `g` and class `c` a mean `mu_gc ~ separation * N(0, I)` is drawn
//! once; a sample of class `c` is `scale_g * (informativeness_g * mu_gc + z)`
//! with `z ~ N(0, I)` drawn independently per view.

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{stratified_split, ConceptGroupView, FeatureViews, LabelSpace, MultiViewDataset, SplitSpec};
use crate::error::{Error, Result};
use crate::rng::{self, streams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewSpec {
    pub name: String,
    pub dim: usize,
    /// 0 removes all class signal from the view; 1 keeps the full class mean.
    pub informativeness: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl ViewSpec {
    pub fn new(name: impl Into<String>, dim: usize, informativeness: f64, scale: f64) -> Self {
        Self { name: name.into(), dim, informativeness, scale }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub classes: usize,
    pub n_per_class: usize,
    pub views: Vec<ViewSpec>,
    pub separation: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::BadSpec(format!("need at least 2 classes, got {}", self.classes)));
        }
        if self.n_per_class == 0 {
            return Err(Error::BadSpec("n_per_class must be >= 1".into()));
        }
        if self.views.is_empty() {
            return Err(Error::BadSpec("need at least one view".into()));
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return Err(Error::BadSpec(format!("separation must be >= 0, got {}", self.separation)));
        }
        for v in &self.views {
            if v.dim == 0 {
                return Err(Error::BadSpec(format!("view `{}` has zero dimensions", v.name)));
            }
            if !(0.0..=1.0).contains(&v.informativeness) {
                return Err(Error::BadSpec(format!("view `{}` informativeness must lie in [0, 1]", v.name)));
            }
            if !(v.scale.is_finite() && v.scale > 0.0) {
                return Err(Error::BadSpec(format!("view `{}` scale must be > 0", v.name)));
            }
        }
        Ok(())
    }
}

/// Class names `class_00`, `class_01`, ...; zero-padded so lexicographic
/// order matches numeric order.
pub fn class_names(m: usize) -> Vec<String> {
    let width = (m.max(2) - 1).to_string().len().max(2);
    (0..m).map(|c| format!("class_{c:0width$}")).collect()
}

pub fn generate(spec: &SynthSpec) -> Result<MultiViewDataset> {
    spec.validate()?;
    let m = spec.classes;
    let n = m * spec.n_per_class;
    let labels: Vec<usize> = (0..n).map(|i| i / spec.n_per_class).collect();
    let width = n.to_string().len();
    let sample_ids = (0..n).map(|i| format!("s{i:0width$}")).collect();
    let groups = spec
        .views
        .iter()
        .enumerate()
        .map(|(g, view)| {
            let view_seed = rng::derive_seed(spec.seed, g as u64);
            let mut mean_rng = rng::stream(view_seed, streams::SYNTH_MEANS);
            let means = Array2::from_shape_fn((m, view.dim), |_| {
                let z: f64 = StandardNormal.sample(&mut mean_rng);
                spec.separation * z
            });
            let mut noise_rng = rng::stream(view_seed, streams::SYNTH_NOISE);
            let features = Array2::from_shape_fn((n, view.dim), |(i, j)| {
                let z: f64 = StandardNormal.sample(&mut noise_rng);
                view.scale * (view.informativeness * means[[labels[i], j]] + z)
            });
            ConceptGroupView::new(view.name.clone(), features)
        })
        .collect();
    MultiViewDataset::new(LabelSpace::new(class_names(m))?, labels, FeatureViews { sample_ids, groups })
}

/// Distance multiplier between class means in the default benchmark.
pub const BENCHMARK_SEPARATION: f64 = 0.8;
pub const BENCHMARK_TRAIN_PER_CLASS: usize = 60;
pub const BENCHMARK_TEST_PER_CLASS: usize = 20;

/// Recipe of the default benchmark: six classes, two informative views, one weak
/// view and one pure-noise view at a hundred times the scale.
pub fn benchmark_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        classes: 6,
        n_per_class: BENCHMARK_TRAIN_PER_CLASS + BENCHMARK_TEST_PER_CLASS,
        views: vec![
            ViewSpec::new("informative_a", 20, 0.9, 1.0),
            ViewSpec::new("informative_b", 20, 0.9, 1.0),
            ViewSpec::new("weak", 20, 0.4, 1.0),
            ViewSpec::new("noise", 20, 0.0, 100.0),
        ],
        separation: BENCHMARK_SEPARATION,
        seed,
    }
}

/// Generates `spec` and splits it stratified, with a split seed derived
/// from the spec seed.
pub fn generate_split(spec: &SynthSpec, train_per_class: usize, test_per_class: usize) -> Result<(MultiViewDataset, MultiViewDataset)> {
    let full = generate(spec)?;
    stratified_split(&full, &SplitSpec { train_per_class, test_per_class, seed: rng::derive_seed(spec.seed, streams::SPLIT) })
}

/// Generates the default benchmark and splits it 60/20 per class.
pub fn default_benchmark(seed: u64) -> (MultiViewDataset, MultiViewDataset) {
    generate_split(&benchmark_spec(seed), BENCHMARK_TRAIN_PER_CLASS, BENCHMARK_TEST_PER_CLASS).expect("benchmark recipe is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_shape() {
        let (train, test) = default_benchmark(3);
        assert_eq!(train.n_samples(), 360);
        assert_eq!(test.n_samples(), 120);
        assert_eq!(train.groups().len(), 4);
        assert_eq!(train.class_counts(), vec![60; 6]);
        assert_eq!(test.class_counts(), vec![20; 6]);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = benchmark_spec(5);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        assert_ne!(generate(&spec).unwrap(), generate(&benchmark_spec(6)).unwrap());
    }

    #[test]
    fn class_names_sort_numerically() {
        let names = class_names(12);
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        assert_eq!(names[0], "class_00");
    }

    #[test]
    fn bad_specs_are_rejected() {
        let mut spec = benchmark_spec(0);
        spec.classes = 1;
        assert!(matches!(generate(&spec), Err(Error::BadSpec(_))));
        let mut spec = benchmark_spec(0);
        spec.views[0].dim = 0;
        assert!(generate(&spec).is_err());
        let mut spec = benchmark_spec(0);
        spec.views[1].informativeness = 1.5;
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn zero_separation_has_identical_class_means() {
        let mut spec = benchmark_spec(1);
        spec.separation = 0.0;
        spec.views.truncate(1);
        spec.n_per_class = 2000;
        let d = generate(&spec).unwrap();
        let x = &d.groups()[0].features;
        for c in 0..spec.classes {
            let rows: Vec<usize> = (0..d.n_samples()).filter(|&i| d.labels[i] == c).collect();
            let mean = rows.iter().map(|&i| x[[i, 0]]).sum::<f64>() / rows.len() as f64;
            assert!(mean.abs() < 0.1, "class {c} mean {mean}");
        }
    }

    #[test]
    fn views_are_independent_given_class() {
        let spec = SynthSpec {
            classes: 2,
            n_per_class: 5000,
            views: vec![ViewSpec::new("a", 2, 1.0, 1.0), ViewSpec::new("b", 2, 1.0, 3.0)],
            separation: 2.0,
            seed: 11,
        };
        let d = generate(&spec).unwrap();
        let (a, b) = (&d.groups()[0].features, &d.groups()[1].features);
        // subtract per-class means to isolate the noise components
        let mut ra = Vec::new();
        let mut rb = Vec::new();
        for c in 0..2 {
            let rows: Vec<usize> = (0..d.n_samples()).filter(|&i| d.labels[i] == c).collect();
            let ma = rows.iter().map(|&i| a[[i, 0]]).sum::<f64>() / rows.len() as f64;
            let mb = rows.iter().map(|&i| b[[i, 0]]).sum::<f64>() / rows.len() as f64;
            for &i in &rows {
                ra.push(a[[i, 0]] - ma);
                rb.push(b[[i, 0]] - mb);
            }
        }
        let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| x * y).sum();
        let va: f64 = ra.iter().map(|x| x * x).sum();
        let vb: f64 = rb.iter().map(|x| x * x).sum();
        let rho = cov / (va * vb).sqrt();
        assert!(rho.abs() < 0.05, "rho {rho}");
    }
}
