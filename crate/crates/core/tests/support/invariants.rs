//! Invariant checks shared by the contract tests and the acceptance run.
//! Each returns a short summary on success and the first violation otherwise.
#![allow(dead_code)]

use concept_fusion::classifiers::{ClassifierKind, ClassifierSpec, Learner, ModelSpec, ProbabilisticClassifier};
use concept_fusion::data::{stratified_split, LabelSpace, ProbabilityVector, SplitSpec, SIMPLEX_TOLERANCE};
use concept_fusion::ensemble::{assign_ranks, confidence_sum, decide, rank_sum, EnsembleStrategy, StackingMode};
use concept_fusion::persist::{load_ensemble, save_ensemble};
use concept_fusion::pipeline::train_ensemble;
use concept_fusion::synth::{generate, SynthSpec, ViewSpec};
use concept_fusion::{MultiViewDataset, Result};
use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = std::result::Result<String, String>;

/// Three classes, two informative groups of different scale and a junk one.
pub fn small(seed: u64) -> (MultiViewDataset, MultiViewDataset) {
    let d = generate(&SynthSpec {
        classes: 3,
        n_per_class: 30,
        views: vec![ViewSpec::new("colour", 3, 1.0, 1.0), ViewSpec::new("texture", 4, 0.6, 5.0), ViewSpec::new("junk", 2, 0.0, 100.0)],
        separation: 1.5,
        seed,
    })
    .unwrap();
    stratified_split(&d, &SplitSpec { train_per_class: 20, test_per_class: 10, seed }).unwrap()
}

/// Defaults with fewer boosting rounds and trees, to keep runs short.
pub fn quick(kind: ClassifierKind, seed: u64) -> ClassifierSpec {
    let mut spec = ClassifierSpec::default_for(kind, seed);
    match &mut spec.model {
        ModelSpec::AdaBoostStumps(c) => c.rounds = 20,
        ModelSpec::RandomForest(c) => c.trees = 15,
        _ => {}
    }
    spec
}

/// The five strategies plus out-of-fold stacking with a LogReg meta-learner.
pub fn all_strategies(spec: &ClassifierSpec) -> Vec<EnsembleStrategy> {
    let mut s = EnsembleStrategy::five(StackingMode::Naive, spec.clone()).to_vec();
    s.push(EnsembleStrategy::Stacking { mode: StackingMode::OutOfFold, meta: ClassifierSpec::logreg(1) });
    s
}

fn random_probs(rng: &mut ChaCha8Rng, m: usize) -> ProbabilityVector {
    // a quarter of the vectors come from small counts, so ties are common
    let raw: Vec<f64> = if rng.random_bool(0.25) {
        (0..m).map(|_| rng.random_range(0..3) as f64).collect()
    } else {
        (0..m).map(|_| rng.random_range(0.0..1.0)).collect()
    };
    let raw = if raw.iter().all(|&v| v == 0.0) { vec![1.0; m] } else { raw };
    let total: f64 = raw.iter().sum();
    ProbabilityVector::new(raw.iter().map(|v| v / total).collect()).unwrap()
}

/// Every classifier family returns simplex vectors on arbitrary inputs,
/// including far outside the training range.
pub fn simplex(samples_per_member: usize) -> Check {
    let (train, _) = small(5);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut checked = 0;
    for kind in ClassifierKind::ALL {
        let e = train_ensemble(&train, &quick(kind, 0), EnsembleStrategy::RankSum { weighted: false }, 5, 0).map_err(|e| e.to_string())?;
        for m in &e.members {
            for _ in 0..samples_per_member {
                let scale = 10f64.powi(rng.random_range(-3..4));
                let x = Array1::from_shape_fn(m.input_dim, |_| rng.random_range(-1.0..1.0) * scale);
                let p = m.classifier.predict_proba(x.view()).map_err(|e| e.to_string())?;
                let s: f64 = p.as_slice().iter().sum();
                if (s - 1.0).abs() > SIMPLEX_TOLERANCE || p.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(format!("{kind} on {}: {:?}", m.group_name, p.as_slice()));
                }
                if m.classifier.predict(x.view()).map_err(|e| e.to_string())? != p.argmax() {
                    return Err(format!("{kind}: predict disagrees with argmax"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} vectors"))
}

/// Ranks of m classes always total m(m+1)/2, exactly.
pub fn rank_conservation(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let m = rng.random_range(2..=8);
        let p = random_probs(&mut rng, m);
        let total: f64 = assign_ranks(&p).as_slice().iter().sum();
        if total != (m * (m + 1)) as f64 / 2.0 {
            return Err(format!("ranks of {:?} total {total}", p.as_slice()));
        }
    }
    Ok(format!("{instances} vectors"))
}

/// Decisions are unchanged by equal priorities (versus unweighted) and by
/// scaling every priority by a positive constant.
pub fn argmax_invariance(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let g = rng.random_range(1..=5);
        let m = rng.random_range(2..=6);
        let probs: Vec<ProbabilityVector> = (0..g).map(|_| random_probs(&mut rng, m)).collect();
        let w: Vec<f64> = (0..g).map(|_| rng.random_range(0.01..1.0)).collect();
        let c = [0.5, 2.0, 3.7, 1e3, 1e-3][rng.random_range(0..5)];
        let scaled: Vec<f64> = w.iter().map(|v| c * v).collect();
        let uniform = vec![c; g];
        type Fuse = fn(&[ProbabilityVector], &[f64], bool) -> Result<concept_fusion::data::ScoreVector>;
        for (name, fuse) in [("confidence_sum", confidence_sum as Fuse), ("rank_sum", rank_sum as Fuse)] {
            let d = |w: &[f64], weighted| decide(&fuse(&probs, w, weighted).unwrap());
            if d(&w, true) != d(&scaled, true) {
                return Err(format!("{name}: scaling by {c} changed the decision"));
            }
            if d(&uniform, true) != d(&w, false) {
                return Err(format!("{name}: uniform priorities {c} differ from unweighted"));
            }
        }
    }
    Ok(format!("{instances} instances"))
}

/// With one group, every non-stacking strategy decides like that group's
/// classifier.
pub fn single_group_degeneracy() -> Check {
    let (train, test) = small(6);
    let train = train.restrict(&["colour"]).unwrap();
    let test = test.restrict(&["colour"]).unwrap();
    let mut checked = 0;
    for kind in ClassifierKind::ALL {
        let spec = quick(kind, 1);
        for strategy in &all_strategies(&spec)[..4] {
            let e = train_ensemble(&train, &spec, strategy.clone(), 5, 0).map_err(|e| e.to_string())?;
            let member = &e.members[0];
            let x = member.standardizer.apply(test.groups()[0].features.view()).unwrap();
            for (i, p) in e.predict(&test.views).unwrap().iter().enumerate() {
                if p.decided != member.classifier.predict(x.row(i)).unwrap() {
                    return Err(format!("{kind} {strategy}: sample {i}"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} decisions"))
}

/// Save, reload, compare the model and its predictions for every family and
/// strategy.
pub fn persistence_round_trip() -> Check {
    let (train, test) = small(1);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut models = 0;
    for kind in ClassifierKind::ALL {
        let spec = quick(kind, 3);
        for strategy in all_strategies(&spec) {
            let e = train_ensemble(&train, &spec, strategy.clone(), 5, 2).map_err(|e| e.to_string())?;
            let path = dir.path().join(format!("{kind}-{}.model", strategy.label()));
            save_ensemble(&e, &path).map_err(|e| e.to_string())?;
            let back = load_ensemble(&path).map_err(|e| e.to_string())?;
            if back != e || back.predict(&test.views).unwrap() != e.predict(&test.views).unwrap() {
                return Err(format!("{kind} {strategy} changed on reload"));
            }
            models += 1;
        }
    }
    Ok(format!("{models} models"))
}

/// Always predicts one class with full confidence.
pub struct Constant(pub usize);
pub struct ConstantModel(usize, usize);

impl ProbabilisticClassifier for ConstantModel {
    fn n_classes(&self) -> usize {
        self.1
    }
    fn input_dim(&self) -> usize {
        1
    }
    fn predict_proba(&self, _: ArrayView1<'_, f64>) -> Result<ProbabilityVector> {
        let mut p = vec![0.0; self.1];
        p[self.0] = 1.0;
        ProbabilityVector::new(p)
    }
}

impl Learner for Constant {
    type Model = ConstantModel;
    fn fit(&self, _: ArrayView2<'_, f64>, _: &[usize], labels: &LabelSpace) -> Result<ConstantModel> {
        Ok(ConstantModel(self.0, labels.len()))
    }
}
