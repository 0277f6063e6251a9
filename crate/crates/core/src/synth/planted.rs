use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::audio::Label;
use crate::error::{Error, Result};
use crate::features::{FeatureVector, N_FEATURES};
use crate::scalar::Real;
use crate::seed;

/// Feature table where one column separates SimpleSnore from Other and all
/// others are unit Gaussian noise with a per-patient offset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub n_patients: usize,
    pub windows_per_class_per_patient: usize,
    pub planted_feature: usize,
    /// Distance between the class means of the planted column, in units of
    /// its noise standard deviation. 0 gives a table with no signal.
    pub separation: f64,
    pub patient_offset_sd: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        Self {
            n_patients: 10,
            windows_per_class_per_patient: 20,
            planted_feature: 17,
            separation: 2.0,
            patient_offset_sd: 0.3,
            seed: 0,
        }
    }
}

pub fn planted_feature_rows<T: Real>(spec: &PlantedSpec) -> Result<Vec<FeatureVector<T>>> {
    if spec.planted_feature >= N_FEATURES || spec.n_patients == 0 || spec.windows_per_class_per_patient == 0 {
        return Err(Error::validation("invalid planted-feature spec"));
    }
    let mut rows = Vec::new();
    for p in 0..spec.n_patients {
        let mut rng = seed::rng(spec.seed, p as u64);
        let id = format!("p{:02}", p + 1);
        let offsets: Vec<f64> = (0..N_FEATURES)
            .map(|_| { let z: f64 = StandardNormal.sample(&mut rng); spec.patient_offset_sd * z })
            .collect();
        for w in 0..2 * spec.windows_per_class_per_patient {
            let label = if w % 2 == 0 { Label::SimpleSnore } else { Label::Other };
            let shift = if w % 2 == 0 { 0.5 } else { -0.5 } * spec.separation;
            let values = (0..N_FEATURES)
                .map(|f| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let v = z + offsets[f] + if f == spec.planted_feature { shift } else { 0.0 };
                    T::lit(v)
                })
                .collect();
            rows.push(FeatureVector::new(id.clone(), w, Some(label), values)?);
        }
    }
    Ok(rows)
}
