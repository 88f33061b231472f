//! Seeded synthetic study corpora.

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::numeric;
use crate::vocabulary::{
    PropertyDef, RangeDef, PERCENT_OF_STIMULATION_INTENSITY, RTMS_PROPERTIES, TYPE_OF_RTMS,
};

use super::StudyRecord;

const AUTHORS: [&str; 12] = [
    "Andersen", "Bauer", "Chen", "Dubois", "Eriksson", "Fischer", "Garcia", "Hansen", "Ito",
    "Jensen", "Kowalski", "Larsen",
];

/// Probability that an optional property is filled.
const FILL_RATE: f64 = 0.7;

/// Plausible ranges as `(low, high, scale)`: values are drawn as integers
/// in `low..=high` and divided by `10^scale`.
fn decimal_range(label: &str) -> (i64, i64, u32) {
    match label {
        "Intrabust Frequency" => (10, 1000, 1), // 1–100 Hz
        "Amplitude of the Motor Evoked Potential (mV)" => (5, 100, 2), // 0.05–1 mV
        "Threshold Ratio" => (50, 150, 2),
        "Percentage or the Amplitude of the Motor Threshold Contraction" => (5, 50, 0),
        "Maximum Stimulator Output" => (30, 100, 0),
        "Coil Size" => (40, 150, 0),
        _ => (200, 1200, 1), // percentages 20–120
    }
}

fn render(value: i64, scale: u32) -> String {
    let div = 10i64.pow(scale);
    if scale == 0 {
        return value.to_string();
    }
    let raw = format!(
        "{}.{:0width$}",
        value / div,
        value % div,
        width = scale as usize
    );
    numeric::canonical(&raw)
}

fn draw_decimal(rng: &mut ChaCha8Rng, label: &str) -> String {
    let (lo, hi, scale) = decimal_range(label);
    render(rng.random_range(lo..=hi), scale)
}

fn draw(rng: &mut ChaCha8Rng, def: &PropertyDef, values: &mut IndexMap<String, Vec<String>>) {
    if def.label == PERCENT_OF_STIMULATION_INTENSITY {
        let [min_def, max_def] = def.sub_properties else {
            return;
        };
        let (lo, hi, scale) = decimal_range(def.label);
        let min = rng.random_range(lo..=hi);
        let max = rng.random_range(min..=hi);
        values.insert(min_def.label.to_string(), vec![render(min, scale)]);
        values.insert(max_def.label.to_string(), vec![render(max, scale)]);
        return;
    }
    let value = match def.range {
        RangeDef::Controlled(terms) => terms[rng.random_range(0..terms.len())].label.to_string(),
        RangeDef::Decimal => draw_decimal(rng, def.label),
    };
    values.insert(def.label.to_string(), vec![value]);
}

/// `n` records that conform to the dose template. The same seed always
/// gives the same corpus.
pub fn generate_synthetic_corpus(seed: u64, n: usize) -> Vec<StudyRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..=n)
        .map(|i| {
            let mut values = IndexMap::new();
            for def in &RTMS_PROPERTIES {
                if def.label == TYPE_OF_RTMS || rng.random_bool(FILL_RATE) {
                    draw(&mut rng, def, &mut values);
                }
            }
            StudyRecord {
                title: format!("Synthetic rTMS dose study {i}"),
                doi: Some(format!("10.99999/synthetic.{seed}.{i}")),
                year: Some(rng.random_range(1995..=2022)),
                first_author: Some(AUTHORS[rng.random_range(0..AUTHORS.len())].to_string()),
                values,
            }
        })
        .collect()
}
