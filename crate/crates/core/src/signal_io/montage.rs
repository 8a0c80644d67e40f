use super::Recording;
use crate::error::{Error, Result};

/// Four-channel neonatal bipolar montage over F3, F4, T3, T4 and Cz.
pub const NEONATAL_BIPOLAR_PAIRS: [(&str, &str); 4] = [("F3", "T3"), ("F4", "T4"), ("T4", "Cz"), ("Cz", "T3")];

/// One derived channel `a-b` per pair with samples `a − b`; a derived sample
/// is valid only when both source samples are.
pub fn derive_bipolar_montage<S: AsRef<str>>(rec: &Recording, pairs: &[(S, S)]) -> Result<Recording> {
    let lookup = |label: &str| {
        rec.channel_index(label).ok_or_else(|| Error::UnknownLabel {
            label: label.to_string(),
            available: rec.channel_labels().to_vec(),
        })
    };
    let mut labels = Vec::with_capacity(pairs.len());
    let mut samples = Vec::with_capacity(pairs.len());
    let mut validity = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let (a, b) = (a.as_ref(), b.as_ref());
        let (ia, ib) = (lookup(a)?, lookup(b)?);
        labels.push(format!("{a}-{b}"));
        samples.push(
            rec.samples()[ia]
                .iter()
                .zip(&rec.samples()[ib])
                .map(|(x, y)| x - y)
                .collect(),
        );
        validity.push(
            rec.validity()[ia]
                .iter()
                .zip(&rec.validity()[ib])
                .map(|(x, y)| *x && *y)
                .collect(),
        );
    }
    Recording::with_validity(labels, rec.sample_rate(), samples, validity)
}
