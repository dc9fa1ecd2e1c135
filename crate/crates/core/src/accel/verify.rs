use serde::{Deserialize, Serialize};

use crate::cla::EpochResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub epoch: u64,
    pub field: String,
    pub detail: String,
}

/// Epoch-by-epoch comparison of two result traces.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub epochs_compared: usize,
    pub divergences: Vec<Divergence>,
}

impl VerifyReport {
    pub fn is_match(&self) -> bool {
        self.divergences.is_empty()
    }

    pub fn first(&self) -> Option<&Divergence> {
        self.divergences.first()
    }
}

fn diff(a: &[u32], b: &[u32]) -> String {
    let only_a: Vec<u32> = a.iter().filter(|x| !b.contains(x)).copied().collect();
    let only_b: Vec<u32> = b.iter().filter(|x| !a.contains(x)).copied().collect();
    format!("only in machine {only_a:?}, only in reference {only_b:?}")
}

/// Compares active columns, predicted columns and anomaly scores.
pub fn verify_against_reference(machine: &[EpochResult], reference: &[EpochResult]) -> VerifyReport {
    let mut report = VerifyReport { epochs_compared: machine.len().min(reference.len()), divergences: Vec::new() };
    for (m, r) in machine.iter().zip(reference) {
        let mut push = |field: &str, detail: String| {
            report.divergences.push(Divergence { epoch: r.epoch, field: field.into(), detail })
        };
        if m.epoch != r.epoch {
            push("epoch", format!("machine epoch {} vs reference {}", m.epoch, r.epoch));
        }
        if m.active_columns != r.active_columns {
            push("active_columns", diff(&m.active_columns, &r.active_columns));
        }
        if m.predicted_columns != r.predicted_columns {
            push("predicted_columns", diff(&m.predicted_columns, &r.predicted_columns));
        }
        if m.anomaly.to_bits() != r.anomaly.to_bits() {
            push("anomaly", format!("machine {} vs reference {}", m.anomaly, r.anomaly));
        }
    }
    if machine.len() != reference.len() {
        let epoch = report.epochs_compared as u64;
        report.divergences.push(Divergence {
            epoch,
            field: "length".into(),
            detail: format!("machine has {} epochs, reference {}", machine.len(), reference.len()),
        });
    }
    report
}
