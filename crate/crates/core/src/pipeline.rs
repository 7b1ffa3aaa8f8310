//! Per-event analysis: filter, screen, refit.

use serde::{Deserialize, Serialize};

use crate::dataset::{EventDataset, LanePolicy, UsablePair};
use crate::diagnostics::{self, CleanFit, ScanOptions};
use crate::error::Result;
use crate::meta::{EventPairs, EventSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventAnalysis {
    pub label: String,
    pub venue: String,
    pub year: i32,
    pub usable: Vec<UsablePair>,
    pub warnings: Vec<String>,
    pub clean: CleanFit,
}

impl EventAnalysis {
    pub fn summary(&self) -> EventSummary {
        EventSummary {
            label: self.label.clone(),
            d_hat: self.clean.fit.d(),
            se: self.clean.fit.se_d(),
            n: Some(self.clean.fit.n),
        }
    }

    pub fn cleaned(&self) -> EventPairs {
        EventPairs {
            label: self.label.clone(),
            pairs: self.clean.kept.clone(),
        }
    }

    /// Filtering and fit warnings together, in the order they arose.
    pub fn all_warnings(&self) -> Vec<String> {
        let mut w = self.warnings.clone();
        w.extend(self.clean.fit.warnings().iter().cloned());
        w
    }
}

pub fn analyze_event(
    ds: &EventDataset,
    policy: LanePolicy,
    opts: ScanOptions,
) -> Result<EventAnalysis> {
    let set = ds.usable_pairs(policy);
    let clean = diagnostics::clean_and_refit(&set.pairs, opts)?;
    Ok(EventAnalysis {
        label: ds.label(),
        venue: ds.venue.clone(),
        year: ds.year,
        usable: set.pairs,
        warnings: set.warnings,
        clean,
    })
}
