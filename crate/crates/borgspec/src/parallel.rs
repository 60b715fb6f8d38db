use borgspec_core::field::{FieldEvaluator, SymbolSchurSet};
use borgspec_core::linalg::LanczosWorkspace;
use borgspec_core::Complex64;
use rayon::prelude::*;

/// Evaluates fixed-length runs of the point path on the rayon pool.
///
/// Run boundaries depend only on `run_len`, and every node value is
/// independent of where its run starts, so the output is the same for any
/// pool size.
#[derive(Clone, Copy, Debug)]
pub struct Parallel {
    pub run_len: usize,
}

impl Default for Parallel {
    fn default() -> Self {
        Parallel { run_len: 512 }
    }
}

impl FieldEvaluator for Parallel {
    fn evaluate(&self, set: &SymbolSchurSet, points: &[Complex64]) -> Vec<f64> {
        let runs: Vec<Vec<f64>> = points
            .par_chunks(self.run_len.max(1))
            .map_init(LanczosWorkspace::default, |ws, run| set.psi_path(run, ws))
            .collect();
        runs.concat()
    }
}
