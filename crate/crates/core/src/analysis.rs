//! The structural pipeline run end to end on one model.

use crate::btf::{coarse_btf, fine_btf, local_offsets, BlockPartition, LocalOffsets};
use crate::codelist::DaeModel;
use crate::ql::{vectorized_ql, QlCode, QlReport};
use crate::scheme::{basic_init_set, fine_block_init, render_schedule, InitSets, Schedule, SchemeInputs, SchemeMode};
use crate::sigma::{
    canonical_offsets, highest_value_transversal, jacobian_pattern, signature_matrix, structural_metrics,
    GlobalOffsets, JacobianPattern, SignatureMatrix, StructuralMetrics, Transversal,
};
use crate::Error;

#[derive(Debug, Clone)]
pub struct Analysis {
    pub sigma: SignatureMatrix,
    pub hvt: Transversal,
    pub offsets: GlobalOffsets,
    pub pattern: JacobianPattern,
    pub coarse: BlockPartition,
    pub fine: BlockPartition,
    pub local: LocalOffsets,
    pub ql: QlReport,
    pub metrics: StructuralMetrics,
    pub init_block: InitSets,
    pub init_basic: InitSets,
}

impl Analysis {
    pub fn run(model: &DaeModel) -> Result<Self, Error> {
        let sigma = signature_matrix(model);
        let hvt = highest_value_transversal(&sigma)?;
        let offsets = canonical_offsets(&sigma, &hvt)?;
        let pattern = jacobian_pattern(&sigma, &offsets);
        let coarse = coarse_btf(&pattern, &hvt);
        let fine = fine_btf(&pattern, &hvt);
        let local = local_offsets(&sigma, &fine, &offsets, &hvt)?;
        let ql = vectorized_ql(model.codelist(), &sigma, &offsets, &fine, &local);
        let metrics = structural_metrics(&offsets);
        let init_block = fine_block_init(&local, &ql.gamma_block, &fine);
        let init_basic = basic_init_set(&offsets, ql.gamma_dae);
        Ok(Analysis {
            sigma,
            hvt,
            offsets,
            pattern,
            coarse,
            fine,
            local,
            ql,
            metrics,
            init_block,
            init_basic,
        })
    }

    /// First stage with any unknowns, `-max d_j`.
    pub fn k_d(&self) -> i64 {
        -self.offsets.max_d()
    }

    pub fn init_sets(&self, mode: SchemeMode) -> &InitSets {
        match mode {
            SchemeMode::Basic => &self.init_basic,
            SchemeMode::Block => &self.init_block,
        }
    }

    pub fn schedule(&self, k_min: i64, k_max: i64, mode: SchemeMode) -> Schedule {
        let gamma_global: Vec<bool> = self.ql.global.iter().map(|e| e.code == QlCode::L).collect();
        let inputs = SchemeInputs {
            offsets: &self.offsets,
            pattern: &self.pattern,
            fine: &self.fine,
            local: &self.local,
            gamma_eq: &self.ql.gamma_eq,
            gamma_global: &gamma_global,
        };
        render_schedule(k_min, k_max, mode, &inputs)
    }
}
