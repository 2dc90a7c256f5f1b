//! Executes the engines selected by an experiment spec.

use delaylab_core::sim::dcf::run_dcf_replicated;
use delaylab_core::sim::oracle::run_rps_oracle_replicated;
use delaylab_core::{analytic_delays, RunBudget};

use crate::report::{ComparisonTable, SimColumn, TableMeta, TableRow};
use crate::spec::{Engine, ExperimentSpec, HarnessError};

/// Runs every selected engine over every arrival-rate row.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ComparisonTable, HarnessError> {
    spec.validate()?;
    let budget = RunBudget {
        horizon_s: spec.run.horizon_s,
        max_packets: spec.run.max_packets,
    };
    let base_seed = spec.seed();

    let mut rows = Vec::new();
    for (r, lambdas) in spec.lambda_rows().into_iter().enumerate() {
        let scenario = spec.scenario().with_lambdas(&lambdas)?;
        let annotate =
            |e: delaylab_core::Error| HarnessError::Validation(format!("rows[{r}]: {e}"));

        let analytic = if spec.engines.contains(&Engine::Analytic) {
            Some(analytic_delays(&scenario).map_err(annotate)?)
        } else {
            None
        };
        let dcf = if spec.engines.contains(&Engine::Dcf) {
            let stats = run_dcf_replicated(
                &scenario,
                &spec.mac,
                spec.run.replications,
                // decorrelate rows without overlapping seed ranges
                base_seed.wrapping_add((r as u64) << 20),
                budget,
                spec.run.warmup_frac,
            )
            .map_err(annotate)?;
            Some(SimColumn::from_stats(&stats))
        } else {
            None
        };
        let rps = if spec.engines.contains(&Engine::RpsOracle) {
            let stats = run_rps_oracle_replicated(
                &scenario,
                spec.run.replications,
                base_seed.wrapping_add((r as u64) << 20).wrapping_add(1 << 40),
                budget,
                spec.run.warmup_frac,
            )
            .map_err(annotate)?;
            Some(SimColumn::from_stats(&stats))
        } else {
            None
        };

        rows.push(TableRow {
            lambdas,
            dcf,
            rps,
            analytic_per_node_s: analytic.as_ref().map(|a| a.per_node_s.clone()),
            rho: scenario.rho()?,
        });
    }

    Ok(ComparisonTable {
        meta: TableMeta {
            name: spec.name.clone(),
            nodes: spec.nodes.len(),
            mtu_bytes: spec.mtu_bytes,
            capacity_pkts_per_s: spec.capacity_pkts_per_s,
            regime: spec.regime,
            replications: spec.run.replications,
            seed: base_seed,
        },
        rows,
    })
}
