//! Path simulators and the replica-parallel ensemble runner.

pub mod graphical;
pub mod observer;
pub mod thinning;

use rayon::prelude::*;

use crate::error::Result;
use crate::model::{validate, EngineKind, RatchetParams, RatchetState, VariantKind};
use crate::rng::ReplicaStreams;
use crate::Real;

pub use graphical::{run_graphical, simulate_graphical, DrivingLog};
pub use observer::{FinalState, GraphicalEvent, NoObserver, PathObserver, Recorder};
pub use thinning::{run_kernel, run_thinning, simulate_path, step_thinning, ThinningKernel};

/// Simulate replica `replica` of `params` with the engine and variant it
/// names. `substeps > 1` builds each Brownian increment from that many
/// finer normals (see [`crate::rng::BrownianDriver`]).
pub fn run_replica<T: Real, O: PathObserver<T>>(
    params: &RatchetParams<T>,
    replica: usize,
    substeps: usize,
    obs: &mut O,
) -> Result<RatchetState<T>> {
    let streams = ReplicaStreams::new(params.seed, replica as u64);
    match (params.variant.kind, params.engine) {
        (VariantKind::Dissociation, _) => {
            crate::variants::run_dissociation(params, streams, substeps, obs)
        }
        (_, EngineKind::Graphical) => Ok(run_graphical(params, streams, substeps, obs)),
        _ => Ok(run_thinning(params, streams, substeps, obs)),
    }
}

/// Run `params.replicas` replicas in parallel, one observer each, and
/// return the observers in replica order.
pub fn run_ensemble<T, O, F>(params: &RatchetParams<T>, substeps: usize, make: F) -> Result<Vec<O>>
where
    T: Real,
    O: PathObserver<T> + Send,
    F: Fn(usize) -> O + Sync,
{
    validate(params).into_result()?;
    (0..params.replicas)
        .into_par_iter()
        .map(|i| {
            let mut obs = make(i);
            run_replica(params, i, substeps, &mut obs)?;
            Ok(obs)
        })
        .collect()
}

/// Final `X_t` of every replica.
pub fn final_positions<T: Real>(params: &RatchetParams<T>, substeps: usize) -> Result<Vec<T>> {
    Ok(run_ensemble(params, substeps, |_| FinalState::default())?
        .into_iter()
        .map(|f| f.state.x)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ensemble_is_ordered_and_deterministic() {
        let p = RatchetParams::new(1.0_f64, 5.0, 1e-3).with_replicas(8).with_seed(3);
        let a = final_positions(&p, 1).unwrap();
        let b = final_positions(&p, 1).unwrap();
        assert_eq!(a, b);
        let mut single = FinalState::default();
        run_replica(&p, 5, 1, &mut single).unwrap();
        assert_eq!(single.state.x, a[5]);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let p = RatchetParams::new(-1.0_f64, 5.0, 1e-3);
        assert!(final_positions(&p, 1).is_err());
    }
}
