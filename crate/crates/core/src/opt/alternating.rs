use super::{relay_step, source_step, Settings, SubproblemStats};
use crate::error::{Error, Result};
use crate::model::{Network, TransceiverDesign};

/// Solver records of one alternating pass.
#[derive(Debug, Clone, PartialEq)]
pub struct PassStats {
    pub relay: SubproblemStats,
    pub source: SubproblemStats,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationTrace {
    /// Worst-user MSE of the starting point with MMSE receivers.
    pub initial_objective: f64,
    /// Worst-user MSE after each full pass.
    pub objective_per_iter: Vec<f64>,
    pub subproblem_stats: Vec<PassStats>,
    pub converged: bool,
    pub iters: usize,
}

impl IterationTrace {
    pub fn final_objective(&self) -> f64 {
        self.objective_per_iter.last().copied().unwrap_or(self.initial_objective)
    }

    /// Largest increase between consecutive recorded objectives, starting
    /// from the initial one.
    pub fn max_increase(&self) -> f64 {
        let mut prev = self.initial_objective;
        let mut worst = f64::NEG_INFINITY;
        for &o in &self.objective_per_iter {
            worst = worst.max(o - prev);
            prev = o;
        }
        worst
    }
}

/// Alternating min-max MSE optimization: each pass solves the relay SDP for
/// fixed precoders and receivers, the source program for fixed relay and
/// receivers, then refreshes the MMSE receivers. Stops once the worst-user
/// MSE changes by less than `settings.tol`.
///
/// The receivers in `init` are ignored; the loop starts from MMSE receivers
/// for the initial precoders and relay.
pub fn iterate(
    net: &Network,
    init: &TransceiverDesign,
    settings: &Settings,
) -> Result<(TransceiverDesign, IterationTrace)> {
    let mut b = init.b.clone();
    let mut f = init.f.clone();
    let mut w = net.mmse_receivers(&b, &f)?;
    let mut trace = IterationTrace {
        initial_objective: net.max_mse(&b, &f, &w)?,
        ..Default::default()
    };
    let mut prev = trace.initial_objective;
    let abort = |e: Error, trace: &IterationTrace| Error::Aborted {
        source: Box::new(e),
        trace: Box::new(trace.clone()),
    };
    for _ in 0..settings.max_iters {
        let (f_new, relay) = relay_step(net, &b, &w, Some(&f), settings).map_err(|e| abort(e, &trace))?;
        f = f_new;
        let (b_new, source) = source_step(net, &f, &w, Some(&b), settings).map_err(|e| abort(e, &trace))?;
        b = b_new;
        w = net.mmse_receivers(&b, &f).map_err(|e| abort(e, &trace))?;
        let obj = net.max_mse(&b, &f, &w)?;
        trace.objective_per_iter.push(obj);
        trace.subproblem_stats.push(PassStats { relay, source });
        trace.iters += 1;
        if (prev - obj).abs() < settings.tol {
            trace.converged = true;
            break;
        }
        prev = obj;
    }
    Ok((TransceiverDesign { b, f, w }, trace))
}
