"""The per-slot simulation loop tying ingestion, switching and estimation together.

Each iteration draws a fresh random set of grid cells to act as the SBSs of
one macro cell. Per time slot the optimizer picks a sleep mask from the true
loads, the configured estimator fills in the sleepers' loads, the optimizer
runs again on the estimated loads, and the discrepancy metrics are recorded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .errors import SimulationError
from .estimate import CellLoad, estimate_mean, estimate_weighted, mlc_estimate, rank_neighbors, select_random
from .ingest import TrafficProfile, ingest_dataset, load_profile_cache, synth_traffic
from .metrics import SlotMetrics, ThresholdPolicy, decision_change_rate, empirical_p_err, mean_estimation_error
from .power import BaseStation, Network, NetworkLoadState, Tier
from .switching import HAPS, MBS, optimize_exhaustive, optimize_greedy


@dataclass(frozen=True)
class SlotRow:
    iteration: int
    slot: int
    metrics: SlotMetrics


@dataclass
class ExperimentReport:
    rows: list[SlotRow]
    config_echo: str
    seed: int
    solver_used: str
    version: str = __version__
    skipped_zero_load: int = 0

    def summary(self) -> dict:
        cols = {
            "mean_eps": [r.metrics.estimation_error for r in self.rows],
            "power_true_w": [r.metrics.power_true for r in self.rows],
            "power_est_w": [r.metrics.power_est for r in self.rows],
            "decision_change": [r.metrics.decision_change_rate for r in self.rows],
            "p_off_on": [r.metrics.p_err_off_on for r in self.rows],
            "p_on_off": [r.metrics.p_err_on_off for r in self.rows],
        }
        aggregates = {}
        for name, values in cols.items():
            arr = np.asarray(values, dtype=float)
            finite = arr[~np.isnan(arr)]
            aggregates[name] = {
                "mean": float(finite.mean()) if finite.size else math.nan,
                "std": float(finite.std()) if finite.size else math.nan,
                "defined_rows": int(finite.size),
            }
        return {
            "rows": len(self.rows),
            "aggregates": aggregates,
            "skipped_zero_load_samples": self.skipped_zero_load,
            "solver_used": self.solver_used,
            "seed": self.seed,
            "version": self.version,
        }


def load_corpus(config: ExperimentConfig) -> list[TrafficProfile]:
    """Resolve the traffic corpus: cache file, raw CDR directory or synthetic."""
    if config.dataset is not None:
        path = Path(config.dataset)
        if path.is_dir():
            return ingest_dataset(path, config.grid_side, config.cell_size_m)
        return load_profile_cache(path)
    return synth_traffic(config.synth)


def build_network(config: ExperimentConfig, sbs_profiles) -> Network:
    haps = BaseStation("haps", Tier.HAPS, (0.0, 0.0), config.capacity["haps"],
                       config.power_params("haps"))
    mbs = BaseStation("mbs", Tier.MBS, (0.0, 0.0), config.capacity["mbs"],
                      config.power_params("mbs"))
    sbs = tuple(
        BaseStation(f"sbs-{p.cell_id}", Tier.SBS, p.position, config.capacity["sbs"],
                    config.power_params("sbs"))
        for p in sbs_profiles
    )
    return Network(haps, mbs, sbs)


def _estimator_seed(spec_seed: int, iteration: int, slot: int) -> int:
    return int(np.random.SeedSequence([spec_seed, iteration, slot]).generate_state(1)[0])


def _estimate_sleepers(config, profiles, sbs_indices, sleepers, true_loads, slot,
                       iteration, last_known):
    """Return estimated loads for the sleeping SBSs, keyed by SBS index."""
    spec = config.estimator
    if spec.method == "perfect":
        return {j: true_loads[j] for j in sleepers}

    sleeping_cells = {profiles[sbs_indices[j]].cell_id for j in sleepers}
    seed = _estimator_seed(spec.seed, iteration, slot)

    if spec.method == "mlc":
        values = np.array([p.slots[slot] for p in profiles])
        active = np.array([p.cell_id not in sleeping_cells for p in profiles])
        global_mean = float(values[active].mean())
        cell_row = {p.cell_id: i for i, p in enumerate(profiles)}
        for j in sleepers:
            row = cell_row[profiles[sbs_indices[j]].cell_id]
            known = last_known.get(j)
            values[row] = known if known is not None else global_mean
        features = None
        if config.cluster_features == "profile":
            features = np.array([p.slots for p in profiles])
        estimated = mlc_estimate(
            values, active,
            layers=spec.layer_count,
            clusters=spec.cluster_count,
            seed=seed,
            mean_includes_estimates=config.mlc_mean_includes_estimates,
            features=features,
        )
        return {j: float(estimated[cell_row[profiles[sbs_indices[j]].cell_id]])
                for j in sleepers}

    pool = [CellLoad(p.cell_id, p.position, p.slots[slot])
            for p in profiles if p.cell_id not in sleeping_cells]
    out = {}
    for j in sleepers:
        cell = profiles[sbs_indices[j]]
        target = CellLoad(cell.cell_id, cell.position, 0.0)
        if spec.method.startswith("distance"):
            neighbors = rank_neighbors(target, pool, spec.neighbor_count)
        else:
            neighbors = select_random(target, pool, spec.neighbor_count,
                                      seed=seed + j)
        if spec.method.endswith("weighted") and not spec.method.endswith("unweighted"):
            out[j] = estimate_weighted(neighbors, spec.distance_exponent)
        else:
            out[j] = estimate_mean(neighbors)
    return out


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run the full experiment; fully deterministic for a fixed config + seed."""
    profiles = load_corpus(config)
    if len(profiles) <= config.sbs_count:
        raise SimulationError(
            f"corpus of {len(profiles)} cells cannot host {config.sbs_count} SBSs "
            "plus estimation neighbors"
        )
    s = config.sbs_count
    sinks = (HAPS,) if config.offload_sinks == "HAPS_only" else (HAPS, MBS)
    solver_used = config.optimizer
    if config.optimizer == "exhaustive" and s > config.exhaustive_limit:
        solver_used = "greedy"

    def solve(net, loads):
        if solver_used == "exhaustive":
            return optimize_exhaustive(net, loads, sinks=sinks, limit=config.exhaustive_limit)
        return optimize_greedy(net, loads, sinks=sinks)

    policy = ThresholdPolicy(config.lambda_th)
    iter_seeds = np.random.SeedSequence(config.seed).spawn(config.iteration_count)
    rows: list[SlotRow] = []
    skipped_total = 0
    for iteration, seed_seq in enumerate(iter_seeds):
        rng = np.random.default_rng(seed_seq)
        sbs_indices = [int(i) for i in rng.choice(len(profiles), size=s, replace=False)]
        net = build_network(config, [profiles[i] for i in sbs_indices])
        last_known: dict[int, float] = {}
        for slot in range(config.slot_count):
            try:
                true_loads = [profiles[i].slots[slot] for i in sbs_indices]
                base = config.base_load
                loads0 = NetworkLoadState(base["haps"], base["mbs"], tuple(true_loads))
                sv_true, _, p_true = solve(net, loads0)
                sleepers = [j for j, bit in enumerate(sv_true.delta) if bit == 0]

                estimates = _estimate_sleepers(
                    config, profiles, sbs_indices, sleepers, true_loads,
                    slot, iteration, last_known,
                )
                for j, bit in enumerate(sv_true.delta):
                    if bit == 1:
                        last_known[j] = true_loads[j]

                est_loads = list(true_loads)
                for j, lam_hat in estimates.items():
                    est_loads[j] = lam_hat
                loads_est0 = NetworkLoadState(base["haps"], base["mbs"], tuple(est_loads))
                sv_est, _, p_est = solve(net, loads_est0)

                pairs = [(true_loads[j], estimates[j]) for j in sleepers]
                eps, skipped = mean_estimation_error(pairs) if pairs else (0.0, 0)
                skipped_total += skipped
                p_off_on, p_on_off = empirical_p_err(pairs, policy)
                rows.append(SlotRow(iteration, slot, SlotMetrics(
                    estimation_error=eps,
                    power_true=p_true,
                    power_est=p_est,
                    decision_change_rate=decision_change_rate(sv_true, sv_est),
                    p_err_off_on=math.nan if p_off_on is None else p_off_on,
                    p_err_on_off=math.nan if p_on_off is None else p_on_off,
                    skipped_zero_load=skipped,
                )))
            except SimulationError as exc:
                raise SimulationError(f"iteration {iteration}, slot {slot}: {exc}") from exc
    return ExperimentReport(
        rows=rows,
        config_echo=config.to_yaml(),
        seed=config.seed,
        solver_used=solver_used,
        skipped_zero_load=skipped_total,
    )
