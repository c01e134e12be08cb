import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import orjson

from analysis.front import (
    convergence_report,
    default_fit_window,
    front_radius,
    front_series,
    spreading_exponent,
)
from config.scenario_config import ScenarioConfig, config_hash, levels_list, mid_window_gamma
from models.eigenpair import EigenPair, Envelope
from models.errors import NoInvasionError, ProbeError, ScenarioError
from models.fields import CellField, TailedField
from models.grid import Grid, plan_box
from models.kernel import StableKernel, kernel_from_spec, validate_kernel
from models.media import profile_from_spec
from models.reaction import ReactionModel, reaction_from_spec, require_kpp
from models.reports import Verdict
from operators.plan import build_plan
from solvers.eigensolver import check_H3, predicted_exponent, principal_eigenpair
from solvers.evolution import SteadyState, Trajectory, evolve, raised_cosine_bump, steady_state
from tools.artifacts import ArtifactWriter
from tools.snapshots import TRAJECTORY_INDEX, encode_snapshot, load_snapshots, snapshot_name
from verification.envelopes import check_sandwich, empirical_epsilon_zero
from verification.heat_kernel import heat_kernel_bounds
from verification.lemma import lemma1_i, lemma1_ii
from verification.tails import check_tail_bracket, check_tails, initial_constants

logger = logging.getLogger(__name__)

CHECKS = ("tails", "lemma1", "sandwich", "heatkernel")
SIMULATE_SUMMARY = "simulate.json"


def level_column(level: float, quantity: str = "radius") -> str:
    """CSV column of a front level: 0.25 -> radius_c025, slope_c025."""
    return f"{quantity}_c" + f"{level:g}".replace(".", "")


# Scenario orchestration
class ScenarioPipeline:

    def __init__(self, config: ScenarioConfig, out_dir: Path, dt: Optional[float] = None,
                 T: Optional[float] = None, writer: Optional[ArtifactWriter] = None):
        self.config = config
        self.config_sha256 = config_hash(config)
        self.writer = writer or ArtifactWriter(out_dir)
        self.dt = float(dt if dt is not None else config.run.dt)
        self.T = float(T if T is not None else config.run.T)
        d = config.dimension
        self.kernel: StableKernel = kernel_from_spec(config.kernel, config.alpha, d)
        self.reaction: ReactionModel = reaction_from_spec(config.reaction, config.media, d)
        report = validate_kernel(self.kernel)
        if not report.passed:
            raise ScenarioError("; ".join(report.messages), field_path="kernel")
        if self.reaction.family != "linear":
            require_kpp(self.reaction)
        self._eigpair: Optional[EigenPair] = None
        self._steady: Optional[SteadyState] = None
        self._grid: Optional[Grid] = None

    @property
    def out_dir(self) -> Path:
        return self.writer.out_dir

    @property
    def alpha(self) -> float:
        return self.config.alpha

    @property
    def backend(self) -> str:
        return self.config.run.backend

    # Shared ingredients
    def eigenpair(self) -> EigenPair:
        if self._eigpair is None:
            spec = self.config.eigen
            self._eigpair = principal_eigenpair(self.kernel, self.reaction.media, spec.cell_n, spec.tol, spec.method)
        return self._eigpair

    def steady(self) -> SteadyState:
        if self._steady is None:
            self._steady = steady_state(self.kernel, self.reaction, self.config.eigen.cell_n,
                                        eigpair=self.eigenpair())
        return self._steady

    def n_plus_on(self, n_cell: int) -> CellField:
        """n_plus on the grid's cell resolution, subsampled when the resolutions nest."""
        n_plus = self.steady().n_plus
        if n_plus.n == n_cell:
            return n_plus
        if n_plus.n % n_cell == 0:
            k = n_plus.n // n_cell
            values = n_plus.values[::k] if n_plus.d == 1 else n_plus.values[::k, ::k]
            return CellField(values, n_plus.d)
        s = np.arange(n_cell) / n_cell
        if n_plus.d == 1:
            return CellField(n_plus.at(s), 1)
        xx, yy = np.meshgrid(s, s, indexing="ij")
        return CellField(n_plus.at(np.stack([xx, yy], axis=-1)), 2)

    def rate(self) -> float:
        try:
            return predicted_exponent(self.eigenpair(), self.config.dimension, self.alpha)
        except NoInvasionError:
            return 0.0

    def grid(self) -> Grid:
        """Configured box, or the plan L = 4 exp(rate T) when the scenario leaves it open."""
        if self._grid is not None:
            return self._grid
        spec, d = self.config.grid, self.config.dimension
        rate = self.rate()
        planned = plan_box(rate, self.T, spec.h_target, spec.n_cell, d)
        if spec.L is None:
            self._grid = planned
        else:
            self._grid = Grid(d, spec.L, spec.n_box, spec.n_cell)
            if self._grid.L < planned.L:
                logger.warning("box L=%.4g is below the planned 4 exp(%.4g T)=%.4g; the front may reach the edge",
                               self._grid.L, rate, planned.L)
        logger.info("box: L=%.6g, n_box=%d, h=%.4g (rate %.4g, T=%.4g)",
                    self._grid.L, self._grid.n_box, self._grid.h, rate, self.T)
        return self._grid

    def initial_datum(self, grid: Optional[Grid] = None) -> TailedField:
        init = self.config.run.initial
        return raised_cosine_bump(grid or self.grid(), self.alpha, init.center, init.width, init.height)

    def evolve(self, T: float) -> Trajectory:
        run = self.config.run
        return evolve(self.kernel, self.reaction, self.initial_datum(), T, self.dt,
                      snap_every=run.snap_every, backend=run.backend, pad_factor=run.pad_factor)

    def _stored_run_matches(self) -> bool:
        """True when simulate.json in out_dir was produced by this scenario with the same dt and T."""
        summary_path = self.out_dir / SIMULATE_SUMMARY
        if not summary_path.exists():
            return False
        stored = orjson.loads(summary_path.read_bytes())
        current = {"config_sha256": self.config_sha256, "dt": self.dt, "T": self.T}
        stale = {k: stored.get(k) for k, v in current.items() if stored.get(k) != v}
        if stale:
            logger.warning("snapshots in %s come from a different run (%s); recomputing", self.out_dir, stale)
            return False
        return True

    def trajectory(self) -> Trajectory:
        """The trajectory written by simulate in out_dir when it matches this run, else a fresh one."""
        if (self.out_dir / TRAJECTORY_INDEX).exists() and self._stored_run_matches():
            snaps = load_snapshots(self.out_dir, self.config.grid.n_cell)
            grid = snaps[0][1].grid
            bound = max(self.reaction.M_cap, snaps[0][1].sup)
            minmax = np.array([(t, s.inf, s.sup) for t, s in snaps])
            scheme = "explicit" if self.backend == "quadrature" else "imex"
            self._grid = grid
            logger.info("reusing %d snapshots from %s", len(snaps), self.out_dir)
            return Trajectory(snaps, scheme, self.dt, minmax, bound)
        return self.evolve(self.T)

    # Subcommands
    def run_eig(self) -> dict:
        pair = self.eigenpair()
        invades, abs_lambda = check_H3(pair)
        document = pair.to_dict()
        document["H3"] = invades
        document["abs_lambda1"] = abs_lambda
        if invades:
            document["predicted_exponent"] = predicted_exponent(pair, self.config.dimension, self.alpha)
        self.writer.write_json("eig.json", document)
        return document

    def run_simulate(self) -> dict:
        grid = self.grid()
        plan = build_plan(self.kernel, grid, self.backend, self.config.run.pad_factor)
        run = self.config.run
        traj = evolve(self.kernel, self.reaction, self.initial_datum(grid), self.T, self.dt,
                      snap_every=run.snap_every, plan=plan)
        try:
            n_plus = self.n_plus_on(grid.n_cell)
        except NoInvasionError:
            n_plus = None
        rows = []
        for i, (t, snap) in enumerate(traj.snapshots):
            name = snapshot_name(i)
            self.writer.write_bytes(name, encode_snapshot(snap))
            radius = front_radius(snap, n_plus, 0.5) if n_plus is not None else None
            rows.append({"t": t, "front_radius": radius, "sup": snap.sup, "min": snap.inf, "snapshot": name})
        self.writer.write_ndjson(TRAJECTORY_INDEX, rows)
        summary = {
            "trajectory": traj.summary(),
            "plan": plan.describe(),
            "clip_events": [{"t": c.t, "value": c.value, "index": list(c.index)} for c in traj.clip_events],
            "T": self.T,
            "dt": self.dt,
            "config_sha256": self.config_sha256,
        }
        self.writer.write_json(SIMULATE_SUMMARY, summary)
        return summary

    def run_front(self) -> dict:
        traj = self.trajectory()
        grid = traj.grid
        n_plus = self.n_plus_on(grid.n_cell)
        pair = self.eigenpair()
        levels = levels_list(self.config.front)
        series = front_series(traj, n_plus, levels)
        window = self.config.front.fit_window or default_fit_window(pair.lambda1, traj.span)
        window = (float(window[0]), float(window[1]))

        fits = {c: spreading_exponent(series[c], window) for c in levels}
        rows = []
        for i, t in enumerate(traj.times):
            rows.append([float(t)] + [series[c][i][1] for c in levels] + [fits[c].slope for c in levels])
        header = ["t"] + [level_column(c) for c in levels] + [level_column(c, "slope") for c in levels]
        self.writer.write_csv("front.csv", header, rows)

        fits = {f"{c:g}": fit for c, fit in fits.items()}
        slopes = [f.slope for f in fits.values()]
        spread = max(slopes) - min(slopes)
        stderr = max(f.stderr for f in fits.values())
        predicted = predicted_exponent(pair, self.config.dimension, self.alpha)
        document = {
            "lambda1": pair.lambda1,
            "predicted_exponent": predicted,
            "fit_window": list(window),
            "fits": {k: f.to_dict() for k, f in fits.items()},
            "levels_agree": bool(spread <= 2.0 * stderr),
            "exponential_growth": all(f.exponential for f in fits.values()),
            "relative_error": {k: abs(f.slope / predicted - 1.0) for k, f in fits.items()},
        }
        self.writer.write_json("front_fit.json", document)

        try:
            report = self._convergence(traj, n_plus, pair.lambda1)
            self.writer.write_json("convergence.json", report)
        except ProbeError as exc:
            logger.warning("convergence report skipped: %s", exc)
        return document

    def _convergence(self, traj: Trajectory, n_plus: CellField, lambda1: float) -> dict:
        eps_list = sorted(self.config.verify.eps_list, reverse=True)
        probes_A, probes_B = convergence_probes(lambda1, self.config.dimension, self.alpha,
                                                min(eps_list) * traj.span)
        report = convergence_report(traj, n_plus, eps_list, probes_A, probes_B, lambda1)
        return report.to_dict()

    def run_verify(self, checks: Sequence[str]) -> Dict[str, dict]:
        unknown = set(checks) - set(CHECKS)
        if unknown:
            raise ScenarioError(f"unknown checks {sorted(unknown)}", field_path="verify")
        verdicts: Dict[str, dict] = {}
        if "tails" in checks:
            verdicts.update(self._verify_tails())
        if "lemma1" in checks:
            verdicts.update(self._verify_lemma())
        if "sandwich" in checks:
            verdicts.update(self._verify_sandwich())
        if "heatkernel" in checks:
            spec = self.config.verify
            verdicts["heat_kernel"] = heat_kernel_bounds(self.kernel, spec.heat_T_list, spec.probe_radii).to_dict()
        self.writer.write_json("verify.json", verdicts)
        return verdicts

    def _verify_tails(self) -> Dict[str, dict]:
        grid = self.grid()
        run = self.config.run
        n0 = self.initial_datum(grid)
        snapshot = evolve(self.kernel, self.reaction, n0, 1.0, self.dt, snap_every=run.snap_every,
                          backend=run.backend, pad_factor=run.pad_factor).final
        tails = check_tails(snapshot)
        bracket = check_tail_bracket(self.kernel, self.reaction, n0, self.dt, 1.0, snapshot,
                                     backend=run.backend, pad_factor=run.pad_factor)
        return {"tails": tails.to_dict(), "tail_bracket": bracket.to_dict()}

    def _verify_lemma(self) -> Dict[str, dict]:
        spec = self.config.verify
        chi = profile_from_spec(spec.chi, self.config.dimension)
        gamma = spec.gamma if spec.gamma is not None else mid_window_gamma(self.alpha)
        return {
            "lemma1_i": lemma1_i(self.kernel, spec.a_list).to_dict(),
            "lemma1_ii": lemma1_ii(self.kernel, chi, gamma, spec.a_list).to_dict(),
        }

    def _verify_sandwich(self) -> Dict[str, dict]:
        spec = self.config.verify
        pair = self.eigenpair()
        traj = self.trajectory()
        start = traj.at(1.0, tol=0.5 * self.dt)
        c_m, c_M = initial_constants(start)
        r = self.reaction
        env = Envelope.from_tails(pair, c_m, c_M, spec.epsilon, r.c_lower, r.C_upper)
        verdict = check_sandwich(traj, env, spec.probes, 1.0, c_m, c_M)
        verdict.measured.update({"C_m": env.C_m, "C_M": env.C_M, "delta": env.delta, "c_m": c_m, "c_M": c_M})

        control = Envelope.unchecked(env.C_m, 0.5 * start.sup / pair.phi1.max, env.delta, env.epsilon,
                                     pair, r.c_lower, r.C_upper)
        raw = check_sandwich(traj, control, spec.probes, 1.0)
        violations = raw.measured["violations_lower"] + raw.measured["violations_upper"]
        control_verdict = Verdict("sandwich_control", violations > 0, raw.measured, margin=float(violations),
                                  notes=["upper constant halved below the starting snapshot"])
        eps0 = empirical_epsilon_zero(traj, pair, c_m, c_M, r.c_lower, r.C_upper, spec.probes)
        verdict.measured["empirical_epsilon_zero"] = eps0
        return {"sandwich": verdict.to_dict(), "sandwich_control": control_verdict.to_dict()}

    def run_steady(self) -> dict:
        document = self.steady().to_dict()
        self.writer.write_json("steady.json", document)
        return document

    def run_pipeline(self, subcommand: str, checks: Sequence[str] = ()) -> dict:
        if subcommand == "eig":
            return self.run_eig()
        if subcommand == "simulate":
            return self.run_simulate()
        if subcommand == "front":
            return self.run_front()
        if subcommand == "verify":
            return self.run_verify(checks or CHECKS)
        if subcommand == "steady":
            return self.run_steady()
        raise ScenarioError(f"unknown subcommand {subcommand!r}", field_path="subcommand")


def convergence_probes(lambda1: float, d: int, alpha: float, horizon: float
                       ) -> Tuple[List[Tuple[object, float]], List[Tuple[object, float]]]:
    """Rescaled (x, t) probes half a unit ahead of the limit front (set A) and behind it (set B)."""
    p = d + 2.0 * alpha
    lam = abs(lambda1)
    probes_A, probes_B = [], []
    for t in (0.25 * horizon, 0.5 * horizon):
        radii_B = [0.5]
        r_B = float(np.exp((lam * t - 0.5) / p))
        if r_B > 0.5:
            radii_B.append(r_B)
        r_A = float(np.exp((lam * t + 0.5) / p))
        probes_A.append((r_A if d == 1 else [r_A, 0.0], t))
        probes_B.extend((r if d == 1 else [r, 0.0], t) for r in radii_B)
    return probes_A, probes_B


def summarize(verdicts: Dict[str, dict]) -> List[Tuple[str, bool]]:
    return [(name, bool(v.get("passed"))) for name, v in verdicts.items()]
