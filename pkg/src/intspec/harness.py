"""Analysis pipeline and Monte Carlo size/power experiments.

Replication ``r`` of cell ``c`` draws its sample from the stream keyed by
``(seed, c, r)`` and its limit simulation (if any) from a seed derived from
the same key, so tables do not depend on the number of workers.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .copulas import Scenario, ScenarioError, generate, preset
from .estimator import estimate_path
from .limit import DEFAULT_SIZES, CriticalTable, pillow_critical_values, substream
from .sample import BlockScheme, InfeasibleSchemeError, Sample, TruncationWarning, decompose, enumerate_candidate_sets
from .stationarity import MissingSimulationError, PerSampleSimulation, TestReport, compute_statistics, decide

TESTS = ("ks", "cm")


def truncate(sample: Sample, b: int) -> Sample:
    """Keep the first ``floor(n/b) * b`` observations, warning if any are dropped."""
    n = len(sample)
    if n < b:
        raise InfeasibleSchemeError(f"fewer observations than one block (n={n} < b={b})")
    used = (n // b) * b
    if used < n:
        warnings.warn(f"discarding {n - used} trailing observation(s) that do not fill a block of {b}",
                      TruncationWarning, stacklevel=2)
        return Sample(sample.x[:used], sample.t[:used])
    return sample


def analyze(data, b: int, k: int, norm: str = "euclidean", critical=None, sizes=DEFAULT_SIZES,
            limit_replications: int | None = 200, seed: int = 0, refine: int = 1, cap: int = 10_000,
            backend: str | None = None) -> TestReport:
    """Full pipeline on one sample: truncate, decompose, estimate, test, decide.

    ``critical`` is a :class:`CriticalTable`, ``"simulate"`` (per-sample limit
    simulation) or None, which means the published table for d = 2 and
    per-sample simulation otherwise.
    """
    sample = data if isinstance(data, Sample) else Sample.equidistant(data)
    sample = truncate(sample, b)
    scheme = BlockScheme(len(sample), b, k)
    path = estimate_path(decompose(sample, norm), scheme)
    theta, _, _ = path.atoms()
    family = enumerate_candidate_sets(theta, sample.d, cap)
    report = compute_statistics(path, family, backend)
    if critical is None:
        critical = CriticalTable.published() if sample.d == 2 else "simulate"
    if isinstance(critical, str):
        if critical != "simulate":
            raise ValueError(f"unknown critical source {critical!r}")
        if not limit_replications:
            raise MissingSimulationError("per-sample simulation needs a positive limit_replications budget")
        critical = PerSampleSimulation(limit_replications, seed, refine)
    return decide(report, critical, sizes, backend)


@dataclass(frozen=True)
class Cell:
    scenario: Scenario
    b: int
    k: int
    family: str = ""
    parameter: tuple | None = None  # (name, value) for power curves

    @property
    def id(self) -> str:
        return self.scenario.label


@dataclass(frozen=True)
class ExperimentPlan:
    cells: tuple[Cell, ...]
    replications: int = 200
    sizes: tuple[float, ...] = DEFAULT_SIZES
    seed: int = 0
    critical: CriticalTable | None = None  # d = 2; None means the published table
    limit_replications: int | None = None  # per-sample budget, required for d >= 3
    simulate_limit: bool = False  # use per-sample simulation for d = 2 as well
    refine: int = 1
    norm: str = "euclidean"
    cap: int = 10_000

    def __post_init__(self):
        if self.replications < 0:
            raise ValueError("replications must be nonnegative")
        needs_sim = self.simulate_limit or any(c.scenario.d >= 3 for c in self.cells)
        if needs_sim and not self.limit_replications:
            raise MissingSimulationError(
                "cells with d >= 3 (or simulate_limit) need a per-sample limit simulation budget "
                "(limit_replications, e.g. 200)")
        if not all(self.uses_simulation(c) for c in self.cells):
            table = self.table()
            for a in self.sizes:
                table.critical(a)

    @classmethod
    def grid(cls, scenarios, blocks, **kw) -> "ExperimentPlan":
        """Cross product of scenarios and ``(b, k)`` pairs."""
        cells = tuple(s if isinstance(s, Cell) else Cell(s, 0, 0) for s in scenarios)
        return cls(tuple(Cell(c.scenario, b, k, c.family, c.parameter) for c in cells for b, k in blocks), **kw)

    def uses_simulation(self, cell: Cell) -> bool:
        return self.simulate_limit or cell.scenario.d >= 3

    def table(self) -> CriticalTable:
        return self.critical if self.critical is not None else CriticalTable.published()


def _cell_problem(cell: Cell) -> str | None:
    try:
        BlockScheme(cell.scenario.n, cell.b, cell.k)
    except InfeasibleSchemeError as exc:
        return str(exc)
    return None


def _limit_seed(seed: int, c: int, r: int) -> int:
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(c, r, 1)).generate_state(1)[0])


def _decision(decisions: dict, size: float) -> tuple[bool, bool]:
    for a, v in decisions.items():
        if abs(a - size) < 1e-12:
            return bool(v[0]), bool(v[1])
    raise KeyError(f"no decision at nominal size {size}")


def _replicate(plan: ExperimentPlan, task: tuple[int, int]):
    c, r = task
    cell = plan.cells[c]
    sample = generate(cell.scenario, substream(plan.seed, c, r))
    if plan.uses_simulation(cell):
        source = PerSampleSimulation(plan.limit_replications, _limit_seed(plan.seed, c, r), plan.refine)
    else:
        source = plan.table()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        rep = analyze(sample, cell.b, cell.k, plan.norm, source, plan.sizes, cap=plan.cap)
    dec = tuple(_decision(rep.decisions, a) for a in sorted(plan.sizes))
    return c, r, rep.t_ks, rep.t_cm, rep.p_values, dec


@dataclass
class CellResult:
    cell: Cell
    index: int
    replications: int
    sizes: tuple[float, ...]
    statistics: np.ndarray  # (R, 2): t_ks, t_cm
    p_values: np.ndarray | None  # (R, 2) when simulated
    rejections: dict  # (test, size) -> count

    def frequency(self, test: str, size: float) -> float:
        return self.rejections[(test, size)] / self.replications if self.replications else float("nan")

    def mc_se(self, test: str, size: float) -> float:
        if not self.replications:
            return float("nan")
        p = self.frequency(test, size)
        return math.sqrt(p * (1.0 - p) / self.replications)


@dataclass
class PowerTable:
    seed: int
    replications: int
    results: list[CellResult] = field(default_factory=list)
    infeasible: list[dict] = field(default_factory=list)

    def rows(self) -> list[dict]:
        out = []
        for res in self.results:
            for size in res.sizes:
                for test in TESTS:
                    out.append({
                        "scenario": res.cell.id, "b": res.cell.b, "k": res.cell.k, "test": test, "size": size,
                        "rejections": res.rejections[(test, size)], "R": res.replications,
                        "frequency": res.frequency(test, size), "mc_se": res.mc_se(test, size), "seed": self.seed,
                    })
        return out

    def lookup(self, scenario: str, b: int, k: int) -> CellResult:
        for res in self.results:
            if res.cell.id == scenario and res.cell.b == b and res.cell.k == k:
                return res
        raise KeyError((scenario, b, k))

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["scenario", "b", "k", "test", "size", "rejections", "R", "frequency", "mc_se", "seed"]
        w = csv.DictWriter(buf, cols, lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow({**row, "size": _num(row["size"]), "frequency": _num(row["frequency"]),
                        "mc_se": _num(row["mc_se"])})
        return buf.getvalue()

    def curves_csv(self) -> str:
        """Power curves keyed by (model family, parameter value, b, k, test, size)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["family", "parameter", "value", "b", "k", "test", "size", "frequency", "mc_se"])
        for res in self.results:
            if res.cell.parameter is None:
                continue
            name, value = res.cell.parameter
            for size in res.sizes:
                for test in TESTS:
                    w.writerow([res.cell.family, name, _num(value), res.cell.b, res.cell.k, test, _num(size),
                                _num(res.frequency(test, size)), _num(res.mc_se(test, size))])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [{**r, "frequency": _finite(r["frequency"]), "mc_se": _finite(r["mc_se"])} for r in self.rows()]
        return json.dumps({"seed": self.seed, "replications": self.replications, "rows": rows,
                           "infeasible": self.infeasible}, indent=2) + "\n"


def _num(x) -> str:
    # repr-style formatting never consults the locale
    return "nan" if x != x else format(float(x), ".6g")


def _finite(x):
    return None if x != x else x


def run(plan: ExperimentPlan, workers: int = 1) -> PowerTable:
    """Simulate every feasible cell ``plan.replications`` times and tabulate rejections.

    Infeasible ``(b, k)`` cells are listed in ``PowerTable.infeasible``.
    """
    table = PowerTable(plan.seed, plan.replications)
    feasible = []
    for c, cell in enumerate(plan.cells):
        problem = _cell_problem(cell)
        if problem is None:
            feasible.append(c)
        else:
            table.infeasible.append({"scenario": cell.id, "b": cell.b, "k": cell.k, "reason": problem})
    tasks = [(c, r) for c in feasible for r in range(plan.replications)]
    work = partial(_replicate, plan)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(work, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        outcomes = [work(t) for t in tasks]
    outcomes.sort(key=lambda o: (o[0], o[1]))
    sizes = tuple(sorted(plan.sizes))
    by_cell = {c: [] for c in feasible}
    for o in outcomes:
        by_cell[o[0]].append(o)
    for c in feasible:
        rows = by_cell[c]
        cell = plan.cells[c]
        stats = np.array([[o[2], o[3]] for o in rows], dtype=np.float64).reshape(-1, 2)
        pv = None
        if plan.uses_simulation(cell):
            pv = np.array([o[4] for o in rows], dtype=np.float64).reshape(-1, 2)
        rej = {}
        for i, a in enumerate(sizes):
            rej[("ks", a)] = sum(o[5][i][0] for o in rows)
            rej[("cm", a)] = sum(o[5][i][1] for o in rows)
        table.results.append(CellResult(cell, c, len(rows), sizes, stats, pv, rej))
    return table


def p_value_quantiles(scenario: Scenario, b: int, k: int, replications: int, seed: int = 0,
                      limit_replications: int = 200, refine: int = 1, workers: int = 1):
    """Sorted per-sample-simulation p-values ``(ks, cm)`` over ``replications`` samples."""
    if replications == 0:
        return np.empty(0), np.empty(0)
    plan = ExperimentPlan((Cell(scenario, b, k),), replications, seed=seed, limit_replications=limit_replications,
                          simulate_limit=True, refine=refine)
    res = run(plan, workers)
    if res.infeasible:
        raise InfeasibleSchemeError(res.infeasible[0]["reason"])
    pv = res.results[0].p_values
    return np.sort(pv[:, 0]), np.sort(pv[:, 1])


# --- plan documents -------------------------------------------------------------

PLAN_KEYS = {"seed", "replications", "sizes", "scenarios", "blocks", "b", "k", "critical",
             "limit_replications", "simulate_limit", "refine", "norm", "cap", "workers"}
SCENARIO_ENTRY_KEYS = {"preset", "n", "d", "alpha", "sine_factor", "shift_scale", "df", "params", "sweep"}


def _scenario_cells(entry: dict, where: str) -> list[Cell]:
    if not isinstance(entry, dict):
        raise ScenarioError(f"{where}: expected an object")
    if "scenario" in entry:
        if set(entry) - {"scenario"}:
            raise ScenarioError(f"{where}.{sorted(set(entry) - {'scenario'})[0]}: unknown key")
        try:
            sc = Scenario.from_dict(entry["scenario"])
        except ScenarioError as exc:
            raise ScenarioError(f"{where}.scenario.{exc}") from None
        return [Cell(sc, 0, 0, sc.label)]
    extra = sorted(set(entry) - SCENARIO_ENTRY_KEYS)
    if extra:
        raise ScenarioError(f"{where}.{extra[0]}: unknown key")
    if "preset" not in entry:
        raise ScenarioError(f"{where}.preset: required (or give a full 'scenario' object)")
    base = {k: entry[k] for k in ("n", "d", "alpha", "sine_factor", "shift_scale", "df") if k in entry}
    params = dict(entry.get("params", {}))
    sweep = entry.get("sweep", {})
    if len(sweep) > 1:
        raise ScenarioError(f"{where}.sweep: at most one swept parameter")
    try:
        if not sweep:
            return [Cell(preset(entry["preset"], **base, **params), 0, 0, entry["preset"])]
        (name, values), = sweep.items()
        return [Cell(preset(entry["preset"], **base, **params, **{name: v}), 0, 0, entry["preset"], (name, float(v)))
                for v in values]
    except ScenarioError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def plan_from_dict(doc: dict) -> tuple[ExperimentPlan, int]:
    """Build a plan from a JSON document; returns ``(plan, workers)``.

    Schema: ``scenarios`` (list of ``{"preset": name, "n", "d", "alpha",
    "sine_factor", "shift_scale", "df", "params": {...}, "sweep": {name: [values]}}``
    or ``{"scenario": {...}}``), either ``blocks`` (list of ``[b, k]``) or ``b``
    and ``k`` lists (cross product), ``replications``, ``sizes``, ``seed``,
    ``critical`` (``"published"``, ``{"file": path}`` or ``{"simulate":
    {"grid_step", "replications", "seed"}}``), ``limit_replications``,
    ``simulate_limit``, ``refine``, ``norm``, ``cap``, ``workers``.
    """
    if not isinstance(doc, dict):
        raise ScenarioError("plan: expected an object")
    extra = sorted(set(doc) - PLAN_KEYS)
    if extra:
        raise ScenarioError(f"{extra[0]}: unknown key")
    if "scenarios" not in doc:
        raise ScenarioError("scenarios: required")
    cells = [c for i, e in enumerate(doc["scenarios"]) for c in _scenario_cells(e, f"scenarios[{i}]")]
    if "blocks" in doc:
        blocks = [tuple(int(v) for v in pair) for pair in doc["blocks"]]
    elif "b" in doc and "k" in doc:
        blocks = [(int(b), int(k)) for b in doc["b"] for k in doc["k"]]
    else:
        raise ScenarioError("blocks: required (or both b and k)")
    crit = doc.get("critical", "published")
    if crit == "published":
        table = None
    elif isinstance(crit, dict) and set(crit) == {"file"}:
        table = CriticalTable.load(crit["file"])
    elif isinstance(crit, dict) and set(crit) == {"simulate"}:
        opts = crit["simulate"]
        bad = sorted(set(opts) - {"grid_step", "replications", "seed"})
        if bad:
            raise ScenarioError(f"critical.simulate.{bad[0]}: unknown key")
        table = pillow_critical_values(opts.get("grid_step", 0.005), opts.get("replications", 2000),
                                       doc.get("sizes", DEFAULT_SIZES), opts.get("seed", 0))
    else:
        raise ScenarioError("critical: expected 'published', {'file': path} or {'simulate': {...}}")
    plan = ExperimentPlan.grid(
        cells, blocks,
        replications=int(doc.get("replications", 200)),
        sizes=tuple(float(s) for s in doc.get("sizes", DEFAULT_SIZES)),
        seed=int(doc.get("seed", 0)),
        critical=table,
        limit_replications=doc.get("limit_replications"),
        simulate_limit=bool(doc.get("simulate_limit", False)),
        refine=int(doc.get("refine", 1)),
        norm=str(doc.get("norm", "euclidean")),
        cap=int(doc.get("cap", 10_000)),
    )
    return plan, int(doc.get("workers", 1))
