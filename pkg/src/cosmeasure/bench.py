"""Benchmark sweeps over a stored corpus and accuracy-profile output.

Each stored case is rotated and permuted ``rotations`` times, every method
is run on every draw, and each run becomes one :class:`AccuracyRecord`.
All seeds derive from ``master_seed`` so a sweep with one worker is fully
reproducible.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import CorpusIOError, CosineMeasureError, EmptyUniverseError
from .generators import transform
from .solvers import METHODS, SolverConfig, solve
from .testset_io import load_case, read_manifest

CSV_COLUMNS = ("case_id", "family", "n", "k", "method", "seed", "value", "truth",
               "correct_digits", "wall_ms", "completed")
DIGIT_GRID = np.arange(0, 16.0 + 1e-9, 0.25)
MAX_DIGITS = 16.0
LP_REPETITIONS = 4


@dataclass(frozen=True)
class BenchPlan:
    """What to run.  ``lp_iterations`` is a fixed round count, ``None`` for
    ``200 n`` rounds, or ``"budget"`` to keep drawing until the budget ends."""

    manifest: str
    methods: tuple[str, ...] = METHODS
    time_budget: float = 30.0
    rotations: int = 3
    master_seed: int = 0
    lp_iterations: int | str | None = None
    workers: int = 1
    record_timing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        if not self.methods:
            raise ValueError("at least one method is required")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
        if not self.time_budget > 0:
            raise ValueError("time_budget must be positive")
        if self.rotations < 1:
            raise ValueError("rotations must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        lp = self.lp_iterations
        if not (lp is None or lp == "budget" or (isinstance(lp, int) and lp >= 1)):
            raise ValueError("lp_iterations must be a positive int, null or 'budget'")

    @classmethod
    def from_json(cls, path) -> "BenchPlan":
        with open(path) as fh:
            data = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown plan field(s): {sorted(unknown)}")
        manifest = Path(data.get("manifest", "."))
        if not manifest.is_absolute():
            data["manifest"] = str(Path(path).parent / manifest)
        return cls(**data)


@dataclass
class AccuracyRecord:
    case_id: str
    family: str
    n: int
    k: int
    method: str
    seed: int
    value: float
    truth: float | None
    correct_digits: float | None
    wall_ms: float
    completed: bool
    repetition: int = 0
    status: str = ""
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def sort_key(self):
        return (self.case_id, METHODS.index(self.method) if self.method in METHODS else 99,
                self.repetition)


@dataclass
class AccuracyProfile:
    grid: np.ndarray
    curves: dict[str, np.ndarray]
    counts: dict[str, int] = field(default_factory=dict)

    def at(self, method: str, t: float) -> float:
        i = int(np.searchsorted(self.grid, t, side="left"))
        return float(self.curves[method][min(i, len(self.grid) - 1)])


def correct_digits(value: float, truth: float | None) -> float | None:
    """``-log10`` of the relative error, clipped to [0, 16]; None without truth."""
    if truth is None:
        return None
    if value is None or not math.isfinite(value):
        return 0.0
    err = abs(value - truth) / max(abs(truth), 1e-30)
    if err == 0.0:
        return MAX_DIGITS
    return float(min(MAX_DIGITS, max(0.0, -math.log10(err))))


def _draw_seeds(master: int, case_idx: int, r: int) -> list[int]:
    ss = np.random.SeedSequence([master, case_idx, r])
    return [int(s >> 1) for s in ss.generate_state(2 + LP_REPETITIONS, dtype=np.uint64)]


def _case_id(entry: dict, r: int) -> str:
    stem = entry["path"][:-5] if entry["path"].endswith(".json") else entry["path"]
    return f"{stem}#r{r}"


def _run_draw(task) -> list[AccuracyRecord]:
    """Load one case, apply one rotation/permutation draw, run every method."""
    plan, root, case_idx, entry, r = task
    seeds = _draw_seeds(plan.master_seed, case_idx, r)
    case_id = _case_id(entry, r)
    family = str(entry.get("family", ""))
    jobs = []
    for m in plan.methods:
        reps = LP_REPETITIONS if m == "random_lp" else 1
        jobs += [(m, rep, seeds[2 + rep] if m == "random_lp" else seeds[0]) for rep in range(reps)]

    try:
        tc = transform(load_case(Path(root) / entry["path"]), seeds[0], seeds[1])
    except (CosineMeasureError, OSError, ValueError) as exc:
        n = int(entry.get("n", 0))
        return [AccuracyRecord(case_id, family, n, 0, m, s, math.nan, None, None, 0.0, False,
                               rep, "failed", f"{type(exc).__name__}: {exc}")
                for m, rep, s in jobs]

    S, truth = tc.set, tc.known_cm
    records = []
    for m, rep, seed in jobs:
        if m == "random_lp":
            lp = plan.lp_iterations
            iters = 200 * S.dim if lp is None else (2**62 if lp == "budget" else lp)
        else:
            iters = 1
        cfg = SolverConfig(time_budget=plan.time_budget, rng_seed=seed, lp_iterations=iters)
        t0 = time.perf_counter()
        try:
            rep_out = solve(S, m, cfg)
            value, completed = rep_out.result.value, rep_out.completed
            status, error = rep_out.result.status, None
        except (CosineMeasureError, ValueError) as exc:
            value, completed, status = math.nan, False, "failed"
            error = f"{type(exc).__name__}: {exc}"
        wall = (time.perf_counter() - t0) * 1e3
        records.append(AccuracyRecord(case_id, family, S.dim, S.size, m, seed, value, truth,
                                      correct_digits(value, truth), wall, completed, rep,
                                      status, error))
    return records


def run_benchmark(plan: BenchPlan) -> list[AccuracyRecord]:
    """Run the sweep; unreadable cases become failed records, not exceptions."""
    manifest = Path(plan.manifest)
    root = manifest if manifest.is_dir() else manifest.parent
    entries = read_manifest(manifest)
    tasks = [(plan, str(root), i, e, r) for i, e in enumerate(entries) for r in range(plan.rotations)]
    if plan.workers == 1:
        chunks = map(_run_draw, tasks)
        records = [rec for chunk in chunks for rec in chunk]
    else:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            records = [rec for chunk in pool.map(_run_draw, tasks) for rec in chunk]
    records.sort(key=AccuracyRecord.sort_key)
    return records


def _digits_by_case(records) -> dict[str, dict[str, float]]:
    """Mean correct digits per (method, case); repeated random-LP runs are averaged."""
    acc: dict[str, dict[str, list[float]]] = {}
    for rec in records:
        if rec.truth is None or rec.correct_digits is None:
            continue
        acc.setdefault(rec.method, {}).setdefault(rec.case_id, []).append(rec.correct_digits)
    return {m: {c: float(np.mean(v)) for c, v in cases.items()} for m, cases in acc.items()}


def accuracy_profile(records, digit_grid=DIGIT_GRID) -> AccuracyProfile:
    grid = np.asarray(digit_grid, dtype=float)
    per_method = _digits_by_case(records)
    if not per_method:
        raise EmptyUniverseError("no record has a known cosine measure")
    curves, counts = {}, {}
    for m in sorted(per_method, key=lambda m: METHODS.index(m) if m in METHODS else 99):
        d = np.array(list(per_method[m].values()))
        curves[m] = (d[None, :] >= grid[:, None] - 1e-12).mean(axis=1)
        counts[m] = len(d)
    return AccuracyProfile(grid, curves, counts)


def agreement_table(records) -> list[dict]:
    """Max pairwise deviation between methods on cases without known truth."""
    vals: dict[str, dict[str, list[float]]] = {}
    for rec in records:
        if rec.truth is None and math.isfinite(rec.value):
            vals.setdefault(rec.case_id, {}).setdefault(rec.method, []).append(rec.value)
    rows = []
    for case_id in sorted(vals):
        means = {m: float(np.mean(v)) for m, v in vals[case_id].items()}
        spread = max(means.values()) - min(means.values())
        rows.append({"case_id": case_id, "methods": len(means), "max_deviation": spread, **means})
    return rows


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "nan" if math.isnan(x) else format(x, ".17g")
    return str(x)


def records_to_csv(records, timing: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([r.case_id, r.family, r.n, r.k, r.method, r.seed, _fmt(r.value), _fmt(r.truth),
                    _fmt(r.correct_digits), format(r.wall_ms, ".3f") if timing else "",
                    _fmt(r.completed)])
    return buf.getvalue()


def emit_csv(records, path, timing: bool = False) -> Path:
    """One row per record.  ``wall_ms`` is left empty unless ``timing`` is set,
    which keeps repeated sweeps byte-identical."""
    path = Path(path)
    try:
        path.write_text(records_to_csv(records, timing))
    except OSError as exc:
        raise CorpusIOError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path) -> list[AccuracyRecord]:
    def num(s):
        return None if s == "" else float(s)

    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            missing = set(CSV_COLUMNS) - set(row)
            if missing:
                raise ValueError(f"{path}: missing column(s) {sorted(missing)}")
            out.append(AccuracyRecord(row["case_id"], row["family"], int(row["n"]), int(row["k"]),
                                      row["method"], int(row["seed"]), float(row["value"]),
                                      num(row["truth"]), num(row["correct_digits"]),
                                      num(row["wall_ms"]) or 0.0, row["completed"] == "true"))
    return out


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


def profile_svg(profile: AccuracyProfile, title: str = "Accuracy profile") -> str:
    W, H, L, R, T, B = 640, 420, 60, 150, 40, 50
    pw, ph = W - L - R, H - T - B
    gmin, gmax = float(profile.grid[0]), float(profile.grid[-1])
    span = (gmax - gmin) or 1.0

    def X(t):
        return L + (t - gmin) / span * pw

    def Y(p):
        return T + (1.0 - p) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{L + pw / 2:.2f}" y="{T - 15}" text-anchor="middle" font-size="14">{title}</text>',
           f'<rect x="{L}" y="{T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in range(int(math.ceil(gmin)), int(gmax) + 1, 2):
        out.append(f'<line x1="{X(t):.2f}" y1="{T + ph}" x2="{X(t):.2f}" y2="{T + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X(t):.2f}" y="{T + ph + 18}" text-anchor="middle">{t}</text>')
    for p in (0.0, 0.25, 0.5, 0.75, 1.0):
        out.append(f'<line x1="{L - 5}" y1="{Y(p):.2f}" x2="{L}" y2="{Y(p):.2f}" stroke="black"/>')
        out.append(f'<text x="{L - 8}" y="{Y(p) + 4:.2f}" text-anchor="end">{p:.2f}</text>')
    out.append(f'<text x="{L + pw / 2:.2f}" y="{H - 10}" text-anchor="middle">correct digits</text>')
    out.append(f'<text x="15" y="{T + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 15 {T + ph / 2:.2f})">proportion solved</text>')

    for i, (method, curve) in enumerate(profile.curves.items()):
        color = _COLORS[i % len(_COLORS)]
        pts = [(X(gmin), Y(float(curve[0])))]
        for j in range(1, len(profile.grid)):
            x = X(float(profile.grid[j]))
            pts.append((x, Y(float(curve[j - 1]))))
            pts.append((x, Y(float(curve[j]))))
        d = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        out.append(f'<polyline points="{d}" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = T + 15 + 20 * i
        out.append(f'<line x1="{L + pw + 15}" y1="{ly}" x2="{L + pw + 40}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{L + pw + 45}" y="{ly + 4}">{method}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_profile_plot(profile: AccuracyProfile, path, title: str = "Accuracy profile") -> Path:
    path = Path(path)
    try:
        path.write_text(profile_svg(profile, title))
    except OSError as exc:
        raise CorpusIOError(f"cannot write {path}: {exc}") from exc
    return path
