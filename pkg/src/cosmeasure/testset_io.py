"""JSON storage for benchmark corpora.

Layout: ``<root>/<set_type>/<n>/<modifier>.json`` with keys ``matrix``
(row-major, ``matrix[i][j]`` is coordinate ``i`` of vector ``j``),
``solution`` (number or null) and an optional ``meta`` object.  A
``manifest.json`` at the root lists every stored case.
"""
from __future__ import annotations

import json
import logging
import math
import os
from pathlib import Path

import numpy as np

from .core import normalize_set
from .errors import CorpusIOError, DimensionError, ParseError
from .generators import FAMILIES, GeneratorSpec, TestCase, generate

log = logging.getLogger(__name__)

SET_TYPE_DIRS = {
    "canonical_min": "min_can_pb",
    "canonical_max": "max_can_pb",
    "uniform_simplex": "uniform_simplex_pb",
    "min_delta_shift": "min_delta_shift_pb",
    "max_delta_shift": "max_delta_shift_pb",
    "aug_max_delta_shift": "aug_max_delta_shift_pb",
    "optimal_orthogonal": "opt_ortho_pb",
    "random_pss": "random_pss",
}

MANIFEST = "manifest.json"
FULL_DIMS = (10, 13, 15, 18, 21, 24, 27, 30, 40, 50, 60, 70, 80, 90, 100)
DESK_DIMS = tuple(range(2, 9))
NUMBER_FORMAT = ".17g"


def modifier(spec: GeneratorSpec) -> str:
    parts = []
    if spec.delta is not None:
        parts.append(f"delta_{spec.delta:.10g}")
    if spec.size is not None:
        parts.append(f"s_{spec.size}")
    if spec.family in ("random_pss", "aug_max_delta_shift"):
        parts.append(f"inst{spec.instance}_seed{spec.seed}")
    return "__".join(parts) or "default"


def case_path(spec: GeneratorSpec) -> Path:
    return Path(SET_TYPE_DIRS[spec.family]) / str(spec.dim) / f"{modifier(spec)}.json"


def _spec_meta(spec: GeneratorSpec) -> dict:
    meta = {"family": spec.family, "n": spec.dim, "params": spec.params()}
    if spec.seed is not None:
        meta["seed"] = spec.seed
    return meta


def _dump(obj, fh) -> None:
    """json.dump with every float written at 17 significant digits."""
    def enc(o):
        if isinstance(o, float):
            if not math.isfinite(o):
                raise ValueError("non-finite number in test case")
            return format(o, NUMBER_FORMAT)
        if isinstance(o, dict):
            return "{" + ", ".join(f"{json.dumps(str(k))}: {enc(v)}" for k, v in o.items()) + "}"
        if isinstance(o, (list, tuple)):
            return "[" + ", ".join(enc(v) for v in o) + "]"
        if isinstance(o, (np.integer,)):
            return str(int(o))
        if isinstance(o, np.floating):
            return enc(float(o))
        return json.dumps(o)
    fh.write(enc(obj))
    fh.write("\n")


def case_document(tc: TestCase) -> dict:
    meta = _spec_meta(tc.spec)
    if tc.transform_log:
        meta["transform_log"] = tc.transform_log
    return {
        "matrix": [[float(x) for x in row] for row in tc.set.matrix],
        "solution": None if tc.known_cm is None else float(tc.known_cm),
        "meta": meta,
    }


def save_case(tc: TestCase, root) -> Path:
    rel = case_path(tc.spec)
    path = Path(root) / rel
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            _dump(case_document(tc), fh)
    except OSError as exc:
        raise CorpusIOError(f"cannot write {path}: {exc}") from exc
    return path


def load_case(path) -> TestCase:
    """Read a stored case; unknown keys are ignored and columns re-normalized."""
    path = Path(path)
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON ({exc})") from exc
    except OSError as exc:
        raise CorpusIOError(f"cannot read {path}: {exc}") from exc
    if not isinstance(doc, dict) or "matrix" not in doc:
        raise ParseError(f"{path}: expected an object with a 'matrix' key")
    rows = doc["matrix"]
    if (not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows)
            or len({len(r) for r in rows}) != 1 or not rows[0]):
        raise ParseError(f"{path}: 'matrix' must be a non-empty rectangular array")
    try:
        M = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: non-numeric matrix entries") from exc
    solution = doc.get("solution")
    if solution is not None and not isinstance(solution, (int, float)):
        raise ParseError(f"{path}: 'solution' must be a number or null")
    n, k = M.shape
    if solution is not None and k < n + 1:
        raise DimensionError(f"{path}: {k} vectors cannot positively span R^{n}")
    drift = np.abs(np.linalg.norm(M, axis=0) - 1.0)
    if np.any(drift > 1e-6):
        log.warning("%s: columns are not unit length (max drift %.2e); normalizing", path, drift.max())
    S = normalize_set(list(M.T))
    meta = doc.get("meta")
    if not isinstance(meta, dict):
        meta = {}
    spec = _spec_from_meta(meta, n, path)
    return TestCase(S, None if solution is None else float(solution), spec,
                    list(meta.get("transform_log", [])))


def _spec_from_meta(meta: dict, n: int, path: Path) -> GeneratorSpec | None:
    """Rebuild provenance; ``None`` when absent or not a valid spec."""
    family = meta.get("family")
    if family not in FAMILIES:
        return None
    params = meta.get("params") or {}
    try:
        return GeneratorSpec(family, n, delta=params.get("delta"), size=params.get("size"),
                             augment_count=params.get("augment_count"),
                             seed=meta.get("seed"), instance=params.get("instance", 0))
    except (TypeError, ValueError):
        # provenance that does not validate is dropped rather than rejected
        return None


def standard_grid(dims=DESK_DIMS, seed: int = 0) -> list[GeneratorSpec]:
    """Table-style grid: every family, three deltas, three random instances.

    Optimal orthogonal sizes ``floor(1.25n)`` and ``floor(1.75n)`` are raised
    to ``n+1`` when smaller and de-duplicated.
    """
    specs: list[GeneratorSpec] = []
    for n in dims:
        deltas = (0.0, 1 / (2 * n), 2 / (3 * n))
        specs.append(GeneratorSpec("canonical_min", n))
        specs += [GeneratorSpec("min_delta_shift", n, delta=d) for d in deltas]
        specs += [GeneratorSpec("max_delta_shift", n, delta=d) for d in deltas]
        for d in deltas:
            for inst in range(3):
                specs.append(GeneratorSpec("aug_max_delta_shift", n, delta=d, augment_count=n * n,
                                           seed=_instance_seed(seed, n, "aug", d, inst), instance=inst))
        for s in sorted({max(n + 1, int(1.25 * n)), max(n + 1, int(1.75 * n))}):
            specs.append(GeneratorSpec("optimal_orthogonal", n, size=s))
        for inst in range(3):
            specs.append(GeneratorSpec("random_pss", n, seed=_instance_seed(seed, n, "pss", 0.0, inst),
                                       instance=inst))
    return specs


def _instance_seed(master: int, n: int, tag: str, delta: float, inst: int) -> int:
    words = [master, n, sum(tag.encode()), int(round(delta * 1e9)), inst]
    return int(np.random.SeedSequence(words).generate_state(1, dtype=np.uint64)[0] >> 1)


def build_corpus(plan, root) -> list[dict]:
    """Generate and store every spec in ``plan``; write and return the manifest."""
    root = Path(root)
    manifest = []
    for spec in plan:
        tc = generate(spec)
        path = save_case(tc, root)
        manifest.append({
            "path": path.relative_to(root).as_posix(),
            "family": spec.family,
            "n": spec.dim,
            "params": spec.params(),
            "seed": spec.seed,
        })
    write_manifest(manifest, root)
    return manifest


def write_manifest(manifest: list[dict], root) -> Path:
    path = Path(root) / MANIFEST
    try:
        tmp = path.with_suffix(".json.tmp")
        with open(tmp, "w") as fh:
            _dump(manifest, fh)
        os.replace(tmp, path)
    except OSError as exc:
        raise CorpusIOError(f"cannot write manifest {path}: {exc}") from exc
    return path


def read_manifest(path) -> list[dict]:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST
    try:
        with open(path) as fh:
            entries = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed manifest ({exc})") from exc
    except OSError as exc:
        raise CorpusIOError(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(entries, list) or not all(isinstance(e, dict) and "path" in e for e in entries):
        raise ParseError(f"{path}: manifest must be a list of objects with a 'path'")
    return entries


def spec_to_dict(spec: GeneratorSpec) -> dict:
    return {k: v for k, v in spec.__dict__.items() if v is not None}


def spec_from_dict(d: dict) -> GeneratorSpec:
    return GeneratorSpec(**d)
