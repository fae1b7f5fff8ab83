"""Experiment configuration, seeded ensemble execution, and reporting.

A run is a pure function of (config, software version): per-sample seeds come
from a fixed splitmix64 mix of the master seed and the sample index, workers
only parallelize over samples, and results are merged in sample order, so
artifact bodies are byte-identical across repeats and worker counts.  All
floats are serialized with 17 significant digits and '.' decimals; wall-clock
data lives only in the manifest.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .disorder import (
    BumpFunction,
    InteractionSpec,
    ModelConfig,
    parse_step,
    sample_field,
    validate_assumptions,
)
from .dynamics import (
    MomentObservable,
    annular_decomposition,
    correlator_bound,
    moment_at,
    phase_function,
)
from .geometry import MultiCube, ScaleSequence, scale_sequence
from .hamiltonian import assemble
from .resolvent import (
    GreenSolver,
    ResonantEnergyError,
    classify_cube,
    pair_survey,
    survey_field_box,
    wilson_interval,
)
from .spectral import eigen_report_rows, eigenpairs_in_window

PIPELINES = ("validate", "classify", "survey", "spectral", "moment", "full")

_M64 = (1 << 64) - 1


class ConfigError(ValueError):
    """Configuration failed schema or consistency validation."""


class ReportError(RuntimeError):
    """Report generation is missing required artifacts."""


def sample_seed(master_seed: int, index: int) -> int:
    """splitmix64 of master_seed advanced by the sample index; the public,
    fixed per-sample seed derivation."""
    x = (master_seed + (index + 1) * 0x9E3779B97F4A7C15) & _M64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _M64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _M64
    x ^= x >> 31
    return x


def task_seed(master_seed: int, index: int, scale_index: int) -> int:
    """Field seed of one (sample, scale) task: a second splitmix64 step off
    the sample's root seed, so rows stay traceable to the manifest list."""
    return sample_seed(sample_seed(master_seed, index), scale_index)


def fmt(x) -> str:
    """Float serialization used in every CSV body: 17 significant digits."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelConfig
    L0: int = 3
    k_max: int = 1
    n_samples: int = 20
    master_seed: int = 20260810
    e_grid_count: int = 16
    pipeline: str = "validate"
    out_dir: Optional[str] = None
    spectral_scale_index: Optional[int] = None  # box radius index, default k_max
    moment_scale_indices: Optional[tuple[int, ...]] = None  # default 0..k_max
    t_samples: tuple[float, ...] = (0.5, 5.0, 50.0)

    def __post_init__(self):
        if self.pipeline not in PIPELINES:
            raise ConfigError(f"unknown pipeline {self.pipeline!r}; choose from {PIPELINES}")
        if self.L0 < 2:
            raise ConfigError("scales.L0 must be >= 2")
        if self.k_max < 0:
            raise ConfigError("scales.k_max must be >= 0")
        if self.n_samples < 0:
            raise ConfigError("ensemble.n_samples must be >= 0")
        if self.e_grid_count < 1:
            raise ConfigError("e_grid.count must be >= 1")

    def scales(self) -> ScaleSequence:
        return scale_sequence(self.L0, max(self.k_max, 1))

    def e_grid(self) -> list[float]:
        if self.e_grid_count == 1:
            return [0.0]
        step = self.model.eta / (self.e_grid_count - 1)
        return [i * step for i in range(self.e_grid_count)]

    def to_dict(self) -> dict:
        m = self.model
        return {
            "pipeline": self.pipeline,
            "model": {
                "N": m.N,
                "d": m.d,
                "v": m.v,
                "u0": m.interaction.u0,
                "r0": m.interaction.r0,
                "interaction": m.interaction.kind,
                "bump": m.bump.kind,
                "r1": m.bump.r1,
                "h": f"1/{m.grid_n}",
                "eta": m.eta,
                "m": m.m,
                "p": m.p,
                "q": m.q,
            },
            "scales": {"L0": self.L0, "k_max": self.k_max},
            "ensemble": {"n_samples": self.n_samples, "master_seed": self.master_seed},
            "e_grid": {"count": self.e_grid_count},
            "spectral": (
                {"scale_index": self.spectral_scale_index}
                if self.spectral_scale_index is not None
                else {}
            ),
            "moment": {
                "t_samples": list(self.t_samples),
                **(
                    {"scale_indices": list(self.moment_scale_indices)}
                    if self.moment_scale_indices is not None
                    else {}
                ),
            },
        }

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


def config_from_dict(data: dict, pipeline: Optional[str] = None) -> ExperimentConfig:
    """Build and schema-check a config from parsed TOML/JSON data."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table/object")
    known = {"pipeline", "model", "scales", "ensemble", "e_grid", "out_dir",
             "spectral", "moment"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    md = data.get("model", {})
    model_keys = {"N", "d", "v", "u0", "r0", "interaction", "bump", "r1",
                  "h", "eta", "m", "p", "q"}
    bad_model = set(md) - model_keys
    if bad_model:
        raise ConfigError(f"unknown model keys: {sorted(bad_model)}")
    try:
        model = ModelConfig(
            N=int(md.get("N", 2)),
            d=int(md.get("d", 1)),
            v=float(md.get("v", 10.0)),
            interaction=InteractionSpec(
                r0=float(md.get("r0", 1.0)),
                u0=float(md.get("u0", 1.0)),
                kind=md.get("interaction", "two_body_step"),
            ),
            bump=BumpFunction(
                kind=md.get("bump", "unit_cell_indicator"),
                r1=int(md.get("r1", 1)),
            ),
            h=parse_step(md.get("h", "1/2")),
            eta=float(md.get("eta", 0.5)),
            m=float(md.get("m", 0.2)),
            p=float(md.get("p", 6.0)),
            q=float(md.get("q", 1.0)),
        )
        sc = data.get("scales", {})
        en = data.get("ensemble", {})
        eg = data.get("e_grid", {})
        sp = data.get("spectral", {})
        mo = data.get("moment", {})
        return ExperimentConfig(
            model=model,
            L0=int(sc.get("L0", 3)),
            k_max=int(sc.get("k_max", 1)),
            n_samples=int(en.get("n_samples", 20)),
            master_seed=int(en.get("master_seed", 20260810)),
            e_grid_count=int(eg.get("count", 16)),
            pipeline=pipeline or data.get("pipeline", "validate"),
            out_dir=data.get("out_dir"),
            spectral_scale_index=(
                int(sp["scale_index"]) if "scale_index" in sp else None
            ),
            moment_scale_indices=(
                tuple(int(i) for i in mo["scale_indices"])
                if "scale_indices" in mo
                else None
            ),
            t_samples=tuple(float(t) for t in mo.get("t_samples", (0.5, 5.0, 50.0))),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path, pipeline: Optional[str] = None) -> ExperimentConfig:
    """Parse a TOML or JSON config file (auto-detected)."""
    raw = Path(path).read_bytes()
    text = raw.decode("utf-8")
    data = None
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} looks like JSON but fails to parse: {exc}")
    else:
        try:
            import tomllib  # py >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config {path} fails to parse as TOML: {exc}")
    return config_from_dict(data, pipeline=pipeline)


# ---------------------------------------------------------------------------
# Per-sample tasks (top-level for process pools)
# ---------------------------------------------------------------------------


def _origin_cube(model: ModelConfig, L: int) -> MultiCube:
    return MultiCube((0,) * (model.N * model.d), L, model.N, model.d)


def _tail_radii(scales: ScaleSequence, L: int) -> list[int]:
    return [s for s in scales if s <= L]


def _annulus_scales(scales: ScaleSequence, model: ModelConfig, L: int) -> ScaleSequence:
    """Extend the scale sequence until the annuli bracket every possible
    center |x| <= L of the box."""
    values = scales
    count = len(scales) - 1
    while 5 * model.N * values[len(values) - 1] <= L:
        count += 1
        values = scale_sequence(scales.L0, count)
    return values


def _survey_task(args) -> dict:
    cfg, k, idx = args
    model = cfg.model
    scales = cfg.scales()
    seed = task_seed(cfg.master_seed, idx, k)
    row = pair_survey(
        model,
        scales,
        k,
        cfg.e_grid(),
        model.m,
        n_samples=1,
        seed=seed,
        seed_of_sample=lambda _i: seed,
    )
    rec = row.records[0]
    return {
        "k": k,
        "L": row.scale,
        "seed": seed,
        "sample_idx": idx,
        "e_fail": rec.e_fail,
        "verdict_x": "resonant" if rec.resonant else rec.verdict_x,
        "verdict_y": "resonant" if rec.resonant else rec.verdict_y,
        "failure": rec.failure,
        "resonant": rec.resonant,
    }


def _classify_task(args) -> dict:
    cfg, k, idx = args
    model = cfg.model
    scales = cfg.scales()
    L = scales[k]
    seed = task_seed(cfg.master_seed, idx, k)
    cube = _origin_cube(model, L)
    box = survey_field_box(model, (cube,))
    fld = sample_field(seed, box, model.v)
    op = assemble(cube, fld, model)
    solver = GreenSolver(op)
    n_singular = 0
    worst = (0.0, None)
    resonant = 0
    for e in cfg.e_grid():
        try:
            verdict = classify_cube(op, e, model.m, solver=solver)
        except ResonantEnergyError:
            resonant += 1
            continue
        if not verdict.non_singular:
            n_singular += 1
        if verdict.witness.norm > worst[0]:
            worst = (verdict.witness.norm, e)
    return {
        "k": k,
        "L": L,
        "seed": seed,
        "sample_idx": idx,
        "n_singular_energies": n_singular,
        "n_resonant_energies": resonant,
        "worst_norm": worst[0],
        "worst_energy": worst[1],
        "singular": n_singular > 0,
    }


def _spectral_task(args) -> dict:
    cfg, idx = args
    model = cfg.model
    scales = cfg.scales()
    k_box = cfg.spectral_scale_index if cfg.spectral_scale_index is not None else cfg.k_max
    L = scales[k_box]
    seed = sample_seed(cfg.master_seed, idx)
    cube = _origin_cube(model, L)
    fld = sample_field(seed, survey_field_box(model, (cube,)), model.v)
    op = assemble(cube, fld, model)
    window = (0.0, model.eta)
    pairs = eigenpairs_in_window(op, window)
    crosscheck = None
    if idx % 20 == 0 and op.dim <= 2000:
        # dense result cross-checked against the iterative path on a 5% strand
        alt = eigenpairs_in_window(op, window, dense_cutoff=0)
        if len(alt) != len(pairs):
            crosscheck = math.inf
        else:
            crosscheck = max(
                (abs(a.energy - b.energy) for a, b in zip(pairs, alt)), default=0.0
            )
    rows = eigen_report_rows(pairs, _tail_radii(scales, L))
    for row in rows:
        row["sample_idx"] = idx
        row["seed"] = seed
    return {"rows": rows, "n_pairs": len(pairs), "crosscheck_dev": crosscheck}


def _moment_task(args) -> dict:
    cfg, idx = args
    model = cfg.model
    scales = cfg.scales()
    indices = (
        cfg.moment_scale_indices
        if cfg.moment_scale_indices is not None
        else tuple(range(cfg.k_max + 1))
    )
    L_big = max(scales[k] for k in indices)
    seed = sample_seed(cfg.master_seed, idx)
    fld = sample_field(seed, survey_field_box(model, (_origin_cube(model, L_big),)), model.v)
    obs = MomentObservable(
        Q=model.q, K=MultiCube((0,) * (model.N * model.d), 1, model.N, model.d), eta=model.eta
    )
    out = {
        "sample_idx": idx,
        "seed": seed,
        "Q": model.q,
        "eta": model.eta,
        "K": {"center": list(obs.K.center), "radius": obs.K.radius},
        "exponent_condition_ok": obs.exponent_condition(model.p, model.N, model.d),
        "scales": [],
    }
    for k in sorted(indices):
        L = scales[k]
        op = assemble(_origin_cube(model, L), fld, model)
        pairs = eigenpairs_in_window(op, (0.0, model.eta))
        report = correlator_bound(pairs, obs)
        ann = annular_decomposition(
            pairs, obs, _annulus_scales(scales, model, L), model.m, model.N
        )
        sampled = []
        for t in cfg.t_samples:
            val = moment_at(pairs, obs, phase_function(t))
            sampled.append({"t": t, "value": val, "dominated": val <= report.bound + 1e-10})
        out["scales"].append(
            {
                "k": k,
                "L": L,
                "n_pairs": len(pairs),
                "bound": report.bound,
                "per_annulus": [
                    {
                        "annulus": r.annulus,
                        "L_j": r.scale,
                        "count": r.count,
                        "subtotal": r.subtotal,
                        "comparison": r.comparison,
                    }
                    for r in ann.rows
                ],
                "sampled_t": sampled,
            }
        )
    return out


# ---------------------------------------------------------------------------
# Artifact writing
# ---------------------------------------------------------------------------


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(x) if not isinstance(x, str) else x for x in row])
    path.write_text(buf.getvalue())


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_jsonl(path: Path, rows: Sequence[dict]) -> None:
    path.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in rows))


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# Run engine
# ---------------------------------------------------------------------------


@dataclass
class RunManifest:
    config_hash: str
    version: str
    pipeline: str
    sample_seeds: list[int]
    digests: dict[str, str]
    quarantined: list[dict]
    elapsed_seconds: float
    workers: int
    status: int

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "version": self.version,
            "pipeline": self.pipeline,
            "sample_seeds": self.sample_seeds,
            "digests": self.digests,
            "quarantined": self.quarantined,
            "elapsed_seconds": self.elapsed_seconds,
            "workers": self.workers,
            "status": self.status,
        }


def _run_tasks(task_fn, tasks, workers: int):
    """Execute tasks preserving order; exceptions become quarantine markers."""
    results = []
    if workers <= 1:
        for t in tasks:
            try:
                results.append((None, task_fn(t)))
            except Exception as exc:  # quarantined, run continues
                results.append((f"{type(exc).__name__}: {exc}", None))
        return results
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(task_fn, t) for t in tasks]
        for fut in futures:
            try:
                results.append((None, fut.result()))
            except Exception as exc:
                results.append((f"{type(exc).__name__}: {exc}", None))
    return results


def run(
    config: ExperimentConfig,
    out_dir=None,
    workers: int = 1,
    allow_invalid: bool = False,
) -> RunManifest:
    """Execute the configured pipeline; artifacts land in `out_dir`.

    Status 0 on success, 3 when more than 10% of samples were quarantined.
    Invalid configurations (schema or exponent-condition failures) raise
    ConfigError before any computation.
    """
    t0 = time.monotonic()
    out = Path(out_dir or config.out_dir or f"runs/{config.pipeline}")
    out.mkdir(parents=True, exist_ok=True)

    gate = validate_assumptions(config.model, L0=config.L0, n_draws=20_000)
    if not gate.all_passed and not allow_invalid:
        failed = [c.name for c in gate.checks if not c.passed]
        raise ConfigError(
            f"assumption validation failed ({', '.join(failed)}); "
            "rerun with --allow-invalid to proceed anyway"
        )

    quarantined: list[dict] = []
    digests: dict[str, str] = {}
    n_tasks = 0

    def finish(status: int) -> RunManifest:
        manifest = RunManifest(
            config_hash=config.config_hash(),
            version=__version__,
            pipeline=config.pipeline,
            sample_seeds=[sample_seed(config.master_seed, i) for i in range(config.n_samples)],
            digests=digests,
            quarantined=quarantined,
            elapsed_seconds=time.monotonic() - t0,
            workers=workers,
            status=status,
        )
        _write_json(out / "manifest.json", manifest.to_dict())
        return manifest

    def collect(task_fn, tasks, labels):
        nonlocal n_tasks
        n_tasks += len(tasks)
        results = _run_tasks(task_fn, tasks, workers)
        good = []
        for label, (err, res) in zip(labels, results):
            if err is None:
                good.append(res)
            else:
                quarantined.append({"task": label, "error": err})
        return good

    pipelines = (
        ["validate", "classify", "survey", "spectral", "moment"]
        if config.pipeline == "full"
        else [config.pipeline]
    )

    if "validate" in pipelines:
        report = validate_assumptions(config.model, L0=config.L0)
        _write_json(out / "validation.json", report.to_dict())
        digests["validation.json"] = _digest(out / "validation.json")

    if "classify" in pipelines:
        tasks = [(config, k, i) for k in range(config.k_max + 1) for i in range(config.n_samples)]
        labels = [f"classify k={k} sample={i}" for (_, k, i) in tasks]
        rows = collect(_classify_task, tasks, labels)
        header = [
            "k", "L", "seed", "sample_idx", "n_singular_energies",
            "n_resonant_energies", "worst_norm", "worst_energy", "singular",
        ]
        _write_csv(
            out / "classify_samples.csv",
            header,
            [[r[h] for h in header] for r in rows],
        )
        summary = []
        for k in range(config.k_max + 1):
            sub = [r for r in rows if r["k"] == k]
            n_s = sum(1 for r in sub if r["singular"])
            summary.append(
                {
                    "k": k,
                    "L": config.scales()[k],
                    "samples": len(sub),
                    "singular": n_s,
                    "singular_rate": n_s / len(sub) if sub else 0.0,
                }
            )
        _write_json(out / "classify_summary.json", {"per_scale": summary})
        digests["classify_samples.csv"] = _digest(out / "classify_samples.csv")
        digests["classify_summary.json"] = _digest(out / "classify_summary.json")

    if "survey" in pipelines:
        tasks = [(config, k, i) for k in range(config.k_max + 1) for i in range(config.n_samples)]
        labels = [f"survey k={k} sample={i}" for (_, k, i) in tasks]
        rows = collect(_survey_task, tasks, labels)
        header = ["k", "L", "seed", "sample_idx", "E_fail", "verdict_x", "verdict_y", "failure"]
        _write_csv(
            out / "survey_samples.csv",
            header,
            [[r["k"], r["L"], r["seed"], r["sample_idx"], r["e_fail"],
              r["verdict_x"], r["verdict_y"], r["failure"]] for r in rows],
        )
        summary = []
        for k in range(config.k_max + 1):
            sub = [r for r in rows if r["k"] == k]
            effective = [r for r in sub if not r["resonant"]]
            fails = sum(1 for r in effective if r["failure"])
            lo, hi = wilson_interval(fails, len(effective))
            summary.append(
                {
                    "k": k,
                    "L": config.scales()[k],
                    "samples": len(effective),
                    "failures": fails,
                    "rate": fails / len(effective) if effective else 0.0,
                    "wilson_lo": lo,
                    "wilson_hi": hi,
                    "bound": float(config.scales()[k]) ** (-2.0 * config.model.p),
                    "resonant_excluded": len(sub) - len(effective),
                }
            )
        m = config.model
        _write_json(
            out / "survey_summary.json",
            {
                "per_scale": summary,
                "two_p": 2.0 * m.p,
                "bad_event_exponent": 2.0 * m.p - 2.0 * m.N * m.d * 1.5,
            },
        )
        digests["survey_samples.csv"] = _digest(out / "survey_samples.csv")
        digests["survey_summary.json"] = _digest(out / "survey_summary.json")

    if "spectral" in pipelines:
        tasks = [(config, i) for i in range(config.n_samples)]
        labels = [f"spectral sample={i}" for (_, i) in tasks]
        results = collect(_spectral_task, tasks, labels)
        rows = [row for res in results for row in res["rows"]]
        _write_jsonl(out / "spectral_pairs.jsonl", rows)
        m_hats = [r["m_hat"] for r in rows if r["m_hat"] is not None]
        devs = [r["crosscheck_dev"] for r in results if r["crosscheck_dev"] is not None]
        _write_json(
            out / "spectral_summary.json",
            {
                "n_pairs": len(rows),
                "n_fitted": len(m_hats),
                "median_m_hat": float(np.median(m_hats)) if m_hats else None,
                "crosscheck_max_dev": max(devs) if devs else None,
            },
        )
        digests["spectral_pairs.jsonl"] = _digest(out / "spectral_pairs.jsonl")
        digests["spectral_summary.json"] = _digest(out / "spectral_summary.json")

    if "moment" in pipelines:
        tasks = [(config, i) for i in range(config.n_samples)]
        labels = [f"moment sample={i}" for (_, i) in tasks]
        results = collect(_moment_task, tasks, labels)
        _write_jsonl(out / "moment_samples.jsonl", results)
        summary = []
        indices = (
            config.moment_scale_indices
            if config.moment_scale_indices is not None
            else tuple(range(config.k_max + 1))
        )
        for k in sorted(indices):
            bounds = [
                s["bound"] for res in results for s in res["scales"] if s["k"] == k
            ]
            arr = np.array(bounds) if bounds else np.zeros(0)
            summary.append(
                {
                    "k": k,
                    "L": config.scales()[k],
                    "samples": len(bounds),
                    "mean_bound": float(arr.mean()) if len(arr) else 0.0,
                    "p10": float(np.percentile(arr, 10)) if len(arr) else 0.0,
                    "p90": float(np.percentile(arr, 90)) if len(arr) else 0.0,
                }
            )
        _write_json(
            out / "moment_summary.json",
            {"Q": config.model.q, "eta": config.model.eta, "per_scale": summary},
        )
        digests["moment_samples.jsonl"] = _digest(out / "moment_samples.jsonl")
        digests["moment_summary.json"] = _digest(out / "moment_summary.json")

    frac = len(quarantined) / n_tasks if n_tasks else 0.0
    return finish(3 if frac > 0.10 else 0)


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

_EXPECTED = {
    "validate": ["validation.json"],
    "classify": ["classify_samples.csv", "classify_summary.json"],
    "survey": ["survey_samples.csv", "survey_summary.json"],
    "spectral": ["spectral_pairs.jsonl", "spectral_summary.json"],
    "moment": ["moment_samples.jsonl", "moment_summary.json"],
}


def report(run_dir, out_dir=None) -> list[str]:
    """Post-process a completed run directory into plot-ready tables and a
    text summary; returns the list of files written."""
    run_path = Path(run_dir)
    manifest_path = run_path / "manifest.json"
    if not manifest_path.exists():
        raise ReportError(f"missing artifacts in {run_dir}: ['manifest.json']")
    manifest = json.loads(manifest_path.read_text())
    pipelines = (
        ["validate", "classify", "survey", "spectral", "moment"]
        if manifest["pipeline"] == "full"
        else [manifest["pipeline"]]
    )
    missing = [
        name
        for pipe in pipelines
        for name in _EXPECTED[pipe]
        if not (run_path / name).exists()
    ]
    if missing:
        raise ReportError(f"missing artifacts in {run_dir}: {missing}")

    out = Path(out_dir or run_path)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    lines: list[str] = [
        f"alloylab report for pipeline '{manifest['pipeline']}' "
        f"(config {manifest['config_hash'][:12]}, version {manifest['version']})",
        f"quarantined samples: {len(manifest['quarantined'])}",
        "",
    ]

    if "validate" in pipelines:
        data = json.loads((run_path / "validation.json").read_text())
        lines.append("assumption checks:")
        for c in data["checks"]:
            lines.append(f"  [{'PASS' if c['passed'] else 'FAIL'}] {c['name']}: {c['detail']}")
        lines.append("")

    if "survey" in pipelines:
        data = json.loads((run_path / "survey_summary.json").read_text())
        rows = [
            [s["k"], s["L"], s["rate"], s["wilson_lo"], s["wilson_hi"], s["bound"]]
            for s in data["per_scale"]
        ]
        _write_csv(out / "report_survey.csv", ["k", "L", "rate", "wilson_lo", "wilson_hi", "bound"], rows)
        written.append("report_survey.csv")
        lines.append("pair survey (failure rate vs L^{-2p}):")
        for s in data["per_scale"]:
            lines.append(
                f"  k={s['k']} L={s['L']}: rate {s['rate']:.4f} "
                f"[{s['wilson_lo']:.4f}, {s['wilson_hi']:.4f}] vs bound {s['bound']:.3e}"
            )
        rates = [s["rate"] for s in data["per_scale"]]
        tails = [float(sum(rates[k:])) for k in range(len(rates))]
        lines.append(f"  cumulative tail rates sum_j>=k: {[f'{t:.4f}' for t in tails]}")
        mono = all(tails[i] >= tails[i + 1] for i in range(len(tails) - 1))
        lines.append(f"  tail monotone nonincreasing in k: {mono}")
        # bad-event shape: smallest c with tail_k <= c * L_k^{-(2p - 2Nd*alpha)}
        exponent = data.get("bad_event_exponent")
        if exponent is not None:
            cs = [
                t * (s["L"] ** exponent)
                for t, s in zip(tails, data["per_scale"])
                if t > 0
            ]
            c_fit = max(cs) if cs else 0.0
            lines.append(
                f"  fitted bad-event constant c (max tail_k * L_k^{{{exponent:g}}}): "
                f"{c_fit:.4e}"
            )
        lines.append("")

    if "classify" in pipelines:
        data = json.loads((run_path / "classify_summary.json").read_text())
        lines.append("single-cube singularity rates:")
        for s in data["per_scale"]:
            lines.append(f"  k={s['k']} L={s['L']}: {s['singular']}/{s['samples']} singular")
        lines.append("")

    if "spectral" in pipelines:
        rows = [
            json.loads(line)
            for line in (run_path / "spectral_pairs.jsonl").read_text().splitlines()
        ]
        m_hats = [r["m_hat"] for r in rows if r["m_hat"] is not None]
        edges = np.linspace(min(m_hats), max(m_hats), 21) if m_hats else np.linspace(0, 1, 21)
        counts, edges = np.histogram(m_hats, bins=edges) if m_hats else (np.zeros(20, int), edges)
        _write_csv(
            out / "report_mhat_hist.csv",
            ["bin_lo", "bin_hi", "count"],
            [[edges[i], edges[i + 1], int(counts[i])] for i in range(len(counts))],
        )
        written.append("report_mhat_hist.csv")
        lines.append(
            f"eigenfunction decay: {len(rows)} pairs, {len(m_hats)} fitted, "
            f"median m_hat = {float(np.median(m_hats)) if m_hats else float('nan'):.4f}"
        )
        lines.append("")

    if "moment" in pipelines:
        data = json.loads((run_path / "moment_summary.json").read_text())
        rows = [
            [s["L"], s["mean_bound"], s["p10"], s["p90"]] for s in data["per_scale"]
        ]
        _write_csv(out / "report_moment.csv", ["L", "mean_bound", "p10", "p90"], rows)
        written.append("report_moment.csv")
        lines.append("correlator bound vs box radius:")
        for s in data["per_scale"]:
            lines.append(
                f"  L={s['L']}: mean {s['mean_bound']:.6e} "
                f"(p10 {s['p10']:.3e}, p90 {s['p90']:.3e}) over {s['samples']} samples"
            )
        lines.append("")

    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    written.append("summary.txt")
    return written
