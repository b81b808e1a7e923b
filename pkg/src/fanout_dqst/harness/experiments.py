"""Seeded end-to-end pipelines.

Every stochastic step draws from a stream keyed by the root seed plus a fixed
tuple naming the task, never by worker identity, so results are identical for
any thread count.  Stream keys in use:

====================  =====================================
``(seed, 0, i)``      counts for DQST setting ``i``
``(seed, 1)``         readout calibration
``(seed, 1, n)``      readout calibration for GHZ size ``n``
``(seed, 2, r)``      Monte-Carlo resample ``r``
``(seed, 3)``         standard-QST counts
``(seed, 4, n)``      GHZ sweep at size ``n``
``(seed, 5)``         full-register calibration (QREM check)
``(seed, 6)``         per-qubit calibration (QREM check)
``(seed, 7, r)``      recalibration ``r`` for the QREM-check band
====================  =====================================
"""

from __future__ import annotations

import csv
import hashlib
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .. import kernels
from ..dqst import (
    enumerate_settings,
    estimate_from_frequencies,
    ghz_fidelity_estimate,
    ghz_fidelity_from_frequencies,
    reconstruct_from_frequencies,
    reconstruct_raw,
)
from ..formats import (
    dumps_confusion,
    dumps_counts,
    dumps_estimates,
    dumps_matrix,
    dumps_zne,
    fmt_float,
)
from ..mitigation import (
    ConfusionMatrix,
    calibrate_confusion,
    calibrate_confusion_full,
    exact_ghz_fold_values,
    ghz_experiment,
    intercept_stderr,
    mitigate_distribution,
    mitigated_at,
    run_zne,
    tensor_confusion,
)
from ..qcore import BitVector, DensityMatrix, fidelity, pure_fidelity, trace_distance
from ..reconstruct import compare_states, project_physical, shot_matched, simulate_qst, standard_qst
from ..rng import child_seed, make_rng
from ..simkernel import (
    CountTable,
    NoiseModel,
    Setting,
    TargetKind,
    TargetSpec,
    exact_distribution,
    prepare_target,
    sample_shots,
    trajectory_counts,
)
from ..twirl import cz_twirl_sets
from .config import ExperimentConfig

DENSE_SWEEP_MAX = 6
RUN_INFO = "run_info.txt"
MANIFEST = "manifest.txt"


@dataclass
class ResultBundle:
    """All outputs of one run as ``relative path -> text``, plus metric rows.

    ``run_info`` (wall clock, kernel backend, thread count) is the only part
    that may differ between identical runs; it is written to its own file and
    kept out of the manifest.
    """

    config: ExperimentConfig
    files: dict = field(default_factory=dict)
    metrics: list = field(default_factory=list)
    run_info: dict = field(default_factory=dict)

    def add(self, name: str, text: str):
        if name in self.files:
            raise ValueError(f"duplicate output {name}")
        self.files[name] = text

    def manifest(self) -> str:
        lines = [f"{hashlib.sha256(self.files[k].encode()).hexdigest()}  {k}" for k in sorted(self.files)]
        return "\n".join(lines) + "\n"

    def write(self, out_dir=None) -> Path:
        out = Path(out_dir if out_dir is not None else self.config.output_path)
        for name, text in self.files.items():
            p = out / name
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(text, encoding="utf-8", newline="\n")
        (out / MANIFEST).write_text(self.manifest(), encoding="utf-8", newline="\n")
        info = "".join(f"{k}: {v}\n" for k, v in self.run_info.items())
        (out / RUN_INFO).write_text(info, encoding="utf-8", newline="\n")
        return out


def _map(fn: Callable, items: Sequence, threads: int) -> list:
    """Ordered map over a bounded thread pool."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def csv_text(columns: Sequence[str], rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


def grid_csv(mat: np.ndarray) -> str:
    """Flattened re/im table of a matrix, one row per entry (bar-chart input)."""
    n = mat.shape[0].bit_length() - 1
    rows = [
        {"row": format(i, f"0{n}b"), "col": format(j, f"0{n}b"), "re": mat[i, j].real, "im": mat[i, j].imag}
        for i in range(mat.shape[0])
        for j in range(mat.shape[1])
    ]
    return csv_text(["row", "col", "re", "im"], rows)


def _start(cfg: ExperimentConfig, threads: int) -> tuple[ResultBundle, float]:
    bundle = ResultBundle(cfg)
    bundle.add("config.yaml", cfg.dumps())
    bundle.run_info.update(backend=kernels.BACKEND, threads=threads)
    return bundle, time.perf_counter()


def _finish(bundle: ResultBundle, t0: float) -> ResultBundle:
    bundle.run_info["wall_clock_s"] = f"{time.perf_counter() - t0:.3f}"
    return bundle


def _calibration(cfg: ExperimentConfig, num_qubits: int, *key: int) -> ConfusionMatrix:
    cm = calibrate_confusion(cfg.noise, num_qubits, cfg.calibration_shots, child_seed(cfg.seed, 1, *key))
    cm.check_invertible()
    return cm


def _ideal_score(cfg: ExperimentConfig) -> Callable[[DensityMatrix], float]:
    spec = cfg.target
    if spec.kind is TargetKind.EXPLICIT:
        ref = DensityMatrix(spec.matrix)
        return lambda rho: fidelity(ref, rho)
    ket = spec.ket()
    return lambda rho: pure_fidelity(ket, rho)


def _ideal_matrix(cfg: ExperimentConfig) -> np.ndarray:
    return prepare_target(cfg.target).mat


# ------------------------------------------------------------- DQST pipeline


@dataclass
class DqstRun:
    settings: list
    tables: list
    confusion: Optional[ConfusionMatrix]


def simulate_dqst(cfg: ExperimentConfig, threads: int = 1) -> DqstRun:
    n = cfg.target.n
    rho = prepare_target(cfg.target, cfg.noise)
    settings = enumerate_settings(n)

    def one(i):
        s = settings[i]
        return sample_shots(exact_distribution(rho, s, cfg.noise), cfg.shots_per_circuit, child_seed(cfg.seed, 0, i))

    tables = _map(one, list(range(len(settings))), threads)
    confusion = _calibration(cfg, n + 1) if cfg.qrem else None
    return DqstRun(settings, tables, confusion)


def _freqs(table: CountTable, confusion: Optional[ConfusionMatrix]) -> np.ndarray:
    f = table.frequencies()
    return f if confusion is None else mitigate_distribution(f, confusion)


def _variants(run: DqstRun) -> list[tuple[str, Optional[ConfusionMatrix]]]:
    out = [("none", None)]
    if run.confusion is not None:
        out.append(("qrem", run.confusion))
    return out


def _mc_errors(run: DqstRun, score, resamples: int, seed: int, threads: int) -> dict[str, float]:
    """Spread of the projected-state score over parametric redraws of every count table."""
    if resamples < 2:
        return {name: float("nan") for name, _ in _variants(run)}
    base = [t.frequencies().ravel() for t in run.tables]
    variants = _variants(run)

    def one(r):
        rng = make_rng(seed, 2, r)
        draws = [rng.multinomial(t.shots, p / p.sum()) / t.shots for t, p in zip(run.tables, base)]
        vals = []
        for _, cm in variants:
            fq = draws if cm is None else [mitigate_distribution(f, cm) for f in draws]
            raw = reconstruct_from_frequencies(run.settings, fq)
            vals.append(score(project_physical(raw).output))
        return vals

    scores = np.array(_map(one, list(range(resamples)), threads))
    return {name: float(scores[:, j].std(ddof=1)) for j, (name, _) in enumerate(variants)}


def _tomography_outputs(bundle: ResultBundle, cfg: ExperimentConfig, run: DqstRun, threads: int) -> dict:
    score = _ideal_score(cfg)
    ideal = _ideal_matrix(cfg)
    for i, t in enumerate(run.tables):
        bundle.add(f"counts/{i:03d}_{t.setting.label()}.txt", dumps_counts(t))
    if run.confusion is not None:
        bundle.add("confusion.txt", dumps_confusion(run.confusion))
    errs = _mc_errors(run, score, cfg.resamples, cfg.seed, threads)
    projected = {}
    for name, cm in _variants(run):
        ests = {t.setting: estimate_from_frequencies(t.setting, _freqs(t, cm), t.shots) for t in run.tables}
        raw = reconstruct_raw(ests)
        rep = project_physical(raw)
        projected[name] = rep.output
        bundle.add(f"estimates/{name}.txt", dumps_estimates(e for es in ests.values() for e in es))
        bundle.add(f"matrices/raw_{name}.json", dumps_matrix(raw, "raw_matrix"))
        bundle.add(f"matrices/projected_{name}.json", dumps_matrix(rep.output))
        bundle.add(f"grids/projected_{name}.csv", grid_csv(rep.output.mat))
        out = rep.output.mat
        bundle.metrics.append(
            {
                "target": cfg.target.kind.value,
                "n": cfg.target.n,
                "mitigation": name,
                "fidelity": score(rep.output),
                "fidelity_mc_err": errs[name],
                "purity": float(np.real(np.trace(out @ out))),
                "trace_distance_ideal": trace_distance(ideal, out),
                "frobenius_shift": rep.frobenius_shift,
                "negative_mass_removed": rep.negative_mass_removed,
                "settings": len(run.settings),
                "shots_per_circuit": cfg.shots_per_circuit,
            }
        )
    return projected


TOMOGRAPHY_COLUMNS = [
    "target", "n", "mitigation", "fidelity", "fidelity_mc_err", "purity", "trace_distance_ideal",
    "frobenius_shift", "negative_mass_removed", "settings", "shots_per_circuit",
]


def run_full_tomography(cfg: ExperimentConfig, threads: int = 1) -> ResultBundle:
    bundle, t0 = _start(cfg, threads)
    run = simulate_dqst(cfg, threads)
    _tomography_outputs(bundle, cfg, run, threads)
    bundle.add("metrics.csv", csv_text(TOMOGRAPHY_COLUMNS, bundle.metrics))
    return _finish(bundle, t0)


def run_qst_compare(cfg: ExperimentConfig, threads: int = 1) -> ResultBundle:
    """DQST and standard Pauli QST on the same simulated state, compared pairwise."""
    bundle, t0 = _start(cfg, threads)
    n = cfg.target.n
    run = simulate_dqst(cfg, threads)
    projected = _tomography_outputs(bundle, cfg, run, threads)
    dqst_state = projected["qrem" if cfg.qrem else "none"]

    qst_settings = 3**n
    dqst_total = cfg.shots_per_circuit * len(run.settings)
    qst_shots = shot_matched(dqst_total, qst_settings) if cfg.shot_matched else cfg.shots_per_circuit
    rho = prepare_target(cfg.target, cfg.noise)
    qcounts = simulate_qst(rho, cfg.noise, qst_shots, child_seed(cfg.seed, 3))
    qst_cm = run.confusion.restrict(range(n)) if run.confusion is not None else None
    qraw = standard_qst(qcounts, qst_cm)
    qrep = project_physical(qraw)
    rows = []
    for s in sorted(qcounts.counts):
        for b, c in enumerate(qcounts.counts[s]):
            if c:
                rows.append({"setting": s, "outcome_bits": format(b, f"0{n}b"), "count": int(c)})
    bundle.add("qst_counts.csv", csv_text(["setting", "outcome_bits", "count"], rows))
    bundle.add("matrices/raw_qst.json", dumps_matrix(qraw, "raw_matrix"))
    bundle.add("matrices/projected_qst.json", dumps_matrix(qrep.output))
    bundle.add("grids/projected_qst.csv", grid_csv(qrep.output.mat))

    ideal_ket = cfg.target.ket() if cfg.target.kind is not TargetKind.EXPLICIT else None
    cmp = compare_states(dqst_state, qrep.output, ideal_ket)
    score = _ideal_score(cfg)
    row = {
        "method_a": "dqst",
        "method_b": "standard_qst",
        "mitigation": "qrem" if cfg.qrem else "none",
        "settings_a": len(run.settings),
        "settings_b": qst_settings,
        "shots_per_circuit_a": cfg.shots_per_circuit,
        "shots_per_circuit_b": qst_shots,
        "fidelity_a": score(dqst_state),
        "fidelity_b": score(qrep.output),
        "cross_fidelity": cmp.cross_fidelity,
        "cross_overlap": cmp.cross_overlap,
        "trace_distance": cmp.trace_distance,
    }
    bundle.add("metrics.csv", csv_text(TOMOGRAPHY_COLUMNS, bundle.metrics))
    bundle.add("comparison.csv", csv_text(list(row), [row]))
    bundle.metrics.append(row)
    return _finish(bundle, t0)


# ---------------------------------------------------------------- GHZ sweeps


def _sweep_mode(cfg: ExperimentConfig, n: int) -> str:
    if cfg.sim_mode != "auto":
        return cfg.sim_mode
    return "dense" if n <= DENSE_SWEEP_MAX else "trajectory"


def _zne_rows(n: int, label: str, series) -> tuple[list, list]:
    folds = series.folds
    errs = [p[2] for p in series.points]
    extrap_err = intercept_stderr(folds, errs, series.weighted)
    zne_label = "zne" if label == "none" else f"{label}+zne"
    rows = [
        {"n": n, "method": label, "fidelity": series.points[0][1], "stderr": series.points[0][2]},
        {"n": n, "method": zne_label, "fidelity": series.extrapolated, "stderr": extrap_err},
    ]
    fold_rows = [{"n": n, "method": label, "fold": f, "mean": m, "stderr": s} for f, m, s in series.points]
    return rows, fold_rows


def _ghz_point(cfg: ExperimentConfig, n: int) -> dict:
    mode = _sweep_mode(cfg, n)
    confusion = _calibration(cfg, n + 1, n) if cfg.qrem else None
    out = {"n": n, "mode": mode, "confusion": confusion, "rows": [], "fold_rows": [], "files": {}}
    seed = child_seed(cfg.seed, 4, n)
    dense_ok = n <= DENSE_SWEEP_MAX
    oracle_none = exact_ghz_fold_values(n, cfg.noise, [1])[0] if dense_ok else None
    oracle_qrem = exact_ghz_fold_values(n, cfg.noise, [1], readout=False)[0] if dense_ok else None
    if cfg.zne is not None:
        z = cfg.zne
        variants = [("none", None)] + ([("qrem", confusion)] if confusion is not None else [])
        for label, cm in variants:
            exp = ghz_experiment(n, cfg.noise, cm, mode, z.twirl)
            series = run_zne(exp, z.folds, z.twirl_instances, z.shots_per_instance, seed, z.resamples, z.weighted)
            rows, fold_rows = _zne_rows(n, label, series)
            rows[0]["dense_oracle"] = oracle_none if cm is None else oracle_qrem
            out["rows"] += rows
            out["fold_rows"] += fold_rows
            out["files"][f"zne/n{n:02d}_{label}.json"] = dumps_zne(series)
    else:
        setting = Setting(BitVector.ones(n), "X", 1)
        if mode == "dense":
            rho = prepare_target(TargetSpec(TargetKind.GHZ, n), cfg.noise)
            table = sample_shots(exact_distribution(rho, setting, cfg.noise), cfg.shots_per_circuit, seed)
        else:
            table = trajectory_counts(TargetSpec(TargetKind.GHZ, n).ket(), setting, cfg.noise,
                                      cfg.shots_per_circuit, seed)
        out["files"][f"counts/ghz_n{n:02d}.txt"] = dumps_counts(table)
        f, e = ghz_fidelity_estimate(table)
        out["rows"].append({"n": n, "method": "none", "fidelity": f, "stderr": e, "dense_oracle": oracle_none})
        if confusion is not None:
            ones = (1 << n) - 1
            q = mitigated_at(table, confusion, (0, 1, 2 * ones, 2 * ones + 1))
            f, e = ghz_fidelity_from_frequencies(setting, q, table.shots)
            out["rows"].append({"n": n, "method": "qrem", "fidelity": f, "stderr": e, "dense_oracle": oracle_qrem})
    for r in out["rows"]:
        r["mode"] = mode
    return out


GHZ_COLUMNS = ["n", "method", "fidelity", "stderr", "dense_oracle", "mode"]
FOLD_COLUMNS = ["n", "method", "fold", "mean", "stderr"]


def run_ghz_fidelity_sweep(cfg: ExperimentConfig, threads: int = 1) -> ResultBundle:
    bundle, t0 = _start(cfg, threads)
    points = _map(lambda n: _ghz_point(cfg, n), cfg.sweep_sizes(), threads)
    fold_rows = []
    for p in points:
        if p["confusion"] is not None:
            bundle.add(f"confusion/n{p['n']:02d}.txt", dumps_confusion(p["confusion"]))
        for name, text in p["files"].items():
            bundle.add(name, text)
        bundle.metrics += p["rows"]
        fold_rows += p["fold_rows"]
    bundle.add("ghz_fidelity.csv", csv_text(GHZ_COLUMNS, bundle.metrics))
    if fold_rows:
        bundle.add("zne_folds.csv", csv_text(FOLD_COLUMNS, fold_rows))
    return _finish(bundle, t0)


def run_zne_demo(cfg: ExperimentConfig, threads: int = 1) -> ResultBundle:
    """Single-size fold series with the dense per-fold oracle alongside."""
    bundle, t0 = _start(cfg, threads)
    n = cfg.target.n
    p = _ghz_point(cfg, n)
    for name, text in p["files"].items():
        bundle.add(name, text)
    if p["confusion"] is not None:
        bundle.add("confusion.txt", dumps_confusion(p["confusion"]))
    fold_rows = p["fold_rows"]
    if n <= DENSE_SWEEP_MAX:
        folds = list(cfg.zne.folds)
        exact = {
            "none": exact_ghz_fold_values(n, cfg.noise, folds),
            "qrem": exact_ghz_fold_values(n, cfg.noise, folds, readout=False),
        }
        for r in fold_rows:
            r["dense_oracle"] = exact[r["method"]][folds.index(r["fold"])]
        ro = cfg.noise.readout_flip
        ref = NoiseModel(0.0, ro, cfg.noise.state_prep_depol)
        zero = {
            "none": exact_ghz_fold_values(n, ref, [1])[0],
            "qrem": exact_ghz_fold_values(n, ref, [1], readout=False)[0],
        }
        for r in p["rows"]:
            r["zero_noise_reference"] = zero["qrem" if r["method"].startswith("qrem") else "none"]
    bundle.metrics += p["rows"]
    bundle.add("zne_folds.csv", csv_text(FOLD_COLUMNS + ["dense_oracle"], fold_rows))
    bundle.add("metrics.csv", csv_text(GHZ_COLUMNS + ["zero_noise_reference"], bundle.metrics))
    return _finish(bundle, t0)


# ------------------------------------------------------------------- QREM


def qrem_deviation(noise: NoiseModel, n: int, shots: Optional[int], seed: int) -> tuple[np.ndarray, ConfusionMatrix, ConfusionMatrix]:
    """``C_raw^-1 C_tensor - I`` from a full-register and a per-qubit calibration."""
    c_raw = calibrate_confusion_full(noise, n, shots, child_seed(seed, 5))
    c_pq = calibrate_confusion(noise, n, shots, child_seed(seed, 6))
    c_raw.check_invertible()
    c_t = tensor_confusion(c_pq)
    dev = np.linalg.solve(c_raw.full, c_t.full) - np.eye(1 << n)
    return dev, c_raw, c_pq


def run_qrem_check(cfg: ExperimentConfig, threads: int = 1) -> ResultBundle:
    bundle, t0 = _start(cfg, threads)
    n = cfg.target.n
    dev, c_raw, c_pq = qrem_deviation(cfg.noise, n, cfg.calibration_shots, cfg.seed)
    bundle.add("confusion_raw.txt", dumps_confusion(c_raw))
    bundle.add("confusion_per_qubit.txt", dumps_confusion(c_pq))
    sigma = np.zeros_like(dev)
    band = 0.0
    if cfg.calibration_shots is not None and cfg.resamples >= 2:
        draws = np.array(_map(
            lambda r: qrem_deviation(cfg.noise, n, cfg.calibration_shots, child_seed(cfg.seed, 7, r))[0],
            list(range(cfg.resamples)),
            threads,
        ))
        sigma = np.std(draws, axis=0, ddof=1)
        max_stats = np.abs(draws).reshape(len(draws), -1).max(axis=1)
        band = float(max_stats.mean() + 3 * max_stats.std(ddof=1))
    d = 1 << n
    rows = [
        {"row": format(i, f"0{n}b"), "col": format(j, f"0{n}b"), "deviation": dev[i, j], "sigma": sigma[i, j]}
        for i in range(d)
        for j in range(d)
    ]
    bundle.add("deviation_grid.csv", csv_text(["row", "col", "deviation", "sigma"], rows))
    pos = sigma > 0
    beyond = float(np.mean(np.abs(dev[pos]) > 3 * sigma[pos])) if pos.any() else 0.0
    metric = {
        "n": n,
        "calibration_shots": "exact" if cfg.calibration_shots is None else cfg.calibration_shots,
        "max_abs_deviation": float(np.max(np.abs(dev))),
        "max_sigma": float(sigma.max()),
        "fraction_beyond_3sigma": beyond,
        "max_deviation_band_3sigma": band,
        "within_band": bool(np.max(np.abs(dev)) <= band + 1e-12),
    }
    bundle.metrics.append(metric)
    bundle.add("metrics.csv", csv_text(list(metric), [metric]))
    return _finish(bundle, t0)


# ---------------------------------------------------------------- twirl table


def twirl_table_csv() -> str:
    rows = [dict(zip(("p1", "p2", "p3", "p4"), tw.as_tuple()), identity_holds=tw.satisfies_identity())
            for tw in cz_twirl_sets()]
    return csv_text(["p1", "p2", "p3", "p4", "identity_holds"], rows)


RUNNERS = {
    "full_tomography": run_full_tomography,
    "ghz_fidelity": run_ghz_fidelity_sweep,
    "qst_compare": run_qst_compare,
    "qrem_check": run_qrem_check,
    "zne_demo": run_zne_demo,
}


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ResultBundle:
    cfg.validate()
    return RUNNERS[cfg.experiment](cfg, threads)
