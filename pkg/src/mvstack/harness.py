"""Batch experiment driver: the simulation grid and the repeated stratified
10x10-fold real-data protocol, with deterministic seeding and CSV output.

Every task (condition x replication) derives its seed from the master seed
and the task identity, so parallel and serial execution produce identical
records; rows are sorted canonically before writing. Within one task all
meta-learners consume the identical Z matrix (a paired comparison).
Wall-clock runtime is recorded per record and is the only field that varies
between reruns.
"""

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from .dataset import standardize_features, make_folds
from .errors import ConfigError, SchemaMismatch
from .meta import META_KINDS, fit_meta
from .metrics import SelectionMatrix, accuracy, auc, h_measure, \
    nogueira_stability, selection_rates
from .numerics import RngStream, derive_seed
from .simulation import SimulationConfig, generate_replication
from .stacking import StackedClassifier, fit_base_and_z, predict

RESULT_COLUMNS = ["mode", "condition_id", "V", "m_v", "n", "rho_w", "rho_b",
                  "replication", "meta_learner", "metric", "value",
                  "n_selected", "seed", "runtime_s", "error"]


@dataclass
class ExperimentConfig:
    mode: str = "simulation"
    V: list = field(default_factory=lambda: [30])
    m_v: list = field(default_factory=lambda: [25])
    n: list = field(default_factory=lambda: [200])
    correlations: list = field(default_factory=lambda: [(0.5, 0.0)])
    n_test: int = 1000
    replications: int = 20
    meta_learners: list = field(default_factory=lambda: list(META_KINDS))
    n_signal_full: int = 5
    n_signal_half: int = 5
    base_weight: float = 0.04
    weight_scale: object = "auto"  # "auto": sqrt(10) when V >= 300, else 1
    stability_q: int = 10
    pfer_max: float = 1.5
    stability_B: int = 50
    K: int = 10
    base_tune_once: bool = False
    repetitions: int = 10   # realdata mode: outer repeats of K-fold CV
    seed: int = 2024
    workers: int = 1

    def __post_init__(self):
        if self.mode not in ("simulation", "realdata"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        self.correlations = [tuple(c) for c in self.correlations]
        for rho_w, rho_b in self.correlations:
            if not 0 <= rho_b <= rho_w < 1:
                raise ConfigError(f"invalid correlation pair ({rho_w}, {rho_b})")
        unknown = [k for k in self.meta_learners if k not in META_KINDS]
        if unknown:
            raise ConfigError(f"unknown meta-learners: {unknown}")

    def scale_for(self, V):
        if self.weight_scale == "auto":
            return math.sqrt(10.0) if V >= 300 else 1.0
        return float(self.weight_scale)


def desk_preset():
    """Reduced grid sized for a desk run: one condition, 20 replications.

    View size is a tenth of the smallest full-scale setting, so the signal
    weights carry the matching sqrt(10) compensation; base penalties are
    tuned once on the full training data when building Z.
    """
    return ExperimentConfig(V=[30], m_v=[25], n=[200],
                            correlations=[(0.5, 0.0)], replications=20,
                            weight_scale=math.sqrt(10.0), base_tune_once=True)


def load_config(path):
    """Read an ExperimentConfig from a flat JSON or TOML file; unknown keys
    are rejected."""
    with open(path, "rb") as fh:
        text = fh.read()
    if str(path).endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        raw = tomllib.loads(text.decode("utf-8"))
    else:
        raw = json.loads(text.decode("utf-8"))
    if not isinstance(raw, dict):
        raise ConfigError("config must be a table of key/value pairs")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    return ExperimentConfig(**raw)


def condition_grid(cfg):
    """Cartesian product of the condition lists, in deterministic order."""
    out = []
    for V in cfg.V:
        for m_v in cfg.m_v:
            for n in cfg.n:
                for rho_w, rho_b in cfg.correlations:
                    cid = f"V{V}_m{m_v}_n{n}_rw{rho_w}_rb{rho_b}"
                    out.append({"condition_id": cid, "V": V, "m_v": m_v, "n": n,
                                "rho_w": rho_w, "rho_b": rho_b})
    return out


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def _record(**kw):
    row = {c: "" for c in RESULT_COLUMNS}
    for k, v in kw.items():
        row[k] = _fmt(v)
    return row


def _meta_kwargs(cfg):
    return dict(stability_q=cfg.stability_q, stability_pfer_max=cfg.pfer_max,
                stability_B=cfg.stability_B)


def _sim_task(args):
    """One (condition, replication): one shared Z, then every meta-learner."""
    cfg, cond, rep = args
    seed = derive_seed(cfg.seed, cond["condition_id"], rep)
    rng = RngStream(seed)
    records = []
    common = dict(mode="simulation", condition_id=cond["condition_id"],
                  V=cond["V"], m_v=cond["m_v"], n=cond["n"],
                  rho_w=cond["rho_w"], rho_b=cond["rho_b"],
                  replication=rep, seed=seed)
    try:
        sim = SimulationConfig(V=cond["V"], m_v=cond["m_v"], n_train=cond["n"],
                               n_test=cfg.n_test, rho_w=cond["rho_w"],
                               rho_b=cond["rho_b"],
                               n_signal_full=cfg.n_signal_full,
                               n_signal_half=cfg.n_signal_half,
                               base_weight=cfg.base_weight,
                               weight_scale=cfg.scale_for(cond["V"]),
                               seed=seed)
        train, test, truth = generate_replication(sim, rng.substream("data"))
        base_models, _, cvpred = fit_base_and_z(
            train, K=cfg.K, rng=rng.substream("stack"),
            base_tune_once=cfg.base_tune_once)
    except Exception as exc:
        for kind in cfg.meta_learners:
            records.append(_record(**common, meta_learner=kind,
                                   error=f"{type(exc).__name__}: {exc}"))
        return records

    truth_set = set(truth.signal_views.tolist())
    for kind in cfg.meta_learners:
        t0 = time.perf_counter()
        try:
            meta = fit_meta(kind, cvpred.Z, train.outcome,
                            rng.substream(f"meta:{kind}"),
                            view_names=train.view_names, **_meta_kwargs(cfg))
            clf = StackedClassifier(base_models=base_models, meta=meta,
                                    view_names=train.view_names,
                                    view_sizes=train.view_sizes)
            acc = accuracy(test.outcome, predict(clf, test))
            rates = selection_rates(set(meta.selected.tolist()), truth_set,
                                    cond["V"])
        except Exception as exc:
            records.append(_record(**common, meta_learner=kind,
                                   runtime_s=time.perf_counter() - t0,
                                   error=f"{type(exc).__name__}: {exc}"))
            continue
        dt = time.perf_counter() - t0
        for metric, value in (("accuracy", acc), ("tpr", rates.tpr),
                              ("fpr", rates.fpr), ("fdr", rates.fdr)):
            records.append(_record(**common, meta_learner=kind, metric=metric,
                                   value=value, n_selected=meta.n_selected,
                                   runtime_s=dt))
    return records


def _sort_key(row):
    rep = row["replication"]
    return (row["mode"], row["condition_id"],
            int(rep) if rep not in ("",) else -10 ** 9,
            row["meta_learner"], row["metric"])


def _write_records(records, out_path, cfg, scheduled):
    records = sorted(records, key=_sort_key)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        w.writeheader()
        w.writerows(records)
    meta = {"package_version": __version__,
            "config": {k: list(v) if isinstance(v, tuple) else v
                       for k, v in asdict(cfg).items()},
            "scheduled_tasks": scheduled,
            "records": len(records)}
    with open(str(out_path) + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=list)
    return records


def _run_tasks(task_fn, tasks, workers):
    if workers <= 1:
        return [task_fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task_fn, tasks))


def run_simulation_grid(cfg, out_path):
    """Run every (condition, replication), all meta-learners on a shared Z.

    Per-task failures become error records; the run continues. Returns the
    sorted record rows that were written.
    """
    if cfg.mode != "simulation":
        raise ConfigError("config mode must be 'simulation'")
    conditions = condition_grid(cfg)
    tasks = [(cfg, cond, rep) for cond in conditions
             for rep in range(cfg.replications)]
    chunks = _run_tasks(_sim_task, tasks, cfg.workers)
    records = [row for chunk in chunks for row in chunk]
    scheduled = len(tasks) * len(cfg.meta_learners)
    return _write_records(records, out_path, cfg, scheduled)


def _realdata_task(args):
    """One (repetition, outer fold): standardize on the training part, fit
    every meta-learner on a shared Z, predict the held-out part."""
    cfg, d, rep, k, fold_assignment = args
    rng = RngStream(derive_seed(cfg.seed, "realdata", rep))
    tr = np.flatnonzero(fold_assignment != k)
    te = np.flatnonzero(fold_assignment == k)
    out = {"rep": rep, "fold": k, "test_idx": te, "kinds": {}, "errors": {}}
    try:
        train_std, means, sds = standardize_features(d.subset(tr))
        base_models, _, cvpred = fit_base_and_z(
            train_std, K=cfg.K, rng=rng.substream(f"fold:{k}/stack"),
            base_tune_once=cfg.base_tune_once)
    except Exception as exc:
        for kind in cfg.meta_learners:
            out["errors"][kind] = f"{type(exc).__name__}: {exc}"
        return out
    test = d.subset(te)
    for kind in cfg.meta_learners:
        t0 = time.perf_counter()
        try:
            meta = fit_meta(kind, cvpred.Z, train_std.outcome,
                            rng.substream(f"fold:{k}/meta:{kind}"),
                            view_names=d.view_names, **_meta_kwargs(cfg))
            clf = StackedClassifier(base_models=base_models, meta=meta,
                                    view_names=d.view_names,
                                    view_sizes=d.view_sizes,
                                    preprocessing={"means": means, "sds": sds})
            p_hat = predict(clf, test)
        except Exception as exc:
            out["errors"][kind] = f"{type(exc).__name__}: {exc}"
            continue
        out["kinds"][kind] = {"p_hat": p_hat,
                              "selected": meta.selected.tolist(),
                              "runtime": time.perf_counter() - t0}
    return out


def run_repeated_cv(d, cfg, out_path):
    """Repeated stratified K-fold evaluation of every meta-learner.

    Held-out accuracy/AUC/H are pooled within each repetition; the selected
    sets of all repetitions x folds feed one stability statistic per
    meta-learner, recorded with replication -1. Per-fit selected-view counts
    are recorded with replication = repetition * K + fold index.
    """
    if cfg.mode != "realdata":
        raise ConfigError("config mode must be 'realdata'")
    folds_by_rep = {}
    for rep in range(cfg.repetitions):
        rng = RngStream(derive_seed(cfg.seed, "realdata", rep))
        folds_by_rep[rep] = make_folds(d.n, cfg.K, rng.substream("folds"),
                                       stratify_labels=d.outcome).assignment
    tasks = [(cfg, d, rep, k, folds_by_rep[rep])
             for rep in range(cfg.repetitions) for k in range(1, cfg.K + 1)]
    results = _run_tasks(_realdata_task, tasks, cfg.workers)

    common = dict(mode="realdata", condition_id="realdata", V=d.n_views,
                  n=d.n, seed=cfg.seed)
    records = []
    sel_rows = {kind: [] for kind in cfg.meta_learners}
    pooled = {kind: {rep: {"y": [], "p": [], "runtime": 0.0, "ok": True}
                     for rep in range(cfg.repetitions)}
              for kind in cfg.meta_learners}
    for res in results:
        rep, k = res["rep"], res["fold"]
        for kind, msg in res["errors"].items():
            pooled[kind][rep]["ok"] = False
            records.append(_record(**common, replication=rep, meta_learner=kind,
                                   error=msg))
        for kind, r in res["kinds"].items():
            agg = pooled[kind][rep]
            agg["y"].append(d.outcome[res["test_idx"]])
            agg["p"].append(r["p_hat"])
            agg["runtime"] += r["runtime"]
            indicator = np.zeros(d.n_views, dtype=bool)
            indicator[r["selected"]] = True
            sel_rows[kind].append(indicator)
            records.append(_record(**common, replication=rep * cfg.K + (k - 1),
                                   meta_learner=kind, metric="n_selected",
                                   value=len(r["selected"]),
                                   n_selected=len(r["selected"]),
                                   runtime_s=r["runtime"]))

    for kind in cfg.meta_learners:
        for rep in range(cfg.repetitions):
            agg = pooled[kind][rep]
            if not agg["ok"] or not agg["y"]:
                continue
            y = np.concatenate(agg["y"])
            p = np.concatenate(agg["p"])
            for metric, value in (("accuracy", accuracy(y, p)),
                                  ("auc", auc(y, p)),
                                  ("h_measure", h_measure(y, p))):
                records.append(_record(**common, replication=rep,
                                       meta_learner=kind, metric=metric,
                                       value=value,
                                       runtime_s=agg["runtime"]))
        if len(sel_rows[kind]) >= 2:
            try:
                phi = nogueira_stability(SelectionMatrix(np.array(sel_rows[kind])))
            except Exception as exc:
                records.append(_record(**common, replication=-1,
                                       meta_learner=kind,
                                       metric="selection_stability",
                                       error=f"{type(exc).__name__}: {exc}"))
            else:
                records.append(_record(**common, replication=-1,
                                       meta_learner=kind,
                                       metric="selection_stability", value=phi))
    scheduled = cfg.repetitions * cfg.K * len(cfg.meta_learners)
    return _write_records(records, out_path, cfg, scheduled)


def summarize(in_path, out_path):
    """Grouped mean/sd/count table of a result file, in long CSV form.

    Error rows and undefined (NaN) values are excluded from the averages;
    groups of one report sd 0 and are identifiable by their count.
    """
    with open(in_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RESULT_COLUMNS:
            raise SchemaMismatch(
                f"expected columns {RESULT_COLUMNS}, got {reader.fieldnames}")
        rows = list(reader)

    keys = ["mode", "condition_id", "V", "m_v", "n", "rho_w", "rho_b",
            "meta_learner", "metric"]
    groups = {}
    for row in rows:
        if row["error"]:
            continue
        try:
            value = float(row["value"])
        except ValueError:
            continue
        if math.isnan(value):
            continue
        groups.setdefault(tuple(row[k] for k in keys), []).append(value)

    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(keys + ["mean", "sd", "count"])
        for key in sorted(groups):
            vals = np.asarray(groups[key])
            sd = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
            w.writerow(list(key) + [repr(float(vals.mean())), repr(sd),
                                    vals.size])
    return out_path
