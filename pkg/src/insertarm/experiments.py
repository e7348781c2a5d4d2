"""Benchmark experiments: sine tracking, admittance placement/holding, and
tool insertion across the four tissue stacks, with the metrics gated against
fixed thresholds.

All percentages use documented denominators: tracking error std is relative
to the 0.05 m sine amplitude; insertion error is relative to the commanded
depth. Every reported number is recomputable from the raw run logs the
harness writes next to the report.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .config import packaged_config
from .errors import ConfigurationError
from .simulate import (
    EVENT_PUNCTURE,
    LogRecord,
    Scenario,
    log_columns,
    run,
    scenario_from_dict,
    write_log_csv,
)

# gate thresholds
TRACKING_MEAN_ERR_MAX_M = 1e-3  # mean |error| < 1 mm
TRACKING_STD_FRACTION_MAX = 0.06  # error std < 6% of amplitude
ADMITTANCE_HOLD_DRIFT_MAX_M = 5e-4  # < 0.5 mm drift per hold segment
INSERTION_ERR_PCT_MAX = 2.0  # < 2% of commanded depth
PUNCTURE_DEPTH_TARGET_M = 2e-3
PUNCTURE_DEPTH_TOL_M = 5e-4
FORCE_DROP_THRESHOLD_N = 1.0  # jump size that counts as a discontinuity

EXPERIMENTS = ("tracking", "admittance", "insertion")


@dataclass
class MetricsRow:
    scenario_id: str
    metrics: dict[str, float]
    gates: dict[str, bool]


@dataclass
class MetricsReport:
    experiment: str
    rows: list[MetricsRow]
    passed: bool
    meta: dict = field(default_factory=dict)


def evaluate_gates(report: MetricsReport) -> bool:
    """Recompute the overall verdict from the per-row gates (offline-checkable)."""
    return all(all(row.gates.values()) for row in report.rows)


def records_to_columns(records: list[LogRecord]) -> dict[str, np.ndarray]:
    """Same column arrays read_log_csv would return for these records."""
    dof = records[0].q.shape[0]
    names = log_columns(dof)
    rows = []
    for r in records:
        row = [r.t, *r.q, *r.dq, *r.pose.position, *r.pose.rotvec(),
               *r.x_d.position, *r.x_d.rotvec(), *r.task_err, *r.tau,
               r.depth, r.theta, r.v, r.f_t, r.x_h, r.f_drive, float(r.events)]
        rows.append(row)
    data = np.asarray(rows, dtype=float)
    out = {name: data[:, j] for j, name in enumerate(names)}
    out["event_flags"] = out["event_flags"].astype(int)
    return out


def load_experiment_config(source: str | Path | dict | None = None) -> dict:
    if isinstance(source, dict):
        return source
    path = packaged_config("experiment_defaults") if source is None else Path(source)
    if not path.exists():
        path = packaged_config(str(source))
    with open(path) as fh:
        return yaml.safe_load(fh)


def _shared_scenario_doc(cfg: dict, seed: int | None) -> dict:
    return {
        "chain": cfg.get("chain", "youbot_approx"),
        "q0": cfg["q0"],
        "dt": cfg.get("dt", 1e-3),
        "seed": cfg.get("seed", 0) if seed is None else seed,
        "gains": cfg.get("gains"),
        "impedance": cfg.get("impedance"),
    }


def _maybe_write_log(records, out_dir: Path | None, experiment: str, scenario_id: str):
    if out_dir is None:
        return
    write_log_csv(records, Path(out_dir) / experiment / f"{scenario_id}.csv")


# ---------------------------------------------------------------------------
# tracking
# ---------------------------------------------------------------------------

def tracking_metrics(cols: dict[str, np.ndarray], axis: int, amplitude: float) -> dict[str, float]:
    err = cols[f"err_p{'xyz'[axis]}"]
    return {
        "mean_abs_err_m": float(np.mean(np.abs(err))),
        "err_std_m": float(np.std(err)),
        "err_std_pct_of_amplitude": float(np.std(err) / amplitude * 100.0),
        "err_sem_m": float(np.std(err) / np.sqrt(err.size)),
        "max_abs_err_m": float(np.max(np.abs(err))),
        "max_drive_force_n": float(np.max(np.abs(cols["f_drive"]))),
    }


def experiment_tracking(
    config: str | Path | dict | None = None,
    out_dir: str | Path | None = None,
    seed: int | None = None,
) -> MetricsReport:
    """Three sine scenarios (x, y, z; A = 0.05 m) gated on mean and std error."""
    cfg = load_experiment_config(config)
    tr = cfg.get("tracking", {})
    amplitude = float(tr.get("amplitude", 0.05))
    period = float(tr.get("period", 8.0))
    periods = int(tr.get("periods", 3))
    if periods * period <= 0:
        raise ConfigurationError("tracking experiment needs a positive run length")
    out_dir = Path(out_dir) if out_dir is not None else None

    t0 = time.perf_counter()
    rows = []
    for axis, label in ((0, "sine_x"), (1, "sine_y"), (2, "sine_z")):
        doc = dict(_shared_scenario_doc(cfg, seed))
        doc.update(
            name=label,
            mode="track",
            duration=periods * period,
            trajectory={"kind": "sine", "axis": axis, "amplitude": amplitude, "period": period},
        )
        records = run(scenario_from_dict(doc))
        _maybe_write_log(records, out_dir, "tracking", label)
        metrics = tracking_metrics(records_to_columns(records), axis, amplitude)
        gates = {
            "mean_err_below_1mm": metrics["mean_abs_err_m"] < TRACKING_MEAN_ERR_MAX_M,
            "std_below_6pct_of_amplitude": metrics["err_std_m"] < TRACKING_STD_FRACTION_MAX * amplitude,
        }
        rows.append(MetricsRow(scenario_id=label, metrics=metrics, gates=gates))
    report = MetricsReport(
        experiment="tracking",
        rows=rows,
        passed=False,
        meta={
            "amplitude_m": amplitude,
            "period_s": period,
            "periods": periods,
            "wall_time_s": time.perf_counter() - t0,
        },
    )
    report.passed = evaluate_gates(report)
    if out_dir is not None:
        emit_report(report, out_dir)
    return report


# ---------------------------------------------------------------------------
# admittance
# ---------------------------------------------------------------------------

def _segments(schedule, duration):
    """Push windows and the zero-force hold segments between them."""
    pushes = sorted(schedule, key=lambda w: w["t_start"])
    holds = []
    cursor = 0.0
    for w in pushes:
        if w["t_start"] > cursor:
            holds.append((cursor, w["t_start"]))
        cursor = max(cursor, w["t_end"])
    if cursor < duration:
        holds.append((cursor, duration))
    return pushes, holds


def experiment_admittance(
    config: str | Path | dict | None = None,
    out_dir: str | Path | None = None,
    seed: int | None = None,
) -> MetricsReport:
    """Scripted pushes with interleaved zero-force holds: the pose must move
    with each push, then self-hold with sub-half-millimetre drift."""
    cfg = load_experiment_config(config)
    adm = cfg.get("admittance", {})
    duration = float(adm.get("duration", 12.0))
    settle = float(adm.get("hold_settle", 0.75))
    schedule = adm.get(
        "pushes",
        [
            {"t_start": 1.0, "t_end": 3.0, "wrench": [0.0, 2.5, 0.0, 0.0, 0.0, 0.0]},
            {"t_start": 5.5, "t_end": 7.5, "wrench": [-2.0, 0.0, 0.0, 0.0, 0.0, 0.0]},
        ],
    )
    out_dir = Path(out_dir) if out_dir is not None else None

    t0 = time.perf_counter()
    doc = dict(_shared_scenario_doc(cfg, seed))
    doc.update(
        name="admittance",
        mode="admittance",
        duration=duration,
        external_wrenches=schedule,
    )
    scenario = scenario_from_dict(doc)
    records = run(scenario)
    _maybe_write_log(records, out_dir, "admittance", "admittance")
    cols = records_to_columns(records)
    t = cols["t"]
    pos = np.stack([cols["px"], cols["py"], cols["pz"]], axis=1)

    metrics: dict[str, float] = {}
    gates: dict[str, bool] = {}
    pushes, holds = _segments(schedule, duration)
    for i, w in enumerate(pushes):
        wrench = np.asarray(w["wrench"], dtype=float)
        axis = int(np.argmax(np.abs(wrench[:3])))
        sign = np.sign(wrench[axis])
        i0 = int(np.searchsorted(t, w["t_start"]))
        i1 = int(np.searchsorted(t, w["t_end"]))
        moved = float(sign * (pos[i1, axis] - pos[i0, axis]))
        metrics[f"push{i}_displacement_m"] = moved
        gates[f"push{i}_moves_along_forced_axis"] = moved > 0.0
    for i, (h0, h1) in enumerate(holds):
        if h1 - h0 <= settle:
            continue
        i0 = int(np.searchsorted(t, h0 + settle))
        i1 = int(np.searchsorted(t, h1))
        ref = pos[i0]
        drift = float(np.max(np.linalg.norm(pos[i0:i1] - ref, axis=1))) if i1 > i0 else 0.0
        metrics[f"hold{i}_drift_m"] = drift
        gates[f"hold{i}_drift_below_half_mm"] = drift < ADMITTANCE_HOLD_DRIFT_MAX_M
    # final holding pose retained: end pose still at the last settled hold pose
    last_h0, last_h1 = holds[-1]
    i_ref = int(np.searchsorted(t, last_h0 + settle))
    final_dev = float(np.linalg.norm(pos[-1] - pos[i_ref]))
    metrics["final_pose_deviation_m"] = final_dev
    gates["final_pose_retained"] = final_dev < ADMITTANCE_HOLD_DRIFT_MAX_M
    metrics["max_drive_force_n"] = float(np.max(np.abs(cols["f_drive"])))

    report = MetricsReport(
        experiment="admittance",
        rows=[MetricsRow(scenario_id="admittance", metrics=metrics, gates=gates)],
        passed=False,
        meta={"settle_s": settle, "duration_s": duration, "wall_time_s": time.perf_counter() - t0},
    )
    report.passed = evaluate_gates(report)
    if out_dir is not None:
        emit_report(report, out_dir)
    return report


# ---------------------------------------------------------------------------
# insertion
# ---------------------------------------------------------------------------

def insertion_metrics(cols: dict[str, np.ndarray], commanded_depth: float, n_layers: int) -> dict[str, float]:
    err = np.abs(cols["x_h"] - cols["depth"])
    punct = (cols["event_flags"] & EVENT_PUNCTURE) != 0
    first_puncture_depth = float(cols["depth"][punct][0]) if punct.any() else float("nan")
    f = cols["F_t"]
    jumps = np.abs(np.diff(f))
    big = jumps > FORCE_DROP_THRESHOLD_N
    drops = big & (np.abs(f[1:]) < np.abs(f[:-1]))
    return {
        "max_tracking_err_pct": float(err.max() / commanded_depth * 100.0),
        "max_tracking_err_m": float(err.max()),
        "final_depth_m": float(cols["depth"][-1]),
        "skin_puncture_depth_m": first_puncture_depth,
        "n_puncture_events": float(punct.sum()),
        "n_force_discontinuities": float(big.sum()),
        "n_force_drops": float(drops.sum()),
        "n_layers": float(n_layers),
        "max_drive_force_n": float(np.max(np.abs(cols["f_drive"]))),
        "max_abs_force_n": float(np.max(np.abs(f))),
    }


def experiment_insertion(
    config: str | Path | dict | None = None,
    out_dir: str | Path | None = None,
    seed: int | None = None,
) -> MetricsReport:
    """All four tissue stacks at 1 and 2 mm/s to 10 mm commanded depth."""
    cfg = load_experiment_config(config)
    ins = cfg.get("insertion", {})
    speeds = [float(s) for s in ins.get("speeds", [0.001, 0.002])]
    depth = float(ins.get("depth", 0.010))
    setups = list(ins.get("setups", ["setup1", "setup2", "setup3", "setup4"]))
    tail = float(ins.get("tail_s", 1.0))
    out_dir = Path(out_dir) if out_dir is not None else None

    t0 = time.perf_counter()
    rows = []
    for setup in setups:
        for speed in speeds:
            label = f"{setup}_{speed * 1000:g}mms"
            doc = dict(_shared_scenario_doc(cfg, seed))
            doc.update(
                name=label,
                mode="insert",
                duration=depth / speed + tail,
                tissue=setup,
                tool=ins.get("tool"),
                insertion={"speed": speed, "depth": depth, "pitch": ins.get("pitch")},
            )
            scenario = scenario_from_dict(doc)
            records = run(scenario)
            _maybe_write_log(records, out_dir, "insertion", label)
            metrics = insertion_metrics(records_to_columns(records), depth, len(scenario.tissue.layers))
            force_limit = scenario.tool.max_insertion_force
            gates = {
                "tracking_err_below_2pct": metrics["max_tracking_err_pct"] < INSERTION_ERR_PCT_MAX,
                "skin_puncture_near_2mm": abs(metrics["skin_puncture_depth_m"] - PUNCTURE_DEPTH_TARGET_M)
                <= PUNCTURE_DEPTH_TOL_M,
                "one_discontinuity_per_layer": metrics["n_force_discontinuities"] == metrics["n_layers"]
                and metrics["n_force_drops"] == metrics["n_layers"]
                and metrics["n_puncture_events"] == metrics["n_layers"],
                "drive_force_within_limit": metrics["max_drive_force_n"] <= force_limit,
            }
            rows.append(MetricsRow(scenario_id=label, metrics=metrics, gates=gates))
    report = MetricsReport(
        experiment="insertion",
        rows=rows,
        passed=False,
        meta={
            "commanded_depth_m": depth,
            "speeds_m_per_s": speeds,
            "wall_time_s": time.perf_counter() - t0,
        },
    )
    report.passed = evaluate_gates(report)
    if out_dir is not None:
        emit_report(report, out_dir)
    return report


def run_experiments(
    which: str = "all",
    config: str | Path | dict | None = None,
    out_dir: str | Path | None = None,
    seed: int | None = None,
) -> list[MetricsReport]:
    runners = {
        "tracking": experiment_tracking,
        "admittance": experiment_admittance,
        "insertion": experiment_insertion,
    }
    if which == "all":
        names = list(EXPERIMENTS)
    elif which in runners:
        names = [which]
    else:
        raise ConfigurationError(f"unknown experiment {which!r}; choose from {EXPERIMENTS + ('all',)}")
    return [runners[name](config=config, out_dir=out_dir, seed=seed) for name in names]


# ---------------------------------------------------------------------------
# report serialization
# ---------------------------------------------------------------------------

def emit_report(
    report: MetricsReport,
    out_dir: str | Path,
    formats: tuple[str, ...] = ("json-lines", "csv", "text"),
) -> list[Path]:
    """Write the report deterministically; identical reports give identical bytes."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for fmt in formats:
        if fmt == "json-lines":
            path = out_dir / f"{report.experiment}_report.jsonl"
            lines = [
                json.dumps(
                    {"experiment": report.experiment, "passed": report.passed, "meta": report.meta},
                    sort_keys=True,
                )
            ]
            for row in report.rows:
                lines.append(json.dumps(asdict(row), sort_keys=True))
            path.write_text("\n".join(lines) + "\n")
        elif fmt == "csv":
            path = out_dir / f"{report.experiment}_report.csv"
            metric_keys = sorted({k for row in report.rows for k in row.metrics})
            gate_keys = sorted({k for row in report.rows for k in row.gates})
            header = ["scenario_id"] + [f"metric:{k}" for k in metric_keys] + [f"gate:{k}" for k in gate_keys]
            lines = [",".join(header)]
            for row in report.rows:
                cells = [row.scenario_id]
                cells += [repr(float(row.metrics[k])) if k in row.metrics else "" for k in metric_keys]
                cells += [str(row.gates[k]).lower() if k in row.gates else "" for k in gate_keys]
                lines.append(",".join(cells))
            path.write_text("\n".join(lines) + "\n")
        elif fmt == "text":
            path = out_dir / f"{report.experiment}_report.txt"
            lines = [f"experiment: {report.experiment}", f"passed: {report.passed}"]
            for row in report.rows:
                lines.append(f"[{row.scenario_id}]")
                for k, v in row.metrics.items():
                    lines.append(f"  {k} = {v!r}")
                for k, v in row.gates.items():
                    lines.append(f"  {k}: {'PASS' if v else 'FAIL'}")
            path.write_text("\n".join(lines) + "\n")
        else:
            raise ConfigurationError(f"unknown report format {fmt!r}")
        paths.append(path)
    return paths


def parse_report(path: str | Path) -> MetricsReport:
    """Read back a json-lines report; parse(emit(report)) == report."""
    lines = Path(path).read_text().splitlines()
    head = json.loads(lines[0])
    rows = [MetricsRow(**json.loads(line)) for line in lines[1:]]
    return MetricsReport(
        experiment=head["experiment"], rows=rows, passed=head["passed"], meta=head["meta"]
    )
