"""Run configuration files and result serialization.

Configs are JSON. Every key is optional; missing hyperparameters take the
gridworld defaults, or the AM defaults when ``"env": "am"``. Unknown keys are
rejected so that typos fail loudly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, fields
from pathlib import Path
from typing import Any, Union

import numpy as np

from cgl.bench import BenchResult, ExperimentConfig, aggregate
from cgl.core import Hyperparams

SUMMARY_COLUMNS = ("method", "case", "size", "mean_total", "sd_total")
EPISODE_COLUMNS = ("method", "case", "size_or_geometry", "replication", "episode", "actions")
FORMATS = ("csv", "json")

_TUPLE_FIELDS = ("methods", "sizes", "cases", "experiments", "am_episodes")


class ConfigError(ValueError):
    pass


def default_config(env: str = "grid") -> ExperimentConfig:
    hp = Hyperparams.am_process() if env == "am" else Hyperparams.gridworld()
    return ExperimentConfig(env=env, hp=hp)


def config_to_dict(cfg: ExperimentConfig) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        out[f.name] = asdict(v) if f.name == "hp" else v
    out["hyperparams"] = out.pop("hp")
    out["hyperparams"]["betas"] = list(out["hyperparams"]["betas"])
    for k in _TUPLE_FIELDS:
        out[k] = list(out[k])
    return out


def dump_config(cfg: ExperimentConfig) -> str:
    """Canonical JSON text; ``parse_config(dump_config(c)) == c``."""
    return json.dumps(config_to_dict(cfg), indent=2) + "\n"


def config_from_dict(data: dict[str, Any]) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    top = {f.name for f in fields(ExperimentConfig)} - {"hp"} | {"hyperparams"}
    unknown = sorted(set(data) - top)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    hp_data = data.get("hyperparams", {})
    if not isinstance(hp_data, dict):
        raise ConfigError("'hyperparams' must be an object")
    hp_keys = {f.name for f in fields(Hyperparams)}
    unknown = sorted(set(hp_data) - hp_keys)
    if unknown:
        raise ConfigError(f"unknown hyperparams keys: {', '.join(unknown)}")
    env = data.get("env", "grid")
    try:
        base = Hyperparams.am_process() if env == "am" else Hyperparams.gridworld()
        hp = Hyperparams(**{**asdict(base), **hp_data})
        kwargs = {k: v for k, v in data.items() if k != "hyperparams"}
        for k in _TUPLE_FIELDS:
            if k in kwargs:
                kwargs[k] = tuple(kwargs[k])
        return ExperimentConfig(hp=hp, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def parse_config(text: str) -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return config_from_dict(data)


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _num(x: float) -> str:
    return f"{x:.17g}"


def summary_records(result: BenchResult) -> list[dict[str, Any]]:
    return [
        {"method": r.method, "case": r.case, "size": r.where, "mean_total": r.mean_total, "sd_total": r.sd_total}
        for r in aggregate(result)
    ]


def episode_records(result: BenchResult) -> list[dict[str, Any]]:
    return [dict(zip(EPISODE_COLUMNS, row)) for row in result.rows()]


def _write_csv(path: Path, columns, records) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for rec in records:
            writer.writerow([_num(rec[c]) if isinstance(rec[c], float) else rec[c] for c in columns])


def emit_results(result: BenchResult, fmt: str, destination: Union[str, Path], svg: bool = True) -> list[Path]:
    """Write summary and per-episode tables (and curves.svg) under ``destination``."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    dest = Path(destination)
    written = []
    try:
        dest.mkdir(parents=True, exist_ok=True)
        summary, episodes = summary_records(result), episode_records(result)
        if fmt == "csv":
            for name, cols, recs in (("summary.csv", SUMMARY_COLUMNS, summary),
                                     ("episodes.csv", EPISODE_COLUMNS, episodes)):
                _write_csv(dest / name, cols, recs)
                written.append(dest / name)
        else:
            for name, recs in (("summary.json", summary), ("episodes.json", episodes)):
                # repr of a float round-trips exactly, like the 17-digit CSV
                (dest / name).write_text(json.dumps(recs, indent=1) + "\n")
                written.append(dest / name)
        if svg and result.cells:
            (dest / "curves.svg").write_text(curves_svg(result))
            written.append(dest / "curves.svg")
    except OSError as exc:
        raise OSError(f"writing results to {dest}: {exc}") from exc
    return written


def summary_csv_text(result: BenchResult) -> str:
    lines = [",".join(SUMMARY_COLUMNS)]
    for rec in summary_records(result):
        lines.append(",".join(_num(rec[c]) if isinstance(rec[c], float) else str(rec[c]) for c in SUMMARY_COLUMNS))
    return "\n".join(lines) + "\n"


def _from_records(records) -> BenchResult:
    cells: dict[tuple[str, str, str], dict[tuple[int, int], int]] = {}
    for rec in records:
        key = (str(rec["method"]), str(rec["case"]), str(rec["size_or_geometry"]))
        cells.setdefault(key, {})[(int(rec["replication"]), int(rec["episode"]))] = int(rec["actions"])
    result = BenchResult()
    for key, entries in cells.items():
        reps = 1 + max(r for r, _ in entries)
        eps = 1 + max(e for _, e in entries)
        arr = np.zeros((reps, eps), dtype=np.int64)
        for (r, e), v in entries.items():
            arr[r, e] = v
        result.add(*key, arr)
    return result


def load_episodes(path: Union[str, Path]) -> BenchResult:
    """Rebuild a BenchResult from ``episodes.csv`` or ``episodes.json``."""
    path = Path(path)
    with path.open(newline="") as fh:
        if path.suffix == ".json":
            return _from_records(json.load(fh))
        return _from_records(csv.DictReader(fh))


def curves_svg(result: BenchResult, width: int = 640, height: int = 400) -> str:
    """Mean actions per episode, one labeled polyline per series, linear axes."""
    rows = aggregate(result)
    left, right, top, bottom = 60, 150, 20, 40
    pw, ph = width - left - right, height - top - bottom
    n_ep = max(len(r.curve) for r in rows)
    y_max = max(max(r.curve) for r in rows) or 1.0
    palette = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")

    def px(e):
        return left + (pw * e / (n_ep - 1) if n_ep > 1 else pw / 2)

    def py(v):
        return top + ph - ph * v / y_max

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
        f'<text x="{left + pw / 2}" y="{height - 8}" text-anchor="middle">episode</text>',
        f'<text x="14" y="{top + ph / 2}" text-anchor="middle" transform="rotate(-90 14 {top + ph / 2})">mean actions</text>',
        f'<text x="{left - 4}" y="{top + 4}" text-anchor="end">{y_max:.4g}</text>',
        f'<text x="{left - 4}" y="{top + ph}" text-anchor="end">0</text>',
        f'<text x="{left}" y="{top + ph + 14}" text-anchor="middle">1</text>',
        f'<text x="{left + pw}" y="{top + ph + 14}" text-anchor="middle">{n_ep}</text>',
    ]
    for k, r in enumerate(rows):
        color = palette[k % len(palette)]
        pts = " ".join(f"{px(e):.2f},{py(v):.2f}" for e, v in enumerate(r.curve))
        label = f"{r.method} {r.case} {r.where}"
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"><title>{label}</title></polyline>')
        ly = top + 12 + 14 * k
        parts.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 28}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw + 32}" y="{ly}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
