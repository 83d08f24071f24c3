"""CSV, Markdown and manifest writers for simulation output."""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from datetime import datetime, timezone

from .copulas import CopulaFamily
from .estimators import Method
from .experiment import PRE_NOTE, ExperimentConfig, MetricsRow, PreRow

__all__ = [
    "format_number",
    "rows_to_csv",
    "metrics_markdown",
    "pre_markdown",
    "asymptotic_markdown",
    "build_manifest",
]

_FAMILY_LETTER = {"clayton": "C", "gumbel": "G", "plackett": "P"}
_SHORT = {
    "mpl-canonical": "c",
    "mpl-median": "m",
    "mpl-mode": "M",
    "mpl-midpoint": "*",
    "mm-tau": "tau",
    "mm-rho": "rho",
}


def format_number(value, digits=6) -> str:
    """Six significant digits; integers and strings pass through."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.{digits}g}"
    return str(value)


def rows_to_csv(rows) -> str:
    """Dataclass rows to CSV text with a header taken from the field names."""
    rows = list(rows)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if rows:
        names = [f.name for f in dataclasses.fields(rows[0])]
        writer.writerow(names)
        for row in rows:
            writer.writerow([format_number(getattr(row, name)) for name in names])
    return buffer.getvalue()


def _fixed(value, decimals):
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return "-"
    return f"{value:.{decimals}f}"


def _theta_label(theta):
    return f"{theta:.2f}" if theta < 100 else f"{theta:.0f}"


def _ordered(values, order):
    rank = {v: i for i, v in enumerate(order)}
    return sorted(values, key=lambda v: rank.get(v, len(rank)))


def _table(header, body):
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(row) + " |" for row in body]
    return "\n".join(lines)


def metrics_markdown(rows: list[MetricsRow]) -> str:
    """One block per sample size: PRB, s, mean se and PC for each method."""
    blocks = []
    family_order = [f.value for f in CopulaFamily]
    method_order = [m.value for m in Method]
    for n in sorted({r.n for r in rows}):
        subset = [r for r in rows if r.n == n]
        methods = _ordered({r.method for r in subset}, method_order)
        header = ["tau", "C", "theta"]
        for m in methods:
            header += [f"PRB {_SHORT[m]}", f"s {_SHORT[m]}", f"se {_SHORT[m]}", f"PC {_SHORT[m]}"]
        index = {(r.family, r.tau_level, r.method): r for r in subset}
        body = []
        for tau in sorted({r.tau_level for r in subset}):
            for family in _ordered({r.family for r in subset if r.tau_level == tau}, family_order):
                any_row = next(r for r in subset if r.family == family and r.tau_level == tau)
                line = [f"{tau:g}", _FAMILY_LETTER[family], _theta_label(any_row.theta_true)]
                for m in methods:
                    r = index.get((family, tau, m))
                    if r is None:
                        line += ["-"] * 4
                    else:
                        line += [_fixed(r.prb, 1), _fixed(r.s, 3), _fixed(r.mean_se, 3), _fixed(r.pc, 1)]
                body.append(line)
        blocks.append(f"### n = {n}\n\n" + _table(header, body))
    return "\n\n".join(blocks)


def pre_markdown(metrics: list[MetricsRow], pre: list[PreRow]) -> str:
    """RMSE of canonical MPL and PRE of every other method, one block per n."""
    blocks = []
    family_order = [f.value for f in CopulaFamily]
    method_order = [m.value for m in Method]
    rmse = {(r.family, r.tau_level, r.n): r for r in metrics if r.method == Method.MPL_CANONICAL.value}
    pre_index = {(p.family, p.tau_level, p.n, p.method): p.pre_vs_canonical for p in pre}
    for n in sorted({p.n for p in pre}):
        others = _ordered(
            {p.method for p in pre if p.n == n and p.method != Method.MPL_CANONICAL.value}, method_order
        )
        header = ["tau", "C", "theta", "RMSE c"] + [f"c/{_SHORT[m]}" for m in others]
        body = []
        taus = sorted({p.tau_level for p in pre if p.n == n})
        for tau in taus:
            families = _ordered({p.family for p in pre if p.n == n and p.tau_level == tau}, family_order)
            for family in families:
                ref = rmse[(family, tau, n)]
                line = [f"{tau:g}", _FAMILY_LETTER[family], _theta_label(ref.theta_true), _fixed(ref.rmse, 2)]
                line += [_fixed(pre_index.get((family, tau, n, m)), 1) for m in others]
                body.append(line)
        blocks.append(f"### PRE, n = {n}\n\n" + _table(header, body))
    return "\n\n".join(blocks)


def asymptotic_markdown(pre: list[PreRow], thetas: dict) -> str:
    family_order = [f.value for f in CopulaFamily]
    method_order = [m.value for m in Method]
    others = _ordered({p.method for p in pre if p.method != Method.MPL_CANONICAL.value}, method_order)
    index = {(p.family, p.tau_level, p.method): p.pre_vs_canonical for p in pre}
    header = ["tau", "C", "theta"] + [f"c/{_SHORT[m]}" for m in others]
    body = []
    for tau in sorted({p.tau_level for p in pre}):
        for family in _ordered({p.family for p in pre if p.tau_level == tau}, family_order):
            line = [f"{tau:g}", _FAMILY_LETTER[family], _theta_label(thetas[(family, tau)])]
            line += [_fixed(index.get((family, tau, m)), 1) for m in others]
            body.append(line)
    n = pre[0].n if pre else 0
    return f"### Asymptotic PRE, one sample of n = {n}\n\n" + _table(header, body)


def build_manifest(config: ExperimentConfig, metrics: list[MetricsRow], version: str,
                   files: dict, asymptotic: bool) -> dict:
    """Run record: config echo and hash, version, time, per-cell counts, file digests."""
    cells = [
        {
            "family": r.family,
            "tau_level": r.tau_level,
            "n": r.n,
            "method": r.method,
            "replications": r.replications,
            "usable": r.usable,
            "n_clamped": r.n_clamped,
            "n_boundary": r.n_boundary,
            "n_diverged": r.n_diverged,
            "n_no_se": r.n_no_se,
        }
        for r in metrics
    ]
    return {
        "config": config.to_dict(),
        "config_sha256": config.fingerprint(),
        "asymptotic": bool(asymptotic),
        "software": {"name": "mplcop", "version": version},
        "base_seed": int(config.base_seed),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "pre_convention": PRE_NOTE,
        "cells": cells,
        "files": files,
    }
