"""Streaming monitor: feed post-period estimates one line at a time.

The monitor keeps a :class:`~avrank.sequential.SequentialRankTest` alive across
invocations through a checkpoint file. A checkpoint is a binary record

    b"AVRKCKPT" | version (uint16) | payload length (uint64) | pickle payload

next to a JSON sidecar (``<checkpoint>.json``) holding the format version, a
hash of the monitoring setup (pre-period values, statistic spec, alpha, seed)
and the step count. Resuming with a different setup is a hard error.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import pickle
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, TextIO

from .._errors import CheckpointError, ConfigurationError, DataError
from ..alternatives import (
    DEFAULT_MULTIPLIERS,
    GaussianGenericStatistic,
    GaussianReducedStatistic,
    MixtureStatistic,
    PluginGenericStatistic,
    PluginReducedStatistic,
    UniformStatistic,
)
from ..alternatives.gaussian import first_step_rank_probs
from ..rng import stream
from ..sequential import SequentialRankTest, StepReport

log = logging.getLogger(__name__)

MAGIC = b"AVRKCKPT"
VERSION = 1
_HEADER = struct.Struct("<8sHQ")
OUTPUT_COLUMNS = ("t", "R", "R_red", "e", "W", "p", "rejected")

_KINDS = ("gaussian", "gaussian-generic", "plugin", "plugin-generic", "mixture", "mixture-average", "uniform")


@dataclass(frozen=True)
class StatisticSpec:
    """Parsed form of ``kind[:key=value,...]``, e.g. ``gaussian:effect=1.5,draws=20000``."""

    kind: str
    effect: float = 1.0
    draws: int = 10_000
    seed: int = 0
    init: bool = False

    @classmethod
    def parse(cls, text: str) -> "StatisticSpec":
        kind, _, rest = text.strip().partition(":")
        kind = kind.strip().lower()
        if kind not in _KINDS:
            raise ConfigurationError(f"unknown statistic {kind!r}; choose from {', '.join(_KINDS)}")
        opts = {}
        for item in filter(None, (s.strip() for s in rest.split(","))):
            key, eq, value = item.partition("=")
            if not eq:
                raise ConfigurationError(f"statistic option {item!r} is not key=value")
            key = key.strip()
            try:
                if key == "effect":
                    opts[key] = float(value)
                elif key in ("draws", "seed"):
                    opts[key] = int(value)
                elif key == "init":
                    opts[key] = value.strip().lower() in ("1", "true", "yes", "gaussian")
                else:
                    raise ConfigurationError(f"unknown statistic option {key!r}")
            except ValueError as exc:
                raise ConfigurationError(f"cannot parse statistic option {item!r}") from exc
        spec = cls(kind, **opts)
        if spec.draws < 1:
            raise ConfigurationError("draws must be positive")
        return spec

    def canonical(self) -> str:
        return f"{self.kind}:effect={self.effect!r},draws={self.draws},seed={self.seed},init={int(self.init)}"

    def build(self, t0: int):
        """Instantiate the statistic producer for a pre period of length ``t0``."""
        seed = lambda *keys: stream(self.seed, *keys)  # noqa: E731
        if self.kind == "gaussian":
            return GaussianReducedStatistic(self.effect, self.draws, seed=seed("gaussian"))
        if self.kind == "gaussian-generic":
            return GaussianGenericStatistic(self.effect, self.draws, seed=seed("gaussian"))
        if self.kind in ("plugin", "plugin-generic"):
            init = first_step_rank_probs(t0, self.effect) if self.init else None
            cls = PluginReducedStatistic if self.kind == "plugin" else PluginGenericStatistic
            return cls(seed=seed("plugin"), init_statistic=init)
        if self.kind in ("mixture", "mixture-average"):
            mode = "adaptive" if self.kind == "mixture" else "average"
            cands = [GaussianReducedStatistic(c * self.effect, self.draws, seed=seed("gaussian", i))
                     for i, c in enumerate(DEFAULT_MULTIPLIERS)]
            return MixtureStatistic(cands, mode)
        return UniformStatistic()


# ---------------------------------------------------------------------------
# inputs

def _parse_float(text: str) -> float | None:
    try:
        return float(text)
    except ValueError:
        return None


def read_pre(path) -> list[float]:
    """Blank-period estimates from a ``t,tau_hat,phase`` file or a one-column file.

    In the three-column format only rows with ``phase == blank`` are used. A
    non-numeric first line of a one-column file is treated as a header.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read pre-period file {path}: {exc}") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: no pre-period values")
    head = [c.strip().lower() for c in rows[0]]
    values = []
    if "tau_hat" in head and "phase" in head:
        col, phase = head.index("tau_hat"), head.index("phase")
        for lineno, r in enumerate(rows[1:], start=2):
            if len(r) <= max(col, phase):
                raise DataError(f"{path}:{lineno}: missing columns")
            if r[phase].strip().lower() != "blank":
                continue
            v = _parse_float(r[col])
            if v is None:
                raise DataError(f"{path}:{lineno}: {r[col]!r} is not a number")
            values.append(v)
    else:
        body = rows[1:] if _parse_float(rows[0][0]) is None else rows
        for lineno, r in enumerate(body, start=len(rows) - len(body) + 1):
            v = _parse_float(r[0])
            if v is None:
                raise DataError(f"{path}:{lineno}: {r[0]!r} is not a number")
            values.append(v)
    if not values:
        raise DataError(f"{path}: no blank-period values")
    bad = [v for v in values if v != v or v in (float("inf"), float("-inf"))]
    if bad:
        raise DataError(f"{path}: pre-period values must be finite")
    return values


def parse_stream(lines: Iterable[str]) -> Iterable[float]:
    """Yield finite numbers from ``lines``; skip blank lines, warn on anything else."""
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        v = _parse_float(text.split(",")[-1])
        if v is None or v != v or v in (float("inf"), float("-inf")):
            log.warning("stream line %d: %r is not a finite number, skipped", lineno, text)
            continue
        yield v


# ---------------------------------------------------------------------------
# checkpoints

def setup_hash(pre: list[float], spec: StatisticSpec, alpha: float, seed: int) -> str:
    blob = json.dumps({"pre": [repr(float(v)) for v in pre], "statistic": spec.canonical(),
                       "alpha": repr(float(alpha)), "seed": int(seed)}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def save_checkpoint(path, test: SequentialRankTest, config_hash: str) -> None:
    path = Path(path)
    payload = pickle.dumps(test, protocol=pickle.HIGHEST_PROTOCOL)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(_HEADER.pack(MAGIC, VERSION, len(payload)) + payload)
    os.replace(tmp, path)
    meta = {"version": VERSION, "config_hash": config_hash, "steps": test.history.n_post}
    tmp = _sidecar(path).with_name(_sidecar(path).name + ".tmp")
    tmp.write_text(json.dumps(meta, sort_keys=True) + "\n")
    os.replace(tmp, _sidecar(path))


def load_checkpoint(path, config_hash: str) -> SequentialRankTest:
    path = Path(path)
    try:
        meta = json.loads(_sidecar(path).read_text())
        raw = path.read_bytes()
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise CheckpointError(f"{path}: truncated checkpoint")
    magic, version, length = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a monitor checkpoint")
    if version != VERSION or meta.get("version") != VERSION:
        raise CheckpointError(f"{path}: checkpoint version {version}, expected {VERSION}")
    if meta.get("config_hash") != config_hash:
        raise CheckpointError(f"{path}: checkpoint was written for a different pre file, statistic, alpha or seed")
    body = raw[_HEADER.size:]
    if len(body) != length:
        raise CheckpointError(f"{path}: payload length {len(body)}, header says {length}")
    try:
        test = pickle.loads(body)
    except Exception as exc:  # any unpickling failure means a corrupt file
        raise CheckpointError(f"{path}: corrupt payload") from exc
    if not isinstance(test, SequentialRankTest) or test.history.n_post != meta.get("steps"):
        raise CheckpointError(f"{path}: payload does not match its sidecar")
    return test


# ---------------------------------------------------------------------------
# driver

def format_report(r: StepReport) -> list[str]:
    g = lambda x: format(float(x), ".17g")  # noqa: E731
    wealth = math.exp(r.log_wealth) if r.log_wealth < 709.0 else math.inf
    return [str(r.t), str(r.seq_rank), str(r.red_rank), g(r.e_value), g(wealth), g(r.p_value),
            str(int(r.rejected))]


def monitor(pre: list[float], values: Iterable[float], spec: StatisticSpec, alpha: float = 0.05,
            seed: int = 0, checkpoint=None, out: TextIO | None = None) -> SequentialRankTest:
    """Run the test over ``values``, writing one CSV row per step to ``out``.

    ``W`` is the running wealth and ``p`` the anytime-valid p-value. With a checkpoint path the state is
    resumed from it when it exists and written back after every step. The
    header is written only when the run starts from scratch.
    """
    config_hash = setup_hash(pre, spec, alpha, seed)
    ckpt = Path(checkpoint) if checkpoint is not None else None
    if ckpt is not None and ckpt.exists():
        test = load_checkpoint(ckpt, config_hash)
        fresh = False
    else:
        test = SequentialRankTest(pre, spec.build(len(pre)), alpha=alpha, seed=stream(seed, "ties"))
        fresh = True
    writer = csv.writer(out, lineterminator="\n") if out is not None else None
    if writer is not None and fresh:
        writer.writerow(OUTPUT_COLUMNS)
    for y in values:
        report = test.step(y)
        if writer is not None:
            writer.writerow(format_report(report))
        if ckpt is not None:
            save_checkpoint(ckpt, test, config_hash)
    if ckpt is not None and fresh and not ckpt.exists():
        save_checkpoint(ckpt, test, config_hash)
    return test


__all__ = ["StatisticSpec", "read_pre", "parse_stream", "setup_hash", "save_checkpoint", "load_checkpoint",
           "monitor", "OUTPUT_COLUMNS", "MAGIC", "VERSION"]
