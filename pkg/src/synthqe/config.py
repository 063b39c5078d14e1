"""Pipeline configuration and the flat ``key = value`` config file format."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from .annotate import DEFAULT_GRID_STEP, Thresholds
from .core import InvalidInput


@dataclass
class PipelineConfig:
    parallel: Optional[str] = None
    trees: Optional[str] = None
    generator_ids: list[str] = field(default_factory=list)  # generator model files
    annotator_id: Optional[str] = None  # annotator model file
    thresholds: Optional[str] = None
    t_critical: Optional[float] = None
    t_major: Optional[float] = None
    t_minor: Optional[float] = None
    output: Optional[str] = None
    cbs_tau: float = 0.3
    beam_size: int = 4
    # hypotheses may hold up to max_len_factor * |ref| + 2 tokens
    max_len_factor: float = 2.0
    grid_step: float = DEFAULT_GRID_STEP
    seed: int = 0
    amateur: bool = False
    allow_self_annotation: bool = False
    workers: int = 1
    ter_trace: Optional[str] = None
    spce_trace: Optional[str] = None

    def max_len(self, ref_len: int) -> int:
        return max(1, int(self.max_len_factor * ref_len) + 2)

    def resolve_thresholds(self) -> Thresholds:
        flags = (self.t_critical, self.t_major, self.t_minor)
        if all(v is not None for v in flags):
            return Thresholds(*flags)
        if any(v is not None for v in flags):
            raise InvalidInput("give all three of t_critical, t_major, t_minor or none")
        if self.thresholds is None:
            raise InvalidInput("no thresholds: pass a thresholds file or --t-critical/--t-major/--t-minor")
        return Thresholds.load(self.thresholds)

    def validate(self, need_annotator: bool = True) -> None:
        if not self.generator_ids:
            raise InvalidInput("at least one generator is required")
        if need_annotator:
            if self.annotator_id is None:
                raise InvalidInput("annotator_id is required")
            ann = os.path.realpath(self.annotator_id)
            if not self.allow_self_annotation and any(os.path.realpath(g) == ann for g in self.generator_ids):
                raise InvalidInput("annotator must differ from every generator "
                                   "(use --allow-self-annotation to override)")
        if self.beam_size < 1:
            raise InvalidInput("beam_size must be >= 1")
        if self.workers < 1:
            raise InvalidInput("workers must be >= 1")

    def snapshot(self) -> dict:
        """Config as a plain dict without machine-specific paths."""
        d = asdict(self)
        for k in ("parallel", "trees", "thresholds", "output", "annotator_id", "ter_trace", "spce_trace"):
            if d[k] is not None:
                d[k] = os.path.basename(d[k])
        d["generator_ids"] = [os.path.basename(g) for g in d["generator_ids"]]
        return d


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _convert(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    if "list" in kind:
        return [v for v in raw.replace(",", " ").split() if v]
    if "bool" in kind:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise InvalidInput(f"{key}: not a boolean: {raw!r}")
    try:
        if "float" in kind:
            return float(raw)
        if "int" in kind:
            return int(raw)
    except ValueError:
        raise InvalidInput(f"{key}: bad value {raw!r}") from None
    return raw


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment; keys use snake or kebab case."""
    out = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInput(f"{path}:{lineno}: expected key = value")
            key, raw = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _FIELD_TYPES:
                raise InvalidInput(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = _convert(key, raw)
    return out
