"""Tunable constants shared by the recovery schemes.

Defaults were fixed by the sweep in scripts/calibrate.py; every value can be
overridden from a key=value config file (see load_constants).
"""
from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class Constants:
    # Signal-to-noise threshold at which single-spike identification is
    # reliable; used by benchmarks to place spikes and by callers as the
    # documented heaviness requirement.
    heavy_c: float = 600.0
    # Multiplier on the bucket count 4*B^2/delta of each shrink step.
    shrink_scale: float = 4.0
    # Subsampling keeps each coordinate with probability 1/(4*sample_c^2*k).
    sample_c: float = 0.354
    # Multiplier on the number of parallel subsampled recoveries per level.
    partial_m_scale: float = 1.0
    # CountSketch geometry: width = ceil(cs_width_scale*k/eps),
    # depth = ceil(cs_depth_scale*ln(domain/delta)).
    cs_width_scale: float = 2.0
    cs_depth_scale: float = 7.5
    # Reduced dimension for the two-round scheme:
    # next power of two >= (reduction_dim_scale*k/eps)^4.
    reduction_dim_scale: float = 1.0
    # Hash independence for the dimensionality reduction:
    # t = ceil(reduction_degree_scale*log2(N)).
    reduction_degree_scale: float = 2.0
    # Width of the per-bucket identification sketch in round two.
    bucket_width: int = 6
    # Independence degree of the uniform scalings in the duplicate finder.
    uniform_degree: int = 4
    # Duplicate finder: partition into 4m parts, m = ceil(log2(1/dup_eps)).
    dup_eps: float = 1.0 / 64.0
    # Base repetition count, multiplied by ceil(log2(1/delta)).
    dup_reps: int = 3
    # Pass budget slope: passes <= pass_scale*log2(log2(n)) + 2.
    pass_scale: float = 1.0

    def replace(self, **kwargs) -> "Constants":
        return dataclasses.replace(self, **kwargs)


DEFAULTS = Constants()

# Short names accepted in config files alongside the field names.
_ALIASES = {
    "C": "heavy_c",
    "C_prime": "shrink_scale",
    "Cprime": "shrink_scale",
    "C_samp": "sample_c",
    "c_m": "partial_m_scale",
    "c_w": "cs_width_scale",
    "c_d": "cs_depth_scale",
    "c_N": "reduction_dim_scale",
    "t_uniform": "uniform_degree",
    "t_reduction": "reduction_degree_scale",
    "w2": "bucket_width",
    "C_dup": "dup_reps",
    "c_p": "pass_scale",
}

_INT_FIELDS = {"bucket_width", "uniform_degree", "dup_reps"}


def load_constants(path: str | Path, base: Constants = DEFAULTS) -> Constants:
    """Parse a key=value config file into a Constants instance.

    Blank lines and lines starting with '#' are ignored.  Unknown keys raise
    ValueError so typos do not silently fall back to defaults.
    """
    overrides = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        field = _ALIASES.get(key, key)
        if field not in {f.name for f in dataclasses.fields(Constants)}:
            raise ValueError(f"{path}:{lineno}: unknown constant {key!r}")
        overrides[field] = int(value) if field in _INT_FIELDS else float(value)
    return base.replace(**overrides)


def split_seed(seed: int, *tags) -> int:
    """Derive a child seed deterministically from a root seed and tags."""
    digest = hashlib.blake2b(
        repr((int(seed),) + tags).encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")
