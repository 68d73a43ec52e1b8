"""Stable derivation of per-run RNG seeds.

Replicate seeds are derived as the first 8 bytes (little-endian) of
SHA-256 over the pipe-joined decimal rendering of the base seed and the
coordinates, e.g. ``sha256(b"12|30|2|100.0|7")`` for base seed 12, n=30,
r=2, K=100, replicate 7. Floats are canonicalized through ``repr(float(v))``
so K=100 and K=100.0 address the same stream. Adding grid cells therefore
never perturbs the streams of existing cells.
"""

from __future__ import annotations

import hashlib


def _canon(value) -> str:
    if isinstance(value, bool):
        raise TypeError("bool is not a valid seed component")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return value
    raise TypeError(f"unsupported seed component {value!r}")


def derive_seed(base_seed: int, *parts) -> int:
    """Return a 64-bit seed for the stream identified by `parts`."""
    key = "|".join([_canon(int(base_seed))] + [_canon(p) for p in parts])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")
