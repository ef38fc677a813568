"""Shared helpers: unit conversions, stopping rules, seed derivation."""

import hashlib

import numpy as np


def db_to_linear(x_db):
    return 10.0 ** (x_db / 10.0)


def dbm_to_watt(x_dbm):
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def fractional_increase(old, new):
    """Relative objective increase used by all stopping rules.

    A nonpositive base value cannot support a meaningful ratio, and a
    loop sitting at the clamp has not converged, so any step from a
    nonpositive base counts as above every finite tolerance; the
    iteration caps bound the work instead.
    """
    if old > 0.0:
        return (new - old) / old
    return float("inf")


def derive_seed(base_seed, *parts):
    """Stable 63-bit seed from a base seed and string/int labels.

    Uses SHA-256 of a canonical text key so the mapping is identical
    across runs, processes and platforms.
    """
    key = ":".join([str(int(base_seed))] + [str(p) for p in parts])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & (2**63 - 1)


def is_finite_array(a):
    return bool(np.all(np.isfinite(np.asarray(a))))
