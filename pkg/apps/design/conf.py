"""
Access to the ``INTERDESIGN`` settings block.

Falls back to the built-in defaults when Django settings are not configured,
so the numerical modules can be imported from plain scripts.
"""
from django.conf import settings

DEFAULTS = {
    "TOL": 1e-6,
    "MAX_ITERS": 200_000,
    "ROOT_EPS": 1e-9,
    "REL_CUTOFF": 1e-10,
    "SINGULAR_CUTOFF": 1e-12,
    "MAX_LEAVES": 10**6,
    "WORKERS": 1,
    "E_SOLVER": "sdp",
    "SCORE_TOL": 1e-6,
    "SCHEMA": 1,
}


def get(name):
    """Return the configured value for ``name``."""
    if name not in DEFAULTS:
        raise KeyError(f"Unknown interdesign setting: {name}")
    if settings.configured:
        return getattr(settings, "INTERDESIGN", {}).get(name, DEFAULTS[name])
    return DEFAULTS[name]
