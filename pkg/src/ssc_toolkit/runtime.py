"""Process-level knobs shared by the verification loops."""
from __future__ import annotations

import os

THREADS_ENV = "SSC_TOOLKIT_THREADS"


def worker_count(requested: int | None = None) -> int:
    """Effective worker count for a parallelizable loop.

    ``SSC_TOOLKIT_THREADS`` caps everything; with the variable unset the
    cap is 1, so all loops run sequentially unless the caller both asks
    for workers and the environment allows them.
    """
    raw = os.environ.get(THREADS_ENV, "").strip()
    cap = None
    if raw:
        try:
            cap = max(1, int(raw))
        except ValueError:
            cap = None
    if cap is None:
        return max(1, requested) if requested else 1
    return min(max(1, requested), cap) if requested else cap
