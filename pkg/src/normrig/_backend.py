"""Kernel backend selection.

Imports the compiled extension ``normrig._core`` when it is available and
falls back to the pure-Python twin otherwise.  Set ``NORMRIG_PURE=1`` to
force the fallback (used by the benchmark and the parity tests).
"""

from __future__ import annotations

import os

if os.environ.get("NORMRIG_PURE") == "1":
    from normrig import _pykernel as _impl
else:
    try:
        from normrig import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from normrig import _pykernel as _impl

BACKEND = _impl.BACKEND_NAME

K_P = _impl.K_P
K_ONE = _impl.K_ONE
K_TWO = _impl.K_TWO
K_INF = _impl.K_INF
K_3_2 = _impl.K_3_2
K_THREE = _impl.K_THREE
K_POLY = _impl.K_POLY

S_SEED = _impl.S_SEED
S_SWEEP = _impl.S_SWEEP
S_PLACE = _impl.S_PLACE

pack_norm = _impl.pack_norm
eval1 = _impl.eval1
eval_many = _impl.eval_many
grad1 = _impl.grad1
grad_many = _impl.grad_many
sphere_pt = _impl.sphere_pt
intersect = _impl.intersect
pairs_max_resid = _impl.pairs_max_resid
lm_edges = _impl.lm_edges
pack_plan = _impl.pack_plan
place_range = _impl.place_range
closure_roots = _impl.closure_roots
leaf_stats = _impl.leaf_stats
