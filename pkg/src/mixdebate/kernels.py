"""Kernel dispatch: the compiled extension when importable, else pure Python.

Set ``MIXDEBATE_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels as python_impl

compiled_impl = None
if not os.environ.get("MIXDEBATE_PURE_PYTHON"):
    try:
        from . import _kernels as compiled_impl  # type: ignore[no-redef]
    except ImportError:  # extension not built
        compiled_impl = None

impl = compiled_impl if compiled_impl is not None else python_impl
BACKEND = "compiled" if compiled_impl is not None else "python"

trigram_bucket = impl.trigram_bucket
trigram_counts = impl.trigram_counts
trigram_count_matrix = impl.trigram_count_matrix
count_cosine = impl.count_cosine
top_k = impl.top_k
