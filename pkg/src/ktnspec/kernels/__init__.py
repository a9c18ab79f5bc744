"""Hot kernels, dispatched on ``KTNSPEC_BACKEND`` (``numba`` or ``numpy``)."""
from .._backend import BACKEND
from . import loops

kruskal = loops.kruskal
root_tree = loops.root_tree
forest_update = loops.forest_update
ic0 = loops.ic0
ic0_solve = loops.ic0_solve

if BACKEND == "numba":
    gth_ldl_dense = loops.gth_ldl_dense_loop
    shifted_ldl = loops.shifted_ldl_loop
    ldl_solve = loops.ldl_solve_loop
else:
    from . import vectorized

    gth_ldl_dense = vectorized.gth_ldl_dense
    shifted_ldl = vectorized.shifted_ldl
    ldl_solve = vectorized.ldl_solve

__all__ = ["BACKEND", "kruskal", "root_tree", "forest_update", "ic0", "ic0_solve",
           "gth_ldl_dense", "shifted_ldl", "ldl_solve"]
