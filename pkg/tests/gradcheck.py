"""Shared helper: compare analytic gradients against finite differences."""

import numpy as np

REL_TOL = 1e-4
GRAD_FLOOR = 1e-6


def flatten_grads(grads) -> np.ndarray:
    out = []
    for entry in grads:
        if entry is None:
            continue
        dw, db = entry
        out.append(dw.ravel())
        out.append(db.ravel())
    return np.concatenate(out)


def assert_grads_close(analytic, fd, rel_tol: float = REL_TOL,
                       floor: float = GRAD_FLOOR) -> float:
    """Check elementwise relative error on entries where |fd grad| > floor.

    Returns the worst relative error seen, for reporting.
    """
    a = flatten_grads(analytic)
    f = flatten_grads(fd)
    assert a.shape == f.shape
    mask = np.abs(f) > floor
    assert mask.any(), "finite-difference gradient is entirely below the floor"
    rel = np.abs(a[mask] - f[mask]) / np.maximum(np.abs(f[mask]), np.abs(a[mask]))
    worst = float(rel.max())
    assert worst < rel_tol, f"worst relative gradient error {worst:.3e} >= {rel_tol}"
    return worst
