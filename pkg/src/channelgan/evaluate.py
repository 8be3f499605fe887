"""Density estimation and divergence metrics for model-vs-truth comparison.

Histograms are the density estimator throughout: 1-D for the scalar
channels, 2-D for the I/Q ones. Jensen-Shannon divergence is the headline
match metric (bounded, symmetric); KL and the 1-D Wasserstein distance are
reported alongside for diagnosis. The marginal density over all
constellation points is the uniform mixture of the per-condition
densities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError

KL_FLOOR = 1e-10


@dataclass
class DensityEstimate:
    """Normalized binned mass with bin-edge metadata.

    mass is 1-D (bins,) or 2-D (bins_x, bins_y); out-of-range samples are
    clipped into the edge bins and counted in clipped_count.
    """

    bin_edges: tuple[np.ndarray, ...]
    mass: np.ndarray
    sample_count: int
    clipped_count: int = 0

    @property
    def dims(self) -> int:
        return len(self.bin_edges)

    def validate(self) -> None:
        total = float(self.mass.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"density mass sums to {total}, not 1")
        if (self.mass < 0).any():
            raise ValueError("density mass has negative entries")
        for edges in self.bin_edges:
            if not (np.diff(edges) > 0).all():
                raise ValueError("bin edges must be strictly increasing")


def _column_samples(samples, want_dims: int | None = None) -> np.ndarray:
    s = np.asarray(samples, dtype=np.float64)
    if s.ndim == 1:
        s = s[:, None]
    if s.ndim != 2 or s.shape[1] not in (1, 2):
        raise ShapeError(f"samples must be (n,), (n,1) or (n,2), got {s.shape}")
    if want_dims is not None and s.shape[1] != want_dims:
        raise ShapeError(f"expected {want_dims}-dim samples, got {s.shape[1]}-dim")
    return s


def _normalize_bounds(bounds, dims: int) -> list[tuple[float, float]]:
    if dims == 1:
        lo, hi = bounds
        out = [(float(lo), float(hi))]
    else:
        out = [(float(lo), float(hi)) for lo, hi in bounds]
        if len(out) != dims:
            raise ConfigError(f"need {dims} bound pairs, got {len(out)}")
    for lo, hi in out:
        if not lo < hi:
            raise ConfigError(f"invalid bounds ({lo}, {hi})")
    return out


def histogram(samples, bins: int, bounds) -> DensityEstimate:
    """Normalized histogram over fixed bounds; 1-D (lo, hi) or 2-D pair of them.

    Samples outside the bounds are clipped into the edge bins and recorded
    in clipped_count rather than dropped, so the mass always sums to one.
    """
    s = _column_samples(samples)
    n = s.shape[0]
    if n == 0:
        raise ValueError("cannot build a histogram from an empty sample set")
    if bins < 1:
        raise ConfigError("bins must be >= 1")
    blist = _normalize_bounds(bounds, s.shape[1])

    clipped = 0
    cols = []
    for j, (lo, hi) in enumerate(blist):
        col = s[:, j]
        clipped += int(((col < lo) | (col > hi)).sum())
        cols.append(np.clip(col, lo, hi))

    if len(blist) == 1:
        counts, edges = np.histogram(cols[0], bins=bins, range=blist[0])
        est = DensityEstimate((edges,), counts / n, n, clipped)
    else:
        counts, ex, ey = np.histogram2d(cols[0], cols[1], bins=bins,
                                        range=blist)
        est = DensityEstimate((ex, ey), counts / n, n, clipped)
    est.validate()
    return est


def _check_same_binning(p: DensityEstimate, q: DensityEstimate) -> None:
    if p.dims != q.dims or p.mass.shape != q.mass.shape:
        raise ConfigError("density estimates have different binning")
    for ep, eq in zip(p.bin_edges, q.bin_edges):
        if not np.array_equal(ep, eq):
            raise ConfigError("density estimates have different bin edges")


def kl_divergence(p: DensityEstimate, q: DensityEstimate) -> float:
    """KL(p || q) in nats; q is floored at 1e-10 and renormalized first."""
    _check_same_binning(p, q)
    pm = p.mass.ravel()
    qm = np.maximum(q.mass.ravel(), KL_FLOOR)
    qm = qm / qm.sum()
    mask = pm > 0
    return float(np.sum(pm[mask] * np.log(pm[mask] / qm[mask])))


def js_divergence(p: DensityEstimate, q: DensityEstimate) -> float:
    """Jensen-Shannon divergence in nats; symmetric, bounded by log 2."""
    _check_same_binning(p, q)
    pm = p.mass.ravel()
    qm = q.mass.ravel()
    m = 0.5 * (pm + qm)
    mask_p = pm > 0
    mask_q = qm > 0
    kl_pm = np.sum(pm[mask_p] * np.log(pm[mask_p] / m[mask_p]))
    kl_qm = np.sum(qm[mask_q] * np.log(qm[mask_q] / m[mask_q]))
    return float(0.5 * kl_pm + 0.5 * kl_qm)


def empty_bin_count(p: DensityEstimate, q: DensityEstimate) -> int:
    """Bins where the reference p has mass but q has none (pre-smoothing)."""
    _check_same_binning(p, q)
    return int(((p.mass > 0) & (q.mass == 0)).sum())


def wasserstein1_1d(samples_a, samples_b) -> float:
    """Empirical 1-D earth-mover distance via sorted samples.

    Equal sizes: mean absolute difference of the sorted arrays. Different
    sizes: both sides are interpolated onto the midpoint quantile grid of
    the larger size first.
    """
    a = np.asarray(samples_a, dtype=np.float64).ravel()
    b = np.asarray(samples_b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("wasserstein1_1d needs non-empty samples")
    if a.size == b.size:
        return float(np.mean(np.abs(np.sort(a) - np.sort(b))))
    m = max(a.size, b.size)
    grid = (np.arange(m) + 0.5) / m
    return float(np.mean(np.abs(np.quantile(a, grid) - np.quantile(b, grid))))


@dataclass
class ConditionalMoments:
    """Per-condition sample moments, one row per distinct x value."""

    conditions: np.ndarray            # (K, dx)
    means: np.ndarray                 # (K, dy)
    covariances: np.ndarray           # (K, dy, dy)
    counts: np.ndarray                # (K,)
    missing: int = 0                  # expected conditions never observed

    def variance(self, k: int) -> np.ndarray:
        return np.diag(self.covariances[k])

    def std(self, k: int) -> np.ndarray:
        return np.sqrt(self.variance(k))


def conditional_moments(batch, expected_conditions=None) -> ConditionalMoments:
    """Group rows by exact x value; per-group mean and covariance.

    With expected_conditions given, conditions present there but absent
    from the batch are counted in .missing (they cannot contribute moments).
    """
    x = np.asarray(batch.x, dtype=np.float64)
    y = np.asarray(batch.y, dtype=np.float64)
    if x.shape[0] == 0:
        raise ValueError("cannot compute moments of an empty batch")
    conditions, inverse = np.unique(x, axis=0, return_inverse=True)
    k = conditions.shape[0]
    dy = y.shape[1]
    means = np.zeros((k, dy))
    covs = np.zeros((k, dy, dy))
    counts = np.zeros(k, dtype=np.int64)
    for i in range(k):
        rows = y[inverse == i]
        counts[i] = rows.shape[0]
        means[i] = rows.mean(axis=0)
        d = rows - means[i]
        covs[i] = d.T @ d / rows.shape[0]
    missing = 0
    if expected_conditions is not None:
        expected = np.asarray(expected_conditions, dtype=np.float64)
        have = {tuple(c) for c in conditions}
        missing = sum(1 for c in expected if tuple(c) not in have)
    return ConditionalMoments(conditions, means, covs, counts, missing)


def marginal_density(per_condition: list[DensityEstimate], weights=None) -> DensityEstimate:
    """Mixture of per-condition densities, uniform weights by default."""
    if not per_condition:
        raise ValueError("marginal_density needs at least one conditional density")
    first = per_condition[0]
    for est in per_condition[1:]:
        _check_same_binning(first, est)
    if weights is None:
        weights = np.full(len(per_condition), 1.0 / len(per_condition))
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (len(per_condition),):
            raise ConfigError("weights must match the number of conditionals")
        weights = weights / weights.sum()
    mass = sum(w * est.mass for w, est in zip(weights, per_condition))
    mass = mass / mass.sum()
    est = DensityEstimate(first.bin_edges,
                          mass,
                          sample_count=int(sum(e.sample_count for e in per_condition)),
                          clipped_count=int(sum(e.clipped_count for e in per_condition)))
    est.validate()
    return est


def _radial_tangential_std(samples: np.ndarray, centroid: np.ndarray):
    """Stds of the deviation from centroid along and across the centroid
    direction from the origin (phase noise spreads clusters across it)."""
    nrm = float(np.linalg.norm(centroid))
    if nrm < 1e-12:
        u = np.array([1.0, 0.0])
    else:
        u = centroid / nrm
    t = np.array([-u[1], u[0]])
    d = samples - centroid
    return float((d @ u).std()), float((d @ t).std())


def _skewness(values: np.ndarray) -> float:
    d = values - values.mean()
    s = d.std()
    if s == 0:
        return 0.0
    return float(np.mean(d ** 3) / s ** 3)


def _moment_entry(samples: np.ndarray) -> dict:
    entry = {
        "mean": [float(v) for v in samples.mean(axis=0)],
        "std": [float(v) for v in samples.std(axis=0)],
    }
    if samples.shape[1] == 1:
        entry["skewness"] = _skewness(samples[:, 0])
    else:
        rad, tan = _radial_tangential_std(samples, samples.mean(axis=0))
        entry["radial_std"] = rad
        entry["tangential_std"] = tan
    return entry


@dataclass
class EvalConfig:
    n_samples: int = 100_000           # total per side, split across conditions
    bins: int = 100
    range_1d: tuple[float, float] = (-6.0, 6.0)
    range_2d: tuple = ((-2.0, 2.0), (-2.0, 2.0))
    seed: int = 0

    def bounds_for(self, dims: int):
        return self.range_1d if dims == 1 else self.range_2d


@dataclass
class EvalReport:
    """compare_model output: JSON-ready summary plus the density tables."""

    summary: dict
    true_densities: dict
    model_densities: dict

    def write_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.summary, f, indent=2)
            f.write("\n")


def compare_model(model, channel, source, config: EvalConfig) -> EvalReport:
    """Draw matched per-condition sample sets from the ground-truth channel
    and from the model, then compare moments and densities.

    Both ``model`` and ``channel`` expose sample(x, rng). Every
    constellation point gets n_samples // M draws from each side; the
    marginal density is the uniform mixture across conditions.
    """
    n_cond = config.n_samples // source.size
    if n_cond < 1:
        raise ConfigError("n_samples must be at least the constellation size")
    ss_true, ss_model = np.random.SeedSequence(config.seed).spawn(2)
    rng_true = np.random.default_rng(ss_true)
    rng_model = np.random.default_rng(ss_model)

    dims = channel.y_dim
    bounds = config.bounds_for(dims)

    conditions = []
    true_densities = {}
    model_densities = {}
    empty_bins = 0
    for k, point in enumerate(source.points):
        x = np.tile(point, (n_cond, 1))
        y_true = channel.sample(x, rng_true)
        y_model = model.sample(x, rng_model)
        p = histogram(y_true, config.bins, bounds)
        q = histogram(y_model, config.bins, bounds)
        true_densities[f"cond_{k}"] = p
        model_densities[f"cond_{k}"] = q
        empty_bins += empty_bin_count(p, q)
        entry = {
            "x": [float(v) for v in point],
            "count": n_cond,
            "true": _moment_entry(y_true),
            "model": _moment_entry(y_model),
            "js": js_divergence(p, q),
            "kl": kl_divergence(p, q),
        }
        entry["w1"] = (wasserstein1_1d(y_true, y_model) if dims == 1 else None)
        conditions.append(entry)

    p_marg = marginal_density([true_densities[f"cond_{k}"] for k in range(source.size)])
    q_marg = marginal_density([model_densities[f"cond_{k}"] for k in range(source.size)])
    true_densities["marginal"] = p_marg
    model_densities["marginal"] = q_marg

    summary = {
        "modulation": source.name,
        "channel": type(channel).__name__,
        "model": type(model).__name__,
        "n_samples": n_cond * source.size,
        "samples_per_condition": n_cond,
        "bins": config.bins,
        "bounds": [list(b) for b in _normalize_bounds(bounds, dims)],
        "conditions": conditions,
        "marginal": {
            "js": js_divergence(p_marg, q_marg),
            "kl": kl_divergence(p_marg, q_marg),
        },
        "model_empty_bins": empty_bins,
        "clipped_true": int(sum(true_densities[f"cond_{k}"].clipped_count
                                for k in range(source.size))),
        "clipped_model": int(sum(model_densities[f"cond_{k}"].clipped_count
                                 for k in range(source.size))),
    }
    return EvalReport(summary, true_densities, model_densities)


def bin_centers(edges: np.ndarray) -> np.ndarray:
    return 0.5 * (edges[:-1] + edges[1:])


def density_to_csv(est: DensityEstimate, path) -> None:
    """1-D: bin_center,mass rows. 2-D: long-format bin_x,bin_y,mass rows."""
    with open(path, "w") as f:
        if est.dims == 1:
            f.write("bin_center,mass\n")
            for c, m in zip(bin_centers(est.bin_edges[0]), est.mass):
                f.write(f"{float(c)!r},{float(m)!r}\n")
        else:
            f.write("bin_x,bin_y,mass\n")
            cx = bin_centers(est.bin_edges[0])
            cy = bin_centers(est.bin_edges[1])
            for i, xc in enumerate(cx):
                for j, yc in enumerate(cy):
                    f.write(f"{float(xc)!r},{float(yc)!r},{float(est.mass[i, j])!r}\n")
