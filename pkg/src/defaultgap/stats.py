"""Weighted empirical distributions, histograms and a few goodness-of-fit helpers."""
import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    mass: np.ndarray
    std_err: np.ndarray
    counts: np.ndarray

    def to_csv(self, path):
        write_rows(path, ["bin_left", "bin_right", "mass", "std_err"],
                   zip(self.edges[:-1], self.edges[1:], self.mass, self.std_err))


class EmpiricalDistribution:
    """Samples with nonnegative weights; ``normalized`` means weights sum to 1."""

    def __init__(self, values, weights=None, normalized=False):
        values = np.asarray(values, dtype=float).ravel()
        if weights is None:
            weights = np.ones_like(values)
        weights = np.asarray(weights, dtype=float).ravel()
        if weights.shape != values.shape:
            raise ValueError("values and weights differ in length")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite and nonnegative")
        self.values = values
        self.weights = weights
        self.normalized = False
        if normalized:
            self._normalize_in_place()

    def _normalize_in_place(self):
        tot = self.weights.sum()
        if not tot > 0:
            raise ValueError("cannot normalize zero total weight")
        self.weights = self.weights / tot
        self.normalized = True

    def normalize(self):
        return EmpiricalDistribution(self.values, self.weights, normalized=True)

    def __len__(self):
        return self.values.size

    @property
    def total_weight(self):
        return float(self.weights.sum())

    @property
    def n_eff(self):
        w2 = float(np.sum(self.weights ** 2))
        return self.total_weight ** 2 / w2 if w2 > 0 else 0.0

    def mean(self):
        return float(np.sum(self.values * self.weights) / self.total_weight)

    def std_err_mean(self):
        m = self.mean()
        var = float(np.sum(self.weights * (self.values - m) ** 2) / self.total_weight)
        return math.sqrt(var / self.n_eff) if self.n_eff > 1 else float("nan")

    def quantile(self, q):
        """Smallest value whose weighted CDF reaches ``q``."""
        order = np.argsort(self.values, kind="stable")
        v = self.values[order]
        cw = np.cumsum(self.weights[order]) / self.total_weight
        q = np.asarray(q, dtype=float)
        idx = np.searchsorted(cw, q - 1e-12, side="left")
        out = v[np.minimum(idx, v.size - 1)]
        return out[()] if out.ndim == 0 else out

    def cdf(self, x):
        order = np.argsort(self.values, kind="stable")
        v = self.values[order]
        cw = np.concatenate([[0.0], np.cumsum(self.weights[order])]) / self.total_weight
        return cw[np.searchsorted(v, np.asarray(x, dtype=float), side="right")]

    def histogram(self, edges, denominator=None):
        """Bin masses with binomial standard errors.

        Passing the number of simulated paths as ``denominator`` gives
        unconditional masses when the sample holds only the paths where the
        event happened.
        """
        edges = np.asarray(edges, dtype=float)
        w, _ = np.histogram(self.values, bins=edges, weights=self.weights)
        counts, _ = np.histogram(self.values, bins=edges)
        mass = w / self.total_weight
        n = self.n_eff
        if denominator is not None:
            # equal-weight samples drawn out of ``denominator`` trials
            mass = mass * len(self) / float(denominator)
            n = float(denominator)
        se = np.sqrt(np.clip(mass * (1 - mass), 0, None) / max(n, 1.0))
        return Histogram(edges, mass, se, counts)

    def summary(self, probs=(0.05, 0.25, 0.5, 0.75, 0.95)):
        m = self.mean()
        se = self.std_err_mean()
        return {
            "n": int(len(self)),
            "mean": m,
            "std_err": se,
            "ci95": [m - 1.96 * se, m + 1.96 * se],
            "quantiles": {f"{p:g}": float(self.quantile(p)) for p in probs},
        }


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def chi2_homogeneity(counts_a, counts_b):
    """Chi-square test that two binned samples share one distribution.

    Columns empty in both samples are dropped.  Returns ``(stat, dof, p)``.
    """
    table = np.vstack([np.asarray(counts_a, float), np.asarray(counts_b, float)])
    table = table[:, table.sum(axis=0) > 0]
    res = sps.chi2_contingency(table, correction=False)
    return float(res.statistic), int(res.dof), float(res.pvalue)


def ks_1samp(sample, cdf):
    res = sps.kstest(np.asarray(sample, float), cdf)
    return float(res.statistic), float(res.pvalue)


def ks_2samp(a, b):
    res = sps.ks_2samp(np.asarray(a, float), np.asarray(b, float))
    return float(res.statistic), float(res.pvalue)


def ks_quantile(n, level=0.95):
    """Asymptotic critical KS distance for sample size ``n``."""
    return float(sps.kstwobign.ppf(level) / math.sqrt(n))
