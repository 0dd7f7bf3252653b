"""Independent reference implementations used as test oracles.

Nothing here may call into the package's FFT/conv/metric code paths; these
are deliberately slow, literal computations.
"""

import numpy as np


def naive_dft(x: np.ndarray, axis: int) -> np.ndarray:
    """Direct O(N^2) DFT-matrix multiply along one axis (unnormalized)."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[axis]
    idx = np.arange(n)
    mat = np.exp(-2j * np.pi * np.outer(idx, idx) / n)  # mat[k, n]
    moved = np.moveaxis(x, axis, -1)
    out = moved @ mat.T
    return np.moveaxis(out, -1, axis)


def quad_loop_dft4(x: np.ndarray) -> np.ndarray:
    """Brute-force 4-D DFT with explicit loops over every output bin."""
    x = np.asarray(x, dtype=np.complex128)
    a, b, c, d = x.shape
    tw = [np.exp(-2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n) for n in (a, b, c, d)]
    out = np.zeros_like(x)
    for k1 in range(a):
        for k2 in range(b):
            for k3 in range(c):
                for k4 in range(d):
                    out[k1, k2, k3, k4] = np.einsum(
                        "a,b,c,d,abcd->", tw[0][k1], tw[1][k2], tw[2][k3], tw[3][k4], x
                    )
    return out


def manual_shift(x: np.ndarray, axis: int) -> np.ndarray:
    """Center shift by explicit reindexing: out[k] = in[(k + N//2) % N]."""
    n = x.shape[axis]
    idx = [(k + n - n // 2) % n for k in range(n)]
    return np.take(x, idx, axis=axis)


def matmul_loops(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Triple-loop matrix product."""
    m, k = a.shape
    k2, n = b.shape
    assert k == k2
    out = np.zeros((m, n), dtype=np.result_type(a, b))
    for i in range(m):
        for j in range(n):
            s = 0.0
            for t in range(k):
                s += a[i, t] * b[t, j]
            out[i, j] = s
    return out


def steering_peak_bin(snapshot: np.ndarray, n_bins: int, d_over_lambda: float) -> int:
    """Best-matching angular bin of an antenna snapshot, by correlating with
    the steering vector of every (shifted-spectrum) bin."""
    p = np.arange(len(snapshot))
    best, best_val = 0, -1.0
    for k in range(n_bins):
        freq = (k - n_bins // 2) / n_bins  # cycles per antenna, centered
        v = np.exp(2j * np.pi * freq * p)
        val = abs(np.vdot(v, snapshot))
        if val > best_val:
            best, best_val = k, val
    return best


def adam_sequence(grads, lr, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.0, x0=0.0):
    """Scalar Adam trajectory computed step by step from the update formulas."""
    x, m, v = float(x0), 0.0, 0.0
    xs = []
    for t, g in enumerate(grads, start=1):
        g = g + weight_decay * x
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        mhat = m / (1 - beta1**t)
        vhat = v / (1 - beta2**t)
        x = x - lr * mhat / (np.sqrt(vhat) + eps)
        xs.append(x)
    return xs


def ranked_ap(correct_by_rank) -> float:
    """Average precision of a ranked boolean list (distinct confidences)."""
    hits = 0
    total = 0.0
    for i, c in enumerate(correct_by_rank, start=1):
        if c:
            hits += 1
            total += hits / i
    return total / len(correct_by_rank)
