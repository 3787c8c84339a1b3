"""Numpy implementation of the grid kernels.

Used when the compiled extension is unavailable or when ``NME_PURE_PYTHON``
is set. Signatures and the sup-polishing rule match ``nme._kernels``.
"""
import numpy as np


def synthesize(coeffs, cos_tab, sin_tab):
    K = cos_tab.shape[0] - 1
    return coeffs[:K + 1] @ cos_tab + coeffs[K + 1:] @ sin_tab[1:]


def analyze(values, cos_tab, sin_tab):
    K = cos_tab.shape[0] - 1
    M = cos_tab.shape[1]
    out = np.empty(2 * K + 1)
    out[:K + 1] = cos_tab @ values * (2.0 / M)
    out[0] *= 0.5
    out[K + 1:] = sin_tab[1:] @ values * (2.0 / M)
    return out


def _derivative_rows(coeffs, K, N):
    # rows j = 0..N hold the coefficients of the j-th derivative
    k = np.arange(K + 1, dtype=float)
    c = coeffs[..., :K + 1] - 1j * np.concatenate(
        [np.zeros(coeffs.shape[:-1] + (1,)), coeffs[..., K + 1:]], axis=-1)
    mult = (1j * k)[None, :] ** np.arange(N + 1)[:, None]
    mult[1:, 0] = 0.0
    d = c[..., None, :] * mult
    return np.concatenate([d.real, -d.imag[..., 1:]], axis=-1)


def grid_factor(K, M):
    # Bernstein: sup|p| <= gridmax / grid_factor for degree-K p on M points
    a = np.pi * K / M
    return 1.0 - 0.5 * a * a


def _polish(alpha, beta, theta, h, iters=12):
    # vectorized Newton on p'(theta) = 0 for all candidate grid maxima
    k = np.arange(alpha.size, dtype=float)
    t = theta.copy()
    ok = np.ones(t.size, dtype=bool)
    for _ in range(iters):
        c, s = np.cos(np.outer(t, k)), np.sin(np.outer(t, k))
        d1 = (c * (k * beta) - s * (k * alpha)).sum(axis=1)
        d2 = -(c * (k * k * alpha) + s * (k * k * beta)).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(d2 != 0.0, d1 / d2, 0.0)
        t = t - step
        ok &= np.abs(t - theta) <= h
        if np.all(np.abs(step) < 1e-8 * h):
            break
    c, s = np.cos(np.outer(t, k)), np.sin(np.outer(t, k))
    vals = np.abs(c @ alpha + s @ beta)
    return np.where(ok, vals, -1.0)


def _sup(vals, alpha, beta, M, K):
    absv = np.abs(vals)
    gmax = absv.max()
    if gmax == 0.0:
        return 0.0
    h = 2.0 * np.pi / M
    thr = 2.0 - 1.0 / grid_factor(K, M)
    cand = (absv >= gmax * thr) & (absv >= np.roll(absv, 1)) \
        & (absv >= np.roll(absv, -1))
    idx = np.nonzero(cand)[0]
    if idx.size == 0:
        return gmax
    # parabolic vertex through the three grid values as Newton start
    pm, p0, pp = np.roll(vals, 1)[idx], vals[idx], np.roll(vals, -1)[idx]
    den = pm - 2.0 * p0 + pp
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(den != 0.0, 0.5 * (pm - pp) / den, 0.0)
    shift = np.where(np.abs(shift) < 1.0, shift, 0.0)
    return max(gmax, float(_polish(alpha, beta, h * (idx + shift), 1.5 * h).max()))


def level_norms(coeffs, cos_tab, sin_tab, N):
    K = cos_tab.shape[0] - 1
    M = cos_tab.shape[1]
    coeffs = np.asarray(coeffs, dtype=float)
    rows = _derivative_rows(coeffs, K, N)
    vals = rows[:, :K + 1] @ cos_tab + rows[:, K + 1:] @ sin_tab[1:]
    out = np.empty(N + 1)
    for j in range(N + 1):
        beta = np.concatenate([[0.0], rows[j, K + 1:]])
        out[j] = _sup(vals[j], rows[j, :K + 1], beta, M, K)
    return np.maximum.accumulate(out)


def level_norms_batch(coeff_matrix, cos_tab, sin_tab, N):
    C = np.asarray(coeff_matrix, dtype=float)
    out = np.zeros((C.shape[0], N + 1))
    for i in range(C.shape[0]):
        out[i] = level_norms(C[i], cos_tab, sin_tab, N)
    return out
