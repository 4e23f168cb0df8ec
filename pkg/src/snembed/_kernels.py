"""Compiled pair loops for the likelihood (single pass over ``i < j``)."""

import math

import numba

LOGIT = 0
PROBIT = 1
_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


@numba.njit(cache=True)
def _cdf(x, kind):
    if kind == LOGIT:
        if x >= 0:
            return 1.0 / (1.0 + math.exp(-x))
        e = math.exp(x)
        return e / (1.0 + e)
    return 0.5 * math.erfc(-x * _INV_SQRT2)


@numba.njit(cache=True)
def _pdf(x, kind):
    if kind == LOGIT:
        e = math.exp(-abs(x))
        return e / ((1.0 + e) * (1.0 + e))
    return _INV_SQRT2PI * math.exp(-0.5 * x * x)


@numba.njit(cache=True)
def pair_pass(Y, B, A, d0, d1, kind, eps, want_grad, gB, gA):
    """Return ``(negLL, gd0, gd1)``; fills ``gB``/``gA`` with grad of +log L.

    ``gB``/``gA`` are overwritten only when ``want_grad`` is true.
    """
    n = Y.shape[0]
    K1 = B.shape[1]
    K2 = A.shape[1]
    nll = 0.0
    gd0 = 0.0
    gd1 = 0.0
    if want_grad:
        gB[:, :] = 0.0
        gA[:, :] = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            m = 0.0
            for k in range(K1):
                diff = B[i, k] - B[j, k]
                m -= diff * diff
            for k in range(K2):
                m += A[i, k] * A[j, k]
            y = Y[i, j]
            if kind == LOGIT:
                # logistic: f' = f (1 - f), so one exp per link evaluation
                if y == 1:
                    p = _cdf(d1 + m, kind)
                    f1 = p * (1.0 - p)
                    f0 = 0.0
                elif y == -1:
                    p = _cdf(-(d0 + m), kind)
                    f0 = p * (1.0 - p)
                    f1 = 0.0
                else:
                    x1 = d1 + m
                    if x1 > 0.0:
                        u0 = _cdf(-(d0 + m), kind)
                        u1 = _cdf(-x1, kind)
                        p = u1 - u0
                    else:
                        u0 = _cdf(d0 + m, kind)
                        u1 = _cdf(x1, kind)
                        p = u0 - u1
                    f0 = u0 * (1.0 - u0)
                    f1 = u1 * (1.0 - u1)
            else:
                x0 = d0 + m
                x1 = d1 + m
                if y == 1:
                    p = _cdf(x1, kind)
                    f1 = _pdf(x1, kind) if want_grad else 0.0
                    f0 = 0.0
                elif y == -1:
                    p = _cdf(-x0, kind)
                    f0 = _pdf(x0, kind) if want_grad else 0.0
                    f1 = 0.0
                else:
                    if x1 > 0.0:
                        p = _cdf(-x1, kind) - _cdf(-x0, kind)
                    else:
                        p = _cdf(x0, kind) - _cdf(x1, kind)
                    if want_grad:
                        f0 = _pdf(x0, kind)
                        f1 = _pdf(x1, kind)
                    else:
                        f0 = 0.0
                        f1 = 0.0
            # derivatives of the observed-category probability in m, d0, d1
            if y == 1:
                dm = f1
                h0 = 0.0
                h1 = f1
            elif y == -1:
                dm = -f0
                h0 = -f0
                h1 = 0.0
            else:
                dm = f0 - f1
                h0 = f0
                h1 = -f1
            floored = p < eps
            if floored:
                p = eps
            elif p > 1.0:
                p = 1.0
            nll -= math.log(p)
            # the floored objective is flat in every parameter
            if want_grad and not floored:
                inv = 1.0 / p
                g = dm * inv
                gd0 += h0 * inv
                gd1 += h1 * inv
                for k in range(K1):
                    t = -2.0 * g * (B[i, k] - B[j, k])
                    gB[i, k] += t
                    gB[j, k] -= t
                for k in range(K2):
                    gA[i, k] += g * A[j, k]
                    gA[j, k] += g * A[i, k]
    return nll, gd0, gd1
