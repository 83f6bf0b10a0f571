"""
Eigenvalues of small dense real matrices by QR iteration on the Hessenberg form.

Householder reduction to upper Hessenberg form is followed by QR sweeps on
each unreduced diagonal block: two plain (unshifted) sweeps, then explicit
Francis double shifts taken from the trailing 2x2 block, with ad hoc
exceptional shifts when a block stalls. Blocks of size one or two are solved
in closed form. Blocks are rescaled to unit size before each sweep. Meant
for the few-dozen-coordinate matrices of this package, not for speed.
"""
import numpy as np

from .errors import EigenNoConvergence

DEFLATION_TOL = 1e-10


def _householder(x):
    v = np.array(x, float)
    m = np.abs(v).max()
    if m == 0.0:
        return None
    # squares of tiny entries would underflow
    v /= m
    alpha = np.linalg.norm(v)
    if alpha == 0.0:
        return None
    if v[0] > 0:
        alpha = -alpha
    v[0] -= alpha
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return None
    return v / nv


def hessenberg(a):
    """Return an upper Hessenberg matrix orthogonally similar to ``a``."""
    h = np.array(a, float)
    n = h.shape[0]
    for k in range(n - 2):
        v = _householder(h[k + 1:, k])
        if v is None:
            continue
        h[k + 1:, :] -= 2.0 * np.outer(v, v @ h[k + 1:, :])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v)
        h[k + 2:, k] = 0.0
    return h


def qr_decompose(a):
    """Householder QR, ``a = q @ r``."""
    r = np.array(a, float)
    m, n = r.shape
    q = np.eye(m)
    for k in range(min(m - 1, n)):
        v = _householder(r[k:, k])
        if v is None:
            continue
        r[k:, :] -= 2.0 * np.outer(v, v @ r[k:, :])
        q[:, k:] -= 2.0 * np.outer(q[:, k:] @ v, v)
    return q, r


def _eig2(b):
    a, bb, c, d = b[0, 0], b[0, 1], b[1, 0], b[1, 1]
    mean = 0.5 * (a + d)
    disc = 0.25 * (a - d) ** 2 + bb * c
    if disc >= 0:
        s = np.sqrt(disc)
        big = mean + s if mean >= 0 else mean - s
        # det / big avoids cancellation in the smaller root; it is used only
        # when the determinant is known to about eps * big^2, otherwise the
        # trace relation is kept exactly
        if big != 0 and abs(a * d) + abs(bb * c) <= big * big:
            small = (a * d - bb * c) / big
        else:
            small = 2.0 * mean - big
        return [complex(big), complex(small)]
    s = np.sqrt(-disc)
    return [complex(mean, s), complex(mean, -s)]


def _small(h, k, floor=0.0):
    scale = abs(h[k, k]) + abs(h[k - 1, k - 1])
    if scale == 0.0:
        scale = np.abs(h).max()
    return abs(h[k, k - 1]) <= max(DEFLATION_TOL * scale, floor)


def eigvals(a, max_iter=None):
    """All eigenvalues of the real square matrix ``a`` (complex array)."""
    a = np.atleast_2d(np.asarray(a, float))
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    budget = 100 * n * n if max_iter is None else max_iter
    # work at unit scale so the shifted products neither underflow nor overflow
    scale = np.abs(a).max()
    if scale == 0.0:
        return np.zeros(n, complex)
    # entries below rounding level of the whole (unit-scale) matrix also deflate
    floor = n * np.finfo(float).eps
    used = 0
    out = []
    stack = [hessenberg(a / scale)]
    while stack:
        h = stack.pop()
        m = h.shape[0]
        if m == 1:
            out.append(complex(h[0, 0]))
            continue
        if m == 2:
            out.extend(_eig2(h))
            continue
        split = next((k for k in range(m - 1, 0, -1) if _small(h, k, floor)), None)
        if split is not None:
            stack.append(h[:split, :split].copy())
            stack.append(h[split:, split:].copy())
            continue
        if used >= budget:
            raise EigenNoConvergence(f"QR iteration did not converge in {budget} sweeps")
        # the sweep is a similarity, so it commutes with rescaling the block
        bs = np.abs(h).max()
        h = bs * _sweep(h / bs, used)
        used += 1
        stack.append(h)
    return scale * np.array(out)


def _sweep(h, it):
    m = h.shape[0]
    if it < 2:
        q, r = qr_decompose(h)
        return hessenberg(r @ q)
    if it % 11 == 10:
        # exceptional shift to break cycles
        w = abs(h[m - 1, m - 2]) + abs(h[m - 2, m - 3])
        s, t = 1.5 * w, w * w
    else:
        tail = h[m - 2:, m - 2:]
        s = tail[0, 0] + tail[1, 1]
        t = tail[0, 0] * tail[1, 1] - tail[0, 1] * tail[1, 0]
    shifted = h @ h - s * h + t * np.eye(m)
    q, _ = qr_decompose(shifted)
    return hessenberg(q.T @ h @ q)


def max_real_part(a):
    return float(np.max(eigvals(a).real))
