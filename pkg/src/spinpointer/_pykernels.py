"""Pure numpy versions of the compiled kernels in ``_ckernels.pyx``."""

import numpy as np

SERIES_CUTOFF = 12.0
_INV_SQRT2 = np.sqrt(0.5)
_CHUNK = 1 << 22


def bessel_series(order, z):
    z = np.asarray(z, dtype=np.float64)
    flat = z.ravel()
    q = -0.25 * flat * flat
    t = np.ones_like(flat) if order == 0 else 0.5 * flat
    s = t.copy()
    active = np.arange(flat.size)
    for k in range(1, 80):
        t[active] *= q[active] / (k * (k + order))
        s[active] += t[active]
        active = active[np.abs(t[active]) >= 1e-18]
        if active.size == 0:
            break
    return s.reshape(z.shape)


def bessel_hankel(order, z):
    z = np.asarray(z, dtype=np.float64)
    flat = z.ravel()
    mu = 4.0 * order * order
    inv8z = 1.0 / (8.0 * flat)
    t = np.ones_like(flat)
    p = np.ones_like(flat)
    q = np.zeros_like(flat)
    active = np.arange(flat.size)
    for k in range(1, 64):
        odd = 2 * k - 1
        tn = t[active] * (mu - odd * odd) * inv8z[active] / k
        # stop at the smallest term of the divergent series
        keep = np.abs(tn) < np.abs(t[active])
        active = active[keep]
        tn = tn[keep]
        if active.size == 0:
            break
        t[active] = tn
        if k % 2 == 0:
            p[active] += tn if (k // 2) % 2 == 0 else -tn
        else:
            q[active] += tn if ((k - 1) // 2) % 2 == 0 else -tn
        active = active[np.abs(tn) >= 1e-16]
        if active.size == 0:
            break
    c = np.cos(flat)
    s = np.sin(flat)
    if order == 0:
        cchi = (c + s) * _INV_SQRT2
        schi = (s - c) * _INV_SQRT2
    else:
        cchi = (s - c) * _INV_SQRT2
        schi = -(s + c) * _INV_SQRT2
    out = np.sqrt(2.0 / (np.pi * flat)) * (p * cchi - q * schi)
    return out.reshape(z.shape)


def bessel(order, z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    small = z < SERIES_CUTOFF
    out[small] = bessel_series(order, z[small])
    out[~small] = bessel_hankel(order, z[~small])
    return out


def bessel_weighted_sum(order, k, w, r):
    k = np.asarray(k, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    out = np.empty(r.size)
    step = max(1, _CHUNK // max(k.size, 1))
    for lo in range(0, r.size, step):
        rs = r[lo:lo + step]
        out[lo:lo + step] = w @ bessel(order, np.multiply.outer(k, rs))
    return out


def walk_step(buf, t):
    n = t + 1
    if buf.shape[0] < n + 1 or buf.shape[1] < n + 1:
        raise ValueError("buffer too small for the next step")
    a = buf[:n, :n]
    p = 0.5 * (a[..., 0] + a[..., 1])
    m = 0.5 * (a[..., 0] - a[..., 1])
    buf[:n + 1, :n + 1] = 0
    buf[1:n + 1, :n, 0] += p
    buf[1:n + 1, :n, 1] += p
    buf[:n, :n, 0] += m
    buf[:n, :n, 1] -= m
    b = buf[:n + 1, :n]
    qp = 0.5 * (b[..., 0] - 1j * b[..., 1])
    qm = 0.5 * (b[..., 0] + 1j * b[..., 1])
    buf[:n + 1, :n + 1] = 0
    buf[:n + 1, 1:n + 1, 0] += qp
    buf[:n + 1, 1:n + 1, 1] += 1j * qp
    buf[:n + 1, :n, 0] += qm
    buf[:n + 1, :n, 1] -= 1j * qm
