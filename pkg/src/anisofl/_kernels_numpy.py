"""Pure NumPy loss/gradient kernels for the shallow two-block experiment.

The single-block kernel loops over units to keep temporaries at one grid
array per unit; the two-block kernel exploits separability of the units into
per-axis feature matrices, so every contraction is a small matrix product.
Both return the quadrature loss and the exact gradient of that quadrature
(reverse-mode through the analytic forward and x-derivative expressions).
"""

from __future__ import annotations

import numpy as np

backend_name = "numpy"


def single_block_loss_grad(w, wt, wx, b, c, m, t, x, f, g, wq):
    """Loss and gradient for sum_j w_j (wt_j t + wx_j x + b_j)_+^m + c.

    t: (nt,), x: (nx,); f, g, wq: (nt, nx) target values, target
    x-derivative, and quadrature masses.  Returns
    (loss, (gw, gwt, gwx, gb, gc)).
    """
    n = w.shape[0]
    tcol = t[:, None]
    xrow = x[None, :]
    phi = np.zeros_like(f)
    dphi = np.zeros_like(f)
    for j in range(n):
        z = wt[j] * tcol + wx[j] * xrow + b[j]
        a = np.maximum(z, 0.0)
        if m == 1:
            phi += w[j] * a
            dphi += (w[j] * wx[j]) * (z > 0.0)
        else:
            am1 = a ** (m - 1)
            phi += w[j] * (am1 * a)
            dphi += (w[j] * m * wx[j]) * am1
    r0 = phi + c - f
    r1 = dphi - g
    loss = float(np.sum(wq * (r0 * r0 + r1 * r1)))
    R0 = 2.0 * wq * r0
    R1 = 2.0 * wq * r1
    gw = np.empty(n)
    gwt = np.empty(n)
    gwx = np.empty(n)
    gb = np.empty(n)
    for j in range(n):
        z = wt[j] * tcol + wx[j] * xrow + b[j]
        a = np.maximum(z, 0.0)
        active = z > 0.0
        am1 = a ** (m - 1) if m > 1 else active.astype(float)
        gw[j] = np.sum(R0 * am1 * a) + m * wx[j] * np.sum(R1 * am1)
        if m == 1:
            gz = (w[j] * active) * R0
        elif m == 2:
            gz = (2.0 * w[j]) * (a * R0 + wx[j] * active * R1)
        else:
            am2 = np.where(active, a ** (m - 2), 0.0)
            gz = w[j] * m * (am1 * R0 + (m - 1) * wx[j] * am2 * R1)
        gb[j] = np.sum(gz)
        gwt[j] = np.sum(gz * tcol)
        gwx[j] = np.sum(gz * xrow) + m * w[j] * np.sum(R1 * am1)
    gc = float(np.sum(R0))
    return loss, (gw, gwt, gwx, gb, gc)


def two_block_loss_grad(w, wt, wx, bt, bx, c, m1, m2, t, x, f, g, wq):
    """Loss and gradient for sum_j w_j (wt_j t + bt_j)_+^{m1} (wx_j x + bx_j)_+^{m2} + c.

    Separable units: the forward pass and every gradient contraction are
    matrix products between (n_units, n_t) and (n_units, n_x) feature
    matrices.  Returns (loss, (gw, gwt, gwx, gbt, gbx, gc)).
    """
    za = wt[:, None] * t[None, :] + bt[:, None]          # (N, nt)
    zb = wx[:, None] * x[None, :] + bx[:, None]          # (N, nx)
    a_act = za > 0.0
    b_act = zb > 0.0
    A = np.where(a_act, za, 0.0) ** m1 if m1 > 1 else np.where(a_act, za, 0.0)
    if m1 == 1:
        dA = a_act.astype(float)
    else:
        dA = m1 * np.where(a_act, za, 0.0) ** (m1 - 1)
    Bp = np.where(b_act, zb, 0.0)
    B = Bp**m2 if m2 > 1 else Bp
    dB = m2 * Bp ** (m2 - 1) if m2 > 1 else m2 * b_act.astype(float)
    if m2 == 1:
        d2B = np.zeros_like(zb)
    elif m2 == 2:
        d2B = 2.0 * b_act.astype(float)
    else:
        d2B = m2 * (m2 - 1) * np.where(b_act, Bp ** (m2 - 2), 0.0)

    WA = w[:, None] * A                                   # (N, nt)
    dBwx = dB * wx[:, None]                               # (N, nx)
    phi = WA.T @ B + c                                    # (nt, nx)
    dphi = WA.T @ dBwx
    r0 = phi - f
    r1 = dphi - g
    loss = float(np.sum(wq * (r0 * r0 + r1 * r1)))
    R0 = 2.0 * wq * r0
    R1 = 2.0 * wq * r1

    M = R0 @ B.T + R1 @ dBwx.T                            # (nt, N)
    gw = np.sum(A.T * M, axis=0)
    gza = (w[:, None] * M.T) * dA                         # (N, nt)
    gbt = np.sum(gza, axis=1)
    gwt = gza @ t
    S0 = WA @ R0                                          # (N, nx)
    S1 = WA @ R1
    gzb = S0 * dB + (S1 * d2B) * wx[:, None]              # (N, nx)
    gbx = np.sum(gzb, axis=1)
    gwx = gzb @ x + np.sum(S1 * dB, axis=1)
    gc = float(np.sum(R0))
    return loss, (gw, gwt, gwx, gbt, gbx, gc)
