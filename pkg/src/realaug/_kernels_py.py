"""Pure-numpy implementations of the compiled kernels.

Used when the extension is not built or ``REALAUG_KERNELS=python`` is set.
Arithmetic order follows ``_kernels.pyx`` so results agree to the last bit
wherever libm and numpy agree on sin/cos.
"""
import numpy as np

BACKEND = "python"

_SCALE = np.array([100.0, 100.0, 10.0, 1.0])


def points_in_box_mask(cloud, cx, cy, cz, l, w, h, c, s):
    dx = cloud[:, 0] - cx
    dy = cloud[:, 1] - cy
    dz = cloud[:, 2] - cz
    u = dx * c + dy * s
    v = dy * c - dx * s
    return (np.abs(u) <= l / 2.0) & (np.abs(v) <= w / 2.0) & (np.abs(dz) <= h / 2.0)


def support_query(cloud, placeable, cx, cy, radius, l, w, c, s):
    dx = cloud[:, 0] - cx
    dy = cloud[:, 1] - cy
    near = dx * dx + dy * dy <= radius * radius
    n_near = int(np.count_nonzero(near))
    sel = near & placeable
    idx = np.flatnonzero(sel)
    dxs, dys = dx[idx], dy[idx]
    u = dxs * c + dys * s
    v = dys * c - dxs * s
    inside = (np.abs(u) <= l / 2.0) & (np.abs(v) <= w / 2.0)
    return n_near, int(idx.size), idx, idx[inside]


def fourier_features(cloud, order):
    n = cloud.shape[0]
    stride = 1 + 2 * order
    u = cloud[:, :4] / _SCALE
    out = np.empty((n, 4, stride), dtype=np.float64)
    out[:, :, 0] = u
    sk = np.sin(np.pi * u)
    ck = np.cos(np.pi * u)
    for k in range(order):
        out[:, :, 1 + 2 * k] = sk
        out[:, :, 2 + 2 * k] = ck
        sk, ck = 2.0 * sk * ck, ck * ck - sk * sk
    return out.reshape(n, 4 * stride)


def support_query_grid(cloud, placeable, alive, order, starts, ny, ix0, ix1, iy0, iy1,
                       cx, cy, radius, l, w, c, s):
    cand = np.concatenate([order[starts[ix * ny + iy0]:starts[ix * ny + iy1 + 1]]
                           for ix in range(ix0, ix1 + 1)])
    cand = cand[alive[cand]]
    dx = cloud[cand, 0] - cx
    dy = cloud[cand, 1] - cy
    near = dx * dx + dy * dy <= radius * radius
    n_near = int(np.count_nonzero(near))
    sel = near & placeable[cand]
    idx = cand[sel]
    dxs, dys = dx[sel], dy[sel]
    u = dxs * c + dys * s
    v = dys * c - dxs * s
    inside = (np.abs(u) <= l / 2.0) & (np.abs(v) <= w / 2.0)
    return n_near, int(idx.size), idx, idx[inside]
