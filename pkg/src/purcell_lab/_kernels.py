"""Hot numeric kernels with numba and pure-numpy implementations.

These kernels live here because they dominate runtime in sweeps and maps:

* the six radial profile functions entering the dipole field pattern,
* the radiated-intensity accumulation over an observation grid,
* a cyclic-Jacobi eigensolver for real symmetric decay matrices,
* the emitter-only master-equation right-hand side driving free decay.

The active implementation is chosen at import time by
:mod:`purcell_lab._backend`. Both variants are importable directly (suffixes
``_numba`` / ``_numpy``) so the benchmark can compare them.

Radial conventions: with ``x = kr`` the closed forms are

* ``a = sin x / x``
* ``b = cos x / x^2 - sin x / x^3``
* ``c = sin x / x + 3 cos x / x^2 - 3 sin x / x^3``
* ``d = cos x / x``
* ``e = sin x / x^2 + cos x / x^3``
* ``g = cos x / x - 3 sin x / x^2 - 3 cos x / x^3``

``b``, ``e`` and ``g`` switch to series below ``x = 1e-3``. The transverse
combination ``c`` loses all significant digits near ``x = 1e-3`` (its leading
term is ``-x^2/15`` riding on ``O(1/x^3)`` cancellations), so its series
branch extends up to ``x = 0.125`` where the closed form is still good to
better than 1e-10 relative.
"""

import math

import numpy as np

from ._backend import NUMBA_AVAILABLE, NUMBA_ENABLED

KR_SERIES_AXIAL = 1e-3
KR_SERIES_TRANSVERSE = 0.125

_JACOBI_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 60


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def _series_b(x2):
    return -1.0 / 3.0 + x2 * (1.0 / 30.0 + x2 * (-1.0 / 840.0 + x2 / 45360.0))


def _series_c(x2):
    return x2 * (-1.0 / 15.0 + x2 * (1.0 / 210.0 + x2 * (
        -1.0 / 7560.0 + x2 * (1.0 / 498960.0 - x2 / 51891840.0))))


def _series_e(x):
    x2 = x * x
    return 1.0 / (x * x2) + 0.5 / x + x * (-1.0 / 8.0 + x2 * (1.0 / 144.0 - x2 / 5760.0))


def _series_g(x):
    x2 = x * x
    return -3.0 / (x * x2) - 0.5 / x + x * (-1.0 / 8.0 + x2 * (1.0 / 48.0 - x2 / 1152.0))


def radial_profiles_numpy(kr):
    """Evaluate the six radial functions on an array of kr > 0."""
    x = np.asarray(kr, dtype=float)
    s = np.sin(x)
    co = np.cos(x)
    x2 = x * x
    x3 = x2 * x

    ra = s / x
    rd = co / x

    axial = x < KR_SERIES_AXIAL
    rb = np.where(axial, _series_b(x2), co / x2 - s / x3)
    re_ = np.where(axial, _series_e(x), s / x2 + co / x3)
    rg = np.where(axial, _series_g(x), co / x - 3.0 * s / x2 - 3.0 * co / x3)

    transverse = x < KR_SERIES_TRANSVERSE
    rc = np.where(transverse, _series_c(x2), s / x + 3.0 * co / x2 - 3.0 * s / x3)
    return ra, rb, rc, rd, re_, rg


def radial_profiles_closed(kr):
    """Closed forms only, for series/closed agreement checks."""
    x = np.asarray(kr, dtype=float)
    s, co = np.sin(x), np.cos(x)
    x2, x3 = x * x, x * x * x
    return (s / x,
            co / x2 - s / x3,
            s / x + 3.0 * co / x2 - 3.0 * s / x3,
            co / x,
            s / x2 + co / x3,
            co / x - 3.0 * s / x2 - 3.0 * co / x3)


def radial_profiles_series(kr):
    """Series branches only, for series/closed agreement checks."""
    x = np.asarray(kr, dtype=float)
    x2 = x * x
    return (np.sin(x) / x,
            _series_b(x2),
            _series_c(x2),
            np.cos(x) / x,
            _series_e(x),
            _series_g(x))


def _profile_components(ct, stcp, stsp, radials):
    """Assemble (F - iG) Cartesian components from direction cosines."""
    ra, rb, rc, rd, re_, rg = radials
    st2 = stcp * stcp + stsp * stsp
    aniso = 1.0 - 3.0 * ct * ct
    fx = -ct * stcp * rc
    fy = -ct * stsp * rc
    fz = st2 * ra + aniso * rb
    gx = -ct * stcp * rg
    gy = -ct * stsp * rg
    gz = st2 * rd - aniso * re_
    return fx, fy, fz, gx, gy, gz


def radiation_intensity_numpy(points, positions, frame, k_e, coherence, min_kr):
    """Radiated intensity at each observation point (vectorized numpy).

    ``frame`` is a 3x3 matrix whose rows are (e1, e2, mu); direction cosines
    are taken in that dipole-aligned frame. Points closer than ``min_kr / k_e``
    to any emitter give NaN.
    """
    pts = np.asarray(points, dtype=float)
    pos = np.asarray(positions, dtype=float)
    sep = pts[:, None, :] - pos[None, :, :]          # (P, N, 3)
    local = sep @ frame.T                            # components on (e1, e2, mu)
    r = np.sqrt(np.sum(local * local, axis=-1))
    bad = np.any(k_e * r < min_kr, axis=1)
    r_safe = np.where(r > 0.0, r, 1.0)
    u = local / r_safe[..., None]
    kr = np.where(k_e * r < min_kr, 1.0, k_e * r)    # dummy safe argument
    radials = radial_profiles_numpy(kr)
    fx, fy, fz, gx, gy, gz = _profile_components(u[..., 2], u[..., 0], u[..., 1], radials)
    v = np.stack([fx - 1j * gx, fy - 1j * gy, fz - 1j * gz], axis=-1)  # (P, N, 3)
    intensity = np.einsum("pim,ij,pjm->p", v.conj(), coherence, v).real
    intensity[bad] = np.nan
    return intensity


def symmetric_eigh_numpy(a):
    """Real symmetric eigendecomposition via LAPACK (numpy fallback path)."""
    w, v = np.linalg.eigh(np.asarray(a, dtype=float))
    return w, v, True


def free_decay_rhs_numpy(h_eff, gamma_weights, src, dst, rho):
    """Emitter-only Lindblad right-hand side for a Hermitian density matrix.

    Uses the pairwise jump structure: each lowering operator is a pure index
    map on the qubit basis, so ``S_i rho S_j^dag`` is a gather of a
    sub-block. ``src[i]`` lists the basis indices with emitter i excited and
    ``dst[i]`` the corresponding de-excited indices. Algebraically identical
    to the diagonalized channel form (the channel rates and transform
    recombine to the decay matrix).
    """
    p = h_eff @ rho
    out = -1j * (p - p.conj().T)
    n = gamma_weights.shape[0]
    for i in range(n):
        rows_d = dst[i][:, None]
        rows_s = src[i][:, None]
        for j in range(n):
            w = 2.0 * gamma_weights[i, j]
            if w != 0.0:
                out[rows_d, dst[j][None, :]] += w * rho[rows_s, src[j][None, :]]
    return out


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if NUMBA_AVAILABLE:
    from numba import njit

    @njit(cache=True)
    def _radial_six(x):
        s = math.sin(x)
        co = math.cos(x)
        x2 = x * x
        x3 = x2 * x
        ra = s / x
        rd = co / x
        if x < KR_SERIES_AXIAL:
            rb = -1.0 / 3.0 + x2 * (1.0 / 30.0 + x2 * (-1.0 / 840.0 + x2 / 45360.0))
            re_ = 1.0 / x3 + 0.5 / x + x * (-1.0 / 8.0 + x2 * (1.0 / 144.0 - x2 / 5760.0))
            rg = -3.0 / x3 - 0.5 / x + x * (-1.0 / 8.0 + x2 * (1.0 / 48.0 - x2 / 1152.0))
        else:
            rb = co / x2 - s / x3
            re_ = s / x2 + co / x3
            rg = co / x - 3.0 * s / x2 - 3.0 * co / x3
        if x < KR_SERIES_TRANSVERSE:
            rc = x2 * (-1.0 / 15.0 + x2 * (1.0 / 210.0 + x2 * (
                -1.0 / 7560.0 + x2 * (1.0 / 498960.0 - x2 / 51891840.0))))
        else:
            rc = s / x + 3.0 * co / x2 - 3.0 * s / x3
        return ra, rb, rc, rd, re_, rg

    @njit(cache=True)
    def radial_profiles_numba(kr):
        n = kr.size
        ra = np.empty(n)
        rb = np.empty(n)
        rc = np.empty(n)
        rd = np.empty(n)
        re_ = np.empty(n)
        rg = np.empty(n)
        flat = kr.ravel()
        for i in range(n):
            a, b, c, d, e, g = _radial_six(flat[i])
            ra[i] = a
            rb[i] = b
            rc[i] = c
            rd[i] = d
            re_[i] = e
            rg[i] = g
        return (ra.reshape(kr.shape), rb.reshape(kr.shape), rc.reshape(kr.shape),
                rd.reshape(kr.shape), re_.reshape(kr.shape), rg.reshape(kr.shape))

    @njit(cache=True)
    def radiation_intensity_numba(points, positions, frame, k_e, coh_re, coh_im, min_kr):
        n_pts = points.shape[0]
        n_em = positions.shape[0]
        out = np.empty(n_pts)
        vre = np.empty((n_em, 3))
        vim = np.empty((n_em, 3))
        for ip in range(n_pts):
            ok = True
            for j in range(n_em):
                sx = points[ip, 0] - positions[j, 0]
                sy = points[ip, 1] - positions[j, 1]
                sz = points[ip, 2] - positions[j, 2]
                r = math.sqrt(sx * sx + sy * sy + sz * sz)
                kr = k_e * r
                if kr < min_kr:
                    ok = False
                    break
                u1 = (sx * frame[0, 0] + sy * frame[0, 1] + sz * frame[0, 2]) / r
                u2 = (sx * frame[1, 0] + sy * frame[1, 1] + sz * frame[1, 2]) / r
                u3 = (sx * frame[2, 0] + sy * frame[2, 1] + sz * frame[2, 2]) / r
                ra, rb, rc, rd, re_, rg = _radial_six(kr)
                st2 = u1 * u1 + u2 * u2
                aniso = 1.0 - 3.0 * u3 * u3
                vre[j, 0] = -u3 * u1 * rc
                vre[j, 1] = -u3 * u2 * rc
                vre[j, 2] = st2 * ra + aniso * rb
                vim[j, 0] = u3 * u1 * rg
                vim[j, 1] = u3 * u2 * rg
                vim[j, 2] = -(st2 * rd - aniso * re_)
            if not ok:
                out[ip] = np.nan
                continue
            acc = 0.0
            for i in range(n_em):
                for j in range(n_em):
                    dot_r = 0.0
                    dot_i = 0.0
                    for m in range(3):
                        dot_r += vre[i, m] * vre[j, m] + vim[i, m] * vim[j, m]
                        dot_i += vre[i, m] * vim[j, m] - vim[i, m] * vre[j, m]
                    acc += coh_re[i, j] * dot_r - coh_im[i, j] * dot_i
            out[ip] = acc
        return out

    @njit(cache=True)
    def _jacobi_sweep_eigh(a, tol, max_sweeps):
        n = a.shape[0]
        b = a.copy()
        v = np.eye(n)
        norm_a = 0.0
        for i in range(n):
            for j in range(n):
                norm_a += b[i, j] * b[i, j]
        thresh = tol * max(math.sqrt(norm_a), 1e-300)
        converged = False
        for _ in range(max_sweeps):
            off = 0.0
            for i in range(n - 1):
                for j in range(i + 1, n):
                    off += 2.0 * b[i, j] * b[i, j]
            if math.sqrt(off) <= thresh:
                converged = True
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = b[p, q]
                    if abs(apq) < 1e-300:
                        continue
                    tau = (b[q, q] - b[p, p]) / (2.0 * apq)
                    if tau >= 0.0:
                        t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                    else:
                        t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                    c = 1.0 / math.sqrt(1.0 + t * t)
                    s = t * c
                    for k in range(n):
                        bkp = b[k, p]
                        bkq = b[k, q]
                        b[k, p] = c * bkp - s * bkq
                        b[k, q] = s * bkp + c * bkq
                    for k in range(n):
                        bpk = b[p, k]
                        bqk = b[q, k]
                        b[p, k] = c * bpk - s * bqk
                        b[q, k] = s * bpk + c * bqk
                    for k in range(n):
                        vkp = v[k, p]
                        vkq = v[k, q]
                        v[k, p] = c * vkp - s * vkq
                        v[k, q] = s * vkp + c * vkq
        w = np.empty(n)
        for i in range(n):
            w[i] = b[i, i]
        return w, v, converged

    def symmetric_eigh_numba(a):
        """Cyclic Jacobi rotations to 1e-12 relative off-diagonal norm."""
        a = np.ascontiguousarray(a, dtype=float)
        return _jacobi_sweep_eigh(a, _JACOBI_TOL, _JACOBI_MAX_SWEEPS)

    @njit(cache=True)
    def free_decay_rhs_numba(h_eff, gamma_weights, src, dst, rho):
        dim = rho.shape[0]
        p = h_eff @ rho
        out = np.empty_like(rho)
        for a in range(dim):
            for b in range(dim):
                out[a, b] = -1j * (p[a, b] - np.conj(p[b, a]))
        n = gamma_weights.shape[0]
        half = src.shape[1]
        for i in range(n):
            for j in range(n):
                w = 2.0 * gamma_weights[i, j]
                if w == 0.0:
                    continue
                for a in range(half):
                    da = dst[i, a]
                    sa = src[i, a]
                    for b in range(half):
                        out[da, dst[j, b]] += w * rho[sa, src[j, b]]
        return out

else:  # pragma: no cover - exercised only without numba installed
    radial_profiles_numba = None
    radiation_intensity_numba = None
    symmetric_eigh_numba = None
    free_decay_rhs_numba = None


# ---------------------------------------------------------------------------
# active bindings
# ---------------------------------------------------------------------------

if NUMBA_ENABLED:
    def radial_profiles(kr):
        arr = np.ascontiguousarray(kr, dtype=float)
        return radial_profiles_numba(arr)

    def radiation_intensity_kernel(points, positions, frame, k_e, coherence, min_kr):
        coh = np.ascontiguousarray(coherence, dtype=complex)
        return radiation_intensity_numba(
            np.ascontiguousarray(points, dtype=float),
            np.ascontiguousarray(positions, dtype=float),
            np.ascontiguousarray(frame, dtype=float),
            float(k_e),
            np.ascontiguousarray(coh.real),
            np.ascontiguousarray(coh.imag),
            float(min_kr),
        )

    symmetric_eigh = symmetric_eigh_numba
    free_decay_rhs = free_decay_rhs_numba
else:
    radial_profiles = radial_profiles_numpy

    def radiation_intensity_kernel(points, positions, frame, k_e, coherence, min_kr):
        return radiation_intensity_numpy(
            np.asarray(points, dtype=float),
            np.asarray(positions, dtype=float),
            np.asarray(frame, dtype=float),
            float(k_e),
            np.asarray(coherence, dtype=complex),
            float(min_kr),
        )

    symmetric_eigh = symmetric_eigh_numpy
    free_decay_rhs = free_decay_rhs_numpy
