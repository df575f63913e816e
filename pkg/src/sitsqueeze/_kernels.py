"""Compiled inner loops.

The trajectory kernel marches in retarded time.  At each tau the field at
every cell follows from the upstream polarization by a z-quadrature, so the
atoms of cell j see the field at the cell centre built from the input pulse,
the sources of cells < j and half of their own source.  Because the atoms at
tau_i are already known this is explicit, yet it is the midpoint rule in z,
which keeps the low-frequency part of the field stable for long windows.
"""

import numpy as np
from numba import njit

SCHEME_EULER = 0
SCHEME_MIDPOINT = 1
SCHEME_RK4 = 2

MODEL_CONSISTENT = 0
MODEL_PRINTED = 1


@njit(cache=True)
def atomic_noise_terms(rm, rp, rz, a, b, xJ, xJd, xz, xP, xo, gamma_p, W12, gamma_par, sigma_ss, q,
                       model, sym, coupling, dephasing, pump, zchan):
    """Noise amplitudes times unit draws for one band of one cell.

    Returns (dR-, dR+, dRz, sqrt_minus, sqrt_plus, sqrt_z); the draws must
    already carry the sqrt(dtau/N) scaling.  The consistent model evaluates
    the Pauli-operator expressions on R/|Rz0| and scales back by |Rz0|; the
    printed model applies the expressions to R directly.
    """
    if model == MODEL_CONSISTENT:
        p = 1.0 / q
        scale = q
    else:
        p = 1.0
        scale = 1.0
    m = rm * p
    pp = rp * p
    zz = rz * p
    dm = 0j
    dp = 0j
    dz = 0j
    radz = 0j
    gm = 0j
    gp = 0j
    if coupling:
        gm = np.sqrt(2.0 * a * m + 0j)
        if model == MODEL_CONSISTENT or sym:
            gp = np.sqrt(2.0 * b * pp + 0j)
        else:
            gp = np.sqrt(b * pp + 0j)
        dm += gm * xJ
        dp += gp * xJd
        if model == MODEL_CONSISTENT:
            radz += -(m * b + pp * a)
        else:
            radz += m * b - pp * a
    if dephasing and gamma_p > 0.0:
        s = 2.0 * np.sqrt(gamma_p * (zz + 1.0) + 0j)
        dm += s * xP
        dp += s * np.conj(xP)
    if pump and W12 > 0.0:
        s = 2.0 * np.sqrt(W12)
        dm += s * xo
        dp += s * np.conj(xo)
        radz += -2.0 * W12 * pp * m
        dz += -np.sqrt(W12) * (xo * pp + np.conj(xo) * m)
    if zchan and gamma_par > 0.0:
        radz += 2.0 * gamma_par * (1.0 - sigma_ss * zz)
    gz = np.sqrt(radz + 0j)
    dz += gz * xz
    return scale * dm, scale * dp, scale * dz, gm, gp, gz


@njit(cache=True)
def atomic_noise_array(rm, rp, rz, a, b, xJ, xJd, xz, xP, xo, gamma_p, W12, gamma_par, sigma_ss, q,
                       model, sym, coupling, dephasing, pump, zchan):
    """Elementwise ``atomic_noise_terms`` over flat arrays of equal length."""
    n = rm.shape[0]
    dm = np.empty(n, np.complex128)
    dp = np.empty(n, np.complex128)
    dz = np.empty(n, np.complex128)
    for k in range(n):
        r = atomic_noise_terms(rm[k], rp[k], rz[k], a[k], b[k], xJ[k], xJd[k], xz[k], xP[k], xo[k],
                               gamma_p, W12, gamma_par, sigma_ss, q, model, sym, coupling, dephasing,
                               pump, zchan)
        dm[k] = r[0]
        dp[k] = r[1]
        dz[k] = r[2]
    return dm, dp, dz


@njit(cache=True)
def _centres(om_in, omd_in, tm, tp, w, gdz, att_h, att, fn, use_fn, om_c, omd_c, nz_act):
    acc = om_in
    accd = omd_in
    nb = w.shape[0]
    for j in range(nz_act):
        src = 0j
        srcd = 0j
        for b in range(nb):
            src += w[b] * tm[j, b]
            srcd += w[b] * tp[j, b]
        inc = gdz * src
        incd = gdz * srcd
        if use_fn:
            inc += fn[j]
            incd += np.conj(fn[j])
        om_c[j] = att_h * acc + 0.5 * inc
        omd_c[j] = att_h * accd + 0.5 * incd
        acc = att * acc + inc
        accd = att * accd + incd


@njit(cache=True)
def _drift(om_c, omd_c, det, rm, rp, rz, km, kp, kzz, gperp, gpar, target, nz_act):
    nb = det.shape[0]
    for j in range(nz_act):
        a = om_c[j]
        bd = omd_c[j]
        for b in range(nb):
            km[j, b] = -(gperp + 1j * det[b]) * rm[j, b] + a * rz[j, b]
            kp[j, b] = -(gperp - 1j * det[b]) * rp[j, b] + bd * rz[j, b]
            kzz[j, b] = -gpar * (rz[j, b] - target) - 0.5 * (a * rp[j, b] + bd * rm[j, b])


@njit(cache=True)
def march(om_in, omd_in, om_mid, omd_mid, det, w, sq_b, rates, gdz, att_h, att, flags, famp, ck,
          rm, rp, rz, M, A, snap, snapd, prev, status, i0, i1, xJ, xJd, xz, xP, xo, xa, threshold):
    """Advance one trajectory over tau steps i0 <= i < i1.

    ``rates`` = (gamma_perp, gamma_par, relax target, gamma_p, W12, sigma_ss, |Rz0|, dtau).
    ``flags`` = (scheme, model, symmetrize, coupling, dephasing, pump, z-channel,
    atomic noise on, field noise on, store snapshots).
    ``status`` = (active cells, step of first divergence, branch flips).
    Observables at the checkpoint boundaries ``ck`` are accumulated with
    trapezoid weights; the atoms are stepped from tau_i to tau_i+1 except at
    the last grid point.
    """
    n = om_in.shape[0]
    nz, nb = rm.shape
    nck = ck.shape[0]
    dtau_full = rates[7]
    gperp = rates[0]
    gpar = rates[1]
    target = rates[2]
    gamma_p = rates[3]
    W12 = rates[4]
    sigma_ss = rates[5]
    q = rates[6]
    scheme = flags[0]
    model = flags[1]
    sym = flags[2] != 0
    coupling = flags[3] != 0
    dephasing = flags[4] != 0
    pump = flags[5] != 0
    zchan = flags[6] != 0
    noise_on = flags[7] != 0
    fnoise = flags[8] != 0
    store = flags[9] != 0

    om_c = np.empty(nz, np.complex128)
    omd_c = np.empty(nz, np.complex128)
    fn = np.zeros(nz, np.complex128)
    K = np.empty((4, 3, nz, nb), np.complex128)
    tm = np.empty((nz, nb), np.complex128)
    tp = np.empty((nz, nb), np.complex128)
    tz = np.empty((nz, nb), np.complex128)
    dnm = np.zeros((nz, nb), np.complex128)
    dnp = np.zeros((nz, nb), np.complex128)
    dnz = np.zeros((nz, nb), np.complex128)

    for i in range(i0, i1):
        r = i - i0
        nz_act = status[0]
        if fnoise:
            for j in range(nz_act):
                fn[j] = famp * xa[r, j]
        # boundary fields at tau_i for the observables
        acc = om_in[i]
        accd = omd_in[i]
        wt = dtau_full if (i > 0 and i < n - 1) else 0.5 * dtau_full
        c = 0
        for j in range(nz_act + 1):
            while c < nck and ck[c] < j:
                c += 1
            while c < nck and ck[c] == j:
                M[c] += wt * accd * acc
                A[c] += wt * acc
                if store:
                    snap[c, i] = acc
                    snapd[c, i] = accd
                c += 1
            if j < nz_act:
                src = 0j
                srcd = 0j
                for b in range(nb):
                    src += w[b] * rm[j, b]
                    srcd += w[b] * rp[j, b]
                inc = gdz * src
                incd = gdz * srcd
                if fnoise:
                    inc += fn[j]
                    incd += np.conj(fn[j])
                om_c[j] = att_h * acc + 0.5 * inc
                omd_c[j] = att_h * accd + 0.5 * incd
                acc = att * acc + inc
                accd = att * accd + incd
        if i == n - 1:
            break

        # Ito noise: amplitudes at the start of the step
        if noise_on:
            for j in range(nz_act):
                for b in range(nb):
                    s = sq_b[b]
                    xj = xJ[r, j, b] * s if coupling else 0.0
                    xjd = xJd[r, j, b] * s if coupling else 0.0
                    xzz = xz[r, j, b] * s
                    xpp = xP[r, j, b] * s if dephasing else 0j
                    xoo = xo[r, j, b] * s if pump else 0j
                    res = atomic_noise_terms(rm[j, b], rp[j, b], rz[j, b], om_c[j], omd_c[j], xj, xjd,
                                             xzz, xpp, xoo, gamma_p, W12, gpar, sigma_ss, q, model, sym,
                                             coupling, dephasing, pump, zchan)
                    dnm[j, b] = res[0]
                    dnp[j, b] = res[1]
                    dnz[j, b] = res[2]
                    for t in range(3):
                        g = res[3 + t]
                        old = prev[j, b, t]
                        if (g.real * old.real + g.imag * old.imag) < 0.0:
                            status[2] += 1
                        prev[j, b, t] = g

        h = dtau_full
        _drift(om_c, omd_c, det, rm, rp, rz, K[0, 0], K[0, 1], K[0, 2], gperp, gpar, target, nz_act)
        if scheme == SCHEME_EULER:
            for j in range(nz_act):
                for b in range(nb):
                    rm[j, b] += h * K[0, 0, j, b]
                    rp[j, b] += h * K[0, 1, j, b]
                    rz[j, b] += h * K[0, 2, j, b]
        elif scheme == SCHEME_MIDPOINT:
            # one fixed-point pass of the implicit midpoint rule
            for j in range(nz_act):
                for b in range(nb):
                    tm[j, b] = rm[j, b] + 0.5 * h * K[0, 0, j, b]
                    tp[j, b] = rp[j, b] + 0.5 * h * K[0, 1, j, b]
                    tz[j, b] = rz[j, b] + 0.5 * h * K[0, 2, j, b]
            _centres(om_mid[i], omd_mid[i], tm, tp, w, gdz, att_h, att, fn, fnoise, om_c, omd_c, nz_act)
            _drift(om_c, omd_c, det, tm, tp, tz, K[1, 0], K[1, 1], K[1, 2], gperp, gpar, target, nz_act)
            for j in range(nz_act):
                for b in range(nb):
                    tm[j, b] = rm[j, b] + 0.5 * h * K[1, 0, j, b]
                    tp[j, b] = rp[j, b] + 0.5 * h * K[1, 1, j, b]
                    tz[j, b] = rz[j, b] + 0.5 * h * K[1, 2, j, b]
            _centres(om_mid[i], omd_mid[i], tm, tp, w, gdz, att_h, att, fn, fnoise, om_c, omd_c, nz_act)
            _drift(om_c, omd_c, det, tm, tp, tz, K[2, 0], K[2, 1], K[2, 2], gperp, gpar, target, nz_act)
            for j in range(nz_act):
                for b in range(nb):
                    rm[j, b] += h * K[2, 0, j, b]
                    rp[j, b] += h * K[2, 1, j, b]
                    rz[j, b] += h * K[2, 2, j, b]
        else:
            for st in range(1, 4):
                hs = 0.5 * h if st < 3 else h
                for j in range(nz_act):
                    for b in range(nb):
                        tm[j, b] = rm[j, b] + hs * K[st - 1, 0, j, b]
                        tp[j, b] = rp[j, b] + hs * K[st - 1, 1, j, b]
                        tz[j, b] = rz[j, b] + hs * K[st - 1, 2, j, b]
                if st < 3:
                    _centres(om_mid[i], omd_mid[i], tm, tp, w, gdz, att_h, att, fn, fnoise, om_c, omd_c, nz_act)
                else:
                    _centres(om_in[i + 1], omd_in[i + 1], tm, tp, w, gdz, att_h, att, fn, fnoise, om_c, omd_c, nz_act)
                _drift(om_c, omd_c, det, tm, tp, tz, K[st, 0], K[st, 1], K[st, 2], gperp, gpar, target, nz_act)
            for j in range(nz_act):
                for b in range(nb):
                    rm[j, b] += h / 6.0 * (K[0, 0, j, b] + 2.0 * K[1, 0, j, b] + 2.0 * K[2, 0, j, b] + K[3, 0, j, b])
                    rp[j, b] += h / 6.0 * (K[0, 1, j, b] + 2.0 * K[1, 1, j, b] + 2.0 * K[2, 1, j, b] + K[3, 1, j, b])
                    rz[j, b] += h / 6.0 * (K[0, 2, j, b] + 2.0 * K[1, 2, j, b] + 2.0 * K[2, 2, j, b] + K[3, 2, j, b])

        if noise_on:
            for j in range(nz_act):
                for b in range(nb):
                    rm[j, b] += dnm[j, b]
                    rp[j, b] += dnp[j, b]
                    rz[j, b] += dnz[j, b]

        # divergence monitor: freeze everything from the first bad cell on
        for j in range(nz_act):
            bad = False
            for b in range(nb):
                v1 = rm[j, b]
                v2 = rp[j, b]
                v3 = rz[j, b]
                if not (abs(v1) < threshold and abs(v2) < threshold and abs(v3) < threshold):
                    bad = True
                    break
            if bad:
                status[0] = j
                if status[1] < 0:
                    status[1] = i
                break


@njit(cache=True)
def sweep_cell(om, omd, om_mid, omd_mid, det, rm0, rp0, rz0, rates, scheme, noise_flags, xJ, xJd, xz, xP, xo,
               out_m, out_p, out_z):
    """Integrate one cell's bands over the tau grid in a prescribed field.

    Records the full history in out_* (n_bands x n_tau).  Noise draws are
    (n_tau, n_bands) arrays already scaled by sqrt(dtau/N).
    """
    n = om.shape[0]
    nb = det.shape[0]
    gperp = rates[0]
    gpar = rates[1]
    target = rates[2]
    h = rates[7]
    noise_on = noise_flags[7] != 0
    rm = np.empty((1, nb), np.complex128)
    rp = np.empty((1, nb), np.complex128)
    rz = np.empty((1, nb), np.complex128)
    for b in range(nb):
        rm[0, b] = rm0[b]
        rp[0, b] = rp0[b]
        rz[0, b] = rz0[b]
    K = np.empty((4, 3, 1, nb), np.complex128)
    tm = np.empty((1, nb), np.complex128)
    tp = np.empty((1, nb), np.complex128)
    tz = np.empty((1, nb), np.complex128)
    dn = np.zeros((3, nb), np.complex128)
    a = np.empty(1, np.complex128)
    bd = np.empty(1, np.complex128)
    for i in range(n):
        for b in range(nb):
            out_m[b, i] = rm[0, b]
            out_p[b, i] = rp[0, b]
            out_z[b, i] = rz[0, b]
        if i == n - 1:
            break
        if noise_on:
            for b in range(nb):
                res = atomic_noise_terms(rm[0, b], rp[0, b], rz[0, b], om[i], omd[i], xJ[i, b], xJd[i, b],
                                         xz[i, b], xP[i, b], xo[i, b], rates[3], rates[4], gpar, rates[5],
                                         rates[6], noise_flags[1], noise_flags[2] != 0, noise_flags[3] != 0,
                                         noise_flags[4] != 0, noise_flags[5] != 0, noise_flags[6] != 0)
                dn[0, b] = res[0]
                dn[1, b] = res[1]
                dn[2, b] = res[2]
        a[0] = om[i]
        bd[0] = omd[i]
        _drift(a, bd, det, rm, rp, rz, K[0, 0], K[0, 1], K[0, 2], gperp, gpar, target, 1)
        if scheme == SCHEME_EULER:
            for b in range(nb):
                rm[0, b] += h * K[0, 0, 0, b]
                rp[0, b] += h * K[0, 1, 0, b]
                rz[0, b] += h * K[0, 2, 0, b]
        elif scheme == SCHEME_MIDPOINT:
            a[0] = om_mid[i]
            bd[0] = omd_mid[i]
            for it in range(2):
                for b in range(nb):
                    tm[0, b] = rm[0, b] + 0.5 * h * K[it, 0, 0, b]
                    tp[0, b] = rp[0, b] + 0.5 * h * K[it, 1, 0, b]
                    tz[0, b] = rz[0, b] + 0.5 * h * K[it, 2, 0, b]
                _drift(a, bd, det, tm, tp, tz, K[it + 1, 0], K[it + 1, 1], K[it + 1, 2], gperp, gpar, target, 1)
            for b in range(nb):
                rm[0, b] += h * K[2, 0, 0, b]
                rp[0, b] += h * K[2, 1, 0, b]
                rz[0, b] += h * K[2, 2, 0, b]
        else:
            for st in range(1, 4):
                hs = 0.5 * h if st < 3 else h
                if st < 3:
                    a[0] = om_mid[i]
                    bd[0] = omd_mid[i]
                else:
                    a[0] = om[i + 1]
                    bd[0] = omd[i + 1]
                for b in range(nb):
                    tm[0, b] = rm[0, b] + hs * K[st - 1, 0, 0, b]
                    tp[0, b] = rp[0, b] + hs * K[st - 1, 1, 0, b]
                    tz[0, b] = rz[0, b] + hs * K[st - 1, 2, 0, b]
                _drift(a, bd, det, tm, tp, tz, K[st, 0], K[st, 1], K[st, 2], gperp, gpar, target, 1)
            for b in range(nb):
                rm[0, b] += h / 6.0 * (K[0, 0, 0, b] + 2.0 * K[1, 0, 0, b] + 2.0 * K[2, 0, 0, b] + K[3, 0, 0, b])
                rp[0, b] += h / 6.0 * (K[0, 1, 0, b] + 2.0 * K[1, 1, 0, b] + 2.0 * K[2, 1, 0, b] + K[3, 1, 0, b])
                rz[0, b] += h / 6.0 * (K[0, 2, 0, b] + 2.0 * K[1, 2, 0, b] + 2.0 * K[2, 2, 0, b] + K[3, 2, 0, b])
        if noise_on:
            for b in range(nb):
                rm[0, b] += dn[0, b]
                rp[0, b] += dn[1, b]
                rz[0, b] += dn[2, b]
