"""Numba kernels: bit-exact fixed-point decoding, float BP, and frame loops.

All randomness inside kernels derives from splitmix64, a counter-based
generator keyed per (seed, frame, salt).  Results are therefore a pure
function of the seed and frame index, independent of batch sizes, thread
count, or scheduling.  The pure-Python mirrors in :mod:`qldpc.decoder`
reproduce these streams bit for bit.
"""

import numpy as np
from numba import njit, prange

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_S63 = np.uint64(63)
_ONE64 = np.uint64(1)
_U53 = 2.0 ** -53
TWO_PI = 2.0 * np.pi

SALT_NOISE = 0x5EEDB0B
SALT_TIE = 0x7EA5E1E
SALT_INFO = 0x1BF0B17


@njit(cache=True)
def _sm64(state):
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return state, z ^ (z >> _S31)


@njit(cache=True)
def stream_key(seed, frame, salt):
    s = np.uint64(seed) ^ (np.uint64(salt) * _GOLDEN)
    s, z = _sm64(s)
    s = z ^ np.uint64(frame)
    s, z = _sm64(s)
    return z


@njit(cache=True)
def decode_fixed_frame(ch_msgs, check_ptr, check_vars, var_ptr, var_edges,
                       phi_ch, phi_c, r_shift, m_out, max_iters,
                       tie_random, tie_key, mirror, bits_out, syn_out):
    """Flooding fixed-point decoder for one frame.

    ``phi_ch``/``phi_c`` are dense per-design translation tables indexed by
    message value + levels; designs clamp to the last entry beyond the list.
    Returns (success, iterations_used).
    """
    n_vars = ch_msgs.size
    n_checks = check_ptr.size - 1
    n_edges = check_vars.size
    n_designs = phi_ch.shape[0]
    m_ch = (phi_ch.shape[1] - 1) // 2
    m_msg = (phi_c.shape[1] - 1) // 2
    c2v = np.zeros(n_edges, dtype=np.int64)
    v2c = np.zeros(n_edges, dtype=np.int64)
    state = tie_key
    success = False
    iters = 0
    for it in range(max_iters):
        k = it if it < n_designs else n_designs - 1
        r = r_shift[k]
        for v in range(n_vars):
            s = phi_ch[k, ch_msgs[v] + m_ch]
            lo = var_ptr[v]
            hi = var_ptr[v + 1]
            if it > 0:
                for idx in range(lo, hi):
                    s += phi_c[k, c2v[var_edges[idx]] + m_msg]
                for idx in range(lo, hi):
                    e = var_edges[idx]
                    y = s - phi_c[k, c2v[e] + m_msg]
                    if y == 0:
                        t = 1
                        if tie_random:
                            state, z = _sm64(state)
                            up = (z >> _S63) & _ONE64
                            if mirror:
                                up = _ONE64 - up
                            t = 1 if up else -1
                    else:
                        a = y if y > 0 else -y
                        mag = (a >> r) + 1
                        if mag > m_out:
                            mag = m_out
                        t = mag if y > 0 else -mag
                    v2c[e] = t
            else:
                # First iteration: single-input compression, broadcast to all edges.
                if s == 0:
                    t = 1
                    if tie_random:
                        state, z = _sm64(state)
                        up = (z >> _S63) & _ONE64
                        if mirror:
                            up = _ONE64 - up
                        t = 1 if up else -1
                else:
                    a = s if s > 0 else -s
                    mag = (a >> r) + 1
                    if mag > m_out:
                        mag = m_out
                    t = mag if s > 0 else -mag
                for idx in range(lo, hi):
                    v2c[var_edges[idx]] = t
            if s > 0:
                bits_out[v] = 0
            elif s < 0:
                bits_out[v] = 1
            else:
                b = np.uint8(0)
                if tie_random:
                    state, z = _sm64(state)
                    b = np.uint8((z >> _S63) & _ONE64)
                    if mirror:
                        b = np.uint8(1) - b
                bits_out[v] = b
        weight = 0
        for c in range(n_checks):
            par = np.uint8(0)
            for idx in range(check_ptr[c], check_ptr[c + 1]):
                par ^= bits_out[check_vars[idx]]
            weight += par
        syn_out[it] = weight
        iters = it + 1
        if weight == 0:
            success = True
            break
        if it == max_iters - 1:
            break
        for c in range(n_checks):
            lo = check_ptr[c]
            hi = check_ptr[c + 1]
            min1 = np.int64(1 << 62)
            min2 = np.int64(1 << 62)
            arg = -1
            sprod = 1
            for idx in range(lo, hi):
                t = v2c[idx]
                if t < 0:
                    sprod = -sprod
                    a = -t
                else:
                    a = t
                if a < min1:
                    min2 = min1
                    min1 = a
                    arg = idx
                elif a < min2:
                    min2 = a
            for idx in range(lo, hi):
                a = min2 if idx == arg else min1
                own_sign = 1 if v2c[idx] > 0 else -1
                c2v[idx] = sprod * own_sign * a
    return success, iters


@njit(cache=True)
def _boxplus(a, b, use_min):
    if (a > 0.0) == (b > 0.0):
        sgn = 1.0
    else:
        sgn = -1.0
    aa = a if a > 0.0 else -a
    ab = b if b > 0.0 else -b
    m = aa if aa < ab else ab
    out = sgn * m
    if not use_min:
        s = a + b
        d = a - b
        out += np.log1p(np.exp(-(s if s > 0.0 else -s)))
        out -= np.log1p(np.exp(-(d if d > 0.0 else -d)))
    return out


@njit(cache=True)
def decode_bp_frame(llrs, check_ptr, check_vars, var_ptr, var_edges,
                    max_iters, use_min, bits_out, syn_out):
    """Flooding sum-product (or min-sum) decoder for one frame."""
    n_vars = llrs.size
    n_checks = check_ptr.size - 1
    n_edges = check_vars.size
    c2v = np.zeros(n_edges, dtype=np.float64)
    v2c = np.zeros(n_edges, dtype=np.float64)
    max_dc = 0
    for c in range(n_checks):
        deg = check_ptr[c + 1] - check_ptr[c]
        if deg > max_dc:
            max_dc = deg
    fwd = np.empty(max_dc, dtype=np.float64)
    bwd = np.empty(max_dc, dtype=np.float64)
    success = False
    iters = 0
    for it in range(max_iters):
        for v in range(n_vars):
            s = llrs[v]
            lo = var_ptr[v]
            hi = var_ptr[v + 1]
            if it > 0:
                for idx in range(lo, hi):
                    s += c2v[var_edges[idx]]
            bits_out[v] = 0 if s >= 0.0 else 1
            for idx in range(lo, hi):
                e = var_edges[idx]
                y = s
                if it > 0:
                    y -= c2v[e]
                v2c[e] = y
        weight = 0
        for c in range(n_checks):
            par = np.uint8(0)
            for idx in range(check_ptr[c], check_ptr[c + 1]):
                par ^= bits_out[check_vars[idx]]
            weight += par
        syn_out[it] = weight
        iters = it + 1
        if weight == 0:
            success = True
            break
        if it == max_iters - 1:
            break
        for c in range(n_checks):
            lo = check_ptr[c]
            hi = check_ptr[c + 1]
            deg = hi - lo
            if deg == 1:
                # Degree-1 check pins its variable to zero.
                c2v[lo] = 1e300
                continue
            fwd[0] = v2c[lo]
            for i in range(1, deg):
                fwd[i] = _boxplus(fwd[i - 1], v2c[lo + i], use_min)
            bwd[deg - 1] = v2c[lo + deg - 1]
            for i in range(deg - 2, -1, -1):
                bwd[i] = _boxplus(bwd[i + 1], v2c[lo + i], use_min)
            for i in range(deg):
                if i == 0:
                    c2v[lo] = bwd[1]
                elif i == deg - 1:
                    c2v[lo + i] = fwd[deg - 2]
                else:
                    c2v[lo + i] = _boxplus(fwd[i - 1], bwd[i + 1], use_min)
    return success, iters


@njit(cache=True)
def _gauss_pair(state):
    state, z = _sm64(state)
    u1 = (np.float64(z >> _S11) + 1.0) * _U53
    state, z = _sm64(state)
    u2 = np.float64(z >> _S11) * _U53
    rad = np.sqrt(-2.0 * np.log(u1))
    return state, rad * np.cos(TWO_PI * u2), rad * np.sin(TWO_PI * u2)


@njit(cache=True)
def channel_llrs(frame_key, codeword, sigma, llr_scale, out):
    """BPSK + AWGN + LLR for one frame; bit 0 maps to +1."""
    n = codeword.size
    state = frame_key
    i = 0
    while i < n:
        state, g0, g1 = _gauss_pair(state)
        x = 1.0 - 2.0 * codeword[i]
        out[i] = llr_scale * (x + sigma * g0)
        i += 1
        if i < n:
            x = 1.0 - 2.0 * codeword[i]
            out[i] = llr_scale * (x + sigma * g1)
            i += 1


@njit(cache=True)
def quantize_llrs(llrs, thresholds, out):
    """Sign plus magnitude-threshold channel quantizer (thresholds ascending)."""
    for i in range(llrs.size):
        a = llrs[i] if llrs[i] >= 0.0 else -llrs[i]
        lvl = 1
        for k in range(thresholds.size):
            if a >= thresholds[k]:
                lvl += 1
            else:
                break
        out[i] = lvl if llrs[i] >= 0.0 else -lvl


@njit(cache=True, parallel=True)
def run_frames_fixed(frame_lo, n_frames, seed, sigma, llr_scale, thresholds,
                     codewords, all_zero, count_mask,
                     check_ptr, check_vars, var_ptr, var_edges,
                     phi_ch, phi_c, r_shift, m_out, max_iters, tie_random,
                     err_out, succ_out, iter_out):
    """Generate, decode, and score a contiguous block of frames."""
    n_vars = var_ptr.size - 1
    for fi in prange(n_frames):
        frame = frame_lo + fi
        cw = codewords[0] if all_zero else codewords[fi]
        llrs = np.empty(n_vars, dtype=np.float64)
        channel_llrs(stream_key(seed, frame, SALT_NOISE), cw, sigma,
                     llr_scale, llrs)
        msgs = np.empty(n_vars, dtype=np.int64)
        quantize_llrs(llrs, thresholds, msgs)
        bits = np.empty(n_vars, dtype=np.uint8)
        syn = np.empty(max_iters, dtype=np.int64)
        ok, iters = decode_fixed_frame(
            msgs, check_ptr, check_vars, var_ptr, var_edges,
            phi_ch, phi_c, r_shift, m_out, max_iters, tie_random,
            stream_key(seed, frame, SALT_TIE), False, bits, syn)
        errs = 0
        for v in range(n_vars):
            if count_mask[v] and bits[v] != cw[v]:
                errs += 1
        err_out[fi] = errs
        succ_out[fi] = np.uint8(1) if ok else np.uint8(0)
        iter_out[fi] = iters


@njit(cache=True, parallel=True)
def run_frames_bp(frame_lo, n_frames, seed, sigma, llr_scale,
                  codewords, all_zero, count_mask,
                  check_ptr, check_vars, var_ptr, var_edges,
                  max_iters, use_min, err_out, succ_out, iter_out):
    n_vars = var_ptr.size - 1
    for fi in prange(n_frames):
        frame = frame_lo + fi
        cw = codewords[0] if all_zero else codewords[fi]
        llrs = np.empty(n_vars, dtype=np.float64)
        channel_llrs(stream_key(seed, frame, SALT_NOISE), cw, sigma,
                     llr_scale, llrs)
        bits = np.empty(n_vars, dtype=np.uint8)
        syn = np.empty(max_iters, dtype=np.int64)
        ok, iters = decode_bp_frame(
            llrs, check_ptr, check_vars, var_ptr, var_edges,
            max_iters, use_min, bits, syn)
        errs = 0
        for v in range(n_vars):
            if count_mask[v] and bits[v] != cw[v]:
                errs += 1
        err_out[fi] = errs
        succ_out[fi] = np.uint8(1) if ok else np.uint8(0)
        iter_out[fi] = iters


@njit(cache=True)
def edge_histogram_frames(frame_lo, n_frames, seed, sigma, llr_scale,
                          thresholds, codewords, all_zero,
                          check_ptr, check_vars, var_ptr, var_edges,
                          phi_ch, phi_c, r_shift, m_out, target_iter,
                          tie_random, hist_out):
    """Histogram of (code bit, variable-node output) at one iteration.

    Runs the decoder without early termination through ``target_iter``
    variable-node passes and accumulates counts of the extrinsic messages of
    that pass into ``hist_out`` of shape (2, 2 * m_out + 1).
    """
    n_vars = var_ptr.size - 1
    n_checks = check_ptr.size - 1
    n_edges = check_vars.size
    n_designs = phi_ch.shape[0]
    m_ch = (phi_ch.shape[1] - 1) // 2
    m_msg = (phi_c.shape[1] - 1) // 2
    for fi in range(n_frames):
        frame = frame_lo + fi
        cw = codewords[0] if all_zero else codewords[fi]
        llrs = np.empty(n_vars, dtype=np.float64)
        channel_llrs(stream_key(seed, frame, SALT_NOISE), cw, sigma,
                     llr_scale, llrs)
        msgs = np.empty(n_vars, dtype=np.int64)
        quantize_llrs(llrs, thresholds, msgs)
        state = stream_key(seed, frame, SALT_TIE)
        c2v = np.zeros(n_edges, dtype=np.int64)
        v2c = np.zeros(n_edges, dtype=np.int64)
        for it in range(target_iter):
            k = it if it < n_designs else n_designs - 1
            r = r_shift[k]
            for v in range(n_vars):
                s = phi_ch[k, msgs[v] + m_ch]
                lo = var_ptr[v]
                hi = var_ptr[v + 1]
                if it > 0:
                    for idx in range(lo, hi):
                        s += phi_c[k, c2v[var_edges[idx]] + m_msg]
                    for idx in range(lo, hi):
                        e = var_edges[idx]
                        y = s - phi_c[k, c2v[e] + m_msg]
                        if y == 0:
                            t = 1
                            if tie_random:
                                state, z = _sm64(state)
                                t = 1 if (z >> _S63) & _ONE64 else -1
                        else:
                            a = y if y > 0 else -y
                            mag = (a >> r) + 1
                            if mag > m_out:
                                mag = m_out
                            t = mag if y > 0 else -mag
                        v2c[e] = t
                else:
                    if s == 0:
                        t = 1
                        if tie_random:
                            state, z = _sm64(state)
                            t = 1 if (z >> _S63) & _ONE64 else -1
                    else:
                        a = s if s > 0 else -s
                        mag = (a >> r) + 1
                        if mag > m_out:
                            mag = m_out
                        t = mag if s > 0 else -mag
                    for idx in range(lo, hi):
                        v2c[var_edges[idx]] = t
            if it == target_iter - 1:
                break
            for c in range(n_checks):
                lo = check_ptr[c]
                hi = check_ptr[c + 1]
                min1 = np.int64(1 << 62)
                min2 = np.int64(1 << 62)
                arg = -1
                sprod = 1
                for idx in range(lo, hi):
                    t = v2c[idx]
                    a = -t if t < 0 else t
                    if t < 0:
                        sprod = -sprod
                    if a < min1:
                        min2 = min1
                        min1 = a
                        arg = idx
                    elif a < min2:
                        min2 = a
                for idx in range(lo, hi):
                    a = min2 if idx == arg else min1
                    own_sign = 1 if v2c[idx] > 0 else -1
                    c2v[idx] = sprod * own_sign * a
        for v in range(n_vars):
            for idx in range(var_ptr[v], var_ptr[v + 1]):
                t = v2c[var_edges[idx]]
                hist_out[cw[v], t + m_out] += 1
