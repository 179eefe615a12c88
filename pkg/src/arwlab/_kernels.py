"""Compiled hot loops for the count-chain engines and the direct simulator.

Every kernel owns a private xoshiro256++ stream seeded from a single
64-bit value via splitmix64, so a (seed -> trajectory) map is fully
deterministic and thread-safe (kernels hold no global state and release
the GIL).  The step updates are branchless where the branch would be
taken with coin-flip probability; this roughly halves the per-step cost.
"""

from __future__ import annotations

import numpy as np
from numba import float64, int64, njit, uint64

_GOLDEN = uint64(0x9E3779B97F4A7C15)
_INV53 = 1.1102230246251565e-16  # 2**-53


@njit(cache=True, nogil=True, inline="always")
def _sm64(z):
    z = (z ^ (z >> uint64(30))) * uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> uint64(27))) * uint64(0x94D049BB133111EB)
    return z ^ (z >> uint64(31))


@njit(cache=True, nogil=True, inline="always")
def _init(seed):
    z = uint64(seed)
    return (
        _sm64(z + _GOLDEN),
        _sm64(z + uint64(2) * _GOLDEN),
        _sm64(z + uint64(3) * _GOLDEN),
        _sm64(z + uint64(4) * _GOLDEN),
    )


@njit(cache=True, nogil=True, inline="always")
def _nxt(s0, s1, s2, s3):
    x = s0 + s3
    r = ((x << uint64(23)) | (x >> uint64(41))) + s0
    t = s1 << uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = (s3 << uint64(45)) | (s3 >> uint64(19))
    return r, s0, s1, s2, s3


@njit(cache=True, nogil=True, inline="always")
def _u01(s0, s1, s2, s3):
    r, s0, s1, s2, s3 = _nxt(s0, s1, s2, s3)
    return float64(r >> uint64(11)) * _INV53, s0, s1, s2, s3


@njit(cache=True, nogil=True, inline="always")
def _site(u, n):
    # rescaled uniforms can round to 1.0, so clamp the index
    i = int64(u * n)
    return n - 1 if i >= n else i


@njit(cache=True, nogil=True)
def uniform_block(count, seed):
    """Raw uniforms from one kernel stream (for RNG sanity tests)."""
    s0, s1, s2, s3 = _init(seed)
    out = np.empty(count)
    for i in range(count):
        out[i], s0, s1, s2, s3 = _u01(s0, s1, s2, s3)
    return out


@njit(cache=True, nogil=True, inline="always")
def _binomial(n, p, s0, s1, s2, s3):
    y = 0
    for _ in range(n):
        u, s0, s1, s2, s3 = _u01(s0, s1, s2, s3)
        y += int64(u < p)
    return y, s0, s1, s2, s3


@njit(cache=True, nogil=True)
def bup_hit(n, p, q, seed):
    """Run the count chain from Binomial(n, p) until y = n - z.

    Returns (y, z, steps).  One uniform per step; the non-lazy remainder
    is rescaled into the down/up/stay split.
    """
    s0, s1, s2, s3 = _init(seed)
    y, s0, s1, s2, s3 = _binomial(n, p, s0, s1, s2, s3)
    z = 0
    steps = 0
    if y == n:
        return y, z, steps
    inv_n = 1.0 / n
    inv1q = 1.0 / (1.0 - q) if q < 1.0 else 0.0
    up_c = p * inv_n
    dn_c = (1.0 - p) * inv_n
    while True:
        u, s0, s1, s2, s3 = _u01(s0, s1, s2, s3)
        steps += 1
        if u < q:
            z += 1
            if y == n - z:
                return y, z, steps
        else:
            u2 = (u - q) * inv1q
            dn = y * dn_c
            up_hi = dn + (n - y) * up_c
            y += int64(u2 < up_hi) - (int64(u2 < dn) << 1)
            if y == n - z:
                return y, z, steps


@njit(cache=True, nogil=True)
def bup_hit_levels(n, p, q, seed, thresholds, stop_at_hit):
    """Count chain recording the running max of y between boundary levels.

    thresholds: decreasing int64 levels b; interval i spans the steps from
    the first time n - z <= thresholds[i-1] (time 0 for i = 0) up to, and
    excluding, the first time n - z <= thresholds[i].  maxima[i] carries
    the max y over interval i, -1 when the interval is empty.  The chain
    does not stop at the first y = n - z unless stop_at_hit; the hit is
    recorded either way.  Returns (maxima, hit_step, hit_y, cur_end).
    """
    s0, s1, s2, s3 = _init(seed)
    y, s0, s1, s2, s3 = _binomial(n, p, s0, s1, s2, s3)
    z = 0
    steps = 0
    nlev = thresholds.size
    maxima = np.full(nlev, -1, np.int64)
    cur = 0
    while cur < nlev and n - z <= thresholds[cur]:
        cur += 1
    hit_step = int64(-1)
    hit_y = int64(-1)
    if cur < nlev and y > maxima[cur]:
        maxima[cur] = y
    if y == n:
        hit_step = 0
        hit_y = y
        if stop_at_hit:
            return maxima, hit_step, hit_y, cur
    inv_n = 1.0 / n
    inv1q = 1.0 / (1.0 - q) if q < 1.0 else 0.0
    up_c = p * inv_n
    dn_c = (1.0 - p) * inv_n
    while cur < nlev:
        u, s0, s1, s2, s3 = _u01(s0, s1, s2, s3)
        steps += 1
        if u < q:
            z += 1
            while cur < nlev and n - z <= thresholds[cur]:
                cur += 1
            if cur == nlev:
                if hit_step < 0 and y == n - z:
                    hit_step = steps
                    hit_y = y
                break
        else:
            u2 = (u - q) * inv1q
            dn = y * dn_c
            up_hi = dn + (n - y) * up_c
            y += int64(u2 < up_hi) - (int64(u2 < dn) << 1)
        if y > maxima[cur]:
            maxima[cur] = y
        if hit_step < 0 and y == n - z:
            hit_step = steps
            hit_y = y
            if stop_at_hit:
                break
    return maxima, hit_step, hit_y, cur


@njit(cache=True, nogil=True)
def bup_fixed_energy(n, p, m, cap, seed):
    """Seed m particles uniformly, topple once per occupied site, then run
    the no-sink count chain until y = m or the step cap.

    Returns (y0, occupied, steps, hit).
    """
    s0, s1, s2, s3 = _init(seed)
    visited = np.zeros(n, np.uint8)
    occupied = 0
    for _ in range(m):
        u, s0, s1, s2, s3 = _u01(s0, s1, s2, s3)
        i = _site(u, n)
        if visited[i] == 0:
            visited[i] = 1
            occupied += 1
    y, s0, s1, s2, s3 = _binomial(occupied, p, s0, s1, s2, s3)
    y0 = y
    steps = 0
    if y == m:
        return y0, occupied, steps, np.uint8(1)
    inv_n = 1.0 / n
    up_c = p * inv_n
    dn_c = (1.0 - p) * inv_n
    while steps < cap:
        u, s0, s1, s2, s3 = _u01(s0, s1, s2, s3)
        steps += 1
        dn = y * dn_c
        up_hi = dn + (n - y) * up_c
        y += int64(u < up_hi) - (int64(u < dn) << 1)
        if y == m:
            return y0, occupied, steps, np.uint8(1)
    return y0, occupied, steps, np.uint8(0)


@njit(cache=True, nogil=True)
def bup_continuous_count(n, p, q_prime, stationary_start, y_start, horizon,
                         threshold, seed):
    """Event-driven count chain: coordinate updates at total rate n plus
    independent sink ticks at rate q_prime.

    Occupation time above the threshold is accumulated exactly as
    (holding time) x (indicator).  Returns
    (max_y, occupation, entries, y_final, ticks).
    """
    s0, s1, s2, s3 = _init(seed)
    if stationary_start:
        y, s0, s1, s2, s3 = _binomial(n, p, s0, s1, s2, s3)
    else:
        y = y_start
    rate = n + q_prime
    p_sink = q_prime / rate
    inv_n = 1.0 / n
    inv1s = 1.0 / (1.0 - p_sink) if p_sink < 1.0 else 0.0
    up_c = p * inv_n
    dn_c = (1.0 - p) * inv_n
    t = 0.0
    occupation = 0.0
    ticks = 0
    max_y = y
    above = y >= threshold
    entries = int64(1) if above else int64(0)
    while True:
        u, s0, s1, s2, s3 = _u01(s0, s1, s2, s3)
        dt = -np.log1p(-u) / rate
        if t + dt >= horizon:
            if above:
                occupation += horizon - t
            return max_y, occupation, entries, y, ticks
        if above:
            occupation += dt
        t += dt
        u, s0, s1, s2, s3 = _u01(s0, s1, s2, s3)
        if u < p_sink:
            ticks += 1
        else:
            u2 = (u - p_sink) * inv1s
            dn = y * dn_c
            up_hi = dn + (n - y) * up_c
            y += int64(u2 < up_hi) - (int64(u2 < dn) << 1)
            if y > max_y:
                max_y = y
            was_above = above
            above = y >= threshold
            if above and not was_above:
                entries += 1


@njit(cache=True, nogil=True)
def bup_continuous_full(n, p, q_prime, stationary_start, y_start, horizon,
                        threshold, seed):
    """Full-state twin of bup_continuous_count tracking coordinate values.

    Also reports the first regeneration time (every coordinate updated at
    least once; -1.0 if not reached) and the number of distinct updated
    coordinates.  Returns
    (max_y, occupation, entries, y_final, ticks, regen_time, distinct).
    """
    s0, s1, s2, s3 = _init(seed)
    values = np.empty(n, np.uint8)
    y = 0
    if stationary_start:
        for i in range(n):
            u, s0, s1, s2, s3 = _u01(s0, s1, s2, s3)
            values[i] = np.uint8(1) if u < p else np.uint8(0)
            y += values[i]
    else:
        for i in range(n):
            values[i] = np.uint8(1) if i < y_start else np.uint8(0)
        y = y_start
    updated = np.zeros(n, np.uint8)
    distinct = 0
    regen = -1.0
    rate = n + q_prime
    p_sink = q_prime / rate
    inv1s = 1.0 / (1.0 - p_sink) if p_sink < 1.0 else 0.0
    t = 0.0
    occupation = 0.0
    ticks = 0
    max_y = y
    above = y >= threshold
    entries = int64(1) if above else int64(0)
    while True:
        u, s0, s1, s2, s3 = _u01(s0, s1, s2, s3)
        dt = -np.log1p(-u) / rate
        if t + dt >= horizon:
            if above:
                occupation += horizon - t
            return max_y, occupation, entries, y, ticks, regen, distinct
        if above:
            occupation += dt
        t += dt
        u, s0, s1, s2, s3 = _u01(s0, s1, s2, s3)
        if u < p_sink:
            ticks += 1
        else:
            i = _site((u - p_sink) * inv1s, n)
            u, s0, s1, s2, s3 = _u01(s0, s1, s2, s3)
            new = np.uint8(1) if u < p else np.uint8(0)
            y += int64(new) - int64(values[i])
            values[i] = new
            if updated[i] == 0:
                updated[i] = 1
                distinct += 1
                if distinct == n:
                    regen = t
            if y > max_y:
                max_y = y
            was_above = above
            above = y >= threshold
            if above and not was_above:
                entries += 1


@njit(cache=True, nogil=True)
def bup_increment_sums(n, p, q, nsteps, seed):
    """Sufficient statistics for regressing one-step increments on y.

    Runs nsteps from a stationary start; returns
    (sum_y, sum_yy, sum_d, sum_dd, sum_yd, nsteps) over (y, delta) pairs.
    """
    s0, s1, s2, s3 = _init(seed)
    y, s0, s1, s2, s3 = _binomial(n, p, s0, s1, s2, s3)
    inv_n = 1.0 / n
    inv1q = 1.0 / (1.0 - q) if q < 1.0 else 0.0
    up_c = p * inv_n
    dn_c = (1.0 - p) * inv_n
    sy = 0.0
    syy = 0.0
    sd = 0.0
    sdd = 0.0
    syd = 0.0
    for _ in range(nsteps):
        u, s0, s1, s2, s3 = _u01(s0, s1, s2, s3)
        d = int64(0)
        if u >= q:
            u2 = (u - q) * inv1q
            dn = y * dn_c
            up_hi = dn + (n - y) * up_c
            d = int64(u2 < up_hi) - (int64(u2 < dn) << 1)
        fy = float64(y)
        fd = float64(d)
        sy += fy
        syy += fy * fy
        sd += fd
        sdd += fd * fd
        syd += fy * fd
        y += d
    return sy, syy, sd, sdd, syd, nsteps


@njit(cache=True, nogil=True)
def bup_hit_gap_check(n, p, q, seed):
    """run-to-hitting variant asserting y - (n - z) stays < 0 before the
    hit; returns (ok, y, z, steps)."""
    s0, s1, s2, s3 = _init(seed)
    y, s0, s1, s2, s3 = _binomial(n, p, s0, s1, s2, s3)
    z = 0
    steps = 0
    ok = np.uint8(1)
    if y == n:
        return ok, y, z, steps
    inv_n = 1.0 / n
    inv1q = 1.0 / (1.0 - q) if q < 1.0 else 0.0
    up_c = p * inv_n
    dn_c = (1.0 - p) * inv_n
    while True:
        if y - (n - z) >= 0:
            ok = np.uint8(0)
        u, s0, s1, s2, s3 = _u01(s0, s1, s2, s3)
        steps += 1
        if u < q:
            z += 1
        else:
            u2 = (u - q) * inv1q
            dn = y * dn_c
            up_hi = dn + (n - y) * up_c
            y += int64(u2 < up_hi) - (int64(u2 < dn) << 1)
        if y == n - z:
            return ok, y, z, steps


@njit(cache=True, nogil=True)
def arw_stabilize_all_ones(n, p, q, seed, cap):
    """Direct simulation: stabilize one active particle per site.

    FIFO toppling; at a multiply-occupied site sleep instructions are
    consumed no-ops, so each dequeue either puts a lone particle to sleep
    or moves exactly one particle (to the sink with probability q, else
    to a uniform site, self-loops included).  Returns
    (sleeping, jumps, instructions, sink, capped).
    """
    s0, s1, s2, s3 = _init(seed)
    counts = np.ones(n, np.int64)
    asleep = np.zeros(n, np.uint8)
    in_queue = np.ones(n, np.uint8)
    queue = np.empty(n, np.int64)
    for i in range(n):
        queue[i] = i
    head = 0
    qcount = n
    sink = 0
    jumps = 0
    instr = 0
    inv1p = 1.0 / (1.0 - p) if p < 1.0 else 0.0
    inv1q = 1.0 / (1.0 - q) if q < 1.0 else 0.0
    capped = np.uint8(0)
    while qcount > 0:
        i = queue[head]
        head += 1
        if head == n:
            head = 0
        qcount -= 1
        in_queue[i] = 0
        while True:
            if instr >= cap:
                capped = np.uint8(1)
                break
            u, s0, s1, s2, s3 = _u01(s0, s1, s2, s3)
            instr += 1
            if u < p:
                if counts[i] == 1:
                    asleep[i] = 1
                    break
                # sleep at a multiply-occupied site: instantly re-woken
            else:
                jumps += 1
                u2 = (u - p) * inv1p
                if u2 < q:
                    sink += 1
                    counts[i] -= 1
                else:
                    j = _site((u2 - q) * inv1q, n)
                    counts[i] -= 1
                    counts[j] += 1
                    asleep[j] = 0
                    if in_queue[j] == 0 and j != i:
                        tail = head + qcount
                        if tail >= n:
                            tail -= n
                        queue[tail] = j
                        qcount += 1
                        in_queue[j] = 1
                break
        if capped:
            break
        if asleep[i] == 0 and counts[i] > 0 and in_queue[i] == 0:
            tail = head + qcount
            if tail >= n:
                tail -= n
            queue[tail] = i
            qcount += 1
            in_queue[i] = 1
    sleeping = 0
    for i in range(n):
        sleeping += asleep[i]
    return sleeping, jumps, instr, sink, capped


def warmup():
    """Trigger JIT compilation of every kernel (cached across sessions)."""
    uniform_block(4, 1)
    bup_hit(4, 0.5, 0.5, 1)
    bup_hit_levels(6, 0.5, 0.5, 1, np.array([5, 3], np.int64), False)
    bup_fixed_energy(6, 0.5, 3, 10_000, 1)
    bup_continuous_count(6, 0.5, 1.0, True, 0, 0.5, 4, 1)
    bup_continuous_full(6, 0.5, 1.0, True, 0, 0.5, 4, 1)
    bup_increment_sums(6, 0.5, 0.2, 16, 1)
    bup_hit_gap_check(6, 0.5, 0.5, 1)
    arw_stabilize_all_ones(6, 0.5, 0.5, 1, 10_000)
