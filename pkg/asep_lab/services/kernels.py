"""
Compiled event loops.

Sites are passed as absolute lattice coordinates; array index = site - lo. Every function here is
also callable from plain Python, which is how the single-event API in dynamics/coupling stays
bit-identical to the chunked loops.
"""
import numba as nb
import numpy as np

ABSENT = np.iinfo(np.int64).min
# replaces u1 == 0 so that -log(u1) stays finite
TINY = 5e-324

# coupled move outcomes
REJECTED = 0
VACANCY_MOVE = 1
LABEL_SWAP = 2
CLASS_SWAP = 3

# audit violation codes
OK = 0
PROJECTION_VIOLATION = 1
IDENTITY_VIOLATION = 2
LABEL_VIOLATION = 3


@nb.njit(cache=True)
def draw_event(u1, u2, u3, n, clock, p):
    """Uniformized clock of total rate n: (event time, slot of the mover, jumps right)"""
    if u1 <= 0.0:
        u1 = TINY
    time = clock - np.log(u1) / n
    k = int(u2 * n)
    if k >= n:
        k = n - 1
    return time, k, u3 < p


@nb.njit(cache=True)
def apply_move(occ, particles, slot, color_pos, track_colors, lo, site, step):
    """Swap rule: the mover takes the target site iff the target color is strictly lower"""
    i = site - lo
    j = i + step
    if j < 0 or j >= occ.size:
        return False
    src = occ[i]
    dst = occ[j]
    if dst >= src:
        return False
    occ[i] = dst
    occ[j] = src
    if track_colors:
        color_pos[src] = j + lo
        if dst > 0:
            color_pos[dst] = i + lo
    if dst == 0:
        k = slot[i]
        particles[k] = j + lo
        slot[j] = k
        slot[i] = -1
    return True


@nb.njit(cache=True)
def advance(occ, particles, slot, color_pos, track_colors, lo, p, clock, t_end, uniforms,
            record, out_time, out_site, out_step, out_accepted):
    """
    Run events from a block of uniforms (three per event) until the block runs out or the next
    event would land after t_end. The overshooting event still consumes its three uniforms.
    """
    n = particles.size
    used = 0
    events = 0
    accepted = 0
    finished = False
    for e in range(uniforms.size // 3):
        time, k, right = draw_event(uniforms[3 * e], uniforms[3 * e + 1], uniforms[3 * e + 2], n, clock, p)
        used += 3
        if time > t_end:
            finished = True
            break
        site = particles[k]
        step = 1 if right else -1
        ok = apply_move(occ, particles, slot, color_pos, track_colors, lo, site, step)
        clock = time
        if record:
            out_time[events] = time
            out_site[events] = site
            out_step[events] = step
            out_accepted[events] = ok
        events += 1
        if ok:
            accepted += 1
    return clock, used, events, accepted, finished


@nb.njit(cache=True)
def exchange(occ, particles, slot, ident, ident_pos, lo, i, j):
    """Exchange the contents (color and identity) of array slots i and j, no rule applied"""
    a = occ[i]
    b = occ[j]
    occ[i] = b
    occ[j] = a
    ia = ident[i]
    ib = ident[j]
    ident[i] = ib
    ident[j] = ia
    if ia > 0:
        ident_pos[ia] = j + lo
    if ib > 0:
        ident_pos[ib] = i + lo
    if a > 0 and b == 0:
        k = slot[i]
        particles[k] = j + lo
        slot[j] = k
        slot[i] = -1
    elif a == 0 and b > 0:
        k = slot[j]
        particles[k] = i + lo
        slot[i] = k
        slot[j] = -1


@nb.njit(cache=True)
def coupled_move(occ_c, part_c, slot_c, color_pos, occ_2, part_2, slot_2, ident, ident_pos,
                 f, L, lo, site, step):
    """
    Apply one colored event and drive the two-species system through the coupling status f
    (color -> label id, ids 1..L+1 are second class).
    """
    i = site - lo
    j = i + step
    if j < 0 or j >= occ_c.size:
        return REJECTED
    src = occ_c[i]
    dst = occ_c[j]
    if dst >= src:
        return REJECTED
    apply_move(occ_c, part_c, slot_c, color_pos, True, lo, site, step)
    if dst == 0:
        exchange(occ_2, part_2, slot_2, ident, ident_pos, lo, i, j)
        return VACANCY_MOVE
    fr = f[src]
    fs = f[dst]
    if (fr <= L + 1) == (fs <= L + 1):
        f[src] = fs
        f[dst] = fr
        return LABEL_SWAP
    exchange(occ_2, part_2, slot_2, ident, ident_pos, lo, i, j)
    return CLASS_SWAP


@nb.njit(cache=True)
def class_of(color, L):
    if color == 0:
        return 0
    if color <= L + 1:
        return 1
    return 2


@nb.njit(cache=True)
def projection_holds(occ_c, occ_2, L):
    for x in range(occ_c.size):
        if occ_2[x] != class_of(occ_c[x], L):
            return False
    return True


@nb.njit(cache=True)
def site_holds(occ_c, occ_2, ident, f, L, i):
    """Projection and label agreement at one array slot"""
    c = occ_c[i]
    if occ_2[i] != class_of(c, L):
        return False
    if c == 0:
        return ident[i] == 0
    return ident[i] == f[c] and class_of(f[c], L) == occ_2[i]


@nb.njit(cache=True)
def labels_hold(occ_c, occ_2, ident, f, L):
    for i in range(occ_c.size):
        if occ_c[i] > 0 and not site_holds(occ_c, occ_2, ident, f, L, i):
            return False
    return True


@nb.njit(cache=True)
def leftmost_of(positions, first, last):
    best = positions[first]
    for c in range(first + 1, last + 1):
        if positions[c] < best:
            best = positions[c]
    return best


@nb.njit(cache=True)
def identity_holds(color_pos, ident_pos, occ_2, L, lo):
    """Leftmost of colors 1..L+1 equals the leftmost second-class particle"""
    colored = leftmost_of(color_pos, 1, L + 1)
    second = leftmost_of(ident_pos, 1, L + 1)
    if occ_2[second - lo] != 1:
        return False
    return colored == second


@nb.njit(cache=True)
def advance_coupled(occ_c, part_c, slot_c, color_pos, occ_2, part_2, slot_2, ident, ident_pos,
                    f, L, lo, p, clock, t_end, uniforms, stride,
                    record, out_time, out_site, out_step, out_outcome):
    """
    Coupled counterpart of advance(). After every event the two touched sites and the leftmost
    identity are checked; every `stride` events (0 disables) the projection and the labels are
    re-checked over the whole window. Stops at the first violation.
    """
    n = part_c.size
    used = 0
    events = 0
    accepted = 0
    label_swaps = 0
    finished = False
    violation = OK
    site = 0
    step = 0
    for e in range(uniforms.size // 3):
        time, k, right = draw_event(uniforms[3 * e], uniforms[3 * e + 1], uniforms[3 * e + 2], n, clock, p)
        used += 3
        if time > t_end:
            finished = True
            break
        site = part_c[k]
        step = 1 if right else -1
        outcome = coupled_move(occ_c, part_c, slot_c, color_pos, occ_2, part_2, slot_2, ident, ident_pos,
                               f, L, lo, site, step)
        clock = time
        if record:
            out_time[events] = time
            out_site[events] = site
            out_step[events] = step
            out_outcome[events] = outcome
        events += 1
        if outcome != REJECTED:
            accepted += 1
            if outcome == LABEL_SWAP:
                label_swaps += 1
            i = site - lo
            if not (site_holds(occ_c, occ_2, ident, f, L, i) and site_holds(occ_c, occ_2, ident, f, L, i + step)):
                violation = LABEL_VIOLATION
        if violation == OK and not identity_holds(color_pos, ident_pos, occ_2, L, lo):
            violation = IDENTITY_VIOLATION
        if violation == OK and stride > 0 and events % stride == 0:
            if not projection_holds(occ_c, occ_2, L):
                violation = PROJECTION_VIOLATION
            elif not labels_hold(occ_c, occ_2, ident, f, L):
                violation = LABEL_VIOLATION
        if violation != OK:
            break
    return clock, used, events, accepted, label_swaps, finished, violation, site, step
