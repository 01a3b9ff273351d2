"""Graded dyadic tree of cell averages.

Node (l, j) lives at heap index 2**l - 1 + j, so the parent of i is
(i - 1) // 2 and its children are 2i + 1 (left) and 2i + 2 (right).
Status codes: 0 absent, 1 leaf, 2 internal. Virtual nodes are absent nodes
that appear in a flux stencil; they are predicted from their (real) parent
before every divergence evaluation.

Prediction is the quadratic, projection-consistent rule

    left  = u_j - (u_{j+1} - u_{j-1}) / 8
    right = u_j + (u_{j+1} - u_{j-1}) / 8

with constant extrapolation at zero-flux ends and wrap-around for periodic
domains. A detail is stored on the left child; the right child holds its
negation.

Grading: for every real node at level l with parent p, the nodes
p-2 .. p+2 at level l-1 are real. This guarantees that each leaf has two
same-level cousins per side, real or virtual, with real parents.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import _kernels as K
from ._kernels import inline_kernel, kernel
from .fv_kernel import UniformField, light_params
from .model import ProblemSpec, cell_averages

ABSENT, LEAF, INTERNAL = 0, 1, 2


class GradingError(RuntimeError):
    """Raised when the tree violates the grading condition."""


@dataclasses.dataclass(frozen=True)
class TreeNode:
    level: int
    index: int
    value: float
    detail: float
    is_leaf: bool
    is_virtual: bool
    deletable: bool


# ---------------------------------------------------------------------------
# scalar operators

def project(child0, child1):
    """Parent average of two children."""
    return 0.5 * (child0 + child1)


def predict(parent_values):
    """(left, right) children of u_j from (u_{j-1}, u_j, u_{j+1})."""
    um, u0, up = parent_values
    q = 0.125 * (up - um)
    return u0 - q, u0 + q


def level_tolerances(eps_r, L):
    """eps_l = 2**(l - L) eps_R for l = 0..L."""
    return eps_r * 2.0 ** (np.arange(L + 1) - L)


# ---------------------------------------------------------------------------
# compiled helpers

@inline_kernel
def _same_level(n, m, l, periodic):
    base = (1 << l) - 1
    N = 1 << l
    j = n - base + m
    if periodic:
        j = j % N
    elif j < 0 or j >= N:
        return -1
    return base + j


@inline_kernel
def _clamped(n, m, l, periodic):
    base = (1 << l) - 1
    N = 1 << l
    j = n - base + m
    if periodic:
        j = j % N
    elif j < 0:
        j = 0
    elif j >= N:
        j = N - 1
    return base + j


@inline_kernel
def _predict(n, val, lev, periodic):
    p = (n - 1) // 2
    lp = lev[p]
    q = 0.125 * (val[_clamped(p, 1, lp, periodic)] - val[_clamped(p, -1, lp, periodic)])
    if n & 1:
        return val[p] - q
    return val[p] + q


@inline_kernel
def _mark(n, want, bucket, bcount, lev):
    if want[n] == 0:
        want[n] = 1
        l = lev[n]
        bucket[(1 << l) - 1 + bcount[l]] = n
        bcount[l] += 1


@kernel
def _grade(want, bucket, bcount, lev, L, periodic):
    """Close the marked set under siblings and the parent neighbourhood rule."""
    for l in range(L, 0, -1):
        base = (1 << l) - 1
        i = 0
        while i < bcount[l]:
            n = bucket[base + i]
            i += 1
            sib = n + 1 if n & 1 else n - 1
            _mark(sib, want, bucket, bcount, lev)
            p = (n - 1) // 2
            for m in range(-2, 3):
                q = _same_level(p, m, l - 1, periodic)
                if q >= 0:
                    _mark(q, want, bucket, bcount, lev)
    _mark(0, want, bucket, bcount, lev)


@kernel
def _commit(T, nold, L, periodic, do_predict):
    """Turn marks into statuses; predict values of newly created nodes."""
    (status, val, det, want, bucket, bcount, bfs, leaves, internal, virt, vmark,
     fst, fz, fdx, fmod, ldx, meta, lev) = T
    for l in range(1, L + 1):
        base = (1 << l) - 1
        for i in range(bcount[l]):
            n = bucket[base + i]
            if status[n] == ABSENT:
                if do_predict:
                    val[n] = _predict(n, val, lev, periodic)
                    det[n] = 0.0
                status[n] = 3
    for i in range(nold):
        n = bfs[i]
        if want[n] == 0:
            status[n] = ABSENT
    for l in range(L + 1):
        base = (1 << l) - 1
        for i in range(bcount[l]):
            n = bucket[base + i]
            if l < L and want[2 * n + 1] != 0:
                status[n] = INTERNAL
            else:
                status[n] = LEAF
    for l in range(L + 1):
        base = (1 << l) - 1
        for i in range(bcount[l]):
            want[bucket[base + i]] = 0
        bcount[l] = 0


@kernel
def _topology(T, L, periodic, length, light_pos):
    """Leaves in order, internal nodes in preorder, face stencils and virtual nodes.

    Returns 0, or -1 if a stencil node has no real parent (grading violation).
    """
    (status, val, det, want, bucket, bcount, bfs, leaves, internal, virt, vmark,
     fst, fz, fdx, fmod, ldx, meta, lev) = T
    nleaf = 0
    nint = 0
    top = 1
    bfs[0] = 0
    while top > 0:
        top -= 1
        n = bfs[top]
        if status[n] == INTERNAL:
            internal[nint] = n
            nint += 1
            bfs[top] = 2 * n + 2
            bfs[top + 1] = 2 * n + 1
            top += 2
        else:
            leaves[nleaf] = n
            nleaf += 1
    NL = 1 << L
    for i in range(nleaf):
        ldx[i] = length / (1 << lev[leaves[i]])
    for i in range(nleaf + 1):
        fmod[i] = 0
        if (not periodic and (i == 0 or i == nleaf)) or (periodic and i == nleaf):
            for m in range(4):
                fst[4 * i + m] = -1
            fdx[i] = 1.0
            continue
        a = leaves[(i - 1) % nleaf]
        b = leaves[i]
        la = lev[a]
        lb = lev[b]
        ja = a - ((1 << la) - 1)
        if la >= lb:
            lf = la
            k = ja
        else:
            lf = lb
            k = ((ja + 1) << (lb - la)) - 1
        Nf = 1 << lf
        base = Nf - 1
        for m in range(4):
            jj = k - 1 + m
            if periodic:
                jj = jj % Nf
            elif jj < 0:
                jj = 0
            elif jj >= Nf:
                jj = Nf - 1
            fst[4 * i + m] = base + jj
        if periodic:
            fz[2 * i] = 0
            fz[2 * i + 1] = 0
        else:
            fz[2 * i] = 1 if (k < 2 or k > Nf - 3) else 0
            fz[2 * i + 1] = 1 if (k + 1 < 2 or k + 1 > Nf - 3) else 0
        fdx[i] = length / Nf
        if ((k + 1) << (L - lf)) % NL == light_pos:
            fmod[i] = 1
    nv = 0
    err = 0
    for i in range(4 * (nleaf + 1)):
        q = fst[i]
        if q >= 0 and status[q] == ABSENT and vmark[q] == 0:
            if status[(q - 1) // 2] == ABSENT:
                err = -1
            vmark[q] = 1
            virt[nv] = q
            nv += 1
    for i in range(nv):
        vmark[virt[i]] = 0
    meta[0] = nleaf
    meta[1] = nint
    meta[2] = nv
    return err


@kernel
def _refresh_values(T, w, periodic):
    """Write leaf values, project internal nodes, predict virtual nodes."""
    (status, val, det, want, bucket, bcount, bfs, leaves, internal, virt, vmark,
     fst, fz, fdx, fmod, ldx, meta, lev) = T
    nleaf = meta[0]
    for i in range(nleaf):
        val[leaves[i]] = w[i]
    for i in range(meta[1] - 1, -1, -1):
        n = internal[i]
        val[n] = 0.5 * (val[2 * n + 1] + val[2 * n + 2])
    for i in range(meta[2]):
        n = virt[i]
        val[n] = _predict(n, val, lev, periodic)


@inline_kernel
def _face_slopes(val, fst, fz, fdx, i, theta):
    um = val[fst[4 * i]]
    u0 = val[fst[4 * i + 1]]
    u1 = val[fst[4 * i + 2]]
    u2 = val[fst[4 * i + 3]]
    dx = fdx[i]
    s0 = 0.0 if fz[2 * i] else K.limited_slope(um, u0, u1, dx, theta)
    s1 = 0.0 if fz[2 * i + 1] else K.limited_slope(u0, u1, u2, dx, theta)
    return u0, u1, s0, s1, dx


@kernel
def _mr_faces(val, fst, fz, fdx, lo, hi, theta, kd, F):
    """F[i] for faces lo..hi-1 without flux modulation; one loop per kind."""
    if kd[1] == K.A_TABLE:
        for i in range(lo, hi):
            u0 = val[fst[4 * i + 1]]
            u1 = val[fst[4 * i + 2]]
            F[i] = -(K.table_a(u1, kd) - K.table_a(u0, kd)) / fdx[i]
    else:
        for i in range(lo, hi):
            u0 = val[fst[4 * i + 1]]
            u1 = val[fst[4 * i + 2]]
            F[i] = -(K.closed_a(u1, kd) - K.closed_a(u0, kd)) / fdx[i]
    if kd[3] >= 0.0:
        for i in range(lo, hi):
            u0, u1, s0, s1, dx = _face_slopes(val, fst, fz, fdx, i, theta)
            F[i] = K.closed_eo(u0 + 0.5 * dx * s0, u1 - 0.5 * dx * s1, kd) + F[i]
    else:
        for i in range(lo, hi):
            u0, u1, s0, s1, dx = _face_slopes(val, fst, fz, fdx, i, theta)
            F[i] = K.table_eo(u0 + 0.5 * dx * s0, u1 - 0.5 * dx * s1, kd) + F[i]


@kernel
def mr_divergence(T, w, t, kd, theta, periodic, has_light, lp, F, D):
    """Leaf divergence; fluxes at level jumps are computed once on the finer level."""
    (status, val, det, want, bucket, bcount, bfs, leaves, internal, virt, vmark,
     fst, fz, fdx, fmod, ldx, meta, lev) = T
    _refresh_values(T, w, periodic)
    nleaf = meta[0]
    if periodic:
        _mr_faces(val, fst, fz, fdx, 0, nleaf, theta, kd, F)
        F[nleaf] = F[0]
    else:
        _mr_faces(val, fst, fz, fdx, 1, nleaf, theta, kd, F)
        F[0] = 0.0
        F[nleaf] = 0.0
    if has_light:
        S = K.light_factor(t, lp)
        if S != 1.0:
            dm = S if lp[3] > 0.5 else 1.0
            for i in range(nleaf):
                if fmod[i]:
                    u0, u1, s0, s1, dx = _face_slopes(val, fst, fz, fdx, i, theta)
                    F[i] = K.face_flux(u0, u1, s0, s1, K.integrated_diffusion_eval(u0, kd),
                                       K.integrated_diffusion_eval(u1, kd), dx, kd, S, dm)
            if periodic:
                F[nleaf] = F[0]
    for i in range(nleaf):
        D[i] = -(F[i + 1] - F[i]) / ldx[i]


@kernel
def mr_update(T, w, eps, L, periodic, length, light_pos):
    """Re-project, recompute details, coarsen/refine, re-grade and rebuild topology."""
    (status, val, det, want, bucket, bcount, bfs, leaves, internal, virt, vmark,
     fst, fz, fdx, fmod, ldx, meta, lev) = T
    for i in range(meta[0]):
        val[leaves[i]] = w[i]
    nb = 1
    bfs[0] = 0
    h = 0
    while h < nb:
        n = bfs[h]
        h += 1
        if status[n] == INTERNAL:
            bfs[nb] = 2 * n + 1
            bfs[nb + 1] = 2 * n + 2
            nb += 2
    for i in range(nb - 1, -1, -1):
        n = bfs[i]
        if status[n] == INTERNAL:
            val[n] = 0.5 * (val[2 * n + 1] + val[2 * n + 2])
    for i in range(1, nb):
        n = bfs[i]
        if n & 1:
            d = val[n] - _predict(n, val, lev, periodic)
            det[n] = d
            det[n + 1] = -d
    _mark(0, want, bucket, bcount, lev)
    for i in range(1, nb):
        n = bfs[i]
        l = lev[n]
        sig = abs(det[n]) >= eps[l]
        if n & 1:
            p = (n - 1) // 2
            psig = p == 0 or abs(det[p]) >= eps[l - 1]
            leaf_pair = status[n] == LEAF and status[n + 1] == LEAF
            if sig or psig or not leaf_pair:
                _mark(n, want, bucket, bcount, lev)
                _mark(n + 1, want, bucket, bcount, lev)
        if status[n] == LEAF and l < L and sig:
            _mark(2 * n + 1, want, bucket, bcount, lev)
            _mark(2 * n + 2, want, bucket, bcount, lev)
    _grade(want, bucket, bcount, lev, L, periodic)
    _commit(T, nb, L, periodic, True)
    return _topology(T, L, periodic, length, light_pos)


@kernel
def mr_build(T, eps, L, periodic, length, light_pos, split_top_down):
    """Initial tree from exact values and details stored in T.

    With ``split_top_down`` a node is split when its own detail is significant,
    starting from the root's children. Otherwise every significant node is
    kept (plain thresholding). Both are graded afterwards.
    """
    (status, val, det, want, bucket, bcount, bfs, leaves, internal, virt, vmark,
     fst, fz, fdx, fmod, ldx, meta, lev) = T
    status[:] = ABSENT
    _mark(0, want, bucket, bcount, lev)
    _mark(1, want, bucket, bcount, lev)
    _mark(2, want, bucket, bcount, lev)
    if split_top_down:
        for l in range(1, L):
            base = (1 << l) - 1
            i = 0
            while i < bcount[l]:
                n = bucket[base + i]
                i += 1
                if abs(det[n]) >= eps[l]:
                    _mark(2 * n + 1, want, bucket, bcount, lev)
                    _mark(2 * n + 2, want, bucket, bcount, lev)
    else:
        for n in range(3, lev.size):
            if abs(det[n]) >= eps[lev[n]]:
                _mark(n, want, bucket, bcount, lev)
    _grade(want, bucket, bcount, lev, L, periodic)
    _commit(T, 0, L, periodic, False)
    return _topology(T, L, periodic, length, light_pos)


@kernel
def grading_violations(status, lev, L, periodic):
    """Number of real nodes whose sibling or parent neighbourhood is missing."""
    bad = 0
    for n in range(1, status.size):
        if status[n] == ABSENT:
            continue
        sib = n + 1 if n & 1 else n - 1
        if status[sib] == ABSENT:
            bad += 1
            continue
        p = (n - 1) // 2
        if status[p] != INTERNAL:
            bad += 1
            continue
        l = lev[n]
        for m in range(-2, 3):
            q = _same_level(p, m, l - 1, periodic)
            if q >= 0 and status[q] == ABSENT:
                bad += 1
                break
    return bad


# ---------------------------------------------------------------------------
# numpy transforms on full heaps

def _slice(l):
    return slice(2 ** l - 1, 2 ** (l + 1) - 1)


def _neighbours(par, periodic):
    if periodic:
        return np.roll(par, 1), np.roll(par, -1)
    um = np.concatenate([par[:1], par[:-1]])
    up = np.concatenate([par[1:], par[-1:]])
    return um, up


def heap_values(finest, L):
    """All-level averages from level-L averages by repeated projection."""
    val = np.empty(2 ** (L + 1) - 1)
    val[_slice(L)] = finest
    for l in range(L - 1, -1, -1):
        child = val[_slice(l + 1)]
        val[_slice(l)] = 0.5 * (child[0::2] + child[1::2])
    return val


def heap_details(val, L, periodic):
    det = np.zeros_like(val)
    for l in range(L):
        par = val[_slice(l)]
        um, up = _neighbours(par, periodic)
        d = val[_slice(l + 1)][0::2] - (par - 0.125 * (up - um))
        lev = det[_slice(l + 1)]
        lev[0::2] = d
        lev[1::2] = -d
    return det


# ---------------------------------------------------------------------------
# the tree

class MrTree:
    """Graded tree with flat heap storage and compiled traversal."""

    def __init__(self, L, domain, periodic, eps_levels=None, light_pos=-1):
        if not 1 <= L <= 20:
            raise ValueError("L must lie in [1, 20]")
        self.L = int(L)
        self.domain = (float(domain[0]), float(domain[1]))
        self.periodic = bool(periodic)
        self.light_pos = int(light_pos)
        self.eps_levels = np.zeros(L + 1) if eps_levels is None else np.asarray(eps_levels, dtype=float)
        M = 2 ** (L + 1) - 1
        N = 2 ** L
        self.lev = np.repeat(np.arange(L + 1, dtype=np.int8), 2 ** np.arange(L + 1))
        self.status = np.zeros(M, dtype=np.int8)
        self.val = np.zeros(M)
        self.det = np.zeros(M)
        self._want = np.zeros(M, dtype=np.uint8)
        self._bucket = np.zeros(M, dtype=np.int64)
        self._bcount = np.zeros(L + 1, dtype=np.int64)
        self._bfs = np.zeros(M + 2, dtype=np.int64)
        self._leaves = np.zeros(N, dtype=np.int64)
        self._internal = np.zeros(N, dtype=np.int64)
        self._virt = np.zeros(M, dtype=np.int64)
        self._vmark = np.zeros(M, dtype=np.uint8)
        self._fst = np.zeros(4 * (N + 1), dtype=np.int64)
        self._fz = np.zeros(2 * (N + 1), dtype=np.uint8)
        self._fdx = np.ones(N + 1)
        self._fmod = np.zeros(N + 1, dtype=np.uint8)
        self._ldx = np.zeros(N)
        self._meta = np.zeros(8, dtype=np.int64)

    @property
    def T(self):
        return (self.status, self.val, self.det, self._want, self._bucket, self._bcount,
                self._bfs, self._leaves, self._internal, self._virt, self._vmark,
                self._fst, self._fz, self._fdx, self._fmod, self._ldx, self._meta, self.lev)

    @property
    def length(self):
        return self.domain[1] - self.domain[0]

    @property
    def n_finest(self):
        return 2 ** self.L

    # -- construction ------------------------------------------------------

    @classmethod
    def _from_finest(cls, finest, L, domain, periodic, eps_levels, light_pos):
        tree = cls(L, domain, periodic, eps_levels, light_pos)
        tree.val[:] = heap_values(np.asarray(finest, dtype=float), L)
        tree.det[:] = heap_details(tree.val, L, periodic)
        return tree

    def _check(self, err):
        if err != 0:
            raise GradingError("flux stencil node without a real parent")

    def _finish_full(self):
        self.status[:] = INTERNAL
        self.status[_slice(self.L)] = LEAF
        self._check(_topology(self.T, self.L, self.periodic, self.length, self.light_pos))

    # -- views -------------------------------------------------------------

    @property
    def n_leaves(self):
        return int(self._meta[0])

    @property
    def n_virtual(self):
        return int(self._meta[2])

    @property
    def leaf_ids(self):
        return self._leaves[:self.n_leaves]

    @property
    def virtual_ids(self):
        return self._virt[:self.n_virtual]

    def leaf_levels(self):
        return self.lev[self.leaf_ids].astype(np.int64)

    def leaf_indices(self):
        ids = self.leaf_ids
        return ids - (2 ** self.lev[ids].astype(np.int64) - 1)

    def leaf_values(self):
        return self.val[self.leaf_ids].copy()

    def set_leaf_values(self, w):
        self.val[self.leaf_ids] = w

    def leaf_dx(self):
        return self._ldx[:self.n_leaves].copy()

    def leaf_centers(self):
        return self.domain[0] + (self.leaf_indices() + 0.5) * self.leaf_dx()

    def mass(self):
        return float(np.dot(self.leaf_values(), self._ldx[:self.n_leaves]))

    def node(self, l, j):
        n = 2 ** l - 1 + j
        virtual = n in set(self.virtual_ids.tolist())
        st = self.status[n]
        if st == ABSENT and not virtual:
            raise KeyError((l, j))
        detail = float(self.det[n]) if l > 0 and st != ABSENT else 0.0
        deletable = l > 0 and abs(detail) < self.eps_levels[l]
        return TreeNode(l, j, float(self.val[n]), detail, st == LEAF, virtual, bool(deletable))

    @property
    def nodes(self):
        out = {}
        real = np.nonzero(self.status != ABSENT)[0]
        for n in np.concatenate([real, self.virtual_ids]):
            l = int(self.lev[n])
            j = int(n - (2 ** l - 1))
            out[(l, j)] = self.node(l, j)
        return out

    def copy(self):
        other = MrTree(self.L, self.domain, self.periodic, self.eps_levels.copy(), self.light_pos)
        for name, value in vars(self).items():
            if isinstance(value, np.ndarray):
                setattr(other, name, value.copy())
        return other

    # -- operations --------------------------------------------------------

    def refresh(self):
        """Project internal nodes and predict virtual ones from current leaves."""
        _refresh_values(self.T, self.leaf_values(), self.periodic)

    def update(self, eps_levels=None):
        if eps_levels is not None:
            self.eps_levels = np.asarray(eps_levels, dtype=float)
        self._check(mr_update(self.T, self.leaf_values(), self.eps_levels, self.L,
                              self.periodic, self.length, self.light_pos))
        return self

    def grading_ok(self):
        return grading_violations(self.status, self.lev, self.L, self.periodic) == 0

    def compression_rate(self):
        return compression_rate(self)

    def divergence(self, spec: ProblemSpec, t=0.0, theta=0.5):
        D = np.empty(self.n_leaves)
        F = np.empty(self.n_leaves + 1)
        mr_divergence(self.T, self.leaf_values(), float(t), spec.kernel, float(theta), self.periodic,
                      spec.flux_modulator is not None, light_params(spec), F, D)
        return D

    def to_field(self):
        return decode(self)

    def leaf_rows(self):
        """(level, index, center_x, dx, value) per leaf."""
        return np.column_stack([self.leaf_levels(), self.leaf_indices(), self.leaf_centers(),
                                self.leaf_dx(), self.leaf_values()])


def light_position(spec: ProblemSpec, L):
    from .fv_kernel import light_face_index
    return light_face_index(spec, L)


def build_initial_tree(spec: ProblemSpec, L, eps_r, top_down=False):
    """Initial graded tree from the exact level-L averages of the datum.

    By default every node with a significant detail is kept together with
    its ancestors. ``top_down=True`` instead splits from the root only while
    the detail of the node being split is significant, which misses fine
    structure hidden below a vanishing coarse detail.
    """
    finest = cell_averages(spec, 2 ** L)
    tree = MrTree._from_finest(finest, L, spec.domain, spec.periodic,
                               level_tolerances(eps_r, L), light_position(spec, L))
    tree._check(mr_build(tree.T, tree.eps_levels, L, tree.periodic, tree.length, tree.light_pos,
                         bool(top_down)))
    return tree


def encode(field: UniformField, periodic=False, light_pos=-1) -> MrTree:
    """Full tree holding every level's averages and details."""
    tree = MrTree._from_finest(field.values, field.level, field.domain, periodic, None, light_pos)
    tree._finish_full()
    return tree


def threshold(tree: MrTree, eps_r) -> MrTree:
    """Keep nodes with significant details plus what grading requires."""
    full = decode(tree).values
    out = MrTree._from_finest(full, tree.L, tree.domain, tree.periodic,
                              level_tolerances(eps_r, tree.L), tree.light_pos)
    out._check(mr_build(out.T, out.eps_levels, out.L, out.periodic, out.length, out.light_pos, False))
    return out


def decode(tree: MrTree) -> UniformField:
    """Level-L field by top-down prediction plus stored details of real nodes."""
    if not tree.grading_ok():
        raise GradingError("cannot decode an ungraded tree")
    u = tree.val[:1].copy()
    for l in range(tree.L):
        um, up = _neighbours(u, tree.periodic)
        q = 0.125 * (up - um)
        child = np.empty(2 * u.size)
        child[0::2] = u - q
        child[1::2] = u + q
        sl = _slice(l + 1)
        real = tree.status[sl] != ABSENT
        child[real] += tree.det[sl][real]
        u = child
    return UniformField(u, tree.L, tree.domain)


def detail(tree: MrTree, l, j):
    """Stored detail of node (l, j); the root has none."""
    if l == 0:
        raise ValueError("the root has no detail")
    n = 2 ** l - 1 + j
    if tree.status[n] == ABSENT:
        raise KeyError((l, j))
    return float(tree.det[n])


def update_tree(tree: MrTree, epsilon_levels=None) -> MrTree:
    return tree.update(epsilon_levels)


def leaf_divergence(tree: MrTree, spec: ProblemSpec, t=0.0, theta=0.5):
    """Map (l, j) -> divergence for every leaf."""
    D = tree.divergence(spec, t, theta)
    return {(int(l), int(j)): float(d) for l, j, d in zip(tree.leaf_levels(), tree.leaf_indices(), D)}


def compression_rate(tree: MrTree):
    """mu = N_L / (N_L / 2**L + number of leaves)."""
    N = 2 ** tree.L
    return N / (N / 2 ** tree.L + tree.n_leaves)


def speedup(cpu_fv, cpu_mr):
    return cpu_fv / cpu_mr
