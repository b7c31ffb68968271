"""Collocation discretisation of the nonlocal operators on radial grids.

Grid functions are extended by a C^1 cubic Hermite interpolant whose node
slopes are three-point finite differences, so every sampled value
``u(rho)`` is a fixed linear combination of nodal values.  Combined with the
quadrature layouts this turns each operator into a stack of sparse
second-difference functionals; linear operators collapse to one matrix and
the extremal / Isaacs operators select weights row by row (policy iteration).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .kernels import Explicit, Extremal, FractionalLaplacian, IsaacsFamily
from .quadrature import FieldGeometry, QuadratureConfig, build_layout

__all__ = ["HermiteSpace", "DiscreteOperator", "DEFAULT_DISCRETE_CFG"]

DEFAULT_DISCRETE_CFG = QuadratureConfig(n_angular=8, panels_per_decade=4, gauss_order=6, kink_levels=3)


def _three_point(x0, x1, x2, at):
    """Weights of the quadratic-interpolant derivative at ``x_at``."""
    xs = (x0, x1, x2)
    xa = xs[at]
    w = []
    for j in range(3):
        others = [xs[k] for k in range(3) if k != j]
        den = (xs[j] - others[0]) * (xs[j] - others[1])
        w.append(((xa - others[0]) + (xa - others[1])) / den)
    return w


class HermiteSpace:
    """C^1 piecewise cubic functions on ``nodes``, zero beyond the last node.

    ``breaks`` are interior nodes where the slope may jump (domain
    boundaries); one-sided slopes are used on each side of them.
    """

    def __init__(self, nodes, breaks=()):
        x = np.asarray(nodes, dtype=float)
        if x[0] != 0.0 or np.any(np.diff(x) <= 0):
            raise ValueError("nodes must start at 0 and increase")
        self.x = x
        n = len(x)
        self.n = n
        bset = set()
        for b in breaks:
            k = int(np.argmin(np.abs(x - b)))
            if abs(x[k] - b) > 1e-12 * max(1.0, b):
                raise ValueError(f"break {b} is not a node")
            bset.add(k)
        self.break_idx = sorted(bset)
        Dl = sparse.lil_matrix((n, n))
        Dr = sparse.lil_matrix((n, n))
        for i in range(n):
            for D, side in ((Dl, "left"), (Dr, "right")):
                if i == 0:
                    continue  # even extension: zero slope at the origin
                if i == n - 1 and side == "right":
                    continue  # unused (zero beyond)
                if i in bset or i == n - 1:
                    idx = (i - 2, i - 1, i) if side == "left" else (i, i + 1, i + 2)
                    at = 2 if side == "left" else 0
                    if side == "left" and i < 2:
                        idx, at = (i - 1, i, i + 1), 1
                else:
                    idx, at = (i - 1, i, i + 1), 1
                w = _three_point(*(x[j] for j in idx), at)
                for j, wj in zip(idx, w):
                    D[i, j] = wj
        self.D_left = Dl.tocsr()
        self.D_right = Dr.tocsr()
        # slope for first-order terms: the average of both sides at breaks
        self.D_central = (0.5 * (Dl + Dr)).tocsr()
        self.D_central[n - 1] = self.D_left[n - 1]

    @property
    def r_max(self) -> float:
        return float(self.x[-1])

    def spacing(self, r: float) -> float:
        x = self.x
        k = int(np.clip(np.searchsorted(x, r), 1, len(x) - 1))
        h = x[k] - x[k - 1]
        if k + 1 < len(x):
            h = min(h, x[k + 1] - x[k])
        return float(h)

    def matrix(self, pts) -> sparse.csr_matrix:
        """Sparse map from nodal values to interpolant values at ``pts``."""
        a = np.abs(np.asarray(pts, dtype=float).ravel())
        x, n = self.x, self.n
        m = len(a)
        inside = a <= x[-1]
        k = np.clip(np.searchsorted(x, a, side="right") - 1, 0, n - 2)
        h = x[k + 1] - x[k]
        t = (a - x[k]) / h
        t2, t3 = t * t, t * t * t
        h00 = 2 * t3 - 3 * t2 + 1
        h10 = (t3 - 2 * t2 + t) * h
        h01 = -2 * t3 + 3 * t2
        h11 = (t3 - t2) * h
        rows = np.arange(m)
        zero = ~inside
        for arr in (h00, h10, h01, h11):
            arr[zero] = 0.0
        Pv = sparse.csr_matrix(
            (np.concatenate([h00, h01]), (np.concatenate([rows, rows]), np.concatenate([k, k + 1]))), shape=(m, n)
        )
        S0 = sparse.csr_matrix((h10, (rows, k)), shape=(m, n))
        S1 = sparse.csr_matrix((h11, (rows, k + 1)), shape=(m, n))
        return (Pv + S0 @ self.D_right + S1 @ self.D_left).tocsr()

    def evaluate(self, U, pts):
        return self.matrix(pts) @ np.asarray(U, dtype=float)

    def geometry(self, r: float, extra_breaks=()) -> FieldGeometry:
        bps = tuple(sorted({*(float(self.x[i]) for i in self.break_idx), self.r_max, *extra_breaks}))
        return FieldGeometry(breakpoints=bps, support=self.r_max, spacing=self.spacing(r))


@dataclass
class _Stack:
    L: sparse.csr_matrix  # all second-difference functionals, stacked
    w: np.ndarray
    rho: np.ndarray
    cos: np.ndarray
    group: np.ndarray  # collocation index of each functional
    G: sparse.csr_matrix  # (n_colloc, n_rows) indicator


class DiscreteOperator:
    """``F(u) = kernel part + drift u' + m |u'| + c u`` at collocation nodes.

    ``colloc`` indexes the nodes where the equation is imposed.  ``drift`` and
    ``gradient`` are arrays (one entry per collocation node) or ``None``;
    ``c`` likewise.  ``upwind`` selects one-sided first differences for the
    drift instead of the Hermite slopes.
    """

    def __init__(self, space: HermiteSpace, kernel, sign: str, colloc, cfg: QuadratureConfig = DEFAULT_DISCRETE_CFG,
                 drift=None, gradient=None, c=None, upwind: bool = False):
        self.space = space
        self.kernel = kernel
        self.sign = sign
        self.colloc = np.asarray(colloc, dtype=int)
        self.cfg = cfg.check()
        self.N, self.s = kernel.N, kernel.s
        nc = len(self.colloc)
        self.drift = None if drift is None else np.broadcast_to(np.asarray(drift, float), (nc,)).copy()
        self.gradient = None if gradient is None else np.broadcast_to(np.asarray(gradient, float), (nc,)).copy()
        self.c = None if c is None else np.broadcast_to(np.asarray(c, float), (nc,)).copy()
        self.upwind = upwind
        self._stack = self._build()
        self._first = self._first_order_matrix()
        if not isinstance(kernel, (Extremal, IsaacsFamily)):
            m = self._multiplier(kernel)
            self._linear = (self._stack.G @ sparse.diags(self._stack.w * m) @ self._stack.L).toarray()
        else:
            self._linear = None
        if isinstance(kernel, IsaacsFamily):
            self._member_w = [[self._stack.w * self._multiplier(k) for k in row] for row in kernel.rows]

    # -- construction -------------------------------------------------------------
    def _build(self) -> _Stack:
        sp = self.space
        blocks, ws, rhos, coss, groups = [], [], [], [], []
        for gi, i in enumerate(self.colloc):
            r = float(sp.x[i])
            lay = build_layout(r, self.N, self.s, sp.geometry(r), self.cfg)
            if np.any(lay.shift != 0):
                raise RuntimeError("grid layouts must not carry field-dependent constants")
            n = len(lay)
            P = sp.matrix(lay.pts.ravel())
            # row k of the stack = sum_j coef[k, j] * P[3k + j]
            C = sparse.csr_matrix(
                (lay.coef.ravel(), (np.repeat(np.arange(n), 3), np.arange(3 * n))), shape=(n, 3 * n)
            )
            blocks.append(C @ P)
            ws.append(lay.w)
            rhos.append(lay.rho)
            coss.append(lay.cos)
            groups.append(np.full(n, gi))
        L = sparse.vstack(blocks).tocsr()
        L.sum_duplicates()
        group = np.concatenate(groups)
        nr = len(group)
        G = sparse.csr_matrix((np.ones(nr), (group, np.arange(nr))), shape=(len(self.colloc), nr))
        return _Stack(L, np.concatenate(ws), np.concatenate(rhos), np.concatenate(coss), group, G)

    def _multiplier(self, k) -> np.ndarray:
        st = self._stack
        if isinstance(k, FractionalLaplacian):
            return np.full(len(st.w), k.constant)
        if isinstance(k, Explicit):
            cv = k.constant_value
            if cv is not None:
                return np.full(len(st.w), cv)
            return np.broadcast_to(np.asarray(k.multiplier(st.rho, st.cos), float), st.w.shape)
        raise TypeError(type(k).__name__)

    def _first_order_matrix(self) -> sparse.csr_matrix:
        """Rows of the slope used at collocation nodes."""
        sp = self.space
        if not self.upwind:
            return sp.D_central[self.colloc]
        x, n = sp.x, sp.n
        rows, cols, vals = [], [], []
        for gi, i in enumerate(self.colloc):
            if i == 0:
                continue
            # forward difference: monotone for outward drifts in the -F form
            j = min(i + 1, n - 1)
            if j == i:
                j, i0 = i, i - 1
                h = x[j] - x[i0]
                rows += [gi, gi]; cols += [j, i0]; vals += [1 / h, -1 / h]
            else:
                h = x[j] - x[i]
                rows += [gi, gi]; cols += [j, i]; vals += [1 / h, -1 / h]
        return sparse.csr_matrix((vals, (rows, cols)), shape=(len(self.colloc), n))

    # -- evaluation ------------------------------------------------------------------
    @property
    def n_functionals(self) -> int:
        return self._stack.L.shape[0]

    def deltas(self, U) -> np.ndarray:
        return self._stack.L @ np.asarray(U, float)

    def _kernel_weights(self, U):
        """Per-functional weights of the kernel part for the policy selected by ``U``."""
        st = self._stack
        k = self.kernel
        if isinstance(k, Extremal):
            d = self.deltas(U)
            b = k.bounds
            hi, lo = (b.Gamma, b.gamma) if self.sign == "plus" else (b.gamma, b.Gamma)
            return st.w * np.where(d > 0, hi, lo)
        if isinstance(k, IsaacsFamily):
            d = self.deltas(U)
            nc = len(self.colloc)
            best_rows = []
            for ri, row in enumerate(self._member_w):
                V = np.vstack([np.bincount(st.group, wm * d, minlength=nc) for wm in row])
                j = np.argmax(V, axis=0)
                best_rows.append((V[j, np.arange(nc)], j))
            R = np.vstack([b[0] for b in best_rows])
            i_sel = np.argmin(R, axis=0)
            j_sel = np.array([best_rows[i_sel[g]][1][g] for g in range(nc)])
            wsel = np.empty_like(st.w)
            for ri, row in enumerate(self._member_w):
                for ji, wm in enumerate(row):
                    mask = (i_sel[st.group] == ri) & (j_sel[st.group] == ji)
                    wsel[mask] = wm[mask]
            return wsel
        return None

    def matrix(self, U=None) -> np.ndarray:
        """Dense collocation matrix of ``F`` for the policy selected by ``U``."""
        st = self._stack
        if self._linear is not None:
            A = self._linear.copy()
        else:
            if U is None:
                raise ValueError("nonlinear operator needs a state to select the policy")
            A = (st.G @ sparse.diags(self._kernel_weights(U)) @ st.L).toarray()
        if self.drift is not None:
            A += (sparse.diags(self.drift) @ self._first).toarray()
        if self.gradient is not None:
            D = self._first if self.upwind else self.space.D_central[self.colloc]
            sgn = np.ones(len(self.colloc)) if U is None else np.sign(D @ np.asarray(U, float))
            sgn[sgn == 0] = 1.0
            A += (sparse.diags(self.gradient * sgn) @ D).toarray()
        if self.c is not None:
            A[np.arange(len(self.colloc)), self.colloc] += self.c
        return A

    def apply(self, U) -> np.ndarray:
        U = np.asarray(U, float)
        return self.matrix(U) @ U
