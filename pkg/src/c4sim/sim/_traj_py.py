"""Pure-numpy trajectory kernel, vectorised across shots.

Each shot carries ``2**n`` qubit amplitudes plus a level tag per site
(0 while the site is in the qubit pair, otherwise the leak/lost level).  A
tagged site keeps all of its amplitude on bit 0 as a placeholder.
"""

from __future__ import annotations

import numpy as np

from c4sim.sim.program import (
    OP_CZ,
    OP_DEPHASE,
    OP_GR,
    OP_JUMP,
    OP_MEASURE,
    OP_PREP,
    OP_RELABEL,
    OP_U1,
    Program,
)


def _first_above(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Index of the first cumulative weight strictly above ``u`` (row-wise)."""
    return (cum <= u[:, None]).sum(axis=1)


def _apply_u1(psi: np.ndarray, tags: np.ndarray, mat: np.ndarray, site: int, n: int) -> None:
    rows = np.nonzero(tags[:, site] == 0)[0]
    if rows.size == 0:
        return
    v = psi[rows].reshape(rows.size, 2**site, 2, 2 ** (n - site - 1))
    v0, v1 = v[:, :, 0, :], v[:, :, 1, :]
    out = np.empty_like(v)
    out[:, :, 0, :] = mat[0, 0] * v0 + mat[0, 1] * v1
    out[:, :, 1, :] = mat[1, 0] * v0 + mat[1, 1] * v1
    psi[rows] = out.reshape(rows.size, -1)


def _normalise(v: np.ndarray) -> np.ndarray:
    norm = np.sqrt(np.sum(np.abs(v) ** 2, axis=tuple(range(1, v.ndim)), keepdims=True))
    return v / np.where(norm > 0, norm, 1.0)


def _jump(psi, tags, table, site, n, u) -> None:
    m = table
    colsum = m.sum(axis=0)
    q_rows = np.nonzero(tags[:, site] == 0)[0]
    l_rows = np.nonzero(tags[:, site] >= 2)[0]
    if q_rows.size:
        v = psi[q_rows].reshape(q_rows.size, 2**site, 2, 2 ** (n - site - 1))
        p0 = np.sum(np.abs(v[:, :, 0, :]) ** 2, axis=(1, 2))
        p1 = np.sum(np.abs(v[:, :, 1, :]) ** 2, axis=(1, 2))
        w = np.concatenate([m[:, 0][None, :] * p0[:, None], m[:, 1][None, :] * p1[:, None]], axis=1)
        k = _first_above(np.cumsum(w, axis=1), u[q_rows])
        new = v.copy()
        no_jump = k >= 10
        if no_jump.any():
            new[no_jump, :, 0, :] *= np.sqrt(max(0.0, 1 - colsum[0]))
            new[no_jump, :, 1, :] *= np.sqrt(max(0.0, 1 - colsum[1]))
        jumped = np.nonzero(~no_jump)[0]
        if jumped.size:
            s = k[jumped] // 5
            d = k[jumped] % 5
            kept = v[jumped, :, :, :][np.arange(jumped.size), :, s, :]
            target = np.where(d < 2, d, 0)
            block = np.zeros_like(v[jumped])
            block[np.arange(jumped.size), :, target, :] = kept
            new[jumped] = block
            leak = d >= 2
            tags[q_rows[jumped[leak]], site] = d[leak]
        psi[q_rows] = _normalise(new).reshape(q_rows.size, -1)
    if l_rows.size:
        src = tags[l_rows, site]
        w = m[:, src].T
        d = _first_above(np.cumsum(w, axis=1), u[l_rows])
        moved = d < 5
        back = moved & (d < 2)
        tags[l_rows[moved & (d >= 2)], site] = d[moved & (d >= 2)]
        if back.any():
            rows = l_rows[back]
            tags[rows, site] = 0
            flip = rows[d[back] == 1]
            if flip.size:
                v = psi[flip].reshape(flip.size, 2**site, 2, 2 ** (n - site - 1))
                v[:, :, 1, :] = v[:, :, 0, :]
                v[:, :, 0, :] = 0
                psi[flip] = v.reshape(flip.size, -1)


def run_shots(prog: Program, uniforms: np.ndarray) -> np.ndarray:
    """Simulate ``len(uniforms)`` shots; returns readout codes ``(shots, n)``."""
    n = prog.n_sites
    n_shots = uniforms.shape[0]
    dim = 2**n
    psi = np.zeros((n_shots, dim), dtype=complex)
    tags = np.zeros((n_shots, n), dtype=np.int64)
    out = np.zeros((n_shots, n), dtype=np.int8)
    weights = 1 << (n - 1 - np.arange(n))
    col = 0
    for i, code in enumerate(prog.codes):
        a, b = int(prog.iargs[i, 0]), int(prog.iargs[i, 1])
        if code == OP_PREP:
            u = uniforms[:, col : col + n]
            col += n
            cum = np.cumsum(prog.prep)
            levels = np.minimum((u[:, :, None] >= cum[None, None, :]).sum(axis=2), 4)
            bits = np.where(levels < 2, levels, 0)
            tags[:] = np.where(levels >= 2, levels, 0)
            psi[:] = 0
            psi[np.arange(n_shots), bits @ weights] = 1.0
        elif code == OP_GR:
            for s in range(n):
                _apply_u1(psi, tags, prog.mats[i], s, n)
        elif code == OP_U1:
            _apply_u1(psi, tags, prog.mats[i], a, n)
        elif code == OP_CZ:
            rows = np.nonzero((tags[:, a] == 0) & (tags[:, b] == 0))[0]
            idx = np.arange(dim)
            both = ((idx >> (n - 1 - a)) & 1) & ((idx >> (n - 1 - b)) & 1)
            psi[np.ix_(rows, np.nonzero(both)[0])] *= -1
        elif code == OP_DEPHASE:
            u = uniforms[:, col]
            col += 1
            rows = np.nonzero((tags[:, a] == 0) & (u < prog.fargs[i, 0]))[0]
            idx = np.arange(dim)
            ones = np.nonzero((idx >> (n - 1 - a)) & 1)[0]
            psi[np.ix_(rows, ones)] *= -1
        elif code == OP_JUMP:
            u = uniforms[:, col]
            col += 1
            _jump(psi, tags, prog.jumps[b], a, n, u)
        elif code == OP_RELABEL:
            perm = prog.perms[a]
            psi = np.ascontiguousarray(
                psi.reshape((n_shots,) + (2,) * n).transpose((0,) + tuple(int(p) + 1 for p in perm)).reshape(n_shots, dim)
            )
            tags = np.ascontiguousarray(tags[:, perm])
        elif code == OP_MEASURE:
            u0 = uniforms[:, col]
            us = uniforms[:, col + 1 : col + 1 + n]
            col += n + 1
            cum = np.cumsum(np.abs(psi) ** 2, axis=1)
            idx = np.minimum(_first_above(cum, u0 * cum[:, -1]), dim - 1)
            bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
            true = np.where(tags == 0, bits, np.where(tags == 2, 0, 1))
            eps0, eps1 = prog.fargs[i, 0], prog.fargs[i, 1]
            read = np.where(true == 0, (us < eps0).astype(np.int8), (us >= eps1).astype(np.int8))
            out[:] = np.where(tags == 4, 2, read)
    return out
