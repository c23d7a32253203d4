"""Reversible shift-and-add colour transform between RGGB cells and planes.

Per 2x2 cell (R, G1, G2, B)::

    Dg = G1 - G2
    Gm = G2 + (Dg >> 1)
    Y  = Gm
    Cb = B - Gm + 128
    Cr = R - Gm + 128

The green pair is a lifting step, so the map is exactly invertible on
integers. Only ``+``, ``-`` and arithmetic shifts appear in the two
transform functions below.
"""

from __future__ import annotations

import numpy as np

from .frame import BayerFrame, PlaneSet

CHROMA_OFFSET = 128


def forward_rct(frame: BayerFrame) -> PlaneSet:
    s = frame.samples.astype(np.int16)
    r = s[0::2, 0::2]
    g1 = s[0::2, 1::2]
    g2 = s[1::2, 0::2]
    b = s[1::2, 1::2]
    dg = g1 - g2
    gm = g2 + (dg >> 1)
    cb = b - gm + CHROMA_OFFSET
    cr = r - gm + CHROMA_OFFSET
    return PlaneSet(gm, dg, cb, cr, frame.orig_width, frame.orig_height)


def _inverse_cells(y, dg, cb, cr):
    gm = y
    g2 = gm - (dg >> 1)
    g1 = g2 + dg
    b = cb - CHROMA_OFFSET + gm
    r = cr - CHROMA_OFFSET + gm
    return r, g1, g2, b


def inverse_rct_counted(planes: PlaneSet) -> tuple[BayerFrame, int]:
    """Invert :func:`forward_rct`; also return how many samples were clamped.

    Clamping to [0, 255] can only trigger after lossy coefficient
    reconstruction.
    """
    y, dg, cb, cr = (p.astype(np.int32) for p in planes.planes())
    h, w = y.shape
    out = np.empty((h << 1, w << 1), dtype=np.int32)
    r, g1, g2, b = _inverse_cells(y, dg, cb, cr)
    out[0::2, 0::2] = r
    out[0::2, 1::2] = g1
    out[1::2, 0::2] = g2
    out[1::2, 1::2] = b
    clamped = int(np.count_nonzero((out < 0) | (out > 255)))
    np.clip(out, 0, 255, out=out)
    return BayerFrame(out.astype(np.uint8), planes.orig_width, planes.orig_height), clamped


def inverse_rct(planes: PlaneSet) -> BayerFrame:
    return inverse_rct_counted(planes)[0]
