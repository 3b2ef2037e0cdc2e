import numpy as np

from utils.errors import MeshTooCoarseError, RankBoundError, StageError
from .band import glue, pieces, soft_rank_field, transition_zones
from .local import check_chains, check_field_bounds, extend_local


def extend_envelopes(a, f, g, shells=None, rng=None, T=None, strict=True):
    """Extension b of a from Y to the whole complex with g <= rank(b) <= f.

    Grows from Y: the local extension near Y, a continuous background squeezed
    between the envelopes far from it, and on every piece of the transition zone a
    path inside the tightest band the envelopes allow on that piece.
    """
    K = a.space
    check_chains(f, g, K)
    n = a.n
    fv, gv = f.evaluate(), g.evaluate()
    upper = np.minimum(fv, n)
    slack = upper - gv
    short = np.flatnonzero(slack < 4 * K.dim)
    if len(short):
        x = int(short[0])
        raise ValueError("bounds at point %d leave slack %d < 4*dim = %d"
                         % (x, slack[x], 4 * K.dim))
    check_field_bounds(a, fv, gv, 'restricted field')

    points = K.sample_points
    Y = a.support
    if not len(Y):
        b = soft_rank_field(K, points, gv, upper, n, rng)
        check_field_bounds(b, fv, gv, 'envelope extension')
        return b

    U, local = extend_local(a, f, g, shells, None, strict)
    V, Z, far = transition_zones(K, Y, U.vertices, points)
    lower, top = gv.copy(), upper.copy()
    bands = []
    for piece in pieces(K, Z):
        l, k = int(gv[piece].max()), int(upper[piece].min())
        if k - l < 4 * K.dim:
            x = int(piece[np.argmax(gv[piece])])
            raise StageError("transition zone around point %d leaves the band [%d, %d]"
                             % (x, l, k), stage='transition', point=x)
        lower[piece], top[piece] = l, k
        bands.append((piece, l, k))
    rest = np.union1d(Z, far)
    background = soft_rank_field(K, rest, lower[rest], top[rest], n, rng)
    try:
        b = glue(local, background, (V, Z, far), bands, T, strict)
    except (MeshTooCoarseError, RankBoundError) as e:
        raise StageError("transition from the local extension failed: %s" % e,
                         stage='transition', point=getattr(e, 'point', None))
    check_field_bounds(b, fv, gv, 'envelope extension')
    return b
