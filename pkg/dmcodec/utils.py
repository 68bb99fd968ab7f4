__all__ = ["log2_int", "frames_for"]


def log2_int(n, need_pow2=True):
    if n == 0:
        return 0
    r = (n - 1).bit_length()
    if need_pow2 and (1 << r) != n:
        raise ValueError("{} is not a power of 2".format(n))
    return r


def frames_for(n_samples, hop):
    """Number of whole frames of ``hop`` samples; the trailing remainder is dropped."""
    if hop <= 0:
        raise ValueError("Hop must be a positive integer, not {!r}".format(hop))
    return n_samples // hop
