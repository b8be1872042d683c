"""The three retrieval engines, keyed by scheme tag.

het1:  one sub-packet per dedicated server, central download dominates.
het2:  pairwise groups with a split pair cover, balanced downloads (D >= 3).
dapac: the fully-dedicated pairwise baseline, no central download.
"""

from . import dapac, het1, het2

ENGINES = {
    "het1": het1,
    "het2": het2,
    "dapac": dapac,
}


def engine(scheme: str):
    if scheme not in ENGINES:
        raise KeyError(f"unknown scheme tag {scheme!r}")
    return ENGINES[scheme]
