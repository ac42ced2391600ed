"""Print SnapPy reference values for Dehn fillings of 5_2.

SnapPy's 5_2 is the mirror image of the orientation used by knotpot, so the
knotpot slope p/q is filled as (-p, q) here and SnapPy's Chern-Simons value
has the opposite sign.

    pip install snappy
    python scripts/snappy_reference.py 7/1 -7/1 3/2
"""
import sys

import snappy


def main(slopes):
    for s in slopes:
        p, _, q = s.partition("/")
        p, q = int(p), int(q or 1)
        m = snappy.ManifoldHP("5_2")
        # the filled CS value is derived from the cusped one
        m.chern_simons()
        m.dehn_fill((-p, q))
        vol = m.volume()
        cs = m.chern_simons()
        core = m.cusp_info()[0]["core_length"]
        print(f"{p}/{q}: volume {vol} cs {cs} core {core}")


if __name__ == "__main__":
    main(sys.argv[1:] or ["7/1", "-7/1", "8/1", "16/1", "9/1", "3/2", "5/3", "-4/3"])
