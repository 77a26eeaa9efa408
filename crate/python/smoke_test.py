"""Smoke test for the densegen Python module.

Build the extension first, e.g. `maturin develop -m crates/py/Cargo.toml` or
`cargo build -p densegen-py --release`; in the second case this script picks
up the shared library from target/ on its own.
"""

import json
import os
import shutil
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def load():
    try:
        import densegen
        return densegen
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = os.path.join(ROOT, "target", profile, "libdensegen_py.so")
        if os.path.exists(lib):
            tmp = tempfile.mkdtemp()
            shutil.copy(lib, os.path.join(tmp, "densegen.so"))
            sys.path.insert(0, tmp)
            import densegen
            return densegen
    sys.exit("densegen extension not built; run `cargo build -p densegen-py --release`")


def main():
    dg = load()
    q5 = dg.FieldSpec("padic:5:32")
    assert str(q5) == "padic:5:32" and q5.p == 5

    g = dg.Matrix.cartan(q5, 1)
    assert g.classify() == ("hyperbolic", 2)
    assert g.classify_on_tree() == ("hyperbolic", 2)
    assert g.trace().valuation() == -1
    assert dg.Matrix.identity(q5).classify() == ("elliptic", 0)
    assert dg.Matrix.decode(q5, g.encode()).eq_at_precision(g)
    assert (g @ g.inverse()).eq_at_precision(dg.Matrix.identity(q5))

    x = dg.Element.from_int(q5, 10)
    assert x.valuation() == 1
    assert (x * x.inv()).eq_at_precision(dg.Element.from_int(q5, 1))

    h = dg.Matrix.sample_hyperbolic(q5, 1, m=2)
    e = dg.Matrix.sample_elliptic(q5, 2)
    assert h.classify() == ("hyperbolic", 4)
    cert = dg.certify([h, e])
    assert cert.startswith("status certified"), cert
    assert dg.verify([h, e], cert) == []

    t = [dg.Matrix.sample_elliptic(q5, s) for s in (3, 4)] + [h]
    word = dg.normalize(t)
    assert dg.in_normal_form(dg.apply_word(t, word))

    orbits, report = dg.prg_census("psl2", 5, 3)
    assert orbits == 1, report
    try:
        dg.prg_census("sl2", 101, 3)
        raise AssertionError("census over F_101 should be refused")
    except dg.RefusalError:
        pass

    lines = dg.experiment_density(trials=5, seed=7).splitlines()
    summary = json.loads(lines[-1])
    assert summary["trials"] == 5 and summary["certified"] == 5, summary
    assert dg.experiment_density(trials=5, seed=7, threads=1) == dg.experiment_density(trials=5, seed=7, threads=2)

    p = dg.Portrait.canonical_shift(2, 1, 6)
    assert p.classify() == ("hyperbolic", 2)
    assert dg.Portrait.deserialize(p.serialize()).classify() == ("hyperbolic", 2)
    print("python smoke test passed")


if __name__ == "__main__":
    main()
