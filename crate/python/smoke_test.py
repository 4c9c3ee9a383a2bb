"""Smoke test for the pydykaf extension. Run after installing the wheel:

    python python/smoke_test.py
"""

import numpy as np

import pydykaf


def close(a, b, tol):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    assert a.shape == b.shape, (a.shape, b.shape)
    err = np.max(np.abs(a - b)) if a.size else 0.0
    assert err <= tol, err


def main():
    rng = np.random.default_rng(0)

    a = rng.standard_normal((2, 3))
    b = rng.standard_normal((3, 2))
    close(pydykaf.kron(a.tolist(), b.tolist()), np.kron(a, b), 1e-14)

    s = rng.standard_normal((5, 5))
    s = s + s.T
    vals, vecs = pydykaf.sym_eig(s.tolist())
    vecs = np.asarray(vecs)
    close(vecs @ np.diag(vals) @ vecs.T, s, 1e-10)
    close(np.sort(vals), np.linalg.eigvalsh(s), 1e-10)

    m = rng.standard_normal((6, 4))
    q, r = pydykaf.qr(m.tolist())
    close(np.asarray(q) @ np.asarray(r), m, 1e-12)

    g = rng.standard_normal((4, 3))
    l, r = pydykaf.init_from_gradient(g.tolist())
    f = np.outer(g.ravel(), g.ravel())
    nl, nr, best = pydykaf.nkp_best(f.tolist(), 4, 3)
    res = np.linalg.norm(f - np.kron(l, r))
    assert abs(res - best) <= 1e-9 * best, (res, best)
    sig = np.linalg.svd(g, compute_uv=False) ** 2
    assert abs(best - np.sqrt(sig.sum() ** 2 - sig[0] ** 2)) <= 1e-9 * best

    rearranged = pydykaf.rearrange(np.kron(a[:, :2], b[:2, :]).tolist(), 2, 2, 2, 2)
    close(rearranged, np.outer(a[:, :2].ravel(), b[:2, :].ravel()), 1e-14)

    pl = np.eye(4) * 2.0
    pr = np.eye(3)
    l1, r1 = pydykaf.kron_proj_split(pl.tolist(), pr.tolist(), g.tolist())
    assert np.allclose(np.asarray(l1), np.asarray(l1).T)

    w = np.zeros((3, 4))
    for kind in ("dykaf", "soap", "shampoo", "adamw"):
        opt = pydykaf.Optimizer(kind, learning_rate=0.01)
        assert opt.kind == kind and opt.learning_rate == 0.01
        w1 = np.asarray(opt.step(w.tolist(), np.ones((3, 4)).tolist()))
        assert np.all(w1 < 0), kind

    x, y = pydykaf.synth_blobs(3, 5, 60, 1)
    assert np.asarray(x).shape == (60, 5) and set(y) <= {0, 1, 2}

    checks = pydykaf.selftest(0)
    assert checks and all(ok for *_, ok in checks), checks

    recs = pydykaf.run_experiment("props", ["trials=5"])
    assert recs and all(r[5] == 1.0 for r in recs if r[3] == "pass")

    try:
        pydykaf.Optimizer("muon")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown optimizer accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
